use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Result};
use nalgebra::DMatrix;
use nearhom_core::averaging::{
    iterate, sample_composable_pairs, CandidateMap, GridSpec, IterationOutcome, IterationSettings, PairSpec,
    PerturbationField, Status, StepMode,
};
use nearhom_core::groupoid::{
    action_groupoid, check_axioms, degenerate_groupoid, mutated_groupoid, twisted_groupoid, AdjointAction, Arrow,
    BasePoint, Cocycle, ComposablePair, ConjugatedAction, GroupAction, GroupoidChart, QuadraticMap, RotationAction,
    TrivialAction,
};
use nearhom_core::haar::{
    arrow_test_basket, check_invariance, direct_haar_system, lemma_haar_system, total_variation, FiberDensity,
    HaarSystem,
};
use nearhom_core::liegroup::{haar_quadrature, AlgebraVector, GroupQuadrature, LieGroup};
use nearhom_core::linearize::{
    bochner_linearize, check_action_axioms, halving_test, induced_action, nonlinearity_halving, representation_check,
    HalvingReport,
};
use nearhom_core::testkit::fit_convergence_order;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ActionConfig, ModeConfig, ScenarioConfig};
use crate::output::{defect_dat, num, order_dat, trace_csv, trace_rows, OutDir, TraceRowOut};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_NOISE_FLOOR: i32 = 2;
pub const EXIT_MAX_ITER: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;
pub const EXIT_CONFIG: i32 = 5;

const HAAR_SEED: u64 = 0x4a5;
const LINEARIZE_SEED: u64 = 0x11e;

pub fn status_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_OK,
        Status::NoiseFloor => EXIT_NOISE_FLOOR,
        Status::MaxIter => EXIT_MAX_ITER,
        Status::Diverged => EXIT_DIVERGED,
    }
}

#[derive(Serialize)]
struct Versions {
    nearhom_core: &'static str,
    nearhom_cli: &'static str,
}

const VERSIONS: Versions = Versions {
    nearhom_core: nearhom_core::VERSION,
    nearhom_cli: env!("CARGO_PKG_VERSION"),
};

struct Scenario<G: LieGroup> {
    group: Arc<G>,
    chart: GroupoidChart<G>,
    haar: HaarSystem<G>,
    pairs: Vec<ComposablePair<G::Point>>,
}

fn group_action<G: LieGroup>(group: &Arc<G>, cfg: &ScenarioConfig) -> Result<Arc<dyn GroupAction<G>>> {
    let inner: Arc<dyn GroupAction<G>> = match &cfg.action {
        ActionConfig::Trivial => Arc::new(TrivialAction { dim: cfg.base_dim }),
        ActionConfig::Linear { weights } => Arc::new(RotationAction::new(group.clone(), cfg.base_dim, weights.clone())?),
        ActionConfig::Adjoint => Arc::new(AdjointAction::new(group.clone())),
    };
    Ok(match &cfg.conjugation {
        None => inner,
        Some(forms) => {
            let d = cfg.base_dim;
            let forms = forms
                .iter()
                .map(|q| DMatrix::from_row_iterator(d, d, q.iter().flatten().copied()))
                .collect();
            Arc::new(ConjugatedAction::new(inner, QuadraticMap::new(forms)?)?)
        }
    })
}

fn untwisted_chart<G: LieGroup>(group: &Arc<G>, cfg: &ScenarioConfig) -> Result<GroupoidChart<G>> {
    if cfg.base_dim == 0 {
        return Ok(degenerate_groupoid(group.clone()));
    }
    Ok(action_groupoid(group.clone(), group_action(group, cfg)?, cfg.radius)?)
}

fn chart<G: LieGroup>(group: &Arc<G>, cfg: &ScenarioConfig) -> Result<GroupoidChart<G>> {
    let base = untwisted_chart(group, cfg)?;
    let Some(twist) = &cfg.twist else {
        return Ok(base);
    };
    let cocycle = Cocycle::new(
        cfg.base_dim,
        group.algebra_dim(),
        twist.linear.iter().map(|v| AlgebraVector::from_slice(v)).collect(),
        twist
            .quadratic
            .iter()
            .map(|t| (t.i, t.j, AlgebraVector::from_slice(&t.coeffs)))
            .collect(),
    )?;
    Ok(twisted_groupoid(&base, cocycle)?)
}

fn quadrature<G: LieGroup>(group: &G, resolution: usize) -> Result<Arc<GroupQuadrature<G::Point>>> {
    Ok(Arc::new(haar_quadrature(group, resolution)?))
}

fn scenario<G: LieGroup>(group: Arc<G>, cfg: &ScenarioConfig) -> Result<Scenario<G>> {
    let chart = chart(&group, cfg)?;
    let haar = direct_haar_system(&chart, quadrature(group.as_ref(), cfg.quadrature_resolution)?);
    let pairs = sample_composable_pairs(
        &chart,
        &PairSpec {
            group_nodes: cfg.pairs.group_nodes,
            base_points: cfg.pairs.base_points,
            seed: cfg.pairs.seed,
        },
    )?;
    Ok(Scenario {
        group,
        chart,
        haar,
        pairs,
    })
}

fn settings(cfg: &ScenarioConfig) -> IterationSettings {
    let mode = match cfg.mode {
        ModeConfig::Nested => StepMode::Nested,
        ModeConfig::Grid { degree, base_points } => StepMode::Grid(GridSpec { degree, base_points }),
    };
    IterationSettings {
        mode,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        admissibility: cfg.admissibility,
        ..Default::default()
    }
}

fn initial_map<G: LieGroup>(s: &Scenario<G>, cfg: &ScenarioConfig, epsilon: f64) -> CandidateMap<G> {
    let field = PerturbationField::random(s.group.as_ref(), cfg.base_dim, s.chart.radius(), cfg.seed);
    CandidateMap::perturbed(&s.chart, field, epsilon)
}

#[derive(Serialize)]
struct OrderFitOut {
    order: f64,
    first: usize,
    last: usize,
    usable_iterations: usize,
    residual: f64,
}

#[derive(Serialize)]
struct RunSummary {
    epsilon: f64,
    status: String,
    cause: Option<String>,
    steps: usize,
    noise_floor: f64,
    initial_defect: f64,
    final_defect: f64,
    final_defect_p95: f64,
    /// `Δ₁ / Δ₀²`.
    contraction: Option<f64>,
    order_fit: Option<OrderFitOut>,
    order_fit_error: Option<String>,
    /// `sup d(φ(g, x₀), g)` over the sampled group nodes.
    fixed_fiber_identity: f64,
    trace: Vec<TraceRowOut>,
}

fn summarize<G: LieGroup>(
    s: &Scenario<G>,
    epsilon: f64,
    outcome: &IterationOutcome<G>,
    out: &OutDir,
) -> Result<RunSummary> {
    let trace = &outcome.trace;
    let defects = trace.defects();
    let (order_fit, order_fit_error) = match fit_convergence_order(trace, trace.noise_floor) {
        Ok(f) => (
            Some(OrderFitOut {
                order: f.order,
                first: f.range.0,
                last: f.range.1,
                usable_iterations: f.range.1 - f.range.0 + 1,
                residual: f.residual,
            }),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    let last = outcome.final_map();
    let origin = s.chart.origin();
    let mut fixed_fiber_identity = 0.0f64;
    for pair in s.pairs.iter().filter(|p| p.q.base == origin) {
        let g = &pair.p.group;
        let d = s.group.distance(&last.eval(&Arrow::new(g.clone(), origin.clone()))?, g)?;
        fixed_fiber_identity = fixed_fiber_identity.max(d);
    }
    let final_row = trace.rows.last().expect("nonempty trace");
    Ok(RunSummary {
        epsilon,
        status: outcome.status.to_string(),
        cause: outcome.cause.clone(),
        steps: outcome.maps.len() - 1,
        noise_floor: trace.noise_floor,
        initial_defect: defects[0],
        final_defect: final_row.defect.sup,
        final_defect_p95: final_row.defect.p95,
        contraction: defects.get(1).map(|d1| d1 / (defects[0] * defects[0])),
        order_fit,
        order_fit_error,
        fixed_fiber_identity,
        trace: trace_rows(trace, out),
    })
}

fn sample_arrows<G: LieGroup>(chart: &GroupoidChart<G>, n: usize, seed: u64) -> Vec<Arrow<G::Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = chart.radius();
    (0..n)
        .map(|_| {
            let g = chart.group().random(&mut rng);
            let x: Vec<f64> = (0..chart.base_dim()).map(|_| rng.random_range(-r..=r)).collect();
            chart.fiber_s_arrow(&BasePoint::from_slice(&x), &g)
        })
        .collect()
}

fn invariance<G: LieGroup>(system: &HaarSystem<G>, arrows: &[Arrow<G::Point>]) -> Result<f64> {
    let basket = arrow_test_basket(system.chart());
    let mut worst = 0.0f64;
    for q in arrows {
        worst = worst.max(check_invariance(system, q, &basket)?);
    }
    Ok(worst)
}

#[derive(Serialize)]
struct HalvingOut {
    radius: f64,
    residual: f64,
    half_residual: f64,
    ratio: f64,
}

impl From<HalvingReport> for HalvingOut {
    fn from(h: HalvingReport) -> Self {
        HalvingOut {
            radius: h.radius,
            residual: h.residual,
            half_residual: h.half_residual,
            ratio: h.ratio,
        }
    }
}

#[derive(Serialize)]
struct LinearizationOut {
    action_composition: f64,
    action_unit: f64,
    action_fixed_point: f64,
    action_axioms: f64,
    max_condition: f64,
    representation_residual: f64,
    /// `|h(g·x) − R(g)h(x)|` after the Bochner chart.
    conjugacy: HalvingOut,
    /// `|g·x − R(g)x|` before it.
    nonlinearity: HalvingOut,
    pass: bool,
}

fn linearization<G: LieGroup>(map: &CandidateMap<G>, cfg: &ScenarioConfig) -> Result<LinearizationOut> {
    let lc = &cfg.linearize;
    if cfg.base_dim == 0 {
        return Err(anyhow!("linearization needs a base of positive dimension"));
    }
    let seed = cfg.seed ^ LINEARIZE_SEED;
    let action = induced_action(map);
    let axioms = check_action_axioms(&action, lc.samples, seed)?;
    let model = bochner_linearize(&action, &haar_quadrature(action.group(), lc.quadrature_resolution)?)?;
    let representation_residual = representation_check(&model, lc.samples, seed)?;
    let conjugacy = halving_test(&model, lc.radius, lc.samples, seed)?;
    let nonlinearity = nonlinearity_halving(&model, lc.radius, lc.samples, seed)?;
    let pass = axioms.max_residual() <= lc.axiom_tol
        && representation_residual <= lc.representation_tol
        && conjugacy.residual <= lc.axiom_tol
        && (nonlinearity.ratio / lc.halving_target - 1.0).abs() <= lc.halving_band;
    Ok(LinearizationOut {
        action_composition: axioms.composition,
        action_unit: axioms.unit,
        action_fixed_point: axioms.fixed_point,
        action_axioms: axioms.max_residual(),
        max_condition: model.max_condition(),
        representation_residual,
        conjugacy: conjugacy.into(),
        nonlinearity: nonlinearity.into(),
        pass,
    })
}

#[derive(Serialize)]
struct RunReport {
    config: ScenarioConfig,
    versions: Versions,
    #[serde(flatten)]
    summary: RunSummary,
    haar_invariance_residual: f64,
    haar_tolerance: f64,
    linearization: Option<LinearizationOut>,
    linearization_error: Option<String>,
    total_ms: f64,
}

fn write_trace_files(out: &OutDir, suffix: &str, summary: &RunSummary) -> Result<()> {
    out.write(&format!("trace{suffix}.csv"), &trace_csv(&summary.trace))?;
    out.write(&format!("defect{suffix}.dat"), &defect_dat(&summary.trace))?;
    if let Some(fit) = &summary.order_fit {
        let defects: Vec<f64> = summary.trace.iter().map(|r| r.defect_sup).collect();
        let fit = nearhom_core::testkit::OrderFit {
            order: fit.order,
            range: (fit.first, fit.last),
            residual: fit.residual,
        };
        out.write(&format!("order_fit{suffix}.dat"), &order_dat(&defects, &fit))?;
    }
    Ok(())
}

pub fn run<G: LieGroup>(group: Arc<G>, cfg: &ScenarioConfig, out: &OutDir) -> Result<i32> {
    let start = Instant::now();
    let s = scenario(group, cfg)?;
    let phi0 = initial_map(&s, cfg, cfg.epsilon);
    let outcome = iterate(&phi0, &s.haar, &s.pairs, &settings(cfg))?;
    let summary = summarize(&s, cfg.epsilon, &outcome, out)?;
    let haar_invariance_residual = invariance(&s.haar, &sample_arrows(&s.chart, cfg.haar.samples, cfg.seed ^ HAAR_SEED))?;
    let (linearization, linearization_error) = if cfg.linearize.enabled {
        match linearization(outcome.final_map(), cfg) {
            Ok(l) => (Some(l), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let mut code = status_code(outcome.status);
    if code == EXIT_OK && (linearization_error.is_some() || linearization.as_ref().is_some_and(|l| !l.pass)) {
        code = EXIT_CHECK_FAILED;
    }
    write_trace_files(out, "", &summary)?;
    let report = RunReport {
        config: cfg.clone(),
        versions: VERSIONS,
        summary,
        haar_invariance_residual,
        haar_tolerance: s.haar.tolerance(),
        linearization,
        linearization_error,
        total_ms: out.wall_ms(start.elapsed().as_secs_f64() * 1e3),
    };
    out.write_json("report.json", &report)?;
    Ok(code)
}

#[derive(Serialize)]
struct AxiomsOut {
    config: ScenarioConfig,
    versions: Versions,
    mutated: bool,
    samples: usize,
    residuals: Vec<(String, f64)>,
    max_residual: f64,
    tol: f64,
    pass: bool,
}

pub fn check_axioms_cmd<G: LieGroup>(group: Arc<G>, cfg: &ScenarioConfig, out: &OutDir) -> Result<i32> {
    let mut c = chart(&group, cfg)?;
    if let Some(v) = &cfg.axioms.mutation {
        c = mutated_groupoid(&c, group.exp(&AlgebraVector::from_slice(v)));
    }
    let report = check_axioms(&c, cfg.axioms.samples, cfg.seed)?;
    let pass = report.passes(cfg.axioms.tol);
    let mut table = String::from("# axiom residual\n");
    for (name, r) in report.entries() {
        table.push_str(&format!("{name} {}\n", num(r)));
    }
    out.write("axioms.dat", &table)?;
    out.write_json(
        "axioms.json",
        &AxiomsOut {
            config: cfg.clone(),
            versions: VERSIONS,
            mutated: cfg.axioms.mutation.is_some(),
            samples: report.samples,
            residuals: report.entries().iter().map(|(n, r)| (n.to_string(), *r)).collect(),
            max_residual: report.max_residual(),
            tol: cfg.axioms.tol,
            pass,
        },
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn reference_density<G: LieGroup>(group: Arc<G>, a: f64, b: f64, c: f64, radius: f64) -> FiberDensity<G::Point> {
    let scale = if radius > 0.0 { 1.0 / (radius * radius) } else { 0.0 };
    FiberDensity::new("reference", move |r: &Arrow<G::Point>| {
        let m = group.to_matrix(&r.group);
        let off = if m.ncols() > 1 { m[(0, 1)].im } else { m[(0, 0)].im };
        1.0 + a * m[(0, 0)].re + b * off + c * scale * r.base.norm().powi(2)
    })
}

#[derive(Serialize)]
struct HaarRow {
    sample: usize,
    direct_invariance: f64,
    lemma_invariance: f64,
    lemma_mass_error: f64,
    total_variation: f64,
}

#[derive(Serialize)]
struct HaarOut {
    config: ScenarioConfig,
    versions: Versions,
    quadrature_nodes: usize,
    quadrature_tolerance: f64,
    direct_invariance: f64,
    direct_mass_error: f64,
    lemma_invariance: f64,
    lemma_mass_error: f64,
    total_variation: f64,
    rows: Vec<HaarRow>,
    pass: bool,
}

pub fn haar_test<G: LieGroup>(group: Arc<G>, cfg: &ScenarioConfig, out: &OutDir) -> Result<i32> {
    let hc = &cfg.haar;
    let c = chart(&group, cfg)?;
    let quad = quadrature(group.as_ref(), hc.resolution)?;
    let direct = direct_haar_system(&c, quad.clone());
    let [a, b, k] = hc.density;
    let mu0 = reference_density(group.clone(), a, b, k, c.radius());
    let nu0 = reference_density(group.clone(), -b, -a, 0.0, c.radius());
    let lemma = lemma_haar_system(&c, mu0, nu0, quad.clone())?;
    let basket = arrow_test_basket(&c);
    let mut rows = Vec::new();
    let mut direct_mass_error = 0.0f64;
    for (i, q) in sample_arrows(&c, hc.samples, cfg.seed ^ HAAR_SEED).iter().enumerate() {
        let y = c.target(q);
        let fiber = lemma.fiber(&y)?;
        direct_mass_error = direct_mass_error.max((direct.fiber(&y)?.mass() - 1.0).abs());
        rows.push(HaarRow {
            sample: i,
            direct_invariance: check_invariance(&direct, q, &basket)?,
            lemma_invariance: check_invariance(&lemma, q, &basket)?,
            lemma_mass_error: (fiber.mass() - 1.0).abs(),
            total_variation: total_variation(&direct, &lemma, &y)?,
        });
    }
    let max = |f: fn(&HaarRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let direct_invariance = max(|r| r.direct_invariance);
    let lemma_invariance = max(|r| r.lemma_invariance);
    let lemma_mass_error = max(|r| r.lemma_mass_error);
    let tv = max(|r| r.total_variation);
    let pass = direct_invariance <= quad.tolerance.max(hc.invariance_tol)
        && direct_mass_error <= hc.mass_tol
        && lemma_mass_error <= hc.mass_tol
        && lemma_invariance <= hc.invariance_tol
        && tv <= hc.tv_tol;
    let mut table = String::from("# sample direct_invariance lemma_invariance total_variation\n");
    for r in &rows {
        table.push_str(&format!(
            "{} {} {} {}\n",
            r.sample,
            num(r.direct_invariance),
            num(r.lemma_invariance),
            num(r.total_variation)
        ));
    }
    out.write("haar.dat", &table)?;
    out.write_json(
        "haar.json",
        &HaarOut {
            config: cfg.clone(),
            versions: VERSIONS,
            quadrature_nodes: quad.len(),
            quadrature_tolerance: quad.tolerance,
            direct_invariance,
            direct_mass_error,
            lemma_invariance,
            lemma_mass_error,
            total_variation: tv,
            rows,
            pass,
        },
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Serialize)]
struct StudyOut {
    config: ScenarioConfig,
    versions: Versions,
    runs: Vec<RunSummary>,
    /// max / min of `Δ₁ / Δ₀²` over the runs.
    contraction_spread: Option<f64>,
}

pub fn convergence_study<G: LieGroup>(group: Arc<G>, cfg: &ScenarioConfig, out: &OutDir) -> Result<i32> {
    if cfg.epsilons.is_empty() {
        return Err(anyhow!("convergence-study needs a nonempty epsilons list"));
    }
    let s = scenario(group, cfg)?;
    let mut runs = Vec::new();
    let mut code = EXIT_OK;
    for (i, &eps) in cfg.epsilons.iter().enumerate() {
        let outcome = iterate(&initial_map(&s, cfg, eps), &s.haar, &s.pairs, &settings(cfg))?;
        code = code.max(status_code(outcome.status));
        let summary = summarize(&s, eps, &outcome, out)?;
        write_trace_files(out, &format!("-{i}"), &summary)?;
        runs.push(summary);
    }
    let constants: Vec<f64> = runs.iter().filter_map(|r| r.contraction).collect();
    let contraction_spread = (constants.len() == runs.len()).then(|| {
        let hi = constants.iter().copied().fold(0.0, f64::max);
        let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    });
    let mut csv = String::from("epsilon,status,steps,defect_0,defect_1,contraction,order,final_defect\n");
    let mut dat = String::from("# epsilon contraction\n");
    for r in &runs {
        let d1 = r.trace.get(1).map(|t| num(t.defect_sup)).unwrap_or_default();
        let c = r.contraction.map(num).unwrap_or_default();
        let o = r.order_fit.as_ref().map(|f| num(f.order)).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{d1},{c},{o},{}\n",
            num(r.epsilon),
            r.status,
            r.steps,
            num(r.initial_defect),
            num(r.final_defect)
        ));
        if let Some(c) = r.contraction {
            dat.push_str(&format!("{} {}\n", num(r.epsilon), num(c)));
        }
    }
    out.write("study.csv", &csv)?;
    out.write("contraction.dat", &dat)?;
    out.write_json(
        "study.json",
        &StudyOut {
            config: cfg.clone(),
            versions: VERSIONS,
            runs,
            contraction_spread,
        },
    )?;
    Ok(code)
}

#[derive(Serialize)]
struct LinearizeOut {
    config: ScenarioConfig,
    versions: Versions,
    #[serde(flatten)]
    summary: RunSummary,
    linearization: LinearizationOut,
}

pub fn linearize_cmd<G: LieGroup>(group: Arc<G>, cfg: &ScenarioConfig, out: &OutDir) -> Result<i32> {
    let s = scenario(group, cfg)?;
    let outcome = iterate(&initial_map(&s, cfg, cfg.epsilon), &s.haar, &s.pairs, &settings(cfg))?;
    let summary = summarize(&s, cfg.epsilon, &outcome, out)?;
    let code = status_code(outcome.status);
    if code != EXIT_OK && code != EXIT_NOISE_FLOOR {
        write_trace_files(out, "", &summary)?;
        return Ok(code);
    }
    let lin = linearization(outcome.final_map(), cfg)?;
    let code = if lin.pass { EXIT_OK } else { EXIT_CHECK_FAILED };
    write_trace_files(out, "", &summary)?;
    out.write_json(
        "linearize.json",
        &LinearizeOut {
            config: cfg.clone(),
            versions: VERSIONS,
            summary,
            linearization: lin,
        },
    )?;
    Ok(code)
}
