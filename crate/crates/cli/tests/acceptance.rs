use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use nearhom_core::averaging::{defect, sample_composable_pairs, CandidateMap, PairSpec, PerturbationField};
use nearhom_core::groupoid::{action_groupoid, AdjointAction};
use nearhom_core::liegroup::Su2;
use nearhom_core::testkit::{sample_composable_triples, verify_bch_bounds, verify_cocycle_identity};
use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))
}

fn nearhom(args: &[&str], cfg: &str, out: &Path) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_nearhom"))
        .args(args)
        .arg("--config")
        .arg(config(cfg))
        .arg("--out")
        .arg(out)
        .status()
        .expect("spawn nearhom");
    status.code().unwrap_or(-1)
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .expect("valid json")
}

fn f(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or(f64::NAN)
}

struct Suite {
    lines: Vec<(bool, String)>,
}

impl Suite {
    fn record(&mut self, n: usize, name: &str, start: Instant, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        let line = format!("{tag} [{n}] {name}: {detail} ({:.1}s)", start.elapsed().as_secs_f64());
        println!("{line}");
        self.lines.push((pass, line));
    }
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name);
    let mut suite = Suite { lines: Vec::new() };

    let t = Instant::now();
    let code = nearhom(&["run"], "u1-onestep", &out("u1"));
    let r = json(out("u1").join("report.json"));
    let steps = r["steps"].as_u64().unwrap_or(0);
    suite.record(
        1,
        "abelian one-step",
        t,
        code == 0 && steps == 1 && f(&r, "final_defect") <= 1e-10 && t.elapsed().as_secs_f64() <= 10.0,
        format!("exit {code}, {steps} step(s), defect {:.3e}", f(&r, "final_defect")),
    );

    let t = Instant::now();
    let study_code = nearhom(&["convergence-study"], "su2-quadratic", &out("study"));
    let run_code = nearhom(&["run", "--workers", "1"], "su2-quadratic", &out("su2-w1"));
    let study = json(out("study").join("study.json"));
    let report = json(out("su2-w1").join("report.json"));
    let spread = f(&study, "contraction_spread");
    let order = f(&report["order_fit"], "order");
    let usable = report["order_fit"]["usable_iterations"].as_u64().unwrap_or(0);
    suite.record(
        2,
        "quadratic contraction",
        t,
        study_code == 0 && run_code == 0 && spread <= 3.0 && order >= 1.8 && usable >= 3,
        format!("contraction spread {spread:.3}, order {order:.3} over {usable} iterations"),
    );

    let t = Instant::now();
    let floor = f(&report, "noise_floor");
    let last = f(&report, "final_defect");
    let steps = report["steps"].as_u64().unwrap_or(u64::MAX);
    let fixed = f(&report, "fixed_fiber_identity");
    suite.record(
        3,
        "convergence to a homomorphism",
        t,
        last <= (1e-8f64).max(3.0 * floor) && steps <= 12 && fixed == 0.0,
        format!("final defect {last:.3e} after {steps} steps (floor {floor:.3e}), identity over x0 off by {fixed:e}"),
    );

    let t = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for cfg in ["u1-haar", "su2-adjoint"] {
        let code = nearhom(&["haar-test"], cfg, &out(cfg));
        let h = json(out(cfg).join("haar.json"));
        let (mass, inv, tv) = (f(&h, "lemma_mass_error"), f(&h, "lemma_invariance"), f(&h, "total_variation"));
        ok &= code == 0 && mass <= 1e-9 && inv <= 1e-6 && tv <= 1e-5;
        detail.push(format!("{cfg}: mass {mass:.1e}, invariance {inv:.1e}, tv {tv:.1e}"));
    }
    suite.record(4, "Haar system", t, ok && t.elapsed().as_secs_f64() <= 60.0, detail.join("; "));

    let t = Instant::now();
    let g = Arc::new(Su2::new());
    let chart = action_groupoid(g.clone(), Arc::new(AdjointAction::new(g.clone())), 0.1).unwrap();
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(g.as_ref(), 3, 0.1, 2), 6e-3);
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 12, base_points: 3, seed: 1 }).unwrap();
    let delta = defect(&phi, &pairs).unwrap().sup;
    let triples = sample_composable_triples(&chart, 10_000, 3);
    let res = verify_cocycle_identity(&phi, &triples).unwrap();
    suite.record(
        5,
        "proof identity",
        t,
        res <= 1e-11 && triples.len() >= 10_000 && (5e-3..=2e-2).contains(&delta),
        format!("residual {res:.3e} over {} triples at defect {delta:.3e}", triples.len()),
    );

    let t = Instant::now();
    let code = nearhom(&["run"], "su2-gkr", &out("gkr"));
    let r = json(out("gkr").join("report.json"));
    let (last, dist) = (f(&r, "final_defect"), f(&r, "fixed_fiber_identity"));
    suite.record(
        6,
        "GKR special case",
        t,
        code == 0 && last <= 1e-9 && dist <= 0.1 && t.elapsed().as_secs_f64() <= 60.0,
        format!("exit {code}, defect {last:.3e}, distance to identity {dist:.3e}"),
    );

    let t = Instant::now();
    let code = nearhom(&["linearize"], "u1-linearize", &out("lin"));
    let l = json(out("lin").join("linearize.json"));
    let lin = &l["linearization"];
    let (axioms, rep, ratio) = (
        f(lin, "action_axioms"),
        f(lin, "representation_residual"),
        f(&lin["nonlinearity"], "ratio"),
    );
    suite.record(
        7,
        "linearization",
        t,
        code == 0 && axioms <= 1e-6 && rep <= 1e-6 && (ratio / 4.0 - 1.0).abs() <= 0.2,
        format!("action axioms {axioms:.1e}, representation {rep:.1e}, halving ratio {ratio:.3}"),
    );

    let t = Instant::now();
    let cal = verify_bch_bounds(&Su2::new(), 10_000, 0.3, 5).unwrap();
    let spread = cal.ratio.max(1.0 / cal.ratio);
    suite.record(
        8,
        "BCH bound",
        t,
        spread <= 1.5,
        format!("C = {:.4} at cap 0.3, {:.4} at 0.15", cal.constant, cal.half_cap_constant),
    );

    let t = Instant::now();
    let code = nearhom(&["check-axioms"], "su2-mutated", &out("mutated"));
    let a = json(out("mutated").join("axioms.json"));
    let assoc = a["residuals"]
        .as_array()
        .and_then(|rs| rs.iter().find(|e| e[0] == "associativity"))
        .and_then(|e| e[1].as_f64())
        .unwrap_or(0.0);
    suite.record(
        9,
        "fault detection",
        t,
        code != 0 && assoc > 1e-3,
        format!("exit {code}, associativity residual {assoc:.3e}"),
    );

    let t = Instant::now();
    let code = nearhom(&["run", "--workers", "8"], "su2-quadratic", &out("su2-w8"));
    let same = ["trace.csv", "report.json"].iter().all(|name| {
        std::fs::read(out("su2-w1").join(name)).ok() == std::fs::read(out("su2-w8").join(name)).ok()
    });
    suite.record(10, "determinism", t, code == 0 && same, format!("1 vs 8 workers byte-identical: {same}"));

    let failed: Vec<&String> = suite.lines.iter().filter(|(p, _)| !p).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:#?}");
}
