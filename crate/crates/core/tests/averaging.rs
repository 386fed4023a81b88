use std::sync::Arc;

use nearhom_core::averaging::{
    average_step, average_step_variants, defect, defect_values, iterate, noise_floor, sample_composable_pairs,
    CandidateMap, GridSpec, IterationSettings, PairSpec, PerturbationField, Status, StepMode,
};
use nearhom_core::groupoid::{
    action_groupoid, twisted_groupoid, AdjointAction, Arrow, BasePoint, Cocycle, GroupoidChart, RotationAction,
    TrivialAction,
};
use nearhom_core::haar::{direct_haar_system, HaarSystem};
use nearhom_core::liegroup::{haar_quadrature, AlgebraVector, LieGroup, Su2, U1};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn u1_twisted() -> GroupoidChart<U1> {
    let g = Arc::new(U1::new());
    let base = action_groupoid(g.clone(), Arc::new(RotationAction::standard(g, 2).unwrap()), 0.1).unwrap();
    let cocycle = Cocycle::new(2, 1, vec![AlgebraVector::from_slice(&[0.3]), AlgebraVector::zeros(1)], vec![]).unwrap();
    twisted_groupoid(&base, cocycle).unwrap()
}

fn haar<G: LieGroup>(chart: &GroupoidChart<G>, res: usize) -> HaarSystem<G> {
    direct_haar_system(chart, Arc::new(haar_quadrature(chart.group(), res).unwrap()))
}

fn su2_adjoint() -> GroupoidChart<Su2> {
    let g = Arc::new(Su2::new());
    action_groupoid(g.clone(), Arc::new(AdjointAction::new(g)), 0.1).unwrap()
}

fn su2_trivial() -> GroupoidChart<Su2> {
    action_groupoid(Arc::new(Su2::new()), Arc::new(TrivialAction { dim: 2 }), 0.2).unwrap()
}

#[test]
fn single_node_sample_is_one_unit_pair() {
    let chart = su2_adjoint();
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 1, base_points: 1, seed: 0 }).unwrap();
    assert_eq!(pairs.len(), 1);
    let unit = chart.unit(&chart.origin());
    assert_eq!(pairs[0].p, unit);
    assert_eq!(pairs[0].q, unit);
}

#[test]
fn sample_has_tensor_size_and_exact_composability() {
    let chart = u1_twisted();
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 5, base_points: 3, seed: 4 }).unwrap();
    assert_eq!(pairs.len(), 5 * 5 * 9);
    for pair in &pairs {
        assert_eq!(chart.composability_gap(&pair.p, &pair.q), 0.0);
    }
}

#[test]
fn projection_on_action_groupoid_has_no_defect() {
    let chart = su2_adjoint();
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 8, base_points: 3, seed: 1 }).unwrap();
    let d = defect(&CandidateMap::projection(&chart), &pairs).unwrap();
    assert!(d.sup <= 1e-14, "{d:?}");
    assert!(d.p95 <= d.sup);
}

#[test]
fn pairs_over_fixed_point_do_not_contribute() {
    let chart = su2_adjoint();
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 3, 0.1, 5), 0.05);
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 10, base_points: 1, seed: 2 }).unwrap();
    for v in defect_values(&phi, &pairs).unwrap() {
        assert!(v <= 1e-15, "{v}");
    }
}

#[test]
fn perturbed_defect_is_linear_in_epsilon_and_sample_is_representative() {
    let chart = u1_twisted();
    let field = PerturbationField::random(chart.group(), 2, 0.1, 8);
    let g = Arc::new(U1::new());
    let base = action_groupoid(g.clone(), Arc::new(RotationAction::standard(g, 2).unwrap()), 0.1).unwrap();
    let pairs = sample_composable_pairs(&base, &PairSpec { group_nodes: 12, base_points: 5, seed: 3 }).unwrap();
    let dense = sample_composable_pairs(&base, &PairSpec { group_nodes: 64, base_points: 15, seed: 3 }).unwrap();
    let mut slopes = Vec::new();
    for eps in [1e-3, 1e-2] {
        let phi = CandidateMap::perturbed(&base, field.clone(), eps);
        let coarse = defect(&phi, &pairs).unwrap().sup;
        let fine = defect(&phi, &dense).unwrap().sup;
        assert!(coarse <= fine * (1.0 + 1e-12) && fine <= 1.5 * coarse, "{coarse} vs {fine}");
        slopes.push(fine / eps);
    }
    assert!((slopes[0] / slopes[1] - 1.0).abs() < 0.05, "{slopes:?}");
}

#[test]
fn homomorphism_is_a_fixed_point_of_the_step() {
    let chart = u1_twisted();
    let phi = CandidateMap::known_homomorphism(&chart).unwrap();
    let system = haar(&chart, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let nested = average_step(&phi, &system, StepMode::Nested).unwrap();
    let grid = average_step(&phi, &system, StepMode::Grid(GridSpec { degree: 4, base_points: 5 })).unwrap();
    for _ in 0..20 {
        let p = Arrow::new(chart.group().random(&mut rng), BasePoint::from_slice(&[0.07, -0.03]));
        let want = phi.eval(&p).unwrap();
        assert!(chart.group().distance(&nested.eval(&p).unwrap(), &want).unwrap() < 1e-13);
        assert!(chart.group().distance(&grid.eval(&p).unwrap(), &want).unwrap() < 1e-6);
    }
}

#[test]
fn step_keeps_identity_over_fixed_point_exactly() {
    let chart = su2_adjoint();
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 3, 0.1, 6), 0.02);
    let system = haar(&chart, 6);
    let next = average_step(&phi, &system, StepMode::Grid(GridSpec { degree: 2, base_points: 3 })).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let p = Arrow::new(chart.group().random(&mut rng), chart.origin());
        assert_eq!(next.eval(&p).unwrap(), p.group);
        assert!(next.correction(&p).unwrap().is_zero());
    }
}

#[test]
fn abelian_single_step_reaches_round_off() {
    let chart = u1_twisted();
    let system = haar(&chart, 16);
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 12, base_points: 5, seed: 7 }).unwrap();
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 2, 0.1, 3), 1e-2);
    let floor = noise_floor(&chart, &system, StepMode::Nested, &pairs).unwrap();
    assert!(floor <= 1e-12);
    let out = iterate(&phi, &system, &pairs, &IterationSettings::default()).unwrap();
    let d = out.trace.defects();
    assert!(d[0] > 1e-3);
    assert_eq!(d.len(), 2, "{d:?}");
    assert!(d[1] <= 1e-10 && d[1] <= 10.0 * floor.max(f64::EPSILON), "{d:?} floor {floor}");
    assert!(matches!(out.status, Status::Converged | Status::NoiseFloor));
}

#[test]
fn abelian_variants_coincide() {
    let chart = u1_twisted();
    let system = haar(&chart, 16);
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 2, 0.1, 3), 1e-2);
    let p = chart.fiber_s_arrow(&BasePoint::from_slice(&[0.04, 0.09]), &U1::new().from_angle(2.5));
    assert!(average_step_variants(&phi, &system, &p).unwrap().max_gap() < 1e-14);
}

#[test]
fn su2_variants_agree_within_quadrature_tolerance() {
    let chart = su2_adjoint();
    let system = haar(&chart, 10);
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 3, 0.1, 12), 1e-2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..4 {
        let p = chart.fiber_s_arrow(&BasePoint::from_slice(&[0.03, -0.08, 0.05]), &chart.group().random(&mut rng));
        let v = average_step_variants(&phi, &system, &p).unwrap();
        assert!(v.max_gap() <= system.tolerance(), "{:?}", v.gaps);
        let hom = average_step_variants(&CandidateMap::projection(&chart), &system, &p).unwrap();
        assert!(chart.group().distance(&hom.source_fiber, &p.group).unwrap() < 1e-13);
        assert!(hom.max_gap() < 1e-13);
    }
}

#[test]
fn exact_homomorphism_converges_at_iteration_zero() {
    let chart = su2_adjoint();
    let system = haar(&chart, 6);
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 6, base_points: 3, seed: 1 }).unwrap();
    let out = iterate(&CandidateMap::projection(&chart), &system, &pairs, &IterationSettings::default()).unwrap();
    assert_eq!(out.status, Status::Converged);
    assert_eq!(out.trace.rows.len(), 1);
    assert_eq!(out.maps.len(), 1);
}

#[test]
fn oversized_initial_defect_is_rejected() {
    let chart = su2_adjoint();
    let system = haar(&chart, 6);
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 6, base_points: 3, seed: 1 }).unwrap();
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 3, 0.1, 2), 0.4);
    let out = iterate(&phi, &system, &pairs, &IterationSettings::default()).unwrap();
    assert_eq!(out.status, Status::Diverged);
    assert!(out.cause.unwrap().contains("admissibility"));
}

#[test]
fn trivial_action_grid_floor_is_round_off() {
    let chart = su2_trivial();
    let system = haar(&chart, 6);
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 8, base_points: 3, seed: 1 }).unwrap();
    let floor = noise_floor(&chart, &system, StepMode::Grid(GridSpec { degree: 2, base_points: 3 }), &pairs).unwrap();
    assert!(floor <= 1e-12, "{floor}");
}

#[test]
fn grid_floor_decreases_under_refinement() {
    let chart = u1_twisted();
    let system = haar(&chart, 16);
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 8, base_points: 5, seed: 2 }).unwrap();
    let coarse = noise_floor(&chart, &system, StepMode::Grid(GridSpec { degree: 4, base_points: 3 }), &pairs).unwrap();
    let fine = noise_floor(&chart, &system, StepMode::Grid(GridSpec { degree: 8, base_points: 5 }), &pairs).unwrap();
    assert!(coarse >= 2.0 * fine, "{coarse} vs {fine}");
}

#[test]
fn su2_grid_iteration_contracts_quadratically() {
    let chart = su2_trivial();
    let system = haar(&chart, 10);
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 12, base_points: 3, seed: 7 }).unwrap();
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 2, 0.2, 11), 1e-2);
    let settings = IterationSettings {
        mode: StepMode::Grid(GridSpec { degree: 6, base_points: 3 }),
        max_iter: 1,
        noise_floor: Some(1e-14),
        ..Default::default()
    };
    let out = iterate(&phi, &system, &pairs, &settings).unwrap();
    let d = out.trace.defects();
    assert_eq!(out.status, Status::MaxIter);
    assert!(d[1] <= 0.1 * d[0] * d[0], "{d:?}");
    let step = out.trace.rows[1].step_norm.unwrap();
    assert!(step > 0.1 * d[0] && step < 10.0 * d[0], "{step} vs {d:?}");
}

#[test]
fn defect_is_independent_of_worker_count() {
    let chart = su2_adjoint();
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 3, 0.1, 4), 1e-2);
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 10, base_points: 3, seed: 5 }).unwrap();
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| defect_values(&phi, &pairs).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nested_step_preserves_identity_on_isotropy(eps in 0.0f64..0.05, seed in 0u64..1000, angle in -3.0f64..3.0) {
        let chart = u1_twisted();
        let system = haar(&chart, 12);
        let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 2, 0.1, seed), eps);
        let next = average_step(&phi, &system, StepMode::Nested).unwrap();
        let p = Arrow::new(U1::new().from_angle(angle), chart.origin());
        prop_assert_eq!(next.eval(&p).unwrap(), p.group);
    }

    #[test]
    fn perturbation_vanishes_over_fixed_point(seed in 0u64..1000, angle in -3.0f64..3.0) {
        let g = Su2::new();
        let field = PerturbationField::random(&g, 2, 0.2, seed);
        let h = g.exp(&AlgebraVector::from_slice(&[angle, 0.3, -0.2]));
        prop_assert!(field.eval(&g, &h, &BasePoint::origin(2)).is_zero());
        let x = BasePoint::from_slice(&[0.2, -0.2]);
        prop_assert!(field.eval(&g, &h, &x).norm() < 2.0);
    }
}
