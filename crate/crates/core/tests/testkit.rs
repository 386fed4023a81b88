use std::sync::Arc;

use nearhom_core::averaging::{
    iterate, sample_composable_pairs, CandidateMap, GridSpec, IterationSettings, PairSpec, PerturbationField, Status,
    StepMode,
};
use nearhom_core::groupoid::{action_groupoid, AdjointAction, Arrow, ComposableTriple, GroupoidChart, TrivialAction};
use nearhom_core::haar::direct_haar_system;
use nearhom_core::liegroup::{bch_remainder, haar_quadrature, AlgebraVector, LieGroup, Su2, U1};
use nearhom_core::testkit::{
    c1_defect_estimate, fit_order, gkr_case, psi, sample_composable_triples, telescoping_residual, verify_bch_bounds,
    verify_cocycle_identity, GkrSettings,
};
use nearhom_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn su2_adjoint() -> GroupoidChart<Su2> {
    let g = Arc::new(Su2::new());
    action_groupoid(g.clone(), Arc::new(AdjointAction::new(g)), 0.1).unwrap()
}

#[test]
fn cocycle_identity_holds_to_round_off() {
    let chart = su2_adjoint();
    let triples = sample_composable_triples(&chart, 10_000, 3);
    assert!(verify_cocycle_identity(&CandidateMap::projection(&chart), &triples[..200]).unwrap() <= 1e-15);
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 3, 0.1, 2), 1e-2);
    let res = verify_cocycle_identity(&phi, &triples).unwrap();
    assert!(res <= 1e-11, "{res}");
}

#[test]
fn cocycle_factors_are_trivial_over_fixed_point() {
    let chart = su2_adjoint();
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 3, 0.1, 2), 5e-2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let origin = chart.origin();
    let group = chart.group();
    for _ in 0..50 {
        let mut arrow = || Arrow::new(group.random(&mut rng), origin.clone());
        let (p, q, r) = (arrow(), arrow(), arrow());
        let psi_pq = psi(&phi, &p, &q).unwrap();
        for factor in [psi_pq, psi(&phi, &chart.product(&p, &q), &r).unwrap(), psi(&phi, &q, &r).unwrap()] {
            assert!(group.dist_to_identity(&factor).unwrap() <= 1e-15);
        }
        let triple = ComposableTriple { p, q, r };
        assert!(verify_cocycle_identity(&phi, &[triple]).unwrap() <= 1e-15);
    }
}

fn gkr_settings(mode: StepMode) -> GkrSettings {
    GkrSettings {
        quadrature_resolution: 10,
        group_nodes: 16,
        mode,
        iteration: IterationSettings {
            admissibility: 0.5,
            ..Default::default()
        },
    }
}

#[test]
fn gkr_zero_perturbation_needs_no_step() {
    let out = gkr_case(Arc::new(Su2::new()), 0.0, 1, &gkr_settings(StepMode::Nested)).unwrap();
    assert_eq!(out.outcome.status, Status::Converged);
    assert_eq!(out.outcome.trace.rows.len(), 1);
    assert!(out.identity_distance <= 1e-15);
}

#[test]
fn gkr_abelian_converges_in_one_step() {
    for eps in [1e-3, 3e-2, 0.1] {
        let out = gkr_case(Arc::new(U1::new()), eps, 4, &gkr_settings(StepMode::Nested)).unwrap();
        let d = out.outcome.trace.defects();
        assert_eq!(d.len(), 2, "{d:?}");
        assert!(d[1] <= 1e-13, "{d:?}");
    }
}

#[test]
fn gkr_su2_reaches_a_nearby_homomorphism() {
    let settings = gkr_settings(StepMode::Grid(GridSpec { degree: 6, base_points: 1 }));
    let out = gkr_case(Arc::new(Su2::new()), 0.05, 7, &settings).unwrap();
    let last = *out.outcome.trace.defects().last().unwrap();
    assert_eq!(out.outcome.status, Status::Converged);
    assert!(last <= 1e-9, "{last}");
    assert!(out.identity_distance <= 0.1);
}

#[test]
fn gkr_rejects_large_perturbations() {
    assert!(matches!(
        gkr_case(Arc::new(U1::new()), 0.2, 1, &gkr_settings(StepMode::Nested)),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn bch_calibration_is_stable_under_halving() {
    let cal = verify_bch_bounds(&Su2::new(), 10_000, 0.3, 5).unwrap();
    assert!(cal.constant > 0.0 && cal.ratio <= 1.5, "{cal:?}");
    let abelian = verify_bch_bounds(&U1::new(), 1000, 0.3, 5).unwrap();
    assert!(abelian.constant <= 1e-12, "{abelian:?}");
    assert!(verify_bch_bounds(&Su2::new(), 10, 0.6, 1).is_err());
}

#[test]
fn bch_remainder_vanishes_for_zero_second_argument() {
    let g = Su2::new();
    let f = AlgebraVector::from_slice(&[0.2, -0.1, 0.25]);
    assert!(bch_remainder(&g, &f, &AlgebraVector::zeros(3)).unwrap() <= 1e-15);
}

#[test]
fn order_fit_recovers_planted_orders() {
    let quadratic: Vec<f64> = (0..5).map(|n| 0.5f64.powi(2i32.pow(n))).collect();
    let fit = fit_order(&quadratic, 0.0).unwrap();
    assert!((fit.order - 2.0).abs() < 1e-6, "{fit:?}");
    assert_eq!(fit.range, (0, 4));
    let linear: Vec<f64> = (0..6).map(|n| 0.5f64.powi(n)).collect();
    assert!((fit_order(&linear, 0.0).unwrap().order - 1.0).abs() < 1e-6);
}

#[test]
fn order_fit_excludes_floor_and_needs_three_points() {
    let trace = [1e-2, 1e-4, 1e-8, 2e-15, 1e-15];
    let fit = fit_order(&trace, 1e-15).unwrap();
    assert_eq!(fit.range, (0, 2));
    assert!((fit.order - 2.0).abs() < 1e-9);
    assert!(matches!(fit_order(&trace[..2], 0.0), Err(Error::InsufficientData(_))));
}

#[test]
fn c1_estimate_of_homomorphism_and_constant_defect() {
    let chart = action_groupoid(Arc::new(Su2::new()), Arc::new(TrivialAction { dim: 2 }), 0.2).unwrap();
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 4, base_points: 3, seed: 1 }).unwrap();
    let hom = c1_defect_estimate(&CandidateMap::projection(&chart), &pairs, 1e-5).unwrap();
    assert!(hom.max() <= 1e-8, "{hom:?}");
    let g = Su2::new();
    let c = g.exp(&AlgebraVector::from_slice(&[0.02, 0.01, -0.03]));
    let shifted = CandidateMap::closed(&chart, "shifted", move |p| Ok(g.multiply(&p.group, &c)));
    let est = c1_defect_estimate(&shifted, &pairs, 1e-5).unwrap();
    assert_eq!(est.spatial, 0.0);
    assert!(est.group > 1e-3);
}

#[test]
fn step_corrections_telescope() {
    let chart = su2_adjoint();
    let haar = direct_haar_system(&chart, Arc::new(haar_quadrature(chart.group(), 4).unwrap()));
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 3, base_points: 3, seed: 2 }).unwrap();
    let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 3, 0.1, 2), 2e-2);
    let settings = IterationSettings {
        max_iter: 2,
        noise_floor: Some(1e-16),
        tol: 1e-16,
        ..Default::default()
    };
    let out = iterate(&phi, &haar, &pairs, &settings).unwrap();
    assert_eq!(out.maps.len(), 3);
    let arrows: Vec<_> = pairs.iter().take(20).map(|p| p.p.clone()).collect();
    assert!(telescoping_residual(&out.maps, &arrows).unwrap() <= 2e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cocycle_identity_for_random_perturbations(seed in 0u64..10_000, eps in 0.0f64..0.1) {
        let chart = su2_adjoint();
        let phi = CandidateMap::perturbed(&chart, PerturbationField::random(chart.group(), 3, 0.1, seed), eps);
        let triples = sample_composable_triples(&chart, 20, seed);
        prop_assert!(verify_cocycle_identity(&phi, &triples).unwrap() <= 1e-11);
    }
}
