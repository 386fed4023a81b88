use std::sync::Arc;

use nalgebra::DMatrix;
use nearhom_core::averaging::{
    average_step, defect, sample_composable_pairs, CandidateMap, PairSpec, PerturbationField, StepMode,
};
use nearhom_core::groupoid::{
    action_groupoid, twisted_groupoid, BasePoint, Cocycle, ConjugatedAction, GroupAction, GroupoidChart,
    QuadraticMap, RotationAction,
};
use nearhom_core::haar::direct_haar_system;
use nearhom_core::liegroup::{haar_quadrature, AlgebraVector, LieGroup, U1};
use nearhom_core::linearize::{
    bochner_linearize, check_action_axioms, conjugacy_residual, halving_test, induced_action, invert_trivialization,
    nonlinearity_residual, representation_check, InducedAction,
};
use nearhom_core::Error;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const RHO: f64 = 0.1;

fn rotation() -> Arc<dyn GroupAction<U1>> {
    Arc::new(RotationAction::standard(Arc::new(U1::new()), 2).unwrap())
}

fn rotation_chart() -> GroupoidChart<U1> {
    action_groupoid(Arc::new(U1::new()), rotation(), RHO).unwrap()
}

fn quadratic() -> QuadraticMap {
    QuadraticMap::new(vec![
        DMatrix::from_row_slice(2, 2, &[0.8, 0.3, 0.3, -0.5]),
        DMatrix::from_row_slice(2, 2, &[-0.4, 0.6, 0.6, 0.7]),
    ])
    .unwrap()
}

fn cocycle() -> Cocycle {
    Cocycle::new(2, 1, vec![AlgebraVector::from_slice(&[0.3]), AlgebraVector::from_slice(&[-0.2])], vec![]).unwrap()
}

fn twisted_chart() -> GroupoidChart<U1> {
    twisted_groupoid(&rotation_chart(), cocycle()).unwrap()
}

fn rotation_matrix(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[test]
fn projection_inverts_to_the_chart_point() {
    let chart = rotation_chart();
    let phi = CandidateMap::projection(&chart);
    let g = U1::new().from_angle(0.7);
    let x = BasePoint::from_slice(&[0.05, -0.02]);
    let p = invert_trivialization(&phi, &g, &x).unwrap();
    assert_eq!(p.group, g);
    assert_eq!(p.base, x);
    let unit = invert_trivialization(&phi, &Complex64::new(1.0, 0.0), &x).unwrap();
    assert_eq!(unit, chart.unit(&x));
}

#[test]
fn twisted_inverse_matches_closed_form() {
    let chart = twisted_chart();
    let phi = CandidateMap::known_homomorphism(&chart).unwrap();
    let u1 = U1::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..10 {
        let g = u1.random(&mut rng);
        let x = BasePoint::from_slice(&[0.09 - 0.02 * k as f64, 0.04]);
        let p = invert_trivialization(&phi, &g, &x).unwrap();
        let want = u1.multiply(&g, &u1.inverse(&cocycle().evaluate(&u1, &x)));
        assert!(u1.distance(&p.group, &want).unwrap() < 1e-8);
        assert!(chart.source(&p).dist_inf(&x) <= 1e-10);
        assert!(u1.distance(&phi.eval(&p).unwrap(), &g).unwrap() <= 1e-9);
    }
}

#[test]
fn newton_failure_is_reported() {
    let chart = rotation_chart();
    let flat = CandidateMap::closed(&chart, "constant", |_| Ok(Complex64::new(1.0, 0.0)));
    let err = invert_trivialization(&flat, &U1::new().from_angle(0.5), &BasePoint::from_slice(&[0.01, 0.0]));
    assert!(matches!(err, Err(Error::NewtonFailed { .. })), "{err:?}");
}

#[test]
fn projection_induces_the_defining_action() {
    let chart = rotation_chart();
    let a = induced_action(&CandidateMap::projection(&chart));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let g = U1::new().random(&mut rng);
        let x = BasePoint::from_slice(&[0.03, 0.08]);
        assert!(a.act(&g, &x).unwrap().dist_inf(&rotation().act(&g, &x)) <= 1e-15);
    }
    let report = check_action_axioms(&a, 64, 1).unwrap();
    assert!(report.max_residual() <= 1e-10, "{report:?}");
}

#[test]
fn offset_fault_is_detected() {
    let inner = rotation();
    let a = InducedAction::from_fn(Arc::new(U1::new()), 2, RHO, "offset", move |g, x| {
        let mut y = inner.act(g, x);
        y.0[0] += 1e-3;
        Ok(y)
    });
    assert!(check_action_axioms(&a, 32, 3).unwrap().max_residual() >= 5e-4);
}

#[test]
fn linear_action_is_its_own_linearization() {
    let g = Arc::new(U1::new());
    let quad = haar_quadrature(g.as_ref(), 16).unwrap();
    let a = InducedAction::from_action(g.clone(), rotation(), RHO);
    let model = bochner_linearize(&a, &quad).unwrap();
    let id = model.representation(&g.identity()).unwrap();
    assert!((id - DMatrix::<f64>::identity(2, 2)).amax() <= 1e-10);
    for (h, r) in model.node_representations() {
        assert!((r - rotation_matrix(g.angle(h))).amax() <= 1e-9);
    }
    let x = BasePoint::from_slice(&[0.07, -0.04]);
    assert!(model.chart_map(&x).unwrap().dist_inf(&x) <= 1e-9);
    assert!(representation_check(&model, 32, 5).unwrap() <= 1e-10);
    assert!(conjugacy_residual(&model, 0.05, 32, 5).unwrap() <= 1e-9);
    assert!(model.max_condition() < 1.0 + 1e-6);
}

#[test]
fn defining_rotation_matrices_form_a_representation() {
    let u1 = U1::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let (g, h) = (u1.random(&mut rng), u1.random(&mut rng));
        let lhs = rotation_matrix(u1.angle(&g)) * rotation_matrix(u1.angle(&h));
        assert!((lhs - rotation_matrix(u1.angle(&u1.multiply(&g, &h)))).amax() <= 1e-12);
    }
}

#[test]
fn conjugated_action_is_linearized_exactly() {
    let g = Arc::new(U1::new());
    let action: Arc<dyn GroupAction<U1>> = Arc::new(ConjugatedAction::new(rotation(), quadratic()).unwrap());
    let a = InducedAction::from_action(g.clone(), action, RHO);
    assert!(check_action_axioms(&a, 32, 1).unwrap().max_residual() <= 1e-12);
    let model = bochner_linearize(&a, &haar_quadrature(g.as_ref(), 24).unwrap()).unwrap();
    assert!(nonlinearity_residual(&model, 0.05, 32, 2).unwrap() > 1e-4);
    assert!(conjugacy_residual(&model, 0.05, 32, 2).unwrap() <= 1e-9);
    assert!(representation_check(&model, 32, 2).unwrap() <= 1e-8);
}

#[test]
fn non_action_conjugacy_residual_is_quadratic() {
    let g = Arc::new(U1::new());
    let q = quadratic();
    let inner = rotation();
    let a = InducedAction::from_fn(g.clone(), 2, RHO, "R(g)x + Q(x)", move |h, x| {
        let lin = inner.act(h, x);
        let quad = q.apply(x);
        Ok(BasePoint(lin.0.iter().zip(quad.0.iter().zip(&x.0)).map(|(l, (p, x))| l + p - x).collect()))
    });
    let model = bochner_linearize(&a, &haar_quadrature(g.as_ref(), 16).unwrap()).unwrap();
    let report = halving_test(&model, 0.04, 64, 9).unwrap();
    assert!((report.ratio - 4.0).abs() <= 0.8, "{report:?}");
}

#[test]
fn end_to_end_abelian_linearization() {
    let g = Arc::new(U1::new());
    let action: Arc<dyn GroupAction<U1>> = Arc::new(ConjugatedAction::new(rotation(), quadratic()).unwrap());
    let base = action_groupoid(g.clone(), action, RHO).unwrap();
    let chart = twisted_groupoid(&base, cocycle()).unwrap();
    let haar = direct_haar_system(&chart, Arc::new(haar_quadrature(g.as_ref(), 32).unwrap()));
    let phi0 = CandidateMap::perturbed(&chart, PerturbationField::random(g.as_ref(), 2, RHO, 21), 1e-2);
    let phi1 = average_step(&phi0, &haar, StepMode::Nested).unwrap();
    let pairs = sample_composable_pairs(&chart, &PairSpec { group_nodes: 8, base_points: 3, seed: 1 }).unwrap();
    let d1 = defect(&phi1, &pairs).unwrap().sup;
    assert!(d1 <= 1e-10, "{d1}");

    let a = induced_action(&phi1);
    assert!(check_action_axioms(&a, 16, 2).unwrap().max_residual() <= 1e-6);
    let model = bochner_linearize(&a, &haar_quadrature(g.as_ref(), 12).unwrap()).unwrap();
    assert!(representation_check(&model, 8, 3).unwrap() <= 1e-6);
    assert!(conjugacy_residual(&model, 0.05, 8, 3).unwrap() <= 1e-6);
}
