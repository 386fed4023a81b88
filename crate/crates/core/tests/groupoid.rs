use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, Vector2};
use nearhom_core::groupoid::{
    action_groupoid, check_axioms, degenerate_groupoid, fiber_t, mutated_groupoid, orbit, saturate,
    twisted_groupoid, AdjointAction, Arrow, BasePoint, Cocycle, FnAction, GroupAction, RotationAction,
    TrivialAction,
};
use nearhom_core::liegroup::{haar_quadrature, AlgebraVector, LieGroup, SoN, Su2, U1};
use nearhom_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn u1_rotation_chart(radius: f64) -> nearhom_core::groupoid::GroupoidChart<U1> {
    let g = Arc::new(U1::new());
    let action = Arc::new(RotationAction::standard(g.clone(), 2).unwrap());
    action_groupoid(g, action, radius).unwrap()
}

#[test]
fn trivial_action_axioms_are_exact() {
    let g = Arc::new(Su2::new());
    let chart = action_groupoid(g.clone(), Arc::new(TrivialAction { dim: 2 }), 0.1).unwrap();
    let report = check_axioms(&chart, 200, 1).unwrap();
    assert!(report.passes(1e-12), "{report:?}");
    assert_eq!(report.source_target, 0.0);
    assert_eq!(report.fixed_point, 0.0);

    let x = BasePoint::from_slice(&[0.03, -0.07]);
    let u = chart.unit(&x);
    let uu = chart.product(&u, &u);
    assert_eq!(uu, u);
}

#[test]
fn so2_rotation_axioms() {
    let g = Arc::new(SoN::new(2).unwrap());
    let action = Arc::new(RotationAction::standard(g.clone(), 2).unwrap());
    let chart = action_groupoid(g, action, 0.2).unwrap();
    let report = check_axioms(&chart, 300, 7).unwrap();
    assert!(report.passes(1e-12), "{report:?}");
}

#[test]
fn su2_adjoint_matches_matrix_conjugation() {
    let g = Arc::new(Su2::new());
    let chart = action_groupoid(g.clone(), Arc::new(AdjointAction::new(g.clone())), 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let h = g.random(&mut rng);
        let x = BasePoint::from_slice(&[0.05, -0.02, 0.08]);
        let y = chart.target(&Arrow::new(h, x.clone()));
        let m = g.to_matrix(&h);
        let expected = &m * g.algebra_matrix(&AlgebraVector::from_slice(x.coords())) * m.adjoint();
        let got = g.algebra_matrix(&AlgebraVector::from_slice(y.coords()));
        let gap = (expected - got).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(gap < 1e-14);
    }
    assert!(check_axioms(&chart, 200, 2).unwrap().passes(1e-12));
}

#[test]
fn action_must_fix_origin_and_stay_in_safety_box() {
    let g = Arc::new(U1::new());
    let shifted: Arc<dyn GroupAction<U1>> = Arc::new(FnAction::<U1>::new(1, "shift", |_, x| {
        BasePoint::from_slice(&[x.coords()[0] + 0.1])
    }));
    assert!(matches!(action_groupoid(g.clone(), shifted, 0.1), Err(Error::InvalidArgument(_))));

    let expanding: Arc<dyn GroupAction<U1>> = Arc::new(FnAction::<U1>::new(1, "expand", |_, x| x.scaled(3.0)));
    assert!(matches!(action_groupoid(g, expanding, 0.1), Err(Error::OutsideSafetyBox { .. })));
}

#[test]
fn constant_cocycle_leaves_chart_unchanged() {
    let base = u1_rotation_chart(0.1);
    let twisted = twisted_groupoid(&base, Cocycle::trivial(2, 1)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let group = U1::new();
    for _ in 0..50 {
        let q = base.fiber_s_arrow(&BasePoint::from_slice(&[0.04, -0.01]), &group.random(&mut rng));
        let p = base.fiber_s_arrow(&base.target(&q), &group.random(&mut rng));
        assert!(base.arrow_gap(&twisted.product(&p, &q), &base.product(&p, &q)) < 1e-15);
        assert_eq!(twisted.target(&p), base.target(&p));
    }
}

#[test]
fn u1_twist_defect_is_the_cocycle_value() {
    // c(x) = exp(i x₁): in scaled coordinates the exponent is x₁ / (π/2).
    let base = u1_rotation_chart(0.1);
    let scale = 2.0 / std::f64::consts::PI;
    let cocycle = Cocycle::new(
        2,
        1,
        vec![AlgebraVector::from_slice(&[scale]), AlgebraVector::zeros(1)],
        vec![],
    )
    .unwrap();
    let chart = twisted_groupoid(&base, cocycle).unwrap();
    assert!(check_axioms(&chart, 200, 5).unwrap().passes(1e-12));

    let group = U1::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let x = BasePoint::from_slice(&[0.1 * (2.0 * rand::Rng::random::<f64>(&mut rng) - 1.0), 0.05]);
        let q = chart.fiber_s_arrow(&x, &group.random(&mut rng));
        let y = chart.target(&q);
        let p = chart.fiber_s_arrow(&y, &group.random(&mut rng));
        let pq = chart.product(&p, &q);
        let e = group.multiply(&pq.group, &group.inverse(&group.multiply(&p.group, &q.group)));
        let d = group.dist_to_identity(&e).unwrap();
        assert!((d - scale * y.coords()[0].abs()).abs() < 1e-12);
        worst = worst.max(d);

        let phi = |a: &Arrow<_>| chart.known_homomorphism(a).unwrap();
        let h = group.multiply(&phi(&pq), &group.inverse(&group.multiply(&phi(&p), &phi(&q))));
        assert!(group.dist_to_identity(&h).unwrap() < 1e-14);
    }
    assert!(worst > 0.01);
}

#[test]
fn inverse_twist_restores_base_product() {
    let g = Arc::new(Su2::new());
    let base = action_groupoid(g.clone(), Arc::new(AdjointAction::new(g.clone())), 0.1).unwrap();
    let cocycle = Cocycle::new(
        3,
        3,
        vec![
            AlgebraVector::from_slice(&[0.5, 0.1, -0.2]),
            AlgebraVector::from_slice(&[0.0, 0.7, 0.3]),
            AlgebraVector::from_slice(&[-0.4, 0.2, 0.9]),
        ],
        vec![(0, 1, AlgebraVector::from_slice(&[1.0, -1.0, 0.5]))],
    )
    .unwrap();
    let once = twisted_groupoid(&base, cocycle.clone()).unwrap();
    assert!(check_axioms(&once, 200, 8).unwrap().passes(1e-12));
    let back = twisted_groupoid(&once, cocycle.inverse()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let q = base.fiber_s_arrow(&BasePoint::from_slice(&[0.05, -0.08, 0.02]), &g.random(&mut rng));
        let p = base.fiber_s_arrow(&base.target(&q), &g.random(&mut rng));
        assert!(back.arrow_gap(&back.product(&p, &q), &base.product(&p, &q)) < 1e-10);
    }
}

#[test]
fn oversized_cocycle_is_rejected() {
    let base = u1_rotation_chart(0.5);
    let cocycle = Cocycle::new(2, 1, vec![AlgebraVector::from_slice(&[2.0]); 2], vec![]).unwrap();
    assert!(matches!(twisted_groupoid(&base, cocycle), Err(Error::OutOfChart { .. })));
}

#[test]
fn mutated_product_breaks_associativity() {
    let g = Arc::new(Su2::new());
    let base = action_groupoid(g.clone(), Arc::new(TrivialAction { dim: 1 }), 0.1).unwrap();
    let factor = g.exp(&AlgebraVector::from_slice(&[0.05, 0.0, 0.0]));
    let chart = mutated_groupoid(&base, factor);
    let report = check_axioms(&chart, 100, 10).unwrap();
    assert!(report.associativity > 1e-3, "{report:?}");
    assert!(!report.passes(1e-9));
}

#[test]
fn orbits() {
    let chart = u1_rotation_chart(0.2);
    let origin = chart.origin();
    assert!(orbit(&chart, &origin, 16).unwrap().iter().all(|y| y.is_origin()));

    let g = Arc::new(U1::new());
    let trivial = action_groupoid(g, Arc::new(TrivialAction { dim: 2 }), 0.2).unwrap();
    let x = BasePoint::from_slice(&[0.1, 0.05]);
    assert!(orbit(&trivial, &x, 16).unwrap().iter().all(|y| *y == x));

    let so2 = Arc::new(SoN::new(2).unwrap());
    let rot = action_groupoid(so2.clone(), Arc::new(RotationAction::standard(so2, 2).unwrap()), 0.2).unwrap();
    let r = 0.13;
    let points = orbit(&rot, &BasePoint::from_slice(&[r, 0.0]), 32).unwrap();
    assert_eq!(points.len(), 32);
    for y in points {
        assert!((y.norm() - r).abs() < 1e-9);
    }
}

#[test]
fn saturation_radii() {
    let g = Arc::new(U1::new());
    let trivial = action_groupoid(g.clone(), Arc::new(TrivialAction { dim: 2 }), 0.2).unwrap();
    assert!((saturate(&trivial, 0.1, 8).unwrap() - 0.1).abs() < 1e-15);

    let rot = u1_rotation_chart(0.2);
    assert!((saturate(&rot, 0.1, 16).unwrap() - 0.1).abs() < 1e-12);

    // a(θ, x) = A R(θ) A⁻¹ x: operator norms bounded by cond(A).
    let a = Matrix2::new(1.1, 0.2, 0.0, 0.9);
    let a_inv = a.try_inverse().unwrap();
    let gg = g.clone();
    let skewed: Arc<dyn GroupAction<U1>> = Arc::new(FnAction::<U1>::new(2, "skewed rotation", move |h, x| {
        let t = gg.angle(h);
        let r = Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos());
        let y = a * r * a_inv * Vector2::new(x.coords()[0], x.coords()[1]);
        BasePoint::from_slice(&[y.x, y.y])
    }));
    let chart = action_groupoid(g, skewed, 0.2).unwrap();
    let sv = DMatrix::from_column_slice(2, 2, a.as_slice()).singular_values();
    let kappa = sv.max() / sv.min();
    let rad = saturate(&chart, 0.05, 32).unwrap();
    assert!(rad > 0.05 && rad <= kappa * 0.05 + 1e-12, "{rad} vs {}", kappa * 0.05);

    assert!(matches!(saturate(&chart, 0.3, 8), Err(Error::InvalidArgument(_))));
}

#[test]
fn target_fibers() {
    let chart = u1_rotation_chart(0.2);
    let group = U1::new();
    let quad = haar_quadrature(&group, 12).unwrap();
    let origin = chart.origin();
    for (p, w) in fiber_t(&chart, &origin, &quad).unwrap() {
        assert!(p.base.is_origin());
        assert!(w > 0.0);
    }
    let y = BasePoint::from_slice(&[0.12, -0.07]);
    let fiber = fiber_t(&chart, &y, &quad).unwrap();
    assert_eq!(fiber.len(), 12);
    for (p, _) in &fiber {
        assert!(chart.target(p).dist_inf(&y) <= 1e-10);
    }

    let trivial = action_groupoid(Arc::new(U1::new()), Arc::new(TrivialAction { dim: 2 }), 0.2).unwrap();
    for ((p, _), h) in fiber_t(&trivial, &y, &quad).unwrap().iter().zip(&quad.nodes) {
        assert_eq!(p.base, y);
        assert_eq!(p.group, *h);
    }
}

#[test]
fn degenerate_chart_is_the_group() {
    let chart = degenerate_groupoid(Arc::new(Su2::new()));
    assert_eq!(chart.base_dim(), 0);
    assert!(check_axioms(&chart, 50, 11).unwrap().passes(1e-13));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn twisted_adjoint_source_target_compatible(
        seed in any::<u64>(),
        coeffs in proptest::collection::vec(-1.0f64..1.0, 9),
    ) {
        let g = Arc::new(Su2::new());
        let base = action_groupoid(g.clone(), Arc::new(AdjointAction::new(g.clone())), 0.1).unwrap();
        let linear = coeffs.chunks(3).map(AlgebraVector::from_slice).collect();
        let chart = twisted_groupoid(&base, Cocycle::new(3, 3, linear, vec![]).unwrap()).unwrap();
        let report = check_axioms(&chart, 10, seed).unwrap();
        prop_assert!(report.source_target <= 1e-10);
        prop_assert!(report.associativity <= 1e-9);
        prop_assert!(report.inverse <= 1e-10);
        prop_assert!(report.fixed_point <= 1e-9);
    }
}
