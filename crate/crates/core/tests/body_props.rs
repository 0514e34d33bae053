mod common;

use common::*;
use mellipsoid::covering::{auto_step, grid_volume};
use mellipsoid::linalg::{Matrix, Vector};
use mellipsoid::ConvexBody;
use proptest::prelude::*;

fn vector(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-3.0..3.0f64, n).prop_map(Vector::from_vec)
}

/// Matrices `I + X` with small entries, so the condition number stays moderate.
fn near_identity(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-0.45..0.45f64, n * n)
        .prop_map(move |xs| Matrix::identity(n, n) + Matrix::from_row_slice(n, n, &xs))
}

fn leaf(n: usize) -> impl Strategy<Value = ConvexBody> {
    prop_oneof![
        (0.5..2.0f64).prop_map(move |r| ConvexBody::ball(n, r).unwrap()),
        (0.5..2.0f64).prop_map(move |s| ConvexBody::cube(n, s).unwrap()),
        (0.5..2.0f64).prop_map(move |s| ConvexBody::cross_polytope(n, s).unwrap()),
        (1.1..6.0f64, 0.5..2.0f64).prop_map(move |(p, s)| ConvexBody::lp_ball(n, p, s).unwrap()),
        any::<u64>().prop_map(move |seed| mellipsoid::suite::random_symmetric_polytope(n, n + 1, seed).unwrap()),
    ]
}

fn nonzero(x: &Vector) -> bool {
    x.norm() > 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauge_support_pairing((k, x, u) in (2usize..=4).prop_flat_map(|n| (leaf(n), vector(n), vector(n)))) {
        prop_assume!(nonzero(&x) && nonzero(&u));
        let lhs = x.dot(&u);
        let rhs = k.gauge(&x).unwrap() * k.support(&u).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12, "<x,u> = {lhs} > {rhs}");
    }

    #[test]
    fn hull_and_intersection_gauges((a, b, x) in (2usize..=3).prop_flat_map(|n| (leaf(n), leaf(n), vector(n)))) {
        prop_assume!(nonzero(&x));
        let (ga, gb) = (a.gauge(&x).unwrap(), b.gauge(&x).unwrap());
        let hull = ConvexBody::hull(&a, &b).unwrap().gauge(&x).unwrap();
        prop_assert!(hull <= ga.min(gb) * (1.0 + 1e-9), "hull gauge {hull} above min({ga}, {gb})");
        let meet = ConvexBody::intersection(&a, &b).unwrap().gauge(&x).unwrap();
        prop_assert_eq!(meet, ga.max(gb));
    }

    #[test]
    fn linear_image_round_trip((k, m, x) in (2usize..=4).prop_flat_map(|n| (leaf(n), near_identity(n), vector(n)))) {
        prop_assume!(nonzero(&x));
        let inv = m.clone().try_inverse().unwrap();
        let back = k.apply_linear(&m).unwrap().apply_linear(&inv).unwrap();
        let (want, got) = (k.gauge(&x).unwrap(), back.gauge(&x).unwrap());
        prop_assert!((want - got).abs() <= 1e-6 * want.max(1.0), "{got} against {want}");
        // Gauge of the image is the gauge of the preimage point.
        let image = k.apply_linear(&m).unwrap().gauge(&(&m * &x)).unwrap();
        prop_assert!((image - want).abs() <= 1e-9 * want.max(1.0));
    }
}

#[test]
fn aligned_pairs_attain_the_pairing_on_balls() {
    for n in 2..=5 {
        let ball = ConvexBody::ball(n, 1.7).unwrap();
        for x in mellipsoid::linalg::direction_net(n, 20) {
            let lhs = x.dot(&x);
            let rhs = ball.gauge(&x).unwrap() * ball.support(&x).unwrap();
            assert!(close(lhs, rhs, 1e-12), "{lhs} against {rhs}");
        }
    }
}

#[test]
fn rogers_shephard_on_test_bodies() {
    let triangle = ConvexBody::h_polytope(
        Matrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]),
        Vector::from_element(3, 1.0 / 3.0),
    )
    .unwrap();
    let bodies = [
        triangle.clone(),
        ConvexBody::intersection(&triangle, &ConvexBody::ball(2, 0.5).unwrap()).unwrap(),
        ConvexBody::cube(2, 1.0).unwrap(),
        ConvexBody::lp_ball(3, 3.0, 1.0).unwrap(),
    ];
    for k in &bodies {
        let n = k.dim();
        let d = k.difference_body().unwrap();
        let vk = grid_volume(k, auto_step(k, 4e4).unwrap()).unwrap();
        let vd = grid_volume(&d, auto_step(&d, 4e4).unwrap()).unwrap();
        assert!(vd.upper <= 4f64.powi(n as i32) * vk.lower, "{} against {}", vd.upper, vk.lower);
    }
    // The triangle has vol(K - K) / vol(K) = 6.
    let d = triangle.difference_body().unwrap();
    let vd = grid_volume(&d, 0.01).unwrap();
    let vk = grid_volume(&triangle, 0.01).unwrap();
    assert!(vd.lower / vk.upper <= 6.0 && 6.0 <= vd.upper / vk.lower);
}
