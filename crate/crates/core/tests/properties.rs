use std::sync::Arc;

use pinch_core::combiner::{brute_force_comparison, compute_c1, spherical_comparison, spherical_comparison_at, PAIR_SUM_TOL};
use pinch_core::combiner::verify_inequality_4;
use pinch_core::curvature::{curvature_tensor, hbc_extrema};
use pinch_core::jet::{metric_from_potential, FdOrder, FnPotential};
use pinch_core::optimize::OptimizerConfig;
use pinch_core::zoo::{self, ZooEntry};
use pinch_core::{DomainSpec, MetricField, Point, C64};
use proptest::prelude::*;

fn point_in_ball(n: usize, r: f64) -> impl Strategy<Value = Point> {
    prop::collection::vec(-1.0f64..1.0, 2 * n).prop_map(move |x| {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        // shrink into the open ball of radius r
        Point::from_real(&x.iter().map(|v| v / norm * r * 0.999).collect::<Vec<_>>())
    })
}

fn vector(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

/// Kähler metrics on a neighbourhood of the closed unit ball of ℂ².
fn zoo_metric() -> impl Strategy<Value = ZooEntry> {
    (0usize..4, 0.5f64..3.0, 1.05f64..2.0).prop_map(|(kind, lambda, r)| {
        let base = match kind {
            0 => zoo::ball_bergman(r, 2).unwrap(),
            1 => zoo::polydisc_bergman(vec![r, 1.1 * r]).unwrap(),
            2 => zoo::sum(&zoo::ball_bergman(r, 2).unwrap(), &zoo::euclidean(2)).unwrap(),
            _ => {
                let ball = zoo::ball_bergman(r, 2).unwrap();
                let dom = DomainSpec::unit_ball(2);
                zoo::bump_perturbation(&ball, 5e-4, Point::origin(2), 0.3, &dom).unwrap()
            }
        };
        zoo::scale(lambda, &base).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn jets_have_the_conjugation_symmetries(h in zoo_metric(), z in point_in_ball(2, 0.95)) {
        let jet = h.jet(&z).unwrap();
        let scale = jet.ddbar_h.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let [herm, c1, c2] = jet.symmetry_defects();
        prop_assert!(herm <= 1e-12 * scale && c1 <= 1e-12 * scale && c2 <= 1e-12 * scale, "{herm} {c1} {c2}");
        prop_assert!(jet.kahler_defect() <= 1e-12 * scale);
    }

    #[test]
    fn pair_sum_never_exceeds_one(h in zoo_metric(), g in zoo_metric(), z in point_in_ball(2, 0.95)) {
        let a = spherical_comparison_at(&h, &g, &z).unwrap();
        let b = spherical_comparison_at(&g, &h, &z).unwrap();
        prop_assert!((0.0..1.0).contains(&a) && (0.0..1.0).contains(&b));
        prop_assert!(a + b <= 1.0 + PAIR_SUM_TOL);
        prop_assert!((spherical_comparison_at(&h, &h, &z).unwrap() - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn brute_force_never_beats_the_pencil(h in zoo_metric(), g in zoo_metric(), z in point_in_ball(2, 0.95), seed in 0u64..1000) {
        let exact = spherical_comparison_at(&h, &g, &z).unwrap();
        let brute = brute_force_comparison(&h, &g, &z, 500, seed).unwrap();
        prop_assert!(brute >= exact - 1e-12, "{brute} < {exact}");
    }

    #[test]
    fn hbc_scales_inversely(h in zoo_metric(), z in point_in_ball(2, 0.9), x in vector(2), y in vector(2), lambda in 0.1f64..20.0) {
        let scaled = zoo::scale(lambda, &h).unwrap();
        let a = curvature_tensor(&scaled, &z).unwrap().hbc(&x, &y).unwrap();
        let b = curvature_tensor(&h, &z).unwrap().hbc(&x, &y).unwrap();
        prop_assert!((a - b / lambda).abs() <= 1e-10 * (1.0 + b.abs() / lambda), "{a} vs {}", b / lambda);
    }

    #[test]
    fn disc_sums_meet_the_wu_bound(l1 in 0.2f64..5.0, l2 in 0.2f64..5.0, r in 0.0f64..0.95, theta in 0.0f64..std::f64::consts::TAU) {
        // HSC(λ b) = −2/λ on the disc; the sum is (λ₁+λ₂) b, so the bound is attained
        let disc = zoo::ball_bergman(1.0, 1).unwrap();
        let sum = zoo::sum(&zoo::scale(l1, &disc).unwrap(), &zoo::scale(l2, &disc).unwrap()).unwrap();
        let z = Point::new(vec![C64::from_polar(r, theta)]);
        let hsc = curvature_tensor(&sum, &z).unwrap().hsc(&[C64::new(1.0, 0.0)]).unwrap();
        let (k1, k2) = (2.0 / l1, 2.0 / l2);
        prop_assert!(hsc <= -k1 * k2 / (k1 + k2) + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sum_inequality_holds(h in zoo_metric(), g in zoo_metric(), seed in 0u64..1000) {
        let samples = DomainSpec::unit_ball(2).sample_global(5, seed).unwrap();
        let r = verify_inequality_4(&h, &g, &samples, 20, 1e-9, false, seed).unwrap();
        prop_assert!(r.passed, "min margin {}", r.min_margin);
    }

    #[test]
    fn hbc_extrema_scale_inversely(h in zoo_metric(), z in point_in_ball(2, 0.9), lambda in 0.1f64..20.0) {
        let cfg = OptimizerConfig::default();
        let (lo, hi) = hbc_extrema(&h, &z, &cfg).unwrap().hbc();
        let (slo, shi) = hbc_extrema(&zoo::scale(lambda, &h).unwrap(), &z, &cfg).unwrap().hbc();
        prop_assert!((slo - lo / lambda).abs() <= 1e-6 * (1.0 + lo.abs() / lambda));
        prop_assert!((shi - hi / lambda).abs() <= 1e-6 * (1.0 + hi.abs() / lambda));
    }

    #[test]
    fn c1_is_invariant_under_absorbing_c0(c0 in 0.5f64..50.0, seed in 0u64..100) {
        // (h, C₀) and (C₀h, 1) describe the same combined metric; HBC(C₀h) ≤ −B₂/C₀
        let dom = DomainSpec::unit_ball(2);
        let samples = dom.sample_global(20, seed).unwrap();
        let h = zoo::ball_bergman(2.0, 2).unwrap();
        let g = zoo::bump_perturbation(&zoo::ball_bergman(1.0, 2).unwrap(), 5e-4, Point::origin(2), 0.3, &dom).unwrap();
        let (b1, b2) = (2.0 / 3.0, 2.0 / 3.0);
        let a = compute_c1(&h, &g, c0, b1, b2, &samples, None).unwrap();
        let scaled = zoo::scale(c0, &h).unwrap();
        let b = compute_c1(&scaled, &g, 1.0, b1, b2 / c0, &samples, None).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs().max(1e-300) + 1e-15);
        prop_assert_eq!(a.binding, b.binding);
    }
}

#[test]
fn fourth_order_stencil_error_drops_by_sixteen() {
    // independent oracle: the ball metric written out by hand
    let phi = Arc::new(FnPotential::new(2, |x: &[f64]| -3.0 * (1.0 - x.iter().map(|v| v * v).sum::<f64>()).ln()));
    let z = Point::new(vec![C64::new(0.3, -0.1), C64::new(0.2, 0.25)]);
    let w = z.coords();
    let s = 1.0 - z.norm_sq();
    let exact = pinch_core::DMatrix::from_fn(2, 2, |i, j| {
        let d = if i == j { 1.0 / s } else { 0.0 };
        (C64::new(d, 0.0) + w[i].conj() * w[j] / (s * s)) * 3.0
    });
    let err = |step: f64| (metric_from_potential(phi.as_ref(), &z, step, FdOrder::Four).unwrap() - &exact).norm();
    for step in [0.08, 0.04] {
        let ratio = err(step) / err(step / 2.0);
        assert!((12.0..=20.0).contains(&ratio), "step {step}: ratio {ratio}");
    }
}

#[test]
fn comparison_report_is_deterministic() {
    let samples = DomainSpec::unit_ball(2).sample_global(30, 3).unwrap();
    let h = zoo::ball_bergman(1.0, 2).unwrap();
    let g = zoo::polydisc_bergman(vec![1.0, 1.0]).unwrap();
    let a = spherical_comparison(&h, &g, &samples).unwrap().to_json().unwrap();
    let b = spherical_comparison(&h, &g, &samples).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}
