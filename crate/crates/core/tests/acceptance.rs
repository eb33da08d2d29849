// One PASS/FAIL line per acceptance criterion. Lines go straight to stderr so they
// survive the harness's output capture.

use std::io::Write;
use std::sync::Arc;

use pinch_core::combiner::{
    pinch_combine, spherical_comparison_at, spherical_comparison_with, verify_inequality_4, verify_wu_theorem, CheckStatus,
    ComparisonOptions, PinchPlan, Verdict, PAIR_SUM_TOL,
};
use pinch_core::curvature::{chern_lu_residual, AffineMap};
use pinch_core::curvature::{curvature_tensor, hbc_bounds_on_set, hbc_extrema};
use pinch_core::domain::ReinhardtProfile;
use pinch_core::jet::{FdConfig, FnPotential, PotentialField};
use pinch_core::optimize::OptimizerConfig;
use pinch_core::zoo::{self, QuadConfig, ZooEntry};
use pinch_core::{DMatrix, DomainSpec, MetricField, Point, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// A point of the ball of radius `r` about the origin.
fn random_point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Point {
    loop {
        let v = random_vector(rng, n);
        let p = Point::new(v);
        if p.norm() < r {
            return p;
        }
    }
}

/// Ball Bergman metric written out by hand:
/// `(n+1) [ δ_ij/(1−|z|²) + z̄_i z_j/(1−|z|²)² ]`.
fn ball_metric_oracle(z: &Point) -> DMatrix<C64> {
    let n = z.dim();
    let w = z.coords();
    let s = 1.0 - z.norm_sq();
    let k = (n + 1) as f64;
    DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 / s } else { 0.0 };
        (c(delta, 0.0) + w[i].conj() * w[j] / (s * s)) * k
    })
}

fn frob(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn criterion_1() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let e = zoo::euclidean(n);
        for _ in 0..100 {
            let z = random_point(&mut rng, n, 1.0);
            let t = curvature_tensor(&e, &z)?;
            worst = worst.max(t.components.iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
    }
    Ok((worst <= 1e-10, format!("flat metric: max |R| = {worst:.2e} over 300 points, n = 1, 2, 3")))
}

fn criterion_2() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = OptimizerConfig::default();
    let (mut hsc_err, mut hbc_err, mut fd_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for n in [2usize, 3] {
        let k = (n + 1) as f64;
        let ball = zoo::ball_bergman(1.0, n)?;
        let phi = FnPotential::new(n, move |x: &[f64]| -k * (1.0 - x.iter().map(|v| v * v).sum::<f64>()).ln());
        let fd = PotentialField::new("hand-written ball potential", Arc::new(phi), FdConfig::default());
        for _ in 0..20 {
            let z = random_point(&mut rng, n, 0.7);
            let x = random_vector(&mut rng, n);
            let exact = -4.0 / k;
            hsc_err = hsc_err.max((curvature_tensor(&ball, &z)?.hsc(&x)? - exact).abs());
            fd_err = fd_err.max((curvature_tensor(&fd, &z)?.hsc(&x)? - exact).abs());
            let (lo, hi) = hbc_extrema(&ball, &z, &cfg)?.hbc();
            hbc_err = hbc_err.max((lo + 4.0 / k).abs()).max((hi + 2.0 / k).abs());
        }
    }
    let ok = hsc_err <= 1e-5 && fd_err <= 1e-5 && hbc_err <= 1e-3;
    Ok((ok, format!("ball HSC error {hsc_err:.1e} (closed form), {fd_err:.1e} (potential); HBC extrema error {hbc_err:.1e}")))
}

fn criterion_3() -> Result<(bool, String)> {
    let disc = zoo::ball_bergman(1.0, 1)?;
    let ball = zoo::ball_bergman(1.0, 2)?;
    let a = chern_lu_residual(&AffineMap::identity(1), &disc, 0.5)?;
    let b = chern_lu_residual(&AffineMap::coordinate_slice(2, 0), &ball, 0.5)?;
    let ok = a.residual <= 1e-4 && b.residual <= 1e-4;
    Ok((ok, format!("disc formula residuals {:.1e} (identity), {:.1e} (slice)", a.residual, b.residual)))
}

/// Random zoo metric on a neighbourhood of the closed unit ball of ℂ², with the
/// exact sup of its HSC.
fn random_zoo_metric(rng: &mut ChaCha8Rng) -> Result<(ZooEntry, f64, String)> {
    let lambda = rng.gen_range(0.5..3.0);
    let r = rng.gen_range(1.0..1.5);
    if rng.gen_bool(0.5) {
        // HSC of the ball metric of any radius is −4/3
        Ok((zoo::scale(lambda, &zoo::ball_bergman(r, 2)?)?, -4.0 / 3.0 / lambda, format!("{lambda:.2} ball({r:.2})")))
    } else {
        // product of disc metrics: HSC between −2 and −1
        Ok((zoo::scale(lambda, &zoo::polydisc_bergman(vec![r, r])?)?, -1.0 / lambda, format!("{lambda:.2} polydisc({r:.2})")))
    }
}

fn criterion_4() -> Result<(bool, String)> {
    let cfg = OptimizerConfig::default();
    let disc = zoo::ball_bergman(1.0, 1)?;
    let half = zoo::scale(0.5, &disc)?;
    let disc_samples = DomainSpec::unit_ball(1).sample_global(200, 0)?;
    let r = verify_wu_theorem(&disc, &half, 4.0, 2.0, &disc_samples, 1e-6, &cfg)?;
    let mut ok = r.status == CheckStatus::Pass;
    let mut detail = format!("disc (4, 2): sup {:.6} vs {:.6}", r.hsc_sum_sup.unwrap_or(f64::NAN), r.bound.unwrap_or(f64::NAN));

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let samples = DomainSpec::unit_ball(2).sample_global(50, 4)?;
    let mut worst = f64::INFINITY;
    for _ in 0..5 {
        let (h, kh, _) = random_zoo_metric(&mut rng)?;
        let (g, kg, _) = random_zoo_metric(&mut rng)?;
        let r = verify_wu_theorem(&h, &g, -kg, -kh, &samples, 1e-6, &cfg)?;
        ok &= r.status == CheckStatus::Pass;
        worst = worst.min(r.margin.unwrap_or(f64::NEG_INFINITY));
    }
    detail.push_str(&format!("; 5 random pairs, worst margin {worst:.2e}"));
    Ok((ok, detail))
}

fn criterion_5() -> Result<(bool, String)> {
    let dom = DomainSpec::unit_ball(2);
    let samples = dom.sample_global(50, 5)?;
    let ball = zoo::ball_bergman(1.0, 2)?;
    let pairs = [
        (ball.clone(), zoo::ball_bergman(2.0, 2)?),
        (ball.clone(), zoo::polydisc_bergman(vec![1.0, 1.0])?),
        (ball.clone(), zoo::euclidean(2)),
        (zoo::scale(3.0, &zoo::ball_bergman(1.5, 2)?)?, zoo::polydisc_bergman(vec![1.2, 1.0])?),
        (zoo::bump_perturbation(&ball, 5e-4, Point::origin(2), 0.3, &dom)?, zoo::ball_bergman(2.0, 2)?),
    ];
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for (h, g) in &pairs {
        let r = verify_inequality_4(h, g, &samples, 50, 1e-9, false, 5)?;
        ok &= r.passed;
        worst = worst.min(r.min_margin);
    }
    let control = verify_inequality_4(&ball, &zoo::scale(10.0, &zoo::euclidean(2))?, &samples, 50, 1e-9, true, 5)?;
    ok &= !control.passed;
    Ok((ok, format!("5 pairs x 50 points x 50 pairs: min margin {worst:.2e}; swapped control margin {:.2e}", control.min_margin)))
}

fn criterion_6() -> Result<(bool, String)> {
    let dom = DomainSpec::unit_ball(2);
    let samples = dom.sample_global(40, 6)?;
    let h = zoo::ball_bergman(1.0, 2)?;
    let g = zoo::polydisc_bergman(vec![1.0, 1.0])?;
    let opts = ComparisonOptions { refine: None, audit: Some((5, 10_000, 6)) };
    let rep = spherical_comparison_with(&h, &g, &samples, &opts)?;
    let audits: Vec<f64> = rep.per_point.iter().filter_map(|p| p.audit.as_ref().map(|a| a.deviation)).collect();
    let audit_ok = audits.len() == 5 && audits.iter().all(|d| (-1e-12..=1e-3).contains(d));
    let z = Point::new(vec![c(0.2, -0.3), c(0.1, 0.4)]);
    let self_cmp = spherical_comparison_at(&h, &h, &z)?;
    let ok = audit_ok && (self_cmp - 0.5).abs() <= 1e-12 && rep.max_pair_sum <= 1.0 + PAIR_SUM_TOL;
    let dev = audits.iter().copied().fold(0.0, f64::max);
    Ok((ok, format!("audit max deviation {dev:.1e} at {} points; C(h,h) = {self_cmp:.15}; max pair sum {:.6}", audits.len(), rep.max_pair_sum)))
}

fn criterion_7() -> Result<(bool, String)> {
    let dom = DomainSpec::unit_ball(2);
    let base = zoo::bump_perturbation(&zoo::ball_bergman(1.0, 2)?, 5e-4, Point::origin(2), 0.3, &dom)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 2.0, 10.0] {
        let scaled = zoo::scale(lambda, &base)?;
        for _ in 0..20 {
            let z = random_point(&mut rng, 2, 0.9);
            let (x, y) = (random_vector(&mut rng, 2), random_vector(&mut rng, 2));
            let a = curvature_tensor(&scaled, &z)?.hbc(&x, &y)?;
            let b = curvature_tensor(&base, &z)?.hbc(&x, &y)? / lambda;
            worst = worst.max((a - b).abs());
        }
    }
    Ok((worst <= 1e-8, format!("HBC(λh) − HBC(h)/λ: max {worst:.1e} over λ ∈ {{0.5, 2, 10}}, 20 points each")))
}

fn flagship_plan(seed: u64) -> PinchPlan {
    PinchPlan { collar_out: Some(0.1), collar_in: Some(0.5), seed, ..PinchPlan::default() }
}

fn criterion_8() -> Result<(bool, String)> {
    let dom = DomainSpec::unit_ball(2);
    let g = zoo::bump_perturbation(&zoo::ball_bergman(1.0, 2)?, 5e-4, Point::origin(2), 0.3, &dom)?;
    let config = serde_json::json!({ "metric": "bump(ball_bergman(1, 2), 5e-4, 0, 0.3)" });
    let mut certs = Vec::new();
    let mut combined = None;
    for seed in 0..3 {
        let (field, cert) = pinch_combine(&g, &dom, &flagship_plan(seed), config.clone())?;
        combined.get_or_insert(field);
        certs.push(cert);
    }
    let combined = combined.expect("three runs");
    let again = pinch_combine(&g, &dom, &flagship_plan(0), config)?.1;
    let identical = again.to_json()? == certs[0].to_json()?;

    let k = &certs[0].constants;
    let a0 = k.a0.as_ref().map_or(f64::NAN, |a| a.value);
    let staged = a0 > -2.0 / 3.0 && k.b1.value >= 2.0 / 3.0 - 0.1 && k.b1_prime.value <= 4.0 / 3.0 + 0.1;
    let c0 = k.c0.as_ref().map_or(f64::NAN, |c| c.value);
    let c1 = k.c1.as_ref().map_or(f64::NAN, |c| c.value);
    let bounds = certs[0].combined.as_ref();
    let sup = bounds.map_or(f64::NAN, |b| b.hbc_sup);
    let inf = bounds.map_or(f64::NAN, |b| b.hbc_inf);
    let pinched = c0 > 0.0 && c1 > 0.0 && sup <= -c1 + 1e-6 && inf.is_finite() && certs.iter().all(|c| c.verdict == Verdict::Pass);

    // oracle for C0: the pencil sup recomputed on a fresh, denser compact sample
    let big = zoo::ball_bergman(2.0, 2)?;
    let dense = dom.sample_compact(0.5, 2000, 17)?;
    let mut pencil: f64 = 0.0;
    for z in &dense.points {
        let gm = g.metric(z)?;
        let bm = big.metric(z)?;
        pencil = pencil.max(pinch_core::linalg::pencil_extremes(&gm, &bm)?.1);
    }
    let c0_oracle = pencil * pencil * (1.0 + a0) / (2.0 / 3.0);
    let c0_agrees = ((c0_oracle - c0) / c0).abs() < 1e-2;

    // oracle for the verdict: the combined field swept at seeds the pipeline never saw
    let cfg = OptimizerConfig::default();
    let fresh = dom.sample_compact(0.5, 100, 23)?.union(&dom.sample_collar(0.1, 0.5, 100, 23)?);
    let fresh_sup = hbc_bounds_on_set(&combined, &fresh, &cfg)?.aggregate.hbc_sup;
    let fresh_ok = fresh_sup <= -c1 + 1e-6;

    let key = |cert: &pinch_core::combiner::PinchCertificate| -> [f64; 3] {
        let k = &cert.constants;
        [
            k.c0.as_ref().map_or(f64::NAN, |c| c.value),
            k.c1.as_ref().map_or(f64::NAN, |c| c.value),
            cert.combined.as_ref().map_or(f64::NAN, |b| b.hbc_sup),
        ]
    };
    let reference = key(&certs[0]);
    let stable = certs.iter().all(|c| key(c).iter().zip(&reference).all(|(a, b)| ((a - b) / b).abs() < 5e-4));

    let ok = staged && pinched && c0_agrees && fresh_ok && identical && stable;
    Ok((
        ok,
        format!(
            "A0 = {a0:.4}, collar HBC in [{:.4}, {:.4}], C0 = {c0:.4} (dense oracle {c0_oracle:.4}), C1 = {c1:.4e}, \
             sup HBC = {sup:.4e} (fresh seeds {fresh_sup:.4e}), inf {inf:.4}; identical JSON {identical}; stable over 3 seeds {stable}",
            -k.b1_prime.value, -k.b1.value
        ),
    ))
}

fn criterion_9() -> Result<(bool, String)> {
    let profile = ReinhardtProfile::PowerSum { radii: vec![1.0, 1.0], exponents: vec![2.0, 2.0] };
    let dom = DomainSpec::reinhardt(profile)?;
    let g = zoo::reinhardt_bergman(&dom, 20, QuadConfig::default(), FdConfig::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let z = random_point(&mut rng, 2, 0.5);
        let exact = ball_metric_oracle(&z);
        worst = worst.max(frob(&(g.metric(&z)? - &exact)) / frob(&exact));
    }
    let samples = dom.sample_compact(0.5, 40, 9)?;
    let (lo, hi) = zoo::uniform_equivalence_bounds(&g, &samples)?;
    let big = zoo::ball_bergman(2.0, 2)?;
    let (blo, bhi) = zoo::uniform_equivalence_bounds(&big, &samples)?;
    let finite = [lo, hi, blo, bhi].iter().all(|v| v.is_finite() && *v > 0.0);
    Ok((
        worst <= 0.01 && finite,
        format!("N = 20 relative error {worst:.1e} at |z| ≤ 0.5; equivalence [{lo:.3}, {hi:.3}], R = 2 ball [{blo:.3}, {bhi:.3}]"),
    ))
}

fn criterion_10() -> Result<(bool, String)> {
    let ball = DomainSpec::unit_ball(2);
    let bidisc = DomainSpec::polydisc(Point::origin(2), vec![1.0, 1.0])?;
    let at_ball = ball.squeezing_lower_bound(&Point::origin(2))?;
    let at_bidisc = bidisc.squeezing_lower_bound(&Point::origin(2))?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut monotone = true;
    for dom in [&ball, &bidisc] {
        for _ in 0..10 {
            let dir = Point::new(random_vector(&mut rng, 2));
            let dir = dir.scale(1.0 / dir.norm());
            let mut prev = f64::INFINITY;
            for k in 0..20 {
                let z = dir.scale(0.045 * k as f64);
                let v = dom.squeezing_lower_bound(&z)?;
                monotone &= v <= prev + 1e-15;
                prev = v;
            }
        }
    }
    let ok = (at_ball - 0.5).abs() < 1e-12 && (at_bidisc - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-12 && monotone;
    Ok((ok, format!("ball centre {at_ball:.6}, bidisc centre {at_bidisc:.6}, non-increasing along rays {monotone}")))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Result<(bool, String)>); 10] = [
        ("flat metric has zero curvature", criterion_1),
        ("ball Bergman curvature", criterion_2),
        ("disc formula on totally geodesic discs", criterion_3),
        ("Wu's sum bound", criterion_4),
        ("sum inequality and its negative control", criterion_5),
        ("spherical comparison", criterion_6),
        ("curvature scaling law", criterion_7),
        ("flagship pinching", criterion_8),
        ("Reinhardt Bergman truncation", criterion_9),
        ("squeezing lower bound", criterion_10),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        let _ = writeln!(err, "criterion {:>2} {}: {name}: {detail}", k + 1, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
