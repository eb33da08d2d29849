//! Spherical comparison of two metrics, Wu-type curvature bounds for sums, and the
//! pipeline that turns a metric pinched outside a compact `K` into a metric
//! pinched everywhere by adding a multiple of the Bergman metric of a large ball.
//!
//! `C(h, g)` is the infimum of `‖X‖²_h` over `(h + g)`-unit vectors. Pointwise it is
//! the smallest eigenvalue of the pencil `h v = λ (h + g) v`, computed exactly by a
//! Hermitian-definite reduction. Over a region it is a sampled infimum, optionally
//! pushed further down by Nelder–Mead; all such constants are relative to the
//! sampled region.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{ball_bergman_hsc, curvature_tensor, hbc_bounds_on_set, refine_max, CurvatureBoundsReport};
use crate::domain::{DomainSpec, Point, RegionTag, SampleSet};
use crate::error::{PinchError, Result};
use crate::jet::MetricField;
use crate::linalg;
use crate::optimize::{random_unit_vector, OptimizerConfig};
use crate::zoo::{self, ZooEntry};
use crate::C64;

/// Pointwise tolerance on `C(h, g) + C(g, h) ≤ 1`.
pub const PAIR_SUM_TOL: f64 = 1e-12;

/// `C(h, g)` at `z`: the smallest eigenvalue of the pencil `(h, h + g)`.
pub fn spherical_comparison_at(h: &dyn MetricField, g: &dyn MetricField, z: &Point) -> Result<f64> {
    let hm = h.metric(z)?;
    let gm = g.metric(z)?;
    Ok(linalg::pencil_extremes(&hm, &(&hm + &gm))?.0)
}

/// Both comparisons at once: `(C(h, g), C(g, h))`.
fn comparisons_at(hm: &DMatrix<C64>, gm: &DMatrix<C64>) -> Result<(f64, f64)> {
    let (lo, hi) = linalg::pencil_extremes(hm, &(hm + gm))?;
    // the pencil (g, h+g) has eigenvalues 1 − λ(h, h+g)
    Ok((lo, 1.0 - hi))
}

/// Minimum of `‖X‖²_h` over `directions` random `(h + g)`-unit vectors.
pub fn brute_force_comparison(h: &dyn MetricField, g: &dyn MetricField, z: &Point, directions: usize, seed: u64) -> Result<f64> {
    let hm = h.metric(z)?;
    let sum = &hm + g.metric(z)?;
    let frame = linalg::unitary_frame(&sum)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..directions {
        let x = random_unit_vector(&mut rng, z.dim());
        let v: Vec<C64> = (0..z.dim()).map(|i| (0..z.dim()).map(|a| frame[(i, a)] * x[a]).sum()).collect();
        best = best.min(linalg::form_norm_sq(&hm, &v));
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct BruteForceAudit {
    pub directions: usize,
    pub brute_force_min: f64,
    /// `brute_force_min − pencil value`; never below `−1e-12` for a correct pencil.
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonPoint {
    pub index: usize,
    pub point: Point,
    pub c_hg: f64,
    pub c_gh: f64,
    pub audit: Option<BruteForceAudit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub h: String,
    pub g: String,
    pub region: RegionTag,
    pub sample_set: String,
    pub seed: u64,
    pub per_point: Vec<ComparisonPoint>,
    /// `C(h, g)` over the region.
    pub c_hg: f64,
    /// `C(g, h)` over the region.
    pub c_gh: f64,
    pub c_hg_point: Point,
    pub c_gh_point: Point,
    /// Infima over the sample points alone, before refinement.
    pub sampled_c_hg: f64,
    pub sampled_c_gh: f64,
    pub max_pair_sum: f64,
    pub pair_sum_tol: f64,
    pub refined: bool,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.per_point.first().map(|p| p.point.dim()).unwrap_or(0);
        let audited = self.per_point.iter().any(|p| p.audit.is_some());
        let mut header = vec!["index".to_string()];
        header.extend((1..=n).flat_map(|k| [format!("re(z{k})"), format!("im(z{k})")]));
        header.extend(["c_hg", "c_gh", "pair_sum"].map(String::from));
        if audited {
            header.extend(["brute_force_c_hg", "brute_force_deviation"].map(String::from));
        }
        header.push("units".into());
        w.write_record(&header)?;
        for p in &self.per_point {
            let mut rec = vec![p.index.to_string()];
            rec.extend(p.point.real_coords().iter().map(|v| format!("{v:e}")));
            rec.extend([p.c_hg, p.c_gh, p.c_hg + p.c_gh].iter().map(|v| format!("{v:e}")));
            if audited {
                match &p.audit {
                    Some(a) => rec.extend([format!("{:e}", a.brute_force_min), format!("{:e}", a.deviation)]),
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            rec.push("squared norm ratio (dimensionless)".into());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Options for [`spherical_comparison_with`].
#[derive(Clone, Debug, Default)]
pub struct ComparisonOptions {
    /// Nelder–Mead refinement of both infima inside the sample region.
    pub refine: Option<OptimizerConfig>,
    /// Brute-force audit: `(number of audited points, directions per point, seed)`.
    pub audit: Option<(usize, usize, u64)>,
}

/// `C(h, g)` and `C(g, h)` over a sample set, from exact pointwise pencils.
pub fn spherical_comparison(h: &dyn MetricField, g: &dyn MetricField, samples: &SampleSet) -> Result<ComparisonReport> {
    spherical_comparison_with(h, g, samples, &ComparisonOptions::default())
}

pub fn spherical_comparison_with(
    h: &dyn MetricField,
    g: &dyn MetricField,
    samples: &SampleSet,
    opts: &ComparisonOptions,
) -> Result<ComparisonReport> {
    if samples.is_empty() {
        return Err(PinchError::EmptyRegion(samples.id()));
    }
    if h.dim() != g.dim() {
        return Err(PinchError::DimensionMismatch { expected: h.dim(), got: g.dim() });
    }
    let audit_count = opts.audit.map(|a| a.0.min(samples.len())).unwrap_or(0);
    let audit_stride = samples.len().checked_div(audit_count).unwrap_or(0);
    let mut per_point: Vec<ComparisonPoint> = samples
        .points
        .par_iter()
        .enumerate()
        .map(|(index, z)| {
            let (c_hg, c_gh) = comparisons_at(&h.metric(z)?, &g.metric(z)?)?;
            let mut audit = None;
            if let Some((_, directions, seed)) = opts.audit {
                if audit_stride > 0 && index % audit_stride == 0 && index / audit_stride < audit_count {
                    let bf = brute_force_comparison(h, g, z, directions, seed ^ index as u64)?;
                    audit = Some(BruteForceAudit { directions, brute_force_min: bf, deviation: bf - c_hg });
                }
            }
            Ok(ComparisonPoint { index, point: z.clone(), c_hg, c_gh, audit })
        })
        .collect::<Result<_>>()?;
    per_point.sort_by_key(|p| p.index);

    let argmin = |f: &dyn Fn(&ComparisonPoint) -> f64| {
        let mut best = 0;
        for (k, p) in per_point.iter().enumerate() {
            if f(p) < f(&per_point[best]) {
                best = k;
            }
        }
        best
    };
    let i_hg = argmin(&|p| p.c_hg);
    let i_gh = argmin(&|p| p.c_gh);
    let max_pair_sum = per_point.iter().map(|p| p.c_hg + p.c_gh).fold(f64::NEG_INFINITY, f64::max);
    let mut report = ComparisonReport {
        h: h.name(),
        g: g.name(),
        region: samples.tag,
        sample_set: samples.id(),
        seed: samples.seed,
        c_hg: per_point[i_hg].c_hg,
        c_gh: per_point[i_gh].c_gh,
        c_hg_point: per_point[i_hg].point.clone(),
        c_gh_point: per_point[i_gh].point.clone(),
        sampled_c_hg: per_point[i_hg].c_hg,
        sampled_c_gh: per_point[i_gh].c_gh,
        max_pair_sum,
        pair_sum_tol: PAIR_SUM_TOL,
        refined: false,
        per_point,
    };

    if let Some(cfg) = &opts.refine {
        for which in [0usize, 1] {
            let mut order: Vec<usize> = (0..report.per_point.len()).collect();
            let key = |p: &ComparisonPoint| if which == 0 { p.c_hg } else { p.c_gh };
            order.sort_by(|&a, &b| key(&report.per_point[a]).total_cmp(&key(&report.per_point[b])));
            let starts: Vec<Point> = order.iter().take(cfg.refine_starts).map(|&k| report.per_point[k].point.clone()).collect();
            let objective = |z: &Point| -> f64 {
                if !samples.contains(z) {
                    return f64::NAN;
                }
                match (h.metric(z), g.metric(z)) {
                    (Ok(hm), Ok(gm)) => comparisons_at(&hm, &gm).map(|c| -if which == 0 { c.0 } else { c.1 }).unwrap_or(f64::NAN),
                    _ => f64::NAN,
                }
            };
            if let (Some((z, v)), _) = refine_max(&objective, &starts, samples, cfg.refine_max_evals) {
                if which == 0 && -v < report.c_hg {
                    report.c_hg = -v;
                    report.c_hg_point = z;
                } else if which == 1 && -v < report.c_gh {
                    report.c_gh = -v;
                    report.c_gh_point = z;
                }
            }
        }
        report.refined = true;
    }
    Ok(report)
}

/// Wu's bound `K₁K₂/(K₁ + K₂)` for `HSC(g + h)` when `HSC(g) ≤ −K₁`, `HSC(h) ≤ −K₂`.
pub fn wu_hsc_bound(k1: f64, k2: f64) -> Result<f64> {
    if !(k1 > 0.0 && k2 > 0.0 && k1.is_finite() && k2.is_finite()) {
        return Err(PinchError::InvalidArgument(format!("Wu bound needs positive K1, K2 (got {k1}, {k2})")));
    }
    Ok(k1 * k2 / (k1 + k2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HbcBound {
    pub value: f64,
    /// A comparison was zero, so the bound carries no information.
    pub degenerate: bool,
}

/// `C(g,h)²B₁ + C(h,g)²B₂`: with `HBC(g) ≤ −B₁` and `HBC(h) ≤ −B₂`,
/// `HBC(h + g) ≤ −value`.
pub fn wu_hbc_bound(b1: f64, b2: f64, c_gh: f64, c_hg: f64) -> Result<HbcBound> {
    if !(b1 > 0.0 && b2 > 0.0 && b1.is_finite() && b2.is_finite()) {
        return Err(PinchError::InvalidArgument(format!("B1, B2 must be positive (got {b1}, {b2})")));
    }
    for c in [c_gh, c_hg] {
        if !(0.0..1.0).contains(&c) {
            return Err(PinchError::InvalidArgument(format!("spherical comparisons lie in [0, 1), got {c}")));
        }
    }
    Ok(HbcBound { value: c_gh * c_gh * b1 + c_hg * c_hg * b2, degenerate: c_gh == 0.0 || c_hg == 0.0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct Ineq4Report {
    pub h: String,
    pub g: String,
    pub sample_set: String,
    pub pairs_per_point: usize,
    pub swapped_weights: bool,
    /// `min (RHS − LHS)` over all evaluated pairs.
    pub min_margin: f64,
    pub worst_point: Point,
    pub evaluations: usize,
    pub tol: f64,
    pub passed: bool,
}

/// Checks, for `(h + g)`-unit `X, Y`,
/// `HBC(h+g)(X,Y) ≤ ‖X‖²_h‖Y‖²_h HBC(h)(X,Y) + ‖X‖²_g‖Y‖²_g HBC(g)(X,Y)`.
/// With `swapped`, the two weight factors are exchanged; that variant is false in
/// general and serves as a negative control.
pub fn verify_inequality_4(
    h: &dyn MetricField,
    g: &dyn MetricField,
    samples: &SampleSet,
    pairs_per_point: usize,
    tol: f64,
    swapped: bool,
    seed: u64,
) -> Result<Ineq4Report> {
    if samples.is_empty() {
        return Err(PinchError::EmptyRegion(samples.id()));
    }
    let margins: Vec<f64> = samples
        .points
        .par_iter()
        .enumerate()
        .map(|(index, z)| {
            let th = curvature_tensor(h, z)?;
            let tg = curvature_tensor(g, z)?;
            let sum_jet = h.jet(z)?.added(&g.jet(z)?)?;
            let ts = crate::curvature::CurvatureTensor::from_jet(&sum_jet, h.is_kahler() && g.is_kahler())?;
            let frame = linalg::unitary_frame(&ts.metric)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
            let n = z.dim();
            let mut worst = f64::INFINITY;
            for _ in 0..pairs_per_point {
                let to_vec = |x: Vec<C64>| -> Vec<C64> { (0..n).map(|i| (0..n).map(|a| frame[(i, a)] * x[a]).sum()).collect() };
                let x = to_vec(random_unit_vector(&mut rng, n));
                let y = to_vec(random_unit_vector(&mut rng, n));
                let lhs = ts.form(&x, &y).re;
                let (rh, rg) = (th.form(&x, &y).re, tg.form(&x, &y).re);
                let rhs = if swapped {
                    let (xh, yh) = (linalg::form_norm_sq(&th.metric, &x), linalg::form_norm_sq(&th.metric, &y));
                    let (xg, yg) = (linalg::form_norm_sq(&tg.metric, &x), linalg::form_norm_sq(&tg.metric, &y));
                    // ‖X‖²_g‖Y‖²_g HBC(h) + ‖X‖²_h‖Y‖²_h HBC(g)
                    (xg * yg) * rh / (xh * yh) + (xh * yh) * rg / (xg * yg)
                } else {
                    rh + rg
                };
                worst = worst.min(rhs - lhs);
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let mut k = 0;
    for (i, m) in margins.iter().enumerate() {
        if *m < margins[k] {
            k = i;
        }
    }
    let min_margin = margins[k];
    Ok(Ineq4Report {
        h: h.name(),
        g: g.name(),
        sample_set: samples.id(),
        pairs_per_point,
        swapped_weights: swapped,
        min_margin,
        worst_point: samples.points[k].clone(),
        evaluations: margins.len() * pairs_per_point,
        tol,
        passed: min_margin >= -tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inapplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct WuReport {
    pub status: CheckStatus,
    pub k1: f64,
    pub k2: f64,
    pub hsc_g_sup: f64,
    pub hsc_h_sup: f64,
    pub hsc_sum_sup: Option<f64>,
    /// `−K₁K₂/(K₁+K₂)` when applicable.
    pub bound: Option<f64>,
    pub margin: Option<f64>,
    pub tol: f64,
    pub reason: Option<String>,
}

fn sampled_hsc_sup(field: &dyn MetricField, samples: &SampleSet, cfg: &OptimizerConfig) -> Result<f64> {
    let sups: Vec<f64> = samples
        .points
        .par_iter()
        .enumerate()
        .map(|(i, z)| curvature_tensor(field, z)?.hsc_sup(cfg, cfg.seed ^ i as u64))
        .collect::<Result<_>>()?;
    Ok(sups.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Wu's theorem on samples: hypotheses `HSC(g) ≤ −K₁`, `HSC(h) ≤ −K₂` are checked
/// first; if they hold, `sup HSC(h + g) ≤ −K₁K₂/(K₁+K₂) + tol` is tested.
pub fn verify_wu_theorem(
    h: &dyn MetricField,
    g: &dyn MetricField,
    k1: f64,
    k2: f64,
    samples: &SampleSet,
    tol: f64,
    cfg: &OptimizerConfig,
) -> Result<WuReport> {
    let hsc_g_sup = sampled_hsc_sup(g, samples, cfg)?;
    let hsc_h_sup = sampled_hsc_sup(h, samples, cfg)?;
    let mut report = WuReport {
        status: CheckStatus::Inapplicable,
        k1,
        k2,
        hsc_g_sup,
        hsc_h_sup,
        hsc_sum_sup: None,
        bound: None,
        margin: None,
        tol,
        reason: None,
    };
    if !(k1 > 0.0 && k2 > 0.0) {
        report.reason = Some(format!("K1 = {k1} and K2 = {k2} must both be positive"));
        return Ok(report);
    }
    if hsc_g_sup > -k1 + tol || hsc_h_sup > -k2 + tol {
        report.reason = Some(format!(
            "hypothesis fails: sup HSC(g) = {hsc_g_sup} vs −K1 = {}, sup HSC(h) = {hsc_h_sup} vs −K2 = {}",
            -k1, -k2
        ));
        return Ok(report);
    }
    let sum = SumView { h, g };
    let sup = sampled_hsc_sup(&sum, samples, cfg)?;
    let bound = -wu_hsc_bound(k1, k2)?;
    let margin = bound + tol - sup;
    report.hsc_sum_sup = Some(sup);
    report.bound = Some(bound);
    report.margin = Some(margin);
    report.status = if margin >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(report)
}

/// `h + g` over borrowed fields.
struct SumView<'a> {
    h: &'a dyn MetricField,
    g: &'a dyn MetricField,
}

impl MetricField for SumView<'_> {
    fn dim(&self) -> usize {
        self.h.dim()
    }
    fn name(&self) -> String {
        format!("({} + {})", self.h.name(), self.g.name())
    }
    fn is_kahler(&self) -> bool {
        self.h.is_kahler() && self.g.is_kahler()
    }
    fn mode(&self) -> crate::jet::EvalMode {
        self.h.mode()
    }
    fn jet(&self, z: &Point) -> Result<crate::MetricJet> {
        self.h.jet(z)?.added(&self.g.jet(z)?)
    }
    fn metric(&self, z: &Point) -> Result<DMatrix<C64>> {
        Ok(self.h.metric(z)? + self.g.metric(z)?)
    }
}

/// A constant together with where it was measured.
#[derive(Clone, Debug, Serialize)]
pub struct Constant {
    pub value: f64,
    pub provenance: String,
    pub region: Option<RegionTag>,
    pub sample_set: Option<String>,
    pub at: Option<Point>,
}

impl Constant {
    fn exact(value: f64, provenance: &str) -> Self {
        Constant { value, provenance: provenance.into(), region: None, sample_set: None, at: None }
    }
}

/// `A₀ = sup HBC(g)` over the `g`-unit sphere bundle restricted to the compact samples.
pub fn compute_a0(g: &dyn MetricField, k_samples: &SampleSet, cfg: &OptimizerConfig) -> Result<(Constant, CurvatureBoundsReport)> {
    let report = hbc_bounds_on_set(g, k_samples, cfg)?;
    let c = Constant {
        value: report.aggregate.hbc_sup,
        provenance: "sup of HBC(g) over the compact".into(),
        region: Some(k_samples.tag),
        sample_set: Some(k_samples.id()),
        at: Some(report.aggregate.hbc_sup_point.clone()),
    };
    Ok((c, report))
}

#[derive(Clone, Debug, Serialize)]
pub struct C0Estimate {
    pub value: f64,
    /// `sup_K λ_max(g, h)`, i.e. the sup of `‖X‖²_g` over `h`-unit `X`.
    pub pencil_sup: f64,
    pub sampled_pencil_sup: f64,
    pub pencil_sup_point: Point,
    pub a0: f64,
    pub b2: f64,
    pub sample_set: String,
}

/// `C₀ = (sup_K λ_max(g, h))² (1 + A₀)/B₂`. Requires `A₀ ≥ 0`; for `A₀ < 0` the
/// pipeline does not need a correction at all.
pub fn compute_c0(
    h: &dyn MetricField,
    g: &dyn MetricField,
    k_samples: &SampleSet,
    b2: f64,
    a0: f64,
    refine: Option<&OptimizerConfig>,
) -> Result<C0Estimate> {
    if !(b2 > 0.0) {
        return Err(PinchError::InvalidArgument(format!("B2 must be positive, got {b2}")));
    }
    if !(a0 >= 0.0) {
        return Err(PinchError::Precondition(format!("C0 is only defined for A0 ≥ 0 (A0 = {a0})")));
    }
    if k_samples.is_empty() {
        return Err(PinchError::EmptyRegion(k_samples.id()));
    }
    let pencil_max = |z: &Point| -> Result<f64> { Ok(linalg::pencil_extremes(&g.metric(z)?, &h.metric(z)?)?.1) };
    let values: Vec<f64> = k_samples.points.par_iter().map(&pencil_max).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sampled = values[order[0]];
    let mut sup = sampled;
    let mut at = k_samples.points[order[0]].clone();
    if let Some(cfg) = refine {
        let starts: Vec<Point> = order.iter().take(cfg.refine_starts).map(|&k| k_samples.points[k].clone()).collect();
        let objective = |z: &Point| if k_samples.contains(z) { pencil_max(z).unwrap_or(f64::NAN) } else { f64::NAN };
        if let (Some((z, v)), _) = refine_max(&objective, &starts, k_samples, cfg.refine_max_evals) {
            if v > sup {
                sup = v;
                at = z;
            }
        }
    }
    Ok(C0Estimate {
        value: sup * sup * (1.0 + a0) / b2,
        pencil_sup: sup,
        sampled_pencil_sup: sampled,
        pencil_sup_point: at,
        a0,
        b2,
        sample_set: k_samples.id(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct C1Estimate {
    pub value: f64,
    /// `C(C₀h, g)² B₂/C₀ + C(g, C₀h)² B₁`.
    pub first_branch: f64,
    /// `C(g, C₀h)²`.
    pub second_branch: f64,
    pub binding: &'static str,
    pub c_c0h_g: f64,
    pub c_g_c0h: f64,
    pub degenerate: bool,
    pub comparison: ComparisonReport,
}

/// `C₁ = min{ C(C₀h, g)² B₂/C₀ + C(g, C₀h)² B₁, C(g, C₀h)² }` with the comparisons
/// measured over `samples`.
pub fn compute_c1(
    h: &ZooEntry,
    g: &dyn MetricField,
    c0: f64,
    b1: f64,
    b2: f64,
    samples: &SampleSet,
    refine: Option<&OptimizerConfig>,
) -> Result<C1Estimate> {
    if !(c0 > 0.0) {
        return Err(PinchError::InvalidArgument(format!("C0 must be positive, got {c0}")));
    }
    if !(b1 > 0.0 && b2 > 0.0) {
        return Err(PinchError::InvalidArgument(format!("B1, B2 must be positive (got {b1}, {b2})")));
    }
    let scaled = zoo::scale(c0, h)?;
    let opts = ComparisonOptions { refine: refine.cloned(), audit: None };
    let comparison = spherical_comparison_with(&scaled, g, samples, &opts)?;
    let (a, b) = (comparison.c_hg, comparison.c_gh);
    let first_branch = a * a * b2 / c0 + b * b * b1;
    let second_branch = b * b;
    let (value, binding) = if first_branch <= second_branch { (first_branch, "first") } else { (second_branch, "second") };
    Ok(C1Estimate { value, first_branch, second_branch, binding, c_c0h_g: a, c_g_c0h: b, degenerate: a == 0.0 || b == 0.0, comparison })
}

/// Parameters of the pinching pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PinchPlan {
    /// The compact is `K = {d(z, ∂Ω) ≥ delta}`.
    pub delta: f64,
    /// The collar is `{collar_out ≤ d(z, ∂Ω) ≤ collar_in}`; `collar_out = None`
    /// means `0.05 · diam Ω`.
    pub collar_out: Option<f64>,
    pub collar_in: Option<f64>,
    pub density: usize,
    pub seed: u64,
    /// Radius of the ball whose Bergman metric is added.
    pub radius: f64,
    pub tol_curv: f64,
    pub optimizer: OptimizerConfig,
}

impl Default for PinchPlan {
    fn default() -> Self {
        PinchPlan {
            delta: 0.5,
            collar_out: None,
            collar_in: None,
            density: 200,
            seed: 0,
            radius: 2.0,
            tol_curv: 1e-6,
            optimizer: OptimizerConfig { refine: true, ..OptimizerConfig::default() },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    HypothesisNotMet,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionSpec {
    pub tag: RegionTag,
    pub sample_set: String,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Constants {
    #[serde(rename = "A0")]
    pub a0: Option<Constant>,
    #[serde(rename = "B1")]
    pub b1: Constant,
    #[serde(rename = "B1_prime")]
    pub b1_prime: Constant,
    #[serde(rename = "B2")]
    pub b2: Constant,
    #[serde(rename = "B2_prime")]
    pub b2_prime: Constant,
    #[serde(rename = "C0")]
    pub c0: Option<Constant>,
    #[serde(rename = "C1")]
    pub c1: Option<Constant>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CombinedBounds {
    pub metric: String,
    pub region: RegionTag,
    pub sample_set: String,
    pub hbc_inf: f64,
    pub hbc_sup: f64,
    pub sampled_hbc_inf: f64,
    pub sampled_hbc_sup: f64,
    pub hbc_sup_point: Point,
    pub nonconverged_points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PinchCertificate {
    pub schema: &'static str,
    pub domain: String,
    pub dimension: usize,
    pub radius: f64,
    pub seed: u64,
    pub compact: RegionSpec,
    pub collar: RegionSpec,
    pub constants: Constants,
    pub c0_details: Option<C0Estimate>,
    pub c1_branches: Option<serde_json::Value>,
    pub short_circuit: bool,
    pub combined: Option<CombinedBounds>,
    /// `−C₁ + tol − sup HBC(combined)`.
    pub margin: Option<f64>,
    pub tol_curv: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
    pub config: serde_json::Value,
}

impl PinchCertificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn region_spec(s: &SampleSet) -> RegionSpec {
    RegionSpec { tag: s.tag, sample_set: s.id(), points: s.len() }
}

fn combined_bounds(report: &CurvatureBoundsReport) -> CombinedBounds {
    CombinedBounds {
        metric: report.field.clone(),
        region: report.region,
        sample_set: report.sample_set.clone(),
        hbc_inf: report.aggregate.hbc_inf,
        hbc_sup: report.aggregate.hbc_sup,
        sampled_hbc_inf: report.aggregate.sampled_hbc_inf,
        sampled_hbc_sup: report.aggregate.sampled_hbc_sup,
        hbc_sup_point: report.aggregate.hbc_sup_point.clone(),
        nonconverged_points: report.optimizer_stats.nonconverged_indices.len(),
    }
}

/// Runs the whole construction for `g` on `domain`. `config` is echoed verbatim
/// into the certificate.
///
/// Errors when `Ω ⊄ B(0, R)` or `g` is not positive definite on the samples. A
/// collar on which `g` is not negatively curved yields a certificate with verdict
/// [`Verdict::HypothesisNotMet`] and no combined metric.
pub fn pinch_combine(
    g: &ZooEntry,
    domain: &DomainSpec,
    plan: &PinchPlan,
    config: serde_json::Value,
) -> Result<(ZooEntry, PinchCertificate)> {
    let n = domain.dim();
    if g.dim() != n {
        return Err(PinchError::DimensionMismatch { expected: n, got: g.dim() });
    }
    let circum = domain.circumradius_about_origin();
    if !(plan.radius > circum) {
        return Err(PinchError::Precondition(format!(
            "Ω must be relatively compact in B(0, R): R = {} but Ω reaches |z| = {circum}",
            plan.radius
        )));
    }
    let diam = domain.diameter();
    let collar_out = plan.collar_out.unwrap_or(0.05 * diam);
    let collar_in = plan.collar_in.unwrap_or(plan.delta);
    let compact = domain.sample_compact(plan.delta, plan.density, plan.seed)?;
    let collar = domain.sample_collar(collar_out, collar_in, plan.density, plan.seed)?;
    let both = compact.union(&collar);
    let farthest = both.points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    if farthest >= plan.radius {
        return Err(PinchError::Precondition(format!("a sample lies at |z| = {farthest} ≥ R = {}", plan.radius)));
    }
    for p in &both.points {
        linalg::min_eigenvalue_checked(&g.metric(p)?, 1e-9)?;
    }

    let cfg = &plan.optimizer;
    let refine = cfg.refine.then_some(cfg);
    let mut warnings = g.warnings();
    let mut notes = vec![
        "all constants are sampled over the declared regions; no claim is made outside them".to_string(),
    ];

    let collar_report = hbc_bounds_on_set(g, &collar, cfg)?;
    if !collar_report.optimizer_stats.nonconverged_indices.is_empty() {
        warnings.push(format!("optimizer did not converge at {} collar points", collar_report.optimizer_stats.nonconverged_indices.len()));
    }
    let region_const = |value: f64, what: &str, r: &CurvatureBoundsReport, at: &Point| Constant {
        value,
        provenance: what.into(),
        region: Some(r.region),
        sample_set: Some(r.sample_set.clone()),
        at: Some(at.clone()),
    };
    let b1 = region_const(-collar_report.aggregate.hbc_sup, "−sup HBC(g) over the collar", &collar_report, &collar_report.aggregate.hbc_sup_point);
    let b1_prime =
        region_const(-collar_report.aggregate.hbc_inf, "−inf HBC(g) over the collar", &collar_report, &collar_report.aggregate.hbc_inf_point);
    let b2 = Constant::exact(-ball_bergman_hsc(n) / 2.0, "space form: HBC(b^R) ≤ −2/(n+1)");
    let b2_prime = Constant::exact(-ball_bergman_hsc(n), "space form: HBC(b^R) ≥ −4/(n+1)");

    let mut cert = PinchCertificate {
        schema: "pinch-cert/1",
        domain: domain.name(),
        dimension: n,
        radius: plan.radius,
        seed: plan.seed,
        compact: region_spec(&compact),
        collar: region_spec(&collar),
        constants: Constants { a0: None, b1: b1.clone(), b1_prime, b2: b2.clone(), b2_prime, c0: None, c1: None },
        c0_details: None,
        c1_branches: None,
        short_circuit: false,
        combined: None,
        margin: None,
        tol_curv: plan.tol_curv,
        verdict: Verdict::HypothesisNotMet,
        notes: Vec::new(),
        warnings: Vec::new(),
        config,
    };

    if !(b1.value > 0.0) {
        notes.push(format!("g is not negatively curved on the collar: sup HBC(g) = {}", -b1.value));
        cert.notes = notes;
        cert.warnings = warnings;
        return Ok((g.clone(), cert));
    }

    let (a0, _) = compute_a0(g, &compact, cfg)?;
    cert.constants.a0 = Some(a0.clone());
    let bergman = zoo::ball_bergman(plan.radius, n)?;

    let (combined, c0_value, c1_value) = if a0.value < 0.0 {
        // HBC(g) ≤ A₀ < 0 on K and ≤ −B₁ on the collar already
        notes.push("A0 < 0: g is already negatively pinched on the compact; C0 = 0 and the metric is unchanged".into());
        cert.short_circuit = true;
        let c1 = (-a0.value).min(b1.value);
        (g.clone(), 0.0, c1)
    } else {
        let c0 = compute_c0(&bergman, g, &compact, b2.value, a0.value, refine)?;
        let c1 = compute_c1(&bergman, g, c0.value, b1.value, b2.value, &both, refine)?;
        if c1.degenerate {
            warnings.push("a spherical comparison vanished; C1 is degenerate".into());
        }
        cert.c1_branches = Some(serde_json::json!({
            "first_branch": c1.first_branch,
            "second_branch": c1.second_branch,
            "binding": c1.binding,
            "C_C0h_g": c1.c_c0h_g,
            "C_g_C0h": c1.c_g_c0h,
            "C_C0h_g_at": c1.comparison.c_hg_point,
            "C_g_C0h_at": c1.comparison.c_gh_point,
            "sample_set": c1.comparison.sample_set,
        }));
        let c0_value = c0.value;
        cert.c0_details = Some(c0);
        let combined = zoo::sum(g, &zoo::scale(c0_value, &bergman)?)?;
        (combined, c0_value, c1.value)
    };
    cert.constants.c0 = Some(Constant {
        value: c0_value,
        provenance: if cert.short_circuit { "short circuit (A0 < 0)".into() } else { "(sup_K λ_max(g, b^R))² (1 + A0)/B2".into() },
        region: Some(compact.tag),
        sample_set: Some(compact.id()),
        at: cert.c0_details.as_ref().map(|c| c.pencil_sup_point.clone()),
    });
    cert.constants.c1 = Some(Constant {
        value: c1_value,
        provenance: if cert.short_circuit {
            "min(−A0, B1)".into()
        } else {
            "min{C(C0 b^R, g)² B2/C0 + C(g, C0 b^R)² B1, C(g, C0 b^R)²}".into()
        },
        region: Some(both.tag),
        sample_set: Some(both.id()),
        at: None,
    });

    let combined_report = hbc_bounds_on_set(&combined, &both, cfg)?;
    if !combined_report.optimizer_stats.nonconverged_indices.is_empty() {
        warnings.push(format!(
            "optimizer did not converge at {} points of the combined sweep",
            combined_report.optimizer_stats.nonconverged_indices.len()
        ));
    }
    let bounds = combined_bounds(&combined_report);
    let margin = -c1_value + plan.tol_curv - bounds.hbc_sup;
    let pass = c1_value > 0.0 && (c0_value > 0.0 || cert.short_circuit) && margin >= 0.0 && bounds.hbc_inf.is_finite();
    if cert.short_circuit {
        notes.push("verdict certifies the original metric with C0 = 0".into());
    }
    cert.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    cert.margin = Some(margin);
    cert.combined = Some(bounds);
    cert.notes = notes;
    cert.warnings = warnings;
    Ok((combined, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{ball_bergman, euclidean, scale};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn comparison_of_a_metric_with_itself_is_one_half() {
        let b = ball_bergman(1.0, 2).unwrap();
        let z = Point::new(vec![c(0.3, 0.1), c(0.0, -0.4)]);
        assert!((spherical_comparison_at(&b, &b, &z).unwrap() - 0.5).abs() < 1e-12);
        let s = scale(3.0, &b).unwrap();
        assert!((spherical_comparison_at(&s, &b, &z).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn wu_bounds() {
        assert!((wu_hsc_bound(4.0, 2.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(wu_hsc_bound(0.0, 1.0).is_err());
        let b = wu_hbc_bound(2.0, 2.0, 0.5, 0.5).unwrap();
        assert_eq!(b, HbcBound { value: 1.0, degenerate: false });
        assert!(wu_hbc_bound(1.0, 1.0, 0.0, 0.3).unwrap().degenerate);
        assert!(wu_hbc_bound(1.0, 1.0, 1.0, 0.3).is_err());
    }

    #[test]
    fn c0_and_c1_symmetric_cases() {
        let dom = DomainSpec::unit_ball(1);
        let k = dom.sample_compact(0.5, 20, 1).unwrap();
        let b = ball_bergman(1.0, 1).unwrap();
        let est = compute_c0(&b, &b, &k, 1.0, 0.0, None).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
        let four = scale(4.0, &b).unwrap();
        let est = compute_c0(&four, &b, &k, 1.0, 0.0, None).unwrap();
        assert!((est.pencil_sup - 0.25).abs() < 1e-12 && (est.value - 1.0 / 16.0).abs() < 1e-12);
        for bb in [1.0, 0.3] {
            let c1 = compute_c1(&b, &b, 1.0, bb, bb, &k, None).unwrap();
            assert!((c1.value - (bb / 2.0).min(0.25)).abs() < 1e-12);
        }
        let c1 = compute_c1(&b, &b, 1.0, 10.0, 10.0, &k, None).unwrap();
        assert_eq!(c1.binding, "second");
        assert!(compute_c0(&b, &b, &k, 1.0, -0.1, None).is_err());
    }

    #[test]
    fn euclidean_fails_the_collar_hypothesis() {
        let dom = DomainSpec::unit_ball(1);
        let plan = PinchPlan { density: 20, optimizer: OptimizerConfig::default(), ..PinchPlan::default() };
        let (_, cert) = pinch_combine(&euclidean(1), &dom, &plan, serde_json::Value::Null).unwrap();
        assert_eq!(cert.verdict, Verdict::HypothesisNotMet);
        let small = PinchPlan { radius: 0.9, ..plan };
        assert!(matches!(pinch_combine(&euclidean(1), &dom, &small, serde_json::Value::Null), Err(PinchError::Precondition(_))));
    }
}
