//! Curvature of a Hermitian metric from its jet.
//!
//! The tensor is
//!
//! ```text
//! R_{i\bar j k\bar l} = κ ( −∂_k ∂_{\bar l} h_{i\bar j} + Σ h^{p\bar q} ∂_k h_{i\bar q} ∂_{\bar l} h_{p\bar j} )
//! ```
//!
//! with the normalization constant `κ = CURVATURE_SCALE = 2`. The factor comes from
//! the convention `Δ = 2Δ_c` for the complex Laplacian: with it, the holomorphic
//! sectional curvature of the disc metric `2/(1 − |z|²)²` obtained from the tensor
//! coincides with `−(2/‖X‖²) ∂∂̄ log u_h(0)` for the identity map, namely `−2`,
//! and the ball Bergman metric of `ℂⁿ` has constant HSC `−4/(n+1)`. Without `κ`
//! the two computations differ by exactly a factor two, so the constant is fixed
//! once here rather than at the call sites. Every derived quantity (HSC, HBC,
//! Ricci) inherits it.
//!
//! HSC and HBC are `R(X, X̄, X, X̄)/‖X‖⁴` and `R(X, X̄, Y, Ȳ)/(‖X‖²‖Y‖²)` with
//! `R(X, X̄, Y, Ȳ) = Σ R_{i\bar j k\bar l} X_i X̄_j Y_k Ȳ_l`.

mod maps;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{Point, RegionTag, SampleSet, TangentVector};
use crate::error::{PinchError, Result};
use crate::jet::{MetricField, MetricJet};
use crate::linalg;
use crate::optimize::{maximize_on_spheres, nelder_mead_max, OptimizerConfig, QuarticForm, SphereOptimum};
use crate::C64;

pub use maps::{
    chern_lu_residual, schwarz_yau_check, AffineMap, ChernLuReport, ClosureMap, HolomorphicMap, MapJet, SchwarzYauPoint,
    SchwarzYauReport,
};

/// Normalization of the curvature tensor; see the module documentation.
pub const CURVATURE_SCALE: f64 = 2.0;

/// Metrics with a larger spectral condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Constant holomorphic sectional curvature `−4/(n+1)` of the ball Bergman metric.
pub fn ball_bergman_hsc(n: usize) -> f64 {
    -4.0 / (n as f64 + 1.0)
}

#[derive(Clone, Debug)]
pub struct CurvatureTensor {
    pub point: Point,
    pub n: usize,
    /// `components[((i n + j) n + k) n + l] = R_{i\bar j k\bar l}`.
    pub components: Vec<C64>,
    pub metric: DMatrix<C64>,
    /// Error estimate propagated from the jet tolerance.
    pub tolerance: f64,
    pub condition: f64,
    pub kahler: bool,
}

fn seed_for(base: u64, index: usize) -> u64 {
    base ^ (index as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

impl CurvatureTensor {
    pub fn from_jet(jet: &MetricJet, kahler: bool) -> Result<Self> {
        let n = jet.n();
        linalg::min_eigenvalue_checked(&jet.h, crate::jet::HERMITIAN_TOL)?;
        let condition = linalg::condition_number(&jet.h);
        if !(condition <= MAX_CONDITION) {
            return Err(PinchError::IllConditioned { condition });
        }
        // H x = b by LU: h is Hermitian but the solve acts on h itself, not on its
        // conjugate, so a plain factorization of h is used.
        let lu = jet.h.clone().lu();
        let mut components = vec![ZERO; n.pow(4)];
        let mut max_d1: f64 = 0.0;
        for k in 0..n {
            let dk = DMatrix::from_fn(n, n, |i, q| jet.dh(i, q, k));
            for l in 0..n {
                let dl = DMatrix::from_fn(n, n, |p, j| jet.dbar_h(p, j, l));
                let solved = lu.solve(&dl).ok_or(PinchError::IllConditioned { condition })?;
                let corr = &dk * solved;
                for i in 0..n {
                    for j in 0..n {
                        let idx = jet.idx4(i, j, k, l);
                        components[idx] = (corr[(i, j)] - jet.ddbar_h[idx]) * CURVATURE_SCALE;
                    }
                }
            }
        }
        for v in jet.dh.iter() {
            max_d1 = max_d1.max(v.norm());
        }
        let ev = linalg::hermitian_eigenvalues(&jet.h);
        let inv = 1.0 / ev[0];
        let nn = n as f64;
        let tolerance =
            CURVATURE_SCALE * jet.tolerance * (1.0 + 2.0 * nn * nn * max_d1 * inv + nn * nn * max_d1 * max_d1 * inv * inv);
        Ok(CurvatureTensor { point: jet.point.clone(), n, components, metric: jet.h.clone(), tolerance, condition, kahler })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        let n = self.n;
        self.components[((i * n + j) * n + k) * n + l]
    }

    /// `R(X, X̄, Y, Ȳ)`.
    pub fn form(&self, x: &[C64], y: &[C64]) -> C64 {
        let n = self.n;
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                let xij = x[i] * x[j].conj();
                for k in 0..n {
                    for l in 0..n {
                        acc += self.get(i, j, k, l) * xij * y[k] * y[l].conj();
                    }
                }
            }
        }
        acc
    }

    fn check_vector(&self, x: &[C64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(PinchError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let norm = linalg::form_norm_sq(&self.metric, x);
        if !(norm > 0.0) {
            return Err(PinchError::InvalidArgument("tangent vector must be nonzero".into()));
        }
        Ok(norm)
    }

    pub fn hsc(&self, x: &[C64]) -> Result<f64> {
        let nx = self.check_vector(x)?;
        Ok(self.form(x, x).re / (nx * nx))
    }

    pub fn hbc(&self, x: &[C64], y: &[C64]) -> Result<f64> {
        let nx = self.check_vector(x)?;
        let ny = self.check_vector(y)?;
        Ok(self.form(x, y).re / (nx * ny))
    }

    /// `Ric_{k\bar l} = Σ h^{i\bar j} R_{i\bar j k\bar l}`.
    pub fn ricci(&self) -> Result<DMatrix<C64>> {
        let n = self.n;
        let inv = self.metric.clone().try_inverse().ok_or(PinchError::IllConditioned { condition: self.condition })?;
        Ok(DMatrix::from_fn(n, n, |k, l| {
            let mut acc = ZERO;
            for i in 0..n {
                for j in 0..n {
                    // h^{i\bar j} is entry (j, i) of the matrix inverse
                    acc += inv[(j, i)] * self.get(i, j, k, l);
                }
            }
            acc
        }))
    }

    /// Largest defects of `R_{i\bar j k\bar l} = conj(R_{j\bar i l\bar k})` and of
    /// the Kähler exchange `R_{i\bar j k\bar l} = R_{k\bar j i\bar l}`.
    pub fn symmetry_defects(&self) -> (f64, f64) {
        let n = self.n;
        let (mut conj, mut exch): (f64, f64) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.get(i, j, k, l);
                        conj = conj.max((r - self.get(j, i, l, k).conj()).norm());
                        exch = exch.max((r - self.get(k, j, i, l)).norm());
                    }
                }
            }
        }
        (conj, exch)
    }

    /// Components in an `h`-unitary frame, where the unit spheres of `h` become
    /// the standard unit spheres.
    pub fn frame_components(&self) -> Result<Vec<C64>> {
        let n = self.n;
        let p = linalg::unitary_frame(&self.metric)?;
        let pc = p.map(|z| z.conj());
        let mut cur = self.components.clone();
        // transform one slot at a time; slots 0 and 2 take P, slots 1 and 3 take conj(P)
        for slot in 0..4 {
            let m = if slot % 2 == 0 { &p } else { &pc };
            let mut next = vec![ZERO; cur.len()];
            for idx in 0..cur.len() {
                let mut digits = [idx / (n * n * n), (idx / (n * n)) % n, (idx / n) % n, idx % n];
                let a = digits[slot];
                let mut acc = ZERO;
                for s in 0..n {
                    digits[slot] = s;
                    let src = ((digits[0] * n + digits[1]) * n + digits[2]) * n + digits[3];
                    acc += cur[src] * m[(s, a)];
                }
                next[idx] = acc;
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Extremes of HBC and HSC over the unit sphere bundle of `h` at this point.
    pub fn extrema(&self, cfg: &OptimizerConfig, seed: u64) -> Result<PointExtrema> {
        let t = self.frame_components()?;
        let neg: Vec<C64> = t.iter().map(|z| -z).collect();
        let pos = QuarticForm::new(self.n, &t);
        let negf = QuarticForm::new(self.n, &neg);
        let hbc_max = maximize_on_spheres(&pos, false, cfg, seed);
        let hbc_min = maximize_on_spheres(&negf, false, cfg, seed.wrapping_add(1));
        let hsc_max = maximize_on_spheres(&pos, true, cfg, seed.wrapping_add(2));
        let hsc_min = maximize_on_spheres(&negf, true, cfg, seed.wrapping_add(3));
        Ok(PointExtrema { hbc_max, hbc_min, hsc_max, hsc_min })
    }

    fn hbc_max_only(&self, cfg: &OptimizerConfig, seed: u64, sign: f64) -> Result<f64> {
        let t: Vec<C64> = self.frame_components()?.into_iter().map(|z| z * sign).collect();
        Ok(maximize_on_spheres(&QuarticForm::new(self.n, &t), false, cfg, seed).value)
    }

    /// Largest holomorphic sectional curvature at this point.
    pub fn hsc_sup(&self, cfg: &OptimizerConfig, seed: u64) -> Result<f64> {
        let t = self.frame_components()?;
        Ok(maximize_on_spheres(&QuarticForm::new(self.n, &t), true, cfg, seed).value)
    }
}

/// Sphere-bundle optimization results at one point. The `*_min` entries hold the
/// maximization of `−R`, so their values are negated curvatures.
#[derive(Clone, Debug)]
pub struct PointExtrema {
    pub hbc_max: SphereOptimum,
    pub hbc_min: SphereOptimum,
    pub hsc_max: SphereOptimum,
    pub hsc_min: SphereOptimum,
}

impl PointExtrema {
    pub fn hbc(&self) -> (f64, f64) {
        (-self.hbc_min.value, self.hbc_max.value)
    }

    pub fn hsc(&self) -> (f64, f64) {
        (-self.hsc_min.value, self.hsc_max.value)
    }

    pub fn converged(&self) -> bool {
        self.hbc_max.converged && self.hbc_min.converged && self.hsc_max.converged && self.hsc_min.converged
    }
}

pub fn curvature_tensor(field: &dyn MetricField, z: &Point) -> Result<CurvatureTensor> {
    if z.dim() != field.dim() {
        return Err(PinchError::DimensionMismatch { expected: field.dim(), got: z.dim() });
    }
    CurvatureTensor::from_jet(&field.jet(z)?, field.is_kahler())
}

fn vector_at(z: &Point, x: &TangentVector) -> Result<()> {
    if x.base.dim() != z.dim() {
        return Err(PinchError::DimensionMismatch { expected: z.dim(), got: x.base.dim() });
    }
    if x.is_zero() {
        return Err(PinchError::InvalidArgument("tangent vector must be nonzero".into()));
    }
    Ok(())
}

pub fn hsc(field: &dyn MetricField, z: &Point, x: &TangentVector) -> Result<f64> {
    vector_at(z, x)?;
    curvature_tensor(field, z)?.hsc(&x.components)
}

pub fn hbc(field: &dyn MetricField, z: &Point, x: &TangentVector, y: &TangentVector) -> Result<f64> {
    vector_at(z, x)?;
    vector_at(z, y)?;
    curvature_tensor(field, z)?.hbc(&x.components, &y.components)
}

pub fn ricci(field: &dyn MetricField, z: &Point) -> Result<DMatrix<C64>> {
    curvature_tensor(field, z)?.ricci()
}

/// `(min, max)` of HBC over pairs of `h`-unit vectors at `z`, with diagnostics.
pub fn hbc_extrema(field: &dyn MetricField, z: &Point, cfg: &OptimizerConfig) -> Result<PointExtrema> {
    curvature_tensor(field, z)?.extrema(cfg, cfg.seed)
}

/// `(min, max)` of HSC over `h`-unit vectors at `z`.
pub fn hsc_extrema(field: &dyn MetricField, z: &Point, cfg: &OptimizerConfig) -> Result<(f64, f64)> {
    Ok(hbc_extrema(field, z, cfg)?.hsc())
}

#[derive(Clone, Debug, Serialize)]
pub struct PointBounds {
    pub index: usize,
    pub point: Point,
    pub hbc_min: f64,
    pub hbc_max: f64,
    pub hsc_min: f64,
    pub hsc_max: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub hbc_inf: f64,
    pub hbc_sup: f64,
    pub hsc_inf: f64,
    pub hsc_sup: f64,
    /// HBC range over the sample points alone, before refinement.
    pub sampled_hbc_inf: f64,
    pub sampled_hbc_sup: f64,
    pub hbc_inf_point: Point,
    pub hbc_sup_point: Point,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementStats {
    pub starts: usize,
    pub evaluations: usize,
    pub sup_gain: f64,
    pub inf_gain: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizerStats {
    pub restarts: usize,
    pub samples_per_point: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub points: usize,
    pub converged_points: usize,
    pub nonconverged_indices: Vec<usize>,
    pub refinement: Option<RefinementStats>,
}

/// HBC/HSC ranges over a sample region. All bounds are relative to the sampled
/// region and say nothing about points outside it.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureBoundsReport {
    pub field: String,
    pub region: RegionTag,
    pub sample_set: String,
    pub seed: u64,
    pub per_point: Vec<PointBounds>,
    pub aggregate: Aggregate,
    pub optimizer_stats: OptimizerStats,
}

impl CurvatureBoundsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.per_point.first().map(|p| p.point.dim()).unwrap_or(0);
        let mut header = vec!["index".to_string()];
        header.extend((1..=n).flat_map(|k| [format!("re(z{k})"), format!("im(z{k})")]));
        header.extend(["hbc_min", "hbc_max", "hsc_min", "hsc_max", "converged", "units"].map(String::from));
        w.write_record(&header)?;
        for p in &self.per_point {
            let mut rec = vec![p.index.to_string()];
            rec.extend(p.point.real_coords().iter().map(|v| format!("{v:e}")));
            rec.extend([p.hbc_min, p.hbc_max, p.hsc_min, p.hsc_max].iter().map(|v| format!("{v:e}")));
            rec.push(p.converged.to_string());
            rec.push("curvature of unit vectors (dimensionless)".into());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-point sphere-bundle extremes over `samples`, aggregated in sample order.
/// With `cfg.refine`, the best points are improved by Nelder–Mead over positions
/// inside the sample region; the aggregate can only widen.
pub fn hbc_bounds_on_set(field: &dyn MetricField, samples: &SampleSet, cfg: &OptimizerConfig) -> Result<CurvatureBoundsReport> {
    if samples.is_empty() {
        return Err(PinchError::EmptyRegion(samples.id()));
    }
    let per_point: Vec<PointBounds> = samples
        .points
        .par_iter()
        .enumerate()
        .map(|(index, z)| {
            let ext = curvature_tensor(field, z)?.extrema(cfg, seed_for(cfg.seed, index))?;
            let (hbc_min, hbc_max) = ext.hbc();
            let (hsc_min, hsc_max) = ext.hsc();
            Ok(PointBounds { index, point: z.clone(), hbc_min, hbc_max, hsc_min, hsc_max, converged: ext.converged() })
        })
        .collect::<Result<_>>()?;

    let first = &per_point[0];
    let (mut inf_i, mut sup_i) = (0, 0);
    let (mut hsc_inf, mut hsc_sup) = (first.hsc_min, first.hsc_max);
    for (k, p) in per_point.iter().enumerate() {
        if p.hbc_min < per_point[inf_i].hbc_min {
            inf_i = k;
        }
        if p.hbc_max > per_point[sup_i].hbc_max {
            sup_i = k;
        }
        hsc_inf = hsc_inf.min(p.hsc_min);
        hsc_sup = hsc_sup.max(p.hsc_max);
    }
    let sampled_inf = per_point[inf_i].hbc_min;
    let sampled_sup = per_point[sup_i].hbc_max;
    let mut aggregate = Aggregate {
        hbc_inf: sampled_inf,
        hbc_sup: sampled_sup,
        hsc_inf,
        hsc_sup,
        sampled_hbc_inf: sampled_inf,
        sampled_hbc_sup: sampled_sup,
        hbc_inf_point: per_point[inf_i].point.clone(),
        hbc_sup_point: per_point[sup_i].point.clone(),
    };

    let mut refinement = None;
    if cfg.refine {
        let mut evaluations = 0;
        for sign in [1.0, -1.0] {
            let mut order: Vec<usize> = (0..per_point.len()).collect();
            let key = |p: &PointBounds| if sign > 0.0 { p.hbc_max } else { -p.hbc_min };
            order.sort_by(|&a, &b| key(&per_point[b]).total_cmp(&key(&per_point[a])));
            let starts: Vec<Point> = order.iter().take(cfg.refine_starts).map(|&k| per_point[k].point.clone()).collect();
            let objective = |z: &Point| -> f64 {
                if !samples.contains(z) {
                    return f64::NAN;
                }
                curvature_tensor(field, z)
                    .and_then(|t| t.hbc_max_only(cfg, seed_for(cfg.seed, usize::MAX), sign))
                    .unwrap_or(f64::NAN)
            };
            let (best, evals) = refine_max(&objective, &starts, samples, cfg.refine_max_evals);
            evaluations += evals;
            if let Some((z, v)) = best {
                if sign > 0.0 && v > aggregate.hbc_sup {
                    aggregate.hbc_sup = v;
                    aggregate.hbc_sup_point = z;
                } else if sign < 0.0 && -v < aggregate.hbc_inf {
                    aggregate.hbc_inf = -v;
                    aggregate.hbc_inf_point = z;
                }
            }
        }
        refinement = Some(RefinementStats {
            starts: cfg.refine_starts,
            evaluations,
            sup_gain: aggregate.hbc_sup - sampled_sup,
            inf_gain: sampled_inf - aggregate.hbc_inf,
        });
    }

    let nonconverged_indices: Vec<usize> = per_point.iter().filter(|p| !p.converged).map(|p| p.index).collect();
    let optimizer_stats = OptimizerStats {
        restarts: cfg.restarts,
        samples_per_point: cfg.samples,
        grad_tol: cfg.grad_tol,
        max_iter: cfg.max_iter,
        points: per_point.len(),
        converged_points: per_point.len() - nonconverged_indices.len(),
        nonconverged_indices,
        refinement,
    };
    Ok(CurvatureBoundsReport {
        field: field.name(),
        region: samples.tag,
        sample_set: samples.id(),
        seed: samples.seed,
        per_point,
        aggregate,
        optimizer_stats,
    })
}

/// Characteristic length of a sample region, used as the Nelder–Mead simplex size.
fn region_scale(samples: &SampleSet) -> f64 {
    let bbox = samples.domain.bounding_box();
    let extent = bbox.iter().map(|[lo, hi]| hi - lo).fold(0.0, f64::max);
    let scale = match samples.tag {
        RegionTag::Collar { delta_out, delta_in } => (delta_in - delta_out).min(extent),
        _ => extent,
    };
    0.05 * scale
}

/// Maximizes `objective` over positions in the sample region, starting from each of
/// `starts` in parallel, and returns the best point found (sequential fold in
/// start order) and the number of evaluations.
pub fn refine_max(
    objective: &(dyn Fn(&Point) -> f64 + Sync),
    starts: &[Point],
    samples: &SampleSet,
    max_evals: usize,
) -> (Option<(Point, f64)>, usize) {
    let scale = region_scale(samples);
    let results: Vec<(Vec<f64>, f64, usize)> = starts
        .par_iter()
        .map(|z0| {
            let mut evals = 0;
            let (x, v) = nelder_mead_max(
                |x| {
                    evals += 1;
                    objective(&Point::from_real(x))
                },
                &z0.real_coords(),
                scale,
                max_evals,
                1e-12,
            );
            (x, v, evals)
        })
        .collect();
    let mut best: Option<(Point, f64)> = None;
    let mut total = 0;
    for (x, v, e) in results {
        total += e;
        if v.is_finite() && best.as_ref().map_or(true, |b| v > b.1) {
            best = Some((Point::from_real(&x), v));
        }
    }
    (best, total)
}
