//! Metric jets: the matrix `h_{i\bar j}(z)` together with `∂_{z_k} h_{i\bar j}`,
//! `∂_{\bar z_l} h_{i\bar j}` and `∂_{z_k}∂_{\bar z_l} h_{i\bar j}`, either from
//! closed forms or from finite differences of a Kähler potential.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::domain::Point;
use crate::error::{PinchError, Result};
use crate::linalg;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Hermiticity tolerance enforced on every jet.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct MetricJet {
    pub point: Point,
    pub h: DMatrix<C64>,
    /// `dh[idx3(i, j, k)] = ∂_{z_k} h_{i\bar j}`.
    pub dh: Vec<C64>,
    /// `dbar_h[idx3(i, j, l)] = ∂_{\bar z_l} h_{i\bar j}`.
    pub dbar_h: Vec<C64>,
    /// `ddbar_h[idx4(i, j, k, l)] = ∂_{z_k}∂_{\bar z_l} h_{i\bar j}`.
    pub ddbar_h: Vec<C64>,
    /// Estimated absolute error of the entries (0 for closed forms).
    pub tolerance: f64,
    /// Same, for `h` alone. Rounding in the fourth derivatives usually dominates `tolerance`.
    pub metric_tolerance: f64,
}

impl MetricJet {
    pub fn zeros(point: Point) -> Self {
        let n = point.dim();
        MetricJet {
            point,
            h: DMatrix::zeros(n, n),
            dh: vec![ZERO; n * n * n],
            dbar_h: vec![ZERO; n * n * n],
            ddbar_h: vec![ZERO; n * n * n * n],
            tolerance: 0.0,
            metric_tolerance: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    #[inline]
    pub fn idx3(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.n();
        (i * n + j) * n + k
    }

    #[inline]
    pub fn idx4(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        let n = self.n();
        ((i * n + j) * n + k) * n + l
    }

    pub fn dh(&self, i: usize, j: usize, k: usize) -> C64 {
        self.dh[self.idx3(i, j, k)]
    }

    pub fn dbar_h(&self, i: usize, j: usize, l: usize) -> C64 {
        self.dbar_h[self.idx3(i, j, l)]
    }

    pub fn ddbar_h(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.ddbar_h[self.idx4(i, j, k, l)]
    }

    pub fn scaled(&self, lambda: f64) -> MetricJet {
        let s = |v: &Vec<C64>| v.iter().map(|z| z * lambda).collect::<Vec<_>>();
        MetricJet {
            point: self.point.clone(),
            h: &self.h * C64::new(lambda, 0.0),
            dh: s(&self.dh),
            dbar_h: s(&self.dbar_h),
            ddbar_h: s(&self.ddbar_h),
            tolerance: self.tolerance * lambda.abs(),
            metric_tolerance: self.metric_tolerance * lambda.abs(),
        }
    }

    /// Componentwise sum; both jets must sit at the same point.
    pub fn added(&self, other: &MetricJet) -> Result<MetricJet> {
        if self.n() != other.n() {
            return Err(PinchError::DimensionMismatch { expected: self.n(), got: other.n() });
        }
        let add = |a: &Vec<C64>, b: &Vec<C64>| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
        Ok(MetricJet {
            point: self.point.clone(),
            h: &self.h + &other.h,
            dh: add(&self.dh, &other.dh),
            dbar_h: add(&self.dbar_h, &other.dbar_h),
            ddbar_h: add(&self.ddbar_h, &other.ddbar_h),
            tolerance: self.tolerance + other.tolerance,
            metric_tolerance: self.metric_tolerance + other.metric_tolerance,
        })
    }

    /// Largest componentwise deviation between two jets, per block `(h, dh, dbar_h, ddbar_h)`.
    pub fn block_deviation(&self, other: &MetricJet) -> [f64; 4] {
        let dev = |a: &[C64], b: &[C64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        [
            dev(self.h.as_slice(), other.h.as_slice()),
            dev(&self.dh, &other.dh),
            dev(&self.dbar_h, &other.dbar_h),
            dev(&self.ddbar_h, &other.ddbar_h),
        ]
    }

    pub fn max_deviation(&self, other: &MetricJet) -> f64 {
        self.block_deviation(other).into_iter().fold(0.0, f64::max)
    }

    /// Defects of the jet symmetries: Hermiticity of `h`,
    /// `∂̄_l h_{i\bar j} = conj(∂_l h_{j\bar i})` and
    /// `∂∂̄h(i, j, k, l) = conj(∂∂̄h(j, i, l, k))`.
    pub fn symmetry_defects(&self) -> [f64; 3] {
        let n = self.n();
        let herm = linalg::hermitian_deviation(&self.h);
        let mut conj1: f64 = 0.0;
        let mut conj2: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    conj1 = conj1.max((self.dbar_h(i, j, k) - self.dh(j, i, k).conj()).norm());
                    for l in 0..n {
                        conj2 = conj2.max((self.ddbar_h(i, j, k, l) - self.ddbar_h(j, i, l, k).conj()).norm());
                    }
                }
            }
        }
        [herm, conj1, conj2]
    }

    /// `max |∂_k h_{i\bar j} − ∂_i h_{k\bar j}|`, zero for Kähler metrics.
    pub fn kahler_defect(&self) -> f64 {
        let n = self.n();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    d = d.max((self.dh(i, j, k) - self.dh(k, j, i)).norm());
                }
            }
        }
        d
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Dump<'a> {
            point: &'a Point,
            n: usize,
            layout: &'static str,
            h: Vec<[f64; 2]>,
            dh: Vec<[f64; 2]>,
            dbar_h: Vec<[f64; 2]>,
            ddbar_h: Vec<[f64; 2]>,
            tolerance: f64,
            metric_tolerance: f64,
        }
        let pairs = |v: &mut dyn Iterator<Item = C64>| v.map(|z| [z.re, z.im]).collect::<Vec<_>>();
        let n = self.n();
        let h_rows: Vec<C64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.h[(i, j)]).collect();
        let dump = Dump {
            point: &self.point,
            n,
            layout: "row-major: h[i][j], dh[i][j][k], dbar_h[i][j][l], ddbar_h[i][j][k][l]",
            h: pairs(&mut h_rows.into_iter()),
            dh: pairs(&mut self.dh.iter().copied()),
            dbar_h: pairs(&mut self.dbar_h.iter().copied()),
            ddbar_h: pairs(&mut self.ddbar_h.iter().copied()),
            tolerance: self.tolerance,
            metric_tolerance: self.metric_tolerance,
        };
        Ok(serde_json::to_string(&dump)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    ClosedFormJet,
    PotentialFd,
}

/// A real potential `φ` on (part of) ℂⁿ, evaluated on the `2n` real coordinates.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Radius of a ball around `z` on which `φ` is smooth; `None` when `φ` is entire.
    fn smooth_radius(&self, z: &Point) -> Option<f64>;
}

/// Closure-backed potential.
pub struct FnPotential<F> {
    dim: usize,
    f: F,
    radius: Option<Arc<dyn Fn(&Point) -> f64 + Send + Sync>>,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnPotential<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnPotential { dim, f, radius: None }
    }

    pub fn with_smooth_radius(mut self, r: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.radius = Some(Arc::new(r));
        self
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Potential for FnPotential<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn smooth_radius(&self, z: &Point) -> Option<f64> {
        self.radius.as_ref().map(|r| r(z))
    }
}

/// A Hermitian metric field on a domain of ℂⁿ.
///
/// Implementations are pure: the same point always produces the same jet.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;
    fn name(&self) -> String;
    fn is_kahler(&self) -> bool;
    fn mode(&self) -> EvalMode;
    fn jet(&self, z: &Point) -> Result<MetricJet>;

    /// The matrix `h_{i\bar j}(z)` alone.
    fn metric(&self, z: &Point) -> Result<DMatrix<C64>> {
        Ok(self.jet(z)?.h)
    }

    /// A Kähler potential for the field, when one is known.
    fn potential(&self) -> Option<Arc<dyn Potential>> {
        None
    }

    /// Accumulated numerical caveats (quadrature error, truncation, …).
    fn warnings(&self) -> Vec<String> {
        Vec::new()
    }
}

pub type SharedField = Arc<dyn MetricField>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FdOrder {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "4")]
    Four,
}

impl FdOrder {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            2 => Ok(FdOrder::Two),
            4 => Ok(FdOrder::Four),
            o => Err(PinchError::InvalidArgument(format!("finite-difference order must be 2 or 4, got {o}"))),
        }
    }
}

/// `ε^{1/6} · max(1, |z|)`.
pub fn default_step(z: &Point) -> f64 {
    f64::EPSILON.powf(1.0 / 6.0) * z.norm().max(1.0)
}

/// Largest stencil offset, in units of the step, used by the fourth derivatives.
const STENCIL_REACH: f64 = 4.0;

/// Central-difference derivatives of `φ` on an integer lattice `x0 + step · offset`.
struct Stencil<'a> {
    phi: &'a dyn Potential,
    x0: Vec<f64>,
    step: f64,
    cache: HashMap<Vec<i16>, f64>,
}

impl<'a> Stencil<'a> {
    fn new(phi: &'a dyn Potential, x0: Vec<f64>, step: f64) -> Self {
        Stencil { phi, x0, step, cache: HashMap::new() }
    }

    fn eval(&mut self, off: &[i16]) -> Result<f64> {
        if let Some(v) = self.cache.get(off) {
            return Ok(*v);
        }
        let x: Vec<f64> = self.x0.iter().zip(off).map(|(a, o)| a + self.step * *o as f64).collect();
        let v = self.phi.value(&x);
        if !v.is_finite() {
            return Err(PinchError::StencilOutsideDomain { step: self.step });
        }
        self.cache.insert(off.to_vec(), v);
        Ok(v)
    }

    /// Composition of the central differences `D_a` for `a ∈ dirs`.
    fn derivative(&mut self, dirs: &[usize]) -> Result<f64> {
        let dim = self.x0.len();
        let w = 1.0 / (2.0 * self.step);
        let mut terms: HashMap<Vec<i16>, f64> = HashMap::from([(vec![0i16; dim], 1.0)]);
        for &a in dirs {
            let mut next: HashMap<Vec<i16>, f64> = HashMap::new();
            for (off, c) in terms {
                let mut plus = off.clone();
                plus[a] += 1;
                *next.entry(plus).or_insert(0.0) += c * w;
                let mut minus = off;
                minus[a] -= 1;
                *next.entry(minus).or_insert(0.0) -= c * w;
            }
            terms = next;
        }
        let mut ordered: Vec<_> = terms.into_iter().filter(|(_, c)| *c != 0.0).collect();
        ordered.sort_by(|a, b| a.0.cmp(&b.0));
        let mut acc = 0.0;
        for (off, c) in ordered {
            acc += c * self.eval(&off)?;
        }
        Ok(acc)
    }
}

/// Real derivative tensors of orders 2, 3 and 4, stored densely.
struct RealDerivatives {
    dim: usize,
    t2: Vec<f64>,
    t3: Vec<f64>,
    t4: Vec<f64>,
}

impl RealDerivatives {
    fn compute(phi: &dyn Potential, x0: &[f64], step: f64, with_higher: bool) -> Result<Self> {
        let dim = x0.len();
        let mut st = Stencil::new(phi, x0.to_vec(), step);
        let mut t2 = vec![0.0; dim * dim];
        let mut t3 = vec![0.0; if with_higher { dim.pow(3) } else { 0 }];
        let mut t4 = vec![0.0; if with_higher { dim.pow(4) } else { 0 }];
        let mut sorted: HashMap<Vec<usize>, f64> = HashMap::new();
        let mut get = |st: &mut Stencil, idx: &[usize]| -> Result<f64> {
            let mut key = idx.to_vec();
            key.sort_unstable();
            if let Some(v) = sorted.get(&key) {
                return Ok(*v);
            }
            let v = st.derivative(&key)?;
            sorted.insert(key, v);
            Ok(v)
        };
        for a in 0..dim {
            for b in 0..dim {
                t2[a * dim + b] = get(&mut st, &[a, b])?;
                if !with_higher {
                    continue;
                }
                for c in 0..dim {
                    t3[(a * dim + b) * dim + c] = get(&mut st, &[a, b, c])?;
                    for d in 0..dim {
                        t4[((a * dim + b) * dim + c) * dim + d] = get(&mut st, &[a, b, c, d])?;
                    }
                }
            }
        }
        Ok(RealDerivatives { dim, t2, t3, t4 })
    }

    fn richardson(coarse: &Self, fine: &Self) -> Self {
        let r = |c: &[f64], f: &[f64]| c.iter().zip(f).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
        RealDerivatives {
            dim: coarse.dim,
            t2: r(&coarse.t2, &fine.t2),
            t3: r(&coarse.t3, &fine.t3),
            t4: r(&coarse.t4, &fine.t4),
        }
    }

    /// Wirtinger assembly with `∂_k = ½(∂_{x_k} − i∂_{y_k})`, `∂̄_l = ½(∂_{x_l} + i∂_{y_l})`.
    fn to_jet(&self, point: &Point, with_higher: bool) -> MetricJet {
        let n = self.dim / 2;
        let half = C64::new(0.5, 0.0);
        let ihalf = C64::new(0.0, 0.5);
        let holo = |k: usize| [(2 * k, half), (2 * k + 1, -ihalf)];
        let anti = |k: usize| [(2 * k, half), (2 * k + 1, ihalf)];
        let d = self.dim;
        let mut jet = MetricJet::zeros(point.clone());
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for (a, wa) in holo(i) {
                    for (b, wb) in anti(j) {
                        acc += wa * wb * self.t2[a * d + b];
                    }
                }
                jet.h[(i, j)] = acc;
                if !with_higher {
                    continue;
                }
                for k in 0..n {
                    let mut dk = ZERO;
                    let mut dbk = ZERO;
                    for (a, wa) in holo(i) {
                        for (b, wb) in anti(j) {
                            for (c, wc) in holo(k) {
                                dk += wa * wb * wc * self.t3[(a * d + b) * d + c];
                            }
                            for (c, wc) in anti(k) {
                                dbk += wa * wb * wc * self.t3[(a * d + b) * d + c];
                            }
                        }
                    }
                    let i3 = jet.idx3(i, j, k);
                    jet.dh[i3] = dk;
                    jet.dbar_h[i3] = dbk;
                    for l in 0..n {
                        let mut acc4 = ZERO;
                        for (a, wa) in holo(i) {
                            for (b, wb) in anti(j) {
                                for (c, wc) in holo(k) {
                                    for (e, we) in anti(l) {
                                        acc4 += wa * wb * wc * we * self.t4[((a * d + b) * d + c) * d + e];
                                    }
                                }
                            }
                        }
                        let i4 = jet.idx4(i, j, k, l);
                        jet.ddbar_h[i4] = acc4;
                    }
                }
            }
        }
        jet
    }
}

fn fd_derivatives(phi: &dyn Potential, x0: &[f64], step: f64, order: FdOrder, higher: bool) -> Result<RealDerivatives> {
    match order {
        FdOrder::Two => RealDerivatives::compute(phi, x0, step, higher),
        FdOrder::Four => {
            let coarse = RealDerivatives::compute(phi, x0, step, higher)?;
            let fine = RealDerivatives::compute(phi, x0, 0.5 * step, higher)?;
            Ok(RealDerivatives::richardson(&coarse, &fine))
        }
    }
}

/// Step actually used at `z`: the requested one, shrunk so the whole stencil
/// stays within half the smoothness radius of `φ`.
pub fn effective_step(phi: &dyn Potential, z: &Point, step: f64) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(PinchError::InvalidArgument(format!("finite-difference step must be positive, got {step}")));
    }
    let s = match phi.smooth_radius(z) {
        Some(r) if r <= 0.0 => return Err(PinchError::StencilOutsideDomain { step }),
        Some(r) => step.min(0.5 * r / STENCIL_REACH),
        None => step,
    };
    Ok(s)
}

/// Metric jet of the Kähler metric `h_{i\bar j} = ∂_i ∂_{\bar j} φ` by central
/// differences on the real coordinates. With [`FdOrder::Four`] each derivative is
/// Richardson-extrapolated from steps `s` and `s/2`. The tolerance estimate is the
/// deviation between the jets obtained at `s` and `s/2`, plus the Hermitian
/// symmetrization correction applied to `h`.
pub fn jet_from_potential(phi: &dyn Potential, z: &Point, step: f64, order: FdOrder) -> Result<MetricJet> {
    fd_jet(phi, z, step, order, true)
}

/// Only the metric matrix (second derivatives), same conventions as [`jet_from_potential`].
pub fn metric_from_potential(phi: &dyn Potential, z: &Point, step: f64, order: FdOrder) -> Result<DMatrix<C64>> {
    Ok(fd_jet(phi, z, step, order, false)?.h)
}

fn fd_jet(phi: &dyn Potential, z: &Point, step: f64, order: FdOrder, higher: bool) -> Result<MetricJet> {
    if phi.dim() != z.dim() {
        return Err(PinchError::DimensionMismatch { expected: phi.dim(), got: z.dim() });
    }
    let s = effective_step(phi, z, step)?;
    let x0 = z.real_coords();
    let main = fd_derivatives(phi, &x0, s, order, higher)?.to_jet(z, higher);
    let check = fd_derivatives(phi, &x0, 0.5 * s, order, higher)?.to_jet(z, higher);
    let mut jet = main;
    let (h, corr) = linalg::symmetrize(&jet.h);
    jet.h = h;
    let dev = jet.block_deviation(&check);
    jet.tolerance = dev.iter().copied().fold(0.0, f64::max) + corr;
    jet.metric_tolerance = dev[0] + corr;
    let ev = linalg::hermitian_eigenvalues(&jet.h);
    if !(ev[0] > 0.0) {
        return Err(PinchError::NotPositiveDefinite { min_eigenvalue: ev[0] });
    }
    Ok(jet)
}

/// `λ_min(h)`; errors when `h` is not Hermitian within 1e-12 or not positive definite.
pub fn validate_positive_definite(jet: &MetricJet) -> Result<f64> {
    linalg::min_eigenvalue_checked(&jet.h, HERMITIAN_TOL)
}

/// Finite-difference parameters for potential-backed fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    /// Step; `None` uses [`default_step`].
    pub step: Option<f64>,
    pub order: FdOrder,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { step: None, order: FdOrder::Four }
    }
}

impl FdConfig {
    pub fn step_at(&self, z: &Point) -> f64 {
        self.step.unwrap_or_else(|| default_step(z))
    }
}

/// A Kähler metric given only through its potential; jets by finite differences.
pub struct PotentialField {
    name: String,
    potential: Arc<dyn Potential>,
    fd: FdConfig,
    warnings: Vec<String>,
}

impl PotentialField {
    pub fn new(name: impl Into<String>, potential: Arc<dyn Potential>, fd: FdConfig) -> Self {
        PotentialField { name: name.into(), potential, fd, warnings: Vec::new() }
    }

    pub fn with_warnings(mut self, warnings: Vec<String>) -> Self {
        self.warnings = warnings;
        self
    }
}

impl MetricField for PotentialField {
    fn dim(&self) -> usize {
        self.potential.dim()
    }
    fn name(&self) -> String {
        self.name.clone()
    }
    fn is_kahler(&self) -> bool {
        true
    }
    fn mode(&self) -> EvalMode {
        EvalMode::PotentialFd
    }
    fn jet(&self, z: &Point) -> Result<MetricJet> {
        jet_from_potential(self.potential.as_ref(), z, self.fd.step_at(z), self.fd.order)
    }
    fn metric(&self, z: &Point) -> Result<DMatrix<C64>> {
        metric_from_potential(self.potential.as_ref(), z, self.fd.step_at(z), self.fd.order)
    }
    fn potential(&self) -> Option<Arc<dyn Potential>> {
        Some(self.potential.clone())
    }
    fn warnings(&self) -> Vec<String> {
        self.warnings.clone()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossCheckReport {
    pub field: String,
    pub point: Point,
    /// Per block: `h`, `∂h`, `∂̄h`, `∂∂̄h`.
    pub block_deviation: [f64; 4],
    pub max_deviation: f64,
    pub fd_tolerance: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Compares a closed-form jet against finite differences of the field's potential.
pub fn fd_cross_check(field: &dyn MetricField, z: &Point, step: f64, tol: f64) -> Result<CrossCheckReport> {
    let phi = field.potential().ok_or_else(|| PinchError::NoPotential(field.name()))?;
    let closed = field.jet(z)?;
    let fd = jet_from_potential(phi.as_ref(), z, step, FdOrder::Four)?;
    let block_deviation = closed.block_deviation(&fd);
    let max_deviation = block_deviation.iter().copied().fold(0.0, f64::max);
    Ok(CrossCheckReport {
        field: field.name(),
        point: z.clone(),
        block_deviation,
        max_deviation,
        fd_tolerance: fd.tolerance,
        tol,
        passed: max_deviation <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid_potential(n: usize) -> FnPotential<impl Fn(&[f64]) -> f64 + Send + Sync> {
        FnPotential::new(n, |x: &[f64]| x.iter().map(|v| v * v).sum())
    }

    fn disc_bergman_potential() -> FnPotential<impl Fn(&[f64]) -> f64 + Send + Sync> {
        FnPotential::new(1, |x: &[f64]| -2.0 * (1.0 - x[0] * x[0] - x[1] * x[1]).ln())
            .with_smooth_radius(|z: &Point| 1.0 - z.norm())
    }

    #[test]
    fn euclidean_potential_gives_identity() {
        let phi = euclid_potential(2);
        let z = Point::from_real(&[0.3, -0.2, 0.1, 0.4]);
        let jet = jet_from_potential(&phi, &z, default_step(&z), FdOrder::Four).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((jet.h[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-9);
            }
        }
        assert!(jet.dh.iter().chain(&jet.dbar_h).all(|z| z.norm() < 1e-6));
        assert!(jet.ddbar_h.iter().all(|z| z.norm() < 1e-4));
        assert!(jet.metric_tolerance <= 1e-10, "tolerance {}", jet.metric_tolerance);
    }

    #[test]
    fn disc_bergman_potential_at_origin() {
        // φ = −2 log(1 − |z|²): h = 2/(1−|z|²)², ∂∂̄h(0) = 4.
        let phi = disc_bergman_potential();
        let z = Point::origin(1);
        let jet = jet_from_potential(&phi, &z, default_step(&z), FdOrder::Four).unwrap();
        assert!((jet.h[(0, 0)].re - 2.0).abs() < 1e-9);
        assert!((jet.ddbar_h(0, 0, 0, 0).re - 4.0).abs() < 1e-5);
        assert!((validate_positive_definite(&jet).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn stencil_shrinks_near_the_singularity() {
        let phi = disc_bergman_potential();
        let z = Point::from_real(&[0.99, 0.0]);
        let s = effective_step(&phi, &z, 0.1).unwrap();
        assert!(s * STENCIL_REACH <= 0.5 * 0.01 + 1e-15);
        let jet = jet_from_potential(&phi, &z, 0.1, FdOrder::Four).unwrap();
        let exact = 2.0 / (1.0 - 0.99f64 * 0.99).powi(2);
        let rel = (jet.h[(0, 0)].re / exact - 1.0).abs();
        assert!(rel < 1e-3, "relative error {rel}");
    }

    #[test]
    fn outside_domain_is_reported() {
        let phi = FnPotential::new(1, |x: &[f64]| -(1.0 - x[0] * x[0] - x[1] * x[1]).ln());
        let z = Point::from_real(&[0.999, 0.0]);
        let err = jet_from_potential(&phi, &z, 0.01, FdOrder::Two).unwrap_err();
        assert!(matches!(err, PinchError::StencilOutsideDomain { .. }));
    }

    #[test]
    fn non_positive_metric_is_rejected() {
        let phi = FnPotential::new(1, |x: &[f64]| -(x[0] * x[0] + x[1] * x[1]));
        let z = Point::origin(1);
        let err = jet_from_potential(&phi, &z, 0.01, FdOrder::Two).unwrap_err();
        match err {
            PinchError::NotPositiveDefinite { min_eigenvalue } => assert!((min_eigenvalue + 1.0).abs() < 1e-6),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn validate_diag() {
        let mut jet = MetricJet::zeros(Point::origin(2));
        jet.h[(0, 0)] = C64::new(2.0, 0.0);
        jet.h[(1, 1)] = C64::new(0.5, 0.0);
        assert_eq!(validate_positive_definite(&jet).unwrap(), 0.5);
        jet.h[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(validate_positive_definite(&jet), Err(PinchError::NotHermitian { .. })));
    }

    #[test]
    fn bad_order_is_rejected() {
        assert!(FdOrder::from_int(3).is_err());
        assert_eq!(FdOrder::from_int(4).unwrap(), FdOrder::Four);
    }

    #[test]
    fn json_dump_is_row_major() {
        let mut jet = MetricJet::zeros(Point::origin(2));
        jet.h[(0, 1)] = C64::new(1.0, 2.0);
        let v: serde_json::Value = serde_json::from_str(&jet.to_json().unwrap()).unwrap();
        assert_eq!(v["h"][1], serde_json::json!([1.0, 2.0]));
        assert_eq!(v["ddbar_h"].as_array().unwrap().len(), 16);
    }
}
