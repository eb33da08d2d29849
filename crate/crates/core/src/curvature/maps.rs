//! Holomorphic maps into a domain, and the checks built on them: the disc form of
//! the Chern–Lu formula and the Schwarz–Yau inequality `f*h ≤ (C/A) g`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use super::curvature_tensor;
use crate::domain::Point;
use crate::error::{PinchError, Result};
use crate::jet::MetricField;
use crate::linalg;
use crate::C64;

pub trait HolomorphicMap: Send + Sync {
    fn source_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn eval(&self, zeta: &[C64]) -> Vec<C64>;
    /// `target_dim × source_dim` complex Jacobian `∂f_α/∂ζ_i`.
    fn differential(&self, zeta: &[C64]) -> DMatrix<C64>;

    fn jet(&self, zeta: &[C64]) -> MapJet {
        MapJet { source: zeta.to_vec(), value: Point::new(self.eval(zeta)), differential: self.differential(zeta) }
    }
}

/// Value and differential of a holomorphic map at a source point.
#[derive(Clone, Debug)]
pub struct MapJet {
    pub source: Vec<C64>,
    pub value: Point,
    pub differential: DMatrix<C64>,
}

/// `ζ ↦ A ζ + b`.
pub struct AffineMap {
    pub a: DMatrix<C64>,
    pub b: Vec<C64>,
}

impl AffineMap {
    pub fn new(a: DMatrix<C64>, b: Vec<C64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(PinchError::DimensionMismatch { expected: a.nrows(), got: b.len() });
        }
        Ok(AffineMap { a, b })
    }

    pub fn identity(n: usize) -> Self {
        AffineMap { a: DMatrix::identity(n, n), b: vec![C64::new(0.0, 0.0); n] }
    }

    /// The slice `ζ ↦ ζ e_k` of a disc into ℂⁿ.
    pub fn coordinate_slice(n: usize, k: usize) -> Self {
        let mut a = DMatrix::zeros(n, 1);
        a[(k, 0)] = C64::new(1.0, 0.0);
        AffineMap { a, b: vec![C64::new(0.0, 0.0); n] }
    }
}

impl HolomorphicMap for AffineMap {
    fn source_dim(&self) -> usize {
        self.a.ncols()
    }
    fn target_dim(&self) -> usize {
        self.a.nrows()
    }
    fn eval(&self, zeta: &[C64]) -> Vec<C64> {
        (0..self.a.nrows()).map(|i| (0..self.a.ncols()).map(|j| self.a[(i, j)] * zeta[j]).sum::<C64>() + self.b[i]).collect()
    }
    fn differential(&self, _zeta: &[C64]) -> DMatrix<C64> {
        self.a.clone()
    }
}

type MapFn = Arc<dyn Fn(&[C64]) -> Vec<C64> + Send + Sync>;
type DiffFn = Arc<dyn Fn(&[C64]) -> DMatrix<C64> + Send + Sync>;

/// A map given by closures for its value and its complex Jacobian.
#[derive(Clone)]
pub struct ClosureMap {
    source_dim: usize,
    target_dim: usize,
    f: MapFn,
    df: DiffFn,
}

impl ClosureMap {
    pub fn new(
        source_dim: usize,
        target_dim: usize,
        f: impl Fn(&[C64]) -> Vec<C64> + Send + Sync + 'static,
        df: impl Fn(&[C64]) -> DMatrix<C64> + Send + Sync + 'static,
    ) -> Self {
        ClosureMap { source_dim, target_dim, f: Arc::new(f), df: Arc::new(df) }
    }

    /// `ζ ↦ f(c ζ)`.
    pub fn precomposed_with_scaling(inner: Arc<dyn HolomorphicMap>, c: C64) -> Self {
        let (s, t) = (inner.source_dim(), inner.target_dim());
        let i2 = inner.clone();
        ClosureMap::new(
            s,
            t,
            move |z: &[C64]| inner.eval(&z.iter().map(|v| v * c).collect::<Vec<_>>()),
            move |z: &[C64]| i2.differential(&z.iter().map(|v| v * c).collect::<Vec<_>>()) * c,
        )
    }
}

impl HolomorphicMap for ClosureMap {
    fn source_dim(&self) -> usize {
        self.source_dim
    }
    fn target_dim(&self) -> usize {
        self.target_dim
    }
    fn eval(&self, zeta: &[C64]) -> Vec<C64> {
        (self.f)(zeta)
    }
    fn differential(&self, zeta: &[C64]) -> DMatrix<C64> {
        (self.df)(zeta)
    }
}

/// Largest violation of `∂f/∂y_k = i ∂f/∂x_k` on the realified Jacobian at `zeta`,
/// from fourth-order central differences of `f`.
pub fn cauchy_riemann_residual(map: &dyn HolomorphicMap, zeta: &[C64], step: f64) -> f64 {
    let diff = |dir: C64, k: usize| -> Vec<C64> {
        let at = |t: f64| {
            let mut z = zeta.to_vec();
            z[k] += dir * t;
            map.eval(&z)
        };
        let (p1, m1, p2, m2) = (at(step), at(-step), at(2.0 * step), at(-2.0 * step));
        (0..p1.len()).map(|a| (-p2[a] + p1[a] * 8.0 - m1[a] * 8.0 + m2[a]) / (12.0 * step)).collect()
    };
    let mut worst: f64 = 0.0;
    for k in 0..map.source_dim() {
        let dx = diff(C64::new(1.0, 0.0), k);
        let dy = diff(C64::new(0.0, 1.0), k);
        for (a, b) in dx.iter().zip(&dy) {
            worst = worst.max((b - a * C64::new(0.0, 1.0)).norm());
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct ChernLuReport {
    pub target_point: Point,
    /// `u_h(0) = ‖X‖²_h` with `X = df(∂/∂ζ)`.
    pub u0: f64,
    /// `−(2/‖X‖²) ∂∂̄ log u_h(0)` by finite differences along the disc.
    pub lhs: f64,
    /// `HSC(h)(X)` from the curvature tensor.
    pub rhs: f64,
    pub residual: f64,
    pub step: f64,
    pub cauchy_riemann_residual: f64,
}

fn norm_function(map: &dyn HolomorphicMap, h: &dyn MetricField, zeta: C64) -> Result<f64> {
    let z = Point::new(map.eval(&[zeta]));
    let x: Vec<C64> = map.differential(&[zeta]).column(0).iter().copied().collect();
    Ok(linalg::form_norm_sq(&h.metric(&z)?, &x))
}

/// Compares the disc formula `HSC(h)(X) = −(2/‖X‖²_h) ∂∂̄ log u_h(0)` with the
/// tensor evaluation, for a map `f` of a disc `|ζ| < margin` into the domain of `h`.
pub fn chern_lu_residual(map: &dyn HolomorphicMap, h: &dyn MetricField, margin: f64) -> Result<ChernLuReport> {
    if map.source_dim() != 1 {
        return Err(PinchError::DimensionMismatch { expected: 1, got: map.source_dim() });
    }
    if map.target_dim() != h.dim() {
        return Err(PinchError::DimensionMismatch { expected: h.dim(), got: map.target_dim() });
    }
    if !(margin > 0.0) {
        return Err(PinchError::InvalidArgument("disc radius margin must be positive".into()));
    }
    let origin = C64::new(0.0, 0.0);
    let jet = map.jet(&[origin]);
    let x: Vec<C64> = jet.differential.column(0).iter().copied().collect();
    let u0 = linalg::form_norm_sq(&h.metric(&jet.value)?, &x);
    if !(u0 > 1e-300) {
        return Err(PinchError::VanishingDifferential(format!("u_h(0) = {u0}")));
    }
    let step = 1e-3f64.min(margin / 4.0);
    let logu = |t: C64| -> Result<f64> { Ok(norm_function(map, h, t)?.ln()) };
    let l0 = u0.ln();
    let mut lap = 0.0;
    for dir in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
        let p1 = logu(dir * step)?;
        let m1 = logu(-dir * step)?;
        let p2 = logu(dir * (2.0 * step))?;
        let m2 = logu(-dir * (2.0 * step))?;
        lap += (-p2 + 16.0 * p1 - 30.0 * l0 + 16.0 * m1 - m2) / (12.0 * step * step);
    }
    // ∂∂̄ = Δ/4 on functions of one complex variable
    let lhs = -2.0 / u0 * (lap / 4.0);
    let rhs = curvature_tensor(h, &jet.value)?.hsc(&x)?;
    Ok(ChernLuReport {
        target_point: jet.value,
        u0,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        step,
        cauchy_riemann_residual: cauchy_riemann_residual(map, &[origin], 1e-3f64.min(margin / 4.0)),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SchwarzYauPoint {
    pub source: Point,
    /// Largest eigenvalue of the pencil `(f*h, g)`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchwarzYauReport {
    pub bound: f64,
    pub per_point: Vec<SchwarzYauPoint>,
    pub max_ratio: f64,
    /// `C/A − max ratio`.
    pub worst_margin: f64,
    pub tol: f64,
    pub passed: bool,
}

/// `f*h ≤ (C/A) g` at every source sample, where the caller supplies `C` (with
/// `Ric(g) ≥ −C g`) and `A` (with `HBC(h) ≤ −A`).
pub fn schwarz_yau_check(
    map: &dyn HolomorphicMap,
    g: &dyn MetricField,
    h: &dyn MetricField,
    c_ricci: f64,
    a_hbc: f64,
    samples: &[Point],
    tol: f64,
) -> Result<SchwarzYauReport> {
    if map.source_dim() != g.dim() {
        return Err(PinchError::DimensionMismatch { expected: g.dim(), got: map.source_dim() });
    }
    if map.target_dim() != h.dim() {
        return Err(PinchError::DimensionMismatch { expected: h.dim(), got: map.target_dim() });
    }
    if !(c_ricci > 0.0 && a_hbc > 0.0) {
        return Err(PinchError::InvalidArgument("Schwarz–Yau constants C and A must be positive".into()));
    }
    let bound = c_ricci / a_hbc;
    let mut per_point = Vec::with_capacity(samples.len());
    let mut max_ratio = f64::NEG_INFINITY;
    for zeta in samples {
        if zeta.dim() != g.dim() {
            return Err(PinchError::DimensionMismatch { expected: g.dim(), got: zeta.dim() });
        }
        let jet = map.jet(zeta.coords());
        let a = &jet.differential;
        let hm = h.metric(&jet.value)?;
        // (f*h)_{i\bar j} = Σ h_{α\bar β} a_{αi} conj(a_{βj})
        let pull = a.transpose() * hm * a.map(|v| v.conj());
        let (_, ratio) = linalg::pencil_extremes(&pull, &g.metric(zeta)?)?;
        max_ratio = max_ratio.max(ratio);
        per_point.push(SchwarzYauPoint { source: zeta.clone(), ratio });
    }
    let worst_margin = bound - max_ratio;
    Ok(SchwarzYauReport { bound, per_point, max_ratio, worst_margin, tol, passed: worst_margin >= -tol })
}
