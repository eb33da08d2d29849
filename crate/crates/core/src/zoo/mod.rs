//! Concrete metrics: Euclidean, ball and polydisc Bergman metrics, truncated
//! Reinhardt Bergman metrics, scalings, sums and compactly supported potential
//! perturbations.

mod radial;
pub mod reinhardt;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::domain::{DomainSpec, Point, SampleSet};
use crate::error::{PinchError, Result};
use crate::jet::{EvalMode, MetricField, MetricJet, Potential, SharedField};
use crate::linalg;
use crate::sampling::ShiftedHalton;
use crate::C64;

pub use radial::{bump_derivatives, radial_jet_into};
pub use reinhardt::{reinhardt_bergman, CoefficientTable, QuadConfig, ReinhardtBergman};

/// Where a zoo metric came from.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Provenance {
    pub kind: String,
    pub parameters: serde_json::Value,
    pub truncation_degree: Option<usize>,
    /// Known exact values (name → value), e.g. the constant HSC of a space form.
    pub reference: BTreeMap<String, f64>,
}

/// A metric field together with its provenance.
#[derive(Clone)]
pub struct ZooEntry {
    pub field: SharedField,
    pub provenance: Provenance,
}

impl std::fmt::Debug for ZooEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZooEntry").field("name", &self.field.name()).field("provenance", &self.provenance).finish()
    }
}

impl ZooEntry {
    pub fn new(field: SharedField, provenance: Provenance) -> Self {
        ZooEntry { field, provenance }
    }

    /// Wraps an arbitrary field (tests, user-defined metrics).
    pub fn custom(field: SharedField) -> Self {
        let provenance = Provenance { kind: "custom".into(), parameters: serde_json::json!({"name": field.name()}), ..Default::default() };
        ZooEntry { field, provenance }
    }

    pub fn shared(&self) -> SharedField {
        self.field.clone()
    }
}

impl MetricField for ZooEntry {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn name(&self) -> String {
        self.field.name()
    }
    fn is_kahler(&self) -> bool {
        self.field.is_kahler()
    }
    fn mode(&self) -> EvalMode {
        self.field.mode()
    }
    fn jet(&self, z: &Point) -> Result<MetricJet> {
        self.field.jet(z)
    }
    fn metric(&self, z: &Point) -> Result<DMatrix<C64>> {
        self.field.metric(z)
    }
    fn potential(&self) -> Option<Arc<dyn Potential>> {
        self.field.potential()
    }
    fn warnings(&self) -> Vec<String> {
        self.field.warnings()
    }
}

fn check_dim(expected: usize, z: &Point) -> Result<()> {
    if z.dim() != expected {
        return Err(PinchError::DimensionMismatch { expected, got: z.dim() });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Euclidean

struct Euclidean {
    n: usize,
}

struct EuclideanPotential {
    n: usize,
}

impl Potential for EuclideanPotential {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }
    fn smooth_radius(&self, _z: &Point) -> Option<f64> {
        None
    }
}

impl MetricField for Euclidean {
    fn dim(&self) -> usize {
        self.n
    }
    fn name(&self) -> String {
        format!("euclidean(n={})", self.n)
    }
    fn is_kahler(&self) -> bool {
        true
    }
    fn mode(&self) -> EvalMode {
        EvalMode::ClosedFormJet
    }
    fn jet(&self, z: &Point) -> Result<MetricJet> {
        check_dim(self.n, z)?;
        let mut jet = MetricJet::zeros(z.clone());
        jet.h = DMatrix::identity(self.n, self.n);
        Ok(jet)
    }
    fn metric(&self, z: &Point) -> Result<DMatrix<C64>> {
        check_dim(self.n, z)?;
        Ok(DMatrix::identity(self.n, self.n))
    }
    fn potential(&self) -> Option<Arc<dyn Potential>> {
        Some(Arc::new(EuclideanPotential { n: self.n }))
    }
}

/// The flat metric `h = I` on ℂⁿ.
pub fn euclidean(n: usize) -> ZooEntry {
    assert!(n >= 1, "dimension must be at least 1");
    let mut reference = BTreeMap::new();
    reference.insert("hbc_min".into(), 0.0);
    reference.insert("hbc_max".into(), 0.0);
    ZooEntry::new(
        Arc::new(Euclidean { n }),
        Provenance { kind: "euclidean".into(), parameters: serde_json::json!({ "n": n }), truncation_degree: None, reference },
    )
}

// ---------------------------------------------------------------------------
// Bergman metric of the ball B(0, R)

struct BallBergman {
    n: usize,
    radius: f64,
}

struct BallBergmanPotential {
    n: usize,
    radius: f64,
}

impl Potential for BallBergmanPotential {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().map(|v| v * v).sum();
        let gap = self.radius * self.radius - s;
        if gap <= 0.0 {
            return f64::NAN;
        }
        // normalized to vanish at 0; ln_1p keeps rounding low where φ is nearly constant
        let r2 = self.radius * self.radius;
        -((self.n + 1) as f64) * (-s / r2).ln_1p()
    }
    fn smooth_radius(&self, z: &Point) -> Option<f64> {
        Some(self.radius - z.norm())
    }
}

impl BallBergman {
    /// `[F, F', F'', F''', F'''']` of `F(s) = −(n+1) log(R² − s)`.
    fn derivatives(&self, s: f64) -> Result<[f64; 5]> {
        let gap = self.radius * self.radius - s;
        if !(gap > 0.0) {
            return Err(PinchError::OutsideDomain(format!("|z|² = {s} is outside the ball of radius {}", self.radius)));
        }
        let c = (self.n + 1) as f64;
        let inv = 1.0 / gap;
        Ok([-c * gap.ln(), c * inv, c * inv * inv, 2.0 * c * inv.powi(3), 6.0 * c * inv.powi(4)])
    }
}

impl MetricField for BallBergman {
    fn dim(&self) -> usize {
        self.n
    }
    fn name(&self) -> String {
        format!("ball_bergman(R={}, n={})", self.radius, self.n)
    }
    fn is_kahler(&self) -> bool {
        true
    }
    fn mode(&self) -> EvalMode {
        EvalMode::ClosedFormJet
    }
    fn jet(&self, z: &Point) -> Result<MetricJet> {
        check_dim(self.n, z)?;
        let d = self.derivatives(z.norm_sq())?;
        let mut jet = MetricJet::zeros(z.clone());
        radial_jet_into(&mut jet, z.coords(), d, 1.0);
        Ok(jet)
    }
    fn metric(&self, z: &Point) -> Result<DMatrix<C64>> {
        check_dim(self.n, z)?;
        let d = self.derivatives(z.norm_sq())?;
        let w = z.coords();
        Ok(DMatrix::from_fn(self.n, self.n, |i, j| {
            let delta = if i == j { d[1] } else { 0.0 };
            w[i].conj() * w[j] * d[2] + delta
        }))
    }
    fn potential(&self) -> Option<Arc<dyn Potential>> {
        Some(Arc::new(BallBergmanPotential { n: self.n, radius: self.radius }))
    }
}

/// Bergman metric `b^R_{i\bar j} = ∂_i∂_{\bar j} log K` of `B(0, R) ⊂ ℂⁿ`,
/// i.e. `(n+1)[δ_{ij}/(R² − |z|²) + \bar z_i z_j/(R² − |z|²)²]`.
pub fn ball_bergman(radius: f64, n: usize) -> Result<ZooEntry> {
    if !(radius > 0.0 && radius.is_finite()) || n == 0 {
        return Err(PinchError::InvalidArgument(format!("ball_bergman needs R > 0 and n ≥ 1 (R = {radius}, n = {n})")));
    }
    let mut reference = BTreeMap::new();
    let c = crate::curvature::ball_bergman_hsc(n);
    reference.insert("hsc".into(), c);
    reference.insert("hbc_min".into(), c);
    reference.insert("hbc_max".into(), c / 2.0);
    Ok(ZooEntry::new(
        Arc::new(BallBergman { n, radius }),
        Provenance {
            kind: "ball_bergman".into(),
            parameters: serde_json::json!({ "R": radius, "n": n }),
            truncation_degree: None,
            reference,
        },
    ))
}

// ---------------------------------------------------------------------------
// Bergman metric of a polydisc centred at 0

struct PolydiscBergman {
    radii: Vec<f64>,
}

struct PolydiscBergmanPotential {
    radii: Vec<f64>,
}

impl Potential for PolydiscBergmanPotential {
    fn dim(&self) -> usize {
        self.radii.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let s = x[2 * i] * x[2 * i] + x[2 * i + 1] * x[2 * i + 1];
                if s >= r * r {
                    f64::NAN
                } else {
                    -2.0 * (-s / (r * r)).ln_1p()
                }
            })
            .sum()
    }
    fn smooth_radius(&self, z: &Point) -> Option<f64> {
        Some(z.coords().iter().zip(&self.radii).map(|(c, r)| r - c.norm()).fold(f64::INFINITY, f64::min))
    }
}

impl PolydiscBergman {
    fn factor_derivatives(&self, i: usize, zi: C64) -> Result<[f64; 5]> {
        let r = self.radii[i];
        let gap = r * r - zi.norm_sqr();
        if !(gap > 0.0) {
            return Err(PinchError::OutsideDomain(format!("|z_{}| = {} ≥ {r}", i + 1, zi.norm())));
        }
        let inv = 1.0 / gap;
        Ok([-2.0 * gap.ln(), 2.0 * inv, 2.0 * inv * inv, 4.0 * inv.powi(3), 12.0 * inv.powi(4)])
    }
}

impl MetricField for PolydiscBergman {
    fn dim(&self) -> usize {
        self.radii.len()
    }
    fn name(&self) -> String {
        format!("polydisc_bergman(radii={:?})", self.radii)
    }
    fn is_kahler(&self) -> bool {
        true
    }
    fn mode(&self) -> EvalMode {
        EvalMode::ClosedFormJet
    }
    fn jet(&self, z: &Point) -> Result<MetricJet> {
        check_dim(self.radii.len(), z)?;
        let mut jet = MetricJet::zeros(z.clone());
        for (i, &zi) in z.coords().iter().enumerate() {
            let d = self.factor_derivatives(i, zi)?;
            let mut factor = MetricJet::zeros(Point::new(vec![zi]));
            radial_jet_into(&mut factor, &[zi], d, 1.0);
            jet.h[(i, i)] = factor.h[(0, 0)];
            let i3 = jet.idx3(i, i, i);
            jet.dh[i3] = factor.dh[0];
            jet.dbar_h[i3] = factor.dbar_h[0];
            let i4 = jet.idx4(i, i, i, i);
            jet.ddbar_h[i4] = factor.ddbar_h[0];
        }
        Ok(jet)
    }
    fn metric(&self, z: &Point) -> Result<DMatrix<C64>> {
        check_dim(self.radii.len(), z)?;
        let mut h = DMatrix::zeros(self.radii.len(), self.radii.len());
        for (i, &zi) in z.coords().iter().enumerate() {
            let d = self.factor_derivatives(i, zi)?;
            h[(i, i)] = C64::new(d[1] + zi.norm_sqr() * d[2], 0.0);
        }
        Ok(h)
    }
    fn potential(&self) -> Option<Arc<dyn Potential>> {
        Some(Arc::new(PolydiscBergmanPotential { radii: self.radii.clone() }))
    }
}

/// Bergman metric of the polydisc `Π {|z_i| < r_i}`: the product kernel makes the
/// metric block diagonal with disc factors `2 r_i² / (r_i² − |z_i|²)²`.
pub fn polydisc_bergman(radii: Vec<f64>) -> Result<ZooEntry> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(PinchError::InvalidArgument("polydisc_bergman needs positive radii".into()));
    }
    let parameters = serde_json::json!({ "radii": radii.clone() });
    Ok(ZooEntry::new(
        Arc::new(PolydiscBergman { radii }),
        Provenance { kind: "polydisc_bergman".into(), parameters, truncation_degree: None, reference: BTreeMap::new() },
    ))
}

// ---------------------------------------------------------------------------
// λ·h and h + g

struct Scaled {
    lambda: f64,
    inner: SharedField,
}

struct ScaledPotential {
    lambda: f64,
    inner: Arc<dyn Potential>,
}

impl Potential for ScaledPotential {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * self.inner.value(x)
    }
    fn smooth_radius(&self, z: &Point) -> Option<f64> {
        self.inner.smooth_radius(z)
    }
}

impl MetricField for Scaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn name(&self) -> String {
        format!("{}·{}", self.lambda, self.inner.name())
    }
    fn is_kahler(&self) -> bool {
        self.inner.is_kahler()
    }
    fn mode(&self) -> EvalMode {
        self.inner.mode()
    }
    fn jet(&self, z: &Point) -> Result<MetricJet> {
        Ok(self.inner.jet(z)?.scaled(self.lambda))
    }
    fn metric(&self, z: &Point) -> Result<DMatrix<C64>> {
        Ok(self.inner.metric(z)? * C64::new(self.lambda, 0.0))
    }
    fn potential(&self) -> Option<Arc<dyn Potential>> {
        let inner = self.inner.potential()?;
        Some(Arc::new(ScaledPotential { lambda: self.lambda, inner }))
    }
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings()
    }
}

/// `λ h`: every jet block multiplied by `λ`.
pub fn scale(lambda: f64, h: &ZooEntry) -> Result<ZooEntry> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(PinchError::InvalidArgument(format!("scale factor must be positive, got {lambda}")));
    }
    let reference = h.provenance.reference.iter().filter(|(k, _)| k.starts_with("h")).map(|(k, v)| (k.clone(), v / lambda)).collect();
    Ok(ZooEntry::new(
        Arc::new(Scaled { lambda, inner: h.shared() }),
        Provenance {
            kind: "scale".into(),
            parameters: serde_json::json!({ "lambda": lambda, "of": h.provenance.kind }),
            truncation_degree: h.provenance.truncation_degree,
            reference,
        },
    ))
}

struct Sum {
    a: SharedField,
    b: SharedField,
}

struct SumPotential {
    a: Arc<dyn Potential>,
    b: Arc<dyn Potential>,
}

impl Potential for SumPotential {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.a.value(x) + self.b.value(x)
    }
    fn smooth_radius(&self, z: &Point) -> Option<f64> {
        match (self.a.smooth_radius(z), self.b.smooth_radius(z)) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, None) => x,
            (None, y) => y,
        }
    }
}

impl MetricField for Sum {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn name(&self) -> String {
        format!("({} + {})", self.a.name(), self.b.name())
    }
    fn is_kahler(&self) -> bool {
        self.a.is_kahler() && self.b.is_kahler()
    }
    fn mode(&self) -> EvalMode {
        if self.a.mode() == EvalMode::ClosedFormJet && self.b.mode() == EvalMode::ClosedFormJet {
            EvalMode::ClosedFormJet
        } else {
            EvalMode::PotentialFd
        }
    }
    fn jet(&self, z: &Point) -> Result<MetricJet> {
        self.a.jet(z)?.added(&self.b.jet(z)?)
    }
    fn metric(&self, z: &Point) -> Result<DMatrix<C64>> {
        Ok(self.a.metric(z)? + self.b.metric(z)?)
    }
    fn potential(&self) -> Option<Arc<dyn Potential>> {
        Some(Arc::new(SumPotential { a: self.a.potential()?, b: self.b.potential()? }))
    }
    fn warnings(&self) -> Vec<String> {
        let mut w = self.a.warnings();
        w.extend(self.b.warnings());
        w
    }
}

/// `h + g`, componentwise on jets.
pub fn sum(h: &ZooEntry, g: &ZooEntry) -> Result<ZooEntry> {
    if h.dim() != g.dim() {
        return Err(PinchError::DimensionMismatch { expected: h.dim(), got: g.dim() });
    }
    Ok(ZooEntry::new(
        Arc::new(Sum { a: h.shared(), b: g.shared() }),
        Provenance {
            kind: "sum".into(),
            parameters: serde_json::json!({ "terms": [h.provenance.kind, g.provenance.kind] }),
            truncation_degree: None,
            reference: BTreeMap::new(),
        },
    ))
}

// ---------------------------------------------------------------------------
// Compactly supported perturbation of the potential

struct Bump {
    base: SharedField,
    base_potential: Arc<dyn Potential>,
    epsilon: f64,
    center: Point,
    radius: f64,
}

struct BumpPotential {
    base: Arc<dyn Potential>,
    epsilon: f64,
    center: Vec<f64>,
    radius: f64,
}

impl Potential for BumpPotential {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        self.base.value(x) + self.epsilon * bump_derivatives(s, self.radius)[0]
    }
    fn smooth_radius(&self, z: &Point) -> Option<f64> {
        self.base.smooth_radius(z)
    }
}

impl Bump {
    fn add_bump(&self, jet: &mut MetricJet, z: &Point) {
        if self.epsilon == 0.0 {
            return;
        }
        let w: Vec<C64> = z.coords().iter().zip(self.center.coords()).map(|(a, c)| a - c).collect();
        let s: f64 = w.iter().map(|c| c.norm_sqr()).sum();
        if s >= self.radius * self.radius {
            return;
        }
        radial_jet_into(jet, &w, bump_derivatives(s, self.radius), self.epsilon);
    }
}

impl MetricField for Bump {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn name(&self) -> String {
        format!("bump({}, ε={}, c={:?}, r={})", self.base.name(), self.epsilon, self.center, self.radius)
    }
    fn is_kahler(&self) -> bool {
        true
    }
    fn mode(&self) -> EvalMode {
        self.base.mode()
    }
    fn jet(&self, z: &Point) -> Result<MetricJet> {
        let mut jet = self.base.jet(z)?;
        self.add_bump(&mut jet, z);
        Ok(jet)
    }
    fn metric(&self, z: &Point) -> Result<DMatrix<C64>> {
        if self.epsilon == 0.0 || z.distance(&self.center) >= self.radius {
            return self.base.metric(z);
        }
        let mut h = self.base.metric(z)?;
        let mut bump = MetricJet::zeros(z.clone());
        self.add_bump(&mut bump, z);
        h += bump.h;
        Ok(h)
    }
    fn potential(&self) -> Option<Arc<dyn Potential>> {
        Some(Arc::new(BumpPotential {
            base: self.base_potential.clone(),
            epsilon: self.epsilon,
            center: self.center.real_coords(),
            radius: self.radius,
        }))
    }
    fn warnings(&self) -> Vec<String> {
        self.base.warnings()
    }
}

/// Points used to verify positive definiteness of a perturbation: the center and
/// a low-discrepancy fill of the support ball.
fn support_grid(center: &Point, radius: f64, count: usize) -> Vec<Point> {
    let dim = 2 * center.dim();
    let x0 = center.real_coords();
    let mut pts = vec![center.clone()];
    let mut seq = ShiftedHalton::new(dim, 0);
    while pts.len() < count {
        let u: Vec<f64> = seq.next_point().iter().map(|v| 2.0 * v - 1.0).collect();
        if u.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            pts.push(Point::from_real(&x0.iter().zip(&u).map(|(a, v)| a + radius * v).collect::<Vec<_>>()));
        }
    }
    pts
}

const SUPPORT_GRID_POINTS: usize = 400;

fn min_eigenvalue_on_support(base: &SharedField, epsilon: f64, center: &Point, radius: f64) -> Result<f64> {
    let probe = Bump {
        base: base.clone(),
        base_potential: base.potential().ok_or_else(|| PinchError::NoPotential(base.name()))?,
        epsilon,
        center: center.clone(),
        radius,
    };
    let mut lo = f64::INFINITY;
    for p in support_grid(center, radius, SUPPORT_GRID_POINTS) {
        let h = probe.metric(&p)?;
        lo = lo.min(linalg::hermitian_eigenvalues(&h)[0]);
    }
    Ok(lo)
}

/// Largest `|ε|` (with the sign of `direction`) keeping `φ + εχ` positive definite
/// on the verification grid, found by bracketing and bisection.
pub fn max_admissible_epsilon(base: &ZooEntry, center: &Point, radius: f64, direction: f64) -> Result<f64> {
    let sign = if direction < 0.0 { -1.0 } else { 1.0 };
    let field = base.shared();
    let ok = |e: f64| -> Result<bool> { Ok(min_eigenvalue_on_support(&field, sign * e, center, radius)? > 0.0) };
    let mut lo = 0.0;
    let mut hi = 1e-3;
    while ok(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(sign * f64::INFINITY);
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(sign * lo)
}

/// Perturbs the potential of `base` by `ε·χ`, `χ(z) = exp(−1/(1 − t²))` with
/// `t = |z − center| / radius` on the support ball and 0 outside. The result is Kähler.
pub fn bump_perturbation(base: &ZooEntry, epsilon: f64, center: Point, radius: f64, domain: &DomainSpec) -> Result<ZooEntry> {
    if center.dim() != base.dim() {
        return Err(PinchError::DimensionMismatch { expected: base.dim(), got: center.dim() });
    }
    if !(radius > 0.0) || !epsilon.is_finite() {
        return Err(PinchError::InvalidArgument("bump needs a positive radius and finite ε".into()));
    }
    let base_potential = base.potential().ok_or_else(|| PinchError::NoPotential(base.name()))?;
    let room = domain.boundary_distance(&center)?;
    if room <= radius {
        return Err(PinchError::InvalidArgument(format!(
            "bump support (radius {radius}) touches ∂Ω (boundary distance {room})"
        )));
    }
    if epsilon != 0.0 && min_eigenvalue_on_support(&base.shared(), epsilon, &center, radius)? <= 0.0 {
        let max_admissible = max_admissible_epsilon(base, &center, radius, epsilon)?;
        return Err(PinchError::PerturbationTooLarge { max_admissible });
    }
    let parameters = serde_json::json!({
        "base": base.provenance.kind,
        "epsilon": epsilon,
        "center": center.clone(),
        "radius": radius,
    });
    Ok(ZooEntry::new(
        Arc::new(Bump { base: base.shared(), base_potential, epsilon, center, radius }),
        Provenance { kind: "bump_perturbation".into(), parameters, truncation_degree: None, reference: BTreeMap::new() },
    ))
}

/// `(min λ_min(h), max λ_max(h))` over the samples: the constants of
/// `λ_lo · I ≤ h ≤ λ_hi · I`.
pub fn uniform_equivalence_bounds(h: &dyn MetricField, samples: &SampleSet) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(PinchError::EmptyRegion("no samples".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in &samples.points {
        let ev = linalg::hermitian_eigenvalues(&h.metric(p)?);
        lo = lo.min(ev[0]);
        hi = hi.max(ev[ev.len() - 1]);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{default_step, fd_cross_check, validate_positive_definite};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn ball_bergman_at_origin() {
        let b1 = ball_bergman(1.0, 1).unwrap();
        assert!((b1.metric(&Point::origin(1)).unwrap()[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
        let b2 = ball_bergman(1.0, 2).unwrap();
        let h = b2.metric(&Point::origin(2)).unwrap();
        assert_eq!(h, DMatrix::from_diagonal_element(2, 2, c(3.0, 0.0)));
    }

    #[test]
    fn ball_bergman_blows_up_along_a_ray() {
        let b = ball_bergman(1.0, 2).unwrap();
        let mut prev = 0.0;
        for r in [0.0, 0.3, 0.6, 0.9, 0.99] {
            let z = Point::new(vec![c(r / 2f64.sqrt(), 0.0), c(0.0, r / 2f64.sqrt())]);
            let lo = validate_positive_definite(&b.jet(&z).unwrap()).unwrap();
            assert!(lo > prev);
            prev = lo;
        }
        assert!(b.jet(&Point::new(vec![c(1.0, 0.0), c(0.0, 0.0)])).is_err());
    }

    #[test]
    fn jet_and_metric_agree() {
        let z = Point::new(vec![c(0.2, -0.1), c(0.3, 0.25)]);
        for f in [ball_bergman(1.3, 2).unwrap(), polydisc_bergman(vec![1.0, 0.8]).unwrap(), euclidean(2)] {
            let a = f.jet(&z).unwrap().h;
            let b = f.metric(&z).unwrap();
            assert!((a - b).norm() < 1e-13, "{}", f.name());
        }
    }

    #[test]
    fn polydisc_reduces_to_disc() {
        let p = polydisc_bergman(vec![0.7]).unwrap();
        let b = ball_bergman(0.7, 1).unwrap();
        let z = Point::new(vec![c(0.3, 0.2)]);
        assert!(p.jet(&z).unwrap().max_deviation(&b.jet(&z).unwrap()) < 1e-12);
        let p2 = polydisc_bergman(vec![1.0, 1.0]).unwrap();
        assert_eq!(p2.metric(&Point::origin(2)).unwrap(), DMatrix::from_diagonal_element(2, 2, c(2.0, 0.0)));
    }

    #[test]
    fn closed_forms_match_their_potentials() {
        let z = Point::new(vec![c(0.21, -0.13), c(-0.05, 0.3)]);
        for f in [ball_bergman(1.0, 2).unwrap(), polydisc_bergman(vec![1.0, 0.9]).unwrap(), euclidean(2)] {
            // fourth derivatives limit the accuracy away from symmetric points
            let r = fd_cross_check(&f, &z, 6e-3, 1e-5).unwrap();
            assert!(r.passed, "{} deviates by {:e}", f.name(), r.max_deviation);
            let o = Point::origin(2);
            let r = fd_cross_check(&f, &o, default_step(&o), 1e-6).unwrap();
            assert!(r.passed, "{} deviates by {:?} at 0", f.name(), r.block_deviation);
        }
    }

    #[test]
    fn scale_and_sum() {
        let e = euclidean(2);
        let z = Point::new(vec![c(0.1, 0.0), c(0.0, 0.2)]);
        assert_eq!(scale(2.0, &e).unwrap().metric(&z).unwrap(), DMatrix::from_diagonal_element(2, 2, c(2.0, 0.0)));
        assert_eq!(sum(&e, &e).unwrap().metric(&z).unwrap(), DMatrix::from_diagonal_element(2, 2, c(2.0, 0.0)));
        let b = ball_bergman(1.0, 1).unwrap();
        let s = sum(&b, &euclidean(1)).unwrap();
        assert_eq!(s.metric(&Point::origin(1)).unwrap()[(0, 0)], c(3.0, 0.0));
        assert!(scale(0.0, &e).is_err());
        assert!(sum(&e, &euclidean(3)).is_err());
    }

    #[test]
    fn bump_is_identity_outside_support_and_for_zero_epsilon() {
        let dom = DomainSpec::unit_ball(2);
        let b = ball_bergman(1.0, 2).unwrap();
        let zero = bump_perturbation(&b, 0.0, Point::origin(2), 0.3, &dom).unwrap();
        let z = Point::new(vec![c(0.1, 0.05), c(-0.02, 0.1)]);
        assert_eq!(zero.jet(&z).unwrap().ddbar_h, b.jet(&z).unwrap().ddbar_h);
        let bumped = bump_perturbation(&b, 0.1, Point::origin(2), 0.3, &dom).unwrap();
        let outside = Point::new(vec![c(0.4, 0.0), c(0.0, 0.1)]);
        assert_eq!(bumped.jet(&outside).unwrap().ddbar_h, b.jet(&outside).unwrap().ddbar_h);
        assert!(bumped.jet(&z).unwrap().max_deviation(&b.jet(&z).unwrap()) > 0.0);
    }

    #[test]
    fn bump_closed_form_matches_potential() {
        let dom = DomainSpec::unit_ball(2);
        let b = ball_bergman(1.0, 2).unwrap();
        let bumped = bump_perturbation(&b, 0.2, Point::origin(2), 0.3, &dom).unwrap();
        let z = Point::new(vec![c(0.08, 0.05), c(-0.06, 0.1)]);
        let r = fd_cross_check(&bumped, &z, 2e-3, 1e-4).unwrap();
        assert!(r.passed, "deviation {:e}", r.max_deviation);
    }

    #[test]
    fn bump_rejects_bad_support_and_large_epsilon() {
        let dom = DomainSpec::unit_ball(1);
        let b = ball_bergman(1.0, 1).unwrap();
        assert!(bump_perturbation(&b, 0.1, Point::new(vec![c(0.8, 0.0)]), 0.3, &dom).is_err());
        match bump_perturbation(&b, 50.0, Point::origin(1), 0.3, &dom) {
            Err(PinchError::PerturbationTooLarge { max_admissible }) => {
                assert!(max_admissible > 0.0 && max_admissible < 50.0);
                assert!(bump_perturbation(&b, 0.99 * max_admissible, Point::origin(1), 0.3, &dom).is_ok());
            }
            other => panic!("expected PerturbationTooLarge, got {:?}", other.err()),
        }
    }

    #[test]
    fn uniform_equivalence_of_disc_bergman_on_a_disc() {
        let dom = DomainSpec::unit_ball(1);
        let pts = vec![Point::origin(1), Point::new(vec![c(0.5, 0.0)]), Point::new(vec![c(0.0, 0.3)])];
        let s = SampleSet::from_points(dom, crate::RegionTag::Global, pts).unwrap();
        let (lo, hi) = uniform_equivalence_bounds(&ball_bergman(1.0, 1).unwrap(), &s).unwrap();
        assert!((lo - 2.0).abs() < 1e-14);
        assert!((hi - 32.0 / 9.0).abs() < 1e-13);
        assert_eq!(uniform_equivalence_bounds(&euclidean(1), &s).unwrap(), (1.0, 1.0));
        let (lo3, hi3) = uniform_equivalence_bounds(&scale(3.0, &euclidean(1)).unwrap(), &s).unwrap();
        assert_eq!((lo3, hi3), (3.0, 3.0));
    }
}
