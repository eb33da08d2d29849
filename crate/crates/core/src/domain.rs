//! Bounded domains in ℂⁿ: membership, boundary distance, diameter and
//! deterministic sample sets for compacts `K_δ = {d(z, ∂Ω) ≥ δ}` and collars.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{PinchError, Result};
use crate::sampling::ShiftedHalton;
use crate::C64;

/// A point of ℂⁿ. Serialized as a list of `[re, im]` pairs.
#[derive(Clone, PartialEq)]
pub struct Point(Vec<C64>);

impl Point {
    pub fn new(coords: Vec<C64>) -> Self {
        assert!(!coords.is_empty(), "points need dimension n >= 1");
        Point(coords)
    }

    pub fn origin(n: usize) -> Self {
        Point::new(vec![C64::new(0.0, 0.0); n])
    }

    /// From `2n` reals ordered `re(z1), im(z1), re(z2), ...`.
    pub fn from_real(x: &[f64]) -> Self {
        assert!(x.len() % 2 == 0 && !x.is_empty());
        Point(x.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
    }

    pub fn real_coords(&self) -> Vec<f64> {
        self.0.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, t: f64) -> Point {
        Point(self.0.iter().map(|a| a * t).collect())
    }
}

impl std::ops::Index<usize> for Point {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, z) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}{:+}i", z.re, z.im)?;
        }
        f.write_str(")")
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.0.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        if pairs.is_empty() {
            return Err(serde::de::Error::custom("a point needs at least one coordinate"));
        }
        let p = Point(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect());
        if !p.is_finite() {
            return Err(serde::de::Error::custom("point coordinates must be finite"));
        }
        Ok(p)
    }
}

/// An element of `T_z^{1,0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vec<C64>,
}

impl TangentVector {
    pub fn new(base: Point, components: Vec<C64>) -> Result<Self> {
        if base.dim() != components.len() {
            return Err(PinchError::DimensionMismatch { expected: base.dim(), got: components.len() });
        }
        Ok(Self { base, components })
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|z| z.norm_sqr() == 0.0)
    }
}

/// Profile of a complete Reinhardt domain `{ z : level(|z_1|, …, |z_n|) < 1 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReinhardtProfile {
    /// `Σ (r_i / a_i)^{p_i} < 1`. Exponents 2 give ellipsoids, the unit ball when all `a_i = 1`.
    PowerSum { radii: Vec<f64>, exponents: Vec<f64> },
    /// `max_i r_i / a_i < 1`, a polydisc.
    Max { radii: Vec<f64> },
}

impl ReinhardtProfile {
    pub fn dim(&self) -> usize {
        match self {
            ReinhardtProfile::PowerSum { radii, .. } | ReinhardtProfile::Max { radii } => radii.len(),
        }
    }

    pub fn radii(&self) -> &[f64] {
        match self {
            ReinhardtProfile::PowerSum { radii, .. } | ReinhardtProfile::Max { radii } => radii,
        }
    }

    pub fn level(&self, moduli: &[f64]) -> f64 {
        match self {
            ReinhardtProfile::PowerSum { radii, exponents } => moduli
                .iter()
                .zip(radii)
                .zip(exponents)
                .map(|((r, a), p)| (r / a).powf(*p))
                .sum(),
            ReinhardtProfile::Max { radii } => moduli
                .iter()
                .zip(radii)
                .map(|(r, a)| r / a)
                .fold(0.0, f64::max),
        }
    }

    /// Largest admissible modulus of coordinate `leading.len()` given the moduli of
    /// the preceding coordinates, with all later coordinates set to zero. Both
    /// profile kinds are monotone in each modulus, so the shadow slice is an interval.
    pub fn radius_bound(&self, leading: &[f64]) -> f64 {
        let k = leading.len();
        match self {
            ReinhardtProfile::PowerSum { radii, exponents } => {
                let used: f64 = leading
                    .iter()
                    .zip(radii)
                    .zip(exponents)
                    .map(|((r, a), p)| (r / a).powf(*p))
                    .sum();
                if used >= 1.0 {
                    0.0
                } else {
                    radii[k] * (1.0 - used).powf(1.0 / exponents[k])
                }
            }
            ReinhardtProfile::Max { radii } => {
                if leading.iter().zip(radii).any(|(r, a)| r >= a) {
                    0.0
                } else {
                    radii[k]
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.radii().is_empty() || self.radii().iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(PinchError::InvalidArgument("Reinhardt radii must be positive".into()));
        }
        if let ReinhardtProfile::PowerSum { radii, exponents } = self {
            if exponents.len() != radii.len() || exponents.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
                return Err(PinchError::InvalidArgument(
                    "power-sum profile needs one positive exponent per radius".into(),
                ));
            }
        }
        Ok(())
    }
}

/// User-supplied defining function of `Ω = {ρ < 0}`.
#[derive(Clone)]
pub struct CustomRho(pub Arc<dyn Fn(&Point) -> f64 + Send + Sync>);

impl fmt::Debug for CustomRho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomRho(..)")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefiningFunction {
    /// `ρ(z) = Σ |z_i − c_i|² / a_i² − 1`.
    Ellipsoid { center: Point, semi_axes: Vec<f64> },
    #[serde(skip)]
    Custom(CustomRho),
}

impl DefiningFunction {
    pub fn eval(&self, z: &Point) -> f64 {
        match self {
            DefiningFunction::Ellipsoid { center, semi_axes } => {
                z.coords()
                    .iter()
                    .zip(center.coords())
                    .zip(semi_axes)
                    .map(|((zi, ci), a)| (zi - ci).norm_sqr() / (a * a))
                    .sum::<f64>()
                    - 1.0
            }
            DefiningFunction::Custom(f) => (f.0)(z),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DomainSpec {
    Ball { center: Point, radius: f64 },
    Polydisc { center: Point, radii: Vec<f64> },
    Reinhardt { profile: ReinhardtProfile },
    /// `bounding_box` holds one `[lo, hi]` interval per real coordinate.
    Defining { rho: DefiningFunction, bounding_box: Vec<[f64; 2]> },
}

/// How an estimated quantity relates to the true value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    Upper,
    Lower,
    Estimate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub tolerance: f64,
    pub bound: BoundKind,
}

const BISECTION_TOL: f64 = 1e-12;

impl DomainSpec {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        let d = DomainSpec::Ball { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_ball(n: usize) -> Self {
        DomainSpec::Ball { center: Point::origin(n), radius: 1.0 }
    }

    pub fn polydisc(center: Point, radii: Vec<f64>) -> Result<Self> {
        let d = DomainSpec::Polydisc { center, radii };
        d.validate()?;
        Ok(d)
    }

    pub fn reinhardt(profile: ReinhardtProfile) -> Result<Self> {
        let d = DomainSpec::Reinhardt { profile };
        d.validate()?;
        Ok(d)
    }

    pub fn defining(rho: DefiningFunction, bounding_box: Vec<[f64; 2]>) -> Result<Self> {
        let d = DomainSpec::Defining { rho, bounding_box };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Ball { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) || !center.is_finite() {
                    return Err(PinchError::InvalidArgument("ball radius must be positive".into()));
                }
            }
            DomainSpec::Polydisc { center, radii } => {
                if radii.len() != center.dim() {
                    return Err(PinchError::DimensionMismatch { expected: center.dim(), got: radii.len() });
                }
                if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                    return Err(PinchError::InvalidArgument("polydisc radii must be positive".into()));
                }
            }
            DomainSpec::Reinhardt { profile } => profile.validate()?,
            DomainSpec::Defining { rho, bounding_box } => {
                if bounding_box.is_empty() || bounding_box.len() % 2 != 0 {
                    return Err(PinchError::InvalidArgument(
                        "bounding box needs one interval per real coordinate".into(),
                    ));
                }
                if bounding_box.iter().any(|[lo, hi]| !(lo < hi && lo.is_finite() && hi.is_finite())) {
                    return Err(PinchError::InvalidArgument("bounding box intervals must be nonempty".into()));
                }
                if let DefiningFunction::Ellipsoid { center, semi_axes } = rho {
                    if center.dim() * 2 != bounding_box.len() || semi_axes.len() != center.dim() {
                        return Err(PinchError::DimensionMismatch {
                            expected: bounding_box.len() / 2,
                            got: center.dim(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Ball { center, .. } | DomainSpec::Polydisc { center, .. } => center.dim(),
            DomainSpec::Reinhardt { profile } => profile.dim(),
            DomainSpec::Defining { bounding_box, .. } => bounding_box.len() / 2,
        }
    }

    pub fn smoothness_note(&self) -> &'static str {
        match self {
            DomainSpec::Ball { .. } => "real-analytic strongly convex boundary",
            DomainSpec::Polydisc { .. } => "Lipschitz boundary with corners (product of discs)",
            DomainSpec::Reinhardt { .. } => "boundary regularity follows the radial profile",
            DomainSpec::Defining { .. } => "boundary regularity follows the defining function",
        }
    }

    pub fn name(&self) -> String {
        match self {
            DomainSpec::Ball { center, radius } => format!("ball(center={center:?}, r={radius})"),
            DomainSpec::Polydisc { center, radii } => format!("polydisc(center={center:?}, radii={radii:?})"),
            DomainSpec::Reinhardt { profile } => format!("reinhardt({profile:?})"),
            DomainSpec::Defining { rho, .. } => format!("defining({rho:?})"),
        }
    }

    fn check_dim(&self, z: &Point) -> Result<()> {
        if z.dim() != self.dim() {
            return Err(PinchError::DimensionMismatch { expected: self.dim(), got: z.dim() });
        }
        Ok(())
    }

    /// Strict membership `z ∈ Ω`.
    pub fn contains(&self, z: &Point) -> Result<bool> {
        self.check_dim(z)?;
        Ok(self.contains_unchecked(z))
    }

    fn contains_unchecked(&self, z: &Point) -> bool {
        if !z.is_finite() {
            return false;
        }
        match self {
            DomainSpec::Ball { center, radius } => z.distance(center) < *radius,
            DomainSpec::Polydisc { center, radii } => z
                .coords()
                .iter()
                .zip(center.coords())
                .zip(radii)
                .all(|((zi, ci), r)| (zi - ci).norm() < *r),
            DomainSpec::Reinhardt { profile } => {
                let moduli: Vec<f64> = z.coords().iter().map(|c| c.norm()).collect();
                profile.level(&moduli) < 1.0
            }
            DomainSpec::Defining { rho, bounding_box } => {
                let x = z.real_coords();
                x.iter().zip(bounding_box).all(|(v, [lo, hi])| v >= lo && v <= hi) && rho.eval(z) < 0.0
            }
        }
    }

    /// Euclidean distance to `∂Ω`.
    pub fn boundary_distance(&self, z: &Point) -> Result<f64> {
        Ok(self.boundary_distance_estimate(z)?.value)
    }

    /// Distance to the boundary with its error bar. Exact for balls and polydiscs;
    /// otherwise a ray search (grid march + bisection) refined along boundary normals.
    pub fn boundary_distance_estimate(&self, z: &Point) -> Result<Estimate> {
        self.check_dim(z)?;
        if !self.contains_unchecked(z) {
            return Err(PinchError::OutsideDomain(format!("{z:?} is not in {}", self.name())));
        }
        Ok(match self {
            DomainSpec::Ball { center, radius } => Estimate {
                value: radius - z.distance(center),
                tolerance: 0.0,
                bound: BoundKind::Exact,
            },
            DomainSpec::Polydisc { center, radii } => Estimate {
                value: z
                    .coords()
                    .iter()
                    .zip(center.coords())
                    .zip(radii)
                    .map(|((zi, ci), r)| r - (zi - ci).norm())
                    .fold(f64::INFINITY, f64::min),
                tolerance: 0.0,
                bound: BoundKind::Exact,
            },
            _ => self.ray_distance(z),
        })
    }

    fn ray_exit(&self, z: &Point, dir: &[f64], step: f64, t_max: f64) -> f64 {
        let x0 = z.real_coords();
        let at = |t: f64| Point::from_real(&x0.iter().zip(dir).map(|(a, d)| a + t * d).collect::<Vec<_>>());
        let mut lo = 0.0;
        let mut hi = step;
        while hi < t_max && self.contains_unchecked(&at(hi)) {
            lo = hi;
            hi += step;
        }
        if hi >= t_max {
            hi = t_max;
        }
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if self.contains_unchecked(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn ray_distance(&self, z: &Point) -> Estimate {
        let dim = 2 * self.dim();
        let extent = self.bounding_box_diagonal();
        let step = extent / 100.0;
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for d in 0..dim {
            for s in [1.0, -1.0] {
                let mut v = vec![0.0; dim];
                v[d] = s;
                dirs.push(v);
            }
        }
        dirs.extend(sphere_directions(dim, 64, 0x5eed));
        let mut best = f64::INFINITY;
        let mut best_dir = dirs[0].clone();
        for d in &dirs {
            let t = self.ray_exit(z, d, step, extent);
            if t < best {
                best = t;
                best_dir = d.clone();
            }
        }
        // Follow the boundary normal at the current nearest point.
        let x0 = z.real_coords();
        for _ in 0..50 {
            let p: Vec<f64> = x0.iter().zip(&best_dir).map(|(a, d)| a + best * d).collect();
            let normal = self.outward_normal(&p, 1e-6 * extent.max(1e-3));
            let Some(normal) = normal else { break };
            let t = self.ray_exit(z, &normal, step.min(best / 4.0).max(1e-9), extent);
            if t < best - 1e-13 {
                best = t;
                best_dir = normal;
            } else {
                break;
            }
        }
        Estimate { value: best, tolerance: BISECTION_TOL.max(1e-9 * extent), bound: BoundKind::Estimate }
    }

    /// Outward normal from finite differences of a membership-compatible level function.
    fn outward_normal(&self, x: &[f64], h: f64) -> Option<Vec<f64>> {
        let level = |x: &[f64]| -> f64 {
            let p = Point::from_real(x);
            match self {
                DomainSpec::Reinhardt { profile } => {
                    let moduli: Vec<f64> = p.coords().iter().map(|c| c.norm()).collect();
                    profile.level(&moduli) - 1.0
                }
                DomainSpec::Defining { rho, .. } => rho.eval(&p),
                _ => unreachable!("exact variants never use the ray search"),
            }
        };
        let mut g: Vec<f64> = (0..x.len())
            .map(|k| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                (level(&xp) - level(&xm)) / (2.0 * h)
            })
            .collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return None;
        }
        g.iter_mut().for_each(|v| *v /= norm);
        Some(g)
    }

    fn bounding_box_diagonal(&self) -> f64 {
        self.bounding_box()
            .iter()
            .map(|[lo, hi]| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    /// Axis-aligned box (per real coordinate) containing the closure of Ω.
    pub fn bounding_box(&self) -> Vec<[f64; 2]> {
        match self {
            DomainSpec::Ball { center, radius } => center
                .real_coords()
                .iter()
                .map(|c| [c - radius, c + radius])
                .collect(),
            DomainSpec::Polydisc { center, radii } => center
                .coords()
                .iter()
                .zip(radii)
                .flat_map(|(c, r)| [[c.re - r, c.re + r], [c.im - r, c.im + r]])
                .collect(),
            DomainSpec::Reinhardt { profile } => {
                profile.radii().iter().flat_map(|r| [[-r, *r], [-r, *r]]).collect()
            }
            DomainSpec::Defining { bounding_box, .. } => bounding_box.clone(),
        }
    }

    /// Box containing `{ z ∈ Ω : d(z, ∂Ω) ≥ δ }`.
    fn inner_bounding_box(&self, delta: f64) -> Vec<[f64; 2]> {
        match self {
            DomainSpec::Ball { center, radius } => {
                let r = (radius - delta).max(0.0);
                center.real_coords().iter().map(|c| [c - r, c + r]).collect()
            }
            DomainSpec::Polydisc { center, radii } => center
                .coords()
                .iter()
                .zip(radii)
                .flat_map(|(c, r)| {
                    let r = (r - delta).max(0.0);
                    [[c.re - r, c.re + r], [c.im - r, c.im + r]]
                })
                .collect(),
            _ => self
                .bounding_box()
                .iter()
                .map(|[lo, hi]| {
                    let shrink = delta.min(0.5 * (hi - lo));
                    [lo + shrink, hi - shrink]
                })
                .collect(),
        }
    }

    /// Largest boundary distance attained in Ω when it is known in closed form.
    fn inradius(&self) -> Option<f64> {
        match self {
            DomainSpec::Ball { radius, .. } => Some(*radius),
            DomainSpec::Polydisc { radii, .. } => Some(radii.iter().copied().fold(f64::INFINITY, f64::min)),
            _ => None,
        }
    }

    pub fn diameter(&self) -> f64 {
        self.diameter_estimate().value
    }

    /// Exact for balls and polydiscs. Otherwise the largest pairwise distance among
    /// boundary samples inflated by 1%, capped by the bounding-box diagonal.
    pub fn diameter_estimate(&self) -> Estimate {
        match self {
            DomainSpec::Ball { radius, .. } => {
                Estimate { value: 2.0 * radius, tolerance: 0.0, bound: BoundKind::Exact }
            }
            DomainSpec::Polydisc { radii, .. } => Estimate {
                value: 2.0 * radii.iter().map(|r| r * r).sum::<f64>().sqrt(),
                tolerance: 0.0,
                bound: BoundKind::Exact,
            },
            _ => {
                let pts = self.boundary_samples(1024);
                let mut best: f64 = 0.0;
                for i in 0..pts.len() {
                    for j in (i + 1)..pts.len() {
                        best = best.max(pts[i].distance(&pts[j]));
                    }
                }
                let value = (1.01 * best).min(self.bounding_box_diagonal());
                Estimate { value, tolerance: 0.01 * best, bound: BoundKind::Upper }
            }
        }
    }

    /// Supremum of `|z|` over Ω (distance of the farthest point from the origin).
    pub fn circumradius_about_origin(&self) -> f64 {
        match self {
            DomainSpec::Ball { center, radius } => center.norm() + radius,
            DomainSpec::Polydisc { center, radii } => center
                .coords()
                .iter()
                .zip(radii)
                .map(|(c, r)| (c.norm() + r).powi(2))
                .sum::<f64>()
                .sqrt(),
            _ => self
                .boundary_samples(1024)
                .iter()
                .map(|p| p.norm())
                .fold(0.0, f64::max),
        }
    }

    fn interior_reference(&self) -> Option<Point> {
        match self {
            DomainSpec::Ball { center, .. } | DomainSpec::Polydisc { center, .. } => Some(center.clone()),
            DomainSpec::Reinhardt { profile } => Some(Point::origin(profile.dim())),
            DomainSpec::Defining { bounding_box, .. } => {
                let mid: Vec<f64> = bounding_box.iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect();
                let p = Point::from_real(&mid);
                if self.contains_unchecked(&p) {
                    return Some(p);
                }
                let mut seq = ShiftedHalton::new(bounding_box.len(), 0);
                (0..100_000).find_map(|_| {
                    let u = seq.next_point();
                    let x: Vec<f64> = u.iter().zip(bounding_box).map(|(u, [lo, hi])| lo + u * (hi - lo)).collect();
                    let p = Point::from_real(&x);
                    self.contains_unchecked(&p).then_some(p)
                })
            }
        }
    }

    fn boundary_samples(&self, count: usize) -> Vec<Point> {
        let Some(center) = self.interior_reference() else { return Vec::new() };
        let extent = self.bounding_box_diagonal();
        let x0 = center.real_coords();
        sphere_directions(2 * self.dim(), count, 0xd1a)
            .iter()
            .map(|d| {
                let t = self.ray_exit(&center, d, extent / 100.0, extent);
                Point::from_real(&x0.iter().zip(d).map(|(a, v)| a + t * v).collect::<Vec<_>>())
            })
            .collect()
    }

    /// Lower bound `d(z, ∂Ω) / diam(Ω)` for the squeezing function.
    pub fn squeezing_lower_bound(&self, z: &Point) -> Result<f64> {
        Ok(self.boundary_distance(z)? / self.diameter())
    }

    /// Points of `K_δ = { z ∈ Ω : d(z, ∂Ω) ≥ δ }`.
    pub fn sample_compact(&self, delta: f64, density: usize, seed: u64) -> Result<SampleSet> {
        if !(delta > 0.0) {
            return Err(PinchError::InvalidArgument("compact offset δ must be positive".into()));
        }
        if let Some(r) = self.inradius() {
            if delta >= r {
                return Err(PinchError::EmptyRegion(format!("K_δ is empty for δ = {delta} (inradius {r})")));
            }
        }
        let tag = RegionTag::Compact { delta };
        let bbox = self.inner_bounding_box(delta);
        self.fill(tag, &bbox, density, seed)
    }

    /// Points with `δ_out ≤ d(z, ∂Ω) ≤ δ_in`.
    pub fn sample_collar(&self, delta_out: f64, delta_in: f64, density: usize, seed: u64) -> Result<SampleSet> {
        if !(delta_out > 0.0 && delta_out < delta_in) {
            return Err(PinchError::InvalidArgument(format!(
                "collar needs 0 < δ_out < δ_in (got {delta_out}, {delta_in})"
            )));
        }
        if let Some(r) = self.inradius() {
            if delta_out >= r {
                return Err(PinchError::EmptyRegion(format!("collar is empty for δ_out = {delta_out}")));
            }
        }
        let tag = RegionTag::Collar { delta_out, delta_in };
        let bbox = self.inner_bounding_box(delta_out);
        self.fill(tag, &bbox, density, seed)
    }

    /// Points anywhere in Ω.
    pub fn sample_global(&self, density: usize, seed: u64) -> Result<SampleSet> {
        let bbox = self.bounding_box();
        self.fill(RegionTag::Global, &bbox, density, seed)
    }

    pub fn region_contains(&self, tag: &RegionTag, z: &Point) -> bool {
        if z.dim() != self.dim() || !self.contains_unchecked(z) {
            return false;
        }
        match tag {
            RegionTag::Global => true,
            RegionTag::Compact { delta } => self.boundary_distance(z).map(|d| d >= *delta).unwrap_or(false),
            RegionTag::Collar { delta_out, delta_in } => self
                .boundary_distance(z)
                .map(|d| d >= *delta_out && d <= *delta_in)
                .unwrap_or(false),
        }
    }

    fn fill(&self, tag: RegionTag, bbox: &[[f64; 2]], density: usize, seed: u64) -> Result<SampleSet> {
        if density == 0 {
            return Err(PinchError::InvalidArgument("density must be positive".into()));
        }
        let mut seq = ShiftedHalton::new(bbox.len(), seed);
        let budget = 20_000 + 2_000 * density;
        let mut points = Vec::with_capacity(density);
        for _ in 0..budget {
            let u = seq.next_point();
            let x: Vec<f64> = u.iter().zip(bbox).map(|(u, [lo, hi])| lo + u * (hi - lo)).collect();
            let p = Point::from_real(&x);
            if self.region_contains(&tag, &p) {
                points.push(p);
                if points.len() == density {
                    break;
                }
            }
        }
        if points.is_empty() {
            return Err(PinchError::EmptyRegion(format!("no sample of {tag} found in {}", self.name())));
        }
        Ok(SampleSet { domain: self.clone(), points, seed, tag, density })
    }
}

fn sphere_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    // Box–Muller on quasi-random pairs gives well-spread Gaussian vectors.
    let pairs = dim.div_ceil(2);
    let mut seq = ShiftedHalton::new(2 * pairs, seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = seq.next_point();
        let mut g = Vec::with_capacity(2 * pairs);
        for k in 0..pairs {
            let r = (-2.0 * (1.0 - u[2 * k]).ln()).sqrt();
            let th = std::f64::consts::TAU * u[2 * k + 1];
            g.push(r * th.cos());
            g.push(r * th.sin());
        }
        g.truncate(dim);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            out.push(g.into_iter().map(|v| v / norm).collect());
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "snake_case")]
pub enum RegionTag {
    Compact { delta: f64 },
    Collar { delta_out: f64, delta_in: f64 },
    Global,
}

impl fmt::Display for RegionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionTag::Compact { delta } => write!(f, "compact(δ={delta})"),
            RegionTag::Collar { delta_out, delta_in } => write!(f, "collar(δ_out={delta_out},δ_in={delta_in})"),
            RegionTag::Global => f.write_str("global"),
        }
    }
}

/// Ordered, reproducible sample of a region of Ω.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub domain: DomainSpec,
    pub points: Vec<Point>,
    pub seed: u64,
    pub tag: RegionTag,
    pub density: usize,
}

impl SampleSet {
    /// Wraps explicit points; every point must lie in the tagged region.
    pub fn from_points(domain: DomainSpec, tag: RegionTag, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(PinchError::EmptyRegion("explicit sample set is empty".into()));
        }
        for p in &points {
            domain.check_dim(p)?;
            if !domain.region_contains(&tag, p) {
                return Err(PinchError::OutsideDomain(format!("{p:?} is not in {tag}")));
            }
        }
        let density = points.len();
        Ok(SampleSet { domain, points, seed: 0, tag, density })
    }

    pub fn id(&self) -> String {
        format!("{}/seed={}/n={}", self.tag, self.seed, self.points.len())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, z: &Point) -> bool {
        self.domain.region_contains(&self.tag, z)
    }

    /// Concatenation; the result keeps the broader region tag of `self`'s domain.
    pub fn union(&self, other: &SampleSet) -> SampleSet {
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        let tag = match (self.tag, other.tag) {
            (RegionTag::Compact { delta }, RegionTag::Collar { delta_out, delta_in }) if delta <= delta_in => {
                RegionTag::Compact { delta: delta_out }
            }
            (RegionTag::Collar { delta_out, delta_in }, RegionTag::Compact { delta }) if delta <= delta_in => {
                RegionTag::Compact { delta: delta_out }
            }
            _ => RegionTag::Global,
        };
        SampleSet { domain: self.domain.clone(), density: points.len(), points, seed: self.seed, tag }
    }

    /// CSV with columns `re(z1),im(z1),…,tag,seed,units`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.domain.dim();
        let mut header: Vec<String> = (1..=n).flat_map(|k| [format!("re(z{k})"), format!("im(z{k})")]).collect();
        header.extend(["tag".to_string(), "seed".to_string(), "units".to_string()]);
        w.write_record(&header)?;
        let tag = self.tag.to_string();
        for p in &self.points {
            let mut rec: Vec<String> = p.real_coords().iter().map(|v| format!("{v:e}")).collect();
            rec.push(tag.clone());
            rec.push(self.seed.to_string());
            rec.push("euclidean coordinates".to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[(f64, f64)]) -> Point {
        Point::new(v.iter().map(|&(a, b)| C64::new(a, b)).collect())
    }

    #[test]
    fn ball_membership() {
        let b = DomainSpec::unit_ball(3);
        assert!(b.contains(&Point::origin(3)).unwrap());
        assert!(!b.contains(&pt(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)])).unwrap());
    }

    #[test]
    fn polydisc_membership() {
        let d = DomainSpec::polydisc(Point::origin(2), vec![1.0, 1.0]).unwrap();
        assert!(d.contains(&pt(&[(0.5, 0.0), (0.99, 0.0)])).unwrap());
        assert!(!d.contains(&pt(&[(0.5, 0.0), (0.0, 1.0)])).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let b = DomainSpec::unit_ball(2);
        assert!(matches!(b.contains(&Point::origin(3)), Err(PinchError::DimensionMismatch { .. })));
    }

    #[test]
    fn exact_boundary_distances() {
        let b = DomainSpec::unit_ball(2);
        assert_eq!(b.boundary_distance(&Point::origin(2)).unwrap(), 1.0);
        let b2 = DomainSpec::ball(Point::origin(2), 2.0).unwrap();
        assert_eq!(b2.boundary_distance(&pt(&[(1.0, 0.0), (0.0, 0.0)])).unwrap(), 1.0);
        let p = DomainSpec::polydisc(Point::origin(2), vec![1.0, 2.0]).unwrap();
        assert_eq!(p.boundary_distance(&pt(&[(0.5, 0.0), (0.0, 0.0)])).unwrap(), 0.5);
        assert!(b.boundary_distance(&pt(&[(2.0, 0.0), (0.0, 0.0)])).is_err());
    }

    #[test]
    fn diameters() {
        assert_eq!(DomainSpec::unit_ball(2).diameter(), 2.0);
        for k in 1..=10 {
            let r = 0.37 * k as f64;
            assert_eq!(DomainSpec::ball(Point::origin(2), r).unwrap().diameter(), 2.0 * r);
        }
        let p = DomainSpec::polydisc(Point::origin(2), vec![1.0, 1.0]).unwrap();
        assert!((p.diameter() - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn reinhardt_ball_distance_and_diameter_match_the_ball() {
        let r = DomainSpec::reinhardt(ReinhardtProfile::PowerSum { radii: vec![1.0, 1.0], exponents: vec![2.0, 2.0] })
            .unwrap();
        let z = pt(&[(0.3, -0.1), (0.2, 0.25)]);
        let d = r.boundary_distance_estimate(&z).unwrap();
        assert!((d.value - (1.0 - z.norm())).abs() < 1e-6, "{d:?}");
        let diam = r.diameter_estimate();
        assert!(diam.value >= 2.0 - 1e-9 && diam.value <= 2.0 * 1.0101, "{diam:?}");
    }

    #[test]
    fn defining_ellipsoid_distance() {
        let rho = DefiningFunction::Ellipsoid { center: Point::origin(1), semi_axes: vec![2.0] };
        let d = DomainSpec::defining(rho, vec![[-2.0, 2.0], [-2.0, 2.0]]).unwrap();
        let z = pt(&[(0.5, 0.5)]);
        assert!((d.boundary_distance(&z).unwrap() - (2.0 - z.norm())).abs() < 1e-6);
    }

    #[test]
    fn compact_samples_respect_the_offset() {
        let b = DomainSpec::unit_ball(2);
        let s = b.sample_compact(0.5, 200, 3).unwrap();
        assert_eq!(s.len(), 200);
        assert!(s.points.iter().all(|p| p.norm() <= 0.5 + 1e-15));
        let again = b.sample_compact(0.5, 200, 3).unwrap();
        assert_eq!(s.points, again.points);
    }

    #[test]
    fn degenerate_compact_is_tiny_or_empty() {
        let b = DomainSpec::unit_ball(2);
        let s = b.sample_compact(0.999, 5, 1).unwrap();
        assert!(s.points.iter().all(|p| p.norm() <= 1e-3 + 1e-12));
        assert!(matches!(b.sample_compact(1.0, 5, 1), Err(PinchError::EmptyRegion(_))));
    }

    #[test]
    fn collar_samples_lie_in_the_shell() {
        let b = DomainSpec::unit_ball(2);
        let s = b.sample_collar(0.05, 0.5, 150, 11).unwrap();
        assert!(s.points.iter().all(|p| p.norm() >= 0.5 - 1e-15 && p.norm() <= 0.95 + 1e-15));
        assert_eq!(s.points, b.sample_collar(0.05, 0.5, 150, 11).unwrap().points);
        assert!(b.sample_collar(0.5, 0.5, 10, 1).is_err());
        assert!(b.sample_collar(0.6, 0.5, 10, 1).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = DomainSpec::unit_ball(1).sample_global(3, 5).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "re(z1),im(z1),tag,seed,units");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"variant":"ball","center":[[0,0],[0,0]],"radius":1.5}"#;
        let d: DomainSpec = serde_json::from_str(json).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.diameter(), 3.0);
        let back: DomainSpec = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back.diameter(), 3.0);
    }
}
