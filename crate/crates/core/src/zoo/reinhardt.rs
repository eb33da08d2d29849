//! Truncated Bergman kernels of complete Reinhardt domains.
//!
//! Monomials are orthogonal on such domains, so
//! `K_N(z, z) = Σ_{|α| ≤ N} |z^α|² / c_α` with `c_α = ∫_Ω |z^α|² dV`.
//! In polar coordinates `c_α = (2π)ⁿ ∫ Π r_j^{2α_j + 1} dr` over the shadow
//! `{r ∈ ℝ₊ⁿ : (r_1, …, r_n) ∈ Ω}`; the innermost radial integral is done in
//! closed form and the outer ones by adaptive Gauss–Kronrod.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Provenance, ZooEntry};
use crate::domain::{DomainSpec, Point, ReinhardtProfile};
use crate::error::{PinchError, Result};
use crate::jet::{FdConfig, Potential, PotentialField};
use crate::quadrature;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { rel_tol: 1e-8, abs_tol: 0.0, max_intervals: 2000 }
    }
}

/// All multi-indices of length `n` with `|α| ≤ degree`, in graded lexicographic order.
pub fn multi_indices(n: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            rec(n, left - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree {
        rec(n, total, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

/// `c_α` for every `|α| ≤ N`, with per-entry absolute error estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    pub n: usize,
    pub degree: usize,
    pub entries: BTreeMap<Vec<usize>, (f64, f64)>,
}

impl CoefficientTable {
    pub fn compute(profile: &ReinhardtProfile, degree: usize, quad: &QuadConfig) -> Result<Self> {
        let n = profile.dim();
        let mut entries = BTreeMap::new();
        for alpha in multi_indices(n, degree) {
            let (v, e) = shadow_integral(profile, &alpha, &mut Vec::with_capacity(n), quad)?;
            let scale = (2.0 * std::f64::consts::PI).powi(n as i32);
            entries.insert(alpha, (scale * v, scale * e));
        }
        Ok(CoefficientTable { n, degree, entries })
    }

    pub fn get(&self, alpha: &[usize]) -> Option<f64> {
        self.entries.get(alpha).map(|e| e.0)
    }

    pub fn max_relative_error(&self) -> f64 {
        self.entries.values().map(|(c, e)| e / c).fold(0.0, f64::max)
    }

    /// CSV with columns `alpha,c_alpha,error,units`; `alpha` is `;`-separated.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "c_alpha", "error", "units"])?;
        for (alpha, (c, e)) in &self.entries {
            let a: Vec<String> = alpha.iter().map(|v| v.to_string()).collect();
            let power = 2 * self.n + 2 * alpha.iter().sum::<usize>();
            w.write_record([a.join(";"), format!("{c:e}"), format!("{e:e}"), format!("length^{power}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`CoefficientTable::write_csv`]; it must cover every
    /// multi-index of length `n` up to `degree`.
    pub fn read_csv<R: Read>(input: R, n: usize, degree: usize) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut entries = BTreeMap::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).ok_or_else(|| PinchError::InvalidArgument("short coefficient row".into()));
            let alpha: Vec<usize> = field(0)?
                .split(';')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| PinchError::InvalidArgument(format!("bad multi-index: {e}")))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| PinchError::InvalidArgument(format!("bad number {s:?}: {e}")));
            let c = parse(field(1)?)?;
            let e = parse(field(2)?)?;
            if alpha.len() != n {
                return Err(PinchError::DimensionMismatch { expected: n, got: alpha.len() });
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(PinchError::InvalidArgument(format!("c_alpha must be positive, got {c} for {alpha:?}")));
            }
            if alpha.iter().sum::<usize>() <= degree {
                entries.insert(alpha, (c, e));
            }
        }
        for alpha in multi_indices(n, degree) {
            if !entries.contains_key(&alpha) {
                return Err(PinchError::InvalidArgument(format!("coefficient table lacks alpha = {alpha:?}")));
            }
        }
        Ok(CoefficientTable { n, degree, entries })
    }
}

/// `∫ Π_{j ≥ k} r_j^{2α_j+1} dr_k … dr_n` over the slice of the shadow with the
/// first `k = leading.len()` moduli fixed.
fn shadow_integral(profile: &ReinhardtProfile, alpha: &[usize], leading: &mut Vec<f64>, quad: &QuadConfig) -> Result<(f64, f64)> {
    let k = leading.len();
    let bound = profile.radius_bound(leading);
    let p = 2 * alpha[k] + 2;
    if k + 1 == alpha.len() {
        return Ok((bound.powi(p as i32) / p as f64, 0.0));
    }
    if bound <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut inner_rel: f64 = 0.0;
    let mut failure = None;
    let res = quadrature::integrate(
        |r| {
            leading.push(r);
            let v = match shadow_integral(profile, alpha, leading, quad) {
                Ok((v, e)) => {
                    if v > 0.0 {
                        inner_rel = inner_rel.max(e / v);
                    }
                    v
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            };
            leading.pop();
            r.powi(p as i32 - 1) * v
        },
        0.0,
        bound,
        quad.abs_tol,
        quad.rel_tol,
        quad.max_intervals,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let res = res?;
    Ok((res.value, res.error + inner_rel * res.value.abs()))
}

struct KernelPotential {
    n: usize,
    /// `(α, 1/c_α)`.
    terms: Vec<(Vec<usize>, f64)>,
    degree: usize,
}

impl Potential for KernelPotential {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        // powers[j][a] = |z_j|^{2a}
        let powers: Vec<Vec<f64>> = (0..self.n)
            .map(|j| {
                let m = x[2 * j] * x[2 * j] + x[2 * j + 1] * x[2 * j + 1];
                let mut v = Vec::with_capacity(self.degree + 1);
                let mut acc = 1.0;
                for _ in 0..=self.degree {
                    v.push(acc);
                    acc *= m;
                }
                v
            })
            .collect();
        let k: f64 = self
            .terms
            .iter()
            .map(|(alpha, inv_c)| alpha.iter().enumerate().map(|(j, a)| powers[j][*a]).product::<f64>() * inv_c)
            .sum();
        if k > 0.0 && k.is_finite() {
            k.ln()
        } else {
            f64::NAN
        }
    }
    fn smooth_radius(&self, _z: &Point) -> Option<f64> {
        None
    }
}

/// Truncated Bergman metric `∂∂̄ log K_N` of a complete Reinhardt domain.
pub struct ReinhardtBergman {
    pub profile: ReinhardtProfile,
    pub table: CoefficientTable,
    pub quad: QuadConfig,
}

impl ReinhardtBergman {
    pub fn new(profile: ReinhardtProfile, degree: usize, quad: QuadConfig) -> Result<Self> {
        let table = CoefficientTable::compute(&profile, degree, &quad)?;
        Ok(ReinhardtBergman { profile, table, quad })
    }

    pub fn from_table(profile: ReinhardtProfile, table: CoefficientTable, quad: QuadConfig) -> Result<Self> {
        if table.n != profile.dim() {
            return Err(PinchError::DimensionMismatch { expected: profile.dim(), got: table.n });
        }
        Ok(ReinhardtBergman { profile, table, quad })
    }

    pub fn into_entry(self, fd: FdConfig) -> ZooEntry {
        let n = self.table.n;
        let terms = self.table.entries.iter().map(|(a, (c, _))| (a.clone(), 1.0 / c)).collect();
        let potential = Arc::new(KernelPotential { n, terms, degree: self.table.degree });
        let rel = self.table.max_relative_error();
        let warnings = vec![
            format!("Reinhardt Bergman kernel truncated at degree N = {}", self.table.degree),
            format!("Reinhardt Bergman coefficients: max relative quadrature error {rel:e}"),
        ];
        let name = format!("reinhardt_bergman(N={}, n={n})", self.table.degree);
        let field = PotentialField::new(name, potential, fd).with_warnings(warnings);
        let mut reference = BTreeMap::new();
        reference.insert("max_relative_quadrature_error".into(), rel);
        let provenance = Provenance {
            kind: "reinhardt_bergman".into(),
            parameters: serde_json::json!({ "profile": self.profile, "quadrature": self.quad }),
            truncation_degree: Some(self.table.degree),
            reference,
        };
        ZooEntry::new(Arc::new(field), provenance)
    }
}

/// Builds the truncated Bergman metric of a Reinhardt-variant domain.
pub fn reinhardt_bergman(domain: &DomainSpec, degree: usize, quad: QuadConfig, fd: FdConfig) -> Result<ZooEntry> {
    let profile = match domain {
        DomainSpec::Reinhardt { profile } => profile.clone(),
        other => {
            return Err(PinchError::InvalidArgument(format!("reinhardt_bergman needs a Reinhardt domain, got {}", other.name())))
        }
    };
    if degree < 2 {
        return Err(PinchError::InvalidArgument(format!("truncation degree must be at least 2, got {degree}")));
    }
    Ok(ReinhardtBergman::new(profile, degree, quad)?.into_entry(fd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|v| v as f64).product()
    }

    fn ball(n: usize) -> ReinhardtProfile {
        ReinhardtProfile::PowerSum { radii: vec![1.0; n], exponents: vec![2.0; n] }
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(2, 20).len(), 231);
        assert_eq!(multi_indices(3, 2).len(), 10);
        assert_eq!(multi_indices(1, 3), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn unit_ball_coefficients() {
        for n in 1..=3 {
            let t = CoefficientTable::compute(&ball(n), 4, &QuadConfig::default()).unwrap();
            for (alpha, (c, _)) in &t.entries {
                let total: usize = alpha.iter().sum();
                let expect = PI.powi(n as i32) * alpha.iter().map(|a| factorial(*a)).product::<f64>() / factorial(n + total);
                assert!((c - expect).abs() < 1e-7 * expect, "n={n} α={alpha:?}: {c} vs {expect}");
            }
        }
    }

    #[test]
    fn polydisc_coefficients_and_volume() {
        let p = ReinhardtProfile::Max { radii: vec![1.0, 0.5] };
        let t = CoefficientTable::compute(&p, 3, &QuadConfig::default()).unwrap();
        assert!((t.get(&[0, 0]).unwrap() - PI * PI * 0.25).abs() < 1e-10);
        let expect = PI / 3.0 * PI * 0.5f64.powi(4) / 2.0;
        assert!((t.get(&[2, 1]).unwrap() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn symmetric_profile_gives_symmetric_table() {
        let t = CoefficientTable::compute(&ball(2), 6, &QuadConfig::default()).unwrap();
        for (alpha, (c, _)) in &t.entries {
            let swapped = vec![alpha[1], alpha[0]];
            assert!((c - t.get(&swapped).unwrap()).abs() < 1e-9 * c);
        }
    }

    #[test]
    fn csv_round_trip() {
        let t = CoefficientTable::compute(&ball(2), 3, &QuadConfig::default()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("alpha,c_alpha,error,units\n0;0,"));
        let back = CoefficientTable::read_csv(buf.as_slice(), 2, 3).unwrap();
        for (a, (c, _)) in &t.entries {
            assert!((back.get(a).unwrap() - c).abs() <= 1e-15 * c);
        }
        assert!(CoefficientTable::read_csv(buf.as_slice(), 2, 4).is_err());
    }

    #[test]
    fn degree_below_two_is_rejected() {
        let dom = DomainSpec::reinhardt(ball(2)).unwrap();
        assert!(reinhardt_bergman(&dom, 1, QuadConfig::default(), FdConfig::default()).is_err());
        assert!(reinhardt_bergman(&DomainSpec::unit_ball(2), 4, QuadConfig::default(), FdConfig::default()).is_err());
    }
}
