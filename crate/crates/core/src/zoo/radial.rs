//! Closed-form jets of radial potentials `φ = F(|w|²)`, `w = z − c`.

use crate::jet::MetricJet;
use crate::C64;

/// Adds `scale ×` the jet of `F(|w|²)` to `jet`, given `d = [F, F', F'', F''', F'''']`
/// evaluated at `s = |w|²`.
pub fn radial_jet_into(jet: &mut MetricJet, w: &[C64], d: [f64; 5], scale: f64) {
    let n = w.len();
    let wb: Vec<C64> = w.iter().map(|c| c.conj()).collect();
    let (f1, f2, f3, f4) = (d[1] * scale, d[2] * scale, d[3] * scale, d[4] * scale);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for i in 0..n {
        for j in 0..n {
            let wij = wb[i] * w[j];
            jet.h[(i, j)] += wij * f2 + f1 * delta(i, j);
            for k in 0..n {
                let i3 = jet.idx3(i, j, k);
                jet.dh[i3] += wb[k] * wij * f3 + wb[i] * (f2 * delta(k, j)) + wb[k] * (f2 * delta(i, j));
                // here k plays the role of the antiholomorphic index l
                jet.dbar_h[i3] += w[k] * wij * f3 + w[j] * (f2 * delta(i, k)) + w[k] * (f2 * delta(i, j));
                for l in 0..n {
                    let i4 = jet.idx4(i, j, k, l);
                    let third = wij * delta(k, l)
                        + w[l] * wb[i] * delta(k, j)
                        + wb[k] * w[j] * delta(i, l)
                        + wb[k] * w[l] * delta(i, j);
                    jet.ddbar_h[i4] += wb[k] * w[l] * wij * f4
                        + third * f3
                        + C64::new(f2 * (delta(i, l) * delta(k, j) + delta(k, l) * delta(i, j)), 0.0);
                }
            }
        }
    }
}

/// `[G, G', G'', G''', G'''']` in `s` of the bump `G = exp(−1/(1 − s/ρ²))` for
/// `s < ρ²`, zero otherwise.
pub fn bump_derivatives(s: f64, rho: f64) -> [f64; 5] {
    let r2 = rho * rho;
    let u = s / r2;
    if u >= 1.0 {
        return [0.0; 5];
    }
    let q = 1.0 / (1.0 - u);
    if q > 1e3 {
        // e^{-1000} times a polynomial of degree ≤ 8 in q underflows anyway
        return [0.0; 5];
    }
    let e = (-q).exp();
    // P_{k+1}(q) = (P_k'(q) − P_k(q)) q², P_0 = 1, stored as coefficient vectors
    let mut p = vec![1.0];
    let mut out = [0.0; 5];
    let mut scale = 1.0;
    for slot in out.iter_mut() {
        let val: f64 = p.iter().rev().fold(0.0, |acc, c| acc * q + c);
        *slot = val * e / scale;
        scale *= r2;
        let mut next = vec![0.0; p.len() + 2];
        for (k, c) in p.iter().enumerate() {
            if k > 0 {
                next[k - 1 + 2] += k as f64 * c;
            }
            next[k + 2] -= c;
        }
        p = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let rho = 0.7;
        for s in [0.0, 0.1, 0.3, 0.45] {
            let d = bump_derivatives(s, rho);
            let eps = 1e-5;
            for k in 0..4 {
                let fd = (bump_derivatives(s + eps, rho)[k] - bump_derivatives(s - eps, rho)[k]) / (2.0 * eps);
                assert!((fd - d[k + 1]).abs() < 1e-6 * (1.0 + d[k + 1].abs()), "s={s} k={k}: {fd} vs {}", d[k + 1]);
            }
        }
        assert!((bump_derivatives(0.0, 1.0)[0] - (-1f64).exp()).abs() < 1e-15);
        assert!((bump_derivatives(0.0, 1.0)[1] + (-1f64).exp()).abs() < 1e-15);
        assert_eq!(bump_derivatives(0.49, 0.7), [0.0; 5]);
    }
}
