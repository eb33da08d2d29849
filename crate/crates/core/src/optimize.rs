//! Optimizers: ascent of quartic forms over products of unit spheres in ℂⁿ, and
//! a bounded Nelder–Mead for spatial refinement.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Random pairs evaluated before the restarts; the best ones seed the ascent.
    pub samples: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Nelder–Mead refinement of the sampled extremes over the sample region.
    pub refine: bool,
    /// Number of best sample points refined per extreme.
    pub refine_starts: usize,
    pub refine_max_evals: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 16,
            samples: 200,
            grad_tol: 1e-10,
            max_iter: 500,
            seed: 0,
            refine: false,
            refine_starts: 3,
            refine_max_evals: 400,
        }
    }
}

/// `f(x, y) = Σ T_{abcd} x_a x̄_b y_c ȳ_d` for a tensor with the Hermitian symmetry
/// `T_{abcd} = conj(T_{badc})`, which makes `f` real.
pub struct QuarticForm<'a> {
    pub n: usize,
    pub t: &'a [C64],
}

impl<'a> QuarticForm<'a> {
    pub fn new(n: usize, t: &'a [C64]) -> Self {
        assert_eq!(t.len(), n * n * n * n);
        QuarticForm { n, t }
    }

    #[inline]
    fn at(&self, a: usize, b: usize, c: usize, d: usize) -> C64 {
        let n = self.n;
        self.t[((a * n + b) * n + c) * n + d]
    }

    pub fn value(&self, x: &[C64], y: &[C64]) -> f64 {
        let n = self.n;
        let mut acc = ZERO;
        for a in 0..n {
            for b in 0..n {
                let xab = x[a] * x[b].conj();
                for c in 0..n {
                    for d in 0..n {
                        acc += self.at(a, b, c, d) * xab * y[c] * y[d].conj();
                    }
                }
            }
        }
        acc.re
    }

    /// `(∂f/∂x̄, ∂f/∂ȳ)`.
    pub fn gradients(&self, x: &[C64], y: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let n = self.n;
        let mut gx = vec![ZERO; n];
        let mut gy = vec![ZERO; n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let t = self.at(a, b, c, d);
                        gx[b] += t * x[a] * y[c] * y[d].conj();
                        gy[d] += t * x[a] * x[b].conj() * y[c];
                    }
                }
            }
        }
        (gx, gy)
    }
}

fn normalize(v: &mut [C64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
}

/// Component of `g` tangent to the unit sphere at `x` (real inner product).
fn project(x: &[C64], g: &[C64]) -> Vec<C64> {
    let dot: f64 = x.iter().zip(g).map(|(a, b)| (a.conj() * b).re).sum();
    g.iter().zip(x).map(|(gi, xi)| gi - xi * dot).collect()
}

fn sq_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn random_unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    normalize(&mut v);
    v
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereOptimum {
    pub value: f64,
    #[serde(skip)]
    pub x: Vec<C64>,
    #[serde(skip)]
    pub y: Vec<C64>,
    /// Best value among the random pairs, a floor for `value`.
    pub best_sample: f64,
    pub restarts: usize,
    pub converged_restarts: usize,
    /// Whether the returned pair passed the gradient test.
    pub converged: bool,
    /// Final value of every restart, in start order.
    pub local_values: Vec<f64>,
}

/// Extra iteration budget, in units of `max_iter`, for polishing the best restart.
const POLISH_FACTOR: usize = 20;

/// Top eigenvector of the Hermitian part of `a`.
fn top_eigenvector(a: DMatrix<C64>) -> Vec<C64> {
    let herm = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    let (_, vecs) = linalg::hermitian_eigh(&herm);
    vecs.column(vecs.ncols() - 1).iter().copied().collect()
}

/// One block-coordinate step: for fixed `y`, `f(·, y)` is a Hermitian quadratic
/// form, maximized on the sphere by its top eigenvector; then the same for `y`.
fn alternate(form: &QuarticForm, y: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let n = form.n;
    let mut ax = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = ZERO;
            for c in 0..n {
                for d in 0..n {
                    acc += form.at(a, b, c, d) * y[c] * y[d].conj();
                }
            }
            // f = Σ x̄_b acc x_a, i.e. the matrix entry (b, a)
            ax[(b, a)] = acc;
        }
    }
    let x = top_eigenvector(ax);
    let mut ay = DMatrix::zeros(n, n);
    for c in 0..n {
        for d in 0..n {
            let mut acc = ZERO;
            for a in 0..n {
                for b in 0..n {
                    acc += form.at(a, b, c, d) * x[a] * x[b].conj();
                }
            }
            ay[(d, c)] = acc;
        }
    }
    let y = top_eigenvector(ay);
    (x, y)
}

/// Point at parameter `t` on the great circle through `x` in direction `g`.
fn geodesic(x: &[C64], g: &[C64], t: f64) -> Vec<C64> {
    let gn = sq_norm(g).sqrt();
    if gn == 0.0 {
        return x.to_vec();
    }
    let (s, c) = (t * gn).sin_cos();
    let mut v: Vec<C64> = x.iter().zip(g).map(|(a, b)| a * c + b * (s / gn)).collect();
    normalize(&mut v);
    v
}

/// Maximizes `f(x, y)` over `|x| = |y| = 1` (or `f(x, x)` over `|x| = 1` when
/// `diagonal`) from the best of `cfg.samples` random starts. Pairs use exact
/// alternating eigenvector updates; the diagonal case uses geodesic gradient
/// ascent with an Armijo rule strict enough to forbid overshooting.
pub fn maximize_on_spheres(form: &QuarticForm, diagonal: bool, cfg: &OptimizerConfig, seed: u64) -> SphereOptimum {
    let n = form.n;
    let eval = |x: &[C64], y: &[C64]| if diagonal { form.value(x, x) } else { form.value(x, y) };
    let grad_norm = |x: &[C64], y: &[C64]| -> f64 {
        if diagonal {
            let (gx, gy) = form.gradients(x, x);
            let g: Vec<C64> = gx.iter().zip(&gy).map(|(a, b)| a + b).collect();
            sq_norm(&project(x, &g)).sqrt()
        } else {
            let (gx, gy) = form.gradients(x, y);
            (sq_norm(&project(x, &gx)) + sq_norm(&project(y, &gy))).sqrt()
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<(f64, Vec<C64>, Vec<C64>)> = (0..cfg.samples.max(1))
        .map(|_| {
            let x = random_unit_vector(&mut rng, n);
            let y = if diagonal { x.clone() } else { random_unit_vector(&mut rng, n) };
            (eval(&x, &y), x, y)
        })
        .collect();
    // stable sort keeps generation order among ties
    pool.sort_by(|a, b| b.0.total_cmp(&a.0));
    let best_sample = pool[0].0;

    let scale = form.t.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1e-300);
    let tol = cfg.grad_tol * scale.max(1.0);
    // once no step can raise f above rounding, a gradient this small is all
    // the resolution f64 offers
    let floor = f64::EPSILON.sqrt() * scale;
    let ascend = |x0: &[C64], y0: &[C64], iters: usize| -> (Vec<C64>, Vec<C64>, f64, bool) {
        let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
        let mut f = eval(&x, &y);
        let mut step = 0.5 / scale;
        for _ in 0..iters {
            if grad_norm(&x, &y) <= tol {
                return (x, y, f, true);
            }
            if !diagonal {
                let (xn, yn) = alternate(form, &y);
                let fnew = eval(&xn, &yn);
                if fnew < f {
                    // rounding in the eigensolver; keep the current pair
                    let ok = grad_norm(&x, &y) <= floor.max(1e3 * tol);
                    return (x, y, f, ok);
                }
                let stalled = fnew - f <= 4.0 * f64::EPSILON * scale;
                x = xn;
                y = yn;
                f = fnew;
                if stalled {
                    let ok = grad_norm(&x, &y) <= floor.max(1e3 * tol);
                    return (x, y, f, ok);
                }
                continue;
            }
            let (gx, gy) = form.gradients(&x, &x);
            let g = project(&x, &gx.iter().zip(&gy).map(|(a, b)| a + b).collect::<Vec<_>>());
            let gnorm = sq_norm(&g);
            let armijo = |t: f64, fnew: f64| fnew >= f + 0.25 * t * gnorm;
            let mut t = step;
            let mut xn = geodesic(&x, &g, t);
            let mut fnew = eval(&xn, &xn);
            if armijo(t, fnew) {
                for _ in 0..30 {
                    let x2 = geodesic(&x, &g, 2.0 * t);
                    let f2 = eval(&x2, &x2);
                    if !armijo(2.0 * t, f2) || f2 <= fnew {
                        break;
                    }
                    t *= 2.0;
                    xn = x2;
                    fnew = f2;
                }
            } else {
                let mut ok = false;
                for _ in 0..60 {
                    t *= 0.5;
                    xn = geodesic(&x, &g, t);
                    fnew = eval(&xn, &xn);
                    if armijo(t, fnew) {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    // no ascent possible at machine precision: a stationary point
                    return (x, y, f, gnorm.sqrt() <= floor.max(1e3 * tol));
                }
            }
            let stalled = fnew - f <= 4.0 * f64::EPSILON * scale;
            step = t;
            x = xn.clone();
            y = xn;
            f = fnew;
            if stalled {
                return (x, y, f, gnorm.sqrt() <= floor.max(1e3 * tol));
            }
        }
        let ok = grad_norm(&x, &y) <= tol;
        (x, y, f, ok)
    };

    let mut best = (pool[0].0, pool[0].1.clone(), pool[0].2.clone(), false);
    let mut local_values = Vec::new();
    let mut converged_restarts = 0;
    for (_, x0, y0) in pool.iter().take(cfg.restarts.max(1)) {
        let (x, y, f, converged) = ascend(x0, y0, cfg.max_iter);
        if converged {
            converged_restarts += 1;
        }
        local_values.push(f);
        if f > best.0 {
            best = (f, x, y, converged);
        }
    }
    if !best.3 {
        // near-degenerate maxima converge slowly; only the winner gets the long run
        let (x, y, f, converged) = ascend(&best.1, &best.2, POLISH_FACTOR * cfg.max_iter);
        if f >= best.0 {
            best = (f, x, y, converged);
        }
    }
    let (value, x, y, converged) = best;
    SphereOptimum {
        value,
        x,
        y: if diagonal { Vec::new() } else { y },
        best_sample,
        restarts: local_values.len(),
        converged_restarts,
        converged,
        local_values,
    }
}

/// Nelder–Mead maximization of `f` from `x0` with initial simplex size `scale`.
/// Points where `f` is not finite are treated as infeasible (value `−∞`).
pub fn nelder_mead_max(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], scale: f64, max_evals: usize, ftol: f64) -> (Vec<f64>, f64) {
    let dim = x0.len();
    let mut g = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), g(x0)));
    for k in 0..dim {
        let mut x = x0.to_vec();
        x[k] += scale;
        let mut v = g(&x);
        if v == f64::NEG_INFINITY {
            x[k] = x0[k] - scale;
            v = g(&x);
        }
        simplex.push((x, v));
    }
    let mut evals = dim + 1;
    while evals < max_evals {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (best, worst) = (simplex[0].1, simplex[dim].1);
        if worst.is_finite() && (best - worst).abs() <= ftol * (1.0 + best.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..dim).map(|k| simplex[..dim].iter().map(|p| p.0[k]).sum::<f64>() / dim as f64).collect();
        let along = |t: f64, w: &[f64]| -> Vec<f64> { centroid.iter().zip(w).map(|(c, x)| c + t * (c - x)).collect() };
        let xr = along(1.0, &simplex[dim].0);
        let fr = g(&xr);
        evals += 1;
        if fr > simplex[0].1 {
            let xe = along(2.0, &simplex[dim].0);
            let fe = g(&xe);
            evals += 1;
            simplex[dim] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let xc = if fr > simplex[dim].1 { along(0.5, &simplex[dim].0) } else { along(-0.5, &simplex[dim].0) };
            let fc = g(&xc);
            evals += 1;
            if fc > simplex[dim].1.max(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    p.0 = x_best.iter().zip(&p.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    p.1 = g(&p.0);
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Tensor of the form `Σ_a w_a |x_a|² |y_a|²`.
    fn diagonal_tensor(w: &[f64]) -> Vec<C64> {
        let n = w.len();
        let mut t = vec![ZERO; n.pow(4)];
        for (a, wa) in w.iter().enumerate() {
            t[((a * n + a) * n + a) * n + a] = C64::new(*wa, 0.0);
        }
        t
    }

    #[test]
    fn finds_the_largest_weight() {
        let t = diagonal_tensor(&[0.3, 2.0, -1.0]);
        let form = QuarticForm::new(3, &t);
        let best = maximize_on_spheres(&form, false, &OptimizerConfig::default(), 7);
        assert!((best.value - 2.0).abs() < 1e-9, "{best:?}");
        assert!(best.value >= best.best_sample);
        assert!(best.converged);
        let diag = maximize_on_spheres(&form, true, &OptimizerConfig::default(), 7);
        assert!((diag.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 2;
        let mut t = vec![ZERO; 16];
        // Hermitian-symmetric random tensor
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                        t[((a * n + b) * n + c) * n + d] += v;
                        t[((b * n + a) * n + d) * n + c] += v.conj();
                    }
                }
            }
        }
        let form = QuarticForm::new(n, &t);
        let x = random_unit_vector(&mut rng, n);
        let y = random_unit_vector(&mut rng, n);
        let (gx, _) = form.gradients(&x, &y);
        let h = 1e-6;
        for k in 0..n {
            let mut xp = x.clone();
            xp[k].re += h;
            let mut xm = x.clone();
            xm[k].re -= h;
            let dre = (form.value(&xp, &y) - form.value(&xm, &y)) / (2.0 * h);
            let mut xp = x.clone();
            xp[k].im += h;
            let mut xm = x.clone();
            xm[k].im -= h;
            let dim = (form.value(&xp, &y) - form.value(&xm, &y)) / (2.0 * h);
            // real gradient = 2 ∂f/∂x̄
            assert!((C64::new(dre, dim) - gx[k] * 2.0).norm() < 1e-7);
        }
    }

    #[test]
    fn nelder_mead_respects_infeasible_region() {
        // maximize −|x − (2, 0)|² subject to |x| < 1: optimum at (1, 0)
        let (x, v) = nelder_mead_max(
            |p| if p[0] * p[0] + p[1] * p[1] < 1.0 { -((p[0] - 2.0).powi(2) + p[1] * p[1]) } else { f64::NAN },
            &[0.0, 0.3],
            0.2,
            2000,
            1e-14,
        );
        assert!((x[0] - 1.0).abs() < 1e-4 && x[1].abs() < 1e-2, "{x:?}");
        assert!((v + 1.0).abs() < 1e-3);
    }
}
