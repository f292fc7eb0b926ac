//! Projected limited-memory BFGS for small box-constrained problems.
//!
//! Variables sitting on a bound whose gradient pushes outward are frozen for
//! the iteration; the quasi-Newton direction is computed on the free
//! variables with the two-loop recursion and the step is found by projected
//! Armijo backtracking.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxMinConfig {
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the projected gradient's infinity norm falls below this.
    pub pgtol: f64,
    /// Stop when the relative decrease of one iteration falls below this.
    pub ftol: f64,
}

impl Default for BoxMinConfig {
    fn default() -> Self {
        BoxMinConfig {
            memory: 6,
            max_iter: 200,
            pgtol: 1e-12,
            ftol: 1e-15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(l, h);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Indices that may move: not pinned at a bound by the gradient.
fn free_mask(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> Vec<bool> {
    (0..x.len())
        .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
        .collect()
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| ((x[i] - g[i]).clamp(lo[i], hi[i]) - x[i]).abs())
        .fold(0.0, f64::max)
}

/// Minimizes `f` over the box `[lo, hi]`. `f` writes its gradient into the
/// second argument and returns the value.
pub fn minimize(
    mut f: impl FnMut(&[f64], &mut [f64]) -> f64,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    cfg: &BoxMinConfig,
) -> Minimum {
    let n = x0.len();
    assert!(lo.len() == n && hi.len() == n, "bound dimensions");
    assert!(lo.iter().zip(hi).all(|(l, h)| l <= h), "empty box");
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let span = lo
        .iter()
        .zip(hi)
        .map(|(l, h)| h - l)
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];

    for it in 0..cfg.max_iter {
        if !fx.is_finite() || projected_gradient_norm(&x, &g, lo, hi) < cfg.pgtol {
            return Minimum { x, f: fx, iterations: it, converged: fx.is_finite() };
        }
        let free = free_mask(&x, &g, lo, hi);
        let mut q: Vec<f64> = (0..n).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
        let mut d = if mem.is_empty() {
            let gn = dot(&q, &q).sqrt();
            q.iter().map(|v| -v * span / gn.max(1e-300)).collect::<Vec<_>>()
        } else {
            let mut alphas = Vec::with_capacity(mem.len());
            for (s, y, rho) in mem.iter().rev() {
                let a = rho * dot(s, &q);
                q.iter_mut().zip(y).for_each(|(qv, yv)| *qv -= a * yv);
                alphas.push(a);
            }
            let (s, y, _) = mem.back().expect("non-empty");
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
            for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(y, &q);
                q.iter_mut().zip(s).for_each(|(qv, sv)| *qv += (a - b) * sv);
            }
            q.iter().enumerate().map(|(i, v)| if free[i] { -v } else { 0.0 }).collect()
        };
        if dot(&d, &g) >= 0.0 {
            // not a descent direction: fall back to scaled steepest descent
            mem.clear();
            let gf: Vec<f64> = (0..n).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
            let gnorm = dot(&gf, &gf).sqrt().max(1e-300);
            d = gf.iter().map(|v| -v * span / gnorm).collect();
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                xn[i] = x[i] + step * d[i];
            }
            project(&mut xn, lo, hi);
            let moved: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
            if moved.iter().all(|m| *m == 0.0) {
                break;
            }
            let fn_ = f(&xn, &mut gn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * dot(&g, &moved) {
                accepted = true;
                let s = moved;
                let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
                let sy = dot(&s, &y);
                if sy > 1e-16 * dot(&y, &y).max(1e-300) && sy > 0.0 {
                    if mem.len() == cfg.memory {
                        mem.pop_front();
                    }
                    mem.push_back((s, y, 1.0 / sy));
                }
                let decrease = fx - fn_;
                std::mem::swap(&mut x, &mut xn);
                std::mem::swap(&mut g, &mut gn);
                fx = fn_;
                if decrease <= cfg.ftol * fx.abs().max(1e-300) {
                    return Minimum { x, f: fx, iterations: it + 1, converged: true };
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Minimum { x, f: fx, iterations: it + 1, converged: true };
        }
    }
    Minimum {
        x,
        f: fx,
        iterations: cfg.max_iter,
        converged: false,
    }
}
