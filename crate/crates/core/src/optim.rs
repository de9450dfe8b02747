//! Limited-memory quasi-Newton minimization with a strong-Wolfe line search.
//!
//! Near convergence, value differences reach the rounding floor of the
//! objective, so the sufficient-decrease test also admits the approximate
//! Wolfe condition `φ'(α) <= (2c1 - 1) φ'(0)` with `φ(α) <= φ(0) + ε|φ(0)|`.
//! When a quasi-Newton direction fails the line search, memory is cleared
//! and a (preconditioned) steepest-descent step with backtracking is tried.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::dot;

pub trait Objective {
    fn dim(&self) -> usize;
    /// Returns the value and writes the Euclidean gradient into `grad`.
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Result<f64>;
}

/// Approximate inverse Hessian action.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
    /// Relative value slack for the approximate Wolfe test.
    pub value_slack: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { memory: 12, max_iter: 20000, c1: 1e-4, c2: 0.9, max_line_search: 40, value_slack: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub fallback_steps: usize,
    pub stop_reason: String,
}

struct Point {
    alpha: f64,
    f: f64,
    d: f64,
    g: Vec<f64>,
}

struct LineSearch<'a, O: Objective + ?Sized> {
    obj: &'a O,
    x: &'a [f64],
    dir: &'a [f64],
    f0: f64,
    d0: f64,
    opts: &'a LbfgsOptions,
    evals: usize,
    trial: Vec<f64>,
}

impl<O: Objective + ?Sized> LineSearch<'_, O> {
    fn eval(&mut self, alpha: f64) -> Result<Point> {
        for ((t, x), d) in self.trial.iter_mut().zip(self.x).zip(self.dir) {
            *t = x + alpha * d;
        }
        let mut g = vec![0.0; self.x.len()];
        self.evals += 1;
        let f = self.obj.eval(&self.trial, &mut g)?;
        let d = dot(&g, self.dir);
        Ok(Point { alpha, f, d, g })
    }

    fn decrease_ok(&self, p: &Point) -> bool {
        let armijo = p.f <= self.f0 + self.opts.c1 * p.alpha * self.d0;
        let approx = p.f <= self.f0 + self.opts.value_slack * self.f0.abs()
            && p.d <= (2.0 * self.opts.c1 - 1.0) * self.d0;
        p.f.is_finite() && (armijo || approx)
    }

    fn curvature_ok(&self, p: &Point) -> bool {
        p.d.abs() <= self.opts.c2 * self.d0.abs()
    }

    /// Strong-Wolfe search (bracketing phase, then zoom).
    fn run(&mut self, alpha_init: f64) -> Result<Option<Point>> {
        let mut prev = Point { alpha: 0.0, f: self.f0, d: self.d0, g: Vec::new() };
        let mut alpha = alpha_init;
        for i in 0..self.opts.max_line_search {
            let p = self.eval(alpha)?;
            if !p.f.is_finite() {
                alpha = 0.5 * (prev.alpha + alpha);
                continue;
            }
            if !self.decrease_ok(&p) || (i > 0 && p.f >= prev.f) {
                return self.zoom(prev, p);
            }
            if self.curvature_ok(&p) {
                return Ok(Some(p));
            }
            if p.d >= 0.0 {
                return self.zoom(p, prev);
            }
            alpha = p.alpha * 2.0;
            prev = p;
        }
        Ok(None)
    }

    fn zoom(&mut self, mut lo: Point, mut hi: Point) -> Result<Option<Point>> {
        let mut best: Option<Point> = None;
        for _ in 0..self.opts.max_line_search {
            let (a, b) = (lo.alpha, hi.alpha);
            let width = (b - a).abs();
            if width <= 1e-16 * a.abs().max(b.abs()) {
                break;
            }
            let mut alpha = cubic_min(&lo, &hi);
            let (l, u) = (a.min(b) + 0.1 * width, a.max(b) - 0.1 * width);
            if !(alpha >= l && alpha <= u) {
                alpha = 0.5 * (a + b);
            }
            let p = self.eval(alpha)?;
            if !self.decrease_ok(&p) || p.f >= lo.f {
                hi = p;
            } else {
                if self.curvature_ok(&p) {
                    return Ok(Some(p));
                }
                if p.d * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = std::mem::replace(&mut lo, p);
                } else {
                    lo = p;
                }
                if best.as_ref().is_none_or(|q| lo.f < q.f) && lo.alpha > 0.0 {
                    best = Some(Point { alpha: lo.alpha, f: lo.f, d: lo.d, g: lo.g.clone() });
                }
            }
        }
        // accept a sufficient-decrease point even without the curvature test
        if lo.alpha > 0.0 && self.decrease_ok(&lo) {
            return Ok(Some(lo));
        }
        Ok(best)
    }
}

fn cubic_min(p: &Point, q: &Point) -> f64 {
    let (a, b) = (p.alpha, q.alpha);
    let d1 = p.d + q.d - 3.0 * (p.f - q.f) / (a - b);
    let disc = d1 * d1 - p.d * q.d;
    if disc < 0.0 {
        return f64::NAN;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    b - (b - a) * (q.d + d2 - d1) / (q.d - p.d + 2.0 * d2)
}

/// Preconditioned L-BFGS. `grad_norm` measures convergence on the Euclidean
/// gradient; `project` (if any) is applied to each accepted iterate and must
/// only move along directions the objective is invariant to.
pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    x0: &[f64],
    precond: Option<&dyn Preconditioner>,
    project: Option<&dyn Fn(&mut [f64])>,
    grad_norm: &dyn Fn(&[f64]) -> f64,
    tol: f64,
    opts: &LbfgsOptions,
) -> Result<(Vec<f64>, OptimReport)> {
    let n = obj.dim();
    let mut x = x0.to_vec();
    if let Some(p) = project {
        p(&mut x);
    }
    let mut g = vec![0.0; n];
    let mut f = obj.eval(&x, &mut g)?;
    let mut evaluations = 1;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();
    let mut fallback_steps = 0;
    let mut iterations = 0;
    let apply_p = |r: &[f64], out: &mut [f64]| match precond {
        Some(p) => p.apply(r, out),
        None => out.copy_from_slice(r),
    };
    let stop_reason;
    loop {
        let gn = grad_norm(&g);
        if gn <= tol {
            stop_reason = "gradient tolerance reached".to_string();
            break;
        }
        if iterations >= opts.max_iter {
            stop_reason = "iteration cap reached".to_string();
            break;
        }
        // two-loop recursion with H0 = γ P^{-1}
        let mut q = g.clone();
        let m = s_hist.len();
        let mut a = vec![0.0; m];
        for k in (0..m).rev() {
            a[k] = rho[k] * dot(&s_hist[k], &q);
            for (qi, yi) in q.iter_mut().zip(&y_hist[k]) {
                *qi -= a[k] * yi;
            }
        }
        let mut r = vec![0.0; n];
        apply_p(&q, &mut r);
        if m > 0 {
            let mut py = vec![0.0; n];
            apply_p(&y_hist[m - 1], &mut py);
            let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &py);
            for v in r.iter_mut() {
                *v *= gamma;
            }
        }
        for k in 0..m {
            let b = rho[k] * dot(&y_hist[k], &r);
            for (ri, si) in r.iter_mut().zip(&s_hist[k]) {
                *ri += (a[k] - b) * si;
            }
        }
        let mut dir: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut d0 = dot(&g, &dir);
        let mut used_fallback = false;
        if !(d0 < 0.0) || m == 0 {
            let mut pg = vec![0.0; n];
            apply_p(&g, &mut pg);
            dir = pg.iter().map(|v| -v).collect();
            d0 = dot(&g, &dir);
            used_fallback = m > 0;
        }
        let alpha_init = if m == 0 && precond.is_none() {
            (1.0 / dir.iter().fold(0.0f64, |a, v| a.max(v.abs()))).min(1.0)
        } else {
            1.0
        };
        let mut ls = LineSearch { obj, x: &x, dir: &dir, f0: f, d0, opts, evals: 0, trial: vec![0.0; n] };
        let mut found = if d0 < 0.0 { ls.run(alpha_init)? } else { None };
        evaluations += ls.evals;
        if found.is_none() && !used_fallback {
            // steepest descent with backtracking
            used_fallback = true;
            let mut pg = vec![0.0; n];
            apply_p(&g, &mut pg);
            let sd: Vec<f64> = pg.iter().map(|v| -v).collect();
            let sd0 = dot(&g, &sd);
            let mut ls = LineSearch { obj, x: &x, dir: &sd, f0: f, d0: sd0, opts, evals: 0, trial: vec![0.0; n] };
            let mut alpha = 1.0;
            for _ in 0..60 {
                let p = ls.eval(alpha)?;
                if ls.decrease_ok(&p) {
                    found = Some(p);
                    break;
                }
                alpha *= 0.5;
            }
            evaluations += ls.evals;
            dir = sd;
        }
        let Some(p) = found else {
            stop_reason = "line search failed".to_string();
            break;
        };
        if used_fallback {
            fallback_steps += 1;
            s_hist.clear();
            y_hist.clear();
            rho.clear();
        }
        let mut x_new: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + p.alpha * d).collect();
        if let Some(pr) = project {
            pr(&mut x_new);
        }
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 && sy.is_finite() {
            if s_hist.len() == opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho.remove(0);
            }
            rho.push(1.0 / sy);
            s_hist.push(s);
            y_hist.push(y);
        }
        x = x_new;
        f = p.f;
        g = p.g;
        iterations += 1;
    }
    let gn = grad_norm(&g);
    Ok((
        x,
        OptimReport {
            iterations,
            evaluations,
            value: f,
            grad_norm: gn,
            converged: gn <= tol,
            fallback_steps,
            stop_reason,
        },
    ))
}

/// Symmetric block-tridiagonal system with 2x2 blocks, factored once by
/// block elimination. Unknowns are `[a_0..a_{n-1}, b_0..b_{n-1}]`; node `j`
/// couples `(a_j, b_j)`.
#[derive(Debug, Clone)]
pub struct BlockTridiag2 {
    n: usize,
    /// Inverses of the eliminated diagonal blocks.
    dinv: Vec<[[f64; 2]; 2]>,
    /// Off-diagonal block linking `j` and `j+1` (symmetric, same for all j).
    off: [[f64; 2]; 2],
}

fn mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn inv(a: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

fn mulv(a: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

impl BlockTridiag2 {
    /// `diag[j]` are the diagonal blocks; `off` couples neighbours.
    pub fn new(diag: &[[[f64; 2]; 2]], off: [[f64; 2]; 2]) -> Self {
        let n = diag.len();
        let mut dinv = Vec::with_capacity(n);
        let mut prev: Option<[[f64; 2]; 2]> = None;
        for d in diag {
            let mut dj = *d;
            if let Some(pinv) = prev {
                // D_j - E^T D_{j-1}^{-1} E with symmetric E
                let t = mul(&off, &mul(&pinv, &off));
                for i in 0..2 {
                    for k in 0..2 {
                        dj[i][k] -= t[i][k];
                    }
                }
            }
            let di = inv(&dj);
            dinv.push(di);
            prev = Some(di);
        }
        Self { n, dinv, off }
    }

    pub fn solve(&self, r: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut z: Vec<[f64; 2]> = Vec::with_capacity(n);
        for j in 0..n {
            let mut v = [r[j], r[n + j]];
            if j > 0 {
                let c = mulv(&self.off, mulv(&self.dinv[j - 1], z[j - 1]));
                v[0] -= c[0];
                v[1] -= c[1];
            }
            z.push(v);
        }
        let mut x = vec![[0.0; 2]; n];
        for j in (0..n).rev() {
            let mut v = z[j];
            if j + 1 < n {
                let c = mulv(&self.off, x[j + 1]);
                v[0] -= c[0];
                v[1] -= c[1];
            }
            x[j] = mulv(&self.dinv[j], v);
        }
        for j in 0..n {
            out[j] = x[j][0];
            out[n + j] = x[j][1];
        }
    }
}

/// Preconditioner for `Σ_cells (1/2h) Δηᵀ C Δη + Σ_j ηⱼᵀ Dⱼ ηⱼ / 2`, i.e. a
/// discrete `-C d²/dx²` with free ends plus a node-local block `Dⱼ`.
pub fn kinetic_preconditioner(h: f64, c: [[f64; 2]; 2], local: &[[[f64; 2]; 2]]) -> BlockTridiag2 {
    let n = local.len();
    let diag: Vec<[[f64; 2]; 2]> = (0..n)
        .map(|j| {
            let k = if j == 0 || j + 1 == n { 1.0 } else { 2.0 } / h;
            let mut d = local[j];
            for a in 0..2 {
                for b in 0..2 {
                    d[a][b] += k * c[a][b];
                }
            }
            d
        })
        .collect();
    let off = [[-c[0][0] / h, -c[0][1] / h], [-c[1][0] / h, -c[1][1] / h]];
    BlockTridiag2::new(&diag, off)
}

impl Preconditioner for BlockTridiag2 {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        self.solve(r, out);
    }
}
