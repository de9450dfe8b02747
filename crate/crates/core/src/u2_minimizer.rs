//! Variational solve of the U(2) wall system.
//!
//! With `uᵢ = ηᵢ + u0ᵢ − ω` the equations are the Euler–Lagrange equations of
//!
//! `I(η) = ∫ ½ η'ᵀ Γ⁻¹ η' + λ ∫ (e^{η₁+u0₁−ω} + e^{η₂+u0₂−ω}) − (1/4γ) ∫ (S₁η₁ + S₂η₂)`
//!
//! where `S₁ = (1+γ)u0₁'' + (γ−1)u0₂''`, `S₂ = (γ−1)u0₁'' + (1+γ)u0₂''`.
//! The discrete functional uses forward differences on cells, trapezoid
//! weights for the exponentials and exact dual-cell integrals for the sources,
//! so the constraint identities hold exactly at a discrete critical point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fit_tail, sum_compensated, trapezoid_weights, Grid, TailModel};
use crate::optim::{kinetic_preconditioner, minimize as lbfgs, LbfgsOptions, Objective, OptimReport};
use crate::wspace::{build_backgrounds, build_measure, BackgroundPair, WeightedMeasure};

const EXP_CAP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct U2Params {
    pub e: f64,
    /// `g²/e²`.
    pub gamma: f64,
    pub xi: f64,
}

impl U2Params {
    pub fn new(e: f64, gamma: f64, xi: f64) -> Result<Self> {
        for (name, v) in [("e", e), ("gamma", gamma), ("xi", xi)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { e, gamma, xi })
    }

    pub fn lambda(&self) -> f64 {
        0.5 * self.e * self.e * self.xi
    }

    /// `Γ⁻¹ = (1/4γ) [[1+γ, γ−1], [γ−1, 1+γ]]`.
    pub fn gamma_inv(&self) -> [[f64; 2]; 2] {
        let g = self.gamma;
        let k = 0.25 / g;
        [[k * (1.0 + g), k * (g - 1.0)], [k * (g - 1.0), k * (1.0 + g)]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct U2Asymptotics {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl U2Asymptotics {
    pub fn swapped(&self) -> Self {
        Self { alpha1: self.alpha2, alpha2: self.alpha1, beta1: self.beta2, beta2: self.beta1 }
    }
}

pub fn kappa_constants(asym: &U2Asymptotics, gamma: f64) -> (f64, f64) {
    let a = asym.alpha1 + asym.beta1;
    let b = asym.alpha2 + asym.beta2;
    (((1.0 + gamma) * a + (gamma - 1.0) * b) / (2.0 * gamma), ((gamma - 1.0) * a + (1.0 + gamma) * b) / (2.0 * gamma))
}

/// Errors unless `κ₁ > 0` and `κ₂ > 0`.
pub fn check_admissible(asym: &U2Asymptotics, gamma: f64) -> Result<(f64, f64)> {
    let (k1, k2) = kappa_constants(asym, gamma);
    let mut bad = Vec::new();
    if !(k1 > 0.0) {
        bad.push(format!("(1+γ)(α₁+β₁)+(γ−1)(α₂+β₂) > 0 fails (κ₁ = {k1})"));
    }
    if !(k2 > 0.0) {
        bad.push(format!("(γ−1)(α₁+β₁)+(1+γ)(α₂+β₂) > 0 fails (κ₂ = {k2})"));
    }
    if bad.is_empty() {
        Ok((k1, k2))
    } else {
        Err(Error::Inadmissible(bad.join("; ")))
    }
}

/// Symmetric grid wide enough that `λ L² >= 120`, never narrower than 15.
pub fn default_grid(params: &U2Params) -> Result<Grid> {
    let l = 15f64.max((120.0 / params.lambda()).sqrt());
    Grid::symmetric(l, 6001)
}

/// The discretized functional with its data.
#[derive(Debug, Clone)]
pub struct U2Problem {
    pub params: U2Params,
    pub asym: U2Asymptotics,
    pub kappa: (f64, f64),
    pub grid: Grid,
    pub measure: WeightedMeasure,
    pub backgrounds: BackgroundPair,
    /// Trapezoid weights (`dx`).
    pub weights: Vec<f64>,
    /// `u0ᵢ − ω`.
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    /// Dual-cell sources already divided by `4γ`.
    pub src1: Vec<f64>,
    pub src2: Vec<f64>,
    /// `λ w e^{aᵢ}` per node.
    base: [Vec<f64>; 2],
    /// Potential term at `η = 0`.
    offset: f64,
}

impl U2Problem {
    pub fn new(params: U2Params, asym: U2Asymptotics, grid: &Grid, measure: WeightedMeasure) -> Result<Self> {
        let kappa = check_admissible(&asym, params.gamma)?;
        if measure.grid != *grid {
            return Err(Error::InvalidGrid("measure was built on a different grid".into()));
        }
        let lambda = params.lambda();
        let bg = build_backgrounds(grid, asym.alpha1, asym.alpha2, asym.beta1, asym.beta2, lambda)?;
        let g = params.gamma;
        let k = 0.25 / g;
        let src1 = bg.s1.iter().zip(&bg.s2).map(|(a, b)| k * ((1.0 + g) * a + (g - 1.0) * b)).collect();
        let src2 = bg.s1.iter().zip(&bg.s2).map(|(a, b)| k * ((g - 1.0) * a + (1.0 + g) * b)).collect();
        let a1 = bg.u01.iter().zip(&bg.omega).map(|(u, w)| u - w).collect();
        let a2 = bg.u02.iter().zip(&bg.omega).map(|(u, w)| u - w).collect();
        let weights = trapezoid_weights(grid);
        let base_of = |a: &Vec<f64>| -> Vec<f64> { a.iter().zip(&weights).map(|(a, w)| lambda * w * a.exp()).collect() };
        let base = [base_of(&a1), base_of(&a2)];
        let offset = sum_compensated(base[0].iter().chain(&base[1]).copied());
        Ok(Self { params, asym, kappa, grid: *grid, weights, measure, backgrounds: bg, a1, a2, src1, src2, base, offset })
    }

    /// Default grid and `β = 1` measure.
    pub fn with_defaults(params: U2Params, asym: U2Asymptotics) -> Result<Self> {
        let grid = default_grid(&params)?;
        let measure = build_measure(&grid, 1.0)?;
        Self::new(params, asym, &grid, measure)
    }

    fn check_len(&self, eta1: &[f64], eta2: &[f64]) -> Result<()> {
        let n = self.grid.n();
        for (name, v) in [("eta1", eta1), ("eta2", eta2)] {
            if v.len() != n {
                return Err(Error::LengthMismatch { field: name.into(), len: v.len(), n });
            }
        }
        Ok(())
    }

    /// Value less [`Self::value_offset`] and the Euclidean gradient; `Err`
    /// carries the node index of an exponential overflow.
    fn eval_raw(&self, eta1: &[f64], eta2: &[f64], grad: Option<&mut [f64]>) -> std::result::Result<f64, usize> {
        let n = self.grid.n();
        let h = self.grid.h();
        let c = self.params.gamma_inv();
        let lambda = self.params.lambda();
        let mut e1 = vec![0.0; n];
        let mut e2 = vec![0.0; n];
        for j in 0..n {
            let (x1, x2) = (eta1[j] + self.a1[j], eta2[j] + self.a2[j]);
            if !(x1 <= EXP_CAP && x2 <= EXP_CAP) {
                return Err(j);
            }
            e1[j] = lambda * self.weights[j] * x1.exp();
            e2[j] = lambda * self.weights[j] * x2.exp();
        }
        let kin = sum_compensated((0..n - 1).map(|j| {
            let d1 = eta1[j + 1] - eta1[j];
            let d2 = eta2[j + 1] - eta2[j];
            (c[0][0] * d1 * d1 + 2.0 * c[0][1] * d1 * d2 + c[1][1] * d2 * d2) / (2.0 * h)
        }));
        // e^{η+a} - e^a without cancellation
        let rel = |k: usize, e: &[f64], eta: &[f64], j: usize| {
            if eta[j] < EXP_CAP {
                self.base[k][j] * eta[j].exp_m1()
            } else {
                e[j] - self.base[k][j]
            }
        };
        let pot = sum_compensated((0..n).flat_map(|j| [rel(0, &e1, eta1, j), rel(1, &e2, eta2, j)]));
        let src = sum_compensated((0..n).map(|j| self.src1[j] * eta1[j] + self.src2[j] * eta2[j]));
        if let Some(g) = grad {
            let (g1, g2) = g.split_at_mut(n);
            for j in 0..n {
                g1[j] = e1[j] - self.src1[j];
                g2[j] = e2[j] - self.src2[j];
            }
            for j in 0..n - 1 {
                let d1 = (eta1[j + 1] - eta1[j]) / h;
                let d2 = (eta2[j + 1] - eta2[j]) / h;
                let f1 = c[0][0] * d1 + c[0][1] * d2;
                let f2 = c[1][0] * d1 + c[1][1] * d2;
                g1[j] -= f1;
                g1[j + 1] += f1;
                g2[j] -= f2;
                g2[j + 1] += f2;
            }
        }
        Ok(kin + pot - src)
    }

    pub fn value(&self, eta1: &[f64], eta2: &[f64]) -> Result<f64> {
        Ok(self.offset + self.value_relative(eta1, eta2)?)
    }

    /// The functional's value at `η = 0` minus its kinetic and source terms
    /// (both zero there).
    pub fn value_offset(&self) -> f64 {
        self.offset
    }

    /// `value − value_offset`, evaluated without the large constant.
    pub fn value_relative(&self, eta1: &[f64], eta2: &[f64]) -> Result<f64> {
        self.check_len(eta1, eta2)?;
        self.eval_raw(eta1, eta2, None).map_err(|j| Error::Overflow { x: self.grid.x(j) })
    }

    /// Discrete L² gradient (Euclidean gradient divided by the quadrature weights).
    pub fn gradient(&self, eta1: &[f64], eta2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(eta1, eta2)?;
        let n = self.grid.n();
        let mut g = vec![0.0; 2 * n];
        self.eval_raw(eta1, eta2, Some(&mut g)).map_err(|j| Error::Overflow { x: self.grid.x(j) })?;
        let g1 = (0..n).map(|j| g[j] / self.weights[j]).collect();
        let g2 = (0..n).map(|j| g[n + j] / self.weights[j]).collect();
        Ok((g1, g2))
    }

    /// `λ ∫ e^{ηᵢ+u0ᵢ−ω} dx` for both components.
    pub fn exponential_integrals(&self, eta1: &[f64], eta2: &[f64]) -> (f64, f64) {
        let lambda = self.params.lambda();
        let f = |eta: &[f64], a: &[f64]| lambda * sum_compensated(self.weights.iter().zip(eta).zip(a).map(|((w, e), a)| w * (e + a).exp()));
        (f(eta1, &self.a1), f(eta2, &self.a2))
    }

    fn preconditioner(&self, x: &[f64]) -> crate::optim::BlockTridiag2 {
        let n = self.grid.n();
        let lambda = self.params.lambda();
        let local: Vec<[[f64; 2]; 2]> = (0..n)
            .map(|j| {
                let w = self.weights[j];
                let mass = 1e-6 * w * self.measure.h0[j];
                let d1 = lambda * w * (x[j] + self.a1[j]).min(EXP_CAP).exp();
                let d2 = lambda * w * (x[n + j] + self.a2[j]).min(EXP_CAP).exp();
                [[d1 + mass, 0.0], [0.0, d2 + mass]]
            })
            .collect();
        kinetic_preconditioner(self.grid.h(), self.params.gamma_inv(), &local)
    }

    /// Minimizes from `init` (zero if `None`) until the L² gradient sup-norm is `<= tol`.
    pub fn minimize(&self, init: Option<(&[f64], &[f64])>, tol: f64) -> Result<U2Result> {
        self.minimize_capped(init, tol, LbfgsOptions::default().max_iter)
    }

    /// As [`Self::minimize`] with at most `max_iter` iterations in total.
    pub fn minimize_capped(&self, init: Option<(&[f64], &[f64])>, tol: f64, max_iter: usize) -> Result<U2Result> {
        let n = self.grid.n();
        let mut x = vec![0.0; 2 * n];
        if let Some((i1, i2)) = init {
            self.check_len(i1, i2)?;
            x[..n].copy_from_slice(i1);
            x[n..].copy_from_slice(i2);
        }
        let weights = self.weights.clone();
        let norm = move |g: &[f64]| g.iter().enumerate().fold(0.0f64, |a, (k, v)| a.max((v / weights[k % n]).abs()));
        let mut opts = LbfgsOptions::default();
        let mut total: Option<OptimReport> = None;
        let mut left = max_iter;
        // the preconditioner is rebuilt at the current iterate between rounds
        for _ in 0..6 {
            opts.max_iter = left;
            let pc = self.preconditioner(&x);
            let (xn, rep) = lbfgs(self, &x, Some(&pc), None, &norm, tol, &opts)?;
            x = xn;
            let done = rep.converged;
            left = left.saturating_sub(rep.iterations);
            total = Some(match total {
                None => rep,
                Some(t) => OptimReport {
                    iterations: t.iterations + rep.iterations,
                    evaluations: t.evaluations + rep.evaluations,
                    fallback_steps: t.fallback_steps + rep.fallback_steps,
                    ..rep
                },
            });
            if done || left == 0 {
                break;
            }
        }
        let report = total.expect("at least one round");
        self.result(x[..n].to_vec(), x[n..].to_vec(), report)
    }

    fn result(&self, eta1: Vec<f64>, eta2: Vec<f64>, report: OptimReport) -> Result<U2Result> {
        let (i1, i2) = self.exponential_integrals(&eta1, &eta2);
        let (k1, k2) = self.kappa;
        let lambda = self.params.lambda();
        let e2 = self.params.e * self.params.e;
        let u1: Vec<f64> = eta1.iter().zip(&self.a1).map(|(e, a)| e + a).collect();
        let u2: Vec<f64> = eta2.iter().zip(&self.a2).map(|(e, a)| e + a).collect();
        let xi = self.params.xi;
        Ok(U2Result {
            grid: self.grid,
            q1_sq: u1.iter().map(|u| xi * u.exp()).collect(),
            q2_sq: u2.iter().map(|u| xi * u.exp()).collect(),
            integral_q1_sq: xi * i1 / lambda,
            integral_q2_sq: xi * i2 / lambda,
            expected_q1_sq: k1 / e2,
            expected_q2_sq: k2 / e2,
            identity_residuals: [(i1 - 0.5 * k1).abs() / (0.5 * k1), (i2 - 0.5 * k2).abs() / (0.5 * k2)],
            eta1,
            eta2,
            u1,
            u2,
            report,
        })
    }
}

impl Objective for U2Problem {
    fn dim(&self) -> usize {
        2 * self.grid.n()
    }

    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let n = self.grid.n();
        Ok(self.eval_raw(&x[..n], &x[n..], Some(grad)).map_or(f64::INFINITY, |v| self.offset + v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct U2Result {
    pub grid: Grid,
    pub eta1: Vec<f64>,
    pub eta2: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub q1_sq: Vec<f64>,
    pub q2_sq: Vec<f64>,
    pub integral_q1_sq: f64,
    pub integral_q2_sq: f64,
    /// `κᵢ / e²`.
    pub expected_q1_sq: f64,
    pub expected_q2_sq: f64,
    /// Relative misfit of `λ∫e^{uᵢ} = κᵢ/2`.
    pub identity_residuals: [f64; 2],
    pub report: OptimReport,
}

pub fn minimize(params: U2Params, asym: U2Asymptotics, grid: &Grid, measure: WeightedMeasure, tol: f64) -> Result<U2Result> {
    U2Problem::new(params, asym, grid, measure)?.minimize(None, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub field: String,
    pub side: String,
    pub quadratic: f64,
    pub expected_quadratic: f64,
    pub linear: f64,
    pub expected_linear: f64,
    pub quadratic_error: f64,
    pub linear_error: f64,
    pub residual_rms: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct U2Report {
    pub kappa: (f64, f64),
    pub integrals: (f64, f64),
    pub expected: (f64, f64),
    pub identity_residuals: [f64; 2],
    pub tails: Vec<TailCheck>,
    /// `|ηᵢ(end) − ηᵢ(end ∓ 1)|` for (η₁ right, η₁ left, η₂ right, η₂ left).
    pub flatness: [f64; 4],
    pub pass: bool,
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

/// Tail fits of `ln qᵢ²` against `−λx² + αᵢx` (right) and `−λx² − βᵢx` (left).
pub fn u2_asymptotics_report(result: &U2Result, params: &U2Params, asym: &U2Asymptotics) -> Result<U2Report> {
    let g = &result.grid;
    let (lo, hi) = (0.3 * g.x_max(), 0.9 * g.x_max());
    let lambda = params.lambda();
    let mut tails = Vec::new();
    for (name, q, a, b) in [("q1", &result.q1_sq, asym.alpha1, asym.beta1), ("q2", &result.q2_sq, asym.alpha2, asym.beta2)] {
        let lnq: Vec<f64> = q.iter().map(|v| v.ln()).collect();
        for (side, window, lin) in [("right", (lo, hi), a), ("left", (-hi, -lo), -b)] {
            let fit = fit_tail(g, &lnq, window, TailModel::LinearPlusQuadratic)?;
            let qe = rel(fit.quadratic(), -lambda);
            let le = rel(fit.slope(), lin);
            tails.push(TailCheck {
                field: name.into(),
                side: side.into(),
                quadratic: fit.quadratic(),
                expected_quadratic: -lambda,
                linear: fit.slope(),
                expected_linear: lin,
                quadratic_error: qe,
                linear_error: le,
                residual_rms: fit.residual_rms,
                pass: qe <= 0.02 && le <= 0.05 && fit.residual_rms < 1e-3,
            });
        }
    }
    let n = g.n();
    let step = (1.0 / g.h()).round() as usize;
    let flat = |eta: &[f64]| [(eta[n - 1] - eta[n - 1 - step]).abs(), (eta[0] - eta[step]).abs()];
    let (f1, f2) = (flat(&result.eta1), flat(&result.eta2));
    let flatness = [f1[0], f1[1], f2[0], f2[1]];
    let kappa = kappa_constants(asym, params.gamma);
    let pass = tails.iter().all(|t| t.pass)
        && flatness.iter().all(|f| *f < 1e-6)
        && result.identity_residuals.iter().all(|r| *r < 1e-4);
    Ok(U2Report {
        kappa,
        integrals: (result.integral_q1_sq, result.integral_q2_sq),
        expected: (result.expected_q1_sq, result.expected_q2_sq),
        identity_residuals: result.identity_residuals,
        tails,
        flatness,
        pass,
    })
}
