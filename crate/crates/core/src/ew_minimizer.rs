//! Constrained variational solve of the electroweak wall.
//!
//! Variables `u₁ = v₁ + 2v₂`, `u₂ = v₁` with `w² = e^{v₁}`, `φ² = φ₀²e^{v₂}`,
//! and `u₁ = η₁ + u0₁ − ω`, `u₂ = η₂ + u0₂`. Writing `ηᵢ = η̄ᵢ + η̇ᵢ`, the two
//! constraints fix the means:
//!
//! `η̄₁ − η̄₂ = 2 ln γ₁ − 2 ln ∫U e^{(η̇₁−η̇₂)/2}`,  `η̄₂ = ln γ₂ − ln ∫V e^{η̇₂}`
//!
//! and the functional restricted to the constraint set becomes a function of
//! the mean-zero parts alone (the reduced functional minimized here).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{deriv1_all, dot, fit_tail, sum_compensated, trapezoid_weights, Grid, Profile, TailModel};
use crate::optim::{kinetic_preconditioner, minimize as lbfgs, BlockTridiag2, LbfgsOptions, Objective, OptimReport};
use crate::wspace::{build_backgrounds, build_measure, BackgroundPair, WeightedMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwParams {
    pub g: f64,
    /// Weinberg angle in `(0, π/2)`.
    pub theta: f64,
    pub phi0: f64,
}

impl EwParams {
    pub fn new(g: f64, theta: f64, phi0: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) || !(phi0 > 0.0 && phi0.is_finite()) {
            return Err(Error::InvalidParameter(format!("need g > 0 and phi0 > 0, got g = {g}, phi0 = {phi0}")));
        }
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!("need 0 < theta < pi/2, got {theta}")));
        }
        Ok(Self { g, theta, phi0 })
    }

    /// From the two couplings, with `cos θ = g/√(g²+g'²)`.
    pub fn from_couplings(g: f64, g_prime: f64, phi0: f64) -> Result<Self> {
        if !(g_prime > 0.0 && g_prime.is_finite()) {
            return Err(Error::InvalidParameter(format!("need g' > 0, got {g_prime}")));
        }
        Self::new(g, g_prime.atan2(g), phi0)
    }

    pub fn g_prime(&self) -> f64 {
        self.g * self.theta.tan()
    }

    pub fn e(&self) -> f64 {
        self.g * self.theta.sin()
    }

    pub fn tan2(&self) -> f64 {
        self.theta.tan().powi(2)
    }

    /// `g²φ₀²/(2cos²θ)`.
    pub fn lambda(&self) -> f64 {
        (self.g * self.phi0).powi(2) / (2.0 * self.theta.cos().powi(2))
    }

    /// `g²/(8cos²θ)`.
    pub fn critical_coupling(&self) -> f64 {
        self.g * self.g / (8.0 * self.theta.cos().powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwAsymptotics {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
}

impl EwAsymptotics {
    /// Checks the existence conditions, naming every violated inequality.
    pub fn validate(&self, params: &EwParams) -> Result<()> {
        let t = params.tan2();
        let a = self.alpha1 + self.beta1;
        let (m2, n2) = (self.alpha2.abs(), self.beta2.abs());
        let mut bad = Vec::new();
        if !(self.alpha2 < 0.0) {
            bad.push(format!("α₂ < 0 fails (α₂ = {})", self.alpha2));
        }
        if !(self.beta2 < 0.0) {
            bad.push(format!("β₂ < 0 fails (β₂ = {})", self.beta2));
        }
        if !(a > 0.0) {
            bad.push(format!("α₁+β₁ > 0 fails (α₁+β₁ = {a})"));
        }
        if !(m2 + n2 > a / t) {
            bad.push(format!("|α₂|+|β₂| > (α₁+β₁)/tan²θ fails ({} <= {})", m2 + n2, a / t));
        }
        if !(m2.min(n2) + a / t > m2 + n2) {
            bad.push(format!("min{{|α₂|,|β₂|}} + (α₁+β₁)/tan²θ > |α₂|+|β₂| fails ({} <= {})", m2.min(n2) + a / t, m2 + n2));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Inadmissible(bad.join("; ")))
        }
    }

    pub fn min_abs_second(&self) -> f64 {
        self.alpha2.abs().min(self.beta2.abs())
    }
}

/// `(γ₁, γ₂) = ((α₁+β₁)/(g²φ₀²tan²θ), (|α₂|+|β₂| − (α₁+β₁)/tan²θ)/(4g²))`.
pub fn gamma_constants(asym: &EwAsymptotics, params: &EwParams) -> (f64, f64) {
    let (a, b) = raw_targets(asym, params);
    let g2 = params.g * params.g;
    (a / (g2 * params.phi0 * params.phi0 * params.tan2()), b / (4.0 * g2))
}

fn raw_targets(asym: &EwAsymptotics, params: &EwParams) -> (f64, f64) {
    let a = asym.alpha1 + asym.beta1;
    (a, asym.alpha2.abs() + asym.beta2.abs() - a / params.tan2())
}

/// Right-hand sides of the two constraints: `α₁+β₁` and `|α₂|+|β₂| − (α₁+β₁)/tan²θ`.
pub fn constraint_targets(asym: &EwAsymptotics, params: &EwParams) -> Result<(f64, f64)> {
    let (a, b) = raw_targets(asym, params);
    if !(a > 0.0) {
        return Err(Error::Inadmissible(format!("α₁+β₁ > 0 fails (α₁+β₁ = {a})")));
    }
    if !(b > 0.0) {
        return Err(Error::Inadmissible(format!("|α₂|+|β₂| > (α₁+β₁)/tan²θ fails (difference {b})")));
    }
    Ok((a, b))
}

/// `(u₁, u₂) = (v₁ + 2v₂, v₁)`.
pub fn change_variables(v1: &[f64], v2: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (v1.iter().zip(v2).map(|(a, b)| a + 2.0 * b).collect(), v1.to_vec())
}

/// `(v₁, v₂) = (u₂, (u₁ − u₂)/2)`.
pub fn inverse_change(u1: &[f64], u2: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (u2.to_vec(), u1.iter().zip(u2).map(|(a, b)| 0.5 * (a - b)).collect())
}

/// `U = exp(½(u0₁ − u0₂ − ω))` and `V = e^{u0₂}`, kept as logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsUV {
    pub ln_u: Vec<f64>,
    pub ln_v: Vec<f64>,
}

impl WeightsUV {
    pub fn u(&self) -> Vec<f64> {
        self.ln_u.iter().map(|v| v.exp()).collect()
    }

    pub fn v(&self) -> Vec<f64> {
        self.ln_v.iter().map(|v| v.exp()).collect()
    }
}

pub fn weights_uv(bg: &BackgroundPair) -> Result<WeightsUV> {
    if !(bg.second.alpha < 0.0 && bg.second.beta < 0.0) {
        return Err(Error::Inadmissible(format!(
            "α₂ < 0 and β₂ < 0 required, got α₂ = {}, β₂ = {}",
            bg.second.alpha, bg.second.beta
        )));
    }
    let ln_u = (0..bg.u01.len()).map(|j| 0.5 * (bg.u01[j] - bg.u02[j] - bg.omega[j])).collect();
    Ok(WeightsUV { ln_u, ln_v: bg.u02.clone() })
}

/// Grid with `λL²/2 > 60` and `min{|α₂|,|β₂|} L > 30` (5% margin), 6001 points.
pub fn default_grid(params: &EwParams, asym: &EwAsymptotics) -> Result<Grid> {
    let m = asym.min_abs_second();
    if !(m > 0.0) {
        return Err(Error::Inadmissible("α₂ < 0 and β₂ < 0 required".into()));
    }
    let l = (120.0 / params.lambda()).sqrt().max(30.0 / m) * 1.05;
    Grid::symmetric(l, 6001)
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    m + sum_compensated(z.iter().map(|v| (v - m).exp())).ln()
}

/// `ln Σ e^{c_j + d_j}` for `Σ e^{c_j} = 1`, accurate when `d` is small.
fn log_shifted(c: &[f64], d: impl Fn(usize) -> f64) -> f64 {
    let d: Vec<f64> = (0..c.len()).map(d).collect();
    if d.iter().all(|&v| v < 30.0) {
        let s = sum_compensated(c.iter().zip(&d).map(|(c, d)| c.exp() * d.exp_m1()));
        if s > -0.5 {
            return s.ln_1p();
        }
    }
    let z: Vec<f64> = c.iter().zip(&d).map(|(c, d)| c + d).collect();
    log_sum_exp(&z)
}

#[derive(Debug, Clone)]
pub struct EwProblem {
    pub params: EwParams,
    pub asym: EwAsymptotics,
    pub grid: Grid,
    pub measure: WeightedMeasure,
    pub backgrounds: BackgroundPair,
    pub uv: WeightsUV,
    /// Trapezoid weights (`dx`).
    pub weights: Vec<f64>,
    /// `ln(w U)` and `ln(w V)` shifted so each exponentiates to unit sum.
    cu: Vec<f64>,
    cv: Vec<f64>,
    /// The shifts, `ln ∫U` and `ln ∫V`.
    mu: f64,
    mv: f64,
    /// `(α₁+β₁, |α₂|+|β₂| − (α₁+β₁)/tan²θ)`.
    pub targets: (f64, f64),
    pub gammas: (f64, f64),
}

impl EwProblem {
    pub fn new(params: EwParams, asym: EwAsymptotics, grid: &Grid, measure: WeightedMeasure) -> Result<Self> {
        asym.validate(&params)?;
        let targets = constraint_targets(&asym, &params)?;
        if measure.grid != *grid {
            return Err(Error::InvalidGrid("measure was built on a different grid".into()));
        }
        if !(measure.beta < asym.min_abs_second()) {
            return Err(Error::InvalidParameter(format!(
                "measure exponent β = {} must lie below min{{|α₂|,|β₂|}} = {}",
                measure.beta,
                asym.min_abs_second()
            )));
        }
        let bg = build_backgrounds(grid, asym.alpha1, asym.alpha2, asym.beta1, asym.beta2, params.lambda())?;
        let uv = weights_uv(&bg)?;
        let weights = trapezoid_weights(grid);
        let zu: Vec<f64> = (0..grid.n()).map(|j| weights[j].ln() + uv.ln_u[j]).collect();
        let zv: Vec<f64> = (0..grid.n()).map(|j| weights[j].ln() + uv.ln_v[j]).collect();
        let (mu, mv) = (log_sum_exp(&zu), log_sum_exp(&zv));
        Ok(Self {
            cu: zu.iter().map(|z| z - mu).collect(),
            cv: zv.iter().map(|z| z - mv).collect(),
            mu,
            mv,
            gammas: gamma_constants(&asym, &params),
            params,
            asym,
            grid: *grid,
            measure,
            backgrounds: bg,
            uv,
            weights,
            targets,
        })
    }

    /// Default grid and `β = min{|α₂|,|β₂|}/2`.
    pub fn with_defaults(params: EwParams, asym: EwAsymptotics) -> Result<Self> {
        asym.validate(&params)?;
        let grid = default_grid(&params, &asym)?;
        let measure = build_measure(&grid, 0.5 * asym.min_abs_second())?;
        Self::new(params, asym, &grid, measure)
    }

    fn check_len(&self, a: &[f64], b: &[f64]) -> Result<()> {
        let n = self.grid.n();
        for (name, v) in [("eta1", a), ("eta2", b)] {
            if v.len() != n {
                return Err(Error::LengthMismatch { field: name.into(), len: v.len(), n });
            }
        }
        Ok(())
    }

    /// `(ln ∫U e^{(η̇₁−η̇₂)/2}, ln ∫V e^{η̇₂})`.
    pub fn log_integrals(&self, e1: &[f64], e2: &[f64]) -> (f64, f64) {
        let (ru, rv) = self.log_ratios(e1, e2);
        (self.mu + ru, self.mv + rv)
    }

    /// `log_integrals` less its value at zero.
    fn log_ratios(&self, e1: &[f64], e2: &[f64]) -> (f64, f64) {
        (log_shifted(&self.cu, |j| 0.5 * (e1[j] - e2[j])), log_shifted(&self.cv, |j| e2[j]))
    }

    /// Reduced functional at zero.
    pub fn reduced_functional_offset(&self) -> f64 {
        let t = self.params.tan2();
        let (a, b) = self.targets;
        let (g1c, g2c) = self.gammas;
        2.0 * a / t * (self.mu - g1c.ln()) - b * (self.mv - g2c.ln())
    }

    /// Means fixed by the constraints.
    pub fn means(&self, e1: &[f64], e2: &[f64]) -> (f64, f64) {
        let (lu, lv) = self.log_integrals(e1, e2);
        let m2 = self.gammas.1.ln() - lv;
        (m2 + 2.0 * self.gammas.0.ln() - 2.0 * lu, m2)
    }

    /// Value less the offset and Euclidean gradient at mean-zero `(e1, e2)`.
    fn eval_dotted(&self, e1: &[f64], e2: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let n = self.grid.n();
        let h = self.grid.h();
        let t = self.params.tan2();
        let (a, b) = self.targets;
        let (s1, s2) = (&self.backgrounds.s1, &self.backgrounds.s2);
        let kin = sum_compensated((0..n - 1).map(|j| {
            let d1 = e1[j + 1] - e1[j];
            let d2 = e2[j + 1] - e2[j];
            (d1 * d1 / t + d2 * d2) / (2.0 * h)
        }));
        let src = sum_compensated((0..n).map(|j| s1[j] * e1[j] / t + s2[j] * e2[j]));
        let (ru, rv) = self.log_ratios(e1, e2);
        let value = kin - src + 2.0 * a / t * ru - b * rv;
        if let Some(g) = grad {
            let (ga, gb) = g.split_at_mut(n);
            for j in 0..n {
                let p = (self.cu[j] + 0.5 * (e1[j] - e2[j]) - ru).exp();
                let q = (self.cv[j] + e2[j] - rv).exp();
                ga[j] = -s1[j] / t + a / t * p;
                gb[j] = -s2[j] - a / t * p - b * q;
            }
            for j in 0..n - 1 {
                let d1 = (e1[j + 1] - e1[j]) / h;
                let d2 = (e2[j + 1] - e2[j]) / h;
                ga[j] -= d1 / t;
                ga[j + 1] += d1 / t;
                gb[j] -= d2;
                gb[j + 1] += d2;
            }
        }
        value
    }

    /// Reduced functional on mean-zero inputs.
    pub fn reduced_functional(&self, e1: &[f64], e2: &[f64]) -> Result<f64> {
        Ok(self.reduced_functional_offset() + self.reduced_functional_relative(e1, e2)?)
    }

    /// `reduced_functional − reduced_functional_offset`, without the constant.
    pub fn reduced_functional_relative(&self, e1: &[f64], e2: &[f64]) -> Result<f64> {
        self.check_len(e1, e2)?;
        self.measure.check_mean_zero(e1)?;
        self.measure.check_mean_zero(e2)?;
        Ok(self.eval_dotted(e1, e2, None))
    }

    /// L² gradient on the mean-zero subspace.
    pub fn reduced_gradient(&self, e1: &[f64], e2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(e1, e2)?;
        self.measure.check_mean_zero(e1)?;
        self.measure.check_mean_zero(e2)?;
        let n = self.grid.n();
        let mut g = vec![0.0; 2 * n];
        self.eval_dotted(e1, e2, Some(&mut g));
        self.project_gradient(&mut g);
        Ok(((0..n).map(|j| g[j] / self.weights[j]).collect(), (0..n).map(|j| g[n + j] / self.weights[j]).collect()))
    }

    fn project(&self, x: &mut [f64]) {
        let n = self.grid.n();
        self.measure.project_mean_zero(&mut x[..n]);
        self.measure.project_mean_zero(&mut x[n..]);
    }

    /// Transpose of the mean projection.
    fn project_gradient(&self, g: &mut [f64]) {
        let n = self.grid.n();
        let mu = &self.measure.weights;
        let (a, b) = g.split_at_mut(n);
        for half in [a, b] {
            let s = sum_compensated(half.iter().copied()) / self.measure.mu_total;
            for (v, m) in half.iter_mut().zip(mu) {
                *v -= m * s;
            }
        }
    }

    fn preconditioner(&self, x: &[f64]) -> BlockTridiag2 {
        let n = self.grid.n();
        let t = self.params.tan2();
        let (a, _) = self.targets;
        let (ru, _) = self.log_ratios(&x[..n], &x[n..]);
        let local: Vec<[[f64; 2]; 2]> = (0..n)
            .map(|j| {
                let p = (self.cu[j] + 0.5 * (x[j] - x[n + j]) - ru).exp();
                let k = 0.5 * a / t * p;
                let mass = self.measure.weights[j];
                [[k + mass, -k], [-k, k + mass]]
            })
            .collect();
        kinetic_preconditioner(self.grid.h(), [[1.0 / t, 0.0], [0.0, 1.0]], &local)
    }

    /// One minimization from `init` (zero if `None`).
    pub fn minimize_from(&self, init: Option<(&[f64], &[f64])>, tol: f64) -> Result<EwResult> {
        self.minimize_capped(init, tol, LbfgsOptions::default().max_iter)
    }

    /// As [`Self::minimize_from`] with at most `max_iter` iterations in total.
    pub fn minimize_capped(&self, init: Option<(&[f64], &[f64])>, tol: f64, max_iter: usize) -> Result<EwResult> {
        let n = self.grid.n();
        let mut x = vec![0.0; 2 * n];
        if let Some((a, b)) = init {
            self.check_len(a, b)?;
            x[..n].copy_from_slice(a);
            x[n..].copy_from_slice(b);
        }
        self.project(&mut x);
        let weights = self.weights.clone();
        let norm = move |g: &[f64]| g.iter().enumerate().fold(0.0f64, |a, (k, v)| a.max((v / weights[k % n]).abs()));
        let project = |v: &mut [f64]| self.project(v);
        let mut opts = LbfgsOptions::default();
        let mut total: Option<OptimReport> = None;
        let mut left = max_iter;
        for _ in 0..8 {
            opts.max_iter = left;
            let pc = self.preconditioner(&x);
            let (xn, rep) = lbfgs(self, &x, Some(&pc), Some(&project), &norm, tol, &opts)?;
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
        Ok(self.result(x[..n].to_vec(), x[n..].to_vec(), total.expect("at least one round")))
    }

    /// Minimization from zero plus `opts.restarts` seeded random starts; the
    /// zero-start solution is returned with the largest sup-norm deviation
    /// of any restart recorded in `restart_spread`.
    pub fn minimize(&self, opts: &EwOptions) -> Result<EwResult> {
        let mut best = self.minimize_capped(None, opts.tol, opts.max_iter)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut spread = 0.0f64;
        for _ in 0..opts.restarts {
            let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let w: f64 = rng.gen_range(2.0..6.0);
            let i1 = self.grid.map(|x| c[0] * (x / w).tanh() + c[1] * (-(x * x) / (2.0 * w)).exp());
            let i2 = self.grid.map(|x| c[2] * (x / w).sin() + c[3] * (-(x * x) / w).exp());
            let r = self.minimize_capped(Some((&i1, &i2)), opts.tol, opts.max_iter)?;
            if !r.report.converged {
                best.report.converged = false;
                best.report.stop_reason = format!("restart failed: {}", r.report.stop_reason);
            }
            for k in 0..self.grid.n() {
                spread = spread.max((r.eta1[k] - best.eta1[k]).abs()).max((r.eta2[k] - best.eta2[k]).abs());
            }
        }
        best.restarts = opts.restarts;
        best.restart_spread = spread;
        Ok(best)
    }

    fn result(&self, e1: Vec<f64>, e2: Vec<f64>, report: OptimReport) -> EwResult {
        let n = self.grid.n();
        let (m1, m2) = self.means(&e1, &e2);
        let eta1: Vec<f64> = e1.iter().map(|v| v + m1).collect();
        let eta2: Vec<f64> = e2.iter().map(|v| v + m2).collect();
        let bg = &self.backgrounds;
        let u1: Vec<f64> = (0..n).map(|j| eta1[j] + bg.u01[j] - bg.omega[j]).collect();
        let u2: Vec<f64> = (0..n).map(|j| eta2[j] + bg.u02[j]).collect();
        let (v1, v2) = inverse_change(&u1, &u2);
        let p = &self.params;
        let g2 = p.g * p.g;
        let phi02 = p.phi0 * p.phi0;
        let c1 = g2 * phi02 * p.tan2() * sum_compensated((0..n).map(|j| self.weights[j] * (self.uv.ln_u[j] + 0.5 * (eta1[j] - eta2[j])).exp()));
        let c2 = 4.0 * g2 * sum_compensated((0..n).map(|j| self.weights[j] * (self.uv.ln_v[j] + eta2[j]).exp()));
        let (a, b) = self.targets;
        let int_w = sum_compensated((0..n).map(|j| self.weights[j] * v1[j].exp()));
        let int_phi = phi02 * sum_compensated((0..n).map(|j| self.weights[j] * v2[j].exp()));
        EwResult {
            grid: self.grid,
            eta1_dot: e1,
            eta2_dot: e2,
            eta1_mean: m1,
            eta2_mean: m2,
            eta1,
            eta2,
            u1,
            u2,
            v1,
            v2,
            constraint_values: (c1, c2),
            constraint_targets: (a, b),
            constraint_residuals: ((c1 - a).abs() / a, (c2 - b).abs() / b),
            integral_w_sq: int_w,
            integral_phi_sq: int_phi,
            expected_w_sq: b / (4.0 * g2),
            expected_phi_sq: a / (g2 * p.tan2()),
            report,
            restarts: 0,
            restart_spread: 0.0,
        }
    }
}

impl Objective for EwProblem {
    fn dim(&self) -> usize {
        2 * self.grid.n()
    }

    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let mut y = x.to_vec();
        self.project(&mut y);
        let n = self.grid.n();
        let v = self.reduced_functional_offset() + self.eval_dotted(&y[..n], &y[n..], Some(grad));
        self.project_gradient(grad);
        Ok(if v.is_finite() { v } else { f64::INFINITY })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwOptions {
    /// Sup-norm of the L² gradient.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Iteration budget per start.
    pub max_iter: usize,
}

impl Default for EwOptions {
    fn default() -> Self {
        Self { tol: 1e-8, restarts: 5, seed: 0, max_iter: LbfgsOptions::default().max_iter }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwResult {
    pub grid: Grid,
    pub eta1_dot: Vec<f64>,
    pub eta2_dot: Vec<f64>,
    pub eta1_mean: f64,
    pub eta2_mean: f64,
    pub eta1: Vec<f64>,
    pub eta2: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    /// `ln w²`.
    pub v1: Vec<f64>,
    /// `ln(φ²/φ₀²)`.
    pub v2: Vec<f64>,
    pub constraint_values: (f64, f64),
    pub constraint_targets: (f64, f64),
    pub constraint_residuals: (f64, f64),
    pub integral_w_sq: f64,
    pub integral_phi_sq: f64,
    pub expected_w_sq: f64,
    pub expected_phi_sq: f64,
    pub report: OptimReport,
    pub restarts: usize,
    pub restart_spread: f64,
}

pub fn minimize_constrained(params: EwParams, asym: EwAsymptotics, grid: &Grid, measure: WeightedMeasure, opts: &EwOptions) -> Result<EwResult> {
    EwProblem::new(params, asym, grid, measure)?.minimize(opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub xi1: f64,
    pub xi2: f64,
    /// Sup-norm of the least-squares KKT residual (per unit length).
    pub kkt_residual: f64,
    /// Same residual with `(ξ₁, ξ₂) = (−1, 4)` substituted.
    pub kkt_residual_nominal: f64,
    pub condition: f64,
}

/// Least-squares multipliers for
/// `[(−η₁''−u0₁'')/tan²θ, −η₂''−u0₂''] = ξ₁ g²φ₀²U e^{(η₁−η₂)/2}(1, −1) + ξ₂ (0, g²V e^{η₂})`.
pub fn recover_multipliers(problem: &EwProblem, result: &EwResult) -> Result<Multipliers> {
    let n = problem.grid.n();
    let h = problem.grid.h();
    let t = problem.params.tan2();
    let p = &problem.params;
    let g2 = p.g * p.g;
    let mut lhs = vec![0.0; 2 * n];
    for j in 0..n {
        lhs[j] = -problem.backgrounds.s1[j] / t;
        lhs[n + j] = -problem.backgrounds.s2[j];
    }
    for j in 0..n - 1 {
        let d1 = (result.eta1[j + 1] - result.eta1[j]) / h;
        let d2 = (result.eta2[j + 1] - result.eta2[j]) / h;
        lhs[j] -= d1 / t;
        lhs[j + 1] += d1 / t;
        lhs[n + j] -= d2;
        lhs[n + j + 1] += d2;
    }
    let mut b1 = vec![0.0; 2 * n];
    let mut b2 = vec![0.0; 2 * n];
    for j in 0..n {
        let w = problem.weights[j];
        let ue = g2 * p.phi0 * p.phi0 * w * (problem.uv.ln_u[j] + 0.5 * (result.eta1[j] - result.eta2[j])).exp();
        b1[j] = ue;
        b1[n + j] = -ue;
        b2[n + j] = g2 * w * (problem.uv.ln_v[j] + result.eta2[j]).exp();
    }
    let (m11, m12, m22) = (dot(&b1, &b1), dot(&b1, &b2), dot(&b2, &b2));
    let (r1, r2) = (dot(&b1, &lhs), dot(&b2, &lhs));
    let tr = m11 + m22;
    let det = m11 * m22 - m12 * m12;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (ev_hi, ev_lo) = (0.5 * tr + disc, 0.5 * tr - disc);
    let condition = if ev_lo > 0.0 { ev_hi / ev_lo } else { f64::INFINITY };
    if !(condition < 1e12) {
        return Err(Error::DependentConstraints(condition));
    }
    let xi1 = (m22 * r1 - m12 * r2) / det;
    let xi2 = (m11 * r2 - m12 * r1) / det;
    let resid = |a: f64, b: f64| (0..2 * n).fold(0.0f64, |m, k| m.max((lhs[k] - a * b1[k] - b * b2[k]).abs() / problem.weights[k % n]));
    Ok(Multipliers { xi1, xi2, kkt_residual: resid(xi1, xi2), kkt_residual_nominal: resid(-1.0, 4.0), condition })
}

/// Fields `w`, `φ`, `P`, `Z` and the derivatives `P'`, `Z'` from the solution.
///
/// `Z = (2cosθ/g)(ln φ)'` and `P = −((ln w)'/g + cosθ Z)/sinθ`, so two of the
/// first-order equations hold by construction and the other two are checked.
pub fn reconstruct_fields(result: &EwResult, params: &EwParams) -> Result<Profile> {
    let g = &result.grid;
    let (s, c) = params.theta.sin_cos();
    let ln_w: Vec<f64> = result.v1.iter().map(|v| 0.5 * v).collect();
    let ln_phi: Vec<f64> = result.v2.iter().map(|v| params.phi0.ln() + 0.5 * v).collect();
    let dlw = deriv1_all(g, &ln_w);
    let dlp = deriv1_all(g, &ln_phi);
    let z: Vec<f64> = dlp.iter().map(|d| 2.0 * c / params.g * d).collect();
    let p: Vec<f64> = dlw.iter().zip(&z).map(|(d, z)| -(d / params.g + c * z) / s).collect();
    let dz = deriv1_all(g, &z);
    let dp = deriv1_all(g, &p);
    Profile::new(*g)
        .with("w", ln_w.iter().map(|v| v.exp()).collect())?
        .with("phi", ln_phi.iter().map(|v| v.exp()).collect())?
        .with("ln_w", ln_w)?
        .with("ln_phi", ln_phi)?
        .with("P", p)?
        .with("Z", z)?
        .with("dP", dp)?
        .with("dZ", dz)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwTailCheck {
    pub quantity: String,
    pub side: String,
    pub fitted: f64,
    pub expected: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub residual_rms: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwReport {
    pub integral_w_sq: f64,
    pub expected_w_sq: f64,
    pub integral_phi_sq: f64,
    pub expected_phi_sq: f64,
    pub integral_errors: (f64, f64),
    pub constraint_residuals: (f64, f64),
    pub tails: Vec<EwTailCheck>,
    pub pass: bool,
}

/// Tail fits of `ln w²` and `ln φ²` and the exact integrals.
pub fn ew_asymptotics_report(result: &EwResult, params: &EwParams, asym: &EwAsymptotics) -> Result<EwReport> {
    let g = &result.grid;
    let (lo, hi) = (0.3 * g.x_max(), 0.9 * g.x_max());
    let quad = -params.lambda() / 2.0;
    let mut tails = Vec::new();
    let mut push = |quantity: &str, side: &str, fitted: f64, expected: f64, tol: f64, rms: f64| {
        let rel_error = (fitted - expected).abs() / expected.abs().max(1e-300);
        tails.push(EwTailCheck {
            quantity: quantity.into(),
            side: side.into(),
            fitted,
            expected,
            rel_error,
            tolerance: tol,
            residual_rms: rms,
            pass: rel_error <= tol && rms < 1e-3,
        });
    };
    let ln_phi2: Vec<f64> = result.v2.iter().map(|v| v + 2.0 * params.phi0.ln()).collect();
    for (side, window, w_slope, phi_lin) in [
        ("right", (lo, hi), asym.alpha2, 0.5 * (asym.alpha1 + asym.alpha2.abs())),
        ("left", (-hi, -lo), asym.beta2.abs(), -0.5 * (asym.beta1 + asym.beta2.abs())),
    ] {
        let fw = fit_tail(g, &result.v1, window, TailModel::Linear)?;
        push("ln_w2_slope", side, fw.slope(), w_slope, 0.02, fw.residual_rms);
        let fp = fit_tail(g, &ln_phi2, window, TailModel::LinearPlusQuadratic)?;
        push("ln_phi2_quadratic", side, fp.quadratic(), quad, 0.02, fp.residual_rms);
        push("ln_phi2_linear", side, fp.slope(), phi_lin, 0.05, fp.residual_rms);
    }
    let ew = (result.integral_w_sq - result.expected_w_sq).abs() / result.expected_w_sq;
    let ep = (result.integral_phi_sq - result.expected_phi_sq).abs() / result.expected_phi_sq;
    let pass = tails.iter().all(|t| t.pass) && ew <= 1e-3 && ep <= 1e-3;
    Ok(EwReport {
        integral_w_sq: result.integral_w_sq,
        expected_w_sq: result.expected_w_sq,
        integral_phi_sq: result.integral_phi_sq,
        expected_phi_sq: result.expected_phi_sq,
        integral_errors: (ew, ep),
        constraint_residuals: result.constraint_residuals,
        tails,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_shifted_matches_log_sum_exp() {
        let z = [-3.0, 0.5, -1.25, 2.0, -40.0];
        let m = log_sum_exp(&z);
        let c: Vec<f64> = z.iter().map(|v| v - m).collect();
        for scale in [1e-3, 0.7, 5.0, 80.0] {
            let d = |j: usize| scale * ((j as f64) - 1.7).sin();
            let shifted: Vec<f64> = (0..z.len()).map(|j| c[j] + d(j)).collect();
            let want = log_sum_exp(&shifted);
            let got = log_shifted(&c, d);
            assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0), "{scale}: {got} vs {want}");
        }
        // tiny shifts: second-order cumulant expansion as the reference
        let d = |j: usize| 1e-9 * ((j as f64) - 1.7).sin();
        let p: Vec<f64> = c.iter().map(|v| v.exp()).collect();
        let m1: f64 = (0..5).map(|j| p[j] * d(j)).sum();
        let m2: f64 = (0..5).map(|j| p[j] * d(j) * d(j)).sum();
        let want = m1 + 0.5 * (m2 - m1 * m1);
        let got = log_shifted(&c, d);
        assert!((got - want).abs() <= 1e-12 * want.abs(), "{got} vs {want}");
        assert!((log_sum_exp(&(0..5).map(|j| c[j] + d(j)).collect::<Vec<_>>()) - want).abs() > 1e-9 * want.abs());
        // exact zero shift stays exactly zero
        assert_eq!(log_shifted(&c, |_| 0.0), 0.0);
    }
}
