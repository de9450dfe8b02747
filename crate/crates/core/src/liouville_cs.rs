//! Closed-form Chern-Simons walls and lumps.
//!
//! Nonrelativistic: `u'' = -(2/κ) e^u`. Relativistic (with `λ = 4/κ^2`):
//! `u'' = λ e^u (e^u - 1)`, BPS walls obey `u' = -sqrt(λ)(1 - e^u)`.
//! Everything is evaluated in log-stabilized form so arguments far in the
//! tails neither overflow nor lose the leading behaviour.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{integrate, Grid, Rule};

/// `ln cosh t` without overflow.
pub fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln(1 + c cosh t)` for `c > 0`, stable for large `|t|`.
fn ln_one_plus_c_cosh(c: f64, t: f64) -> f64 {
    let a = t.abs();
    if a < 20.0 {
        (c * t.cosh()).ln_1p()
    } else {
        (0.5 * c).ln() + a + ((-2.0 * a).exp() + (2.0 / c) * (-a).exp()).ln_1p()
    }
}

/// `c sinh t / (1 + c cosh t)` for `c > 0`, stable for large `|t|`.
fn c_sinh_ratio(c: f64, t: f64) -> f64 {
    let a = t.abs();
    let e1 = (-a).exp();
    let e2 = e1 * e1;
    t.signum() * (1.0 - e2) / (1.0 + e2 + (2.0 / c) * e1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JackiwPiParams {
    pub kappa: f64,
    pub m: f64,
}

impl JackiwPiParams {
    pub fn new(kappa: f64, m: f64) -> Result<Self> {
        if kappa == 0.0 || !kappa.is_finite() || !(m > 0.0) {
            return Err(Error::InvalidParameter(format!("need kappa != 0 and m > 0, got kappa={kappa}, m={m}")));
        }
        Ok(Self { kappa, m })
    }

    /// Critical quartic coupling `1/(m κ)`.
    pub fn critical_coupling(&self) -> f64 {
        1.0 / (self.m * self.kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelCsParams {
    pub kappa: f64,
}

impl RelCsParams {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("need kappa > 0, got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn lambda(&self) -> f64 {
        4.0 / (self.kappa * self.kappa)
    }
}

/// A closed-form solution, parametrized by its center `x0` and the value
/// `u0 = u(x0)` (for the topological wall `u0 = ln φ0^2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionFamily {
    JpPosKappa { kappa: f64, x0: f64, u0: f64 },
    JpNegKappa { kappa: f64, x0: f64, u0: f64 },
    RelTopological { kappa: f64, x0: f64, u0: f64 },
    RelLump { kappa: f64, x0: f64, u0: f64 },
}

impl SolutionFamily {
    pub fn jp(kappa: f64, x0: f64, u0: f64) -> Result<Self> {
        if !u0.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidParameter("x0 and u0 must be finite".into()));
        }
        if kappa > 0.0 && kappa.is_finite() {
            Ok(Self::JpPosKappa { kappa, x0, u0 })
        } else if kappa < 0.0 && kappa.is_finite() {
            Ok(Self::JpNegKappa { kappa, x0, u0 })
        } else {
            Err(Error::InvalidParameter(format!("need finite kappa != 0, got {kappa}")))
        }
    }

    pub fn topological(kappa: f64, x0: f64, phi0: f64) -> Result<Self> {
        RelCsParams::new(kappa)?;
        if !(phi0 > 0.0 && phi0 < 1.0) {
            return Err(Error::InvalidParameter(format!("need phi0 in (0,1), got {phi0}")));
        }
        Ok(Self::RelTopological { kappa, x0, u0: 2.0 * phi0.ln() })
    }

    pub fn lump(kappa: f64, x0: f64, u0: f64) -> Result<Self> {
        RelCsParams::new(kappa)?;
        if !(u0 < 0.0) || !u0.is_finite() {
            return Err(Error::InvalidParameter(format!("lump needs u0 < 0, got {u0}")));
        }
        Ok(Self::RelLump { kappa, x0, u0 })
    }

    pub fn kappa(&self) -> f64 {
        match *self {
            Self::JpPosKappa { kappa, .. }
            | Self::JpNegKappa { kappa, .. }
            | Self::RelTopological { kappa, .. }
            | Self::RelLump { kappa, .. } => kappa,
        }
    }

    pub fn x0(&self) -> f64 {
        match *self {
            Self::JpPosKappa { x0, .. }
            | Self::JpNegKappa { x0, .. }
            | Self::RelTopological { x0, .. }
            | Self::RelLump { x0, .. } => x0,
        }
    }

    pub fn u(&self, x: f64) -> f64 {
        match *self {
            Self::JpPosKappa { kappa, x0, u0 } => u0 - 2.0 * ln_cosh((0.5 * u0).exp() * (x - x0) / kappa.sqrt()),
            Self::JpNegKappa { kappa, x0, u0 } => {
                let t = ((0.5 * u0).exp() * (x - x0) / (-kappa).sqrt()).tanh();
                u0 + (t * t).ln_1p()
            }
            Self::RelTopological { kappa, x0, u0 } => topwall_u(4.0 / (kappa * kappa), x0, u0, x),
            Self::RelLump { kappa, x0, u0 } => lump_u(4.0 / (kappa * kappa), x0, u0, x),
        }
    }

    pub fn du(&self, x: f64) -> f64 {
        match *self {
            Self::JpPosKappa { kappa, x0, u0 } => {
                let k = (0.5 * u0).exp() / kappa.sqrt();
                -2.0 * k * (k * (x - x0)).tanh()
            }
            Self::JpNegKappa { kappa, x0, u0 } => {
                let k = (0.5 * u0).exp() / (-kappa).sqrt();
                let t = (k * (x - x0)).tanh();
                2.0 * k * t * (1.0 - t * t) / (1.0 + t * t)
            }
            Self::RelTopological { kappa, x0, u0 } => {
                let lambda = 4.0 / (kappa * kappa);
                -lambda.sqrt() * (-topwall_u(lambda, x0, u0, x).exp_m1())
            }
            Self::RelLump { kappa, x0, u0 } => {
                let lambda = 4.0 / (kappa * kappa);
                let k = lump_tail_slope(lambda, u0);
                -k * c_sinh_ratio(-u0.exp_m1(), k * (x - x0))
            }
        }
    }

    /// Right-hand side of the governing second-order equation.
    pub fn rhs(&self, u: f64) -> f64 {
        match *self {
            Self::JpPosKappa { kappa, .. } | Self::JpNegKappa { kappa, .. } => -2.0 / kappa * u.exp(),
            Self::RelTopological { kappa, .. } | Self::RelLump { kappa, .. } => {
                4.0 / (kappa * kappa) * u.exp() * u.exp_m1()
            }
        }
    }

    /// `φ = e^{u/2}` for the relativistic families.
    pub fn phi(&self, x: f64) -> f64 {
        (0.5 * self.u(x)).exp()
    }

    pub fn dphi(&self, x: f64) -> f64 {
        0.5 * self.phi(x) * self.du(x)
    }

    pub fn sample_u(&self, grid: &Grid) -> Vec<f64> {
        grid.map(|x| self.u(x))
    }
}

pub fn jp_exact(kappa: f64, x0: f64, u0: f64, x: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("jp_exact needs kappa > 0, got {kappa}")));
    }
    Ok(SolutionFamily::jp(kappa, x0, u0)?.u(x))
}

pub fn jp_exact_negk(kappa: f64, x0: f64, u0: f64, x: f64) -> Result<f64> {
    if !(kappa < 0.0) {
        return Err(Error::InvalidParameter(format!("jp_exact_negk needs kappa < 0, got {kappa}")));
    }
    Ok(SolutionFamily::jp(kappa, x0, u0)?.u(x))
}

/// Solution of `u'' = -(2/κ) e^u`, `κ < 0`, with minimum `u0` at `x0`:
/// `u0 - 2 ln cos(e^{u0/2}(x - x0)/sqrt(-κ))`. It exists only for
/// `|x - x0| < (π/2) sqrt(-κ) e^{-u0/2}` and blows up at the ends; outside
/// that interval an error is returned.
pub fn jp_negk_local(kappa: f64, x0: f64, u0: f64, x: f64) -> Result<f64> {
    if !(kappa < 0.0) {
        return Err(Error::InvalidParameter(format!("needs kappa < 0, got {kappa}")));
    }
    let t = (0.5 * u0).exp() * (x - x0) / (-kappa).sqrt();
    if t.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::OutOfRange(x));
    }
    Ok(u0 - 2.0 * t.cos().ln())
}

/// Half-width of the existence interval of [`jp_negk_local`].
pub fn jp_negk_local_half_width(kappa: f64, u0: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 * (-kappa).sqrt() * (-0.5 * u0).exp()
}

fn topwall_u(lambda: f64, x0: f64, u0: f64, x: f64) -> f64 {
    // ln( e^a / (1 - e^{u0} + e^a) ) with a = u0 - sqrt(λ)(x - x0)
    let a = u0 - lambda.sqrt() * (x - x0);
    let c = -u0.exp_m1();
    if a > 0.0 {
        -(c * (-a).exp()).ln_1p()
    } else {
        a - (c + a.exp()).ln()
    }
}

fn lump_u(lambda: f64, x0: f64, u0: f64, x: f64) -> f64 {
    let c = -u0.exp_m1();
    let k = lump_tail_slope(lambda, u0);
    u0 + (2.0 - u0.exp()).ln() - ln_one_plus_c_cosh(c, k * (x - x0))
}

/// Topological wall `u(x)` with `u(x0) = u0 < 0`.
pub fn rel_topwall_u(lambda: f64, x0: f64, u0: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(u0 < 0.0) {
        return Err(Error::InvalidParameter(format!("need lambda > 0 and u0 < 0, got {lambda}, {u0}")));
    }
    Ok(topwall_u(lambda, x0, u0, x))
}

/// Topological wall `φ(x)` with `φ(x0) = φ0 ∈ (0,1)`.
pub fn rel_topwall_phi(lambda: f64, x0: f64, phi0: f64, x: f64) -> Result<f64> {
    if !(phi0 > 0.0 && phi0 < 1.0) {
        return Err(Error::InvalidParameter(format!("need phi0 in (0,1), got {phi0}")));
    }
    Ok((0.5 * rel_topwall_u(lambda, x0, 2.0 * phi0.ln(), x)?).exp())
}

pub fn rel_lump(lambda: f64, x0: f64, u0: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(u0 < 0.0) {
        return Err(Error::InvalidParameter(format!("lump needs lambda > 0 and u0 < 0, got {lambda}, {u0}")));
    }
    Ok(lump_u(lambda, x0, u0, x))
}

/// Asymptotic slope magnitude `sqrt(λ e^{u0}(2 - e^{u0}))` of the lump.
pub fn lump_tail_slope(lambda: f64, u0: f64) -> f64 {
    let e = u0.exp();
    (lambda * e * (2.0 - e)).sqrt()
}

/// `u0 = ln(1 - sqrt(1 - ε^2))`, so that `e^{u0}(2 - e^{u0}) = ε^2`.
pub fn u0_from_epsilon(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("need epsilon in (0,1), got {epsilon}")));
    }
    let e2 = epsilon * epsilon;
    Ok((e2 / (1.0 + (1.0 - e2).sqrt())).ln())
}

/// `H = 2φ'^2 + (2/κ^2) φ^2 (1-φ^2)^2`.
pub fn energy_density(kappa: f64, phi: f64, dphi: f64) -> f64 {
    let s = phi * phi;
    2.0 * dphi * dphi + 2.0 / (kappa * kappa) * s * (1.0 - s) * (1.0 - s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallEnergy {
    pub quadrature: f64,
    pub analytic: f64,
}

const FINE_N: usize = 40001;

/// Interval carrying the topological wall: all densities below double
/// precision relative to their peak outside it.
fn wall_window(kappa: f64, x0: f64, phi0: f64) -> (f64, f64) {
    let s = 2.0 / kappa;
    let shift = 2.0 * phi0.ln().abs() / s;
    (x0 - 40.0 / s - shift, x0 + 40.0 / s + shift)
}

pub fn wall_energy(kappa: f64, phi0: f64, x0: f64) -> Result<WallEnergy> {
    let (a, b) = wall_window(kappa, x0, phi0);
    let quadrature = wall_energy_on(kappa, phi0, x0, a, b)?;
    Ok(WallEnergy { quadrature, analytic: 1.0 / kappa })
}

/// `∫_a^b H dx` for the topological wall.
pub fn wall_energy_on(kappa: f64, phi0: f64, x0: f64, a: f64, b: f64) -> Result<f64> {
    let sol = SolutionFamily::topological(kappa, x0, phi0)?;
    let g = Grid::new(a, b, FINE_N)?;
    let h = g.map(|x| energy_density(kappa, sol.phi(x), sol.dphi(x)));
    integrate(&g, &h, Rule::Simpson)
}

/// `(Q_m, Q_e)` with `Q_m = ∫(2/κ^2) φ^2 (1-φ^2)` and `Q_e = κ Q_m`.
pub fn charges(kappa: f64, phi0: f64, x0: f64) -> Result<(f64, f64)> {
    let sol = SolutionFamily::topological(kappa, x0, phi0)?;
    let (a, b) = wall_window(kappa, x0, phi0);
    let g = Grid::new(a, b, FINE_N)?;
    let f = g.map(|x| {
        let s = sol.phi(x).powi(2);
        2.0 / (kappa * kappa) * s * (1.0 - s)
    });
    let qm = integrate(&g, &f, Rule::Simpson)?;
    Ok((qm, kappa * qm))
}

/// Lump profile used for energy evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LumpForm {
    /// `φ = e^{u/2}` of the exact lump with maximum `φ0`.
    Exact,
    /// `φ0 sqrt((2-φ0)/(1 + (1-φ0) cosh(sqrt(λ φ0 (2-φ0)) x)))`: the
    /// amplitude enters where `φ0^2` belongs. Not a solution; kept because
    /// tabulated energy-curve values were produced with it.
    Unsquared,
}

impl std::str::FromStr for LumpForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "unsquared" => Ok(Self::Unsquared),
            _ => Err(Error::InvalidParameter(format!("unknown lump form `{s}` (exact|unsquared)"))),
        }
    }
}

/// Even lump profile centred at 0 with maximum `phi0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpProfile {
    kappa: f64,
    phi0: f64,
    form: LumpForm,
}

impl LumpProfile {
    pub fn new(kappa: f64, phi0: f64, form: LumpForm) -> Result<Self> {
        RelCsParams::new(kappa)?;
        if !(phi0 > 0.0 && phi0 < 1.0) {
            return Err(Error::InvalidParameter(format!("need phi0 in (0,1), got {phi0}")));
        }
        Ok(Self { kappa, phi0, form })
    }

    fn amplitude(&self) -> f64 {
        match self.form {
            LumpForm::Exact => self.phi0 * self.phi0,
            LumpForm::Unsquared => self.phi0,
        }
    }

    pub fn decay_rate(&self) -> f64 {
        let a = self.amplitude();
        (4.0 / (self.kappa * self.kappa) * a * (2.0 - a)).sqrt()
    }

    pub fn phi(&self, x: f64) -> f64 {
        let a = self.amplitude();
        let ln_den = ln_one_plus_c_cosh(1.0 - a, self.decay_rate() * x);
        self.phi0 * (0.5 * ((2.0 - a).ln() - ln_den)).exp()
    }

    pub fn dphi(&self, x: f64) -> f64 {
        let a = self.amplitude();
        let k = self.decay_rate();
        -0.5 * self.phi(x) * k * c_sinh_ratio(1.0 - a, k * x)
    }

    fn split_integrand(&self, x: f64) -> f64 {
        let p = self.phi(x);
        let r = self.dphi(x) + p * (1.0 - p * p) / self.kappa;
        r * r
    }

    /// `4∫_0^T (φ' + φ(1-φ^2)/κ)^2 dx`.
    pub fn split_integral(&self, upper: f64) -> Result<f64> {
        let g = Grid::new(0.0, upper, FINE_N)?;
        let f = g.map(|x| self.split_integrand(x));
        Ok(4.0 * integrate(&g, &f, Rule::Simpson)?)
    }

    fn far(&self) -> f64 {
        80.0 / self.decay_rate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LumpEnergy {
    /// `4∫_0^∞ (φ' + φ(1-φ^2)/κ)^2`.
    pub half_line_term: f64,
    /// `(2/κ)(1 - (1-φ0^2)^2)`.
    pub boundary_term: f64,
    pub total: f64,
}

pub fn lump_energy(kappa: f64, phi0: f64, form: LumpForm) -> Result<LumpEnergy> {
    let lp = LumpProfile::new(kappa, phi0, form)?;
    let half_line_term = lp.split_integral(lp.far())?;
    let s = 1.0 - phi0 * phi0;
    let boundary_term = 2.0 / kappa * (1.0 - s * s);
    Ok(LumpEnergy { half_line_term, boundary_term, total: half_line_term + boundary_term })
}

/// `∫_{-T}^{T} H` via the split form with its boundary term at `T`.
pub fn lump_energy_truncated(kappa: f64, phi0: f64, form: LumpForm, upper: f64) -> Result<f64> {
    if !(upper > 0.0) {
        return Err(Error::InvalidParameter(format!("need upper > 0, got {upper}")));
    }
    let lp = LumpProfile::new(kappa, phi0, form)?;
    let st = 1.0 - lp.phi(upper).powi(2);
    let s0 = 1.0 - phi0 * phi0;
    Ok(lp.split_integral(upper)? + 2.0 / kappa * (st * st - s0 * s0))
}

/// `2∫_0^∞ H` evaluated on the density directly.
pub fn lump_energy_direct(kappa: f64, phi0: f64, form: LumpForm) -> Result<f64> {
    let lp = LumpProfile::new(kappa, phi0, form)?;
    let g = Grid::new(0.0, lp.far(), FINE_N)?;
    let f = g.map(|x| energy_density(kappa, lp.phi(x), lp.dphi(x)));
    Ok(2.0 * integrate(&g, &f, Rule::Simpson)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyCurvePoint {
    pub kappa: f64,
    pub phi0: f64,
    pub energy: f64,
}

/// `n` equally spaced `φ0` values `1/(n+1), ..., n/(n+1)`.
pub fn default_phi0_lattice(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
}

pub fn energy_curve(kappas: &[f64], phi0s: &[f64], form: LumpForm) -> Result<Vec<EnergyCurvePoint>> {
    let mut out = Vec::with_capacity(kappas.len() * phi0s.len());
    for &kappa in kappas {
        for &phi0 in phi0s {
            let energy = lump_energy(kappa, phi0, form)?.total;
            out.push(EnergyCurvePoint { kappa, phi0, energy });
        }
    }
    Ok(out)
}
