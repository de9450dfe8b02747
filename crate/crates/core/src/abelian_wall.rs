//! Abelian Higgs walls `u'' = λ(e^u - 1)` and the general family
//! `u'' = λ(e^u - ε)`.
//!
//! The Higgs-to-magnetic wall is marched on its first integral
//! `u' = -sqrt(2λ) sqrt(e^u - u - 1)` in the factored form
//! `|u| sqrt((e^u - 1 - u)/u^2)`, which stays accurate as `u -> 0` and keeps
//! the left (exponentially decaying) tail stable. The magnetic-to-magnetic
//! wall starts on the second-order equation at its maximum and switches to
//! the first integral once `u` has dropped by `1e-3`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cumulative_trapezoid, deriv1, fit_tail, Grid, Profile, TailModel};
use crate::ode::{march, rk4, Dir};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbelianHiggsParams {
    pub e: f64,
    pub xi: f64,
}

impl AbelianHiggsParams {
    pub fn new(e: f64, xi: f64) -> Result<Self> {
        if !(e > 0.0 && e.is_finite()) || !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::InvalidParameter(format!("need e > 0 and xi > 0, got e={e}, xi={xi}")));
        }
        Ok(Self { e, xi })
    }

    pub fn lambda(&self) -> f64 {
        2.0 * self.e * self.e * self.xi
    }
}

/// `u'' = λ(e^u - ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralLiouvilleParams {
    pub lambda: f64,
    pub epsilon: f64,
}

impl GeneralLiouvilleParams {
    pub fn new(lambda: f64, epsilon: f64) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need finite lambda != 0 and finite epsilon, got lambda={lambda}, epsilon={epsilon}"
            )));
        }
        Ok(Self { lambda, epsilon })
    }

    /// W-condensate `u'' = -4e^2 e^u - 2 m_W^2`.
    pub fn w_condensate(e: f64, m_w: f64) -> Result<Self> {
        if !(e > 0.0) || !(m_w > 0.0) {
            return Err(Error::InvalidParameter(format!("need e > 0 and m_W > 0, got e={e}, m_W={m_w}")));
        }
        Self::new(-4.0 * e * e, -m_w * m_w / (2.0 * e * e))
    }

    pub fn abelian_higgs(params: &AbelianHiggsParams) -> Self {
        Self { lambda: params.lambda(), epsilon: 1.0 }
    }

    pub fn rhs(&self, u: f64) -> f64 {
        self.lambda * (u.exp() - self.epsilon)
    }

    /// `(u')^2/2 - λ(e^u - εu)`, constant along solutions.
    pub fn first_integral(&self, u: f64, du: f64) -> f64 {
        0.5 * du * du - self.lambda * (u.exp() - self.epsilon * u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WallBc {
    /// `u(-inf) = 0`, `u(+inf) = -inf`, normalized by `u(x_ref) = u_ref < 0`.
    HiggsToMagnetic { x_ref: f64, u_ref: f64 },
    /// `u(±inf) = -inf` with maximum `u0 <= 0` at `x0`.
    MagneticToMagnetic { x0: f64, u0: f64 },
}

/// `e^u - 1 - u`, accurate for small `|u|`.
pub(crate) fn expm1_minus_x(u: f64) -> f64 {
    if u.abs() < 0.5 {
        u * u * phi2_series(u)
    } else {
        u.exp_m1() - u
    }
}

/// `(e^u - 1 - u)/u^2` by its Taylor series; used for `|u| < 0.5`.
fn phi2_series(u: f64) -> f64 {
    let mut term = 0.5;
    let mut sum = 0.5;
    let mut k = 2.0;
    loop {
        k += 1.0;
        term *= u / k;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `sqrt(e^u - 1 - u)` in factored form.
fn sqrt_expm1_minus_x(u: f64) -> f64 {
    if u.abs() < 0.5 {
        u.abs() * phi2_series(u).sqrt()
    } else {
        (u.exp_m1() - u).max(0.0).sqrt()
    }
}

/// Lower branch of `(u')^2 = 2λ(e^u - u - 1)`.
pub fn first_integral_htm(u: f64, lambda: f64) -> Result<f64> {
    if u > 0.0 || u.is_nan() {
        return Err(Error::OutOfRange(u));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("need lambda > 0, got {lambda}")));
    }
    Ok(-(2.0 * lambda).sqrt() * sqrt_expm1_minus_x(u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallSolution {
    /// Fields `u` and `du`.
    pub profile: Profile,
    /// Set when the grid does not reach the tail criteria.
    pub tail_warning: Option<String>,
}

/// Grid reaching `-λ x^2/2 < -60` on magnetic sides and `e^{-sqrt(λ)|x|} <
/// 1e-12` on a Higgs side, with 8001 points.
pub fn default_grid(lambda: f64, bc: &WallBc) -> Result<Grid> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("need lambda > 0, got {lambda}")));
    }
    let magnetic = (120.0 / lambda).sqrt();
    let higgs = 12.0 * 10f64.ln() / lambda.sqrt();
    let half = match bc {
        WallBc::HiggsToMagnetic { x_ref, .. } => x_ref.abs() + 1.05 * magnetic.max(higgs),
        WallBc::MagneticToMagnetic { x0, .. } => x0.abs() + 1.05 * magnetic,
    };
    Grid::symmetric(half, 8001)
}

fn tail_check_htm(grid: &Grid, u: &[f64]) -> Option<String> {
    let mut notes = Vec::new();
    let left = u[0].abs();
    let right = u[grid.n() - 1];
    if left > 1e-10 {
        notes.push(format!("left tail not resolved: |u(x_min)| = {left:e}"));
    }
    if right > -60.0 {
        notes.push(format!("right tail not resolved: u(x_max) = {right} > -60"));
    }
    (!notes.is_empty()).then(|| notes.join("; "))
}

pub fn solve_higgs_to_magnetic(lambda: f64, grid: &Grid, x_ref: f64, u_ref: f64) -> Result<WallSolution> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("need lambda > 0, got {lambda}")));
    }
    if !(u_ref < 0.0) {
        return Err(Error::InvalidParameter(format!("normalization needs u_ref < 0, got {u_ref}")));
    }
    if !grid.contains(x_ref) {
        return Err(Error::InvalidParameter(format!("x_ref = {x_ref} lies outside the grid")));
    }
    let c = (2.0 * lambda).sqrt();
    let f = move |y: &[f64; 1]| [-c * sqrt_expm1_minus_x(y[0].min(0.0))];
    let n = grid.n();
    let mut u = vec![0.0; n];
    for dir in [Dir::Left, Dir::Right] {
        for (i, y) in march(grid, x_ref, [u_ref], dir, |y, dx| Some(rk4(&f, y, dx))) {
            u[i] = y[0];
        }
    }
    let du: Vec<f64> = u.iter().map(|&v| f(&[v])[0]).collect();
    let tail_warning = tail_check_htm(grid, &u);
    let profile = Profile::new(*grid).with("u", u)?.with("du", du)?;
    Ok(WallSolution { profile, tail_warning })
}

pub fn solve_magnetic_to_magnetic(lambda: f64, x0: f64, u0: f64, grid: &Grid) -> Result<WallSolution> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("need lambda > 0, got {lambda}")));
    }
    if u0 > 0.0 || !u0.is_finite() {
        return Err(Error::OutOfRange(u0));
    }
    if !grid.contains(x0) {
        return Err(Error::InvalidParameter(format!("x0 = {x0} lies outside the grid")));
    }
    let n = grid.n();
    if u0 == 0.0 {
        let profile = Profile::new(*grid).with("u", vec![0.0; n])?.with("du", vec![0.0; n])?;
        return Ok(WallSolution { profile, tail_warning: None });
    }
    let a = -u0.exp_m1();
    let eu0 = u0.exp();
    // f(u) = e^u - u - e^{u0} + u0 with d = u - u0 <= 0.
    let f_of = move |u: f64| {
        let d = (u - u0).min(0.0);
        (-d * a + eu0 * expm1_minus_x(d)).max(0.0)
    };
    let c = (2.0 * lambda).sqrt();
    let second = move |y: &[f64; 2]| [y[1], lambda * y[0].exp_m1()];
    let switch = 1e-3;
    let mut u = vec![0.0; n];
    let mut du = vec![0.0; n];
    for dir in [Dir::Left, Dir::Right] {
        let sign = if dir == Dir::Right { -1.0 } else { 1.0 };
        let first = move |y: &[f64; 2]| [sign * c * f_of(y[0]).sqrt(), 0.0];
        let mut on_first = false;
        let visited = march(grid, x0, [u0, 0.0], dir, |y, dx| {
            let mut next = if on_first { rk4(&first, y, dx) } else { rk4(&second, y, dx) };
            if on_first {
                next[1] = sign * c * f_of(next[0]).sqrt();
            } else if u0 - next[0] >= switch {
                on_first = true;
            }
            Some(next)
        });
        for (i, y) in visited {
            u[i] = y[0];
            du[i] = y[1];
        }
    }
    let mut notes = Vec::new();
    for (side, v) in [("left", u[0]), ("right", u[n - 1])] {
        if v > -60.0 {
            notes.push(format!("{side} tail not resolved: u = {v} > -60"));
        }
    }
    let profile = Profile::new(*grid).with("u", u)?.with("du", du)?;
    Ok(WallSolution { profile, tail_warning: (!notes.is_empty()).then(|| notes.join("; ")) })
}

pub fn solve_wall(params: &AbelianHiggsParams, bc: &WallBc, grid: &Grid) -> Result<WallSolution> {
    match *bc {
        WallBc::HiggsToMagnetic { x_ref, u_ref } => solve_higgs_to_magnetic(params.lambda(), grid, x_ref, u_ref),
        WallBc::MagneticToMagnetic { x0, u0 } => solve_magnetic_to_magnetic(params.lambda(), x0, u0, grid),
    }
}

/// Initial data for the general family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalization {
    /// `u(x0) = u0`, `u'(x0) = 0`.
    Extremum { x0: f64, u0: f64 },
    Point { x_ref: f64, u_ref: f64, du_ref: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowUp {
    /// Last grid coordinate reached on each side before `|u|` exceeded the cap.
    pub left: Option<f64>,
    pub right: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralSolution {
    /// Fields `u` and `du` on the sub-grid actually reached.
    pub profile: Profile,
    pub blow_up: Option<BlowUp>,
}

pub const BLOW_UP_CAP: f64 = 100.0;

pub fn solve_general(params: &GeneralLiouvilleParams, norm: &Normalization, grid: &Grid) -> Result<GeneralSolution> {
    let (x_start, y0) = match *norm {
        Normalization::Extremum { x0, u0 } => (x0, [u0, 0.0]),
        Normalization::Point { x_ref, u_ref, du_ref } => (x_ref, [u_ref, du_ref]),
    };
    if !grid.contains(x_start) || !y0.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter(format!("normalization point {x_start} outside grid or non-finite")));
    }
    if y0[0].abs() > BLOW_UP_CAP {
        return Err(Error::InvalidParameter(format!("|u| at the normalization point exceeds {BLOW_UP_CAP}")));
    }
    let p = *params;
    let f = move |y: &[f64; 2]| [y[1], p.rhs(y[0])];
    let n = grid.n();
    let mut u = vec![f64::NAN; n];
    let mut du = vec![f64::NAN; n];
    let mut blow = BlowUp { left: None, right: None };
    for dir in [Dir::Left, Dir::Right] {
        let mut hit = false;
        let visited = march(grid, x_start, y0, dir, |y, dx| {
            let next = rk4(&f, y, dx);
            if next[0].abs() > BLOW_UP_CAP || !next[0].is_finite() || !next[1].is_finite() {
                hit = true;
                None
            } else {
                Some(next)
            }
        });
        let last = visited.last().map(|(i, _)| grid.x(*i));
        for (i, y) in visited {
            u[i] = y[0];
            du[i] = y[1];
        }
        if hit {
            match dir {
                Dir::Left => blow.left = last,
                Dir::Right => blow.right = last,
            }
        }
    }
    let lo = u.iter().position(|v| v.is_finite()).unwrap_or(0);
    let hi = u.iter().rposition(|v| v.is_finite()).unwrap_or(0);
    if hi < lo + 2 {
        return Err(Error::InvalidGrid("solution blows up within two steps of the normalization point".into()));
    }
    let sub = Grid::new(grid.x(lo), grid.x(hi), hi - lo + 1)?;
    let profile = Profile::new(sub)
        .with("u", u[lo..=hi].to_vec())?
        .with("du", du[lo..=hi].to_vec())?;
    let blow_up = (blow.left.is_some() || blow.right.is_some()).then_some(blow);
    Ok(GeneralSolution { profile, blow_up })
}

/// `max - min` of `(u')^2/2 - λ(e^u - εu)` over a profile carrying `u`, `du`.
pub fn first_integral_drift(profile: &Profile, params: &GeneralLiouvilleParams) -> Result<f64> {
    let u = profile.field("u")?;
    let du = profile.field("du")?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (a, b) in u.iter().zip(du) {
        let e = params.first_integral(*a, *b);
        lo = lo.min(e);
        hi = hi.max(e);
    }
    Ok(hi - lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiCheck {
    /// `max - min` of `u' + λεx - λg` over interior points.
    pub deviation: f64,
    /// Points skipped because `e^u` underflows.
    pub excluded: usize,
}

/// With `f = e^u` and `g(x) = ∫_{x_min}^x f`, the combination
/// `f'/f + λεx - λg` is constant along any solution.
pub fn riccati_first_integral_check(grid: &Grid, u: &[f64], params: &GeneralLiouvilleParams) -> Result<RiccatiCheck> {
    if u.len() != grid.n() {
        return Err(Error::LengthMismatch { field: "u".into(), len: u.len(), n: grid.n() });
    }
    let f: Vec<f64> = u.iter().map(|v| if v.is_finite() { v.exp() } else { 0.0 }).collect();
    let g = cumulative_trapezoid(grid, &f);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut excluded = 0;
    for i in 1..grid.n() - 1 {
        let usable = (i - 1..=i + 1).all(|k| u[k].is_finite()) && f[i] >= f64::MIN_POSITIVE;
        if !usable {
            excluded += 1;
            continue;
        }
        let q = deriv1(grid, u, i) + params.lambda * params.epsilon * grid.x(i) - params.lambda * g[i];
        lo = lo.min(q);
        hi = hi.max(q);
    }
    if lo > hi {
        return Err(Error::InvalidGrid("every interior point was excluded".into()));
    }
    Ok(RiccatiCheck { deviation: hi - lo, excluded })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallTailCheck {
    pub side: String,
    /// `quadratic` (coefficient of `x^2` in `u`) or `rate` (slope of `ln(-u)`).
    pub quantity: String,
    pub window: (f64, f64),
    pub fitted: f64,
    pub expected: f64,
    pub rel_error: f64,
    pub pass: bool,
}

/// Relative tolerance on fitted tail coefficients.
pub const TAIL_TOLERANCE: f64 = 0.02;

fn tail_check(side: &str, quantity: &str, window: (f64, f64), fitted: f64, expected: f64) -> WallTailCheck {
    let rel_error = (fitted / expected - 1.0).abs();
    WallTailCheck {
        side: side.into(),
        quantity: quantity.into(),
        window,
        fitted,
        expected,
        rel_error,
        pass: rel_error <= TAIL_TOLERANCE,
    }
}

/// Magnetic tails are fitted with `c0 + c1 x + c2 x^2` against `c2 = -λ/2`
/// over the outer half of each side; the Higgs tail fits `ln(-u)` linearly
/// where `1e-10 <= -u <= 1e-3` against the rate `sqrt(λ)`.
pub fn wall_tail_report(solution: &WallSolution, lambda: f64, bc: &WallBc) -> Result<Vec<WallTailCheck>> {
    let g = solution.profile.grid();
    let u = solution.profile.field("u")?;
    let quad = |side: &str, window: (f64, f64)| -> Result<WallTailCheck> {
        let fit = fit_tail(g, u, window, TailModel::LinearPlusQuadratic)?;
        Ok(tail_check(side, "quadratic", window, fit.quadratic(), -lambda / 2.0))
    };
    let mut out = Vec::new();
    match *bc {
        WallBc::HiggsToMagnetic { x_ref, .. } => {
            let r = g.x_max() - x_ref;
            out.push(quad("right", (x_ref + 0.5 * r, x_ref + 0.95 * r))?);
            let inside: Vec<usize> = (0..g.n()).filter(|&i| (1e-10..=1e-3).contains(&-u[i])).collect();
            let (Some(&a), Some(&b)) = (inside.first(), inside.last()) else {
                return Err(Error::DegenerateWindow("no points with 1e-10 <= -u <= 1e-3".into()));
            };
            let window = (g.x(a), g.x(b));
            let ln_u: Vec<f64> = u.iter().map(|v| if *v < 0.0 { (-v).ln() } else { f64::NAN }).collect();
            let fit = fit_tail(g, &ln_u, window, TailModel::Linear)?;
            out.push(tail_check("left", "rate", window, fit.slope(), lambda.sqrt()));
        }
        WallBc::MagneticToMagnetic { x0, .. } => {
            let (l, r) = (x0 - g.x_min(), g.x_max() - x0);
            out.push(quad("left", (x0 - 0.95 * l, x0 - 0.5 * l))?);
            out.push(quad("right", (x0 + 0.5 * r, x0 + 0.95 * r))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_integral_examples() {
        assert_eq!(first_integral_htm(0.0, 2.0).unwrap(), 0.0);
        let v = first_integral_htm(-1.0, 2.0).unwrap();
        assert_abs_diff_eq!(v, -2.0 * (-1f64).exp().sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, -1.2130613194252668, epsilon = 1e-14);
        assert!(first_integral_htm(0.1, 2.0).is_err());
        // dominant-term limit
        let big = first_integral_htm(-1e6, 2.0).unwrap();
        assert_abs_diff_eq!(big / (-2.0 * 1e3), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn series_matches_direct_form() {
        for &u in &[-0.49f64, -0.3, -0.1, -1e-3, 0.2, 0.45] {
            let direct = u.exp_m1() - u;
            assert_abs_diff_eq!(expm1_minus_x(u), direct, epsilon = 1e-16);
        }
        assert_abs_diff_eq!(expm1_minus_x(-1e-8) / 5e-17, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn w_condensate_map() {
        let p = GeneralLiouvilleParams::w_condensate(1.0, 1.0).unwrap();
        assert_eq!(p.lambda, -4.0);
        assert_eq!(p.epsilon, -0.5);
        assert_abs_diff_eq!(p.rhs(0.3), -4.0 * 0.3f64.exp() - 2.0, epsilon = 1e-14);
    }

    #[test]
    fn magnetic_wall_degenerate_case() {
        let g = Grid::symmetric(5.0, 101).unwrap();
        let s = solve_magnetic_to_magnetic(2.0, 0.0, 0.0, &g).unwrap();
        assert!(s.profile.field("u").unwrap().iter().all(|&v| v == 0.0));
        assert!(solve_magnetic_to_magnetic(2.0, 0.0, 0.5, &g).is_err());
    }

    #[test]
    fn riccati_constant_solution() {
        let g = Grid::new(-3.0, 4.0, 701).unwrap();
        let p = GeneralLiouvilleParams::new(1.5, 0.5).unwrap();
        let u = vec![0.5f64.ln(); g.n()];
        let r = riccati_first_integral_check(&g, &u, &p).unwrap();
        assert!(r.deviation < 1e-12, "{}", r.deviation);
        assert_eq!(r.excluded, 0);
    }
}
