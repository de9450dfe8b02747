//! The weighted space: measure `dμ = h0 dx` with `h0 ~ e^{-β|x|}`, mean
//! splitting, discrete norms, and the background functions `u0_i`, `ω`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dot, sum_compensated, trapezoid_weights, Grid};

/// Interior replacement `s(x)` of `|x|` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightBlend {
    /// `(x^2 + 1)/2`: value and slope match at ±1.
    #[default]
    Quadratic,
    /// `(3 + 6x^2 - x^4)/8`: value, slope and curvature match at ±1.
    Quartic,
}

impl WeightBlend {
    pub fn smoothed_abs(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return x.abs();
        }
        let x2 = x * x;
        match self {
            Self::Quadratic => 0.5 * (x2 + 1.0),
            Self::Quartic => (3.0 + 6.0 * x2 - x2 * x2) / 8.0,
        }
    }
}

impl std::str::FromStr for WeightBlend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(Self::Quadratic),
            "quartic" => Ok(Self::Quartic),
            _ => Err(Error::InvalidParameter(format!("unknown blend `{s}` (quadratic|quartic)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMeasure {
    pub beta: f64,
    pub blend: WeightBlend,
    pub grid: Grid,
    pub h0: Vec<f64>,
    /// Trapezoid weights times `h0`.
    pub weights: Vec<f64>,
    pub mu_total: f64,
}

pub fn build_measure(grid: &Grid, beta: f64) -> Result<WeightedMeasure> {
    build_measure_with(grid, beta, WeightBlend::default())
}

pub fn build_measure_with(grid: &Grid, beta: f64, blend: WeightBlend) -> Result<WeightedMeasure> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("need beta > 0, got {beta}")));
    }
    let h0 = grid.map(|x| (-beta * blend.smoothed_abs(x)).exp());
    let weights: Vec<f64> = trapezoid_weights(grid).iter().zip(&h0).map(|(w, h)| w * h).collect();
    let mu_total = sum_compensated(weights.iter().copied());
    Ok(WeightedMeasure { beta, blend, grid: *grid, h0, weights, mu_total })
}

/// Weighted mean and mean-zero remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSplit {
    pub mean: f64,
    pub dotted: Vec<f64>,
}

impl WeightedMeasure {
    pub fn mean(&self, u: &[f64]) -> f64 {
        dot(&self.weights, u) / self.mu_total
    }

    pub fn split(&self, u: &[f64]) -> MeanSplit {
        let mean = self.mean(u);
        MeanSplit { mean, dotted: u.iter().map(|v| v - mean).collect() }
    }

    pub fn project_mean_zero(&self, u: &mut [f64]) {
        let m = self.mean(u);
        for v in u.iter_mut() {
            *v -= m;
        }
    }

    /// Errors unless `|mean| <= 1e-10 (1 + max|u|)`.
    pub fn check_mean_zero(&self, u: &[f64]) -> Result<()> {
        let m = self.mean(u);
        let scale = 1.0 + u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m.abs() > 1e-10 * scale {
            return Err(Error::NotMeanZero(m));
        }
        Ok(())
    }

    /// `∫ u^2 dμ`.
    pub fn l2_sq(&self, u: &[f64]) -> f64 {
        sum_compensated(self.weights.iter().zip(u).map(|(w, v)| w * v * v))
    }

    /// `‖u'‖^2_{L^2(dx)} + ‖u‖^2_{L^2(dμ)}`.
    pub fn h_norm_sq(&self, u: &[f64]) -> f64 {
        dirichlet_energy(&self.grid, u) + self.l2_sq(u)
    }
}

/// `∫ (u')^2 dx` with forward differences on cells.
pub fn dirichlet_energy(grid: &Grid, u: &[f64]) -> f64 {
    let h = grid.h();
    sum_compensated(u.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0]))) / h
}

/// `‖v‖^2_{L^2(dμ)} / ‖v'‖^2_{L^2(dx)}` for mean-zero, nonconstant `v`.
pub fn poincare_ratio(v: &[f64], m: &WeightedMeasure) -> Result<f64> {
    m.check_mean_zero(v)?;
    let d = dirichlet_energy(&m.grid, v);
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if d <= 1e-28 * (1.0 + scale * scale) {
        return Err(Error::ConstantInput);
    }
    Ok(m.l2_sq(v) / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmSample {
    /// `∫ e^{a|v|} dμ`.
    pub lhs: f64,
    /// `exp(a^2/(4b) ∫ (v')^2 dx)`.
    pub exp_factor: f64,
    /// `lhs / exp_factor`, an empirical sample of `C(b)`.
    pub ratio: f64,
}

pub fn trudinger_moser_check(v: &[f64], a: f64, b: f64, m: &WeightedMeasure) -> Result<TmSample> {
    if !(b > 0.0 && b < m.beta) {
        return Err(Error::InvalidParameter(format!("need 0 < b < beta = {}, got b = {b}", m.beta)));
    }
    m.check_mean_zero(v)?;
    let lhs = sum_compensated(m.weights.iter().zip(v).map(|(w, x)| w * (a * x.abs()).exp()));
    let exponent = a * a / (4.0 * b) * dirichlet_energy(&m.grid, v);
    let exp_factor = exponent.exp();
    Ok(TmSample { lhs, exp_factor, ratio: (lhs.ln() - exponent).exp() })
}

/// Interior shape of the backgrounds on `[-1, 1]`: `m S(x) + d x` where `S`
/// is an even polynomial agreeing with `|x|` at ±1 up to some derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundShape {
    /// Quartic `(3 + 6x² − x⁴)/8`, C² at ±1.
    C2,
    /// Octic `(35 + 140x² − 70x⁴ + 28x⁶ − 5x⁸)/128`, C⁴ at ±1, so
    /// three-point difference stencils stay second order across the joins.
    #[default]
    C4,
}

impl BackgroundShape {
    fn s(&self, x: f64) -> f64 {
        let x2 = x * x;
        match self {
            Self::C2 => (3.0 + 6.0 * x2 - x2 * x2) / 8.0,
            Self::C4 => (35.0 + x2 * (140.0 + x2 * (-70.0 + x2 * (28.0 - 5.0 * x2)))) / 128.0,
        }
    }

    fn ds(&self, x: f64) -> f64 {
        let x2 = x * x;
        match self {
            Self::C2 => 0.5 * x * (3.0 - x2),
            Self::C4 => x * (35.0 + x2 * (-35.0 + x2 * (21.0 - 5.0 * x2))) / 16.0,
        }
    }

    fn d2s(&self, x: f64) -> f64 {
        let y = 1.0 - x * x;
        match self {
            Self::C2 => 1.5 * y,
            Self::C4 => 35.0 / 16.0 * y * y * y,
        }
    }
}

impl std::str::FromStr for BackgroundShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c2" => Ok(Self::C2),
            "c4" => Ok(Self::C4),
            _ => Err(Error::InvalidParameter(format!("unknown background shape `{s}` (c2|c4)"))),
        }
    }
}

/// Background with `u0 = αx` for `x >= 1` and `-βx` for `x <= -1`; inside,
/// `m S(x) + d x` with `m = (α+β)/2`, `d = (α-β)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub alpha: f64,
    pub beta: f64,
    pub shape: BackgroundShape,
}

impl Background {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, shape: BackgroundShape::default() }
    }

    fn md(&self) -> (f64, f64) {
        (0.5 * (self.alpha + self.beta), 0.5 * (self.alpha - self.beta))
    }

    pub fn value(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return self.alpha * x;
        }
        if x <= -1.0 {
            return -self.beta * x;
        }
        let (m, d) = self.md();
        m * self.shape.s(x) + d * x
    }

    pub fn slope(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return self.alpha;
        }
        if x <= -1.0 {
            return -self.beta;
        }
        let (m, d) = self.md();
        m * self.shape.ds(x) + d
    }

    pub fn curvature(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        self.md().0 * self.shape.d2s(x)
    }

    /// Exact integrals of `u0''` over the dual cells `[x_{j-1/2}, x_{j+1/2}]`
    /// (end cells are half cells). They sum to `α + β` exactly whenever the
    /// grid reaches past `[-1, 1]`.
    pub fn dual_cell_sources(&self, grid: &Grid) -> Vec<f64> {
        let n = grid.n();
        let h = grid.h();
        let mid: Vec<f64> = (0..n - 1).map(|j| self.slope(grid.x(j) + 0.5 * h)).collect();
        let mut s = vec![0.0; n];
        s[0] = mid[0] - self.slope(grid.x(0));
        s[n - 1] = self.slope(grid.x(n - 1)) - mid[n - 2];
        for j in 1..n - 1 {
            s[j] = mid[j] - mid[j - 1];
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundPair {
    pub first: Background,
    pub second: Background,
    pub lambda: f64,
    pub u01: Vec<f64>,
    pub u02: Vec<f64>,
    /// `λ x^2`.
    pub omega: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

pub fn build_backgrounds(grid: &Grid, alpha1: f64, alpha2: f64, beta1: f64, beta2: f64, lambda: f64) -> Result<BackgroundPair> {
    build_backgrounds_with(grid, alpha1, alpha2, beta1, beta2, lambda, BackgroundShape::default())
}

pub fn build_backgrounds_with(
    grid: &Grid,
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    lambda: f64,
    shape: BackgroundShape,
) -> Result<BackgroundPair> {
    if grid.x_min() > -1.0 - grid.h() || grid.x_max() < 1.0 + grid.h() {
        return Err(Error::InvalidGrid("grid must extend past [-1, 1]".into()));
    }
    let inside = (0..grid.n()).filter(|&i| grid.x(i).abs() <= 1.0).count();
    if inside < 20 {
        return Err(Error::InvalidGrid(format!("only {inside} points in [-1, 1], need 20")));
    }
    for v in [alpha1, alpha2, beta1, beta2, lambda] {
        if !v.is_finite() {
            return Err(Error::InvalidParameter("non-finite slope or lambda".into()));
        }
    }
    let first = Background { alpha: alpha1, beta: beta1, shape };
    let second = Background { alpha: alpha2, beta: beta2, shape };
    Ok(BackgroundPair {
        first,
        second,
        lambda,
        u01: grid.map(|x| first.value(x)),
        u02: grid.map(|x| second.value(x)),
        omega: grid.map(|x| lambda * x * x),
        s1: first.dual_cell_sources(grid),
        s2: second.dual_cell_sources(grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn blends_match_abs_at_the_joins() {
        for b in [WeightBlend::Quadratic, WeightBlend::Quartic] {
            assert_eq!(b.smoothed_abs(1.0), 1.0);
            let e = 1e-7;
            let slope = (b.smoothed_abs(1.0) - b.smoothed_abs(1.0 - e)) / e;
            assert_abs_diff_eq!(slope, 1.0, epsilon = 1e-6);
        }
        assert_eq!(WeightBlend::Quadratic.smoothed_abs(0.0), 0.5);
    }

    #[test]
    fn background_is_smooth_at_the_joins() {
        for shape in [BackgroundShape::C2, BackgroundShape::C4] {
            let bg = Background { alpha: 1.3, beta: -0.4, shape };
            for x0 in [-1.0, 1.0] {
                let e = 1e-6;
                assert_abs_diff_eq!(bg.value(x0 - e), bg.value(x0 + e), epsilon = 1e-5);
                assert_abs_diff_eq!(bg.slope(x0 - e), bg.slope(x0 + e), epsilon = 1e-5);
                assert_abs_diff_eq!(bg.curvature(x0 - e), bg.curvature(x0 + e), epsilon = 1e-5);
            }
            // slope is the integral of the curvature
            let n = 2000;
            let mut acc = bg.slope(-1.0);
            for k in 0..n {
                let x = -1.0 + (k as f64 + 0.5) * 2.0 / n as f64;
                acc += bg.curvature(x) * 2.0 / n as f64;
            }
            assert_abs_diff_eq!(acc, bg.slope(1.0), epsilon = 1e-6);
            let h = 1e-4;
            for x in [-0.7, 0.0, 0.3, 0.95] {
                assert_abs_diff_eq!((bg.value(x + h) - bg.value(x - h)) / (2.0 * h), bg.slope(x), epsilon = 1e-7);
            }
        }
        let bg = Background::new(1.3, -0.4);
        assert_eq!(bg.value(2.0), 2.6);
        assert_eq!(bg.value(-2.0), -0.8);
    }
}
