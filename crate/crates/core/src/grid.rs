//! Uniform grids, sampled profiles, quadrature, finite differences and
//! least-squares tail fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `x_i = x_min + i h`, `i = 0..n`.
///
/// Nodes are computed as a convex combination of the end points so that a
/// grid symmetric about zero is mirror-exact: `x(n-1-i) == -x(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need n >= 3, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self { x_min, x_max, n })
    }

    /// `[-half_width, half_width]` with `n` points.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        let m = (self.n - 1) as f64;
        let i = i as f64;
        if i == m {
            return self.x_max;
        }
        ((m - i) * self.x_min + i * self.x_max) / m
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Index of the node within `1e-9 h` of `x`, if any.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let t = (x - self.x_min) / self.h();
        let i = t.round();
        if i < 0.0 || i > (self.n - 1) as f64 {
            return None;
        }
        let i = i as usize;
        if (self.x(i) - x).abs() <= 1e-9 * self.h() {
            Some(i)
        } else {
            None
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }
}

/// Named sampled fields on a common grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    grid: Grid,
    fields: Vec<(String, Vec<f64>)>,
}

impl Profile {
    pub fn new(grid: Grid) -> Self {
        Self { grid, fields: Vec::new() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Adds or replaces a field. Rejects wrong lengths and non-finite values.
    pub fn insert(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.grid.n() {
            return Err(Error::LengthMismatch {
                field: name.to_string(),
                len: values.len(),
                n: self.grid.n(),
            });
        }
        check_finite(&values)?;
        if let Some(slot) = self.fields.iter_mut().find(|(k, _)| k == name) {
            slot.1 = values;
        } else {
            self.fields.push((name.to_string(), values));
        }
        Ok(())
    }

    pub fn with(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.insert(name, values)?;
        Ok(self)
    }

    pub fn field(&self, name: &str) -> Result<&[f64]> {
        self.fields
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::MissingField(name.to_string()))
    }

    pub fn has(&self, name: &str) -> bool {
        self.fields.iter().any(|(k, _)| k == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.fields.iter().map(|(k, _)| k.as_str()).collect()
    }

    pub fn fields(&self) -> &[(String, Vec<f64>)] {
        &self.fields
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Trapezoid,
    Simpson,
}

/// Composite quadrature of grid samples.
pub fn integrate(grid: &Grid, values: &[f64], rule: Rule) -> Result<f64> {
    if values.len() != grid.n() {
        return Err(Error::LengthMismatch {
            field: "integrand".into(),
            len: values.len(),
            n: grid.n(),
        });
    }
    check_finite(values)?;
    let h = grid.h();
    let n = grid.n();
    match rule {
        Rule::Trapezoid => {
            let inner = sum_compensated(values[1..n - 1].iter().copied());
            Ok(h * (inner + 0.5 * (values[0] + values[n - 1])))
        }
        Rule::Simpson => {
            if n % 2 == 0 {
                return Err(Error::SimpsonEven(n));
            }
            let odd = sum_compensated(values[1..n - 1].iter().step_by(2).copied());
            let even = sum_compensated(values[2..n - 1].iter().step_by(2).copied());
            Ok(h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even))
        }
    }
}

/// Composite trapezoid weights: `h` inside, `h/2` at the ends.
pub fn trapezoid_weights(grid: &Grid) -> Vec<f64> {
    let h = grid.h();
    let mut w = vec![h; grid.n()];
    w[0] = 0.5 * h;
    w[grid.n() - 1] = 0.5 * h;
    w
}

/// Running trapezoid integral from `x_min`; the first entry is 0.
pub fn cumulative_trapezoid(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let h = grid.h();
    let mut out = Vec::with_capacity(values.len());
    let (mut s, mut c) = (0.0, 0.0);
    out.push(0.0);
    for k in 1..values.len() {
        let t = 0.5 * h * (values[k - 1] + values[k]);
        let y = t - c;
        let z = s + y;
        c = (z - s) - y;
        s = z;
        out.push(s);
    }
    out
}

/// Neumaier-compensated sum.
pub fn sum_compensated<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in it {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// `sum_i a_i b_i` with compensation.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    sum_compensated(a.iter().zip(b).map(|(x, y)| x * y))
}

/// First derivative: central inside, second-order one-sided at the ends.
pub fn deriv1(grid: &Grid, f: &[f64], i: usize) -> f64 {
    let h = grid.h();
    let n = f.len();
    if i == 0 {
        (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
    } else {
        (f[i + 1] - f[i - 1]) / (2.0 * h)
    }
}

/// Second derivative: central inside, second-order one-sided at the ends
/// (first-order when only three points exist).
pub fn deriv2(grid: &Grid, f: &[f64], i: usize) -> f64 {
    let h2 = grid.h() * grid.h();
    let n = f.len();
    if n < 4 && (i == 0 || i == n - 1) {
        return (f[0] - 2.0 * f[1] + f[2]) / h2;
    }
    if i == 0 {
        (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2
    } else if i == n - 1 {
        (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2
    } else {
        (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2
    }
}

pub fn deriv1_all(grid: &Grid, f: &[f64]) -> Vec<f64> {
    (0..f.len()).map(|i| deriv1(grid, f, i)).collect()
}

pub fn deriv2_all(grid: &Grid, f: &[f64]) -> Vec<f64> {
    (0..f.len()).map(|i| deriv2(grid, f, i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailModel {
    Linear,
    LinearPlusQuadratic,
}

/// Least-squares fit `c0 + c1 x (+ c2 x^2)` over a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub window: (f64, f64),
    pub model: TailModel,
    /// Ascending powers of `x`.
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
    pub points: usize,
}

impl TailFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn slope(&self) -> f64 {
        self.coefficients[1]
    }

    pub fn quadratic(&self) -> f64 {
        self.coefficients.get(2).copied().unwrap_or(0.0)
    }
}

pub fn fit_tail(grid: &Grid, f: &[f64], window: (f64, f64), model: TailModel) -> Result<TailFit> {
    let (a, b) = window;
    let slack = 1e-9 * grid.h();
    if !(a < b) || a < grid.x_min() - slack || b > grid.x_max() + slack {
        return Err(Error::DegenerateWindow(format!(
            "[{a}, {b}] must be a proper sub-interval of [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    let idx: Vec<usize> = (0..grid.n())
        .filter(|&i| {
            let x = grid.x(i);
            x >= a - slack && x <= b + slack
        })
        .collect();
    if idx.len() < 10 {
        return Err(Error::DegenerateWindow(format!(
            "window [{a}, {b}] holds {} points, need 10",
            idx.len()
        )));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| grid.x(i)).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| f[i]).collect();
    check_finite(&ys)?;
    let k = match model {
        TailModel::Linear => 2,
        TailModel::LinearPlusQuadratic => 3,
    };
    // Fit in t = (x - c)/s for conditioning, then expand back to powers of x.
    let c = 0.5 * (a + b);
    let s = 0.5 * (b - a);
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|p| xs.iter().map(|x| ((x - c) / s).powi(p as i32)).collect())
        .collect();
    let t_coef = least_squares(&cols, &ys)?;
    let mut coefficients = vec![0.0; k];
    // sum_p a_p ((x - c)/s)^p expanded by the binomial theorem.
    for (p, ap) in t_coef.iter().enumerate() {
        let scale = ap / s.powi(p as i32);
        for q in 0..=p {
            coefficients[q] += scale * binomial(p, q) * (-c).powi((p - q) as i32);
        }
    }
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let t = (x - c) / s;
            let fit: f64 = t_coef.iter().enumerate().map(|(p, ap)| ap * t.powi(p as i32)).sum();
            (y - fit) * (y - fit)
        })
        .sum();
    Ok(TailFit {
        window,
        model,
        coefficients,
        residual_rms: (ss / xs.len() as f64).sqrt(),
        points: xs.len(),
    })
}

fn binomial(p: usize, q: usize) -> f64 {
    (0..q).fold(1.0, |acc, j| acc * (p - j) as f64 / (j + 1) as f64)
}

/// Least squares via modified Gram-Schmidt on the column set.
fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let k = cols.len();
    let mut q: Vec<Vec<f64>> = cols.to_vec();
    let mut r = vec![vec![0.0; k]; k];
    for j in 0..k {
        for i in 0..j {
            let d = dot(&q[i], &q[j]);
            r[i][j] = d;
            let qi = q[i].clone();
            for (a, b) in q[j].iter_mut().zip(&qi) {
                *a -= d * b;
            }
        }
        let norm = dot(&q[j], &q[j]).sqrt();
        if norm < 1e-12 * (y.len() as f64).sqrt() {
            return Err(Error::DegenerateWindow("rank-deficient design".into()));
        }
        r[j][j] = norm;
        for a in q[j].iter_mut() {
            *a /= norm;
        }
    }
    let qty: Vec<f64> = q.iter().map(|qi| dot(qi, y)).collect();
    let mut coef = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = qty[i];
        for j in i + 1..k {
            s -= r[i][j] * coef[j];
        }
        coef[i] = s / r[i][i];
    }
    Ok(coef)
}
