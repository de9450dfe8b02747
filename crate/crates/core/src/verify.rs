//! Residual oracles: first-order solutions are substituted into the
//! second-order equations with central differences, and variational
//! gradients are compared against finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abelian_wall::{solve_general, solve_higgs_to_magnetic, AbelianHiggsParams, GeneralLiouvilleParams, Normalization};
use crate::error::{Error, Result};
use crate::ew_minimizer::{reconstruct_fields, EwAsymptotics, EwParams, EwProblem, EwResult};
use crate::grid::{deriv1_all, deriv2_all, sum_compensated, Grid, Profile};
use crate::liouville_cs::SolutionFamily;
use crate::u2_minimizer::{U2Asymptotics, U2Params, U2Problem, U2Result};
use crate::wspace::build_measure;

/// Points where the field entering a log-variable reconstruction is below
/// this value are excluded.
pub const EXCLUSION_THRESHOLD: f64 = 1e-12;
/// Residuals below this are treated as exact (rounding level).
pub const ROUNDING_FLOOR: f64 = 1e-10;
/// Nodes skipped at each end (nested one-sided stencils).
const MARGIN: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub label: String,
    /// Sup-norm over checked points.
    pub residual: f64,
    pub h: f64,
    pub excluded: usize,
    pub checked: usize,
    /// `residual / h²`.
    pub constant: f64,
    pub threshold: Option<f64>,
    pub pass: bool,
}

impl ResidualReport {
    fn new(label: impl Into<String>, residual: f64, h: f64, excluded: usize, checked: usize) -> Self {
        Self { label: label.into(), residual, h, excluded, checked, constant: residual / (h * h), threshold: None, pass: residual.is_finite() }
    }

    /// Pass/fail against a fixed absolute bound.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self.pass = self.residual <= threshold;
        self
    }
}

fn sup_over(n: usize, keep: impl Fn(usize) -> bool, r: impl Fn(usize) -> f64) -> (f64, usize, usize) {
    let (mut sup, mut excluded, mut checked) = (0.0f64, 0usize, 0usize);
    for i in MARGIN..n.saturating_sub(MARGIN) {
        if keep(i) {
            sup = sup.max(r(i).abs());
            checked += 1;
        } else {
            excluded += 1;
        }
    }
    if checked == 0 {
        sup = f64::NAN;
    }
    (sup, excluded, checked)
}

fn derivative_of_u(profile: &Profile) -> Result<Vec<f64>> {
    if profile.has("du") {
        Ok(profile.field("du")?.to_vec())
    } else {
        Ok(deriv1_all(profile.grid(), profile.field("u")?))
    }
}

/// `φ'' − e²A²φ = e²(φ²−ξ)φ` and `A'' = 2e²φ²A` with `φ = √ξ e^{u/2}`, `A = −u'/(2e)`.
pub fn check_ah_second_order(profile: &Profile, params: &AbelianHiggsParams) -> Result<Vec<ResidualReport>> {
    let g = profile.grid();
    let u = profile.field("u")?;
    let du = derivative_of_u(profile)?;
    let (e, xi) = (params.e, params.xi);
    let phi: Vec<f64> = u.iter().map(|v| xi.sqrt() * (0.5 * v).exp()).collect();
    let a: Vec<f64> = du.iter().map(|d| -d / (2.0 * e)).collect();
    let (phi2, a2) = (deriv2_all(g, &phi), deriv2_all(g, &a));
    let keep = |i: usize| phi[i] >= EXCLUSION_THRESHOLD;
    let e2 = e * e;
    let (r1, x1, c1) = sup_over(g.n(), keep, |i| phi2[i] - e2 * a[i] * a[i] * phi[i] - e2 * (phi[i] * phi[i] - xi) * phi[i]);
    let (r2, x2, c2) = sup_over(g.n(), keep, |i| a2[i] - 2.0 * e2 * phi[i] * phi[i] * a[i]);
    Ok(vec![
        ResidualReport::new("ah: phi'' - e^2 A^2 phi = e^2 (phi^2 - xi) phi", r1, g.h(), x1, c1),
        ResidualReport::new("ah: A'' = 2 e^2 phi^2 A", r2, g.h(), x2, c2),
    ])
}

/// `W'' − e²P²W = 2m²W − 3eP'W + 4e²W³` and `P'' = 2e²W²P + 6eWW'` with
/// `W = e^{u/2}`, `P = −u'/(2e)`.
pub fn check_w_second_order(profile: &Profile, e: f64, m_w: f64) -> Result<Vec<ResidualReport>> {
    let g = profile.grid();
    let u = profile.field("u")?;
    let du = derivative_of_u(profile)?;
    let w: Vec<f64> = u.iter().map(|v| (0.5 * v).exp()).collect();
    let p: Vec<f64> = du.iter().map(|d| -d / (2.0 * e)).collect();
    let (dw, w2) = (deriv1_all(g, &w), deriv2_all(g, &w));
    let (dp, p2) = (deriv1_all(g, &p), deriv2_all(g, &p));
    let keep = |i: usize| w[i] >= EXCLUSION_THRESHOLD;
    let (e2, m2) = (e * e, m_w * m_w);
    let (r1, x1, c1) = sup_over(g.n(), keep, |i| {
        w2[i] - e2 * p[i] * p[i] * w[i] - (2.0 * m2 * w[i] - 3.0 * e * dp[i] * w[i] + 4.0 * e2 * w[i].powi(3))
    });
    let (r2, x2, c2) = sup_over(g.n(), keep, |i| p2[i] - 2.0 * e2 * w[i] * w[i] * p[i] - 6.0 * e * w[i] * dw[i]);
    Ok(vec![
        ResidualReport::new("w: W'' - e^2 P^2 W = 2 m^2 W - 3 e P' W + 4 e^2 W^3", r1, g.h(), x1, c1),
        ResidualReport::new("w: P'' = 2 e^2 W^2 P + 6 e W W'", r2, g.h(), x2, c2),
    ])
}

/// Relativistic system with `A = −φ'/φ`, `A₀ = κA'/(2φ²) = (1−φ²)/κ`.
pub fn check_cs_relativistic(family: &SolutionFamily, grid: &Grid) -> Result<Vec<ResidualReport>> {
    let kappa = match family {
        SolutionFamily::RelTopological { kappa, .. } | SolutionFamily::RelLump { kappa, .. } => *kappa,
        _ => return Err(Error::InvalidParameter("relativistic check needs a topological wall or lump".into())),
    };
    let phi = grid.map(|x| family.phi(x));
    let a = grid.map(|x| -0.5 * family.du(x));
    let a0: Vec<f64> = phi.iter().map(|p| (1.0 - p * p) / kappa).collect();
    let (phi2, da, da0) = (deriv2_all(grid, &phi), deriv1_all(grid, &a), deriv1_all(grid, &a0));
    let keep = |i: usize| phi[i] >= EXCLUSION_THRESHOLD;
    let k2 = kappa * kappa;
    let (r1, x1, c1) = sup_over(grid.n(), keep, |i| {
        let p = phi[i];
        phi2[i] - a[i] * a[i] * p + a0[i] * a0[i] * p - (p * p - 1.0) * (3.0 * p * p - 1.0) * p / k2
    });
    let (r2, x2, c2) = sup_over(grid.n(), keep, |i| kappa * da0[i] - 2.0 * a[i] * phi[i] * phi[i]);
    let (r3, x3, c3) = sup_over(grid.n(), keep, |i| kappa * da[i] - 2.0 * a0[i] * phi[i] * phi[i]);
    let h = grid.h();
    Ok(vec![
        ResidualReport::new("cs: phi'' - A^2 phi + A0^2 phi = (phi^2-1)(3phi^2-1)phi/kappa^2", r1, h, x1, c1),
        ResidualReport::new("cs: kappa A0' = 2 A phi^2", r2, h, x2, c2),
        ResidualReport::new("cs: kappa A' = 2 A0 phi^2", r3, h, x3, c3),
    ])
}

/// Nonrelativistic system at `g = 1/(mκ)` with `ψ = e^{u/2}`, `A = −ψ'/ψ`,
/// `A₀ = −ψ²/(2mκ)`.
pub fn check_jp_nonrelativistic(family: &SolutionFamily, m: f64, grid: &Grid) -> Result<Vec<ResidualReport>> {
    let SolutionFamily::JpPosKappa { kappa, .. } = *family else {
        return Err(Error::InvalidParameter("nonrelativistic check needs the kappa > 0 Jackiw-Pi family".into()));
    };
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("need m > 0, got {m}")));
    }
    let gc = 1.0 / (m * kappa);
    let psi = grid.map(|x| (0.5 * family.u(x)).exp());
    let a = grid.map(|x| -0.5 * family.du(x));
    let a0: Vec<f64> = psi.iter().map(|p| -p * p / (2.0 * m * kappa)).collect();
    let (psi2, da, da0) = (deriv2_all(grid, &psi), deriv1_all(grid, &a), deriv1_all(grid, &a0));
    let keep = |i: usize| psi[i] >= EXCLUSION_THRESHOLD;
    let (r1, x1, c1) = sup_over(grid.n(), keep, |i| {
        let p = psi[i];
        a0[i] * p + psi2[i] / (2.0 * m) - a[i] * a[i] * p / (2.0 * m) + gc * p * p * p
    });
    let (r2, x2, c2) = sup_over(grid.n(), keep, |i| da[i] - psi[i] * psi[i] / kappa);
    let (r3, x3, c3) = sup_over(grid.n(), keep, |i| da0[i] - psi[i] * psi[i] * a[i] / (m * kappa));
    let h = grid.h();
    Ok(vec![
        ResidualReport::new("jp: A0 psi = -psi''/(2m) + A^2 psi/(2m) - g psi^3", r1, h, x1, c1),
        ResidualReport::new("jp: A' = psi^2/kappa", r2, h, x2, c2),
        ResidualReport::new("jp: A0' = psi^2 A/(m kappa)", r3, h, x3, c3),
    ])
}

/// `u'' − rhs(u)` for a closed-form family sampled on `grid`.
pub fn check_closed_form(family: &SolutionFamily, grid: &Grid) -> Result<ResidualReport> {
    let u = family.sample_u(grid);
    let d2 = deriv2_all(grid, &u);
    let (r, x, c) = sup_over(grid.n(), |_| true, |i| d2[i] - family.rhs(u[i]));
    let label = match family {
        SolutionFamily::JpPosKappa { .. } => "jp_exact: u'' = -(2/kappa) e^u",
        SolutionFamily::JpNegKappa { .. } => "jp_exact_negk: u'' = -(2/kappa) e^u",
        SolutionFamily::RelTopological { .. } => "rel_topwall: u'' = lambda e^u (e^u - 1)",
        SolutionFamily::RelLump { .. } => "rel_lump: u'' = lambda e^u (e^u - 1)",
    };
    Ok(ResidualReport::new(label, r, grid.h(), x, c))
}

/// `u'' = λ Γ e^u − 2λ` with `Γ = [[1+γ, 1−γ], [1−γ, 1+γ]]`.
pub fn check_u2_second_order(result: &U2Result, params: &U2Params) -> Result<Vec<ResidualReport>> {
    let g = &result.grid;
    let lambda = params.lambda();
    let gm = params.gamma;
    let (d1, d2) = (deriv2_all(g, &result.u1), deriv2_all(g, &result.u2));
    let e1: Vec<f64> = result.u1.iter().map(|v| v.exp()).collect();
    let e2: Vec<f64> = result.u2.iter().map(|v| v.exp()).collect();
    let (r1, x1, c1) = sup_over(g.n(), |_| true, |i| d1[i] - lambda * ((1.0 + gm) * e1[i] + (1.0 - gm) * e2[i]) + 2.0 * lambda);
    let (r2, x2, c2) = sup_over(g.n(), |_| true, |i| d2[i] - lambda * ((1.0 - gm) * e1[i] + (1.0 + gm) * e2[i]) + 2.0 * lambda);
    Ok(vec![
        ResidualReport::new("u2: u1'' = lambda((1+gamma)e^u1 + (1-gamma)e^u2) - 2 lambda", r1, g.h(), x1, c1),
        ResidualReport::new("u2: u2'' = lambda((1-gamma)e^u1 + (1+gamma)e^u2) - 2 lambda", r2, g.h(), x2, c2),
    ])
}

/// The two first-order equations not used in the reconstruction, and the
/// second-order pair for `ln w`, `ln φ`.
pub fn check_ew(result: &EwResult, params: &EwParams) -> Result<Vec<ResidualReport>> {
    let f = reconstruct_fields(result, params)?;
    let g = &result.grid;
    let (s, c) = params.theta.sin_cos();
    let (gg, p0) = (params.g, params.phi0);
    let w = f.field("w")?;
    let phi = f.field("phi")?;
    let (dp, dz) = (f.field("dP")?, f.field("dZ")?);
    let lw2 = deriv2_all(g, f.field("ln_w")?);
    let lp2 = deriv2_all(g, f.field("ln_phi")?);
    let keep = |i: usize| w[i] >= EXCLUSION_THRESHOLD && phi[i] >= EXCLUSION_THRESHOLD;
    let (w2, f2) = (|i: usize| w[i] * w[i], |i: usize| phi[i] * phi[i]);
    let n = g.n();
    let (r1, x1, c1) = sup_over(n, keep, |i| dp[i] - (gg * p0 * p0 / (2.0 * s) + 2.0 * gg * s * w2(i)));
    let (r2, x2, c2) = sup_over(n, keep, |i| dz[i] - (gg / (2.0 * c) * (f2(i) - p0 * p0) + 2.0 * gg * c * w2(i)));
    let (r3, x3, c3) = sup_over(n, keep, |i| lw2[i] + gg * gg * f2(i) / 2.0 + 2.0 * gg * gg * w2(i));
    let (r4, x4, c4) = sup_over(n, keep, |i| lp2[i] - gg * gg * (f2(i) - p0 * p0) / (4.0 * c * c) - gg * gg * w2(i));
    let h = g.h();
    Ok(vec![
        ResidualReport::new("ew: P' = g phi0^2/(2 sin) + 2 g sin w^2", r1, h, x1, c1),
        ResidualReport::new("ew: Z' = g/(2 cos)(phi^2 - phi0^2) + 2 g cos w^2", r2, h, x2, c2),
        ResidualReport::new("ew: (ln w)'' = -g^2 phi^2/2 - 2 g^2 w^2", r3, h, x3, c3),
        ResidualReport::new("ew: (ln phi)'' = g^2(phi^2 - phi0^2)/(4 cos^2) + g^2 w^2", r4, h, x4, c4),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub label: String,
    pub coarse: ResidualReport,
    pub fine: ResidualReport,
    /// `C` measured on the coarse grid.
    pub c_coarse: f64,
    pub c_fine: f64,
    pub pass: bool,
}

/// Passes when the fine residual is `<= 4 C h²` with `C` from the coarse run
/// and the two constants agree within a factor 2, or when both residuals are
/// at rounding level.
pub fn refinement_check(coarse: &ResidualReport, fine: &ResidualReport) -> RefinementReport {
    let (cc, cf) = (coarse.constant, fine.constant);
    let ratio = cf / cc;
    let order_ok = fine.residual <= 4.0 * cc * fine.h * fine.h && (0.5..=2.0).contains(&ratio);
    let exact = coarse.residual <= ROUNDING_FLOOR && fine.residual <= ROUNDING_FLOOR;
    RefinementReport {
        label: coarse.label.clone(),
        coarse: coarse.clone(),
        fine: fine.clone(),
        c_coarse: cc,
        c_fine: cf,
        pass: coarse.residual.is_finite() && fine.residual.is_finite() && (order_ok || exact),
    }
}

fn pair(coarse: Vec<ResidualReport>, fine: Vec<ResidualReport>) -> Vec<RefinementReport> {
    coarse.iter().zip(&fine).map(|(c, f)| refinement_check(c, f)).collect()
}

fn refine(grid: &Grid) -> Result<Grid> {
    Grid::new(grid.x_min(), grid.x_max(), 2 * grid.n() - 1)
}

/// Every system at a coarse grid and its halved spacing.
pub fn refinement_suite() -> Result<Vec<RefinementReport>> {
    let mut out = Vec::new();
    // Abelian Higgs wall, λ = 2
    let ah = AbelianHiggsParams::new(1.0, 1.0)?;
    let g = Grid::symmetric(8.0, 8001)?;
    let run = |g: &Grid| -> Result<Vec<ResidualReport>> {
        let s = solve_higgs_to_magnetic(ah.lambda(), g, 0.0, -1.0)?;
        check_ah_second_order(&s.profile, &ah)
    };
    out.extend(pair(run(&g)?, run(&refine(&g)?)?));
    // W-condensate, e = m_W = 1
    let wp = GeneralLiouvilleParams::w_condensate(1.0, 1.0)?;
    let g = Grid::symmetric(6.0, 6001)?;
    let run = |g: &Grid| -> Result<Vec<ResidualReport>> {
        let s = solve_general(&wp, &Normalization::Extremum { x0: 0.0, u0: 0.0 }, g)?;
        check_w_second_order(&s.profile, 1.0, 1.0)
    };
    out.extend(pair(run(&g)?, run(&refine(&g)?)?));
    // relativistic Chern-Simons wall and lump, Jackiw-Pi
    let g = Grid::symmetric(10.0, 10001)?;
    let fine = refine(&g)?;
    for fam in [SolutionFamily::topological(1.0, 0.0, 0.5)?, SolutionFamily::lump(1.0, 0.0, 0.25f64.ln())?] {
        out.extend(pair(check_cs_relativistic(&fam, &g)?, check_cs_relativistic(&fam, &fine)?));
    }
    let jp = SolutionFamily::jp(1.0, 0.0, 0.0)?;
    out.extend(pair(check_jp_nonrelativistic(&jp, 1.0, &g)?, check_jp_nonrelativistic(&jp, 1.0, &fine)?));
    // U(2)
    let up = U2Params::new(1.0, 2.0, 1.0)?;
    let ua = U2Asymptotics { alpha1: 2.0, alpha2: 1.0, beta1: 1.0, beta2: 1.0 };
    let g = Grid::symmetric(15.0, 3001)?;
    let run = |g: &Grid| -> Result<Vec<ResidualReport>> {
        let pr = U2Problem::new(up, ua, g, build_measure(g, 1.0)?)?;
        let r = pr.minimize(None, 1e-9)?;
        if !r.report.converged {
            return Err(Error::InvalidParameter(format!("U(2) solve did not converge: {}", r.report.stop_reason)));
        }
        check_u2_second_order(&r, &up)
    };
    out.extend(pair(run(&g)?, run(&refine(&g)?)?));
    // electroweak
    let ep = EwParams::new(1.0, std::f64::consts::FRAC_PI_4, 1.0)?;
    let ea = EwAsymptotics { alpha1: 1.5, beta1: 1.5, alpha2: -2.0, beta2: -2.0 };
    let g = Grid::symmetric(16.0, 3201)?;
    let run = |g: &Grid| -> Result<Vec<ResidualReport>> {
        let pr = EwProblem::new(ep, ea, g, build_measure(g, 1.0)?)?;
        let r = pr.minimize_from(None, 1e-9)?;
        if !r.report.converged {
            return Err(Error::InvalidParameter(format!("electroweak solve did not converge: {}", r.report.stop_reason)));
        }
        check_ew(&r, &ep)
    };
    out.extend(pair(run(&g)?, run(&refine(&g)?)?));
    Ok(out)
}

/// A functional with an L² gradient for finite-difference checking.
pub trait Differentiable {
    fn dim(&self) -> usize;
    /// May omit an additive constant.
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn l2_gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// Discrete L² inner product.
    fn inner(&self, a: &[f64], b: &[f64]) -> f64;
    /// Restricts a direction to the admissible subspace.
    fn admissible(&self, _d: &mut [f64]) {}
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub worst: f64,
    pub errors: Vec<f64>,
    pub step: f64,
}

/// Central differences along seeded random directions of unit L² norm;
/// error `|fd − ⟨∇, d⟩| / (|⟨∇, d⟩| + ε)`.
pub fn gradient_fd_harness<F: Differentiable + ?Sized>(f: &F, point: &[f64], n_directions: usize, h_fd: f64, seed: u64) -> Result<FdReport> {
    let n = f.dim();
    if point.len() != n {
        return Err(Error::LengthMismatch { field: "point".into(), len: point.len(), n });
    }
    let grad = f.l2_gradient(point)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::with_capacity(n_directions);
    for _ in 0..n_directions {
        let mut d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        f.admissible(&mut d);
        let norm = f.inner(&d, &d).sqrt();
        d.iter_mut().for_each(|v| *v /= norm);
        let at = |s: f64| -> Result<f64> {
            let x: Vec<f64> = point.iter().zip(&d).map(|(p, q)| p + s * q).collect();
            f.value(&x)
        };
        let fd = (at(h_fd)? - at(-h_fd)?) / (2.0 * h_fd);
        let gd = f.inner(&grad, &d);
        errors.push((fd - gd).abs() / (gd.abs() + f64::EPSILON));
    }
    Ok(FdReport { worst: errors.iter().fold(0.0, |a, &b| a.max(b)), errors, step: h_fd })
}

fn weighted_inner(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let n = w.len();
    sum_compensated((0..a.len()).map(|k| w[k % n] * a[k] * b[k]))
}

/// `[η₁; η₂] ↦ I`.
impl Differentiable for U2Problem {
    fn dim(&self) -> usize {
        2 * self.grid.n()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let n = self.grid.n();
        self.value_relative(&x[..n], &x[n..])
    }

    fn l2_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n();
        let (mut a, b) = self.gradient(&x[..n], &x[n..])?;
        a.extend(b);
        Ok(a)
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_inner(&self.weights, a, b)
    }
}

/// `[η̇₁; η̇₂] ↦` reduced functional, on mean-zero pairs.
impl Differentiable for EwProblem {
    fn dim(&self) -> usize {
        2 * self.grid.n()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let n = self.grid.n();
        self.reduced_functional_relative(&x[..n], &x[n..])
    }

    fn l2_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n();
        let (mut a, b) = self.reduced_gradient(&x[..n], &x[n..])?;
        a.extend(b);
        Ok(a)
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_inner(&self.weights, a, b)
    }

    fn admissible(&self, d: &mut [f64]) {
        let n = self.grid.n();
        self.measure.project_mean_zero(&mut d[..n]);
        self.measure.project_mean_zero(&mut d[n..]);
    }
}
