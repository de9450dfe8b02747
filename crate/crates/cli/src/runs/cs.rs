use bpswall::grid::{integrate, Rule};
use bpswall::liouville_cs::{
    charges, default_phi0_lattice, energy_curve, energy_density, lump_energy, lump_energy_direct, lump_energy_truncated,
    wall_energy, wall_energy_on, LumpForm, LumpProfile, SolutionFamily,
};
use bpswall::verify::check_cs_relativistic;
use bpswall::Grid;
use rayon::prelude::*;
use serde_json::json;

use super::{summary, CsEnergyCurveConfig, CsLumpConfig, CsWallConfig, RunOutput};
use crate::error::CliError;
use crate::output::Table;

pub fn cs_wall(mut cfg: CsWallConfig) -> Result<RunOutput, CliError> {
    let family = SolutionFamily::topological(cfg.kappa, cfg.x0, cfg.phi0)?;
    let k = cfg.kappa;
    let l = *cfg.l.get_or_insert(cfg.x0.abs() + k * (20.0 + cfg.phi0.ln().abs()));
    let grid = Grid::symmetric(l, cfg.n)?;
    let phi = grid.map(|x| family.phi(x));
    let dphi = grid.map(|x| family.dphi(x));
    let du = grid.map(|x| family.du(x));
    let density: Vec<f64> = phi.iter().zip(&dphi).map(|(p, d)| energy_density(k, *p, *d)).collect();
    let energy_on_grid = integrate(&grid, &density, Rule::Simpson)?;
    let table = Table::default()
        .with("x", grid.points())
        .with("u", family.sample_u(&grid))
        .with("du", du.clone())
        .with("phi", phi.clone())
        .with("dphi", dphi)
        .with("A", du.iter().map(|d| -0.5 * d).collect())
        .with("A0", phi.iter().map(|p| (1.0 - p * p) / k).collect())
        .with("energy_density", density);
    let energy = wall_energy(k, cfg.phi0, cfg.x0)?;
    let (q_m, q_e) = charges(k, cfg.phi0, cfg.x0)?;
    let body = json!({
        "energy_analytic": energy.analytic,
        "energy_quadrature": energy.quadrature,
        "energy_on_grid": energy_on_grid,
        "truncated_energy": {
            "a": cfg.window_a,
            "b": cfg.window_b,
            "value": wall_energy_on(k, cfg.phi0, cfg.x0, cfg.window_a, cfg.window_b)?,
        },
        "charges": { "q_m": q_m, "q_e": q_e },
        "residuals": check_cs_relativistic(&family, &grid)?,
    });
    Ok(RunOutput { table: Some(table), summary: summary("cs-wall", &cfg, Some(&grid), body), failure: None })
}

pub fn cs_lump(mut cfg: CsLumpConfig) -> Result<RunOutput, CliError> {
    let form: LumpForm = cfg.form.parse()?;
    let k = cfg.kappa;
    let lp = LumpProfile::new(k, cfg.phi0, form)?;
    let l = *cfg.l.get_or_insert(40.0 / lp.decay_rate());
    let grid = Grid::symmetric(l, cfg.n)?;
    let phi = grid.map(|x| lp.phi(x));
    let dphi = grid.map(|x| lp.dphi(x));
    let density: Vec<f64> = phi.iter().zip(&dphi).map(|(p, d)| energy_density(k, *p, *d)).collect();
    let energy_on_grid = integrate(&grid, &density, Rule::Simpson)?;
    let table = Table::default()
        .with("x", grid.points())
        .with("phi", phi)
        .with("dphi", dphi)
        .with("energy_density", density);
    let energy = lump_energy(k, cfg.phi0, form)?;
    let residuals = match form {
        LumpForm::Exact => {
            let family = SolutionFamily::lump(k, 0.0, 2.0 * cfg.phi0.ln())?;
            json!(check_cs_relativistic(&family, &grid)?)
        }
        LumpForm::Unsquared => json!(null),
    };
    let body = json!({
        "form": form,
        "decay_rate": lp.decay_rate(),
        "energy": energy,
        "energy_direct": lump_energy_direct(k, cfg.phi0, form)?,
        "energy_on_grid": energy_on_grid,
        "truncated": {
            "upper": cfg.upper,
            "half_line_term": lp.split_integral(cfg.upper)?,
            "energy": lump_energy_truncated(k, cfg.phi0, form, cfg.upper)?,
        },
        "residuals": residuals,
    });
    Ok(RunOutput { table: Some(table), summary: summary("cs-lump", &cfg, Some(&grid), body), failure: None })
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

pub fn cs_energy_curve(cfg: CsEnergyCurveConfig) -> Result<RunOutput, CliError> {
    if cfg.kappa.is_empty() {
        return Err(CliError::Validation("need at least one kappa".into()));
    }
    let phis = if cfg.phi0.is_empty() { default_phi0_lattice(cfg.points) } else { cfg.phi0.clone() };
    if phis.is_empty() {
        return Err(CliError::Validation("need at least one phi0".into()));
    }
    let curves: Vec<(Vec<f64>, Vec<f64>)> = cfg
        .kappa
        .par_iter()
        .map(|&k| -> bpswall::Result<(Vec<f64>, Vec<f64>)> {
            let e = energy_curve(&[k], &phis, LumpForm::Exact)?.iter().map(|p| p.energy).collect();
            let u = energy_curve(&[k], &phis, LumpForm::Unsquared)?.iter().map(|p| p.energy).collect();
            Ok((e, u))
        })
        .collect::<bpswall::Result<_>>()?;
    let mut t = Table::default();
    let mut per_kappa = Vec::new();
    let (mut kc, mut pc, mut ec, mut uc) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (&k, (e, u)) in cfg.kappa.iter().zip(&curves) {
        kc.extend(std::iter::repeat_n(k, phis.len()));
        pc.extend(&phis);
        ec.extend(e);
        uc.extend(u);
        let (imax, emax) = u.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
        per_kappa.push(json!({
            "kappa": k,
            "increasing_exact": strictly_increasing(e),
            "increasing_unsquared": strictly_increasing(u),
            "unsquared_peak": { "phi0": phis[imax], "energy": emax },
        }));
    }
    t.push("kappa", kc);
    t.push("phi0", pc);
    t.push("energy_exact", ec);
    t.push("energy_unsquared", uc);
    // exact energies decrease in kappa at every phi0
    let mut order: Vec<usize> = (0..cfg.kappa.len()).collect();
    order.sort_by(|&a, &b| cfg.kappa[a].total_cmp(&cfg.kappa[b]));
    let decreasing = order.windows(2).all(|w| (0..phis.len()).all(|j| curves[w[1]].0[j] < curves[w[0]].0[j]));
    let body = json!({ "points": phis.len(), "curves": per_kappa, "decreasing_in_kappa_exact": decreasing });
    Ok(RunOutput { table: Some(t), summary: summary("cs-energy-curve", &cfg, None, body), failure: None })
}
