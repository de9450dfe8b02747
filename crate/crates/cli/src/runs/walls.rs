use bpswall::abelian_wall::{
    default_grid, first_integral_drift, riccati_first_integral_check, solve_general, solve_wall, wall_tail_report,
    AbelianHiggsParams, GeneralLiouvilleParams, Normalization, WallBc,
};
use bpswall::liouville_cs::{jp_negk_local_half_width, JackiwPiParams, SolutionFamily};
use bpswall::verify::{check_ah_second_order, check_closed_form, check_jp_nonrelativistic, check_w_second_order};
use bpswall::Grid;
use serde_json::json;

use super::{grid_or, summary, AhLumpConfig, AhWallConfig, GeneralLiouvilleConfig, JpConfig, RunOutput, WCondensateConfig};
use crate::error::CliError;
use crate::output::Table;

/// Closed-form residual threshold at the default spacing.
const CLOSED_FORM_THRESHOLD: f64 = 1e-4;

fn abelian(name: &str, params: AbelianHiggsParams, bc: WallBc, grid: &Grid, config: serde_json::Value) -> Result<RunOutput, CliError> {
    let lambda = params.lambda();
    let sol = solve_wall(&params, &bc, grid)?;
    let u = sol.profile.field("u")?;
    let du = sol.profile.field("du")?;
    let table = Table::from_profile(&sol.profile)
        .with("phi", u.iter().map(|v| params.xi.sqrt() * (0.5 * v).exp()).collect())
        .with("A", du.iter().map(|d| -d / (2.0 * params.e)).collect());
    let general = GeneralLiouvilleParams::abelian_higgs(&params);
    let body = json!({
        "lambda": lambda,
        "boundary": bc,
        "tail_warning": sol.tail_warning,
        "tails": wall_tail_report(&sol, lambda, &bc)?,
        "first_integral_drift": first_integral_drift(&sol.profile, &general)?,
        "riccati": riccati_first_integral_check(grid, u, &general)?,
        "residuals": check_ah_second_order(&sol.profile, &params)?,
    });
    Ok(RunOutput { table: Some(table), summary: summary(name, &config, Some(grid), body), failure: None })
}

pub fn ah_wall(mut cfg: AhWallConfig) -> Result<RunOutput, CliError> {
    let params = AbelianHiggsParams::new(cfg.e, cfg.xi)?;
    let bc = WallBc::HiggsToMagnetic { x_ref: cfg.x_ref, u_ref: cfg.u_ref };
    let grid = grid_or(cfg.l, cfg.n, default_grid(params.lambda(), &bc))?;
    (cfg.l, cfg.n) = (Some(grid.x_max()), Some(grid.n()));
    abelian("ah-wall", params, bc, &grid, serde_json::to_value(&cfg)?)
}

pub fn ah_lump(mut cfg: AhLumpConfig) -> Result<RunOutput, CliError> {
    let params = AbelianHiggsParams::new(cfg.e, cfg.xi)?;
    let bc = WallBc::MagneticToMagnetic { x0: cfg.x0, u0: cfg.u0 };
    let grid = grid_or(cfg.l, cfg.n, default_grid(params.lambda(), &bc))?;
    (cfg.l, cfg.n) = (Some(grid.x_max()), Some(grid.n()));
    abelian("ah-lump", params, bc, &grid, serde_json::to_value(&cfg)?)
}

pub fn w_condensate(cfg: WCondensateConfig) -> Result<RunOutput, CliError> {
    let params = GeneralLiouvilleParams::w_condensate(cfg.e, cfg.m_w)?;
    let grid = Grid::symmetric(cfg.l, cfg.n)?;
    let sol = solve_general(&params, &Normalization::Extremum { x0: cfg.x0, u0: cfg.u0 }, &grid)?;
    let p = &sol.profile;
    let u = p.field("u")?;
    let du = p.field("du")?;
    let table = Table::from_profile(p)
        .with("W", u.iter().map(|v| (0.5 * v).exp()).collect())
        .with("P", du.iter().map(|d| -d / (2.0 * cfg.e)).collect());
    // a blow-up truncates the profile to a sub-grid
    let residuals = if sol.blow_up.is_none() { Some(check_w_second_order(p, cfg.e, cfg.m_w)?) } else { None };
    let body = json!({
        "lambda": params.lambda,
        "epsilon": params.epsilon,
        "blow_up": sol.blow_up,
        "first_integral_drift": first_integral_drift(p, &params)?,
        "riccati": riccati_first_integral_check(p.grid(), u, &params)?,
        "residuals": residuals,
    });
    Ok(RunOutput { table: Some(table), summary: summary("w-condensate", &cfg, Some(p.grid()), body), failure: None })
}

pub fn general_liouville(cfg: GeneralLiouvilleConfig) -> Result<RunOutput, CliError> {
    let params = GeneralLiouvilleParams::new(cfg.lambda, cfg.epsilon)?;
    let grid = Grid::symmetric(cfg.l, cfg.n)?;
    let norm = match cfg.du0 {
        Some(du_ref) => Normalization::Point { x_ref: cfg.x0, u_ref: cfg.u0, du_ref },
        None => Normalization::Extremum { x0: cfg.x0, u0: cfg.u0 },
    };
    let sol = solve_general(&params, &norm, &grid)?;
    let p = &sol.profile;
    let body = json!({
        "normalization": norm,
        "blow_up": sol.blow_up,
        "first_integral_drift": first_integral_drift(p, &params)?,
        "riccati": riccati_first_integral_check(p.grid(), p.field("u")?, &params)?,
    });
    Ok(RunOutput { table: Some(Table::from_profile(p)), summary: summary("general-liouville", &cfg, Some(p.grid()), body), failure: None })
}

pub fn jp(cfg: JpConfig) -> Result<RunOutput, CliError> {
    let params = JackiwPiParams::new(cfg.kappa, cfg.m)?;
    let family = SolutionFamily::jp(cfg.kappa, cfg.x0, cfg.u0)?;
    let grid = Grid::symmetric(cfg.l, cfg.n)?;
    let u = family.sample_u(&grid);
    let table = Table::default()
        .with("x", grid.points())
        .with("u", u.clone())
        .with("du", grid.map(|x| family.du(x)))
        .with("psi", u.iter().map(|v| (0.5 * v).exp()).collect());
    let closed = check_closed_form(&family, &grid)?.with_threshold(CLOSED_FORM_THRESHOLD);
    let mut body = json!({
        "family": family,
        "critical_coupling": params.critical_coupling(),
        "closed_form_residual": closed,
    });
    if cfg.kappa > 0.0 {
        body["residuals"] = json!(check_jp_nonrelativistic(&family, cfg.m, &grid)?);
    } else {
        body["local_solution_half_width"] = json!(jp_negk_local_half_width(cfg.kappa, cfg.u0));
    }
    Ok(RunOutput { table: Some(table), summary: summary("jp", &cfg, Some(&grid), body), failure: None })
}
