use bpswall::ew_minimizer::{self as ew, ew_asymptotics_report, reconstruct_fields, recover_multipliers, EwAsymptotics, EwOptions, EwParams, EwProblem};
use bpswall::u2_minimizer::{self as u2, u2_asymptotics_report, U2Asymptotics, U2Params, U2Problem};
use bpswall::verify::{check_ew, check_u2_second_order};
use bpswall::wspace::build_measure;
use serde_json::json;

use super::{grid_or, summary, EwWallConfig, RunOutput, U2WallConfig};
use crate::error::CliError;
use crate::output::Table;

pub fn u2_wall(mut cfg: U2WallConfig) -> Result<RunOutput, CliError> {
    let params = U2Params::new(cfg.e, cfg.gamma, cfg.xi)?;
    let asym = U2Asymptotics { alpha1: cfg.alpha1, alpha2: cfg.alpha2, beta1: cfg.beta1, beta2: cfg.beta2 };
    u2::check_admissible(&asym, params.gamma)?;
    let grid = grid_or(cfg.l, cfg.n, u2::default_grid(&params))?;
    (cfg.l, cfg.n) = (Some(grid.x_max()), Some(grid.n()));
    let problem = U2Problem::new(params, asym, &grid, build_measure(&grid, cfg.beta)?)?;
    let r = problem.minimize_capped(None, cfg.tol, cfg.max_iter)?;
    let table = Table::default()
        .with("x", grid.points())
        .with("eta1", r.eta1.clone())
        .with("eta2", r.eta2.clone())
        .with("u1", r.u1.clone())
        .with("u2", r.u2.clone())
        .with("q1_sq", r.q1_sq.clone())
        .with("q2_sq", r.q2_sq.clone());
    let failure = (!r.report.converged).then(|| CliError::Convergence(format!("U(2) minimization: {}", r.report.stop_reason)));
    let body = json!({
        "lambda": params.lambda(),
        "kappa": problem.kappa,
        "integrals": { "q1_sq": r.integral_q1_sq, "q2_sq": r.integral_q2_sq },
        "expected": { "q1_sq": r.expected_q1_sq, "q2_sq": r.expected_q2_sq },
        "identity_residuals": r.identity_residuals,
        "asymptotics": u2_asymptotics_report(&r, &params, &asym)?,
        "residuals": check_u2_second_order(&r, &params)?,
        "optimizer": r.report,
    });
    Ok(RunOutput { table: Some(table), summary: summary("u2-wall", &cfg, Some(&grid), body), failure })
}

pub fn ew_wall(mut cfg: EwWallConfig) -> Result<RunOutput, CliError> {
    let params = EwParams::new(cfg.g, cfg.theta, cfg.phi0)?;
    let asym = EwAsymptotics { alpha1: cfg.alpha1, beta1: cfg.beta1, alpha2: cfg.alpha2, beta2: cfg.beta2 };
    asym.validate(&params)?;
    let grid = grid_or(cfg.l, cfg.n, ew::default_grid(&params, &asym))?;
    let beta = *cfg.beta.get_or_insert(0.5 * asym.min_abs_second());
    (cfg.l, cfg.n) = (Some(grid.x_max()), Some(grid.n()));
    let problem = EwProblem::new(params, asym, &grid, build_measure(&grid, beta)?)?;
    let r = problem.minimize(&EwOptions { tol: cfg.tol, restarts: cfg.restarts, seed: cfg.seed, max_iter: cfg.max_iter })?;
    let fields = reconstruct_fields(&r, &params)?;
    let mut table = Table::default()
        .with("x", grid.points())
        .with("eta1", r.eta1.clone())
        .with("eta2", r.eta2.clone())
        .with("u1", r.u1.clone())
        .with("u2", r.u2.clone())
        .with("v1", r.v1.clone())
        .with("v2", r.v2.clone());
    for name in ["w", "phi", "P", "Z"] {
        table.push(name, fields.field(name)?.to_vec());
    }
    let failure = (!r.report.converged).then(|| CliError::Convergence(format!("electroweak minimization: {}", r.report.stop_reason)));
    let multipliers = match recover_multipliers(&problem, &r) {
        Ok(m) => json!(m),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let body = json!({
        "lambda": params.lambda(),
        "critical_coupling": params.critical_coupling(),
        "constraints": {
            "values": r.constraint_values,
            "targets": r.constraint_targets,
            "relative_residuals": r.constraint_residuals,
        },
        "integrals": { "w_sq": r.integral_w_sq, "phi_sq": r.integral_phi_sq },
        "expected": { "w_sq": r.expected_w_sq, "phi_sq": r.expected_phi_sq },
        "means": { "eta1": r.eta1_mean, "eta2": r.eta2_mean },
        "multipliers": multipliers,
        "asymptotics": ew_asymptotics_report(&r, &params, &asym)?,
        "residuals": check_ew(&r, &params)?,
        "restarts": { "count": r.restarts, "spread": r.restart_spread },
        "optimizer": r.report,
    });
    Ok(RunOutput { table: Some(table), summary: summary("ew-wall", &cfg, Some(&grid), body), failure })
}
