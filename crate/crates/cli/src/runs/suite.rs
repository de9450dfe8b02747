use bpswall::ew_minimizer::{EwAsymptotics, EwParams, EwProblem};
use bpswall::liouville_cs::SolutionFamily;
use bpswall::u2_minimizer::{U2Asymptotics, U2Params, U2Problem};
use bpswall::verify::{check_closed_form, gradient_fd_harness, refinement_suite};
use bpswall::Grid;
use serde_json::json;

use super::{summary, RunOutput, VerifyConfig};
use crate::error::CliError;

const CLOSED_FORM_THRESHOLD: f64 = 1e-4;
const FD_THRESHOLD: f64 = 1e-6;

/// The negative-kappa Jackiw-Pi formula saturates at `u0 + ln 2` where the
/// equation needs `u'' = 4e^{u0}/|κ|`, so its residual cannot shrink.
const NEGK_REASON: &str = "jp_exact_negk: the closed form tends to u0 + ln 2 with u'' -> 0 while the equation needs u'' -> 4 e^u0/|kappa|; the residual plateaus near 4 for kappa = -1 at any h";

pub fn verify(cfg: VerifyConfig) -> Result<RunOutput, CliError> {
    let refinement = refinement_suite()?;
    let grid = Grid::symmetric(10.0, 20001)?;
    let families = [
        SolutionFamily::jp(1.0, 0.0, 0.0)?,
        SolutionFamily::jp(-1.0, 0.0, 0.0)?,
        SolutionFamily::topological(1.0, 0.0, 0.5)?,
        SolutionFamily::lump(1.0, 0.0, 0.25f64.ln())?,
    ];
    let closed: Vec<_> = families
        .iter()
        .map(|f| Ok(check_closed_form(f, &grid)?.with_threshold(CLOSED_FORM_THRESHOLD)))
        .collect::<bpswall::Result<_>>()?;

    let u2 = U2Problem::with_defaults(
        U2Params::new(1.0, 1.5, 1.0)?,
        U2Asymptotics { alpha1: 1.0, alpha2: 0.8, beta1: 0.5, beta2: 1.2 },
    )?;
    let u2_fd = gradient_fd_harness(&u2, &vec![0.0; 2 * u2.grid.n()], cfg.directions, cfg.fd_step, cfg.seed)?;
    let ew = EwProblem::with_defaults(
        EwParams::new(1.0, std::f64::consts::FRAC_PI_4, 1.0)?,
        EwAsymptotics { alpha1: 1.5, beta1: 1.5, alpha2: -2.0, beta2: -2.0 },
    )?;
    let ew_fd = gradient_fd_harness(&ew, &vec![0.0; 2 * ew.grid.n()], cfg.directions, cfg.fd_step, cfg.seed.wrapping_add(1))?;

    let known: Vec<&str> = closed.iter().filter(|r| !r.pass && r.label.starts_with("jp_exact_negk")).map(|r| r.label.as_str()).collect();
    let unexpected = refinement.iter().filter(|r| !r.pass).count()
        + closed.iter().filter(|r| !r.pass && !r.label.starts_with("jp_exact_negk")).count()
        + usize::from(u2_fd.worst >= FD_THRESHOLD)
        + usize::from(ew_fd.worst >= FD_THRESHOLD);
    let body = json!({
        "refinement": refinement,
        "closed_forms": closed,
        "gradient_checks": {
            "threshold": FD_THRESHOLD,
            "u2": u2_fd,
            "ew": ew_fd,
        },
        "known_failures": known.iter().map(|l| json!({ "label": l, "reason": NEGK_REASON })).collect::<Vec<_>>(),
        "unexpected_failures": unexpected,
        "all_pass": unexpected == 0 && known.is_empty(),
    });
    Ok(RunOutput { table: None, summary: summary("verify", &cfg, None, body), failure: None })
}
