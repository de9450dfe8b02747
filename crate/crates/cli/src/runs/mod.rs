use bpswall::{Grid, Result as CoreResult};
use serde_json::{json, Map, Value};

use crate::config::{resolve, run_config};
use crate::error::CliError;
use crate::output::Table;

mod cs;
mod minimizers;
mod suite;
mod walls;

pub struct RunOutput {
    pub table: Option<Table>,
    pub summary: Value,
    /// Artifacts are still written; the process exits with this error.
    pub failure: Option<CliError>,
}

run_config!(AhWallArgs => AhWallConfig {
    /// Gauge coupling
    e: f64 = 1.0,
    /// Vacuum scale
    xi: f64 = 1.0,
    /// Normalization point
    x_ref: f64 = 0.0,
    /// Normalization value u(x_ref) < 0
    u_ref: f64 = -1.0,
    @auto {
        /// Half-width of the grid
        l: f64,
        /// Grid points
        n: usize,
    }
});

run_config!(AhLumpArgs => AhLumpConfig {
    e: f64 = 1.0,
    xi: f64 = 1.0,
    /// Location of the maximum
    x0: f64 = 0.0,
    /// Maximum value u0 <= 0
    u0: f64 = -1.0,
    @auto {
        l: f64,
        n: usize,
    }
});

run_config!(WCondensateArgs => WCondensateConfig {
    e: f64 = 1.0,
    /// W boson mass
    m_w: f64 = 1.0,
    x0: f64 = 0.0,
    u0: f64 = 0.0,
    l: f64 = 6.0,
    n: usize = 6001,
});

run_config!(GeneralLiouvilleArgs => GeneralLiouvilleConfig {
    lambda: f64 = 2.0,
    epsilon: f64 = 1.0,
    /// Normalization point
    x0: f64 = 0.0,
    /// u(x0)
    u0: f64 = -1.0,
    l: f64 = 8.0,
    n: usize = 8001,
    @auto {
        /// u'(x0); omitted means x0 is an extremum
        du0: f64,
    }
});

run_config!(JpArgs => JpConfig {
    /// Chern-Simons coupling (either sign)
    kappa: f64 = 1.0,
    /// Mass
    m: f64 = 1.0,
    x0: f64 = 0.0,
    u0: f64 = 0.0,
    l: f64 = 10.0,
    n: usize = 20001,
});

run_config!(CsWallArgs => CsWallConfig {
    kappa: f64 = 1.0,
    /// φ(x0)
    phi0: f64 = 0.5,
    x0: f64 = 0.0,
    /// Left end of the truncated energy window
    window_a: f64 = -1.2,
    /// Right end of the truncated energy window
    window_b: f64 = 1.2,
    n: usize = 4001,
    @auto {
        l: f64,
    }
});

run_config!(CsLumpArgs => CsLumpConfig {
    kappa: f64 = 1.0,
    /// Maximum of φ
    phi0: f64 = 0.5,
    /// exact | unsquared
    form: String = "exact".into(),
    /// Upper end T of the truncated energies
    upper: f64 = 6.0,
    n: usize = 4001,
    @auto {
        l: f64,
    }
});

run_config!(CsEnergyCurveArgs => CsEnergyCurveConfig {
    /// Repeat for several values
    kappa: Vec<f64> = vec![1.0, 2.0, 4.0],
    /// Explicit φ0 values; empty means the default lattice
    phi0: Vec<f64> = Vec::new(),
    /// Size of the default φ0 lattice
    points: usize = 99,
});

run_config!(U2WallArgs => U2WallConfig {
    e: f64 = 1.0,
    gamma: f64 = 1.0,
    xi: f64 = 1.0,
    alpha1: f64 = 1.0,
    alpha2: f64 = 1.0,
    beta1: f64 = 1.0,
    beta2: f64 = 1.0,
    /// Measure exponent
    beta: f64 = 1.0,
    tol: f64 = 1e-8,
    /// Iteration budget
    max_iter: usize = 20000,
    @auto {
        l: f64,
        n: usize,
    }
});

run_config!(EwWallArgs => EwWallConfig {
    g: f64 = 1.0,
    /// Weinberg angle
    theta: f64 = std::f64::consts::FRAC_PI_4,
    phi0: f64 = 1.0,
    alpha1: f64 = 1.5,
    beta1: f64 = 1.5,
    alpha2: f64 = -2.0,
    beta2: f64 = -2.0,
    tol: f64 = 1e-8,
    /// Iteration budget per start
    max_iter: usize = 20000,
    /// Random restarts for the uniqueness check
    restarts: usize = 5,
    seed: u64 = 0,
    @auto {
        /// Measure exponent; defaults to min(|α₂|,|β₂|)/2
        beta: f64,
        l: f64,
        n: usize,
    }
});

run_config!(VerifyArgs => VerifyConfig {
    seed: u64 = 0,
    /// Random directions per gradient check
    directions: usize = 20,
    /// Finite-difference step
    fd_step: f64 = 1e-5,
});

pub const SUBCOMMANDS: [&str; 11] = [
    "ah-wall",
    "ah-lump",
    "w-condensate",
    "general-liouville",
    "jp",
    "cs-wall",
    "cs-lump",
    "cs-energy-curve",
    "u2-wall",
    "ew-wall",
    "verify",
];

/// Resolves the config map for `subcommand` and runs it.
pub fn run_named(subcommand: &str, map: Map<String, Value>) -> Result<RunOutput, CliError> {
    match subcommand {
        "ah-wall" => walls::ah_wall(resolve(map)?),
        "ah-lump" => walls::ah_lump(resolve(map)?),
        "w-condensate" => walls::w_condensate(resolve(map)?),
        "general-liouville" => walls::general_liouville(resolve(map)?),
        "jp" => walls::jp(resolve(map)?),
        "cs-wall" => cs::cs_wall(resolve(map)?),
        "cs-lump" => cs::cs_lump(resolve(map)?),
        "cs-energy-curve" => cs::cs_energy_curve(resolve(map)?),
        "u2-wall" => minimizers::u2_wall(resolve(map)?),
        "ew-wall" => minimizers::ew_wall(resolve(map)?),
        "verify" => suite::verify(resolve(map)?),
        other => Err(CliError::Validation(format!("unknown subcommand `{other}` (one of {})", SUBCOMMANDS.join(", ")))),
    }
}

/// Symmetric grid from optional overrides of a model default.
fn grid_or(l: Option<f64>, n: Option<usize>, default: CoreResult<Grid>) -> CoreResult<Grid> {
    match (l, n) {
        (Some(l), Some(n)) => Grid::symmetric(l, n),
        _ => {
            let d = default?;
            Grid::symmetric(l.unwrap_or(d.x_max()), n.unwrap_or(d.n()))
        }
    }
}

fn grid_json(g: &Grid) -> Value {
    json!({ "x_min": g.x_min(), "x_max": g.x_max(), "n": g.n(), "h": g.h() })
}

fn summary(subcommand: &str, config: &impl serde::Serialize, grid: Option<&Grid>, body: Value) -> Value {
    let mut m = Map::new();
    m.insert("subcommand".into(), json!(subcommand));
    m.insert("config".into(), serde_json::to_value(config).expect("configs serialize"));
    if let Some(g) = grid {
        m.insert("grid".into(), grid_json(g));
    }
    if let Value::Object(b) = body {
        m.extend(b);
    }
    Value::Object(m)
}
