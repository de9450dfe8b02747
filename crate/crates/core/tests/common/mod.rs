#![allow(dead_code)]

use bpswall::ew_minimizer::{EwAsymptotics, EwParams};
use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

/// Six admissible electroweak parameter sets: (g, θ, φ₀, α₁, β₁, α₂, β₂).
pub const EW_LATTICE: [(f64, f64, f64, f64, f64, f64, f64); 6] = [
    (1.0, FRAC_PI_4, 1.0, 1.5, 1.5, -2.0, -2.0),
    (1.0, FRAC_PI_3, 1.0, 1.0, 2.0, -0.9, -0.8),
    (1.2, FRAC_PI_6, 0.8, 0.2, 0.3, -1.0, -1.2),
    (0.7, 0.6, 1.3, 0.5, 0.5, -1.5, -1.2),
    (1.5, 1.0, 0.6, 2.0, 0.4, -0.7, -0.6),
    (2.0, FRAC_PI_4, 0.5, -0.5, 2.5, -1.5, -1.0),
];

pub fn ew_case(k: usize) -> (EwParams, EwAsymptotics) {
    let (g, th, p0, a1, b1, a2, b2) = EW_LATTICE[k];
    (EwParams::new(g, th, p0).unwrap(), EwAsymptotics { alpha1: a1, beta1: b1, alpha2: a2, beta2: b2 })
}
