mod common;

use approx::assert_abs_diff_eq;
use bpswall::ew_minimizer::*;
use bpswall::grid::fit_tail;
use bpswall::wspace::build_measure;
use bpswall::{Error, Grid, TailModel};
use common::{ew_case, EW_LATTICE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

fn main_case() -> (EwParams, EwAsymptotics) {
    ew_case(0)
}

#[test]
fn variable_change() {
    let (u1, u2) = change_variables(&[0.0, 1.0], &[0.0, 2.0]);
    assert_eq!(u1, vec![0.0, 5.0]);
    assert_eq!(u2, vec![0.0, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v1: Vec<f64> = (0..200).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let v2: Vec<f64> = (0..200).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let (u1, u2) = change_variables(&v1, &v2);
    let (r1, r2) = inverse_change(&u1, &u2);
    for k in 0..200 {
        assert!((r1[k] - v1[k]).abs() <= 1e-15 * (1.0 + v1[k].abs()));
        assert!((r2[k] - v2[k]).abs() <= 1e-15 * 8.0);
    }
}

#[test]
fn parameters() {
    let p = EwParams::from_couplings(1.0, 1.0, 1.0).unwrap();
    assert_abs_diff_eq!(p.theta, FRAC_PI_4, epsilon = 1e-15);
    assert_abs_diff_eq!(p.lambda(), 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(p.critical_coupling(), 0.25, epsilon = 1e-15);
    assert_abs_diff_eq!(p.e(), p.g_prime() * p.theta.cos(), epsilon = 1e-15);
    assert!(EwParams::new(1.0, 0.0, 1.0).is_err());
    assert!(EwParams::new(1.0, 1.6, 1.0).is_err());
    assert!(EwParams::new(-1.0, 0.5, 1.0).is_err());
}

#[test]
fn targets() {
    let p = EwParams::new(1.0, FRAC_PI_4, 1.0).unwrap();
    let (a, b) = constraint_targets(&EwAsymptotics { alpha1: 0.5, beta1: 0.5, alpha2: -1.5, beta2: -1.5 }, &p).unwrap();
    assert_abs_diff_eq!(a, 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(b, 2.0, epsilon = 1e-14);
    let p3 = EwParams::new(1.0, FRAC_PI_3, 1.0).unwrap();
    let (a, b) = constraint_targets(&EwAsymptotics { alpha1: 1.0, beta1: 2.0, alpha2: -1.0, beta2: -1.0 }, &p3).unwrap();
    assert_abs_diff_eq!(a, 3.0, epsilon = 1e-15);
    assert_abs_diff_eq!(b, 1.0, epsilon = 1e-14);
    // equality is excluded
    let s = 1.0 / p.tan2();
    assert!(matches!(
        constraint_targets(&EwAsymptotics { alpha1: 0.5, beta1: 0.5, alpha2: -0.5 * s, beta2: -0.5 * s }, &p),
        Err(Error::Inadmissible(_))
    ));
}

#[test]
fn validation_names_the_inequality() {
    let p = EwParams::new(1.0, FRAC_PI_4, 1.0).unwrap();
    let msg = |a: EwAsymptotics| match a.validate(&p) {
        Err(Error::Inadmissible(m)) => m,
        other => panic!("{other:?}"),
    };
    assert!(msg(EwAsymptotics { alpha1: 1.0, beta1: 1.0, alpha2: 1.0, beta2: -2.0 }).contains("α₂ < 0"));
    assert!(msg(EwAsymptotics { alpha1: -1.0, beta1: 0.0, alpha2: -1.0, beta2: -2.0 }).contains("α₁+β₁ > 0"));
    assert!(msg(EwAsymptotics { alpha1: 2.0, beta1: 2.0, alpha2: -1.0, beta2: -1.0 }).contains("|α₂|+|β₂| > (α₁+β₁)/tan²θ"));
    assert!(msg(EwAsymptotics { alpha1: 0.5, beta1: 0.5, alpha2: -0.5, beta2: -3.0 }).contains("min{|α₂|,|β₂|}"));
    for k in 0..EW_LATTICE.len() {
        let (p, a) = ew_case(k);
        a.validate(&p).unwrap();
    }
}

#[test]
fn weight_functions() {
    let (p, a) = main_case();
    let pr = EwProblem::with_defaults(p, a).unwrap();
    let g = pr.grid;
    let u = pr.uv.u();
    let v = pr.uv.v();
    assert!(v.iter().all(|x| *x > 0.0));
    assert!(u.iter().zip(&pr.uv.ln_u).all(|(x, l)| *x > 0.0 || *l < -700.0));
    let i = g.node_index(5.0).unwrap_or_else(|| (0..g.n()).find(|&i| g.x(i) > 5.0).unwrap());
    assert_abs_diff_eq!(pr.uv.ln_v[i], a.alpha2 * g.x(i), epsilon = 1e-12);
    let fit = fit_tail(&g, &pr.uv.ln_u, (3.0, 12.0), TailModel::LinearPlusQuadratic).unwrap();
    assert_abs_diff_eq!(fit.quadratic(), -p.lambda() / 2.0, epsilon = 1e-10);
    let bg = bpswall::wspace::build_backgrounds(&g, 1.0, 1.0, 1.0, -1.0, 1.0).unwrap();
    assert!(weights_uv(&bg).is_err());
}

#[test]
fn beta_window_is_enforced() {
    let (p, a) = main_case();
    let g = default_grid(&p, &a).unwrap();
    let err = EwProblem::new(p, a, &g, build_measure(&g, 2.0).unwrap()).unwrap_err();
    assert!(matches!(err, Error::InvalidParameter(_)));
}

#[test]
fn reduced_functional_at_zero() {
    let (p, a) = main_case();
    let pr = EwProblem::with_defaults(p, a).unwrap();
    let z = vec![0.0; pr.grid.n()];
    let val = pr.reduced_functional(&z, &z).unwrap();
    let (lu, lv) = pr.log_integrals(&z, &z);
    let t = p.tan2();
    let (aa, bb) = pr.targets;
    let (g1, g2) = pr.gammas;
    let want = 2.0 * aa / t * lu - bb * lv + bb * g2.ln() - 2.0 * aa / t * g1.ln();
    assert_abs_diff_eq!(val, want, epsilon = 1e-12 * want.abs().max(1.0));
    assert_eq!(pr.reduced_functional_relative(&z, &z).unwrap(), 0.0);
    assert_eq!(val, pr.reduced_functional_offset());
    let nonzero = vec![1.0; pr.grid.n()];
    assert!(matches!(pr.reduced_functional(&nonzero, &z), Err(Error::NotMeanZero(_))));
}

#[test]
fn constant_shift_then_resplit_is_invariant() {
    let (p, a) = main_case();
    let pr = EwProblem::with_defaults(p, a).unwrap();
    let e1 = pr.measure.split(&pr.grid.map(|x| 0.3 * (0.4 * x).tanh())).dotted;
    let e2 = pr.measure.split(&pr.grid.map(|x| 0.2 * (-(x * x) / 4.0).exp())).dotted;
    let base = pr.reduced_functional(&e1, &e2).unwrap();
    let s1 = pr.measure.split(&e1.iter().map(|v| v + 1.7).collect::<Vec<_>>()).dotted;
    let s2 = pr.measure.split(&e2.iter().map(|v| v - 0.9).collect::<Vec<_>>()).dotted;
    assert_abs_diff_eq!(pr.reduced_functional(&s1, &s2).unwrap(), base, epsilon = 1e-10);
}

#[test]
fn coercive_along_a_bump() {
    let (p, a) = main_case();
    let pr = EwProblem::with_defaults(p, a).unwrap();
    let z = vec![0.0; pr.grid.n()];
    let bump = pr.measure.split(&pr.grid.map(|x| (-(x * x) / 2.0).exp())).dotted;
    let r0 = pr.reduced_functional(&z, &z).unwrap();
    let mut q = Vec::new();
    for t in [4.0, 8.0, 16.0, 32.0] {
        let e2: Vec<f64> = bump.iter().map(|v| t * v).collect();
        q.push((pr.reduced_functional(&z, &e2).unwrap() - r0) / (t * t));
    }
    assert!(q.iter().all(|v| *v > 0.0), "{q:?}");
    assert!(q[3] >= 0.5 * q[2], "{q:?}");
}

fn fd_error(pr: &EwProblem, e1: &[f64], e2: &[f64], seed: u64) -> f64 {
    let n = pr.grid.n();
    let h = pr.grid.h();
    let (g1, g2) = pr.reduced_gradient(e1, e2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let r1: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut d1 = pr.measure.split(&r1).dotted;
        let mut d2 = pr.measure.split(&r2).dotted;
        let norm = (d1.iter().chain(&d2).map(|v| v * v).sum::<f64>() * h).sqrt();
        d1.iter_mut().chain(d2.iter_mut()).for_each(|v| *v /= norm);
        let eps = 1e-5;
        let at = |s: f64| {
            let a: Vec<f64> = e1.iter().zip(&d1).map(|(e, d)| e + s * d).collect();
            let b: Vec<f64> = e2.iter().zip(&d2).map(|(e, d)| e + s * d).collect();
            pr.reduced_functional(&a, &b).unwrap()
        };
        let fd = (at(eps) - at(-eps)) / (2.0 * eps);
        let gd: f64 = (0..n).map(|j| pr.weights[j] * (g1[j] * d1[j] + g2[j] * d2[j])).sum();
        worst = worst.max((fd - gd).abs() / gd.abs().max(f64::EPSILON));
    }
    worst
}

#[test]
fn gradient_matches_finite_differences() {
    let (p, a) = main_case();
    let g = Grid::symmetric(16.0, 1201).unwrap();
    let pr = EwProblem::new(p, a, &g, build_measure(&g, 1.0).unwrap()).unwrap();
    let z = vec![0.0; g.n()];
    assert!(fd_error(&pr, &z, &z, 5) < 1e-6);
    let e1 = pr.measure.split(&g.map(|x| 0.5 * (0.3 * x).sin())).dotted;
    let e2 = pr.measure.split(&g.map(|x| 0.4 * (0.7 * x).tanh())).dotted;
    assert!(fd_error(&pr, &e1, &e2, 6) < 1e-6);
}

#[test]
fn main_example_integrals_and_multipliers() {
    let (p, a) = main_case();
    let pr = EwProblem::with_defaults(p, a).unwrap();
    let r = pr.minimize(&EwOptions::default()).unwrap();
    assert!(r.report.converged, "{:?}", r.report);
    assert!((r.integral_w_sq / 0.25 - 1.0).abs() < 1e-3);
    assert!((r.integral_phi_sq / 3.0 - 1.0).abs() < 1e-3);
    assert!(r.constraint_residuals.0 < 1e-4 && r.constraint_residuals.1 < 1e-4);
    assert!(r.restart_spread < 1e-5, "{}", r.restart_spread);
    // elimination formulas reproduce the stored means
    let (m1, m2) = pr.means(&r.eta1_dot, &r.eta2_dot);
    assert_eq!((m1, m2), (r.eta1_mean, r.eta2_mean));
    let m = recover_multipliers(&pr, &r).unwrap();
    assert!((m.xi1 + 1.0).abs() < 1e-3 && (m.xi2 - 4.0).abs() < 1e-3, "{m:?}");
    let rep = ew_asymptotics_report(&r, &p, &a).unwrap();
    assert!(rep.pass, "{rep:#?}");
    let f = reconstruct_fields(&r, &p).unwrap();
    assert!(f.field("w").unwrap().iter().all(|v| *v > 0.0));
    assert!(f.field("phi").unwrap().iter().all(|v| *v > 0.0));
}

#[test]
fn lattice_multipliers_are_universal() {
    for k in 0..EW_LATTICE.len() {
        let (p, a) = ew_case(k);
        let pr = EwProblem::with_defaults(p, a).unwrap();
        let r = pr.minimize(&EwOptions { restarts: 1, ..Default::default() }).unwrap();
        assert!(r.report.converged, "case {k}: {:?}", r.report);
        let m = recover_multipliers(&pr, &r).unwrap();
        assert!((m.xi1 + 1.0).abs() < 1e-3 && (m.xi2 - 4.0).abs() < 1e-3, "case {k}: {m:?}");
        let rep = ew_asymptotics_report(&r, &p, &a).unwrap();
        assert!(rep.pass, "case {k}: {rep:#?}");
    }
}
