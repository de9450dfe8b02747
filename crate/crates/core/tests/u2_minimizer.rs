use approx::assert_abs_diff_eq;
use bpswall::abelian_wall::solve_magnetic_to_magnetic;
use bpswall::u2_minimizer::*;
use bpswall::wspace::{build_measure, build_measure_with, WeightBlend};
use bpswall::{Error, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-8;

fn asym(a1: f64, b1: f64, a2: f64, b2: f64) -> U2Asymptotics {
    U2Asymptotics { alpha1: a1, alpha2: a2, beta1: b1, beta2: b2 }
}

fn problem(e: f64, gamma: f64, xi: f64, a: U2Asymptotics) -> U2Problem {
    U2Problem::with_defaults(U2Params::new(e, gamma, xi).unwrap(), a).unwrap()
}

fn small_problem(gamma: f64, a: U2Asymptotics) -> U2Problem {
    let p = U2Params::new(1.0, gamma, 2.0).unwrap();
    let g = Grid::symmetric(12.0, 801).unwrap();
    U2Problem::new(p, a, &g, build_measure(&g, 1.0).unwrap()).unwrap()
}

#[test]
fn kappa_examples() {
    assert_eq!(kappa_constants(&asym(1.0, 1.0, 1.0, 1.0), 1.0), (2.0, 2.0));
    let a = asym(2.0, 1.0, 0.5, 0.5);
    assert_eq!(kappa_constants(&a, 2.0).0, 2.5);
    let (k1, k2) = kappa_constants(&a, 1.7);
    let (s1, s2) = kappa_constants(&a.swapped(), 1.7);
    assert_eq!((k1, k2), (s2, s1));
}

#[test]
fn inadmissible_data_is_rejected() {
    let p = U2Params::new(1.0, 3.0, 1.0).unwrap();
    let err = U2Problem::with_defaults(p, asym(-1.0, -1.0, 0.5, 0.5)).unwrap_err();
    match err {
        Error::Inadmissible(msg) => assert!(msg.contains("κ₁")),
        other => panic!("{other:?}"),
    }
    assert!(U2Params::new(1.0, 0.0, 1.0).is_err());
}

#[test]
fn value_at_zero_and_constant_shift() {
    let pr = small_problem(1.5, asym(1.0, 0.5, 0.8, 1.2));
    let n = pr.grid.n();
    let z = vec![0.0; n];
    let (i1, i2) = pr.exponential_integrals(&z, &z);
    let v0 = pr.value(&z, &z).unwrap();
    assert_abs_diff_eq!(v0, i1 + i2, epsilon = 1e-12 * v0);
    assert!(v0 > 0.0);
    assert_eq!(pr.value_relative(&z, &z).unwrap(), 0.0);
    assert_eq!(pr.value_offset(), v0);
    let (k1, k2) = pr.kappa;
    for c in [-0.7, 0.3, 1.1] {
        let s = vec![c; n];
        let dv = pr.value(&s, &s).unwrap() - v0;
        let want = (c as f64).exp_m1() * (i1 + i2) - c * (k1 + k2) / 2.0;
        assert_abs_diff_eq!(dv, want, epsilon = 1e-10);
    }
}

#[test]
fn gradient_at_zero() {
    let pr = small_problem(1.5, asym(1.0, 0.5, 0.8, 1.2));
    let n = pr.grid.n();
    let z = vec![0.0; n];
    let (g1, g2) = pr.gradient(&z, &z).unwrap();
    let lambda = pr.params.lambda();
    for j in 0..n {
        let w = pr.weights[j];
        assert_abs_diff_eq!(g1[j], lambda * pr.a1[j].exp() - pr.src1[j] / w, epsilon = 1e-10);
        assert_abs_diff_eq!(g2[j], lambda * pr.a2[j].exp() - pr.src2[j] / w, epsilon = 1e-10);
    }
    // pairing with constants gives the constraint misfit
    let (i1, _) = pr.exponential_integrals(&z, &z);
    let pair: f64 = g1.iter().zip(&pr.weights).map(|(g, w)| g * w).sum();
    assert_abs_diff_eq!(pair, i1 - pr.kappa.0 / 2.0, epsilon = 1e-10);
}

#[test]
fn gradient_matches_finite_differences() {
    let pr = small_problem(2.0, asym(1.0, 0.5, 0.8, 1.2));
    let n = pr.grid.n();
    let h = pr.grid.h();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let e1: Vec<f64> = pr.grid.map(|x| 0.3 * (0.5 * x).sin());
    let e2: Vec<f64> = pr.grid.map(|x| -0.2 * (0.3 * x).cos());
    let (g1, g2) = pr.gradient(&e1, &e2).unwrap();
    for _ in 0..5 {
        let mut d1: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut d2: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = (d1.iter().chain(&d2).map(|v| v * v).sum::<f64>() * h).sqrt();
        d1.iter_mut().chain(d2.iter_mut()).for_each(|v| *v /= norm);
        let eps = 1e-5;
        let shift = |s: f64| {
            let a: Vec<f64> = e1.iter().zip(&d1).map(|(e, d)| e + s * d).collect();
            let b: Vec<f64> = e2.iter().zip(&d2).map(|(e, d)| e + s * d).collect();
            pr.value(&a, &b).unwrap()
        };
        let fd = (shift(eps) - shift(-eps)) / (2.0 * eps);
        let gd: f64 = (0..n).map(|j| pr.weights[j] * (g1[j] * d1[j] + g2[j] * d2[j])).sum();
        assert!((fd - gd).abs() / gd.abs().max(1e-12) < 1e-6, "fd {fd} gd {gd}");
    }
}

#[test]
fn symmetric_data_gives_equal_components() {
    let pr = problem(1.0, 1.0, 1.0, asym(1.0, 1.0, 1.0, 1.0));
    let r = pr.minimize(None, TOL).unwrap();
    assert!(r.report.converged, "{:?}", r.report);
    for (a, b) in r.eta1.iter().zip(&r.eta2) {
        assert!((a - b).abs() < 1e-6);
    }
    assert_abs_diff_eq!(r.integral_q1_sq, 2.0, epsilon = 2e-3);
    assert_abs_diff_eq!(r.integral_q2_sq, 2.0, epsilon = 2e-3);
    assert!(r.identity_residuals.iter().all(|v| *v < 1e-4));
}

#[test]
fn asymmetric_integrals() {
    let pr = problem(1.0, 2.0, 1.0, asym(2.0, 1.0, 1.0, 1.0));
    let r = pr.minimize(None, TOL).unwrap();
    assert!(r.report.converged, "{:?}", r.report);
    assert!((r.integral_q1_sq / 2.75 - 1.0).abs() < 1e-3, "{}", r.integral_q1_sq);
    assert!((r.integral_q2_sq / 2.25 - 1.0).abs() < 1e-3, "{}", r.integral_q2_sq);
    let rep = u2_asymptotics_report(&r, &pr.params, &pr.asym).unwrap();
    assert!(rep.pass, "{rep:#?}");
}

#[test]
fn unique_minimizer_from_random_starts() {
    let pr = small_problem(1.5, asym(1.0, 0.5, 0.8, 1.2));
    let base = pr.minimize(None, TOL).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..2 {
        let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let i1 = pr.grid.map(|x| c[0] + c[1] * (x / 4.0).tanh());
        let i2 = pr.grid.map(|x| c[2] + c[3] * (-(x * x) / 8.0).exp());
        let r = pr.minimize(Some((&i1, &i2)), TOL).unwrap();
        assert!(r.report.converged);
        for k in 0..pr.grid.n() {
            assert!((r.eta1[k] - base.eta1[k]).abs() < 1e-6);
            assert!((r.eta2[k] - base.eta2[k]).abs() < 1e-6);
        }
    }
}

#[test]
fn swap_symmetry() {
    let a = asym(1.0, 0.5, 0.8, 1.2);
    let r = small_problem(1.5, a).minimize(None, TOL).unwrap();
    let s = small_problem(1.5, a.swapped()).minimize(None, TOL).unwrap();
    for k in 0..r.eta1.len() {
        assert!((r.eta1[k] - s.eta2[k]).abs() < 1e-6);
        assert!((r.eta2[k] - s.eta1[k]).abs() < 1e-6);
    }
}

#[test]
fn symmetric_reduction_matches_abelian_wall() {
    let pr = problem(1.0, 1.0, 1.0, asym(1.0, 1.0, 1.0, 1.0));
    let r = pr.minimize(None, TOL).unwrap();
    let g = pr.grid;
    let lambda = pr.params.lambda();
    // locate the maximum of u by parabolic interpolation
    let (im, _) = r.u1.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    let (ym, y0, yp) = (r.u1[im - 1], r.u1[im], r.u1[im + 1]);
    let t = 0.5 * (ym - yp) / (ym - 2.0 * y0 + yp);
    let x0 = g.x(im) + t * g.h();
    let u0 = y0 - 0.25 * (ym - yp) * t;
    let wall = solve_magnetic_to_magnetic(2.0 * lambda, x0, u0, &g).unwrap();
    let u = wall.profile.field("u").unwrap();
    let mut worst = 0.0f64;
    for k in 0..g.n() {
        if g.x(k).abs() < 6.0 {
            worst = worst.max((u[k] - r.u1[k]).abs());
        }
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn report_flags_tails_and_flatness() {
    let pr = problem(1.0, 1.0, 1.0, asym(1.0, 1.0, 1.0, 1.0));
    let r = pr.minimize(None, TOL).unwrap();
    let rep = u2_asymptotics_report(&r, &pr.params, &pr.asym).unwrap();
    assert!(rep.pass, "{rep:#?}");
    assert_eq!(rep.tails.len(), 4);
    for t in &rep.tails {
        assert!(t.quadratic_error < 0.02);
    }
    assert!(rep.flatness.iter().all(|f| *f < 1e-6));
}

#[test]
fn weight_blend_does_not_change_the_minimizer() {
    let p = U2Params::new(1.0, 1.5, 2.0).unwrap();
    let a = asym(1.0, 0.5, 0.8, 1.2);
    let g = Grid::symmetric(12.0, 801).unwrap();
    let runs: Vec<U2Result> = [WeightBlend::Quadratic, WeightBlend::Quartic]
        .into_iter()
        .map(|b| U2Problem::new(p, a, &g, build_measure_with(&g, 1.0, b).unwrap()).unwrap().minimize(None, TOL).unwrap())
        .collect();
    for k in 0..g.n() {
        assert!((runs[0].eta1[k] - runs[1].eta1[k]).abs() < 1e-6);
        assert!((runs[0].eta2[k] - runs[1].eta2[k]).abs() < 1e-6);
    }
}
