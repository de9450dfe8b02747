mod common;

use bpswall::abelian_wall::{solve_higgs_to_magnetic, AbelianHiggsParams};
use bpswall::ew_minimizer::EwProblem;
use bpswall::liouville_cs::SolutionFamily;
use bpswall::u2_minimizer::{U2Asymptotics, U2Params, U2Problem};
use bpswall::verify::*;
use bpswall::wspace::build_measure;
use bpswall::{Error, Grid, Result};

struct Quadratic {
    a: Vec<f64>,
    b: Vec<f64>,
    h: f64,
}

/// `h Σ (a x²/2 − b x)`.
impl Differentiable for Quadratic {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.h * x.iter().zip(&self.a).zip(&self.b).map(|((x, a), b)| 0.5 * a * x * x - b * x).sum::<f64>())
    }

    fn l2_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.iter().zip(&self.a).zip(&self.b).map(|((x, a), b)| a * x - b).collect())
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.h * a.iter().zip(b).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[test]
fn refinement_suite_is_second_order() {
    let reps = refinement_suite().unwrap();
    assert_eq!(reps.len(), 19);
    for r in &reps {
        assert!(r.pass, "{r:#?}");
        assert!(r.fine.checked > 0);
        let ratio = r.coarse.residual / r.fine.residual;
        assert!((3.5..4.5).contains(&ratio), "{}: ratio {ratio}", r.label);
    }
}

#[test]
fn exclusion_skips_vanishing_fields() {
    let p = AbelianHiggsParams::new(1.0, 1.0).unwrap();
    let g = Grid::symmetric(12.0, 4001).unwrap();
    let s = solve_higgs_to_magnetic(p.lambda(), &g, 0.0, -1.0).unwrap();
    let reps = check_ah_second_order(&s.profile, &p).unwrap();
    for r in &reps {
        assert!(r.excluded > 0);
        assert_eq!(r.excluded + r.checked, g.n() - 4);
        assert!(r.residual < 1e-5);
    }
}

#[test]
fn wrong_parameters_give_large_residuals() {
    let g = Grid::symmetric(8.0, 2001).unwrap();
    let p = AbelianHiggsParams::new(1.0, 1.0).unwrap();
    let s = solve_higgs_to_magnetic(p.lambda(), &g, 0.0, -1.0).unwrap();
    let wrong = AbelianHiggsParams::new(1.3, 1.0).unwrap();
    let reps = check_ah_second_order(&s.profile, &wrong).unwrap();
    assert!(reps.iter().any(|r| r.residual > 1e-2));
}

#[test]
fn family_mismatch_is_an_error() {
    let g = Grid::symmetric(5.0, 101).unwrap();
    let jp = SolutionFamily::jp(1.0, 0.0, 0.0).unwrap();
    assert!(matches!(check_cs_relativistic(&jp, &g), Err(Error::InvalidParameter(_))));
    let top = SolutionFamily::topological(1.0, 0.0, 0.5).unwrap();
    assert!(matches!(check_jp_nonrelativistic(&top, 1.0, &g), Err(Error::InvalidParameter(_))));
}

#[test]
fn closed_forms_converge_except_negative_kappa() {
    let coarse = Grid::symmetric(10.0, 4001).unwrap();
    let fine = Grid::symmetric(10.0, 8001).unwrap();
    let fams = [
        SolutionFamily::jp(1.0, 0.3, -0.2).unwrap(),
        SolutionFamily::topological(0.8, 0.0, 0.4).unwrap(),
        SolutionFamily::lump(1.5, -0.5, -1.0).unwrap(),
    ];
    for f in &fams {
        let r = refinement_check(&check_closed_form(f, &coarse).unwrap(), &check_closed_form(f, &fine).unwrap());
        assert!(r.pass, "{r:#?}");
    }
    // the negative-kappa closed form does not solve its equation
    let neg = SolutionFamily::jp(-1.0, 0.0, 0.0).unwrap();
    let r = refinement_check(&check_closed_form(&neg, &coarse).unwrap(), &check_closed_form(&neg, &fine).unwrap());
    assert!(!r.pass);
    assert!(r.fine.residual > 0.1);
}

#[test]
fn refinement_policy() {
    let mk = |r: f64, h: f64| ResidualReport {
        label: "t".into(),
        residual: r,
        h,
        excluded: 0,
        checked: 10,
        constant: r / (h * h),
        threshold: None,
        pass: true,
    };
    assert!(refinement_check(&mk(4e-6, 2e-3), &mk(1e-6, 1e-3)).pass);
    // first order
    assert!(!refinement_check(&mk(4e-6, 2e-3), &mk(2.5e-6, 1e-3)).pass);
    // rounding-level residuals
    assert!(refinement_check(&mk(1e-14, 2e-3), &mk(3e-14, 1e-3)).pass);
    assert!(refinement_check(&mk(0.0, 2e-3), &mk(0.0, 1e-3)).pass);
    assert!(!refinement_check(&mk(f64::NAN, 2e-3), &mk(1e-6, 1e-3)).pass);
    assert!(!mk(1.0, 0.1).with_threshold(0.5).pass);
}

#[test]
fn fd_harness_on_a_quadratic() {
    let n = 200;
    let q = Quadratic { a: (0..n).map(|i| 1.0 + i as f64 / 50.0).collect(), b: (0..n).map(|i| (i as f64).sin()).collect(), h: 0.05 };
    let x = vec![0.0; n];
    let rep = gradient_fd_harness(&q, &x, 20, 1e-5, 7).unwrap();
    assert_eq!(rep.errors.len(), 20);
    assert!(rep.worst <= 1e-10, "{}", rep.worst);
    assert!(gradient_fd_harness(&q, &x[1..], 1, 1e-5, 7).is_err());
}

#[test]
fn fd_harness_detects_a_wrong_gradient() {
    struct Off(Quadratic);
    impl Differentiable for Off {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn value(&self, x: &[f64]) -> Result<f64> {
            self.0.value(x)
        }
        fn l2_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.l2_gradient(x)?.iter().map(|g| 1.01 * g).collect())
        }
        fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
            self.0.inner(a, b)
        }
    }
    let q = Off(Quadratic { a: vec![2.0; 50], b: vec![1.0; 50], h: 0.1 });
    let rep = gradient_fd_harness(&q, &vec![0.3; 50], 5, 1e-5, 1).unwrap();
    assert!(rep.worst > 5e-3);
}

#[test]
fn fd_harness_u2_at_zero() {
    let p = U2Params::new(1.0, 1.5, 1.0).unwrap();
    let a = U2Asymptotics { alpha1: 1.0, alpha2: 0.8, beta1: 0.5, beta2: 1.2 };
    let g = Grid::symmetric(15.0, 1501).unwrap();
    let pr = U2Problem::new(p, a, &g, build_measure(&g, 1.0).unwrap()).unwrap();
    let rep = gradient_fd_harness(&pr, &vec![0.0; 2 * g.n()], 20, 1e-5, 11).unwrap();
    assert!(rep.worst < 1e-6, "{rep:?}");
}

#[test]
fn fd_harness_ew_lattice_at_zero() {
    for k in 0..common::EW_LATTICE.len() {
        let (p, a) = common::ew_case(k);
        let pr = EwProblem::with_defaults(p, a).unwrap();
        let n = pr.grid.n();
        let rep = gradient_fd_harness(&pr, &vec![0.0; 2 * n], 20, 1e-5, 5 + k as u64).unwrap();
        assert!(rep.worst < 1e-6, "case {k}: {rep:?}");
    }
}
