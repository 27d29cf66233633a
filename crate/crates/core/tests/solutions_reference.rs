#![allow(clippy::excessive_precision)]

//! Closed forms against an independent 30-digit series evaluation (mpmath,
//! computed offline from the defining formulas).

use hyperwave::modes::ModeParameters;
use hyperwave::solutions::{evaluate, Branch, Class, SolutionFamily};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check(params: &ModeParameters, fam: SolutionFamily, z: f64, want: [Complex64; 3]) {
    let t = evaluate(params, &fam, z).unwrap();
    for (got, want) in [t.psi1, t.psi2, t.psi3].into_iter().zip(want) {
        let e = (got - want).norm() / want.norm();
        assert!(e < 1e-12, "{fam} z={z}: got {got}, want {want}, rel {e:e}");
    }
}

#[test]
fn helicity_family_class_one() {
    let p = ModeParameters {
        energy: 0.1,
        mass: 1.0,
        a: 0.3,
        b: 0.4,
        gamma: 1.0,
        sigma: Some(c(0.2f64.sqrt(), 0.0)),
    };
    check(
        &p,
        SolutionFamily::nonzero(Class::I, Branch::Plus),
        0.0,
        [
            c(-0.029250446777133937771, -0.27548067198608360532),
            c(2.269208261896829084, 1.005279594428083609),
            c(0.22581384963399519783, 2.1141487402239983001),
        ],
    );
}

#[test]
fn helicity_family_class_two_minus() {
    let p = ModeParameters {
        energy: 0.1,
        mass: 1.0,
        a: 0.3,
        b: 0.4,
        gamma: 1.0,
        sigma: None,
    };
    check(
        &p,
        SolutionFamily::nonzero(Class::II, Branch::Minus),
        -1.5,
        [
            c(0.46544957746573592973, 0.067918941491838917573),
            c(-0.056857531028297933845, -0.10299446135925932101),
            c(0.001991323012889715568, 0.0022331999407957082118),
        ],
    );
}

#[test]
fn zero_helicity_families() {
    let p = ModeParameters {
        energy: 0.75,
        mass: 1.0,
        a: 0.3,
        b: 0.4,
        gamma: std::f64::consts::FRAC_1_SQRT_2,
        sigma: None,
    };
    check(
        &p,
        SolutionFamily::zero(Class::I),
        0.5,
        [
            c(-0.16711186759865805132, 0.69802117588005590217),
            c(0.037890458945112985295, -1.6606049819174638489),
            c(0.62330900591722941171, 0.35587332214112738187),
        ],
    );
    let p = ModeParameters {
        energy: 0.2,
        a: -1.2,
        b: 0.7,
        ..p
    };
    check(
        &p,
        SolutionFamily::zero(Class::II),
        -0.5,
        [
            c(0.35175111875996558712, -0.28952085618752847875),
            c(-0.86576510728531213203, -0.32002091486056191971),
            c(0.078876412214031366078, 0.44869776833932344102),
        ],
    );
}
