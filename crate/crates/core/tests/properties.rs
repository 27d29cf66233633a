use std::f64::consts::PI;

use hyperwave::exec::Execution;
use hyperwave::modes::{sigma_values, to_dimensionless, to_x, ModeParameters, PhysicalUnits};
use hyperwave::ode::IntegratorConfig;
use hyperwave::opalg::{BesselExpr, CoeffPoly, DiffOperator, Symbol, SymbolValues};
use hyperwave::solutions::{evaluate_jets, orders, Branch, Class, SolutionFamily};
use hyperwave::special::{bessel_j, bessel_j_derivative, ComplexOrder};
use hyperwave::verify::{flat_limit_residual, integrate_and_compare, residuals, GridSpec, SystemId};
use num_complex::Complex64;
use proptest::prelude::*;

// ---------------------------------------------------------------- generators

fn monomial_term() -> impl Strategy<Value = CoeffPoly> {
    (-3i64..=3, -3i64..=3, 0usize..7, -2i32..=2, -3i32..=3, -2i32..=2).prop_map(|(re, im, s, e, k, n)| {
        let c = CoeffPoly::int(re) + CoeffPoly::i() * CoeffPoly::int(im);
        c * CoeffPoly::sym_pow(Symbol::ALL[s], e) * CoeffPoly::exp_z(k) * CoeffPoly::x_pow(n)
    })
}

fn poly() -> impl Strategy<Value = CoeffPoly> {
    prop::collection::vec(monomial_term(), 0..4)
        .prop_map(|ts| ts.into_iter().fold(CoeffPoly::zero(), |acc, t| acc + t))
}

fn operator() -> impl Strategy<Value = DiffOperator> {
    prop::collection::vec((0usize..=3, monomial_term()), 0..4).prop_map(|ts| {
        ts.into_iter()
            .fold(DiffOperator::zero(), |acc, (o, c)| acc + DiffOperator::term(o, c))
    })
}

fn values() -> SymbolValues {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    SymbolValues {
        sigma: c(0.7, -0.2),
        energy: c(0.3, 0.0),
        mass: c(1.4, 0.0),
        eps: c(1.7, 0.0),
        a: c(0.6, 0.0),
        b: c(-0.35, 0.0),
        gamma: c(0.8, 0.0),
    }
}

// ------------------------------------------------------------------- algebra

proptest! {
    #[test]
    fn coefficient_ring_axioms(p in poly(), q in poly(), r in poly()) {
        prop_assert_eq!(&p + &q, &q + &p);
        prop_assert_eq!(&p * &q, &q * &p);
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert!((&p - &p).is_zero());
        prop_assert_eq!(&p * &CoeffPoly::one(), p.clone());
        // d/dz is a derivation
        prop_assert_eq!((&p * &q).derive(), &(&p.derive() * &q) + &(&p * &q.derive()));
    }

    #[test]
    fn composition_is_associative_and_bilinear(a in operator(), b in operator(), c in operator()) {
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
        prop_assert_eq!(a.compose(&(&b + &c)), &a.compose(&b) + &a.compose(&c));
        prop_assert_eq!((&a + &b).compose(&c), &a.compose(&c) + &b.compose(&c));
        prop_assert_eq!(DiffOperator::identity().compose(&a), a.clone());
    }

    /// `(D ∘ B) f` agrees with a finite-difference derivative of `B f` on
    /// `f = e^{λz} z^m`.
    #[test]
    fn composition_matches_numeric_derivative(
        b in operator(),
        lam_re in -1.0f64..1.0,
        lam_im in -1.0f64..1.0,
        m in 0u32..3,
        z in -0.8f64..0.8,
    ) {
        let vals = values();
        let lam = Complex64::new(lam_re, lam_im);
        // jets of e^{λz} z^m by Leibniz
        let jet = |z: f64| -> Vec<Complex64> {
            let e = (lam * z).exp();
            (0..6usize)
                .map(|j| {
                    let mut s = Complex64::new(0.0, 0.0);
                    let mut binom = 1.0;
                    for i in 0..=j.min(m as usize) {
                        let falling: f64 = (0..i).map(|t| (m as usize - t) as f64).product();
                        let zpow = z.powi(m as i32 - i as i32);
                        s += binom * falling * zpow * lam.powi((j - i) as i32);
                        binom = binom * (j - i) as f64 / (i + 1) as f64;
                    }
                    s * e
                })
                .collect()
        };
        let g = |z: f64| b.apply_at(&vals, z, &jet(z));
        let h = 1e-3;
        let fd = (g(z - 2.0 * h) - 8.0 * g(z - h) + 8.0 * g(z + h) - g(z + 2.0 * h)) / (12.0 * h);
        let exact = DiffOperator::d().compose(&b).apply_at(&vals, z, &jet(z));
        let scale = 1.0 + exact.norm() + g(z).norm();
        prop_assert!((fd - exact).norm() <= 1e-6 * scale, "fd {fd} exact {exact}");
    }

    /// Any order of rule application reaches the same normal form.
    #[test]
    fn rewriting_is_confluent(
        spec in prop::collection::vec((-3i32..=4, 0u32..=2, monomial_term()), 1..4),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 200),
    ) {
        let base = CoeffPoly::sym(Symbol::Sigma);
        let mut e = BesselExpr::zero(base.clone());
        for (k, d, c) in spec {
            let mut t = BesselExpr::j_shift(base.clone(), k).scale(&c);
            for _ in 0..d {
                t = t.euler();
            }
            e = e.plus(&t).unwrap();
        }
        let reference = e.normalize();
        let mut cur = e;
        let mut steps = 0;
        while !cur.is_normal() {
            let redexes = cur.redexes();
            let (k, d, rule) = redexes[picks[steps % picks.len()].index(redexes.len())];
            cur = cur.rewrite_once(k, d, rule).unwrap();
            steps += 1;
            prop_assert!(steps < 10_000);
        }
        prop_assert_eq!(cur, reference);
    }
}

// ----------------------------------------------------------- special kernel

fn ord(nu: Complex64) -> ComplexOrder {
    ComplexOrder::new(nu).unwrap()
}

proptest! {
    #[test]
    fn bessel_conjugation_symmetry(
        nre in -4.0f64..4.0, nim in -4.0f64..4.0, r in 0.05f64..15.0, th in -3.1f64..3.1,
    ) {
        let nu = Complex64::new(nre, nim);
        let x = Complex64::from_polar(r, th);
        let a = bessel_j(ord(nu.conj()), x.conj()).unwrap();
        let b = bessel_j(ord(nu), x).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-15 * b.norm());
    }

    #[test]
    fn three_term_recurrence_on_locus(sigma in -3.0f64..3.0, nre in -2.0f64..2.0, r in 0.05f64..5.0) {
        let nu = Complex64::new(nre, -sigma);
        let x = Complex64::new(0.0, r);
        let lo = bessel_j(ord(nu - 1.0), x).unwrap();
        let mid = bessel_j(ord(nu), x).unwrap();
        let hi = bessel_j(ord(nu + 1.0), x).unwrap();
        let rhs = 2.0 * nu / x * mid;
        let scale = lo.norm() + hi.norm() + rhs.norm();
        prop_assert!((lo + hi - rhs).norm() <= 1e-12 * scale);
    }

    #[test]
    fn wronskian_on_locus(sigma in -3.0f64..3.0, nre in -2.0f64..2.0, r in 0.05f64..5.0) {
        let nu = Complex64::new(nre, -sigma);
        let s = (PI * nu).sin();
        prop_assume!(s.norm() > 1e-6);
        let x = Complex64::new(0.0, r);
        let w = bessel_j(ord(nu), x).unwrap() * bessel_j_derivative(ord(-nu), x).unwrap()
            - bessel_j_derivative(ord(nu), x).unwrap() * bessel_j(ord(-nu), x).unwrap();
        let want = -2.0 * s / (PI * x);
        prop_assert!((w - want).norm() <= 1e-10 * want.norm(), "{w} vs {want}");
    }

    #[test]
    fn half_integer_closed_forms(x in 0.1f64..5.0) {
        let z = Complex64::new(x, 0.0);
        let amp = (2.0 / (PI * x)).sqrt();
        let cases = [
            (0.5, amp * x.sin()),
            (-0.5, amp * x.cos()),
            (1.5, amp * (x.sin() / x - x.cos())),
        ];
        for (nu, want) in cases {
            let got = bessel_j(ComplexOrder::real(nu).unwrap(), z).unwrap();
            prop_assert!((got - want).norm() <= 1e-12 * amp.max(1.0), "nu {nu}: {got} vs {want}");
        }
    }
}

// ------------------------------------------------------------------- modes

proptest! {
    #[test]
    fn sigma_pair_squares_to_two_em(e in -2.0f64..2.0, m in 0.1f64..5.0) {
        let (p, q) = sigma_values(e, m);
        prop_assert_eq!(p, -q);
        prop_assert!((p * p - 2.0 * m * e).norm() <= 1e-14 * (1.0 + (2.0 * m * e).abs()));
    }

    #[test]
    fn bessel_variable_is_monotone(a in -3.0f64..3.0, b in -3.0f64..3.0, z in -5.0f64..3.0, dz in 1e-3f64..2.0) {
        prop_assume!(a.hypot(b) > 1e-6);
        let p = ModeParameters { a, b, ..Default::default() };
        let x0 = to_x(&p, z).unwrap();
        let x1 = to_x(&p, z + dz).unwrap();
        prop_assert_eq!(x0.re, 0.0);
        prop_assert!(x1.im > x0.im && x0.im > 0.0);
    }

    #[test]
    fn dimensionless_parameters_scale_with_rho(rho in 0.1f64..1e3, lam in 0.1f64..10.0, p1 in -1.0f64..1.0) {
        let u = PhysicalUnits { rho, hbar: 1.3, c: 2.0, epsilon_phys: 0.4, m_phys: 0.9, p1, p2: 0.25 };
        let a = to_dimensionless(&u).unwrap();
        let b = to_dimensionless(&u.with_rho(lam * rho)).unwrap();
        for (x, y) in [(a.energy, b.energy), (a.mass, b.mass), (a.a, b.a), (a.b, b.b)] {
            prop_assert!((y - lam * x).abs() <= 1e-13 * (1.0 + y.abs()));
        }
    }
}

// --------------------------------------------------------------- solutions

fn mode() -> impl Strategy<Value = ModeParameters> {
    (0.05f64..1.0, 0.5f64..5.0, -2.0f64..2.0, -2.0f64..2.0, 0.3f64..3.0)
        .prop_filter("nonzero momentum", |(_, _, a, b, _)| a.hypot(*b) > 1e-2)
        .prop_map(|(energy, mass, a, b, gamma)| ModeParameters { energy, mass, a, b, gamma, sigma: None })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn second_order_system_ignores_gamma(p in mode(), class in prop_oneof![Just(Class::I), Just(Class::II)]) {
        for branch in [Branch::Plus, Branch::Minus] {
            let fam = SolutionFamily::nonzero(class, branch);
            let grid = GridSpec { z_min: -3.0, z_max: 1.0, n: 21 };
            let r = residuals(&p, &fam, SystemId::SecondOrder, &grid).unwrap();
            prop_assert!(r.max_rel_residual <= 1e-9, "{}", r.max_rel_residual);
        }
    }

    #[test]
    fn solution_classes_are_independent(p in mode(), z in -3.0f64..1.0, zero in any::<bool>()) {
        let (one, two) = if zero {
            (SolutionFamily::zero(Class::I), SolutionFamily::zero(Class::II))
        } else {
            (SolutionFamily::nonzero(Class::I, Branch::Plus), SolutionFamily::nonzero(Class::II, Branch::Plus))
        };
        prop_assume!(!orders(&p, &two).unwrap().degenerate);
        let f = evaluate_jets(&p, &one, z).unwrap().psi1;
        let g = evaluate_jets(&p, &two, z).unwrap().psi1;
        let w = f[0] * g[1] - f[1] * g[0];
        prop_assert!(w.norm() > 1e-8, "{w}");
    }
}

#[test]
fn integrator_deviation_shrinks_with_tolerance() {
    let p = ModeParameters::default();
    for fam in [
        SolutionFamily::nonzero(Class::I, Branch::Plus),
        SolutionFamily::nonzero(Class::II, Branch::Minus),
    ] {
        let dev: Vec<f64> = [1e-8, 1e-10, 1e-12]
            .iter()
            .map(|&rel_tol| {
                let cfg = IntegratorConfig {
                    rel_tol,
                    abs_tol: rel_tol * 1e-2,
                    max_step: 0.1,
                };
                integrate_and_compare(&p, &fam, -2.0, 0.5, &cfg).unwrap()
            })
            .collect();
        assert!(dev[1] < dev[0] && dev[2] < dev[1], "{fam}: {dev:?}");
    }
}

#[test]
fn flat_limit_residual_decreases_with_radius() {
    for (p1, p2) in [(0.6, 0.8), (0.1, 0.2), (1.2, 0.9)] {
        let u = PhysicalUnits {
            rho: 1.0,
            hbar: 1.0,
            c: 1.0,
            epsilon_phys: 1.0,
            m_phys: 1.0,
            p1,
            p2,
        };
        let r: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&rho| flat_limit_residual(&u, rho).unwrap())
            .collect();
        assert!(r[1] < r[0] && r[2] < r[1], "P = ({p1}, {p2}): {r:?}");
    }
}

#[test]
fn parallel_and_sequential_grids_agree() {
    use hyperwave::solutions::evaluate_grid_with;
    let p = ModeParameters::default();
    let fam = SolutionFamily::nonzero(Class::I, Branch::Plus);
    let seq = evaluate_grid_with(&p, &fam, -3.0, 1.0, 257, Execution::Sequential).unwrap();
    let par = evaluate_grid_with(&p, &fam, -3.0, 1.0, 257, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}
