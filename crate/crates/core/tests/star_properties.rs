mod common;

use common::square_grid;
use moyalrel::phasegrid::GridField;
use moyalrel::starcalc::{anti_moyal_bracket, moyal_bracket, poisson_bracket, star, Poly, Symbol};
use moyalrel::C64;
use proptest::prelude::*;

fn poly(max_degree: u32) -> impl Strategy<Value = Poly> {
    proptest::collection::vec(((0..=max_degree, 0..=max_degree), -1.0f64..1.0, -1.0f64..1.0), 1..6).prop_map(
        move |terms| {
            Poly::from_terms(
                terms
                    .into_iter()
                    .filter(|((a, b), _, _)| a + b <= max_degree)
                    .map(|(ab, re, im)| (ab, C64::new(re, im))),
            )
        },
    )
}

fn close(a: &Poly, b: &Poly, tol: f64) -> bool {
    a.sub(b).terms().all(|(_, c)| c.norm() <= tol)
}

proptest! {
    #[test]
    fn star_is_associative(a in poly(2), b in poly(2), c in poly(2), hbar in 0.1f64..2.0) {
        let left = a.star(&b, hbar).star(&c, hbar);
        let right = a.star(&b.star(&c, hbar), hbar);
        prop_assert!(close(&left, &right, 1e-10));
    }

    #[test]
    fn conjugation_reverses_products(a in poly(3), b in poly(3), hbar in 0.1f64..2.0) {
        let left = a.star(&b, hbar).conj();
        let right = b.conj().star(&a.conj(), hbar);
        prop_assert!(close(&left, &right, 1e-10));
    }

    #[test]
    fn quadratic_moyal_bracket_is_poisson(a in poly(2), b in poly(3), hbar in 0.1f64..2.0) {
        let comm = a.star(&b, hbar).sub(&b.star(&a, hbar)).scale(C64::new(0.0, -1.0 / hbar));
        prop_assert!(close(&comm, &a.poisson(&b), 1e-10));
    }

    #[test]
    fn grid_polynomial_product_is_sampled_exactly(a in poly(2), b in poly(2)) {
        let g = square_grid(16);
        let r = star(&Symbol::polynomial(g, a.clone()), &Symbol::polynomial(g, b.clone())).unwrap();
        let prod = a.star(&b, 1.0);
        let expect = GridField::from_fn(g, |p, q| prod.eval(p, q));
        prop_assert!(r.field().max_abs_diff(&expect) <= 1e-12 * expect.max_abs().max(1.0));
    }

    #[test]
    fn momentum_symbols_commute(w1 in 0.1f64..2.0, w2 in 0.1f64..2.0) {
        let g = square_grid(32);
        let f = Symbol::momentum_real(g, move |p| (w1 * p).cos());
        let h = Symbol::momentum_real(g, move |p| (1.0 + w2 * p * p).sqrt());
        prop_assert_eq!(moyal_bracket(&f, &h).unwrap().field().max_abs(), 0.0);
        let anti = anti_moyal_bracket(&f, &h).unwrap();
        let expect = GridField::from_fn(g, |p, _| C64::new(0.0, -2.0) * (w1 * p).cos() * (1.0 + w2 * p * p).sqrt());
        prop_assert!(anti.field().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn constants_scale_exactly(c in -3.0f64..3.0, d in -3.0f64..3.0) {
        let g = square_grid(16);
        let a = Symbol::from_fn(g, |p, q| C64::new((-(p * p + q * q)).exp(), p * q * 0.01));
        let k = Symbol::constant(g, C64::new(c, d));
        let r = star(&k, &a).unwrap();
        prop_assert_eq!(r.field(), &a.field().scale(C64::new(c, d)));
    }
}

#[test]
fn moyal_bracket_of_q_and_p_is_one() {
    let g = square_grid(16);
    let b = moyal_bracket(&Symbol::q(g), &Symbol::p(g)).unwrap();
    let one = GridField::constant(g, C64::new(1.0, 0.0));
    assert!(b.field().max_abs_diff(&one) < 1e-14);
    let pb = poisson_bracket(&Symbol::q(g), &Symbol::p(g)).unwrap();
    assert!(pb.field().max_abs_diff(&one) < 1e-14);
}

#[test]
fn moyal_minus_poisson_is_third_order_for_cubics() {
    for hbar in [1.0, 0.5, 0.25] {
        let a = Poly::monomial(3, 0, C64::new(1.0, 0.0));
        let b = Poly::monomial(0, 3, C64::new(1.0, 0.0));
        let m = a.star(&b, hbar).sub(&b.star(&a, hbar)).scale(C64::new(0.0, -1.0 / hbar));
        let gap = m.sub(&a.poisson(&b));
        // Only the third-order term survives: -(hbar^2 / 24) * 6 * 6.
        let expect = -hbar * hbar / 24.0 * 36.0;
        assert!((gap.coefficient(0, 0).re - expect).abs() < 1e-12, "{hbar}: {:?}", gap.coefficient(0, 0));
    }
}
