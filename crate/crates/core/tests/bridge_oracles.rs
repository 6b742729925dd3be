mod common;

use std::f64::consts::PI;

use common::{laguerre, square_grid};
use moyalrel::phasegrid::GridField;
use moyalrel::starcalc::{fock_basis, quantize_polynomial, weyl_quantize, weyl_symbol, OperatorMatrix, Poly, Symbol};
use moyalrel::wigner::{cross_wigner, negativity_volume};
use moyalrel::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn fock_projectors_have_laguerre_symbols() {
    let g = square_grid(128);
    let dim = 8;
    let basis = fock_basis(g, dim, 1.0).unwrap();
    for n in 0..dim {
        let sym = weyl_symbol(&OperatorMatrix::unit(dim, n, n, basis.kind()), &basis).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let expect = GridField::from_real_fn(g, |p, q| {
            let r2 = p * p + q * q;
            2.0 * sign * (-r2).exp() * laguerre(n, 2.0 * r2)
        });
        let err = sym.field().max_abs_diff(&expect);
        assert!(err < 1e-10, "n = {n}: {err:e}");
    }
}

#[test]
fn first_excited_state_negativity() {
    let g = square_grid(256);
    let basis = fock_basis(g, 2, 1.0).unwrap();
    let line = basis.line(1);
    let w = cross_wigner(&line, &line).unwrap();
    let expect = 2.0 * (-0.5f64).exp() - 1.0;
    let got = negativity_volume(&w);
    // Lattice sum of a function with a kink along the nodal circle.
    assert!((got - expect).abs() < 5e-3 * expect, "{got} vs {expect}");
    assert!((w.field().min_real() + 1.0 / PI).abs() < 1e-10);
}

#[test]
fn quantized_oscillator_has_odd_integer_spectrum() {
    let dim = 24;
    let h = Poly::q().mul(&Poly::q()).add(&Poly::p().mul(&Poly::p()));
    let m = quantize_polynomial(&h, dim, 1.0, 1.0);
    let a = DMatrix::from_fn(dim, dim, |i, j| m.get(i, j));
    let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    for (n, e) in ev.iter().enumerate() {
        assert!((e - (2 * n + 1) as f64).abs() < 1e-10, "{n}: {e}");
    }
}

#[test]
fn quartic_symbol_spectrum_matches_direct_matrix() {
    // q^4 + p^2 quantized through the bridge agrees with powers of the
    // ladder-operator matrices on a padded space.
    let dim = 20;
    let poly = Poly::monomial(4, 0, C64::new(1.0, 0.0)).add(&Poly::monomial(0, 2, C64::new(1.0, 0.0)));
    let m = quantize_polynomial(&poly, dim, 1.0, 1.0);
    let pad = dim + 6;
    let q = OperatorMatrix::position(pad, 1.0);
    let p = OperatorMatrix::momentum(pad, 1.0, 1.0);
    let direct = q.pow(4).add(&p.pow(2)).unwrap().truncate(dim);
    assert!(m.max_abs_diff(&direct) < 1e-10);
    let to_na = |o: &OperatorMatrix| DMatrix::from_fn(dim, dim, |i, j| o.get(i, j));
    let (e1, e2) = (to_na(&m).symmetric_eigenvalues(), to_na(&direct).symmetric_eigenvalues());
    let mut e1: Vec<f64> = e1.iter().copied().collect();
    let mut e2: Vec<f64> = e2.iter().copied().collect();
    e1.sort_by(f64::total_cmp);
    e2.sort_by(f64::total_cmp);
    for (a, b) in e1.iter().zip(&e2) {
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
    }
}

fn small_poly() -> impl Strategy<Value = Poly> {
    proptest::collection::vec(((0u32..3, 0u32..3), -1.0f64..1.0, -1.0f64..1.0), 1..5)
        .prop_map(|terms| Poly::from_terms(terms.into_iter().map(|(ab, re, im)| (ab, C64::new(re, im)))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quantization_respects_conjugation_and_linearity(a in small_poly(), b in small_poly(), s in -2.0f64..2.0) {
        let g = square_grid(64);
        let basis = fock_basis(g, 10, 1.0).unwrap();
        let qa = weyl_quantize(&Symbol::polynomial(g, a.clone()), &basis).unwrap();
        let qac = weyl_quantize(&Symbol::polynomial(g, a.conj()), &basis).unwrap();
        prop_assert!(qac.max_abs_diff(&qa.adjoint()) < 1e-10);
        let qb = weyl_quantize(&Symbol::polynomial(g, b.clone()), &basis).unwrap();
        let combo = weyl_quantize(&Symbol::polynomial(g, a.add(&b.scale(C64::new(s, 0.0)))), &basis).unwrap();
        let expect = qa.add(&qb.scale(C64::new(s, 0.0))).unwrap();
        prop_assert!(combo.max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn star_product_maps_to_operator_product(a in small_poly(), b in small_poly()) {
        let dim = 12;
        let lhs = quantize_polynomial(&a.star(&b, 1.0), dim, 1.0, 1.0);
        let pad = dim + 5;
        let rhs = quantize_polynomial(&a, pad, 1.0, 1.0).matmul(&quantize_polynomial(&b, pad, 1.0, 1.0)).unwrap().truncate(dim);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }
}
