//! Weyl symbol calculus: Moyal star product, Moyal and anti-Moyal brackets,
//! the star square root and the bridge between symbols and operator matrices.

mod bridge;
mod poly;
mod symbol;

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

pub use bridge::{
    fock_basis, hermite_functions, projector, quantize_polynomial, weyl_quantize, weyl_symbol, Basis, BasisKind,
    OperatorMatrix, MAX_BRIDGE_DIM,
};
pub use poly::Poly;
pub use symbol::{MomentumFn, Parity, Symbol};
pub(crate) use symbol::MomentumSampler;

use crate::error::{Error, Result};
use crate::phasegrid::{dft_q, Direction, GridField, PhaseGrid};
use symbol::Form;

/// Largest grid accepted by the O(n^4) generic star product by default.
pub const GENERIC_STAR_LIMIT: usize = 128;

/// Sign of the anti-Moyal bracket relative to `(1/i hbar)(A*B + B*A)`.
pub const ANTI_MOYAL_SIGN: f64 = 1.0;

/// Polynomial operands above this total degree use the generic path.
pub const POLY_FAST_PATH_DEGREE: u32 = 4;

#[derive(Clone, Copy, Debug)]
pub struct StarOptions {
    /// Grid size above which the generic path refuses to run.
    pub generic_limit: usize,
}

impl Default for StarOptions {
    fn default() -> Self {
        Self { generic_limit: GENERIC_STAR_LIMIT }
    }
}

impl StarOptions {
    pub fn unlimited() -> Self {
        Self { generic_limit: usize::MAX }
    }
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn inv_i_hbar(grid: &PhaseGrid) -> C64 {
    C64::new(0.0, -1.0 / grid.hbar())
}

/// Moyal star product `A * B`.
pub fn star(a: &Symbol, b: &Symbol) -> Result<Symbol> {
    star_with(a, b, &StarOptions::default())
}

pub fn star_with(a: &Symbol, b: &Symbol, opts: &StarOptions) -> Result<Symbol> {
    a.grid().ensure_same(b.grid())?;
    if let Some(c) = a.constant_value() {
        return Ok(b.scale(c).with_parity(Parity::None));
    }
    if let Some(c) = b.constant_value() {
        return Ok(a.scale(c).with_parity(Parity::None));
    }
    if let (Some(x), Some(y)) = (a.polynomial_form(), b.polynomial_form()) {
        if x.degree() <= POLY_FAST_PATH_DEGREE && y.degree() <= POLY_FAST_PATH_DEGREE {
            return Ok(Symbol::polynomial(*a.grid(), x.star(y, a.grid().hbar())));
        }
    }
    let sa = a.momentum_sampler();
    let sb = b.momentum_sampler();
    match (sa, sb) {
        (Some(_), Some(_)) => Ok(pointwise_momentum_product(a, b)),
        (Some(sa), None) => Ok(Symbol::sampled(apply_mixed_kernel(b.field(), |k, s| sa.at(k, s)))),
        (None, Some(sb)) => Ok(Symbol::sampled(apply_mixed_kernel(a.field(), |k, s| sb.at(k, -s)))),
        (None, None) => {
            let n = a.grid().n;
            if n > opts.generic_limit {
                return Err(Error::CostGuard { n, limit: opts.generic_limit });
            }
            Ok(Symbol::sampled(generic_star(a.field(), b.field())))
        }
    }
}

fn pointwise_momentum_product(a: &Symbol, b: &Symbol) -> Symbol {
    let grid = *a.grid();
    match (&a.form, &b.form) {
        (Form::Momentum(f), Form::Momentum(g)) => {
            let (f, g) = (f.clone(), g.clone());
            Symbol::momentum_arc(grid, Arc::new(move |p| f(p) * g(p)))
        }
        _ => Symbol::sampled(a.field().try_mul(b.field()).expect("grids checked")),
    }
}

/// Multiplies the mixed `(p, P)` representation of `field` by `kernel(k, s)`,
/// where `s = l - n/2` so that `P = s dp`. The Nyquist column, which stands
/// for both `P = -n dp / 2` and `P = +n dp / 2`, receives the average.
pub(crate) fn apply_mixed_kernel(field: &GridField, kernel: impl Fn(usize, i64) -> C64 + Sync) -> GridField {
    let mut mixed = dft_q(field, Direction::Forward);
    multiply_mixed(&mut mixed, kernel);
    dft_q(&mixed, Direction::Inverse)
}

pub(crate) fn multiply_mixed(mixed: &mut GridField, kernel: impl Fn(usize, i64) -> C64 + Sync) {
    let half = (mixed.grid().n / 2) as i64;
    mixed
        .values_mut()
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(k, mut row)| {
            for (l, v) in row.iter_mut().enumerate() {
                let s = l as i64 - half;
                let factor = if s == -half { 0.5 * (kernel(k, s) + kernel(k, -s)) } else { kernel(k, s) };
                *v *= factor;
            }
        });
}

/// Twisted convolution of the two-dimensional Fourier coefficients.
fn generic_star(a: &GridField, b: &GridField) -> GridField {
    let grid = *a.grid();
    let n = grid.n;
    let ah = fft2(a.values(), false);
    let bh = fft2(b.values(), false);
    let norm = 1.0 / (n * n) as f64;
    let signed = |i: usize| if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
    let wrap = |i: i64| i.rem_euclid(n as i64) as usize;
    let two_n = 2 * n as i64;
    let phase: Vec<C64> = (0..two_n).map(|e| C64::from_polar(1.0, -PI * e as f64 / n as f64)).collect();

    let peak = ah.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let modes: Vec<(i64, i64, C64)> = ah
        .indexed_iter()
        .filter(|(_, v)| v.norm() > 1e-20 * peak)
        .map(|((r, m), &v)| (signed(r), signed(m), v * norm))
        .collect();

    let mut ch = Array2::<C64>::zeros((n, n));
    ch.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(r, mut row)| {
        let r = signed(r);
        for (mi, out) in row.iter_mut().enumerate() {
            let m = signed(mi);
            let mut acc = C64::new(0.0, 0.0);
            for &(r1, m1, av) in &modes {
                let r2 = signed(wrap(r - r1));
                let m2 = signed(wrap(m - m1));
                let e = (m1 * r2 - r1 * m2).rem_euclid(two_n) as usize;
                acc += av * bh[[wrap(r2), wrap(m2)]] * phase[e];
            }
            *out = acc * norm;
        }
    });
    GridField::from_values(grid, fft2(&ch, true)).expect("shape preserved")
}

/// Unnormalized two-dimensional FFT.
fn fft2(values: &Array2<C64>, inverse: bool) -> Array2<C64> {
    let n = values.nrows();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut out = values.clone();
    out.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
        fft.process(row.as_slice_mut().expect("contiguous rows"));
    });
    let mut t = out.t().as_standard_layout().into_owned();
    t.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
        fft.process(row.as_slice_mut().expect("contiguous rows"));
    });
    t.t().as_standard_layout().into_owned()
}

/// `(1/i hbar)(A * B - B * A)`
pub fn moyal_bracket(a: &Symbol, b: &Symbol) -> Result<Symbol> {
    moyal_bracket_with(a, b, &StarOptions::default())
}

pub fn moyal_bracket_with(a: &Symbol, b: &Symbol, opts: &StarOptions) -> Result<Symbol> {
    a.grid().ensure_same(b.grid())?;
    let grid = *a.grid();
    let pref = inv_i_hbar(&grid);
    if let (Some(x), Some(y)) = (a.polynomial_form(), b.polynomial_form()) {
        if x.degree() <= POLY_FAST_PATH_DEGREE && y.degree() <= POLY_FAST_PATH_DEGREE {
            let h = grid.hbar();
            return Ok(Symbol::polynomial(grid, x.star(y, h).sub(&y.star(x, h)).scale(pref)));
        }
    }
    if let Some(sa) = a.momentum_sampler() {
        if b.is_momentum_only() {
            return Ok(Symbol::sampled(GridField::zeros(grid)));
        }
        let out = apply_mixed_kernel(b.field(), |k, s| pref * (sa.at(k, s) - sa.at(k, -s)));
        return Ok(Symbol::sampled(out));
    }
    if b.momentum_sampler().is_some() {
        let flipped = moyal_bracket_with(b, a, opts)?;
        return Ok(flipped.scale(-one()));
    }
    let ab = star_with(a, b, opts)?;
    let ba = star_with(b, a, opts)?;
    Ok(Symbol::sampled(ab.field().axpby(pref, ba.field(), -pref)?))
}

/// `(1/i hbar)(A * B + B * A)`, the anti-commutator counterpart of the
/// Moyal bracket.
pub fn anti_moyal_bracket(a: &Symbol, b: &Symbol) -> Result<Symbol> {
    anti_moyal_bracket_with(a, b, &StarOptions::default())
}

pub fn anti_moyal_bracket_with(a: &Symbol, b: &Symbol, opts: &StarOptions) -> Result<Symbol> {
    a.grid().ensure_same(b.grid())?;
    let grid = *a.grid();
    let pref = inv_i_hbar(&grid) * ANTI_MOYAL_SIGN;
    if let (Some(x), Some(y)) = (a.polynomial_form(), b.polynomial_form()) {
        if x.degree() <= POLY_FAST_PATH_DEGREE && y.degree() <= POLY_FAST_PATH_DEGREE {
            let h = grid.hbar();
            return Ok(Symbol::polynomial(grid, x.star(y, h).add(&y.star(x, h)).scale(pref)));
        }
    }
    if let Some(sa) = a.momentum_sampler() {
        if b.is_momentum_only() {
            return Ok(pointwise_momentum_product(a, b).scale(2.0 * pref));
        }
        let out = apply_mixed_kernel(b.field(), |k, s| pref * (sa.at(k, s) + sa.at(k, -s)));
        return Ok(Symbol::sampled(out));
    }
    if b.momentum_sampler().is_some() {
        return anti_moyal_bracket_with(b, a, opts);
    }
    let ab = star_with(a, b, opts)?;
    let ba = star_with(b, a, opts)?;
    Ok(Symbol::sampled(ab.field().axpby(pref, ba.field(), pref)?))
}

/// Classical bracket `dA/dq dB/dp - dA/dp dB/dq`, exact for polynomials and
/// spectral otherwise.
pub fn poisson_bracket(a: &Symbol, b: &Symbol) -> Result<Symbol> {
    a.grid().ensure_same(b.grid())?;
    let grid = *a.grid();
    if let (Some(x), Some(y)) = (a.polynomial_form(), b.polynomial_form()) {
        return Ok(Symbol::polynomial(grid, x.poisson(y)));
    }
    let (aq, ap) = (spectral_derivative(a.field(), Axis(1)), spectral_derivative(a.field(), Axis(0)));
    let (bq, bp) = (spectral_derivative(b.field(), Axis(1)), spectral_derivative(b.field(), Axis(0)));
    let first = aq.try_mul(&bp)?;
    let second = ap.try_mul(&bq)?;
    Ok(Symbol::sampled(first.try_sub(&second)?))
}

/// Spectral first derivative along `Axis(1)` (q) or `Axis(0)` (p).
pub fn spectral_derivative(field: &GridField, axis: Axis) -> GridField {
    let grid = *field.grid();
    let n = grid.n;
    let step = if axis == Axis(1) { grid.dq } else { grid.dp };
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut values = if axis == Axis(1) {
        field.values().clone()
    } else {
        field.values().t().as_standard_layout().into_owned()
    };
    values.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
        let buf = row.as_slice_mut().expect("contiguous rows");
        fwd.process(buf);
        for (i, v) in buf.iter_mut().enumerate() {
            let m = if i < n / 2 { i as f64 } else if i == n / 2 { 0.0 } else { i as f64 - n as f64 };
            *v *= C64::new(0.0, 2.0 * PI * m / (n as f64 * step)) / n as f64;
        }
        inv.process(buf);
    });
    if axis == Axis(0) {
        values = values.t().as_standard_layout().into_owned();
    }
    GridField::from_values(grid, values).expect("shape preserved")
}

#[derive(Clone, Copy, Debug)]
pub struct SqrtOptions {
    pub max_iterations: usize,
    /// Target for `max|B*B - A| / max|A|`.
    pub tolerance: f64,
    pub star: StarOptions,
}

impl Default for SqrtOptions {
    fn default() -> Self {
        Self { max_iterations: 500, tolerance: 1e-10, star: StarOptions::default() }
    }
}

#[derive(Clone, Debug)]
pub struct SqrtOutcome {
    pub root: Symbol,
    pub iterations: usize,
    /// `max|B*B - A| / max|A|` at exit.
    pub residual: f64,
}

/// Star square root `B` with `B * B = A`.
pub fn star_sqrt(a: &Symbol) -> Result<Symbol> {
    Ok(star_sqrt_with(a, &SqrtOptions::default())?.root)
}

/// Damped fixed-point iteration `B <- B + alpha (A - B*B)` started from the
/// pointwise root, with `alpha = 1 / (2 max sqrt A)`.
pub fn star_sqrt_with(a: &Symbol, opts: &SqrtOptions) -> Result<SqrtOutcome> {
    let grid = *a.grid();
    let units = grid.units;
    let floor = units.rest_energy().powi(2) * (1.0 - 1e-9);
    let field = a.field();
    let scale = field.max_abs();
    if field.max_imag() > 1e-10 * scale {
        return Err(Error::InvalidParameter {
            name: "symbol",
            reason: "star square root needs a real symbol".into(),
        });
    }
    let lowest = field.min_real();
    if lowest < floor {
        return Err(Error::NegativeInput { value: lowest, floor });
    }
    let pointwise = |s: &Symbol| -> Symbol {
        match &s.form {
            Form::Momentum(f) => {
                let f = f.clone();
                Symbol::momentum_arc(grid, Arc::new(move |p| f(p).sqrt()))
            }
            _ => Symbol::sampled(s.field().map(|v| C64::new(v.re.sqrt(), 0.0))),
        }
    };
    if a.is_momentum_only() {
        return Ok(SqrtOutcome { root: pointwise(a), iterations: 0, residual: 0.0 });
    }
    let mut b = pointwise(a);
    let alpha = 1.0 / (2.0 * field.max_real().sqrt());
    let mut residual = f64::INFINITY;
    for iteration in 0..=opts.max_iterations {
        let bb = star_with(&b, &b, &opts.star)?;
        let defect = field.try_sub(bb.field())?;
        residual = defect.max_abs() / scale;
        if residual <= opts.tolerance {
            return Ok(SqrtOutcome { root: b, iterations: iteration, residual });
        }
        if iteration == opts.max_iterations || !residual.is_finite() {
            break;
        }
        b = Symbol::sampled(b.field().axpby(one(), &defect, C64::new(alpha, 0.0))?);
    }
    Err(Error::NoConvergence { iterations: opts.max_iterations, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasegrid::UnitSystem;

    fn grid(n: usize, extent: f64) -> PhaseGrid {
        PhaseGrid::new(n, extent, 0.0, UnitSystem::default()).unwrap()
    }

    fn gaussian(g: PhaseGrid, q0: f64, p0: f64, w: f64) -> Symbol {
        Symbol::from_fn(g, move |p, q| C64::new((-((p - p0).powi(2) + (q - q0).powi(2)) / w).exp(), 0.0))
    }

    /// Moyal product of two Gaussians, from the closed-form composition of
    /// Gaussian phase-space functions.
    fn gaussian_star_oracle(p: f64, q: f64) -> f64 {
        // exp(-z^2) * exp(-z^2) = (1/2) exp(-z^2) for hbar = 1
        0.5 * (-(p * p + q * q)).exp()
    }

    #[test]
    fn q_star_p_polynomial() {
        let g = grid(16, 8.0);
        let r = star(&Symbol::q(g), &Symbol::p(g)).unwrap();
        let expect = GridField::from_fn(g, |p, q| C64::new(q * p, 0.5));
        assert!(r.field().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn momentum_symbols_multiply_pointwise() {
        let g = grid(32, 10.0);
        let f = Symbol::momentum_real(g, |p| (1.0 + p * p).sqrt());
        let h = Symbol::momentum_real(g, |p| p.sin());
        let r = star(&f, &h).unwrap();
        let expect = GridField::from_real_fn(g, |p, _| (1.0 + p * p).sqrt() * p.sin());
        assert!(r.field().max_abs_diff(&expect) < 1e-14);
        assert_eq!(moyal_bracket(&f, &h).unwrap().field().max_abs(), 0.0);
    }

    #[test]
    fn star_with_one_is_exact() {
        let g = grid(16, 8.0);
        let a = gaussian(g, 0.3, -0.2, 1.5);
        let one = Symbol::constant(g, C64::new(1.0, 0.0));
        assert_eq!(star(&a, &one).unwrap().field(), a.field());
        assert_eq!(star(&one, &a).unwrap().field(), a.field());
    }

    #[test]
    fn generic_gaussian_product_matches_closed_form() {
        let g = grid(128, (2.0 * PI * 128.0).sqrt());
        let a = gaussian(g, 0.0, 0.0, 1.0);
        let r = star(&a, &a).unwrap();
        let expect = GridField::from_real_fn(g, gaussian_star_oracle);
        assert!(r.field().max_abs_diff(&expect) < 1e-12, "{}", r.field().max_abs_diff(&expect));
    }

    #[test]
    fn generic_star_shifted_gaussians_match_bopp_shift() {
        // e^{i(alpha p + beta q)} acts on B by translation; a narrow-band
        // check with two displaced Gaussians against the closed form
        // A*B(z) = (1/pi) int A(z + u) B(z + v) exp(2i (u x v)/hbar) du dv
        // evaluated through the Fock-basis bridge lives in the integration
        // tests; here the generic and momentum paths must agree.
        let g = grid(128, (2.0 * PI * 128.0).sqrt());
        let a = Symbol::from_fn(g, |p, _| C64::new((-(p - 0.4).powi(2)).exp(), 0.0));
        let b = gaussian(g, 0.5, 0.1, 2.0);
        let fast = star(&a, &b).unwrap();
        let slow = Symbol::sampled(generic_star(a.field(), b.field()));
        assert!(fast.max_abs_diff(&slow) < 1e-10, "{}", fast.max_abs_diff(&slow));
        let fast = star(&b, &a).unwrap();
        let slow = Symbol::sampled(generic_star(b.field(), a.field()));
        assert!(fast.max_abs_diff(&slow) < 1e-10);
    }

    #[test]
    fn cost_guard() {
        let g = grid(256, 20.0);
        let a = gaussian(g, 0.0, 0.0, 1.0);
        assert!(matches!(star(&a, &a), Err(Error::CostGuard { n: 256, limit: 128 })));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = gaussian(grid(16, 8.0), 0.0, 0.0, 1.0);
        let b = gaussian(grid(16, 9.0), 0.0, 0.0, 1.0);
        assert!(matches!(star(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn brackets_of_polynomials() {
        let g = grid(16, 8.0);
        let m = moyal_bracket(&Symbol::q(g), &Symbol::p(g)).unwrap();
        assert!(m.field().max_abs_diff(&GridField::constant(g, one())) < 1e-15);
        let kinetic = Symbol::polynomial(g, Poly::monomial(0, 2, C64::new(0.5, 0.0)));
        let m = moyal_bracket(&kinetic, &Symbol::q(g)).unwrap();
        assert!(m.field().max_abs_diff(&GridField::from_real_fn(g, |p, _| -p)) < 1e-14);
    }

    #[test]
    fn anti_bracket_with_unit() {
        let g = grid(32, 10.0);
        let b = gaussian(g, 0.2, 0.0, 1.0);
        let one_sym = Symbol::constant(g, one());
        let r = anti_moyal_bracket(&one_sym, &b).unwrap();
        let expect = b.field().scale(C64::new(0.0, -2.0));
        assert!(r.field().max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn bracket_antisymmetry_is_exact() {
        let g = grid(32, 10.0);
        let e = Symbol::momentum_real(g, |p| (1.0 + p * p).sqrt());
        let w = gaussian(g, 0.5, 0.3, 1.0);
        let x = moyal_bracket(&e, &w).unwrap();
        let y = moyal_bracket(&w, &e).unwrap();
        assert_eq!(x.field(), &y.field().scale(-one()));
        let x = anti_moyal_bracket(&e, &w).unwrap();
        let y = anti_moyal_bracket(&w, &e).unwrap();
        assert_eq!(x.field(), y.field());
    }

    #[test]
    fn poisson_spectral_matches_exact() {
        let g = grid(128, (2.0 * PI * 128.0).sqrt());
        let a = gaussian(g, 0.0, 0.0, 2.0);
        let b = Symbol::from_fn(g, |p, q| C64::new((-(p * p + (q - 0.5).powi(2)) / 3.0).exp(), 0.0));
        let pb = poisson_bracket(&a, &b).unwrap();
        let expect = GridField::from_real_fn(g, |p, q| {
            let ea = (-(p * p + q * q) / 2.0).exp();
            let eb = (-(p * p + (q - 0.5).powi(2)) / 3.0).exp();
            let (aq, ap) = (-q * ea, -p * ea);
            let (bq, bp) = (-2.0 * (q - 0.5) / 3.0 * eb, -2.0 * p / 3.0 * eb);
            aq * bp - ap * bq
        });
        assert!(pb.field().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn sqrt_of_constant_and_free_symbol() {
        let g = grid(32, 10.0);
        let four = Symbol::constant(g, C64::new(4.0, 0.0));
        let r = star_sqrt(&four).unwrap();
        assert!(r.field().max_abs_diff(&GridField::constant(g, C64::new(2.0, 0.0))) == 0.0);
        let free = Symbol::momentum_real(g, |p| 1.0 + p * p);
        let out = star_sqrt_with(&free, &SqrtOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        let expect = GridField::from_real_fn(g, |p, _| (1.0 + p * p).sqrt());
        assert_eq!(out.root.field(), &expect);
    }

    #[test]
    fn sqrt_rejects_values_below_rest_energy() {
        let g = grid(16, 8.0);
        let a = Symbol::from_fn(g, |p, _| C64::new(0.5 + p * p, 0.0));
        assert!(matches!(star_sqrt(&a), Err(Error::NegativeInput { .. })));
    }
}
