use std::f64::consts::PI;

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::poly::binomial;
use super::symbol::Symbol;
use crate::error::{Error, Result};
use crate::phasegrid::{dft_q, Direction, GridField, MomentumLine, PhaseGrid};

/// Largest basis accepted by [`weyl_symbol`].
pub const MAX_BRIDGE_DIM: usize = 64;

/// Basis an [`OperatorMatrix`] is expressed in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasisKind {
    /// Harmonic-oscillator eigenstates with oscillator length `length`.
    Fock { length: f64 },
    /// Lattice momentum eigenstates.
    DiscreteMomentum,
    Custom,
}

/// Truncated matrix of an operator.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: Array2<C64>,
    basis: BasisKind,
}

impl OperatorMatrix {
    pub fn new(entries: Array2<C64>, basis: BasisKind) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, found: c });
        }
        if entries.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidParameter { name: "entries", reason: "must be finite".into() });
        }
        Ok(Self { entries, basis })
    }

    pub fn identity(dim: usize, basis: BasisKind) -> Self {
        Self { entries: Array2::eye(dim), basis }
    }

    pub fn zeros(dim: usize, basis: BasisKind) -> Self {
        Self { entries: Array2::zeros((dim, dim)), basis }
    }

    /// `|i><j|`
    pub fn unit(dim: usize, i: usize, j: usize, basis: BasisKind) -> Self {
        let mut m = Self::zeros(dim, basis);
        m.entries[[i, j]] = C64::new(1.0, 0.0);
        m
    }

    /// Annihilation operator in a Fock basis.
    pub fn annihilation(dim: usize, length: f64) -> Self {
        let mut m = Self::zeros(dim, BasisKind::Fock { length });
        for n in 1..dim {
            m.entries[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
        }
        m
    }

    /// `q = b (a + a^dagger) / sqrt 2`
    pub fn position(dim: usize, length: f64) -> Self {
        let a = Self::annihilation(dim, length);
        let sum = &a.entries + &a.adjoint().entries;
        Self { entries: sum * C64::new(length / 2f64.sqrt(), 0.0), basis: a.basis }
    }

    /// `p = i (hbar / b)(a^dagger - a) / sqrt 2`
    pub fn momentum(dim: usize, length: f64, hbar: f64) -> Self {
        let a = Self::annihilation(dim, length);
        let diff = &a.adjoint().entries - &a.entries;
        Self { entries: diff * C64::new(0.0, hbar / (length * 2f64.sqrt())), basis: a.basis }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[[i, j]]
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.t().mapv(|v| v.conj()), basis: self.basis }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| (self.entries[[i, j]] - self.entries[[j, i]].conj()).norm() <= tol))
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(Self { entries: self.entries.dot(&other.entries), basis: self.basis })
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(Self { entries: &self.entries + &other.entries, basis: self.basis })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { entries: self.entries.mapv(|v| v * s), basis: self.basis }
    }

    /// Leading `dim x dim` block.
    pub fn truncate(&self, dim: usize) -> Self {
        let d = dim.min(self.dim());
        Self { entries: self.entries.slice(ndarray::s![..d, ..d]).to_owned(), basis: self.basis }
    }

    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Matrix power with `pow(0) = 1`.
    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.dim(), self.basis);
        for _ in 0..k {
            out.entries = out.entries.dot(&self.entries);
        }
        out
    }
}

/// Momentum-space basis functions together with their values on the
/// half-shifted lattice.
#[derive(Clone, Debug)]
pub struct Basis {
    kind: BasisKind,
    grid: PhaseGrid,
    /// `whole[[k, i]] = psi_i(p_k)`
    whole: Array2<C64>,
    /// `half[[k, i]] = psi_i(p_k + dp / 2)`
    half: Array2<C64>,
}

impl Basis {
    /// Arbitrary functions; half-lattice values come from band-limited
    /// interpolation.
    pub fn from_lines(lines: &[MomentumLine]) -> Result<Self> {
        let first = lines.first().ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
        let grid = *first.grid();
        for l in lines {
            grid.ensure_same(l.grid())?;
        }
        let n = grid.n;
        let mut whole = Array2::zeros((n, lines.len()));
        let mut half = Array2::zeros((n, lines.len()));
        for (i, l) in lines.iter().enumerate() {
            whole.column_mut(i).assign(l.values());
            half.column_mut(i).assign(l.half_shifted().values());
        }
        Ok(Self { kind: BasisKind::Custom, grid, whole, half })
    }

    /// Functions known in closed form.
    pub fn from_fns(grid: PhaseGrid, kind: BasisKind, dim: usize, f: impl Fn(f64) -> Vec<C64> + Sync) -> Self {
        let n = grid.n;
        let mut whole = Array2::zeros((n, dim));
        let mut half = Array2::zeros((n, dim));
        for k in 0..n {
            let w = f(grid.p(k));
            let h = f(grid.p(k) + 0.5 * grid.dp);
            for i in 0..dim {
                whole[[k, i]] = w[i];
                half[[k, i]] = h[i];
            }
        }
        Self { kind, grid, whole, half }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.whole.ncols()
    }

    pub fn line(&self, i: usize) -> MomentumLine {
        MomentumLine::from_values(self.grid, self.whole.column(i).to_owned()).expect("length n")
    }

    pub fn lines(&self) -> Vec<MomentumLine> {
        (0..self.dim()).map(|i| self.line(i)).collect()
    }

    /// All basis functions at `p_k + t * dp / 2`.
    fn row(&self, k: usize, t: i64) -> ndarray::ArrayView1<'_, C64> {
        let n = self.grid.n as i64;
        let k = k as i64;
        if t.rem_euclid(2) == 0 {
            self.whole.row((k + t / 2).rem_euclid(n) as usize)
        } else {
            self.half.row((k + (t - 1).div_euclid(2)).rem_euclid(n) as usize)
        }
    }

    /// Gram matrix `<psi_i|psi_j>` by lattice quadrature.
    pub fn gram(&self) -> Array2<C64> {
        self.whole.t().mapv(|v| v.conj()).dot(&self.whole) * self.grid.dp
    }
}

/// Normalized Hermite functions `h_0(x) .. h_{dim-1}(x)`.
pub fn hermite_functions(x: f64, dim: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(dim);
    if dim == 0 {
        return h;
    }
    h.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if dim > 1 {
        h.push(2f64.sqrt() * x * h[0]);
    }
    for n in 1..dim.saturating_sub(1) {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
        h.push(next);
    }
    h
}

/// Harmonic-oscillator eigenstates in the momentum representation,
/// `psi_n(p) = (-i)^n sqrt(b / hbar) h_n(p b / hbar)`.
pub fn fock_basis(grid: PhaseGrid, dim: usize, length: f64) -> Result<Basis> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidParameter { name: "length", reason: "must be positive".into() });
    }
    if dim == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    let hbar = grid.hbar();
    let scale = (length / hbar).sqrt();
    let phases = [C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0)];
    Ok(Basis::from_fns(grid, BasisKind::Fock { length }, dim, move |p| {
        hermite_functions(p * length / hbar, dim)
            .into_iter()
            .enumerate()
            .map(|(n, h)| phases[n % 4] * (scale * h))
            .collect()
    }))
}

fn check_dims(op_dim: usize, basis: &Basis) -> Result<()> {
    if op_dim != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: op_dim });
    }
    Ok(())
}

/// Weyl symbol `A(p, q) = int M_nm psi_n(p + P/2) conj(psi_m(p - P/2))
/// exp(i P q / hbar) dP` of a truncated operator.
pub fn weyl_symbol(op: &OperatorMatrix, basis: &Basis) -> Result<Symbol> {
    check_dims(op.dim(), basis)?;
    if op.dim() > MAX_BRIDGE_DIM {
        return Err(Error::InvalidParameter {
            name: "dim",
            reason: format!("basis larger than {MAX_BRIDGE_DIM}"),
        });
    }
    let grid = basis.grid;
    let n = grid.n;
    let half = (n / 2) as i64;
    let m = op.entries();
    let pair = |k: usize, s: i64| -> C64 {
        let u = basis.row(k, s);
        let v = basis.row(k, -s).mapv(|x| x.conj());
        u.dot(&m.dot(&v))
    };
    let mut mixed = Array2::<C64>::zeros((n, n));
    mixed.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(k, mut row)| {
        for (l, out) in row.iter_mut().enumerate() {
            let s = l as i64 - half;
            *out = if s == -half { 0.5 * (pair(k, s) + pair(k, -s)) } else { pair(k, s) };
        }
    });
    let mixed = GridField::from_values(grid, mixed)?;
    Symbol::from_field(dft_q(&mixed, Direction::Inverse))
}

/// Matrix elements `<n| A |m>` of the Weyl quantization of `sym`. Symbols
/// carrying a polynomial closed form are quantized exactly with ladder
/// operators when the basis is a Fock basis.
pub fn weyl_quantize(sym: &Symbol, basis: &Basis) -> Result<OperatorMatrix> {
    sym.grid().ensure_same(&basis.grid)?;
    if let (Some(poly), BasisKind::Fock { length }) = (sym.polynomial_form(), basis.kind) {
        return Ok(quantize_polynomial(poly, basis.dim(), length, basis.grid.hbar()));
    }
    let grid = basis.grid;
    let n = grid.n;
    let half = (n / 2) as i64;
    let dim = basis.dim();
    let mixed = dft_q(sym.field(), Direction::Forward);
    let fa = mixed.values();
    let outer = |k: usize, s: i64, w: C64, acc: &mut Array2<C64>| {
        let u = basis.row(k, s).mapv(|x| x.conj() * w);
        let v = basis.row(k, -s);
        for (i, ui) in u.iter().enumerate() {
            if *ui == C64::new(0.0, 0.0) {
                continue;
            }
            let mut row = acc.row_mut(i);
            row.zip_mut_with(&v, |a, b| *a += ui * b);
        }
    };
    let entries = (0..n)
        .into_par_iter()
        .fold(
            || Array2::<C64>::zeros((dim, dim)),
            |mut acc, k| {
                for l in 0..n {
                    let s = l as i64 - half;
                    let w = fa[[k, l]];
                    if s == -half {
                        outer(k, s, 0.5 * w, &mut acc);
                        outer(k, -s, 0.5 * w, &mut acc);
                    } else {
                        outer(k, s, w, &mut acc);
                    }
                }
                acc
            },
        )
        .reduce(|| Array2::<C64>::zeros((dim, dim)), |a, b| a + b);
    OperatorMatrix::new(entries * (grid.dp * grid.dp), basis.kind)
}

/// Symmetric (Weyl) ordering of `q^a p^b`:
/// `2^-a sum_k C(a, k) q^k p^b q^(a-k)`, evaluated on a padded space and
/// truncated.
pub fn quantize_polynomial(poly: &super::Poly, dim: usize, length: f64, hbar: f64) -> OperatorMatrix {
    let padded = dim + poly.degree() as usize + 1;
    let q = OperatorMatrix::position(padded, length);
    let p = OperatorMatrix::momentum(padded, length, hbar);
    let max_a = poly.degree_q();
    let max_b = poly.degree();
    let qpow: Vec<OperatorMatrix> = (0..=max_a).map(|k| q.pow(k)).collect();
    let ppow: Vec<OperatorMatrix> = (0..=max_b).map(|k| p.pow(k)).collect();
    let mut total = Array2::<C64>::zeros((padded, padded));
    for ((a, b), c) in poly.terms() {
        let mut term = Array2::<C64>::zeros((padded, padded));
        for k in 0..=a {
            let prod = qpow[k as usize].entries.dot(&ppow[b as usize].entries).dot(&qpow[(a - k) as usize].entries);
            term = term + prod * binomial(a, k);
        }
        total = total + term * (c * 0.5f64.powi(a as i32));
    }
    OperatorMatrix { entries: total, basis: BasisKind::Fock { length } }.truncate(dim)
}

/// Pure-state density matrix `|psi><psi|` from expansion coefficients.
pub fn projector(coefficients: &Array1<C64>, basis: BasisKind) -> OperatorMatrix {
    let n = coefficients.len();
    let mut m = OperatorMatrix::zeros(n, basis);
    for i in 0..n {
        for j in 0..n {
            m.entries[[i, j]] = coefficients[i] * coefficients[j].conj();
        }
    }
    m
}
