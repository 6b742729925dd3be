//! Relativistic kinematics of a spinless particle: the two-band spectrum,
//! the ε/χ weights, and the exact Feshbach–Villars two-component machinery
//! in the momentum representation.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasegrid::{MomentumLine, PhaseGrid, UnitSystem};
use crate::starcalc::{BasisKind, OperatorMatrix};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Charge branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// 2x2 matrix acting on the `(phi, chi)` charge components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargeMatrix(pub [[C64; 2]; 2]);

impl ChargeMatrix {
    pub fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn tau1() -> Self {
        Self([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn tau2() -> Self {
        Self([[ZERO, -I], [I, ZERO]])
    }

    pub fn tau3() -> Self {
        Self([[ONE, ZERO], [ZERO, -ONE]])
    }

    pub fn real(m: [[f64; 2]; 2]) -> Self {
        Self([[m[0][0].into(), m[0][1].into()], [m[1][0].into(), m[1][1].into()]])
    }

    /// `a0 1 + a1 tau1 + a2 tau2 + a3 tau3`
    pub fn from_tau(a: [C64; 4]) -> Self {
        Self::identity() * a[0] + Self::tau1() * a[1] + Self::tau2() * a[2] + Self::tau3() * a[3]
    }

    /// Coefficients `[a0, a1, a2, a3]` of the Pauli decomposition.
    pub fn tau_coefficients(&self) -> [C64; 4] {
        let m = &self.0;
        [
            0.5 * (m[0][0] + m[1][1]),
            0.5 * (m[0][1] + m[1][0]),
            0.5 * I * (m[0][1] - m[1][0]),
            0.5 * (m[0][0] - m[1][1]),
        ]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Eigenvalues ordered by descending real part.
    pub fn eigenvalues(&self) -> [C64; 2] {
        let half_tr = 0.5 * self.trace();
        let disc = (half_tr * half_tr - self.det()).sqrt();
        let (a, b) = (half_tr + disc, half_tr - disc);
        if a.re >= b.re { [a, b] } else { [b, a] }
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl Mul for ChargeMatrix {
    type Output = ChargeMatrix;
    fn mul(self, rhs: ChargeMatrix) -> ChargeMatrix {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        ChargeMatrix(out)
    }
}

impl Mul<C64> for ChargeMatrix {
    type Output = ChargeMatrix;
    fn mul(self, s: C64) -> ChargeMatrix {
        ChargeMatrix(self.0.map(|r| r.map(|v| v * s)))
    }
}

impl Add for ChargeMatrix {
    type Output = ChargeMatrix;
    fn add(self, rhs: ChargeMatrix) -> ChargeMatrix {
        let mut out = self.0;
        for (row, r) in out.iter_mut().zip(rhs.0) {
            for (x, y) in row.iter_mut().zip(r) {
                *x += y;
            }
        }
        ChargeMatrix(out)
    }
}

impl Sub for ChargeMatrix {
    type Output = ChargeMatrix;
    fn sub(self, rhs: ChargeMatrix) -> ChargeMatrix {
        self + rhs * (-ONE)
    }
}

/// Nonrelativistic energy levels feeding the two-band spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectrumKind {
    /// Free particle, `e(p) = p^2 / 2m`.
    Free,
    /// Harmonic oscillator, `e(n) = hbar omega (n + 1/2)`.
    Harmonic { omega: f64 },
    /// Tabulated nondecreasing levels `e(n) >= 0`.
    Levels { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub kind: SpectrumKind,
    pub units: UnitSystem,
}

impl Spectrum {
    pub fn free(units: UnitSystem) -> Self {
        Self { kind: SpectrumKind::Free, units }
    }

    pub fn harmonic(omega: f64, units: UnitSystem) -> Result<Self> {
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(Error::InvalidParameter { name: "omega", reason: format!("must be >= 0, got {omega}") });
        }
        Ok(Self { kind: SpectrumKind::Harmonic { omega }, units })
    }

    pub fn levels(values: Vec<f64>, units: UnitSystem) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter {
                name: "levels",
                reason: "must be finite, nonnegative and nondecreasing".into(),
            });
        }
        Ok(Self { kind: SpectrumKind::Levels { values }, units })
    }

    pub fn is_free(&self) -> bool {
        matches!(self.kind, SpectrumKind::Free)
    }

    fn require_free(&self) -> Result<()> {
        if self.is_free() {
            Ok(())
        } else {
            Err(Error::InvalidParameter { name: "spectrum", reason: "a free-particle spectrum is required".into() })
        }
    }

    /// `e(p) = p^2 / 2m`
    pub fn kinetic(&self, p: f64) -> f64 {
        p * p / (2.0 * self.units.mass)
    }

    /// `E(p) = sqrt(m^2 c^4 + c^2 p^2)`
    pub fn energy(&self, p: f64) -> f64 {
        dispersion(p, &self.units)
    }

    /// Nonrelativistic level `e(n)` of a discrete spectrum.
    pub fn level(&self, n: usize) -> Result<f64> {
        match &self.kind {
            SpectrumKind::Free => Err(Error::InvalidParameter {
                name: "spectrum",
                reason: "the free spectrum has no discrete levels".into(),
            }),
            SpectrumKind::Harmonic { omega } => Ok(self.units.hbar * omega * (n as f64 + 0.5)),
            SpectrumKind::Levels { values } => values.get(n).copied().ok_or(Error::InvalidParameter {
                name: "n",
                reason: format!("only {} levels tabulated", values.len()),
            }),
        }
    }
}

/// `E(n, +-) = +-mc^2 sqrt(1 + 2 e(n) / mc^2)`
pub fn relativistic_level(spec: &Spectrum, n: i64, branch: Branch) -> Result<f64> {
    if n < 0 {
        return Err(Error::InvalidParameter { name: "n", reason: format!("must be >= 0, got {n}") });
    }
    let e = spec.level(n as usize)?;
    Ok(level_from_nonrelativistic(e, &spec.units, branch))
}

pub fn level_from_nonrelativistic(e: f64, units: &UnitSystem, branch: Branch) -> f64 {
    let mc2 = units.rest_energy();
    branch.sign() * mc2 * (1.0 + 2.0 * e / mc2).sqrt()
}

/// `sqrt(m^2 c^4 + c^2 p^2)`
pub fn dispersion(p: f64, units: &UnitSystem) -> f64 {
    let mc2 = units.rest_energy();
    (mc2 * mc2 + (units.c * p).powi(2)).sqrt()
}

fn check_energies(e1: f64, e2: f64) -> Result<()> {
    for e in [e1, e2] {
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::InvalidParameter { name: "energy", reason: format!("must be positive, got {e}") });
        }
    }
    Ok(())
}

/// `(E1 + E2) / (2 sqrt(E1 E2))`
pub fn epsilon_factor(e1: f64, e2: f64) -> Result<f64> {
    check_energies(e1, e2)?;
    Ok(epsilon_unchecked(e1, e2))
}

/// `(E1 - E2) / (2 sqrt(E1 E2))`
pub fn chi_factor(e1: f64, e2: f64) -> Result<f64> {
    check_energies(e1, e2)?;
    Ok(chi_unchecked(e1, e2))
}

#[inline]
pub(crate) fn epsilon_unchecked(e1: f64, e2: f64) -> f64 {
    (e1 + e2) / (2.0 * (e1 * e2).sqrt())
}

#[inline]
pub(crate) fn chi_unchecked(e1: f64, e2: f64) -> f64 {
    (e1 - e2) / (2.0 * (e1 * e2).sqrt())
}

/// `(tau3 + i tau2) e + tau3 mc^2` for a nonrelativistic energy `e`.
pub fn fv_hamiltonian_from_level(e: f64, units: &UnitSystem) -> ChargeMatrix {
    let mc2 = units.rest_energy();
    ChargeMatrix::real([[e + mc2, e], [-e, -e - mc2]])
}

/// Two-component Hamiltonian of a free particle at momentum `p`.
pub fn fv_hamiltonian(p: f64, spec: &Spectrum) -> ChargeMatrix {
    fv_hamiltonian_from_level(spec.kinetic(p), &spec.units)
}

/// Branch eigenvectors `(u+, u-)` of the two-component Hamiltonian at
/// energy `E`, normalized to `u^T tau3 u = +-1`.
pub fn branch_vectors(energy: f64, units: &UnitSystem) -> ([f64; 2], [f64; 2]) {
    let mc2 = units.rest_energy();
    let norm = 1.0 / (2.0 * (mc2 * energy).sqrt());
    ([(mc2 + energy) * norm, (mc2 - energy) * norm], [(mc2 - energy) * norm, (mc2 + energy) * norm])
}

/// Momentum-space Feshbach–Villars wave function.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoComponentState {
    pub phi: MomentumLine,
    pub chi: MomentumLine,
}

impl TwoComponentState {
    pub fn new(phi: MomentumLine, chi: MomentumLine) -> Result<Self> {
        phi.grid().ensure_same(chi.grid())?;
        Ok(Self { phi, chi })
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.phi.grid()
    }

    /// `int (|phi|^2 - |chi|^2) dp`
    pub fn pseudo_norm(&self) -> f64 {
        self.phi.norm_sqr() - self.chi.norm_sqr()
    }

    /// Exchanges the components, i.e. applies `tau1`.
    pub fn charge_conjugate(&self) -> Self {
        Self { phi: self.chi.clone(), chi: self.phi.clone() }
    }

    pub fn max_abs_diff(&self, other: &TwoComponentState) -> f64 {
        let d = |a: &MomentumLine, b: &MomentumLine| {
            a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
        };
        d(&self.phi, &other.phi).max(d(&self.chi, &other.chi))
    }
}

/// `phi = (Psi + i hbar dPsi/dt / mc^2) / sqrt 2`,
/// `chi = (Psi - i hbar dPsi/dt / mc^2) / sqrt 2`.
pub fn from_klein_gordon(psi: &MomentumLine, dpsi_dt: &MomentumLine) -> Result<TwoComponentState> {
    psi.grid().ensure_same(dpsi_dt.grid())?;
    let grid = *psi.grid();
    let k = I * grid.hbar() / grid.units.rest_energy();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let phi = Array1::from_iter(psi.values().iter().zip(dpsi_dt.values()).map(|(a, b)| (a + k * b) * r));
    let chi = Array1::from_iter(psi.values().iter().zip(dpsi_dt.values()).map(|(a, b)| (a - k * b) * r));
    TwoComponentState::new(MomentumLine::from_values(grid, phi)?, MomentumLine::from_values(grid, chi)?)
}

/// Inverse of [`from_klein_gordon`]: returns `(Psi, dPsi/dt)`.
pub fn to_klein_gordon(state: &TwoComponentState) -> (MomentumLine, MomentumLine) {
    let grid = *state.grid();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let k = grid.units.rest_energy() / (I * grid.hbar()) * r;
    let (phi, chi) = (state.phi.values(), state.chi.values());
    let psi = Array1::from_iter(phi.iter().zip(chi).map(|(a, b)| (a + b) * r));
    let dpsi = Array1::from_iter(phi.iter().zip(chi).map(|(a, b)| (a - b) * k));
    (
        MomentumLine::from_values(grid, psi).expect("length n"),
        MomentumLine::from_values(grid, dpsi).expect("length n"),
    )
}

/// Branch amplitudes `C+(p)`, `C-(p)` of the energy representation.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRep {
    pub c_plus: MomentumLine,
    pub c_minus: MomentumLine,
}

impl EnergyRep {
    pub fn new(c_plus: MomentumLine, c_minus: MomentumLine) -> Result<Self> {
        c_plus.grid().ensure_same(c_minus.grid())?;
        Ok(Self { c_plus, c_minus })
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.c_plus.grid()
    }

    /// `int (|C+|^2 + |C-|^2) dp`
    pub fn norm(&self) -> f64 {
        self.c_plus.norm_sqr() + self.c_minus.norm_sqr()
    }

    /// `int (|C+|^2 - |C-|^2) dp`
    pub fn pseudo_norm(&self) -> f64 {
        self.c_plus.norm_sqr() - self.c_minus.norm_sqr()
    }

    pub fn normalized(&self) -> Self {
        let s = C64::new(1.0 / self.norm().sqrt(), 0.0);
        Self { c_plus: self.c_plus.scale(s), c_minus: self.c_minus.scale(s) }
    }

    /// Free evolution in the energy representation, `C+- -> C+- e^{-+iEt/hbar}`.
    pub fn evolve_free(&self, t: f64, spec: &Spectrum) -> Self {
        let hbar = spec.units.hbar;
        let phase = |sign: f64| move |p: f64, v: C64| v * C64::from_polar(1.0, -sign * spec.energy(p) * t / hbar);
        Self { c_plus: self.c_plus.map_indexed(phase(1.0)), c_minus: self.c_minus.map_indexed(phase(-1.0)) }
    }

    pub fn max_abs_diff(&self, other: &EnergyRep) -> f64 {
        let d = |a: &MomentumLine, b: &MomentumLine| {
            a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
        };
        d(&self.c_plus, &other.c_plus).max(d(&self.c_minus, &other.c_minus))
    }
}

/// Pseudo-unitary diagonalization per momentum:
/// `C+ = u+^T tau3 psi`, `C- = -u-^T tau3 psi`.
pub fn fv_split(state: &TwoComponentState, spec: &Spectrum) -> Result<EnergyRep> {
    spec.require_free()?;
    let grid = *state.grid();
    let n = grid.n;
    let mut cp = Array1::zeros(n);
    let mut cm = Array1::zeros(n);
    for k in 0..n {
        let (up, um) = branch_vectors(spec.energy(grid.p(k)), &spec.units);
        let (f, c) = (state.phi.get(k), state.chi.get(k));
        cp[k] = up[0] * f - up[1] * c;
        cm[k] = -(um[0] * f - um[1] * c);
    }
    EnergyRep::new(MomentumLine::from_values(grid, cp)?, MomentumLine::from_values(grid, cm)?)
}

/// `psi = C+ u+ + C- u-`
pub fn fv_unsplit(rep: &EnergyRep, spec: &Spectrum) -> Result<TwoComponentState> {
    spec.require_free()?;
    let grid = *rep.grid();
    let n = grid.n;
    let mut phi = Array1::zeros(n);
    let mut chi = Array1::zeros(n);
    for k in 0..n {
        let (up, um) = branch_vectors(spec.energy(grid.p(k)), &spec.units);
        let (a, b) = (rep.c_plus.get(k), rep.c_minus.get(k));
        phi[k] = a * up[0] + b * um[0];
        chi[k] = a * up[1] + b * um[1];
    }
    TwoComponentState::new(MomentumLine::from_values(grid, phi)?, MomentumLine::from_values(grid, chi)?)
}

/// `exp(-i H t / hbar) = cos(Et/hbar) 1 - i sin(Et/hbar) H / E`, exact since
/// `H^2 = E^2`.
pub fn fv_propagator(p: f64, t: f64, spec: &Spectrum) -> ChargeMatrix {
    let e = spec.energy(p);
    let theta = e * t / spec.units.hbar;
    ChargeMatrix::identity() * C64::new(theta.cos(), 0.0) + fv_hamiltonian(p, spec) * C64::new(0.0, -theta.sin() / e)
}

/// Exact free evolution of a two-component state.
pub fn fv_evolve(state: &TwoComponentState, t: f64, spec: &Spectrum) -> Result<TwoComponentState> {
    spec.require_free()?;
    let grid = *state.grid();
    let n = grid.n;
    let mut phi = Array1::zeros(n);
    let mut chi = Array1::zeros(n);
    for k in 0..n {
        let u = fv_propagator(grid.p(k), t, spec);
        let [a, b] = u.apply([state.phi.get(k), state.chi.get(k)]);
        phi[k] = a;
        chi[k] = b;
    }
    TwoComponentState::new(MomentumLine::from_values(grid, phi)?, MomentumLine::from_values(grid, chi)?)
}

/// Operator in the energy representation. Row and column index `2 n + b`
/// addresses mode `n` with energy `energies[n]` on branch `b` (0 = plus,
/// 1 = minus).
#[derive(Clone, Debug)]
pub struct EnergyBasisOperator {
    pub energies: Vec<f64>,
    pub entries: Array2<C64>,
}

impl EnergyBasisOperator {
    /// Energy-representation elements `F_nm u_a(n)^T tau3 u_b(m)` of a
    /// charge-invariant operator `F (x) 1` given in a momentum basis.
    pub fn from_charge_invariant(op: &OperatorMatrix, momenta: &[f64], spec: &Spectrum) -> Result<Self> {
        spec.require_free()?;
        let dim = op.dim();
        if momenta.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: momenta.len() });
        }
        let energies: Vec<f64> = momenta.iter().map(|&p| spec.energy(p)).collect();
        let vectors: Vec<[[f64; 2]; 2]> = energies
            .iter()
            .map(|&e| {
                let (up, um) = branch_vectors(e, &spec.units);
                [up, um]
            })
            .collect();
        let mut entries = Array2::zeros((2 * dim, 2 * dim));
        for n in 0..dim {
            for m in 0..dim {
                let f = op.get(n, m);
                for a in 0..2 {
                    for b in 0..2 {
                        let (x, y) = (vectors[n][a], vectors[m][b]);
                        entries[[2 * n + a, 2 * m + b]] = f * (x[0] * y[0] - x[1] * y[1]);
                    }
                }
            }
        }
        Ok(Self { energies, entries })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Charge-diagonal part `[A]_nm` as a 2x2 block.
    pub fn even_block(&self, n: usize, m: usize) -> ChargeMatrix {
        let e = &self.entries;
        ChargeMatrix([[e[[2 * n, 2 * m]], ZERO], [ZERO, e[[2 * n + 1, 2 * m + 1]]]])
    }

    /// Charge-off-diagonal part `{A}_nm` as a 2x2 block.
    pub fn odd_block(&self, n: usize, m: usize) -> ChargeMatrix {
        let e = &self.entries;
        ChargeMatrix([[ZERO, e[[2 * n, 2 * m + 1]]], [e[[2 * n + 1, 2 * m]], ZERO]])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintReport {
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Largest violation of `{A}_nm = (E(m) - E(n)) / (E(m) + E(n)) tau1 [A]_nm`.
pub fn check_even_odd_constraint(op: &EnergyBasisOperator, spec: &Spectrum) -> Result<ConstraintReport> {
    spec.require_free()?;
    let dim = op.dim();
    if op.entries.dim() != (2 * dim, 2 * dim) {
        return Err(Error::DimensionMismatch { expected: 2 * dim, found: op.entries.nrows() });
    }
    let mut worst = 0.0f64;
    for n in 0..dim {
        for m in 0..dim {
            let (en, em) = (op.energies[n], op.energies[m]);
            let f = C64::new((em - en) / (em + en), 0.0);
            let predicted = ChargeMatrix::tau1() * op.even_block(n, m) * f;
            worst = worst.max((op.odd_block(n, m) - predicted).max_abs());
        }
    }
    let tolerance = 1e-8;
    Ok(ConstraintReport { max_deviation: worst, tolerance, pass: worst <= tolerance })
}

/// Lattice momenta of `grid`.
pub fn lattice_momenta(grid: &PhaseGrid) -> Vec<f64> {
    (0..grid.n).map(|k| grid.p(k)).collect()
}

/// `q = i hbar d/dp` in the lattice momentum basis, as the band-limited
/// (trigonometric) derivative matrix.
pub fn position_operator_momentum_basis(grid: &PhaseGrid) -> OperatorMatrix {
    let n = grid.n;
    let mut d = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        for l in 0..n {
            if k == l {
                continue;
            }
            let diff = k as f64 - l as f64;
            let sign = if (k + l) % 2 == 0 { 1.0 } else { -1.0 };
            let deriv = sign * PI / (n as f64 * grid.dp) / (PI * diff / n as f64).tan();
            d[[k, l]] = I * grid.hbar() * deriv;
        }
    }
    OperatorMatrix::new(d, BasisKind::DiscreteMomentum).expect("finite")
}

/// Momentum operator, diagonal in the lattice momentum basis.
pub fn momentum_operator_momentum_basis(grid: &PhaseGrid) -> OperatorMatrix {
    let mut m = Array2::<C64>::zeros((grid.n, grid.n));
    for k in 0..grid.n {
        m[[k, k]] = grid.p(k).into();
    }
    OperatorMatrix::new(m, BasisKind::DiscreteMomentum).expect("finite")
}

/// Kronecker product `F (x) M` in the `(momentum, charge)` ordering.
pub fn kron_charge(op: &Array2<C64>, charge: &ChargeMatrix) -> Array2<C64> {
    let n = op.nrows();
    let mut out = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            for a in 0..2 {
                for b in 0..2 {
                    out[[2 * i + a, 2 * j + b]] = op[[i, j]] * charge.0[a][b];
                }
            }
        }
    }
    out
}

/// Block-diagonal two-component Hamiltonian on a momentum lattice.
pub fn fv_hamiltonian_matrix(momenta: &[f64], spec: &Spectrum) -> Array2<C64> {
    let n = momenta.len();
    let mut out = Array2::zeros((2 * n, 2 * n));
    for (k, &p) in momenta.iter().enumerate() {
        let h = fv_hamiltonian(p, spec);
        for a in 0..2 {
            for b in 0..2 {
                out[[2 * k + a, 2 * k + b]] = h.0[a][b];
            }
        }
    }
    out
}

/// Largest entry of `[A, 1 (x) tau_i]` over `i = 1, 2, 3`. Zero exactly for
/// charge-invariant operators.
pub fn charge_commutator_norm(op: &Array2<C64>) -> f64 {
    let n = op.nrows() / 2;
    let eye = Array2::<C64>::eye(n);
    [ChargeMatrix::tau1(), ChargeMatrix::tau2(), ChargeMatrix::tau3()]
        .iter()
        .map(|t| {
            let tk = kron_charge(&eye, t);
            let c = op.dot(&tk) - tk.dot(op);
            c.iter().fold(0.0f64, |m, v| m.max(v.norm()))
        })
        .fold(0.0, f64::max)
}
