//! Conjugate phase-space lattices, complex fields sampled on them, the
//! q <-> P spectral transform and Riemann quadrature.
//!
//! Fields are stored as `values[[k, j]]` with `k` the momentum index and `j`
//! the position index. The lattice is periodic in both directions and obeys
//! `dq * dp * n = 2 pi hbar`, which makes the discrete Fourier pair between
//! `q` and the momentum displacement `P` exact on the grid.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, Axis, Zip};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of a run. Natural units (`hbar = m = c = 1`) put
/// positions in Compton wavelengths and momenta in units of `mc`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub hbar: f64,
    pub mass: f64,
    pub c: f64,
    #[serde(default = "unit_charge")]
    pub charge: f64,
}

fn unit_charge() -> f64 {
    1.0
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0, c: 1.0, charge: 1.0 }
    }
}

impl UnitSystem {
    pub fn new(hbar: f64, mass: f64, c: f64, charge: f64) -> Result<Self> {
        let units = Self { hbar, mass, c, charge };
        units.validate()?;
        Ok(units)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("hbar", self.hbar), ("mass", self.mass), ("c", self.c)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {value}"),
                });
            }
        }
        if !self.charge.is_finite() {
            return Err(Error::InvalidParameter {
                name: "charge",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    /// `m c^2`
    pub fn rest_energy(&self) -> f64 {
        self.mass * self.c * self.c
    }

    /// `hbar / (m c)`
    pub fn compton_length(&self) -> f64 {
        self.hbar / (self.mass * self.c)
    }

    /// `m c`
    pub fn momentum_unit(&self) -> f64 {
        self.mass * self.c
    }
}

/// Uniform periodic lattice over the `(q, p)` plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub n: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub dq: f64,
    pub dp: f64,
    pub units: UnitSystem,
}

impl PhaseGrid {
    /// Builds a grid centred at `q = 0` and `p = p_center`. The momentum
    /// step follows from the conjugacy relation.
    pub fn new(n: usize, q_extent: f64, p_center: f64, units: UnitSystem) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::GridSize(n));
        }
        if !(q_extent.is_finite() && q_extent > 0.0) {
            return Err(Error::InvalidParameter {
                name: "q_extent",
                reason: format!("must be positive, got {q_extent}"),
            });
        }
        if !p_center.is_finite() {
            return Err(Error::InvalidParameter {
                name: "p_center",
                reason: "must be finite".into(),
            });
        }
        units.validate()?;
        let nf = n as f64;
        let dq = q_extent / nf;
        let dp = 2.0 * PI * units.hbar / (nf * dq);
        Ok(Self {
            n,
            q_min: -0.5 * q_extent,
            q_max: 0.5 * q_extent,
            p_min: p_center - 0.5 * nf * dp,
            p_max: p_center + 0.5 * nf * dp,
            dq,
            dp,
            units,
        })
    }

    pub fn hbar(&self) -> f64 {
        self.units.hbar
    }

    pub fn q_extent(&self) -> f64 {
        self.q_max - self.q_min
    }

    pub fn p_extent(&self) -> f64 {
        self.p_max - self.p_min
    }

    pub fn p_center(&self) -> f64 {
        0.5 * (self.p_min + self.p_max)
    }

    /// Position of column `j`.
    pub fn q(&self, j: usize) -> f64 {
        self.q_min + j as f64 * self.dq
    }

    /// Momentum of row `k`.
    pub fn p(&self, k: usize) -> f64 {
        self.p_min + k as f64 * self.dp
    }

    /// Signed offset `l - n/2` of a transformed column.
    pub fn displacement_index(&self, l: usize) -> i64 {
        l as i64 - (self.n / 2) as i64
    }

    /// Momentum displacement `P` conjugate to `q` carried by column `l` of a
    /// forward-transformed field.
    pub fn displacement(&self, l: usize) -> f64 {
        self.displacement_index(l) as f64 * self.dp
    }

    pub fn qs(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n).map(|j| self.q(j)))
    }

    pub fn ps(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n).map(|k| self.p(k)))
    }

    pub fn cell_area(&self) -> f64 {
        self.dq * self.dp
    }

    pub(crate) fn ensure_same(&self, other: &PhaseGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Direction of the q <-> P transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `F(p, P) = dq/(2 pi hbar) * sum_j f(p, q_j) exp(-i P q_j / hbar)`
    Forward,
    /// `f(p, q) = dp * sum_l F(p, P_l) exp(+i P_l q / hbar)`
    Inverse,
}

/// Complex samples over a [`PhaseGrid`], indexed `(p, q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: PhaseGrid,
    values: Array2<C64>,
}

impl GridField {
    pub fn zeros(grid: PhaseGrid) -> Self {
        Self { grid, values: Array2::zeros((grid.n, grid.n)) }
    }

    pub fn constant(grid: PhaseGrid, value: C64) -> Self {
        Self { grid, values: Array2::from_elem((grid.n, grid.n), value) }
    }

    pub fn from_values(grid: PhaseGrid, values: Array2<C64>) -> Result<Self> {
        if values.dim() != (grid.n, grid.n) {
            return Err(Error::DimensionMismatch {
                expected: grid.n * grid.n,
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(p, q)` at every lattice point.
    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> C64 + Sync) -> Self {
        let mut values = Array2::zeros((grid.n, grid.n));
        values
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(k, mut row)| {
                let p = grid.p(k);
                for (j, v) in row.iter_mut().enumerate() {
                    *v = f(p, grid.q(j));
                }
            });
        Self { grid, values }
    }

    pub fn from_real_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        Self::from_fn(grid, |p, q| C64::new(f(p, q), 0.0))
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<C64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<C64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<C64> {
        self.values
    }

    pub fn get(&self, k: usize, j: usize) -> C64 {
        self.values[[k, j]]
    }

    /// Riemann sum `sum f * dq * dp`.
    pub fn integrate(&self) -> C64 {
        self.values.sum() * self.grid.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn min_real(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.re))
    }

    pub fn max_real(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.re))
    }

    /// True when the imaginary residue is at most `10^-10` of the largest
    /// magnitude.
    pub fn is_real_valued(&self) -> bool {
        self.max_imag() <= 1e-10 * self.max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> GridField {
        GridField { grid: self.grid, values: self.values.mapv(f) }
    }

    pub fn conj(&self) -> GridField {
        self.map(|v| v.conj())
    }

    pub fn real_part(&self) -> GridField {
        self.map(|v| C64::new(v.re, 0.0))
    }

    pub fn scale(&self, factor: C64) -> GridField {
        self.map(|v| v * factor)
    }

    pub fn try_add(&self, other: &GridField) -> Result<GridField> {
        self.grid.ensure_same(&other.grid)?;
        Ok(GridField { grid: self.grid, values: &self.values + &other.values })
    }

    pub fn try_sub(&self, other: &GridField) -> Result<GridField> {
        self.grid.ensure_same(&other.grid)?;
        Ok(GridField { grid: self.grid, values: &self.values - &other.values })
    }

    /// Pointwise product.
    pub fn try_mul(&self, other: &GridField) -> Result<GridField> {
        self.grid.ensure_same(&other.grid)?;
        Ok(GridField { grid: self.grid, values: &self.values * &other.values })
    }

    /// `a * self + b * other`
    pub fn axpby(&self, a: C64, other: &GridField, b: C64) -> Result<GridField> {
        self.grid.ensure_same(&other.grid)?;
        let mut values = self.values.clone();
        Zip::from(&mut values).and(&other.values).for_each(|x, &y| *x = a * *x + b * y);
        Ok(GridField { grid: self.grid, values })
    }

    /// True when every row is constant along `q` to relative `tol`.
    pub fn is_q_independent(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.values.axis_iter(Axis(0)).all(|row| {
            let first = row[0];
            row.iter().all(|v| (v - first).norm() <= tol * scale)
        })
    }

    /// The column of values at `j = 0`, as a function of momentum.
    pub fn momentum_profile(&self) -> MomentumLine {
        MomentumLine { grid: self.grid, values: self.values.column(0).to_owned() }
    }

    pub fn dft_q(&self, direction: Direction) -> GridField {
        dft_q(self, direction)
    }
}

/// Spectral transform along the position axis. Column `l` of the forward
/// result carries the displacement `P_l = (l - n/2) dp`. The pair is an
/// exact inverse on the grid.
pub fn dft_q(field: &GridField, direction: Direction) -> GridField {
    let grid = field.grid;
    let n = grid.n;
    let mut planner = FftPlanner::<f64>::new();
    let fft = match direction {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    };
    let norm = match direction {
        Direction::Forward => grid.dq / (2.0 * PI * grid.hbar()),
        Direction::Inverse => grid.dp,
    };
    let mut values = field.values.clone();
    // q_j P_l / hbar = 2 pi (j - n/2)(l - n/2) / n; with n/2 even the centring
    // reduces to the checkerboard sign (-1)^(j + l).
    values
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .for_each(|mut row| {
            let slice = row.as_slice_mut().expect("rows are contiguous");
            for (i, v) in slice.iter_mut().enumerate() {
                if i % 2 == 1 {
                    *v = -*v;
                }
            }
            fft.process(slice);
            for (i, v) in slice.iter_mut().enumerate() {
                *v *= if i % 2 == 1 { -norm } else { norm };
            }
        });
    GridField { grid, values }
}

/// `sum f * dq * dp`
pub fn integrate(field: &GridField) -> C64 {
    field.integrate()
}

/// A momentum-representation wave function sampled on the rows of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumLine {
    grid: PhaseGrid,
    values: Array1<C64>,
}

impl MomentumLine {
    pub fn zeros(grid: PhaseGrid) -> Self {
        Self { grid, values: Array1::zeros(grid.n) }
    }

    pub fn from_values(grid: PhaseGrid, values: Array1<C64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::DimensionMismatch { expected: grid.n, found: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64) -> C64) -> Self {
        Self { grid, values: Array1::from_iter((0..grid.n).map(|k| f(grid.p(k)))) }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array1<C64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array1<C64> {
        &mut self.values
    }

    pub fn get(&self, k: usize) -> C64 {
        self.values[k]
    }

    /// `sum |a|^2 dp`
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dp
    }

    /// `sum conj(self) * other * dp`
    pub fn inner(&self, other: &MomentumLine) -> C64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.grid.dp
    }

    pub fn scale(&self, factor: C64) -> MomentumLine {
        MomentumLine { grid: self.grid, values: self.values.mapv(|v| v * factor) }
    }

    pub fn map_indexed(&self, f: impl Fn(f64, C64) -> C64) -> MomentumLine {
        let grid = self.grid;
        MomentumLine {
            grid,
            values: Array1::from_iter(self.values.iter().enumerate().map(|(k, &v)| f(grid.p(k), v))),
        }
    }

    /// Largest magnitude among the two boundary samples, relative to the peak.
    pub fn boundary_tail(&self) -> f64 {
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if peak == 0.0 {
            return 0.0;
        }
        let n = self.values.len();
        self.values[0].norm().max(self.values[n - 1].norm()) / peak
    }

    /// Position-representation samples
    /// `psi(q_j) = dp / sqrt(2 pi hbar) * sum_k a(p_k) exp(i p_k q_j / hbar)`.
    pub fn to_position(&self) -> Array1<C64> {
        let grid = self.grid;
        let n = grid.n;
        let mut buf: Vec<C64> = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| if k % 2 == 1 { -v } else { v })
            .collect();
        FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut buf);
        let norm = grid.dp / (2.0 * PI * grid.hbar()).sqrt();
        let pc = grid.p_center();
        Array1::from_iter(buf.into_iter().enumerate().map(|(j, v)| {
            let sign = if j % 2 == 1 { -norm } else { norm };
            v * C64::from_polar(sign, pc * grid.q(j) / grid.hbar())
        }))
    }

    /// Inverse of [`MomentumLine::to_position`].
    pub fn from_position(grid: PhaseGrid, psi: &Array1<C64>) -> Self {
        Self::from_position_shifted(grid, psi, 0.0)
    }

    /// Momentum samples at `p_k + shift` of the band-limited function with
    /// position samples `psi`.
    fn from_position_shifted(grid: PhaseGrid, psi: &Array1<C64>, shift: f64) -> Self {
        let n = grid.n;
        let hbar = grid.hbar();
        let pc = grid.p_center() + shift;
        let mut buf: Vec<C64> = psi
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let sign = if j % 2 == 1 { -1.0 } else { 1.0 };
                v * C64::from_polar(sign, -pc * grid.q(j) / hbar)
            })
            .collect();
        FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
        let norm = grid.dq / (2.0 * PI * hbar).sqrt();
        let values = Array1::from_iter(
            buf.into_iter()
                .enumerate()
                .map(|(k, v)| v * if k % 2 == 1 { -norm } else { norm }),
        );
        Self { grid, values }
    }

    /// Values at the interleaved points `p_k + dp/2`, exact for functions
    /// whose position representation fits inside the grid.
    pub fn half_shifted(&self) -> MomentumLine {
        Self::from_position_shifted(self.grid, &self.to_position(), 0.5 * self.grid.dp)
    }

    /// Integer and half-integer samples packaged for pair lookups.
    pub fn interleaved(&self) -> Interleaved {
        Interleaved { whole: self.values.clone(), half: self.half_shifted().values }
    }
}

/// Samples of a momentum function on the lattice and on the half-shifted
/// lattice, addressed in units of `dp / 2`.
#[derive(Clone, Debug)]
pub struct Interleaved {
    whole: Array1<C64>,
    half: Array1<C64>,
}

impl Interleaved {
    /// Value at `p_k + twice_offset * dp / 2`, wrapping periodically.
    pub fn at(&self, k: usize, twice_offset: i64) -> C64 {
        let n = self.whole.len() as i64;
        let k = k as i64;
        if twice_offset.rem_euclid(2) == 0 {
            self.whole[(k + twice_offset / 2).rem_euclid(n) as usize]
        } else {
            self.half[(k + (twice_offset - 1).div_euclid(2)).rem_euclid(n) as usize]
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GridHeader {
    n: usize,
    q_min: f64,
    q_max: f64,
    p_min: f64,
    p_max: f64,
    hbar: f64,
    mass: f64,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct FieldDocument {
    grid: GridHeader,
    values: Vec<[f64; 2]>,
}

impl GridField {
    /// CSV with header `q,p,re,im`, rows ordered over `p` then `q`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "q,p,re,im")?;
        for k in 0..self.grid.n {
            let p = self.grid.p(k);
            for j in 0..self.grid.n {
                let v = self.values[[k, j]];
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt17(self.grid.q(j)),
                    fmt17(p),
                    fmt17(v.re),
                    fmt17(v.im)
                )?;
            }
        }
        Ok(())
    }

    /// Parses the CSV form written by [`GridField::write_csv`] onto `grid`.
    pub fn read_csv<R: BufRead>(grid: PhaseGrid, input: R) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.n * grid.n);
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != "q,p,re,im" {
                    return Err(Error::InvalidParameter {
                        name: "csv header",
                        reason: format!("expected `q,p,re,im`, found `{line}`"),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::InvalidParameter {
                    name: "csv row",
                    reason: format!("line {} has {} columns", i + 1, cols.len()),
                });
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::InvalidParameter {
                    name: "csv value",
                    reason: format!("line {}: {e}", i + 1),
                })
            };
            values.push(C64::new(parse(cols[2])?, parse(cols[3])?));
        }
        let found = values.len();
        let values = Array2::from_shape_vec((grid.n, grid.n), values)
            .map_err(|_| Error::DimensionMismatch { expected: grid.n * grid.n, found })?;
        Ok(Self { grid, values })
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let g = &self.grid;
        let doc = FieldDocument {
            grid: GridHeader {
                n: g.n,
                q_min: g.q_min,
                q_max: g.q_max,
                p_min: g.p_min,
                p_max: g.p_max,
                hbar: g.units.hbar,
                mass: g.units.mass,
                c: g.units.c,
            },
            values: self.values.iter().map(|v| [v.re, v.im]).collect(),
        };
        serde_json::to_value(doc).expect("field document serializes")
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, &self.to_json_value())?;
        Ok(())
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self> {
        let doc: FieldDocument = serde_json::from_value(value)?;
        let h = doc.grid;
        let units = UnitSystem::new(h.hbar, h.mass, h.c, 1.0)?;
        let grid = PhaseGrid::new(h.n, h.q_max - h.q_min, 0.5 * (h.p_min + h.p_max), units)?;
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
        if !rel(grid.q_min, h.q_min) || !rel(grid.p_min, h.p_min) || !rel(grid.p_max, h.p_max) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "extents violate dq * dp * n = 2 pi hbar".into(),
            });
        }
        let found = doc.values.len();
        let values = Array2::from_shape_vec(
            (h.n, h.n),
            doc.values.into_iter().map(|[re, im]| C64::new(re, im)).collect(),
        )
        .map_err(|_| Error::DimensionMismatch { expected: h.n * h.n, found })?;
        Ok(Self { grid, values })
    }

    pub fn read_json<R: std::io::Read>(input: R) -> Result<Self> {
        Self::from_json_value(serde_json::from_reader(input)?)
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
