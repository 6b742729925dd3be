//! Quantization conditions for the even and odd Wigner components of a free
//! particle: the mixed second log-derivative of the two-point kernel must
//! match a fixed function of the two momenta.

use std::f64::consts::PI;
use std::io::Write;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasegrid::{dft_q, fmt17, Direction, GridField, MomentumLine, PhaseGrid, UnitSystem};
use crate::relkin::dispersion;
use crate::starcalc::Symbol;

/// Kernel values below this fraction of the peak are treated as zeros.
pub const NEAR_ZERO_RATIO: f64 = 1e-6;

/// Half-width, in lattice steps, of the band removed around `p1 = ±p2`
/// when checking odd components.
pub const ODD_BAND_STEPS: f64 = 4.0;

/// Which of the two conditions applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Even,
    Odd,
}

/// Right-hand side used by [`verify_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// The relativistic expressions of [`rhs_even`] / [`rhs_odd`].
    Relativistic,
    /// The nonrelativistic condition: the mixed derivative vanishes.
    Nonrelativistic,
}

/// Closed momentum interval `[p_lo, p_hi]` applied to both arguments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumWindow {
    pub p_lo: f64,
    pub p_hi: f64,
}

impl MomentumWindow {
    pub fn new(p_lo: f64, p_hi: f64) -> Result<Self> {
        if !(p_lo.is_finite() && p_hi.is_finite() && p_lo < p_hi) {
            return Err(Error::InvalidParameter {
                name: "window",
                reason: format!("need p_lo < p_hi, got [{p_lo}, {p_hi}]"),
            });
        }
        Ok(Self { p_lo, p_hi })
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.p_lo && p <= self.p_hi
    }
}

/// A function of two momenta sampled on `p_a x p_b` of a grid's momentum
/// lattice. Entries that cannot be reached are NaN.
#[derive(Clone, Debug)]
pub struct TwoMomentumField {
    grid: PhaseGrid,
    values: Array2<C64>,
}

impl TwoMomentumField {
    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> C64) -> Self {
        let values = Array2::from_shape_fn((grid.n, grid.n), |(a, b)| f(grid.p(a), grid.p(b)));
        Self { grid, values }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<C64> {
        &self.values
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.values[[a, b]]
    }

    pub fn is_defined(&self, a: usize, b: usize) -> bool {
        let v = self.values[[a, b]];
        v.re.is_finite() && v.im.is_finite()
    }

    /// Largest modulus over the defined entries.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().filter(|v| v.re.is_finite() && v.im.is_finite()).fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// `F(p1, p2) = int W((p1 + p2) / 2, q) exp(i (p1 - p2) q / hbar) dq` on the
/// momentum lattice. Midpoints falling between lattice rows use a spectral
/// half-step shift of `W` along `p`; pairs with `|p1 - p2| >= n dp / 2` are
/// out of reach and left as NaN.
pub fn two_point_kernel(w: &Symbol) -> TwoMomentumField {
    let field = w.field();
    let grid = *field.grid();
    let n = grid.n;
    let whole = dft_q(field, Direction::Forward);
    let half = dft_q(&half_shift_p(field), Direction::Forward);
    let weight = 2.0 * PI * grid.hbar();
    let half_n = (n / 2) as i64;
    let mut values = Array2::from_elem((n, n), C64::new(f64::NAN, f64::NAN));
    for a in 0..n {
        for b in 0..n {
            let s = b as i64 - a as i64;
            if s.abs() >= half_n {
                continue;
            }
            let m = a + b;
            let l = (s + half_n) as usize;
            let src = if m % 2 == 0 { &whole } else { &half };
            values[[a, b]] = src.get(m / 2, l) * weight;
        }
    }
    if field.is_real_valued() {
        for a in 0..n {
            for b in 0..a {
                values[[a, b]] = values[[b, a]].conj();
            }
        }
    }
    TwoMomentumField { grid, values }
}

/// `W(p_k + dp / 2, q_j)` by trigonometric interpolation along each column.
fn half_shift_p(field: &GridField) -> GridField {
    let grid = *field.grid();
    let n = grid.n;
    let columns: Vec<Array1<C64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let col = field.values().column(j).to_owned();
            MomentumLine::from_values(grid, col).expect("column length matches the grid").half_shifted().values().clone()
        })
        .collect();
    let values = Array2::from_shape_fn((n, n), |(k, j)| columns[j][k]);
    GridField::from_values(grid, values).expect("shape matches the grid")
}

/// Centred mixed difference of `ln F` with step `step` lattice sites. The
/// log is differenced as the log of a cross ratio, which keeps the branch
/// continuous for smooth kernels.
fn mixed_difference(f: &TwoMomentumField, a: usize, b: usize, step: usize, floor: f64) -> Option<C64> {
    let n = f.grid.n;
    if a < step || b < step || a + step >= n || b + step >= n {
        return None;
    }
    let corner = |da: isize, db: isize| {
        let v = f.get((a as isize + da) as usize, (b as isize + db) as usize);
        (v.re.is_finite() && v.im.is_finite() && v.norm() >= floor).then_some(v)
    };
    let s = step as isize;
    let pp = corner(s, s)?;
    let mm = corner(-s, -s)?;
    let pm = corner(s, -s)?;
    let mp = corner(-s, s)?;
    let h = step as f64 * f.grid.dp;
    Some(((pp * mm) / (pm * mp)).ln() / (4.0 * h * h))
}

/// `d^2 ln F / dp1 dp2` by the centred four-point stencil with step `dp`.
/// Sites whose stencil leaves the lattice or touches a near-zero of `F` are NaN.
pub fn log_mixed_second_derivative(f: &TwoMomentumField) -> TwoMomentumField {
    let floor = NEAR_ZERO_RATIO * f.max_abs();
    let n = f.grid.n;
    let nan = C64::new(f64::NAN, f64::NAN);
    let values =
        Array2::from_shape_fn((n, n), |(a, b)| mixed_difference(f, a, b, 1, floor).unwrap_or(nan));
    TwoMomentumField { grid: f.grid, values }
}

/// `-c^4 p1 p2 / (E1 E2 (E1 + E2)^2)`
pub fn rhs_even(p1: f64, p2: f64, units: &UnitSystem) -> f64 {
    let (e1, e2) = (dispersion(p1, units), dispersion(p2, units));
    -units.c.powi(4) * p1 * p2 / (e1 * e2 * (e1 + e2).powi(2))
}

/// `-c^4 p1 p2 / (E1 E2 (E1 - E2)^2)`, singular where `E1 = E2`.
pub fn rhs_odd(p1: f64, p2: f64, units: &UnitSystem) -> Result<f64> {
    let (e1, e2) = (dispersion(p1, units), dispersion(p2, units));
    if (e1 - e2).abs() < 1e-6 * units.rest_energy() {
        return Err(Error::SingularWindow);
    }
    Ok(-units.c.powi(4) * p1 * p2 / (e1 * e2 * (e1 - e2).powi(2)))
}

/// One tested lattice pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviationSample {
    pub p1: f64,
    pub p2: f64,
    pub lhs: C64,
    pub rhs: f64,
    pub deviation: f64,
}

/// Outcome of a condition check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizationReport {
    pub kind: ComponentKind,
    pub condition: Condition,
    pub window: MomentumWindow,
    pub tolerance: f64,
    pub max_abs_deviation: f64,
    pub pass: bool,
    /// Half-width of the band excluded around `p1 = ±p2`, if any.
    pub excluded_band: Option<f64>,
    /// Whether every tested site used the two-step extrapolated stencil.
    pub richardson: bool,
    /// Always true: only the two displayed differential conditions are
    /// checked, not the remaining constraints of the full criterion.
    pub partial: bool,
    pub points: usize,
    #[serde(skip)]
    pub deviation_field: Vec<DeviationSample>,
}

impl QuantizationReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// `p1,p2,lhs_re,lhs_im,rhs,deviation` rows.
    pub fn write_deviation_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "p1,p2,lhs_re,lhs_im,rhs,deviation")?;
        for s in &self.deviation_field {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt17(s.p1),
                fmt17(s.p2),
                fmt17(s.lhs.re),
                fmt17(s.lhs.im),
                fmt17(s.rhs),
                fmt17(s.deviation)
            )?;
        }
        Ok(())
    }

    /// The tested sample closest to `(p1, p2)`.
    pub fn sample_near(&self, p1: f64, p2: f64) -> Option<&DeviationSample> {
        self.deviation_field.iter().min_by(|x, y| {
            let dx = (x.p1 - p1).hypot(x.p2 - p2);
            let dy = (y.p1 - p1).hypot(y.p2 - p2);
            dx.total_cmp(&dy)
        })
    }
}

/// Checks `w` against the relativistic condition for `kind`.
pub fn verify(w: &Symbol, kind: ComponentKind, window: MomentumWindow, tolerance: f64) -> Result<QuantizationReport> {
    verify_with(w, kind, window, tolerance, Condition::Relativistic)
}

/// Checks `w` on every lattice pair inside `window`. The mixed derivative is
/// Richardson-extrapolated from steps `dp` and `2 dp` wherever the wider
/// stencil fits, otherwise the single-step value is used.
pub fn verify_with(
    w: &Symbol,
    kind: ComponentKind,
    window: MomentumWindow,
    tolerance: f64,
    condition: Condition,
) -> Result<QuantizationReport> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::InvalidParameter { name: "tolerance", reason: format!("must be non-negative, got {tolerance}") });
    }
    let grid = *w.grid();
    let units = grid.units;
    let f = two_point_kernel(w);
    let peak = f.max_abs();
    let floor = NEAR_ZERO_RATIO * peak;
    let sites: Vec<usize> = (0..grid.n).filter(|&k| window.contains(grid.p(k))).collect();
    if sites.is_empty() {
        return Err(Error::InvalidParameter { name: "window", reason: "contains no lattice momenta".into() });
    }
    let band = match kind {
        ComponentKind::Even => None,
        ComponentKind::Odd => Some(ODD_BAND_STEPS * grid.dp),
    };

    let mut samples = Vec::new();
    let mut richardson = true;
    for &a in &sites {
        for &b in &sites {
            let (p1, p2) = (grid.p(a), grid.p(b));
            if let Some(h) = band {
                if (p1 - p2).abs() < h || (p1 + p2).abs() < h {
                    continue;
                }
            }
            let d1 = match mixed_difference(&f, a, b, 1, floor) {
                Some(d) => d,
                None => {
                    let ratio = stencil_ratio(&f, a, b, peak);
                    return Err(Error::NearZeroKernel { ratio });
                }
            };
            // The wide stencil moves p1 - p2 and p1 + p2 by up to 4 dp; next to
            // the odd band it would reach the singular set.
            let wide_fits = band.is_none_or(|_| {
                let reach = 4.5 * grid.dp;
                (p1 - p2).abs() > reach && (p1 + p2).abs() > reach
            });
            let wide = if wide_fits { mixed_difference(&f, a, b, 2, floor) } else { None };
            let lhs = match wide {
                Some(d2) => (d1 * 4.0 - d2) / 3.0,
                None => {
                    richardson = false;
                    d1
                }
            };
            let rhs = match (condition, kind) {
                (Condition::Nonrelativistic, _) => 0.0,
                (Condition::Relativistic, ComponentKind::Even) => rhs_even(p1, p2, &units),
                (Condition::Relativistic, ComponentKind::Odd) => rhs_odd(p1, p2, &units)?,
            };
            samples.push(DeviationSample { p1, p2, lhs, rhs, deviation: (lhs - rhs).norm() });
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter { name: "window", reason: "every pair lies in the excluded band".into() });
    }
    let max_abs_deviation = samples.iter().fold(0.0f64, |m, s| m.max(s.deviation));
    Ok(QuantizationReport {
        kind,
        condition,
        window,
        tolerance,
        max_abs_deviation,
        pass: max_abs_deviation <= tolerance,
        excluded_band: band,
        richardson,
        partial: true,
        points: samples.len(),
        deviation_field: samples,
    })
}

/// Smallest `|F| / max|F|` on the unit stencil around `(a, b)`, for error reports.
fn stencil_ratio(f: &TwoMomentumField, a: usize, b: usize, peak: f64) -> f64 {
    let n = f.grid.n as isize;
    let mut ratio = f64::INFINITY;
    for (da, db) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        let (x, y) = (a as isize + da, b as isize + db);
        let v = if x < 0 || y < 0 || x >= n || y >= n { 0.0 } else { f.get(x as usize, y as usize).norm() };
        ratio = ratio.min(if v.is_finite() { v / peak } else { 0.0 });
    }
    ratio
}
