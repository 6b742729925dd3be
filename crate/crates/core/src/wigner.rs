//! Wigner functions: cross-Wigner kernels, the four-component charge
//! decomposition with ε/χ weights, mean values and Gaussian packets.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Axis};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasegrid::{dft_q, Direction, GridField, Interleaved, MomentumLine, PhaseGrid};
use crate::relkin::{chi_unchecked, epsilon_unchecked, EnergyRep, Spectrum};
use crate::starcalc::{Parity, Symbol};

/// Boundary tail tolerance for packets, relative to the peak amplitude.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Gaussian packet centred at `(q0, p0)` with position width `sigma_q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavePacketSpec {
    pub q0: f64,
    pub p0: f64,
    pub sigma_q: f64,
}

impl WavePacketSpec {
    pub fn new(q0: f64, p0: f64, sigma_q: f64) -> Result<Self> {
        if !(sigma_q.is_finite() && sigma_q > 0.0) {
            return Err(Error::InvalidParameter { name: "sigma_q", reason: format!("must be positive, got {sigma_q}") });
        }
        if !(q0.is_finite() && p0.is_finite()) {
            return Err(Error::InvalidParameter { name: "packet", reason: "centre must be finite".into() });
        }
        Ok(Self { q0, p0, sigma_q })
    }

    pub fn mirrored(&self) -> Self {
        Self { q0: -self.q0, p0: -self.p0, sigma_q: self.sigma_q }
    }
}

/// The four pieces of the relativistic Wigner function.
#[derive(Clone, Debug)]
pub struct WignerComponents {
    pub even_plus: Symbol,
    pub even_minus: Symbol,
    pub odd_plus: Symbol,
    pub odd_minus: Symbol,
    /// `int (|C+|^2 + |C-|^2) dp` of the state the components came from.
    pub input_norm: f64,
}

/// Quadrature of each component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentNorms {
    pub even_plus: f64,
    pub even_minus: f64,
    pub odd_plus_re: f64,
    pub odd_plus_im: f64,
}

/// File suffixes of the four components.
pub const COMPONENT_SUFFIXES: [&str; 4] = [".even+", ".even-", ".odd+", ".odd-"];

impl WignerComponents {
    pub fn grid(&self) -> &PhaseGrid {
        self.even_plus.grid()
    }

    pub fn components(&self) -> [&Symbol; 4] {
        [&self.even_plus, &self.even_minus, &self.odd_plus, &self.odd_minus]
    }

    pub fn names() -> [&'static str; 4] {
        ["even_plus", "even_minus", "odd_plus", "odd_minus"]
    }

    pub fn norms(&self) -> ComponentNorms {
        let odd = self.odd_plus.field().integrate();
        ComponentNorms {
            even_plus: self.even_plus.field().integrate().re,
            even_minus: self.even_minus.field().integrate().re,
            odd_plus_re: odd.re,
            odd_plus_im: odd.im,
        }
    }

    /// Largest pointwise gap over the four components.
    pub fn max_abs_diff(&self, other: &WignerComponents) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(&Symbol, usize) -> Result<Symbol>) -> Result<WignerComponents> {
        Ok(WignerComponents {
            even_plus: f(&self.even_plus, 0)?,
            even_minus: f(&self.even_minus, 1)?,
            odd_plus: f(&self.odd_plus, 2)?,
            odd_minus: f(&self.odd_minus, 3)?,
            input_norm: self.input_norm,
        })
    }

    /// One JSON document holding the four fields by name.
    pub fn to_json_value(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (name, c) in Self::names().iter().zip(self.components()) {
            map.insert((*name).to_string(), c.field().to_json_value());
        }
        serde_json::Value::Object(map)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, &self.to_json_value())?;
        Ok(())
    }

    /// Four CSV files `<stem>.even+`, `<stem>.even-`, `<stem>.odd+`,
    /// `<stem>.odd-` next to `stem`.
    pub fn write_csv_files(&self, stem: &Path) -> Result<Vec<std::path::PathBuf>> {
        let mut written = Vec::new();
        for (suffix, c) in COMPONENT_SUFFIXES.iter().zip(self.components()) {
            let mut name = stem.as_os_str().to_owned();
            name.push(suffix);
            let path = std::path::PathBuf::from(name);
            let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
            c.field().write_csv(file)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Mixed-representation samples
/// `F(p_k, P_l) = a*(p - P/2) b(p + P/2) weight(p - P/2, p + P/2) / (2 pi hbar)`,
/// whose inverse q-transform is the weighted cross-Wigner function.
pub(crate) fn weighted_mixed(
    a: &Interleaved,
    b: &Interleaved,
    grid: &PhaseGrid,
    weight: impl Fn(f64, f64) -> f64 + Sync,
) -> GridField {
    let n = grid.n;
    let half = (n / 2) as i64;
    let norm = 1.0 / (2.0 * PI * grid.hbar());
    let entry = |k: usize, s: i64| -> C64 {
        let shift = 0.5 * s as f64 * grid.dp;
        let p = grid.p(k);
        a.at(k, -s).conj() * b.at(k, s) * (weight(p - shift, p + shift) * norm)
    };
    let mut values = Array2::<C64>::zeros((n, n));
    values.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(k, mut row)| {
        for (l, v) in row.iter_mut().enumerate() {
            let s = l as i64 - half;
            *v = if s == -half { 0.5 * (entry(k, s) + entry(k, -s)) } else { entry(k, s) };
        }
    });
    GridField::from_values(*grid, values).expect("n x n")
}

fn weighted_cross_wigner(
    a: &MomentumLine,
    b: &MomentumLine,
    weight: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<Symbol> {
    a.grid().ensure_same(b.grid())?;
    let grid = *a.grid();
    let (ai, bi) = (a.interleaved(), b.interleaved());
    let mixed = weighted_mixed(&ai, &bi, &grid, weight);
    Symbol::from_field(dft_q(&mixed, Direction::Inverse))
}

/// `W_ab(p, q) = (1/2 pi hbar) int a*(p + P/2) b(p - P/2) exp(-i P q / hbar) dP`
pub fn cross_wigner(a: &MomentumLine, b: &MomentumLine) -> Result<Symbol> {
    weighted_cross_wigner(a, b, |_, _| 1.0)
}

/// Four-component decomposition of a free-particle state. Each weight is
/// applied in the two-momentum representation before the q-transform.
pub fn decompose(rep: &EnergyRep, spec: &Spectrum) -> Result<WignerComponents> {
    if !spec.is_free() {
        return Err(Error::InvalidParameter { name: "spectrum", reason: "a free-particle spectrum is required".into() });
    }
    let energy = |p: f64| spec.energy(p);
    let (cp, cm) = (&rep.c_plus, &rep.c_minus);
    let eps = |p1: f64, p2: f64| epsilon_unchecked(energy(p1), energy(p2));
    let even_plus = weighted_cross_wigner(cp, cp, eps)?.with_parity(Parity::Even);
    let even_minus = weighted_cross_wigner(cm, cm, eps)?.with_parity(Parity::Even);
    let odd_plus = weighted_cross_wigner(cp, cm, |p1, p2| chi_unchecked(energy(p1), energy(p2)))?
        .with_parity(Parity::Odd);
    let odd_minus = weighted_cross_wigner(cm, cp, |p1, p2| chi_unchecked(energy(p2), energy(p1)))?
        .with_parity(Parity::Odd);
    Ok(WignerComponents { even_plus, even_minus, odd_plus, odd_minus, input_norm: rep.norm() })
}

/// Pointwise sum of the four components.
pub fn total(comp: &WignerComponents) -> Result<Symbol> {
    let s = comp
        .even_plus
        .try_add(&comp.even_minus)?
        .try_add(&comp.odd_plus)?
        .try_add(&comp.odd_minus)?;
    Ok(s.with_parity(Parity::None))
}

/// `int A W dp dq`, complex.
pub fn mean_value_complex(observable: &Symbol, w: &Symbol) -> Result<C64> {
    Ok(observable.field().try_mul(w.field())?.integrate())
}

/// `int A W dp dq` for a charge-invariant observable.
pub fn mean_value(observable: &Symbol, w: &Symbol) -> Result<f64> {
    Ok(mean_value_complex(observable, w)?.re)
}

/// Positive-branch Gaussian packet
/// `C+(p) = N exp(-(p - p0)^2 sigma^2 / 2 hbar^2) exp(-i p q0 / hbar)`, `C- = 0`.
pub fn coherent_state(packet: &WavePacketSpec, grid: &PhaseGrid, spec: &Spectrum) -> Result<EnergyRep> {
    let _ = spec;
    let hbar = grid.hbar();
    let s = packet.sigma_q;
    let line = MomentumLine::from_fn(*grid, |p| {
        C64::from_polar((-(p - packet.p0).powi(2) * s * s / (2.0 * hbar * hbar)).exp(), -p * packet.q0 / hbar)
    });
    let norm = line.norm_sqr();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::TailsExceedBoundary { tail: 1.0, tolerance: TAIL_TOLERANCE });
    }
    let line = line.scale(C64::new(1.0 / norm.sqrt(), 0.0));
    let tail_p = line.boundary_tail();
    let position = line.to_position();
    let peak = position.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let tail_q = position[0].norm().max(position[grid.n - 1].norm()) / peak;
    let tail = tail_p.max(tail_q);
    if tail > TAIL_TOLERANCE {
        return Err(Error::TailsExceedBoundary { tail, tolerance: TAIL_TOLERANCE });
    }
    EnergyRep::new(line, MomentumLine::zeros(*grid))
}

/// `int max(0, -Re W) dp dq`
pub fn negativity_volume(w: &Symbol) -> f64 {
    let f = w.field();
    f.values().iter().map(|v| (-v.re).max(0.0)).sum::<f64>() * f.grid().cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasegrid::UnitSystem;

    fn square_grid(n: usize) -> PhaseGrid {
        PhaseGrid::new(n, (2.0 * PI * n as f64).sqrt(), 0.0, UnitSystem::default()).unwrap()
    }

    fn gauss(g: PhaseGrid, q0: f64, p0: f64, s: f64) -> MomentumLine {
        let line = MomentumLine::from_fn(g, |p| C64::from_polar((-(p - p0).powi(2) * s * s / 2.0).exp(), -p * q0));
        line.scale(C64::new(1.0 / line.norm_sqr().sqrt(), 0.0))
    }

    #[test]
    fn gaussian_wigner_matches_closed_form() {
        let g = square_grid(128);
        let (q0, p0, s) = (0.7, -0.4, 1.3);
        let w = cross_wigner(&gauss(g, q0, p0, s), &gauss(g, q0, p0, s)).unwrap();
        let expect = GridField::from_real_fn(g, |p, q| {
            (-(q - q0).powi(2) / (s * s) - s * s * (p - p0).powi(2)).exp() / PI
        });
        assert!(w.field().max_abs_diff(&expect) < 1e-12);
        assert!(w.field().max_imag() < 1e-12);
        assert!((w.field().integrate().re - 1.0).abs() < 1e-10);
        assert!(negativity_volume(&w) < 1e-8);
    }

    #[test]
    fn cross_wigner_conjugation_symmetry() {
        let g = square_grid(64);
        let a = gauss(g, 0.5, 0.2, 1.0);
        let b = gauss(g, -0.3, -0.6, 0.8);
        let ab = cross_wigner(&a, &b).unwrap();
        let ba = cross_wigner(&b, &a).unwrap();
        assert!(ab.field().max_abs_diff(&ba.field().conj()) < 1e-14);
    }

    #[test]
    fn pure_branch_state_has_only_even_plus() {
        let g = square_grid(128);
        let spec = Spectrum::free(UnitSystem::default());
        let rep = coherent_state(&WavePacketSpec::new(0.0, 0.3, 1.0).unwrap(), &g, &spec).unwrap();
        let comp = decompose(&rep, &spec).unwrap();
        assert_eq!(comp.even_minus.field().max_abs(), 0.0);
        assert_eq!(comp.odd_plus.field().max_abs(), 0.0);
        assert_eq!(comp.odd_minus.field().max_abs(), 0.0);
        let t = total(&comp).unwrap();
        assert_eq!(t.field(), comp.even_plus.field());
        assert!((t.field().integrate().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mean_values_of_packet() {
        let g = square_grid(128);
        let spec = Spectrum::free(UnitSystem::default());
        let rep = coherent_state(&WavePacketSpec::new(0.8, 0.0, 1.5).unwrap(), &g, &spec).unwrap();
        let w = total(&decompose(&rep, &spec).unwrap()).unwrap();
        let one = Symbol::constant(g, C64::new(1.0, 0.0));
        assert!((mean_value(&one, &w).unwrap() - 1.0).abs() < 1e-10);
        assert!((mean_value(&Symbol::q(g), &w).unwrap() - 0.8).abs() < 1e-8);
        assert!(mean_value(&Symbol::p(g), &w).unwrap().abs() < 1e-8);
    }

    #[test]
    fn packet_tails_are_checked() {
        let g = PhaseGrid::new(64, 10.0, 0.0, UnitSystem::default()).unwrap();
        let spec = Spectrum::free(UnitSystem::default());
        let wide = WavePacketSpec::new(0.0, 0.0, 4.0).unwrap();
        assert!(matches!(coherent_state(&wide, &g, &spec), Err(Error::TailsExceedBoundary { .. })));
        assert!(WavePacketSpec::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn csv_component_files() {
        let g = PhaseGrid::new(8, 8.0, 0.0, UnitSystem::default()).unwrap();
        let spec = Spectrum::free(UnitSystem::default());
        let rep = EnergyRep::new(gauss(g, 0.0, 0.0, 1.0), gauss(g, 0.0, 0.0, 1.0)).unwrap();
        let comp = decompose(&rep, &spec).unwrap();
        let dir = std::env::temp_dir().join(format!("moyalrel-wigner-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let files = comp.write_csv_files(&dir.join("state")).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["state.even+", "state.even-", "state.odd+", "state.odd-"]);
        let v = comp.to_json_value();
        assert_eq!(v.as_object().unwrap().len(), 4);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
