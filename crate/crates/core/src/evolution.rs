//! Quantum Liouville evolution of the four Wigner components: a Moyal
//! bracket drives the even parts, an anti-Moyal bracket the odd parts.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasegrid::{dft_q, fmt17, Direction, GridField};
use crate::relkin::Branch;
use crate::starcalc::{
    anti_moyal_bracket_with, moyal_bracket_with, multiply_mixed, MomentumSampler, StarOptions, Symbol,
    ANTI_MOYAL_SIGN,
};
use crate::wigner::{total, WignerComponents};

/// Upper bound on the memory held by recorded snapshots.
pub const SNAPSHOT_MEMORY_CAP: usize = 256 * 1024 * 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Closed-form phase per mixed-representation mode.
    ExactMixed,
    /// Classical fourth-order Runge–Kutta on the Liouville right-hand sides.
    SplitStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub record_every: usize,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter { name: "dt", reason: format!("must be positive, got {}", self.dt) });
        }
        if !self.t_final.is_finite() {
            return Err(Error::InvalidParameter { name: "t_final", reason: "must be finite".into() });
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter { name: "record_every", reason: "must be at least 1".into() });
        }
        Ok(())
    }

    /// Number of steps; the step actually taken is `t_final / steps`.
    pub fn steps(&self) -> usize {
        if self.t_final == 0.0 {
            0
        } else {
            ((self.t_final.abs() / self.dt) - 1e-9).ceil().max(1.0) as usize
        }
    }
}

/// Which of the four components a field is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    EvenPlus,
    EvenMinus,
    OddPlus,
    OddMinus,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::EvenPlus, Component::EvenMinus, Component::OddPlus, Component::OddMinus];

    /// Mixed-representation generator for a momentum-only Hamiltonian,
    /// `d/dt F(p, P) = G(p, P) F(p, P)`.
    fn generator(self, e: &MomentumSampler, hbar: f64, k: usize, s: i64) -> C64 {
        let inv = C64::new(0.0, -1.0 / hbar);
        let (up, down) = (e.at(k, s), e.at(k, -s));
        match self {
            Component::EvenPlus => inv * (up - down),
            Component::EvenMinus => -inv * (up - down),
            Component::OddPlus => -inv * ANTI_MOYAL_SIGN * (up + down),
            Component::OddMinus => inv * ANTI_MOYAL_SIGN * (up + down),
        }
    }

    /// Generator with the Nyquist column (`s = -n/2`) averaged over both
    /// displacements it aliases.
    fn nyquist_generator(self, e: &MomentumSampler, hbar: f64, k: usize, s: i64, half: i64) -> C64 {
        if s.abs() == half {
            0.5 * (self.generator(e, hbar, k, -half) + self.generator(e, hbar, k, half))
        } else {
            self.generator(e, hbar, k, s)
        }
    }
}

/// `+-{E, W}_M` for the even components.
pub fn liouville_rhs_even(w: &Symbol, ham: &Symbol, sign: Branch) -> Result<Symbol> {
    let b = moyal_bracket_with(ham, w, &StarOptions::default())?;
    Ok(b.scale(C64::new(sign.sign(), 0.0)))
}

/// `-+[E, W]_M` (anti-Moyal) for the odd components.
pub fn liouville_rhs_odd(w: &Symbol, ham: &Symbol, sign: Branch) -> Result<Symbol> {
    let b = anti_moyal_bracket_with(ham, w, &StarOptions::default())?;
    Ok(b.scale(C64::new(-sign.sign(), 0.0)))
}

fn rhs(c: Component, w: &Symbol, ham: &Symbol) -> Result<Symbol> {
    match c {
        Component::EvenPlus => liouville_rhs_even(w, ham, Branch::Plus),
        Component::EvenMinus => liouville_rhs_even(w, ham, Branch::Minus),
        Component::OddPlus => liouville_rhs_odd(w, ham, Branch::Plus),
        Component::OddMinus => liouville_rhs_odd(w, ham, Branch::Minus),
    }
}

fn momentum_hamiltonian(ham: &Symbol) -> Result<MomentumSampler> {
    ham.momentum_sampler().ok_or(Error::HamiltonianNotMomentumOnly)
}

fn propagate_field(field: &GridField, c: Component, e: &MomentumSampler, t: f64) -> GridField {
    let hbar = field.grid().hbar();
    let mut mixed = dft_q(field, Direction::Forward);
    let half = (field.grid().n / 2) as i64;
    multiply_mixed_raw(&mut mixed, |k, s| (c.nyquist_generator(e, hbar, k, s, half) * t).exp());
    dft_q(&mixed, Direction::Inverse)
}

/// Like [`multiply_mixed`] but without Nyquist averaging of the factor.
fn multiply_mixed_raw(mixed: &mut GridField, factor: impl Fn(usize, i64) -> C64 + Sync) {
    let half = (mixed.grid().n / 2) as i64;
    multiply_mixed(mixed, |k, s| if s == half { factor(k, -s) } else { factor(k, s) });
}

/// Closed-form propagation over time `t` under a momentum-only Hamiltonian.
pub fn exact_propagate(comp: &WignerComponents, ham: &Symbol, t: f64) -> Result<WignerComponents> {
    comp.grid().ensure_same(ham.grid())?;
    let e = momentum_hamiltonian(ham)?;
    comp.map(|s, i| {
        let field = propagate_field(s.field(), Component::ALL[i], &e, t);
        Ok(Symbol::from_field(field)?.with_parity(s.parity()))
    })
}

/// Per-snapshot diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub norm_even: f64,
    pub norm_odd_modulus: f64,
    pub mean_q: f64,
    pub mean_p: f64,
}

pub fn diagnostics(comp: &WignerComponents, t: f64) -> Result<Diagnostics> {
    let grid = *comp.grid();
    let w = total(comp)?;
    let field = w.field();
    let (mut mean_q, mut mean_p) = (0.0, 0.0);
    for ((k, j), v) in field.values().indexed_iter() {
        mean_q += grid.q(j) * v.re;
        mean_p += grid.p(k) * v.re;
    }
    let area = grid.cell_area();
    Ok(Diagnostics {
        t,
        norm_even: comp.even_plus.field().integrate().re + comp.even_minus.field().integrate().re,
        norm_odd_modulus: comp.odd_plus.field().integrate().norm(),
        mean_q: mean_q * area,
        mean_p: mean_p * area,
    })
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<WignerComponents>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn last(&self) -> &WignerComponents {
        self.snapshots.last().expect("trajectories hold the initial state")
    }

    pub fn write_diagnostics_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,norm_even,norm_odd,mean_q,mean_p")?;
        for d in &self.diagnostics {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt17(d.t),
                fmt17(d.norm_even),
                fmt17(d.norm_odd_modulus),
                fmt17(d.mean_q),
                fmt17(d.mean_p)
            )?;
        }
        Ok(())
    }

    /// JSON index `trajectory.json` plus one component document (JSON) or
    /// four component files (CSV) per snapshot.
    pub fn write_to_dir(&self, dir: &Path, json: bool) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut entries = Vec::new();
        for (i, (t, snap)) in self.times.iter().zip(&self.snapshots).enumerate() {
            let stem = format!("snapshot_{i:05}");
            let files: Vec<String> = if json {
                let name = format!("{stem}.json");
                let path = dir.join(&name);
                snap.write_json(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
                written.push(path);
                vec![name]
            } else {
                let paths = snap.write_csv_files(&dir.join(&stem))?;
                let names = paths.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
                written.extend(paths);
                names
            };
            entries.push(serde_json::json!({ "index": i, "t": t, "files": files }));
        }
        let index = dir.join("trajectory.json");
        let doc = serde_json::json!({ "snapshots": entries });
        let mut f = std::fs::File::create(&index)?;
        serde_json::to_writer_pretty(&mut f, &doc)?;
        writeln!(f)?;
        written.push(index);
        let diag = dir.join("diagnostics.csv");
        self.write_diagnostics_csv(std::io::BufWriter::new(std::fs::File::create(&diag)?))?;
        written.push(diag);
        Ok(written)
    }
}

/// Largest step accepted by the explicit scheme, `hbar / (4 max|E|)`.
pub fn max_stable_dt(ham: &Symbol) -> f64 {
    ham.grid().hbar() / (4.0 * ham.field().max_abs())
}

/// Integrates the four components from `t = 0` to `cfg.t_final`.
pub fn evolve(comp: &WignerComponents, ham: &Symbol, cfg: &EvolutionConfig) -> Result<Trajectory> {
    cfg.validate()?;
    comp.grid().ensure_same(ham.grid())?;
    let steps = cfg.steps();
    let recorded = steps / cfg.record_every + 2;
    let n = comp.grid().n;
    let bytes = recorded.saturating_mul(n * n * 4 * std::mem::size_of::<C64>());
    if bytes > SNAPSHOT_MEMORY_CAP {
        return Err(Error::MemoryCap { bytes, cap: SNAPSHOT_MEMORY_CAP });
    }
    let h = if steps == 0 { 0.0 } else { cfg.t_final / steps as f64 };
    let mut traj = Trajectory { times: vec![0.0], snapshots: vec![comp.clone()], diagnostics: vec![diagnostics(comp, 0.0)?] };
    match cfg.scheme {
        Scheme::ExactMixed => {
            momentum_hamiltonian(ham)?;
            for step in 1..=steps {
                if step % cfg.record_every == 0 || step == steps {
                    let t = h * step as f64;
                    let snap = exact_propagate(comp, ham, t)?;
                    traj.diagnostics.push(diagnostics(&snap, t)?);
                    traj.times.push(t);
                    traj.snapshots.push(snap);
                }
            }
        }
        Scheme::SplitStep => {
            let bound = max_stable_dt(ham);
            if h.abs() > bound {
                return Err(Error::StabilityBound { dt: h.abs(), max_dt: bound });
            }
            match ham.momentum_sampler() {
                Some(e) => split_step_mixed(comp, &e, h, steps, cfg.record_every, &mut traj)?,
                None => split_step_generic(comp, ham, h, steps, cfg.record_every, &mut traj)?,
            }
        }
    }
    Ok(traj)
}

/// RK4 on the mixed-representation coefficients, where each right-hand side
/// is a diagonal multiplication.
fn split_step_mixed(
    comp: &WignerComponents,
    e: &MomentumSampler,
    h: f64,
    steps: usize,
    record_every: usize,
    traj: &mut Trajectory,
) -> Result<()> {
    let hbar = comp.grid().hbar();
    let mut states: Vec<GridField> = comp.components().iter().map(|s| dft_q(s.field(), Direction::Forward)).collect();
    let half = (comp.grid().n / 2) as i64;
    let amplification: Vec<GridField> = Component::ALL
        .iter()
        .map(|&c| {
            let mut f = GridField::constant(*comp.grid(), C64::new(1.0, 0.0));
            multiply_mixed_raw(&mut f, |k, s| {
                let z = h * c.nyquist_generator(e, hbar, k, s, half);
                // One RK4 step of dF/dt = G F.
                C64::new(1.0, 0.0) + z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)))
            });
            f
        })
        .collect();
    for step in 1..=steps {
        for (s, a) in states.iter_mut().zip(&amplification) {
            *s = s.try_mul(a)?;
        }
        if step % record_every == 0 || step == steps {
            let t = h * step as f64;
            let snap = comp.map(|sym, i| {
                Ok(Symbol::from_field(dft_q(&states[i], Direction::Inverse))?.with_parity(sym.parity()))
            })?;
            traj.diagnostics.push(diagnostics(&snap, t)?);
            traj.times.push(t);
            traj.snapshots.push(snap);
        }
    }
    Ok(())
}

fn split_step_generic(
    comp: &WignerComponents,
    ham: &Symbol,
    h: f64,
    steps: usize,
    record_every: usize,
    traj: &mut Trajectory,
) -> Result<()> {
    let mut state = comp.clone();
    let hc = |x: f64| C64::new(x, 0.0);
    for step in 1..=steps {
        state = state.map(|w, i| {
            let c = Component::ALL[i];
            let k1 = rhs(c, w, ham)?;
            let k2 = rhs(c, &w.combine(hc(1.0), &k1, hc(0.5 * h))?, ham)?;
            let k3 = rhs(c, &w.combine(hc(1.0), &k2, hc(0.5 * h))?, ham)?;
            let k4 = rhs(c, &w.combine(hc(1.0), &k3, hc(h))?, ham)?;
            let sum = k1.combine(hc(1.0), &k2, hc(2.0))?.combine(hc(1.0), &k3, hc(2.0))?.try_add(&k4)?;
            Ok(w.combine(hc(1.0), &sum, hc(h / 6.0))?.with_parity(w.parity()))
        })?;
        if step % record_every == 0 || step == steps {
            let t = h * step as f64;
            traj.diagnostics.push(diagnostics(&state, t)?);
            traj.times.push(t);
            traj.snapshots.push(state.clone());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasegrid::{PhaseGrid, UnitSystem};
    use crate::relkin::{EnergyRep, Spectrum};
    use crate::wigner::{coherent_state, decompose, WavePacketSpec};
    use std::f64::consts::PI;

    fn setup() -> (PhaseGrid, Spectrum, Symbol) {
        let units = UnitSystem::default();
        // Evolved relativistic packets keep exponential tails on the Compton
        // scale, so the position window is wide.
        let g = PhaseGrid::new(256, 2.0 * (2.0 * PI * 128.0).sqrt(), 0.0, units).unwrap();
        let spec = Spectrum::free(units);
        let s2 = spec.clone();
        let ham = Symbol::momentum_real(g, move |p| s2.energy(p));
        (g, spec, ham)
    }

    #[test]
    fn q_independent_state_is_stationary() {
        let (g, _, ham) = setup();
        let w = Symbol::from_fn(g, |p, _| C64::new((-p * p).exp(), 0.0));
        let r = liouville_rhs_even(&w, &ham, Branch::Plus).unwrap();
        assert!(r.field().max_abs() < 1e-14);
    }

    #[test]
    fn constant_hamiltonian_rotates_odd_part() {
        let (g, _, _) = setup();
        let e0 = 1.7;
        let ham = Symbol::constant(g, C64::new(e0, 0.0));
        let w = Symbol::from_fn(g, |p, q| C64::new((-p * p - q * q).exp(), 0.2 * q));
        let r = liouville_rhs_odd(&w, &ham, Branch::Plus).unwrap();
        let expect = w.field().scale(-C64::new(0.0, -2.0 * e0));
        assert!(r.field().max_abs_diff(&expect) < 1e-13);
    }

    #[test]
    fn exact_propagation_is_reversible_and_conserves_norm() {
        let (g, spec, ham) = setup();
        let rep = coherent_state(&WavePacketSpec::new(0.0, 0.5, 1.0).unwrap(), &g, &spec).unwrap();
        let comp = decompose(&rep, &spec).unwrap();
        let fwd = exact_propagate(&comp, &ham, 3.0).unwrap();
        let back = exact_propagate(&fwd, &ham, -3.0).unwrap();
        assert!(back.max_abs_diff(&comp) < 1e-12);
        let n0 = comp.even_plus.field().integrate().re;
        assert!((fwd.even_plus.field().integrate().re - n0).abs() < 1e-12);
    }

    #[test]
    fn exact_matches_energy_representation_evolution() {
        let (g, spec, ham) = setup();
        let cp = MomentumLineExt::gauss(g, 0.3, 0.5, 1.0);
        let cm = MomentumLineExt::gauss(g, -0.2, -0.4, 1.2);
        let rep = EnergyRep::new(cp, cm).unwrap().normalized();
        let t = 1.3;
        let direct = decompose(&rep.evolve_free(t, &spec), &spec).unwrap();
        let flowed = exact_propagate(&decompose(&rep, &spec).unwrap(), &ham, t).unwrap();
        assert!(direct.max_abs_diff(&flowed) < 1e-10, "{}", direct.max_abs_diff(&flowed));
    }

    #[test]
    fn split_step_is_fourth_order() {
        let (g, spec, ham) = setup();
        let rep = coherent_state(&WavePacketSpec::new(0.0, 0.5, 1.0).unwrap(), &g, &spec).unwrap();
        let comp = decompose(&rep, &spec).unwrap();
        let t = 1.0;
        let exact = exact_propagate(&comp, &ham, t).unwrap();
        let bound = max_stable_dt(&ham);
        let gap = |dt: f64| {
            let cfg = EvolutionConfig { dt, t_final: t, scheme: Scheme::SplitStep, record_every: 1_000_000 };
            evolve(&comp, &ham, &cfg).unwrap().last().max_abs_diff(&exact)
        };
        let (a, b) = (gap(bound), gap(bound / 2.0));
        assert!(a / b >= 14.0, "{a} {b}");
    }

    #[test]
    fn stability_bound_is_enforced() {
        let (g, spec, ham) = setup();
        let rep = coherent_state(&WavePacketSpec::new(0.0, 0.0, 1.0).unwrap(), &g, &spec).unwrap();
        let comp = decompose(&rep, &spec).unwrap();
        let cfg = EvolutionConfig { dt: 1.0, t_final: 2.0, scheme: Scheme::SplitStep, record_every: 1 };
        assert!(matches!(evolve(&comp, &ham, &cfg), Err(Error::StabilityBound { .. })));
        let q_dep = Symbol::from_fn(g, |p, q| C64::new(1.0 + p * p + q * q, 0.0));
        let cfg = EvolutionConfig { dt: 0.1, t_final: 0.2, scheme: Scheme::ExactMixed, record_every: 1 };
        assert!(matches!(evolve(&comp, &q_dep, &cfg), Err(Error::HamiltonianNotMomentumOnly)));
    }

    #[test]
    fn zero_time_returns_input() {
        let (g, spec, ham) = setup();
        let rep = coherent_state(&WavePacketSpec::new(0.0, 0.0, 1.0).unwrap(), &g, &spec).unwrap();
        let comp = decompose(&rep, &spec).unwrap();
        let cfg = EvolutionConfig { dt: 0.1, t_final: 0.0, scheme: Scheme::ExactMixed, record_every: 1 };
        let traj = evolve(&comp, &ham, &cfg).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.last().even_plus.field(), comp.even_plus.field());
    }

    struct MomentumLineExt;
    impl MomentumLineExt {
        fn gauss(g: PhaseGrid, q0: f64, p0: f64, s: f64) -> crate::phasegrid::MomentumLine {
            crate::phasegrid::MomentumLine::from_fn(g, |p| {
                C64::from_polar((-(p - p0).powi(2) * s * s / 2.0).exp(), -p * q0)
            })
        }
    }
}
