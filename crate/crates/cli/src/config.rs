//! Run configuration: one JSON document with a section per concern, patched
//! by `--set key=value` overrides before validation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use moyalrel::evolution::{EvolutionConfig, Scheme};
use moyalrel::phasegrid::{PhaseGrid, UnitSystem};
use moyalrel::quantcheck::{ComponentKind, Condition, MomentumWindow};
use moyalrel::relkin::Spectrum;
use moyalrel::wigner::WavePacketSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridSection,
    pub units: UnitsSection,
    pub packet: PacketSection,
    pub evolution: EvolutionSection,
    pub check: CheckSection,
    pub spectrum: SpectrumSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    pub q_extent: f64,
    pub p_center: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: 256, q_extent: 16.0 * PI, p_center: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitsSection {
    pub hbar: f64,
    pub mass: f64,
    pub c: f64,
    pub charge: f64,
}

impl Default for UnitsSection {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0, c: 1.0, charge: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketSection {
    pub q0: f64,
    pub p0: f64,
    pub sigma_q: f64,
}

impl Default for PacketSection {
    fn default() -> Self {
        Self { q0: 0.0, p0: 0.0, sigma_q: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSection {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub record_every: usize,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self { dt: 0.01, t_final: 1.0, scheme: Scheme::ExactMixed, record_every: 10 }
    }
}

/// State handed to the quantization check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckState {
    /// Positive-branch packet; its even component is tested.
    Coherent,
    /// Packet on the positive branch plus its mirror image on the negative
    /// branch, so that the odd components are nonzero.
    TwoBranch,
    /// Plain Gaussian Wigner function without ε weighting.
    NonrelativisticGaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    pub kind: ComponentKind,
    pub window: WindowSection,
    pub tolerance: f64,
    pub state: CheckState,
    pub condition: Condition,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            kind: ComponentKind::Even,
            window: WindowSection { p_lo: -1.0, p_hi: 1.0 },
            tolerance: 1e-4,
            state: CheckState::Coherent,
            condition: Condition::Relativistic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub p_lo: f64,
    pub p_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub omega: f64,
    pub levels: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { omega: 0.1, levels: 16 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: Format,
    pub path: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { format: Format::Csv, path: PathBuf::from("moyalrel-out") }
    }
}

/// Reads `path` (if any), applies the overrides in order and deserializes.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !doc.is_object() {
        return Err(CliError::Config("the config document must be a JSON object".into()));
    }
    for item in overrides {
        apply_override(&mut doc, item)?;
    }
    serde_json::from_value(doc).map_err(|e| CliError::Config(format!("config: {e}")))
}

/// `a.b.c=value`; the value is parsed as JSON and taken as a string otherwise.
fn apply_override(doc: &mut Value, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{item}`")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("--set: malformed key `{key}`")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = doc;
    for part in &parts[..parts.len() - 1] {
        let map = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("--set {key}: `{part}` is not inside a section")))?;
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| CliError::Config(format!("--set {key}: parent is not a section")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn field_error(field: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {err}"))
}

impl RunConfig {
    pub fn units(&self) -> Result<UnitSystem, CliError> {
        let u = &self.units;
        UnitSystem::new(u.hbar, u.mass, u.c, u.charge).map_err(|e| field_error("units", e))
    }

    pub fn grid(&self) -> Result<PhaseGrid, CliError> {
        let units = self.units()?;
        let g = &self.grid;
        if g.n < 8 || !g.n.is_power_of_two() {
            return Err(field_error("grid.n", format!("must be a power of two >= 8, got {}", g.n)));
        }
        if !(g.q_extent.is_finite() && g.q_extent > 0.0) {
            return Err(field_error("grid.q_extent", format!("must be positive, got {}", g.q_extent)));
        }
        PhaseGrid::new(g.n, g.q_extent, g.p_center, units).map_err(|e| field_error("grid.p_center", e))
    }

    pub fn packet(&self) -> Result<WavePacketSpec, CliError> {
        let p = &self.packet;
        WavePacketSpec::new(p.q0, p.p0, p.sigma_q).map_err(|e| field_error("packet", e))
    }

    pub fn evolution(&self) -> Result<EvolutionConfig, CliError> {
        let e = &self.evolution;
        let cfg = EvolutionConfig { dt: e.dt, t_final: e.t_final, scheme: e.scheme, record_every: e.record_every };
        cfg.validate().map_err(|err| field_error("evolution", err))?;
        Ok(cfg)
    }

    pub fn window(&self) -> Result<MomentumWindow, CliError> {
        let w = self.check.window;
        MomentumWindow::new(w.p_lo, w.p_hi).map_err(|e| field_error("check.window", e))
    }

    pub fn tolerance(&self) -> Result<f64, CliError> {
        let t = self.check.tolerance;
        if !(t.is_finite() && t >= 0.0) {
            return Err(field_error("check.tolerance", format!("must be non-negative, got {t}")));
        }
        Ok(t)
    }

    pub fn harmonic(&self) -> Result<Spectrum, CliError> {
        if self.spectrum.levels == 0 {
            return Err(field_error("spectrum.levels", "must be at least 1"));
        }
        Spectrum::harmonic(self.spectrum.omega, self.units()?).map_err(|e| field_error("spectrum.omega", e))
    }
}
