//! The four subcommands. Every payload is a pure function of the resolved
//! configuration; run metadata goes to a separate `run.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use moyalrel::evolution::{self, diagnostics};
use moyalrel::phasegrid::fmt17;
use moyalrel::quantcheck::{self, ComponentKind};
use moyalrel::relkin::{self, Branch, EnergyRep, Spectrum};
use moyalrel::starcalc::Symbol;
use moyalrel::wigner::{self, WignerComponents};
use moyalrel::C64;
use serde_json::{json, Value};

use crate::config::{CheckState, Format, RunConfig};
use crate::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(moyalrel::Error::from)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn prepare(cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    let dir = &cfg.output.path;
    std::fs::create_dir_all(dir)?;
    let meta = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(cfg).map_err(moyalrel::Error::from)?,
    });
    write_json(&dir.join("run.json"), &meta)
}

fn free_state(cfg: &RunConfig) -> Result<(EnergyRep, Spectrum), CliError> {
    let grid = cfg.grid()?;
    let packet = cfg.packet()?;
    let spec = Spectrum::free(grid.units);
    let rep = wigner::coherent_state(&packet, &grid, &spec)?;
    Ok((rep, spec))
}

fn write_components(comp: &WignerComponents, dir: &Path, stem: &str, format: Format) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            comp.write_csv_files(&dir.join(stem))?;
        }
        Format::Json => write_json(&dir.join(format!("{stem}.json")), &comp.to_json_value())?,
    }
    Ok(())
}

pub fn coherent_wigner(cfg: &RunConfig) -> Result<(), CliError> {
    let (rep, spec) = free_state(cfg)?;
    prepare(cfg, "coherent-wigner")?;
    let dir = &cfg.output.path;
    let comp = wigner::decompose(&rep, &spec)?;
    let total = wigner::total(&comp)?;
    let field = total.field();
    let grid = *field.grid();
    let (lc, pc) = (grid.units.compton_length(), grid.units.momentum_unit());

    write_components(&comp, dir, "wigner", cfg.output.format)?;
    match cfg.output.format {
        Format::Csv => {
            field.write_csv(create(&dir.join("wigner.total"))?)?;
            let mut f = create(&dir.join("fig2.csv"))?;
            writeln!(f, "q_compton,p_mc,w")?;
            for k in 0..grid.n {
                for j in 0..grid.n {
                    let w = field.get(k, j).re;
                    writeln!(f, "{},{},{}", fmt17(grid.q(j) / lc), fmt17(grid.p(k) / pc), fmt17(w))?;
                }
            }
            f.flush()?;
        }
        Format::Json => write_json(&dir.join("wigner.total.json"), &field.to_json_value())?,
    }

    let d = diagnostics(&comp, 0.0)?;
    let summary = json!({
        "norms": comp.norms(),
        "total_norm": field.integrate().re,
        "min_value": field.min_real(),
        "max_value": field.max_real(),
        "negativity_volume": wigner::negativity_volume(&total),
        "mean_q": d.mean_q,
        "mean_p": d.mean_p,
        "compton_length": lc,
        "momentum_unit": pc,
    });
    write_json(&dir.join("summary.json"), &summary)?;
    println!(
        "min W = {}  negativity volume = {}",
        fmt17(field.min_real()),
        fmt17(wigner::negativity_volume(&total))
    );
    Ok(())
}

pub fn evolve(cfg: &RunConfig, oracle: bool) -> Result<(), CliError> {
    let ecfg = cfg.evolution()?;
    let (rep, spec) = free_state(cfg)?;
    prepare(cfg, "evolve")?;
    let dir = &cfg.output.path;
    let comp = wigner::decompose(&rep, &spec)?;
    let s = spec.clone();
    let ham = Symbol::momentum_real(*rep.grid(), move |p| s.energy(p));
    let traj = evolution::evolve(&comp, &ham, &ecfg)?;
    traj.write_to_dir(dir, cfg.output.format == Format::Json)?;
    if oracle {
        let t = *traj.times.last().expect("trajectories hold the initial state");
        let two = relkin::fv_unsplit(&rep, &spec)?;
        let evolved = relkin::fv_split(&relkin::fv_evolve(&two, t, &spec)?, &spec)?;
        let reference = wigner::decompose(&evolved, &spec)?;
        let gap = traj.last().max_abs_diff(&reference);
        write_json(&dir.join("oracle.json"), &json!({ "t": t, "gap": gap }))?;
        println!("oracle gap at t = {}: {}", fmt17(t), fmt17(gap));
    }
    let last = traj.diagnostics.last().expect("diagnostics hold the initial state");
    println!("steps = {}  final norm (even) = {}", ecfg.steps(), fmt17(last.norm_even));
    Ok(())
}

fn check_state(cfg: &RunConfig) -> Result<Symbol, CliError> {
    let grid = cfg.grid()?;
    let packet = cfg.packet()?;
    let spec = Spectrum::free(grid.units);
    let comp = match cfg.check.state {
        CheckState::NonrelativisticGaussian => {
            let rep = wigner::coherent_state(&packet, &grid, &spec)?;
            return Ok(wigner::cross_wigner(&rep.c_plus, &rep.c_plus)?);
        }
        CheckState::Coherent => wigner::decompose(&wigner::coherent_state(&packet, &grid, &spec)?, &spec)?,
        CheckState::TwoBranch => {
            let plus = wigner::coherent_state(&packet, &grid, &spec)?.c_plus;
            let minus = wigner::coherent_state(&packet.mirrored(), &grid, &spec)?.c_plus;
            let half = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            wigner::decompose(&EnergyRep::new(plus.scale(half), minus.scale(half))?, &spec)?
        }
    };
    Ok(match cfg.check.kind {
        ComponentKind::Even => comp.even_plus,
        ComponentKind::Odd => comp.odd_plus,
    })
}

pub fn check_quantization(cfg: &RunConfig) -> Result<(), CliError> {
    let window = cfg.window()?;
    let tolerance = cfg.tolerance()?;
    let w = check_state(cfg)?;
    prepare(cfg, "check-quantization")?;
    let dir = &cfg.output.path;
    let report = quantcheck::verify_with(&w, cfg.check.kind, window, tolerance, cfg.check.condition)?;
    write_json(&dir.join("report.json"), &report.to_json_value())?;
    match cfg.output.format {
        Format::Csv => {
            let mut f = create(&dir.join("deviation.csv"))?;
            report.write_deviation_csv(&mut f)?;
            f.flush()?;
        }
        Format::Json => {
            let rows: Vec<Value> = report
                .deviation_field
                .iter()
                .map(|s| json!({ "p1": s.p1, "p2": s.p2, "lhs": [s.lhs.re, s.lhs.im], "rhs": s.rhs, "deviation": s.deviation }))
                .collect();
            write_json(&dir.join("deviation.json"), &Value::Array(rows))?;
        }
    }
    println!("max |LHS - RHS| = {} (tolerance {})", fmt17(report.max_abs_deviation), fmt17(tolerance));
    if report.pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "max deviation {:e} exceeds tolerance {:e}",
            report.max_abs_deviation, tolerance
        )))
    }
}

pub fn spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.harmonic()?;
    prepare(cfg, "spectrum")?;
    let dir = &cfg.output.path;
    let mut rows = Vec::with_capacity(cfg.spectrum.levels);
    for n in 0..cfg.spectrum.levels {
        let plus = relkin::relativistic_level(&spec, n as i64, Branch::Plus)?;
        let minus = relkin::relativistic_level(&spec, n as i64, Branch::Minus)?;
        rows.push((n, plus, minus));
    }
    match cfg.output.format {
        Format::Csv => {
            let mut f = create(&dir.join("spectrum.csv"))?;
            writeln!(f, "n,E_plus,E_minus")?;
            for (n, p, m) in &rows {
                writeln!(f, "{n},{},{}", fmt17(*p), fmt17(*m))?;
            }
            f.flush()?;
        }
        Format::Json => {
            let v: Vec<Value> = rows.iter().map(|(n, p, m)| json!({ "n": n, "E_plus": p, "E_minus": m })).collect();
            write_json(&dir.join("spectrum.json"), &Value::Array(v))?;
        }
    }
    let mc2 = spec.units.rest_energy();
    let summary = json!({
        "omega": cfg.spectrum.omega,
        "levels": cfg.spectrum.levels,
        "rest_energy": mc2,
        "gap": 2.0 * mc2,
        "lowest_gap": rows[0].1 - rows[0].2,
    });
    write_json(&dir.join("summary.json"), &summary)?;
    println!("gap 2mc^2 = {}  lowest level E+ = {}", fmt17(2.0 * mc2), fmt17(rows[0].1));
    Ok(())
}
