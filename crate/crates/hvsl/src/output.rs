//! Output files: CSV time series, binary snapshots, run summaries, and
//! spectrum exports.
//!
//! Binary envelope (shared by snapshots, field histories, and spectra):
//! one ASCII header line `HVSL1 <d0> <d1> <d2> <name> <time>`, then raw
//! little-endian 8-byte IEEE floats.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::config::{fmt_f64, RunConfig, SnapshotMode};
use crate::diagnostics::{ConservedSnapshot, SpectrumQuadrant};
use crate::error::SimError;
use crate::integrator::{RunArtifacts, RunSummary};

pub const MAGIC: &str = "HVSL1";
pub const TIMESERIES_HEADER: &str =
    "t,mass,p1,p2,e_kin,e_mag,e_prs,e_tot,rho_dev,p_rel_err,picard_iters";

fn io_err(path: &Path, e: std::io::Error) -> SimError {
    SimError::io(path.display().to_string(), e)
}

/// Output directory for a run: `output.dir`, optionally re-rooted under the
/// `HVSL_OUTPUT_ROOT` environment variable.
pub fn effective_output_dir(config: &RunConfig) -> Option<PathBuf> {
    let dir = config.output.dir.as_ref()?;
    match std::env::var_os("HVSL_OUTPUT_ROOT") {
        Some(root) => Some(PathBuf::from(root).join(dir)),
        None => Some(PathBuf::from(dir)),
    }
}

pub fn write_snapshot(
    path: &Path,
    name: &str,
    time: f64,
    dims: (usize, usize, usize),
    data: &[f64],
) -> Result<(), SimError> {
    assert_eq!(dims.0 * dims.1 * dims.2, data.len(), "snapshot dims mismatch");
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "{MAGIC} {} {} {} {} {}",
        dims.0,
        dims.1,
        dims.2,
        name,
        fmt_f64(time)
    )
    .map_err(|e| io_err(path, e))?;
    for &v in data {
        w.write_all(&v.to_le_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub struct Snapshot {
    pub name: String,
    pub time: f64,
    pub dims: (usize, usize, usize),
    pub data: Vec<f64>,
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SimError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| SimError::Diagnostics(format!("{}: missing header", path.display())))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| SimError::Diagnostics(format!("{}: bad header", path.display())))?;
    let mut parts = header.split_whitespace();
    let bad = || SimError::Diagnostics(format!("{}: malformed header `{header}`", path.display()));
    if parts.next() != Some(MAGIC) {
        return Err(bad());
    }
    let d0: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let d1: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let d2: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let name = parts.next().ok_or_else(bad)?.to_string();
    let time: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let payload = &bytes[nl + 1..];
    let n = d0 * d1 * d2;
    if payload.len() != n * 8 {
        return Err(SimError::Diagnostics(format!(
            "{}: payload holds {} bytes, expected {}",
            path.display(),
            payload.len(),
            n * 8
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Snapshot {
        name,
        time,
        dims: (d0, d1, d2),
        data,
    })
}

pub fn write_timeseries(path: &Path, series: &[ConservedSnapshot]) -> Result<(), SimError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{TIMESERIES_HEADER}").map_err(|e| io_err(path, e))?;
    for s in series {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(s.time),
            fmt_f64(s.mass),
            fmt_f64(s.momentum1),
            fmt_f64(s.momentum2),
            fmt_f64(s.energy_kinetic),
            fmt_f64(s.energy_magnetic),
            fmt_f64(s.energy_pressure),
            fmt_f64(s.energy_total),
            fmt_f64(s.rho_dev),
            fmt_f64(s.p_relation_err),
            s.picard_iters
        )
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_timeseries(path: &Path) -> Result<Vec<ConservedSnapshot>, SimError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TIMESERIES_HEADER => {}
        other => {
            return Err(SimError::Diagnostics(format!(
                "{}: unexpected header {other:?}",
                path.display()
            )))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 11 {
            return Err(SimError::Diagnostics(format!(
                "{}: row {} has {} columns",
                path.display(),
                i + 2,
                cols.len()
            )));
        }
        let f = |j: usize| -> Result<f64, SimError> {
            cols[j].parse().map_err(|_| {
                SimError::Diagnostics(format!("{}: bad float `{}`", path.display(), cols[j]))
            })
        };
        out.push(ConservedSnapshot {
            time: f(0)?,
            mass: f(1)?,
            momentum1: f(2)?,
            momentum2: f(3)?,
            energy_kinetic: f(4)?,
            energy_magnetic: f(5)?,
            energy_pressure: f(6)?,
            energy_total: f(7)?,
            rho_dev: f(8)?,
            p_relation_err: f(9)?,
            picard_iters: cols[10].parse().map_err(|_| {
                SimError::Diagnostics(format!("{}: bad count `{}`", path.display(), cols[10]))
            })?,
        });
    }
    Ok(out)
}

pub fn write_summary(path: &Path, s: &RunSummary) -> Result<(), SimError> {
    let text = format!(
        "status = {}\nsteps = {}\nt_final = {}\nmax_mass_drift_rel = {}\n\
         max_momentum1_drift = {}\nmax_momentum2_drift = {}\nmax_energy_drift_rel = {}\n\
         max_p_relation_err = {}\nmax_picard_iters = {}\nmax_picard_residual = {}\n\
         boundary_advisory = {}\n",
        s.status,
        s.steps,
        fmt_f64(s.t_final),
        fmt_f64(s.max_mass_drift_rel),
        fmt_f64(s.max_momentum1_drift),
        fmt_f64(s.max_momentum2_drift),
        fmt_f64(s.max_energy_drift_rel),
        fmt_f64(s.max_p_relation_err),
        s.max_picard_iters,
        fmt_f64(s.max_picard_residual),
        s.boundary_advisory,
    );
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Spectrum export: header, then the k axis, the omega axis, and the
/// k-major power grid.
pub fn write_spectrum(path: &Path, q: &SpectrumQuadrant, time: f64) -> Result<(), SimError> {
    let (nk, nw) = (q.k.len(), q.omega.len());
    let mut data = Vec::with_capacity(nk + nw + nk * nw);
    data.extend_from_slice(&q.k);
    data.extend_from_slice(&q.omega);
    data.extend_from_slice(&q.power);
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{MAGIC} {nk} {nw} 1 spectrum {}", fmt_f64(time)).map_err(|e| io_err(path, e))?;
    for &v in &data {
        w.write_all(&v.to_le_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_spectrum(path: &Path) -> Result<SpectrumQuadrant, SimError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| SimError::Diagnostics(format!("{}: missing header", path.display())))?;
    let header = std::str::from_utf8(&bytes[..nl]).unwrap_or("");
    let mut parts = header.split_whitespace();
    let bad = || SimError::Diagnostics(format!("{}: malformed header `{header}`", path.display()));
    if parts.next() != Some(MAGIC) {
        return Err(bad());
    }
    let nk: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let nw: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let values: Vec<f64> = bytes[nl + 1..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.len() != nk + nw + nk * nw {
        return Err(bad());
    }
    Ok(SpectrumQuadrant {
        k: values[..nk].to_vec(),
        omega: values[nk..nk + nw].to_vec(),
        power: values[nk + nw..].to_vec(),
    })
}

/// Persist a finished run: `timeseries.csv`, `summary.txt`, a `config.txt`
/// copy, `b3_history.hvsl`, and any distribution snapshots.
pub fn write_artifacts(config: &RunConfig, artifacts: &RunArtifacts) -> Result<PathBuf, SimError> {
    let dir = effective_output_dir(config).ok_or_else(|| {
        SimError::config("output.dir", "no output directory configured")
    })?;
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    write_timeseries(&dir.join("timeseries.csv"), &artifacts.series)?;
    write_summary(&dir.join("summary.txt"), &artifacts.summary)?;
    fs::write(dir.join("config.txt"), config.render())
        .map_err(|e| io_err(&dir.join("config.txt"), e))?;

    if config.output.b3_history && !artifacts.b3_history.is_empty() {
        let t = artifacts.b3_history.len();
        let m1 = config.grid.m1;
        let flat: Vec<f64> = artifacts.b3_history.iter().flatten().copied().collect();
        write_snapshot(
            &dir.join("b3_history.hvsl"),
            "b3_history",
            artifacts.summary.t_final,
            (t, m1, 1),
            &flat,
        )?;
    }
    if config.output.snapshots != SnapshotMode::None {
        for (time, data) in &artifacts.f_snapshots {
            let path = dir.join(format!("f_t{time:.6}.hvsl"));
            write_snapshot(
                &path,
                "f",
                *time,
                (config.grid.m1, config.grid.n1, config.grid.n2),
                data,
            )?;
        }
    }
    Ok(dir)
}
