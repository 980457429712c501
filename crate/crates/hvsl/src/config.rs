//! Run configuration: a flat `section.key = value` text format, experiment
//! presets, and validation.  Floats are serialized with 17 significant
//! digits so a persisted config re-parses to an identical value.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::SimError;
use crate::interp::AdvectionBackend;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElectronClosure {
    Isothermal,
    Adiabatic,
    PressureEquation,
}

impl ElectronClosure {
    pub fn as_str(&self) -> &'static str {
        match self {
            ElectronClosure::Isothermal => "isothermal",
            ElectronClosure::Adiabatic => "adiabatic",
            ElectronClosure::PressureEquation => "pressure_equation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Lie,
    Strang,
}

impl SchemeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Lie => "lie",
            SchemeKind::Strang => "strang",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotMode {
    None,
    Endpoints,
    All,
}

impl SnapshotMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SnapshotMode::None => "none",
            SnapshotMode::Endpoints => "endpoints",
            SnapshotMode::All => "all",
        }
    }
}

fn backend_str(b: AdvectionBackend) -> &'static str {
    match b {
        AdvectionBackend::Spline => "spline",
        AdvectionBackend::Spectral => "spectral",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridBlock {
    pub m1: usize,
    pub n1: usize,
    pub n2: usize,
    pub lx: f64,
    pub v1_min: f64,
    pub v1_max: f64,
    pub v2_min: f64,
    pub v2_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsBlock {
    pub closure: ElectronClosure,
    pub gamma: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericsBlock {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: SchemeKind,
    pub velocity_backend: AdvectionBackend,
    pub space_backend: AdvectionBackend,
    pub picard_tol: f64,
    pub picard_max: usize,
}

/// Initial condition: a density-perturbed drifting Maxwellian plus a
/// harmonic magnetic profile,
/// `f = (1 + rho_amp sin(rho_mode k0 x)) Maxwellian(vt, drift)`,
/// `B3 = b3_base + b3_amp * sum_{m=1..b3_modes} sin(m k0 x)`, `k0 = 2 pi/Lx`.
/// For the pressure-equation closure the initial pressure is
/// `kappa * (1 + delta_rho)^gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialBlock {
    pub vt: f64,
    pub drift1: f64,
    pub drift2: f64,
    pub rho_amp: f64,
    pub rho_mode: usize,
    pub b3_base: f64,
    pub b3_amp: f64,
    pub b3_modes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub dir: Option<String>,
    pub cadence: f64,
    pub snapshots: SnapshotMode,
    pub b3_history: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridBlock,
    pub physics: PhysicsBlock,
    pub numerics: NumericsBlock,
    pub initial: InitialBlock,
    pub output: OutputBlock,
}

impl RunConfig {
    /// Output rows per run: `t = 0` plus every cadence interval.
    pub fn output_rows(&self) -> usize {
        let steps = (self.numerics.t_final / self.numerics.dt).round() as usize;
        let per = self.steps_per_output();
        steps / per + 1
    }

    pub fn steps_per_output(&self) -> usize {
        (self.output.cadence / self.numerics.dt).round().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = &self.numerics;
        if !(n.dt > 0.0) {
            return Err(SimError::config("numerics.dt", "time step must be positive"));
        }
        if n.t_final < 0.0 {
            return Err(SimError::config("numerics.t_final", "final time must be >= 0"));
        }
        if !(n.picard_tol > 0.0) {
            return Err(SimError::config("numerics.picard_tol", "tolerance must be positive"));
        }
        if n.picard_max == 0 {
            return Err(SimError::config("numerics.picard_max", "must allow at least 1 iteration"));
        }
        let steps = n.t_final / n.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(SimError::config(
                "numerics.t_final",
                format!("t_final = {} is not an integer number of steps of dt = {}", n.t_final, n.dt),
            ));
        }
        let p = &self.physics;
        if !(p.kappa > 0.0) {
            return Err(SimError::config("physics.kappa", "kappa must be positive"));
        }
        match p.closure {
            ElectronClosure::Isothermal => {
                if p.gamma != 1.0 {
                    return Err(SimError::config(
                        "physics.gamma",
                        "isothermal electrons force gamma = 1 (p = kappa * rho)",
                    ));
                }
            }
            ElectronClosure::Adiabatic | ElectronClosure::PressureEquation => {
                if p.gamma == 1.0 {
                    return Err(SimError::config(
                        "physics.gamma",
                        format!("closure `{}` requires gamma != 1", p.closure.as_str()),
                    ));
                }
            }
        }
        if !(self.initial.vt > 0.0) {
            return Err(SimError::config("initial.vt", "thermal speed must be positive"));
        }
        let o = &self.output;
        if !(o.cadence > 0.0) {
            return Err(SimError::config("output.cadence", "cadence must be positive"));
        }
        let per = o.cadence / n.dt;
        if (per - per.round()).abs() > 1e-9 * per.max(1.0) || per.round() < 1.0 {
            return Err(SimError::config(
                "output.cadence",
                format!("cadence = {} is not a positive integer multiple of dt = {}", o.cadence, n.dt),
            ));
        }
        Ok(())
    }

    /// Canonical text form; `parse_config(render())` reproduces the config.
    pub fn render(&self) -> String {
        let g = &self.grid;
        let p = &self.physics;
        let n = &self.numerics;
        let i = &self.initial;
        let o = &self.output;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("grid.m1", g.m1.to_string());
        kv("grid.n1", g.n1.to_string());
        kv("grid.n2", g.n2.to_string());
        kv("grid.lx", fmt_f64(g.lx));
        kv("grid.v1_min", fmt_f64(g.v1_min));
        kv("grid.v1_max", fmt_f64(g.v1_max));
        kv("grid.v2_min", fmt_f64(g.v2_min));
        kv("grid.v2_max", fmt_f64(g.v2_max));
        kv("physics.closure", p.closure.as_str().to_string());
        kv("physics.gamma", fmt_f64(p.gamma));
        kv("physics.kappa", fmt_f64(p.kappa));
        kv("numerics.dt", fmt_f64(n.dt));
        kv("numerics.t_final", fmt_f64(n.t_final));
        kv("numerics.scheme", n.scheme.as_str().to_string());
        kv("numerics.velocity_backend", backend_str(n.velocity_backend).to_string());
        kv("numerics.space_backend", backend_str(n.space_backend).to_string());
        kv("numerics.picard_tol", fmt_f64(n.picard_tol));
        kv("numerics.picard_max", n.picard_max.to_string());
        kv("initial.vt", fmt_f64(i.vt));
        kv("initial.drift1", fmt_f64(i.drift1));
        kv("initial.drift2", fmt_f64(i.drift2));
        kv("initial.rho_amp", fmt_f64(i.rho_amp));
        kv("initial.rho_mode", i.rho_mode.to_string());
        kv("initial.b3_base", fmt_f64(i.b3_base));
        kv("initial.b3_amp", fmt_f64(i.b3_amp));
        kv("initial.b3_modes", i.b3_modes.to_string());
        if let Some(dir) = &o.dir {
            kv("output.dir", dir.clone());
        }
        kv("output.cadence", fmt_f64(o.cadence));
        kv("output.snapshots", o.snapshots.as_str().to_string());
        kv("output.b3_history", o.b3_history.to_string());
        s
    }
}

/// 17 significant digits: enough for an exact f64 round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parse the flat `section.key = value` format, expanding `initial.preset`
/// first and then applying every other key as an override.
pub fn parse_config(text: &str) -> Result<RunConfig, SimError> {
    let mut user: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            SimError::config(
                format!("line {}", lineno + 1),
                format!("expected `section.key = value`, got `{line}`"),
            )
        })?;
        user.push((k.trim().to_string(), v.trim().to_string()));
    }

    let mut map: BTreeMap<String, String> = BTreeMap::new();
    if let Some((_, name)) = user.iter().find(|(k, _)| k == "initial.preset") {
        for (k, v) in preset_pairs(name)? {
            map.insert(k.to_string(), v);
        }
    }
    for (k, v) in user {
        if k == "initial.preset" {
            continue;
        }
        map.insert(k, v);
    }
    config_from_map(map)
}

struct Fields {
    map: BTreeMap<String, String>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }
    fn require(&mut self, key: &str) -> Result<String, SimError> {
        self.take(key)
            .ok_or_else(|| SimError::config(key, "missing required key"))
    }
    fn f64_req(&mut self, key: &str) -> Result<f64, SimError> {
        parse_f64(key, &self.require(key)?)
    }
    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, SimError> {
        match self.take(key) {
            Some(v) => parse_f64(key, &v),
            None => Ok(default),
        }
    }
    fn usize_req(&mut self, key: &str) -> Result<usize, SimError> {
        parse_usize(key, &self.require(key)?)
    }
    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, SimError> {
        match self.take(key) {
            Some(v) => parse_usize(key, &v),
            None => Ok(default),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, SimError> {
    v.parse::<f64>()
        .map_err(|_| SimError::config(key, format!("`{v}` is not a number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, SimError> {
    v.parse::<usize>()
        .map_err(|_| SimError::config(key, format!("`{v}` is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, SimError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(SimError::config(key, format!("`{v}` is not true/false"))),
    }
}

fn config_from_map(map: BTreeMap<String, String>) -> Result<RunConfig, SimError> {
    let mut f = Fields { map };

    let grid = GridBlock {
        m1: f.usize_req("grid.m1")?,
        n1: f.usize_req("grid.n1")?,
        n2: f.usize_req("grid.n2")?,
        lx: f.f64_req("grid.lx")?,
        v1_min: f.f64_req("grid.v1_min")?,
        v1_max: f.f64_req("grid.v1_max")?,
        v2_min: f.f64_req("grid.v2_min")?,
        v2_max: f.f64_req("grid.v2_max")?,
    };

    let closure = match f.require("physics.closure")?.as_str() {
        "isothermal" => ElectronClosure::Isothermal,
        "adiabatic" => ElectronClosure::Adiabatic,
        "pressure_equation" => ElectronClosure::PressureEquation,
        other => {
            return Err(SimError::config(
                "physics.closure",
                format!("unknown closure `{other}`"),
            ))
        }
    };
    let physics = PhysicsBlock {
        closure,
        gamma: f.f64_or(
            "physics.gamma",
            if closure == ElectronClosure::Isothermal { 1.0 } else { 5.0 / 3.0 },
        )?,
        kappa: f.f64_req("physics.kappa")?,
    };

    let dt = f.f64_req("numerics.dt")?;
    let scheme = match f.take("numerics.scheme").as_deref() {
        None | Some("strang") => SchemeKind::Strang,
        Some("lie") => SchemeKind::Lie,
        Some(other) => {
            return Err(SimError::config(
                "numerics.scheme",
                format!("unknown scheme `{other}`"),
            ))
        }
    };
    let backend = |key: &str, tok: Option<String>, default| -> Result<AdvectionBackend, SimError> {
        match tok.as_deref() {
            None => Ok(default),
            Some("spline") => Ok(AdvectionBackend::Spline),
            Some("spectral") => Ok(AdvectionBackend::Spectral),
            Some(other) => Err(SimError::config(key, format!("unknown backend `{other}`"))),
        }
    };
    let velocity_backend = backend(
        "numerics.velocity_backend",
        f.take("numerics.velocity_backend"),
        AdvectionBackend::Spline,
    )?;
    let space_backend = backend(
        "numerics.space_backend",
        f.take("numerics.space_backend"),
        AdvectionBackend::Spectral,
    )?;
    let numerics = NumericsBlock {
        dt,
        t_final: f.f64_req("numerics.t_final")?,
        scheme,
        velocity_backend,
        space_backend,
        picard_tol: f.f64_or("numerics.picard_tol", 1e-14)?,
        picard_max: f.usize_or("numerics.picard_max", 200)?,
    };

    let initial = InitialBlock {
        vt: f.f64_req("initial.vt")?,
        drift1: f.f64_or("initial.drift1", 0.0)?,
        drift2: f.f64_or("initial.drift2", 0.0)?,
        rho_amp: f.f64_or("initial.rho_amp", 0.0)?,
        rho_mode: f.usize_or("initial.rho_mode", 1)?,
        b3_base: f.f64_or("initial.b3_base", 0.0)?,
        b3_amp: f.f64_or("initial.b3_amp", 0.0)?,
        b3_modes: f.usize_or("initial.b3_modes", 1)?,
    };

    let output = OutputBlock {
        dir: f.take("output.dir"),
        cadence: f.f64_or("output.cadence", dt)?,
        snapshots: match f.take("output.snapshots").as_deref() {
            None | Some("none") => SnapshotMode::None,
            Some("endpoints") => SnapshotMode::Endpoints,
            Some("all") => SnapshotMode::All,
            Some(other) => {
                return Err(SimError::config(
                    "output.snapshots",
                    format!("unknown snapshot mode `{other}`"),
                ))
            }
        },
        b3_history: match f.take("output.b3_history") {
            Some(v) => parse_bool("output.b3_history", &v)?,
            None => true,
        },
    };

    if let Some((key, _)) = f.map.iter().next() {
        return Err(SimError::config(key.clone(), "unknown key"));
    }

    let config = RunConfig {
        grid,
        physics,
        numerics,
        initial,
        output,
    };
    config.validate()?;
    Ok(config)
}

/// Named experiment presets.
pub fn preset_pairs(name: &str) -> Result<Vec<(&'static str, String)>, SimError> {
    let f = fmt_f64;
    let common = |pairs: &mut Vec<(&'static str, String)>| {
        pairs.push(("numerics.scheme", "strang".into()));
        pairs.push(("numerics.velocity_backend", "spline".into()));
        pairs.push(("numerics.space_backend", "spectral".into()));
    };
    let mut p: Vec<(&'static str, String)> = Vec::new();
    match name {
        // damped ion-acoustic wave, no magnetic field
        "landau_isothermal" | "landau_pressure" => {
            p.push(("grid.m1", "32".into()));
            p.push(("grid.n1", "128".into()));
            p.push(("grid.n2", "64".into()));
            p.push(("grid.lx", f(5.0 * PI)));
            p.push(("grid.v1_min", f(-8.0)));
            p.push(("grid.v1_max", f(8.0)));
            p.push(("grid.v2_min", f(-8.0)));
            p.push(("grid.v2_max", f(8.0)));
            p.push(("numerics.dt", f(0.1)));
            p.push(("numerics.t_final", f(50.0)));
            p.push(("initial.vt", f(1.4142)));
            p.push(("initial.rho_amp", f(0.01)));
            p.push(("initial.rho_mode", "1".into()));
            p.push(("initial.b3_base", f(0.0)));
            p.push(("initial.b3_amp", f(0.0)));
            p.push(("output.cadence", f(0.1)));
            common(&mut p);
            if name == "landau_isothermal" {
                p.push(("physics.closure", "isothermal".into()));
                p.push(("physics.gamma", f(1.0)));
                p.push(("physics.kappa", f(6.25)));
            } else {
                // kappa * gamma = 6.25 keeps the linearized force equal to
                // the isothermal case, hence the same damping rate
                p.push(("physics.closure", "pressure_equation".into()));
                p.push(("physics.gamma", f(5.0 / 3.0)));
                p.push(("physics.kappa", f(6.25 / (5.0 / 3.0))));
            }
        }
        // perpendicular-propagating cyclotron harmonics
        "bernstein_isothermal" | "bernstein_pressure" => {
            p.push(("grid.m1", "64".into()));
            p.push(("grid.n1", "128".into()));
            p.push(("grid.n2", "128".into()));
            p.push(("grid.lx", f(4.0 * PI)));
            p.push(("grid.v1_min", f(-3.0)));
            p.push(("grid.v1_max", f(3.0)));
            p.push(("grid.v2_min", f(-3.0)));
            p.push(("grid.v2_max", f(3.0)));
            p.push(("numerics.dt", f(0.05)));
            p.push(("numerics.t_final", f(80.0)));
            p.push(("initial.vt", f(0.4)));
            p.push(("initial.rho_amp", f(0.0)));
            p.push(("initial.b3_base", f(1.0)));
            p.push(("initial.b3_amp", f(1e-5)));
            p.push(("initial.b3_modes", "32".into()));
            p.push(("output.cadence", f(0.05)));
            common(&mut p);
            if name == "bernstein_isothermal" {
                p.push(("physics.closure", "isothermal".into()));
                p.push(("physics.gamma", f(1.0)));
                p.push(("physics.kappa", f(0.09)));
            } else {
                p.push(("physics.closure", "pressure_equation".into()));
                p.push(("physics.gamma", f(5.0 / 3.0)));
                p.push(("physics.kappa", f(0.09)));
            }
        }
        // time-accuracy study state: perturbed density, drift, and field
        "convergence" | "reversibility" => {
            let (m1, nv) = if name == "convergence" { (16, 128) } else { (17, 64) };
            p.push(("grid.m1", m1.to_string()));
            p.push(("grid.n1", nv.to_string()));
            p.push(("grid.n2", nv.to_string()));
            p.push(("grid.lx", f(PI)));
            p.push(("grid.v1_min", f(-2.5)));
            p.push(("grid.v1_max", f(2.5)));
            p.push(("grid.v2_min", f(-2.5)));
            p.push(("grid.v2_max", f(2.5)));
            p.push(("numerics.dt", f(if name == "convergence" { 0.025 } else { 0.1 })));
            p.push(("numerics.t_final", f(if name == "convergence" { 0.1 } else { 2.0 })));
            p.push(("physics.closure", "pressure_equation".into()));
            p.push(("physics.gamma", f(5.0 / 3.0)));
            p.push(("physics.kappa", f(0.09)));
            p.push(("initial.vt", f(0.4)));
            p.push(("initial.drift1", f(0.1)));
            p.push(("initial.drift2", f(0.2)));
            p.push(("initial.rho_amp", f(0.01)));
            p.push(("initial.rho_mode", "1".into()));
            p.push(("initial.b3_base", f(1.0)));
            p.push(("initial.b3_amp", f(0.01)));
            p.push(("initial.b3_modes", "1".into()));
            p.push(("output.cadence", f(if name == "convergence" { 0.1 } else { 0.1 })));
            p.push(("numerics.scheme", "strang".into()));
            if name == "convergence" {
                p.push(("numerics.velocity_backend", "spline".into()));
            } else {
                // reversibility needs every advection to be spectral
                p.push(("numerics.velocity_backend", "spectral".into()));
            }
            p.push(("numerics.space_backend", "spectral".into()));
        }
        other => {
            return Err(SimError::config(
                "initial.preset",
                format!("unknown preset `{other}`"),
            ))
        }
    }
    Ok(p)
}
