//! Composition of the two substeps into Lie and Strang integrators, the
//! time loop with diagnostics, and the convergence / reversibility drivers.

use std::sync::Arc;

use crate::config::{ElectronClosure, RunConfig, SchemeKind, SnapshotMode};
use crate::diagnostics::{conserved_quantities, ConservedSnapshot};
use crate::error::SimError;
use crate::grid::{make_phase_grid, PhaseGrid};
use crate::state::{Distribution, FieldState};
use crate::substeps::{PicardOptions, PvbResult, Stepper};

/// Everything that evolves in time.
pub struct SimState {
    pub f: Distribution,
    pub fields: FieldState,
    pub time: f64,
}

impl Stepper {
    /// First-order Lie composition: full pvb, then full xv.
    pub fn lie_step(&mut self, state: &mut SimState, dt: f64) -> Result<PvbResult, SimError> {
        let stats = self.pvb_step(&mut state.f, &mut state.fields, dt)?;
        self.xv_step(&mut state.f, dt);
        state.time += dt;
        Ok(stats)
    }

    /// Second-order Strang composition: half xv, full pvb, half xv.
    pub fn strang_step(&mut self, state: &mut SimState, dt: f64) -> Result<PvbResult, SimError> {
        self.xv_step(&mut state.f, 0.5 * dt);
        let stats = self.pvb_step(&mut state.f, &mut state.fields, dt)?;
        self.xv_step(&mut state.f, 0.5 * dt);
        state.time += dt;
        Ok(stats)
    }

    pub fn scheme_step(
        &mut self,
        kind: SchemeKind,
        state: &mut SimState,
        dt: f64,
    ) -> Result<PvbResult, SimError> {
        match kind {
            SchemeKind::Lie => self.lie_step(state, dt),
            SchemeKind::Strang => self.strang_step(state, dt),
        }
    }
}

/// Build the initial state described by the config's `initial` block.
pub fn initial_state(config: &RunConfig) -> Result<(Arc<PhaseGrid>, SimState), SimError> {
    let grid = Arc::new(make_phase_grid(config)?);
    let ini = &config.initial;
    let k0 = 2.0 * std::f64::consts::PI / grid.lx;
    let delta_rho =
        move |x: f64| ini.rho_amp * (ini.rho_mode as f64 * k0 * x).sin();

    let vt = ini.vt;
    let (d1, d2) = (ini.drift1, ini.drift2);
    let norm = 1.0 / (std::f64::consts::PI * vt * vt);
    let f = Distribution::from_fn(grid.clone(), move |x, v1, v2| {
        norm * (1.0 + delta_rho(x))
            * (-((v1 - d1) * (v1 - d1) + (v2 - d2) * (v2 - d2)) / (vt * vt)).exp()
    });

    let b3: Vec<f64> = grid
        .x_nodes
        .iter()
        .map(|&x| {
            let mut b = ini.b3_base;
            if ini.b3_amp != 0.0 {
                for m in 1..=ini.b3_modes {
                    b += ini.b3_amp * (m as f64 * k0 * x).sin();
                }
            }
            b
        })
        .collect();

    let p0 = match config.physics.closure {
        ElectronClosure::PressureEquation => Some(
            grid.x_nodes
                .iter()
                .map(|&x| config.physics.kappa * (1.0 + delta_rho(x)).powf(config.physics.gamma))
                .collect(),
        ),
        _ => None,
    };
    let fields = FieldState::new(
        config.physics.closure,
        config.physics.gamma,
        config.physics.kappa,
        b3,
        p0,
    )?;
    Ok((
        grid,
        SimState {
            f,
            fields,
            time: 0.0,
        },
    ))
}

pub fn stepper_for(config: &RunConfig, grid: Arc<PhaseGrid>) -> Result<Stepper, SimError> {
    Stepper::new(
        grid,
        config.numerics.velocity_backend,
        config.numerics.space_backend,
        PicardOptions {
            tol: config.numerics.picard_tol,
            max_iters: config.numerics.picard_max,
        },
    )
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub t_final: f64,
    pub status: String,
    pub max_mass_drift_rel: f64,
    pub max_momentum1_drift: f64,
    pub max_momentum2_drift: f64,
    pub max_energy_drift_rel: f64,
    pub max_p_relation_err: f64,
    pub max_picard_iters: usize,
    pub max_picard_residual: f64,
    pub boundary_advisory: bool,
}

pub struct RunArtifacts {
    pub times: Vec<f64>,
    pub series: Vec<ConservedSnapshot>,
    /// `B3(x)` at every output time (for dispersion analysis).
    pub b3_history: Vec<Vec<f64>>,
    /// Full distribution snapshots `(time, data)` per the snapshot mode.
    pub f_snapshots: Vec<(f64, Vec<f64>)>,
    pub summary: RunSummary,
}

/// Execute the configured time loop, emitting diagnostics from the live
/// state at every output interval.  Deterministic given the config.
pub fn run(config: &RunConfig) -> Result<RunArtifacts, SimError> {
    config.validate()?;
    let (grid, mut state) = initial_state(config)?;
    let mut stepper = stepper_for(config, grid.clone())?;

    let dt = config.numerics.dt;
    let n_steps = (config.numerics.t_final / dt).round() as usize;
    let per_output = config.steps_per_output();

    let mut artifacts = RunArtifacts {
        times: Vec::new(),
        series: Vec::new(),
        b3_history: Vec::new(),
        f_snapshots: Vec::new(),
        summary: RunSummary {
            steps: n_steps,
            t_final: config.numerics.t_final,
            status: "ok".into(),
            max_mass_drift_rel: 0.0,
            max_momentum1_drift: 0.0,
            max_momentum2_drift: 0.0,
            max_energy_drift_rel: 0.0,
            max_p_relation_err: 0.0,
            max_picard_iters: 0,
            max_picard_residual: 0.0,
            boundary_advisory: false,
        },
    };

    let record = |artifacts: &mut RunArtifacts,
                  state: &SimState,
                  stats: Option<PvbResult>| {
        let mut snap = conserved_quantities(&state.f, &state.fields, state.time);
        if let Some(s) = stats {
            snap.picard_iters = s.picard_iterations;
        }
        artifacts.times.push(state.time);
        artifacts.series.push(snap);
        if config.output.b3_history {
            artifacts.b3_history.push(state.fields.b3.clone());
        }
        // velocity-boundary advisory: f must stay negligible on the seam
        let fmax = state.f.max_abs();
        if fmax > 0.0 && state.f.boundary_max() > 1e-10 * fmax {
            if !artifacts.summary.boundary_advisory {
                eprintln!(
                    "warning: |f| on the velocity boundary exceeds 1e-10 * max|f| at t = {}; \
                     enlarge the velocity box",
                    state.time
                );
            }
            artifacts.summary.boundary_advisory = true;
        }
    };

    record(&mut artifacts, &state, None);
    if matches!(
        config.output.snapshots,
        SnapshotMode::Endpoints | SnapshotMode::All
    ) {
        artifacts.f_snapshots.push((0.0, state.f.data().to_vec()));
    }

    for step in 1..=n_steps {
        let stats = stepper.scheme_step(config.numerics.scheme, &mut state, dt)?;
        state.time = step as f64 * dt;
        artifacts.summary.max_picard_iters =
            artifacts.summary.max_picard_iters.max(stats.picard_iterations);
        artifacts.summary.max_picard_residual = artifacts
            .summary
            .max_picard_residual
            .max(stats.picard_residual);
        if step % per_output == 0 {
            record(&mut artifacts, &state, Some(stats));
            if config.output.snapshots == SnapshotMode::All {
                artifacts.f_snapshots.push((state.time, state.f.data().to_vec()));
            }
        }
    }
    if config.output.snapshots == SnapshotMode::Endpoints && n_steps > 0 {
        artifacts
            .f_snapshots
            .push((state.time, state.f.data().to_vec()));
    }

    let first = artifacts.series[0];
    for snap in &artifacts.series {
        let s = &mut artifacts.summary;
        if first.mass != 0.0 {
            s.max_mass_drift_rel = s
                .max_mass_drift_rel
                .max(((snap.mass - first.mass) / first.mass).abs());
        }
        s.max_momentum1_drift = s
            .max_momentum1_drift
            .max((snap.momentum1 - first.momentum1).abs());
        s.max_momentum2_drift = s
            .max_momentum2_drift
            .max((snap.momentum2 - first.momentum2).abs());
        if first.energy_total != 0.0 {
            s.max_energy_drift_rel = s
                .max_energy_drift_rel
                .max(((snap.energy_total - first.energy_total) / first.energy_total).abs());
        }
        s.max_p_relation_err = s.max_p_relation_err.max(snap.p_relation_err);
    }
    Ok(artifacts)
}

/// Evolve a fresh initial state to `t_final` with an overridden step size;
/// used by the convergence driver.
pub fn evolve_with_dt(config: &RunConfig, dt: f64) -> Result<SimState, SimError> {
    let steps = config.numerics.t_final / dt;
    if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
        return Err(SimError::config(
            "numerics.dt",
            format!("dt = {dt} does not divide t_final = {}", config.numerics.t_final),
        ));
    }
    let (grid, mut state) = initial_state(config)?;
    let mut stepper = stepper_for(config, grid)?;
    for step in 1..=steps.round() as usize {
        stepper.scheme_step(config.numerics.scheme, &mut state, dt)?;
        state.time = step as f64 * dt;
    }
    Ok(state)
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub err_f: f64,
    pub err_b3: f64,
    pub err_p: f64,
    pub order_f: Option<f64>,
    pub order_b3: Option<f64>,
    pub order_p: Option<f64>,
}

/// l1 errors of `(f, B3, p)` at `t_final` against a fine-step reference run,
/// with observed orders between consecutive step sizes.
pub fn convergence_table(
    config: &RunConfig,
    dts: &[f64],
    ref_dt: f64,
) -> Result<Vec<ConvergenceRow>, SimError> {
    if dts.is_empty() {
        return Err(SimError::config("--dts", "need at least one step size"));
    }
    let reference = evolve_with_dt(config, ref_dt)?;
    let ref_p = reference.fields.stored_pressure().map(|p| p.to_vec());

    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &dt in dts {
        let state = evolve_with_dt(config, dt)?;
        let err_f = state.f.l1_distance(&reference.f);
        let err_b3: f64 = state
            .fields
            .b3
            .iter()
            .zip(reference.fields.b3.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        let err_p: f64 = match (state.fields.stored_pressure(), &ref_p) {
            (Some(p), Some(q)) => p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).sum(),
            _ => 0.0,
        };
        let (order_f, order_b3, order_p) = match rows.last() {
            Some(prev) => {
                let ratio = (prev.dt / dt).ln();
                (
                    Some((prev.err_f / err_f).ln() / ratio),
                    Some((prev.err_b3 / err_b3).ln() / ratio),
                    Some((prev.err_p / err_p).ln() / ratio),
                )
            }
            None => (None, None, None),
        };
        rows.push(ConvergenceRow {
            dt,
            err_f,
            err_b3,
            err_p,
            order_f,
            order_b3,
            order_p,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy)]
pub struct ReversibilityReport {
    pub err_f: f64,
    pub err_b3: f64,
    pub err_p: f64,
}

/// Run `steps` forward, then `steps` with the step size negated, and report
/// the l1 distance to the initial state.
pub fn reversibility_errors(
    config: &RunConfig,
    steps: usize,
) -> Result<ReversibilityReport, SimError> {
    let (grid, mut state) = initial_state(config)?;
    let mut stepper = stepper_for(config, grid)?;
    let f0 = state.f.clone();
    let fields0 = state.fields.clone();
    let dt = config.numerics.dt;
    for _ in 0..steps {
        stepper.scheme_step(config.numerics.scheme, &mut state, dt)?;
    }
    for _ in 0..steps {
        stepper.scheme_step(config.numerics.scheme, &mut state, -dt)?;
    }
    let err_f = state.f.l1_distance(&f0);
    let (err_b3, err_p) = state.fields.l1_distance(&fields0);
    Ok(ReversibilityReport {
        err_f,
        err_b3,
        err_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn tiny_config() -> RunConfig {
        parse_config(
            "initial.preset = convergence\n\
             grid.m1 = 8\n\
             grid.n1 = 24\n\
             grid.n2 = 24\n\
             numerics.dt = 0.05\n\
             numerics.t_final = 0.1\n\
             output.cadence = 0.05\n",
        )
        .unwrap()
    }

    #[test]
    fn zero_steps_gives_initial_diagnostics_only() {
        let mut cfg = tiny_config();
        cfg.numerics.t_final = 0.0;
        let artifacts = run(&cfg).unwrap();
        assert_eq!(artifacts.series.len(), 1);
        assert_eq!(artifacts.times, vec![0.0]);
    }

    #[test]
    fn row_count_matches_cadence_arithmetic() {
        let mut cfg = tiny_config();
        cfg.numerics.t_final = 0.5;
        cfg.output.cadence = 0.1;
        let artifacts = run(&cfg).unwrap();
        // 0.5 / 0.1 = 5 output intervals plus t = 0
        assert_eq!(artifacts.series.len(), 6);
        assert!(artifacts
            .times
            .windows(2)
            .all(|w| w[1] > w[0]), "time column must be monotone");
        assert_eq!(artifacts.b3_history.len(), 6);
    }

    #[test]
    fn dt_zero_lie_and_strang_are_identity() {
        let cfg = tiny_config();
        let (grid, mut state) = initial_state(&cfg).unwrap();
        let mut stepper = stepper_for(&cfg, grid).unwrap();
        let f0 = state.f.clone();
        let b0 = state.fields.b3.clone();
        stepper.lie_step(&mut state, 0.0).unwrap();
        stepper.strang_step(&mut state, 0.0).unwrap();
        assert_eq!(state.f.data(), f0.data());
        assert_eq!(state.fields.b3, b0);
    }

    #[test]
    fn lie_is_first_order() {
        // Richardson: error vs a fine reference halves when dt halves.
        // All-spectral backends so the measured error is purely temporal.
        let mut cfg = tiny_config();
        cfg.numerics.scheme = SchemeKind::Lie;
        cfg.numerics.velocity_backend = crate::interp::AdvectionBackend::Spectral;
        // enough velocity resolution that the Maxwellian is spectrally
        // resolved and the measured error is purely temporal
        cfg.grid.n1 = 48;
        cfg.grid.n2 = 48;
        cfg.numerics.t_final = 0.08;
        let reference = evolve_with_dt(&cfg, 0.001).unwrap();
        let coarse = evolve_with_dt(&cfg, 0.04).unwrap();
        let fine = evolve_with_dt(&cfg, 0.02).unwrap();
        let ec = coarse.f.l1_distance(&reference.f);
        let ef = fine.f.l1_distance(&reference.f);
        let order = (ec / ef).log2();
        assert!(
            (0.7..=1.4).contains(&order),
            "observed Lie order {order} (errors {ec:e}, {ef:e})"
        );
    }
}
