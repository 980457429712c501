//! Uniform periodic phase-space grids and their Fourier duals.
//!
//! Index conventions owned here and used everywhere else:
//! the distribution is stored as `f[i][j1][j2]` with `j2` fastest-varying,
//! and spatial Fourier frequencies are stored in FFT-natural order
//! `0, 1, ..., floor(M/2), -floor((M-1)/2), ..., -1` (times `2*pi/L`).

use crate::config::RunConfig;
use crate::error::SimError;

/// Minimum point count on any axis; the cubic-spline kernel needs 4 nodes.
pub const MIN_POINTS: usize = 4;

/// Angular frequencies `2*pi/length * k` for `k` in the symmetric range
/// `[-floor((n-1)/2), floor(n/2)]`, stored in FFT-natural order.
pub fn fourier_frequencies(n: usize, length: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / length;
    (0..n)
        .map(|k| {
            let idx = if k <= n / 2 {
                k as i64
            } else {
                k as i64 - n as i64
            };
            base * idx as f64
        })
        .collect()
}

/// Uniform periodic x-grid plus two uniform velocity grids and the spatial
/// Fourier frequency set.  Immutable after construction.
#[derive(Debug, Clone)]
pub struct PhaseGrid {
    pub lx: f64,
    pub m1: usize,
    pub dx: f64,
    pub x_nodes: Vec<f64>,

    pub v1_min: f64,
    pub v1_max: f64,
    pub n1: usize,
    pub dv1: f64,
    pub v1_nodes: Vec<f64>,

    pub v2_min: f64,
    pub v2_max: f64,
    pub n2: usize,
    pub dv2: f64,
    pub v2_nodes: Vec<f64>,

    /// Spatial angular frequencies in FFT-natural order.
    pub xi: Vec<f64>,
}

fn check_axis(name: &str, count: usize, lo: f64, hi: f64) -> Result<(), SimError> {
    if count < MIN_POINTS {
        return Err(SimError::config(
            format!("grid.{name}"),
            format!("point count {count} is below the minimum {MIN_POINTS}"),
        ));
    }
    if !(hi - lo).is_finite() || hi - lo <= 0.0 {
        return Err(SimError::config(
            format!("grid.{name}"),
            format!("domain extent [{lo}, {hi}] must be positive and finite"),
        ));
    }
    Ok(())
}

impl PhaseGrid {
    pub fn new(
        m1: usize,
        lx: f64,
        n1: usize,
        (v1_min, v1_max): (f64, f64),
        n2: usize,
        (v2_min, v2_max): (f64, f64),
    ) -> Result<Self, SimError> {
        check_axis("m1", m1, 0.0, lx)?;
        check_axis("n1", n1, v1_min, v1_max)?;
        check_axis("n2", n2, v2_min, v2_max)?;

        let dx = lx / m1 as f64;
        let dv1 = (v1_max - v1_min) / n1 as f64;
        let dv2 = (v2_max - v2_min) / n2 as f64;
        Ok(PhaseGrid {
            lx,
            m1,
            dx,
            x_nodes: (0..m1).map(|i| i as f64 * dx).collect(),
            v1_min,
            v1_max,
            n1,
            dv1,
            v1_nodes: (0..n1).map(|j| v1_min + j as f64 * dv1).collect(),
            v2_min,
            v2_max,
            n2,
            dv2,
            v2_nodes: (0..n2).map(|j| v2_min + j as f64 * dv2).collect(),
            xi: fourier_frequencies(m1, lx),
        })
    }

    /// Phase-space cell volume `dx * dv1 * dv2`.
    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dv1 * self.dv2
    }

    /// Velocity-space cell area `dv1 * dv2`.
    pub fn dv(&self) -> f64 {
        self.dv1 * self.dv2
    }

    pub fn total_points(&self) -> usize {
        self.m1 * self.n1 * self.n2
    }
}

/// Build the phase grid described by a run configuration.
pub fn make_phase_grid(config: &RunConfig) -> Result<PhaseGrid, SimError> {
    PhaseGrid::new(
        config.grid.m1,
        config.grid.lx,
        config.grid.n1,
        (config.grid.v1_min, config.grid.v1_max),
        config.grid.n2,
        (config.grid.v2_min, config.grid.v2_max),
    )
}

/// The angular frequency stored at FFT-layout slot `k_index`.
pub fn frequency_of(k_index: usize, grid: &PhaseGrid) -> Result<f64, SimError> {
    grid.xi
        .get(k_index)
        .copied()
        .ok_or_else(|| SimError::Kernel(format!("frequency index {k_index} out of range")))
}
