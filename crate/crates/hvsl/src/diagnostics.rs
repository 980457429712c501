//! Conserved-quantity accounting, deviation norms, decay-rate fitting, and
//! space-time spectral analysis for dispersion relations.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::config::ElectronClosure;
use crate::error::SimError;
use crate::grid::fourier_frequencies;
use crate::reduce::pairwise_sum;
use crate::state::{Distribution, FieldState};

/// All tracked invariants at one output time.
///
/// `energy_pressure` is the closure's thermal energy: `sum p/(gamma-1) dx`
/// for the pressure-equation and adiabatic closures, and the isothermal
/// free energy `kappa * sum rho ln(rho) dx` when `gamma = 1` (the
/// `p/(gamma-1)` form does not exist there, but without a thermal term the
/// total would drift by the physically exchanged work, not by scheme error).
#[derive(Debug, Clone, Copy)]
pub struct ConservedSnapshot {
    pub time: f64,
    pub mass: f64,
    pub momentum1: f64,
    pub momentum2: f64,
    pub energy_kinetic: f64,
    pub energy_magnetic: f64,
    pub energy_pressure: f64,
    pub energy_total: f64,
    /// `sum (rho_i - 1)^2 dx`
    pub rho_dev: f64,
    /// `sum |p_i - kappa rho_i^gamma|` (pressure-equation closure; else 0)
    pub p_relation_err: f64,
    pub picard_iters: usize,
}

/// Pure accounting over the live state; `f = 0` is legal here.
pub fn conserved_quantities(f: &Distribution, fields: &FieldState, time: f64) -> ConservedSnapshot {
    let grid = f.grid();
    let (m1, n2) = (grid.m1, grid.n2);
    let dv = grid.dv();
    let dx = grid.dx;

    // Per-spatial-point partials, each accumulated serially in index order;
    // cross-point sums use a fixed pairwise tree.
    let mut rho = vec![0.0; m1];
    let mut jf1 = vec![0.0; m1];
    let mut jf2 = vec![0.0; m1];
    let mut kin = vec![0.0; m1];
    for i in 0..m1 {
        let slab = f.slab(i);
        let (mut s0, mut s1, mut s2, mut sk) = (0.0, 0.0, 0.0, 0.0);
        for (j1, row) in slab.chunks_exact(n2).enumerate() {
            let v1 = grid.v1_nodes[j1];
            let (mut r0, mut r2, mut rk) = (0.0, 0.0, 0.0);
            for (j2, &v) in row.iter().enumerate() {
                let v2 = grid.v2_nodes[j2];
                r0 += v;
                r2 += v2 * v;
                rk += v2 * v2 * v;
            }
            s0 += r0;
            s1 += v1 * r0;
            s2 += r2;
            sk += v1 * v1 * r0 + rk;
        }
        rho[i] = s0 * dv;
        jf1[i] = s1 * dv;
        jf2[i] = s2 * dv;
        kin[i] = 0.5 * sk * dv;
    }

    let mass = pairwise_sum(&rho) * dx;
    let momentum1 = pairwise_sum(&jf1) * dx;
    let momentum2 = pairwise_sum(&jf2) * dx;
    let energy_kinetic = pairwise_sum(&kin) * dx;

    let mag: Vec<f64> = fields.b3.iter().map(|&b| 0.5 * b * b).collect();
    let energy_magnetic = pairwise_sum(&mag) * dx;

    let pressure = fields.pressure(&rho);
    let energy_pressure = match fields.closure {
        ElectronClosure::Isothermal => {
            let terms: Vec<f64> = rho
                .iter()
                .map(|&r| if r > 0.0 { fields.kappa * r * r.ln() } else { 0.0 })
                .collect();
            pairwise_sum(&terms) * dx
        }
        _ => {
            let terms: Vec<f64> = pressure.iter().map(|&p| p / (fields.gamma - 1.0)).collect();
            pairwise_sum(&terms) * dx
        }
    };

    let dev: Vec<f64> = rho.iter().map(|&r| (r - 1.0) * (r - 1.0)).collect();
    let rho_dev = pairwise_sum(&dev) * dx;

    let p_relation_err = match fields.closure {
        ElectronClosure::PressureEquation => {
            let err: Vec<f64> = pressure
                .iter()
                .zip(rho.iter())
                .map(|(&p, &r)| (p - fields.kappa * r.powf(fields.gamma)).abs())
                .collect();
            pairwise_sum(&err)
        }
        _ => 0.0,
    };

    ConservedSnapshot {
        time,
        mass,
        momentum1,
        momentum2,
        energy_kinetic,
        energy_magnetic,
        energy_pressure,
        energy_total: energy_kinetic + energy_magnetic + energy_pressure,
        rho_dev,
        p_relation_err,
        picard_iters: 0,
    }
}

/// Least-squares slope of `log(value)` over a time window, with the R^2
/// goodness of fit (reported as 1 for a perfect constant fit).
pub fn fit_decay_rate(
    series: &[(f64, f64)],
    window: (f64, f64),
) -> Result<(f64, f64), SimError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .copied()
        .collect();
    if pts.len() < 2 {
        return Err(SimError::Diagnostics(format!(
            "decay-rate window [{}, {}] holds {} point(s); need at least 2",
            window.0,
            window.1,
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| *v <= 0.0) {
        return Err(SimError::Diagnostics(format!(
            "non-positive value {v:e} at t = {t} in the decay-rate window"
        )));
    }
    let n = pts.len() as f64;
    let mut st = 0.0;
    let mut sy = 0.0;
    for &(t, v) in &pts {
        st += t;
        sy += v.ln();
    }
    let (tbar, ybar) = (st / n, sy / n);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(t, v) in &pts {
        let dt = t - tbar;
        let dy = v.ln() - ybar;
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(SimError::Diagnostics(
            "degenerate decay-rate window: all samples at one time".into(),
        ));
    }
    let slope = sxy / sxx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok((slope, r2))
}

/// Interior local maxima of a time series (peaks of an oscillating decay).
pub fn series_peaks(series: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut peaks = Vec::new();
    for i in 1..series.len().saturating_sub(1) {
        if series[i].1 > series[i - 1].1 && series[i].1 >= series[i + 1].1 {
            peaks.push(series[i]);
        }
    }
    peaks
}

/// Two-dimensional power spectrum of a field history over `(k, omega)`.
///
/// Conventions: the transform pairs `exp(-i k x)` with `exp(+i omega t)` so
/// a traveling wave `cos(K x - W t)` lands at `(+K, +W)`; a Hann window is
/// applied in time (runs are not time-periodic), none in x (periodic).
pub struct SpaceTimeSpectrum {
    pub nk: usize,
    pub nw: usize,
    /// `power[iw * nk + ik]`, axes in FFT-natural order.
    pub power: Vec<f64>,
    pub k_axis: Vec<f64>,
    pub omega_axis: Vec<f64>,
    /// Energy of the windowed, mean-subtracted signal (Parseval check).
    pub signal_energy: f64,
}

/// Positive-quadrant view (`k > 0`, `omega >= 0`) with both propagation
/// directions folded together; `power[ik * nw + iw]` is k-major so one
/// k-column is contiguous.
pub struct SpectrumQuadrant {
    pub k: Vec<f64>,
    pub omega: Vec<f64>,
    pub power: Vec<f64>,
}

impl SpectrumQuadrant {
    pub fn column(&self, ik: usize) -> &[f64] {
        &self.power[ik * self.omega.len()..(ik + 1) * self.omega.len()]
    }

    pub fn max_power(&self) -> f64 {
        self.power.iter().fold(0.0_f64, |m, &v| m.max(v))
    }
}

pub fn spacetime_spectrum(
    history: &[Vec<f64>],
    times: &[f64],
    lx: f64,
) -> Result<SpaceTimeSpectrum, SimError> {
    let nt = history.len();
    if nt < 16 {
        return Err(SimError::Diagnostics(format!(
            "need at least 16 time samples for a spectrum, got {nt}"
        )));
    }
    if times.len() != nt {
        return Err(SimError::Diagnostics("times/history length mismatch".into()));
    }
    let nk = history[0].len();
    let dt_out = times[1] - times[0];
    if dt_out <= 0.0 {
        return Err(SimError::Diagnostics("time axis must increase".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt_out).abs() > 1e-9 * dt_out.max(1.0) {
            return Err(SimError::Diagnostics(format!(
                "non-uniform output cadence: {} vs {}",
                w[1] - w[0],
                dt_out
            )));
        }
    }

    let total: f64 = history.iter().map(|row| row.iter().sum::<f64>()).sum();
    let mean = total / (nt * nk) as f64;

    // windowed, mean-subtracted signal, time-major
    let mut g = vec![Complex::new(0.0, 0.0); nt * nk];
    let mut signal_energy = 0.0;
    for (j, row) in history.iter().enumerate() {
        if row.len() != nk {
            return Err(SimError::Diagnostics("ragged field history".into()));
        }
        let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * j as f64 / nt as f64).cos());
        for (i, &v) in row.iter().enumerate() {
            let gv = (v - mean) * w;
            signal_energy += gv * gv;
            g[j * nk + i] = Complex::new(gv, 0.0);
        }
    }

    let mut planner = FftPlanner::new();
    let fft_x = planner.plan_fft_forward(nk);
    for row in g.chunks_exact_mut(nk) {
        fft_x.process(row);
    }
    // exp(+i omega t) convention: unnormalized inverse transform in time
    let ifft_t = planner.plan_fft_inverse(nt);
    let mut col = vec![Complex::new(0.0, 0.0); nt];
    let mut power = vec![0.0; nt * nk];
    for k in 0..nk {
        for j in 0..nt {
            col[j] = g[j * nk + k];
        }
        ifft_t.process(&mut col);
        for j in 0..nt {
            power[j * nk + k] = col[j].norm_sqr();
        }
    }

    Ok(SpaceTimeSpectrum {
        nk,
        nw: nt,
        power,
        k_axis: fourier_frequencies(nk, lx),
        omega_axis: fourier_frequencies(nt, nt as f64 * dt_out),
        signal_energy,
    })
}

impl SpaceTimeSpectrum {
    /// `sum |F|^2 / (nk * nw)`; equals `signal_energy` by Parseval.
    pub fn total_power_normalized(&self) -> f64 {
        pairwise_sum(&self.power) / (self.nk * self.nw) as f64
    }

    pub fn quadrant(&self) -> SpectrumQuadrant {
        let nk_pos = self.nk / 2; // k slots 1..=nk/2
        let nw_pos = self.nw / 2 + 1; // omega slots 0..=nw/2
        let mut k = Vec::with_capacity(nk_pos);
        let mut omega = Vec::with_capacity(nw_pos);
        for ik in 1..=nk_pos {
            k.push(self.k_axis[ik].abs());
        }
        for iw in 0..nw_pos {
            omega.push(self.omega_axis[iw].abs());
        }
        let mut power = vec![0.0; nk_pos * nw_pos];
        for (qik, ik) in (1..=nk_pos).enumerate() {
            for iw in 0..nw_pos {
                let mut p = self.power[iw * self.nk + ik];
                let neg = (self.nw - iw) % self.nw;
                if neg != iw {
                    p += self.power[neg * self.nk + ik];
                }
                power[qik * nw_pos + iw] = p;
            }
        }
        SpectrumQuadrant { k, omega, power }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgePoint {
    pub k: f64,
    pub omega: f64,
    pub power: f64,
}

/// Local maxima of one k-column above `floor`, skipping the DC omega bin.
pub fn column_peaks(q: &SpectrumQuadrant, ik: usize, floor: f64) -> Vec<RidgePoint> {
    let col = q.column(ik);
    let mut peaks = Vec::new();
    for iw in 1..col.len().saturating_sub(1) {
        if col[iw] >= floor && col[iw] > col[iw - 1] && col[iw] >= col[iw + 1] {
            peaks.push(RidgePoint {
                k: q.k[ik],
                omega: q.omega[iw],
                power: col[iw],
            });
        }
    }
    peaks
}

/// Per-k-column peaks grouped into branches by omega-continuity, ordered by
/// increasing branch frequency.
pub fn extract_branch_ridges(
    q: &SpectrumQuadrant,
    floor_rel: f64,
) -> Result<Vec<Vec<RidgePoint>>, SimError> {
    let floor = floor_rel * q.max_power();
    let dw = if q.omega.len() > 1 {
        q.omega[1] - q.omega[0]
    } else {
        1.0
    };
    let mut branches: Vec<Vec<RidgePoint>> = Vec::new();
    for ik in 0..q.k.len() {
        let peaks = column_peaks(q, ik, floor);
        let mut taken: Vec<bool> = branches.iter().map(|_| false).collect();
        for peak in peaks {
            let mut best: Option<(usize, f64)> = None;
            for (bi, branch) in branches.iter().enumerate() {
                if taken[bi] {
                    continue;
                }
                let last = branch.last().unwrap();
                if last.k >= peak.k {
                    continue;
                }
                let gap = (last.omega - peak.omega).abs();
                let tol = (5.0 * dw).max(0.25 * last.omega);
                if gap <= tol && best.map(|(_, g)| gap < g).unwrap_or(true) {
                    best = Some((bi, gap));
                }
            }
            match best {
                Some((bi, _)) => {
                    branches[bi].push(peak);
                    taken[bi] = true;
                }
                None => {
                    branches.push(vec![peak]);
                    taken.push(true);
                }
            }
        }
    }
    if branches.is_empty() {
        return Err(SimError::Diagnostics(
            "no spectral peaks above the floor".into(),
        ));
    }
    branches.sort_by(|a, b| {
        a.first()
            .unwrap()
            .omega
            .partial_cmp(&b.first().unwrap().omega)
            .unwrap()
    });
    Ok(branches)
}
