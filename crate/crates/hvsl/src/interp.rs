//! One-dimensional constant-shift advection kernels on periodic uniform
//! grids: cubic-spline semi-Lagrangian and Fourier-spectral.  These are the
//! performance core; everything phase-space-sized funnels through them.
//!
//! Both kernels implement `out[i] = reconstruction(z_i - shift)`, i.e. they
//! solve `df/dt + c df/dz = 0` over one step with `shift = c*dt`.  Shifts are
//! passed in units of the grid spacing so callers normalize exactly once.
//!
//! The spectral kernel keeps the output real by projecting after the phase
//! shift.  On even-length lines this turns the (translation-unrepresentable)
//! Nyquist mode into its representable cosine part, so exact shift
//! composition holds for resolved data (no Nyquist content) and for any
//! data on odd-length lines.  No dealiasing filter is applied anywhere;
//! aliasing of marginally resolved data is a known error source.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::SimError;

/// Kernel choice for a family of line advections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvectionBackend {
    Spline,
    Spectral,
}

/// Cubic B-spline nodal weights at fractional offset `w` in `[0, 1)`,
/// for the four coefficients `e[p-1], e[p], e[p+1], e[p+2]`.
#[inline]
pub(crate) fn bspline_weights(w: f64) -> [f64; 4] {
    let w2 = w * w;
    let w3 = w2 * w;
    let one = 1.0 - w;
    [
        one * one * one / 6.0,
        (3.0 * w3 - 6.0 * w2 + 4.0) / 6.0,
        (-3.0 * w3 + 3.0 * w2 + 3.0 * w + 1.0) / 6.0,
        w3 / 6.0,
    ]
}

/// Periodic cubic B-spline coefficients of one sampled line.
#[derive(Debug, Clone)]
pub struct SplineCoefficients {
    /// Coefficients `e_j`, one per node.
    pub e: Vec<f64>,
    pub dz: f64,
    pub z0: f64,
}

/// Factorized solver for the periodic cubic-spline collocation system
/// `(e[i-1] + 4 e[i] + e[i+1]) / 6 = f[i]` (cyclic).
///
/// The cyclic matrix is handled by a Sherman-Morrison rank-one correction of
/// a plain tridiagonal LU whose factors are precomputed once per line
/// length, so each solve is O(N) with no allocation.
#[derive(Debug, Clone)]
pub struct SplineLu {
    n: usize,
    /// 1 / pivot for each forward-elimination row of the corrected matrix.
    inv: Vec<f64>,
    /// Solution of the corrected system for the correction vector `u`.
    z: Vec<f64>,
    /// 1 / (1 + v.z), the Sherman-Morrison denominator.
    inv_sm: f64,
}

impl SplineLu {
    pub fn new(n: usize) -> Result<Self, SimError> {
        if n < 4 {
            return Err(SimError::Kernel(format!(
                "periodic cubic spline needs at least 4 nodes, got {n}"
            )));
        }
        // A = tridiag(1, 4, 1) with unit corners; A = A' + u v^T with
        // gamma = -4:  A'[0][0] = 8, A'[n-1][n-1] = 4 + 1/4,
        // u = (-4, 0, .., 0, 1), v = (1, 0, .., 0, -1/4).
        let mut diag = vec![4.0; n];
        diag[0] = 8.0;
        diag[n - 1] = 4.25;

        let mut inv = vec![0.0; n];
        inv[0] = 1.0 / diag[0];
        for i in 1..n {
            // sub- and super-diagonal entries are all 1
            inv[i] = 1.0 / (diag[i] - inv[i - 1]);
        }

        let mut u = vec![0.0; n];
        u[0] = -4.0;
        u[n - 1] = 1.0;
        let mut z = vec![0.0; n];
        let mut work = vec![0.0; n];
        thomas_solve(&inv, &u, &mut z, &mut work);
        let inv_sm = 1.0 / (1.0 + z[0] - 0.25 * z[n - 1]);

        Ok(SplineLu { n, inv, z, inv_sm })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve for the spline coefficients of `samples`, writing them into the
    /// extended layout `ext[0] = e[n-1]`, `ext[1..=n] = e[0..n]`,
    /// `ext[n+1] = e[0]`, `ext[n+2] = e[1]` used by `evaluate_shifted`.
    pub fn coefficients_into(&self, samples: &[f64], ext: &mut [f64], work: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(samples.len(), n);
        debug_assert!(ext.len() >= n + 3);
        debug_assert!(work.len() >= n);

        {
            let e = &mut ext[1..=n];
            // rhs is 6 * samples, folded into the forward sweep
            work[0] = 6.0 * samples[0] * self.inv[0];
            for i in 1..n {
                work[i] = (6.0 * samples[i] - work[i - 1]) * self.inv[i];
            }
            e[n - 1] = work[n - 1];
            for i in (0..n - 1).rev() {
                e[i] = work[i] - self.inv[i] * e[i + 1];
            }
            let corr = (e[0] - 0.25 * e[n - 1]) * self.inv_sm;
            for (ei, zi) in e.iter_mut().zip(self.z.iter()) {
                *ei -= corr * zi;
            }
        }
        ext[0] = ext[n];
        ext[n + 1] = ext[1];
        ext[n + 2] = ext[2];
    }

    /// Evaluate the spline held in `ext` at every node shifted by
    /// `-shift_cells` grid spacings, i.e. `out[i] = S(z_i - shift)`.
    pub fn evaluate_shifted(&self, ext: &[f64], shift_cells: f64, out: &mut [f64]) {
        let n = self.n;
        debug_assert!(ext.len() >= n + 3);
        debug_assert_eq!(out.len(), n);

        let t = -shift_cells;
        let k0 = t.floor();
        let w = t - k0;
        let wts = bspline_weights(w);
        let p0 = (k0 as i64).rem_euclid(n as i64) as usize;

        let split = n - p0;
        for (i, o) in out[..split].iter_mut().enumerate() {
            let p = p0 + i;
            *o = wts[0] * ext[p] + wts[1] * ext[p + 1] + wts[2] * ext[p + 2] + wts[3] * ext[p + 3];
        }
        for (i, o) in out[split..].iter_mut().enumerate() {
            let p = i; // wrapped: p0 + (split + i) - n
            *o = wts[0] * ext[p] + wts[1] * ext[p + 1] + wts[2] * ext[p + 2] + wts[3] * ext[p + 3];
        }
    }
}

/// Plain Thomas solve with precomputed pivots (`inv`) and unit off-diagonals.
fn thomas_solve(inv: &[f64], rhs: &[f64], x: &mut [f64], work: &mut [f64]) {
    let n = inv.len();
    work[0] = rhs[0] * inv[0];
    for i in 1..n {
        work[i] = (rhs[i] - work[i - 1]) * inv[i];
    }
    x[n - 1] = work[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = work[i] - inv[i] * x[i + 1];
    }
}

/// Fourier-spectral constant-shift advection of a periodic line.
pub struct SpectralAdvector {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Symmetric integer frequency indices in FFT-natural order.
    freq_idx: Vec<f64>,
    inv_n: f64,
    scratch_len: usize,
}

impl SpectralAdvector {
    pub fn new(n: usize) -> Result<Self, SimError> {
        if n < 2 {
            return Err(SimError::Kernel(format!(
                "spectral advection needs at least 2 nodes, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        let freq_idx = (0..n)
            .map(|k| {
                if k <= n / 2 {
                    k as f64
                } else {
                    k as f64 - n as f64
                }
            })
            .collect();
        Ok(SpectralAdvector {
            n,
            fft,
            ifft,
            freq_idx,
            inv_n: 1.0 / n as f64,
            scratch_len,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scratch_len(&self) -> usize {
        self.scratch_len
    }

    /// Phase factors `exp(-i * shift_cells * 2*pi*m/n)` over the symmetric
    /// frequency indices `m`.  Shifts sharing the same value can reuse one
    /// phase array across many lines.
    pub fn phases_into(&self, shift_cells: f64, phases: &mut [Complex<f64>]) {
        debug_assert_eq!(phases.len(), self.n);
        let base = -shift_cells * 2.0 * std::f64::consts::PI * self.inv_n;
        for (ph, &m) in phases.iter_mut().zip(self.freq_idx.iter()) {
            let (s, c) = (base * m).sin_cos();
            *ph = Complex::new(c, s);
        }
    }

    pub fn advect_with_phases(
        &self,
        input: &[f64],
        phases: &[Complex<f64>],
        out: &mut [f64],
        buf: &mut [Complex<f64>],
        scratch: &mut [Complex<f64>],
    ) {
        debug_assert_eq!(input.len(), self.n);
        for (b, &x) in buf.iter_mut().zip(input.iter()) {
            *b = Complex::new(x, 0.0);
        }
        self.fft.process_with_scratch(buf, scratch);
        for (b, ph) in buf.iter_mut().zip(phases.iter()) {
            *b *= ph;
        }
        self.ifft.process_with_scratch(buf, scratch);
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = b.re * self.inv_n;
        }
    }
}

/// Kernel-internal scratch for one line advection.
pub struct KernelScratch {
    pub line: Vec<f64>,
    pub ext: Vec<f64>,
    pub work: Vec<f64>,
    pub buf: Vec<Complex<f64>>,
    pub fft_scratch: Vec<Complex<f64>>,
    pub phases: Vec<Complex<f64>>,
}

impl KernelScratch {
    pub fn new(max_n: usize, fft_scratch_len: usize) -> Self {
        KernelScratch {
            line: vec![0.0; max_n],
            ext: vec![0.0; max_n + 3],
            work: vec![0.0; max_n],
            buf: vec![Complex::new(0.0, 0.0); max_n],
            fft_scratch: vec![Complex::new(0.0, 0.0); fft_scratch_len],
            phases: vec![Complex::new(0.0, 0.0); max_n],
        }
    }
}

/// Per-thread workspace: a gather buffer for strided lines plus the kernel
/// scratch.  Separate fields so both can be borrowed at once.
pub struct LineScratch {
    pub gather: Vec<f64>,
    pub kernel: KernelScratch,
}

impl LineScratch {
    pub fn new(max_n: usize, fft_scratch_len: usize) -> Self {
        LineScratch {
            gather: vec![0.0; max_n],
            kernel: KernelScratch::new(max_n, fft_scratch_len),
        }
    }
}

/// A prepared advection kernel for one line length.
pub enum Advector {
    Spline(SplineLu),
    Spectral(SpectralAdvector),
}

impl Advector {
    pub fn new(backend: AdvectionBackend, n: usize) -> Result<Self, SimError> {
        Ok(match backend {
            AdvectionBackend::Spline => Advector::Spline(SplineLu::new(n)?),
            AdvectionBackend::Spectral => Advector::Spectral(SpectralAdvector::new(n)?),
        })
    }

    pub fn n(&self) -> usize {
        match self {
            Advector::Spline(k) => k.n(),
            Advector::Spectral(k) => k.n(),
        }
    }

    pub fn fft_scratch_len(&self) -> usize {
        match self {
            Advector::Spline(_) => 0,
            Advector::Spectral(k) => k.scratch_len(),
        }
    }

    /// Advect `input` by `shift_cells` grid spacings into `out`.
    /// Integer shifts reduce to an exact circular shift for both kernels.
    pub fn advect_into(
        &self,
        input: &[f64],
        shift_cells: f64,
        out: &mut [f64],
        ws: &mut KernelScratch,
    ) {
        let n = self.n();
        if shift_cells == 0.0 {
            out.copy_from_slice(input);
            return;
        }
        if shift_cells.fract() == 0.0 && shift_cells.abs() < (n as f64) * 1.0e9 {
            circular_shift(input, shift_cells as i64, out);
            return;
        }
        match self {
            Advector::Spline(k) => {
                k.coefficients_into(input, &mut ws.ext, &mut ws.work);
                k.evaluate_shifted(&ws.ext, shift_cells, out);
            }
            Advector::Spectral(k) => {
                k.phases_into(shift_cells, &mut ws.phases[..n]);
                let (phases, buf) = (&ws.phases[..n], &mut ws.buf[..n]);
                k.advect_with_phases(input, phases, out, buf, &mut ws.fft_scratch);
            }
        }
    }

    /// In-place variant; stages the line through the workspace.
    pub fn advect_in_place(&self, line: &mut [f64], shift_cells: f64, ws: &mut KernelScratch) {
        if shift_cells == 0.0 {
            return;
        }
        let n = self.n();
        if shift_cells.fract() == 0.0 && shift_cells.abs() < (n as f64) * 1.0e9 {
            ws.line[..n].copy_from_slice(line);
            circular_shift(&ws.line[..n], shift_cells as i64, line);
            return;
        }
        match self {
            Advector::Spline(k) => {
                k.coefficients_into(line, &mut ws.ext, &mut ws.work);
                k.evaluate_shifted(&ws.ext, shift_cells, line);
            }
            Advector::Spectral(k) => {
                ws.line[..n].copy_from_slice(line);
                k.phases_into(shift_cells, &mut ws.phases[..n]);
                k.advect_with_phases(
                    &ws.line[..n],
                    &ws.phases[..n],
                    line,
                    &mut ws.buf[..n],
                    &mut ws.fft_scratch,
                );
            }
        }
    }
}

/// `out[i] = input[(i - k) mod n]`; nodes map to nodes.
fn circular_shift(input: &[f64], k: i64, out: &mut [f64]) {
    let n = input.len();
    let k = k.rem_euclid(n as i64) as usize;
    // out[i] = input[(i + n - k) mod n]
    out[k..].copy_from_slice(&input[..n - k]);
    out[..k].copy_from_slice(&input[n - k..]);
}

/// Solve the periodic cubic-spline collocation system for one line.
pub fn spline_coefficients_periodic(
    samples: &[f64],
    dz: f64,
) -> Result<SplineCoefficients, SimError> {
    let n = samples.len();
    let lu = SplineLu::new(n)?;
    let mut ext = vec![0.0; n + 3];
    let mut work = vec![0.0; n];
    lu.coefficients_into(samples, &mut ext, &mut work);
    Ok(SplineCoefficients {
        e: ext[1..=n].to_vec(),
        dz,
        z0: 0.0,
    })
}

/// Evaluate a periodic spline at an arbitrary position (wrapped into the
/// fundamental domain `[z0, z0 + n*dz)`).
pub fn spline_evaluate(coeffs: &SplineCoefficients, z: f64) -> f64 {
    let n = coeffs.e.len();
    let t = (z - coeffs.z0) / coeffs.dz;
    let nf = n as f64;
    let mut t = t - nf * (t / nf).floor();
    if t >= nf {
        t = 0.0;
    }
    let p = t.floor() as usize;
    let w = t - p as f64;
    let wts = bspline_weights(w);
    let at = |j: i64| coeffs.e[j.rem_euclid(n as i64) as usize];
    let p = p as i64;
    wts[0] * at(p - 1) + wts[1] * at(p) + wts[2] * at(p + 1) + wts[3] * at(p + 2)
}

/// One-shot periodic cubic-spline advection of a line by `shift` (same
/// units as `dz`).
pub fn advect_line_spline(samples: &[f64], shift: f64, dz: f64) -> Result<Vec<f64>, SimError> {
    let adv = Advector::new(AdvectionBackend::Spline, samples.len())?;
    let mut ws = KernelScratch::new(samples.len(), 0);
    let mut out = vec![0.0; samples.len()];
    adv.advect_into(samples, shift / dz, &mut out, &mut ws);
    Ok(out)
}

/// One-shot Fourier-spectral advection of a line by `shift`.
pub fn advect_line_spectral(samples: &[f64], shift: f64, dz: f64) -> Result<Vec<f64>, SimError> {
    let adv = Advector::new(AdvectionBackend::Spectral, samples.len())?;
    let mut ws = KernelScratch::new(samples.len(), adv.fft_scratch_len());
    let mut out = vec![0.0; samples.len()];
    adv.advect_into(samples, shift / dz, &mut out, &mut ws);
    Ok(out)
}

/// Spectral differentiation of periodic nodal data (the derivative of the
/// trigonometric interpolant, evaluated at the nodes).
pub struct SpectralOps {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    xi: Vec<f64>,
    inv_n: f64,
}

impl SpectralOps {
    pub fn new(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        SpectralOps {
            n,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            xi: crate::grid::fourier_frequencies(n, length),
            inv_n: 1.0 / n as f64,
        }
    }

    pub fn derivative_into(&self, input: &[f64], out: &mut [f64]) {
        debug_assert_eq!(input.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        let mut buf: Vec<Complex<f64>> =
            input.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        for (b, &xi) in buf.iter_mut().zip(self.xi.iter()) {
            *b = Complex::new(-b.im * xi, b.re * xi); // multiply by i*xi
        }
        self.ifft.process(&mut buf);
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = b.re * self.inv_n;
        }
    }

    pub fn derivative(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.derivative_into(input, &mut out);
        out
    }
}
