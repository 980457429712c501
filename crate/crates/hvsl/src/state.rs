//! Discrete unknowns of the reduced model: the ion distribution `f`, the
//! out-of-plane magnetic field `B3`, the electron pressure `p`, and the
//! velocity moments derived from `f`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::config::ElectronClosure;
use crate::error::SimError;
use crate::grid::PhaseGrid;
use crate::interp::SpectralOps;
use crate::reduce::pairwise_sum;

/// Ion phase-space density sampled at the grid nodes, stored flat as
/// `f[i][j1][j2]` with `j2` fastest-varying so the shear inner loops are
/// contiguous.
#[derive(Debug, Clone)]
pub struct Distribution {
    data: Vec<f64>,
    grid: Arc<PhaseGrid>,
}

impl Distribution {
    pub fn zeros(grid: Arc<PhaseGrid>) -> Self {
        let n = grid.total_points();
        Distribution {
            data: vec![0.0; n],
            grid,
        }
    }

    /// Sample `f(x, v1, v2)` at every node.
    pub fn from_fn(grid: Arc<PhaseGrid>, f: impl Fn(f64, f64, f64) -> f64 + Sync) -> Self {
        let mut d = Distribution::zeros(grid.clone());
        let (n1, n2) = (grid.n1, grid.n2);
        d.data
            .par_chunks_mut(n1 * n2)
            .enumerate()
            .for_each(|(i, slab)| {
                let x = grid.x_nodes[i];
                for (j1, row) in slab.chunks_mut(n2).enumerate() {
                    let v1 = grid.v1_nodes[j1];
                    for (j2, val) in row.iter_mut().enumerate() {
                        *val = f(x, v1, grid.v2_nodes[j2]);
                    }
                }
            });
        d
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn slab_len(&self) -> usize {
        self.grid.n1 * self.grid.n2
    }

    /// The velocity-space slab at spatial index `i`.
    pub fn slab(&self, i: usize) -> &[f64] {
        let s = self.slab_len();
        &self.data[i * s..(i + 1) * s]
    }

    pub fn value(&self, i: usize, j1: usize, j2: usize) -> f64 {
        self.data[(i * self.grid.n1 + j1) * self.grid.n2 + j2]
    }

    /// l1 distance to another distribution (plain sum over nodes).
    pub fn l1_distance(&self, other: &Distribution) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Largest |f| on the periodic velocity seam (`j1 = 0` or `j2 = 0`);
    /// the velocity box must be large enough that this stays negligible.
    pub fn boundary_max(&self) -> f64 {
        let (n1, n2) = (self.grid.n1, self.grid.n2);
        let mut m = 0.0_f64;
        for i in 0..self.grid.m1 {
            let slab = self.slab(i);
            for j2 in 0..n2 {
                m = m.max(slab[j2].abs());
            }
            for j1 in 0..n1 {
                m = m.max(slab[j1 * n2].abs());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Field unknowns and the electron closure parameters.
///
/// For the isothermal and adiabatic closures the pressure is never stored:
/// it is recomputed from the density as `kappa * rho^gamma` on demand.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub b3: Vec<f64>,
    p: Option<Vec<f64>>,
    pub gamma: f64,
    pub kappa: f64,
    pub closure: ElectronClosure,
}

impl FieldState {
    pub fn new(
        closure: ElectronClosure,
        gamma: f64,
        kappa: f64,
        b3: Vec<f64>,
        p0: Option<Vec<f64>>,
    ) -> Result<Self, SimError> {
        let p = match closure {
            ElectronClosure::PressureEquation => {
                let p0 = p0.ok_or_else(|| {
                    SimError::State("pressure-equation closure needs an initial pressure".into())
                })?;
                if p0.iter().any(|&v| v <= 0.0) {
                    return Err(SimError::State("initial pressure must be positive".into()));
                }
                Some(p0)
            }
            _ => None,
        };
        Ok(FieldState {
            b3,
            p,
            gamma,
            kappa,
            closure,
        })
    }

    pub fn m1(&self) -> usize {
        self.b3.len()
    }

    /// Pressure at the nodes for the given density snapshot.
    pub fn pressure(&self, rho: &[f64]) -> Vec<f64> {
        match self.closure {
            ElectronClosure::Isothermal => rho.iter().map(|&r| self.kappa * r).collect(),
            ElectronClosure::Adiabatic => {
                rho.iter().map(|&r| self.kappa * r.powf(self.gamma)).collect()
            }
            ElectronClosure::PressureEquation => self.p.as_ref().unwrap().clone(),
        }
    }

    pub fn stored_pressure(&self) -> Option<&[f64]> {
        self.p.as_deref()
    }

    /// Replace the evolved pressure (pressure-equation closure only).
    pub fn set_pressure(&mut self, p: Vec<f64>) -> Result<(), SimError> {
        match self.closure {
            ElectronClosure::PressureEquation => {
                if p.iter().any(|&v| v <= 0.0) {
                    return Err(SimError::State(
                        "pressure update produced a non-positive value".into(),
                    ));
                }
                self.p = Some(p);
                Ok(())
            }
            _ => Err(SimError::State(
                "pressure is closure-derived; it cannot be assigned".into(),
            )),
        }
    }

    pub fn l1_distance(&self, other: &FieldState) -> (f64, f64) {
        let db: f64 = self
            .b3
            .iter()
            .zip(other.b3.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        let dp = match (&self.p, &other.p) {
            (Some(p), Some(q)) => p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).sum(),
            _ => 0.0,
        };
        (db, dp)
    }
}

/// Velocity moments of the distribution at every spatial node.
#[derive(Debug, Clone)]
pub struct Moments {
    pub rho: Vec<f64>,
    pub jf1: Vec<f64>,
    pub jf2: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

/// Zeroth and first velocity moments; errors if quasi-neutrality would be
/// violated (`rho <= 0` anywhere).
pub fn compute_moments(f: &Distribution) -> Result<Moments, SimError> {
    let grid = f.grid();
    let (m1, n1, n2) = (grid.m1, grid.n1, grid.n2);
    let dv = grid.dv();

    // One task per spatial point, each summed serially in index order, so
    // the reduction tree is fixed and results are run-to-run identical.
    let per_point: Vec<(f64, f64, f64)> = (0..m1)
        .into_par_iter()
        .map(|i| {
            let slab = f.slab(i);
            let mut s0 = 0.0;
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for (j1, row) in slab.chunks_exact(n2).enumerate() {
                let mut row0 = 0.0;
                let mut row2 = 0.0;
                for (j2, &v) in row.iter().enumerate() {
                    row0 += v;
                    row2 += grid.v2_nodes[j2] * v;
                }
                s0 += row0;
                s1 += grid.v1_nodes[j1] * row0;
                s2 += row2;
            }
            (s0 * dv, s1 * dv, s2 * dv)
        })
        .collect();

    let mut m = Moments {
        rho: Vec::with_capacity(m1),
        jf1: Vec::with_capacity(m1),
        jf2: Vec::with_capacity(m1),
        u1: Vec::with_capacity(m1),
        u2: Vec::with_capacity(m1),
    };
    for (i, &(r, j1, j2)) in per_point.iter().enumerate() {
        if !(r > 0.0) {
            return Err(SimError::State(format!(
                "rho[{i}] = {r:e} violates quasi-neutrality (rho must be positive)"
            )));
        }
        m.rho.push(r);
        m.jf1.push(j1);
        m.jf2.push(j2);
        m.u1.push(j1 / r);
        m.u2.push(j2 / r);
    }
    let _ = n1;
    Ok(m)
}

/// The only nonzero plasma-current component in this geometry:
/// `J2 = -dB3/dx`, computed spectrally.
pub fn curl_term(fields: &FieldState, grid: &PhaseGrid) -> Vec<f64> {
    let ops = SpectralOps::new(grid.m1, grid.lx);
    curl_term_with(fields, &ops)
}

pub fn curl_term_with(fields: &FieldState, ops: &SpectralOps) -> Vec<f64> {
    let mut d = ops.derivative(&fields.b3);
    for v in d.iter_mut() {
        *v = -*v;
    }
    d
}

/// Electron drift v2-component `ue2 = u2 + (dB3/dx) / rho`
/// (from `u_e = u - J/rho` with `J = (0, -dB3/dx, 0)`).
pub fn electron_drift_v2(moments: &Moments, fields: &FieldState, ops: &SpectralOps) -> Vec<f64> {
    let j2 = curl_term_with(fields, ops);
    moments
        .u2
        .iter()
        .zip(j2.iter().zip(moments.rho.iter()))
        .map(|(&u2, (&j2, &r))| u2 - j2 / r)
        .collect()
}

/// Kinetic energy density `0.5 * sum (v1^2 + v2^2) f dv` per spatial node.
pub fn kinetic_energy_density(f: &Distribution) -> Vec<f64> {
    let grid = f.grid();
    let (m1, n2) = (grid.m1, grid.n2);
    let dv = grid.dv();
    (0..m1)
        .into_par_iter()
        .map(|i| {
            let slab = f.slab(i);
            let mut s = 0.0;
            for (j1, row) in slab.chunks_exact(n2).enumerate() {
                let v1sq = grid.v1_nodes[j1] * grid.v1_nodes[j1];
                let mut acc = 0.0;
                for (j2, &v) in row.iter().enumerate() {
                    let v2 = grid.v2_nodes[j2];
                    acc += (v1sq + v2 * v2) * v;
                }
                s += acc;
            }
            0.5 * s * dv
        })
        .collect()
}

/// Deterministic sum of a per-spatial-point quantity times `dx`.
pub fn spatial_integral(values: &[f64], grid: &PhaseGrid) -> f64 {
    pairwise_sum(values) * grid.dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhaseGrid;
    use std::f64::consts::PI;

    fn maxwellian_grid() -> Arc<PhaseGrid> {
        // half-width 8 >= 5 * vt for vt = 1.4142
        Arc::new(PhaseGrid::new(8, 2.0 * PI, 64, (-8.0, 8.0), 64, (-8.0, 8.0)).unwrap())
    }

    fn maxwellian(grid: Arc<PhaseGrid>, vt: f64, d1: f64, d2: f64) -> Distribution {
        Distribution::from_fn(grid, move |_x, v1, v2| {
            1.0 / (PI * vt * vt)
                * (-((v1 - d1).powi(2) + (v2 - d2).powi(2)) / (vt * vt)).exp()
        })
    }

    #[test]
    fn zero_distribution_is_a_state_error() {
        let f = Distribution::zeros(maxwellian_grid());
        assert!(matches!(compute_moments(&f), Err(SimError::State(_))));
    }

    #[test]
    fn centered_maxwellian_moments() {
        let f = maxwellian(maxwellian_grid(), 1.4142, 0.0, 0.0);
        let m = compute_moments(&f).unwrap();
        for i in 0..8 {
            assert!((m.rho[i] - 1.0).abs() <= 1e-10, "rho[{i}] = {}", m.rho[i]);
            assert!(m.u1[i].abs() <= 1e-12);
            assert!(m.u2[i].abs() <= 1e-12);
        }
    }

    #[test]
    fn drifting_maxwellian_moments() {
        let f = maxwellian(maxwellian_grid(), 1.4142, 0.1, 0.2);
        let m = compute_moments(&f).unwrap();
        for i in 0..8 {
            assert!((m.u1[i] - 0.1).abs() <= 1e-8);
            assert!((m.u2[i] - 0.2).abs() <= 1e-8);
        }
    }

    #[test]
    fn moment_linearity() {
        let grid = maxwellian_grid();
        let f = maxwellian(grid.clone(), 1.4142, 0.1, 0.0);
        let g = maxwellian(grid.clone(), 2.0, 0.0, 0.3);
        let mut h = Distribution::zeros(grid);
        for ((hv, fv), gv) in h
            .data_mut()
            .iter_mut()
            .zip(f.data().iter())
            .zip(g.data().iter())
        {
            *hv = 2.0 * fv + 0.5 * gv;
        }
        let (mf, mg, mh) = (
            compute_moments(&f).unwrap(),
            compute_moments(&g).unwrap(),
            compute_moments(&h).unwrap(),
        );
        for i in 0..8 {
            assert!((mh.rho[i] - (2.0 * mf.rho[i] + 0.5 * mg.rho[i])).abs() <= 1e-15);
            assert!((mh.jf1[i] - (2.0 * mf.jf1[i] + 0.5 * mg.jf1[i])).abs() <= 1e-15);
            assert!((mh.jf2[i] - (2.0 * mf.jf2[i] + 0.5 * mg.jf2[i])).abs() <= 1e-15);
        }
    }

    #[test]
    fn curl_term_of_constant_field_vanishes() {
        let grid = maxwellian_grid();
        let fields = FieldState::new(
            ElectronClosure::Isothermal,
            1.0,
            1.0,
            vec![3.7; grid.m1],
            None,
        )
        .unwrap();
        for v in curl_term(&fields, &grid) {
            assert!(v.abs() <= 1e-13);
        }
    }

    #[test]
    fn curl_term_of_resolved_mode() {
        let grid = Arc::new(PhaseGrid::new(16, PI, 8, (-1.0, 1.0), 8, (-1.0, 1.0)).unwrap());
        let b3: Vec<f64> = grid
            .x_nodes
            .iter()
            .map(|&x| 1.0 + 0.01 * (2.0 * x).sin())
            .collect();
        let fields = FieldState::new(ElectronClosure::Isothermal, 1.0, 1.0, b3, None).unwrap();
        let j2 = curl_term(&fields, &grid);
        for (i, &x) in grid.x_nodes.iter().enumerate() {
            let expect = -0.02 * (2.0 * x).cos();
            assert!((j2[i] - expect).abs() <= 1e-12);
        }
        let mean: f64 = j2.iter().sum::<f64>() / 16.0;
        assert!(mean.abs() <= 1e-14);
    }

    #[test]
    fn closure_pressure_forms() {
        let rho = vec![1.0, 1.21, 0.81];
        let iso = FieldState::new(ElectronClosure::Isothermal, 1.0, 6.25, vec![0.0; 3], None)
            .unwrap();
        let p = iso.pressure(&rho);
        assert!((p[1] - 6.25 * 1.21).abs() < 1e-14);

        let adia =
            FieldState::new(ElectronClosure::Adiabatic, 5.0 / 3.0, 0.09, vec![0.0; 3], None)
                .unwrap();
        let p = adia.pressure(&rho);
        assert!((p[2] - 0.09 * 0.81_f64.powf(5.0 / 3.0)).abs() < 1e-14);

        assert!(FieldState::new(
            ElectronClosure::PressureEquation,
            5.0 / 3.0,
            0.09,
            vec![0.0; 3],
            None
        )
        .is_err());
    }
}
