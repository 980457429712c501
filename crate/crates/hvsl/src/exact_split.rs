//! Per-spatial-point algebra of the pvb substep: pressure-term
//! decomposition, the planar rotation exponential, the time-averaging
//! matrix `M`, the explicit mean velocity, and the shear decomposition of
//! the 2D velocity rotation.
//!
//! Geometry: `B = (0, 0, b)`, so the rotation acts in the `(v1, v2)` plane
//! with angle `theta = dt * b`, the plasma current is `J = (0, -dB3/dx, 0)`,
//! and the pressure force `(dp/dx)/rho` points along `v1`.

use crate::error::SimError;

pub const RESONANCE_TOL: f64 = 1e-10;
const SMALL_THETA: f64 = 1e-4;

/// A 2-vector in the `(v1, v2)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2(pub f64, pub f64);

impl Vec2 {
    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2(self.0 + o.0, self.1 + o.1)
    }
    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2(self.0 - o.0, self.1 - o.1)
    }
    pub fn scale(self, s: f64) -> Vec2 {
        Vec2(s * self.0, s * self.1)
    }
    pub fn norm_inf(self) -> f64 {
        self.0.abs().max(self.1.abs())
    }
}

/// A 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2(
            self.0[0][0] * v.0 + self.0[0][1] * v.1,
            self.0[1][0] * v.0 + self.0[1][1] * v.1,
        )
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// `sin(theta)/theta`, series-evaluated near zero.
fn sinc(theta: f64) -> f64 {
    if theta.abs() < SMALL_THETA {
        let t2 = theta * theta;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0
    } else {
        theta.sin() / theta
    }
}

/// `(1 - cos(theta))/theta`, series-evaluated near zero.
fn versine_over(theta: f64) -> f64 {
    if theta.abs() < SMALL_THETA {
        let t2 = theta * theta;
        theta * (0.5 - t2 / 24.0 + t2 * t2 / 720.0)
    } else {
        // 2 sin^2(theta/2) / theta avoids the 1 - cos cancellation
        let s = (0.5 * theta).sin();
        2.0 * s * s / theta
    }
}

/// Split the pressure force `gp1` (the `v1`-component of `grad(p)/rho`)
/// into a perpendicular drift and a parallel remainder.
///
/// For `b != 0` the force is exactly perpendicular to `B`, realized by the
/// drift `q = (0, gp1/b)` with `q x B = (gp1, 0)`; the parallel part is
/// zero.  For `b = 0` the force is regarded as parallel by convention:
/// `q = 0` and the remainder is the full `(gp1, 0)`.
pub fn decompose_pressure(gp1: f64, b: f64) -> (f64, Vec2) {
    if b != 0.0 {
        (gp1 / b, Vec2(0.0, 0.0))
    } else {
        (0.0, Vec2(gp1, 0.0))
    }
}

/// The action of `exp(dt * Bhat)` on the `(v1, v2)` plane, where
/// `Bhat v = v x B` and `theta = dt * b`.
pub fn rotation_matrix(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2([[c, s], [-s, c]])
}

/// Time average of the rotation over one step:
/// `M = (1/dt) * integral_0^dt exp(tau * Bhat) dtau`.
///
/// Errors when `|theta|` sits on a resonance `2*k*pi` (`k >= 1`), where `M`
/// is singular and the step size must be reduced.
pub fn averaging_matrix(theta: f64) -> Result<Mat2, SimError> {
    let k = (theta.abs() / (2.0 * std::f64::consts::PI)).round();
    if k >= 1.0 && (theta.abs() - 2.0 * k * std::f64::consts::PI).abs() < RESONANCE_TOL {
        return Err(SimError::Resonance {
            theta,
            tol: RESONANCE_TOL,
        });
    }
    let c = sinc(theta);
    let d = versine_over(theta);
    Ok(Mat2([[c, d], [-d, c]]))
}

/// Solve `M x = v` for the averaging matrix (never near-singular once the
/// resonance guard has passed).
fn solve_averaging(m: &Mat2, v: Vec2) -> Vec2 {
    let c = m.0[0][0];
    let d = m.0[0][1];
    let inv_det = 1.0 / (c * c + d * d);
    Vec2(
        (c * v.0 - d * v.1) * inv_det,
        (d * v.0 + c * v.1) * inv_det,
    )
}

/// Everything the pvb update needs at one spatial node, frozen at the
/// midpoint fields.
#[derive(Debug, Clone, Copy)]
pub struct PvbFrozenPoint {
    /// Midpoint magnetic field value.
    pub b: f64,
    /// Signed rotation angle `dt * b`.
    pub theta: f64,
    /// `v2`-component of `J/rho`, i.e. `-(dB3/dx)/rho`.
    pub jr: f64,
    /// `v1`-component of `grad(p)/rho`.
    pub gp1: f64,
    /// Perpendicular drift component (`q = (0, q2)`).
    pub q2: f64,
    /// Parallel pressure remainder (nonzero only when `b = 0`).
    pub gpar: Vec2,
}

impl PvbFrozenPoint {
    pub fn new(b: f64, dt: f64, jr: f64, gp1: f64) -> Self {
        let (q2, gpar) = decompose_pressure(gp1, b);
        PvbFrozenPoint {
            b,
            theta: dt * b,
            jr,
            gp1,
            q2,
            gpar,
        }
    }

    /// `w = J/rho` as a plane vector.
    pub fn w(&self) -> Vec2 {
        Vec2(0.0, self.jr)
    }

    pub fn q(&self) -> Vec2 {
        Vec2(0.0, self.q2)
    }
}

/// The mean velocity fixed by requiring it to equal the time average of the
/// exact velocity solution over the step:
/// `ubar = u_n + w - q + M^{-1} (-w + q - dt/2 * gpar)`.
pub fn compute_u_bar(u_n: Vec2, point: &PvbFrozenPoint, dt: f64) -> Result<Vec2, SimError> {
    let m = averaging_matrix(point.theta)?;
    let r = point.w().sub(point.q());
    let rhs = r.scale(-1.0).sub(point.gpar.scale(0.5 * dt));
    Ok(u_n.add(r).add(solve_averaging(&m, rhs)))
}

/// Number of equal shear triplets needed to keep each rotation angle within
/// `[-pi/2, pi/2]`.
pub fn rotation_subcycles(theta: f64) -> usize {
    (theta.abs() / std::f64::consts::FRAC_PI_2).ceil().max(1.0) as usize
}

/// Shear coefficients `(a, s, a)` of the planar rotation:
/// `Shear_v1(a) . Shear_v2(s) . Shear_v1(a) = rotation_matrix(theta)`
/// with `Shear_v1(a): (v1, v2) -> (v1 + a*v2, v2)` and
/// `Shear_v2(s): (v1, v2) -> (v1, v2 + s*v1)`.
///
/// The signs are fixed by that product identity: `a = tan(theta/2)`,
/// `s = -sin(theta)`.
pub fn rotation_shears(theta: f64) -> Result<(f64, f64, f64), SimError> {
    if theta.abs() > std::f64::consts::FRAC_PI_2 + 1e-12 {
        return Err(SimError::Kernel(format!(
            "rotation angle {theta} exceeds pi/2; callers must sub-cycle"
        )));
    }
    let a = (0.5 * theta).tan();
    let s = -theta.sin();
    Ok((a, s, a))
}

/// Multiply the three shears out (used by tests and self-checks).
pub fn shear_product(a: f64, s: f64) -> Mat2 {
    let s1 = Mat2([[1.0, a], [0.0, 1.0]]);
    let s2 = Mat2([[1.0, 0.0], [s, 1.0]]);
    s1.mul(&s2).mul(&s1)
}
