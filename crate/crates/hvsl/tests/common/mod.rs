//! Independent oracles shared by the integration and acceptance suites.
//! Everything here recomputes expected values by routes that do not touch
//! the library's implementation paths.

#![allow(dead_code)]

use rustfft::num_complex::Complex;

pub type C64 = Complex<f64>;

/// splitmix64: tiny deterministic RNG for reproducible random inputs.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

// ---------------------------------------------------------------------------
// dense periodic cubic-spline oracle
// ---------------------------------------------------------------------------

/// The cubic B-spline with spacing `dz`.
pub fn bspline(z: f64, dz: f64) -> f64 {
    let a = (z / dz).abs();
    if a < 1.0 {
        (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

/// Solve the cyclic collocation system `(e[i-1] + 4 e[i] + e[i+1])/6 = f[i]`
/// with dense Gaussian elimination (partial pivoting).
pub fn dense_periodic_spline_coefficients(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + (i + n - 1) % n] += 1.0 / 6.0;
        a[i * n + i] += 4.0 / 6.0;
        a[i * n + (i + 1) % n] += 1.0 / 6.0;
    }
    let mut b = samples.to_vec();
    gauss_solve(&mut a, &mut b, n);
    b
}

pub fn gauss_solve(a: &mut [f64], b: &mut [f64], n: usize) {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        assert!(d.abs() > 1e-14, "singular oracle system");
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= factor * a[col * n + c];
            }
            b[r] -= factor * b[col];
        }
    }
    for i in 0..n {
        b[i] /= a[i * n + i];
    }
}

/// Brute-force periodic spline evaluation: sum every coefficient times the
/// B-spline with periodic images.
pub fn dense_spline_evaluate(coeffs: &[f64], dz: f64, z0: f64, z: f64) -> f64 {
    let n = coeffs.len();
    let period = n as f64 * dz;
    let mut acc = 0.0;
    for (j, &e) in coeffs.iter().enumerate() {
        let zj = z0 + j as f64 * dz;
        for img in -1..=1 {
            acc += e * bspline(z - zj - img as f64 * period, dz);
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// small matrix oracles
// ---------------------------------------------------------------------------

pub type M2 = [[f64; 2]; 2];

pub fn mat_mul(a: &M2, b: &M2) -> M2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn mat_max_diff(a: &M2, b: &M2) -> f64 {
    let mut m = 0.0_f64;
    for r in 0..2 {
        for c in 0..2 {
            m = m.max((a[r][c] - b[r][c]).abs());
        }
    }
    m
}

/// Matrix exponential of `[[0, theta], [-theta, 0]]` by scaling and
/// squaring with a Taylor series.
pub fn expm_rotation_generator(theta: f64) -> M2 {
    let mut k = 0u32;
    let mut t = theta;
    while t.abs() > 0.5 {
        t *= 0.5;
        k += 1;
    }
    let a: M2 = [[0.0, t], [-t, 0.0]];
    let mut term: M2 = [[1.0, 0.0], [0.0, 1.0]];
    let mut sum = term;
    for j in 1..=24 {
        term = mat_mul(&term, &a);
        for r in 0..2 {
            for c in 0..2 {
                term[r][c] /= j as f64;
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                sum[r][c] += term[r][c];
            }
        }
    }
    for _ in 0..k {
        sum = mat_mul(&sum, &sum);
    }
    sum
}

/// `(1/theta) * integral_0^theta R(s) ds` by composite Simpson.
pub fn simpson_rotation_average(theta: f64, panels: usize) -> M2 {
    assert!(panels % 2 == 0);
    let h = theta / panels as f64;
    let rot = |s: f64| -> M2 {
        let (sn, cs) = s.sin_cos();
        [[cs, sn], [-sn, cs]]
    };
    let mut acc = [[0.0; 2]; 2];
    for j in 0..=panels {
        let w = if j == 0 || j == panels {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let r = rot(j as f64 * h);
        for row in 0..2 {
            for col in 0..2 {
                acc[row][col] += w * r[row][col];
            }
        }
    }
    let scale = h / 3.0 / theta;
    for row in 0..2 {
        for col in 0..2 {
            acc[row][col] *= scale;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// mean-velocity ODE fixed-point oracle
// ---------------------------------------------------------------------------

/// Integrate `u' = Bhat (u - ubar + w) - gp` over `[0, dt]` with RK4 and
/// return the Simpson time average; `Bhat (x, y) = (b y, -b x)`,
/// `w = (0, jr)`, `gp = (gp1, 0)`.
fn ode_average(b: f64, jr: f64, gp1: f64, u0: (f64, f64), ubar: (f64, f64), dt: f64) -> (f64, f64) {
    let rhs = |u: (f64, f64)| -> (f64, f64) {
        let sx = u.0 - ubar.0;
        let sy = u.1 - ubar.1 + jr;
        (b * sy - gp1, -b * sx)
    };
    let steps = 4000usize;
    let h = dt / steps as f64;
    let mut u = u0;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(u);
    for _ in 0..steps {
        let k1 = rhs(u);
        let k2 = rhs((u.0 + 0.5 * h * k1.0, u.1 + 0.5 * h * k1.1));
        let k3 = rhs((u.0 + 0.5 * h * k2.0, u.1 + 0.5 * h * k2.1));
        let k4 = rhs((u.0 + h * k3.0, u.1 + h * k3.1));
        u = (
            u.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            u.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        );
        samples.push(u);
    }
    // composite Simpson over the stored trajectory
    let mut acc = (0.0, 0.0);
    for (j, s) in samples.iter().enumerate() {
        let w = if j == 0 || j == steps {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.0 += w * s.0;
        acc.1 += w * s.1;
    }
    (acc.0 * h / 3.0 / dt, acc.1 * h / 3.0 / dt)
}

/// Solve `ubar = time-average of u(t; ubar)` by fixed-point iteration on
/// the numerically integrated trajectory.
pub fn ode_u_bar_fixed_point(b: f64, jr: f64, gp1: f64, u0: (f64, f64), dt: f64) -> (f64, f64) {
    let mut ubar = u0;
    for _ in 0..500 {
        let next = ode_average(b, jr, gp1, u0, ubar, dt);
        let delta = (next.0 - ubar.0).abs().max((next.1 - ubar.1).abs());
        ubar = next;
        if delta <= 1e-14 {
            return ubar;
        }
    }
    panic!("u_bar fixed-point oracle failed to converge (b={b}, dt={dt})");
}

// ---------------------------------------------------------------------------
// linear Landau-damping oracle
// ---------------------------------------------------------------------------

/// Plasma dispersion function by quadrature along the real axis with the
/// Landau-contour continuation below it.
pub fn plasma_z(zeta: C64) -> C64 {
    let l = 8.0 + zeta.re.abs();
    let panels = 400_000usize;
    let h = 2.0 * l / panels as f64;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..=panels {
        let w = if j == 0 || j == panels {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let t = -l + j as f64 * h;
        acc += C64::new(w * (-t * t).exp(), 0.0) / (C64::new(t, 0.0) - zeta);
    }
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut z = acc * (h / 3.0) / sqrt_pi;
    if zeta.im < 0.0 {
        z += C64::new(0.0, 2.0 * sqrt_pi) * (-zeta * zeta).exp();
    } else if zeta.im == 0.0 {
        z += C64::new(0.0, sqrt_pi) * (-zeta * zeta).exp();
    }
    z
}

fn z_prime(zeta: C64) -> C64 {
    -(C64::new(2.0, 0.0)) * (C64::new(1.0, 0.0) + zeta * plasma_z(zeta))
}

/// Least-damped root of the massless-electron ion-acoustic dispersion
/// relation `Z'(zeta) = vt^2 / kappa_eff`; returns the complex frequency
/// `omega = zeta * k * vt` (Im < 0 for damping).
pub fn ion_acoustic_omega(kappa_eff: f64, vt: f64, k: f64) -> C64 {
    let target = C64::new(vt * vt / kappa_eff, 0.0);
    let f = |z: C64| z_prime(z) - target;
    // fluid guess: zeta ~ sqrt(kappa/vt^2 + 3/2), weakly damped
    let guess = (kappa_eff / (vt * vt) + 1.5).sqrt();
    let mut z0 = C64::new(guess, -0.02);
    let mut z1 = C64::new(guess * 1.02, -0.1);
    let mut f0 = f(z0);
    let mut f1 = f(z1);
    for _ in 0..80 {
        let dz = z1 - z0;
        let df = f1 - f0;
        assert!(df.norm() > 0.0, "secant stalled");
        let z2 = z1 - f1 * dz / df;
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = f(z1);
        if (z1 - z0).norm() <= 1e-12 && f1.norm() <= 1e-9 {
            assert!(z1.im < 0.0, "found a growing root: {z1}");
            return z1 * k * vt;
        }
    }
    panic!("dispersion root search did not converge (last {z1}, residual {})", f1.norm());
}

// ---------------------------------------------------------------------------
// misc
// ---------------------------------------------------------------------------

/// A random band-limited periodic signal and its exact derivative.
pub fn random_band_limited(
    rng: &mut Rng,
    n: usize,
    length: f64,
    max_mode: usize,
) -> (Vec<f64>, Vec<f64>) {
    let k0 = 2.0 * std::f64::consts::PI / length;
    let modes: Vec<(f64, f64, f64)> = (1..=max_mode)
        .map(|m| (m as f64 * k0, rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)))
        .collect();
    let mut vals = vec![0.0; n];
    let mut derivs = vec![0.0; n];
    for i in 0..n {
        let x = i as f64 * length / n as f64;
        for &(k, a, b) in &modes {
            vals[i] += a * (k * x).cos() + b * (k * x).sin();
            derivs[i] += -a * k * (k * x).sin() + b * k * (k * x).cos();
        }
    }
    (vals, derivs)
}

/// Smooth random line compactly supported in the middle of the domain.
pub fn random_compact_line(rng: &mut Rng, n: usize) -> Vec<f64> {
    let mut line = vec![0.0; n];
    let lo = n / 4;
    let hi = 3 * n / 4;
    let width = (hi - lo) as f64;
    let c1 = rng.range(1.0, 3.0);
    let c2 = rng.range(-2.0, 2.0);
    let c3 = rng.range(0.0, std::f64::consts::PI);
    for (j, v) in line.iter_mut().enumerate().take(hi).skip(lo) {
        let s = (j - lo) as f64 / width; // in [0, 1)
        let bump = (s * (1.0 - s)).powi(2) * 16.0;
        *v = bump * (c1 + c2 * (3.0 * s * std::f64::consts::PI + c3).sin());
    }
    line
}

pub fn sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

pub fn weighted_sum(values: &[f64], weights: impl Fn(usize) -> f64) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| weights(i) * v)
        .sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
