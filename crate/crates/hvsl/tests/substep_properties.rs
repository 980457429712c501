//! Conservation and structure properties of the two substeps on realistic
//! states.

mod common;

use hvsl::config::parse_config;
use hvsl::diagnostics::conserved_quantities;
use hvsl::integrator::{initial_state, stepper_for};
use hvsl::interp::AdvectionBackend;
use hvsl::state::compute_moments;

fn small_convergence_cfg() -> hvsl::RunConfig {
    parse_config(
        "initial.preset = convergence\n\
         grid.m1 = 8\n\
         grid.n1 = 64\n\
         grid.n2 = 64\n",
    )
    .unwrap()
}

#[test]
fn pvb_step_conserves_mass_momentum_energy() {
    let cfg = small_convergence_cfg();
    let (grid, mut state) = initial_state(&cfg).unwrap();
    let mut stepper = stepper_for(&cfg, grid).unwrap();

    let before = conserved_quantities(&state.f, &state.fields, 0.0);
    let res = stepper
        .pvb_step(&mut state.f, &mut state.fields, 0.05)
        .unwrap();
    assert!(res.picard_residual <= 1e-14);
    let after = conserved_quantities(&state.f, &state.fields, 0.05);

    let mass_scale = before.mass.abs();
    assert!(
        (after.mass - before.mass).abs() <= 1e-12 * mass_scale,
        "mass drift {:e}",
        (after.mass - before.mass) / mass_scale
    );
    let p_scale = mass_scale * 0.4; // mass * vt
    assert!(
        (after.momentum1 - before.momentum1).abs() <= 1e-12 * p_scale,
        "momentum1 drift {:e}",
        after.momentum1 - before.momentum1
    );
    assert!(
        (after.momentum2 - before.momentum2).abs() <= 1e-12 * p_scale,
        "momentum2 drift {:e}",
        after.momentum2 - before.momentum2
    );
    let e_scale = before.energy_total.abs();
    let e_tol = (1e-11 * e_scale).max(10.0 * 1e-14 * cfg.grid.m1 as f64);
    assert!(
        (after.energy_total - before.energy_total).abs() <= e_tol,
        "energy drift {:e} (tol {:e})",
        after.energy_total - before.energy_total,
        e_tol
    );
    // B3 stays a pure function of x1 by construction; its mean is also
    // preserved because the update is a spectral derivative
    let b_mean_before: f64 = 1.0;
    let b_mean_after: f64 =
        state.fields.b3.iter().sum::<f64>() / state.fields.b3.len() as f64;
    assert!((b_mean_after - b_mean_before).abs() <= 1e-13);
}

#[test]
fn pvb_cancellation_uniform_fields_keep_u_fixed() {
    // uniform p and B3 with a drifting Maxwellian: no per-point self-force
    let cfg = parse_config(
        "initial.preset = convergence\n\
         grid.m1 = 4\n\
         grid.n1 = 64\n\
         grid.n2 = 64\n\
         grid.v1_min = -3.0\n\
         grid.v1_max = 3.0\n\
         grid.v2_min = -3.0\n\
         grid.v2_max = 3.0\n\
         physics.closure = isothermal\n\
         physics.gamma = 1.0\n\
         initial.rho_amp = 0.0\n\
         initial.b3_amp = 0.0\n",
    )
    .unwrap();
    let (grid, mut state) = initial_state(&cfg).unwrap();
    let mut stepper = stepper_for(&cfg, grid.clone()).unwrap();
    let m0 = compute_moments(&state.f).unwrap();
    for _ in 0..5 {
        stepper
            .pvb_step(&mut state.f, &mut state.fields, 0.05)
            .unwrap();
    }
    let m1 = compute_moments(&state.f).unwrap();
    for i in 0..grid.m1 {
        assert!(
            (m1.u1[i] - m0.u1[i]).abs() <= 1e-12,
            "u1[{i}] moved by {:e}",
            m1.u1[i] - m0.u1[i]
        );
        assert!(
            (m1.u2[i] - m0.u2[i]).abs() <= 1e-12,
            "u2[{i}] moved by {:e}",
            m1.u2[i] - m0.u2[i]
        );
    }
}

#[test]
fn picard_iteration_count_does_not_grow_when_dt_halves() {
    for preset in ["landau_pressure", "bernstein_pressure"] {
        let cfg = parse_config(&format!(
            "initial.preset = {preset}\n\
             grid.m1 = 16\n\
             grid.n1 = 48\n\
             grid.n2 = 48\n"
        ))
        .unwrap();
        let (grid, state0) = initial_state(&cfg).unwrap();
        let mut stepper = stepper_for(&cfg, grid).unwrap();
        let dt = cfg.numerics.dt;

        let mut state = hvsl::integrator::SimState {
            f: state0.f.clone(),
            fields: state0.fields.clone(),
            time: 0.0,
        };
        let full = stepper
            .pvb_step(&mut state.f, &mut state.fields, dt)
            .unwrap();

        let mut state = hvsl::integrator::SimState {
            f: state0.f.clone(),
            fields: state0.fields.clone(),
            time: 0.0,
        };
        let half = stepper
            .pvb_step(&mut state.f, &mut state.fields, 0.5 * dt)
            .unwrap();
        assert!(
            half.picard_iterations <= full.picard_iterations,
            "{preset}: {} iters at dt/2 vs {} at dt",
            half.picard_iterations,
            full.picard_iterations
        );
    }
}

#[test]
fn bernstein_first_step_converges_quickly() {
    let cfg = parse_config("initial.preset = bernstein_isothermal\n").unwrap();
    let (grid, mut state) = initial_state(&cfg).unwrap();
    let mut stepper = stepper_for(&cfg, grid).unwrap();
    let res = stepper
        .pvb_step(&mut state.f, &mut state.fields, cfg.numerics.dt)
        .unwrap();
    assert!(res.picard_residual <= 1e-14);
    assert!(
        res.picard_iterations <= 50,
        "{} picard iterations",
        res.picard_iterations
    );
}

#[test]
fn xv_step_conserves_all_invariants_with_both_backends() {
    for backend in [AdvectionBackend::Spectral, AdvectionBackend::Spline] {
        let mut cfg = small_convergence_cfg();
        cfg.numerics.space_backend = backend;
        let (_grid, mut state) = initial_state(&cfg).unwrap();
        let mut stepper = stepper_for(&cfg, _grid).unwrap();
        let before = conserved_quantities(&state.f, &state.fields, 0.0);
        stepper.xv_step(&mut state.f, 0.1);
        let after = conserved_quantities(&state.f, &state.fields, 0.1);
        for (name, a, b, scale) in [
            ("mass", after.mass, before.mass, before.mass.abs()),
            ("p1", after.momentum1, before.momentum1, before.mass.abs()),
            ("p2", after.momentum2, before.momentum2, before.mass.abs()),
            (
                "kinetic",
                after.energy_kinetic,
                before.energy_kinetic,
                before.energy_kinetic.abs(),
            ),
        ] {
            assert!(
                (a - b).abs() <= 1e-12 * scale.max(1e-30),
                "{backend:?} {name} drift {:e}",
                a - b
            );
        }
    }
}
