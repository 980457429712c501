use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hvsl::config::{parse_config, RunConfig};
use hvsl::diagnostics::{column_peaks, extract_branch_ridges, spacetime_spectrum};
use hvsl::error::SimError;
use hvsl::integrator::{convergence_table, reversibility_errors, run};
use hvsl::output;

/// Semi-Lagrangian solver for a 1D-2V hybrid plasma model (kinetic ions,
/// massless electrons).
#[derive(Parser)]
#[command(name = "hvsl", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment described by a config file and write its artifacts.
    Run {
        config: PathBuf,
        /// Override output.dir.
        #[arg(long)]
        out: Option<String>,
    },
    /// Time-accuracy study: l1 errors and observed orders against a
    /// fine-step reference run.
    Convergence {
        config: PathBuf,
        /// Comma-separated step sizes, largest first.
        #[arg(long, value_delimiter = ',', required = true)]
        dts: Vec<f64>,
        #[arg(long, default_value_t = 0.001)]
        ref_dt: f64,
        /// Enforce [order_min, order_max] on the observed orders of the row
        /// with this step size (exit 4 on violation).
        #[arg(long)]
        check_dt: Option<f64>,
        #[arg(long, default_value_t = 1.85)]
        order_min: f64,
        #[arg(long, default_value_t = 2.1)]
        order_max: f64,
        /// Require the errors to decrease monotonically in dt (exit 4).
        #[arg(long)]
        require_monotone: bool,
    },
    /// Run n steps forward then n steps backward and report the l1 return
    /// errors of (f, B3, p).
    Reversibility {
        config: PathBuf,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long)]
        max_f_err: Option<f64>,
        #[arg(long)]
        max_b3_err: Option<f64>,
        #[arg(long)]
        max_p_err: Option<f64>,
    },
    /// Space-time spectrum and dispersion ridges of a finished run.
    Dispersion {
        run_dir: PathBuf,
        /// Check that the lowest branches flatten toward these many
        /// cyclotron harmonics (exit 4 on violation).
        #[arg(long)]
        harmonics: Option<usize>,
        #[arg(long, default_value_t = 0.15)]
        rtol: f64,
        /// Peak floor relative to the spectrum maximum.
        #[arg(long, default_value_t = 1e-6)]
        floor: f64,
    },
}

fn load_config(path: &Path) -> Result<RunConfig, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::io(path.display().to_string(), e))?;
    parse_config(&text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, SimError> {
    match cli.cmd {
        Cmd::Run { config, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(dir) = out {
                cfg.output.dir = Some(dir);
            }
            match run(&cfg) {
                Ok(artifacts) => {
                    let s = &artifacts.summary;
                    println!(
                        "steps = {}, max picard iters = {}, mass drift = {:.3e}, energy drift = {:.3e}",
                        s.steps, s.max_picard_iters, s.max_mass_drift_rel, s.max_energy_drift_rel
                    );
                    if cfg.output.dir.is_some() {
                        let dir = output::write_artifacts(&cfg, &artifacts)?;
                        println!("artifacts written to {}", dir.display());
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    // persist what we know about the failure when possible
                    if let Some(dir) = output::effective_output_dir(&cfg) {
                        if std::fs::create_dir_all(&dir).is_ok() {
                            let _ = std::fs::write(
                                dir.join("summary.txt"),
                                format!("status = failed: {e}\n"),
                            );
                        }
                    }
                    Err(e)
                }
            }
        }
        Cmd::Convergence {
            config,
            dts,
            ref_dt,
            check_dt,
            order_min,
            order_max,
            require_monotone,
        } => {
            let cfg = load_config(&config)?;
            let rows = convergence_table(&cfg, &dts, ref_dt)?;
            println!("dt,err_f,order_f,err_b3,order_b3,err_p,order_p");
            let fmt_ord = |o: Option<f64>| o.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
            for r in &rows {
                println!(
                    "{},{:.6e},{},{:.6e},{},{:.6e},{}",
                    r.dt,
                    r.err_f,
                    fmt_ord(r.order_f),
                    r.err_b3,
                    fmt_ord(r.order_b3),
                    r.err_p,
                    fmt_ord(r.order_p),
                );
            }
            let mut ok = true;
            if require_monotone {
                for w in rows.windows(2) {
                    if !(w[1].err_f < w[0].err_f
                        && w[1].err_b3 < w[0].err_b3
                        && w[1].err_p < w[0].err_p)
                    {
                        eprintln!("monotonicity violated between dt = {} and {}", w[0].dt, w[1].dt);
                        ok = false;
                    }
                }
            }
            if let Some(target) = check_dt {
                let row = rows
                    .iter()
                    .find(|r| (r.dt - target).abs() <= 1e-12 * target.abs().max(1.0))
                    .ok_or_else(|| SimError::config("--check-dt", "step size not in --dts"))?;
                for (name, order) in [
                    ("f", row.order_f),
                    ("B3", row.order_b3),
                    ("p", row.order_p),
                ] {
                    match order {
                        Some(o) if (order_min..=order_max).contains(&o) => {}
                        Some(o) => {
                            eprintln!(
                                "order of {name} at dt = {target} is {o:.3}, outside [{order_min}, {order_max}]"
                            );
                            ok = false;
                        }
                        None => {
                            eprintln!("no order available at dt = {target} (first row)");
                            ok = false;
                        }
                    }
                }
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
        Cmd::Reversibility {
            config,
            steps,
            max_f_err,
            max_b3_err,
            max_p_err,
        } => {
            let cfg = load_config(&config)?;
            let rep = reversibility_errors(&cfg, steps)?;
            println!(
                "err_f = {:.6e}, err_b3 = {:.6e}, err_p = {:.6e}",
                rep.err_f, rep.err_b3, rep.err_p
            );
            let mut ok = true;
            for (name, err, bound) in [
                ("f", rep.err_f, max_f_err),
                ("B3", rep.err_b3, max_b3_err),
                ("p", rep.err_p, max_p_err),
            ] {
                if let Some(b) = bound {
                    if err > b {
                        eprintln!("{name} return error {err:.3e} exceeds bound {b:.3e}");
                        ok = false;
                    }
                }
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
        Cmd::Dispersion {
            run_dir,
            harmonics,
            rtol,
            floor,
        } => {
            let cfg = load_config(&run_dir.join("config.txt"))?;
            let hist = output::read_snapshot(&run_dir.join("b3_history.hvsl"))?;
            let (t, m1, _) = hist.dims;
            let rows: Vec<Vec<f64>> = hist.data.chunks_exact(m1).map(|c| c.to_vec()).collect();
            let times: Vec<f64> = (0..t).map(|j| j as f64 * cfg.output.cadence).collect();
            let spec = spacetime_spectrum(&rows, &times, cfg.grid.lx)?;
            let q = spec.quadrant();
            output::write_spectrum(&run_dir.join("spectrum.hvsl"), &q, cfg.numerics.t_final)?;

            let branches = extract_branch_ridges(&q, floor)?;
            let mut ridge_csv = String::from("branch,k,omega,power\n");
            for (bi, branch) in branches.iter().enumerate() {
                for p in branch {
                    ridge_csv.push_str(&format!("{bi},{},{},{:e}\n", p.k, p.omega, p.power));
                }
            }
            std::fs::write(run_dir.join("ridges.csv"), ridge_csv)
                .map_err(|e| SimError::io(run_dir.display().to_string(), e))?;
            println!("{} branches above floor {floor:e}", branches.len());

            if let Some(n) = harmonics {
                let omega_c = cfg.initial.b3_base.abs();
                if omega_c == 0.0 {
                    return Err(SimError::Diagnostics(
                        "harmonic check needs a nonzero background field".into(),
                    ));
                }
                let abs_floor = floor * q.max_power();
                // the largest k column still showing at least n peaks
                let mut checked = false;
                let mut ok = true;
                for ik in (0..q.k.len()).rev() {
                    let peaks = column_peaks(&q, ik, abs_floor);
                    if peaks.len() < n {
                        continue;
                    }
                    checked = true;
                    for (h, p) in peaks.iter().take(n).enumerate() {
                        let target = (h + 1) as f64 * omega_c;
                        let dev = (p.omega - target).abs() / target;
                        println!(
                            "k = {:.3}: branch {} ridge omega = {:.4}, target {:.4}, deviation {:.1}%",
                            p.k,
                            h + 1,
                            p.omega,
                            target,
                            100.0 * dev
                        );
                        if dev > rtol {
                            eprintln!("branch {} deviates more than {:.0}%", h + 1, 100.0 * rtol);
                            ok = false;
                        }
                    }
                    break;
                }
                if !checked {
                    eprintln!("no k column holds {n} peaks above the floor");
                    ok = false;
                }
                return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(4) });
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
