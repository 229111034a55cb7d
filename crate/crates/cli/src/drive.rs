//! Executes a parsed configuration and writes the run artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use elmfem::adaptivity::{advance, AdaptMode, AdaptState, EventKind};
use elmfem::benchmarks::{by_name, convergence_study};
use elmfem::characteristics::{flow_jacobian_det, trace_feet, TraceOptions};
use elmfem::estimators::CSV_HEADER;
use elmfem::io::{write_mesh_snapshot, write_solution_snapshot};
use thiserror::Error;

use crate::config::{ConfigError, Mode, RunConfig};

/// Environment variable overriding the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "ELMFEM_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver: {0}")]
    Solver(#[from] elmfem::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub steps: usize,
    pub final_error: Option<f64>,
    pub dof_steps: usize,
    pub grows: usize,
    pub rejects: usize,
    pub output_dir: PathBuf,
}

pub fn output_dir(config: &RunConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => config.output_dir.clone(),
    }
}

/// Runs the configured job and writes its artifacts. The `mode_override`
/// comes from the CLI subcommand (`study`, `trace`).
pub fn execute(config: &RunConfig, mode_override: Option<Mode>) -> Result<RunSummary, CliError> {
    let mode = mode_override.unwrap_or(config.mode);
    let dir = output_dir(config);
    fs::create_dir_all(&dir)?;
    match mode {
        Mode::Convergence => run_study(config, &dir),
        Mode::TraceDiagnostics => run_trace(config, &dir),
        Mode::Adaptive | Mode::Uniform | Mode::Algorithm1Only => run_solver(config, mode, &dir),
    }
}

fn problem_for(config: &RunConfig) -> Result<elmfem::BenchmarkProblem64, CliError> {
    by_name(&config.benchmark, config.epsilon).ok_or_else(|| {
        CliError::Config(ConfigError::Validation {
            field: "benchmark".into(),
            reason: format!("unknown '{}'", config.benchmark),
        })
    })
}

fn run_solver(config: &RunConfig, mode: Mode, dir: &Path) -> Result<RunSummary, CliError> {
    let problem = problem_for(config)?;
    let tol = config.tolerances();
    let adapt_mode = match mode {
        Mode::Adaptive => AdaptMode::FullyAdaptive,
        Mode::Algorithm1Only => AdaptMode::TimeOnly,
        _ => AdaptMode::Uniform,
    };
    let mesh0 = std::sync::Arc::new(problem.initial_mesh(config.resolution));
    let mut state = AdaptState::new(&problem, mesh0, &tol);

    let snapshot = |state: &AdaptState<f64>| -> Result<(), CliError> {
        let tag = format!("{:05}", state.n);
        let ext = if problem.dim == 1 { "dat" } else { "vtk" };
        let mut f = fs::File::create(dir.join(format!("solution_{tag}.{ext}")))?;
        write_solution_snapshot(&state.u, "u", &mut f)?;
        let mut f = fs::File::create(dir.join(format!("mesh_{tag}.{ext}")))?;
        write_mesh_snapshot(&state.mesh, &mut f)?;
        Ok(())
    };

    if config.snapshot_every > 0 {
        snapshot(&state)?;
    }
    while !state.finished(&tol) {
        advance(&mut state, &problem, &tol, adapt_mode)?;
        if config.snapshot_every > 0 && state.n % config.snapshot_every == 0 {
            snapshot(&state)?;
        }
    }

    let mut csv = fs::File::create(dir.join("steps.csv"))?;
    writeln!(csv, "{CSV_HEADER}")?;
    for rec in &state.history {
        writeln!(csv, "{}", rec.csv_row())?;
    }

    let mut log = fs::File::create(dir.join("events.log"))?;
    for ev in &state.events {
        let kind = match ev.kind {
            EventKind::Reject => "reject",
            EventKind::Grow => "grow",
            EventKind::Refine => "refine",
            EventKind::Coarsen => "coarsen",
            EventKind::RefineLoopCap => "refine-loop-cap",
        };
        writeln!(
            log,
            "step={} t={:.12e} k={:.12e} event={kind} {}",
            ev.step, ev.t, ev.k, ev.detail
        )?;
    }

    let final_error = state.history.last().and_then(|r| r.l2_error);
    let mut summary = fs::File::create(dir.join("summary.txt"))?;
    writeln!(summary, "benchmark: {}", problem.name)?;
    writeln!(summary, "mode: {mode:?}")?;
    writeln!(summary, "epsilon: {:.3e}", config.epsilon)?;
    writeln!(summary, "final time: {:.12e}", state.t_n)?;
    writeln!(summary, "accepted steps: {}", state.n)?;
    writeln!(summary, "total dof-steps: {}", state.dof_steps)?;
    match final_error {
        Some(e) => writeln!(summary, "final L2 error: {e:.6e}")?,
        None => writeln!(summary, "final L2 error: n/a")?,
    }
    writeln!(summary, "bound accumulator: {:.6e}", state.bound_accumulator)?;
    writeln!(
        summary,
        "events: rejects={} grows={} refines={} coarsens={} refine_loop_caps={}",
        state.counters.rejects,
        state.counters.grows,
        state.counters.refines,
        state.counters.coarsens,
        state.counters.refine_loop_caps
    )?;

    Ok(RunSummary {
        steps: state.n,
        final_error,
        dof_steps: state.dof_steps,
        grows: state.counters.grows,
        rejects: state.counters.rejects,
        output_dir: dir.to_path_buf(),
    })
}

fn run_study(config: &RunConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let problem = problem_for(config)?;
    let study = convergence_study(
        &problem,
        &config.study_ks,
        config.resolution,
        config.t_final,
    )?;

    let mut csv = fs::File::create(dir.join("study.csv"))?;
    writeln!(csv, "k,error,order,bound_error_sq")?;
    for row in &study.rows {
        let order = row
            .order
            .map(|o| format!("{o:.6}"))
            .unwrap_or_default();
        writeln!(
            csv,
            "{:.12e},{:.12e},{order},{:.12e}",
            row.k, row.error, row.bound_error_sq
        )?;
    }

    let mut table = String::new();
    table.push_str(&format!(
        "convergence study: {} (eps = {:.3e}, T = {}, resolution = {})\n",
        problem.name, config.epsilon, config.t_final, config.resolution
    ));
    table.push_str(&format!("||F(u0)|| = {:.6e}\n", study.f_u0_norm));
    table.push_str(&format!(
        "spatial check at largest k: e(h) = {:.3e}, e(h/2) = {:.3e}, subordinate: {}\n",
        study.spatial_check.0, study.spatial_check.1, study.spatial_ok
    ));
    table.push_str(&format!(
        "{:>12} {:>14} {:>8} {:>14}\n",
        "k", "max L2 error", "order", "a priori bound"
    ));
    for row in &study.rows {
        let order = row.order.map(|o| format!("{o:.2}")).unwrap_or_else(|| "-".into());
        table.push_str(&format!(
            "{:>12.5e} {:>14.6e} {:>8} {:>14.6e}\n",
            row.k,
            row.error,
            order,
            row.bound_error_sq.sqrt()
        ));
    }
    print!("{table}");
    fs::write(dir.join("summary.txt"), &table)?;

    Ok(RunSummary {
        steps: study.rows.len(),
        final_error: study.rows.last().map(|r| r.error),
        output_dir: dir.to_path_buf(),
        ..RunSummary::default()
    })
}

fn run_trace(config: &RunConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let problem = problem_for(config)?;
    let (lo, hi) = problem.domain;
    // Interior sample grid.
    let mut samples: Vec<[f64; 3]> = Vec::new();
    let n = if problem.dim == 1 { 9 } else { 5 };
    for i in 1..=n {
        let x = lo[0] + (hi[0] - lo[0]) * i as f64 / (n + 1) as f64;
        if problem.dim == 1 {
            samples.push([x, 0.0, 0.0]);
        } else {
            for j in 1..=n {
                let y = lo[1] + (hi[1] - lo[1]) * j as f64 / (n + 1) as f64;
                samples.push([x, y, 0.0]);
            }
        }
    }

    let mut csv = fs::File::create(dir.join("trace.csv"))?;
    writeln!(csv, "k,max_abs_det_minus_one,mean_iterations,clamped_count")?;
    let opts = TraceOptions {
        clamp_box: Some((lo, hi)),
        ..TraceOptions::default()
    };
    for &k in &config.trace_ks {
        let mut worst = 0.0f64;
        for &p in &samples {
            let det = flow_jacobian_det(&problem.velocity, p, config.t_final, k, &opts)?;
            worst = worst.max((det - 1.0).abs());
        }
        let trace = trace_feet(&problem.velocity, &samples, config.t_final, k, &opts)?;
        writeln!(
            csv,
            "{:.12e},{:.12e},{:.3},{}",
            k,
            worst,
            trace.mean_iterations(),
            trace.clamped_count
        )?;
    }

    Ok(RunSummary {
        steps: config.trace_ks.len(),
        output_dir: dir.to_path_buf(),
        ..RunSummary::default()
    })
}
