//! The four subcommands. Each validates everything it can before creating
//! the output directory, so a bad config leaves nothing behind.

use crate::artifacts::{self, Summary, TestSummary, TrainSummary};
use crate::config::Resolved;
use crate::reference::{self, Comparison};
use crate::{CliResult, ExitKind, Failure};
use anyhow::anyhow;
use slc_core::dynamics::ControlField;
use slc_core::experiments::ExperimentSpec;
use slc_core::slc::{AugmentedSystem, TestReport, TrainRecord};
use std::path::Path;
use std::time::Instant;

pub const PROGRESS_EVERY: usize = 100;

fn system(spec: &ExperimentSpec) -> CliResult<AugmentedSystem> {
    spec.augmented_system().map_err(Failure::config)
}

fn run_training(
    spec: &ExperimentSpec,
    dir: &Path,
    quiet: bool,
) -> CliResult<(TrainRecord, TrainSummary)> {
    let sys = system(spec)?;
    let u0 = spec.initial_controls().map_err(Failure::config)?;
    let start = Instant::now();
    let record = sys
        .train_observed(&u0, &spec.train, |p| {
            if !quiet && p.iteration % PROGRESS_EVERY == 0 {
                eprintln!("iter {:>6}  J_N {:.10}  eta {}", p.iteration, p.cost, p.eta);
            }
        })
        .map_err(Failure::compute)?;
    let summary = TrainSummary {
        final_j: record.final_cost(),
        iterations: record.iterations,
        termination: record.terminated_by,
        eta_halvings: record.eta_halvings,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    artifacts::write_training(dir, &record)?;
    artifacts::write_controls(dir, &record.final_controls)?;
    Ok((record, summary))
}

fn run_testing(
    spec: &ExperimentSpec,
    seed: u64,
    u: &ControlField,
    dir: &Path,
) -> CliResult<(TestReport, TestSummary)> {
    let sys = system(spec)?;
    let samples = spec.test_samples(seed).map_err(Failure::config)?;
    let report = sys.test(u, &samples).map_err(Failure::compute)?;
    artifacts::write_test_samples(dir, &samples, &report)?;
    artifacts::write_histogram(dir, &report.histogram)?;
    let summary = TestSummary::of(&report);
    Ok((report, summary))
}

fn start_run(run: &Resolved, dir: &Path) -> CliResult<()> {
    artifacts::create_dir(dir)?;
    artifacts::write_json(dir, artifacts::CONFIG_FILE, &run.snapshot())
}

pub fn train(run: &Resolved, dir: &Path, quiet: bool) -> CliResult<Summary> {
    start_run(run, dir)?;
    let (_, train) = run_training(&run.spec, dir, quiet)?;
    let summary = Summary {
        experiment: run.spec.id,
        seed: run.seed,
        train: Some(train),
        test: None,
    };
    artifacts::write_json(dir, artifacts::SUMMARY_FILE, &summary)?;
    Ok(summary)
}

pub fn test(run: &Resolved, controls: &Path, dir: &Path) -> CliResult<Summary> {
    let spec = &run.spec;
    let values = artifacts::read_controls(controls, spec.grid, spec.model.num_controls())?;
    let u = ControlField::new(spec.grid, values, spec.bounds.clone()).map_err(Failure::config)?;
    start_run(run, dir)?;
    let (_, test) = run_testing(spec, run.seed, &u, dir)?;
    let summary = Summary {
        experiment: spec.id,
        seed: run.seed,
        train: None,
        test: Some(test),
    };
    artifacts::write_json(dir, artifacts::SUMMARY_FILE, &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub summary: Summary,
    pub comparison: Vec<Comparison>,
    pub record: TrainRecord,
    pub report: TestReport,
}

/// Train then test with the experiment's own settings, and compare against
/// the published figures.
pub fn reproduce(run: &Resolved, dir: &Path, quiet: bool) -> CliResult<Reproduction> {
    start_run(run, dir)?;
    let (record, train) = run_training(&run.spec, dir, quiet)?;
    let (report, test) = run_testing(&run.spec, run.seed, &record.final_controls, dir)?;
    let summary = Summary {
        experiment: run.spec.id,
        seed: run.seed,
        train: Some(train),
        test: Some(test),
    };
    artifacts::write_json(dir, artifacts::SUMMARY_FILE, &summary)?;
    let comparison = reference::compare(&summary);
    artifacts::write_comparison(dir, &comparison)?;
    Ok(Reproduction {
        summary,
        comparison,
        record,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckOptions {
    pub intervals: usize,
    pub step: f64,
    pub tolerance: f64,
    /// Negates the analytic gradient; exists to prove the check can fail.
    pub flip_sign: bool,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            intervals: 10,
            step: 1e-6,
            tolerance: 1e-3,
            flip_sign: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    /// `‖g·dt - fd‖ / ‖fd‖`, or the absolute error when `fd` vanishes.
    pub error: f64,
    pub max_abs_error: f64,
    pub fd_norm: f64,
    pub passed: bool,
}

/// Central differences of `J_N` against the analytic gradient at the
/// initial controls, bounds lifted so every probe is admissible.
pub fn gradcheck_report(
    spec: &ExperimentSpec,
    opts: GradcheckOptions,
) -> CliResult<GradcheckReport> {
    let spec = spec
        .clone()
        .with_intervals(opts.intervals)
        .map_err(Failure::config)?;
    let sys = system(&spec)?;
    let u = spec
        .initial_controls()
        .and_then(|u| u.with_bounds(None))
        .map_err(Failure::config)?;
    let dt = spec.grid.dt();
    let sign = if opts.flip_sign { -1.0 } else { 1.0 };
    let analytic = sys.gradient(&u).map_err(Failure::compute)?;
    let cost = |values: Vec<Vec<f64>>| -> CliResult<f64> {
        let field = ControlField::new(spec.grid, values, None).map_err(Failure::compute)?;
        sys.performance(&field).map_err(Failure::compute)
    };
    let (mut diff2, mut fd2, mut max_abs) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (m, row) in analytic.iter().enumerate() {
        for (w, g) in row.iter().enumerate() {
            let mut plus = u.values().to_vec();
            let mut minus = plus.clone();
            plus[m][w] += opts.step;
            minus[m][w] -= opts.step;
            let fd = (cost(plus)? - cost(minus)?) / (2.0 * opts.step);
            let d = sign * g * dt - fd;
            diff2 += d * d;
            fd2 += fd * fd;
            max_abs = max_abs.max(d.abs());
        }
    }
    let fd_norm = fd2.sqrt();
    let error = if fd_norm > 0.0 {
        diff2.sqrt() / fd_norm
    } else {
        diff2.sqrt()
    };
    if !error.is_finite() {
        return Err(Failure::new(
            ExitKind::Numerical,
            anyhow!("gradient check produced a non-finite error"),
        ));
    }
    Ok(GradcheckReport {
        error,
        max_abs_error: max_abs,
        fd_norm,
        passed: error <= opts.tolerance,
    })
}

pub fn gradcheck(run: &Resolved, opts: GradcheckOptions) -> CliResult<GradcheckReport> {
    let report = gradcheck_report(&run.spec, opts)?;
    println!(
        "{}: relative error {:.3e} (max abs {:.3e}, |fd| {:.3e}, tolerance {:.0e})",
        run.spec.id, report.error, report.max_abs_error, report.fd_norm, opts.tolerance
    );
    if report.passed {
        Ok(report)
    } else {
        Err(Failure::new(
            ExitKind::GradcheckFailed,
            anyhow!(
                "gradient check failed: {:.3e} > {:.0e}",
                report.error,
                opts.tolerance
            ),
        ))
    }
}
