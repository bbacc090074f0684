use clap::{Args, Parser, Subcommand};
use slc_cli::commands::{self, GradcheckOptions};
use slc_cli::config::{self, Overrides, Resolved, RunConfig};
use slc_cli::{CliResult, Failure};
use slc_core::experiments::ExperimentId;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "slc",
    version,
    about = "Robust quantum control by sampling-based learning"
)]
struct Cli {
    /// Worker threads; defaults to RAYON_NUM_THREADS or all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress lines.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Override a config entry, e.g. `training.eta=0.05` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output directory; defaults to `output_dir` from the config, then `runs/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train controls on the augmented system.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a pulse table on fresh parameter draws.
    Test {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        controls: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train and test a built-in experiment, then compare with published results.
    Reproduce {
        experiment: ExperimentId,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the analytic gradient with central finite differences.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        intervals: usize,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[arg(long, hide = true)]
        flip_sign: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(
    path: Option<&Path>,
    base: Option<RunConfig>,
    common: &Common,
) -> CliResult<(Resolved, PathBuf)> {
    let overrides = Overrides {
        sets: common.sets.clone(),
        seed: common.seed,
        max_iter: common.max_iter,
    };
    let run = config::load(path, base, &overrides)
        .and_then(|c| c.resolve())
        .map_err(Failure::config)?;
    let out = common
        .out
        .clone()
        .or_else(|| run.output_dir.clone())
        .unwrap_or_else(|| Path::new("runs").join(run.spec.id.as_str()));
    Ok((run, out))
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(Failure::other)?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Train { config, common } => {
            let (run, out) = resolve(Some(&config), None, &common)?;
            let s = commands::train(&run, &out, cli.quiet)?;
            let t = s.train.expect("train summary");
            println!(
                "{}: J_N {:.6} after {} iterations ({:?})",
                s.experiment, t.final_j, t.iterations, t.termination
            );
        }
        Command::Test {
            config,
            controls,
            common,
        } => {
            let (run, out) = resolve(Some(&config), None, &common)?;
            let s = commands::test(&run, &controls, &out)?;
            let t = s.test.expect("test summary");
            println!(
                "{}: mean fidelity {:.6} over {} samples",
                s.experiment, t.fidelity.mean, t.samples
            );
        }
        Command::Reproduce { experiment, common } => {
            let (run, out) = resolve(None, Some(RunConfig::for_experiment(experiment)), &common)?;
            let r = commands::reproduce(&run, &out, cli.quiet)?;
            for c in &r.comparison {
                let published = c.published.map_or("-".to_string(), |p| p.to_string());
                println!(
                    "{:<18} published {:<8} achieved {:<12.6} {:<16} {}",
                    c.metric,
                    published,
                    c.achieved,
                    c.threshold.to_string(),
                    if c.pass { "pass" } else { "FAIL" }
                );
            }
        }
        Command::Gradcheck {
            config,
            intervals,
            step,
            tolerance,
            flip_sign,
            common,
        } => {
            let (run, _) = resolve(Some(&config), None, &common)?;
            commands::gradcheck(
                &run,
                GradcheckOptions {
                    intervals,
                    step,
                    tolerance,
                    flip_sign,
                },
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.kind.code())
        }
    }
}
