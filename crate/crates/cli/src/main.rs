use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phn_cli::commands::{self, EvalArgs, TrainArgs};
use phn_core::problems::Split;

#[derive(Parser)]
#[command(
    name = "phn",
    version,
    about = "Train and evaluate preference-conditioned hypernetworks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a hypernetwork and write checkpoint, metric log and manifest.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "PHN_OUT_DIR")]
        out_dir: Option<PathBuf>,
        /// Overrides train.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on a set of rays.
    EvalFront {
        #[arg(long)]
        checkpoint: PathBuf,
        /// A ray count, or rays like `0.2,0.8;0.5,0.5`.
        #[arg(long)]
        rays: Option<String>,
        /// Comma-separated reference point.
        #[arg(long)]
        ref_point: Option<String>,
        #[arg(long, env = "PHN_OUT_DIR")]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Train every cell of the `[sweep]` grid and rank by validation HV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "PHN_OUT_DIR")]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to one per core.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare hypernetworks with per-ray baselines.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "PHN_OUT_DIR")]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SplitArg {
    Train,
    Validation,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Validation => Split::Validation,
            SplitArg::Test => Split::Test,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train { config, out_dir, seed } => {
            let out = commands::cmd_train(TrainArgs {
                config_path: &config,
                out_dir,
                seed,
            })?;
            println!("wrote {}", out.display());
        }
        Command::EvalFront {
            checkpoint,
            rays,
            ref_point,
            out_dir,
            split,
        } => {
            let report = commands::cmd_eval_front(EvalArgs {
                checkpoint: &checkpoint,
                rays: rays.as_deref(),
                ref_point: ref_point.as_deref(),
                out_dir,
                split: split.into(),
            })?;
            println!("hv {} median_uniformity {}", report.hv, report.median_uniformity());
        }
        Command::Sweep {
            config,
            out_dir,
            seed,
            jobs,
        } => {
            let rows = commands::cmd_sweep(&config, out_dir, seed, jobs)?;
            let failed = rows.iter().filter(|r| r.result.is_err()).count();
            println!("{} cells, {failed} failed", rows.len());
        }
        Command::Compare { config, out_dir, seed } => {
            for r in commands::cmd_compare(&config, out_dir, seed)? {
                println!(
                    "{} k={} t={:.3}s hv={} var={}",
                    r.method.name(),
                    r.n_rays,
                    r.wall_clock_s,
                    r.hv,
                    r.hv_var
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(phn_cli::exit_code(&e) as u8)
        }
    }
}
