use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spotdeconv::cli::{self, RunConfig};
use spotdeconv::evaluation::DEFAULT_TOLERANCE;
use spotdeconv::solver::Progress;

#[derive(Parser)]
#[command(
    name = "spotdeconv",
    version,
    about = "Group-sparse deconvolution and spot detection"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene and its observation.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Reconstruct a volume from an observation.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Extract detections from a reconstructed volume.
    Detect {
        #[arg(long)]
        volume: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score detections against ground truth at the best threshold.
    Evaluate {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// synth, solve, detect and evaluate in one directory.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn report_progress(p: &Progress) {
    if p.iteration.is_multiple_of(100) {
        match p.objective {
            Some(f) => eprintln!(
                "iter {:>5}  rel change {:.3e}  objective {f:.6e}",
                p.iteration, p.rel_change
            ),
            None => eprintln!("iter {:>5}  rel change {:.3e}", p.iteration, p.rel_change),
        }
    }
}

fn run(args: Args) -> spotdeconv::Result<()> {
    cli::init_thread_pool_from_env()?;
    match args.command {
        Command::Synth { config, out_dir } => {
            let out = cli::synth(&RunConfig::load(&config)?, &out_dir)?;
            println!(
                "wrote {} sources (noise sigma {:.4e}) to {}",
                out.ground_truth.len(),
                out.meta.scene.noise_sigma,
                out_dir.display()
            );
        }
        Command::Solve {
            config,
            obs,
            out,
            trace,
        } => {
            let res = cli::solve(
                &RunConfig::load(&config)?,
                &obs,
                &out,
                trace.as_deref(),
                report_progress,
            )?;
            println!(
                "{} iterations, final relative change {:.3e}, converged: {}",
                res.iterations, res.final_rel_change, res.converged
            );
        }
        Command::Detect { volume, out } => {
            let dets = cli::detect(&volume, &out)?;
            println!("{} detections", dets.len());
        }
        Command::Evaluate {
            detections,
            ground_truth,
            tol,
            out,
        } => {
            let report = cli::evaluate(&detections, &ground_truth, tol, &out)?;
            println!("{}", report.summary());
        }
        Command::Pipeline { config, out_dir } => {
            let out = cli::pipeline(&RunConfig::load(&config)?, &out_dir, report_progress)?;
            println!("{} iterations", out.solve.iterations);
            println!("{}", out.report.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
