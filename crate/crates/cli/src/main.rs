mod commands;
mod config;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use commands::{Dataset, EvaluateArgs, SubthreadArgs, TrainArgs};
use config::{Cli, Command, FileConfig, Global};
use controversy_motifs::Exec;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn init_jobs(jobs: Option<usize>) -> Result<Exec> {
    match jobs {
        Some(0) => anyhow::bail!("--jobs must be at least 1"),
        Some(1) => Ok(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()?;
            Ok(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => {
            log::warn!("built without parallel support; running sequentially");
            Ok(Exec::Sequential)
        }
        None => Ok(Exec::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let Global {
        seed,
        jobs,
        strictness,
        log_level,
    } = config::global(&cli, &file);
    env_logger::Builder::new().parse_filters(&log_level).init();
    let exec = init_jobs(jobs)?;
    println!("seed: {seed}");

    let dataset = |input: &config::InputArgs| -> Result<Dataset> {
        Ok(Dataset {
            threads: config::required(input.threads.as_ref(), file.threads.as_ref(), "threads")?,
            follows: config::required(input.follows.as_ref(), file.follows.as_ref(), "follows")?,
            strictness,
            exec,
        })
    };
    let out_dir =
        |out: &config::OutArgs| config::required(out.out.as_ref(), file.out.as_ref(), "out");

    match &cli.command {
        Command::Extract { input, out } => commands::extract(&dataset(input)?, &out_dir(out)?),
        Command::Train {
            input,
            model,
            report,
        } => {
            let path = config::required(model.path.as_ref(), file.model.as_ref(), "model")?;
            let report = report
                .clone()
                .unwrap_or_else(|| path.with_extension("report.txt"));
            let args = TrainArgs {
                model: path,
                report,
                mask: config::mask_name(model.mask.as_ref(), file.mask.as_ref())?,
                rounds: config::rounds(model.rounds, &file),
                k: config::k(model.k, &file),
            };
            commands::train(&dataset(input)?, &args)
        }
        Command::Evaluate {
            input,
            model,
            out,
            folds,
            ablation,
        } => {
            let args = EvaluateArgs {
                out: out_dir(out)?,
                model: if *ablation { None } else { model.path.clone() },
                mask: config::mask_name(model.mask.as_ref(), file.mask.as_ref())?,
                rounds: config::rounds(model.rounds, &file),
                k: model.k.or(file.k),
                folds: config::folds(*folds, &file),
                seed,
                ablation: *ablation,
            };
            commands::evaluate_cmd(&dataset(input)?, &args)
        }
        Command::Subthreads {
            input,
            model,
            k,
            scope,
            out,
        } => {
            let args = SubthreadArgs {
                model: config::required(model.as_ref(), file.model.as_ref(), "model")?,
                k: config::k(*k, &file),
                scope: (*scope).into(),
                out: out_dir(out)?,
            };
            commands::subthreads(&dataset(input)?, &args)
        }
        Command::Synth { params, out } => {
            let params = params.as_ref().or(file.params.as_ref());
            commands::synth(params.map(|p| p.as_path()), seed, &out_dir(out)?, exec)
        }
    }
}
