#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use dirac1d::field::init_field;
use dirac1d::solver::{evolve, EvolveOptions};
use dirac1d::verify::{run_suite, Suite, Tolerances};

mod config;
mod output;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_BOUNDARY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "dirac1d",
    version,
    about = "1D nonlinear massless Dirac solver and diagnostics"
)]
struct Cli {
    /// Worker threads for the rayon pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the initial data described by a TOML config.
    Run {
        config: PathBuf,
        /// Snapshot stride in steps; overrides `run.snapshot_stride`.
        #[arg(long)]
        snapshots: Option<usize>,
        /// Output directory; overrides `run.out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an acceptance suite and print a pass/fail table.
    Verify {
        /// functionals, convergence, lemmas, decay, stability or all.
        suite: Suite,
        /// Also write the outcomes as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    let code = match cli.command {
        Command::Run {
            config,
            snapshots,
            out,
        } => cmd_run(config, snapshots, out, cli.threads),
        Command::Verify { suite, out } => cmd_verify(suite, out),
    };
    ExitCode::from(code)
}

fn cmd_run(
    path: PathBuf,
    snapshots: Option<usize>,
    out: Option<PathBuf>,
    threads: Option<usize>,
) -> u8 {
    let mut cfg = match config::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(s) = snapshots {
        if s == 0 {
            eprintln!("error: --snapshots must be at least 1");
            return EXIT_CONFIG;
        }
        cfg.snapshot_stride = s;
    }
    if let Some(o) = out {
        cfg.out = o;
    }
    if threads == Some(1) {
        cfg.solver.parallel = false;
    }
    let f0 = match init_field(cfg.grid, &cfg.u0, &cfg.v0) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: initial data: {e}");
            return EXIT_CONFIG;
        }
    };
    let opts = EvolveOptions {
        snapshot_stride: cfg.snapshot_stride,
        windows: cfg.windows.clone(),
    };
    let traj = match evolve(&f0, &cfg.model, cfg.t_final, &cfg.solver, &opts) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                dirac1d::Error::PicardDivergence { .. } => EXIT_SOLVER,
                dirac1d::Error::BoundaryReached { .. } => EXIT_BOUNDARY,
                _ => EXIT_FAILURE,
            };
        }
    };
    let written = (|| -> anyhow::Result<usize> {
        std::fs::create_dir_all(&cfg.out)
            .with_context(|| format!("creating {}", cfg.out.display()))?;
        output::write_diagnostics(&traj, &cfg.out.join("diagnostics.csv"))?;
        let n = output::write_snapshots(&traj, &cfg.out.join("snapshots"))?;
        output::write_report(&traj, &cfg.windows, &cfg.out.join("report.json"))?;
        Ok(n)
    })();
    match written {
        Ok(n) => {
            let last = traj.records.last().expect("records are never empty");
            println!(
                "{}: {} steps to t = {}, L = {:.12e}, glimm = {:.6e}, {} snapshots in {}",
                traj.model.name(),
                traj.n_steps,
                traj.t_final,
                last.l,
                last.glimm,
                n,
                cfg.out.display()
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn cmd_verify(suite: Suite, out: Option<PathBuf>) -> u8 {
    let tol = match Tolerances::from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcomes = run_suite(suite, &tol);
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "{} of {} checks passed",
        outcomes.len() - failed,
        outcomes.len()
    );
    if let Some(path) = out {
        let json = serde_json::json!({ "suite": suite, "tolerances": tol, "outcomes": outcomes });
        if let Err(e) = std::fs::write(
            &path,
            serde_json::to_string_pretty(&json).expect("serializable"),
        ) {
            eprintln!("error: writing {}: {e}", path.display());
            return EXIT_FAILURE;
        }
    }
    if failed == 0 {
        0
    } else {
        EXIT_FAILURE
    }
}
