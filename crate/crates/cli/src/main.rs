use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tissuesim_cli::{run, write_artifacts};
use tissuesim_core::io::{parse_config, read_snapshot, render_svg, Mode, RenderStyle, Snapshot};

#[derive(Parser)]
#[command(name = "sim", version, about = "Stochastic Notch-Delta tissue simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Static population, well-stirred cells.
    Wellstirred(RunArgs),
    /// Population growth only.
    Grow(RunArgs),
    /// Growth with spatial intracellular dynamics.
    Simulate(RunArgs),
    /// Mean-field equations on the static population.
    Ode(RunArgs),
    /// Draw a snapshot as SVG.
    Render {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn simulate(mode: Mode, args: RunArgs) -> Result<()> {
    let mut cfg = parse_config(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    cfg.mode = mode;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let dir = args
        .out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let artifacts = run(&cfg)?;
    for path in write_artifacts(&dir, &artifacts)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn render(snapshot: PathBuf, out: PathBuf) -> Result<()> {
    let snap: Snapshot<f64> = read_snapshot(&snapshot)
        .with_context(|| format!("reading {}", snapshot.display()))?;
    let svg = render_svg(&snap, &RenderStyle::default());
    std::fs::write(&out, svg).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Wellstirred(a) => simulate(Mode::WellStirred, a),
        Command::Grow(a) => simulate(Mode::Grow, a),
        Command::Simulate(a) => simulate(Mode::Simulate, a),
        Command::Ode(a) => simulate(Mode::Ode, a),
        Command::Render { snapshot, out } => render(snapshot, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
