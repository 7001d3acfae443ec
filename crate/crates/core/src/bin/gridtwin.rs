use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gridtwin::cli_io::{self, exit_code, preset, resolve_out, RunFailure, Scale};
use gridtwin::sim_engine::{Engine, Scenario};
use gridtwin::Error;

#[derive(Parser)]
#[command(name = "gridtwin", version, about = "Cell-resolved battery energy storage simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file or a bundled preset.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Run configuration (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present_any = ["preset", "resume"])]
    config: Option<PathBuf>,
    /// Bundled study: fig5, fig8, contact_r, cell2cell, thermal, control_week, control_life.
    #[arg(long)]
    preset: Option<String>,
    /// Size of preset runs: module, rack or container.
    #[arg(long, default_value = "module")]
    scale: String,
    /// Output directory (overridden by GRIDTWIN_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the cell-to-cell variation.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Continue from a checkpoint file.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Override the number of cycles of every variant.
    #[arg(long)]
    cycles: Option<usize>,
}

struct Job {
    name: Option<String>,
    scenario: Scenario,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e) as u8)
}

fn run_job(engine: Engine, out: &Path, checkpoint_every: Option<usize>) -> Result<(), ExitCode> {
    match cli_io::simulate(engine, out, checkpoint_every) {
        Ok(e) => {
            println!(
                "{}: {} cycles, {:.2} FEC -> {}",
                e.scenario.name,
                e.progress.cycle,
                e.fec(),
                out.display()
            );
            Ok(())
        }
        Err(RunFailure { error, checkpoint }) => {
            if let Some(p) = checkpoint {
                eprintln!("checkpoint written to {}", p.display());
            }
            Err(fail(&error))
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<(), ExitCode> {
    let mut checkpoint_every = None;
    let mut threads = args.threads;
    let mut seed = args.seed;
    let default_out;
    if let Some(ckpt) = &args.resume {
        let bytes = std::fs::read(ckpt).map_err(|e| {
            fail(&Error::Config {
                path: ckpt.clone(),
                message: e.to_string(),
            })
        })?;
        let engine = Engine::restore(&bytes).map_err(|e| fail(&e))?;
        let out = resolve_out(args.out.as_deref(), Path::new("out"));
        return with_threads(threads, || run_job(engine, &out, None));
    }
    let jobs: Vec<Job> = if let Some(path) = &args.config {
        let cfg = cli_io::load_config(path).map_err(|e| fail(&e))?;
        checkpoint_every = cfg.checkpoint_every;
        threads = threads.or(cfg.threads);
        seed = seed.or(cfg.seed);
        default_out = cfg.out.clone();
        vec![Job {
            name: None,
            scenario: cfg.scenario,
        }]
    } else {
        let name = args.preset.as_deref().unwrap_or_default();
        let scale = Scale::parse(&args.scale).map_err(|e| fail(&e))?;
        default_out = PathBuf::from("out").join(name);
        preset(name, scale)
            .map_err(|e| fail(&e))?
            .into_iter()
            .map(|v| Job {
                name: Some(v.name),
                scenario: v.scenario,
            })
            .collect()
    };
    let out = resolve_out(args.out.as_deref(), &default_out);
    with_threads(threads, || {
        for mut job in jobs {
            if let Some(s) = seed {
                job.scenario.variation.seed = s;
            }
            if let Some(c) = args.cycles {
                job.scenario.cycles = c;
            }
            let dir = match &job.name {
                Some(n) => out.join(n),
                None => out.clone(),
            };
            let engine = Engine::new(job.scenario).map_err(|e| fail(&e))?;
            run_job(engine, &dir, checkpoint_every)?;
        }
        Ok(())
    })
}

fn with_threads<F>(threads: Option<usize>, f: F) -> Result<(), ExitCode>
where
    F: FnOnce() -> Result<(), ExitCode> + Send,
{
    match threads {
        None => f(),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| fail(&Error::Scenario(format!("thread pool: {e}"))))?;
            pool.install(f)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
