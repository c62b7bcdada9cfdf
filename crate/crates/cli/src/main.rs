use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mhdpp_cli::commands::{cmd_convergence, cmd_run, cmd_verify, CliError};
use mhdpp_cli::config::RunConfig;

#[derive(Parser)]
#[command(name = "mhdpp", version, about = "Positivity-preserving ideal MHD solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a catalog problem and write snapshots and diagnostics.
    Run(SolverArgs),
    /// Error table and observed orders on a sequence of meshes.
    Convergence(SolverArgs),
    /// Randomized checks of the admissibility inequalities.
    Verify {
        #[arg(long, default_value_t = 20180)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Also write the report as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// `key = value` file with [problem], [solver] and [output] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// `128` or `64x64`; for `convergence` a list such as `64,128,256`.
    #[arg(long)]
    cells: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// hll, local_lf or global_lf.
    #[arg(long)]
    flux: Option<String>,
    /// on or off.
    #[arg(long)]
    penalty: Option<String>,
    /// proven or practical.
    #[arg(long)]
    cfl_mode: Option<String>,
    #[arg(long)]
    cfl: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    snapshot_every: Option<String>,
    /// Any other key, as `section.key=value` or `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl SolverArgs {
    fn resolve(&self, list_cells: bool) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            cfg.apply_text(&text)?;
        }
        let cells_key = if list_cells { "problem.resolutions" } else { "problem.cells" };
        let flags = [
            ("problem.name", &self.problem),
            (cells_key, &self.cells),
            ("problem.t_end", &self.t_end),
            ("solver.k", &self.k),
            ("solver.flux", &self.flux),
            ("solver.penalty", &self.penalty),
            ("solver.cfl_mode", &self.cfl_mode),
            ("solver.cfl", &self.cfl),
            ("output.dir", &self.out),
            ("output.snapshot_every", &self.snapshot_every),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.apply_override(&format!("{key}={v}"))?;
            }
        }
        for s in &self.set {
            cfg.apply_override(s)?;
        }
        Ok(cfg)
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("MHDPP_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        // Fails only if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve(false)?;
            let rep = cmd_run(&cfg)?;
            println!("{}: reached t = {} in {} steps", cfg.problem, rep.outcome.t, rep.outcome.steps);
            for f in &rep.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Convergence(args) => {
            let cfg = args.resolve(true)?;
            let (text, csv) = cmd_convergence(&cfg)?;
            print!("{text}");
            std::fs::create_dir_all(&cfg.out_dir).map_err(|source| CliError::Io { path: cfg.out_dir.clone(), source })?;
            let path = cfg.out_dir.join("convergence.csv");
            std::fs::write(&path, csv).map_err(|source| CliError::Io { path: path.clone(), source })?;
            println!("wrote {}", path.display());
        }
        Command::Verify { seed, trials, csv } => {
            let (text, table, ok) = cmd_verify(seed, trials)?;
            print!("{text}");
            if let Some(path) = csv {
                std::fs::write(&path, table).map_err(|source| CliError::Io { path: path.clone(), source })?;
            }
            if !ok {
                return Err(CliError::VerifyFailed);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    init_threads();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
