use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use sparse_pr::harness::{self, instance, ExperimentGrid, TrialSettings};
use sparse_pr::model::TruncationMoments;
use sparse_pr::pipeline::{solve_two_stage, Method, SolverConfig};
use sparse_pr::Error;

#[derive(Parser)]
#[command(name = "sparse-pr", version, about = "Sparse phase retrieval experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded trial and print its record as JSON.
    Trial {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        l: Option<f64>,
        #[arg(long)]
        u: Option<f64>,
        #[arg(long = "s-prime")]
        s_prime: Option<usize>,
        #[arg(long = "t-max")]
        t_max: Option<usize>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long = "max-iters")]
        max_iters: Option<usize>,
        #[arg(long)]
        b: Option<usize>,
        #[arg(long)]
        timing: bool,
    },
    /// Run a grid described by a JSON config; write CSV and print a summary.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "SPARSE_PR_THREADS")]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the signal of an SPR1 instance file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, value_parser = parse_method, default_value = "tp")]
        method: Method,
    },
    /// Print the truncated Gaussian moments for the band [l, u].
    Moments {
        #[arg(long, default_value_t = 0.5)]
        l: f64,
        #[arg(long, default_value_t = 10.0)]
        u: f64,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Trial {
            n,
            s,
            m,
            method,
            seed,
            trial,
            l,
            u,
            s_prime,
            t_max,
            mu,
            max_iters,
            b,
            timing,
        } => {
            let mut solver = SolverConfig::default();
            if let Some(l) = l {
                solver.init.l = l;
            }
            if let Some(u) = u {
                solver.init.u = u;
            }
            solver.init.s_prime = s_prime.or(solver.init.s_prime);
            if let Some(t) = t_max {
                solver.init.t_max = t;
            }
            if let Some(mu) = mu {
                solver.htp.mu = mu;
            }
            if let Some(k) = max_iters {
                solver.htp.max_iters = k;
            }
            if let Some(b) = b {
                solver.b = b;
            }
            let settings = TrialSettings {
                solver,
                record_timing: timing,
                ..TrialSettings::default()
            };
            let record = harness::run_trial(n, s, m, method, trial, seed, &settings)?;
            println!("{}", serde_json::to_string(&record).expect("record serializes"));
        }
        Command::Grid { config, threads, out } => {
            let text = fs::read_to_string(&config)?;
            let grid: ExperimentGrid =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
            let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let outcome = harness::run_grid(&grid, threads)?;
            let csv = harness::emit_csv(&outcome.records);
            match out {
                Some(path) => fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            print!("{}", harness::format_summary(&outcome.cells));
        }
        Command::Solve { instance: path, s, method } => {
            let inst = harness::load_instance(&path)?;
            let s = s.unwrap_or(inst.s);
            let mut report = solve_two_stage(&inst.ensemble, s, method, &SolverConfig::default())?;
            report.score(&inst.signal.to_dense())?;
            println!("{}", instance::format_vector(&report.x));
            let summary = json!({
                "method": report.method,
                "s": s,
                "rel_error": report.rel_error,
                "init_dist": report.init_dist,
                "iterations": report.iterations,
                "converged": report.converged,
                "gradient_residual": report.gradient_residual,
                "chosen_restart": report.chosen_restart,
                "degenerate_init": report.degenerate_init,
                "init_ms": report.init_elapsed.as_secs_f64() * 1e3,
                "refine_ms": report.refine_elapsed.as_secs_f64() * 1e3,
            });
            println!("{summary}");
        }
        Command::Moments { l, u } => {
            let m = TruncationMoments::new(l, u)?;
            println!("alpha = {:.12}", m.alpha);
            println!("beta = {:.12}", m.beta);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
