//! Multi-restart recovery at a sample size where a single start often fails.
//!
//! `cargo run --release --example multi_restart -- 20`

use sparse_pr::harness::TrialData;
use sparse_pr::pipeline::{solve_multi_restart, solve_two_stage, Method, SolverConfig};

fn main() -> sparse_pr::Result<()> {
    let trials: usize = std::env::args().nth(1).map_or(20, |a| a.parse().expect("trial count"));
    let (n, s, m) = (1000, 35, 650);
    let cfg = SolverConfig::default();

    let (mut single, mut multi) = (0, 0);
    for t in 0..trials {
        let data = TrialData::generate(5, n, s, m, t)?;
        let truth = data.signal.to_dense();
        let mut a = solve_two_stage(&data.ensemble, s, Method::Tp, &cfg)?;
        let mut b = solve_multi_restart(&data.ensemble, s, &cfg)?;
        a.score(&truth)?;
        b.score(&truth)?;
        let (ea, eb) = (a.rel_error.unwrap(), b.rel_error.unwrap());
        single += usize::from(ea <= 1e-3);
        multi += usize::from(eb <= 1e-3);
        println!(
            "trial {t:>3}: single {ea:.2e}  restarts {eb:.2e} (anchor #{})",
            b.chosen_restart.unwrap_or(0)
        );
    }
    println!("n={n} s={s} m={m} b={}: single start {single}/{trials}, restarts {multi}/{trials}", cfg.b);
    Ok(())
}
