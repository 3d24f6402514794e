//! Success rate against sample size for every method, written as CSV.
//!
//! `cargo run --release --example success_curve -- curve.csv`

use sparse_pr::harness::{emit_csv, format_summary, run_grid, ExperimentGrid};
use sparse_pr::pipeline::{Method, SolverConfig};

fn main() -> sparse_pr::Result<()> {
    let grid = ExperimentGrid {
        n: 1000,
        s_list: vec![25],
        m_list: vec![300, 500, 700, 900, 1100],
        trials: 20,
        seed: 11,
        methods: Method::ALL.to_vec(),
        success_threshold: 1e-3,
        configs: SolverConfig::default(),
        record_timing: false,
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let outcome = run_grid(&grid, threads)?;
    print!("{}", format_summary(&outcome.cells));
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, emit_csv(&outcome.records))?;
        println!("wrote {} records to {path}", outcome.records.len());
    }
    Ok(())
}
