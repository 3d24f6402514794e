//! Sparsity against sample size, rendered as a text heat map.
//!
//! `cargo run --release --example phase_transition -- tp`

use sparse_pr::harness::{run_grid, ExperimentGrid};
use sparse_pr::pipeline::{Method, SolverConfig};

fn main() -> sparse_pr::Result<()> {
    let method: Method = std::env::args().nth(1).as_deref().unwrap_or("tp").parse()?;
    let s_list = vec![5, 10, 15, 20, 25];
    let m_list = vec![100, 200, 300, 400, 500, 600, 700, 800];
    let grid = ExperimentGrid {
        n: 1000,
        s_list: s_list.clone(),
        m_list: m_list.clone(),
        trials: 10,
        seed: 3,
        methods: vec![method],
        success_threshold: 1e-3,
        configs: SolverConfig::default(),
        record_timing: false,
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let outcome = run_grid(&grid, threads)?;

    const SHADES: [char; 5] = [' ', '░', '▒', '▓', '█'];
    println!("{method}, n=1000, {} trials per cell", grid.trials);
    print!("  s\\m");
    for m in &m_list {
        print!("{m:>5}");
    }
    println!();
    for &s in s_list.iter().rev() {
        print!("{s:>5}");
        for &m in &m_list {
            let rate = outcome.cell(method, s, m).map_or(0.0, |c| c.success_rate);
            let shade = SHADES[((rate * 4.0).round() as usize).min(4)];
            print!("  {shade}{shade} ");
        }
        println!();
    }
    Ok(())
}
