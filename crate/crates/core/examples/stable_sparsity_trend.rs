//! Spiky signals (one dominant entry) against flat ones with the same support size.
//!
//! `cargo run --release --example stable_sparsity_trend`

use sparse_pr::model::{Ensemble, RngStream, SparseSignal};
use sparse_pr::pipeline::{solve_two_stage, Method, SolverConfig};

fn main() -> sparse_pr::Result<()> {
    let (n, s, trials) = (1000, 25, 20);
    let cfg = SolverConfig::default();
    println!("n={n} s={s}, {trials} trials per cell, TP + HTP");
    for m in [200, 400, 800, 1600, 3200] {
        let mut hits = [0usize; 2];
        let mut sbar = [0.0; 2];
        for t in 0..trials {
            let mut rng = RngStream::new(500 + t as u64, 0);
            let base = SparseSignal::sample(n, s, &mut rng)?;
            let flat: Vec<f64> = base.values().iter().map(|v| v.signum()).collect();
            let mut spiky: Vec<f64> = flat.iter().map(|v| 0.05 * v).collect();
            spiky[0] = 1.0;
            for (k, values) in [flat, spiky].into_iter().enumerate() {
                let x = SparseSignal::new(n, base.support().to_vec(), values)?;
                sbar[k] += x.stable_sparsity().unwrap_or(0.0) / trials as f64;
                let e = Ensemble::measure(&x, m, &mut RngStream::new(500 + t as u64, 1))?;
                let mut rep = solve_two_stage(&e, s, Method::Tp, &cfg)?;
                rep.score(&x.to_dense())?;
                hits[k] += usize::from(rep.rel_error.unwrap() <= 1e-3);
            }
        }
        println!(
            "m={m:>4}: flat (s̄={:.1}) {:>2}/{trials}   spiky (s̄={:.2}) {:>2}/{trials}",
            sbar[0], hits[0], sbar[1], hits[1]
        );
    }
    Ok(())
}
