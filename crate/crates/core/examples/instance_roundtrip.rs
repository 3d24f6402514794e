//! Save an instance as SPR1 text, load it back, and solve it.
//!
//! `cargo run --example instance_roundtrip -- /tmp/demo.spr1`

use sparse_pr::harness::{load_instance, save_instance};
use sparse_pr::model::{Ensemble, RngStream, SparseSignal};
use sparse_pr::pipeline::{solve_two_stage, Method, SolverConfig};

fn main() -> sparse_pr::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "demo.spr1".into());
    let mut rng = RngStream::new(99, 0);
    let x = SparseSignal::sample(64, 4, &mut rng)?;
    let e = Ensemble::measure(&x, 160, &mut rng)?;
    save_instance(&path, &x, 4, &e)?;

    let inst = load_instance(&path)?;
    assert_eq!(inst.ensemble, e, "save/load is exact");
    let mut report = solve_two_stage(&inst.ensemble, inst.s, Method::ModifiedSpectral, &SolverConfig::default())?;
    report.score(&inst.signal.to_dense())?;
    println!(
        "{path}: n={} m={} s={}  relative error {:.2e} in {} refinement steps",
        inst.ensemble.n(),
        inst.ensemble.m(),
        inst.s,
        report.rel_error.unwrap(),
        report.iterations
    );
    println!("solve it again with: sparse-pr solve --instance {path}");
    Ok(())
}
