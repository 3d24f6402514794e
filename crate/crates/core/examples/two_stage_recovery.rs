//! Initialize, refine with hard thresholding pursuit, and print the residual trace.
//!
//! `cargo run --release --example two_stage_recovery -- 500 10 400`

use sparse_pr::init::{tp_init, InitConfig};
use sparse_pr::model::{relative_error, Ensemble, RngStream, SparseSignal};
use sparse_pr::refine::{htp_run, HtpConfig};

fn main() -> sparse_pr::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let n = args.next().unwrap_or(500);
    let s = args.next().unwrap_or(10);
    let m = args.next().unwrap_or(400);

    let mut rng = RngStream::new(7, 0);
    let x = SparseSignal::sample(n, s, &mut rng)?;
    let e = Ensemble::measure(&x, m, &mut rng)?;
    let truth = x.to_dense();

    let init = tp_init(&e, s, &InitConfig::default())?;
    println!("initial relative error {:.3e}", relative_error(&init.xhat, &truth)?);

    let run = htp_run(&e, &init.xhat, s, &HtpConfig::default())?;
    for (k, r) in run.residuals.iter().enumerate() {
        println!("  step {:>3}: relative residual {r:.3e}", k + 1);
    }
    println!(
        "converged={} after {} steps, relative error {:.3e}",
        run.converged,
        run.iterations,
        relative_error(&run.x, &truth)?
    );
    Ok(())
}
