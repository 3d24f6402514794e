//! Compare the three initializers on one instance.
//!
//! `cargo run --release --example initializers -- 1000 25 1500`

use sparse_pr::init::{modified_spectral_init, spectral_init, tp_init, InitConfig};
use sparse_pr::model::{dist, Ensemble, RngStream, SparseSignal};

fn main() -> sparse_pr::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let n = args.next().unwrap_or(1000);
    let s = args.next().unwrap_or(25);
    let m = args.next().unwrap_or(1500);

    let mut rng = RngStream::new(2024, 0);
    let x = SparseSignal::sample(n, s, &mut rng)?;
    let e = Ensemble::measure(&x, m, &mut rng)?;
    let truth = x.to_dense();
    println!("n={n} s={s} m={m}  ‖x‖={:.4}  ν={:.4}", x.norm(), e.nu());

    let cfg = InitConfig::default();
    for (name, est) in [
        ("spectral", spectral_init(&e, s, &cfg)?),
        ("modified spectral", modified_spectral_init(&e, s, &cfg)?),
        ("truncated power", tp_init(&e, s, &cfg)?),
    ] {
        let hits = est.support.iter().filter(|j| truth[**j] != 0.0).count();
        println!(
            "{name:>18}: dist/‖x‖ = {:.4}  support hits {hits}/{s}  j0 = {:?}  iterations {}",
            dist(&est.xhat, &truth)? / x.norm(),
            est.j0,
            est.iterations_run
        );
    }
    Ok(())
}
