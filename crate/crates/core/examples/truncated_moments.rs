//! Truncated Gaussian moments and the expectation of the truncated surrogate.
//!
//! `cargo run --example truncated_moments -- 0.5 10`

use sparse_pr::model::{truncated_gaussian_moment, TruncationMoments};

fn main() -> sparse_pr::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric band edge"));
    let l = args.next().unwrap_or(0.5);
    let u = args.next().unwrap_or(10.0);

    let mom = TruncationMoments::new(l, u)?;
    println!("band [{l}, {u}]");
    println!("  alpha = E[g² 1(l ≤ |g| ≤ u)] = {:.12}", mom.alpha);
    println!("  beta  = E[g⁴ 1(l ≤ |g| ≤ u)] = {:.12}", mom.beta);
    println!("  E Ȳ₀ = {:.6}·xxᵀ + {:.6}·‖x‖²·I", mom.beta - mom.alpha, mom.alpha);

    // the untruncated band recovers E g² = 1, E g⁴ = 3
    let full2 = truncated_gaussian_moment(2, 0.0, f64::INFINITY)?;
    let full4 = truncated_gaussian_moment(4, 0.0, f64::INFINITY)?;
    println!("untruncated: E g² = {full2:.12}, E g⁴ = {full4:.12}");
    Ok(())
}
