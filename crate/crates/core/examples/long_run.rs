//! A long float run: price extremes, jumps back to the monopoly price, and
//! the longest wait below the midpoint between serial and monopoly prices.
//!
//! `cargo run --release --example long_run -- 100000`

use std::time::Instant;

use serial_monopoly::analytics::{market_points, theoretical_delta_bound};
use serial_monopoly::dynamics::run;
use serial_monopoly::number::int;
use serial_monopoly::verify::{count_jumps, empirical_delta, estimate_extremes};
use serial_monopoly::{DemandCurve, Result, Scalar};

fn main() -> Result<()> {
    let horizon: u64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(20_000);
    let q = DemandCurve::from_pairs([(int(0), int(1)), (int(1), int(0))])?;
    let s = int(1);
    let m = market_points(&q, &s)?;

    let start = Instant::now();
    let trace = run::<f64>(&q, &s, horizon)?;
    let took = start.elapsed();
    let (lo, hi) = estimate_extremes(&trace.records, 0.5)?;
    let widest = trace
        .records
        .iter()
        .map(|r| r.breakpoints)
        .max()
        .unwrap_or(0);
    println!("{horizon} steps in {took:.2?}, at most {widest} breakpoints carried");
    println!(
        "second half: min price {lo:.9} (p_ser {}), max {hi:.12} (p_mon {})",
        m.p_ser, m.p_mon
    );
    println!("jumps to p_mon: {}", count_jumps(&trace.records, &m));

    let p_star = (&m.p_ser + &m.p_mon) / int(2);
    let gaps = empirical_delta(&trace.records, &p_star.to_f64());
    println!(
        "below p*={p_star}: {} visits, longest completed gap {:?}, closed-form bound {}",
        gaps.visits,
        gaps.completed,
        theoretical_delta_bound(&q, &s, &p_star)?
    );
    Ok(())
}
