//! Building demand curves and the three operations the engine relies on.

use serial_monopoly::number::{int, ratio};
use serial_monopoly::{DemandCurve, Result};

fn main() -> Result<()> {
    // Q(p) = 1 - p, plus a block of half a unit valued exactly 3/4
    let uniform = DemandCurve::from_pairs([(int(0), int(1)), (int(1), int(0))])?;
    let block = DemandCurve::from_pairs([(ratio(3, 4), ratio(1, 2)), (ratio(3, 4), int(0))])?;
    let demand = uniform.add(&block);
    println!(
        "breakpoints: {:?}",
        demand
            .points()
            .iter()
            .map(|p| format!("({}, {})", p.price, p.quantity))
            .collect::<Vec<_>>()
    );
    println!(
        "D(3/4) = {}, just above = {}",
        demand.eval(&ratio(3, 4)),
        demand.right_limit(&ratio(3, 4))
    );

    let best = demand.revenue_maximizer(&int(1))?;
    println!(
        "best price {} sells {} for revenue {}",
        best.price, best.quantity, best.revenue
    );

    let left = demand.residual_after_sale(&best.price, &best.quantity)?;
    println!(
        "left over: D(0) = {}, D(1/2) = {}",
        left.eval(&int(0)),
        left.eval(&ratio(1, 2))
    );
    println!(
        "total value {}, left over value {}",
        demand.welfare_above_price(&int(0)),
        left.welfare_above_price(&int(0))
    );
    Ok(())
}
