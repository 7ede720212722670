//! Bidders who clamp low values to zero and cap high bids at the equilibrium
//! price, against truthful bidding on the same market.

use serial_monopoly::dynamics::run;
use serial_monopoly::number::{int, ratio};
use serial_monopoly::strategic::{
    best_response, equilibrium_gap, uniqueness_evidence, utility_of_bid, value_grid,
    PriceTrajectory,
};
use serial_monopoly::{DemandCurve, ExactNumber, Result};

fn main() -> Result<()> {
    let q = DemandCurve::from_pairs([(int(0), int(1)), (int(1), int(0))])?;
    let s = ratio(3, 4);
    let values = value_grid(&int(1), 101);

    let gap = equilibrium_gap(&q, &s, 200, &values, None)?;
    let prices = gap.trace.prices();
    println!(
        "clamp equilibrium: every price {} ({} days), max regret {}",
        prices[0],
        prices.len(),
        gap.max_regret
    );

    // truthful bidding on Q = 1 - p with one unit per day invites shading
    let truthful = PriceTrajectory::from_records(&run::<ExactNumber>(&q, &int(1), 4)?.records);
    let v = ratio(9, 20);
    let honest = utility_of_bid(&truthful, 1, &v, &v)?;
    let best = best_response(&truthful, 1, &v)?;
    println!(
        "value {v}: bidding it earns {}, bidding {} earns {}",
        honest.utility, best.bid, best.utility
    );

    for probe in uniqueness_evidence(&q, &s, &[ratio(1, 8), ratio(3, 8)], 200, &values)? {
        println!(
            "clamp({}): fluctuates={} over_demand={} max_regret={}",
            probe.threshold, probe.fluctuates, probe.over_demand, probe.max_regret
        );
    }
    Ok(())
}
