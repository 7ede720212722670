//! The first days of the uniform market, Q(p) = 1 - p with one unit per day.

use serial_monopoly::dynamics::{init, write_trace_exact_csv};
use serial_monopoly::number::int;
use serial_monopoly::{DemandCurve, Result};

fn main() -> Result<()> {
    let q = DemandCurve::from_pairs([(int(0), int(1)), (int(1), int(0))])?;
    let mut state = init(&q, &int(1))?;
    for _ in 0..6 {
        let demand = state.next_demand();
        let (next, rec) = state.step()?;
        println!(
            "day {}: demand at 0 is {}, price {}, sold {}, {} breakpoints carried",
            rec.t,
            demand.eval(&int(0)),
            rec.price,
            rec.quantity,
            rec.breakpoints
        );
        state = next;
    }

    println!("days 7 to 12 as CSV:");
    let trace = state.run_for(6)?;
    write_trace_exact_csv(&trace.records, std::io::stdout())?;
    Ok(())
}
