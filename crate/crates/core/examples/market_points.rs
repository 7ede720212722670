//! Equilibrium, monopoly and serial points for the three named families.

use serial_monopoly::analytics::{analyze_json, market_points, welfare_ratio};
use serial_monopoly::curve::{approximate_pl, DemandFamilySpec};
use serial_monopoly::number::{decimal_string, int, parse_exact};
use serial_monopoly::Result;

fn main() -> Result<()> {
    let cases = [
        (DemandFamilySpec::uniform(), int(1), 2),
        (
            DemandFamilySpec::Stepped {
                m: int(100),
                eps: parse_exact("1e-6")?,
            },
            int(100),
            2,
        ),
        (DemandFamilySpec::equal_revenue_e2(), int(1), 2_000),
    ];
    for (family, supply, nodes) in cases {
        let q = approximate_pl(&family, nodes)?;
        let m = market_points(&q, &supply)?;
        println!(
            "{:<14} p_eq={:<12} p_mon={:<12} p_ser={:<12} SW_ser/SW_eq={}",
            family.name(),
            decimal_string(&m.p_eq, 8),
            decimal_string(&m.p_mon, 8),
            decimal_string(&m.p_ser, 8),
            decimal_string(&welfare_ratio(&m)?, 8),
        );
    }

    let uniform = approximate_pl(&DemandFamilySpec::uniform(), 2)?;
    let report = analyze_json(&market_points(&uniform, &int(1))?);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
