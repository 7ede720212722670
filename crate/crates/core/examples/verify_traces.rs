//! Every trace check on an exact run, then a seeded sweep over random markets
//! and the corrupted traces each check must reject.

use serial_monopoly::number::int;
use serial_monopoly::verify::{negative_controls, sweep, verify_run, Status};
use serial_monopoly::{DemandCurve, ExactNumber, Result};

fn main() -> Result<()> {
    let q = DemandCurve::from_pairs([(int(0), int(1)), (int(1), int(0))])?;
    let report = verify_run::<ExactNumber>(&q, &int(1), 500)?;
    for c in &report.checks {
        println!(
            "{:<16} {:?} {:?} {}",
            c.name,
            c.kind,
            c.status,
            c.note.as_deref().unwrap_or("")
        );
    }
    println!("report ok: {}", report.ok());

    let outcomes = sweep(20, 100, 7)?;
    let failing = outcomes.iter().filter(|o| !o.failures.is_empty()).count();
    println!(
        "sweep: {} random markets, {failing} with failures",
        outcomes.len()
    );

    for c in negative_controls()? {
        assert_eq!(c.status, Status::Fail);
        let w = c.witness.expect("failing checks carry a witness");
        println!(
            "control {:<16} caught at {:?}: {}",
            c.name, w.step, w.detail
        );
    }
    Ok(())
}
