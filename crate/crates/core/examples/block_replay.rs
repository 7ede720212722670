//! Replays the bundled 50-block fixture with 30 units per block.
//!
//! `cargo run --example block_replay -- path/to/blocks.jsonl 30`

use std::path::PathBuf;

use serial_monopoly::ingest::{parse_blocks, replay, BlockFormat};
use serial_monopoly::number::{decimal_string, parse_exact};
use serial_monopoly::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/blocks50.jsonl")
    });
    let supply = parse_exact(&args.next().unwrap_or_else(|| "30".into()))?;

    let batches = parse_blocks(&path, BlockFormat::from_path(&path)?)?;
    let (_, report) = replay(&batches, &supply)?;
    for b in report.per_block.iter().take(8) {
        println!(
            "block {}: price {}, sold {}{}",
            b.block_id,
            b.serial_price,
            b.serial_quantity,
            if b.rationed { " (rationed)" } else { "" }
        );
    }
    println!("...");
    let show = |x: Option<_>| x.map_or("n/a".to_string(), |r| decimal_string(&r, 6));
    println!(
        "serial revenue {} vs baseline {} (ratio {}), welfare ratio {}, still pending {}",
        report.serial_revenue,
        report.baseline_revenue,
        show(report.revenue_ratio()),
        show(report.welfare_ratio()),
        report.pending
    );
    for c in &report.caveats {
        println!("caveat: {c}");
    }
    Ok(())
}
