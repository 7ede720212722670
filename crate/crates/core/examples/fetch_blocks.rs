//! Pulls recent blocks from a JSON-RPC node and replays them.
//!
//! `SM_RPC_URL=https://node.example cargo run --example fetch_blocks -- 5`

use serial_monopoly::ingest::{
    fetch_blocks, latest_block, replay, write_jsonl, HttpTransport, RPC_URL_ENV,
};
use serial_monopoly::number::int;
use serial_monopoly::Result;

fn main() -> Result<()> {
    if std::env::var(RPC_URL_ENV).is_err() {
        eprintln!("set {RPC_URL_ENV} to a JSON-RPC endpoint to run this example");
        return Ok(());
    }
    let count: u64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(5);
    let rpc = HttpTransport::from_env()?;
    let head = latest_block(&rpc)?;
    let batches = fetch_blocks(&rpc, head.saturating_sub(count - 1), head)?;
    write_jsonl(&batches, std::io::stdout())?;

    // one block's gas limit order of magnitude as supply
    let (_, report) = replay(&batches, &int(30_000_000))?;
    println!("{}", serde_json::to_string_pretty(&report.to_json())?);
    Ok(())
}
