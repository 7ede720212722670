//! Optional JSON-RPC block fetcher. Nothing else in the crate needs network
//! access.

use std::time::Duration;

use serde_json::{json, Value};

use super::{Bid, BidBatch};
use crate::error::{Error, Result};
use crate::number::{int, ExactNumber};

/// Environment variable holding the default RPC endpoint.
pub const RPC_URL_ENV: &str = "SM_RPC_URL";

/// One JSON-RPC round trip. Returns the `result` member or a message.
pub trait RpcTransport: Sync {
    fn call(&self, method: &str, params: Value) -> std::result::Result<Value, String>;
}

/// JSON-RPC over HTTP POST.
#[derive(Debug)]
pub struct HttpTransport {
    url: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Self {
            url: url.into(),
            agent,
        }
    }

    /// Endpoint from `SM_RPC_URL`.
    pub fn from_env() -> Result<Self> {
        std::env::var(RPC_URL_ENV)
            .map(Self::new)
            .map_err(|_| Error::Config(format!("no endpoint given and {RPC_URL_ENV} is unset")))
    }
}

impl RpcTransport for HttpTransport {
    fn call(&self, method: &str, params: Value) -> std::result::Result<Value, String> {
        let body = json!({ "jsonrpc": "2.0", "id": 1, "method": method, "params": params });
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(&body)
            .map_err(|e| e.to_string())?;
        let mut reply: Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        if let Some(err) = reply.get("error") {
            return Err(format!("rpc error: {err}"));
        }
        reply
            .get_mut("result")
            .map(Value::take)
            .ok_or_else(|| "reply has no result".to_string())
    }
}

fn hex_u128(raw: &Value) -> Option<u128> {
    let s = raw.as_str()?.strip_prefix("0x")?;
    u128::from_str_radix(s, 16).ok()
}

fn hex_exact(raw: &Value) -> Option<ExactNumber> {
    hex_u128(raw).map(|v| ExactNumber::from_integer(v.into()))
}

/// Number of the chain head.
pub fn latest_block(rpc: &dyn RpcTransport) -> Result<u64> {
    let head = rpc
        .call("eth_blockNumber", json!([]))
        .map_err(|msg| Error::Fetch { block: 0, msg })?;
    hex_u128(&head)
        .and_then(|v| u64::try_from(v).ok())
        .ok_or_else(|| Error::Fetch {
            block: 0,
            msg: format!("bad block number {head}"),
        })
}

fn block_to_batch(number: u64, block: &Value) -> Result<BidBatch> {
    let fail = |msg: String| Error::Fetch { block: number, msg };
    if block.is_null() {
        return Err(fail("block not found".into()));
    }
    let txs = block
        .get("transactions")
        .and_then(Value::as_array)
        .ok_or_else(|| fail("block has no transactions field".into()))?;
    let mut bids = Vec::with_capacity(txs.len());
    for (i, tx) in txs.iter().enumerate() {
        let price = tx
            .get("maxFeePerGas")
            .and_then(hex_exact)
            .or_else(|| tx.get("gasPrice").and_then(hex_exact))
            .ok_or_else(|| fail(format!("transaction {i} has no fee field")))?;
        let quantity = tx
            .get("gas")
            .and_then(hex_exact)
            .ok_or_else(|| fail(format!("transaction {i} has no gas field")))?;
        if quantity > int(0) {
            bids.push(Bid {
                unit_price: price,
                quantity,
                arrival_tag: bids.len() as u64,
            });
        }
    }
    let paid_price = block.get("baseFeePerGas").and_then(hex_exact);
    Ok(BidBatch {
        block_id: number,
        bids,
        paid_price,
    })
}

/// Fetches blocks `first..=last` with full transaction objects. A block with
/// no transactions becomes an empty batch.
pub fn fetch_blocks(rpc: &dyn RpcTransport, first: u64, last: u64) -> Result<Vec<BidBatch>> {
    if first > last {
        return Err(Error::Config(format!("empty block range {first}..={last}")));
    }
    (first..=last)
        .map(|n| {
            let block = rpc
                .call("eth_getBlockByNumber", json!([format!("0x{n:x}"), true]))
                .map_err(|msg| Error::Fetch { block: n, msg })?;
            block_to_batch(n, &block)
        })
        .collect()
}
