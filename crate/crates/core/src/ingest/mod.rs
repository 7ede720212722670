//! Per-block bid data: loading, replay through the serial-monopoly loop, and
//! comparison against the prices blocks actually paid.

mod fetch;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::curve::{Atom, AtomCurve};
use crate::dynamics::{StepRecord, Trace};
use crate::error::{domain, Error, Result};
use crate::number::{decimal17, exact_string, int, parse_exact, ExactNumber};

pub use fetch::{fetch_blocks, latest_block, HttpTransport, RpcTransport, RPC_URL_ENV};

#[derive(Clone, Debug, PartialEq)]
pub struct Bid {
    pub unit_price: ExactNumber,
    pub quantity: ExactNumber,
    /// Position of the bid within its block, in input order.
    pub arrival_tag: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BidBatch {
    pub block_id: u64,
    pub bids: Vec<Bid>,
    /// Price the block actually charged, when the data records it.
    pub paid_price: Option<ExactNumber>,
}

impl BidBatch {
    /// Step demand of this batch, tagged with its position `seq` in the replay.
    pub fn atoms(&self, seq: u64) -> Result<AtomCurve> {
        AtomCurve::new(
            self.bids
                .iter()
                .map(|b| Atom {
                    price: b.unit_price.clone(),
                    quantity: b.quantity.clone(),
                    block: seq,
                    arrival_tag: b.arrival_tag,
                })
                .collect(),
        )
    }

    pub fn total_quantity(&self) -> ExactNumber {
        self.bids.iter().map(|b| b.quantity.clone()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockFormat {
    Jsonl,
    Csv,
}

impl FromStr for BlockFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Self::Jsonl),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Config(format!(
                "unknown block format `{other}` (expected jsonl or csv)"
            ))),
        }
    }
}

impl BlockFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Ok(Self::Jsonl),
            Some("csv") => Ok(Self::Csv),
            _ => Err(Error::Config(format!(
                "cannot infer block format of {}",
                path.display()
            ))),
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn number_at(line: usize, raw: &Value) -> Result<ExactNumber> {
    let text = match raw {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => return Err(parse_err(line, format!("expected a number, found {other}"))),
    };
    parse_exact(&text).map_err(|_| parse_err(line, format!("not a rational number: `{text}`")))
}

fn bid_at(line: usize, tag: u64, price: ExactNumber, quantity: ExactNumber) -> Result<Bid> {
    if price < int(0) {
        return Err(parse_err(line, "negative price"));
    }
    if quantity <= int(0) {
        return Err(parse_err(line, "bid quantity must be positive"));
    }
    Ok(Bid {
        unit_price: price,
        quantity,
        arrival_tag: tag,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonBlock {
    block: u64,
    bids: Vec<(Value, Value)>,
    #[serde(default)]
    paid_price: Option<Value>,
}

/// Reads one block per line: `{"block": 1, "bids": [[10, 3], [5, 4]]}` with an
/// optional `"paid_price"`. Blank lines are ignored; block ids must increase.
pub fn parse_jsonl(text: &str) -> Result<Vec<BidBatch>> {
    let mut out: Vec<BidBatch> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let block: JsonBlock =
            serde_json::from_str(raw).map_err(|e| parse_err(line, e.to_string()))?;
        if out.last().is_some_and(|b| b.block_id >= block.block) {
            return Err(parse_err(
                line,
                format!("block {} out of order", block.block),
            ));
        }
        let bids = block
            .bids
            .iter()
            .enumerate()
            .map(|(tag, (p, q))| bid_at(line, tag as u64, number_at(line, p)?, number_at(line, q)?))
            .collect::<Result<Vec<_>>>()?;
        let paid_price = block
            .paid_price
            .as_ref()
            .map(|p| number_at(line, p))
            .transpose()?;
        out.push(BidBatch {
            block_id: block.block,
            bids,
            paid_price,
        });
    }
    if out.is_empty() {
        return Err(parse_err(0, "no blocks in input"));
    }
    Ok(out)
}

/// Reads `block,price,quantity` rows grouped by block, with an optional header.
pub fn parse_csv(text: &str) -> Result<Vec<BidBatch>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out: Vec<BidBatch> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 1;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        if row.len() != 3 {
            return Err(parse_err(
                line,
                format!("expected 3 fields, found {}", row.len()),
            ));
        }
        if line == 1 && &row[0] == "block" {
            continue;
        }
        let block: u64 = row[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad block id `{}`", &row[0])))?;
        let price = parse_exact(&row[1])
            .map_err(|_| parse_err(line, format!("bad price `{}`", &row[1])))?;
        let quantity = parse_exact(&row[2])
            .map_err(|_| parse_err(line, format!("bad quantity `{}`", &row[2])))?;
        match out.last_mut() {
            Some(b) if b.block_id == block => {
                let tag = b.bids.len() as u64;
                b.bids.push(bid_at(line, tag, price, quantity)?);
            }
            Some(b) if b.block_id > block => {
                return Err(parse_err(line, format!("block {block} out of order")));
            }
            _ => out.push(BidBatch {
                block_id: block,
                bids: vec![bid_at(line, 0, price, quantity)?],
                paid_price: None,
            }),
        }
    }
    if out.is_empty() {
        return Err(parse_err(0, "no blocks in input"));
    }
    Ok(out)
}

pub fn parse_blocks(path: &Path, format: BlockFormat) -> Result<Vec<BidBatch>> {
    let text = fs::read_to_string(path)?;
    match format {
        BlockFormat::Jsonl => parse_jsonl(&text),
        BlockFormat::Csv => parse_csv(&text),
    }
}

/// Writes batches in the JSONL block format with exact strings.
pub fn write_jsonl<W: Write>(batches: &[BidBatch], mut out: W) -> Result<()> {
    for b in batches {
        let bids: Vec<[String; 2]> = b
            .bids
            .iter()
            .map(|x| [exact_string(&x.unit_price), exact_string(&x.quantity)])
            .collect();
        let mut obj = json!({ "block": b.block_id, "bids": bids });
        if let Some(p) = &b.paid_price {
            obj["paid_price"] = Value::String(exact_string(p));
        }
        writeln!(out, "{obj}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockOutcome {
    pub block_id: u64,
    pub serial_price: ExactNumber,
    pub serial_quantity: ExactNumber,
    pub serial_revenue: ExactNumber,
    pub serial_welfare: ExactNumber,
    pub rationed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    /// Each block's recorded paid price.
    Paid,
    /// Largest bid price at which the block's own bids fill the supply.
    MarketClearing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayReport {
    pub supply: ExactNumber,
    pub per_block: Vec<BlockOutcome>,
    pub serial_revenue: ExactNumber,
    pub serial_welfare: ExactNumber,
    pub baseline: BaselineKind,
    pub baseline_revenue: ExactNumber,
    pub baseline_welfare: ExactNumber,
    /// Bid quantity still waiting after the last block.
    pub pending: ExactNumber,
    /// Every block prefix satisfied bids in = served + pending.
    pub conservation_holds: bool,
    pub caveats: Vec<String>,
}

impl ReplayReport {
    pub fn revenue_ratio(&self) -> Option<ExactNumber> {
        (self.baseline_revenue > int(0)).then(|| &self.serial_revenue / &self.baseline_revenue)
    }

    pub fn welfare_ratio(&self) -> Option<ExactNumber> {
        (self.baseline_welfare > int(0)).then(|| &self.serial_welfare / &self.baseline_welfare)
    }

    pub fn to_json(&self) -> Value {
        let num = |x: &ExactNumber| json!({ "exact": exact_string(x), "decimal": decimal17(x) });
        let opt = |x: Option<ExactNumber>| x.map_or(Value::Null, |x| num(&x));
        json!({
            "supply": num(&self.supply),
            "per_block": self.per_block.iter().map(|b| json!({
                "block_id": b.block_id,
                "serial_price": num(&b.serial_price),
                "serial_quantity": num(&b.serial_quantity),
                "serial_revenue": num(&b.serial_revenue),
                "serial_welfare": num(&b.serial_welfare),
                "rationed": b.rationed,
            })).collect::<Vec<_>>(),
            "totals": {
                "serial_revenue": num(&self.serial_revenue),
                "serial_welfare": num(&self.serial_welfare),
                "baseline_revenue": num(&self.baseline_revenue),
                "baseline_welfare": num(&self.baseline_welfare),
            },
            "ratios": {
                "revenue_ratio": opt(self.revenue_ratio()),
                "welfare_ratio": opt(self.welfare_ratio()),
            },
            "baseline": match self.baseline {
                BaselineKind::Paid => "paid",
                BaselineKind::MarketClearing => "market_clearing",
            },
            "pending": num(&self.pending),
            "conservation_holds": self.conservation_holds,
            "caveats": self.caveats,
        })
    }
}

/// Largest bid price at which the batch alone demands at least `supply`, or
/// zero when the whole batch fits.
pub fn market_clearing_price(batch: &BidBatch, supply: &ExactNumber) -> ExactNumber {
    let mut prices: Vec<&ExactNumber> = batch.bids.iter().map(|b| &b.unit_price).collect();
    prices.sort();
    prices.dedup();
    for p in prices.into_iter().rev() {
        let demand: ExactNumber = batch
            .bids
            .iter()
            .filter(|b| b.unit_price >= *p)
            .map(|b| b.quantity.clone())
            .sum();
        if demand >= *supply {
            return p.clone();
        }
    }
    int(0)
}

/// Revenue and bid-valued welfare when each block serves only its own bids
/// at the given price, oldest first, up to `supply`.
pub fn baseline_metrics(
    batches: &[BidBatch],
    paid_prices: &[ExactNumber],
    supply: &ExactNumber,
) -> Result<(ExactNumber, ExactNumber)> {
    if batches.len() != paid_prices.len() {
        return Err(domain(format!(
            "{} blocks but {} paid prices",
            batches.len(),
            paid_prices.len()
        )));
    }
    let mut revenue = int(0);
    let mut welfare = int(0);
    for (seq, (batch, price)) in batches.iter().zip(paid_prices).enumerate() {
        let sale = batch.atoms(seq as u64)?.serve(price, supply);
        revenue += price * &sale.served;
        welfare += sale.value;
    }
    Ok((revenue, welfare))
}

/// Replays blocks through the serial-monopoly loop on step demand.
///
/// Each block's price maximizes revenue over the bid prices of all waiting
/// bids. When that price over-demands the supply, older blocks are served
/// first, then lower arrival tags, and the marginal bid is split. The baseline
/// uses recorded paid prices when every block has one, market-clearing prices
/// otherwise.
pub fn replay(
    batches: &[BidBatch],
    supply: &ExactNumber,
) -> Result<(Trace<ExactNumber, AtomCurve>, ReplayReport)> {
    if *supply <= int(0) {
        return Err(domain("supply must be positive"));
    }
    let mut pending = AtomCurve::default();
    let mut records = Vec::with_capacity(batches.len());
    let mut per_block = Vec::with_capacity(batches.len());
    let mut arrived = int(0);
    let mut served = int(0);
    let mut conservation_holds = true;
    let mut rationed_blocks = Vec::new();
    for (seq, batch) in batches.iter().enumerate() {
        let demand = pending.merge(&batch.atoms(seq as u64)?);
        arrived += batch.total_quantity();
        let price = demand
            .best_price(supply)
            .map_or_else(|| int(0), |b| b.price);
        let at_price = demand.demand_at(&price);
        let sale = demand.serve(&price, supply);
        served += &sale.served;
        if sale.rationed {
            rationed_blocks.push(batch.block_id);
        }
        let revenue = &price * &sale.served;
        records.push(StepRecord {
            t: seq as u64 + 1,
            price: price.clone(),
            quantity: sale.served.clone(),
            revenue: revenue.clone(),
            welfare_delta: sale.value.clone(),
            breakpoints: sale.remaining.len(),
            demand: at_price,
        });
        per_block.push(BlockOutcome {
            block_id: batch.block_id,
            serial_price: price,
            serial_quantity: sale.served,
            serial_revenue: revenue,
            serial_welfare: sale.value,
            rationed: sale.rationed,
        });
        pending = sale.remaining;
        if arrived != &served + &pending.total() {
            conservation_holds = false;
        }
    }
    let (baseline, paid): (BaselineKind, Vec<ExactNumber>) = match batches
        .iter()
        .map(|b| b.paid_price.clone())
        .collect::<Option<Vec<_>>>()
    {
        Some(paid) => (BaselineKind::Paid, paid),
        None => (
            BaselineKind::MarketClearing,
            batches
                .iter()
                .map(|b| market_clearing_price(b, supply))
                .collect(),
        ),
    };
    let (baseline_revenue, baseline_welfare) = baseline_metrics(batches, &paid, supply)?;
    let mut caveats = vec![
        "welfare is counted at bid values, not true values".to_string(),
        "rationing serves older blocks first, then input order within a block".to_string(),
    ];
    if !rationed_blocks.is_empty() {
        caveats.push(format!(
            "over-demand rationed in {} block(s): {:?}",
            rationed_blocks.len(),
            rationed_blocks
        ));
    }
    if baseline == BaselineKind::MarketClearing {
        caveats.push(
            "no paid prices recorded; baseline uses per-block market-clearing prices".to_string(),
        );
    }
    if pending.total() > int(0) {
        caveats.push("bids still pending at the end of the data are not counted".to_string());
    }
    let report = ReplayReport {
        supply: supply.clone(),
        serial_revenue: per_block.iter().map(|b| b.serial_revenue.clone()).sum(),
        serial_welfare: per_block.iter().map(|b| b.serial_welfare.clone()).sum(),
        per_block,
        baseline,
        baseline_revenue,
        baseline_welfare,
        pending: pending.total(),
        conservation_holds,
        caveats,
    };
    Ok((
        Trace {
            records,
            final_state: pending,
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number::ratio;

    fn batch(block: u64, bids: &[(i64, i64)]) -> BidBatch {
        BidBatch {
            block_id: block,
            bids: bids
                .iter()
                .enumerate()
                .map(|(i, (p, q))| Bid {
                    unit_price: int(*p),
                    quantity: int(*q),
                    arrival_tag: i as u64,
                })
                .collect(),
            paid_price: None,
        }
    }

    #[test]
    fn jsonl_and_csv_agree() {
        let a = parse_jsonl("{\"block\": 1, \"bids\": [[10, 3], [5, 4]]}\n").unwrap();
        let b = parse_csv("1,10,3\n1,5,4\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, vec![batch(1, &[(10, 3), (5, 4)])]);
        let with_header = parse_csv("block,price,quantity\n1,10,3\n1,5,4\n").unwrap();
        assert_eq!(with_header, b);
    }

    #[test]
    fn decimals_parse_exactly() {
        let a =
            parse_jsonl(r#"{"block": 7, "bids": [["0.1", 2.5]], "paid_price": "0.05"}"#).unwrap();
        assert_eq!(a[0].bids[0].unit_price, ratio(1, 10));
        assert_eq!(a[0].bids[0].quantity, ratio(5, 2));
        assert_eq!(a[0].paid_price, Some(ratio(1, 20)));
    }

    #[test]
    fn duplicate_prices_are_kept() {
        let a = parse_jsonl("{\"block\": 1, \"bids\": [[5, 2], [5, 3]]}").unwrap();
        assert_eq!(a[0].atoms(0).unwrap().demand_at(&int(5)), int(5));
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_jsonl("{\"block\": 1, \"bids\": []}\n{\"block\": 2, \"bids\": [[1]]}\n")
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_csv("1,10,3\n1,x,4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_csv("2,10,3\n1,5,4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(matches!(
            parse_jsonl("\n\n").unwrap_err(),
            Error::Parse { line: 0, .. }
        ));
        assert!(parse_csv("").is_err());
        assert!(parse_csv("1,10,0\n").is_err());
    }

    #[test]
    fn three_atom_tie_goes_up() {
        let (trace, report) = replay(&[batch(1, &[(10, 3), (5, 4), (2, 5)])], &int(6)).unwrap();
        assert_eq!(
            (
                trace.records[0].price.clone(),
                trace.records[0].quantity.clone()
            ),
            (int(10), int(3))
        );
        assert!(report.conservation_holds);
    }

    #[test]
    fn exact_clearing_leaves_nothing() {
        let batches: Vec<_> = (1..=5).map(|b| batch(b, &[(7, 6)])).collect();
        let (trace, report) = replay(&batches, &int(6)).unwrap();
        assert!(trace
            .records
            .iter()
            .all(|r| r.price == int(7) && r.quantity == int(6)));
        assert_eq!(report.pending, int(0));
    }

    #[test]
    fn two_blocks_with_rationing() {
        let (trace, report) =
            replay(&[batch(1, &[(10, 3)]), batch(2, &[(4, 10)])], &int(6)).unwrap();
        assert_eq!(
            (
                trace.records[0].price.clone(),
                trace.records[0].quantity.clone()
            ),
            (int(10), int(3))
        );
        assert_eq!(
            (
                trace.records[1].price.clone(),
                trace.records[1].quantity.clone()
            ),
            (int(4), int(6))
        );
        assert_eq!(report.pending, int(4));
        assert!(report.per_block[1].rationed);
        assert!(report.conservation_holds);
    }

    #[test]
    fn baseline_examples() {
        let b = [batch(1, &[(10, 3), (5, 4)])];
        assert_eq!(
            baseline_metrics(&b, &[int(5)], &int(6)).unwrap(),
            (int(30), int(45))
        );
        assert_eq!(
            baseline_metrics(&b, &[int(11)], &int(6)).unwrap(),
            (int(0), int(0))
        );
        assert_eq!(
            baseline_metrics(&b, &[int(0)], &int(100)).unwrap(),
            (int(0), int(50))
        );
        assert!(baseline_metrics(&b, &[], &int(6)).is_err());
    }

    #[test]
    fn clearing_price() {
        let b = batch(1, &[(10, 3), (5, 4), (2, 5)]);
        assert_eq!(market_clearing_price(&b, &int(6)), int(5));
        assert_eq!(market_clearing_price(&b, &int(100)), int(0));
    }

    #[test]
    fn jsonl_round_trip() {
        let batches = vec![batch(3, &[(10, 3), (5, 4)]), batch(4, &[(1, 1)])];
        let mut buf = Vec::new();
        write_jsonl(&batches, &mut buf).unwrap();
        assert_eq!(
            parse_jsonl(std::str::from_utf8(&buf).unwrap()).unwrap(),
            batches
        );
    }
}
