//! The serial-monopoly engine.
//!
//! Each day the fresh demand `Q` joins the pent-up demand `Z`, the day's
//! monopolist picks the revenue-maximizing price under the supply cap, and the
//! demand that was priced out carries over to the next day.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::analytics;
use crate::curve::{Curve, DemandCurve, Point};
use crate::error::{domain, Result};
use crate::number::{decimal17, exact_string, ExactNumber, Mode, Scalar};

/// Values the units served in one step at their true willingness to pay.
///
/// The engine prices declared demand; an accounting maps a served profile of
/// declared bids back to true values.
pub trait WelfareAccounting<S: Scalar>: Send + Sync + fmt::Debug {
    /// True value of `served`, a curve giving the served mass with declared bid
    /// at least each price.
    fn served_value(&self, served: &Curve<S>) -> S;
}

/// Float mode only: demand at the chosen price exceeding the quantity sold by
/// at most this relative amount counts as cleared.
pub const CAP_SNAP_REL: f64 = 1e-9;

/// Fixed market parameters shared by every state of a run.
#[derive(Debug)]
pub struct Market<S: Scalar> {
    pub daily: Curve<S>,
    pub supply: S,
    /// When set, welfare is measured through this instead of the declared bids.
    pub accounting: Option<Arc<dyn WelfareAccounting<S>>>,
    /// Sell at price zero when every price yields zero revenue.
    pub clear_on_zero_revenue: bool,
    pub warnings: Vec<String>,
}

impl<S: Scalar> Market<S> {
    /// Market without the strictness and hypothesis checks of [`init`].
    pub fn new(daily: Curve<S>, supply: S) -> Result<Self> {
        if supply.is_zero() || supply.is_negative() {
            return Err(domain("supply must be positive"));
        }
        Ok(Self {
            daily,
            supply,
            accounting: None,
            clear_on_zero_revenue: false,
            warnings: Vec::new(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct MarketState<S: Scalar> {
    pub t: u64,
    /// Pent-up demand left after day `t`.
    pub pent: Curve<S>,
    market: Arc<Market<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord<S> {
    pub t: u64,
    pub price: S,
    pub quantity: S,
    pub revenue: S,
    pub welfare_delta: S,
    /// Breakpoints of the pent-up curve after the step.
    pub breakpoints: usize,
    /// Demand at the chosen price; exceeds `quantity` only when rationed.
    pub demand: S,
}

#[derive(Clone, Debug)]
pub struct Trace<S: Scalar, St = MarketState<S>> {
    pub records: Vec<StepRecord<S>>,
    pub final_state: St,
}

impl<S: Scalar, St> Trace<S, St> {
    pub fn mode(&self) -> Mode {
        S::MODE
    }

    pub fn prices(&self) -> Vec<S> {
        self.records.iter().map(|r| r.price.clone()).collect()
    }

    pub fn quantities(&self) -> Vec<S> {
        self.records.iter().map(|r| r.quantity.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// `D^t(p)` recorded for a fixed set of prices at every step of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeTable<S> {
    pub prices: Vec<S>,
    /// `rows[t - 1][j]` is the day-`t` demand at `prices[j]`.
    pub rows: Vec<Vec<S>>,
}

/// Starts an exact run after checking that `daily` is strictly decreasing.
///
/// A market where monopoly revenue does not exceed equilibrium revenue is
/// accepted with a logged warning.
pub fn init(daily: &DemandCurve, supply: &ExactNumber) -> Result<MarketState<ExactNumber>> {
    init_in(daily, supply)
}

/// Like [`init`], converting the curve into the scalar field `S`.
pub fn init_in<S: Scalar>(daily: &DemandCurve, supply: &ExactNumber) -> Result<MarketState<S>> {
    if daily.is_zero() || !daily.is_strictly_decreasing() {
        return Err(domain(
            "daily demand must be strictly decreasing on its support",
        ));
    }
    let mut market = Market::new(daily.convert::<S>(), S::from_exact(supply))?;
    let (rev_mon, rev_eq) = analytics::revenue_pair(daily, supply)?;
    if rev_mon <= rev_eq {
        let msg = format!(
            "monopoly revenue {} does not exceed equilibrium revenue {}; sandwich bounds do not apply",
            exact_string(&rev_mon),
            exact_string(&rev_eq)
        );
        log::warn!("{msg}");
        market.warnings.push(msg);
    }
    Ok(MarketState::start(Arc::new(market)))
}

impl<S: Scalar> MarketState<S> {
    /// Day zero with no pent-up demand.
    pub fn start(market: Arc<Market<S>>) -> Self {
        Self {
            t: 0,
            pent: Curve::zero(),
            market,
        }
    }

    pub fn market(&self) -> &Market<S> {
        &self.market
    }

    pub fn daily(&self) -> &Curve<S> {
        &self.market.daily
    }

    pub fn supply(&self) -> &S {
        &self.market.supply
    }

    pub fn warnings(&self) -> &[String] {
        &self.market.warnings
    }

    /// Demand faced by the next day's monopolist.
    pub fn next_demand(&self) -> Curve<S> {
        self.pent.add(&self.market.daily)
    }

    /// `D^{t+1}(p)`: the next day's demand at `price`.
    pub fn demand_at(&self, price: &S) -> S {
        self.pent.eval(price) + self.market.daily.eval(price)
    }

    pub fn step(&self) -> Result<(Self, StepRecord<S>)> {
        self.advance(self.next_demand())
    }

    fn advance(&self, demand: Curve<S>) -> Result<(Self, StepRecord<S>)> {
        let supply = &self.market.supply;
        let (price, quantity) = match demand.best_revenue(supply) {
            Some(best) => (best.price, best.quantity),
            None if self.market.clear_on_zero_revenue && !demand.is_zero() => {
                let total = demand.max_quantity();
                let q = if total < *supply {
                    total
                } else {
                    supply.clone()
                };
                (S::zero(), q)
            }
            None => {
                return Err(domain(format!(
                    "day {}: no price yields positive revenue",
                    self.t + 1
                )))
            }
        };
        let at_price = demand.eval(&price);
        // float rounding can leave demand a hair above supply at the cap price;
        // that residue is noise, so the band at the price is cleared
        let cleared = if S::MODE == Mode::Float
            && quantity < at_price
            && (at_price.clone() - quantity.clone()).to_f64()
                <= CAP_SNAP_REL * at_price.to_f64().abs()
        {
            at_price.clone()
        } else {
            quantity.clone()
        };
        let pent = demand.residual_after_sale(&price, &cleared)?;
        let welfare_delta = match &self.market.accounting {
            None => (demand.welfare_above_price(&S::zero()) - pent.welfare_above_price(&S::zero()))
                .clamp_nonneg(),
            Some(acc) => acc.served_value(&served_profile(&demand, &price, &quantity)),
        };
        let record = StepRecord {
            t: self.t + 1,
            revenue: price.clone() * quantity.clone(),
            price,
            quantity,
            welfare_delta,
            breakpoints: pent.breakpoint_count(),
            demand: at_price,
        };
        let next = Self {
            t: self.t + 1,
            pent,
            market: Arc::clone(&self.market),
        };
        Ok((next, record))
    }

    /// Runs `horizon` steps from this state.
    pub fn run_for(&self, horizon: u64) -> Result<Trace<S>> {
        Ok(self.run_probed(horizon, &[])?.0)
    }

    /// Runs `horizon` steps, recording each day's demand at `probes`.
    pub fn run_probed(&self, horizon: u64, probes: &[S]) -> Result<(Trace<S>, ProbeTable<S>)> {
        let mut state = self.clone();
        let mut records = Vec::with_capacity(horizon as usize);
        let mut rows = Vec::with_capacity(if probes.is_empty() {
            0
        } else {
            horizon as usize
        });
        for _ in 0..horizon {
            let demand = state.next_demand();
            if !probes.is_empty() {
                rows.push(probes.iter().map(|p| demand.eval(p)).collect());
            }
            let (next, record) = state.advance(demand)?;
            records.push(record);
            state = next;
        }
        Ok((
            Trace {
                records,
                final_state: state,
            },
            ProbeTable {
                prices: probes.to_vec(),
                rows,
            },
        ))
    }
}

/// Served mass by declared bid: `quantity` at or below `price`, the full
/// demand above it.
fn served_profile<S: Scalar>(demand: &Curve<S>, price: &S, quantity: &S) -> Curve<S> {
    let mut points = vec![
        Point::new(price.clone(), quantity.clone()),
        Point::new(price.clone(), demand.right_limit(price)),
    ];
    points.extend(demand.points().iter().filter(|p| p.price > *price).cloned());
    if points.last().is_some_and(|p| !p.quantity.is_zero()) {
        points.push(Point::new(price.clone(), S::zero()));
    }
    Curve::from_canonical(crate::curve::canonical(points))
}

/// Runs the engine for `horizon` days on `daily` with supply `supply`.
pub fn run<S: Scalar>(daily: &DemandCurve, supply: &ExactNumber, horizon: u64) -> Result<Trace<S>> {
    if horizon == 0 {
        return Err(domain("horizon must be at least 1"));
    }
    init_in::<S>(daily, supply)?.run_for(horizon)
}

/// [`run`] plus the per-day demand at each probe price.
pub fn run_with_probes<S: Scalar>(
    daily: &DemandCurve,
    supply: &ExactNumber,
    horizon: u64,
    probes: &[ExactNumber],
) -> Result<(Trace<S>, ProbeTable<S>)> {
    if horizon == 0 {
        return Err(domain("horizon must be at least 1"));
    }
    let probes: Vec<S> = probes.iter().map(S::from_exact).collect();
    init_in::<S>(daily, supply)?.run_probed(horizon, &probes)
}

pub const TRACE_HEADER: [&str; 6] = [
    "t",
    "price",
    "quantity",
    "revenue",
    "welfare_delta",
    "breakpoints",
];

/// Writes the decimal trace CSV.
pub fn write_trace_csv<S: Scalar, W: Write>(records: &[StepRecord<S>], out: W) -> Result<()> {
    write_records(records, out, decimal17)
}

/// Writes the trace CSV with exact rational strings.
pub fn write_trace_exact_csv<S: Scalar, W: Write>(records: &[StepRecord<S>], out: W) -> Result<()> {
    write_records(records, out, |x: &S| exact_string(&x.to_exact()))
}

fn write_records<S: Scalar, W: Write>(
    records: &[StepRecord<S>],
    out: W,
    fmt: impl Fn(&S) -> String,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            fmt(&r.price),
            fmt(&r.quantity),
            fmt(&r.revenue),
            fmt(&r.welfare_delta),
            r.breakpoints.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Path of the exact companion of a CSV file: `trace.csv` becomes `trace.exact.csv`.
pub fn exact_companion(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.exact.csv"))
}

/// Writes `path` and, in exact mode, its `.exact.csv` companion. Returns the files written.
pub fn save_trace<S: Scalar>(records: &[StepRecord<S>], path: &Path) -> Result<Vec<PathBuf>> {
    write_trace_csv(records, std::fs::File::create(path)?)?;
    let mut written = vec![path.to_path_buf()];
    if S::MODE == Mode::Exact {
        let exact = exact_companion(path);
        write_trace_exact_csv(records, std::fs::File::create(&exact)?)?;
        written.push(exact);
    }
    Ok(written)
}
