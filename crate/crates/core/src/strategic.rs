//! Strategic bidders: time-invariant manipulation of declared values, the
//! dynamics on declared demand, and best responses of patient price takers.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::market_points;
use crate::curve::{Curve, DemandCurve, Point};
use crate::dynamics::{Market, MarketState, StepRecord, Trace, WelfareAccounting};
use crate::error::{domain, Result};
use crate::number::{decimal17, exact_string, int, ratio, ExactNumber, Scalar};

/// Map from true value to declared bid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManipulationFn {
    Identity,
    /// `m(v) = min(v, threshold)`.
    Clamp {
        #[serde(with = "crate::number::serde_exact")]
        threshold: ExactNumber,
    },
    /// Piecewise-linear through `knots`, starting at `(0, 0)` and flat after
    /// the last knot.
    Table {
        knots: Vec<Knot>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    #[serde(with = "crate::number::serde_exact")]
    pub value: ExactNumber,
    #[serde(with = "crate::number::serde_exact")]
    pub bid: ExactNumber,
}

impl ManipulationFn {
    pub fn clamp(threshold: ExactNumber) -> Self {
        Self::Clamp { threshold }
    }

    pub fn table(knots: impl IntoIterator<Item = (ExactNumber, ExactNumber)>) -> Result<Self> {
        let knots = knots
            .into_iter()
            .map(|(value, bid)| Knot { value, bid })
            .collect();
        let m = Self::Table { knots };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Identity => Ok(()),
            Self::Clamp { threshold } if threshold.is_negative() => {
                Err(domain("clamp threshold must be non-negative"))
            }
            Self::Clamp { .. } => Ok(()),
            Self::Table { knots } => {
                let first = knots
                    .first()
                    .ok_or_else(|| domain("manipulation table is empty"))?;
                if !first.value.is_zero() || !first.bid.is_zero() {
                    return Err(domain("manipulation table must start at (0, 0)"));
                }
                for w in knots.windows(2) {
                    if w[1].value <= w[0].value {
                        return Err(domain("manipulation knots need strictly increasing values"));
                    }
                    if w[1].bid < w[0].bid {
                        return Err(domain("manipulation must be monotone"));
                    }
                }
                if knots.iter().any(|k| k.bid > k.value) {
                    return Err(domain("manipulation must not overbid"));
                }
                Ok(())
            }
        }
    }

    /// Knots of the piecewise-linear form; `None` for the identity.
    fn knots(&self) -> Option<Vec<(ExactNumber, ExactNumber)>> {
        match self {
            Self::Identity => None,
            Self::Clamp { threshold } if threshold.is_zero() => Some(vec![(int(0), int(0))]),
            Self::Clamp { threshold } => Some(vec![
                (int(0), int(0)),
                (threshold.clone(), threshold.clone()),
            ]),
            Self::Table { knots } => Some(
                knots
                    .iter()
                    .map(|k| (k.value.clone(), k.bid.clone()))
                    .collect(),
            ),
        }
    }

    /// Declared bid of a user with true value `v`.
    pub fn apply(&self, v: &ExactNumber) -> ExactNumber {
        let Some(knots) = self.knots() else {
            return v.clone();
        };
        let last = knots.last().expect("validated tables are non-empty");
        if *v >= last.0 {
            return last.1.clone();
        }
        let i = knots.partition_point(|k| k.0 <= *v);
        let (a, b) = (&knots[i - 1], &knots[i]);
        &a.1 + (v - &a.0) * (&b.1 - &a.1) / (&b.0 - &a.0)
    }
}

/// Declared demand: the mass of users whose declared bid is at least `d`.
pub fn induced_demand(q: &DemandCurve, m: &ManipulationFn) -> Result<DemandCurve> {
    m.validate()?;
    let Some(knots) = m.knots() else {
        return Ok(q.clone());
    };
    let mut points: Vec<Point<ExactNumber>> = vec![Point::new(int(0), q.max_quantity())];
    for w in knots.windows(2) {
        let ((v0, m0), (v1, m1)) = (&w[0], &w[1]);
        if m0 == m1 {
            points.push(Point::new(m0.clone(), q.eval(v0)));
            points.push(Point::new(m0.clone(), q.eval(v1)));
            continue;
        }
        let to_bid = |v: &ExactNumber| m0 + (v - v0) * (m1 - m0) / (v1 - v0);
        points.push(Point::new(m0.clone(), q.eval(v0)));
        for pt in q
            .points()
            .iter()
            .filter(|pt| pt.price > *v0 && pt.price < *v1)
        {
            points.push(Point::new(to_bid(&pt.price), pt.quantity.clone()));
        }
        points.push(Point::new(m1.clone(), q.eval(v1)));
    }
    let (v_last, m_last) = knots.last().expect("non-empty");
    points.push(Point::new(m_last.clone(), q.eval(v_last)));
    points.push(Point::new(m_last.clone(), int(0)));
    DemandCurve::new(collapse_runs(points))
}

/// Keeps the first and last point of every run sharing one price.
fn collapse_runs(points: Vec<Point<ExactNumber>>) -> Vec<Point<ExactNumber>> {
    let mut out: Vec<Point<ExactNumber>> = Vec::with_capacity(points.len());
    for p in points {
        let n = out.len();
        if n >= 2 && out[n - 1].price == p.price && out[n - 2].price == p.price {
            out.pop();
        }
        out.push(p);
    }
    out
}

/// True-value accounting for demand declared through a manipulation.
///
/// Declared bids on a strictly increasing piece of `m` identify the true
/// value. A flat piece pools a band of true values into one bid level; served
/// units from that level are valued at the band's mean.
#[derive(Debug)]
pub struct ManipulatedWelfare {
    q: DemandCurve,
    knots: Vec<(ExactNumber, ExactNumber)>,
}

impl ManipulatedWelfare {
    pub fn new(q: &DemandCurve, m: &ManipulationFn) -> Result<Option<Self>> {
        m.validate()?;
        Ok(m.knots().map(|knots| Self {
            q: q.clone(),
            knots,
        }))
    }

    /// True value behind declared bid `d` on the increasing piece containing `hint`.
    fn value_on_piece(&self, d: &ExactNumber, hint: &ExactNumber) -> ExactNumber {
        for w in self.knots.windows(2) {
            let ((v0, m0), (v1, m1)) = (&w[0], &w[1]);
            if m0 < m1 && *hint >= *m0 && *hint <= *m1 {
                return v0 + (d - m0) * (v1 - v0) / (m1 - m0);
            }
        }
        d.clone()
    }

    /// Mean true value of users declaring exactly `d`, if `d` is a pooled level.
    fn pooled_mean(&self, d: &ExactNumber) -> Option<ExactNumber> {
        let on_level: Vec<&ExactNumber> = self
            .knots
            .iter()
            .filter(|k| k.1 == *d)
            .map(|k| &k.0)
            .collect();
        let lo = (*on_level.first()?).clone();
        let last_knot = self.knots.last().expect("non-empty");
        let hi = if last_knot.1 == *d {
            None
        } else {
            on_level.last().map(|v| (*v).clone())
        };
        if hi.as_ref() == Some(&lo) {
            return None;
        }
        let (w_hi, q_hi) = match &hi {
            Some(h) => (self.q.welfare_above_price(h), self.q.eval(h)),
            None => (int(0), int(0)),
        };
        let mass = self.q.eval(&lo) - q_hi;
        if mass <= int(0) {
            return Some(lo);
        }
        Some((self.q.welfare_above_price(&lo) - w_hi) / mass)
    }
}

impl WelfareAccounting<ExactNumber> for ManipulatedWelfare {
    fn served_value(&self, served: &Curve<ExactNumber>) -> ExactNumber {
        let levels: Vec<ExactNumber> = self.knots.iter().map(|k| k.1.clone()).collect();
        let mut total = int(0);
        for w in served.points().windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let mass = &a.quantity - &b.quantity;
            if mass.is_zero() {
                continue;
            }
            if a.price == b.price {
                let v = self
                    .pooled_mean(&a.price)
                    .unwrap_or_else(|| self.value_on_piece(&a.price, &a.price));
                total += mass * v;
                continue;
            }
            // mass spread uniformly in bid over [a, b]; split where the inverse changes piece
            let mut cuts = vec![a.price.clone()];
            cuts.extend(
                levels
                    .iter()
                    .filter(|l| **l > a.price && **l < b.price)
                    .cloned(),
            );
            cuts.push(b.price.clone());
            let width = &b.price - &a.price;
            for c in cuts.windows(2) {
                let mid = (&c[0] + &c[1]) * ratio(1, 2);
                let avg = (self.value_on_piece(&c[0], &mid) + self.value_on_piece(&c[1], &mid))
                    * ratio(1, 2);
                total += &mass * (&c[1] - &c[0]) / &width * avg;
            }
        }
        total
    }
}

/// Runs the dynamics on the demand declared under `m`, with welfare measured
/// at true values. When every price earns zero the leader sells at price zero.
pub fn run_strategic(
    q: &DemandCurve,
    supply: &ExactNumber,
    m: &ManipulationFn,
    horizon: u64,
) -> Result<Trace<ExactNumber>> {
    if horizon == 0 {
        return Err(domain("horizon must be at least 1"));
    }
    let declared = induced_demand(q, m)?;
    let mut market = Market::new(declared, supply.clone())?;
    market.accounting = ManipulatedWelfare::new(q, m)?
        .map(|a| Arc::new(a) as Arc<dyn WelfareAccounting<ExactNumber>>);
    market.clear_on_zero_revenue = true;
    MarketState::start(Arc::new(market)).run_for(horizon)
}

/// Prices faced by bidders; entry `i` is the price on day `i + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceTrajectory {
    pub prices: Vec<ExactNumber>,
}

impl PriceTrajectory {
    pub fn new(prices: Vec<ExactNumber>) -> Self {
        Self { prices }
    }

    pub fn from_records(records: &[StepRecord<ExactNumber>]) -> Self {
        Self::new(records.iter().map(|r| r.price.clone()).collect())
    }

    fn suffix(&self, birth: u64) -> Result<&[ExactNumber]> {
        let start = birth
            .checked_sub(1)
            .ok_or_else(|| domain("birth times start at 1"))? as usize;
        if start >= self.prices.len() {
            return Err(domain(format!("no prices on or after day {birth}")));
        }
        Ok(&self.prices[start..])
    }
}

/// Outcome of one bid.
#[derive(Clone, Debug, PartialEq)]
pub struct BidOutcome {
    pub bid: ExactNumber,
    pub utility: ExactNumber,
    /// Day the bid is served, if ever within the trajectory.
    pub served_at: Option<u64>,
}

/// Utility of bidding `bid` with value `v` when born on day `birth`: served on
/// the first day from `birth` on whose price is at most the bid.
pub fn utility_of_bid(
    trajectory: &PriceTrajectory,
    birth: u64,
    v: &ExactNumber,
    bid: &ExactNumber,
) -> Result<BidOutcome> {
    let suffix = trajectory.suffix(birth)?;
    let hit = suffix.iter().position(|p| p <= bid);
    Ok(BidOutcome {
        bid: bid.clone(),
        utility: hit.map_or_else(|| int(0), |i| v - &suffix[i]),
        served_at: hit.map(|i| birth + i as u64),
    })
}

/// Best single bid for a bidder born on day `birth` with value `v`.
///
/// Bidding a running minimum of the suffix pays exactly that price at its
/// first occurrence, so the best serving bid is the suffix minimum. When it
/// does not leave positive surplus the bidder abstains with bid 0.
pub fn best_response(
    trajectory: &PriceTrajectory,
    birth: u64,
    v: &ExactNumber,
) -> Result<BidOutcome> {
    let suffix = trajectory.suffix(birth)?;
    let low = suffix.iter().min().expect("suffix is non-empty");
    if v > low {
        utility_of_bid(trajectory, birth, v, low)
    } else {
        utility_of_bid(trajectory, birth, v, &int(0))
    }
}

/// One value's worst case over birth days.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretRow {
    pub value: ExactNumber,
    pub birth: u64,
    pub equilibrium_bid: ExactNumber,
    pub equilibrium_utility: ExactNumber,
    pub best_bid: ExactNumber,
    pub best_utility: ExactNumber,
    pub regret: ExactNumber,
}

#[derive(Clone, Debug)]
pub struct GapReport {
    pub manipulation: ManipulationFn,
    pub trace: Trace<ExactNumber>,
    pub rows: Vec<RegretRow>,
    pub max_regret: ExactNumber,
    pub caveats: Vec<String>,
}

/// `count` evenly spaced values on `[0, top]`.
pub fn value_grid(top: &ExactNumber, count: usize) -> Vec<ExactNumber> {
    if count <= 1 {
        return vec![top.clone()];
    }
    let n = (count - 1) as i64;
    (0..=n).map(|k| top * ratio(k, n)).collect()
}

/// Regret of bidding `m(v)` against best responses, on the trajectory
/// produced when everyone bids `m(v)`. `m` defaults to `clamp(p_eq)`.
pub fn equilibrium_gap(
    q: &DemandCurve,
    supply: &ExactNumber,
    horizon: u64,
    values: &[ExactNumber],
    m: Option<ManipulationFn>,
) -> Result<GapReport> {
    let m = match m {
        Some(m) => m,
        None => ManipulationFn::clamp(market_points(q, supply)?.p_eq),
    };
    let trace = run_strategic(q, supply, &m, horizon)?;
    let prices = trace.prices();
    let n = prices.len();
    // suffix minima give the best serving price for each birth day
    let mut suffix_min = prices.clone();
    for i in (0..n.saturating_sub(1)).rev() {
        if suffix_min[i + 1] < suffix_min[i] {
            suffix_min[i] = suffix_min[i + 1].clone();
        }
    }
    let rows: Vec<RegretRow> = values
        .par_iter()
        .map(|v| regret_row(&prices, &suffix_min, &m, v))
        .collect();
    let max_regret = rows
        .iter()
        .map(|r| r.regret.clone())
        .max()
        .unwrap_or_else(|| int(0));
    Ok(GapReport {
        manipulation: m,
        trace,
        rows,
        max_regret,
        caveats: vec![format!(
            "finite horizon {horizon}: bidders are scored on days up to the horizon only"
        )],
    })
}

fn regret_row(
    prices: &[ExactNumber],
    suffix_min: &[ExactNumber],
    m: &ManipulationFn,
    v: &ExactNumber,
) -> RegretRow {
    let bid = m.apply(v);
    let n = prices.len();
    let mut next_served: Option<usize> = None;
    let mut worst: Option<RegretRow> = None;
    for i in (0..n).rev() {
        if prices[i] <= bid {
            next_served = Some(i);
        }
        let eq_utility = next_served.map_or_else(|| int(0), |j| v - &prices[j]);
        let (best_bid, best_utility) = if *v > suffix_min[i] {
            (suffix_min[i].clone(), v - &suffix_min[i])
        } else {
            (int(0), int(0))
        };
        let regret = &best_utility - &eq_utility;
        if worst.as_ref().is_none_or(|w| regret >= w.regret) {
            worst = Some(RegretRow {
                value: v.clone(),
                birth: i as u64 + 1,
                equilibrium_bid: bid.clone(),
                equilibrium_utility: eq_utility,
                best_bid,
                best_utility,
                regret,
            });
        }
    }
    worst.expect("trajectory is non-empty")
}

pub const REGRET_HEADER: [&str; 6] = [
    "value",
    "equilibrium_bid",
    "equilibrium_utility",
    "best_bid",
    "best_utility",
    "regret",
];

/// Writes the regret table; `exact` selects rational strings over decimals.
pub fn write_regret_csv<W: Write>(rows: &[RegretRow], out: W, exact: bool) -> Result<()> {
    let fmt = |x: &ExactNumber| if exact { exact_string(x) } else { decimal17(x) };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REGRET_HEADER)?;
    for r in rows {
        w.write_record([
            fmt(&r.value),
            fmt(&r.equilibrium_bid),
            fmt(&r.equilibrium_utility),
            fmt(&r.best_bid),
            fmt(&r.best_utility),
            fmt(&r.regret),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Evidence that a clamp other than at `p_eq` is not an equilibrium.
#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessProbe {
    pub threshold: ExactNumber,
    /// Prices are not constant over the run.
    pub fluctuates: bool,
    pub max_regret: ExactNumber,
    /// Some day's demand at its price exceeded what was sold.
    pub over_demand: bool,
}

impl UniquenessProbe {
    pub fn tripped(&self) -> bool {
        self.fluctuates || self.max_regret > int(0) || self.over_demand
    }
}

/// Runs `clamp(c)` for each threshold and records which checks it trips.
pub fn uniqueness_evidence(
    q: &DemandCurve,
    supply: &ExactNumber,
    thresholds: &[ExactNumber],
    horizon: u64,
    values: &[ExactNumber],
) -> Result<Vec<UniquenessProbe>> {
    thresholds
        .par_iter()
        .map(|c| {
            let gap = equilibrium_gap(
                q,
                supply,
                horizon,
                values,
                Some(ManipulationFn::clamp(c.clone())),
            )?;
            let records = &gap.trace.records;
            let first = &records[0].price;
            Ok(UniquenessProbe {
                threshold: c.clone(),
                fluctuates: records.iter().any(|r| r.price != *first),
                max_regret: gap.max_regret,
                over_demand: records.iter().any(|r| r.demand > r.quantity),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::market_points;
    use crate::dynamics::run;
    use crate::verify::check_sandwich;

    fn uniform() -> DemandCurve {
        DemandCurve::from_pairs([(int(0), int(1)), (int(1), int(0))]).unwrap()
    }

    #[test]
    fn clamp_induces_atom() {
        let d = induced_demand(&uniform(), &ManipulationFn::clamp(ratio(1, 4))).unwrap();
        let expected = DemandCurve::from_pairs([
            (int(0), int(1)),
            (ratio(1, 4), ratio(3, 4)),
            (ratio(1, 4), int(0)),
        ])
        .unwrap();
        assert_eq!(d, expected);
        assert_eq!(d.eval(&ratio(1, 4)), ratio(3, 4));
        assert_eq!(d.eval(&ratio(1, 3)), int(0));
        let zero = induced_demand(&uniform(), &ManipulationFn::clamp(int(0))).unwrap();
        assert_eq!(zero.eval(&int(0)), int(1));
        assert_eq!(zero.right_limit(&int(0)), int(0));
        assert_eq!(
            induced_demand(&uniform(), &ManipulationFn::Identity).unwrap(),
            uniform()
        );
    }

    #[test]
    fn table_with_shading_and_pooling() {
        // bid half the value up to 1/2, then pool everything above at 1/4
        let m = ManipulationFn::table([(int(0), int(0)), (ratio(1, 2), ratio(1, 4))]).unwrap();
        let d = induced_demand(&uniform(), &m).unwrap();
        assert_eq!(d.eval(&ratio(1, 8)), ratio(3, 4));
        assert_eq!(d.eval(&ratio(1, 4)), ratio(1, 2));
        assert_eq!(d.right_limit(&ratio(1, 4)), int(0));
        assert_eq!(m.apply(&ratio(1, 4)), ratio(1, 8));
        assert_eq!(m.apply(&int(3)), ratio(1, 4));
    }

    #[test]
    fn rejects_non_monotone_tables() {
        assert!(ManipulationFn::table([
            (int(0), int(0)),
            (int(1), ratio(1, 2)),
            (int(2), ratio(1, 4))
        ])
        .is_err());
        assert!(ManipulationFn::table([(int(0), int(0)), (int(1), int(2))]).is_err());
        assert!(ManipulationFn::table([(int(1), int(0))]).is_err());
    }

    #[test]
    fn equilibrium_trace_is_flat() {
        let trace = run_strategic(
            &uniform(),
            &ratio(3, 4),
            &ManipulationFn::clamp(ratio(1, 4)),
            100,
        )
        .unwrap();
        for r in &trace.records {
            assert_eq!(
                (r.price.clone(), r.quantity.clone()),
                (ratio(1, 4), ratio(3, 4))
            );
            assert_eq!(r.welfare_delta, ratio(15, 32));
        }
    }

    #[test]
    fn identity_reproduces_truthful_run() {
        let a = run_strategic(&uniform(), &int(1), &ManipulationFn::Identity, 30).unwrap();
        let b = run::<ExactNumber>(&uniform(), &int(1), 30).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn shading_table_accounts_true_values() {
        // everyone bids half their value: served declared mass above 1/4 has true values above 1/2
        let m = ManipulationFn::table([(int(0), int(0)), (int(1), ratio(1, 2))]).unwrap();
        let trace = run_strategic(&uniform(), &int(1), &m, 1).unwrap();
        assert_eq!(trace.records[0].price, ratio(1, 4));
        assert_eq!(trace.records[0].welfare_delta, ratio(3, 8));
    }

    #[test]
    fn zero_clamp_clears_at_price_zero() {
        let trace = run_strategic(&uniform(), &int(1), &ManipulationFn::clamp(int(0)), 3).unwrap();
        for r in &trace.records {
            assert_eq!(r.price, int(0));
            assert_eq!(r.quantity, int(1));
        }
        assert_eq!(trace.records[0].welfare_delta, ratio(1, 2));
    }

    #[test]
    fn low_clamp_respects_declared_sandwich() {
        let c = ratio(1, 5);
        let declared = induced_demand(&uniform(), &ManipulationFn::clamp(c.clone())).unwrap();
        let points = market_points(&declared, &ratio(3, 4)).unwrap();
        let trace = run_strategic(&uniform(), &ratio(3, 4), &ManipulationFn::clamp(c), 50).unwrap();
        let check = check_sandwich(&trace.records, &points);
        assert!(!check.failed(), "{check:?}");
    }

    fn golden() -> PriceTrajectory {
        PriceTrajectory::new(vec![ratio(1, 2), ratio(3, 8), ratio(7, 24), ratio(1, 2)])
    }

    #[test]
    fn best_response_examples() {
        let flat = PriceTrajectory::new(vec![ratio(1, 4); 5]);
        let r = best_response(&flat, 1, &ratio(3, 5)).unwrap();
        assert_eq!((r.bid, r.utility), (ratio(1, 4), ratio(7, 20)));
        assert_eq!(
            best_response(&flat, 2, &ratio(1, 5)).unwrap().utility,
            int(0)
        );
        let r = best_response(&golden(), 1, &ratio(9, 20)).unwrap();
        assert_eq!(
            (r.bid.clone(), r.utility.clone(), r.served_at),
            (ratio(7, 24), ratio(19, 120), Some(3))
        );
        let truthful = utility_of_bid(&golden(), 1, &ratio(9, 20), &ratio(9, 20)).unwrap();
        assert_eq!(truthful.utility, ratio(9, 120));
        assert!(best_response(&golden(), 5, &int(1)).is_err());
    }

    /// Exhaustive search over a bid grid; independent of the suffix-minimum shortcut.
    fn grid_best(t: &PriceTrajectory, birth: u64, v: &ExactNumber, n: i64) -> ExactNumber {
        (0..=n)
            .map(|k| utility_of_bid(t, birth, v, &ratio(k, n)).unwrap().utility)
            .max()
            .unwrap()
    }

    #[test]
    fn best_response_matches_grid_and_is_monotone() {
        let t = golden();
        let mut last = int(-1);
        for k in 0..=40 {
            let v = ratio(k, 40);
            let best = best_response(&t, 1, &v).unwrap().utility;
            assert!(best >= grid_best(&t, 1, &v, 480));
            assert!(best >= last);
            last = best;
        }
    }

    #[test]
    fn equilibrium_has_no_regret() {
        let grid = value_grid(&int(1), 101);
        let report = equilibrium_gap(&uniform(), &ratio(3, 4), 200, &grid, None).unwrap();
        assert_eq!(report.max_regret, int(0));
        for row in &report.rows {
            if row.value < ratio(1, 4) {
                assert_eq!(row.best_utility, int(0));
            }
            if row.value > ratio(1, 4) {
                assert_eq!(row.equilibrium_utility, &row.value - ratio(1, 4));
            }
        }
        let single = equilibrium_gap(&uniform(), &ratio(3, 4), 20, &[ratio(1, 4)], None).unwrap();
        assert_eq!(single.max_regret, int(0));
    }

    #[test]
    fn truthful_bidding_has_regret() {
        let grid = value_grid(&int(1), 101);
        let report = equilibrium_gap(
            &uniform(),
            &ratio(3, 4),
            200,
            &grid,
            Some(ManipulationFn::Identity),
        )
        .unwrap();
        assert!(report.max_regret > int(0));
        let row = report
            .rows
            .iter()
            .find(|r| r.value == ratio(9, 20))
            .unwrap();
        assert!(row.regret > int(0));
    }

    #[test]
    fn other_clamps_trip_a_check() {
        let grid = value_grid(&int(1), 21);
        let cs = [ratio(1, 10), ratio(1, 5), ratio(3, 10), ratio(2, 5)];
        for probe in uniqueness_evidence(&uniform(), &ratio(3, 4), &cs, 100, &grid).unwrap() {
            assert!(probe.tripped(), "{probe:?}");
        }
    }

    #[test]
    fn regret_csv_header() {
        let report = equilibrium_gap(&uniform(), &ratio(3, 4), 5, &[ratio(1, 2)], None).unwrap();
        let mut buf = Vec::new();
        write_regret_csv(&report.rows, &mut buf, true).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "value,equilibrium_bid,equilibrium_utility,best_bid,best_utility,regret\n1/2,1/4,1/4,1/4,1/4,0\n"
        );
    }
}
