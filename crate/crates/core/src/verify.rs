//! Trace checks for the dynamics and welfare results.
//!
//! Exact checks compare without tolerance in exact mode (float mode allows a
//! relative slack of [`FLOAT_CHECK_TOL`]). Asymptotic statements can only be
//! observed on finite windows; those are reported as evidence and do not
//! decide the outcome of a report.

use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{market_points, theoretical_delta_bound, welfare_ratio, MarketPoints};
use crate::curve::{Curve, DemandCurve};
use crate::dynamics::{run_with_probes, ProbeTable, StepRecord};
use crate::error::{domain, Result};
use crate::generate::random_instance;
use crate::number::{decimal17, exact_string, int, ratio, ExactNumber, Mode, Scalar};

/// Relative slack for float-mode comparisons in exact checks.
pub const FLOAT_CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// A statement that holds at every step; a failure fails the report.
    Exact,
    /// A windowed estimate of a limit statement.
    Evidence,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub step: Option<u64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    fn new(name: &str, kind: CheckKind, status: Status) -> Self {
        Self {
            name: name.to_string(),
            kind,
            status,
            witness: None,
            note: None,
        }
    }

    fn pass(name: &str) -> Self {
        Self::new(name, CheckKind::Exact, Status::Pass)
    }

    fn fail(name: &str, step: Option<u64>, detail: String) -> Self {
        Self {
            witness: Some(Witness { step, detail }),
            ..Self::new(name, CheckKind::Exact, Status::Fail)
        }
    }

    fn skipped(name: &str, note: &str) -> Self {
        Self {
            note: Some(note.to_string()),
            ..Self::new(name, CheckKind::Exact, Status::Skipped)
        }
    }

    fn evidence(mut self) -> Self {
        self.kind = CheckKind::Evidence;
        self
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub horizon: u64,
    pub mode: Mode,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    /// True when no exact check failed.
    pub fn ok(&self) -> bool {
        !self
            .checks
            .iter()
            .any(|c| c.kind == CheckKind::Exact && c.failed())
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn same<S: Scalar>(a: &S, b: &S) -> bool {
    match S::MODE {
        Mode::Exact => a == b,
        Mode::Float => {
            let (a, b) = (a.to_f64(), b.to_f64());
            (a - b).abs() <= FLOAT_CHECK_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
        }
    }
}

fn at_most<S: Scalar>(a: &S, b: &S) -> bool {
    *a <= *b || same(a, b)
}

fn show<S: Scalar>(x: &S) -> String {
    match S::MODE {
        Mode::Exact => exact_string(&x.to_exact()),
        Mode::Float => decimal17(x),
    }
}

/// `p_ser <= p^t <= p_mon` at every step.
pub fn check_sandwich<S: Scalar>(records: &[StepRecord<S>], points: &MarketPoints) -> CheckResult {
    const NAME: &str = "sandwich";
    if !points.has_gap() {
        return CheckResult::skipped(NAME, "monopoly revenue does not exceed equilibrium revenue");
    }
    let (lo, hi) = (S::from_exact(&points.p_ser), S::from_exact(&points.p_mon));
    for r in records {
        if !at_most(&lo, &r.price) || !at_most(&r.price, &hi) {
            return CheckResult::fail(
                NAME,
                Some(r.t),
                format!(
                    "price {} outside [{}, {}]",
                    show(&r.price),
                    show(&lo),
                    show(&hi)
                ),
            );
        }
    }
    CheckResult::pass(NAME)
}

/// Every step either returns to `p_mon` or lowers the price.
pub fn check_descent_or_jump<S: Scalar>(
    records: &[StepRecord<S>],
    points: &MarketPoints,
) -> CheckResult {
    const NAME: &str = "descent_or_jump";
    let p_mon = S::from_exact(&points.p_mon);
    for w in records.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let jump = same(&cur.price, &p_mon);
        let descent = cur.price < prev.price && !same(&cur.price, &prev.price);
        if !jump && !descent {
            return CheckResult::fail(
                NAME,
                Some(cur.t),
                format!(
                    "price {} after {} is neither p_mon nor lower",
                    show(&cur.price),
                    show(&prev.price)
                ),
            );
        }
    }
    CheckResult::pass(NAME)
}

/// Every step earns at least the one-shot monopoly revenue.
pub fn check_revenue_floor<S: Scalar>(
    records: &[StepRecord<S>],
    points: &MarketPoints,
) -> CheckResult {
    const NAME: &str = "revenue_floor";
    let floor = S::from_exact(&points.rev_mon);
    for r in records {
        if !at_most(&floor, &r.revenue) {
            return CheckResult::fail(
                NAME,
                Some(r.t),
                format!(
                    "revenue {} below monopoly revenue {}",
                    show(&r.revenue),
                    show(&floor)
                ),
            );
        }
    }
    CheckResult::pass(NAME)
}

/// Below `p_ser`, everything sold so far is exactly the accumulated fresh
/// demand minus what is still waiting, and demand differences grow linearly.
///
/// `probes` must hold the day-`t` demand at each probe price; any probe equal
/// to `p_ser` is used as the reference for the linear-growth identity.
pub fn check_conservation<S: Scalar>(
    records: &[StepRecord<S>],
    probes: &ProbeTable<S>,
    daily: &Curve<S>,
    points: &MarketPoints,
) -> Result<CheckResult> {
    const NAME: &str = "conservation";
    let p_ser = S::from_exact(&points.p_ser);
    if let Some(p) = probes.prices.iter().find(|p| **p > p_ser) {
        return Err(domain(format!("probe price {} exceeds p_ser", show(p))));
    }
    if probes.rows.len() != records.len() {
        return Err(domain("probe table does not cover the trace"));
    }
    let reference = probes.prices.iter().position(|p| *p == p_ser);
    let fresh: Vec<S> = probes.prices.iter().map(|p| daily.eval(p)).collect();
    let mut sold = S::zero();
    for (i, (r, row)) in records.iter().zip(&probes.rows).enumerate() {
        let t = S::from_i64(i as i64 + 1);
        for (j, p) in probes.prices.iter().enumerate() {
            let expected = t.clone() * fresh[j].clone() - row[j].clone();
            if !same(&sold, &expected) {
                return Ok(CheckResult::fail(
                    NAME,
                    Some(r.t),
                    format!(
                        "at p={}: sold before day {} is {}, expected {}",
                        show(p),
                        r.t,
                        show(&sold),
                        show(&expected)
                    ),
                ));
            }
            if let Some(k) = reference {
                if *p < p_ser {
                    let lhs = row[j].clone() - row[k].clone();
                    let rhs = t.clone() * (fresh[j].clone() - fresh[k].clone());
                    if !same(&lhs, &rhs) {
                        return Ok(CheckResult::fail(
                            NAME,
                            Some(r.t),
                            format!(
                                "at p={}: D(p) - D(p_ser) = {}, expected {}",
                                show(p),
                                show(&lhs),
                                show(&rhs)
                            ),
                        ));
                    }
                }
            }
        }
        sold = sold + r.quantity.clone();
    }
    let mut result = CheckResult::pass(NAME);
    if reference.is_none() {
        result =
            result.with_note("p_ser not probed; linear-growth identity not checked".to_string());
    }
    Ok(result)
}

/// Minimum and maximum price over the trailing `window_fraction` of the trace.
pub fn estimate_extremes<S: Scalar>(
    records: &[StepRecord<S>],
    window_fraction: f64,
) -> Result<(S, S)> {
    if records.is_empty() {
        return Err(domain("empty trace"));
    }
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(domain("window fraction must lie in (0, 1]"));
    }
    let len = ((records.len() as f64 * window_fraction).ceil() as usize).clamp(1, records.len());
    let window = &records[records.len() - len..];
    let mut lo = window[0].price.clone();
    let mut hi = window[0].price.clone();
    for r in &window[1..] {
        if r.price < lo {
            lo = r.price.clone();
        }
        if r.price > hi {
            hi = r.price.clone();
        }
    }
    Ok((lo, hi))
}

/// Gaps between visits at or below a price threshold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GapSummary {
    /// Largest gap between consecutive visits, counting the trace start as a
    /// visit at step 0. `None` when nothing qualifies.
    pub completed: Option<u64>,
    /// Step of the visit that closes the largest completed gap.
    pub closed_at: Option<u64>,
    /// Steps after the last visit; this gap has not closed yet.
    pub trailing_open: u64,
    pub visits: u64,
}

impl GapSummary {
    pub fn max_gap(&self) -> u64 {
        self.completed.unwrap_or(0).max(self.trailing_open)
    }
}

pub fn empirical_delta<S: Scalar>(records: &[StepRecord<S>], threshold: &S) -> GapSummary {
    let mut last = 0u64;
    let mut completed: Option<u64> = None;
    let mut closed_at = None;
    let mut visits = 0;
    for (i, r) in records.iter().enumerate() {
        let t = i as u64 + 1;
        if at_most(&r.price, threshold) {
            let gap = t - last;
            if completed.is_none_or(|g| gap > g) {
                completed = Some(gap);
                closed_at = Some(r.t);
            }
            last = t;
            visits += 1;
        }
    }
    GapSummary {
        completed,
        closed_at,
        trailing_open: records.len() as u64 - last,
        visits,
    }
}

/// Number of steps priced at `p_mon`.
pub fn count_jumps<S: Scalar>(records: &[StepRecord<S>], points: &MarketPoints) -> usize {
    let p_mon = S::from_exact(&points.p_mon);
    records.iter().filter(|r| same(&r.price, &p_mon)).count()
}

/// Serial welfare is at least half the optimum, at least monopoly welfare,
/// and at least optimum minus monopoly revenue.
pub fn check_welfare_bound(points: &MarketPoints) -> Result<CheckResult> {
    const NAME: &str = "welfare_bound";
    let ratio_value = welfare_ratio(points)?;
    let half = ratio(1, 2);
    let detail = if ratio_value < half {
        Some(format!(
            "SW_ser/SW_eq = {} < 1/2",
            exact_string(&ratio_value)
        ))
    } else if points.sw_ser < points.sw_mon {
        Some(format!(
            "SW_ser {} < SW_mon {}",
            exact_string(&points.sw_ser),
            exact_string(&points.sw_mon)
        ))
    } else if points.sw_ser < &points.sw_eq - &points.rev_mon {
        Some(format!(
            "SW_ser {} < SW_eq - REV_mon {}",
            exact_string(&points.sw_ser),
            exact_string(&(&points.sw_eq - &points.rev_mon))
        ))
    } else {
        None
    };
    Ok(match detail {
        Some(d) => CheckResult::fail(NAME, None, d),
        None => CheckResult::pass(NAME).with_note(format!("ratio {}", exact_string(&ratio_value))),
    })
}

/// Completed gaps below `(p_ser + p_mon) / 2` stay within the closed-form bound.
pub fn check_delta_bound<S: Scalar>(
    records: &[StepRecord<S>],
    daily: &DemandCurve,
    points: &MarketPoints,
) -> Result<CheckResult> {
    const NAME: &str = "delta_bound";
    if !points.has_gap() {
        return Ok(CheckResult::skipped(
            NAME,
            "monopoly revenue does not exceed equilibrium revenue",
        ));
    }
    if points.p_ser >= points.p_mon {
        return Ok(CheckResult::skipped(
            NAME,
            "serial and monopoly prices coincide",
        ));
    }
    let p_star = (&points.p_ser + &points.p_mon) * ratio(1, 2);
    let bound = theoretical_delta_bound(daily, &points.supply, &p_star)?;
    let gaps = empirical_delta(records, &S::from_exact(&p_star));
    let note = format!(
        "p*={} bound={} completed={:?} trailing_open={} visits={}",
        exact_string(&p_star),
        bound,
        gaps.completed,
        gaps.trailing_open,
        gaps.visits
    );
    Ok(match gaps.completed {
        Some(g) if BigInt::from(g) > bound => CheckResult::fail(NAME, gaps.closed_at, note),
        _ => CheckResult::pass(NAME).with_note(note),
    })
}

/// Thresholds for the windowed estimates of limit statements.
#[derive(Clone, Debug)]
pub struct EvidenceTolerances {
    pub window_fraction: f64,
    /// Relative distance allowed between the window maximum and `p_mon`.
    pub sup_rel: f64,
    /// Relative distance allowed between the window minimum and `p_ser`.
    pub inf_rel: f64,
    pub min_jumps: usize,
}

impl EvidenceTolerances {
    pub fn for_horizon(horizon: u64) -> Self {
        Self {
            window_fraction: 0.5,
            sup_rel: 1e-9,
            inf_rel: 0.01,
            min_jumps: (horizon / 1000).clamp(1, 100) as usize,
        }
    }
}

/// Window extremes and jump count as evidence for the limit statements.
pub fn asymptotic_evidence<S: Scalar>(
    records: &[StepRecord<S>],
    points: &MarketPoints,
    tol: &EvidenceTolerances,
) -> Result<Vec<CheckResult>> {
    if !points.has_gap() {
        return Ok(vec![
            CheckResult::skipped("window_sup", "no monopoly gap").evidence(),
            CheckResult::skipped("window_inf", "no monopoly gap").evidence(),
            CheckResult::skipped("jumps", "no monopoly gap").evidence(),
        ]);
    }
    let (lo, hi) = estimate_extremes(records, tol.window_fraction)?;
    let (p_ser, p_mon) = (points.p_ser.to_f64(), points.p_mon.to_f64());
    let rel = |x: f64, target: f64| (x - target).abs() / target.abs();
    let graded = |name: &str, ok: bool, detail: String| {
        let r = if ok {
            CheckResult::pass(name).with_note(detail)
        } else {
            CheckResult::fail(name, None, detail)
        };
        r.evidence()
    };
    let sup_gap = rel(hi.to_f64(), p_mon);
    let inf_gap = rel(lo.to_f64(), p_ser);
    let jumps = count_jumps(records, points);
    Ok(vec![
        graded(
            "window_sup",
            sup_gap <= tol.sup_rel,
            format!(
                "max {} vs p_mon {} (relative {:e})",
                show(&hi),
                exact_string(&points.p_mon),
                sup_gap
            ),
        ),
        graded(
            "window_inf",
            inf_gap <= tol.inf_rel,
            format!(
                "min {} vs p_ser {} (relative {:e})",
                show(&lo),
                exact_string(&points.p_ser),
                inf_gap
            ),
        ),
        graded(
            "jumps",
            jumps >= tol.min_jumps,
            format!("{jumps} steps at p_mon (threshold {})", tol.min_jumps),
        ),
    ])
}

/// Ten evenly spaced prices in `[0, p_ser)` followed by `p_ser` itself.
pub fn conservation_probes(points: &MarketPoints) -> Vec<ExactNumber> {
    let mut probes: Vec<ExactNumber> = (0..10).map(|k| &points.p_ser * ratio(k, 10)).collect();
    probes.push(points.p_ser.clone());
    probes
}

/// Runs the dynamics and every check on `daily` with supply `supply`.
pub fn verify_run<S: Scalar>(
    daily: &DemandCurve,
    supply: &ExactNumber,
    horizon: u64,
) -> Result<VerifyReport> {
    let points = market_points(daily, supply)?;
    let probes = conservation_probes(&points);
    let (trace, table) = run_with_probes::<S>(daily, supply, horizon, &probes)?;
    let records = &trace.records;
    let mut checks = vec![
        check_sandwich(records, &points),
        check_descent_or_jump(records, &points),
        check_revenue_floor(records, &points),
        check_conservation(records, &table, trace.final_state.daily(), &points)?,
        check_welfare_bound(&points)?,
        check_delta_bound(records, daily, &points)?,
    ];
    checks.extend(asymptotic_evidence(
        records,
        &points,
        &EvidenceTolerances::for_horizon(horizon),
    )?);
    Ok(VerifyReport {
        horizon,
        mode: S::MODE,
        checks,
    })
}

/// Outcome of one random instance in [`sweep`].
#[derive(Clone, Debug, Serialize)]
pub struct SweepOutcome {
    pub index: usize,
    pub breakpoints: usize,
    pub welfare_ratio: String,
    pub failures: Vec<CheckResult>,
}

/// Runs `count` random instances for `horizon` exact steps each and
/// collects every failing check. Deterministic in `seed`.
pub fn sweep(count: usize, horizon: u64, seed: u64) -> Result<Vec<SweepOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instances: Vec<(DemandCurve, ExactNumber)> =
        (0..count).map(|_| random_instance(&mut rng)).collect();
    instances
        .par_iter()
        .enumerate()
        .map(|(index, (q, s))| {
            let report = verify_run::<ExactNumber>(q, s, horizon)?;
            let points = market_points(q, s)?;
            Ok(SweepOutcome {
                index,
                breakpoints: q.breakpoint_count(),
                welfare_ratio: exact_string(&welfare_ratio(&points)?),
                failures: report
                    .checks
                    .into_iter()
                    .filter(|c| c.kind == CheckKind::Exact && c.failed())
                    .collect(),
            })
        })
        .collect()
}

/// Each exact check run against a trace corrupted to violate it. Every
/// returned result is expected to fail with a witness.
pub fn negative_controls() -> Result<Vec<CheckResult>> {
    let q = DemandCurve::from_pairs([(int(0), int(1)), (int(1), int(0))])?;
    let s = int(1);
    let points = market_points(&q, &s)?;
    let probes = conservation_probes(&points);
    let (trace, table) = run_with_probes::<ExactNumber>(&q, &s, 8, &probes)?;
    let mut out = Vec::new();

    let mut low = trace.records.clone();
    low[2].price = ratio(1, 8);
    out.push(check_sandwich(&low, &points));

    let mut stall = trace.records.clone();
    stall[2].price = stall[1].price.clone();
    out.push(check_descent_or_jump(&stall, &points));

    let mut cheap = trace.records.clone();
    cheap[1].revenue = ratio(1, 5);
    out.push(check_revenue_floor(&cheap, &points));

    let mut leak = trace.records.clone();
    leak[1].quantity += ratio(1, 100);
    out.push(check_conservation(
        &leak,
        &table,
        trace.final_state.daily(),
        &points,
    )?);

    let mut bad_points = points.clone();
    bad_points.sw_ser = ratio(1, 5);
    out.push(check_welfare_bound(&bad_points)?);

    // 200 steps stuck at p_mon before the first visit below p*
    let mut gapped: Vec<_> = (1..=200u64)
        .map(|t| StepRecord {
            t,
            ..trace.records[0].clone()
        })
        .collect();
    gapped.push(StepRecord {
        t: 201,
        price: ratio(1, 4),
        ..trace.records[0].clone()
    });
    out.push(check_delta_bound(&gapped, &q, &points)?);
    Ok(out)
}
