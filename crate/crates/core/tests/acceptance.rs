//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to see
//! the table.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use serial_monopoly::analytics::{market_points, theoretical_delta_bound, welfare_ratio};
use serial_monopoly::curve::{approximate_pl, DemandFamilySpec};
use serial_monopoly::dynamics::run;
use serial_monopoly::generate::random_instance;
use serial_monopoly::ingest::{
    market_clearing_price, parse_blocks, replay, BaselineKind, BlockFormat,
};
use serial_monopoly::number::{int, parse_exact, ratio};
use serial_monopoly::strategic::{
    best_response, equilibrium_gap, run_strategic, utility_of_bid, value_grid, ManipulationFn,
    PriceTrajectory,
};
use serial_monopoly::verify::{
    count_jumps, empirical_delta, estimate_extremes, negative_controls, verify_run,
};
use serial_monopoly::{DemandCurve, ExactNumber, Scalar};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn uniform() -> DemandCurve {
    DemandCurve::from_pairs([(int(0), int(1)), (int(1), int(0))]).unwrap()
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:?}, limit {limit:?}"))?;
    Ok(took)
}

fn golden_sequence() -> Outcome {
    let start = Instant::now();
    let trace = run::<ExactNumber>(&uniform(), &int(1), 4).map_err(|e| e.to_string())?;
    let took = within(Duration::from_secs(1), start)?;
    ensure(
        trace.prices() == [ratio(1, 2), ratio(3, 8), ratio(7, 24), ratio(1, 2)],
        format!("prices {:?}", trace.prices()),
    )?;
    ensure(
        trace.quantities() == [ratio(1, 2), ratio(3, 4), ratio(7, 8), ratio(1, 2)],
        format!("quantities {:?}", trace.quantities()),
    )?;
    Ok(format!(
        "prices 1/2 3/8 7/24 1/2, quantities 1/2 3/4 7/8 1/2 in {took:?}"
    ))
}

fn market_points_exact() -> Outcome {
    let m = market_points(&uniform(), &int(1)).map_err(|e| e.to_string())?;
    let got = [
        m.p_mon.clone(),
        m.q_mon.clone(),
        m.p_ser.clone(),
        m.q_ser.clone(),
        m.sw_eq.clone(),
        m.sw_mon.clone(),
        m.sw_ser.clone(),
    ];
    let want = [
        ratio(1, 2),
        ratio(1, 2),
        ratio(1, 4),
        ratio(3, 4),
        ratio(1, 2),
        ratio(3, 8),
        ratio(15, 32),
    ];
    ensure(got == want, format!("got {got:?}"))?;
    Ok("p_mon=1/2 q_mon=1/2 p_ser=1/4 q_ser=3/4 SW_eq=1/2 SW_mon=3/8 SW_ser=15/32".into())
}

fn welfare_ratios() -> Outcome {
    let r = welfare_ratio(&market_points(&uniform(), &int(1)).unwrap()).unwrap();
    ensure(r == ratio(15, 16), format!("uniform ratio {r}"))?;

    let stepped = approximate_pl(
        &DemandFamilySpec::Stepped {
            m: int(100),
            eps: parse_exact("1e-6").unwrap(),
        },
        2,
    )
    .unwrap();
    let rs = welfare_ratio(&market_points(&stepped, &int(100)).unwrap())
        .unwrap()
        .to_f64();
    ensure(
        (rs - 101.0 / 200.0).abs() <= 1e-3,
        format!("stepped ratio {rs}"),
    )?;

    let er = approximate_pl(&DemandFamilySpec::equal_revenue_e2(), 10_000).unwrap();
    let re = welfare_ratio(&market_points(&er, &int(1)).unwrap())
        .unwrap()
        .to_f64();
    ensure(re >= 0.99, format!("equal-revenue ratio {re}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..200 {
        let (q, s) = random_instance(&mut rng);
        let m = market_points(&q, &s).unwrap();
        let ratio_i = welfare_ratio(&m).unwrap();
        ensure(
            ratio_i >= ratio(1, 2),
            format!("instance {i}: ratio {ratio_i}"),
        )?;
        ensure(
            m.sw_ser >= m.sw_mon,
            format!("instance {i}: SW_ser < SW_mon"),
        )?;
        ensure(
            m.sw_ser >= &m.sw_eq - &m.rev_mon,
            format!("instance {i}: SW_ser < SW_eq - REV_mon"),
        )?;
    }
    Ok(format!(
        "uniform 15/16, stepped {rs:.9}, equal-revenue {re:.9}, 200/200 random instances"
    ))
}

fn exact_trace_checks() -> Outcome {
    let start = Instant::now();
    let report = verify_run::<ExactNumber>(&uniform(), &int(1), 2000).map_err(|e| e.to_string())?;
    let took = within(Duration::from_secs(10), start)?;
    for name in ["sandwich", "descent_or_jump", "conservation"] {
        let c = report.get(name).ok_or(format!("missing check {name}"))?;
        ensure(c.passed(), format!("{name}: {:?}", c.witness))?;
    }
    Ok(format!(
        "sandwich, descent_or_jump, conservation pass on T=2000 exact in {took:?}"
    ))
}

fn asymptotics() -> Outcome {
    let q = uniform();
    let s = int(1);
    let m = market_points(&q, &s).unwrap();
    let start = Instant::now();
    let trace = run::<f64>(&q, &s, 100_000).map_err(|e| e.to_string())?;
    let took = within(Duration::from_secs(60), start)?;
    let records = &trace.records;

    let (lo, hi) = estimate_extremes(records, 0.5).map_err(|e| e.to_string())?;
    let p_mon = m.p_mon.to_f64();
    let p_ser = m.p_ser.to_f64();
    ensure(
        (hi - p_mon).abs() <= 1e-9 * p_mon,
        format!("trailing max {hi}"),
    )?;
    ensure(
        (lo - p_ser).abs() <= 0.01 * p_ser,
        format!("trailing min {lo}"),
    )?;
    let jumps = count_jumps(records, &m);
    ensure(jumps >= 100, format!("{jumps} jumps"))?;

    let p_star = (&m.p_ser + &m.p_mon) / int(2);
    let bound = theoretical_delta_bound(&q, &s, &p_star).map_err(|e| e.to_string())?;
    let at_half = theoretical_delta_bound(&q, &s, &ratio(1, 2)).map_err(|e| e.to_string())?;
    let gaps = empirical_delta(records, &p_star.to_f64());
    let gap = gaps.completed.ok_or("no completed gap below p*")?;
    ensure(
        gap <= bound.clone().try_into().unwrap_or(u64::MAX),
        format!("gap {gap} > bound {bound}"),
    )?;
    ensure(
        at_half == 25.into(),
        format!("bound at p*=1/2 is {at_half}"),
    )?;
    ensure(gap <= 25, format!("gap {gap} exceeds 25"))?;

    let exact = run::<ExactNumber>(&q, &s, 2000).map_err(|e| e.to_string())?;
    for (e, f) in exact.records.iter().zip(records) {
        let (pe, pf) = (e.price.to_f64(), f.price);
        ensure(
            (pe - pf).abs() <= 1e-9 * pe.abs(),
            format!("step {}: exact {pe} float {pf}", e.t),
        )?;
        let (qe, qf) = (e.quantity.to_f64(), f.quantity);
        ensure(
            (qe - qf).abs() <= 1e-9 * qe.abs(),
            format!("step {}: exact q {qe} float q {qf}", e.t),
        )?;
    }
    Ok(format!(
        "T=1e5 float in {took:?}: max {hi:.12}, min {lo:.9}, {jumps} jumps, max completed gap {gap} <= bound {bound} at p*=3/8 \
         and <= 25 (the bound at p*=1/2), prefix matches exact T=2000"
    ))
}

fn equilibrium() -> Outcome {
    let s = ratio(3, 4);
    let trace = run_strategic(&uniform(), &s, &ManipulationFn::clamp(ratio(1, 4)), 1000)
        .map_err(|e| e.to_string())?;
    ensure(trace.records.len() == 1000, "short trace")?;
    for r in &trace.records {
        ensure(
            r.price == ratio(1, 4) && r.quantity == s,
            format!("step {}: ({}, {})", r.t, r.price, r.quantity),
        )?;
    }
    let gap = equilibrium_gap(&uniform(), &s, 1000, &value_grid(&int(1), 101), None)
        .map_err(|e| e.to_string())?;
    ensure(
        gap.max_regret == int(0),
        format!("max regret {}", gap.max_regret),
    )?;
    Ok("1000 steps at (1/4, 3/4); max regret 0 over 101 values".into())
}

fn deviation_witness() -> Outcome {
    let traj =
        PriceTrajectory::from_records(&run::<ExactNumber>(&uniform(), &int(1), 4).unwrap().records);
    let v = ratio(9, 20);
    let best = best_response(&traj, 1, &v).map_err(|e| e.to_string())?;
    let truthful = utility_of_bid(&traj, 1, &v, &v).map_err(|e| e.to_string())?;
    ensure(best.bid == ratio(7, 24), format!("best bid {}", best.bid))?;
    ensure(
        best.utility == ratio(19, 120),
        format!("best utility {}", best.utility),
    )?;
    ensure(
        truthful.utility == ratio(9, 120),
        format!("truthful utility {}", truthful.utility),
    )?;
    let gain = &best.utility - &truthful.utility;
    ensure(gain == ratio(1, 12), format!("gain {gain}"))?;
    let grid_best = (0..=10_000i64)
        .map(|k| {
            utility_of_bid(&traj, 1, &v, &ratio(k, 10_000))
                .unwrap()
                .utility
        })
        .max()
        .unwrap();
    ensure(grid_best == best.utility, format!("grid best {grid_best}"))?;
    Ok("bid 7/24 earns 19/120 vs truthful 9/120, gain 1/12; 10^4-bid grid agrees".into())
}

fn replay_pipeline() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let three = parse_blocks(&dir.join("three_atoms.jsonl"), BlockFormat::Jsonl)
        .map_err(|e| e.to_string())?;
    let (trace, _) = replay(&three, &int(6)).map_err(|e| e.to_string())?;
    let r = &trace.records[0];
    ensure(
        (r.price.clone(), r.quantity.clone()) == (int(10), int(3)),
        format!("({}, {})", r.price, r.quantity),
    )?;

    let supply = int(30);
    let fifty =
        parse_blocks(&dir.join("blocks50.jsonl"), BlockFormat::Jsonl).map_err(|e| e.to_string())?;
    ensure(fifty.len() == 50, format!("{} blocks", fifty.len()))?;
    let (trace, report) = replay(&fifty, &supply).map_err(|e| e.to_string())?;
    ensure(report.conservation_holds, "conservation failed")?;
    let arrived: ExactNumber = fifty.iter().map(|b| b.total_quantity()).sum();
    let served: ExactNumber = trace.records.iter().map(|r| r.quantity.clone()).sum();
    ensure(
        arrived == &served + &report.pending,
        "totals do not balance",
    )?;
    ensure(
        report.baseline == BaselineKind::MarketClearing,
        "baseline is not market clearing",
    )?;
    // the baseline's prices are the per-block clearing prices
    let clearing: Vec<_> = fifty
        .iter()
        .map(|b| market_clearing_price(b, &supply))
        .collect();
    let (rev, _) = serial_monopoly::ingest::baseline_metrics(&fifty, &clearing, &supply)
        .map_err(|e| e.to_string())?;
    ensure(rev == report.baseline_revenue, "baseline revenue mismatch")?;
    ensure(
        report.serial_revenue >= report.baseline_revenue,
        format!(
            "serial {} < baseline {}",
            report.serial_revenue, report.baseline_revenue
        ),
    )?;
    Ok(format!(
        "3-atom (10, 3); 50 blocks: conservation exact, serial revenue {} >= clearing baseline {}",
        report.serial_revenue, report.baseline_revenue
    ))
}

fn controls() -> Outcome {
    let results = negative_controls().map_err(|e| e.to_string())?;
    let mut names = Vec::new();
    for c in &results {
        ensure(c.failed(), format!("{} did not fail", c.name))?;
        ensure(c.witness.is_some(), format!("{} has no witness", c.name))?;
        names.push(c.name.clone());
    }
    Ok(format!(
        "{} controls caught: {}",
        results.len(),
        names.join(", ")
    ))
}

fn determinism() -> Outcome {
    let once = || {
        Command::new(env!("CARGO_BIN_EXE_serial-monopoly"))
            .arg("repro")
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (once()?, once()?);
    ensure(
        a.status.success(),
        String::from_utf8_lossy(&a.stdout).into_owned(),
    )?;
    ensure(a.stdout == b.stdout, "outputs differ")?;
    Ok(format!(
        "two repro runs, {} identical bytes",
        a.stdout.len()
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("golden sequence", golden_sequence),
        ("market points", market_points_exact),
        ("welfare ratios", welfare_ratios),
        ("exact trace checks", exact_trace_checks),
        ("asymptotic evidence", asymptotics),
        ("strategic equilibrium", equilibrium),
        ("deviation witness", deviation_witness),
        ("replay pipeline", replay_pipeline),
        ("negative controls", controls),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{took:.2?}]", i + 1),
            Err(detail) => {
                println!("FAIL {:>2} {name}: {detail} [{took:.2?}]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
