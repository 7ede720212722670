//! Characteristic points of a market: equilibrium, monopoly and serial monopoly.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};

use crate::curve::DemandCurve;
use crate::error::{domain, Result};
use crate::number::{decimal17, exact_string, ExactNumber};

#[derive(Clone, Debug, PartialEq)]
pub struct MarketPoints {
    pub supply: ExactNumber,
    pub p_eq: ExactNumber,
    pub q_eq: ExactNumber,
    pub p_mon: ExactNumber,
    pub q_mon: ExactNumber,
    pub p_ser: ExactNumber,
    pub q_ser: ExactNumber,
    pub sw_eq: ExactNumber,
    pub sw_mon: ExactNumber,
    pub sw_ser: ExactNumber,
    pub rev_eq: ExactNumber,
    pub rev_mon: ExactNumber,
    /// `P(0) / P(s)`; `None` when `P(s) = 0` and the gap is infinite.
    pub h: Option<ExactNumber>,
}

impl MarketPoints {
    /// Monopoly revenue strictly above equilibrium revenue.
    pub fn has_gap(&self) -> bool {
        self.rev_mon > self.rev_eq
    }
}

/// Largest price with `Q(p) >= s`, or zero when even `Q(0)` falls short.
fn equilibrium_price(q: &DemandCurve, supply: &ExactNumber) -> Result<ExactNumber> {
    if q.max_quantity() < *supply {
        Ok(ExactNumber::zero())
    } else {
        q.inverse(supply)
    }
}

/// `(REV_mon, REV_eq)` for daily demand `q` and supply `supply`.
pub fn revenue_pair(q: &DemandCurve, supply: &ExactNumber) -> Result<(ExactNumber, ExactNumber)> {
    let mon = q.revenue_maximizer(supply)?;
    Ok((mon.revenue, equilibrium_price(q, supply)? * supply))
}

pub fn market_points(q: &DemandCurve, supply: &ExactNumber) -> Result<MarketPoints> {
    let mon = q.revenue_maximizer(supply)?;
    let p_eq = equilibrium_price(q, supply)?;
    let q_eq = if q.max_quantity() < *supply {
        q.max_quantity()
    } else {
        supply.clone()
    };
    let raw_ser = &mon.revenue / supply;
    let demand_at_raw = q.eval(&raw_ser);
    let raised = q.inverse(&demand_at_raw)?;
    let p_ser = if raised > raw_ser { raised } else { raw_ser };
    let q_ser = q.eval(&p_ser);
    let tail = q.support_end();
    let h = if p_eq.is_zero() {
        None
    } else {
        Some(&tail / &p_eq)
    };
    Ok(MarketPoints {
        sw_eq: q.welfare_of_top(&p_eq, &q_eq),
        sw_mon: q.welfare_of_top(&mon.price, &mon.quantity),
        sw_ser: q.welfare_of_top(&p_ser, &q_ser),
        rev_eq: &p_eq * supply,
        rev_mon: mon.revenue,
        supply: supply.clone(),
        p_eq,
        q_eq,
        p_mon: mon.price,
        q_mon: mon.quantity,
        p_ser,
        q_ser,
        h,
    })
}

/// `SW_ser / SW_eq`.
pub fn welfare_ratio(points: &MarketPoints) -> Result<ExactNumber> {
    if !points.sw_eq.is_positive() {
        return Err(domain("equilibrium welfare is zero"));
    }
    Ok(&points.sw_ser / &points.sw_eq)
}

/// Smallest integer `Δ` with `ln Δ > ln(1 + Δ0) + 2 (Q(p_ser) - Q(p_mon)) p_mon / (s (p* - p_ser))`,
/// where `Δ0 = s / (Q(p) - Q(p*))` and `p` is the midpoint of `p_ser` and `p*`.
pub fn theoretical_delta_bound(
    q: &DemandCurve,
    supply: &ExactNumber,
    p_star: &ExactNumber,
) -> Result<BigInt> {
    let points = market_points(q, supply)?;
    if *p_star <= points.p_ser {
        return Err(domain("p* must exceed the serial monopoly price"));
    }
    let mid = (p_star + &points.p_ser) / ExactNumber::from_integer(BigInt::from(2));
    let drop = q.eval(&mid) - q.eval(p_star);
    if !drop.is_positive() {
        return Err(domain("demand is flat between the midpoint and p*"));
    }
    let delta0 = supply / drop;
    let exponent = ExactNumber::from_integer(BigInt::from(2))
        * (q.eval(&points.p_ser) - q.eval(&points.p_mon))
        * &points.p_mon
        / (supply * (p_star - &points.p_ser));
    let base = ExactNumber::one() + delta0;
    // exp of a nonzero rational is irrational, so the bracket eventually
    // separates from every integer; with a zero exponent the bound is exact.
    if exponent.is_zero() {
        return Ok(base.floor().to_integer() + BigInt::one());
    }
    let mut bits = 96;
    loop {
        let (lo, hi) = exp_bounds(&exponent, bits);
        let (lo, hi) = (&base * lo, &base * hi);
        let (flo, fhi) = (lo.floor().to_integer(), hi.floor().to_integer());
        if flo == fhi {
            return Ok(flo + BigInt::one());
        }
        bits *= 2;
        if bits > 1 << 16 {
            return Err(domain("delta bound did not converge"));
        }
    }
}

fn round_dyadic(x: &ExactNumber, bits: u32, up: bool) -> ExactNumber {
    let scale = BigInt::one() << bits;
    let scaled = x * ExactNumber::from_integer(scale.clone());
    let n = if up { scaled.ceil() } else { scaled.floor() };
    ExactNumber::new(n.to_integer(), scale)
}

/// Rational bracket `[lo, hi]` around `exp(x)` for `x >= 0`, width about `2^-bits` relative.
fn exp_bounds(x: &ExactNumber, bits: u32) -> (ExactNumber, ExactNumber) {
    assert!(!x.is_negative());
    let half = ExactNumber::new(BigInt::one(), BigInt::from(2));
    let mut r = 0u32;
    let mut y = x.clone();
    while y > half {
        y *= &half;
        r += 1;
    }
    let work = bits + r + 16;
    let eps = ExactNumber::new(BigInt::one(), BigInt::one() << work);
    let mut sum = ExactNumber::zero();
    let mut term = ExactNumber::one();
    let mut n = 0u64;
    while term >= eps {
        sum += &term;
        n += 1;
        term = round_dyadic(
            &(term * &y / ExactNumber::from_integer(BigInt::from(n))),
            work + 8,
            true,
        );
    }
    // y <= 1/2 so the tail is at most twice the first omitted term; each
    // rounded-up term only overestimates, which keeps `hi` an upper bound
    let mut lo = round_dyadic(&sum, work, false) - &eps;
    let mut hi = round_dyadic(
        &(sum + term * ExactNumber::from_integer(BigInt::from(2))),
        work,
        true,
    ) + &eps;
    if lo.is_negative() {
        lo = ExactNumber::zero();
    }
    for _ in 0..r {
        lo = round_dyadic(&(&lo * &lo), work, false);
        hi = round_dyadic(&(&hi * &hi), work, true);
    }
    (lo, hi)
}

fn number_json(x: &ExactNumber) -> Value {
    json!({ "exact": exact_string(x), "decimal": decimal17(x) })
}

/// The `analyze` report: every field with exact and decimal forms.
pub fn analyze_json(points: &MarketPoints) -> Value {
    let mut m = Map::new();
    let fields: [(&str, &ExactNumber); 12] = [
        ("supply", &points.supply),
        ("p_eq", &points.p_eq),
        ("q_eq", &points.q_eq),
        ("p_mon", &points.p_mon),
        ("q_mon", &points.q_mon),
        ("p_ser", &points.p_ser),
        ("q_ser", &points.q_ser),
        ("SW_eq", &points.sw_eq),
        ("SW_mon", &points.sw_mon),
        ("SW_ser", &points.sw_ser),
        ("REV_eq", &points.rev_eq),
        ("REV_mon", &points.rev_mon),
    ];
    for (k, v) in fields {
        m.insert(k.to_string(), number_json(v));
    }
    let h = match &points.h {
        Some(h) => json!({ "infinite": false, "exact": exact_string(h), "decimal": decimal17(h) }),
        None => json!({ "infinite": true }),
    };
    m.insert("H".to_string(), h);
    if let Ok(r) = welfare_ratio(points) {
        m.insert("welfare_ratio".to_string(), number_json(&r));
    }
    m.insert("monopoly_gap".to_string(), Value::Bool(points.has_gap()));
    Value::Object(m)
}
