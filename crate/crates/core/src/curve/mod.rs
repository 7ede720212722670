//! Piecewise-linear demand curves.
//!
//! A curve is a list of `(price, quantity)` breakpoints with weakly increasing
//! prices. Between breakpoints the curve interpolates linearly; below the first
//! breakpoint it is constant and above the last one it is zero. Two consecutive
//! breakpoints may share a price, which encodes a vertical drop (an atom of
//! demand at that price). At such a price the curve takes the upper value, so
//! `eval(p)` is always the mass willing to pay at least `p`.

mod atoms;
mod family;
mod serial;

use std::cmp::Ordering;

pub use atoms::{Atom, AtomCurve};
pub use family::{approximate_pl, DemandFamilySpec};

use crate::error::{domain, Error, Result};
use crate::number::{ExactNumber, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Point<S> {
    pub price: S,
    pub quantity: S,
}

impl<S> Point<S> {
    pub fn new(price: S, quantity: S) -> Self {
        Self { price, quantity }
    }
}

/// Piecewise-linear, weakly decreasing, finitely supported demand.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve<S> {
    points: Vec<Point<S>>,
}

/// Curve over exact rationals; the daily demand `Q` and every exact-mode state.
pub type DemandCurve = Curve<ExactNumber>;

/// Outcome of a revenue maximization.
#[derive(Clone, Debug, PartialEq)]
pub struct RevenuePoint<S> {
    pub price: S,
    pub quantity: S,
    pub revenue: S,
}

fn cmp<S: Scalar>(a: &S, b: &S) -> Ordering {
    a.partial_cmp(b)
        .expect("scalar comparison is total on finite values")
}

fn min<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

impl<S: Scalar> Curve<S> {
    pub fn zero() -> Self {
        Self { points: Vec::new() }
    }

    /// Validates and canonicalizes a breakpoint list.
    pub fn new(points: Vec<Point<S>>) -> Result<Self> {
        validate(&points)?;
        Ok(Self {
            points: canonical(points),
        })
    }

    /// Convenience constructor from `(price, quantity)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (S, S)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(p, q)| Point::new(p, q)).collect())
    }

    pub(crate) fn from_canonical(points: Vec<Point<S>>) -> Self {
        debug_assert!(validate(&points).is_ok());
        Self { points }
    }

    pub fn points(&self) -> &[Point<S>] {
        &self.points
    }

    pub fn breakpoint_count(&self) -> usize {
        self.points.len()
    }

    pub fn is_zero(&self) -> bool {
        self.points.is_empty()
    }

    /// Quantity demanded at price zero or below (the curve's maximum).
    pub fn max_quantity(&self) -> S {
        self.points
            .first()
            .map(|p| p.quantity.clone())
            .unwrap_or_else(S::zero)
    }

    /// End of the support: the price of the last breakpoint.
    pub fn support_end(&self) -> S {
        self.points
            .last()
            .map(|p| p.price.clone())
            .unwrap_or_else(S::zero)
    }

    /// True when there are no vertical drops and every segment strictly decreases.
    pub fn is_strictly_decreasing(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[0].price < w[1].price && w[1].quantity < w[0].quantity)
    }

    /// Prices at which the curve drops vertically.
    pub fn jump_prices(&self) -> Vec<S> {
        self.points
            .windows(2)
            .filter(|w| w[0].price == w[1].price)
            .map(|w| w[0].price.clone())
            .collect()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Curve<T> {
        let points = self
            .points
            .iter()
            .map(|p| Point::new(f(&p.price), f(&p.quantity)))
            .collect();
        Curve {
            points: canonical(points),
        }
    }

    /// Converts into another scalar field via the exact value of each coordinate.
    pub fn convert<T: Scalar>(&self) -> Curve<T> {
        self.map(|x| T::from_exact(&x.to_exact()))
    }

    /// Multiplies every quantity by `k > 0`.
    pub fn scale_quantity(&self, k: &S) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| Point::new(p.price.clone(), p.quantity.clone() * k.clone()))
            .collect();
        Self {
            points: canonical(points),
        }
    }

    /// Interpolated demand at `price`; the upper value at a vertical drop.
    pub fn eval(&self, price: &S) -> S {
        let pts = &self.points;
        let Some(first) = pts.first() else {
            return S::zero();
        };
        if *price <= first.price {
            return first.quantity.clone();
        }
        let i = pts.partition_point(|pt| pt.price < *price);
        if i == pts.len() {
            return S::zero();
        }
        if pts[i].price == *price {
            return pts[i].quantity.clone();
        }
        interpolate(&pts[i - 1], &pts[i], price)
    }

    /// Demand just above `price` (the right limit).
    pub fn right_limit(&self, price: &S) -> S {
        let pts = &self.points;
        let Some(first) = pts.first() else {
            return S::zero();
        };
        if *price < first.price {
            return first.quantity.clone();
        }
        let j = pts.partition_point(|pt| pt.price <= *price);
        if j == pts.len() {
            return S::zero();
        }
        if pts[j - 1].price == *price {
            return pts[j - 1].quantity.clone();
        }
        interpolate(&pts[j - 1], &pts[j], price)
    }

    /// Largest price at which demand is at least `quantity`.
    ///
    /// `quantity = 0` maps to the end of the support.
    pub fn inverse(&self, quantity: &S) -> Result<S> {
        if quantity.is_negative() || *quantity > self.max_quantity() {
            return Err(domain(format!(
                "quantity {quantity:?} outside [0, {:?}]",
                self.max_quantity()
            )));
        }
        if quantity.is_zero() {
            return Ok(self.support_end());
        }
        let pts = &self.points;
        let j = pts.partition_point(|pt| pt.quantity >= *quantity) - 1;
        let (a, b) = (&pts[j], &pts[j + 1]);
        if a.price == b.price {
            return Ok(a.price.clone());
        }
        let t = (a.quantity.clone() - quantity.clone()) / (a.quantity.clone() - b.quantity.clone());
        Ok(a.price.clone() + t * (b.price.clone() - a.price.clone()))
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Self {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        let mut prices: Vec<S> = Vec::with_capacity(self.points.len() + other.points.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.points, &other.points);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => match cmp(&x.price, &y.price) {
                    Ordering::Less => {
                        i += 1;
                        x.price.clone()
                    }
                    Ordering::Greater => {
                        j += 1;
                        y.price.clone()
                    }
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                        x.price.clone()
                    }
                },
                (Some(x), None) => {
                    i += 1;
                    x.price.clone()
                }
                (None, Some(y)) => {
                    j += 1;
                    y.price.clone()
                }
                (None, None) => unreachable!(),
            };
            if prices.last() != Some(&next) {
                prices.push(next);
            }
        }
        let mut points = Vec::with_capacity(prices.len() + 4);
        for p in prices {
            let upper = self.eval(&p) + other.eval(&p);
            let lower = self.right_limit(&p) + other.right_limit(&p);
            let jump = lower != upper;
            points.push(Point::new(p.clone(), upper));
            if jump {
                points.push(Point::new(p, lower));
            }
        }
        Self {
            points: canonical(points),
        }
    }

    /// Pent-up demand left after selling `sold` units at `price`:
    /// `D(p) - sold` for `p <= price` and zero above.
    ///
    /// `sold` must equal `D(price)`, or, when the curve drops vertically at
    /// `price`, lie between the right limit and `D(price)` (rationed atom).
    pub fn residual_after_sale(&self, price: &S, sold: &S) -> Result<Self> {
        let at = self.eval(price);
        let below = self.right_limit(price);
        let clears = sold.near(&at);
        let rationed = *sold < at && (*sold >= below || sold.near(&below));
        if !clears && !rationed {
            return Err(Error::Contract(format!(
                "sold quantity {sold:?} does not clear demand {at:?} at price {price:?}"
            )));
        }
        let mut points: Vec<Point<S>> = self
            .points
            .iter()
            .take_while(|pt| pt.price < *price)
            .map(|pt| {
                Point::new(
                    pt.price.clone(),
                    (pt.quantity.clone() - sold.clone()).clamp_nonneg(),
                )
            })
            .collect();
        let remaining = if clears {
            S::zero()
        } else {
            (at - sold.clone()).clamp_nonneg()
        };
        points.push(Point::new(price.clone(), remaining));
        points.push(Point::new(price.clone(), S::zero()));
        Ok(Self {
            points: canonical(points),
        })
    }

    /// Area under the curve strictly above `price`.
    pub fn area_above(&self, price: &S) -> S {
        let pts = &self.points;
        let Some(first) = pts.first() else {
            return S::zero();
        };
        let half = S::half();
        let mut area = S::zero();
        if *price < first.price {
            area = area + first.quantity.clone() * (first.price.clone() - price.clone());
        }
        for w in pts.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.price <= *price || a.price == b.price {
                continue;
            }
            if a.price >= *price {
                area = area
                    + (a.quantity.clone() + b.quantity.clone())
                        * (b.price.clone() - a.price.clone())
                        * half.clone();
            } else {
                let mid = interpolate(a, b, price);
                area = area
                    + (mid + b.quantity.clone()) * (b.price.clone() - price.clone()) * half.clone();
            }
        }
        area
    }

    /// Total value of the demand units with willingness to pay at least `price`:
    /// `price * D(price) + integral of D above price`.
    pub fn welfare_above_price(&self, price: &S) -> S {
        price.clone() * self.eval(price) + self.area_above(price)
    }

    /// Value of the `quantity` highest-value units when those are exactly the
    /// units above `price` plus part of an atom at `price`.
    pub fn welfare_of_top(&self, price: &S, quantity: &S) -> S {
        let above = self.right_limit(price);
        price.clone() * above.clone()
            + self.area_above(price)
            + (quantity.clone() - above) * price.clone()
    }

    /// Global maximizer of `p * min(supply, D(p))`, ties broken toward the
    /// largest price. `None` when no price yields positive revenue.
    pub fn best_revenue(&self, supply: &S) -> Option<RevenuePoint<S>> {
        let revenue_at = |p: &S| p.clone() * min(supply.clone(), self.eval(p));
        let mut candidates: Vec<S> = Vec::with_capacity(2 * self.points.len() + 1);
        let mut last: Option<&S> = None;
        for pt in &self.points {
            if last != Some(&pt.price) {
                candidates.push(pt.price.clone());
            }
            last = Some(&pt.price);
        }
        if !self.is_zero() && self.max_quantity() >= *supply {
            if let Ok(cap) = self.inverse(supply) {
                candidates.push(cap);
            }
        }
        let two = S::from_i64(2);
        for w in self.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.price == b.price || a.quantity == b.quantity {
                continue;
            }
            // D(p) = c + k p on the segment, k < 0; vertex of p (c + k p) at -c / 2k
            let k = (b.quantity.clone() - a.quantity.clone()) / (b.price.clone() - a.price.clone());
            let c = a.quantity.clone() - k.clone() * a.price.clone();
            let vertex = -c / (two.clone() * k);
            if vertex > a.price && vertex < b.price {
                candidates.push(vertex);
            }
        }
        let mut best: Option<(S, S)> = None;
        for p in candidates {
            if p.is_negative() {
                continue;
            }
            let r = revenue_at(&p);
            best = match best {
                None => Some((p, r)),
                Some((bp, br)) => {
                    let better = if r.near(&br) { p > bp } else { r > br };
                    if better {
                        Some((p, r))
                    } else {
                        Some((bp, br))
                    }
                }
            };
        }
        let (price, _) = best?;
        let quantity = min(supply.clone(), self.eval(&price));
        let revenue = price.clone() * quantity.clone();
        if revenue.is_zero() || revenue.is_negative() {
            return None;
        }
        Some(RevenuePoint {
            price,
            quantity,
            revenue,
        })
    }

    /// Like [`Curve::best_revenue`] but a curve with no positive revenue is a
    /// domain error.
    pub fn revenue_maximizer(&self, supply: &S) -> Result<RevenuePoint<S>> {
        if supply.is_zero() || supply.is_negative() {
            return Err(domain("supply must be positive"));
        }
        self.best_revenue(supply)
            .ok_or_else(|| domain("degenerate curve: no price yields positive revenue"))
    }

    /// Re-runs canonicalization (idempotent on any constructed curve).
    pub fn canonicalize(&self) -> Self {
        Self {
            points: canonical(self.points.clone()),
        }
    }
}

fn interpolate<S: Scalar>(a: &Point<S>, b: &Point<S>, price: &S) -> S {
    let t = (price.clone() - a.price.clone()) / (b.price.clone() - a.price.clone());
    a.quantity.clone() + t * (b.quantity.clone() - a.quantity.clone())
}

fn validate<S: Scalar>(points: &[Point<S>]) -> Result<()> {
    let bad = |m: &str| Err(Error::InvalidCurve(m.to_string()));
    for (i, p) in points.iter().enumerate() {
        if p.price.is_negative() {
            return bad("negative price");
        }
        if p.quantity.is_negative() {
            return bad("negative quantity");
        }
        if i > 0 {
            let prev = &points[i - 1];
            if p.price < prev.price {
                return bad("prices must be sorted");
            }
            if p.quantity > prev.quantity {
                return bad("quantities must be weakly decreasing");
            }
            if i > 1 && points[i - 2].price == p.price && prev.price == p.price {
                return bad("at most two breakpoints may share a price");
            }
        }
    }
    if let Some(last) = points.last() {
        if !last.quantity.is_zero() {
            return bad("last breakpoint must have zero quantity");
        }
    }
    Ok(())
}

/// Canonical form: no zero-height drops, no collinear interior breakpoints,
/// no flat leading segment, nothing after the first zero.
pub(crate) fn canonical<S: Scalar>(points: Vec<Point<S>>) -> Vec<Point<S>> {
    let mut out: Vec<Point<S>> = Vec::with_capacity(points.len());
    for p in points {
        if let Some(top) = out.last() {
            if top.price == p.price {
                if top.quantity.near(&p.quantity) {
                    continue;
                }
                let n = out.len();
                if n >= 2 && out[n - 2].price == p.price {
                    out.pop();
                }
                out.push(p);
                continue;
            }
            let n = out.len();
            if n >= 2 {
                let (a, b) = (&out[n - 2], &out[n - 1]);
                if a.price != b.price && interpolate(a, &p, &b.price).near(&b.quantity) {
                    out.pop();
                }
            }
            if out
                .last()
                .is_some_and(|top| top.quantity.is_zero() && p.quantity.is_zero())
            {
                continue;
            }
        }
        out.push(p);
    }
    let flat_prefix = out
        .windows(2)
        .take_while(|w| w[0].price != w[1].price && w[0].quantity.near(&w[1].quantity))
        .count();
    out.drain(..flat_prefix);
    if let Some(z) = out.iter().position(|p| p.quantity.is_zero()) {
        out.truncate(z + 1);
    }
    if out.len() == 1 {
        out.clear();
    }
    out
}
