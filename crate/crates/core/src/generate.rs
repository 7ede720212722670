//! Random market instances for property sweeps.

use rand::Rng;

use crate::analytics::revenue_pair;
use crate::curve::DemandCurve;
use crate::number::{int, ratio, ExactNumber};

/// A strictly decreasing curve with 3 to 10 breakpoints on small rational
/// coordinates.
pub fn random_curve<R: Rng>(rng: &mut R) -> DemandCurve {
    let n = rng.random_range(3..=10usize);
    let mut price = if rng.random_bool(0.5) {
        int(0)
    } else {
        ratio(rng.random_range(1..=8), 8)
    };
    let drops: Vec<i64> = (1..n).map(|_| rng.random_range(1..=24)).collect();
    let mut quantity: ExactNumber = drops.iter().map(|d| ratio(*d, 6)).sum();
    let mut pairs = vec![(price.clone(), quantity.clone())];
    for d in drops {
        price += ratio(rng.random_range(1..=16), 8);
        quantity -= ratio(d, 6);
        pairs.push((price.clone(), quantity.clone()));
    }
    DemandCurve::from_pairs(pairs).expect("generated breakpoints are valid")
}

/// A random curve and supply with monopoly revenue strictly above equilibrium revenue.
pub fn random_instance<R: Rng>(rng: &mut R) -> (DemandCurve, ExactNumber) {
    loop {
        let q = random_curve(rng);
        let supply = q.max_quantity() * ratio(rng.random_range(1..=30), 20);
        if let Ok((mon, eq)) = revenue_pair(&q, &supply) {
            if mon > eq {
                return (q, supply);
            }
        }
    }
}
