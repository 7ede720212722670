//! Step demand built from discrete bids.

use std::collections::BTreeMap;

use super::RevenuePoint;
use crate::error::{domain, Result};
use crate::number::{ExactNumber, Scalar};

/// A bid for `quantity` units at `price` per unit, tagged by arrival.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub price: ExactNumber,
    pub quantity: ExactNumber,
    /// Position of the originating block in the replayed sequence.
    pub block: u64,
    /// Index of the bid inside its block.
    pub arrival_tag: u64,
}

impl Atom {
    fn priority(&self) -> (u64, u64) {
        (self.block, self.arrival_tag)
    }
}

/// Multiset of atoms; demand at `p` is the total quantity bid at `p` or more.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AtomCurve {
    atoms: Vec<Atom>,
}

/// Result of serving one block.
#[derive(Clone, Debug, PartialEq)]
pub struct Sale {
    pub served: ExactNumber,
    /// Sum over served units of their bid price.
    pub value: ExactNumber,
    pub remaining: AtomCurve,
    pub rationed: bool,
}

impl AtomCurve {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.iter().any(|a| a.quantity <= ExactNumber::zero()) {
            return Err(domain("atom quantities must be positive"));
        }
        if atoms.iter().any(|a| a.price.is_negative()) {
            return Err(domain("atom prices must be non-negative"));
        }
        let mut atoms = atoms;
        atoms.sort_by_key(Atom::priority);
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total(&self) -> ExactNumber {
        self.atoms.iter().map(|a| a.quantity.clone()).sum()
    }

    pub fn demand_at(&self, price: &ExactNumber) -> ExactNumber {
        self.atoms
            .iter()
            .filter(|a| a.price >= *price)
            .map(|a| a.quantity.clone())
            .sum()
    }

    /// Union of two multisets, kept in arrival order.
    pub fn merge(&self, other: &AtomCurve) -> AtomCurve {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        atoms.sort_by_key(Atom::priority);
        AtomCurve { atoms }
    }

    /// Revenue-maximizing atom price for `p * min(supply, demand(p))`, ties
    /// toward the largest price. `None` when no atom price earns anything.
    pub fn best_price(&self, supply: &ExactNumber) -> Option<RevenuePoint<ExactNumber>> {
        let mut by_price: BTreeMap<&ExactNumber, ExactNumber> = BTreeMap::new();
        for a in &self.atoms {
            *by_price.entry(&a.price).or_insert_with(ExactNumber::zero) += &a.quantity;
        }
        let mut cumulative = ExactNumber::zero();
        let mut best: Option<RevenuePoint<ExactNumber>> = None;
        for (price, quantity) in by_price.into_iter().rev() {
            cumulative += quantity;
            let served = if cumulative < *supply {
                cumulative.clone()
            } else {
                supply.clone()
            };
            let revenue = price * &served;
            if best.as_ref().is_none_or(|b| revenue > b.revenue) {
                best = Some(RevenuePoint {
                    price: price.clone(),
                    quantity: served,
                    revenue,
                });
            }
        }
        best.filter(|b| b.revenue > ExactNumber::zero())
    }

    /// Serves up to `supply` units among bids at or above `price`, oldest
    /// block first, then by arrival tag; the marginal atom is split.
    pub fn serve(&self, price: &ExactNumber, supply: &ExactNumber) -> Sale {
        let mut left = supply.clone();
        let mut served = ExactNumber::zero();
        let mut value = ExactNumber::zero();
        let mut remaining = Vec::with_capacity(self.atoms.len());
        let mut rationed = false;
        for atom in &self.atoms {
            if atom.price < *price {
                remaining.push(atom.clone());
                continue;
            }
            if left.is_zero() {
                rationed = true;
                remaining.push(atom.clone());
                continue;
            }
            let take = if atom.quantity <= left {
                atom.quantity.clone()
            } else {
                left.clone()
            };
            left -= &take;
            value += &take * &atom.price;
            if take < atom.quantity {
                rationed = true;
                remaining.push(Atom {
                    quantity: &atom.quantity - &take,
                    ..atom.clone()
                });
            }
            served += take;
        }
        Sale {
            served,
            value,
            remaining: AtomCurve { atoms: remaining },
            rationed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number::int;

    fn batch(bids: &[(i64, i64)]) -> AtomCurve {
        AtomCurve::new(
            bids.iter()
                .enumerate()
                .map(|(i, (p, q))| Atom {
                    price: int(*p),
                    quantity: int(*q),
                    block: 0,
                    arrival_tag: i as u64,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn demand_is_right_continuous_step() {
        let c = batch(&[(10, 3), (5, 4), (5, 2)]);
        assert_eq!(c.demand_at(&int(5)), int(9));
        assert_eq!(c.demand_at(&int(6)), int(3));
        assert_eq!(c.demand_at(&int(11)), int(0));
    }

    #[test]
    fn best_price_ties_go_up() {
        let c = batch(&[(10, 3), (5, 4), (2, 5)]);
        let best = c.best_price(&int(6)).unwrap();
        assert_eq!(
            (best.price, best.quantity, best.revenue),
            (int(10), int(3), int(30))
        );
    }

    #[test]
    fn serve_rations_by_arrival() {
        let c = batch(&[(10, 3), (5, 4)]);
        let sale = c.serve(&int(5), &int(6));
        assert_eq!(sale.served, int(6));
        assert_eq!(sale.value, int(45));
        assert!(sale.rationed);
        assert_eq!(sale.remaining.total(), int(1));
        assert_eq!(sale.remaining.atoms()[0].price, int(5));
    }

    #[test]
    fn rejects_non_positive_quantities() {
        let bad = Atom {
            price: int(1),
            quantity: int(0),
            block: 0,
            arrival_tag: 0,
        };
        assert!(AtomCurve::new(vec![bad]).is_err());
    }
}
