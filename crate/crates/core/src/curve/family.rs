//! Exact piecewise-linear constructions of the named demand families.

use serde::{Deserialize, Serialize};

use super::{DemandCurve, Point};
use crate::error::{domain, Result};
use crate::number::{int, ExactNumber, Scalar};

/// A named demand family with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DemandFamilySpec {
    /// Values uniform on `[0, b]` with total mass `a`: `Q(p) = a (1 - p / b)`.
    Uniform {
        #[serde(with = "crate::number::serde_exact")]
        a: ExactNumber,
        #[serde(with = "crate::number::serde_exact")]
        b: ExactNumber,
    },
    /// `Q(p) = 1/p` on `[1, H]`, one unit below 1, nothing above `H`.
    EqualRevenue {
        #[serde(with = "crate::number::serde_exact")]
        h: ExactNumber,
    },
    /// `M - 1` units valued 1 plus one unit valued `M + 1`, each spread over
    /// a price band of width `eps` so the curve is strictly decreasing.
    Stepped {
        #[serde(with = "crate::number::serde_exact")]
        m: ExactNumber,
        #[serde(with = "crate::number::serde_exact")]
        eps: ExactNumber,
    },
}

impl DemandFamilySpec {
    pub fn uniform() -> Self {
        Self::Uniform {
            a: int(1),
            b: int(1),
        }
    }

    /// `H = e^2`, as the nearest double converted exactly.
    pub fn equal_revenue_e2() -> Self {
        Self::EqualRevenue {
            h: Scalar::to_exact(&2f64.exp()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Uniform { .. } => "uniform",
            Self::EqualRevenue { .. } => "equal_revenue",
            Self::Stepped { .. } => "stepped",
        }
    }
}

/// Nearest multiple of `2^-GRID_BITS`. Sharing one denominator across all
/// nodes keeps exact areas and sums over thousands of segments small.
fn on_grid(x: &ExactNumber) -> ExactNumber {
    let scale = ExactNumber::from_integer(num_bigint::BigInt::from(1u64 << GRID_BITS));
    (x * &scale).round() / scale
}

const GRID_BITS: u32 = 40;

/// Builds the family's piecewise-linear curve. `nodes` controls the number of
/// breakpoints of the equal-revenue approximation (geometrically spaced); the
/// other families are exactly piecewise linear and ignore it.
pub fn approximate_pl(family: &DemandFamilySpec, nodes: usize) -> Result<DemandCurve> {
    if nodes < 2 {
        return Err(domain("at least two nodes are required"));
    }
    let zero = int(0);
    match family {
        DemandFamilySpec::Uniform { a, b } => {
            if *a <= zero || *b <= zero {
                return Err(domain("uniform family needs a > 0 and b > 0"));
            }
            DemandCurve::from_pairs([(zero.clone(), a.clone()), (b.clone(), zero)])
        }
        DemandFamilySpec::EqualRevenue { h } => {
            if *h <= int(1) {
                return Err(domain("equal-revenue family needs H > 1"));
            }
            let log_h = Scalar::to_f64(h).ln();
            let last = nodes - 1;
            let mut points = Vec::with_capacity(nodes);
            points.push(Point::new(int(1), int(1)));
            for i in 1..last {
                let x = (log_h * i as f64 / last as f64).exp();
                let price = on_grid(&Scalar::to_exact(&x));
                if price <= points.last().unwrap().price || price >= *h {
                    return Err(domain("too many nodes for this H: node prices collide"));
                }
                let quantity = on_grid(&(int(1) / price.clone()));
                points.push(Point::new(price, quantity));
            }
            points.push(Point::new(h.clone(), zero));
            DemandCurve::new(points)
        }
        DemandFamilySpec::Stepped { m, eps } => {
            if *m < int(2) {
                return Err(domain("stepped family needs M >= 2"));
            }
            if *eps <= zero || *eps >= crate::number::ratio(1, 2) {
                return Err(domain("stepped family needs 0 < eps < 1/2"));
            }
            let one = int(1);
            let top = m.clone() + one.clone();
            DemandCurve::from_pairs([
                (zero.clone(), m.clone() + eps.clone()),
                (one.clone(), m.clone()),
                (one.clone() + eps.clone(), one.clone() + eps.clone()),
                (top.clone(), one),
                (top + eps.clone(), zero),
            ])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number::{parse_exact, ratio};

    #[test]
    fn uniform_is_exact() {
        let q = approximate_pl(&DemandFamilySpec::uniform(), 7).unwrap();
        assert_eq!(
            q,
            DemandCurve::from_pairs([(int(0), int(1)), (int(1), int(0))]).unwrap()
        );
        let q2 = approximate_pl(
            &DemandFamilySpec::Uniform {
                a: int(2),
                b: int(2),
            },
            2,
        )
        .unwrap();
        assert_eq!(q2.eval(&int(1)), int(1));
    }

    #[test]
    fn equal_revenue_tracks_reciprocal() {
        let family = DemandFamilySpec::equal_revenue_e2();
        let q = approximate_pl(&family, 10_000).unwrap();
        assert!(q.is_strictly_decreasing());
        assert_eq!(q.eval(&int(1)), int(1));
        let DemandFamilySpec::EqualRevenue { h } = &family else {
            unreachable!()
        };
        assert_eq!(q.eval(h), int(0));
        // oracle: 1/p at 100 log-spaced prices in [1, H)
        let hf = Scalar::to_f64(h);
        let max_err = (0..100)
            .map(|k| {
                let p = hf.powf(k as f64 / 100.0);
                let approx = Scalar::to_f64(&q.eval(&Scalar::to_exact(&p)));
                (approx - 1.0 / p).abs()
            })
            .fold(0.0, f64::max);
        assert!(max_err < 1e-7, "max abs error {max_err}");
    }

    #[test]
    fn stepped_matches_step_definition() {
        let family = DemandFamilySpec::Stepped {
            m: int(100),
            eps: parse_exact("1e-6").unwrap(),
        };
        let q = approximate_pl(&family, 2).unwrap();
        assert!(q.is_strictly_decreasing());
        let delta = ratio(1, 1000);
        let near = |x: ExactNumber, target: i64| (x - int(target)).abs() < ratio(1, 10_000);
        assert!(near(q.eval(&(int(1) - delta.clone())), 100));
        assert!(near(q.eval(&(int(101) - delta.clone())), 1));
        assert_eq!(q.eval(&int(102)), int(0));
    }

    #[test]
    fn invalid_parameters() {
        assert!(approximate_pl(&DemandFamilySpec::uniform(), 1).is_err());
        assert!(approximate_pl(&DemandFamilySpec::EqualRevenue { h: int(1) }, 10).is_err());
        assert!(approximate_pl(
            &DemandFamilySpec::Stepped {
                m: int(1),
                eps: ratio(1, 10)
            },
            2
        )
        .is_err());
        assert!(approximate_pl(
            &DemandFamilySpec::Stepped {
                m: int(5),
                eps: int(0)
            },
            2
        )
        .is_err());
        assert!(approximate_pl(
            &DemandFamilySpec::Uniform {
                a: int(0),
                b: int(1)
            },
            2
        )
        .is_err());
    }
}
