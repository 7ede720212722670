//! JSON form of a curve: `[["0", "1"], ["1", "0"]]`, exact strings in canonical order.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{DemandCurve, Point};
use crate::number::{exact_string, parse_exact};

impl Serialize for DemandCurve {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self
            .points()
            .iter()
            .map(|p| [exact_string(&p.price), exact_string(&p.quantity)])
            .collect();
        pairs.serialize(serializer)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Coordinate {
    Text(String),
    Number(serde_json::Number),
}

impl Coordinate {
    fn text(&self) -> String {
        match self {
            Coordinate::Text(s) => s.clone(),
            Coordinate::Number(n) => n.to_string(),
        }
    }
}

impl<'de> Deserialize<'de> for DemandCurve {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw: Vec<(Coordinate, Coordinate)> = Vec::deserialize(deserializer)?;
        let points = raw
            .iter()
            .map(|(p, q)| {
                Ok(Point::new(
                    parse_exact(&p.text()).map_err(D::Error::custom)?,
                    parse_exact(&q.text()).map_err(D::Error::custom)?,
                ))
            })
            .collect::<Result<Vec<_>, D::Error>>()?;
        DemandCurve::new(points).map_err(D::Error::custom)
    }
}
