//! Run configuration from a TOML file, with command-line overrides.
//!
//! ```toml
//! supply = "1"
//! horizon = 2000
//! mode = "exact"
//! output_dir = "out"
//!
//! [demand]
//! family = "uniform"
//! params = { a = "1", b = "1" }
//! ```
//!
//! Instead of `family`, `[demand]` may give `points = [["0", "1"], ["1", "0"]]`
//! or `path = "curve.json"`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::curve::{approximate_pl, DemandCurve, DemandFamilySpec};
use crate::error::{Error, Result};
use crate::number::{int, parse_exact, ExactNumber, Mode, Scalar};

pub const DEFAULT_HORIZON: u64 = 1000;
pub const DEFAULT_NODES: usize = 10_000;

/// Where the daily demand curve comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum DemandSource {
    Family {
        spec: DemandFamilySpec,
        nodes: usize,
    },
    Points(DemandCurve),
    /// A JSON breakpoint list on disk.
    File(PathBuf),
}

impl DemandSource {
    pub fn curve(&self) -> Result<DemandCurve> {
        match self {
            Self::Family { spec, nodes } => approximate_pl(spec, *nodes),
            Self::Points(c) => Ok(c.clone()),
            Self::File(path) => {
                let text = fs::read_to_string(path)?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }

    /// Parses the `--demand` flag: `uniform`, `uniform(a=2,b=1)`,
    /// `equal_revenue(H=e^2,nodes=1000)`, `stepped(M=100,eps=1e-6)`, an inline
    /// JSON breakpoint list, or `@curve.json`.
    pub fn parse_flag(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some(path) = text.strip_prefix('@') {
            return Ok(Self::File(PathBuf::from(path)));
        }
        if text.starts_with('[') {
            let curve: DemandCurve = serde_json::from_str(text)
                .map_err(|e| Error::Config(format!("bad inline demand: {e}")))?;
            return Ok(Self::Points(curve));
        }
        let (name, args) = match text.split_once('(') {
            Some((name, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Config(format!("unclosed parameter list in `{text}`")))?;
                (name.trim(), inner)
            }
            None => (text, ""),
        };
        let mut params = BTreeMap::new();
        for pair in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, found `{pair}`")))?;
            params.insert(k.trim().to_string(), RawNumber::Text(v.trim().to_string()));
        }
        family_source(name, &params)
    }
}

/// A number as written in a config file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RawNumber {
    Int(i64),
    Float(f64),
    Text(String),
}

impl RawNumber {
    fn exact(&self, key: &str) -> Result<ExactNumber> {
        let bad = || Error::Config(format!("`{key}` is not a number"));
        match self {
            Self::Int(i) => Ok(int(*i)),
            // shortest round-trip decimal, so 0.1 means 1/10
            Self::Float(f) => parse_exact(&f.to_string()).map_err(|_| bad()),
            Self::Text(s) => match s.trim().strip_prefix("e^") {
                Some(k) => {
                    let k: f64 = k.parse().map_err(|_| bad())?;
                    Ok(Scalar::to_exact(&k.exp()))
                }
                None => parse_exact(s).map_err(|_| bad()),
            },
        }
    }
}

fn family_source(name: &str, params: &BTreeMap<String, RawNumber>) -> Result<DemandSource> {
    let allowed: &[&str] = match name {
        "uniform" => &["a", "b"],
        "equal_revenue" => &["H", "h", "nodes"],
        "stepped" => &["M", "m", "eps"],
        other => {
            return Err(Error::Config(format!(
                "unknown demand family `{other}` (expected uniform, equal_revenue or stepped)"
            )))
        }
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!(
            "unknown parameter `{k}` for family `{name}`"
        )));
    }
    let get = |keys: &[&str], default: ExactNumber| -> Result<ExactNumber> {
        keys.iter()
            .find_map(|k| params.get(*k).map(|v| v.exact(k)))
            .unwrap_or(Ok(default))
    };
    let nodes = match params.get("nodes") {
        None => DEFAULT_NODES,
        Some(v) => {
            let n = v.exact("nodes")?;
            if !n.is_integer() || n < int(2) {
                return Err(Error::Config(
                    "`nodes` must be an integer of at least 2".into(),
                ));
            }
            n.to_integer()
                .try_into()
                .map_err(|_| Error::Config("`nodes` is too large".into()))?
        }
    };
    let spec = match name {
        "uniform" => DemandFamilySpec::Uniform {
            a: get(&["a"], int(1))?,
            b: get(&["b"], int(1))?,
        },
        "equal_revenue" => DemandFamilySpec::EqualRevenue {
            h: get(&["H", "h"], Scalar::to_exact(&2f64.exp()))?,
        },
        _ => DemandFamilySpec::Stepped {
            m: get(&["M", "m"], int(100))?,
            eps: get(&["eps"], parse_exact("1e-6")?)?,
        },
    };
    Ok(DemandSource::Family { spec, nodes })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandTable {
    family: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, RawNumber>,
    nodes: Option<u64>,
    points: Option<Vec<(RawNumber, RawNumber)>>,
    path: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    demand: Option<DemandTable>,
    supply: Option<RawNumber>,
    horizon: Option<u64>,
    mode: Option<Mode>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
}

/// Settings before validation: file values, then flags layered on top.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PartialConfig {
    pub demand: Option<DemandSource>,
    pub supply: Option<ExactNumber>,
    pub horizon: Option<u64>,
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl PartialConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let demand = file
            .demand
            .map(|d| demand_from_table(d, base))
            .transpose()?;
        Ok(Self {
            demand,
            supply: file.supply.map(|s| s.exact("supply")).transpose()?,
            horizon: file.horizon,
            mode: file.mode,
            seed: file.seed,
            output_dir: file.output_dir.map(|p| base.join(p)),
        })
    }

    /// Reads a config file. Relative paths inside it resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Values set in `over` win.
    pub fn merge(self, over: PartialConfig) -> Self {
        Self {
            demand: over.demand.or(self.demand),
            supply: over.supply.or(self.supply),
            horizon: over.horizon.or(self.horizon),
            mode: over.mode.or(self.mode),
            seed: over.seed.or(self.seed),
            output_dir: over.output_dir.or(self.output_dir),
        }
    }

    pub fn finish(self) -> Result<RunConfig> {
        let demand = self
            .demand
            .ok_or_else(|| Error::Config("no demand given (use --demand or [demand])".into()))?;
        let supply = self.supply.ok_or_else(|| {
            Error::Config("no supply given (use --supply or supply = ...)".into())
        })?;
        if supply <= int(0) {
            return Err(Error::Config(format!(
                "supply must be positive, got {supply}"
            )));
        }
        let horizon = self.horizon.unwrap_or(DEFAULT_HORIZON);
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        Ok(RunConfig {
            demand,
            supply,
            horizon,
            mode: self.mode.unwrap_or(Mode::Exact),
            seed: self.seed.unwrap_or(0),
            output_dir: self.output_dir,
        })
    }
}

fn demand_from_table(d: DemandTable, base: &Path) -> Result<DemandSource> {
    let given = [d.family.is_some(), d.points.is_some(), d.path.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(Error::Config(
            "[demand] needs exactly one of `family`, `points` or `path`".into(),
        ));
    }
    if let Some(points) = d.points {
        let pairs = points
            .iter()
            .map(|(p, q)| Ok((p.exact("demand.points")?, q.exact("demand.points")?)))
            .collect::<Result<Vec<_>>>()?;
        return Ok(DemandSource::Points(DemandCurve::from_pairs(pairs)?));
    }
    if let Some(path) = d.path {
        return Ok(DemandSource::File(base.join(path)));
    }
    let mut params = d.params;
    if let Some(n) = d.nodes {
        let n = i64::try_from(n).map_err(|_| Error::Config("`nodes` is too large".into()))?;
        params.insert("nodes".into(), RawNumber::Int(n));
    }
    family_source(d.family.as_deref().unwrap_or_default(), &params)
}

/// A validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub demand: DemandSource,
    pub supply: ExactNumber,
    pub horizon: u64,
    pub mode: Mode,
    /// Seed for the random-instance generators.
    pub seed: u64,
    /// Where file outputs go; `None` writes to stdout.
    pub output_dir: Option<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    PartialConfig::from_file(path)?.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number::ratio;

    fn parse(text: &str) -> Result<RunConfig> {
        PartialConfig::from_toml(text, Path::new(""))?.finish()
    }

    #[test]
    fn minimal_file() {
        let c = parse("supply = \"1\"\n[demand]\nfamily = \"uniform\"\n").unwrap();
        assert_eq!(c.supply, int(1));
        assert_eq!(c.horizon, DEFAULT_HORIZON);
        assert_eq!(c.mode, Mode::Exact);
        assert_eq!(
            c.demand.curve().unwrap(),
            DemandCurve::from_pairs([(int(0), int(1)), (int(1), int(0))]).unwrap()
        );
    }

    #[test]
    fn numbers_in_any_spelling() {
        for s in ["supply = 0.75", "supply = \"3/4\"", "supply = \"0.75\""] {
            let c = parse(&format!("{s}\n[demand]\nfamily = \"uniform\"\n")).unwrap();
            assert_eq!(c.supply, ratio(3, 4), "{s}");
        }
    }

    #[test]
    fn rejects_bad_values() {
        let err = parse("supply = \"0\"\n[demand]\nfamily = \"uniform\"\n").unwrap_err();
        assert!(err.to_string().contains("supply"), "{err}");
        let err = parse("supply = 1\nhorizon = 0\n[demand]\nfamily = \"uniform\"\n").unwrap_err();
        assert!(err.to_string().contains("horizon"), "{err}");
        let err = parse("supply = 1\ncolour = 3\n[demand]\nfamily = \"uniform\"\n").unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        let err =
            parse("supply = 1\nhorizon = \"ten\"\n[demand]\nfamily = \"uniform\"\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        let err =
            parse("supply = 1\n[demand]\nfamily = \"uniform\"\nparams = { c = 2 }\n").unwrap_err();
        assert!(err.to_string().contains("`c`"), "{err}");
    }

    #[test]
    fn flags_override_file() {
        let file = PartialConfig::from_toml(
            "supply = 1\nhorizon = 4\n[demand]\nfamily = \"uniform\"\n",
            Path::new(""),
        )
        .unwrap();
        let flags = PartialConfig {
            horizon: Some(10),
            ..Default::default()
        };
        let c = file.merge(flags).finish().unwrap();
        assert_eq!(c.horizon, 10);
        assert_eq!(c.supply, int(1));
    }

    #[test]
    fn demand_flag_forms() {
        let u = DemandSource::parse_flag("uniform(a=2, b=1/2)").unwrap();
        assert_eq!(
            u,
            DemandSource::Family {
                spec: DemandFamilySpec::Uniform {
                    a: int(2),
                    b: ratio(1, 2)
                },
                nodes: DEFAULT_NODES
            }
        );
        let e = DemandSource::parse_flag("equal_revenue(H=e^2,nodes=100)").unwrap();
        assert_eq!(
            e,
            DemandSource::Family {
                spec: DemandFamilySpec::equal_revenue_e2(),
                nodes: 100
            }
        );
        let s = DemandSource::parse_flag("stepped(M=100,eps=1e-6)").unwrap();
        assert!(matches!(
            s,
            DemandSource::Family {
                spec: DemandFamilySpec::Stepped { .. },
                ..
            }
        ));
        let p = DemandSource::parse_flag("[[0, 2], [\"1/2\", 0]]").unwrap();
        assert_eq!(p.curve().unwrap().support_end(), ratio(1, 2));
        assert_eq!(
            DemandSource::parse_flag("@c.json").unwrap(),
            DemandSource::File("c.json".into())
        );
        assert!(DemandSource::parse_flag("linear").is_err());
        assert!(DemandSource::parse_flag("uniform(a=1").is_err());
        assert!(DemandSource::parse_flag("uniform(z=1)").is_err());
    }

    #[test]
    fn inline_points_and_paths() {
        let c = parse("supply = 1\n[demand]\npoints = [[0, 1], [\"1\", 0]]\n").unwrap();
        assert_eq!(c.demand.curve().unwrap().max_quantity(), int(1));
        let c = PartialConfig::from_toml(
            "supply = 1\n[demand]\npath = \"q.json\"\n",
            Path::new("/cfg"),
        )
        .unwrap()
        .finish()
        .unwrap();
        assert_eq!(c.demand, DemandSource::File("/cfg/q.json".into()));
        assert!(parse("supply = 1\n[demand]\nfamily = \"uniform\"\npath = \"q.json\"\n").is_err());
    }
}
