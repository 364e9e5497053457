//! JSON channel descriptions.
//!
//! ```json
//! {
//!   "metadata": {"name": "flip", "description": "identity or bit flip"},
//!   "states": ["good", "bad"],
//!   "Q": [[1, 0], [0, 1]],
//!   "gamma": [0.5, 0.5],
//!   "maps": ["identity", [[[[0, 0], [1, 0]], [[1, 0], [0, 0]]]]]
//! }
//! ```
//!
//! A map is either a list of Kraus matrices (rows of `[re, im]` pairs) or
//! one of the names `identity`, `bit_flip`, `depolarizing:p`,
//! `dephasing:p`.

use serde::{Deserialize, Serialize};

use crate::channel::{CptMap, MemoryChannel};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::markov::MarkovChain;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapSpec {
    Named(String),
    Kraus(Vec<Vec<Vec<[f64; 2]>>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecFile {
    #[serde(default)]
    pub metadata: Metadata,
    pub states: Vec<String>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub maps: Vec<MapSpec>,
}

fn named_map(name: &str) -> Result<CptMap> {
    let (kind, arg) = match name.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a.trim())),
        None => (name.trim(), None),
    };
    let p = || -> Result<f64> {
        let a = arg.ok_or_else(|| Error::Validation(format!("map '{name}' needs a parameter, e.g. {kind}:0.5")))?;
        let p: f64 = a.parse().map_err(|_| Error::Validation(format!("bad parameter in map '{name}'")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Validation(format!("parameter of '{name}' must lie in [0, 1]")));
        }
        Ok(p)
    };
    match kind {
        "identity" => Ok(CptMap::identity(2)),
        "bit_flip" => Ok(CptMap::bit_flip()),
        "depolarizing" => Ok(CptMap::depolarizing(p()?)),
        "dephasing" => Ok(CptMap::dephasing(p()?)),
        _ => Err(Error::Validation(format!("unknown map name '{name}'"))),
    }
}

impl MapSpec {
    pub fn to_map(&self) -> Result<CptMap> {
        match self {
            MapSpec::Named(name) => named_map(name),
            MapSpec::Kraus(ops) => {
                let kraus = ops
                    .iter()
                    .map(|rows| {
                        let r = rows.len();
                        let c = rows.first().map_or(0, |row| row.len());
                        if r == 0 || rows.iter().any(|row| row.len() != c) {
                            return Err(Error::Shape("ragged or empty Kraus matrix".into()));
                        }
                        let entries = rows.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
                        ComplexMatrix::from_row_major(r, c, entries)
                    })
                    .collect::<Result<Vec<_>>>()?;
                CptMap::new(kraus)
            }
        }
    }
}

impl ChannelSpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("spec parse error: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn to_channel(&self) -> Result<MemoryChannel> {
        if self.maps.len() != self.states.len() {
            return Err(Error::Shape(format!("{} states but {} maps", self.states.len(), self.maps.len())));
        }
        let chain = MarkovChain::new(self.states.clone(), self.q.clone(), self.gamma.clone())?;
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| m.to_map().map_err(|e| Error::Validation(format!("map {i}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        MemoryChannel::new(chain, maps)
    }
}

pub fn parse_channel(text: &str) -> Result<MemoryChannel> {
    ChannelSpecFile::from_json(text)?.to_channel()
}
