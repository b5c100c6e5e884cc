//! The five canonical scenarios, their end-to-end runs, the cross-scenario
//! summary and result persistence.

pub mod compare;
pub mod config;
pub mod persist;
pub mod runner;
pub mod sweep;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::optics::OpenMask;

pub use compare::{compare_analyses, summarize, IncompleteInput, RowStatus, Summary, SummaryRow};
pub use config::{config_hash, load_config, Apparatus, Config, ConfigError};
pub use runner::{run_scenario, FluxFractions, GridSummary, RunError, RunResult, Scenario, ScenarioRunner, Stage};
pub use sweep::{sweep, SweepParam, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    /// Both open, no grid.
    S1,
    /// Both open, wires at the minima.
    S2,
    /// Both open, wires at the maxima.
    S3,
    /// One pinhole open, grid at the minima of the two-pinhole pattern.
    S4,
    /// One pinhole open, no grid.
    S5,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [Self::S1, Self::S2, Self::S3, Self::S4, Self::S5];

    pub fn has_grid(self) -> bool {
        matches!(self, Self::S2 | Self::S3 | Self::S4)
    }

    pub fn single_pinhole(self) -> bool {
        matches!(self, Self::S4 | Self::S5)
    }

    /// Placement phase of the wires, if any.
    pub fn placement_phase(self) -> Option<f64> {
        match self {
            Self::S2 | Self::S4 => Some(0.0),
            Self::S3 => Some(PI),
            Self::S1 | Self::S5 => None,
        }
    }

    /// The same geometry without the grid.
    pub fn baseline(self) -> Option<ScenarioId> {
        match self {
            Self::S2 | Self::S3 => Some(Self::S1),
            Self::S4 => Some(Self::S5),
            Self::S1 | Self::S5 => None,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A scenario id plus the open pinholes: `S1`..`S3` open both, `S4`/`S5`
/// one side. Labels read `S2` or `S4-left`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScenarioRef {
    pub id: ScenarioId,
    pub open: OpenMask,
}

impl ScenarioRef {
    pub fn new(id: ScenarioId, open: OpenMask) -> Option<Self> {
        (id.single_pinhole() != (open == OpenMask::Both)).then_some(Self { id, open })
    }

    /// S1, S2, S3, S4-left, S4-right, S5-left, S5-right.
    pub fn canonical_set() -> Vec<ScenarioRef> {
        ScenarioId::ALL.iter().flat_map(|&id| Self::expand(id)).collect()
    }

    pub fn expand(id: ScenarioId) -> Vec<ScenarioRef> {
        if id.single_pinhole() {
            vec![Self { id, open: OpenMask::Left }, Self { id, open: OpenMask::Right }]
        } else {
            vec![Self { id, open: OpenMask::Both }]
        }
    }

    pub fn label(&self) -> String {
        if self.id.single_pinhole() {
            format!("{}-{}", self.id, self.open)
        } else {
            self.id.to_string()
        }
    }

    pub fn baseline(&self) -> Option<ScenarioRef> {
        self.id.baseline().map(|id| Self { id, open: self.open })
    }

    /// Parses a comma-separated list; a bare `S4`/`S5` expands to both sides
    /// and `all` to the canonical set.
    pub fn parse_list(text: &str) -> Result<Vec<ScenarioRef>, String> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if part.eq_ignore_ascii_case("all") {
                out.extend(Self::canonical_set());
                continue;
            }
            let (id_text, side) = match part.split_once('-') {
                Some((a, b)) => (a, Some(b)),
                None => (part, None),
            };
            let id = match id_text.to_ascii_uppercase().as_str() {
                "S1" => ScenarioId::S1,
                "S2" => ScenarioId::S2,
                "S3" => ScenarioId::S3,
                "S4" => ScenarioId::S4,
                "S5" => ScenarioId::S5,
                _ => return Err(format!("unknown scenario `{part}`")),
            };
            match side {
                None => out.extend(Self::expand(id)),
                Some(s) => {
                    let open = OpenMask::parse(s)
                        .and_then(|o| Self::new(id, o))
                        .ok_or_else(|| format!("scenario `{part}` does not exist"))?;
                    out.push(open);
                }
            }
        }
        if out.is_empty() {
            return Err("no scenarios given".into());
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for ScenarioRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ScenarioRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match Self::parse_list(s)?.as_slice() {
            [one] => Ok(*one),
            _ => Err(format!("`{s}` does not name a single scenario run")),
        }
    }
}
