//! Sweeps over the covering ratio `a` or the loss fraction `L`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::persist::fmt_opt;
use super::runner::{RunError, ScenarioRunner};
use super::{ScenarioId, ScenarioRef};
use crate::optics::OpenMask;
use crate::photon::which_way_k;
use crate::visibility::{flores_bound_or_zero, steuernagel_visibility, visibility};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    /// Covering ratio.
    A,
    /// Loss fraction fed to the square-profile bound.
    L,
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" | "A" => Ok(Self::A),
            "L" | "l" => Ok(Self::L),
            _ => Err(format!("unknown sweep parameter `{s}` (expected `a` or `L`)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("sweep `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error(transparent)]
    Run(#[from] RunError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub l: f64,
    pub v_t_closed: Option<f64>,
    pub v_t_fullwave: Option<f64>,
    pub v_flores: Option<f64>,
    pub k_no_grid: Option<f64>,
    pub k_with_grid: Option<f64>,
    pub dual_flores: Option<f64>,
    pub dual_steuernagel: Option<f64>,
}

pub const SWEEP_HEADER: [&str; 9] = [
    "a",
    "L",
    "v_t_closed",
    "v_t_fullwave",
    "v_flores",
    "k_no_grid",
    "k_with_grid",
    "dual_flores",
    "dual_steuernagel",
];

impl SweepRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            fmt_opt(Some(self.a)),
            fmt_opt(Some(self.l)),
            fmt_opt(self.v_t_closed),
            fmt_opt(self.v_t_fullwave),
            fmt_opt(self.v_flores),
            fmt_opt(self.k_no_grid),
            fmt_opt(self.k_with_grid),
            fmt_opt(self.dual_flores),
            fmt_opt(self.dual_steuernagel),
        ]
    }
}

/// `steps` evenly spaced values from `from` to `to` inclusive.
pub fn sweep_values(from: f64, to: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                to
            } else {
                from + (to - from) * i as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

struct FullWave {
    v_t: Option<f64>,
    loss: f64,
    k_with_grid: Option<f64>,
}

fn full_wave(runner: &ScenarioRunner) -> Result<FullWave, RunError> {
    let both = |id| ScenarioRef { id, open: OpenMask::Both };
    let blocked = |id| -> Result<f64, RunError> {
        let (_, loss) = runner.mask(both(id))?.expect("scenario has a grid");
        Ok(loss.blocked_fraction)
    };
    let (b2, b3) = (blocked(ScenarioId::S2)?, blocked(ScenarioId::S3)?);
    Ok(FullWave {
        v_t: visibility(1.0 - b2, 1.0 - b3).ok(),
        loss: b2,
        k_with_grid: k_from_runs(runner, ScenarioId::S4)?,
    })
}

fn k_from_runs(runner: &ScenarioRunner, id: ScenarioId) -> Result<Option<f64>, RunError> {
    let left = runner.run(ScenarioRef { id, open: OpenMask::Left }, None)?.fluxes;
    let right = runner.run(ScenarioRef { id, open: OpenMask::Right }, None)?.fluxes;
    Ok(which_way_k((left.detector_1, left.detector_2), (right.detector_2, right.detector_1)).ok())
}

/// One row per swept value. K comes from field-computed detector fluxes.
pub fn sweep(
    runner: &ScenarioRunner,
    param: SweepParam,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<Vec<SweepRow>, SweepError> {
    if steps < 2 {
        return Err(SweepError::Invalid {
            field: "steps",
            reason: format!("{steps} must be at least 2"),
        });
    }
    if !(from.is_finite() && to.is_finite() && from < to) {
        return Err(SweepError::Invalid {
            field: "from",
            reason: format!("from = {from} must be below to = {to}"),
        });
    }
    match param {
        SweepParam::A if !(from > 0.0 && to < 1.0) => {
            return Err(SweepError::Invalid {
                field: "to",
                reason: format!("covering ratio range [{from}, {to}] must lie inside (0, 1)"),
            })
        }
        SweepParam::L if !(from >= 0.0 && to < 1.0) => {
            return Err(SweepError::Invalid {
                field: "to",
                reason: format!("loss range [{from}, {to}] must lie inside [0, 1)"),
            })
        }
        _ => {}
    }

    let k_no_grid = k_from_runs(runner, ScenarioId::S5)?;
    let square = |x: Option<f64>, y: Option<f64>| Some(x?.powi(2) + y?.powi(2));
    let values = sweep_values(from, to, steps);
    let mut rows = Vec::with_capacity(steps);
    match param {
        SweepParam::A => {
            for a in values {
                let apparatus = runner.apparatus().with_covering_ratio(a).map_err(|e| SweepError::Invalid {
                    field: "from",
                    reason: e.to_string(),
                })?;
                let fw = full_wave(&runner.with_apparatus(apparatus))?;
                let v_flores = flores_bound_or_zero(fw.loss, a).ok().map(|(v, _)| v);
                rows.push(SweepRow {
                    a,
                    l: fw.loss,
                    v_t_closed: steuernagel_visibility(a).ok(),
                    v_t_fullwave: fw.v_t,
                    v_flores,
                    k_no_grid,
                    k_with_grid: fw.k_with_grid,
                    dual_flores: square(v_flores, k_no_grid),
                    dual_steuernagel: square(fw.v_t, fw.k_with_grid),
                });
            }
        }
        SweepParam::L => {
            let a = runner.apparatus().covering_ratio;
            let fw = full_wave(runner)?;
            for l in values {
                let v_flores = flores_bound_or_zero(l, a).ok().map(|(v, _)| v);
                rows.push(SweepRow {
                    a,
                    l,
                    v_t_closed: steuernagel_visibility(a).ok(),
                    v_t_fullwave: fw.v_t,
                    v_flores,
                    k_no_grid,
                    k_with_grid: fw.k_with_grid,
                    dual_flores: square(v_flores, k_no_grid),
                    dual_steuernagel: square(fw.v_t, fw.k_with_grid),
                });
            }
        }
    }
    Ok(rows)
}
