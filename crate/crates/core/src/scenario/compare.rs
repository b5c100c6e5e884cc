//! Cross-scenario summary: both visibility analyses, K with and without the
//! grid, flux losses and every V×K duality pairing, each row tagged with the
//! scenarios that fed it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::persist::fmt_num;
use super::runner::RunResult;
use super::{ScenarioId, ScenarioRef};
use crate::optics::OpenMask;
use crate::photon::{estimate_k, which_way_k};
use crate::visibility::{duality_check, flores_bound_or_zero, steuernagel_visibility, visibility};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("incomplete input: missing scenario(s) {}", missing.join(", "))]
pub struct IncompleteInput {
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    MissingPrerequisite,
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub quantity: String,
    pub value: Option<f64>,
    /// Closed-form comparison value, where one exists.
    pub reference: Option<f64>,
    /// Scenario labels the row was computed from.
    pub provenance: Vec<String>,
    pub status: RowStatus,
    pub missing: Vec<String>,
    /// Duality rows only: whether V² + K² exceeds 1.
    pub violated: Option<bool>,
    pub note: String,
}

impl SummaryRow {
    fn new(quantity: &str, provenance: &[ScenarioRef]) -> Self {
        Self {
            quantity: quantity.to_string(),
            value: None,
            reference: None,
            provenance: provenance.iter().map(ScenarioRef::label).collect(),
            status: RowStatus::Ok,
            missing: Vec::new(),
            violated: None,
            note: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub config_hashes: Vec<String>,
}

impl Summary {
    pub fn row(&self, quantity: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    pub fn value(&self, quantity: &str) -> Option<f64> {
        self.row(quantity).and_then(|r| r.value)
    }

    pub fn missing(&self) -> Vec<String> {
        let mut all: Vec<String> = self.rows.iter().flat_map(|r| r.missing.iter().cloned()).collect();
        all.sort();
        all.dedup();
        all
    }

    /// Columns: quantity, value, reference, status, violated, provenance, missing, note.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["quantity", "value", "reference", "status", "violated", "provenance", "missing", "note"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.quantity.clone(),
                r.value.map(fmt_num).unwrap_or_default(),
                r.reference.map(fmt_num).unwrap_or_default(),
                status_label(r.status).to_string(),
                r.violated.map(|v| v.to_string()).unwrap_or_default(),
                r.provenance.join(";"),
                r.missing.join(";"),
                r.note.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<34} {:>14} {:>14}  {:<20} provenance", "quantity", "value", "reference", "status");
        for r in &self.rows {
            let value = r.value.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
            let reference = r.reference.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
            let mut status = status_label(r.status).to_string();
            if r.violated == Some(true) {
                status = "VIOLATED".into();
            }
            let _ = writeln!(
                out,
                "{:<34} {:>14} {:>14}  {:<20} {}",
                r.quantity,
                value,
                reference,
                status,
                r.provenance.join(", ")
            );
            if !r.missing.is_empty() {
                let _ = writeln!(out, "{:<34} missing prerequisite: {}", "", r.missing.join(", "));
            }
            if !r.note.is_empty() {
                let _ = writeln!(out, "{:<34} {}", "", r.note);
            }
        }
        let violated: Vec<&str> = self
            .rows
            .iter()
            .filter(|r| r.violated == Some(true))
            .map(|r| r.quantity.as_str())
            .collect();
        if !violated.is_empty() {
            let _ = writeln!(out, "\nV² + K² > 1 in: {}", violated.join(", "));
        }
        out
    }
}

fn status_label(s: RowStatus) -> &'static str {
    match s {
        RowStatus::Ok => "ok",
        RowStatus::MissingPrerequisite => "missing-prerequisite",
        RowStatus::Undefined => "undefined",
    }
}

/// Full summary; fails naming every missing scenario.
pub fn compare_analyses(results: &[RunResult]) -> Result<Summary, IncompleteInput> {
    let summary = summarize(results);
    let missing = summary.missing();
    if missing.is_empty() {
        Ok(summary)
    } else {
        Err(IncompleteInput { missing })
    }
}

struct Index<'a> {
    by_ref: BTreeMap<ScenarioRef, &'a RunResult>,
}

impl<'a> Index<'a> {
    fn get(&self, r: ScenarioRef) -> Option<&'a RunResult> {
        self.by_ref.get(&r).copied()
    }

    /// All results for `refs`, or the labels of the absent ones.
    fn all(&self, refs: &[ScenarioRef]) -> Result<Vec<&'a RunResult>, Vec<String>> {
        let missing: Vec<String> = refs.iter().filter(|r| self.get(**r).is_none()).map(|r| r.label()).collect();
        if missing.is_empty() {
            Ok(refs.iter().map(|r| self.get(*r).expect("checked")).collect())
        } else {
            Err(missing)
        }
    }
}

fn r(id: ScenarioId, open: OpenMask) -> ScenarioRef {
    ScenarioRef { id, open }
}

/// Computes every row it can; rows lacking inputs are marked
/// [`RowStatus::MissingPrerequisite`] with the absent scenario labels.
pub fn summarize(results: &[RunResult]) -> Summary {
    let mut by_ref = BTreeMap::new();
    for res in results {
        by_ref.entry(res.reference()).or_insert(res);
    }
    let idx = Index { by_ref };
    let mut hashes: Vec<String> = results.iter().map(|r| r.config_hash.clone()).collect();
    hashes.sort();
    hashes.dedup();

    use OpenMask::{Both, Left, Right};
    use ScenarioId::*;
    let s1 = r(S1, Both);
    let s2 = r(S2, Both);
    let s3 = r(S3, Both);
    let s4 = [r(S4, Left), r(S4, Right)];
    let s5 = [r(S5, Left), r(S5, Right)];

    let mut rows = Vec::new();
    let row_with = |name: &str, refs: &[ScenarioRef], f: &dyn Fn(&[&RunResult], &mut SummaryRow)| {
        let mut row = SummaryRow::new(name, refs);
        match idx.all(refs) {
            Ok(found) => f(&found, &mut row),
            Err(missing) => {
                row.status = RowStatus::MissingPrerequisite;
                row.missing = missing;
            }
        }
        row
    };

    let v_flores = row_with("v_flores", &[s2], &|rs, row| {
        let g = rs[0].grid.as_ref().expect("S2 has a grid");
        match flores_bound_or_zero(g.blocked_fraction, g.covering_ratio) {
            Ok((v, degenerate)) => {
                row.value = Some(v);
                row.note = format!(
                    "L = blocked-at-grid fraction {}, a = {}{}",
                    fmt_num(g.blocked_fraction),
                    g.covering_ratio,
                    if degenerate { "; degenerate bound reported as 0" } else { "" }
                );
            }
            Err(e) => undefined(row, e.to_string()),
        }
    });

    let v_t = row_with("v_t_fullwave", &[s2, s3], &|rs, row| {
        let (g2, g3) = (rs[0].grid.as_ref().expect("grid"), rs[1].grid.as_ref().expect("grid"));
        let (t_max, t_min) = (1.0 - g2.blocked_fraction, 1.0 - g3.blocked_fraction);
        row.reference = steuernagel_visibility(g2.covering_ratio).ok();
        match visibility(t_max, t_min) {
            Ok(v) => {
                row.value = Some(v);
                row.note = format!(
                    "transmitted fractions at minima {} and maxima {}; two grid placements",
                    fmt_num(t_max),
                    fmt_num(t_min)
                );
            }
            Err(e) => undefined(row, e.to_string()),
        }
    });

    let v_profile = row_with("v_profile", &[s2], &|rs, row| {
        row.value = rs[0].visibility.v_standard;
        row.note = "grid-plane profile before the wires".into();
    });

    let k_row = |name: &str, refs: [ScenarioRef; 2]| {
        row_with(name, &refs, &|rs, row| {
            let (left, right) = (rs[0], rs[1]);
            let k = match (&left.tally, &right.tally) {
                (Some(tl), Some(tr)) => {
                    row.note = "Monte Carlo detector counts".into();
                    estimate_k(tl, tr)
                }
                _ => {
                    row.note = "field-computed detector fluxes".into();
                    which_way_k(
                        (left.fluxes.detector_1, left.fluxes.detector_2),
                        (right.fluxes.detector_2, right.fluxes.detector_1),
                    )
                }
            };
            match k {
                Ok(k) => row.value = Some(k),
                Err(e) => undefined(row, e.to_string()),
            }
        })
    };
    let k_no_grid = k_row("k_no_grid", s5);
    let k_with_grid = k_row("k_with_grid", s4);

    let loss_row = |name: &str, with: &[ScenarioRef], without: &[ScenarioRef]| {
        let refs: Vec<ScenarioRef> = with.iter().chain(without).copied().collect();
        row_with(name, &refs, &|rs, row| {
            let (w, o) = rs.split_at(with.len());
            let det = |v: &[&RunResult]| v.iter().map(|r| r.fluxes.detectors()).sum::<f64>();
            row.value = Some(1.0 - det(w) / det(o));
            row.note = "detector-flux reduction against the no-grid run".into();
        })
    };
    let loss_s2 = loss_row("loss_S2", &[s2], &[s1]);
    let loss_s3 = loss_row("loss_S3", &[s3], &[s1]);
    let loss_s4 = loss_row("loss_S4", &s4, &s5);

    let blocked_row = |name: &str, refs: &[ScenarioRef]| {
        row_with(name, refs, &|rs, row| {
            let mean = rs.iter().map(|r| r.grid.as_ref().map_or(0.0, |g| g.blocked_fraction)).sum::<f64>()
                / rs.len() as f64;
            row.value = Some(mean);
            row.note = "fraction of the grid-plane power stopped by the wires".into();
        })
    };
    let blocked_s2 = blocked_row("blocked_S2", &[s2]);
    let blocked_s3 = blocked_row("blocked_S3", &[s3]);
    let blocked_s4 = blocked_row("blocked_S4", &s4);

    let v_rows = [("flores", &v_flores), ("steuernagel", &v_t), ("profile", &v_profile)];
    let k_rows = [("k_no_grid", &k_no_grid), ("k_with_grid", &k_with_grid)];
    let mut duals = Vec::new();
    for (vn, vr) in v_rows {
        for (kn, kr) in k_rows {
            let mut row = SummaryRow {
                quantity: format!("dual_{vn}_{kn}"),
                provenance: union(&vr.provenance, &kr.provenance),
                ..SummaryRow::new("", &[])
            };
            row.missing = union(&vr.missing, &kr.missing);
            match (vr.value, kr.value) {
                (Some(v), Some(k)) => match duality_check(v.clamp(0.0, 1.0), k.clamp(0.0, 1.0)) {
                    Ok(d) => {
                        row.value = Some(d.sum_of_squares);
                        row.violated = Some(d.violated);
                        row.note = format!("V = {}, K = {}", fmt_num(d.v), fmt_num(d.k));
                    }
                    Err(e) => undefined(&mut row, e.to_string()),
                },
                _ if !row.missing.is_empty() => row.status = RowStatus::MissingPrerequisite,
                _ => undefined(&mut row, "input row undefined".into()),
            }
            duals.push(row);
        }
    }

    rows.extend([v_flores, v_t, v_profile, k_no_grid, k_with_grid]);
    rows.extend([loss_s2, loss_s3, loss_s4, blocked_s2, blocked_s3, blocked_s4]);
    rows.extend(duals);
    Summary {
        rows,
        config_hashes: hashes,
    }
}

fn undefined(row: &mut SummaryRow, why: String) {
    row.status = RowStatus::Undefined;
    row.note = why;
}

fn union(a: &[String], b: &[String]) -> Vec<String> {
    let mut v: Vec<String> = a.iter().chain(b).cloned().collect();
    v.sort();
    v.dedup();
    v
}
