use std::sync::OnceLock;

use afshar_core::scenario::persist::{flux_csv, load_results, write_result};
use afshar_core::scenario::{config_hash, ConfigError, RowStatus};
use afshar_core::*;

struct Canonical {
    runner: ScenarioRunner,
    results: Vec<RunResult>,
}

/// All seven canonical runs with Monte Carlo, computed once per process.
fn canonical() -> &'static Canonical {
    static CELL: OnceLock<Canonical> = OnceLock::new();
    CELL.get_or_init(|| {
        let config = Config::canonical();
        let hash = config_hash(scenario::config::CANONICAL_TOML.as_bytes());
        let runner = ScenarioRunner::new(config.apparatus().unwrap(), hash);
        let mc = config.monte_carlo.clone().unwrap();
        let results = ScenarioRef::canonical_set()
            .into_iter()
            .map(|r| {
                let cfg = runner.counting_config(r, &mc, mc.seed, None).unwrap();
                runner.run(r, Some(&cfg)).unwrap()
            })
            .collect();
        Canonical { runner, results }
    })
}

fn result(label: &str) -> &'static RunResult {
    canonical().results.iter().find(|r| r.scenario == label).unwrap()
}

#[test]
fn open_apparatus_splits_evenly_and_loses_nothing_at_the_grid() {
    let s1 = result("S1");
    let f = &s1.fluxes;
    let half = 0.5 * f.detectors();
    assert!((f.detector_1 - half).abs() <= 0.01 * half, "{f:?}");
    assert!(s1.grid.is_none());
    assert_eq!(f.blocked, 0.0);
    assert!(s1.visibility.v_standard.unwrap() > 0.95);
}

#[test]
fn every_run_accounts_for_all_power() {
    for r in &canonical().results {
        assert!(r.fluxes.unaccounted().abs() < 1e-9, "{}: {:?}", r.scenario, r.fluxes);
        let t = r.tally.as_ref().unwrap();
        assert_eq!(t.counts().iter().sum::<u64>(), t.total);
    }
}

#[test]
fn wires_at_minima_cost_far_less_than_wires_over_one_beam() {
    let summary = summarize(&canonical().results);
    let (l2, l3, l4) = (
        summary.value("loss_S2").unwrap(),
        summary.value("loss_S3").unwrap(),
        summary.value("loss_S4").unwrap(),
    );
    assert!(l2 < 0.1 * l4, "{l2} vs {l4}");
    assert!(l3 > l2 && l2 <= 0.25 * l3, "{l2} vs {l3}");
}

#[test]
fn single_beam_loss_reaches_the_geometric_floor() {
    let a = canonical().runner.apparatus();
    let floor = a.covering_ratio - a.geometry.dx / a.fringe_period();
    for label in ["S4-left", "S4-right"] {
        let g = result(label).grid.as_ref().unwrap();
        assert!(g.blocked_fraction >= floor, "{label}: {}", g.blocked_fraction);
    }
}

#[test]
fn single_pinhole_runs_carry_which_way_information() {
    for label in ["S4-left", "S5-left"] {
        let f = &result(label).fluxes;
        assert!(f.detector_1 > 100.0 * f.detector_2, "{label}: {f:?}");
        assert!(result(label).visibility.v_standard.is_none());
    }
    for label in ["S4-right", "S5-right"] {
        let f = &result(label).fluxes;
        assert!(f.detector_2 > 100.0 * f.detector_1, "{label}: {f:?}");
    }
}

#[test]
fn transmitted_visibility_tracks_the_closed_form() {
    let c = canonical();
    for a in [0.02, 0.05, 0.1] {
        let runner = c.runner.with_apparatus(c.runner.apparatus().with_covering_ratio(a).unwrap());
        let blocked = |id| {
            let (_, loss) = runner.mask(ScenarioRef { id, open: OpenMask::Both }).unwrap().unwrap();
            loss.blocked_fraction
        };
        let v = visibility(1.0 - blocked(ScenarioId::S2), 1.0 - blocked(ScenarioId::S3)).unwrap();
        let closed = steuernagel_visibility(a).unwrap();
        assert!((v - closed).abs() <= 0.02 * closed, "a={a}: {v} vs {closed}");
    }
}

#[test]
fn summary_rows_name_their_sources() {
    let summary = compare_analyses(&canonical().results).unwrap();
    let v_t = summary.row("v_t_fullwave").unwrap();
    assert_eq!(v_t.provenance, ["S2", "S3"]);
    assert_eq!(summary.row("v_flores").unwrap().provenance, ["S2"]);
    assert_eq!(summary.row("k_with_grid").unwrap().provenance, ["S4-left", "S4-right"]);
    assert_eq!(summary.row("k_no_grid").unwrap().provenance, ["S5-left", "S5-right"]);
    assert!(summary.rows.iter().all(|r| r.status == RowStatus::Ok), "{}", summary.to_text());
    assert_eq!(summary.config_hashes.len(), 1);
    assert!(summary.rows.iter().filter(|r| r.quantity.starts_with("dual_")).count() == 6);
}

#[test]
fn only_the_bound_based_pairings_exceed_one() {
    let summary = summarize(&canonical().results);
    for k in ["k_no_grid", "k_with_grid"] {
        let flores = summary.row(&format!("dual_flores_{k}")).unwrap();
        assert_eq!(flores.violated, Some(true), "{}", summary.to_text());
        let steuernagel = summary.row(&format!("dual_steuernagel_{k}")).unwrap();
        assert_eq!(steuernagel.violated, Some(false), "{}", summary.to_text());
    }
    assert!(summary.to_text().contains("VIOLATED"));
}

#[test]
fn monte_carlo_agrees_with_the_fields() {
    for r in &canonical().results {
        let t = r.tally.as_ref().unwrap();
        let w = r.fluxes.outcome_weights();
        let total: f64 = w.iter().sum();
        let n = t.total as f64;
        for (k, f) in t.fractions().iter().enumerate() {
            let p = w[k] / total;
            let sigma = (p * (1.0 - p) / n).sqrt().max(1.0 / n);
            assert!((f - p).abs() <= 5.0 * sigma, "{} outcome {k}: {f} vs {p}", r.scenario);
        }
    }
}

#[test]
fn repeated_runs_serialize_identically() {
    let c = canonical();
    let r = ScenarioRef::new(ScenarioId::S4, OpenMask::Left).unwrap();
    let mc = Config::canonical().monte_carlo.unwrap();
    let cfg = c.runner.counting_config(r, &mc, mc.seed, None).unwrap();
    let again = c.runner.run(r, Some(&cfg)).unwrap();
    assert_eq!(serde_json::to_string(&again).unwrap(), serde_json::to_string(result("S4-left")).unwrap());
}

#[test]
fn partial_results_give_a_partial_summary() {
    let some: Vec<RunResult> =
        canonical().results.iter().filter(|r| ["S2", "S3"].contains(&r.scenario.as_str())).cloned().collect();
    let summary = summarize(&some);
    assert_eq!(summary.row("v_t_fullwave").unwrap().status, RowStatus::Ok);
    let k = summary.row("k_no_grid").unwrap();
    assert_eq!(k.status, RowStatus::MissingPrerequisite);
    assert_eq!(k.missing, ["S5-left", "S5-right"]);
    let err = compare_analyses(&some).unwrap_err();
    assert_eq!(err.missing, ["S1", "S4-left", "S4-right", "S5-left", "S5-right"]);
    assert!(summary.to_csv().contains("missing-prerequisite"));
}

#[test]
fn results_survive_a_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    for r in &canonical().results {
        write_result(dir.path(), r).unwrap();
    }
    let back = load_results(dir.path()).unwrap();
    let mut expected = canonical().results.clone();
    expected.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    assert!(back == expected, "results changed on disk");
    assert_eq!(flux_csv(&back), flux_csv(&expected));
    let csv = flux_csv(&back);
    assert_eq!(csv.lines().count(), 8);
    assert!(csv.starts_with("scenario,flux1,flux2,blocked,elsewhere,reduction,ci_low,ci_high"));
}

#[test]
fn canonical_config_round_trips_and_rejects_bad_values() {
    let c = Config::canonical();
    assert_eq!(Config::from_toml_str(&c.to_toml_string()).unwrap(), c);
    let text = scenario::config::CANONICAL_TOML;

    let unknown = text.replace("[detectors]", "[detectors]\nshape = \"square\"");
    assert!(matches!(Config::from_toml_str(&unknown), Err(ConfigError::Parse(_))));

    let bad = Config::from_toml_str(&text.replace("covering_ratio = 0.05", "covering_ratio = 1.5")).unwrap();
    match bad.apparatus() {
        Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "wire_grid.covering_ratio"),
        other => panic!("{other:?}"),
    }
    assert_ne!(config_hash(text.as_bytes()), config_hash(unknown.as_bytes()));
}

#[test]
fn a_grid_too_small_for_the_beam_trips_the_guard() {
    let text = scenario::config::CANONICAL_TOML
        .replace("samples = 2048", "samples = 256")
        .replace("aperture_diameter = 36e-3", "aperture_diameter = 4e-3");
    let config = Config::from_toml_str(&text).unwrap();
    let runner = ScenarioRunner::new(config.apparatus().unwrap(), config_hash(text.as_bytes()));
    let err = runner.run(ScenarioRef::new(ScenarioId::S1, OpenMask::Both).unwrap(), None).unwrap_err();
    assert!(err.is_numerical_guard(), "{err}");
    assert!(err.to_string().contains("S1"), "{err}");
}
