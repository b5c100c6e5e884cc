use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CANONICAL: &str = include_str!("../../core/config/canonical.toml");

fn afshar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afshar"))
        .args(args)
        .env_remove("AFSHAR_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_a_complete_results_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CANONICAL);
    let out = dir.path().join("run");
    let o = afshar(&["simulate", "--config", s(&cfg), "--scenario", "S1", "--out", s(&out), "--mc-duration", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["manifest.json", "config.toml", "flux.csv", "results/S1.json", "profiles/S1.csv", "planes/S1.f64", "planes/S1.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let manifest = afshar_core::scenario::persist::read_manifest(&out).unwrap();
    assert_eq!(manifest.config_hash, afshar_core::scenario::config_hash(CANONICAL.as_bytes()));
    assert_eq!(manifest.command, "simulate");
    assert_eq!(manifest.seed, Some(20040703));
    assert_eq!(fs::read(out.join("config.toml")).unwrap(), CANONICAL.as_bytes());
    // Numbers carry 17 significant digits and parse back.
    let flux = fs::read_to_string(out.join("flux.csv")).unwrap();
    let row = flux.lines().nth(1).unwrap();
    let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(v > 0.4 && v < 0.5, "{row}");
}

#[test]
fn same_seed_gives_identical_files_and_leaves_the_config_alone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CANONICAL);
    let before = fs::metadata(&cfg).unwrap().modified().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = afshar(&[
            "simulate", "--config", s(&cfg), "--scenario", "S5-left", "--seed", "7", "--mc-duration", "2", "--out", s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["flux.csv", "results/S5-left.json", "profiles/S5-left.csv", "planes/S5-left.f64"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let c = dir.path().join("c");
    let o = afshar(&["simulate", "--config", s(&cfg), "--scenario", "S5-left", "--seed", "8", "--mc-duration", "2", "--out", s(&c)]);
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read(a.join("flux.csv")).unwrap(), fs::read(c.join("flux.csv")).unwrap());
    assert_eq!(fs::read_to_string(&cfg).unwrap(), CANONICAL);
    assert_eq!(fs::metadata(&cfg).unwrap().modified().unwrap(), before);
}

#[test]
fn invalid_covering_ratio_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CANONICAL.replace("covering_ratio = 0.05", "covering_ratio = 1.2"));
    let out = dir.path().join("run");
    let o = afshar(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("wire_grid.covering_ratio"), "{}", stderr(&o));
    assert!(!out.join("results").exists());
}

#[test]
fn other_failures_have_their_own_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");

    let o = afshar(&["simulate", "--scenario", "S9", "--out", s(&out)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let o = afshar(&["simulate", "--config", s(&dir.path().join("absent.toml")), "--out", s(&out)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));

    let small = CANONICAL.replace("samples = 2048", "samples = 256").replace("aperture_diameter = 36e-3", "aperture_diameter = 4e-3");
    let cfg = write_config(dir.path(), &small);
    let o = afshar(&["simulate", "--config", s(&cfg), "--scenario", "S1", "--no-mc", "--out", s(&out)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("optics-core/propagation to grid plane"), "{}", stderr(&o));
    assert!(out.join("manifest.json").is_file(), "manifest precedes results");

    let o = afshar(&["report", s(&dir.path().join("nothing"))]);
    assert_eq!(code(&o), 5);

    let o = afshar(&["sweep", "--sweep-param", "a", "--from", "0.2", "--to", "0.1", "--steps", "3", "--out", s(&out)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_afshar"))
        .args(["simulate", "--scenario", "S2", "--no-mc"])
        .env("AFSHAR_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("results/S2.json").is_file());

    // A single-scenario directory gives a partial report.
    let o = Command::new(env!("CARGO_BIN_EXE_afshar")).arg("report").env("AFSHAR_OUT", &out).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    let v_t = csv.lines().find(|l| l.starts_with("v_t_fullwave,")).unwrap();
    assert!(v_t.contains("missing-prerequisite") && v_t.contains("S3"), "{v_t}");
    let v_flores = csv.lines().find(|l| l.starts_with("v_flores,")).unwrap();
    assert!(v_flores.contains(",ok,"), "{v_flores}");
    assert!(out.join("summary.txt").is_file());
    let png = fs::read(out.join("images/S2.png")).unwrap();
    assert_eq!(&png[1..4], b"PNG");
    let sidecar = fs::read_to_string(out.join("images/S2.json")).unwrap();
    assert!(sidecar.contains("\"normalization\""), "{sidecar}");
}

#[test]
fn full_run_report_flags_the_bound_based_violation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("all");
    let o = afshar(&["simulate", "--no-mc", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = afshar(&["report", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    let line = text.lines().find(|l| l.starts_with("dual_flores_k_no_grid")).unwrap();
    assert!(line.contains("VIOLATED"), "{line}");
    let line = text.lines().find(|l| l.starts_with("dual_steuernagel_k_with_grid")).unwrap();
    assert!(!line.contains("VIOLATED"), "{line}");
    assert_eq!(fs::read_dir(out.join("images")).unwrap().count(), 14);
}

#[test]
fn loss_sweep_lowers_the_square_profile_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = afshar(&["sweep", "--sweep-param", "L", "--from", "0", "--to", "0.05", "--steps", "6", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "a,L,v_t_closed,v_t_fullwave,v_flores,k_no_grid,k_with_grid,dual_flores,dual_steuernagel"
    );
    let flores: Vec<f64> = lines.map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(flores.len(), 6);
    assert!(flores.windows(2).all(|w| w[1] < w[0]), "{flores:?}");
    assert!(out.join("manifest.json").is_file());
}
