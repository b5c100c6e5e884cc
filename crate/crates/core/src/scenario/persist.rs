//! Result directories.
//!
//! ```text
//! <out>/manifest.json         written first
//! <out>/config.toml           byte copy of the input config
//! <out>/flux.csv
//! <out>/results/<label>.json  one RunResult each
//! <out>/profiles/<label>.csv  x, intensity at the grid plane
//! <out>/planes/<label>.f64    little-endian f64 grid-plane intensity
//! <out>/planes/<label>.json   its shape and spacing
//! ```
//!
//! Every file is written to a temporary name in the same directory and
//! renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::runner::RunResult;
use crate::photon::{flux_reduction, FluxReduction};

/// Fixed 17-significant-digit scientific notation; parses back exactly.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// [`fmt_num`], or an empty cell.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub output_dir: String,
    pub seed: Option<u64>,
    pub timestamp_unix: u64,
    pub tool_version: String,
    pub config_hash: String,
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> io::Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    atomic_write(&dir.join("manifest.json"), text.as_bytes())
}

pub fn read_manifest(dir: &Path) -> io::Result<RunManifest> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// Grid-plane intensity, block-summed down for storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneImage {
    pub scenario: String,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub plane_z: f64,
    #[serde(skip)]
    pub data: Vec<f64>,
}

impl PlaneImage {
    /// Sums `|ψ|²` over square blocks so neither side exceeds `max_side`.
    pub fn from_intensity(scenario: &str, intensity: &[f64], nx: usize, ny: usize, dx: f64, dy: f64, plane_z: f64, max_side: usize) -> Self {
        let factor = nx.max(ny).div_ceil(max_side.max(1)).next_power_of_two().max(1);
        let (bx, by) = (nx / factor, ny / factor);
        let mut data = vec![0.0; bx * by];
        for j in 0..ny {
            let row = &intensity[j * nx..(j + 1) * nx];
            let out = &mut data[(j / factor) * bx..(j / factor + 1) * bx];
            for (i, v) in row.iter().enumerate() {
                out[i / factor] += v;
            }
        }
        Self {
            scenario: scenario.to_string(),
            nx: bx,
            ny: by,
            dx: dx * factor as f64,
            dy: dy * factor as f64,
            plane_z,
            data,
        }
    }
}

fn data_error(e: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e.to_string())
}

pub fn write_plane(dir: &Path, image: &PlaneImage) -> io::Result<()> {
    let planes = dir.join("planes");
    let bytes: Vec<u8> = image.data.iter().flat_map(|v| v.to_le_bytes()).collect();
    atomic_write(&planes.join(format!("{}.f64", image.scenario)), &bytes)?;
    let meta = serde_json::to_string_pretty(image).expect("plane metadata serializes");
    atomic_write(&planes.join(format!("{}.json", image.scenario)), meta.as_bytes())
}

pub fn read_planes(dir: &Path) -> io::Result<Vec<PlaneImage>> {
    let planes = dir.join("planes");
    let mut out = Vec::new();
    for path in sorted_with_extension(&planes, "json")? {
        let mut image: PlaneImage = serde_json::from_str(&fs::read_to_string(&path)?).map_err(data_error)?;
        let bytes = fs::read(path.with_extension("f64"))?;
        if bytes.len() != 8 * image.nx * image.ny {
            return Err(data_error(format!("{} has {} bytes for a {}x{} plane", path.display(), bytes.len(), image.nx, image.ny)));
        }
        image.data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        out.push(image);
    }
    Ok(out)
}

fn sorted_with_extension(dir: &Path, ext: &str) -> io::Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .filter(|p| !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn write_result(dir: &Path, result: &RunResult) -> io::Result<()> {
    let json = serde_json::to_string_pretty(result).expect("result serializes");
    atomic_write(&dir.join("results").join(format!("{}.json", result.scenario)), json.as_bytes())?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "intensity"]).map_err(data_error)?;
    for (x, v) in result.profile.positions().iter().zip(result.profile.intensities()) {
        w.write_record([fmt_num(*x), fmt_num(*v)]).map_err(data_error)?;
    }
    let bytes = w.into_inner().map_err(data_error)?;
    atomic_write(&dir.join("profiles").join(format!("{}.csv", result.scenario)), &bytes)
}

/// Every `results/*.json`, in label order.
pub fn load_results(dir: &Path) -> io::Result<Vec<RunResult>> {
    sorted_with_extension(&dir.join("results"), "json")?
        .into_iter()
        .map(|p| serde_json::from_str(&fs::read_to_string(&p)?).map_err(data_error))
        .collect()
}

/// One row of `flux.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxRow {
    pub scenario: String,
    pub flux1: f64,
    pub flux2: f64,
    pub blocked: f64,
    pub elsewhere: f64,
    pub reduction: Option<FluxReduction>,
}

pub const FLUX_HEADER: [&str; 8] = ["scenario", "flux1", "flux2", "blocked", "elsewhere", "reduction", "ci_low", "ci_high"];

/// Fractions of the emitted photons (Monte Carlo) or of the source power
/// (field) when no tally is present; `elsewhere` includes aperture losses.
/// The reduction compares against the matching no-grid result when present.
pub fn flux_rows(results: &[RunResult]) -> Vec<FluxRow> {
    results
        .iter()
        .map(|r| {
            let baseline = r
                .reference()
                .baseline()
                .and_then(|b| results.iter().find(|o| o.reference() == b));
            let (flux1, flux2, blocked, elsewhere) = match &r.tally {
                Some(t) => {
                    let f = t.fractions();
                    (f[0], f[1], f[2], f[3])
                }
                None => {
                    let w = r.fluxes.outcome_weights();
                    (w[0], w[1], w[2], w[3])
                }
            };
            let reduction = baseline.and_then(|b| match (&r.tally, &b.tally) {
                (Some(tw), Some(tb)) => flux_reduction(tw, tb).ok(),
                _ => {
                    let base = b.fluxes.detectors();
                    (base > 0.0).then(|| {
                        let v = 1.0 - r.fluxes.detectors() / base;
                        FluxReduction {
                            value: v,
                            ci_low: v,
                            ci_high: v,
                        }
                    })
                }
            });
            FluxRow {
                scenario: r.scenario.clone(),
                flux1,
                flux2,
                blocked,
                elsewhere,
                reduction,
            }
        })
        .collect()
}

pub fn flux_csv(results: &[RunResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FLUX_HEADER).expect("in-memory write");
    for row in flux_rows(results) {
        let red = row.reduction;
        w.write_record([
            row.scenario,
            fmt_num(row.flux1),
            fmt_num(row.flux2),
            fmt_num(row.blocked),
            fmt_num(row.elsewhere),
            fmt_opt(red.map(|r| r.value)),
            fmt_opt(red.map(|r| r.ci_low)),
            fmt_opt(red.map(|r| r.ci_high)),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}
