//! Fringe visibility: the standard contrast formula, sampled-profile
//! extraction, the square-profile lower bound from the measured loss, the
//! transmitted-power visibility of a grating at minima vs maxima, and the
//! V² + K² ≤ 1 check.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::quadrature::adaptive_simpson;

/// Slack on `V² + K² ≤ 1` before a violation is reported.
pub const DUALITY_TOLERANCE: f64 = 1e-9;

/// `(i_max − i_min)/(i_max + i_min)`.
pub fn visibility(i_max: f64, i_min: f64) -> Result<f64, AnalysisError> {
    for (name, v) in [("i_max", i_max), ("i_min", i_min)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(AnalysisError::Domain {
                name,
                value: v,
                reason: "intensities must be finite and non-negative",
            });
        }
    }
    if i_min > i_max {
        return Err(AnalysisError::ArgumentOrder { i_max, i_min });
    }
    let sum = i_max + i_min;
    if sum == 0.0 {
        return Err(AnalysisError::UndefinedVisibility);
    }
    Ok((i_max - i_min) / sum)
}

/// Real intensity samples across the fringes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityProfile {
    positions: Vec<f64>,
    intensities: Vec<f64>,
}

impl IntensityProfile {
    pub fn new(positions: Vec<f64>, intensities: Vec<f64>) -> Result<Self, AnalysisError> {
        if positions.len() != intensities.len() {
            return Err(AnalysisError::InvalidProfile(format!(
                "{} positions but {} intensities",
                positions.len(),
                intensities.len()
            )));
        }
        if positions.len() < 3 {
            return Err(AnalysisError::InvalidProfile("at least 3 samples required".into()));
        }
        if positions.iter().any(|x| !x.is_finite()) || positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AnalysisError::InvalidProfile(
                "positions must be finite and strictly increasing".into(),
            ));
        }
        if intensities.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(AnalysisError::InvalidProfile(
                "intensities must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            positions,
            intensities,
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Samples with `lo <= x <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> Result<Self, AnalysisError> {
        let (p, i): (Vec<f64>, Vec<f64>) = self
            .positions
            .iter()
            .zip(&self.intensities)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(x, v)| (*x, *v))
            .unzip();
        Self::new(p, i)
    }
}

/// Visibility from the mean per-period maximum and minimum.
///
/// The profile is cut into consecutive windows of one `period_hint` starting
/// at the first sample; the trailing partial window is dropped. Every full
/// window of a periodic pattern contains one maximum and one minimum.
pub fn profile_visibility(profile: &IntensityProfile, period_hint: f64) -> Result<f64, AnalysisError> {
    if !(period_hint.is_finite() && period_hint > 0.0) {
        return Err(AnalysisError::Domain {
            name: "period_hint",
            value: period_hint,
            reason: "must be finite and positive",
        });
    }
    let x = profile.positions();
    let x0 = x[0];
    let span = x[x.len() - 1] - x0;
    let periods = span / period_hint;
    if periods < 3.0 {
        return Err(AnalysisError::InsufficientSpan { periods });
    }
    let windows = periods.floor() as usize;
    let mut maxima = vec![f64::NEG_INFINITY; windows];
    let mut minima = vec![f64::INFINITY; windows];
    for (&xi, &v) in x.iter().zip(profile.intensities()) {
        let k = ((xi - x0) / period_hint).floor() as usize;
        if k < windows {
            maxima[k] = maxima[k].max(v);
            minima[k] = minima[k].min(v);
        }
    }
    if maxima.iter().any(|m| !m.is_finite()) {
        return Err(AnalysisError::InvalidProfile(
            "a period window holds no samples".into(),
        ));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    visibility(mean(&maxima), mean(&minima))
}

fn check_covering_ratio(a: f64) -> Result<(), AnalysisError> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::Domain {
            name: "a",
            value: a,
            reason: "covering ratio must lie in (0, 1)",
        })
    }
}

/// Lowest visibility compatible with a loss fraction `L` on a wire area
/// fraction `a`: the square profile with level `L/a` under the wires and
/// `(1−L)/(1−a)` elsewhere.
///
/// Returns [`AnalysisError::DegenerateBound`] when the wire level is not
/// below the open level; see [`flores_bound_or_zero`].
pub fn flores_lower_bound(loss: f64, a: f64) -> Result<f64, AnalysisError> {
    if !(0.0..1.0).contains(&loss) {
        return Err(AnalysisError::Domain {
            name: "L",
            value: loss,
            reason: "loss fraction must lie in [0, 1)",
        });
    }
    check_covering_ratio(a)?;
    let min_level = loss / a;
    let max_level = (1.0 - loss) / (1.0 - a);
    if min_level >= max_level {
        return Err(AnalysisError::DegenerateBound {
            min_level,
            max_level,
        });
    }
    visibility(max_level, min_level)
}

/// [`flores_lower_bound`] with the degenerate case mapped to `(0, true)`.
pub fn flores_bound_or_zero(loss: f64, a: f64) -> Result<(f64, bool), AnalysisError> {
    match flores_lower_bound(loss, a) {
        Ok(v) => Ok((v, false)),
        Err(AnalysisError::DegenerateBound { .. }) => Ok((0.0, true)),
        Err(e) => Err(e),
    }
}

/// Per-period transmitted power of a grating with covering ratio `a` over
/// cos² fringes: `(I_t,max, I_t,min) = ((π − aπ ± sin aπ)/(2π))`, wires at
/// the minima and at the maxima respectively.
pub fn steuernagel_transmitted_intensities(a: f64) -> Result<(f64, f64), AnalysisError> {
    check_covering_ratio(a)?;
    let s = (a * PI).sin();
    let base = PI - a * PI;
    Ok(((base + s) / (2.0 * PI), (base - s) / (2.0 * PI)))
}

/// `sin(aπ)/(π(1−a))`.
pub fn steuernagel_visibility(a: f64) -> Result<f64, AnalysisError> {
    check_covering_ratio(a)?;
    Ok((a * PI).sin() / (PI * (1.0 - a)))
}

/// Grating placement for [`quadrature_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseCase {
    /// Wires on the minima (φ = 0): the opening sees `cos²`.
    Minima,
    /// Wires on the maxima (φ = ±π): the opening sees `sin²`.
    Maxima,
}

/// Numerical `(1/Λ)∫ cos²(πx/Λ) dx` (or `sin²`) over the opening
/// `|x| ≤ Λ(1−a)/2`, in units of Λ.
pub fn quadrature_check(a: f64, case: PhaseCase) -> Result<f64, AnalysisError> {
    check_covering_ratio(a)?;
    let half = 0.5 * (1.0 - a);
    let value = match case {
        PhaseCase::Minima => adaptive_simpson(|u| (PI * u).cos().powi(2), -half, half, 1e-15, 50),
        PhaseCase::Maxima => adaptive_simpson(|u| (PI * u).sin().powi(2), -half, half, 1e-15, 50),
    };
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub v: f64,
    pub k: f64,
    pub sum_of_squares: f64,
    pub violated: bool,
}

/// Evaluates `V² + K²` against the bound 1.
pub fn duality_check(v: f64, k: f64) -> Result<DualityReport, AnalysisError> {
    for (name, x) in [("v", v), ("k", k)] {
        if !(0.0..=1.0).contains(&x) {
            return Err(AnalysisError::Domain {
                name,
                value: x,
                reason: "must lie in [0, 1]",
            });
        }
    }
    let sum_of_squares = v * v + k * k;
    Ok(DualityReport {
        v,
        k,
        sum_of_squares,
        violated: sum_of_squares > 1.0 + DUALITY_TOLERANCE,
    })
}

/// Visibilities attached to a single run, with the inputs they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    /// Standard visibility of the grid-plane profile (before any mask).
    pub v_standard: Option<f64>,
    /// Square-profile bound from this run's blocked fraction.
    pub v_flores_lower_bound: Option<f64>,
    pub flores_degenerate: bool,
    /// Closed-form transmitted visibility for the configured covering ratio.
    pub v_steuernagel_transmitted: Option<f64>,
    pub covering_ratio: Option<f64>,
    pub loss_fraction: Option<f64>,
    pub placement_phase: Option<f64>,
    pub period_hint: f64,
    pub method: Vec<String>,
}
