//! Photon-counting statistics over field-computed outcome probabilities.
//!
//! Photons are independent draws. The emitted count is Poisson with mean
//! `rate·duration`; outcomes are multinomial over detector 1, detector 2,
//! blocked and elsewhere. Randomness comes from ChaCha8 keyed by the seed,
//! with a separate stream for the count and for every fixed-size chunk of
//! photons, so tallies do not depend on how chunks are spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::PhotonError;

/// Photons sampled per RNG stream.
pub const CHUNK: u64 = 1 << 16;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

const COUNT_STREAM: u64 = 0;
const FIRST_CHUNK_STREAM: u64 = 1;

/// Default photon rate (photons per second).
pub const DEFAULT_PHOTON_RATE: f64 = 3.0e4;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingConfig {
    pub photon_rate: f64,
    pub duration: f64,
    pub rng_seed: u64,
    /// Label of the scenario the tally belongs to.
    pub scenario: String,
}

impl CountingConfig {
    pub fn new(photon_rate: f64, duration: f64, rng_seed: u64, scenario: impl Into<String>) -> Result<Self, PhotonError> {
        if !(photon_rate.is_finite() && photon_rate > 0.0) {
            return Err(PhotonError::Domain(format!("photon_rate {photon_rate} must be positive")));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(PhotonError::Domain(format!("duration {duration} must be positive")));
        }
        Ok(Self {
            photon_rate,
            duration,
            rng_seed,
            scenario: scenario.into(),
        })
    }

    pub fn mean_count(&self) -> f64 {
        self.photon_rate * self.duration
    }
}

/// Poisson count with mean `mean`, drawn from the count stream of `seed`.
pub fn sample_poisson(mean: f64, seed: u64) -> Result<u64, PhotonError> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(PhotonError::Domain(format!("Poisson mean {mean} must be finite and non-negative")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| PhotonError::Domain(e.to_string()))?;
    Ok(dist.sample(&mut stream_rng(seed, COUNT_STREAM)) as u64)
}

pub fn sample_photon_count(config: &CountingConfig) -> u64 {
    sample_poisson(config.mean_count(), config.rng_seed).expect("validated config has a finite mean")
}

/// Outcome order used throughout: detector 1, detector 2, blocked, elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbabilities([f64; 4]);

impl OutcomeProbabilities {
    /// Normalizes non-negative weights to sum to one.
    pub fn new(weights: [f64; 4]) -> Result<Self, PhotonError> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(PhotonError::Domain(format!(
                "outcome weights {weights:?} must be finite and non-negative"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(PhotonError::Domain("outcome weights sum to zero".into()));
        }
        Ok(Self(weights.map(|w| w / sum)))
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn detector_1(&self) -> f64 {
        self.0[0]
    }

    pub fn detector_2(&self) -> f64 {
        self.0[1]
    }

    pub fn blocked(&self) -> f64 {
        self.0[2]
    }

    pub fn elsewhere(&self) -> f64 {
        self.0[3]
    }
}

/// Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval { low: 0.0, high: 1.0 };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Interval {
        low: (center - half).max(0.0).min(p),
        high: (center + half).min(1.0).max(p),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTally {
    pub n_detector_1: u64,
    pub n_detector_2: u64,
    pub n_blocked: u64,
    pub n_elsewhere: u64,
    pub total: u64,
    pub seed: u64,
    /// 95% Wilson intervals on the four fractions, same order as the counts.
    pub intervals: [Interval; 4],
}

impl CountTally {
    fn from_counts(counts: [u64; 4], seed: u64) -> Self {
        let total = counts.iter().sum();
        Self {
            n_detector_1: counts[0],
            n_detector_2: counts[1],
            n_blocked: counts[2],
            n_elsewhere: counts[3],
            total,
            seed,
            intervals: counts.map(|c| wilson_interval(c, total, Z95)),
        }
    }

    pub fn counts(&self) -> [u64; 4] {
        [self.n_detector_1, self.n_detector_2, self.n_blocked, self.n_elsewhere]
    }

    pub fn detector_counts(&self) -> u64 {
        self.n_detector_1 + self.n_detector_2
    }

    /// Observed fractions of the emitted photons (0 for an empty tally).
    pub fn fractions(&self) -> [f64; 4] {
        let n = self.total.max(1) as f64;
        self.counts().map(|c| c as f64 / n)
    }
}

/// Multinomial tally of `n` photons.
///
/// Each chunk of [`CHUNK`] photons draws from its own stream by sequential
/// conditional binomials.
pub fn sample_outcomes(n: u64, probabilities: &OutcomeProbabilities, seed: u64) -> CountTally {
    let p = probabilities.as_array();
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<[u64; 4]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let size = CHUNK.min(n - c * CHUNK);
            let mut rng = stream_rng(seed, FIRST_CHUNK_STREAM + c);
            let mut counts = [0u64; 4];
            let mut remaining = size;
            let mut mass = 1.0;
            for k in 0..3 {
                if remaining == 0 {
                    break;
                }
                let q = if mass > 0.0 { (p[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
                let x = if q == 0.0 {
                    0
                } else if q == 1.0 {
                    remaining
                } else {
                    Binomial::new(remaining, q).expect("probability in (0, 1)").sample(&mut rng)
                };
                counts[k] = x;
                remaining -= x;
                mass -= p[k];
            }
            counts[3] = remaining;
            counts
        })
        .collect();
    let mut counts = [0u64; 4];
    for part in &partial {
        for (t, v) in counts.iter_mut().zip(part) {
            *t += v;
        }
    }
    CountTally::from_counts(counts, seed)
}

/// Poisson count followed by the multinomial split.
pub fn run_counting(config: &CountingConfig, probabilities: &OutcomeProbabilities) -> CountTally {
    sample_outcomes(sample_photon_count(config), probabilities, config.rng_seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxReduction {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// `1 − f_with/f_without`, where `f` is the fraction of emitted photons that
/// reach either detector. The 95% interval propagates the binomial variance
/// of both fractions through the ratio (delta method on the logarithm).
pub fn flux_reduction(with_grid: &CountTally, without_grid: &CountTally) -> Result<FluxReduction, PhotonError> {
    if without_grid.detector_counts() == 0 {
        return Err(PhotonError::UndefinedReduction);
    }
    let fraction = |t: &CountTally| t.detector_counts() as f64 / t.total as f64;
    let (fw, fo) = (
        if with_grid.total == 0 { 0.0 } else { fraction(with_grid) },
        fraction(without_grid),
    );
    let ratio = fw / fo;
    let rel_var = |f: f64, n: u64| if f > 0.0 { (1.0 - f) / (n as f64 * f) } else { 0.0 };
    let var_ratio = ratio * ratio * (rel_var(fw, with_grid.total) + rel_var(fo, without_grid.total));
    let half = Z95 * var_ratio.sqrt();
    let value = 1.0 - ratio;
    Ok(FluxReduction {
        value,
        ci_low: value - half,
        ci_high: value + half,
    })
}

/// Which-way parameter from detector weights of the two single-pinhole runs:
/// mean of `|c − w|/(c + w)`.
pub fn which_way_k(left: (f64, f64), right: (f64, f64)) -> Result<f64, PhotonError> {
    let one = |(c, w): (f64, f64), side: &'static str| {
        if c + w > 0.0 {
            Ok((c - w).abs() / (c + w))
        } else {
            Err(PhotonError::UndefinedK(side))
        }
    };
    Ok(0.5 * (one(left, "left")? + one(right, "right")?))
}

/// [`which_way_k`] on counts. In the left run the correct detector is
/// detector 1, in the right run detector 2.
pub fn estimate_k(left_only: &CountTally, right_only: &CountTally) -> Result<f64, PhotonError> {
    which_way_k(
        (left_only.n_detector_1 as f64, left_only.n_detector_2 as f64),
        (right_only.n_detector_2 as f64, right_only.n_detector_1 as f64),
    )
}
