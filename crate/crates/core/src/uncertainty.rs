//! Training grids and random test draws of the uncertainty parameters.
//!
//! Each parameter class `j` lives on `[center - E, center + E]`. For the usual
//! multiplicative uncertainties the center is 1; time-modulated forms such as
//! `1 - ϑ·cos t` are centred on 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The PRNG behind every random draw. ChaCha8 is portable and its stream is
/// fixed for a given seed across platforms.
pub type SampleRng = ChaCha8Rng;

pub const RNG_NAME: &str = "ChaCha8";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    /// `count` equally spaced midpoints of the support.
    UniformGrid {
        count: usize,
    },
    UniformRandom,
    /// Normal distribution restricted to `[mean - 3·stddev, mean + 3·stddev]`.
    TruncatedGaussian {
        mean: f64,
        stddev: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default = "one")]
    pub center: f64,
    pub bound: f64,
    pub distribution: Distribution,
}

fn one() -> f64 {
    1.0
}

impl ChannelSpec {
    pub fn new(center: f64, bound: f64, distribution: Distribution) -> Result<Self> {
        let spec = Self {
            center,
            bound,
            distribution,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn grid(bound: f64, count: usize) -> Self {
        Self {
            center: 1.0,
            bound,
            distribution: Distribution::UniformGrid { count },
        }
    }

    pub fn uniform(bound: f64) -> Self {
        Self {
            center: 1.0,
            bound,
            distribution: Distribution::UniformRandom,
        }
    }

    pub fn truncated_gaussian(bound: f64, mean: f64, stddev: f64) -> Self {
        Self {
            center: 1.0,
            bound,
            distribution: Distribution::TruncatedGaussian { mean, stddev },
        }
    }

    pub fn centered_at(self, center: f64) -> Self {
        Self { center, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.bound) {
            return Err(Error::InvalidParameter(format!(
                "uncertainty bound must lie in [0, 1], got {}",
                self.bound
            )));
        }
        if !self.center.is_finite() {
            return Err(Error::InvalidParameter(
                "uncertainty center must be finite".into(),
            ));
        }
        match self.distribution {
            Distribution::UniformGrid { count: 0 } => Err(Error::InvalidParameter(
                "grid count must be at least 1".into(),
            )),
            Distribution::TruncatedGaussian { mean, stddev }
                if !(stddev > 0.0 && stddev.is_finite() && mean.is_finite()) =>
            {
                Err(Error::InvalidParameter(format!(
                    "truncated Gaussian needs finite mean and stddev > 0, got ({mean}, {stddev})"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Closed interval every value drawn for this channel must lie in.
    pub fn support(&self) -> (f64, f64) {
        match self.distribution {
            Distribution::TruncatedGaussian { mean, stddev } => {
                (mean - 3.0 * stddev, mean + 3.0 * stddev)
            }
            _ => (self.center - self.bound, self.center + self.bound),
        }
    }

    /// Grid values `c - E + (2n - 1)·E/N` for `n = 1..=N`.
    pub fn grid_values(&self, count: usize) -> Vec<f64> {
        let (c, e) = (self.center, self.bound);
        (1..=count)
            .map(|n| c - e + (2 * n - 1) as f64 * e / count as f64)
            .collect()
    }

    fn draw(&self, rng: &mut SampleRng) -> Result<f64> {
        match self.distribution {
            Distribution::UniformGrid { .. } => Err(Error::InvalidParameter(
                "grid channels cannot be drawn at random".into(),
            )),
            Distribution::UniformRandom => {
                let (lo, hi) = self.support();
                Ok(lo + (hi - lo) * rng.random::<f64>())
            }
            Distribution::TruncatedGaussian { mean, stddev } => {
                let normal = Normal::new(mean, stddev)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                let (lo, hi) = self.support();
                loop {
                    let x = normal.sample(rng);
                    if (lo..=hi).contains(&x) {
                        return Ok(x);
                    }
                }
            }
        }
    }
}

/// One draw of every uncertainty parameter class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThetaSample {
    values: Vec<f64>,
}

impl ThetaSample {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Every class at its channel center.
    pub fn nominal(specs: &[ChannelSpec]) -> Self {
        Self::new(specs.iter().map(|s| s.center).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Grid,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<ThetaSample>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn single(sample: ThetaSample) -> Self {
        Self {
            samples: vec![sample],
            provenance: Provenance::Grid,
            seed: None,
        }
    }
}

fn validate_all(specs: &[ChannelSpec]) -> Result<()> {
    specs.iter().try_for_each(ChannelSpec::validate)
}

/// Cartesian product of per-channel grids; the last channel varies fastest.
pub fn grid_samples(specs: &[ChannelSpec]) -> Result<SampleSet> {
    validate_all(specs)?;
    let axes = specs
        .iter()
        .map(|s| match s.distribution {
            Distribution::UniformGrid { count } => Ok(s.grid_values(count)),
            _ => Err(Error::InvalidParameter(
                "grid_samples needs UniformGrid channels".into(),
            )),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut samples = vec![Vec::with_capacity(axes.len())];
    for axis in &axes {
        samples = samples
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    Ok(SampleSet {
        samples: samples.into_iter().map(ThetaSample::new).collect(),
        provenance: Provenance::Grid,
        seed: None,
    })
}

/// `count` i.i.d. draws, each channel following its own distribution. Draws
/// are taken sample by sample, channel by channel, from one seeded stream.
pub fn draw_samples(specs: &[ChannelSpec], count: usize, seed: u64) -> Result<SampleSet> {
    validate_all(specs)?;
    if count == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let mut rng = SampleRng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let values = specs
            .iter()
            .map(|s| s.draw(&mut rng))
            .collect::<Result<Vec<_>>>()?;
        samples.push(ThetaSample::new(values));
    }
    Ok(SampleSet {
        samples,
        provenance: Provenance::Random,
        seed: Some(seed),
    })
}

pub fn random_uniform_samples(specs: &[ChannelSpec], count: usize, seed: u64) -> Result<SampleSet> {
    let uniform: Vec<ChannelSpec> = specs
        .iter()
        .map(|s| ChannelSpec {
            distribution: Distribution::UniformRandom,
            ..*s
        })
        .collect();
    draw_samples(&uniform, count, seed)
}

/// Truncated-Gaussian draws; channels not already Gaussian get mean at their
/// center and `stddev = E/3`, so the ±3σ support matches `[c - E, c + E]`.
pub fn truncated_gaussian_samples(
    specs: &[ChannelSpec],
    count: usize,
    seed: u64,
) -> Result<SampleSet> {
    let gaussian: Vec<ChannelSpec> = specs
        .iter()
        .map(|s| match s.distribution {
            Distribution::TruncatedGaussian { .. } => *s,
            _ => ChannelSpec {
                distribution: Distribution::TruncatedGaussian {
                    mean: s.center,
                    stddev: s.bound / 3.0,
                },
                ..*s
            },
        })
        .collect();
    draw_samples(&gaussian, count, seed)
}
