//! Run configuration: a JSON document naming a built-in experiment or
//! carrying an inline one, plus overrides. Unknown keys are rejected.

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use slc_core::experiments::{build_cavity, CavityParams, ExperimentId, ExperimentSpec};
use slc_core::slc::BoundsMode;
use std::path::{Path, PathBuf};

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds_mode: Option<BoundsMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestingOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in experiment; exclusive with `spec`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<ExperimentSpec>,
    /// Seeds the test draws.
    #[serde(default)]
    pub seed: u64,
    /// Cavity constants; only meaningful with `experiment = "cavity"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,
    /// Training grid size per parameter class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub training: TrainingOverrides,
    #[serde(default, skip_serializing_if = "is_default")]
    pub testing: TestingOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn is_default<T: Default + PartialEq>(x: &T) -> bool {
    *x == T::default()
}

/// A config with every override folded into an inline experiment.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: ExperimentSpec,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Resolved {
    /// Snapshot that re-runs the same job when fed back in.
    pub fn snapshot(&self) -> RunConfig {
        RunConfig {
            spec: Some(self.spec.clone()),
            seed: self.seed,
            ..RunConfig::default()
        }
    }
}

impl RunConfig {
    pub fn for_experiment(id: ExperimentId) -> Self {
        Self {
            experiment: Some(id),
            seed: DEFAULT_SEED,
            ..Self::default()
        }
    }

    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let mut spec = match (&self.experiment, &self.spec) {
            (Some(_), Some(_)) => bail!("`experiment` and `spec` are mutually exclusive"),
            (None, None) => bail!("one of `experiment` or `spec` is required"),
            (None, Some(spec)) => {
                if self.cavity.is_some() {
                    bail!("`cavity` applies only to the built-in cavity experiment");
                }
                spec.clone()
            }
            (Some(ExperimentId::Cavity), None) => build_cavity(&self.cavity.unwrap_or_default())?,
            (Some(id), None) => {
                if self.cavity.is_some() {
                    bail!("`cavity` applies only to the built-in cavity experiment");
                }
                ExperimentSpec::build(*id)?
            }
        };
        if let Some(w) = self.intervals {
            spec = spec.with_intervals(w)?;
        }
        if let Some(counts) = &self.grid_counts {
            if counts.len() != spec.train_sampling.len() {
                bail!(
                    "grid_counts has {} entries, the model has {} parameter classes",
                    counts.len(),
                    spec.train_sampling.len()
                );
            }
            for (class, &count) in counts.iter().enumerate() {
                spec = spec.with_grid_count(class, count)?;
            }
        }
        let t = &self.training;
        spec.train.eta = t.eta.unwrap_or(spec.train.eta);
        spec.train.epsilon = t.epsilon.unwrap_or(spec.train.epsilon);
        spec.train.patience = t.patience.unwrap_or(spec.train.patience);
        spec.train.max_iter = t.max_iter.unwrap_or(spec.train.max_iter);
        spec.train.bounds_mode = t.bounds_mode.unwrap_or(spec.train.bounds_mode);
        spec.test_sampling.count = self.testing.count.unwrap_or(spec.test_sampling.count);
        spec.validate()?;
        Ok(Resolved {
            spec,
            seed: self.seed,
            output_dir: self.output_dir.clone(),
        })
    }
}

/// Command-line adjustments applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub sets: Vec<String>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
}

/// Reads `path` (or starts from `base`), applies the overrides and parses
/// strictly.
pub fn load(
    path: Option<&Path>,
    base: Option<RunConfig>,
    overrides: &Overrides,
) -> anyhow::Result<RunConfig> {
    let mut value = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => serde_json::to_value(base.unwrap_or_default())?,
    };
    for set in &overrides.sets {
        apply_set(&mut value, set)?;
    }
    if let Some(seed) = overrides.seed {
        apply_set(&mut value, &format!("seed={seed}"))?;
    }
    if let Some(n) = overrides.max_iter {
        apply_set(&mut value, &format!("training.max_iter={n}"))?;
    }
    serde_json::from_value(value).context("invalid config")
}

/// `a.b.c=value`: the value is parsed as JSON, falling back to a string.
pub fn apply_set(root: &mut Value, assignment: &str) -> anyhow::Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{assignment}` is not of the form key=value"))?;
    if path.is_empty() {
        bail!("override `{assignment}` has an empty key");
    }
    let new = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    for key in path.split('.') {
        cur = match cur {
            Value::Array(items) => {
                let i: usize = key
                    .parse()
                    .with_context(|| format!("`{key}` in `{path}` is not an index"))?;
                let len = items.len();
                items.get_mut(i).ok_or_else(|| {
                    anyhow!("index {i} in `{path}` is out of range (length {len})")
                })?
            }
            Value::Null => {
                *cur = Value::Object(Map::new());
                cur.as_object_mut()
                    .expect("just set")
                    .entry(key)
                    .or_insert(Value::Null)
            }
            Value::Object(map) => map.entry(key).or_insert(Value::Null),
            _ => bail!("`{path}` descends into a scalar at `{key}`"),
        };
    }
    *cur = new;
    Ok(())
}
