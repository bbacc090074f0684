//! Run-directory files. Numbers are written with 17 significant digits and
//! LF line endings so identical runs give identical bytes.

use crate::{CliResult, ExitKind, Failure};
use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};
use slc_core::dynamics::{ControlField, TimeGrid};
use slc_core::experiments::ExperimentId;
use slc_core::slc::{Histogram, Stats, Termination, TestReport, TrainRecord};
use slc_core::uncertainty::SampleSet;
use std::fs::{self, File};
use std::path::Path;

pub const CONFIG_FILE: &str = "config.resolved.json";
pub const TRAINING_FILE: &str = "training.csv";
pub const CONTROLS_FILE: &str = "controls.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TEST_SAMPLES_FILE: &str = "test_samples.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    #[serde(rename = "final_J")]
    pub final_j: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub eta_halvings: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub samples: usize,
    pub seed: Option<u64>,
    pub fidelity: Stats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concurrence: Option<Stats>,
}

impl TestSummary {
    pub fn of(report: &TestReport) -> Self {
        Self {
            samples: report.fidelities.len(),
            seed: report.seed,
            fidelity: report.fidelity,
            concurrence: report.concurrence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: ExperimentId,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<TestSummary>,
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::other)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Failure::other)?;
    text.push('\n');
    let path = dir.join(name);
    fs::write(&path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::other)
}

fn write_table(
    dir: &Path,
    name: &str,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> CliResult<()> {
    let path = dir.join(name);
    let run = || -> anyhow::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    };
    run()
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::other)
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn write_training(dir: &Path, record: &TrainRecord) -> CliResult<()> {
    let rows = record
        .j_history
        .iter()
        .zip(&record.eta_history)
        .enumerate()
        .map(|(k, (j, eta))| vec![k.to_string(), num(*j), num(*eta)]);
    write_table(
        dir,
        TRAINING_FILE,
        &strings(&["iteration", "J_N", "eta_used"]),
        rows,
    )
}

pub fn write_controls(dir: &Path, u: &ControlField) -> CliResult<()> {
    let grid = u.grid();
    let mut header = strings(&["w", "t_mid"]);
    header.extend((1..=u.num_controls()).map(|m| format!("u_{m}")));
    let rows = (0..grid.intervals).map(|w| {
        let mut row = vec![w.to_string(), num(grid.midpoint(w))];
        row.extend(u.values().iter().map(|r| num(r[w])));
        row
    });
    write_table(dir, CONTROLS_FILE, &header, rows)
}

/// Reads a pulse table, checking it against `grid` and `controls`; any shape
/// or time mismatch is a grid error.
pub fn read_controls(path: &Path, grid: TimeGrid, controls: usize) -> CliResult<Vec<Vec<f64>>> {
    let mismatch =
        |msg: String| Failure::new(ExitKind::GridMismatch, anyhow!("{}: {msg}", path.display()));
    let file = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(Failure::config)?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers().map_err(Failure::config)?.clone();
    let mut expected = strings(&["w", "t_mid"]);
    expected.extend((1..=controls).map(|m| format!("u_{m}")));
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(mismatch(format!(
            "header {:?} does not match {} controls",
            header.iter().collect::<Vec<_>>(),
            controls
        )));
    }
    let mut values = vec![Vec::with_capacity(grid.intervals); controls];
    let mut rows = 0;
    for (w, record) in reader.records().enumerate() {
        let record = record.map_err(Failure::config)?;
        let parsed: Vec<f64> = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}: row {w}", path.display()))
            .map_err(Failure::config)?;
        if w >= grid.intervals {
            return Err(mismatch(format!("more than {} rows", grid.intervals)));
        }
        let t = grid.midpoint(w);
        if parsed[0] != w as f64 || (parsed[1] - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(mismatch(format!(
                "row {w} is at t = {} but the grid midpoint is {t}",
                parsed[1]
            )));
        }
        for (m, v) in parsed[2..].iter().enumerate() {
            values[m].push(*v);
        }
        rows += 1;
    }
    if rows != grid.intervals {
        return Err(mismatch(format!(
            "{rows} rows for a grid of {} intervals",
            grid.intervals
        )));
    }
    Ok(values)
}

pub fn write_test_samples(dir: &Path, samples: &SampleSet, report: &TestReport) -> CliResult<()> {
    let classes = samples.samples.first().map_or(0, |s| s.len());
    let mut header = strings(&["sample"]);
    header.extend((0..classes).map(|j| format!("theta_{j}")));
    header.push("fidelity".into());
    if report.concurrences.is_some() {
        header.push("concurrence".into());
    }
    let rows = samples.samples.iter().enumerate().map(|(i, s)| {
        let mut row = vec![i.to_string()];
        row.extend(s.values().iter().map(|v| num(*v)));
        row.push(num(report.fidelities[i]));
        if let Some(c) = &report.concurrences {
            row.push(num(c[i]));
        }
        row
    });
    write_table(dir, TEST_SAMPLES_FILE, &header, rows)
}

pub fn write_histogram(dir: &Path, hist: &Histogram) -> CliResult<()> {
    let rows = hist.counts.iter().enumerate().map(|(i, c)| {
        vec![
            i.to_string(),
            num(hist.edges[i]),
            num(hist.edges[i + 1]),
            c.to_string(),
        ]
    });
    write_table(
        dir,
        HISTOGRAM_FILE,
        &strings(&["bin", "lower", "upper", "count"]),
        rows,
    )
}

pub fn write_comparison(dir: &Path, rows: &[crate::reference::Comparison]) -> CliResult<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.metric.to_string(),
            r.published.map(num).unwrap_or_default(),
            num(r.achieved),
            r.threshold.to_string(),
            r.pass.to_string(),
        ]
    });
    write_table(
        dir,
        COMPARISON_FILE,
        &strings(&["metric", "published", "achieved", "threshold", "pass"]),
        rows,
    )
}
