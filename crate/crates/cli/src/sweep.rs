//! Parameter sweeps: one report row per grid cell.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mailab::algorithms::Algorithm;
use mailab::fixtures::FIXTURE_NAMES;
use mailab::io::{read_json, write_json};
use mailab::sampling::derive_seed;
use mailab::verify::{
    sweep_cell, write_report, CellSpec, ReportRow, DEFAULT_BASE_SEED, DEFAULT_TOLERANCE,
    SCHEMA_VERSION,
};

const PARAMS: [&str; 6] = ["H", "beta", "eps", "u", "N", "seed"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    pub grid: BTreeMap<String, Vec<f64>>,
    pub fixture: String,
    #[serde(default = "default_algo")]
    pub algo: String,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    pub out: PathBuf,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_seed() -> u64 {
    DEFAULT_BASE_SEED
}

fn default_algo() -> String {
    "none".into()
}

fn default_jobs() -> usize {
    1
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.grid.values().any(Vec::is_empty) {
            bail!("sweep grid is empty");
        }
        if let Some(key) = self.grid.keys().find(|k| !PARAMS.contains(&k.as_str())) {
            bail!(
                "unknown grid parameter {key:?}; expected one of {}",
                PARAMS.join(", ")
            );
        }
        if self.fixture != "random" && !FIXTURE_NAMES.contains(&self.fixture.as_str()) {
            bail!("unknown fixture {:?}", self.fixture);
        }
        if self.algo != "none" {
            self.algo.parse::<Algorithm>()?;
        }
        if self.jobs == 0 {
            bail!("jobs must be at least 1");
        }
        if !(self.tolerance > 0.0) {
            bail!("tolerance must be positive");
        }
        Ok(())
    }

    /// Grid cells in row-major order over the sorted parameter names.
    fn cells(&self) -> Vec<BTreeMap<String, f64>> {
        let mut cells = vec![BTreeMap::new()];
        for (key, values) in &self.grid {
            cells = cells
                .into_iter()
                .flat_map(|cell| {
                    values.iter().map(move |v| {
                        let mut next = cell.clone();
                        next.insert(key.clone(), *v);
                        next
                    })
                })
                .collect();
        }
        cells
    }
}

#[derive(Serialize)]
struct SweepSummary {
    cells: usize,
    passed: usize,
    failed: usize,
    report: PathBuf,
    /// Least-squares slope of `regret_gap` along the only varying parameter.
    #[serde(skip_serializing_if = "Option::is_none")]
    regret_gap_slope: Option<Slope>,
}

#[derive(Serialize)]
struct Slope {
    parameter: String,
    slope: f64,
    intercept: f64,
}

fn slope(
    config: &SweepConfig,
    cells: &[BTreeMap<String, f64>],
    rows: &[ReportRow],
) -> Option<Slope> {
    let varying: Vec<&String> = config
        .grid
        .iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|(k, _)| k)
        .collect();
    let [key] = varying.as_slice() else {
        return None;
    };
    let points: Vec<(f64, f64)> = cells
        .iter()
        .zip(rows)
        .filter_map(|(c, r)| Some((c[*key], r.regret_gap?)))
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if points.len() < 2 || sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(Slope {
        parameter: (*key).clone(),
        slope,
        intercept: my - slope * mx,
    })
}

pub fn cmd_sweep(path: &Path, jobs: Option<usize>) -> Result<bool> {
    let mut config: SweepConfig =
        read_json(path).with_context(|| format!("reading sweep config {}", path.display()))?;
    if let Some(jobs) = jobs {
        config.jobs = jobs;
    }
    config.validate()?;
    let cells = config.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()?;
    // rayon's indexed collect keeps cell order regardless of scheduling
    let rows: Vec<ReportRow> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(idx, params)| run_cell(&config, idx, params))
            .collect()
    });
    fs::create_dir_all(&config.out)?;
    let report = config.out.join("sweep.csv");
    write_report(File::create(&report)?, &rows)?;
    let passed = rows.iter().filter(|r| r.pass).count();
    let summary = SweepSummary {
        cells: rows.len(),
        passed,
        failed: rows.len() - passed,
        report,
        regret_gap_slope: slope(&config, &cells, &rows),
    };
    write_json(&config.out.join("summary.json"), &summary)?;
    println!("sweep: {passed}/{} cells pass", rows.len());
    Ok(passed == rows.len())
}

fn run_cell(config: &SweepConfig, idx: usize, params: &BTreeMap<String, f64>) -> ReportRow {
    let base = params.get("seed").map_or(config.base_seed, |s| *s as u64);
    let cell = CellSpec {
        fixture: config.fixture.clone(),
        algo: config.algo.clone(),
        params: params.clone(),
        seed: derive_seed(base, idx as u64),
        tolerance: config.tolerance,
    };
    sweep_cell(&cell).unwrap_or_else(|err| {
        eprintln!("cell {idx}: {err}");
        ReportRow {
            schema_version: SCHEMA_VERSION,
            suite: "sweep".into(),
            fixture: config.fixture.clone(),
            algo: config.algo.clone(),
            seed: Some(cell.seed),
            measured: f64::NAN,
            pass: false,
            ..ReportRow::default()
        }
    })
}
