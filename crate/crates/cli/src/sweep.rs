//! Sweep execution: one cell per (block length, seed), engine auto-selection
//! under the configured caps, deterministic CSV output, and minimum-key
//! search over the configured grid.

use crate::config::ExperimentConfig;
use anyhow::{bail, Context};
use keybins::adversary::{
    exact_adversary_distortion, mc_adversary_distortion, AtypicalModel, DistortionReport,
    EngineKind, Observe,
};
use keybins::caps::EngineCaps;
use keybins::cipher::PadMode;
use keybins::codebook::Codebook;
use keybins::error::Error as CoreError;
use keybins::model::{DistortionMeasure, SourceDistribution};
use keybins::rng::{derive_seed, tag};
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

/// Identifies one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSpec {
    pub n: usize,
    pub k: u64,
    pub seed: u64,
}

/// One computed cell: its report row plus the partition manifest that
/// reproduces it.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub report: DistortionReport,
    pub manifest: String,
}

/// Seed-aggregated summary of one (n, k) grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAggregate {
    pub n: usize,
    pub k: u64,
    pub mean_distortion: f64,
    pub min_distortion: f64,
    pub mean_gap: f64,
    pub cells: usize,
}

/// Everything a sweep produces.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<CellRow>,
    pub aggregates: Vec<CellAggregate>,
    pub failures: Vec<(CellSpec, String)>,
    pub schedule_label: String,
    pub schedule_status: String,
}

/// The partition seed for a cell. Derived, not the raw experiment seed, so
/// cells sharing a seed but differing in (n, k) get independent shuffles.
pub fn cell_partition_seed(seed: u64, n: usize, k: u64) -> u64 {
    derive_seed(&[seed, n as u64, k, tag::CELL])
}

/// The Monte Carlo stream seed for a cell.
pub fn cell_mc_seed(seed: u64, n: usize, k: u64) -> u64 {
    derive_seed(&[seed, n as u64, k, tag::MC_CHUNK])
}

fn run_on_codebook(
    cb: &Codebook,
    p: &SourceDistribution,
    d: &DistortionMeasure,
    caps: &EngineCaps,
    mc_trials: u64,
    spec: CellSpec,
) -> Result<CellRow, CoreError> {
    // Exact while the caps allow it; Monte Carlo past them.
    let mut report = match exact_adversary_distortion(
        cb,
        p,
        d,
        Observe::FullMessage,
        PadMode::OneTimePad,
        AtypicalModel::Exact,
        caps,
    ) {
        Ok(r) => r,
        Err(CoreError::CapExceeded(_)) => mc_adversary_distortion(
            cb,
            p,
            d,
            Observe::FullMessage,
            PadMode::OneTimePad,
            mc_trials,
            cell_mc_seed(spec.seed, spec.n, spec.k),
        )?,
        Err(e) => return Err(e),
    };
    // Rows carry the experiment seed; the derived seeds are recomputable
    // from it and the manifest pins the partition seed exactly.
    report.seed = spec.seed;
    Ok(CellRow {
        report,
        manifest: cb.manifest(),
    })
}

/// Computes one cell from scratch.
pub fn run_cell(
    cfg: &ExperimentConfig,
    spec: CellSpec,
) -> anyhow::Result<Result<CellRow, String>> {
    let (p, d) = cfg.validate()?;
    let caps = cfg.engine.caps();
    Ok(run_cell_inner(&p, &d, &caps, cfg, spec).map_err(|e| e.to_string()))
}

fn run_cell_inner(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    caps: &EngineCaps,
    cfg: &ExperimentConfig,
    spec: CellSpec,
) -> Result<CellRow, CoreError> {
    let cb = Codebook::build_with_cap(
        p,
        spec.n,
        cfg.epsilon,
        spec.k,
        cell_partition_seed(spec.seed, spec.n, spec.k),
        caps.class_size,
    )?;
    run_on_codebook(&cb, p, d, caps, cfg.engine.mc_trials, spec)
}

/// Reproduces a cell from its logged manifest instead of rebuilding from the
/// config's derivation chain. The result must match the original row bit for
/// bit; this is the audit path for published CSVs.
pub fn rerun_from_manifest(
    cfg: &ExperimentConfig,
    manifest: &str,
    seed: u64,
) -> anyhow::Result<CellRow> {
    let (p, d) = cfg.validate()?;
    let caps = cfg.engine.caps();
    let cb = Codebook::from_manifest(manifest, &p)?;
    let spec = CellSpec {
        n: cb.n(),
        k: cb.capacity(),
        seed,
    };
    Ok(run_on_codebook(&cb, &p, &d, &caps, cfg.engine.mc_trials, spec)?)
}

/// Runs the full sweep: every (n in n_list) x (seed in seeds) cell with the
/// schedule's key size. Cells run in parallel but are reported in grid
/// order; a failed cell (e.g. a cap violation) is recorded and skipped
/// without aborting the rest.
pub fn run_sweep(cfg: &ExperimentConfig) -> anyhow::Result<SweepOutcome> {
    let (p, d) = cfg.validate()?;
    let caps = cfg.engine.caps();
    let specs: Vec<CellSpec> = cfg
        .n_list
        .iter()
        .flat_map(|&n| {
            let k = cfg.schedule.key_count(n);
            cfg.seeds.iter().map(move |&seed| CellSpec { n, k, seed })
        })
        .collect();

    let results: Vec<Result<CellRow, CoreError>> = specs
        .par_iter()
        .map(|&spec| run_cell_inner(&p, &d, &caps, cfg, spec))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (spec, result) in specs.iter().zip(results) {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((*spec, e.to_string())),
        }
    }

    // Aggregate by (n, k) in grid order.
    let mut aggregates: Vec<CellAggregate> = Vec::new();
    for &n in &cfg.n_list {
        let k = cfg.schedule.key_count(n);
        let cell_rows: Vec<&CellRow> = rows
            .iter()
            .filter(|r| r.report.n == n && r.report.k == k)
            .collect();
        if cell_rows.is_empty() {
            continue;
        }
        let values: Vec<f64> = cell_rows.iter().map(|r| r.report.distortion).collect();
        let gaps: Vec<f64> = cell_rows.iter().map(|r| r.report.gap).collect();
        aggregates.push(CellAggregate {
            n,
            k,
            mean_distortion: values.iter().sum::<f64>() / values.len() as f64,
            min_distortion: values.iter().cloned().fold(f64::INFINITY, f64::min),
            mean_gap: gaps.iter().sum::<f64>() / gaps.len() as f64,
            cells: values.len(),
        });
    }

    Ok(SweepOutcome {
        rows,
        aggregates,
        failures,
        schedule_label: cfg.schedule.label(),
        schedule_status: cfg.schedule.theoretical_status().to_string(),
    })
}

/// Writes the CSV: header plus one row per cell, in sweep order.
pub fn write_csv<W: Write>(mut w: W, rows: &[CellRow]) -> anyhow::Result<()> {
    writeln!(w, "{}", DistortionReport::CSV_HEADER)?;
    for row in rows {
        writeln!(w, "{}", row.report.csv_row())?;
    }
    Ok(())
}

/// Reads a sweep CSV back into reports; expects exactly the written header.
pub fn read_csv(path: &Path) -> anyhow::Result<Vec<DistortionReport>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening CSV {}", path.display()))?;
    {
        let headers = reader.headers()?;
        let expected: Vec<&str> = DistortionReport::CSV_HEADER.split(',').collect();
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            bail!("unexpected CSV header {got:?}");
        }
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let r = record?;
        let field = |i: usize| -> anyhow::Result<&str> {
            r.get(i).context("short CSV record")
        };
        out.push(DistortionReport {
            n: field(0)?.parse()?,
            k: field(1)?.parse()?,
            epsilon: field(2)?.parse()?,
            seed: field(3)?.parse()?,
            observe: field(4)?.parse::<Observe>().map_err(anyhow::Error::from)?,
            engine: field(5)?.parse::<EngineKind>().map_err(anyhow::Error::from)?,
            distortion: field(6)?.parse()?,
            stderr: field(7)?.parse()?,
            dmax: field(8)?.parse()?,
            gap: field(9)?.parse()?,
            p_err: field(10)?.parse()?,
            rate: field(11)?.parse()?,
        });
    }
    Ok(out)
}

/// Result of a minimum-key search.
#[derive(Debug, Clone, PartialEq)]
pub struct MinKeySearch {
    pub n: usize,
    pub target: f64,
    /// Smallest grid key size whose seed-mean distortion reaches the target,
    /// if any does.
    pub result: Option<u64>,
    /// Every (key size, seed-mean distortion) pair evaluated, in grid order.
    pub evaluated: Vec<(u64, f64)>,
}

/// Scans the config's ascending key grid at fixed block length for the
/// smallest key size whose seed-averaged adversary distortion meets the
/// target. A target at or above the blind-guess ceiling is rejected: no key
/// budget can push the adversary past the distortion of the best constant
/// guess.
pub fn find_min_key(
    cfg: &ExperimentConfig,
    n: usize,
    target: f64,
) -> anyhow::Result<MinKeySearch> {
    let (p, d) = cfg.validate()?;
    if n == 0 {
        bail!("block length must be positive");
    }
    let caps = cfg.engine.caps();
    let (_, ceiling) = keybins::model::dmax(&p, &d)?;
    if !(target > 0.0) {
        bail!("target distortion must be positive, got {target}");
    }
    if target >= ceiling {
        bail!(
            "target distortion {target} is unattainable: the adversary can always \
             guess the best constant symbol, capping its loss at {ceiling}"
        );
    }
    let mut evaluated = Vec::new();
    let mut result = None;
    for &k in &cfg.k_grid {
        let reports: Vec<f64> = cfg
            .seeds
            .par_iter()
            .map(|&seed| {
                run_cell_inner(&p, &d, &caps, cfg, CellSpec { n, k, seed })
                    .map(|row| row.report.distortion)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mean = reports.iter().sum::<f64>() / reports.len() as f64;
        evaluated.push((k, mean));
        if mean >= target {
            result = Some(k);
            break;
        }
    }
    Ok(MinKeySearch {
        n,
        target,
        result,
        evaluated,
    })
}
