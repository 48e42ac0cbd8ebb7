//! Basin-of-attraction sweeps: run the minimizer from every point of a
//! uniform grid over the fundamental square and label where it lands.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::AnglePair;
use crate::chordal::chordal_minima;
use crate::geodesic::{geodesic_minima_catalog, wrap_into_square, Region};
use crate::optimizer::{chordal_objective, geodesic_objective, minimize, MinimizeOptions, MinimizeResult, Termination};
use crate::problem::{BenchmarkProblem, MeasurementSet};
use crate::reduction::ReducedModel;
use crate::{Error, Result};

/// Costs below the best catalog cost by less than this are global.
const GLOBAL_COST_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Geodesic,
    Chordal,
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostKind::Geodesic => "geodesic",
            CostKind::Chordal => "chordal",
        })
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "geodesic" => Ok(CostKind::Geodesic),
            "chordal" => Ok(CostKind::Chordal),
            other => Err(Error::InvalidArgument(format!(
                "unknown cost kind {other:?} (expected geodesic or chordal)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub grid_n: usize,
    pub cost_kind: CostKind,
    pub match_tol: f64,
    pub minimize_options: MinimizeOptions,
}

impl SweepConfig {
    pub fn new(cost_kind: CostKind) -> Self {
        Self {
            grid_n: 500,
            cost_kind,
            match_tol: 1e-3,
            minimize_options: MinimizeOptions::default(),
        }
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.grid_n = n;
        self
    }
}

/// A minimum that grid points can be attributed to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub phi: AnglePair,
    pub cost: f64,
    pub is_global: bool,
    /// Geodesic region of the minimum; absent for chordal catalogs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
}

/// Catalog of minima for the chosen cost, globals first, then by cost.
pub fn catalog_for(model: &ReducedModel, kind: CostKind) -> Vec<CatalogEntry> {
    let mut entries: Vec<CatalogEntry> = match kind {
        CostKind::Geodesic => geodesic_minima_catalog(model)
            .into_iter()
            .map(|m| CatalogEntry {
                phi: m.phi,
                cost: m.cost,
                is_global: m.is_global,
                region: Some(m.region),
            })
            .collect(),
        CostKind::Chordal => {
            let mins = chordal_minima(model);
            let best = mins.first().map_or(f64::INFINITY, |m| m.cost);
            mins.into_iter()
                .map(|m| CatalogEntry {
                    phi: m.phi,
                    cost: m.cost,
                    is_global: m.cost <= best + GLOBAL_COST_TOL,
                    region: None,
                })
                .collect()
        }
    };
    entries.sort_by(|a, b| b.is_global.cmp(&a.is_global).then(a.cost.total_cmp(&b.cost)));
    entries
}

/// Where one initial condition ended up.
///
/// `Local(i)` indexes the sweep catalog; locals are numbered after the
/// globals, so `i` is at least the number of global entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasinLabel {
    Global,
    Local(usize),
    Failed,
}

impl BasinLabel {
    /// Integer code used in grid exports: `0` global, `i ≥ 1` the `i`-th
    /// local minimum (1-based among locals), `−1` failed.
    pub fn code(self, n_global: usize) -> i64 {
        match self {
            BasinLabel::Global => 0,
            BasinLabel::Local(i) => (i + 1 - n_global) as i64,
            BasinLabel::Failed => -1,
        }
    }

    pub fn from_code(code: i64, n_global: usize) -> Result<Self> {
        match code {
            0 => Ok(BasinLabel::Global),
            -1 => Ok(BasinLabel::Failed),
            c if c >= 1 => Ok(BasinLabel::Local(c as usize - 1 + n_global)),
            c => Err(Error::InvalidArgument(format!("invalid basin code {c}"))),
        }
    }
}

/// Diagnostics of an initial condition that reached no catalog minimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub row: usize,
    pub col: usize,
    pub start: AnglePair,
    /// Final iterate wrapped onto the square.
    pub end: AnglePair,
    pub result: MinimizeResult,
    /// Wrapped max-norm distance to the closest catalog minimum.
    pub nearest_distance: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    /// Row-major, `labels[row * grid_n + col]`; rows step `φ₂`, columns `φ₁`.
    pub labels: Vec<BasinLabel>,
    /// Final iterate of every run, wrapped onto the square; same layout as
    /// `labels`.
    pub endpoints: Vec<AnglePair>,
    pub grid_n: usize,
    pub catalog: Vec<CatalogEntry>,
    pub pct_global: f64,
    pub pct_local: f64,
    pub pct_failed: f64,
    pub failures: Vec<FailureRecord>,
    pub config: SweepConfig,
    pub problem: BenchmarkProblem,
}

/// Grid coordinates along one axis: `n` points from `centre − π` to
/// `centre + π`, both included.
pub fn grid_axis(centre: f64, n: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    (0..n)
        .map(|i| centre - pi + 2.0 * pi * i as f64 / (n - 1) as f64)
        .collect()
}

fn min_pair_separation(catalog: &[CatalogEntry]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in catalog.iter().enumerate() {
        for b in &catalog[i + 1..] {
            best = best.min(a.phi.wrapped_distance(&b.phi));
        }
    }
    best
}

fn validate_config(cfg: &SweepConfig, catalog: &[CatalogEntry]) -> Result<()> {
    if cfg.grid_n < 2 {
        return Err(Error::Config(format!("grid_n must be at least 2, got {}", cfg.grid_n)));
    }
    cfg.minimize_options.validate()?;
    if catalog.is_empty() {
        return Err(Error::Config("minima catalog is empty".into()));
    }
    let sep = min_pair_separation(catalog);
    if !(cfg.match_tol > 0.0 && cfg.match_tol < sep / 2.0) {
        return Err(Error::Config(format!(
            "match_tol {} must be positive and below half the closest minima separation {sep}",
            cfg.match_tol
        )));
    }
    Ok(())
}

fn label_endpoint(
    ms: &MeasurementSet,
    catalog: &[CatalogEntry],
    match_tol: f64,
    result: &MinimizeResult,
) -> (BasinLabel, AnglePair, f64) {
    let end = wrap_into_square(ms, result.phi);
    let (idx, dist) = catalog
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.phi.wrapped_distance(&end)))
        .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let label = if result.phi.is_finite() && dist <= match_tol {
        if catalog[idx].is_global {
            BasinLabel::Global
        } else {
            BasinLabel::Local(idx)
        }
    } else {
        BasinLabel::Failed
    };
    (label, end, dist)
}

/// Runs the minimizer from every grid point and labels the basins.
pub fn run_sweep(problem: &BenchmarkProblem, cfg: &SweepConfig) -> Result<SweepResult> {
    let model = ReducedModel::new(&problem.measurements)?;
    let catalog = catalog_for(&model, cfg.cost_kind);
    run_sweep_with_catalog(problem, &model, catalog, cfg)
}

/// As [`run_sweep`] with an externally supplied catalog.
pub fn run_sweep_with_catalog(
    problem: &BenchmarkProblem,
    model: &ReducedModel,
    catalog: Vec<CatalogEntry>,
    cfg: &SweepConfig,
) -> Result<SweepResult> {
    validate_config(cfg, &catalog)?;
    let ms = &model.measurements;
    let n = cfg.grid_n;
    let xs = grid_axis(ms.phi01, n);
    let ys = grid_axis(ms.phi02, n);

    let rows: Vec<Vec<(BasinLabel, AnglePair, Option<FailureRecord>)>> = (0..n)
        .into_par_iter()
        .map(|row| {
            (0..n)
                .map(|col| {
                    let start = AnglePair::new(xs[col], ys[row]);
                    let result = match cfg.cost_kind {
                        CostKind::Geodesic => minimize(geodesic_objective(model), start, &cfg.minimize_options),
                        CostKind::Chordal => minimize(chordal_objective(model), start, &cfg.minimize_options),
                    };
                    let (label, end, nearest_distance) = label_endpoint(ms, &catalog, cfg.match_tol, &result);
                    let failure = (label == BasinLabel::Failed).then_some(FailureRecord {
                        row,
                        col,
                        start,
                        end,
                        result,
                        nearest_distance,
                    });
                    (label, end, failure)
                })
                .collect()
        })
        .collect();

    let mut labels = Vec::with_capacity(n * n);
    let mut endpoints = Vec::with_capacity(n * n);
    let mut failures = Vec::new();
    for (label, end, failure) in rows.into_iter().flatten() {
        labels.push(label);
        endpoints.push(end);
        failures.extend(failure);
    }
    let (pct_global, pct_local, pct_failed) = percentages(&labels);
    Ok(SweepResult {
        labels,
        endpoints,
        grid_n: n,
        catalog,
        pct_global,
        pct_local,
        pct_failed,
        failures,
        config: *cfg,
        problem: problem.clone(),
    })
}

/// Percentages of global, local and failed labels.
pub fn percentages(labels: &[BasinLabel]) -> (f64, f64, f64) {
    let total = labels.len() as f64;
    let count = |f: fn(&BasinLabel) -> bool| labels.iter().filter(|l| f(l)).count() as f64;
    let global = count(|l| *l == BasinLabel::Global);
    let failed = count(|l| *l == BasinLabel::Failed);
    let local = labels.len() as f64 - global - failed;
    (100.0 * global / total, 100.0 * local / total, 100.0 * failed / total)
}

impl SweepResult {
    pub fn n_global(&self) -> usize {
        self.catalog.iter().filter(|c| c.is_global).count()
    }

    pub fn label(&self, row: usize, col: usize) -> BasinLabel {
        self.labels[row * self.grid_n + col]
    }

    pub fn codes(&self) -> Vec<i64> {
        let g = self.n_global();
        self.labels.iter().map(|l| l.code(g)).collect()
    }
}

/// Where sweep artifacts came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub problem_digest: String,
}

impl Provenance {
    pub fn for_problem(problem: &BenchmarkProblem) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            problem_digest: problem.digest(),
        }
    }

    pub fn header_lines(&self) -> Vec<String> {
        vec![format!(
            "# {} {} problem_digest={}",
            self.tool, self.version, self.problem_digest
        )]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalBasin {
    pub code: i64,
    pub phi: AnglePair,
    pub cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    pub count: usize,
    pub pct: f64,
}

/// One row of the basin table, plus what is needed to redraw it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub label: String,
    pub epsilon: f64,
    pub cost_kind: CostKind,
    pub grid_n: usize,
    pub match_tol: f64,
    pub pct_global: f64,
    pub pct_local: f64,
    pub pct_failed: f64,
    pub catalog_size: usize,
    pub local_basins: Vec<LocalBasin>,
    /// Failed points per termination reason.
    pub failure_terminations: BTreeMap<String, usize>,
    pub failures: Vec<FailureRecord>,
    pub minimize_options: MinimizeOptions,
    pub problem: BenchmarkProblem,
    pub provenance: Provenance,
}

fn termination_name(t: Termination) -> String {
    serde_json::to_value(t)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| format!("{t:?}"))
}

pub fn summarize(result: &SweepResult) -> SweepSummary {
    let n_global = result.n_global();
    let total = result.labels.len() as f64;
    let local_basins = result
        .catalog
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_global)
        .map(|(i, c)| {
            let count = result.labels.iter().filter(|l| **l == BasinLabel::Local(i)).count();
            LocalBasin {
                code: BasinLabel::Local(i).code(n_global),
                phi: c.phi,
                cost: c.cost,
                region: c.region,
                count,
                pct: 100.0 * count as f64 / total,
            }
        })
        .collect();
    let mut failure_terminations = BTreeMap::new();
    for f in &result.failures {
        *failure_terminations
            .entry(termination_name(f.result.termination))
            .or_insert(0) += 1;
    }
    SweepSummary {
        label: result.problem.label.clone(),
        epsilon: result.problem.epsilon,
        cost_kind: result.config.cost_kind,
        grid_n: result.grid_n,
        match_tol: result.config.match_tol,
        pct_global: result.pct_global,
        pct_local: result.pct_local,
        pct_failed: result.pct_failed,
        catalog_size: result.catalog.len(),
        local_basins,
        failure_terminations,
        failures: result.failures.clone(),
        minimize_options: result.config.minimize_options,
        problem: result.problem.clone(),
        provenance: Provenance::for_problem(&result.problem),
    }
}

pub fn export_summary(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&summarize(result))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Label matrix read back from a grid export.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFile {
    pub grid_n: usize,
    pub phi1_range: (f64, f64),
    pub phi2_range: (f64, f64),
    /// Row-major integer codes, rows step `φ₂`.
    pub codes: Vec<i64>,
}

/// Writes the label matrix as CSV.
///
/// Layout: `#` comment lines with provenance, then
/// `# phi1_range=<lo>,<hi>`, `# phi2_range=<lo>,<hi>`, `# grid_n=<n>`,
/// then `n` rows of `n` integer codes. Row `i` holds `φ₂ = lo₂ + i·h`,
/// column `j` holds `φ₁ = lo₁ + j·h`.
pub fn export_grid(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let ms = &result.problem.measurements;
    let pi = std::f64::consts::PI;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for line in Provenance::for_problem(&result.problem).header_lines() {
        writeln!(out, "{line}")?;
    }
    writeln!(out, "# cost={} codes: 0=global, i>=1 local basin i, -1=failed", result.config.cost_kind)?;
    writeln!(out, "# phi1_range={:.17},{:.17}", ms.phi01 - pi, ms.phi01 + pi)?;
    writeln!(out, "# phi2_range={:.17},{:.17}", ms.phi02 - pi, ms.phi02 + pi)?;
    writeln!(out, "# grid_n={}", result.grid_n)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in result.codes().chunks(result.grid_n) {
        w.write_record(row.iter().map(i64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_range(v: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidArgument(format!("bad axis range {v:?}"));
    let (a, b) = v.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn import_grid(path: impl AsRef<Path>) -> Result<GridFile> {
    let file = std::fs::File::open(path)?;
    let mut phi1_range = None;
    let mut phi2_range = None;
    let mut grid_n = None;
    let mut codes = Vec::new();
    let mut rows = 0usize;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            if let Some(v) = meta.strip_prefix("phi1_range=") {
                phi1_range = Some(parse_range(v)?);
            } else if let Some(v) = meta.strip_prefix("phi2_range=") {
                phi2_range = Some(parse_range(v)?);
            } else if let Some(v) = meta.strip_prefix("grid_n=") {
                grid_n = Some(v.parse::<usize>().map_err(|_| {
                    Error::InvalidArgument(format!("line {}: bad grid_n {v:?}", lineno + 1))
                })?);
            }
            continue;
        }
        for cell in line.split(',') {
            codes.push(cell.trim().parse::<i64>().map_err(|_| {
                Error::InvalidArgument(format!("line {}: bad basin code {cell:?}", lineno + 1))
            })?);
        }
        rows += 1;
    }
    let missing = |what: &str| Error::InvalidArgument(format!("grid file lacks {what}"));
    let grid_n = grid_n.ok_or_else(|| missing("grid_n"))?;
    if rows != grid_n || codes.len() != grid_n * grid_n {
        return Err(Error::InvalidArgument(format!(
            "expected {grid_n}x{grid_n} codes, got {rows} rows and {} cells",
            codes.len()
        )));
    }
    Ok(GridFile {
        grid_n,
        phi1_range: phi1_range.ok_or_else(|| missing("phi1_range"))?,
        phi2_range: phi2_range.ok_or_else(|| missing("phi2_range"))?,
        codes,
    })
}
