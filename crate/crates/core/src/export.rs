//! CSV and JSON artifacts for plotting: 1D profiles, cost surfaces and
//! critical-point reports.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::angle::AnglePair;
use crate::chordal::{g_phi, CriticalKind, CriticalPoint};
use crate::geodesic::{f_1k, f_phi, Region};
use crate::problem::BenchmarkProblem;
use crate::reduction::ReducedModel;
use crate::sweep::{grid_axis, Provenance};
use crate::{Error, Result};

pub const PROFILE_POINTS: usize = 2001;

/// Samples of `f_{1,k}` for `k = −1, 0, 1` on `[φ₀₁ − π, φ₀₁ + π]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile1d {
    pub phi1: Vec<f64>,
    /// Columns in the order `k = −1, 0, 1`.
    pub values: [Vec<f64>; 3],
}

pub fn profile_1d(model: &ReducedModel, points: usize) -> Profile1d {
    let phi1 = grid_axis(model.measurements.phi01, points);
    let values = [Region::Minus, Region::Zero, Region::Plus]
        .map(|r| phi1.iter().map(|&p| f_1k(model, p, r)).collect());
    Profile1d { phi1, values }
}

fn write_header(out: &mut impl Write, problem: &BenchmarkProblem, extra: &[String]) -> Result<()> {
    for line in Provenance::for_problem(problem).header_lines() {
        writeln!(out, "{line}")?;
    }
    for line in extra {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Writes the profile as CSV with columns `phi1,f_1_km1,f_1_k0,f_1_kp1`.
pub fn export_profile_1d(problem: &BenchmarkProblem, model: &ReducedModel, path: impl AsRef<Path>) -> Result<()> {
    let profile = profile_1d(model, PROFILE_POINTS);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut out, problem, &[])?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phi1", "f_1_km1", "f_1_k0", "f_1_kp1"])?;
    for (i, p) in profile.phi1.iter().enumerate() {
        w.write_record([p, &profile.values[0][i], &profile.values[1][i], &profile.values[2][i]].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurfaceKind {
    #[serde(rename = "F_phi")]
    FPhi,
    #[serde(rename = "f")]
    F,
    #[serde(rename = "G_phi")]
    GPhi,
    #[serde(rename = "g")]
    G,
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurfaceKind::FPhi => "F_phi",
            SurfaceKind::F => "f",
            SurfaceKind::GPhi => "G_phi",
            SurfaceKind::G => "g",
        })
    }
}

impl FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "F_phi" => Ok(SurfaceKind::FPhi),
            "f" => Ok(SurfaceKind::F),
            "G_phi" => Ok(SurfaceKind::GPhi),
            "g" => Ok(SurfaceKind::G),
            other => Err(Error::InvalidArgument(format!(
                "unknown surface {other:?} (expected F_phi, f, G_phi or g)"
            ))),
        }
    }
}

/// `n × n` samples over the closed square; rows step `φ₂`, columns `φ₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct Surface {
    pub kind: SurfaceKind,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub values: Vec<f64>,
}

impl Surface {
    pub fn n(&self) -> usize {
        self.phi1.len()
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n() + col]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn evaluate_surface(model: &ReducedModel, kind: SurfaceKind, phi: AnglePair) -> f64 {
    let ms = &model.measurements;
    match kind {
        SurfaceKind::FPhi => f_phi(ms, phi),
        SurfaceKind::F => model.reduced_geodesic(phi),
        SurfaceKind::GPhi => g_phi(ms, phi),
        SurfaceKind::G => model.reduced_chordal(phi),
    }
}

pub fn surface(model: &ReducedModel, kind: SurfaceKind, n: usize) -> Result<Surface> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("surface size must be at least 2, got {n}")));
    }
    let ms = &model.measurements;
    let phi1 = grid_axis(ms.phi01, n);
    let phi2 = grid_axis(ms.phi02, n);
    let values = phi2
        .iter()
        .flat_map(|&y| phi1.iter().map(move |&x| AnglePair::new(x, y)))
        .map(|p| evaluate_surface(model, kind, p))
        .collect();
    Ok(Surface { kind, phi1, phi2, values })
}

/// Writes a surface as a headerless CSV matrix preceded by `#` lines giving
/// the surface name and both axis ranges.
pub fn export_surface(problem: &BenchmarkProblem, s: &Surface, path: impl AsRef<Path>) -> Result<()> {
    let n = s.n();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(
        &mut out,
        problem,
        &[
            format!("surface={}", s.kind),
            format!("phi1_range={:.17},{:.17}", s.phi1[0], s.phi1[n - 1]),
            format!("phi2_range={:.17},{:.17}", s.phi2[0], s.phi2[n - 1]),
            format!("grid_n={n}"),
        ],
    )?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in s.values.chunks(n) {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    pub phi1: f64,
    pub phi2: f64,
    pub kind: CriticalKind,
    pub cost: f64,
    pub hessian: [[f64; 2]; 2],
    pub grad_norm: f64,
    pub on_boundary: bool,
}

impl From<&CriticalPoint> for CriticalPointRecord {
    fn from(cp: &CriticalPoint) -> Self {
        let h = &cp.hessian;
        Self {
            phi1: cp.phi.phi1,
            phi2: cp.phi.phi2,
            kind: cp.kind,
            cost: cp.cost,
            hessian: [[h[(0, 0)], h[(0, 1)]], [h[(1, 0)], h[(1, 1)]]],
            grad_norm: cp.grad_norm,
            on_boundary: cp.on_boundary,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointReport {
    pub method: String,
    pub points: Vec<CriticalPointRecord>,
    pub problem: BenchmarkProblem,
    pub provenance: Provenance,
}

impl CriticalPointReport {
    pub fn new(problem: &BenchmarkProblem, method: &str, points: &[CriticalPoint]) -> Self {
        Self {
            method: method.to_string(),
            points: points.iter().map(CriticalPointRecord::from).collect(),
            problem: problem.clone(),
            provenance: Provenance::for_problem(problem),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
