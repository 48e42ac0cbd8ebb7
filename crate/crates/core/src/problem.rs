//! Ground truth, measurement synthesis, orientation-mismatch injection and the
//! three benchmark problems.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::angle::{wrap, AnglePair, Rot2};
use crate::error::{Error, Result};

/// Poses below this separation are treated as coincident.
const COINCIDENT_TOL: f64 = 1e-9;

/// Ground-truth poses 1 and 2. Pose 0 sits at the origin with zero heading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub p1: [f64; 2],
    pub p2: [f64; 2],
    pub phi1: f64,
    pub phi2: f64,
}

impl GroundTruth {
    pub fn new(p1: [f64; 2], p2: [f64; 2], phi1: f64, phi2: f64) -> Result<Self> {
        let gt = Self { p1, p2, phi1, phi2 };
        gt.validate()?;
        Ok(gt)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.p1.iter().chain(&self.p2).all(|v| v.is_finite())
            && self.phi1.is_finite()
            && self.phi2.is_finite();
        if !finite {
            return Err(Error::InvalidProblem(
                "ground truth contains non-finite values".into(),
            ));
        }
        let (p1, p2) = (self.position1(), self.position2());
        if p1.norm() < COINCIDENT_TOL || p2.norm() < COINCIDENT_TOL {
            return Err(Error::InvalidProblem(
                "a pose coincides with the origin pose".into(),
            ));
        }
        if (p2 - p1).norm() < COINCIDENT_TOL {
            return Err(Error::InvalidProblem("poses 1 and 2 coincide".into()));
        }
        Ok(())
    }

    pub fn position1(&self) -> Vector2<f64> {
        Vector2::from(self.p1)
    }

    pub fn position2(&self) -> Vector2<f64> {
        Vector2::from(self.p2)
    }

    pub fn headings(&self) -> AnglePair {
        AnglePair::new(self.phi1, self.phi2)
    }

    /// Stacked positions `P = [p₁; p₂]`.
    pub fn stacked_positions(&self) -> nalgebra::Vector4<f64> {
        nalgebra::Vector4::new(self.p1[0], self.p1[1], self.p2[0], self.p2[1])
    }
}

/// The six relative measurements of the 3-pose graph and their noise scales.
///
/// Angles are stored raw (unwrapped). Position and heading channels carry
/// separate standard deviations; every constructor in this crate sets them
/// equal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub p01: Vector2<f64>,
    pub p12: Vector2<f64>,
    pub p02: Vector2<f64>,
    pub phi01: f64,
    pub phi12: f64,
    pub phi02: f64,
    pub sigma_position: f64,
    pub sigma_angle: f64,
}

impl MeasurementSet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p01: Vector2<f64>,
        p12: Vector2<f64>,
        p02: Vector2<f64>,
        phi01: f64,
        phi12: f64,
        phi02: f64,
        sigma: f64,
    ) -> Result<Self> {
        let ms = Self {
            p01,
            p12,
            p02,
            phi01,
            phi12,
            phi02,
            sigma_position: sigma,
            sigma_angle: sigma,
        };
        ms.validate()?;
        Ok(ms)
    }

    /// Measurements that reproduce `gt` exactly:
    /// `p_ij = R(φ_i)ᵀ(p_j − p_i)` and `φ_ij = φ_j − φ_i`.
    pub fn from_ground_truth(gt: &GroundTruth, sigma: f64) -> Result<Self> {
        gt.validate()?;
        let (p1, p2) = (gt.position1(), gt.position2());
        Self::new(
            p1,
            Rot2::new(gt.phi1).transpose().apply(&(p2 - p1)),
            p2,
            gt.phi1,
            gt.phi2 - gt.phi1,
            gt.phi2,
            sigma,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, s) in [
            ("sigma_position", self.sigma_position),
            ("sigma_angle", self.sigma_angle),
        ] {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "{name} must be positive and finite, got {s}"
                )));
            }
        }
        for (name, p) in [("p01", self.p01), ("p12", self.p12), ("p02", self.p02)] {
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidProblem(format!("{name} is not finite")));
            }
            if p.norm() < COINCIDENT_TOL {
                return Err(Error::InvalidProblem(format!(
                    "measurement {name} is the zero vector"
                )));
            }
        }
        if ![self.phi01, self.phi12, self.phi02]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidProblem(
                "orientation measurements must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Injects a total orientation mismatch `eps`: `+ε/3` on φ₀₁ and φ₁₂,
    /// `−ε/3` on φ₀₂. Positions are left untouched.
    pub fn with_orientation_mismatch(&self, eps: f64) -> Self {
        let third = eps / 3.0;
        Self {
            phi01: self.phi01 + third,
            phi12: self.phi12 + third,
            phi02: self.phi02 - third,
            ..*self
        }
    }

    /// Injects a total orientation mismatch `eps` while keeping φ₀₁ exact:
    /// `+ε/2` on φ₁₂ and `−ε/2` on φ₀₂. With noise-free positions this keeps
    /// `θ₀ = φ₀₁`.
    pub fn with_anchored_mismatch(&self, eps: f64) -> Self {
        let half = eps / 2.0;
        Self {
            phi12: self.phi12 + half,
            phi02: self.phi02 - half,
            ..*self
        }
    }

    /// `wrap(φ₀₁ + φ₁₂ − φ₀₂)`.
    pub fn mismatch(&self) -> f64 {
        wrap(self.raw_mismatch())
    }

    /// `φ₀₁ + φ₁₂ − φ₀₂` without wrapping.
    pub fn raw_mismatch(&self) -> f64 {
        self.phi01 + self.phi12 - self.phi02
    }

    /// Centre `(φ₀₁, φ₀₂)` of the fundamental square.
    pub fn center(&self) -> AnglePair {
        AnglePair::new(self.phi01, self.phi02)
    }
}

/// One row of the benchmark table (or a user-defined problem of the same shape).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkProblem {
    pub label: String,
    pub ground_truth: GroundTruth,
    pub epsilon: f64,
    pub measurements: MeasurementSet,
}

impl BenchmarkProblem {
    pub fn new(label: impl Into<String>, gt: GroundTruth, epsilon: f64, sigma: f64) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(Error::InvalidProblem("epsilon must be finite".into()));
        }
        let measurements =
            MeasurementSet::from_ground_truth(&gt, sigma)?.with_orientation_mismatch(epsilon);
        Ok(Self {
            label: label.into(),
            ground_truth: gt,
            epsilon,
            measurements,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.measurements.sigma_position
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            ground_truth: self.ground_truth,
            epsilon: self.epsilon,
            sigma: self.sigma(),
            label: Some(self.label.clone()),
        }
    }

    /// Short stable digest of the problem definition, used in provenance
    /// headers.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(&self.to_file()).expect("problem serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hex::encode(&hash[..8])
    }
}

/// Default ground-truth positions for the builtin benchmarks.
pub const DEFAULT_P1: [f64; 2] = [1.0, 0.0];
pub const DEFAULT_P2: [f64; 2] = [1.0, 1.0];
pub const DEFAULT_SIGMA: f64 = 1.0;

/// Ground-truth headings and total mismatch of benchmark `id`.
pub fn benchmark_parameters(id: u32) -> Result<(AnglePair, f64)> {
    match id {
        1 => Ok((AnglePair::new(PI / 12.0, PI / 6.0), 0.0)),
        2 => Ok((AnglePair::new(PI / 2.0, PI / 2.0), 0.1)),
        3 => Ok((AnglePair::new(-PI / 4.0, -PI / 2.0), PI / 2.0)),
        other => Err(Error::UnknownBenchmark(other)),
    }
}

/// Builds benchmark problem `id` on the given positions.
pub fn benchmark_problem(id: u32, p1: [f64; 2], p2: [f64; 2], sigma: f64) -> Result<BenchmarkProblem> {
    let (headings, eps) = benchmark_parameters(id)?;
    let gt = GroundTruth::new(p1, p2, headings.phi1, headings.phi2)?;
    BenchmarkProblem::new(format!("benchmark-{id}"), gt, eps, sigma)
}

/// Benchmark `id` on the default geometry.
pub fn default_benchmark(id: u32) -> Result<BenchmarkProblem> {
    benchmark_problem(id, DEFAULT_P1, DEFAULT_P2, DEFAULT_SIGMA)
}

/// On-disk problem definition.
///
/// ```json
/// { "ground_truth": {"p1": [x, y], "p2": [x, y], "phi1": r, "phi2": r},
///   "epsilon": r, "sigma": r }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub ground_truth: GroundTruth,
    pub epsilon: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<BenchmarkProblem> {
        let label = self.label.unwrap_or_else(|| "custom".to_string());
        self.ground_truth.validate()?;
        BenchmarkProblem::new(label, self.ground_truth, self.epsilon, self.sigma)
    }

    pub fn parse(text: &str) -> Result<BenchmarkProblem> {
        let file: ProblemFile = serde_json::from_str(text)?;
        file.into_problem()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<BenchmarkProblem> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
