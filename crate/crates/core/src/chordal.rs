//! Chordal angular cost, its derivatives, and critical-point enumeration.
//!
//! With `θ₀ = φ₀₁` the reduced cost reads
//! `g(Φ) = c₀ − 6/σ² − (2/σ²)(b₀cos(φ₀₁ − φ₁) + cos(φ₀₂ − φ₂) + cos ξ)` with
//! `b₀ = a₀σ² + 1`. Along `φ₁ = 2φ₂ − φ₀₂ − φ₁₂` the second gradient entry
//! vanishes identically, and the first reduces to a function of
//! `η = φ₀₂ − φ₂` alone; the closed-form enumerations below walk that branch.
//! The numeric enumeration covers every mismatch and both branches.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::{geodesic_err, wrap, AnglePair};
use crate::error::{Error, Result};
use crate::geodesic::xi;
use crate::problem::MeasurementSet;
use crate::reduction::ReducedModel;

/// Eigenvalues within this band of zero are treated as zero.
pub const EIGEN_ZERO_TOL: f64 = 1e-10;
/// Tolerance on the mismatch / heading preconditions of the closed forms.
pub const PRECONDITION_TOL: f64 = 1e-9;
/// Points whose offset from the centre is this close to `±π` are snapped onto
/// the boundary of the square.
pub const BOUNDARY_SNAP: f64 = 1e-9;

/// Angular chordal cost `G_φ(Φ) = (2/σ²)(3 − cos(φ₀₁−φ₁) − cos(φ₀₂−φ₂) − cos ξ)`.
pub fn g_phi(ms: &MeasurementSet, phi: AnglePair) -> f64 {
    let s2 = ms.sigma_angle * ms.sigma_angle;
    2.0 * (3.0 - (ms.phi01 - phi.phi1).cos() - (ms.phi02 - phi.phi2).cos() - xi(ms, phi).cos()) / s2
}

/// Gradient of the reduced chordal cost `g`.
pub fn jacobian_g(model: &ReducedModel, phi: AnglePair) -> Vector2<f64> {
    let ms = &model.measurements;
    let w = 2.0 / (ms.sigma_angle * ms.sigma_angle);
    let sx = xi(ms, phi).sin();
    Vector2::new(
        2.0 * model.a0 * (phi.phi1 - model.theta0).sin() + w * (-(ms.phi01 - phi.phi1).sin() + sx),
        w * (-(ms.phi02 - phi.phi2).sin() - sx),
    )
}

/// Hessian of the reduced chordal cost `g`.
pub fn hessian_g(model: &ReducedModel, phi: AnglePair) -> Matrix2<f64> {
    let ms = &model.measurements;
    let w = 2.0 / (ms.sigma_angle * ms.sigma_angle);
    let cx = xi(ms, phi).cos();
    let h11 = 2.0 * model.a0 * (phi.phi1 - model.theta0).cos() + w * ((ms.phi01 - phi.phi1).cos() + cx);
    let h12 = -w * cx;
    let h22 = w * ((ms.phi02 - phi.phi2).cos() + cx);
    Matrix2::new(h11, h12, h12, h22)
}

/// `b₀ = a₀σ² + 1`; equals `a₀ + 1` at unit noise.
pub fn b0(model: &ReducedModel) -> f64 {
    model.a0 * model.sigma_angle() * model.sigma_angle() + 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CriticalKind {
    Min,
    Max,
    Saddle,
    /// At least one eigenvalue is numerically zero.
    Indefinite,
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn symmetric_eigenvalues(h: &Matrix2<f64>) -> (f64, f64) {
    let mean = 0.5 * (h[(0, 0)] + h[(1, 1)]);
    let half_diff = 0.5 * (h[(0, 0)] - h[(1, 1)]);
    let r = half_diff.hypot(0.5 * (h[(0, 1)] + h[(1, 0)]));
    (mean - r, mean + r)
}

pub fn classify(h: &Matrix2<f64>) -> CriticalKind {
    let (lo, hi) = symmetric_eigenvalues(h);
    if lo > EIGEN_ZERO_TOL {
        CriticalKind::Min
    } else if hi < -EIGEN_ZERO_TOL {
        CriticalKind::Max
    } else if lo < -EIGEN_ZERO_TOL && hi > EIGEN_ZERO_TOL {
        CriticalKind::Saddle
    } else {
        CriticalKind::Indefinite
    }
}

/// A stationary point of `g` on the closed square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub phi: AnglePair,
    pub cost: f64,
    pub kind: CriticalKind,
    pub hessian: Matrix2<f64>,
    pub grad_norm: f64,
    pub on_boundary: bool,
}

impl CriticalPoint {
    fn evaluate(model: &ReducedModel, phi: AnglePair) -> Self {
        let ms = &model.measurements;
        let hessian = hessian_g(model, phi);
        let on_boundary = [phi.phi1 - ms.phi01, phi.phi2 - ms.phi02]
            .iter()
            .any(|d| (d.abs() - PI).abs() <= BOUNDARY_SNAP);
        Self {
            phi,
            cost: model.reduced_chordal(phi),
            kind: classify(&hessian),
            hessian,
            grad_norm: jacobian_g(model, phi).norm(),
            on_boundary,
        }
    }
}

/// Offset from the square's centre in `[−π, π)`, snapping `±π` to `−π`.
fn canonical_offset(d: f64) -> f64 {
    let w = wrap(d);
    if PI - w.abs() <= BOUNDARY_SNAP {
        -PI
    } else {
        w
    }
}

/// Every copy of a point on the closed square: points on the boundary appear
/// two or four times.
pub fn square_copies(ms: &MeasurementSet, phi: AnglePair) -> Vec<AnglePair> {
    let offsets = |d: f64| -> Vec<f64> {
        let c = canonical_offset(d);
        if c == -PI {
            vec![-PI, PI]
        } else {
            vec![c]
        }
    };
    let mut out = Vec::with_capacity(4);
    for d1 in offsets(phi.phi1 - ms.phi01) {
        for d2 in offsets(phi.phi2 - ms.phi02) {
            out.push(AnglePair::new(ms.phi01 + d1, ms.phi02 + d2));
        }
    }
    out
}

fn heading_precondition(model: &ReducedModel) -> Result<()> {
    let ms = &model.measurements;
    if geodesic_err(model.theta0, ms.phi01) > PRECONDITION_TOL {
        return Err(Error::Precondition(format!(
            "closed-form enumeration needs θ₀ = φ₀₁, got θ₀ = {} vs φ₀₁ = {}",
            model.theta0, ms.phi01
        )));
    }
    Ok(())
}

/// Point on the `J₂ ≡ 0` branch `φ₁ = 2φ₂ − φ₀₂ − φ₁₂` with `η = φ₀₂ − φ₂`.
fn branch_point(ms: &MeasurementSet, eta: f64) -> AnglePair {
    let phi2 = ms.phi02 - eta;
    AnglePair::new(2.0 * phi2 - ms.phi02 - ms.phi12, phi2)
}

fn evaluate_all(model: &ReducedModel, points: impl IntoIterator<Item = AnglePair>) -> Vec<CriticalPoint> {
    let ms = &model.measurements;
    points
        .into_iter()
        .flat_map(|p| square_copies(ms, p))
        .map(|p| CriticalPoint::evaluate(model, p))
        .collect()
}

/// The eleven critical points of `g` on the closed square for consistent
/// orientation measurements: the minimum at `(φ₀₁, φ₀₂)`, two maxima at
/// `η = ±arccos(−1/(2b₀))` and eight boundary saddles.
pub fn critical_points_perfect(model: &ReducedModel) -> Result<Vec<CriticalPoint>> {
    let ms = &model.measurements;
    if ms.mismatch().abs() > PRECONDITION_TOL {
        return Err(Error::Precondition(format!(
            "measurements must be consistent, mismatch = {}",
            ms.mismatch()
        )));
    }
    heading_precondition(model)?;
    let eta_max = (-1.0 / (2.0 * b0(model))).acos();
    let c = ms.center();
    let mut points = vec![c, branch_point(ms, eta_max), branch_point(ms, -eta_max)];
    for (d1, d2) in [(PI, PI), (PI, 0.0), (0.0, PI)] {
        points.push(c + AnglePair::new(d1, d2));
    }
    Ok(evaluate_all(model, points))
}

/// Critical points on the `J₂ ≡ 0` branch for mismatch `ε = π`: two minima of
/// equal cost at `η = ±arccos(1/(2b₀))`, plus the non-minimal points at
/// `η = 0` and `η = ±π`.
pub fn critical_points_eps_pi(model: &ReducedModel) -> Result<Vec<CriticalPoint>> {
    let ms = &model.measurements;
    if geodesic_err(ms.mismatch(), PI) > PRECONDITION_TOL {
        return Err(Error::Precondition(format!(
            "mismatch must be π, got {}",
            ms.mismatch()
        )));
    }
    heading_precondition(model)?;
    let eta_min = (1.0 / (2.0 * b0(model))).acos();
    let points = [eta_min, -eta_min, 0.0, PI].map(|eta| branch_point(ms, eta));
    Ok(evaluate_all(model, points))
}

/// Settings of the damped Newton search on `J(Φ) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub seeds_per_axis: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub dedup_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            seeds_per_axis: 64,
            grad_tol: 1e-10,
            max_iter: 200,
            max_halvings: 50,
            dedup_tol: 1e-6,
        }
    }
}

fn newton_stationary(model: &ReducedModel, seed: AnglePair, opts: &NewtonOptions) -> Option<AnglePair> {
    let mut x = seed.to_vector();
    let mut j = jacobian_g(model, seed);
    for _ in 0..opts.max_iter {
        let norm = j.norm();
        if norm < opts.grad_tol {
            return Some(AnglePair::from_vector(&x));
        }
        let h = hessian_g(model, AnglePair::from_vector(&x));
        let step = -h.try_inverse()? * j;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = x + step * t;
            let jt = jacobian_g(model, AnglePair::from_vector(&trial));
            if jt.norm() < norm {
                accepted = Some((trial, jt));
                break;
            }
            t *= 0.5;
        }
        let (xn, jn) = accepted?;
        x = xn;
        j = jn;
    }
    (j.norm() < opts.grad_tol).then(|| AnglePair::from_vector(&x))
}

/// Numeric enumeration of all critical points of `g` on the closed square,
/// for any mismatch.
///
/// Seeds a uniform grid of cell centres, runs damped Newton on the gradient,
/// deduplicates modulo `2π` and lists boundary points once per copy. The
/// output order depends only on the point locations.
pub fn critical_points_numeric(model: &ReducedModel) -> Vec<CriticalPoint> {
    critical_points_numeric_with(model, &NewtonOptions::default())
}

pub fn critical_points_numeric_with(model: &ReducedModel, opts: &NewtonOptions) -> Vec<CriticalPoint> {
    let ms = &model.measurements;
    let n = opts.seeds_per_axis;
    let cell = 2.0 * PI / n as f64;
    let found: Vec<Option<AnglePair>> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx / n, idx % n);
            let seed = AnglePair::new(
                ms.phi01 - PI + cell * (col as f64 + 0.5),
                ms.phi02 - PI + cell * (row as f64 + 0.5),
            );
            newton_stationary(model, seed, opts)
        })
        .collect();

    let mut unique: Vec<AnglePair> = Vec::new();
    for p in found.into_iter().flatten() {
        let canon = AnglePair::new(
            ms.phi01 + canonical_offset(p.phi1 - ms.phi01),
            ms.phi02 + canonical_offset(p.phi2 - ms.phi02),
        );
        if unique.iter().all(|u| u.wrapped_distance(&canon) >= opts.dedup_tol) {
            unique.push(canon);
        }
    }
    unique.sort_by(|a, b| a.phi1.total_cmp(&b.phi1).then(a.phi2.total_cmp(&b.phi2)));
    let mut points = evaluate_all(model, unique);
    points.sort_by(|a, b| {
        a.phi
            .phi1
            .total_cmp(&b.phi.phi1)
            .then(a.phi.phi2.total_cmp(&b.phi.phi2))
    });
    points
}

/// Distinct minima of `g` (one entry per point modulo `2π`), sorted by cost.
pub fn chordal_minima(model: &ReducedModel) -> Vec<CriticalPoint> {
    let mut mins: Vec<CriticalPoint> = Vec::new();
    for cp in critical_points_numeric(model) {
        if cp.kind == CriticalKind::Min && mins.iter().all(|m| m.phi.wrapped_distance(&cp.phi) > 1e-6) {
            mins.push(cp);
        }
    }
    mins.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    mins
}
