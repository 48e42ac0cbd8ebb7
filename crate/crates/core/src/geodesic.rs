//! Geodesic (wrap-based) angular cost on the fundamental square `𝒮`.
//!
//! On `𝒮` the only wrap that can fire is the one on
//! `ξ(Φ) = φ₁₂ − (φ₂ − φ₁)`, which splits the square into three regions
//! `R_k`, `k ∈ {−1, 0, 1}`, where `wrap(ξ) = ξ + 2kπ`. Each piece is a
//! quadratic in `φ₂`, so it can be minimized over `φ₂` in closed form, leaving
//! three smooth 1D costs `f_{1,k}(φ₁)` whose minima are exactly the local
//! minima of `f` on `𝒮`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::angle::{wrap, AnglePair};
use crate::error::{Error, Result};
use crate::problem::MeasurementSet;
use crate::reduction::{gls_operator, ReducedModel};

/// Slack allowed when deciding whether a point lies on the closed square.
pub const SQUARE_TOL: f64 = 1e-12;
/// Interior margin used when assigning a lifted minimum to its region.
pub const REGION_MARGIN: f64 = 1e-9;
/// Number of intervals of the derivative sign scan.
pub const ROOT_SCAN_INTERVALS: usize = 2000;
/// Bisection stops once the bracket is narrower than this.
pub const ROOT_BRACKET_TOL: f64 = 1e-12;

/// One of the three pieces of `𝒮`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i32", try_from = "i32")]
pub enum Region {
    /// `k = −1`: `ξ ≥ π`, the lower-right triangle.
    Minus,
    /// `k = 0`: `ξ ∈ (−π, π)`.
    Zero,
    /// `k = 1`: `ξ ≤ −π`, the upper-left triangle.
    Plus,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Minus, Region::Zero, Region::Plus];

    #[inline]
    pub fn k(self) -> i32 {
        match self {
            Region::Minus => -1,
            Region::Zero => 0,
            Region::Plus => 1,
        }
    }

    pub fn from_k(k: i32) -> Option<Region> {
        match k {
            -1 => Some(Region::Minus),
            0 => Some(Region::Zero),
            1 => Some(Region::Plus),
            _ => None,
        }
    }

    #[inline]
    fn shift(self) -> f64 {
        TAU * f64::from(self.k())
    }

    /// Region of a raw `ξ` value. `ξ = −π` goes to `k = 1` and `ξ = π` to
    /// `k = −1`, which keeps `R₀` open.
    pub fn from_xi(xi: f64) -> Region {
        if xi <= -PI {
            Region::Plus
        } else if xi >= PI {
            Region::Minus
        } else {
            Region::Zero
        }
    }
}

impl From<Region> for i32 {
    fn from(r: Region) -> i32 {
        r.k()
    }
}

impl TryFrom<i32> for Region {
    type Error = Error;

    fn try_from(k: i32) -> Result<Region> {
        Region::from_k(k).ok_or_else(|| Error::InvalidArgument(format!("region index {k}")))
    }
}

/// Is `phi` on the closed square centred at `(φ₀₁, φ₀₂)`?
pub fn in_square(ms: &MeasurementSet, phi: AnglePair) -> bool {
    (phi.phi1 - ms.phi01).abs() <= PI + SQUARE_TOL && (phi.phi2 - ms.phi02).abs() <= PI + SQUARE_TOL
}

/// Representative of `phi` on `𝒮` (offsets from the centre in `[−π, π)`).
pub fn wrap_into_square(ms: &MeasurementSet, phi: AnglePair) -> AnglePair {
    AnglePair::new(
        ms.phi01 + wrap(phi.phi1 - ms.phi01),
        ms.phi02 + wrap(phi.phi2 - ms.phi02),
    )
}

/// `ξ(Φ) = φ₁₂ − (φ₂ − φ₁)`, unwrapped.
#[inline]
pub fn xi(ms: &MeasurementSet, phi: AnglePair) -> f64 {
    ms.phi12 - (phi.phi2 - phi.phi1)
}

/// Region containing `phi`, which must lie on `𝒮`.
pub fn region_of(ms: &MeasurementSet, phi: AnglePair) -> Result<Region> {
    if !in_square(ms, phi) {
        return Err(Error::OutOfDomain {
            phi1: phi.phi1,
            phi2: phi.phi2,
        });
    }
    Ok(Region::from_xi(xi(ms, phi)))
}

/// Angular geodesic cost `F_φ(Φ) = (1/σ²) Σ wrap(·)²`.
pub fn f_phi(ms: &MeasurementSet, phi: AnglePair) -> f64 {
    let r1 = wrap(ms.phi01 - phi.phi1);
    let r2 = wrap(xi(ms, phi));
    let r3 = wrap(ms.phi02 - phi.phi2);
    (r1 * r1 + r2 * r2 + r3 * r3) / (ms.sigma_angle * ms.sigma_angle)
}

/// Smooth surrogate `F_{φ,k}` that equals `F_φ` on `R_k`.
pub fn f_phi_k(ms: &MeasurementSet, phi: AnglePair, region: Region) -> f64 {
    let r1 = ms.phi01 - phi.phi1;
    let r2 = xi(ms, phi) + region.shift();
    let r3 = ms.phi02 - phi.phi2;
    (r1 * r1 + r2 * r2 + r3 * r3) / (ms.sigma_angle * ms.sigma_angle)
}

/// `f_k(Φ) = F_p*(φ₁) + F_{φ,k}(Φ)`.
pub fn f_k(model: &ReducedModel, phi: AnglePair, region: Region) -> f64 {
    model.position_term(phi.phi1) + f_phi_k(&model.measurements, phi, region)
}

/// Gradient of `f_k`.
pub fn f_k_gradient(model: &ReducedModel, phi: AnglePair, region: Region) -> Vector2<f64> {
    let ms = &model.measurements;
    let s2 = ms.sigma_angle * ms.sigma_angle;
    let r1 = ms.phi01 - phi.phi1;
    let r2 = xi(ms, phi) + region.shift();
    let r3 = ms.phi02 - phi.phi2;
    Vector2::new(
        2.0 * model.a0 * (phi.phi1 - model.theta0).sin() + 2.0 * (r2 - r1) / s2,
        -2.0 * (r2 + r3) / s2,
    )
}

/// `φ*₂,ₖ(φ₁) = ½(φ₁ + 2kπ + φ₁₂ + φ₀₂)`, the minimizer of `F_{φ,k}` over `φ₂`.
#[inline]
pub fn phi2_star_k(ms: &MeasurementSet, phi1: f64, region: Region) -> f64 {
    0.5 * (phi1 + region.shift() + ms.phi12 + ms.phi02)
}

/// Data of the inner least-squares problem over `φ₂` for one region.
#[derive(Clone, Debug)]
pub struct OneDModel {
    pub region: Region,
    pub a1: Vector3<f64>,
    pub a2: Vector3<f64>,
    pub zk: Vector3<f64>,
    pub q2: Matrix3<f64>,
    pub c_phi: Matrix3<f64>,
}

impl OneDModel {
    pub fn new(ms: &MeasurementSet, region: Region) -> Self {
        let a1 = Vector3::new(-1.0, 1.0, 0.0);
        let a2 = Vector3::new(0.0, -1.0, -1.0);
        let zk = Vector3::new(ms.phi01, ms.phi12 + region.shift(), ms.phi02);
        let c_phi = Matrix3::identity() * (ms.sigma_angle * ms.sigma_angle);
        let op = gls_operator(
            &DMatrix::from_column_slice(3, 1, a2.as_slice()),
            &DMatrix::from_column_slice(3, 3, c_phi.as_slice()),
        )
        .expect("a single nonzero column with a positive diagonal covariance is always solvable");
        let q2 = Matrix3::from_iterator(op.q.iter().copied());
        Self {
            region,
            a1,
            a2,
            zk,
            q2,
            c_phi,
        }
    }

    #[inline]
    fn residual(&self, phi1: f64) -> Vector3<f64> {
        self.zk + self.a1 * phi1
    }

    /// Angular part `(Z_k + A₁φ₁)ᵀQ₂(Z_k + A₁φ₁)`.
    pub fn angular_cost(&self, phi1: f64) -> f64 {
        let r = self.residual(phi1);
        r.dot(&(self.q2 * r))
    }

    pub fn angular_slope(&self, phi1: f64) -> f64 {
        2.0 * self.residual(phi1).dot(&(self.q2 * self.a1))
    }

    pub fn angular_curvature(&self) -> f64 {
        2.0 * self.a1.dot(&(self.q2 * self.a1))
    }
}

/// The three 1D costs `f_{1,k}` of one reduced model, with derivatives.
#[derive(Clone, Debug)]
pub struct OneDProblem<'a> {
    pub model: &'a ReducedModel,
    pub inner: OneDModel,
}

impl<'a> OneDProblem<'a> {
    pub fn new(model: &'a ReducedModel, region: Region) -> Self {
        Self {
            model,
            inner: OneDModel::new(&model.measurements, region),
        }
    }

    pub fn region(&self) -> Region {
        self.inner.region
    }

    pub fn cost(&self, phi1: f64) -> f64 {
        self.model.position_term(phi1) + self.inner.angular_cost(phi1)
    }

    pub fn slope(&self, phi1: f64) -> f64 {
        2.0 * self.model.a0 * (phi1 - self.model.theta0).sin() + self.inner.angular_slope(phi1)
    }

    pub fn curvature(&self, phi1: f64) -> f64 {
        2.0 * self.model.a0 * (phi1 - self.model.theta0).cos() + self.inner.angular_curvature()
    }

    /// Lifts a 1D point to `Φ = (φ₁, φ*₂,ₖ(φ₁))`.
    pub fn lift(&self, phi1: f64) -> AnglePair {
        AnglePair::new(phi1, phi2_star_k(&self.model.measurements, phi1, self.region()))
    }

    /// All strict local minima of `f_{1,k}` on `[φ₀₁ − π, φ₀₁ + π]`.
    pub fn minima_1d(&self) -> Vec<f64> {
        let lo = self.model.measurements.phi01 - PI;
        let step = TAU / ROOT_SCAN_INTERVALS as f64;
        let mut roots = Vec::new();
        let mut left = lo;
        let mut left_slope = self.slope(left);
        for i in 1..=ROOT_SCAN_INTERVALS {
            let right = lo + step * i as f64;
            let right_slope = self.slope(right);
            if left_slope < 0.0 && right_slope >= 0.0 {
                roots.push(self.bisect(left, right));
            }
            left = right;
            left_slope = right_slope;
        }
        roots
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> f64 {
        while hi - lo > ROOT_BRACKET_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

pub fn f_1k(model: &ReducedModel, phi1: f64, region: Region) -> f64 {
    OneDProblem::new(model, region).cost(phi1)
}

pub fn f_1k_prime(model: &ReducedModel, phi1: f64, region: Region) -> f64 {
    OneDProblem::new(model, region).slope(phi1)
}

pub fn f_1k_second(model: &ReducedModel, phi1: f64, region: Region) -> f64 {
    OneDProblem::new(model, region).curvature(phi1)
}

/// Which branch of the existence argument applies: `a` when
/// `3/(2a₀σ²) ≥ 1` (so `f″_{1,k} > 0` everywhere), `b` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvexityCase {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
}

impl std::fmt::Display for ConvexityCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConvexityCase::A => "a",
            ConvexityCase::B => "b",
        })
    }
}

pub fn convexity_ratio(model: &ReducedModel) -> f64 {
    let s2 = model.sigma_angle() * model.sigma_angle();
    3.0 / (2.0 * model.a0 * s2)
}

pub fn convexity_case(model: &ReducedModel) -> ConvexityCase {
    if convexity_ratio(model) >= 1.0 {
        ConvexityCase::A
    } else {
        ConvexityCase::B
    }
}

/// A local minimum of the reduced geodesic cost `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicMinimum {
    pub phi: AnglePair,
    pub cost: f64,
    pub region: Region,
    pub is_global: bool,
    pub second_derivative_1d: f64,
    /// Within [`REGION_MARGIN`] of the region boundary.
    pub on_boundary: bool,
}

/// Minima of `f_{1,k}` whose lift lands on `𝒮` inside `R_k`, sorted by cost.
/// `is_global` is left `false`; see [`geodesic_minima_catalog`].
pub fn enumerate_1d_minima(model: &ReducedModel, region: Region) -> Vec<GeodesicMinimum> {
    let ms = &model.measurements;
    let problem = OneDProblem::new(model, region);
    let mut out: Vec<GeodesicMinimum> = problem
        .minima_1d()
        .into_iter()
        .filter_map(|phi1| {
            let phi = problem.lift(phi1);
            if !in_square(ms, phi) {
                return None;
            }
            let x = xi(ms, phi);
            let (inside, on_boundary) = match region {
                Region::Plus => (x < -PI - REGION_MARGIN, (x + PI).abs() <= REGION_MARGIN),
                Region::Minus => (x > PI + REGION_MARGIN, (x - PI).abs() <= REGION_MARGIN),
                Region::Zero => (x.abs() < PI - REGION_MARGIN, (x.abs() - PI).abs() <= REGION_MARGIN),
            };
            (inside || on_boundary).then(|| GeodesicMinimum {
                phi,
                cost: model.reduced_geodesic(phi),
                region,
                is_global: false,
                second_derivative_1d: problem.curvature(phi1),
                on_boundary,
            })
        })
        .collect();
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    out
}

/// Every local minimum of `f` on `𝒮`, sorted by cost. Entries within `1e-9`
/// of the lowest cost are marked global.
pub fn geodesic_minima_catalog(model: &ReducedModel) -> Vec<GeodesicMinimum> {
    let mut all: Vec<GeodesicMinimum> = Region::ALL
        .iter()
        .flat_map(|&r| enumerate_1d_minima(model, r))
        .collect();
    all.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    if let Some(best) = all.first().map(|m| m.cost) {
        for m in &mut all {
            m.is_global = m.cost <= best + 1e-9;
        }
    }
    all
}
