//! Angle arithmetic on SO(2): wrapping, planar rotations and the two scalar
//! orientation-error metrics (geodesic and chordal).

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps any finite angle to its representative in `[-π, π)`.
///
/// Non-finite input propagates as NaN; use [`Angle`] when the input has to be
/// validated.
#[inline]
pub fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU for tiny negative arguments
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

/// Shortest arc between two headings, `|wrap(a - b)|`, in `[0, π]`.
#[inline]
pub fn geodesic_err(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}

/// Squared chordal distance `‖R(a) - R(b)‖²_F = 4(1 - cos(a - b))`, in `[0, 8]`.
#[inline]
pub fn chordal_err_sq(a: f64, b: f64) -> f64 {
    4.0 * (1.0 - (a - b).cos())
}

/// A finite angle in radians. Never normalized implicitly.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub fn new(radians: f64) -> Result<Self> {
        if radians.is_finite() {
            Ok(Self(radians))
        } else {
            Err(Error::InvalidArgument(format!(
                "angle must be finite, got {radians}"
            )))
        }
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    /// Representative in `[-π, π)`.
    #[inline]
    pub fn wrapped(self) -> Angle {
        Angle(wrap(self.0))
    }

    pub fn rotation(self) -> Rot2 {
        Rot2::new(self.0)
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Angle::new(value)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad", self.0)
    }
}

/// Planar rotation matrix. Constructed only from an angle, so it is always
/// orthonormal with unit determinant up to rounding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rot2(Matrix2<f64>);

impl Rot2 {
    /// Counter-clockwise rotation `[[cos a, -sin a], [sin a, cos a]]`.
    pub fn new(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        #[rustfmt::skip]
        let m = Matrix2::new(
            c, -s,
            s, c,
        );
        Rot2(m)
    }

    pub fn identity() -> Self {
        Rot2(Matrix2::identity())
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    #[inline]
    pub fn transpose(&self) -> Rot2 {
        Rot2(self.0.transpose())
    }

    #[inline]
    pub fn angle(&self) -> f64 {
        self.0[(1, 0)].atan2(self.0[(0, 0)])
    }

    #[inline]
    pub fn apply(&self, v: &Vector2<f64>) -> Vector2<f64> {
        self.0 * v
    }
}

impl std::ops::Mul for Rot2 {
    type Output = Rot2;

    fn mul(self, rhs: Rot2) -> Rot2 {
        Rot2(self.0 * rhs.0)
    }
}

/// Reduced decision variable `Φ = (φ₁, φ₂)`: the headings of poses 1 and 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnglePair {
    pub phi1: f64,
    pub phi2: f64,
}

impl AnglePair {
    pub const fn new(phi1: f64, phi2: f64) -> Self {
        Self { phi1, phi2 }
    }

    pub fn from_vector(v: &Vector2<f64>) -> Self {
        Self::new(v[0], v[1])
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.phi1, self.phi2)
    }

    pub fn is_finite(&self) -> bool {
        self.phi1.is_finite() && self.phi2.is_finite()
    }

    /// Max-norm of the coordinate-wise wrapped difference, i.e. the distance
    /// on the torus.
    pub fn wrapped_distance(&self, other: &AnglePair) -> f64 {
        geodesic_err(self.phi1, other.phi1).max(geodesic_err(self.phi2, other.phi2))
    }
}

impl std::ops::Add for AnglePair {
    type Output = AnglePair;

    fn add(self, rhs: AnglePair) -> AnglePair {
        AnglePair::new(self.phi1 + rhs.phi1, self.phi2 + rhs.phi2)
    }
}

impl std::ops::Sub for AnglePair {
    type Output = AnglePair;

    fn sub(self, rhs: AnglePair) -> AnglePair {
        AnglePair::new(self.phi1 - rhs.phi1, self.phi2 - rhs.phi2)
    }
}
