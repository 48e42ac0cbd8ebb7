//! Generalized least squares and the closed-form elimination of the
//! translations, which leaves costs in the two headings only.
//!
//! The position residuals stack as `A·P − z₀ − R̄(φ₁)·z₁` with
//! `R̄(φ) = diag(R(φ), R(φ), R(φ))`, `z₀ = [p₀₁; 0; p₀₂]` and
//! `z₁ = [0; p₁₂; 0]`. Minimizing over `P` gives
//! `F_p*(φ₁) = c₀ − 2a₀·cos(φ₁ − θ₀)`.

use nalgebra::{DMatrix, DVector, Matrix2, SMatrix, SVector, Vector4};

use crate::angle::{wrap, AnglePair, Rot2};
use crate::chordal::g_phi;
use crate::error::{Error, Result};
use crate::geodesic::f_phi;
use crate::problem::MeasurementSet;

pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type Vector6 = SVector<f64, 6>;

/// Relative pivot size below which a Cholesky factor is considered singular.
const RANK_TOL: f64 = 1e-12;

/// Solution of `min_x |A x − b|²_C`.
#[derive(Clone, Debug)]
pub struct GlsSolution {
    pub x_star: DVector<f64>,
    pub cost_star: f64,
    /// `C⁻¹ − C⁻¹A(AᵀC⁻¹A)⁻¹AᵀC⁻¹`
    pub q: DMatrix<f64>,
}

/// Linear maps shared by every right-hand side of one GLS problem.
#[derive(Clone, Debug)]
pub struct GlsOperator {
    /// `(AᵀC⁻¹A)⁻¹AᵀC⁻¹`, so that `x* = gain · b`.
    pub gain: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

fn checked_cholesky(m: &DMatrix<f64>, what: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))?;
    let diag = chol.l_dirty().diagonal();
    let max = diag.max();
    if diag.min() <= RANK_TOL * max.max(1.0) {
        return Err(Error::Singular(format!("{what} is numerically singular")));
    }
    Ok(chol)
}

/// Builds the gain and projector of `min_x |A x − b|²_C` for any `b`.
pub fn gls_operator(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<GlsOperator> {
    let n = a.nrows();
    if c.nrows() != n || c.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "covariance must be {n}x{n}, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    if a.ncols() > n {
        return Err(Error::Singular("more unknowns than equations".into()));
    }
    if (c - c.transpose()).amax() > 1e-12 * c.amax().max(1.0) {
        return Err(Error::Singular("covariance is not symmetric".into()));
    }
    let c_inv = checked_cholesky(c, "covariance")?.inverse();
    let at_cinv = a.transpose() * &c_inv;
    let normal = &at_cinv * a;
    let normal_inv = checked_cholesky(&normal, "normal matrix AᵀC⁻¹A")?.inverse();
    let gain = &normal_inv * &at_cinv;
    let q = &c_inv - at_cinv.transpose() * &gain;
    // symmetrize away rounding
    let q = (&q + q.transpose()) * 0.5;
    Ok(GlsOperator { gain, q })
}

/// `x* = (AᵀC⁻¹A)⁻¹AᵀC⁻¹b`, `cost* = bᵀQb`.
pub fn gls_solve(a: &DMatrix<f64>, b: &DVector<f64>, c: &DMatrix<f64>) -> Result<GlsSolution> {
    if b.len() != a.nrows() {
        return Err(Error::InvalidArgument(format!(
            "rhs has length {}, expected {}",
            b.len(),
            a.nrows()
        )));
    }
    let op = gls_operator(a, c)?;
    let x_star = &op.gain * b;
    let cost_star = b.dot(&(&op.q * b));
    Ok(GlsSolution {
        x_star,
        cost_star,
        q: op.q,
    })
}

/// Design matrix of the position residuals, rows `(p₁), (p₂ − p₁), (p₂)`.
pub fn position_design() -> DMatrix<f64> {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(6, 4, &[
         1.0,  0.0, 0.0, 0.0,
         0.0,  1.0, 0.0, 0.0,
        -1.0,  0.0, 1.0, 0.0,
         0.0, -1.0, 0.0, 1.0,
         0.0,  0.0, 1.0, 0.0,
         0.0,  0.0, 0.0, 1.0,
    ]);
    a
}

/// `diag(R(φ), R(φ), R(φ))`.
pub fn block_rotation(phi: f64) -> Matrix6 {
    let r: Matrix2<f64> = *Rot2::new(phi).matrix();
    let mut m = Matrix6::zeros();
    for b in 0..3 {
        m.fixed_view_mut::<2, 2>(2 * b, 2 * b).copy_from(&r);
    }
    m
}

/// Position part of the cost evaluated straight from the residual
/// definition: `Σ |p_ij − R_iᵀ(p_j − p_i)|²_Σ` with `p₀ = 0`, `R₀ = I`.
pub fn position_cost(ms: &MeasurementSet, positions: &Vector4<f64>, phi1: f64) -> f64 {
    let p1 = positions.fixed_rows::<2>(0).into_owned();
    let p2 = positions.fixed_rows::<2>(2).into_owned();
    let r01 = ms.p01 - p1;
    let r12 = ms.p12 - Rot2::new(phi1).transpose().apply(&(p2 - p1));
    let r02 = ms.p02 - p2;
    let s2 = ms.sigma_position * ms.sigma_position;
    (r01.norm_squared() + r12.norm_squared() + r02.norm_squared()) / s2
}

/// Geodesic cost `F(P, Φ)` over all six variables.
pub fn full_geodesic_cost(ms: &MeasurementSet, positions: &Vector4<f64>, phi: AnglePair) -> f64 {
    let s = ms.sigma_angle;
    let angular: f64 = [
        wrap(ms.phi01 - phi.phi1),
        wrap(ms.phi12 - (phi.phi2 - phi.phi1)),
        wrap(ms.phi02 - phi.phi2),
    ]
    .iter()
    .map(|r| (r / s) * (r / s))
    .sum();
    position_cost(ms, positions, phi.phi1) + angular
}

/// Chordal cost `G(P, Φ)`, with the angular part evaluated in matrix form
/// `Σ (1/2σ²)‖R_i R_ij − R_j‖²_F`.
pub fn full_chordal_cost(ms: &MeasurementSet, positions: &Vector4<f64>, phi: AnglePair) -> f64 {
    let r = [Rot2::identity(), Rot2::new(phi.phi1), Rot2::new(phi.phi2)];
    let edges = [(0, 1, ms.phi01), (1, 2, ms.phi12), (0, 2, ms.phi02)];
    let angular: f64 = edges
        .iter()
        .map(|&(i, j, phi_ij)| {
            let d = (r[i] * Rot2::new(phi_ij)).matrix() - r[j].matrix();
            d.norm_squared()
        })
        .sum::<f64>()
        / (2.0 * ms.sigma_angle * ms.sigma_angle);
    position_cost(ms, positions, phi.phi1) + angular
}

/// Translation-free model of one measurement set.
#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub c0: f64,
    pub a0: f64,
    pub theta0: f64,
    pub q6: Matrix6,
    pub z0: Vector6,
    pub z1: Vector6,
    pub measurements: MeasurementSet,
    gain: SMatrix<f64, 4, 6>,
}

impl ReducedModel {
    pub fn new(ms: &MeasurementSet) -> Result<Self> {
        ms.validate()?;
        let s2 = ms.sigma_position * ms.sigma_position;
        let op = gls_operator(&position_design(), &(DMatrix::identity(6, 6) * s2))?;
        let q6 = Matrix6::from_iterator(op.q.iter().copied());
        let gain = SMatrix::<f64, 4, 6>::from_iterator(op.gain.iter().copied());

        let z0 = Vector6::new(ms.p01[0], ms.p01[1], 0.0, 0.0, ms.p02[0], ms.p02[1]);
        let z1 = Vector6::new(0.0, 0.0, ms.p12[0], ms.p12[1], 0.0, 0.0);

        let c0 = z0.dot(&(q6 * z0)) + z1.dot(&(q6 * z1));
        let cos_coeff = z0.dot(&(q6 * z1));
        let sin_coeff = z0.dot(&(q6 * block_rotation(std::f64::consts::FRAC_PI_2) * z1));
        let a0 = cos_coeff.hypot(sin_coeff);
        if !(a0 > 1e-12) {
            return Err(Error::Degenerate(format!(
                "reduction amplitude a0 = {a0:e} vanishes"
            )));
        }
        let theta0 = (-sin_coeff).atan2(-cos_coeff);
        let model = Self {
            c0,
            a0,
            theta0,
            q6,
            z0,
            z1,
            measurements: *ms,
            gain,
        };
        debug_assert!(model.c0 - 2.0 * model.a0 >= -1e-10);
        Ok(model)
    }

    pub fn sigma_angle(&self) -> f64 {
        self.measurements.sigma_angle
    }

    /// `P*(φ₁)`, the optimal stacked positions for a fixed heading of pose 1.
    pub fn positions_star(&self, phi1: f64) -> Vector4<f64> {
        self.gain * (self.z0 + block_rotation(phi1) * self.z1)
    }

    /// `F_p*(φ₁) = c₀ − 2a₀cos(φ₁ − θ₀)`.
    #[inline]
    pub fn position_term(&self, phi1: f64) -> f64 {
        self.c0 - 2.0 * self.a0 * (phi1 - self.theta0).cos()
    }

    /// `F_p*(φ₁)` through the projector, `|z₀ + R̄(φ₁)z₁|²_Q`.
    pub fn position_term_projected(&self, phi1: f64) -> f64 {
        let r = self.z0 + block_rotation(phi1) * self.z1;
        r.dot(&(self.q6 * r))
    }

    /// Reduced geodesic cost `f(Φ)`.
    #[inline]
    pub fn reduced_geodesic(&self, phi: AnglePair) -> f64 {
        self.position_term(phi.phi1) + f_phi(&self.measurements, phi)
    }

    /// Reduced chordal cost `g(Φ)`.
    #[inline]
    pub fn reduced_chordal(&self, phi: AnglePair) -> f64 {
        self.position_term(phi.phi1) + g_phi(&self.measurements, phi)
    }
}

/// Convenience alias for [`ReducedModel::new`].
pub fn build_reduced_model(ms: &MeasurementSet) -> Result<ReducedModel> {
    ReducedModel::new(ms)
}
