//! Unconstrained 2D quasi-Newton minimizer with run diagnostics, and the
//! analytic gradients it consumes for the reduced costs.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::angle::AnglePair;
use crate::chordal::jacobian_g;
use crate::geodesic::{f_k_gradient, wrap_into_square, xi, Region};
use crate::reduction::ReducedModel;

/// Sufficient-decrease constant of the backtracking line search.
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
    pub initial_hessian_scale: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            step_tol: 1e-10,
            max_iter: 500,
            initial_hessian_scale: 1.0,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.grad_tol > 0.0
            && self.step_tol > 0.0
            && self.max_iter > 0
            && self.initial_hessian_scale > 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config(format!(
                "minimizer options must all be positive: {self:?}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    GradTol,
    StepTol,
    MaxIter,
    LineSearchFail,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub phi: AnglePair,
    pub cost: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Condition number of the final curvature approximation.
    pub hessian_condition_estimate: Option<f64>,
}

fn condition_number(m: &Matrix2<f64>) -> Option<f64> {
    let (lo, hi) = crate::chordal::symmetric_eigenvalues(m);
    (lo > 0.0 && lo.is_finite() && hi.is_finite()).then(|| hi / lo)
}

/// BFGS with a backtracking Armijo line search.
///
/// The cost sequence of accepted iterates is non-increasing. A non-finite
/// cost or gradient ends the run with [`Termination::LineSearchFail`] at the
/// last finite iterate.
pub fn minimize<F>(cost_and_grad: F, phi0: AnglePair, opts: &MinimizeOptions) -> MinimizeResult
where
    F: Fn(AnglePair) -> (f64, Vector2<f64>),
{
    minimize_observed(cost_and_grad, phi0, opts, |_, _, _| {})
}

/// As [`minimize`], calling `observe(iteration, phi, cost)` for the start
/// point and for every accepted iterate.
pub fn minimize_observed<F, O>(
    cost_and_grad: F,
    phi0: AnglePair,
    opts: &MinimizeOptions,
    mut observe: O,
) -> MinimizeResult
where
    F: Fn(AnglePair) -> (f64, Vector2<f64>),
    O: FnMut(usize, AnglePair, f64),
{
    let finite = |c: f64, g: &Vector2<f64>| c.is_finite() && g.iter().all(|v| v.is_finite());

    let mut x = phi0.to_vector();
    let (mut fx, mut g) = cost_and_grad(phi0);
    let scale = opts.initial_hessian_scale;
    let mut inv_h = Matrix2::identity() * scale;
    let mut first_update = true;

    let result = |x: Vector2<f64>, fx: f64, g: Vector2<f64>, it: usize, t: Termination, h: &Matrix2<f64>| {
        MinimizeResult {
            phi: AnglePair::from_vector(&x),
            cost: fx,
            grad_norm: g.norm(),
            iterations: it,
            termination: t,
            hessian_condition_estimate: h.try_inverse().as_ref().and_then(condition_number),
        }
    };

    if !finite(fx, &g) {
        return result(x, fx, g, 0, Termination::LineSearchFail, &inv_h);
    }
    observe(0, phi0, fx);
    let mut f_prev = fx + g.norm() / 2.0;

    for it in 0..opts.max_iter {
        if g.norm() <= opts.grad_tol {
            return result(x, fx, g, it, Termination::GradTol, &inv_h);
        }
        let mut dir = -(inv_h * g);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            inv_h = Matrix2::identity() * scale;
            first_update = true;
            dir = -g * scale;
            slope = g.dot(&dir);
        }

        // interpolated initial step; the first iteration assumes a previous
        // decrease of |g|/2, which caps the opening step near unit length
        let mut t = (2.02 * (f_prev - fx) / -slope).min(1.0);
        if !(t > 0.0) {
            t = 1.0;
        }
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = x + dir * t;
            let (ft, gt) = cost_and_grad(AnglePair::from_vector(&trial));
            if finite(ft, &gt) && ft <= fx + ARMIJO_C1 * t * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            return result(x, fx, g, it, Termination::LineSearchFail, &inv_h);
        };

        f_prev = fx;
        let s = x_new - x;
        let y = g_new - g;
        x = x_new;
        fx = f_new;
        g = g_new;
        observe(it + 1, AnglePair::from_vector(&x), fx);

        if s.norm() < opts.step_tol {
            let t = if g.norm() <= opts.grad_tol {
                Termination::GradTol
            } else {
                Termination::StepTol
            };
            return result(x, fx, g, it + 1, t, &inv_h);
        }

        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if first_update {
                inv_h = Matrix2::identity() * (sy / y.dot(&y));
                first_update = false;
            }
            let rho = 1.0 / sy;
            let v = Matrix2::identity() - s * y.transpose() * rho;
            inv_h = v * inv_h * v.transpose() + s * s.transpose() * rho;
        }
    }
    let t = if g.norm() <= opts.grad_tol {
        Termination::GradTol
    } else {
        Termination::MaxIter
    };
    result(x, fx, g, opts.max_iter, t, &inv_h)
}

/// Gradient of the reduced geodesic cost at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicGradient {
    pub grad: Vector2<f64>,
    pub region: Region,
    /// The point sits on a nonsmooth boundary `ξ = ±π`; `grad` is then the
    /// gradient of the piece the point is assigned to.
    pub on_boundary: bool,
}

/// Gradient of `f` through the active piece `f_k`, after mapping `phi` onto
/// the fundamental square.
pub fn gradient_of_f(model: &ReducedModel, phi: AnglePair) -> GeodesicGradient {
    let ms = &model.measurements;
    let p = wrap_into_square(ms, phi);
    let x = xi(ms, p);
    let region = Region::from_xi(x);
    GeodesicGradient {
        grad: f_k_gradient(model, p, region),
        region,
        on_boundary: (x.abs() - std::f64::consts::PI).abs() <= 1e-12,
    }
}

/// Gradient of `g`; identical to [`jacobian_g`].
pub fn gradient_of_g(model: &ReducedModel, phi: AnglePair) -> Vector2<f64> {
    jacobian_g(model, phi)
}

/// Cost-and-gradient callable for the reduced geodesic cost.
pub fn geodesic_objective(model: &ReducedModel) -> impl Fn(AnglePair) -> (f64, Vector2<f64>) + '_ {
    move |phi| (model.reduced_geodesic(phi), gradient_of_f(model, phi).grad)
}

/// Cost-and-gradient callable for the reduced chordal cost.
pub fn chordal_objective(model: &ReducedModel) -> impl Fn(AnglePair) -> (f64, Vector2<f64>) + '_ {
    move |phi| (model.reduced_chordal(phi), jacobian_g(model, phi))
}
