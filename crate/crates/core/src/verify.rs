//! Named self-checks of one problem: the reduction identities, the geodesic
//! minima structure and the chordal critical-point structure.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Vector4};
use serde::{Deserialize, Serialize};

use crate::angle::{geodesic_err, AnglePair};
use crate::chordal::{
    b0, critical_points_eps_pi, critical_points_numeric, critical_points_perfect, hessian_g, jacobian_g,
    CriticalKind, CriticalPoint,
};
use crate::geodesic::{
    f_1k, f_1k_prime, f_1k_second, f_k, geodesic_minima_catalog, in_square, phi2_star_k, region_of,
    xi, Region,
};
use crate::optimizer::gradient_of_f;
use crate::problem::BenchmarkProblem;
use crate::reduction::{full_chordal_cost, full_geodesic_cost, position_design, ReducedModel};
use crate::sweep::Provenance;

/// Mismatch below this counts as perfect measurements.
const PERFECT_TOL: f64 = 1e-9;
const SAMPLES: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    fn skip(name: &str, why: &str) -> Self {
        Self {
            name: name.to_string(),
            status: Status::Skip,
            detail: why.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub label: String,
    pub checks: Vec<Check>,
    pub provenance: Option<Provenance>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Low-discrepancy points on the square around `centre`.
pub fn sample_square(centre: AnglePair, n: usize) -> Vec<AnglePair> {
    // additive recurrence with the plastic-number constants
    let (a1, a2) = (0.754_877_666_246_692_7, 0.569_840_290_998_053_3);
    (0..n)
        .map(|i| {
            let u = (0.5 + a1 * i as f64).fract();
            let v = (0.5 + a2 * i as f64).fract();
            AnglePair::new(centre.phi1 - PI + 2.0 * PI * u, centre.phi2 - PI + 2.0 * PI * v)
        })
        .collect()
}

fn check_projector(model: &ReducedModel) -> Check {
    let q = DMatrix::from_iterator(6, 6, model.q6.iter().copied());
    let norm = (q * position_design()).amax();
    Check::new("projector_annihilates_design", norm <= 1e-10, format!("max |Q A| = {norm:e}"))
}

fn check_heading(problem: &BenchmarkProblem, model: &ReducedModel) -> Check {
    let ms = &model.measurements;
    let target = if ms.mismatch().abs() <= PERFECT_TOL { ms.phi01 } else { problem.ground_truth.phi1 };
    let err = geodesic_err(model.theta0, target);
    Check::new(
        "heading_identity",
        err < 1e-9,
        format!("theta0 = {}, expected {target}, |diff| = {err:e}", model.theta0),
    )
}

fn check_position_term(model: &ReducedModel) -> Check {
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let phi1 = model.measurements.phi01 - PI + 2.0 * PI * i as f64 / 999.0;
        worst = worst.max((model.position_term(phi1) - model.position_term_projected(phi1)).abs());
    }
    Check::new("position_term_closed_form", worst < 1e-9, format!("max diff = {worst:e}"))
}

/// `f = F(P*, Φ)`, `g = G(P*, Φ)` and `P*` beats nearby position probes.
fn check_reduction(model: &ReducedModel) -> Check {
    let ms = &model.measurements;
    let mut worst = 0.0f64;
    let mut beaten = 0usize;
    for (i, phi) in sample_square(ms.center(), SAMPLES).into_iter().enumerate() {
        let p = model.positions_star(phi.phi1);
        worst = worst
            .max((model.reduced_geodesic(phi) - full_geodesic_cost(ms, &p, phi)).abs())
            .max((model.reduced_chordal(phi) - full_chordal_cost(ms, &p, phi)).abs());
        let base = full_geodesic_cost(ms, &p, phi);
        let k = i as f64;
        let probe = p + Vector4::new((k * 0.37).sin(), (k * 0.71).cos(), (k * 1.13).sin(), (k * 0.29).cos()) * 0.05;
        if full_geodesic_cost(ms, &probe, phi) < base - 1e-12 {
            beaten += 1;
        }
    }
    Check::new(
        "reduction_consistency",
        worst < 1e-9 && beaten == 0,
        format!("max |f - F(P*)|, |g - G(P*)| = {worst:e}; probes beating P* = {beaten}"),
    )
}

fn check_nesting(model: &ReducedModel) -> Check {
    let ms = &model.measurements;
    let mut violations = 0usize;
    for phi in sample_square(ms.center(), SAMPLES) {
        for r in Region::ALL {
            if f_1k(model, phi.phi1, r) > f_k(model, phi, r) + 1e-9 {
                violations += 1;
            }
        }
        if let Ok(r) = region_of(ms, phi) {
            if f_k(model, phi, r) < model.reduced_geodesic(phi) - 1e-9 {
                violations += 1;
            }
        }
    }
    Check::new("nesting", violations == 0, format!("violations = {violations}"))
}

fn check_second_derivative(model: &ReducedModel) -> Check {
    let mut worst = f64::INFINITY;
    for i in 1..1000 {
        let phi1 = model.theta0 - PI / 2.0 + PI * i as f64 / 1000.0;
        for r in Region::ALL {
            worst = worst.min(f_1k_second(model, phi1, r));
        }
    }
    Check::new(
        "second_derivative_positive",
        worst > 0.0,
        format!("min f'' on the half-period around theta0 = {worst}"),
    )
}

fn check_gap(model: &ReducedModel, perfect: bool) -> Check {
    const NAME: &str = "gap_identity";
    if !perfect {
        return Check::skip(NAME, "needs consistent orientation measurements");
    }
    let ms = &model.measurements;
    let s2 = ms.sigma_angle * ms.sigma_angle;
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let phi1 = ms.phi01 - PI + 2.0 * PI * i as f64 / 999.0;
        let gap = f_1k(model, phi1, Region::Zero) - f_1k(model, phi1, Region::Plus);
        worst = worst.max((gap + 2.0 * PI / s2 * (PI + phi1 - ms.phi01)).abs());
    }
    Check::new(NAME, worst < 1e-9, format!("max deviation = {worst:e}"))
}

fn check_geodesic_minima(model: &ReducedModel, perfect: bool) -> Check {
    const NAME: &str = "geodesic_minima";
    let ms = &model.measurements;
    let cat = geodesic_minima_catalog(model);
    let mut problems = Vec::new();
    for m in &cat {
        let slope = f_1k_prime(model, m.phi.phi1, m.region);
        if slope.abs() >= 1e-8 || m.second_derivative_1d <= 0.0 {
            problems.push(format!("not a strict 1D minimum at {:?}: f' = {slope:e}", m.phi));
        }
        for d in [-1e-4, 1e-4] {
            let phi1 = m.phi.phi1 + d;
            let probe = AnglePair::new(phi1, phi2_star_k(ms, phi1, m.region));
            if in_square(ms, probe) && f_k(model, probe, m.region) < m.cost - 1e-12 {
                problems.push(format!("neighbour beats {:?}", m.phi));
            }
        }
    }
    if perfect {
        match cat.iter().find(|m| m.is_global) {
            Some(g) if g.phi.wrapped_distance(&ms.center()) < 1e-8 && g.cost < 1e-9 => {}
            other => problems.push(format!("global minimum not at the measurements: {other:?}")),
        }
        if cat.iter().filter(|m| m.is_global).count() != 1 {
            problems.push("global minimum not unique".into());
        }
        for r in [Region::Plus, Region::Minus] {
            if !cat.iter().any(|m| m.region == r && !m.is_global) {
                problems.push(format!("no local minimum in region k = {}", r.k()));
            }
        }
        let outer = cat
            .iter()
            .filter(|m| m.region != Region::Zero)
            .map(|m| m.cost)
            .fold(f64::INFINITY, f64::min);
        if !(outer > 1e-9) {
            problems.push(format!("outer-region minimum cost {outer} not above the global cost"));
        }
    }
    let summary = cat
        .iter()
        .map(|m| format!("k={} cost={:.6}{}", m.region.k(), m.cost, if m.is_global { " (global)" } else { "" }))
        .collect::<Vec<_>>()
        .join(", ");
    Check::new(
        NAME,
        problems.is_empty(),
        if problems.is_empty() { summary } else { problems.join("; ") },
    )
}

fn matches_analytic(numeric: &[CriticalPoint], analytic: &[CriticalPoint]) -> f64 {
    analytic
        .iter()
        .map(|a| {
            numeric
                .iter()
                .map(|n| (n.phi - a.phi).to_vector().amax())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn check_chordal_perfect(model: &ReducedModel, perfect: bool) -> Check {
    const NAME: &str = "chordal_unique_minimum";
    if !perfect {
        return Check::skip(NAME, "needs consistent orientation measurements");
    }
    let analytic = match critical_points_perfect(model) {
        Ok(p) => p,
        Err(e) => return Check::new(NAME, false, e.to_string()),
    };
    let ms = &model.measurements;
    let count = |k| analytic.iter().filter(|p| p.kind == k).count();
    let mut problems = Vec::new();
    if analytic.len() != 11 || count(CriticalKind::Min) != 1 || count(CriticalKind::Max) != 2 {
        problems.push(format!(
            "{} points, {} MIN, {} MAX",
            analytic.len(),
            count(CriticalKind::Min),
            count(CriticalKind::Max)
        ));
    }
    let boundary_ok = analytic
        .iter()
        .filter(|p| p.on_boundary)
        .all(|p| matches!(p.kind, CriticalKind::Saddle | CriticalKind::Indefinite));
    if analytic.iter().filter(|p| p.on_boundary).count() != 8 || !boundary_ok {
        problems.push("boundary points are not 8 non-extremal points".into());
    }
    let expected = nalgebra::Matrix2::new(model.a0 * ms.sigma_angle.powi(2) + 2.0, -1.0, -1.0, 2.0)
        * (2.0 / ms.sigma_angle.powi(2));
    let h = hessian_g(model, ms.center());
    if (h - expected).amax() > 1e-8 {
        problems.push(format!("Hessian at the minimum {h:?}"));
    }
    let numeric = critical_points_numeric(model);
    let dist = matches_analytic(&numeric, &analytic);
    if numeric.len() != analytic.len() || dist > 1e-8 {
        problems.push(format!("numeric enumeration: {} points, worst distance {dist:e}", numeric.len()));
    }
    Check::new(
        NAME,
        problems.is_empty(),
        if problems.is_empty() {
            format!("11 critical points, b0 = {}", b0(model))
        } else {
            problems.join("; ")
        },
    )
}

fn check_chordal_eps_pi(model: &ReducedModel) -> Check {
    const NAME: &str = "chordal_double_minimum";
    let ms = &model.measurements;
    if geodesic_err(ms.mismatch(), PI) > PERFECT_TOL {
        return Check::skip(NAME, "needs orientation mismatch pi");
    }
    let numeric_mins: Vec<_> = crate::chordal::chordal_minima(model);
    let mut problems = Vec::new();
    let mut detail = format!("numeric MIN count {}", numeric_mins.len());
    if numeric_mins.len() != 2 {
        problems.push(detail.clone());
    }
    if geodesic_err(model.theta0, ms.phi01) <= PERFECT_TOL {
        match critical_points_eps_pi(model) {
            Ok(points) => {
                let mins: Vec<_> = points.iter().filter(|p| p.kind == CriticalKind::Min).collect();
                if mins.len() != 2 || (mins[0].cost - mins[1].cost).abs() >= 1e-9 {
                    problems.push(format!("closed form gives {} MIN", mins.len()));
                }
                for p in &points {
                    let eta = geodesic_err(ms.phi02, p.phi.phi2);
                    let det = p.hessian.determinant();
                    if eta < 1e-9 && det >= 0.0 {
                        problems.push(format!("eta = 0 point has det H = {det}"));
                    }
                    if (eta - PI).abs() < 1e-9 && p.kind == CriticalKind::Min {
                        problems.push("eta = pi point is a minimum".into());
                    }
                }
                if numeric_mins.len() == 2 && mins.len() == 2 {
                    let dist = matches_analytic(&numeric_mins, &mins.into_iter().cloned().collect::<Vec<_>>());
                    if dist > 1e-8 {
                        problems.push(format!("numeric and closed-form minima differ by {dist:e}"));
                    }
                }
                detail.push_str(", closed form agrees");
            }
            Err(e) => problems.push(e.to_string()),
        }
    } else {
        detail.push_str(", closed form not applicable (theta0 != phi01)");
    }
    Check::new(NAME, problems.is_empty(), if problems.is_empty() { detail } else { problems.join("; ") })
}

/// Central differences against the analytic `J`, `H` of `g` and the
/// active-piece gradient of `f`.
fn check_derivatives(model: &ReducedModel) -> Check {
    let ms = &model.measurements;
    let h = 1e-6;
    let mut worst_j = 0.0f64;
    let mut worst_h = 0.0f64;
    let mut worst_f = 0.0f64;
    for (i, phi) in sample_square(ms.center(), SAMPLES).into_iter().enumerate() {
        let e = [AnglePair::new(h, 0.0), AnglePair::new(0.0, h)];
        let j = jacobian_g(model, phi);
        for (c, d) in e.iter().enumerate() {
            let fd = (model.reduced_chordal(phi + *d) - model.reduced_chordal(phi - *d)) / (2.0 * h);
            worst_j = worst_j.max((fd - j[c]).abs() / j.norm().max(1.0));
        }
        if i % 20 == 0 {
            let hess = hessian_g(model, phi);
            let hh = 1e-4;
            for c in 0..2 {
                let d = if c == 0 { AnglePair::new(hh, 0.0) } else { AnglePair::new(0.0, hh) };
                let col = (jacobian_g(model, phi + d) - jacobian_g(model, phi - d)) / (2.0 * hh);
                worst_h = worst_h.max((col - hess.column(c)).amax() / hess.amax().max(1.0));
            }
        }
        if (xi(ms, phi).abs() - PI).abs() > 1e-3 {
            let g = gradient_of_f(model, phi).grad;
            for (c, d) in e.iter().enumerate() {
                let fd = (model.reduced_geodesic(phi + *d) - model.reduced_geodesic(phi - *d)) / (2.0 * h);
                worst_f = worst_f.max((fd - g[c]).abs() / g.norm().max(1.0));
            }
        }
    }
    Check::new(
        "derivative_oracles",
        worst_j < 1e-5 && worst_h < 1e-4 && worst_f < 1e-5,
        format!("rel. err J {worst_j:e}, H {worst_h:e}, grad f {worst_f:e}"),
    )
}

/// Runs every applicable check on `problem`.
pub fn verify_problem(problem: &BenchmarkProblem) -> VerifyReport {
    let mut checks = Vec::new();
    let valid = problem
        .ground_truth
        .validate()
        .and_then(|_| problem.measurements.validate());
    checks.push(Check::new(
        "problem_valid",
        valid.is_ok(),
        valid.as_ref().map_or_else(|e| e.to_string(), |_| "ok".into()),
    ));
    let model = match valid.and_then(|_| ReducedModel::new(&problem.measurements)) {
        Ok(m) => m,
        Err(e) => {
            checks.push(Check::new("reduced_model", false, e.to_string()));
            return VerifyReport {
                label: problem.label.clone(),
                checks,
                provenance: None,
            };
        }
    };
    let perfect = model.measurements.mismatch().abs() <= PERFECT_TOL;
    checks.extend([
        check_projector(&model),
        check_heading(problem, &model),
        check_position_term(&model),
        check_reduction(&model),
        check_nesting(&model),
        check_second_derivative(&model),
        check_gap(&model, perfect),
        check_geodesic_minima(&model, perfect),
        check_chordal_perfect(&model, perfect),
        check_chordal_eps_pi(&model),
        check_derivatives(&model),
    ]);
    VerifyReport {
        label: problem.label.clone(),
        checks,
        provenance: Some(Provenance::for_problem(problem)),
    }
}
