//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{Matrix2, Vector4};
use rand::Rng;
use tripose::angle::{geodesic_err, wrap, AnglePair};
use tripose::chordal::{
    b0, chordal_minima, critical_points_eps_pi, critical_points_numeric, critical_points_perfect, hessian_g,
    jacobian_g, CriticalKind, CriticalPoint,
};
use tripose::geodesic::{f_1k, f_1k_prime, geodesic_minima_catalog, Region};
use tripose::optimizer::Termination;
use tripose::problem::default_benchmark;
use tripose::reduction::{full_chordal_cost, full_geodesic_cost};
use tripose::sweep::{run_sweep, BasinLabel, CostKind, SweepConfig, SweepResult};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(problems: Vec<String>, ok_detail: String) -> Outcome {
    Outcome {
        pass: problems.is_empty(),
        detail: if problems.is_empty() { ok_detail } else { problems.join("; ") },
    }
}

fn within(elapsed: Duration, limit_s: f64, problems: &mut Vec<String>) {
    if elapsed.as_secs_f64() >= limit_s {
        problems.push(format!("runtime {:.2?} exceeds {limit_s} s", elapsed));
    }
}

fn heading_identity() -> Outcome {
    let t = Instant::now();
    let mut rng = common::rng(101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let sigma = rng.random_range(0.3..3.0);
        let m = common::random_perfect(&mut rng, sigma);
        worst = worst.max(wrap(m.theta0 - m.measurements.phi01).abs());
    }
    let mut problems = Vec::new();
    if worst >= 1e-9 {
        problems.push(format!("max |wrap(theta0 - phi01)| = {worst:e}"));
    }
    within(t.elapsed(), 1.0, &mut problems);
    outcome(problems, format!("50 problems, max |wrap(theta0 - phi01)| = {worst:.1e}, {:.2?}", t.elapsed()))
}

fn reduction_consistency() -> Outcome {
    let t = Instant::now();
    let mut rng = common::rng(202);
    let mut worst = 0.0f64;
    let mut beaten = 0usize;
    for i in 0..10 {
        let eps = if i < 5 { 0.0 } else { rng.random_range(-PI..PI) };
        let sigma = rng.random_range(0.5..2.0);
        let problem = common::random_problem(&mut rng, sigma, eps);
        let ms = problem.measurements;
        let model = tripose::ReducedModel::new(&ms).unwrap();
        for _ in 0..100 {
            let phi = AnglePair::new(
                ms.phi01 + rng.random_range(-PI..PI),
                ms.phi02 + rng.random_range(-PI..PI),
            );
            let p = model.positions_star(phi.phi1);
            worst = worst
                .max((model.reduced_geodesic(phi) - full_geodesic_cost(&ms, &p, phi)).abs())
                .max((model.reduced_chordal(phi) - full_chordal_cost(&ms, &p, phi)).abs());
            let best = full_geodesic_cost(&ms, &p, phi);
            for _ in 0..10 {
                let scale = 10f64.powf(rng.random_range(-4.0..1.0));
                let d = Vector4::from_fn(|_, _| rng.random_range(-1.0..1.0)) * scale;
                if full_geodesic_cost(&ms, &(p + d), phi) < best {
                    beaten += 1;
                }
            }
        }
    }
    let mut problems = Vec::new();
    if worst >= 1e-9 {
        problems.push(format!("max reduction error {worst:e}"));
    }
    if beaten > 0 {
        problems.push(format!("{beaten} position probes beat P*"));
    }
    within(t.elapsed(), 5.0, &mut problems);
    outcome(
        problems,
        format!("1000 points, max |f - F(P*)|, |g - G(P*)| = {worst:.1e}, 10000 probes never beat P*, {:.2?}", t.elapsed()),
    )
}

fn gap_identity() -> Outcome {
    let t = Instant::now();
    let mut rng = common::rng(303);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let sigma = rng.random_range(0.3..3.0);
        let m = common::random_perfect(&mut rng, sigma);
        let ms = m.measurements;
        for i in 0..1000 {
            let phi1 = ms.phi01 - PI + 2.0 * PI * i as f64 / 999.0;
            let gap = f_1k(&m, phi1, Region::Zero) - f_1k(&m, phi1, Region::Plus);
            let expected = -(2.0 * PI / ms.sigma_angle.powi(2)) * (PI + phi1 - ms.phi01);
            worst = worst.max((gap - expected).abs());
        }
    }
    let mut problems = Vec::new();
    if worst >= 1e-9 {
        problems.push(format!("max deviation {worst:e}"));
    }
    within(t.elapsed(), 1.0, &mut problems);
    outcome(problems, format!("10 problems x 1000 points, max deviation {worst:.1e}, {:.2?}", t.elapsed()))
}

fn geodesic_local_minima() -> Outcome {
    let t = Instant::now();
    let mut rng = common::rng(404);
    let mut problems = Vec::new();
    let mut n_local = 0;
    for p in 0..10 {
        let sigma = rng.random_range(0.5..2.0);
        let m = common::random_perfect(&mut rng, sigma);
        let ms = m.measurements;
        let cat = geodesic_minima_catalog(&m);
        let globals: Vec<_> = cat.iter().filter(|e| e.is_global).collect();
        if globals.len() != 1 || globals[0].phi.wrapped_distance(&ms.center()) > 1e-8 || globals[0].cost >= 1e-9 {
            problems.push(format!("problem {p}: global minima {globals:?}"));
        }
        let locals: Vec<_> = cat.iter().filter(|e| !e.is_global).collect();
        n_local += locals.len();
        for r in [Region::Plus, Region::Minus] {
            if !locals.iter().any(|e| e.region == r) {
                problems.push(format!("problem {p}: no local minimum with k = {}", r.k()));
            }
        }
        for e in &locals {
            let slope = f_1k_prime(&m, e.phi.phi1, e.region);
            if slope.abs() >= 1e-8 || e.second_derivative_1d <= 0.0 {
                problems.push(format!("problem {p}: f' = {slope:e}, f'' = {}", e.second_derivative_1d));
            }
            for (d1, d2) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let probe = e.phi + AnglePair::new(1e-4 * d1, 1e-4 * d2);
                if m.reduced_geodesic(probe) < e.cost {
                    problems.push(format!("problem {p}: neighbour of {:?} has lower cost", e.phi));
                }
            }
        }
    }
    within(t.elapsed(), 5.0, &mut problems);
    outcome(
        problems,
        format!("10 problems, unique global at the measurements, {n_local} local minima covering both outer regions, {:.2?}", t.elapsed()),
    )
}

fn minimum_disappears() -> Outcome {
    let t = Instant::now();
    let bench = default_benchmark(3).unwrap();
    let m = tripose::ReducedModel::new(&bench.measurements).unwrap();
    let cat = geodesic_minima_catalog(&m);
    let plus: Vec<_> = cat.iter().filter(|e| e.region == Region::Plus).collect();
    let minus_local = cat.iter().any(|e| e.region == Region::Minus && !e.is_global);
    let mut problems = Vec::new();
    if !plus.is_empty() {
        let e = plus[0];
        let xi = tripose::geodesic::xi(&bench.measurements, e.phi);
        problems.push(format!(
            "k = 1 catalog holds {} entr{} (phi = ({:.4}, {:.4}), xi = {:.4}, cost {:.4}); a0 = {:.4}",
            plus.len(),
            if plus.len() == 1 { "y" } else { "ies" },
            e.phi.phi1,
            e.phi.phi2,
            xi,
            e.cost,
            m.a0
        ));
    }
    if !minus_local {
        problems.push("k = -1 local minimum missing".into());
    }
    within(t.elapsed(), 1.0, &mut problems);
    outcome(problems, format!("k = 1 empty, k = -1 local minimum present, {:.2?}", t.elapsed()))
}

fn nearest(points: &[CriticalPoint], phi: AnglePair) -> f64 {
    points
        .iter()
        .map(|p| (p.phi - phi).to_vector().amax())
        .fold(f64::INFINITY, f64::min)
}

fn chordal_unique_minimum() -> Outcome {
    let t = Instant::now();
    let mut rng = common::rng(606);
    let mut problems = Vec::new();
    for p in 0..10 {
        let m = common::random_perfect(&mut rng, 1.0);
        let ms = m.measurements;
        let pts = match critical_points_perfect(&m) {
            Ok(pts) => pts,
            Err(e) => {
                problems.push(format!("problem {p}: {e}"));
                continue;
            }
        };
        let of = |k| pts.iter().filter(|c| c.kind == k).collect::<Vec<_>>();
        let (mins, maxs) = (of(CriticalKind::Min), of(CriticalKind::Max));
        let boundary: Vec<_> = pts.iter().filter(|c| c.on_boundary).collect();
        if pts.len() != 11 || mins.len() != 1 || maxs.len() != 2 || boundary.len() != 8 {
            problems.push(format!(
                "problem {p}: {} points, {} MIN, {} MAX, {} boundary",
                pts.len(),
                mins.len(),
                maxs.len(),
                boundary.len()
            ));
            continue;
        }
        if boundary.iter().any(|c| matches!(c.kind, CriticalKind::Min | CriticalKind::Max)) {
            problems.push(format!("problem {p}: extremal boundary point"));
        }
        let expected = Matrix2::new(m.a0 + 2.0, -1.0, -1.0, 2.0) * 2.0;
        if mins[0].phi.wrapped_distance(&ms.center()) > 1e-8 || (mins[0].hessian - expected).amax() > 1e-8 {
            problems.push(format!("problem {p}: minimum {:?}", mins[0]));
        }
        let eta = (-1.0 / (2.0 * b0(&m))).acos();
        for mx in &maxs {
            let d = geodesic_err(ms.phi02 - mx.phi.phi2, eta).min(geodesic_err(ms.phi02 - mx.phi.phi2, -eta));
            if d > 1e-8 {
                problems.push(format!("problem {p}: maximum off the predicted eta by {d:e}"));
            }
        }
        let numeric = critical_points_numeric(&m);
        let worst = pts.iter().map(|a| nearest(&numeric, a.phi)).fold(0.0, f64::max);
        if numeric.len() != 11 || worst > 1e-8 {
            problems.push(format!("problem {p}: numeric gives {} points, worst match {worst:e}", numeric.len()));
        }
        if numeric.iter().filter(|c| c.kind == CriticalKind::Min).count() != 1 {
            problems.push(format!("problem {p}: numeric MIN count differs from 1"));
        }
    }
    within(t.elapsed(), 10.0, &mut problems);
    outcome(problems, format!("10 problems, 11 critical points each, numeric cross-check within 1e-8, {:.2?}", t.elapsed()))
}

fn chordal_double_minimum() -> Outcome {
    let t = Instant::now();
    let mut rng = common::rng(707);
    let mut problems = Vec::new();
    for p in 0..5 {
        let (_, m) = common::random_anchored(&mut rng, 1.0, PI);
        let ms = m.measurements;
        let pts = match critical_points_eps_pi(&m) {
            Ok(pts) => pts,
            Err(e) => {
                problems.push(format!("problem {p}: {e}"));
                continue;
            }
        };
        let eta_of = |c: &CriticalPoint| wrap(ms.phi02 - c.phi.phi2);
        let mins: Vec<_> = pts.iter().filter(|c| c.kind == CriticalKind::Min).collect();
        let eta = (1.0 / (2.0 * b0(&m))).acos();
        if mins.len() != 2 || (mins[0].cost - mins[1].cost).abs() >= 1e-9 {
            problems.push(format!("problem {p}: {} MIN", mins.len()));
        } else {
            for c in &mins {
                let d = geodesic_err(eta_of(c).abs(), eta);
                if d > 1e-9 {
                    problems.push(format!("problem {p}: MIN off the predicted eta by {d:e}"));
                }
            }
            if mins[0].phi.wrapped_distance(&mins[1].phi) <= 1e-3 {
                problems.push(format!("problem {p}: minima coincide"));
            }
        }
        for c in &pts {
            let e = eta_of(c).abs();
            if e < 1e-9 && c.hessian.determinant() >= 0.0 {
                problems.push(format!("problem {p}: eta = 0 point has det H = {}", c.hessian.determinant()));
            }
            if (e - PI).abs() < 1e-9 && c.kind == CriticalKind::Min {
                problems.push(format!("problem {p}: eta = pi point is a minimum"));
            }
        }
        if chordal_minima(&m).len() != 2 {
            problems.push(format!("problem {p}: numeric enumeration finds {} minima", chordal_minima(&m).len()));
        }
    }
    within(t.elapsed(), 5.0, &mut problems);
    outcome(problems, format!("5 problems, two equal-cost minima at eta = +-arccos(1/(2 b0)), {:.2?}", t.elapsed()))
}

fn derivative_oracles() -> Outcome {
    let t = Instant::now();
    let mut rng = common::rng(808);
    let mut worst_j = 0.0f64;
    let mut worst_h = 0.0f64;
    let mut n_j = 0;
    let mut n_h = 0;
    for i in 0..10 {
        let eps = if i % 2 == 0 { 0.0 } else { rng.random_range(-PI..PI) };
        let sigma = rng.random_range(0.5..2.0);
        let problem = common::random_problem(&mut rng, sigma, eps);
        let m = tripose::ReducedModel::new(&problem.measurements).unwrap();
        let ms = m.measurements;
        for k in 0..100 {
            let phi = AnglePair::new(
                ms.phi01 + rng.random_range(-PI..PI),
                ms.phi02 + rng.random_range(-PI..PI),
            );
            let h = 1e-6;
            let fd = nalgebra::Vector2::new(
                (m.reduced_chordal(phi + AnglePair::new(h, 0.0)) - m.reduced_chordal(phi - AnglePair::new(h, 0.0))) / (2.0 * h),
                (m.reduced_chordal(phi + AnglePair::new(0.0, h)) - m.reduced_chordal(phi - AnglePair::new(0.0, h))) / (2.0 * h),
            );
            let j = jacobian_g(&m, phi);
            worst_j = worst_j.max((fd - j).norm() / j.norm());
            n_j += 1;
            if k < 2 {
                let hh = 1e-5;
                let c0 = (jacobian_g(&m, phi + AnglePair::new(hh, 0.0)) - jacobian_g(&m, phi - AnglePair::new(hh, 0.0))) / (2.0 * hh);
                let c1 = (jacobian_g(&m, phi + AnglePair::new(0.0, hh)) - jacobian_g(&m, phi - AnglePair::new(0.0, hh))) / (2.0 * hh);
                let fd_h = Matrix2::from_columns(&[c0, c1]);
                let hess = hessian_g(&m, phi);
                worst_h = worst_h.max((fd_h - hess).norm() / hess.norm());
                n_h += 1;
            }
        }
    }
    let mut problems = Vec::new();
    if worst_j >= 1e-5 {
        problems.push(format!("Jacobian rel. err {worst_j:e}"));
    }
    if worst_h >= 1e-4 {
        problems.push(format!("Hessian rel. err {worst_h:e}"));
    }
    within(t.elapsed(), 2.0, &mut problems);
    outcome(
        problems,
        format!("{n_j} Jacobian checks (max rel. err {worst_j:.1e}), {n_h} Hessian checks (max rel. err {worst_h:.1e}), {:.2?}", t.elapsed()),
    )
}

struct Sweeps {
    geodesic: Vec<(SweepResult, Duration)>,
    chordal: Vec<(SweepResult, Duration)>,
}

fn run_sweeps() -> Sweeps {
    let run = |kind| {
        (1..=3)
            .map(|id| {
                let t = Instant::now();
                let r = run_sweep(&default_benchmark(id).unwrap(), &SweepConfig::new(kind)).unwrap();
                (r, t.elapsed())
            })
            .collect()
    };
    Sweeps {
        geodesic: run(CostKind::Geodesic),
        chordal: run(CostKind::Chordal),
    }
}

fn basin_table(s: &Sweeps) -> Outcome {
    let bands = [(0.05, 1.0), (0.1, 1.5), (10.0, 30.0)];
    let mut problems = Vec::new();
    let pct: Vec<f64> = s.geodesic.iter().map(|(r, _)| r.pct_local).collect();
    for (i, (&p, &(lo, hi))) in pct.iter().zip(&bands).enumerate() {
        if !(p >= lo && p <= hi) {
            problems.push(format!("benchmark {} pct_local {p:.4}% outside [{lo}%, {hi}%]", i + 1));
        }
    }
    if pct[0] <= 0.0 {
        problems.push("benchmark 1 has no local basin".into());
    }
    if !(pct[0] < pct[1] && pct[1] < pct[2]) {
        problems.push(format!("ordering violated: {pct:?}"));
    }
    let total: Duration = s.geodesic.iter().map(|(_, d)| *d).sum();
    within(total, 300.0, &mut problems);
    let line = format!(
        "pct_local {:.4}% / {:.4}% / {:.4}%, {:.2?}",
        pct[0], pct[1], pct[2], total
    );
    if problems.is_empty() {
        outcome(problems, line)
    } else {
        problems.push(line);
        outcome(problems, String::new())
    }
}

fn chordal_sweeps(s: &Sweeps) -> Outcome {
    let mut problems = Vec::new();
    let mut lines = Vec::new();
    for (i, (r, _)) in s.chordal.iter().enumerate() {
        let id = i + 1;
        lines.push(format!("benchmark {id}: local {:.4}%, failed {:.4}%", r.pct_local, r.pct_failed));
        if r.pct_local != 0.0 {
            problems.push(format!("benchmark {id} pct_local {:.4}%", r.pct_local));
        }
        if r.pct_failed > 0.01 {
            problems.push(format!("benchmark {id} pct_failed {:.4}%", r.pct_failed));
        }
        for f in &r.failures {
            let ok = matches!(f.result.termination, Termination::LineSearchFail | Termination::MaxIter)
                && f.result.grad_norm > 1e-2;
            if !ok {
                problems.push(format!(
                    "benchmark {id} failed point ({}, {}) ends with {:?}, |grad| = {:.1e}, cost {:.4} at ({:.4}, {:.4})",
                    f.row, f.col, f.result.termination, f.result.grad_norm, f.result.cost, f.end.phi1, f.end.phi2
                ));
            }
        }
    }
    let total: Duration = s.chordal.iter().map(|(_, d)| *d).sum();
    within(total, 300.0, &mut problems);
    let line = format!("{}, {:.2?}", lines.join("; "), total);
    if problems.is_empty() {
        outcome(problems, line)
    } else {
        problems.push(line);
        outcome(problems, String::new())
    }
}

fn geodesic_totality(s: &Sweeps) -> Outcome {
    let mut problems = Vec::new();
    let mut matched = 0usize;
    for (i, (r, _)) in s.geodesic.iter().take(2).enumerate() {
        for (label, end) in r.labels.iter().zip(&r.endpoints) {
            match label {
                BasinLabel::Local(k) => {
                    let entry = &r.catalog[*k];
                    let d = entry.phi.wrapped_distance(end);
                    if entry.is_global || d > 1e-3 {
                        problems.push(format!("benchmark {}: local label {k} at distance {d:e}", i + 1));
                    } else {
                        matched += 1;
                    }
                }
                BasinLabel::Global | BasinLabel::Failed => {}
            }
        }
    }
    problems.truncate(5);
    outcome(problems, format!("{matched} non-global runs all end within 1e-3 of a catalog local minimum"))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "heading identity theta0 = phi01", heading_identity()),
        (2, "reduction consistency", reduction_consistency()),
        (3, "closed-form cost gap", gap_identity()),
        (4, "geodesic local minima", geodesic_local_minima()),
        (5, "outer minimum disappears at eps = pi/2", minimum_disappears()),
        (6, "chordal unique minimum, eleven critical points", chordal_unique_minimum()),
        (7, "chordal double minimum at eps = pi", chordal_double_minimum()),
        (8, "chordal derivative oracles", derivative_oracles()),
    ];
    let sweeps = run_sweeps();
    results.push((9, "geodesic basin percentages", basin_table(&sweeps)));
    results.push((10, "chordal sweeps", chordal_sweeps(&sweeps)));
    results.push((11, "geodesic sweep totality", geodesic_totality(&sweeps)));

    println!();
    for (n, name, o) in &results {
        println!(
            "criterion {n:>2} [{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "\nacceptance: {} of {} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!(", failing: {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
