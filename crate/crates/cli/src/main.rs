use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tripose::chordal::{b0, chordal_minima, critical_points_eps_pi, critical_points_numeric, critical_points_perfect};
use tripose::export::{export_profile_1d, export_surface, surface, CriticalPointReport, SurfaceKind};
use tripose::geodesic::{geodesic_minima_catalog, convexity_case, convexity_ratio};
use tripose::optimizer::MinimizeOptions;
use tripose::problem::{
    benchmark_parameters, BenchmarkProblem, GroundTruth, ProblemFile, DEFAULT_P1, DEFAULT_P2, DEFAULT_SIGMA,
};
use tripose::sweep::{export_grid, export_summary, run_sweep, CostKind, SweepConfig};
use tripose::verify::{verify_problem, Status};
use tripose::ReducedModel;

#[derive(Parser)]
#[command(name = "tripose", version, about = "Cost landscapes of the three-pose planar pose graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print and save reduction constants and both minima catalogs.
    Analyze(ProblemArgs),
    /// Sample the three 1D costs f_{1,k} over one period.
    Profile1d(ProblemArgs),
    /// Sample a cost surface on an n x n grid of the fundamental square.
    Surface {
        #[command(flatten)]
        problem: ProblemArgs,
        /// One of F_phi, f, G_phi, g
        #[arg(long, value_parser = parse_surface)]
        which: SurfaceKind,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// Enumerate critical points of the reduced chordal cost.
    CriticalPoints {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = Method::Numeric)]
        method: Method,
    },
    /// Basin-of-attraction sweep over a grid of initial conditions.
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = Cost::Geodesic)]
        cost: Cost,
        #[arg(long, default_value_t = 500)]
        grid_n: usize,
        #[arg(long, default_value_t = 1e-3)]
        match_tol: f64,
        #[arg(long, default_value_t = MinimizeOptions::default().grad_tol)]
        grad_tol: f64,
        #[arg(long, default_value_t = MinimizeOptions::default().step_tol)]
        step_tol: f64,
        #[arg(long, default_value_t = MinimizeOptions::default().max_iter)]
        max_iter: usize,
    },
    /// Run the named self-checks; exits with status 1 if any fails.
    Verify(ProblemArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Numeric,
    Perfect,
    EpsPi,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cost {
    Geodesic,
    Chordal,
}

impl From<Cost> for CostKind {
    fn from(c: Cost) -> Self {
        match c {
            Cost::Geodesic => CostKind::Geodesic,
            Cost::Chordal => CostKind::Chordal,
        }
    }
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Builtin benchmark id (1, 2 or 3). Repeatable for `verify`.
    #[arg(long = "problem", conflicts_with = "problem_file")]
    problem: Vec<u32>,
    /// JSON problem definition.
    #[arg(long)]
    problem_file: Option<PathBuf>,
    /// Ground-truth position of pose 1, as `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    p1: Option<[f64; 2]>,
    /// Ground-truth position of pose 2, as `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    p2: Option<[f64; 2]>,
    /// Common measurement noise level
    #[arg(long)]
    sigma: Option<f64>,
    /// Total orientation mismatch, overriding the problem's own.
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok([p(a)?, p(b)?])
}

fn parse_surface(s: &str) -> Result<SurfaceKind, String> {
    s.parse().map_err(|e: tripose::Error| e.to_string())
}

impl ProblemArgs {
    fn problems(&self) -> Result<Vec<BenchmarkProblem>> {
        if let Some(path) = &self.problem_file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: ProblemFile =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            return Ok(vec![self.apply(file)?]);
        }
        let ids = if self.problem.is_empty() { vec![1] } else { self.problem.clone() };
        ids.into_iter()
            .map(|id| {
                let (headings, eps) = benchmark_parameters(id)?;
                let file = ProblemFile {
                    ground_truth: GroundTruth::new(DEFAULT_P1, DEFAULT_P2, headings.phi1, headings.phi2)?,
                    epsilon: eps,
                    sigma: DEFAULT_SIGMA,
                    label: Some(format!("benchmark-{id}")),
                };
                self.apply(file)
            })
            .collect()
    }

    fn single(&self) -> Result<BenchmarkProblem> {
        let mut all = self.problems()?;
        if all.len() != 1 {
            bail!("this command takes exactly one problem");
        }
        Ok(all.remove(0))
    }

    fn apply(&self, mut file: ProblemFile) -> Result<BenchmarkProblem> {
        if let Some(p1) = self.p1 {
            file.ground_truth.p1 = p1;
        }
        if let Some(p2) = self.p2 {
            file.ground_truth.p2 = p2;
        }
        if let Some(s) = self.sigma {
            file.sigma = s;
        }
        if let Some(e) = self.epsilon {
            file.epsilon = e;
        }
        Ok(file.into_problem()?)
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn save_problem(dir: &Path, problem: &BenchmarkProblem, name: &str) -> Result<()> {
    problem
        .to_file()
        .write(dir.join(name))
        .with_context(|| format!("writing {name}"))
}

fn analyze(args: &ProblemArgs) -> Result<()> {
    let problem = args.single()?;
    let dir = args.out_dir()?;
    save_problem(dir, &problem, "problem.json")?;
    let model = ReducedModel::new(&problem.measurements)?;
    let geodesic = geodesic_minima_catalog(&model);
    let chordal = chordal_minima(&model);
    let report = json!({
        "label": problem.label,
        "c0": model.c0,
        "a0": model.a0,
        "theta0": model.theta0,
        "phi01": problem.measurements.phi01,
        "b0": b0(&model),
        "epsilon": problem.measurements.mismatch(),
        "convexity_ratio": convexity_ratio(&model),
        "convexity_case": convexity_case(&model),
        "geodesic_minima": geodesic,
        "chordal_minima": chordal.iter().map(tripose::export::CriticalPointRecord::from).collect::<Vec<_>>(),
        "digest": problem.digest(),
    });
    write_json(&dir.join("analysis.json"), &report)?;
    println!("{}: c0 = {:.6}, a0 = {:.6}, theta0 = {:.6} (phi01 = {:.6})", problem.label, model.c0, model.a0, model.theta0, problem.measurements.phi01);
    println!("mismatch = {:.6}, case {} (ratio {:.4})", problem.measurements.mismatch(), convexity_case(&model), convexity_ratio(&model));
    println!("geodesic minima: {}", geodesic.len());
    for m in &geodesic {
        println!(
            "  k = {:>2}  phi = ({:.6}, {:.6})  cost = {:.6}{}",
            m.region.k(),
            m.phi.phi1,
            m.phi.phi2,
            m.cost,
            if m.is_global { "  global" } else { "" }
        );
    }
    println!("chordal minima: {}", chordal.len());
    for m in &chordal {
        println!("  phi = ({:.6}, {:.6})  cost = {:.6}", m.phi.phi1, m.phi.phi2, m.cost);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Analyze(args) => analyze(&args)?,
        Command::Profile1d(args) => {
            let problem = args.single()?;
            let dir = args.out_dir()?;
            save_problem(dir, &problem, "problem.json")?;
            let model = ReducedModel::new(&problem.measurements)?;
            export_profile_1d(&problem, &model, dir.join("profile_1d.csv"))?;
            println!("wrote {}", dir.join("profile_1d.csv").display());
        }
        Command::Surface { problem: args, which, n } => {
            let problem = args.single()?;
            let dir = args.out_dir()?;
            save_problem(dir, &problem, "problem.json")?;
            let model = ReducedModel::new(&problem.measurements)?;
            let s = surface(&model, which, n)?;
            let path = dir.join(format!("surface_{which}.csv"));
            export_surface(&problem, &s, &path)?;
            println!("wrote {} (min {:.6}, max {:.6})", path.display(), s.min(), s.max());
        }
        Command::CriticalPoints { problem: args, method } => {
            let problem = args.single()?;
            let dir = args.out_dir()?;
            save_problem(dir, &problem, "problem.json")?;
            let model = ReducedModel::new(&problem.measurements)?;
            let (name, points) = match method {
                Method::Numeric => ("numeric", critical_points_numeric(&model)),
                Method::Perfect => ("perfect", critical_points_perfect(&model)?),
                Method::EpsPi => ("eps-pi", critical_points_eps_pi(&model)?),
            };
            CriticalPointReport::new(&problem, name, &points).write(dir.join("critical_points.json"))?;
            for p in &points {
                println!(
                    "{:<10} phi = ({:.6}, {:.6})  cost = {:.6}{}",
                    format!("{:?}", p.kind),
                    p.phi.phi1,
                    p.phi.phi2,
                    p.cost,
                    if p.on_boundary { "  boundary" } else { "" }
                );
            }
        }
        Command::Sweep {
            problem: args,
            cost,
            grid_n,
            match_tol,
            grad_tol,
            step_tol,
            max_iter,
        } => {
            let problem = args.single()?;
            let dir = args.out_dir()?;
            save_problem(dir, &problem, "problem.json")?;
            let cfg = SweepConfig {
                grid_n,
                cost_kind: cost.into(),
                match_tol,
                minimize_options: MinimizeOptions {
                    grad_tol,
                    step_tol,
                    max_iter,
                    ..MinimizeOptions::default()
                },
            };
            let result = run_sweep(&problem, &cfg)?;
            let kind = cfg.cost_kind;
            export_grid(&result, dir.join(format!("basins_{kind}.csv")))?;
            export_summary(&result, dir.join(format!("summary_{kind}.json")))?;
            println!(
                "{} {kind} {n}x{n}: global {:.4}%, local {:.4}%, failed {:.4}%",
                problem.label,
                result.pct_global,
                result.pct_local,
                result.pct_failed,
                n = grid_n
            );
        }
        Command::Verify(args) => {
            let problems = args.problems()?;
            let dir = args.out_dir()?;
            let mut reports = Vec::new();
            for problem in &problems {
                let name = if problems.len() == 1 {
                    "problem.json".to_string()
                } else {
                    format!("problem_{}.json", problem.label)
                };
                save_problem(dir, problem, &name)?;
                let report = verify_problem(problem);
                for c in &report.checks {
                    let tag = match c.status {
                        Status::Pass => "pass",
                        Status::Fail => "FAIL",
                        Status::Skip => "skip",
                    };
                    println!("{:<14} {tag:<4} {:<30} {}", report.label, c.name, c.detail);
                }
                reports.push(report);
            }
            write_json(&dir.join("verify.json"), &reports)?;
            return Ok(reports.iter().all(|r| r.passed()));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
