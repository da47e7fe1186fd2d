//! `minkdiff` command-line front end.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use minkdiff::acceptance::{self, AcceptanceOptions};
use minkdiff::geodesy::{perimeter, Geodesy, GeodesyOptions};
use minkdiff::norm::{Norm, NormSpec};
use minkdiff::surface::{curvatures, sign_agreement, Surface, SurfaceSpec};
use minkdiff::variation::{
    area, first_variation_formula, first_variation_numeric, minimal_check, DomainPatch, ScalarField, VariationSpec,
};
use minkdiff::width::{self, Perturbation};
use minkdiff::Error;

use report::{Format, Report};

#[derive(Parser, Debug)]
#[command(name = "minkdiff", version, about = "Differential geometry of surfaces in normed spaces")]
struct Cli {
    /// Tolerance of the command's pass/fail verdict.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for randomized sampling.
    #[arg(long, global = true, default_value_t = 20240601)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Norm diagnostics.
    #[command(subcommand)]
    Norm(NormCommand),
    /// Curvature and variational checks on a surface.
    #[command(subcommand)]
    Surface(SurfaceCommand),
    /// Distance and shortest path between two parameter points.
    Geodesic(GeodesicArgs),
    /// Sampled diameter, optionally against the curvature bound.
    Diameter(DiameterArgs),
    /// Perimeter of the normed space against its bound.
    Perimeter(PerimeterArgs),
    /// Bodies of constant width.
    #[command(subcommand)]
    Width(WidthCommand),
    /// Run the acceptance suite.
    Acceptance(AcceptanceArgs),
}

#[derive(Subcommand, Debug)]
enum NormCommand {
    /// Admissibility scan of the unit sphere.
    Check(NormCheckArgs),
}

#[derive(Subcommand, Debug)]
enum SurfaceCommand {
    /// Pointwise curvature table.
    Curvature(CurvatureArgs),
    /// Minimal-surface residuals over a grid.
    MinimalCheck(MinimalArgs),
    /// First variation of area along a Birkhoff normal field.
    Variation(VariationArgs),
}

#[derive(Subcommand, Debug)]
enum WidthCommand {
    /// Build a body of constant width and check it.
    Verify(WidthArgs),
}

#[derive(Args, Debug)]
struct NormArg {
    /// Norm specification (JSON).
    #[arg(long)]
    norm: PathBuf,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    #[command(flatten)]
    norm: NormArg,
    /// Surface specification (JSON).
    #[arg(long)]
    surface: PathBuf,
}

#[derive(Args, Debug)]
struct NormCheckArgs {
    #[command(flatten)]
    norm: NormArg,
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

#[derive(Args, Debug)]
struct CurvatureArgs {
    #[command(flatten)]
    specs: SurfaceArgs,
    /// Sample an `N × N` parameter grid.
    #[arg(long, default_value_t = 9)]
    grid: usize,
    /// Sample these points instead, `u,v` (repeatable).
    #[arg(long = "at", value_parser = parse_pair)]
    at: Vec<(f64, f64)>,
}

#[derive(Args, Debug)]
struct MinimalArgs {
    #[command(flatten)]
    specs: SurfaceArgs,
    #[arg(long, default_value_t = 21)]
    grid: usize,
}

#[derive(Args, Debug)]
struct VariationArgs {
    #[command(flatten)]
    specs: SurfaceArgs,
    /// Variation field: `bump`, a constant, or an expression in `u`, `v`.
    #[arg(long, default_value = "bump")]
    g: String,
    /// Patch `u0,u1,v0,v1`; defaults to the whole domain.
    #[arg(long, value_parser = parse_rect)]
    rect: Option<[[f64; 2]; 2]>,
    /// Gauss–Legendre nodes per direction.
    #[arg(long, default_value_t = 24)]
    order: usize,
    /// Step of the central difference in `t`.
    #[arg(long)]
    t_step: Option<f64>,
}

#[derive(Args, Debug)]
struct GeodesicArgs {
    #[command(flatten)]
    specs: SurfaceArgs,
    #[arg(long, value_parser = parse_pair)]
    from: (f64, f64),
    #[arg(long, value_parser = parse_pair)]
    to: (f64, f64),
    #[arg(long, default_value_t = 64)]
    resolution: usize,
}

#[derive(Args, Debug)]
struct DiameterArgs {
    #[command(flatten)]
    specs: SurfaceArgs,
    #[arg(long, default_value_t = 8)]
    samples: usize,
    #[arg(long, default_value_t = 32)]
    resolution: usize,
    /// Lower curvature bound; enables the diameter-bound check.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Grid of the curvature-hypothesis scan.
    #[arg(long, default_value_t = 32)]
    grid: usize,
}

#[derive(Args, Debug)]
struct PerimeterArgs {
    #[command(flatten)]
    norm: NormArg,
    #[arg(long, default_value_t = 32)]
    resolution: usize,
    #[arg(long, default_value_t = 64)]
    samples: usize,
}

#[derive(Args, Debug)]
struct WidthArgs {
    #[command(flatten)]
    norm: NormArg,
    #[arg(long, default_value_t = 2.0)]
    width: f64,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Odd perturbation: `odd-harmonic` or an expression in `x`, `y`, `z`.
    #[arg(long, default_value = "odd-harmonic")]
    perturbation: String,
    #[arg(long, default_value_t = 32)]
    grid: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args, Debug)]
struct AcceptanceArgs {
    /// `all` or a comma-separated list of criterion numbers.
    #[arg(long, default_value = "all")]
    suite: String,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v = parse_list(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_rect(s: &str) -> Result<[[f64; 2]; 2], String> {
    let v = parse_list(s, 4)?;
    Ok([[v[0], v[1]], [v[2], v[3]]])
}

fn parse_list(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

/// Failures of the CLI itself, with their exit codes.
#[derive(Debug)]
enum Failure {
    Core(Error),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 4,
            Failure::Core(e) => match e {
                Error::InvalidArgument(_)
                | Error::Schema(_)
                | Error::EpsilonTooLarge { .. }
                | Error::Orientation(_)
                | Error::NotImmersed { .. } => 4,
                Error::NotAdmissible(_) | Error::HypothesisViolated(_) => 2,
                Error::NumericFailure { .. } | Error::NoPath => 3,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Input(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_norm(arg: &NormArg) -> Result<(Norm, Value), Failure> {
    let text = read(&arg.norm)?;
    let spec = NormSpec::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", arg.norm.display())))?;
    let echo = serde_json::to_value(&spec).expect("norm spec serializes");
    Ok((spec.build()?, echo))
}

fn load_specs(args: &SurfaceArgs) -> Result<(Norm, Surface, Value), Failure> {
    let (norm, norm_echo) = load_norm(&args.norm)?;
    let text = read(&args.surface)?;
    let spec = SurfaceSpec::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", args.surface.display())))?;
    let echo = json!({"norm": norm_echo, "surface": serde_json::to_value(&spec).expect("surface spec serializes")});
    let surface = spec.build(&norm)?;
    Ok((norm, surface, echo))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let seed = cli.seed;
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(Failure::Input(format!("--tol must be a positive number, got {t}")));
        }
    }
    let tol = |default: f64| cli.tol.unwrap_or(default);
    match &cli.command {
        Command::Norm(NormCommand::Check(a)) => {
            let (norm, echo) = load_norm(&a.norm)?;
            let threshold = tol(1e-8);
            let scan = norm.admissibility_scan(a.grid, threshold)?;
            let eq = norm.equivalence();
            let mut r = Report::new("norm check", json!({"norm": echo, "grid": a.grid, "tol": threshold}));
            r.set("m", json!(scan.m));
            r.set("m_bar", json!(scan.m_bar));
            r.set("admissible", json!(scan.admissible));
            r.set("grid_size", json!(scan.grid_size));
            r.set("min_location", to_value(&scan.min_location));
            r.set("max_location", to_value(&scan.max_location));
            r.set("inradius", json!(eq.inradius()));
            r.set("sandwich_constant", json!(eq.sandwich_constant()));
            if let Some(f) = &scan.failure {
                r.set("failure", json!(f));
            }
            r.verdict(scan.admissible);
            Ok(r)
        }
        Command::Surface(SurfaceCommand::Curvature(a)) => {
            let (norm, surface, echo) = load_specs(&a.specs)?;
            let points = if a.at.is_empty() { surface.grid(a.grid, a.grid) } else { a.at.clone() };
            let mut r = Report::new("surface curvature", json!({"specs": echo, "points": points.len()}));
            let mut agree = true;
            let mut rows = Vec::new();
            for (u, v) in points {
                let c = curvatures(&surface, &norm, u, v)?;
                let s = sign_agreement(&surface, &norm, u, v)?;
                agree &= s.agree;
                rows.push(json!({
                    "u": u, "v": v,
                    "x": c.point.x, "y": c.point.y, "z": c.point.z,
                    "eta_x": c.eta.x, "eta_y": c.eta.y, "eta_z": c.eta.z,
                    "K": c.gaussian, "H": c.mean, "lambda1": c.lambda1, "lambda2": c.lambda2,
                    "Ke": c.euclidean_gaussian, "K_dB": c.sphere_curvature,
                    "eta_dot_xi": c.eta_dot_xi, "self_adjoint_residual": c.self_adjoint_residual,
                    "sign_agree": s.agree,
                }));
            }
            r.set("sign_agreement", json!(agree));
            r.table(rows);
            r.verdict(agree);
            Ok(r)
        }
        Command::Surface(SurfaceCommand::MinimalCheck(a)) => {
            let (norm, surface, echo) = load_specs(&a.specs)?;
            let t = tol(1e-5);
            let check = minimal_check(&surface, &norm, a.grid, a.grid)?;
            let mut r = Report::new("surface minimal-check", json!({"specs": echo, "grid": a.grid, "tol": t}));
            let minimal = check.max_abs_h * surface.length_scale() <= t
                && (check.negative_curvature_samples == 0
                    || (check.r_prop22_stats.max <= t && check.r_conf_stats.max <= t));
            r.merge(to_value(&check));
            r.set("minimal", json!(minimal));
            r.verdict(minimal);
            Ok(r)
        }
        Command::Surface(SurfaceCommand::Variation(a)) => {
            let (norm, surface, echo) = load_specs(&a.specs)?;
            let rect = a.rect.unwrap_or_else(|| surface.domain());
            let g = ScalarField::parse(&a.g, rect)?;
            let patch = DomainPatch::new(surface.clone(), rect, a.order)?;
            let numeric = first_variation_numeric(&patch, &norm, &VariationSpec { g: g.clone(), t_step: a.t_step })?;
            let formula = first_variation_formula(&patch, &norm, &g)?;
            let patch_area = area(&patch, &norm)?;
            let amplitude = patch.nodes().iter().map(|n| g.value(n.0, n.1).abs()).fold(0.0, f64::max);
            let scale = patch_area * amplitude / surface.length_scale();
            let t = tol(1e-4);
            let diff = (numeric.value - formula).abs();
            let pass = diff <= t * formula.abs().max(scale);
            let mut r = Report::new(
                "surface variation",
                json!({"specs": echo, "g": a.g, "rect": rect, "order": a.order, "tol": t}),
            );
            r.set("numeric", json!(numeric.value));
            r.set("formula", json!(formula));
            r.set("difference", json!(diff));
            r.set("area", json!(patch_area));
            r.set("t_step", json!(numeric.t_step));
            r.set("retries", json!(numeric.retries));
            r.verdict(pass);
            Ok(r)
        }
        Command::Geodesic(a) => {
            let (norm, surface, echo) = load_specs(&a.specs)?;
            let geo = Geodesy::new(surface, norm, GeodesyOptions::with_resolution(a.resolution))?;
            let d = geo.distance(a.from, a.to)?;
            let mut r = Report::new(
                "geodesic",
                json!({"specs": echo, "from": a.from, "to": a.to, "resolution": a.resolution}),
            );
            r.set("d", json!(d.d));
            r.set("d_euclidean", json!(d.d_euclidean));
            r.set("dijkstra_length", json!(d.dijkstra_length));
            r.set("certified_gap", json!(d.certified_gap));
            r.set("refined", json!(d.path.refined));
            r.set("iterations", json!(d.path.iterations));
            let rows = d
                .path
                .points
                .iter()
                .zip(&d.path.params)
                .map(|(x, p)| json!({"u": p.0, "v": p.1, "x": x.x, "y": x.y, "z": x.z}))
                .collect();
            r.table(rows);
            r.verdict(d.d <= d.dijkstra_length * (1.0 + 1e-9));
            Ok(r)
        }
        Command::Diameter(a) => {
            let (norm, surface, echo) = load_specs(&a.specs)?;
            let geo = Geodesy::new(surface, norm, GeodesyOptions::with_resolution(a.resolution))?;
            let mut r = Report::new(
                "diameter",
                json!({"specs": echo, "samples": a.samples, "resolution": a.resolution, "epsilon": a.epsilon, "seed": seed}),
            );
            match a.epsilon {
                Some(eps) => {
                    let b = geo.bonnet_check(eps, a.samples, seed, a.grid)?;
                    r.merge(to_value(&b));
                    r.verdict(b.pass);
                }
                None => {
                    let d = geo.diameter(a.samples, seed)?;
                    r.merge(to_value(&d));
                    r.verdict(true);
                }
            }
            Ok(r)
        }
        Command::Perimeter(a) => {
            let (norm, echo) = load_norm(&a.norm)?;
            let p = perimeter(&norm, a.resolution, a.samples)?;
            let mut r = Report::new(
                "perimeter",
                json!({"norm": echo, "resolution": a.resolution, "samples": a.samples}),
            );
            r.merge(to_value(&p));
            r.verdict(p.pass);
            Ok(r)
        }
        Command::Width(WidthCommand::Verify(a)) => {
            let (norm, echo) = load_norm(&a.norm)?;
            let p = Perturbation::parse(&a.perturbation)?;
            let t = tol(1e-4);
            let w = width::verify(&norm, a.width, p, a.epsilon, a.grid, a.samples)?;
            let pass = w.convex
                && w.width_deviation_max <= 1e-8
                && w.identity_residual_max <= t
                && w.involution_max <= 1e-6
                && w.eta_residual_max <= 1e-6;
            let mut r = Report::new(
                "width verify",
                json!({"norm": echo, "width": a.width, "epsilon": a.epsilon, "perturbation": a.perturbation,
                       "grid": a.grid, "samples": a.samples, "tol": t}),
            );
            r.merge(to_value(&w));
            r.verdict(pass);
            Ok(r)
        }
        Command::Acceptance(a) => {
            let ids: Vec<u32> = if a.suite == "all" {
                acceptance::CRITERIA.iter().map(|c| c.0).collect()
            } else {
                a.suite
                    .split(',')
                    .map(|s| s.trim().parse::<u32>().map_err(|e| Failure::Input(format!("--suite {s:?}: {e}"))))
                    .collect::<Result<_, _>>()?
            };
            let opts = AcceptanceOptions { seed };
            let mut rows = Vec::new();
            for id in ids {
                for c in acceptance::run_criterion(id, &opts) {
                    eprintln!("{}", c.line());
                    rows.push(c);
                }
            }
            let pass = rows.iter().all(|c| c.pass || !c.gating);
            let mut r = Report::new("acceptance", json!({"suite": a.suite, "seed": seed}));
            r.table(
                rows.iter()
                    .map(|c| {
                        let worst = c.worst();
                        json!({
                            "id": c.id, "name": c.name, "gating": c.gating, "pass": c.pass,
                            "checks": c.checks.len(),
                            "worst": worst.map(|w| w.label.clone()),
                            "worst_value": worst.map(|w| w.value),
                            "worst_limit": worst.map(|w| w.limit),
                            "error": c.error,
                        })
                    })
                    .collect(),
            );
            r.set("criteria", to_value(&rows.iter().map(|c| json!({"id": c.id, "checks": c.checks})).collect::<Vec<_>>()));
            r.verdict(pass);
            Ok(r)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let started = std::time::Instant::now();
    let outcome = run(&cli);
    log::info!("finished in {:.2}s", started.elapsed().as_secs_f64());
    match outcome {
        Ok(report) => {
            let text = report.render(cli.format);
            if let Err(e) = report::emit(&text, cli.out.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(4);
            }
            ExitCode::from(if report.pass() { 0 } else { 2 })
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
