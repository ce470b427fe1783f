//! Configuration-driven command line for the `bures` crate. Every subcommand
//! reads one JSON config (shared schema, `task` discriminator), writes its
//! results plus a manifest into `--out`, and reports through exit codes:
//! 0 ok, 2 config error, 3 numerical failure (with diagnostic JSON),
//! 4 infeasible anchor.

mod config;
mod output;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bures::barycenter::{self, BarycenterResult, DEFAULT_MAX_ITER};
use bures::linalg::Mat;
use bures::monte_carlo::{exact_scalar_tail, rate_slope, SlopeRow};
use bures::optimizer::{
    hoeffding_report, prgd, rate_profile, BallComplement, PrgdResult, DEFAULT_PRGD_ITERS,
};
use bures::population::validate_parts;
use bures::tilting::{cgf, solve_dual_with, tilt, DualConfig, DualStatus};
use bures::univariate::{uv_barycenter, uv_rate_function_with, UvConfig};
use bures::{rate_gradient::rate_gradient, tol, Cov64, Population64};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{Config, ConfigError, Task};
use output::{csv_real, Emitter, Real};

#[derive(Parser)]
#[command(
    name = "bures",
    version,
    about = "Bures-Wasserstein barycenters, rate functions, and rare-event experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a population spec against every invariant
    Validate(RunArgs),
    /// Population barycenter by fixed-point iteration
    Barycenter(RunArgs),
    /// Rate function and optimal tilt at an anchor
    Rate(RunArgs),
    /// Gradient of the rate function at an anchor
    Grad(RunArgs),
    /// Tilted weights and cumulant value at a fixed tilt
    Tilt(RunArgs),
    /// Constrained rate minimization over a ball complement
    Prgd(RunArgs),
    /// Radial rate profile with the sub-Gaussian reference bound
    Profile(RunArgs),
    /// Tail decay of empirical barycenters, Monte Carlo or exact
    Simulate(SimulateArgs),
    /// Univariate quantile barycenter
    UvBarycenter(RunArgs),
    /// Univariate rate function at a target quantile
    UvRate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration (schema documented in the README)
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    /// Override the solver tolerance for this task
    #[arg(long)]
    tol: Option<f64>,
    /// Override the initial step size (prgd)
    #[arg(long)]
    eta: Option<f64>,
    /// Override the dual blow-up cap
    #[arg(long)]
    cap: Option<f64>,
    /// Override the iteration budget
    #[arg(long)]
    max_iter: Option<usize>,
    /// Override the RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Exact binomial tails instead of Monte Carlo (scalar two-atom populations)
    #[arg(long)]
    exact: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args, exact) = match &cli.cmd {
        Cmd::Validate(a) => (Task::Validate, a, false),
        Cmd::Barycenter(a) => (Task::Barycenter, a, false),
        Cmd::Rate(a) => (Task::Rate, a, false),
        Cmd::Grad(a) => (Task::Grad, a, false),
        Cmd::Tilt(a) => (Task::Tilt, a, false),
        Cmd::Prgd(a) => (Task::Prgd, a, false),
        Cmd::Profile(a) => (Task::Profile, a, false),
        Cmd::Simulate(a) => (Task::Simulate, &a.run, a.exact),
        Cmd::UvBarycenter(a) => (Task::UvBarycenter, a, false),
        Cmd::UvRate(a) => (Task::UvRate, a, false),
    };
    match execute(task, args, exact) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
    }
}

struct Ctx<'a> {
    config: &'a Config,
    /// Directory CSV atom paths resolve against.
    dir: &'a Path,
    args: &'a RunArgs,
    exact: bool,
}

impl Ctx<'_> {
    fn dual_config(&self) -> DualConfig<f64> {
        let mut c = DualConfig::default();
        if let Some(t) = self.args.tol.or(self.config.solver.tol) {
            c.tol = t;
        }
        if let Some(cap) = self.args.cap.or(self.config.solver.cap) {
            c.cap = cap;
        }
        if let Some(n) = self.args.max_iter.or(self.config.solver.max_iter) {
            c.max_iter = n;
        }
        c
    }

    fn eta(&self) -> Option<f64> {
        self.args.eta.or(self.config.solver.eta)
    }

    fn seed(&self) -> u64 {
        self.args.seed.or(self.config.seed).unwrap_or(0)
    }
}

fn execute(expected: Task, args: &RunArgs, exact: bool) -> Result<u8, ConfigError> {
    let loaded = config::load(&args.config)?;
    if loaded.config.task != expected {
        return Err(ConfigError(format!(
            "config task `{}` does not match subcommand `{}`",
            loaded.config.task.name(),
            expected.name()
        )));
    }
    let threads = args.threads.or(loaded.config.threads);
    if let Some(t) = threads {
        if t == 0 {
            return Err(ConfigError("threads must be positive".into()));
        }
        // a later global-pool initialization is a no-op; first one wins
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    let mut emitter = Emitter::new(
        &args.out,
        expected.name(),
        &loaded.raw,
        args.seed.or(loaded.config.seed),
        threads,
    )
    .map_err(|e| ConfigError(format!("cannot prepare output dir: {e}")))?;
    let ctx = Ctx { config: &loaded.config, dir: &loaded.dir, args, exact };
    let code = match expected {
        Task::Validate => run_validate(&ctx, &mut emitter)?,
        Task::Barycenter => run_barycenter(&ctx, &mut emitter)?,
        Task::Rate => run_rate(&ctx, &mut emitter)?,
        Task::Grad => run_grad(&ctx, &mut emitter)?,
        Task::Tilt => run_tilt(&ctx, &mut emitter)?,
        Task::Prgd => run_prgd(&ctx, &mut emitter)?,
        Task::Profile => run_profile(&ctx, &mut emitter)?,
        Task::Simulate => run_simulate(&ctx, &mut emitter)?,
        Task::UvBarycenter => run_uv_barycenter(&ctx, &mut emitter)?,
        Task::UvRate => run_uv_rate(&ctx, &mut emitter)?,
    };
    emitter.finish().map_err(io_cfg)?;
    Ok(code)
}

fn io_cfg(e: std::io::Error) -> ConfigError {
    ConfigError(format!("cannot write output: {e}"))
}

/// Emits the diagnostic JSON that accompanies exit code 3.
fn numerical(
    emitter: &mut Emitter,
    error: impl Display,
    details: serde_json::Value,
) -> Result<u8, ConfigError> {
    eprintln!("numerical failure: {error}");
    emitter.diagnostic(error, details).map_err(io_cfg)?;
    Ok(3)
}

fn row_major(m: &Mat<f64>) -> Vec<f64> {
    let d = m.dim();
    (0..d).flat_map(|i| (0..d).map(move |j| m[(i, j)])).collect()
}

fn anchor_matrix(ctx: &Ctx, dim: usize) -> Result<Cov64, ConfigError> {
    match &ctx.config.anchor {
        Some(a) => config::build_matrix(dim, a, "anchor"),
        None => Err(ConfigError(format!(
            "task {} requires an `anchor` matrix",
            ctx.config.task.name()
        ))),
    }
}

fn status_name(status: DualStatus) -> &'static str {
    match status {
        DualStatus::Converged => "converged",
        DualStatus::Infeasible => "infeasible",
        DualStatus::IterationLimit => "iteration-limit",
    }
}

fn run_validate(ctx: &Ctx, emitter: &mut Emitter) -> Result<u8, ConfigError> {
    let spec = ctx.config.population_spec()?;
    let atoms: Vec<&[f64]> = spec.atoms.iter().map(|a| a.as_slice()).collect();
    let report = validate_parts(spec.dim, &atoms, &spec.weights);
    let out = output::ValidateOut {
        valid: report.valid,
        atom_count: report.atom_count,
        dims_consistent: report.dims_consistent,
        weight_count_matches: report.weight_count_matches,
        weights_nonnegative: report.weights_nonnegative,
        weight_sum: report.weight_sum,
        weight_sum_ok: report.weight_sum_ok,
        all_atoms_strictly_positive: report.all_atoms_strictly_positive,
        moment_condition: report.moment_condition.to_string(),
        atoms: report
            .atoms
            .into_iter()
            .map(|a| output::AtomCheckOut {
                index: a.index,
                min_eig: a.min_eig,
                strictly_positive: a.strictly_positive,
                error: a.error,
            })
            .collect(),
    };
    emitter.json("validate.json", &out).map_err(io_cfg)?;
    Ok(if out.valid { 0 } else { 2 })
}

fn solve_barycenter(ctx: &Ctx, p: &Population64) -> Result<BarycenterResult<f64>, String> {
    let tol = ctx.args.tol.or(ctx.config.solver.tol).unwrap_or(tol::BARY_TOL);
    let max_iter = ctx.args.max_iter.or(ctx.config.solver.max_iter).unwrap_or(DEFAULT_MAX_ITER);
    barycenter::barycenter_fixed_point(p, None, tol, max_iter).map_err(|e| e.to_string())
}

fn run_barycenter(ctx: &Ctx, emitter: &mut Emitter) -> Result<u8, ConfigError> {
    let p = config::build_population(ctx.config.population_spec()?)?;
    let sol = match solve_barycenter(ctx, &p) {
        Ok(sol) => sol,
        Err(e) => return numerical(emitter, e, json!({})),
    };
    let out = output::BarycenterOut {
        dim: p.dim(),
        barycenter: row_major(sol.barycenter.mat()),
        iterations: sol.iterations,
        residual: sol.residual,
        converged: sol.converged,
    };
    emitter.json("barycenter.json", &out).map_err(io_cfg)?;
    if !sol.converged {
        return numerical(
            emitter,
            "barycenter iteration did not converge",
            json!({ "iterations": sol.iterations, "residual": sol.residual }),
        );
    }
    Ok(0)
}

fn run_rate(ctx: &Ctx, emitter: &mut Emitter) -> Result<u8, ConfigError> {
    let p = config::build_population(ctx.config.population_spec()?)?;
    let m = anchor_matrix(ctx, p.dim())?;
    let dual = match solve_dual_with(&p, &m, &ctx.dual_config()) {
        Ok(d) => d,
        Err(e) => return numerical(emitter, e, json!({})),
    };
    let out = output::RateOut {
        dim: p.dim(),
        i_p: Real(dual.rate()),
        a_m: row_major(dual.optimizer.mat()),
        tilted_weights: dual.tilted_weights.clone(),
        feasible: dual.feasible(),
        status: status_name(dual.status).to_string(),
        residual: dual.residual,
        iterations: dual.iterations,
    };
    emitter.json("rate.json", &out).map_err(io_cfg)?;
    match dual.status {
        DualStatus::Converged => Ok(0),
        DualStatus::Infeasible => {
            eprintln!("infeasible anchor: the dual diverged, I_P = inf");
            Ok(4)
        }
        DualStatus::IterationLimit => numerical(
            emitter,
            "dual solve hit the iteration limit",
            json!({ "iterations": dual.iterations, "residual": dual.residual }),
        ),
    }
}

fn run_grad(ctx: &Ctx, emitter: &mut Emitter) -> Result<u8, ConfigError> {
    let p = config::build_population(ctx.config.population_spec()?)?;
    let m = anchor_matrix(ctx, p.dim())?;
    let dual = match solve_dual_with(&p, &m, &ctx.dual_config()) {
        Ok(d) => d,
        Err(e) => return numerical(emitter, e, json!({})),
    };
    match dual.status {
        DualStatus::Converged => {}
        DualStatus::Infeasible => {
            eprintln!("infeasible anchor: no gradient outside the effective domain");
            return Ok(4);
        }
        DualStatus::IterationLimit => {
            return numerical(
                emitter,
                "dual solve hit the iteration limit",
                json!({ "iterations": dual.iterations, "residual": dual.residual }),
            )
        }
    }
    let g = match rate_gradient(&p, &m, &dual) {
        Ok(g) => g,
        Err(e) => return numerical(emitter, e, json!({})),
    };
    let out = output::GradOut { dim: p.dim(), gradient: row_major(g.mat()), i_p: Real(dual.value) };
    emitter.json("grad.json", &out).map_err(io_cfg)?;
    Ok(0)
}

fn run_tilt(ctx: &Ctx, emitter: &mut Emitter) -> Result<u8, ConfigError> {
    let p = config::build_population(ctx.config.population_spec()?)?;
    let m = anchor_matrix(ctx, p.dim())?;
    let a = match &ctx.config.tilt {
        Some(t) => config::build_tangent(p.dim(), t, "tilt")?,
        None => return Err(ConfigError("task tilt requires a `tilt` matrix".into())),
    };
    let (tilted, value) = match tilt(&p, &m, &a).and_then(|t| Ok((t, cgf(&p, &m, &a)?))) {
        Ok(pair) => pair,
        Err(e) => return numerical(emitter, e, json!({})),
    };
    let out = output::TiltOut { tilted_weights: tilted.weights().to_vec(), cgf: value };
    emitter.json("tilt.json", &out).map_err(io_cfg)?;
    Ok(0)
}

fn run_prgd(ctx: &Ctx, emitter: &mut Emitter) -> Result<u8, ConfigError> {
    let p = config::build_population(ctx.config.population_spec()?)?;
    let spec = ctx.config.event_spec()?;
    let center = config::build_matrix(p.dim(), &spec.center, "event center")?;
    let event = BallComplement::new(center.clone(), spec.radius)
        .map_err(|e| ConfigError(format!("event: {e}")))?;
    // an explicit init is used alone; otherwise multi-start from the center
    // and the atoms, since any single projection direction can leave the
    // domain even when the event is reachable
    let starts: Vec<Cov64> = match &ctx.config.init {
        Some(i) => vec![config::build_matrix(p.dim(), i, "init")?],
        None => std::iter::once(center).chain(p.atoms().iter().cloned()).collect(),
    };
    let max_iter = ctx.args.max_iter.or(ctx.config.solver.max_iter).unwrap_or(DEFAULT_PRGD_ITERS);
    let mut run = None;
    for init in &starts {
        let attempt = match prgd(&p, &event, ctx.eta(), max_iter, init) {
            Ok(attempt) => attempt,
            Err(e) => return numerical(emitter, e, json!({})),
        };
        let better = run.as_ref().map_or(true, |best: &PrgdResult<f64>| attempt.value < best.value);
        if better {
            run = Some(attempt);
        }
    }
    let run = run.expect("at least one start");
    let infeasible = !run.value.is_finite();
    let out = output::PrgdOut {
        dim: p.dim(),
        minimizer: row_major(run.minimizer.mat()),
        value: Real(run.value),
        iterations: run.iterations,
        eta_final: run.eta_final,
        trace: run.trace.iter().map(|&v| Real(v)).collect(),
    };
    emitter.json("prgd.json", &out).map_err(io_cfg)?;
    if infeasible {
        eprintln!("infeasible anchor: no feasible iterate found, value = inf");
        return Ok(4);
    }
    Ok(0)
}

fn run_profile(ctx: &Ctx, emitter: &mut Emitter) -> Result<u8, ConfigError> {
    let p = config::build_population(ctx.config.population_spec()?)?;
    let radii = config::checked_radii(ctx.config)?;
    let center = match &ctx.config.event {
        Some(e) => config::build_matrix(p.dim(), &e.center, "event center")?,
        None => match solve_barycenter(ctx, &p) {
            Ok(sol) if sol.converged => sol.barycenter,
            Ok(sol) => {
                return numerical(
                    emitter,
                    "barycenter iteration did not converge",
                    json!({ "residual": sol.residual }),
                )
            }
            Err(e) => return numerical(emitter, e, json!({})),
        },
    };
    let profile = match rate_profile(&p, &center, &radii) {
        Ok(pr) => pr,
        Err(e) => return numerical(emitter, e, json!({})),
    };
    let report = hoeffding_report(&p, &profile);
    let rows: Vec<Vec<String>> = profile
        .radii
        .iter()
        .zip(&profile.values)
        .zip(&profile.argmins)
        .zip(&report.rows)
        .map(|(((&radius, &value), argmin), h)| {
            let argmin = match argmin {
                Some(m) => serde_json::to_string(&row_major(m.mat())).expect("finite entries"),
                None => String::new(),
            };
            vec![
                csv_real(radius),
                csv_real(value),
                argmin,
                csv_real(h.reference),
                h.bound_ok.to_string(),
            ]
        })
        .collect();
    emitter
        .csv(
            "profile.csv",
            &["radius", "i_P", "argmin", "hoeffding_reference", "bound_ok"],
            &rows,
        )
        .map_err(io_cfg)?;
    Ok(0)
}

const SIMULATE_HEADER: [&str; 7] =
    ["n", "replicates", "hits", "p_hat", "wilson_lo", "wilson_hi", "minus_log_p_over_n"];

fn slope_row_cells(row: &SlopeRow) -> Vec<String> {
    vec![
        row.n.to_string(),
        row.replicates.to_string(),
        row.hits.to_string(),
        csv_real(row.p_hat),
        csv_real(row.wilson_lo),
        csv_real(row.wilson_hi),
        csv_real(row.minus_log_p_over_n),
    ]
}

fn check_simulate_spec(spec: &config::SimulateSpec) -> Result<(), ConfigError> {
    if spec.replicates == 0 {
        return Err(ConfigError("simulate.replicates must be positive".into()));
    }
    if !(spec.r.is_finite() && spec.r > 0.0) {
        return Err(ConfigError("simulate.r must be a positive real".into()));
    }
    if spec.n_grid.is_empty() {
        return Err(ConfigError("simulate.n_grid must be nonempty".into()));
    }
    for (i, &n) in spec.n_grid.iter().enumerate() {
        if n == 0 || (i > 0 && spec.n_grid[i - 1] >= n) {
            return Err(ConfigError(
                "simulate.n_grid must be positive and strictly increasing".into(),
            ));
        }
    }
    Ok(())
}

fn run_simulate(ctx: &Ctx, emitter: &mut Emitter) -> Result<u8, ConfigError> {
    let p = config::build_population(ctx.config.population_spec()?)?;
    let spec = match &ctx.config.simulate {
        Some(s) => s,
        None => return Err(ConfigError("task simulate requires a `simulate` section".into())),
    };
    check_simulate_spec(spec)?;
    if ctx.exact {
        return run_simulate_exact(ctx, emitter, &p, spec);
    }
    let seed = ctx.seed();
    emitter.seed = Some(seed);
    let report = match rate_slope(&p, spec.r, &spec.n_grid, spec.replicates, seed) {
        Ok(r) => r,
        Err(e) => return numerical(emitter, e, json!({})),
    };
    let rows: Vec<Vec<String>> = report.rows.iter().map(slope_row_cells).collect();
    emitter.csv("simulate.csv", &SIMULATE_HEADER, &rows).map_err(io_cfg)?;
    let summary = output::SimulateSummaryOut {
        r: spec.r,
        exact: false,
        slope: report.slope,
        intercept: report.intercept,
        reference: Real(report.reference),
        rel_error: report.rel_error,
        included_rows: report.rows.iter().filter(|r| r.included).count(),
        failures: report.failures,
    };
    emitter.json("simulate.json", &summary).map_err(io_cfg)?;
    Ok(0)
}

/// Exact-tail variant: same CSV schema, binomial tails in place of Monte
/// Carlo. `hits` is the expected count at the configured replicate budget and
/// the Wilson interval collapses to the exact value.
fn run_simulate_exact(
    ctx: &Ctx,
    emitter: &mut Emitter,
    p: &Population64,
    spec: &config::SimulateSpec,
) -> Result<u8, ConfigError> {
    let mut rows = Vec::with_capacity(spec.n_grid.len());
    let mut fit_points = Vec::new();
    for &n in &spec.n_grid {
        let tail = match exact_scalar_tail(p, spec.r, n) {
            Some(t) => t,
            None => {
                return Err(ConfigError(
                    "--exact requires a scalar population with two distinct supported atoms"
                        .into(),
                ))
            }
        };
        let minus_log = if tail > 0.0 { -tail.ln() / n as f64 } else { f64::INFINITY };
        if tail > 0.0 {
            fit_points.push((n as f64, -tail.ln()));
        }
        rows.push(slope_row_cells(&SlopeRow {
            n,
            replicates: spec.replicates,
            hits: (tail * spec.replicates as f64).round() as usize,
            p_hat: tail,
            wilson_lo: tail,
            wilson_hi: tail,
            minus_log_p_over_n: minus_log,
            included: tail > 0.0,
        }));
    }
    emitter.csv("simulate.csv", &SIMULATE_HEADER, &rows).map_err(io_cfg)?;

    let center = match solve_barycenter(ctx, p) {
        Ok(sol) if sol.converged => sol.barycenter,
        Ok(sol) => {
            return numerical(
                emitter,
                "barycenter iteration did not converge",
                json!({ "residual": sol.residual }),
            )
        }
        Err(e) => return numerical(emitter, e, json!({})),
    };
    let reference = match rate_profile(p, &center, &[spec.r]) {
        Ok(profile) => profile.values[0],
        Err(e) => return numerical(emitter, e, json!({})),
    };
    let (slope, intercept) = least_squares(&fit_points);
    let rel_error = match slope {
        Some(s) if reference.is_finite() && reference > 0.0 => {
            Some((s - reference).abs() / reference)
        }
        _ => None,
    };
    let summary = output::SimulateSummaryOut {
        r: spec.r,
        exact: true,
        slope,
        intercept,
        reference: Real(reference),
        rel_error,
        included_rows: fit_points.len(),
        failures: 0,
    };
    emitter.json("simulate.json", &summary).map_err(io_cfg)?;
    Ok(0)
}

fn least_squares(pts: &[(f64, f64)]) -> (Option<f64>, Option<f64>) {
    if pts.len() < 2 {
        return (None, None);
    }
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    (Some(slope), Some(ym - slope * xm))
}

fn run_uv_barycenter(ctx: &Ctx, emitter: &mut Emitter) -> Result<u8, ConfigError> {
    let spec = ctx.config.univariate_spec()?;
    let p = config::build_uv_population(spec, ctx.dir)?;
    let bary = uv_barycenter(&p);
    let out =
        output::UvBarycenterOut { grid_size: bary.grid_size(), values: bary.values().to_vec() };
    emitter.json("uv-barycenter.json", &out).map_err(io_cfg)?;
    Ok(0)
}

fn run_uv_rate(ctx: &Ctx, emitter: &mut Emitter) -> Result<u8, ConfigError> {
    let spec = ctx.config.univariate_spec()?;
    let p = config::build_uv_population(spec, ctx.dir)?;
    let target = match &spec.target {
        Some(t) => config::build_quantile(t, spec.grid_size, ctx.dir, "univariate target")?,
        None => return Err(ConfigError("task uv-rate requires a `univariate.target`".into())),
    };
    let mut cfg = UvConfig::default();
    if let Some(t) = ctx.args.tol.or(ctx.config.solver.tol) {
        cfg.tol = t;
    }
    if let Some(c) = ctx.args.cap.or(ctx.config.solver.cap) {
        cfg.cap = c;
    }
    if let Some(n) = ctx.args.max_iter.or(ctx.config.solver.max_iter) {
        cfg.max_iter = n;
    }
    let result = match uv_rate_function_with(&p, &target, &cfg) {
        Ok(r) => r,
        Err(e) => return numerical(emitter, e, json!({})),
    };
    let out = output::UvRateOut {
        rate: Real(result.rate),
        weights: result.weights.clone(),
        theta: result.theta.clone(),
        feasible: result.feasible,
        converged: result.converged,
        gap: result.gap,
        moment_residual: result.moment_residual,
        iterations: result.iterations,
    };
    emitter.json("uv-rate.json", &out).map_err(io_cfg)?;
    if !result.feasible {
        eprintln!("infeasible target: rate = inf");
        return Ok(4);
    }
    if !result.converged {
        return numerical(
            emitter,
            "univariate dual did not converge",
            json!({ "iterations": result.iterations, "gap": result.gap }),
        );
    }
    Ok(0)
}
