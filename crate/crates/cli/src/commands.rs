use std::fs;
use std::path::{Path, PathBuf};

use rhls::diagnostics::{moving_plane_check, pohozaev_residual, symmetry_report, Evaluation, PohozaevOptions};
use rhls::energy::is_critical_q;
use rhls::geometry::ShapeTag;
use rhls::sharp::{dyadic_epsilons, test_function_sweep};
use rhls::solver::{
    critical_continuation, default_q_grid, equation_residual, minimize_subcritical, nonexistence_probe, solve_fixed_point,
    SolverMode,
};
use rhls::{p_alpha, q_alpha, sharp_constant, KernelOperator, KernelParams, Mesh};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::{
    merge, point_arg, ConstantCmd, ContinuationCmd, DomainArgs, KernelArgs, NonexistenceCmd, SolveCmd, SweepCmd, VerifyCmd,
};
use crate::error::{config_err, CliError, CliResult};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Settings shared by every command after merging file and flags.
pub struct Context {
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub strict: bool,
    pub file: Map<String, Value>,
}

impl Context {
    fn out_dir(&self) -> CliResult<PathBuf> {
        let dir = self.out_dir.clone().unwrap_or_else(|| PathBuf::from("rhls-out"));
        fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(dir)
    }
}

#[derive(Serialize)]
struct Document<'a, C: Serialize, R: Serialize> {
    command: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a C,
    mesh_hash: Option<String>,
    report: R,
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    write_file(dir, name, text.as_bytes())
}

fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| config_err(e.to_string()))
}

fn assemble<'m>(mesh: &'m Mesh, domain: &DomainArgs, kernel: &KernelArgs) -> CliResult<KernelOperator<'m>> {
    let params = KernelParams::new(mesh.dim(), kernel.alpha(), kernel.lambda())?;
    Ok(KernelOperator::assemble(mesh, params, domain.rule()?)?)
}

pub fn constant(ctx: &Context, cmd: &ConstantCmd) -> CliResult<()> {
    let c: ConstantCmd = merge(&[&ctx.file], cmd)?;
    let n = c.n.ok_or_else(|| config_err("n is required"))?;
    let alpha = c.alpha.ok_or_else(|| config_err("alpha is required"))?;
    let sharp = sharp_constant(n, alpha)?;
    println!("{}", serde_json::to_string_pretty(&sharp).map_err(|e| config_err(e.to_string()))?);
    if ctx.out_dir.is_some() {
        let doc = Document {
            command: "constant",
            version: VERSION,
            seed: ctx.seed,
            config: &c,
            mesh_hash: None,
            report: &sharp,
        };
        write_json(&ctx.out_dir()?, "constant.json", &doc)?;
    }
    Ok(())
}

pub fn sweep(ctx: &Context, cmd: &SweepCmd) -> CliResult<()> {
    let mut c: SweepCmd = merge(&[&ctx.file], cmd)?;
    c.domain.resolve()?;
    c.kernel.resolve()?;
    let mesh = c.domain.build()?;
    let n = mesh.dim();
    let radius = *c.sweep_radius.get_or_insert(mesh.diameter() / 4.0);
    let first = *c.eps_first.get_or_insert(3);
    let last = *c.eps_last.get_or_insert(8);
    if first > last {
        return Err(config_err(format!("eps_first ({first}) must not exceed eps_last ({last})")));
    }
    let default_center = c.domain.center()[..n].to_vec();
    let center = point_arg(c.center.get_or_insert(default_center), n)?;
    let eps = dyadic_epsilons(radius, first, last);
    let report = test_function_sweep(&mesh, c.kernel.alpha(), c.kernel.lambda(), radius, &eps, center)?;

    let dir = ctx.out_dir()?;
    let doc = Document {
        command: "sweep-eps",
        version: VERSION,
        seed: ctx.seed,
        config: &c,
        mesh_hash: Some(mesh.content_hash()),
        report: &report,
    };
    write_json(&dir, "sweep.json", &doc)?;
    write_file(&dir, "sweep.csv", report.to_csv().as_bytes())?;
    println!(
        "sweep-eps: min quotient {:.6e} (N_alpha {:.6e}), regime {}, written to {}",
        report.min_quotient,
        report.n_alpha,
        report.regime,
        dir.display()
    );
    Ok(())
}

/// Contents of `solution.json`.
#[derive(Serialize)]
struct SolutionFile<C, R> {
    command: String,
    version: String,
    seed: u64,
    config: C,
    mesh_hash: String,
    n: usize,
    alpha: f64,
    lambda: f64,
    q: f64,
    status: String,
    converged: bool,
    /// `‖f^(q-1) - K f‖_∞ / ‖f^(q-1)‖_∞` of `field`.
    residual: f64,
    /// Solution of `f^(q-1) = K f` at the mesh nodes.
    field: Vec<f64>,
    report: R,
}

fn solution_csv(mesh: &Mesh, f: &[f64]) -> CliResult<Vec<u8>> {
    let n = mesh.dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..n).map(|k| format!("x{k}")).collect();
    header.push("f".into());
    let csv_err = |e: csv::Error| config_err(format!("csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for (x, v) in mesh.nodes().iter().zip(f) {
        let mut row: Vec<String> = x[..n].iter().map(|c| c.to_string()).collect();
        row.push(v.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| config_err(format!("csv: {e}")))
}

pub fn solve(ctx: &Context, cmd: &SolveCmd) -> CliResult<()> {
    let mut c: SolveCmd = merge(&[&ctx.file], cmd)?;
    c.domain.resolve()?;
    c.kernel.resolve()?;
    c.solver.resolve(Some(4));
    c.dump_kernel.get_or_insert(false);
    let q = c.q.ok_or_else(|| config_err("q is required"))?;
    let mesh = c.domain.build()?;
    let op = assemble(&mesh, &c.domain, &c.kernel)?;
    let cfg = c.solver.config(ctx.seed)?;

    let dir = ctx.out_dir()?;
    let (field, status, converged, report) = match cfg.mode {
        SolverMode::FixedPoint => {
            let trace = solve_fixed_point(&op, q, &cfg, None)?;
            write_file(&dir, "iterations.csv", trace.iterations_csv().as_bytes())?;
            let field = trace.final_field.values().to_vec();
            let report = to_value(&trace)?;
            (field, trace.status.to_string(), trace.converged(), report)
        }
        SolverMode::QuotientDescent => {
            let rep = minimize_subcritical(&op, q, &cfg, c.solver.restarts.unwrap_or(0))?;
            // A minimizer g with ‖g‖_q = 1 solves Q g^(q-1) = K g; rescale to f^(q-1) = K f.
            let scale = rep.energy.quotient.powf(1.0 / (q - 2.0));
            let field = rep.minimizer.values().iter().map(|g| scale * g).collect();
            let status = if rep.converged { "converged" } else { "not_converged" };
            let report = to_value(&rep)?;
            (field, status.to_string(), rep.converged, report)
        }
    };
    let residual = equation_residual(&op, &field, q)?;
    let solution = SolutionFile {
        command: "solve".into(),
        version: VERSION.into(),
        seed: ctx.seed,
        config: &c,
        mesh_hash: mesh.content_hash(),
        n: mesh.dim(),
        alpha: c.kernel.alpha(),
        lambda: c.kernel.lambda(),
        q,
        status: status.clone(),
        converged,
        residual,
        field,
        report,
    };
    write_json(&dir, "solution.json", &solution)?;
    write_file(&dir, "solution.csv", &solution_csv(&mesh, &solution.field)?)?;
    if c.dump_kernel == Some(true) {
        let path = dir.join("kernel.bin");
        let file = fs::File::create(&path).map_err(|source| CliError::Io { path, source })?;
        op.write_dump(std::io::BufWriter::new(file))?;
    }
    println!("solve: status {status}, residual {residual:.3e}, written to {}", dir.display());
    if ctx.strict && !converged {
        return Err(CliError::NotConverged(format!("solve at q = {q} ended with status {status}")));
    }
    Ok(())
}

#[derive(Deserialize)]
struct SolutionInput {
    config: Map<String, Value>,
    mesh_hash: String,
    n: usize,
    alpha: f64,
    lambda: f64,
    q: f64,
    field: Vec<f64>,
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    passed: bool,
    statistic: f64,
    tolerance: f64,
    report: Value,
}

#[derive(Serialize)]
struct VerifyBundle<'a> {
    command: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a VerifyCmd,
    solution_mesh_hash: String,
    mesh_hash: String,
    q: f64,
    p: f64,
    checks: Vec<CheckResult>,
    all_passed: bool,
}

const KNOWN_CHECKS: [&str; 3] = ["pohozaev", "symmetry", "moving_plane"];

pub fn verify(ctx: &Context, cmd: &VerifyCmd) -> CliResult<()> {
    let path = merge::<VerifyCmd>(&[&ctx.file], cmd)?
        .solution
        .ok_or_else(|| config_err("solution is required"))?;
    let text = fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let sol: SolutionInput = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.clone(),
        source,
    })?;

    // Mesh keys from the solution, then the config file, then flags.
    let mut c: VerifyCmd = merge(&[&sol.config, &ctx.file], cmd)?;
    c.domain.resolve()?;
    if c.domain.n != Some(sol.n) {
        return Err(CliError::HashMismatch {
            expected: sol.mesh_hash,
            found: format!("a mesh of dimension {}", c.domain.n.unwrap_or(0)),
        });
    }
    let mesh = c.domain.build()?;
    let hash = mesh.content_hash();
    if hash != sol.mesh_hash {
        return Err(CliError::HashMismatch {
            expected: sol.mesh_hash,
            found: hash,
        });
    }
    if sol.field.len() != mesh.len() {
        return Err(rhls::Error::MeshMismatch {
            expected: mesh.len(),
            found: sol.field.len(),
        }
        .into());
    }
    let kernel = KernelArgs {
        alpha: Some(sol.alpha),
        lambda: Some(sol.lambda),
    };
    let op = assemble(&mesh, &c.domain, &kernel)?;
    let is_ball = mesh.shape_tag() == ShapeTag::Ball;
    let radius = c.domain.radius.unwrap_or(1.0);

    let checks = c
        .checks
        .get_or_insert_with(|| {
            let mut v = vec!["pohozaev".to_string()];
            if is_ball {
                v.push("symmetry".into());
                if sol.lambda == 0.0 {
                    v.push("moving_plane".into());
                }
            }
            v
        })
        .clone();
    if let Some(bad) = checks.iter().find(|k| !KNOWN_CHECKS.contains(&k.as_str())) {
        return Err(config_err(format!("unknown check '{bad}' (expected pohozaev, symmetry or moving_plane)")));
    }
    let exponent = *c.pohozaev_exponent.get_or_insert_with(Default::default);
    let pcenter = c.pohozaev_center.get_or_insert_with(|| vec![0.0; sol.n]).clone();
    let pohozaev_tol = *c.pohozaev_tol.get_or_insert(1e-2);
    let bins = *c.symmetry_bins.get_or_insert(8);
    let symmetry_tol = *c.symmetry_tol.get_or_insert(1e-3);
    let planes = c
        .plane_lambda
        .get_or_insert_with(|| vec![-0.75 * radius, -0.5 * radius, -0.25 * radius])
        .clone();
    let samples = *c.samples.get_or_insert(mesh.len());
    let slack_tol = *c.slack_tol.get_or_insert(1e-3);

    let q = sol.q;
    let p = if is_critical_q(sol.n, sol.alpha, q) {
        p_alpha(sol.n, sol.alpha)
    } else {
        q / (q - 1.0)
    };
    if sol.field.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(rhls::Error::Format("solution field must be finite and positive".into()).into());
    }
    let u: Vec<f64> = sol.field.iter().map(|f| f.powf(q - 1.0)).collect();

    let dir = ctx.out_dir()?;
    let mut results = Vec::new();
    for name in &checks {
        match name.as_str() {
            "pohozaev" => {
                let options = PohozaevOptions {
                    center: point_arg(&pcenter, sol.n)?,
                    exponent,
                };
                let rep = pohozaev_residual(&op, &u, p, &options)?;
                results.push(CheckResult {
                    name: name.clone(),
                    passed: rep.relative_residual.abs() <= pohozaev_tol,
                    statistic: rep.relative_residual,
                    tolerance: pohozaev_tol,
                    report: to_value(&rep)?,
                });
            }
            "symmetry" => {
                let rep = symmetry_report(&mesh, &u, bins, 0.0)?;
                results.push(CheckResult {
                    name: name.clone(),
                    passed: rep.radial_spread < symmetry_tol && rep.monotone_violations == 0,
                    statistic: rep.radial_spread,
                    tolerance: symmetry_tol,
                    report: to_value(&rep)?,
                });
            }
            _ => {
                for (k, &plane) in planes.iter().enumerate() {
                    let rep = moving_plane_check(&op, &u, p, plane, samples, Evaluation::IntegralRepresentation)?;
                    write_file(&dir, &format!("moving_plane_{k}.csv"), rep.to_csv().as_bytes())?;
                    results.push(CheckResult {
                        name: format!("moving_plane[{plane}]"),
                        passed: rep.min_slack >= -slack_tol,
                        statistic: rep.min_slack,
                        tolerance: slack_tol,
                        report: to_value(&rep)?,
                    });
                }
            }
        }
    }

    let all_passed = results.iter().all(|r| r.passed);
    let bundle = VerifyBundle {
        command: "verify",
        version: VERSION,
        seed: ctx.seed,
        config: &c,
        solution_mesh_hash: sol.mesh_hash,
        mesh_hash: hash,
        q,
        p,
        checks: results,
        all_passed,
    };
    write_json(&dir, "verify.json", &bundle)?;
    for r in &bundle.checks {
        println!(
            "verify: {} {} (statistic {:.3e}, tolerance {:.1e})",
            r.name,
            if r.passed { "pass" } else { "fail" },
            r.statistic,
            r.tolerance
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ContinuationOutcome<R: Serialize> {
    status: &'static str,
    failure: Option<String>,
    result: Option<R>,
}

pub fn continuation(ctx: &Context, cmd: &ContinuationCmd) -> CliResult<()> {
    let mut c: ContinuationCmd = merge(&[&ctx.file], cmd)?;
    c.domain.resolve()?;
    c.kernel.resolve()?;
    c.solver.resolve(None);
    let mesh = c.domain.build()?;
    let grid = c
        .q_grid
        .get_or_insert_with(|| default_q_grid(mesh.dim(), c.kernel.alpha()))
        .clone();
    let op = assemble(&mesh, &c.domain, &c.kernel)?;
    let cfg = c.solver.config(ctx.seed)?;

    let dir = ctx.out_dir()?;
    let (outcome, failure) = match critical_continuation(&op, &grid, &cfg) {
        Ok(rep) => {
            write_file(&dir, "continuation.csv", rep.to_csv().as_bytes())?;
            println!(
                "continuation: band ratio {:.3e}, extrapolated Q {:.6e} (N_alpha {:.6e}), written to {}",
                rep.band_ratio,
                rep.extrapolated_q_lambda,
                rep.n_alpha,
                dir.display()
            );
            let outcome = ContinuationOutcome {
                status: "converged",
                failure: None,
                result: Some(rep),
            };
            (outcome, None)
        }
        Err(e @ rhls::Error::NotConverged { .. }) => {
            let msg = e.to_string();
            println!("continuation: {msg}");
            let outcome = ContinuationOutcome {
                status: "not_converged",
                failure: Some(msg.clone()),
                result: None,
            };
            (outcome, Some(msg))
        }
        Err(e) => return Err(e.into()),
    };
    let doc = Document {
        command: "continuation",
        version: VERSION,
        seed: ctx.seed,
        config: &c,
        mesh_hash: Some(mesh.content_hash()),
        report: &outcome,
    };
    write_json(&dir, "continuation.json", &doc)?;
    match failure {
        Some(msg) if ctx.strict => Err(CliError::NotConverged(msg)),
        _ => Ok(()),
    }
}

pub fn nonexistence(ctx: &Context, cmd: &NonexistenceCmd) -> CliResult<()> {
    let mut c: NonexistenceCmd = merge(&[&ctx.file], cmd)?;
    c.domain.resolve()?;
    c.kernel.resolve()?;
    c.solver.resolve(Some(5));
    let mesh = c.domain.build()?;
    let q = *c.q.get_or_insert(q_alpha(mesh.dim(), c.kernel.alpha()));
    let op = assemble(&mesh, &c.domain, &c.kernel)?;
    let cfg = c.solver.config(ctx.seed)?;
    let rep = nonexistence_probe(&op, q, &cfg, c.solver.restarts.unwrap_or(5))?;

    let dir = ctx.out_dir()?;
    let doc = Document {
        command: "nonexistence",
        version: VERSION,
        seed: ctx.seed,
        config: &c,
        mesh_hash: Some(mesh.content_hash()),
        report: &rep,
    };
    write_json(&dir, "nonexistence.json", &doc)?;
    println!("nonexistence: {}, written to {}", rep.classification, dir.display());
    Ok(())
}
