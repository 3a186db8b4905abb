//! Solvers for `f^(q-1) = K f` and the associated quotient minimization.
//!
//! Internally every iterate is normalized to `‖g‖_q = 1`, where the
//! equation reads `Q g^(q-1) = K g` with multiplier `Q = B(g, g)`. The raw
//! solution of `f^(q-1) = K f` is recovered as `f = Q^(1/(q-2)) g`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{blowup_rescale, pohozaev_residual, PohozaevOptions, PohozaevReport};
use crate::energy::{energy_quotient, is_critical_q, quasi_norm, DensityField, EnergyReport};
use crate::error::{invalid, Error, Result};
use crate::geometry::{star_check, StarCenter};
use crate::kernel::KernelOperator;
use crate::sharp::{p_alpha, q_alpha, sharp_constant};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    #[default]
    FixedPoint,
    QuotientDescent,
}

impl std::str::FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_point" | "fixed-point" => Ok(SolverMode::FixedPoint),
            "quotient_descent" | "quotient-descent" => Ok(SolverMode::QuotientDescent),
            _ => Err(invalid(format!("unknown solver mode '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol_rel: f64,
    pub damping_theta: f64,
    pub positivity_floor: f64,
    pub mode: SolverMode,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 5000,
            tol_rel: 1e-10,
            damping_theta: 0.5,
            positivity_floor: 1e-12,
            mode: SolverMode::FixedPoint,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_rel > 0.0 && self.tol_rel < 1.0) {
            return Err(invalid(format!("tol_rel must lie in (0, 1), got {}", self.tol_rel)));
        }
        if !(self.damping_theta > 0.0 && self.damping_theta <= 1.0) {
            return Err(invalid(format!("damping_theta must lie in (0, 1], got {}", self.damping_theta)));
        }
        if !(self.positivity_floor > 0.0 && self.positivity_floor < 1.0) {
            return Err(invalid(format!(
                "positivity_floor must lie in (0, 1), got {}",
                self.positivity_floor
            )));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    DivergedUnbounded,
    CollapsedToZero,
    MaxIters,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Converged => "converged",
            SolveStatus::DivergedUnbounded => "diverged_unbounded",
            SolveStatus::CollapsedToZero => "collapsed_to_zero",
            SolveStatus::MaxIters => "max_iters",
        };
        f.write_str(s)
    }
}

/// Summary of one iterate (normalized scaling).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub residual: f64,
    /// Relative sup-norm change from the previous iterate.
    pub change: Option<f64>,
    pub min_f: f64,
    pub max_f: f64,
    pub quotient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub status: SolveStatus,
    pub q: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub iterates_summary: Vec<IterRecord>,
    /// Solution of the raw equation `f^(q-1) = K f`.
    pub final_field: DensityField,
    /// Same solution scaled to `‖g‖_q = 1`.
    pub normalized_field: DensityField,
    /// Multiplier `Q` with `Q g^(q-1) = K g`; `final_field = Q^(1/(q-2)) g`.
    pub multiplier: f64,
    /// `‖f^(q-1) - K f‖_∞ / ‖f^(q-1)‖_∞` for the raw field.
    pub residual: f64,
    pub floor_activations: usize,
}

impl SolveTrace {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn iterations_csv(&self) -> String {
        let mut s = String::from("iter,residual,min_f,max_f,quotient\n");
        for r in &self.iterates_summary {
            s.push_str(&format!("{},{},{},{},{}\n", r.iter, r.residual, r.min_f, r.max_f, r.quotient));
        }
        s
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!("q must lie in (0, 1), got {q}")));
    }
    Ok(())
}

fn normalize(mesh: &crate::geometry::Mesh, g: &mut [f64], q: f64) -> Result<()> {
    let norm = quasi_norm(mesh, g, q)?;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(invalid("cannot normalize a zero or unbounded field"));
    }
    g.iter_mut().for_each(|v| *v /= norm);
    Ok(())
}

fn potential(op: &KernelOperator<'_>, g: &[f64]) -> Result<Vec<f64>> {
    let kg = op.apply_unchecked(g);
    if let Some((node, &value)) = kg.iter().enumerate().find(|(_, v)| v.is_nan() || **v <= 0.0) {
        return Err(Error::NonPositivePotential { node, value });
    }
    Ok(kg)
}

/// `‖Q g^(q-1) - K g‖_∞ / ‖Q g^(q-1)‖_∞`.
fn relative_residual(g: &[f64], kg: &[f64], q: f64, mult: f64) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (gi, ki) in g.iter().zip(kg) {
        let lhs = mult * gi.powf(q - 1.0);
        num = num.max((lhs - ki).abs());
        den = den.max(lhs.abs());
    }
    num / den
}

/// Equation residual `‖f^(q-1) - K f‖_∞ / ‖f^(q-1)‖_∞` of a raw field.
pub fn equation_residual(op: &KernelOperator<'_>, f: &[f64], q: f64) -> Result<f64> {
    let kf = op.apply(f)?;
    Ok(relative_residual(f, &kf, q, 1.0))
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

const DIVERGENCE_WINDOW: usize = 10;

/// Damped geometric fixed-point iteration
/// `g ← g^(1-θ) (K g)^(θ/(q-1))`, renormalized after each step.
pub fn solve_fixed_point(op: &KernelOperator<'_>, q: f64, config: &SolverConfig, f0: Option<&DensityField>) -> Result<SolveTrace> {
    check_q(q)?;
    config.validate()?;
    let mesh = op.mesh();
    let n = mesh.len();
    let mut g: Vec<f64> = match f0 {
        Some(f) => {
            if f.len() != n {
                return Err(Error::MeshMismatch { expected: n, found: f.len() });
            }
            if f.values().iter().any(|&v| v <= 0.0) {
                return Err(invalid("initial field must be strictly positive"));
            }
            f.values().to_vec()
        }
        None => vec![1.0; n],
    };
    normalize(mesh, &mut g, q)?;
    let theta = config.damping_theta;
    let floor = config.positivity_floor;
    let w = mesh.weights();

    let mut records = Vec::new();
    let mut floor_activations = 0usize;
    let mut high_run = 0usize;
    let mut low_run = 0usize;
    let mut last_change: Option<f64> = None;
    let mut status = SolveStatus::MaxIters;
    let mut kg = potential(op, &g)?;
    let mut mult = w.iter().zip(&g).zip(&kg).map(|((wi, gi), ki)| wi * gi * ki).sum::<f64>();

    for iter in 0..=config.max_iters {
        let residual = relative_residual(&g, &kg, q, mult);
        let (lo, hi) = min_max(&g);
        records.push(IterRecord {
            iter,
            residual,
            change: last_change,
            min_f: lo,
            max_f: hi,
            quotient: mult,
        });
        if let Some(c) = last_change {
            if c < config.tol_rel && residual < 10.0 * config.tol_rel {
                status = SolveStatus::Converged;
                break;
            }
        }
        high_run = if hi > 1.0 / floor || !hi.is_finite() { high_run + 1 } else { 0 };
        if high_run >= DIVERGENCE_WINDOW {
            status = SolveStatus::DivergedUnbounded;
            break;
        }
        if low_run >= DIVERGENCE_WINDOW {
            status = SolveStatus::CollapsedToZero;
            break;
        }
        if iter == config.max_iters {
            break;
        }

        let mut next: Vec<f64> = g
            .iter()
            .zip(&kg)
            .map(|(gi, ki)| gi.powf(1.0 - theta) * ki.powf(theta / (q - 1.0)))
            .collect();
        normalize(mesh, &mut next, q)?;
        let (raw_lo, _) = min_max(&next);
        low_run = if raw_lo < floor * floor { low_run + 1 } else { 0 };
        for v in next.iter_mut() {
            if *v < floor {
                *v = floor;
                floor_activations += 1;
            }
        }
        let (_, next_hi) = min_max(&next);
        let diff = g.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        last_change = Some(diff / next_hi);
        g = next;
        kg = potential(op, &g)?;
        mult = w.iter().zip(&g).zip(&kg).map(|((wi, gi), ki)| wi * gi * ki).sum::<f64>();
    }

    let scale = mult.powf(1.0 / (q - 2.0));
    let raw: Vec<f64> = g.iter().map(|v| v * scale).collect();
    let kf = op.apply_unchecked(&raw);
    let residual = relative_residual(&raw, &kf, q, 1.0);
    let p = op.params();
    Ok(SolveTrace {
        status,
        q,
        lambda: p.lambda,
        alpha: p.alpha,
        iterations: records.len() - 1,
        iterates_summary: records,
        final_field: DensityField::new(raw)?,
        normalized_field: DensityField::new(g)?,
        multiplier: mult,
        residual,
        floor_activations,
    })
}

fn log_uniform_start(n: usize, seed: u64, spread: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (spread * rng.random_range(-1.0..1.0)).exp()).collect()
}

/// Seeded start for restart `k`: the constant field for `k = 0`, otherwise
/// a log-uniform random field.
pub fn restart_field(n: usize, seed: u64, k: usize) -> Vec<f64> {
    if k == 0 {
        vec![1.0; n]
    } else {
        log_uniform_start(n, seed.wrapping_add(k as u64), 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentRun {
    pub restart: usize,
    pub quotient: f64,
    pub iterations: usize,
    /// `max_i |g_i^(1-q) (Kg)_i / Q - 1|` at the end of the run.
    pub stationarity: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub fixed_point_status: SolveStatus,
    pub fixed_point_quotient: f64,
    pub fixed_point_residual: f64,
    /// Sup-norm distance between the descent minimizer and the fixed point,
    /// both normalized to `‖g‖_q = 1`.
    pub sup_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub energy: EnergyReport,
    /// Minimizer normalized to `‖g‖_q = 1`.
    pub minimizer: DensityField,
    pub runs: Vec<DescentRun>,
    pub best_restart: usize,
    pub cross_check: CrossCheck,
    pub converged: bool,
}

fn descend(op: &KernelOperator<'_>, q: f64, config: &SolverConfig, start: Vec<f64>) -> Result<(Vec<f64>, f64, usize, f64, bool)> {
    let mesh = op.mesh();
    let w = mesh.weights();
    let mut g = start;
    normalize(mesh, &mut g, q)?;
    let quotient_of = |g: &[f64]| -> Result<(f64, Vec<f64>)> {
        let kg = potential(op, g)?;
        let norm = quasi_norm(mesh, g, q)?;
        let b: f64 = w.iter().zip(g).zip(&kg).map(|((wi, gi), ki)| wi * gi * ki).sum();
        Ok((b / (norm * norm), kg))
    };
    let (mut e, mut kg) = quotient_of(&g)?;
    let mut eta = 0.5;
    let mut stationarity = f64::INFINITY;
    for iter in 0..config.max_iters {
        let gamma: Vec<f64> = g
            .iter()
            .zip(&kg)
            .map(|(gi, ki)| gi.powf(1.0 - q) * ki / e - 1.0)
            .collect();
        stationarity = gamma.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if stationarity < config.tol_rel {
            return Ok((g, e, iter, stationarity, true));
        }
        let slope: f64 = w.iter().zip(&g).zip(&gamma).map(|((wi, gi), c)| wi * gi.powf(q) * c * c).sum::<f64>() * 2.0 * e;
        loop {
            let mut trial: Vec<f64> = g.iter().zip(&gamma).map(|(gi, c)| gi * (-eta * c).exp()).collect();
            normalize(mesh, &mut trial, q)?;
            let (et, kt) = quotient_of(&trial)?;
            if et <= e - 1e-4 * eta * slope {
                g = trial;
                e = et;
                kg = kt;
                eta = (eta * 1.5).min(4.0);
                break;
            }
            eta *= 0.5;
            if eta < 1e-14 {
                return Ok((g, e, iter, stationarity, false));
            }
        }
    }
    Ok((g, e, config.max_iters, stationarity, false))
}

/// Minimizes `B(f,f)/‖f‖_q²` over positive fields by multiplicative
/// descent `f ← f exp(-η γ)` with backtracking on the quotient.
pub fn minimize_subcritical(op: &KernelOperator<'_>, q: f64, config: &SolverConfig, restarts: usize) -> Result<MinimizeReport> {
    minimize_subcritical_from(op, q, config, restarts, None)
}

/// As [`minimize_subcritical`], optionally replacing the constant start of
/// restart 0 by `start`.
pub fn minimize_subcritical_from(
    op: &KernelOperator<'_>,
    q: f64,
    config: &SolverConfig,
    restarts: usize,
    start: Option<&DensityField>,
) -> Result<MinimizeReport> {
    config.validate()?;
    let p = op.params();
    let qa = q_alpha(p.dim, p.alpha);
    if !(q > 0.0 && q < qa) {
        return Err(invalid(format!("q must lie in (0, q_alpha) = (0, {qa}), got {q}")));
    }
    if !op.lambda_admissible() {
        return Err(invalid(format!(
            "lambda = {} is not admissible: need lambda > -1/d = {}",
            p.lambda,
            -1.0 / op.mesh().diameter()
        )));
    }
    let n = op.len();
    let restarts = restarts.max(1);
    let runs: Vec<(Vec<f64>, f64, usize, f64, bool)> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let init = match (k, start) {
                (0, Some(f)) => f.values().to_vec(),
                _ => restart_field(n, config.seed, k),
            };
            descend(op, q, config, init)
        })
        .collect::<Result<_>>()?;
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let minimizer = runs[best].0.clone();
    let energy = energy_quotient(op, &minimizer, q)?;
    let fp_config = SolverConfig {
        mode: SolverMode::FixedPoint,
        ..*config
    };
    let start_field = DensityField::new(minimizer.clone())?;
    let fp = solve_fixed_point(op, q, &fp_config, Some(&start_field))?;
    let sup_difference = fp
        .normalized_field
        .values()
        .iter()
        .zip(&minimizer)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    Ok(MinimizeReport {
        energy,
        minimizer: DensityField::new(minimizer)?,
        converged: runs[best].4,
        runs: runs
            .iter()
            .enumerate()
            .map(|(k, r)| DescentRun {
                restart: k,
                quotient: r.1,
                iterations: r.2,
                stationarity: r.3,
                converged: r.4,
            })
            .collect(),
        best_restart: best,
        cross_check: CrossCheck {
            fixed_point_status: fp.status,
            fixed_point_quotient: fp.multiplier,
            fixed_point_residual: fp.residual,
            sup_difference,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRecord {
    pub q: f64,
    #[serde(rename = "Q_lambda_q")]
    pub q_lambda_q: f64,
    /// Extremes of the normalized solution `f_q` (`‖f_q‖_q = 1`).
    pub min_f: f64,
    pub max_f: f64,
    pub residual: f64,
    pub iterations: usize,
    pub blowup_mu: f64,
    pub blowup_c1: f64,
    pub blowup_c2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub lambda: f64,
    pub alpha: f64,
    pub n: usize,
    pub q_alpha: f64,
    #[serde(rename = "N_alpha")]
    pub n_alpha: f64,
    pub records: Vec<ContinuationRecord>,
    /// `max_q max f_q / min_q min f_q`.
    pub band_ratio: f64,
    /// Quadratic extrapolation of the last three `Q_{λ,q}` to `q_α`.
    pub extrapolated_q_lambda: f64,
    /// Largest `C2/C1` of the blow-up envelope across the grid.
    pub max_envelope_ratio: f64,
}

impl ContinuationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("q,Q_lambda_q,min_f,max_f,residual\n");
        for r in &self.records {
            s.push_str(&format!("{},{},{},{},{}\n", r.q, r.q_lambda_q, r.min_f, r.max_f, r.residual));
        }
        s
    }
}

/// `q_α k/10` for `k = 1..9`, then `q_α - 10⁻²` and `q_α - 10⁻³`.
pub fn default_q_grid(n: usize, alpha: f64) -> Vec<f64> {
    let qa = q_alpha(n, alpha);
    let mut grid: Vec<f64> = (1..10).map(|k| qa * k as f64 / 10.0).collect();
    for tail in [qa - 1e-2, qa - 1e-3] {
        if tail > *grid.last().expect("nonempty") {
            grid.push(tail);
        }
    }
    grid
}

/// Value at `x` of the parabola through three points.
pub fn quadratic_extrapolate(xs: [f64; 3], ys: [f64; 3], x: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..3 {
        let mut l = 1.0;
        for j in 0..3 {
            if j != i {
                l *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        total += ys[i] * l;
    }
    total
}

/// Solves along an increasing `q` grid toward `q_α`, warm-starting each
/// solve from the previous solution.
pub fn critical_continuation(op: &KernelOperator<'_>, q_grid: &[f64], config: &SolverConfig) -> Result<ContinuationReport> {
    config.validate()?;
    let p = *op.params();
    let qa = q_alpha(p.dim, p.alpha);
    let d = op.mesh().diameter();
    if !(p.lambda < 0.0 && p.lambda > -1.0 / d) {
        return Err(invalid(format!("continuation needs lambda in (-1/d, 0) = ({}, 0), got {}", -1.0 / d, p.lambda)));
    }
    if q_grid.len() < 3 {
        return Err(invalid("continuation grid needs at least three points"));
    }
    if q_grid.windows(2).any(|w| w[1] <= w[0]) || q_grid[0] <= 0.0 || *q_grid.last().expect("nonempty") >= qa {
        return Err(invalid(format!("q grid must be strictly increasing inside (0, q_alpha = {qa})")));
    }
    let mut records = Vec::with_capacity(q_grid.len());
    let mut warm: Option<DensityField> = None;
    for &q in q_grid {
        let trace = solve_fixed_point(op, q, config, warm.as_ref())?;
        if !trace.converged() {
            return Err(Error::NotConverged {
                q,
                status: trace.status.to_string(),
            });
        }
        let g = trace.normalized_field.values();
        let (lo, hi) = min_max(g);
        let blow = blowup_rescale(op.mesh(), g, q, p.alpha)?;
        records.push(ContinuationRecord {
            q,
            q_lambda_q: trace.multiplier,
            min_f: lo,
            max_f: hi,
            residual: trace.residual,
            iterations: trace.iterations,
            blowup_mu: blow.mu_q,
            blowup_c1: blow.fitted_c1,
            blowup_c2: blow.fitted_c2,
        });
        warm = Some(trace.normalized_field);
    }
    let top = records.iter().map(|r| r.max_f).fold(f64::NEG_INFINITY, f64::max);
    let bottom = records.iter().map(|r| r.min_f).fold(f64::INFINITY, f64::min);
    let k = records.len();
    let last: Vec<&ContinuationRecord> = records[k - 3..].iter().collect();
    let extrapolated = quadratic_extrapolate(
        [last[0].q, last[1].q, last[2].q],
        [last[0].q_lambda_q, last[1].q_lambda_q, last[2].q_lambda_q],
        qa,
    );
    let max_envelope_ratio = records.iter().map(|r| r.blowup_c2 / r.blowup_c1).fold(0.0f64, f64::max);
    Ok(ContinuationReport {
        lambda: p.lambda,
        alpha: p.alpha,
        n: p.dim,
        q_alpha: qa,
        n_alpha: sharp_constant(p.dim, p.alpha)?.value,
        records,
        band_ratio: top / bottom,
        extrapolated_q_lambda: extrapolated,
        max_envelope_ratio,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeClassification {
    NoConvergenceObserved,
    ConvergedButPohozaevViolated,
    ConvergedAndPohozaevPassed,
}

impl std::fmt::Display for ProbeClassification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ProbeClassification::NoConvergenceObserved => "no_convergence_observed",
            ProbeClassification::ConvergedButPohozaevViolated => "converged_but_pohozaev_violated",
            ProbeClassification::ConvergedAndPohozaevPassed => "converged_and_pohozaev_passed",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRun {
    pub restart: usize,
    pub status: SolveStatus,
    pub iterations: usize,
    pub residual: f64,
    pub multiplier: f64,
    pub min_f: f64,
    pub max_f: f64,
    pub pohozaev: Option<PohozaevReport>,
    pub classification: ProbeClassification,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceReport {
    pub q: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub n: usize,
    pub in_theorem_regime: bool,
    pub star_min_support: f64,
    pub pohozaev_threshold: f64,
    pub runs: Vec<ProbeRun>,
    pub classification: ProbeClassification,
    /// A Pohozaev-consistent solution inside the theorem regime; calls for
    /// mesh refinement.
    pub anomaly: bool,
}

/// Relative Pohozaev residual below which a converged field counts as
/// satisfying the identity.
pub const POHOZAEV_PASS_THRESHOLD: f64 = 1e-2;

/// Runs the fixed-point solver from several starts and checks every
/// converged field against the Pohozaev identity.
pub fn nonexistence_probe(op: &KernelOperator<'_>, q: f64, config: &SolverConfig, restarts: usize) -> Result<NonexistenceReport> {
    check_q(q)?;
    config.validate()?;
    let mesh = op.mesh();
    let center = StarCenter::default();
    let star = star_check(mesh, center)?;
    if !star.star_shaped {
        return Err(Error::NotStarShaped {
            center: center.0[..mesh.dim()].to_vec(),
            min_support: star.min_support,
        });
    }
    let params = *op.params();
    let qa = q_alpha(params.dim, params.alpha);
    let critical = is_critical_q(params.dim, params.alpha, q);
    let in_theorem_regime = params.lambda >= 0.0 && (critical || q > qa);
    let p = if critical {
        p_alpha(params.dim, params.alpha)
    } else {
        q / (q - 1.0)
    };
    let n = op.len();
    let restarts = restarts.max(1);
    let runs: Vec<ProbeRun> = (0..restarts)
        .into_par_iter()
        .map(|k| -> Result<ProbeRun> {
            let start = DensityField::new(restart_field(n, config.seed, k))?;
            let trace = solve_fixed_point(op, q, config, Some(&start))?;
            let f = trace.final_field.values();
            let (lo, hi) = min_max(f);
            let (pohozaev, classification) = if trace.converged() {
                let u: Vec<f64> = f.iter().map(|v| v.powf(q - 1.0)).collect();
                let rep = pohozaev_residual(op, &u, p, &PohozaevOptions::default())?;
                let class = if rep.relative_residual < POHOZAEV_PASS_THRESHOLD {
                    ProbeClassification::ConvergedAndPohozaevPassed
                } else {
                    ProbeClassification::ConvergedButPohozaevViolated
                };
                (Some(rep), class)
            } else {
                (None, ProbeClassification::NoConvergenceObserved)
            };
            Ok(ProbeRun {
                restart: k,
                status: trace.status,
                iterations: trace.iterations,
                residual: trace.residual,
                multiplier: trace.multiplier,
                min_f: lo,
                max_f: hi,
                pohozaev,
                classification,
            })
        })
        .collect::<Result<_>>()?;
    let classification = runs
        .iter()
        .map(|r| r.classification)
        .max_by_key(|c| match c {
            ProbeClassification::NoConvergenceObserved => 0,
            ProbeClassification::ConvergedButPohozaevViolated => 1,
            ProbeClassification::ConvergedAndPohozaevPassed => 2,
        })
        .expect("at least one restart");
    Ok(NonexistenceReport {
        q,
        lambda: params.lambda,
        alpha: params.alpha,
        n: params.dim,
        in_theorem_regime,
        star_min_support: star.min_support,
        pohozaev_threshold: POHOZAEV_PASS_THRESHOLD,
        anomaly: in_theorem_regime && classification == ProbeClassification::ConvergedAndPohozaevPassed,
        runs,
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_ball_mesh, build_box_mesh, build_interval_mesh};
    use crate::kernel::{KernelParams, SelfCellRule};
    use approx::assert_relative_eq;

    fn interval_op(mesh: &crate::geometry::Mesh, lambda: f64) -> KernelOperator<'_> {
        KernelOperator::assemble(mesh, KernelParams::new(1, 3.0, lambda).unwrap(), SelfCellRule::default()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig { damping_theta: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SolverConfig { tol_rel: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn two_node_fixed_point_is_constant() {
        let m = build_interval_mesh(0.0, 2.0, 2).unwrap();
        let op = KernelOperator::assemble(&m, KernelParams::new(1, 3.0, 0.0).unwrap(), SelfCellRule::Zero).unwrap();
        for q in [0.1, 0.5, 0.9] {
            let t = solve_fixed_point(&op, q, &SolverConfig::default(), None).unwrap();
            assert!(t.converged());
            for v in t.final_field.values() {
                assert_relative_eq!(*v, 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn single_cell_zero_rule_fails() {
        let m = build_interval_mesh(0.0, 1.0, 1).unwrap();
        let op = KernelOperator::assemble(&m, KernelParams::new(1, 3.0, 0.0).unwrap(), SelfCellRule::Zero).unwrap();
        let r = solve_fixed_point(&op, 0.25, &SolverConfig::default(), None);
        assert!(matches!(r, Err(Error::NonPositivePotential { node: 0, .. })));
    }

    #[test]
    fn rejects_bad_exponent() {
        let m = build_interval_mesh(0.0, 1.0, 8).unwrap();
        let op = interval_op(&m, 0.0);
        assert!(solve_fixed_point(&op, 1.0, &SolverConfig::default(), None).is_err());
        assert!(solve_fixed_point(&op, 0.0, &SolverConfig::default(), None).is_err());
    }

    #[test]
    fn interval_subcritical_converges() {
        let m = build_interval_mesh(0.0, 1.0, 64).unwrap();
        for lambda in [0.0, -0.5] {
            let op = interval_op(&m, lambda);
            let t = solve_fixed_point(&op, 0.25, &SolverConfig::default(), None).unwrap();
            assert!(t.converged(), "{:?}", t.status);
            assert!(t.residual < 1e-8);
            assert_eq!(t.floor_activations, 0);
            let last = t.iterates_summary.last().unwrap();
            assert!(last.residual < 10.0 * 1e-10);
            // Raw and normalized scalings agree through the multiplier.
            let s = t.multiplier.powf(1.0 / (0.25 - 2.0));
            for (f, g) in t.final_field.values().iter().zip(t.normalized_field.values()) {
                assert_relative_eq!(*f, s * g, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn scaling_equivariance() {
        let m = build_interval_mesh(0.0, 1.0, 32).unwrap();
        let op = interval_op(&m, -0.3);
        let q = 0.3;
        let t = solve_fixed_point(&op, q, &SolverConfig::default(), None).unwrap();
        let f = t.final_field.values();
        let c = 2.7;
        let cf: Vec<f64> = f.iter().map(|v| c * v).collect();
        let kcf = op.apply(&cf).unwrap();
        for (x, k) in cf.iter().zip(&kcf) {
            assert_relative_eq!(x.powf(q - 1.0), c.powf(q - 2.0) * k, max_relative = 1e-8);
        }
    }

    #[test]
    fn descent_agrees_with_fixed_point() {
        let m = build_interval_mesh(0.0, 1.0, 32).unwrap();
        let op = interval_op(&m, -0.5);
        let cfg = SolverConfig { max_iters: 20000, ..Default::default() };
        let rep = minimize_subcritical(&op, 0.25, &cfg, 3).unwrap();
        assert!(rep.cross_check.fixed_point_status == SolveStatus::Converged);
        assert!(rep.cross_check.sup_difference < 1e-5, "{:?}", rep.cross_check);
        let qs: Vec<f64> = rep.runs.iter().map(|r| r.quotient).collect();
        for q in &qs {
            assert!((q - qs[0]).abs() < 1e-6 * qs[0], "{qs:?}");
        }
        // Minimizer optimality against random positive perturbations.
        let g = rep.minimizer.values();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let f: Vec<f64> = g.iter().map(|v| v * (1.0 + 0.1 * rng.random_range(-0.5..1.0))).collect();
            let e = energy_quotient(&op, &f, 0.25).unwrap();
            assert!(e.quotient >= rep.energy.quotient - 1e-12);
        }
    }

    #[test]
    fn descent_rejects_inadmissible_lambda() {
        let m = build_interval_mesh(0.0, 1.0, 16).unwrap();
        let op = interval_op(&m, -1.5);
        assert!(minimize_subcritical(&op, 0.25, &SolverConfig::default(), 1).is_err());
        let op = interval_op(&m, 0.0);
        assert!(minimize_subcritical(&op, 0.5, &SolverConfig::default(), 1).is_err());
    }

    #[test]
    fn grid_and_extrapolation() {
        let g = default_q_grid(1, 3.0);
        assert_eq!(g.len(), 11);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_relative_eq!(*g.last().unwrap(), 0.499, epsilon = 1e-15);
        let y = |x: f64| 2.0 - 3.0 * x + 0.5 * x * x;
        assert_relative_eq!(quadratic_extrapolate([0.1, 0.2, 0.4], [y(0.1), y(0.2), y(0.4)], 0.5), y(0.5), epsilon = 1e-12);
    }

    #[test]
    fn continuation_preconditions() {
        let m = build_interval_mesh(0.0, 1.0, 16).unwrap();
        let op = interval_op(&m, 0.0);
        assert!(critical_continuation(&op, &[0.1, 0.2, 0.3], &SolverConfig::default()).is_err());
        let op = interval_op(&m, -0.5);
        assert!(critical_continuation(&op, &[0.1, 0.3, 0.2], &SolverConfig::default()).is_err());
        assert!(critical_continuation(&op, &[0.1, 0.2, 0.5], &SolverConfig::default()).is_err());
    }

    #[test]
    fn continuation_moderate_grid() {
        let m = build_interval_mesh(0.0, 1.0, 32).unwrap();
        let op = interval_op(&m, -0.5);
        let cfg = SolverConfig { max_iters: 20000, ..Default::default() };
        let rep = critical_continuation(&op, &[0.1, 0.2, 0.3, 0.35, 0.4], &cfg).unwrap();
        assert_eq!(rep.records.len(), 5);
        // The multiplier decreases along the grid.
        assert!(rep.records.windows(2).all(|w| w[1].q_lambda_q < w[0].q_lambda_q));
        assert!(rep.to_csv().starts_with("q,Q_lambda_q,min_f,max_f,residual\n"));
    }

    #[test]
    fn probe_refuses_non_star_center() {
        // The box [1,2]^2 is not star-shaped about the origin.
        let m = build_box_mesh(2, &[1.0, 1.0], &[2.0, 2.0], &[4, 4]).unwrap();
        let op = KernelOperator::assemble(&m, KernelParams::new(2, 3.0, 0.0).unwrap(), SelfCellRule::Zero).unwrap();
        let r = nonexistence_probe(&op, 0.8, &SolverConfig::default(), 1);
        assert!(matches!(r, Err(Error::NotStarShaped { .. })));
    }

    #[test]
    fn probe_control_run_converges() {
        let m = build_ball_mesh(2, 1.0, 2).unwrap();
        let op = KernelOperator::assemble(&m, KernelParams::new(2, 3.0, -0.5).unwrap(), SelfCellRule::default()).unwrap();
        let cfg = SolverConfig { max_iters: 20000, ..Default::default() };
        let rep = nonexistence_probe(&op, 0.8, &cfg, 2).unwrap();
        assert!(!rep.in_theorem_regime);
        assert!(rep.runs.iter().any(|r| r.status == SolveStatus::Converged));
        assert!(!rep.anomaly);
    }

    #[test]
    fn restart_fields_are_seeded() {
        assert_eq!(restart_field(4, 7, 0), vec![1.0; 4]);
        assert_eq!(restart_field(4, 7, 2), restart_field(4, 7, 2));
        assert_ne!(restart_field(4, 7, 1), restart_field(4, 7, 2));
        assert!(restart_field(50, 3, 1).iter().all(|&v| v > 0.0));
    }
}
