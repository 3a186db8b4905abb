//! Solution-level checks: Pohozaev identity, radial symmetry, the
//! moving-plane comparison inequality, blow-up rescaling and concentration.
//!
//! Values of `u` away from the nodes (boundary points, reflections) always
//! come from the integral representation `u(x) = Σ_j w_j k(|x-x_j|) u_j^(p-1)`,
//! never from interpolation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::pohozaev_coefficient;
use crate::error::{invalid, Error, Result};
use crate::geometry::{distance, norm, Mesh, Point, Shape};
use crate::kernel::{self_cell_integral, KernelOperator};

fn check_len(mesh: &Mesh, v: &[f64]) -> Result<()> {
    if v.len() != mesh.len() {
        return Err(Error::MeshMismatch {
            expected: mesh.len(),
            found: v.len(),
        });
    }
    Ok(())
}

fn check_positive(v: &[f64], what: &str) -> Result<()> {
    if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
        return Err(invalid(format!("{what} must be finite and positive (node {i} has {x})")));
    }
    Ok(())
}

/// Kernel exponent of the coupling term in the volume integral.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeExponent {
    /// `|x-y|^(α-n+1)`, the exponent of the coupling term of the equation.
    #[default]
    Shifted,
    /// `|x-y|^(α-n)`.
    Leading,
}

impl std::str::FromStr for VolumeExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shifted" => Ok(VolumeExponent::Shifted),
            "leading" => Ok(VolumeExponent::Leading),
            _ => Err(invalid(format!("unknown volume exponent '{s}' (expected shifted or leading)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PohozaevOptions {
    pub center: Point,
    pub exponent: VolumeExponent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    pub p: f64,
    /// `n/p + (α-n)/2`.
    pub coefficient: f64,
    pub lhs: f64,
    pub volume_term: f64,
    pub boundary_term: f64,
    pub residual: f64,
    pub relative_residual: f64,
    pub exponent: VolumeExponent,
}

/// Terms of the Pohozaev identity
/// `(n/p + (α-n)/2) ∫ u^p = -(λ/2) ∫∫ u^(p-1)(x) u^(p-1)(y) |x-y|^e + (1/p) ∮ (x·ν) u^p`
/// for `u = K[u^(p-1)]`.
pub fn pohozaev_residual(op: &KernelOperator<'_>, u: &[f64], p: f64, options: &PohozaevOptions) -> Result<PohozaevReport> {
    let mesh = op.mesh();
    check_len(mesh, u)?;
    if !(p.is_finite() && p != 0.0) {
        return Err(invalid(format!("exponent p must be finite and nonzero, got {p}")));
    }
    check_positive(u, "u")?;
    let params = *op.params();
    let n = mesh.dim();
    let w = mesh.weights();
    let coefficient = pohozaev_coefficient(n, params.alpha, p);
    let f: Vec<f64> = u.iter().map(|v| v.powf(p - 1.0)).collect();
    let mass: f64 = w.iter().zip(u).map(|(wi, ui)| wi * ui.powf(p)).sum();
    let lhs = coefficient * mass;

    let volume_term = if params.lambda == 0.0 {
        0.0
    } else {
        let e = match options.exponent {
            VolumeExponent::Shifted => params.exponent() + 1.0,
            VolumeExponent::Leading => params.exponent(),
        };
        let k = |r: f64| if r == 0.0 { 0.0 } else { r.powf(e) };
        let nodes = mesh.nodes();
        let rows: Vec<f64> = (0..mesh.len())
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for j in 0..nodes.len() {
                    s += if i == j {
                        self_cell_integral(mesh, i, op.rule(), k) * f[j]
                    } else {
                        w[j] * k(distance(&nodes[i], &nodes[j])) * f[j]
                    };
                }
                w[i] * f[i] * s
            })
            .collect();
        -0.5 * params.lambda * rows.iter().sum::<f64>()
    };

    let b = mesh.boundary();
    let c = options.center;
    let mut flux = 0.0;
    for ((x, nu), wb) in b.nodes.iter().zip(&b.normals).zip(&b.weights) {
        let ub = op.evaluate_at(&f, x)?;
        let support = (x[0] - c[0]) * nu[0] + (x[1] - c[1]) * nu[1] + (x[2] - c[2]) * nu[2];
        flux += wb * support * ub.powf(p);
    }
    let boundary_term = flux / p;
    let residual = lhs - volume_term - boundary_term;
    let scale = lhs.abs() + volume_term.abs() + boundary_term.abs() + f64::MIN_POSITIVE;
    Ok(PohozaevReport {
        p,
        coefficient,
        lhs,
        volume_term,
        boundary_term,
        residual,
        relative_residual: residual.abs() / scale,
        exponent: options.exponent,
    })
}

fn ball_of(mesh: &Mesh) -> Result<(Point, f64)> {
    match mesh.shape() {
        Shape::Ball { center, radius } => Ok((*center, *radius)),
        _ => Err(invalid(format!("this check needs a ball mesh, got {}", mesh.shape_tag()))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// Largest relative deviation `(max-min)/mean` of `u` among nodes at a
    /// common distance from the center.
    pub radial_spread: f64,
    pub monotone_violations: usize,
    /// Number of bins after merging sparse outer bins.
    pub bins: usize,
    pub requested_bins: usize,
    pub bin_mean_radius: Vec<f64>,
    pub bin_mean_value: Vec<f64>,
    pub tol: f64,
}

/// Minimum number of nodes per radial bin.
pub const MIN_BIN_NODES: usize = 5;

/// Radial symmetry and monotone increase of `u` on a ball mesh.
pub fn symmetry_report(mesh: &Mesh, u: &[f64], bins: usize, tol: f64) -> Result<SymmetryReport> {
    let (center, radius) = ball_of(mesh)?;
    check_len(mesh, u)?;
    if bins < 4 {
        return Err(invalid(format!("symmetry report needs at least 4 bins, got {bins}")));
    }
    let mut by_radius: Vec<(f64, f64)> = mesh.nodes().iter().zip(u).map(|(x, v)| (distance(x, &center), *v)).collect();
    by_radius.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    // Nodes at a common radius.
    let mut radial_spread = 0.0f64;
    let mut start = 0;
    while start < by_radius.len() {
        let r0 = by_radius[start].0;
        let mut end = start + 1;
        while end < by_radius.len() && by_radius[end].0 - r0 <= 1e-12 * radius {
            end += 1;
        }
        let group = &by_radius[start..end];
        if group.len() > 1 {
            let (lo, hi) = min_max(group.iter().map(|g| g.1));
            let mean = group.iter().map(|g| g.1).sum::<f64>() / group.len() as f64;
            radial_spread = radial_spread.max((hi - lo) / mean.abs().max(f64::MIN_POSITIVE));
        }
        start = end;
    }

    // Equal-width bins, merging sparse ones outward.
    let width = radius / bins as f64;
    let mut raw: Vec<Vec<(f64, f64)>> = vec![Vec::new(); bins];
    for &(r, v) in &by_radius {
        let k = ((r / width) as usize).min(bins - 1);
        raw[k].push((r, v));
    }
    let mut merged: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut pending: Vec<(f64, f64)> = Vec::new();
    for b in raw {
        pending.extend(b);
        if pending.len() >= MIN_BIN_NODES {
            merged.push(std::mem::take(&mut pending));
        }
    }
    if !pending.is_empty() {
        match merged.last_mut() {
            Some(last) => last.extend(pending),
            None => merged.push(pending),
        }
    }
    let bin_mean_radius: Vec<f64> = merged.iter().map(|b| b.iter().map(|x| x.0).sum::<f64>() / b.len() as f64).collect();
    let bin_mean_value: Vec<f64> = merged.iter().map(|b| b.iter().map(|x| x.1).sum::<f64>() / b.len() as f64).collect();
    let monotone_violations = bin_mean_value.windows(2).filter(|w| w[1] <= w[0] - tol).count();
    Ok(SymmetryReport {
        radial_spread,
        monotone_violations,
        bins: merged.len(),
        requested_bins: bins,
        bin_mean_radius,
        bin_mean_value,
        tol,
    })
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Reflection of `x` through the plane `x_1 = plane`.
pub fn reflect(x: &Point, plane: f64) -> Point {
    [2.0 * plane - x[0], x[1], x[2]]
}

/// How `u` is evaluated at arbitrary points of the ball.
#[derive(Clone, Copy, Default)]
pub enum Evaluation<'a> {
    /// `u(x) = Σ_j w_j |x - x_j|^(α-n) u_j^(p-1)`.
    #[default]
    IntegralRepresentation,
    /// A closed-form field, for inputs that are not solutions.
    Explicit(&'a (dyn Fn(&Point) -> f64 + Sync)),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackSample {
    pub node: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovingPlaneReport {
    pub plane_lambda: f64,
    pub sigma_nodes: usize,
    pub min_slack: f64,
    pub samples: Vec<SlackSample>,
}

impl MovingPlaneReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("node,lhs,rhs,slack\n");
        for r in &self.samples {
            s.push_str(&format!("{},{},{},{}\n", r.node, r.lhs, r.rhs, r.slack));
        }
        s
    }
}

/// Evaluates `slack(x) = [u(x) - u(x^λ)] - RHS(x)` at sampled nodes of
/// `Σ_λ = {x_1 < λ}`, where
/// `RHS(x) = Σ_{y ∈ Σ_λ} w_y (|x-y|^(α-n) - |x^λ-y|^(α-n)) (u(y)^(p-1) - u(y^λ)^(p-1))`.
pub fn moving_plane_check(
    op: &KernelOperator<'_>,
    u: &[f64],
    p: f64,
    plane_lambda: f64,
    sample_count: usize,
    evaluation: Evaluation<'_>,
) -> Result<MovingPlaneReport> {
    let mesh = op.mesh();
    let (center, radius) = ball_of(mesh)?;
    check_len(mesh, u)?;
    check_positive(u, "u")?;
    if op.params().lambda != 0.0 {
        return Err(invalid("moving-plane check needs an operator with lambda = 0"));
    }
    if norm(&center) != 0.0 {
        return Err(invalid("moving-plane check needs a ball centered at the origin"));
    }
    if !(plane_lambda > -radius && plane_lambda < 0.0) {
        return Err(invalid(format!("plane_lambda must lie in (-{radius}, 0), got {plane_lambda}")));
    }
    if sample_count == 0 {
        return Err(invalid("sample_count must be positive"));
    }
    let params = *op.params();
    let a = params.exponent();
    let nodes = mesh.nodes();
    let w = mesh.weights();
    let source: Vec<f64> = u.iter().map(|v| v.powf(p - 1.0)).collect();
    let eval = |x: &Point| -> f64 {
        match evaluation {
            Evaluation::IntegralRepresentation => op.evaluate_unchecked(&source, x),
            Evaluation::Explicit(f) => f(x),
        }
    };
    let sigma: Vec<usize> = (0..mesh.len()).filter(|&i| nodes[i][0] < plane_lambda).collect();
    if sigma.is_empty() {
        return Err(invalid(format!("no nodes lie in the cap x1 < {plane_lambda}")));
    }
    // Difference of u^(p-1) and its reflection over Σ_λ.
    let diff: Vec<f64> = sigma
        .par_iter()
        .map(|&j| {
            let y = nodes[j];
            eval(&y).powf(p - 1.0) - eval(&reflect(&y, plane_lambda)).powf(p - 1.0)
        })
        .collect();
    let picked: Vec<usize> = if sample_count >= sigma.len() {
        sigma.clone()
    } else {
        (0..sample_count).map(|k| sigma[k * sigma.len() / sample_count]).collect()
    };
    let k = |r: f64| if r == 0.0 { 0.0 } else { r.powf(a) };
    let samples: Vec<SlackSample> = picked
        .par_iter()
        .map(|&i| {
            let x = nodes[i];
            let xr = reflect(&x, plane_lambda);
            let lhs = eval(&x) - eval(&xr);
            let rhs: f64 = sigma
                .iter()
                .zip(&diff)
                .map(|(&j, d)| w[j] * (k(distance(&x, &nodes[j])) - k(distance(&xr, &nodes[j]))) * d)
                .sum();
            SlackSample {
                node: i,
                lhs,
                rhs,
                slack: lhs - rhs,
            }
        })
        .collect();
    let min_slack = samples.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min);
    Ok(MovingPlaneReport {
        plane_lambda,
        sigma_nodes: sigma.len(),
        min_slack,
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub q: f64,
    pub alpha: f64,
    /// Node of the maximum; ties go to the lowest index.
    pub argmax: usize,
    pub tie_break: String,
    pub f_max: f64,
    pub mu_q: f64,
    pub rescaled_nodes: Vec<Vec<f64>>,
    pub h_values: Vec<f64>,
    pub fitted_c1: f64,
    pub fitted_c2: f64,
}

/// Rescaling `g(z) = μ^(α/(2-q)) f(μ z + x_q)` with `μ = f(x_q)^(-(2-q)/α)`
/// and envelope fit of `h = g^(q-1)` against `1 + |z|^(α-n)`.
pub fn blowup_rescale(mesh: &Mesh, f: &[f64], q: f64, alpha: f64) -> Result<BlowupReport> {
    check_len(mesh, f)?;
    check_positive(f, "f")?;
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!("q must lie in (0, 1), got {q}")));
    }
    let n = mesh.dim();
    let mut argmax = 0;
    for (i, v) in f.iter().enumerate() {
        if *v > f[argmax] {
            argmax = i;
        }
    }
    let f_max = f[argmax];
    let mu = f_max.powf(-(2.0 - q) / alpha);
    let xq = mesh.nodes()[argmax];
    let a = alpha - n as f64;
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    let mut rescaled = Vec::with_capacity(f.len());
    let mut h_values = Vec::with_capacity(f.len());
    for (x, v) in mesh.nodes().iter().zip(f) {
        let z: Point = [(x[0] - xq[0]) / mu, (x[1] - xq[1]) / mu, (x[2] - xq[2]) / mu];
        let h = (v / f_max).powf(q - 1.0);
        let ratio = h / (1.0 + norm(&z).powf(a));
        c1 = c1.min(ratio);
        c2 = c2.max(ratio);
        rescaled.push(z[..n].to_vec());
        h_values.push(h);
    }
    Ok(BlowupReport {
        q,
        alpha,
        argmax,
        tie_break: "lowest_index".into(),
        f_max,
        mu_q: mu,
        rescaled_nodes: rescaled,
        h_values,
        fitted_c1: c1,
        fitted_c2: c2,
    })
}

/// Fraction of `Σ w f^q` carried by nodes within `ρ d(Ω)` of the maximum of
/// `f`, for each `ρ`.
pub fn concentration_metric(mesh: &Mesh, f: &[f64], q: f64, radius_fracs: &[f64]) -> Result<Vec<f64>> {
    check_len(mesh, f)?;
    if f.is_empty() {
        return Err(invalid("concentration metric of an empty field"));
    }
    if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("concentration metric needs a nonnegative field"));
    }
    if q.is_nan() || q <= 0.0 {
        return Err(invalid(format!("q must be positive, got {q}")));
    }
    let mut argmax = 0;
    for (i, v) in f.iter().enumerate() {
        if *v > f[argmax] {
            argmax = i;
        }
    }
    let mass: Vec<f64> = mesh.weights().iter().zip(f).map(|(w, v)| w * v.powf(q)).collect();
    let total: f64 = mass.iter().sum();
    if total == 0.0 {
        return Err(invalid("concentration metric of the zero field"));
    }
    let d = mesh.diameter();
    let x0 = mesh.nodes()[argmax];
    Ok(radius_fracs
        .iter()
        .map(|rho| {
            let near: f64 = mesh
                .nodes()
                .iter()
                .zip(&mass)
                .filter(|(x, _)| distance(x, &x0) <= rho * d)
                .map(|(_, m)| m)
                .sum();
            near / total
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_ball_mesh, build_interval_mesh};
    use crate::kernel::{KernelParams, SelfCellRule};
    use crate::sharp::{truncated_extremal, ExtremalParams};
    use approx::assert_relative_eq;

    #[test]
    fn critical_coefficient_kills_lhs() {
        let m = build_ball_mesh(2, 1.0, 2).unwrap();
        let op = KernelOperator::assemble(&m, KernelParams::new(2, 3.0, 0.0).unwrap(), SelfCellRule::Zero).unwrap();
        let u: Vec<f64> = m.nodes().iter().map(|x| 1.0 + norm(x)).collect();
        let rep = pohozaev_residual(&op, &u, -4.0, &PohozaevOptions::default()).unwrap();
        assert_eq!(rep.coefficient, 0.0);
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.volume_term, 0.0);
        assert!(rep.boundary_term < 0.0);
        assert_relative_eq!(rep.relative_residual, 1.0);
    }

    #[test]
    fn pohozaev_input_checks() {
        let m = build_interval_mesh(0.0, 1.0, 8).unwrap();
        let op = KernelOperator::assemble(&m, KernelParams::new(1, 3.0, 0.0).unwrap(), SelfCellRule::Zero).unwrap();
        assert!(pohozaev_residual(&op, &[1.0; 8], 0.0, &PohozaevOptions::default()).is_err());
        let mut u = vec![1.0; 8];
        u[2] = 0.0;
        assert!(pohozaev_residual(&op, &u, -0.5, &PohozaevOptions::default()).is_err());
        assert!(pohozaev_residual(&op, &[1.0; 7], -0.5, &PohozaevOptions::default()).is_err());
    }

    #[test]
    fn constant_field_is_not_a_solution() {
        let m = build_ball_mesh(2, 1.0, 2).unwrap();
        let op = KernelOperator::assemble(&m, KernelParams::new(2, 3.0, 0.0).unwrap(), SelfCellRule::default()).unwrap();
        let rep = pohozaev_residual(&op, &vec![1.0; m.len()], -0.5, &PohozaevOptions::default()).unwrap();
        assert!(rep.relative_residual > 0.1, "{rep:?}");
    }

    #[test]
    fn symmetry_of_radial_input() {
        let m = build_ball_mesh(2, 1.0, 3).unwrap();
        let u: Vec<f64> = m.nodes().iter().map(|x| 1.0 + norm(x).powi(2)).collect();
        let rep = symmetry_report(&m, &u, 8, 1e-12).unwrap();
        assert!(rep.radial_spread < 1e-12);
        assert_eq!(rep.monotone_violations, 0);
        assert!(rep.bins >= 4);
    }

    #[test]
    fn symmetry_detects_bump() {
        let m = build_ball_mesh(2, 1.0, 3).unwrap();
        let bump = [0.5, 0.2, 0.0];
        let u: Vec<f64> = m.nodes().iter().map(|x| 1.0 + 5.0 * (-20.0 * distance(x, &bump).powi(2)).exp()).collect();
        let rep = symmetry_report(&m, &u, 8, 1e-12).unwrap();
        assert!(rep.radial_spread > 0.1 || rep.monotone_violations > 0);
        assert!(symmetry_report(&m, &u, 3, 1e-12).is_err());
        let line = build_interval_mesh(-1.0, 1.0, 20).unwrap();
        assert!(symmetry_report(&line, &[1.0; 20], 4, 0.0).is_err());
    }

    #[test]
    fn symmetry_ignores_node_order() {
        let m = build_ball_mesh(2, 1.0, 2).unwrap();
        let u: Vec<f64> = m.nodes().iter().map(|x| 2.0 + norm(x) + 0.01 * x[0]).collect();
        let a = symmetry_report(&m, &u, 4, 1e-9).unwrap();
        let mut perm: Vec<usize> = (0..m.len()).collect();
        perm.reverse();
        let m2 = m.clone();
        let u2: Vec<f64> = perm.iter().map(|&i| u[i]).collect();
        // Reversing both nodes and values leaves the report unchanged.
        let b = {
            let rev: Vec<f64> = u2.iter().rev().cloned().collect();
            symmetry_report(&m2, &rev, 4, 1e-9).unwrap()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn reflection_is_an_involution() {
        let x = [-0.7, 0.3, 0.1];
        assert_eq!(reflect(&reflect(&x, -0.25), -0.25), x);
    }

    #[test]
    fn moving_plane_constant_field() {
        let m = build_ball_mesh(2, 1.0, 2).unwrap();
        let op = KernelOperator::assemble(&m, KernelParams::new(2, 3.0, 0.0).unwrap(), SelfCellRule::Zero).unwrap();
        let c = 2.5;
        let constant = move |_: &Point| c;
        let rep = moving_plane_check(&op, &vec![c; m.len()], -0.5, -0.5, 50, Evaluation::Explicit(&constant)).unwrap();
        assert!(rep.min_slack.abs() < 1e-14);
        assert!(rep.samples.iter().all(|s| s.slack.abs() < 1e-14));
        assert!(moving_plane_check(&op, &vec![c; m.len()], -0.5, -1.0, 5, Evaluation::default()).is_err());
        assert!(moving_plane_check(&op, &vec![c; m.len()], -0.5, 0.1, 5, Evaluation::default()).is_err());
    }

    #[test]
    fn blowup_examples() {
        let m = build_interval_mesh(0.0, 1.0, 10).unwrap();
        let f: Vec<f64> = (0..10).map(|i| 1.0 - 0.05 * (i as f64 - 3.0).abs()).collect();
        let rep = blowup_rescale(&m, &f, 0.4, 3.0).unwrap();
        assert_eq!(rep.argmax, 3);
        assert_eq!(rep.mu_q, 1.0);
        assert_eq!(rep.h_values[3], 1.0);
        assert!(rep.h_values.iter().all(|&h| h >= 1.0));
        assert_relative_eq!(rep.rescaled_nodes[0][0], m.nodes()[0][0] - m.nodes()[3][0]);
        let c = 7.0;
        let cf: Vec<f64> = f.iter().map(|v| c * v).collect();
        let rep2 = blowup_rescale(&m, &cf, 0.4, 3.0).unwrap();
        assert_relative_eq!(rep2.mu_q, rep.mu_q * c.powf(-(2.0 - 0.4) / 3.0), max_relative = 1e-14);
        // Ties resolve to the lowest index.
        let rep3 = blowup_rescale(&m, &[1.0; 10], 0.4, 3.0).unwrap();
        assert_eq!(rep3.argmax, 0);
        assert!(blowup_rescale(&m, &[0.0; 10], 0.4, 3.0).is_err());
    }

    #[test]
    fn concentration_examples() {
        let m = build_interval_mesh(0.0, 1.0, 100).unwrap();
        let frac = concentration_metric(&m, &[1.0; 100], 0.5, &[0.5]).unwrap();
        assert!((frac[0] - 0.5).abs() <= 0.011, "{frac:?}");

        let m = build_interval_mesh(0.0, 1.0, 2000).unwrap();
        let center = [0.5, 0.0, 0.0];
        let mut last = 0.0;
        for k in [4, 16, 100] {
            let p = ExtremalParams::new(1, 3.0, 0.25 / k as f64, center).unwrap();
            let g = truncated_extremal(&m, &p, 0.25);
            let fr = concentration_metric(&m, &g, 0.5, &[0.1]).unwrap()[0];
            assert!(fr > last);
            last = fr;
        }
        assert!(last > 0.9);
        assert!(concentration_metric(&m, &[], 0.5, &[0.1]).is_err());
    }
}
