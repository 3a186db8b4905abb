//! Sharp constant of the reversed HLS inequality, its extremal family and
//! the truncated test-function sweep.

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::beta::beta;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Error, Result};
use crate::geometry::{distance, Mesh, Point};
use crate::kernel::{KernelOperator, KernelParams, SelfCellRule};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SharpConstant {
    pub n: usize,
    pub alpha: f64,
    pub value: f64,
}

fn check_regime(n: usize, alpha: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !alpha.is_finite() || alpha <= n as f64 {
        return Err(invalid(format!("alpha must exceed n (alpha = {alpha}, n = {n})")));
    }
    Ok(())
}

/// Critical exponent `q_α = 2n/(n+α)` of the density.
pub fn q_alpha(n: usize, alpha: f64) -> f64 {
    2.0 * n as f64 / (n as f64 + alpha)
}

/// Conjugate exponent `p_α = 2n/(n-α)` (negative for `α > n`).
pub fn p_alpha(n: usize, alpha: f64) -> f64 {
    2.0 * n as f64 / (n as f64 - alpha)
}

/// `N_α = π^((n-α)/2) Γ(α/2)/Γ((n+α)/2) (Γ(n/2)/Γ(n))^(-α/n)`.
pub fn sharp_constant(n: usize, alpha: f64) -> Result<SharpConstant> {
    check_regime(n, alpha)?;
    let nf = n as f64;
    let log_value = 0.5 * (nf - alpha) * PI.ln() + ln_gamma(0.5 * alpha) - ln_gamma(0.5 * (nf + alpha))
        - (alpha / nf) * (ln_gamma(0.5 * nf) - ln_gamma(nf));
    Ok(SharpConstant {
        n,
        alpha,
        value: log_value.exp(),
    })
}

/// Surface area of the unit sphere in `R^n` (two points for `n = 1`).
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(0.5 * n as f64) / ln_gamma(0.5 * n as f64).exp(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtremalParams {
    pub epsilon: f64,
    pub center: Point,
    pub n: usize,
    pub alpha: f64,
}

impl ExtremalParams {
    pub fn new(n: usize, alpha: f64, epsilon: f64, center: Point) -> Result<Self> {
        check_regime(n, alpha)?;
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(ExtremalParams { epsilon, center, n, alpha })
    }
}

/// `(ε / (ε² + |x - x*|²))^((n+α)/2)`.
pub fn extremal_density(x: &Point, params: &ExtremalParams) -> f64 {
    let r = distance(x, &params.center);
    let e = params.epsilon;
    (e / (e * e + r * r)).powf(0.5 * (params.n as f64 + params.alpha))
}

/// Samples the extremal on the mesh nodes, zero outside `B_R(center)`.
pub fn truncated_extremal(mesh: &Mesh, params: &ExtremalParams, radius: f64) -> Vec<f64> {
    mesh.nodes()
        .iter()
        .map(|x| {
            if distance(x, &params.center) <= radius {
                extremal_density(x, params)
            } else {
                0.0
            }
        })
        .collect()
}

/// Discrete `B(f,g)/(‖f‖_{q_α}‖g‖_{q_α}) - N_α` for an operator with `λ = 0`.
pub fn reversed_hls_check(op: &KernelOperator<'_>, f: &[f64], g: &[f64], sharp: &SharpConstant) -> Result<f64> {
    let p = op.params();
    if p.lambda != 0.0 {
        return Err(invalid("the reversed inequality check needs an operator with lambda = 0"));
    }
    if p.dim != sharp.n || p.alpha != sharp.alpha {
        return Err(invalid("operator and sharp constant disagree on (n, alpha)"));
    }
    let q = q_alpha(p.dim, p.alpha);
    let nf = crate::energy::quasi_norm(op.mesh(), f, q)?;
    let ng = crate::energy::quasi_norm(op.mesh(), g, q)?;
    if nf == 0.0 || ng == 0.0 {
        return Err(invalid("reversed inequality check needs nonzero fields"));
    }
    Ok(op.bilinear(f, g)? / (nf * ng) - sharp.value)
}

/// Radial quadrature used by the sweep. The radial variable is `ρ = tan θ`,
/// and `panels` composite Gauss-Legendre panels of the given order cover
/// the `θ` interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepQuadrature {
    pub panels: usize,
    pub order: usize,
    /// Gauss points on `[0, π]` for the angular average in two dimensions.
    pub angular: usize,
}

impl SweepQuadrature {
    pub fn for_dim(n: usize) -> Self {
        match n {
            1 => SweepQuadrature { panels: 200, order: 10, angular: 0 },
            2 => SweepQuadrature { panels: 60, order: 8, angular: 48 },
            _ => SweepQuadrature { panels: 120, order: 10, angular: 0 },
        }
    }
}

fn gauss(order: usize) -> Result<Vec<(f64, f64)>> {
    let rule = GaussLegendre::new(order).map_err(|_| invalid(format!("Gauss order {order} is too small")))?;
    Ok(rule.as_node_weight_pairs().to_vec())
}

fn composite(a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.len());
    for k in 0..panels {
        let lo = a + h * k as f64;
        for &(x, w) in rule {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

/// Scale-free pieces of the truncated extremal at `t = R/ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncatedMoments {
    /// `∫∫_{B_t × B_t} f_1 f_1 |X-Y|^(α-n)`.
    pub leading: f64,
    /// `∫∫_{B_t × B_t} f_1 f_1 |X-Y|^(α-n+1)`.
    pub shifted: f64,
    /// `∫_{B_t} f_1^{q_α}`.
    pub mass: f64,
}

/// Continuum moments of the extremal `f_1` truncated to `B_t`.
pub fn truncated_moments(n: usize, alpha: f64, t: f64, quad: SweepQuadrature) -> Result<TruncatedMoments> {
    check_regime(n, alpha)?;
    if !(1..=3).contains(&n) {
        return Err(invalid("test-function moments support n = 1, 2, 3"));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!("truncation ratio must be positive, got {t}")));
    }
    let rule = gauss(quad.order)?;
    let top = t.atan();
    let nf = n as f64;
    let a = alpha - nf;
    let pts: Vec<(f64, f64)> = composite(0.0, top, quad.panels, &rule)
        .into_iter()
        .map(|(th, w)| (th.tan(), w * th.sin().powf(nf - 1.0) * th.cos().powf(alpha - 1.0)))
        .collect();
    let angular = if n == 2 {
        composite(0.0, PI, 1, &gauss(quad.angular.max(2))?)
    } else {
        Vec::new()
    };
    // Spherical average of |ρ e - ρ' ω|^b over ω, for both exponents at once.
    let average = |r: f64, s: f64| -> (f64, f64) {
        match n {
            1 => {
                let d = (r - s).abs();
                let p = r + s;
                (d.powf(a) + p.powf(a), d.powf(a + 1.0) + p.powf(a + 1.0))
            }
            2 => {
                let mut lead = 0.0;
                let mut shifted = 0.0;
                for &(phi, w) in &angular {
                    let d = (r * r + s * s - 2.0 * r * s * phi.cos()).max(0.0).sqrt();
                    let v = d.powf(a);
                    lead += w * v;
                    shifted += w * v * d;
                }
                (2.0 * lead, 2.0 * shifted)
            }
            _ => {
                let d = (r - s).abs();
                let p = r + s;
                let c = 2.0 * PI / (r * s);
                (
                    c * (p.powf(a + 2.0) - d.powf(a + 2.0)) / (a + 2.0),
                    c * (p.powf(a + 3.0) - d.powf(a + 3.0)) / (a + 3.0),
                )
            }
        }
    };
    let rows: Vec<(f64, f64)> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let (ri, wi) = pts[i];
            let mut lead = 0.0;
            let mut shifted = 0.0;
            for (j, &(rj, wj)) in pts.iter().enumerate().skip(i) {
                let (l, s) = average(ri, rj);
                let m = if j == i { 1.0 } else { 2.0 };
                lead += m * wj * l;
                shifted += m * wj * s;
            }
            (wi * lead, wi * shifted)
        })
        .collect();
    let omega = sphere_area(n);
    let (lead, shifted) = rows.iter().fold((0.0, 0.0), |acc, r| (acc.0 + r.0, acc.1 + r.1));

    // Mass: whole-space value minus the exterior tail.
    let whole = omega * 0.5 * beta(0.5 * nf, 0.5 * nf);
    let tail: f64 = composite(top, FRAC_PI_2, quad.panels.div_ceil(4).max(1), &rule)
        .iter()
        .map(|&(th, w)| w * (th.sin() * th.cos()).powf(nf - 1.0))
        .sum();
    Ok(TruncatedMoments {
        leading: omega * lead,
        shifted: omega * shifted,
        mass: whole - omega * tail,
    })
}

/// Energy quotient of the extremal at scale `ε` truncated to `B_R`.
pub fn truncated_quotient(n: usize, alpha: f64, lambda: f64, radius: f64, epsilon: f64, quad: SweepQuadrature) -> Result<f64> {
    let m = truncated_moments(n, alpha, radius / epsilon, quad)?;
    let q = q_alpha(n, alpha);
    Ok((m.leading + lambda * epsilon * m.shifted) / m.mass.powf(2.0 / q))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|&v| v.is_nan() || v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Index range of the middle three-fifths of `m` grid points.
pub fn middle_window(m: usize) -> std::ops::Range<usize> {
    let skip = (m as f64 / 5.0).round() as usize;
    skip..m.saturating_sub(skip)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub n: usize,
    pub alpha: f64,
    pub lambda: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub center: Vec<f64>,
    #[serde(rename = "N_alpha")]
    pub n_alpha: f64,
    pub epsilons: Vec<f64>,
    pub quotients: Vec<f64>,
    pub quotient_minus_n: Vec<f64>,
    /// Log-log slope of `quotient - N_α` against `ε` (λ = 0 only).
    pub fitted_slope: Option<f64>,
    pub slope_window: [usize; 2],
    pub dip_detected: bool,
    pub min_quotient: f64,
    /// Discretization tolerance from the mesh calibration at `ε = R/4`.
    pub tol_disc: f64,
    pub calibration_margin: f64,
    pub calibration_mesh_quotient: f64,
    pub calibration_exact_quotient: f64,
    /// Every quotient is at least `N_α - tol_disc`.
    pub lower_bound_respected: bool,
    /// Quotients stopped decreasing before the end of the grid.
    pub noise_floor_reached: bool,
    pub regime: String,
    pub quadrature: SweepQuadrature,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,quotient,quotient_minus_N,dip\n");
        for ((e, q), d) in self.epsilons.iter().zip(&self.quotients).zip(&self.quotient_minus_n) {
            s.push_str(&format!("{e},{q},{d},{}\n", *q < self.n_alpha));
        }
        s
    }
}

/// Energy quotients of the truncated extremal family over a grid of scales.
///
/// The ball `B_R(center)` must lie in the mesh domain. Quotients are
/// evaluated by radial quadrature of the continuum integrals; the mesh is
/// used for the containment check and for calibrating `tol_disc` against
/// the discrete quotient at `ε = R/4`.
pub fn test_function_sweep(
    mesh: &Mesh,
    alpha: f64,
    lambda: f64,
    radius: f64,
    epsilons: &[f64],
    center: Point,
) -> Result<SweepReport> {
    let n = mesh.dim();
    let sharp = sharp_constant(n, alpha)?;
    if !lambda.is_finite() {
        return Err(invalid("lambda must be finite"));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid(format!("truncation radius must be positive, got {radius}")));
    }
    if !mesh.contains_ball(&center, radius) {
        return Err(Error::BallNotContained {
            center: center[..n].to_vec(),
            radius,
        });
    }
    if epsilons.iter().any(|&e| !(e > 0.0 && e < radius)) {
        return Err(invalid("every epsilon must lie in (0, R)"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("epsilons must be strictly decreasing"));
    }
    let window = middle_window(epsilons.len());
    if lambda == 0.0 && window.len() < 3 {
        return Err(invalid("epsilon grid too coarse to fit a slope (need at least 3 points in the middle three-fifths)"));
    }
    let quad = SweepQuadrature::for_dim(n);
    let quotients = epsilons
        .par_iter()
        .map(|&e| truncated_quotient(n, alpha, lambda, radius, e, quad))
        .collect::<Result<Vec<f64>>>()?;
    let quotient_minus_n: Vec<f64> = quotients.iter().map(|q| q - sharp.value).collect();

    // Calibration on the mesh at ε = R/4 with λ = 0.
    let cal_eps = radius / 4.0;
    let op = KernelOperator::assemble(mesh, KernelParams::new(n, alpha, 0.0)?, SelfCellRule::default())?;
    let g = truncated_extremal(mesh, &ExtremalParams::new(n, alpha, cal_eps, center)?, radius);
    let calibration_margin = reversed_hls_check(&op, &g, &g, &sharp)?;
    let exact = truncated_quotient(n, alpha, 0.0, radius, cal_eps, quad)?;
    let mesh_quotient = calibration_margin + sharp.value;
    let tol_disc = (mesh_quotient - exact).abs();

    let fitted_slope = if lambda == 0.0 {
        loglog_slope(&epsilons[window.clone()], &quotient_minus_n[window.clone()])
    } else {
        None
    };
    let min_quotient = quotients.iter().cloned().fold(f64::INFINITY, f64::min);
    let dip_detected = lambda < 0.0 && min_quotient < sharp.value;
    let noise_floor_reached = lambda == 0.0 && quotients.windows(2).any(|w| w[1] >= w[0]);
    let regime = if lambda == 0.0 {
        "tail_only"
    } else if lambda > 0.0 {
        "positive_coupling"
    } else if dip_detected {
        "coupling_term_dominates"
    } else {
        "truncation_tail_dominates"
    };
    Ok(SweepReport {
        n,
        alpha,
        lambda,
        r: radius,
        center: center[..n].to_vec(),
        n_alpha: sharp.value,
        epsilons: epsilons.to_vec(),
        lower_bound_respected: quotients.iter().all(|&q| q >= sharp.value - tol_disc),
        quotients,
        quotient_minus_n,
        fitted_slope,
        slope_window: [window.start, window.end],
        dip_detected,
        min_quotient,
        tol_disc,
        calibration_margin,
        calibration_mesh_quotient: mesh_quotient,
        calibration_exact_quotient: exact,
        noise_floor_reached,
        regime: regime.to_string(),
        quadrature: quad,
    })
}

/// Geometric grid `R/2^k` for `k = first..=last`.
pub fn dyadic_epsilons(radius: f64, first: u32, last: u32) -> Vec<f64> {
    (first..=last).map(|k| radius / 2f64.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_ball_mesh, build_interval_mesh};
    use approx::assert_relative_eq;

    // Independent log-gamma: upward recurrence to x >= 15, then Stirling.
    fn ln_gamma_oracle(mut x: f64) -> f64 {
        let mut shift = 0.0;
        while x < 15.0 {
            shift -= x.ln();
            x += 1.0;
        }
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let series = inv
            * (1.0 / 12.0
                - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
        shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series
    }

    fn sharp_oracle(n: usize, alpha: f64) -> f64 {
        let nf = n as f64;
        (0.5 * (nf - alpha) * PI.ln() + ln_gamma_oracle(alpha / 2.0) - ln_gamma_oracle((nf + alpha) / 2.0)
            - alpha / nf * (ln_gamma_oracle(nf / 2.0) - ln_gamma_oracle(nf)))
        .exp()
    }

    #[test]
    fn closed_forms() {
        let a = sharp_constant(1, 3.0).unwrap().value;
        assert!((a - 1.0 / (2.0 * PI * PI)).abs() / a < 1e-12);
        let b = sharp_constant(2, 4.0).unwrap().value;
        assert!((b - 1.0 / (2.0 * PI)).abs() / b < 1e-12);
        let c = sharp_constant(2, 3.0).unwrap().value;
        assert!((c - 2.0 / (3.0 * PI.sqrt())).abs() / c < 1e-12);
    }

    #[test]
    fn against_independent_gamma() {
        for &(n, alpha) in &[(1, 1.5), (1, 3.0), (1, 7.3), (2, 2.5), (2, 4.0), (3, 3.5), (3, 6.0)] {
            let v = sharp_constant(n, alpha).unwrap().value;
            let o = sharp_oracle(n, alpha);
            assert!((v - o).abs() / o < 1e-12, "n={n} alpha={alpha}: {v} vs {o}");
        }
    }

    #[test]
    fn rejects_outside_regime() {
        assert!(sharp_constant(2, 2.0).is_err());
        assert!(sharp_constant(3, 1.0).is_err());
        assert!(sharp_constant(0, 1.0).is_err());
    }

    #[test]
    fn exponents_are_conjugate() {
        for &(n, alpha) in &[(1, 3.0), (2, 3.0), (3, 5.5)] {
            let q = q_alpha(n, alpha);
            let p = p_alpha(n, alpha);
            assert_relative_eq!(1.0 / p + 1.0 / q, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn extremal_values() {
        let p = ExtremalParams::new(2, 3.0, 1.0, [0.3, -0.2, 0.0]).unwrap();
        assert_eq!(extremal_density(&[0.3, -0.2, 0.0], &p), 1.0);
        let p = ExtremalParams::new(1, 3.0, 2.0, [0.0; 3]).unwrap();
        assert_relative_eq!(extremal_density(&[0.0; 3], &p), 0.25);
        let p = ExtremalParams::new(2, 4.0, 0.5, [0.0; 3]).unwrap();
        let a = extremal_density(&[0.6, 0.8, 0.0], &p);
        let b = extremal_density(&[-1.0, 0.0, 0.0], &p);
        assert_relative_eq!(a, b, max_relative = 1e-14);
        let radii: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        for w in radii.windows(2) {
            assert!(extremal_density(&[w[1], 0.0, 0.0], &p) < extremal_density(&[w[0], 0.0, 0.0], &p));
        }
        assert!(ExtremalParams::new(1, 3.0, 0.0, [0.0; 3]).is_err());
    }

    #[test]
    fn hls_check_on_constant_field() {
        let m = build_interval_mesh(0.0, 1.0, 64).unwrap();
        let op = KernelOperator::assemble(&m, KernelParams::new(1, 3.0, 0.0).unwrap(), SelfCellRule::Subdivide(16)).unwrap();
        let one = vec![1.0; 64];
        let margin = reversed_hls_check(&op, &one, &one, &sharp_constant(1, 3.0).unwrap()).unwrap();
        assert!((margin - (1.0 / 6.0 - 1.0 / (2.0 * PI * PI))).abs() < 1e-4);
        assert!((margin - 0.116).abs() < 1e-3);
        let op = KernelOperator::assemble(&m, KernelParams::new(1, 3.0, -0.1).unwrap(), SelfCellRule::Zero).unwrap();
        assert!(reversed_hls_check(&op, &one, &one, &sharp_constant(1, 3.0).unwrap()).is_err());
    }

    // For n = 1, α = 3 every moment has a closed form in t.
    fn closed_form_quotient(t: f64) -> f64 {
        let at = t.atan();
        let m0 = t / (1.0 + t * t) + at;
        let m2 = at - t / (1.0 + t * t);
        2.0 * m0 * m2 / (2.0 * at).powi(4)
    }

    #[test]
    fn moments_match_closed_form() {
        for t in [1.0, 4.0, 32.0, 256.0, 4096.0] {
            let q = truncated_quotient(1, 3.0, 0.0, t, 1.0, SweepQuadrature::for_dim(1)).unwrap();
            let o = closed_form_quotient(t);
            assert!((q - o).abs() / o < 1e-12, "t={t}: {q} vs {o}");
            let m = truncated_moments(1, 3.0, t, SweepQuadrature::for_dim(1)).unwrap();
            assert!((m.mass - 2.0 * t.atan()).abs() < 1e-12);
        }
        // Whole-space limit reproduces the sharp constant.
        let q = closed_form_quotient(1e9);
        assert_relative_eq!(q, 1.0 / (2.0 * PI * PI), max_relative = 1e-8);
    }

    #[test]
    fn large_t_approaches_sharp_constant_in_higher_dims() {
        for &(n, alpha) in &[(2, 4.0), (3, 5.0)] {
            let near = truncated_quotient(n, alpha, 0.0, 2000.0, 1.0, SweepQuadrature::for_dim(n)).unwrap();
            let s = sharp_constant(n, alpha).unwrap().value;
            assert!(near >= s * (1.0 - 1e-6));
            assert!((near - s) / s < 1e-3, "n={n}: {near} vs {s}");
        }
    }

    #[test]
    fn window_and_slope() {
        assert_eq!(middle_window(6), 1..5);
        assert_eq!(middle_window(5), 1..4);
        assert_eq!(middle_window(2), 0..2);
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert_relative_eq!(loglog_slope(&xs, &ys).unwrap(), 1.5, epsilon = 1e-12);
        assert!(loglog_slope(&xs, &[1.0, -1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn sweep_preconditions() {
        let m = build_interval_mesh(0.0, 1.0, 64).unwrap();
        let eps = dyadic_epsilons(0.25, 3, 8);
        assert!(test_function_sweep(&m, 3.0, 0.0, 0.6, &eps, [0.5, 0.0, 0.0]).is_err());
        assert!(matches!(
            test_function_sweep(&m, 3.0, 0.0, 0.25, &eps, [0.1, 0.0, 0.0]),
            Err(Error::BallNotContained { .. })
        ));
        assert!(test_function_sweep(&m, 3.0, 0.0, 0.25, &[0.01, 0.02, 0.005], [0.5, 0.0, 0.0]).is_err());
        assert!(test_function_sweep(&m, 3.0, 0.0, 0.25, &[0.02, 0.01], [0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn sweep_lambda_zero_interval() {
        let m = build_interval_mesh(0.0, 1.0, 128).unwrap();
        let eps = dyadic_epsilons(0.25, 3, 8);
        let rep = test_function_sweep(&m, 3.0, 0.0, 0.25, &eps, [0.5, 0.0, 0.0]).unwrap();
        assert!(rep.lower_bound_respected);
        assert!(!rep.noise_floor_reached);
        let slope = rep.fitted_slope.unwrap();
        assert!((slope - 1.0).abs() < 0.3, "slope {slope}");
        assert!(rep.tol_disc < 0.05 * rep.n_alpha);
        assert!(rep.to_csv().starts_with("epsilon,quotient,quotient_minus_N,dip\n"));
    }

    #[test]
    fn sweep_strong_coupling_dips_in_the_plane() {
        let m = build_ball_mesh(2, 1.0, 2).unwrap();
        let eps = dyadic_epsilons(0.5, 2, 7);
        let rep = test_function_sweep(&m, 4.0, -1.0, 0.5, &eps, [0.0; 3]).unwrap();
        assert!(rep.dip_detected, "{:?}", rep.quotient_minus_n);
        assert_eq!(rep.regime, "coupling_term_dominates");
    }
}
