//! Quasi-norms and energy quotients.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::Mesh;
use crate::kernel::KernelOperator;
use crate::sharp::{q_alpha, sharp_constant};

/// Nonnegative field sampled at the mesh nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!("density values must be finite and nonnegative (node {i} has {v})")));
        }
        Ok(DensityField { values })
    }

    pub fn constant(len: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; len])
    }

    pub fn for_mesh(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::MeshMismatch {
                expected: mesh.len(),
                found: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }
}

/// `(Σ_j w_j f_j^q)^(1/q)`.
pub fn quasi_norm(mesh: &Mesh, f: &[f64], q: f64) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(invalid(format!("quasi-norm exponent must be positive, got {q}")));
    }
    if f.len() != mesh.len() {
        return Err(Error::MeshMismatch {
            expected: mesh.len(),
            found: f.len(),
        });
    }
    if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("quasi-norm needs finite nonnegative values"));
    }
    let s: f64 = mesh.weights().iter().zip(f).map(|(w, v)| w * v.powf(q)).sum();
    Ok(s.powf(1.0 / q))
}

fn exact_ratio(x: f64) -> Option<Ratio<i64>> {
    let r = Ratio::<i64>::approximate_float(x)?;
    (*r.numer() as f64 / *r.denom() as f64 == x).then_some(r)
}

fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// True when `q` is the critical exponent `2n/(n+α)`.
///
/// For rational `α` the comparison is made against the correctly rounded
/// value of the exact fraction; otherwise a `1e-12` tolerance applies.
pub fn is_critical_q(n: usize, alpha: f64, q: f64) -> bool {
    match exact_ratio(alpha) {
        Some(a) => {
            let nn = Ratio::from_integer(n as i64);
            let crit = nn * 2 / (nn + a);
            q == ratio_to_f64(crit) || q == q_alpha(n, alpha)
        }
        None => (q - q_alpha(n, alpha)).abs() <= 1e-12,
    }
}

/// True when `p` is the conjugate critical exponent `2n/(n-α)`.
pub fn is_critical_p(n: usize, alpha: f64, p: f64) -> bool {
    match exact_ratio(alpha) {
        Some(a) if a != Ratio::from_integer(n as i64) => {
            let nn = Ratio::from_integer(n as i64);
            let crit = nn * 2 / (nn - a);
            if p == ratio_to_f64(crit) || p == crate::sharp::p_alpha(n, alpha) {
                return true;
            }
            // p given as q/(q-1) from a critical q.
            match exact_ratio(p) {
                Some(pr) => pr == crit,
                None => false,
            }
        }
        _ => (p - crate::sharp::p_alpha(n, alpha)).abs() <= 1e-12 * p.abs().max(1.0),
    }
}

/// `n/p + (α-n)/2`, exactly zero at the critical exponent.
pub fn pohozaev_coefficient(n: usize, alpha: f64, p: f64) -> f64 {
    if is_critical_p(n, alpha, p) {
        0.0
    } else {
        n as f64 / p + 0.5 * (alpha - n as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub numerator: f64,
    pub qnorm: f64,
    pub quotient: f64,
    pub q: f64,
    pub lambda: f64,
    #[serde(rename = "N_alpha")]
    pub n_alpha: f64,
    /// `quotient - N_alpha`, filled at the critical exponent.
    pub margin: Option<f64>,
}

/// `B(f,f) / ‖f‖_q²` for the operator's coupling.
pub fn energy_quotient(op: &KernelOperator<'_>, f: &[f64], q: f64) -> Result<EnergyReport> {
    let p = op.params();
    let qnorm = quasi_norm(op.mesh(), f, q)?;
    if qnorm == 0.0 {
        return Err(invalid("energy quotient of the zero field is undefined"));
    }
    let numerator = op.bilinear(f, f)?;
    let quotient = numerator / (qnorm * qnorm);
    let n_alpha = sharp_constant(p.dim, p.alpha)?.value;
    Ok(EnergyReport {
        numerator,
        qnorm,
        quotient,
        q,
        lambda: p.lambda,
        n_alpha,
        margin: is_critical_q(p.dim, p.alpha, q).then_some(quotient - n_alpha),
    })
}

/// Constant `N_α |Ω|^(-2(1/q - 1/q_α))` of the lower bound
/// `B(f,f) >= C ‖f‖_q²` for `0 < q < q_α`.
pub fn subcritical_lower_bound_constant(mesh: &Mesh, alpha: f64, q: f64) -> Result<f64> {
    let n = mesh.dim();
    let qa = q_alpha(n, alpha);
    let sharp = sharp_constant(n, alpha)?;
    if !(q > 0.0 && q < qa) {
        return Err(invalid(format!("q must lie in (0, q_alpha) = (0, {qa}), got {q}")));
    }
    Ok(sharp.value * mesh.measure().powf(-2.0 * (1.0 / q - 1.0 / qa)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_ball_mesh, build_interval_mesh};
    use crate::kernel::{KernelParams, SelfCellRule};
    use approx::assert_relative_eq;

    #[test]
    fn quasi_norm_examples() {
        let m = build_interval_mesh(0.0, 1.0, 10).unwrap();
        assert_relative_eq!(quasi_norm(&m, &[1.0; 10], 0.5).unwrap(), 1.0, max_relative = 1e-14);
        let half: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 } else { 0.0 }).collect();
        assert_relative_eq!(quasi_norm(&m, &half, 0.5).unwrap(), 0.25, max_relative = 1e-14);
        let f: Vec<f64> = (0..10).map(|i| 0.1 + i as f64).collect();
        let cf: Vec<f64> = f.iter().map(|v| 3.5 * v).collect();
        assert_relative_eq!(
            quasi_norm(&m, &cf, 0.3).unwrap(),
            3.5 * quasi_norm(&m, &f, 0.3).unwrap(),
            max_relative = 1e-13
        );
        assert!(quasi_norm(&m, &[1.0; 10], 0.0).is_err());
        let mut neg = vec![1.0; 10];
        neg[3] = -1.0;
        assert!(quasi_norm(&m, &neg, 0.5).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityField::new(vec![1.0, -0.1]).is_err());
        assert!(DensityField::new(vec![1.0, f64::NAN]).is_err());
        assert!(DensityField::new(vec![0.0, 0.0]).unwrap().is_zero());
    }

    #[test]
    fn critical_detection() {
        assert!(is_critical_q(1, 3.0, 0.5));
        assert!(is_critical_q(2, 3.0, 0.8));
        assert!(is_critical_q(2, 3.0, 4.0 / 5.0));
        assert!(!is_critical_q(2, 3.0, 0.8 + 1e-15));
        assert!(is_critical_q(2, std::f64::consts::PI, q_alpha(2, std::f64::consts::PI)));
        assert!(is_critical_p(2, 3.0, -4.0));
        assert!(is_critical_p(1, 3.0, -1.0));
        assert_eq!(pohozaev_coefficient(2, 3.0, -4.0), 0.0);
        assert_eq!(pohozaev_coefficient(3, 5.0, -3.0), 0.0);
        assert!(pohozaev_coefficient(2, 3.0, -2.0) < 0.0);
    }

    #[test]
    fn constant_field_quotient() {
        let m = build_interval_mesh(0.0, 1.0, 64).unwrap();
        let op = KernelOperator::assemble(&m, KernelParams::new(1, 3.0, 0.0).unwrap(), SelfCellRule::Subdivide(64)).unwrap();
        let rep = energy_quotient(&op, &[1.0; 64], 0.5).unwrap();
        assert!((rep.quotient - 1.0 / 6.0).abs() < 1e-4);
        assert!(rep.margin.is_some());
        let rep = energy_quotient(&op, &[1.0; 64], 0.25).unwrap();
        assert!(rep.margin.is_none());
        assert!(energy_quotient(&op, &[0.0; 64], 0.5).is_err());
        let v = serde_json::to_value(&rep).unwrap();
        for key in ["numerator", "qnorm", "quotient", "q", "lambda", "N_alpha", "margin"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn lower_bound_constant() {
        let m = build_interval_mesh(0.0, 1.0, 16).unwrap();
        let c = subcritical_lower_bound_constant(&m, 3.0, 0.25).unwrap();
        assert_relative_eq!(c, 1.0 / (2.0 * std::f64::consts::PI.powi(2)), max_relative = 1e-12);
        assert!(subcritical_lower_bound_constant(&m, 3.0, 0.5).is_err());
        let d = build_ball_mesh(2, 1.0, 2).unwrap();
        let c = subcritical_lower_bound_constant(&d, 3.0, 0.4).unwrap();
        let expected = sharp_constant(2, 3.0).unwrap().value * std::f64::consts::PI.powf(-2.0 * (2.5 - 1.25));
        assert_relative_eq!(c, expected, max_relative = 1e-12);
    }

    #[test]
    fn admissible_coupling_keeps_numerator_positive() {
        let m = build_interval_mesh(0.0, 1.0, 32).unwrap();
        let f: Vec<f64> = (0..32).map(|i| 1.0 + (i as f64 * 0.37).cos()).collect();
        let b0 = {
            let op = KernelOperator::assemble(&m, KernelParams::new(1, 3.0, 0.0).unwrap(), SelfCellRule::Zero).unwrap();
            op.bilinear(&f, &f).unwrap()
        };
        for lambda in [-0.9, -0.5, -0.1] {
            let op = KernelOperator::assemble(&m, KernelParams::new(1, 3.0, lambda).unwrap(), SelfCellRule::Zero).unwrap();
            let b = op.bilinear(&f, &f).unwrap();
            assert!(b >= (1.0 + lambda * m.diameter()) * b0 - 1e-15);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(40))]

            #[test]
            fn quotient_is_scale_invariant(f in prop::collection::vec(0.05f64..20.0, 32), c in 1e-3f64..1e3, lambda in -0.9f64..0.9) {
                let m = build_interval_mesh(0.0, 1.0, 32).unwrap();
                let op = KernelOperator::assemble(&m, KernelParams::new(1, 3.0, lambda).unwrap(), SelfCellRule::Subdivide(4)).unwrap();
                let a = energy_quotient(&op, &f, 0.4).unwrap();
                let cf: Vec<f64> = f.iter().map(|v| c * v).collect();
                let b = energy_quotient(&op, &cf, 0.4).unwrap();
                prop_assert!((a.quotient - b.quotient).abs() <= 1e-12 * a.quotient);
                prop_assert!((b.qnorm - c * a.qnorm).abs() <= 1e-12 * b.qnorm);
            }

            #[test]
            fn random_fields_respect_subcritical_bound(logf in prop::collection::vec(-2.0f64..2.0, 64), q in 0.1f64..0.49) {
                let m = build_interval_mesh(0.0, 1.0, 64).unwrap();
                let op = KernelOperator::assemble(&m, KernelParams::new(1, 3.0, 0.0).unwrap(), SelfCellRule::Subdivide(16)).unwrap();
                let f: Vec<f64> = logf.iter().map(|v| v.exp()).collect();
                let c = subcritical_lower_bound_constant(&m, 3.0, q).unwrap();
                let rep = energy_quotient(&op, &f, q).unwrap();
                prop_assert!(rep.quotient >= c * (1.0 - 0.02), "{} < {}", rep.quotient, c);
            }
        }
    }
}
