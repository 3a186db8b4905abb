//! Dense discretization of the integral operator
//! `K f(x) = ∫ (|x-y|^(α-n) + λ |x-y|^(α-n+1)) f(y) dy`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::sync::OnceLock;

use crate::error::{invalid, Error, Result};
use crate::geometry::{distance, Mesh, Point};

/// Magic prefix of the binary matrix dump.
pub const DUMP_MAGIC: &[u8; 8] = b"RHLSKER1";

/// Relative tolerance (in units of the diameter) for accepting evaluation
/// points on the closed domain.
const CLOSURE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub alpha: f64,
    pub lambda: f64,
    pub dim: usize,
}

impl KernelParams {
    pub fn new(dim: usize, alpha: f64, lambda: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if !alpha.is_finite() || alpha <= dim as f64 {
            return Err(invalid(format!("alpha must exceed n (alpha = {alpha}, n = {dim})")));
        }
        if !lambda.is_finite() {
            return Err(invalid(format!("lambda must be finite, got {lambda}")));
        }
        Ok(KernelParams { alpha, lambda, dim })
    }

    /// Exponent `α - n` of the leading kernel term.
    pub fn exponent(&self) -> f64 {
        self.alpha - self.dim as f64
    }

    /// Kernel value at distance `r`; zero at `r = 0` since `α > n`.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let lead = r.powf(self.exponent());
        lead + self.lambda * lead * r
    }

    /// Same parameters with a different coupling.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        KernelParams { lambda, ..*self }
    }
}

/// Treatment of the diagonal entries, where node and integration cell
/// coincide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfCellRule {
    /// `G_ii = 0`, the kernel value at coincidence.
    Zero,
    /// Integrate the kernel over cell `i` using a `k`-per-axis subdivision.
    Subdivide(usize),
}

impl Default for SelfCellRule {
    fn default() -> Self {
        SelfCellRule::Subdivide(16)
    }
}

impl std::fmt::Display for SelfCellRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelfCellRule::Zero => f.write_str("zero"),
            SelfCellRule::Subdivide(k) => write!(f, "subdivide({k})"),
        }
    }
}

impl std::str::FromStr for SelfCellRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(SelfCellRule::Zero);
        }
        let inner = s
            .strip_prefix("subdivide(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("subdivide:"));
        match inner.map(|k| k.trim().parse::<usize>()) {
            Some(Ok(k)) if k >= 1 => Ok(SelfCellRule::Subdivide(k)),
            _ => Err(invalid(format!("unknown self-cell rule '{s}' (expected zero or subdivide(k))"))),
        }
    }
}

/// Integral of `kernel(|x_i - y|)` over cell `i` according to `rule`.
pub fn self_cell_integral(mesh: &Mesh, i: usize, rule: SelfCellRule, kernel: impl Fn(f64) -> f64) -> f64 {
    match rule {
        SelfCellRule::Zero => 0.0,
        SelfCellRule::Subdivide(k) => {
            let xi = mesh.nodes()[i];
            mesh.cell_pieces(i, k)
                .iter()
                .map(|(y, w)| w * kernel(distance(&xi, y)))
                .sum()
        }
    }
}

/// Assembled operator. Row `i` of `G` holds `w_j k(x_i, x_j)` so that
/// `(K f)_i = Σ_j G_ij f_j`.
pub struct KernelOperator<'m> {
    mesh: &'m Mesh,
    params: KernelParams,
    rule: SelfCellRule,
    g: Vec<f64>,
    s: OnceLock<Vec<f64>>,
    min_pair_factor: f64,
}

impl<'m> KernelOperator<'m> {
    pub fn assemble(mesh: &'m Mesh, params: KernelParams, rule: SelfCellRule) -> Result<Self> {
        if params.dim != mesh.dim() {
            return Err(invalid(format!(
                "kernel dimension {} does not match mesh dimension {}",
                params.dim,
                mesh.dim()
            )));
        }
        let params = KernelParams::new(params.dim, params.alpha, params.lambda)?;
        if let SelfCellRule::Subdivide(0) = rule {
            return Err(invalid("subdivide(k) needs k >= 1"));
        }
        let n = mesh.len();
        let nodes = mesh.nodes();
        let w = mesh.weights();
        let mut g = vec![0.0; n * n];
        g.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                row[j] = if i == j {
                    self_cell_integral(mesh, i, rule, |r| params.value(r))
                } else {
                    w[j] * params.value(distance(&nodes[i], &nodes[j]))
                };
            }
        });
        let mut max_r = 0.0f64;
        if params.lambda < 0.0 {
            for i in 0..n {
                for j in i + 1..n {
                    max_r = max_r.max(distance(&nodes[i], &nodes[j]));
                }
            }
        }
        let min_pair_factor = (1.0 + params.lambda * max_r).min(1.0);
        Ok(KernelOperator {
            mesh,
            params,
            rule,
            g,
            s: OnceLock::new(),
            min_pair_factor,
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn rule(&self) -> SelfCellRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    /// Row-major `G`.
    pub fn matrix(&self) -> &[f64] {
        &self.g
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.len() + j]
    }

    /// Minimum of `1 + λ|x_i - x_j|` over node pairs (1 when `λ >= 0`).
    pub fn min_pair_factor(&self) -> f64 {
        self.min_pair_factor
    }

    /// True when `1 + λ|x_i - x_j| > 0` for every node pair.
    pub fn pairs_positive(&self) -> bool {
        self.min_pair_factor > 0.0
    }

    /// True when `λ > -1/d(Ω)`, the domain-level admissibility condition.
    pub fn lambda_admissible(&self) -> bool {
        self.params.lambda > -1.0 / self.mesh.diameter()
    }

    /// Weight-symmetrized matrix `S_ij = w_i G_ij`, exactly symmetric.
    pub fn symmetric(&self) -> &[f64] {
        self.s.get_or_init(|| {
            let n = self.len();
            let w = self.mesh.weights();
            let nodes = self.mesh.nodes();
            let mut s = vec![0.0; n * n];
            s.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
                for j in 0..n {
                    row[j] = if i == j {
                        w[i] * self.g[i * n + i]
                    } else {
                        (w[i] * w[j]) * self.params.value(distance(&nodes[i], &nodes[j]))
                    };
                }
            });
            s
        })
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::MeshMismatch {
                expected: self.len(),
                found: f.len(),
            });
        }
        Ok(())
    }

    /// `(K f)_i` at every node.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        Ok(self.apply_unchecked(f))
    }

    pub(crate) fn apply_unchecked(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        if n == 0 {
            return Vec::new();
        }
        self.g
            .par_chunks(n)
            .map(|row| row.iter().zip(f).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Integral representation `Σ_j w_j k(|x - x_j|) f_j` at a point of the
    /// closed domain.
    pub fn evaluate_at(&self, f: &[f64], x: &Point) -> Result<f64> {
        self.check_len(f)?;
        let out = self.mesh.distance_outside(x);
        if out > CLOSURE_TOL * self.mesh.diameter().max(1.0) {
            return Err(Error::OutsideDomain {
                point: x[..self.mesh.dim()].to_vec(),
                distance: out,
            });
        }
        Ok(self.evaluate_unchecked(f, x))
    }

    pub(crate) fn evaluate_unchecked(&self, f: &[f64], x: &Point) -> f64 {
        let w = self.mesh.weights();
        self.mesh
            .nodes()
            .iter()
            .zip(w)
            .zip(f)
            .map(|((y, wj), fj)| wj * self.params.value(distance(x, y)) * fj)
            .sum()
    }

    /// `B(f, g) = Σ_ij f_i S_ij g_j`, summed in a fixed order.
    pub fn bilinear(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        let n = self.len();
        let s = self.symmetric();
        let mut total = 0.0;
        for i in 0..n {
            if f[i] == 0.0 {
                continue;
            }
            let row = &s[i * n..(i + 1) * n];
            let inner: f64 = row.iter().zip(g).map(|(a, b)| a * b).sum();
            total += f[i] * inner;
        }
        Ok(total)
    }

    /// Writes the magic, `N` as little-endian u64, then `G` row-major.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        for v in &self.g {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads a matrix written by [`KernelOperator::write_dump`]; returns `N`
/// and the row-major entries.
pub fn read_dump<R: Read>(mut input: R) -> Result<(usize, Vec<f64>)> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Format("kernel dump has the wrong magic".into()));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let n = u64::from_le_bytes(len) as usize;
    let count = n
        .checked_mul(n)
        .ok_or_else(|| Error::Format("kernel dump size overflows".into()))?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Format(format!(
            "kernel dump holds {} bytes of entries, expected {}",
            bytes.len(),
            count * 8
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((n, values))
}
