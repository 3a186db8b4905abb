//! Flat key/value run configuration.
//!
//! Every command parameter is an `Option` so that values can come from the
//! command line, a TOML file, or a default, in that order of precedence. The
//! fully resolved block is serialized back into each output document.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory};
use rhls::diagnostics::VolumeExponent;
use rhls::geometry::point_from_slice;
use rhls::solver::SolverMode;
use rhls::{build_ball_mesh, build_box_mesh, build_interval_mesh, Mesh, Point, SelfCellRule, SolverConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{config_err, CliError, CliResult};

fn is_none<T>(v: &Option<T>) -> bool {
    v.is_none()
}

/// Domain and quadrature mesh.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct DomainArgs {
    /// Spatial dimension (1, 2 or 3)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub n: Option<usize>,
    /// Domain shape: interval, box or ball
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub shape: Option<String>,
    /// Left end of the interval
    #[arg(long, allow_negative_numbers = true)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub a: Option<f64>,
    /// Right end of the interval
    #[arg(long, allow_negative_numbers = true)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub b: Option<f64>,
    /// Box lower corner, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub lows: Option<Vec<f64>>,
    /// Box upper corner, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub highs: Option<Vec<f64>>,
    /// Cells of the interval, or per box axis (one value is broadcast)
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "is_none")]
    pub cells: Option<Vec<usize>>,
    /// Ball radius (the ball is centered at the origin)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub radius: Option<f64>,
    /// Ball refinement level
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub refinement: Option<u32>,
    /// Diagonal rule: zero or subdivide(k)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub self_cell: Option<String>,
}

impl DomainArgs {
    /// Fills defaults and drops keys that do not apply to the chosen shape.
    pub fn resolve(&mut self) -> CliResult<()> {
        let n = *self.n.get_or_insert(1);
        if !(1..=3).contains(&n) {
            return Err(config_err(format!("n must be 1, 2 or 3, got {n}")));
        }
        let shape = self
            .shape
            .get_or_insert_with(|| if n == 1 { "interval".into() } else { "ball".into() })
            .clone();
        match shape.as_str() {
            "interval" => {
                if n != 1 {
                    return Err(config_err(format!("an interval needs n = 1, got {n}")));
                }
                self.a.get_or_insert(0.0);
                self.b.get_or_insert(1.0);
                self.cells.get_or_insert_with(|| vec![256]);
                self.lows = None;
                self.highs = None;
                self.radius = None;
                self.refinement = None;
            }
            "box" => {
                self.lows.get_or_insert_with(|| vec![0.0; n]);
                self.highs.get_or_insert_with(|| vec![1.0; n]);
                let cells = self.cells.get_or_insert_with(|| vec![16]);
                if cells.len() == 1 {
                    *cells = vec![cells[0]; n];
                }
                self.a = None;
                self.b = None;
                self.radius = None;
                self.refinement = None;
            }
            "ball" => {
                self.radius.get_or_insert(1.0);
                self.refinement.get_or_insert(3);
                self.a = None;
                self.b = None;
                self.lows = None;
                self.highs = None;
                self.cells = None;
            }
            other => return Err(config_err(format!("unknown shape '{other}' (expected interval, box or ball)"))),
        }
        self.self_cell.get_or_insert_with(|| SelfCellRule::default().to_string());
        Ok(())
    }

    pub fn rule(&self) -> CliResult<SelfCellRule> {
        Ok(self.self_cell.as_deref().unwrap_or("subdivide(16)").parse()?)
    }

    /// Builds the mesh of a resolved block.
    pub fn build(&self) -> CliResult<Mesh> {
        let n = self.n.unwrap_or(1);
        let mesh = match self.shape.as_deref() {
            Some("interval") => {
                let cells = self.cells.as_deref().unwrap_or(&[]);
                if cells.len() != 1 {
                    return Err(config_err("an interval takes exactly one cells value"));
                }
                build_interval_mesh(self.a.unwrap_or(0.0), self.b.unwrap_or(1.0), cells[0])?
            }
            Some("box") => build_box_mesh(
                n,
                self.lows.as_deref().unwrap_or(&[]),
                self.highs.as_deref().unwrap_or(&[]),
                self.cells.as_deref().unwrap_or(&[]),
            )?,
            Some("ball") => build_ball_mesh(n, self.radius.unwrap_or(1.0), self.refinement.unwrap_or(3))?,
            _ => return Err(config_err("domain block was not resolved")),
        };
        Ok(mesh)
    }

    /// Geometric center of the domain.
    pub fn center(&self) -> Point {
        match self.shape.as_deref() {
            Some("interval") => [0.5 * (self.a.unwrap_or(0.0) + self.b.unwrap_or(1.0)), 0.0, 0.0],
            Some("box") => {
                let mut c = [0.0; 3];
                let lows = self.lows.as_deref().unwrap_or(&[]);
                let highs = self.highs.as_deref().unwrap_or(&[]);
                for (k, (l, h)) in lows.iter().zip(highs).enumerate().take(3) {
                    c[k] = 0.5 * (l + h);
                }
                c
            }
            _ => [0.0; 3],
        }
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct KernelArgs {
    /// Kernel exponent, must exceed n
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub alpha: Option<f64>,
    /// Coupling of the |x-y|^(alpha-n+1) term
    #[arg(long, allow_negative_numbers = true)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub lambda: Option<f64>,
}

impl KernelArgs {
    pub fn resolve(&mut self) -> CliResult<()> {
        if self.alpha.is_none() {
            return Err(config_err("alpha is required"));
        }
        self.lambda.get_or_insert(0.0);
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(f64::NAN)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(0.0)
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolverArgs {
    /// Iteration cap
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub max_iters: Option<usize>,
    /// Relative stopping tolerance
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub tol_rel: Option<f64>,
    /// Damping exponent of the fixed-point update
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub damping_theta: Option<f64>,
    /// Lower clamp applied to iterates
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub positivity_floor: Option<f64>,
    /// fixed_point or quotient_descent
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub mode: Option<SolverMode>,
    /// Number of random restarts
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub restarts: Option<usize>,
}

impl SolverArgs {
    /// Fills defaults; `restarts` is dropped when the command has none.
    pub fn resolve(&mut self, default_restarts: Option<usize>) {
        let d = SolverConfig::default();
        self.max_iters.get_or_insert(d.max_iters);
        self.tol_rel.get_or_insert(d.tol_rel);
        self.damping_theta.get_or_insert(d.damping_theta);
        self.positivity_floor.get_or_insert(d.positivity_floor);
        self.mode.get_or_insert(d.mode);
        match default_restarts {
            Some(r) => {
                self.restarts.get_or_insert(r);
            }
            None => self.restarts = None,
        }
    }

    pub fn config(&self, seed: u64) -> CliResult<SolverConfig> {
        let d = SolverConfig::default();
        let cfg = SolverConfig {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            tol_rel: self.tol_rel.unwrap_or(d.tol_rel),
            damping_theta: self.damping_theta.unwrap_or(d.damping_theta),
            positivity_floor: self.positivity_floor.unwrap_or(d.positivity_floor),
            mode: self.mode.unwrap_or(d.mode),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct ConstantCmd {
    /// Spatial dimension
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub n: Option<usize>,
    /// Kernel exponent, must exceed n
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub alpha: Option<f64>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct SweepCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArgs,
    /// Truncation radius (default: a quarter of the diameter)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub sweep_radius: Option<f64>,
    /// First scale exponent k of eps = R/2^k
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub eps_first: Option<u32>,
    /// Last scale exponent
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub eps_last: Option<u32>,
    /// Center of the test functions (default: domain center)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub center: Option<Vec<f64>>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolveCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArgs,
    /// Exponent q in (0, 1)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub q: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    /// Also write the assembled matrix as kernel.bin
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "is_none")]
    pub dump_kernel: Option<bool>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct ContinuationCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArgs,
    /// Increasing q values below the critical exponent, comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "is_none")]
    pub q_grid: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct NonexistenceCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArgs,
    /// Exponent q (default: the critical exponent)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub q: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct VerifyCmd {
    /// Solution file written by `solve`
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub solution: Option<PathBuf>,
    /// Mesh overrides; the rebuilt mesh must hash like the solution's
    #[command(flatten)]
    #[serde(flatten)]
    pub domain: DomainArgs,
    /// Checks to run: pohozaev, symmetry, moving_plane (default: all that apply)
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "is_none")]
    pub checks: Option<Vec<String>>,
    /// Volume-term exponent: shifted or leading
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub pohozaev_exponent: Option<VolumeExponent>,
    /// Center of the Pohozaev multiplier
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub pohozaev_center: Option<Vec<f64>>,
    /// Pass threshold on the relative Pohozaev residual
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub pohozaev_tol: Option<f64>,
    /// Radial bins of the symmetry report
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub symmetry_bins: Option<usize>,
    /// Pass threshold on the radial spread
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub symmetry_tol: Option<f64>,
    /// Plane positions for the moving-plane check, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub plane_lambda: Option<Vec<f64>>,
    /// Sampled nodes per plane
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub samples: Option<usize>,
    /// Allowed negative slack in the moving-plane check
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_none")]
    pub slack_tol: Option<f64>,
}

/// Parses a flat TOML file into a JSON object, rejecting unknown keys.
pub fn load_file(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let value = serde_json::to_value(table).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(config_err(format!("{}: expected a table of keys", path.display())));
    };
    let known = known_keys();
    if let Some((key, _)) = map.iter().find(|(k, v)| !known.contains(k.as_str()) || v.is_object()) {
        return Err(config_err(format!("{}: unknown or nested key '{key}'", path.display())));
    }
    Ok(map)
}

fn known_keys() -> BTreeSet<String> {
    let cmd = crate::Cli::command();
    let mut keys: BTreeSet<String> = cmd.get_arguments().map(|a| a.get_id().to_string()).collect();
    for sub in cmd.get_subcommands() {
        keys.extend(sub.get_arguments().map(|a| a.get_id().to_string()));
    }
    keys.remove("config");
    keys.remove("help");
    keys
}

/// Overlays command-line values on the file values, key by key.
pub fn merge<T: Serialize + DeserializeOwned>(layers: &[&Map<String, Value>], cli: &T) -> CliResult<T> {
    let mut merged = Map::new();
    for layer in layers {
        merged.extend(layer.iter().map(|(k, v)| (k.clone(), v.clone())));
    }
    if let Value::Object(over) = serde_json::to_value(cli).map_err(|e| config_err(e.to_string()))? {
        merged.extend(over);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| config_err(e.to_string()))
}

pub fn point_arg(coords: &[f64], dim: usize) -> CliResult<Point> {
    if coords.len() != dim {
        return Err(config_err(format!("expected {dim} coordinates, got {}", coords.len())));
    }
    Ok(point_from_slice(coords)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_defaults_follow_dimension() {
        let mut d = DomainArgs::default();
        d.resolve().unwrap();
        assert_eq!(d.shape.as_deref(), Some("interval"));
        assert_eq!(d.cells, Some(vec![256]));
        let mut d = DomainArgs {
            n: Some(2),
            cells: Some(vec![8]),
            ..Default::default()
        };
        d.resolve().unwrap();
        assert_eq!(d.shape.as_deref(), Some("ball"));
        assert!(d.cells.is_none());
        assert_eq!(d.build().unwrap().len(), 8 * 32);
    }

    #[test]
    fn box_cells_broadcast() {
        let mut d = DomainArgs {
            n: Some(2),
            shape: Some("box".into()),
            cells: Some(vec![3]),
            ..Default::default()
        };
        d.resolve().unwrap();
        assert_eq!(d.cells, Some(vec![3, 3]));
        assert_eq!(d.build().unwrap().len(), 9);
        assert_eq!(d.center(), [0.5, 0.5, 0.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut d = DomainArgs {
            n: Some(2),
            shape: Some("interval".into()),
            ..Default::default()
        };
        assert!(d.resolve().is_err());
        let mut d = DomainArgs {
            shape: Some("torus".into()),
            ..Default::default()
        };
        assert!(d.resolve().is_err());
    }

    #[test]
    fn command_line_wins_over_file() {
        let mut file = Map::new();
        file.insert("alpha".into(), Value::from(3.0));
        file.insert("lambda".into(), Value::from(-0.5));
        file.insert("q_grid".into(), Value::from(vec![0.1, 0.2]));
        let cli = KernelArgs {
            alpha: None,
            lambda: Some(0.25),
        };
        let k: KernelArgs = merge(&[&file], &cli).unwrap();
        assert_eq!(k.alpha, Some(3.0));
        assert_eq!(k.lambda, Some(0.25));
    }

    #[test]
    fn known_keys_cover_every_command() {
        let keys = known_keys();
        for k in ["alpha", "lambda", "q", "q_grid", "refinement", "plane_lambda", "seed", "strict", "sweep_radius"] {
            assert!(keys.contains(k), "{k}");
        }
        assert!(!keys.contains("config"));
    }
}
