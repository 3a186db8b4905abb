//! Discretized bounded domains.
//!
//! Every mesh is a midpoint-quadrature partition of a domain in one, two
//! or three dimensions: each node is the centroid of a cell and carries the
//! cell measure as its weight. Boundary nodes carry surface measure and an
//! outward unit normal, and are placed exactly on the analytic boundary.
//!
//! Points are stored as `[f64; 3]` with the unused trailing coordinates set
//! to zero, so distance computations never branch on dimension.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 3];

/// Largest ball refinement level accepted by [`build_ball_mesh`].
pub const MAX_BALL_REFINEMENT: u32 = 10;

#[inline]
pub fn distance(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[inline]
fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Pads a coordinate slice of length `dim` into a [`Point`].
pub fn point_from_slice(coords: &[f64]) -> Result<Point> {
    if coords.is_empty() || coords.len() > 3 {
        return Err(invalid(format!(
            "points must have 1 to 3 coordinates, got {}",
            coords.len()
        )));
    }
    let mut p = [0.0; 3];
    p[..coords.len()].copy_from_slice(coords);
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeTag {
    Interval,
    Box,
    Ball,
}

impl std::fmt::Display for ShapeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ShapeTag::Interval => "interval",
            ShapeTag::Box => "box",
            ShapeTag::Ball => "ball",
        };
        f.write_str(s)
    }
}

/// Analytic description of the domain a mesh discretizes.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Interval { a: f64, b: f64 },
    Box { lows: Point, highs: Point },
    Ball { center: Point, radius: f64 },
}

/// Geometry of one quadrature cell, enough to subdivide it.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    /// Axis-aligned box; only the first `dim` extents are meaningful.
    Box { dim: usize, lo: Point, hi: Point },
    /// Annular sector `r0 <= r <= r1`, `t0 <= theta <= t1`.
    Sector2 { r: [f64; 2], theta: [f64; 2] },
    /// Spherical shell sector in `(r, cos(polar angle), azimuth)`.
    Sector3 {
        r: [f64; 2],
        mu: [f64; 2],
        phi: [f64; 2],
    },
}

impl Cell {
    pub fn measure(&self) -> f64 {
        match *self {
            Cell::Box { dim, lo, hi } => (0..dim).map(|k| hi[k] - lo[k]).product(),
            Cell::Sector2 { r, theta } => 0.5 * (theta[1] - theta[0]) * (r[1] * r[1] - r[0] * r[0]),
            Cell::Sector3 { r, mu, phi } => {
                (r[1].powi(3) - r[0].powi(3)) / 3.0 * (mu[1] - mu[0]) * (phi[1] - phi[0])
            }
        }
    }

    pub fn centroid(&self) -> Point {
        match *self {
            Cell::Box { dim, lo, hi } => {
                let mut c = [0.0; 3];
                for k in 0..dim {
                    c[k] = 0.5 * (lo[k] + hi[k]);
                }
                c
            }
            Cell::Sector2 { r, theta } => {
                let half = 0.5 * (theta[1] - theta[0]);
                let radial = (2.0 / 3.0) * (r[1].powi(3) - r[0].powi(3)) / (r[1] * r[1] - r[0] * r[0]);
                let rc = radial * half.sin() / half;
                let tm = 0.5 * (theta[0] + theta[1]);
                [rc * tm.cos(), rc * tm.sin(), 0.0]
            }
            Cell::Sector3 { r, mu, phi } => {
                let vol = self.measure();
                let r4 = 0.25 * (r[1].powi(4) - r[0].powi(4));
                let sin_int = |m: f64| 0.5 * (m * (1.0 - m * m).max(0.0).sqrt() + m.asin());
                let s = sin_int(mu[1]) - sin_int(mu[0]);
                [
                    r4 * s * (phi[1].sin() - phi[0].sin()) / vol,
                    r4 * s * (phi[0].cos() - phi[1].cos()) / vol,
                    r4 * 0.5 * (mu[1] * mu[1] - mu[0] * mu[0]) * (phi[1] - phi[0]) / vol,
                ]
            }
        }
    }

    /// Splits the cell uniformly into `k` pieces per axis and returns the
    /// (centroid, measure) pairs of the pieces.
    pub fn subdivide(&self, k: usize) -> Vec<(Point, f64)> {
        let split = |a: f64, b: f64| -> Vec<[f64; 2]> {
            (0..k)
                .map(|i| {
                    let t0 = a + (b - a) * i as f64 / k as f64;
                    let t1 = a + (b - a) * (i + 1) as f64 / k as f64;
                    [t0, t1]
                })
                .collect()
        };
        let mut out = Vec::new();
        match *self {
            Cell::Box { dim, lo, hi } => {
                let axes: Vec<Vec<[f64; 2]>> = (0..3)
                    .map(|d| if d < dim { split(lo[d], hi[d]) } else { vec![[0.0, 0.0]] })
                    .collect();
                for x in &axes[0] {
                    for y in &axes[1] {
                        for z in &axes[2] {
                            let sub = Cell::Box {
                                dim,
                                lo: [x[0], y[0], z[0]],
                                hi: [x[1], y[1], z[1]],
                            };
                            out.push((sub.centroid(), sub.measure()));
                        }
                    }
                }
            }
            Cell::Sector2 { r, theta } => {
                for rr in split(r[0], r[1]) {
                    for tt in split(theta[0], theta[1]) {
                        let sub = Cell::Sector2 { r: rr, theta: tt };
                        out.push((sub.centroid(), sub.measure()));
                    }
                }
            }
            Cell::Sector3 { r, mu, phi } => {
                for rr in split(r[0], r[1]) {
                    for mm in split(mu[0], mu[1]) {
                        for pp in split(phi[0], phi[1]) {
                            let sub = Cell::Sector3 { r: rr, mu: mm, phi: pp };
                            out.push((sub.centroid(), sub.measure()));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Surface quadrature on the boundary of a mesh.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Boundary {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub normals: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    dim: usize,
    shape: Shape,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    cells: Vec<Cell>,
    boundary: Boundary,
    // Cells are stored in builder coordinates; node = origin + scale * cell point.
    origin: Point,
    scale: f64,
}

/// JSON form of a mesh.
#[derive(Serialize)]
pub struct MeshDocument {
    pub dim: usize,
    pub shape_tag: ShapeTag,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub boundary: BoundaryDocument,
}

#[derive(Serialize)]
pub struct BoundaryDocument {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub normals: Vec<Vec<f64>>,
}

impl Mesh {
    fn from_cells(dim: usize, shape: Shape, cells: Vec<Cell>, boundary: Boundary) -> Self {
        let nodes = cells.iter().map(Cell::centroid).collect();
        let weights = cells.iter().map(Cell::measure).collect();
        Mesh {
            dim,
            shape,
            nodes,
            weights,
            cells,
            boundary,
            origin: [0.0; 3],
            scale: 1.0,
        }
    }

    /// Centroids and measures of a `k`-per-axis subdivision of cell `i`.
    pub fn cell_pieces(&self, i: usize, k: usize) -> Vec<(Point, f64)> {
        let wscale = self.scale.powi(self.dim as i32);
        self.cells[i]
            .subdivide(k)
            .into_iter()
            .map(|(p, w)| {
                let mut q = [0.0; 3];
                for d in 0..3 {
                    q[d] = self.origin[d] + self.scale * p[d];
                }
                (q, w * wscale)
            })
            .collect()
    }

    /// Copy of the mesh rigidly translated by `v`.
    pub fn translated(&self, v: &Point) -> Mesh {
        let shift = |p: &Point| [p[0] + v[0], p[1] + v[1], p[2] + v[2]];
        let mut m = self.clone();
        m.nodes = self.nodes.iter().map(shift).collect();
        m.boundary.nodes = self.boundary.nodes.iter().map(shift).collect();
        m.origin = shift(&self.origin);
        m.shape = match self.shape {
            Shape::Interval { a, b } => Shape::Interval { a: a + v[0], b: b + v[0] },
            Shape::Box { lows, highs } => Shape::Box {
                lows: shift(&lows),
                highs: shift(&highs),
            },
            Shape::Ball { center, radius } => Shape::Ball {
                center: shift(&center),
                radius,
            },
        };
        m
    }

    /// Copy of the mesh dilated about the coordinate origin by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Mesh> {
        if !(s.is_finite() && s > 0.0) {
            return Err(invalid(format!("scale factor must be positive, got {s}")));
        }
        let mul = |p: &Point| [p[0] * s, p[1] * s, p[2] * s];
        let mut m = self.clone();
        m.nodes = self.nodes.iter().map(mul).collect();
        m.boundary.nodes = self.boundary.nodes.iter().map(mul).collect();
        let wv = s.powi(self.dim as i32);
        m.weights = self.weights.iter().map(|w| w * wv).collect();
        let ws = s.powi(self.dim as i32 - 1);
        if self.dim > 1 {
            m.boundary.weights = self.boundary.weights.iter().map(|w| w * ws).collect();
        }
        m.origin = mul(&self.origin);
        m.scale = self.scale * s;
        m.shape = match self.shape {
            Shape::Interval { a, b } => Shape::Interval { a: a * s, b: b * s },
            Shape::Box { lows, highs } => Shape::Box {
                lows: mul(&lows),
                highs: mul(&highs),
            },
            Shape::Ball { center, radius } => Shape::Ball {
                center: mul(&center),
                radius: radius * s,
            },
        };
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn shape_tag(&self) -> ShapeTag {
        match self.shape {
            Shape::Interval { .. } => ShapeTag::Interval,
            Shape::Box { .. } => ShapeTag::Box,
            Shape::Ball { .. } => ShapeTag::Ball,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    /// Total measure of the domain as seen by the quadrature.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Diameter of the domain. Uses the analytic value of the shape; the
    /// node-based estimate is available as [`Mesh::boundary_diameter`].
    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Interval { a, b } => b - a,
            Shape::Box { lows, highs } => {
                let mut d = [0.0; 3];
                for k in 0..self.dim {
                    d[k] = highs[k] - lows[k];
                }
                norm(&d)
            }
            Shape::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Largest pairwise distance between boundary nodes.
    pub fn boundary_diameter(&self) -> f64 {
        let b = &self.boundary.nodes;
        let mut best = 0.0f64;
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                best = best.max(distance(&b[i], &b[j]));
            }
        }
        best
    }

    /// Euclidean distance from `x` to the closed domain (zero inside).
    pub fn distance_outside(&self, x: &Point) -> f64 {
        match &self.shape {
            Shape::Interval { a, b } => (a - x[0]).max(x[0] - b).max(0.0),
            Shape::Box { lows, highs } => {
                let mut excess = [0.0; 3];
                for k in 0..self.dim {
                    excess[k] = (lows[k] - x[k]).max(x[k] - highs[k]).max(0.0);
                }
                norm(&excess)
            }
            Shape::Ball { center, radius } => (distance(x, center) - radius).max(0.0),
        }
    }

    /// Returns true when the closed ball `B_r(center)` lies inside the
    /// closed domain.
    pub fn contains_ball(&self, center: &Point, r: f64) -> bool {
        match &self.shape {
            Shape::Interval { a, b } => center[0] - r >= *a && center[0] + r <= *b,
            Shape::Box { lows, highs } => {
                (0..self.dim).all(|k| center[k] - r >= lows[k] && center[k] + r <= highs[k])
            }
            Shape::Ball { center: c, radius } => distance(center, c) + r <= *radius,
        }
    }

    pub fn to_document(&self) -> MeshDocument {
        let cut = |p: &Point| p[..self.dim].to_vec();
        MeshDocument {
            dim: self.dim,
            shape_tag: self.shape_tag(),
            nodes: self.nodes.iter().map(cut).collect(),
            weights: self.weights.clone(),
            boundary: BoundaryDocument {
                nodes: self.boundary.nodes.iter().map(cut).collect(),
                weights: self.boundary.weights.clone(),
                normals: self.boundary.normals.iter().map(cut).collect(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("mesh document serializes")
    }

    /// SHA-256 of the mesh content (dimension, shape, nodes, weights and
    /// boundary data), hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        h.update(self.shape_tag().to_string().as_bytes());
        let put_points = |h: &mut Sha256, pts: &[Point]| {
            for p in pts {
                for c in &p[..self.dim] {
                    h.update(c.to_le_bytes());
                }
            }
        };
        put_points(&mut h, &self.nodes);
        put_points(&mut h, &self.boundary.nodes);
        put_points(&mut h, &self.boundary.normals);
        for w in self.weights.iter().chain(&self.boundary.weights) {
            h.update(w.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {v}")))
    }
}

/// Uniform midpoint partition of `[a, b]` into `cells` cells.
pub fn build_interval_mesh(a: f64, b: f64, cells: usize) -> Result<Mesh> {
    check_finite("a", a)?;
    check_finite("b", b)?;
    if a >= b {
        return Err(invalid(format!("interval needs a < b, got [{a}, {b}]")));
    }
    if cells == 0 {
        return Err(invalid("interval mesh needs at least one cell"));
    }
    let h = (b - a) / cells as f64;
    let list = (0..cells)
        .map(|i| {
            let lo = if i == 0 { a } else { a + h * i as f64 };
            let hi = if i + 1 == cells { b } else { a + h * (i + 1) as f64 };
            Cell::Box {
                dim: 1,
                lo: [lo, 0.0, 0.0],
                hi: [hi, 0.0, 0.0],
            }
        })
        .collect();
    let boundary = Boundary {
        nodes: vec![[a, 0.0, 0.0], [b, 0.0, 0.0]],
        weights: vec![1.0, 1.0],
        normals: vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
    };
    Ok(Mesh::from_cells(1, Shape::Interval { a, b }, list, boundary))
}

fn axis_edges(lo: f64, hi: f64, n: usize) -> Vec<[f64; 2]> {
    let h = (hi - lo) / n as f64;
    (0..n)
        .map(|i| {
            let a = if i == 0 { lo } else { lo + h * i as f64 };
            let b = if i + 1 == n { hi } else { lo + h * (i + 1) as f64 };
            [a, b]
        })
        .collect()
}

/// Tensor midpoint grid on the box `lows..highs` (dimension 2 or 3).
pub fn build_box_mesh(dim: usize, lows: &[f64], highs: &[f64], cells_per_axis: &[usize]) -> Result<Mesh> {
    if dim != 2 && dim != 3 {
        return Err(invalid(format!("box meshes support dim 2 or 3, got {dim}")));
    }
    if lows.len() != dim || highs.len() != dim || cells_per_axis.len() != dim {
        return Err(invalid("box corners and cell counts must have dim entries"));
    }
    for k in 0..dim {
        check_finite("box corner", lows[k])?;
        check_finite("box corner", highs[k])?;
        if lows[k] >= highs[k] {
            return Err(invalid(format!("degenerate box axis {k}: [{}, {}]", lows[k], highs[k])));
        }
        if cells_per_axis[k] == 0 {
            return Err(invalid(format!("box axis {k} needs at least one cell")));
        }
    }
    let lo = point_from_slice(lows)?;
    let hi = point_from_slice(highs)?;
    let edges: Vec<Vec<[f64; 2]>> = (0..3)
        .map(|k| if k < dim { axis_edges(lo[k], hi[k], cells_per_axis[k]) } else { vec![[0.0, 0.0]] })
        .collect();

    let mut cells = Vec::new();
    for x in &edges[0] {
        for y in &edges[1] {
            for z in &edges[2] {
                cells.push(Cell::Box {
                    dim,
                    lo: [x[0], y[0], z[0]],
                    hi: [x[1], y[1], z[1]],
                });
            }
        }
    }

    let mut boundary = Boundary::default();
    for axis in 0..dim {
        let others: Vec<usize> = (0..dim).filter(|&k| k != axis).collect();
        for (side, coord) in [(-1.0, lo[axis]), (1.0, hi[axis])] {
            let mut normal = [0.0; 3];
            normal[axis] = side;
            let first = &edges[others[0]];
            let second: Vec<[f64; 2]> = if others.len() > 1 { edges[others[1]].clone() } else { vec![[0.0, 1.0]] };
            for e0 in first {
                for e1 in &second {
                    let mut p = [0.0; 3];
                    p[axis] = coord;
                    p[others[0]] = 0.5 * (e0[0] + e0[1]);
                    let mut w = e0[1] - e0[0];
                    if others.len() > 1 {
                        p[others[1]] = 0.5 * (e1[0] + e1[1]);
                        w *= e1[1] - e1[0];
                    }
                    boundary.nodes.push(p);
                    boundary.weights.push(w);
                    boundary.normals.push(normal);
                }
            }
        }
    }
    Ok(Mesh::from_cells(dim, Shape::Box { lows: lo, highs: hi }, cells, boundary))
}

/// Polar (dim 2) or spherical (dim 3) product mesh of the ball of the given
/// radius centered at the origin. Use [`Mesh::translated`] to move it.
///
/// Refinement level `r` uses `2^r` equal-width radial shells. In 2D each
/// shell is cut into `4 * 2^r` equal angular sectors; in 3D into `2 * 2^r`
/// equal-area polar bands times `4 * 2^r` azimuthal sectors. The partition
/// is invariant under reflection through every coordinate plane and under
/// rotation by one azimuthal sector.
pub fn build_ball_mesh(dim: usize, radius: f64, refinement: u32) -> Result<Mesh> {
    if dim != 2 && dim != 3 {
        return Err(invalid(format!("ball meshes support dim 2 or 3, got {dim}")));
    }
    check_finite("radius", radius)?;
    if radius <= 0.0 {
        return Err(invalid(format!("ball radius must be positive, got {radius}")));
    }
    if refinement < 1 {
        return Err(invalid("ball refinement must be at least 1 to give two radial shells"));
    }
    if refinement > MAX_BALL_REFINEMENT {
        return Err(invalid(format!(
            "ball refinement {refinement} exceeds the supported maximum {MAX_BALL_REFINEMENT}"
        )));
    }
    let shells = 1usize << refinement;
    let sectors = 4 * shells;
    let radii = axis_edges(0.0, radius, shells);
    let angle = |j: usize| 2.0 * PI * j as f64 / sectors as f64;
    let azimuths: Vec<[f64; 2]> = (0..sectors).map(|j| [angle(j), angle(j + 1)]).collect();

    let mut cells = Vec::new();
    let mut boundary = Boundary::default();
    if dim == 2 {
        for r in &radii {
            for t in &azimuths {
                cells.push(Cell::Sector2 { r: *r, theta: *t });
            }
        }
        for t in &azimuths {
            let tm = 0.5 * (t[0] + t[1]);
            let nu = [tm.cos(), tm.sin(), 0.0];
            boundary.nodes.push([radius * nu[0], radius * nu[1], 0.0]);
            boundary.weights.push(radius * (t[1] - t[0]));
            boundary.normals.push(nu);
        }
    } else {
        let bands = axis_edges(-1.0, 1.0, 2 * shells);
        for r in &radii {
            for m in &bands {
                for p in &azimuths {
                    cells.push(Cell::Sector3 { r: *r, mu: *m, phi: *p });
                }
            }
        }
        for m in &bands {
            for p in &azimuths {
                let mm = 0.5 * (m[0] + m[1]);
                let pm = 0.5 * (p[0] + p[1]);
                let s = (1.0 - mm * mm).sqrt();
                let raw = [s * pm.cos(), s * pm.sin(), mm];
                let len = norm(&raw);
                let nu = [raw[0] / len, raw[1] / len, raw[2] / len];
                boundary.nodes.push([radius * nu[0], radius * nu[1], radius * nu[2]]);
                boundary.weights.push(radius * radius * (m[1] - m[0]) * (p[1] - p[0]));
                boundary.normals.push(nu);
            }
        }
    }
    Ok(Mesh::from_cells(dim, Shape::Ball { center: [0.0; 3], radius }, cells, boundary))
}

/// Candidate star center; the origin by default.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StarCenter(pub Point);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StarReport {
    pub star_shaped: bool,
    /// Minimum of `(x - center) . nu` over the boundary nodes.
    pub min_support: f64,
}

pub fn star_check(mesh: &Mesh, center: StarCenter) -> Result<StarReport> {
    let b = mesh.boundary();
    if b.nodes.is_empty() || b.normals.len() != b.nodes.len() {
        return Err(Error::Format("mesh has no boundary normals".into()));
    }
    let c = center.0;
    let min_support = b
        .nodes
        .iter()
        .zip(&b.normals)
        .map(|(x, nu)| dot(&[x[0] - c[0], x[1] - c[1], x[2] - c[2]], nu))
        .fold(f64::INFINITY, f64::min);
    Ok(StarReport {
        star_shaped: min_support > 0.0,
        min_support,
    })
}
