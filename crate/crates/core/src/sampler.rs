//! Meshing of the punctured sphere, spanning-tree integration of the
//! immersion and OBJ/CSV export.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_segment;
use crate::rational::PointExt;
use crate::weierstrass::{metric_factor, Polyline, SurfacePoint, WeierstrassData, Window};

pub const EDGE_TOL: f64 = 1e-10;
pub const MAX_EDGE_DEPTH: u32 = 12;

/// Triangulated region of the z-plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainMesh {
    #[serde(with = "crate::rational::cpair::vec")]
    pub vertices: Vec<Complex64>,
    pub triangles: Vec<[usize; 3]>,
    /// Radius of the removed disk around each puncture. The disk around
    /// infinity is `|1/z| < r`.
    pub exclusion_radii: Vec<(PointExt, f64)>,
}

impl DomainMesh {
    /// Unique undirected edges, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.into_iter().collect()
    }

    pub fn excludes(&self, z: Complex64) -> bool {
        self.exclusion_radii.iter().any(|&(p, r)| in_disk(p, r, z))
    }
}

fn in_disk(p: PointExt, r: f64, z: Complex64) -> bool {
    match p {
        PointExt::Finite(c) => (z - c).norm() < r,
        PointExt::Infinity => z.norm() * r > 1.0,
    }
}

/// Whether the closed cell `[x0,x1] x [y0,y1]` meets the disk around `p`.
fn cell_meets_disk(p: PointExt, r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
    match p {
        PointExt::Finite(c) => {
            let dx = (x0 - c.re).max(0.0).max(c.re - x1);
            let dy = (y0 - c.im).max(0.0).max(c.im - y1);
            dx.hypot(dy) < r
        }
        PointExt::Infinity => {
            let fx = x0.abs().max(x1.abs());
            let fy = y0.abs().max(y1.abs());
            fx.hypot(fy) * r > 1.0
        }
    }
}

/// Structured `resolution x resolution` grid over `window`, two triangles per
/// cell, without the cells meeting a disk of radius `exclusion` around a
/// puncture.
pub fn mesh_domain(punctures: &[PointExt], window: &Window, resolution: usize, exclusion: f64) -> Result<DomainMesh> {
    if resolution < 16 {
        return Err(Error::invalid(format!("resolution {resolution} is below 16")));
    }
    if !(exclusion > 0.0 && exclusion.is_finite()) {
        return Err(Error::invalid(format!("exclusion radius {exclusion} must be positive")));
    }
    let corners = [
        Complex64::new(window.x0, window.y0),
        Complex64::new(window.x1, window.y0),
        Complex64::new(window.x0, window.y1),
        Complex64::new(window.x1, window.y1),
    ];
    for &p in punctures {
        // disks are convex, so the window lies inside when its corners do
        if p.as_finite().is_some() && corners.iter().all(|&z| in_disk(p, exclusion, z)) {
            return Err(Error::invalid(format!(
                "window {window} lies inside the exclusion disk of radius {exclusion} around {p}"
            )));
        }
    }
    let n = resolution;
    let hx = window.width() / n as f64;
    let hy = window.height() / n as f64;
    let node = |i: usize, j: usize| Complex64::new(window.x0 + i as f64 * hx, window.y0 + j as f64 * hy);
    let mut index = vec![usize::MAX; (n + 1) * (n + 1)];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut id = |i: usize, j: usize, vertices: &mut Vec<Complex64>| {
        let k = j * (n + 1) + i;
        if index[k] == usize::MAX {
            index[k] = vertices.len();
            vertices.push(node(i, j));
        }
        index[k]
    };
    for j in 0..n {
        for i in 0..n {
            let (x0, y0) = (window.x0 + i as f64 * hx, window.y0 + j as f64 * hy);
            if punctures
                .iter()
                .any(|&p| cell_meets_disk(p, exclusion, x0, x0 + hx, y0, y0 + hy))
            {
                continue;
            }
            let a = id(i, j, &mut vertices);
            let b = id(i + 1, j, &mut vertices);
            let c = id(i + 1, j + 1, &mut vertices);
            let d = id(i, j + 1, &mut vertices);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    if triangles.is_empty() {
        return Err(Error::invalid(format!(
            "every cell of {window} meets an exclusion disk of radius {exclusion}"
        )));
    }
    Ok(DomainMesh {
        vertices,
        triangles,
        exclusion_radii: punctures.iter().map(|&p| (p, exclusion)).collect(),
    })
}

/// Immersed mesh from [`integrate_tree`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub positions: Vec<SurfacePoint>,
    pub triangles: Vec<[usize; 3]>,
    /// [`metric_factor`] at each vertex.
    pub metric: Vec<f64>,
    /// Largest real-part discrepancy over non-tree edges.
    pub max_loop_defect: f64,
    /// The non-tree edge where `max_loop_defect` occurs.
    pub worst_edge: Option<(usize, usize)>,
    pub tree_root: usize,
}

fn edge_integral(data: &WeierstrassData, a: Complex64, b: Complex64) -> Result<[Complex64; 3]> {
    let f = |z: Complex64| data.integrands(z);
    integrate_segment(&f, a, b, EDGE_TOL, MAX_EDGE_DEPTH).map_err(|e| match e {
        Error::NumericalFailure(m) => Error::numerical(format!("edge {a} -> {b}: {m}")),
        other => other,
    })
}

/// Integrates the immersion over a breadth-first spanning tree of the mesh
/// edges rooted at the vertex nearest the base point. Non-tree edges close a
/// loop each, and the real part of the loop integral is the loop defect.
pub fn integrate_tree(data: &WeierstrassData, mesh: &DomainMesh) -> Result<SurfaceMesh> {
    let nv = mesh.vertices.len();
    if nv == 0 {
        return Err(Error::invalid("empty mesh"));
    }
    let base = data.base_point;
    if mesh.excludes(base) {
        return Err(Error::invalid(format!("base point {base} lies in an exclusion disk")));
    }
    let root = (0..nv)
        .min_by(|&i, &j| (mesh.vertices[i] - base).norm().total_cmp(&(mesh.vertices[j] - base).norm()))
        .unwrap();
    let edges = mesh.edges();
    let cell = edges
        .iter()
        .map(|&(a, b)| (mesh.vertices[a] - mesh.vertices[b]).norm())
        .fold(0.0, f64::max);
    if (mesh.vertices[root] - base).norm() > cell {
        return Err(Error::invalid(format!("base point {base} is outside the meshed region")));
    }

    let mut adjacency = vec![Vec::new(); nv];
    for (k, &(a, b)) in edges.iter().enumerate() {
        adjacency[a].push((b, k));
        adjacency[b].push((a, k));
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nv];
    let mut seen = vec![false; nv];
    let mut order = Vec::with_capacity(nv);
    let mut tree_edge = vec![false; edges.len()];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(v, k) in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some((u, k));
                tree_edge[k] = true;
                queue.push_back(v);
            }
        }
    }
    if order.len() != nv {
        return Err(Error::invalid(format!(
            "mesh is disconnected: {} of {nv} vertices reachable from the base point",
            order.len()
        )));
    }

    let integrals: Vec<[Complex64; 3]> = edges
        .par_iter()
        .map(|&(a, b)| edge_integral(data, mesh.vertices[a], mesh.vertices[b]))
        .collect::<Result<_>>()?;
    let start = edge_integral(data, base, mesh.vertices[root])?;

    let mut acc = vec![[Complex64::new(0.0, 0.0); 3]; nv];
    acc[root] = start;
    for &v in &order[1..] {
        let (u, k) = parent[v].unwrap();
        let sign = if edges[k].0 == u { 1.0 } else { -1.0 };
        for i in 0..3 {
            acc[v][i] = acc[u][i] + integrals[k][i] * sign;
        }
    }

    let mut max_loop_defect = 0.0_f64;
    let mut worst_edge = None;
    for (k, &(a, b)) in edges.iter().enumerate() {
        if tree_edge[k] {
            continue;
        }
        let d = (0..3)
            .map(|i| (acc[a][i].re + integrals[k][i].re - acc[b][i].re).abs())
            .fold(0.0, f64::max);
        if d > max_loop_defect || worst_edge.is_none() {
            max_loop_defect = max_loop_defect.max(d);
            worst_edge = Some((a, b));
        }
    }

    let positions = acc
        .iter()
        .map(|x| SurfacePoint { x1: x[0].re, x2: x[1].re, x3: x[2].re })
        .collect();
    let metric = mesh
        .vertices
        .par_iter()
        .map(|&z| metric_factor(data, z).unwrap_or(f64::NAN))
        .collect();
    Ok(SurfaceMesh {
        positions,
        triangles: mesh.triangles.clone(),
        metric,
        max_loop_defect,
        worst_edge,
        tree_root: root,
    })
}

/// `x` with 9 significant digits, without an exponent where that stays short.
fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..=15).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn obj_string(mesh: &SurfaceMesh) -> String {
    let mut out = String::new();
    for p in &mesh.positions {
        let _ = writeln!(out, "v {} {} {}", sig9(p.x1), sig9(p.x2), sig9(p.x3));
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

pub fn csv_string(polylines: &[Polyline]) -> String {
    let mut out = String::new();
    for (k, line) in polylines.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for z in &line.points {
            let _ = writeln!(out, "{},{}", sig9(z.re), sig9(z.im));
        }
    }
    out
}

pub fn export_obj(mesh: &SurfaceMesh, path: &Path) -> Result<()> {
    write_file(path, &obj_string(mesh))
}

pub fn export_csv(polylines: &[Polyline], path: &Path) -> Result<()> {
    write_file(path, &csv_string(polylines))
}

/// Vertex positions of an OBJ file.
pub fn parse_obj_vertices(text: &str) -> Result<Vec<SurfacePoint>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        if it.next() != Some("v") {
            continue;
        }
        let xs: Vec<f64> = it
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("OBJ line {}: {e}", n + 1)))?;
        if xs.len() != 3 {
            return Err(Error::invalid(format!("OBJ line {}: expected 3 coordinates", n + 1)));
        }
        out.push(SurfacePoint { x1: xs[0], x2: xs[1], x3: xs[2] });
    }
    Ok(out)
}
