use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{cpair, RationalFn};

/// Axis-parallel rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let w = Window { x0, x1, y0, y1 };
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) || !(x1 > x0 && y1 > y0) {
            return Err(Error::invalid(format!("window {w} needs positive finite sides")));
        }
        Ok(w)
    }

    pub fn square(half: f64) -> Self {
        Window { x0: -half, x1: half, y0: -half, y1: half }
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x0, self.x1, self.y0, self.y1)
    }
}

impl FromStr for Window {
    type Err = Error;

    /// `x0,x1,y0,y1`
    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("window {s:?}: {e}")))?;
        let [x0, x1, y0, y1] = v[..] else {
            return Err(Error::invalid(format!("window {s:?} needs four numbers x0,x1,y0,y1")));
        };
        Window::new(x0, x1, y0, y1)
    }
}

/// A piece of the curve `|g| = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    #[serde(with = "cpair::vec")]
    pub points: Vec<Complex64>,
    /// The last point connects back to the first.
    pub closed: bool,
}

const CLAMP: f64 = 1e3;

fn level(f: &impl Fn(Complex64) -> Complex64, z: Complex64) -> f64 {
    let v = f(z).norm().ln();
    if v.is_nan() {
        CLAMP
    } else {
        v.clamp(-CLAMP, CLAMP)
    }
}

/// Root of `level` on the segment `a -> b` (values `fa`, `fb` of opposite
/// sign): linear interpolation, then Illinois steps.
fn edge_root(f: &impl Fn(Complex64) -> Complex64, a: Complex64, b: Complex64, fa: f64, fb: f64) -> Complex64 {
    let (mut lo, mut hi, mut flo, mut fhi) = (0.0_f64, 1.0_f64, fa, fb);
    let mut side = 0;
    let mut t = flo / (flo - fhi);
    for _ in 0..60 {
        t = (lo * fhi - hi * flo) / (fhi - flo);
        if !t.is_finite() {
            t = 0.5 * (lo + hi);
        }
        let ft = level(f, a + (b - a) * t);
        if ft == 0.0 || (hi - lo) < 1e-15 {
            break;
        }
        if (ft > 0.0) == (flo > 0.0) {
            lo = t;
            flo = ft;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            fhi = ft;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    a + (b - a) * t
}

/// Edge of the grid: `(vertical, i, j)` starting at node `(i, j)`.
type EdgeId = (bool, usize, usize);

/// Marching squares for the zero set of `log|f|` on a `resolution^2` cell
/// grid; chains of crossing points, closed ones flagged.
fn march(f: &(impl Fn(Complex64) -> Complex64 + Sync), window: &Window, resolution: usize) -> Vec<Polyline> {
    let n = resolution;
    let dx = window.width() / n as f64;
    let dy = window.height() / n as f64;
    let node = |i: usize, j: usize| Complex64::new(window.x0 + i as f64 * dx, window.y0 + j as f64 * dy);
    let values: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|j| (0..=n).map(|i| level(f, node(i, j))).collect())
        .collect();
    let v = |i: usize, j: usize| values[j][i];
    let pos = |i: usize, j: usize| v(i, j) >= 0.0;

    let mut points: HashMap<EdgeId, Complex64> = HashMap::new();
    let mut crossing = |e: EdgeId| -> EdgeId {
        points.entry(e).or_insert_with(|| {
            let (vert, i, j) = e;
            let (i2, j2) = if vert { (i, j + 1) } else { (i + 1, j) };
            edge_root(f, node(i, j), node(i2, j2), v(i, j), v(i2, j2))
        });
        e
    };
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let c = [pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1)];
            let bottom = (false, i, j);
            let right = (true, i + 1, j);
            let top = (false, i, j + 1);
            let left = (true, i, j);
            let edges = [bottom, right, top, left];
            let cut: Vec<EdgeId> = (0..4).filter(|&k| c[k] != c[(k + 1) % 4]).map(|k| edges[k]).collect();
            match cut.len() {
                2 => segments.push((crossing(cut[0]), crossing(cut[1]))),
                4 => {
                    let center = level(f, node(i, j) + Complex64::new(0.5 * dx, 0.5 * dy)) >= 0.0;
                    // corner k is cut off by the segment joining edges k-1 and k
                    let lonely = if center == c[0] { [1, 3] } else { [0, 2] };
                    for k in lonely {
                        segments.push((crossing(edges[(k + 3) % 4]), crossing(edges[k])));
                    }
                }
                _ => {}
            }
        }
    }

    let mut adj: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adj.entry(a).or_default().push(s);
        adj.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let walk = |start: EdgeId, used: &mut Vec<bool>| -> (Vec<EdgeId>, bool) {
        let mut chain = vec![start];
        let mut cur = start;
        loop {
            let next = adj[&cur].iter().copied().find(|&s| !used[s]);
            let Some(s) = next else { break };
            used[s] = true;
            let (a, b) = segments[s];
            cur = if a == cur { b } else { a };
            if cur == start {
                return (chain, true);
            }
            chain.push(cur);
        }
        (chain, false)
    };
    // open chains start at edges with one segment
    let mut ends: Vec<EdgeId> = adj.iter().filter(|(_, s)| s.len() == 1).map(|(e, _)| *e).collect();
    ends.sort_unstable();
    for e in ends {
        if adj[&e].iter().all(|&s| used[s]) {
            continue;
        }
        let (chain, closed) = walk(e, &mut used);
        out.push((chain, closed));
    }
    let mut rest: Vec<EdgeId> = adj.keys().copied().collect();
    rest.sort_unstable();
    for e in rest {
        if adj[&e].iter().all(|&s| used[s]) {
            continue;
        }
        let (chain, closed) = walk(e, &mut used);
        out.push((chain, closed));
    }
    let diag = dx.hypot(dy);
    out.into_iter()
        .map(|(chain, closed)| {
            let pts: Vec<Complex64> = chain.iter().map(|e| points[e]).collect();
            let closed = closed || (pts.len() > 2 && (pts[0] - pts[pts.len() - 1]).norm() <= diag);
            Polyline { points: pts, closed }
        })
        .collect()
}

fn check_args(resolution: usize) -> Result<()> {
    if resolution < 16 {
        return Err(Error::invalid(format!("resolution {resolution} is below 16")));
    }
    Ok(())
}

/// The curve `|g| = 1` inside `window`, by marching squares on
/// `log|g|` (clamped to `+-1e3`) with crossings refined along grid edges.
pub fn singular_curve_extract(g: &RationalFn, window: &Window, resolution: usize) -> Result<Vec<Polyline>> {
    check_args(resolution)?;
    let window = Window::new(window.x0, window.x1, window.y0, window.y1)?;
    Ok(march(&|z| g.eval(z), &window, resolution))
}

/// One connected component of `|g| = 1` on the sphere that meets the
/// window, with its pieces inside the window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularComponent {
    pub pieces: Vec<Polyline>,
    pub closed: bool,
    /// The component leaves the window and is joined outside it.
    pub leaves_window: bool,
}

/// Components of `|g| = 1` meeting the window. Open pieces are joined
/// through the chart `w = 1 / (z - c)`, `c` the window centre, which covers
/// the complement of the window.
pub fn singular_components(g: &RationalFn, window: &Window, resolution: usize) -> Result<Vec<SingularComponent>> {
    let pieces = singular_curve_extract(g, window, resolution)?;
    let (closed, open): (Vec<Polyline>, Vec<Polyline>) = pieces.into_iter().partition(|p| p.closed);
    let mut out: Vec<SingularComponent> = closed
        .into_iter()
        .map(|p| SingularComponent { pieces: vec![p], closed: true, leaves_window: false })
        .collect();
    if open.is_empty() {
        return Ok(out);
    }
    let c = window.center();
    let inner = 0.5 * window.width().min(window.height());
    let rho = 1.2 / inner;
    let outer = march(&|w: Complex64| g.eval(c + w.inv()), &Window::square(rho), resolution);
    let outer: Vec<Vec<Complex64>> = outer
        .iter()
        .map(|p| p.points.iter().map(|w| c + w.inv()).collect())
        .collect();

    // link pieces sharing points in the overlap of the two charts
    let cell = (window.width() / resolution as f64).hypot(window.height() / resolution as f64);
    let near = |z: Complex64, w: Complex64| {
        // outer grid spacing in the z-plane at z
        let s = 2.0 * rho / resolution as f64 * (z - c).norm_sqr();
        (z - w).norm() <= 2.0 * cell.max(s * std::f64::consts::SQRT_2)
    };
    let n_open = open.len();
    let mut parent: Vec<usize> = (0..n_open + outer.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let mut linked = vec![false; n_open + outer.len()];
    for (i, piece) in open.iter().enumerate() {
        for (k, ol) in outer.iter().enumerate() {
            let hit = piece
                .points
                .iter()
                .filter(|z| (*z - c).norm() * rho >= 1.0)
                .any(|&z| ol.iter().any(|&w| w.is_finite() && near(z, w)));
            if hit {
                let (a, b) = (find(&mut parent, i), find(&mut parent, n_open + k));
                parent[a] = b;
                linked[i] = true;
                linked[n_open + k] = true;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for i in 0..n_open {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(i),
            None => groups.push((r, vec![i], vec![])),
        }
    }
    for k in 0..outer.len() {
        let r = find(&mut parent, n_open + k);
        if let Some(g) = groups.iter_mut().find(|g| g.0 == r) {
            g.2.push(k);
        }
    }
    for (_, inner_ids, outer_ids) in groups {
        // every window endpoint continues outside and every outer endpoint
        // continues inside
        let ends_ok = inner_ids.iter().all(|&i| {
            let p = &open[i].points;
            [p[0], p[p.len() - 1]]
                .iter()
                .all(|&z| outer_ids.iter().any(|&k| outer[k].iter().any(|&w| w.is_finite() && near(z, w))))
        });
        let outer_ok = outer_ids.iter().all(|&k| {
            let ol = &outer[k];
            let closed_outer = (ol[0] - ol[ol.len() - 1]).norm() <= 1e-12 || ol.len() < 2;
            closed_outer
                || [ol[0], ol[ol.len() - 1]]
                    .iter()
                    .all(|&w| inner_ids.iter().any(|&i| open[i].points.iter().any(|&z| near(z, w))))
        });
        out.push(SingularComponent {
            pieces: inner_ids.iter().map(|&i| open[i].clone()).collect(),
            closed: ends_ok && outer_ok && inner_ids.iter().all(|&i| linked[i]),
            leaves_window: true,
        });
    }
    Ok(out)
}
