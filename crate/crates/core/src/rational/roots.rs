use num_complex::Complex64;

use super::poly::Poly;
use crate::error::{Error, Result};

/// Floor for merging numerically computed roots into one multiple root.
pub const TAU_CLUSTER: f64 = 1e-7;

const MAX_ITER: usize = 4000;

/// All roots of `p` with multiplicities.
///
/// Roots come from Aberth-Ehrlich simultaneous iteration and nearby roots
/// are grouped into multiple roots. A k-fold root is only determined to
/// about `(eps * scale / |a_k|)^(1/k)` from the expanded coefficients, with
/// `a_k` the k-th Taylor coefficient at the cluster, so the admissible
/// cluster radius follows that estimate and never drops below
/// [`TAU_CLUSTER`]. The cluster centroid is refined by Newton steps on the
/// `(k-1)`-th derivative, where a k-fold root is simple.
pub fn poly_roots(p: &Poly) -> Result<Vec<(Complex64, u32)>> {
    let Some(deg) = p.degree() else {
        return Err(Error::invalid("poly_roots of the zero polynomial"));
    };
    if deg == 0 {
        return Ok(Vec::new());
    }

    // exact zeros at the origin
    let zero_mult = p.coeffs().iter().take_while(|c| c.norm() == 0.0).count();
    let reduced = Poly::new(p.coeffs()[zero_mult..].to_vec());

    let raw = aberth(&reduced);
    let mut out: Vec<(Complex64, u32)> = Vec::new();
    for group in cluster(&reduced, &raw) {
        let k = group.len() as u32;
        let mut centroid = group.iter().sum::<Complex64>() / group.len() as f64;
        // a k-fold root is a simple root of the (k-1)-th derivative
        let mut target = reduced.clone();
        for _ in 1..k {
            target = target.derivative();
        }
        centroid = newton_polish(&target, centroid);
        out.push((centroid, k));
    }
    if zero_mult > 0 {
        out.push((Complex64::new(0.0, 0.0), zero_mult as u32));
    }
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    Ok(out)
}

fn aberth(p: &Poly) -> Vec<Complex64> {
    let n = p.degree().unwrap_or(0);
    if n == 0 {
        return Vec::new();
    }
    let lead = p.leading();
    let monic: Vec<Complex64> = p.coeffs().iter().map(|&c| c / lead).collect();
    if n == 1 {
        return vec![-monic[0]];
    }
    let monic = Poly::new(monic);
    let dp = monic.derivative();

    // initial radius from the coefficient moduli (Fujiwara-type bound, halved)
    let radius = (0..n)
        .map(|k| monic.coeff(k).norm().powf(1.0 / (n - k) as f64))
        .fold(0.0_f64, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();

    for _ in 0..MAX_ITER {
        let mut max_step = 0.0_f64;
        for k in 0..n {
            let pk = monic.eval(z[k]);
            if pk.norm() == 0.0 {
                continue;
            }
            let ratio = pk / dp.eval(z[k]);
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| {
                    let d = z[k] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let mut w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !w.is_finite() {
                w = Complex64::new(1e-8, 1e-8) * (1.0 + z[k].norm());
            }
            z[k] -= w;
            max_step = max_step.max(w.norm() / (1.0 + z[k].norm()));
        }
        if max_step < 1e-15 {
            break;
        }
    }
    z
}

fn newton_polish(p: &Poly, mut z: Complex64) -> Complex64 {
    let dp = p.derivative();
    for _ in 0..8 {
        let f = p.eval(z);
        let d = dp.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - f / d;
        if p.eval(next).norm() >= f.norm() {
            break;
        }
        z = next;
    }
    z
}

/// Spread expected from rounding for a `k`-fold root near `center`:
/// `(eps * scale / |p^(k)(center)/k!|)^(1/k)`, never below `TAU_CLUSTER`.
fn cluster_radius(p: &Poly, k: usize, center: Complex64) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    let shifted = p.taylor_at(center);
    let ak = shifted.coeff(k).norm();
    let scale = p.eval_scale(center);
    let spread = if ak > 0.0 {
        16.0 * (f64::EPSILON * scale / ak).powf(1.0 / k as f64)
    } else {
        f64::INFINITY
    };
    let fixed = (8.0 * 1e-14_f64.powf(1.0 / k as f64)).max(TAU_CLUSTER) * center.norm().max(1.0);
    spread.max(fixed)
}

fn cluster(p: &Poly, roots: &[Complex64]) -> Vec<Vec<Complex64>> {
    let mut out = Vec::new();
    let mut stack = vec![roots.to_vec()];
    while let Some(group) = stack.pop() {
        if group.len() <= 1 {
            out.extend(group.into_iter().map(|z| vec![z]));
            continue;
        }
        let centroid = group.iter().sum::<Complex64>() / group.len() as f64;
        let diameter = group
            .iter()
            .flat_map(|a| group.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        if diameter <= cluster_radius(p, group.len(), centroid) {
            out.push(group);
            continue;
        }
        let (a, b) = split_longest_mst_edge(&group);
        stack.push(a);
        stack.push(b);
    }
    out
}

fn split_longest_mst_edge(pts: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    // Prim's algorithm, O(n^2)
    let n = pts.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    best[0] = 0.0;
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(n - 1);
    for _ in 0..n {
        let u = (0..n)
            .filter(|&i| !in_tree[i])
            .min_by(|&i, &j| best[i].total_cmp(&best[j]))
            .unwrap();
        in_tree[u] = true;
        if parent[u] != usize::MAX {
            edges.push((parent[u], u, best[u]));
        }
        for v in 0..n {
            let d = (pts[u] - pts[v]).norm();
            if !in_tree[v] && d < best[v] {
                best[v] = d;
                parent[v] = u;
            }
        }
    }
    let cut = edges
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .2.total_cmp(&b.1 .2))
        .map(|(i, _)| i)
        .unwrap();
    // components of the forest without the cut edge
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for (i, &(u, v, _)) in edges.iter().enumerate() {
        if i == cut {
            continue;
        }
        let (ru, rv) = (find(&mut label, u), find(&mut label, v));
        label[ru] = rv;
    }
    let root0 = find(&mut label, edges[cut].0);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for i in 0..n {
        if find(&mut label, i) == root0 {
            a.push(pts[i]);
        } else {
            b.push(pts[i]);
        }
    }
    (a, b)
}
