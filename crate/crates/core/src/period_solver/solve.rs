use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ansatz::{build_ansatz_basic, build_ansatz_correction, build_ansatz_simple_ends, default_c, with_infinity_terms};
use super::select::{select, PolarTable};
use super::system::{assemble_residue_system, assemble_rows, nullspace_with_tol, residue_row, Moment};
use super::{combine, EndOrders, SolverOptions, SolverReport};
use crate::error::{Error, Result};
use crate::gauss_map::pole_divisor;
use crate::linalg::real_nullspace;
use crate::quadrature::period_loops;
use crate::rational::{residue_of_product, same_point, PointExt, RationalFn};

/// Scale making the largest Weierstrass integrand times loop radius on the
/// period loops equal to one.
pub(crate) fn omega_scale(g: &RationalFn, f: &RationalFn, punctures: &[PointExt]) -> f64 {
    let mut m = 0.0_f64;
    for lp in period_loops(punctures) {
        for k in 0..256 {
            let z = lp.center + Complex64::from_polar(lp.radius, 2.0 * PI * k as f64 / 256.0);
            let gv = g.eval(z);
            let fv = f.eval(z);
            let g2 = gv * gv;
            let a = ((1.0 + g2) * fv).norm().max(((1.0 - g2) * fv).norm()).max((2.0 * gv * fv).norm());
            if a.is_finite() {
                m = m.max(a * lp.radius);
            }
        }
    }
    if m > 0.0 {
        1.0 / m
    } else {
        1.0
    }
}

/// `(Res f, Res g f, Res g^2 f)` at `p`.
pub(crate) fn form_residues(g: &RationalFn, f: &RationalFn, p: PointExt) -> [Complex64; 3] {
    [
        residue_of_product(&[f], p),
        residue_of_product(&[g, f], p),
        residue_of_product(&[g, g, f], p),
    ]
}

pub(crate) fn point_key(p: PointExt) -> String {
    match p {
        PointExt::Infinity => "inf".to_string(),
        PointExt::Finite(z) => format!("{:.12},{:.12}", z.re, z.im),
    }
}

pub(crate) fn end_orders(g: &RationalFn, f: &RationalFn, ends: &[PointExt]) -> Result<BTreeMap<String, EndOrders>> {
    // orders add; the expanded product g^2 f can lose a near pole-zero pair
    let mut out = BTreeMap::new();
    for &p in ends {
        let omega = f.form_order_at(p)?;
        out.insert(
            point_key(p),
            EndOrders {
                omega,
                g2_omega: 2 * g.order_at(p)? + omega,
            },
        );
    }
    Ok(out)
}

fn residue_points(g: &RationalFn, f: &RationalFn) -> Vec<PointExt> {
    let mut pts: Vec<PointExt> = Vec::new();
    for &(p, _) in g.poles().iter().chain(f.poles()) {
        if !pts.iter().any(|q| q.as_finite().is_some_and(|q| same_point(q, p))) {
            pts.push(PointExt::Finite(p));
        }
    }
    pts.push(PointExt::Infinity);
    pts
}

fn check_g(g: &RationalFn) -> Result<()> {
    if g.is_constant() {
        return Err(Error::invalid("Gauss map must be nonconstant"));
    }
    if !g.has_pole_at_infinity() {
        return Err(Error::invalid(
            "Gauss map has no pole at infinity; apply normalize_pole_at_infinity first",
        ));
    }
    Ok(())
}

/// `omega = F dz` with vanishing residues of `omega`, `g omega` and
/// `g^2 omega` and a pole at every pole of `g`.
pub fn solve_complete_ends(g: &RationalFn, opts: &SolverOptions) -> Result<(RationalFn, SolverReport)> {
    check_g(g)?;
    let poles = pole_divisor(g);
    let n = poles.len();
    let ends: Vec<PointExt> = poles.points().collect();
    let family = build_ansatz_basic(&poles)?;
    let system = assemble_residue_system(g, &family);
    let kernel = nullspace_with_tol(&system, opts.rank_tol);
    let mut stage_dims = vec![kernel.len()];
    if kernel.is_empty() {
        return Err(Error::numerical(format!(
            "basic residue system ({}x{}) has a trivial kernel",
            system.matrix.nrows(),
            system.matrix.ncols()
        )));
    }
    let tables: Vec<PolarTable> = ends.iter().map(|&p| PolarTable::new(&family.basis, p, true)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let table_refs: Vec<&PolarTable> = tables.iter().collect();
    let (mut coeffs, ratios) =
        select(&kernel, &table_refs, opts.samples, false, &mut rng).expect("kernel is nonempty");
    let mut labels = family.labels.clone();
    let mut basis = family.basis.clone();
    let mut notes = Vec::new();

    if ratios.iter().any(|&r| r < opts.presence_tol) {
        // keep infinity, then correct the finite ends separately
        let inf_table: Vec<&PolarTable> = tables.iter().filter(|t| t.point.is_infinite()).collect();
        let (c, _) = select(&kernel, &inf_table, opts.samples, false, &mut rng).expect("kernel is nonempty");
        coeffs = c;
        if inf_table[0].ratio(&coeffs) < opts.presence_tol {
            return Err(Error::numerical("no kernel element gives omega a pole at infinity"));
        }
        for t in &tables {
            let Some(p) = t.point.as_finite() else { continue };
            if t.ratio(&coeffs) >= opts.presence_tol {
                continue;
            }
            let corr = build_ansatz_correction(p, n)?;
            let moments = vec![(Moment::Omega, vec![]), (Moment::G, vec![g]), (Moment::G2, vec![g, g])];
            let sys = assemble_rows(&[p], &moments, &corr);
            let k = nullspace_with_tol(&sys, opts.rank_tol);
            stage_dims.push(k.len());
            let table = PolarTable::new(&corr.basis, t.point, true);
            let Some((alpha, r)) = select(&k, &[&table], opts.samples, false, &mut rng) else {
                return Err(Error::numerical(format!("correction system at {p} has a trivial kernel")));
            };
            if r[0] < opts.presence_tol {
                return Err(Error::numerical(format!("no correction produces a pole of omega at {p}")));
            }
            notes.push(format!("correction added at {p}"));
            coeffs.extend(alpha);
            basis.extend(corr.basis.iter().cloned());
            labels.extend(corr.labels.iter().map(|l| format!("{l}@{p}")));
        }
    }

    let f = combine(&basis, &coeffs);
    let s = omega_scale(g, &f, &ends);
    let f = f.scale(Complex64::new(s, 0.0));
    let coeffs: Vec<Complex64> = coeffs.iter().map(|c| c * s).collect();

    let mut residual = 0.0_f64;
    for p in residue_points(g, &f) {
        for r in form_residues(g, &f, p) {
            residual = residual.max(r.norm());
        }
    }
    if residual > opts.residual_tol {
        return Err(Error::numerical(format!(
            "residue conditions hold only to {residual:.3e} (tolerance {:.1e})",
            opts.residual_tol
        )));
    }
    let report = SolverReport {
        nullspace_dim: stage_dims[0],
        stage_dims,
        residual,
        coeffs,
        labels,
        end_orders: end_orders(g, &f, &ends)?,
        notes,
    };
    Ok((f, report))
}

/// Real-linear rows of the period conditions at one point, on the
/// coefficient vector `(Re c, Im c)`.
///
/// With `R, S, T` the residues of `omega, g^2 omega, g omega` the real
/// periods vanish iff `S = conj R` and `Im T = 0`; `strict_omega` also
/// demands `R = 0`.
fn period_rows(r: &[Complex64], s: &[Complex64], t: &[Complex64], strict_omega: bool) -> Vec<Vec<f64>> {
    let n = r.len();
    let split = |v: &dyn Fn(usize) -> Complex64| -> (Vec<f64>, Vec<f64>) {
        // Re and Im of sum v_u (x_u + i y_u) as rows over (x, y)
        let mut re = vec![0.0; 2 * n];
        let mut im = vec![0.0; 2 * n];
        for u in 0..n {
            let a = v(u);
            re[u] = a.re;
            re[n + u] = -a.im;
            im[u] = a.im;
            im[n + u] = a.re;
        }
        (re, im)
    };
    let (r_re, r_im) = split(&|u| r[u]);
    let (s_re, s_im) = split(&|u| s[u]);
    let (_, t_im) = split(&|u| t[u]);
    let mut rows = Vec::new();
    if strict_omega {
        rows.extend([r_re, r_im, s_re, s_im]);
    } else {
        rows.push(s_re.iter().zip(&r_re).map(|(a, b)| a - b).collect());
        rows.push(s_im.iter().zip(&r_im).map(|(a, b)| a + b).collect());
    }
    rows.push(t_im);
    rows
}

fn real_period_defect(res: [Complex64; 3], strict_omega: bool) -> f64 {
    let [r, t, s] = res;
    let d = if strict_omega {
        r.norm().max(s.norm())
    } else {
        (s - r.conj()).norm()
    };
    d.max(t.im.abs())
}

/// `omega` with complete ends at the poles of `g` and a double pole with
/// zero residue at every `q_j`; all real periods vanish.
pub fn solve_simple_ends(
    g: &RationalFn,
    simple: &[Complex64],
    opts: &SolverOptions,
) -> Result<(RationalFn, SolverReport)> {
    if simple.is_empty() {
        return solve_complete_ends(g, opts);
    }
    check_g(g)?;
    for (i, &q) in simple.iter().enumerate() {
        if g.pole_order_at(q) > 0 {
            return Err(Error::invalid(format!("simple end {q} coincides with a pole of g")));
        }
        if simple[..i].iter().any(|&r| same_point(r, q)) {
            return Err(Error::invalid(format!("simple end {q} is listed twice")));
        }
        let m = g.eval(q).norm();
        if (m - 1.0).abs() <= 1e-6 {
            return Err(Error::invalid(format!(
                "prescribed simple end {q} lies on the singular locus (|g| = {m})"
            )));
        }
    }
    let poles = pole_divisor(g);
    let c = opts.c.unwrap_or_else(|| default_c(&poles, simple));
    let family = with_infinity_terms(build_ansatz_simple_ends(&poles, simple, c)?, &poles, simple)?;
    let nb = family.len();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut points: Vec<(Complex64, bool)> = poles.finite_points().map(|p| (p, false)).collect();
    points.extend(simple.iter().map(|&q| (q, true)));
    for &(p, strict) in &points {
        let at = PointExt::Finite(p);
        let r = residue_row(at, &[], &family.basis);
        let t = residue_row(at, &[g], &family.basis);
        let s = residue_row(at, &[g, g], &family.basis);
        rows.extend(period_rows(&r, &s, &t, strict));
    }
    let global = rows.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    rows.retain(|r| r.iter().map(|v| v.abs()).fold(0.0, f64::max) > 1e-13 * global);
    let mut m = DMatrix::<f64>::zeros(rows.len(), 2 * nb);
    for (i, r) in rows.iter().enumerate() {
        let s = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (j, v) in r.iter().enumerate() {
            m[(i, j)] = v / s;
        }
    }
    let real_kernel = real_nullspace(&m, opts.rank_tol);
    let kernel: Vec<DVector<Complex64>> = real_kernel
        .iter()
        .map(|v| DVector::from_fn(nb, |u, _| Complex64::new(v[u], v[nb + u])))
        .collect();
    if kernel.is_empty() {
        return Err(Error::numerical(format!(
            "simple-end period system ({}x{}) has a trivial kernel",
            m.nrows(),
            m.ncols()
        )));
    }

    let ends: Vec<PointExt> = poles.points().collect();
    let mut tables: Vec<PolarTable> = ends.iter().map(|&p| PolarTable::new(&family.basis, p, true)).collect();
    tables.extend(
        simple
            .iter()
            .map(|&q| PolarTable::new(&family.basis, PointExt::Finite(q), true).only_order(-2)),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let refs: Vec<&PolarTable> = tables.iter().collect();
    let (coeffs, ratios) = select(&kernel, &refs, opts.samples, true, &mut rng).expect("kernel is nonempty");
    let missing: Vec<String> = tables
        .iter()
        .zip(&ratios)
        .filter(|(_, &r)| r < opts.presence_tol)
        .map(|(t, _)| t.point.to_string())
        .collect();
    if !missing.is_empty() {
        let dg = g.derivative();
        let witness: Vec<String> = simple
            .iter()
            .map(|&q| format!("|g g'|({q}) = {:.3e}", (g.eval(q) * dg.eval(q)).norm()))
            .collect();
        return Err(Error::numerical(format!(
            "no admissible omega: required poles absent at [{}] over a {}-dimensional kernel; \
             a double pole with zero residue and vanishing periods needs g(q) g'(q) = 0 ({})",
            missing.join(", "),
            kernel.len(),
            witness.join(", ")
        )));
    }

    let f = combine(&family.basis, &coeffs);
    let mut punctures = ends.clone();
    punctures.extend(simple.iter().map(|&q| PointExt::Finite(q)));
    let s = omega_scale(g, &f, &punctures);
    let f = f.scale(Complex64::new(s, 0.0));
    let coeffs: Vec<Complex64> = coeffs.iter().map(|c| c * s).collect();

    let mut residual = 0.0_f64;
    for p in residue_points(g, &f) {
        let strict = p.as_finite().is_some_and(|z| simple.iter().any(|&q| same_point(q, z)));
        residual = residual.max(real_period_defect(form_residues(g, &f, p), strict));
    }
    if residual > opts.residual_tol {
        return Err(Error::numerical(format!(
            "period conditions hold only to {residual:.3e} (tolerance {:.1e})",
            opts.residual_tol
        )));
    }
    let report = SolverReport {
        nullspace_dim: kernel.len(),
        stage_dims: vec![kernel.len()],
        residual,
        coeffs,
        labels: family.labels.clone(),
        end_orders: end_orders(g, &f, &punctures)?,
        notes: vec![format!("ansatz point c = {c}")],
    };
    Ok((f, report))
}
