use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ansatz::{AnsatzFamily, AnsatzKind};
use super::select::{random_kernel_vector, PolarTable};
use super::solve::end_orders;
use super::system::{assemble_rows, finite_pole_points, nullspace_with_tol, residue_row, Moment};
use super::{combine, SolverOptions, SolverReport};
use crate::error::{Error, Result};
use crate::linalg::{min_norm_solve_real, real_nullspace};
use crate::rational::{residue_of_product, same_point, Laurent, PointExt, RationalFn};

/// Which conditions `g0` has to meet.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbMode {
    /// `g0 omega`, `g g0 omega` and `g0^2 omega` have no residues. The
    /// conditions are homogeneous, so `g0` scales freely; at a simple zero of
    /// `omega` they force `g0` to be regular.
    #[default]
    Strict,
    /// Only the real periods of the perturbed data vanish. This lets `g0`
    /// keep its poles at the zeros of `omega`, at the price of residues that
    /// are real rather than zero.
    Periods,
}

/// Output of [`perturb_to_maxface`].
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub g_tilde: RationalFn,
    pub g0: RationalFn,
    /// Former zeros of `omega`, now punctures.
    pub new_ends: Vec<Complex64>,
    pub report: SolverReport,
    /// Largest `|Res|` of `g0 omega`, `g g0 omega` over all points.
    pub linear_residual: f64,
    /// Largest `|Res(g0^2 omega)|`.
    pub quadratic_residual: f64,
    /// `sup |g0|` on the control circle.
    pub control_sup: f64,
    pub control_center: Complex64,
    pub control_radius: f64,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// `Res_p(b_u b_v omega)` for all `u, v`.
fn quadratic_tensor(basis: &[RationalFn], omega: &RationalFn, p: Complex64) -> DMatrix<Complex64> {
    let at = PointExt::Finite(p);
    let worst = basis.iter().map(|b| b.order_bound(at)).min().unwrap_or(0);
    let needed = -(2 * worst + omega.order_bound(at));
    let nb = basis.len();
    if needed <= 0 {
        return DMatrix::zeros(nb, nb);
    }
    let n = needed as usize;
    let om = omega.laurent(at, n);
    let series: Vec<Laurent> = basis.iter().map(|b| b.laurent(at, n)).collect();
    let with_omega: Vec<Laurent> = series.iter().map(|s| s.mul(&om, n)).collect();
    DMatrix::from_fn(nb, nb, |u, v| {
        let a = &with_omega[u];
        let b = &series[v];
        a.coeffs
            .iter()
            .enumerate()
            .map(|(i, &x)| x * b.coeff(-1 - (a.order + i as i32)))
            .sum()
    })
}

/// `[Re v; Im v]` and the real Jacobian of a holomorphic map with complex
/// Jacobian `j`.
fn realify(v: &DVector<Complex64>, j: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<f64>) {
    let (m, k) = j.shape();
    let f = DVector::from_fn(2 * m, |r, _| if r < m { v[r].re } else { v[r - m].im });
    let jr = DMatrix::from_fn(2 * m, 2 * k, |r, c| {
        let z = j[(r % m, c % k)];
        match (r < m, c < k) {
            (true, true) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
            (false, false) => z.re,
        }
    });
    (f, jr)
}

fn to_complex(x: &DVector<f64>) -> DVector<Complex64> {
    let k = x.len() / 2;
    DVector::from_fn(k, |i, _| Complex64::new(x[i], x[k + i]))
}

fn to_real(y: &DVector<Complex64>) -> DVector<f64> {
    let k = y.len();
    DVector::from_fn(2 * k, |i, _| if i < k { y[i].re } else { y[i - k].im })
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().map(|c| c.abs()).fold(0.0, f64::max)
}

/// Damped Gauss-Newton for `F(x) = 0` subject to the linear rows
/// `norm x = target`, with minimum-norm steps.
fn gauss_newton<F>(f: &F, norm: &DMatrix<f64>, target: &DVector<f64>, x0: DVector<f64>, iterations: usize) -> (DVector<f64>, f64, bool)
where
    F: Fn(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>),
{
    let merit = |x: &DVector<f64>| max_abs(&f(x).0).max(max_abs(&(norm * x - target)));
    let mut x = x0;
    let mut cur = merit(&x);
    for _ in 0..iterations {
        if cur <= 1e-14 {
            return (x, cur, true);
        }
        let (fv, jf) = f(&x);
        let rows = jf.nrows() + norm.nrows();
        let j = DMatrix::from_fn(rows, x.len(), |r, c| if r < jf.nrows() { jf[(r, c)] } else { norm[(r - jf.nrows(), c)] });
        let nres = target - norm * &x;
        let rhs = DVector::from_fn(rows, |r, _| if r < fv.len() { -fv[r] } else { nres[r - fv.len()] });
        let step = min_norm_solve_real(&j, &rhs, 1e-13);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &x + &step * t;
            let m = merit(&trial);
            if m < cur {
                x = trial;
                cur = m;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let ok = cur <= 1e-12;
    (x, cur, ok)
}

struct Setup {
    punctures: Vec<Complex64>,
    inf_is_end: bool,
    zeros: Vec<(Complex64, u32)>,
    points: Vec<Complex64>,
    size: usize,
    center: Complex64,
    radius: f64,
}

fn setup(g: &RationalFn, omega: &RationalFn, epsilon: f64, opts: &SolverOptions) -> Result<Setup> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if omega.is_zero() {
        return Err(Error::invalid("omega is identically zero"));
    }
    let punctures: Vec<Complex64> = finite_pole_points([g, omega]);
    let zeros: Vec<(Complex64, u32)> = omega
        .zeros()?
        .into_iter()
        .filter(|(z, _)| !punctures.iter().any(|p| same_point(*p, *z)))
        .collect();
    let inf_order = omega.form_order_at(PointExt::Infinity)?;
    let inf_is_end = g.has_pole_at_infinity() || inf_order < 0;
    if !inf_is_end && inf_order > 0 {
        return Err(Error::invalid("omega vanishes at infinity inside the domain; normalise first"));
    }
    if zeros.is_empty() {
        return Err(Error::invalid("omega has no zeros in the domain: already a maxface"));
    }
    let l: u32 = zeros.iter().map(|z| z.1).sum();
    let n = punctures.len() + inf_is_end as usize;
    let mut points = punctures.clone();
    points.extend(zeros.iter().map(|z| z.0));
    let far = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    Ok(Setup {
        punctures,
        inf_is_end,
        zeros,
        points,
        size: 3 * (l as usize + n),
        center: opts.control_center.unwrap_or(Complex64::new(far + 2.0, 0.0)),
        radius: opts.control_radius,
    })
}

/// `z^i / prod (z - z_j)^(e_j)` for `i = 1..size`.
fn family(size: usize, den: &[(Complex64, u32)]) -> Result<AnsatzFamily> {
    let den: Vec<(Complex64, u32)> = den.iter().copied().filter(|d| d.1 > 0).collect();
    let basis = (1..=size)
        .map(|i| RationalFn::from_factors(one(), &[(Complex64::new(0.0, 0.0), i as u32)], &den))
        .collect();
    let labels = (1..=size).map(|i| format!("alpha_{i}")).collect();
    AnsatzFamily::new(basis, labels, AnsatzKind::Perturbation)
}

/// Highest `k <= max` for which the order `-k` coefficient of `sum a_u b_u`
/// at `z` is present.
fn pole_order(basis: &[RationalFn], alpha: &[Complex64], z: Complex64, max: u32, tol: f64) -> u32 {
    (1..=max)
        .rev()
        .find(|&k| PolarTable::new(basis, PointExt::Finite(z), false).only_order(-(k as i32)).ratio(alpha) >= tol)
        .unwrap_or(0)
}

/// Homogeneous solve: linear kernel, then Gauss-Newton on the quadratic
/// residues in kernel coordinates.
fn solve_strict(
    g: &RationalFn,
    omega: &RationalFn,
    s: &Setup,
    den: &[(Complex64, u32)],
    opts: &SolverOptions,
) -> Result<(AnsatzFamily, Vec<Complex64>, usize)> {
    let fam = family(s.size, den)?;
    let go = g.mul(omega);
    let moments = vec![(Moment::G0, vec![omega]), (Moment::GG0, vec![&go])];
    let linear = assemble_rows(&s.points, &moments, &fam);
    let kernel = nullspace_with_tol(&linear, opts.rank_tol);
    if kernel.is_empty() {
        return Err(Error::numerical("linear perturbation constraints have a trivial kernel"));
    }
    let kmat = DMatrix::from_columns(&kernel);
    let forms: Vec<DMatrix<Complex64>> = s
        .points
        .iter()
        .filter_map(|&p| {
            let b = kmat.transpose() * quadratic_tensor(&fam.basis, omega, p) * &kmat;
            let m = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
            (m > 0.0).then(|| b / Complex64::new(m, 0.0))
        })
        .collect();
    let k = kernel.len();
    let residual = |x: &DVector<f64>| {
        let y = to_complex(x);
        let v = DVector::from_iterator(forms.len(), forms.iter().map(|b| (y.transpose() * b * &y)[(0, 0)]));
        let mut j = DMatrix::zeros(forms.len(), k);
        for (r, b) in forms.iter().enumerate() {
            let grad = (b + b.transpose()) * &y;
            j.row_mut(r).copy_from(&grad.transpose());
        }
        realify(&v, &j)
    };
    let unit: Vec<DVector<Complex64>> = (0..k)
        .map(|i| DVector::from_fn(k, |r, _| Complex64::new((r == i) as u8 as f64, 0.0)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut last = f64::NAN;
    for _ in 0..opts.newton_seeds.max(1) {
        let y0 = DVector::from_vec(random_kernel_vector(&unit, false, &mut rng));
        // Re(y0^H y) = 1, Im(y0^H y) = 0
        let norm = DMatrix::from_fn(2, 2 * k, |r, c| {
            let a = y0[c % k];
            match (r, c < k) {
                (0, true) => a.re,
                (0, false) => a.im,
                (_, true) => -a.im,
                (_, false) => a.re,
            }
        });
        let target = DVector::from_vec(vec![1.0, 0.0]);
        let (x, defect, ok) = gauss_newton(&residual, &norm, &target, to_real(&y0), opts.newton_iterations);
        last = defect;
        if ok {
            let alpha: Vec<Complex64> = (&kmat * to_complex(&x)).iter().copied().collect();
            return Ok((fam, alpha, k));
        }
    }
    Err(Error::numerical(format!(
        "Newton iteration on the quadratic residue constraint did not converge within {} iterations \
         from {} seeds (linear kernel dimension {k}, last defect {last:.3e})",
        opts.newton_iterations, opts.newton_seeds
    )))
}

/// Real period conditions on `g + g0`: `Im Res(g0 omega) = 0` and
/// `2 Res(g g0 omega) + Res(g0^2 omega) = 0` at every finite point, solved
/// for `alpha = t u` with `u` normalised.
struct PeriodSystem {
    t_rows: Vec<Vec<Complex64>>,
    l_rows: Vec<Vec<Complex64>>,
    tensors: Vec<DMatrix<Complex64>>,
    scales: Vec<f64>,
    nb: usize,
}

impl PeriodSystem {
    fn new(g: &RationalFn, omega: &RationalFn, fam: &AnsatzFamily, points: &[Complex64]) -> Self {
        let go = g.mul(omega);
        let mut sys = PeriodSystem { t_rows: vec![], l_rows: vec![], tensors: vec![], scales: vec![], nb: fam.len() };
        for &p in points {
            let at = PointExt::Finite(p);
            let t = residue_row(at, &[omega], &fam.basis);
            let l: Vec<Complex64> = residue_row(at, &[&go], &fam.basis).iter().map(|x| x * 2.0).collect();
            let s = t.iter().chain(&l).map(|x| x.norm()).fold(0.0, f64::max);
            sys.scales.push(if s > 0.0 { 1.0 / s } else { 1.0 });
            sys.t_rows.push(t);
            sys.l_rows.push(l);
            sys.tensors.push(quadratic_tensor(&fam.basis, omega, p));
        }
        sys
    }

    /// Linear part on the real vector `(Re alpha, Im alpha)`.
    fn linear(&self) -> DMatrix<f64> {
        let nb = self.nb;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, s) in self.scales.iter().enumerate() {
            let t = &self.t_rows[i];
            let l = &self.l_rows[i];
            rows.push((0..2 * nb).map(|c| s * if c < nb { t[c].im } else { t[c - nb].re }).collect());
            rows.push((0..2 * nb).map(|c| s * if c < nb { l[c].re } else { -l[c - nb].im }).collect());
            rows.push((0..2 * nb).map(|c| s * if c < nb { l[c].im } else { l[c - nb].re }).collect());
        }
        DMatrix::from_fn(rows.len(), 2 * nb, |r, c| rows[r][c])
    }

    /// `F(t u) / t` and its Jacobian in `u`.
    fn eval(&self, u: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let nb = self.nb;
        let lin = self.linear();
        let a = to_complex(u);
        let mut f = &lin * u;
        let mut j = lin;
        for (i, s) in self.scales.iter().enumerate() {
            let q = &self.tensors[i];
            let val = (a.transpose() * q * &a)[(0, 0)] * (t * s);
            let grad = (q + q.transpose()) * &a * Complex64::new(t * s, 0.0);
            f[3 * i + 1] += val.re;
            f[3 * i + 2] += val.im;
            for c in 0..nb {
                j[(3 * i + 1, c)] += grad[c].re;
                j[(3 * i + 1, nb + c)] -= grad[c].im;
                j[(3 * i + 2, c)] += grad[c].im;
                j[(3 * i + 2, nb + c)] += grad[c].re;
            }
        }
        (f, j)
    }
}

fn solve_periods(
    g: &RationalFn,
    omega: &RationalFn,
    s: &Setup,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<(AnsatzFamily, Vec<Complex64>, usize)> {
    let den: Vec<(Complex64, u32)> = s.zeros.iter().map(|&(z, m)| (z, 2 * m)).collect();
    let fam = family(s.size, &den)?;
    let sys = PeriodSystem::new(g, omega, &fam, &s.points);
    let kernel = real_nullspace(&sys.linear(), opts.rank_tol);
    if kernel.is_empty() {
        return Err(Error::numerical("linearised period constraints have a trivial kernel"));
    }
    let tables: Vec<PolarTable> = s
        .zeros
        .iter()
        .map(|&(z, m)| PolarTable::new(&fam.basis, PointExt::Finite(z), false).only_order(-2 * m as i32))
        .collect();
    let ck: Vec<DVector<Complex64>> = kernel.iter().map(|v| DVector::from_fn(v.len(), |i, _| Complex64::new(v[i], 0.0))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut last = f64::NAN;
    for _ in 0..opts.newton_seeds.max(1) {
        let u0 = DVector::from_iterator(2 * fam.len(), random_kernel_vector(&ck, true, &mut rng).iter().map(|c| c.re));
        let norm = DMatrix::from_fn(1, u0.len(), |_, c| u0[c]);
        let target = DVector::from_vec(vec![1.0]);
        let g0_of = |u: &DVector<f64>| combine(&fam.basis, to_complex(u).as_slice());
        let mut t = 0.5 * epsilon / sup_on_circle(&g0_of(&u0), s.center, s.radius);
        let mut u = u0.clone();
        let mut ok = false;
        for _ in 0..12 {
            let f = |x: &DVector<f64>| sys.eval(x, t);
            let (x, defect, conv) = gauss_newton(&f, &norm, &target, u.clone(), opts.newton_iterations);
            last = defect;
            if !conv {
                ok = false;
                break;
            }
            u = x;
            let sup = t * sup_on_circle(&g0_of(&u), s.center, s.radius);
            ok = true;
            if (sup / (0.5 * epsilon) - 1.0).abs() < 1e-3 {
                break;
            }
            t *= 0.5 * epsilon / sup;
            ok = false;
        }
        if !ok {
            continue;
        }
        let alpha: Vec<Complex64> = to_complex(&u).iter().map(|a| a * t).collect();
        // the linear rows kill the leading polar coefficient at z_j, which
        // is only produced by the quadratic term and so is of relative size t
        if tables.iter().all(|tb| tb.ratio(&alpha) >= opts.presence_tol * t) {
            return Ok((fam, alpha, kernel.len()));
        }
    }
    Err(Error::numerical(format!(
        "Newton iteration on the period constraints did not converge to a g0 with poles at every zero of omega \
         within {} iterations from {} seeds (last defect {last:.3e})",
        opts.newton_iterations, opts.newton_seeds
    )))
}

/// Perturbs `g` to `g + g0` with `g0 = sum alpha_i z^i / prod (z - z_j)^(2 m_j)`
/// over the zeros `z_j` of `omega`, which become punctures; `g0` is scaled
/// so that `sup |g0| = epsilon / 2` on the control circle.
pub fn perturb_to_maxface(
    g: &RationalFn,
    omega: &RationalFn,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<Perturbation> {
    let s = setup(g, omega, epsilon, opts)?;
    let (fam, alpha, kdim) = match opts.perturb_mode {
        PerturbMode::Strict => {
            let mut den: Vec<(Complex64, u32)> = s.zeros.iter().map(|&(z, m)| (z, 2 * m)).collect();
            loop {
                let (fam, alpha, kdim) = solve_strict(g, omega, &s, &den, opts)?;
                let seen: Vec<(Complex64, u32)> = den
                    .iter()
                    .map(|&(z, e)| (z, pole_order(&fam.basis, &alpha, z, e, opts.presence_tol)))
                    .collect();
                if seen == den {
                    break (fam, alpha, kdim);
                }
                // re-solve with the pole orders the solution actually has
                den = seen;
            }
        }
        PerturbMode::Periods => solve_periods(g, omega, &s, epsilon, opts)?,
    };

    let g0 = combine(&fam.basis, &alpha);
    let sup = sup_on_circle(&g0, s.center, s.radius);
    if !(sup > 0.0 && sup.is_finite()) {
        return Err(Error::numerical("perturbation vanishes on the control circle"));
    }
    let k = Complex64::new(0.5 * epsilon / sup, 0.0);
    let (alpha, g0) = match opts.perturb_mode {
        PerturbMode::Strict => (alpha.iter().map(|a| a * k).collect::<Vec<_>>(), g0.scale(k)),
        PerturbMode::Periods => (alpha, g0),
    };
    let control_sup = sup_on_circle(&g0, s.center, s.radius);
    let g_tilde = g.add(&g0);
    if opts.perturb_mode == PerturbMode::Periods {
        if let Some((z, m)) = s.zeros.iter().find(|&&(z, m)| g_tilde.pole_order_at(z) != 2 * m) {
            return Err(Error::numerical(format!(
                "the pole of g0 at {z} (order {}) is of second order in epsilon and cancels numerically; \
                 increase epsilon or move the control circle closer",
                2 * m
            )));
        }
    }

    let mut check: Vec<PointExt> = s.points.iter().map(|&p| PointExt::Finite(p)).collect();
    check.push(PointExt::Infinity);
    let (mut linear_residual, mut quadratic_residual, mut period_defect) = (0.0_f64, 0.0_f64, 0.0_f64);
    for &p in &check {
        let t0 = residue_of_product(&[&g0, omega], p);
        let l0 = residue_of_product(&[g, &g0, omega], p);
        let q0 = residue_of_product(&[&g0, &g0, omega], p);
        linear_residual = linear_residual.max(t0.norm()).max(l0.norm());
        quadratic_residual = quadratic_residual.max(q0.norm());
        let r = residue_of_product(&[omega], p);
        let t = residue_of_product(&[&g_tilde, omega], p);
        let sq = residue_of_product(&[&g_tilde, &g_tilde, omega], p);
        period_defect = period_defect.max((sq - r.conj()).norm()).max(t.im.abs());
    }
    let residual = match opts.perturb_mode {
        PerturbMode::Strict => linear_residual.max(quadratic_residual),
        PerturbMode::Periods => period_defect,
    };
    if residual > opts.residual_tol {
        return Err(Error::numerical(format!(
            "perturbation conditions hold only to {residual:.3e} (linear {linear_residual:.3e}, quadratic {quadratic_residual:.3e})"
        )));
    }

    let mut ends: Vec<PointExt> = s.punctures.iter().map(|&p| PointExt::Finite(p)).collect();
    if s.inf_is_end {
        ends.push(PointExt::Infinity);
    }
    ends.extend(s.zeros.iter().map(|z| PointExt::Finite(z.0)));
    let end_orders = end_orders(&g_tilde, omega, &ends)?;
    let mut notes = vec![format!(
        "control circle |z - {}| = {}, sup |g0| = {control_sup:.6e}",
        s.center, s.radius
    )];
    for (z, _) in &s.zeros {
        let k = g0.pole_order_at(*z);
        notes.push(format!("g0 has a pole of order {k} at {z}"));
    }
    let report = SolverReport {
        nullspace_dim: kdim,
        stage_dims: vec![kdim],
        residual,
        coeffs: alpha,
        labels: fam.labels.clone(),
        end_orders,
        notes,
    };
    Ok(Perturbation {
        g_tilde,
        g0,
        new_ends: s.zeros.iter().map(|z| z.0).collect(),
        report,
        linear_residual,
        quadratic_residual,
        control_sup,
        control_center: s.center,
        control_radius: s.radius,
    })
}

/// `max |f|` over 512 points of `|z - center| = radius`.
pub(crate) fn sup_on_circle(f: &RationalFn, center: Complex64, radius: f64) -> f64 {
    (0..512)
        .map(|k| f.eval(center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / 512.0)).norm())
        .fold(0.0, f64::max)
}
