//! Acceptance suite: one line per criterion.
//!
//! Run with `cargo test -p maxface --test acceptance`. Criteria listed in
//! `EXPECTED_RED` are reported but do not fail the run.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use maxface::fixtures::{jorge_meeks, random_gauss_map, twin_pole};
use maxface::gauss_map::{fujimori_map, pole_divisor};
use maxface::period_solver::{
    assemble_residue_system, build_ansatz_basic, nullspace, perturb_to_maxface, solve_simple_ends, SolverOptions,
};
use maxface::pipeline::{choose_base_point, construct, JobSpec};
use maxface::rational::{PointExt, Poly, RationalFn};
use maxface::sampler::{export_obj, integrate_tree, mesh_domain};
use maxface::weierstrass::{
    check_divisor_condition, classify_end, singular_components, singular_curve_extract, singular_set_compactness,
    verify, verify_periods, VerifyOptions, Window,
};
use maxface::{Complex64, WeierstrassData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXPECTED_RED: &[usize] = &[4];

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `\oint f dz` over `|z - center| = r` by the N-point trapezoid rule.
fn trapezoid<const K: usize>(f: impl Fn(Complex64) -> [Complex64; K], center: Complex64, r: f64, n: usize) -> ([Complex64; K], f64) {
    let mut acc = [c(0.0, 0.0); K];
    let mut scale = 0.0_f64;
    for k in 0..n {
        let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
        let v = f(center + e * r);
        for i in 0..K {
            let w = v[i] * e * r;
            scale = scale.max(w.norm());
            acc[i] += w * c(0.0, 2.0 * PI / n as f64);
        }
    }
    (acc, scale)
}

/// Oracle loops: radius 0.3 of the distance to the nearest other singular
/// point, and a clockwise circle well outside everything for infinity.
fn oracle_loops(d: &WeierstrassData) -> Vec<(PointExt, Complex64, f64, bool)> {
    let mut sing = d.finite_punctures();
    sing.extend(d.integrand_poles());
    let far = sing.iter().map(|z| z.norm()).fold(0.0, f64::max);
    d.punctures
        .iter()
        .map(|&p| match p {
            PointExt::Finite(z) => {
                let gap = sing
                    .iter()
                    .map(|w| (w - z).norm())
                    .filter(|&x| x > 1e-9)
                    .fold(f64::INFINITY, f64::min);
                let r = if gap.is_finite() { 0.3 * gap } else { 0.5 };
                (p, z, r, false)
            }
            PointExt::Infinity => (p, c(0.0, 0.0), 3.0 * far + 3.0, true),
        })
        .collect()
}

fn random_cases() -> Vec<RationalFn> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..50).map(|i| random_gauss_map(&mut rng, 2 + i % 5, 3, 0.2)).collect()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut worst = usize::MAX;
    for (i, g) in random_cases().iter().enumerate() {
        let poles = pole_divisor(g);
        let n = poles.len();
        let fam = build_ansatz_basic(&poles).map_err(|e| format!("case {i}: {e}"))?;
        let dim = nullspace(&assemble_residue_system(g, &fam)).len();
        if dim < n {
            return Err(format!("case {i}: kernel dimension {dim} < n = {n}"));
        }
        worst = worst.min(dim - n);
    }
    let el = t.elapsed();
    if el > Duration::from_secs(10) {
        return Err(format!("took {el:.2?} > 10 s"));
    }
    Ok(format!("50 cases, min(dim - n) = {worst}, {el:.2?}"))
}

fn construct_cases() -> Result<Vec<WeierstrassData>, String> {
    random_cases()
        .into_iter()
        .enumerate()
        .map(|(i, g)| construct(&JobSpec::explicit(g)).map(|c| c.data).map_err(|e| format!("case {i}: {e}")))
        .collect()
}

fn criterion_2(cases: &[WeierstrassData]) -> Outcome {
    let mut worst = 0.0_f64;
    let mut worst_oracle = 0.0_f64;
    let mut slowest = Duration::ZERO;
    for (i, d) in cases.iter().enumerate() {
        let t = Instant::now();
        let res = verify_periods(d, 1e-9).map_err(|e| format!("case {i}: {e}"))?;
        for r in &res {
            worst = worst.max(r.max());
        }
        for (p, center, r, cw) in oracle_loops(d) {
            let (v, scale) = trapezoid(|z| d.integrands(z), center, r, 1 << 14);
            let sign = if cw { -1.0 } else { 1.0 };
            let re = v.iter().map(|x| (x.re * sign).abs()).fold(0.0, f64::max);
            worst_oracle = worst_oracle.max(re);
            if re > 1e-9 + 1e-13 * scale {
                return Err(format!("case {i}: oracle real period {re:.3e} at {p}"));
            }
        }
        slowest = slowest.max(t.elapsed());
    }
    if worst > 1e-9 {
        return Err(format!("verify_periods residual {worst:.3e}"));
    }
    if slowest > Duration::from_secs(5) {
        return Err(format!("slowest case {slowest:.2?} > 5 s"));
    }
    Ok(format!(
        "{} cases, max residual {worst:.2e}, oracle {worst_oracle:.2e}, slowest {slowest:.2?}",
        cases.len()
    ))
}

fn criterion_3(cases: &[WeierstrassData]) -> Outcome {
    for (i, d) in cases.iter().enumerate() {
        for p in pole_divisor(&d.g).points() {
            let k = d.omega.form_order_at(p).map_err(|e| e.to_string())?;
            if k >= 0 {
                return Err(format!("case {i}: omega has order {k} at the pole {p} of g"));
            }
        }
        for &p in &d.punctures {
            let e = classify_end(d, p).map_err(|e| format!("case {i}: {e}"))?;
            if !e.complete {
                return Err(format!("case {i}: end {p} incomplete ({:?})", e.reason));
            }
        }
        let comp = singular_set_compactness(d);
        if !comp.ok {
            let f = &comp.failures[0];
            return Err(format!("case {i}: compactness fails at {}: {}", f.puncture, f.reason));
        }
    }
    Ok(format!("{} cases: poles of omega, complete ends, compact singular set", cases.len()))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut failures = Vec::new();
    for i in 0..20 {
        let g = random_gauss_map(&mut rng, 2 + i % 3, 2, 0.3);
        let m = 1 + i % 3;
        let mut qs: Vec<Complex64> = Vec::new();
        while qs.len() < m {
            let q = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let clear = g.poles().iter().map(|&(p, _)| p).chain(qs.iter().copied()).all(|p| (p - q).norm() >= 0.3);
            let a = g.eval(q).norm();
            if clear && (a - 1.0).abs() >= 0.1 {
                qs.push(q);
            }
        }
        match simple_end_case(&g, &qs) {
            Ok(()) => {}
            Err(e) => failures.push(format!("case {i}: {e}")),
        }
    }
    if failures.is_empty() {
        Ok("20 cases".into())
    } else {
        let first: String = failures[0].chars().take(110).collect();
        Err(format!("{}/20 cases fail; first: {first}", failures.len()))
    }
}

fn simple_end_case(g: &RationalFn, qs: &[Complex64]) -> Result<(), String> {
    let (f, _) = solve_simple_ends(g, qs, &SolverOptions::default()).map_err(|e| e.to_string())?;
    for &q in qs {
        let k = f.order_at(PointExt::Finite(q)).map_err(|e| e.to_string())?;
        if k != -2 {
            return Err(format!("omega has order {k} at {q}"));
        }
        let (v, scale) = trapezoid(|z| [f.eval(z)], q, 0.1, 4096);
        if v[0].norm() > 1e-9 * scale.max(1.0) {
            return Err(format!("residue {:.3e} at {q}", v[0].norm()));
        }
    }
    let mut punctures: Vec<PointExt> = pole_divisor(g).points().collect();
    punctures.extend(qs.iter().map(|&q| PointExt::Finite(q)));
    let base = choose_base_point(g, &f, &punctures).map_err(|e| e.to_string())?;
    let d = WeierstrassData::new(g.clone(), f, punctures, base).map_err(|e| e.to_string())?;
    for p in pole_divisor(g).points() {
        if !classify_end(&d, p).map_err(|e| e.to_string())?.complete {
            return Err(format!("end {p} incomplete"));
        }
    }
    if !singular_set_compactness(&d).ok {
        return Err("compactness fails".into());
    }
    Ok(())
}

fn criterion_5() -> Outcome {
    let d = twin_pole();
    let mut ratios = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let out = perturb_to_maxface(&d.g, &d.omega, eps, &SolverOptions::default()).map_err(|e| e.to_string())?;
        let g0 = out.g_tilde.add(&d.g.scale(c(-1.0, 0.0)));
        // residues of g0 w, g g0 w, g0^2 w by contour quadrature
        let mut centers = vec![c(0.0, 0.0)];
        centers.extend(out.new_ends.iter().copied());
        for &z in &centers {
            let f = |w: Complex64| {
                let (a, b, o) = (g0.eval(w), d.g.eval(w), d.omega.eval(w));
                [a * o, b * a * o, a * a * o]
            };
            let (v, _) = trapezoid(f, z, 0.2, 4096);
            let m = v.iter().map(|x| x.norm()).fold(0.0, f64::max) / (2.0 * PI);
            if m > 1e-9 {
                return Err(format!("eps {eps}: residue {m:.3e} at {z}"));
            }
        }
        if out.linear_residual.max(out.quadratic_residual) > 1e-9 {
            return Err(format!("eps {eps}: solver residual {:.3e}", out.linear_residual.max(out.quadratic_residual)));
        }
        let mut punctures = d.punctures.clone();
        punctures.extend(out.new_ends.iter().map(|&z| PointExt::Finite(z)));
        let data = WeierstrassData::new(out.g_tilde.clone(), d.omega.clone(), punctures, d.base_point)
            .map_err(|e| e.to_string())?;
        let div = check_divisor_condition(&data).map_err(|e| e.to_string())?;
        if !div.ok {
            return Err(format!("eps {eps}: divisor condition fails at {} points", div.witnesses.len()));
        }
        // sup over a polar grid of the closed disk |z - 3| <= 0.5
        let mut sup = 0.0_f64;
        for i in 0..=32 {
            for j in 0..128 {
                let z = c(3.0, 0.0) + Complex64::from_polar(0.5 * i as f64 / 32.0, 2.0 * PI * j as f64 / 128.0);
                sup = sup.max((out.g_tilde.eval(z) - d.g.eval(z)).norm());
            }
        }
        if sup > eps {
            return Err(format!("eps {eps}: sup |g~ - g| = {sup:.3e}"));
        }
        ratios.push(sup / eps);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &r| (a.min(r), b.max(r)));
    if hi > 2.0 * lo {
        return Err(format!("sup/eps ranges over [{lo:.3}, {hi:.3}]"));
    }
    Ok(format!("sup/eps in [{lo:.4}, {hi:.4}] for eps = 1e-1, 1e-2, 1e-3"))
}

fn criterion_6() -> Outcome {
    let d = jorge_meeks();
    let r = verify(&d, &VerifyOptions::default()).map_err(|e| e.to_string())?;
    if !r.periods_ok {
        return Err("period check fails".into());
    }
    if r.singular_set_compact {
        return Err("compactness check passes".into());
    }
    if !r.divisor_ok {
        return Err("divisor check fails".into());
    }
    // an end where |g| = 1 is where the singular set reaches the puncture
    let other: Vec<_> = r
        .ends
        .iter()
        .filter(|e| !e.complete && e.reason.as_deref() != Some("light-like limit at end"))
        .collect();
    if !other.is_empty() {
        return Err(format!("{} ends incomplete for another reason", other.len()));
    }
    Ok(format!("failed checks {:?}, ends light-like at |g| = 1", r.failed_checks()))
}

fn criterion_7() -> Outcome {
    let g = fujimori_map();
    let w = Window::square(4.0);
    let lines = singular_curve_extract(&g, &w, 512).map_err(|e| e.to_string())?;
    let comps = singular_components(&g, &w, 512).map_err(|e| e.to_string())?;
    let closed = comps.iter().filter(|c| c.closed).count();
    if comps.len() != 3 || closed != 3 {
        return Err(format!("{} components, {closed} closed", comps.len()));
    }
    for t in [0.5, -0.5, 1.0, -1.0, 2.0, -2.0] {
        let d = (g.eval(c(0.0, t)).norm() - 1.0).abs();
        if d > 1e-9 {
            return Err(format!("||G({t}i)| - 1| = {d:.3e}"));
        }
    }
    Ok(format!("{} polylines in the window, 3 closed components on the sphere", lines.len()))
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let d = maxface::fixtures::catenoid();
    let mesh = mesh_domain(&d.punctures, &Window::square(2.0), 64, 0.2).map_err(|e| e.to_string())?;
    let s = integrate_tree(&d, &mesh).map_err(|e| e.to_string())?;
    let dir = std::env::temp_dir().join(format!("maxface-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let path = dir.join("catenoid.obj");
    export_obj(&s, &path).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let _ = std::fs::remove_dir_all(&dir);
    let mut worst = 0.0_f64;
    let mut n = 0;
    for line in text.lines().filter(|l| l.starts_with("v ")) {
        let x: Vec<f64> = line[2..].split(' ').map(|v| v.parse().unwrap()).collect();
        // x1 + i x2 = 2 sinh(x3 / 2) e^{i theta}: the catenoid
        // z = e^{-x3/2 + i theta} pushed through z - 1/z
        let rel = (x[0] * x[0] + x[1] * x[1]).sqrt() - 2.0 * (x[2] / 2.0).sinh().abs();
        worst = worst.max(rel.abs());
        n += 1;
    }
    let el = t.elapsed();
    if worst > 1e-4 {
        return Err(format!("implicit relation off by {worst:.3e}"));
    }
    if s.max_loop_defect > 1e-8 {
        return Err(format!("loop defect {:.3e}", s.max_loop_defect));
    }
    if el > Duration::from_secs(10) {
        return Err(format!("took {el:.2?}"));
    }
    Ok(format!("{n} vertices, relation {worst:.2e}, loop defect {:.2e}, {el:.2?}", s.max_loop_defect))
}

fn random_form(rng: &mut ChaCha8Rng) -> RationalFn {
    let npoles = rng.gen_range(1..=6);
    let mut poles: Vec<(Complex64, u32)> = Vec::new();
    while poles.len() < npoles {
        let p = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if poles.iter().all(|(q, _)| (p - q).norm() >= 0.2) {
            poles.push((p, rng.gen_range(1..=3)));
        }
    }
    let dn = rng.gen_range(0..=8);
    let num = Poly::new((0..=dn).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
    RationalFn::from_parts(num, poles)
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_rel = 0.0_f64;
    let mut worst_total = 0.0_f64;
    for i in 0..100 {
        let f = random_form(&mut rng);
        let poles: Vec<Complex64> = f.poles().iter().map(|&(p, _)| p).collect();
        let mut scale_all = 0.0_f64;
        let mut total = c(0.0, 0.0);
        for &p in &poles {
            let gap = poles.iter().map(|q| (q - p).norm()).filter(|&x| x > 0.0).fold(1.0, f64::min);
            let (v, scale) = trapezoid(|z| [f.eval(z)], p, 0.3 * gap, 1 << 13);
            let oracle = v[0] / c(0.0, 2.0 * PI);
            let res = f.residue_at(PointExt::Finite(p));
            let rel = (res - oracle).norm() / scale.max(res.norm());
            worst_rel = worst_rel.max(rel);
            if rel > 1e-8 {
                return Err(format!("case {i}: residue at {p}: {res} vs {oracle}"));
            }
            total += res;
            scale_all = scale_all.max(res.norm());
        }
        let far = poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let (v, scale) = trapezoid(|z| [f.eval(z)], c(0.0, 0.0), 2.0 * far + 2.0, 1 << 13);
        let oracle_inf = -v[0] / c(0.0, 2.0 * PI);
        let res_inf = f.residue_at(PointExt::Infinity);
        let rel = (res_inf - oracle_inf).norm() / scale.max(res_inf.norm());
        worst_rel = worst_rel.max(rel);
        if rel > 1e-8 {
            return Err(format!("case {i}: residue at infinity: {res_inf} vs {oracle_inf}"));
        }
        total += res_inf;
        scale_all = scale_all.max(res_inf.norm());
        let sum = total.norm() / scale_all.max(1.0);
        worst_total = worst_total.max(sum);
        if sum > 1e-9 {
            return Err(format!("case {i}: residues sum to {:.3e}", total.norm()));
        }
    }
    Ok(format!("100 forms, relative error {worst_rel:.2e}, sphere total {worst_total:.2e}"))
}

fn main() -> ExitCode {
    let cases = construct_cases();
    let with_cases = |f: fn(&[WeierstrassData]) -> Outcome| -> Outcome {
        match &cases {
            Ok(c) => f(c),
            Err(e) => Err(format!("construction failed: {e}")),
        }
    };
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "nullspace dimension bound", criterion_1()),
        (2, "period condition", with_cases(criterion_2)),
        (3, "complete ends", with_cases(criterion_3)),
        (4, "simple ends", criterion_4()),
        (5, "maxface perturbation", criterion_5()),
        (6, "Jorge-Meeks negative fixture", criterion_6()),
        (7, "Fujimori singular curve", criterion_7()),
        (8, "catenoid geometry oracle", criterion_8()),
        (9, "residue engine oracle", criterion_9()),
    ];
    let mut unexpected = 0;
    for (k, name, r) in &results {
        match r {
            Ok(detail) => println!("criterion {k} PASS  {name}: {detail}"),
            Err(why) => {
                let note = if EXPECTED_RED.contains(k) {
                    " [expected]"
                } else {
                    unexpected += 1;
                    ""
                };
                println!("criterion {k} FAIL{note}  {name}: {why}");
            }
        }
    }
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
