//! JSON job specifications, the construct/verify flow and the demos.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::gauss_map::{
    build_blaschke, compose_singular_curve, fujimori_map, normalize_pole_at_infinity, pole_divisor, BlaschkeSpec,
    SingularCurveSpec,
};
use crate::period_solver::{
    perturb_to_maxface, solve_simple_ends, PerturbMode, Perturbation, SolverOptions, SolverReport,
};
use crate::quadrature::min_gap;
use crate::rational::{cpair, same_point, PointExt, RationalFn};
use crate::sampler::{export_csv, export_obj, integrate_tree, mesh_domain, SurfaceMesh};
use crate::weierstrass::{singular_curve_extract, verify, VerificationReport, VerifyOptions, WeierstrassData, Window};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussMapSpec {
    Explicit(RationalFn),
    Blaschke(BlaschkeSpec),
    SingularCurve(SingularCurveSpec),
}

impl GaussMapSpec {
    pub fn build(&self) -> Result<RationalFn> {
        match self {
            GaussMapSpec::Explicit(g) => Ok(g.clone()),
            GaussMapSpec::Blaschke(b) => build_blaschke(b),
            GaussMapSpec::SingularCurve(s) => compose_singular_curve(s),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbSpec {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub epsilon: f64,
    #[serde(default)]
    pub mode: PerturbMode,
}

fn yes() -> bool {
    true
}

/// Every tolerance a job can override.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rank_tol: f64,
    pub presence_tol: f64,
    pub residual_tol: f64,
    pub period_tol: f64,
    pub light_like_tol: f64,
    pub compact_margin: f64,
    pub control_radius: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SolverOptions::default();
        let v = VerifyOptions::default();
        Tolerances {
            rank_tol: s.rank_tol,
            presence_tol: s.presence_tol,
            residual_tol: s.residual_tol,
            period_tol: v.period_tol,
            light_like_tol: v.light_like_tol,
            compact_margin: v.compact_margin,
            control_radius: s.control_radius,
        }
    }
}

impl Tolerances {
    /// Overrides one field by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::invalid(format!("tolerance {key} must be positive, got {value}")));
        }
        let mut v = serde_json::to_value(&*self)?;
        match v.get_mut(key) {
            Some(slot) => *slot = value.into(),
            None => {
                let known: Vec<&String> = v.as_object().map(|m| m.keys().collect()).unwrap_or_default();
                return Err(Error::invalid(format!("unknown tolerance {key:?}; expected one of {known:?}")));
            }
        }
        *self = serde_json::from_value(v)?;
        Ok(())
    }

    /// Parses `KEY=VAL` and applies it.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("expected KEY=VAL, got {assignment:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("tolerance {k}: {v:?} is not a number")))?;
        self.set(k.trim(), v)
    }

    pub fn solver_options(&self, seed: u64) -> SolverOptions {
        SolverOptions {
            seed,
            rank_tol: self.rank_tol,
            presence_tol: self.presence_tol,
            residual_tol: self.residual_tol,
            control_radius: self.control_radius,
            ..SolverOptions::default()
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            period_tol: self.period_tol,
            light_like_tol: self.light_like_tol,
            compact_margin: self.compact_margin,
        }
    }
}

/// File names written by `construct`, relative to the output directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub data: PathBuf,
    pub report: PathBuf,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { data: "data.json".into(), report: "report.json".into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub gauss_map: GaussMapSpec,
    #[serde(default, with = "cpair::vec", skip_serializing_if = "Vec::is_empty")]
    pub simple_ends: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb: Option<PerturbSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, with = "cpair::option", skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Complex64>,
    #[serde(default)]
    pub outputs: Outputs,
}

impl JobSpec {
    pub fn explicit(g: RationalFn) -> Self {
        JobSpec {
            gauss_map: GaussMapSpec::Explicit(g),
            simple_ends: Vec::new(),
            perturb: None,
            tolerances: Tolerances::default(),
            seed: 0,
            base_point: None,
            outputs: Outputs::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.perturb {
            if p.enabled && !(p.epsilon.is_finite() && p.epsilon > 0.0) {
                return Err(Error::invalid(format!("perturb.epsilon must be positive, got {}", p.epsilon)));
            }
        }
        if self.simple_ends.iter().any(|q| !q.is_finite()) {
            return Err(Error::invalid("simple ends must be finite"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: JobSpec = serde_json::from_str(text).map_err(|e| Error::invalid(format!("job spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_data(path: &Path) -> Result<WeierstrassData> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

/// Prefixes the message of `e` with the pipeline stage.
pub fn at_stage<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{stage}: {m}")),
        Error::NumericalFailure(m) => Error::NumericalFailure(format!("{stage}: {m}")),
        other => other,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbSummary {
    pub epsilon: f64,
    pub mode: PerturbMode,
    pub linear_residual: f64,
    pub quadratic_residual: f64,
    pub control_sup: f64,
    #[serde(with = "cpair::single")]
    pub control_center: Complex64,
    pub control_radius: f64,
    #[serde(with = "cpair::vec")]
    pub new_ends: Vec<Complex64>,
    pub report: SolverReport,
}

impl PerturbSummary {
    fn new(epsilon: f64, mode: PerturbMode, p: &Perturbation) -> Self {
        PerturbSummary {
            epsilon,
            mode,
            linear_residual: p.linear_residual,
            quadratic_residual: p.quadratic_residual,
            control_sup: p.control_sup,
            control_center: p.control_center,
            control_radius: p.control_radius,
            new_ends: p.new_ends.clone(),
            report: p.report.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstructReport {
    /// The finite pole of `g` sent to infinity while solving, if any. The
    /// solver works in `w = 1/(z - p)` and the result is pulled back to `z`.
    #[serde(with = "cpair::option")]
    pub normalized_pole: Option<Complex64>,
    pub solver: SolverReport,
    pub perturbation: Option<PerturbSummary>,
    /// Largest residual of every solving stage.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct Construction {
    pub data: WeierstrassData,
    pub report: ConstructReport,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `omega(mu(z)) mu'(z)` for `mu(z) = 1/(z - p)`.
fn pull_back_form(omega: &RationalFn, p: Complex64) -> Result<RationalFn> {
    let mu = RationalFn::mobius(zero(), one(), one(), -p)?;
    let dmu = RationalFn::inverse_power(p, 2).scale(-one());
    Ok(omega.compose(&mu)?.mul(&dmu))
}

fn pull_back_point(w: PointExt, p: Complex64) -> PointExt {
    match w {
        PointExt::Infinity => PointExt::Finite(p),
        PointExt::Finite(w) if w.norm() == 0.0 => PointExt::Infinity,
        PointExt::Finite(w) => PointExt::Finite(p + w.inv()),
    }
}

fn push_unique(v: &mut Vec<PointExt>, p: PointExt) {
    if !v.iter().any(|q| q.approx_eq(&p)) {
        v.push(p);
    }
}

/// Punctures of `(g, omega)`: poles of `g` and of `omega`, and the listed
/// extra ends.
pub fn punctures_of(g: &RationalFn, omega: &RationalFn, extra: &[PointExt]) -> Result<Vec<PointExt>> {
    let mut out = Vec::new();
    for p in pole_divisor(g).points() {
        push_unique(&mut out, p);
    }
    for &(p, _) in omega.poles() {
        push_unique(&mut out, PointExt::Finite(p));
    }
    if omega.form_order_at(PointExt::Infinity)? < 0 {
        push_unique(&mut out, PointExt::Infinity);
    }
    for &p in extra {
        push_unique(&mut out, p);
    }
    Ok(out)
}

/// A base point away from the punctures and the singular locus: the first
/// point of a fixed spiral with clearance `min(0.25, gap/4)` from every
/// obstacle and `||g| - 1| >= 0.05`.
pub fn choose_base_point(g: &RationalFn, omega: &RationalFn, punctures: &[PointExt]) -> Result<Complex64> {
    let mut obstacles: Vec<Complex64> = Vec::new();
    let candidates = punctures.iter().filter_map(|p| p.as_finite());
    let poles = g.poles().iter().chain(omega.poles()).map(|&(p, _)| p);
    for z in candidates.chain(poles) {
        if !obstacles.iter().any(|&q| same_point(q, z)) {
            obstacles.push(z);
        }
    }
    let clearance = min_gap(&obstacles).map_or(0.25, |d| (d / 4.0).min(0.25));
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for k in 0..4096 {
        let z = Complex64::from_polar(0.5 + 0.01 * k as f64, golden * k as f64);
        if obstacles.iter().any(|&p| (z - p).norm() < clearance) {
            continue;
        }
        let a = g.eval(z).norm();
        if a.is_finite() && (a - 1.0).abs() >= 0.05 && omega.eval(z).is_finite() {
            return Ok(z);
        }
    }
    Err(Error::numerical("no admissible base point found"))
}

/// Build `g`, send a pole to infinity, solve for `omega`, optionally
/// perturb to a maxface, and pull the result back to the original
/// coordinate.
pub fn construct(spec: &JobSpec) -> Result<Construction> {
    spec.validate()?;
    let g_orig = at_stage("gauss_map", spec.gauss_map.build())?;
    let (_, g) = at_stage("normalize", normalize_pole_at_infinity(&g_orig))?;
    let p = (!g_orig.has_pole_at_infinity()).then(|| g_orig.poles()[0].0);
    let to_w = |q: Complex64| -> Result<Complex64> {
        match p {
            Some(p) if same_point(p, q) => Err(Error::invalid(format!("simple end {q} coincides with a pole of g"))),
            Some(p) => Ok((q - p).inv()),
            None => Ok(q),
        }
    };
    let simple: Vec<Complex64> = at_stage("simple_ends", spec.simple_ends.iter().map(|&q| to_w(q)).collect())?;
    let opts = spec.tolerances.solver_options(spec.seed);
    let (omega, solver) = at_stage("solve", solve_simple_ends(&g, &simple, &opts))?;
    let mut residual = solver.residual;

    let mut g_w = g;
    let mut extra: Vec<PointExt> = simple.iter().map(|&q| PointExt::Finite(q)).collect();
    let mut perturbation = None;
    if let Some(ps) = spec.perturb.as_ref().filter(|p| p.enabled) {
        let popts = SolverOptions { perturb_mode: ps.mode, ..opts.clone() };
        let out = at_stage("perturb", perturb_to_maxface(&g_w, &omega, ps.epsilon, &popts))?;
        residual = residual.max(out.report.residual);
        extra.extend(out.new_ends.iter().map(|&z| PointExt::Finite(z)));
        perturbation = Some(PerturbSummary::new(ps.epsilon, ps.mode, &out));
        g_w = out.g_tilde;
    }
    if residual > spec.tolerances.residual_tol {
        return Err(Error::numerical(format!(
            "solve: residual {residual:.3e} exceeds {:.1e}",
            spec.tolerances.residual_tol
        )));
    }

    let (g_z, omega_z, extra_z) = match p {
        None => (g_w, omega, extra),
        Some(p) => {
            let mu = RationalFn::mobius(zero(), one(), one(), -p)?;
            let g_z = at_stage("pull_back", g_w.compose(&mu))?;
            let omega_z = at_stage("pull_back", pull_back_form(&omega, p))?;
            let extra_z = extra.into_iter().map(|q| pull_back_point(q, p)).collect();
            (g_z, omega_z, extra_z)
        }
    };
    let punctures = at_stage("punctures", punctures_of(&g_z, &omega_z, &extra_z))?;
    let base = match spec.base_point {
        Some(b) => b,
        None => at_stage("base_point", choose_base_point(&g_z, &omega_z, &punctures))?,
    };
    let data = at_stage("data", WeierstrassData::new(g_z, omega_z, punctures, base))?;
    Ok(Construction {
        data,
        report: ConstructReport { normalized_pole: p, solver, perturbation, residual },
    })
}

pub fn verify_data(data: &WeierstrassData, tol: &Tolerances) -> Result<VerificationReport> {
    at_stage("verify", verify(data, &tol.verify_options()))
}

/// Default exclusion radius for sampling: a tenth of the smallest gap
/// between finite punctures, at most 0.2.
pub fn default_exclusion(data: &WeierstrassData) -> f64 {
    let pts = data.finite_punctures();
    min_gap(&pts).map_or(0.2, |d| (d / 10.0).min(0.2))
}

pub fn sample(data: &WeierstrassData, window: &Window, resolution: usize, exclusion: f64) -> Result<SurfaceMesh> {
    let mesh = at_stage("mesh", mesh_domain(&data.punctures, window, resolution, exclusion))?;
    at_stage("integrate", integrate_tree(data, &mesh))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Demo {
    Catenoid,
    Twinpole,
    JorgeMeeks,
    Fujimori,
}

impl Demo {
    pub const ALL: [Demo; 4] = [Demo::Catenoid, Demo::Twinpole, Demo::JorgeMeeks, Demo::Fujimori];

    pub fn name(self) -> &'static str {
        match self {
            Demo::Catenoid => "catenoid",
            Demo::Twinpole => "twinpole",
            Demo::JorgeMeeks => "jorge-meeks",
            Demo::Fujimori => "fujimori",
        }
    }

    /// Window and resolution used for sampling and the singular curve.
    pub fn window(self) -> (Window, usize) {
        match self {
            Demo::Catenoid => (Window::square(2.0), 64),
            Demo::Twinpole => (Window::square(2.5), 64),
            Demo::JorgeMeeks => (Window::square(1.6), 64),
            Demo::Fujimori => (Window::square(4.0), 512),
        }
    }
}

impl std::str::FromStr for Demo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Demo::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown demo {s:?}; expected catenoid, twinpole, jorge-meeks or fujimori")))
    }
}

/// Job for `g = z + 1/z`.
pub fn twin_pole_job() -> JobSpec {
    let mut spec = JobSpec::explicit(fixtures::twin_pole_map());
    spec.base_point = Some(Complex64::new(2.0, 0.0));
    spec
}

/// Perturbs `data` to a maxface, adding the new ends as punctures. `g` must
/// have a pole at infinity.
pub fn perturb_data(data: &WeierstrassData, ps: &PerturbSpec, opts: &SolverOptions) -> Result<Construction> {
    if !data.g.has_pole_at_infinity() {
        return Err(Error::invalid("perturb: g has no pole at infinity"));
    }
    let popts = SolverOptions { perturb_mode: ps.mode, ..opts.clone() };
    let out = at_stage("perturb", perturb_to_maxface(&data.g, &data.omega, ps.epsilon, &popts))?;
    let mut punctures = data.punctures.clone();
    for &z in &out.new_ends {
        push_unique(&mut punctures, PointExt::Finite(z));
    }
    let summary = PerturbSummary::new(ps.epsilon, ps.mode, &out);
    let residual = out.report.residual;
    let data = at_stage("data", WeierstrassData::new(out.g_tilde, data.omega.clone(), punctures, data.base_point))?;
    Ok(Construction {
        data,
        report: ConstructReport {
            normalized_pole: None,
            solver: summary.report.clone(),
            perturbation: Some(summary),
            residual,
        },
    })
}

/// Fujimori's map as a singular-curve spec: `-z` on the unit circle
/// precomposed with [`fujimori_map`].
pub fn fujimori_job() -> JobSpec {
    let mut spec = JobSpec::explicit(RationalFn::identity());
    spec.gauss_map = GaussMapSpec::SingularCurve(SingularCurveSpec {
        precompose: fujimori_map(),
        blaschke: BlaschkeSpec { radius: 1.0, zeros: vec![zero()], poles: vec![] },
    });
    spec
}

/// One verification inside a demo.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemoStep {
    pub name: String,
    pub passed: bool,
    pub failed_checks: Vec<String>,
    pub files: Vec<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemoOutcome {
    pub demo: Demo,
    pub steps: Vec<DemoStep>,
    pub max_loop_defect: Option<f64>,
    pub singular_components: usize,
}

fn verify_step(
    name: &str,
    data: &WeierstrassData,
    tol: &Tolerances,
    dir: &Path,
    extra: Vec<PathBuf>,
) -> Result<DemoStep> {
    let report = verify_data(data, tol)?;
    let data_path = dir.join(format!("{name}.data.json"));
    let report_path = dir.join(format!("{name}.verify.json"));
    write_json(&data_path, data)?;
    write_json(&report_path, &report)?;
    let mut files = extra;
    files.extend([data_path, report_path]);
    Ok(DemoStep {
        name: name.to_string(),
        passed: report.passed,
        failed_checks: report.failed_checks().into_iter().map(String::from).collect(),
        files,
    })
}

/// Runs a demo into `dir`: construction where there is one, verification
/// of every stage, an OBJ sample and the singular curve as CSV.
pub fn run_demo(demo: Demo, dir: &Path) -> Result<DemoOutcome> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tol = Tolerances::default();
    let mut steps = Vec::new();
    let data = match demo {
        Demo::Catenoid => fixtures::catenoid(),
        Demo::JorgeMeeks => fixtures::jorge_meeks(),
        Demo::Twinpole => {
            let c = construct(&twin_pole_job())?;
            let report_path = dir.join("construct.report.json");
            write_json(&report_path, &c.report)?;
            steps.push(verify_step("constructed", &c.data, &tol, dir, vec![report_path])?);
            // the worked kernel element 1/z^2 - 1 + z^2
            let worked = fixtures::twin_pole();
            steps.push(verify_step("maximal-map", &worked, &tol, dir, Vec::new())?);
            let ps = PerturbSpec { enabled: true, epsilon: 0.1, mode: PerturbMode::Periods };
            let c = perturb_data(&worked, &ps, &tol.solver_options(0))?;
            let report_path = dir.join("perturb.report.json");
            write_json(&report_path, &c.report)?;
            steps.push(verify_step("maxface", &c.data, &tol, dir, vec![report_path])?);
            c.data
        }
        Demo::Fujimori => {
            let c = construct(&fujimori_job())?;
            let report_path = dir.join("construct.report.json");
            write_json(&report_path, &c.report)?;
            steps.push(verify_step("fujimori", &c.data, &tol, dir, vec![report_path])?);
            c.data
        }
    };
    if matches!(demo, Demo::Catenoid | Demo::JorgeMeeks) {
        steps.push(verify_step(demo.name(), &data, &tol, dir, Vec::new())?);
    }

    let (window, resolution) = demo.window();
    let curves = at_stage("singular", singular_curve_extract(&data.g, &window, resolution))?;
    let csv = dir.join("singular.csv");
    export_csv(&curves, &csv)?;
    let components = crate::weierstrass::singular_components(&data.g, &window, resolution)?.len();

    let mut max_loop_defect = None;
    if window.contains(data.base_point) {
        let mesh = sample(&data, &window, resolution.min(96), default_exclusion(&data))?;
        let obj = dir.join("surface.obj");
        export_obj(&mesh, &obj)?;
        max_loop_defect = Some(mesh.max_loop_defect);
    }
    Ok(DemoOutcome { demo, steps, max_loop_defect, singular_components: components })
}
