use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use maxface::pipeline::{
    construct, default_exclusion, load_data, run_demo, sample, verify_data, write_json, Demo, JobSpec, Tolerances,
};
use maxface::sampler::{export_csv, export_obj};
use maxface::weierstrass::{singular_components, singular_curve_extract, Window};
use maxface::{Error, VerificationReport};

#[derive(Parser)]
#[command(name = "maxface", version, about = "Complete maximal maps and maxfaces in Lorentz-Minkowski space")]
struct Cli {
    /// Seed for kernel sampling; overrides the job spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL", global = true)]
    tol: Vec<String>,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a job spec and write the Weierstrass data and the solver report.
    Construct {
        spec: PathBuf,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Check periods, the divisor condition, ends and compactness.
    Verify { data: PathBuf },
    /// Integrate the immersion on a grid and write an OBJ mesh.
    Sample {
        data: PathBuf,
        #[arg(long, default_value = "-2,2,-2,2", allow_hyphen_values = true)]
        window: Window,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        /// Radius of the disks removed around punctures.
        #[arg(long)]
        exclusion: Option<f64>,
        /// Sample data that fails verification.
        #[arg(long)]
        force: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Extract the singular curve |g| = 1 and write it as CSV.
    Singular {
        data: PathBuf,
        #[arg(long, default_value = "-2,2,-2,2", allow_hyphen_values = true)]
        window: Window,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run a demo: catenoid, twinpole, jorge-meeks or fujimori.
    Demo {
        name: Demo,
        #[arg(short, long)]
        out: PathBuf,
    },
}

enum Failure {
    Verification(String),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn tolerances(cli: &Cli, base: Tolerances) -> Result<Tolerances, Error> {
    let mut t = base;
    for kv in &cli.tol {
        t.apply(kv)?;
    }
    Ok(t)
}

fn print_report(r: &VerificationReport) {
    let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
    let worst = r.period_residuals.iter().map(|p| p.max()).fold(0.0, f64::max);
    println!("periods      {}  max residual {worst:.3e}", mark(r.periods_ok));
    println!("divisor      {}  {} witnesses", mark(r.divisor_ok), r.divisor_witnesses.len());
    for w in &r.divisor_witnesses {
        println!("  {}: ord omega {}, pole of g {}", w.point, w.omega_order, w.g_pole_order);
    }
    println!("completeness {}", mark(r.ends_complete));
    for e in &r.ends {
        let order = e.dominant_order.map_or("none".to_string(), |k| k.to_string());
        let why = e.reason.as_deref().map(|r| format!(" ({r})")).unwrap_or_default();
        println!("  {}: |g| = {:.6}, dominant order {order}{why}", e.point, e.abs_g);
    }
    println!("compactness  {}", mark(r.singular_set_compact));
    for f in &r.compactness_failures {
        println!("  {} (r = {:.3e}): {} at {}", f.puncture, f.radius, f.reason, f.point);
    }
    println!("{}", if r.passed { "PASS" } else { "FAIL" });
}

fn verdict(r: &VerificationReport) -> Result<(), Failure> {
    if r.passed {
        Ok(())
    } else {
        Err(Failure::Verification(format!("failed checks: {}", r.failed_checks().join(", "))))
    }
}

fn mkdir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Construct { spec, out } => {
            let mut job = JobSpec::load(spec)?;
            job.tolerances = tolerances(cli, job.tolerances.clone())?;
            if let Some(s) = cli.seed {
                job.seed = s;
            }
            let c = construct(&job)?;
            mkdir(out)?;
            let data_path = out.join(&job.outputs.data);
            let report_path = out.join(&job.outputs.report);
            write_json(&data_path, &c.data)?;
            write_json(&report_path, &c.report)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&c.report).map_err(Error::from)?);
            } else {
                println!("kernel dimension {}", c.report.solver.nullspace_dim);
                println!("residual {:.3e}", c.report.residual);
                println!("punctures {}", c.data.punctures.len());
                println!("wrote {} and {}", data_path.display(), report_path.display());
            }
            Ok(())
        }
        Command::Verify { data } => {
            let d = load_data(data)?;
            let r = verify_data(&d, &tolerances(cli, Tolerances::default())?)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&r).map_err(Error::from)?);
            } else {
                print_report(&r);
            }
            verdict(&r)
        }
        Command::Sample { data, window, resolution, exclusion, force, out } => {
            let d = load_data(data)?;
            let tol = tolerances(cli, Tolerances::default())?;
            if !force {
                let r = verify_data(&d, &tol)?;
                if !r.passed {
                    return Err(Failure::Verification(format!(
                        "data fails {}; pass --force to sample anyway",
                        r.failed_checks().join(", ")
                    )));
                }
            }
            let ex = exclusion.unwrap_or_else(|| default_exclusion(&d));
            let mesh = sample(&d, window, *resolution, ex)?;
            export_obj(&mesh, out)?;
            if cli.json {
                let summary = serde_json::json!({
                    "vertices": mesh.positions.len(),
                    "triangles": mesh.triangles.len(),
                    "max_loop_defect": mesh.max_loop_defect,
                });
                println!("{summary}");
            } else {
                println!("{} vertices, {} triangles", mesh.positions.len(), mesh.triangles.len());
                println!("max_loop_defect {:.3e}", mesh.max_loop_defect);
            }
            Ok(())
        }
        Command::Singular { data, window, resolution, out } => {
            let d = load_data(data)?;
            let lines = singular_curve_extract(&d.g, window, *resolution)?;
            let comps = singular_components(&d.g, window, *resolution)?;
            export_csv(&lines, out)?;
            let closed = comps.iter().filter(|c| c.closed).count();
            if cli.json {
                println!("{}", serde_json::json!({ "polylines": lines.len(), "components": comps.len(), "closed": closed }));
            } else {
                println!("{} polylines, {} components ({closed} closed)", lines.len(), comps.len());
            }
            Ok(())
        }
        Command::Demo { name, out } => {
            let outcome = run_demo(*name, out)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&outcome).map_err(Error::from)?);
            } else {
                for s in &outcome.steps {
                    let failed = if s.passed { String::new() } else { format!(" ({})", s.failed_checks.join(", ")) };
                    println!("{:<12} {}{failed}", s.name, if s.passed { "pass" } else { "FAIL" });
                }
                if let Some(d) = outcome.max_loop_defect {
                    println!("max_loop_defect {d:.3e}");
                }
                println!("singular components {}", outcome.singular_components);
                println!("wrote {}", out.display());
            }
            match outcome.steps.last() {
                Some(s) if !s.passed => Err(Failure::Verification(format!(
                    "{}: failed checks: {}",
                    s.name,
                    s.failed_checks.join(", ")
                ))),
                _ => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::NumericalFailure(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
