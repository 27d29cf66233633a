use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperwave::exec::Execution;
use hyperwave::modes::{ModeError, ModeParameters, PhysicalUnits, DEFAULT_GAMMA};
use hyperwave::ode::IntegratorConfig;
use hyperwave::opalg::{derivation::verify_all, CheckReport};
use hyperwave::scattering::{self, ScatteringError};
use hyperwave::solutions::{self, Branch, Class, SolutionError, SolutionFamily};
use hyperwave::verify::{self, GridSpec, SystemId, VerifyError, VERSION};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "hyperwave", version, about = "Closed-form wave modes on a curved slab: checks and sweeps")]
struct Cli {
    /// Work distribution for grids and sweeps.
    #[arg(long, value_enum, default_value_t = ExecArg::Auto, global = true)]
    exec: ExecArg,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExecArg {
    Auto,
    Sequential,
    Parallel,
}

impl From<ExecArg> for Execution {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::Auto => Execution::Auto,
            ExecArg::Sequential => Execution::Sequential,
            ExecArg::Parallel => Execution::Parallel,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every exact operator check and print the reports as JSON.
    VerifyDerivation {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate a solution family on a uniform grid (CSV).
    #[command(allow_negative_numbers = true)]
    Eval {
        #[command(flatten)]
        mode: ModeArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residuals of one differential system on a solution family (JSON).
    #[command(allow_negative_numbers = true)]
    Residuals {
        /// One of 7, 10, 11c, 12, 14c, 16-17, 19.
        #[arg(long, value_parser = parse_system)]
        system: SystemId,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        mode: ModeArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the second-order equations and compare with the closed form (JSON).
    #[command(allow_negative_numbers = true)]
    IntegrateCheck {
        #[command(flatten)]
        mode: ModeArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = -2.0)]
        z0: f64,
        #[arg(long, default_value_t = 0.5)]
        z1: f64,
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        /// Largest accepted deviation.
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residual of the curved equation on the flat plane wave versus radius (CSV).
    #[command(allow_negative_numbers = true)]
    FlatLimit {
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        rho: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long = "epsilon-phys", default_value_t = 1.0)]
        epsilon_phys: f64,
        #[arg(long = "m-phys", default_value_t = 1.0)]
        m_phys: f64,
        #[arg(long = "P1", default_value_t = 0.6)]
        p1: f64,
        #[arg(long = "P2", default_value_t = 0.8)]
        p2: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reflection off the exponential barrier over a (k, q) grid (CSV).
    #[command(allow_negative_numbers = true)]
    Scatter {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
        k_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,5,10")]
        q_list: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct ModeArgs {
    #[arg(long = "E", default_value_t = 0.1)]
    energy: f64,
    #[arg(long = "M", default_value_t = 1.0)]
    mass: f64,
    #[arg(long, default_value_t = 0.3)]
    a: f64,
    #[arg(long, default_value_t = 0.4)]
    b: f64,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
}

impl ModeArgs {
    fn params(&self) -> ModeParameters {
        ModeParameters {
            energy: self.energy,
            mass: self.mass,
            a: self.a,
            b: self.b,
            gamma: self.gamma,
            sigma: None,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ClassArg {
    #[value(name = "I")]
    I,
    #[value(name = "II")]
    II,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegimeArg {
    Nonzero,
    Zero,
}

#[derive(Args, Debug, Clone, Copy)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value_t = ClassArg::I)]
    family: ClassArg,
    #[arg(long, value_enum, default_value_t = RegimeArg::Nonzero)]
    regime: RegimeArg,
    /// Helicity branch, + or -; ignored for the zero regime.
    #[arg(long, value_parser = parse_branch, allow_hyphen_values = true, default_value = "+")]
    branch: Branch,
}

impl FamilyArgs {
    fn family(&self) -> SolutionFamily {
        let class = match self.family {
            ClassArg::I => Class::I,
            ClassArg::II => Class::II,
        };
        match self.regime {
            RegimeArg::Nonzero => SolutionFamily::nonzero(class, self.branch),
            RegimeArg::Zero => SolutionFamily::zero(class),
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct GridArgs {
    #[arg(long, default_value_t = -3.0)]
    z_min: f64,
    #[arg(long, default_value_t = 1.0)]
    z_max: f64,
    #[arg(long, default_value_t = 81)]
    n: usize,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        GridSpec {
            z_min: self.z_min,
            z_max: self.z_max,
            n: self.n,
        }
    }
}

fn parse_branch(s: &str) -> Result<Branch, String> {
    match s {
        "+" | "plus" => Ok(Branch::Plus),
        "-" | "minus" => Ok(Branch::Minus),
        _ => Err(format!("expected + or -, got {s:?}")),
    }
}

fn parse_system(s: &str) -> Result<SystemId, String> {
    SystemId::parse(s).ok_or_else(|| format!("unknown system {s:?}; expected one of 7, 10, 11c, 12, 14c, 16-17, 19"))
}

// ---------------------------------------------------------------------------
// exit codes

/// Whether a library error reflects the request rather than the computation.
fn is_input_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        if e.is::<ModeError>() {
            return true;
        }
        if let Some(e) = e.downcast_ref::<SolutionError>() {
            return !matches!(e, SolutionError::Special(_));
        }
        if let Some(e) = e.downcast_ref::<VerifyError>() {
            return matches!(
                e,
                VerifyError::InvalidInput(_) | VerifyError::FamilyMismatch { .. } | VerifyError::Mode(_)
            ) || matches!(e, VerifyError::Solution(s) if !matches!(s, SolutionError::Special(_)));
        }
        if let Some(e) = e.downcast_ref::<ScatteringError>() {
            return matches!(
                e,
                ScatteringError::SubThreshold(_)
                    | ScatteringError::InvalidBarrier { .. }
                    | ScatteringError::InvalidSetup(_)
                    | ScatteringError::Mode(_)
            );
        }
        false
    })
}

enum Outcome {
    Pass,
    CheckFailed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HYPERWAVE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_input_error(&e) { 2 } else { 1 })
        }
    }
}

// ---------------------------------------------------------------------------
// output helpers

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn meta(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    let mut m = vec![("version".to_string(), VERSION.to_string())];
    m.extend(pairs.iter().map(|(k, v)| (k.to_string(), v.clone())));
    m
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn outcome(passed: bool) -> Outcome {
    if passed {
        Outcome::Pass
    } else {
        Outcome::CheckFailed
    }
}

// ---------------------------------------------------------------------------
// commands

#[derive(Serialize)]
struct DerivationOutput {
    version: &'static str,
    reports: Vec<CheckReport>,
}

#[derive(Serialize)]
struct IntegrateOutput {
    version: &'static str,
    params: ModeParameters,
    family: SolutionFamily,
    z0: f64,
    z1: f64,
    rel_tol: f64,
    abs_tol: f64,
    tol: f64,
    max_deviation: f64,
    passed: bool,
}

fn run(cli: Cli) -> Result<Outcome> {
    let exec = Execution::from(cli.exec);
    match cli.command {
        Command::VerifyDerivation { out } => {
            let reports = verify_all();
            for r in reports.iter().filter(|r| !r.passed) {
                log::error!("{} failed:\n{}", r.check_name, r.detail);
            }
            let passed = reports.iter().all(|r| r.passed);
            write_json(&out, &DerivationOutput { version: VERSION, reports })?;
            Ok(outcome(passed))
        }
        Command::Eval { mode, family, grid, out } => {
            let params = mode.params();
            let fam = family.family();
            let sigma = solutions::resolve_sigma(&params, &fam)?;
            let rows = solutions::evaluate_grid_with(&params, &fam, grid.z_min, grid.z_max, grid.n, exec)?;
            let metadata = meta(&[
                ("params", json(&params.with_sigma(sigma))),
                ("family", json(&fam)),
                ("grid", json(&grid.spec())),
            ]);
            let mut w = sink(&out)?;
            solutions::write_grid_csv(&mut w, &metadata, &rows)?;
            w.flush()?;
            Ok(Outcome::Pass)
        }
        Command::Residuals { system, tol, mode, family, grid, out } => {
            let params = mode.params();
            let fam = family.family();
            let source = verify::ClosedForm { params, family: fam };
            let report = verify::residuals_of(&source, &params, &fam, system, &grid.spec(), exec)?;
            for flag in &report.flags {
                log::warn!("{flag}");
            }
            // NaN fails too
            let passed = report.max_rel_residual <= tol;
            write_json(&out, &report)?;
            if !passed {
                eprintln!("{}: max relative residual {:e} exceeds {tol:e}", system.tag(), report.max_rel_residual);
            }
            Ok(outcome(passed))
        }
        Command::IntegrateCheck { mode, family, z0, z1, rel_tol, abs_tol, tol, out } => {
            let params = mode.params();
            let fam = family.family();
            let cfg = IntegratorConfig {
                rel_tol,
                abs_tol,
                ..Default::default()
            };
            let max_deviation = verify::integrate_and_compare(&params, &fam, z0, z1, &cfg)?;
            let passed = max_deviation <= tol;
            write_json(
                &out,
                &IntegrateOutput {
                    version: VERSION,
                    params,
                    family: fam,
                    z0,
                    z1,
                    rel_tol,
                    abs_tol,
                    tol,
                    max_deviation,
                    passed,
                },
            )?;
            Ok(outcome(passed))
        }
        Command::FlatLimit { rho, hbar, c, epsilon_phys, m_phys, p1, p2, out } => {
            let units = PhysicalUnits {
                rho: rho.first().copied().unwrap_or(1.0),
                hbar,
                c,
                epsilon_phys,
                m_phys,
                p1,
                p2,
            };
            let study = verify::flat_limit_study(&units, &rho)?;
            let metadata = meta(&[
                ("rho_list", json(&rho)),
                ("units", json(&units)),
                ("p3_squared", format!("{:e}", study.p3_squared)),
                ("evanescent", study.evanescent.to_string()),
            ]);
            let mut w = sink(&out)?;
            verify::write_flat_limit_csv(&mut w, &metadata, &study)?;
            w.flush()?;
            Ok(Outcome::Pass)
        }
        Command::Scatter { k_list, q_list, out } => {
            let rows = scattering::sweep(&k_list, &q_list, exec)?;
            let metadata = meta(&[("k_list", json(&k_list)), ("q_list", json(&q_list))]);
            let mut w = sink(&out)?;
            scattering::write_sweep_csv(&mut w, &metadata, &rows)?;
            w.flush()?;
            Ok(Outcome::Pass)
        }
    }
}
