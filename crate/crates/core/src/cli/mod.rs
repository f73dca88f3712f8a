//! `qmeasure` command-line front-end.
//!
//! Exit codes: 0 success, 1 validation or parse error, 2 a check failed,
//! 3 I/O error.

pub mod format;
pub mod specfile;

use std::f64::consts::PI;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bloch::{build_grid, CompressionMap};
use crate::error::Error;
use crate::information::{self, entanglement_surface, holevo_curves, p1_closed_form};
use crate::measurement::{
    apply_coherent, build_isometry, check_isometry, contract_to_meter, outcome_distribution, povm_elements,
    DephasingMatrix,
};
use crate::oracle::{self, choi_cp_check, fine_grid_reference, mc_integrate_rho, OracleReport, ReferenceQuantity};
use crate::qstate::{partial_trace, von_neumann_entropy, DensityMatrix, Keep};

use self::format::sig;
use self::specfile::{parse_spec_file, parse_state_file, FileError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CHECK: i32 = 2;
pub const EXIT_IO: i32 = 3;

const CSV_DIGITS: usize = 12;

#[derive(Debug, Parser)]
#[command(name = "qmeasure", version, about = "Generalized quantum measurement simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entanglement E(s, q) over the (s, q) grid as CSV `s,q,E_bits`.
    Fig2(Fig2Args),
    /// Holevo information of object and meter over q as CSV `q,I_A_bits,I_B_bits`.
    Fig3(Fig3Args),
    /// Apply a measurement file to an input state and print the results.
    Measure(MeasureArgs),
    /// Closed-form p1(q) against its quadrature value.
    P1(P1Args),
    /// Check completeness, isometry and POVM positivity of a measurement file.
    PovmCheck(PovmCheckArgs),
    /// Run the oracle suite; nonzero exit if any check fails.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Clone)]
pub struct GridArgs {
    #[arg(long, default_value_t = 96)]
    pub theta_nodes: usize,
    #[arg(long, default_value_t = 48)]
    pub phi_nodes: usize,
}

#[derive(Debug, Args, Clone)]
pub struct Fig2Args {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 61)]
    pub s_steps: usize,
    #[arg(long, default_value_t = 101)]
    pub q_steps: usize,
    /// Output CSV path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script for the CSV.
    #[arg(long)]
    pub plot_script: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct Fig3Args {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 101)]
    pub q_steps: usize,
    /// Gauss–Legendre nodes of the ensemble average over the input polar angle.
    #[arg(long, default_value_t = information::DEFAULT_ENSEMBLE_NODES)]
    pub ensemble_nodes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot_script: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct MeasureArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    /// Completeness tolerance; overrides the file's `tol` key.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct P1Args {
    /// Single q; otherwise a sweep of `--q-steps` points on [0, 1].
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 11)]
    pub q_steps: usize,
    #[arg(long, default_value_t = 128)]
    pub theta_nodes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct PovmCheckArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct VerifyArgs {
    /// Coarsest θ resolution of the convergence checks (then ×2, ×4).
    #[arg(long, default_value_t = 32)]
    pub theta_nodes: usize,
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,
    /// Override every check tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// With `--target-e`: check E(s, q) against the target.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = PI)]
    pub s: f64,
    #[arg(long)]
    pub target_e: Option<f64>,
}

#[derive(Debug)]
pub enum CliError {
    Validation(Vec<String>),
    CheckFailed(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::CheckFailed(_) => EXIT_CHECK,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msgs) => {
                for (i, m) in msgs.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "error: {m}")?;
                }
                Ok(())
            }
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Validation(vec![e.to_string()])
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(&cli.command, &mut out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = out.flush();
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

/// Runs one command, writing reports (and CSV when no `--out` is given) to `out`.
pub fn run(command: &Command, out: &mut dyn Write) -> CliResult<()> {
    command.validate()?;
    match command {
        Command::Fig2(a) => cmd_fig2(a, out),
        Command::Fig3(a) => cmd_fig3(a, out),
        Command::Measure(a) => cmd_measure(a, out),
        Command::P1(a) => cmd_p1(a, out),
        Command::PovmCheck(a) => cmd_povm_check(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

fn check_grid(g: &GridArgs, errors: &mut Vec<String>) {
    if g.theta_nodes < 2 {
        errors.push(format!("--theta-nodes must be >= 2 (got {})", g.theta_nodes));
    }
    if g.phi_nodes < 1 {
        errors.push(format!("--phi-nodes must be >= 1 (got {})", g.phi_nodes));
    }
}

fn check_tol(tol: Option<f64>, errors: &mut Vec<String>) {
    if let Some(t) = tol {
        if t < 0.0 || !t.is_finite() {
            errors.push(format!("--tol must be a nonnegative finite number (got {t})"));
        }
    }
}

impl Command {
    /// Collects every flag violation before any computation.
    pub fn validate(&self) -> CliResult<()> {
        let mut errors = Vec::new();
        match self {
            Command::Fig2(a) => {
                check_grid(&a.grid, &mut errors);
                if a.s_steps < 2 {
                    errors.push(format!("--s-steps must be >= 2 (got {})", a.s_steps));
                }
                if a.q_steps < 2 {
                    errors.push(format!("--q-steps must be >= 2 (got {})", a.q_steps));
                }
            }
            Command::Fig3(a) => {
                check_grid(&a.grid, &mut errors);
                if a.q_steps < 2 {
                    errors.push(format!("--q-steps must be >= 2 (got {})", a.q_steps));
                }
                if a.ensemble_nodes < 8 {
                    errors.push(format!("--ensemble-nodes must be >= 8 (got {})", a.ensemble_nodes));
                }
            }
            Command::Measure(a) => {
                check_tol(a.tol, &mut errors);
                if a.tol == Some(0.0) {
                    errors.push("--tol must be positive".into());
                }
            }
            Command::P1(a) => {
                if let Some(q) = a.q {
                    if !(0.0..=1.0).contains(&q) {
                        errors.push(format!("--q must lie in [0, 1] (got {q})"));
                    }
                } else if a.q_steps < 2 {
                    errors.push(format!("--q-steps must be >= 2 (got {})", a.q_steps));
                }
                if a.theta_nodes < 2 {
                    errors.push(format!("--theta-nodes must be >= 2 (got {})", a.theta_nodes));
                }
            }
            Command::PovmCheck(a) => check_tol(a.tol, &mut errors),
            Command::Verify(a) => {
                check_tol(a.tol, &mut errors);
                if a.theta_nodes < 2 {
                    errors.push(format!("--theta-nodes must be >= 2 (got {})", a.theta_nodes));
                }
                if let Some(q) = a.q {
                    if !(0.0..=1.0).contains(&q) {
                        errors.push(format!("--q must lie in [0, 1] (got {q})"));
                    }
                }
                if !(0.0..=PI).contains(&a.s) {
                    errors.push(format!("--s must lie in [0, π] (got {})", a.s));
                }
                if a.target_e.is_some() && a.q.is_none() {
                    errors.push("--target-e requires --q".into());
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errors))
        }
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

fn emit(path: Option<&Path>, content: &str, out: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => out
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn file_error(path: &Path, e: FileError) -> CliError {
    CliError::Validation(vec![format!("{}: {e}", path.display())])
}

fn gnuplot_script(csv: &Path, columns: &[&str], surface: bool) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    let file = csv.display();
    if surface {
        let _ = writeln!(
            s,
            "set xlabel '{}'\nset ylabel '{}'\nset zlabel '{}'",
            columns[1], columns[0], columns[2]
        );
        let _ = writeln!(s, "splot '{file}' using 2:1:3 with points pointtype 7 pointsize 0.3");
    } else {
        let _ = writeln!(s, "set xlabel '{}'\nset ylabel 'bits'", columns[0]);
        let series: Vec<String> = (2..=columns.len())
            .map(|c| format!("'{file}' using 1:{c} with lines"))
            .collect();
        let _ = writeln!(s, "plot {}", series.join(", "));
    }
    s
}

/// Builds the `fig2` CSV text.
pub fn fig2_csv(a: &Fig2Args) -> CliResult<String> {
    let grid = build_grid(a.grid.theta_nodes, a.grid.phi_nodes)?;
    let s_values = linspace(0.0, PI, a.s_steps);
    let q_values = linspace(0.0, 1.0, a.q_steps);
    let points = entanglement_surface(&s_values, &q_values, &grid)?;
    let mut csv = String::from("s,q,E_bits\n");
    for p in points {
        let _ = writeln!(
            csv,
            "{},{},{}",
            sig(p.s, CSV_DIGITS),
            sig(p.q, CSV_DIGITS),
            sig(p.bits, CSV_DIGITS)
        );
    }
    Ok(csv)
}

pub fn cmd_fig2(a: &Fig2Args, out: &mut dyn Write) -> CliResult<()> {
    let csv = fig2_csv(a)?;
    emit(a.out.as_deref(), &csv, out)?;
    if let Some(script) = &a.plot_script {
        let target = a.out.clone().unwrap_or_else(|| PathBuf::from("fig2.csv"));
        emit(Some(script), &gnuplot_script(&target, &["s", "q", "E_bits"], true), out)?;
    }
    Ok(())
}

/// Builds the `fig3` CSV text.
pub fn fig3_csv(a: &Fig3Args) -> CliResult<String> {
    let grid = build_grid(a.grid.theta_nodes, a.grid.phi_nodes)?;
    let q_values = linspace(0.0, 1.0, a.q_steps);
    let points = holevo_curves(&q_values, &grid, a.ensemble_nodes)?;
    let mut csv = String::from("q,I_A_bits,I_B_bits\n");
    for p in points {
        let _ = writeln!(
            csv,
            "{},{},{}",
            sig(p.q, CSV_DIGITS),
            sig(p.object, CSV_DIGITS),
            sig(p.meter, CSV_DIGITS)
        );
    }
    Ok(csv)
}

pub fn cmd_fig3(a: &Fig3Args, out: &mut dyn Write) -> CliResult<()> {
    let csv = fig3_csv(a)?;
    emit(a.out.as_deref(), &csv, out)?;
    if let Some(script) = &a.plot_script {
        let target = a.out.clone().unwrap_or_else(|| PathBuf::from("fig3.csv"));
        emit(
            Some(script),
            &gnuplot_script(&target, &["q", "I_A_bits", "I_B_bits"], false),
            out,
        )?;
    }
    Ok(())
}

/// Results printed by `measure`.
#[derive(Clone, Debug)]
pub struct MeasureReport {
    pub distribution: Vec<f64>,
    pub object_state: DensityMatrix,
    pub meter_state: DensityMatrix,
    pub entanglement_bits: f64,
}

pub fn measure_files(
    spec_text: &str,
    state_text: &str,
    tol: Option<f64>,
) -> std::result::Result<MeasureReport, CliError> {
    let file = parse_spec_file(spec_text).map_err(|e| CliError::Validation(vec![e.to_string()]))?;
    let tol = tol.unwrap_or(file.tol);
    let spec = file.spec;
    let rho = parse_state_file(state_text, spec.object_dim()).map_err(|e| CliError::Validation(vec![e.to_string()]))?;
    let v = build_isometry(&spec, tol)?;
    let joint = apply_coherent(&v, &rho)?;
    let object_state = partial_trace(&joint, (spec.object_dim(), spec.meter_dim()), Keep::First)?;
    let meter_state = contract_to_meter(&spec, &DephasingMatrix::coherent(spec.meter_dim()), &rho)?;
    Ok(MeasureReport {
        distribution: outcome_distribution(&spec, &rho)?,
        entanglement_bits: von_neumann_entropy(&object_state)?,
        object_state,
        meter_state,
    })
}

pub fn cmd_measure(a: &MeasureArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec_text = read(&a.spec)?;
    let state_text = read(&a.state)?;
    let report = measure_files(&spec_text, &state_text, a.tol).map_err(|e| match e {
        CliError::Validation(msgs) if msgs.len() == 1 && !msgs[0].contains(": ") => {
            CliError::Validation(vec![format!("{}: {}", a.spec.display(), msgs[0])])
        }
        other => other,
    })?;
    let mut text = String::new();
    let dist: Vec<String> = report.distribution.iter().map(|p| sig(*p, CSV_DIGITS)).collect();
    let _ = writeln!(text, "outcome distribution: {}", dist.join(", "));
    let _ = write!(text, "object state rho'_A:\n{:.10}", report.object_state.matrix());
    let _ = write!(text, "meter state rho_B:\n{:.10}", report.meter_state.matrix());
    let _ = writeln!(
        text,
        "entanglement (coherent output): {} bits",
        sig(report.entanglement_bits, CSV_DIGITS)
    );
    emit(None, &text, out)
}

pub fn cmd_p1(a: &P1Args, out: &mut dyn Write) -> CliResult<()> {
    let grid = build_grid(a.theta_nodes, 2)?;
    let qs = match a.q {
        Some(q) => vec![q],
        None => linspace(0.0, 1.0, a.q_steps),
    };
    let mut csv = String::from("q,p1_closed,p1_quadrature,abs_diff\n");
    for q in qs {
        let closed = p1_closed_form(q)?;
        let quad = information::post_measurement_object_state(PI, &CompressionMap::new(q)?, &grid)?.matrix()[(0, 0)].re;
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            sig(q, CSV_DIGITS),
            sig(closed, CSV_DIGITS),
            sig(quad, CSV_DIGITS),
            sig((closed - quad).abs(), 3)
        );
    }
    emit(a.out.as_deref(), &csv, out)
}

pub fn cmd_povm_check(a: &PovmCheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let text = read(&a.spec)?;
    let file = match parse_spec_file(&text) {
        Ok(f) => f,
        Err(FileError::Completeness { deviation, tol }) => {
            let msg = format!("FAIL completeness deviation={deviation:.3e} tol={tol:.1e}\n");
            emit(None, &msg, out)?;
            return Err(CliError::CheckFailed("completeness".into()));
        }
        Err(e) => return Err(file_error(&a.spec, e)),
    };
    let tol = a.tol.unwrap_or(file.tol);
    let spec = file.spec;
    let povm = povm_elements(&spec);
    let completeness = povm.completeness_deviation();
    let min_eig = povm.min_eigenvalue()?;
    let iso = build_isometry(&spec, f64::INFINITY)?;
    let iso_dev = check_isometry(&iso, tol).deviation;
    let checks = [
        ("completeness", completeness, completeness <= tol),
        ("isometry", iso_dev, iso_dev <= tol),
        ("povm_min_eigenvalue", min_eig, min_eig >= -tol),
    ];
    let mut text = format!("elements={} dim={}\n", povm.len(), spec.object_dim());
    for (name, value, ok) in &checks {
        let _ = writeln!(
            text,
            "{} {name} value={value:.3e} tol={tol:.1e}",
            if *ok { "PASS" } else { "FAIL" }
        );
    }
    emit(None, &text, out)?;
    if checks.iter().all(|c| c.2) {
        Ok(())
    } else {
        Err(CliError::CheckFailed("povm-check".into()))
    }
}

/// The oracle suite run by `verify`, one report per check.
pub fn verify_reports(a: &VerifyArgs) -> CliResult<Vec<OracleReport>> {
    let tol = |default: f64| a.tol.unwrap_or(default);
    let base = a.theta_nodes;
    let mut reports = Vec::new();

    let p1 = fine_grid_reference(ReferenceQuantity::P1 { q: 0.5 }, base, 1, tol(1e-7))?;
    reports.push(p1.report);

    let depolarized = (2.0 / 3.0) * (1.5f64).log2() + (1.0 / 3.0) * 3f64.log2();
    let e1 = fine_grid_reference(
        ReferenceQuantity::Entanglement { s: PI / 3.0, q: 1.0 },
        base,
        1,
        tol(1e-9),
    )?;
    reports.push(OracleReport::new(
        "entanglement_depolarized(s=pi/3,q=1)",
        e1.report.main,
        depolarized,
        e1.report.resolution.clone(),
        tol(1e-9),
    ));

    let emax = fine_grid_reference(ReferenceQuantity::Entanglement { s: PI, q: 0.7978 }, base, 1, tol(1e-3))?;
    reports.push(OracleReport::new(
        "entanglement_max(s=pi,q=0.7978)",
        emax.report.main,
        1.0,
        emax.report.resolution.clone(),
        tol(1e-3),
    ));
    reports.push(OracleReport::new(
        "entanglement_convergence(s=pi,q=0.7978)",
        emax.report.main,
        emax.extrapolated,
        emax.report.resolution.clone(),
        tol(1e-9),
    ));

    let ia = fine_grid_reference(
        ReferenceQuantity::HolevoObject { q: 0.0, s_nodes: 24 },
        base,
        1,
        tol(1e-5),
    )?;
    reports.push(OracleReport::new(
        "holevo_object(q=0)",
        ia.report.main,
        0.0,
        ia.report.resolution,
        tol(1e-5),
    ));
    let ib = fine_grid_reference(
        ReferenceQuantity::HolevoMeter { q: 0.0, s_nodes: 24 },
        base,
        1,
        tol(1e-2),
    )?;
    reports.push(OracleReport::new(
        "holevo_meter(q=0)",
        ib.report.main,
        1.0,
        ib.report.resolution,
        tol(1e-2),
    ));

    let grid = build_grid(4 * base, 2 * base)?;
    let quad = information::post_measurement_object_state(PI / 2.0, &CompressionMap::new(0.5)?, &grid)?;
    let mc = mc_integrate_rho(PI / 2.0, 0.5, 1_000_000, a.seed)?;
    reports.push(OracleReport::new(
        "mc_rho_max_entry_diff(s=pi/2,q=0.5)",
        quad.matrix().max_abs_diff(mc.matrix()),
        0.0,
        format!("N=1000000 seed={}", a.seed),
        tol(1e-2),
    ));

    let mut rng = oracle::random::seeded(a.seed);
    let spec = crate::measurement::preset(&crate::measurement::Preset::Entangling, 2)?;
    for (name, r) in [
        ("choi(entangling,R=1)", DephasingMatrix::coherent(2)),
        ("choi(entangling,R=I)", DephasingMatrix::dequantizing(2)),
    ] {
        let mut rep = choi_cp_check(&spec, r.matrix(), tol(1e-9))?;
        rep.quantity = name.into();
        reports.push(rep);
    }
    let random_spec = oracle::random::spec(&mut rng, 2, 5);
    let random_r = oracle::random::dephasing(&mut rng, 5, 3);
    let mut rep = choi_cp_check(&random_spec, random_r.matrix(), tol(1e-9))?;
    rep.quantity = "choi(random spec,random R)".into();
    reports.push(rep);

    if let (Some(q), Some(target)) = (a.q, a.target_e) {
        let grid = build_grid(96, 48)?;
        let e = information::entanglement(a.s, &CompressionMap::new(q)?, &grid)?;
        reports.push(OracleReport::new(
            format!("entanglement_target(s={:.4},q={q})", a.s),
            e,
            target,
            "theta_nodes=96 phi_nodes=48",
            tol(1e-3),
        ));
    }
    Ok(reports)
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let reports = verify_reports(a)?;
    let mut text = String::new();
    for r in &reports {
        let _ = writeln!(text, "{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    let _ = writeln!(text, "{} checks, {} failed", reports.len(), failed);
    emit(None, &text, out)?;
    if failed > 0 {
        Err(CliError::CheckFailed(format!("{failed} oracle check(s) failed")))
    } else {
        Ok(())
    }
}
