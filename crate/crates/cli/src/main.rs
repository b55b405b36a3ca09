//! `sphopt`: classify critical points of homogeneous polynomials on the unit
//! sphere, probe them for second-order degeneracy, and run the experiment
//! suites.
//!
//! Exit codes: 0 success, 1 other error, 2 unparseable input, 3 zero
//! polynomial, 4 point not critical, 5 suite failure or degenerate hit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sphopt_core::classify::ClassifiedPointRecord;
use sphopt_core::degeneracy::detect_sosc_failure_with;
use sphopt_core::genlab::{
    run_degenerate_family, run_quadratic_sweep, run_random_genericity, run_witness_d2,
    run_witness_general, DegenerateKind, ExperimentConfig, ExperimentReport, Mode,
};
use sphopt_core::json::{self, fmt_f64};
use sphopt_core::{
    classify_all, exact_oracle_n2, DetectOutcome, Error,
    HomogeneousPolynomial, SolverConfig,
};

/// Adjustments to `--point` larger than this are reported on stderr.
const NORMALIZE_WARN: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "sphopt", version, about = "Critical points and second-order degeneracy on the unit sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find and classify every real critical point.
    Classify(ClassifyArgs),
    /// Look for a degeneracy witness at one critical point.
    Detect(DetectArgs),
    /// Exact witness-locus test for a binary form (n = 2).
    Oracle2(Oracle2Args),
    /// Run a deterministic witness suite.
    Witness(WitnessArgs),
    /// Randomized genericity sampling.
    Sample(SampleArgs),
    /// Random quadratic forms: eigenvalue criterion against the pipeline.
    Quad(QuadArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// Multistart count (default 50·d·n, capped at 20000).
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative FONC tolerance factor (tol = T·max(1, ‖f‖)).
    #[arg(long, value_name = "T")]
    tol_crit: Option<f64>,
    #[arg(long, value_name = "R")]
    dedup_radius: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut c = SolverConfig::with_seed(self.seed);
        c.starts = self.starts;
        if let Some(t) = self.tol_crit {
            c.tolerances.crit_factor = t;
        }
        if let Some(r) = self.dedup_radius {
            c.dedup_radius = r;
        }
        c
    }
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, value_name = "FILE")]
    poly: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
    /// Write to this file instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long, value_name = "FILE")]
    poly: PathBuf,
    /// Comma-separated coordinates, normalized to unit length.
    #[arg(long, value_name = "X1,...,XN", allow_hyphen_values = true)]
    point: String,
}

#[derive(Args)]
struct Oracle2Args {
    #[arg(long, value_name = "FILE")]
    poly: PathBuf,
    /// Print the full result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum WitnessMode {
    D2,
    General,
    Degenerate,
}

#[derive(Args)]
struct ReportArgs {
    /// Write the full JSON report here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Keep wall-clock runtime in the report (breaks byte-reproducibility).
    #[arg(long)]
    with_runtime: bool,
}

#[derive(Args)]
struct WitnessArgs {
    #[arg(long, value_enum)]
    mode: WitnessMode,
    #[arg(long)]
    n: usize,
    /// Degree; general needs d ≠ 2, degenerate uses d = 2 for the repeated
    /// eigenvalue family and d ≥ 3 for x₁^d.
    #[arg(long, default_value_t = 2)]
    d: u32,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: u32,
    #[arg(long)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Full JSON report (default: sample_n{N}_d{D}_seed{S}.json).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also write the per-trial CSV table.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Directory for polynomials that produced a hit (default: hits/ next to the report).
    #[arg(long, value_name = "DIR")]
    dump_dir: Option<PathBuf>,
    #[arg(long)]
    with_runtime: bool,
}

#[derive(Args)]
struct QuadArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Full JSON report (default: quad_n{N}_seed{S}.json).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    dump_dir: Option<PathBuf>,
    #[arg(long)]
    with_runtime: bool,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::DimensionMismatch { .. } | Error::NotUnit { .. } => 2,
            Error::ZeroPolynomial => 3,
            Error::NotCritical { .. } => 4,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn read_poly(path: &Path) -> Result<HomogeneousPolynomial, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(1, format!("cannot read {}: {e}", path.display())))?;
    HomogeneousPolynomial::from_json(&text).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn write_file(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::new(1, format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn vec_str(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&c| fmt_f64(c)).collect();
    format!("[{}]", parts.join(", "))
}

fn opt_str(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "none".into())
}

fn classify(args: &ClassifyArgs) -> CliResult {
    let f = read_poly(&args.poly)?;
    let config = args.solver.config();
    config.validate()?;
    let points = classify_all(&f, &config)?;
    let records: Vec<ClassifiedPointRecord> = points.iter().map(ClassifiedPointRecord::from).collect();

    let text = if args.json {
        json::to_string(&records) + "\n"
    } else if args.csv {
        let mut s = String::new();
        let xs: Vec<String> = (1..=f.n()).map(|i| format!("x{i}")).collect();
        writeln!(s, "{},lambda,residual,margin,verdict", xs.join(",")).unwrap();
        for r in &records {
            let coords: Vec<String> = r.x.iter().map(|&c| fmt_f64(c)).collect();
            writeln!(
                s,
                "{},{},{},{},{}",
                coords.join(","),
                fmt_f64(r.lambda),
                fmt_f64(r.residual),
                r.margin.map(fmt_f64).unwrap_or_default(),
                r.verdict.as_str()
            )
            .unwrap();
        }
        s
    } else {
        let mut s = String::new();
        for r in &records {
            writeln!(
                s,
                "{:<16} x = {}  λ = {}  margin = {}  residual = {}",
                r.verdict.as_str(),
                vec_str(&r.x),
                fmt_f64(r.lambda),
                opt_str(r.margin),
                fmt_f64(r.residual)
            )
            .unwrap();
        }
        let count = |name: &str| records.iter().filter(|r| r.verdict.as_str() == name).count();
        writeln!(
            s,
            "{} critical points: {} SOSC, {} FONC_ONLY, {} SONC_DEGENERATE",
            records.len(),
            count("SOSC"),
            count("FONC_ONLY"),
            count("SONC_DEGENERATE")
        )
        .unwrap();
        s
    };
    emit(args.out.as_deref(), &text)
}

fn parse_point(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::new(2, format!("--point: cannot parse coordinate {t:?}")))
        })
        .collect()
}

fn detect(args: &DetectArgs) -> CliResult {
    let f = read_poly(&args.poly)?;
    let mut x = parse_point(&args.point)?;
    if x.len() != f.n() {
        return Err(Failure::new(
            2,
            format!("--point has {} coordinates, polynomial has n = {}", x.len(), f.n()),
        ));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Failure::new(2, "--point is the zero vector"));
    }
    if (norm - 1.0).abs() > NORMALIZE_WARN {
        eprintln!("warning: --point has norm {}; normalized to unit length", fmt_f64(norm));
    }
    x.iter_mut().for_each(|v| *v /= norm);

    let tol = SolverConfig::default().tolerances;
    match detect_sosc_failure_with(&f, &x, &tol) {
        Ok(DetectOutcome::Witness(w)) => {
            println!("{}", json::to_string(&w));
            Ok(())
        }
        Ok(DetectOutcome::Sosc { margin: Some(m) }) => {
            println!("no witness: SOSC margin = {}", fmt_f64(m));
            Ok(())
        }
        Ok(DetectOutcome::Sosc { margin: None }) => {
            println!("no witness: n = 1, the tangent space is trivial");
            Ok(())
        }
        Ok(DetectOutcome::NotSonc { margin }) => {
            println!("no witness: SONC fails, margin = {}", fmt_f64(margin));
            Ok(())
        }
        Err(Error::NotCritical { residual, tol }) => Err(Failure::new(
            4,
            format!(
                "point is not critical: FONC residual {} > {}",
                fmt_f64(residual),
                fmt_f64(tol)
            ),
        )),
        Err(e) => Err(e.into()),
    }
}

fn oracle2(args: &Oracle2Args) -> CliResult {
    let f = read_poly(&args.poly)?;
    let r = exact_oracle_n2(&f)?;
    if args.json {
        println!("{}", json::to_string(&r));
    } else {
        println!("on_locus: {}", r.on_locus);
        println!("certificate: {}", r.certificate);
    }
    Ok(())
}

fn finish_report(report: ExperimentReport, with_runtime: bool) -> ExperimentReport {
    if with_runtime {
        report
    } else {
        report.without_runtime()
    }
}

fn print_checks(report: &ExperimentReport) {
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
}

fn suite_status(report: &ExperimentReport) -> CliResult {
    if report.passed {
        Ok(())
    } else {
        Err(Failure::new(5, format!("suite {} failed", report.label)))
    }
}

fn witness(args: &WitnessArgs) -> CliResult {
    let solver = SolverConfig::default();
    let report = match args.mode {
        WitnessMode::D2 => run_witness_d2(args.n, &solver)?,
        WitnessMode::General => run_witness_general(args.n, args.d, &solver)?,
        WitnessMode::Degenerate => {
            let kind = if args.d == 2 {
                DegenerateKind::RepeatedLambda1
            } else {
                DegenerateKind::SingleMonomial
            };
            run_degenerate_family(kind, args.n, args.d, &solver)?
        }
    };
    let report = finish_report(report, args.report.with_runtime);
    print_checks(&report);
    println!("suite {}: {}", report.label, if report.passed { "PASS" } else { "FAIL" });
    if let Some(p) = &args.report.out {
        write_file(p, &(report.to_json() + "\n"))?;
    }
    suite_status(&report)
}

/// Writes the JSON report, the optional CSV and any hit dumps.
fn write_random_outputs(
    report: &ExperimentReport,
    out: &Path,
    csv: Option<&Path>,
    dump_dir: Option<&Path>,
) -> CliResult {
    write_file(out, &(report.to_json() + "\n"))?;
    if let Some(c) = csv {
        write_file(c, &report.to_csv())?;
    }
    if !report.hits.is_empty() {
        let dir = dump_dir.map(Path::to_path_buf).unwrap_or_else(|| {
            out.parent()
                .filter(|d| !d.as_os_str().is_empty())
                .unwrap_or(Path::new("."))
                .join("hits")
        });
        let paths = report.dump_hits(&dir)?;
        for p in paths {
            eprintln!("hit polynomial written to {}", p.display());
        }
    }
    println!("report: {}", out.display());
    Ok(())
}

fn sample(args: &SampleArgs) -> CliResult {
    let mut config = ExperimentConfig::new(Mode::Random, args.n, args.d, args.trials, args.seed);
    config.solver.seed = args.seed;
    config.validate()?;
    let report = finish_report(run_random_genericity(&config)?, args.with_runtime);
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("sample_n{}_d{}_seed{}.json", args.n, args.d, args.seed)));
    let agg = &report.aggregate;
    println!("trials: {}", report.trials);
    println!("critical_points: {}", agg.total_critical);
    println!("degenerate_hits: {}", agg.total_degenerate);
    println!("rank_witnesses: {}", agg.total_rank_witnesses);
    println!("min_sosc_margin: {}", opt_str(agg.min_sosc_margin));
    if report.n == 2 {
        println!("oracle_on_locus: {}", agg.oracle_on_locus_count);
    }
    if report.d == 2 {
        println!("pipeline_disagreements: {}", agg.pipeline_disagreements);
    }
    write_random_outputs(&report, &out, args.csv.as_deref(), args.dump_dir.as_deref())?;
    suite_status(&report)
}

fn quad(args: &QuadArgs) -> CliResult {
    let solver = SolverConfig::with_seed(args.seed);
    let report = finish_report(run_quadratic_sweep(args.n, args.trials, args.seed, &solver)?, args.with_runtime);
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("quad_n{}_seed{}.json", args.n, args.seed)));
    println!("trials: {}", report.trials);
    println!("degenerate_draws: {}", report.aggregate.quadratic_degenerate_count);
    println!("pipeline_disagreements: {}", report.aggregate.pipeline_disagreements);
    write_random_outputs(&report, &out, args.csv.as_deref(), args.dump_dir.as_deref())?;
    suite_status(&report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify(a) => classify(a),
        Command::Detect(a) => detect(a),
        Command::Oracle2(a) => oracle2(a),
        Command::Witness(a) => witness(a),
        Command::Sample(a) => sample(a),
        Command::Quad(a) => quad(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
