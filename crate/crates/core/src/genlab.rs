//! Experiment harness: deterministic witness suites, degenerate families,
//! randomized genericity sampling and quadratic sweeps.
//!
//! Every runner returns an [`ExperimentReport`] holding per-trial records,
//! per-point records (for the structured suites), named pass/fail checks and
//! an aggregate. Random runs derive one seed per trial from the master seed,
//! so reports are reproducible regardless of thread scheduling.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify_all, classify_point_with, Verdict};
use crate::critsolve::{find_critical_pairs, CriticalPair, SolverConfig};
use crate::degeneracy::{
    bordered_determinant, bordered_scale, detect_sosc_failure_with, exact_oracle_n2,
    quadratic_degeneracy_with, reconstruct_from_witness, tangent_witness_scan, DetectOutcome,
};
use crate::polyhom::{HomogeneousPolynomial, PolynomialFile};
use crate::{json, seed, Error, Result};

/// Relative floor on `|det H|` at the witness polynomials' critical points.
pub const WITNESS_DET_FLOOR: f64 = 1e-6;

/// Largest `n` for which the witness polynomial's critical points are
/// enumerated in closed form (support sets times sign patterns).
pub const CLOSED_FORM_MAX_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Random,
    WitnessD2,
    WitnessGeneral,
    DegenerateFamily,
    QuadraticSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateKind {
    /// `½xᵀAx` with `A = diag(1, 1, 2, …, n−1)`.
    RepeatedLambda1,
    /// `x₁^d`, `d ≥ 3`.
    SingleMonomial,
}

impl fmt::Display for DegenerateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DegenerateKind::RepeatedLambda1 => "repeated_lambda1",
            DegenerateKind::SingleMonomial => "single_monomial",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: u32,
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    pub solver: SolverConfig,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, n: usize, d: u32, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            n,
            d,
            trials,
            seed,
            mode,
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.n == 0 || self.d == 0 {
            return Err(Error::InvalidConfig(format!(
                "need trials ≥ 1, n ≥ 1, d ≥ 1 (got trials = {}, n = {}, d = {})",
                self.trials, self.n, self.d
            )));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictHistogram {
    pub not_critical: usize,
    pub fonc_only: usize,
    pub sonc_degenerate: usize,
    pub sosc: usize,
}

impl VerdictHistogram {
    pub fn add(&mut self, v: Verdict) {
        match v {
            Verdict::NotCritical => self.not_critical += 1,
            Verdict::FoncOnly => self.fonc_only += 1,
            Verdict::SoncDegenerate => self.sonc_degenerate += 1,
            Verdict::Sosc => self.sosc += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.not_critical + self.fonc_only + self.sonc_degenerate + self.sosc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub critical_count: usize,
    pub verdict_histogram: VerdictHistogram,
    pub min_sosc_margin: Option<f64>,
    /// SONC_DEGENERATE verdicts.
    pub degenerate_hits: usize,
    /// Points where the rank detector returned a witness.
    pub rank_witnesses: usize,
    /// Exact complex-locus oracle, `n = 2` only.
    pub oracle_on_locus: Option<bool>,
    /// Repeated smallest eigenvalue of the Hessian, `d = 2` only.
    pub quadratic_degenerate: Option<bool>,
    /// For `d = 2`: the eigenvalue criterion agrees with the pipeline.
    pub pipeline_agrees: Option<bool>,
}

impl TrialRecord {
    pub fn is_hit(&self) -> bool {
        self.degenerate_hits > 0 || self.rank_witnesses > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub residual: f64,
    pub verdict: Verdict,
    /// `None` when `n = 1`.
    pub margin: Option<f64>,
    pub bordered_det: f64,
    pub det_scale: f64,
    /// Third singular value and its tolerance, when a witness was returned.
    pub witness_third_singular_value: Option<f64>,
    pub witness_rank_tol: Option<f64>,
    /// Smallest third singular value over all tangent eigenvectors and the
    /// matching tolerance.
    pub scan_min_third_singular_value: Option<f64>,
    pub scan_rank_tol: Option<f64>,
    /// Converse reconstruction from the witness alone.
    pub reconstructed_fonc_residual: Option<f64>,
    pub reconstructed_curvature_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        let at = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
        Some(Quantiles {
            min: v[0],
            q05: at(0.05),
            median: at(0.5),
            q95: at(0.95),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub total_critical: usize,
    pub total_degenerate: usize,
    pub total_rank_witnesses: usize,
    pub oracle_on_locus_count: usize,
    pub quadratic_degenerate_count: usize,
    pub pipeline_disagreements: usize,
    pub min_sosc_margin: Option<f64>,
    /// Over the per-trial minimum SOSC margins.
    pub margin_quantiles: Option<Quantiles>,
}

/// A polynomial that produced a degenerate hit, kept for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitDump {
    pub trial: usize,
    pub seed: u64,
    pub polynomial: PolynomialFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub n: usize,
    pub d: u32,
    pub trials: usize,
    pub seed: u64,
    pub label: String,
    pub records: Vec<TrialRecord>,
    pub points: Vec<PointRecord>,
    pub checks: Vec<Check>,
    pub aggregate: Aggregate,
    pub hits: Vec<HitDump>,
    pub passed: bool,
    /// Wall-clock time; excluded from reproducibility comparisons.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_ms: Option<u64>,
}

impl ExperimentReport {
    fn new(mode: Mode, n: usize, d: u32, trials: usize, seed: u64, label: String) -> Self {
        ExperimentReport {
            mode,
            n,
            d,
            trials,
            seed,
            label,
            records: Vec::new(),
            points: Vec::new(),
            checks: Vec::new(),
            aggregate: Aggregate::default(),
            hits: Vec::new(),
            passed: false,
            runtime_ms: None,
        }
    }

    fn finish(mut self, started: Instant) -> Self {
        self.aggregate = aggregate(&self.records);
        self.passed = self.checks.iter().all(|c| c.passed) && self.hits.is_empty();
        self.runtime_ms = Some(started.elapsed().as_millis() as u64);
        self
    }

    pub fn without_runtime(mut self) -> Self {
        self.runtime_ms = None;
        self
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        json::to_string(self)
    }

    /// One row per trial: seed, critical_count, sosc_count, fonc_only_count,
    /// degenerate_count, min_margin.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "seed",
            "critical_count",
            "sosc_count",
            "fonc_only_count",
            "degenerate_count",
            "min_margin",
        ])
        .expect("in-memory CSV");
        for r in &self.records {
            w.write_record([
                r.seed.to_string(),
                r.critical_count.to_string(),
                r.verdict_histogram.sosc.to_string(),
                r.verdict_histogram.fonc_only.to_string(),
                r.verdict_histogram.sonc_degenerate.to_string(),
                r.min_sosc_margin.map(json::fmt_f64).unwrap_or_default(),
            ])
            .expect("in-memory CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
    }

    /// Writes every hit polynomial to `dir` as a polynomial file.
    pub fn dump_hits(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        if self.hits.is_empty() {
            return Ok(Vec::new());
        }
        std::fs::create_dir_all(dir)?;
        self.hits
            .iter()
            .map(|h| {
                let path = dir.join(format!(
                    "{}_trial{}_seed{}.json",
                    self.label, h.trial, h.seed
                ));
                std::fs::write(&path, json::to_string(&h.polynomial))?;
                Ok(path)
            })
            .collect()
    }
}

fn aggregate(records: &[TrialRecord]) -> Aggregate {
    let margins: Vec<f64> = records.iter().filter_map(|r| r.min_sosc_margin).collect();
    Aggregate {
        total_critical: records.iter().map(|r| r.critical_count).sum(),
        total_degenerate: records.iter().map(|r| r.degenerate_hits).sum(),
        total_rank_witnesses: records.iter().map(|r| r.rank_witnesses).sum(),
        oracle_on_locus_count: records.iter().filter(|r| r.oracle_on_locus == Some(true)).count(),
        quadratic_degenerate_count: records
            .iter()
            .filter(|r| r.quadratic_degenerate == Some(true))
            .count(),
        pipeline_disagreements: records.iter().filter(|r| r.pipeline_agrees == Some(false)).count(),
        min_sosc_margin: margins.iter().copied().reduce(f64::min),
        margin_quantiles: Quantiles::of(&margins),
    }
}

/// Classifies and probes every critical pair of `f`, returning the trial
/// record and the per-point records.
fn analyze(
    f: &HomogeneousPolynomial,
    trial: usize,
    trial_seed: u64,
    pairs: &[CriticalPair],
    solver: &SolverConfig,
) -> Result<(TrialRecord, Vec<PointRecord>)> {
    let tol = &solver.tolerances;
    let mut hist = VerdictHistogram::default();
    let mut min_margin: Option<f64> = None;
    let mut witnesses = 0;
    let mut points = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let c = classify_point_with(f, &pair.x, tol)?;
        hist.add(c.verdict);
        if c.verdict == Verdict::Sosc {
            let m = c.sosc_margin;
            min_margin = Some(min_margin.map_or(m, |v: f64| v.min(m)));
        }
        let outcome = match detect_sosc_failure_with(f, &pair.x, tol) {
            Ok(o) => Some(o),
            Err(Error::NotCritical { .. }) => None,
            Err(e) => return Err(e),
        };
        let witness = outcome.as_ref().and_then(DetectOutcome::witness);
        if witness.is_some() {
            witnesses += 1;
        }
        let reconstruction = match witness {
            Some(w) => reconstruct_from_witness(f, &w.x, &w.y)?,
            None => None,
        };
        let scan = if f.n() >= 2 {
            tangent_witness_scan(f, &pair.x, tol)?
                .into_iter()
                .min_by(|a, b| (a.0 - a.1).total_cmp(&(b.0 - b.1)))
        } else {
            None
        };
        let lambda = c.pair.lambda;
        points.push(PointRecord {
            x: c.pair.x.clone(),
            lambda,
            residual: c.pair.residual,
            verdict: c.verdict,
            margin: c.sosc_margin.is_finite().then_some(c.sosc_margin),
            bordered_det: bordered_determinant(f, &pair.x, lambda)?,
            det_scale: bordered_scale(f, &pair.x, lambda),
            witness_third_singular_value: witness.map(|w| w.third_singular_value),
            witness_rank_tol: witness.map(|w| w.rank_tol),
            scan_min_third_singular_value: scan.map(|s| s.0),
            scan_rank_tol: scan.map(|s| s.1),
            reconstructed_fonc_residual: reconstruction.map(|r| r.fonc_residual),
            reconstructed_curvature_gap: reconstruction.map(|r| r.curvature_gap),
        });
    }
    let oracle_on_locus = if f.n() == 2 {
        Some(exact_oracle_n2(f)?.on_locus)
    } else {
        None
    };
    let record = TrialRecord {
        trial,
        seed: trial_seed,
        critical_count: pairs.len(),
        verdict_histogram: hist,
        min_sosc_margin: min_margin,
        degenerate_hits: hist.sonc_degenerate,
        rank_witnesses: witnesses,
        oracle_on_locus,
        quadratic_degenerate: None,
        pipeline_agrees: None,
    };
    Ok((record, points))
}

fn solver_for_trial(base: &SolverConfig, trial_seed: u64) -> SolverConfig {
    SolverConfig {
        seed: seed::derive(trial_seed, 1),
        ..base.clone()
    }
}

/// Dispatches on `config.mode`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    match config.mode {
        Mode::Random => run_random_genericity(config),
        Mode::WitnessD2 => run_witness_d2(config.n, &config.solver),
        Mode::WitnessGeneral => run_witness_general(config.n, config.d, &config.solver),
        Mode::DegenerateFamily => {
            let kind = if config.d == 2 {
                DegenerateKind::RepeatedLambda1
            } else {
                DegenerateKind::SingleMonomial
            };
            run_degenerate_family(kind, config.n, config.d, &config.solver)
        }
        Mode::QuadraticSweep => run_quadratic_sweep(config.n, config.trials, config.seed, &config.solver),
    }
}

/// Random polynomials with iid standard normal coefficients; every critical
/// point is classified and probed for a rank witness. Generic polynomials
/// should produce no degenerate point at all, so any hit fails the run and
/// is kept in [`ExperimentReport::hits`].
pub fn run_random_genericity(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let (n, d) = (config.n, config.d);
    let results: Vec<Result<(TrialRecord, Option<HitDump>)>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = seed::derive(config.seed, t as u64);
            let f = HomogeneousPolynomial::random(n, d, trial_seed)?;
            let solver = solver_for_trial(&config.solver, trial_seed);
            let set = find_critical_pairs(&f, &solver)?;
            let (mut record, _) = analyze(&f, t, trial_seed, &set.pairs, &solver)?;
            if d == 2 {
                let q = quadratic_degeneracy_with(&f.hessian_at(&vec![0.0; n]), &solver.tolerances)?;
                record.quadratic_degenerate = Some(q.degenerate);
                record.pipeline_agrees = Some(q.degenerate == record.is_hit());
            }
            let hit = record.is_hit().then(|| HitDump {
                trial: t,
                seed: trial_seed,
                polynomial: PolynomialFile::from(&f),
            });
            Ok((record, hit))
        })
        .collect();

    let mut report = ExperimentReport::new(
        Mode::Random,
        n,
        d,
        config.trials,
        config.seed,
        format!("random_n{n}_d{d}"),
    );
    for r in results {
        let (record, hit) = r?;
        report.records.push(record);
        report.hits.extend(hit);
    }
    let degenerate: usize = report.records.iter().map(|r| r.degenerate_hits).sum();
    let witnesses: usize = report.records.iter().map(|r| r.rank_witnesses).sum();
    let min_margin = report.records.iter().filter_map(|r| r.min_sosc_margin).reduce(f64::min);
    report.checks.push(Check::new(
        "no SONC_DEGENERATE verdicts",
        degenerate == 0,
        format!("{degenerate} degenerate verdicts"),
    ));
    report.checks.push(Check::new(
        "no rank witnesses",
        witnesses == 0,
        format!("{witnesses} witnesses"),
    ));
    report.checks.push(Check::new(
        "minimum SOSC margin positive",
        min_margin.is_some_and(|m| m > 0.0),
        format!("min margin {min_margin:?}"),
    ));
    Ok(report.finish(started))
}

fn unit(n: usize, k: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = sign;
    e
}

/// `½(x₁² + 2x₂² + … + n·xₙ²)`.
pub fn witness_d2_polynomial(n: usize) -> Result<HomogeneousPolynomial> {
    let weights: Vec<f64> = (1..=n).map(|k| 0.5 * k as f64).collect();
    HomogeneousPolynomial::diagonal_power(&weights, 2)
}

/// `α x₁^d + α² x₂^d + … + αⁿ xₙ^d` with `α = 2^(d−2)`.
pub fn witness_general_polynomial(n: usize, d: u32) -> Result<HomogeneousPolynomial> {
    let alpha = 2f64.powi(d as i32 - 2);
    let weights: Vec<f64> = (1..=n as i32).map(|k| alpha.powi(k)).collect();
    HomogeneousPolynomial::diagonal_power(&weights, d)
}

/// Checks the quadratic witness `½Σ k·x_k²`: critical pairs are exactly
/// `(±e_k, k)`, only `±e₁` is SOSC, `det H(e_ℓ, ℓ) = −Π_{j≠ℓ}(j − ℓ) ≠ 0` and
/// no rank witness exists.
pub fn run_witness_d2(n: usize, solver: &SolverConfig) -> Result<ExperimentReport> {
    if n < 2 {
        return Err(Error::InvalidConfig("witness_d2 needs n ≥ 2".into()));
    }
    let started = Instant::now();
    let p = witness_d2_polynomial(n)?;
    let set = find_critical_pairs(&p, solver)?;
    let (record, points) = analyze(&p, 0, solver.seed, &set.pairs, solver)?;
    let mut report = ExperimentReport::new(Mode::WitnessD2, n, 2, 1, solver.seed, format!("witness_d2_n{n}"));

    const EXACT: f64 = 1e-8;
    report.checks.push(Check::new(
        "critical count is 2n",
        points.len() == 2 * n,
        format!("found {} critical points, expected {}", points.len(), 2 * n),
    ));
    for k in 0..n {
        for sign in [1.0, -1.0] {
            let e = unit(n, k, sign);
            let lambda = (k + 1) as f64;
            let expected_margin = if k == 0 { 1.0 } else { 1.0 - lambda };
            let expected_verdict = if k == 0 { Verdict::Sosc } else { Verdict::FoncOnly };
            let found = points.iter().find(|pt| {
                pt.x.iter().zip(&e).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < EXACT
            });
            let label = format!("{}e{}", if sign > 0.0 { "+" } else { "-" }, k + 1);
            match found {
                None => report
                    .checks
                    .push(Check::new(format!("{label} found"), false, "missing")),
                Some(pt) => {
                    let margin = pt.margin.unwrap_or(f64::NAN);
                    report.checks.push(Check::new(
                        format!("{label}: λ = {lambda}, verdict {}, margin {expected_margin}", expected_verdict.as_str()),
                        (pt.lambda - lambda).abs() <= EXACT
                            && pt.verdict == expected_verdict
                            && (margin - expected_margin).abs() <= EXACT,
                        format!("λ = {}, verdict {}, margin {margin}", pt.lambda, pt.verdict.as_str()),
                    ));
                }
            }
        }
        let lambda = (k + 1) as f64;
        let det = bordered_determinant(&p, &unit(n, k, 1.0), lambda)?;
        let expected: f64 = -(0..n)
            .filter(|&j| j != k)
            .map(|j| j as f64 - k as f64)
            .product::<f64>();
        report.checks.push(Check::new(
            format!("det H(e{}, {lambda}) = {expected}", k + 1),
            det != 0.0 && (det - expected).abs() <= EXACT * expected.abs(),
            format!("det = {det}"),
        ));
    }
    report.checks.push(Check::new(
        "no rank witnesses",
        record.rank_witnesses == 0 && record.degenerate_hits == 0,
        format!(
            "{} witnesses, {} degenerate verdicts",
            record.rank_witnesses, record.degenerate_hits
        ),
    ));
    report.records.push(record);
    report.points = points;
    Ok(report.finish(started))
}

/// Real critical points of [`witness_general_polynomial`] in closed form.
///
/// On a support `S`, FONC reads `d αᵏ x_k^(d−2) = λ`; off `S`, `x_k = 0`
/// (allowed only for `d ≥ 2`). For odd `d` the signs on `S` all agree with
/// `sign λ`; for even `d`, `λ > 0` and every sign pattern occurs. For
/// `d = 1` the only critical points are `±w/‖w‖`.
pub fn witness_general_critical_points(n: usize, d: u32) -> Result<Vec<CriticalPair>> {
    if d == 2 {
        return Err(Error::InvalidConfig("d = 2 is the quadratic witness (run_witness_d2)".into()));
    }
    if n == 0 || n > CLOSED_FORM_MAX_N {
        return Err(Error::Unsupported(format!(
            "closed-form enumeration covers 1 ≤ n ≤ {CLOSED_FORM_MAX_N}, got n = {n}"
        )));
    }
    let p = witness_general_polynomial(n, d)?;
    let alpha = 2f64.powi(d as i32 - 2);
    if d == 1 {
        let w: Vec<f64> = (1..=n as i32).map(|k| alpha.powi(k)).collect();
        let neg: Vec<f64> = w.iter().map(|v| -v).collect();
        return Ok(vec![CriticalPair::at(&p, &w), CriticalPair::at(&p, &neg)]);
    }
    let root = |k: usize| (1.0 / (d as f64 * alpha.powi(k as i32 + 1))).powf(1.0 / (d as f64 - 2.0));
    let mut out = Vec::new();
    for support in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|k| support & (1 << k) != 0).collect();
        let patterns: Vec<Vec<f64>> = if d % 2 == 1 {
            vec![vec![1.0; members.len()], vec![-1.0; members.len()]]
        } else {
            (0u32..(1 << members.len()))
                .map(|bits| {
                    (0..members.len())
                        .map(|i| if bits & (1 << i) != 0 { -1.0 } else { 1.0 })
                        .collect()
                })
                .collect()
        };
        for signs in patterns {
            let mut v = vec![0.0; n];
            for (&k, s) in members.iter().zip(&signs) {
                v[k] = s * root(k);
            }
            out.push(CriticalPair::at(&p, &v));
        }
    }
    Ok(out)
}

/// Checks the witness polynomial `Σ αᵏ x_k^d` (`d ≠ 2`): at every real
/// critical point `|det H(x, λ)| > 10⁻⁶·scale`, no SONC point is degenerate,
/// and for `n = 2` the exact oracle puts it off the locus. For
/// `n ≤ 4` the closed-form critical set also cross-checks the multistart.
pub fn run_witness_general(n: usize, d: u32, solver: &SolverConfig) -> Result<ExperimentReport> {
    if d == 2 {
        return Err(Error::InvalidConfig(
            "witness_general needs d ≠ 2; use witness_d2 for quadratics".into(),
        ));
    }
    if n < 2 {
        return Err(Error::InvalidConfig("witness_general needs n ≥ 2".into()));
    }
    let started = Instant::now();
    let p = witness_general_polynomial(n, d)?;
    let multistart = find_critical_pairs(&p, solver)?;
    let mut report = ExperimentReport::new(
        Mode::WitnessGeneral,
        n,
        d,
        1,
        solver.seed,
        format!("witness_general_n{n}_d{d}"),
    );
    let pairs = if n <= CLOSED_FORM_MAX_N {
        let closed = witness_general_critical_points(n, d)?;
        let tol_crit = solver.tolerances.crit(&p);
        let worst = closed.iter().map(|c| c.residual).fold(0.0, f64::max);
        report.checks.push(Check::new(
            "closed-form points satisfy FONC",
            worst <= tol_crit,
            format!("max residual {worst:e} (tol {tol_crit:e})"),
        ));
        let unmatched = closed
            .iter()
            .filter(|c| {
                !multistart.pairs.iter().any(|m| {
                    m.x.iter().zip(&c.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
                        <= solver.dedup_radius
                })
            })
            .count();
        report.checks.push(Check::new(
            "multistart matches closed form",
            unmatched == 0 && multistart.pairs.len() == closed.len(),
            format!(
                "closed form {} points, multistart {}, unmatched {unmatched}",
                closed.len(),
                multistart.pairs.len()
            ),
        ));
        closed
    } else {
        multistart.pairs
    };
    let (record, points) = analyze(&p, 0, solver.seed, &pairs, solver)?;
    let weakest = points
        .iter()
        .map(|pt| pt.bordered_det.abs() / (WITNESS_DET_FLOOR * pt.det_scale))
        .fold(f64::INFINITY, f64::min);
    report.checks.push(Check::new(
        "|det H| > 1e-6·scale at every critical point",
        weakest > 1.0,
        format!("smallest |det H| / (1e-6·scale) = {weakest:.6e}"),
    ));
    report.checks.push(Check::new(
        "no degenerate SONC point",
        record.degenerate_hits == 0 && record.rank_witnesses == 0,
        format!(
            "{} degenerate verdicts, {} witnesses",
            record.degenerate_hits, record.rank_witnesses
        ),
    ));
    if let Some(on) = record.oracle_on_locus {
        report.checks.push(Check::new(
            "exact oracle: off the locus",
            !on,
            format!("on_locus = {on}"),
        ));
    }
    report.records.push(record);
    report.points = points;
    Ok(report.finish(started))
}

/// Instance and sampled points of its degenerate set.
pub fn degenerate_instance(kind: DegenerateKind, n: usize, d: u32) -> Result<(HomogeneousPolynomial, Vec<Vec<f64>>)> {
    if n < 2 {
        return Err(Error::InvalidConfig("degenerate families need n ≥ 2".into()));
    }
    const SAMPLES: usize = 12;
    let circle = |i: usize, j: usize| -> Vec<Vec<f64>> {
        (0..SAMPLES)
            .map(|s| {
                let theta = 2.0 * std::f64::consts::PI * s as f64 / SAMPLES as f64;
                let mut v = vec![0.0; n];
                v[i] = theta.cos();
                v[j] = theta.sin();
                v
            })
            .collect()
    };
    match kind {
        DegenerateKind::RepeatedLambda1 => {
            if d != 2 {
                return Err(Error::InvalidConfig(format!("repeated_lambda1 needs d = 2, got d = {d}")));
            }
            let diag: Vec<f64> = (0..n).map(|k| if k < 2 { 1.0 } else { k as f64 }).collect();
            let a = DMatrix::from_diagonal(&DVector::from_vec(diag));
            Ok((HomogeneousPolynomial::quadratic_form(&a)?, circle(0, 1)))
        }
        DegenerateKind::SingleMonomial => {
            if d < 3 {
                return Err(Error::InvalidConfig(format!("single_monomial needs d ≥ 3, got d = {d}")));
            }
            let f = HomogeneousPolynomial::diagonal_power(&unit(n, 0, 1.0), d)?;
            let samples = if n == 2 {
                vec![unit(2, 1, 1.0), unit(2, 1, -1.0)]
            } else {
                let mut s = circle(1, 2);
                for k in 3..n {
                    s.push(unit(n, k, 1.0));
                    s.push(unit(n, k, -1.0));
                }
                s
            };
            Ok((f, samples))
        }
    }
}

/// Builds a known degenerate instance and checks that every detector flags
/// it: the multistart pipeline yields a SONC_DEGENERATE verdict, every
/// sampled degenerate point has a verified rank witness with
/// `|det H| ≤ tol_det·scale` and passes the converse reconstruction, and for
/// `n = 2` the exact oracle reports the polynomial on the locus.
pub fn run_degenerate_family(kind: DegenerateKind, n: usize, d: u32, solver: &SolverConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let (f, samples) = degenerate_instance(kind, n, d)?;
    let tol = &solver.tolerances;
    let mut report = ExperimentReport::new(
        Mode::DegenerateFamily,
        n,
        d,
        1,
        solver.seed,
        format!("degenerate_{kind}_n{n}_d{d}"),
    );

    let classified = classify_all(&f, solver)?;
    let pipeline_hits = classified
        .iter()
        .filter(|c| c.verdict == Verdict::SoncDegenerate)
        .count();
    report.checks.push(Check::new(
        "pipeline flags SONC_DEGENERATE",
        pipeline_hits > 0,
        format!("{pipeline_hits} of {} critical points degenerate", classified.len()),
    ));

    let samples: Vec<CriticalPair> = samples.iter().map(|x| CriticalPair::at(&f, x)).collect();
    let (record, points) = analyze(&f, 0, solver.seed, &samples, solver)?;
    let tol_crit = tol.crit(&f);
    let tol_class = tol.class(&f);
    let all_flagged = points.iter().all(|p| {
        p.verdict == Verdict::SoncDegenerate
            && p.witness_third_singular_value
                .zip(p.witness_rank_tol)
                .is_some_and(|(s, t)| s <= t)
    });
    report.checks.push(Check::new(
        "sampled degenerate points carry verified rank witnesses",
        all_flagged && record.rank_witnesses == points.len(),
        format!("{} witnesses over {} sampled points", record.rank_witnesses, points.len()),
    ));
    let det_ok = points
        .iter()
        .all(|p| p.bordered_det.abs() <= tol.det(p.det_scale));
    report.checks.push(Check::new(
        "|det H| ≤ tol_det·scale at sampled points",
        det_ok,
        format!(
            "max |det H|/scale = {:e}",
            points
                .iter()
                .map(|p| p.bordered_det.abs() / p.det_scale)
                .fold(0.0, f64::max)
        ),
    ));
    let converse_ok = points.iter().all(|p| {
        p.reconstructed_fonc_residual.is_some_and(|r| r <= tol_crit)
            && p.reconstructed_curvature_gap.is_some_and(|g| g <= tol_class)
    });
    report.checks.push(Check::new(
        "witness alone implies FONC and SOSC failure",
        converse_ok,
        "reconstructed FONC residual ≤ tol_crit and curvature gap ≤ tol_class",
    ));
    if let Some(on) = record.oracle_on_locus {
        report.checks.push(Check::new("exact oracle: on the locus", on, format!("on_locus = {on}")));
    }
    report.records.push(record);
    report.points = points;
    Ok(report.finish(started))
}

/// Random symmetric matrix `(G + Gᵀ)/2`, `G` with iid standard normal entries.
pub fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seed::rng(seed);
    let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    (&g + g.transpose()) * 0.5
}

/// `Q diag(λ₁, …, λ₁, λ_{k+1}, …) Qᵀ` with the smallest eigenvalue repeated
/// `multiplicity` times and `Q` a random orthogonal matrix.
pub fn planted_quadratic(n: usize, multiplicity: usize, seed: u64) -> Result<DMatrix<f64>> {
    if multiplicity == 0 || multiplicity > n {
        return Err(Error::InvalidConfig(format!(
            "multiplicity must lie in 1..={n}, got {multiplicity}"
        )));
    }
    let mut rng = seed::rng(seed);
    let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let q = g.qr().q();
    let diag: Vec<f64> = (0..n)
        .map(|k| if k < multiplicity { -1.0 } else { (k + 1 - multiplicity) as f64 })
        .collect();
    let a: DMatrix<f64> = &q * DMatrix::from_diagonal(&DVector::from_vec(diag)) * q.transpose();
    Ok((&a + a.transpose()) * 0.5)
}

/// One quadratic trial: eigenvalue criterion against the pipeline
/// (multistart classification plus the rank detector at the eigenvector of
/// the smallest eigenvalue).
pub fn quadratic_trial(a: &DMatrix<f64>, trial: usize, trial_seed: u64, solver: &SolverConfig) -> Result<TrialRecord> {
    let tol = &solver.tolerances;
    let f = HomogeneousPolynomial::quadratic_form(a)?;
    let q = quadratic_degeneracy_with(a, tol)?;
    let set = find_critical_pairs(&f, &solver_for_trial(solver, trial_seed))?;
    let (mut record, _) = analyze(&f, trial, trial_seed, &set.pairs, solver)?;

    let eig = SymmetricEigen::new(a.clone());
    let i_min = (0..eig.eigenvalues.len())
        .min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]))
        .expect("nonempty spectrum");
    let v = eig.eigenvectors.column(i_min).normalize();
    let at_eigvec = detect_sosc_failure_with(&f, v.as_slice(), tol)?;
    let pipeline = record.is_hit() || at_eigvec.witness().is_some();

    record.quadratic_degenerate = Some(q.degenerate);
    record.pipeline_agrees = Some(pipeline == q.degenerate);
    Ok(record)
}

/// Random symmetric `A`: cross-validates the repeated-smallest-eigenvalue
/// criterion against the full pipeline on `½xᵀAx`.
pub fn run_quadratic_sweep(n: usize, trials: usize, seed: u64, solver: &SolverConfig) -> Result<ExperimentReport> {
    if n == 0 || trials == 0 {
        return Err(Error::InvalidConfig("quadratic sweep needs n ≥ 1 and trials ≥ 1".into()));
    }
    let started = Instant::now();
    let results: Vec<Result<(TrialRecord, Option<HitDump>)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = seed::derive(seed, t as u64);
            let a = random_symmetric(n, trial_seed);
            let record = quadratic_trial(&a, t, trial_seed, solver)?;
            let hit = (record.quadratic_degenerate == Some(true) || record.is_hit()).then(|| HitDump {
                trial: t,
                seed: trial_seed,
                polynomial: PolynomialFile::from(
                    &HomogeneousPolynomial::quadratic_form(&a).expect("square matrix"),
                ),
            });
            Ok((record, hit))
        })
        .collect();
    let mut report = ExperimentReport::new(
        Mode::QuadraticSweep,
        n,
        2,
        trials,
        seed,
        format!("quadratic_sweep_n{n}"),
    );
    for r in results {
        let (record, hit) = r?;
        report.records.push(record);
        report.hits.extend(hit);
    }
    let disagreements = report
        .records
        .iter()
        .filter(|r| r.pipeline_agrees == Some(false))
        .count();
    let degenerate = report
        .records
        .iter()
        .filter(|r| r.quadratic_degenerate == Some(true))
        .count();
    report.checks.push(Check::new(
        "eigenvalue criterion agrees with pipeline",
        disagreements == 0,
        format!("{disagreements} disagreements"),
    ));
    report.checks.push(Check::new(
        "no degenerate draws",
        degenerate == 0,
        format!("{degenerate} draws with repeated smallest eigenvalue"),
    ));
    Ok(report.finish(started))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_d2_n3() {
        let r = run_witness_d2(3, &SolverConfig::default()).unwrap();
        assert!(r.passed, "{:#?}", r.failed_checks().collect::<Vec<_>>());
        let lambdas: Vec<i64> = r.points.iter().map(|p| p.lambda.round() as i64).collect();
        for k in 1..=3 {
            assert_eq!(lambdas.iter().filter(|&&l| l == k).count(), 2);
        }
        assert_eq!(r.records[0].verdict_histogram.sosc, 2);
    }

    #[test]
    fn witness_d2_n2_margin_one() {
        let r = run_witness_d2(2, &SolverConfig::default()).unwrap();
        assert!(r.passed);
        for p in r.points.iter().filter(|p| p.verdict == Verdict::Sosc) {
            assert!((p.margin.unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_counts() {
        // odd d: 2(2^n - 1); even d: 3^n - 1; d = 1: 2
        assert_eq!(witness_general_critical_points(3, 3).unwrap().len(), 14);
        assert_eq!(witness_general_critical_points(3, 4).unwrap().len(), 26);
        assert_eq!(witness_general_critical_points(2, 1).unwrap().len(), 2);
        assert!(witness_general_critical_points(2, 2).is_err());
    }

    #[test]
    fn witness_general_d3_n2() {
        let r = run_witness_general(2, 3, &SolverConfig::default()).unwrap();
        assert!(r.passed, "{:#?}", r.failed_checks().collect::<Vec<_>>());
        assert_eq!(r.records[0].oracle_on_locus, Some(false));
    }

    #[test]
    fn degenerate_single_monomial_n2() {
        let r = run_degenerate_family(DegenerateKind::SingleMonomial, 2, 3, &SolverConfig::default()).unwrap();
        assert!(r.passed, "{:#?}", r.failed_checks().collect::<Vec<_>>());
    }

    #[test]
    fn invalid_family_combinations() {
        let s = SolverConfig::default();
        assert!(run_degenerate_family(DegenerateKind::RepeatedLambda1, 3, 3, &s).is_err());
        assert!(run_degenerate_family(DegenerateKind::SingleMonomial, 3, 2, &s).is_err());
        assert!(run_witness_general(2, 2, &s).is_err());
    }

    #[test]
    fn report_histograms_and_csv() {
        let cfg = ExperimentConfig::new(Mode::Random, 2, 3, 5, 7);
        let r = run_random_genericity(&cfg).unwrap();
        for rec in &r.records {
            assert_eq!(rec.verdict_histogram.total(), rec.critical_count);
        }
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("seed,critical_count,sosc_count,fonc_only_count,degenerate_count,min_margin"));
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = ExperimentConfig::new(Mode::Random, 3, 3, 4, 11);
        let a = run_random_genericity(&cfg).unwrap().without_runtime().to_json();
        let b = run_random_genericity(&cfg).unwrap().without_runtime().to_json();
        assert_eq!(a, b);
        let back: ExperimentReport = serde_json::from_str(&a).unwrap();
        assert_eq!(back.to_json(), a);
    }

    #[test]
    fn identity_quadratic_is_degenerate() {
        let r = quadratic_trial(&DMatrix::identity(3, 3), 0, 1, &SolverConfig::default()).unwrap();
        assert_eq!(r.quadratic_degenerate, Some(true));
        assert_eq!(r.pipeline_agrees, Some(true));
    }

    #[test]
    fn quantiles() {
        let q = Quantiles::of(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((q.min, q.median, q.max), (1.0, 2.0, 3.0));
        assert!(Quantiles::of(&[]).is_none());
    }
}
