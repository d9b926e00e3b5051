//! Command-line harness: argument parsing, the verification commands and
//! exit-code mapping. The binary is a thin wrapper around [`run`].

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{
    build_a_example, build_flag_sum, build_p_harmonic, classify_case, load_matrix,
    parse_complex_cell, parse_complex_vector, validate_eigen_matrix, EigenMatrix, ExprNode,
    FlagSpec, PHarmonicCase, EIGEN_MATRIX_TOL,
};
use crate::group::{
    block_m_basis, derive_seed, rng_from_seed, sample_block_diagonal, sample_so, sample_so_mn,
    so_basis, Form, GroupPoint, Signature, DEFAULT_RADIUS,
};
use crate::jets::check_branch;
use crate::operators::{
    accept_samples, check_coordinate_identities, check_eigen, check_eigenfamily, check_invariance,
    check_lift, check_p_harmonic, check_phi_hat_identities, find_non_invariance, Acceptance,
    OperatorContext, Tolerances,
};
use crate::report::{report_schema, VerificationReport};
use crate::symcalc::{sym_verify_all_coefficients, sym_verify_p_harmonic, EigenParams, GaussianRational};

/// Environment variable multiplying every tolerance.
pub const TOL_SCALE_ENV: &str = "GH_VERIFY_TOL_SCALE";

/// Normalized `|τ^(p-1)|` must reach this at some accepted sample.
pub const PROPERNESS_FLOOR: f64 = 1e-3;

/// K-invariance threshold on the normalized value change.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// A value change above this under a merged-block rotation witnesses non-descent.
pub const NON_DESCENT_THRESHOLD: f64 = 1e-6;

const INVARIANCE_TRIALS: usize = 5;
const NON_DESCENT_TRIALS: usize = 20;
const ATTEMPTS_PER_SAMPLE: usize = 50;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    VerificationFailure = 2,
    Usage = 3,
    DomainFailure = 4,
}

#[derive(Debug, Parser)]
#[command(name = "pharmonic", version, about = "Construct and verify p-harmonic functions on Grassmannians, flag manifolds and their duals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coordinate-function identities on SO(m+n).
    Calibrate(RunArgs),
    /// Eigenfunction built from a rank-one isotropic matrix on the Grassmannian.
    Grassmann(RunArgs),
    /// Proper p-harmonic composition, symbolically and numerically.
    Pharmonic(RunArgs),
    /// Summed block construction on a flag manifold.
    Flag(RunArgs),
    /// The same construction on the non-compact dual.
    Dual(RunArgs),
    /// Print the JSON schema of verification reports.
    ReportSchema {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long = "m", default_value_t = 2)]
    pub m: usize,
    #[arg(long = "n", default_value_t = 2)]
    pub n: usize,
    /// Flag block sizes, comma-separated.
    #[arg(long, default_value = "1,1,2")]
    pub blocks: String,
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Coordinate box radius for points of the non-compact dual.
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    pub radius: f64,
    /// Replaces every upper-bound threshold.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Comma-separated `re:im` cells (m+n-1 of them).
    #[arg(long)]
    pub w: Option<String>,
    /// Coefficient matrix file (CSV of `re:im` cells, or JSON).
    #[arg(long = "A")]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional CSV dump of every record.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value = "1:0")]
    pub c1: String,
    #[arg(long, default_value = "0.5:-0.25")]
    pub c2: String,
    /// Multiplies every basis vector before use (breaks calibration on purpose).
    #[arg(long, default_value_t = 1.0, hide = true)]
    pub basis_scale: f64,
}

/// Validated run parameters, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub m: usize,
    pub n: usize,
    pub blocks: Vec<usize>,
    pub p: u32,
    pub seed: u64,
    pub samples: usize,
    pub radius: f64,
    pub tol: Option<f64>,
    pub tol_scale: f64,
    pub w: Option<Vec<Complex64>>,
    pub a_file: Option<PathBuf>,
    pub c1: Complex64,
    pub c2: Complex64,
    pub basis_scale: f64,
}

impl RunConfig {
    pub fn from_args(command: &str, args: &RunArgs, tol_scale: f64) -> Result<Self> {
        let cfg = RunConfig {
            command: command.to_string(),
            m: args.m,
            n: args.n,
            blocks: parse_blocks(&args.blocks)?,
            p: args.p,
            seed: args.seed,
            samples: args.samples,
            radius: args.radius,
            tol: args.tol,
            tol_scale,
            w: args.w.as_deref().map(parse_complex_vector).transpose()?,
            a_file: args.a.clone(),
            c1: parse_complex_cell(&args.c1)?,
            c2: parse_complex_cell(&args.c2)?,
            basis_scale: args.basis_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 {
            return bad(format!("m and n must be at least 1, got ({}, {})", self.m, self.n));
        }
        if self.p == 0 {
            return bad("p must be at least 1".into());
        }
        if self.p as usize > crate::operators::DEFAULT_MAX_DEPTH {
            return bad(format!("p = {} exceeds the iteration cap {}", self.p, crate::operators::DEFAULT_MAX_DEPTH));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if !(self.radius.is_finite() && self.radius >= 0.0) {
            return bad(format!("radius must be finite and non-negative, got {}", self.radius));
        }
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("tol must be positive, got {t}"));
            }
        }
        if !(self.basis_scale.is_finite() && self.basis_scale > 0.0) {
            return bad(format!("basis scale must be positive, got {}", self.basis_scale));
        }
        if self.w.is_some() && self.a_file.is_some() {
            return bad("give at most one of --w and --A".into());
        }
        if let Some(w) = &self.w {
            if w.len() + 1 != self.m + self.n {
                return bad(format!("--w needs m+n-1 = {} cells, got {}", self.m + self.n - 1, w.len()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// Threshold for an identity applying `τ` `depth` times.
    pub fn threshold(&self, depth: usize) -> f64 {
        match self.tol {
            Some(t) => t * self.tol_scale,
            None => Tolerances { scale: self.tol_scale, ..Tolerances::default() }.for_depth(depth),
        }
    }

    /// Fixed threshold scaled by the environment multiplier unless `--tol` overrides it.
    pub fn fixed(&self, value: f64) -> f64 {
        self.tol.unwrap_or(value) * self.tol_scale
    }

    /// `(1, 2, …, m+n-1)` shifted off the real axis, unless `--w` is given.
    pub fn w_vector(&self) -> Vec<Complex64> {
        self.w.clone().unwrap_or_else(|| {
            (1..self.dim()).map(|k| Complex64::new(k as f64, 0.5)).collect()
        })
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

fn parse_blocks(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("bad block size {s:?}: {e}")))
        })
        .collect()
}

/// Reads the tolerance multiplier from the environment (1 when unset).
pub fn tol_scale_from_env() -> Result<f64> {
    match std::env::var(TOL_SCALE_ENV) {
        Err(_) => Ok(1.0),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            _ => Err(Error::Config(format!("{TOL_SCALE_ENV} must be a positive number, got {s:?}"))),
        },
    }
}

/// Report plus the exit status it maps to.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: VerificationReport,
    pub status: ExitStatus,
}

impl RunOutcome {
    fn from_report(report: VerificationReport) -> Self {
        let status = if report.pass { ExitStatus::Pass } else { ExitStatus::VerificationFailure };
        RunOutcome { report, status }
    }
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn new_report(cfg: &RunConfig) -> VerificationReport {
    let mut r = VerificationReport::new(cfg.command.clone());
    r.config = cfg.to_json();
    r
}

fn compact_points(dim: usize, seed: u64, count: usize) -> Vec<GroupPoint> {
    (0..count).map(|k| sample_so(dim, derive_seed(seed, 1, k as u64))).collect()
}

/// Draws points on which `f` is defined, recording the acceptance statistics.
fn accepted_points(
    report: &mut VerificationReport,
    cfg: &RunConfig,
    sampler: &dyn Fn(u64) -> Result<GroupPoint>,
    f: &ExprNode,
) -> Result<Acceptance> {
    let probe = |x: &GroupPoint| f.evaluate_at(x).and_then(check_branch);
    let acc = accept_samples(sampler, &probe, cfg.samples, ATTEMPTS_PER_SAMPLE * cfg.samples, derive_seed(cfg.seed, 2, 0));
    match &acc {
        Ok(a) => report.diagnose(format!(
            "sample acceptance: {} accepted, {} rejected (rate {:.3})",
            a.points.len(),
            a.rejected,
            a.rejection_rate()
        )),
        Err(Error::SamplesExhausted { accepted, attempts, .. }) => {
            let rate = 1.0 - *accepted as f64 / (*attempts).max(1) as f64;
            report.diagnose(format!(
                "sample acceptance exhausted: {accepted} accepted out of {attempts} attempts (rejection rate {rate:.3})"
            ));
        }
        Err(_) => {}
    }
    acc
}

fn domain_failure(mut report: VerificationReport, err: &Error) -> RunOutcome {
    report.push_failure("sample_acceptance", 0, 0.0, &err.to_string());
    RunOutcome { report, status: ExitStatus::DomainFailure }
}

fn flag_bool(report: &mut VerificationReport, check: &str, ok: bool) {
    report.push(check, 0, if ok { 0.0 } else { 1.0 }, 0.0);
}

/// Coefficient matrix from `--A`, `--w`, or the builtin vector.
fn eigen_matrix(report: &mut VerificationReport, cfg: &RunConfig) -> Result<EigenMatrix> {
    let (m, n) = (cfg.m, cfg.n);
    let a = match &cfg.a_file {
        Some(path) => {
            let a = load_matrix(path)?;
            if a.nrows() != m + n || a.ncols() != m + n {
                return Err(Error::DimensionMismatch { expected: m + n, got: a.nrows() });
            }
            a
        }
        None => build_a_example(&cfg.w_vector(), m, n)?.matrix().clone(),
    };
    let v = validate_eigen_matrix(&a);
    let tol = EIGEN_MATRIX_TOL * cfg.tol_scale;
    report.push("matrix.symmetric", 0, v.symmetry, tol);
    report.push("matrix.traceless", 0, v.trace, tol);
    report.push("matrix.square_zero", 0, v.square, tol);
    report.push("matrix.rank_one", 0, v.rank_ratio, tol);
    if !v.pass {
        // Keep going with the raw matrix so the eigen checks show the failure too.
        report.diagnose(format!("coefficient matrix fails: {}", v.failures().join(", ")));
    }
    Ok(EigenMatrix::unchecked(a, m, n))
}

pub fn cmd_calibrate(cfg: &RunConfig) -> Result<RunOutcome> {
    let dim = cfg.dim();
    if dim < 2 {
        return Err(Error::Config("calibration needs m+n >= 2".into()));
    }
    let mut report = new_report(cfg);
    let basis: Vec<_> = so_basis(dim).iter().map(|b| b.rescaled(cfg.basis_scale)).collect();
    let ctx = OperatorContext::unchecked(basis, Signature::Compact(dim));
    if cfg.basis_scale != 1.0 {
        report.diagnose(format!("basis rescaled by {}", cfg.basis_scale));
    }
    let points = compact_points(dim, cfg.seed, cfg.samples);
    report.absorb("coordinate", check_coordinate_identities(&points, &ctx, cfg.threshold(1)));
    Ok(RunOutcome::from_report(report))
}

pub fn cmd_grassmann(cfg: &RunConfig) -> Result<RunOutcome> {
    let (m, n) = (cfg.m, cfg.n);
    let dim = m + n;
    let mut report = new_report(cfg);
    let a = eigen_matrix(&mut report, cfg)?;
    let phi = a.phi();
    let full = OperatorContext::full(dim);
    let points = compact_points(dim, cfg.seed, cfg.samples);
    let tol = cfg.threshold(1);

    report.absorb("phi_hat", check_phi_hat_identities(m, n, &points, &full, tol));
    let (lambda, mu) = (real(-(dim as f64)), real(-2.0));
    report.absorb("eigen", check_eigen(&phi, lambda, mu, &points, &full, tol));
    let k = |s: u64| sample_block_diagonal(&[m, n], s);
    let inv_seed = derive_seed(cfg.seed, 3, 0);
    report.absorb(
        "invariance",
        check_invariance(&phi, &k, &points, INVARIANCE_TRIALS, inv_seed, cfg.fixed(INVARIANCE_TOL)),
    );
    report.absorb("lift", check_lift(&phi, m, n, &points, tol, cfg.fixed(1e-11)));
    if m == 1 {
        report.diagnose(format!("m = 1: sphere S^{n}, expected eigenvalue -(n+1) = {}", -(dim as f64)));
    }
    if dim == 2 {
        report.diagnose("m+n = 2: lambda = mu = -2, equal-eigenvalue case");
    }
    Ok(RunOutcome::from_report(report))
}

fn gaussian(z: Complex64) -> Result<GaussianRational> {
    GaussianRational::from_complex(z)
}

/// Symbolic verdicts for `params` at the run's `p` and coefficients.
fn symbolic_checks(report: &mut VerificationReport, cfg: &RunConfig, params: &EigenParams, prefix: &str) -> Result<()> {
    let all = sym_verify_all_coefficients(params, cfg.p)?;
    let run = sym_verify_p_harmonic(params, cfg.p, &gaussian(cfg.c1)?, &gaussian(cfg.c2)?)?;
    flag_bool(report, &format!("{prefix}.p_harmonic_all_coefficients"), all.p_harmonic_all);
    flag_bool(report, &format!("{prefix}.proper_generic"), all.proper_generic);
    flag_bool(report, &format!("{prefix}.p_harmonic"), run.p_harmonic);
    flag_bool(report, &format!("{prefix}.proper"), run.proper);
    report.diagnose(format!("{prefix}: tau^(p-1) = {}", run.tau_pm1));
    Ok(())
}

fn note_case(report: &mut VerificationReport, lambda: Complex64, mu: Complex64) -> Result<()> {
    let case = classify_case(lambda, mu)?;
    if case == PHarmonicCase::EqualEigenvalues {
        report.diagnose(format!("lambda = mu = {}: equal-eigenvalue case", lambda.re));
    }
    Ok(())
}

pub fn cmd_pharmonic(cfg: &RunConfig) -> Result<RunOutcome> {
    let (m, n) = (cfg.m, cfg.n);
    let dim = m + n;
    let mut report = new_report(cfg);
    let a = eigen_matrix(&mut report, cfg)?;
    let phi = a.phi();
    let (lambda, mu) = (real(-(dim as f64)), real(-2.0));
    note_case(&mut report, lambda, mu)?;
    symbolic_checks(&mut report, cfg, &EigenParams::from_integers(-(dim as i64), -2), "symbolic")?;

    let f = build_p_harmonic(&phi, lambda, mu, cfg.p, cfg.c1, cfg.c2)?;
    let sampler = |s: u64| Ok(sample_so(dim, s));
    let acc = match accepted_points(&mut report, cfg, &sampler, &f) {
        Ok(a) => a,
        Err(e @ Error::SamplesExhausted { .. }) => return Ok(domain_failure(report, &e)),
        Err(e) => return Err(e),
    };
    let ctx = OperatorContext::grassmann(m, n, Form::Compact);
    report.absorb("eigen", check_eigen(&phi, lambda, mu, &acc.points, &ctx, cfg.threshold(1)));
    let p = cfg.p as usize;
    report.absorb(
        "numeric",
        check_p_harmonic(&f, p, &acc.points, &ctx, cfg.threshold(p), PROPERNESS_FLOOR),
    );
    Ok(RunOutcome::from_report(report))
}

/// `blocks` with blocks `k` and `k+1` merged.
fn merge_adjacent(blocks: &[usize], k: usize) -> Vec<usize> {
    let mut out = blocks[..k].to_vec();
    out.push(blocks[k] + blocks[k + 1]);
    out.extend_from_slice(&blocks[k + 2..]);
    out
}

pub fn cmd_flag(cfg: &RunConfig) -> Result<RunOutcome> {
    let mut report = new_report(cfg);
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 4, 0));
    let spec = FlagSpec::random(cfg.blocks.clone(), &mut rng)?;
    let dim = spec.dim();
    report.config["flag"] = serde_json::to_value(&spec).expect("flag data serializes");
    let (lambda, mu) = spec.eigenvalues();
    let f = build_flag_sum(&spec, cfg.p)?;

    let sampler = |s: u64| Ok(sample_so(dim, s));
    let acc = match accepted_points(&mut report, cfg, &sampler, &f) {
        Ok(a) => a,
        Err(e @ Error::SamplesExhausted { .. }) => return Ok(domain_failure(report, &e)),
        Err(e) => return Err(e),
    };
    let ctx = OperatorContext::unchecked(block_m_basis(spec.blocks()), Signature::Compact(dim));
    for k in 0..spec.blocks().len() {
        let fam = spec.block_family(k);
        report.absorb(
            &format!("block{k}"),
            check_eigenfamily(&fam, lambda, mu, &acc.points, &ctx, cfg.threshold(1)),
        );
    }
    symbolic_checks(&mut report, cfg, &EigenParams::from_integers(-(dim as i64), -2), "symbolic")?;
    let p = cfg.p as usize;
    report.absorb(
        "numeric",
        check_p_harmonic(&f, p, &acc.points, &ctx, cfg.threshold(p), PROPERNESS_FLOOR),
    );

    let blocks = spec.blocks().to_vec();
    let group = |s: u64| sample_block_diagonal(&blocks, s);
    report.absorb(
        "invariance",
        check_invariance(&f, &group, &acc.points, INVARIANCE_TRIALS, derive_seed(cfg.seed, 3, 0), cfg.fixed(INVARIANCE_TOL)),
    );
    if blocks.len() >= 3 {
        for k in 0..blocks.len() - 1 {
            let merged = merge_adjacent(&blocks, k);
            let group = |s: u64| sample_block_diagonal(&merged, s);
            let witness = find_non_invariance(
                &f,
                &group,
                &acc.points,
                NON_DESCENT_TRIALS,
                derive_seed(cfg.seed, 5, k as u64),
                NON_DESCENT_THRESHOLD,
            );
            let change = witness.map_or(0.0, |w| w.2);
            report.push_lower("non_descent", k, change, NON_DESCENT_THRESHOLD);
        }
    } else {
        report.diagnose("two blocks: the flag manifold is a Grassmannian, non-descent check skipped");
    }
    Ok(RunOutcome::from_report(report))
}

pub fn cmd_dual(cfg: &RunConfig) -> Result<RunOutcome> {
    let (m, n) = (cfg.m, cfg.n);
    let dim = m + n;
    let mut report = new_report(cfg);
    let a = eigen_matrix(&mut report, cfg)?;
    let dual = a.phi().dualize(m);
    let (lambda, mu) = (real(dim as f64), real(2.0));
    note_case(&mut report, lambda, mu)?;
    let compact = EigenParams::from_integers(-(dim as i64), -2);
    symbolic_checks(&mut report, cfg, &compact.negated(), "symbolic")?;
    let compact_verdict = sym_verify_all_coefficients(&compact, cfg.p)?;
    let dual_verdict = sym_verify_all_coefficients(&compact.negated(), cfg.p)?;
    flag_bool(
        &mut report,
        "symbolic.duality",
        (compact_verdict.p_harmonic_all, compact_verdict.proper_generic)
            == (dual_verdict.p_harmonic_all, dual_verdict.proper_generic),
    );

    let f = build_p_harmonic(&dual, lambda, mu, cfg.p, cfg.c1, cfg.c2)?;
    let radius = cfg.radius;
    let sampler = |s: u64| sample_so_mn(m, n, s, radius);
    let acc = match accepted_points(&mut report, cfg, &sampler, &f) {
        Ok(a) => a,
        Err(e @ Error::SamplesExhausted { .. }) => return Ok(domain_failure(report, &e)),
        Err(e) => return Err(e),
    };
    if radius == 0.0 {
        report.diagnose("radius 0: every sample lies in the isotropy group, where the function is constant");
    }
    let ctx = OperatorContext::grassmann(m, n, Form::Indefinite);
    report.absorb("eigen", check_eigen(&dual, lambda, mu, &acc.points, &ctx, cfg.threshold(1)));
    let p = cfg.p as usize;
    report.absorb(
        "numeric",
        check_p_harmonic(&f, p, &acc.points, &ctx, cfg.threshold(p), PROPERNESS_FLOOR),
    );
    report.diagnose(format!("compact eigenvalues ({}, -2), dual eigenvalues ({dim}, 2)", -(dim as i64)));
    Ok(RunOutcome::from_report(report))
}

/// Runs one command from parsed arguments, writing the report to `--out`
/// (stdout otherwise). Returns the exit status.
pub fn execute(cli: Cli) -> ExitStatus {
    let (name, args) = match &cli.command {
        Command::ReportSchema { out } => {
            let text = serde_json::to_string_pretty(&report_schema()).expect("schema serializes");
            return match write_output(out.as_ref(), &text) {
                Ok(()) => ExitStatus::Pass,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitStatus::Usage
                }
            };
        }
        Command::Calibrate(a) => ("calibrate", a),
        Command::Grassmann(a) => ("grassmann", a),
        Command::Pharmonic(a) => ("pharmonic", a),
        Command::Flag(a) => ("flag", a),
        Command::Dual(a) => ("dual", a),
    };
    let cfg = match tol_scale_from_env().and_then(|s| RunConfig::from_args(name, args, s)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::Usage;
        }
    };
    let start = Instant::now();
    let outcome = match name {
        "calibrate" => cmd_calibrate(&cfg),
        "grassmann" => cmd_grassmann(&cfg),
        "pharmonic" => cmd_pharmonic(&cfg),
        "flag" => cmd_flag(&cfg),
        _ => cmd_dual(&cfg),
    };
    let mut outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::Usage;
        }
    };
    outcome.report.timing.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    if let Err(e) = write_output(args.out.as_ref(), &outcome.report.to_json()) {
        eprintln!("error: {e}");
        return ExitStatus::Usage;
    }
    if let Some(path) = &args.csv {
        if let Err(e) = std::fs::write(path, outcome.report.to_csv()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitStatus::Usage;
        }
    }
    eprintln!(
        "{name}: {} ({} records, {:.1} ms)",
        if outcome.report.pass { "PASS" } else { "FAIL" },
        outcome.report.records.len(),
        outcome.report.timing.elapsed_ms
    );
    outcome.status
}

fn write_output(path: Option<&PathBuf>, text: &str) -> std::result::Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs. Usage errors map to 3.
pub fn run<I, T>(args: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let _ = e.print();
            match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitStatus::Pass,
                _ => ExitStatus::Usage,
            }
        }
    }
}
