//! `bcl` command line: construct, verify, classify, realize and search.
//!
//! Every subcommand produces a single JSON report. The process exit code
//! carries the verdict:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O, JSON or usage error |
//! | 2 | spectrum proven infeasible |
//! | 3 | precondition violated |
//! | 4 | a residual check failed |
//! | 5 | only reducible triples exist, or irreducibility was required and fails |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bcl_core::bclbuild::{
    build_frame, construct_part_i, construct_part_ii, construct_part_iii, verify_block_system, witness_violation,
    BclTriple, BlockResiduals, PartIiiOutcome, DEFAULT_ALPHA,
};
use bcl_core::bclinf::{make_for_spectrum, orbit_coverage, windowed_defect_check, Mode, OrbitCoverage};
use bcl_core::hardy::{defect_block, isometry_check, product_check, realize, HardyRealization, IsometryReport, ProductReport};
use bcl_core::matcore::ComplexMatrix;
use bcl_core::random::haar_unitary;
use bcl_core::search::{search, SearchConfig};
use bcl_core::spectrum::{canonical_matrix, classify, feasibility, ConstructionHint, DefectSpectrum, FeasibilityVerdict, VerdictKind};
use bcl_core::verify::{verify_triple, VerificationReport};
use bcl_core::{BclError, Tolerances, C64};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_RESIDUAL: i32 = 4;
pub const EXIT_REDUCIBLE: i32 = 5;

/// Default number of lazy basis vectors checked for infinite spectra.
pub const DEFAULT_WINDOW: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid --alpha {0:?}: expected re,im")]
    Alpha(String),
    #[error(transparent)]
    Core(#[from] BclError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Json { .. } | CliError::Alpha(_) => EXIT_IO,
            CliError::Core(_) => EXIT_PRECONDITION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bcl", version, about = "Construct and verify BCL triples and their isometry pairs")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Residual tolerance; structural and rank tolerances keep their defaults.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a triple whose defect has the given spectrum.
    Construct(ConstructArgs),
    /// Check a triple against a spectrum.
    Verify(VerifyArgs),
    /// Read off the spectrum of a defect matrix.
    Classify(ClassifyArgs),
    /// Build the truncated isometry pair of a triple.
    Realize(RealizeArgs),
    /// Random search for triples with unit eigenvalue counts `l1`, `l1p`.
    Search(SearchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstructMode {
    Auto,
    PartI,
    PartII,
    PartIii,
    Inf,
    Diff1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BlockUnitaries {
    Default,
    Random,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long)]
    pub spectrum: PathBuf,
    #[arg(long, value_enum, default_value_t = ConstructMode::Auto)]
    pub mode: ConstructMode,
    /// Twist for the single-eigenvalue construction, as `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, value_enum, default_value_t = BlockUnitaries::Default)]
    pub block_unitaries: BlockUnitaries,
    /// Basis vectors checked for infinite spectra.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub triple: PathBuf,
    #[arg(long)]
    pub spectrum: PathBuf,
    #[arg(long)]
    pub require_irreducible: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub matrix: PathBuf,
}

#[derive(Debug, Args)]
pub struct RealizeArgs {
    #[arg(long)]
    pub triple: PathBuf,
    /// Highest polynomial degree `N` kept.
    #[arg(long, default_value_t = 8)]
    pub degree: usize,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub l1: usize,
    #[arg(long)]
    pub l1p: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Rank of the sampled projection.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Report raw samples only, without gradient polishing.
    #[arg(long)]
    pub no_refine: bool,
}

/// A rendered report and the exit code that goes with it.
#[derive(Debug)]
pub struct Outcome {
    pub json: String,
    pub code: i32,
}

impl Outcome {
    fn new<T: Serialize>(report: &T, code: i32) -> Self {
        Self {
            json: bcl_core::json::to_string(report),
            code,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_alpha(s: &str) -> Result<C64, CliError> {
    let (re, im) = s.split_once(',').ok_or_else(|| CliError::Alpha(s.into()))?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| CliError::Alpha(s.into()));
    Ok(C64::new(parse(re)?, parse(im)?))
}

fn tolerances(tol: Option<f64>) -> Result<Tolerances, CliError> {
    let mut t = Tolerances::default();
    if let Some(r) = tol {
        t = Tolerances::new(t.structural, r, t.rank_gap)?;
    }
    Ok(t)
}

#[derive(Debug, Serialize)]
pub struct LazyReport {
    pub construction: &'static str,
    pub window: usize,
    pub windowed_residual: f64,
    pub orbit: OrbitCoverage,
}

#[derive(Debug, Serialize)]
pub struct ExplicitWitness {
    pub basis: ComplexMatrix,
    pub violation: f64,
}

#[derive(Debug, Serialize)]
pub struct ConstructReport {
    pub spectrum: DefectSpectrum,
    pub feasibility: FeasibilityVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triple: Option<BclTriple>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_residuals: Option<BlockResiduals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ExplicitWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lazy: Option<LazyReport>,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    #[serde(flatten)]
    pub verification: VerificationReport,
    pub block_residuals: Option<BlockResiduals>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct ClassifyReport {
    pub spectrum: DefectSpectrum,
    pub feasibility: FeasibilityVerdict,
}

#[derive(Debug, Serialize)]
pub struct RealizeReport {
    #[serde(flatten)]
    pub realization: HardyRealization,
    pub products: ProductReport,
    pub isometry: IsometryReport,
    pub defect_block: ComplexMatrix,
    pub defect_block_residual: f64,
    pub defect_offblock: f64,
    pub pass: bool,
}

/// Frame-coordinate block residuals, when `P` is the default frame's `P`.
fn block_residuals(t: &BclTriple, s: &DefectSpectrum, tol: &Tolerances) -> Option<BlockResiduals> {
    let frame = build_frame(s, None, tol).ok()?;
    if frame.dim() != t.dim || (&frame.p() - &t.p).max_abs() > tol.structural {
        return None;
    }
    verify_block_system(t, &frame).ok()
}

fn random_blocks(s: &DefectSpectrum, seed: u64) -> Vec<ComplexMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    s.positive_groups()
        .iter()
        .map(|&(_, k)| haar_unitary(k, &mut rng))
        .collect()
}

pub fn cmd_construct(args: &ConstructArgs, seed: u64, tol: &Tolerances) -> Result<Outcome, CliError> {
    let spectrum: DefectSpectrum = read_json(&args.spectrum)?;
    spectrum.validate()?;
    let verdict = feasibility(&spectrum);
    let mut report = ConstructReport {
        spectrum: spectrum.clone(),
        feasibility: verdict.clone(),
        triple: None,
        verification: None,
        block_residuals: None,
        witness: None,
        lazy: None,
    };
    if verdict.kind == VerdictKind::Infeasible {
        return Ok(Outcome::new(&report, EXIT_INFEASIBLE));
    }

    let mode = match args.mode {
        ConstructMode::Auto => match verdict.construction_hint {
            Some(ConstructionHint::PartI) => ConstructMode::PartI,
            Some(ConstructionHint::PartII) => ConstructMode::PartII,
            Some(ConstructionHint::PartIII) => ConstructMode::PartIii,
            Some(ConstructionHint::Inf) => ConstructMode::Inf,
            Some(ConstructionHint::Diff1) => ConstructMode::Diff1,
            None => {
                return Err(BclError::PreconditionViolation(format!("no construction applies: {}", verdict.reason)).into())
            }
        },
        m => m,
    };

    if matches!(mode, ConstructMode::Inf | ConstructMode::Diff1) {
        let gap = spectrum.l1.abs_diff(spectrum.l1p);
        if !spectrum.is_infinite() {
            return Err(BclError::PreconditionViolation("lazy constructions need an infinite spectrum".into()).into());
        }
        if (mode == ConstructMode::Inf) != (gap == 0) {
            return Err(BclError::PreconditionViolation(format!(
                "mode {mode:?} does not match dim E_1 = {}, dim E_-1 = {}",
                spectrum.l1, spectrum.l1p
            ))
            .into());
        }
        let (u, p) = make_for_spectrum(&spectrum)?;
        let window = args.window.max(1);
        let windowed_residual = windowed_defect_check(&u, &p, window)?;
        let orbit = orbit_coverage(&u, &p, (window / 10).max(1), (window / 5).max(1), 2 * window)?;
        let construction = match (&p.system.mode, p.system.mirrored) {
            (Mode::Inf { .. }, _) => "inf",
            (Mode::Diff1 { .. }, false) => "diff1",
            (Mode::Diff1 { .. }, true) => "diff1-mirrored",
        };
        let ok = windowed_residual <= tol.residual && orbit.covered;
        report.lazy = Some(LazyReport {
            construction,
            window,
            windowed_residual,
            orbit,
        });
        return Ok(Outcome::new(&report, if ok { EXIT_OK } else { EXIT_RESIDUAL }));
    }

    let blocks = match args.block_unitaries {
        BlockUnitaries::Default => None,
        BlockUnitaries::Random => Some(random_blocks(&spectrum, seed)),
    };
    let mut reducible = false;
    let triple = match mode {
        ConstructMode::PartI => construct_part_i(&build_frame(&spectrum, blocks.as_deref(), tol)?, tol)?,
        ConstructMode::PartII => {
            let alpha = args.alpha.as_deref().map(parse_alpha).transpose()?.unwrap_or(DEFAULT_ALPHA);
            construct_part_ii(&build_frame(&spectrum, blocks.as_deref(), tol)?, alpha, tol)?
        }
        ConstructMode::PartIii => match construct_part_iii(&spectrum, tol)? {
            PartIiiOutcome::Irreducible(t) => t,
            PartIiiOutcome::Reducible(w) => {
                reducible = true;
                report.witness = Some(ExplicitWitness {
                    violation: witness_violation(&w.triple, &w.witness),
                    basis: w.witness,
                });
                w.triple
            }
        },
        _ => unreachable!("lazy modes handled above"),
    };

    // recomputed from the emitted triple alone
    let verification = verify_triple(&triple, &canonical_matrix(&spectrum)?, tol)?;
    let block = block_residuals(&triple, &spectrum, tol);
    let residual_ok = verification.defect_residual <= tol.residual
        && block.is_none_or(|b| b.max() <= tol.residual)
        && report.witness.as_ref().is_none_or(|w| w.violation <= tol.residual);
    let code = if !residual_ok {
        EXIT_RESIDUAL
    } else if reducible || verdict.kind == VerdictKind::ReducibleOnly {
        EXIT_REDUCIBLE
    } else {
        EXIT_OK
    };
    report.triple = Some(triple);
    report.verification = Some(verification);
    report.block_residuals = block;
    Ok(Outcome::new(&report, code))
}

pub fn cmd_verify(args: &VerifyArgs, tol: &Tolerances) -> Result<Outcome, CliError> {
    let triple: BclTriple = read_json(&args.triple)?;
    let spectrum: DefectSpectrum = read_json(&args.spectrum)?;
    triple.validate(tol)?;
    spectrum.validate()?;
    if spectrum.is_infinite() {
        return Err(BclError::InfiniteSpectrum.into());
    }
    let target = canonical_matrix(&spectrum)?;
    if target.rows() != triple.dim {
        return Err(BclError::DimensionMismatch {
            expected: target.rows(),
            found: triple.dim,
        }
        .into());
    }
    let verification = verify_triple(&triple, &target, tol)?;
    let block = block_residuals(&triple, &spectrum, tol);
    let residual_ok =
        verification.defect_residual <= tol.residual && block.is_none_or(|b| b.max() <= tol.residual);
    let code = if !residual_ok {
        EXIT_RESIDUAL
    } else if args.require_irreducible && !verification.irreducible {
        EXIT_REDUCIBLE
    } else {
        EXIT_OK
    };
    let report = VerifyReport {
        verification,
        block_residuals: block,
        pass: code == EXIT_OK,
    };
    Ok(Outcome::new(&report, code))
}

pub fn cmd_classify(args: &ClassifyArgs, tol: &Tolerances) -> Result<Outcome, CliError> {
    let m: ComplexMatrix = read_json(&args.matrix)?;
    let spectrum = classify(&m, tol)?;
    let report = ClassifyReport {
        feasibility: feasibility(&spectrum),
        spectrum,
    };
    Ok(Outcome::new(&report, EXIT_OK))
}

pub fn cmd_realize(args: &RealizeArgs, tol: &Tolerances) -> Result<Outcome, CliError> {
    let triple: BclTriple = read_json(&args.triple)?;
    triple.validate(tol)?;
    let h = realize(&triple, args.degree)?;
    let products = product_check(&h);
    let isometry = isometry_check(&h);
    let block = defect_block(&h);
    // the degree-0 block of the defect is U P U* − P
    let expected = &triple.u.matmul(&triple.p).matmul(&triple.u.adjoint()) - &triple.p;
    let defect_block_residual = (&block.degree0_block - &expected).max_abs();
    let pass = [
        products.commutator,
        products.v1v2_minus_mz,
        products.v2v1_minus_mz,
        isometry.v1_defect,
        isometry.v2_defect,
        defect_block_residual,
        block.offblock_max,
    ]
    .iter()
    .all(|&r| r <= tol.residual);
    let report = RealizeReport {
        realization: h,
        products,
        isometry,
        defect_block: block.degree0_block,
        defect_block_residual,
        defect_offblock: block.offblock_max,
        pass,
    };
    Ok(Outcome::new(&report, if pass { EXIT_OK } else { EXIT_RESIDUAL }))
}

pub fn cmd_search(args: &SearchArgs, seed: u64, tol: &Tolerances) -> Result<Outcome, CliError> {
    let mut cfg = SearchConfig::new(args.dim, args.l1, args.l1p, args.trials, seed);
    cfg.rank = args.rank;
    cfg.refine = !args.no_refine;
    Ok(Outcome::new(&search(&cfg, tol)?, EXIT_OK))
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let tol = tolerances(cli.tol)?;
    match &cli.command {
        Command::Construct(a) => cmd_construct(a, cli.seed, &tol),
        Command::Verify(a) => cmd_verify(a, &tol),
        Command::Classify(a) => cmd_classify(a, &tol),
        Command::Realize(a) => cmd_realize(a, &tol),
        Command::Search(a) => cmd_search(a, cli.seed, &tol),
    }
}

fn emit(json: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, format!("{json}\n")).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{json}").map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors, which is reserved for infeasibility
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    let result = execute(&cli).and_then(|o| emit(&o.json, cli.out.as_deref()).map(|_| o.code));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bcl: {e}");
            e.exit_code()
        }
    }
}
