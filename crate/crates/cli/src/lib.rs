//! Command-line pipeline: ensemble construction and certification,
//! weight bounds, period tables, seed construction, branch continuation,
//! spectral diagnostics, solution verification, and n-body integration.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 input error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use sitnikov::conservative::{Conservative, SeedConfig, SeedSolution};
use sitnikov::continuation::{
    continue_branch, distinctness_check, Branch, BranchStatus, ContinuationConfig,
    ShootingBranchProblem,
};
use sitnikov::error::Error;
use sitnikov::field::{field_bounds, FieldBounds};
use sitnikov::io;
use sitnikov::ode::OdeOpts;
use sitnikov::par::ExecMode;
use sitnikov::primaries::{
    build_circular_polygon, build_kepler_pair, certify_symmetry, fit_orbits, ingest_trajectory,
    nbody_integrate, EnsembleConfig, PrimaryEnsemble,
};
use sitnikov::shooting::{
    reconstruct_full, shoot, verify_solution, ShotConfig, SymmetryClass,
};
use sitnikov::spectral::{
    default_p_max, sturm_eigenvalues, verify_comparison_bounds, SturmConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "sitnikov",
    about = "Symmetric periodic satellite orbits over certified planar n-body configurations",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads: 0 = library default, 1 = sequential.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct SourceArgs {
    /// Builtin ensemble: circular:N[:D] or kepler:E.
    #[arg(long, conflicts_with = "file")]
    builtin: Option<String>,
    /// Trajectory CSV (header t,x1,y1,...).
    #[arg(long, visible_alias = "ensemble")]
    file: Option<PathBuf>,
    /// JSON sidecar with masses and symmetry data.
    #[arg(long, requires = "file")]
    spec: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct TolArgs {

    /// Integrator tolerance for shots.
    #[arg(long, default_value_t = 1e-10)]
    tol_integrator: f64,
    /// Corrector tolerance for continuation.
    #[arg(long, default_value_t = 1e-12)]
    tol_corrector: f64,
    /// Certification tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol_certify: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify the dihedral symmetry of an ensemble.
    Certify {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        tols: TolArgs,
        /// Grid size for residual maxima.
        #[arg(long, default_value_t = 1024)]
        certify_grid: usize,
    },
    /// Weight bounds [m, M] and the exclusion test.
    Bounds {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        tols: TolArgs,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        q: Option<u32>,
    },
    /// Period function table E,zeta,T over a geometric energy grid.
    PeriodTable {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        tols: TolArgs,
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Lowest |E/E_min| sampled (closest to escape).
        #[arg(long, default_value_t = 1e-4)]
        frac_lo: f64,
        /// Highest |E/E_min| sampled (closest to the well bottom).
        #[arg(long, default_value_t = 0.999999)]
        frac_hi: f64,
    },
    /// Construct the lambda = 0 seed for one index pair.
    Seed {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        tols: TolArgs,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        #[arg(long, default_value_t = false)]
        relaxed_symmetry: bool,
    },
    /// Continue one branch from its seed to lambda = 1.
    Continue {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        tols: TolArgs,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        #[arg(long, default_value_t = false)]
        relaxed_symmetry: bool,
        /// Sup-norm bound; default 1e3 times the seed amplitude.
        #[arg(long)]
        m_user: Option<f64>,
        /// Trivial-proximity threshold; default 1e-6 times the seed
        /// amplitude.
        #[arg(long)]
        epsilon1: Option<f64>,
    },
    /// Neumann Sturm-Liouville spectrum of the trivial linearization.
    Spectrum {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        tols: TolArgs,
        #[arg(long)]
        q: u32,
        /// Highest index; default ceil(sqrt(M)) q + 2.
        #[arg(long)]
        p_max: Option<u32>,
        /// Comma-separated homotopy parameters.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.5, 1.0])]
        lambda: Vec<f64>,
    },
    /// Verify a profile CSV against the equation of motion.
    Verify {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        tols: TolArgs,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = false)]
        relaxed_symmetry: bool,
        #[arg(long, default_value_t = 1e-6)]
        tol_ode: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol_symmetry: f64,
    },
    /// Integrate the planar n-body problem from an initial-condition file.
    Nbody {
        /// JSON file {"masses": [...], "positions": [[x,y],...],
        /// "velocities": [[x,y],...]}.
        #[arg(long)]
        ics: PathBuf,
        #[arg(long, default_value_t = std::f64::consts::PI)]
        horizon: f64,
        #[arg(long, default_value_t = 512)]
        rows: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol_integrator: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol_collision: f64,
    },
    /// Full pipeline: certify, bounds, seeds, branches, verification,
    /// and spectra for a set of index pairs.
    Pipeline {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        tols: TolArgs,
        /// Comma-separated p values.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<u32>,
        /// Comma-separated q values.
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<u32>,
        #[arg(long, default_value_t = false)]
        relaxed_symmetry: bool,
        #[arg(long)]
        m_user: Option<f64>,
        #[arg(long)]
        epsilon1: Option<f64>,
    },
}

/// Everything that determines a run; hashed into every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub source: Option<String>,
    pub targets: Vec<(u32, u32)>,
    pub tol_integrator: f64,
    pub tol_corrector: f64,
    pub tol_certify: f64,
    pub m_user: Option<f64>,
    pub epsilon1: Option<f64>,
    pub relaxed_symmetry: bool,
    pub threads: usize,
}

impl RunConfig {
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a(text.as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325_u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Serialize)]
struct Stamped<T: Serialize> {
    config_hash: String,
    version: &'static str,
    payload: T,
}

fn write_json<T: Serialize>(path: &Path, payload: T, hash: &str) -> Result<(), Error> {
    let doc = Stamped {
        config_hash: hash.to_string(),
        version: env!("CARGO_PKG_VERSION"),
        payload,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Sidecar stamp for CSV outputs, whose schema cannot carry it inline.
fn write_meta(path: &Path, hash: &str) -> Result<(), Error> {
    let meta = serde_json::json!({
        "config_hash": hash,
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(path, format!("{meta:#}\n"))?;
    Ok(())
}

enum Source {
    Builtin(String),
    File { csv: PathBuf, sidecar: PathBuf },
}

fn parse_source(args: &SourceArgs) -> Result<Source, Error> {
    match (&args.builtin, &args.file) {
        (Some(name), None) => Ok(Source::Builtin(name.clone())),
        (None, Some(csv)) => {
            let sidecar = args
                .spec
                .clone()
                .unwrap_or_else(|| csv.with_extension("json"));
            Ok(Source::File {
                csv: csv.clone(),
                sidecar,
            })
        }
        _ => Err(Error::Config(
            "exactly one of --builtin or --file is required".into(),
        )),
    }
}

fn build_builtin(name: &str, cfg: &EnsembleConfig) -> Result<PrimaryEnsemble, Error> {
    let parts: Vec<&str> = name.split(':').collect();
    match parts.as_slice() {
        ["circular", n] => build_circular_polygon(
            n.parse()
                .map_err(|_| Error::Config(format!("bad polygon size in '{name}'")))?,
            None,
            cfg,
        ),
        ["circular", n, d] => build_circular_polygon(
            n.parse()
                .map_err(|_| Error::Config(format!("bad polygon size in '{name}'")))?,
            Some(
                d.parse()
                    .map_err(|_| Error::Config(format!("bad symmetry order in '{name}'")))?,
            ),
            cfg,
        ),
        ["kepler", e] => build_kepler_pair(
            e.parse()
                .map_err(|_| Error::Config(format!("bad eccentricity in '{name}'")))?,
            cfg,
        ),
        _ => Err(Error::Config(format!(
            "unknown builtin '{name}' (expected circular:N[:D] or kepler:E)"
        ))),
    }
}

fn resolve_ensemble(source: &Source, tol_certify: f64) -> Result<PrimaryEnsemble, Error> {
    let cfg = EnsembleConfig {
        certify_tol: tol_certify,
        ..EnsembleConfig::default()
    };
    match source {
        Source::Builtin(name) => build_builtin(name, &cfg),
        Source::File { csv, sidecar } => {
            let side = io::read_sidecar(sidecar)?;
            let table = io::read_trajectory_csv(csv, side.masses.clone())?;
            let spec = side.symmetry_spec()?;
            ingest_trajectory(&table, &spec, tol_certify, &cfg)
        }
    }
}

fn source_label(source: &Source) -> String {
    match source {
        Source::Builtin(name) => format!("builtin:{name}"),
        Source::File { csv, .. } => format!("file:{}", csv.display()),
    }
}

fn exec_mode(threads: usize) -> ExecMode {
    if threads == 1 {
        ExecMode::Sequential
    } else {
        if threads > 1 {
            sitnikov::par::configure_threads(threads);
        }
        ExecMode::default()
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}

fn validate_tols(tols: &TolArgs) -> Result<(), Error> {
    for (name, v) in [
        ("--tol-integrator", tols.tol_integrator),
        ("--tol-corrector", tols.tol_corrector),
        ("--tol-certify", tols.tol_certify),
    ] {
        if v <= 0.0 || v.is_nan() {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    fs::create_dir_all(&cli.out)?;
    let mode = exec_mode(cli.threads);
    match &cli.command {
        Command::Nbody { .. } => {}
        Command::Certify { tols, .. }
        | Command::Bounds { tols, .. }
        | Command::PeriodTable { tols, .. }
        | Command::Seed { tols, .. }
        | Command::Continue { tols, .. }
        | Command::Spectrum { tols, .. }
        | Command::Verify { tols, .. }
        | Command::Pipeline { tols, .. } => validate_tols(tols)?,
    }
    match &cli.command {
        Command::Certify {
            source,
            tols,
            certify_grid,
        } => cmd_certify(&cli, source, tols, *certify_grid),
        Command::Bounds { source, tols, p, q } => cmd_bounds(&cli, source, tols, *p, *q),
        Command::PeriodTable {
            source,
            tols,
            count,
            frac_lo,
            frac_hi,
        } => cmd_period_table(&cli, source, tols, *count, *frac_lo, *frac_hi, mode),
        Command::Seed {
            source,
            tols,
            p,
            q,
            relaxed_symmetry,
        } => cmd_seed(&cli, source, tols, *p, *q, *relaxed_symmetry),
        Command::Continue {
            source,
            tols,
            p,
            q,
            relaxed_symmetry,
            m_user,
            epsilon1,
        } => cmd_continue(&cli, source, tols, *p, *q, *relaxed_symmetry, *m_user, *epsilon1),
        Command::Spectrum {
            source,
            tols,
            q,
            p_max,
            lambda,
        } => cmd_spectrum(&cli, source, tols, *q, *p_max, lambda, mode),
        Command::Verify {
            source,
            tols,
            profile,
            p,
            q,
            lambda,
            relaxed_symmetry,
            tol_ode,
            tol_symmetry,
        } => cmd_verify(
            &cli,
            source,
            tols,
            profile,
            *p,
            *q,
            *lambda,
            *relaxed_symmetry,
            *tol_ode,
            *tol_symmetry,
        ),
        Command::Nbody {
            ics,
            horizon,
            rows,
            tol_integrator,
            tol_collision,
        } => cmd_nbody(&cli, ics, *horizon, *rows, *tol_integrator, *tol_collision),
        Command::Pipeline {
            source,
            tols,
            p,
            q,
            relaxed_symmetry,
            m_user,
            epsilon1,
        } => cmd_pipeline(
            &cli,
            source,
            tols,
            p,
            q,
            *relaxed_symmetry,
            *m_user,
            *epsilon1,
            mode,
        ),
    }
}

fn base_config(cli: &Cli, command: &str, source: Option<&Source>, tols: &TolArgs) -> RunConfig {
    RunConfig {
        command: command.to_string(),
        source: source.map(source_label),
        targets: Vec::new(),
        tol_integrator: tols.tol_integrator,
        tol_corrector: tols.tol_corrector,
        tol_certify: tols.tol_certify,
        m_user: None,
        epsilon1: None,
        relaxed_symmetry: false,
        threads: cli.threads,
    }
}

fn cmd_certify(
    cli: &Cli,
    source_args: &SourceArgs,
    tols: &TolArgs,
    grid: usize,
) -> Result<i32, Error> {
    let source = parse_source(source_args)?;
    let config = base_config(cli, "certify", Some(&source), tols);
    let hash = config.hash();
    let (orbits, spec) = match &source {
        Source::Builtin(name) => {
            let ens = build_builtin(name, &EnsembleConfig::default())?;
            (ens.orbits, ens.symmetry)
        }
        Source::File { csv, sidecar } => {
            let side = io::read_sidecar(sidecar)?;
            let table = io::read_trajectory_csv(csv, side.masses.clone())?;
            let orbits = fit_orbits(&table, &EnsembleConfig::default())?;
            (orbits, side.symmetry_spec()?)
        }
    };
    let certificate = certify_symmetry(&orbits, &spec, tols.tol_certify, grid)?;
    let path = cli.out.join("certificate.json");
    write_json(&path, &certificate, &hash)?;
    println!(
        "certify: passed = {} (rotation {:.3e}, reversal {:.3e}, mass {:.3e}, tol {:.1e})",
        certificate.passed,
        certificate.max_rotation_residual,
        certificate.max_reversal_residual,
        certificate.max_mass_residual,
        certificate.tolerance
    );
    println!("wrote {}", path.display());
    Ok(if certificate.passed { 0 } else { 1 })
}

fn cmd_bounds(
    cli: &Cli,
    source_args: &SourceArgs,
    tols: &TolArgs,
    p: Option<u32>,
    q: Option<u32>,
) -> Result<i32, Error> {
    let source = parse_source(source_args)?;
    let config = base_config(cli, "bounds", Some(&source), tols);
    let hash = config.hash();
    let ensemble = resolve_ensemble(&source, tols.tol_certify)?;
    let bounds = field_bounds(&ensemble, 2048)?;
    #[derive(Serialize)]
    struct BoundsOut<'a> {
        bounds: &'a FieldBounds,
        exclusion: Option<serde_json::Value>,
    }
    let exclusion = match (p, q) {
        (Some(p), Some(q)) => Some(serde_json::json!({
            "p": p,
            "q": q,
            "ratio_squared": (p as f64 / q as f64).powi(2),
            "excluded": bounds.excludes(p, q),
        })),
        _ => None,
    };
    let path = cli.out.join("bounds.json");
    write_json(
        &path,
        BoundsOut {
            bounds: &bounds,
            exclusion: exclusion.clone(),
        },
        &hash,
    )?;
    println!(
        "bounds: m = {:.9}, M = {:.9} (scan [{:.9}, {:.9}])",
        bounds.weight_inf, bounds.weight_sup, bounds.observed_inf, bounds.observed_sup
    );
    if let Some(e) = exclusion {
        println!("exclusion: {e}");
    }
    println!("wrote {}", path.display());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_period_table(
    cli: &Cli,
    source_args: &SourceArgs,
    tols: &TolArgs,
    count: usize,
    frac_lo: f64,
    frac_hi: f64,
    mode: ExecMode,
) -> Result<i32, Error> {
    if count < 2 || !(0.0 < frac_lo && frac_lo < frac_hi && frac_hi < 1.0) {
        return Err(Error::Config(
            "need count >= 2 and 0 < frac-lo < frac-hi < 1".into(),
        ));
    }
    let source = parse_source(source_args)?;
    let config = base_config(cli, "period-table", Some(&source), tols);
    let hash = config.hash();
    let ensemble = resolve_ensemble(&source, tols.tol_certify)?;
    let cons = Conservative::new(&ensemble);
    let e_min = cons.e_min();
    let energies: Vec<f64> = (0..count)
        .map(|k| {
            let s = frac_hi * (frac_lo / frac_hi).powf(k as f64 / (count - 1) as f64);
            e_min * s
        })
        .collect();
    let rows = cons
        .period_table(&energies, mode)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let path = cli.out.join("period_table.csv");
    io::write_period_table_csv(&path, &rows)?;
    write_meta(&cli.out.join("period_table.meta.json"), &hash)?;
    println!(
        "period-table: {} rows, E in [{:.9}, {:.9}], T in [{:.9}, {:.9}]",
        rows.len(),
        rows.first().unwrap().energy,
        rows.last().unwrap().energy,
        rows.iter().map(|r| r.period).fold(f64::INFINITY, f64::min),
        rows.iter().map(|r| r.period).fold(0.0, f64::max),
    );
    println!("wrote {}", path.display());
    Ok(0)
}

fn seed_with_config(
    ensemble: &PrimaryEnsemble,
    p: u32,
    q: u32,
    relaxed: bool,
) -> Result<SeedSolution, Error> {
    let cons = Conservative::new(ensemble);
    cons.solve_seed(p, q, relaxed, &SeedConfig::default())
}

fn cmd_seed(
    cli: &Cli,
    source_args: &SourceArgs,
    tols: &TolArgs,
    p: u32,
    q: u32,
    relaxed: bool,
) -> Result<i32, Error> {
    let source = parse_source(source_args)?;
    let mut config = base_config(cli, "seed", Some(&source), tols);
    config.targets = vec![(p, q)];
    config.relaxed_symmetry = relaxed;
    let hash = config.hash();
    let ensemble = resolve_ensemble(&source, tols.tol_certify)?;
    let seed = seed_with_config(&ensemble, p, q, relaxed)?;
    let csv = cli.out.join(format!("seed_p{p}_q{q}.csv"));
    io::write_profile_csv(&csv, &seed.profile)?;
    write_meta(&cli.out.join(format!("seed_p{p}_q{q}.meta.json")), &hash)?;
    #[derive(Serialize)]
    struct SeedOut {
        p: u32,
        q: u32,
        energy: f64,
        zeta: f64,
        period: f64,
        zero_count: u32,
        energy_drift: f64,
        symmetry_residual: f64,
    }
    let meta = cli.out.join(format!("seed_p{p}_q{q}.json"));
    write_json(
        &meta,
        SeedOut {
            p,
            q,
            energy: seed.level.energy,
            zeta: seed.level.zeta,
            period: seed.level.period,
            zero_count: seed.zero_count,
            energy_drift: seed.energy_drift,
            symmetry_residual: seed.profile.symmetry_residuals.max(),
        },
        &hash,
    )?;
    println!(
        "seed ({p},{q}): E = {:.12}, zeta = {:.12}, T = {:.12}, zeros = {}",
        seed.level.energy, seed.level.zeta, seed.level.period, seed.zero_count
    );
    println!("wrote {} and {}", csv.display(), meta.display());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_continue(
    cli: &Cli,
    source_args: &SourceArgs,
    tols: &TolArgs,
    p: u32,
    q: u32,
    relaxed: bool,
    m_user: Option<f64>,
    epsilon1: Option<f64>,
) -> Result<i32, Error> {
    let source = parse_source(source_args)?;
    let mut config = base_config(cli, "continue", Some(&source), tols);
    config.targets = vec![(p, q)];
    config.relaxed_symmetry = relaxed;
    config.m_user = m_user;
    config.epsilon1 = epsilon1;
    let hash = config.hash();
    let ensemble = resolve_ensemble(&source, tols.tol_certify)?;
    let (branch, verified) = run_branch(
        &ensemble, p, q, relaxed, tols, m_user, epsilon1, &cli.out, &hash,
    )?;
    println!(
        "continue ({p},{q}): {} after {} points, lambda_max = {:.6}",
        status_label(&branch.status),
        branch.points.len(),
        branch.lambda_max()
    );
    if let Some(report) = &verified {
        println!(
            "verify: passed = {} (ode {:.3e}, symmetry {:.3e}, zeros {:?})",
            report.passed,
            report.ode_residual,
            report.symmetry_residuals.max(),
            report.zero_count
        );
    }
    let ok = branch.status == BranchStatus::ReachedLambdaOne
        && verified.as_ref().map(|r| r.passed).unwrap_or(false);
    Ok(if ok { 0 } else { 1 })
}

/// Seed, continue, and (when lambda = 1 is reached) verify one branch,
/// writing the branch file and endpoint artifacts.
#[allow(clippy::too_many_arguments)]
fn run_branch(
    ensemble: &PrimaryEnsemble,
    p: u32,
    q: u32,
    relaxed: bool,
    tols: &TolArgs,
    m_user: Option<f64>,
    epsilon1: Option<f64>,
    out: &Path,
    hash: &str,
) -> Result<(Branch, Option<sitnikov::shooting::VerificationReport>), Error> {
    let seed = seed_with_config(ensemble, p, q, relaxed)?;
    let shot_cfg = ShotConfig {
        tol: tols.tol_integrator,
        class: seed.class,
        ..ShotConfig::default()
    };
    let bounds = field_bounds(ensemble, 1024)?;
    let cont_cfg = ContinuationConfig {
        corrector_tol: tols.tol_corrector,
        m_user,
        epsilon1,
        excluded: bounds.excludes(p, q),
        ..ContinuationConfig::default()
    };
    let problem = ShootingBranchProblem::new(ensemble, p, q, shot_cfg.clone());
    let branch = continue_branch(&problem, p, q, seed.level.zeta, &cont_cfg)?;
    io::write_branch_jsonl(&out.join(format!("branch_p{p}_q{q}.jsonl")), &branch, hash)?;

    let mut verified = None;
    if branch.status == BranchStatus::ReachedLambdaOne {
        let zeta_end = branch.final_zeta().expect("non-empty branch");
        let shot = shoot(ensemble, zeta_end, 1.0, p, q, &shot_cfg)?;
        let profile = reconstruct_full(&shot, 1e-8)?;
        io::write_profile_csv(&out.join(format!("profile_p{p}_q{q}.csv")), &profile)?;
        write_meta(&out.join(format!("profile_p{p}_q{q}.meta.json")), hash)?;
        let report = verify_solution(ensemble, &profile, 1e-6, 1e-8)?;
        write_json(&out.join(format!("verify_p{p}_q{q}.json")), &report, hash)?;
        verified = Some(report);
    }
    Ok((branch, verified))
}

fn status_label(status: &BranchStatus) -> String {
    match status {
        BranchStatus::ReachedLambdaOne => "reached-lambda-one".into(),
        BranchStatus::FoldBeyondLimit { lambda_max, .. } => {
            format!("fold-beyond-limit (lambda_max {lambda_max:.6})")
        }
        BranchStatus::TrivialCollapse {
            contradicts_exclusion,
        } => format!("trivial-collapse (contradicts_exclusion {contradicts_exclusion})"),
        BranchStatus::BoundExceeded => "bound-exceeded".into(),
        BranchStatus::StepFailure { reason } => format!("step-failure ({reason})"),
    }
}

fn cmd_spectrum(
    cli: &Cli,
    source_args: &SourceArgs,
    tols: &TolArgs,
    q: u32,
    p_max: Option<u32>,
    lambdas: &[f64],
    mode: ExecMode,
) -> Result<i32, Error> {
    let source = parse_source(source_args)?;
    let config = base_config(cli, "spectrum", Some(&source), tols);
    let hash = config.hash();
    let ensemble = resolve_ensemble(&source, tols.tol_certify)?;
    let bounds = field_bounds(&ensemble, 1024)?;
    let p_max = p_max.unwrap_or_else(|| default_p_max(bounds.weight_sup, q));
    for &lambda in lambdas {
        let report = sturm_eigenvalues(&ensemble, lambda, p_max, q, &SturmConfig::default(), mode)?;
        let verdicts = verify_comparison_bounds(&report, &bounds)?;
        #[derive(Serialize)]
        struct SpectrumOut<'a> {
            report: &'a sitnikov::spectral::SpectralReport,
            verdicts: &'a [sitnikov::spectral::IndexVerdict],
        }
        let path = cli
            .out
            .join(format!("spectrum_q{q}_lambda{}.json", fmt_lambda(lambda)));
        write_json(
            &path,
            SpectrumOut {
                report: &report,
                verdicts: &verdicts,
            },
            &hash,
        )?;
        println!(
            "spectrum q = {q}, lambda = {lambda}: {} indices, all within comparison bounds",
            report.indices.len()
        );
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn fmt_lambda(lambda: f64) -> String {
    format!("{lambda}").replace('.', "_")
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    cli: &Cli,
    source_args: &SourceArgs,
    tols: &TolArgs,
    profile_path: &Path,
    p: u32,
    q: u32,
    lambda: f64,
    relaxed: bool,
    tol_ode: f64,
    tol_symmetry: f64,
) -> Result<i32, Error> {
    let source = parse_source(source_args)?;
    let mut config = base_config(cli, "verify", Some(&source), tols);
    config.targets = vec![(p, q)];
    config.relaxed_symmetry = relaxed;
    let hash = config.hash();
    let ensemble = resolve_ensemble(&source, tols.tol_certify)?;
    let class = if relaxed {
        SymmetryClass::EvenPeriodic
    } else {
        SymmetryClass::AntiPeriodic
    };
    let profile = io::read_profile_csv(profile_path, lambda, p, q, class)?;
    let report = verify_solution(&ensemble, &profile, tol_ode, tol_symmetry)?;
    let path = cli.out.join(format!("verify_p{p}_q{q}.json"));
    write_json(&path, &report, &hash)?;
    println!(
        "verify ({p},{q}) at lambda = {lambda}: passed = {} (ode {:.3e}, symmetry {:.3e}, zeros {:?} expected {})",
        report.passed,
        report.ode_residual,
        report.symmetry_residuals.max(),
        report.zero_count,
        report.expected_zero_count
    );
    println!("wrote {}", path.display());
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_nbody(
    cli: &Cli,
    ics: &Path,
    horizon: f64,
    rows: usize,
    tol: f64,
    tol_collision: f64,
) -> Result<i32, Error> {
    #[derive(Deserialize, Serialize)]
    struct Ics {
        masses: Vec<f64>,
        positions: Vec<[f64; 2]>,
        velocities: Vec<[f64; 2]>,
    }
    let text = fs::read_to_string(ics)?;
    let ics: Ics =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", "ics file")))?;
    let config = RunConfig {
        command: "nbody".into(),
        source: None,
        targets: Vec::new(),
        tol_integrator: tol,
        tol_corrector: 0.0,
        tol_certify: 0.0,
        m_user: None,
        epsilon1: None,
        relaxed_symmetry: false,
        threads: cli.threads,
    };
    let hash = config.hash();
    let run = nbody_integrate(
        &ics.masses,
        &ics.positions,
        &ics.velocities,
        horizon,
        rows,
        tol_collision,
        OdeOpts::with_tol(tol),
    )?;
    let csv = cli.out.join("trajectory.csv");
    io::write_trajectory_csv(&csv, &run.table)?;
    write_meta(&cli.out.join("trajectory.meta.json"), &hash)?;
    #[derive(Serialize)]
    struct NbodyOut {
        closure_residual: f64,
        energy_drift: f64,
        momentum_drift: f64,
        com_drift: f64,
        steps: usize,
    }
    write_json(
        &cli.out.join("nbody_run.json"),
        NbodyOut {
            closure_residual: run.closure_residual,
            energy_drift: run.energy_drift,
            momentum_drift: run.momentum_drift,
            com_drift: run.com_drift,
            steps: run.stats.steps,
        },
        &hash,
    )?;
    println!(
        "nbody: closure {:.3e}, energy drift {:.3e}, wrote {}",
        run.closure_residual,
        run.energy_drift,
        csv.display()
    );
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
struct PipelineRow {
    p: u32,
    q: u32,
    status: String,
    lambda_max: Option<f64>,
    zeta_end: Option<f64>,
    zero_count: Option<u32>,
    verify_passed: Option<bool>,
    reason: Option<String>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_pipeline(
    cli: &Cli,
    source_args: &SourceArgs,
    tols: &TolArgs,
    ps: &[u32],
    qs: &[u32],
    relaxed: bool,
    m_user: Option<f64>,
    epsilon1: Option<f64>,
    mode: ExecMode,
) -> Result<i32, Error> {
    let source = parse_source(source_args)?;
    let mut config = base_config(cli, "pipeline", Some(&source), tols);
    config.targets = qs
        .iter()
        .flat_map(|&q| ps.iter().map(move |&p| (p, q)))
        .collect();
    config.relaxed_symmetry = relaxed;
    config.m_user = m_user;
    config.epsilon1 = epsilon1;
    let hash = config.hash();
    let ensemble = resolve_ensemble(&source, tols.tol_certify)?;

    write_json(
        &cli.out.join("certificate.json"),
        &ensemble.certificate,
        &hash,
    )?;
    let bounds = field_bounds(&ensemble, 1024)?;
    write_json(&cli.out.join("bounds.json"), &bounds, &hash)?;

    // Spectral reports once per q at the standard homotopy stations.
    for &q in qs {
        let p_max = default_p_max(bounds.weight_sup, q);
        for lambda in [0.0, 0.5, 1.0] {
            let report =
                sturm_eigenvalues(&ensemble, lambda, p_max, q, &SturmConfig::default(), mode)?;
            let verdicts = verify_comparison_bounds(&report, &bounds)?;
            #[derive(Serialize)]
            struct SpectrumOut {
                report: sitnikov::spectral::SpectralReport,
                verdicts: Vec<sitnikov::spectral::IndexVerdict>,
            }
            write_json(
                &cli.out
                    .join(format!("spectrum_q{q}_lambda{}.json", fmt_lambda(lambda))),
                SpectrumOut { report, verdicts },
                &hash,
            )?;
        }
    }

    // Branch jobs fan out across targets; file writes are per-job.
    let jobs: Vec<(u32, u32)> = config.targets.clone();
    let results = sitnikov::par::map_collect(mode, &jobs, |&(p, q)| {
        pipeline_job(&ensemble, p, q, relaxed, tols, m_user, epsilon1, &cli.out, &hash)
    });
    // Hard per-job errors become rows so partial results survive.
    let rows: Vec<PipelineRow> = jobs
        .iter()
        .zip(results)
        .map(|(&(p, q), res)| match res {
            Ok(row) => row,
            Err(e) => PipelineRow {
                p,
                q,
                status: "error".into(),
                lambda_max: None,
                zeta_end: None,
                zero_count: None,
                verify_passed: None,
                reason: Some(e.to_string()),
            },
        })
        .collect();

    // Distinctness across branches sharing q.
    let mut branches: Vec<Branch> = Vec::new();
    for row in &rows {
        if row.status == "reached-lambda-one" {
            let path = cli.out.join(format!("branch_p{}_q{}.jsonl", row.p, row.q));
            if let Ok(text) = fs::read_to_string(&path) {
                let mut lines = text.lines();
                if let Some(header) = lines.next() {
                    if let Ok(h) = serde_json::from_str::<io::BranchHeader>(header) {
                        let points = lines
                            .filter_map(|l| serde_json::from_str(l).ok())
                            .collect::<Vec<_>>();
                        branches.push(Branch {
                            p: h.p,
                            q: h.q,
                            seed_zeta: h.seed_zeta,
                            points,
                            status: h.status,
                        });
                    }
                }
            }
        }
    }
    for &q in qs {
        let group: Vec<&Branch> = branches.iter().filter(|b| b.q == q).collect();
        if group.len() >= 2 {
            let report = distinctness_check(&group, tols.tol_corrector)?;
            write_json(
                &cli.out.join(format!("distinctness_q{q}.json")),
                &report,
                &hash,
            )?;
        }
    }

    write_json(&cli.out.join("summary.json"), &rows, &hash)?;
    println!("p  q  status                 lambda_max  zeros  verify");
    let mut all_ok = true;
    for row in &rows {
        let ok = matches!(row.status.as_str(), "reached-lambda-one")
            && row.verify_passed.unwrap_or(false)
            || matches!(row.status.as_str(), "no-seed" | "parity-refused");
        all_ok &= ok;
        println!(
            "{:<2} {:<2} {:<22} {:<11} {:<6} {}",
            row.p,
            row.q,
            row.status,
            row.lambda_max
                .map(|l| format!("{l:.6}"))
                .unwrap_or_else(|| "-".into()),
            row.zero_count
                .map(|c| c.to_string())
                .unwrap_or_else(|| "-".into()),
            row.verify_passed
                .map(|v| if v { "pass" } else { "FAIL" }.to_string())
                .unwrap_or_else(|| row.reason.clone().unwrap_or_else(|| "-".into())),
        );
    }
    println!("wrote {}", cli.out.join("summary.json").display());
    Ok(if all_ok { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn pipeline_job(
    ensemble: &PrimaryEnsemble,
    p: u32,
    q: u32,
    relaxed: bool,
    tols: &TolArgs,
    m_user: Option<f64>,
    epsilon1: Option<f64>,
    out: &Path,
    hash: &str,
) -> Result<PipelineRow, Error> {
    match run_branch(ensemble, p, q, relaxed, tols, m_user, epsilon1, out, hash) {
        Ok((branch, verified)) => Ok(PipelineRow {
            p,
            q,
            status: match &branch.status {
                BranchStatus::ReachedLambdaOne => "reached-lambda-one".into(),
                BranchStatus::FoldBeyondLimit { .. } => "fold-beyond-limit".into(),
                BranchStatus::TrivialCollapse { .. } => "trivial-collapse".into(),
                BranchStatus::BoundExceeded => "bound-exceeded".into(),
                BranchStatus::StepFailure { .. } => "step-failure".into(),
            },
            lambda_max: Some(branch.lambda_max()),
            zeta_end: branch.final_zeta(),
            zero_count: branch.points.last().and_then(|pt| pt.zero_count),
            verify_passed: verified.map(|r| r.passed),
            reason: match &branch.status {
                BranchStatus::StepFailure { reason } => Some(reason.clone()),
                _ => None,
            },
        }),
        Err(Error::NoSeed { p, q, sqrt_beta }) => Ok(PipelineRow {
            p,
            q,
            status: "no-seed".into(),
            lambda_max: None,
            zeta_end: None,
            zero_count: None,
            verify_passed: None,
            reason: Some(format!("p > sqrt(beta)*q (sqrt(beta) = {sqrt_beta:.6})")),
        }),
        Err(Error::AntiperiodicityUnattainable(p_even)) => Ok(PipelineRow {
            p,
            q,
            status: "parity-refused".into(),
            lambda_max: None,
            zeta_end: None,
            zero_count: None,
            verify_passed: None,
            reason: Some(format!(
                "even p = {p_even} violates anti-periodicity; rerun with --relaxed-symmetry"
            )),
        }),
        Err(e) => Err(e),
    }
}
