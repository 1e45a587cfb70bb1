//! Command-line front end. `run` returns the process exit code:
//! 0 success, 1 I/O or solver failure, 2 usage or configuration error,
//! 3 failed verification under `verify --assert`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{
    run_fourier_experiment, run_lasso_experiment, run_optimal_sampling, shepp_logan, Fourier2DConfig, Lasso1DConfig,
    SamplingConfig, PHANTOM_VARIANT,
};
use crate::functionals::{verify_tv_subgradient, SubgradientCheck};
use crate::io::{load_toml, read_pfm_field, read_pfm_image, read_pgm, write_image, ImageFormat, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "SOURCEFORGE_OUT";

#[derive(Debug, Parser)]
#[command(name = "sourceforge", version, about = "Source condition elements for variational regularisation")]
pub struct Cli {
    /// TOML config for the subcommand; unknown keys are rejected
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run directory (default: $SOURCEFORGE_OUT/<command>, else runs/<command>)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides every iteration budget of the subcommand
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Stopping tolerance (or the verification tolerance for `verify`)
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Polynomial LASSO with an l1 source element
    Lasso1d {
        /// Built-in configuration, used when --config is absent
        #[arg(long, value_enum, default_value_t = Preset::Degree5)]
        preset: Preset,
    },
    /// Fourier subsampling with TV: source element, verification, PDHG round trip
    Fourier2d,
    /// Learned sampling mask compared with low-pass and largest-coefficient masks
    OptimalSampling,
    /// Re-check a stored K*v / q pair against a stored image
    Verify {
        #[arg(long)]
        u: PathBuf,
        /// K*v as a single-channel PFM
        #[arg(long)]
        v: PathBuf,
        /// dual field as a three-channel PFM
        #[arg(long)]
        q: PathBuf,
        /// exit 3 when the check fails
        #[arg(long)]
        assert: bool,
    },
    /// Write the phantom image
    Phantom {
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, value_enum, default_value_t = Format::Pgm16)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Degree5,
    Degree20,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Pgm16,
    Pfm,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Lasso1d { .. } => "lasso1d",
            Command::Fourier2d => "fourier2d",
            Command::OptimalSampling => "optimal-sampling",
            Command::Verify { .. } => "verify",
            Command::Phantom { .. } => "phantom",
        }
    }
}

/// Parses `argv` (program name first) and runs it.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    if let Some(t) = cli.tol {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("--tol must be a finite non-negative number, got {t}")));
        }
    }
    if cli.max_iters == Some(0) {
        return Err(Error::Config("--max-iters must be at least 1".into()));
    }
    match &cli.command {
        Command::Lasso1d { preset } => {
            let mut cfg = match &cli.config {
                Some(p) => load_toml::<Lasso1DConfig>(p)?,
                None if *preset == Preset::Degree20 => Lasso1DConfig::degree20(),
                None => Lasso1DConfig::degree5(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(n) = cli.max_iters {
                cfg.max_iters = n;
            }
            if let Some(t) = cli.tol {
                cfg.grad_tol = t;
            }
            let report = run_lasso_experiment(&cfg)?;
            let dir = prepare_out(cli)?;
            let artifacts = report.write_artifacts(&dir)?;
            finish(cli, &dir, &cfg, cfg.seed, artifacts, report.timings.clone())?;
            println!(
                "lasso1d: ||v|| = {:.6e} after {} iterations ({:?}), verification {}",
                report.solve.v_norm,
                report.solve.iterations,
                report.solve.termination,
                pass_word(report.summary.verification.passed)
            );
            Ok(EXIT_OK)
        }
        Command::Fourier2d => {
            let mut cfg: Fourier2DConfig = match &cli.config {
                Some(p) => load_toml(p)?,
                None => Fourier2DConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(n) = cli.max_iters {
                (cfg.budget.cd_iters, cfg.budget.palm_iters, cfg.budget.pdhg_iters) = (n, n, n);
            }
            if let Some(t) = cli.tol {
                cfg.budget.cd_tol = t;
            }
            let report = run_fourier_experiment(&cfg)?;
            let dir = prepare_out(cli)?;
            let artifacts = report.write_artifacts(&dir)?;
            finish(cli, &dir, &cfg, cfg.seed, artifacts, report.timings.clone())?;
            let m = &report.summary.metrics;
            println!(
                "fourier2d: residual {:.3e}, ||v|| = {:.6e}, max|q| = {:.6}, PDHG relative error {:.3e}, verification {}",
                m.residual,
                m.v_norm,
                m.max_q_norm,
                m.pdhg_relative_error,
                pass_word(m.verification_passed)
            );
            Ok(EXIT_OK)
        }
        Command::OptimalSampling => {
            let mut cfg: SamplingConfig = match &cli.config {
                Some(p) => load_toml(p)?,
                None => SamplingConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(n) = cli.max_iters {
                (cfg.budget.cd_iters, cfg.budget.palm_iters, cfg.budget.pdhg_iters) = (n, n, n);
            }
            if let Some(t) = cli.tol {
                cfg.budget.cd_tol = t;
            }
            let report = run_optimal_sampling(&cfg)?;
            let dir = prepare_out(cli)?;
            let artifacts = report.write_artifacts(&dir)?;
            finish(cli, &dir, &cfg, cfg.seed, artifacts, report.timings.clone())?;
            for row in &report.summary.comparison {
                println!(
                    "{:>8}: {} samples, relative error {:.4}",
                    row.name, row.metrics.mask_count, row.metrics.pdhg_relative_error
                );
            }
            if let Some(note) = &report.summary.ordering_exception {
                println!("note: {note}");
            }
            Ok(EXIT_OK)
        }
        Command::Verify { u, v, q, assert } => {
            let tol = cli.tol.unwrap_or(1e-6);
            let check = verify_files(u, v, q, tol)?;
            println!("{}", serde_json::to_string_pretty(&check).expect("plain struct serializes"));
            Ok(if *assert && !check.passed { EXIT_VERIFY } else { EXIT_OK })
        }
        Command::Phantom { size, format } => {
            let image = shepp_logan(*size, *size)?;
            let dir = prepare_out(cli)?;
            let (name, fmt) = match format {
                Format::Pgm16 => ("phantom.pgm", ImageFormat::Pgm16),
                Format::Pfm => ("phantom.pfm", ImageFormat::Pfm),
            };
            let artifacts = write_image(&dir.join(name), &image, fmt)?
                .into_iter()
                .map(|p| p.strip_prefix(&dir).map(Path::to_path_buf).unwrap_or(p))
                .collect();
            #[derive(Serialize)]
            struct PhantomConfig<'a> {
                size: usize,
                format: &'a str,
                variant: &'a str,
            }
            let cfg = PhantomConfig {
                size: *size,
                format: name,
                variant: PHANTOM_VARIANT,
            };
            finish(cli, &dir, &cfg, cli.seed.unwrap_or(0), artifacts, Vec::new())?;
            println!("phantom: {size}x{size} written to {}", dir.display());
            Ok(EXIT_OK)
        }
    }
}

/// Loads `u` (PGM or PFM), `K*v` and `q` (PFM) and runs the TV subgradient check.
pub fn verify_files(u: &Path, v: &Path, q: &Path, tol: f64) -> Result<SubgradientCheck> {
    let u_img = match u.extension().and_then(|e| e.to_str()) {
        Some("pgm") => read_pgm(u)?,
        _ => read_pfm_image(u)?,
    };
    let v_img = read_pfm_image(v)?;
    let q_field = read_pfm_field(q)?;
    let (n_y, n_x) = u_img.dim();
    if v_img.dim() != (n_y, n_x) {
        return Err(Error::Shape {
            context: "verify: v vs u",
            expected: vec![n_y, n_x],
            got: vec![v_img.nrows(), v_img.ncols()],
        });
    }
    let qd = q_field.dim();
    if n_y < 2 || n_x < 2 || (qd.0, qd.1) != (n_y - 1, n_x - 1) {
        return Err(Error::Shape {
            context: "verify: q vs u",
            expected: vec![n_y.saturating_sub(1), n_x.saturating_sub(1), 2],
            got: vec![qd.0, qd.1, qd.2],
        });
    }
    Ok(verify_tv_subgradient(&v_img, &q_field, &u_img, tol))
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "passed"
    } else {
        "FAILED"
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    if let Some(o) = &cli.out {
        return o.clone();
    }
    let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(cli.command.name())
}

fn prepare_out(cli: &Cli) -> Result<PathBuf> {
    let dir = out_dir(cli);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn finish(
    cli: &Cli,
    dir: &Path,
    cfg: &impl Serialize,
    seed: u64,
    artifacts: Vec<PathBuf>,
    timings: Vec<(String, f64)>,
) -> Result<()> {
    let mut manifest = RunManifest::new(cli.command.name(), cfg, seed);
    manifest.artifacts = artifacts;
    manifest.timings = timings;
    manifest.write(dir)?;
    Ok(())
}
