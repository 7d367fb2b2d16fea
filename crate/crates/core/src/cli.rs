//! Command-line front end. `run` is the whole program minus process exit,
//! so tests can drive it in-process.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::calculus::{
    apply_quadrature, apply_spectral, functional_calculus, projector_apply,
    riemann_stieltjes_apply, ThresholdField,
};
use crate::config::{Config, Overrides};
use crate::csvio::{self, fmt_real};
use crate::error::{Error, Result};
use crate::expr::parse;
use crate::fiber::{decompose_with, FiberDecomposition};
use crate::grid::{l22_distance, l22_norm};
use crate::kernel::{mercer_reconstruct, sup_difference, Kernel};
use crate::spectrum::{mix_field, spm_membership};
use crate::verify::{run_suite, SuiteOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "fiberspec",
    version,
    about = "Fiberwise spectral calculus of partially integral operators"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory receiving CSV output (created if missing)
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for fiber-parallel work (0 = all available)
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true)]
    pub rank_tol: Option<f64>,
    #[arg(long, global = true)]
    pub tie_tol: Option<f64>,
    #[arg(long, global = true)]
    pub eig_tol: Option<f64>,
    #[arg(long, global = true)]
    pub member_tol: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub quad_n: Option<usize>,
    #[arg(long, global = true)]
    pub omega_n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApplyMode {
    Quadrature,
    Spectral,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigencurves, eigenfunctions and spectral bounds
    Decompose,
    /// Apply T to a named section
    Apply {
        #[arg(long)]
        section: String,
        #[arg(long, value_enum, default_value_t = ApplyMode::Quadrature)]
        mode: ApplyMode,
    },
    /// Apply the projector E_λ for a named threshold field
    Project {
        #[arg(long)]
        threshold: String,
        #[arg(long)]
        section: String,
    },
    /// Apply g(T) for an expression g in lambda
    Funcalc {
        #[arg(long)]
        function: String,
        #[arg(long)]
        section: String,
    },
    /// Riemann–Stieltjes sum of g over a uniform mesh
    Rs {
        #[arg(long)]
        function: String,
        #[arg(long)]
        mesh: f64,
        #[arg(long)]
        section: String,
    },
    /// Fiber spectra; with a partition also the mixed field and its membership
    Spectrum {
        #[arg(long)]
        partition: Option<String>,
    },
    /// Mixed eigenvalue field over a named partition
    Mix {
        #[arg(long)]
        partition: String,
    },
    /// Truncated Mercer reconstruction of the kernel
    Reconstruct {
        #[arg(long)]
        rank: usize,
    },
    /// Run the invariant suite; exits 4 if any check fails
    Verify,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock())
}

/// As [`run`], with command reports written to `stdout`.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let g = &cli.global;
    let path = g
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let overrides = Overrides {
        omega_n: g.omega_n,
        quad_n: g.quad_n,
        rank_tol: g.rank_tol,
        tie_tol: g.tie_tol,
        eig_tol: g.eig_tol,
        member_tol: g.member_tol,
        epsilon: g.epsilon,
    };
    let config = Config::load(path, &overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {}", e)))?;
    // reports are buffered so the worker pool never holds the caller's writer
    let mut report = Vec::new();
    let code = pool.install(|| dispatch(&cli.command, &config, &g.out, &mut report));
    stdout.write_all(&report)?;
    code
}

struct Session {
    kernel: Kernel,
    d: FiberDecomposition,
}

fn session(config: &Config) -> Result<Session> {
    let kernel = config.build_kernel()?;
    let d = decompose_with(&kernel, &config.decompose_options())?;
    Ok(Session { kernel, d })
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(out)?;
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn dispatch(command: &Command, config: &Config, out: &Path, stdout: &mut dyn Write) -> Result<i32> {
    let tie_tol = config.tolerances.tie_tol;
    let eps = config.epsilon;
    match command {
        Command::Decompose => {
            let s = session(config)?;
            csvio::write_eigencurves(create(out, "eigencurves.csv")?, &s.d)?;
            csvio::write_eigenfunctions(create(out, "eigenfunctions.csv")?, &s.d)?;
            csvio::write_bounds(create(out, "bounds.csv")?, &s.d)?;
            writeln!(
                stdout,
                "decomposed {} fibers, {} aligned curves",
                s.d.ogrid().len(),
                s.d.aligned_labels().count()
            )?;
        }
        Command::Apply { section, mode } => {
            let f = config.section(section)?;
            let (name, tf) = match mode {
                ApplyMode::Quadrature => (
                    "apply_quadrature.csv",
                    apply_quadrature(&config.build_kernel()?, &f)?,
                ),
                ApplyMode::Spectral => (
                    "apply_spectral.csv",
                    apply_spectral(&session(config)?.d, &f)?,
                ),
            };
            csvio::write_section(create(out, name)?, &tf)?;
        }
        Command::Project { threshold, section } => {
            let lambda = config.threshold(threshold)?;
            let f = config.section(section)?;
            let s = session(config)?;
            let e = ThresholdField::with_tie_tol(lambda, tie_tol);
            csvio::write_section(create(out, "project.csv")?, &projector_apply(&s.d, &e, &f)?)?;
        }
        Command::Funcalc { function, section } => {
            let g = parse(function)?;
            let f = config.section(section)?;
            let s = session(config)?;
            csvio::write_section(
                create(out, "funcalc.csv")?,
                &functional_calculus(&s.d, &g, &f, eps)?,
            )?;
        }
        Command::Rs {
            function,
            mesh,
            section,
        } => {
            let g = parse(function)?;
            let f = config.section(section)?;
            let s = session(config)?;
            let rs = riemann_stieltjes_apply(&s.d, &g, &f, *mesh, eps, tie_tol)?;
            let exact = functional_calculus(&s.d, &g, &f, eps)?;
            let err = l22_distance(&rs, &exact)?;
            csvio::write_section(create(out, "rs.csv")?, &rs)?;
            csvio::write_table(
                create(out, "rs_report.csv")?,
                &["mesh", "error_vs_funcalc", "section_norm"],
                &[vec![fmt_real(*mesh), fmt_real(err), fmt_real(l22_norm(&f))]],
            )?;
            writeln!(stdout, "rs error vs funcalc: {}", fmt_real(err))?;
        }
        Command::Spectrum { partition } => {
            let s = session(config)?;
            csvio::write_spectra(create(out, "spectrum.csv")?, &s.d)?;
            if let Some(name) = partition {
                let p = config.partition(name)?;
                let field = mix_field(&s.d, &p, true)?;
                let m = spm_membership(&s.d, &field, config.tolerances.member_tol)?;
                csvio::write_field(create(out, "mix.csv")?, &field)?;
                csvio::write_membership(create(out, "membership.csv")?, &m)?;
                writeln!(
                    stdout,
                    "membership {}: {} violation(s)",
                    if m.member { "PASS" } else { "FAIL" },
                    m.violations.len()
                )?;
            }
        }
        Command::Mix { partition } => {
            let s = session(config)?;
            let field = mix_field(&s.d, &config.partition(partition)?, true)?;
            csvio::write_field(create(out, "mix.csv")?, &field)?;
        }
        Command::Reconstruct { rank } => {
            let s = session(config)?;
            let rec = mercer_reconstruct(&s.d, *rank)?;
            csvio::write_kernel(create(out, "reconstruct.csv")?, &rec)?;
            let err = sup_difference(&s.kernel, &Kernel::from_sampled(rec)?)?;
            csvio::write_table(
                create(out, "reconstruct_report.csv")?,
                &["rank", "sup_error"],
                &[vec![rank.to_string(), fmt_real(err)]],
            )?;
            writeln!(stdout, "rank {} sup error: {}", rank, fmt_real(err))?;
        }
        Command::Verify => {
            let s = session(config)?;
            let sections = config
                .section_names()
                .map(|n| Ok((n.to_string(), config.section(n)?)))
                .collect::<Result<Vec<_>>>()?;
            let partitions = config
                .partition_names()
                .map(|n| Ok((n.to_string(), config.partition(n)?)))
                .collect::<Result<Vec<_>>>()?;
            let opts = SuiteOptions {
                tie_tol,
                member_tol: config.tolerances.member_tol,
                epsilon: eps,
                ..SuiteOptions::default()
            };
            let report = run_suite(&s.kernel, &s.d, &sections, &partitions, &opts)?;
            csvio::write_table(
                create(out, "verify.csv")?,
                &["check", "value", "relation", "limit", "status"],
                &report.csv_rows(),
            )?;
            write!(stdout, "{}", report.table())?;
            let failed = report.failures().count();
            writeln!(stdout, "{} checks, {} failed", report.checks.len(), failed)?;
            if failed > 0 {
                return Ok(EXIT_VERIFY_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}
