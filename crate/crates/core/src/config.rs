//! JSON run configuration.
//!
//! ```json
//! {
//!   "omega_grid": { "n": 64 },
//!   "s_quadrature": { "rule": "gauss_legendre", "n": 64 },
//!   "kernel": { "type": "separable",
//!               "terms": [ { "curve": "cos(pi*omega/2)^2", "basis": "sqrt(2)*sin(pi*t)" } ] },
//!   "sections": { "f": "omega*sin(pi*t)+sin(2*pi*t)" },
//!   "thresholds": { "level": "0.4" },
//!   "partitions": { "thirds": [ { "label": 1, "omega_range": [0, "1/3"] } ] },
//!   "tolerances": { "rank_tol": 1e-10, "tie_tol": 1e-12, "eig_tol": 1e-12, "member_tol": 1e-8 },
//!   "epsilon": 1e-6
//! }
//! ```
//!
//! Kernels may also be given as `{ "type": "expression", "expr": "..." }` in
//! omega, t, s; sections as `{ "csv": "path" }` relative to the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::calculus::{DEFAULT_EPSILON, DEFAULT_TIE_TOL};
use crate::error::{Error, Result};
use crate::expr::{parse, Bindings, Expression};
use crate::fiber::{DecomposeOptions, DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS, DEFAULT_RANK_TOL};
use crate::grid::{
    build_omega_grid, build_s_quadrature, sample_field, sample_section, OmegaGrid, QuadRule,
    SQuadrature, ScalarField, Section,
};
use crate::kernel::{Kernel, KernelSpec, SampledKernel, SeparableTerm};
use crate::spectrum::{LabeledRange, Partition, DEFAULT_MEMBER_TOL};

pub const DEFAULT_OMEGA_N: usize = 64;
pub const DEFAULT_QUAD_N: usize = 64;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaGridConf {
    pub n: usize,
}

impl Default for OmegaGridConf {
    fn default() -> Self {
        OmegaGridConf { n: DEFAULT_OMEGA_N }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SQuadratureConf {
    #[serde(default)]
    pub rule: QuadRule,
    #[serde(default = "default_quad_n")]
    pub n: usize,
}

fn default_quad_n() -> usize {
    DEFAULT_QUAD_N
}

impl Default for SQuadratureConf {
    fn default() -> Self {
        SQuadratureConf {
            rule: QuadRule::GaussLegendre,
            n: DEFAULT_QUAD_N,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConf {
    pub curve: String,
    pub basis: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConf {
    Separable { terms: Vec<TermConf> },
    Expression { expr: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SectionConf {
    Expr(String),
    Csv { csv: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    Expr(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConf {
    pub label: usize,
    pub omega_range: [Bound; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rank_tol: f64,
    pub tie_tol: f64,
    pub eig_tol: f64,
    pub member_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_tol: DEFAULT_RANK_TOL,
            tie_tol: DEFAULT_TIE_TOL,
            eig_tol: DEFAULT_EIG_TOL,
            member_tol: DEFAULT_MEMBER_TOL,
        }
    }
}

/// The config document as written on disk.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub omega_grid: OmegaGridConf,
    #[serde(default)]
    pub s_quadrature: SQuadratureConf,
    pub kernel: KernelConf,
    #[serde(default)]
    pub sections: BTreeMap<String, SectionConf>,
    #[serde(default)]
    pub thresholds: BTreeMap<String, String>,
    #[serde(default)]
    pub partitions: BTreeMap<String, Vec<RangeConf>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub omega_n: Option<usize>,
    pub quad_n: Option<usize>,
    pub rank_tol: Option<f64>,
    pub tie_tol: Option<f64>,
    pub eig_tol: Option<f64>,
    pub member_tol: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone)]
enum SectionSource {
    Expr(Expression),
    Csv(PathBuf),
}

/// Validated configuration with all expressions parsed.
#[derive(Debug, Clone)]
pub struct Config {
    pub ogrid: Arc<OmegaGrid>,
    pub squad: Arc<SQuadrature>,
    pub kernel: KernelSpec,
    pub tolerances: Tolerances,
    pub epsilon: f64,
    sections: BTreeMap<String, SectionSource>,
    thresholds: BTreeMap<String, Expression>,
    partitions: BTreeMap<String, Vec<LabeledRange>>,
}

fn parse_in(context: &str, text: &str) -> Result<Expression> {
    parse(text).map_err(|e| Error::Config(format!("{}: `{}`: {}", context, text, e)))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{} must be positive, got {}",
            name, v
        )))
    }
}

impl Config {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {}", path.display(), e)))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Config::from_json(&text, &base, overrides)
    }

    /// Parses a config document; relative CSV paths resolve against `base`.
    pub fn from_json(text: &str, base: &Path, overrides: &Overrides) -> Result<Config> {
        let file: ConfigFile = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid config json: {}", e)))?;
        Config::from_file(file, base, overrides)
    }

    pub fn from_file(mut file: ConfigFile, base: &Path, o: &Overrides) -> Result<Config> {
        if let Some(n) = o.omega_n {
            file.omega_grid.n = n;
        }
        if let Some(n) = o.quad_n {
            file.s_quadrature.n = n;
        }
        let t = &mut file.tolerances;
        t.rank_tol = o.rank_tol.unwrap_or(t.rank_tol);
        t.tie_tol = o.tie_tol.unwrap_or(t.tie_tol);
        t.eig_tol = o.eig_tol.unwrap_or(t.eig_tol);
        t.member_tol = o.member_tol.unwrap_or(t.member_tol);
        file.epsilon = o.epsilon.unwrap_or(file.epsilon);

        positive("rank_tol", t.rank_tol)?;
        positive("tie_tol", t.tie_tol)?;
        positive("eig_tol", t.eig_tol)?;
        positive("member_tol", t.member_tol)?;
        positive("epsilon", file.epsilon)?;

        let ogrid = build_omega_grid(file.omega_grid.n)?;
        let squad = build_s_quadrature(file.s_quadrature.rule, file.s_quadrature.n)?;

        let kernel = match &file.kernel {
            KernelConf::Separable { terms } => KernelSpec::Separable(
                terms
                    .iter()
                    .enumerate()
                    .map(|(n, term)| {
                        let curve = parse_in(&format!("kernel term {} curve", n + 1), &term.curve)?;
                        let basis = parse_in(&format!("kernel term {} basis", n + 1), &term.basis)?;
                        SeparableTerm::new(curve, basis)
                    })
                    .collect::<Result<_>>()?,
            ),
            KernelConf::Expression { expr } => {
                let e = parse_in("kernel expression", expr)?;
                KernelSpec::Sampled(SampledKernel::from_expr(&e, ogrid.clone(), squad.clone())?)
            }
        };

        let mut sections = BTreeMap::new();
        for (name, s) in &file.sections {
            let src = match s {
                SectionConf::Expr(text) => {
                    SectionSource::Expr(parse_in(&format!("section `{}`", name), text)?)
                }
                SectionConf::Csv { csv } => SectionSource::Csv(base.join(csv)),
            };
            sections.insert(name.clone(), src);
        }

        let thresholds = file
            .thresholds
            .iter()
            .map(|(name, text)| {
                Ok((
                    name.clone(),
                    parse_in(&format!("threshold `{}`", name), text)?,
                ))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;

        let mut partitions = BTreeMap::new();
        for (name, ranges) in &file.partitions {
            let ranges = ranges
                .iter()
                .map(|r| {
                    let bound = |b: &Bound| -> Result<f64> {
                        match b {
                            Bound::Number(x) => Ok(*x),
                            Bound::Expr(text) => {
                                let e = parse_in(&format!("partition `{}` bound", name), text)?;
                                e.evaluate(&Bindings::new()).map_err(|err| {
                                    Error::Config(format!(
                                        "partition `{}` bound `{}`: {}",
                                        name, text, err
                                    ))
                                })
                            }
                        }
                    };
                    Ok(LabeledRange {
                        label: r.label,
                        start: bound(&r.omega_range[0])?,
                        end: bound(&r.omega_range[1])?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            partitions.insert(name.clone(), ranges);
        }

        Ok(Config {
            ogrid,
            squad,
            kernel,
            tolerances: file.tolerances,
            epsilon: file.epsilon,
            sections,
            thresholds,
            partitions,
        })
    }

    pub fn build_kernel(&self) -> Result<Kernel> {
        Kernel::new(&self.kernel, self.ogrid.clone(), self.squad.clone())
    }

    pub fn decompose_options(&self) -> DecomposeOptions {
        DecomposeOptions {
            rank_tol: self.tolerances.rank_tol,
            eig_tol: self.tolerances.eig_tol,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }

    pub fn section(&self, name: &str) -> Result<Section> {
        match self.sections.get(name) {
            None => Err(Error::Config(format!("unknown section `{}`", name))),
            Some(SectionSource::Expr(e)) => sample_section(e, &self.ogrid, &self.squad),
            Some(SectionSource::Csv(path)) => {
                let file = std::fs::File::open(path)
                    .map_err(|e| Error::Config(format!("cannot open {}: {}", path.display(), e)))?;
                crate::csvio::read_section(file, &self.ogrid, &self.squad)
            }
        }
    }

    pub fn threshold(&self, name: &str) -> Result<ScalarField> {
        let e = self
            .thresholds
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown threshold `{}`", name)))?;
        sample_field(e, &self.ogrid)
    }

    pub fn threshold_names(&self) -> impl Iterator<Item = &str> {
        self.thresholds.keys().map(String::as_str)
    }

    pub fn partition(&self, name: &str) -> Result<Partition> {
        let ranges = self
            .partitions
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown partition `{}`", name)))?;
        Partition::from_ranges(self.ogrid.clone(), ranges)
    }

    pub fn partition_names(&self) -> impl Iterator<Item = &str> {
        self.partitions.keys().map(String::as_str)
    }
}
