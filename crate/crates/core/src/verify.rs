//! Invariant suite behind the `verify` command.
//!
//! Each check reduces to a single residual compared against a fixed limit.
//! Random sections, thresholds and partitions come from a seeded ChaCha
//! stream, so a given kernel always produces the same report.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::{
    apply_quadrature, apply_spectral, curve_section, eigenspace, functional_calculus,
    projector_apply, riemann_stieltjes_apply, spectral_interval, ThresholdField,
};
use crate::csvio::fmt_real;
use crate::error::Result;
use crate::expr::{parse, Bindings, Expression};
use crate::fiber::{assemble_fiber_matrix, FiberDecomposition};
use crate::grid::{
    dot_weighted, fiber_inner_product, l22_distance, l22_norm, OmegaGrid, SQuadrature, ScalarField,
    Section,
};
use crate::kernel::{mercer_reconstruct, psd_check, Kernel, KernelSpec, SeparableTerm};
use crate::spectrum::{mix_field, spm_membership, Partition, PartitionSet};

use std::sync::Arc;

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub relation: Relation,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            relation: Relation::AtMost,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            relation: Relation::AtLeast,
        }
    }

    pub fn passed(&self) -> bool {
        match self.relation {
            Relation::AtMost => self.value <= self.limit,
            Relation::AtLeast => self.value >= self.limit,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.checks.extend(checks);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// Fixed-width text table, one line per check.
    pub fn table(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>24}  {:>4}  {:>24}  status",
            "check", "value", "rel", "limit"
        );
        for c in &self.checks {
            let rel = match c.relation {
                Relation::AtMost => "<=",
                Relation::AtLeast => ">=",
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:>24}  {:>4}  {:>24}  {}",
                c.name,
                fmt_real(c.value),
                rel,
                fmt_real(c.limit),
                if c.passed() { "PASS" } else { "FAIL" }
            );
        }
        out
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.checks
            .iter()
            .map(|c| {
                vec![
                    c.name.clone(),
                    fmt_real(c.value),
                    match c.relation {
                        Relation::AtMost => "<=".into(),
                        Relation::AtLeast => ">=".into(),
                    },
                    fmt_real(c.limit),
                    if c.passed() {
                        "PASS".into()
                    } else {
                        "FAIL".into()
                    },
                ]
            })
            .collect()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth random section: Σ_a (p_a + q_a ω) sin(aπt + φ_a) + r t².
pub fn random_section<R: Rng>(
    rng: &mut R,
    ogrid: &Arc<OmegaGrid>,
    squad: &Arc<SQuadrature>,
) -> Section {
    let terms: Vec<(f64, f64, f64, f64)> = (1..=5)
        .map(|a| {
            (
                a as f64,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let r = rng.gen_range(-1.0..1.0);
    Section::from_fn(ogrid.clone(), squad.clone(), move |w, t| {
        terms
            .iter()
            .map(|&(a, p, q, phi)| (p + q * w) * (a * PI * t + phi).sin())
            .sum::<f64>()
            + r * t * t
    })
}

/// Piecewise trigonometric field c + a·cos(kπω + φ), with independent
/// parameters on each side of a random breakpoint, centered in [lo, hi].
pub fn random_threshold<R: Rng>(
    rng: &mut R,
    grid: &Arc<OmegaGrid>,
    lo: f64,
    hi: f64,
) -> ScalarField {
    let brk = rng.gen_range(0.2..0.8);
    let mut piece = || {
        (
            rng.gen_range(lo..hi),
            rng.gen_range(0.0..0.3),
            rng.gen_range(1..=4) as f64,
            rng.gen_range(0.0..2.0 * PI),
        )
    };
    let left = piece();
    let right = piece();
    ScalarField::from_fn(grid.clone(), move |w| {
        let (c, a, k, phi) = if w < brk { left } else { right };
        c + a * (k * PI * w + phi).cos()
    })
}

/// Random non-negative separable kernel with `rank` terms. Curves are
/// squares of shifted cosines; bases mix two sine modes, so terms are
/// generally neither orthogonal nor normalized.
pub fn random_separable_kernel<R: Rng>(rng: &mut R, rank: usize) -> KernelSpec {
    let terms = (0..rank)
        .map(|n| {
            let a: f64 = rng.gen_range(0.1..1.0);
            let b: f64 = rng.gen_range(0.0..0.5);
            let k: u32 = rng.gen_range(1..=3);
            let mix: f64 = rng.gen_range(-0.4..0.4);
            let m1 = n + 1;
            let m2 = rng.gen_range(1..=6);
            let curve = format!("({:?} + {:?}*cos({}*pi*omega))^2", a, b, k);
            let basis = format!("sqrt(2)*sin({}*pi*t) + {:?}*cos({}*pi*t)", m1, mix, m2);
            SeparableTerm::new(parse(&curve).unwrap(), parse(&basis).unwrap()).unwrap()
        })
        .collect();
    KernelSpec::Separable(terms)
}

/// Worst quadrature orthonormality defect and worst relative eigen-residual
/// ‖T_ω x_n − λ_n x_n‖ / max(1, |λ_max(ω)|).
pub fn eigen_defects(kernel: &Kernel, d: &FiberDecomposition) -> (f64, f64) {
    let w = d.squad().weights();
    let n = w.len();
    let mut ortho = 0.0f64;
    let mut resid = 0.0f64;
    for (i, fiber) in d.fibers().iter().enumerate() {
        let xs = fiber.eigenfunctions();
        for a in 0..xs.len() {
            for b in 0..xs.len() {
                let target = if a == b { 1.0 } else { 0.0 };
                ortho = ortho.max((dot_weighted(w, &xs[a], &xs[b]) - target).abs());
            }
        }
        let k = kernel.fiber_slice(i);
        let scale = fiber
            .eigenvalues()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        for (lambda, x) in fiber.eigenvalues().iter().zip(xs) {
            let wx: Vec<f64> = x.iter().zip(w).map(|(a, b)| a * b).collect();
            let r: Vec<f64> = (0..n)
                .map(|j| {
                    k[j * n..(j + 1) * n]
                        .iter()
                        .zip(&wx)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        - lambda * x[j]
                })
                .collect();
            resid = resid.max(dot_weighted(w, &r, &r).sqrt() / scale);
        }
    }
    (ortho, resid)
}

/// Worst residuals of the projector axioms for one (f, g, λ ≤ μ) sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProjectorResiduals {
    pub idempotence: f64,
    pub self_adjoint: f64,
    pub contraction: f64,
    pub norm_attained: f64,
    pub monotonicity: f64,
    pub commutation: f64,
    pub order_below: f64,
    pub order_above: f64,
    pub zero_below_m: f64,
    pub identity_above_m: f64,
    pub right_sup: f64,
}

impl ProjectorResiduals {
    pub fn merge(&mut self, o: &ProjectorResiduals) {
        self.idempotence = self.idempotence.max(o.idempotence);
        self.self_adjoint = self.self_adjoint.max(o.self_adjoint);
        self.contraction = self.contraction.max(o.contraction);
        self.norm_attained = self.norm_attained.max(o.norm_attained);
        self.monotonicity = self.monotonicity.max(o.monotonicity);
        self.commutation = self.commutation.max(o.commutation);
        self.order_below = self.order_below.max(o.order_below);
        self.order_above = self.order_above.max(o.order_above);
        self.zero_below_m = self.zero_below_m.max(o.zero_below_m);
        self.identity_above_m = self.identity_above_m.max(o.identity_above_m);
        self.right_sup = self.right_sup.max(o.right_sup);
    }

    pub fn named(&self) -> [(&'static str, f64); 11] {
        [
            ("idempotence", self.idempotence),
            ("self_adjointness", self.self_adjoint),
            ("contraction", self.contraction),
            ("norm_attained_on_eigenfunction", self.norm_attained),
            ("monotonicity", self.monotonicity),
            ("commutation_with_T", self.commutation),
            ("order_E_T_le_lambda_E", self.order_below),
            ("order_complement_ge_lambda", self.order_above),
            ("zero_below_m", self.zero_below_m),
            ("identity_above_M", self.identity_above_m),
            ("right_sup", self.right_sup),
        ]
    }

    pub fn worst(&self) -> f64 {
        self.named().iter().fold(0.0, |m, (_, v)| m.max(*v))
    }
}

/// Evaluates every projector axiom for thresholds λ ≤ μ (pointwise).
#[allow(clippy::too_many_arguments)]
pub fn projector_residuals(
    kernel: &Kernel,
    d: &FiberDecomposition,
    f: &Section,
    g: &Section,
    lambda: &ScalarField,
    mu: &ScalarField,
    tie_tol: f64,
    epsilon: f64,
) -> Result<ProjectorResiduals> {
    let e_lam = ThresholdField::with_tie_tol(lambda.clone(), tie_tol);
    let e_mu = ThresholdField::with_tie_tol(mu.clone(), tie_tol);
    let ef = projector_apply(d, &e_lam, f)?;
    let eg = projector_apply(d, &e_lam, g)?;
    let mut r = ProjectorResiduals {
        idempotence: l22_distance(&projector_apply(d, &e_lam, &ef)?, &ef)?,
        ..Default::default()
    };

    let lhs = fiber_inner_product(&ef, g)?;
    let rhs = fiber_inner_product(f, &eg)?;
    r.self_adjoint = lhs
        .values()
        .iter()
        .zip(rhs.values())
        .fold(0.0, |m, (a, b)| m.max((a - b).abs()));

    r.contraction = (l22_norm(&ef) - l22_norm(f)).max(0.0);

    // per node, the first retained eigenfunction admitted by λ (zero if none)
    let x = Section::from_rows(d.ogrid().clone(), d.squad().clone(), |i, out| {
        let fiber = d.fiber(i);
        if let Some(k) = fiber
            .eigenvalues()
            .iter()
            .position(|&l| l <= lambda.get(i) + tie_tol)
        {
            out.copy_from_slice(&fiber.eigenfunctions()[k]);
        }
    });
    r.norm_attained = (l22_norm(&projector_apply(d, &e_lam, &x)?) - l22_norm(&x)).abs();

    r.monotonicity = l22_distance(&projector_apply(d, &e_mu, &ef)?, &ef)?;

    let tf = apply_quadrature(kernel, f)?;
    r.commutation = l22_distance(
        &projector_apply(d, &e_lam, &tf)?,
        &apply_quadrature(kernel, &ef)?,
    )?;

    let etf = projector_apply(d, &e_lam, &tf)?;
    let a = fiber_inner_product(&etf, f)?;
    let b = fiber_inner_product(&ef, f)?;
    r.order_below = (0..lambda.values().len())
        .map(|i| a.get(i) - lambda.get(i) * b.get(i))
        .fold(0.0, f64::max);

    let comp = f.sub(&ef)?;
    let t_comp = apply_quadrature(kernel, &comp)?;
    let comp_t_comp = t_comp.sub(&projector_apply(d, &e_lam, &t_comp)?)?;
    let a = fiber_inner_product(&comp_t_comp, f)?;
    let b = fiber_inner_product(&comp, f)?;
    r.order_above = (0..lambda.values().len())
        .map(|i| lambda.get(i) * b.get(i) - a.get(i))
        .fold(0.0, f64::max);

    let low = ThresholdField::with_tie_tol(d.lower_bound().map(|m| m - 1.0), tie_tol);
    r.zero_below_m = l22_norm(&projector_apply(d, &low, f)?);
    let high = ThresholdField::with_tie_tol(d.upper_bound().map(|m| m + epsilon), tie_tol);
    r.identity_above_m = l22_distance(&projector_apply(d, &high, f)?, f)?;

    // ⟨E_μ f, f⟩ = sup_k ⟨E_{μ − 1/k} f, f⟩ at nodes where μ is off the spectrum
    let full = fiber_inner_product(&projector_apply(d, &e_mu, f)?, f)?;
    let mut sup = vec![f64::NEG_INFINITY; mu.values().len()];
    for j in 1..=9 {
        let shifted = ThresholdField::with_tie_tol(mu.map(|v| v - 10f64.powi(-j)), tie_tol);
        let ip = fiber_inner_product(&projector_apply(d, &shifted, f)?, f)?;
        for (s, v) in sup.iter_mut().zip(ip.values()) {
            *s = s.max(*v);
        }
    }
    for (i, s) in sup.iter().enumerate() {
        let m = mu.get(i);
        let off_spectrum = d
            .fiber(i)
            .eigenvalues()
            .iter()
            .chain(std::iter::once(&0.0))
            .all(|l| (l - m).abs() > 1e-8);
        if off_spectrum {
            r.right_sup = r.right_sup.max((full.get(i) - s).abs());
        }
    }
    Ok(r)
}

/// Threshold pairs λ ≤ μ drawn around the spectral interval.
pub fn random_threshold_pair<R: Rng>(
    rng: &mut R,
    d: &FiberDecomposition,
) -> (ScalarField, ScalarField) {
    let (lo, hi) = spectral_interval(d);
    let lambda = random_threshold(rng, d.ogrid(), lo - 0.2, hi + 0.2);
    let bump = random_threshold(rng, d.ogrid(), 0.0, 0.3).map(f64::abs);
    let mu = ScalarField::new(
        d.ogrid().clone(),
        lambda
            .values()
            .iter()
            .zip(bump.values())
            .map(|(a, b)| a + b)
            .collect(),
    )
    .expect("finite");
    (lambda, mu)
}

/// Projector axioms over `trials` random threshold pairs and sections.
pub fn projector_suite<R: Rng>(
    rng: &mut R,
    kernel: &Kernel,
    d: &FiberDecomposition,
    trials: usize,
    tie_tol: f64,
    epsilon: f64,
) -> Result<ProjectorResiduals> {
    let mut worst = ProjectorResiduals::default();
    for _ in 0..trials {
        let f = random_section(rng, d.ogrid(), d.squad());
        let g = random_section(rng, d.ogrid(), d.squad());
        let (lambda, mu) = random_threshold_pair(rng, d);
        worst.merge(&projector_residuals(
            kernel, d, &f, &g, &lambda, &mu, tie_tol, epsilon,
        )?);
    }
    Ok(worst)
}

/// Rayleigh quotient excursion outside [m(ω), M(ω)] over random sections.
pub fn rayleigh_excursion<R: Rng>(
    rng: &mut R,
    kernel: &Kernel,
    d: &FiberDecomposition,
    samples: usize,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = random_section(rng, d.ogrid(), d.squad());
        let tx = apply_quadrature(kernel, &x)?;
        let num = fiber_inner_product(&tx, &x)?;
        let den = fiber_inner_product(&x, &x)?;
        for i in 0..den.values().len() {
            if den.get(i) <= 0.0 {
                continue;
            }
            let q = num.get(i) / den.get(i);
            worst = worst
                .max(d.lower_bound().get(i) - q)
                .max(q - d.upper_bound().get(i));
        }
    }
    Ok(worst)
}

/// ‖RS(δ)f − Tf‖_{2,2} for g(λ) = λ.
pub fn rs_error(
    kernel: &Kernel,
    d: &FiberDecomposition,
    f: &Section,
    mesh: f64,
    epsilon: f64,
    tie_tol: f64,
) -> Result<f64> {
    let identity = Expression::Var(crate::expr::Var::Lambda);
    let rs = riemann_stieltjes_apply(d, &identity, f, mesh, epsilon, tie_tol)?;
    l22_distance(&rs, &apply_quadrature(kernel, f)?)
}

/// sup |g| on [lo, hi] by dense sampling.
fn sup_abs_on(g: &Expression, lo: f64, hi: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..=1000 {
        let x = lo + (hi - lo) * k as f64 / 1000.0;
        worst = worst.max(g.evaluate(&Bindings::new().lambda(x))?.abs());
    }
    Ok(worst)
}

/// Suite parameters; tolerances normally come from the config.
#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub tie_tol: f64,
    pub member_tol: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub projector_trials: usize,
    pub rayleigh_samples: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            tie_tol: crate::calculus::DEFAULT_TIE_TOL,
            member_tol: crate::spectrum::DEFAULT_MEMBER_TOL,
            epsilon: crate::calculus::DEFAULT_EPSILON,
            seed: DEFAULT_SEED,
            projector_trials: 20,
            rayleigh_samples: 50,
        }
    }
}

/// Full invariant suite on one kernel. `sections` are named fixtures from
/// the config; random sections are always added.
pub fn run_suite(
    kernel: &Kernel,
    d: &FiberDecomposition,
    sections: &[(String, Section)],
    partitions: &[(String, Partition)],
    opts: &SuiteOptions,
) -> Result<Report> {
    let mut rng = rng(opts.seed);
    let mut report = Report::default();
    let og = d.ogrid().clone();
    let sq = d.squad().clone();

    // decomposition
    let mut asym = 0.0f64;
    for i in 0..og.len() {
        asym = asym.max(assemble_fiber_matrix(kernel, i)?.max_asymmetry());
    }
    report.push(Check::at_most("fiber_matrix_symmetry", asym, 1e-14));
    let psd = psd_check(d, 1e-10);
    report.push(Check::at_least("psd_min_eigenvalue", psd.worst, -1e-10));
    let (ortho, resid) = eigen_defects(kernel, d);
    report.push(Check::at_most("eigenfunction_orthonormality", ortho, 1e-10));
    report.push(Check::at_most("eigen_residual", resid, 1e-10));
    let mut trace = 0.0f64;
    let mut order = 0.0f64;
    for (i, fiber) in d.fibers().iter().enumerate() {
        let sum: f64 = fiber.eigenvalues().iter().sum::<f64>() + fiber.dropped_trace();
        trace = trace.max((sum - fiber.matrix_trace()).abs());
        for w in fiber.eigenvalues().windows(2) {
            order = order.max(w[1] - w[0]);
        }
        for &l in fiber.eigenvalues() {
            order = order
                .max(d.lower_bound().get(i) - l)
                .max(l - d.upper_bound().get(i));
        }
    }
    report.push(Check::at_most("trace_identity", trace, 1e-9));
    report.push(Check::at_most(
        "eigenvalues_sorted_within_bounds",
        order,
        0.0,
    ));
    let excursion = rayleigh_excursion(&mut rng, kernel, d, opts.rayleigh_samples)?;
    report.push(Check::at_most("rayleigh_bounds", excursion, 1e-10));

    // Mercer
    let full = Kernel::from_sampled(mercer_reconstruct(d, d.max_rank())?)?;
    let kmax = kernel
        .to_sampled()
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let rec = crate::kernel::sup_difference(kernel, &full)?;
    report.push(Check::at_most(
        "mercer_full_rank",
        rec / kmax.max(1.0),
        1e-8,
    ));

    // operator application and calculus
    let mut fixtures: Vec<Section> = sections.iter().map(|(_, s)| s.clone()).collect();
    for _ in 0..3 {
        fixtures.push(random_section(&mut rng, &og, &sq));
    }
    let square = parse("lambda^2").expect("static expression");
    let (lo, hi) = spectral_interval(d);
    let sup_sq = sup_abs_on(&square, lo, hi + opts.epsilon)?;
    let mut two_path = 0.0f64;
    let mut homomorphism = 0.0f64;
    let mut calc_bound = 0.0f64;
    for f in &fixtures {
        let tq = apply_quadrature(kernel, f)?;
        two_path = two_path.max(l22_distance(&tq, &apply_spectral(d, f)?)?);
        let sq_t = functional_calculus(d, &square, f, opts.epsilon)?;
        homomorphism = homomorphism.max(l22_distance(&sq_t, &apply_quadrature(kernel, &tq)?)?);
        calc_bound = calc_bound.max(l22_norm(&sq_t) - sup_sq * l22_norm(f));
    }
    report.push(Check::at_most("two_path_equivalence", two_path, 1e-9));
    report.push(Check::at_most("funcalc_homomorphism", homomorphism, 1e-9));
    report.push(Check::at_most("funcalc_norm_bound", calc_bound, 1e-9));

    // projectors
    let proj = projector_suite(
        &mut rng,
        kernel,
        d,
        opts.projector_trials,
        opts.tie_tol,
        opts.epsilon,
    )?;
    for (name, value) in proj.named() {
        report.push(Check::at_most(format!("projector_{}", name), value, 1e-9));
    }

    // Riemann–Stieltjes
    let f = &fixtures[0];
    let norm_f = l22_norm(f);
    let meshes = [0.04, 0.02, 0.01];
    let errors = meshes
        .iter()
        .map(|&m| rs_error(kernel, d, f, m, opts.epsilon, opts.tie_tol))
        .collect::<Result<Vec<_>>>()?;
    let excess = meshes
        .iter()
        .zip(&errors)
        .map(|(m, e)| e - m * norm_f)
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(Check::at_most("rs_error_within_mesh_bound", excess, 1e-10));
    if errors[0] > 1e-12 {
        let ratio = errors
            .windows(2)
            .map(|w| {
                if w[1] > 0.0 {
                    w[0] / w[1]
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min);
        report.push(Check::at_least("rs_halving_ratio", ratio, 1.6));
    }
    let rs_sq = riemann_stieltjes_apply(d, &square, f, 1e-3, opts.epsilon, opts.tie_tol)?;
    let lip = 2.0 * lo.abs().max((hi + opts.epsilon).abs());
    let fc_sq = functional_calculus(d, &square, f, opts.epsilon)?;
    report.push(Check::at_most(
        "rs_vs_funcalc_lipschitz",
        l22_distance(&rs_sq, &fc_sq)? - lip * 1e-3 * norm_f,
        1e-9,
    ));

    // eigenspaces
    let alpha = ScalarField::from_fn(og.clone(), |w| w);
    let mut closure = 0.0f64;
    let mut multiplicity_gap = 0.0f64;
    for id in 1..=d.aligned_labels().count() {
        let lam = ScalarField::from_fn(og.clone(), |_| 0.0);
        let lam = ScalarField::new(
            og.clone(),
            (0..og.len())
                .map(|i| d.curve_value(id, i, true).unwrap_or(0.0))
                .collect(),
        )
        .unwrap_or(lam);
        let x = curve_section(d, id, true).scale_by_field(&alpha)?;
        let tx = apply_quadrature(kernel, &x)?;
        closure = closure.max(l22_distance(&x.scale_by_field(&lam)?, &tx)?);
        let es = eigenspace(d, &lam, crate::calculus::DEFAULT_EIGENSPACE_TOL)?;
        for i in 0..og.len() {
            if d.curve_value(id, i, true).is_some() && es.multiplicity.get(i) < 1.0 {
                multiplicity_gap = multiplicity_gap.max(1.0);
            }
        }
    }
    report.push(Check::at_most("eigenspace_module_closure", closure, 1e-8));
    report.push(Check::at_most(
        "eigenspace_contains_curve",
        multiplicity_gap,
        0.0,
    ));

    // spectrum
    let tol = opts.member_tol;
    let mut outside = 0.0f64;
    let mut bound = 0.0f64;
    let mut monotone = 0.0f64;
    let mut fields: Vec<ScalarField> = Vec::new();
    for id in 1..=d.aligned_labels().count() {
        fields.push(ScalarField::new(
            og.clone(),
            (0..og.len())
                .map(|i| d.curve_value(id, i, true).unwrap_or(0.0))
                .collect(),
        )?);
    }
    for (_, p) in partitions {
        fields.push(mix_field(d, p, true)?);
    }
    for _ in 0..5 {
        let p = random_partition(&mut rng, &og, d.aligned_labels().count());
        fields.push(mix_field(d, &p, true)?);
    }
    for field in &fields {
        let m = spm_membership(d, field, tol)?;
        outside = outside.max(m.violations.iter().map(|r| r.distance).fold(0.0, f64::max));
        if m.member {
            if !spm_membership(d, field, 10.0 * tol)?.member {
                monotone = 1.0;
            }
            for i in 0..og.len() {
                bound = bound
                    .max(d.lower_bound().get(i) - tol - field.get(i))
                    .max(field.get(i) - d.upper_bound().get(i) - tol);
            }
        }
    }
    report.push(Check::at_most("spm_mixings_are_members", outside, tol));
    report.push(Check::at_most(
        "spm_membership_monotone_in_tol",
        monotone,
        0.0,
    ));
    report.push(Check::at_most("spm_members_within_bounds", bound, 0.0));

    Ok(report)
}

/// Random partition of the grid into contiguous runs with random labels.
pub fn random_partition<R: Rng>(rng: &mut R, grid: &Arc<OmegaGrid>, curves: usize) -> Partition {
    let n = grid.len();
    let mut sets: Vec<PartitionSet> = Vec::new();
    let mut start = 0;
    while start < n {
        let len = rng.gen_range(1..=n.max(4) / 4 + 1).min(n - start);
        sets.push(PartitionSet {
            label: rng.gen_range(0..=curves),
            nodes: (start..start + len).collect(),
        });
        start += len;
    }
    Partition::new(grid.clone(), sets).expect("contiguous runs cover the grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_relations() {
        assert!(Check::at_most("a", 1.0, 1.0).passed());
        assert!(!Check::at_most("a", 1.1, 1.0).passed());
        assert!(Check::at_least("b", 2.0, 1.6).passed());
        assert!(!Check::at_least("b", f64::NAN, 1.6).passed());
        assert!(!Check::at_most("c", f64::NAN, 1.0).passed());
    }

    #[test]
    fn random_partitions_cover() {
        let g = crate::grid::build_omega_grid(17).unwrap();
        let mut r = rng(1);
        for _ in 0..10 {
            let p = random_partition(&mut r, &g, 3);
            let covered: usize = p.sets().iter().map(|s| s.nodes.len()).sum();
            assert_eq!(covered, 17);
            assert!(p.sets().iter().all(|s| s.label <= 3));
        }
    }
}
