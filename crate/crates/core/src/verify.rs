//! Numerical checks of the mean inequalities, dispatched by identifier.
//!
//! Every check evaluates both sides of one or more inequalities ("links")
//! and reports a scale-relative margin: for a Loewner link `L ≤ R` the raw
//! margin is λ_min(R − L), for a scalar or norm link it is R − L, and the
//! reported value divides the raw margin by `1 + ‖L‖ + ‖R‖`. A check holds
//! when its smallest link margin is at least `−tolerance`.

use std::cell::{Cell, OnceCell};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{GkeError, Result};
use crate::generators::{
    generalized_kantorovich, kantorovich_constant, refinement_midpoint, Direction, Generator,
    MonotoneFunction,
};
use crate::hermitian::{
    eigendecompose, spectral_norm, trace_norm, weighted_geometric_pair, CMatrix, CVector,
    HermitianMatrix, PositiveDefiniteMatrix, SpectrumBounds,
};
use crate::maps::{apply_ensemble, random_map_with, MapKind, MapSpec, PositiveLinearMap};
use crate::means::{
    arithmetic_mean, harmonic_mean, scalar_gke, solve_gke, MatrixEnsemble, SolverOptions,
};
use crate::sampling::{random_bounded_ensemble, random_unit_vector};

/// Default relative tolerance for a link.
pub const DEFAULT_CHECK_TOLERANCE: f64 = 1e-8;

/// A link's tolerance is at least `CONDITION_SLACK · ε · κ · max(p, 1)`,
/// where κ is the largest spectral spread among the ensembles solved for
/// the check; rounding alone produces errors of that size.
pub const CONDITION_SLACK: f64 = 64.0;

/// Instances whose working ensembles are spread wider than this are
/// rejected: their margins would be dominated by rounding.
pub const MAX_VERIFIABLE_SPREAD: f64 = 1e12;

/// Exponents used by the norm and normalized power checks.
pub const NORM_P_GRID: [f64; 4] = [1.0, 1.5, 2.0, 3.0];
/// Exponents used by the p-th power refinement checks (p ≥ 2).
pub const SQUARE_P_GRID: [f64; 3] = [2.0, 2.5, 3.0];
/// Exponents used by the deformed-generator check.
pub const DEFORMED_P_GRID: [f64; 3] = [1.0, 2.0, 4.0];

macro_rules! check_ids {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Identifier of a check.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum CheckId { $($variant),* }

        impl CheckId {
            pub const ALL: &'static [CheckId] = &[$(CheckId::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self { $(CheckId::$variant => $name),* }
            }
        }

        impl FromStr for CheckId {
            type Err = GkeError;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($name => Ok(CheckId::$variant),)*
                    other => Err(GkeError::Parse(format!("unknown check id {other:?}"))),
                }
            }
        }
    };
}

check_ids! {
    Sandwich => "eq6_sandwich",
    InverseSum => "lemma_inv_sum",
    ReverseArithmetic => "prop22_reverse_am",
    ReverseHarmonic => "prop22_reverse_hm",
    RefinedArithmetic => "prop23_refined_am",
    RefinedHarmonic => "prop23_refined_hm",
    PowerNorm => "thm24_norm",
    PowerScalar => "thm24_scalar",
    DeformedPower => "yamazaki_ah",
    MapMonotonicity => "thm32_info_mono",
    MapPowerRefined => "thm33_pth_refined",
    MapPowerMean => "prop34_pth_sigma_phi",
    MapPowerReverse => "cor35_pth",
    VectorState => "thm36_vector",
    TwoMatrixVector => "bourin_special",
    MonotoneIncreasing => "thm41_increasing",
    MonotoneDecreasing => "thm41_decreasing",
    ConcavityDefect => "prop42_defect",
    InverseMean => "prop43_inverse",
    InverseMeanReverse => "thm41_decreasing_corollary",
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl CheckId {
    /// Short labels for the outermost left and right sides.
    pub fn labels(self) -> (&'static str, &'static str) {
        use CheckId::*;
        match self {
            Sandwich => ("(Σ wᵢAᵢ⁻¹)⁻¹", "Σ wᵢAᵢ"),
            InverseSum => ("Σ wᵢAᵢ⁻¹", "K(h,2)(Σ wᵢAᵢ)⁻¹"),
            ReverseArithmetic => ("Σ wᵢAᵢ", "K(h,2)σ"),
            ReverseHarmonic => ("σ", "K(h,2)(Σ wᵢAᵢ⁻¹)⁻¹"),
            RefinedArithmetic => ("Σ wᵢAᵢ", "K(h,2)σ"),
            RefinedHarmonic => ("σ", "K(h,2)(Σ wᵢAᵢ⁻¹)⁻¹"),
            PowerNorm => ("‖σ(𝔸ᵖ)‖", "K(m,M,p)K(h,2)ᵖ‖σᵖ‖"),
            PowerScalar => ("σ(𝔸ᵖ)", "K(m,M,p)K(h,2)ᵖI"),
            DeformedPower => ("σ_{g_p}(𝔸ᵖ)", "I"),
            MapMonotonicity => ("Φ(σ)", "K(h,2)Φ(σ)"),
            MapPowerRefined => ("Φ(Σ wᵢr(Aᵢ))ᵖ", "cₚΦ(σ)ᵖ"),
            MapPowerMean => ("Φ(Σ wᵢr(Aᵢ))ᵖ", "cₚσ(Φ(𝔸))ᵖ"),
            MapPowerReverse => ("σ(Φ(𝔸))ᵖ", "cₚΦ(σ)ᵖ"),
            VectorState => ("⟨σx,x⟩", "σ(⟨Aᵢx,x⟩)"),
            TwoMatrixVector => ("⟨(A #ᵥ B)x,x⟩", "⟨Ax,x⟩ #ᵥ ⟨Bx,x⟩"),
            MonotoneIncreasing => ("σ(f(𝔸))", "K(h,2)f(σ)"),
            MonotoneDecreasing => ("f(σ)", "K(h,2)σ(f(𝔸))"),
            ConcavityDefect => ("f(σ)", "K(h',2)σ(f(𝔸)) + defect"),
            InverseMean => ("σ(𝔸⁻¹)", "K(h,2)σ⁻¹"),
            InverseMeanReverse => ("σ⁻¹", "K(h,2)σ(𝔸⁻¹)"),
        }
    }

    /// Whether the check uses the ensemble's spectrum bounds.
    pub fn needs_bounds(self) -> bool {
        !matches!(
            self,
            CheckId::Sandwich
                | CheckId::PowerScalar
                | CheckId::DeformedPower
                | CheckId::VectorState
                | CheckId::TwoMatrixVector
        )
    }

    fn needs_map(self) -> bool {
        matches!(
            self,
            CheckId::MapMonotonicity | CheckId::MapPowerRefined | CheckId::MapPowerMean | CheckId::MapPowerReverse
        )
    }

    fn needs_vector(self) -> bool {
        matches!(self, CheckId::VectorState | CheckId::TwoMatrixVector)
    }

    fn monotone_direction(self) -> Option<Direction> {
        match self {
            CheckId::MonotoneIncreasing | CheckId::ConcavityDefect => Some(Direction::Increasing),
            CheckId::MonotoneDecreasing => Some(Direction::Decreasing),
            _ => None,
        }
    }

    fn p_grid(self) -> &'static [f64] {
        match self {
            CheckId::PowerNorm | CheckId::PowerScalar => &NORM_P_GRID,
            CheckId::DeformedPower => &DEFORMED_P_GRID,
            CheckId::MapPowerRefined | CheckId::MapPowerMean | CheckId::MapPowerReverse => &SQUARE_P_GRID,
            _ => &[],
        }
    }
}

/// Identifies where an instance came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InstanceFingerprint {
    pub seed: Option<u64>,
    pub trial: usize,
    pub dim: usize,
    pub n: usize,
    pub generator: String,
}

impl fmt::Display for InstanceFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seed {
            Some(s) => write!(f, "seed={s} trial={}", self.trial)?,
            None => write!(f, "unseeded")?,
        }
        write!(f, " k={} n={} g={}", self.dim, self.n, self.generator)
    }
}

/// Inputs of one check.
#[derive(Clone, Debug)]
pub struct CheckInstance {
    pub ensemble: MatrixEnsemble,
    pub generator: Generator,
    /// Overrides the check's default exponent grid.
    pub p: Option<f64>,
    pub map: Option<PositiveLinearMap>,
    pub monotone: Option<MonotoneFunction>,
    pub vector: Option<CVector>,
    pub solver: SolverOptions,
    pub fingerprint: InstanceFingerprint,
}

impl CheckInstance {
    pub fn new(ensemble: MatrixEnsemble, generator: Generator) -> Self {
        let fingerprint = InstanceFingerprint {
            seed: None,
            trial: 0,
            dim: ensemble.dim(),
            n: ensemble.len(),
            generator: generator.tag(),
        };
        Self {
            ensemble,
            generator,
            p: None,
            map: None,
            monotone: None,
            vector: None,
            solver: SolverOptions::default(),
            fingerprint,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_map(mut self, map: PositiveLinearMap) -> Self {
        self.map = Some(map);
        self
    }

    pub fn with_monotone(mut self, f: MonotoneFunction) -> Self {
        self.monotone = Some(f);
        self
    }

    pub fn with_vector(mut self, x: CVector) -> Self {
        self.vector = Some(x);
        self
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_origin(mut self, seed: u64, trial: usize) -> Self {
        self.fingerprint.seed = Some(seed);
        self.fingerprint.trial = trial;
        self
    }
}

/// One evaluated inequality inside a check.
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub label: String,
    pub p: Option<f64>,
    /// λ_min(R − L) or R − L.
    pub raw_margin: f64,
    /// 1 + ‖L‖ + ‖R‖.
    pub scale: f64,
    /// raw_margin / scale.
    pub margin: f64,
    /// Relative tolerance applied to this link.
    pub tolerance: f64,
    pub holds: bool,
}

/// Outcome of one check on one instance.
///
/// `holds` is true when every link margin is at least that link's tolerance
/// below zero; `tolerance` is the largest link tolerance.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub check_id: CheckId,
    pub holds: bool,
    /// Smallest relative link margin.
    pub margin: f64,
    pub tolerance: f64,
    pub left_label: String,
    pub right_label: String,
    /// Exponent of the link attaining the margin, if any.
    pub p: Option<f64>,
    pub links: Vec<Link>,
    pub fingerprint: InstanceFingerprint,
    /// Seconds.
    pub elapsed: f64,
}

impl CheckResult {
    pub fn worst_link(&self) -> Option<&Link> {
        self.links.iter().min_by(|a, b| a.margin.total_cmp(&b.margin))
    }
}

struct Evaluation<'a> {
    id: CheckId,
    inst: &'a CheckInstance,
    tol: f64,
    sigma: OnceCell<PositiveDefiniteMatrix>,
    links: Vec<Link>,
    spread: Cell<f64>,
}

impl<'a> Evaluation<'a> {
    fn solve(&self, e: &MatrixEnsemble, g: &Generator, what: &str) -> Result<PositiveDefiniteMatrix> {
        let (lo, hi) = e.spectral_hull();
        let spread = hi / lo;
        if spread > MAX_VERIFIABLE_SPREAD {
            return Err(GkeError::Precondition(format!(
                "{} {what} [{}]: spectral spread {spread:e} exceeds {MAX_VERIFIABLE_SPREAD:e}",
                self.id, self.inst.fingerprint
            )));
        }
        self.spread.set(self.spread.get().max(spread));
        solve_gke(e, g, &self.inst.solver)?
            .require_converged(&format!("{} {what} [{}]", self.id, self.inst.fingerprint))
    }

    fn sigma(&self) -> Result<&PositiveDefiniteMatrix> {
        if let Some(s) = self.sigma.get() {
            return Ok(s);
        }
        let s = self.solve(&self.inst.ensemble, &self.inst.generator, "σ_g(w;𝔸)")?;
        Ok(self.sigma.get_or_init(|| s))
    }

    fn bounds(&self) -> Result<SpectrumBounds> {
        self.inst.ensemble.bounds().copied().ok_or_else(|| {
            GkeError::Config(format!("{} requires ensemble spectrum bounds", self.id))
        })
    }

    fn kantorovich(&self) -> Result<f64> {
        kantorovich_constant(self.bounds()?.ratio())
    }

    fn map(&self) -> Result<&PositiveLinearMap> {
        let map = self
            .inst
            .map
            .as_ref()
            .ok_or_else(|| GkeError::Config(format!("{} requires a positive linear map", self.id)))?;
        if map.in_dim() != self.inst.ensemble.dim() {
            return Err(GkeError::DimensionMismatch {
                expected: self.inst.ensemble.dim(),
                found: map.in_dim(),
            });
        }
        Ok(map)
    }

    fn vector(&self) -> Result<&CVector> {
        let x = self
            .inst
            .vector
            .as_ref()
            .ok_or_else(|| GkeError::Config(format!("{} requires a unit vector", self.id)))?;
        if x.len() != self.inst.ensemble.dim() {
            return Err(GkeError::DimensionMismatch {
                expected: self.inst.ensemble.dim(),
                found: x.len(),
            });
        }
        Ok(x)
    }

    fn monotone(&self) -> Result<&MonotoneFunction> {
        let f = self
            .inst
            .monotone
            .as_ref()
            .ok_or_else(|| GkeError::Config(format!("{} requires a monotone function", self.id)))?;
        if let Some(dir) = self.id.monotone_direction() {
            if f.direction() != dir {
                return Err(GkeError::Config(format!(
                    "{} requires a {dir:?} function, got {f}",
                    self.id
                )));
            }
        }
        Ok(f)
    }

    fn p_values(&self) -> Result<Vec<f64>> {
        let grid = self.id.p_grid();
        match self.inst.p {
            Some(p) if !grid.is_empty() => {
                let least = if grid[0] >= 2.0 { 2.0 } else { 1.0 };
                if !(p >= least) || !p.is_finite() {
                    return Err(GkeError::Config(format!("{} requires p >= {least}, got {p}", self.id)));
                }
                Ok(vec![p])
            }
            _ => Ok(grid.to_vec()),
        }
    }

    fn push(&mut self, label: impl Into<String>, p: Option<f64>, raw: f64, scale: f64) {
        let margin = raw / scale;
        let rounding = CONDITION_SLACK * f64::EPSILON * self.spread.get() * p.unwrap_or(1.0).max(1.0);
        let tolerance = self.tol.max(rounding);
        self.links.push(Link {
            label: label.into(),
            p,
            raw_margin: raw,
            scale,
            margin,
            tolerance,
            holds: margin >= -tolerance,
        });
    }

    fn loewner(&mut self, label: &str, p: Option<f64>, lhs: &HermitianMatrix, rhs: &HermitianMatrix) -> Result<()> {
        let raw = eigendecompose(&(rhs - lhs))?.values[0];
        let scale = 1.0 + spectral_norm(lhs) + spectral_norm(rhs);
        self.push(label, p, raw, scale);
        Ok(())
    }

    fn scalar(&mut self, label: &str, p: Option<f64>, lhs: f64, rhs: f64) {
        self.push(label, p, rhs - lhs, 1.0 + lhs.abs() + rhs.abs());
    }

    fn run(&mut self) -> Result<()> {
        use CheckId::*;
        let e = &self.inst.ensemble;
        let g = &self.inst.generator;
        match self.id {
            Sandwich => {
                let h = harmonic_mean(e)?;
                let a = arithmetic_mean(e)?;
                let s = self.sigma()?.clone();
                self.loewner("harmonic <= sigma", None, &h, &s)?;
                self.loewner("sigma <= arithmetic", None, &s, &a)?;
            }
            InverseSum => {
                let k = self.kantorovich()?;
                let a = arithmetic_mean(e)?;
                let h = harmonic_mean(e)?;
                let inv_sum = h.inverse();
                self.loewner("sum of inverses <= K·(arithmetic)⁻¹", None, &inv_sum, &a.inverse().as_hermitian().scale(k))?;
                self.loewner("arithmetic <= K·harmonic", None, &a, &h.as_hermitian().scale(k))?;
            }
            ReverseArithmetic => {
                let k = self.kantorovich()?;
                let a = arithmetic_mean(e)?;
                let s = self.sigma()?.scale(k)?;
                self.loewner("arithmetic <= K·sigma", None, &a, &s)?;
            }
            ReverseHarmonic => {
                let k = self.kantorovich()?;
                let h = harmonic_mean(e)?.scale(k)?;
                let s = self.sigma()?.clone();
                self.loewner("sigma <= K·harmonic", None, &s, &h)?;
            }
            RefinedArithmetic | RefinedHarmonic => {
                let bounds = self.bounds()?;
                let k = kantorovich_constant(bounds.ratio())?;
                let r = refined_sum(e, &bounds)?;
                if self.id == RefinedArithmetic {
                    let a = arithmetic_mean(e)?;
                    let s = self.sigma()?.scale(k)?;
                    self.loewner("arithmetic <= refined sum", None, &a, &r)?;
                    self.loewner("refined sum <= K·sigma", None, &r, &s)?;
                } else {
                    let s = self.sigma()?.clone();
                    let h = harmonic_mean(e)?.scale(k)?;
                    self.loewner("sigma <= refined sum", None, &s, &r)?;
                    self.loewner("refined sum <= K·harmonic", None, &r, &h)?;
                }
            }
            PowerNorm => {
                let bounds = self.bounds()?;
                let k2 = kantorovich_constant(bounds.ratio())?;
                let sigma = self.sigma()?.clone();
                for p in self.p_values()? {
                    let c = generalized_kantorovich(bounds.lower(), bounds.upper(), p)? * k2.powf(p);
                    let lhs = self.solve(&e.powered(p)?, g, &format!("σ_g(w;𝔸^{p})"))?;
                    let rhs = sigma.pow(p);
                    self.scalar("spectral norm", Some(p), spectral_norm(&lhs), c * spectral_norm(&rhs));
                    self.scalar("trace norm", Some(p), trace_norm(&lhs), c * trace_norm(&rhs));
                }
            }
            PowerScalar | DeformedPower => {
                let normalized = self.normalized()?;
                let k = normalized.dim();
                let identity = HermitianMatrix::identity(k);
                let s = self.solve(&normalized, g, "σ_g(w;𝔸')")?;
                self.loewner("hypothesis sigma <= I", None, &s, &identity)?;
                let (lo, hi) = normalized.spectral_hull();
                for p in self.p_values()? {
                    let powered = normalized.powered(p)?;
                    if self.id == PowerScalar {
                        let c = if hi / lo <= 1.0 + 1e-12 {
                            1.0
                        } else {
                            generalized_kantorovich(lo, hi, p)? * kantorovich_constant(hi / lo)?.powf(p)
                        };
                        let lhs = self.solve(&powered, g, &format!("σ_g(w;𝔸'^{p})"))?;
                        self.loewner("sigma of powers <= c·I", Some(p), &lhs, &identity.scale(c))?;
                    } else {
                        let gp = g.deformed(p)?;
                        let lhs = self.solve(&powered, &gp, &format!("σ_(g_{p})(w;𝔸'^{p})"))?;
                        self.loewner("deformed sigma of powers <= I", Some(p), &lhs, &identity)?;
                    }
                }
            }
            MapMonotonicity => {
                let k = self.kantorovich()?;
                let map = self.map()?.clone();
                let phi_sigma = map.apply(self.sigma()?)?;
                let mapped = apply_ensemble(&map, e)?;
                let sigma_phi = self.solve(&mapped, g, "σ_g(w;Φ(𝔸))")?;
                self.loewner("Φ(sigma) <= sigma(Φ)", None, &phi_sigma, &sigma_phi)?;
                self.loewner("sigma(Φ) <= K·Φ(sigma)", None, &sigma_phi, &phi_sigma.scale(k))?;
            }
            MapPowerRefined | MapPowerMean | MapPowerReverse => {
                let bounds = self.bounds()?;
                let map = self.map()?.clone();
                let phi_sigma = map.apply_pd(self.sigma()?)?;
                let phi_r = map.apply_pd(&PositiveDefiniteMatrix::new(refined_sum(e, &bounds)?)?)?;
                let sigma_phi = if self.id == MapPowerRefined {
                    None
                } else {
                    Some(self.solve(&apply_ensemble(&map, e)?, g, "σ_g(w;Φ(𝔸))")?)
                };
                let (m, big_m) = (bounds.lower(), bounds.upper());
                for p in self.p_values()? {
                    let c = ((m + big_m).powi(2) / (m * big_m)).powf(p) / 16.0;
                    match self.id {
                        MapPowerRefined => {
                            let (a, b) = (phi_r.pow(p), phi_sigma.pow(p));
                            self.loewner("Φ(R)^p <= c·Φ(sigma)^p", Some(p), &a, &b.as_hermitian().scale(c))?;
                            self.loewner("Φ(sigma)^p <= c·Φ(R)^p", Some(p), &b, &a.as_hermitian().scale(c))?;
                        }
                        MapPowerMean => {
                            let s = sigma_phi.as_ref().expect("solved above").pow(p);
                            let a = phi_r.pow(p);
                            self.loewner("Φ(R)^p <= c·sigma(Φ)^p", Some(p), &a, &s.as_hermitian().scale(c))?;
                            self.loewner("sigma(Φ)^p <= c·Φ(R)^p", Some(p), &s, &a.as_hermitian().scale(c))?;
                        }
                        _ => {
                            let s = sigma_phi.as_ref().expect("solved above").pow(p);
                            let b = phi_sigma.pow(p);
                            self.loewner("sigma(Φ)^p <= c·Φ(sigma)^p", Some(p), &s, &b.as_hermitian().scale(c))?;
                        }
                    }
                }
            }
            VectorState => {
                let x = self.vector()?.clone();
                let lhs = self.sigma()?.quadratic_form(&x);
                let values: Vec<f64> = e.matrices().iter().map(|a| a.quadratic_form(&x)).collect();
                let rhs = scalar_gke(e.weights(), &values, g)?;
                self.scalar("⟨sigma x,x⟩ <= scalar sigma", None, lhs, rhs);
            }
            TwoMatrixVector => {
                if e.len() < 2 {
                    return Err(GkeError::Config(format!("{} requires at least two matrices", self.id)));
                }
                let x = self.vector()?.clone();
                let (a, b) = (&e.matrices()[0], &e.matrices()[1]);
                let w = e.weights();
                let v = w[1] / (w[0] + w[1]);
                let lhs = weighted_geometric_pair(a, b, v)?.quadratic_form(&x);
                let (qa, qb) = (a.quadratic_form(&x), b.quadratic_form(&x));
                let rhs = qa.powf(1.0 - v) * qb.powf(v);
                self.scalar("⟨(A #_v B)x,x⟩ <= scalar #_v", None, lhs, rhs);
            }
            MonotoneIncreasing | MonotoneDecreasing => {
                let k = self.kantorovich()?;
                let f = self.monotone()?.clone();
                let f_sigma = f.apply(self.sigma()?)?;
                let sigma_f = self.solve(&e.map(|a| f.apply(a))?, g, "σ_g(w;f(𝔸))")?;
                if self.id == MonotoneIncreasing {
                    self.loewner("sigma(f) <= K·f(sigma)", None, &sigma_f, &f_sigma.as_hermitian().scale(k))?;
                } else {
                    self.loewner("f(sigma) <= K·sigma(f)", None, &f_sigma, &sigma_f.as_hermitian().scale(k))?;
                }
            }
            ConcavityDefect => {
                let bounds = self.bounds()?;
                let f = self.monotone()?.clone();
                let k = kantorovich_constant(f.eval(bounds.upper()) / f.eval(bounds.lower()))?;
                let f_sigma = f.apply(self.sigma()?)?;
                let f_ensemble = e.map(|a| f.apply(a))?;
                let sigma_f = self.solve(&f_ensemble, g, "σ_g(w;f(𝔸))")?;
                let n = e.len();
                let uniform = vec![1.0 / n as f64; n];
                let f_of_mean = f.apply(&arithmetic_mean(&e.with_weights(uniform.clone())?)?)?;
                let mean_of_f = arithmetic_mean(&f_ensemble.with_weights(uniform)?)?;
                let defect = &f_of_mean.as_hermitian().clone() - mean_of_f.as_hermitian();
                let rhs = &sigma_f.as_hermitian().scale(k) + &defect.scale(n as f64 * e.max_weight());
                self.loewner("f(sigma) <= K'·sigma(f) + defect", None, &f_sigma, &rhs)?;
            }
            InverseMean | InverseMeanReverse => {
                let k = self.kantorovich()?;
                let sigma_inv = self.sigma()?.inverse();
                let of_inverses = self.solve(&e.inverted(), g, "σ_g(w;𝔸⁻¹)")?;
                if self.id == InverseMean {
                    self.loewner("sigma(inverses) <= K·sigma⁻¹", None, &of_inverses, &sigma_inv.as_hermitian().scale(k))?;
                } else {
                    self.loewner("sigma⁻¹ <= K·sigma(inverses)", None, &sigma_inv, &of_inverses.as_hermitian().scale(k))?;
                }
            }
        }
        Ok(())
    }

    /// 𝔸' = σ^{-1/2} 𝔸 σ^{-1/2}, whose mean is I by congruence invariance.
    fn normalized(&self) -> Result<MatrixEnsemble> {
        let x: CMatrix = self.sigma()?.inv_sqrt().into_hermitian().into_matrix();
        self.inst.ensemble.congruent(&x)
    }
}

/// Σ wᵢ r(Aᵢ) with r the log-convex refinement of t on [m, M].
fn refined_sum(e: &MatrixEnsemble, bounds: &SpectrumBounds) -> Result<HermitianMatrix> {
    let mut acc = HermitianMatrix::zeros(e.dim());
    for (w, a) in e.weights().iter().zip(e.matrices()) {
        acc = &acc + &refinement_midpoint(bounds, a)?.as_hermitian().scale(*w);
    }
    Ok(acc)
}

/// Evaluates one check; `tol` is the relative tolerance per link.
pub fn run_check(id: CheckId, inst: &CheckInstance, tol: f64) -> Result<CheckResult> {
    if !(tol >= 0.0) {
        return Err(GkeError::Range(format!("tolerance must be >= 0, got {tol}")));
    }
    let start = Instant::now();
    let mut eval = Evaluation {
        id,
        inst,
        tol,
        sigma: OnceCell::new(),
        links: Vec::new(),
        spread: Cell::new({
            let (lo, hi) = inst.ensemble.spectral_hull();
            hi / lo
        }),
    };
    eval.run()?;
    let links = eval.links;
    let worst = links
        .iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .expect("every check evaluates at least one link");
    let (left, right) = id.labels();
    Ok(CheckResult {
        check_id: id,
        holds: links.iter().all(|l| l.holds),
        margin: worst.margin,
        tolerance: links.iter().map(|l| l.tolerance).fold(tol, f64::max),
        left_label: left.to_string(),
        right_label: right.to_string(),
        p: worst.p,
        fingerprint: inst.fingerprint.clone(),
        elapsed: start.elapsed().as_secs_f64(),
        links,
    })
}

/// How to build random instances for one suite entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Recipe {
    pub dim: usize,
    pub count: usize,
    pub lower: f64,
    pub upper: f64,
    /// Fixed generator; cycles through [`default_generators`] when absent.
    pub generator: Option<Generator>,
    /// Fixed map; cycles through the map kinds when absent.
    pub map: Option<MapSpec>,
    /// Fixed monotone function; cycles through the defaults when absent.
    pub monotone: Option<MonotoneFunction>,
    pub p: Option<f64>,
    /// Use these weights instead of a Dirichlet draw.
    pub weights: Option<Vec<f64>>,
    pub solver: SolverOptions,
}

impl Default for Recipe {
    fn default() -> Self {
        Self {
            dim: 3,
            count: 3,
            lower: 1.0,
            upper: 4.0,
            generator: None,
            map: None,
            monotone: None,
            p: None,
            weights: None,
            solver: SolverOptions::default(),
        }
    }
}

/// One line of a suite: a check, a recipe and a trial count.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteEntry {
    pub check: CheckId,
    pub recipe: Recipe,
    pub trials: usize,
}

pub fn default_generators() -> Vec<Generator> {
    vec![
        Generator::Log,
        Generator::Power(0.5),
        Generator::Power(-0.5),
        Generator::Affine,
        Generator::Harmonic,
    ]
}

pub fn default_increasing() -> Vec<MonotoneFunction> {
    vec![
        MonotoneFunction::Power(0.5),
        MonotoneFunction::Power(0.25),
        MonotoneFunction::Moebius { a: 1.0, b: 0.0, c: 1.0, d: 1.0 },
    ]
}

pub fn default_decreasing() -> Vec<MonotoneFunction> {
    vec![MonotoneFunction::InversePower(0.5), MonotoneFunction::ShiftInverse(1.0)]
}

const MAP_CYCLE: [MapKind; 5] = [
    MapKind::Pinching(None),
    MapKind::Isometry,
    MapKind::Trace,
    MapKind::VectorState,
    MapKind::Mixture,
];

/// The RNG of trial `trial` under `seed`; independent of every other trial.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Draws the instance of `trial` for `check` from `recipe`.
pub fn build_instance(check: CheckId, recipe: &Recipe, seed: u64, trial: usize) -> Result<CheckInstance> {
    let mut rng = trial_rng(seed, trial);
    let mut ensemble = random_bounded_ensemble(recipe.dim, recipe.count, recipe.lower, recipe.upper, &mut rng)?;
    if let Some(w) = &recipe.weights {
        ensemble = ensemble.with_weights(w.clone())?;
    }
    let generator = match &recipe.generator {
        Some(g) => g.clone(),
        None => {
            let all = default_generators();
            all[trial % all.len()].clone()
        }
    };
    let k = ensemble.dim();
    let mut inst = CheckInstance::new(ensemble, generator)
        .with_solver(recipe.solver)
        .with_origin(seed, trial);
    inst.p = recipe.p;
    if check.needs_map() {
        let map = match &recipe.map {
            Some(spec) => spec.build(k)?,
            None => {
                let kind = &MAP_CYCLE[trial % MAP_CYCLE.len()];
                let out = match kind {
                    MapKind::Pinching(_) => k,
                    MapKind::VectorState => 1,
                    _ => rng.random_range(1..=k),
                };
                random_map_with(kind, k, out, &mut rng)?
            }
        };
        inst = inst.with_map(map);
    }
    if check.needs_vector() {
        inst = inst.with_vector(random_unit_vector(k, &mut rng));
    }
    if let Some(dir) = check.monotone_direction() {
        let f = match &recipe.monotone {
            Some(f) => f.clone(),
            None => {
                let pool = match dir {
                    Direction::Increasing => default_increasing(),
                    Direction::Decreasing => default_decreasing(),
                };
                pool[trial % pool.len()].clone()
            }
        };
        inst = inst.with_monotone(f);
    }
    Ok(inst)
}

/// Runs every trial of every entry, in parallel, returning results ordered
/// by entry and then by trial. The first error in that order is returned.
pub fn run_suite(entries: &[SuiteEntry], seed: u64, tol: f64) -> Result<Vec<CheckResult>> {
    let jobs: Vec<(usize, usize)> = entries
        .iter()
        .enumerate()
        .flat_map(|(i, e)| (0..e.trials).map(move |t| (i, t)))
        .collect();
    jobs.par_iter()
        .map(|&(i, trial)| {
            let entry = &entries[i];
            let inst = build_instance(entry.check, &entry.recipe, seed, trial)?;
            run_check(entry.check, &inst, tol)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Per-check aggregate of a suite run.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckSummary {
    pub check_id: CheckId,
    pub trials: usize,
    pub failures: usize,
    pub min_margin: f64,
}

/// Groups results by check in first-appearance order.
pub fn summarize(results: &[CheckResult]) -> Vec<CheckSummary> {
    let mut out: Vec<CheckSummary> = Vec::new();
    for r in results {
        let pos = match out.iter().position(|s| s.check_id == r.check_id) {
            Some(p) => p,
            None => {
                out.push(CheckSummary {
                    check_id: r.check_id,
                    trials: 0,
                    failures: 0,
                    min_margin: f64::INFINITY,
                });
                out.len() - 1
            }
        };
        let s = &mut out[pos];
        s.trials += 1;
        s.failures += usize::from(!r.holds);
        s.min_margin = s.min_margin.min(r.margin);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::C64;

    fn identical_ensemble(n: usize) -> MatrixEnsemble {
        let a = PositiveDefiniteMatrix::from_real_diagonal(&[1.0, 2.5, 4.0]).unwrap();
        MatrixEnsemble::uniform(vec![a; n])
            .unwrap()
            .with_bounds(SpectrumBounds::new(1.0, 4.0).unwrap())
            .unwrap()
    }

    #[test]
    fn check_ids_round_trip() {
        assert_eq!(CheckId::ALL.len(), 20);
        for id in CheckId::ALL {
            assert_eq!(id.as_str().parse::<CheckId>().unwrap(), *id);
        }
        assert!("thm99".parse::<CheckId>().is_err());
    }

    #[test]
    fn sandwich_on_identical_matrices_is_tight() {
        let inst = CheckInstance::new(identical_ensemble(3), Generator::Log);
        let r = run_check(CheckId::Sandwich, &inst, DEFAULT_CHECK_TOLERANCE).unwrap();
        assert!(r.holds);
        for link in &r.links {
            assert!(link.margin.abs() < 1e-8, "{link:?}");
        }
    }

    #[test]
    fn identity_map_is_tight_on_the_left() {
        let inst = build_instance(CheckId::ReverseArithmetic, &Recipe::default(), 42, 0)
            .unwrap()
            .with_map(PositiveLinearMap::identity(3));
        let r = run_check(CheckId::MapMonotonicity, &inst, DEFAULT_CHECK_TOLERANCE).unwrap();
        assert!(r.holds);
        assert!(r.links[0].margin.abs() < 1e-8);
    }

    #[test]
    fn reverse_arithmetic_matches_two_sided_evaluation() {
        let recipe = Recipe {
            dim: 4,
            count: 3,
            generator: Some(Generator::Log),
            ..Recipe::default()
        };
        let inst = build_instance(CheckId::ReverseArithmetic, &recipe, 42, 0).unwrap();
        let r = run_check(CheckId::ReverseArithmetic, &inst, DEFAULT_CHECK_TOLERANCE).unwrap();
        assert!(r.holds);
        // Both sides recomputed outside the check.
        let s = solve_gke(&inst.ensemble, &Generator::Log, &SolverOptions::default())
            .unwrap()
            .solution;
        let rhs = s.as_hermitian().scale(kantorovich_constant(4.0).unwrap());
        let lhs = arithmetic_mean(&inst.ensemble).unwrap();
        let raw = eigendecompose(&(&rhs - lhs.as_hermitian())).unwrap().values[0];
        assert!((r.links[0].raw_margin - raw).abs() < 1e-9);
    }

    #[test]
    fn vector_check_on_common_eigenvector_is_tight() {
        let mats = vec![
            PositiveDefiniteMatrix::from_real_diagonal(&[1.0, 3.0]).unwrap(),
            PositiveDefiniteMatrix::from_real_diagonal(&[2.0, 1.5]).unwrap(),
        ];
        let e = MatrixEnsemble::new(mats, vec![0.4, 0.6]).unwrap();
        let mut x = CVector::zeros(2);
        x[1] = C64::new(1.0, 0.0);
        for g in default_generators() {
            let inst = CheckInstance::new(e.clone(), g).with_vector(x.clone());
            let r = run_check(CheckId::VectorState, &inst, DEFAULT_CHECK_TOLERANCE).unwrap();
            assert!(r.links[0].raw_margin.abs() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn missing_fields_are_configuration_errors() {
        let inst = CheckInstance::new(identical_ensemble(2).without_bounds(), Generator::Log);
        for id in [CheckId::ReverseArithmetic, CheckId::MapMonotonicity, CheckId::VectorState, CheckId::MonotoneIncreasing] {
            assert!(matches!(run_check(id, &inst, 1e-8), Err(GkeError::Config(_))), "{id}");
        }
        let wrong = CheckInstance::new(identical_ensemble(2), Generator::Log)
            .with_monotone(MonotoneFunction::InversePower(0.5));
        assert!(matches!(run_check(CheckId::MonotoneIncreasing, &wrong, 1e-8), Err(GkeError::Config(_))));
    }

    #[test]
    fn non_convergence_is_a_solver_error() {
        let recipe = Recipe {
            solver: SolverOptions { tol: Some(1e-30), max_iter: 2, step: 1.0 },
            generator: Some(Generator::Log),
            ..Recipe::default()
        };
        let inst = build_instance(CheckId::Sandwich, &recipe, 1, 0).unwrap();
        match run_check(CheckId::Sandwich, &inst, 1e-8) {
            Err(GkeError::Solver(f)) => assert!(f.context.contains("seed=1")),
            other => panic!("expected solver error, got {other:?}"),
        }
    }

    #[test]
    fn suite_is_deterministic_and_ordered() {
        assert!(run_suite(&[], 7, 1e-8).unwrap().is_empty());
        let entries: Vec<SuiteEntry> = [CheckId::Sandwich, CheckId::MapMonotonicity, CheckId::MonotoneDecreasing]
            .iter()
            .map(|&check| SuiteEntry { check, recipe: Recipe::default(), trials: 4 })
            .collect();
        let a = run_suite(&entries, 7, 1e-8).unwrap();
        let b = run_suite(&entries, 7, 1e-8).unwrap();
        assert_eq!(a.len(), 12);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.check_id, y.check_id);
            assert_eq!(x.fingerprint, y.fingerprint);
            assert_eq!(x.margin.to_bits(), y.margin.to_bits());
            assert!(x.holds);
        }
        let trials: Vec<usize> = a[..4].iter().map(|r| r.fingerprint.trial).collect();
        assert_eq!(trials, vec![0, 1, 2, 3]);
        let summary = summarize(&a);
        assert_eq!(summary.len(), 3);
        assert!(summary.iter().all(|s| s.trials == 4 && s.failures == 0));
    }

    #[test]
    fn adding_trials_keeps_earlier_instances() {
        let r = Recipe::default();
        let a = build_instance(CheckId::VectorState, &r, 9, 2).unwrap();
        let b = build_instance(CheckId::VectorState, &r, 9, 2).unwrap();
        assert_eq!(a.ensemble.matrices()[0], b.ensemble.matrices()[0]);
        assert_eq!(a.vector, b.vector);
    }
}
