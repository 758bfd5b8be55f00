//! Weighted matrix means: arithmetic, harmonic, power, Karcher and the
//! general solution σ_g(w; 𝔸) of Σ wᵢ g(X^{-1/2} Aᵢ X^{-1/2}) = 0.

use log::debug;

use crate::error::{GkeError, Result};
use crate::generators::Generator;
use crate::hermitian::{
    congruence_pd, congruence_raw, spectral_norm, weighted_geometric_pair, CMatrix, HermitianMatrix,
    PositiveDefiniteMatrix, SpectrumBounds,
};

/// Weights must sum to one within this absolute slack.
pub const WEIGHT_SUM_SLACK: f64 = 1e-12;

/// Step halvings allowed per iteration before the solve is abandoned.
pub const MAX_STEP_HALVINGS: usize = 6;

const SLOW_PROGRESS: f64 = 0.5;
const FAST_PROGRESS: f64 = 0.1;

/// Largest spectral norm of s·R in one update, so X changes by at most a
/// factor e^2 per iteration.
const MAX_LOG_STEP: f64 = 2.0;

/// The residual cannot be resolved below about ε·κ, with κ the spread of
/// the ensemble's spectra.
const RESIDUAL_FLOOR_FACTOR: f64 = 32.0;

/// Multiple of the per-iterate rounding estimate below which a solve that
/// can make no further progress still counts as converged.
const NOISE_FACTOR: f64 = 8.0;

/// max(requested tolerance, rounding floor) for the ensemble.
pub fn effective_tolerance(e: &MatrixEnsemble, opts: &SolverOptions) -> f64 {
    let (lo, hi) = e.spectral_hull();
    let k = e.dim() as f64;
    opts.resolved_tol(e.dim())
        .max(RESIDUAL_FLOOR_FACTOR * f64::EPSILON * (hi / lo) * k)
}

/// n positive definite matrices of a common dimension with a positive weight
/// vector and optional spectrum bounds.
#[derive(Clone, Debug)]
pub struct MatrixEnsemble {
    matrices: Vec<PositiveDefiniteMatrix>,
    weights: Vec<f64>,
    bounds: Option<SpectrumBounds>,
}

impl MatrixEnsemble {
    pub fn new(matrices: Vec<PositiveDefiniteMatrix>, weights: Vec<f64>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(GkeError::Config("ensemble needs at least one matrix".into()));
        }
        if matrices.len() != weights.len() {
            return Err(GkeError::InvalidWeights(format!(
                "{} weights for {} matrices",
                weights.len(),
                matrices.len()
            )));
        }
        let k = matrices[0].dim();
        if let Some(bad) = matrices.iter().find(|a| a.dim() != k) {
            return Err(GkeError::DimensionMismatch {
                expected: k,
                found: bad.dim(),
            });
        }
        validate_weights(&weights)?;
        Ok(Self {
            matrices,
            weights,
            bounds: None,
        })
    }

    /// Equal weights 1/n.
    pub fn uniform(matrices: Vec<PositiveDefiniteMatrix>) -> Result<Self> {
        let n = matrices.len().max(1);
        Self::new(matrices, vec![1.0 / n as f64; n])
    }

    /// Attaches bounds after checking mI ≤ Aᵢ ≤ MI for every member.
    pub fn with_bounds(mut self, bounds: SpectrumBounds) -> Result<Self> {
        for (i, a) in self.matrices.iter().enumerate() {
            if !bounds.contains(a) {
                return Err(GkeError::Precondition(format!(
                    "matrix {i} has spectrum [{}, {}] outside bounds [{}, {}]",
                    a.eig_min(),
                    a.eig_max(),
                    bounds.lower(),
                    bounds.upper()
                )));
            }
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    pub fn without_bounds(mut self) -> Self {
        self.bounds = None;
        self
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        let mut e = Self::new(self.matrices.clone(), weights)?;
        e.bounds = self.bounds;
        Ok(e)
    }

    pub fn matrices(&self) -> &[PositiveDefiniteMatrix] {
        &self.matrices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bounds(&self) -> Option<&SpectrumBounds> {
        self.bounds.as_ref()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest and largest eigenvalue over all members.
    pub fn spectral_hull(&self) -> (f64, f64) {
        self.matrices.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), a| {
            (lo.min(a.eig_min()), hi.max(a.eig_max()))
        })
    }

    /// Applies `f` to every member; bounds are dropped.
    pub fn map(
        &self,
        f: impl Fn(&PositiveDefiniteMatrix) -> Result<PositiveDefiniteMatrix>,
    ) -> Result<Self> {
        let matrices = self.matrices.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(matrices, self.weights.clone())
    }

    /// 𝔸⁻¹ with bounds [1/M, 1/m].
    pub fn inverted(&self) -> Self {
        Self {
            matrices: self.matrices.iter().map(|a| a.inverse()).collect(),
            weights: self.weights.clone(),
            bounds: self.bounds.map(|b| b.inverted()),
        }
    }

    /// 𝔸^p for p > 0 with bounds [m^p, M^p].
    pub fn powered(&self, p: f64) -> Result<Self> {
        if !(p > 0.0) {
            return Err(GkeError::Range(format!("ensemble power must be positive, got {p}")));
        }
        let bounds = match self.bounds {
            Some(b) => Some(SpectrumBounds::new(b.lower().powf(p), b.upper().powf(p))?),
            None => None,
        };
        Ok(Self {
            matrices: self.matrices.iter().map(|a| a.pow(p)).collect(),
            weights: self.weights.clone(),
            bounds,
        })
    }

    /// c𝔸 with bounds [cm, cM].
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let bounds = match self.bounds {
            Some(b) => Some(b.scaled(c)?),
            None => None,
        };
        Ok(Self {
            matrices: self
                .matrices
                .iter()
                .map(|a| a.scale(c))
                .collect::<Result<_>>()?,
            weights: self.weights.clone(),
            bounds,
        })
    }

    /// X*𝔸X; bounds are dropped.
    pub fn congruent(&self, x: &CMatrix) -> Result<Self> {
        self.map(|a| congruence_pd(x, a))
    }
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0) || !w.is_finite()) {
        return Err(GkeError::InvalidWeights(format!("weight {i} is {w}; weights must be positive")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_SLACK {
        return Err(GkeError::InvalidWeights(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

/// Iteration controls shared by the solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Residual tolerance; `None` means 1e-11·k.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Initial step of the exponential update, in (0, 1].
    pub step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: None,
            max_iter: 500,
            step: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn resolved_tol(&self, k: usize) -> f64 {
        self.tol.unwrap_or(1e-11 * k as f64)
    }

    fn validate(&self) -> Result<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(GkeError::Range(format!("tolerance must be positive, got {t}")));
            }
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(GkeError::Range(format!("step must lie in (0, 1], got {}", self.step)));
        }
        Ok(())
    }
}

/// Diagnostics of one solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: PositiveDefiniteMatrix,
    pub iterations: usize,
    /// Frobenius norm of Σ wᵢ g(X^{-1/2} Aᵢ X^{-1/2}) at the solution.
    pub final_residual: f64,
    pub converged: bool,
    /// Total number of step halvings taken by the line search.
    pub restarts: usize,
    pub tolerance: f64,
}

impl SolveReport {
    /// Converts a non-converged report into a solver error.
    pub fn require_converged(self, context: &str) -> Result<PositiveDefiniteMatrix> {
        if self.converged {
            Ok(self.solution)
        } else {
            Err(GkeError::Solver(Box::new(crate::error::SolverFailure {
                context: context.to_string(),
                iterations: self.iterations,
                final_residual: self.final_residual,
                tolerance: self.tolerance,
                restarts: self.restarts,
            })))
        }
    }
}

fn weighted_sum<'a>(weights: &[f64], mats: impl Iterator<Item = &'a CMatrix>) -> CMatrix {
    let mut acc: Option<CMatrix> = None;
    for (w, m) in weights.iter().zip(mats) {
        let term = m.scale(*w);
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    acc.expect("non-empty ensemble")
}

/// Σ wᵢ Aᵢ.
pub fn arithmetic_mean(e: &MatrixEnsemble) -> Result<PositiveDefiniteMatrix> {
    let sum = weighted_sum(e.weights(), e.matrices().iter().map(|a| a.as_matrix()));
    PositiveDefiniteMatrix::new(HermitianMatrix::symmetrized(sum))
}

/// (Σ wᵢ Aᵢ⁻¹)⁻¹.
pub fn harmonic_mean(e: &MatrixEnsemble) -> Result<PositiveDefiniteMatrix> {
    Ok(arithmetic_mean(&e.inverted())?.inverse())
}

/// Σ wᵢ g(X^{-1/2} Aᵢ X^{-1/2}).
pub fn gke_residual_matrix(
    e: &MatrixEnsemble,
    g: &Generator,
    x: &PositiveDefiniteMatrix,
) -> Result<HermitianMatrix> {
    Ok(residual_with_noise(e, g, x)?.0)
}

/// The residual together with an estimate of the rounding error in it:
/// each congruence is perturbed by about ε·‖Aᵢ‖·‖X⁻¹‖, which g amplifies by
/// at most g' at the smallest eigenvalue.
fn residual_with_noise(
    e: &MatrixEnsemble,
    g: &Generator,
    x: &PositiveDefiniteMatrix,
) -> Result<(HermitianMatrix, f64)> {
    if x.dim() != e.dim() {
        return Err(GkeError::DimensionMismatch {
            expected: e.dim(),
            found: x.dim(),
        });
    }
    let x_inv_half = x.inv_sqrt();
    let mut terms = Vec::with_capacity(e.len());
    let mut noise = 0.0;
    for (a, w) in e.matrices().iter().zip(e.weights()) {
        let y = PositiveDefiniteMatrix::new(HermitianMatrix::symmetrized(congruence_raw(
            x_inv_half.as_matrix(),
            a.as_matrix(),
        )))?;
        let perturbation = f64::EPSILON * a.eig_max() / x.eig_min();
        noise += w * perturbation * g.derivative(y.eig_min());
        terms.push(g.apply(&y).into_matrix());
    }
    let k = e.dim() as f64;
    let r = HermitianMatrix::symmetrized(weighted_sum(e.weights(), terms.iter()));
    Ok((r, noise * k))
}

/// Frobenius norm of [`gke_residual_matrix`].
pub fn gke_residual(e: &MatrixEnsemble, g: &Generator, x: &PositiveDefiniteMatrix) -> Result<f64> {
    Ok(gke_residual_matrix(e, g, x)?.frobenius_norm())
}

/// X^{1/2} exp(s·R) X^{1/2}.
fn exp_update(
    x: &PositiveDefiniteMatrix,
    r: &HermitianMatrix,
    s: f64,
) -> Result<PositiveDefiniteMatrix> {
    let e = r.scale(s).exp()?;
    let x_half = x.sqrt();
    let next = HermitianMatrix::symmetrized(congruence_raw(x_half.as_matrix(), e.as_matrix()));
    PositiveDefiniteMatrix::new(next)
}

/// σ_g(w; 𝔸) from the arithmetic-mean start.
pub fn solve_gke(e: &MatrixEnsemble, g: &Generator, opts: &SolverOptions) -> Result<SolveReport> {
    solve_gke_from(e, g, opts, arithmetic_mean(e)?)
}

/// σ_g(w; 𝔸) by the damped update X ← X^{1/2} exp(s·R(X)) X^{1/2}.
///
/// The step s starts at `opts.step` and persists across iterations. When a
/// step reduces the residual by less than half, s is halved (up to
/// [`MAX_STEP_HALVINGS`] times per iteration) while that keeps improving;
/// after a step that cuts the residual tenfold, s doubles again up to
/// `opts.step`. The loop ends at the requested tolerance, at `max_iter`, or
/// when no step decreases the residual. The result counts as converged if
/// the residual is within the larger of [`effective_tolerance`] and a
/// multiple of the rounding error estimated at the final iterate.
pub fn solve_gke_from(
    e: &MatrixEnsemble,
    g: &Generator,
    opts: &SolverOptions,
    start: PositiveDefiniteMatrix,
) -> Result<SolveReport> {
    opts.validate()?;
    let requested = opts.resolved_tol(e.dim());
    let tol = effective_tolerance(e, opts);
    let mut x = start;
    let (mut r, mut noise) = residual_with_noise(e, g, &x)?;
    let mut norm = r.frobenius_norm();
    let mut iterations = 0;
    let mut restarts = 0;
    let mut stalled = false;
    let mut s = opts.step;

    let attempt = |x: &PositiveDefiniteMatrix, r: &HermitianMatrix, s: f64| -> Result<_> {
        let cand = exp_update(x, r, s.min(MAX_LOG_STEP / spectral_norm(r)))?;
        let (r_cand, noise) = residual_with_noise(e, g, &cand)?;
        let n_cand = r_cand.frobenius_norm();
        Ok((cand, r_cand, n_cand, s, noise))
    };

    while norm > requested && iterations < opts.max_iter {
        let mut best = attempt(&x, &r, s)?;
        if best.2 >= SLOW_PROGRESS * norm {
            let mut t = s;
            for _ in 0..MAX_STEP_HALVINGS {
                t *= 0.5;
                restarts += 1;
                let cand = attempt(&x, &r, t)?;
                if cand.2 < best.2 {
                    best = cand;
                } else if best.2 < norm {
                    break;
                }
            }
        }
        iterations += 1;
        let (cand, r_cand, n_cand, used, n_noise) = best;
        if n_cand >= norm {
            stalled = true;
            break;
        }
        s = if n_cand < FAST_PROGRESS * norm {
            (2.0 * used).min(opts.step)
        } else {
            used
        };
        x = cand;
        r = r_cand;
        norm = n_cand;
        noise = n_noise;
    }
    let tol = tol.max(NOISE_FACTOR * noise);
    debug!(
        "solve_gke g={g} k={} n={} iterations={iterations} residual={norm:e} noise={noise:e} restarts={restarts} stalled={stalled}",
        e.dim(),
        e.len()
    );
    Ok(SolveReport {
        solution: x,
        iterations,
        final_residual: norm,
        converged: norm <= tol,
        restarts,
        tolerance: tol,
    })
}

/// Karcher mean Λ(w; 𝔸), the solution for g = log.
pub fn karcher_mean(e: &MatrixEnsemble, opts: &SolverOptions) -> Result<SolveReport> {
    solve_gke(e, &Generator::Log, opts)
}

/// Power mean P_t(w; 𝔸) by the fixed point X = Σ wᵢ (X #_t Aᵢ) for
/// t ∈ (0, 1], and P_t(w; 𝔸) = P_{−t}(w; 𝔸⁻¹)⁻¹ for t ∈ [−1, 0).
pub fn solve_power_mean(e: &MatrixEnsemble, t: f64, opts: &SolverOptions) -> Result<SolveReport> {
    let g = Generator::power(t)?;
    opts.validate()?;
    let tol = effective_tolerance(e, opts);
    if t < 0.0 {
        let inner = solve_power_mean(&e.inverted(), -t, opts)?;
        let solution = inner.solution.inverse();
        let final_residual = gke_residual(e, &g, &solution)?;
        return Ok(SolveReport {
            solution,
            iterations: inner.iterations,
            final_residual,
            converged: final_residual <= tol,
            restarts: 0,
            tolerance: tol,
        });
    }

    let mut x = arithmetic_mean(e)?;
    let mut iterations = 0;
    let mut final_residual = gke_residual(e, &g, &x)?;
    while final_residual > tol && iterations < opts.max_iter {
        let terms = e
            .matrices()
            .iter()
            .map(|a| weighted_geometric_pair(&x, a, t).map(|m| m.into_hermitian().into_matrix()))
            .collect::<Result<Vec<_>>>()?;
        let next = PositiveDefiniteMatrix::new(HermitianMatrix::symmetrized(weighted_sum(
            e.weights(),
            terms.iter(),
        )))?;
        let change = (next.as_matrix() - x.as_matrix()).norm() / x.as_matrix().norm();
        x = next;
        iterations += 1;
        if change <= tol {
            final_residual = gke_residual(e, &g, &x)?;
        }
    }
    debug!("solve_power_mean t={t} iterations={iterations} residual={final_residual:e}");
    Ok(SolveReport {
        solution: x,
        iterations,
        final_residual,
        converged: final_residual <= tol,
        restarts: 0,
        tolerance: tol,
    })
}

/// The scalar solution x of Σ wᵢ g(aᵢ/x) = 0, found by bisection on
/// [min aᵢ, max aᵢ].
pub fn scalar_gke(weights: &[f64], values: &[f64], g: &Generator) -> Result<f64> {
    if values.len() != weights.len() || values.is_empty() {
        return Err(GkeError::InvalidWeights(format!(
            "{} weights for {} values",
            weights.len(),
            values.len()
        )));
    }
    validate_weights(weights)?;
    if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(GkeError::Range(format!("values must be positive, got {v}")));
    }
    let phi = |x: f64| -> f64 {
        weights
            .iter()
            .zip(values)
            .map(|(w, a)| w * g.eval(a / x))
            .sum()
    };
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(0.0, f64::max);
    for _ in 0..400 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// X^{1/2} g(X^{-1/2} A X^{-1/2}) X^{1/2}.
pub fn generator_perspective(
    x: &PositiveDefiniteMatrix,
    a: &PositiveDefiniteMatrix,
    g: &Generator,
) -> Result<HermitianMatrix> {
    if x.dim() != a.dim() {
        return Err(GkeError::DimensionMismatch {
            expected: x.dim(),
            found: a.dim(),
        });
    }
    let y = PositiveDefiniteMatrix::new(HermitianMatrix::symmetrized(congruence_raw(
        x.inv_sqrt().as_matrix(),
        a.as_matrix(),
    )))?;
    let gy = g.apply(&y);
    Ok(HermitianMatrix::symmetrized(congruence_raw(
        x.sqrt().as_matrix(),
        gy.as_matrix(),
    )))
}
