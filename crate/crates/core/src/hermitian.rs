//! Dense Hermitian and positive definite matrices.
//!
//! Every non-polynomial matrix function (inverse, square root, fractional
//! powers, logarithm, exponential) is evaluated through one eigendecomposition
//! path, so all derived quantities share a single error model.

use std::fmt;
use std::ops::{Add, Deref, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GkeError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative asymmetry accepted on ingestion before symmetrization.
pub const HERMITIAN_INGEST_LIMIT: f64 = 1e-8;

/// Relative slack used by [`default_loewner_tolerance`].
pub const LOEWNER_RELATIVE_SLACK: f64 = 1e-8;

const EIGEN_MAX_SWEEPS: usize = 10_000;
const SINGULAR_RCOND: f64 = 1e-13;

/// A k×k complex Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    data: CMatrix,
}

impl HermitianMatrix {
    /// Validates approximate Hermitian symmetry, then stores `(A + A*)/2`.
    pub fn new(data: CMatrix) -> Result<Self> {
        if !data.is_square() {
            return Err(GkeError::DimensionMismatch {
                expected: data.nrows(),
                found: data.ncols(),
            });
        }
        if data.nrows() == 0 {
            return Err(GkeError::Range("matrix dimension must be at least 1".into()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(GkeError::Range("matrix has non-finite entries".into()));
        }
        let scale = data.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let k = data.nrows();
        let mut asym = 0.0_f64;
        for i in 0..k {
            for j in i..k {
                asym = asym.max((data[(i, j)] - data[(j, i)].conj()).norm());
            }
        }
        if asym > HERMITIAN_INGEST_LIMIT * scale.max(f64::MIN_POSITIVE) {
            return Err(GkeError::NotHermitian {
                asymmetry: asym / scale.max(f64::MIN_POSITIVE),
                limit: HERMITIAN_INGEST_LIMIT,
            });
        }
        Ok(Self::symmetrized(data))
    }

    /// Symmetrizes without validation. For internally produced matrices whose
    /// asymmetry is pure round-off.
    pub(crate) fn symmetrized(data: CMatrix) -> Self {
        let adj = data.adjoint();
        Self {
            data: (data + adj).scale(0.5),
        }
    }

    /// Builds from a row-major slice of real entries.
    pub fn from_real(k: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != k * k {
            return Err(GkeError::DimensionMismatch {
                expected: k * k,
                found: rows.len(),
            });
        }
        Self::new(CMatrix::from_fn(k, k, |i, j| C64::new(rows[i * k + j], 0.0)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let k = diag.len();
        Self {
            data: CMatrix::from_fn(k, k, |i, j| {
                if i == j {
                    C64::new(diag[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn identity(k: usize) -> Self {
        Self {
            data: CMatrix::identity(k, k),
        }
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            data: CMatrix::zeros(k, k),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            data: self.data.scale(c),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨Ax, x⟩, real for Hermitian A.
    pub fn quadratic_form(&self, x: &CVector) -> f64 {
        x.dotc(&(&self.data * x)).re
    }

    pub fn eigen(&self) -> Result<Eigen> {
        eigendecompose(self)
    }

    /// exp(A) by functional calculus.
    pub fn exp(&self) -> Result<PositiveDefiniteMatrix> {
        let eig = self.eigen()?;
        let values = eig.values.iter().map(|&l| l.exp()).collect();
        PositiveDefiniteMatrix::from_spectrum(eig.vectors, values)
    }

    fn fingerprint(&self) -> String {
        format!(
            "k={} trace={:.6e} fro={:.6e}",
            self.dim(),
            self.trace(),
            self.frobenius_norm()
        )
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

impl fmt::Display for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.data[(i, j)];
                    if z.im == 0.0 {
                        format!("{:.6}", z.re)
                    } else {
                        format!("{:.6}{:+.6}i", z.re, z.im)
                    }
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Spectral decomposition A = U·diag(values)·U*, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    /// U·diag(f(λ))·U*.
    pub fn assemble(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        assemble(&self.vectors, self.values.iter().map(|&l| f(l)))
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.assemble(|l| l)
    }
}

fn assemble(vectors: &CMatrix, values: impl Iterator<Item = f64>) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, v) in values.enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    scaled * vectors.adjoint()
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
pub fn eigendecompose(a: &HermitianMatrix) -> Result<Eigen> {
    let se = a
        .data
        .clone()
        .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_SWEEPS)
        .ok_or_else(|| GkeError::EigenNonConvergence {
            fingerprint: a.fingerprint(),
        })?;
    if se.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(GkeError::EigenNonConvergence {
            fingerprint: a.fingerprint(),
        });
    }
    let k = a.dim();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(k, k, |r, c| se.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Where a scalar function may be evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Real,
    NonNegative,
    Positive,
}

impl Domain {
    pub fn contains(self, x: f64) -> bool {
        match self {
            Domain::Real => x.is_finite(),
            Domain::NonNegative => x >= 0.0,
            Domain::Positive => x > 0.0,
        }
    }
}

/// f(A) = U·diag(f(λᵢ))·U*.
pub fn apply_scalar_function(
    a: &HermitianMatrix,
    domain: Domain,
    name: &str,
    f: impl Fn(f64) -> f64,
) -> Result<HermitianMatrix> {
    let eig = a.eigen()?;
    if let Some(&bad) = eig.values.iter().find(|&&l| !domain.contains(l)) {
        return Err(GkeError::Domain {
            eigenvalue: bad,
            function: name.to_string(),
        });
    }
    Ok(HermitianMatrix::symmetrized(eig.assemble(f)))
}

/// Bounds `0 < m < M` on a spectrum, with `h = M/m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumBounds {
    lower: f64,
    upper: f64,
    ratio: f64,
}

impl SpectrumBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower.is_finite() && upper.is_finite()) {
            return Err(GkeError::Range(format!(
                "spectrum bounds need 0 < m < M, got m={lower}, M={upper}"
            )));
        }
        if lower >= upper {
            return Err(GkeError::Range(format!(
                "spectrum bounds need m < M, got m={lower}, M={upper}"
            )));
        }
        Ok(Self {
            lower,
            upper,
            ratio: upper / lower,
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// h = M/m.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.lower * c, self.upper * c)
    }

    /// `[1/M, 1/m]`.
    pub fn inverted(&self) -> Self {
        Self::new(1.0 / self.upper, 1.0 / self.lower).expect("inverse of valid bounds")
    }

    /// Checks `mI ≤ A ≤ MI` with the default Loewner tolerance.
    pub fn contains(&self, a: &PositiveDefiniteMatrix) -> bool {
        let slack_lo = LOEWNER_RELATIVE_SLACK * (1.0 + self.lower + a.eig_max());
        let slack_hi = LOEWNER_RELATIVE_SLACK * (1.0 + self.upper + a.eig_max());
        a.eig_min() >= self.lower - slack_lo && a.eig_max() <= self.upper + slack_hi
    }
}

/// A Hermitian matrix certified positive definite, carrying its spectrum.
#[derive(Clone, Debug)]
pub struct PositiveDefiniteMatrix {
    base: HermitianMatrix,
    eigen: Eigen,
}

impl PositiveDefiniteMatrix {
    pub fn new(base: HermitianMatrix) -> Result<Self> {
        let eigen = base.eigen()?;
        if !(eigen.values[0] > 0.0) {
            return Err(GkeError::NotPositiveDefinite {
                eig_min: eigen.values[0],
            });
        }
        Ok(Self { base, eigen })
    }

    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(data)?)
    }

    /// U·diag(values)·U* with the decomposition kept as the cached spectrum.
    pub(crate) fn from_spectrum(vectors: CMatrix, values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(GkeError::NotPositiveDefinite { eig_min: bad });
        }
        let k = values.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let vectors = CMatrix::from_fn(k, k, |r, c| vectors[(r, order[c])]);
        let base = HermitianMatrix::symmetrized(assemble(&vectors, sorted.iter().copied()));
        Ok(Self {
            base,
            eigen: Eigen {
                values: sorted,
                vectors,
            },
        })
    }

    pub fn identity(k: usize) -> Self {
        Self::scaled_identity(k, 1.0).expect("identity is positive definite")
    }

    pub fn scaled_identity(k: usize, c: f64) -> Result<Self> {
        Self::from_spectrum(CMatrix::identity(k, k), vec![c; k])
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let k = diag.len();
        if k == 0 {
            return Err(GkeError::Range("matrix dimension must be at least 1".into()));
        }
        Self::from_spectrum(CMatrix::identity(k, k), diag.to_vec())
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.base
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.base
    }

    pub fn eigen(&self) -> &Eigen {
        &self.eigen
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn eig_min(&self) -> f64 {
        self.eigen.values[0]
    }

    pub fn eig_max(&self) -> f64 {
        *self.eigen.values.last().expect("dim >= 1")
    }

    /// f(A) for f defined on (0, ∞).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        HermitianMatrix::symmetrized(self.eigen.assemble(f))
    }

    /// f(A) for f mapping the spectrum into (0, ∞); the result keeps the
    /// transformed spectrum.
    pub fn map_positive(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.eigen.values.iter().map(|&l| f(l)).collect();
        Self::from_spectrum(self.eigen.vectors.clone(), values)
    }

    pub fn pow(&self, s: f64) -> Self {
        self.map_positive(|l| l.powf(s))
            .expect("positive power of a positive definite matrix")
    }

    pub fn sqrt(&self) -> Self {
        self.map_positive(f64::sqrt).expect("square root of positive definite")
    }

    pub fn inv_sqrt(&self) -> Self {
        self.map_positive(|l| 1.0 / l.sqrt())
            .expect("inverse square root of positive definite")
    }

    pub fn inverse(&self) -> Self {
        self.map_positive(|l| 1.0 / l)
            .expect("inverse of positive definite")
    }

    pub fn log(&self) -> HermitianMatrix {
        self.map(f64::ln)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(GkeError::Range(format!("scale factor must be positive, got {c}")));
        }
        Ok(Self {
            base: self.base.scale(c),
            eigen: Eigen {
                values: self.eigen.values.iter().map(|l| l * c).collect(),
                vectors: self.eigen.vectors.clone(),
            },
        })
    }
}

impl Deref for PositiveDefiniteMatrix {
    type Target = HermitianMatrix;
    fn deref(&self) -> &HermitianMatrix {
        &self.base
    }
}

impl PartialEq for PositiveDefiniteMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
    }
}

/// X*·A·X without checks.
pub(crate) fn congruence_raw(x: &CMatrix, a: &CMatrix) -> CMatrix {
    x.adjoint() * a * x
}

/// X*·A·X for invertible square X.
pub fn congruence(x: &CMatrix, a: &HermitianMatrix) -> Result<HermitianMatrix> {
    if !x.is_square() || x.nrows() != a.dim() {
        return Err(GkeError::DimensionMismatch {
            expected: a.dim(),
            found: x.ncols(),
        });
    }
    let sv = x.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smin > SINGULAR_RCOND * smax) {
        return Err(GkeError::Singular {
            condition: smax / smin,
        });
    }
    Ok(HermitianMatrix::symmetrized(congruence_raw(x, a.as_matrix())))
}

/// Congruence of a positive definite matrix; the result is re-certified.
pub fn congruence_pd(x: &CMatrix, a: &PositiveDefiniteMatrix) -> Result<PositiveDefiniteMatrix> {
    PositiveDefiniteMatrix::new(congruence(x, a)?)
}

/// Outcome of an `A ≤ B` Loewner comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoewnerVerdict {
    pub holds: bool,
    /// Smallest eigenvalue of B − A.
    pub margin: f64,
    pub tolerance: f64,
}

/// 1e-8·(1 + ‖A‖ + ‖B‖).
pub fn default_loewner_tolerance(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    LOEWNER_RELATIVE_SLACK * (1.0 + spectral_norm(a) + spectral_norm(b))
}

/// Tests `A ≤ B`.
pub fn loewner_leq(a: &HermitianMatrix, b: &HermitianMatrix, tolerance: f64) -> Result<LoewnerVerdict> {
    if a.dim() != b.dim() {
        return Err(GkeError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if !(tolerance >= 0.0) {
        return Err(GkeError::Range(format!("tolerance must be >= 0, got {tolerance}")));
    }
    let margin = eigendecompose(&(b - a))?.values[0];
    Ok(LoewnerVerdict {
        holds: margin >= -tolerance,
        margin,
        tolerance,
    })
}

pub fn loewner_leq_default(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<LoewnerVerdict> {
    loewner_leq(a, b, default_loewner_tolerance(a, b))
}

fn singular_values(a: &HermitianMatrix) -> Vec<f64> {
    a.as_matrix().clone().singular_values().iter().copied().collect()
}

/// max |λᵢ(A)|.
pub fn spectral_norm(a: &HermitianMatrix) -> f64 {
    match eigendecompose(a) {
        Ok(eig) => eig.values.iter().map(|l| l.abs()).fold(0.0, f64::max),
        Err(_) => singular_values(a).into_iter().fold(0.0, f64::max),
    }
}

/// Σ |λᵢ(A)|.
pub fn trace_norm(a: &HermitianMatrix) -> f64 {
    match eigendecompose(a) {
        Ok(eig) => eig.values.iter().map(|l| l.abs()).sum(),
        Err(_) => singular_values(a).into_iter().sum(),
    }
}

/// A #_t B = A^{1/2}(A^{-1/2} B A^{-1/2})^t A^{1/2} for t ∈ [0, 1].
pub fn weighted_geometric_pair(
    a: &PositiveDefiniteMatrix,
    b: &PositiveDefiniteMatrix,
    t: f64,
) -> Result<PositiveDefiniteMatrix> {
    if a.dim() != b.dim() {
        return Err(GkeError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(GkeError::Range(format!(
            "geometric mean weight must lie in [0, 1], got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    let a_half = a.sqrt();
    let a_neg_half = a.inv_sqrt();
    let inner = PositiveDefiniteMatrix::new(HermitianMatrix::symmetrized(congruence_raw(
        a_neg_half.as_matrix(),
        b.as_matrix(),
    )))?;
    let powered = inner.pow(t);
    PositiveDefiniteMatrix::new(HermitianMatrix::symmetrized(congruence_raw(
        a_half.as_matrix(),
        powered.as_matrix(),
    )))
}
