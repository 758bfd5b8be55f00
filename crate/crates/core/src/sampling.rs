//! Seeded random unitaries, unit vectors and spectra.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{GkeError, Result};
use crate::hermitian::{CMatrix, CVector, PositiveDefiniteMatrix, SpectrumBounds, C64};
use crate::means::MatrixEnsemble;

/// Largest matrix size accepted by [`random_bounded_ensemble`].
pub const MAX_GENERATED_DIM: usize = 16;

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// k×cols matrix with orthonormal columns, from QR of complex Gaussian columns.
pub fn random_isometry<R: Rng + ?Sized>(k: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(cols <= k && cols >= 1);
    let g = CMatrix::from_fn(k, cols, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // Normalize so R has a positive real diagonal; makes the factor unique.
    let mut q = q.columns(0, cols).into_owned();
    for j in 0..cols {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..k {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

pub fn random_unitary<R: Rng + ?Sized>(k: usize, rng: &mut R) -> CMatrix {
    random_isometry(k, k, rng)
}

pub fn random_unit_vector<R: Rng + ?Sized>(k: usize, rng: &mut R) -> CVector {
    loop {
        let v = CVector::from_fn(k, |_, _| complex_gaussian(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v.unscale(n);
        }
    }
}

/// Dirichlet(1, …, 1) weights.
pub fn dirichlet_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    let mut w: Vec<f64> = draws.iter().map(|d| d / total).collect();
    let drift: f64 = 1.0 - w.iter().sum::<f64>();
    w[n - 1] += drift;
    w
}

/// Log-uniform draw from [lo, hi].
pub fn log_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if hi <= lo {
        return lo;
    }
    let u: f64 = rng.random();
    (lo.ln() + u * (hi.ln() - lo.ln())).exp().clamp(lo, hi)
}

/// n random k×k matrices UᵢΛᵢUᵢ* with log-uniform spectra in [m, M], the
/// extremes m and M pinned in every member (k ≥ 2) so that h = M/m is exact.
/// For k = 1 the members alternate between m and M. Weights are Dirichlet(1).
pub fn random_bounded_ensemble<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    m: f64,
    big_m: f64,
    rng: &mut R,
) -> Result<MatrixEnsemble> {
    if !(1..=MAX_GENERATED_DIM).contains(&k) {
        return Err(GkeError::Range(format!(
            "dimension must lie in 1..={MAX_GENERATED_DIM}, got {k}"
        )));
    }
    if n == 0 {
        return Err(GkeError::Range("ensemble size must be at least 1".into()));
    }
    let bounds = SpectrumBounds::new(m, big_m)?;
    let mut matrices = Vec::with_capacity(n);
    for i in 0..n {
        let values: Vec<f64> = if k == 1 {
            vec![if i % 2 == 0 { m } else { big_m }]
        } else {
            let mut v = vec![m, big_m];
            v.extend((2..k).map(|_| log_uniform(m, big_m, rng)));
            v
        };
        matrices.push(PositiveDefiniteMatrix::from_spectrum(random_unitary(k, rng), values)?);
    }
    let weights = dirichlet_weights(n, rng);
    MatrixEnsemble::new(matrices, weights)?.with_bounds(bounds)
}
