//! Unital positive linear maps between matrix algebras.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GkeError, Result};
use crate::hermitian::{CMatrix, CVector, HermitianMatrix, PositiveDefiniteMatrix, C64};
use crate::means::MatrixEnsemble;
use crate::sampling::{dirichlet_weights, random_isometry, random_unit_vector};

const UNITAL_SLACK: f64 = 1e-10;

/// A unital positive linear map Φ: M_{k₁} → M_{k₂}.
#[derive(Clone, Debug, PartialEq)]
pub enum PositiveLinearMap {
    /// A ↦ V*AV with V a k₁×k₂ isometry.
    IsometryConjugation { v: CMatrix },
    /// A ↦ Σⱼ PⱼAPⱼ over a partition of the indices (0-based).
    Pinching { dim: usize, blocks: Vec<Vec<usize>> },
    /// A ↦ (tr A / k₁)·I_{k₂}.
    TraceState { in_dim: usize, out_dim: usize },
    /// A ↦ ⟨Ax, x⟩ as a 1×1 matrix.
    VectorState { x: CVector },
    /// Convex combination of maps with common dimensions.
    Mixture { parts: Vec<(f64, PositiveLinearMap)> },
}

impl PositiveLinearMap {
    pub fn isometry(v: CMatrix) -> Result<Self> {
        let (k1, k2) = v.shape();
        if k2 == 0 || k2 > k1 {
            return Err(GkeError::Config(format!(
                "isometry must be k1×k2 with 1 <= k2 <= k1, got {k1}×{k2}"
            )));
        }
        let gram = v.adjoint() * &v - CMatrix::identity(k2, k2);
        if gram.camax() > UNITAL_SLACK {
            return Err(GkeError::Config("columns of V are not orthonormal".into()));
        }
        Ok(PositiveLinearMap::IsometryConjugation { v })
    }

    /// `blocks` must partition {0, …, dim−1}.
    pub fn pinching(dim: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; dim];
        for &i in blocks.iter().flatten() {
            if i >= dim || seen[i] {
                return Err(GkeError::Config(format!(
                    "pinching blocks must partition 1..={dim}; index {} repeated or out of range",
                    i + 1
                )));
            }
            seen[i] = true;
        }
        if dim == 0 || seen.iter().any(|s| !s) || blocks.iter().any(|b| b.is_empty()) {
            return Err(GkeError::Config(format!("pinching blocks must partition 1..={dim}")));
        }
        Ok(PositiveLinearMap::Pinching { dim, blocks })
    }

    pub fn identity(dim: usize) -> Self {
        PositiveLinearMap::Pinching {
            dim,
            blocks: vec![(0..dim).collect()],
        }
    }

    pub fn trace_state(in_dim: usize, out_dim: usize) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(GkeError::Config("trace state dimensions must be positive".into()));
        }
        Ok(PositiveLinearMap::TraceState { in_dim, out_dim })
    }

    pub fn vector_state(x: CVector) -> Result<Self> {
        if x.is_empty() || (x.norm() - 1.0).abs() > 1e-12 {
            return Err(GkeError::Config("vector state needs a unit vector".into()));
        }
        Ok(PositiveLinearMap::VectorState { x })
    }

    pub fn mixture(parts: Vec<(f64, PositiveLinearMap)>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| GkeError::Config("mixture needs at least one component".into()))?;
        let dims = (first.1.in_dim(), first.1.out_dim());
        if parts.iter().any(|(_, m)| (m.in_dim(), m.out_dim()) != dims) {
            return Err(GkeError::Config("mixture components must share dimensions".into()));
        }
        if parts.iter().any(|(w, _)| !(*w > 0.0)) {
            return Err(GkeError::InvalidWeights("mixture weights must be positive".into()));
        }
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(GkeError::InvalidWeights(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(PositiveLinearMap::Mixture { parts })
    }

    pub fn in_dim(&self) -> usize {
        match self {
            PositiveLinearMap::IsometryConjugation { v } => v.nrows(),
            PositiveLinearMap::Pinching { dim, .. } => *dim,
            PositiveLinearMap::TraceState { in_dim, .. } => *in_dim,
            PositiveLinearMap::VectorState { x } => x.len(),
            PositiveLinearMap::Mixture { parts } => parts[0].1.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            PositiveLinearMap::IsometryConjugation { v } => v.ncols(),
            PositiveLinearMap::Pinching { dim, .. } => *dim,
            PositiveLinearMap::TraceState { out_dim, .. } => *out_dim,
            PositiveLinearMap::VectorState { .. } => 1,
            PositiveLinearMap::Mixture { parts } => parts[0].1.out_dim(),
        }
    }

    /// Short description used in fingerprints and reports.
    pub fn kind_name(&self) -> &'static str {
        match self {
            PositiveLinearMap::IsometryConjugation { .. } => "isometry",
            PositiveLinearMap::Pinching { .. } => "pinch",
            PositiveLinearMap::TraceState { .. } => "trace",
            PositiveLinearMap::VectorState { .. } => "vecstate",
            PositiveLinearMap::Mixture { .. } => "mix",
        }
    }

    fn apply_raw(&self, a: &CMatrix) -> CMatrix {
        match self {
            PositiveLinearMap::IsometryConjugation { v } => v.adjoint() * a * v,
            PositiveLinearMap::Pinching { dim, blocks } => {
                let mut label = vec![0usize; *dim];
                for (b, idx) in blocks.iter().enumerate() {
                    for &i in idx {
                        label[i] = b;
                    }
                }
                CMatrix::from_fn(*dim, *dim, |i, j| {
                    if label[i] == label[j] {
                        a[(i, j)]
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            }
            PositiveLinearMap::TraceState { in_dim, out_dim } => {
                let tr: f64 = (0..*in_dim).map(|i| a[(i, i)].re).sum();
                CMatrix::identity(*out_dim, *out_dim).scale(tr / *in_dim as f64)
            }
            PositiveLinearMap::VectorState { x } => {
                CMatrix::from_element(1, 1, C64::new(x.dotc(&(a * x)).re, 0.0))
            }
            PositiveLinearMap::Mixture { parts } => {
                let mut acc = CMatrix::zeros(self.out_dim(), self.out_dim());
                for (w, m) in parts {
                    acc += m.apply_raw(a).scale(*w);
                }
                acc
            }
        }
    }

    /// Φ(A).
    pub fn apply(&self, a: &HermitianMatrix) -> Result<HermitianMatrix> {
        if a.dim() != self.in_dim() {
            return Err(GkeError::DimensionMismatch {
                expected: self.in_dim(),
                found: a.dim(),
            });
        }
        Ok(HermitianMatrix::symmetrized(self.apply_raw(a.as_matrix())))
    }

    /// Φ(A) for positive definite A, re-certified positive definite.
    pub fn apply_pd(&self, a: &PositiveDefiniteMatrix) -> Result<PositiveDefiniteMatrix> {
        PositiveDefiniteMatrix::new(self.apply(a)?)
    }
}

/// Φ(𝔸) = (Φ(A₁), …, Φ(Aₙ)) with the same weights; bounds carry over since
/// a unital positive map preserves mI ≤ A ≤ MI.
pub fn apply_ensemble(map: &PositiveLinearMap, e: &MatrixEnsemble) -> Result<MatrixEnsemble> {
    let out = e.map(|a| map.apply_pd(a))?;
    match e.bounds() {
        Some(b) => out.with_bounds(*b),
        None => Ok(out),
    }
}

/// Kinds of map that [`make_random_map`] can produce.
#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    Isometry,
    /// Explicit partition, or a random one when `None`.
    Pinching(Option<Vec<Vec<usize>>>),
    Trace,
    VectorState,
    /// Random mixture of a pinching, a trace state and an isometry.
    Mixture,
}

/// A seeded instance of `kind` from M_{in_dim} to M_{out_dim}.
pub fn make_random_map(kind: &MapKind, in_dim: usize, out_dim: usize, seed: u64) -> Result<PositiveLinearMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_map_with(kind, in_dim, out_dim, &mut rng)
}

pub(crate) fn random_map_with<R: Rng + ?Sized>(
    kind: &MapKind,
    in_dim: usize,
    out_dim: usize,
    rng: &mut R,
) -> Result<PositiveLinearMap> {
    if in_dim == 0 || out_dim == 0 {
        return Err(GkeError::Config("map dimensions must be positive".into()));
    }
    let same_dim = |what: &str| -> Result<()> {
        if in_dim != out_dim {
            return Err(GkeError::Config(format!("{what} maps M_k to itself; got {in_dim} -> {out_dim}")));
        }
        Ok(())
    };
    match kind {
        MapKind::Isometry => {
            if out_dim > in_dim {
                return Err(GkeError::Config(format!(
                    "isometry needs k2 <= k1, got k1={in_dim}, k2={out_dim}"
                )));
            }
            PositiveLinearMap::isometry(random_isometry(in_dim, out_dim, rng))
        }
        MapKind::Pinching(Some(blocks)) => {
            same_dim("pinching")?;
            PositiveLinearMap::pinching(in_dim, blocks.clone())
        }
        MapKind::Pinching(None) => {
            same_dim("pinching")?;
            let n_blocks = rng.random_range(1..=in_dim);
            let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); n_blocks];
            for i in 0..in_dim {
                let b = if i < n_blocks { i } else { rng.random_range(0..n_blocks) };
                blocks[b].push(i);
            }
            PositiveLinearMap::pinching(in_dim, blocks)
        }
        MapKind::Trace => PositiveLinearMap::trace_state(in_dim, out_dim),
        MapKind::VectorState => {
            if out_dim != 1 {
                return Err(GkeError::Config("vector state has output dimension 1".into()));
            }
            PositiveLinearMap::vector_state(random_unit_vector(in_dim, rng))
        }
        MapKind::Mixture => {
            let w = dirichlet_weights(3, rng);
            let mut parts = Vec::new();
            if in_dim == out_dim {
                parts.push((w[0], random_map_with(&MapKind::Pinching(None), in_dim, out_dim, rng)?));
            } else {
                parts.push((w[0], random_map_with(&MapKind::Isometry, in_dim, out_dim, rng)?));
            }
            parts.push((w[1], PositiveLinearMap::trace_state(in_dim, out_dim)?));
            parts.push((w[2], random_map_with(&MapKind::Isometry, in_dim, out_dim, rng)?));
            PositiveLinearMap::mixture(parts)
        }
    }
}

/// Textual map description from the command line, resolved against the
/// input dimension by [`MapSpec::build`].
///
/// Forms: `identity`, `pinch` (diagonal), `pinch:1|2,3`, `pinch:seed=N`, `isometry:k2=K:seed=N`,
/// `trace`, `trace:k2=K`, `vecstate:seed=N`, `mix:0.3*pinch:1|2,3,0.7*trace`.
#[derive(Clone, Debug, PartialEq)]
pub enum MapSpec {
    Identity,
    Pinch(Vec<Vec<usize>>),
    RandomPinch { seed: u64 },
    Isometry { out_dim: Option<usize>, seed: u64 },
    Trace { out_dim: Option<usize> },
    VectorState { seed: u64 },
    Mix(Vec<(f64, MapSpec)>),
}

impl MapSpec {
    pub fn build(&self, in_dim: usize) -> Result<PositiveLinearMap> {
        match self {
            MapSpec::Identity => Ok(PositiveLinearMap::identity(in_dim)),
            MapSpec::Pinch(blocks) if blocks.is_empty() => {
                PositiveLinearMap::pinching(in_dim, (0..in_dim).map(|i| vec![i]).collect())
            }
            MapSpec::Pinch(blocks) => PositiveLinearMap::pinching(in_dim, blocks.clone()),
            MapSpec::RandomPinch { seed } => {
                make_random_map(&MapKind::Pinching(None), in_dim, in_dim, *seed)
            }
            MapSpec::Isometry { out_dim, seed } => {
                make_random_map(&MapKind::Isometry, in_dim, out_dim.unwrap_or(in_dim), *seed)
            }
            MapSpec::Trace { out_dim } => {
                PositiveLinearMap::trace_state(in_dim, out_dim.unwrap_or(in_dim))
            }
            MapSpec::VectorState { seed } => make_random_map(&MapKind::VectorState, in_dim, 1, *seed),
            MapSpec::Mix(parts) => PositiveLinearMap::mixture(
                parts
                    .iter()
                    .map(|(w, s)| Ok((*w, s.build(in_dim)?)))
                    .collect::<Result<_>>()?,
            ),
        }
    }
}

fn parse_kv(part: &str, key: &str) -> Result<u64> {
    part.strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .ok_or_else(|| GkeError::Parse(format!("expected {key}=N, got {part:?}")))?
        .parse()
        .map_err(|_| GkeError::Parse(format!("invalid integer in {part:?}")))
}

fn is_mix_term_start(s: &str) -> bool {
    match s.split_once('*') {
        Some((w, _)) => w.trim().parse::<f64>().is_ok(),
        None => false,
    }
}

impl FromStr for MapSpec {
    type Err = GkeError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        match (head, rest) {
            ("identity", None) => Ok(MapSpec::Identity),
            ("trace", None) => Ok(MapSpec::Trace { out_dim: None }),
            ("pinch", None) => Ok(MapSpec::Pinch(Vec::new())),
            ("trace", Some(r)) => Ok(MapSpec::Trace {
                out_dim: Some(parse_kv(r, "k2")? as usize),
            }),
            ("pinch", Some(r)) if r.starts_with("seed=") => Ok(MapSpec::RandomPinch {
                seed: parse_kv(r, "seed")?,
            }),
            ("pinch", Some(r)) => {
                let blocks = r
                    .split('|')
                    .map(|b| {
                        b.split(',')
                            .map(|i| match i.trim().parse::<usize>() {
                                Ok(v) if v >= 1 => Ok(v - 1),
                                _ => Err(GkeError::Parse(format!("invalid pinching index {i:?}"))),
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(MapSpec::Pinch(blocks))
            }
            ("isometry", r) => {
                let mut out_dim = None;
                let mut seed = 0;
                for part in r.into_iter().flat_map(|r| r.split(':')) {
                    if part.starts_with("k2") {
                        out_dim = Some(parse_kv(part, "k2")? as usize);
                    } else {
                        seed = parse_kv(part, "seed")?;
                    }
                }
                Ok(MapSpec::Isometry { out_dim, seed })
            }
            ("vecstate", r) => Ok(MapSpec::VectorState {
                seed: match r {
                    Some(r) => parse_kv(r, "seed")?,
                    None => 0,
                },
            }),
            ("mix", Some(r)) => {
                let mut terms: Vec<String> = Vec::new();
                for piece in r.split(',') {
                    match terms.last_mut() {
                        Some(last) if !is_mix_term_start(piece) => {
                            last.push(',');
                            last.push_str(piece);
                        }
                        _ => terms.push(piece.to_string()),
                    }
                }
                let parts = terms
                    .iter()
                    .map(|t| {
                        let (w, spec) = t
                            .split_once('*')
                            .ok_or_else(|| GkeError::Parse(format!("expected W*MAP, got {t:?}")))?;
                        let w: f64 = w
                            .trim()
                            .parse()
                            .map_err(|_| GkeError::Parse(format!("invalid mixture weight {w:?}")))?;
                        Ok((w, spec.parse::<MapSpec>()?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(MapSpec::Mix(parts))
            }
            _ => Err(GkeError::Parse(format!("unknown map description {s:?}"))),
        }
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSpec::Identity => write!(f, "identity"),
            MapSpec::Pinch(blocks) if blocks.is_empty() => write!(f, "pinch"),
            MapSpec::Pinch(blocks) => {
                let b: Vec<String> = blocks
                    .iter()
                    .map(|b| b.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","))
                    .collect();
                write!(f, "pinch:{}", b.join("|"))
            }
            MapSpec::RandomPinch { seed } => write!(f, "pinch:seed={seed}"),
            MapSpec::Isometry { out_dim: Some(k2), seed } => write!(f, "isometry:k2={k2}:seed={seed}"),
            MapSpec::Isometry { out_dim: None, seed } => write!(f, "isometry:seed={seed}"),
            MapSpec::Trace { out_dim: Some(k2) } => write!(f, "trace:k2={k2}"),
            MapSpec::Trace { out_dim: None } => write!(f, "trace"),
            MapSpec::VectorState { seed } => write!(f, "vecstate:seed={seed}"),
            MapSpec::Mix(parts) => {
                let p: Vec<String> = parts.iter().map(|(w, s)| format!("{w}*{s}")).collect();
                write!(f, "mix:{}", p.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(k: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        HermitianMatrix::new({
            let g = CMatrix::from_fn(k, k, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            &g + g.adjoint()
        })
        .unwrap()
    }

    #[test]
    fn pinching_of_identity_is_identity() {
        let p = "pinch:1|2,3".parse::<MapSpec>().unwrap().build(3).unwrap();
        let out = p.apply(&HermitianMatrix::identity(3)).unwrap();
        assert_eq!(out, HermitianMatrix::identity(3));
    }

    #[test]
    fn pinching_zeroes_off_block_entries() {
        let p = PositiveLinearMap::pinching(3, vec![vec![0], vec![1, 2]]).unwrap();
        let a = HermitianMatrix::from_real(3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]).unwrap();
        let out = p.apply(&a).unwrap();
        let expect = HermitianMatrix::from_real(3, &[1.0, 0.0, 0.0, 0.0, 4.0, 5.0, 0.0, 5.0, 6.0]).unwrap();
        assert_eq!(out, expect);
        assert!(PositiveLinearMap::pinching(3, vec![vec![0], vec![0, 1, 2]]).is_err());
        assert!(PositiveLinearMap::pinching(3, vec![vec![0], vec![1]]).is_err());
    }

    #[test]
    fn vector_state_on_basis_vector() {
        let mut e1 = CVector::zeros(3);
        e1[0] = C64::new(1.0, 0.0);
        let phi = PositiveLinearMap::vector_state(e1).unwrap();
        let a = HermitianMatrix::from_real(3, &[7.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
        let out = phi.apply(&a).unwrap();
        assert_eq!(out.dim(), 1);
        assert_eq!(out.entry(0, 0).re, 7.0);
    }

    #[test]
    fn random_isometry_is_unital() {
        for seed in 0..10 {
            let phi = make_random_map(&MapKind::Isometry, 5, 3, seed).unwrap();
            let out = phi.apply(&HermitianMatrix::identity(5)).unwrap();
            assert!((out.as_matrix() - CMatrix::identity(3, 3)).camax() < 1e-10);
        }
        assert!(make_random_map(&MapKind::Isometry, 2, 3, 0).is_err());
    }

    #[test]
    fn seeded_maps_are_deterministic() {
        let a = make_random_map(&MapKind::Isometry, 4, 2, 7).unwrap();
        let b = make_random_map(&MapKind::Isometry, 4, 2, 7).unwrap();
        assert_eq!(a, b);
        let c = make_random_map(&MapKind::Isometry, 4, 2, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mixture_of_pinchings_is_unital() {
        let m = "mix:0.3*pinch:1|2,3,0.7*pinch:1,2|3".parse::<MapSpec>().unwrap();
        let phi = m.build(3).unwrap();
        let out = phi.apply(&HermitianMatrix::identity(3)).unwrap();
        assert!((out.as_matrix() - CMatrix::identity(3, 3)).camax() < 1e-12);
        assert_eq!(m.to_string(), "mix:0.3*pinch:1|2,3,0.7*pinch:1,2|3");
    }

    #[test]
    fn map_spec_parsing() {
        for s in ["identity", "pinch", "trace", "trace:k2=1", "pinch:seed=4", "isometry:k2=2:seed=7", "vecstate:seed=7"] {
            assert_eq!(s.parse::<MapSpec>().unwrap().to_string(), s);
        }
        assert!("pinch:0|1".parse::<MapSpec>().is_err());
        assert!("warp".parse::<MapSpec>().is_err());
        assert!("mix:0.5*trace,0.6*identity".parse::<MapSpec>().unwrap().build(2).is_err());
    }

    #[test]
    fn unital_and_positive_for_every_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let kinds = [
            (MapKind::Isometry, 3),
            (MapKind::Pinching(None), 5),
            (MapKind::Trace, 2),
            (MapKind::VectorState, 1),
            (MapKind::Mixture, 5),
            (MapKind::Mixture, 3),
        ];
        for (kind, out) in kinds {
            let phi = random_map_with(&kind, 5, out, &mut rng).unwrap();
            let id = phi.apply(&HermitianMatrix::identity(5)).unwrap();
            assert!((id.as_matrix() - CMatrix::identity(out, out)).camax() < 1e-10, "{kind:?}");
            for _ in 0..50 {
                let g = CMatrix::from_fn(5, 5, |_, _| {
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                let psd = HermitianMatrix::new(g.adjoint() * &g).unwrap();
                let img = phi.apply(&psd).unwrap();
                assert!(img.eigen().unwrap().values[0] >= -1e-9, "{kind:?}");
            }
            let a = random_hermitian(5, &mut rng);
            let b = random_hermitian(5, &mut rng);
            let lhs = phi.apply(&(&a.scale(0.3) + &b.scale(-1.7))).unwrap();
            let rhs = &phi.apply(&a).unwrap().scale(0.3) + &phi.apply(&b).unwrap().scale(-1.7);
            assert!((lhs.as_matrix() - rhs.as_matrix()).camax() < 1e-10);
        }
    }
}
