//! Generators of the generalized Karcher equation, operator monotone
//! functions, and the scalar constants that bound matrix means.

use std::fmt;
use std::str::FromStr;

use crate::error::{GkeError, Result};
use crate::hermitian::{HermitianMatrix, PositiveDefiniteMatrix, SpectrumBounds};

/// Below this magnitude a power generator is numerically indistinguishable
/// from the logarithm and is rejected.
pub const MIN_POWER_EXPONENT: f64 = 1e-8;

/// A normalized operator monotone function g on (0, ∞) with g(1) = 0 and
/// g'(1) = 1.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    /// log x
    Log,
    /// (x^t − 1)/t for t ∈ [−1, 1] \ {0}
    Power(f64),
    /// x − 1
    Affine,
    /// 1 − x⁻¹
    Harmonic,
    /// p·g(x^{1/p}) for p ≥ 1
    Deformed { base: Box<Generator>, p: f64 },
}

impl Generator {
    pub fn power(t: f64) -> Result<Self> {
        if !t.is_finite() || !(-1.0..=1.0).contains(&t) {
            return Err(GkeError::Range(format!(
                "power generator exponent must lie in [-1, 1], got {t}; outside that range x^t is not operator monotone"
            )));
        }
        if t.abs() < MIN_POWER_EXPONENT {
            return Err(GkeError::Range(format!(
                "power generator exponent {t} is too close to 0; use the \"log\" generator instead"
            )));
        }
        Ok(Generator::Power(t))
    }

    /// g_p(x) = p·g(x^{1/p}).
    pub fn deformed(&self, p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(GkeError::Range(format!(
                "deformation parameter must satisfy p >= 1, got {p}"
            )));
        }
        Ok(Generator::Deformed {
            base: Box::new(self.clone()),
            p,
        })
    }

    /// Representative members used by property tests and default suites.
    pub fn catalog() -> Vec<Generator> {
        vec![
            Generator::Log,
            Generator::Power(0.5),
            Generator::Power(-0.5),
            Generator::Power(0.25),
            Generator::Power(1.0),
            Generator::Power(-1.0),
            Generator::Affine,
            Generator::Harmonic,
        ]
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Generator::Log => x.ln(),
            Generator::Power(t) => (t * x.ln()).exp_m1() / t,
            Generator::Affine => x - 1.0,
            Generator::Harmonic => 1.0 - 1.0 / x,
            Generator::Deformed { base, p } => p * base.eval(x.powf(1.0 / p)),
        }
    }

    /// g'(x).
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Generator::Log => 1.0 / x,
            Generator::Power(t) => x.powf(t - 1.0),
            Generator::Affine => 1.0,
            Generator::Harmonic => 1.0 / (x * x),
            Generator::Deformed { base, p } => {
                let root = x.powf(1.0 / p);
                base.derivative(root) * root / x
            }
        }
    }

    pub fn deriv_at_one(&self) -> f64 {
        1.0
    }

    /// g(A) by functional calculus.
    pub fn apply(&self, a: &PositiveDefiniteMatrix) -> HermitianMatrix {
        a.map(|x| self.eval(x))
    }

    pub fn tag(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Log => write!(f, "log"),
            Generator::Power(t) => write!(f, "power:{t}"),
            Generator::Affine => write!(f, "affine"),
            Generator::Harmonic => write!(f, "harmonic"),
            Generator::Deformed { base, p } => write!(f, "deform:{p}:{base}"),
        }
    }
}

impl FromStr for Generator {
    type Err = GkeError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "log" => return Ok(Generator::Log),
            "affine" => return Ok(Generator::Affine),
            "harmonic" => return Ok(Generator::Harmonic),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("power:") {
            let t = parse_number(rest, "power exponent")?;
            return Generator::power(t);
        }
        if let Some(rest) = s.strip_prefix("deform:") {
            let (p, base) = rest
                .split_once(':')
                .ok_or_else(|| GkeError::Parse(format!("expected deform:P:TAG, got {s:?}")))?;
            let p = parse_number(p, "deformation parameter")?;
            return base.parse::<Generator>()?.deformed(p);
        }
        Err(GkeError::Parse(format!(
            "unknown generator {s:?}; expected log, affine, harmonic or power:T"
        )))
    }
}

/// Builds a catalog generator from its tag and optional parameter.
pub fn make_generator(tag: &str, parameter: Option<f64>) -> Result<Generator> {
    match (tag, parameter) {
        ("power", Some(t)) => Generator::power(t),
        ("power", None) => Err(GkeError::Config("power generator needs an exponent".into())),
        (other, None) => other.parse(),
        (other, Some(_)) => Err(GkeError::Config(format!("generator {other:?} takes no parameter"))),
    }
}

/// g_p(x) = p·g(x^{1/p}).
pub fn deform_generator(g: &Generator, p: f64) -> Result<Generator> {
    g.deformed(p)
}

fn parse_number(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| GkeError::Parse(format!("invalid {what}: {s:?}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// A positive operator monotone (increasing or decreasing) function on (0, ∞).
#[derive(Clone, Debug, PartialEq)]
pub enum MonotoneFunction {
    /// x^s, s ∈ (0, 1]
    Power(f64),
    /// x^{−s}, s ∈ (0, 1]
    InversePower(f64),
    /// 1/(x + c), c > 0
    ShiftInverse(f64),
    /// (ax + b)/(cx + d) with nonnegative coefficients and ad − bc > 0
    Moebius { a: f64, b: f64, c: f64, d: f64 },
}

impl MonotoneFunction {
    pub fn power(s: f64) -> Result<Self> {
        check_unit_exponent(s)?;
        Ok(MonotoneFunction::Power(s))
    }

    pub fn inverse_power(s: f64) -> Result<Self> {
        check_unit_exponent(s)?;
        Ok(MonotoneFunction::InversePower(s))
    }

    pub fn shift_inverse(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(GkeError::Range(format!("shift must be positive, got {c}")));
        }
        Ok(MonotoneFunction::ShiftInverse(c))
    }

    pub fn moebius(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let coeffs = [a, b, c, d];
        if coeffs.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(GkeError::Range("moebius coefficients must be finite and nonnegative".into()));
        }
        if a * d - b * c <= 0.0 {
            return Err(GkeError::Range("moebius map needs ad - bc > 0 to be increasing".into()));
        }
        Ok(MonotoneFunction::Moebius { a, b, c, d })
    }

    pub fn direction(&self) -> Direction {
        match self {
            MonotoneFunction::Power(_) | MonotoneFunction::Moebius { .. } => Direction::Increasing,
            MonotoneFunction::InversePower(_) | MonotoneFunction::ShiftInverse(_) => {
                Direction::Decreasing
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MonotoneFunction::Power(s) => x.powf(s),
            MonotoneFunction::InversePower(s) => x.powf(-s),
            MonotoneFunction::ShiftInverse(c) => 1.0 / (x + c),
            MonotoneFunction::Moebius { a, b, c, d } => (a * x + b) / (c * x + d),
        }
    }

    /// f(A) by functional calculus.
    pub fn apply(&self, a: &PositiveDefiniteMatrix) -> Result<PositiveDefiniteMatrix> {
        a.map_positive(|x| self.eval(x))
    }

    pub fn tag(&self) -> String {
        self.to_string()
    }
}

fn check_unit_exponent(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(GkeError::Range(format!(
            "operator monotone power needs exponent in (0, 1], got {s}"
        )));
    }
    Ok(())
}

impl fmt::Display for MonotoneFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonotoneFunction::Power(s) => write!(f, "monotone:power:{s}"),
            MonotoneFunction::InversePower(s) => write!(f, "monotone:inv:{s}"),
            MonotoneFunction::ShiftInverse(c) => write!(f, "monotone:shiftinv:{c}"),
            MonotoneFunction::Moebius { a, b, c, d } => write!(f, "monotone:moebius:{a},{b},{c},{d}"),
        }
    }
}

impl FromStr for MonotoneFunction {
    type Err = GkeError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let body = s.strip_prefix("monotone:").unwrap_or(s);
        let (kind, arg) = body
            .split_once(':')
            .ok_or_else(|| GkeError::Parse(format!("expected monotone:KIND:ARG, got {s:?}")))?;
        match kind {
            "power" => MonotoneFunction::power(parse_number(arg, "exponent")?),
            "inv" => MonotoneFunction::inverse_power(parse_number(arg, "exponent")?),
            "shiftinv" => MonotoneFunction::shift_inverse(parse_number(arg, "shift")?),
            "moebius" => {
                let v: Vec<f64> = arg
                    .split(',')
                    .map(|p| parse_number(p, "moebius coefficient"))
                    .collect::<Result<_>>()?;
                if v.len() != 4 {
                    return Err(GkeError::Parse(format!("moebius needs 4 coefficients, got {}", v.len())));
                }
                MonotoneFunction::moebius(v[0], v[1], v[2], v[3])
            }
            other => Err(GkeError::Parse(format!("unknown monotone function kind {other:?}"))),
        }
    }
}

/// K(h, 2) = (h + 1)²/(4h).
pub fn kantorovich_constant(h: f64) -> Result<f64> {
    if !(h >= 1.0) || !h.is_finite() {
        return Err(GkeError::Range(format!(
            "Kantorovich ratio must satisfy h >= 1 (use h = M/m), got {h}"
        )));
    }
    Ok((h + 1.0) * (h + 1.0) / (4.0 * h))
}

/// K(m, M, p), the constant bounding Σwᵢ Aᵢ^p by (Σwᵢ Aᵢ)^p for spectra in
/// [m, M]. Evaluated through expm1 in terms of h = M/m, which is
/// algebraically identical and stays accurate as p → 1.
pub fn generalized_kantorovich(m: f64, big_m: f64, p: f64) -> Result<f64> {
    let bounds = SpectrumBounds::new(m, big_m)?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(GkeError::Range(format!("exponent must satisfy p >= 1, got {p}")));
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let h = bounds.ratio();
    let l = h.ln();
    // mM^p − Mm^p, M^p − m^p and M − m, each divided by the matching power of m.
    let cross = h * ((p - 1.0) * l).exp_m1();
    let spread_p = (p * l).exp_m1();
    let spread = l.exp_m1();
    let lead = cross / ((p - 1.0) * spread);
    let inner = (p - 1.0) / p * spread_p / cross;
    Ok(lead * inner.powf(p))
}

fn chord(m: f64, big_m: f64, fm: f64, fbig: f64, t: f64) -> f64 {
    ((big_m - t) * fm + (t - m) * fbig) / (big_m - m)
}

const MU_GRID: usize = 1024;
const GOLDEN_TOL: f64 = 1e-10;

/// μ(m, M, f, g) = max over t ∈ [m, M] of L_f(t)/g(t), where L_f is the
/// chord of f through (m, f(m)) and (M, f(M)).
pub fn mu_constant(
    m: f64,
    big_m: f64,
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
) -> Result<f64> {
    SpectrumBounds::new(m, big_m)?;
    let (fm, fbig) = (f(m), f(big_m));
    let objective = |t: f64| chord(m, big_m, fm, fbig, t) / g(t);
    let step = (big_m - m) / (MU_GRID - 1) as f64;
    let grid: Vec<f64> = (0..MU_GRID)
        .map(|i| if i == MU_GRID - 1 { big_m } else { m + step * i as f64 })
        .collect();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &t) in grid.iter().enumerate() {
        let gt = g(t);
        if !(gt > 0.0) || !gt.is_finite() {
            return Err(GkeError::Range(format!("g must be positive on [m, M]; g({t}) = {gt}")));
        }
        let v = objective(t);
        if v > best.1 {
            best = (i, v);
        }
    }
    let lo = grid[best.0.saturating_sub(1)];
    let hi = grid[(best.0 + 1).min(MU_GRID - 1)];
    let (_, refined) = golden_section_max(&objective, lo, hi, GOLDEN_TOL);
    Ok(best.1.max(refined))
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x).max(fc).max(fd))
}

/// A convex function on [m, M] paired with its chord.
pub struct ChordData<F: Fn(f64) -> f64> {
    lower: f64,
    upper: f64,
    f: F,
}

impl<F: Fn(f64) -> f64> ChordData<F> {
    /// Fails when f exceeds its chord anywhere on a sample grid.
    pub fn new(lower: f64, upper: f64, f: F) -> Result<Self> {
        SpectrumBounds::new(lower, upper)?;
        let data = Self { lower, upper, f };
        for i in 0..=256 {
            let t = lower + (upper - lower) * i as f64 / 256.0;
            let (ft, lt) = ((data.f)(t), data.chord(t));
            if ft > lt + 1e-12 * (1.0 + lt.abs()) {
                return Err(GkeError::Precondition(format!(
                    "function is not convex on [{lower}, {upper}]: f({t}) = {ft} > chord {lt}"
                )));
            }
        }
        Ok(data)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    /// L(t) = ((M − t)f(m) + (t − m)f(M))/(M − m).
    pub fn chord(&self, t: f64) -> f64 {
        chord(self.lower, self.upper, (self.f)(self.lower), (self.f)(self.upper), t)
    }

    /// f(m)^{(M−t)/(M−m)}·f(M)^{(t−m)/(M−m)}, which sits between f and L
    /// when f is log-convex.
    pub fn geometric_interpolant(&self, t: f64) -> f64 {
        let s = (t - self.lower) / (self.upper - self.lower);
        (self.f)(self.lower).powf(1.0 - s) * (self.f)(self.upper).powf(s)
    }
}

/// r(t) = M^{(1/m − 1/t)/(1/m − 1/M)} · m^{(1/t − 1/M)/(1/m − 1/M)}.
pub fn refinement_scalar(bounds: &SpectrumBounds, t: f64) -> f64 {
    let (m, big_m) = (bounds.lower(), bounds.upper());
    let denom = 1.0 / m - 1.0 / big_m;
    let a = (1.0 / m - 1.0 / t) / denom;
    let b = (1.0 / t - 1.0 / big_m) / denom;
    (a * big_m.ln() + b * m.ln()).exp()
}

/// r(A) for mI ≤ A ≤ MI, where r is [`refinement_scalar`].
pub fn refinement_midpoint(
    bounds: &SpectrumBounds,
    a: &PositiveDefiniteMatrix,
) -> Result<PositiveDefiniteMatrix> {
    if !bounds.contains(a) {
        return Err(GkeError::Precondition(format!(
            "spectrum [{}, {}] not inside [{}, {}]",
            a.eig_min(),
            a.eig_max(),
            bounds.lower(),
            bounds.upper()
        )));
    }
    a.map_positive(|t| refinement_scalar(bounds, t))
}

/// t + m^{(t−m)/(M−m)}·M^{(M−t)/(M−m)}, bounded above by m + M on [m, M].
pub fn reflected_geometric_sum(t: f64, m: f64, big_m: f64) -> Result<f64> {
    SpectrumBounds::new(m, big_m)?;
    if !(m..=big_m).contains(&t) {
        return Err(GkeError::Range(format!("t = {t} lies outside [{m}, {big_m}]")));
    }
    let s = (t - m) / (big_m - m);
    Ok(t + m.powf(s) * big_m.powf(1.0 - s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::CMatrix;

    #[test]
    fn catalog_examples() {
        assert_eq!(make_generator("log", None).unwrap().eval(1.0), 0.0);
        assert!((make_generator("power", Some(1.0)).unwrap().eval(3.0) - 2.0).abs() < 1e-15);
        assert!((make_generator("power", Some(-1.0)).unwrap().eval(2.0) - 0.5).abs() < 1e-15);
        for g in Generator::catalog() {
            assert_eq!(g.eval(1.0), 0.0, "{g}");
        }
    }

    #[test]
    fn power_exponent_validation() {
        assert!(matches!(Generator::power(0.0), Err(GkeError::Range(msg)) if msg.contains("log")));
        assert!(matches!(Generator::power(1e-9), Err(GkeError::Range(_))));
        assert!(matches!(Generator::power(1.5), Err(GkeError::Range(_))));
        assert!(matches!(Generator::power(-1.01), Err(GkeError::Range(_))));
    }

    #[test]
    fn tags_round_trip() {
        for tag in ["log", "power:0.5", "power:-0.25", "affine", "harmonic", "deform:2:log"] {
            assert_eq!(tag.parse::<Generator>().unwrap().tag(), tag);
        }
        for tag in [
            "monotone:power:0.5",
            "monotone:inv:1",
            "monotone:shiftinv:2",
            "monotone:moebius:1,0,1,1",
        ] {
            assert_eq!(tag.parse::<MonotoneFunction>().unwrap().tag(), tag);
        }
        assert!("power:x".parse::<Generator>().is_err());
        assert!("cube".parse::<Generator>().is_err());
        assert!("monotone:power:2".parse::<MonotoneFunction>().is_err());
        assert!("monotone:moebius:0,1,1,0".parse::<MonotoneFunction>().is_err());
    }

    #[test]
    fn deformation_examples() {
        let xs = [0.01, 0.3, 1.0, 2.5, 40.0];
        let g = Generator::Power(0.6);
        let same = g.deformed(1.0).unwrap();
        let log2 = Generator::Log.deformed(2.0).unwrap();
        let halved = g.deformed(2.0).unwrap();
        for &x in &xs {
            assert!((same.eval(x) - g.eval(x)).abs() < 1e-14);
            assert!((log2.eval(x) - x.ln()).abs() < 1e-13);
            assert!((halved.eval(x) - Generator::Power(0.3).eval(x)).abs() < 1e-12);
        }
        assert!(matches!(g.deformed(0.5), Err(GkeError::Range(_))));
    }

    #[test]
    fn kantorovich_examples() {
        assert_eq!(kantorovich_constant(1.0).unwrap(), 1.0);
        assert_eq!(kantorovich_constant(4.0).unwrap(), 1.5625);
        assert_eq!(kantorovich_constant(2.0).unwrap(), 9.0 / 8.0);
        assert!(kantorovich_constant(0.5).is_err());
    }

    #[test]
    fn generalized_kantorovich_examples() {
        let near_one = generalized_kantorovich(1.0, 3.0, 1.0 + 1e-6).unwrap();
        assert!((near_one - 1.0).abs() < 1e-5);
        assert_eq!(generalized_kantorovich(1.0, 3.0, 1.0).unwrap(), 1.0);
        assert!((generalized_kantorovich(1.0, 2.0, 2.0).unwrap() - 9.0 / 8.0).abs() < 1e-14);
        assert!(generalized_kantorovich(2.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn mu_constant_inverse_matches_kantorovich() {
        let inv = |t: f64| 1.0 / t;
        let mu = mu_constant(1.0, 2.0, inv, inv).unwrap();
        assert!((mu - 9.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn mu_constant_affine_is_one() {
        let f = |t: f64| 2.0 * t + 1.0;
        assert!((mu_constant(0.5, 7.0, f, f).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mu_constant_square_against_brute_force() {
        let sq = |t: f64| t * t;
        let mu = mu_constant(1.0, 3.0, sq, sq).unwrap();
        // Brute-force oracle over 10^6 points of (4t − 3)/t².
        let n = 1_000_000;
        let brute = (0..=n)
            .map(|i| {
                let t = 1.0 + 2.0 * i as f64 / n as f64;
                (4.0 * t - 3.0) / (t * t)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((mu - brute).abs() <= 1e-8 * brute, "{mu} vs {brute}");
        assert!(mu >= brute - 1e-15);
    }

    #[test]
    fn mu_constant_rejects_vanishing_g() {
        assert!(mu_constant(1.0, 3.0, |t| t, |t| t - 2.0).is_err());
    }

    #[test]
    fn refinement_endpoint_and_diagonal_cases() {
        let b = SpectrumBounds::new(1.0, 9.0).unwrap();
        let low = PositiveDefiniteMatrix::scaled_identity(3, 1.0).unwrap();
        let high = PositiveDefiniteMatrix::scaled_identity(3, 9.0).unwrap();
        let r_low = refinement_midpoint(&b, &low).unwrap();
        let r_high = refinement_midpoint(&b, &high).unwrap();
        assert!((r_low.as_matrix() - CMatrix::identity(3, 3)).camax() < 1e-13);
        assert!((r_high.as_matrix() - CMatrix::identity(3, 3).scale(9.0)).camax() < 1e-12);

        let a = PositiveDefiniteMatrix::from_real_diagonal(&[1.0, 9.0, 3.0]).unwrap();
        let r = refinement_midpoint(&b, &a).unwrap();
        // Scalar oracle: exponents (1 − 1/3)/(1 − 1/9) = 3/4 and 1/4.
        let mid = 9.0_f64.powf(0.75) * 1.0_f64.powf(0.25);
        let expected = [1.0, 9.0, mid];
        for (i, e) in expected.iter().enumerate() {
            assert!((r.entry(i, i).re - e).abs() < 1e-12);
        }

        let outside = PositiveDefiniteMatrix::from_real_diagonal(&[0.5, 2.0]).unwrap();
        assert!(matches!(refinement_midpoint(&b, &outside), Err(GkeError::Precondition(_))));
    }

    #[test]
    fn reflected_geometric_sum_examples() {
        assert!((reflected_geometric_sum(1.0, 1.0, 4.0).unwrap() - 5.0).abs() < 1e-15);
        assert!((reflected_geometric_sum(4.0, 1.0, 4.0).unwrap() - 5.0).abs() < 1e-15);
        assert!((reflected_geometric_sum(2.5, 1.0, 4.0).unwrap() - 4.5).abs() < 1e-15);
        assert!(reflected_geometric_sum(5.0, 1.0, 4.0).is_err());
    }

    #[test]
    fn chord_data_rejects_concave() {
        assert!(ChordData::new(1.0, 4.0, f64::sqrt).is_err());
        let c = ChordData::new(1.0, 4.0, |t: f64| 1.0 / t).unwrap();
        assert_eq!(c.chord(1.0), 1.0);
        assert_eq!(c.chord(4.0), 0.25);
    }

    #[test]
    fn monotone_directions() {
        let fs = [
            MonotoneFunction::power(0.5).unwrap(),
            MonotoneFunction::inverse_power(0.5).unwrap(),
            MonotoneFunction::shift_inverse(1.0).unwrap(),
            MonotoneFunction::moebius(1.0, 0.0, 1.0, 1.0).unwrap(),
        ];
        for f in &fs {
            let mut prev = f.eval(1e-3);
            for i in 1..200 {
                let x = 1e-3 * 1.07_f64.powi(i);
                let v = f.eval(x);
                assert!(v > 0.0);
                match f.direction() {
                    Direction::Increasing => assert!(v >= prev),
                    Direction::Decreasing => assert!(v <= prev),
                }
                prev = v;
            }
        }
    }
}
