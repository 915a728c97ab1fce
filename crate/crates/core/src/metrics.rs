//! Vectors and distance functions.
//!
//! Every distance is available two ways: as a checked free function
//! ([`euclidean`], [`jsd_distance`], ...) that validates its arguments, and
//! through [`Metric`], whose [`Metric::distance`] is the unchecked kernel used
//! in the search loops once points have been validated with
//! [`Metric::validate`].
//!
//! A metric is *Hilbert-safe* when any four points of its space embed
//! isometrically in three-dimensional Euclidean space. Only Hilbert-safe
//! metrics may be searched with [`crate::geometry::hilbert_exclusion`].

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use crate::error::{input, Error, Result};

/// Largest accepted deviation of a simplex vector's sum from 1.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Rounding residue below zero that is silently clamped before a square root.
const SQRT_CLAMP: f64 = 1e-12;

/// A dense point with finite components and at least one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return input("vector must have at least one component");
        }
        if let Some(i) = components.iter().position(|c| !c.is_finite()) {
            return input(format!("component {i} is not finite"));
        }
        Ok(Vector(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

fn same_dim(v: &[f64], w: &[f64]) -> Result<()> {
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch {
            left: v.len(),
            right: w.len(),
        });
    }
    if v.is_empty() {
        return input("vectors must have at least one component");
    }
    Ok(())
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|c| !c.is_finite()) {
        Some(i) => input(format!("component {i} is not finite")),
        None => Ok(()),
    }
}

fn check_simplex(v: &[f64]) -> Result<()> {
    check_finite(v)?;
    if let Some(i) = v.iter().position(|&c| c < 0.0) {
        return input(format!("component {i} is negative ({})", v[i]));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return input(format!("components sum to {sum}, expected 1"));
    }
    Ok(())
}

fn check_nonzero(v: &[f64]) -> Result<()> {
    check_finite(v)?;
    if v.iter().all(|&c| c == 0.0) {
        return input("zero vector has no direction");
    }
    Ok(())
}

fn clamped_sqrt(x: f64) -> f64 {
    assert!(
        x >= -SQRT_CLAMP,
        "negative radicand {x}: distance formula applied outside its domain"
    );
    x.max(0.0).sqrt()
}

// ---- kernels: no validation, inputs assumed to be of equal length ----

fn euclidean_kernel(v: &[f64], w: &[f64]) -> f64 {
    v.iter()
        .zip(w)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn manhattan_kernel(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| (a - b).abs()).sum()
}

/// `x log2(2x / s)`, with the `x = 0` limit taken as 0.
#[inline]
fn kl_term(x: f64, s: f64) -> f64 {
    if x > 0.0 {
        x * (2.0 * x / s).log2()
    } else {
        0.0
    }
}

// JSD = 1 - ½ Σ (h(v)+h(w)-h(v+w)), h(x) = -x log2 x. For vectors summing to 1
// this equals ½ Σ [v log2(2v/(v+w)) + w log2(2w/(v+w))], which avoids the
// cancellation in `1 - ...` and is exactly zero on identical inputs.
fn jsd_kernel(v: &[f64], w: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in v.iter().zip(w) {
        let s = a + b;
        if s > 0.0 {
            acc += kl_term(a, s) + kl_term(b, s);
        }
    }
    clamped_sqrt(0.5 * acc)
}

fn triangular_kernel(v: &[f64], w: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in v.iter().zip(w) {
        let s = a + b;
        if s > 0.0 {
            let d = a - b;
            acc += d * d / s;
        }
    }
    clamped_sqrt(acc)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

// Euclidean distance between the normalised vectors, scaled by 1/√2.
fn cosine_sqrt_kernel(v: &[f64], w: &[f64]) -> f64 {
    let (nv, nw) = (norm(v), norm(w));
    v.iter()
        .zip(w)
        .map(|(a, b)| {
            let d = a / nv - b / nw;
            d * d
        })
        .sum::<f64>()
        .sqrt()
        / SQRT_2
}

fn cosine_similarity(v: &[f64], w: &[f64]) -> f64 {
    let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    let nv: f64 = v.iter().map(|c| c * c).sum();
    let nw: f64 = w.iter().map(|c| c * c).sum();
    (dot / (nv * nw).sqrt()).clamp(-1.0, 1.0)
}

fn cosine_angle_kernel(v: &[f64], w: &[f64]) -> f64 {
    1.0 - cosine_similarity(v, w).acos() / (2.0 * PI)
}

// ---- checked public distance functions ----

/// Straight-line distance.
pub fn euclidean(v: &[f64], w: &[f64]) -> Result<f64> {
    same_dim(v, w)?;
    check_finite(v)?;
    check_finite(w)?;
    Ok(euclidean_kernel(v, w))
}

/// Sum of absolute component differences.
pub fn manhattan(v: &[f64], w: &[f64]) -> Result<f64> {
    same_dim(v, w)?;
    check_finite(v)?;
    check_finite(w)?;
    Ok(manhattan_kernel(v, w))
}

/// Square root of the Manhattan distance; unlike Manhattan itself this
/// embeds in Hilbert space.
pub fn sqrt_manhattan(v: &[f64], w: &[f64]) -> Result<f64> {
    manhattan(v, w).map(f64::sqrt)
}

/// Jensen-Shannon distance (square root of the base-2 divergence) between two
/// probability vectors. Lies in `[0, 1]`.
pub fn jsd_distance(v: &[f64], w: &[f64]) -> Result<f64> {
    same_dim(v, w)?;
    check_simplex(v)?;
    check_simplex(w)?;
    Ok(jsd_kernel(v, w))
}

/// Square root of the triangular discrimination `Σ (v-w)²/(v+w)` between two
/// probability vectors. Lies in `[0, √2]`.
pub fn triangular_distance(v: &[f64], w: &[f64]) -> Result<f64> {
    same_dim(v, w)?;
    check_simplex(v)?;
    check_simplex(w)?;
    Ok(triangular_kernel(v, w))
}

/// `sqrt(1 - cos θ)`, computed as the Euclidean distance between the
/// normalised vectors divided by √2.
pub fn cosine_sqrt_distance(v: &[f64], w: &[f64]) -> Result<f64> {
    same_dim(v, w)?;
    check_nonzero(v)?;
    check_nonzero(w)?;
    Ok(cosine_sqrt_kernel(v, w))
}

/// `1 - acos(cos θ) / 2π`.
///
/// Evaluated exactly as written, which gives 1 for parallel vectors. It is
/// kept as the example of a function that does not embed in Hilbert space and
/// is never treated as Hilbert-safe.
pub fn cosine_angle_distance(v: &[f64], w: &[f64]) -> Result<f64> {
    same_dim(v, w)?;
    check_nonzero(v)?;
    check_nonzero(w)?;
    Ok(cosine_angle_kernel(v, w))
}

/// Scales a non-negative vector so its components sum to 1.
pub fn normalize_to_simplex(v: &[f64]) -> Result<Vector> {
    if v.is_empty() {
        return input("vector must have at least one component");
    }
    check_finite(v)?;
    if let Some(i) = v.iter().position(|&c| c < 0.0) {
        return input(format!("component {i} is negative ({})", v[i]));
    }
    let sum: f64 = v.iter().sum();
    if sum <= 0.0 {
        return input("all-zero vector cannot be normalised");
    }
    Vector::new(v.iter().map(|c| c / sum).collect())
}

/// A distance function together with the properties the index relies on.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean,
    JensenShannon,
    Triangular,
    CosineSqrt,
    CosineAngle,
    SqrtManhattan,
    Manhattan,
    /// `base(x, y)^alpha`, built by [`power_transform`].
    Power { base: Box<Metric>, alpha: f64 },
}

impl Metric {
    /// Every metric with a fixed name, in display order.
    pub const NAMED: [Metric; 7] = [
        Metric::Euclidean,
        Metric::JensenShannon,
        Metric::Triangular,
        Metric::CosineSqrt,
        Metric::CosineAngle,
        Metric::SqrtManhattan,
        Metric::Manhattan,
    ];

    /// Stable identifier: `euc`, `jsd`, `tri`, `cos_sqrt`, `cos_angle`,
    /// `sqrt_man`, `man` or `pow:<base>:<alpha>`.
    pub fn name(&self) -> String {
        match self {
            Metric::Euclidean => "euc".into(),
            Metric::JensenShannon => "jsd".into(),
            Metric::Triangular => "tri".into(),
            Metric::CosineSqrt => "cos_sqrt".into(),
            Metric::CosineAngle => "cos_angle".into(),
            Metric::SqrtManhattan => "sqrt_man".into(),
            Metric::Manhattan => "man".into(),
            Metric::Power { base, alpha } => format!("pow:{}:{}", base.name(), alpha),
        }
    }

    /// Whether any four points of the space embed in 3-D Euclidean space,
    /// which is what makes Hilbert exclusion sound.
    pub fn hilbert_safe(&self) -> bool {
        match self {
            Metric::Euclidean
            | Metric::JensenShannon
            | Metric::Triangular
            | Metric::CosineSqrt
            | Metric::SqrtManhattan => true,
            Metric::CosineAngle | Metric::Manhattan => false,
            Metric::Power { alpha, .. } => *alpha <= 0.5,
        }
    }

    /// Whether inputs must be probability vectors.
    pub fn requires_simplex(&self) -> bool {
        match self {
            Metric::JensenShannon | Metric::Triangular => true,
            Metric::Power { base, .. } => base.requires_simplex(),
            _ => false,
        }
    }

    /// Whether the function satisfies the metric axioms. `cos_angle` as
    /// defined is 1 on identical inputs, so it does not.
    pub fn is_proper(&self) -> bool {
        match self {
            Metric::CosineAngle => false,
            Metric::Power { base, .. } => base.is_proper(),
            _ => true,
        }
    }

    fn requires_nonzero(&self) -> bool {
        match self {
            Metric::CosineSqrt | Metric::CosineAngle => true,
            Metric::Power { base, .. } => base.requires_nonzero(),
            _ => false,
        }
    }

    /// Checks that `v` is a legal point for this metric.
    pub fn validate(&self, v: &[f64]) -> Result<()> {
        if v.is_empty() {
            return input("vector must have at least one component");
        }
        if self.requires_simplex() {
            check_simplex(v)
        } else if self.requires_nonzero() {
            check_nonzero(v)
        } else {
            check_finite(v)
        }
    }

    /// Distance between two points already accepted by [`Metric::validate`].
    #[inline]
    pub fn distance(&self, v: &[f64], w: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), w.len());
        match self {
            Metric::Euclidean => euclidean_kernel(v, w),
            Metric::JensenShannon => jsd_kernel(v, w),
            Metric::Triangular => triangular_kernel(v, w),
            Metric::CosineSqrt => cosine_sqrt_kernel(v, w),
            Metric::CosineAngle => cosine_angle_kernel(v, w),
            Metric::SqrtManhattan => manhattan_kernel(v, w).sqrt(),
            Metric::Manhattan => manhattan_kernel(v, w),
            Metric::Power { base, alpha } => {
                let d = base.distance(v, w);
                if *alpha == 0.5 {
                    d.sqrt()
                } else if *alpha == 1.0 {
                    d
                } else {
                    d.powf(*alpha)
                }
            }
        }
    }

    /// Validates both arguments, then evaluates the distance.
    pub fn checked_distance(&self, v: &[f64], w: &[f64]) -> Result<f64> {
        same_dim(v, w)?;
        self.validate(v)?;
        self.validate(w)?;
        Ok(self.distance(v, w))
    }
}

/// Raises every distance of `base` to the power `alpha ∈ (0, 1]`.
///
/// Exponents up to ½ make any metric Hilbert-safe. Larger exponents are
/// reported unsafe whatever the base, since nothing is known in between.
pub fn power_transform(base: Metric, alpha: f64) -> Result<Metric> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return input(format!("exponent {alpha} outside (0, 1]"));
    }
    if !base.is_proper() {
        return input(format!("{} is not a proper metric", base.name()));
    }
    Ok(Metric::Power {
        base: Box::new(base),
        alpha,
    })
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("pow:") {
            // the base may itself be a power metric, so split on the last ':'
            let (base, alpha) = rest
                .rsplit_once(':')
                .ok_or_else(|| Error::Input(format!("expected pow:<base>:<alpha>, got {s:?}")))?;
            let alpha: f64 = alpha
                .parse()
                .map_err(|_| Error::Input(format!("bad exponent in {s:?}")))?;
            return power_transform(base.parse()?, alpha);
        }
        Metric::NAMED
            .iter()
            .find(|m| m.name() == s)
            .cloned()
            .ok_or_else(|| Error::Input(format!("unknown metric {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn vector_rejects_bad_components() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert_eq!(Vector::new(vec![1.0, 2.0]).unwrap().dim(), 2);
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let d = euclidean(&[-5.0, 0.0], &[-1.1, 4.0]).unwrap();
        assert!(close(d, 5.586591089385369, 1e-12), "{d}");
        assert!(matches!(
            euclidean(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn jsd_examples() {
        let v = [0.5, 0.5];
        assert_eq!(jsd_distance(&v, &v).unwrap(), 0.0);
        assert_eq!(jsd_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        // 40-digit evaluation of the entropy-sum definition
        let d = jsd_distance(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!(close(d, 0.22089576884901741, 1e-14), "{d}");
    }

    #[test]
    fn jsd_rejects_non_simplex() {
        assert!(jsd_distance(&[0.5, 0.6], &[0.5, 0.5]).is_err());
        assert!(jsd_distance(&[1.5, -0.5], &[0.5, 0.5]).is_err());
        // within tolerance is fine
        assert!(jsd_distance(&[0.5, 0.5 + 5e-10], &[0.5, 0.5]).is_ok());
    }

    #[test]
    fn jsd_matches_entropy_sum_form() {
        fn h(x: f64) -> f64 {
            if x > 0.0 {
                -x * x.log2()
            } else {
                0.0
            }
        }
        let pairs: [([f64; 3], [f64; 3]); 3] = [
            ([0.2, 0.3, 0.5], [0.6, 0.1, 0.3]),
            ([1.0, 0.0, 0.0], [0.0, 0.5, 0.5]),
            ([0.1, 0.8, 0.1], [0.15, 0.7, 0.15]),
        ];
        for (v, w) in pairs {
            let direct: f64 =
                1.0 - 0.5 * v.iter().zip(&w).map(|(&a, &b)| h(a) + h(b) - h(a + b)).sum::<f64>();
            let d = jsd_distance(&v, &w).unwrap();
            assert!(close(d * d, direct, 1e-14), "{} vs {direct}", d * d);
        }
    }

    #[test]
    fn triangular_examples() {
        let v = [0.1, 0.9];
        assert_eq!(triangular_distance(&v, &v).unwrap(), 0.0);
        assert_eq!(triangular_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), SQRT_2);
        let d = triangular_distance(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!(close(d, 0.36514837167011074, 1e-14), "{d}");
        assert!(triangular_distance(&[-0.5, 1.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn cosine_sqrt_examples() {
        let v = [0.3, 1.2, 2.0];
        let v2: Vec<f64> = v.iter().map(|c| 2.0 * c).collect();
        assert!(cosine_sqrt_distance(&v, &v2).unwrap() < 1e-15);
        assert!(close(cosine_sqrt_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0, 1e-15));
        let d = cosine_sqrt_distance(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!(close(d, 0.54119610014619698, 1e-14), "{d}");
        assert!(cosine_sqrt_distance(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn cosine_angle_examples() {
        let v = [0.3, 1.2];
        assert!(close(cosine_angle_distance(&v, &[0.6, 2.4]).unwrap(), 1.0, 1e-15));
        assert!(close(cosine_angle_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.75, 1e-15));
        assert!(close(cosine_angle_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 0.5, 1e-15));
        assert!(cosine_angle_distance(&[0.0], &[1.0]).is_err());
        assert!(!Metric::CosineAngle.hilbert_safe());
    }

    #[test]
    fn sqrt_manhattan_examples() {
        assert_eq!(sqrt_manhattan(&[2.0, 5.0], &[2.0, 5.0]).unwrap(), 0.0);
        assert_eq!(sqrt_manhattan(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), SQRT_2);
        assert_eq!(sqrt_manhattan(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 7f64.sqrt());
    }

    #[test]
    fn power_transform_rules() {
        let id = power_transform(Metric::Euclidean, 1.0).unwrap();
        assert!(!id.hilbert_safe());
        assert_eq!(id.distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);

        let half = power_transform(Metric::Manhattan, 0.5).unwrap();
        assert!(half.hilbert_safe());
        assert!(!half.requires_simplex());
        let (a, b) = ([0.1, 0.7, 0.3], [0.9, 0.2, 0.25]);
        assert_eq!(half.distance(&a, &b), sqrt_manhattan(&a, &b).unwrap());

        let tri = power_transform(Metric::Triangular, 0.3).unwrap();
        assert!(tri.requires_simplex() && tri.hilbert_safe());

        assert!(power_transform(Metric::Euclidean, 0.0).is_err());
        assert!(power_transform(Metric::Euclidean, 1.5).is_err());
        assert!(power_transform(Metric::Euclidean, f64::NAN).is_err());
        assert!(power_transform(Metric::CosineAngle, 0.5).is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_to_simplex(&[1.0, 1.0, 2.0]).unwrap().as_slice(), &[0.25, 0.25, 0.5]);
        assert_eq!(normalize_to_simplex(&[1.0]).unwrap().as_slice(), &[1.0]);
        let v = normalize_to_simplex(&[0.2, 0.3]).unwrap();
        assert!(close(v[0], 0.4, 1e-15) && close(v[1], 0.6, 1e-15));
        assert!(normalize_to_simplex(&[0.0, 0.0]).is_err());
        assert!(normalize_to_simplex(&[1.0, -0.1]).is_err());
    }

    #[test]
    fn names_round_trip() {
        for m in Metric::NAMED {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        let p: Metric = "pow:man:0.5".parse().unwrap();
        assert_eq!(p, power_transform(Metric::Manhattan, 0.5).unwrap());
        assert_eq!(p.name(), "pow:man:0.5");
        let nested: Metric = "pow:pow:euc:0.5:0.5".parse().unwrap();
        assert!(nested.hilbert_safe());
        assert!("cheb".parse::<Metric>().is_err());
        assert!("pow:euc".parse::<Metric>().is_err());
        assert!("pow:euc:2".parse::<Metric>().is_err());
    }

    #[test]
    fn validate_by_metric() {
        assert!(Metric::Euclidean.validate(&[-3.0, 2.0]).is_ok());
        assert!(Metric::JensenShannon.validate(&[0.5, 0.6]).is_err());
        assert!(Metric::CosineSqrt.validate(&[0.0, 0.0]).is_err());
        assert!(Metric::Euclidean.validate(&[]).is_err());
        assert!(Metric::Euclidean.checked_distance(&[1.0], &[1.0, 2.0]).is_err());
    }
}
