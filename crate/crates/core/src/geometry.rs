//! Exclusion predicates and small Euclidean embeddings.
//!
//! All predicates work on distances rather than points, so they apply to any
//! metric. Which predicates are *sound* depends on the metric:
//! [`hyperbolic_exclusion`] and [`pivot_exclusion`] are valid in every metric
//! space, [`hilbert_exclusion`] only where four points always embed in
//! three-dimensional Euclidean space (see [`four_point_check`]).

use crate::error::{input, Result};

/// Slack allowed when checking triangle inequalities on measured distances,
/// relative to unit-scale distances.
pub const TRIANGLE_TOLERANCE: f64 = 1e-9;

/// Smallest eigenvalue still accepted as non-negative by [`four_point_check`],
/// for unit-scale distances.
pub const EIGEN_TOLERANCE: f64 = 1e-9;

fn scale_of(ds: &[f64]) -> f64 {
    ds.iter().fold(1.0_f64, |m, &d| m.max(d))
}

fn check_distances(ds: &[f64]) -> Result<()> {
    match ds.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        Some(d) => input(format!("distance {d} is not a finite non-negative number")),
        None => Ok(()),
    }
}

fn satisfies_triangle(a: f64, b: f64, c: f64) -> bool {
    let tol = TRIANGLE_TOLERANCE * scale_of(&[a, b, c]);
    a <= b + c + tol && b <= a + c + tol && c <= a + b + tol
}

/// Distances from a query to two pivots, and between the pivots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotPair {
    pub d_q_p1: f64,
    pub d_q_p2: f64,
    pub d_p1_p2: f64,
}

impl PivotPair {
    /// Builds a pivot pair, checking the three distances could come from a
    /// metric space.
    pub fn new(d_q_p1: f64, d_q_p2: f64, d_p1_p2: f64) -> Result<Self> {
        check_distances(&[d_q_p1, d_q_p2, d_p1_p2])?;
        if !satisfies_triangle(d_q_p1, d_q_p2, d_p1_p2) {
            return input(format!(
                "distances ({d_q_p1}, {d_q_p2}, {d_p1_p2}) violate the triangle inequality"
            ));
        }
        Ok(PivotPair {
            d_q_p1,
            d_q_p2,
            d_p1_p2,
        })
    }
}

/// Which half of a two-pivot partition can be skipped.
///
/// The side of `p1` holds the points strictly closer to `p1`; the side of
/// `p2` holds the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExclusionDecision {
    pub exclude_side_of_p1: bool,
    pub exclude_side_of_p2: bool,
}

impl ExclusionDecision {
    pub const NONE: ExclusionDecision = ExclusionDecision {
        exclude_side_of_p1: false,
        exclude_side_of_p2: false,
    };

    /// `signed` is positive when the query leans towards `p2`.
    #[inline]
    fn from_signed(signed: f64, t: f64) -> Self {
        ExclusionDecision {
            exclude_side_of_p1: signed > t,
            exclude_side_of_p2: -signed > t,
        }
    }

    pub fn any(&self) -> bool {
        self.exclude_side_of_p1 || self.exclude_side_of_p2
    }
}

/// The two hyperplane exclusion rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exclusion {
    /// `|d(q,p1) - d(q,p2)| > 2t`; valid in any metric space.
    Hyperbolic,
    /// `|d(q,p1)² - d(q,p2)²| / 2d(p1,p2) > t`; valid only for Hilbert-safe
    /// metrics.
    Hilbert,
}

impl Exclusion {
    pub fn name(&self) -> &'static str {
        match self {
            Exclusion::Hyperbolic => "hyperbolic",
            Exclusion::Hilbert => "hilbert",
        }
    }

    /// Applies the rule without validating the distances. A Hilbert decision
    /// with coincident pivots excludes nothing.
    #[inline]
    pub fn decide(&self, d_q_p1: f64, d_q_p2: f64, d_p1_p2: f64, t: f64) -> ExclusionDecision {
        match self {
            Exclusion::Hyperbolic => ExclusionDecision::from_signed(0.5 * (d_q_p1 - d_q_p2), t),
            Exclusion::Hilbert => {
                if d_p1_p2 > 0.0 {
                    ExclusionDecision::from_signed(
                        (d_q_p1 * d_q_p1 - d_q_p2 * d_q_p2) / (2.0 * d_p1_p2),
                        t,
                    )
                } else {
                    ExclusionDecision::NONE
                }
            }
        }
    }
}

impl std::str::FromStr for Exclusion {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hyperbolic" => Ok(Exclusion::Hyperbolic),
            "hilbert" => Ok(Exclusion::Hilbert),
            other => input(format!("unknown exclusion rule {other:?}")),
        }
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        input(format!("threshold {t} must be positive"))
    }
}

/// Classic hyperplane exclusion: the side of the farther pivot is skipped when
/// the two query distances differ by more than `2t`.
pub fn hyperbolic_exclusion(p: &PivotPair, t: f64) -> Result<ExclusionDecision> {
    check_threshold(t)?;
    Ok(Exclusion::Hyperbolic.decide(p.d_q_p1, p.d_q_p2, p.d_p1_p2, t))
}

/// Hilbert exclusion: the side of the farther pivot is skipped when the query
/// is more than `t` from the bisecting hyperplane of the 3-D embedding.
///
/// Sound only when the distances come from a Hilbert-safe metric; checking
/// that is the caller's job.
pub fn hilbert_exclusion(p: &PivotPair, t: f64) -> Result<ExclusionDecision> {
    check_threshold(t)?;
    let margin = hyperplane_margin(p)?;
    Ok(ExclusionDecision::from_signed(margin, t))
}

/// Signed distance from the query to the bisector of the two pivots in the
/// embedding, `(d(q,p1)² - d(q,p2)²) / 2d(p1,p2)`. Positive means the query
/// lies on `p2`'s side.
pub fn hyperplane_margin(p: &PivotPair) -> Result<f64> {
    if p.d_p1_p2 <= 0.0 {
        return input("pivots coincide; the bisecting hyperplane is undefined");
    }
    Ok((p.d_q_p1 * p.d_q_p1 - p.d_q_p2 * p.d_q_p2) / (2.0 * p.d_p1_p2))
}

/// Outcome of single-pivot ball exclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotDecision {
    /// The ball `d(p, s) <= m` cannot hold a solution.
    ExcludeIn,
    /// The outside `d(p, s) > m` cannot hold a solution.
    ExcludeOut,
    None,
}

/// Ball exclusion around a single pivot with radius `m`.
pub fn pivot_exclusion(d_q_p: f64, m: f64, t: f64) -> PivotDecision {
    if d_q_p > m + t {
        PivotDecision::ExcludeIn
    } else if d_q_p <= m - t {
        PivotDecision::ExcludeOut
    } else {
        PivotDecision::None
    }
}

/// Places three points with the given pairwise distances in the plane:
/// the first at the origin, the second on the positive X axis, the third in
/// the upper half plane.
pub fn embed_three(d12: f64, d13: f64, d23: f64) -> Result<[(f64, f64); 3]> {
    check_distances(&[d12, d13, d23])?;
    if !satisfies_triangle(d12, d13, d23) {
        return input(format!(
            "distances ({d12}, {d13}, {d23}) violate the triangle inequality"
        ));
    }
    if d12 == 0.0 {
        // the triangle check already forced d13 ≈ d23
        return Ok([(0.0, 0.0), (0.0, 0.0), (0.0, d13)]);
    }
    let x = (d12 * d12 + d13 * d13 - d23 * d23) / (2.0 * d12);
    let y = (d13 * d13 - x * x).max(0.0).sqrt();
    Ok([(0.0, 0.0), (d12, 0.0), (x, y)])
}

/// Places a point in the plane given its distances to two pivots sitting at
/// `(-d/2, 0)` and `(d/2, 0)`, where `d = d(p1, p2)`.
pub fn planar_project(d_x_p1: f64, d_x_p2: f64, d_p1_p2: f64) -> Result<(f64, f64)> {
    check_distances(&[d_x_p1, d_x_p2, d_p1_p2])?;
    if d_p1_p2 <= 0.0 {
        return input("pivots coincide");
    }
    if !satisfies_triangle(d_x_p1, d_x_p2, d_p1_p2) {
        return input(format!(
            "distances ({d_x_p1}, {d_x_p2}, {d_p1_p2}) violate the triangle inequality"
        ));
    }
    let half = 0.5 * d_p1_p2;
    let x = (d_x_p1 * d_x_p1 - d_x_p2 * d_x_p2) / (2.0 * d_p1_p2);
    let y = (d_x_p1 * d_x_p1 - (x + half) * (x + half)).max(0.0).sqrt();
    Ok((x, y))
}

/// Pairwise distances among four points `x0..x3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceMatrix4 {
    d: [[f64; 4]; 4],
}

impl DistanceMatrix4 {
    /// Builds the matrix from the six distances, checking every triangle.
    pub fn new(d01: f64, d02: f64, d03: f64, d12: f64, d13: f64, d23: f64) -> Result<Self> {
        check_distances(&[d01, d02, d03, d12, d13, d23])?;
        let d = [
            [0.0, d01, d02, d03],
            [d01, 0.0, d12, d13],
            [d02, d12, 0.0, d23],
            [d03, d13, d23, 0.0],
        ];
        for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
            if !satisfies_triangle(d[i][j], d[i][k], d[j][k]) {
                return input(format!("points {i},{j},{k} violate the triangle inequality"));
            }
        }
        Ok(DistanceMatrix4 { d })
    }

    /// Measures the six distances among four points under `dist`.
    pub fn from_points<F>(points: [&[f64]; 4], mut dist: F) -> Result<Self>
    where
        F: FnMut(&[f64], &[f64]) -> f64,
    {
        let [a, b, c, e] = points;
        Self::new(
            dist(a, b),
            dist(a, c),
            dist(a, e),
            dist(b, c),
            dist(b, e),
            dist(c, e),
        )
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    /// Gram matrix of the points relative to `x0`:
    /// `G[i][j] = ½(d(x0,xi)² + d(x0,xj)² - d(xi,xj)²)` for `i, j ∈ 1..=3`.
    pub fn gram(&self) -> [[f64; 3]; 3] {
        let sq = |i: usize, j: usize| self.d[i][j] * self.d[i][j];
        let mut g = [[0.0; 3]; 3];
        for i in 1..4 {
            for j in 1..4 {
                g[i - 1][j - 1] = 0.5 * (sq(0, i) + sq(0, j) - sq(i, j));
            }
        }
        g
    }

    fn max_squared(&self) -> f64 {
        self.d.iter().flatten().fold(0.0_f64, |m, &x| m.max(x * x))
    }
}

/// Eigenvalues of a symmetric 3×3 matrix by cyclic Jacobi rotation, ascending.
pub fn symmetric_eigenvalues3(m: [[f64; 3]; 3]) -> [f64; 3] {
    let mut a = m;
    for _ in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // A <- Jᵀ A J with the rotation in the (p, q) plane
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(f64::total_cmp);
    ev
}

/// Whether the four points embed isometrically in 3-D Euclidean space.
///
/// Equivalent to the squared distances being conditionally negative
/// semidefinite, decided here by the Gram matrix relative to `x0` being
/// positive semidefinite.
pub fn four_point_check(m: &DistanceMatrix4) -> bool {
    let tol = EIGEN_TOLERANCE * m.max_squared().max(1.0);
    symmetric_eigenvalues3(m.gram())[0] >= -tol
}
