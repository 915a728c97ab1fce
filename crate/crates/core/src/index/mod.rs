//! Hyperplane-partition trees and the linear-scan oracle.
//!
//! Both tree kinds split a set by which of two pivots each point is closer to
//! (ties go to the second pivot) and record, for each half, the cover radius
//! around its pivot. They differ in how pivots are chosen below the root:
//!
//! * [`TreeKind::Ght`] (generalised hyperplane tree) picks two fresh pivots
//!   at every node;
//! * [`TreeKind::Mht`] (monotonous hyperplane tree) lets each child reuse the
//!   parent pivot its half was assigned to, so a query pays for one new
//!   distance per node instead of two.
//!
//! Queries prune with the cover radii and with the hyperplane rule selected
//! by [`ExclusionStrategy`].

mod tree;

use std::fmt;
use std::str::FromStr;

pub use tree::{HyperplaneTree, NodeRef, TreeKind, DEFAULT_LEAF_CAPACITY, PIVOT_SAMPLE};

use crate::data::Dataset;
use crate::error::{input, Error, Result};
use crate::geometry::Exclusion;
use crate::metrics::Metric;

/// How a range query prunes subtrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExclusionStrategy {
    /// Hyperplane rule, or `None` to rely on cover radii alone.
    pub exclusion: Option<Exclusion>,
    pub use_cover_radius: bool,
}

impl ExclusionStrategy {
    pub fn hyperbolic() -> Self {
        ExclusionStrategy {
            exclusion: Some(Exclusion::Hyperbolic),
            use_cover_radius: true,
        }
    }

    pub fn hilbert() -> Self {
        ExclusionStrategy {
            exclusion: Some(Exclusion::Hilbert),
            use_cover_radius: true,
        }
    }

    pub fn cover_radius_only() -> Self {
        ExclusionStrategy {
            exclusion: None,
            use_cover_radius: true,
        }
    }

    pub fn without_cover_radius(self) -> Self {
        ExclusionStrategy {
            use_cover_radius: false,
            ..self
        }
    }

    /// Rejects Hilbert exclusion on metrics that do not support it.
    pub fn check(&self, metric: &Metric) -> Result<()> {
        if self.exclusion == Some(Exclusion::Hilbert) && !metric.hilbert_safe() {
            return Err(Error::Config(format!(
                "Hilbert exclusion is unsound for {metric}: four-point embeddability is not guaranteed"
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        let base = match self.exclusion {
            Some(e) => e.name(),
            None => "cover",
        };
        match (self.exclusion, self.use_cover_radius) {
            (_, true) => base.to_string(),
            (Some(_), false) => format!("{base}-plane"),
            (None, false) => "none".to_string(),
        }
    }
}

impl Default for ExclusionStrategy {
    fn default() -> Self {
        Self::hyperbolic()
    }
}

impl fmt::Display for ExclusionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ExclusionStrategy {
    type Err = Error;

    /// Accepts `hyperbolic`, `hilbert`, `cover`, `hyperbolic-plane`,
    /// `hilbert-plane` and `none`.
    fn from_str(s: &str) -> Result<Self> {
        let (base, cover) = match s.strip_suffix("-plane") {
            Some(b) => (b, false),
            None => (s, true),
        };
        let strategy = match base {
            "cover" if cover => Self::cover_radius_only(),
            "none" if cover => Self::cover_radius_only().without_cover_radius(),
            _ => ExclusionStrategy {
                exclusion: Some(base.parse()?),
                use_cover_radius: cover,
            },
        };
        Ok(strategy)
    }
}

/// Outcome of one range query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryStats {
    /// Dataset indices of every point within the threshold, ascending.
    pub results: Vec<usize>,
    /// Metric evaluations performed by the query, pivots included.
    pub distance_calls: u64,
    /// Internal nodes whose pivots were examined.
    pub nodes_visited: u64,
    /// Points compared one by one in leaves.
    pub leaf_points_scanned: u64,
}

fn check_query(metric: &Metric, dim: usize, q: &[f64], t: f64) -> Result<()> {
    if q.len() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: q.len(),
        });
    }
    metric.validate(q)?;
    if !(t >= 0.0 && t.is_finite()) {
        return input(format!("threshold {t} must be finite and non-negative"));
    }
    Ok(())
}

/// Exhaustive range search; the reference every index is checked against.
pub fn linear_scan(points: &Dataset, metric: &Metric, q: &[f64], t: f64) -> Result<QueryStats> {
    if points.is_empty() {
        return Ok(QueryStats::default());
    }
    check_query(metric, points.dim(), q, t)?;
    let results = points
        .rows()
        .enumerate()
        .filter(|(_, r)| metric.distance(q, r) <= t)
        .map(|(i, _)| i)
        .collect();
    Ok(QueryStats {
        results,
        distance_calls: points.len() as u64,
        nodes_visited: 0,
        leaf_points_scanned: points.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_round_trip() {
        for s in [
            ExclusionStrategy::hyperbolic(),
            ExclusionStrategy::hilbert(),
            ExclusionStrategy::cover_radius_only(),
            ExclusionStrategy::hilbert().without_cover_radius(),
            ExclusionStrategy::hyperbolic().without_cover_radius(),
            ExclusionStrategy::cover_radius_only().without_cover_radius(),
        ] {
            assert_eq!(s.name().parse::<ExclusionStrategy>().unwrap(), s);
        }
        assert!("nearest".parse::<ExclusionStrategy>().is_err());
    }

    #[test]
    fn hilbert_refused_for_unsafe_metrics() {
        let s = ExclusionStrategy::hilbert();
        assert!(matches!(s.check(&Metric::CosineAngle), Err(Error::Config(_))));
        assert!(matches!(s.check(&Metric::Manhattan), Err(Error::Config(_))));
        assert!(s.check(&Metric::JensenShannon).is_ok());
        assert!(ExclusionStrategy::hyperbolic().check(&Metric::CosineAngle).is_ok());
    }

    #[test]
    fn linear_scan_examples() {
        let empty = Dataset::from_flat(2, vec![]).unwrap();
        assert!(linear_scan(&empty, &Metric::Euclidean, &[0.0, 0.0], 1.0).unwrap().results.is_empty());

        let d = Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 3.0]]).unwrap();
        let s = linear_scan(&d, &Metric::Euclidean, &[1.0, 0.0], 0.0).unwrap();
        assert_eq!(s.results, vec![1]);
        assert_eq!(s.distance_calls, 3);
        let s = linear_scan(&d, &Metric::Euclidean, &[0.0, 0.0], 1.0).unwrap();
        assert_eq!(s.results, vec![0, 1]);
        assert!(linear_scan(&d, &Metric::Euclidean, &[0.0], 1.0).is_err());
        assert!(linear_scan(&d, &Metric::Euclidean, &[0.0, 0.0], -1.0).is_err());
    }
}
