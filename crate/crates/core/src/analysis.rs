//! Properties of a space that the index experiments are calibrated against:
//! intrinsic dimensionality, query thresholds of a given selectivity, and
//! exclusion power.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::data::{seeded_rng, Dataset, SeededRng};
use crate::error::{input, Error, Result};
use crate::geometry::{planar_project, pivot_exclusion, Exclusion, PivotDecision};
use crate::metrics::Metric;

/// Result counts per million points that define the thresholds t1 to t32.
pub const TARGET_COUNTS: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
pub const TARGET_LABELS: [&str; 6] = ["t1", "t2", "t4", "t8", "t16", "t32"];

/// Pairwise distances sampled for the bisection's upper bound.
pub const BOUND_SAMPLE: usize = 10_000;
pub const BISECTION_STEPS: usize = 40;
/// Queries sampled for calibration are chosen so that roughly this many
/// results are expected in total at the smallest target.
const CALIBRATION_HITS: f64 = 300.0;

/// Queries evaluated against each random pivot pair.
pub const POWER_BATCH: usize = 500;
const POWER_MIN_BATCHES: usize = 20;
const POWER_ROUND: usize = 32;

fn random_pair(rng: &mut SeededRng, n: usize) -> (usize, usize) {
    let i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

fn need_points(points: &Dataset, k: usize) -> Result<()> {
    if points.len() < k {
        return input(format!("need at least {k} points, got {}", points.len()));
    }
    Ok(())
}

/// Mean and population standard deviation of a distance sample.
pub fn distance_moments(distances: &[f64]) -> (f64, f64) {
    let n = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / n;
    let var = distances.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `μ² / 2σ²` of a distance sample.
pub fn idim_of(distances: &[f64]) -> Result<f64> {
    if distances.is_empty() {
        return input("no distances");
    }
    let (mean, sd) = distance_moments(distances);
    if sd == 0.0 {
        return Err(Error::Degenerate(format!(
            "all {} sampled distances equal {mean}",
            distances.len()
        )));
    }
    Ok(mean * mean / (2.0 * sd * sd))
}

/// Intrinsic dimensionality estimated from `sample_pairs` random pairs of
/// distinct points.
pub fn idim(points: &Dataset, metric: &Metric, sample_pairs: usize, seed: u64) -> Result<f64> {
    need_points(points, 2)?;
    if sample_pairs == 0 {
        return input("sample_pairs must be positive");
    }
    points.validate_for(metric)?;
    let mut rng = seeded_rng(seed);
    let distances: Vec<f64> = (0..sample_pairs)
        .map(|_| {
            let (i, j) = random_pair(&mut rng, points.len());
            metric.distance(points.row(i), points.row(j))
        })
        .collect();
    idim_of(&distances)
}

/// The `k` smallest distances from row `q` to every other row, ascending.
fn nearest_distances(points: &Dataset, metric: &Metric, q: usize, k: usize, buf: &mut Vec<f64>) -> Vec<f64> {
    buf.clear();
    let qv = points.row(q);
    buf.extend(
        points
            .rows()
            .enumerate()
            .filter(|&(i, _)| i != q)
            .map(|(_, r)| metric.distance(qv, r)),
    );
    if k < buf.len() {
        buf.select_nth_unstable_by(k, f64::total_cmp);
        buf.truncate(k);
    }
    buf.sort_unstable_by(f64::total_cmp);
    buf.clone()
}

fn mean_count(cached: &[Vec<f64>], t: f64) -> f64 {
    let total: usize = cached.iter().map(|c| c.partition_point(|&d| d <= t)).sum();
    total as f64 / cached.len() as f64
}

/// Thresholds at which a query drawn from the data finds, on average,
/// `per_million[i]` results per million points.
///
/// A sample of data points is held out as queries; each is compared with
/// every other point and its nearest distances cached. Each threshold is
/// then found by bisection on the cached counts, between 0 and the largest
/// of [`BOUND_SAMPLE`] random pairwise distances. A target that cannot be
/// reached below that bound returns the bound.
pub fn calibrate_thresholds(
    points: &Dataset,
    metric: &Metric,
    per_million: &[f64],
    seed: u64,
) -> Result<Vec<f64>> {
    need_points(points, 2)?;
    points.validate_for(metric)?;
    if let Some(p) = per_million.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return input(format!("selectivity {p} must be positive"));
    }
    if per_million.is_empty() {
        return Ok(Vec::new());
    }
    let n = points.len();
    let others = (n - 1) as f64;
    let targets: Vec<f64> = per_million.iter().map(|p| p * n as f64 / 1e6).collect();

    let mut rng = seeded_rng(seed);
    let mut upper = 0.0f64;
    for _ in 0..BOUND_SAMPLE {
        let (i, j) = random_pair(&mut rng, n);
        upper = upper.max(metric.distance(points.row(i), points.row(j)));
    }

    let reachable = targets.iter().copied().filter(|&c| c < others);
    let smallest = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let largest = reachable.fold(0.0f64, f64::max);
    let queries = ((CALIBRATION_HITS / smallest).ceil() as usize).clamp(1, n);
    let keep = ((10.0 * largest).ceil() as usize + 64).min(n - 1);
    let query_ids = sample(&mut rng, n, queries).into_vec();
    let cached: Vec<Vec<f64>> = query_ids
        .par_iter()
        .map_init(Vec::new, |buf, &q| nearest_distances(points, metric, q, keep, buf))
        .collect();
    if keep == n - 1 {
        let far = cached.iter().filter_map(|c| c.last()).fold(0.0f64, |a, &b| a.max(b));
        upper = upper.max(far);
    }

    let at_zero = mean_count(&cached, 0.0);
    let mut out = Vec::with_capacity(targets.len());
    for (&target, &pm) in targets.iter().zip(per_million) {
        if at_zero > 1.1 * target {
            return Err(Error::Calibration(format!(
                "{at_zero:.3} results per query already at distance 0, above the target of \
                 {target:.3} ({pm} per million); the data holds too many duplicates"
            )));
        }
        if target >= others || mean_count(&cached, upper) < target {
            out.push(upper);
            continue;
        }
        let (mut lo, mut hi) = (0.0, upper);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mean_count(&cached, mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push(hi);
    }
    Ok(out)
}

/// Single-target form of [`calibrate_thresholds`].
pub fn calibrate_threshold(points: &Dataset, metric: &Metric, per_million: f64, seed: u64) -> Result<f64> {
    Ok(calibrate_thresholds(points, metric, &[per_million], seed)?[0])
}

/// Intrinsic dimensionality and the thresholds t1 to t32 of one space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceProfile {
    pub space: String,
    pub idim: f64,
    /// Indexed like [`TARGET_LABELS`].
    pub thresholds: [f64; 6],
}

impl SpaceProfile {
    pub fn threshold(&self, label: &str) -> Option<f64> {
        TARGET_LABELS
            .iter()
            .position(|l| *l == label)
            .map(|i| self.thresholds[i])
    }

    pub fn labelled(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        TARGET_LABELS.iter().copied().zip(self.thresholds)
    }
}

pub fn profile(points: &Dataset, metric: &Metric, idim_pairs: usize, seed: u64) -> Result<SpaceProfile> {
    let idim = idim(points, metric, idim_pairs, seed)?;
    let t = calibrate_thresholds(points, metric, &TARGET_COUNTS, seed.wrapping_add(1))?;
    Ok(SpaceProfile {
        space: points.label().to_string(),
        idim,
        thresholds: t.try_into().expect("six targets"),
    })
}

/// A percentage and the standard error of its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub pct: f64,
    pub sem: f64,
}

impl Estimate {
    fn from_batches(pcts: &[f64]) -> Estimate {
        let b = pcts.len() as f64;
        let pct = pcts.iter().sum::<f64>() / b;
        let var = pcts.iter().map(|p| (p - pct) * (p - pct)).sum::<f64>() / (b - 1.0);
        Estimate {
            pct,
            sem: (var / b).sqrt(),
        }
    }

    /// Whether the standard error is below 1% of the mean.
    pub fn converged(&self) -> bool {
        self.sem < 0.01 * self.pct || (self.pct == 0.0 && self.sem == 0.0)
    }
}

/// How often a random query can discard one half of a random pivot pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerResult {
    pub metric: String,
    pub dim: usize,
    pub t: f64,
    pub t_label: String,
    pub hyperbolic: Estimate,
    /// Absent for metrics where Hilbert exclusion is unsound.
    pub hilbert: Option<Estimate>,
    /// Single pivot with the median distance as ball radius.
    pub pivot: Estimate,
    pub trials: u64,
}

impl PowerResult {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.t_label = label.into();
        self
    }
}

/// Per-threshold exclusion counts of one batch: hyperbolic, hilbert, pivot.
fn power_batch(points: &Dataset, metric: &Metric, ts: &[f64], size: usize, seed: u64) -> Vec<[u32; 3]> {
    let n = points.len();
    let mut rng = seeded_rng(seed);
    let (p1, p2) = random_pair(&mut rng, n);
    let (a, b) = (points.row(p1), points.row(p2));
    let d12 = metric.distance(a, b);
    let mut d = Vec::with_capacity(size);
    while d.len() < size {
        let q = rng.gen_range(0..n);
        if q == p1 || q == p2 {
            continue;
        }
        let q = points.row(q);
        d.push((metric.distance(q, a), metric.distance(q, b)));
    }
    let mut d1s: Vec<f64> = d.iter().map(|p| p.0).collect();
    let median = median(&mut d1s);
    ts.iter()
        .map(|&t| {
            let mut c = [0u32; 3];
            for &(d1, d2) in &d {
                c[0] += u32::from(Exclusion::Hyperbolic.decide(d1, d2, d12, t).any());
                c[1] += u32::from(Exclusion::Hilbert.decide(d1, d2, d12, t).any());
                c[2] += u32::from(pivot_exclusion(d1, median, t) != PivotDecision::None);
            }
            c
        })
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    let mid = v.len() / 2;
    let (_, &mut hi, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    if v.len() % 2 == 1 {
        hi
    } else {
        let lo = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

fn batch_seed(seed: u64, b: usize) -> u64 {
    seed ^ (b as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Exclusion power at several thresholds over one shared set of trials.
///
/// Trials come in batches of [`POWER_BATCH`] queries, each batch with its
/// own random pivot pair; the pivot column's ball radius is the median of
/// the batch's query-to-pivot distances. Batches are added until every
/// column's standard error is below 1% of its mean or `trials` queries have
/// been evaluated.
pub fn exclusion_power_multi(
    points: &Dataset,
    metric: &Metric,
    ts: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<PowerResult>> {
    need_points(points, 3)?;
    points.validate_for(metric)?;
    if trials == 0 {
        return input("trials must be positive");
    }
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0)) {
        return input(format!("threshold {t} must be positive"));
    }
    let size = (trials as usize).min(POWER_BATCH);
    let max_batches = trials.div_ceil(size as u64) as usize;
    let safe = metric.hilbert_safe();

    // per threshold, per column, batch percentages
    let mut pcts: Vec<[Vec<f64>; 3]> = vec![Default::default(); ts.len()];
    let mut done = 0;
    while done < max_batches {
        let round = POWER_ROUND.min(max_batches - done);
        let counts: Vec<Vec<[u32; 3]>> = (done..done + round)
            .into_par_iter()
            .map(|b| power_batch(points, metric, ts, size, batch_seed(seed, b)))
            .collect();
        for batch in counts {
            for (col, c) in pcts.iter_mut().zip(batch) {
                for k in 0..3 {
                    col[k].push(100.0 * f64::from(c[k]) / size as f64);
                }
            }
        }
        done += round;
        if done >= POWER_MIN_BATCHES {
            let converged = pcts.iter().all(|col| {
                (0..3)
                    .filter(|&k| k != 1 || safe)
                    .all(|k| Estimate::from_batches(&col[k]).converged())
            });
            if converged {
                break;
            }
        }
    }

    Ok(ts
        .iter()
        .zip(pcts)
        .map(|(&t, col)| PowerResult {
            metric: metric.name(),
            dim: points.dim(),
            t,
            t_label: format!("{t}"),
            hyperbolic: Estimate::from_batches(&col[0]),
            hilbert: safe.then(|| Estimate::from_batches(&col[1])),
            pivot: Estimate::from_batches(&col[2]),
            trials: (done * size) as u64,
        })
        .collect())
}

pub fn exclusion_power(points: &Dataset, metric: &Metric, t: f64, trials: u64, seed: u64) -> Result<PowerResult> {
    Ok(exclusion_power_multi(points, metric, &[t], trials, seed)?.remove(0))
}

/// One point of an exclusion figure: its position relative to two pivots
/// placed at `(∓d/2, 0)` and whether each rule would exclude it as a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    pub x: f64,
    pub y: f64,
    pub hyperbolic: bool,
    pub hilbert: bool,
    pub pivot: bool,
}

/// Planar projection of every point against `(p1, p2)` with its exclusion
/// flags at threshold `t`. The pivot rule uses `p1` with the median of the
/// sample's distances to `p1`.
pub fn power_plot_data(points: &Dataset, p1: &[f64], p2: &[f64], metric: &Metric, t: f64) -> Result<Vec<PlotRow>> {
    need_points(points, 1)?;
    points.validate_for(metric)?;
    metric.validate(p1)?;
    metric.validate(p2)?;
    if !metric.hilbert_safe() {
        return Err(Error::Config(format!("Hilbert exclusion is unsound for {metric}")));
    }
    if !(t > 0.0) {
        return input(format!("threshold {t} must be positive"));
    }
    let d12 = metric.checked_distance(p1, p2)?;
    if d12 == 0.0 {
        return input("pivots coincide");
    }
    let d: Vec<(f64, f64)> = points
        .rows()
        .map(|r| (metric.distance(r, p1), metric.distance(r, p2)))
        .collect();
    let mut d1s: Vec<f64> = d.iter().map(|p| p.0).collect();
    let m = median(&mut d1s);
    d.into_iter()
        .map(|(d1, d2)| {
            let (x, y) = planar_project(d1, d2, d12)?;
            Ok(PlotRow {
                x,
                y,
                hyperbolic: Exclusion::Hyperbolic.decide(d1, d2, d12, t).any(),
                hilbert: Exclusion::Hilbert.decide(d1, d2, d12, t).any(),
                pivot: pivot_exclusion(d1, m, t) != PivotDecision::None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_uniform, Space};

    #[test]
    fn idim_of_hand_example() {
        assert_eq!(idim_of(&[1.0, 1.0, 3.0, 3.0]).unwrap(), 2.0);
        assert!(matches!(idim_of(&[2.0; 5]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn idim_rejects_identical_points() {
        let d = Dataset::from_rows(&[[0.3, 0.3]; 10]).unwrap();
        assert!(matches!(idim(&d, &Metric::Euclidean, 1000, 1), Err(Error::Degenerate(_))));
        let one = Dataset::from_rows(&[[0.3, 0.3]]).unwrap();
        assert!(idim(&one, &Metric::Euclidean, 1000, 1).is_err());
    }

    #[test]
    fn idim_grows_with_dimension() {
        let lo = idim(&gen_uniform(5000, 4, 1).unwrap(), &Metric::Euclidean, 20_000, 2).unwrap();
        let hi = idim(&gen_uniform(5000, 12, 1).unwrap(), &Metric::Euclidean, 20_000, 2).unwrap();
        assert!(lo < hi, "{lo} {hi}");
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn calibration_hits_its_target() {
        let d = gen_uniform(20_000, 4, 3).unwrap();
        let pm = 500.0;
        let t = calibrate_threshold(&d, &Metric::Euclidean, pm, 1).unwrap();
        // count on fresh queries
        let mut rng = seeded_rng(99);
        let q: Vec<usize> = sample(&mut rng, d.len(), 400).into_vec();
        let hits: usize = q
            .iter()
            .map(|&i| {
                d.rows()
                    .enumerate()
                    .filter(|&(j, r)| j != i && Metric::Euclidean.distance(d.row(i), r) <= t)
                    .count()
            })
            .sum();
        let mean = hits as f64 / q.len() as f64;
        assert!((mean / 10.0 - 1.0).abs() < 0.2, "{mean}");
    }

    #[test]
    fn calibration_is_monotone_and_deterministic() {
        let d = Space::new(Metric::JensenShannon, 6).generate(10_000, 4).unwrap();
        let t = calibrate_thresholds(&d, &Metric::JensenShannon, &TARGET_COUNTS, 8).unwrap();
        assert!(t.windows(2).all(|w| w[0] < w[1]), "{t:?}");
        assert_eq!(t, calibrate_thresholds(&d, &Metric::JensenShannon, &TARGET_COUNTS, 8).unwrap());
    }

    #[test]
    fn calibration_saturates() {
        let d = gen_uniform(300, 3, 3).unwrap();
        let t = calibrate_threshold(&d, &Metric::Euclidean, 1e6, 1).unwrap();
        assert_eq!(t, calibrate_threshold(&d, &Metric::Euclidean, 5e6, 1).unwrap());
        let mut far = 0.0f64;
        for i in 0..d.len() {
            for j in 0..d.len() {
                far = far.max(Metric::Euclidean.distance(d.row(i), d.row(j)));
            }
        }
        assert!(t > 0.9 * far && t <= far, "{t} {far}");
    }

    #[test]
    fn calibration_refuses_duplicate_floods() {
        let mut rows = vec![[0.5, 0.5]; 900];
        rows.extend(gen_uniform(100, 2, 1).unwrap().rows().map(|r| [r[0], r[1]]));
        let d = Dataset::from_rows(&rows).unwrap();
        assert!(matches!(
            calibrate_threshold(&d, &Metric::Euclidean, 1.0, 1),
            Err(Error::Calibration(_))
        ));
    }

    #[test]
    fn power_is_ordered_and_monotone() {
        let d = gen_uniform(20_000, 6, 5).unwrap();
        let ts = [0.05, 0.1, 0.2, 10.0];
        let r = exclusion_power_multi(&d, &Metric::Euclidean, &ts, 50_000, 3).unwrap();
        for w in r.windows(2) {
            assert!(w[0].hyperbolic.pct >= w[1].hyperbolic.pct);
            assert!(w[0].hilbert.unwrap().pct >= w[1].hilbert.unwrap().pct);
            assert!(w[0].pivot.pct >= w[1].pivot.pct);
        }
        for p in &r {
            assert!(p.hilbert.unwrap().pct >= p.hyperbolic.pct);
        }
        let huge = &r[3];
        assert_eq!((huge.hyperbolic.pct, huge.hilbert.unwrap().pct, huge.pivot.pct), (0.0, 0.0, 0.0));
    }

    #[test]
    fn power_omits_hilbert_for_unsafe_metrics() {
        let d = gen_uniform(2000, 4, 5).unwrap();
        let r = exclusion_power(&d, &Metric::Manhattan, 0.2, 5000, 3).unwrap();
        assert!(r.hilbert.is_none());
        assert!(r.trials <= 5000);
        assert_eq!(r, exclusion_power(&d, &Metric::Manhattan, 0.2, 5000, 3).unwrap());
    }

    #[test]
    fn plot_pivot_lands_on_axis() {
        let d = gen_uniform(500, 10, 2).unwrap();
        let (p1, p2) = (d.row(0), d.row(1));
        let rows = power_plot_data(&d, p1, p2, &Metric::Euclidean, 0.228).unwrap();
        let half = Metric::Euclidean.distance(p1, p2) / 2.0;
        assert!((rows[0].x + half).abs() < 1e-9 && rows[0].y.abs() < 1e-6);
        assert!(power_plot_data(&d, p1, p1, &Metric::Euclidean, 0.1).is_err());
        let far = power_plot_data(&d, p1, p2, &Metric::Euclidean, 100.0).unwrap();
        assert!(far.iter().all(|r| !(r.hyperbolic || r.hilbert || r.pivot)));
    }
}
