//! Experiment drivers and their tabular output.
//!
//! Every driver is deterministic for fixed inputs and seed. Tables are
//! written as CSV, optionally preceded by a `#` comment line carrying a
//! timestamp, or rendered as Markdown.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::analysis::{calibrate_thresholds, power_plot_data, PlotRow, PowerResult, SpaceProfile};
use crate::data::{seeded_rng, Dataset};
use crate::error::{input, Result};
use crate::geometry::Exclusion;
use crate::index::{ExclusionStrategy, HyperplaneTree, TreeKind};
use crate::metrics::Metric;

pub const PROFILE_HEADER: [&str; 8] = ["space", "idim", "t1", "t2", "t4", "t8", "t16", "t32"];
pub const POWER_HEADER: [&str; 6] = ["space", "idim", "strategy", "t_label", "pct", "sem"];
pub const PLOT_HEADER: [&str; 5] = ["x", "y", "hyperbolic", "hilbert", "pivot"];
pub const COST_HEADER: [&str; 10] = [
    "space",
    "tree",
    "strategy",
    "t_label",
    "t",
    "pct",
    "sem",
    "queries",
    "dominance_violations",
    "mismatches",
];

/// Selectivities, in results per million, used when none are given.
pub const DEFAULT_PER_MILLION: [f64; 3] = [1.0, 4.0, 16.0];
pub const DEFAULT_QUERIES: usize = 1000;
pub const PLOT_SAMPLE: usize = 500;

/// A header and rows of preformatted cells.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out, None).expect("writing to memory");
        String::from_utf8(out).expect("cells are UTF-8")
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("| {} |\n", self.header.join(" | "));
        s.push_str(&format!("|{}\n", "---|".repeat(self.header.len())));
        for r in &self.rows {
            s.push_str(&format!("| {} |\n", r.join(" | ")));
        }
        s
    }
}

/// Comment line text identifying a run: the command and a Unix timestamp.
pub fn run_comment(command: &str) -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("hilbex {command} generated_at={secs}")
}

fn f(v: f64, places: usize) -> String {
    format!("{v:.places$}")
}

pub fn profile_table(profiles: &[SpaceProfile]) -> Table {
    let mut t = Table::new(&PROFILE_HEADER);
    for p in profiles {
        let mut row = vec![p.space.clone(), f(p.idim, 3)];
        row.extend(p.thresholds.iter().map(|&x| f(x, 4)));
        t.push(row);
    }
    t
}

/// Appends one row per strategy for each result.
pub fn push_power_rows(table: &mut Table, space: &str, idim: f64, results: &[PowerResult]) {
    for r in results {
        let cols = [
            ("hyperbolic", Some(r.hyperbolic)),
            ("hilbert", r.hilbert),
            ("pivot", Some(r.pivot)),
        ];
        for (name, est) in cols {
            if let Some(e) = est {
                table.push(vec![
                    space.to_string(),
                    f(idim, 3),
                    name.to_string(),
                    r.t_label.clone(),
                    f(e.pct, 2),
                    f(e.sem, 3),
                ]);
            }
        }
    }
}

pub fn plot_table(rows: &[PlotRow]) -> Table {
    let mut t = Table::new(&PLOT_HEADER);
    let flag = |b: bool| u8::from(b).to_string();
    for r in rows {
        t.push(vec![
            f(r.x, 6),
            f(r.y, 6),
            flag(r.hyperbolic),
            flag(r.hilbert),
            flag(r.pivot),
        ]);
    }
    t
}

/// Label for a threshold calibrated to `per_million` results per million.
pub fn selectivity_label(per_million: f64) -> String {
    format!("t{per_million}")
}

/// Explicit thresholds are labelled by value; otherwise thresholds are
/// calibrated for each selectivity (default [`DEFAULT_PER_MILLION`]).
pub fn resolve_thresholds(
    data: &Dataset,
    metric: &Metric,
    thresholds: &[f64],
    per_million: &[f64],
    seed: u64,
) -> Result<Vec<(String, f64)>> {
    if !thresholds.is_empty() {
        if !per_million.is_empty() {
            return input("give thresholds or selectivities, not both");
        }
        if let Some(t) = thresholds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return input(format!("threshold {t} must be positive"));
        }
        return Ok(thresholds.iter().map(|&t| (format!("{t}"), t)).collect());
    }
    let pm: &[f64] = if per_million.is_empty() {
        &DEFAULT_PER_MILLION
    } else {
        per_million
    };
    let ts = calibrate_thresholds(data, metric, pm, seed)?;
    Ok(pm.iter().map(|&p| selectivity_label(p)).zip(ts).collect())
}

/// Figure data: [`PLOT_SAMPLE`] random points against two other random
/// points as pivots.
pub fn plot_data(data: &Dataset, metric: &Metric, t: f64, seed: u64) -> Result<Vec<PlotRow>> {
    if data.len() < 3 {
        return input("need at least 3 points");
    }
    let mut rng = seeded_rng(seed);
    let k = (PLOT_SAMPLE + 2).min(data.len());
    let mut picked = sample(&mut rng, data.len(), k).into_vec();
    let p2 = picked.pop().expect("k >= 3");
    let p1 = picked.pop().expect("k >= 3");
    power_plot_data(&data.select(&picked), data.row(p1), data.row(p2), metric, t)
}

/// What to measure in a query-cost benchmark.
#[derive(Debug, Clone)]
pub struct CostConfig {
    pub trees: Vec<TreeKind>,
    pub strategies: Vec<ExclusionStrategy>,
    pub thresholds: Vec<(String, f64)>,
    pub queries: usize,
    pub leaf_capacity: usize,
    pub seed: u64,
    /// Compare every result set with a linear scan.
    pub verify: bool,
}

/// Mean query cost of one (tree, strategy, threshold) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub tree: TreeKind,
    pub strategy: ExclusionStrategy,
    pub t_label: String,
    pub t: f64,
    /// Mean distance calls per query as a percentage of the indexed points.
    pub pct: f64,
    pub sem: f64,
    pub queries: usize,
    /// For Hilbert rows, queries that cost more than under the matching
    /// hyperbolic strategy on the same tree.
    pub dominance_violations: Option<u64>,
    /// Queries whose result set differed from the linear scan.
    pub mismatches: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub space: String,
    /// Points in each tree, after removing the queries.
    pub indexed: usize,
    pub rows: Vec<CostRow>,
}

impl CostReport {
    pub fn row(&self, tree: TreeKind, strategy: &str, t_label: &str) -> Option<&CostRow> {
        self.rows
            .iter()
            .find(|r| r.tree == tree && r.strategy.name() == strategy && r.t_label == t_label)
    }

    pub fn mismatches(&self) -> u64 {
        self.rows.iter().filter_map(|r| r.mismatches).sum()
    }

    pub fn dominance_violations(&self) -> u64 {
        self.rows.iter().filter_map(|r| r.dominance_violations).sum()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&COST_HEADER);
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            t.push(vec![
                self.space.clone(),
                r.tree.to_string(),
                r.strategy.name(),
                r.t_label.clone(),
                f(r.t, 6),
                f(r.pct, 4),
                f(r.sem, 4),
                r.queries.to_string(),
                opt(r.dominance_violations),
                opt(r.mismatches),
            ]);
        }
        t
    }
}

/// Splits `0..n` into `queries` held-out indices and the rest, both in a
/// seeded random order.
pub fn held_out_split(n: usize, queries: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut seeded_rng(seed));
    let rest = ids.split_off(queries.min(n));
    (ids, rest)
}

/// Mean distance calls per query for each tree, strategy and threshold.
///
/// `queries` points are held out of the data and the trees are built over
/// the remainder with the same seed. Hilbert strategies are checked against
/// the metric before any tree is built.
pub fn query_cost(data: &Dataset, metric: &Metric, cfg: &CostConfig) -> Result<CostReport> {
    for s in &cfg.strategies {
        s.check(metric)?;
    }
    if cfg.trees.is_empty() || cfg.strategies.is_empty() || cfg.thresholds.is_empty() {
        return input("need at least one tree, strategy and threshold");
    }
    if cfg.queries == 0 || cfg.queries >= data.len() {
        return input(format!(
            "query count {} must be positive and below the dataset size {}",
            cfg.queries,
            data.len()
        ));
    }
    data.validate_for(metric)?;
    let (query_ids, rest) = held_out_split(data.len(), cfg.queries, cfg.seed);
    let indexed = data.select(&rest);
    let trees = cfg
        .trees
        .iter()
        .map(|&k| HyperplaneTree::build(&indexed, metric.clone(), k, cfg.leaf_capacity, cfg.seed))
        .collect::<Result<Vec<_>>>()?;

    let (ns, nt) = (cfg.strategies.len(), cfg.thresholds.len());
    let cell = |ti: usize, k: usize, si: usize| (ti * nt + k) * ns + si;
    let t_max = cfg.thresholds.iter().map(|x| x.1).fold(0.0, f64::max);

    // per query: distance calls and mismatch flags, one cell per combination
    let per_query: Vec<(Vec<u64>, Vec<bool>)> = query_ids
        .par_iter()
        .map(|&qi| {
            let q = data.row(qi);
            let near: Vec<(usize, f64)> = if cfg.verify {
                indexed
                    .rows()
                    .enumerate()
                    .map(|(i, r)| (i, metric.distance(q, r)))
                    .filter(|&(_, d)| d <= t_max)
                    .collect()
            } else {
                Vec::new()
            };
            let mut calls = vec![0u64; trees.len() * nt * ns];
            let mut bad = vec![false; calls.len()];
            for (ti, tree) in trees.iter().enumerate() {
                for (k, &(_, t)) in cfg.thresholds.iter().enumerate() {
                    let expect: Vec<usize> = near.iter().filter(|p| p.1 <= t).map(|p| p.0).collect();
                    for (si, &s) in cfg.strategies.iter().enumerate() {
                        let stats = tree.search(q, t, s);
                        calls[cell(ti, k, si)] = stats.distance_calls;
                        bad[cell(ti, k, si)] = cfg.verify && stats.results != expect;
                    }
                }
            }
            (calls, bad)
        })
        .collect();

    let n = indexed.len() as f64;
    let mut rows = Vec::new();
    for (ti, tree) in trees.iter().enumerate() {
        for (k, (label, t)) in cfg.thresholds.iter().enumerate() {
            for (si, &s) in cfg.strategies.iter().enumerate() {
                let c = cell(ti, k, si);
                let pcts: Vec<f64> = per_query.iter().map(|(calls, _)| 100.0 * calls[c] as f64 / n).collect();
                let (pct, sem) = mean_sem(&pcts);
                let rival = (s.exclusion == Some(Exclusion::Hilbert))
                    .then(|| {
                        cfg.strategies.iter().position(|o| {
                            o.exclusion == Some(Exclusion::Hyperbolic) && o.use_cover_radius == s.use_cover_radius
                        })
                    })
                    .flatten();
                let dominance_violations = rival.map(|ri| {
                    let rc = cell(ti, k, ri);
                    per_query.iter().filter(|(calls, _)| calls[c] > calls[rc]).count() as u64
                });
                let mismatches = cfg
                    .verify
                    .then(|| per_query.iter().filter(|(_, bad)| bad[c]).count() as u64);
                rows.push(CostRow {
                    tree: tree.kind(),
                    strategy: s,
                    t_label: label.clone(),
                    t: *t,
                    pct,
                    sem,
                    queries: query_ids.len(),
                    dominance_violations,
                    mismatches,
                });
            }
        }
    }
    Ok(CostReport {
        space: data.label().to_string(),
        indexed: indexed.len(),
        rows,
    })
}

fn mean_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Estimate;
    use crate::data::gen_uniform;

    #[test]
    fn table_renders() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,x\n");
        let mut buf = Vec::new();
        t.write_csv(&mut buf, Some("note")).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# note\na,b\n1,x\n");
        assert_eq!(t.to_markdown(), "| a | b |\n|---|---|\n| 1 | x |\n");
    }

    #[test]
    fn headers_are_exact() {
        assert_eq!(Table::new(&PLOT_HEADER).to_csv(), "x,y,hyperbolic,hilbert,pivot\n");
        assert_eq!(Table::new(&POWER_HEADER).to_csv(), "space,idim,strategy,t_label,pct,sem\n");
        assert_eq!(Table::new(&PROFILE_HEADER).to_csv(), "space,idim,t1,t2,t4,t8,t16,t32\n");
    }

    #[test]
    fn power_rows_skip_missing_hilbert() {
        let e = Estimate { pct: 10.0, sem: 0.1 };
        let r = PowerResult {
            metric: "man".into(),
            dim: 3,
            t: 0.1,
            t_label: "t1".into(),
            hyperbolic: e,
            hilbert: None,
            pivot: e,
            trials: 500,
        };
        let mut t = Table::new(&POWER_HEADER);
        push_power_rows(&mut t, "man_3", 2.5, &[r]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1], ["man_3", "2.500", "pivot", "t1", "10.00", "0.100"]);
    }

    #[test]
    fn split_is_a_partition() {
        let (q, rest) = held_out_split(100, 10, 4);
        assert_eq!(q.len(), 10);
        let mut all: Vec<usize> = q.iter().chain(&rest).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(held_out_split(100, 10, 4), (q, rest));
    }

    #[test]
    fn thresholds_resolve() {
        let d = gen_uniform(2000, 3, 1).unwrap();
        let r = resolve_thresholds(&d, &Metric::Euclidean, &[0.1, 0.2], &[], 0).unwrap();
        assert_eq!(r, vec![("0.1".to_string(), 0.1), ("0.2".to_string(), 0.2)]);
        let r = resolve_thresholds(&d, &Metric::Euclidean, &[], &[], 0).unwrap();
        let labels: Vec<&str> = r.iter().map(|x| x.0.as_str()).collect();
        assert_eq!(labels, ["t1", "t4", "t16"]);
        assert!(resolve_thresholds(&d, &Metric::Euclidean, &[0.1], &[1.0], 0).is_err());
        assert!(resolve_thresholds(&d, &Metric::Euclidean, &[-0.1], &[], 0).is_err());
    }

    #[test]
    fn small_cost_run_verifies() {
        let d = gen_uniform(6000, 6, 2).unwrap().with_label("euc_6");
        let cfg = CostConfig {
            trees: vec![TreeKind::Ght, TreeKind::Mht],
            strategies: vec![
                ExclusionStrategy::hyperbolic(),
                ExclusionStrategy::hilbert(),
                ExclusionStrategy::cover_radius_only(),
            ],
            thresholds: vec![("a".into(), 0.1), ("b".into(), 0.2)],
            queries: 100,
            leaf_capacity: 16,
            seed: 3,
            verify: true,
        };
        let r = query_cost(&d, &Metric::Euclidean, &cfg).unwrap();
        assert_eq!(r.rows.len(), 12);
        assert_eq!(r.indexed, 5900);
        assert_eq!(r.mismatches(), 0);
        assert_eq!(r.dominance_violations(), 0);
        let hyp = r.row(TreeKind::Mht, "hyperbolic", "a").unwrap();
        let hil = r.row(TreeKind::Mht, "hilbert", "a").unwrap();
        assert!(hil.pct <= hyp.pct);
        assert_eq!(hil.dominance_violations, Some(0));
        assert_eq!(hyp.dominance_violations, None);
        assert_eq!(r.table().rows.len(), 12);
        assert_eq!(r, query_cost(&d, &Metric::Euclidean, &cfg).unwrap());
    }

    #[test]
    fn cost_checks_strategy_first() {
        let d = gen_uniform(100, 3, 2).unwrap();
        let cfg = CostConfig {
            trees: vec![TreeKind::Ght],
            strategies: vec![ExclusionStrategy::hilbert()],
            thresholds: vec![("x".into(), 0.1)],
            queries: 1000,
            leaf_capacity: 8,
            seed: 0,
            verify: false,
        };
        assert!(matches!(query_cost(&d, &Metric::Manhattan, &cfg), Err(crate::Error::Config(_))));
        assert!(matches!(query_cost(&d, &Metric::Euclidean, &cfg), Err(crate::Error::Input(_))));
    }

    #[test]
    fn plot_data_uses_sample() {
        let d = gen_uniform(2000, 10, 2).unwrap();
        let rows = plot_data(&d, &Metric::Euclidean, 0.228, 1).unwrap();
        assert_eq!(rows.len(), PLOT_SAMPLE);
        assert_eq!(plot_table(&rows).rows.len(), PLOT_SAMPLE);
    }
}
