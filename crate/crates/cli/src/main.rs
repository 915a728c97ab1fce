//! `hilbex`: generate datasets and run the exclusion experiments.
//!
//! Exit codes: 0 success, 2 input error, 3 verification failure,
//! 4 configuration error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hilbex::analysis::{self, TARGET_COUNTS};
use hilbex::bench::{self, CostConfig, Table, DEFAULT_QUERIES};
use hilbex::data::{load_vectors, save_vectors, Dataset, Format, Space};
use hilbex::index::{ExclusionStrategy, TreeKind, DEFAULT_LEAF_CAPACITY};
use hilbex::metrics::Metric;
use hilbex::Error;

#[derive(Parser)]
#[command(name = "hilbex", version, about = "Hilbert and Hyperbolic exclusion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset.
    Gen(GenArgs),
    /// Intrinsic dimensionality and thresholds t1 to t32.
    Profile(ProfileArgs),
    /// Exclusion power of the hyperbolic, Hilbert and single-pivot rules.
    Power(PowerArgs),
    /// Distance calls per query for hyperplane trees.
    QueryBench(QueryBenchArgs),
    /// Planar projection and exclusion flags of 500 points.
    PlotData(PlotArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    space: Space,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// `.bin` or `.hlbx` for binary, anything else for text.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct DataArgs {
    /// Space to generate, e.g. `euc_10`; with --data, the space the file holds.
    #[arg(long)]
    space: Option<Space>,
    /// Metric overriding the space's.
    #[arg(long)]
    metric: Option<Metric>,
    /// Vector file to load instead of generating.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render a Markdown table instead of CSV.
    #[arg(long)]
    markdown: bool,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Explicit query thresholds.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    threshold: Vec<f64>,
    /// Calibrate thresholds returning this many results per million points.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    per_million: Vec<f64>,
}

#[derive(Args)]
struct ProfileArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 1_000_000)]
    idim_pairs: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct PowerArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// Upper bound on queries evaluated per threshold set.
    #[arg(long, default_value_t = 2_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 1_000_000)]
    idim_pairs: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct QueryBenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "ght,mht")]
    tree: Vec<TreeKind>,
    /// Any of hyperbolic, hilbert, cover, hyperbolic-plane, hilbert-plane, none.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "hyperbolic,hilbert")]
    strategy: Vec<ExclusionStrategy>,
    #[arg(long, default_value_t = DEFAULT_LEAF_CAPACITY)]
    leaf_capacity: usize,
    #[arg(long, default_value_t = DEFAULT_QUERIES)]
    queries: usize,
    /// Check every result set against a linear scan.
    #[arg(long)]
    verify: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[command(flatten)]
    out: OutArgs,
}

enum Failure {
    Lib(Error),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type Outcome = Result<(), Failure>;

impl DataArgs {
    fn load(&self) -> Result<(Dataset, Metric), Error> {
        let metric = match (&self.metric, &self.space) {
            (Some(m), _) => m.clone(),
            (None, Some(s)) => s.metric.clone(),
            (None, None) => return Err(Error::Input("give --space or --metric".into())),
        };
        let data = match &self.data {
            Some(path) => {
                let d = load_vectors(path)?;
                let space = Space::new(metric.clone(), d.dim());
                let label = match &self.space {
                    Some(s) if s.dim == d.dim() => space.label(),
                    Some(s) => {
                        return Err(Error::Input(format!(
                            "{} holds {}-dimensional vectors, not {}",
                            path.display(),
                            d.dim(),
                            s
                        )))
                    }
                    None => d.label().to_string(),
                };
                space.prepare(d)?.with_label(label)
            }
            None => {
                let Some(s) = &self.space else {
                    return Err(Error::Input("give --space or --data".into()));
                };
                Space::new(metric.clone(), s.dim).generate(self.n, self.seed)?
            }
        };
        Ok((data, metric))
    }
}

fn emit(table: &Table, out: &OutArgs, command: &str) -> io::Result<()> {
    let mut w: Box<dyn Write> = match &out.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    if out.markdown {
        w.write_all(table.to_markdown().as_bytes())?;
    } else {
        table.write_csv(&mut w, Some(&bench::run_comment(command)))?;
    }
    w.flush()
}

fn gen(a: &GenArgs) -> Outcome {
    if a.out.exists() && !a.force {
        return Err(Error::Input(format!("{} exists; pass --force to overwrite", a.out.display())).into());
    }
    let d = a.space.generate(a.n, a.seed)?;
    save_vectors(&d, &a.out, Format::from_path(&a.out))?;
    eprintln!("wrote {} vectors of {} to {}", d.len(), a.space, a.out.display());
    Ok(())
}

fn profile(a: &ProfileArgs) -> Outcome {
    let (d, metric) = a.data.load()?;
    let p = analysis::profile(&d, &metric, a.idim_pairs, a.data.seed)?;
    emit(&bench::profile_table(&[p]), &a.out, "profile")?;
    Ok(())
}

fn power(a: &PowerArgs) -> Outcome {
    let (d, metric) = a.data.load()?;
    let ts = bench::resolve_thresholds(&d, &metric, &a.thresholds.threshold, &a.thresholds.per_million, a.data.seed)?;
    let idim = analysis::idim(&d, &metric, a.idim_pairs, a.data.seed)?;
    let values: Vec<f64> = ts.iter().map(|x| x.1).collect();
    let results: Vec<_> = analysis::exclusion_power_multi(&d, &metric, &values, a.trials, a.data.seed)?
        .into_iter()
        .zip(&ts)
        .map(|(r, (label, _))| r.with_label(label.clone()))
        .collect();
    let mut table = Table::new(&bench::POWER_HEADER);
    bench::push_power_rows(&mut table, d.label(), idim, &results);
    emit(&table, &a.out, "power")?;
    Ok(())
}

fn query_bench(a: &QueryBenchArgs) -> Outcome {
    let (d, metric) = a.data.load()?;
    for s in &a.strategy {
        s.check(&metric)?;
    }
    let thresholds =
        bench::resolve_thresholds(&d, &metric, &a.thresholds.threshold, &a.thresholds.per_million, a.data.seed)?;
    let cfg = CostConfig {
        trees: a.tree.clone(),
        strategies: a.strategy.clone(),
        thresholds,
        queries: a.queries,
        leaf_capacity: a.leaf_capacity,
        seed: a.data.seed,
        verify: a.verify,
    };
    let report = bench::query_cost(&d, &metric, &cfg)?;
    emit(&report.table(), &a.out, "query-bench")?;
    let (bad, dom) = (report.mismatches(), report.dominance_violations());
    if a.verify && (bad > 0 || dom > 0) {
        return Err(Failure::Verification(format!(
            "{bad} result-set mismatches, {dom} dominance violations"
        )));
    }
    Ok(())
}

fn plot_data(a: &PlotArgs) -> Outcome {
    let (d, metric) = a.data.load()?;
    let per_million = match (a.thresholds.threshold.is_empty(), a.thresholds.per_million.is_empty()) {
        (true, true) => vec![TARGET_COUNTS[0]],
        _ => a.thresholds.per_million.clone(),
    };
    let ts = bench::resolve_thresholds(&d, &metric, &a.thresholds.threshold, &per_million, a.data.seed)?;
    let [(_, t)] = ts.as_slice() else {
        return Err(Error::Input("plot-data takes exactly one threshold".into()).into());
    };
    let rows = bench::plot_data(&d, &metric, *t, a.data.seed)?;
    emit(&bench::plot_table(&rows), &a.out, "plot-data")?;
    Ok(())
}

fn set_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("HILBEX_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("HILBEX_THREADS={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = set_threads().map_err(Failure::from).and_then(|()| match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Profile(a) => profile(a),
        Command::Power(a) => power(a),
        Command::QueryBench(a) => query_bench(a),
        Command::PlotData(a) => plot_data(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("hilbex: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("hilbex: verification failed: {msg}");
            ExitCode::from(3)
        }
    }
}
