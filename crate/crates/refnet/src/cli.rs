//! `refnet` command-line driver.
//!
//! Flags marked with an environment variable below can also be set through
//! it; an explicit flag wins. Exit codes: 0 success, 1 usage error, 2 data
//! error, 3 internal error.

use std::{
    ffi::OsString,
    io::Write,
    path::{Path, PathBuf},
};

use clap::{Args, Parser, Subcommand};
use refnet_core::{
    ApproxConfig, BinSpec, CorrelationMethod, CurvatureConfig, CurvatureKinds, FilterConfig, MeasureConfig,
    Symmetrization,
};
use serde::Serialize;

use crate::{
    api::{self, AppState},
    dataset::{
        CorrelateQuery, CorrelateResponse, Dataset, DatasetPaths, DistributionQuery, Filters, DEFAULT_PERMUTATIONS,
        DEFAULT_SEED,
    },
    error::{Error, Result, EXIT_OK, EXIT_USAGE},
    export::{export_all, ExportOptions},
    ingest::{read_config_file, read_exclusion_list, EdgeFormat},
    parallel, pipeline,
};

#[derive(Debug, Parser)]
#[command(name = "refnet", version, about = "Physician referral networks and their curvature")]
pub struct Cli {
    /// Log filter, e.g. `info` or `refnet=debug`.
    #[arg(long, global = true, env = "REFNET_LOG", default_value = "warn")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse edge lists and write one graph bundle per (hsa, year).
    Build(BuildArgs),
    /// Add edge curvature to every bundle in a dataset directory.
    Curvature(CurvatureArgs),
    /// Write the per-network feature table.
    Features(FeaturesArgs),
    /// Correlate two feature columns, optionally per group.
    Correlate(CorrelateArgs),
    /// Summarize a metric's distribution per group.
    Distributions(DistributionsArgs),
    /// Write SQLite, CSV and JSONL exports with a manifest.
    Export(ExportArgs),
    /// Serve the dataset over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Edge list files (CSV, or NDJSON by extension).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Dataset directory to write.
    #[arg(long, env = "REFNET_OUT")]
    pub out: PathBuf,
    /// Minimum shared patients for an edge.
    #[arg(long, env = "REFNET_THRESHOLD")]
    pub threshold: Option<u64>,
    /// How (a,b) and (b,a) counts combine: sum or max.
    #[arg(long, env = "REFNET_SYMMETRIZATION")]
    pub symmetrization: Option<Symmetrization>,
    /// Provider ids to drop, one per line.
    #[arg(long, env = "REFNET_EXCLUDE_LIST")]
    pub exclude_list: Option<PathBuf>,
    /// `key = value` file with threshold, symmetrization, keep_isolated.
    #[arg(long, env = "REFNET_CONFIG")]
    pub config: Option<PathBuf>,
    /// Keep providers that have no retained edge.
    #[arg(long)]
    pub keep_isolated: bool,
    /// Force the input format instead of guessing from the extension.
    #[arg(long)]
    pub format: Option<EdgeFormat>,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    /// Worker threads (default: one per core).
    #[arg(long, env = "REFNET_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    pub dir: PathBuf,
    /// frc, orc or both (comma separated).
    #[arg(long, env = "REFNET_KINDS", default_value = "frc,orc")]
    pub kinds: CurvatureKinds,
    /// Mass kept on the node by the neighborhood measure, in [0, 1).
    #[arg(long, env = "REFNET_ALPHA", default_value_t = 0.0)]
    pub alpha: f64,
    /// Use the entropic approximation for edges with an endpoint of larger
    /// degree than this.
    #[arg(long)]
    pub approx_degree_cutoff: Option<usize>,
    #[arg(long, default_value_t = 1e-3, requires = "approx_degree_cutoff")]
    pub approx_regularization: f64,
    #[arg(long, default_value_t = 100_000, requires = "approx_degree_cutoff")]
    pub approx_max_iters: usize,
    #[command(flatten)]
    pub pool: PoolArgs,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    pub dir: PathBuf,
    #[command(flatten)]
    pub pool: PoolArgs,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    pub dir: PathBuf,
    /// Directory of metadata tables (default: `<dir>/metadata` if present).
    #[arg(long, env = "REFNET_METADATA")]
    pub metadata: Option<PathBuf>,
    /// `hsa,state,region` CSV (default: `<dir>/regions.csv` if present).
    #[arg(long, env = "REFNET_REGION_MAP")]
    pub region_map: Option<PathBuf>,
    #[command(flatten)]
    pub pool: PoolArgs,
}

impl DataArgs {
    fn load(&self, node_metrics: bool) -> Result<Dataset> {
        let pool = parallel::pool(self.pool.workers)?;
        let paths = DatasetPaths {
            metadata: self.metadata.clone(),
            region_map: self.region_map.clone(),
        };
        Dataset::load(&self.dir, &paths, node_metrics, &pool)
    }
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub hsa: Option<String>,
    #[arg(long)]
    pub year: Option<i32>,
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long)]
    pub region: Option<String>,
}

impl From<&FilterArgs> for Filters {
    fn from(a: &FilterArgs) -> Self {
        Filters {
            hsa: a.hsa.clone(),
            year: a.year,
            state: a.state.clone(),
            region: a.region.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    /// pearson or spearman.
    #[arg(long, default_value = "pearson")]
    pub method: CorrelationMethod,
    /// Group columns, comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    pub group: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    #[arg(long, env = "REFNET_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub filters: FilterArgs,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistributionsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `frc`/`orc` for edge values, or any numeric feature column.
    #[arg(long)]
    pub metric: String,
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long, default_value_t = BinSpec::default().bins)]
    pub bins: usize,
    #[command(flatten)]
    pub filters: FilterArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Directory for the exported files.
    #[arg(long, env = "REFNET_EXPORT_OUT")]
    pub out: PathBuf,
    /// Also write the thresholded edge table.
    #[arg(long)]
    pub emit_interactions: bool,
    /// Version string recorded in the manifest.
    #[arg(long, env = "REFNET_DATASET_VERSION")]
    pub dataset_version: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, env = "REFNET_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cli.log).try_init();
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("refnet: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Build(a) => build(a),
        Command::Curvature(a) => {
            let approx = a.approx_degree_cutoff.map(|degree_cutoff| ApproxConfig {
                degree_cutoff,
                regularization: a.approx_regularization,
                max_iters: a.approx_max_iters,
            });
            let config = CurvatureConfig {
                measure: MeasureConfig::new(a.alpha)?,
                approx,
            };
            let pool = parallel::pool(a.pool.workers)?;
            let n = pipeline::curvature(&a.dir, a.kinds, &config, &pool)?;
            log::info!("curvature written for {n} networks");
            Ok(())
        }
        Command::Features(a) => {
            let pool = parallel::pool(a.pool.workers)?;
            let rows = pipeline::write_features(&a.dir, &pool)?;
            log::info!("{} feature rows", rows.len());
            Ok(())
        }
        Command::Correlate(a) => {
            let data = a.data.load(false)?;
            let mut q = CorrelateQuery::new(a.x, a.y);
            q.method = a.method;
            q.group = a.group;
            q.permutations = a.permutations;
            q.seed = a.seed;
            q.filters = (&a.filters).into();
            write_json(&CorrelateResponse::run(&data, &q)?, a.out.as_deref())
        }
        Command::Distributions(a) => {
            let data = a.data.load(false)?;
            let q = DistributionQuery {
                metric: a.metric,
                group: a.group,
                bins: BinSpec { bins: a.bins, range: None },
                filters: (&a.filters).into(),
            };
            write_json(&data.distributions(&q)?, a.out.as_deref())
        }
        Command::Export(a) => {
            let data = a.data.load(false)?;
            std::fs::create_dir_all(&a.out).map_err(Error::io(&a.out))?;
            let opts = ExportOptions {
                dataset_version: a.dataset_version,
                emit_interactions: a.emit_interactions,
            };
            let manifest = export_all(&a.data.dir, &data, &a.out, &opts)?;
            for t in &manifest.tables {
                log::info!("{}: {} rows", t.name, t.rows);
            }
            Ok(())
        }
        Command::Serve(a) => {
            let data = a.data.load(true)?;
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| Error::Internal(format!("runtime: {e}")))?;
            rt.block_on(api::serve(AppState::new(data), &a.bind, |addr| {
                println!("listening on http://{addr}");
                let _ = std::io::stdout().flush();
            }))
        }
    }
}

fn build(a: BuildArgs) -> Result<()> {
    let file = match &a.config {
        Some(p) => read_config_file(p)?,
        None => Default::default(),
    };
    let mut config = FilterConfig::default();
    if let Some(t) = a.threshold.or(file.threshold) {
        config.min_shared_patients = t;
    }
    if let Some(s) = a.symmetrization.or(file.symmetrization) {
        config.symmetrization = s;
    }
    config.keep_isolated = a.keep_isolated || file.keep_isolated.unwrap_or(false);
    if let Some(p) = &a.exclude_list {
        config.excluded_providers = read_exclusion_list(p)?;
    }
    let log = pipeline::build(&a.inputs, a.format, &config, &a.out)?;
    log::info!(
        "{} networks from {} accepted records",
        log.networks.len(),
        log.parse.accepted
    );
    Ok(())
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    text.push(b'\n');
    match out {
        Some(p) => crate::bundle::write_atomic(p, &text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&text)
                .and_then(|_| stdout.flush())
                .map_err(Error::io("<stdout>"))
        }
    }
}
