use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use station_pulse::cluster::Algorithm;
use station_pulse::distance::{pairwise_matrix, Metric};
use station_pulse::ingest::{
    exclude_stations, load_readings, write_meta_to, write_readings_to, GridSpec,
};
use station_pulse::pipeline::{
    self, cluster_dataset, parse_k_range, spatial_scan, KChoice, RunConfig, SnapshotSpec,
};
use station_pulse::preprocess::{preprocess_all, NormalizationMethod};
use station_pulse::report::{
    annotate_clusters, build_report, emit_report, load_annotations, read_json, write_json,
    ClustersFile, MoranFile,
};
use station_pulse::spatial::{WeightScheme, DEFAULT_PERMUTATIONS};
use station_pulse::synth::{benchmark_set, default_grid, parse_kinds, write_labels, ArchetypeSpec};
use station_pulse::{Dataset, Warning};

#[derive(Parser)]
#[command(
    name = "station-pulse",
    version,
    about = "Behavioral clustering of fueling-station capacity series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load readings and station metadata onto an hourly grid.
    Ingest(IngestArgs),
    /// Impute gaps and normalize every station.
    Preprocess(PreprocessArgs),
    /// Write the pairwise distance matrix as CSV.
    Distance(DistanceArgs),
    /// Cluster stations, optionally choosing k by silhouette.
    Cluster(ClusterArgs),
    /// Moran's I permutation tests over snapshots.
    Spatial(SpatialArgs),
    /// Generate a labeled synthetic dataset.
    Synth(SynthArgs),
    /// Combine pipeline outputs into report.json and plotdata.csv.
    Report(ReportArgs),
    /// Full pipeline from raw CSVs to a report.
    Run(RunArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    readings: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    /// Comma-separated station ids to drop.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "min_max")]
    normalize: NormalizationMethod,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DistanceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "cid")]
    metric: Metric,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "cid")]
    metric: Metric,
    /// `auto` or a fixed cluster count.
    #[arg(long, default_value = "auto")]
    k: KChoice,
    /// Candidate range for `--k auto`, as `min:max`.
    #[arg(long, value_parser = parse_range)]
    k_range: Option<std::ops::RangeInclusive<usize>>,
    #[arg(long, default_value = "kmeans")]
    algo: Algorithm,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpatialArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `inverse_distance` or `knn:<k>`.
    #[arg(long, default_value = "inverse_distance")]
    scheme: WeightScheme,
    /// `auto`, `mean`, `every:<stride>` or a list of hour indices.
    #[arg(long, default_value = "auto")]
    snapshots: SnapshotSpec,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    perms: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Archetype counts, e.g. `reliable:8,overstressed:8,connector:8,cryo:8`.
    #[arg(long, default_value = "reliable:8,overstressed:8,connector:8,cryo:8")]
    kinds: String,
    #[arg(long, default_value_t = 2208)]
    hours: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth labels CSV.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Also write the series as a readings CSV.
    #[arg(long)]
    readings_out: Option<PathBuf>,
    /// Also write station metadata CSV.
    #[arg(long)]
    meta_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long)]
    moran: Option<PathBuf>,
    /// CSV of `station_id,label` used to name clusters.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long, default_value = "report.json")]
    out_json: PathBuf,
    #[arg(long, default_value = "plotdata.csv")]
    out_plot: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    readings: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    #[arg(long, default_value = "min_max")]
    normalize: NormalizationMethod,
    #[arg(long, default_value = "cid")]
    metric: Metric,
    #[arg(long, default_value = "kmeans")]
    algo: Algorithm,
    #[arg(long, default_value = "auto")]
    k: KChoice,
    #[arg(long, value_parser = parse_range)]
    k_range: Option<std::ops::RangeInclusive<usize>>,
    #[arg(long, default_value = "inverse_distance")]
    scheme: WeightScheme,
    #[arg(long, default_value = "auto")]
    snapshots: SnapshotSpec,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    perms: usize,
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Directory for dataset.json, clusters.json, moran.json, report.json
    /// and plotdata.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<usize>, String> {
    parse_k_range(s).map_err(|e| e.to_string())
}

fn warn_all(warnings: &[Warning]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Dataset::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, ds.to_json()?).with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn ingest(args: IngestArgs) -> Result<()> {
    let (ds, mut warnings) = load_readings(&args.readings, &args.meta, GridSpec::Infer)?;
    let (ds, w) = exclude_stations(&ds, &args.exclude)?;
    warnings.extend(w);
    warn_all(&warnings);
    save_dataset(&ds, &args.out)?;
    eprintln!("{} stations x {} hours", ds.len(), ds.grid.n_steps());
    Ok(())
}

fn preprocess(args: PreprocessArgs) -> Result<()> {
    let ds = load_dataset(&args.input)?;
    let (ds, warnings) = preprocess_all(&ds, args.normalize)?;
    warn_all(&warnings);
    save_dataset(&ds, &args.out)
}

fn distance(args: DistanceArgs) -> Result<()> {
    let ds = load_dataset(&args.input)?;
    let dm = pairwise_matrix(&ds, args.metric)?;
    dm.write_csv(create(&args.out)?)?;
    Ok(())
}

fn cluster(args: ClusterArgs) -> Result<()> {
    let ds = load_dataset(&args.input)?;
    if !ds.is_preprocessed() {
        eprintln!("warning: dataset has not been preprocessed");
    }
    let file = cluster_dataset(&ds, args.metric, args.algo, args.k, args.k_range, args.seed)?;
    write_json(&file, &args.out)?;
    eprintln!("k = {}, inertia = {:.6}", file.k, file.inertia);
    Ok(())
}

fn spatial(args: SpatialArgs) -> Result<()> {
    let ds = load_dataset(&args.input)?;
    let file = spatial_scan(&ds, args.scheme, &args.snapshots, args.perms, args.seed)?;
    warn_all(&file.warnings);
    write_json(&file, &args.out)?;
    eprintln!(
        "{} snapshots, {:.0}% not significant at 0.05",
        file.results.len(),
        100.0 * file.fraction_not_significant(0.05)
    );
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let grid = default_grid(args.hours)?;
    let specs: Vec<ArchetypeSpec> = parse_kinds(&args.kinds)?
        .into_iter()
        .map(|(kind, n)| ArchetypeSpec::new(kind, n, args.noise, args.seed, grid))
        .collect();
    let (ds, labels) = benchmark_set(&specs)?;
    save_dataset(&ds, &args.out)?;
    if let Some(path) = &args.labels {
        write_labels(&ds, &labels, create(path)?)?;
    }
    if let Some(path) = &args.readings_out {
        write_readings_to(&ds, create(path)?)?;
    }
    if let Some(path) = &args.meta_out {
        write_meta_to(&ds.metas(), create(path)?)?;
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let ds = load_dataset(&args.dataset)?;
    let clusters: ClustersFile = read_json(&args.clusters)?;
    let moran: Option<MoranFile> = args.moran.as_deref().map(read_json).transpose()?;
    let labels = match &args.annotations {
        Some(path) => Some(annotate_clusters(&clusters, &load_annotations(path)?)?),
        None => None,
    };
    let warnings = moran
        .as_ref()
        .map(|m| m.warnings.clone())
        .unwrap_or_default();
    let report = build_report(&ds, &clusters, moran.as_ref(), labels, warnings)?;
    emit_report(&report, &ds, &clusters, &args.out_json, &args.out_plot)?;
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = RunConfig::new(args.readings, args.meta, args.seed);
    config.exclude = args.exclude;
    config.normalization = args.normalize;
    config.metric = args.metric;
    config.algorithm = args.algo;
    config.k = args.k;
    config.k_range = args.k_range;
    config.scheme = args.scheme;
    config.snapshots = args.snapshots;
    config.n_permutations = args.perms;
    config.annotations = args.annotations;

    let out = pipeline::run(&config)?;
    warn_all(&out.report.warnings);

    let dir = &args.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    save_dataset(&out.dataset, &dir.join("dataset.json"))?;
    write_json(&out.clusters, &dir.join("clusters.json"))?;
    write_json(&out.moran, &dir.join("moran.json"))?;
    emit_report(
        &out.report,
        &out.dataset,
        &out.clusters,
        &dir.join("report.json"),
        &dir.join("plotdata.csv"),
    )?;
    eprintln!(
        "{} stations, k = {}, report written to {}",
        out.dataset.len(),
        out.clusters.k,
        dir.join("report.json").display()
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest(a) => ingest(a),
        Command::Preprocess(a) => preprocess(a),
        Command::Distance(a) => distance(a),
        Command::Cluster(a) => cluster(a),
        Command::Spatial(a) => spatial(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
        Command::Run(a) => run(a),
    }
}
