//! Command-line front end: `ingest`, `synth`, `train` and `report`.
//!
//! Every option can also come from a `key = value` file passed with
//! `--config` (keys are the long flag names, `-` or `_` both accepted);
//! flags win over the file. Each command writes `manifest.txt` next to its
//! outputs. The manifest is itself a valid config file: resolved settings
//! are plain `key = value` lines and provenance (tool version, command,
//! input digests) sits in `#` comments.
//!
//! Exit codes: 0 success, 1 validation or parse error, 2 I/O error.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::analysis::{self, ReportParams};
use crate::error::Error;
use crate::ingest::{self, CsvFormatSpec, ProductCatalog};
use crate::report;
use crate::som::{self, InitMode, RateSchedule, SomConfig};
use crate::synth::{self, SynthSpec};

pub const BASKETS_FILE: &str = "baskets.csv";
pub const CATALOG_FILE: &str = "catalog.csv";
pub const MAP_FILE: &str = "som.map";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const UMATRIX_FILE: &str = "umatrix.pgm";
pub const GRIDMAP_FILE: &str = "gridmap.txt";
pub const CLUSTERS_FILE: &str = "clusters.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const STATS_FILE: &str = "stats.csv";

#[derive(Debug, Parser)]
#[command(name = "basketmap", version, about = "Market-basket analysis with self-organizing maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Group a transaction log into a binary basket matrix.
    Ingest(IngestArgs),
    /// Generate a synthetic basket matrix with planted product groups.
    Synth(SynthArgs),
    /// Train a self-organizing map on a basket matrix.
    Train(TrainArgs),
    /// Compute the U-matrix, clusters, labels and statistics of a trained map.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Transaction log (9 columns, header row).
    #[arg(long)]
    input: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Field delimiter; `tab` for tabs. Default `;`.
    #[arg(long)]
    delimiter: Option<String>,
    /// chrono format of the date column. Default `%d/%m/%Y`.
    #[arg(long)]
    date_format: Option<String>,
    /// Digit-group separator stripped from prices, or `none`. Default `.`.
    #[arg(long)]
    thousands_separator: Option<String>,
    /// Skip invalid rows instead of failing.
    #[arg(long)]
    allow_bad_rows: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: Option<String>,
    /// Number of baskets. Default 5000.
    #[arg(long)]
    n_baskets: Option<usize>,
    /// Catalog size. Default 30.
    #[arg(long)]
    n_products: Option<usize>,
    /// In-group inclusion probability. Default 0.8.
    #[arg(long)]
    p_in: Option<f64>,
    /// Background inclusion probability. Default 0.05.
    #[arg(long)]
    p_bg: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Basket matrix file.
    #[arg(long)]
    baskets: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Grid rows. Default 10.
    #[arg(long)]
    rows: Option<usize>,
    /// Grid columns. Default 12.
    #[arg(long)]
    cols: Option<usize>,
    /// Learning rate in (0, 1]. Default 0.8.
    #[arg(long)]
    rate: Option<f64>,
    /// Training iterations. Default 20000.
    #[arg(long)]
    iters: Option<usize>,
    /// Default 0.
    #[arg(long)]
    seed: Option<u64>,
    /// `constant` or `linear_decay`. Default constant.
    #[arg(long)]
    schedule: Option<String>,
    /// `random_binary` or `random_uniform`. Default random_binary.
    #[arg(long)]
    init: Option<String>,
    /// Default max(rows, cols) / 2.
    #[arg(long)]
    initial_radius: Option<f64>,
    /// Default 1.
    #[arg(long)]
    final_radius: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Trained map file.
    #[arg(long)]
    map: Option<String>,
    /// Basket matrix file the map was trained on.
    #[arg(long)]
    baskets: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// U-value percentile separating cluster cells from borders. Default 40.
    #[arg(long)]
    percentile: Option<f64>,
    /// Minimum weight component for a product to label a cell. Default 0.5.
    #[arg(long)]
    theta: Option<f64>,
    /// Share of a cluster's cells a product must label to be dominant. Default 0.5.
    #[arg(long)]
    dominant_share: Option<f64>,
    /// Pixels per U-matrix cell. Default 16.
    #[arg(long)]
    scale: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_io() => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_config_text(text: &str) -> std::result::Result<HashMap<String, String>, String> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
        map.insert(normalize_key(key), value.trim().to_string());
    }
    Ok(map)
}

/// Flag → config file → default resolution, remembering every resolved
/// value for the manifest.
struct Settings {
    file: HashMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Settings {
    fn load(config: Option<&Path>) -> CliResult<Self> {
        let file = match config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                parse_config_text(&text).map_err(CliError::Usage)?
            }
            None => HashMap::new(),
        };
        Ok(Settings { file, resolved: BTreeMap::new() })
    }

    fn resolve<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> CliResult<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(text) => text
                    .parse()
                    .map_err(|e| CliError::Usage(format!("config `{key} = {text}`: {e}")))?,
                None => default.ok_or_else(|| {
                    CliError::Usage(format!("missing required --{}", key.replace('_', "-")))
                })?,
            },
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    fn optional<T>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        if flag.is_none() && !self.file.contains_key(key) {
            return Ok(None);
        }
        self.resolve(key, flag, None).map(Some)
    }

    fn switch(&mut self, key: &str, flag: bool) -> CliResult<bool> {
        self.resolve(key, flag.then_some(true), Some(false))
    }

    /// Fails on config keys no option consumed.
    fn finish(&self) -> CliResult<()> {
        let mut unknown: Vec<&String> = self
            .file
            .keys()
            .filter(|k| !self.resolved.contains_key(*k) && *k != "config")
            .collect();
        unknown.sort();
        match unknown.first() {
            Some(k) => Err(CliError::Usage(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    /// Input role → SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
}

impl RunManifest {
    fn new(command: &str, settings: &Settings) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: settings.resolved.clone(),
            inputs: BTreeMap::new(),
            seed: settings.resolved.get("seed").and_then(|s| s.parse().ok()),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# basketmap run manifest\n");
        out.push_str(&format!("# tool_version = {}\n", self.tool_version));
        out.push_str(&format!("# command = {}\n", self.command));
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed = {seed}\n"));
        }
        for (role, digest) in &self.inputs {
            out.push_str(&format!("# sha256 {role} = {digest}\n"));
        }
        for (key, value) in &self.config {
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }

    fn write(&self, dir: &Path) -> CliResult<()> {
        fs::write(dir.join(MANIFEST_FILE), self.render())?;
        Ok(())
    }
}

fn read_input(path: &str) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| {
        CliError::Core(Error::Io(std::io::Error::new(e.kind(), format!("{path}: {e}"))))
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn prepare_out(path: &str) -> CliResult<PathBuf> {
    let dir = PathBuf::from(path);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_catalog(catalog: &ProductCatalog, dir: &Path) -> CliResult<()> {
    let mut w = create(dir, CATALOG_FILE)?;
    writeln!(w, "index,product")?;
    let mut record = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for (i, name) in catalog.products().iter().enumerate() {
        record.write_record([i.to_string(), name.clone()]).map_err(Error::from)?;
    }
    w.write_all(&record.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
    w.flush()?;
    Ok(())
}

fn parse_delimiter(text: &str) -> CliResult<u8> {
    match text {
        "tab" | "\\t" => Ok(b'\t'),
        s if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        other => Err(CliError::Usage(format!("delimiter must be one ASCII character or `tab`, got `{other}`"))),
    }
}

fn cmd_ingest(args: IngestArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let mut s = Settings::load(args.config.as_deref())?;
    let input = s.resolve("input", args.input, None)?;
    let out_dir = s.resolve("out", args.out, None)?;
    let delimiter = s.resolve("delimiter", args.delimiter, Some(";".to_string()))?;
    let date_format = s.resolve("date_format", args.date_format, Some("%d/%m/%Y".to_string()))?;
    let thousands = s.resolve("thousands_separator", args.thousands_separator, Some(".".to_string()))?;
    let allow_bad_rows = s.switch("allow_bad_rows", args.allow_bad_rows)?;
    s.finish()?;

    let format = CsvFormatSpec {
        delimiter: parse_delimiter(&delimiter)?,
        thousands_separator: match thousands.as_str() {
            "none" | "" => None,
            t if t.chars().count() == 1 => t.chars().next(),
            other => return Err(CliError::Usage(format!("thousands separator `{other}` must be one character"))),
        },
        date_format,
    };

    let bytes = read_input(&input)?;
    let parsed = ingest::parse_transactions(bytes.as_slice(), &format)?;
    for bad in &parsed.bad_rows {
        writeln!(err, "{input}: {bad}")?;
    }
    if !parsed.bad_rows.is_empty() && !allow_bad_rows {
        return Err(CliError::Usage(format!(
            "{} invalid row(s); fix them or pass --allow-bad-rows",
            parsed.bad_rows.len()
        )));
    }
    if parsed.rows.is_empty() {
        return Err(Error::EmptyInput(format!("{input} has no valid data rows")).into());
    }
    let catalog = ingest::build_catalog(&parsed.rows)?;
    let baskets = ingest::group_baskets(&parsed.rows, &catalog)?;

    let dir = prepare_out(&out_dir)?;
    let mut w = create(&dir, BASKETS_FILE)?;
    ingest::write_basket_matrix(&baskets, &catalog, &mut w)?;
    w.flush()?;
    write_catalog(&catalog, &dir)?;
    let mut manifest = RunManifest::new("ingest", &s);
    manifest.inputs.insert("input".into(), sha256_hex(&bytes));
    manifest.write(&dir)?;

    writeln!(out, "{} rows, {} products, {} baskets", parsed.rows.len(), catalog.len(), baskets.len())?;
    let mut per_month: BTreeMap<String, usize> = BTreeMap::new();
    for b in &baskets {
        *per_month.entry(b.date().format("%Y-%m").to_string()).or_default() += 1;
    }
    if per_month.len() > 1 {
        for (month, n) in &per_month {
            writeln!(out, "  {month}: {n} baskets")?;
        }
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut s = Settings::load(args.config.as_deref())?;
    let out_dir = s.resolve("out", args.out, None)?;
    let n_baskets = s.resolve("n_baskets", args.n_baskets, Some(5000))?;
    let n_products = s.resolve("n_products", args.n_products, Some(30))?;
    let p_in = s.resolve("p_in", args.p_in, Some(0.8))?;
    let p_bg = s.resolve("p_bg", args.p_bg, Some(0.05))?;
    let seed = s.resolve("seed", args.seed, Some(0))?;
    s.finish()?;

    if n_products < 12 {
        return Err(CliError::Usage("n_products must be ≥ 12 for three groups of four".into()));
    }
    let mut spec = SynthSpec::three_groups(n_baskets, n_products, seed);
    spec.p_bg = p_bg;
    for g in &mut spec.groups {
        g.p_in = p_in;
    }
    let baskets = synth::generate(&spec)?;
    let catalog = synth::catalog(n_products)?;

    let dir = prepare_out(&out_dir)?;
    let mut w = create(&dir, BASKETS_FILE)?;
    ingest::write_basket_matrix(&baskets, &catalog, &mut w)?;
    w.flush()?;
    write_catalog(&catalog, &dir)?;
    RunManifest::new("synth", &s).write(&dir)?;

    let groups: Vec<String> = spec
        .groups
        .iter()
        .map(|g| g.products.iter().map(|&p| catalog.products()[p].clone()).collect::<Vec<_>>().join(" "))
        .collect();
    writeln!(out, "{} baskets, {} products", baskets.len(), catalog.len())?;
    writeln!(out, "planted groups: {}", groups.join(" | "))?;
    Ok(())
}

fn load_baskets(path: &str) -> CliResult<(Vec<u8>, ProductCatalog, Vec<ingest::Basket>)> {
    let bytes = read_input(path)?;
    let (catalog, baskets) = ingest::read_basket_matrix(bytes.as_slice())?;
    Ok((bytes, catalog, baskets))
}

fn cmd_train(args: TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut s = Settings::load(args.config.as_deref())?;
    let baskets_path = s.resolve("baskets", args.baskets, None)?;
    let out_dir = s.resolve("out", args.out, None)?;
    let defaults = SomConfig::default();
    let rows = s.resolve("rows", args.rows, Some(defaults.rows))?;
    let cols = s.resolve("cols", args.cols, Some(defaults.cols))?;
    let rate = s.resolve("rate", args.rate, Some(defaults.learning_rate))?;
    let iters = s.resolve("iters", args.iters, Some(defaults.iterations))?;
    let seed = s.resolve("seed", args.seed, Some(defaults.seed))?;
    let schedule: RateSchedule = s.resolve("schedule", args.schedule, Some("constant".to_string()))?.parse()?;
    let init: InitMode = s.resolve("init", args.init, Some("random_binary".to_string()))?.parse()?;
    let initial_radius = s.optional("initial_radius", args.initial_radius)?;
    let final_radius = s.resolve("final_radius", args.final_radius, Some(defaults.final_radius))?;
    s.finish()?;

    let config = SomConfig {
        rows,
        cols,
        learning_rate: rate,
        iterations: iters,
        seed,
        init_mode: init,
        rate_schedule: schedule,
        initial_radius,
        final_radius,
    };
    config.validate()?;

    let (bytes, _, baskets) = load_baskets(&baskets_path)?;
    let (grid, train_report) = som::train(&baskets, &config)?;

    let dir = prepare_out(&out_dir)?;
    let mut w = create(&dir, MAP_FILE)?;
    som::write_map(&grid, &config, &mut w)?;
    w.flush()?;
    let mut manifest = RunManifest::new("train", &s);
    manifest.inputs.insert("baskets".into(), sha256_hex(&bytes));
    manifest.write(&dir)?;

    writeln!(out, "trained {}x{} map on {} baskets ({} iterations, seed {})", rows, cols, baskets.len(), iters, seed)?;
    writeln!(out, "initial quantization error: {:.6}", train_report.initial_qe)?;
    writeln!(out, "final quantization error:   {:.6}", train_report.final_qe)?;
    Ok(())
}

fn cmd_report(args: ReportArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut s = Settings::load(args.config.as_deref())?;
    let map_path = s.resolve("map", args.map, None)?;
    let baskets_path = s.resolve("baskets", args.baskets, None)?;
    let out_dir = s.resolve("out", args.out, None)?;
    let percentile = s.resolve("percentile", args.percentile, Some(analysis::DEFAULT_PERCENTILE))?;
    let theta = s.resolve("theta", args.theta, Some(analysis::DEFAULT_THETA))?;
    let dominant_share = s.resolve("dominant_share", args.dominant_share, Some(analysis::DEFAULT_DOMINANT_SHARE))?;
    let scale = s.resolve("scale", args.scale, Some(16))?;
    s.finish()?;

    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(CliError::Usage(format!("percentile must be in (0, 100), got {percentile}")));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(CliError::Usage(format!("theta must be in (0, 1], got {theta}")));
    }
    if !(dominant_share > 0.0 && dominant_share <= 1.0) {
        return Err(CliError::Usage(format!("dominant share must be in (0, 1], got {dominant_share}")));
    }
    if scale == 0 {
        return Err(CliError::Usage("scale must be ≥ 1".into()));
    }

    let map_bytes = read_input(&map_path)?;
    let (grid, _) = som::read_map(map_bytes.as_slice())?;
    let (basket_bytes, catalog, baskets) = load_baskets(&baskets_path)?;
    let params = ReportParams { percentile, theta, dominant_share };

    let umatrix = analysis::compute_umatrix(&grid);
    let assoc = analysis::build_report(&grid, &umatrix, &baskets, &catalog, &params)?;
    let image = report::render_umatrix(&umatrix, scale)?;

    let dir = prepare_out(&out_dir)?;
    let mut w = create(&dir, UMATRIX_FILE)?;
    report::write_pgm(&image, &mut w)?;
    w.flush()?;
    let mut w = create(&dir, GRIDMAP_FILE)?;
    report::emit_grid_map(grid.rows(), grid.cols(), &assoc.cell_labels, &assoc.clusters, &mut w)?;
    w.flush()?;
    let mut w = create(&dir, CLUSTERS_FILE)?;
    report::write_clusters_csv(&assoc.clusters, &mut w)?;
    let mut w = create(&dir, LABELS_FILE)?;
    report::write_labels_csv(&assoc.cell_labels, &mut w)?;
    let mut w = create(&dir, STATS_FILE)?;
    report::write_stats_csv(&assoc, &mut w)?;

    let mut manifest = RunManifest::new("report", &s);
    manifest.inputs.insert("map".into(), sha256_hex(&map_bytes));
    manifest.inputs.insert("baskets".into(), sha256_hex(&basket_bytes));
    manifest.write(&dir)?;

    let labelled = assoc.cell_labels.len();
    writeln!(out, "{} clusters, {} labelled cells, {} associated products", assoc.clusters.len(), labelled, assoc.support.len())?;
    for cluster in &assoc.clusters {
        writeln!(
            out,
            "  C{}: {} cells, dominant: {}",
            cluster.id,
            cluster.cells.len(),
            if cluster.dominant_products.is_empty() { "-".to_string() } else { cluster.dominant_products.join(", ") }
        )?;
    }
    Ok(())
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(a, out, err),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Report(a) => cmd_report(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
