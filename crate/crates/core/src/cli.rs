//! Command-line front end: `train`, `eval`, `bench` and `opcount`.
//!
//! Settings resolve as command-line flags, then a `key = value` config file
//! given with `--config`, then built-in defaults.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::Checkpoint;
use crate::convnet::{self, Architecture, FilterKind, HybridModel, ImageTensor};
use crate::data::{self, Dataset};
use crate::error::{Error, Result};
use crate::executor::{Executor, WORKERS_ENV};
use crate::filter::Estimator;
use crate::optim::{AdadeltaConfig, SgdConfig};
use crate::train::{self, MetricsRecord, TrainConfig, Trainer, METRICS_HEADER};

#[derive(Debug, Parser)]
#[command(name = "qfilter", version, about = "Hybrid quantum-classical image classifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write per-epoch metrics plus a checkpoint.
    Train(Box<TrainArgs>),
    /// Report accuracy and confusion counts of a checkpoint.
    Eval(EvalArgs),
    /// Time the convolution forward pass per image.
    Bench(BenchArgs),
    /// Count inner products: floor(l/n)^2 * m * p * t.
    Opcount(OpcountArgs),
}

#[derive(Debug, Default, Args)]
pub struct TrainArgs {
    /// Config file of `key = value` lines (keys match the long flag names).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub train_images: Option<PathBuf>,
    #[arg(long)]
    pub train_labels: Option<PathBuf>,
    #[arg(long)]
    pub test_images: Option<PathBuf>,
    #[arg(long)]
    pub test_labels: Option<PathBuf>,
    /// variational | fixed | classical
    #[arg(long)]
    pub filter_kind: Option<FilterKind>,
    /// overlap | hadamard (ignored for classical filters)
    #[arg(long)]
    pub estimator: Option<Estimator>,
    /// Filter edge length.
    #[arg(long = "filter-size", short = 'n')]
    pub filter_size: Option<usize>,
    /// Number of filters.
    #[arg(long = "num-filters", short = 'm')]
    pub num_filters: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub train_count: Option<usize>,
    #[arg(long)]
    pub test_count: Option<usize>,
    /// Model initialization seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed for subset selection and mini-batch shuffling.
    #[arg(long)]
    pub subset_seed: Option<u64>,
    /// Samples per optimizer step; 0 means full batch.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub sgd_lr: Option<f64>,
    #[arg(long)]
    pub adadelta_rho: Option<f64>,
    #[arg(long)]
    pub adadelta_eps: Option<f64>,
    #[arg(long)]
    pub adadelta_lr: Option<f64>,
    /// Pixel-to-angle multiplier of the embedding.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Draw subsets uniformly instead of stratified by class.
    #[arg(long)]
    pub random_subset: bool,
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Evaluate a stratified subset of this size instead of the whole file.
    #[arg(long)]
    pub count: Option<usize>,
    /// Subset seed; defaults to the one stored in the checkpoint.
    #[arg(long)]
    pub subset_seed: Option<u64>,
    #[arg(long)]
    pub random_subset: bool,
    #[arg(long, env = WORKERS_ENV, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Optional IDX image file; seeded random images are used otherwise.
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Images timed per row.
    #[arg(long, default_value_t = 2)]
    pub count: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,4")]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "overlap,hadamard")]
    pub estimators: Vec<String>,
    #[arg(long, short = 'm', default_value_t = 4)]
    pub num_filters: usize,
    /// Worker counts for the scaling rows.
    #[arg(long, value_delimiter = ',', default_value = "1,4")]
    pub workers: Vec<usize>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OpcountArgs {
    /// Image edge length.
    pub l: u64,
    /// Filter edge length.
    pub n: u64,
    /// Number of filters.
    pub m: u64,
    /// Number of images.
    pub p: u64,
    /// Number of epochs.
    pub t: u64,
}

/// Every setting of a training run after resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    pub filter_kind: FilterKind,
    pub estimator: Estimator,
    pub filter_size: usize,
    pub num_filters: usize,
    pub epochs: usize,
    pub train_count: usize,
    pub test_count: usize,
    pub seed: u64,
    pub subset_seed: u64,
    pub batch_size: Option<usize>,
    pub sgd: SgdConfig,
    pub adadelta: AdadeltaConfig,
    pub scale: f64,
    pub stratified: bool,
    pub workers: usize,
    pub metrics_out: PathBuf,
    pub checkpoint_out: PathBuf,
}

impl RunConfig {
    /// Built-in defaults with the given dataset files.
    pub fn with_paths(
        train_images: impl Into<PathBuf>,
        train_labels: impl Into<PathBuf>,
        test_images: impl Into<PathBuf>,
        test_labels: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            train_images: train_images.into(),
            train_labels: train_labels.into(),
            test_images: test_images.into(),
            test_labels: test_labels.into(),
            filter_kind: FilterKind::Variational,
            estimator: Estimator::OverlapSquared,
            filter_size: 2,
            num_filters: 4,
            epochs: 30,
            train_count: 50,
            test_count: 30,
            seed: 0,
            subset_seed: 0,
            batch_size: Some(1),
            sgd: SgdConfig::default(),
            adadelta: AdadeltaConfig::default(),
            scale: 1.0,
            stratified: true,
            workers: 1,
            metrics_out: PathBuf::from("metrics.csv"),
            checkpoint_out: PathBuf::from("model.ckpt"),
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            kind: self.filter_kind,
            estimator: self.estimator,
            filter_size: self.filter_size,
            num_filters: self.num_filters,
            image_height: 28,
            image_width: 28,
            scale: self.scale,
        }
        .with_kind(self.filter_kind)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            sgd: self.sgd,
            adadelta: self.adadelta,
            shuffle_seed: self.subset_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.filter_size == 0 || self.num_filters == 0 || self.train_count == 0 {
            return Err(Error::Config(
                "filter size, filter count and train count must be positive".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        self.adadelta.validate()?;
        if !matches!(self.filter_size, 2 | 4) && self.filter_kind != FilterKind::Classical {
            warn!(
                "filter size {} simulates {} qubits per window; cost grows as 2^(n²)",
                self.filter_size,
                self.filter_size * self.filter_size
            );
        }
        Ok(())
    }

    /// Resolves flags over an optional config file over defaults.
    pub fn resolve(args: &TrainArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => parse_config_file(p)?,
            None => HashMap::new(),
        };
        let r = Resolver { file: &file };
        let path = |flag: &Option<PathBuf>, key: &str| -> Result<PathBuf> {
            flag.clone()
                .or_else(|| file.get(key).map(PathBuf::from))
                .ok_or_else(|| Error::Config(format!("missing `{key}` (flag --{})", key.replace('_', "-"))))
        };
        let mut c = RunConfig::with_paths(
            path(&args.train_images, "train_images")?,
            path(&args.train_labels, "train_labels")?,
            path(&args.test_images, "test_images")?,
            path(&args.test_labels, "test_labels")?,
        );
        c.filter_kind = r.get(&args.filter_kind, "filter_kind", c.filter_kind)?;
        c.estimator = r.get(&args.estimator, "estimator", c.estimator)?;
        c.filter_size = r.get(&args.filter_size, "filter_size", c.filter_size)?;
        c.num_filters = r.get(&args.num_filters, "num_filters", c.num_filters)?;
        c.epochs = r.get(&args.epochs, "epochs", c.epochs)?;
        c.train_count = r.get(&args.train_count, "train_count", c.train_count)?;
        c.test_count = r.get(&args.test_count, "test_count", c.test_count)?;
        c.seed = r.get(&args.seed, "seed", c.seed)?;
        c.subset_seed = r.get(&args.subset_seed, "subset_seed", c.subset_seed)?;
        let batch = r.get(&args.batch_size, "batch_size", c.batch_size.unwrap_or(0))?;
        c.batch_size = (batch > 0).then_some(batch);
        c.sgd = SgdConfig::new(r.get(&args.sgd_lr, "sgd_lr", c.sgd.learning_rate)?)?;
        c.adadelta.rho = r.get(&args.adadelta_rho, "adadelta_rho", c.adadelta.rho)?;
        c.adadelta.epsilon = r.get(&args.adadelta_eps, "adadelta_eps", c.adadelta.epsilon)?;
        c.adadelta.lr_scale = r.get(&args.adadelta_lr, "adadelta_lr", c.adadelta.lr_scale)?;
        c.scale = r.get(&args.scale, "scale", c.scale)?;
        let random = args.random_subset || r.get(&None, "random_subset", false)?;
        c.stratified = !random;
        c.workers = r.get(&args.workers, "workers", c.workers)?;
        c.metrics_out = r.get(&args.metrics_out, "metrics_out", c.metrics_out)?;
        c.checkpoint_out = r.get(&args.checkpoint_out, "checkpoint_out", c.checkpoint_out)?;
        c.validate()?;
        Ok(c)
    }
}

struct Resolver<'a> {
    file: &'a HashMap<String, String>,
}

impl Resolver<'_> {
    fn get<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v.clone());
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Config(format!("bad value `{raw}` for `{key}`"))),
            None => Ok(default),
        }
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped, and
/// dashes in keys are read as underscores.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected `key = value`", no + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn parse_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn draw(dataset: &Dataset, total: usize, seed: u64, stratified: bool) -> Result<Dataset> {
    let subset = if stratified {
        data::stratified_subset(dataset, total, seed)?
    } else {
        data::random_subset(dataset, total, seed)?
    };
    if subset.underfilled {
        warn!("stratified subset of {total} could not fill every class evenly");
    }
    Ok(subset.dataset)
}

/// The training and test subsets a run uses.
pub fn load_subsets(config: &RunConfig) -> Result<(Dataset, Dataset)> {
    let train_full = Dataset::load(&config.train_images, &config.train_labels)?;
    let test_full = Dataset::load(&config.test_images, &config.test_labels)?;
    let train = draw(&train_full, config.train_count, config.subset_seed, config.stratified)?;
    let test = draw(&test_full, config.test_count, config.subset_seed, config.stratified)?;
    Ok((train, test))
}

pub struct TrainOutcome {
    pub records: Vec<MetricsRecord>,
    pub checkpoint: Checkpoint,
}

/// Trains in memory without touching the output paths.
pub fn run_training(config: &RunConfig, executor: &Executor) -> Result<TrainOutcome> {
    run_training_with(config, executor, |_| Ok(()))
}

fn run_training_with<F>(config: &RunConfig, executor: &Executor, mut on_epoch: F) -> Result<TrainOutcome>
where
    F: FnMut(&MetricsRecord) -> Result<()>,
{
    let (train_set, test_set) = load_subsets(config)?;
    let model = HybridModel::init(config.architecture(), config.seed)?;
    let mut trainer = Trainer::new(model, config.train_config(), executor)?;
    let mut failure = None;
    let records = trainer.fit(&train_set, &test_set, |rec, norms| {
        for (k, n) in norms.iter().enumerate() {
            info!(
                "epoch {} step {k}: |grad dense| = {:.4e}, |grad filters| = {:.4e}",
                rec.epoch, n.dense, n.filters
            );
        }
        info!(
            "epoch {}: loss {:.5} train acc {:.3} test acc {:.3} ({:.2}s)",
            rec.epoch, rec.train_loss, rec.train_accuracy, rec.test_accuracy, rec.epoch_seconds
        );
        if failure.is_none() {
            failure = on_epoch(rec).err();
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(TrainOutcome {
        records,
        checkpoint: Checkpoint {
            model: trainer.into_model(),
            init_seed: config.seed,
            subset_seed: config.subset_seed,
        },
    })
}

/// `train`: writes the metrics CSV row by row and the final checkpoint.
pub fn cmd_train(config: &RunConfig) -> Result<TrainOutcome> {
    let executor = Executor::new(config.workers)?;
    let path = &config.metrics_out;
    let mut csv = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    writeln!(csv, "{METRICS_HEADER}").map_err(|e| Error::io(path, e))?;
    csv.flush().map_err(|e| Error::io(path, e))?;
    let outcome = run_training_with(config, &executor, |rec| {
        writeln!(csv, "{}", rec.csv_row())
            .and_then(|_| csv.flush())
            .map_err(|e| Error::io(path, e))
    })?;
    outcome.checkpoint.save(&config.checkpoint_out)?;
    Ok(outcome)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<train::EvalReport> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let full = Dataset::load(&args.images, &args.labels)?;
    let dataset = match args.count {
        Some(n) => draw(&full, n, args.subset_seed.unwrap_or(ck.subset_seed), !args.random_subset)?,
        None => full,
    };
    train::evaluate(&ck.model, &dataset, &Executor::new(args.workers)?)
}

pub fn format_eval_report(report: &train::EvalReport) -> String {
    let mut s = format!("loss {:?}\naccuracy {:?}\nconfusion (row = true, column = predicted)\n", report.loss, report.accuracy);
    for (c, row) in report.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>4}")).collect();
        s.push_str(&format!("{c}: {}\n", cells.join("")));
    }
    s
}

pub const BENCH_HEADER: &str = "filter_size,qubits,estimator,workers,images,seconds_per_image";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub filter_size: usize,
    pub qubits: usize,
    pub estimator: Estimator,
    pub workers: usize,
    pub images: usize,
    pub seconds_per_image: f64,
}

impl BenchRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6}",
            self.filter_size, self.qubits, self.estimator, self.workers, self.images, self.seconds_per_image
        )
    }
}

fn bench_images(args: &BenchArgs) -> Result<Vec<ImageTensor>> {
    if args.count == 0 {
        return Err(Error::Config("bench needs at least one image".into()));
    }
    match &args.images {
        Some(p) => {
            let images = data::load_idx_images(p)?;
            if images.len() < args.count {
                return Err(Error::Length(format!("{} images available, {} requested", images.len(), args.count)));
            }
            Ok(images.into_iter().take(args.count).collect())
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            (0..args.count)
                .map(|_| ImageTensor::new(28, 28, (0..784).map(|_| rng.gen_range(0.0..=1.0)).collect()))
                .collect()
        }
    }
}

/// `bench`: seconds per image of the convolution forward pass for every
/// (filter size, estimator, worker count) combination.
pub fn cmd_bench(args: &BenchArgs) -> Result<Vec<BenchRow>> {
    let images = bench_images(args)?;
    let estimators = args
        .estimators
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<Estimator>>>()?;
    let mut rows = Vec::new();
    for &n in &args.sizes {
        for &est in &estimators {
            let arch = Architecture {
                filter_size: n,
                num_filters: args.num_filters,
                estimator: est,
                ..Architecture::mnist_default()
            }
            .with_kind(if est.is_quantum() { FilterKind::Variational } else { FilterKind::Classical });
            let model = HybridModel::init(arch, args.seed)?;
            let qubits = if est.is_quantum() {
                n * n + usize::from(est == Estimator::HadamardReal)
            } else {
                0
            };
            for &workers in &args.workers {
                let exec = Executor::new(workers)?;
                let start = Instant::now();
                for img in &images {
                    convnet::conv_forward_with(img, &model, &exec)?;
                }
                let row = BenchRow {
                    filter_size: n,
                    qubits,
                    estimator: est,
                    workers,
                    images: images.len(),
                    seconds_per_image: start.elapsed().as_secs_f64() / images.len() as f64,
                };
                info!("{}", row.csv_row());
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

pub fn write_bench_csv(mut out: impl Write, rows: &[BenchRow]) -> std::io::Result<()> {
    writeln!(out, "{BENCH_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn cmd_opcount(args: &OpcountArgs) -> Result<u64> {
    if [args.l, args.n, args.m, args.p, args.t].contains(&0) {
        return Err(Error::Config("opcount arguments must be positive".into()));
    }
    Ok(convnet::op_count(args.l, args.n, args.m, args.p, args.t))
}

/// Runs a parsed command, printing its report to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let config = RunConfig::resolve(&args)?;
            let outcome = cmd_train(&config)?;
            if let Some(last) = outcome.records.last() {
                println!(
                    "epoch {} train_acc {:?} test_acc {:?}",
                    last.epoch, last.train_accuracy, last.test_accuracy
                );
            }
            println!(
                "wrote {} and {}",
                config.metrics_out.display(),
                config.checkpoint_out.display()
            );
        }
        Command::Eval(args) => {
            print!("{}", format_eval_report(&cmd_eval(&args)?));
        }
        Command::Bench(args) => {
            let rows = cmd_bench(&args)?;
            match &args.out {
                Some(p) => {
                    let f = File::create(p).map_err(|e| Error::io(p, e))?;
                    write_bench_csv(BufWriter::new(f), &rows).map_err(|e| Error::io(p, e))?;
                }
                None => write_bench_csv(std::io::stdout().lock(), &rows)
                    .map_err(|e| Error::io("<stdout>", e))?,
            }
        }
        Command::Opcount(args) => println!("{}", cmd_opcount(&args)?),
    }
    Ok(())
}
