//! Trains the default hybrid model on the bundled MNIST sample and prints the
//! per-epoch metrics as CSV.
//!
//! ```bash
//! cargo run --release -p qfilter --example train_mnist
//! cargo run --release -p qfilter --example train_mnist -- classical 3
//! ```
//!
//! The optional arguments are the filter kind (`variational`, `fixed`,
//! `classical`) and the seed. `QFILTER_WORKERS` sets the worker count.

use std::path::PathBuf;

use qfilter::cli::{run_training, RunConfig};
use qfilter::train::METRICS_HEADER;
use qfilter::{Executor, FilterKind};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-mini")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let kind: FilterKind = args.next().as_deref().unwrap_or("variational").parse()?;
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let dir = data_dir();
    let mut config = RunConfig::with_paths(
        dir.join("train-images-idx3-ubyte"),
        dir.join("train-labels-idx1-ubyte"),
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
    );
    config.filter_kind = kind;
    config.seed = seed;
    config.subset_seed = seed;

    let executor = Executor::from_env()?;
    let outcome = run_training(&config, &executor)?;
    println!("{METRICS_HEADER}");
    for r in &outcome.records {
        println!("{}", r.csv_row());
    }
    Ok(())
}
