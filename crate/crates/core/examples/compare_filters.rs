//! Trains the variational, fixed and classical filter variants under the same
//! settings and prints their accuracy curves side by side.
//!
//! ```bash
//! cargo run --release -p qfilter --example compare_filters -- 10
//! ```
//!
//! The optional argument is the epoch count (default 30).

use std::path::PathBuf;

use qfilter::cli::{run_training, RunConfig};
use qfilter::{Executor, FilterKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(30);
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-mini");
    let exec = Executor::from_env()?;
    let kinds = [FilterKind::Variational, FilterKind::Fixed, FilterKind::Classical];
    let mut curves = Vec::new();
    for kind in kinds {
        let mut config = RunConfig::with_paths(
            dir.join("train-images-idx3-ubyte"),
            dir.join("train-labels-idx1-ubyte"),
            dir.join("t10k-images-idx3-ubyte"),
            dir.join("t10k-labels-idx1-ubyte"),
        );
        config.filter_kind = kind;
        config.epochs = epochs;
        let outcome = run_training(&config, &exec)?;
        let secs: f64 = outcome.records.iter().map(|r| r.epoch_seconds).sum();
        eprintln!("{kind}: {secs:.1}s");
        curves.push(outcome.records);
    }
    println!("epoch  {:>22}{:>22}{:>22}", "variational", "fixed", "classical");
    println!("       {:>22}{:>22}{:>22}", "train / test", "train / test", "train / test");
    for e in 0..epochs {
        let cells: String = curves
            .iter()
            .map(|c| format!("{:>22}", format!("{:.2} / {:.2}", c[e].train_accuracy, c[e].test_accuracy)))
            .collect();
        println!("{:>5}  {cells}", e + 1);
    }
    Ok(())
}
