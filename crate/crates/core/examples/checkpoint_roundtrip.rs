//! Trains briefly, saves a checkpoint, reloads it and shows that the reloaded
//! model's predictions match exactly.
//!
//! ```bash
//! cargo run --release -p qfilter --example checkpoint_roundtrip
//! ```

use std::path::PathBuf;

use qfilter::cli::{run_training, RunConfig};
use qfilter::train::evaluate;
use qfilter::{Checkpoint, Dataset, Executor, FilterKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-mini");
    let mut config = RunConfig::with_paths(
        dir.join("train-images-idx3-ubyte"),
        dir.join("train-labels-idx1-ubyte"),
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
    );
    config.filter_kind = FilterKind::Classical;
    config.epochs = 5;
    config.train_count = 20;

    let exec = Executor::sequential();
    let outcome = run_training(&config, &exec)?;
    let path = std::env::temp_dir().join(format!("qfilter-{}.ckpt", std::process::id()));
    outcome.checkpoint.save(&path)?;
    let text = std::fs::read_to_string(&path)?;
    println!("checkpoint header:");
    for line in text.lines().take(9) {
        println!("  {line}");
    }

    let reloaded = Checkpoint::load(&path)?;
    println!("reloaded model identical: {}", reloaded == outcome.checkpoint);
    let test = Dataset::load(&config.test_images, &config.test_labels)?;
    let a = evaluate(&outcome.checkpoint.model, &test, &exec)?;
    let b = evaluate(&reloaded.model, &test, &exec)?;
    println!("test accuracy {:.3} before save, {:.3} after reload", a.accuracy, b.accuracy);
    std::fs::remove_file(&path)?;
    Ok(())
}
