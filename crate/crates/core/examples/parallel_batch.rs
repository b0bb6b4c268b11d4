//! Runs the same convolution batch with several worker counts, checks the
//! outputs are identical and reports wall time.
//!
//! ```bash
//! cargo run --release -p qfilter --example parallel_batch
//! ```

use std::time::Instant;

use qfilter::convnet::conv_forward_with;
use qfilter::{Architecture, Executor, HybridModel, ImageTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> qfilter::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let image = ImageTensor::new(28, 28, (0..784).map(|_| rng.gen_range(0.0..=1.0)).collect())?;
    let model = HybridModel::init(Architecture { filter_size: 4, ..Architecture::mnist_default() }, 3)?;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!("{cores} core(s) available");

    let mut reference = None;
    for workers in [1, 2, 4, 8] {
        let exec = Executor::new(workers)?;
        let start = Instant::now();
        let map = conv_forward_with(&image, &model, &exec)?;
        let secs = start.elapsed().as_secs_f64();
        let same = reference.get_or_insert_with(|| map.values.clone()) == &map.values;
        println!("workers {workers}: {secs:.3}s, identical to 1 worker: {same}");
    }

    // A failing task reports the lowest failing index, whatever the schedule.
    let exec = Executor::new(4)?;
    let tasks: Vec<usize> = (0..100).collect();
    let err = exec
        .map_batch(&tasks, |&i| {
            if i % 30 == 29 {
                Err(qfilter::Error::Domain(format!("task {i} rejected")))
            } else {
                Ok(i)
            }
        })
        .unwrap_err();
    println!("batch error: {err}");
    Ok(())
}
