//! Loads the bundled MNIST sample, draws a stratified subset, writes it back
//! out as IDX and prints one digit as ASCII art.
//!
//! ```bash
//! cargo run -p qfilter --example idx_dataset
//! ```

use std::path::PathBuf;

use qfilter::data::stratified_subset;
use qfilter::Dataset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-mini");
    let train = Dataset::load(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
    println!("{} training images, per class {:?}", train.len(), train.class_counts());

    let subset = stratified_subset(&train, 50, 0)?;
    println!("subset of 50, per class {:?}", subset.dataset.class_counts());
    println!("first indices {:?}", &subset.indices[..10]);

    let out = tempfile_dir()?;
    let (imgs, lbls) = (out.join("subset-images-idx3-ubyte"), out.join("subset-labels-idx1-ubyte"));
    subset.dataset.write(&imgs, &lbls)?;
    let reloaded = Dataset::load(&imgs, &lbls)?;
    println!("wrote and reloaded {} images, equal: {}", reloaded.len(), reloaded == subset.dataset);

    let img = &subset.dataset.images()[0];
    println!("label {}", subset.dataset.labels()[0]);
    for row in img.pixels().chunks(img.width()) {
        let line: String = row.iter().map(|&p| match p { p if p > 0.66 => '#', p if p > 0.33 => '+', _ => '.' }).collect();
        println!("{line}");
    }
    std::fs::remove_dir_all(&out)?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<PathBuf> {
    let d = std::env::temp_dir().join(format!("qfilter-idx-{}", std::process::id()));
    std::fs::create_dir_all(&d)?;
    Ok(d)
}
