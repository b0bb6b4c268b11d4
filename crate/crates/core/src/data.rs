//! MNIST-style datasets in raw (uncompressed) IDX format.
//!
//! Image files: big-endian `u32` magic `0x00000803`, count, rows, cols, then
//! one unsigned byte per pixel. Label files: magic `0x00000801`, count, then
//! one byte per label. Pixel byte `v` maps to `v / 255.0`.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::convnet::{ImageTensor, NUM_CLASSES};
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Length(format!("IDX header truncated at byte {offset}")))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<ImageTensor>> {
    let magic = read_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "image file magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"
        )));
    }
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let body = &bytes[16..];
    let per_image = rows * cols;
    let needed = count * per_image;
    if body.len() < needed {
        return Err(Error::Length(format!(
            "image file holds {} pixel bytes, header promises {needed}",
            body.len()
        )));
    }
    if per_image == 0 {
        return Ok(Vec::new());
    }
    body[..needed]
        .chunks_exact(per_image)
        .map(|px| ImageTensor::new(rows, cols, px.iter().map(|&v| v as f64 / 255.0).collect()))
        .collect()
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let magic = read_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "label file magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"
        )));
    }
    let count = read_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::Length(format!(
            "label file holds {} labels, header promises {count}",
            body.len()
        )));
    }
    body[..count]
        .iter()
        .map(|&b| {
            if (b as usize) < NUM_CLASSES {
                Ok(b as usize)
            } else {
                Err(Error::Format(format!("label byte {b} outside 0..{NUM_CLASSES}")))
            }
        })
        .collect()
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<ImageTensor>> {
    parse_idx_images(&read_file(path.as_ref())?)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    parse_idx_labels(&read_file(path.as_ref())?)
}

fn pixel_byte(p: f64) -> u8 {
    (p * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn encode_idx_images(images: &[ImageTensor]) -> Result<Vec<u8>> {
    let (rows, cols) = images.first().map_or((0, 0), |i| (i.height(), i.width()));
    if images.iter().any(|i| i.height() != rows || i.width() != cols) {
        return Err(Error::shape("IDX images must share one size"));
    }
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGE_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        out.extend(img.pixels().iter().map(|&p| pixel_byte(p)));
    }
    Ok(out)
}

pub fn encode_idx_labels(labels: &[usize]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &l in labels {
        if l >= NUM_CLASSES {
            return Err(Error::Format(format!("label {l} outside 0..{NUM_CLASSES}")));
        }
        out.push(l as u8);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    images: Vec<ImageTensor>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(images: Vec<ImageTensor>, labels: Vec<usize>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Length(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= NUM_CLASSES) {
            return Err(Error::Format(format!("label {l} outside 0..{NUM_CLASSES}")));
        }
        Ok(Dataset { images, labels })
    }

    /// Loads and pairs an image file with its label file.
    pub fn load(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Self> {
        Dataset::new(load_idx_images(images)?, load_idx_labels(labels)?)
    }

    pub fn write(&self, images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<()> {
        let images = images.as_ref();
        let labels = labels.as_ref();
        std::fs::write(images, encode_idx_images(&self.images)?).map_err(|e| Error::io(images, e))?;
        std::fs::write(labels, encode_idx_labels(&self.labels)?).map_err(|e| Error::io(labels, e))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn images(&self) -> &[ImageTensor] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Subset {
    pub dataset: Dataset,
    /// Positions in the source dataset, in draw order.
    pub indices: Vec<usize>,
    /// Set when some class had fewer samples than its cap and the remainder
    /// was filled from other classes.
    pub underfilled: bool,
}

/// Seeded draw of `total` samples with at most `⌈total/10⌉` per class.
///
/// Classes short of their cap are topped up from the remaining samples in
/// draw order, and the result is flagged as underfilled.
pub fn stratified_subset(dataset: &Dataset, total: usize, seed: u64) -> Result<Subset> {
    let mut order = shuffled_indices(dataset, total, seed)?;
    let cap = total.div_ceil(NUM_CLASSES);
    let mut per_class = [0usize; NUM_CLASSES];
    let mut picked = Vec::with_capacity(total);
    let mut rest = Vec::new();
    for i in order.drain(..) {
        let l = dataset.labels[i];
        if picked.len() < total && per_class[l] < cap {
            per_class[l] += 1;
            picked.push(i);
        } else {
            rest.push(i);
        }
    }
    let underfilled = picked.len() < total;
    picked.extend(rest.into_iter().take(total - picked.len()));
    Ok(Subset {
        dataset: dataset.select(&picked),
        indices: picked,
        underfilled,
    })
}

/// Seeded draw of `total` samples with no class balancing.
pub fn random_subset(dataset: &Dataset, total: usize, seed: u64) -> Result<Subset> {
    let mut order = shuffled_indices(dataset, total, seed)?;
    order.truncate(total);
    Ok(Subset {
        dataset: dataset.select(&order),
        indices: order,
        underfilled: false,
    })
}

fn shuffled_indices(dataset: &Dataset, total: usize, seed: u64) -> Result<Vec<usize>> {
    if total > dataset.len() {
        return Err(Error::Length(format!(
            "requested {total} samples from a dataset of {}",
            dataset.len()
        )));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(order)
}
