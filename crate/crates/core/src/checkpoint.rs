//! Plain-text model checkpoints.
//!
//! ```text
//! qfilter-checkpoint 1
//! filter_kind variational
//! estimator overlap
//! scale 1.0
//! filter_size 2
//! num_filters 4
//! image 28 28
//! init_seed 7
//! subset_seed 7
//! filter 0 <2n² angles: rx for qubits 0..n², then ry>
//! ...
//! dense_bias <10 values>
//! dense_weights <feature_count × 10 values, feature-major>
//! end
//! ```
//!
//! Classical filters store their `n²` weights on the `filter` line. Values are
//! written in Rust's shortest round-trip float format, so a reloaded model is
//! bit-identical to the saved one.

use std::fmt::Write as _;
use std::path::Path;

use crate::convnet::{Architecture, Filter, FilterKind, HybridModel};
use crate::error::{Error, Result};
use crate::filter::FilterParams;

pub const MAGIC: &str = "qfilter-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: HybridModel,
    pub init_seed: u64,
    pub subset_seed: u64,
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v:?}").unwrap();
    }
    s
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let a = &m.arch;
        let mut s = String::new();
        writeln!(s, "{MAGIC} {VERSION}").unwrap();
        writeln!(s, "filter_kind {}", a.kind).unwrap();
        writeln!(s, "estimator {}", a.estimator).unwrap();
        writeln!(s, "scale {:?}", a.scale).unwrap();
        writeln!(s, "filter_size {}", a.filter_size).unwrap();
        writeln!(s, "num_filters {}", a.num_filters).unwrap();
        writeln!(s, "image {} {}", a.image_height, a.image_width).unwrap();
        writeln!(s, "init_seed {}", self.init_seed).unwrap();
        writeln!(s, "subset_seed {}", self.subset_seed).unwrap();
        for (i, f) in m.filters.iter().enumerate() {
            writeln!(s, "filter {i} {}", join(f.params())).unwrap();
        }
        writeln!(s, "dense_bias {}", join(&m.dense_bias)).unwrap();
        writeln!(s, "dense_weights {}", join(&m.dense_weights)).unwrap();
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next = |key: &str| -> Result<Vec<&str>> {
            let line = lines.next().ok_or_else(|| bad(format!("missing `{key}` line")))?;
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some(k) if k == key => Ok(parts.collect()),
                _ => Err(bad(format!("expected `{key}`, found `{line}`"))),
            }
        };
        fn one<'a>(v: &[&'a str], key: &str) -> Result<&'a str> {
            match v {
                [x] => Ok(x),
                _ => Err(bad(format!("`{key}` takes one value"))),
            }
        }
        fn num<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
            s.parse().map_err(|_| bad(format!("bad `{key}` value `{s}`")))
        }
        fn floats(v: &[&str], key: &str) -> Result<Vec<f64>> {
            v.iter().map(|s| num(s, key)).collect()
        }

        let version: u32 = num(one(&next(MAGIC)?, "version")?, "version")?;
        if version != VERSION {
            return Err(bad(format!(
                "checkpoint version {version} unsupported (expected {VERSION})"
            )));
        }
        let kind: FilterKind = one(&next("filter_kind")?, "filter_kind")?
            .parse()
            .map_err(|_| bad("bad filter_kind"))?;
        let estimator = one(&next("estimator")?, "estimator")?
            .parse()
            .map_err(|_| bad("bad estimator"))?;
        let scale = num(one(&next("scale")?, "scale")?, "scale")?;
        let filter_size: usize = num(one(&next("filter_size")?, "filter_size")?, "filter_size")?;
        let num_filters: usize = num(one(&next("num_filters")?, "num_filters")?, "num_filters")?;
        let image = next("image")?;
        let (image_height, image_width) = match image.as_slice() {
            [h, w] => (num(h, "image")?, num(w, "image")?),
            _ => return Err(bad("`image` takes two values")),
        };
        let init_seed = num(one(&next("init_seed")?, "init_seed")?, "init_seed")?;
        let subset_seed = num(one(&next("subset_seed")?, "subset_seed")?, "subset_seed")?;
        let arch = Architecture {
            kind,
            estimator,
            filter_size,
            num_filters,
            image_height,
            image_width,
            scale,
        };
        arch.validate().map_err(|e| bad(e.to_string()))?;

        let mut filters = Vec::with_capacity(num_filters);
        for i in 0..num_filters {
            let v = next("filter")?;
            let idx: usize = num(v.first().copied().unwrap_or(""), "filter")?;
            if idx != i {
                return Err(bad(format!("filter {idx} out of order, expected {i}")));
            }
            let values = floats(&v[1..], "filter")?;
            filters.push(match kind {
                FilterKind::Classical => Filter::Classical(values),
                _ => Filter::Quantum(
                    FilterParams::from_flat(filter_size, values).map_err(|e| bad(e.to_string()))?,
                ),
            });
        }
        let dense_bias = floats(&next("dense_bias")?, "dense_bias")?;
        let dense_weights = floats(&next("dense_weights")?, "dense_weights")?;
        next("end")?;
        let model = HybridModel {
            arch,
            filters,
            dense_weights,
            dense_bias,
        };
        model.validate().map_err(|e| bad(e.to_string()))?;
        Ok(Checkpoint {
            model,
            init_seed,
            subset_seed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_text(&text)
    }
}
