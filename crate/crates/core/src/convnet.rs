//! The hybrid convolutional classifier.
//!
//! One convolution layer of `m` filters scans the image with non-overlapping
//! `n × n` windows (stride `n`, no padding), producing an `m × ⌊h/n⌋ × ⌊w/n⌋`
//! feature map. The flattened map feeds a dense layer with ten softmax outputs.
//!
//! Layouts are fixed so checkpoints stay portable: windows and pixels are
//! row-major, features are filter-major then window row-major, and dense
//! weights are stored feature-major (`weights[i * 10 + c]`).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::executor::Executor;
use crate::filter::{self, Estimator, FilterParams, WindowVector};

pub const NUM_CLASSES: usize = 10;

/// Lower clamp applied to the target-class probability before the log.
pub const PROB_FLOOR: f64 = 1e-12;

pub type ClassProbs = [f64; NUM_CLASSES];

#[derive(Clone, Debug, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::shape(format!(
                "{height}×{width} image needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Domain(format!("pixel {p} outside [0, 1]")));
        }
        Ok(ImageTensor {
            height,
            width,
            pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }
}

/// Non-overlapping `n × n` windows in row-major window order. Rows and columns
/// that do not fill a whole window are dropped.
pub fn extract_windows(image: &ImageTensor, n: usize) -> Result<Vec<WindowVector>> {
    if n == 0 || n > image.height.min(image.width) {
        return Err(Error::shape(format!(
            "window edge {n} does not fit a {}×{} image",
            image.height, image.width
        )));
    }
    let (rows, cols) = (image.height / n, image.width / n);
    let mut windows = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut values = Vec::with_capacity(n * n);
            for dy in 0..n {
                let start = (r * n + dy) * image.width + c * n;
                values.extend_from_slice(&image.pixels[start..start + n]);
            }
            windows.push(WindowVector::new(n, values)?);
        }
    }
    Ok(windows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FilterKind {
    /// Quantum filter whose angles are trained.
    Variational,
    /// Quantum filter with frozen random angles; only the dense head trains.
    Fixed,
    /// Classical dot-product filter.
    Classical,
}

impl FilterKind {
    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Variational => "variational",
            FilterKind::Fixed => "fixed",
            FilterKind::Classical => "classical",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variational" => Ok(FilterKind::Variational),
            "fixed" => Ok(FilterKind::Fixed),
            "classical" => Ok(FilterKind::Classical),
            other => Err(Error::Config(format!("unknown filter kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Filter {
    Quantum(FilterParams),
    Classical(Vec<f64>),
}

impl Filter {
    pub fn params(&self) -> &[f64] {
        match self {
            Filter::Quantum(p) => p.as_slice(),
            Filter::Classical(w) => w,
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Filter::Quantum(p) => p.as_mut_slice(),
            Filter::Classical(w) => w,
        }
    }

    fn evaluate(&self, window: &WindowVector, estimator: Estimator, scale: f64) -> Result<f64> {
        match self {
            Filter::Quantum(p) => filter::evaluate(window, p, estimator, scale),
            Filter::Classical(w) => filter::eval_classical_dot(window, w),
        }
    }
}

/// Shape and mode of a [`HybridModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub kind: FilterKind,
    pub estimator: Estimator,
    pub filter_size: usize,
    pub num_filters: usize,
    pub image_height: usize,
    pub image_width: usize,
    /// Multiplier from pixel value to embedding angle.
    pub scale: f64,
}

impl Architecture {
    /// Four variational 2×2 filters with the overlap estimator on 28×28 input.
    pub fn mnist_default() -> Self {
        Architecture {
            kind: FilterKind::Variational,
            estimator: Estimator::OverlapSquared,
            filter_size: 2,
            num_filters: 4,
            image_height: 28,
            image_width: 28,
            scale: 1.0,
        }
    }

    pub fn with_kind(mut self, kind: FilterKind) -> Self {
        self.kind = kind;
        if kind == FilterKind::Classical {
            self.estimator = Estimator::ClassicalDot;
        } else if self.estimator == Estimator::ClassicalDot {
            self.estimator = Estimator::OverlapSquared;
        }
        self
    }

    pub fn windows_per_image(&self) -> usize {
        (self.image_height / self.filter_size) * (self.image_width / self.filter_size)
    }

    pub fn feature_count(&self) -> usize {
        self.num_filters * self.windows_per_image()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.filter_size;
        if n == 0 || self.num_filters == 0 {
            return Err(Error::Config("filter size and count must be positive".into()));
        }
        if n > self.image_height.min(self.image_width) {
            return Err(Error::shape(format!(
                "filter edge {n} larger than {}×{} image",
                self.image_height, self.image_width
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::Config(format!("embedding scale {} must be > 0", self.scale)));
        }
        let classical = self.kind == FilterKind::Classical;
        if classical != (self.estimator == Estimator::ClassicalDot) {
            return Err(Error::Config(format!(
                "filter kind {} cannot use estimator {}",
                self.kind, self.estimator
            )));
        }
        if !classical {
            let qubits = n * n + usize::from(self.estimator == Estimator::HadamardReal);
            if qubits > crate::sim::MAX_QUBITS {
                return Err(Error::Size(qubits));
            }
        }
        Ok(())
    }
}

/// Everything training updates, plus the fixed architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridModel {
    pub arch: Architecture,
    pub filters: Vec<Filter>,
    /// `feature_count × 10`, feature-major.
    pub dense_weights: Vec<f64>,
    pub dense_bias: Vec<f64>,
}

impl HybridModel {
    /// Seeded initialization.
    ///
    /// Variational angles are uniform in `[0, π)`, fixed-filter angles uniform
    /// in `[0, 2π)`, classical filter weights uniform in `±1/n`, dense weights
    /// uniform in `±1/√feature_count`, and the bias is zero.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = arch.filter_size;
        let filters = (0..arch.num_filters)
            .map(|_| match arch.kind {
                FilterKind::Variational => {
                    Filter::Quantum(FilterParams::random(n, std::f64::consts::PI, &mut rng))
                }
                FilterKind::Fixed => {
                    Filter::Quantum(FilterParams::random(n, std::f64::consts::TAU, &mut rng))
                }
                FilterKind::Classical => {
                    let bound = 1.0 / n as f64;
                    Filter::Classical((0..n * n).map(|_| rng.gen_range(-bound..bound)).collect())
                }
            })
            .collect();
        let features = arch.feature_count();
        let bound = 1.0 / (features as f64).sqrt();
        let dense_weights = (0..features * NUM_CLASSES)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Ok(HybridModel {
            arch,
            filters,
            dense_weights,
            dense_bias: vec![0.0; NUM_CLASSES],
        })
    }

    /// Checks that parameter vectors agree with the architecture.
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        let n = self.arch.filter_size;
        if self.filters.len() != self.arch.num_filters {
            return Err(Error::shape(format!(
                "{} filters for an architecture of {}",
                self.filters.len(),
                self.arch.num_filters
            )));
        }
        for f in &self.filters {
            let ok = match (f, self.arch.kind) {
                (Filter::Quantum(p), FilterKind::Variational | FilterKind::Fixed) => p.size() == n,
                (Filter::Classical(w), FilterKind::Classical) => w.len() == n * n,
                _ => false,
            };
            if !ok {
                return Err(Error::shape("filter does not match architecture"));
            }
        }
        if self.dense_weights.len() != self.arch.feature_count() * NUM_CLASSES
            || self.dense_bias.len() != NUM_CLASSES
        {
            return Err(Error::shape("dense layer does not match feature count"));
        }
        Ok(())
    }

    pub fn filters_trainable(&self) -> bool {
        self.arch.kind != FilterKind::Fixed
    }

    fn check_image(&self, image: &ImageTensor) -> Result<()> {
        if image.height != self.arch.image_height || image.width != self.arch.image_width {
            return Err(Error::shape(format!(
                "model expects {}×{} images, got {}×{}",
                self.arch.image_height, self.arch.image_width, image.height, image.width
            )));
        }
        Ok(())
    }

    pub fn windows(&self, image: &ImageTensor) -> Result<Vec<WindowVector>> {
        self.check_image(image)?;
        extract_windows(image, self.arch.filter_size)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub num_filters: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub values: Vec<f64>,
}

impl FeatureMap {
    pub fn get(&self, filter: usize, row: usize, col: usize) -> f64 {
        self.values[(filter * self.out_h + row) * self.out_w + col]
    }
}

/// Convolution output for one image, optionally with the per-(filter, window)
/// derivative of each feature with respect to that filter's parameters.
#[derive(Clone, Debug)]
pub(crate) struct ConvOutput {
    pub features: Vec<f64>,
    /// Indexed like `features`; empty when not requested.
    pub jacobian: Vec<Vec<f64>>,
}

/// Evaluates the convolution layer over several images in one executor batch.
/// One task is one (image, filter, window) triple.
pub(crate) fn conv_batch(
    images: &[&[WindowVector]],
    model: &HybridModel,
    executor: &Executor,
    with_jacobian: bool,
) -> Result<Vec<ConvOutput>> {
    let per_image = model.arch.feature_count();
    let wins = model.arch.windows_per_image();
    for w in images {
        if w.len() != wins {
            return Err(Error::shape(format!("{} windows, model expects {wins}", w.len())));
        }
    }
    let quantum_jac = with_jacobian && model.arch.kind != FilterKind::Classical;
    let tasks: Vec<(usize, usize, usize)> = (0..images.len())
        .flat_map(|i| {
            (0..model.arch.num_filters).flat_map(move |f| (0..wins).map(move |w| (i, f, w)))
        })
        .collect();
    let est = model.arch.estimator;
    let scale = model.arch.scale;
    let results = executor.map_batch(&tasks, |&(i, f, w)| {
        let window = &images[i][w];
        let filter = &model.filters[f];
        let value = filter.evaluate(window, est, scale)?;
        let grad = match filter {
            Filter::Quantum(p) if quantum_jac => filter::grad_params(window, p, est, scale)?,
            _ => Vec::new(),
        };
        Ok((value, grad))
    })?;
    let mut outputs = Vec::with_capacity(images.len());
    let mut it = results.into_iter();
    for (i, image_windows) in images.iter().enumerate() {
        let mut features = Vec::with_capacity(per_image);
        let mut jacobian = Vec::new();
        for k in 0..per_image {
            let (v, g) = it.next().expect("one result per task");
            features.push(v);
            if with_jacobian {
                jacobian.push(if quantum_jac {
                    g
                } else {
                    image_windows[k % wins].values().to_vec()
                });
            }
        }
        debug_assert_eq!(outputs.len(), i);
        outputs.push(ConvOutput { features, jacobian });
    }
    Ok(outputs)
}

/// Feature map of one image, evaluated on the calling thread.
pub fn conv_forward(image: &ImageTensor, model: &HybridModel) -> Result<FeatureMap> {
    conv_forward_with(image, model, &Executor::sequential())
}

pub fn conv_forward_with(
    image: &ImageTensor,
    model: &HybridModel,
    executor: &Executor,
) -> Result<FeatureMap> {
    let windows = model.windows(image)?;
    let out = conv_batch(&[&windows], model, executor, false)?.remove(0);
    let n = model.arch.filter_size;
    Ok(FeatureMap {
        num_filters: model.arch.num_filters,
        out_h: image.height / n,
        out_w: image.width / n,
        values: out.features,
    })
}

/// Numerically stable softmax.
pub fn softmax(logits: &ClassProbs) -> ClassProbs {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_CLASSES];
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        total += *o;
    }
    for o in &mut out {
        *o /= total;
    }
    out
}

pub fn dense_logits(features: &[f64], model: &HybridModel) -> Result<ClassProbs> {
    if features.len() * NUM_CLASSES != model.dense_weights.len() {
        return Err(Error::shape(format!(
            "{} features for a dense layer of {}",
            features.len(),
            model.dense_weights.len() / NUM_CLASSES
        )));
    }
    let mut logits = [0.0; NUM_CLASSES];
    logits.copy_from_slice(&model.dense_bias);
    for (x, row) in features.iter().zip(model.dense_weights.chunks_exact(NUM_CLASSES)) {
        for (z, w) in logits.iter_mut().zip(row) {
            *z += w * x;
        }
    }
    Ok(logits)
}

/// Class probabilities `softmax(Wᵀx + b)`.
pub fn dense_forward(features: &[f64], model: &HybridModel) -> Result<ClassProbs> {
    Ok(softmax(&dense_logits(features, model)?))
}

fn check_label(label: usize) -> Result<()> {
    if label >= NUM_CLASSES {
        return Err(Error::Domain(format!("label {label} outside 0..{NUM_CLASSES}")));
    }
    Ok(())
}

/// `E = −(1/M)·log p[label]` with `M = 10` classes and a one-hot target.
pub fn cross_entropy(probs: &ClassProbs, label: usize) -> Result<f64> {
    check_label(label)?;
    Ok(-probs[label].max(PROB_FLOOR).ln() / NUM_CLASSES as f64)
}

/// Index of the largest probability; ties go to the lowest index.
pub fn predict(probs: &ClassProbs) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Number of inner products needed to train `m` filters of edge `n` on `p`
/// images of `l × l` for `t` epochs: `⌊l/n⌋²·m·p·t`.
pub fn op_count(l: u64, n: u64, m: u64, p: u64, t: u64) -> u64 {
    let side = l / n;
    side * side * m * p * t
}

/// Gradient of the loss with respect to every trainable quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub dense_weights: Vec<f64>,
    pub dense_bias: Vec<f64>,
    /// One vector per filter; empty vectors when filter gradients were skipped.
    pub filters: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros(model: &HybridModel) -> Self {
        Gradients {
            dense_weights: vec![0.0; model.dense_weights.len()],
            dense_bias: vec![0.0; NUM_CLASSES],
            filters: model.filters.iter().map(|f| vec![0.0; f.params().len()]).collect(),
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Gradients) {
        fn add(a: &mut [f64], b: &[f64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        add(&mut self.dense_weights, &other.dense_weights);
        add(&mut self.dense_bias, &other.dense_bias);
        for (a, b) in self.filters.iter_mut().zip(&other.filters) {
            add(a, b);
        }
    }

    pub(crate) fn scale(&mut self, k: f64) {
        self.dense_weights.iter_mut().for_each(|x| *x *= k);
        self.dense_bias.iter_mut().for_each(|x| *x *= k);
        self.filters.iter_mut().flatten().for_each(|x| *x *= k);
    }

    pub fn dense_norm(&self) -> f64 {
        self.dense_weights
            .iter()
            .chain(&self.dense_bias)
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn filter_norm(&self) -> f64 {
        self.filters.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Loss, probabilities and gradient for one sample, given its convolution
/// output. Filter gradients use `conv.jacobian` when present.
pub(crate) fn sample_backward(
    conv: &ConvOutput,
    label: usize,
    model: &HybridModel,
) -> Result<(f64, ClassProbs, Gradients)> {
    check_label(label)?;
    let probs = dense_forward(&conv.features, model)?;
    let loss = cross_entropy(&probs, label)?;
    let m = NUM_CLASSES as f64;
    let mut dz = [0.0; NUM_CLASSES];
    for (c, d) in dz.iter_mut().enumerate() {
        *d = (probs[c] - if c == label { 1.0 } else { 0.0 }) / m;
    }
    let features = conv.features.len();
    let mut dense_weights = Vec::with_capacity(features * NUM_CLASSES);
    let mut dfeat = Vec::with_capacity(features);
    for (x, row) in conv.features.iter().zip(model.dense_weights.chunks_exact(NUM_CLASSES)) {
        dense_weights.extend(dz.iter().map(|d| d * x));
        dfeat.push(row.iter().zip(&dz).map(|(w, d)| w * d).sum::<f64>());
    }
    let wins = model.arch.windows_per_image();
    let filters = if conv.jacobian.is_empty() {
        vec![Vec::new(); model.filters.len()]
    } else {
        model
            .filters
            .iter()
            .enumerate()
            .map(|(f, filt)| {
                let mut g = vec![0.0; filt.params().len()];
                for w in 0..wins {
                    let k = f * wins + w;
                    for (gj, jj) in g.iter_mut().zip(&conv.jacobian[k]) {
                        *gj += dfeat[k] * jj;
                    }
                }
                g
            })
            .collect()
    };
    Ok((
        loss,
        probs,
        Gradients {
            dense_weights,
            dense_bias: dz.to_vec(),
            filters,
        },
    ))
}

/// Exact gradient of the single-sample loss, including every filter's
/// parameters (also for fixed filters, which training leaves untouched).
pub fn model_backward(image: &ImageTensor, label: usize, model: &HybridModel) -> Result<Gradients> {
    model_backward_with(image, label, model, &Executor::sequential())
}

pub fn model_backward_with(
    image: &ImageTensor,
    label: usize,
    model: &HybridModel,
    executor: &Executor,
) -> Result<Gradients> {
    let windows = model.windows(image)?;
    let conv = conv_batch(&[&windows], model, executor, true)?.remove(0);
    Ok(sample_backward(&conv, label, model)?.2)
}

/// Single-sample loss, evaluated end to end.
pub fn sample_loss(image: &ImageTensor, label: usize, model: &HybridModel) -> Result<f64> {
    let features = conv_forward(image, model)?;
    cross_entropy(&dense_forward(&features.values, model)?, label)
}
