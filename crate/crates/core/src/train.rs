//! Training loop, evaluation and per-epoch metrics.
//!
//! Dense weights and classical filters follow SGD; variational angles follow
//! Adadelta; fixed quantum filters are never updated. Gradients over a batch
//! are summed in sample order after the parallel convolution pass, so results
//! do not depend on the executor's worker count.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::convnet::{self, FilterKind, Gradients, HybridModel, NUM_CLASSES};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::executor::Executor;
use crate::filter::WindowVector;
use crate::optim::{sgd_step, AdadeltaConfig, AdadeltaState, SgdConfig};

pub const METRICS_HEADER: &str = "epoch,train_loss,train_acc,test_acc,epoch_seconds";

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub epoch_seconds: f64,
}

impl MetricsRecord {
    /// One CSV row matching [`METRICS_HEADER`]. Floats use the shortest
    /// representation that round-trips.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:?},{:?},{:?},{:.6}",
            self.epoch, self.train_loss, self.train_accuracy, self.test_accuracy, self.epoch_seconds
        )
    }
}

pub fn write_metrics_csv(mut out: impl Write, records: &[MetricsRecord]) -> std::io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Gradient norms of the two parameter groups for one optimizer step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradNorms {
    pub dense: f64,
    pub filters: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Samples per optimizer step; `None` means one full-batch step per epoch.
    pub batch_size: Option<usize>,
    pub sgd: SgdConfig,
    pub adadelta: AdadeltaConfig,
    /// Seeds the per-epoch shuffle when mini-batching.
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: Some(1),
            sgd: SgdConfig::default(),
            adadelta: AdadeltaConfig::default(),
            shuffle_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub loss: f64,
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
}

/// A dataset with its windows extracted once.
pub struct PreparedSet {
    windows: Vec<Vec<WindowVector>>,
    labels: Vec<usize>,
}

impl PreparedSet {
    pub fn new(dataset: &Dataset, model: &HybridModel) -> Result<Self> {
        let windows = dataset
            .images()
            .iter()
            .map(|img| model.windows(img))
            .collect::<Result<_>>()?;
        Ok(PreparedSet {
            windows,
            labels: dataset.labels().to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn evaluate_prepared(
    model: &HybridModel,
    set: &PreparedSet,
    executor: &Executor,
) -> Result<EvalReport> {
    let refs: Vec<&[WindowVector]> = set.windows.iter().map(Vec::as_slice).collect();
    let outputs = convnet::conv_batch(&refs, model, executor, false)?;
    let mut confusion = [[0; NUM_CLASSES]; NUM_CLASSES];
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (out, &label) in outputs.iter().zip(&set.labels) {
        let probs = convnet::dense_forward(&out.features, model)?;
        loss += convnet::cross_entropy(&probs, label)?;
        let pred = convnet::predict(&probs);
        confusion[label][pred] += 1;
        correct += usize::from(pred == label);
    }
    let n = set.len().max(1) as f64;
    Ok(EvalReport {
        loss: loss / n,
        accuracy: correct as f64 / n,
        confusion,
    })
}

pub fn evaluate(model: &HybridModel, dataset: &Dataset, executor: &Executor) -> Result<EvalReport> {
    evaluate_prepared(model, &PreparedSet::new(dataset, model)?, executor)
}

/// Mean loss and gradient over the given samples.
fn batch_gradient(
    model: &HybridModel,
    set: &PreparedSet,
    batch: &[usize],
    executor: &Executor,
) -> Result<(f64, Gradients)> {
    let refs: Vec<&[WindowVector]> = batch.iter().map(|&i| set.windows[i].as_slice()).collect();
    let outputs = convnet::conv_batch(&refs, model, executor, model.filters_trainable())?;
    let mut total = Gradients::zeros(model);
    let mut loss = 0.0;
    for (out, &i) in outputs.iter().zip(batch) {
        let (l, _, g) = convnet::sample_backward(out, set.labels[i], model)?;
        loss += l;
        total.add_assign(&g);
    }
    let k = 1.0 / batch.len() as f64;
    total.scale(k);
    Ok((loss * k, total))
}

pub struct Trainer<'a> {
    pub model: HybridModel,
    config: TrainConfig,
    executor: &'a Executor,
    adadelta: Vec<AdadeltaState>,
    rng: ChaCha8Rng,
}

impl<'a> Trainer<'a> {
    pub fn new(model: HybridModel, config: TrainConfig, executor: &'a Executor) -> Result<Self> {
        model.validate()?;
        if config.batch_size == Some(0) {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        let adadelta = model
            .filters
            .iter()
            .map(|f| AdadeltaState::new(config.adadelta, f.params().len()))
            .collect::<Result<_>>()?;
        let rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
        Ok(Trainer {
            model,
            config,
            executor,
            adadelta,
            rng,
        })
    }

    /// One optimizer step on the given samples.
    pub fn step(&mut self, set: &PreparedSet, batch: &[usize]) -> Result<GradNorms> {
        let (_, grads) = batch_gradient(&self.model, set, batch, self.executor)?;
        let norms = GradNorms {
            dense: grads.dense_norm(),
            filters: grads.filter_norm(),
        };
        let sgd = self.config.sgd;
        sgd_step(&mut self.model.dense_weights, &grads.dense_weights, &sgd)?;
        sgd_step(&mut self.model.dense_bias, &grads.dense_bias, &sgd)?;
        match self.model.arch.kind {
            FilterKind::Fixed => {}
            FilterKind::Classical => {
                for (f, g) in self.model.filters.iter_mut().zip(&grads.filters) {
                    sgd_step(f.params_mut(), g, &sgd)?;
                }
            }
            FilterKind::Variational => {
                for ((f, g), state) in self
                    .model
                    .filters
                    .iter_mut()
                    .zip(&grads.filters)
                    .zip(&mut self.adadelta)
                {
                    state.step(f.params_mut(), g)?;
                }
            }
        }
        Ok(norms)
    }

    /// Runs one epoch and reports metrics measured after the last update.
    pub fn epoch(
        &mut self,
        epoch: usize,
        train: &PreparedSet,
        test: &PreparedSet,
    ) -> Result<(MetricsRecord, Vec<GradNorms>)> {
        if train.is_empty() {
            return Err(Error::Length("empty training set".into()));
        }
        let start = Instant::now();
        let mut order: Vec<usize> = (0..train.len()).collect();
        let batch = self.config.batch_size.unwrap_or(train.len()).min(train.len());
        if batch < train.len() {
            order.shuffle(&mut self.rng);
        }
        let mut norms = Vec::new();
        for chunk in order.chunks(batch) {
            norms.push(self.step(train, chunk)?);
        }
        let train_report = evaluate_prepared(&self.model, train, self.executor)?;
        let test_accuracy = if test.is_empty() {
            0.0
        } else {
            evaluate_prepared(&self.model, test, self.executor)?.accuracy
        };
        let record = MetricsRecord {
            epoch,
            train_loss: train_report.loss,
            train_accuracy: train_report.accuracy,
            test_accuracy,
            epoch_seconds: start.elapsed().as_secs_f64(),
        };
        Ok((record, norms))
    }

    /// Runs every configured epoch, calling `on_epoch` after each.
    pub fn fit<F>(&mut self, train: &Dataset, test: &Dataset, mut on_epoch: F) -> Result<Vec<MetricsRecord>>
    where
        F: FnMut(&MetricsRecord, &[GradNorms]),
    {
        let train = PreparedSet::new(train, &self.model)?;
        let test = PreparedSet::new(test, &self.model)?;
        let mut records = Vec::with_capacity(self.config.epochs);
        for epoch in 1..=self.config.epochs {
            let (record, norms) = self.epoch(epoch, &train, &test)?;
            on_epoch(&record, &norms);
            records.push(record);
        }
        Ok(records)
    }

    pub fn into_model(self) -> HybridModel {
        self.model
    }
}
