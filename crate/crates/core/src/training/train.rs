use super::data::Dataset;
use crate::diagnostics::eigen_ratio;
use crate::error::{Error, Result};
use crate::model::{self, grad_norms, Architecture, GradBundle, ModelParams, TokenSeq};
use crate::tensor::{Matrix, Rng};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    #[default]
    Sgd,
    /// Adam with the usual `β = (0.9, 0.999)`, `ε = 1e-8`. Embedding rows
    /// absent from a batch keep their moments and weights untouched.
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            other => Err(Error::Config(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub arch: Architecture,
    pub d: usize,
    pub seed: u64,
    pub max_len: usize,
    /// Stop after this many optimizer steps in total.
    pub max_batches: Option<usize>,
    pub optimizer: Optimizer,
    /// Evaluate on the test set every `eval_every` steps while the step
    /// count is at most `eval_window`, and always after the final step.
    pub eval_every: usize,
    pub eval_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch_size: 64,
            epochs: 4,
            arch: Architecture::default(),
            d: 64,
            seed: 0,
            max_len: 64,
            max_batches: None,
            optimizer: Optimizer::Sgd,
            eval_every: 10,
            eval_window: 500,
        }
    }
}

impl TrainConfig {
    /// `lr = 0` is accepted so a run can be used as a frozen-weights probe.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be finite and non-negative, got {}", self.lr));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.max_len < 2 {
            return bad(format!("max_len must be at least 2, got {}", self.max_len));
        }
        if self.eval_every == 0 {
            return bad("eval interval must be at least 1".into());
        }
        Ok(())
    }
}

/// One optimizer step's record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: usize,
    /// Global step count, starting at 1.
    pub batch: usize,
    /// Mean cross-entropy of the batch before the update.
    pub loss: f64,
    /// Test accuracy after the update, when evaluated.
    pub test_acc: Option<f64>,
    pub grad_cls: f64,
    pub grad_input: f64,
    pub grad_clf: f64,
    /// Eigen-ratio of the batch's restored `[CLS]` vectors, when defined.
    pub eig_ratio: Option<f64>,
}

pub const METRICS_HEADER: &str = "epoch,batch,loss,test_acc,grad_cls,grad_input,grad_clf,eig_ratio";

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], mut out: W) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    writeln!(out, "{METRICS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.epoch,
            r.batch,
            r.loss,
            opt(r.test_acc),
            r.grad_cls,
            r.grad_input,
            r.grad_clf,
            opt(r.eig_ratio)
        )?;
    }
    Ok(())
}

/// Parses what [`write_metrics_csv`] writes.
pub fn read_metrics<R: std::io::Read>(reader: R) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    if rdr.headers()?.iter().collect::<Vec<_>>().join(",") != METRICS_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("expected header {METRICS_HEADER:?}") });
    }
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub struct TrainOutcome {
    pub params: ModelParams,
    pub metrics: Vec<MetricsRow>,
}

/// `p ← p − lr · g` for every parameter, touching only embedding rows that
/// were looked up.
pub fn sgd_step(params: &mut ModelParams, grads: &GradBundle, lr: f64) -> Result<()> {
    for (&id, row) in &grads.embed.rows {
        for (p, g) in params.embed.row_mut(id).iter_mut().zip(row) {
            *p -= lr * g;
        }
    }
    for ((_, p), (_, g)) in params.layer.tensors_mut().into_iter().zip(grads.layer.tensors()) {
        p.axpy(-lr, g)?;
    }
    params.clf.w.axpy(-lr, &grads.clf.w)?;
    params.clf.b.axpy(-lr, &grads.clf.b)
}

struct Adam {
    step: i32,
    m: ModelParams,
    v: ModelParams,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn adam_update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, bc1: f64, bc2: f64) {
    for i in 0..p.len() {
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + ADAM_EPS);
    }
}

impl Adam {
    fn new(like: &ModelParams) -> Self {
        let zeros = ModelParams::zeros(like.vocab(), like.dim(), like.classes());
        Self { step: 0, m: zeros.clone(), v: zeros }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &GradBundle, lr: f64) {
        self.step += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.step);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.step);
        for (&id, g) in &grads.embed.rows {
            adam_update(params.embed.row_mut(id), g, self.m.embed.row_mut(id), self.v.embed.row_mut(id), lr, bc1, bc2);
        }
        let dense_p = params.tensors_mut().into_iter().skip(1);
        let dense_m = self.m.tensors_mut().into_iter().skip(1);
        let dense_v = self.v.tensors_mut().into_iter().skip(1);
        let mut dense_g: Vec<&Matrix> = grads.layer.tensors().into_iter().map(|(_, g)| g).collect();
        dense_g.push(&grads.clf.w);
        dense_g.push(&grads.clf.b);
        for (((p, m), v), g) in dense_p.zip(dense_m).zip(dense_v).zip(dense_g) {
            adam_update(p.1.as_mut_slice(), g.as_slice(), m.1.as_mut_slice(), v.1.as_mut_slice(), lr, bc1, bc2);
        }
    }
}

/// Fraction of rows whose largest logit is at the label. Ties go to the
/// lowest class index.
pub fn accuracy_from_logits(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::DegenerateInput("accuracy of an empty set".into()));
    }
    if logits.rows() != labels.len() {
        return Err(Error::Dimension(format!("{} logit rows for {} labels", logits.rows(), labels.len())));
    }
    let hits = (0..logits.rows())
        .filter(|&r| {
            let row = logits.row(r);
            let best = (0..row.len()).fold(0, |b, c| if row[c] > row[b] { c } else { b });
            best == labels[r]
        })
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

const EVAL_CHUNK: usize = 256;

pub fn predict_logits(params: &ModelParams, data: &Dataset, arch: Architecture) -> Result<Matrix> {
    let mut logits = Matrix::zeros(data.len(), params.classes());
    for (c, chunk) in data.samples.chunks(EVAL_CHUNK).enumerate() {
        let batch: Vec<TokenSeq> = chunk.iter().map(|s| s.ids.clone()).collect();
        let t = model::forward(params, &batch, arch)?;
        for r in 0..chunk.len() {
            logits.row_mut(c * EVAL_CHUNK + r).copy_from_slice(t.logits.row(r));
        }
    }
    Ok(logits)
}

pub fn evaluate(params: &ModelParams, data: &Dataset, arch: Architecture) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::DegenerateInput("cannot evaluate on an empty set".into()));
    }
    accuracy_from_logits(&predict_logits(params, data, arch)?, &data.labels())
}

/// Number of optimizer steps a run will take.
pub fn planned_steps(config: &TrainConfig, train_len: usize) -> usize {
    let per_epoch = train_len.div_ceil(config.batch_size);
    let total = per_epoch * config.epochs;
    config.max_batches.map_or(total, |m| m.min(total))
}

pub fn train(config: &TrainConfig, train_set: &Dataset, test_set: &Dataset) -> Result<TrainOutcome> {
    train_with(config, train_set, test_set, |_, _| Ok(()))
}

/// Trains from a fresh seeded initialisation. `on_epoch(epoch, params)` runs
/// after each completed (or truncated final) epoch.
pub fn train_with(
    config: &TrainConfig,
    train_set: &Dataset,
    test_set: &Dataset,
    mut on_epoch: impl FnMut(usize, &ModelParams) -> Result<()>,
) -> Result<TrainOutcome> {
    config.validate()?;
    train_set.validate()?;
    test_set.validate()?;
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::Config("training and test sets must be nonempty".into()));
    }
    if train_set.num_classes != test_set.num_classes || train_set.vocab_size != test_set.vocab_size {
        return Err(Error::Config("training and test sets disagree on classes or vocabulary".into()));
    }
    let root = Rng::new(config.seed);
    let mut params = ModelParams::init(train_set.vocab_size, config.d, train_set.num_classes, &mut root.fork(0))?;
    let mut adam = (config.optimizer == Optimizer::Adam).then(|| Adam::new(&params));
    let total = planned_steps(config, train_set.len());
    let mut metrics = Vec::with_capacity(total);
    let mut step = 0;

    for epoch in 1..=config.epochs {
        if step == total {
            break;
        }
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        root.fork(epoch as u64).shuffle(&mut order);
        for chunk in order.chunks(config.batch_size) {
            if step == total {
                break;
            }
            let batch: Vec<TokenSeq> = chunk.iter().map(|&i| train_set.samples[i].ids.clone()).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| train_set.samples[i].label).collect();
            let trace = model::forward(&params, &batch, config.arch)?;
            let loss = model::loss(&trace, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, batch: step + 1, loss });
            }
            let grads = model::backward(&params, &trace, &labels)?;
            if !grads.is_finite() {
                return Err(Error::Divergence { epoch, batch: step + 1, loss: f64::NAN });
            }
            let norms = grad_norms(&grads);
            let eig = eigen_ratio(&trace.cls).ok();
            match adam.as_mut() {
                Some(a) => a.step(&mut params, &grads, config.lr),
                None => sgd_step(&mut params, &grads, config.lr)?,
            }
            step += 1;
            let scheduled = step % config.eval_every == 0 && step <= config.eval_window;
            let test_acc =
                if scheduled || step == total { Some(evaluate(&params, test_set, config.arch)?) } else { None };
            metrics.push(MetricsRow {
                epoch,
                batch: step,
                loss,
                test_acc,
                grad_cls: norms.cls,
                grad_input: norms.input,
                grad_clf: norms.clf,
                eig_ratio: eig,
            });
        }
        on_epoch(epoch, &params)?;
    }
    Ok(TrainOutcome { params, metrics })
}
