//! Data ingestion, tokenisation, optimisation and evaluation.

pub mod data;
pub mod train;
pub mod vocab;

pub use data::{
    generate_synthetic, load_agnews_csv, read_agnews, Dataset, Sample, SyntheticConfig, TextDataset,
    UnigramClassifier,
};
pub use train::{
    accuracy_from_logits, evaluate, predict_logits, read_metrics, sgd_step, train, train_with, write_metrics_csv, MetricsRow, Optimizer,
    TrainConfig, TrainOutcome,
};
pub use vocab::Vocab;
