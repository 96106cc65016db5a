use super::vocab::Vocab;
use crate::error::{Error, Result};
use crate::model::{TokenSeq, CLS_ID, PAD_ID};
use crate::tensor::Rng;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub ids: TokenSeq,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub num_classes: usize,
    pub vocab_size: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            let toks = s.ids.tokens();
            if toks.first() != Some(&CLS_ID) {
                return Err(Error::DegenerateInput(format!("sample {i} does not start with [CLS]")));
            }
            if let Some(&id) = toks.iter().find(|&&id| id >= self.vocab_size) {
                return Err(Error::Lookup { id, vocab: self.vocab_size });
            }
            if s.label >= self.num_classes {
                return Err(Error::Label { label: s.label, classes: self.num_classes });
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            num_classes: self.num_classes,
            vocab_size: self.vocab_size,
        }
    }

    /// Shuffles with `seed` and moves the last `test_fraction` into a
    /// disjoint test set.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::Config(format!("test fraction must be in [0, 1), got {test_fraction}")));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        Rng::new(seed).shuffle(&mut order);
        let n_test = (self.len() as f64 * test_fraction).round() as usize;
        let (train, test) = order.split_at(self.len() - n_test);
        Ok((self.subset(train), self.subset(test)))
    }
}

/// Raw labelled texts before tokenisation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TextDataset {
    pub texts: Vec<String>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl TextDataset {
    pub fn encode(&self, vocab: &Vocab, max_len: usize) -> Result<Dataset> {
        let samples = self
            .texts
            .iter()
            .zip(&self.labels)
            .map(|(t, &label)| Ok(Sample { ids: vocab.tokenize(t, max_len)?, label }))
            .collect::<Result<_>>()?;
        Ok(Dataset { samples, num_classes: self.num_classes, vocab_size: vocab.size() })
    }
}

pub const AGNEWS_CLASSES: usize = 4;

/// Reads `class,title,description` rows (class in `1..=4`, header optional).
/// Labels are `class − 1`; the text is `title + " " + description`.
pub fn load_agnews_csv(path: impl AsRef<Path>) -> Result<TextDataset> {
    let file = std::fs::File::open(path)?;
    read_agnews(file)
}

pub fn read_agnews<R: std::io::Read>(reader: R) -> Result<TextDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut texts = Vec::new();
    let mut labels = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 1;
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(line, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        if row.len() < 3 {
            return Err(Error::Parse { line, msg: format!("expected 3 columns, found {}", row.len()) });
        }
        let class: i64 = match row[0].trim().parse() {
            Ok(c) => c,
            Err(_) if line == 1 => continue, // header
            Err(_) => return Err(Error::Parse { line, msg: format!("class {:?} is not an integer", &row[0]) }),
        };
        if !(1..=AGNEWS_CLASSES as i64).contains(&class) {
            return Err(Error::Value { line, msg: format!("class {class} outside 1..={AGNEWS_CLASSES}") });
        }
        labels.push(class as usize - 1);
        texts.push(format!("{} {}", &row[1], &row[2]));
    }
    Ok(TextDataset { texts, labels, num_classes: AGNEWS_CLASSES })
}

/// Knobs for the synthetic topic-classification task.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub vocab_per_class: usize,
    pub shared_vocab: usize,
    /// Inclusive range of word counts per text (before `[CLS]`).
    pub len_range: (usize, usize),
    pub n_samples: usize,
    /// Fraction of each text's words drawn from the shared block.
    pub overlap: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { classes: 4, vocab_per_class: 20, shared_vocab: 80, len_range: (8, 24), n_samples: 2000, overlap: 0.3 }
    }
}

/// Each class owns a block of `vocab_per_class` word ids; a shared block
/// follows them. A text of length `L` takes `round(overlap·L)` words from
/// the shared block and the rest from its class block, uniformly, in random
/// order. Labels cycle through the classes, so the set is balanced.
pub fn generate_synthetic(cfg: &SyntheticConfig, seed: u64) -> Result<Dataset> {
    if cfg.classes < 2 || cfg.vocab_per_class < 2 {
        return Err(Error::Config("synthetic data needs ≥ 2 classes and ≥ 2 words per class".into()));
    }
    if !(0.0..1.0).contains(&cfg.overlap) {
        return Err(Error::Config(format!("overlap must be in [0, 1), got {}", cfg.overlap)));
    }
    let (lo, hi) = cfg.len_range;
    if lo < 1 || lo > hi {
        return Err(Error::Config(format!("bad length range {lo}..={hi}")));
    }
    if cfg.overlap > 0.0 && cfg.shared_vocab == 0 {
        return Err(Error::Config("overlap needs a nonempty shared block".into()));
    }
    let first = super::vocab::FIRST_WORD_ID;
    let shared_start = first + cfg.classes * cfg.vocab_per_class;
    let vocab_size = shared_start + cfg.shared_vocab;
    let mut rng = Rng::new(seed);
    let mut samples = Vec::with_capacity(cfg.n_samples);
    for i in 0..cfg.n_samples {
        let label = i % cfg.classes;
        let len = lo + rng.below(hi - lo + 1);
        let n_shared = (cfg.overlap * len as f64).round() as usize;
        let mut words: Vec<usize> = (0..len)
            .map(|w| {
                if w < n_shared {
                    shared_start + rng.below(cfg.shared_vocab)
                } else {
                    first + label * cfg.vocab_per_class + rng.below(cfg.vocab_per_class)
                }
            })
            .collect();
        rng.shuffle(&mut words);
        let mut ids = vec![CLS_ID];
        ids.extend(words);
        samples.push(Sample { ids: TokenSeq::new(ids), label });
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    rng.shuffle(&mut order);
    let samples = order.into_iter().map(|i| samples[i].clone()).collect();
    Ok(Dataset { samples, num_classes: cfg.classes, vocab_size })
}

/// Multinomial naive Bayes on token counts (add-one smoothing), ignoring
/// `[CLS]` and padding. A reference for how separable a dataset is.
pub struct UnigramClassifier {
    log_prior: Vec<f64>,
    log_likelihood: Vec<Vec<f64>>,
}

impl UnigramClassifier {
    pub fn fit(data: &Dataset) -> Self {
        let (c, v) = (data.num_classes, data.vocab_size);
        let mut counts = vec![vec![1.0; v]; c];
        let mut class_counts = vec![1.0; c];
        for s in &data.samples {
            class_counts[s.label] += 1.0;
            for &id in s.ids.tokens() {
                if id != CLS_ID && id != PAD_ID {
                    counts[s.label][id] += 1.0;
                }
            }
        }
        let total: f64 = class_counts.iter().sum();
        let log_prior = class_counts.iter().map(|n| (n / total).ln()).collect();
        let log_likelihood = counts
            .into_iter()
            .map(|row| {
                let z: f64 = row.iter().sum();
                row.into_iter().map(|x| (x / z).ln()).collect()
            })
            .collect();
        Self { log_prior, log_likelihood }
    }

    pub fn predict(&self, seq: &TokenSeq) -> usize {
        let score = |c: usize| {
            self.log_prior[c]
                + seq
                    .tokens()
                    .iter()
                    .filter(|&&id| id != CLS_ID && id != PAD_ID && id < self.log_likelihood[c].len())
                    .map(|&id| self.log_likelihood[c][id])
                    .sum::<f64>()
        };
        (0..self.log_prior.len()).max_by(|&a, &b| score(a).total_cmp(&score(b))).unwrap_or(0)
    }

    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::DegenerateInput("accuracy of an empty set".into()));
        }
        let hits = data.samples.iter().filter(|s| self.predict(&s.ids) == s.label).count();
        Ok(hits as f64 / data.len() as f64)
    }
}
