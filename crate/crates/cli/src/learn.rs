//! `train` and `eval`.

use crate::args::{EvalArgs, TrainArgs};
use crate::{create_out_dir, Failure, Outcome};
use serde_json::{json, Value};
use std::io::Write;
use wavenet_core::model::checkpoint::Checkpoint;
use wavenet_core::training::{
    accuracy_from_logits, generate_synthetic, load_agnews_csv, predict_logits, train_with, write_metrics_csv,
    Dataset, SyntheticConfig, TrainConfig, Vocab,
};
use wavenet_core::Architecture;

const SYNTHETIC: &str = "synthetic";

/// Train/test sets plus what `eval` needs to rebuild them.
struct Prepared {
    train: Dataset,
    test: Dataset,
    source: Value,
}

fn synthetic_split(samples: usize, seed: u64, test_fraction: f64) -> Result<(Dataset, Dataset), Failure> {
    let cfg = SyntheticConfig { n_samples: samples, ..Default::default() };
    Ok(generate_synthetic(&cfg, seed)?.split(test_fraction, seed)?)
}

fn prepare(a: &TrainArgs) -> Result<Prepared, Failure> {
    if a.dataset == SYNTHETIC {
        if a.test_dataset.is_some() {
            return Err(Failure::Config("--test-dataset needs a CSV --dataset".into()));
        }
        let (train, test) = synthetic_split(a.samples, a.seed, a.test_fraction)?;
        let source = json!({
            "dataset": SYNTHETIC,
            "samples": a.samples,
            "seed": a.seed,
            "test_fraction": a.test_fraction,
        });
        return Ok(Prepared { train, test, source });
    }
    let texts = load_agnews_csv(&a.dataset)?;
    let vocab = Vocab::build(texts.texts.iter().map(String::as_str), a.vocab_cap);
    let all = texts.encode(&vocab, a.max_len)?;
    let (train, test) = match &a.test_dataset {
        Some(path) => (all, load_agnews_csv(path)?.encode(&vocab, a.max_len)?),
        None => all.split(a.test_fraction, a.seed)?,
    };
    let source = json!({
        "dataset": a.dataset,
        "max_len": a.max_len,
        "vocab": vocab.word_list(),
    });
    Ok(Prepared { train, test, source })
}

pub fn train(a: TrainArgs) -> Outcome {
    if a.batch_size == 0 {
        return Err(Failure::Config("batch size must be at least 1".into()));
    }
    let data = prepare(&a)?;
    let per_epoch = data.train.len().div_ceil(a.batch_size).max(1);
    let epochs = a.epochs.unwrap_or_else(|| a.batches.map_or(4, |b| b.div_ceil(per_epoch).max(1)));
    let arch = Architecture { mode: a.mode, restore: a.restore };
    let config = TrainConfig {
        lr: a.lr,
        batch_size: a.batch_size,
        epochs,
        arch,
        d: a.d,
        seed: a.seed,
        max_len: a.max_len,
        max_batches: a.batches,
        optimizer: a.optimizer,
        ..Default::default()
    };
    config.validate()?;
    let out = a.out.out;
    create_out_dir(&out)?;

    let mut saved = 0;
    let outcome = train_with(&config, &data.train, &data.test, |epoch, params| {
        let meta = json!({ "epoch": epoch, "config": config, "source": data.source });
        Checkpoint::new(params, arch, meta).save(out.join(format!("checkpoint-epoch-{epoch}.json")))?;
        saved += 1;
        Ok(())
    })?;

    let mut file = std::io::BufWriter::new(std::fs::File::create(out.join("metrics.csv"))?);
    write_metrics_csv(&outcome.metrics, &mut file)?;
    file.flush()?;

    let last = outcome.metrics.last().ok_or_else(|| Failure::Runtime("no training steps ran".into()))?;
    println!(
        "trained {} batches over {} epochs: final loss {:.4}, test accuracy {:.4}; wrote metrics.csv and {saved} checkpoints to {}",
        last.batch,
        last.epoch,
        last.loss,
        last.test_acc.unwrap_or(f64::NAN),
        out.display()
    );
    Ok(())
}

fn meta_str<'a>(source: &'a Value, key: &str) -> Result<&'a str, Failure> {
    source[key].as_str().ok_or_else(|| Failure::Config(format!("checkpoint metadata lacks {key:?}")))
}

fn meta_u64(source: &Value, key: &str) -> Result<u64, Failure> {
    source[key].as_u64().ok_or_else(|| Failure::Config(format!("checkpoint metadata lacks {key:?}")))
}

pub fn eval(a: EvalArgs) -> Outcome {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let params = ck.params()?;
    let source = &ck.meta["source"];
    let test = if a.dataset == SYNTHETIC {
        if meta_str(source, "dataset")? != SYNTHETIC {
            return Err(Failure::Config("checkpoint was not trained on synthetic data; pass a CSV".into()));
        }
        let fraction = source["test_fraction"]
            .as_f64()
            .ok_or_else(|| Failure::Config("checkpoint metadata lacks \"test_fraction\"".into()))?;
        synthetic_split(meta_u64(source, "samples")? as usize, meta_u64(source, "seed")?, fraction)?.1
    } else {
        let words = source["vocab"]
            .as_array()
            .ok_or_else(|| Failure::Config("checkpoint has no vocabulary; it was trained on synthetic data".into()))?;
        let vocab = Vocab::from_words(words.iter().filter_map(Value::as_str));
        load_agnews_csv(&a.dataset)?.encode(&vocab, meta_u64(source, "max_len")? as usize)?
    };
    test.validate()?;
    if test.vocab_size != params.vocab() || test.num_classes != params.classes() {
        return Err(Failure::Config(format!(
            "dataset has {} ids and {} classes, checkpoint expects {} and {}",
            test.vocab_size,
            test.num_classes,
            params.vocab(),
            params.classes()
        )));
    }

    let logits = predict_logits(&params, &test, ck.arch)?;
    let labels = test.labels();
    let accuracy = accuracy_from_logits(&logits, &labels)?;
    let out = a.out.out;
    create_out_dir(&out)?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(out.join("predictions.csv"))?);
    writeln!(file, "index,label,predicted")?;
    for (i, &label) in labels.iter().enumerate() {
        let row = logits.row(i);
        let predicted = (0..row.len()).fold(0, |b, c| if row[c] > row[b] { c } else { b });
        writeln!(file, "{i},{label},{predicted}")?;
    }
    file.flush()?;
    println!("accuracy {accuracy:.4} on {} samples; wrote predictions.csv to {}", labels.len(), out.display());
    Ok(())
}
