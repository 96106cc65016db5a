use crate::error::{Error, Result};
use crate::model::{TokenSeq, CLS_ID, PAD_ID};
use std::collections::HashMap;

pub const DEFAULT_VOCAB_CAP: usize = 30_000;
/// First id handed to a real word; `PAD_ID` and `CLS_ID` come before it.
pub const FIRST_WORD_ID: usize = 2;

/// Lowercased runs of alphanumeric characters.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_lowercase)
}

/// Frequency-ranked word list. Ids: `PAD_ID`, `CLS_ID`, then words from
/// [`FIRST_WORD_ID`], then one out-of-vocabulary id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    ids: HashMap<String, usize>,
    num_words: usize,
}

impl Vocab {
    /// Keeps the `cap` most frequent words; ties break alphabetically so the
    /// result does not depend on hash order.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, cap: usize) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for text in texts {
            for w in words(text) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(cap);
        Self::from_words(ranked.into_iter().map(|(w, _)| w))
    }

    /// Assigns ids in the given order.
    pub fn from_words<S: Into<String>>(list: impl IntoIterator<Item = S>) -> Self {
        let mut ids = HashMap::new();
        for w in list {
            let next = FIRST_WORD_ID + ids.len();
            ids.entry(w.into()).or_insert(next);
        }
        let num_words = ids.len();
        Self { ids, num_words }
    }

    /// Words ordered by id, so `from_words(v.word_list())` rebuilds `v`.
    pub fn word_list(&self) -> Vec<&str> {
        let mut list: Vec<(&str, usize)> = self.ids.iter().map(|(w, &i)| (w.as_str(), i)).collect();
        list.sort_unstable_by_key(|&(_, i)| i);
        list.into_iter().map(|(w, _)| w).collect()
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn oov_id(&self) -> usize {
        FIRST_WORD_ID + self.num_words
    }

    /// Embedding-table rows needed: pad, cls, words and oov.
    pub fn size(&self) -> usize {
        self.oov_id() + 1
    }

    pub fn id(&self, word: &str) -> usize {
        self.ids.get(word).copied().unwrap_or_else(|| self.oov_id())
    }

    /// `[CLS]` followed by word ids, cut to `max_len` and right-padded with
    /// `PAD_ID` to exactly `max_len`. The sequence's `len` counts real tokens.
    pub fn tokenize(&self, text: &str, max_len: usize) -> Result<TokenSeq> {
        if max_len < 2 {
            return Err(Error::Config(format!("max_len must be at least 2, got {max_len}")));
        }
        let mut ids = Vec::with_capacity(max_len);
        ids.push(CLS_ID);
        ids.extend(words(text).take(max_len - 1).map(|w| self.id(&w)));
        if ids.len() < 2 {
            return Err(Error::DegenerateInput(format!("text {text:?} has no tokens")));
        }
        let len = ids.len();
        ids.resize(max_len, PAD_ID);
        Ok(TokenSeq { ids, len })
    }
}
