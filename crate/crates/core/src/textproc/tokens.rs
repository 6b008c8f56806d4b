use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Fixed sentence window, in tokens.
pub const MAX_LEN: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub source_id: String,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Splits normalized text on whitespace runs.
pub fn tokenize(text: &str) -> TokenSeq {
    tokenize_with_id(text, "")
}

pub fn tokenize_with_id(text: &str, source_id: impl Into<String>) -> TokenSeq {
    TokenSeq {
        tokens: text.split_whitespace().map(str::to_owned).collect(),
        source_id: source_id.into(),
    }
}

/// One position of a [`FixedSentence`]. Padding is a separate variant, so no
/// token string can collide with it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Slot {
    Token(String),
    Pad,
}

impl Slot {
    pub fn as_token(&self) -> Option<&str> {
        match self {
            Slot::Token(t) => Some(t),
            Slot::Pad => None,
        }
    }

    pub fn is_pad(&self) -> bool {
        matches!(self, Slot::Pad)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedSentence {
    slots: Vec<Slot>,
    true_length: usize,
}

impl FixedSentence {
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn true_length(&self) -> usize {
        self.true_length
    }

    pub fn max_len(&self) -> usize {
        self.slots.len()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().filter_map(Slot::as_token)
    }
}

/// Truncates to the first `max_len` tokens or pads with [`Slot::Pad`].
pub fn unify_length(seq: &TokenSeq, max_len: usize) -> FixedSentence {
    assert!(max_len >= 1, "max_len must be at least 1");
    let true_length = seq.tokens.len().min(max_len);
    let mut slots: Vec<Slot> = seq.tokens[..true_length]
        .iter()
        .cloned()
        .map(Slot::Token)
        .collect();
    slots.resize(max_len, Slot::Pad);
    FixedSentence { slots, true_length }
}

/// Counts of pre-truncation token lengths.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    counts: BTreeMap<usize, usize>,
    total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramRow {
    pub length: usize,
    pub count: usize,
    pub cumulative_fraction: f64,
}

impl LengthHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sequences<'a>(corpus: impl IntoIterator<Item = &'a TokenSeq>) -> Self {
        let mut h = Self::new();
        for seq in corpus {
            h.add(seq.len());
        }
        h
    }

    pub fn add(&mut self, length: usize) {
        *self.counts.entry(length).or_default() += 1;
        self.total += 1;
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    pub fn count(&self, length: usize) -> usize {
        self.counts.get(&length).copied().unwrap_or(0)
    }

    /// Fraction of sequences with at most `length` tokens; 0 for an empty histogram.
    pub fn cumulative_fraction(&self, length: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let le: usize = self.counts.range(..=length).map(|(_, c)| c).sum();
        le as f64 / self.total as f64
    }

    pub fn rows(&self) -> Vec<HistogramRow> {
        let mut running = 0;
        self.counts
            .iter()
            .map(|(&length, &count)| {
                running += count;
                HistogramRow {
                    length,
                    count,
                    cumulative_fraction: running as f64 / self.total as f64,
                }
            })
            .collect()
    }

    /// `length<TAB>count<TAB>cumulative` with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("length\tcount\tcumulative\n");
        for r in self.rows() {
            out.push_str(&format!("{}\t{}\t{:.6}\n", r.length, r.count, r.cumulative_fraction));
        }
        out
    }
}
