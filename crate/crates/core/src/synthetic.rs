//! Small generated corpora with known structure, used to exercise training end to end.
//!
//! Words are made of Persian letters so the generated text passes through the
//! default normalizer unchanged and can be fed to the command-line pipeline.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::{build_char_vocab, encode_sentence, CharVocab, EmbeddingTable, EncodedSentence};
use crate::models::{ModelSpec, Preset};
use crate::textproc::{bundled_stopwords, tokenize, unify_length, MAX_LEN};

const LETTERS: [char; 20] = [
    'ب', 'پ', 'ت', 'ج', 'چ', 'ح', 'خ', 'د', 'ر', 'ز', 'ژ', 'س', 'ش', 'ف', 'ق', 'ل', 'م', 'ن', 'گ', 'ه',
];

/// The `index`-th generated word: four letters, never a bundled stopword.
pub fn pseudo_word(index: usize) -> String {
    let stop = bundled_stopwords();
    (index..)
        .map(|i| {
            let mut w = String::from('ق');
            let mut n = i;
            for _ in 0..3 {
                w.push(LETTERS[n % LETTERS.len()]);
                n /= LETTERS.len();
            }
            w
        })
        .find(|w| !stop.contains(w))
        .expect("word")
}

/// Generated texts (already in normalized form), labels and matching word vectors.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub texts: Vec<String>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub embeddings: EmbeddingTable,
}

impl SyntheticCorpus {
    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    /// Tokenizes, unifies to the 15-token window and encodes every text.
    pub fn encode(&self, max_word_chars: usize) -> (CharVocab, Vec<EncodedSentence>) {
        let seqs: Vec<_> = self.texts.iter().map(|t| tokenize(t)).collect();
        let vocab = build_char_vocab(&seqs, max_word_chars);
        let records = seqs
            .iter()
            .zip(&self.labels)
            .map(|(s, &y)| encode_sentence(&unify_length(s, MAX_LEN), &self.embeddings, &vocab, y))
            .collect();
        (vocab, records)
    }

    /// `text,label` CSV with numeric labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("text,label,category\n");
        for (t, y) in self.texts.iter().zip(&self.labels) {
            let _ = writeln!(out, "{t},{y},synthetic");
        }
        out
    }
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, scale: f32) -> Vec<f32> {
    (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
}

/// `n` records over `num_classes` classes where every word belongs to exactly
/// one class and its vector points along that class's axis. Any model that sums
/// per-position evidence separates the classes.
pub fn separable_corpus(num_classes: usize, n: usize, dim: usize, seed: u64) -> SyntheticCorpus {
    assert!(dim >= num_classes, "need one axis per class");
    const WORDS_PER_CLASS: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut embeddings = EmbeddingTable::new(dim);
    for k in 0..num_classes {
        for j in 0..WORDS_PER_CLASS {
            let mut v = random_vector(&mut rng, dim, 0.3);
            v[k] += 1.0;
            embeddings.insert(&pseudo_word(k * WORDS_PER_CLASS + j), &v);
        }
    }
    let mut texts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = i % num_classes;
        let len = rng.random_range(3..=MAX_LEN);
        let words: Vec<String> = (0..len)
            .map(|_| pseudo_word(k * WORDS_PER_CLASS + rng.random_range(0..WORDS_PER_CLASS)))
            .collect();
        texts.push(words.join(" "));
        labels.push(k);
    }
    SyntheticCorpus {
        texts,
        labels,
        num_classes,
        embeddings,
    }
}

/// Binary corpus whose label depends on word order.
///
/// Each text holds one sentiment word and one negator among filler words. The
/// negator either directly follows the sentiment word, flipping its polarity,
/// or appears somewhere earlier, leaving it unchanged. For a fixed sentiment
/// position the label is the XOR of polarity and "negator right after", which
/// no sum of independent per-position scores can represent.
pub fn order_corpus(n: usize, dim: usize, seed: u64) -> SyntheticCorpus {
    const SENTIMENT: usize = 8;
    const FILLERS: usize = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut embeddings = EmbeddingTable::new(dim);
    // Layout of word indices: positive, negative, negator, fillers.
    let positive = |j: usize| pseudo_word(j);
    let negative = |j: usize| pseudo_word(SENTIMENT + j);
    let negator = pseudo_word(2 * SENTIMENT);
    let filler = |j: usize| pseudo_word(2 * SENTIMENT + 1 + j);
    for j in 0..SENTIMENT {
        embeddings.insert(&positive(j), &random_vector(&mut rng, dim, 1.0));
    }
    for j in 0..SENTIMENT {
        embeddings.insert(&negative(j), &random_vector(&mut rng, dim, 1.0));
    }
    embeddings.insert(&negator, &random_vector(&mut rng, dim, 1.0));
    for j in 0..FILLERS {
        embeddings.insert(&filler(j), &random_vector(&mut rng, dim, 1.0));
    }

    let mut texts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let len = rng.random_range(4..=8);
        let mut words: Vec<String> = (0..len).map(|_| filler(rng.random_range(0..FILLERS))).collect();
        // Sentiment never first or last, so both negator placements are always possible.
        let at = rng.random_range(1..len - 1);
        let polarity = rng.random_range(0..2usize);
        words[at] = if polarity == 1 {
            positive(rng.random_range(0..SENTIMENT))
        } else {
            negative(rng.random_range(0..SENTIMENT))
        };
        let flipped = rng.random_bool(0.5);
        let neg_at = if flipped { at + 1 } else { rng.random_range(0..at) };
        words[neg_at] = negator.clone();
        texts.push(words.join(" "));
        labels.push(polarity ^ usize::from(flipped));
    }
    SyntheticCorpus {
        texts,
        labels,
        num_classes: 2,
        embeddings,
    }
}


/// A scaled-down spec for `preset` (4-d vectors, 4-token window, tiny layers)
/// plus a matching word table and `batch` random records, sized for exhaustive
/// finite-difference checks.
pub fn micro_fixture(
    preset: Preset,
    num_classes: usize,
    batch: usize,
    seed: u64,
) -> (ModelSpec, EmbeddingTable, Vec<EncodedSentence>) {
    let mut spec = ModelSpec::new(preset, num_classes);
    spec.embed_dim = 4;
    spec.max_len = 4;
    spec.max_word_chars = 3;
    spec.hidden_sizes = vec![5, 4];
    spec.word_lstm_size = 3;
    spec.char_lstm_size = 2;
    spec.char_embed_dim = 3;
    spec.char_vocab_size = 5;
    if preset.uses_dropout() {
        spec.dropout_rate = 0.25;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = EmbeddingTable::new(spec.embed_dim);
    for i in 0..6 {
        table.insert(&pseudo_word(i), &random_vector(&mut rng, spec.embed_dim, 1.0));
    }
    let records = (0..batch)
        .map(|_| {
            let len = rng.random_range(1..=spec.max_len);
            let token_ids = (0..spec.max_len)
                .map(|t| if t < len { rng.random_range(0..=6) } else { 0 })
                .collect();
            let chars = (0..spec.max_len)
                .map(|t| {
                    if t < len {
                        let n = rng.random_range(1..=spec.max_word_chars);
                        (0..n).map(|_| rng.random_range(0..=spec.char_vocab_size as u32)).collect()
                    } else {
                        Vec::new()
                    }
                })
                .collect();
            EncodedSentence {
                token_ids,
                chars,
                true_length: len,
                label: rng.random_range(0..num_classes),
            }
        })
        .collect();
    (spec, table, records)
}
