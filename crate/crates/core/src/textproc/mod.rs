//! Review text preprocessing: normalization, whitespace tokenization and the
//! fixed-length sentence window.
//!
//! Every function here is pure, so records can be processed in parallel.

pub mod corpus;
mod normalize;
mod tokens;

pub use corpus::{read_corpus, ColumnMap, Corpus, CorpusFormat, Malformed, RawRecord};
pub use normalize::{
    bundled_stopwords, decode_utf8, load_stopwords, normalize, NormConfig, Normalizer,
    DEFAULT_LETTERS_DIGITS_CLASS, DEFAULT_PUNCTUATION_CLASS,
};
pub use tokens::{
    tokenize, tokenize_with_id, unify_length, FixedSentence, HistogramRow, LengthHistogram, Slot,
    TokenSeq, MAX_LEN,
};
