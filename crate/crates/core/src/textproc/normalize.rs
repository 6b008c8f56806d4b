use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const BUNDLED_STOPWORDS: &str = include_str!("stopwords_fa.txt");

/// Unicode punctuation categories.
pub const DEFAULT_PUNCTUATION_CLASS: &str = r"\p{P}";
/// ASCII letters and digits, Arabic-Indic and Extended Arabic-Indic (Persian) digits.
pub const DEFAULT_LETTERS_DIGITS_CLASS: &str = r"[A-Za-z0-9\x{0660}-\x{0669}\x{06F0}-\x{06F9}]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormConfig {
    pub strip_punctuation: bool,
    pub strip_digits_and_foreign_letters: bool,
    /// Arabic yeh/kaf to Persian forms, diacritics and tatweel dropped, ZWNJ to space.
    pub unicode_persian_fold: bool,
    pub stopwords: BTreeSet<String>,
    /// Regex overriding [`DEFAULT_PUNCTUATION_CLASS`].
    pub punctuation_class: Option<String>,
    /// Regex overriding [`DEFAULT_LETTERS_DIGITS_CLASS`].
    pub letters_digits_class: Option<String>,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            strip_punctuation: true,
            strip_digits_and_foreign_letters: true,
            unicode_persian_fold: true,
            stopwords: bundled_stopwords(),
            punctuation_class: None,
            letters_digits_class: None,
        }
    }
}

impl NormConfig {
    pub fn without_stopwords() -> Self {
        NormConfig {
            stopwords: BTreeSet::new(),
            ..Self::default()
        }
    }

    /// Stable content hash, recorded in shard manifests.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

pub fn bundled_stopwords() -> BTreeSet<String> {
    parse_stopwords(BUNDLED_STOPWORDS)
}

fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

/// One stopword per line, UTF-8.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = decode_utf8(&bytes)?;
    Ok(parse_stopwords(text))
}

pub fn decode_utf8(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| Error::Decode {
        offset: e.valid_up_to(),
    })
}

fn fold_char(c: char) -> Option<char> {
    match c {
        '\u{064A}' | '\u{0649}' => Some('\u{06CC}'),
        '\u{0643}' => Some('\u{06A9}'),
        '\u{200C}' => Some(' '),
        '\u{064B}'..='\u{065F}' | '\u{0670}' | '\u{0640}' => None,
        other => Some(other),
    }
}

/// Compiled form of a [`NormConfig`].
#[derive(Debug, Clone)]
pub struct Normalizer {
    fold: bool,
    punctuation: Option<Regex>,
    letters_digits: Option<Regex>,
    stopwords: BTreeSet<String>,
}

impl Normalizer {
    pub fn new(cfg: &NormConfig) -> Result<Self> {
        let compile = |enabled: bool, custom: &Option<String>, default: &str| -> Result<Option<Regex>> {
            if !enabled {
                return Ok(None);
            }
            let pattern = custom.as_deref().unwrap_or(default);
            Regex::new(pattern)
                .map(Some)
                .map_err(|e| Error::Config(format!("character class `{pattern}`: {e}")))
        };
        let mut n = Normalizer {
            fold: cfg.unicode_persian_fold,
            punctuation: compile(cfg.strip_punctuation, &cfg.punctuation_class, DEFAULT_PUNCTUATION_CLASS)?,
            letters_digits: compile(
                cfg.strip_digits_and_foreign_letters,
                &cfg.letters_digits_class,
                DEFAULT_LETTERS_DIGITS_CLASS,
            )?,
            stopwords: BTreeSet::new(),
        };
        n.stopwords = cfg
            .stopwords
            .iter()
            .map(|w| n.canonical_chars(w).trim().to_owned())
            .filter(|w| !w.is_empty())
            .collect();
        Ok(n)
    }

    fn canonical_chars(&self, raw: &str) -> String {
        let folded: String = if self.fold {
            raw.chars().filter_map(fold_char).collect()
        } else {
            raw.to_owned()
        };
        folded.to_lowercase()
    }

    pub fn normalize(&self, raw: &str) -> String {
        let mut text = self.canonical_chars(raw);
        for re in [&self.punctuation, &self.letters_digits].into_iter().flatten() {
            text = re.replace_all(&text, " ").into_owned();
        }
        text.split_whitespace()
            .filter(|t| !self.stopwords.contains(*t))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Decodes `raw` as UTF-8 first; invalid input reports the failing byte offset.
    pub fn normalize_bytes(&self, raw: &[u8]) -> Result<String> {
        Ok(self.normalize(decode_utf8(raw)?))
    }
}

/// Convenience wrapper compiling `cfg` for a single string.
pub fn normalize(raw: &str, cfg: &NormConfig) -> Result<String> {
    Ok(Normalizer::new(cfg)?.normalize(raw))
}
