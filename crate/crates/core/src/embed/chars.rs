use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::textproc::TokenSeq;

/// Default cap on characters encoded per word.
pub const DEFAULT_MAX_WORD_CHARS: usize = 20;

/// Character inventory with dense ids starting at 1; id 0 is padding/unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
    ids: HashMap<char, u32>,
    max_word_chars: usize,
}

impl CharVocab {
    fn from_chars(chars: Vec<char>, max_word_chars: usize) -> Self {
        let ids = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u32 + 1))
            .collect();
        CharVocab {
            chars,
            ids,
            max_word_chars,
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn max_word_chars(&self) -> usize {
        self.max_word_chars
    }

    pub fn id(&self, c: char) -> u32 {
        self.ids.get(&c).copied().unwrap_or(0)
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    /// Ids of the first `max_word_chars` characters, without padding.
    pub fn encode_truncated(&self, token: &str) -> Vec<u32> {
        token
            .chars()
            .take(self.max_word_chars)
            .map(|c| self.id(c))
            .collect()
    }

    /// Ids right-padded with 0 to exactly `max_word_chars`.
    pub fn encode_chars(&self, token: &str) -> Vec<u32> {
        let mut ids = self.encode_truncated(token);
        ids.resize(self.max_word_chars, 0);
        ids
    }

    /// `char<TAB>id` per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.chars.iter().enumerate() {
            let _ = writeln!(out, "{c}\t{}", i + 1);
        }
        out
    }

    pub fn from_tsv(text: &str, max_word_chars: usize) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Data(format!("char vocab line {}: `{line}`", n + 1));
            let (c, id) = line.split_once('\t').ok_or_else(bad)?;
            let mut it = c.chars();
            let ch = it.next().ok_or_else(bad)?;
            if it.next().is_some() {
                return Err(bad());
            }
            let id: u32 = id.trim().parse().map_err(|_| bad())?;
            pairs.push((id, ch));
        }
        pairs.sort_unstable();
        for (expected, &(id, _)) in (1u32..).zip(&pairs) {
            if id != expected {
                return Err(Error::Data(format!("char vocab ids are not dense: missing {expected}")));
            }
        }
        Ok(Self::from_chars(pairs.into_iter().map(|(_, c)| c).collect(), max_word_chars))
    }
}

/// Every character seen in the corpus, ordered by code point.
pub fn build_char_vocab<'a>(corpus: impl IntoIterator<Item = &'a TokenSeq>, max_word_chars: usize) -> CharVocab {
    let set: BTreeSet<char> = corpus
        .into_iter()
        .flat_map(|s| s.tokens.iter())
        .flat_map(|t| t.chars())
        .collect();
    CharVocab::from_chars(set.into_iter().collect(), max_word_chars)
}
