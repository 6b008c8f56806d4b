//! Pretrained word vectors, the character inventory, and the encoded record
//! that flows through shards into the models.

mod chars;
mod table;

use serde::{Deserialize, Serialize};

pub use chars::{build_char_vocab, CharVocab, DEFAULT_MAX_WORD_CHARS};
pub use table::{load_embeddings, EmbeddingTable, LoadReport, DEFAULT_DIM};

use crate::textproc::{FixedSentence, Slot};

/// A sentence ready for a model: embedding ids per slot (0 = no vector),
/// unpadded character ids per slot, true length and class label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodedSentence {
    #[serde(rename = "t")]
    pub token_ids: Vec<u32>,
    #[serde(rename = "c")]
    pub chars: Vec<Vec<u32>>,
    #[serde(rename = "len")]
    pub true_length: usize,
    #[serde(rename = "y")]
    pub label: usize,
}

impl EncodedSentence {
    pub fn max_len(&self) -> usize {
        self.token_ids.len()
    }
}

pub fn encode_sentence(
    sentence: &FixedSentence,
    table: &EmbeddingTable,
    vocab: &CharVocab,
    label: usize,
) -> EncodedSentence {
    let (token_ids, chars) = sentence
        .slots()
        .iter()
        .map(|slot| match slot {
            Slot::Token(t) => (table.id_of(t), vocab.encode_truncated(t)),
            Slot::Pad => (0, Vec::new()),
        })
        .unzip();
    EncodedSentence {
        token_ids,
        chars,
        true_length: sentence.true_length(),
        label,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::{tokenize, unify_length};

    #[test]
    fn encodes_ids_and_chars() {
        let (table, _) = EmbeddingTable::parse_glove(b"ab 1 2\n", 2);
        let vocab = build_char_vocab(&[tokenize("ab ba c")], 20);
        let s = unify_length(&tokenize("ab zc"), 4);
        let e = encode_sentence(&s, &table, &vocab, 1);
        assert_eq!(e.token_ids, [1, 0, 0, 0]);
        assert_eq!(e.chars, vec![vec![1, 2], vec![0, 3], vec![], vec![]]);
        assert_eq!(e.true_length, 2);
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, r#"{"t":[1,0,0,0],"c":[[1,2],[0,3],[],[]],"len":2,"y":1}"#);
    }
}
