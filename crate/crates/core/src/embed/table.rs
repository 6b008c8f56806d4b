use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{Real, Tensor};
use crate::textproc::{FixedSentence, Slot};

/// Default word-vector width.
pub const DEFAULT_DIM: usize = 50;

/// Frozen token → vector map. Absent tokens and padding map to the zero vector.
///
/// Tokens get dense ids starting at 1 in file order; id 0 is reserved for
/// "no vector" (out-of-vocabulary or padding).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    vectors: Vec<f32>,
    zero: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub loaded: usize,
    pub skipped: usize,
    pub duplicates: usize,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            tokens: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
            zero: vec![0.0; dim],
        }
    }

    /// Inserts or replaces `token`. Panics if `vector.len() != dim`.
    pub fn insert(&mut self, token: &str, vector: &[f32]) {
        assert_eq!(vector.len(), self.dim, "vector width");
        match self.index.get(token) {
            Some(&id) => {
                let start = (id as usize - 1) * self.dim;
                self.vectors[start..start + self.dim].copy_from_slice(vector);
            }
            None => {
                self.tokens.push(token.to_owned());
                self.vectors.extend_from_slice(vector);
                self.index.insert(token.to_owned(), self.tokens.len() as u32);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Tokens in id order (id = position + 1).
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id_of(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn vector_by_id(&self, id: u32) -> &[f32] {
        if id == 0 || id as usize > self.tokens.len() {
            return &self.zero;
        }
        let start = (id as usize - 1) * self.dim;
        &self.vectors[start..start + self.dim]
    }

    pub fn lookup(&self, token: &str) -> &[f32] {
        self.vector_by_id(self.id_of(token))
    }

    pub fn lookup_slot(&self, slot: &Slot) -> &[f32] {
        match slot {
            Slot::Token(t) => self.lookup(t),
            Slot::Pad => &self.zero,
        }
    }

    /// `[max_len, dim]` matrix whose row `i` is the vector of slot `i`.
    pub fn vectorize_sentence<F: Real>(&self, sentence: &FixedSentence) -> Tensor<F> {
        let data = sentence
            .slots()
            .iter()
            .flat_map(|s| self.lookup_slot(s).iter().map(|&v| F::from_f64_lossy(v as f64)))
            .collect();
        Tensor::from_vec(&[sentence.max_len(), self.dim], data).expect("rows × dim")
    }

    /// SHA-256 over dimension, tokens and vector bits.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for (i, t) in self.tokens.iter().enumerate() {
            h.update((t.len() as u64).to_le_bytes());
            h.update(t.as_bytes());
            for v in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// GloVe text rendering; floats use the shortest round-trip form.
    pub fn to_glove_string(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(t);
            for v in self.lookup(t) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_glove(bytes: &[u8], dim: usize) -> (Self, LoadReport) {
        let mut table = EmbeddingTable::new(dim);
        let mut report = LoadReport::default();
        let mut buf = Vec::with_capacity(dim);
        for raw in bytes.split(|&b| b == b'\n') {
            if raw.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let Ok(line) = std::str::from_utf8(raw) else {
                report.skipped += 1;
                continue;
            };
            let mut parts = line.split_ascii_whitespace();
            let token = parts.next().unwrap_or_default();
            buf.clear();
            let mut ok = true;
            for p in parts {
                match p.parse::<f32>() {
                    Ok(v) if v.is_finite() => buf.push(v),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok || buf.len() != dim {
                report.skipped += 1;
                continue;
            }
            if table.contains(token) {
                report.duplicates += 1;
            } else {
                report.loaded += 1;
            }
            table.insert(token, &buf);
        }
        (table, report)
    }
}

/// Loads a GloVe text file. Rows with the wrong number of components are skipped and counted.
pub fn load_embeddings(path: &Path, dim: usize) -> Result<(EmbeddingTable, LoadReport)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(EmbeddingTable::parse_glove(&bytes, dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::{tokenize, unify_length};

    fn row(token: &str, seed: f32, dim: usize) -> String {
        let vals: Vec<String> = (0..dim).map(|i| format!("{}", seed + i as f32 * 0.01)).collect();
        format!("{token} {}\n", vals.join(" "))
    }

    #[test]
    fn loads_well_formed_rows() {
        let text = format!("{}{}{}", row("a", 0.1, 50), row("b", 0.2, 50), row("c", 0.3, 50));
        let (t, r) = EmbeddingTable::parse_glove(text.as_bytes(), 50);
        assert_eq!(t.len(), 3);
        assert_eq!(t.dim(), 50);
        assert_eq!(r, LoadReport { loaded: 3, skipped: 0, duplicates: 0 });
    }

    #[test]
    fn short_row_skipped() {
        let text = format!("{}cat 0.1 0.2\n", row("a", 0.1, 50));
        let (t, r) = EmbeddingTable::parse_glove(text.as_bytes(), 50);
        assert_eq!(t.len(), 1);
        assert_eq!(r.skipped, 1);
    }

    #[test]
    fn duplicate_keeps_last() {
        let text = "x 1 2\ny 3 4\nx 5 6\n";
        let (t, r) = EmbeddingTable::parse_glove(text.as_bytes(), 2);
        assert_eq!(t.lookup("x"), &[5.0, 6.0]);
        assert_eq!(t.id_of("x"), 1);
        assert_eq!(r.duplicates, 1);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn oov_and_pad_are_zero() {
        let (t, _) = EmbeddingTable::parse_glove(row("a", 0.5, 50).as_bytes(), 50);
        assert_eq!(t.lookup("qxzv"), &[0.0; 50][..]);
        assert_eq!(t.lookup_slot(&Slot::Pad), &[0.0; 50][..]);
        assert_eq!(t.lookup("a")[0], 0.5);
    }

    #[test]
    fn vectorize_rows_follow_slots() {
        let (t, _) = EmbeddingTable::parse_glove(b"k 1 2\nm 3 4\n", 2);
        let s = unify_length(&tokenize("k zz m"), 5);
        let x: Tensor<f64> = t.vectorize_sentence(&s);
        assert_eq!(x.shape(), &[5, 2]);
        assert_eq!(x.as_slice(), &[1.0, 2.0, 0.0, 0.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn glove_round_trip_is_exact() {
        let mut t = EmbeddingTable::new(3);
        t.insert("کتاب", &[0.1, -1.0e-7, 3.4028235e38]);
        t.insert("b", &[1.0 / 3.0, 0.0, -2.5]);
        let (back, _) = EmbeddingTable::parse_glove(t.to_glove_string().as_bytes(), 3);
        assert_eq!(back.hash(), t.hash());
    }

    #[test]
    fn missing_file_is_fatal() {
        assert!(load_embeddings(Path::new("/nonexistent/vectors.txt"), 50).is_err());
    }
}
