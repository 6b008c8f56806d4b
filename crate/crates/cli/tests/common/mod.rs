#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use sarv_cli::{Overrides, RunConfig};
use sarv_core::models::Preset;
use sarv_core::synthetic::SyntheticCorpus;

pub fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

/// Writes the corpus as CSV and its vectors in GloVe text format.
pub fn write_corpus(dir: &Path, corpus: &SyntheticCorpus) -> (PathBuf, PathBuf) {
    let c = dir.join("corpus.csv");
    let e = dir.join("vectors.txt");
    fs::write(&c, corpus.to_csv()).unwrap();
    fs::write(&e, corpus.embeddings.to_glove_string()).unwrap();
    (c, e)
}

pub fn overrides(corpus: &Path, embeddings: &Path, out: &Path, preset: Preset, classes: usize) -> Overrides {
    Overrides {
        corpus: Some(corpus.to_owned()),
        embeddings: Some(embeddings.to_owned()),
        out_dir: Some(out.to_owned()),
        preset: Some(preset),
        classes: Some(classes),
        seed: Some(7),
        ..Overrides::default()
    }
}

pub fn resolve(o: &Overrides) -> RunConfig {
    RunConfig::resolve(o).unwrap()
}
