//! One function per subcommand. Each reads its inputs from the resolved
//! [`RunConfig`], writes its outputs under the configured directories and
//! returns a summary for the caller to print.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sarv_core::embed::{build_char_vocab, encode_sentence, load_embeddings, CharVocab, EmbeddingTable, EncodedSentence};
use sarv_core::eval::{category_stats, evaluate, metrics, CategoryStats, ConfusionMatrix, Metrics};
use sarv_core::models::{Model, ModelSpec};
use sarv_core::nn::checkpoint::{self, Checkpoint};
use sarv_core::nn::{Precision, Real};
use sarv_core::textproc::{
    read_corpus, tokenize_with_id, unify_length, CorpusFormat, LengthHistogram, Malformed, Normalizer, RawRecord,
};
use sarv_core::train::{
    random_undersample, split_train_test, train_loop, write_shards, ShardManifest, ShardMeta, TrainData, TrainReport,
    MANIFEST_FILE,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const CHAR_VOCAB_FILE: &str = "char_vocab.tsv";
pub const HISTOGRAM_FILE: &str = "histogram.tsv";
pub const PREPROCESS_FILE: &str = "preprocess.json";
pub const REPORT_JSONL: &str = "report.jsonl";
pub const REPORT_TXT: &str = "report.txt";
pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_TXT: &str = "metrics.txt";
pub const STATS_FILE: &str = "category_stats.tsv";

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn corpus_format(cfg: &RunConfig, path: &Path) -> CorpusFormat {
    cfg.corpus.format.unwrap_or_else(|| CorpusFormat::from_path(path))
}

fn embeddings(cfg: &RunConfig) -> Result<EmbeddingTable> {
    let path = cfg.input("embeddings", &cfg.paths.embeddings)?;
    let (table, _) = load_embeddings(&path, cfg.model.embed_dim)?;
    Ok(table)
}

/// Reads the corpus and maps labels to class indices. Rows with unknown
/// labels join the malformed list.
fn labelled_corpus(cfg: &RunConfig) -> Result<(Vec<(RawRecord, usize)>, Vec<Malformed>)> {
    let path = cfg.input("corpus", &cfg.paths.corpus)?;
    let corpus = read_corpus(&path, corpus_format(cfg, &path), &cfg.corpus.columns)?;
    let labels = cfg.labels()?;
    let mut malformed = corpus.malformed;
    let mut records = Vec::with_capacity(corpus.records.len());
    for r in corpus.records {
        match labels.parse(&r.label) {
            Ok(y) => records.push((r, y)),
            Err(e) => malformed.push(Malformed {
                line: r.line,
                reason: e.to_string(),
            }),
        }
    }
    malformed.sort_by_key(|m| m.line);
    if malformed.len() > cfg.corpus.max_malformed {
        return Err(CliError::TooManyMalformed {
            count: malformed.len(),
            limit: cfg.corpus.max_malformed,
            first_line: malformed[0].line,
        });
    }
    Ok((records, malformed))
}

/// What preprocessing recorded about its inputs; later stages check against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub records: usize,
    pub malformed: Vec<MalformedRow>,
    pub char_vocab_size: usize,
    /// Fraction of sentences with at most `max_len` tokens before truncation.
    pub within_max_len: f64,
    pub max_len: usize,
    pub embeddings_sha256: String,
    pub norm_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug)]
pub struct Preprocessed {
    pub summary: PreprocessSummary,
    pub records: Vec<EncodedSentence>,
    pub histogram: LengthHistogram,
    pub vocab: CharVocab,
}

/// Normalizes, tokenizes and encodes the corpus, writing `records.jsonl`,
/// `char_vocab.tsv`, `histogram.tsv` and `preprocess.json` into the output directory.
pub fn preprocess(cfg: &RunConfig) -> Result<Preprocessed> {
    let (rows, malformed) = labelled_corpus(cfg)?;
    let table = embeddings(cfg)?;
    let norm = cfg.norm_config()?;
    let normalizer = Normalizer::new(&norm)?;
    let seqs: Vec<_> = rows
        .iter()
        .map(|(r, _)| tokenize_with_id(&normalizer.normalize(&r.text), r.line.to_string()))
        .collect();
    let histogram = LengthHistogram::from_sequences(&seqs);
    let vocab = build_char_vocab(&seqs, cfg.model.max_word_chars);
    let records: Vec<EncodedSentence> = seqs
        .iter()
        .zip(&rows)
        .map(|(s, (_, y))| encode_sentence(&unify_length(s, cfg.model.max_len), &table, &vocab, *y))
        .collect();

    let summary = PreprocessSummary {
        records: records.len(),
        malformed: malformed
            .into_iter()
            .map(|m| MalformedRow {
                line: m.line,
                reason: m.reason,
            })
            .collect(),
        char_vocab_size: vocab.len(),
        within_max_len: histogram.cumulative_fraction(cfg.model.max_len),
        max_len: cfg.model.max_len,
        embeddings_sha256: table.hash(),
        norm_sha256: norm.hash(),
    };

    let out = cfg.out_dir();
    let mut jsonl = String::new();
    for r in &records {
        jsonl.push_str(&serde_json::to_string(r).expect("record serializes"));
        jsonl.push('\n');
    }
    write(&out.join(RECORDS_FILE), jsonl)?;
    write(&out.join(CHAR_VOCAB_FILE), vocab.to_tsv())?;
    write(&out.join(HISTOGRAM_FILE), histogram.to_tsv())?;
    write(
        &out.join(PREPROCESS_FILE),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    cfg.write_resolved(&out)?;
    Ok(Preprocessed {
        summary,
        records,
        histogram,
        vocab,
    })
}

fn load_summary(out: &Path) -> Result<PreprocessSummary> {
    let path = out.join(PREPROCESS_FILE);
    if !path.exists() {
        return Err(CliError::Usage(format!("{} not found; run `sarv preprocess` first", path.display())));
    }
    serde_json::from_str(&read_to_string(&path)?).map_err(|source| {
        sarv_core::Error::Json {
            line: source.line(),
            path,
            source,
        }
        .into()
    })
}

pub fn load_records(path: &Path) -> Result<Vec<EncodedSentence>> {
    let text = read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| {
                sarv_core::Error::Json {
                    path: path.to_owned(),
                    line: i + 1,
                    source,
                }
                .into()
            })
        })
        .collect()
}

#[derive(Debug)]
pub struct Sharded {
    pub train: ShardManifest,
    pub test: ShardManifest,
}

/// Splits the encoded records, optionally undersamples the training part, and
/// writes `train/` and `test/` shard directories.
pub fn shard(cfg: &RunConfig) -> Result<Sharded> {
    let out = cfg.out_dir();
    let summary = load_summary(&out)?;
    let records = load_records(&out.join(RECORDS_FILE))?;
    if records.is_empty() {
        return Err(sarv_core::Error::Data("no encoded records to shard".into()).into());
    }
    let classes = cfg.model.num_classes;
    if let Some(r) = records.iter().find(|r| r.label >= classes) {
        return Err(sarv_core::Error::Data(format!("record label {} outside {classes} classes", r.label)).into());
    }
    let (mut train, test) = split_train_test(&records, cfg.corpus.split, cfg.seed)?;
    let undersample = cfg.corpus.rus || cfg.model.preset.uses_rus();
    if undersample {
        train = random_undersample(&train, |r| r.label, classes, cfg.seed)?;
    }
    let meta = |undersampled| ShardMeta {
        num_classes: classes,
        vocab_hash: summary.embeddings_sha256.clone(),
        config_hash: summary.norm_sha256.clone(),
        split_seed: cfg.seed,
        undersampled,
    };
    let dir = cfg.shard_dir();
    for part in ["train", "test"] {
        let d = dir.join(part);
        if d.exists() {
            fs::remove_dir_all(&d).map_err(|e| CliError::io(&d, e))?;
        }
    }
    let train = write_shards(&train, cfg.train.shard_size, &dir.join("train"), meta(undersample))?;
    let test = write_shards(&test, cfg.train.shard_size, &dir.join("test"), meta(false))?;
    cfg.write_resolved(&out)?;
    Ok(Sharded { train, test })
}

fn load_char_vocab(cfg: &RunConfig, max_word_chars: usize) -> Result<Option<CharVocab>> {
    let path = cfg.out_dir().join(CHAR_VOCAB_FILE);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(CharVocab::from_tsv(&read_to_string(&path)?, max_word_chars)?))
}

fn check_vocab_hash(manifest: &ShardManifest, table: &EmbeddingTable) -> Result<()> {
    if !manifest.meta.vocab_hash.is_empty() && manifest.meta.vocab_hash != table.hash() {
        return Err(sarv_core::Error::Data(format!(
            "shards in {} were encoded with different word vectors (hash {} vs {})",
            manifest.dir().display(),
            manifest.meta.vocab_hash,
            table.hash()
        ))
        .into());
    }
    Ok(())
}

fn manifest_at(dir: &Path) -> Result<ShardManifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Err(CliError::Usage(format!("{} not found; run `sarv shard` first", path.display())));
    }
    Ok(ShardManifest::load(&path)?)
}

#[derive(Debug)]
pub struct Trained {
    pub report: TrainReport,
    pub checkpoint: PathBuf,
}

/// Trains on the training shards, selecting weights on the test shards when
/// they hold records, and writes the checkpoint and reports.
pub fn train(cfg: &RunConfig) -> Result<Trained> {
    let shards = cfg.shard_dir();
    let train_m = manifest_at(&shards.join("train"))?;
    let test_m = manifest_at(&shards.join("test")).ok().filter(|m| m.total > 0);
    let table = embeddings(cfg)?;
    check_vocab_hash(&train_m, &table)?;

    let mut spec = cfg.model.clone();
    if spec.preset.uses_chars() {
        let vocab = load_char_vocab(cfg, spec.max_word_chars)?.ok_or_else(|| {
            CliError::Usage(format!("{} needs {CHAR_VOCAB_FILE} from `sarv preprocess`", spec.preset))
        })?;
        spec.char_vocab_size = vocab.len();
    }
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = cfg.seed;

    let (mut report, model_bytes_hash) = match train_cfg.precision {
        Precision::Single => fit::<f32>(&spec, &train_cfg, &train_m, test_m.as_ref(), &table, &cfg.checkpoint())?,
        Precision::Double => fit::<f64>(&spec, &train_cfg, &train_m, test_m.as_ref(), &table, &cfg.checkpoint())?,
    };
    report.summary.checkpoint_sha256 = Some(model_bytes_hash);

    let reports = cfg.report_dir();
    write(&reports.join(REPORT_JSONL), report.to_jsonl())?;
    write(&reports.join(REPORT_TXT), report.to_text())?;
    cfg.write_resolved(&cfg.out_dir())?;
    Ok(Trained {
        report,
        checkpoint: cfg.checkpoint(),
    })
}

fn fit<F: Real>(
    spec: &ModelSpec,
    cfg: &sarv_core::train::TrainConfig,
    train: &ShardManifest,
    test: Option<&ShardManifest>,
    table: &EmbeddingTable,
    checkpoint: &Path,
) -> Result<(TrainReport, String)> {
    let outcome = train_loop::<F>(spec, cfg, TrainData::Shards(train), test.map(TrainData::Shards), table, None)?;
    if let Some(dir) = checkpoint.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let hash = outcome.model.save(checkpoint)?;
    Ok((outcome.report, hash))
}

/// The checkpoint's own spec must agree with the data it is applied to; on
/// disagreement the shape diff from restoring into the expected model is returned.
fn restore<F: Real>(ck: &Checkpoint, classes: Option<usize>, vocab: Option<&CharVocab>, dim: usize) -> Result<Model<F>> {
    let model = Model::<F>::from_checkpoint(ck)?;
    let mut expected = model.spec().clone();
    if let Some(c) = classes {
        expected.num_classes = c;
    }
    if let (true, Some(v)) = (expected.preset.uses_chars(), vocab) {
        expected.char_vocab_size = v.len();
    }
    expected.embed_dim = dim;
    if &expected != model.spec() {
        Model::<F>::new(expected, 0)?.restore(ck)?;
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<String>,
    pub confusion: Vec<Vec<u64>>,
    pub metrics: Metrics,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut cm = ConfusionMatrix::new(self.classes.len());
        for (t, row) in self.confusion.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                for _ in 0..n {
                    cm.record(t, p).expect("indices come from the matrix");
                }
            }
        }
        let m = &self.metrics;
        let mut out = cm.to_table(&self.classes);
        out.push_str("\nclass\tprecision\trecall\tf1\tsupport\n");
        for (name, c) in self.classes.iter().zip(&m.per_class) {
            let flag = if c.undefined_precision || c.undefined_recall { "\t(undefined, scored 0)" } else { "" };
            let _ = writeln!(out, "{name}\t{:.4}\t{:.4}\t{:.4}\t{}{flag}", c.precision, c.recall, c.f1, c.support);
        }
        let _ = writeln!(
            out,
            "\naccuracy {:.4}\nmacro F1 {:.4}\nweighted F1 {:.4}\nrecords {}",
            m.accuracy, m.macro_f1, m.weighted_f1, m.total
        );
        out
    }
}

/// Scores a checkpoint on a shard manifest (the test split unless `manifest` is given).
pub fn eval(cfg: &RunConfig, checkpoint_path: Option<&Path>, manifest: Option<&Path>) -> Result<EvalReport> {
    let ck_path = checkpoint_path.map(Path::to_owned).unwrap_or_else(|| cfg.checkpoint());
    let ck = load_checkpoint(&ck_path)?;
    let manifest = match manifest {
        Some(p) => ShardManifest::load(p)?,
        None => manifest_at(&cfg.shard_dir().join("test"))?,
    };
    let table = embeddings(cfg)?;
    check_vocab_hash(&manifest, &table)?;
    let classes = Some(manifest.meta.num_classes).filter(|&c| c > 0);
    let vocab = load_char_vocab(cfg, cfg.model.max_word_chars)?;
    let cm = match ck.precision {
        Precision::Single => score::<f32>(&ck, &manifest, classes, vocab.as_ref(), &table)?,
        Precision::Double => score::<f64>(&ck, &manifest, classes, vocab.as_ref(), &table)?,
    };
    let names = cfg.labels()?.classes;
    let names = if names.len() == cm.classes() {
        names
    } else {
        sarv_core::models::LabelScheme::for_classes(cm.classes())?.classes
    };
    let report = EvalReport {
        classes: names,
        confusion: cm.rows(),
        metrics: metrics(&cm),
    };
    let dir = cfg.report_dir();
    write(&dir.join(METRICS_JSON), serde_json::to_string_pretty(&report).expect("report serializes"))?;
    write(&dir.join(METRICS_TXT), report.to_text())?;
    cfg.write_resolved(&cfg.out_dir())?;
    Ok(report)
}

fn score<F: Real>(
    ck: &Checkpoint,
    manifest: &ShardManifest,
    classes: Option<usize>,
    vocab: Option<&CharVocab>,
    table: &EmbeddingTable,
) -> Result<ConfusionMatrix> {
    let model = restore::<F>(ck, classes, vocab, table.dim())?;
    let mut cm = ConfusionMatrix::new(model.spec().num_classes);
    for shard in manifest.stream() {
        cm.merge(&evaluate(&model, &shard?.records, table)?);
    }
    Ok(cm)
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    if !path.exists() {
        return Err(CliError::Usage(format!("checkpoint {} does not exist", path.display())));
    }
    Ok(checkpoint::load(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedLine {
    pub text: String,
    pub label: String,
    pub class: usize,
    pub probs: Vec<f64>,
}

/// Runs raw text lines through normalization, encoding and the checkpointed model.
pub fn predict(cfg: &RunConfig, checkpoint_path: Option<&Path>, lines: &[String]) -> Result<Vec<PredictedLine>> {
    let ck_path = checkpoint_path.map(Path::to_owned).unwrap_or_else(|| cfg.checkpoint());
    let ck = load_checkpoint(&ck_path)?;
    let table = embeddings(cfg)?;
    let normalizer = Normalizer::new(&cfg.norm_config()?)?;
    match ck.precision {
        Precision::Single => classify::<f32>(cfg, &ck, &table, &normalizer, lines),
        Precision::Double => classify::<f64>(cfg, &ck, &table, &normalizer, lines),
    }
}

fn classify<F: Real>(
    cfg: &RunConfig,
    ck: &Checkpoint,
    table: &EmbeddingTable,
    normalizer: &Normalizer,
    lines: &[String],
) -> Result<Vec<PredictedLine>> {
    let spec: ModelSpec = Model::<F>::from_checkpoint(ck)?.spec().clone();
    let vocab = load_char_vocab(cfg, spec.max_word_chars)?;
    if spec.preset.uses_chars() && vocab.is_none() {
        return Err(CliError::Usage(format!(
            "{} needs {CHAR_VOCAB_FILE} in {}",
            spec.preset,
            cfg.out_dir().display()
        )));
    }
    let model = restore::<F>(ck, None, vocab.as_ref(), table.dim())?;
    let vocab = vocab.unwrap_or_else(|| build_char_vocab(&[], spec.max_word_chars));
    let records: Vec<EncodedSentence> = lines
        .iter()
        .map(|l| {
            let seq = tokenize_with_id(&normalizer.normalize(l), "");
            encode_sentence(&unify_length(&seq, spec.max_len), table, &vocab, 0)
        })
        .collect();
    let labels = cfg.labels()?.classes;
    let labels = if labels.len() == spec.num_classes {
        labels
    } else {
        sarv_core::models::LabelScheme::for_classes(spec.num_classes)?.classes
    };
    let preds = if records.is_empty() { Vec::new() } else { model.predict(&records, table)? };
    Ok(lines
        .iter()
        .zip(preds)
        .map(|(text, p)| PredictedLine {
            text: text.clone(),
            label: labels[p.label].clone(),
            class: p.label,
            probs: p.probs,
        })
        .collect())
}

#[derive(Debug)]
pub struct Stats {
    pub table: CategoryStats,
    pub malformed: Vec<Malformed>,
}

/// Per-category label counts of the raw corpus, written as `category_stats.tsv`.
pub fn stats(cfg: &RunConfig) -> Result<Stats> {
    let (rows, malformed) = labelled_corpus(cfg)?;
    let classes = cfg.labels()?.classes;
    let table = category_stats(&classes, rows.iter().map(|(r, y)| (r.category.as_deref(), *y)));
    write(&cfg.report_dir().join(STATS_FILE), table.to_tsv())?;
    cfg.write_resolved(&cfg.out_dir())?;
    Ok(Stats { table, malformed })
}
