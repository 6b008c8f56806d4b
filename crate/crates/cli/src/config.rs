//! The run configuration: a TOML file with one table per pipeline stage,
//! overlaid by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use sarv_core::models::{LabelScheme, ModelSpec, Preset};
use sarv_core::nn::Precision;
use sarv_core::textproc::{bundled_stopwords, load_stopwords, ColumnMap, CorpusFormat, NormConfig};
use sarv_core::train::{LrSchedule, TrainConfig, DecayUnit};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, Result};

pub const RUN_CONFIG_FILE: &str = "run_config.toml";
pub const SEED_ENV: &str = "SARV_SEED";
pub const DEFAULT_OUT_DIR: &str = "sarv-out";
pub const DEFAULT_PRESET: Preset = Preset::CharW2vLstm;
pub const DEFAULT_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormSection {
    pub strip_punctuation: bool,
    pub strip_digits_and_foreign_letters: bool,
    pub unicode_persian_fold: bool,
    /// Use the built-in Persian list when `paths.stopwords` is unset.
    pub bundled_stopwords: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub punctuation_class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub letters_digits_class: Option<String>,
}

impl Default for NormSection {
    fn default() -> Self {
        let n = NormConfig::default();
        NormSection {
            strip_punctuation: n.strip_punctuation,
            strip_digits_and_foreign_letters: n.strip_digits_and_foreign_letters,
            unicode_persian_fold: n.unicode_persian_fold,
            bundled_stopwords: true,
            punctuation_class: None,
            letters_digits_class: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    /// Guessed from the corpus file extension when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<CorpusFormat>,
    pub columns: ColumnMap,
    /// Label names in class-index order; defaults follow the class count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
    /// Malformed rows tolerated before preprocessing aborts.
    pub max_malformed: usize,
    /// Fraction of records assigned to the training split.
    pub split: f64,
    /// Undersample the training split to the minority class count.
    pub rus: bool,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            format: None,
            columns: ColumnMap::default(),
            classes: None,
            max_malformed: 100,
            split: 0.8,
            rus: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shard_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub norm: NormSection,
    #[serde(default)]
    pub corpus: CorpusSection,
    pub model: ModelSpec,
    pub train: TrainConfig,
    #[serde(default)]
    pub paths: Paths,
}

/// Values given on the command line; each one set replaces the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub classes: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub lr_schedule: Option<ScheduleKind>,
    pub dropout: Option<f64>,
    pub shard_size: Option<usize>,
    pub split: Option<f64>,
    pub seed: Option<u64>,
    pub rus: bool,
    pub precision: Option<Precision>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Constant,
    Exp,
    Plateau,
}

impl ScheduleKind {
    pub fn schedule(self) -> LrSchedule {
        match self {
            ScheduleKind::Constant => LrSchedule::Constant,
            ScheduleKind::Exp => LrSchedule::ExpDecay { unit: DecayUnit::Epoch },
            ScheduleKind::Plateau => LrSchedule::plateau(),
        }
    }
}

impl RunConfig {
    pub fn for_preset(preset: Preset, num_classes: usize) -> Self {
        RunConfig {
            seed: 0,
            norm: NormSection::default(),
            corpus: CorpusSection::default(),
            model: ModelSpec::new(preset, num_classes),
            train: TrainConfig::for_preset(preset),
            paths: Paths::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Parses a complete or partial config; missing keys take the defaults of
    /// the preset named in the text (or the default preset).
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let file: Table = text.parse().map_err(|e| CliError::ConfigFile {
            path: origin.to_owned(),
            source: Box::new(e),
        })?;
        let preset = match file.get("model").and_then(|m| m.get("preset")).and_then(Value::as_str) {
            Some(name) => name.parse().map_err(|e: sarv_core::Error| CliError::Usage(e.to_string()))?,
            None => DEFAULT_PRESET,
        };
        Self::merged(preset, DEFAULT_CLASSES, Some(file), origin)
    }

    fn merged(preset: Preset, classes: usize, file: Option<Table>, origin: &Path) -> Result<Self> {
        let defaults = Table::try_from(Self::for_preset(preset, classes)).expect("defaults serialize");
        let mut merged = defaults;
        if let Some(file) = file {
            overlay(&mut merged, file);
        }
        merged.try_into().map_err(|e| CliError::ConfigFile {
            path: origin.to_owned(),
            source: Box::new(e),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    /// Defaults, then the config file (`--config`, else `run_config.toml` in
    /// the output directory when present), then flags, then `SARV_SEED` if no
    /// seed was given anywhere.
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let out_dir = o.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        let file_path = match &o.config {
            Some(p) if !p.exists() => return Err(CliError::Usage(format!("config file {} does not exist", p.display()))),
            Some(p) => Some(p.clone()),
            None => Some(out_dir.join(RUN_CONFIG_FILE)).filter(|p| p.exists()),
        };
        let (file, origin) = match &file_path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                let table: Table = text.parse().map_err(|e| CliError::ConfigFile {
                    path: p.clone(),
                    source: Box::new(e),
                })?;
                (Some(table), p.clone())
            }
            None => (None, PathBuf::from("<defaults>")),
        };
        let file_preset = file
            .as_ref()
            .and_then(|t| t.get("model"))
            .and_then(|m| m.get("preset"))
            .and_then(Value::as_str)
            .map(str::parse::<Preset>)
            .transpose()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let file_seed = file.as_ref().is_some_and(|t| t.contains_key("seed"));
        let preset = o.preset.or(file_preset).unwrap_or(DEFAULT_PRESET);
        let mut cfg = Self::merged(preset, o.classes.unwrap_or(DEFAULT_CLASSES), file, &origin)?;
        cfg.apply(o);
        if o.seed.is_none() && !file_seed {
            if let Ok(raw) = std::env::var(SEED_ENV) {
                cfg.seed = raw
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{raw}` is not an unsigned integer")))?;
            }
        }
        cfg.train.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
            if v.is_some() {
                slot.clone_from(v);
            }
        };
        set(&mut self.paths.corpus, &o.corpus);
        set(&mut self.paths.embeddings, &o.embeddings);
        set(&mut self.paths.stopwords, &o.stopwords);
        set(&mut self.paths.out_dir, &o.out_dir);
        if let Some(p) = o.preset {
            self.model.preset = p;
        }
        if let Some(c) = o.classes {
            if self.model.num_classes != c {
                self.corpus.classes = None;
            }
            self.model.num_classes = c;
        }
        if let Some(v) = o.epochs {
            self.train.epochs = v;
        }
        if let Some(v) = o.batch_size {
            self.train.batch_size = v;
        }
        if let Some(v) = o.lr {
            self.train.base_lr = v;
        }
        if let Some(k) = o.lr_schedule {
            self.train.lr_schedule = k.schedule();
        }
        if let Some(v) = o.dropout {
            self.train.dropout_rate = Some(v);
        }
        if let Some(v) = o.shard_size {
            self.train.shard_size = v;
        }
        if let Some(v) = o.split {
            self.corpus.split = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if o.rus {
            self.corpus.rus = true;
        }
        if let Some(v) = o.precision {
            self.train.precision = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if self.train.seed != self.seed {
            return Err(CliError::Usage(format!(
                "train.seed {} differs from the run seed {}",
                self.train.seed, self.seed
            )));
        }
        if !(self.corpus.split > 0.0 && self.corpus.split < 1.0) {
            return Err(CliError::Usage(format!("split must be in (0, 1), got {}", self.corpus.split)));
        }
        let labels = self.labels()?;
        if labels.len() != self.model.num_classes {
            return Err(CliError::Usage(format!(
                "{} class names given for {} classes",
                labels.len(),
                self.model.num_classes
            )));
        }
        Ok(())
    }

    pub fn labels(&self) -> Result<LabelScheme> {
        match &self.corpus.classes {
            Some(classes) => Ok(LabelScheme {
                classes: classes.clone(),
            }),
            None => Ok(LabelScheme::for_classes(self.model.num_classes)?),
        }
    }

    pub fn norm_config(&self) -> Result<NormConfig> {
        let stopwords = match &self.paths.stopwords {
            Some(p) => load_stopwords(p)?,
            None if self.norm.bundled_stopwords => bundled_stopwords(),
            None => Default::default(),
        };
        let n = &self.norm;
        Ok(NormConfig {
            strip_punctuation: n.strip_punctuation,
            strip_digits_and_foreign_letters: n.strip_digits_and_foreign_letters,
            unicode_persian_fold: n.unicode_persian_fold,
            stopwords,
            punctuation_class: n.punctuation_class.clone(),
            letters_digits_class: n.letters_digits_class.clone(),
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn shard_dir(&self) -> PathBuf {
        self.paths.shard_dir.clone().unwrap_or_else(|| self.out_dir().join("shards"))
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.paths
            .checkpoint
            .clone()
            .unwrap_or_else(|| self.out_dir().join(sarv_core::train::CHECKPOINT_FILE))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.paths.report_dir.clone().unwrap_or_else(|| self.out_dir())
    }

    /// An input path that must be configured and exist.
    pub fn input(&self, what: &str, path: &Option<PathBuf>) -> Result<PathBuf> {
        let p = path
            .clone()
            .ok_or_else(|| CliError::Usage(format!("no {what} given (use --{what} or paths.{what})")))?;
        if !p.exists() {
            return Err(CliError::Usage(format!("{what} {} does not exist", p.display())));
        }
        Ok(p)
    }

    /// Writes the resolved config next to the outputs.
    pub fn write_resolved(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(RUN_CONFIG_FILE);
        fs::write(&path, self.to_toml()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Replaces default keys with file keys one level deep, so a section given in
/// the file may be partial but a nested value (such as the schedule) is taken whole.
fn overlay(base: &mut Table, file: Table) {
    for (key, value) in file {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(section)), Value::Table(given)) => {
                for (k, v) in given {
                    section.insert(k, v);
                }
            }
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        for p in Preset::ALL {
            let cfg = RunConfig::for_preset(p, 3);
            let text = cfg.to_toml();
            let back = RunConfig::from_toml(&text, Path::new("t")).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_toml(), text);
        }
    }

    #[test]
    fn partial_file_takes_preset_defaults() {
        let cfg = RunConfig::from_toml("[model]\npreset = \"W2V_SOFTMAX\"\n", Path::new("t")).unwrap();
        assert_eq!(cfg.train, TrainConfig::for_preset(Preset::W2vSoftmax));
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("[corpus]\nspilt = 0.7\n", Path::new("t")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn schedule_section_is_replaced_whole() {
        let cfg = RunConfig::from_toml("[train.lr_schedule]\nkind = \"constant\"\n", Path::new("t")).unwrap();
        assert_eq!(cfg.train.lr_schedule, LrSchedule::Constant);
    }
}
