use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embed::{DEFAULT_DIM, DEFAULT_MAX_WORD_CHARS};
use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::textproc::MAX_LEN;

/// The seven classifier configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Preset {
    W2vSoftmax,
    W2vMlpSigmoid,
    W2vMlpReluLrdecay,
    W2vMlpReluLrdecayDropout,
    W2vLstm,
    CharW2vLstmRus,
    CharW2vLstm,
}

/// Figures published for a configuration on the original review corpus, kept
/// so reports can print them next to locally measured numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportedFigures {
    /// Table F1 column, in percent.
    pub f1: f64,
    /// Accuracy quoted in the narrative for the same model, when it differs.
    pub narrative_accuracy: Option<f64>,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::W2vSoftmax,
        Preset::W2vMlpSigmoid,
        Preset::W2vMlpReluLrdecay,
        Preset::W2vMlpReluLrdecayDropout,
        Preset::W2vLstm,
        Preset::CharW2vLstmRus,
        Preset::CharW2vLstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::W2vSoftmax => "W2V_SOFTMAX",
            Preset::W2vMlpSigmoid => "W2V_MLP_SIGMOID",
            Preset::W2vMlpReluLrdecay => "W2V_MLP_RELU_LRDECAY",
            Preset::W2vMlpReluLrdecayDropout => "W2V_MLP_RELU_LRDECAY_DROPOUT",
            Preset::W2vLstm => "W2V_LSTM",
            Preset::CharW2vLstmRus => "CHAR_W2V_LSTM_RUS",
            Preset::CharW2vLstm => "CHAR_W2V_LSTM",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::W2vSoftmax => "Word2Vec+SoftMax",
            Preset::W2vMlpSigmoid => "Word2Vec+5Layers+Sigmoid",
            Preset::W2vMlpReluLrdecay => "Word2Vec+5Layers+ReLU+lrDecay",
            Preset::W2vMlpReluLrdecayDropout => "Word2Vec+5Layers+ReLU+lrDecay+DropOut",
            Preset::W2vLstm => "Word2Vec+LSTM",
            Preset::CharW2vLstmRus => "CharEmbed+Word2Vec+LSTM+RUS",
            Preset::CharW2vLstm => "CharEmbed+Word2Vec+LSTM",
        }
    }

    pub fn reported(self) -> ReportedFigures {
        let (f1, narrative_accuracy) = match self {
            Preset::W2vSoftmax => (63.1, Some(63.1)),
            Preset::W2vMlpSigmoid => (72.0, None),
            Preset::W2vMlpReluLrdecay => (72.1, Some(72.01)),
            Preset::W2vMlpReluLrdecayDropout => (71.8, Some(72.01)),
            Preset::W2vLstm => (75.7, Some(75.07)),
            Preset::CharW2vLstmRus => (73.9, None),
            Preset::CharW2vLstm => (78.3, None),
        };
        ReportedFigures {
            f1,
            narrative_accuracy,
        }
    }

    pub fn is_recurrent(self) -> bool {
        matches!(self, Preset::W2vLstm | Preset::CharW2vLstm | Preset::CharW2vLstmRus)
    }

    pub fn uses_chars(self) -> bool {
        matches!(self, Preset::CharW2vLstm | Preset::CharW2vLstmRus)
    }

    pub fn uses_rus(self) -> bool {
        self == Preset::CharW2vLstmRus
    }

    pub fn uses_dropout(self) -> bool {
        self == Preset::W2vMlpReluLrdecayDropout
    }

    /// Hidden activation for MLP presets; `None` for the rest.
    pub fn activation(self) -> Option<Activation> {
        match self {
            Preset::W2vMlpSigmoid => Some(Activation::Sigmoid),
            Preset::W2vMlpReluLrdecay | Preset::W2vMlpReluLrdecayDropout => Some(Activation::Relu),
            _ => None,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase().replace('-', "_");
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == wanted)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}

pub const DEFAULT_HIDDEN_SIZES: [usize; 4] = [200, 100, 60, 30];
pub const DEFAULT_WORD_LSTM_SIZE: usize = 100;
pub const DEFAULT_CHAR_LSTM_SIZE: usize = 50;
pub const DEFAULT_CHAR_EMBED_DIM: usize = 16;
/// Dropout of the dropout MLP preset.
pub const DEFAULT_DROPOUT: f64 = 0.25;

/// Declarative description of one classifier. Which fields matter depends on the preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub preset: Preset,
    pub num_classes: usize,
    pub hidden_sizes: Vec<usize>,
    pub word_lstm_size: usize,
    pub char_lstm_size: usize,
    /// Width of the trained layer applied to one-hot character ids.
    pub char_embed_dim: usize,
    /// Number of known characters; the id space is `0..=char_vocab_size`.
    pub char_vocab_size: usize,
    pub dropout_rate: f64,
    pub embed_dim: usize,
    pub max_len: usize,
    pub max_word_chars: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::new(Preset::CharW2vLstm, 3)
    }
}

impl ModelSpec {
    pub fn new(preset: Preset, num_classes: usize) -> Self {
        ModelSpec {
            preset,
            num_classes,
            hidden_sizes: DEFAULT_HIDDEN_SIZES.to_vec(),
            word_lstm_size: DEFAULT_WORD_LSTM_SIZE,
            char_lstm_size: DEFAULT_CHAR_LSTM_SIZE,
            char_embed_dim: DEFAULT_CHAR_EMBED_DIM,
            char_vocab_size: 0,
            dropout_rate: if preset.uses_dropout() { DEFAULT_DROPOUT } else { 0.0 },
            embed_dim: DEFAULT_DIM,
            max_len: MAX_LEN,
            max_word_chars: DEFAULT_MAX_WORD_CHARS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(2..=3).contains(&self.num_classes) {
            return bad(format!("num_classes must be 2 or 3, got {}", self.num_classes));
        }
        if self.embed_dim == 0 || self.max_len == 0 || self.max_word_chars == 0 {
            return bad("embed_dim, max_len and max_word_chars must be at least 1".into());
        }
        if self.preset.activation().is_some() && self.hidden_sizes.contains(&0) {
            return bad("hidden sizes must be at least 1".into());
        }
        if self.preset.is_recurrent() && self.word_lstm_size == 0 {
            return bad("word_lstm_size must be at least 1".into());
        }
        if self.preset.uses_chars() && (self.char_lstm_size == 0 || self.char_embed_dim == 0) {
            return bad("char_lstm_size and char_embed_dim must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} not in [0, 1)", self.dropout_rate));
        }
        Ok(())
    }

    /// Per-token input width of the word LSTM.
    pub fn word_lstm_input(&self) -> usize {
        if self.preset.uses_chars() {
            self.embed_dim + self.char_lstm_size
        } else {
            self.embed_dim
        }
    }

    /// Widths of the dense chain for the feed-forward presets, input to output.
    pub fn dense_widths(&self) -> Vec<usize> {
        let mut widths = vec![self.max_len * self.embed_dim];
        if self.preset.activation().is_some() {
            widths.extend(&self.hidden_sizes);
        }
        widths.push(self.num_classes);
        widths
    }
}

/// Class names and their one-hot encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelScheme {
    pub classes: Vec<String>,
}

impl LabelScheme {
    /// Index 0 is negative, 1 positive: one-hot rows "10" and "01".
    pub fn binary() -> Self {
        LabelScheme {
            classes: vec!["negative".into(), "positive".into()],
        }
    }

    /// Column order of the category statistics table.
    pub fn ternary() -> Self {
        LabelScheme {
            classes: vec!["positive".into(), "negative".into(), "neutral".into()],
        }
    }

    pub fn for_classes(num_classes: usize) -> Result<Self> {
        match num_classes {
            2 => Ok(Self::binary()),
            3 => Ok(Self::ternary()),
            n => Err(Error::Config(format!("num_classes must be 2 or 3, got {n}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.classes[index]
    }

    /// Accepts a class index or a class name (case-insensitive).
    pub fn parse(&self, raw: &str) -> Result<usize> {
        let raw = raw.trim();
        if let Ok(i) = raw.parse::<usize>() {
            if i < self.classes.len() {
                return Ok(i);
            }
        }
        self.classes
            .iter()
            .position(|c| c.eq_ignore_ascii_case(raw))
            .ok_or_else(|| Error::Data(format!("unknown label `{raw}` for classes {:?}", self.classes)))
    }

    pub fn one_hot(&self, index: usize) -> Vec<u8> {
        (0..self.classes.len()).map(|i| u8::from(i == index)).collect()
    }
}
