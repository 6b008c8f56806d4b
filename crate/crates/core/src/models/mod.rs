//! The seven classifier presets: softmax regression, three MLP variants and
//! three LSTM variants (word-only and word+character).

mod model;
mod spec;

pub use model::{argmax, build_model, ForwardPass, Model, Prediction};
pub use spec::{
    LabelScheme, ModelSpec, Preset, ReportedFigures, DEFAULT_CHAR_EMBED_DIM, DEFAULT_CHAR_LSTM_SIZE,
    DEFAULT_DROPOUT, DEFAULT_HIDDEN_SIZES, DEFAULT_WORD_LSTM_SIZE,
};
