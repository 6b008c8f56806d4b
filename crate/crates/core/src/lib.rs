//! Sentiment classification for Persian product reviews.
//!
//! The pipeline runs raw review text through [`textproc`] (normalization,
//! tokenization, the fixed 15-token window), maps tokens to frozen word vectors
//! and character ids in [`embed`], and classifies with one of seven
//! architectures from [`models`], all built on the hand-differentiated ops in
//! [`nn`]. [`train`] covers optimizers, schedules, rebalancing and on-disk
//! shards; [`eval`] covers confusion matrices and corpus statistics.

pub mod embed;
pub mod error;
pub mod eval;
pub mod models;
pub mod nn;
pub mod synthetic;
pub mod textproc;
pub mod train;

pub use error::{Error, Result};
