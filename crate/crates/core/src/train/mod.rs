//! Optimizers, learning-rate schedules, splitting and rebalancing, on-disk
//! shards and the training loop.

mod config;
mod optim;
mod report;
mod sampling;
mod schedule;
pub mod shards;
mod trainer;

pub use config::{TrainConfig, ADAM_LR, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, SGD_LR};
pub use optim::{adam_step, sgd_step, AdamState, Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use report::{EpochReport, TrainReport, TrainSummary};
pub use sampling::{class_histogram, random_undersample, split_train_test};
pub use schedule::{
    lr_exp_decay, lr_plateau, DecayUnit, LrSchedule, Plateau, EXP_DECAY_AMPLITUDE, EXP_DECAY_FLOOR,
    EXP_DECAY_PERIOD, PLATEAU_FACTOR, PLATEAU_PATIENCE,
};
pub use shards::{
    read_shard, write_shards, Shard, ShardEntry, ShardManifest, ShardMeta, ShardStream, ShardTracker,
    DEFAULT_SHARD_SIZE, MANIFEST_FILE,
};
pub use trainer::{train_loop, TrainData, TrainOutcome, CHECKPOINT_FILE};
