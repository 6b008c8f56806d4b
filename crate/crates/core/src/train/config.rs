use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Preset;
use crate::nn::Precision;
use crate::train::optim::OptimizerKind;
use crate::train::schedule::{DecayUnit, LrSchedule};
use crate::train::shards::DEFAULT_SHARD_SIZE;

pub const DEFAULT_BATCH_SIZE: usize = 512;
pub const DEFAULT_EPOCHS: usize = 10;
pub const SGD_LR: f64 = 0.003;
pub const ADAM_LR: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    /// Starting learning rate. The exponential schedule ignores it and follows
    /// its closed form from the first epoch.
    pub base_lr: f64,
    pub lr_schedule: LrSchedule,
    pub batch_size: usize,
    pub epochs: usize,
    /// Overrides the model's dropout rate when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropout_rate: Option<f64>,
    pub shard_size: usize,
    pub seed: u64,
    pub precision: Precision,
    /// Stop once train accuracy reaches this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_train_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::for_preset(Preset::CharW2vLstm)
    }
}

impl TrainConfig {
    /// Optimizer, learning rate and schedule each preset was described with.
    pub fn for_preset(preset: Preset) -> Self {
        let (optimizer, base_lr, lr_schedule) = match preset {
            Preset::W2vSoftmax => (OptimizerKind::Sgd, SGD_LR, LrSchedule::Constant),
            Preset::W2vMlpReluLrdecay | Preset::W2vMlpReluLrdecayDropout => (
                OptimizerKind::Adam,
                ADAM_LR,
                LrSchedule::ExpDecay { unit: DecayUnit::Epoch },
            ),
            _ => (OptimizerKind::Adam, ADAM_LR, LrSchedule::plateau()),
        };
        TrainConfig {
            optimizer,
            base_lr,
            lr_schedule,
            batch_size: DEFAULT_BATCH_SIZE,
            epochs: DEFAULT_EPOCHS,
            dropout_rate: None,
            shard_size: DEFAULT_SHARD_SIZE,
            seed: 0,
            precision: Precision::Single,
            target_train_accuracy: None,
        }
    }

    /// The tabulated hyperparameters: batch 512, Adam at 0.001, plateau decay 0.9, dropout 0.5.
    pub fn tabulated() -> Self {
        TrainConfig {
            dropout_rate: Some(0.5),
            ..TrainConfig::for_preset(Preset::W2vLstm)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.base_lr));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.shard_size == 0 {
            return bad("shard size must be at least 1".into());
        }
        if let Some(d) = self.dropout_rate {
            if !(0.0..1.0).contains(&d) {
                return bad(format!("dropout rate {d} not in [0, 1)"));
            }
        }
        if let LrSchedule::Plateau { factor, .. } = self.lr_schedule {
            if !(factor > 0.0 && factor < 1.0) {
                return bad(format!("plateau factor {factor} not in (0, 1)"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_defaults() {
        let s = TrainConfig::for_preset(Preset::W2vSoftmax);
        assert_eq!((s.optimizer, s.base_lr), (OptimizerKind::Sgd, 0.003));
        let m = TrainConfig::for_preset(Preset::W2vMlpSigmoid);
        assert_eq!((m.optimizer, m.base_lr), (OptimizerKind::Adam, 0.001));
        assert_eq!(m.lr_schedule, LrSchedule::plateau());
        assert_eq!(TrainConfig::tabulated().batch_size, 512);
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = TrainConfig::default();
        c.base_lr = 0.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.dropout_rate = Some(1.0);
        assert!(c.validate().is_err());
    }
}
