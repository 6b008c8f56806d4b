use serde::{Deserialize, Serialize};

pub const EXP_DECAY_FLOOR: f64 = 0.0001;
pub const EXP_DECAY_AMPLITUDE: f64 = 0.003;
pub const EXP_DECAY_PERIOD: f64 = 2000.0;
pub const PLATEAU_FACTOR: f64 = 0.9;
pub const PLATEAU_PATIENCE: usize = 27;

/// `0.0001 + 0.003 · e^(−step/2000)`.
pub fn lr_exp_decay(step: u64) -> f64 {
    EXP_DECAY_FLOOR + EXP_DECAY_AMPLITUDE * (-(step as f64) / EXP_DECAY_PERIOD).exp()
}

/// What `step` counts in the exponential schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayUnit {
    #[default]
    Epoch,
    Batch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    ExpDecay {
        #[serde(default)]
        unit: DecayUnit,
    },
    Plateau {
        factor: f64,
        patience: usize,
        /// When set, the learning rate may only decay from this epoch on
        /// (the "starting at epoch N" reading) instead of after `patience` flat epochs.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start_epoch: Option<usize>,
    },
}

impl LrSchedule {
    pub fn plateau() -> Self {
        LrSchedule::Plateau {
            factor: PLATEAU_FACTOR,
            patience: PLATEAU_PATIENCE,
            start_epoch: None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LrSchedule::Constant => "constant",
            LrSchedule::ExpDecay { .. } => "exp",
            LrSchedule::Plateau { .. } => "plateau",
        }
    }
}

/// Multiplies the learning rate by `factor` once the best observed accuracy
/// has not improved for `patience` consecutive epochs; improvement resets the count.
#[derive(Debug, Clone, PartialEq)]
pub struct Plateau {
    pub factor: f64,
    pub patience: usize,
    pub start_epoch: Option<usize>,
    best: Option<f64>,
    stale: usize,
    epoch: usize,
}

impl Plateau {
    pub fn new(factor: f64, patience: usize) -> Self {
        Plateau {
            factor,
            patience,
            start_epoch: None,
            best: None,
            stale: 0,
            epoch: 0,
        }
    }

    pub fn starting_at(factor: f64, start_epoch: usize) -> Self {
        Plateau {
            start_epoch: Some(start_epoch),
            ..Plateau::new(factor, 1)
        }
    }

    /// Records one epoch's accuracy and returns the learning rate for the next epoch.
    pub fn observe(&mut self, accuracy: f64, lr: f64) -> f64 {
        self.epoch += 1;
        match self.best {
            Some(b) if accuracy <= b => self.stale += 1,
            _ => {
                self.best = Some(accuracy);
                self.stale = 0;
            }
        }
        let armed = self.start_epoch.is_none_or(|s| self.epoch >= s);
        if armed && self.stale >= self.patience {
            self.stale = 0;
            lr * self.factor
        } else {
            lr
        }
    }
}

/// Plateau decay over a full accuracy history starting from `lr`.
pub fn lr_plateau(history: &[f64], lr: f64, factor: f64, patience: usize) -> f64 {
    let mut p = Plateau::new(factor, patience);
    history.iter().fold(lr, |lr, &a| p.observe(a, lr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_decay_endpoints() {
        assert_eq!(lr_exp_decay(0), 0.0031);
        assert!((lr_exp_decay(2000) - 0.001_203_638_323_514_327_6).abs() < 1e-15);
        assert!((lr_exp_decay(100_000) - 0.0001).abs() < 1e-9);
    }

    #[test]
    fn plateau_examples() {
        assert_eq!(lr_plateau(&[0.1, 0.2, 0.3, 0.4], 0.001, 0.9, 2), 0.001);
        let flat = [0.5; 4];
        // The first epoch sets the best; three more flat epochs reach patience 3.
        assert!((lr_plateau(&flat, 0.001, 0.9, 3) - 0.0009).abs() < 1e-15);
        assert!((lr_plateau(&[0.5; 7], 0.001, 0.9, 3) - 0.00081).abs() < 1e-15);
    }

    #[test]
    fn improvement_resets_counter() {
        assert_eq!(lr_plateau(&[0.5, 0.5, 0.6, 0.6], 1.0, 0.5, 2), 1.0);
    }

    #[test]
    fn start_epoch_variant() {
        let mut p = Plateau::starting_at(0.9, 3);
        let mut lr = 1.0;
        lr = p.observe(0.5, lr);
        lr = p.observe(0.5, lr);
        assert_eq!(lr, 1.0);
        lr = p.observe(0.5, lr);
        assert!((lr - 0.9).abs() < 1e-15);
    }
}
