use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embed::{EmbeddingTable, EncodedSentence};
use crate::error::{Error, Result};
use crate::eval::{evaluate, metrics, ConfusionMatrix, Metrics};
use crate::models::{Model, ModelSpec};
use crate::nn::{Mode, Real};
use crate::train::config::TrainConfig;
use crate::train::optim::Optimizer;
use crate::train::report::{EpochReport, TrainReport, TrainSummary};
use crate::train::schedule::{lr_exp_decay, DecayUnit, LrSchedule, Plateau};
use crate::train::shards::ShardManifest;

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

/// Where training reads its data.
pub enum TrainData<'a> {
    Shards(&'a ShardManifest),
    Memory(&'a [EncodedSentence]),
}

impl TrainData<'_> {
    fn for_each_chunk(&self, mut f: impl FnMut(&[EncodedSentence]) -> Result<()>) -> Result<()> {
        match self {
            TrainData::Memory(records) => f(records),
            TrainData::Shards(m) => {
                for shard in m.stream() {
                    f(&shard?.records)?;
                }
                Ok(())
            }
        }
    }

    fn confusion<F: Real>(&self, model: &Model<F>, emb: &EmbeddingTable) -> Result<ConfusionMatrix> {
        let mut cm = ConfusionMatrix::new(model.spec().num_classes);
        self.for_each_chunk(|chunk| {
            cm.merge(&evaluate(model, chunk, emb)?);
            Ok(())
        })?;
        Ok(cm)
    }
}

pub struct TrainOutcome<F> {
    pub report: TrainReport,
    /// Weights that scored best on the evaluation data (train data when none is given).
    pub model: Model<F>,
    pub checkpoint: Option<PathBuf>,
}

fn check_data(spec: &ModelSpec, data: &TrainData<'_>) -> Result<()> {
    if let TrainData::Shards(m) = data {
        if m.meta.num_classes != 0 && m.meta.num_classes != spec.num_classes {
            return Err(Error::Config(format!(
                "shards hold {} classes but the model expects {}",
                m.meta.num_classes, spec.num_classes
            )));
        }
        if spec.preset.uses_rus() && !m.is_balanced() {
            return Err(Error::Config(format!(
                "{} expects class-balanced training shards; histogram is {:?}",
                spec.preset, m.class_histogram
            )));
        }
        if m.total == 0 {
            return Err(Error::Data("training manifest holds no records".into()));
        }
    }
    if let TrainData::Memory(r) = data {
        if r.is_empty() {
            return Err(Error::Data("no training records".into()));
        }
    }
    Ok(())
}

/// Runs the full loop: per epoch, stream the training data, shuffle within each
/// shard, take mini-batches, step the optimizer, then score and keep the best weights.
pub fn train_loop<F: Real>(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    train: TrainData<'_>,
    eval: Option<TrainData<'_>>,
    embeddings: &EmbeddingTable,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome<F>> {
    let started = Instant::now();
    cfg.validate()?;
    let mut spec = spec.clone();
    if let Some(rate) = cfg.dropout_rate {
        if spec.preset.activation().is_some() {
            spec.dropout_rate = rate;
        }
    }
    spec.validate()?;
    check_data(&spec, &train)?;

    let mut model: Model<F> = Model::new(spec.clone(), cfg.seed)?;
    let mut optimizer = Optimizer::new(cfg.optimizer);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let mut plateau = match cfg.lr_schedule {
        LrSchedule::Plateau {
            factor,
            patience,
            start_epoch,
        } => {
            let mut p = Plateau::new(factor, patience);
            p.start_epoch = start_epoch;
            Some(p)
        }
        _ => None,
    };
    let mut lr = match cfg.lr_schedule {
        LrSchedule::ExpDecay { .. } => lr_exp_decay(0),
        _ => cfg.base_lr,
    };

    let score = |m: &Model<F>, data: &TrainData<'_>| -> Result<Metrics> { Ok(metrics(&data.confusion(m, embeddings)?)) };

    let mut best = model.clone();
    let mut best_epoch = None;
    let mut best_score = f64::NEG_INFINITY;
    let mut best_train_acc = score(&model, &train)?.accuracy;
    if cfg.epochs > 0 {
        best_score = match &eval {
            Some(e) => score(&model, e)?.accuracy,
            None => best_train_acc,
        };
    }

    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut global_batch: u64 = 0;
    for epoch in 1..=cfg.epochs {
        let epoch_lr = lr;
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        let mut batch_index = 0usize;
        train.for_each_chunk(|records| {
            let mut order: Vec<usize> = (0..records.len()).collect();
            order.shuffle(&mut rng);
            for idx in order.chunks(cfg.batch_size) {
                let batch: Vec<EncodedSentence> = idx.iter().map(|&i| records[i].clone()).collect();
                let step_lr = match cfg.lr_schedule {
                    LrSchedule::ExpDecay { unit: DecayUnit::Batch } => lr_exp_decay(global_batch),
                    _ => lr,
                };
                model.zero_grad();
                let loss = model
                    .loss_and_backward(&batch, embeddings, Mode::Train, &mut rng)
                    .map_err(|e| match e {
                        Error::NonFinite { .. } => Error::NonFiniteLoss {
                            epoch,
                            batch: batch_index,
                        },
                        e => e,
                    })?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: batch_index,
                    });
                }
                optimizer.step(&mut model.parameters_mut(), step_lr)?;
                loss_sum += loss * batch.len() as f64;
                seen += batch.len();
                batch_index += 1;
                global_batch += 1;
            }
            Ok(())
        })?;

        let train_metrics = score(&model, &train)?;
        let eval_metrics = eval.as_ref().map(|e| score(&model, e)).transpose()?;
        let selection = eval_metrics.as_ref().map_or(train_metrics.accuracy, |m| m.accuracy);
        if selection > best_score {
            best_score = selection;
            best_epoch = Some(epoch);
            best_train_acc = train_metrics.accuracy;
            best = model.clone();
        }

        epochs.push(EpochReport {
            epoch,
            train_loss: loss_sum / seen.max(1) as f64,
            train_accuracy: train_metrics.accuracy,
            eval_accuracy: eval_metrics.as_ref().map(|m| m.accuracy),
            macro_f1: eval_metrics.as_ref().map(|m| m.macro_f1),
            weighted_f1: eval_metrics.as_ref().map(|m| m.weighted_f1),
            lr: match cfg.lr_schedule {
                LrSchedule::ExpDecay { unit: DecayUnit::Batch } => lr_exp_decay(global_batch.saturating_sub(1)),
                _ => epoch_lr,
            },
        });

        lr = match (&cfg.lr_schedule, plateau.as_mut()) {
            (LrSchedule::ExpDecay { .. }, _) => lr_exp_decay(epoch as u64),
            (_, Some(p)) => p.observe(selection, lr),
            _ => lr,
        };

        if cfg
            .target_train_accuracy
            .is_some_and(|t| train_metrics.accuracy >= t)
        {
            break;
        }
    }

    let checkpoint = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            Some(dir.join(CHECKPOINT_FILE))
        }
        None => None,
    };
    let checkpoint_sha256 = checkpoint.as_deref().map(|p| best.save(p)).transpose()?;

    let report = TrainReport {
        summary: TrainSummary {
            preset: spec.preset,
            epochs_completed: epochs.len(),
            best_epoch,
            train_accuracy: best_train_acc,
            checkpoint_sha256,
        },
        epochs,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome {
        report,
        model: best,
        checkpoint,
    })
}
