use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::models::Preset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_f1: Option<f64>,
    /// Learning rate used during this epoch.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub preset: Preset,
    pub epochs_completed: usize,
    /// Epoch whose weights were kept; `None` means the initial weights.
    pub best_epoch: Option<usize>,
    /// Train accuracy of the kept weights.
    pub train_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint_sha256: Option<String>,
}

/// Per-epoch history plus a summary. Wall time is kept out of the serialized
/// forms so identical runs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochReport>,
    pub summary: TrainSummary,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl TrainReport {
    /// One JSON object per epoch, then `{"summary": …}`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            out.push_str(&serde_json::to_string(e).expect("epoch serializes"));
            out.push('\n');
        }
        let summary = serde_json::json!({ "summary": self.summary });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |v| format!("{:.2}", v * 100.0));
        let mut out = format!("model {} ({})\n", self.summary.preset, self.summary.preset.description());
        out.push_str("epoch  train_loss  train_acc  eval_acc  macro_f1  weighted_f1  lr\n");
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{:>5}  {:>10.6}  {:>9}  {:>8}  {:>8}  {:>11}  {:.6}",
                e.epoch,
                e.train_loss,
                pct(Some(e.train_accuracy)),
                pct(e.eval_accuracy),
                pct(e.macro_f1),
                pct(e.weighted_f1),
                e.lr
            );
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "kept weights from {} (train accuracy {:.2}%)",
            s.best_epoch.map_or_else(|| "initialization".to_owned(), |e| format!("epoch {e}")),
            s.train_accuracy * 100.0
        );
        if let Some(h) = &s.checkpoint_sha256 {
            let _ = writeln!(out, "checkpoint sha256 {h}");
        }
        let reported = s.preset.reported();
        let _ = write!(out, "published figures for this configuration: F1 {:.1}", reported.f1);
        if let Some(a) = reported.narrative_accuracy {
            let _ = write!(out, ", accuracy {a:.2}");
        }
        out.push_str(" (full review corpus; not comparable to small local runs)\n");
        out
    }
}
