use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::{EmbeddingTable, EncodedSentence};
use crate::error::{Error, Result};
use crate::models::spec::{ModelSpec, Preset};
use crate::nn::checkpoint::{self, Checkpoint};
use crate::nn::init::glorot_uniform;
use crate::nn::{
    dropout, grad_check, softmax, softmax_cross_entropy_backward, Activation, Dense, DropoutMask, GradCheck, LstmCache,
    LstmCell, Mode, Parameter, Real, Tensor,
};

/// Learned character features: a trained projection of one-hot character ids
/// (stored as a row table) followed by an LSTM over the characters of each token.
#[derive(Debug, Clone)]
struct CharEncoder<F> {
    embedding: Parameter<F>,
    lstm: LstmCell<F>,
}

#[derive(Debug, Clone)]
enum Body<F> {
    /// Flattened window through a dense chain; no hidden layers is plain softmax regression.
    FeedForward {
        hidden: Vec<Dense<F>>,
        activation: Activation,
        dropout: f64,
        output: Dense<F>,
    },
    Recurrent {
        chars: Option<CharEncoder<F>>,
        lstm: LstmCell<F>,
        output: Dense<F>,
    },
}

#[derive(Debug, Clone)]
pub struct Model<F> {
    spec: ModelSpec,
    body: Body<F>,
}

struct CharCache<F> {
    /// `(row, slot)` for every token that had at least one character.
    positions: Vec<(usize, usize)>,
    ids: Vec<Vec<u32>>,
    width: usize,
    lstm: LstmCache<F>,
}

enum Cache<F> {
    FeedForward {
        layer_inputs: Vec<Tensor<F>>,
        pre_activations: Vec<Tensor<F>>,
        masks: Vec<Option<DropoutMask<F>>>,
    },
    Recurrent {
        chars: Option<CharCache<F>>,
        lstm: LstmCache<F>,
        hidden: Tensor<F>,
    },
}

/// Output of [`Model::forward`]: class probabilities plus what backward needs.
pub struct ForwardPass<F> {
    pub logits: Tensor<F>,
    pub probs: Tensor<F>,
    cache: Cache<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub probs: Vec<f64>,
}

/// Argmax with ties resolved toward the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Assembles the parameters for `spec`, drawing initial values from `seed`.
pub fn build_model<F: Real>(spec: &ModelSpec, seed: u64) -> Result<Model<F>> {
    Model::new(spec.clone(), seed)
}

impl<F: Real> Model<F> {
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let body = match spec.preset.activation() {
            Some(activation) => {
                let widths = spec.dense_widths();
                let n = widths.len() - 1;
                let hidden = (0..n - 1)
                    .map(|i| Dense::new(&format!("hidden{i}"), widths[i], widths[i + 1], &mut rng))
                    .collect();
                Body::FeedForward {
                    hidden,
                    activation,
                    dropout: spec.dropout_rate,
                    output: Dense::new("output", widths[n - 1], widths[n], &mut rng),
                }
            }
            None if spec.preset == Preset::W2vSoftmax => Body::FeedForward {
                hidden: Vec::new(),
                activation: Activation::Relu,
                dropout: 0.0,
                output: Dense::new("output", spec.max_len * spec.embed_dim, spec.num_classes, &mut rng),
            },
            None => {
                let chars = spec.preset.uses_chars().then(|| {
                    let rows = spec.char_vocab_size + 1;
                    CharEncoder {
                        embedding: Parameter::new(
                            "char_embedding",
                            glorot_uniform(&[rows, spec.char_embed_dim], rows, spec.char_embed_dim, &mut rng),
                        ),
                        lstm: LstmCell::new("char_lstm", spec.char_embed_dim, spec.char_lstm_size, &mut rng),
                    }
                });
                let lstm = LstmCell::new("word_lstm", spec.word_lstm_input(), spec.word_lstm_size, &mut rng);
                let output = Dense::new("output", spec.word_lstm_size, spec.num_classes, &mut rng);
                Body::Recurrent { chars, lstm, output }
            }
        };
        Ok(Model { spec, body })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn parameters(&self) -> Vec<&Parameter<F>> {
        match &self.body {
            Body::FeedForward { hidden, output, .. } => hidden
                .iter()
                .flat_map(|d| d.parameters())
                .chain(output.parameters())
                .collect(),
            Body::Recurrent { chars, lstm, output } => {
                let mut ps = Vec::new();
                if let Some(c) = chars {
                    ps.push(&c.embedding);
                    ps.extend(c.lstm.parameters());
                }
                ps.extend(lstm.parameters());
                ps.extend(output.parameters());
                ps
            }
        }
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<F>> {
        match &mut self.body {
            Body::FeedForward { hidden, output, .. } => hidden
                .iter_mut()
                .flat_map(|d| d.parameters_mut())
                .chain(output.parameters_mut())
                .collect(),
            Body::Recurrent { chars, lstm, output } => {
                let mut ps = Vec::new();
                if let Some(c) = chars {
                    ps.push(&mut c.embedding);
                    ps.extend(c.lstm.parameters_mut());
                }
                ps.extend(lstm.parameters_mut());
                ps.extend(output.parameters_mut());
                ps
            }
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.value.len()).sum()
    }

    /// `(name, shape)` for every parameter, in checkpoint order.
    pub fn layer_shapes(&self) -> Vec<(String, Vec<usize>)> {
        self.parameters()
            .iter()
            .map(|p| (p.name.clone(), p.shape().to_vec()))
            .collect()
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    /// All parameter values concatenated in checkpoint order.
    pub fn flat_values(&self) -> Vec<f64> {
        self.parameters().iter().flat_map(|p| p.value.to_f64_vec()).collect()
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        self.parameters().iter().flat_map(|p| p.grad.to_f64_vec()).collect()
    }

    pub fn set_flat_values(&mut self, values: &[f64]) {
        let mut it = values.iter();
        for p in self.parameters_mut() {
            for v in p.value.as_mut_slice() {
                *v = F::from_f64_lossy(*it.next().expect("enough values"));
            }
        }
        assert!(it.next().is_none(), "too many values");
    }

    /// Replaces every parameter (biases included) with a uniform draw from
    /// `[-scale, scale]`. Moves a freshly built model away from the all-zero
    /// biases where ReLU units sit exactly on their kink.
    pub fn randomize(&mut self, scale: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in self.parameters_mut() {
            for v in p.value.as_mut_slice() {
                *v = F::from_f64_lossy(rng.random_range(-scale..scale));
            }
        }
    }

    fn check_batch(&self, batch: &[EncodedSentence], embeddings: &EmbeddingTable) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Data("empty batch".into()));
        }
        if embeddings.dim() != self.spec.embed_dim {
            return Err(Error::Shape {
                op: "embeddings",
                expected: vec![self.spec.embed_dim],
                found: vec![embeddings.dim()],
            });
        }
        for (row, s) in batch.iter().enumerate() {
            if s.token_ids.len() != self.spec.max_len || s.chars.len() != self.spec.max_len {
                return Err(Error::Shape {
                    op: "sentence",
                    expected: vec![self.spec.max_len],
                    found: vec![s.token_ids.len(), s.chars.len()],
                });
            }
            if s.true_length > self.spec.max_len {
                return Err(Error::InvalidLength {
                    row,
                    length: s.true_length,
                    max: self.spec.max_len,
                });
            }
        }
        Ok(())
    }

    fn word_inputs(&self, batch: &[EncodedSentence], embeddings: &EmbeddingTable) -> Vec<F> {
        let mut x = Vec::with_capacity(batch.len() * self.spec.max_len * self.spec.embed_dim);
        for s in batch {
            for &id in &s.token_ids {
                x.extend(embeddings.vector_by_id(id).iter().map(|&v| F::from_f64_lossy(v as f64)));
            }
        }
        x
    }

    /// Class probabilities for `batch`. Dropout is active only in [`Mode::Train`].
    pub fn forward<R: Rng + ?Sized>(
        &self,
        batch: &[EncodedSentence],
        embeddings: &EmbeddingTable,
        mode: Mode,
        rng: &mut R,
    ) -> Result<ForwardPass<F>> {
        self.check_batch(batch, embeddings)?;
        let b = batch.len();
        let (t_len, dim) = (self.spec.max_len, self.spec.embed_dim);
        let words = self.word_inputs(batch, embeddings);

        let (logits, cache) = match &self.body {
            Body::FeedForward {
                hidden,
                activation,
                dropout: rate,
                output,
            } => {
                let mut x = Tensor::from_vec(&[b, t_len * dim], words)?;
                let mut layer_inputs = Vec::with_capacity(hidden.len() + 1);
                let mut pre_activations = Vec::with_capacity(hidden.len());
                let mut masks = Vec::with_capacity(hidden.len());
                for layer in hidden {
                    let pre = layer.forward(&x)?;
                    let act = activation.forward(&pre)?;
                    let (h, mask) = dropout(&act, *rate, mode, rng)?;
                    layer_inputs.push(std::mem::replace(&mut x, h));
                    pre_activations.push(pre);
                    masks.push(mask);
                }
                let logits = output.forward(&x)?;
                layer_inputs.push(x);
                (
                    logits,
                    Cache::FeedForward {
                        layer_inputs,
                        pre_activations,
                        masks,
                    },
                )
            }
            Body::Recurrent { chars, lstm, output } => {
                let (seq, char_cache) = match chars {
                    None => (Tensor::from_vec(&[b, t_len, dim], words)?, None),
                    Some(enc) => {
                        let (features, cache) = self.char_features(enc, batch)?;
                        let hc = self.spec.char_lstm_size;
                        let width = dim + hc;
                        let mut seq = vec![F::zero(); b * t_len * width];
                        for i in 0..b * t_len {
                            seq[i * width..i * width + dim].copy_from_slice(&words[i * dim..(i + 1) * dim]);
                        }
                        if let Some(cache) = &cache {
                            for (n, &(row, slot)) in cache.positions.iter().enumerate() {
                                let dst = (row * t_len + slot) * width + dim;
                                seq[dst..dst + hc].copy_from_slice(features.row(n));
                            }
                        }
                        (Tensor::from_vec(&[b, t_len, width], seq)?, cache)
                    }
                };
                let lengths: Vec<usize> = batch.iter().map(|s| s.true_length.max(1)).collect();
                let (hidden, lstm_cache) = lstm.forward(&seq, &lengths)?;
                let logits = output.forward(&hidden)?;
                (
                    logits,
                    Cache::Recurrent {
                        chars: char_cache,
                        lstm: lstm_cache,
                        hidden,
                    },
                )
            }
        };
        let probs = softmax(&logits)?;
        Ok(ForwardPass { logits, probs, cache })
    }

    fn char_features(
        &self,
        enc: &CharEncoder<F>,
        batch: &[EncodedSentence],
    ) -> Result<(Tensor<F>, Option<CharCache<F>>)> {
        let cap = self.spec.max_word_chars;
        let mut positions = Vec::new();
        let mut ids = Vec::new();
        for (row, s) in batch.iter().enumerate() {
            for (slot, chars) in s.chars.iter().enumerate().take(s.true_length) {
                if !chars.is_empty() {
                    positions.push((row, slot));
                    ids.push(chars[..chars.len().min(cap)].to_vec());
                }
            }
        }
        if positions.is_empty() {
            return Ok((Tensor::zeros(&[0, self.spec.char_lstm_size]), None));
        }
        let width = ids.iter().map(Vec::len).max().unwrap_or(1);
        let e = self.spec.char_embed_dim;
        let table = enc.embedding.value.as_slice();
        let mut seq = vec![F::zero(); ids.len() * width * e];
        for (n, word) in ids.iter().enumerate() {
            for (w, &id) in word.iter().enumerate() {
                let id = id as usize;
                if id > self.spec.char_vocab_size {
                    return Err(Error::Data(format!(
                        "character id {id} outside vocabulary of {}",
                        self.spec.char_vocab_size
                    )));
                }
                let dst = (n * width + w) * e;
                seq[dst..dst + e].copy_from_slice(&table[id * e..(id + 1) * e]);
            }
        }
        let lengths: Vec<usize> = ids.iter().map(Vec::len).collect();
        let seq = Tensor::from_vec(&[ids.len(), width, e], seq)?;
        let (features, lstm) = enc.lstm.forward(&seq, &lengths)?;
        Ok((
            features,
            Some(CharCache {
                positions,
                ids,
                width,
                lstm,
            }),
        ))
    }

    /// Accumulates parameter gradients given `dL/dlogits`.
    pub fn backward(&mut self, pass: &ForwardPass<F>, d_logits: &Tensor<F>) -> Result<()> {
        let (t_len, dim) = (self.spec.max_len, self.spec.embed_dim);
        let (hc, e) = (self.spec.char_lstm_size, self.spec.char_embed_dim);
        match (&mut self.body, &pass.cache) {
            (
                Body::FeedForward {
                    hidden,
                    activation,
                    output,
                    ..
                },
                Cache::FeedForward {
                    layer_inputs,
                    pre_activations,
                    masks,
                },
            ) => {
                let mut d = output.backward(layer_inputs.last().expect("output input"), d_logits)?;
                for i in (0..hidden.len()).rev() {
                    if let Some(mask) = &masks[i] {
                        d = mask.backward(&d)?;
                    }
                    d = activation.backward(&pre_activations[i], &d)?;
                    d = hidden[i].backward(&layer_inputs[i], &d)?;
                }
            }
            (
                Body::Recurrent { chars, lstm, output },
                Cache::Recurrent {
                    chars: char_cache,
                    lstm: lstm_cache,
                    hidden,
                },
            ) => {
                let d_hidden = output.backward(hidden, d_logits)?;
                let d_seq = lstm.backward(lstm_cache, &d_hidden)?;
                if let (Some(enc), Some(cc)) = (chars, char_cache) {
                    let width = dim + hc;
                    let ds = d_seq.as_slice();
                    let mut d_feat = Vec::with_capacity(cc.positions.len() * hc);
                    for &(row, slot) in &cc.positions {
                        let src = (row * t_len + slot) * width + dim;
                        d_feat.extend_from_slice(&ds[src..src + hc]);
                    }
                    let d_feat = Tensor::from_vec(&[cc.positions.len(), hc], d_feat)?;
                    let d_chars = enc.lstm.backward(&cc.lstm, &d_feat)?;
                    let dc = d_chars.as_slice();
                    let grad = enc.embedding.grad.as_mut_slice();
                    for (n, word) in cc.ids.iter().enumerate() {
                        for (w, &id) in word.iter().enumerate() {
                            let src = (n * cc.width + w) * e;
                            let id = id as usize;
                            for k in 0..e {
                                grad[id * e + k] = grad[id * e + k] + dc[src + k];
                            }
                        }
                    }
                }
            }
            _ => unreachable!("cache was produced by this model"),
        }
        Ok(())
    }

    /// Forward, mean cross-entropy against `labels`, and backward. Returns the loss.
    pub fn loss_and_backward<R: Rng + ?Sized>(
        &mut self,
        batch: &[EncodedSentence],
        embeddings: &EmbeddingTable,
        mode: Mode,
        rng: &mut R,
    ) -> Result<f64> {
        let pass = self.forward(batch, embeddings, mode, rng)?;
        let targets = self.targets(batch)?;
        let loss = crate::nn::cross_entropy(&pass.probs, &targets)?;
        let d_logits = softmax_cross_entropy_backward(&pass.probs, &targets)?;
        self.backward(&pass, &d_logits)?;
        Ok(loss.to_f64_lossless())
    }

    pub fn targets(&self, batch: &[EncodedSentence]) -> Result<Tensor<F>> {
        let labels: Vec<usize> = batch.iter().map(|s| s.label).collect();
        crate::nn::one_hot(&labels, self.spec.num_classes)
    }

    /// Eval-mode probabilities and argmax labels (ties go to the lower index).
    pub fn predict(&self, batch: &[EncodedSentence], embeddings: &EmbeddingTable) -> Result<Vec<Prediction>> {
        self.predict_shifted(batch, embeddings, 0.0)
    }

    /// Like [`Model::predict`] but adds `shift` to every logit before the softmax.
    #[doc(hidden)]
    pub fn predict_shifted(
        &self,
        batch: &[EncodedSentence],
        embeddings: &EmbeddingTable,
        shift: f64,
    ) -> Result<Vec<Prediction>> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pass = self.forward(batch, embeddings, Mode::Eval, &mut rng)?;
        let probs = if shift == 0.0 {
            pass.probs
        } else {
            let s = F::from_f64_lossy(shift);
            let shifted: Vec<F> = pass.logits.as_slice().iter().map(|&v| v + s).collect();
            softmax(&Tensor::from_vec(pass.logits.shape(), shifted)?)?
        };
        let c = self.spec.num_classes;
        Ok(probs
            .to_f64_vec()
            .chunks(c)
            .map(|row| Prediction {
                label: argmax(row),
                probs: row.to_vec(),
            })
            .collect())
    }

    /// Writes the parameters with the model spec as metadata; returns the content hash.
    pub fn save(&self, path: &Path) -> Result<String> {
        let meta = serde_json::to_string(&self.spec).expect("spec serializes");
        checkpoint::save(path, &meta, &self.parameters())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = serde_json::to_string(&self.spec).expect("spec serializes");
        checkpoint::encode(&meta, &self.parameters())
    }

    /// Rebuilds the model described by the checkpoint metadata and restores its values.
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(&ck.metadata)
            .map_err(|e| Error::Config(format!("checkpoint model spec: {e}")))?;
        let mut model = Model::new(spec, 0)?;
        ck.restore_into(&mut model.parameters_mut())?;
        Ok(model)
    }

    /// Restores `ck` into this already-built model, failing with a shape diff on mismatch.
    pub fn restore(&mut self, ck: &Checkpoint) -> Result<()> {
        ck.restore_into(&mut self.parameters_mut())
    }
}

impl Model<f64> {
    /// Central-difference check of every parameter gradient of the mean
    /// cross-entropy on `batch`. In [`Mode::Train`] the dropout masks are
    /// redrawn from `seed` for every evaluation, so the objective stays fixed.
    pub fn grad_check(
        &mut self,
        batch: &[EncodedSentence],
        embeddings: &EmbeddingTable,
        mode: Mode,
        seed: u64,
        h: f64,
    ) -> Result<GradCheck> {
        let point = self.flat_values();
        self.zero_grad();
        self.loss_and_backward(batch, embeddings, mode, &mut ChaCha8Rng::seed_from_u64(seed))?;
        let analytic = self.flat_grads();
        let targets = self.targets(batch)?;
        let mut probe = self.clone();
        let result = grad_check(&point, &analytic, h, |x| {
            probe.set_flat_values(x);
            let pass = probe
                .forward(batch, embeddings, mode, &mut ChaCha8Rng::seed_from_u64(seed))
                .expect("forward on a validated batch");
            crate::nn::cross_entropy(&pass.probs, &targets).unwrap_or(f64::NAN)
        });
        self.set_flat_values(&point);
        result
    }
}
