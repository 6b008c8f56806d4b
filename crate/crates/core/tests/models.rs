use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sarv_core::embed::EncodedSentence;
use sarv_core::models::{argmax, build_model, Model, ModelSpec, Preset};
use sarv_core::nn::checkpoint;
use sarv_core::nn::Mode;
use sarv_core::synthetic::{micro_fixture, separable_corpus};
use sarv_core::Error;

fn weight_chain(model: &Model<f32>) -> Vec<usize> {
    let shapes: Vec<Vec<usize>> = model
        .layer_shapes()
        .into_iter()
        .filter(|(_, s)| s.len() == 2)
        .map(|(_, s)| s)
        .collect();
    let mut chain = vec![shapes[0][0]];
    chain.extend(shapes.iter().map(|s| s[1]));
    chain
}

#[test]
fn softmax_parameter_count_by_shape_arithmetic() {
    let m: Model<f32> = build_model(&ModelSpec::new(Preset::W2vSoftmax, 2), 0).unwrap();
    assert_eq!(m.parameter_count(), 15 * 50 * 2 + 2);
    let m3: Model<f32> = build_model(&ModelSpec::new(Preset::W2vSoftmax, 3), 0).unwrap();
    assert_eq!(m3.parameter_count(), 750 * 3 + 3);
}

#[test]
fn mlp_layer_widths() {
    for p in [Preset::W2vMlpSigmoid, Preset::W2vMlpReluLrdecay, Preset::W2vMlpReluLrdecayDropout] {
        let m: Model<f32> = build_model(&ModelSpec::new(p, 2), 0).unwrap();
        assert_eq!(weight_chain(&m), [750, 200, 100, 60, 30, 2], "{p}");
        let expected: usize = [750, 200, 100, 60, 30, 2].windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        assert_eq!(m.parameter_count(), expected);
    }
}

#[test]
fn recurrent_input_widths() {
    let word: Model<f32> = build_model(&ModelSpec::new(Preset::W2vLstm, 2), 0).unwrap();
    let char_: Model<f32> = build_model(&ModelSpec::new(Preset::CharW2vLstm, 3), 0).unwrap();
    let lstm_rows = |m: &Model<f32>| {
        m.layer_shapes()
            .into_iter()
            .find(|(n, _)| n.starts_with("word_lstm.w_input"))
            .map(|(_, s)| s)
            .unwrap()
    };
    // Gate matrices are [input + hidden, hidden].
    assert_eq!(lstm_rows(&word), [50 + 100, 100]);
    assert_eq!(lstm_rows(&char_), [100 + 100, 100]);
    assert_eq!(ModelSpec::new(Preset::CharW2vLstm, 3).word_lstm_input(), 100);
    let out = char_.layer_shapes().into_iter().find(|(n, _)| n == "output.weight").unwrap().1;
    assert_eq!(out, [100, 3]);
}

#[test]
fn invalid_class_count_is_configuration_error() {
    let err = build_model::<f32>(&ModelSpec::new(Preset::W2vLstm, 4), 0).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(serde_json::from_str::<Preset>("\"W2V_TRANSFORMER\"").is_err());
}

#[test]
fn zero_softmax_model_is_uniform() {
    let c = separable_corpus(3, 5, 50, 0);
    let (_, recs) = c.encode(20);
    let mut m: Model<f64> = build_model(&ModelSpec::new(Preset::W2vSoftmax, 3), 0).unwrap();
    let n = m.parameter_count();
    m.set_flat_values(&vec![0.0; n]);
    for p in m.predict(&recs, &c.embeddings).unwrap() {
        assert!(p.probs.iter().all(|&q| (q - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(p.label, 0);
    }
}

#[test]
fn every_preset_shape_and_normalization() {
    for classes in [2, 3] {
        let c = separable_corpus(classes, 4, 50, 9);
        let (vocab, recs) = c.encode(20);
        for p in Preset::ALL {
            let mut spec = ModelSpec::new(p, classes);
            spec.char_vocab_size = vocab.len();
            let m: Model<f32> = build_model(&spec, 3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for mode in [Mode::Train, Mode::Eval] {
                let pass = m.forward(&recs, &c.embeddings, mode, &mut rng).unwrap();
                assert_eq!(pass.probs.shape(), &[4, classes], "{p}");
                for r in 0..4 {
                    let s: f32 = pass.probs.row(r).iter().sum();
                    assert!((s - 1.0).abs() < 1e-5, "{p} row {r}: {s}");
                }
            }
            let a = m.predict(&recs, &c.embeddings).unwrap();
            let b = m.predict(&recs, &c.embeddings).unwrap();
            assert_eq!(a, b, "{p} eval is not deterministic");
        }
    }
}

#[test]
fn argmax_tie_breaks_low() {
    assert_eq!(argmax(&[0.1, 0.9]), 1);
    assert_eq!(argmax(&[0.5, 0.5]), 0);
    assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
}

#[test]
fn predicted_labels_match_independent_argmax() {
    let c = separable_corpus(3, 3, 50, 4);
    let (_, recs) = c.encode(20);
    let m: Model<f64> = build_model(&ModelSpec::new(Preset::W2vMlpSigmoid, 3), 8).unwrap();
    for p in m.predict(&recs, &c.embeddings).unwrap() {
        let max = p.probs.iter().cloned().fold(f64::MIN, f64::max);
        let first = p.probs.iter().position(|&v| v == max).unwrap();
        assert_eq!(p.label, first);
        assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn predict_is_shift_invariant(seed in any::<u64>(), shift in -50.0f64..50.0, preset in prop::sample::select(Preset::ALL.to_vec())) {
        let (spec, emb, batch) = micro_fixture(preset, 3, 3, seed);
        let m: Model<f64> = Model::new(spec, seed).unwrap();
        let base = m.predict(&batch, &emb).unwrap();
        let moved = m.predict_shifted(&batch, &emb, shift).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            prop_assert_eq!(a.label, b.label);
            for (x, y) in a.probs.iter().zip(&b.probs) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn padding_beyond_length_is_ignored(seed in any::<u64>(), preset in prop::sample::select(vec![Preset::W2vLstm, Preset::CharW2vLstm, Preset::CharW2vLstmRus])) {
        let (spec, emb, batch) = micro_fixture(preset, 2, 4, seed);
        let m: Model<f64> = Model::new(spec.clone(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mutated: Vec<EncodedSentence> = batch
            .iter()
            .map(|r| {
                let mut r = r.clone();
                for i in r.true_length..r.token_ids.len() {
                    r.token_ids[i] = rng.random_range(0..=emb.len() as u32);
                    r.chars[i] = vec![rng.random_range(1..=spec.char_vocab_size as u32); 2];
                }
                r
            })
            .collect();
        let a = m.predict(&batch, &emb).unwrap();
        let b = m.predict(&mutated, &emb).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn gradient_check_on_micro_batch_seed_zero() {
    for p in Preset::ALL {
        let (spec, emb, batch) = micro_fixture(p, 2, 2, 0);
        let mut m: Model<f64> = Model::new(spec, 0).unwrap();
        m.randomize(1.0, 0);
        let r = m.grad_check(&batch, &emb, Mode::Train, 0, 1e-6).unwrap();
        assert!(r.max_absolute_error < 1e-9, "{p}: {r:?}");
    }
}

#[test]
fn checkpoint_round_trip_and_mismatch_diff() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    let spec = ModelSpec::new(Preset::W2vLstm, 2);
    let m: Model<f32> = build_model(&spec, 5).unwrap();
    let hash = m.save(&path).unwrap();
    assert_eq!(hash, checkpoint::sha256_hex(&std::fs::read(&path).unwrap()));

    let ck = checkpoint::load(&path).unwrap();
    let back = Model::<f32>::from_checkpoint(&ck).unwrap();
    assert_eq!(back.flat_values(), m.flat_values());
    assert_eq!(back.to_bytes(), m.to_bytes());

    let mut other: Model<f32> = build_model(&ModelSpec::new(Preset::W2vLstm, 3), 0).unwrap();
    let err = other.restore(&ck).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::CheckpointMismatch { .. }));
    assert!(msg.contains("output.weight [100, 3]") && msg.contains("output.weight [100, 2]"), "{msg}");

    let mut double: Model<f64> = build_model(&spec, 0).unwrap();
    assert!(double.restore(&ck).unwrap_err().to_string().contains("precision"));
}

#[test]
fn corrupted_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    let m: Model<f32> = build_model(&ModelSpec::new(Preset::W2vSoftmax, 2), 5).unwrap();
    m.save(&path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    std::fs::write(&path, bytes).unwrap();
    assert!(checkpoint::load(&path).is_err());
}
