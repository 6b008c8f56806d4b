use std::collections::HashSet;
use std::fs;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sarv_core::embed::{EmbeddingTable, EncodedSentence};
use sarv_core::models::{ModelSpec, Preset};
use sarv_core::nn::{checkpoint, Parameter, Tensor};
use sarv_core::synthetic::separable_corpus;
use sarv_core::train::{
    adam_step, class_histogram, lr_exp_decay, lr_plateau, random_undersample, sgd_step, split_train_test,
    train_loop, write_shards, AdamState, Plateau, ShardManifest, ShardMeta, ShardTracker, TrainConfig, TrainData,
    ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON, MANIFEST_FILE,
};
use sarv_core::Error;

fn scalar(p: f64) -> Parameter<f64> {
    Parameter::new("p", Tensor::from_vec(&[1], vec![p]).unwrap())
}

fn value(p: &Parameter<f64>) -> f64 {
    p.value.as_slice()[0]
}

fn set_grad(p: &mut Parameter<f64>, g: f64) {
    p.grad.as_mut_slice()[0] = g;
}

#[test]
fn sgd_hand_update() {
    let mut p = scalar(1.0);
    set_grad(&mut p, 2.0);
    sgd_step(&mut [&mut p], 0.003).unwrap();
    assert_eq!(value(&p), 1.0 - 0.003 * 2.0);
    assert!((value(&p) - 0.994).abs() < 1e-15);
}

#[test]
fn sgd_on_quadratic_bowl_follows_closed_form() {
    let lr = 0.003;
    let mut p = scalar(1.0);
    let mut prev = 1.0f64;
    for k in 1..=100 {
        let g = 2.0 * value(&p);
        set_grad(&mut p, g);
        sgd_step(&mut [&mut p], lr).unwrap();
        let now = value(&p);
        assert!(now.abs() < prev.abs());
        assert!((now - (1.0 - 2.0 * lr).powi(k)).abs() < 1e-13);
        prev = now;
    }
}

#[test]
fn zero_gradient_changes_nothing() {
    let mut p = scalar(0.37);
    sgd_step(&mut [&mut p], 0.5).unwrap();
    let mut state = AdamState::new();
    for _ in 0..10 {
        adam_step(&mut [&mut p], 0.5, &mut state).unwrap();
    }
    assert_eq!(value(&p), 0.37);
}

#[test]
fn nan_gradient_names_parameter() {
    let mut p = scalar(1.0);
    set_grad(&mut p, f64::NAN);
    let err = sgd_step(&mut [&mut p], 0.1).unwrap_err();
    assert!(matches!(&err, Error::NonFiniteGradient { param } if param == "p"));
    let err = adam_step(&mut [&mut p], 0.1, &mut AdamState::new()).unwrap_err();
    assert!(err.to_string().contains("`p`"));
}

#[test]
fn adam_first_step_moves_by_lr() {
    for g in [1e-3, 0.5, -7.0] {
        let mut p = scalar(0.0);
        set_grad(&mut p, g);
        adam_step(&mut [&mut p], 0.001, &mut AdamState::new()).unwrap();
        assert!((value(&p).abs() - 0.001).abs() < 1e-8, "g={g}: {}", value(&p));
    }
}

/// Textbook scalar Adam, written out independently.
fn reference_adam(p0: f64, lr: f64, steps: usize) -> Vec<f64> {
    let (mut p, mut m, mut v) = (p0, 0.0, 0.0);
    let mut path = Vec::new();
    for t in 1..=steps {
        let g = 2.0 * p;
        m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g;
        v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = m / (1.0 - ADAM_BETA1.powi(t as i32));
        let v_hat = v / (1.0 - ADAM_BETA2.powi(t as i32));
        p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        path.push(p);
    }
    path
}

#[test]
fn adam_on_quadratic_bowl_matches_reference_and_converges() {
    let (p0, lr, steps) = (0.1, 0.001, 500);
    let reference = reference_adam(p0, lr, steps);
    let mut p = scalar(p0);
    let mut state = AdamState::new();
    for want in &reference {
        let g = 2.0 * value(&p);
        set_grad(&mut p, g);
        adam_step(&mut [&mut p], lr, &mut state).unwrap();
        assert!((value(&p) - want).abs() < 1e-12);
    }
    assert!(value(&p).abs() < 1e-3, "{}", value(&p));
}

#[test]
fn exponential_schedule() {
    assert_eq!(lr_exp_decay(0), 0.0031);
    assert!((lr_exp_decay(2000) - (0.0001 + 0.003 * (-1.0f64).exp())).abs() < 1e-12);
    let mut prev = lr_exp_decay(0);
    for step in 1..=100_000u64 {
        let now = lr_exp_decay(step);
        // Strict in exact arithmetic; in f64 neighbouring tail values can round equal.
        assert!(now <= prev, "step {step}");
        assert!((0.0001..=0.0031).contains(&now));
        prev = now;
    }
    assert!(lr_exp_decay(20_000) < lr_exp_decay(19_999));
    assert!((lr_exp_decay(100_000) - 0.0001).abs() < 1e-9);
}

#[test]
fn plateau_examples() {
    assert_eq!(lr_plateau(&[0.5, 0.6, 0.7, 0.8], 0.001, 0.9, 2), 0.001);
    // First epoch sets the best; then `patience` flat epochs trigger one decay.
    let flat = lr_plateau(&[0.5, 0.5, 0.5, 0.5], 0.001, 0.9, 3);
    assert!((flat - 0.0009).abs() < 1e-15);
    let twice = lr_plateau(&[0.5; 7], 0.001, 0.9, 3);
    assert!((twice - 0.001 * 0.81).abs() < 1e-15);
    // Improvement resets the counter.
    assert_eq!(lr_plateau(&[0.5, 0.5, 0.6, 0.6, 0.7], 0.001, 0.9, 2), 0.001);

    let mut late = Plateau::starting_at(0.9, 27);
    let mut lr = 0.001;
    for _ in 0..26 {
        lr = late.observe(0.5, lr);
    }
    assert_eq!(lr, 0.001);
    lr = late.observe(0.5, lr);
    assert!((lr - 0.0009).abs() < 1e-15);
}

#[test]
fn split_examples() {
    let items: Vec<usize> = (0..10).collect();
    let (a, b) = split_train_test(&items, 0.8, 3).unwrap();
    assert_eq!((a.len(), b.len()), (8, 2));
    assert_eq!(split_train_test(&items, 0.8, 3).unwrap(), (a, b));
    assert!(split_train_test::<usize>(&[], 0.8, 0).is_err());
    assert!(split_train_test(&items, 1.0, 0).is_err());
}

#[test]
fn split_large_corpus_is_disjoint_cover() {
    let items: Vec<u32> = (0..100_003).collect();
    let (train, test) = split_train_test(&items, 0.8, 42).unwrap();
    assert_eq!(train.len(), 80_002);
    assert_eq!(test.len(), 20_001);
    let a: HashSet<u32> = train.iter().copied().collect();
    let b: HashSet<u32> = test.iter().copied().collect();
    assert!(a.is_disjoint(&b));
    assert_eq!(a.len() + b.len(), items.len());
}

fn labelled(counts: &[usize]) -> Vec<(usize, usize)> {
    let mut id = 0;
    let mut out = Vec::new();
    for (class, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            out.push((id, class));
            id += 1;
        }
    }
    out
}

#[test]
fn undersample_examples() {
    let data = labelled(&[100, 40, 60]);
    let out = random_undersample(&data, |r| r.1, 3, 1).unwrap();
    assert_eq!(class_histogram(out.iter().map(|r| r.1), 3), [40, 40, 40]);

    let mobile = labelled(&[546, 107, 92]);
    let out = random_undersample(&mobile, |r| r.1, 3, 1).unwrap();
    assert_eq!(class_histogram(out.iter().map(|r| r.1), 3), [92, 92, 92]);
    let ids: HashSet<_> = mobile.iter().collect();
    assert!(out.iter().all(|r| ids.contains(r)));
    assert_eq!(out.iter().map(|r| r.0).collect::<HashSet<_>>().len(), out.len());

    let balanced = labelled(&[5, 5]);
    assert_eq!(random_undersample(&balanced, |r| r.1, 2, 0).unwrap().len(), 10);
    assert!(random_undersample(&labelled(&[5, 0, 3]), |r| r.1, 3, 0).is_err());
}

proptest! {
    #[test]
    fn undersample_is_uniform_subset(counts in prop::collection::vec(1usize..200, 2..4), seed in any::<u64>()) {
        let data = labelled(&counts);
        let out = random_undersample(&data, |r| r.1, counts.len(), seed).unwrap();
        let min = *counts.iter().min().unwrap();
        prop_assert_eq!(class_histogram(out.iter().map(|r| r.1), counts.len()), vec![min; counts.len()]);
        let ids: HashSet<_> = out.iter().map(|r| r.0).collect();
        prop_assert_eq!(ids.len(), out.len());
        prop_assert!(out.iter().all(|r| data[r.0] == *r));
        prop_assert_eq!(&out, &random_undersample(&data, |r| r.1, counts.len(), seed).unwrap());
    }
}

fn fuzz_records(n: usize, seed: u64) -> Vec<EncodedSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(0..=15);
            EncodedSentence {
                token_ids: (0..15).map(|i| if i < len { rng.random_range(0..5000) } else { 0 }).collect(),
                chars: (0..15)
                    .map(|i| if i < len { (0..rng.random_range(1..=20)).map(|_| rng.random_range(0..90)).collect() } else { vec![] })
                    .collect(),
                true_length: len,
                label: rng.random_range(0..3),
            }
        })
        .collect()
}

fn meta() -> ShardMeta {
    ShardMeta {
        num_classes: 3,
        ..ShardMeta::default()
    }
}

#[test]
fn shard_sizes_follow_shard_size() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<EncodedSentence> = (0..500_000)
        .map(|i| EncodedSentence {
            token_ids: vec![0; 15],
            chars: vec![vec![]; 15],
            true_length: 0,
            label: i % 2,
        })
        .collect();
    let m = write_shards(&records, 200_000, dir.path(), meta()).unwrap();
    assert_eq!(m.counts(), [200_000, 200_000, 100_000]);

    let one = tempfile::tempdir().unwrap();
    let m = write_shards(&records[..1], 200_000, one.path(), meta()).unwrap();
    assert_eq!(m.counts(), [1]);
}

#[test]
fn shards_round_trip_bit_exact_with_bounded_residency() {
    let dir = tempfile::tempdir().unwrap();
    let records = fuzz_records(10_000, 8);
    let written = write_shards(&records, 1_000, dir.path(), meta()).unwrap();
    assert_eq!(written.shards.len(), 10);

    let m = ShardManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.hash(), written.hash());
    let tracker = ShardTracker::default();
    let mut reloaded = Vec::new();
    for shard in m.stream_tracked(tracker.clone()) {
        let shard = shard.unwrap();
        // Simulate work so the prefetcher gets ahead.
        std::thread::sleep(std::time::Duration::from_millis(2));
        assert!(tracker.live() <= 2);
        reloaded.extend(shard.records.iter().cloned());
    }
    assert!(tracker.peak() <= 2, "peak {}", tracker.peak());
    assert_eq!(reloaded, records);

    let rewritten = tempfile::tempdir().unwrap();
    let again = write_shards(&reloaded, 1_000, rewritten.path(), meta()).unwrap();
    assert_eq!(again.shards, written.shards);
}

#[test]
fn corrupt_shard_names_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_shards(&fuzz_records(30, 1), 10, dir.path(), meta()).unwrap();
    let victim = m.shard_path(1);
    let mut bytes = fs::read(&victim).unwrap();
    bytes[5] = b'9';
    fs::write(&victim, bytes).unwrap();
    let err = m.load_all().unwrap_err();
    assert!(err.to_string().contains("shard-00001.jsonl"), "{err}");
    fs::remove_file(&victim).unwrap();
    assert!(m.load_all().is_err());
}

fn overfit_config(preset: Preset) -> TrainConfig {
    TrainConfig {
        epochs: 200,
        target_train_accuracy: Some(1.0),
        ..TrainConfig::for_preset(preset)
    }
}

fn spec_for(preset: Preset, classes: usize, char_vocab: usize) -> ModelSpec {
    ModelSpec {
        char_vocab_size: char_vocab,
        ..ModelSpec::new(preset, classes)
    }
}

#[test]
fn every_preset_overfits_small_separable_corpus() {
    for classes in [2, 3] {
        let corpus = separable_corpus(classes, 64, 50, 64);
        let (vocab, records) = corpus.encode(20);
        for preset in Preset::ALL {
            let spec = spec_for(preset, classes, vocab.len());
            let out = train_loop::<f32>(
                &spec,
                &overfit_config(preset),
                TrainData::Memory(&records),
                None,
                &corpus.embeddings,
                None,
            )
            .unwrap();
            assert_eq!(out.report.summary.train_accuracy, 1.0, "{preset} with {classes} classes");
            assert!(out.report.epochs.len() <= 200);
        }
    }
}

#[test]
fn smoothed_training_loss_does_not_increase() {
    let corpus = separable_corpus(2, 64, 50, 64);
    let (vocab, records) = corpus.encode(20);
    for preset in Preset::ALL {
        let cfg = TrainConfig {
            epochs: 60,
            ..TrainConfig::for_preset(preset)
        };
        let spec = spec_for(preset, 2, vocab.len());
        let out = train_loop::<f64>(&spec, &cfg, TrainData::Memory(&records), None, &corpus.embeddings, None).unwrap();
        let losses: Vec<f64> = out.report.epochs.iter().map(|e| e.train_loss).collect();
        let windows: Vec<f64> = losses.chunks(10).map(|w| w.iter().sum::<f64>() / w.len() as f64).collect();
        // Below 1e-4 nats the loss has converged and what remains is dropout
        // and rounding noise.
        for w in windows.windows(2) {
            assert!(w[1] <= w[0] || w[0].max(w[1]) < 1e-4, "{preset}: {windows:?}");
        }
    }
}

#[test]
fn zero_epochs_keeps_initial_weights() {
    let corpus = separable_corpus(2, 16, 50, 1);
    let (_, records) = corpus.encode(20);
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainConfig {
        epochs: 0,
        ..TrainConfig::for_preset(Preset::W2vSoftmax)
    };
    let spec = ModelSpec::new(Preset::W2vSoftmax, 2);
    let out = train_loop::<f32>(&spec, &cfg, TrainData::Memory(&records), None, &corpus.embeddings, Some(dir.path()))
        .unwrap();
    assert!(out.report.epochs.is_empty());
    assert_eq!(out.report.summary.best_epoch, None);
    let initial = sarv_core::models::Model::<f32>::new(spec, cfg.seed).unwrap();
    let ck = checkpoint::load(out.checkpoint.as_deref().unwrap()).unwrap();
    assert_eq!(sarv_core::models::Model::<f32>::from_checkpoint(&ck).unwrap().flat_values(), initial.flat_values());
}

#[test]
fn fixed_seed_training_is_reproducible() {
    let corpus = separable_corpus(3, 48, 50, 2);
    let (vocab, records) = corpus.encode(20);
    let (train, test) = split_train_test(&records, 0.75, 2).unwrap();
    for preset in [Preset::W2vMlpReluLrdecayDropout, Preset::CharW2vLstm] {
        let spec = spec_for(preset, 3, vocab.len());
        let cfg = TrainConfig {
            epochs: 4,
            batch_size: 8,
            ..TrainConfig::for_preset(preset)
        };
        let run = || {
            let dir = tempfile::tempdir().unwrap();
            let out = train_loop::<f32>(
                &spec,
                &cfg,
                TrainData::Memory(&train),
                Some(TrainData::Memory(&test)),
                &corpus.embeddings,
                Some(dir.path()),
            )
            .unwrap();
            (out.report.to_jsonl(), fs::read(out.checkpoint.unwrap()).unwrap())
        };
        let (r1, c1) = run();
        let (r2, c2) = run();
        assert_eq!(r1, r2, "{preset}");
        assert_eq!(c1, c2, "{preset}");
        assert_eq!(r1.lines().count(), 5);
    }
}

#[test]
fn shard_and_memory_training_agree_for_one_shard() {
    let corpus = separable_corpus(2, 32, 50, 5);
    let (_, records) = corpus.encode(20);
    let dir = tempfile::tempdir().unwrap();
    let m = write_shards(&records, 1_000, dir.path(), ShardMeta { num_classes: 2, ..ShardMeta::default() }).unwrap();
    let spec = ModelSpec::new(Preset::W2vMlpSigmoid, 2);
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 8,
        ..TrainConfig::for_preset(Preset::W2vMlpSigmoid)
    };
    let a = train_loop::<f32>(&spec, &cfg, TrainData::Memory(&records), None, &corpus.embeddings, None).unwrap();
    let b = train_loop::<f32>(&spec, &cfg, TrainData::Shards(&m), None, &corpus.embeddings, None).unwrap();
    assert_eq!(a.report.to_jsonl(), b.report.to_jsonl());
}

#[test]
fn rus_preset_requires_balanced_shards() {
    let records = fuzz_records(30, 3);
    let dir = tempfile::tempdir().unwrap();
    let m = write_shards(&records, 100, dir.path(), meta()).unwrap();
    assert!(!m.is_balanced());
    let spec = ModelSpec::new(Preset::CharW2vLstmRus, 3);
    let err = train_loop::<f32>(&spec, &TrainConfig::default(), TrainData::Shards(&m), None, &EmbeddingTable::new(50), None)
        .err()
        .unwrap();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn overflowing_inputs_abort_with_epoch_and_batch() {
    let mut emb = EmbeddingTable::new(50);
    emb.insert("x", &[3.0e38; 50]);
    let records = vec![
        EncodedSentence {
            token_ids: vec![1; 15],
            chars: vec![vec![]; 15],
            true_length: 15,
            label: 0,
        };
        4
    ];
    let spec = ModelSpec::new(Preset::W2vSoftmax, 2);
    let cfg = TrainConfig {
        epochs: 2,
        ..TrainConfig::for_preset(Preset::W2vSoftmax)
    };
    let err = train_loop::<f32>(&spec, &cfg, TrainData::Memory(&records), None, &emb, None)
        .err()
        .unwrap();
    assert!(err.is_numeric(), "{err}");
}
