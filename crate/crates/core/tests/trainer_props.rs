//! Behavioural properties of the training loop.

use g2l_core::losses::Mode;
use g2l_core::synthdata::{generate, SynthConfig, SynthDataset};
use g2l_core::trainer::{evaluate, recall_at_n, train, Encoder, OptimizerKind, TrainConfig};

fn small_data(seed: u64) -> SynthDataset {
    generate(&SynthConfig {
        videos: 12,
        moments_per_video: 8,
        queries_per_video: 2,
        dim: 12,
        topics: 6,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

#[test]
fn zero_learning_rate_freezes_metrics() {
    let ds = small_data(1);
    for (mode, optimizer) in [(Mode::Baseline, OptimizerKind::Sgd), (Mode::G2l, OptimizerKind::adam())] {
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 6,
            learning_rate: 0.0,
            optimizer,
            mode,
            ..TrainConfig::default()
        };
        let (enc, report) = train(&ds, &cfg).unwrap();
        assert_eq!(enc, Encoder::random(ds.config.dim, None, ds.config.dim, cfg.seed));
        let first = report.epochs[0];
        for e in &report.epochs {
            assert_eq!((e.alignment, e.uniformity, e.r1, e.r5), (first.alignment, first.uniformity, first.r1, first.r5));
        }
    }
}

#[test]
fn training_is_deterministic() {
    let ds = small_data(2);
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 8,
        mode: Mode::G2l,
        seed: 5,
        ..TrainConfig::default()
    };
    assert_eq!(train(&ds, &cfg).unwrap(), train(&ds, &cfg).unwrap());
}

#[test]
fn baseline_contrastive_loss_falls_over_the_first_epochs() {
    let ds = generate(&SynthConfig::default()).unwrap();
    let mut robust = 0;
    for seed in 1..=5 {
        let cfg = TrainConfig {
            epochs: 5,
            seed,
            ..TrainConfig::default()
        };
        let (_, report) = train(&ds, &cfg).unwrap();
        let l: Vec<f64> = report.epochs.iter().map(|e| e.l_cl).collect();
        if l.windows(2).all(|w| w[1] < w[0]) {
            robust += 1;
        }
    }
    assert!(robust >= 4, "decreasing on {robust}/5 seeds");
}

#[test]
fn untrained_encoder_retrieves_at_chance() {
    let nm = 16;
    let (mut hits, mut total) = (0.0, 0usize);
    for seed in 0..5 {
        let ds = generate(&SynthConfig {
            topics: 32,
            dim: 32,
            orthogonal_topics: true,
            noise: 0.0,
            overlap: 0.0,
            moments_per_video: nm,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let enc = Encoder::random(32, None, 32, 100 + seed);
        hits += recall_at_n(&enc, &ds, 1).unwrap() * ds.query_count() as f64;
        total += ds.query_count();
    }
    let p = 1.0 / nm as f64;
    let rate = hits / total as f64;
    let sigma = (p * (1.0 - p) / total as f64).sqrt();
    assert!((rate - p).abs() <= 3.0 * sigma, "R@1 {rate} vs chance {p} (σ {sigma})");
}

#[test]
fn recall_is_nested_and_exhaustive() {
    let ds = small_data(3);
    let enc = Encoder::random(12, Some(5), 7, 1);
    let m = evaluate(&enc, &ds).unwrap();
    assert!(m.r1 <= m.r5 && m.r5 <= 1.0);
    let mut prev = 0.0;
    for n in 1..=8 {
        let r = recall_at_n(&enc, &ds, n).unwrap();
        assert!(r >= prev);
        prev = r;
    }
    assert_eq!(prev, 1.0);
}

#[test]
fn disabling_both_g2l_terms_leaves_grounding_only_training() {
    let ds = small_data(4);
    let base = TrainConfig {
        epochs: 3,
        batch_size: 8,
        mode: Mode::G2l,
        seed: 9,
        ..TrainConfig::default()
    };
    let mut ablated = base.clone();
    ablated.gcl.enable_gcl = false;
    ablated.gcl.enable_ssi = false;
    // warmup trains on the grounding loss alone
    let warm = TrainConfig {
        warmup_epochs: 3,
        ..base.clone()
    };
    let (ea, ra) = train(&ds, &ablated).unwrap();
    let (ew, rw) = train(&ds, &warm).unwrap();
    assert_eq!(ea, ew);
    for (a, w) in ra.epochs.iter().zip(&rw.epochs) {
        assert!((a.l_total - w.l_total).abs() < 1e-12 && (a.l_total - a.l_vg).abs() < 1e-12);
        assert_eq!((a.l_cl, a.l_ssi), (0.0, 0.0));
    }
}
