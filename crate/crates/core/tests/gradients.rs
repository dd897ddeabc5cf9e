//! Analytic loss gradients against central finite differences.

mod common;

use g2l_core::losses::{
    geodesic_contrastive_loss, grounding_loss, prepare_aux, ssi_loss, total_loss_with_aux, vanilla_contrastive_loss,
    Batch, DenominatorMode, GclConfig, LossAux, LossPart, Mode, SimilarityWeight,
};
use g2l_core::numcore::{finite_diff_gradient, max_relative_error, RngStream, DEFAULT_FD_STEP};

const TOL: f64 = 1e-4;
const BATCHES: u64 = 20;

fn config() -> GclConfig {
    GclConfig {
        topk: 2,
        neighbors: 3,
        moments_per_query: 2,
        ssi_mc_samples: 16,
        ..GclConfig::default()
    }
}

/// Worst relative error over both gradients of `loss`.
fn check<F>(batch: &Batch, loss: F) -> f64
where
    F: Fn(&Batch) -> LossPart,
{
    let analytic = loss(batch);
    let q = batch.queries().matrix().clone();
    let m = batch.moments().matrix().clone();
    let fd_q = finite_diff_gradient(
        |x| Ok(loss(&batch.with_embeddings(x.clone(), m.clone()).unwrap()).value),
        &q,
        DEFAULT_FD_STEP,
    )
    .unwrap();
    let fd_m = finite_diff_gradient(
        |x| Ok(loss(&batch.with_embeddings(q.clone(), x.clone()).unwrap()).value),
        &m,
        DEFAULT_FD_STEP,
    )
    .unwrap();
    max_relative_error(&analytic.grad_queries, &fd_q).max(max_relative_error(&analytic.grad_moments, &fd_m))
}

fn over_batches<F>(name: &str, stream: u64, f: F)
where
    F: Fn(&Batch, &GclConfig, &LossAux) -> f64,
{
    let mut worst: f64 = 0.0;
    for i in 0..BATCHES {
        let mut rng = RngStream::new(i, stream);
        let batch = random_batch(&mut rng);
        let cfg = config();
        let aux = prepare_aux(&batch, &cfg, i).unwrap();
        worst = worst.max(f(&batch, &cfg, &aux));
    }
    assert!(worst < TOL, "{name}: worst relative error {worst:e}");
}

fn random_batch(rng: &mut RngStream) -> Batch {
    common::random_batch(rng, 2)
}

#[test]
fn vanilla_contrastive_gradient() {
    over_batches("vcl", 1, |b, cfg, _| {
        check(b, |x| vanilla_contrastive_loss(x, cfg.temperature).unwrap())
    });
}

#[test]
fn grounding_gradient() {
    over_batches("vg", 2, |b, cfg, _| {
        check(b, |x| grounding_loss(x, cfg.grounding_temperature).unwrap())
    });
}

#[test]
fn geodesic_contrastive_gradient_every_variant() {
    for (k, (denominator, weight)) in [
        (DenominatorMode::Literal, SimilarityWeight::Geodesic),
        (DenominatorMode::Tempered, SimilarityWeight::Geodesic),
        (DenominatorMode::Literal, SimilarityWeight::NegatedGeodesic),
        (DenominatorMode::Tempered, SimilarityWeight::NegatedGeodesic),
        (DenominatorMode::Literal, SimilarityWeight::Plain),
    ]
    .into_iter()
    .enumerate()
    {
        over_batches("gcl", 10 + k as u64, |b, cfg, aux| {
            let cfg = GclConfig {
                denominator,
                weight,
                ..*cfg
            };
            check(b, |x| geodesic_contrastive_loss(x, &aux.tables, &cfg).unwrap())
        });
    }
}

#[test]
fn ssi_gradient() {
    over_batches("ssi", 3, |b, _, aux| check(b, |x| ssi_loss(x, &aux.groups).unwrap()));
}

#[test]
fn total_gradient_both_modes() {
    for mode in [Mode::Baseline, Mode::G2l] {
        over_batches("total", 4, |b, cfg, aux| {
            check(b, |x| {
                let bundle = total_loss_with_aux(x, cfg, mode, Some(aux)).unwrap();
                LossPart {
                    value: bundle.l_total,
                    grad_queries: bundle.grad_queries,
                    grad_moments: bundle.grad_moments,
                }
            })
        });
    }
}
