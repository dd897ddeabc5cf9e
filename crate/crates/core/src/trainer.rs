//! Toy dual encoder trained with the baseline or the geodesic-guided
//! objective, plus the retrieval and embedding-geometry metrics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::losses::{self, Batch, GclConfig, LossBundle, Mode};
use crate::numcore::{dot, norm, pairwise_sum, squared_distance, EmbeddingMatrix, Matrix, RngStream, MIN_ROW_NORM};
use crate::synthdata::SynthDataset;

const STREAM_INIT_VIDEO: u64 = 1;
const STREAM_INIT_QUERY: u64 = 2;
const STREAM_SHUFFLE: u64 = 1 << 32;

/// One modality's projection: optional `tanh` hidden layer, then a linear map
/// whose outputs are re-normalized to the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub hidden: Option<Matrix>,
    pub output: Matrix,
}

/// Activations kept for the backward pass.
struct Forward {
    input: Matrix,
    hidden: Option<Matrix>,
    pre_norm: Matrix,
    output: Matrix,
}

impl Projection {
    pub fn random(input_dim: usize, hidden_dim: Option<usize>, output_dim: usize, rng: &mut RngStream) -> Self {
        let mut init = |rows: usize, cols: usize| {
            let scale = 1.0 / libm::sqrt(rows as f64);
            let mut m = Matrix::zeros(rows, cols);
            m.data_mut().iter_mut().for_each(|v| *v = scale * rng.normal());
            m
        };
        match hidden_dim {
            Some(h) => Projection {
                hidden: Some(init(input_dim, h)),
                output: init(h, output_dim),
            },
            None => Projection {
                hidden: None,
                output: init(input_dim, output_dim),
            },
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.as_ref().unwrap_or(&self.output).rows()
    }

    pub fn output_dim(&self) -> usize {
        self.output.cols()
    }

    fn forward(&self, input: &Matrix) -> Result<Forward> {
        let hidden = match &self.hidden {
            Some(w) => {
                let mut h = input.matmul(w)?;
                h.data_mut().iter_mut().for_each(|v| *v = libm::tanh(*v));
                Some(h)
            }
            None => None,
        };
        let pre_norm = hidden.as_ref().unwrap_or(input).matmul(&self.output)?;
        let mut output = pre_norm.clone();
        for i in 0..output.rows() {
            let row = output.row_mut(i);
            let n = norm(row);
            if !(n > MIN_ROW_NORM && n.is_finite()) {
                return Err(Error::NonFinite(format!("encoder output row {i} has norm {n}")));
            }
            row.iter_mut().for_each(|v| *v /= n);
        }
        Ok(Forward {
            input: input.clone(),
            hidden,
            pre_norm,
            output,
        })
    }

    pub fn encode(&self, input: &Matrix) -> Result<EmbeddingMatrix> {
        EmbeddingMatrix::unit(self.forward(input)?.output)
    }

    /// Weight gradients given the gradient at the normalized outputs, in
    /// `params()` order.
    fn backward(&self, fwd: &Forward, grad_out: &Matrix) -> Result<Vec<Matrix>> {
        // through row normalization: (g − (g·z) z) / ‖u‖
        let mut grad_pre = grad_out.clone();
        for i in 0..grad_pre.rows() {
            let z = fwd.output.row(i);
            let u_norm = norm(fwd.pre_norm.row(i));
            let gz = dot(grad_out.row(i), z);
            for (g, zi) in grad_pre.row_mut(i).iter_mut().zip(z) {
                *g = (*g - gz * zi) / u_norm;
            }
        }
        match (&self.hidden, &fwd.hidden) {
            (Some(_), Some(h)) => {
                let grad_output = h.t_matmul(&grad_pre)?;
                let mut grad_h = grad_pre.matmul(&self.output.transpose())?;
                for (g, hv) in grad_h.data_mut().iter_mut().zip(h.data()) {
                    *g *= 1.0 - hv * hv;
                }
                let grad_hidden = fwd.input.t_matmul(&grad_h)?;
                Ok(vec![grad_hidden, grad_output])
            }
            _ => Ok(vec![fwd.input.t_matmul(&grad_pre)?]),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let mut p = Vec::with_capacity(2);
        if let Some(h) = self.hidden.as_mut() {
            p.push(h);
        }
        p.push(&mut self.output);
        p
    }

    pub fn is_finite(&self) -> bool {
        self.output.is_finite() && self.hidden.as_ref().map_or(true, |h| h.is_finite())
    }
}

/// Independent projections for moments and queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub video: Projection,
    pub query: Projection,
}

impl Encoder {
    pub fn random(input_dim: usize, hidden_dim: Option<usize>, output_dim: usize, seed: u64) -> Self {
        Encoder {
            video: Projection::random(input_dim, hidden_dim, output_dim, &mut RngStream::new(seed, STREAM_INIT_VIDEO)),
            query: Projection::random(input_dim, hidden_dim, output_dim, &mut RngStream::new(seed, STREAM_INIT_QUERY)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.video.output_dim() != self.query.output_dim() {
            return Err(Error::Shape("modalities project to different dimensions".into()));
        }
        if self.video.input_dim() != self.query.input_dim() {
            return Err(Error::Shape("modalities expect different input dimensions".into()));
        }
        if !self.video.is_finite() || !self.query.is_finite() {
            return Err(Error::NonFinite("encoder weights".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.video.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.video.output_dim()
    }

    fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let mut p = self.video.params_mut();
        p.extend(self.query.params_mut());
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer state for a fixed list of parameter matrices.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        Optimizer {
            kind,
            learning_rate,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix]) {
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (w, gw) in p.data_mut().iter_mut().zip(g.data()) {
                        *w -= self.learning_rate * gw;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                if self.first.is_empty() {
                    self.first = grads.iter().map(|g| vec![0.0; g.data().len()]).collect();
                    self.second = self.first.clone();
                }
                let t = self.step as f64;
                let c1 = 1.0 - libm::pow(beta1, t);
                let c2 = 1.0 - libm::pow(beta2, t);
                for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
                    let (m, v) = (&mut self.first[k], &mut self.second[k]);
                    for (idx, (w, gw)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                        m[idx] = beta1 * m[idx] + (1.0 - beta1) * gw;
                        v[idx] = beta2 * v[idx] + (1.0 - beta2) * gw * gw;
                        let m_hat = m[idx] / c1;
                        let v_hat = v[idx] / c2;
                        *w -= self.learning_rate * m_hat / (libm::sqrt(v_hat) + eps);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub mode: Mode,
    pub gcl: GclConfig,
    pub seed: u64,
    pub hidden_dim: Option<usize>,
    /// Encoder output dimension; `None` keeps the input dimension.
    pub output_dim: Option<usize>,
    /// Epochs trained on the grounding loss alone before the contrastive and
    /// interaction terms switch on.
    pub warmup_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 16,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::adam(),
            mode: Mode::Baseline,
            gcl: GclConfig::default(),
            seed: 0,
            hidden_dim: None,
            output_dim: None,
            warmup_epochs: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, ds: &SynthDataset) -> Result<()> {
        self.gcl.validate()?;
        if self.batch_size == 0 || self.batch_size > ds.query_count() {
            return Err(Error::Domain(format!(
                "batch size must be in 1..={}, got {}",
                ds.query_count(),
                self.batch_size
            )));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Domain(format!(
                "learning rate must be nonnegative, got {}",
                self.learning_rate
            )));
        }
        if self.hidden_dim == Some(0) || self.output_dim == Some(0) {
            return Err(Error::Domain("layer widths must be positive".into()));
        }
        if self.mode == Mode::G2l && self.gcl.moments_per_query > ds.moments_per_video() {
            return Err(Error::Domain(format!(
                "moments per query {} exceeds moments per video {}",
                self.gcl.moments_per_query,
                ds.moments_per_video()
            )));
        }
        if self.mode == Mode::G2l && self.gcl.topk > ds.moments_per_video() {
            return Err(Error::Domain(format!(
                "topk {} exceeds moments per video {}",
                self.gcl.topk,
                ds.moments_per_video()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub l_total: f64,
    pub l_vg: f64,
    /// Contrastive term: vanilla in baseline mode, geodesic-guided in g2l mode.
    pub l_cl: f64,
    pub l_ssi: f64,
    pub alignment: f64,
    pub uniformity: f64,
    pub r1: f64,
    pub r5: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub epochs: Vec<EpochMetrics>,
}

impl MetricsReport {
    pub fn last(&self) -> Option<&EpochMetrics> {
        self.epochs.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub r1: f64,
    pub r5: f64,
    pub alignment: f64,
    pub uniformity: f64,
}

/// Mean squared distance between paired unit vectors.
pub fn alignment_metric(queries: &Matrix, targets: &Matrix) -> Result<f64> {
    if queries.rows() == 0 || queries.rows() != targets.rows() || queries.cols() != targets.cols() {
        return Err(Error::Shape("alignment needs equally many nonempty pairs".into()));
    }
    let d: Vec<f64> = queries
        .iter_rows()
        .zip(targets.iter_rows())
        .map(|(q, m)| squared_distance(q, m))
        .collect();
    Ok(pairwise_sum(&d) / d.len() as f64)
}

/// `log` of the mean of `exp(−2‖zᵢ − zⱼ‖²)` over unordered distinct pairs.
pub fn uniformity_metric(points: &Matrix) -> Result<f64> {
    let n = points.rows();
    if n < 2 {
        return Err(Error::Domain(format!("uniformity needs at least 2 points, got {n}")));
    }
    let mut terms = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            terms.push(libm::exp(-2.0 * squared_distance(points.row(i), points.row(j))));
        }
    }
    Ok(libm::log(pairwise_sum(&terms) / terms.len() as f64))
}

/// Fraction of queries whose target ranks within the top `n` moments of its
/// own video; equal scores rank the lower index first.
pub fn recall_from_embeddings(ds: &SynthDataset, moments: &Matrix, queries: &Matrix, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("recall cutoff must be at least 1".into()));
    }
    let nq = ds.query_count();
    if nq == 0 {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for q in 0..nq {
        let qv = queries.row(q);
        let rows = ds.video_rows(ds.query_video[q]);
        let target = ds.target_row(q);
        let ts = dot(qv, moments.row(target));
        let rank = rows
            .filter(|&r| {
                let s = dot(qv, moments.row(r));
                s > ts || (s == ts && r < target)
            })
            .count();
        if rank < n {
            hits += 1;
        }
    }
    Ok(hits as f64 / nq as f64)
}

pub fn recall_at_n(encoder: &Encoder, ds: &SynthDataset, n: usize) -> Result<f64> {
    let (m, q) = encode_dataset(encoder, ds)?;
    recall_from_embeddings(ds, &m, &q, n)
}

pub fn encode_dataset(encoder: &Encoder, ds: &SynthDataset) -> Result<(Matrix, Matrix)> {
    if encoder.input_dim() != ds.config.dim {
        return Err(Error::Shape(format!(
            "encoder expects {}-dim inputs, dataset has {}",
            encoder.input_dim(),
            ds.config.dim
        )));
    }
    Ok((
        encoder.video.encode(ds.moments.matrix())?.into_matrix(),
        encoder.query.encode(ds.queries.matrix())?.into_matrix(),
    ))
}

/// Retrieval and geometry metrics of the encoded dataset. Alignment is over
/// (query, target) pairs; uniformity over the encoded moments.
pub fn evaluate(encoder: &Encoder, ds: &SynthDataset) -> Result<EvalMetrics> {
    let (m, q) = encode_dataset(encoder, ds)?;
    let targets: Vec<usize> = (0..ds.query_count()).map(|i| ds.target_row(i)).collect();
    Ok(EvalMetrics {
        r1: recall_from_embeddings(ds, &m, &q, 1)?,
        r5: recall_from_embeddings(ds, &m, &q, 5)?,
        alignment: alignment_metric(&q, &m.select_rows(&targets))?,
        uniformity: uniformity_metric(&m)?,
    })
}

/// Row layout of a mini-batch: the moments of every involved video, once
/// each, in ascending video order, and each query's target within them.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLayout {
    pub moment_rows: Vec<usize>,
    pub targets: Vec<usize>,
    pub query_video: Vec<usize>,
    pub moment_video: Vec<usize>,
}

pub fn batch_layout(ds: &SynthDataset, query_ids: &[usize]) -> BatchLayout {
    let mut videos: Vec<usize> = query_ids.iter().map(|&q| ds.query_video[q]).collect();
    videos.sort_unstable();
    videos.dedup();
    let nm = ds.moments_per_video();
    let targets = query_ids
        .iter()
        .map(|&q| {
            let block = videos.binary_search(&ds.query_video[q]).expect("video collected above");
            block * nm + ds.query_target[q]
        })
        .collect();
    BatchLayout {
        moment_rows: videos.iter().flat_map(|&v| ds.video_rows(v)).collect(),
        targets,
        query_video: query_ids.iter().map(|&q| ds.query_video[q]).collect(),
        moment_video: videos.iter().flat_map(|&v| core::iter::repeat(v).take(nm)).collect(),
    }
}

/// Trains with a zero clock; see [`train_with_clock`].
pub fn train(ds: &SynthDataset, cfg: &TrainConfig) -> Result<(Encoder, MetricsReport)> {
    train_with_clock(ds, cfg, || 0.0)
}

/// Trains a fresh encoder. `clock` returns seconds since an arbitrary origin
/// and only feeds the `seconds` column.
pub fn train_with_clock<C: FnMut() -> f64>(ds: &SynthDataset, cfg: &TrainConfig, mut clock: C) -> Result<(Encoder, MetricsReport)> {
    cfg.validate(ds)?;
    let mut encoder = Encoder::random(ds.config.dim, cfg.hidden_dim, cfg.output_dim.unwrap_or(ds.config.dim), cfg.seed);
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate);
    let mut report = MetricsReport::default();
    let mut order: Vec<usize> = (0..ds.query_count()).collect();
    let mut global_step = 0u64;

    for epoch in 0..cfg.epochs {
        let start = clock();
        let mut shuffle = RngStream::new(cfg.seed, STREAM_SHUFFLE + epoch as u64);
        order.sort_unstable();
        shuffle.shuffle(&mut order);

        let mut gcl = cfg.gcl;
        let warm = epoch < cfg.warmup_epochs;
        if warm {
            gcl.enable_gcl = false;
            gcl.enable_ssi = false;
        }
        let mode = if warm { Mode::G2l } else { cfg.mode };

        let (mut totals, mut vgs, mut cls, mut ssis) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let bundle = train_step(ds, &mut encoder, &mut optimizer, chunk, &gcl, mode, losses::mix_seed(cfg.seed, global_step))
                .map_err(|e| match e {
                    Error::NonFinite(_) => Error::Diverged { epoch, step },
                    other => other,
                })?;
            global_step += 1;
            totals.push(bundle.l_total);
            vgs.push(bundle.l_vg);
            cls.push(bundle.l_vcl + bundle.l_gcl);
            ssis.push(bundle.l_ssi);
        }
        let mean = |v: &[f64]| pairwise_sum(v) / v.len().max(1) as f64;
        let eval = evaluate(&encoder, ds)?;
        report.epochs.push(EpochMetrics {
            epoch: epoch + 1,
            l_total: mean(&totals),
            l_vg: mean(&vgs),
            l_cl: mean(&cls),
            l_ssi: mean(&ssis),
            alignment: eval.alignment,
            uniformity: eval.uniformity,
            r1: eval.r1,
            r5: eval.r5,
            seconds: clock() - start,
        });
    }
    Ok((encoder, report))
}

fn train_step(
    ds: &SynthDataset,
    encoder: &mut Encoder,
    optimizer: &mut Optimizer,
    query_ids: &[usize],
    gcl: &GclConfig,
    mode: Mode,
    seed: u64,
) -> Result<LossBundle> {
    let layout = batch_layout(ds, query_ids);
    let fwd_m = encoder.video.forward(&ds.moments.matrix().select_rows(&layout.moment_rows))?;
    let fwd_q = encoder.query.forward(&ds.queries.matrix().select_rows(query_ids))?;
    let batch = Batch::new(
        EmbeddingMatrix::unit(fwd_q.output.clone())?,
        EmbeddingMatrix::unit(fwd_m.output.clone())?,
        layout.targets,
        layout.query_video,
        layout.moment_video,
    )?;
    let bundle = losses::total_loss(&batch, gcl, mode, seed)?;

    let mut grads = encoder.video.backward(&fwd_m, &bundle.grad_moments)?;
    grads.extend(encoder.query.backward(&fwd_q, &bundle.grad_queries)?);
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("weight gradient".into()));
    }
    let mut params = encoder.params_mut();
    optimizer.step(&mut params, &grads);
    if !encoder.video.is_finite() || !encoder.query.is_finite() {
        return Err(Error::NonFinite("encoder weights".into()));
    }
    Ok(bundle)
}

/// Gradient of `loss(encode(inputs))` with respect to every encoder weight,
/// for checking the backward pass.
#[doc(hidden)]
pub fn projection_weight_gradient(projection: &Projection, input: &Matrix, grad_out: &Matrix) -> Result<Vec<Matrix>> {
    let fwd = projection.forward(input)?;
    projection.backward(&fwd, grad_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{finite_diff_gradient, max_relative_error};

    #[test]
    fn alignment_examples() {
        let a = Matrix::from_rows(&[&[1.0, 0.0]]).unwrap();
        assert_eq!(alignment_metric(&a, &a).unwrap(), 0.0);
        let b = Matrix::from_rows(&[&[-1.0, 0.0]]).unwrap();
        assert_eq!(alignment_metric(&a, &b).unwrap(), 4.0);
        let c = Matrix::from_rows(&[&[0.0, 1.0]]).unwrap();
        assert_eq!(alignment_metric(&a, &c).unwrap(), 2.0);
    }

    #[test]
    fn uniformity_examples() {
        let anti = Matrix::from_rows(&[&[1.0, 0.0], &[-1.0, 0.0]]).unwrap();
        assert!((uniformity_metric(&anti).unwrap() + 8.0).abs() < 1e-12);
        let same = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(uniformity_metric(&same).unwrap(), 0.0);
        let orth = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!((uniformity_metric(&orth).unwrap() + 4.0).abs() < 1e-12);
        assert!(uniformity_metric(&Matrix::from_rows(&[&[1.0, 0.0]]).unwrap()).is_err());
    }

    #[test]
    fn projection_backward_matches_finite_differences() {
        let mut rng = RngStream::new(9, 9);
        for hidden in [None, Some(4)] {
            let proj = Projection::random(3, hidden, 5, &mut rng);
            let mut input = Matrix::zeros(4, 3);
            input.data_mut().iter_mut().for_each(|v| *v = rng.normal());
            let mut weights = Matrix::zeros(4, 5);
            weights.data_mut().iter_mut().for_each(|v| *v = rng.normal());
            // loss = Σ weights ⊙ encode(input)
            let loss = |p: &Projection| -> Result<f64> {
                let z = p.encode(&input)?;
                Ok(z.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum())
            };
            let analytic = projection_weight_gradient(&proj, &input, &weights).unwrap();
            let last = analytic.len() - 1;
            let fd_out = finite_diff_gradient(
                |w| loss(&Projection { hidden: proj.hidden.clone(), output: w.clone() }),
                &proj.output,
                1e-6,
            )
            .unwrap();
            assert!(max_relative_error(&analytic[last], &fd_out) < 1e-7);
            if let Some(h) = &proj.hidden {
                let fd_hidden = finite_diff_gradient(
                    |w| loss(&Projection { hidden: Some(w.clone()), output: proj.output.clone() }),
                    h,
                    1e-6,
                )
                .unwrap();
                assert!(max_relative_error(&analytic[0], &fd_hidden) < 1e-7);
            }
        }
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::adam()] {
            let mut w = Matrix::from_rows(&[&[0.5, -1.0]]).unwrap();
            let before = w.clone();
            let mut opt = Optimizer::new(kind, 0.1);
            for _ in 0..3 {
                opt.step(&mut [&mut w], &[Matrix::zeros(1, 2)]);
            }
            assert_eq!(w, before);
        }
    }
}
