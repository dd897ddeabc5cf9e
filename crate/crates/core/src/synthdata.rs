//! Synthetic moment/query embeddings with controllable semantic overlap and
//! annotation sparsity.
//!
//! Every moment carries a hidden topic. A few moments per video are
//! annotated and become query targets; every other moment copies the topic of
//! one of its video's targets with probability `overlap`, so the same
//! semantics appear in moments the annotations treat as negatives.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numcore::{l2_normalize_rows, EmbeddingMatrix, Matrix, RngStream, MIN_ROW_NORM};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub videos: usize,
    pub moments_per_video: usize,
    pub queries_per_video: usize,
    pub dim: usize,
    pub topics: usize,
    /// Probability that a non-target moment shares a target's topic.
    pub overlap: f64,
    /// Fraction of each video's moments that are annotated.
    pub annotated_fraction: f64,
    /// Noise norm relative to the unit topic direction.
    pub noise: f64,
    pub orthogonal_topics: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            videos: 64,
            moments_per_video: 16,
            queries_per_video: 4,
            dim: 32,
            topics: 8,
            overlap: 0.4,
            annotated_fraction: 0.25,
            noise: 0.15,
            orthogonal_topics: false,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Annotated moments per video: `ceil(fraction · N_m)`, at least one.
    pub fn annotated_per_video(&self) -> usize {
        let raw = libm::ceil(self.annotated_fraction * self.moments_per_video as f64) as usize;
        raw.clamp(1, self.moments_per_video.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::Domain(format!("overlap must lie in [0, 1], got {}", self.overlap)));
        }
        if !(self.annotated_fraction > 0.0 && self.annotated_fraction <= 1.0) {
            return Err(Error::Domain(format!(
                "annotated fraction must lie in (0, 1], got {}",
                self.annotated_fraction
            )));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::Domain(format!("noise must be nonnegative, got {}", self.noise)));
        }
        if self.moments_per_video < 2 {
            return Err(Error::Domain("need at least 2 moments per video".into()));
        }
        if self.dim == 0 || self.topics == 0 {
            return Err(Error::Domain("dim and topics must be positive".into()));
        }
        if self.queries_per_video == 0 || self.queries_per_video > self.annotated_per_video() {
            return Err(Error::Domain(format!(
                "queries per video must be in 1..={} (annotated moments per video)",
                self.annotated_per_video()
            )));
        }
        if self.orthogonal_topics && self.dim < self.topics {
            return Err(Error::Domain(format!(
                "{} orthogonal topics need dim >= topics, got dim {}",
                self.topics, self.dim
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub config: SynthConfig,
    /// `videos · N_m` rows; video `v` owns rows `v·N_m..(v+1)·N_m`.
    pub moments: EmbeddingMatrix,
    pub moment_topics: Vec<u32>,
    pub annotated: Vec<bool>,
    pub queries: EmbeddingMatrix,
    pub query_video: Vec<usize>,
    /// Target moment of each query, indexed within its video.
    pub query_target: Vec<usize>,
}

impl SynthDataset {
    pub fn videos(&self) -> usize {
        self.config.videos
    }

    pub fn moments_per_video(&self) -> usize {
        self.config.moments_per_video
    }

    pub fn query_count(&self) -> usize {
        self.queries.rows()
    }

    pub fn video_rows(&self, video: usize) -> core::ops::Range<usize> {
        let n = self.moments_per_video();
        video * n..(video + 1) * n
    }

    /// Global moment row of query `q`'s target.
    pub fn target_row(&self, q: usize) -> usize {
        self.query_video[q] * self.moments_per_video() + self.query_target[q]
    }

    /// Checks structural consistency (used after loading).
    pub fn validate(&self) -> Result<()> {
        let cfg = &self.config;
        let nm = cfg.videos * cfg.moments_per_video;
        let nq = self.queries.rows();
        if self.moments.rows() != nm
            || self.moments.dim() != cfg.dim
            || self.queries.dim() != cfg.dim
            || self.moment_topics.len() != nm
            || self.annotated.len() != nm
            || self.query_video.len() != nq
            || self.query_target.len() != nq
        {
            return Err(Error::Shape("dataset arrays disagree with its header".into()));
        }
        for q in 0..nq {
            if self.query_video[q] >= cfg.videos || self.query_target[q] >= cfg.moments_per_video {
                return Err(Error::Domain(format!("query {q} points outside the dataset")));
            }
        }
        if self.moment_topics.iter().any(|&t| t as usize >= cfg.topics) {
            return Err(Error::Domain("moment topic label out of range".into()));
        }
        Ok(())
    }
}

fn random_topics(cfg: &SynthConfig, rng: &mut RngStream) -> Result<Matrix> {
    let mut topics = Matrix::zeros(cfg.topics, cfg.dim);
    for v in topics.data_mut() {
        *v = rng.normal();
    }
    if cfg.orthogonal_topics {
        // modified Gram–Schmidt
        for i in 0..cfg.topics {
            for j in 0..i {
                let proj: f64 = crate::numcore::dot(topics.row(i), topics.row(j));
                let prev: Vec<f64> = topics.row(j).to_vec();
                for (a, b) in topics.row_mut(i).iter_mut().zip(&prev) {
                    *a -= proj * b;
                }
            }
            let n = crate::numcore::norm(topics.row(i));
            if n <= MIN_ROW_NORM {
                return Err(Error::Domain("degenerate topic draw".into()));
            }
            topics.row_mut(i).iter_mut().for_each(|v| *v /= n);
        }
        Ok(topics)
    } else {
        l2_normalize_rows(&topics)
    }
}

fn noisy_copy(topic: &[f64], sigma: f64, rng: &mut RngStream, out: &mut [f64]) {
    let scale = sigma / libm::sqrt(topic.len() as f64);
    for (o, t) in out.iter_mut().zip(topic) {
        *o = t + scale * rng.normal();
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    let mut rng = RngStream::new(cfg.seed, 0);
    let topics = random_topics(cfg, &mut rng)?;
    let nm = cfg.moments_per_video;
    let annotated_count = cfg.annotated_per_video();

    let mut moments = Matrix::zeros(cfg.videos * nm, cfg.dim);
    let mut moment_topics = Vec::with_capacity(cfg.videos * nm);
    let mut annotated = Vec::with_capacity(cfg.videos * nm);
    let mut queries = Matrix::zeros(cfg.videos * cfg.queries_per_video, cfg.dim);
    let mut query_video = Vec::with_capacity(queries.rows());
    let mut query_target = Vec::with_capacity(queries.rows());

    let mut slots: Vec<usize> = (0..nm).collect();
    let mut topic_order: Vec<usize> = (0..cfg.topics).collect();
    for v in 0..cfg.videos {
        rng.shuffle(&mut slots);
        rng.shuffle(&mut topic_order);
        let annotated_slots = &slots[..annotated_count];
        let targets = &annotated_slots[..cfg.queries_per_video];

        let mut labels = alloc::vec![0usize; nm];
        for (k, &slot) in annotated_slots.iter().enumerate() {
            labels[slot] = if k < cfg.topics {
                topic_order[k]
            } else {
                rng.below(cfg.topics)
            };
        }
        let target_topics: Vec<usize> = targets.iter().map(|&s| labels[s]).collect();
        let free_topics: Vec<usize> = (0..cfg.topics)
            .filter(|t| !target_topics.contains(t))
            .collect();
        for slot in 0..nm {
            if targets.contains(&slot) {
                continue;
            }
            let shares = rng.uniform() < cfg.overlap;
            if shares {
                labels[slot] = target_topics[rng.below(target_topics.len())];
            } else if !annotated_slots.contains(&slot) {
                labels[slot] = if free_topics.is_empty() {
                    rng.below(cfg.topics)
                } else {
                    free_topics[rng.below(free_topics.len())]
                };
            }
        }

        for (slot, &label) in labels.iter().enumerate() {
            let row = v * nm + slot;
            noisy_copy(topics.row(label), cfg.noise, &mut rng, moments.row_mut(row));
            moment_topics.push(label as u32);
            annotated.push(annotated_slots.contains(&slot));
        }
        for (k, &slot) in targets.iter().enumerate() {
            let row = v * cfg.queries_per_video + k;
            noisy_copy(topics.row(labels[slot]), cfg.noise, &mut rng, queries.row_mut(row));
            query_video.push(v);
            query_target.push(slot);
        }
    }

    Ok(SynthDataset {
        config: cfg.clone(),
        moments: EmbeddingMatrix::normalized_from(moments)?,
        moment_topics,
        annotated,
        queries: EmbeddingMatrix::normalized_from(queries)?,
        query_video,
        query_target,
    })
}

/// Fraction of non-target moments whose topic equals one of their video's
/// target topics.
pub fn measured_overlap(ds: &SynthDataset) -> f64 {
    let mut shared = 0usize;
    let mut total = 0usize;
    for v in 0..ds.videos() {
        let target_rows: Vec<usize> = (0..ds.query_count())
            .filter(|&q| ds.query_video[q] == v)
            .map(|q| ds.target_row(q))
            .collect();
        let target_topics: Vec<u32> = target_rows.iter().map(|&r| ds.moment_topics[r]).collect();
        for row in ds.video_rows(v).filter(|r| !target_rows.contains(r)) {
            total += 1;
            if target_topics.contains(&ds.moment_topics[row]) {
                shared += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        shared as f64 / total as f64
    }
}
