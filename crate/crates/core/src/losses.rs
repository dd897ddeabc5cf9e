//! Training objectives over a mini-batch of query and moment embeddings.
//!
//! Every loss returns its value together with analytic gradients with
//! respect to the query and moment embeddings it was given. Geodesic tables,
//! semantic positives and interaction soft labels are treated as constants.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::game::{interaction_matrix, AlignmentGame, InteractionMatrix};
use crate::geodesic::{self, GeodesicTable};
use crate::numcore::{dot, log_sum_exp, pairwise_sum, softmax_in_place, EmbeddingMatrix, Matrix, RngStream};

/// A mini-batch: `B` queries, the moments of every video they come from, and
/// each query's target moment (an index into `moments`).
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    queries: EmbeddingMatrix,
    moments: EmbeddingMatrix,
    targets: Vec<usize>,
    query_video: Vec<usize>,
    moment_video: Vec<usize>,
}

impl Batch {
    pub fn new(
        queries: EmbeddingMatrix,
        moments: EmbeddingMatrix,
        targets: Vec<usize>,
        query_video: Vec<usize>,
        moment_video: Vec<usize>,
    ) -> Result<Self> {
        let b = queries.rows();
        if b == 0 {
            return Err(Error::Domain("batch needs at least one query".into()));
        }
        if queries.dim() != moments.dim() {
            return Err(Error::Shape(format!(
                "query dim {} differs from moment dim {}",
                queries.dim(),
                moments.dim()
            )));
        }
        if targets.len() != b || query_video.len() != b {
            return Err(Error::Shape("one target and video id per query required".into()));
        }
        if moment_video.len() != moments.rows() {
            return Err(Error::Shape("one video id per moment required".into()));
        }
        for (i, (&t, &v)) in targets.iter().zip(&query_video).enumerate() {
            if t >= moments.rows() {
                return Err(Error::Domain(format!("query {i} target {t} out of range")));
            }
            if moment_video[t] != v {
                return Err(Error::Domain(format!(
                    "query {i} target {t} lies outside its video {v}"
                )));
            }
            if moment_video.iter().filter(|&&mv| mv == v).count() < 2 {
                return Err(Error::Domain(format!("video {v} has fewer than 2 moments")));
            }
        }
        Ok(Batch {
            queries,
            moments,
            targets,
            query_video,
            moment_video,
        })
    }

    /// Same structure with different embeddings of identical shape.
    pub fn with_embeddings(&self, queries: Matrix, moments: Matrix) -> Result<Self> {
        if queries.rows() != self.queries.rows()
            || queries.cols() != self.queries.cols()
            || moments.rows() != self.moments.rows()
            || moments.cols() != self.moments.cols()
        {
            return Err(Error::Shape("replacement embeddings change the batch shape".into()));
        }
        Ok(Batch {
            queries: EmbeddingMatrix::raw(queries),
            moments: EmbeddingMatrix::raw(moments),
            ..self.clone()
        })
    }

    pub fn queries(&self) -> &EmbeddingMatrix {
        &self.queries
    }

    pub fn moments(&self) -> &EmbeddingMatrix {
        &self.moments
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn query_video(&self) -> &[usize] {
        &self.query_video
    }

    pub fn moment_video(&self) -> &[usize] {
        &self.moment_video
    }

    pub fn len(&self) -> usize {
        self.queries.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Moment indices belonging to `video`, ascending.
    pub fn video_moments(&self, video: usize) -> Vec<usize> {
        (0..self.moments.rows())
            .filter(|&j| self.moment_video[j] == video)
            .collect()
    }

    /// Unique video ids of the queries, ascending.
    pub fn videos(&self) -> Vec<usize> {
        let mut v = self.query_video.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// How the geodesic-guided loss forms its denominator terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenominatorMode {
    /// `Σ s(q, m) / τ`.
    Literal,
    /// `Σ exp(log s(q, m) / τ)`.
    Tempered,
}

/// Which similarity enters the geodesic-guided denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityWeight {
    /// `s = exp((q·m)(m̂·m)(−(G+1)))`.
    Geodesic,
    /// Same with the weight sign flipped: `exp((q·m)(m̂·m)(G+1))`.
    NegatedGeodesic,
    /// Denominator terms replaced by `exp(q·m/τ)`, as in the vanilla loss.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Grounding plus vanilla contrastive loss.
    Baseline,
    /// Grounding plus geodesic-guided contrastive plus interaction alignment.
    G2l,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GclConfig {
    pub temperature: f64,
    /// Semantic positives per query.
    pub topk: usize,
    /// K-NN graph neighbors per node.
    pub neighbors: usize,
    pub g_cap: f64,
    /// Moments sampled per query for the interaction game.
    pub moments_per_query: usize,
    pub ssi_mc_samples: usize,
    pub grounding_temperature: f64,
    pub denominator: DenominatorMode,
    pub weight: SimilarityWeight,
    pub enable_gcl: bool,
    pub enable_ssi: bool,
}

impl Default for GclConfig {
    fn default() -> Self {
        GclConfig {
            temperature: 0.1,
            topk: 3,
            neighbors: geodesic::DEFAULT_NEIGHBORS,
            g_cap: geodesic::DEFAULT_G_CAP,
            moments_per_query: crate::game::DEFAULT_MOMENTS_PER_QUERY,
            ssi_mc_samples: 64,
            grounding_temperature: 0.1,
            denominator: DenominatorMode::Literal,
            weight: SimilarityWeight::Geodesic,
            enable_gcl: true,
            enable_ssi: true,
        }
    }
}

impl GclConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("temperature", self.temperature)?;
        positive("grounding temperature", self.grounding_temperature)?;
        positive("g_cap", self.g_cap)?;
        if self.topk == 0 {
            return Err(Error::Domain("topk must be at least 1".into()));
        }
        if self.neighbors == 0 {
            return Err(Error::Domain("neighbors must be at least 1".into()));
        }
        if self.moments_per_query == 0 {
            return Err(Error::Domain("moments per query must be at least 1".into()));
        }
        if self.ssi_mc_samples == 0 {
            return Err(Error::Domain("interaction samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Value and gradients of one loss term.
#[derive(Debug, Clone, PartialEq)]
pub struct LossPart {
    pub value: f64,
    pub grad_queries: Matrix,
    pub grad_moments: Matrix,
}

impl LossPart {
    pub fn zero(batch: &Batch) -> Self {
        LossPart {
            value: 0.0,
            grad_queries: Matrix::zeros(batch.queries.rows(), batch.queries.cols()),
            grad_moments: Matrix::zeros(batch.moments.rows(), batch.moments.cols()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossBundle {
    pub l_vg: f64,
    pub l_vcl: f64,
    pub l_gcl: f64,
    pub l_ssi: f64,
    pub l_total: f64,
    pub grad_queries: Matrix,
    pub grad_moments: Matrix,
}

#[inline]
fn add_scaled(dst: &mut [f64], alpha: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}

/// Noise-contrastive loss of each query against every moment in the batch,
/// with its target moment as the single positive.
pub fn vanilla_contrastive_loss(batch: &Batch, temperature: f64) -> Result<LossPart> {
    check_temperature(temperature)?;
    let q = &batch.queries;
    let m = &batch.moments;
    let mut part = LossPart::zero(batch);
    let mut logits = vec![0.0; m.rows()];
    let mut per_query = Vec::with_capacity(q.rows());
    for i in 0..q.rows() {
        let qi = q.row(i);
        for (j, l) in logits.iter_mut().enumerate() {
            *l = dot(qi, m.row(j)) / temperature;
        }
        let t = batch.targets[i];
        per_query.push(log_sum_exp(&logits) - logits[t]);

        softmax_in_place(&mut logits, 1.0);
        logits[t] -= 1.0;
        for (j, &g) in logits.iter().enumerate() {
            let g = g / temperature;
            add_scaled(part.grad_queries.row_mut(i), g, m.row(j));
            add_scaled(part.grad_moments.row_mut(j), g, qi);
        }
    }
    part.value = pairwise_sum(&per_query);
    Ok(part)
}

/// The `k` moments geodesically closest to the table's source, which is
/// always first. Remaining ties go to the lower index; unreachable nodes sort
/// after every reachable one.
pub fn select_semantic_positives(table: &GeodesicTable, k: usize) -> Vec<usize> {
    select_positives_among(table, k, 0..table.len())
}

fn select_positives_among(
    table: &GeodesicTable,
    k: usize,
    candidates: impl Iterator<Item = usize>,
) -> Vec<usize> {
    let source = table.source;
    let mut rest: Vec<usize> = candidates.filter(|&j| j != source).collect();
    rest.sort_by(|&a, &b| {
        table.reachable[b]
            .cmp(&table.reachable[a])
            .then(
                table.distances[a]
                    .partial_cmp(&table.distances[b])
                    .unwrap_or(Ordering::Equal),
            )
            .then(a.cmp(&b))
    });
    let mut out = Vec::with_capacity(k);
    if k > 0 {
        out.push(source);
        out.extend(rest.into_iter().take(k - 1));
    }
    out
}

/// `exp((q·m)(m̂·m)·log(1/exp(g+1)))`, with the log evaluated as `−(g+1)`.
pub fn geodesic_weighting(q: &[f64], target: &[f64], m: &[f64], g: f64) -> f64 {
    libm::exp(dot(q, m) * dot(target, m) * -(g + 1.0))
}

/// Geodesic-guided contrastive loss.
///
/// Per query: `−log( Σ_{p∈P} exp(q·p/τ) / Σ_j term_j )` where `P` holds the
/// `topk` geodesically nearest moments to the target and `term_j` depends on
/// the configured weight and denominator mode. `tables[i]` must be the
/// geodesic table sourced at query `i`'s target.
pub fn geodesic_contrastive_loss(
    batch: &Batch,
    tables: &[GeodesicTable],
    cfg: &GclConfig,
) -> Result<LossPart> {
    let tau = cfg.temperature;
    check_temperature(tau)?;
    let q = &batch.queries;
    let m = &batch.moments;
    let nm = m.rows();
    if tables.len() != q.rows() {
        return Err(Error::Shape(format!(
            "{} geodesic tables for {} queries",
            tables.len(),
            q.rows()
        )));
    }
    if cfg.topk == 0 || cfg.topk > nm {
        return Err(Error::Domain(format!("topk must be in 1..={nm}, got {}", cfg.topk)));
    }
    let mut part = LossPart::zero(batch);
    let mut per_query = Vec::with_capacity(q.rows());
    let mut log_terms = vec![0.0; nm];
    // d(log term_j)/d(exponent) for the weighted exponent e_j = a·b·w
    let exponent_scale = match cfg.denominator {
        DenominatorMode::Literal => 1.0,
        DenominatorMode::Tempered => 1.0 / tau,
    };
    for (i, table) in tables.iter().enumerate() {
        let t = batch.targets[i];
        if table.source != t || table.len() != nm {
            return Err(Error::Domain(format!(
                "table {i} must be sourced at target {t} over {nm} moments"
            )));
        }
        let qi = q.row(i);
        let mhat = m.row(t);

        let positives = select_semantic_positives(table, cfg.topk);
        let mut pos_logits: Vec<f64> = positives.iter().map(|&p| dot(qi, m.row(p)) / tau).collect();
        let numerator = log_sum_exp(&pos_logits);

        for (j, lt) in log_terms.iter_mut().enumerate() {
            let mj = m.row(j);
            let a = dot(qi, mj);
            *lt = match cfg.weight {
                SimilarityWeight::Plain => a / tau,
                SimilarityWeight::Geodesic | SimilarityWeight::NegatedGeodesic => {
                    let e = a * dot(mhat, mj) * weight_factor(cfg.weight, table.distances[j]);
                    match cfg.denominator {
                        DenominatorMode::Literal => e - libm::log(tau),
                        DenominatorMode::Tempered => e / tau,
                    }
                }
            };
        }
        let denominator = log_sum_exp(&log_terms);
        per_query.push(denominator - numerator);

        softmax_in_place(&mut pos_logits, 1.0);
        for (&p, &pi) in positives.iter().zip(&pos_logits) {
            let g = -pi / tau;
            add_scaled(part.grad_queries.row_mut(i), g, m.row(p));
            add_scaled(part.grad_moments.row_mut(p), g, qi);
        }

        softmax_in_place(&mut log_terms, 1.0);
        for (j, &rho) in log_terms.iter().enumerate() {
            let mj = m.row(j);
            match cfg.weight {
                SimilarityWeight::Plain => {
                    let g = rho / tau;
                    add_scaled(part.grad_queries.row_mut(i), g, mj);
                    add_scaled(part.grad_moments.row_mut(j), g, qi);
                }
                SimilarityWeight::Geodesic | SimilarityWeight::NegatedGeodesic => {
                    let w = weight_factor(cfg.weight, table.distances[j]) * rho * exponent_scale;
                    let a = dot(qi, mj);
                    let b = dot(mhat, mj);
                    // e = a·b·w: de = w(b·da + a·db)
                    add_scaled(part.grad_queries.row_mut(i), w * b, mj);
                    add_scaled(part.grad_moments.row_mut(j), w * b, qi);
                    add_scaled(part.grad_moments.row_mut(j), w * a, mhat);
                    add_scaled(part.grad_moments.row_mut(t), w * a, mj);
                }
            }
        }
    }
    part.value = pairwise_sum(&per_query);
    Ok(part)
}

#[inline]
fn weight_factor(weight: SimilarityWeight, g: f64) -> f64 {
    match weight {
        SimilarityWeight::NegatedGeodesic => g + 1.0,
        _ => -(g + 1.0),
    }
}

/// Players of one video's interaction game, as rows of the batch.
///
/// `moment_rows` has `K` entries per query in `query_rows` order, so moment
/// `x` of the game belongs to query `x / K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SsiGroup {
    pub video: usize,
    pub query_rows: Vec<usize>,
    pub moment_rows: Vec<usize>,
    pub interactions: InteractionMatrix,
}

impl SsiGroup {
    pub fn per_query(&self) -> usize {
        self.moment_rows.len() / self.query_rows.len().max(1)
    }
}

/// Alignment game of the given rows of the batch.
pub fn alignment_game(batch: &Batch, query_rows: &[usize], moment_rows: &[usize]) -> Result<AlignmentGame> {
    let k = moment_rows.len() / query_rows.len().max(1);
    AlignmentGame::from_embeddings(
        &batch.moments.select_rows(moment_rows),
        &batch.queries.select_rows(query_rows),
        k,
    )
}

/// Builds the interaction game of every video in the batch and estimates its
/// soft labels. Each query samples the `K` moments of its own video that are
/// geodesically closest to its target (the target first). Video `v` draws
/// from seed `mix_seed(seed, v)`.
pub fn build_ssi_groups(
    batch: &Batch,
    tables: &[GeodesicTable],
    cfg: &GclConfig,
    seed: u64,
) -> Result<Vec<SsiGroup>> {
    let mut by_video: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &v) in batch.query_video.iter().enumerate() {
        by_video.entry(v).or_default().push(i);
    }
    let k = cfg.moments_per_query;
    let mut groups = Vec::with_capacity(by_video.len());
    for (video, query_rows) in by_video {
        let own = batch.video_moments(video);
        if k > own.len() {
            return Err(Error::Domain(format!(
                "video {video} has {} moments, fewer than K = {k}",
                own.len()
            )));
        }
        let mut moment_rows = Vec::with_capacity(k * query_rows.len());
        for &i in &query_rows {
            moment_rows.extend(select_positives_among(&tables[i], k, own.iter().copied()));
        }
        let game = alignment_game(batch, &query_rows, &moment_rows)?;
        let rng = RngStream::new(mix_seed(seed, video as u64), 0);
        let interactions = interaction_matrix(&game, cfg.ssi_mc_samples, &rng)?;
        groups.push(SsiGroup {
            video,
            query_rows,
            moment_rows,
            interactions,
        });
    }
    Ok(groups)
}

/// SplitMix64 finalizer over two words.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Cross-entropy between the interaction soft labels and the row-softmaxed
/// alignment scores, scaled by `1/(N_v·N_q)` per video.
pub fn ssi_loss(batch: &Batch, groups: &[SsiGroup]) -> Result<LossPart> {
    let q = &batch.queries;
    let m = &batch.moments;
    let mut part = LossPart::zero(batch);
    let mut per_video = Vec::with_capacity(groups.len());
    for group in groups {
        let nv = group.moment_rows.len();
        let nq = group.query_rows.len();
        let labels = &group.interactions.normalized;
        if labels.rows() != nv || labels.cols() != nq {
            return Err(Error::Shape(format!(
                "video {} labels are {}x{}, game is {nv}x{nq}",
                group.video,
                labels.rows(),
                labels.cols()
            )));
        }
        let scale = 1.0 / (nv * nq) as f64;
        let mut row = vec![0.0; nq];
        let mut terms = Vec::new();
        for (x, &mr) in group.moment_rows.iter().enumerate() {
            let hv = m.row(mr);
            for (y, &qr) in group.query_rows.iter().enumerate() {
                row[y] = dot(hv, q.row(qr));
            }
            let lse = log_sum_exp(&row);
            let mut label_mass = 0.0;
            for y in (0..nq).filter(|&y| group.interactions.is_included(x, y)) {
                terms.push(-scale * labels[(x, y)] * (row[y] - lse));
                label_mass += labels[(x, y)];
            }
            softmax_in_place(&mut row, 1.0);
            for (y, &qr) in group.query_rows.iter().enumerate() {
                let label = if group.interactions.is_included(x, y) {
                    labels[(x, y)]
                } else {
                    0.0
                };
                let g = scale * (label_mass * row[y] - label);
                if g != 0.0 {
                    add_scaled(part.grad_moments.row_mut(mr), g, q.row(qr));
                    add_scaled(part.grad_queries.row_mut(qr), g, hv);
                }
            }
        }
        per_video.push(pairwise_sum(&terms));
    }
    part.value = pairwise_sum(&per_video);
    Ok(part)
}

/// Discrete grounding loss: each query classifies its target among its own
/// video's moments.
pub fn grounding_loss(batch: &Batch, temperature: f64) -> Result<LossPart> {
    check_temperature(temperature)?;
    let q = &batch.queries;
    let m = &batch.moments;
    let mut part = LossPart::zero(batch);
    let mut per_query = Vec::with_capacity(q.rows());
    for i in 0..q.rows() {
        let qi = q.row(i);
        let own = batch.video_moments(batch.query_video[i]);
        let mut logits: Vec<f64> = own.iter().map(|&j| dot(qi, m.row(j)) / temperature).collect();
        let t = own
            .iter()
            .position(|&j| j == batch.targets[i])
            .expect("target validated to lie in its video");
        per_query.push(log_sum_exp(&logits) - logits[t]);
        softmax_in_place(&mut logits, 1.0);
        logits[t] -= 1.0;
        for (&j, &g) in own.iter().zip(&logits) {
            let g = g / temperature;
            add_scaled(part.grad_queries.row_mut(i), g, m.row(j));
            add_scaled(part.grad_moments.row_mut(j), g, qi);
        }
    }
    part.value = pairwise_sum(&per_query);
    Ok(part)
}

/// Gradient-stopped inputs of the geodesic and interaction terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LossAux {
    pub tables: Vec<GeodesicTable>,
    pub groups: Vec<SsiGroup>,
}

/// Builds the moment graph over the batch with geodesic tables from every
/// target. Per-video games and labels are added when the interaction term is on.
pub fn prepare_aux(batch: &Batch, cfg: &GclConfig, seed: u64) -> Result<LossAux> {
    let normalized;
    let moments = if batch.moments.is_normalized() {
        &batch.moments
    } else {
        normalized = EmbeddingMatrix::unit(batch.moments.matrix().clone())?;
        &normalized
    };
    let n = cfg.neighbors.min(moments.rows().saturating_sub(1)).max(1);
    let (_, tables) = geodesic::geodesics_from_targets(moments, &batch.targets, n, cfg.g_cap)?;
    let groups = if cfg.enable_ssi {
        build_ssi_groups(batch, &tables, cfg, seed)?
    } else {
        Vec::new()
    };
    Ok(LossAux { tables, groups })
}

/// Full objective with freshly computed auxiliary inputs.
pub fn total_loss(batch: &Batch, cfg: &GclConfig, mode: Mode, seed: u64) -> Result<LossBundle> {
    cfg.validate()?;
    let aux = match mode {
        Mode::G2l if cfg.enable_gcl || cfg.enable_ssi => Some(prepare_aux(batch, cfg, seed)?),
        _ => None,
    };
    total_loss_with_aux(batch, cfg, mode, aux.as_ref())
}

/// Full objective given precomputed auxiliary inputs. `aux` is only read in
/// g2l mode with at least one of its terms enabled.
pub fn total_loss_with_aux(
    batch: &Batch,
    cfg: &GclConfig,
    mode: Mode,
    aux: Option<&LossAux>,
) -> Result<LossBundle> {
    let vg = grounding_loss(batch, cfg.grounding_temperature)?;
    let mut parts = vec![&vg];
    let mut bundle = LossBundle {
        l_vg: vg.value,
        l_vcl: 0.0,
        l_gcl: 0.0,
        l_ssi: 0.0,
        l_total: 0.0,
        grad_queries: Matrix::zeros(0, 0),
        grad_moments: Matrix::zeros(0, 0),
    };
    let vcl;
    let gcl;
    let ssi;
    match mode {
        Mode::Baseline => {
            vcl = vanilla_contrastive_loss(batch, cfg.temperature)?;
            bundle.l_vcl = vcl.value;
            parts.push(&vcl);
        }
        Mode::G2l => {
            let needs_aux = cfg.enable_gcl || cfg.enable_ssi;
            let aux = match (needs_aux, aux) {
                (true, Some(a)) => Some(a),
                (true, None) => {
                    return Err(Error::Domain("g2l objective needs geodesic tables".into()))
                }
                (false, _) => None,
            };
            if cfg.enable_gcl {
                gcl = geodesic_contrastive_loss(batch, &aux.expect("checked").tables, cfg)?;
                bundle.l_gcl = gcl.value;
                parts.push(&gcl);
            }
            if cfg.enable_ssi {
                ssi = ssi_loss(batch, &aux.expect("checked").groups)?;
                bundle.l_ssi = ssi.value;
                parts.push(&ssi);
            }
        }
    }
    let mut grad_q = Matrix::zeros(batch.queries.rows(), batch.queries.cols());
    let mut grad_m = Matrix::zeros(batch.moments.rows(), batch.moments.cols());
    for p in &parts {
        grad_q.axpy(1.0, &p.grad_queries)?;
        grad_m.axpy(1.0, &p.grad_moments)?;
    }
    bundle.l_total = parts.iter().map(|p| p.value).sum();
    if !bundle.l_total.is_finite() || !grad_q.is_finite() || !grad_m.is_finite() {
        return Err(Error::NonFinite("loss or gradient".into()));
    }
    bundle.grad_queries = grad_q;
    bundle.grad_moments = grad_m;
    Ok(bundle)
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("temperature must be positive, got {t}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{finite_diff_gradient, max_relative_error, DEFAULT_FD_STEP};

    fn unit_rows(rows: &[&[f64]]) -> EmbeddingMatrix {
        EmbeddingMatrix::unit(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    fn table(source: usize, distances: Vec<f64>, g_cap: f64) -> GeodesicTable {
        let reachable = distances.iter().map(|&d| d < g_cap).collect();
        GeodesicTable {
            source,
            parent: vec![None; distances.len()],
            distances,
            reachable,
        }
    }

    #[test]
    fn vcl_two_moment_example() {
        let batch = Batch::new(
            unit_rows(&[&[1.0, 0.0]]),
            unit_rows(&[&[1.0, 0.0], &[0.0, 1.0]]),
            vec![0],
            vec![0],
            vec![0, 0],
        )
        .unwrap();
        let e = libm::exp(1.0);
        let l = vanilla_contrastive_loss(&batch, 1.0).unwrap();
        assert!((l.value + libm::log(e / (e + 1.0))).abs() < 1e-15);
        assert!((l.value - 0.3133).abs() < 1e-4);
    }

    #[test]
    fn uniform_similarities_give_log_count() {
        // queries orthogonal to every moment
        let batch = Batch::new(
            unit_rows(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, -1.0]]),
            unit_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[-1.0, 0.0, 0.0], &[0.0, -1.0, 0.0]]),
            vec![0, 3],
            vec![0, 1],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let l = vanilla_contrastive_loss(&batch, 0.37).unwrap();
        assert!((l.value - 2.0 * libm::log(4.0)).abs() < 1e-12);
        let g = grounding_loss(&batch, 0.2).unwrap();
        assert!((g.value - 2.0 * libm::log(2.0)).abs() < 1e-12);
    }

    #[test]
    fn grounding_sixteen_uniform_moments() {
        let mut rows = Vec::new();
        for j in 0..16 {
            let mut r = vec![0.0; 17];
            r[j] = 1.0;
            rows.push(r);
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let mut qrow = vec![0.0; 17];
        qrow[16] = 1.0;
        let batch = Batch::new(
            unit_rows(&[&qrow]),
            unit_rows(&refs),
            vec![5],
            vec![0],
            vec![0; 16],
        )
        .unwrap();
        let g = grounding_loss(&batch, 0.1).unwrap();
        assert!((g.value - libm::log(16.0)).abs() < 1e-12);
        assert!((g.value - 2.7726).abs() < 1e-4);
    }

    #[test]
    fn positives_examples() {
        let t = table(0, vec![0.0, 0.2, 0.9, 10.0], 10.0);
        assert_eq!(select_semantic_positives(&t, 1), vec![0]);
        assert_eq!(select_semantic_positives(&t, 2), vec![0, 1]);
        let mut all = select_semantic_positives(&t, 4);
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);

        // a duplicate at distance 0 with a lower index does not displace the source
        let t = table(2, vec![0.0, 0.5, 0.0], 10.0);
        assert_eq!(select_semantic_positives(&t, 1), vec![2]);
        assert_eq!(select_semantic_positives(&t, 2), vec![2, 0]);
    }

    #[test]
    fn weighting_examples() {
        let q = [0.6, 0.8];
        let mhat = [1.0, 0.0];
        let s = geodesic_weighting(&q, &mhat, &mhat, 0.0);
        assert!((s - libm::exp(-0.6)).abs() < 1e-15);
        assert_eq!(geodesic_weighting(&[0.0, 1.0], &mhat, &mhat, 3.0), 1.0);
        let s = geodesic_weighting(&mhat, &mhat, &mhat, 10.0);
        assert!((s - libm::exp(-11.0)).abs() < 1e-20);
        assert!((s - 1.67e-5).abs() < 1e-7);
    }

    #[test]
    fn gcl_scalar_example() {
        // q orthogonal to both moments, moments orthogonal to each other
        let batch = Batch::new(
            unit_rows(&[&[0.0, 0.0, 1.0]]),
            unit_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]),
            vec![0],
            vec![0],
            vec![0, 0],
        )
        .unwrap();
        let cfg = GclConfig {
            temperature: 1.0,
            topk: 2,
            ..GclConfig::default()
        };
        let tables = vec![table(0, vec![0.0, 0.0], 10.0)];
        let l = geodesic_contrastive_loss(&batch, &tables, &cfg).unwrap();
        assert!(l.value.abs() < 1e-15);
    }

    #[test]
    fn gcl_rejects_mismatched_tables() {
        let batch = Batch::new(
            unit_rows(&[&[0.0, 1.0]]),
            unit_rows(&[&[1.0, 0.0], &[0.0, 1.0]]),
            vec![0],
            vec![0],
            vec![0, 0],
        )
        .unwrap();
        let cfg = GclConfig::default();
        assert!(geodesic_contrastive_loss(&batch, &[table(1, vec![0.0, 0.0], 10.0)], &cfg).is_err());
        assert!(geodesic_contrastive_loss(&batch, &[], &cfg).is_err());
    }

    #[test]
    fn batch_validation() {
        let q = unit_rows(&[&[1.0, 0.0]]);
        let m = unit_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]]);
        assert!(Batch::new(q.clone(), m.clone(), vec![2], vec![0], vec![0, 0, 1]).is_err());
        assert!(Batch::new(q.clone(), m.clone(), vec![3], vec![0], vec![0, 0, 1]).is_err());
        // video 1 has a single moment
        assert!(Batch::new(q.clone(), m.clone(), vec![2], vec![1], vec![0, 0, 1]).is_err());
        assert!(Batch::new(q, m, vec![1], vec![0], vec![0, 0, 1]).is_ok());
    }

    #[test]
    fn ssi_point_label() {
        let batch = Batch::new(
            unit_rows(&[&[1.0, 0.0], &[0.0, 1.0]]),
            unit_rows(&[&[0.6, 0.8], &[1.0, 0.0], &[0.0, 1.0]]),
            vec![0, 2],
            vec![0, 0],
            vec![0, 0, 0],
        )
        .unwrap();
        let mut raw = Matrix::zeros(2, 2);
        raw.data_mut().fill(f64::NEG_INFINITY);
        raw[(0, 0)] = 50.0;
        raw[(1, 1)] = -50.0;
        let interactions = InteractionMatrix::from_raw(raw).unwrap();
        let group = SsiGroup {
            video: 0,
            query_rows: vec![0, 1],
            moment_rows: vec![0, 2],
            interactions,
        };
        let l = ssi_loss(&batch, &[group]).unwrap();
        // ã_00 = softmax over (0.6, 0.8) at index 0
        let a00 = libm::exp(0.6) / (libm::exp(0.6) + libm::exp(0.8));
        assert!((l.value + 0.25 * libm::log(a00)).abs() < 1e-12);
    }

    #[test]
    fn ssi_gradient_matches_finite_differences() {
        let batch = Batch::new(
            unit_rows(&[&[0.6, 0.8, 0.0], &[0.0, 0.6, 0.8]]),
            unit_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]),
            vec![0, 2],
            vec![0, 0],
            vec![0, 0, 0],
        )
        .unwrap();
        let raw = Matrix::from_vec(4, 2, vec![0.3, f64::NEG_INFINITY, -0.1, f64::NEG_INFINITY, f64::NEG_INFINITY, 0.7, f64::NEG_INFINITY, 0.2]).unwrap();
        let group = SsiGroup {
            video: 0,
            query_rows: vec![0, 1],
            moment_rows: vec![0, 1, 2, 1],
            interactions: InteractionMatrix::from_raw(raw).unwrap(),
        };
        let groups = [group];
        let part = ssi_loss(&batch, &groups).unwrap();
        let fd_q = finite_diff_gradient(
            |x| ssi_loss(&batch.with_embeddings(x.clone(), batch.moments().matrix().clone())?, &groups).map(|p| p.value),
            batch.queries().matrix(),
            DEFAULT_FD_STEP,
        )
        .unwrap();
        let fd_m = finite_diff_gradient(
            |x| ssi_loss(&batch.with_embeddings(batch.queries().matrix().clone(), x.clone())?, &groups).map(|p| p.value),
            batch.moments().matrix(),
            DEFAULT_FD_STEP,
        )
        .unwrap();
        assert!(max_relative_error(&part.grad_queries, &fd_q) < 1e-7);
        assert!(max_relative_error(&part.grad_moments, &fd_m) < 1e-7);
    }

    #[test]
    fn baseline_and_g2l_share_grounding_term() {
        let batch = Batch::new(
            unit_rows(&[&[0.6, 0.8, 0.0], &[0.0, 0.6, 0.8]]),
            unit_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.8, 0.6]]),
            vec![0, 2],
            vec![0, 0],
            vec![0, 0, 0, 0],
        )
        .unwrap();
        let cfg = GclConfig {
            neighbors: 2,
            topk: 2,
            moments_per_query: 2,
            ..GclConfig::default()
        };
        let base = total_loss(&batch, &cfg, Mode::Baseline, 1).unwrap();
        let full = total_loss(&batch, &cfg, Mode::G2l, 1).unwrap();
        assert_eq!(base.l_vg, full.l_vg);
        assert_eq!(base.l_total, base.l_vg + base.l_vcl);
        assert!((full.l_total - (full.l_vg + full.l_gcl + full.l_ssi)).abs() < 1e-12);
    }
}
