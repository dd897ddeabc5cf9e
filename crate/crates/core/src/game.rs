//! Cooperative games with their Shapley values and interactions.
//!
//! Exact routines enumerate coalitions and are limited to
//! [`EXACT_PLAYER_LIMIT`] players. The moment/query alignment game scores a
//! coalition with the symmetric fine-grained similarity ψ, and pairwise
//! interactions in it are estimated by Monte-Carlo over random coalitions.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numcore::{dot, EmbeddingMatrix, Matrix, RngStream};

/// Largest game (or reduced game) that exact enumeration accepts.
pub const EXACT_PLAYER_LIMIT: usize = 20;

/// Default number of moments sampled per query.
pub const DEFAULT_MOMENTS_PER_QUERY: usize = 3;

/// A transferable-utility game. `members[i]` is true when player `i` is in the
/// coalition.
pub trait Game {
    fn players(&self) -> usize;
    fn score(&self, members: &[bool]) -> f64;
}

impl<G: Game + ?Sized> Game for &G {
    fn players(&self) -> usize {
        (**self).players()
    }
    fn score(&self, members: &[bool]) -> f64 {
        (**self).score(members)
    }
}

impl<G: Game + ?Sized> Game for Box<G> {
    fn players(&self) -> usize {
        (**self).players()
    }
    fn score(&self, members: &[bool]) -> f64 {
        (**self).score(members)
    }
}

/// Game given by an explicit value per coalition bitmask (bit `i` = player `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct TableGame {
    players: usize,
    values: Vec<f64>,
}

impl TableGame {
    pub fn new(players: usize, values: Vec<f64>) -> Result<Self> {
        if players > EXACT_PLAYER_LIMIT {
            return Err(Error::Capacity {
                players,
                limit: EXACT_PLAYER_LIMIT,
            });
        }
        if values.len() != 1usize << players {
            return Err(Error::Shape(format!(
                "{players} players need {} coalition values, got {}",
                1usize << players,
                values.len()
            )));
        }
        if !values[0].is_finite() {
            return Err(Error::NonFinite("value of the empty coalition".into()));
        }
        Ok(TableGame { players, values })
    }

    /// Tabulates any game by evaluating every coalition once.
    pub fn tabulate<G: Game>(game: &G) -> Result<Self> {
        let n = game.players();
        check_exact(n)?;
        let mut members = vec![false; n];
        let values = (0..1usize << n)
            .map(|mask| {
                fill_members(mask, &mut members);
                game.score(&members)
            })
            .collect();
        TableGame::new(n, values)
    }

    /// Values drawn uniformly from `[-1, 1)`.
    pub fn random(players: usize, rng: &mut RngStream) -> Result<Self> {
        check_exact(players)?;
        let values = (0..1usize << players)
            .map(|_| 2.0 * rng.uniform() - 1.0)
            .collect();
        TableGame::new(players, values)
    }

    pub fn value(&self, mask: usize) -> f64 {
        self.values[mask]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Game for TableGame {
    fn players(&self) -> usize {
        self.players
    }

    fn score(&self, members: &[bool]) -> f64 {
        self.values[to_mask(members)]
    }
}

/// Game backed by a closure.
pub struct FnGame<F> {
    players: usize,
    f: F,
}

impl<F: Fn(&[bool]) -> f64> FnGame<F> {
    pub fn new(players: usize, f: F) -> Self {
        FnGame { players, f }
    }
}

impl<F: Fn(&[bool]) -> f64> Game for FnGame<F> {
    fn players(&self) -> usize {
        self.players
    }

    fn score(&self, members: &[bool]) -> f64 {
        (self.f)(members)
    }
}

/// Game whose players are groups of another game's players. A group is
/// present when its slot is present; players outside every group are absent.
struct GroupedGame<'a, G: Game + ?Sized> {
    inner: &'a G,
    groups: Vec<Vec<usize>>,
}

impl<G: Game + ?Sized> Game for GroupedGame<'_, G> {
    fn players(&self) -> usize {
        self.groups.len()
    }

    fn score(&self, members: &[bool]) -> f64 {
        let mut inner = vec![false; self.inner.players()];
        for (group, _) in self.groups.iter().zip(members).filter(|(_, &m)| m) {
            for &p in group {
                inner[p] = true;
            }
        }
        self.inner.score(&inner)
    }
}

fn check_exact(players: usize) -> Result<()> {
    if players > EXACT_PLAYER_LIMIT {
        return Err(Error::Capacity {
            players,
            limit: EXACT_PLAYER_LIMIT,
        });
    }
    Ok(())
}

#[inline]
fn fill_members(mask: usize, members: &mut [bool]) {
    for (i, m) in members.iter_mut().enumerate() {
        *m = mask >> i & 1 == 1;
    }
}

#[inline]
fn to_mask(members: &[bool]) -> usize {
    members
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .fold(0, |acc, (i, _)| acc | 1 << i)
}

/// Shapley coefficient `|U|!(n−|U|−1)!/n!` for a coalition of `u_size`
/// players drawn from the other `n_players − 1`.
pub fn coalition_weight(u_size: usize, n_players: usize) -> Result<f64> {
    if u_size >= n_players {
        return Err(Error::Domain(format!(
            "coalition size {u_size} must be below the player count {n_players}"
        )));
    }
    // 1 / (n · C(n−1, u)), with the binomial accumulated in floating point.
    let others = n_players - 1;
    let k = u_size.min(others - u_size);
    let mut binom = 1.0f64;
    for t in 0..k {
        binom = binom * (others - t) as f64 / (t + 1) as f64;
    }
    Ok(1.0 / (n_players as f64 * binom))
}

/// Exact Shapley value of one player by enumerating every coalition of the
/// others.
pub fn shapley_value_exact<G: Game + ?Sized>(game: &G, player: usize) -> Result<f64> {
    let n = game.players();
    check_exact(n)?;
    if player >= n {
        return Err(Error::Domain(format!(
            "player {player} out of range for {n} players"
        )));
    }
    let weights = (0..n)
        .map(|s| coalition_weight(s, n))
        .collect::<Result<Vec<_>>>()?;
    let bit = 1usize << player;
    let mut members = vec![false; n];
    let mut total = 0.0;
    for mask in (0..1usize << n).filter(|m| m & bit == 0) {
        fill_members(mask, &mut members);
        let without = game.score(&members);
        members[player] = true;
        let with = game.score(&members);
        total += weights[mask.count_ones() as usize] * (with - without);
    }
    Ok(total)
}

/// Shapley values of every player from a single tabulation of the game.
pub fn shapley_values_exact<G: Game + ?Sized>(game: &G) -> Result<Vec<f64>> {
    let n = game.players();
    check_exact(n)?;
    let mut members = vec![false; n];
    let values: Vec<f64> = (0..1usize << n)
        .map(|mask| {
            fill_members(mask, &mut members);
            game.score(&members)
        })
        .collect();
    let weights = (0..n)
        .map(|s| coalition_weight(s, n))
        .collect::<Result<Vec<_>>>()?;
    let mut phi = vec![0.0; n];
    for mask in 0..1usize << n {
        let size = mask.count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            let bit = 1 << i;
            if mask & bit == 0 {
                *p += weights[size] * (values[mask | bit] - values[mask]);
            }
        }
    }
    Ok(phi)
}

/// Shapley interaction of a coalition: the value of the coalition acting as a
/// single merged player, minus the values of its members each playing alone
/// against the same remaining players.
pub fn shapley_interaction_exact<G: Game + ?Sized>(game: &G, coalition: &[usize]) -> Result<f64> {
    let n = game.players();
    if coalition.is_empty() {
        return Err(Error::Domain("interaction coalition must be nonempty".into()));
    }
    let mut in_coalition = vec![false; n];
    for &p in coalition {
        if p >= n {
            return Err(Error::Domain(format!(
                "player {p} out of range for {n} players"
            )));
        }
        if in_coalition[p] {
            return Err(Error::Domain(format!("player {p} repeated in coalition")));
        }
        in_coalition[p] = true;
    }
    let rest: Vec<Vec<usize>> = (0..n)
        .filter(|&p| !in_coalition[p])
        .map(|p| vec![p])
        .collect();
    check_exact(rest.len() + 1)?;

    let mut groups = rest.clone();
    groups.push(coalition.to_vec());
    let merged = GroupedGame {
        inner: game,
        groups,
    };
    let mut interaction = shapley_value_exact(&merged, rest.len())?;

    for &i in coalition {
        let mut groups = rest.clone();
        groups.push(vec![i]);
        let alone = GroupedGame {
            inner: game,
            groups,
        };
        interaction -= shapley_value_exact(&alone, rest.len())?;
    }
    Ok(interaction)
}

/// Expectation form of the pair interaction, evaluated exhaustively: average
/// over coalition sizes `C ∈ {0,…,n−2}` (uniform), then over all coalitions
/// `U` of that size drawn from the other players, of
/// `f(U∪{i,j}) − f(U∪{i}) − f(U∪{j}) + f(U)`.
pub fn pair_interaction_expectation<G: Game + ?Sized>(game: &G, i: usize, j: usize) -> Result<f64> {
    let n = game.players();
    check_exact(n)?;
    if i >= n || j >= n || i == j {
        return Err(Error::Domain(format!(
            "pair ({i}, {j}) invalid for {n} players"
        )));
    }
    let others: Vec<usize> = (0..n).filter(|&p| p != i && p != j).collect();
    let m = others.len();
    let mut members = vec![false; n];
    let mut sums = vec![0.0; m + 1];
    let mut counts = vec![0usize; m + 1];
    for sub in 0..1usize << m {
        members.iter_mut().for_each(|b| *b = false);
        for (bit, &p) in others.iter().enumerate() {
            members[p] = sub >> bit & 1 == 1;
        }
        let size = sub.count_ones() as usize;
        sums[size] += mixed_difference(game, &mut members, i, j);
        counts[size] += 1;
    }
    let per_size: f64 = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .sum();
    Ok(per_size / (m + 1) as f64)
}

/// `f(U∪{i,j}) − f(U∪{i}) − f(U∪{j}) + f(U)` with `U` given by `members`
/// (which must have `i` and `j` cleared); restores `members` on return.
fn mixed_difference<G: Game + ?Sized>(game: &G, members: &mut [bool], i: usize, j: usize) -> f64 {
    let base = game.score(members);
    members[i] = true;
    let with_i = game.score(members);
    members[j] = true;
    let with_both = game.score(members);
    members[i] = false;
    let with_j = game.score(members);
    members[j] = false;
    with_both - with_i - with_j + base
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Sampled pair interaction: draws a coalition size uniformly from
/// `{0,…,n−2}`, then a uniform coalition of that size from the other players,
/// and averages the mixed difference.
pub fn sampled_pair_interaction<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
    samples: usize,
    rng: &mut RngStream,
) -> Result<InteractionEstimate> {
    let n = game.players();
    if samples == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    if i >= n || j >= n || i == j {
        return Err(Error::Domain(format!(
            "pair ({i}, {j}) invalid for {n} players"
        )));
    }
    let mut others: Vec<usize> = (0..n).filter(|&p| p != i && p != j).collect();
    let m = others.len();
    let mut members = vec![false; n];
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for t in 0..samples {
        let size = rng.below(m + 1);
        for k in 0..size {
            let pick = k + rng.below(m - k);
            others.swap(k, pick);
        }
        for &p in &others[..size] {
            members[p] = true;
        }
        let delta = mixed_difference(game, &mut members, i, j);
        for &p in &others[..size] {
            members[p] = false;
        }
        let count = (t + 1) as f64;
        let d = delta - mean;
        mean += d / count;
        m2 += d * (delta - mean);
    }
    let std_error = if samples > 1 {
        libm::sqrt(m2 / (samples - 1) as f64 / samples as f64)
    } else {
        0.0
    };
    Ok(InteractionEstimate {
        mean,
        std_error,
        samples,
    })
}

/// Sampled Shapley value: a uniform coalition size from `{0,…,n−1}`, then a
/// uniform coalition of that size from the other players. Unbiased for the
/// exact value because that two-stage draw reproduces the Shapley weights.
pub fn shapley_value_sampled<G: Game + ?Sized>(
    game: &G,
    player: usize,
    samples: usize,
    rng: &mut RngStream,
) -> Result<InteractionEstimate> {
    let n = game.players();
    if samples == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    if player >= n {
        return Err(Error::Domain(format!(
            "player {player} out of range for {n} players"
        )));
    }
    let mut others: Vec<usize> = (0..n).filter(|&p| p != player).collect();
    let m = others.len();
    let mut members = vec![false; n];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for t in 0..samples {
        let size = rng.below(m + 1);
        for k in 0..size {
            let pick = k + rng.below(m - k);
            others.swap(k, pick);
        }
        for &p in &others[..size] {
            members[p] = true;
        }
        let without = game.score(&members);
        members[player] = true;
        let delta = game.score(&members) - without;
        members[player] = false;
        for &p in &others[..size] {
            members[p] = false;
        }
        let count = (t + 1) as f64;
        let d = delta - mean;
        mean += d / count;
        m2 += d * (delta - mean);
    }
    let std_error = if samples > 1 {
        libm::sqrt(m2 / (samples - 1) as f64 / samples as f64)
    } else {
        0.0
    };
    Ok(InteractionEstimate {
        mean,
        std_error,
        samples,
    })
}

/// Moment/query players of one video with their alignment scores.
///
/// Players `0..N_v` are moments and `N_v..N_v+N_q` are queries. Moments are
/// grouped by the query that sampled them: rows `y·K..(y+1)·K` belong to
/// query `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentGame {
    alignment: Matrix,
    per_query: usize,
}

impl AlignmentGame {
    /// `A[x][y] = h^V_x · h^Q_y`.
    pub fn from_embeddings(
        moments: &EmbeddingMatrix,
        queries: &EmbeddingMatrix,
        per_query: usize,
    ) -> Result<Self> {
        if moments.dim() != queries.dim() {
            return Err(Error::Shape(format!(
                "moment dim {} differs from query dim {}",
                moments.dim(),
                queries.dim()
            )));
        }
        let mut a = Matrix::zeros(moments.rows(), queries.rows());
        for x in 0..moments.rows() {
            for y in 0..queries.rows() {
                a[(x, y)] = dot(moments.row(x), queries.row(y));
            }
        }
        Self::from_alignment(a, per_query)
    }

    pub fn from_alignment(alignment: Matrix, per_query: usize) -> Result<Self> {
        if per_query == 0 {
            return Err(Error::Domain("moments per query must be at least 1".into()));
        }
        if alignment.cols() == 0 || alignment.rows() != per_query * alignment.cols() {
            return Err(Error::Shape(format!(
                "alignment has {} moment rows, expected {} x {} queries",
                alignment.rows(),
                per_query,
                alignment.cols()
            )));
        }
        if !alignment.is_finite() {
            return Err(Error::NonFinite("alignment scores".into()));
        }
        Ok(AlignmentGame {
            alignment,
            per_query,
        })
    }

    pub fn moments(&self) -> usize {
        self.alignment.rows()
    }

    pub fn queries(&self) -> usize {
        self.alignment.cols()
    }

    pub fn per_query(&self) -> usize {
        self.per_query
    }

    pub fn alignment(&self) -> &Matrix {
        &self.alignment
    }

    /// Player index of query `y`.
    pub fn query_player(&self, y: usize) -> usize {
        self.moments() + y
    }

    /// Whether moment `x` was sampled for query `y`.
    pub fn is_sampled_pair(&self, x: usize, y: usize) -> bool {
        x / self.per_query == y
    }
}

impl Game for AlignmentGame {
    fn players(&self) -> usize {
        self.moments() + self.queries()
    }

    fn score(&self, members: &[bool]) -> f64 {
        psi_game_score(self, members)
    }
}

/// Symmetric fine-grained similarity ψ = (ψ₁ + ψ₂)/2 over the active players.
///
/// ψ₁ averages, over active moments, the largest entry of the moment's row of
/// the alignment matrix after a softmax over the active queries; ψ₂ is the
/// same with roles swapped. Inactive players are excluded from the softmax.
/// A coalition missing either modality scores 0.
pub fn psi_game_score(ag: &AlignmentGame, active: &[bool]) -> f64 {
    let nv = ag.moments();
    let (moments, queries) = active.split_at(nv);
    let a = &ag.alignment;
    let active_x = moments.iter().filter(|&&m| m).count();
    let active_y = queries.iter().filter(|&&m| m).count();
    if active_x == 0 || active_y == 0 {
        return 0.0;
    }

    // max of a softmax row is exp(0)/Σ exp(a − max)
    let mut psi1 = 0.0;
    for x in (0..nv).filter(|&x| moments[x]) {
        let row = a.row(x);
        let active_row = || row.iter().zip(queries).filter(|(_, &m)| m).map(|(v, _)| *v);
        let max = active_row().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = active_row().map(|v| libm::exp(v - max)).sum();
        psi1 += 1.0 / z;
    }
    psi1 /= active_x as f64;

    let mut psi2 = 0.0;
    for y in (0..queries.len()).filter(|&y| queries[y]) {
        let active_col = || (0..nv).filter(|&x| moments[x]).map(|x| a[(x, y)]);
        let max = active_col().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = active_col().map(|v| libm::exp(v - max)).sum();
        psi2 += 1.0 / z;
    }
    psi2 /= active_y as f64;

    0.5 * (psi1 + psi2)
}

/// Sampled semantic interaction between moment `x` and query `y`.
pub fn semantic_interaction_sampled(
    ag: &AlignmentGame,
    x: usize,
    y: usize,
    samples: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    semantic_interaction_estimate(ag, x, y, samples, rng).map(|e| e.mean)
}

pub fn semantic_interaction_estimate(
    ag: &AlignmentGame,
    x: usize,
    y: usize,
    samples: usize,
    rng: &mut RngStream,
) -> Result<InteractionEstimate> {
    if x >= ag.moments() || y >= ag.queries() {
        return Err(Error::Domain(format!(
            "pair ({x}, {y}) out of range for {} moments and {} queries",
            ag.moments(),
            ag.queries()
        )));
    }
    sampled_pair_interaction(ag, x, ag.query_player(y), samples, rng)
}

/// Raw pair interactions and their normalized soft labels for one video.
///
/// Excluded pairs hold `-∞` in `raw` and `0` in `normalized`; included
/// normalized entries are a softmax over the included raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub raw: Matrix,
    pub normalized: Matrix,
}

impl InteractionMatrix {
    pub fn from_raw(raw: Matrix) -> Result<Self> {
        if raw.data().iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::NonFinite("raw interaction values".into()));
        }
        let max = raw
            .data()
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::Domain("no included interaction pairs".into()));
        }
        let mut normalized = Matrix::zeros(raw.rows(), raw.cols());
        let mut total = 0.0;
        for (n, r) in normalized.data_mut().iter_mut().zip(raw.data()) {
            if r.is_finite() {
                *n = libm::exp(r - max);
                total += *n;
            }
        }
        normalized.data_mut().iter_mut().for_each(|v| *v /= total);
        Ok(InteractionMatrix { raw, normalized })
    }

    pub fn is_included(&self, x: usize, y: usize) -> bool {
        self.raw[(x, y)].is_finite()
    }
}

/// Sampled interactions for every (moment, query) pair where the moment was
/// sampled for that query. Pair `(x, y)` draws from the stream
/// `x·N_q + y` of `rng`'s seed, so results do not depend on evaluation order.
pub fn interaction_matrix(
    ag: &AlignmentGame,
    samples: usize,
    rng: &RngStream,
) -> Result<InteractionMatrix> {
    let (nv, nq) = (ag.moments(), ag.queries());
    let mut raw = Matrix::zeros(nv, nq);
    raw.data_mut().fill(f64::NEG_INFINITY);
    for y in 0..nq {
        for x in y * ag.per_query()..(y + 1) * ag.per_query() {
            let mut stream = rng.derive((x * nq + y) as u64);
            raw[(x, y)] = semantic_interaction_sampled(ag, x, y, samples, &mut stream)?;
        }
    }
    InteractionMatrix::from_raw(raw)
}

/// Largest violation of each Shapley axiom observed by [`check_axioms`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxiomReport {
    pub efficiency: f64,
    pub dummy: f64,
    pub symmetry: f64,
    pub linearity: f64,
}

impl AxiomReport {
    pub fn max_violation(&self) -> f64 {
        self.efficiency
            .max(self.dummy)
            .max(self.symmetry)
            .max(self.linearity)
    }
}

/// Player-limit for [`check_axioms`]; the dummy check adds one player.
pub const AXIOM_PLAYER_LIMIT: usize = 10;

/// Extends `game` with a dummy player (the last index) that adds exactly
/// `value` to every coalition. The game is shifted so the empty coalition
/// scores 0, which makes `value` the dummy's standalone worth.
pub fn with_dummy<G: Game>(game: G, value: f64) -> impl Game {
    let n = game.players();
    let empty = game.score(&vec![false; n]);
    FnGame::new(n + 1, move |members: &[bool]| {
        let bonus = if members[n] { value } else { 0.0 };
        game.score(&members[..n]) - empty + bonus
    })
}

/// Averages `game` with its image under swapping players `i` and `j`, making
/// the two interchangeable.
pub fn symmetrized<G: Game>(game: G, i: usize, j: usize) -> impl Game {
    let n = game.players();
    FnGame::new(n, move |members: &[bool]| {
        let mut swapped = members.to_vec();
        swapped.swap(i, j);
        0.5 * (game.score(members) + game.score(&swapped))
    })
}

/// Checks Efficiency on `game` itself and, over `trials` random
/// constructions, Dummy (injected dummy player), Symmetry (symmetrized random
/// pair) and Linearity (`game` plus a random game).
pub fn check_axioms<G: Game + ?Sized>(
    game: &G,
    trials: usize,
    rng: &mut RngStream,
) -> Result<AxiomReport> {
    let n = game.players();
    if n > AXIOM_PLAYER_LIMIT {
        return Err(Error::Capacity {
            players: n,
            limit: AXIOM_PLAYER_LIMIT,
        });
    }
    if n == 0 {
        return Ok(AxiomReport::default());
    }
    let base = TableGame::tabulate(&game)?;
    let phi = shapley_values_exact(&base)?;
    let mut report = AxiomReport {
        efficiency: libm::fabs(
            phi.iter().sum::<f64>() - (base.value((1 << n) - 1) - base.value(0)),
        ),
        ..AxiomReport::default()
    };

    for _ in 0..trials {
        let value = 2.0 * rng.uniform() - 1.0;
        let extended = with_dummy(&base, value);
        let standalone = {
            let mut only = vec![false; n + 1];
            only[n] = true;
            extended.score(&only)
        };
        let phi_dummy = shapley_value_exact(&extended, n)?;
        report.dummy = report.dummy.max(libm::fabs(phi_dummy - standalone));

        if n >= 2 {
            let i = rng.below(n);
            let j = (i + 1 + rng.below(n - 1)) % n;
            let sym = symmetrized(&base, i, j);
            let phi_sym = shapley_values_exact(&sym)?;
            report.symmetry = report.symmetry.max(libm::fabs(phi_sym[i] - phi_sym[j]));
        }

        let other = TableGame::random(n, rng)?;
        let sum = TableGame::new(
            n,
            base.values()
                .iter()
                .zip(other.values())
                .map(|(a, b)| a + b)
                .collect(),
        )?;
        let phi_other = shapley_values_exact(&other)?;
        let phi_sum = shapley_values_exact(&sum)?;
        for k in 0..n {
            report.linearity = report
                .linearity
                .max(libm::fabs(phi_sum[k] - phi[k] - phi_other[k]));
        }
    }
    Ok(report)
}
