//! Exact data-Shapley and leave-one-out valuation over deterministic
//! learners.
//!
//! Players are agents, each owning one or more dataset rows; the
//! performance function `V(S)` is the test accuracy of a learner trained on
//! the union of a coalition's rows. The exact engine enumerates all `2^n`
//! coalitions and applies the binomially weighted subset-sum formula with
//! the scaling constant fixed to `1/n`, which makes efficiency, symmetry,
//! and dummy hold. A permutation-sampling estimator covers games too large
//! to enumerate.
//!
//! Every shipped learner is a pure function of its training subset (fixed
//! iteration counts, deterministic tie-breaking), so `V` is well defined.
//! A learner given the empty set degenerates to the constant classifier
//! predicting class 0.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Exact enumeration is refused above this many players (2^n evaluations).
pub const MAX_EXACT_PLAYERS: usize = 20;

/// A cooperative game over `n ≤ 20` players with the full `2^n` coalition
/// performance table. Coalitions are bitmasks: bit `i` set means player `i`
/// is in.
#[derive(Debug, Clone)]
pub struct CoalitionGame {
    players: usize,
    table: Vec<f64>,
    label: String,
}

impl CoalitionGame {
    /// Wraps an explicit table of length `2^n`, indexed by coalition mask.
    pub fn from_table(label: impl Into<String>, table: Vec<f64>) -> Result<Self> {
        let len = table.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Config(format!(
                "coalition table length {len} is not a power of two"
            )));
        }
        let players = len.trailing_zeros() as usize;
        if players > MAX_EXACT_PLAYERS {
            return Err(Error::TooManyPlayers {
                players,
                max: MAX_EXACT_PLAYERS,
            });
        }
        if let Some(bad) = table.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite coalition value {bad}")));
        }
        Ok(Self {
            players,
            table,
            label: label.into(),
        })
    }

    /// Evaluates `value` on every coalition, in parallel. `value` must be
    /// deterministic; the table is filled write-once by mask index, so the
    /// result does not depend on scheduling.
    pub fn from_fn<F>(label: impl Into<String>, players: usize, value: F) -> Result<Self>
    where
        F: Fn(u32) -> f64 + Sync + Send,
    {
        if players == 0 {
            return Err(Error::Config("a game needs at least one player".into()));
        }
        if players > MAX_EXACT_PLAYERS {
            return Err(Error::TooManyPlayers {
                players,
                max: MAX_EXACT_PLAYERS,
            });
        }
        let table: Vec<f64> = (0u32..1 << players).into_par_iter().map(value).collect();
        Self::from_table(label, table)
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `V(S)` for a coalition mask.
    pub fn value(&self, mask: u32) -> f64 {
        self.table[mask as usize]
    }

    pub fn v_empty(&self) -> f64 {
        self.table[0]
    }

    pub fn v_full(&self) -> f64 {
        self.table[self.table.len() - 1]
    }
}

/// Per-player valuation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapleyReport {
    /// Per-player value, player order.
    pub phi: Vec<f64>,
    /// Name of the learner (or `tabular` for explicit games).
    pub learner: String,
    /// The scaling constant in the subset-sum formula, fixed to `1/n`.
    pub scaling: f64,
    pub v_empty: f64,
    pub v_full: f64,
    /// Standard errors, present only for sampled estimates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<Vec<f64>>,
}

impl ShapleyReport {
    /// CSV export: one row per agent with the report constants repeated.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "agent,phi,learner,scaling,v_empty,v_full")?;
        for (agent, phi) in self.phi.iter().enumerate() {
            writeln!(
                w,
                "{agent},{phi},{},{},{},{}",
                self.learner, self.scaling, self.v_empty, self.v_full
            )?;
        }
        Ok(())
    }

    /// Player indices sorted by descending value (ties by player index).
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.phi.len()).collect();
        order.sort_by(|&a, &b| self.phi[b].total_cmp(&self.phi[a]).then(a.cmp(&b)));
        order
    }
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1.0;
        for j in 1..=i {
            c[i][j] = if j == i {
                1.0
            } else {
                c[i - 1][j - 1] + c[i - 1][j]
            };
        }
    }
    c
}

/// Exact Shapley values by the subset-sum formula:
/// `φ_i = (1/n) Σ_{S ⊆ N∖{i}} (V(S ∪ {i}) − V(S)) / C(n−1, |S|)`.
pub fn shapley_exact(game: &CoalitionGame) -> Result<ShapleyReport> {
    let n = game.players();
    let choose = binomials(n.max(1));
    let full: u32 = ((1u64 << n) - 1) as u32;
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            let bit = 1u32 << i;
            let mut sum = 0.0;
            // Ascending-mask order keeps the reduction deterministic.
            for mask in 0..=full {
                if mask & bit != 0 {
                    continue;
                }
                let size = mask.count_ones() as usize;
                sum += (game.value(mask | bit) - game.value(mask)) / choose[n - 1][size];
            }
            sum / n as f64
        })
        .collect();
    Ok(ShapleyReport {
        phi,
        learner: game.label().to_string(),
        scaling: 1.0 / n as f64,
        v_empty: game.v_empty(),
        v_full: game.v_full(),
        std_error: None,
    })
}

fn walk_permutation(game: &CoalitionGame, perm: &[usize], sums: &mut [f64], squares: &mut [f64]) {
    let mut mask = 0u32;
    for &p in perm {
        let next = mask | (1 << p);
        let marginal = game.value(next) - game.value(mask);
        sums[p] += marginal;
        squares[p] += marginal * marginal;
        mask = next;
    }
}

/// Monte-Carlo permutation estimate of the Shapley values, with per-player
/// standard errors. Unbiased; converges to [`shapley_exact`] as the number
/// of permutations grows, and is the escape hatch when exact enumeration is
/// too expensive.
pub fn shapley_sampled(
    game: &CoalitionGame,
    permutations: usize,
    seed: u64,
) -> Result<ShapleyReport> {
    if permutations == 0 {
        return Err(Error::Config("need at least one permutation".into()));
    }
    let n = game.players();
    let mut rng = rng_from(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sums = vec![0.0; n];
    let mut squares = vec![0.0; n];
    for _ in 0..permutations {
        perm.shuffle(&mut rng);
        walk_permutation(game, &perm, &mut sums, &mut squares);
    }
    let p = permutations as f64;
    let phi: Vec<f64> = sums.iter().map(|s| s / p).collect();
    let std_error = phi
        .iter()
        .zip(&squares)
        .map(|(&mean, &sq)| {
            if permutations < 2 {
                0.0
            } else {
                let var = ((sq - p * mean * mean) / (p - 1.0)).max(0.0);
                (var / p).sqrt()
            }
        })
        .collect();
    Ok(ShapleyReport {
        phi,
        learner: game.label().to_string(),
        scaling: 1.0 / n as f64,
        v_empty: game.v_empty(),
        v_full: game.v_full(),
        std_error: Some(std_error),
    })
}

/// Exhaustive permutation average: walks every one of the `n!` orderings
/// exactly once (Heap's algorithm). Equals [`shapley_exact`] up to
/// rounding; kept as the second algebraic route for cross-checks.
pub fn shapley_exhaustive(game: &CoalitionGame) -> Result<ShapleyReport> {
    let n = game.players();
    if n > 10 {
        return Err(Error::Config(format!(
            "exhaustive walk over {n}! orderings is too large (max 10 players)"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sums = vec![0.0; n];
    let mut squares = vec![0.0; n];
    let mut count = 0u64;
    let mut stack = vec![0usize; n];
    walk_permutation(game, &perm, &mut sums, &mut squares);
    count += 1;
    let mut i = 0;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            walk_permutation(game, &perm, &mut sums, &mut squares);
            count += 1;
            stack[i] += 1;
            i = 0;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    let phi = sums.iter().map(|s| s / count as f64).collect();
    Ok(ShapleyReport {
        phi,
        learner: game.label().to_string(),
        scaling: 1.0 / n as f64,
        v_empty: game.v_empty(),
        v_full: game.v_full(),
        std_error: None,
    })
}

/// Leave-one-out values straight off a game table:
/// `value_i = V(full) − V(full ∖ {i})`.
pub fn loo_from_game(game: &CoalitionGame) -> Vec<f64> {
    let full: u32 = ((1u64 << game.players()) - 1) as u32;
    (0..game.players())
        .map(|i| game.value(full) - game.value(full & !(1 << i)))
        .collect()
}

/// Deterministic learners usable behind the performance function.
/// Training configs are fixed so that training is a pure function of the
/// training subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerSpec {
    /// 1-nearest-neighbor; distance ties go to the lowest original row index.
    OneNearestNeighbor,
    /// Depth-1 decision tree found by exhaustive threshold search with
    /// leftmost-optimum tie-breaking.
    DecisionStump,
    /// Full-batch gradient descent on the softmax cross-entropy from zero
    /// initialization, fixed iteration count.
    LogisticRegression { iterations: usize, learning_rate: f64 },
    /// Full-batch subgradient descent on the hinge loss from zero
    /// initialization (one-vs-rest above two classes).
    LinearSvm {
        iterations: usize,
        learning_rate: f64,
        regularization: f64,
    },
}

impl LearnerSpec {
    pub fn logistic_default() -> Self {
        LearnerSpec::LogisticRegression {
            iterations: 200,
            learning_rate: 0.1,
        }
    }

    pub fn svm_default() -> Self {
        LearnerSpec::LinearSvm {
            iterations: 200,
            learning_rate: 0.1,
            regularization: 0.01,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            LearnerSpec::OneNearestNeighbor => "1nn",
            LearnerSpec::DecisionStump => "stump",
            LearnerSpec::LogisticRegression { .. } => "logistic",
            LearnerSpec::LinearSvm { .. } => "svm",
        }
    }

    /// Parses a learner name as used in experiment configs.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "1nn" | "nearest-neighbor" => Ok(LearnerSpec::OneNearestNeighbor),
            "stump" | "decision-stump" => Ok(LearnerSpec::DecisionStump),
            "logistic" | "logistic-regression" => Ok(Self::logistic_default()),
            "svm" | "linear-svm" => Ok(Self::svm_default()),
            other => Err(Error::Config(format!(
                "unknown learner `{other}` (expected 1nn, stump, logistic, or svm)"
            ))),
        }
    }

    /// Trains on the given rows. An empty subset yields the constant
    /// classifier predicting class 0.
    pub fn train(&self, data: &Dataset, indices: &[usize]) -> TrainedLearner {
        if indices.is_empty() {
            return TrainedLearner::Constant(0);
        }
        match *self {
            LearnerSpec::OneNearestNeighbor => TrainedLearner::Knn {
                rows: indices
                    .iter()
                    .map(|&i| (i, data.row(i).to_vec(), data.label(i)))
                    .collect(),
            },
            LearnerSpec::DecisionStump => train_stump(data, indices),
            LearnerSpec::LogisticRegression {
                iterations,
                learning_rate,
            } => train_linear(data, indices, iterations, learning_rate, LinearLoss::Softmax),
            LearnerSpec::LinearSvm {
                iterations,
                learning_rate,
                regularization,
            } => train_linear(
                data,
                indices,
                iterations,
                learning_rate,
                LinearLoss::Hinge { regularization },
            ),
        }
    }
}

/// A trained model produced by a [`LearnerSpec`].
#[derive(Debug, Clone)]
pub enum TrainedLearner {
    Constant(u32),
    Knn {
        /// `(original index, features, label)`, insertion order.
        rows: Vec<(usize, Vec<f64>, u32)>,
    },
    Stump {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Linear {
        /// Row-major `K x (d+1)` weights, bias last; argmax decides, ties to
        /// the lowest class.
        weights: Vec<f64>,
        classes: usize,
        dim: usize,
    },
}

impl TrainedLearner {
    pub fn predict(&self, x: &[f64]) -> u32 {
        match self {
            TrainedLearner::Constant(c) => *c,
            TrainedLearner::Knn { rows } => {
                let mut best: Option<(f64, usize, u32)> = None;
                for (orig, feats, label) in rows {
                    let d: f64 = feats.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                    let better = match best {
                        None => true,
                        Some((bd, bo, _)) => d < bd || (d == bd && *orig < bo),
                    };
                    if better {
                        best = Some((d, *orig, *label));
                    }
                }
                best.map(|(_, _, l)| l).unwrap_or(0)
            }
            TrainedLearner::Stump {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    *left
                } else {
                    *right
                }
            }
            TrainedLearner::Linear {
                weights,
                classes,
                dim,
            } => {
                let mut best = 0usize;
                let mut best_z = f64::NEG_INFINITY;
                for k in 0..*classes {
                    let row = &weights[k * (dim + 1)..(k + 1) * (dim + 1)];
                    let mut z = row[*dim];
                    for (w, v) in row[..*dim].iter().zip(x) {
                        z += w * v;
                    }
                    if z > best_z {
                        best_z = z;
                        best = k;
                    }
                }
                best as u32
            }
        }
    }

    pub fn accuracy(&self, test: &Dataset) -> f64 {
        if test.is_empty() {
            return 0.0;
        }
        let correct = (0..test.len())
            .filter(|&i| self.predict(test.row(i)) == test.label(i))
            .count();
        correct as f64 / test.len() as f64
    }
}

/// Majority class with ties to the lowest class id.
fn majority(labels: impl Iterator<Item = u32>, classes: usize) -> u32 {
    let mut counts = vec![0usize; classes];
    for l in labels {
        counts[l as usize] += 1;
    }
    let mut best = 0usize;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best as u32
}

fn train_stump(data: &Dataset, indices: &[usize]) -> TrainedLearner {
    let classes = data.n_classes();
    let n = indices.len();
    let fallback = majority(indices.iter().map(|&i| data.label(i)), classes);
    // Start from the constant majority stump (threshold below everything).
    let mut best_err = indices
        .iter()
        .filter(|&&i| data.label(i) != fallback)
        .count();
    let mut best = TrainedLearner::Stump {
        feature: 0,
        threshold: f64::NEG_INFINITY,
        left: fallback,
        right: fallback,
    };
    for feature in 0..data.n_features() {
        let mut vals: Vec<(f64, u32)> = indices
            .iter()
            .map(|&i| (data.row(i)[feature], data.label(i)))
            .collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut k = 0;
        while k + 1 < n {
            if vals[k].0 == vals[k + 1].0 {
                k += 1;
                continue;
            }
            // Midpoint between consecutive distinct values.
            let threshold = 0.5 * (vals[k].0 + vals[k + 1].0);
            let left = majority(vals[..=k].iter().map(|v| v.1), classes);
            let right = majority(vals[k + 1..].iter().map(|v| v.1), classes);
            let err = vals[..=k].iter().filter(|v| v.1 != left).count()
                + vals[k + 1..].iter().filter(|v| v.1 != right).count();
            // Strict improvement keeps the leftmost optimum.
            if err < best_err {
                best_err = err;
                best = TrainedLearner::Stump {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
            k += 1;
        }
    }
    best
}

enum LinearLoss {
    Softmax,
    Hinge { regularization: f64 },
}

/// Full-batch gradient descent from zero initialization; `K x (d+1)`
/// weights with bias last. One-vs-rest semantics for the hinge loss.
fn train_linear(
    data: &Dataset,
    indices: &[usize],
    iterations: usize,
    learning_rate: f64,
    loss: LinearLoss,
) -> TrainedLearner {
    let dim = data.n_features();
    let classes = data.n_classes();
    let stride = dim + 1;
    let mut weights = vec![0.0; classes * stride];
    let n = indices.len() as f64;
    let mut grad = vec![0.0; weights.len()];
    let mut logits = vec![0.0; classes];

    for _ in 0..iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        match loss {
            LinearLoss::Softmax => {
                for &i in indices {
                    let x = data.row(i);
                    let y = data.label(i) as usize;
                    for k in 0..classes {
                        let row = &weights[k * stride..(k + 1) * stride];
                        let mut z = row[dim];
                        for (w, v) in row[..dim].iter().zip(x) {
                            z += w * v;
                        }
                        logits[k] = z;
                    }
                    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
                    for k in 0..classes {
                        let p = (logits[k] - max).exp() / sum;
                        let d = p - if k == y { 1.0 } else { 0.0 };
                        let g_row = &mut grad[k * stride..(k + 1) * stride];
                        for (g, v) in g_row[..dim].iter_mut().zip(x) {
                            *g += d * v;
                        }
                        g_row[dim] += d;
                    }
                }
                for (w, g) in weights.iter_mut().zip(&grad) {
                    *w -= learning_rate * g / n;
                }
            }
            LinearLoss::Hinge { regularization } => {
                for k in 0..classes {
                    let row_base = k * stride;
                    for &i in indices {
                        let x = data.row(i);
                        let y = if data.label(i) as usize == k { 1.0 } else { -1.0 };
                        let row = &weights[row_base..row_base + stride];
                        let mut z = row[dim];
                        for (w, v) in row[..dim].iter().zip(x) {
                            z += w * v;
                        }
                        if y * z < 1.0 {
                            for (d, v) in x.iter().enumerate() {
                                grad[row_base + d] -= y * v;
                            }
                            grad[row_base + dim] -= y;
                        }
                    }
                    for d in 0..dim {
                        grad[row_base + d] =
                            grad[row_base + d] / n + regularization * weights[row_base + d];
                    }
                    grad[row_base + dim] /= n;
                }
                for (w, g) in weights.iter_mut().zip(&grad) {
                    *w -= learning_rate * g;
                }
            }
        }
    }
    TrainedLearner::Linear {
        weights,
        classes,
        dim,
    }
}

/// Maps dataset rows to owning agents and evaluates coalitions.
struct AgentGame<'a> {
    data: &'a Dataset,
    test: &'a Dataset,
    learner: &'a LearnerSpec,
    members: Vec<Vec<usize>>,
}

impl<'a> AgentGame<'a> {
    fn new(
        data: &'a Dataset,
        ownership: &[usize],
        learner: &'a LearnerSpec,
        test: &'a Dataset,
    ) -> Result<Self> {
        if ownership.len() != data.len() {
            return Err(Error::Config(format!(
                "ownership covers {} rows, dataset has {}",
                ownership.len(),
                data.len()
            )));
        }
        if test.n_features() != data.n_features() {
            return Err(Error::Shape(format!(
                "train has {} features, test has {}",
                data.n_features(),
                test.n_features()
            )));
        }
        let agents = match ownership.iter().max() {
            Some(&m) => m + 1,
            None => return Err(Error::Config("empty dataset".into())),
        };
        if agents > MAX_EXACT_PLAYERS {
            return Err(Error::TooManyPlayers {
                players: agents,
                max: MAX_EXACT_PLAYERS,
            });
        }
        let mut members = vec![Vec::new(); agents];
        for (row, &agent) in ownership.iter().enumerate() {
            members[agent].push(row);
        }
        if let Some(empty) = members.iter().position(|m| m.is_empty()) {
            return Err(Error::Config(format!("agent {empty} owns no examples")));
        }
        Ok(Self {
            data,
            test,
            learner,
            members,
        })
    }

    fn value(&self, mask: u32) -> f64 {
        let mut rows = Vec::new();
        for (agent, member_rows) in self.members.iter().enumerate() {
            if mask & (1 << agent) != 0 {
                rows.extend_from_slice(member_rows);
            }
        }
        self.learner.train(self.data, &rows).accuracy(self.test)
    }

    fn into_game(self) -> Result<CoalitionGame> {
        let players = self.members.len();
        CoalitionGame::from_fn(self.learner.label(), players, |mask| self.value(mask))
    }
}

/// Exact per-agent Shapley valuation: builds the coalition game with
/// `V(S) = accuracy(learner trained on S's rows)` and runs the exact engine.
pub fn agent_contribution(
    data: &Dataset,
    ownership: &[usize],
    learner: &LearnerSpec,
    test: &Dataset,
) -> Result<ShapleyReport> {
    let game = AgentGame::new(data, ownership, learner, test)?.into_game()?;
    shapley_exact(&game)
}

/// Leave-one-out valuation: `value_i = V(all) − V(all ∖ agent_i)`. Shares
/// the coalition evaluator with [`agent_contribution`].
pub fn loo_value(
    data: &Dataset,
    ownership: &[usize],
    learner: &LearnerSpec,
    test: &Dataset,
) -> Result<Vec<f64>> {
    let eval = AgentGame::new(data, ownership, learner, test)?;
    let n = eval.members.len();
    let full: u32 = ((1u64 << n) - 1) as u32;
    let v_full = eval.value(full);
    Ok((0..n)
        .map(|i| v_full - eval.value(full & !(1 << i)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;

    /// The worked 3-player game: V(∅)=0, V{1}=.5, V{2}=.5, V{3}=0,
    /// V{1,2}=.9, V{1,3}=.5, V{2,3}=.5, V{1,2,3}=1.
    fn worked_game() -> CoalitionGame {
        // mask bits: player 1 = bit0, player 2 = bit1, player 3 = bit2
        let table = vec![0.0, 0.5, 0.5, 0.9, 0.0, 0.5, 0.5, 1.0];
        CoalitionGame::from_table("tabular", table).unwrap()
    }

    /// Independent oracle: average marginal contributions over all n!
    /// orderings by direct recursion, committing one marginal vector per
    /// completed ordering (not the library's Heap's-algorithm walker).
    fn permutation_oracle(game: &CoalitionGame) -> Vec<f64> {
        fn recurse(
            game: &CoalitionGame,
            remaining: &mut Vec<usize>,
            mask: u32,
            current: &mut Vec<(usize, f64)>,
            sums: &mut [f64],
            count: &mut u64,
        ) {
            if remaining.is_empty() {
                for &(p, m) in current.iter() {
                    sums[p] += m;
                }
                *count += 1;
                return;
            }
            for pos in 0..remaining.len() {
                let p = remaining.remove(pos);
                let next = mask | (1 << p);
                current.push((p, game.value(next) - game.value(mask)));
                recurse(game, remaining, next, current, sums, count);
                current.pop();
                remaining.insert(pos, p);
            }
        }
        let n = game.players();
        let mut sums = vec![0.0; n];
        let mut count = 0u64;
        let mut remaining: Vec<usize> = (0..n).collect();
        let mut current = Vec::new();
        recurse(game, &mut remaining, 0, &mut current, &mut sums, &mut count);
        sums.iter().map(|s| s / count as f64).collect()
    }

    #[test]
    fn worked_game_matches_hand_computed_values() {
        let report = shapley_exact(&worked_game()).unwrap();
        // Hand-derived over all 6 orderings: phi = (29/60, 29/60, 2/60).
        assert!((report.phi[0] - 29.0 / 60.0).abs() < 1e-12);
        assert!((report.phi[1] - 29.0 / 60.0).abs() < 1e-12);
        assert!((report.phi[2] - 2.0 / 60.0).abs() < 1e-12);
        let total: f64 = report.phi.iter().sum();
        assert!((total - (report.v_full - report.v_empty)).abs() < 1e-9);
    }

    #[test]
    fn worked_game_matches_the_independent_permutation_oracle() {
        let game = worked_game();
        let exact = shapley_exact(&game).unwrap();
        let oracle = permutation_oracle(&game);
        for (a, b) in exact.phi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{a} vs oracle {b}");
        }
    }

    #[test]
    fn single_player_value_is_the_full_marginal() {
        let game = CoalitionGame::from_table("tabular", vec![0.25, 0.75]).unwrap();
        let report = shapley_exact(&game).unwrap();
        assert_eq!(report.phi.len(), 1);
        assert!((report.phi[0] - 0.5).abs() < 1e-15);
        let loo = loo_from_game(&game);
        assert!((loo[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn loo_differs_from_shapley_on_the_worked_game() {
        let game = worked_game();
        let loo = loo_from_game(&game);
        // LOO_3 = V(full) - V{1,2} = 1.0 - 0.9 = 0.1, while phi_3 = 1/30.
        assert!((loo[2] - 0.1).abs() < 1e-12);
        let phi3 = shapley_exact(&game).unwrap().phi[2];
        assert!((loo[2] - phi3).abs() > 0.05);
    }

    fn random_game(players: usize, seed: u64) -> CoalitionGame {
        let mut rng = rng_from(seed);
        let mut table: Vec<f64> = (0..1usize << players).map(|_| rng.random()).collect();
        table[0] = 0.0;
        CoalitionGame::from_table("tabular", table).unwrap()
    }

    #[test]
    fn subset_formula_agrees_with_permutation_routes() {
        for players in 1..=6 {
            let game = random_game(players, 100 + players as u64);
            let exact = shapley_exact(&game).unwrap();
            let exhaustive = shapley_exhaustive(&game).unwrap();
            let oracle = permutation_oracle(&game);
            for i in 0..players {
                assert!((exact.phi[i] - exhaustive.phi[i]).abs() < 1e-12);
                assert!((exact.phi[i] - oracle[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_converges_within_three_standard_errors() {
        let game = worked_game();
        let exact = shapley_exact(&game).unwrap();
        let sampled = shapley_sampled(&game, 50_000, 7).unwrap();
        let se = sampled.std_error.as_ref().unwrap();
        for i in 0..3 {
            let bound = 3.0 * se[i] + 1e-9;
            assert!(
                (sampled.phi[i] - exact.phi[i]).abs() <= bound,
                "player {i}: {} vs {} (3se = {bound})",
                sampled.phi[i],
                exact.phi[i]
            );
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let game = worked_game();
        let a = shapley_sampled(&game, 500, 3).unwrap();
        let b = shapley_sampled(&game, 500, 3).unwrap();
        assert_eq!(a.phi, b.phi);
        assert_eq!(a.std_error, b.std_error);
    }

    #[test]
    fn dummy_player_gets_zero() {
        // Player 2 (bit 2) never changes V.
        let mut table = vec![0.0; 8];
        for mask in 0..4u32 {
            let v = mask.count_ones() as f64 * 0.2;
            table[mask as usize] = v;
            table[(mask | 4) as usize] = v;
        }
        let game = CoalitionGame::from_table("tabular", table).unwrap();
        let report = shapley_exact(&game).unwrap();
        assert!(report.phi[2].abs() < 1e-12);
    }

    #[test]
    fn symmetric_players_get_equal_values() {
        // V depends only on coalition size: all players interchangeable.
        let table: Vec<f64> = (0..16u32).map(|m| (m.count_ones() as f64).sqrt()).collect();
        let game = CoalitionGame::from_table("tabular", table).unwrap();
        let report = shapley_exact(&game).unwrap();
        for w in report.phi.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-12);
        }
    }

    fn two_cluster_data() -> (Dataset, Dataset) {
        // Class 0 near (0,0), class 1 near (4,4).
        let train = Dataset::new(
            "train",
            vec![0.0, 0.2, 0.3, 0.1, 0.1, 0.4, 4.0, 4.1, 4.2, 3.9, 3.8, 4.0],
            2,
            vec![0, 0, 0, 1, 1, 1],
            2,
        )
        .unwrap();
        let test = Dataset::new(
            "test",
            vec![0.1, 0.1, 0.2, 0.3, 4.1, 4.0, 3.9, 4.2],
            2,
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        (train, test)
    }

    #[test]
    fn knn_breaks_distance_ties_toward_lowest_index() {
        let data = Dataset::new(
            "ties",
            vec![1.0, 1.0, 1.0, 1.0, 5.0, 5.0],
            2,
            vec![1, 0, 0],
            2,
        )
        .unwrap();
        // Rows 0 and 1 are identical points with different labels; a query
        // at that point must take row 0's label.
        let model = LearnerSpec::OneNearestNeighbor.train(&data, &[0, 1, 2]);
        assert_eq!(model.predict(&[1.0, 1.0]), 1);
        // Restricted to rows 1 and 2, row 1 wins.
        let model = LearnerSpec::OneNearestNeighbor.train(&data, &[1, 2]);
        assert_eq!(model.predict(&[1.0, 1.0]), 0);
    }

    #[test]
    fn stump_finds_an_obvious_split() {
        let (train, test) = two_cluster_data();
        let all: Vec<usize> = (0..train.len()).collect();
        let model = LearnerSpec::DecisionStump.train(&train, &all);
        assert_eq!(model.accuracy(&test), 1.0);
        match model {
            TrainedLearner::Stump { left, right, .. } => {
                assert_eq!(left, 0);
                assert_eq!(right, 1);
            }
            other => panic!("expected stump, got {other:?}"),
        }
    }

    #[test]
    fn stump_on_unsplittable_data_is_the_majority_vote() {
        let data = Dataset::new(
            "same-point",
            vec![2.0, 2.0, 2.0, 2.0, 2.0, 2.0],
            2,
            vec![1, 1, 0],
            2,
        )
        .unwrap();
        let model = LearnerSpec::DecisionStump.train(&data, &[0, 1, 2]);
        assert_eq!(model.predict(&[2.0, 2.0]), 1);
        assert_eq!(model.predict(&[-10.0, 7.0]), 1);
    }

    #[test]
    fn linear_learners_separate_the_clusters() {
        let (train, test) = two_cluster_data();
        let all: Vec<usize> = (0..train.len()).collect();
        for learner in [LearnerSpec::logistic_default(), LearnerSpec::svm_default()] {
            let model = learner.train(&train, &all);
            assert_eq!(model.accuracy(&test), 1.0, "{}", learner.label());
        }
    }

    #[test]
    fn empty_training_set_is_the_constant_zero_classifier() {
        let (train, test) = two_cluster_data();
        for learner in [
            LearnerSpec::OneNearestNeighbor,
            LearnerSpec::DecisionStump,
            LearnerSpec::logistic_default(),
            LearnerSpec::svm_default(),
        ] {
            let model = learner.train(&train, &[]);
            assert_eq!(model.predict(&[1.0, 1.0]), 0);
            assert_eq!(model.accuracy(&test), test.class_frequency(0));
        }
    }

    #[test]
    fn agents_with_identical_data_get_equal_shapley_values() {
        let (_, test) = two_cluster_data();
        // Two agents hold byte-identical rows; a third holds the rest.
        let train = Dataset::new(
            "dup",
            vec![0.0, 0.0, 0.0, 0.0, 4.0, 4.0, 4.1, 4.1],
            2,
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        let ownership = vec![0, 1, 2, 2];
        let report =
            agent_contribution(&train, &ownership, &LearnerSpec::OneNearestNeighbor, &test)
                .unwrap();
        assert!((report.phi[0] - report.phi[1]).abs() < 1e-12);
    }

    #[test]
    fn duplicate_agents_get_zero_leave_one_out_value() {
        let (_, test) = two_cluster_data();
        let train = Dataset::new(
            "dup",
            vec![0.0, 0.1, 4.0, 4.0, 0.0, 0.1, 4.0, 4.0],
            2,
            vec![0, 1, 0, 1],
            2,
        )
        .unwrap();
        // Agents 0 and 1 hold byte-identical two-row datasets.
        let ownership = vec![0, 0, 1, 1];
        let loo = loo_value(&train, &ownership, &LearnerSpec::OneNearestNeighbor, &test).unwrap();
        assert!(loo[0].abs() <= 1e-9, "loo[0] = {}", loo[0]);
        assert!(loo[1].abs() <= 1e-9, "loo[1] = {}", loo[1]);
    }

    #[test]
    fn ownership_must_cover_every_agent() {
        let (train, test) = two_cluster_data();
        // Agent 1 owns nothing (ids 0 and 2 used only).
        let ownership = vec![0, 0, 0, 2, 2, 2];
        let err = agent_contribution(&train, &ownership, &LearnerSpec::OneNearestNeighbor, &test)
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn too_many_agents_suggests_sampling() {
        let n = 21;
        let train = Dataset::new(
            "wide",
            (0..2 * n).map(|v| v as f64).collect(),
            2,
            (0..n).map(|i| (i % 2) as u32).collect(),
            2,
        )
        .unwrap();
        let ownership: Vec<usize> = (0..n).collect();
        let err = agent_contribution(
            &train,
            &ownership,
            &LearnerSpec::OneNearestNeighbor,
            &train,
        )
        .unwrap_err();
        match err {
            Error::TooManyPlayers { players, max } => {
                assert_eq!(players, 21);
                assert_eq!(max, 20);
            }
            other => panic!("expected capacity error, got {other}"),
        }
    }

    #[test]
    fn report_csv_has_one_row_per_agent() {
        let report = shapley_exact(&worked_game()).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("agent,phi,learner,scaling,v_empty,v_full\n"));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn efficiency_holds_on_random_games(players in 1usize..7, seed in any::<u64>()) {
                let game = random_game(players, seed);
                let report = shapley_exact(&game).unwrap();
                let total: f64 = report.phi.iter().sum();
                prop_assert!((total - (game.v_full() - game.v_empty())).abs() < 1e-9);
            }

            #[test]
            fn exhaustive_walk_equals_subset_formula(players in 1usize..6, seed in any::<u64>()) {
                let game = random_game(players, seed);
                let a = shapley_exact(&game).unwrap();
                let b = shapley_exhaustive(&game).unwrap();
                for (x, y) in a.phi.iter().zip(&b.phi) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}
