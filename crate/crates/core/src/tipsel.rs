//! Tip selection: uniform random draws and (biased) random walks.
//!
//! A walk starts at a configured transaction (genesis by default) and moves
//! along reverse edges until it reaches a tip. Transition probabilities
//! follow the cumulative-weight softmax; with `alpha = 0` every revealed
//! direct approver is equally likely and weights are never evaluated. Ids
//! strictly increase along a walk, so backtracking is impossible by
//! construction.

use crate::error::{Error, Result};
use crate::tangle::{Tangle, TxId, GENESIS};
use rand::Rng;

/// Whether a transaction approving the same target twice counts once or
/// twice among the walk candidates. The transition sum runs over the *set*
/// of direct approvers, so `Once` is the default; `Twice` keeps the
/// alternative reading testable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicateEdgeWeighting {
    #[default]
    Once,
    Twice,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    /// Cumulative-weight bias; zero selects uniformly among approvers.
    pub alpha: f64,
    pub start: TxId,
    pub duplicate_edges: DuplicateEdgeWeighting,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig { alpha: 0.0, start: GENESIS, duplicate_edges: DuplicateEdgeWeighting::Once }
    }
}

impl WalkConfig {
    pub fn unbiased() -> Self {
        Self::default()
    }

    pub fn biased(alpha: f64) -> Self {
        WalkConfig { alpha, ..Self::default() }
    }
}

/// Path of a completed walk together with the approver edge counts observed
/// at each visited transaction (as revealed at walk time).
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    pub path: Vec<TxId>,
    pub approver_counts: Vec<u32>,
}

impl WalkTrace {
    pub fn tip(&self) -> TxId {
        *self.path.last().expect("walk path is never empty")
    }
}

/// Memoized cumulative weights for one visibility time.
///
/// Weights are computed lazily per transaction by a cone traversal; walks on
/// a frozen snapshot share the cache.
#[derive(Debug)]
pub struct WeightCache {
    at_time: f64,
    weights: Vec<u64>,
    computed: Vec<bool>,
    // scratch for the cone BFS, stamped to avoid clearing per call
    mark: Vec<u32>,
    epoch: u32,
}

impl WeightCache {
    pub fn new(at_time: f64) -> Self {
        WeightCache { at_time, weights: Vec::new(), computed: Vec::new(), mark: Vec::new(), epoch: 0 }
    }

    pub fn at_time(&self) -> f64 {
        self.at_time
    }

    pub fn weight(&mut self, tangle: &Tangle, id: TxId) -> u64 {
        let n = tangle.len();
        if self.weights.len() < n {
            self.weights.resize(n, 0);
            self.computed.resize(n, false);
            self.mark.resize(n, 0);
        }
        if self.computed[id.index()] {
            return self.weights[id.index()];
        }
        self.epoch += 1;
        let epoch = self.epoch;
        let mut stack = vec![id];
        self.mark[id.index()] = epoch;
        let mut size: u64 = 0;
        while let Some(x) = stack.pop() {
            size += 1;
            for &y in tangle.approver_edge_list(x) {
                if self.mark[y.index()] != epoch && tangle.is_revealed(y, self.at_time) {
                    self.mark[y.index()] = epoch;
                    stack.push(y);
                }
            }
        }
        self.weights[id.index()] = size;
        self.computed[id.index()] = true;
        size
    }
}

/// Two independent uniform draws from the tips visible at `at_time`; the
/// draws may coincide. Genesis is the fallback while no other tip is
/// revealed.
pub fn urts_select<R: Rng + ?Sized>(tangle: &Tangle, at_time: f64, rng: &mut R) -> (TxId, TxId) {
    let tips = tangle.tips(at_time);
    if tips.is_empty() {
        return (GENESIS, GENESIS);
    }
    let a = tips[rng.random_range(0..tips.len())];
    let b = tips[rng.random_range(0..tips.len())];
    (a, b)
}

/// Exact transition probabilities out of `x` per the cumulative-weight
/// softmax. The probabilities sum to one over the revealed direct approvers.
pub fn walk_transition_probabilities(
    tangle: &Tangle,
    x: TxId,
    config: &WalkConfig,
    at_time: f64,
    cache: &mut WeightCache,
) -> Result<Vec<(TxId, f64)>> {
    let dedupe = config.duplicate_edges == DuplicateEdgeWeighting::Once;
    let mut candidates = Vec::new();
    tangle.revealed_approvers_into(x, at_time, dedupe, &mut candidates);
    if candidates.is_empty() {
        return Err(Error::NoRevealedApprover(x));
    }
    if config.alpha == 0.0 {
        let p = 1.0 / candidates.len() as f64;
        return Ok(candidates.into_iter().map(|y| (y, p)).collect());
    }
    let weights: Vec<u64> = candidates.iter().map(|&y| cache.weight(tangle, y)).collect();
    let max = *weights.iter().max().unwrap();
    let exps: Vec<f64> = weights.iter().map(|&w| (config.alpha * (w as f64 - max as f64)).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(candidates.into_iter().zip(exps).map(|(y, e)| (y, e / total)).collect())
}

/// One walk transition from `x`, sampling a revealed direct approver with
/// probability proportional to `exp(alpha * weight)`.
pub fn walk_step<R: Rng + ?Sized>(
    tangle: &Tangle,
    x: TxId,
    config: &WalkConfig,
    at_time: f64,
    rng: &mut R,
    cache: &mut WeightCache,
) -> Result<TxId> {
    let dedupe = config.duplicate_edges == DuplicateEdgeWeighting::Once;
    let mut candidates = Vec::new();
    tangle.revealed_approvers_into(x, at_time, dedupe, &mut candidates);
    sample_step(tangle, &candidates, config, rng, cache).ok_or(Error::NoRevealedApprover(x))
}

#[inline]
fn sample_step<R: Rng + ?Sized>(
    tangle: &Tangle,
    candidates: &[TxId],
    config: &WalkConfig,
    rng: &mut R,
    cache: &mut WeightCache,
) -> Option<TxId> {
    match candidates.len() {
        0 => None,
        1 => Some(candidates[0]),
        n if config.alpha == 0.0 => Some(candidates[rng.random_range(0..n)]),
        _ => {
            let weights: Vec<u64> = candidates.iter().map(|&y| cache.weight(tangle, y)).collect();
            let max = *weights.iter().max().unwrap();
            let exps: Vec<f64> = weights.iter().map(|&w| (config.alpha * (w as f64 - max as f64)).exp()).collect();
            let total: f64 = exps.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (i, e) in exps.iter().enumerate() {
                u -= e;
                if u <= 0.0 {
                    return Some(candidates[i]);
                }
            }
            Some(*candidates.last().unwrap())
        }
    }
}

/// Repeats [`walk_step`] from the configured start until a tip is reached,
/// recording the path and the approver edge counts along it.
pub fn walk_select<R: Rng + ?Sized>(
    tangle: &Tangle,
    config: &WalkConfig,
    at_time: f64,
    rng: &mut R,
    cache: &mut WeightCache,
) -> Result<WalkTrace> {
    if !tangle.contains(config.start) {
        return Err(Error::UnknownApprovee(config.start));
    }
    if !tangle.is_revealed(config.start, at_time) {
        return Err(Error::NoReachableTip(config.start));
    }
    let dedupe = config.duplicate_edges == DuplicateEdgeWeighting::Once;
    let mut path = vec![config.start];
    let mut counts = vec![tangle.approver_edges_at(config.start, at_time) as u32];
    let mut candidates = Vec::new();
    let mut x = config.start;
    loop {
        tangle.revealed_approvers_into(x, at_time, dedupe, &mut candidates);
        match sample_step(tangle, &candidates, config, rng, cache) {
            None => return Ok(WalkTrace { path, approver_counts: counts }),
            Some(y) => {
                path.push(y);
                counts.push(tangle.approver_edges_at(y, at_time) as u32);
                x = y;
            }
        }
    }
}

/// Fast path used by measurement loops: unbiased walk to a tip, returning
/// only the tip. Shares candidate semantics with [`walk_select`].
pub(crate) fn unbiased_walk_to_tip<R: Rng + ?Sized>(
    tangle: &Tangle,
    start: TxId,
    at_time: f64,
    rng: &mut R,
    scratch: &mut Vec<TxId>,
) -> TxId {
    let mut x = start;
    loop {
        let n = tangle.revealed_approvers_into(x, at_time, true, scratch);
        x = match n {
            0 => return x,
            1 => scratch[0],
            _ => scratch[rng.random_range(0..n)],
        };
    }
}
