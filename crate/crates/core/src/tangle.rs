//! The append-only transaction DAG with time-indexed visibility.
//!
//! Times are expressed in units of the reveal delay: a transaction issued at
//! `t` becomes visible to the network (and its approval edges take effect for
//! tip queries) at `t + 1`. Hidden transactions carry an explicit, later
//! reveal time instead.

use crate::error::{Error, Result};
use std::fmt;

/// Reveal delay between issuing a transaction and the network seeing it.
/// All times are expressed in this unit.
pub const REVEAL_DELAY: f64 = 1.0;

/// Dense transaction index, assigned in issue order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TxId(pub u32);

pub const GENESIS: TxId = TxId(0);

impl TxId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Honest,
    Malicious,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Honest => "honest",
            Provenance::Malicious => "malicious",
        }
    }
}

/// How a duplicated tip selection turns into approval edges: the single-edge
/// policy collapses the pair into one edge, the multi-edge policy keeps both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgePolicy {
    Single,
    Multi,
}

impl EdgePolicy {
    /// Approvee list for a pair of selected tips under this policy.
    pub fn edges(self, first: TxId, second: TxId) -> Vec<TxId> {
        if self == EdgePolicy::Single && first == second {
            vec![first]
        } else {
            vec![first, second]
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgePolicy::Single => "sem",
            EdgePolicy::Multi => "mem",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sem" => Ok(EdgePolicy::Single),
            "mem" => Ok(EdgePolicy::Multi),
            other => Err(Error::InvalidConfig(format!("unknown edge policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub id: TxId,
    pub issue_time: f64,
    pub reveal_time: f64,
    /// 1 or 2 approvees (possibly duplicated under the multi-edge policy);
    /// empty only for genesis.
    pub approvees: Vec<TxId>,
    pub provenance: Provenance,
}

/// Result of a cone traversal. Ids are sorted ascending (set semantics).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cone {
    pub ids: Vec<TxId>,
    pub truncated: bool,
}

impl Cone {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: TxId) -> bool {
        self.ids.binary_search(&id).is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct Tangle {
    txs: Vec<Transaction>,
    /// Reverse adjacency: one entry per approval edge (duplicates adjacent).
    approvers: Vec<Vec<TxId>>,
    /// Issue time of the first approving transaction, if any.
    first_approval: Vec<Option<f64>>,
    clock: f64,
}

impl Default for Tangle {
    fn default() -> Self {
        Self::new()
    }
}

impl Tangle {
    /// A Tangle holding only the genesis transaction, revealed at time 0.
    pub fn new() -> Self {
        Tangle {
            txs: vec![Transaction {
                id: GENESIS,
                issue_time: 0.0,
                reveal_time: 0.0,
                approvees: Vec::new(),
                provenance: Provenance::Honest,
            }],
            approvers: vec![Vec::new()],
            first_approval: vec![None],
            clock: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // genesis is always present
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Advances the clock without attaching anything.
    pub fn advance_clock(&mut self, t: f64) {
        if t > self.clock {
            self.clock = t;
        }
    }

    pub fn tx(&self, id: TxId) -> &Transaction {
        &self.txs[id.index()]
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.txs
    }

    pub fn contains(&self, id: TxId) -> bool {
        id.index() < self.txs.len()
    }

    pub fn is_revealed(&self, id: TxId, at_time: f64) -> bool {
        self.txs[id.index()].reveal_time <= at_time
    }

    /// Attaches an honest transaction approving `approvees`, revealed one
    /// delay after issue. Every approvee must be revealed by `issue_time`.
    pub fn attach(&mut self, issue_time: f64, approvees: &[TxId], provenance: Provenance) -> Result<TxId> {
        for &a in approvees {
            if !self.contains(a) {
                return Err(Error::UnknownApprovee(a));
            }
            if !self.is_revealed(a, issue_time) {
                return Err(Error::ApproveeNotVisible { approvee: a, at: issue_time });
            }
        }
        self.attach_raw(issue_time, approvees, issue_time + REVEAL_DELAY, provenance)
    }

    /// Attaches a hidden (malicious) transaction with an explicit reveal
    /// time. Visibility of the approvees is not checked: the attacker may
    /// reference its own pending transactions.
    pub fn attach_hidden(&mut self, issue_time: f64, approvees: &[TxId], reveal_time: f64) -> Result<TxId> {
        for &a in approvees {
            if !self.contains(a) {
                return Err(Error::UnknownApprovee(a));
            }
        }
        self.attach_raw(issue_time, approvees, reveal_time, Provenance::Malicious)
    }

    fn attach_raw(
        &mut self,
        issue_time: f64,
        approvees: &[TxId],
        reveal_time: f64,
        provenance: Provenance,
    ) -> Result<TxId> {
        if approvees.is_empty() {
            return Err(Error::InvalidConfig("a non-genesis transaction needs at least one approvee".into()));
        }
        if approvees.len() > 2 {
            return Err(Error::InvalidConfig("at most two approvees".into()));
        }
        if issue_time < self.clock {
            return Err(Error::IssueTimeInPast { issue: issue_time, clock: self.clock });
        }
        let id = TxId(self.txs.len() as u32);
        for &a in approvees {
            self.approvers[a.index()].push(id);
        }
        // Duplicated approvees are adjacent in the list, so deduplicate by
        // skipping repeats for the first-approval update.
        let mut prev = None;
        for &a in approvees {
            if prev == Some(a) {
                continue;
            }
            prev = Some(a);
            let slot = &mut self.first_approval[a.index()];
            if slot.is_none() {
                *slot = Some(issue_time);
            }
        }
        self.txs.push(Transaction {
            id,
            issue_time,
            reveal_time,
            approvees: approvees.to_vec(),
            provenance,
        });
        self.approvers.push(Vec::new());
        self.clock = issue_time;
        Ok(id)
    }

    /// Total number of approval edges pointing at `id` (a duplicated
    /// approvee contributes two), from revealed or pending transactions.
    pub fn approver_edges(&self, id: TxId) -> usize {
        self.approvers[id.index()].len()
    }

    /// Approval edges from transactions revealed by `at_time`.
    pub fn approver_edges_at(&self, id: TxId, at_time: f64) -> usize {
        self.approvers[id.index()].iter().filter(|y| self.is_revealed(**y, at_time)).count()
    }

    /// Number of distinct approvers of `id`.
    pub fn distinct_approvers(&self, id: TxId) -> usize {
        let list = &self.approvers[id.index()];
        let mut count = 0;
        let mut prev = None;
        for &y in list {
            if prev != Some(y) {
                count += 1;
            }
            prev = Some(y);
        }
        count
    }

    /// Raw approver edge list (duplicates adjacent).
    pub fn approver_edge_list(&self, id: TxId) -> &[TxId] {
        &self.approvers[id.index()]
    }

    /// First-approval time of `id`: the issue time of the first transaction
    /// that approved it.
    pub fn first_approval(&self, id: TxId) -> Option<f64> {
        self.first_approval[id.index()]
    }

    /// Distinct approvers of `id` revealed by `at_time`, appended to `out`.
    /// Returns the number of candidates.
    pub(crate) fn revealed_approvers_into(&self, id: TxId, at_time: f64, dedupe: bool, out: &mut Vec<TxId>) -> usize {
        out.clear();
        let mut prev = None;
        for &y in &self.approvers[id.index()] {
            if dedupe && prev == Some(y) {
                continue;
            }
            prev = Some(y);
            if self.is_revealed(y, at_time) {
                out.push(y);
            }
        }
        out.len()
    }

    pub fn has_revealed_approver(&self, id: TxId, at_time: f64) -> bool {
        self.approvers[id.index()].iter().any(|y| self.is_revealed(*y, at_time))
    }

    /// A transaction is a tip at `at_time` when it is revealed and none of
    /// its approvers are.
    pub fn is_tip_at(&self, id: TxId, at_time: f64) -> bool {
        self.is_revealed(id, at_time) && !self.has_revealed_approver(id, at_time)
    }

    /// All tips visible at `at_time`.
    pub fn tips(&self, at_time: f64) -> Vec<TxId> {
        (0..self.txs.len() as u32).map(TxId).filter(|&id| self.is_tip_at(id, at_time)).collect()
    }

    /// Transactions directly or indirectly approving `id`, restricted to
    /// those revealed by `at_time`. Traversal stops once `max_size` members
    /// are collected, setting the truncation flag.
    pub fn future_cone(&self, id: TxId, at_time: f64, max_size: Option<usize>) -> Cone {
        let cap = max_size.unwrap_or(usize::MAX);
        let mut seen = vec![false; self.txs.len()];
        let mut stack = vec![id];
        let mut ids = Vec::new();
        let mut truncated = false;
        'outer: while let Some(x) = stack.pop() {
            for &y in &self.approvers[x.index()] {
                if seen[y.index()] || !self.is_revealed(y, at_time) {
                    continue;
                }
                seen[y.index()] = true;
                if ids.len() == cap {
                    truncated = true;
                    break 'outer;
                }
                ids.push(y);
                stack.push(y);
            }
        }
        ids.sort_unstable();
        Cone { ids, truncated }
    }

    /// Transactions directly or indirectly approved by `id` (set semantics).
    pub fn past_cone(&self, id: TxId) -> Cone {
        let mut seen = vec![false; self.txs.len()];
        let mut stack = vec![id];
        let mut ids = Vec::new();
        while let Some(x) = stack.pop() {
            for &a in &self.txs[x.index()].approvees {
                if seen[a.index()] {
                    continue;
                }
                seen[a.index()] = true;
                ids.push(a);
                stack.push(a);
            }
        }
        ids.sort_unstable();
        Cone { ids, truncated: false }
    }

    /// Cumulative weight of `id` as seen at `at_time`: its own weight plus
    /// the size of its revealed future cone.
    pub fn cumulative_weight(&self, id: TxId, at_time: f64) -> Result<u64> {
        if !self.is_revealed(id, at_time) {
            return Err(Error::NotRevealed { tx: id, at: at_time });
        }
        Ok(1 + self.future_cone(id, at_time, None).len() as u64)
    }

    /// Serializes to the line-oriented snapshot format:
    /// a header comment with the generating configuration, then one line per
    /// transaction: `id,issue,reveal,approvee1[,approvee2],provenance`.
    pub fn to_snapshot(&self, header: &SnapshotHeader) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# tangle lambda={} policy={} seed={}\n",
            header.rate,
            header.policy.as_str(),
            header.seed
        ));
        for tx in &self.txs {
            out.push_str(&format!("{},{},{}", tx.id, tx.issue_time, tx.reveal_time));
            for a in &tx.approvees {
                out.push_str(&format!(",{a}"));
            }
            out.push_str(&format!(",{}\n", tx.provenance.as_str()));
        }
        out
    }

    /// Parses a snapshot produced by [`Tangle::to_snapshot`].
    pub fn from_snapshot(text: &str) -> Result<(Tangle, SnapshotHeader)> {
        let mut header = None;
        let mut txs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if header.is_none() {
                    header = Some(SnapshotHeader::parse(rest, lineno + 1)?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if !(4..=6).contains(&fields.len()) {
                return Err(Error::SnapshotParse { line: lineno + 1, reason: format!("expected 4-6 fields, got {}", fields.len()) });
            }
            let parse_f64 = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::SnapshotParse { line: lineno + 1, reason: format!("bad number `{s}`") })
            };
            let parse_id = |s: &str| -> Result<TxId> {
                s.parse::<u32>().map(TxId).map_err(|_| Error::SnapshotParse { line: lineno + 1, reason: format!("bad id `{s}`") })
            };
            let id = parse_id(fields[0])?;
            let issue = parse_f64(fields[1])?;
            let reveal = parse_f64(fields[2])?;
            let approvees: Vec<TxId> = fields[3..fields.len() - 1].iter().map(|s| parse_id(s)).collect::<Result<_>>()?;
            let provenance = match *fields.last().unwrap() {
                "honest" => Provenance::Honest,
                "malicious" => Provenance::Malicious,
                other => {
                    return Err(Error::SnapshotParse { line: lineno + 1, reason: format!("bad provenance `{other}`") })
                }
            };
            if id.index() != txs.len() {
                return Err(Error::SnapshotParse { line: lineno + 1, reason: format!("ids must be dense and ordered, got {id}") });
            }
            txs.push((issue, reveal, approvees, provenance));
        }
        let header = header.ok_or(Error::SnapshotParse { line: 1, reason: "missing header".into() })?;
        if txs.is_empty() || !txs[0].2.is_empty() {
            return Err(Error::SnapshotParse { line: 1, reason: "first transaction must be genesis".into() });
        }
        let mut tangle = Tangle::new();
        tangle.txs[0].issue_time = txs[0].0;
        tangle.txs[0].reveal_time = txs[0].1;
        for (issue, reveal, approvees, provenance) in txs.into_iter().skip(1) {
            match provenance {
                Provenance::Honest => {
                    // Honest reveal times are implied by the issue time; keep
                    // the serialized value authoritative anyway.
                    let id = tangle.attach_raw(issue, &approvees, reveal, provenance)?;
                    debug_assert_eq!(tangle.tx(id).reveal_time, reveal);
                }
                Provenance::Malicious => {
                    tangle.attach_hidden(issue, &approvees, reveal)?;
                }
            }
        }
        Ok((tangle, header))
    }
}

/// Configuration recorded in a snapshot header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub rate: f64,
    pub policy: EdgePolicy,
    pub seed: u64,
}

impl SnapshotHeader {
    fn parse(rest: &str, line: usize) -> Result<Self> {
        let mut rate = None;
        let mut policy = None;
        let mut seed = None;
        for token in rest.split_whitespace() {
            if let Some((k, v)) = token.split_once('=') {
                match k {
                    "lambda" => rate = v.parse().ok(),
                    "policy" => policy = EdgePolicy::parse(v).ok(),
                    "seed" => seed = v.parse().ok(),
                    _ => {}
                }
            }
        }
        match (rate, policy, seed) {
            (Some(rate), Some(policy), Some(seed)) => Ok(SnapshotHeader { rate, policy, seed }),
            _ => Err(Error::SnapshotParse { line, reason: "header must carry lambda, policy and seed".into() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1 -> 0, 2 -> 0, 3 -> {1, 2}, fully revealed by t = 4.
    fn diamond() -> Tangle {
        let mut t = Tangle::new();
        t.attach(1.0, &[GENESIS], Provenance::Honest).unwrap();
        t.attach(1.5, &[GENESIS], Provenance::Honest).unwrap();
        t.attach(3.0, &[TxId(1), TxId(2)], Provenance::Honest).unwrap();
        t.advance_clock(5.0);
        t
    }

    #[test]
    fn attach_multi_edge_keeps_duplicate() {
        let mut t = Tangle::new();
        let id = t.attach(1.0, &EdgePolicy::Multi.edges(GENESIS, GENESIS), Provenance::Honest).unwrap();
        assert_eq!(id, TxId(1));
        assert_eq!(t.approver_edges(GENESIS), 2);
        assert_eq!(t.distinct_approvers(GENESIS), 1);
        assert_eq!(t.tx(id).approvees, vec![GENESIS, GENESIS]);
    }

    #[test]
    fn attach_single_edge_collapses_duplicate() {
        let mut t = Tangle::new();
        let id = t.attach(1.0, &EdgePolicy::Single.edges(GENESIS, GENESIS), Provenance::Honest).unwrap();
        assert_eq!(t.approver_edges(GENESIS), 1);
        assert_eq!(t.tx(id).approvees, vec![GENESIS]);
    }

    #[test]
    fn attach_rejects_unknown_and_past() {
        let mut t = Tangle::new();
        t.attach(1.0, &[GENESIS], Provenance::Honest).unwrap();
        t.attach(2.0, &[GENESIS], Provenance::Honest).unwrap();
        t.attach(2.5, &[GENESIS], Provenance::Honest).unwrap();
        assert!(matches!(t.attach(3.0, &[TxId(7)], Provenance::Honest), Err(Error::UnknownApprovee(TxId(7)))));
        assert!(matches!(t.attach(1.0, &[GENESIS], Provenance::Honest), Err(Error::IssueTimeInPast { .. })));
    }

    #[test]
    fn attach_rejects_unrevealed_approvee_for_honest() {
        let mut t = Tangle::new();
        let a = t.attach(1.0, &[GENESIS], Provenance::Honest).unwrap();
        // `a` reveals at 2.0; approving it at 1.5 is not allowed.
        assert!(matches!(t.attach(1.5, &[a], Provenance::Honest), Err(Error::ApproveeNotVisible { .. })));
        t.attach(2.0, &[a], Provenance::Honest).unwrap();
    }

    #[test]
    fn tip_visibility_follows_reveal_delay() {
        let mut t = Tangle::new();
        assert_eq!(t.tips(0.0), vec![GENESIS]);
        let a = t.attach(1.0, &[GENESIS], Provenance::Honest).unwrap();
        // Before the reveal the approval is invisible: genesis is still the tip.
        assert_eq!(t.tips(1.0), vec![GENESIS]);
        assert_eq!(t.tips(1.999), vec![GENESIS]);
        // After the reveal the new transaction replaces it.
        assert_eq!(t.tips(2.0), vec![a]);
    }

    #[test]
    fn cumulative_weight_examples() {
        let t = diamond();
        let at = 5.0;
        assert_eq!(t.cumulative_weight(TxId(3), at).unwrap(), 1); // tip
        assert_eq!(t.cumulative_weight(TxId(1), at).unwrap(), 2); // cone {3}
        assert_eq!(t.cumulative_weight(GENESIS, at).unwrap(), 4); // everything
        assert!(t.cumulative_weight(TxId(3), 3.5).is_err()); // not yet revealed
    }

    #[test]
    fn cones_enumerate_the_diamond() {
        let t = diamond();
        let at = 5.0;
        assert!(t.future_cone(TxId(3), at, None).is_empty());
        let cone = t.future_cone(GENESIS, at, None);
        assert_eq!(cone.ids, vec![TxId(1), TxId(2), TxId(3)]);
        assert!(!cone.truncated);
        let past = t.past_cone(TxId(3));
        assert_eq!(past.ids, vec![GENESIS, TxId(1), TxId(2)]);
        assert!(t.past_cone(GENESIS).is_empty());
    }

    #[test]
    fn future_cone_respects_visibility() {
        let t = diamond();
        // At time 3.0 only txs 1 and 2 are revealed (tx 3 reveals at 4.0).
        let cone = t.future_cone(GENESIS, 3.0, None);
        assert_eq!(cone.ids, vec![TxId(1), TxId(2)]);
    }

    #[test]
    fn future_cone_truncation() {
        let t = diamond();
        let cone = t.future_cone(GENESIS, 5.0, Some(1));
        assert_eq!(cone.len(), 1);
        assert!(cone.truncated);
    }

    #[test]
    fn past_cone_deduplicates_double_edges() {
        let mut t = Tangle::new();
        let a = t.attach(1.0, &[GENESIS, GENESIS], Provenance::Honest).unwrap();
        assert_eq!(t.past_cone(a).ids, vec![GENESIS]);
    }

    #[test]
    fn hidden_transactions_stay_invisible_until_reveal() {
        let mut t = Tangle::new();
        let a = t.attach(1.0, &[GENESIS], Provenance::Honest).unwrap();
        t.advance_clock(3.0);
        let m = t.attach_hidden(3.0, &[a], 10.0).unwrap();
        // The hidden tx may even reference its own pending chain.
        let m2 = t.attach_hidden(3.5, &[m], 10.0).unwrap();
        assert_eq!(t.tips(4.0), vec![a]);
        assert!(!t.is_tip_at(m, 4.0));
        assert_eq!(t.future_cone(a, 4.0, None).len(), 0);
        // After the atomic reveal they join the visible DAG.
        assert_eq!(t.tips(10.0), vec![m2]);
        assert_eq!(t.future_cone(a, 10.0, None).ids, vec![m, m2]);
    }

    #[test]
    fn first_approval_is_recorded_once() {
        let mut t = Tangle::new();
        assert_eq!(t.first_approval(GENESIS), None);
        t.attach(1.0, &[GENESIS], Provenance::Honest).unwrap();
        t.attach(2.0, &[GENESIS], Provenance::Honest).unwrap();
        assert_eq!(t.first_approval(GENESIS), Some(1.0));
    }

    #[test]
    fn snapshot_round_trip() {
        let t = diamond();
        let header = SnapshotHeader { rate: 2.5, policy: EdgePolicy::Single, seed: 99 };
        let text = t.to_snapshot(&header);
        let (parsed, h2) = Tangle::from_snapshot(&text).unwrap();
        assert_eq!(h2, header);
        assert_eq!(parsed.transactions(), t.transactions());
        assert_eq!(parsed.to_snapshot(&h2), text);
    }

    #[test]
    fn snapshot_rejects_garbage() {
        assert!(Tangle::from_snapshot("").is_err());
        assert!(Tangle::from_snapshot("# tangle lambda=1 policy=sem seed=0\n0,0,0,honest\n2,1,2,0,honest\n").is_err());
        assert!(Tangle::from_snapshot("# tangle lambda=1\n0,0,0,honest\n").is_err());
    }
}
