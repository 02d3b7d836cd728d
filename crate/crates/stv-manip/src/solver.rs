//! Search procedures that decide whether a weighted manipulator can make a
//! chosen candidate win.
//!
//! Both solvers explore the same lazily-built tree over elimination orders.
//! At each round the manipulator's vote is either still uncommitted (a free
//! node) or already pinned to some remaining candidate (a fixed node). A free
//! node needs at most two children: let the currently weakest candidate fall,
//! or rescue it by committing the manipulator's vote to it, which redirects
//! the elimination onto the runner-up. A fixed node has one forced
//! elimination; when the pinned candidate itself falls the vote transfers and
//! the manipulator is free again.
//!
//! [`manipulate_improved`] prunes branches that eliminate the chosen
//! candidate and stops at the first constructed win. [`csl_possible_winners`]
//! explores the whole tree with no pruning and reports every candidate the
//! manipulator can make win; it is the reference baseline the improved search
//! is benchmarked against.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::election::{
    initial_state, Ballot, CandidateId, ElectionError, ElectionState, Profile, TieBreakPolicy,
};

/// Which child of a free node is explored first.
///
/// `RightFirst` tries the branch that commits the manipulator's vote before
/// the branch that leaves it free. This is the benchmarking default; the
/// decision found is identical either way, only node counts move.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum BranchOrder {
    #[default]
    RightFirst,
    LeftFirst,
}

impl fmt::Display for BranchOrder {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            BranchOrder::RightFirst => write!(f, "right-first"),
            BranchOrder::LeftFirst => write!(f, "left-first"),
        }
    }
}

impl FromStr for BranchOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "right-first" | "right_first" | "right" => Ok(BranchOrder::RightFirst),
            "left-first" | "left_first" | "left" => Ok(BranchOrder::LeftFirst),
            other => Err(format!("unknown branch order `{other}`")),
        }
    }
}

/// One manipulation instance: an electorate, a candidate to make win, and
/// the weight of the manipulator's single ballot.
///
/// Weight `w > 1` models a coalition of `w` agents voting in unison.
#[derive(Clone, Debug)]
pub struct ManipulationQuery {
    pub profile: Profile,
    pub chosen: CandidateId,
    pub weight: u64,
    pub policy: TieBreakPolicy,
}

impl ManipulationQuery {
    pub fn new(
        profile: Profile,
        chosen: CandidateId,
        weight: u64,
        policy: TieBreakPolicy,
    ) -> Result<Self, ElectionError> {
        if profile.m() == 0 {
            return Err(ElectionError::NoCandidates);
        }
        if chosen.0 < 1 || chosen.0 > profile.m() {
            return Err(ElectionError::BadChosen(chosen, profile.m()));
        }
        if weight == 0 {
            return Err(ElectionError::ZeroWeight);
        }
        Ok(ManipulationQuery {
            profile,
            chosen,
            weight,
            policy,
        })
    }
}

/// Search accounting. A node is one visit to a search state, including the
/// root and terminal states.
#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub nodes: u64,
    pub elapsed: Duration,
    pub branch_order: BranchOrder,
}

/// Decision plus evidence: `witness` is present exactly when `manipulable`,
/// and casting it with the query's weight makes the chosen candidate win.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub manipulable: bool,
    pub witness: Option<Ballot>,
    pub stats: SolveStats,
}

/// Decides a query with the pruned early-exit search, right-first.
pub fn manipulate_improved(query: &ManipulationQuery) -> SolveOutcome {
    manipulate_improved_with(query, BranchOrder::default())
}

/// Decides a query with the pruned early-exit search under an explicit
/// branch order.
pub fn manipulate_improved_with(query: &ManipulationQuery, order: BranchOrder) -> SolveOutcome {
    let start = Instant::now();
    let mut search = Search::new(&query.profile, query.weight, query.policy, order);
    search.chosen = Some(query.chosen);
    let root = initial_state(&query.profile).expect("query was validated");
    let manipulable = search.run_improved(root, None);
    let witness = search.witness.take();
    debug_assert_eq!(manipulable, witness.is_some());
    SolveOutcome {
        manipulable,
        witness,
        stats: SolveStats {
            nodes: search.nodes,
            elapsed: start.elapsed(),
            branch_order: order,
        },
    }
}

/// Every candidate the manipulator can make win, by exhaustive unpruned
/// search over the same tree, right-first.
pub fn csl_possible_winners(
    profile: &Profile,
    weight: u64,
    policy: TieBreakPolicy,
) -> (BTreeSet<CandidateId>, SolveStats) {
    csl_possible_winners_with(profile, weight, policy, BranchOrder::default())
}

pub fn csl_possible_winners_with(
    profile: &Profile,
    weight: u64,
    policy: TieBreakPolicy,
    order: BranchOrder,
) -> (BTreeSet<CandidateId>, SolveStats) {
    assert!(
        profile.m() >= 1,
        "election must have at least one candidate"
    );
    assert!(weight >= 1, "manipulator weight must be at least 1");
    let start = Instant::now();
    let mut search = Search::new(profile, weight, policy, order);
    let root = initial_state(profile).expect("at least one candidate");
    let winners = search.run_csl(root, None);
    (
        winners,
        SolveStats {
            nodes: search.nodes,
            elapsed: start.elapsed(),
            branch_order: order,
        },
    )
}

/// Expands the search's fix decisions into a full ballot.
///
/// `fix_sequence` holds the candidates the manipulator's vote was pinned to,
/// outermost first; each was eliminated before the next fix happened (except
/// possibly the last), so ranking them in that order reproduces every pin
/// when the ballot is replayed. The chosen candidate follows unless it is
/// already the final fix, then all unmentioned candidates in ascending order.
pub fn reconstruct_witness(fix_sequence: &[CandidateId], chosen: CandidateId, m: u32) -> Ballot {
    let mut ranking: Vec<CandidateId> = fix_sequence.to_vec();
    if ranking.last() != Some(&chosen) {
        debug_assert!(
            !ranking.contains(&chosen),
            "chosen may only appear as the last fix"
        );
        ranking.push(chosen);
    }
    for raw in 1..=m {
        let c = CandidateId(raw);
        if !ranking.contains(&c) {
            ranking.push(c);
        }
    }
    debug_assert_eq!(ranking.len(), m as usize);
    Ballot::new(ranking)
}

/// A branch out of a search node: eliminate `0` and continue with the
/// manipulator pinned to `1`, or free when `None`.
type Branch = (CandidateId, Option<CandidateId>);

/// A search state up to path history: what remains and where the
/// manipulator's vote is pinned. Scores are a function of the remaining
/// set, so this key determines the subtree outcome exactly.
type StateKey = (Vec<u64>, Option<CandidateId>);

struct Search<'a> {
    profile: &'a Profile,
    weight: u64,
    policy: TieBreakPolicy,
    order: BranchOrder,
    chosen: Option<CandidateId>,
    nodes: u64,
    /// Pins in effect on the current search path, outermost first.
    fix_trail: Vec<CandidateId>,
    witness: Option<Ballot>,
    /// Optimistic tie-breaking revisits states massively (every tied
    /// minimum branches), so failed states are cached. Lexicographic search
    /// stays a plain depth-first walk: its node counts are the benchmark
    /// metric and must not depend on caching.
    fail_memo: Option<HashSet<StateKey>>,
    csl_memo: Option<HashMap<StateKey, BTreeSet<CandidateId>>>,
}

impl<'a> Search<'a> {
    fn new(profile: &'a Profile, weight: u64, policy: TieBreakPolicy, order: BranchOrder) -> Self {
        let memoize = policy == TieBreakPolicy::Optimistic;
        Search {
            profile,
            weight,
            policy,
            order,
            chosen: None,
            nodes: 0,
            fix_trail: Vec::new(),
            witness: None,
            fail_memo: memoize.then(HashSet::new),
            csl_memo: memoize.then(HashMap::new),
        }
    }

    /// Children of a node where the manipulator's vote is uncommitted.
    ///
    /// Left children keep the vote free and let a minimum-score candidate
    /// fall. A right child pins the vote on such a candidate `d`; the
    /// elimination then lands on a minimum of the boosted scores instead.
    /// When boosting `d` still leaves `d` eliminable the right child would
    /// duplicate a left child, so it is dropped.
    fn free_branches(&self, state: &ElectionState) -> Vec<Branch> {
        let mut left: Vec<Branch> = Vec::new();
        let mut right: Vec<Branch> = Vec::new();
        match self.policy {
            TieBreakPolicy::Lexicographic => {
                let d = state.min_candidates_with_boost(None)[0];
                left.push((d, None));
                let e = state.min_candidates_with_boost(Some((d, self.weight)))[0];
                if e != d {
                    right.push((e, Some(d)));
                }
            }
            TieBreakPolicy::Optimistic => {
                let mins = state.min_candidates_with_boost(None);
                for &d in &mins {
                    left.push((d, None));
                }
                for &d in &mins {
                    for e in state.min_candidates_with_boost(Some((d, self.weight))) {
                        if e != d {
                            right.push((e, Some(d)));
                        }
                    }
                }
            }
        }
        match self.order {
            BranchOrder::RightFirst => {
                right.extend(left);
                right
            }
            BranchOrder::LeftFirst => {
                left.extend(right);
                left
            }
        }
    }

    /// Children of a node where the manipulator's vote is pinned to `f`.
    /// The elimination is forced by the boosted scores; if `f` itself falls
    /// the vote becomes free again.
    fn fixed_branches(&self, state: &ElectionState, f: CandidateId) -> Vec<Branch> {
        let mins = state.min_candidates_with_boost(Some((f, self.weight)));
        let keep = |d: CandidateId| if d == f { None } else { Some(f) };
        match self.policy {
            TieBreakPolicy::Lexicographic => {
                let d = mins[0];
                vec![(d, keep(d))]
            }
            TieBreakPolicy::Optimistic => mins.into_iter().map(|d| (d, keep(d))).collect(),
        }
    }

    fn branches(&self, state: &ElectionState, fixed: Option<CandidateId>) -> Vec<Branch> {
        match fixed {
            None => self.free_branches(state),
            Some(f) => self.fixed_branches(state, f),
        }
    }

    fn run_improved(&mut self, state: ElectionState, fixed: Option<CandidateId>) -> bool {
        self.nodes += 1;
        let chosen = self.chosen.expect("improved search always has a target");
        if state.remaining_count() == 1 {
            if state.sole_remaining() == chosen {
                self.witness = Some(reconstruct_witness(
                    &self.fix_trail,
                    chosen,
                    self.profile.m(),
                ));
                return true;
            }
            return false;
        }
        let key = self.fail_memo.as_ref().map(|memo| {
            let key = (state.remaining_mask(), fixed);
            (memo.contains(&key), key)
        });
        if let Some((known_failure, _)) = &key {
            if *known_failure {
                return false;
            }
        }
        for (elim, next_fixed) in self.branches(&state, fixed) {
            // Eliminating the chosen candidate can never lead to a win.
            if elim == chosen {
                continue;
            }
            let pins_now = fixed.is_none() && next_fixed.is_some();
            if pins_now {
                self.fix_trail.push(next_fixed.unwrap());
            }
            let child = state.transfer(self.profile, elim);
            if self.run_improved(child, next_fixed) {
                // First win ends the search; the trail stays intact for the
                // witness already recorded.
                return true;
            }
            if pins_now {
                self.fix_trail.pop();
            }
        }
        if let Some((_, key)) = key {
            self.fail_memo.as_mut().unwrap().insert(key);
        }
        false
    }

    fn run_csl(
        &mut self,
        state: ElectionState,
        fixed: Option<CandidateId>,
    ) -> BTreeSet<CandidateId> {
        self.nodes += 1;
        if state.remaining_count() == 1 {
            let mut set = BTreeSet::new();
            set.insert(state.sole_remaining());
            return set;
        }
        let key = self.csl_memo.as_ref().map(|memo| {
            let key = (state.remaining_mask(), fixed);
            (memo.get(&key).cloned(), key)
        });
        if let Some((Some(hit), _)) = &key {
            return hit.clone();
        }
        let mut out = BTreeSet::new();
        for (elim, next_fixed) in self.branches(&state, fixed) {
            let child = state.transfer(self.profile, elim);
            out.extend(self.run_csl(child, next_fixed));
        }
        if let Some((_, key)) = key {
            self.csl_memo.as_mut().unwrap().insert(key, out.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_profile, weighted};
    use rand::Rng;
    use rand::SeedableRng;

    fn profile(m: u32, ballots: &[(u64, &[u32])]) -> Profile {
        Profile::new(m, weighted(ballots)).unwrap()
    }

    fn query(p: &Profile, chosen: u32, w: u64, policy: TieBreakPolicy) -> ManipulationQuery {
        ManipulationQuery::new(p.clone(), CandidateId(chosen), w, policy).unwrap()
    }

    #[test]
    fn unit_manipulator_cannot_rescue_buried_candidate() {
        // Candidate 1 holds no first-place vote; with one extra ballot it is
        // still first eliminated whatever the manipulator does.
        let p = profile(3, &[(2, &[2, 1, 3]), (2, &[3, 1, 2])]);
        for policy in [TieBreakPolicy::Lexicographic, TieBreakPolicy::Optimistic] {
            let out = manipulate_improved(&query(&p, 1, 1, policy));
            assert!(!out.manipulable, "policy {policy}");
            assert!(out.witness.is_none());
        }
        // The improved search sees d == e == chosen at the root and stops.
        let out = manipulate_improved(&query(&p, 1, 1, TieBreakPolicy::Lexicographic));
        assert_eq!(out.stats.nodes, 1);
    }

    #[test]
    fn heavier_manipulator_rescues_the_same_candidate() {
        let p = profile(3, &[(2, &[2, 1, 3]), (2, &[3, 1, 2])]);
        let out = manipulate_improved(&query(&p, 1, 3, TieBreakPolicy::Lexicographic));
        assert!(out.manipulable);
        let w = out.witness.unwrap();
        assert_eq!(w.ranking[0], CandidateId(1));
    }

    #[test]
    fn csl_spec_examples() {
        // Unanimous 2-voter election: weight 1 cannot unseat candidate 1,
        // weight 2 forces a tie it can exploit only optimistically through
        // the branching tally; under the unison model both candidates
        // become reachable.
        let p = profile(2, &[(2, &[1, 2])]);
        let (set, _) = csl_possible_winners(&p, 1, TieBreakPolicy::Lexicographic);
        assert_eq!(set.into_iter().collect::<Vec<_>>(), vec![CandidateId(1)]);
        let (set, _) = csl_possible_winners(&p, 1, TieBreakPolicy::Optimistic);
        assert_eq!(set.into_iter().collect::<Vec<_>>(), vec![CandidateId(1)]);
        let (set, _) = csl_possible_winners(&p, 2, TieBreakPolicy::Optimistic);
        assert_eq!(
            set.into_iter().collect::<Vec<_>>(),
            vec![CandidateId(1), CandidateId(2)]
        );
    }

    #[test]
    fn single_candidate_election_is_trivially_won() {
        let p = Profile::empty(1);
        let out = manipulate_improved(&query(&p, 1, 1, TieBreakPolicy::Lexicographic));
        assert!(out.manipulable);
        assert_eq!(out.stats.nodes, 1);
        assert_eq!(out.witness.unwrap().ranking, vec![CandidateId(1)]);
    }

    #[test]
    fn witness_reconstruction_layout() {
        let b = reconstruct_witness(&[CandidateId(2), CandidateId(3)], CandidateId(4), 4);
        assert_eq!(b, Ballot::from_ids(&[2, 3, 4, 1]));

        // Chosen already last in the fix sequence: not duplicated.
        let b = reconstruct_witness(&[CandidateId(2), CandidateId(4)], CandidateId(4), 4);
        assert_eq!(b, Ballot::from_ids(&[2, 4, 1, 3]));

        // No fixes at all: chosen first, rest ascending.
        let b = reconstruct_witness(&[], CandidateId(3), 4);
        assert_eq!(b, Ballot::from_ids(&[3, 1, 2, 4]));
    }

    /// Replays a witness: add it as a ballot of the query's weight and run
    /// the tally. Under the optimistic policy it suffices that the chosen
    /// candidate is reachable under some tie resolution.
    fn witness_wins(q: &ManipulationQuery, w: &Ballot) -> bool {
        let p = q.profile.with_ballot(w.clone(), q.weight).unwrap();
        crate::election::stv_winners(&p, q.policy)
            .unwrap()
            .contains(&q.chosen)
    }

    #[test]
    fn witnesses_replay_to_wins() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0xbeef);
        let mut found = 0;
        for _ in 0..400 {
            let m = rng.random_range(2..=5);
            let n = rng.random_range(1..=8);
            let p = random_profile(m, n, &mut rng);
            let chosen = rng.random_range(1..=m);
            let w = rng.random_range(1..=2);
            for policy in [TieBreakPolicy::Lexicographic, TieBreakPolicy::Optimistic] {
                let q = query(&p, chosen, w, policy);
                let out = manipulate_improved(&q);
                if let Some(wit) = &out.witness {
                    assert!(
                        witness_wins(&q, wit),
                        "witness {wit} fails for {p:?} chosen {chosen}"
                    );
                    found += 1;
                }
            }
        }
        assert!(
            found > 100,
            "too few manipulable instances to be meaningful: {found}"
        );
    }

    #[test]
    fn improved_agrees_with_csl_membership() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0xc0de);
        for _ in 0..400 {
            let m = rng.random_range(1..=5);
            let n = rng.random_range(0..=8);
            let p = random_profile(m, n, &mut rng);
            let w = rng.random_range(1..=3);
            for policy in [TieBreakPolicy::Lexicographic, TieBreakPolicy::Optimistic] {
                let (winners, _) = csl_possible_winners(&p, w, policy);
                for chosen in 1..=m {
                    let out = manipulate_improved(&query(&p, chosen, w, policy));
                    assert_eq!(
                        out.manipulable,
                        winners.contains(&CandidateId(chosen)),
                        "m={m} chosen={chosen} w={w} policy={policy} profile={p:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn improved_never_visits_more_nodes_than_csl() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0xd00d);
        for _ in 0..300 {
            let m = rng.random_range(1..=5);
            let n = rng.random_range(0..=8);
            let p = random_profile(m, n, &mut rng);
            let chosen = rng.random_range(1..=m);
            for policy in [TieBreakPolicy::Lexicographic, TieBreakPolicy::Optimistic] {
                let (_, csl_stats) = csl_possible_winners(&p, 1, policy);
                for order in [BranchOrder::RightFirst, BranchOrder::LeftFirst] {
                    let out = manipulate_improved_with(&query(&p, chosen, 1, policy), order);
                    assert!(
                        out.stats.nodes <= csl_stats.nodes,
                        "improved {} > csl {} on {p:?}",
                        out.stats.nodes,
                        csl_stats.nodes
                    );
                }
            }
        }
    }

    #[test]
    fn node_counts_are_deterministic() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = random_profile(4, 6, &mut rng);
            let q = query(&p, 2, 1, TieBreakPolicy::Lexicographic);
            let a = manipulate_improved(&q);
            let b = manipulate_improved(&q);
            assert_eq!(a.stats.nodes, b.stats.nodes);
            assert_eq!(a.manipulable, b.manipulable);
            assert_eq!(a.witness, b.witness);
        }
    }

    #[test]
    fn branch_order_changes_nodes_not_decisions() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0xf1f1);
        for _ in 0..200 {
            let m = rng.random_range(2..=5);
            let p = random_profile(m, 6, &mut rng);
            let chosen = rng.random_range(1..=m);
            let q = query(&p, chosen, 1, TieBreakPolicy::Lexicographic);
            let r = manipulate_improved_with(&q, BranchOrder::RightFirst);
            let l = manipulate_improved_with(&q, BranchOrder::LeftFirst);
            assert_eq!(r.manipulable, l.manipulable);
        }
    }

    #[test]
    fn query_validation() {
        let p = profile(2, &[(1, &[1, 2])]);
        assert!(ManipulationQuery::new(
            p.clone(),
            CandidateId(3),
            1,
            TieBreakPolicy::Lexicographic
        )
        .is_err());
        assert!(ManipulationQuery::new(
            p.clone(),
            CandidateId(0),
            1,
            TieBreakPolicy::Lexicographic
        )
        .is_err());
        assert!(ManipulationQuery::new(
            p.clone(),
            CandidateId(1),
            0,
            TieBreakPolicy::Lexicographic
        )
        .is_err());
        assert!(ManipulationQuery::new(
            Profile::empty(0),
            CandidateId(1),
            1,
            TieBreakPolicy::Lexicographic
        )
        .is_err());
        assert!(
            ManipulationQuery::new(p, CandidateId(2), 1, TieBreakPolicy::Lexicographic).is_ok()
        );
    }
}
