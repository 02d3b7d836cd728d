//! Ballots, profiles, and the single-winner STV tally.
//!
//! An election over `m` candidates proceeds in rounds: the candidate with the
//! fewest first-place votes among the remaining candidates is eliminated and
//! every ballot counting for it is re-assigned to its next surviving
//! preference, until one candidate is left. Elimination ties are resolved by
//! a [`TieBreakPolicy`].

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A candidate, identified by a 1-based index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateId(pub u32);

impl CandidateId {
    /// Position of this candidate in score vectors and masks.
    pub(crate) fn idx(self) -> usize {
        self.0 as usize - 1
    }

    pub(crate) fn from_idx(i: usize) -> Self {
        CandidateId(i as u32 + 1)
    }
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum ElectionError {
    #[error("election must have at least one candidate")]
    NoCandidates,
    #[error("ballot ranks {got} candidates, expected {expected}")]
    WrongBallotLength { got: usize, expected: u32 },
    #[error("candidate {0} appears more than once in a ballot")]
    DuplicateCandidate(CandidateId),
    #[error("candidate {0} is out of range 1..={1}")]
    UnknownCandidate(CandidateId, u32),
    #[error("ballot weight must be at least 1")]
    ZeroWeight,
    #[error("chosen candidate {0} is out of range 1..={1}")]
    BadChosen(CandidateId, u32),
}

/// One agent's vote: a strict total order, highest preference first.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Ballot {
    pub ranking: Vec<CandidateId>,
}

impl Ballot {
    pub fn new(ranking: Vec<CandidateId>) -> Self {
        Ballot { ranking }
    }

    /// Builds a ballot from 1-based candidate indices.
    pub fn from_ids(ids: &[u32]) -> Self {
        Ballot::new(ids.iter().map(|&i| CandidateId(i)).collect())
    }

    /// Checks that the ranking is a permutation of `1..=m`.
    pub fn validate(&self, m: u32) -> Result<(), ElectionError> {
        if self.ranking.len() != m as usize {
            return Err(ElectionError::WrongBallotLength {
                got: self.ranking.len(),
                expected: m,
            });
        }
        let mut seen = vec![false; m as usize];
        for &c in &self.ranking {
            if c.0 < 1 || c.0 > m {
                return Err(ElectionError::UnknownCandidate(c, m));
            }
            if seen[c.idx()] {
                return Err(ElectionError::DuplicateCandidate(c));
            }
            seen[c.idx()] = true;
        }
        Ok(())
    }
}

impl fmt::Display for Ballot {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        for (i, c) in self.ranking.iter().enumerate() {
            if i > 0 {
                write!(f, ">")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A ballot cast with integer multiplicity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WeightedBallot {
    pub ballot: Ballot,
    pub weight: u64,
}

/// The electorate: weighted total-order ballots over `m` candidates.
///
/// All scores derived from a profile are exact integers, so elimination
/// comparisons never suffer floating-point tie ambiguity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Profile {
    m: u32,
    ballots: Vec<WeightedBallot>,
}

impl Profile {
    pub fn new(m: u32, ballots: Vec<WeightedBallot>) -> Result<Self, ElectionError> {
        for wb in &ballots {
            if wb.weight == 0 {
                return Err(ElectionError::ZeroWeight);
            }
            wb.ballot.validate(m)?;
        }
        Ok(Profile { m, ballots })
    }

    /// A profile with no ballots at all.
    pub fn empty(m: u32) -> Self {
        Profile {
            m,
            ballots: Vec::new(),
        }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn ballots(&self) -> &[WeightedBallot] {
        &self.ballots
    }

    /// Total ballot weight `n`.
    pub fn total_weight(&self) -> u64 {
        self.ballots.iter().map(|b| b.weight).sum()
    }

    pub fn candidates(&self) -> impl Iterator<Item = CandidateId> {
        (1..=self.m).map(CandidateId)
    }

    /// A copy of this profile with one extra weighted ballot appended.
    pub fn with_ballot(&self, ballot: Ballot, weight: u64) -> Result<Profile, ElectionError> {
        let mut ballots = self.ballots.clone();
        ballots.push(WeightedBallot { ballot, weight });
        Profile::new(self.m, ballots)
    }
}

/// How elimination ties are resolved.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum TieBreakPolicy {
    /// Always eliminate the tied candidate with the smallest index.
    /// Deterministic, used as the benchmarking default.
    #[default]
    Lexicographic,
    /// Resolve every tie in whichever way favours the manipulator; tallies
    /// and searches branch over all tied minima.
    Optimistic,
}

impl fmt::Display for TieBreakPolicy {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            TieBreakPolicy::Lexicographic => write!(f, "lexicographic"),
            TieBreakPolicy::Optimistic => write!(f, "optimistic"),
        }
    }
}

impl FromStr for TieBreakPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lexicographic" | "lex" => Ok(TieBreakPolicy::Lexicographic),
            "optimistic" | "opt" => Ok(TieBreakPolicy::Optimistic),
            other => Err(format!("unknown tie-break policy `{other}`")),
        }
    }
}

/// Scores and bookkeeping for one point of the elimination process.
///
/// Invariants: `scores[j]` is the total weight of ballots whose highest
/// ranked candidate within the remaining set is `j`; the scores over the
/// remaining set always sum to the profile's total weight; every cached
/// ballot top points at a remaining candidate.
#[derive(Clone, Debug)]
pub struct ElectionState {
    remaining: Vec<bool>,
    remaining_count: u32,
    scores: Vec<u64>,
    /// Per ballot: index into its ranking of the current top choice.
    ballot_tops: Vec<usize>,
    /// Per candidate: indices of the ballots currently counting for it.
    holders: Vec<Vec<u32>>,
    total_weight: u64,
}

/// Sets up the first elimination round: every candidate remaining, scores
/// from first preferences.
pub fn initial_state(profile: &Profile) -> Result<ElectionState, ElectionError> {
    let m = profile.m() as usize;
    if m == 0 {
        return Err(ElectionError::NoCandidates);
    }
    let mut state = ElectionState {
        remaining: vec![true; m],
        remaining_count: m as u32,
        scores: vec![0; m],
        ballot_tops: vec![0; profile.ballots().len()],
        holders: vec![Vec::new(); m],
        total_weight: profile.total_weight(),
    };
    for (i, wb) in profile.ballots().iter().enumerate() {
        let top = wb.ballot.ranking[0];
        state.scores[top.idx()] += wb.weight;
        state.holders[top.idx()].push(i as u32);
    }
    Ok(state)
}

impl ElectionState {
    pub fn remaining_count(&self) -> u32 {
        self.remaining_count
    }

    pub fn is_remaining(&self, c: CandidateId) -> bool {
        self.remaining[c.idx()]
    }

    pub fn remaining(&self) -> impl Iterator<Item = CandidateId> + '_ {
        self.remaining
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| CandidateId::from_idx(i))
    }

    /// The last candidate standing. Panics unless exactly one remains.
    pub fn sole_remaining(&self) -> CandidateId {
        assert_eq!(
            self.remaining_count, 1,
            "election still has several candidates"
        );
        self.remaining().next().unwrap()
    }

    pub fn score(&self, c: CandidateId) -> u64 {
        self.scores[c.idx()]
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    /// All remaining candidates attaining the minimum score, in ascending
    /// index order. Callers apply the tie-break policy.
    pub fn min_score_candidates(&self) -> Vec<CandidateId> {
        self.min_candidates_with_boost(None)
    }

    /// Argmin over remaining candidates of `score + w·[j = boosted]`.
    ///
    /// The boost is never written back; it models a hypothetical manipulator
    /// vote without touching shared state.
    pub(crate) fn min_candidates_with_boost(
        &self,
        boost: Option<(CandidateId, u64)>,
    ) -> Vec<CandidateId> {
        let mut best = u64::MAX;
        let mut out = Vec::new();
        for c in self.remaining() {
            let mut s = self.scores[c.idx()];
            if let Some((b, w)) = boost {
                if b == c {
                    s += w;
                }
            }
            if s < best {
                best = s;
                out.clear();
                out.push(c);
            } else if s == best {
                out.push(c);
            }
        }
        out
    }

    /// Eliminates `d` and re-assigns its ballots to their next surviving
    /// preference, returning the new state. Weight is conserved.
    ///
    /// Panics if `d` is not remaining or fewer than two candidates remain.
    pub fn transfer(&self, profile: &Profile, d: CandidateId) -> ElectionState {
        let mut next = self.clone();
        next.transfer_in_place(profile, d);
        next
    }

    pub(crate) fn transfer_in_place(&mut self, profile: &Profile, d: CandidateId) {
        assert!(
            self.is_remaining(d),
            "eliminating a candidate that is not remaining"
        );
        assert!(
            self.remaining_count >= 2,
            "cannot eliminate the last candidate"
        );
        self.remaining[d.idx()] = false;
        self.remaining_count -= 1;
        let moved = std::mem::take(&mut self.holders[d.idx()]);
        self.scores[d.idx()] = 0;
        for bi in moved {
            let wb = &profile.ballots()[bi as usize];
            let mut top = self.ballot_tops[bi as usize];
            while !self.remaining[wb.ballot.ranking[top].idx()] {
                top += 1;
            }
            self.ballot_tops[bi as usize] = top;
            let new_top = wb.ballot.ranking[top];
            self.scores[new_top.idx()] += wb.weight;
            self.holders[new_top.idx()].push(bi);
        }
    }

    /// Remaining-set bitmask, used as a memo key.
    pub(crate) fn remaining_mask(&self) -> Vec<u64> {
        let mut mask = vec![0u64; self.remaining.len().div_ceil(64)];
        for (i, &r) in self.remaining.iter().enumerate() {
            if r {
                mask[i / 64] |= 1 << (i % 64);
            }
        }
        mask
    }
}

/// Runs the full elimination tally with lexicographic tie-breaking and
/// returns the last remaining candidate.
pub fn stv_winner_lex(profile: &Profile) -> Result<CandidateId, ElectionError> {
    let mut state = initial_state(profile)?;
    while state.remaining_count() > 1 {
        let d = state.min_score_candidates()[0];
        state.transfer_in_place(profile, d);
    }
    Ok(state.sole_remaining())
}

/// Candidates that can win the election under `policy`.
///
/// Lexicographic mode returns the single deterministic winner; optimistic
/// mode branches over every tied minimum at every round and returns all
/// candidates that survive under some resolution.
pub fn stv_winners(
    profile: &Profile,
    policy: TieBreakPolicy,
) -> Result<BTreeSet<CandidateId>, ElectionError> {
    match policy {
        TieBreakPolicy::Lexicographic => {
            let mut set = BTreeSet::new();
            set.insert(stv_winner_lex(profile)?);
            Ok(set)
        }
        TieBreakPolicy::Optimistic => {
            let state = initial_state(profile)?;
            let mut memo = HashMap::new();
            Ok(optimistic_winners(profile, &state, &mut memo))
        }
    }
}

// Scores are a function of the remaining set alone, so memoizing on the
// remaining-set mask is sound and caps the recursion at one visit per subset.
fn optimistic_winners(
    profile: &Profile,
    state: &ElectionState,
    memo: &mut HashMap<Vec<u64>, BTreeSet<CandidateId>>,
) -> BTreeSet<CandidateId> {
    if state.remaining_count() == 1 {
        let mut set = BTreeSet::new();
        set.insert(state.sole_remaining());
        return set;
    }
    let key = state.remaining_mask();
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    let mut out = BTreeSet::new();
    for d in state.min_score_candidates() {
        let child = state.transfer(profile, d);
        out.extend(optimistic_winners(profile, &child, memo));
    }
    memo.insert(key, out.clone());
    out
}
