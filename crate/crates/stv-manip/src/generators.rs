//! Random vote profiles: impartial culture, Polya-Eggenberger urns, and
//! resampling of recorded election data.
//!
//! Every generator is a pure function of its parameters and an [`RngSeed`],
//! so any profile drawn in an experiment can be reproduced from the run's
//! master seed and the derived stream id alone.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::election::{Ballot, CandidateId, Profile, WeightedBallot};

/// Seed for one reproducible stream of draws.
///
/// Streams with the same `master_seed` but different `stream_id` are
/// statistically independent, which lets an experiment derive one stream per
/// trial without coordination.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngSeed {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngSeed {
            master_seed,
            stream_id,
        }
    }

    pub(crate) fn rng(self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum GenError {
    #[error("generator requires at least one candidate")]
    NoCandidates,
    #[error("urn contagion parameter must be finite and non-negative")]
    BadUrnParameter,
    #[error("axis must be a permutation of the candidates")]
    BadAxis,
    #[error("axis over {axis_m} candidates cannot order {m}")]
    AxisLengthMismatch { axis_m: u32, m: u32 },
    #[error("resampling target must have at least one candidate and one agent")]
    BadResampleTarget,
    #[error("resampling source must have at least one candidate and one ballot")]
    EmptySource,
}

/// Left-to-right order of candidates for single-peaked preferences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axis(Vec<CandidateId>);

impl Axis {
    /// Validates that `order` is a permutation of `1..=m` for its length `m`.
    pub fn new(order: Vec<CandidateId>) -> Result<Self, GenError> {
        if order.is_empty() {
            return Err(GenError::NoCandidates);
        }
        let m = order.len() as u32;
        let ballot = Ballot::new(order);
        ballot.validate(m).map_err(|_| GenError::BadAxis)?;
        Ok(Axis(ballot.ranking))
    }

    /// The axis `1, 2, ..., m`.
    pub fn identity(m: u32) -> Result<Self, GenError> {
        if m == 0 {
            return Err(GenError::NoCandidates);
        }
        Ok(Axis((1..=m).map(CandidateId).collect()))
    }

    pub fn m(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn order(&self) -> &[CandidateId] {
        &self.0
    }
}

/// A named distribution over profiles, the unit experiments sweep over.
#[derive(Clone, Debug)]
pub enum VoteModel {
    Ic,
    Urn {
        b: f64,
    },
    /// `axis: None` uses the identity axis for whatever `m` is requested.
    SinglePeakedUrn {
        b: f64,
        axis: Option<Axis>,
    },
    Dataset {
        source: Profile,
    },
}

impl VoteModel {
    pub fn name(&self) -> &'static str {
        match self {
            VoteModel::Ic => "ic",
            VoteModel::Urn { .. } => "urn",
            VoteModel::SinglePeakedUrn { .. } => "single_peaked_urn",
            VoteModel::Dataset { .. } => "dataset",
        }
    }

    /// Contagion parameter as reported in result rows; zero for models
    /// without one.
    pub fn b(&self) -> f64 {
        match self {
            VoteModel::Urn { b } | VoteModel::SinglePeakedUrn { b, .. } => *b,
            VoteModel::Ic | VoteModel::Dataset { .. } => 0.0,
        }
    }

    /// Draws a profile with `m` candidates and `n` agents.
    pub fn generate(&self, m: u32, n: u32, seed: RngSeed) -> Result<Profile, GenError> {
        match self {
            VoteModel::Ic => gen_ic(m, n, seed),
            VoteModel::Urn { b } => gen_urn(m, n, *b, seed),
            VoteModel::SinglePeakedUrn { b, axis } => match axis {
                Some(axis) => gen_single_peaked_urn(m, n, *b, axis, seed),
                None => gen_single_peaked_urn(m, n, *b, &Axis::identity(m)?, seed),
            },
            VoteModel::Dataset { source } => sample_dataset(source, m, n, seed),
        }
    }
}

impl std::fmt::Display for VoteModel {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

fn random_permutation<R: Rng>(m: u32, rng: &mut R) -> Ballot {
    let mut ranking: Vec<CandidateId> = (1..=m).map(CandidateId).collect();
    ranking.shuffle(rng);
    Ballot::new(ranking)
}

fn unit_profile(m: u32, ballots: Vec<Ballot>) -> Profile {
    let ballots = ballots
        .into_iter()
        .map(|ballot| WeightedBallot { ballot, weight: 1 })
        .collect();
    Profile::new(m, ballots).expect("generated ballots are valid by construction")
}

/// Impartial culture: `n` unit-weight ballots drawn uniformly and
/// independently from all `m!` orders.
pub fn gen_ic(m: u32, n: u32, seed: RngSeed) -> Result<Profile, GenError> {
    if m == 0 {
        return Err(GenError::NoCandidates);
    }
    let mut rng = seed.rng();
    let ballots = (0..n).map(|_| random_permutation(m, &mut rng)).collect();
    Ok(unit_profile(m, ballots))
}

/// Polya-Eggenberger sequence: the first draw is fresh; draw `t` copies a
/// uniformly chosen earlier draw with probability `t·b / (1 + t·b)` and is
/// fresh otherwise. `b = 0` is impartial culture; larger `b` means more
/// correlated electorates.
fn urn_sequence<R: Rng>(
    n: u32,
    b: f64,
    rng: &mut R,
    mut fresh: impl FnMut(&mut R) -> Ballot,
) -> Vec<Ballot> {
    let mut drawn: Vec<Ballot> = Vec::with_capacity(n as usize);
    for t in 0..n as u64 {
        let ballot = if t == 0 {
            fresh(rng)
        } else {
            let p_copy = (t as f64 * b) / (1.0 + t as f64 * b);
            if rng.random::<f64>() < p_copy {
                drawn[rng.random_range(0..t as usize)].clone()
            } else {
                fresh(rng)
            }
        };
        drawn.push(ballot);
    }
    drawn
}

fn check_urn_b(b: f64) -> Result<(), GenError> {
    if !b.is_finite() || b < 0.0 {
        return Err(GenError::BadUrnParameter);
    }
    Ok(())
}

/// Urn model over all `m!` orders with contagion `b` (fresh draws are
/// uniform permutations).
pub fn gen_urn(m: u32, n: u32, b: f64, seed: RngSeed) -> Result<Profile, GenError> {
    if m == 0 {
        return Err(GenError::NoCandidates);
    }
    check_urn_b(b)?;
    let mut rng = seed.rng();
    let ballots = urn_sequence(n, b, &mut rng, |rng| random_permutation(m, rng));
    Ok(unit_profile(m, ballots))
}

/// Fresh single-peaked ballot: uniform peak on the axis, then repeatedly
/// extend with the nearest unused candidate to the left or right of the
/// consumed interval, a fair coin deciding whenever both exist.
fn random_single_peaked<R: Rng>(axis: &Axis, rng: &mut R) -> Ballot {
    let order = axis.order();
    let m = order.len();
    let peak = rng.random_range(0..m);
    let mut ranking = Vec::with_capacity(m);
    ranking.push(order[peak]);
    let (mut lo, mut hi) = (peak, peak);
    while ranking.len() < m {
        let take_left = match (lo > 0, hi + 1 < m) {
            (true, true) => rng.random::<bool>(),
            (true, false) => true,
            (false, true) => false,
            (false, false) => unreachable!("interval exhausted before the ballot was full"),
        };
        if take_left {
            lo -= 1;
            ranking.push(order[lo]);
        } else {
            hi += 1;
            ranking.push(order[hi]);
        }
    }
    Ballot::new(ranking)
}

/// Urn model whose fresh draws are single-peaked ballots on `axis`.
/// Copying preserves single-peakedness, so every ballot in the output is
/// single-peaked on the axis.
pub fn gen_single_peaked_urn(
    m: u32,
    n: u32,
    b: f64,
    axis: &Axis,
    seed: RngSeed,
) -> Result<Profile, GenError> {
    if m == 0 {
        return Err(GenError::NoCandidates);
    }
    if axis.m() != m {
        return Err(GenError::AxisLengthMismatch {
            axis_m: axis.m(),
            m,
        });
    }
    check_urn_b(b)?;
    let mut rng = seed.rng();
    let ballots = urn_sequence(n, b, &mut rng, |rng| random_single_peaked(axis, rng));
    Ok(unit_profile(m, ballots))
}

/// Whether every prefix of the ballot covers a contiguous interval of the
/// axis, the defining property of single-peaked orders.
pub fn is_single_peaked(ballot: &Ballot, axis: &Axis) -> bool {
    let m = axis.m() as usize;
    if ballot.ranking.len() != m {
        return false;
    }
    let mut pos = vec![usize::MAX; m];
    for (i, &c) in axis.order().iter().enumerate() {
        pos[c.idx()] = i;
    }
    if ballot.ranking.iter().any(|c| c.0 < 1 || c.0 as usize > m) {
        return false;
    }
    let first = pos[ballot.ranking[0].idx()];
    let (mut lo, mut hi) = (first, first);
    for &c in &ballot.ranking[1..] {
        let p = pos[c.idx()];
        if lo > 0 && p == lo - 1 {
            lo = p;
        } else if p == hi + 1 {
            hi = p;
        } else {
            return false;
        }
    }
    true
}

/// Resamples a recorded profile to `target_m` candidates and `target_n`
/// agents, preserving its correlation structure.
///
/// Weighted source ballots count as that many identical agents. Agents are
/// drawn without replacement when the source is large enough, with
/// replacement otherwise. Shrinking the candidate set keeps one shared
/// random subset (relabelled `1..=target_m` in ascending order of the
/// original ids) and preserves every ballot's relative order on it. Growing
/// it assigns the extra ids round-robin as clones of the originals; each
/// agent ranks a clone group contiguously where the original sat, ordering
/// the group uniformly at random on its own.
pub fn sample_dataset(
    source: &Profile,
    target_m: u32,
    target_n: u32,
    seed: RngSeed,
) -> Result<Profile, GenError> {
    if target_m == 0 || target_n == 0 {
        return Err(GenError::BadResampleTarget);
    }
    if source.m() == 0 || source.total_weight() == 0 {
        return Err(GenError::EmptySource);
    }
    let mut rng = seed.rng();

    let mut units: Vec<&Ballot> = Vec::with_capacity(source.total_weight() as usize);
    for wb in source.ballots() {
        for _ in 0..wb.weight {
            units.push(&wb.ballot);
        }
    }

    let agents: Vec<&Ballot> = if (target_n as usize) <= units.len() {
        let mut pool = units.clone();
        pool.shuffle(&mut rng);
        pool.truncate(target_n as usize);
        pool
    } else {
        (0..target_n)
            .map(|_| units[rng.random_range(0..units.len())])
            .collect()
    };

    let m = source.m();
    let ballots: Vec<Ballot> = if target_m == m {
        agents.into_iter().cloned().collect()
    } else if target_m < m {
        // One subset shared by all agents, relabelled in ascending order so
        // relative order within a ballot is untouched.
        let mut keep: Vec<u32> = (1..=m).collect();
        keep.shuffle(&mut rng);
        keep.truncate(target_m as usize);
        keep.sort_unstable();
        let mut relabel = vec![None; m as usize + 1];
        for (new_idx, &old) in keep.iter().enumerate() {
            relabel[old as usize] = Some(CandidateId(new_idx as u32 + 1));
        }
        agents
            .into_iter()
            .map(|b| {
                Ballot::new(
                    b.ranking
                        .iter()
                        .filter_map(|c| relabel[c.0 as usize])
                        .collect(),
                )
            })
            .collect()
    } else {
        // Clone id `m + 1 + j` duplicates original `(j mod m) + 1`.
        let mut groups: Vec<Vec<CandidateId>> = (1..=m).map(|c| vec![CandidateId(c)]).collect();
        for j in 0..(target_m - m) {
            let original = (j % m) as usize;
            groups[original].push(CandidateId(m + 1 + j));
        }
        agents
            .into_iter()
            .map(|b| {
                let mut ranking = Vec::with_capacity(target_m as usize);
                for c in &b.ranking {
                    let mut group = groups[c.idx()].clone();
                    group.shuffle(&mut rng);
                    ranking.extend(group);
                }
                Ballot::new(ranking)
            })
            .collect()
    };

    Ok(unit_profile(target_m, ballots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::weighted;
    use std::collections::HashMap;

    fn seed(s: u64) -> RngSeed {
        RngSeed::new(s, 0)
    }

    #[test]
    fn ic_shape_and_validity() {
        let p = gen_ic(5, 20, seed(1)).unwrap();
        assert_eq!(p.m(), 5);
        assert_eq!(p.ballots().len(), 20);
        assert_eq!(p.total_weight(), 20);
        for wb in p.ballots() {
            assert_eq!(wb.weight, 1);
            wb.ballot.validate(5).unwrap();
        }
    }

    #[test]
    fn generators_are_deterministic_in_the_seed() {
        let a = gen_ic(4, 12, seed(42)).unwrap();
        let b = gen_ic(4, 12, seed(42)).unwrap();
        assert_eq!(a, b);
        let c = gen_ic(4, 12, seed(43)).unwrap();
        assert_ne!(a, c);

        let a = gen_urn(4, 12, 1.0, seed(42)).unwrap();
        let b = gen_urn(4, 12, 1.0, seed(42)).unwrap();
        assert_eq!(a, b);

        let axis = Axis::identity(4).unwrap();
        let a = gen_single_peaked_urn(4, 12, 1.0, &axis, seed(42)).unwrap();
        let b = gen_single_peaked_urn(4, 12, 1.0, &axis, seed(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_differ() {
        let a = gen_ic(4, 12, RngSeed::new(42, 0)).unwrap();
        let b = gen_ic(4, 12, RngSeed::new(42, 1)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn urn_rejects_bad_contagion() {
        assert_eq!(
            gen_urn(3, 5, -1.0, seed(0)).unwrap_err(),
            GenError::BadUrnParameter
        );
        assert_eq!(
            gen_urn(3, 5, f64::NAN, seed(0)).unwrap_err(),
            GenError::BadUrnParameter
        );
        assert_eq!(
            gen_urn(0, 5, 1.0, seed(0)).unwrap_err(),
            GenError::NoCandidates
        );
    }

    #[test]
    fn strong_contagion_yields_near_unanimous_profiles() {
        // With b = 1000 virtually every draw after the first is a copy.
        let p = gen_urn(4, 30, 1000.0, seed(9)).unwrap();
        let mut counts: HashMap<&Ballot, u32> = HashMap::new();
        for wb in p.ballots() {
            *counts.entry(&wb.ballot).or_default() += 1;
        }
        let max = counts.values().copied().max().unwrap();
        assert!(max >= 28, "expected a dominant ballot, largest block {max}");
    }

    #[test]
    fn single_peaked_draws_respect_the_axis() {
        let axis = Axis::new(vec![
            CandidateId(2),
            CandidateId(4),
            CandidateId(1),
            CandidateId(3),
        ])
        .unwrap();
        let p = gen_single_peaked_urn(4, 200, 0.5, &axis, seed(3)).unwrap();
        for wb in p.ballots() {
            assert!(
                is_single_peaked(&wb.ballot, &axis),
                "{} not single-peaked",
                wb.ballot
            );
        }
    }

    #[test]
    fn single_peaked_checker_rejects_violations() {
        let axis = Axis::identity(4).unwrap();
        // 1 then 3 skips over 2: the prefix {1,3} is not an interval.
        assert!(!is_single_peaked(&Ballot::from_ids(&[1, 3, 2, 4]), &axis));
        assert!(is_single_peaked(&Ballot::from_ids(&[2, 3, 1, 4]), &axis));
        assert!(is_single_peaked(&Ballot::from_ids(&[4, 3, 2, 1]), &axis));
        assert!(!is_single_peaked(&Ballot::from_ids(&[1, 2, 3]), &axis));
    }

    #[test]
    fn single_peaked_peak_positions_cover_the_axis() {
        let axis = Axis::identity(5).unwrap();
        let p = gen_single_peaked_urn(5, 500, 0.0, &axis, seed(11)).unwrap();
        let mut peaks = [0u32; 5];
        for wb in p.ballots() {
            peaks[wb.ballot.ranking[0].idx()] += 1;
        }
        for (i, &c) in peaks.iter().enumerate() {
            assert!(c > 50, "peak {} drawn only {c} times in 500", i + 1);
        }
    }

    #[test]
    fn axis_validation() {
        assert!(Axis::new(vec![CandidateId(1), CandidateId(1)]).is_err());
        assert!(Axis::new(vec![CandidateId(1), CandidateId(3)]).is_err());
        assert!(Axis::new(Vec::new()).is_err());
        assert_eq!(Axis::identity(3).unwrap().order().len(), 3);
        let p = gen_single_peaked_urn(3, 4, 0.0, &Axis::identity(4).unwrap(), seed(0));
        assert_eq!(
            p.unwrap_err(),
            GenError::AxisLengthMismatch { axis_m: 4, m: 3 }
        );
    }

    fn source_profile() -> Profile {
        Profile::new(
            4,
            weighted(&[(2, &[1, 2, 3, 4]), (1, &[4, 3, 2, 1]), (1, &[2, 1, 4, 3])]),
        )
        .unwrap()
    }

    #[test]
    fn resample_identity_target_is_a_multiset_draw() {
        let src = source_profile();
        let p = sample_dataset(&src, 4, 4, seed(5)).unwrap();
        assert_eq!(p.m(), 4);
        assert_eq!(p.ballots().len(), 4);
        // Without replacement at target_n = n: exactly the source multiset.
        let mut got: Vec<String> = p.ballots().iter().map(|b| b.ballot.to_string()).collect();
        got.sort();
        let mut want = vec![
            "1>2>3>4".to_string(),
            "1>2>3>4".to_string(),
            "4>3>2>1".to_string(),
            "2>1>4>3".to_string(),
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn resample_upsamples_agents_with_replacement() {
        let src = source_profile();
        let p = sample_dataset(&src, 4, 50, seed(6)).unwrap();
        assert_eq!(p.ballots().len(), 50);
        let originals: Vec<String> = src.ballots().iter().map(|b| b.ballot.to_string()).collect();
        for wb in p.ballots() {
            assert!(originals.contains(&wb.ballot.to_string()));
        }
    }

    #[test]
    fn resample_shrinking_candidates_preserves_relative_order() {
        let src = source_profile();
        for s in 0..20 {
            let p = sample_dataset(&src, 2, 4, seed(s)).unwrap();
            assert_eq!(p.m(), 2);
            for wb in p.ballots() {
                wb.ballot.validate(2).unwrap();
            }
            // Every output ballot must be one of the two orders induced by
            // some source ballot on the surviving pair; since each source
            // order appears alongside its reverse here, just check validity
            // and that all agents used the same pair mapping by brute
            // comparison against each candidate pair.
            let found_orders: std::collections::HashSet<String> =
                p.ballots().iter().map(|b| b.ballot.to_string()).collect();
            for o in &found_orders {
                assert!(o == "1>2" || o == "2>1");
            }
        }
    }

    #[test]
    fn resample_shrink_order_preservation_exact() {
        // Source where every ballot has the same order; any surviving pair
        // must come out as 1>2 after relabelling.
        let src = Profile::new(4, weighted(&[(3, &[1, 2, 3, 4])])).unwrap();
        for s in 0..30 {
            let p = sample_dataset(&src, 2, 3, seed(s)).unwrap();
            for wb in p.ballots() {
                assert_eq!(wb.ballot.to_string(), "1>2");
            }
        }
    }

    #[test]
    fn resample_growing_candidates_keeps_clone_groups_adjacent() {
        let src = Profile::new(2, weighted(&[(2, &[2, 1])])).unwrap();
        // target_m = 5: clones of 1 are {1,3,5}, clones of 2 are {2,4}.
        let p = sample_dataset(&src, 5, 6, seed(8)).unwrap();
        for wb in p.ballots() {
            wb.ballot.validate(5).unwrap();
            let group_of = |c: &CandidateId| if c.0.is_multiple_of(2) { 2 } else { 1 };
            let groups: Vec<u32> = wb.ballot.ranking.iter().map(group_of).collect();
            // Source order 2>1 means all of group 2 precede all of group 1.
            assert_eq!(groups, vec![2, 2, 1, 1, 1], "ballot {}", wb.ballot);
        }
    }

    #[test]
    fn resample_growing_breaks_clone_ties_per_agent() {
        let src = Profile::new(2, weighted(&[(1, &[1, 2])])).unwrap();
        let p = sample_dataset(&src, 6, 200, seed(10)).unwrap();
        // Group of 1 is {1,3,5}: with per-agent uniform tie-breaking all six
        // internal orders should appear.
        let mut seen = std::collections::HashSet::new();
        for wb in p.ballots() {
            let prefix: Vec<u32> = wb.ballot.ranking[..3].iter().map(|c| c.0).collect();
            seen.insert(prefix);
        }
        assert_eq!(seen.len(), 6, "got {seen:?}");
    }

    #[test]
    fn resample_rejects_degenerate_inputs() {
        let src = source_profile();
        assert_eq!(
            sample_dataset(&src, 0, 4, seed(0)).unwrap_err(),
            GenError::BadResampleTarget
        );
        assert_eq!(
            sample_dataset(&src, 4, 0, seed(0)).unwrap_err(),
            GenError::BadResampleTarget
        );
        assert_eq!(
            sample_dataset(&Profile::empty(3), 3, 3, seed(0)).unwrap_err(),
            GenError::EmptySource
        );
    }

    #[test]
    fn resample_is_deterministic() {
        let src = source_profile();
        let a = sample_dataset(&src, 6, 20, seed(12)).unwrap();
        let b = sample_dataset(&src, 6, 20, seed(12)).unwrap();
        assert_eq!(a, b);
    }
}
