//! The measurement harness: seeded sweeps over election sizes, per-point
//! statistics, and exponential scaling fits.
//!
//! Every trial is a pure function of `(master_seed, point_index,
//! trial_index)`: the profile and the chosen candidate come from two rng
//! streams derived from that triple. Parallelism only reorders execution,
//! never draws, so a sweep's CSV is byte-identical at any `--jobs` level.

use rand::Rng;
use thiserror::Error;

use crate::election::{CandidateId, TieBreakPolicy};
use crate::formats::ResultRow;
use crate::generators::{GenError, RngSeed, VoteModel};
use crate::solver::{
    csl_possible_winners_with, manipulate_improved_with, BranchOrder, ManipulationQuery,
};

/// Which solver a measurement exercises. `Both` runs the improved search
/// and the CSL baseline on identical instances for paired comparison.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Algorithm {
    #[default]
    Improved,
    Csl,
    Both,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        match self {
            Algorithm::Improved => write!(f, "improved"),
            Algorithm::Csl => write!(f, "csl"),
            Algorithm::Both => write!(f, "both"),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "improved" => Ok(Algorithm::Improved),
            "csl" => Ok(Algorithm::Csl),
            "both" => Ok(Algorithm::Both),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

/// Which dimension a sweep walks; the other two stay fixed.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SweepAxis {
    VaryN,
    VaryM,
    VaryCoalition,
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        match self {
            SweepAxis::VaryN => write!(f, "vary_n"),
            SweepAxis::VaryM => write!(f, "vary_m"),
            SweepAxis::VaryCoalition => write!(f, "vary_coalition"),
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vary_n" | "vary-n" | "n" => Ok(SweepAxis::VaryN),
            "vary_m" | "vary-m" | "m" => Ok(SweepAxis::VaryM),
            "vary_coalition" | "vary-coalition" | "coalition" => Ok(SweepAxis::VaryCoalition),
            other => Err(format!("unknown sweep axis `{other}`")),
        }
    }
}

#[derive(Error, Debug)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Generation(#[from] GenError),
    #[error("sweep point {index} (value {point}) failed: {source}")]
    PointFailed {
        index: usize,
        point: u64,
        source: GenError,
    },
    #[error("fit requires at least three points")]
    FitTooFewPoints,
    #[error("fit requires every mean node count to be positive and finite")]
    FitNonPositive,
    #[error("fit requires at least two distinct m values")]
    FitDegenerate,
}

/// One measured cell: a model, an election size, a solver, and a trial
/// count, all tied to a master seed plus this point's index in its sweep.
#[derive(Clone, Debug)]
pub struct PointSpec {
    pub model: VoteModel,
    pub m: u32,
    pub n: u32,
    pub w: u64,
    /// Must be `Improved` or `Csl`; sweeps expand `Both` into two points.
    pub algorithm: Algorithm,
    pub policy: TieBreakPolicy,
    pub order: BranchOrder,
    pub trials: u32,
    pub master_seed: u64,
    pub point_index: u32,
    /// When false, recorded times are exactly zero so output stays
    /// byte-stable across machines and schedules.
    pub measure_time: bool,
}

/// Aggregates over one point's trials.
#[derive(Clone, Debug, PartialEq)]
pub struct StatSummary {
    pub trials: u32,
    pub successes: u32,
    pub p_manip: f64,
    pub mean_nodes: f64,
    pub median_nodes: f64,
    pub p90_nodes: f64,
    pub mean_time_ms: f64,
}

#[derive(Clone, Copy, Debug)]
struct TrialRecord {
    manipulable: bool,
    nodes: u64,
    time_ms: f64,
}

/// Seed streams for one trial. The low bit separates the profile stream
/// from the chosen-candidate stream; everything above identifies the trial.
fn trial_streams(point_index: u32, trial_index: u32) -> (u64, u64) {
    let s = ((point_index as u64) << 32) | trial_index as u64;
    (2 * s, 2 * s + 1)
}

fn run_trial(spec: &PointSpec, trial_index: u32) -> Result<TrialRecord, GenError> {
    let (profile_stream, chosen_stream) = trial_streams(spec.point_index, trial_index);
    let profile = spec.model.generate(
        spec.m,
        spec.n,
        RngSeed::new(spec.master_seed, profile_stream),
    )?;
    let chosen = CandidateId(
        RngSeed::new(spec.master_seed, chosen_stream)
            .rng()
            .random_range(1..=spec.m),
    );
    let (manipulable, nodes, elapsed) = match spec.algorithm {
        Algorithm::Improved => {
            let query = ManipulationQuery::new(profile, chosen, spec.w, spec.policy)
                .expect("trial queries are valid by construction");
            let out = manipulate_improved_with(&query, spec.order);
            (out.manipulable, out.stats.nodes, out.stats.elapsed)
        }
        Algorithm::Csl => {
            let (winners, stats) =
                csl_possible_winners_with(&profile, spec.w, spec.policy, spec.order);
            (winners.contains(&chosen), stats.nodes, stats.elapsed)
        }
        Algorithm::Both => unreachable!("validated before trials start"),
    };
    let time_ms = if spec.measure_time {
        elapsed.as_secs_f64() * 1e3
    } else {
        0.0
    };
    Ok(TrialRecord {
        manipulable,
        nodes,
        time_ms,
    })
}

fn summarize(records: &[TrialRecord]) -> StatSummary {
    let trials = records.len() as u32;
    assert!(trials >= 1);
    let successes = records.iter().filter(|r| r.manipulable).count() as u32;
    let mut nodes: Vec<u64> = records.iter().map(|r| r.nodes).collect();
    nodes.sort_unstable();
    let len = nodes.len();
    let mean_nodes = nodes.iter().sum::<u64>() as f64 / len as f64;
    let median_nodes = if len % 2 == 1 {
        nodes[len / 2] as f64
    } else {
        (nodes[len / 2 - 1] + nodes[len / 2]) as f64 / 2.0
    };
    // Nearest-rank percentile: smallest value with at least 90% of the
    // sample at or below it.
    let p90_idx = ((0.9 * len as f64).ceil() as usize).max(1) - 1;
    let p90_nodes = nodes[p90_idx.min(len - 1)] as f64;
    let mean_time_ms = records.iter().map(|r| r.time_ms).sum::<f64>() / len as f64;
    StatSummary {
        trials,
        successes,
        p_manip: successes as f64 / trials as f64,
        mean_nodes,
        median_nodes,
        p90_nodes,
        mean_time_ms,
    }
}

fn validate_point(spec: &PointSpec) -> Result<(), ExperimentError> {
    if spec.algorithm == Algorithm::Both {
        return Err(ExperimentError::InvalidSpec(
            "a point measures one algorithm; expand `both` into two points".into(),
        ));
    }
    if spec.trials < 1 {
        return Err(ExperimentError::InvalidSpec(
            "trials must be at least 1".into(),
        ));
    }
    if spec.m < 1 {
        return Err(ExperimentError::InvalidSpec("m must be at least 1".into()));
    }
    if spec.w < 1 {
        return Err(ExperimentError::InvalidSpec("w must be at least 1".into()));
    }
    Ok(())
}

/// Runs one point sequentially.
pub fn run_point(spec: &PointSpec) -> Result<StatSummary, ExperimentError> {
    run_point_jobs(spec, 1)
}

/// Runs one point with up to `jobs` worker threads. The result is
/// identical for every `jobs` value.
pub fn run_point_jobs(spec: &PointSpec, jobs: usize) -> Result<StatSummary, ExperimentError> {
    validate_point(spec)?;
    let records: Vec<TrialRecord> = if jobs <= 1 {
        let mut records = Vec::with_capacity(spec.trials as usize);
        for t in 0..spec.trials {
            records.push(run_trial(spec, t)?);
        }
        records
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| ExperimentError::InvalidSpec(format!("thread pool: {e}")))?;
        // Collect in trial order, then aggregate sequentially: scheduling
        // cannot influence the summary.
        let results: Vec<Result<TrialRecord, GenError>> = pool.install(|| {
            (0..spec.trials)
                .into_par_iter()
                .map(|t| run_trial(spec, t))
                .collect()
        });
        results.into_iter().collect::<Result<Vec<_>, _>>()?
    };
    Ok(summarize(&records))
}

/// A full experiment grid: one dimension walks `points`, the others hold
/// still.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub model: VoteModel,
    pub axis: SweepAxis,
    /// Fixed candidate count; ignored when the axis varies m.
    pub m: u32,
    /// Fixed agent count; ignored when the axis varies n.
    pub n: u32,
    /// Fixed manipulator weight; ignored when the axis varies the coalition.
    pub w: u64,
    pub points: Vec<u64>,
    pub trials: u32,
    pub algorithm: Algorithm,
    pub policy: TieBreakPolicy,
    pub order: BranchOrder,
    pub master_seed: u64,
    pub measure_time: bool,
}

impl SweepSpec {
    /// Powers of two from 1 to 128, the customary sweep grid.
    pub fn default_points() -> Vec<u64> {
        (0..8).map(|i| 1u64 << i).collect()
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let err = |msg: &str| Err(ExperimentError::InvalidSpec(msg.into()));
        if self.trials < 1 {
            return err("trials must be at least 1");
        }
        if self.points.is_empty() {
            return err("point list must not be empty");
        }
        if !self.points.windows(2).all(|p| p[0] < p[1]) {
            return err("point list must be strictly increasing");
        }
        match self.axis {
            SweepAxis::VaryN => {
                if self.m < 1 {
                    return err("vary_n sweeps need a fixed m of at least 1");
                }
                if self.points.iter().any(|&p| p > u32::MAX as u64) {
                    return err("n points must fit in 32 bits");
                }
            }
            SweepAxis::VaryM => {
                if self.points.iter().any(|&p| p < 1 || p > u32::MAX as u64) {
                    return err("m points must be positive and fit in 32 bits");
                }
            }
            SweepAxis::VaryCoalition => {
                if self.m < 1 {
                    return err("coalition sweeps need a fixed m of at least 1");
                }
                if self.points.iter().any(|&p| p < 1) {
                    return err("coalition sizes must be at least 1");
                }
            }
        }
        if self.w < 1 && !matches!(self.axis, SweepAxis::VaryCoalition) {
            return err("w must be at least 1");
        }
        Ok(())
    }

    /// The `(m, n, w)` cell a given axis point denotes.
    pub fn cell(&self, point: u64) -> (u32, u32, u64) {
        match self.axis {
            SweepAxis::VaryN => (self.m, point as u32, self.w),
            SweepAxis::VaryM => (point as u32, self.n, self.w),
            SweepAxis::VaryCoalition => (self.m, self.n, point),
        }
    }

    fn algorithms(&self) -> Vec<Algorithm> {
        match self.algorithm {
            Algorithm::Both => vec![Algorithm::Improved, Algorithm::Csl],
            single => vec![single],
        }
    }
}

/// Runs a sweep and collects one CSV row per point per algorithm. With
/// `Both`, each point contributes the improved row first, then the CSL row,
/// both measured on identical instances.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<ResultRow>, ExperimentError> {
    run_sweep_with(spec, jobs, |_, _| {})
}

/// As [`run_sweep`], invoking `on_row` after each row is computed, in
/// emission order. The callback receives the algorithm the row measured,
/// which the CSV schema itself does not record.
pub fn run_sweep_with(
    spec: &SweepSpec,
    jobs: usize,
    mut on_row: impl FnMut(Algorithm, &ResultRow),
) -> Result<Vec<ResultRow>, ExperimentError> {
    spec.validate()?;
    let mut rows = Vec::new();
    for (index, &point) in spec.points.iter().enumerate() {
        let (m, n, w) = spec.cell(point);
        for algorithm in spec.algorithms() {
            let point_spec = PointSpec {
                model: spec.model.clone(),
                m,
                n,
                w,
                algorithm,
                policy: spec.policy,
                order: spec.order,
                trials: spec.trials,
                master_seed: spec.master_seed,
                point_index: index as u32,
                measure_time: spec.measure_time,
            };
            let summary = run_point_jobs(&point_spec, jobs).map_err(|e| match e {
                ExperimentError::Generation(source) => ExperimentError::PointFailed {
                    index,
                    point,
                    source,
                },
                other => other,
            })?;
            let row = ResultRow {
                model: spec.model.name().to_string(),
                m,
                n,
                w,
                b: spec.model.b(),
                trials: spec.trials,
                tie_break: spec.policy,
                branch_order: spec.order,
                p_manip: summary.p_manip,
                mean_nodes: summary.mean_nodes,
                median_nodes: summary.median_nodes,
                p90_nodes: summary.p90_nodes,
                mean_time_ms: summary.mean_time_ms,
                seed: spec.master_seed,
            };
            on_row(algorithm, &row);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Coalition sizes k spanning k/√n from roughly 0.25 to 4, rounded to
/// integers, clamped to `1..=n`, deduplicated, strictly increasing.
pub fn coalition_axis(n: u32) -> Vec<u64> {
    assert!(n >= 1, "coalition axis needs at least one agent");
    let sqrt = (n as f64).sqrt();
    let mut ks: Vec<u64> = [0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|r| ((r * sqrt).round() as u64).clamp(1, n as u64))
        .collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// Parameters of the model `nodes ≈ a·bᵐ`, fit in log space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `log(mean_nodes) = log a + m·log b` over `(m,
/// mean_nodes)` points. `r_squared` is computed on the log scale and
/// defined as 1 when the total variance is zero.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<FitResult, ExperimentError> {
    if points.len() < 3 {
        return Err(ExperimentError::FitTooFewPoints);
    }
    if points
        .iter()
        .any(|&(x, y)| !x.is_finite() || !y.is_finite() || y <= 0.0)
    {
        return Err(ExperimentError::FitNonPositive);
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(x, _)| x).collect();
    let zs: Vec<f64> = points.iter().map(|&(_, y)| y.ln()).collect();
    let x_bar = xs.iter().sum::<f64>() / n;
    let z_bar = zs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ExperimentError::FitDegenerate);
    }
    let sxz: f64 = xs
        .iter()
        .zip(&zs)
        .map(|(x, z)| (x - x_bar) * (z - z_bar))
        .sum();
    let slope = sxz / sxx;
    let intercept = z_bar - slope * x_bar;
    let ss_res: f64 = xs
        .iter()
        .zip(&zs)
        .map(|(x, z)| (z - (intercept + slope * x)).powi(2))
        .sum();
    let ss_tot: f64 = zs.iter().map(|z| (z - z_bar).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(FitResult {
        a: intercept.exp(),
        b: slope.exp(),
        r_squared,
    })
}
