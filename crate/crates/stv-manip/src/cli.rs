//! Command-line front end: generate profiles, solve instances, run sweeps,
//! fit scaling models, and cross-check the solvers against the oracle.
//!
//! Exit codes are part of the interface: 0 success (and "not manipulable"
//! is a success), 1 I/O failures or check disagreements, 2 flag and
//! configuration errors, 3 input file parse errors, 4 oracle budget
//! exceeded.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::election::{Ballot, CandidateId, TieBreakPolicy};
use crate::experiments::{
    coalition_axis, fit_exponential, run_sweep_with, Algorithm, SweepAxis, SweepSpec,
};
use crate::formats::{
    open_result_file, parse_profile, parse_result_rows, write_profile, ResultRow,
};
use crate::generators::{Axis, RngSeed, VoteModel};
use crate::oracle::{
    brute_force_manipulable, run_agreement_check_with, AgreementConfig, OracleBudget,
};
use crate::solver::{
    csl_possible_winners_with, manipulate_improved, manipulate_improved_with, BranchOrder,
    ManipulationQuery,
};

const EXIT_IO: u8 = 1;
const EXIT_FLAGS: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_BUDGET: u8 = 4;

enum CliError {
    /// Inconsistent or invalid flags / spec-file configuration.
    Flags(String),
    /// Filesystem failures.
    Io(String),
    /// Malformed input files (profiles, CSVs).
    Parse(String),
    /// The brute-force oracle refused the instance.
    Budget(String),
    /// Check found disagreements (message already printed).
    CheckFailed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Flags(_) => EXIT_FLAGS,
            CliError::Io(_) => EXIT_IO,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::CheckFailed => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            CliError::Flags(m) | CliError::Io(m) | CliError::Parse(m) | CliError::Budget(m) => {
                write!(f, "{m}")
            }
            CliError::CheckFailed => write!(f, "solver/oracle disagreement"),
        }
    }
}

fn flags(msg: impl Into<String>) -> CliError {
    CliError::Flags(msg.into())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

#[derive(Parser)]
#[command(
    name = "stv-manip",
    version,
    about = "Solve and benchmark manipulation of single transferable vote elections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random profile file
    Gen(GenArgs),
    /// Decide whether the manipulator can make a chosen candidate win
    Solve(SolveArgs),
    /// Run an experiment sweep and append rows to a result CSV
    Bench(BenchArgs),
    /// Fit the scaling model nodes = a*b^m to rows of a result CSV
    Fit(FitArgs),
    /// Cross-check both solvers against the brute-force oracle
    Check(CheckArgs),
}

/// Parses and runs the process arguments; the returned code is the exit
/// status.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Check(args) => cmd_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::CheckFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}

fn parse_id_list(s: &str, what: &str) -> Result<Vec<u32>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| flags(format!("{what}: `{t}` is not a candidate id")))
        })
        .collect()
}

/// Model construction shared by gen and bench: rejects parameters that do
/// not belong to the model, naming the flag.
fn build_model(
    name: &str,
    b: Option<f64>,
    peak_axis: Option<&str>,
    dataset_file: Option<&Path>,
    fixed_m: Option<u32>,
) -> Result<VoteModel, CliError> {
    let no_b = || {
        b.is_none()
            .then_some(())
            .ok_or_else(|| flags(format!("--b does not apply to model `{name}`")))
    };
    let no_axis = || {
        peak_axis
            .is_none()
            .then_some(())
            .ok_or_else(|| flags(format!("--peak-axis does not apply to model `{name}`")))
    };
    let no_dataset = || {
        dataset_file
            .is_none()
            .then_some(())
            .ok_or_else(|| flags(format!("--dataset-file does not apply to model `{name}`")))
    };
    let need_b = || b.ok_or_else(|| flags(format!("--b is required for model `{name}`")));
    match name {
        "ic" => {
            no_b()?;
            no_axis()?;
            no_dataset()?;
            Ok(VoteModel::Ic)
        }
        "urn" => {
            no_axis()?;
            no_dataset()?;
            Ok(VoteModel::Urn { b: need_b()? })
        }
        "single_peaked_urn" | "single-peaked-urn" => {
            no_dataset()?;
            let b = need_b()?;
            let axis = match peak_axis {
                None => None,
                Some(raw) => {
                    let ids = parse_id_list(raw, "--peak-axis")?;
                    let axis = Axis::new(ids.into_iter().map(CandidateId).collect())
                        .map_err(|e| flags(format!("--peak-axis: {e}")))?;
                    if let Some(m) = fixed_m {
                        if axis.m() != m {
                            return Err(flags(format!(
                                "--peak-axis lists {} candidates but m is {m}",
                                axis.m()
                            )));
                        }
                    }
                    Some(axis)
                }
            };
            Ok(VoteModel::SinglePeakedUrn { b, axis })
        }
        "dataset" => {
            no_b()?;
            no_axis()?;
            let path = dataset_file
                .ok_or_else(|| flags("--dataset-file is required for model `dataset`"))?;
            let text = read_file(path)?;
            let source = parse_profile(&text)
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            Ok(VoteModel::Dataset { source })
        }
        other => Err(flags(format!(
            "unknown model `{other}` (expected ic, urn, single_peaked_urn, or dataset)"
        ))),
    }
}

#[derive(Args)]
struct GenArgs {
    /// Vote model: ic, urn, single_peaked_urn, or dataset
    #[arg(long)]
    model: String,
    /// Number of candidates
    #[arg(long)]
    m: u32,
    /// Number of agents (ballots)
    #[arg(long)]
    n: u32,
    /// Urn contagion parameter (urn models only)
    #[arg(long)]
    b: Option<f64>,
    /// Left-to-right candidate axis for single-peaked draws, e.g. 2,1,3;
    /// defaults to 1..m
    #[arg(long = "peak-axis")]
    peak_axis: Option<String>,
    /// Profile to resample (model dataset only)
    #[arg(long = "dataset-file")]
    dataset_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; the profile goes to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let model = build_model(
        &args.model,
        args.b,
        args.peak_axis.as_deref(),
        args.dataset_file.as_deref(),
        Some(args.m),
    )?;
    let profile = model
        .generate(args.m, args.n, RngSeed::new(args.seed, 0))
        .map_err(|e| flags(e.to_string()))?;
    let text = write_profile(&profile);
    let summary = format!(
        "model={} m={} n={} seed={}",
        model.name(),
        profile.m(),
        profile.total_weight(),
        args.seed
    );
    match &args.out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            println!("wrote {}: {summary}", path.display());
        }
        None => {
            print!("{text}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

#[derive(Args)]
struct SolveArgs {
    /// Profile file to load
    #[arg(long)]
    profile: PathBuf,
    /// Candidate the manipulator wants elected (1-based)
    #[arg(long)]
    chosen: u32,
    /// Manipulator weight (coalition size voting in unison)
    #[arg(long, default_value_t = 1)]
    weight: u64,
    /// improved, csl, or oracle
    #[arg(long, default_value = "improved")]
    algorithm: String,
    #[arg(long = "tie-break", default_value = "lexicographic", value_parser = TieBreakPolicy::from_str)]
    tie_break: TieBreakPolicy,
    #[arg(long = "branch-order", default_value = "right-first", value_parser = BranchOrder::from_str)]
    branch_order: BranchOrder,
    /// Candidate cap for the brute-force oracle
    #[arg(long = "oracle-max-m", default_value_t = 8)]
    oracle_max_m: u32,
}

fn format_witness(witness: &Option<Ballot>) -> String {
    match witness {
        None => "none".to_string(),
        Some(b) => b
            .ranking
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(","),
    }
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let text = read_file(&args.profile)?;
    let profile = parse_profile(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.profile.display())))?;
    let chosen = CandidateId(args.chosen);
    let query = ManipulationQuery::new(profile, chosen, args.weight, args.tie_break)
        .map_err(|e| flags(e.to_string()))?;
    match args.algorithm.as_str() {
        "improved" => {
            let out = manipulate_improved_with(&query, args.branch_order);
            println!(
                "manipulable={} nodes={} time_ms={:.3} witness={}",
                out.manipulable,
                out.stats.nodes,
                out.stats.elapsed.as_secs_f64() * 1e3,
                format_witness(&out.witness)
            );
        }
        "csl" => {
            let (winners, stats) = csl_possible_winners_with(
                &query.profile,
                query.weight,
                query.policy,
                args.branch_order,
            );
            println!(
                "manipulable={} nodes={} time_ms={:.3} witness=none winner_set_size={}",
                winners.contains(&chosen),
                stats.nodes,
                stats.elapsed.as_secs_f64() * 1e3,
                winners.len()
            );
        }
        "oracle" => {
            let budget =
                OracleBudget::new(args.oracle_max_m, OracleBudget::default().max_enumerations);
            let start = Instant::now();
            let out = brute_force_manipulable(&query, &budget)
                .map_err(|e| CliError::Budget(e.to_string()))?;
            println!(
                "manipulable={} nodes={} time_ms={:.3} witness={}",
                out.manipulable,
                out.enumerations,
                start.elapsed().as_secs_f64() * 1e3,
                format_witness(&out.witness)
            );
        }
        other => {
            return Err(flags(format!(
                "unknown algorithm `{other}` (expected improved, csl, or oracle)"
            )))
        }
    }
    Ok(())
}

#[derive(Args)]
struct BenchArgs {
    /// Sweep description as `key = value` lines; exclusive with the grid
    /// flags below
    #[arg(long = "spec-file")]
    spec_file: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// Swept dimension: n, m, or coalition
    #[arg(long)]
    vary: Option<String>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    w: Option<u64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long = "peak-axis")]
    peak_axis: Option<String>,
    #[arg(long = "dataset-file")]
    dataset_file: Option<PathBuf>,
    /// Comma-separated axis values; defaults to powers of two 1..128, or
    /// the normalized coalition sizes for coalition sweeps
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    trials: Option<u32>,
    /// improved, csl, or both (both measures the two on identical
    /// instances; rows come improved first, then csl, per point)
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long = "tie-break")]
    tie_break: Option<String>,
    #[arg(long = "branch-order")]
    branch_order: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record real wall-clock means in mean_time_ms; default writes zeros
    /// so reruns with one seed are byte-identical
    #[arg(long)]
    time: bool,
    /// Worker threads; any value produces identical output
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Result CSV path (appended to if it exists)
    #[arg(long)]
    out: PathBuf,
}

/// Sweep settings before validation, collected from flags or a spec file.
#[derive(Default)]
struct SweepDraft {
    model: Option<String>,
    b: Option<f64>,
    peak_axis: Option<String>,
    dataset_file: Option<PathBuf>,
    vary: Option<String>,
    m: Option<u32>,
    n: Option<u32>,
    w: Option<u64>,
    points: Option<String>,
    trials: Option<u32>,
    algorithm: Option<String>,
    tie_break: Option<String>,
    branch_order: Option<String>,
    seed: Option<u64>,
    measure_time: bool,
}

impl SweepDraft {
    fn from_spec_file(text: &str) -> Result<SweepDraft, CliError> {
        let mut draft = SweepDraft::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (key, value) = t
                .split_once('=')
                .ok_or_else(|| flags(format!("spec file line {line}: expected `key = value`")))?;
            let key = key.trim();
            let value = value.trim().to_string();
            fn num<T: FromStr>(v: &str, line: usize, key: &str) -> Result<T, CliError> {
                v.parse()
                    .map_err(|_| flags(format!("spec file line {line}: bad value for `{key}`")))
            }
            match key {
                "model" => draft.model = Some(value),
                "b" => draft.b = Some(num(&value, line, key)?),
                "peak_axis" => draft.peak_axis = Some(value),
                "dataset_file" => draft.dataset_file = Some(PathBuf::from(value)),
                "axis" => draft.vary = Some(value),
                "m" => draft.m = Some(num(&value, line, key)?),
                "n" => draft.n = Some(num(&value, line, key)?),
                "w" => draft.w = Some(num(&value, line, key)?),
                "points" => draft.points = Some(value),
                "trials" => draft.trials = Some(num(&value, line, key)?),
                "algorithm" => draft.algorithm = Some(value),
                "tie_break" => draft.tie_break = Some(value),
                "branch_order" => draft.branch_order = Some(value),
                "seed" | "master_seed" => draft.seed = Some(num(&value, line, key)?),
                "measure_time" => draft.measure_time = num(&value, line, key)?,
                other => {
                    return Err(flags(format!(
                        "spec file line {line}: unknown key `{other}`"
                    )))
                }
            }
        }
        Ok(draft)
    }

    fn into_sweep(self) -> Result<SweepSpec, CliError> {
        let axis: SweepAxis = self
            .vary
            .as_deref()
            .ok_or_else(|| flags("a sweep needs an axis: pass --vary n|m|coalition"))?
            .parse()
            .map_err(flags)?;
        let m = match axis {
            SweepAxis::VaryM => self.m.unwrap_or(0),
            _ => self
                .m
                .ok_or_else(|| flags(format!("--m is required for {axis} sweeps")))?,
        };
        let n = match axis {
            SweepAxis::VaryN => self.n.unwrap_or(0),
            _ => self
                .n
                .ok_or_else(|| flags(format!("--n is required for {axis} sweeps")))?,
        };
        let model_name = self.model.as_deref().unwrap_or("ic");
        if matches!(axis, SweepAxis::VaryM) && self.peak_axis.is_some() {
            return Err(flags(
                "--peak-axis cannot be fixed while m varies; omit it to use the identity axis",
            ));
        }
        let model = build_model(
            model_name,
            self.b,
            self.peak_axis.as_deref(),
            self.dataset_file.as_deref(),
            (!matches!(axis, SweepAxis::VaryM)).then_some(m),
        )?;
        let points = match &self.points {
            Some(raw) => raw
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u64>()
                        .map_err(|_| flags(format!("--points: `{t}` is not an integer")))
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => match axis {
                SweepAxis::VaryCoalition => coalition_axis(n),
                _ => SweepSpec::default_points(),
            },
        };
        let algorithm: Algorithm = self
            .algorithm
            .as_deref()
            .unwrap_or("improved")
            .parse()
            .map_err(flags)?;
        let policy: TieBreakPolicy = self
            .tie_break
            .as_deref()
            .unwrap_or("lexicographic")
            .parse()
            .map_err(flags)?;
        let order: BranchOrder = self
            .branch_order
            .as_deref()
            .unwrap_or("right-first")
            .parse()
            .map_err(flags)?;
        let spec = SweepSpec {
            model,
            axis,
            m,
            n,
            w: self.w.unwrap_or(1),
            points,
            trials: self.trials.unwrap_or(1000),
            algorithm,
            policy,
            order,
            master_seed: self.seed.unwrap_or(0),
            measure_time: self.measure_time,
        };
        spec.validate().map_err(|e| flags(e.to_string()))?;
        Ok(spec)
    }
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let draft = match &args.spec_file {
        Some(path) => {
            let grid_flags_used = args.model.is_some()
                || args.vary.is_some()
                || args.m.is_some()
                || args.n.is_some()
                || args.w.is_some()
                || args.b.is_some()
                || args.peak_axis.is_some()
                || args.dataset_file.is_some()
                || args.points.is_some()
                || args.trials.is_some()
                || args.algorithm.is_some()
                || args.tie_break.is_some()
                || args.branch_order.is_some()
                || args.seed.is_some()
                || args.time;
            if grid_flags_used {
                return Err(flags("--spec-file cannot be combined with sweep flags"));
            }
            SweepDraft::from_spec_file(&read_file(path)?)?
        }
        None => SweepDraft {
            model: args.model,
            b: args.b,
            peak_axis: args.peak_axis,
            dataset_file: args.dataset_file,
            vary: args.vary,
            m: args.m,
            n: args.n,
            w: args.w,
            points: args.points,
            trials: args.trials,
            algorithm: args.algorithm,
            tie_break: args.tie_break,
            branch_order: args.branch_order,
            seed: args.seed,
            measure_time: args.time,
        },
    };
    let spec = draft.into_sweep()?;
    let mut writer = open_result_file(&args.out)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", args.out.display())))?;
    let mut write_error: Option<std::io::Error> = None;
    let rows = run_sweep_with(&spec, args.jobs.max(1), |algorithm, row| {
        if write_error.is_none() {
            if let Err(e) = writer.append(row) {
                write_error = Some(e);
                return;
            }
            println!(
                "point m={} n={} w={} algorithm={algorithm}: p_manip={:.4} mean_nodes={:.2}",
                row.m, row.n, row.w, row.p_manip, row.mean_nodes
            );
        }
    })
    .map_err(|e| flags(e.to_string()))?;
    if let Some(e) = write_error {
        return Err(CliError::Io(format!(
            "cannot write {}: {e}",
            args.out.display()
        )));
    }
    writer
        .flush()
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", args.out.display())))?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

#[derive(Args)]
struct FitArgs {
    /// Result CSV produced by bench
    #[arg(long)]
    csv: PathBuf,
    /// Keep only rows matching key=value (repeatable or comma-separated),
    /// e.g. --filter model=ic,n=16
    #[arg(long)]
    filter: Vec<String>,
}

fn row_matches(row: &ResultRow, key: &str, value: &str) -> Result<bool, CliError> {
    let bad = |what: &str| flags(format!("--filter {key}={value}: bad {what}"));
    Ok(match key {
        "model" => row.model == value,
        "m" => value.parse::<u32>().map_err(|_| bad("integer"))? == row.m,
        "n" => value.parse::<u32>().map_err(|_| bad("integer"))? == row.n,
        "w" => value.parse::<u64>().map_err(|_| bad("integer"))? == row.w,
        "b" => value.parse::<f64>().map_err(|_| bad("number"))? == row.b,
        "trials" => value.parse::<u32>().map_err(|_| bad("integer"))? == row.trials,
        "seed" => value.parse::<u64>().map_err(|_| bad("integer"))? == row.seed,
        "tie_break" => value.parse::<TieBreakPolicy>().map_err(flags)? == row.tie_break,
        "branch_order" => value.parse::<BranchOrder>().map_err(flags)? == row.branch_order,
        other => return Err(flags(format!("--filter: unknown column `{other}`"))),
    })
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let text = read_file(&args.csv)?;
    let rows = parse_result_rows(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.csv.display())))?;
    let mut filters: Vec<(String, String)> = Vec::new();
    for group in &args.filter {
        for clause in group.split(',') {
            let (k, v) = clause
                .split_once('=')
                .ok_or_else(|| flags(format!("--filter: `{clause}` is not key=value")))?;
            filters.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let mut kept = Vec::new();
    'rows: for row in &rows {
        for (k, v) in &filters {
            if !row_matches(row, k, v)? {
                continue 'rows;
            }
        }
        kept.push(row);
    }
    if kept.len() < 3 {
        return Err(flags(format!(
            "fit needs at least 3 matching rows, found {}",
            kept.len()
        )));
    }
    let points: Vec<(f64, f64)> = kept.iter().map(|r| (r.m as f64, r.mean_nodes)).collect();
    let fit = fit_exponential(&points).map_err(|e| flags(e.to_string()))?;
    println!("a={:.6} b={:.6} r2={:.6}", fit.a, fit.b, fit.r_squared);
    Ok(())
}

#[derive(Args)]
struct CheckArgs {
    /// Largest candidate count in the grid (from 2 up)
    #[arg(long = "m-max", default_value_t = 5)]
    m_max: u32,
    /// Largest agent count in the grid (from 1 up)
    #[arg(long = "n-max", default_value_t = 8)]
    n_max: u32,
    /// Seeded instances per grid configuration
    #[arg(long, default_value_t = 200)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Contagion parameter of the urn half of the grid
    #[arg(long = "urn-b", default_value_t = 1.0)]
    urn_b: f64,
    /// Candidate cap for the brute-force oracle
    #[arg(long = "oracle-max-m", default_value_t = 8)]
    oracle_max_m: u32,
    /// Self-test fixture: negate every improved-solver decision, which must
    /// make the check fail
    #[arg(long = "self-test-mutant", hide = true)]
    self_test_mutant: bool,
}

fn cmd_check(args: CheckArgs) -> Result<(), CliError> {
    if args.m_max < 2 {
        return Err(flags("--m-max must be at least 2"));
    }
    if args.n_max < 1 {
        return Err(flags("--n-max must be at least 1"));
    }
    if args.trials < 1 {
        return Err(flags("--trials must be at least 1"));
    }
    if !args.urn_b.is_finite() || args.urn_b < 0.0 {
        return Err(flags("--urn-b must be finite and non-negative"));
    }
    let budget = OracleBudget::new(args.oracle_max_m, OracleBudget::default().max_enumerations);
    if args.m_max > budget.max_m {
        return Err(flags(format!(
            "--m-max {} exceeds the oracle budget of {}",
            args.m_max, budget.max_m
        )));
    }
    let cfg = AgreementConfig {
        m_max: args.m_max,
        n_max: args.n_max,
        weights: vec![1, 2],
        models: vec![VoteModel::Ic, VoteModel::Urn { b: args.urn_b }],
        policies: vec![TieBreakPolicy::Lexicographic, TieBreakPolicy::Optimistic],
        trials_per_config: args.trials,
        master_seed: args.seed,
        budget,
    };
    let decision: Box<dyn Fn(&ManipulationQuery) -> bool> = if args.self_test_mutant {
        Box::new(|q| !manipulate_improved(q).manipulable)
    } else {
        Box::new(|q| manipulate_improved(q).manipulable)
    };
    let report =
        run_agreement_check_with(&cfg, decision).map_err(|e| CliError::Budget(e.to_string()))?;
    println!(
        "configs={} instances={} agreements={} disagreements={}",
        report.configs,
        report.instances,
        report.instances - report.disagreements,
        report.disagreements
    );
    if report.all_agree() {
        return Ok(());
    }
    for mm in &report.mismatches {
        println!(
            "disagreement: model={} policy={} w={} chosen={} improved={} oracle={} csl_member={} seed=({},{})",
            mm.model,
            mm.policy,
            mm.weight,
            mm.chosen,
            mm.improved,
            mm.oracle,
            mm.csl_member,
            mm.seed.master_seed,
            mm.seed.stream_id
        );
        print!("{}", write_profile(&mm.profile));
    }
    Err(CliError::CheckFailed)
}
