//! Text formats: profile files and experiment result CSV.
//!
//! Both formats are plain UTF-8 with LF line endings. Writers emit the same
//! bytes for the same values on every platform, which is what makes seeded
//! experiment runs diffable.

use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::election::{Ballot, CandidateId, Profile, TieBreakPolicy, WeightedBallot};
use crate::solver::BranchOrder;

/// Parse failures carry the 1-based line number of the offending line.
#[derive(Error, Debug, PartialEq)]
pub enum ParseError {
    #[error("line {line}: expected header `m <count>` with a positive count")]
    MalformedHeader { line: usize },
    #[error("line {line}: expected `<weight>: <id> <id> ...`")]
    MalformedBallot { line: usize },
    #[error("line {line}: ballot weight must be a positive integer")]
    BadWeight { line: usize },
    #[error("line {line}: candidate {id} is out of range 1..={m}")]
    UnknownCandidate { line: usize, id: u64, m: u32 },
    #[error("line {line}: candidate {id} appears twice in one ballot")]
    DuplicateCandidate { line: usize, id: u32 },
    #[error("line {line}: ballot must rank exactly {expected} candidates, found {got}")]
    WrongBallotLength {
        line: usize,
        expected: u32,
        got: usize,
    },
    #[error("missing `m <count>` header")]
    MissingHeader,
    #[error("line {line}: {message}")]
    MalformedCsv { line: usize, message: String },
}

fn is_comment_or_blank(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t.starts_with('#')
}

/// Parses the profile text format:
///
/// ```text
/// # optional comments
/// m 3
/// 2: 1 2 3
/// 1: 3 2 1
/// ```
///
/// The header gives the candidate count; each ballot line is a weight, a
/// colon, and a full ranking of all candidates.
pub fn parse_profile(text: &str) -> Result<Profile, ParseError> {
    let mut m: Option<u32> = None;
    let mut ballots: Vec<WeightedBallot> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if is_comment_or_blank(raw) {
            continue;
        }
        let Some(m) = m else {
            let mut parts = raw.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some("m"), Some(count), None) => {
                    let count: u32 = count
                        .parse()
                        .ok()
                        .filter(|&c| c >= 1)
                        .ok_or(ParseError::MalformedHeader { line })?;
                    m = Some(count);
                }
                _ => return Err(ParseError::MalformedHeader { line }),
            }
            continue;
        };
        let (weight_part, ids_part) = raw
            .split_once(':')
            .ok_or(ParseError::MalformedBallot { line })?;
        let weight: u64 = weight_part
            .trim()
            .parse()
            .map_err(|_| ParseError::MalformedBallot { line })?;
        if weight == 0 {
            return Err(ParseError::BadWeight { line });
        }
        let mut ranking: Vec<CandidateId> = Vec::with_capacity(m as usize);
        let mut seen = vec![false; m as usize];
        for tok in ids_part.split_whitespace() {
            let id: u64 = tok
                .parse()
                .map_err(|_| ParseError::MalformedBallot { line })?;
            if id < 1 || id > m as u64 {
                return Err(ParseError::UnknownCandidate { line, id, m });
            }
            let id = id as u32;
            if seen[id as usize - 1] {
                return Err(ParseError::DuplicateCandidate { line, id });
            }
            seen[id as usize - 1] = true;
            ranking.push(CandidateId(id));
        }
        if ranking.len() != m as usize {
            return Err(ParseError::WrongBallotLength {
                line,
                expected: m,
                got: ranking.len(),
            });
        }
        ballots.push(WeightedBallot {
            ballot: Ballot::new(ranking),
            weight,
        });
    }
    let m = m.ok_or(ParseError::MissingHeader)?;
    Ok(Profile::new(m, ballots).expect("parser enforced all profile invariants"))
}

/// Serializes a profile; `parse_profile` inverts this exactly.
pub fn write_profile(profile: &Profile) -> String {
    let mut out = String::new();
    writeln!(out, "m {}", profile.m()).unwrap();
    for wb in profile.ballots() {
        write!(out, "{}:", wb.weight).unwrap();
        for c in &wb.ballot.ranking {
            write!(out, " {c}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Column order of the result CSV. One row per sweep point per algorithm.
pub const RESULT_CSV_HEADER: &str =
    "model,m,n,w,b,trials,tie_break,branch_order,p_manip,mean_nodes,median_nodes,p90_nodes,mean_time_ms,seed";

/// One aggregated measurement row. `algorithm` is not a CSV column; when a
/// sweep runs both algorithms it writes the improved row and then the CSL
/// row for each point, in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub model: String,
    pub m: u32,
    pub n: u32,
    pub w: u64,
    pub b: f64,
    pub trials: u32,
    pub tie_break: TieBreakPolicy,
    pub branch_order: BranchOrder,
    pub p_manip: f64,
    pub mean_nodes: f64,
    pub median_nodes: f64,
    pub p90_nodes: f64,
    pub mean_time_ms: f64,
    pub seed: u64,
}

impl ResultRow {
    /// The row as one CSV line, no trailing newline. Floats use fixed
    /// six-decimal formatting so output is byte-stable.
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            self.model,
            self.m,
            self.n,
            self.w,
            self.b,
            self.trials,
            self.tie_break,
            self.branch_order,
            self.p_manip,
            self.mean_nodes,
            self.median_nodes,
            self.p90_nodes,
            self.mean_time_ms,
            self.seed
        )
    }

    fn parse_csv_line(raw: &str, line: usize) -> Result<ResultRow, ParseError> {
        let err = |message: &str| ParseError::MalformedCsv {
            line,
            message: message.into(),
        };
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 14 {
            return Err(err(&format!("expected 14 fields, found {}", fields.len())));
        }
        fn num<T: FromStr>(s: &str, line: usize, what: &str) -> Result<T, ParseError> {
            s.parse().map_err(|_| ParseError::MalformedCsv {
                line,
                message: format!("bad {what} `{s}`"),
            })
        }
        Ok(ResultRow {
            model: fields[0].to_string(),
            m: num(fields[1], line, "m")?,
            n: num(fields[2], line, "n")?,
            w: num(fields[3], line, "w")?,
            b: num(fields[4], line, "b")?,
            trials: num(fields[5], line, "trials")?,
            tie_break: fields[6]
                .parse()
                .map_err(|e: String| ParseError::MalformedCsv { line, message: e })?,
            branch_order: fields[7]
                .parse()
                .map_err(|e: String| ParseError::MalformedCsv { line, message: e })?,
            p_manip: num(fields[8], line, "p_manip")?,
            mean_nodes: num(fields[9], line, "mean_nodes")?,
            median_nodes: num(fields[10], line, "median_nodes")?,
            p90_nodes: num(fields[11], line, "p90_nodes")?,
            mean_time_ms: num(fields[12], line, "mean_time_ms")?,
            seed: num(fields[13], line, "seed")?,
        })
    }
}

/// Parses a whole result CSV, header line included.
pub fn parse_result_rows(text: &str) -> Result<Vec<ResultRow>, ParseError> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if raw != RESULT_CSV_HEADER {
                return Err(ParseError::MalformedCsv {
                    line,
                    message: format!("expected header `{RESULT_CSV_HEADER}`"),
                });
            }
            saw_header = true;
            continue;
        }
        rows.push(ResultRow::parse_csv_line(raw, line)?);
    }
    if !saw_header {
        return Err(ParseError::MalformedCsv {
            line: 1,
            message: format!("expected header `{RESULT_CSV_HEADER}`"),
        });
    }
    Ok(rows)
}

/// Streaming CSV writer that emits the header exactly once per file.
pub struct ResultWriter<W: Write> {
    sink: W,
    header_written: bool,
}

impl<W: Write> ResultWriter<W> {
    /// Writer for a fresh sink; the header goes out before the first row.
    pub fn new(sink: W) -> Self {
        ResultWriter {
            sink,
            header_written: false,
        }
    }

    /// Writer for a sink that already holds a header (appending).
    pub fn resuming(sink: W) -> Self {
        ResultWriter {
            sink,
            header_written: true,
        }
    }

    pub fn append(&mut self, row: &ResultRow) -> io::Result<()> {
        if !self.header_written {
            writeln!(self.sink, "{RESULT_CSV_HEADER}")?;
            self.header_written = true;
        }
        writeln!(self.sink, "{}", row.to_csv_line())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.sink.flush()
    }
}

/// Opens `path` for appending rows, creating it if needed. A non-empty
/// existing file is assumed to start with the header already.
pub fn open_result_file(path: &Path) -> io::Result<ResultWriter<BufWriter<File>>> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let has_content = file.metadata()?.len() > 0;
    let sink = BufWriter::new(file);
    Ok(if has_content {
        ResultWriter::resuming(sink)
    } else {
        ResultWriter::new(sink)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::weighted;

    #[test]
    fn profile_roundtrip() {
        let p = Profile::new(3, weighted(&[(2, &[1, 2, 3]), (1, &[3, 2, 1])])).unwrap();
        let text = write_profile(&p);
        assert_eq!(text, "m 3\n2: 1 2 3\n1: 3 2 1\n");
        assert_eq!(parse_profile(&text).unwrap(), p);
    }

    #[test]
    fn parser_skips_comments_and_blanks() {
        let text = "# an election\n\nm 2\n# the voters\n1: 2 1\n  # indented comment\n3: 1 2\n";
        let p = parse_profile(text).unwrap();
        assert_eq!(p.m(), 2);
        assert_eq!(p.ballots().len(), 2);
        assert_eq!(p.total_weight(), 4);
    }

    #[test]
    fn parser_accepts_header_only_profiles() {
        let p = parse_profile("m 5\n").unwrap();
        assert_eq!(p.m(), 5);
        assert!(p.ballots().is_empty());
    }

    #[test]
    fn parser_reports_lines_for_each_failure() {
        assert_eq!(parse_profile(""), Err(ParseError::MissingHeader));
        assert_eq!(
            parse_profile("mm 3\n"),
            Err(ParseError::MalformedHeader { line: 1 })
        );
        assert_eq!(
            parse_profile("m 0\n"),
            Err(ParseError::MalformedHeader { line: 1 })
        );
        assert_eq!(
            parse_profile("# hi\nm 3\n1: 1 2\n"),
            Err(ParseError::WrongBallotLength {
                line: 3,
                expected: 3,
                got: 2
            })
        );
        assert_eq!(
            parse_profile("m 3\n1: 1 2 4\n"),
            Err(ParseError::UnknownCandidate {
                line: 2,
                id: 4,
                m: 3
            })
        );
        assert_eq!(
            parse_profile("m 3\n1: 1 2 2\n"),
            Err(ParseError::DuplicateCandidate { line: 2, id: 2 })
        );
        assert_eq!(
            parse_profile("m 3\n0: 1 2 3\n"),
            Err(ParseError::BadWeight { line: 2 })
        );
        assert_eq!(
            parse_profile("m 3\n2 1 2 3\n"),
            Err(ParseError::MalformedBallot { line: 2 })
        );
        assert_eq!(
            parse_profile("m 3\nx: 1 2 3\n"),
            Err(ParseError::MalformedBallot { line: 2 })
        );
    }

    fn sample_row() -> ResultRow {
        ResultRow {
            model: "ic".into(),
            m: 8,
            n: 16,
            w: 1,
            b: 0.0,
            trials: 1000,
            tie_break: TieBreakPolicy::Lexicographic,
            branch_order: BranchOrder::RightFirst,
            p_manip: 0.4321,
            mean_nodes: 12.625,
            median_nodes: 11.0,
            p90_nodes: 30.0,
            mean_time_ms: 0.0,
            seed: 7,
        }
    }

    #[test]
    fn csv_header_and_row_shape() {
        let row = sample_row();
        let line = row.to_csv_line();
        assert_eq!(
            line,
            "ic,8,16,1,0.000000,1000,lexicographic,right-first,0.432100,12.625000,11.000000,30.000000,0.000000,7"
        );
        assert_eq!(
            line.split(',').count(),
            RESULT_CSV_HEADER.split(',').count()
        );
    }

    #[test]
    fn csv_roundtrip_through_writer() {
        let row = sample_row();
        let mut buf = Vec::new();
        {
            let mut w = ResultWriter::new(&mut buf);
            w.append(&row).unwrap();
            w.append(&row).unwrap();
            w.flush().unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next().unwrap(), RESULT_CSV_HEADER);
        let rows = parse_result_rows(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].model, "ic");
        assert_eq!(rows[0].mean_nodes, 12.625);
        assert_eq!(rows[0].tie_break, TieBreakPolicy::Lexicographic);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(matches!(
            parse_result_rows("nonsense\n"),
            Err(ParseError::MalformedCsv { line: 1, .. })
        ));
        let text = format!("{RESULT_CSV_HEADER}\nic,8\n");
        assert!(matches!(
            parse_result_rows(&text),
            Err(ParseError::MalformedCsv { line: 2, .. })
        ));
        let text =
            format!("{RESULT_CSV_HEADER}\nic,8,16,1,0.0,10,lexicographic,sideways,0,1,1,1,0,7\n");
        assert!(matches!(
            parse_result_rows(&text),
            Err(ParseError::MalformedCsv { line: 2, .. })
        ));
    }

    #[test]
    fn result_file_append_keeps_single_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        {
            let mut w = open_result_file(&path).unwrap();
            w.append(&sample_row()).unwrap();
            w.flush().unwrap();
        }
        {
            let mut w = open_result_file(&path).unwrap();
            w.append(&sample_row()).unwrap();
            w.flush().unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let headers = text.lines().filter(|l| *l == RESULT_CSV_HEADER).count();
        assert_eq!(headers, 1);
        assert_eq!(parse_result_rows(&text).unwrap().len(), 2);
    }
}
