//! Comma-delimited tables and TOML summaries.
//!
//! Trajectory files start with a `t_s` column followed by the state labels.
//! Every radian column is followed by a degree copy. Numbers use 17
//! significant digits so a file round-trips bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::integrator::Trajectory;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("trajectory has no samples")]
    EmptyTrajectory,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

fn parse_err(line: usize, detail: impl Into<String>) -> OutputError {
    OutputError::Parse {
        line,
        detail: detail.into(),
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Degree label paired with a radian label, if any.
fn degree_label(label: &str) -> Option<String> {
    if let Some(base) = label.strip_suffix("_radps") {
        Some(format!("{base}_degps"))
    } else {
        label.strip_suffix("_rad").map(|base| format!("{base}_deg"))
    }
}

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders every `sample_every`-th sample; the last sample is always kept.
pub fn trajectory_csv(traj: &Trajectory, sample_every: usize) -> Result<String, OutputError> {
    if traj.is_empty() {
        return Err(OutputError::EmptyTrajectory);
    }
    let stride = sample_every.max(1);
    let degree: Vec<bool> = traj.labels.iter().map(|l| degree_label(l).is_some()).collect();
    let mut out = String::from("t_s");
    for label in &traj.labels {
        out.push(',');
        out.push_str(label);
        if let Some(deg) = degree_label(label) {
            out.push(',');
            out.push_str(&deg);
        }
    }
    out.push('\n');
    let last = traj.len() - 1;
    for (i, (t, state)) in traj.times.iter().zip(&traj.states).enumerate() {
        if i % stride != 0 && i != last {
            continue;
        }
        out.push_str(&format_number(*t));
        for (v, is_angle) in state.iter().zip(&degree) {
            out.push(',');
            out.push_str(&format_number(*v));
            if *is_angle {
                out.push(',');
                out.push_str(&format_number(v.to_degrees()));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<(), OutputError> {
    write_trajectory_sampled(traj, path, 1)
}

pub fn write_trajectory_sampled(traj: &Trajectory, path: &Path, sample_every: usize) -> Result<(), OutputError> {
    write_file(path, &trajectory_csv(traj, sample_every)?)
}

/// Reads a trajectory file back. Degree copies of radian columns are dropped.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory, OutputError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.first() != Some(&"t_s") {
        return Err(parse_err(1, "first column must be t_s"));
    }
    for (i, c) in columns.iter().enumerate() {
        if c.is_empty() {
            return Err(parse_err(1, format!("column {} has an empty name", i + 1)));
        }
        if columns[..i].contains(c) {
            return Err(parse_err(1, format!("duplicate column {c}")));
        }
    }
    let keep: Vec<bool> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            i > 0
                && !columns[1..]
                    .iter()
                    .any(|other| degree_label(other).as_deref() == Some(c))
        })
        .collect();
    let labels = columns
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(c, _)| c.to_string())
        .collect();

    let mut times: Vec<f64> = Vec::new();
    let mut states = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(parse_err(
                line_no,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        let mut values = Vec::with_capacity(fields.len());
        for field in fields {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(line_no, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value {field:?}")));
            }
            values.push(v);
        }
        let t = values[0];
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(parse_err(line_no, "times must increase strictly"));
            }
        }
        times.push(t);
        states.push(
            values
                .into_iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(v, _)| v)
                .collect(),
        );
    }
    if times.is_empty() {
        return Err(OutputError::EmptyTrajectory);
    }
    Ok(Trajectory {
        labels,
        times,
        states,
        metadata: Vec::new(),
    })
}

/// Rectangular table of pre-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

pub fn write_table(table: &Table, path: &Path) -> Result<(), OutputError> {
    write_file(path, &table.to_csv())
}

pub fn emit_summary(summary: &toml::Table, path: &Path) -> Result<(), OutputError> {
    let text = toml::to_string(summary).expect("summary tables hold only TOML values");
    write_file(path, &text)
}
