//! Labelled series and trajectory collections, with their text formats.
//!
//! Series files hold one instance per line: the class label followed by the
//! values, separated by commas or by whitespace. Trajectory files are CSV
//! with a header line and one point per row: `traj_id,t,x,y,label`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::Series;
use crate::sfc::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Split {
    Train,
    Test,
    #[default]
    Unspecified,
}

impl Split {
    /// Guesses the split from a UCR-style file stem such as `Coffee_TRAIN`.
    fn from_stem(stem: &str) -> (String, Split) {
        let upper = stem.to_ascii_uppercase();
        for (suffix, split) in [("_TRAIN", Split::Train), ("_TEST", Split::Test)] {
            if upper.ends_with(suffix) {
                return (stem[..stem.len() - suffix.len()].to_string(), split);
            }
        }
        (stem.to_string(), Split::Unspecified)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub split: Split,
    pub instances: Vec<(String, Series)>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, split: Split, instances: Vec<(String, Series)>) -> Self {
        LabeledDataset {
            name: name.into(),
            split,
            instances,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.instances.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn series(&self) -> Vec<Series> {
        self.instances.iter().map(|(_, s)| s.clone()).collect()
    }

    /// Common series length, if every instance has the same one.
    pub fn series_length(&self) -> Option<usize> {
        let first = self.instances.first()?.1.len();
        self.instances
            .iter()
            .all(|(_, s)| s.len() == first)
            .then_some(first)
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn parse_value(field: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| {
        Error::data(format!("line {line}, field {column}: '{field}' is not a number"))
    })?;
    if !v.is_finite() {
        return Err(Error::data(format!(
            "line {line}, field {column}: non-finite value '{field}'"
        )));
    }
    Ok(v)
}

/// Parses series text; `equal_length` rejects rows whose length differs from
/// the first row.
pub fn parse_ucr(text: &str, name: &str, split: Split, equal_length: bool) -> Result<LabeledDataset> {
    let mut instances = Vec::new();
    let mut expected = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields = split_fields(line);
        let label = fields[0];
        if label.is_empty() {
            return Err(Error::data(format!("line {line_no}: missing class label")));
        }
        if fields.len() < 2 {
            return Err(Error::data(format!("line {line_no}: no series values")));
        }
        let values = fields[1..]
            .iter()
            .enumerate()
            .map(|(j, f)| parse_value(f, line_no, j + 2))
            .collect::<Result<Vec<_>>>()?;
        if equal_length {
            match expected {
                None => expected = Some(values.len()),
                Some(n) if n != values.len() => {
                    return Err(Error::data(format!(
                        "line {line_no}: {} values, expected {n} as on the first row",
                        values.len()
                    )))
                }
                _ => {}
            }
        }
        let series = Series::from_values(values).map_err(|e| e.context(format!("line {line_no}")))?;
        instances.push((label.to_string(), series));
    }
    if instances.is_empty() {
        return Err(Error::data(format!("dataset '{name}' has no instances")));
    }
    Ok(LabeledDataset::new(name, split, instances))
}

/// Loads an equal-length series file.
pub fn load_ucr(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    load_series_file(path.as_ref(), true)
}

/// Loads a series file whose rows may differ in length.
pub fn load_ucr_variable(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    load_series_file(path.as_ref(), false)
}

fn load_series_file(path: &Path, equal_length: bool) -> Result<LabeledDataset> {
    let (name, split) = Split::from_stem(&stem(path));
    parse_ucr(&read_text(path)?, &name, split, equal_length)
        .map_err(|e| e.context(path.display().to_string()))
}

/// Comma-separated form of a dataset; reloading it gives back the same
/// values bit for bit.
pub fn format_ucr(dataset: &LabeledDataset) -> String {
    let mut out = String::new();
    for (label, series) in &dataset.instances {
        out.push_str(label);
        for v in series.values() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_ucr(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_ucr(dataset)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub id: String,
    pub label: String,
    pub times: Vec<f64>,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    pub name: String,
    pub instances: Vec<TrajectoryRecord>,
}

impl TrajectoryDataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.instances.iter().map(|r| r.label.clone()).collect()
    }

    /// Shortest and longest trajectory.
    pub fn length_range(&self) -> Option<(usize, usize)> {
        let lens = self.instances.iter().map(|r| r.trajectory.len());
        Some((lens.clone().min()?, lens.max()?))
    }
}

pub const TRAJECTORY_HEADER: &str = "traj_id,t,x,y,label";

/// Parses trajectory CSV. Points are grouped by id in order of first
/// appearance; within an id, `t` must strictly increase down the file.
pub fn parse_trajectories(text: &str, name: &str) -> Result<TrajectoryDataset> {
    struct Pending {
        id: String,
        label: String,
        times: Vec<f64>,
        points: Vec<(f64, f64)>,
    }
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::data(format!("trajectory file '{name}' is empty")))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() != 5 || cols[0].parse::<f64>().is_ok() {
        return Err(Error::data(format!(
            "line 1: expected header '{TRAJECTORY_HEADER}'"
        )));
    }
    let mut pending: Vec<Pending> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let f: Vec<&str> = raw.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(Error::data(format!(
                "line {line_no}: expected 5 fields, found {}",
                f.len()
            )));
        }
        let t = parse_value(f[1], line_no, 2)?;
        let x = parse_value(f[2], line_no, 3)?;
        let y = parse_value(f[3], line_no, 4)?;
        let slot = *index.entry(f[0].to_string()).or_insert_with(|| {
            pending.push(Pending {
                id: f[0].to_string(),
                label: f[4].to_string(),
                times: Vec::new(),
                points: Vec::new(),
            });
            pending.len() - 1
        });
        let p = &mut pending[slot];
        if p.label != f[4] {
            return Err(Error::data(format!(
                "line {line_no}: trajectory '{}' changes label from '{}' to '{}'",
                p.id, p.label, f[4]
            )));
        }
        if p.times.last().is_some_and(|&last| t <= last) {
            return Err(Error::data(format!(
                "line {line_no}: time {t} of trajectory '{}' is not after the previous point",
                p.id
            )));
        }
        p.times.push(t);
        p.points.push((x, y));
    }
    if pending.is_empty() {
        return Err(Error::data(format!("trajectory file '{name}' has no points")));
    }
    let instances = pending
        .into_iter()
        .map(|p| {
            Ok(TrajectoryRecord {
                trajectory: Trajectory::new(p.points)?,
                id: p.id,
                label: p.label,
                times: p.times,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryDataset {
        name: name.to_string(),
        instances,
    })
}

pub fn load_trajectories(path: impl AsRef<Path>) -> Result<TrajectoryDataset> {
    let path = path.as_ref();
    let (name, _) = Split::from_stem(&stem(path));
    parse_trajectories(&read_text(path)?, &name).map_err(|e| e.context(path.display().to_string()))
}

pub fn format_trajectories(dataset: &TrajectoryDataset) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for rec in &dataset.instances {
        for (t, (x, y)) in rec.times.iter().zip(rec.trajectory.points()) {
            let _ = writeln!(out, "{},{t},{x},{y},{}", rec.id, rec.label);
        }
    }
    out
}

pub fn write_trajectories(dataset: &TrajectoryDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_trajectories(dataset)).map_err(|e| Error::io(path, e))
}
