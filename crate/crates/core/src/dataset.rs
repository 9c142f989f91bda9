//! CSV input and output for jump data, and preprocessing of raw
//! building/contents fire-loss records.
//!
//! Jump files have the header `time,w1,w2` or `time,w1,w2,kind`. Floats are
//! written with Rust's shortest round-trip formatting, so reading a file
//! and writing it back reproduces it byte for byte.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::inference::ObservationSet;
use crate::simulation::{Jump, JumpKind};

/// Loss level, in millions, a coordinate must exceed to be retained.
pub const LOSS_THRESHOLD: f64 = 0.75;

pub fn write_jumps<W: Write>(out: W, jumps: &[Jump], with_kind: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if with_kind {
        w.write_record(["time", "w1", "w2", "kind"])?;
    } else {
        w.write_record(["time", "w1", "w2"])?;
    }
    for j in jumps {
        let (t, a, b) = (j.time.to_string(), j.w1.to_string(), j.w2.to_string());
        if with_kind {
            w.write_record([t.as_str(), a.as_str(), b.as_str(), j.kind.label()])?;
        } else {
            w.write_record([t, a, b])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_field(rec: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<f64> {
    let raw = rec.get(idx).ok_or_else(|| Error::InvalidRecord {
        line,
        message: format!("missing column '{name}'"),
    })?;
    raw.trim().parse::<f64>().map_err(|e| Error::InvalidRecord {
        line,
        message: format!("column '{name}': cannot parse '{raw}': {e}"),
    })
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

/// Reads a jump file. Without a `kind` column the kind is inferred from
/// which sizes are positive.
pub fn read_jumps<R: Read>(input: R) -> Result<Vec<Jump>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(ti), Some(ai), Some(bi)) = (col("time"), col("w1"), col("w2")) else {
        return Err(Error::InvalidRecord {
            line: 1,
            message: format!("expected header time,w1,w2[,kind], got '{}'", headers.iter().collect::<Vec<_>>().join(",")),
        });
    };
    let ki = col("kind");
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let time = parse_field(&rec, ti, "time", line)?;
        let w1 = parse_field(&rec, ai, "w1", line)?;
        let w2 = parse_field(&rec, bi, "w2", line)?;
        let kind = match ki.and_then(|k| rec.get(k)) {
            Some(s) => s.parse::<JumpKind>().map_err(|e| Error::InvalidRecord {
                line,
                message: e.to_string(),
            })?,
            None => JumpKind::classify(w1, w2).ok_or_else(|| Error::InvalidRecord {
                line,
                message: "both sizes are zero".into(),
            })?,
        };
        out.push(Jump { time, w1, w2, kind });
    }
    Ok(out)
}

pub fn read_jumps_file(path: &Path) -> Result<Vec<Jump>> {
    read_jumps(File::open(path)?)
}

/// Reads an observation file. The horizon defaults to the last jump time.
pub fn read_observations(path: &Path, horizon: Option<f64>) -> Result<ObservationSet> {
    let jumps = read_jumps_file(path)?;
    if jumps.is_empty() {
        return Err(Error::Empty("observation file has no rows"));
    }
    let t = horizon.unwrap_or_else(|| jumps.iter().map(|j| j.time).fold(0.0, f64::max));
    ObservationSet::new(t, jumps)
}

fn parse_date(raw: &str, line: usize) -> Result<NaiveDate> {
    let s = raw.trim();
    ["%Y-%m-%d", "%m/%d/%Y", "%d.%m.%Y", "%Y/%m/%d"]
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(s, f).ok())
        .ok_or_else(|| Error::InvalidRecord {
            line,
            message: format!("cannot parse date '{s}'"),
        })
}

/// Result of preprocessing raw loss records.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub observations: ObservationSet,
    /// Rows read from the input, before filtering.
    pub rows: usize,
}

/// Keeps records where both losses exceed the threshold, or one exceeds it
/// while the other is zero. Sizes are `ln(loss / 0.75)`.
///
/// Times are years since the first record (days / 365); the horizon is the
/// span of the records. A given `horizon` rescales times onto
/// `[0, horizon]` instead.
///
/// Columns are located by headers containing "date", "build" and "content"
/// when present, otherwise the first three columns are used.
pub fn preprocess_losses<R: Read>(input: R, horizon: Option<f64>) -> Result<Preprocessed> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let find = |key: &str| {
        headers
            .iter()
            .position(|h| h.to_ascii_lowercase().contains(key))
    };
    let (di, bi, ci) = match (find("date"), find("build"), find("content")) {
        (Some(d), Some(b), Some(c)) => (d, b, c),
        _ => (0, 1, 2),
    };

    let mut raw = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        rows += 1;
        let line = line_of(&rec);
        let date = parse_date(rec.get(di).unwrap_or(""), line)?;
        let building = parse_field(&rec, bi, "building", line)?;
        let content = parse_field(&rec, ci, "content", line)?;
        if !(building >= 0.0 && content >= 0.0) {
            return Err(Error::InvalidRecord {
                line,
                message: format!("losses must be nonnegative, got ({building}, {content})"),
            });
        }
        raw.push((date, building, content));
    }
    let Some(first) = raw.iter().map(|r| r.0).min() else {
        return Err(Error::Empty("loss file has no rows"));
    };
    let last = raw.iter().map(|r| r.0).max().unwrap_or(first);
    let span = (last - first).num_days() as f64 / 365.0;
    let natural = if span > 0.0 { span } else { 1.0 / 365.0 };
    let (t, scale) = match horizon {
        Some(h) => (h, h / natural),
        None => (natural, 1.0),
    };

    let size = |loss: f64| (loss / LOSS_THRESHOLD).ln();
    let jumps = raw
        .into_iter()
        .filter_map(|(date, b, c)| {
            let time = scale * (date - first).num_days() as f64 / 365.0;
            let kind = match (b > LOSS_THRESHOLD, c > LOSS_THRESHOLD) {
                (true, true) => JumpKind::Parallel,
                (true, false) if c == 0.0 => JumpKind::OnlyFirst,
                (false, true) if b == 0.0 => JumpKind::OnlySecond,
                _ => return None,
            };
            let (w1, w2) = match kind {
                JumpKind::Parallel => (size(b), size(c)),
                JumpKind::OnlyFirst => (size(b), 0.0),
                JumpKind::OnlySecond => (0.0, size(c)),
            };
            Some(Jump { time: time.min(t), w1, w2, kind })
        })
        .collect();
    Ok(Preprocessed {
        observations: ObservationSet::new(t, jumps)?,
        rows,
    })
}
