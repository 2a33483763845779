use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One bench cell: a fit at sampling rate `delta`, repetition `rep`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub m: usize,
    pub n: usize,
    pub delta: f64,
    pub rep: usize,
    pub regularizer: String,
    pub mse: f64,
    pub recovery_error: f64,
    pub seconds: f64,
    pub final_rank: usize,
    pub iterations: usize,
    #[serde(rename = "final_F")]
    pub final_f: f64,
}

/// Column order of the metrics CSV.
pub const METRICS_HEADER: [&str; 11] = [
    "m",
    "n",
    "delta",
    "rep",
    "regularizer",
    "mse",
    "recovery_error",
    "seconds",
    "final_rank",
    "iterations",
    "final_F",
];

/// One point of an MSE-vs-time curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub m: usize,
    pub n: usize,
    pub delta: f64,
    pub rep: usize,
    pub iter: usize,
    pub seconds: f64,
    pub mse: f64,
    pub objective: f64,
    pub rank: usize,
}

/// Path of the JSONL file written next to a CSV report.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("jsonl")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Appends records to a CSV file and its JSONL sidecar, flushing both after
/// every record so an interrupted run keeps everything written so far.
pub struct MetricsWriter {
    csv: csv::Writer<File>,
    jsonl: BufWriter<File>,
}

impl MetricsWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut csv = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(csv_error)?;
        csv.write_record(METRICS_HEADER).map_err(csv_error)?;
        csv.flush()?;
        let jsonl = BufWriter::new(File::create(sidecar_path(path))?);
        Ok(Self { csv, jsonl })
    }

    pub fn append(&mut self, record: &MetricsRecord) -> Result<()> {
        self.csv.serialize(record).map_err(csv_error)?;
        self.csv.flush()?;
        serde_json::to_writer(&mut self.jsonl, record).map_err(|e| Error::Parse(e.to_string()))?;
        self.jsonl.write_all(b"\n")?;
        self.jsonl.flush()?;
        Ok(())
    }
}

/// Writes `records` as CSV at `path` plus a JSONL sidecar.
pub fn emit_report(records: &[MetricsRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = MetricsWriter::create(path)?;
    for r in records {
        w.append(r)?;
    }
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_error)?;
    rdr.deserialize().map(|r| r.map_err(csv_error)).collect()
}

pub fn read_report_jsonl(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

/// Streams trace points to CSV, flushing per cell.
pub struct TraceWriter {
    csv: csv::Writer<File>,
}

impl TraceWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self { csv: csv::Writer::from_path(path).map_err(csv_error)? })
    }

    pub fn append(&mut self, points: &[TracePoint]) -> Result<()> {
        for p in points {
            self.csv.serialize(p).map_err(csv_error)?;
        }
        self.csv.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(rep: usize) -> MetricsRecord {
        MetricsRecord {
            m: 50,
            n: 40,
            delta: 0.3,
            rep,
            regularizer: "tnn:5".into(),
            mse: 0.123456789012345,
            recovery_error: 1.0 / 3.0,
            seconds: 0.25,
            final_rank: 4,
            iterations: 17,
            final_f: 1234.5678901234,
        }
    }

    #[test]
    fn empty_and_single() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        emit_report(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), format!("{}\n", METRICS_HEADER.join(",")));
        assert!(read_report(&p).unwrap().is_empty());

        let p = dir.path().join("one.csv");
        emit_report(&[record(0)], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 2);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let recs = vec![record(0), record(1)];
        emit_report(&recs, &p).unwrap();
        assert_eq!(read_report(&p).unwrap(), recs);
        assert_eq!(read_report_jsonl(sidecar_path(&p)).unwrap(), recs);
    }
}
