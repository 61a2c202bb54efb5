use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::mode_name;
use super::experiment::TrialRecord;

pub const CSV_HEADER: [&str; 17] = [
    "experiment",
    "network",
    "nodes",
    "sensor_pct",
    "sensors",
    "missing_rate",
    "mode",
    "method",
    "trial",
    "seed",
    "source",
    "estimate",
    "hop_error",
    "mse",
    "missing",
    "status",
    "error",
];

fn opt<V: ToString>(v: Option<V>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Fields of one CSV row. Floats use shortest round-trip formatting.
pub fn csv_row(r: &TrialRecord) -> [String; 17] {
    [
        r.experiment.name().to_string(),
        r.network.clone(),
        r.nodes.to_string(),
        r.sensor_pct.to_string(),
        r.sensors.to_string(),
        r.missing_rate.to_string(),
        mode_name(r.mode).to_string(),
        r.method.to_string(),
        r.trial.to_string(),
        r.seed.to_string(),
        opt(r.source),
        opt(r.estimate),
        opt(r.hop_error),
        opt(r.mse),
        r.missing.to_string(),
        if r.failed() { "failed" } else { "ok" }.to_string(),
        r.error.clone().unwrap_or_default(),
    ]
}

/// Ordered CSV writer for trial records.
pub struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvSink {
    /// Truncates `path` and writes the header.
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|source| io_err(path, source))?;
        let mut sink = Self::wrap(path, file);
        sink.writer.write_record(CSV_HEADER)?;
        Ok(sink)
    }

    /// Appends to `path`, writing the header only if the file is empty.
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| io_err(path, source))?;
        let empty = file.metadata().map_err(|source| io_err(path, source))?.len() == 0;
        let mut sink = Self::wrap(path, file);
        if empty {
            sink.writer.write_record(CSV_HEADER)?;
        }
        Ok(sink)
    }

    fn wrap(path: &Path, file: File) -> Self {
        Self {
            path: path.to_path_buf(),
            writer: csv::WriterBuilder::new().has_headers(false).from_writer(file),
        }
    }

    pub fn write(&mut self, r: &TrialRecord) -> Result<()> {
        self.writer.write_record(csv_row(r))?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(|source| io_err(&self.path, source))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a header and every record to `path`.
pub fn emit_csv<'a>(records: impl IntoIterator<Item = &'a TrialRecord>, path: &Path) -> Result<()> {
    let mut sink = CsvSink::create(path)?;
    for r in records {
        sink.write(r)?;
    }
    sink.flush()
}
