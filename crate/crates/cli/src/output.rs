//! Output files. Each starts with `#` comment lines holding the resolved
//! configuration, followed by CSV, JSON-lines or two-column data.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub fn header(cfg: &RunConfig) -> String {
    let mut h = format!("# lbfilm {}\n", env!("CARGO_PKG_VERSION"));
    for line in cfg.serialize().lines() {
        if line.is_empty() {
            h.push_str("#\n");
        } else {
            h.push_str("# ");
            h.push_str(line);
            h.push('\n');
        }
    }
    h
}

/// Opens `dir/name` for writing and emits the header.
pub fn create(dir: &Path, name: &str, cfg: &RunConfig) -> io::Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    w.write_all(header(cfg).as_bytes())?;
    Ok(w)
}

/// Shortest text that reads back as the same number.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub struct CsvSink {
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    pub fn create(dir: &Path, name: &str, cfg: &RunConfig, columns: &[String]) -> Result<Self, CliError> {
        let mut inner = csv::Writer::from_writer(create(dir, name, cfg)?);
        inner.write_record(columns)?;
        Ok(Self { inner })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        self.inner.write_record(values.iter().map(|&v| num(v)))?;
        Ok(())
    }

    pub fn text_row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub struct JsonLines {
    inner: BufWriter<File>,
}

impl JsonLines {
    pub fn create(dir: &Path, name: &str, cfg: &RunConfig) -> Result<Self, CliError> {
        Ok(Self {
            inner: create(dir, name, cfg)?,
        })
    }

    pub fn comment(&mut self, text: &str) -> Result<(), CliError> {
        writeln!(self.inner, "# {text}")?;
        Ok(())
    }

    pub fn record<S: Serialize>(&mut self, value: &S) -> Result<(), CliError> {
        serde_json::to_writer(&mut self.inner, value)?;
        self.inner.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Plain two-column `x u` file.
pub fn write_profile(
    dir: &Path,
    name: &str,
    cfg: &RunConfig,
    note: &str,
    x: &[f64],
    u: &[f64],
) -> Result<PathBuf, CliError> {
    let mut w = create(dir, name, cfg)?;
    writeln!(w, "# {note}")?;
    writeln!(w, "# x u")?;
    for (a, b) in x.iter().zip(u) {
        writeln!(w, "{} {}", num(*a), num(*b))?;
    }
    w.flush()?;
    Ok(dir.join(name))
}
