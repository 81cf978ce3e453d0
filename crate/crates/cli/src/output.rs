//! Rendering and atomic emission of command results.

use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use tempfile::NamedTempFile;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
    Csv,
}

/// A command's result in all three renderings plus its exit code.
pub struct Outcome {
    pub json: serde_json::Value,
    pub text: String,
    pub csv: String,
    pub code: i32,
}

impl Outcome {
    pub fn new(value: &impl Serialize, text: String, csv: Csv, code: i32) -> serde_json::Result<Self> {
        Ok(Outcome { json: serde_json::to_value(value)?, text, csv: csv.finish(), code })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable value");
                s.push('\n');
                s
            }
            Format::Text => self.text.clone(),
            Format::Csv => self.csv.clone(),
        }
    }
}

/// Minimal CSV builder, quoting fields only when needed.
pub struct Csv(csv::Writer<Vec<u8>>);

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Csv(w)
    }

    pub fn row<I, T>(&mut self, fields: I)
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.0.write_record(fields).expect("in-memory write");
    }

    fn finish(self) -> String {
        String::from_utf8(self.0.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Writes to `out` through a sibling temporary file and a rename, or to stdout.
pub fn emit(content: &str, out: Option<&Path>) -> io::Result<()> {
    let Some(path) = out else {
        let mut stdout = io::stdout().lock();
        stdout.write_all(content.as_bytes())?;
        return stdout.flush();
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(content.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
