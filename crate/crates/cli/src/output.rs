use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

/// CSV sink over a file or stdout. Floats are written in Rust's shortest
/// round-trip form, so equal values give equal bytes.
pub struct CsvOut {
    writer: csv::Writer<Box<dyn Write>>,
    target: String,
}

impl CsvOut {
    pub fn create(path: Option<&Path>, header: &[&str]) -> Result<Self> {
        let (sink, target): (Box<dyn Write>, String) = match path {
            Some(p) => {
                let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
                (Box::new(BufWriter::new(f)), p.display().to_string())
            }
            None => (Box::new(BufWriter::new(io::stdout().lock())), "stdout".to_string()),
        };
        let mut out = Self {
            writer: csv::Writer::from_writer(sink),
            target,
        };
        out.row(header.iter().map(|s| s.to_string()))?;
        Ok(out)
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .with_context(|| format!("writing to {}", self.target))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().with_context(|| format!("flushing {}", self.target))
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
