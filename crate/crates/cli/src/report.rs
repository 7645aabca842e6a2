//! Versioned JSON-lines and CSV output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::CliError;

pub const SCHEMA: u32 = 1;
pub const BUILD_ID: &str = env!("MANIN_D5_BUILD_ID");

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    build: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(x) => x.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

pub struct Sink {
    writer: Box<dyn Write>,
}

impl Sink {
    pub fn open(out: Option<&Path>) -> io::Result<Self> {
        let writer: Box<dyn Write> = match out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Sink { writer })
    }

    #[cfg(test)]
    fn memory(buf: std::rc::Rc<std::cell::RefCell<Vec<u8>>>) -> Self {
        struct Shared(std::rc::Rc<std::cell::RefCell<Vec<u8>>>);
        impl Write for Shared {
            fn write(&mut self, data: &[u8]) -> io::Result<usize> {
                self.0.borrow_mut().extend_from_slice(data);
                Ok(data.len())
            }
            fn flush(&mut self) -> io::Result<()> {
                Ok(())
            }
        }
        Sink {
            writer: Box::new(Shared(buf)),
        }
    }

    /// One JSON object per line, tagged with the schema version and build.
    pub fn json_line<T: Serialize>(&mut self, body: &T) -> Result<(), CliError> {
        let line = serde_json::to_string(&Envelope {
            schema: SCHEMA,
            build: BUILD_ID,
            body,
        })?;
        writeln!(self.writer, "{line}")?;
        Ok(())
    }

    /// A CSV table whose first two columns carry the schema and build.
    pub fn csv(&mut self, header: &[&str], rows: &[Vec<Cell>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(&mut self.writer);
        let mut full = vec!["schema", "build"];
        full.extend_from_slice(header);
        w.write_record(&full)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            let mut record = vec![SCHEMA.to_string(), BUILD_ID.to_string()];
            record.extend(row.iter().map(Cell::render));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush()?;
        Ok(())
    }
}
