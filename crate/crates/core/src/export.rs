//! Tabular results and their CSV / gnuplot-block serializations.
//!
//! Floats are written with Rust's shortest round-trip `{:e}` form, so a
//! value read back from a file is bit-identical to the one computed.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::CavityMode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u32),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(k) => Some(f64::from(*k)),
            Cell::Text(_) => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(x) => write!(f, "{x:e}"),
            Cell::Int(k) => write!(f, "{k}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

/// Rows in grid order. `shape` lists the axis lengths, outermost first; a
/// table that is not a grid has a single entry equal to the row count.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub shape: Vec<usize>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column, `None` if it is missing or textual.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        self.rows.iter().map(|r| r[k].as_f64()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Contour,
}

/// Header `f_hz,s21_re,s21_im,s21_db`.
pub fn s21_table(samples: &[(f64, Complex64)]) -> Table {
    let rows = samples
        .iter()
        .map(|&(f, s)| {
            vec![
                Cell::Num(f),
                Cell::Num(s.re),
                Cell::Num(s.im),
                Cell::Num(20.0 * s.norm().log10()),
            ]
        })
        .collect::<Vec<_>>();
    Table {
        columns: ["f_hz", "s21_re", "s21_im", "s21_db"].map(String::from).to_vec(),
        shape: vec![rows.len()],
        rows,
    }
}

/// Header `family,m,n,p,f_hz`.
pub fn mode_table_rows(modes: &[CavityMode]) -> Table {
    let rows = modes
        .iter()
        .map(|m| {
            vec![
                Cell::Text(m.family.to_string()),
                Cell::Int(m.m),
                Cell::Int(m.n),
                Cell::Int(m.p),
                Cell::Num(m.f_hz),
            ]
        })
        .collect::<Vec<_>>();
    Table {
        columns: ["family", "m", "n", "p", "f_hz"].map(String::from).to_vec(),
        shape: vec![rows.len()],
        rows,
    }
}

/// Header row then data rows, RFC 4180 quoting, `\n` line ends.
pub fn write_csv<W: Write>(table: &Table, out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// Gnuplot blocks: one block per value of the outermost axis, separated by
/// a blank line. `comments` become leading `#` lines.
pub fn write_contour<W: Write>(table: &Table, comments: &[String], mut out: W) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "# {}", table.columns.join(" "))?;
    let block = if table.shape.len() >= 2 {
        table.shape[1..].iter().product::<usize>().max(1)
    } else {
        table.rows.len().max(1)
    };
    for (k, row) in table.rows.iter().enumerate() {
        if k > 0 && k % block == 0 {
            writeln!(out)?;
        }
        let line: Vec<String> = row.iter().map(Cell::to_string).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    out.flush()
}

pub fn render(table: &Table, format: OutputFormat, comments: &[String]) -> Vec<u8> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(table, &mut buf),
        OutputFormat::Contour => write_contour(table, comments, &mut buf),
    }
    .expect("writing to memory cannot fail");
    buf
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
