//! Plain CSV tables with `#` comment lines, as written by the command-line
//! runner. Floats are written with 17 significant digits so they read back
//! bit for bit.

use std::io::{self, Write};

use crate::error::{Error, Result};

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Scientific notation with 17 significant digits; `nan`, `inf`, `-inf`
/// for non-finite values.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// Streams a table: comment header, column line, rows, comment footer.
pub struct TableWriter<W: Write> {
    out: W,
    n_columns: usize,
}

impl<W: Write> TableWriter<W> {
    pub fn new(mut out: W, comments: &[String], columns: &[&str]) -> io::Result<Self> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{}", columns.join(","))?;
        Ok(Self { out, n_columns: columns.len() })
    }

    pub fn row(&mut self, cells: &[Cell]) -> io::Result<()> {
        assert_eq!(cells.len(), self.n_columns, "row width must match the column count");
        let line = cells.iter().map(Cell::render).collect::<Vec<_>>().join(",");
        writeln!(self.out, "{line}")
    }

    pub fn comment(&mut self, text: &str) -> io::Result<()> {
        writeln!(self.out, "# {text}")
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// A table read back from text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    /// Comment lines in order, without the leading `# `.
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// 1-based source line of each row.
    pub row_lines: Vec<usize>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Table::default();
        let mut have_columns = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if let Some(c) = line.strip_prefix('#') {
                t.comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<String> = line.split(',').map(str::to_string).collect();
            if !have_columns {
                if fields.iter().any(|f| f.is_empty()) {
                    return Err(Error::Table { line: i + 1, message: "empty column name".into() });
                }
                t.columns = fields;
                have_columns = true;
            } else if fields.len() != t.columns.len() {
                return Err(Error::Table {
                    line: i + 1,
                    message: format!("{} fields, expected {}", fields.len(), t.columns.len()),
                });
            } else {
                t.rows.push(fields);
                t.row_lines.push(i + 1);
            }
        }
        if !have_columns {
            return Err(Error::Table { line: 0, message: "no column line".into() });
        }
        Ok(t)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// A column parsed as floats.
    pub fn f64_column(&self, name: &str) -> Result<Vec<f64>> {
        let j =
            self.column_index(name).ok_or_else(|| Error::Table { line: 0, message: format!("no column `{name}`") })?;
        self.rows
            .iter()
            .zip(&self.row_lines)
            .map(|(r, &line)| {
                r[j].parse::<f64>()
                    .map_err(|_| Error::Table { line, message: format!("`{name}` value {:?} is not a number", r[j]) })
            })
            .collect()
    }

    /// Value of a `key = value` comment line.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.split_once('=')?;
            (k.trim() == key).then(|| v.trim())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_bitwise() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 72.0, f64::MIN_POSITIVE, 1e308, 0.0] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!("inf".parse::<f64>().unwrap(), f64::INFINITY);
    }

    #[test]
    fn write_then_read() {
        let mut w = TableWriter::new(Vec::new(), &["seed = 3".into()], &["t", "x", "name"]).unwrap();
        w.row(&[1usize.into(), 0.25.into(), "a".into()]).unwrap();
        w.row(&[2usize.into(), (1.0 / 3.0).into(), "b".into()]).unwrap();
        w.comment("fit,tau,1.0").unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        let t = Table::parse(&text).unwrap();
        assert_eq!(t.columns, ["t", "x", "name"]);
        assert_eq!(t.f64_column("x").unwrap()[1], 1.0 / 3.0);
        assert_eq!(t.comment_value("seed"), Some("3"));
        assert_eq!(t.comments.last().unwrap(), "fit,tau,1.0");
    }

    #[test]
    fn ragged_rows_are_rejected_with_line() {
        let err = Table::parse("# c\na,b\n1,2\n3\n").unwrap_err();
        assert_eq!(err, Error::Table { line: 4, message: "1 fields, expected 2".into() });
        let err = Table::parse("a,b\n1,x\n").unwrap().f64_column("b").unwrap_err();
        assert!(matches!(err, Error::Table { line: 2, .. }));
        assert!(Table::parse("# only comments\n").is_err());
    }
}
