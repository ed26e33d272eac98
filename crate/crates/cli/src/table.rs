//! Column tables with a provenance header, written as CSV or JSON.
//!
//! CSV: `# key = value` provenance lines, one header row, then comma
//! separated rows. JSON: `{"meta": {...}, "columns": {name: [...]}}`, with
//! non-finite values stored as null.

use serde_json::{Map, Number, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("duplicate column {0}")]
    DuplicateColumn(String),
    #[error("column {name} has {got} rows, expected {expected}")]
    Ragged { name: String, got: usize, expected: usize },
    #[error("invalid meta entry {0:?}")]
    BadMeta(String),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Significant(usize),
    /// Shortest representation that parses back to the same value.
    Full,
}

pub const DEFAULT_PRECISION: Precision = Precision::Significant(12);

impl Precision {
    pub fn format(self, v: f64) -> String {
        match self {
            Precision::Significant(d) => format!("{:.*e}", d.saturating_sub(1), v),
            Precision::Full => format!("{v:e}"),
        }
    }

    /// `v` as it will read back from a file written at this precision.
    pub fn round(self, v: f64) -> f64 {
        match self {
            Precision::Full => v,
            Precision::Significant(_) => self.format(v).parse().unwrap_or(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    meta: Vec<(String, String)>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends or replaces a provenance entry. Keys may not contain `=` and
    /// neither part may span lines.
    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) -> Result<(), TableError> {
        let (key, value) = (key.into(), value.into());
        if key.is_empty() || key.contains(['=', '\n', '\r']) || key.trim() != key || value.contains(['\n', '\r']) {
            return Err(TableError::BadMeta(format!("{key} = {value}")));
        }
        match self.meta.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.meta.push((key, value)),
        }
        Ok(())
    }

    pub fn add_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<(), TableError> {
        let name = name.into();
        if name.is_empty() || name.contains([',', '\n', '\r', '"']) || name.starts_with('#') {
            return Err(TableError::Parse(format!("invalid column name {name:?}")));
        }
        if self.names.contains(&name) {
            return Err(TableError::DuplicateColumn(name));
        }
        if let Some(first) = self.columns.first() {
            if first.len() != values.len() {
                return Err(TableError::Ragged {
                    name,
                    got: values.len(),
                    expected: first.len(),
                });
            }
        }
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    pub fn meta(&self) -> &[(String, String)] {
        &self.meta
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn render(&self, format: Format, precision: Precision) -> String {
        match format {
            Format::Csv => self.to_csv(precision),
            Format::Json => self.to_json(precision),
        }
    }

    pub fn parse(format: Format, text: &str) -> Result<Self, TableError> {
        match format {
            Format::Csv => Self::from_csv(text),
            Format::Json => Self::from_json(text),
        }
    }

    pub fn to_csv(&self, precision: Precision) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.names.join(","));
        out.push('\n');
        for r in 0..self.rows() {
            let row: Vec<String> = self.columns.iter().map(|c| precision.format(c[r])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TableError> {
        let mut table = Self::new();
        let mut lines = text.lines().enumerate();
        let mut header = None;
        for (_, line) in lines.by_ref() {
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .strip_prefix(' ')
                    .unwrap_or(rest)
                    .split_once(" = ")
                    .ok_or_else(|| TableError::BadMeta(line.to_string()))?;
                table.set_meta(k, v)?;
            } else {
                header = Some(line);
                break;
            }
        }
        let header = header.ok_or_else(|| TableError::Parse("missing header row".into()))?;
        let names: Vec<&str> = header.split(',').collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != names.len() {
                return Err(TableError::Parse(format!(
                    "line {}: {} cells, expected {}",
                    i + 1,
                    cells.len(),
                    names.len()
                )));
            }
            for (col, cell) in columns.iter_mut().zip(cells) {
                let v = cell
                    .parse::<f64>()
                    .map_err(|_| TableError::Parse(format!("line {}: bad number {cell:?}", i + 1)))?;
                col.push(v);
            }
        }
        for (name, col) in names.into_iter().zip(columns) {
            table.add_column(name, col)?;
        }
        Ok(table)
    }

    pub fn to_json(&self, precision: Precision) -> String {
        let meta: Map<String, Value> = self
            .meta
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let columns: Map<String, Value> = self
            .names
            .iter()
            .zip(&self.columns)
            .map(|(n, c)| {
                let vals = c
                    .iter()
                    .map(|&v| Number::from_f64(precision.round(v)).map_or(Value::Null, Value::Number))
                    .collect();
                (n.clone(), Value::Array(vals))
            })
            .collect();
        let doc = serde_json::json!({ "meta": meta, "columns": columns });
        let mut s = serde_json::to_string_pretty(&doc).expect("tables serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, TableError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| TableError::Parse(e.to_string()))?;
        let mut table = Self::new();
        if let Some(meta) = doc.get("meta").and_then(Value::as_object) {
            for (k, v) in meta {
                let v = v
                    .as_str()
                    .ok_or_else(|| TableError::BadMeta(format!("{k} is not a string")))?;
                table.set_meta(k.as_str(), v)?;
            }
        }
        let columns = doc
            .get("columns")
            .and_then(Value::as_object)
            .ok_or_else(|| TableError::Parse("missing columns object".into()))?;
        for (name, vals) in columns {
            let vals = vals
                .as_array()
                .ok_or_else(|| TableError::Parse(format!("column {name} is not an array")))?;
            let col = vals
                .iter()
                .map(|v| match v {
                    Value::Null => Ok(f64::NAN),
                    v => v.as_f64().ok_or_else(|| TableError::Parse(format!("bad value in {name}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.add_column(name.as_str(), col)?;
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultTable {
        let mut t = ResultTable::new();
        t.set_meta("version", "0.1.0").unwrap();
        t.set_meta("config.ratio", "1000").unwrap();
        t.add_column("kx", vec![-0.5, 0.0, 0.5]).unwrap();
        t.add_column("rho22", vec![0.1, 1.0, 1.0 / 3.0]).unwrap();
        t
    }

    #[test]
    fn csv_layout() {
        let s = sample().to_csv(DEFAULT_PRECISION);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# version = 0.1.0");
        assert_eq!(lines[2], "kx,rho22");
        assert_eq!(lines[5], "5.00000000000e-1,3.33333333333e-1");
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut t = sample();
        assert!(matches!(t.add_column("kx", vec![0.0; 3]), Err(TableError::DuplicateColumn(_))));
        assert!(matches!(t.add_column("x", vec![0.0; 2]), Err(TableError::Ragged { .. })));
        assert!(t.set_meta("a=b", "c").is_err());
        assert!(t.set_meta("a", "two\nlines").is_err());
    }

    #[test]
    fn full_precision_is_exact() {
        let t = sample();
        for fmt in [Format::Csv, Format::Json] {
            let back = ResultTable::parse(fmt, &t.render(fmt, Precision::Full)).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn non_finite_values() {
        let mut t = ResultTable::new();
        t.add_column("v", vec![f64::NAN, f64::INFINITY, -1.0]).unwrap();
        let back = ResultTable::from_csv(&t.to_csv(Precision::Full)).unwrap();
        let v = back.column("v").unwrap();
        assert!(v[0].is_nan() && v[1] == f64::INFINITY && v[2] == -1.0);
        let back = ResultTable::from_json(&t.to_json(Precision::Full)).unwrap();
        assert!(back.column("v").unwrap()[1].is_nan());
    }

    #[test]
    fn csv_errors() {
        assert!(ResultTable::from_csv("# a = b\n").is_err());
        assert!(ResultTable::from_csv("a,b\n1,2,3\n").is_err());
        assert!(ResultTable::from_csv("a,b\n1,x\n").is_err());
        assert!(ResultTable::from_csv("#novalue\na\n1\n").is_err());
    }
}
