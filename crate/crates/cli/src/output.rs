//! Table, CSV and JSON renderings of a column-oriented result.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    /// Exact small values such as quantum numbers, printed in shortest form.
    Short(f64),
    Int(i64),
    Text(String),
    Flag(bool),
    Missing,
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Short(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) | Cell::Short(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Short(_) | Cell::Missing => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Flag(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Fields of the JSON `meta` object.
#[derive(Clone, Debug, PartialEq)]
pub struct Meta {
    pub version: &'static str,
    pub mode: String,
    pub calibration: String,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format, meta: &Meta) -> String {
        match format {
            Format::Table => self.table(),
            Format::Csv => self.csv(),
            Format::Json => self.json(meta),
        }
    }

    fn table(&self) -> String {
        let cells: Vec<Vec<String>> =
            self.rows.iter().map(|r| r.iter().map(|c| if *c == Cell::Missing { "-".to_string() } else { c.text() }).collect()).collect();
        let widths: Vec<usize> =
            (0..self.columns.len()).map(|i| cells.iter().map(|r| r[i].len()).chain([self.columns[i].len()]).max().unwrap_or(0)).collect();
        let mut out = String::new();
        let line = |out: &mut String, fields: &[String]| {
            let parts: Vec<String> = fields.iter().zip(&widths).map(|(f, w)| format!("{f:>w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &self.columns);
        for r in &cells {
            line(&mut out, r);
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.iter().map(|c| csv_field(&c.text())).collect::<Vec<_>>().join(","));
        }
        out
    }

    fn json(&self, meta: &Meta) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut obj = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    obj.insert(c.clone(), v.json());
                }
                Value::Object(obj)
            })
            .collect();
        let doc = json!({
            "meta": { "version": meta.version, "mode": meta.mode, "calibration": meta.calibration },
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(["name", "value", "ok"]);
        t.push(vec!["a,b".into(), Cell::Num(0.1), Cell::Flag(true)]);
        t.push(vec!["say \"hi\"".into(), Cell::Missing, Cell::Int(3)]);
        t
    }

    fn meta() -> Meta {
        Meta { version: "0", mode: "reconciled".into(), calibration: "abc".into() }
    }

    #[test]
    fn csv_quotes_fields() {
        let s = sample().render(Format::Csv, &meta());
        assert_eq!(s, "name,value,ok\n\"a,b\",1.0000000000000001e-1,true\n\"say \"\"hi\"\"\",,3\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324] {
            assert_eq!(Cell::Num(v).text().parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_has_meta_and_rows() {
        let v: Value = serde_json::from_str(&sample().render(Format::Json, &meta())).unwrap();
        assert_eq!(v["meta"]["mode"], "reconciled");
        assert_eq!(v["rows"][0]["value"].as_f64(), Some(0.1));
        assert!(v["rows"][1]["value"].is_null());
    }

    #[test]
    fn table_header_once() {
        let s = sample().render(Format::Table, &meta());
        assert_eq!(s.lines().filter(|l| l.contains("name")).count(), 1);
        assert_eq!(s.lines().count(), 3);
    }
}
