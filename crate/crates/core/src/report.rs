//! Line-oriented reports.
//!
//! The structured form is a header line followed by `[section]` headers and
//! `key = type payload` lines:
//!
//! ```text
//! mellipsoid-report 1
//! [ellipsoid]
//! matrix = matrix 2 2 1.0000000000000000e0 0.0000000000000000e0 ...
//! volume = float 3.1415926535897931e0
//! ```
//!
//! Floats carry 17 significant digits, so parsing a report reproduces every value bit for
//! bit. Matrices are written row-major after their row and column counts.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

const HEADER: &str = "mellipsoid-report 1";

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Ints(Vec<i64>),
    Floats(Vec<f64>),
    Matrix(Matrix),
}

impl Value {
    pub fn as_float(&self) -> Option<f64> {
        match self {
            Value::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&Matrix> {
        match self {
            Value::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(t) => Some(t),
            _ => None,
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<&Vector> for Value {
    fn from(v: &Vector) -> Self {
        Value::Floats(v.iter().copied().collect())
    }
}

impl From<&[i64]> for Value {
    fn from(v: &[i64]) -> Self {
        Value::Ints(v.to_vec())
    }
}

impl From<&Matrix> for Value {
    fn from(m: &Matrix) -> Self {
        Value::Matrix(m.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, Value)>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Section { name: name.into(), entries: Vec::new() }
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.entries.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub sections: Vec<Section>,
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_token(what: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == '[' || c == ']' || c == '=') {
        return Err(Error::Internal(format!("{what} {s:?} is not a plain token")));
    }
    Ok(())
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    /// Appends a section and returns it for filling.
    pub fn section(&mut self, name: impl Into<String>) -> &mut Section {
        self.sections.push(Section::new(name));
        self.sections.last_mut().expect("just pushed")
    }

    pub fn get(&self, section: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == section)
    }

    pub fn value(&self, section: &str, key: &str) -> Option<&Value> {
        self.get(section)?.get(key)
    }

    pub fn to_structured(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        for s in &self.sections {
            check_token("section name", &s.name)?;
            let _ = writeln!(out, "[{}]", s.name);
            for (k, v) in &s.entries {
                check_token("key", k)?;
                let payload = match v {
                    Value::Int(i) => format!("int {i}"),
                    Value::Float(f) => format!("float {}", float(*f)),
                    Value::Bool(b) => format!("bool {b}"),
                    Value::Text(t) => {
                        if t.contains('\n') {
                            return Err(Error::Internal(format!("text value of {k} spans lines")));
                        }
                        format!("text {t}")
                    }
                    Value::Ints(xs) => {
                        let mut p = format!("ints {}", xs.len());
                        for x in xs {
                            let _ = write!(p, " {x}");
                        }
                        p
                    }
                    Value::Floats(xs) => {
                        let mut p = format!("floats {}", xs.len());
                        for x in xs {
                            let _ = write!(p, " {}", float(*x));
                        }
                        p
                    }
                    Value::Matrix(m) => {
                        let mut p = format!("matrix {} {}", m.nrows(), m.ncols());
                        for i in 0..m.nrows() {
                            for j in 0..m.ncols() {
                                let _ = write!(p, " {}", float(m[(i, j)]));
                            }
                        }
                        p
                    }
                };
                let _ = writeln!(out, "{k} = {payload}");
            }
        }
        Ok(out)
    }

    /// Human-readable rendering with six significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (idx, s) in self.sections.iter().enumerate() {
            if idx > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "{}:", s.name);
            for (k, v) in &s.entries {
                match v {
                    Value::Int(i) => {
                        let _ = writeln!(out, "  {k}: {i}");
                    }
                    Value::Float(f) => {
                        let _ = writeln!(out, "  {k}: {f:.6e}");
                    }
                    Value::Bool(b) => {
                        let _ = writeln!(out, "  {k}: {}", if *b { "yes" } else { "no" });
                    }
                    Value::Text(t) => {
                        let _ = writeln!(out, "  {k}: {t}");
                    }
                    Value::Ints(xs) => {
                        let _ = writeln!(out, "  {k}: {xs:?}");
                    }
                    Value::Floats(xs) => {
                        let body: Vec<String> = xs.iter().map(|x| format!("{x:.6e}")).collect();
                        let _ = writeln!(out, "  {k}: [{}]", body.join(", "));
                    }
                    Value::Matrix(m) => {
                        let _ = writeln!(out, "  {k}:");
                        for row in m.row_iter() {
                            let body: Vec<String> = row.iter().map(|x| format!("{x:>14.6e}")).collect();
                            let _ = writeln!(out, "    {}", body.join(" "));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn parse_structured(text: &str) -> Result<Report> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == HEADER => {}
            _ => return Err(Error::Parse("missing report header".into())),
        }
        let mut report = Report::new();
        for (no, line) in lines {
            let err = |msg: &str| Error::Parse(format!("line {}: {msg}", no + 1));
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                report.sections.push(Section::new(name));
                continue;
            }
            let section = report.sections.last_mut().ok_or_else(|| err("entry before any section"))?;
            let (key, rest) = line.split_once(" = ").ok_or_else(|| err("expected `key = type payload`"))?;
            let (kind, payload) = rest.split_once(' ').unwrap_or((rest, ""));
            let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad float"));
            let int = |s: &str| s.parse::<i64>().map_err(|_| err("bad integer"));
            let value = match kind {
                "int" => Value::Int(int(payload)?),
                "float" => Value::Float(num(payload)?),
                "bool" => Value::Bool(payload.parse().map_err(|_| err("bad bool"))?),
                "text" => Value::Text(payload.to_string()),
                "ints" | "floats" => {
                    let mut toks = payload.split(' ').filter(|t| !t.is_empty());
                    let len = int(toks.next().ok_or_else(|| err("missing length"))?)? as usize;
                    let toks: Vec<&str> = toks.collect();
                    if toks.len() != len {
                        return Err(err("length does not match the payload"));
                    }
                    if kind == "ints" {
                        Value::Ints(toks.iter().map(|t| int(t)).collect::<Result<_>>()?)
                    } else {
                        Value::Floats(toks.iter().map(|t| num(t)).collect::<Result<_>>()?)
                    }
                }
                "matrix" => {
                    let toks: Vec<&str> = payload.split(' ').filter(|t| !t.is_empty()).collect();
                    if toks.len() < 2 {
                        return Err(err("missing matrix shape"));
                    }
                    let (r, c) = (int(toks[0])? as usize, int(toks[1])? as usize);
                    if toks.len() != 2 + r * c {
                        return Err(err("matrix shape does not match the payload"));
                    }
                    let vals: Vec<f64> = toks[2..].iter().map(|t| num(t)).collect::<Result<_>>()?;
                    Value::Matrix(Matrix::from_row_slice(r, c, &vals))
                }
                _ => return Err(err("unknown value type")),
            };
            section.entries.push((key.to_string(), value));
        }
        Ok(report)
    }
}
