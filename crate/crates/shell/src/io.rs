//! Dataset and table persistence.
//!
//! Dataset files are plain CSV: optional `#` comment lines, a header
//! `d=<dim>` or `d=<dim>,label,C=<classes>`, then one sample per line with an
//! optional trailing integer label. A comment of the form `# source=<tag>`
//! records where the samples came from. Floats are written with 17
//! significant digits so that a save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use covshift_core::distributions::{DataSource, LabeledDataset};
use covshift_core::Matrix;

use crate::error::{Result, ShellError};

/// Contents of a dataset file.
#[derive(Clone, Debug, PartialEq)]
pub enum Loaded {
    Labeled(LabeledDataset),
    Unlabeled(Matrix),
}

impl Loaded {
    pub fn x(&self) -> &Matrix {
        match self {
            Loaded::Labeled(d) => d.x(),
            Loaded::Unlabeled(m) => m,
        }
    }

    pub fn into_labeled(self, path: &Path) -> Result<LabeledDataset> {
        match self {
            Loaded::Labeled(d) => Ok(d),
            Loaded::Unlabeled(_) => Err(ShellError::Validation(format!("{} has no label column", path.display()))),
        }
    }
}

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, row: &[f64]) {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
}

pub fn dataset_to_string(data: &LabeledDataset) -> String {
    let mut out = format!("# source={}\nd={},label,C={}\n", data.source(), data.dim(), data.class_count());
    for (row, y) in data.x().iter_rows().zip(data.labels()) {
        push_row(&mut out, row);
        let _ = writeln!(out, ",{y}");
    }
    out
}

pub fn matrix_to_string(x: &Matrix) -> String {
    let mut out = format!("d={}\n", x.cols());
    for row in x.iter_rows() {
        push_row(&mut out, row);
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| ShellError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| ShellError::io(path, e))
}

pub fn save_dataset(data: &LabeledDataset, path: &Path) -> Result<()> {
    write_file(path, &dataset_to_string(data))
}

pub fn save_matrix(x: &Matrix, path: &Path) -> Result<()> {
    write_file(path, &matrix_to_string(x))
}

struct Header {
    dim: usize,
    classes: Option<usize>,
}

fn parse_header(text: &str, path: &Path, line: usize) -> Result<Header> {
    let err = |msg: String| ShellError::Parse { path: path.to_path_buf(), line, msg };
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    let dim = fields[0]
        .strip_prefix("d=")
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| err(format!("expected header `d=<dim>[,label,C=<classes>]`, found `{text}`")))?;
    let classes = match fields[1..] {
        [] => None,
        ["label", c] => Some(
            c.strip_prefix("C=")
                .and_then(|v| v.parse::<usize>().ok())
                .filter(|&c| c > 0)
                .ok_or_else(|| err(format!("bad class count `{c}`")))?,
        ),
        _ => return Err(err(format!("unrecognised header `{text}`"))),
    };
    Ok(Header { dim, classes })
}

pub fn parse_dataset(text: &str, path: &Path) -> Result<Loaded> {
    let mut header = None;
    let mut source = DataSource::External;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(tag) = comment.trim().strip_prefix("source=") {
                source = DataSource::from_tag(tag.trim()).ok_or_else(|| ShellError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("unknown source `{}`", tag.trim()),
                })?;
            }
            continue;
        }
        let Some(h) = &header else {
            header = Some(parse_header(line, path, line_no)?);
            continue;
        };
        let err = |msg: String| ShellError::Parse { path: path.to_path_buf(), line: line_no, msg };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = h.dim + usize::from(h.classes.is_some());
        if fields.len() != expected {
            return Err(err(format!("expected {expected} fields, found {}", fields.len())));
        }
        for f in &fields[..h.dim] {
            let v: f64 = f.parse().map_err(|_| err(format!("`{f}` is not a number")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite value `{f}`")));
            }
            values.push(v);
        }
        if let Some(c) = h.classes {
            let f = fields[h.dim];
            let y: usize = f.parse().map_err(|_| err(format!("`{f}` is not a class label")))?;
            if y >= c {
                return Err(ShellError::Validation(format!(
                    "{}:{line_no}: label {y} not below declared class count {c}",
                    path.display()
                )));
            }
            labels.push(y);
        }
    }
    let h = header.ok_or_else(|| ShellError::Parse {
        path: path.to_path_buf(),
        line: text.lines().count().max(1),
        msg: "missing `d=` header".into(),
    })?;
    let n = values.len() / h.dim;
    if n == 0 {
        return Err(ShellError::Validation(format!("{} contains no samples", path.display())));
    }
    let x = Matrix::from_vec(n, h.dim, values)?;
    Ok(match h.classes {
        Some(c) => Loaded::Labeled(LabeledDataset::new(x, labels, c, source)?),
        None => Loaded::Unlabeled(x),
    })
}

pub fn load_dataset(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).map_err(|e| ShellError::io(path, e))?;
    parse_dataset(&text, path)
}

/// A CSV table with a header row; numeric cells use [`fmt_f64`].
#[derive(Clone, Debug, Default)]
pub struct Table {
    out: String,
    width: usize,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { out: format!("{}\n", columns.join(",")), width: columns.len() }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Table { out: format!("{}\n", columns.join(",")), width: columns.len() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.width, "table row width");
        let text: Vec<String> = cells.into_iter().map(|c| c.render()).collect();
        self.out.push_str(&text.join(","));
        self.out.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.out)
    }
}

pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
