//! Observation matrix and residual sums of squares.
//!
//! All regressions run on the Gram matrix `X^T X`, computed once at load
//! time. The residual sum of squares of column `j` on a regressor set `S` is
//! `X_j^T X_j - X_j^T X_S (X_S^T X_S)^{-1} X_S^T X_j`, evaluated through a
//! Cholesky factor of the Gram submatrix of `S` taken in ascending index
//! order, so the value is a pure function of `(j, S)`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::graph::NodeSet;

/// Pivots below this multiple of the largest diagonal entry of the Gram
/// submatrix are rejected as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Lower-bound floor, as a fraction of `X_j^T X_j`, used when `p >= n` or the
/// complement regression is degenerate.
pub const LOWER_BOUND_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DataMatrix {
    values: Array2<f64>,
    gram: Array2<f64>,
    names: Option<Vec<String>>,
}

impl DataMatrix {
    /// Builds a data matrix from an `n x p` array (rows are observations).
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, p) = values.dim();
        if n < 2 || p < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 observations and 2 variables, got n={n}, p={p}"
            )));
        }
        if let Some(((row, col), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Parse {
                row: row + 1,
                column: col + 1,
                message: format!("non-finite value {v}"),
            });
        }
        let values = values.as_standard_layout().into_owned();
        let gram = values.t().dot(&values);
        for j in 0..p {
            if gram[[j, j]] <= 0.0 {
                return Err(Error::InvalidData(format!(
                    "column {} is identically zero",
                    j + 1
                )));
            }
        }
        Ok(DataMatrix {
            values,
            gram,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::InvalidData(format!(
                "{} names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn gram(&self) -> ArrayView2<'_, f64> {
        self.gram.view()
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Centers every column and scales it to unit sample variance.
    pub fn standardized(&self) -> Result<Self> {
        let n = self.n() as f64;
        let mut values = self.values.clone();
        for mut col in values.axis_iter_mut(Axis(1)) {
            let mean = col.sum() / n;
            col.mapv_inplace(|v| v - mean);
            let sd = (col.iter().map(|v| v * v).sum::<f64>() / (n - 1.0)).sqrt();
            if sd > 0.0 {
                col.mapv_inplace(|v| v / sd);
            }
        }
        let out = DataMatrix::new(values)?;
        match &self.names {
            Some(names) => out.with_names(names.clone()),
            None => Ok(out),
        }
    }

    /// Reads a comma-separated matrix; one row per observation.
    pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, has_header)
    }

    pub fn read_csv<R: std::io::Read>(reader: R, has_header: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let names = if has_header {
            let header = rdr.headers().map_err(|e| csv_error(e, 1))?;
            Some(header.iter().map(str::to_owned).collect::<Vec<_>>())
        } else {
            None
        };
        let first_row = if has_header { 2 } else { 1 };
        let mut width = names.as_ref().map(Vec::len);
        let mut cells = Vec::new();
        let mut rows = 0usize;
        for (r, record) in rdr.records().enumerate() {
            let row = first_row + r;
            let record = record.map_err(|e| csv_error(e, row))?;
            if record.len() == 1 && record[0].is_empty() {
                continue;
            }
            match width {
                None => width = Some(record.len()),
                Some(w) if w != record.len() => {
                    return Err(Error::Parse {
                        row,
                        column: record.len().min(w) + 1,
                        message: format!("expected {w} columns, found {}", record.len()),
                    })
                }
                _ => {}
            }
            for (c, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("cannot parse {field:?} as a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        column: c + 1,
                        message: format!("non-finite value {field:?}"),
                    });
                }
                cells.push(v);
            }
            rows += 1;
        }
        let p = width.unwrap_or(0);
        let values = Array2::from_shape_vec((rows, p), cells)
            .map_err(|e| Error::InvalidData(e.to_string()))?;
        let data = DataMatrix::new(values)?;
        match names {
            Some(names) => data.with_names(names),
            None => Ok(data),
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_matrix_csv(path, self.values.view(), self.names.as_deref())
    }

    /// Residual sum of squares of column `j` regressed on the columns in `set`.
    pub fn rss(&self, j: usize, set: &NodeSet) -> Result<f64> {
        let mut buf = Vec::with_capacity(set.len());
        buf.extend(set.iter());
        self.rss_sorted(j, &buf)
    }

    /// As [`DataMatrix::rss`], with the regressors given as an ascending slice.
    pub fn rss_sorted(&self, j: usize, set: &[usize]) -> Result<f64> {
        debug_assert!(set.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(!set.contains(&j));
        let p = self.p();
        let g = self
            .gram
            .as_slice()
            .expect("gram is stored in standard layout");
        let yy = g[j * p + j];
        let k = set.len();
        if k == 0 {
            return Ok(yy);
        }
        let max_diag = set.iter().map(|&s| g[s * p + s]).fold(0.0, f64::max);
        let tol = PIVOT_TOLERANCE * max_diag;
        // Row-major lower factor and the forward-solved cross products.
        let mut l = vec![0.0; k * k];
        let mut w = vec![0.0; k];
        for a in 0..k {
            let ga = set[a] * p;
            for b in 0..a {
                let mut s = g[ga + set[b]];
                for c in 0..b {
                    s -= l[a * k + c] * l[b * k + c];
                }
                l[a * k + b] = s / l[b * k + b];
            }
            let mut d = g[ga + set[a]];
            for c in 0..a {
                d -= l[a * k + c] * l[a * k + c];
            }
            if !(d >= tol) || d <= 0.0 {
                return Err(Error::DegenerateDesign {
                    node: j,
                    set: set.to_vec(),
                });
            }
            let diag = d.sqrt();
            l[a * k + a] = diag;
            let mut s = g[ga + j];
            for c in 0..a {
                s -= l[a * k + c] * w[c];
            }
            w[a] = s / diag;
        }
        let explained: f64 = w.iter().map(|v| v * v).sum();
        Ok((yy - explained).max(0.0))
    }

    /// Per-node bounds on the residual sum of squares that hold for every
    /// parent set.
    pub fn rss_bounds(&self) -> Result<RssBounds> {
        let (n, p) = (self.n(), self.p());
        let upper: Vec<f64> = (0..p).map(|j| self.gram[[j, j]]).collect();
        let mut lower = Vec::with_capacity(p);
        let mut floored = Vec::new();
        for j in 0..p {
            let floor = LOWER_BOUND_FLOOR * upper[j];
            let value = if p < n {
                let rest: Vec<usize> = (0..p).filter(|&k| k != j).collect();
                match self.rss_sorted(j, &rest) {
                    Ok(v) if v > 0.0 => Some(v),
                    _ => None,
                }
            } else {
                None
            };
            lower.push(value.unwrap_or_else(|| {
                floored.push(j);
                floor
            }));
        }
        if !floored.is_empty() {
            log::warn!(
                "RSS lower bound fell back to {LOWER_BOUND_FLOOR:e} x X_j'X_j for {} node(s) (n={n}, p={p})",
                floored.len()
            );
        }
        Ok(RssBounds {
            lower,
            upper,
            floored,
        })
    }
}

fn csv_error(e: csv::Error, row: usize) -> Error {
    Error::Parse {
        row,
        column: 0,
        message: e.to_string(),
    }
}

/// Bounds `lower[j] <= RSS_j(S) <= upper[j]` valid for every `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct RssBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Nodes whose lower bound is the fallback floor rather than the
    /// complement regression.
    pub floored: Vec<usize>,
}

impl RssBounds {
    pub fn lower_sum_except(&self, j: usize) -> f64 {
        sum_except(&self.lower, j)
    }

    pub fn upper_sum_except(&self, j: usize) -> f64 {
        sum_except(&self.upper, j)
    }
}

pub(crate) fn sum_except(values: &[f64], j: usize) -> f64 {
    crate::score::neumaier_sum(
        values
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &v)| v),
    )
}

/// Writes a real matrix as CSV with an optional header row.
pub fn write_matrix_csv(
    path: impl AsRef<Path>,
    m: ArrayView2<'_, f64>,
    header: Option<&[String]>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    if let Some(h) = header {
        writeln!(out, "{}", h.join(",")).map_err(io)?;
    }
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads a headerless real matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cells = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (r, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if *width.get_or_insert(fields.len()) != fields.len() {
            return Err(Error::Parse {
                row: r + 1,
                column: fields.len(),
                message: "ragged row".into(),
            });
        }
        for (c, f) in fields.iter().enumerate() {
            let v = f.parse::<f64>().map_err(|_| Error::Parse {
                row: r + 1,
                column: c + 1,
                message: format!("cannot parse {f:?}"),
            })?;
            cells.push(v);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, width.unwrap_or(0)), cells)
        .map_err(|e| Error::InvalidData(e.to_string()))
}
