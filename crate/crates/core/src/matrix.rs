//! Column-stochastic matrices: entries in [0,1], every column summing to 1.
//!
//! These are the parameter objects of the factorization (`A`, `B`) and the
//! truth factors (`A0`, `B0`). The stochastic invariant is enforced at every
//! construction site, including deserialization; code holding a
//! [`StochasticMatrix`] may rely on it.

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on |column sum − 1|.
pub const COLUMN_SUM_TOL: f64 = 1e-12;

/// How many Dirichlet redraws [`random_stochastic`] spends per column before
/// concluding the interior margin is unreachable in practice.
const REDRAW_CAP: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum StochasticViolation {
    #[error("matrix has no rows or no columns")]
    Empty,
    #[error("entry ({row},{col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("entry ({row},{col}) = {value} outside [0,1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("column {col} sums to {sum}, not 1 (tolerance {COLUMN_SUM_TOL:e})")]
    ColumnSum { col: usize, sum: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("inner dimensions do not match: left is {lrows}x{lcols}, right is {rrows}x{rcols}")]
    ShapeMismatch { lrows: usize, lcols: usize, rrows: usize, rcols: usize },
    #[error("interior margin delta={delta} infeasible for {rows} rows (need delta*rows < 1)")]
    InfeasibleDelta { delta: f64, rows: usize },
    #[error("interior margin delta={delta} not reached after {REDRAW_CAP} redraws of one column")]
    DeltaTooTight { delta: f64 },
    #[error(transparent)]
    NotStochastic(#[from] StochasticViolation),
    #[error("text form: {0}")]
    Parse(String),
}

/// Validate an arbitrary array against the column-stochastic contract,
/// reporting the first offense in column-major order.
pub fn validate_stochastic(data: &Array2<f64>) -> Result<(), StochasticViolation> {
    if data.nrows() == 0 || data.ncols() == 0 {
        return Err(StochasticViolation::Empty);
    }
    for col in 0..data.ncols() {
        let mut sum = 0.0;
        for row in 0..data.nrows() {
            let value = data[(row, col)];
            if !value.is_finite() {
                return Err(StochasticViolation::NonFinite { row, col });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(StochasticViolation::EntryOutOfRange { row, col, value });
            }
            sum += value;
        }
        if (sum - 1.0).abs() > COLUMN_SUM_TOL {
            return Err(StochasticViolation::ColumnSum { col, sum });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct StochasticMatrix {
    data: Array2<f64>,
}

/// Row-major wire form.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<f64>>,
}

impl StochasticMatrix {
    pub fn from_array(data: Array2<f64>) -> Result<Self, StochasticViolation> {
        validate_stochastic(&data)?;
        Ok(StochasticMatrix { data })
    }

    /// Re-check the invariant (it should never fire; useful in tests and
    /// after deserialization of foreign data).
    pub fn validate(&self) -> Result<(), StochasticViolation> {
        validate_stochastic(&self.data)
    }

    pub fn identity(n: usize) -> Self {
        StochasticMatrix { data: Array2::eye(n) }
    }

    /// All entries `1/rows`.
    pub fn uniform(rows: usize, cols: usize) -> Self {
        StochasticMatrix { data: Array2::from_elem((rows, cols), 1.0 / rows as f64) }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[(row, col)]
    }

    pub fn column(&self, col: usize) -> ArrayView1<'_, f64> {
        self.data.column(col)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Matrix product. Column-stochasticity is closed under products, but
    /// the result is validated rather than assumed.
    pub fn product(&self, right: &StochasticMatrix) -> Result<StochasticMatrix, MatrixError> {
        if self.cols() != right.rows() {
            return Err(MatrixError::ShapeMismatch {
                lrows: self.rows(),
                lcols: self.cols(),
                rrows: right.rows(),
                rcols: right.cols(),
            });
        }
        Ok(StochasticMatrix::from_array(self.data.dot(&right.data))?)
    }

    /// Plain text form: a `rows cols` header line, then one line per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows(), self.cols());
        for row in self.data.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MatrixError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| MatrixError::Parse("empty input".into()))?;
        let mut parts = header.split_whitespace();
        let rows: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| MatrixError::Parse(format!("bad header {header:?}")))?;
        let cols: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| MatrixError::Parse(format!("bad header {header:?}")))?;
        if parts.next().is_some() {
            return Err(MatrixError::Parse(format!("trailing tokens in header {header:?}")));
        }
        let mut data = Array2::zeros((rows, cols));
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| MatrixError::Parse(format!("expected {rows} rows, got {r}")))?;
            let values: Result<Vec<f64>, _> =
                line.split_whitespace().map(|t| t.parse::<f64>()).collect();
            let values =
                values.map_err(|e| MatrixError::Parse(format!("row {r}: {e}")))?;
            if values.len() != cols {
                return Err(MatrixError::Parse(format!(
                    "row {r} has {} entries, expected {cols}",
                    values.len()
                )));
            }
            for (c, v) in values.into_iter().enumerate() {
                data[(r, c)] = v;
            }
        }
        if lines.next().is_some() {
            return Err(MatrixError::Parse(format!("more than {rows} data rows")));
        }
        Ok(StochasticMatrix::from_array(data)?)
    }
}

impl TryFrom<RawMatrix> for StochasticMatrix {
    type Error = StochasticViolation;
    fn try_from(raw: RawMatrix) -> Result<Self, StochasticViolation> {
        if raw.entries.len() != raw.rows || raw.entries.iter().any(|r| r.len() != raw.cols) {
            return Err(StochasticViolation::Empty);
        }
        let mut data = Array2::zeros((raw.rows, raw.cols));
        for (r, row) in raw.entries.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                data[(r, c)] = v;
            }
        }
        StochasticMatrix::from_array(data)
    }
}

impl From<StochasticMatrix> for RawMatrix {
    fn from(m: StochasticMatrix) -> RawMatrix {
        RawMatrix {
            rows: m.rows(),
            cols: m.cols(),
            entries: m.data.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }
}

/// Draw a matrix with independent uniform (flat Dirichlet) columns,
/// redrawing any column whose smallest entry falls below `delta`.
///
/// `delta = 0` samples the full simplex; that is the measure the RLCT
/// estimators integrate over. Positive `delta` is used for ground truths,
/// which must stay away from the boundary.
pub fn random_stochastic(
    rows: usize,
    cols: usize,
    delta: f64,
    rng: &mut impl Rng,
) -> Result<StochasticMatrix, MatrixError> {
    if rows == 0 || cols == 0 {
        return Err(StochasticViolation::Empty.into());
    }
    if !(0.0..1.0).contains(&delta) || delta * rows as f64 >= 1.0 {
        return Err(MatrixError::InfeasibleDelta { delta, rows });
    }
    let mut data = Array2::zeros((rows, cols));
    let mut column = vec![0.0f64; rows];
    for c in 0..cols {
        let mut tries = 0;
        loop {
            tries += 1;
            if tries > REDRAW_CAP {
                return Err(MatrixError::DeltaTooTight { delta });
            }
            let mut sum = 0.0;
            for slot in column.iter_mut() {
                let e: f64 = rng.sample(Exp1);
                *slot = e;
                sum += e;
            }
            for slot in column.iter_mut() {
                *slot /= sum;
            }
            if column.iter().all(|&v| v >= delta) {
                break;
            }
        }
        for (r, &v) in column.iter().enumerate() {
            data[(r, c)] = v;
        }
    }
    Ok(StochasticMatrix::from_array(data)?)
}
