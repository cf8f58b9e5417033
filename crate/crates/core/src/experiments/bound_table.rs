//! Bound tables: enumerate model shapes, evaluate the λ̄ bound and the
//! known exact values, and render the result as aligned text or CSV.

use num_traits::ToPrimitive;

use super::ExperimentError;
use crate::bounds::{Rational, RlctBound};
use crate::ModelDims;

/// Lower end of the learner-rank range: either a literal or "the true
/// rank of this row", written `H0` in the grid syntax.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HLow {
    Lit(u32),
    TrueRank,
}

/// Inclusive ranges over all four shape parameters, e.g.
/// `M=2..4 N=2..4 H0=1..2 H=H0..3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub m: (u32, u32),
    pub n: (u32, u32),
    pub h0: (u32, u32),
    pub h_lo: HLow,
    pub h_hi: u32,
}

pub(crate) fn parse_range(text: &str, key: &str) -> Result<(u32, u32), ExperimentError> {
    let bad = || ExperimentError::Config(format!("grid range {key}={text} is not LO..HI"));
    let (lo, hi) = text.split_once("..").ok_or_else(bad)?;
    let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(ExperimentError::Config(format!("grid range {key}={text} is empty")));
    }
    Ok((lo, hi))
}

impl GridSpec {
    /// Parse tokens of the form `KEY=LO..HI`; all of M, N, H, H0 must be
    /// present. H's lower end may be the literal `H0`.
    pub fn parse(tokens: &[String]) -> Result<GridSpec, ExperimentError> {
        let (mut m, mut n, mut h0, mut h) = (None, None, None, None);
        for token in tokens {
            let (key, range) = token.split_once('=').ok_or_else(|| {
                ExperimentError::Config(format!("grid token `{token}` is not KEY=LO..HI"))
            })?;
            match key.trim() {
                "M" => m = Some(parse_range(range, "M")?),
                "N" => n = Some(parse_range(range, "N")?),
                "H0" => h0 = Some(parse_range(range, "H0")?),
                "H" => {
                    let bad = || {
                        ExperimentError::Config(format!("grid range H={range} is not LO..HI"))
                    };
                    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
                    let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
                    let lo = match lo.trim() {
                        "H0" => HLow::TrueRank,
                        lit => HLow::Lit(lit.parse().map_err(|_| bad())?),
                    };
                    if let HLow::Lit(v) = lo {
                        if v > hi {
                            return Err(ExperimentError::Config(format!(
                                "grid range H={range} is empty"
                            )));
                        }
                    }
                    h = Some((lo, hi));
                }
                other => {
                    return Err(ExperimentError::Config(format!(
                        "unknown grid key `{other}` (expected M, N, H, H0)"
                    )))
                }
            }
        }
        match (m, n, h0, h) {
            (Some(m), Some(n), Some(h0), Some((h_lo, h_hi))) => {
                Ok(GridSpec { m, n, h0, h_lo, h_hi })
            }
            _ => Err(ExperimentError::Config(
                "grid needs all of M=LO..HI, N=LO..HI, H0=LO..HI, H=LO..HI".into(),
            )),
        }
    }

    /// All valid shapes in the grid, ordered by (M, N, H0, H). Combinations
    /// with H below the row's H0 are skipped — a learner cannot have fewer
    /// topics than the truth it is fit to.
    pub fn enumerate(&self) -> Result<Vec<ModelDims>, ExperimentError> {
        let mut out = Vec::new();
        for m in self.m.0..=self.m.1 {
            for n in self.n.0..=self.n.1 {
                for h0 in self.h0.0..=self.h0.1 {
                    let lo = match self.h_lo {
                        HLow::TrueRank => h0,
                        HLow::Lit(v) => v.max(h0),
                    };
                    for h in lo..=self.h_hi {
                        let dims = ModelDims::new(m, n, h, h0)
                            .map_err(|e| ExperimentError::Config(e.to_string()))?;
                        out.push(dims);
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(ExperimentError::Config("grid enumerates no valid shapes".into()));
        }
        Ok(out)
    }
}

/// Explicit `p/q` form, including unit denominators ("2/1" rather than "2"),
/// so every rational column parses the same way.
pub fn frac(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn dec(r: &Rational) -> f64 {
    r.to_f64().expect("table rationals are small")
}

pub const BOUND_CSV_HEADER: &str =
    "M,N,H,H0,d,lambda_bar,lambda_exact,case,gap,lambda_bar_dec,lambda_exact_dec,gap_dec";

fn csv_row(b: &RlctBound) -> String {
    let (exact_frac, exact_dec, case) = match &b.exact {
        Some((v, c)) => (frac(v), dec(v).to_string(), c.to_string()),
        None => (String::new(), String::new(), String::new()),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        b.dims.m(),
        b.dims.n(),
        b.dims.h(),
        b.dims.h0(),
        b.param_dim,
        frac(&b.lambda_bar),
        exact_frac,
        case,
        frac(&b.gap),
        dec(&b.lambda_bar),
        exact_dec,
        dec(&b.gap),
    )
}

pub fn bounds_to_csv(rows: &[RlctBound], config_note: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(note) = config_note {
        out.push_str(&format!("# {note}\n"));
    }
    out.push_str(BOUND_CSV_HEADER);
    out.push('\n');
    for b in rows {
        out.push_str(&csv_row(b));
        out.push('\n');
    }
    out
}

/// Fixed-width text table for stdout.
pub fn bounds_to_text(rows: &[RlctBound]) -> String {
    let mut table: Vec<[String; 9]> = vec![[
        "M".into(),
        "N".into(),
        "H".into(),
        "H0".into(),
        "d".into(),
        "lambda_bar".into(),
        "exact".into(),
        "case".into(),
        "gap".into(),
    ]];
    for b in rows {
        let (exact, case) = match &b.exact {
            Some((v, c)) => (format!("{} ({})", frac(v), dec(v)), c.to_string()),
            None => ("-".into(), "-".into()),
        };
        table.push([
            b.dims.m().to_string(),
            b.dims.n().to_string(),
            b.dims.h().to_string(),
            b.dims.h0().to_string(),
            b.param_dim.to_string(),
            format!("{} ({})", frac(&b.lambda_bar), dec(&b.lambda_bar)),
            exact,
            case,
            frac(&b.gap),
        ]);
    }
    let mut widths = [0usize; 9];
    for row in &table {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &table {
        let line: Vec<String> =
            row.iter().zip(widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn evaluate_all(dims: &[ModelDims]) -> Vec<RlctBound> {
    dims.iter().map(|&d| RlctBound::evaluate(d)).collect()
}
