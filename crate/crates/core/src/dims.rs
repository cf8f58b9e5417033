//! Problem dimensions shared by every module.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Size description of a factorization problem: an `M×N` product matrix,
/// a learner of inner dimension `H`, and a truth of inner dimension `H0`.
///
/// Validity: `M ≥ 2`, `N ≥ 2`, `H ≥ H0 ≥ 1`. Constructed only through
/// [`ModelDims::new`], so a value of this type is always valid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDims", into = "RawDims")]
pub struct ModelDims {
    rows: u32,
    cols: u32,
    topics: u32,
    true_topics: u32,
}

/// Wire form; field names follow the conventional letters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct RawDims {
    m: u32,
    n: u32,
    h: u32,
    h0: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimsError {
    #[error("M and N must both be at least 2, got M={m}, N={n}")]
    ProductTooSmall { m: u32, n: u32 },
    #[error("need H >= H0 >= 1, got H={h}, H0={h0}")]
    BadRanks { h: u32, h0: u32 },
}

impl ModelDims {
    pub fn new(m: u32, n: u32, h: u32, h0: u32) -> Result<Self, DimsError> {
        if m < 2 || n < 2 {
            return Err(DimsError::ProductTooSmall { m, n });
        }
        if h0 < 1 || h < h0 {
            return Err(DimsError::BadRanks { h, h0 });
        }
        Ok(ModelDims { rows: m, cols: n, topics: h, true_topics: h0 })
    }

    /// Row count of the product (size of each column simplex of `A`).
    pub fn m(&self) -> u32 {
        self.rows
    }

    /// Column count of the product (number of column simplices of `B`).
    pub fn n(&self) -> u32 {
        self.cols
    }

    /// Learner inner dimension.
    pub fn h(&self) -> u32 {
        self.topics
    }

    /// Truth inner dimension.
    pub fn h0(&self) -> u32 {
        self.true_topics
    }

    /// Dims of the truth itself (learner rank = true rank).
    pub fn truth_dims(&self) -> ModelDims {
        ModelDims { topics: self.true_topics, ..*self }
    }

    pub(crate) fn as_i64(&self) -> (i64, i64, i64, i64) {
        (self.rows as i64, self.cols as i64, self.topics as i64, self.true_topics as i64)
    }
}

impl TryFrom<RawDims> for ModelDims {
    type Error = DimsError;
    fn try_from(r: RawDims) -> Result<Self, DimsError> {
        ModelDims::new(r.m, r.n, r.h, r.h0)
    }
}

impl From<ModelDims> for RawDims {
    fn from(d: ModelDims) -> RawDims {
        RawDims { m: d.rows, n: d.cols, h: d.topics, h0: d.true_topics }
    }
}

impl std::fmt::Display for ModelDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(M={}, N={}, H={}, H0={})", self.rows, self.cols, self.topics, self.true_topics)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_valid_dims() {
        let d = ModelDims::new(5, 4, 3, 2).unwrap();
        assert_eq!((d.m(), d.n(), d.h(), d.h0()), (5, 4, 3, 2));
    }

    #[test]
    fn rejects_invalid_dims() {
        assert_eq!(ModelDims::new(1, 2, 1, 1), Err(DimsError::ProductTooSmall { m: 1, n: 2 }));
        assert_eq!(ModelDims::new(2, 1, 1, 1), Err(DimsError::ProductTooSmall { m: 2, n: 1 }));
        assert_eq!(ModelDims::new(2, 2, 1, 2), Err(DimsError::BadRanks { h: 1, h0: 2 }));
        assert_eq!(ModelDims::new(2, 2, 1, 0), Err(DimsError::BadRanks { h: 1, h0: 0 }));
    }

    #[test]
    fn json_round_trip_uses_letter_names() {
        let d = ModelDims::new(3, 3, 2, 2).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"m":3,"n":3,"h":2,"h0":2}"#);
        assert_eq!(serde_json::from_str::<ModelDims>(&s).unwrap(), d);
    }

    #[test]
    fn deserialization_validates() {
        assert!(serde_json::from_str::<ModelDims>(r#"{"m":2,"n":2,"h":1,"h0":3}"#).is_err());
    }
}
