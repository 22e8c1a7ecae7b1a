//! Score discretization schemes.
//!
//! N1 and N3 map to three sentiment levels with different thresholds; N5
//! and N10 cut `[-1, 1]` into equal-width bins and return the bin midpoint.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Normalization {
    #[serde(rename = "raw")]
    Raw,
    N1,
    N3,
    N5,
    N10,
}

impl Normalization {
    pub const ALL: [Normalization; 5] = [
        Normalization::Raw,
        Normalization::N1,
        Normalization::N3,
        Normalization::N5,
        Normalization::N10,
    ];

    pub fn apply(self, score: f64) -> f64 {
        match self {
            Normalization::Raw => score,
            Normalization::N1 => normalize_n1(score),
            Normalization::N3 => normalize_n3(score),
            Normalization::N5 => normalize_equal_bins(score, 5),
            Normalization::N10 => normalize_equal_bins(score, 10),
        }
    }

    pub fn apply_all(self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&s| self.apply(s)).collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::N1 => "N1",
            Normalization::N3 => "N3",
            Normalization::N5 => "N5",
            Normalization::N10 => "N10",
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Normalization::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown normalization `{s}`")))
    }
}

/// Positive at or above 0.5, negative at or below -0.5, neutral between.
pub fn normalize_n1(score: f64) -> f64 {
    if score >= 0.5 {
        1.0
    } else if score <= -0.5 {
        -1.0
    } else {
        0.0
    }
}

/// Intervals `(-inf, -0.333]`, `(-0.333, 0.333)`, `[0.333, inf)`.
pub fn normalize_n3(score: f64) -> f64 {
    if score <= -0.333 {
        -1.0
    } else if score >= 0.333 {
        1.0
    } else {
        0.0
    }
}

/// Midpoint of the equal-width bin of `[-1, 1]` containing `score`. Bins are
/// half-open except the last, which is closed at +1.
pub fn normalize_equal_bins(score: f64, k: usize) -> f64 {
    assert!(k >= 1, "need at least one bin");
    let kf = k as f64;
    let pos = (score + 1.0) * kf / 2.0;
    let idx = if pos <= 0.0 {
        0
    } else {
        (pos.floor() as usize).min(k - 1)
    };
    ((2 * idx + 1) as f64 - kf) / kf
}
