//! RMSE, per-filter summary tables and rankings.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Variant;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmseFormula {
    /// `(1/N) sqrt(sum e^2)`. Smaller than the conventional value by `sqrt(N)`.
    #[default]
    Paper,
    /// `sqrt(sum e^2 / N)`.
    Conventional,
}

/// Root-mean-square error between two equally long series.
///
/// Empty input is reported as `LengthMismatch(0, 0)`.
pub fn rmse(truth: &[f64], estimate: &[f64], formula: RmseFormula) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::LengthMismatch(truth.len(), estimate.len()));
    }
    if truth.is_empty() {
        return Err(Error::LengthMismatch(0, 0));
    }
    let n = truth.len() as f64;
    let sum_sq: f64 = truth.iter().zip(estimate).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(match formula {
        RmseFormula::Paper => sum_sq.sqrt() / n,
        RmseFormula::Conventional => (sum_sq / n).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    VCb,
    VCc,
    Cb,
    Cc,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::VCb, Quantity::VCc, Quantity::Cb, Quantity::Cc];

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn label(&self) -> &'static str {
        match self {
            Quantity::VCb => "V_Cb",
            Quantity::VCc => "V_Cc",
            Quantity::Cb => "C_b",
            Quantity::Cc => "C_c",
        }
    }
}

/// One filter's row in a summary table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterRmse {
    pub variant: Variant,
    /// Indexed by [`Quantity::index`].
    pub paper: [f64; 4],
    pub conventional: [f64; 4],
    /// Summed per-step filter time in seconds.
    pub wall_time_s: f64,
    pub diverged: bool,
}

impl FilterRmse {
    pub fn get(&self, q: Quantity, formula: RmseFormula) -> f64 {
        match formula {
            RmseFormula::Paper => self.paper[q.index()],
            RmseFormula::Conventional => self.conventional[q.index()],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RmseTable {
    pub rows: Vec<FilterRmse>,
}

impl RmseTable {
    pub fn row(&self, variant: Variant) -> Option<&FilterRmse> {
        self.rows.iter().find(|r| r.variant == variant)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankKey {
    Quantity(Quantity),
    /// RMSE of `V_Cb` plus RMSE of `V_Cc`.
    Voltage,
}

impl RankKey {
    pub fn value(&self, row: &FilterRmse) -> f64 {
        let v = match self {
            RankKey::Quantity(q) => row.get(*q, RmseFormula::Paper),
            RankKey::Voltage => row.paper[0] + row.paper[1],
        };
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

impl fmt::Display for RankKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankKey::Quantity(q) => f.write_str(q.label()),
            RankKey::Voltage => f.write_str("voltage"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankTable {
    pub key: RankKey,
    /// Best first.
    pub order: Vec<Variant>,
}

impl RankTable {
    /// 1-based rank of `variant`, if present.
    pub fn rank_of(&self, variant: Variant) -> Option<usize> {
        self.order.iter().position(|v| *v == variant).map(|p| p + 1)
    }
}

/// Order filters best-first.
///
/// Diverged filters go after all healthy ones. Within each group the order is
/// ascending key value, then wall time, then [`Variant::ALL`] order. NaN keys
/// count as infinite.
pub fn rank_filters(table: &RmseTable, key: RankKey) -> RankTable {
    let mut rows: Vec<&FilterRmse> = table.rows.iter().collect();
    rows.sort_by(|a, b| {
        a.diverged
            .cmp(&b.diverged)
            .then_with(|| key.value(a).total_cmp(&key.value(b)))
            .then_with(|| a.wall_time_s.partial_cmp(&b.wall_time_s).unwrap_or(Ordering::Equal))
            .then_with(|| a.variant.cmp(&b.variant))
    });
    RankTable {
        key,
        order: rows.into_iter().map(|r| r.variant).collect(),
    }
}
