//! Binary classification metrics with Valid as the positive class.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::logic::format_rational;

use super::EvalError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Adds one case.
    pub fn record(&mut self, predicted_valid: bool, actually_valid: bool) {
        match (predicted_valid, actually_valid) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

/// An exact percentage.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Percent(pub BigRational);

impl Percent {
    /// `100 * num / den`, or zero when `den` is zero.
    fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            return Percent(BigRational::zero());
        }
        Percent(BigRational::new(BigInt::from(100u64 * num), BigInt::from(den)))
    }

    /// Rounded half away from zero to one decimal.
    pub fn rounded(&self) -> String {
        let tenths = (&self.0 * BigInt::from(10)).round();
        format_rational(&(tenths / BigInt::from(10)))
    }

    pub fn to_f64(&self) -> f64 {
        let (n, d) = (self.0.numer().to_string(), self.0.denom().to_string());
        n.parse::<f64>().unwrap_or(f64::NAN) / d.parse::<f64>().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rounded())
    }
}

impl Serialize for Percent {
    /// `{"exact": "n/d", "display": "12.3"}`.
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let exact = if self.0.denom().is_one() {
            self.0.numer().to_string()
        } else {
            format!("{}/{}", self.0.numer(), self.0.denom())
        };
        serde_json::json!({"exact": exact, "display": self.rounded()}).serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricsRow {
    pub soundness: Percent,
    pub fpr: Percent,
    pub precision: Percent,
    pub recall: Percent,
    pub f1: Percent,
    pub accuracy: Percent,
}

impl MetricsRow {
    pub fn values(&self) -> [&Percent; 6] {
        [&self.soundness, &self.fpr, &self.precision, &self.recall, &self.f1, &self.accuracy]
    }
}

impl fmt::Display for MetricsRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "S {} FPR {} Pr {} Re {} F1 {} Ac {}",
            self.soundness, self.fpr, self.precision, self.recall, self.f1, self.accuracy
        )
    }
}

/// Metrics as percentages. Ratios with a zero denominator are zero.
pub fn compute_metrics(c: &ConfusionCounts) -> Result<MetricsRow, EvalError> {
    let total = c.total();
    if total == 0 {
        return Err(EvalError::EmptyCounts);
    }
    Ok(MetricsRow {
        soundness: Percent::ratio(total - c.fp, total),
        fpr: Percent::ratio(c.fp, c.fp + c.tn),
        precision: Percent::ratio(c.tp, c.tp + c.fp),
        recall: Percent::ratio(c.tp, c.tp + c.fn_),
        f1: Percent::ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        accuracy: Percent::ratio(c.tp + c.tn, total),
    })
}
