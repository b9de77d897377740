//! Per-fragment placement probabilities conditioned on one center fragment.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::types::{FragmentId, PositionClass};

/// Floor applied before taking logarithms so every edge weight is finite.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Rows whose sum strays further than this from 1 are rejected.
pub const SUM_REJECT_TOLERANCE: f64 = 1e-3;

/// Rows whose sum strays further than this are renormalized with a warning.
pub const SUM_WARN_TOLERANCE: f64 = 1e-5;

/// Number of classes per row: eight lateral slots, then the outsider class.
pub const CLASSES: usize = 9;

/// Edge weight of a placement probability, `-ln(max(p, floor))`.
pub fn log_weight(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain {
            what: "probability must lie in [0, 1]",
            value: p,
        });
    }
    Ok(0.0 - p.max(PROBABILITY_FLOOR).ln())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub fragment: FragmentId,
    /// Lateral slots 1..=8, then the outsider class.
    pub probs: [f64; CLASSES],
}

impl MatrixRow {
    pub fn prob(&self, class: PositionClass) -> f64 {
        debug_assert!(class.code() >= 1);
        self.probs[class.code() as usize - 1]
    }

    /// Most probable class, lowest code on ties.
    pub fn argmax(&self) -> PositionClass {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        PositionClass::new(best as u8 + 1).expect("index below 9")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionMatrix {
    pub center: FragmentId,
    pub rows: Vec<MatrixRow>,
}

/// Rows whose probabilities were rescaled by more than [`SUM_WARN_TOLERANCE`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoadReport {
    pub renormalized: Vec<FragmentId>,
}

impl PredictionMatrix {
    /// Builds a matrix from raw rows, applying the same checks as loading.
    pub fn new(center: FragmentId, rows: Vec<MatrixRow>) -> Result<Self> {
        Self::validated(center, rows).map(|(m, _)| m)
    }

    fn validated(center: FragmentId, mut rows: Vec<MatrixRow>) -> Result<(Self, LoadReport)> {
        let mut seen = BTreeSet::new();
        let mut report = LoadReport::default();
        for row in &mut rows {
            if row.fragment == center {
                return Err(Error::Validation(format!(
                    "center fragment {center} has its own row"
                )));
            }
            if !seen.insert(row.fragment) {
                return Err(Error::Validation(format!(
                    "fragment {} appears in more than one row",
                    row.fragment
                )));
            }
            if let Some(&p) = row.probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                return Err(Error::Validation(format!(
                    "fragment {} has invalid probability {p}",
                    row.fragment
                )));
            }
            let sum: f64 = row.probs.iter().sum();
            if (sum - 1.0).abs() > SUM_REJECT_TOLERANCE {
                return Err(Error::Validation(format!(
                    "fragment {} probabilities sum to {sum}",
                    row.fragment
                )));
            }
            if (sum - 1.0).abs() > SUM_WARN_TOLERANCE {
                report.renormalized.push(row.fragment);
            }
            if sum != 1.0 {
                row.probs.iter_mut().for_each(|p| *p /= sum);
            }
        }
        Ok((PredictionMatrix { center, rows }, report))
    }

    /// Number of non-center fragments.
    pub fn f(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, fragment: FragmentId) -> Option<&MatrixRow> {
        self.rows.iter().find(|r| r.fragment == fragment)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }
}

pub fn load_prediction_matrix(document: &str) -> Result<PredictionMatrix> {
    load_prediction_matrix_with_report(document).map(|(m, _)| m)
}

/// Parses and validates a matrix document, reporting which rows needed
/// noticeable renormalization.
pub fn load_prediction_matrix_with_report(
    document: &str,
) -> Result<(PredictionMatrix, LoadReport)> {
    let value: Value = serde_json::from_str(document)?;
    let object = value
        .as_object()
        .ok_or_else(|| Error::parse("$", "expected an object"))?;
    let center = fragment_id(object.get("center"), "center")?;
    let rows_value = object
        .get("rows")
        .ok_or_else(|| Error::parse("rows", "missing"))?
        .as_array()
        .ok_or_else(|| Error::parse("rows", "expected an array"))?;

    let mut rows = Vec::with_capacity(rows_value.len());
    for (i, row) in rows_value.iter().enumerate() {
        let fragment = fragment_id(row.get("fragment"), &format!("rows[{i}].fragment"))?;
        let field = format!("rows[{i}].probs");
        let list = row
            .get("probs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::parse(&field, "missing or not an array"))?;
        if list.len() != CLASSES {
            return Err(Error::parse(
                &field,
                format!("expected {CLASSES} entries, found {}", list.len()),
            ));
        }
        let mut probs = [0.0; CLASSES];
        for (slot, v) in probs.iter_mut().zip(list) {
            *slot = v
                .as_f64()
                .ok_or_else(|| Error::parse(&field, format!("{v} is not a number")))?;
        }
        rows.push(MatrixRow { fragment, probs });
    }
    PredictionMatrix::validated(center, rows)
}

fn fragment_id(value: Option<&Value>, field: &str) -> Result<FragmentId> {
    let value = value.ok_or_else(|| Error::parse(field, "missing"))?;
    value
        .as_u64()
        .and_then(|v| u32::try_from(v).ok())
        .map(FragmentId)
        .ok_or_else(|| Error::parse(field, format!("{value} is not a fragment id")))
}
