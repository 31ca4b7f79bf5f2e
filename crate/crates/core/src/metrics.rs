//! Confusion-matrix indicators. +1 is the positive class.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(y_true: &[i8], y_pred: &[i8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::data(format!(
            "{} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::data("confusion matrix needs at least one sample"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (-1, 1) => cm.fp += 1,
            (1, -1) => cm.fn_ += 1,
            (-1, -1) => cm.tn += 1,
            _ => {
                return Err(Error::data(format!(
                    "labels must be +1 or -1, got ({t}, {p})"
                )))
            }
        }
    }
    Ok(cm)
}

/// A ratio that is `None` when its denominator is zero. Serialized as the
/// string `"undefined"` so a 0/0 never reads as a measured zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Ratio(pub Option<f64>);

impl Ratio {
    fn of(num: u64, den: u64) -> Self {
        Ratio((den > 0).then(|| num as f64 / den as f64))
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Ratio(Some(v))),
            Repr::Text(t) if t == "undefined" => Ok(Ratio(None)),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "unexpected indicator `{t}`"
            ))),
        }
    }
}

/// Field order follows the usual reporting columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Indicators {
    pub accuracy: Ratio,
    pub precision: Ratio,
    pub recall: Ratio,
    pub specificity: Ratio,
    pub f1: Ratio,
}

pub fn indicators(cm: &ConfusionMatrix) -> Result<Indicators> {
    if cm.total() == 0 {
        return Err(Error::data("indicators need at least one sample"));
    }
    let precision = Ratio::of(cm.tp, cm.tp + cm.fp);
    let recall = Ratio::of(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision.0, recall.0) {
        (Some(p), Some(r)) if p + r > 0.0 => Ratio(Some(2.0 * p * r / (p + r))),
        _ => Ratio(None),
    };
    Ok(Indicators {
        accuracy: Ratio::of(cm.tp + cm.tn, cm.total()),
        precision,
        recall,
        specificity: Ratio::of(cm.tn, cm.tn + cm.fp),
        f1,
    })
}

/// Whether `f1 = 2pr / (p + r)` holds (within `tol`) wherever p and r are defined.
pub fn f1_consistent(ind: &Indicators, tol: f64) -> bool {
    match (ind.precision.0, ind.recall.0, ind.f1.0) {
        (Some(p), Some(r), Some(f)) => (f - 2.0 * p * r / (p + r)).abs() <= tol,
        (Some(p), Some(r), None) => p + r == 0.0,
        _ => true,
    }
}

/// Per-model test-set report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub model: String,
    pub split_seed: u64,
    pub indicators: Indicators,
    pub confusion: ConfusionMatrix,
}

impl Report {
    pub fn new(
        model: impl Into<String>,
        split_seed: u64,
        y_true: &[i8],
        y_pred: &[i8],
    ) -> Result<Self> {
        let cm = confusion(y_true, y_pred)?;
        Ok(Self {
            model: model.into(),
            split_seed,
            indicators: indicators(&cm)?,
            confusion: cm,
        })
    }

    pub fn accuracy(&self) -> f64 {
        self.indicators.accuracy.0.unwrap_or(0.0)
    }
}

/// Fraction of `predictions` equal to `labels`.
pub fn accuracy(labels: &[i8], predictions: &[i8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = labels
        .iter()
        .zip(predictions)
        .filter(|(a, b)| a == b)
        .count();
    hits as f64 / labels.len() as f64
}
