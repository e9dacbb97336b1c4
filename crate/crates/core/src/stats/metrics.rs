//! Confusion-matrix metrics and Cohen's kappa.

use alloc::string::ToString;

use crate::data::Label;
use crate::{Error, Result};

/// Binary confusion matrix with an explicit positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    #[cfg_attr(feature = "serde", serde(rename = "tp"))]
    pub true_pos: u64,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub false_neg: u64,
    #[cfg_attr(feature = "serde", serde(rename = "fp"))]
    pub false_pos: u64,
    #[cfg_attr(feature = "serde", serde(rename = "tn"))]
    pub true_neg: u64,
    pub positive_label: Label,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64, positive_label: Label) -> Self {
        ConfusionMatrix {
            true_pos: tp,
            false_neg: fn_,
            false_pos: fp,
            true_neg: tn,
            positive_label,
        }
    }

    /// Tallies paired (truth, prediction) labels.
    pub fn from_labels<I>(pairs: I, positive_label: Label) -> Self
    where
        I: IntoIterator<Item = (Label, Label)>,
    {
        let mut cm = ConfusionMatrix::new(0, 0, 0, 0, positive_label);
        for (truth, pred) in pairs {
            match (truth == positive_label, pred == positive_label) {
                (true, true) => cm.true_pos += 1,
                (true, false) => cm.false_neg += 1,
                (false, true) => cm.false_pos += 1,
                (false, false) => cm.true_neg += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_neg + self.false_pos + self.true_neg
    }

    /// The same table read with the other class as positive.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            true_pos: self.true_neg,
            false_neg: self.false_pos,
            false_pos: self.false_neg,
            true_neg: self.true_pos,
            positive_label: self.positive_label.other(),
        }
    }
}

/// Rates derived from a confusion matrix; `None` where the denominator is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Data("confusion matrix is empty".to_string()));
    }
    Ok(Metrics {
        sensitivity: ratio(cm.true_pos, cm.true_pos + cm.false_neg),
        specificity: ratio(cm.true_neg, cm.true_neg + cm.false_pos),
        ppv: ratio(cm.true_pos, cm.true_pos + cm.false_pos),
        npv: ratio(cm.true_neg, cm.true_neg + cm.false_neg),
        accuracy: (cm.true_pos + cm.true_neg) as f64 / total as f64,
    })
}

/// `(p_o - p_e) / (1 - p_e)` with `p_e` from the row and column marginals.
pub fn cohen_kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Data("confusion matrix is empty".to_string()));
    }
    let t = total as f64;
    let (tp, fn_, fp, tn) = (
        cm.true_pos as f64,
        cm.false_neg as f64,
        cm.false_pos as f64,
        cm.true_neg as f64,
    );
    let observed = (tp + tn) / t;
    let expected = ((tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn)) / (t * t);
    if expected == 1.0 {
        return if cm.false_neg == 0 && cm.false_pos == 0 {
            Ok(1.0)
        } else {
            Err(Error::Data("kappa is undefined: chance agreement is 1".to_string()))
        };
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Confusion matrix plus everything derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub kappa: f64,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self> {
        Ok(EvalReport {
            metrics: metrics(&confusion)?,
            kappa: cohen_kappa(&confusion)?,
            confusion,
        })
    }
}
