//! `report.v1` documents: KS table, Ball Divergence table and accuracy table.

use pixaug_core::data::Label;
use pixaug_core::rng::derive_indexed;
use pixaug_core::stats::{ball_divergence_test, ks_two_sample, EvalReport, KsMethod};
use pixaug_core::{BANDS, BAND_NAMES};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const REPORT_SCHEMA: &str = "report.v1";

/// One band of one generated set against the originals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsEntry {
    /// 1-based generated set number.
    pub set: usize,
    pub band: String,
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
}

/// Joint test of one generated set against the originals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallEntry {
    pub set: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: usize,
    pub pass: bool,
}

/// Classifier trained on the originals plus the first `k` generated sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRecord {
    pub k: usize,
    pub builtup_original: usize,
    pub builtup_generated: usize,
    pub nonbuiltup: usize,
    pub chosen_hidden_units: usize,
    pub chosen_lambda: f64,
    pub cv_accuracy: f64,
    pub positive_label: Label,
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub accuracy: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub master_seed: u64,
    pub alpha: f64,
    pub ks_table: Vec<KsEntry>,
    pub ball_table: Vec<BallEntry>,
    pub accuracy_table: Vec<AccuracyRecord>,
    /// Every KS and Ball entry passes.
    pub all_pass: bool,
}

impl Report {
    pub fn new(master_seed: u64, alpha: f64) -> Self {
        Report {
            schema_version: REPORT_SCHEMA.to_string(),
            master_seed,
            alpha,
            ks_table: Vec::new(),
            ball_table: Vec::new(),
            accuracy_table: Vec::new(),
            all_pass: true,
        }
    }

    pub fn set_validation(&mut self, ks: Vec<KsEntry>, ball: Vec<BallEntry>) {
        self.all_pass = ks.iter().all(|e| e.pass) && ball.iter().all(|e| e.pass);
        self.ks_table = ks;
        self.ball_table = ball;
    }
}

impl AccuracyRecord {
    pub fn new(
        k: usize,
        counts: (usize, usize, usize),
        selection: (usize, f64, f64),
        eval: &EvalReport,
    ) -> Self {
        let cm = eval.confusion;
        AccuracyRecord {
            k,
            builtup_original: counts.0,
            builtup_generated: counts.1,
            nonbuiltup: counts.2,
            chosen_hidden_units: selection.0,
            chosen_lambda: selection.1,
            cv_accuracy: selection.2,
            positive_label: cm.positive_label,
            tp: cm.true_pos,
            fn_: cm.false_neg,
            fp: cm.false_pos,
            tn: cm.true_neg,
            sensitivity: eval.metrics.sensitivity,
            specificity: eval.metrics.specificity,
            ppv: eval.metrics.ppv,
            npv: eval.metrics.npv,
            accuracy: eval.metrics.accuracy,
            kappa: eval.kappa,
        }
    }
}

/// Per-band KS tests and one Ball Divergence test for every generated set.
///
/// Set `i` (0-based) uses permutation seed `derive_indexed(seed, i)`.
pub fn validate_sets<R: AsRef<[f64]>>(
    original: &[R],
    sets: &[Vec<R>],
    alpha: f64,
    permutations: usize,
    seed: u64,
    ks_method: KsMethod,
) -> Result<(Vec<KsEntry>, Vec<BallEntry>)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(crate::error::Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let column = |rows: &[R], b: usize| -> Vec<f64> { rows.iter().map(|r| r.as_ref()[b]).collect() };
    let mut ks = Vec::new();
    let mut ball = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        if let Some(bad) = set.iter().chain(original).find(|r| r.as_ref().len() != BANDS) {
            return Err(pixaug_core::Error::Shape {
                expected: BANDS,
                got: bad.as_ref().len(),
            }
            .into());
        }
        for (b, name) in BAND_NAMES.iter().enumerate() {
            let r = ks_two_sample(&column(original, b), &column(set, b), ks_method)?;
            ks.push(KsEntry {
                set: i + 1,
                band: name.to_string(),
                statistic: r.statistic,
                p_value: r.p_value,
                pass: r.accepts(alpha),
            });
        }
        let r = ball_divergence_test(original, set, permutations, derive_indexed(seed, i as u64))?;
        ball.push(BallEntry {
            set: i + 1,
            statistic: r.statistic,
            p_value: r.p_value,
            permutations,
            pass: r.accepts(alpha),
        });
    }
    Ok((ks, ball))
}
