//! Grade prediction for student submissions.
//!
//! Each submission contributes three signals: the fraction of tests passed,
//! whether it is free of known bugs, and how similar its control flow is to
//! the closest model solution. A linear model with no intercept maps those
//! onto a 0..10 grade; it is fitted by least squares against teacher-given
//! grades and applied to ungraded submissions.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ir::Program;
use crate::neighbor::{program_similarity, EngineConfig};

/// Feature order used everywhere: coefficients, design matrix, diagnostics.
pub const FEATURE_NAMES: [&str; 3] = ["tests_ratio", "bug_free", "similarity"];

/// One student submission with its measured inputs.
#[derive(Clone, Debug)]
pub struct SubmissionRecord {
    pub id: String,
    pub program: Program,
    pub tests_passed: u32,
    pub tests_total: u32,
    pub bug_free: bool,
    /// Present for training data, absent for submissions still to grade.
    pub teacher_grade: Option<f64>,
}

impl SubmissionRecord {
    /// Fraction of tests passed, in `[0, 1]`.
    pub fn tests_ratio(&self) -> f64 {
        self.tests_passed as f64 / self.tests_total as f64
    }

    fn check(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidRecord {
                id: self.id.clone(),
                reason,
            })
        };
        if self.tests_total == 0 {
            return fail("tests_total must be at least 1".to_string());
        }
        if self.tests_passed > self.tests_total {
            return fail(format!(
                "tests_passed ({}) exceeds tests_total ({})",
                self.tests_passed, self.tests_total
            ));
        }
        if let Some(grade) = self.teacher_grade {
            if !grade.is_finite() || !(0.0..=10.0).contains(&grade) {
                return fail(format!("teacher grade {grade} is outside 0..10"));
            }
        }
        Ok(())
    }
}

/// A reference solution submissions are compared against.
#[derive(Clone, Debug)]
pub struct ModelSolution {
    pub id: String,
    pub program: Program,
}

/// A submission's similarity to its closest model solution.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilaritySignal {
    pub similarity: f64,
    /// Id of the model solution that produced the maximum. Ties go to the
    /// first model in listing order.
    pub best_model: String,
}

/// First index holding the maximum value; `None` for an empty slice.
pub fn select_best(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) if s > scores[b] => best = Some(i),
            _ => {}
        }
    }
    best
}

/// Scores `submission` against every model and keeps the best.
pub fn compute_similarity_signal(
    submission: &Program,
    models: &[ModelSolution],
    cfg: &EngineConfig,
) -> Result<SimilaritySignal> {
    if models.is_empty() {
        return Err(Error::NoModelSolutions);
    }
    let scores: Vec<f64> = models
        .iter()
        .map(|m| program_similarity(submission, &m.program, cfg))
        .collect();
    let best = select_best(&scores).expect("models is non-empty");
    Ok(SimilaritySignal {
        similarity: scores[best],
        best_model: models[best].id.clone(),
    })
}

/// Similarity signals for a whole cohort, in record order. Submissions are
/// scored in parallel when a thread pool is available.
pub fn compute_all_signals(
    records: &[SubmissionRecord],
    models: &[ModelSolution],
    cfg: &EngineConfig,
) -> Result<Vec<SimilaritySignal>> {
    use rayon::prelude::*;

    if models.is_empty() {
        return Err(Error::NoModelSolutions);
    }
    Ok(records
        .par_iter()
        .map(|r| {
            compute_similarity_signal(&r.program, models, cfg)
                .expect("models already checked non-empty")
        })
        .collect())
}

/// Fitted linear model `grade = a0*tests_ratio + a1*bug_free + a2*similarity`.
/// There is no intercept: a submission with no signal predicts grade 0.
#[derive(Clone, Debug, PartialEq)]
pub struct GradeModel {
    /// Coefficients in [`FEATURE_NAMES`] order.
    pub alpha: [f64; 3],
    pub trained_on: usize,
    /// Mean absolute error on the training set.
    pub train_mae: f64,
    /// Pearson correlation between fitted and teacher grades on the
    /// training set; 0 when either side has no variance.
    pub train_r: f64,
}

/// Raw and clamped output for one submission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub raw: f64,
    /// `raw` clamped into the 0..10 grade scale.
    pub grade: f64,
}

/// Fits the model on fully graded records by least squares.
///
/// Requires one signal per record, a teacher grade on every record, and at
/// least 3 records. Errors with the offending feature name if the design
/// matrix is rank-deficient (for example, every submission has the same
/// bug flag and test ratio pattern up to scale).
pub fn train(records: &[SubmissionRecord], signals: &[SimilaritySignal]) -> Result<GradeModel> {
    if records.len() != signals.len() {
        return Err(Error::MismatchedRecords {
            records: records.len(),
            signals: signals.len(),
        });
    }
    let missing: Vec<String> = records
        .iter()
        .filter(|r| r.teacher_grade.is_none())
        .map(|r| r.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingTeacherGrades { ids: missing });
    }
    if records.len() < 3 {
        return Err(Error::TooFewRecords {
            found: records.len(),
        });
    }

    let mut rows = Vec::with_capacity(records.len());
    let mut grades = Vec::with_capacity(records.len());
    for (record, signal) in records.iter().zip(signals) {
        record.check()?;
        if !signal.similarity.is_finite() || !(0.0..=1.0).contains(&signal.similarity) {
            return Err(Error::SimilarityOutOfRange {
                value: signal.similarity,
            });
        }
        rows.push([
            record.tests_ratio(),
            if record.bug_free { 1.0 } else { 0.0 },
            signal.similarity,
        ]);
        grades.push(record.teacher_grade.expect("checked above"));
    }

    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    for (row, &y) in rows.iter().zip(&grades) {
        for p in 0..3 {
            for q in 0..3 {
                xtx[p][q] += row[p] * row[q];
            }
            xty[p] += row[p] * y;
        }
    }
    let alpha = solve3(xtx, xty)?;

    let fitted: Vec<f64> = rows
        .iter()
        .map(|row| row[0] * alpha[0] + row[1] * alpha[1] + row[2] * alpha[2])
        .collect();
    let train_mae = fitted
        .iter()
        .zip(&grades)
        .map(|(f, y)| (f - y).abs())
        .sum::<f64>()
        / grades.len() as f64;
    Ok(GradeModel {
        alpha,
        trained_on: records.len(),
        train_mae,
        train_r: pearson(&fitted, &grades),
    })
}

/// Applies the model to one submission's signals.
pub fn predict(model: &GradeModel, tests_ratio: f64, bug_free: bool, similarity: f64) -> Prediction {
    let flag = if bug_free { 1.0 } else { 0.0 };
    let raw = model.alpha[0] * tests_ratio + model.alpha[1] * flag + model.alpha[2] * similarity;
    Prediction {
        raw,
        grade: raw.clamp(0.0, 10.0),
    }
}

/// Spreads similarity over the full unit range for a cohort whose values
/// all sit above `observed_min`: the minimum maps to 0, and 1 stays 1.
/// `observed_min` must lie in `[0, 1)`.
pub fn rescale_similarity(value: f64, observed_min: f64) -> Result<f64> {
    if !observed_min.is_finite() || !(0.0..1.0).contains(&observed_min) {
        return Err(Error::InvalidObservedMin {
            value: observed_min,
        });
    }
    Ok(((value - observed_min) / (1.0 - observed_min)).clamp(0.0, 1.0))
}

/// Qualitative label for a similarity value, for human-readable feedback.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeedbackBand {
    /// `[0, 0.5)`
    Dissimilar,
    /// `[0.5, 0.7)`
    RoughlySimilar,
    /// `[0.7, 0.9)`
    Similar,
    /// `[0.9, 1]`
    VerySimilar,
}

impl FeedbackBand {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackBand::Dissimilar => "dissimilar",
            FeedbackBand::RoughlySimilar => "roughly_similar",
            FeedbackBand::Similar => "similar",
            FeedbackBand::VerySimilar => "very_similar",
        }
    }
}

impl fmt::Display for FeedbackBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Buckets a similarity value; errors outside `[0, 1]`.
pub fn feedback_band(value: f64) -> Result<FeedbackBand> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(Error::SimilarityOutOfRange { value });
    }
    Ok(if value < 0.5 {
        FeedbackBand::Dissimilar
    } else if value < 0.7 {
        FeedbackBand::RoughlySimilar
    } else if value < 0.9 {
        FeedbackBand::Similar
    } else {
        FeedbackBand::VerySimilar
    })
}

/// On-disk form of a trained model, bundled with the engine settings the
/// similarity signals were computed under so grading reproduces them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub alpha: [f64; 3],
    pub trained_on: usize,
    pub train_mae: f64,
    pub train_r: f64,
    pub engine: EngineConfig,
}

impl ModelFile {
    pub fn new(model: &GradeModel, engine: &EngineConfig) -> Self {
        ModelFile {
            alpha: model.alpha,
            trained_on: model.trained_on,
            train_mae: model.train_mae,
            train_r: model.train_r,
            engine: *engine,
        }
    }

    pub fn model(&self) -> GradeModel {
        GradeModel {
            alpha: self.alpha,
            trained_on: self.trained_on,
            train_mae: self.train_mae,
            train_r: self.train_r,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("model serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if let Err(e) = file.engine.validate() {
            return Err(bad(e.to_string()));
        }
        if file.alpha.iter().any(|a| !a.is_finite()) {
            return Err(bad("coefficients must be finite".to_string()));
        }
        Ok(file)
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    const PIVOT_MIN: f64 = 1e-10;

    for k in 0..3 {
        let pivot_row = (k..3)
            .max_by(|&r, &s| a[r][k].abs().total_cmp(&a[s][k].abs()))
            .expect("non-empty range");
        let pivot = a[pivot_row][k].abs();
        if pivot < PIVOT_MIN {
            return Err(Error::RankDeficient {
                column: FEATURE_NAMES[k],
                pivot,
            });
        }
        a.swap(k, pivot_row);
        b.swap(k, pivot_row);
        for r in k + 1..3 {
            let f = a[r][k] / a[k][k];
            if f != 0.0 {
                for c in k..3 {
                    a[r][c] -= f * a[k][c];
                }
                b[r] -= f * b[k];
            }
        }
    }

    let mut x = [0.0f64; 3];
    for k in (0..3).rev() {
        let tail: f64 = (k + 1..3).map(|c| a[k][c] * x[c]).sum();
        x[k] = (b[k] - tail) / a[k][k];
    }
    Ok(x)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}
