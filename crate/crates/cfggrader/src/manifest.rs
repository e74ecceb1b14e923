//! Cohort manifests: a JSON file naming the model solutions and student
//! submissions for one grading problem, plus loaders that parse every
//! referenced program.
//!
//! ```json
//! {
//!   "problem_id": "p1",
//!   "model_solutions": ["model_a.ir"],
//!   "submissions": [
//!     {
//!       "id": "s001",
//!       "ir_path": "s001.ir",
//!       "tests_passed": 7,
//!       "tests_total": 10,
//!       "bug_free": true,
//!       "teacher_grade": 8.5
//!     }
//!   ]
//! }
//! ```
//!
//! `teacher_grade` is optional; everything else is required. Relative paths
//! are resolved against the manifest's directory.

use serde::Deserialize;
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grading::{ModelSolution, SubmissionRecord};
use crate::ir::{parse_program, Program};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub problem_id: String,
    pub model_solutions: Vec<String>,
    pub submissions: Vec<SubmissionEntry>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmissionEntry {
    pub id: String,
    pub ir_path: String,
    pub tests_passed: u32,
    pub tests_total: u32,
    pub bug_free: bool,
    #[serde(default)]
    pub teacher_grade: Option<f64>,
}

/// A manifest with every referenced program parsed.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub problem_id: String,
    pub models: Vec<ModelSolution>,
    pub records: Vec<SubmissionRecord>,
}

impl Manifest {
    /// Reads and validates a manifest without opening the referenced files.
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if let Err(reason) = manifest.validate() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason,
            });
        }
        Ok(manifest)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.model_solutions.is_empty() {
            return Err("model_solutions must list at least one file".to_string());
        }
        let mut seen_models = BTreeSet::new();
        for p in &self.model_solutions {
            if !seen_models.insert(p.as_str()) {
                return Err(format!("duplicate model solution path '{p}'"));
            }
        }
        let mut seen_ids = BTreeSet::new();
        for entry in &self.submissions {
            if !seen_ids.insert(entry.id.as_str()) {
                return Err(format!("duplicate submission id '{}'", entry.id));
            }
            let at = |reason: String| format!("submission '{}': {reason}", entry.id);
            if entry.tests_total == 0 {
                return Err(at("tests_total must be at least 1".to_string()));
            }
            if entry.tests_passed > entry.tests_total {
                return Err(at(format!(
                    "tests_passed ({}) exceeds tests_total ({})",
                    entry.tests_passed, entry.tests_total
                )));
            }
            if let Some(grade) = entry.teacher_grade {
                if !grade.is_finite() || !(0.0..=10.0).contains(&grade) {
                    return Err(at(format!("teacher_grade {grade} is outside 0..10")));
                }
            }
        }
        Ok(())
    }
}

/// Reads and parses a single program file.
pub fn load_program_file(path: &Path) -> Result<Program> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_program(&text).map_err(|source| Error::ParseFile {
        path: path.to_path_buf(),
        source,
    })
}

fn resolve(base: &Path, listed: &str) -> PathBuf {
    let path = Path::new(listed);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Loads a manifest and every program it references. Model solutions keep
/// their listed path string as their id.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let manifest = Manifest::load(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut models = Vec::with_capacity(manifest.model_solutions.len());
    for listed in &manifest.model_solutions {
        models.push(ModelSolution {
            id: listed.clone(),
            program: load_program_file(&resolve(base, listed))?,
        });
    }

    let mut records = Vec::with_capacity(manifest.submissions.len());
    for entry in &manifest.submissions {
        records.push(SubmissionRecord {
            id: entry.id.clone(),
            program: load_program_file(&resolve(base, &entry.ir_path))?,
            tests_passed: entry.tests_passed,
            tests_total: entry.tests_total,
            bug_free: entry.bug_free,
            teacher_grade: entry.teacher_grade,
        });
    }

    Ok(Corpus {
        problem_id: manifest.problem_id,
        models,
        records,
    })
}
