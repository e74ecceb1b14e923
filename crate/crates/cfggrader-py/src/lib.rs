//! Python bindings over the cfggrader library: program parsing, similarity,
//! node matching, assignment solving, and grade prediction.

use std::str::FromStr;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cfggrader::assignment::{solve_max_assignment, WeightMatrix};
use cfggrader::grading::{self, GradeModel, ModelSolution, SimilaritySignal, SubmissionRecord};
use cfggrader::ir::{emit, parse_program};
use cfggrader::neighbor::{match_programs, program_similarity, EngineConfig, SimilarityMode};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn engine(mode: &str, epsilon: f64, max_iters: usize) -> PyResult<EngineConfig> {
    let mode = SimilarityMode::from_str(mode).map_err(value_err)?;
    let cfg = EngineConfig {
        epsilon,
        max_iters,
        mode,
    };
    cfg.validate().map_err(value_err)?;
    Ok(cfg)
}

/// A parsed program: an ordered set of function CFGs plus the unified
/// whole-program graph.
#[pyclass(frozen, name = "Program")]
struct PyProgram {
    inner: cfggrader::ir::Program,
}

#[pymethods]
impl PyProgram {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = parse_program(text).map_err(value_err)?;
        Ok(PyProgram { inner })
    }

    fn function_count(&self) -> usize {
        self.inner.function_count()
    }

    fn function_names(&self) -> Vec<String> {
        self.inner
            .functions()
            .map(|(name, _)| name.to_string())
            .collect()
    }

    /// Node count of the unified graph (all blocks plus the synthetic root).
    fn unified_node_count(&self) -> usize {
        self.inner.unified().node_count()
    }

    fn unified_edge_count(&self) -> usize {
        self.inner.unified().edge_count()
    }

    /// The program printed back in canonical form.
    fn emit(&self) -> String {
        emit(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "<Program: {} function(s), {} unified nodes>",
            self.inner.function_count(),
            self.inner.unified().node_count()
        )
    }
}

/// Similarity of two programs in [0, 1].
#[pyfunction]
#[pyo3(signature = (a, b, mode = "content", epsilon = 1e-4, max_iters = 100))]
fn similarity(
    a: &PyProgram,
    b: &PyProgram,
    mode: &str,
    epsilon: f64,
    max_iters: usize,
) -> PyResult<f64> {
    let cfg = engine(mode, epsilon, max_iters)?;
    Ok(program_similarity(&a.inner, &b.inner, &cfg))
}

/// Full node-matching report as a dict: overall similarity, matched label
/// pairs with their scores, and the unmatched labels on each side.
#[pyfunction]
#[pyo3(signature = (a, b, mode = "content", epsilon = 1e-4, max_iters = 100))]
fn match_report(
    py: Python<'_>,
    a: &PyProgram,
    b: &PyProgram,
    mode: &str,
    epsilon: f64,
    max_iters: usize,
) -> PyResult<Py<PyDict>> {
    let cfg = engine(mode, epsilon, max_iters)?;
    let report = match_programs(&a.inner, &b.inner, &cfg);
    let ga = a.inner.unified();
    let gb = b.inner.unified();

    let dict = PyDict::new(py);
    dict.set_item("mode", cfg.mode.to_string())?;
    dict.set_item("iterations", report.matrix.iterations())?;
    dict.set_item("converged", report.matrix.converged())?;
    dict.set_item("similarity", report.similarity)?;
    let pairs: Vec<(String, String, f64)> = report
        .pairs
        .iter()
        .map(|p| (ga.node(p.a).label.clone(), gb.node(p.b).label.clone(), p.similarity))
        .collect();
    dict.set_item("pairs", pairs)?;
    let labels = |g: &cfggrader::ir::Cfg, indices: &[usize]| -> Vec<String> {
        indices.iter().map(|&i| g.node(i).label.clone()).collect()
    };
    dict.set_item("unmatched_a", labels(ga, &report.unmatched_a))?;
    dict.set_item("unmatched_b", labels(gb, &report.unmatched_b))?;
    Ok(dict.unbind())
}

/// Best similarity of `submission` against a list of model solutions.
/// Returns `(similarity, index_of_best_model)`; ties go to the first.
#[pyfunction]
#[pyo3(signature = (submission, models, mode = "content", epsilon = 1e-4, max_iters = 100))]
fn best_match(
    submission: &PyProgram,
    models: Vec<PyRef<'_, PyProgram>>,
    mode: &str,
    epsilon: f64,
    max_iters: usize,
) -> PyResult<(f64, usize)> {
    let cfg = engine(mode, epsilon, max_iters)?;
    let solutions: Vec<ModelSolution> = models
        .iter()
        .enumerate()
        .map(|(i, m)| ModelSolution {
            id: i.to_string(),
            program: m.inner.clone(),
        })
        .collect();
    let signal = grading::compute_similarity_signal(&submission.inner, &solutions, &cfg)
        .map_err(value_err)?;
    let index: usize = signal.best_model.parse().expect("index ids");
    Ok((signal.similarity, index))
}

/// Maximum-weight assignment over a rectangular weight matrix given as a
/// list of rows. Returns `(pairs, total_weight)`.
#[pyfunction]
fn solve_assignment(weights: Vec<Vec<f64>>) -> PyResult<(Vec<(usize, usize)>, f64)> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, |r| r.len());
    if weights.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("all rows must have the same length"));
    }
    let data: Vec<f64> = weights.into_iter().flatten().collect();
    let matrix = WeightMatrix::new(rows, cols, data).map_err(value_err)?;
    let matching = solve_max_assignment(&matrix).map_err(value_err)?;
    Ok((matching.pairs, matching.weight))
}

/// Fit grade coefficients from `(tests_passed, tests_total, bug_free,
/// similarity, teacher_grade)` rows. Returns a dict with `alpha`,
/// `trained_on`, `train_mae`, and `train_r`.
#[pyfunction]
fn train(py: Python<'_>, rows: Vec<(u32, u32, bool, f64, f64)>) -> PyResult<Py<PyDict>> {
    let blank = parse_program("func main { e: ret }").expect("fixed text parses");
    let mut records = Vec::with_capacity(rows.len());
    let mut signals = Vec::with_capacity(rows.len());
    for (i, &(passed, total, bug_free, sim, grade)) in rows.iter().enumerate() {
        records.push(SubmissionRecord {
            id: format!("r{i}"),
            program: blank.clone(),
            tests_passed: passed,
            tests_total: total,
            bug_free,
            teacher_grade: Some(grade),
        });
        signals.push(SimilaritySignal {
            similarity: sim,
            best_model: String::new(),
        });
    }
    let model = grading::train(&records, &signals).map_err(value_err)?;
    let dict = PyDict::new(py);
    dict.set_item("alpha", model.alpha.to_vec())?;
    dict.set_item("trained_on", model.trained_on)?;
    dict.set_item("train_mae", model.train_mae)?;
    dict.set_item("train_r", model.train_r)?;
    Ok(dict.unbind())
}

/// Predicted grade for one submission. Returns `(raw, clamped)` where the
/// clamped value lies in [0, 10].
#[pyfunction]
fn predict(
    alpha: [f64; 3],
    tests_ratio: f64,
    bug_free: bool,
    similarity: f64,
) -> (f64, f64) {
    let model = GradeModel {
        alpha,
        trained_on: 0,
        train_mae: 0.0,
        train_r: 0.0,
    };
    let p = grading::predict(&model, tests_ratio, bug_free, similarity);
    (p.raw, p.grade)
}

/// Feedback band name for a similarity value in [0, 1].
#[pyfunction]
fn feedback_band(value: f64) -> PyResult<&'static str> {
    grading::feedback_band(value)
        .map(|band| band.as_str())
        .map_err(value_err)
}

/// Spread similarities away from an observed floor: maps `observed_min` to 0
/// and 1 to 1, clamping into [0, 1].
#[pyfunction]
fn rescale_similarity(value: f64, observed_min: f64) -> PyResult<f64> {
    grading::rescale_similarity(value, observed_min).map_err(value_err)
}

#[pymodule]
fn cfggrader_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProgram>()?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(match_report, m)?)?;
    m.add_function(wrap_pyfunction!(best_match, m)?)?;
    m.add_function(wrap_pyfunction!(solve_assignment, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(feedback_band, m)?)?;
    m.add_function(wrap_pyfunction!(rescale_similarity, m)?)?;
    Ok(())
}
