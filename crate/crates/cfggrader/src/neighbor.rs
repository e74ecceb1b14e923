//! Iterative neighbor-matching similarity between control flow graphs.
//!
//! Every node pair `(i, j)` carries a score in `[0, 1]` that is refined by
//! repeated sweeps: a pair is similar when its in-neighbors and out-neighbors
//! can be matched to each other with high total score. Each sweep reads a
//! frozen snapshot of the previous scores, so update order does not matter.
//! In content mode the structural score is blended with the similarity of
//! the instruction sequences inside the two blocks.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::assignment::{max_weight_with, solve_max_assignment, AssignmentBuffers, WeightMatrix};
use crate::content::content_similarity;
use crate::error::{Error, Result};
use crate::ir::{Cfg, Program};

/// What node-level evidence feeds the iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimilarityMode {
    /// Graph shape only; every pair starts at 1.
    #[serde(rename = "topo")]
    Topological,
    /// Shape blended with block-content similarity.
    #[serde(rename = "content")]
    Content,
}

impl fmt::Display for SimilarityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimilarityMode::Topological => f.write_str("topo"),
            SimilarityMode::Content => f.write_str("content"),
        }
    }
}

impl FromStr for SimilarityMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "topo" => Ok(SimilarityMode::Topological),
            "content" => Ok(SimilarityMode::Content),
            other => Err(format!("unknown mode '{other}' (expected 'topo' or 'content')")),
        }
    }
}

/// Tuning for the iteration. Library entry points accept any values and run
/// to completion; call [`EngineConfig::validate`] at input boundaries to
/// reject settings that cannot terminate meaningfully.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    /// Sweeps stop once no score moves by this much.
    pub epsilon: f64,
    /// Hard cap on sweeps; hitting it reports `converged = false`.
    pub max_iters: usize,
    pub mode: SimilarityMode,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            epsilon: 1e-4,
            max_iters: 100,
            mode: SimilarityMode::Content,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig {
                reason: format!("epsilon must be finite and positive, got {}", self.epsilon),
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig {
                reason: "max_iters must be at least 1".to_string(),
            });
        }
        Ok(())
    }
}

/// Final per-pair scores plus how the iteration went.
#[derive(Clone, Debug)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
    epsilon: f64,
}

impl SimilarityMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Score for node `i` of the first graph against node `j` of the second.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "node pair out of range");
        self.x[i * self.cols + j]
    }

    /// Row-major scores, `rows x cols`.
    pub fn values(&self) -> &[f64] {
        &self.x
    }

    /// Sweeps actually performed.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// False when the sweep cap stopped the iteration before the scores
    /// settled. Scores are still usable, just not at their fixed point.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Convergence threshold the iteration ran under.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// One matched node pair and its final score.
#[derive(Clone, Debug, PartialEq)]
pub struct NodePair {
    pub a: usize,
    pub b: usize,
    pub similarity: f64,
}

/// Best node pairing between two graphs, with leftovers from the larger side.
#[derive(Clone, Debug)]
pub struct MatchReport {
    /// Overall graph similarity in `[0, 1]`.
    pub similarity: f64,
    /// Chosen pairs, ordered by node index in the first graph. Ties in the
    /// pairing are broken toward lowest indices, so reruns are identical.
    pub pairs: Vec<NodePair>,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
    pub matrix: SimilarityMatrix,
}

struct Sweep<'g> {
    a: &'g Cfg,
    b: &'g Cfg,
    cols: usize,
    content: Option<Vec<f64>>,
    bufs: AssignmentBuffers,
    scratch: Vec<f64>,
}

impl<'g> Sweep<'g> {
    fn new(a: &'g Cfg, b: &'g Cfg, mode: SimilarityMode) -> Self {
        let cols = b.node_count();
        let content = match mode {
            SimilarityMode::Topological => None,
            SimilarityMode::Content => {
                let mut y = Vec::with_capacity(a.node_count() * cols);
                for i in 0..a.node_count() {
                    for j in 0..cols {
                        y.push(content_similarity(&a.node(i).body, &b.node(j).body));
                    }
                }
                Some(y)
            }
        };
        Sweep {
            a,
            b,
            cols,
            content,
            bufs: AssignmentBuffers::new(),
            scratch: Vec::new(),
        }
    }

    fn initial(&self) -> Vec<f64> {
        match &self.content {
            Some(y) => y.clone(),
            None => vec![1.0; self.a.node_count() * self.cols],
        }
    }

    /// Best matching weight between two neighbor lists, normalized by the
    /// larger list. An empty pair of lists scores 1; one empty side scores 0.
    fn neighbor_score(&mut self, ni: &[usize], nj: &[usize], x: &[f64]) -> f64 {
        let larger = ni.len().max(nj.len());
        if larger == 0 {
            return 1.0;
        }
        if ni.is_empty() || nj.is_empty() {
            return 0.0;
        }
        self.scratch.clear();
        for &p in ni {
            for &q in nj {
                self.scratch.push(x[p * self.cols + q]);
            }
        }
        max_weight_with(&mut self.bufs, ni.len(), nj.len(), &self.scratch) / larger as f64
    }

    /// One full pass over all pairs, reading `x` and writing `out`.
    /// Returns the largest score movement.
    fn run(&mut self, x: &[f64], out: &mut [f64]) -> f64 {
        let mut max_delta = 0.0f64;
        for i in 0..self.a.node_count() {
            for j in 0..self.cols {
                let s_in = self.neighbor_score(self.a.in_neighbors(i), self.b.in_neighbors(j), x);
                let s_out =
                    self.neighbor_score(self.a.out_neighbors(i), self.b.out_neighbors(j), x);
                let structural = 0.5 * (s_in + s_out);
                let idx = i * self.cols + j;
                let value = match &self.content {
                    Some(y) => (y[idx] * structural).sqrt(),
                    None => structural,
                };
                let value = value.clamp(0.0, 1.0);
                max_delta = max_delta.max((value - x[idx]).abs());
                out[idx] = value;
            }
        }
        max_delta
    }
}

/// Runs the iteration and returns the full score matrix.
pub fn iterate_similarity(a: &Cfg, b: &Cfg, cfg: &EngineConfig) -> SimilarityMatrix {
    let rows = a.node_count();
    let cols = b.node_count();
    if rows == 0 || cols == 0 {
        return SimilarityMatrix {
            rows,
            cols,
            x: Vec::new(),
            iterations: 0,
            converged: true,
            epsilon: cfg.epsilon,
        };
    }

    let mut sweep = Sweep::new(a, b, cfg.mode);
    let mut cur = sweep.initial();
    let mut next = vec![0.0; cur.len()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        iterations += 1;
        let max_delta = sweep.run(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        if max_delta < cfg.epsilon {
            converged = true;
            break;
        }
    }

    SimilarityMatrix {
        rows,
        cols,
        x: cur,
        iterations,
        converged,
        epsilon: cfg.epsilon,
    }
}

fn overall(matrix: &SimilarityMatrix) -> (f64, Vec<(usize, usize)>) {
    let smaller = matrix.rows.min(matrix.cols);
    if smaller == 0 {
        let score = if matrix.rows == matrix.cols { 1.0 } else { 0.0 };
        return (score, Vec::new());
    }
    let w = WeightMatrix::new(matrix.rows, matrix.cols, matrix.x.clone())
        .expect("score matrix has a consistent shape");
    let matching = solve_max_assignment(&w).expect("scores are finite and non-negative");
    (matching.weight / smaller as f64, matching.pairs)
}

/// Compares two graphs and reports the full pairing.
pub fn match_nodes(a: &Cfg, b: &Cfg, cfg: &EngineConfig) -> MatchReport {
    let matrix = iterate_similarity(a, b, cfg);
    let (similarity, raw_pairs) = overall(&matrix);
    let mut in_a = vec![false; matrix.rows];
    let mut in_b = vec![false; matrix.cols];
    let pairs: Vec<NodePair> = raw_pairs
        .into_iter()
        .map(|(i, j)| {
            in_a[i] = true;
            in_b[j] = true;
            NodePair {
                a: i,
                b: j,
                similarity: matrix.get(i, j),
            }
        })
        .collect();
    let unmatched_a = (0..matrix.rows).filter(|&i| !in_a[i]).collect();
    let unmatched_b = (0..matrix.cols).filter(|&j| !in_b[j]).collect();
    MatchReport {
        similarity,
        pairs,
        unmatched_a,
        unmatched_b,
        matrix,
    }
}

/// Similarity of two graphs in `[0, 1]`: the best node pairing's total
/// score, normalized by the smaller node count. Two empty graphs score 1,
/// an empty graph against a non-empty one scores 0.
pub fn graph_similarity(a: &Cfg, b: &Cfg, cfg: &EngineConfig) -> f64 {
    let matrix = iterate_similarity(a, b, cfg);
    overall(&matrix).0
}

/// Similarity of two whole programs, taken over their unified graphs.
pub fn program_similarity(a: &Program, b: &Program, cfg: &EngineConfig) -> f64 {
    graph_similarity(a.unified(), b.unified(), cfg)
}

/// Pairing report for two whole programs, taken over their unified graphs.
pub fn match_programs(a: &Program, b: &Program, cfg: &EngineConfig) -> MatchReport {
    match_nodes(a.unified(), b.unified(), cfg)
}

/// Similarity of `target` against every program in `corpus`, in corpus
/// order. Comparisons run in parallel when a thread pool is available.
pub fn rank_nearest(target: &Program, corpus: &[Program], cfg: &EngineConfig) -> Vec<f64> {
    use rayon::prelude::*;

    corpus
        .par_iter()
        .map(|p| program_similarity(target, p, cfg))
        .collect()
}
