//! Slow reference implementations used to cross-check the library. Every
//! function here favors the most literal formulation over speed and shares
//! no code with the implementations under test.

use cfggrader::ir::{Cfg, Instruction};
use cfggrader::neighbor::{EngineConfig, SimilarityMode};

fn substitution(a: &Instruction, b: &Instruction) -> usize {
    if a.opcode != b.opcode {
        1
    } else if a.opcode == "call" && a.callee != b.callee {
        1
    } else {
        0
    }
}

/// Edit distance by exhaustive recursion over all alignments.
pub fn edit_distance_exhaustive(a: &[Instruction], b: &[Instruction]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, None) => 0,
        (Some(_), None) => a.len(),
        (None, Some(_)) => b.len(),
        (Some((x, rest_a)), Some((y, rest_b))) => {
            let substitute = substitution(x, y) + edit_distance_exhaustive(rest_a, rest_b);
            let delete = 1 + edit_distance_exhaustive(rest_a, b);
            let insert = 1 + edit_distance_exhaustive(a, rest_b);
            substitute.min(delete).min(insert)
        }
    }
}

pub fn content_similarity_exhaustive(a: &[Instruction], b: &[Instruction]) -> f64 {
    let longer = a.len().max(b.len());
    if longer == 0 {
        1.0
    } else {
        1.0 - edit_distance_exhaustive(a, b) as f64 / longer as f64
    }
}

/// Maximum assignment weight by trying every injective pairing of the
/// smaller side into the larger one.
pub fn best_assignment_weight(rows: usize, cols: usize, weight: &dyn Fn(usize, usize) -> f64) -> f64 {
    if rows > cols {
        let flipped = |c: usize, r: usize| weight(r, c);
        return best_assignment_weight(cols, rows, &flipped);
    }

    fn go(row: usize, rows: usize, cols: usize, taken: &mut [bool], weight: &dyn Fn(usize, usize) -> f64) -> f64 {
        if row == rows {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        for c in 0..cols {
            if taken[c] {
                continue;
            }
            taken[c] = true;
            let total = weight(row, c) + go(row + 1, rows, cols, taken, weight);
            taken[c] = false;
            if total > best {
                best = total;
            }
        }
        best
    }

    if rows == 0 {
        return 0.0;
    }
    go(0, rows, cols, &mut vec![false; cols], weight)
}

fn predecessors(g: &Cfg, node: usize) -> Vec<usize> {
    g.edges().filter(|&(_, t)| t == node).map(|(s, _)| s).collect()
}

fn successors(g: &Cfg, node: usize) -> Vec<usize> {
    g.edges().filter(|&(s, _)| s == node).map(|(_, t)| t).collect()
}

fn neighbor_term(ni: &[usize], nj: &[usize], x: &[Vec<f64>]) -> f64 {
    let larger = ni.len().max(nj.len());
    if larger == 0 {
        return 1.0;
    }
    if ni.is_empty() || nj.is_empty() {
        return 0.0;
    }
    let weight = |r: usize, c: usize| x[ni[r]][nj[c]];
    best_assignment_weight(ni.len(), nj.len(), &weight) / larger as f64
}

/// Outcome of [`similarity_reference`].
pub struct ReferenceResult {
    pub x: Vec<Vec<f64>>,
    pub similarity: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Literal restatement of the iteration: dense nested vectors, exhaustive
/// matchings, simultaneous updates from a copied snapshot.
pub fn similarity_reference(a: &Cfg, b: &Cfg, cfg: &EngineConfig) -> ReferenceResult {
    let na = a.node_count();
    let nb = b.node_count();
    if na == 0 || nb == 0 {
        return ReferenceResult {
            x: Vec::new(),
            similarity: if na == nb { 1.0 } else { 0.0 },
            iterations: 0,
            converged: true,
        };
    }

    let mut y = vec![vec![0.0; nb]; na];
    for i in 0..na {
        for j in 0..nb {
            y[i][j] = content_similarity_exhaustive(&a.node(i).body, &b.node(j).body);
        }
    }

    let mut x = match cfg.mode {
        SimilarityMode::Topological => vec![vec![1.0; nb]; na],
        SimilarityMode::Content => y.clone(),
    };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        iterations += 1;
        let snapshot = x.clone();
        let mut max_delta = 0.0f64;
        for i in 0..na {
            for j in 0..nb {
                let s_in = neighbor_term(&predecessors(a, i), &predecessors(b, j), &snapshot);
                let s_out = neighbor_term(&successors(a, i), &successors(b, j), &snapshot);
                let averaged = (s_in + s_out) / 2.0;
                let value = match cfg.mode {
                    SimilarityMode::Topological => averaged,
                    SimilarityMode::Content => (y[i][j] * averaged).sqrt(),
                };
                max_delta = max_delta.max((value - snapshot[i][j]).abs());
                x[i][j] = value;
            }
        }
        if max_delta < cfg.epsilon {
            converged = true;
            break;
        }
    }

    let weight = |r: usize, c: usize| x[r][c];
    let similarity = best_assignment_weight(na, nb, &weight) / na.min(nb) as f64;
    ReferenceResult {
        x,
        similarity,
        iterations,
        converged,
    }
}
