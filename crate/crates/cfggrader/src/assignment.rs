//! Maximum-weight bipartite assignment.
//!
//! The solver is the Hungarian algorithm with dual potentials, run on a
//! square matrix obtained by complementing weights against the global
//! maximum and padding the short side with zero-weight dummies. Dummy pairs
//! are stripped from the output, so a rectangular instance always matches
//! exactly `min(rows, cols)` nodes.
//!
//! Ties are resolved deterministically: among all maximum-weight matchings
//! the solver returns the lexicographically smallest pair set ordered by
//! `(row, col)`. Optimal matchings are exactly the perfect matchings of the
//! dual-tight subgraph, so the tie-break greedily fixes the smallest
//! admissible column per row, checking feasibility with augmenting paths.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Dense row-major weight matrix. Entries must be finite and non-negative;
/// [`solve_max_assignment`] checks that before solving.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidGraph {
                reason: format!(
                    "weight matrix {rows}x{cols} needs {} entries, got {}",
                    rows * cols,
                    data.len()
                ),
            });
        }
        Ok(WeightMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidGraph {
                reason: "weight matrix rows have unequal lengths".to_string(),
            });
        }
        WeightMatrix::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn transposed(&self) -> WeightMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        WeightMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }
}

/// Result of an assignment: pairs sorted by `(row, col)` and their total
/// weight. `weight` is the sum of the matched entries, accumulated in
/// ascending value order so that transposed instances sum identically.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub weight: f64,
}

/// Scratch space reused across many small solves.
#[derive(Debug, Default)]
pub(crate) struct AssignmentBuffers {
    u: Vec<f64>,
    v: Vec<f64>,
    p: Vec<usize>,
    way: Vec<usize>,
    minv: Vec<f64>,
    used: Vec<bool>,
    picked: Vec<f64>,
}

impl AssignmentBuffers {
    pub(crate) fn new() -> Self {
        AssignmentBuffers::default()
    }

    fn reset(&mut self, dim: usize) {
        self.u.clear();
        self.u.resize(dim + 1, 0.0);
        self.v.clear();
        self.v.resize(dim + 1, 0.0);
        self.p.clear();
        self.p.resize(dim + 1, 0);
        self.way.clear();
        self.way.resize(dim + 1, 0);
        self.minv.resize(dim + 1, 0.0);
        self.used.resize(dim + 1, false);
    }
}

/// Sums values in ascending order. Keeps equal-value multisets summing to
/// bit-identical totals regardless of which matching produced them.
fn canonical_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

/// Minimum-cost perfect matching on the padded square problem, by shortest
/// augmenting paths over dual potentials. On return `buf.p[j]` holds the
/// 1-based row matched to 1-based column `j`, and `buf.u`/`buf.v` are
/// feasible potentials with matched edges tight.
fn hungarian(buf: &mut AssignmentBuffers, dim: usize, cost: impl Fn(usize, usize) -> f64) {
    buf.reset(dim);
    for i in 1..=dim {
        buf.p[0] = i;
        let mut j0 = 0;
        buf.minv[..=dim].fill(f64::INFINITY);
        buf.used[..=dim].fill(false);
        loop {
            buf.used[j0] = true;
            let i0 = buf.p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=dim {
                if !buf.used[j] {
                    let cur = cost(i0 - 1, j - 1) - buf.u[i0] - buf.v[j];
                    if cur < buf.minv[j] {
                        buf.minv[j] = cur;
                        buf.way[j] = j0;
                    }
                    if buf.minv[j] < delta {
                        delta = buf.minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=dim {
                if buf.used[j] {
                    buf.u[buf.p[j]] += delta;
                    buf.v[j] -= delta;
                } else {
                    buf.minv[j] -= delta;
                }
            }
            j0 = j1;
            if buf.p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = buf.way[j0];
            buf.p[j0] = buf.p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
}

/// Maximum matching weight only, skipping pair extraction and tie-breaking.
/// The total is tie-invariant, so this is safe for similarity scores.
/// `data` is row-major `rows x cols` and must already be valid.
pub(crate) fn max_weight_with(
    buf: &mut AssignmentBuffers,
    rows: usize,
    cols: usize,
    data: &[f64],
) -> f64 {
    debug_assert_eq!(data.len(), rows * cols);
    debug_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    if rows == 1 || cols == 1 {
        return data.iter().copied().fold(0.0, f64::max);
    }
    if rows == 2 && cols == 2 {
        let a = canonical_sum(&mut [data[0], data[3]]);
        let b = canonical_sum(&mut [data[1], data[2]]);
        return a.max(b);
    }

    let dim = rows.max(cols);
    let cmax = data.iter().copied().fold(0.0, f64::max);
    hungarian(buf, dim, |r, c| {
        if r < rows && c < cols {
            cmax - data[r * cols + c]
        } else {
            cmax
        }
    });
    buf.picked.clear();
    for j in 1..=dim {
        let (r, c) = (buf.p[j] - 1, j - 1);
        if r < rows && c < cols {
            buf.picked.push(data[r * cols + c]);
        }
    }
    canonical_sum(&mut buf.picked)
}

/// Alternating-path search over tight edges, used by the tie-break pass.
/// Tries to rematch `row`; `banned` is the column tentatively claimed.
fn kuhn(
    row: usize,
    adj: &[Vec<usize>],
    row_match: &mut [usize],
    col_match: &mut [usize],
    fixed_col: &[bool],
    banned: usize,
    visited: &mut [bool],
) -> bool {
    for &c in &adj[row] {
        if c == banned || fixed_col[c] || visited[c] {
            continue;
        }
        visited[c] = true;
        let occupant = col_match[c];
        if occupant == NONE
            || kuhn(occupant, adj, row_match, col_match, fixed_col, banned, visited)
        {
            row_match[row] = c;
            col_match[c] = row;
            return true;
        }
    }
    false
}

/// Solves the maximum-weight assignment for `w`.
///
/// Returns the lexicographically smallest optimal matching (pairs ordered by
/// `(row, col)`). Errors if any weight is negative, NaN, or infinite.
pub fn solve_max_assignment(w: &WeightMatrix) -> Result<Matching> {
    for (i, &value) in w.data.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidWeight {
                row: i / w.cols.max(1),
                col: i % w.cols.max(1),
                value,
            });
        }
    }
    let (rows, cols) = (w.rows, w.cols);
    if rows == 0 || cols == 0 {
        return Ok(Matching {
            pairs: Vec::new(),
            weight: 0.0,
        });
    }

    let dim = rows.max(cols);
    let cmax = w.data.iter().copied().fold(0.0, f64::max);
    let cost = |r: usize, c: usize| {
        if r < rows && c < cols {
            cmax - w.data[r * cols + c]
        } else {
            cmax
        }
    };
    let mut buf = AssignmentBuffers::new();
    hungarian(&mut buf, dim, cost);

    // Optimal matchings are the perfect matchings of the tight subgraph
    // (reduced cost ~ 0). The tolerance is tiny relative to the weight
    // scale so near-ties cannot drag the total measurably below optimum.
    let tol = 1e-12 * (1.0 + cmax);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); dim];
    for (r, row_adj) in adj.iter_mut().enumerate() {
        for c in 0..dim {
            if cost(r, c) - buf.u[r + 1] - buf.v[c + 1] <= tol {
                row_adj.push(c);
            }
        }
    }

    let mut row_match = vec![NONE; dim];
    let mut col_match = vec![NONE; dim];
    for j in 1..=dim {
        row_match[buf.p[j] - 1] = j - 1;
        col_match[j - 1] = buf.p[j];
    }
    for v in col_match.iter_mut() {
        *v -= 1;
    }

    let mut fixed_col = vec![false; dim];
    let mut visited = vec![false; dim];
    for r in 0..dim {
        let adj_r: Vec<usize> = adj[r].iter().copied().filter(|&c| !fixed_col[c]).collect();
        for &c in &adj_r {
            if row_match[r] == c {
                break;
            }
            // Tentatively give column c to row r, then try to rematch the
            // displaced row through the remaining tight edges.
            let c0 = row_match[r];
            let r2 = col_match[c];
            row_match[r] = c;
            col_match[c] = r;
            row_match[r2] = NONE;
            col_match[c0] = NONE;
            visited.fill(false);
            if kuhn(r2, &adj, &mut row_match, &mut col_match, &fixed_col, c, &mut visited) {
                break;
            }
            row_match[r2] = c;
            col_match[c] = r2;
            row_match[r] = c0;
            col_match[c0] = r;
        }
        fixed_col[row_match[r]] = true;
    }

    let mut pairs = Vec::with_capacity(rows.min(cols));
    let mut picked = Vec::with_capacity(rows.min(cols));
    for (r, &c) in row_match.iter().enumerate().take(rows) {
        if c < cols {
            pairs.push((r, c));
            picked.push(w.data[r * cols + c]);
        }
    }
    debug_assert_eq!(pairs.len(), rows.min(cols));
    Ok(Matching {
        pairs,
        weight: canonical_sum(&mut picked),
    })
}
