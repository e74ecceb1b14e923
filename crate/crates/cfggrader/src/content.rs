//! Instruction-sequence similarity.
//!
//! Two instructions substitute for free when their opcodes match, except that
//! calls compare by callee: `call f` vs `call g` costs 1 even though the
//! opcodes agree, and `call f` vs `call f` costs 0. Operands never matter.
//! Insertions and deletions cost 1 apiece.

use crate::ir::Instruction;

/// Unit insert/delete costs with opcode-and-callee substitution.
pub struct EditCosts;

impl EditCosts {
    pub const INSERT: usize = 1;
    pub const DELETE: usize = 1;

    pub fn substitute(a: &Instruction, b: &Instruction) -> usize {
        subst_cost(a, b)
    }
}

/// Substitution cost between two instructions: 0 or 1.
pub fn subst_cost(a: &Instruction, b: &Instruction) -> usize {
    let same = if a.opcode == "call" && b.opcode == "call" {
        a.callee == b.callee
    } else {
        a.opcode == b.opcode
    };
    usize::from(!same)
}

/// Edit distance between two instruction sequences under [`EditCosts`].
pub fn edit_distance(s1: &[Instruction], s2: &[Instruction]) -> usize {
    // Single-row dynamic program; all costs are unit so the distance is
    // bounded by max(|s1|, |s2|).
    let (short, long) = if s1.len() <= s2.len() { (s1, s2) } else { (s2, s1) };
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, a) in long.iter().enumerate() {
        let mut prev_diag = row[0];
        row[0] = i + 1;
        for (j, b) in short.iter().enumerate() {
            let sub = prev_diag + subst_cost(a, b);
            let del = row[j] + EditCosts::DELETE;
            let ins = row[j + 1] + EditCosts::INSERT;
            prev_diag = row[j + 1];
            row[j + 1] = sub.min(del).min(ins);
        }
    }
    row[short.len()]
}

/// Normalized sequence similarity in [0, 1]: `1 - d / max(|s1|, |s2|)`,
/// with two empty sequences defined as identical (similarity 1).
pub fn content_similarity(s1: &[Instruction], s2: &[Instruction]) -> f64 {
    let m = s1.len().max(s2.len());
    if m == 0 {
        return 1.0;
    }
    1.0 - edit_distance(s1, s2) as f64 / m as f64
}
