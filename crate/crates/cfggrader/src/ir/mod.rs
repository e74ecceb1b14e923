//! The mini-IR: a small single-static-assignment-flavoured instruction
//! language, its control flow graphs, and the unified whole-program graph
//! the similarity engine works on.
//!
//! A program is a list of functions, each a list of labelled basic blocks.
//! Every block ends in exactly one terminator (`ret`, `br`, `cbr`), and the
//! block-level branch structure is what defines the control flow graph.

mod parse;
mod print;

use std::collections::BTreeSet;

use indexmap::IndexMap;

pub use parse::{parse_program, ParseError};
pub use print::emit;

use crate::error::{Error, Result};

/// Opcodes accepted by the parser, `call` included.
pub const OPCODES: [&str; 14] = [
    "add", "sub", "mul", "div", "rem", "icmp", "load", "store", "alloca", "getelem", "phi",
    "zext", "trunc", "call",
];

/// Terminator opcodes. Exactly one of these ends every parsed block.
pub const TERMINATORS: [&str; 3] = ["ret", "br", "cbr"];

/// Opcode of the synthetic root node in unified graphs. Reserved: the parser
/// never produces it, so a root node can never collide with source content.
pub const ROOT_OPCODE: &str = "@root";

/// One instruction. Operands are kept as raw tokens for display only; all
/// similarity comparisons look at `opcode` and, for calls, `callee`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub opcode: String,
    /// Present exactly when `opcode` is `call`.
    pub callee: Option<String>,
    pub operands: Vec<String>,
    /// Result register, without the leading `%`.
    pub result: Option<String>,
}

impl Instruction {
    pub fn plain(opcode: &str) -> Self {
        Instruction {
            opcode: opcode.to_string(),
            callee: None,
            operands: Vec::new(),
            result: None,
        }
    }

    pub fn call(callee: &str) -> Self {
        Instruction {
            opcode: "call".to_string(),
            callee: Some(callee.to_string()),
            operands: Vec::new(),
            result: None,
        }
    }

    pub fn is_terminator(&self) -> bool {
        TERMINATORS.contains(&self.opcode.as_str())
    }
}

/// A labelled basic block: straight-line body ending in a terminator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub label: String,
    pub body: Vec<Instruction>,
}

impl BasicBlock {
    pub fn new(label: &str, body: Vec<Instruction>) -> Self {
        BasicBlock {
            label: label.to_string(),
            body,
        }
    }
}

/// A directed graph of basic blocks.
///
/// Function graphs obey the terminator discipline (out-degree matches the
/// block's terminator). The type itself is more permissive: the similarity
/// engine is total over arbitrary digraphs, self-loops and synthetic root
/// nodes included, so construction only checks index validity.
#[derive(Debug, Clone, PartialEq)]
pub struct Cfg {
    nodes: Vec<BasicBlock>,
    edges: BTreeSet<(usize, usize)>,
    entry: usize,
    succs: Vec<Vec<usize>>,
    preds: Vec<Vec<usize>>,
}

impl Cfg {
    /// Builds a graph from blocks and directed edges. Duplicate edges
    /// collapse; endpoints must be in range and `entry` must name a node
    /// (or be 0 for an empty graph).
    pub fn new(
        nodes: Vec<BasicBlock>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        entry: usize,
    ) -> Result<Self> {
        let n = nodes.len();
        if entry != 0 && entry >= n {
            return Err(Error::InvalidGraph {
                reason: format!("entry {entry} out of range for {n} nodes"),
            });
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph {
                    reason: format!("edge ({a}, {b}) out of range for {n} nodes"),
                });
            }
            set.insert((a, b));
        }
        let mut succs = vec![Vec::new(); n];
        let mut preds = vec![Vec::new(); n];
        for &(a, b) in &set {
            succs[a].push(b);
            preds[b].push(a);
        }
        Ok(Cfg {
            nodes,
            edges: set,
            entry,
            succs,
            preds,
        })
    }

    pub fn empty() -> Self {
        Cfg {
            nodes: Vec::new(),
            edges: BTreeSet::new(),
            entry: 0,
            succs: Vec::new(),
            preds: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &BasicBlock {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[BasicBlock] {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a, b))
    }

    pub fn entry(&self) -> usize {
        self.entry
    }

    /// Successors of node `i`, ascending. A self-loop lists `i` itself.
    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.succs[i]
    }

    /// Predecessors of node `i`, ascending.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    /// Checks the discipline parsed function bodies satisfy: every block is
    /// non-empty, only its last instruction is a terminator, and out-degree
    /// matches that terminator (`ret` 0, `br` 1, `cbr` 2 distinct targets).
    pub fn validate_block_structure(&self) -> Result<()> {
        for (i, block) in self.nodes.iter().enumerate() {
            let Some(last) = block.body.last() else {
                return Err(Error::InvalidGraph {
                    reason: format!("block '{}' has an empty body", block.label),
                });
            };
            if !last.is_terminator() {
                return Err(Error::InvalidGraph {
                    reason: format!("block '{}' does not end with a terminator", block.label),
                });
            }
            for instr in &block.body[..block.body.len() - 1] {
                if instr.is_terminator() {
                    return Err(Error::InvalidGraph {
                        reason: format!(
                            "block '{}' has terminator '{}' before its end",
                            block.label, instr.opcode
                        ),
                    });
                }
            }
            let want = match last.opcode.as_str() {
                "ret" => 0,
                "br" => 1,
                _ => 2,
            };
            let got = self.succs[i].len();
            if got != want {
                return Err(Error::InvalidGraph {
                    reason: format!(
                        "block '{}' ends with '{}' but has {got} outgoing edges",
                        block.label, last.opcode
                    ),
                });
            }
        }
        Ok(())
    }
}

/// A parsed program: named functions plus the precomputed unified graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    functions: IndexMap<String, Cfg>,
    unified: Cfg,
}

impl Program {
    /// Assembles a program from function graphs, in order. Each graph must
    /// pass [`Cfg::validate_block_structure`] and names must be unique.
    pub fn from_functions(functions: Vec<(String, Cfg)>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidGraph {
                reason: "a program needs at least one function".to_string(),
            });
        }
        let mut map = IndexMap::new();
        for (name, cfg) in functions {
            if cfg.is_empty() {
                return Err(Error::InvalidGraph {
                    reason: format!("function '{name}' has no blocks"),
                });
            }
            cfg.validate_block_structure()?;
            if map.insert(name.clone(), cfg).is_some() {
                return Err(Error::InvalidGraph {
                    reason: format!("duplicate function '{name}'"),
                });
            }
        }
        Ok(Program::assemble(map))
    }

    pub(crate) fn assemble(functions: IndexMap<String, Cfg>) -> Self {
        let unified = build_unified(functions.iter().map(|(n, c)| (n.as_str(), c)));
        Program { functions, unified }
    }

    pub fn function_count(&self) -> usize {
        self.functions.len()
    }

    pub fn functions(&self) -> impl Iterator<Item = (&str, &Cfg)> {
        self.functions.iter().map(|(n, c)| (n.as_str(), c))
    }

    pub fn function(&self, name: &str) -> Option<&Cfg> {
        self.functions.get(name)
    }

    /// The whole-program graph: a synthetic root with one edge to every
    /// function entry, above the disjoint union of all function graphs.
    pub fn unified(&self) -> &Cfg {
        &self.unified
    }
}

/// Builds the unified graph for a sequence of named function graphs.
///
/// Node 0 is the root (a single sentinel [`ROOT_OPCODE`] instruction);
/// function nodes follow in function order with labels qualified as
/// `function.block`. Unreachable blocks are kept.
pub fn build_unified<'a>(functions: impl IntoIterator<Item = (&'a str, &'a Cfg)>) -> Cfg {
    let mut nodes = vec![BasicBlock::new(ROOT_OPCODE, vec![Instruction::plain(ROOT_OPCODE)])];
    let mut edges = Vec::new();
    for (name, cfg) in functions {
        let offset = nodes.len();
        edges.push((0, offset + cfg.entry()));
        for block in cfg.nodes() {
            nodes.push(BasicBlock {
                label: format!("{name}.{}", block.label),
                body: block.body.clone(),
            });
        }
        for (a, b) in cfg.edges() {
            edges.push((offset + a, offset + b));
        }
    }
    Cfg::new(nodes, edges, 0).expect("unified graph indices are valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(label: &str, term: &str) -> BasicBlock {
        BasicBlock::new(label, vec![Instruction::plain(term)])
    }

    #[test]
    fn cfg_rejects_out_of_range_edges() {
        let err = Cfg::new(vec![block("a", "ret")], [(0, 1)], 0);
        assert!(err.is_err());
    }

    #[test]
    fn cfg_collapses_duplicate_edges() {
        let cfg = Cfg::new(
            vec![block("a", "br"), block("b", "ret")],
            [(0, 1), (0, 1)],
            0,
        )
        .unwrap();
        assert_eq!(cfg.edge_count(), 1);
    }

    #[test]
    fn neighbor_lists_are_sorted() {
        let cfg = Cfg::new(
            vec![block("a", "cbr"), block("b", "ret"), block("c", "ret")],
            [(0, 2), (0, 1)],
            0,
        )
        .unwrap();
        assert_eq!(cfg.out_neighbors(0), &[1, 2]);
        assert_eq!(cfg.in_neighbors(1), &[0]);
        assert_eq!(cfg.in_neighbors(0), &[] as &[usize]);
    }

    #[test]
    fn self_loop_appears_in_both_neighbor_lists() {
        let cfg = Cfg::new(vec![block("a", "br")], [(0, 0)], 0).unwrap();
        assert_eq!(cfg.out_neighbors(0), &[0]);
        assert_eq!(cfg.in_neighbors(0), &[0]);
    }

    #[test]
    fn block_structure_check_accepts_straight_line() {
        let mut body = vec![Instruction::plain("add"), Instruction::plain("ret")];
        body[0].result = Some("x".to_string());
        let cfg = Cfg::new(vec![BasicBlock::new("a", body)], [], 0).unwrap();
        assert!(cfg.validate_block_structure().is_ok());
    }

    #[test]
    fn block_structure_check_rejects_arity_mismatch() {
        let cfg = Cfg::new(vec![block("a", "br")], [], 0).unwrap();
        let err = cfg.validate_block_structure().unwrap_err();
        assert!(err.to_string().contains("0 outgoing edges"));
    }

    #[test]
    fn block_structure_check_rejects_mid_block_terminator() {
        let body = vec![Instruction::plain("ret"), Instruction::plain("ret")];
        let cfg = Cfg::new(vec![BasicBlock::new("a", body)], [], 0).unwrap();
        assert!(cfg.validate_block_structure().is_err());
    }

    #[test]
    fn unified_graph_of_two_functions() {
        // f: a -> b, a -> c, b -> c (3 nodes, 3 edges); g: single block.
        let f = Cfg::new(
            vec![block("a", "cbr"), block("b", "br"), block("c", "ret")],
            [(0, 1), (0, 2), (1, 2)],
            0,
        )
        .unwrap();
        let g = Cfg::new(vec![block("e", "ret")], [], 0).unwrap();
        let unified = build_unified([("f", &f), ("g", &g)]);

        assert_eq!(unified.node_count(), 5);
        assert_eq!(unified.edge_count(), 5);
        assert_eq!(unified.entry(), 0);
        assert_eq!(unified.out_neighbors(0), &[1, 4]);
        assert_eq!(unified.node(0).body[0].opcode, ROOT_OPCODE);
        assert_eq!(unified.node(1).label, "f.a");
        assert_eq!(unified.node(4).label, "g.e");
        assert!(unified.has_edge(1, 2) && unified.has_edge(1, 3) && unified.has_edge(2, 3));
    }

    #[test]
    fn program_rejects_duplicate_function_names() {
        let cfg = Cfg::new(vec![block("a", "ret")], [], 0).unwrap();
        let err = Program::from_functions(vec![
            ("f".to_string(), cfg.clone()),
            ("f".to_string(), cfg),
        ]);
        assert!(err.is_err());
    }

    #[test]
    fn program_unified_node_count_is_one_plus_sum() {
        let f = Cfg::new(vec![block("a", "br"), block("b", "ret")], [(0, 1)], 0).unwrap();
        let g = Cfg::new(vec![block("e", "ret")], [], 0).unwrap();
        let p = Program::from_functions(vec![("f".to_string(), f), ("g".to_string(), g)]).unwrap();
        assert_eq!(p.unified().node_count(), 1 + 2 + 1);
    }
}
