//! Deterministic generators for synthetic programs: random control flow,
//! family bases with biased opcode pools, and structure-preserving
//! mutations (block split/merge, opcode swaps, instruction transposition,
//! function extraction).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cfggrader::ir::{parse_program, BasicBlock, Cfg, Instruction, Program};

pub const POOL: [&str; 8] = [
    "add", "sub", "mul", "icmp", "load", "store", "getelem", "zext",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone)]
pub struct SrcInstr {
    pub result: Option<String>,
    pub opcode: String,
    pub args: Vec<String>,
}

impl SrcInstr {
    fn text(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        if let Some(r) = &self.result {
            parts.push(r.clone());
            parts.push("=".to_string());
        }
        parts.push(self.opcode.clone());
        parts.extend(self.args.iter().cloned());
        parts.join(" ")
    }
}

#[derive(Clone, PartialEq)]
pub enum SrcTerm {
    Ret(Option<String>),
    Br(String),
    Cbr(String, String, String),
}

impl SrcTerm {
    fn text(&self) -> String {
        match self {
            SrcTerm::Ret(None) => "ret".to_string(),
            SrcTerm::Ret(Some(v)) => format!("ret {v}"),
            SrcTerm::Br(t) => format!("br {t}"),
            SrcTerm::Cbr(c, t1, t2) => format!("cbr {c} {t1} {t2}"),
        }
    }

    fn targets(&self) -> Vec<&str> {
        match self {
            SrcTerm::Ret(_) => Vec::new(),
            SrcTerm::Br(t) => vec![t],
            SrcTerm::Cbr(_, t1, t2) => vec![t1, t2],
        }
    }

    fn retarget(&mut self, from: &str, to: &str) {
        match self {
            SrcTerm::Ret(_) => {}
            SrcTerm::Br(t) => {
                if t == from {
                    *t = to.to_string();
                }
            }
            SrcTerm::Cbr(_, t1, t2) => {
                if t1 == from {
                    *t1 = to.to_string();
                }
                if t2 == from {
                    *t2 = to.to_string();
                }
            }
        }
    }
}

#[derive(Clone)]
pub struct SrcBlock {
    pub label: String,
    pub body: Vec<SrcInstr>,
    pub term: SrcTerm,
}

#[derive(Clone)]
pub struct SrcFunc {
    pub name: String,
    pub blocks: Vec<SrcBlock>,
}

#[derive(Clone)]
pub struct SrcProgram {
    pub funcs: Vec<SrcFunc>,
}

impl SrcProgram {
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (fi, func) in self.funcs.iter().enumerate() {
            if fi > 0 {
                out.push('\n');
            }
            out.push_str(&format!("func {} {{\n", func.name));
            for block in &func.blocks {
                out.push_str(&format!("{}:\n", block.label));
                for instr in &block.body {
                    out.push_str(&format!("  {}\n", instr.text()));
                }
                out.push_str(&format!("  {}\n", block.term.text()));
            }
            out.push_str("}\n");
        }
        out
    }

    pub fn parse(&self) -> Program {
        parse_program(&self.text()).expect("generated program parses")
    }
}

fn random_instr(r: &mut ChaCha8Rng, pool: &[&str], slot: usize) -> SrcInstr {
    let opcode = pool[r.random_range(0..pool.len())].to_string();
    let args = (0..r.random_range(1..=2))
        .map(|_| format!("%v{}", r.random_range(0..6)))
        .collect();
    SrcInstr {
        result: Some(format!("%t{slot}")),
        opcode,
        args,
    }
}

pub fn random_function(r: &mut ChaCha8Rng, name: &str, n_blocks: usize, pool: &[&str]) -> SrcFunc {
    let labels: Vec<String> = (0..n_blocks).map(|i| format!("b{i}")).collect();
    let mut blocks = Vec::new();
    for i in 0..n_blocks {
        let body = (0..r.random_range(1..=4))
            .map(|slot| random_instr(r, pool, slot))
            .collect();
        let term = if i + 1 == n_blocks || n_blocks == 1 {
            SrcTerm::Ret(Some("%t0".to_string()))
        } else {
            match r.random_range(0..10u32) {
                0 => SrcTerm::Ret(None),
                1..=5 => SrcTerm::Br(labels[r.random_range(0..n_blocks)].clone()),
                _ => {
                    let t1 = r.random_range(0..n_blocks);
                    let mut t2 = r.random_range(0..n_blocks);
                    while t2 == t1 {
                        t2 = r.random_range(0..n_blocks);
                    }
                    SrcTerm::Cbr(
                        "%t0".to_string(),
                        labels[t1].clone(),
                        labels[t2].clone(),
                    )
                }
            }
        };
        blocks.push(SrcBlock {
            label: labels[i].clone(),
            body,
            term,
        });
    }
    SrcFunc {
        name: name.to_string(),
        blocks,
    }
}

/// Base program for one synthetic problem family. Families get different
/// control flow (seeded) and lean on different opcode subsets, the way
/// distinct assignments exercise distinct operations.
pub fn family_base(family: usize) -> SrcProgram {
    let mut r = rng(0x00FA_0000 + family as u64);
    let pool: Vec<&str> = [0, 1, 3, 5]
        .iter()
        .map(|&k| POOL[(family + k) % POOL.len()])
        .collect();
    let main = random_function(&mut r, "main", 8, &pool);
    let helper = random_function(&mut r, "helper", 5, &pool);
    SrcProgram {
        funcs: vec![main, helper],
    }
}

fn instr_sites(p: &SrcProgram, min_body: usize) -> Vec<(usize, usize)> {
    let mut sites = Vec::new();
    for (fi, f) in p.funcs.iter().enumerate() {
        for (bi, b) in f.blocks.iter().enumerate() {
            if b.body.len() >= min_body {
                sites.push((fi, bi));
            }
        }
    }
    sites
}

fn swap_opcode(r: &mut ChaCha8Rng, p: &mut SrcProgram) {
    let mut sites = Vec::new();
    for (fi, f) in p.funcs.iter().enumerate() {
        for (bi, b) in f.blocks.iter().enumerate() {
            for (k, instr) in b.body.iter().enumerate() {
                if instr.opcode != "call" {
                    sites.push((fi, bi, k));
                }
            }
        }
    }
    if sites.is_empty() {
        return;
    }
    let (fi, bi, k) = sites[r.random_range(0..sites.len())];
    let current = p.funcs[fi].blocks[bi].body[k].opcode.clone();
    let mut replacement = POOL[r.random_range(0..POOL.len())];
    while replacement == current {
        replacement = POOL[r.random_range(0..POOL.len())];
    }
    p.funcs[fi].blocks[bi].body[k].opcode = replacement.to_string();
}

fn transpose_instrs(r: &mut ChaCha8Rng, p: &mut SrcProgram) {
    let sites = instr_sites(p, 2);
    if sites.is_empty() {
        swap_opcode(r, p);
        return;
    }
    let (fi, bi) = sites[r.random_range(0..sites.len())];
    let body = &mut p.funcs[fi].blocks[bi].body;
    let k = r.random_range(0..body.len() - 1);
    body.swap(k, k + 1);
}

fn split_block(r: &mut ChaCha8Rng, p: &mut SrcProgram) {
    let sites = instr_sites(p, 2);
    if sites.is_empty() {
        swap_opcode(r, p);
        return;
    }
    let (fi, bi) = sites[r.random_range(0..sites.len())];
    let func = &mut p.funcs[fi];
    let at = r.random_range(1..func.blocks[bi].body.len());
    let mut fresh = format!("{}s{}", func.blocks[bi].label, func.blocks.len());
    while func.blocks.iter().any(|b| b.label == fresh) {
        fresh.push('x');
    }
    let tail = func.blocks[bi].body.split_off(at);
    let tail_term = std::mem::replace(&mut func.blocks[bi].term, SrcTerm::Br(fresh.clone()));
    func.blocks.insert(
        bi + 1,
        SrcBlock {
            label: fresh,
            body: tail,
            term: tail_term,
        },
    );
}

fn merge_chain(r: &mut ChaCha8Rng, p: &mut SrcProgram) {
    let mut sites = Vec::new();
    for (fi, f) in p.funcs.iter().enumerate() {
        for (bi, b) in f.blocks.iter().enumerate() {
            let SrcTerm::Br(target) = &b.term else {
                continue;
            };
            if *target == b.label {
                continue;
            }
            let Some(ti) = f.blocks.iter().position(|c| c.label == *target) else {
                continue;
            };
            if ti == 0 {
                continue;
            }
            let refs: usize = f
                .blocks
                .iter()
                .map(|c| c.term.targets().iter().filter(|t| **t == *target).count())
                .sum();
            if refs == 1 {
                sites.push((fi, bi, ti));
            }
        }
    }
    if sites.is_empty() {
        split_block(r, p);
        return;
    }
    let (fi, bi, ti) = sites[r.random_range(0..sites.len())];
    let func = &mut p.funcs[fi];
    let absorbed = func.blocks.remove(ti);
    let bi = if ti < bi { bi - 1 } else { bi };
    func.blocks[bi].body.extend(absorbed.body);
    func.blocks[bi].term = absorbed.term;
}

fn extract_function(r: &mut ChaCha8Rng, p: &mut SrcProgram) {
    let sites = instr_sites(p, 2);
    if sites.is_empty() {
        swap_opcode(r, p);
        return;
    }
    let (fi, bi) = sites[r.random_range(0..sites.len())];
    let name = format!("x{}", p.funcs.len());
    let moved = std::mem::replace(
        &mut p.funcs[fi].blocks[bi].body,
        vec![SrcInstr {
            result: None,
            opcode: "call".to_string(),
            args: vec![name.clone()],
        }],
    );
    p.funcs.push(SrcFunc {
        name,
        blocks: vec![SrcBlock {
            label: "e".to_string(),
            body: moved,
            term: SrcTerm::Ret(None),
        }],
    });
}

/// Applies `ops` random mutations, never invalidating the program.
pub fn mutate(r: &mut ChaCha8Rng, base: &SrcProgram, ops: usize) -> SrcProgram {
    let mut p = base.clone();
    for _ in 0..ops {
        match r.random_range(0..5u32) {
            0 => split_block(r, &mut p),
            1 => merge_chain(r, &mut p),
            2 => swap_opcode(r, &mut p),
            3 => transpose_instrs(r, &mut p),
            _ => extract_function(r, &mut p),
        }
    }
    p
}

/// Renames every block label (entry keeps its position) without touching
/// structure or instruction content.
pub fn relabel(p: &SrcProgram) -> SrcProgram {
    let mut out = p.clone();
    for func in &mut out.funcs {
        let renames: Vec<(String, String)> = func
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| (b.label.clone(), format!("renamed{i}")))
            .collect();
        for (i, block) in func.blocks.iter_mut().enumerate() {
            block.label = renames[i].1.clone();
            for (from, to) in &renames {
                block.term.retarget(from, to);
            }
        }
    }
    out
}

/// Small arbitrary digraph with random block contents, for oracle
/// comparisons. Structure is unconstrained (any edge set, self-loops
/// included), which the engine accepts even though the parser would not.
pub fn small_digraph(r: &mut ChaCha8Rng, max_nodes: usize) -> Cfg {
    let n = r.random_range(1..=max_nodes);
    let mut blocks = Vec::new();
    for i in 0..n {
        let len = r.random_range(0..=3);
        let body = (0..len)
            .map(|_| {
                if r.random_bool(0.2) {
                    let callee = if r.random_bool(0.5) { "f" } else { "g" };
                    Instruction::call(callee)
                } else {
                    Instruction::plain(POOL[r.random_range(0..POOL.len())])
                }
            })
            .collect();
        blocks.push(BasicBlock::new(&format!("n{i}"), body));
    }
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if r.random_bool(0.35) {
                edges.push((s, t));
            }
        }
    }
    Cfg::new(blocks, edges, 0).expect("edges are in range")
}
