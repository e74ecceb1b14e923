//! Canonical text form for programs. Emitting and reparsing a program yields
//! an identical [`Program`], and the output is stable across runs.

use std::fmt::Write;

use super::{Instruction, Program};

fn render(instr: &Instruction) -> String {
    let mut s = String::new();
    if let Some(r) = &instr.result {
        write!(s, "%{r} = ").unwrap();
    }
    s.push_str(&instr.opcode);
    if let Some(callee) = &instr.callee {
        s.push(' ');
        s.push_str(callee);
    }
    for op in &instr.operands {
        s.push(' ');
        s.push_str(op);
    }
    s
}

/// Emits a program in canonical mini-IR: one instruction per line, labels
/// flush left, a blank line between functions.
pub fn emit(program: &Program) -> String {
    let mut out = String::new();
    for (i, (name, cfg)) in program.functions().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        writeln!(out, "func {name} {{").unwrap();
        for block in cfg.nodes() {
            writeln!(out, "{}:", block.label).unwrap();
            for instr in &block.body {
                writeln!(out, "  {}", render(instr)).unwrap();
            }
        }
        out.push_str("}\n");
    }
    out
}
