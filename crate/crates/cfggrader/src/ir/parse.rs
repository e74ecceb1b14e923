//! Text-to-program parser for the mini-IR.
//!
//! Tokens are whitespace-separated; `#` starts a line comment. Newlines carry
//! no meaning beyond ending comments, so a whole function may sit on one line.
//! Block labels are `name:` tokens, registers are `%name` tokens.

use std::collections::HashMap;

use indexmap::IndexMap;
use thiserror::Error;

use super::{BasicBlock, Cfg, Instruction, Program, OPCODES};

/// Parse failure, with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, col {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}, col {col}: duplicate block label '{label}' in function '{function}'")]
    DuplicateLabel {
        function: String,
        label: String,
        line: usize,
        col: usize,
    },
    #[error("line {line}, col {col}: branch to undefined label '{label}' in function '{function}'")]
    UndefinedLabel {
        function: String,
        label: String,
        line: usize,
        col: usize,
    },
    #[error("line {line}, col {col}: duplicate function name '{name}'")]
    DuplicateFunction {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("line {line}, col {col}: function '{name}' has no blocks")]
    EmptyFunction {
        name: String,
        line: usize,
        col: usize,
    },
}

#[derive(Debug, Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn lex(source: &str) -> Vec<Tok<'_>> {
    let mut toks = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut rest = line;
        let mut offset = 0;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let after = &rest[start..];
            let end = after
                .find(|c: char| c.is_whitespace())
                .unwrap_or(after.len());
            toks.push(Tok {
                text: &after[..end],
                line: i + 1,
                col: offset + start + 1,
            });
            offset += start + end;
            rest = &after[end..];
        }
    }
    toks
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_register(s: &str) -> bool {
    s.strip_prefix('%').is_some_and(is_name)
}

/// `name:` tokens open a block.
fn label_name(s: &str) -> Option<&str> {
    s.strip_suffix(':').filter(|name| is_name(name))
}

fn is_opcode(s: &str) -> bool {
    OPCODES.contains(&s)
}

fn is_terminator_kw(s: &str) -> bool {
    s == "ret" || s == "br" || s == "cbr"
}

struct Parser<'a> {
    toks: Vec<Tok<'a>>,
    pos: usize,
    eof_line: usize,
    eof_col: usize,
}

impl<'a> Parser<'a> {
    fn new(source: &'a str) -> Self {
        let toks = lex(source);
        let (eof_line, eof_col) = match toks.last() {
            Some(t) => (t.line, t.col + t.text.len()),
            None => (1, 1),
        };
        Parser {
            toks,
            pos: 0,
            eof_line,
            eof_col,
        }
    }

    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos + 1).copied()
    }

    fn next(&mut self, expected: &str) -> Result<Tok<'a>, ParseError> {
        match self.peek() {
            Some(t) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(self.eof_error(expected)),
        }
    }

    fn eof_error(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            line: self.eof_line,
            col: self.eof_col,
            message: format!("unexpected end of input: expected {expected}"),
        }
    }

    fn syntax(tok: Tok<'_>, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: tok.line,
            col: tok.col,
            message: message.into(),
        }
    }

    /// True when the upcoming token cannot continue an operand list: it opens
    /// the next instruction, block, or function instead.
    fn at_construct_boundary(&self) -> bool {
        let Some(t) = self.peek() else { return true };
        if t.text == "{" || t.text == "}" || t.text == "func" || t.text == "=" {
            return true;
        }
        if label_name(t.text).is_some() || is_opcode(t.text) || is_terminator_kw(t.text) {
            return true;
        }
        // `%x =` starts a fresh assignment.
        is_register(t.text) && self.peek2().is_some_and(|t2| t2.text == "=")
    }

    fn take_operands(&mut self, instr: &mut Instruction) -> Result<(), ParseError> {
        while !self.at_construct_boundary() {
            let t = self.next("operand")?;
            instr.operands.push(t.text.to_string());
        }
        if let Some(t) = self.peek() {
            if t.text == "=" {
                return Err(Self::syntax(t, "unexpected '='"));
            }
        }
        Ok(())
    }

    fn expect_label_arg(&mut self, opcode: &str) -> Result<Tok<'a>, ParseError> {
        let t = self.next(&format!("a label after '{opcode}'"))?;
        if !is_name(t.text) {
            return Err(Self::syntax(
                t,
                format!("expected a label after '{opcode}', found '{}'", t.text),
            ));
        }
        Ok(t)
    }
}

/// One parsed instruction plus the labels its terminator branches to.
struct ParsedInstr<'a> {
    instr: Instruction,
    targets: Vec<Tok<'a>>,
}

fn parse_instr<'a>(p: &mut Parser<'a>) -> Result<ParsedInstr<'a>, ParseError> {
    let mut result = None;
    let mut tok = p.next("an instruction")?;
    if is_register(tok.text) && p.peek().is_some_and(|t| t.text == "=") {
        p.next("'='")?;
        result = Some(tok.text[1..].to_string());
        tok = p.next("an opcode after '='")?;
        if is_terminator_kw(tok.text) {
            return Err(Parser::syntax(
                tok,
                format!("'{}' cannot produce a result", tok.text),
            ));
        }
        if !is_opcode(tok.text) {
            return Err(Parser::syntax(
                tok,
                format!("expected an opcode after '=', found '{}'", tok.text),
            ));
        }
    }

    let mut targets = Vec::new();
    let instr = match tok.text {
        "ret" => {
            let mut instr = Instruction::plain("ret");
            if !p.at_construct_boundary() {
                let t = p.next("a return value")?;
                instr.operands.push(t.text.to_string());
            }
            instr
        }
        "br" => {
            let target = p.expect_label_arg("br")?;
            targets.push(target);
            let mut instr = Instruction::plain("br");
            instr.operands.push(target.text.to_string());
            instr
        }
        "cbr" => {
            let cond = p.next("a condition after 'cbr'")?;
            if cond.text == "{" || cond.text == "}" || label_name(cond.text).is_some() {
                return Err(Parser::syntax(
                    cond,
                    format!("expected a condition after 'cbr', found '{}'", cond.text),
                ));
            }
            let t1 = p.expect_label_arg("cbr")?;
            let t2 = p.expect_label_arg("cbr")?;
            if t1.text == t2.text {
                return Err(Parser::syntax(
                    t2,
                    format!("cbr targets must be distinct, both are '{}'", t1.text),
                ));
            }
            targets.push(t1);
            targets.push(t2);
            let mut instr = Instruction::plain("cbr");
            instr.operands = vec![
                cond.text.to_string(),
                t1.text.to_string(),
                t2.text.to_string(),
            ];
            instr
        }
        "call" => {
            let callee = p.next("a callee after 'call'")?;
            if !is_name(callee.text) {
                return Err(Parser::syntax(
                    callee,
                    format!("expected a callee name after 'call', found '{}'", callee.text),
                ));
            }
            let mut instr = Instruction::call(callee.text);
            p.take_operands(&mut instr)?;
            instr
        }
        op if is_opcode(op) => {
            let mut instr = Instruction::plain(op);
            p.take_operands(&mut instr)?;
            instr
        }
        other => {
            return Err(Parser::syntax(
                tok,
                format!("expected an instruction opcode, found '{other}'"),
            ));
        }
    };

    let mut instr = instr;
    instr.result = result;
    Ok(ParsedInstr { instr, targets })
}

struct RawBlock<'a> {
    label: String,
    body: Vec<Instruction>,
    targets: Vec<Tok<'a>>,
}

fn parse_function<'a>(p: &mut Parser<'a>) -> Result<(Tok<'a>, Cfg), ParseError> {
    let name = p.next("a function name after 'func'")?;
    if !is_name(name.text) {
        return Err(Parser::syntax(
            name,
            format!("expected a function name after 'func', found '{}'", name.text),
        ));
    }
    let brace = p.next("'{'")?;
    if brace.text != "{" {
        return Err(Parser::syntax(
            brace,
            format!("expected '{{' after function name, found '{}'", brace.text),
        ));
    }

    let mut blocks: Vec<RawBlock<'a>> = Vec::new();
    let mut index_of: HashMap<&'a str, usize> = HashMap::new();
    loop {
        let t = p.next("a block label or '}'")?;
        if t.text == "}" {
            break;
        }
        let Some(label) = label_name(t.text) else {
            return Err(Parser::syntax(
                t,
                format!("expected a block label or '}}', found '{}'", t.text),
            ));
        };
        if index_of.contains_key(label) {
            return Err(ParseError::DuplicateLabel {
                function: name.text.to_string(),
                label: label.to_string(),
                line: t.line,
                col: t.col,
            });
        }
        index_of.insert(label, blocks.len());

        let mut body = Vec::new();
        let mut targets = Vec::new();
        loop {
            if let Some(next) = p.peek() {
                if next.text == "}" || label_name(next.text).is_some() {
                    let what = if body.is_empty() {
                        "is empty"
                    } else {
                        "does not end with a terminator"
                    };
                    return Err(Parser::syntax(
                        next,
                        format!("block '{label}' {what}"),
                    ));
                }
            }
            let parsed = parse_instr(p)?;
            let done = parsed.instr.is_terminator();
            targets.extend(parsed.targets);
            body.push(parsed.instr);
            if done {
                break;
            }
        }
        // A terminator closes the block; only a new block or '}' may follow.
        match p.peek() {
            Some(next) if next.text == "}" || label_name(next.text).is_some() => {}
            Some(next) => {
                return Err(Parser::syntax(
                    next,
                    format!(
                        "expected a block label or '}}' after terminator, found '{}'",
                        next.text
                    ),
                ));
            }
            None => return Err(p.eof_error("a block label or '}'")),
        }
        blocks.push(RawBlock {
            label: label.to_string(),
            body,
            targets,
        });
    }

    if blocks.is_empty() {
        return Err(ParseError::EmptyFunction {
            name: name.text.to_string(),
            line: name.line,
            col: name.col,
        });
    }

    let mut edges = Vec::new();
    for (i, block) in blocks.iter().enumerate() {
        for target in &block.targets {
            match index_of.get(target.text) {
                Some(&j) => edges.push((i, j)),
                None => {
                    return Err(ParseError::UndefinedLabel {
                        function: name.text.to_string(),
                        label: target.text.to_string(),
                        line: target.line,
                        col: target.col,
                    });
                }
            }
        }
    }

    let nodes = blocks
        .into_iter()
        .map(|b| BasicBlock {
            label: b.label,
            body: b.body,
        })
        .collect();
    let cfg = Cfg::new(nodes, edges, 0).expect("parser produces in-range edges");
    Ok((name, cfg))
}

/// Parses mini-IR source into a [`Program`] with its unified graph built.
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(source);
    let mut functions: IndexMap<String, Cfg> = IndexMap::new();
    loop {
        let Some(t) = p.peek() else {
            if functions.is_empty() {
                return Err(p.eof_error("'func'"));
            }
            break;
        };
        if t.text != "func" {
            return Err(Parser::syntax(
                t,
                format!("expected 'func', found '{}'", t.text),
            ));
        }
        p.next("'func'")?;
        let (name, cfg) = parse_function(&mut p)?;
        if functions.contains_key(name.text) {
            return Err(ParseError::DuplicateFunction {
                name: name.text.to_string(),
                line: name.line,
                col: name.col,
            });
        }
        functions.insert(name.text.to_string(), cfg);
    }
    Ok(Program::assemble(functions))
}
