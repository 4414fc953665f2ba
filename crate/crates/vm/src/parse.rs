use std::collections::HashMap;

use thiserror::Error;

use crate::ast::{GateHeader, Header, IReg, Instr, Line, Program, QReg};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing `.qudot` header")]
    MissingHeader,
    #[error("duplicate `.qudot` header")]
    DuplicateHeader,
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("missing `.gate main` block")]
    MissingGate,
    #[error("malformed gate header: {0}")]
    BadGate(String),
    #[error("only a single `.gate main: args=0, ...` block is supported, found `{0}`")]
    UnsupportedGate(String),
    #[error("instruction before the `.gate` block")]
    OutsideGate,
    #[error("unknown opcode `{0}`")]
    UnknownOpcode(String),
    #[error("`{opcode}` takes {expected} operand(s), found {found}")]
    Arity { opcode: String, expected: usize, found: usize },
    #[error("expected {expected}, found `{found}`")]
    BadOperand { expected: &'static str, found: String },
    #[error("register `{0}` is not declared")]
    UndeclaredRegister(String),
    #[error("`r0` is read-only")]
    ReadOnlyRegister,
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unresolved branch target `{0}`")]
    UnresolvedLabel(String),
    #[error("qubit range {lo}..{hi} is outside 1..={qubits}")]
    QubitRange { lo: i64, hi: i64, qubits: usize },
}

fn err<T>(line: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError { line, kind })
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses `key=value` pairs separated by commas into the requested keys, in order.
fn key_values<const K: usize>(text: &str, keys: [&str; K]) -> Result<[u64; K], String> {
    let mut out = [None; K];
    for part in text.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, found `{}`", part.trim()))?;
        let k = k.trim();
        let slot = keys.iter().position(|&x| x == k).ok_or_else(|| format!("unknown key `{k}`"))?;
        if out[slot].is_some() {
            return Err(format!("duplicate key `{k}`"));
        }
        out[slot] = Some(v.trim().parse::<u64>().map_err(|_| format!("`{k}` needs a non-negative integer"))?);
    }
    let mut vals = [0; K];
    for (i, v) in out.into_iter().enumerate() {
        vals[i] = v.ok_or_else(|| format!("missing `{}`", keys[i]))?;
    }
    Ok(vals)
}

fn parse_header(rest: &str) -> Result<Header, String> {
    let [qubits, ensemble] = key_values(rest, ["qubits", "ensemble"])?;
    if qubits == 0 {
        return Err("`qubits` must be positive".into());
    }
    Ok(Header { qubits: qubits as usize, ensemble })
}

fn parse_gate(rest: &str) -> Result<GateHeader, String> {
    let (name, params) = rest.split_once(':').ok_or("expected `<name>: args=..`")?;
    let name = name.trim();
    if !is_ident(name) {
        return Err(format!("bad gate name `{name}`"));
    }
    let [args, regs, qubit_regs] = key_values(params, ["args", "regs", "qubit_regs"])?;
    let regs = u16::try_from(regs).map_err(|_| "too many registers".to_string())?;
    let qubit_regs = u16::try_from(qubit_regs).map_err(|_| "too many qubit registers".to_string())?;
    Ok(GateHeader { name: name.to_string(), args: args as u32, regs, qubit_regs })
}

struct Operands<'a> {
    line: usize,
    gate: &'a GateHeader,
    qubits: usize,
}

impl Operands<'_> {
    fn ireg(&self, s: &str) -> Result<IReg, ParseError> {
        let n = s
            .strip_prefix('r')
            .and_then(|d| d.parse::<u16>().ok())
            .ok_or_else(|| ParseError {
                line: self.line,
                kind: ParseErrorKind::BadOperand { expected: "an integer register", found: s.into() },
            })?;
        if n > self.gate.regs {
            return err(self.line, ParseErrorKind::UndeclaredRegister(s.into()));
        }
        Ok(IReg(n))
    }

    fn qreg(&self, s: &str) -> Result<QReg, ParseError> {
        let n = s
            .strip_prefix('q')
            .and_then(|d| d.parse::<u16>().ok())
            .ok_or_else(|| ParseError {
                line: self.line,
                kind: ParseErrorKind::BadOperand { expected: "a qubit register", found: s.into() },
            })?;
        if n >= self.gate.qubit_regs {
            return err(self.line, ParseErrorKind::UndeclaredRegister(s.into()));
        }
        Ok(QReg(n))
    }

    fn imm(&self, s: &str) -> Result<i64, ParseError> {
        s.parse().map_err(|_| ParseError {
            line: self.line,
            kind: ParseErrorKind::BadOperand { expected: "an integer", found: s.into() },
        })
    }

    fn label(&self, s: &str) -> Result<String, ParseError> {
        if is_ident(s) {
            Ok(s.to_string())
        } else {
            err(self.line, ParseErrorKind::BadOperand { expected: "a label", found: s.into() })
        }
    }

    fn instr(&self, opcode: &str, ops: &[&str]) -> Result<Instr, ParseError> {
        let arity = match opcode {
            "halt" => 0,
            "incr" | "decr" | "printr" | "br" | "hon" | "xon" | "mon" => 1,
            "iload" | "move" | "brlez" | "qloadr" | "ron" | "cxon" | "qft_inv" => 2,
            "qload_seq" | "cron" | "iquadd" => 3,
            "iquadd_mod" | "modpow" => 4,
            "ciqumul_mod" => 5,
            other => return err(self.line, ParseErrorKind::UnknownOpcode(other.into())),
        };
        if ops.len() != arity {
            return err(
                self.line,
                ParseErrorKind::Arity { opcode: opcode.into(), expected: arity, found: ops.len() },
            );
        }
        let instr = match opcode {
            "halt" => Instr::Halt,
            "incr" => Instr::Incr(self.ireg(ops[0])?),
            "decr" => Instr::Decr(self.ireg(ops[0])?),
            "printr" => Instr::PrintR(self.ireg(ops[0])?),
            "br" => Instr::Br(self.label(ops[0])?),
            "hon" => Instr::Hon(self.qreg(ops[0])?),
            "xon" => Instr::Xon(self.qreg(ops[0])?),
            "mon" => Instr::Mon(self.qreg(ops[0])?),
            "iload" => Instr::ILoad(self.ireg(ops[0])?, self.imm(ops[1])?),
            "move" => Instr::Move(self.ireg(ops[0])?, self.ireg(ops[1])?),
            "brlez" => Instr::Brlez(self.ireg(ops[0])?, self.label(ops[1])?),
            "qloadr" => Instr::QLoadR(self.qreg(ops[0])?, self.ireg(ops[1])?),
            "ron" => Instr::Ron(self.qreg(ops[0])?, self.imm(ops[1])?),
            "cxon" => Instr::Cxon(self.qreg(ops[0])?, self.qreg(ops[1])?),
            "qft_inv" => Instr::QftInv(self.qreg(ops[0])?, self.qreg(ops[1])?),
            "qload_seq" => {
                let (lo, hi) = (self.imm(ops[1])?, self.imm(ops[2])?);
                if lo < 1 || hi < lo || hi as u64 > self.qubits as u64 {
                    return err(self.line, ParseErrorKind::QubitRange { lo, hi, qubits: self.qubits });
                }
                Instr::QLoadSeq(self.qreg(ops[0])?, lo, hi)
            }
            "cron" => Instr::Cron(self.qreg(ops[0])?, self.qreg(ops[1])?, self.imm(ops[2])?),
            "iquadd" => Instr::IQuAdd(self.ireg(ops[0])?, self.qreg(ops[1])?, self.qreg(ops[2])?),
            "iquadd_mod" => Instr::IQuAddMod(
                self.ireg(ops[0])?,
                self.ireg(ops[1])?,
                self.qreg(ops[2])?,
                self.qreg(ops[3])?,
            ),
            "modpow" => Instr::ModPow(
                self.ireg(ops[0])?,
                self.ireg(ops[1])?,
                self.ireg(ops[2])?,
                self.ireg(ops[3])?,
            ),
            "ciqumul_mod" => Instr::CIQuMulMod(
                self.ireg(ops[0])?,
                self.ireg(ops[1])?,
                self.qreg(ops[2])?,
                self.qreg(ops[3])?,
                self.qreg(ops[4])?,
            ),
            _ => unreachable!(),
        };
        if instr.writes() == Some(IReg(0)) {
            return err(self.line, ParseErrorKind::ReadOnlyRegister);
        }
        Ok(instr)
    }
}

/// Parses `.qudot` source. Errors carry the 1-based source line.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut lines = Vec::new();
    let mut header: Option<Header> = None;
    let mut gate: Option<GateHeader> = None;
    let mut instrs = Vec::new();
    let mut instr_lines = Vec::new();
    let mut labels: HashMap<String, usize> = HashMap::new();
    let mut targets: Vec<(String, usize)> = Vec::new();
    let mut last = 0;

    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        last = no;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            lines.push(Line::Blank);
            continue;
        }
        if trimmed.starts_with("//") {
            lines.push(Line::Comment(raw.to_string()));
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix(".qudot") {
            if header.is_some() {
                return err(no, ParseErrorKind::DuplicateHeader);
            }
            let h = parse_header(rest).map_err(|e| ParseError { line: no, kind: ParseErrorKind::BadHeader(e) })?;
            header = Some(h);
            lines.push(Line::Header(h));
            continue;
        }
        let Some(h) = header else {
            return err(no, ParseErrorKind::MissingHeader);
        };
        if let Some(rest) = trimmed.strip_prefix(".gate") {
            let g = parse_gate(rest).map_err(|e| ParseError { line: no, kind: ParseErrorKind::BadGate(e) })?;
            if gate.is_some() || g.name != "main" || g.args != 0 {
                return err(no, ParseErrorKind::UnsupportedGate(trimmed.to_string()));
            }
            gate = Some(g.clone());
            lines.push(Line::Gate(g));
            continue;
        }
        let Some(g) = gate.as_ref() else {
            return err(no, ParseErrorKind::OutsideGate);
        };
        if let Some(name) = trimmed.strip_suffix(':').filter(|n| is_ident(n)) {
            if labels.insert(name.to_string(), instrs.len()).is_some() {
                return err(no, ParseErrorKind::DuplicateLabel(name.into()));
            }
            lines.push(Line::Label(name.to_string()));
            continue;
        }

        let (code, comment) = match trimmed.find("//") {
            Some(pos) => (trimmed[..pos].trim(), Some(trimmed[pos..].to_string())),
            None => (trimmed, None),
        };
        let (opcode, rest) = code.split_once(char::is_whitespace).unwrap_or((code, ""));
        let ops: Vec<&str> = if rest.trim().is_empty() { Vec::new() } else { rest.split(',').map(str::trim).collect() };
        let instr = Operands { line: no, gate: g, qubits: h.qubits }.instr(opcode, &ops)?;
        if let Instr::Br(l) | Instr::Brlez(_, l) = &instr {
            targets.push((l.clone(), no));
        }
        instrs.push(instr.clone());
        instr_lines.push(no);
        lines.push(Line::Instr(instr, comment));
    }

    let header = header.ok_or(ParseError { line: last.max(1), kind: ParseErrorKind::MissingHeader })?;
    let gate = gate.ok_or(ParseError { line: last.max(1), kind: ParseErrorKind::MissingGate })?;
    if let Some((l, no)) = targets.into_iter().find(|(l, _)| !labels.contains_key(l)) {
        return err(no, ParseErrorKind::UnresolvedLabel(l));
    }
    Ok(Program { lines, header, gate, instrs, instr_lines, labels })
}
