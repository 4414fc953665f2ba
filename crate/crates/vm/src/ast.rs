//! Program representation. Comments and blank lines are kept so a parsed
//! program prints back to the text it came from.

use std::collections::HashMap;
use std::fmt;

/// Integer register `r#`. `r0` reads as zero and cannot be written.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IReg(pub u16);

/// Qubit register `q#`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QReg(pub u16);

impl fmt::Display for IReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl fmt::Display for QReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instr {
    ILoad(IReg, i64),
    /// `move rA, rB` copies rB into rA.
    Move(IReg, IReg),
    Incr(IReg),
    Decr(IReg),
    PrintR(IReg),
    Br(String),
    /// Branch when the register is `<= 0`.
    Brlez(IReg, String),
    QLoadR(QReg, IReg),
    QLoadSeq(QReg, i64, i64),
    Hon(QReg),
    Xon(QReg),
    /// Phase `R_k`; negative `k` applies the inverse of `R_|k|`.
    Ron(QReg, i64),
    Cxon(QReg, QReg),
    Cron(QReg, QReg, i64),
    IQuAdd(IReg, QReg, QReg),
    IQuAddMod(IReg, IReg, QReg, QReg),
    /// `ciqumul_mod rA, rN, qs, qe, qc`: multiply `qs..qe` by rA mod rN when qc is set.
    CIQuMulMod(IReg, IReg, QReg, QReg, QReg),
    /// `modpow rD, rB, rE, rM`: rD = rB^(2^rE) mod rM.
    ModPow(IReg, IReg, IReg, IReg),
    Mon(QReg),
    QftInv(QReg, QReg),
    Halt,
}

impl Instr {
    pub fn opcode(&self) -> &'static str {
        match self {
            Instr::ILoad(..) => "iload",
            Instr::Move(..) => "move",
            Instr::Incr(..) => "incr",
            Instr::Decr(..) => "decr",
            Instr::PrintR(..) => "printr",
            Instr::Br(..) => "br",
            Instr::Brlez(..) => "brlez",
            Instr::QLoadR(..) => "qloadr",
            Instr::QLoadSeq(..) => "qload_seq",
            Instr::Hon(..) => "hon",
            Instr::Xon(..) => "xon",
            Instr::Ron(..) => "ron",
            Instr::Cxon(..) => "cxon",
            Instr::Cron(..) => "cron",
            Instr::IQuAdd(..) => "iquadd",
            Instr::IQuAddMod(..) => "iquadd_mod",
            Instr::CIQuMulMod(..) => "ciqumul_mod",
            Instr::ModPow(..) => "modpow",
            Instr::Mon(..) => "mon",
            Instr::QftInv(..) => "qft_inv",
            Instr::Halt => "halt",
        }
    }

    /// Integer register written by this instruction.
    pub fn writes(&self) -> Option<IReg> {
        match self {
            Instr::ILoad(r, _) | Instr::Move(r, _) | Instr::Incr(r) | Instr::Decr(r) | Instr::ModPow(r, ..) => Some(*r),
            _ => None,
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ops: Vec<String> = match self {
            Instr::ILoad(r, v) => vec![r.to_string(), v.to_string()],
            Instr::Move(a, b) => vec![a.to_string(), b.to_string()],
            Instr::Incr(r) | Instr::Decr(r) | Instr::PrintR(r) => vec![r.to_string()],
            Instr::Br(l) => vec![l.clone()],
            Instr::Brlez(r, l) => vec![r.to_string(), l.clone()],
            Instr::QLoadR(q, r) => vec![q.to_string(), r.to_string()],
            Instr::QLoadSeq(q, lo, hi) => vec![q.to_string(), lo.to_string(), hi.to_string()],
            Instr::Hon(q) | Instr::Xon(q) | Instr::Mon(q) => vec![q.to_string()],
            Instr::Ron(q, k) => vec![q.to_string(), k.to_string()],
            Instr::Cxon(c, t) => vec![c.to_string(), t.to_string()],
            Instr::Cron(c, t, k) => vec![c.to_string(), t.to_string(), k.to_string()],
            Instr::IQuAdd(r, s, e) => vec![r.to_string(), s.to_string(), e.to_string()],
            Instr::IQuAddMod(r, n, s, e) => vec![r.to_string(), n.to_string(), s.to_string(), e.to_string()],
            Instr::CIQuMulMod(a, n, s, e, c) => {
                vec![a.to_string(), n.to_string(), s.to_string(), e.to_string(), c.to_string()]
            }
            Instr::ModPow(d, b, e, m) => vec![d.to_string(), b.to_string(), e.to_string(), m.to_string()],
            Instr::QftInv(s, e) => vec![s.to_string(), e.to_string()],
            Instr::Halt => vec![],
        };
        f.write_str(self.opcode())?;
        if !ops.is_empty() {
            write!(f, " {}", ops.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub qubits: usize,
    pub ensemble: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateHeader {
    pub name: String,
    pub args: u32,
    pub regs: u16,
    pub qubit_regs: u16,
}

/// One source line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Line {
    Blank,
    /// A whole-line comment, stored verbatim.
    Comment(String),
    Header(Header),
    Gate(GateHeader),
    Label(String),
    /// An instruction with an optional trailing `//` comment.
    Instr(Instr, Option<String>),
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Line::Blank => Ok(()),
            Line::Comment(c) => f.write_str(c),
            Line::Header(h) => write!(f, ".qudot qubits={}, ensemble={}", h.qubits, h.ensemble),
            Line::Gate(g) => write!(f, ".gate {}: args={}, regs={}, qubit_regs={}", g.name, g.args, g.regs, g.qubit_regs),
            Line::Label(l) => write!(f, "{l}:"),
            Line::Instr(i, None) => write!(f, "{i}"),
            Line::Instr(i, Some(c)) => write!(f, "{i} {c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub(crate) lines: Vec<Line>,
    pub(crate) header: Header,
    pub(crate) gate: GateHeader,
    pub(crate) instrs: Vec<Instr>,
    /// Source line (1-based) of each instruction.
    pub(crate) instr_lines: Vec<usize>,
    pub(crate) labels: HashMap<String, usize>,
}

impl Program {
    pub fn header(&self) -> Header {
        self.header
    }

    pub fn gate(&self) -> &GateHeader {
        &self.gate
    }

    pub fn instructions(&self) -> &[Instr] {
        &self.instrs
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    /// Instruction index a label points at.
    pub fn label(&self, name: &str) -> Option<usize> {
        self.labels.get(name).copied()
    }

    /// Source line of instruction `index`.
    pub fn line_of(&self, index: usize) -> Option<usize> {
        self.instr_lines.get(index).copied()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}
