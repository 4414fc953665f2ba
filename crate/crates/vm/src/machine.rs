use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use qumvn_core::rng::{derive_seed, sample_rng, SampleRng, DOMAIN_BRANCH, DOMAIN_HALT, DOMAIN_MON};
use qumvn_core::{
    sample_ensemble, EdgeFloat, FrequencyTable, Precision, QuMvN, QumvnError, RegisterRange, SamplingMode,
    SingleQubitGate,
};
use thiserror::Error;

use crate::ast::{IReg, Instr, Program, QReg};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Overrides the header's ensemble size.
    pub samples: Option<u64>,
    pub seed: u64,
    pub mode: SamplingMode,
    pub precision: Precision,
    /// Re-draw the `mon` outcome per sample instead of collapsing once.
    pub resample_collapse: bool,
    pub max_steps: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            samples: None,
            seed: 0,
            mode: SamplingMode::Auto,
            precision: Precision::Single,
            resample_collapse: false,
            max_steps: 1 << 32,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub table: FrequencyTable,
    /// Output of `printr`, one value per line.
    pub diagnostics: String,
    pub elapsed: Duration,
    pub steps: u64,
    pub peak_layers: usize,
    /// Outcomes of each `mon`, in execution order (single-collapse runs only).
    pub collapses: Vec<u64>,
}

#[derive(Debug, Error)]
#[error("instruction {index} (line {line}, `{instr}`): {kind}")]
pub struct RuntimeError {
    pub index: usize,
    pub line: usize,
    pub instr: String,
    pub kind: RuntimeErrorKind,
}

#[derive(Debug, Error, PartialEq)]
pub enum RuntimeErrorKind {
    #[error(transparent)]
    Engine(#[from] QumvnError),
    #[error("{0} holds no qubit")]
    UnsetQubitRegister(QReg),
    #[error("{0} holds a sequence where a single qubit is needed")]
    ExpectedSingle(QReg),
    #[error("qubit index {value} outside 1..={qubits}")]
    QubitIndex { value: i64, qubits: usize },
    #[error("{what} must be non-negative, got {value}")]
    Negative { what: &'static str, value: i64 },
    #[error("modulus must exceed 1, got {0}")]
    Modulus(i64),
    #[error("integer overflow")]
    Overflow,
    #[error("step limit of {0} exceeded")]
    StepLimit(u64),
    #[error("program ended without `halt`")]
    NoHalt,
}

/// `base^(2^e) mod m`, by `e` modular squarings.
pub fn modpow_semantics(base: i64, e: i64, m: i64) -> Result<i64, RuntimeErrorKind> {
    if m <= 1 {
        return Err(RuntimeErrorKind::Modulus(m));
    }
    if e < 0 {
        return Err(RuntimeErrorKind::Negative { what: "exponent", value: e });
    }
    let m = m as u128;
    let mut r = base.rem_euclid(m as i64) as u128;
    for _ in 0..e {
        r = r * r % m;
    }
    Ok(r as i64)
}

/// Generator for the `index`-th single-collapse `mon` of a run seeded with `master`.
pub fn mon_rng(master: u64, index: u64) -> SampleRng {
    sample_rng(derive_seed(master, DOMAIN_MON, index), 0)
}

/// Ensemble seed used at `halt` by a run seeded with `master`.
pub fn halt_seed(master: u64) -> u64 {
    derive_seed(master, DOMAIN_HALT, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum QVal {
    Unset,
    Single(usize),
    Seq(usize, usize),
}

enum Event {
    Mon(RegisterRange),
    Halt,
}

#[derive(Clone)]
struct Machine<'p, T: EdgeFloat> {
    program: &'p Program,
    regs: Vec<i64>,
    qregs: Vec<QVal>,
    state: QuMvN<T>,
    pc: usize,
    steps: u64,
    max_steps: u64,
    diagnostics: String,
    peak_layers: usize,
    mons: u64,
    collapses: Vec<u64>,
}

type Step<T> = Result<T, RuntimeErrorKind>;

impl<'p, T: EdgeFloat> Machine<'p, T> {
    fn new(program: &'p Program, max_steps: u64) -> Result<Self, RuntimeErrorKind> {
        let state = QuMvN::new_ground_state(program.header().qubits)?;
        Ok(Machine {
            program,
            regs: vec![0; program.gate().regs as usize + 1],
            qregs: vec![QVal::Unset; program.gate().qubit_regs as usize],
            state,
            pc: 0,
            steps: 0,
            max_steps,
            diagnostics: String::new(),
            peak_layers: 1,
            mons: 0,
            collapses: Vec::new(),
        })
    }

    fn error(&self, kind: RuntimeErrorKind) -> RuntimeError {
        let index = self.pc;
        RuntimeError {
            index,
            line: self.program.line_of(index).unwrap_or(0),
            instr: self.program.instructions().get(index).map_or_else(|| "<end>".into(), |i| i.to_string()),
            kind,
        }
    }

    fn get(&self, r: IReg) -> i64 {
        self.regs[r.0 as usize]
    }

    fn qubit_index(&self, v: i64) -> Step<usize> {
        let qubits = self.program.header().qubits;
        if v < 1 || v as u64 > qubits as u64 {
            return Err(RuntimeErrorKind::QubitIndex { value: v, qubits });
        }
        Ok(v as usize)
    }

    fn qubits(&self, q: QReg) -> Step<std::ops::RangeInclusive<usize>> {
        match self.qregs[q.0 as usize] {
            QVal::Unset => Err(RuntimeErrorKind::UnsetQubitRegister(q)),
            QVal::Single(v) => Ok(v..=v),
            QVal::Seq(lo, hi) => Ok(lo..=hi),
        }
    }

    fn single(&self, q: QReg) -> Step<usize> {
        match self.qregs[q.0 as usize] {
            QVal::Unset => Err(RuntimeErrorKind::UnsetQubitRegister(q)),
            QVal::Single(v) => Ok(v),
            QVal::Seq(..) => Err(RuntimeErrorKind::ExpectedSingle(q)),
        }
    }

    fn range(&self, s: QReg, e: QReg) -> Step<RegisterRange> {
        Ok(RegisterRange::new(self.single(s)?, self.single(e)?)?)
    }

    fn modulus(&self, r: IReg) -> Step<u64> {
        let n = self.get(r);
        if n <= 1 {
            return Err(RuntimeErrorKind::Modulus(n));
        }
        Ok(n as u64)
    }

    fn rk(k: i64) -> SingleQubitGate {
        SingleQubitGate::R { k: k.unsigned_abs().min(u32::MAX as u64) as u32, inverse: k < 0 }
    }

    /// Runs until the next `mon` or `halt`, leaving `pc` on it.
    fn run_to_event(&mut self) -> Result<Event, RuntimeError> {
        loop {
            let Some(instr) = self.program.instructions().get(self.pc) else {
                return Err(self.error(RuntimeErrorKind::NoHalt));
            };
            if self.steps >= self.max_steps {
                return Err(self.error(RuntimeErrorKind::StepLimit(self.max_steps)));
            }
            self.steps += 1;
            match self.exec(instr) {
                Ok(Some(ev)) => return Ok(ev),
                Ok(None) => {}
                Err(kind) => return Err(self.error(kind)),
            }
            self.peak_layers = self.peak_layers.max(self.state.num_layers());
        }
    }

    fn exec(&mut self, instr: &'p Instr) -> Step<Option<Event>> {
        let mut next = self.pc + 1;
        match instr {
            Instr::ILoad(r, v) => self.regs[r.0 as usize] = *v,
            Instr::Move(a, b) => self.regs[a.0 as usize] = self.get(*b),
            Instr::Incr(r) => self.regs[r.0 as usize] = self.get(*r).checked_add(1).ok_or(RuntimeErrorKind::Overflow)?,
            Instr::Decr(r) => self.regs[r.0 as usize] = self.get(*r).checked_sub(1).ok_or(RuntimeErrorKind::Overflow)?,
            Instr::PrintR(r) => {
                self.diagnostics.push_str(&self.get(*r).to_string());
                self.diagnostics.push('\n');
            }
            Instr::Br(l) => next = self.program.label(l).expect("labels resolved at parse time"),
            Instr::Brlez(r, l) => {
                if self.get(*r) <= 0 {
                    next = self.program.label(l).expect("labels resolved at parse time");
                }
            }
            Instr::QLoadR(q, r) => self.qregs[q.0 as usize] = QVal::Single(self.qubit_index(self.get(*r))?),
            Instr::QLoadSeq(q, lo, hi) => {
                self.qregs[q.0 as usize] = QVal::Seq(self.qubit_index(*lo)?, self.qubit_index(*hi)?);
            }
            Instr::Hon(q) => {
                for i in self.qubits(*q)? {
                    self.state.apply_h(i)?;
                }
            }
            Instr::Xon(q) => {
                for i in self.qubits(*q)? {
                    self.state.apply_x(i)?;
                }
            }
            Instr::Ron(q, k) => {
                for i in self.qubits(*q)? {
                    self.state.apply_gate(Self::rk(*k), i)?;
                }
            }
            Instr::Cxon(c, t) => self.state.apply_controlled(SingleQubitGate::X, self.single(*c)?, self.single(*t)?)?,
            Instr::Cron(c, t, k) => self.state.apply_controlled(Self::rk(*k), self.single(*c)?, self.single(*t)?)?,
            Instr::IQuAdd(r, s, e) => {
                let reg = self.range(*s, *e)?;
                let a = self.get(*r).rem_euclid(1i64 << reg.width());
                self.state.apply_add(a as u64, reg)?;
            }
            Instr::IQuAddMod(r, n, s, e) => {
                let (reg, n) = (self.range(*s, *e)?, self.modulus(*n)?);
                let a = self.get(*r).rem_euclid(n as i64);
                self.state.apply_add_mod(a as u64, n, reg)?;
            }
            Instr::CIQuMulMod(a, n, s, e, c) => {
                let (reg, n, c) = (self.range(*s, *e)?, self.modulus(*n)?, self.single(*c)?);
                let a = self.get(*a).rem_euclid(n as i64);
                self.state.apply_cmul_mod(a as u64, n, reg, Some(c))?;
            }
            Instr::ModPow(d, b, e, m) => {
                self.regs[d.0 as usize] = modpow_semantics(self.get(*b), self.get(*e), self.get(*m))?;
            }
            Instr::QftInv(s, e) => self.state.apply_qft_inv(self.range(*s, *e)?)?,
            Instr::Mon(q) => {
                let r = self.qubits(*q)?;
                return Ok(Some(Event::Mon(RegisterRange::new(*r.start(), *r.end())?)));
            }
            Instr::Halt => return Ok(Some(Event::Halt)),
        }
        self.pc = next;
        Ok(None)
    }
}

struct Outcome {
    table: FrequencyTable,
    diagnostics: String,
    steps: u64,
    peak_layers: usize,
    collapses: Vec<u64>,
}

/// Runs `m` to completion, drawing `budget` samples at `halt`.
fn drive<T: EdgeFloat>(mut m: Machine<'_, T>, budget: u64, seed: u64, cfg: &RunConfig) -> Result<Outcome, RuntimeError> {
    loop {
        match m.run_to_event()? {
            Event::Halt => {
                let table = sample_ensemble(&m.state, budget, derive_seed(seed, DOMAIN_HALT, 0), cfg.mode)
                    .map_err(|e| m.error(e.into()))?;
                return Ok(Outcome {
                    table,
                    diagnostics: m.diagnostics,
                    steps: m.steps,
                    peak_layers: m.peak_layers,
                    collapses: m.collapses,
                });
            }
            Event::Mon(reg) if cfg.resample_collapse => {
                let draws = sample_ensemble(&m.state, budget, derive_seed(seed, DOMAIN_MON, m.mons), SamplingMode::Auto)
                    .map_err(|e| m.error(e.into()))?;
                let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
                for (bits, c) in draws.iter() {
                    *counts.entry(bits.register_value(reg)).or_default() += c;
                }
                m.mons += 1;
                m.pc += 1;
                let mut merged: Option<Outcome> = None;
                for (value, count) in counts {
                    let mut branch = m.clone();
                    branch.state.collapse_to(reg, value).map_err(|e| m.error(e.into()))?;
                    let out = drive(branch, count, derive_seed(seed, DOMAIN_BRANCH, value), cfg)?;
                    merged = Some(match merged {
                        None => out,
                        Some(mut acc) => {
                            acc.table.merge(out.table);
                            acc.diagnostics.push_str(&out.diagnostics[m.diagnostics.len()..]);
                            acc.steps += out.steps - m.steps;
                            acc.peak_layers = acc.peak_layers.max(out.peak_layers);
                            acc
                        }
                    });
                }
                return Ok(merged.unwrap_or(Outcome {
                    table: FrequencyTable::new(),
                    diagnostics: m.diagnostics,
                    steps: m.steps,
                    peak_layers: m.peak_layers,
                    collapses: m.collapses,
                }));
            }
            Event::Mon(reg) => {
                let mut rng = sample_rng(derive_seed(seed, DOMAIN_MON, m.mons), 0);
                let v = m.state.measure_collapse(reg, &mut rng).map_err(|e| m.error(e.into()))?;
                m.collapses.push(v);
                m.mons += 1;
                m.pc += 1;
            }
        }
    }
}

fn execute_as<T: EdgeFloat>(program: &Program, cfg: &RunConfig) -> Result<RunResult, RuntimeError> {
    let start = Instant::now();
    let m = Machine::<T>::new(program, cfg.max_steps).map_err(|kind| RuntimeError {
        index: 0,
        line: program.line_of(0).unwrap_or(0),
        instr: program.instructions().first().map_or_else(|| "<end>".into(), |i| i.to_string()),
        kind,
    })?;
    let budget = cfg.samples.unwrap_or(program.header().ensemble);
    let out = drive(m, budget, cfg.seed, cfg)?;
    Ok(RunResult {
        table: out.table,
        diagnostics: out.diagnostics,
        elapsed: start.elapsed(),
        steps: out.steps,
        peak_layers: out.peak_layers,
        collapses: out.collapses,
    })
}

/// Runs `program` from its first instruction to `halt` and samples every
/// declared qubit at the end.
pub fn execute(program: &Program, cfg: &RunConfig) -> Result<RunResult, RuntimeError> {
    match cfg.precision {
        Precision::Single => execute_as::<f32>(program, cfg),
        Precision::Double => execute_as::<f64>(program, cfg),
    }
}
