//! `.qudot` bytecode: parser, pretty printer and interpreter.
//!
//! A program declares its qubit count and ensemble size, then a single
//! `.gate main` block of register-machine instructions. Quantum instructions
//! drive a [`qumvn_core::QuMvN`]; `halt` samples every declared qubit.

mod ast;
mod machine;
mod parse;

pub use ast::{GateHeader, Header, IReg, Instr, Line, Program, QReg};
pub use machine::{execute, halt_seed, modpow_semantics, mon_rng, RunConfig, RunResult, RuntimeError, RuntimeErrorKind};
pub use parse::{parse_program, ParseError, ParseErrorKind};
