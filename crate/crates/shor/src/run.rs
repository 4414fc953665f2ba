use std::time::Instant;

use qudot_vm::{execute, halt_seed, mon_rng, parse_program, ParseError, RunConfig, RunResult, RuntimeError};
use qumvn_core::oracle::DenseState;
use qumvn_core::rng::{derive_seed, sample_rng};
use qumvn_core::{sample_ensemble, EdgeFloat, FrequencyTable, Precision, QuMvN, QumvnError, SamplingMode};
use thiserror::Error;

use crate::arith::mul_mod;
use crate::period::PeriodPolicy;
use crate::plan::{generate_program, plan_instance, Plan, ShorError, ShorInstance, SizingPolicy};
use crate::report::{classify_and_report, ShorReport};

const DOMAIN_WITNESS: u64 = 0x7769746e;

/// Builds the period-finding state directly on the engine, in the same order
/// as the generated program: `H` on the control register, work register set
/// to 1, controlled multiplications by `a^(2^j)` from qubit `k` up to qubit 1,
/// one collapse of the work register drawn from `mon_rng(seed, 0)`, inverse QFT.
///
/// Returns the state and the collapsed work-register value.
pub fn period_finding_state<T: EdgeFloat>(inst: &ShorInstance, seed: u64) -> Result<(QuMvN<T>, u64), QumvnError> {
    let (k, total) = (inst.upper, inst.declared_qubits());
    let mut q = QuMvN::<T>::new_ground_state(total)?;
    for i in 1..=k {
        q.apply_h(i)?;
    }
    q.apply_x(total)?;
    for (j, control) in (1..=k).rev().enumerate() {
        let m = square_further(inst.a % inst.n, j, inst.n);
        q.apply_cmul_mod(m, inst.n, inst.lower_register(), Some(control))?;
    }
    let value = q.measure_collapse(inst.lower_register(), &mut mon_rng(seed, 0))?;
    q.apply_qft_inv(inst.upper_register())?;
    Ok((q, value))
}

/// `m^(2^times) mod n`.
fn square_further(mut m: u64, times: usize, n: u64) -> u64 {
    for _ in 0..times {
        m = mul_mod(m, m, n);
    }
    m
}

/// The same state on the dense oracle, with the work register collapsed to `lower_value`.
pub fn dense_period_finding_state(inst: &ShorInstance, lower_value: u64) -> Result<DenseState, QumvnError> {
    use qumvn_core::SingleQubitGate;
    let (k, total) = (inst.upper, inst.declared_qubits());
    let mut s = DenseState::new(total)?;
    for i in 1..=k {
        s.apply_gate(SingleQubitGate::H, i)?;
    }
    s.apply_gate(SingleQubitGate::X, total)?;
    for (j, control) in (1..=k).rev().enumerate() {
        let m = square_further(inst.a % inst.n, j, inst.n);
        s.apply_cmul_mod(m, inst.n, inst.lower_register(), Some(control))?;
    }
    s.collapse_to(inst.lower_register(), lower_value)?;
    s.apply_qft_inv(inst.upper_register())?;
    Ok(s)
}

/// Engine-only run: [`period_finding_state`] then an ensemble drawn with `halt_seed(seed)`.
pub fn run_direct<T: EdgeFloat>(
    inst: &ShorInstance,
    samples: u64,
    seed: u64,
    mode: SamplingMode,
) -> Result<FrequencyTable, QumvnError> {
    let (q, _) = period_finding_state::<T>(inst, seed)?;
    sample_ensemble(&q, samples, halt_seed(seed), mode)
}

#[derive(Debug, Error)]
pub enum FactorError {
    #[error(transparent)]
    Shor(#[from] ShorError),
    #[error("generated program failed to parse: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorOptions {
    pub witness: Option<u64>,
    pub samples: u64,
    pub seed: u64,
    pub sizing: SizingPolicy,
    pub policy: PeriodPolicy,
    pub mode: SamplingMode,
    pub precision: Precision,
    pub resample_collapse: bool,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            witness: None,
            samples: 500_000,
            seed: 0,
            sizing: SizingPolicy::default(),
            policy: PeriodPolicy::default(),
            mode: SamplingMode::Auto,
            precision: Precision::Single,
            resample_collapse: false,
        }
    }
}

#[derive(Debug)]
pub enum Factored {
    /// The witness shared a factor with `N`.
    Classical { a: u64, p: u64, q: u64 },
    Quantum { report: ShorReport, run: Box<RunResult> },
}

impl Factored {
    pub fn factors(&self) -> Option<(u64, u64)> {
        match self {
            Factored::Classical { p, q, .. } => Some((*p, *q)),
            Factored::Quantum { report, .. } => report.factors,
        }
    }
}

/// Sizes the problem, generates and runs the `.qudot` program, then classifies the readings.
pub fn factor(n: u64, opts: &FactorOptions) -> Result<Factored, FactorError> {
    let mut rng = sample_rng(derive_seed(opts.seed, DOMAIN_WITNESS, 0), 0);
    let inst = match plan_instance(n, opts.witness, opts.sizing, &mut rng)? {
        Plan::Classical { a, p, q } => return Ok(Factored::Classical { a, p, q }),
        Plan::Quantum(inst) => inst,
    };
    let start = Instant::now();
    let run = run_program(&inst, opts)?;
    let mut report = classify_and_report(&run.table, &inst, opts.policy);
    report.elapsed = start.elapsed();
    Ok(Factored::Quantum { report, run: Box::new(run) })
}

pub fn run_program(inst: &ShorInstance, opts: &FactorOptions) -> Result<RunResult, FactorError> {
    let program = parse_program(&generate_program(inst, opts.samples))?;
    let cfg = RunConfig {
        samples: None,
        seed: opts.seed,
        mode: opts.mode,
        precision: opts.precision,
        resample_collapse: opts.resample_collapse,
        ..RunConfig::default()
    };
    Ok(execute(&program, &cfg)?)
}
