//! Gate lists that can drive both the layer engine and the dense oracle,
//! plus the randomized equivalence check between the two.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::float::EdgeFloat;
use crate::gates::SingleQubitGate;
use crate::network::QuMvN;
use crate::oracle::DenseState;
use crate::rng::{derive_seed, sample_rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Gate { gate: SingleQubitGate, qubit: usize },
    Controlled { gate: SingleQubitGate, control: usize, target: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub qubits: usize,
    pub ops: Vec<Op>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Circuit { qubits, ops: Vec::new() }
    }

    pub fn push(&mut self, op: Op) -> &mut Self {
        self.ops.push(op);
        self
    }

    /// `H(1)` followed by a CX chain `1->2, 2->3, ...`.
    pub fn ghz(qubits: usize) -> Self {
        let mut c = Circuit::new(qubits);
        c.push(Op::Gate { gate: SingleQubitGate::H, qubit: 1 });
        for q in 1..qubits {
            c.push(Op::Controlled { gate: SingleQubitGate::X, control: q, target: q + 1 });
        }
        c
    }

    /// Uniformly random gates drawn from X, H, R_k (k <= 4, either direction),
    /// CX, CH and CR_k.
    pub fn random<R: Rng + ?Sized>(qubits: usize, depth: usize, rng: &mut R) -> Self {
        let mut c = Circuit::new(qubits);
        for _ in 0..depth {
            let single = |rng: &mut R| match rng.gen_range(0..3) {
                0 => SingleQubitGate::X,
                1 => SingleQubitGate::H,
                _ => SingleQubitGate::R { k: rng.gen_range(1..=4), inverse: rng.gen() },
            };
            let gate = single(rng);
            if qubits >= 2 && rng.gen_bool(0.5) {
                let picked: Vec<usize> = (1..=qubits).collect::<Vec<_>>().choose_multiple(rng, 2).copied().collect();
                c.push(Op::Controlled { gate, control: picked[0], target: picked[1] });
            } else {
                c.push(Op::Gate { gate, qubit: rng.gen_range(1..=qubits) });
            }
        }
        c
    }

    pub fn apply_to_network<T: EdgeFloat>(&self, q: &mut QuMvN<T>) -> Result<()> {
        for op in &self.ops {
            match *op {
                Op::Gate { gate, qubit } => q.apply_gate(gate, qubit)?,
                Op::Controlled { gate, control, target } => q.apply_controlled(gate, control, target)?,
            }
        }
        Ok(())
    }

    pub fn apply_to_oracle(&self, s: &mut DenseState) -> Result<()> {
        for op in &self.ops {
            match *op {
                Op::Gate { gate, qubit } => s.apply_gate(gate, qubit)?,
                Op::Controlled { gate, control, target } => s.apply_controlled(gate, control, target)?,
            }
        }
        Ok(())
    }

    pub fn run_network<T: EdgeFloat>(&self) -> Result<QuMvN<T>> {
        let mut q = QuMvN::new_ground_state(self.qubits)?;
        self.apply_to_network(&mut q)?;
        Ok(q)
    }

    pub fn run_oracle(&self) -> Result<DenseState> {
        let mut s = DenseState::new(self.qubits)?;
        self.apply_to_oracle(&mut s)?;
        Ok(s)
    }
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub circuits: usize,
    /// Largest total-variation distance seen between the two engines.
    pub max_tv: f64,
    /// Index of the circuit with the largest distance.
    pub worst: usize,
    /// Circuits the layer engine refused to run.
    pub failures: Vec<(usize, String)>,
    pub max_layers: usize,
}

/// `(total variation, layers)` or the engine's refusal.
type Outcome = std::result::Result<(f64, usize), String>;

/// Runs `circuits` random circuits on 1..=`max_qubits` qubits through both the
/// layer engine and the oracle and compares the exact output distributions.
pub fn oracle_equivalence<T: EdgeFloat>(circuits: usize, max_qubits: usize, depth: usize, seed: u64) -> EquivalenceReport {
    const DOMAIN: u64 = 0x6675_7a7a;
    let results: Vec<(usize, Outcome)> = (0..circuits)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(derive_seed(seed, DOMAIN, i as u64), 0);
            let qubits = rng.gen_range(1..=max_qubits.max(1));
            let c = Circuit::random(qubits, depth, &mut rng);
            let run = || -> Result<(f64, usize)> {
                let q: QuMvN<T> = c.run_network()?;
                let oracle = c.run_oracle()?;
                Ok((total_variation(&q.exact_distribution()?, &oracle.probabilities()), q.num_layers()))
            };
            (i, run().map_err(|e| e.to_string()))
        })
        .collect();
    let mut report = EquivalenceReport { circuits, max_tv: 0.0, worst: 0, failures: Vec::new(), max_layers: 0 };
    for (i, r) in results {
        match r {
            Ok((tv, layers)) => {
                if tv > report.max_tv {
                    report.max_tv = tv;
                    report.worst = i;
                }
                report.max_layers = report.max_layers.max(layers);
            }
            Err(e) => report.failures.push((i, e)),
        }
    }
    report
}
