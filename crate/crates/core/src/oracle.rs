//! Dense state-vector reference simulator for small qubit counts.
//!
//! Shares no code with the layer engine beyond gate matrices and bit-string
//! types, so it can serve as an independent check.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::bits::{BitString, RegisterRange};
use crate::error::{QumvnError, Result};
use crate::gates::SingleQubitGate;

pub const ORACLE_MAX_QUBITS: usize = 20;

/// `2^n` complex amplitudes; index bit `n - q` holds qubit `q` (qubit 1 is the MSB).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    pub fn new(qubits: usize) -> Result<Self> {
        if qubits == 0 {
            return Err(QumvnError::ZeroQubits);
        }
        if qubits > ORACLE_MAX_QUBITS {
            return Err(QumvnError::TooManyQubits { qubits, max: ORACLE_MAX_QUBITS });
        }
        let mut amps = vec![Complex64::zero(); 1 << qubits];
        amps[0] = Complex64::one();
        Ok(DenseState { qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, bits: &BitString) -> Complex64 {
        self.amps[bits.to_index() as usize]
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit == 0 || qubit > self.qubits {
            return Err(QumvnError::QubitOutOfRange { qubit, qubits: self.qubits });
        }
        Ok(1 << (self.qubits - qubit))
    }

    fn reg_value(&self, idx: usize, reg: RegisterRange) -> u64 {
        let shift = self.qubits - reg.end();
        ((idx >> shift) as u64) & ((1u64 << reg.width()) - 1)
    }

    fn with_reg(&self, idx: usize, reg: RegisterRange, value: u64) -> usize {
        let shift = self.qubits - reg.end();
        let m = ((1usize << reg.width()) - 1) << shift;
        (idx & !m) | ((value as usize) << shift)
    }

    fn apply_matrix(&mut self, m: [[Complex64; 2]; 2], target: usize, control: Option<usize>) {
        for idx in 0..self.amps.len() {
            if idx & target != 0 || control.is_some_and(|c| idx & c == 0) {
                continue;
            }
            let (a0, a1) = (self.amps[idx], self.amps[idx | target]);
            self.amps[idx] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[idx | target] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    pub fn apply_gate(&mut self, gate: SingleQubitGate, qubit: usize) -> Result<()> {
        let t = self.mask(qubit)?;
        self.apply_matrix(gate.matrix(), t, None);
        Ok(())
    }

    pub fn apply_controlled(&mut self, gate: SingleQubitGate, control: usize, target: usize) -> Result<()> {
        if control == target {
            return Err(QumvnError::ControlIsTarget(control));
        }
        let (c, t) = (self.mask(control)?, self.mask(target)?);
        self.apply_matrix(gate.matrix(), t, Some(c));
        Ok(())
    }

    /// Applies `f` to the register value of every basis state (where the
    /// control is set). `f` must be a bijection on the register values.
    fn permute(&mut self, reg: RegisterRange, control: Option<usize>, f: impl Fn(u64) -> u64) -> Result<()> {
        reg.check_within(self.qubits)?;
        let c = control.map(|q| self.mask(q)).transpose()?;
        let mut out = vec![Complex64::zero(); self.amps.len()];
        for (idx, &a) in self.amps.iter().enumerate() {
            let dst = if c.is_some_and(|c| idx & c == 0) {
                idx
            } else {
                self.with_reg(idx, reg, f(self.reg_value(idx, reg)))
            };
            out[dst] += a;
        }
        self.amps = out;
        Ok(())
    }

    /// `|x> -> |a x mod N>` for `x < N`; other values are left alone.
    pub fn apply_cmul_mod(&mut self, a: u64, modulus: u64, reg: RegisterRange, control: Option<usize>) -> Result<()> {
        self.permute(reg, control, |x| if x < modulus { (a as u128 * x as u128 % modulus as u128) as u64 } else { x })
    }

    pub fn apply_add(&mut self, a: u64, reg: RegisterRange) -> Result<()> {
        let mask = (1u64 << reg.width()) - 1;
        self.permute(reg, None, |x| x.wrapping_add(a) & mask)
    }

    pub fn apply_add_mod(&mut self, a: u64, modulus: u64, reg: RegisterRange) -> Result<()> {
        self.permute(reg, None, |x| if x < modulus { (x + a % modulus) % modulus } else { x })
    }

    /// Full inverse QFT matrix `F[m][x] = e^{-2 pi i m x / 2^k} / sqrt(2^k)` on `reg`.
    pub fn apply_qft_inv(&mut self, reg: RegisterRange) -> Result<()> {
        reg.check_within(self.qubits)?;
        let size = 1u64 << reg.width();
        let norm = 1.0 / (size as f64).sqrt();
        let mut out = vec![Complex64::zero(); self.amps.len()];
        for (idx, &a) in self.amps.iter().enumerate() {
            if a == Complex64::zero() {
                continue;
            }
            let x = self.reg_value(idx, reg);
            for m in 0..size {
                let theta = -2.0 * PI * ((m * x) % size) as f64 / size as f64;
                out[self.with_reg(idx, reg, m)] += a * Complex64::from_polar(norm, theta);
            }
        }
        self.amps = out;
        Ok(())
    }

    /// Probability that `reg` reads each value.
    pub fn register_marginal(&self, reg: RegisterRange) -> Vec<f64> {
        let mut p = vec![0.0; 1 << reg.width()];
        for (idx, a) in self.amps.iter().enumerate() {
            p[self.reg_value(idx, reg) as usize] += a.norm_sqr();
        }
        p
    }

    /// Projects onto `reg == value` and renormalizes.
    pub fn collapse_to(&mut self, reg: RegisterRange, value: u64) -> Result<()> {
        reg.check_within(self.qubits)?;
        for idx in 0..self.amps.len() {
            if self.reg_value(idx, reg) != value {
                self.amps[idx] = Complex64::zero();
            }
        }
        let n = self.norm_sqr();
        if n == 0.0 {
            return Err(QumvnError::Annihilated(0.0));
        }
        let s = 1.0 / n.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }
}
