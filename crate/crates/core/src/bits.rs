use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::error::{QumvnError, Result};

/// Measurement outcome. Position 0 holds qubit 1, the most significant bit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    /// Big-endian encoding of `value` over `width` bits.
    pub fn from_value(value: u64, width: usize) -> Self {
        BitString((0..width).map(|i| (value >> (width - 1 - i)) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Value of a 1-based qubit.
    pub fn bit(&self, qubit: usize) -> bool {
        self.0[qubit - 1]
    }

    pub fn register_value(&self, reg: RegisterRange) -> u64 {
        self.0[reg.start - 1..reg.end]
            .iter()
            .fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn set_register(&mut self, reg: RegisterRange, value: u64) {
        let width = reg.width();
        for (i, q) in reg.qubits().enumerate() {
            self.0[q - 1] = (value >> (width - 1 - i)) & 1 == 1;
        }
    }

    /// Whole string as an integer; callers keep `len() <= 64`.
    pub fn to_index(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        BitString(bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl FromStr for BitString {
    type Err = QumvnError;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(QumvnError::BadBitString(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

/// Contiguous block of qubits, 1-based and inclusive; `start` is the most significant bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RegisterRange {
    start: usize,
    end: usize,
}

impl RegisterRange {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start == 0 || start > end {
            return Err(QumvnError::InvalidRegister { start, end, qubits: 0 });
        }
        if end - start + 1 > 63 {
            return Err(QumvnError::RegisterTooWide(end - start + 1));
        }
        Ok(RegisterRange { start, end })
    }

    pub fn single(qubit: usize) -> Result<Self> {
        Self::new(qubit, qubit)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn width(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn contains(&self, qubit: usize) -> bool {
        (self.start..=self.end).contains(&qubit)
    }

    pub fn qubits(&self) -> RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn check_within(&self, qubits: usize) -> Result<()> {
        if self.end > qubits {
            return Err(QumvnError::InvalidRegister { start: self.start, end: self.end, qubits });
        }
        Ok(())
    }
}

impl fmt::Display for RegisterRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..={}", self.start, self.end)
    }
}
