use std::fmt;
use std::str::FromStr;

use qumvn_core::RegisterRange;
use rand::Rng;
use thiserror::Error;

use crate::arith::{bits_for, gcd, is_prime, prime_power};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ShorError {
    #[error("{n} is even: {n} = 2 x {}", n / 2)]
    Even { n: u64 },
    #[error("{0} is too small; need an odd composite >= 15")]
    TooSmall(u64),
    #[error("{0} is prime")]
    Prime(u64),
    #[error("{n} = {base}^{exp} is a prime power")]
    PrimePower { n: u64, base: u64, exp: u32 },
    #[error("witness {a} must lie in 2..{n}")]
    BadWitness { a: u64, n: u64 },
    #[error("witness {a} shares the factor {factor} with {n}")]
    NotCoprime { a: u64, n: u64, factor: u64 },
    #[error("{n} needs a {upper}-qubit control register; at most 63 are supported")]
    TooLarge { n: u64, upper: usize },
}

/// How the control-register width `k` follows from `N` and the work width `n = ceil(log2 N)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SizingPolicy {
    /// `k = 2n - 1`.
    #[default]
    TwiceLowerMinusOne,
    /// Smallest `k` with `N^2 <= 2^k` (hence `2^k < 2 N^2`).
    SquareBound,
}

impl SizingPolicy {
    pub fn upper_size(self, n: u64) -> usize {
        match self {
            SizingPolicy::TwiceLowerMinusOne => 2 * bits_for(n) - 1,
            SizingPolicy::SquareBound => {
                let sq = n as u128 * n as u128;
                (0..128).find(|&k| 1u128 << k >= sq).unwrap()
            }
        }
    }
}

impl fmt::Display for SizingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizingPolicy::TwiceLowerMinusOne => "twice-lower",
            SizingPolicy::SquareBound => "square-bound",
        })
    }
}

impl FromStr for SizingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "twice-lower" => Ok(SizingPolicy::TwiceLowerMinusOne),
            "square-bound" => Ok(SizingPolicy::SquareBound),
            other => Err(format!("unknown sizing policy `{other}` (twice-lower, square-bound)")),
        }
    }
}

/// A sized period-finding problem. The control register is qubits `1..=upper`,
/// the work register `upper+1..=upper+lower`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShorInstance {
    pub n: u64,
    pub a: u64,
    pub lower: usize,
    pub upper: usize,
}

impl ShorInstance {
    pub fn new(n: u64, a: u64, sizing: SizingPolicy) -> Result<Self, ShorError> {
        check_modulus(n)?;
        if a < 2 || a >= n {
            return Err(ShorError::BadWitness { a, n });
        }
        let g = gcd(a, n);
        if g != 1 {
            return Err(ShorError::NotCoprime { a, n, factor: g });
        }
        let upper = sizing.upper_size(n);
        if upper > 63 {
            return Err(ShorError::TooLarge { n, upper });
        }
        Ok(ShorInstance { n, a, lower: bits_for(n), upper })
    }

    /// Qubits held in the simulated state.
    pub fn declared_qubits(&self) -> usize {
        self.upper + self.lower
    }

    /// Ancilla count a reversible arithmetic circuit would need, `2n + 1`.
    pub fn arithmetic_qubits(&self) -> usize {
        2 * self.lower + 1
    }

    /// Control + ancilla + work qubits, as usually quoted for a circuit model.
    pub fn reported_total(&self) -> usize {
        self.upper + self.arithmetic_qubits() + self.lower
    }

    pub fn upper_register(&self) -> RegisterRange {
        RegisterRange::new(1, self.upper).expect("upper register")
    }

    pub fn lower_register(&self) -> RegisterRange {
        RegisterRange::new(self.upper + 1, self.upper + self.lower).expect("lower register")
    }
}

fn check_modulus(n: u64) -> Result<(), ShorError> {
    if n % 2 == 0 && n >= 4 {
        return Err(ShorError::Even { n });
    }
    if n < 15 {
        return Err(ShorError::TooSmall(n));
    }
    if is_prime(n) {
        return Err(ShorError::Prime(n));
    }
    if let Some((base, exp)) = prime_power(n) {
        return Err(ShorError::PrimePower { n, base, exp });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plan {
    Quantum(ShorInstance),
    /// The witness already shares a factor with `N`; no quantum step needed.
    Classical { a: u64, p: u64, q: u64 },
}

/// Validates `n`, picks a witness if none is given and sizes the registers.
pub fn plan_instance<R: Rng + ?Sized>(
    n: u64,
    witness: Option<u64>,
    sizing: SizingPolicy,
    rng: &mut R,
) -> Result<Plan, ShorError> {
    check_modulus(n)?;
    let a = witness.unwrap_or_else(|| rng.gen_range(2..n));
    match ShorInstance::new(n, a, sizing) {
        Ok(inst) => Ok(Plan::Quantum(inst)),
        Err(ShorError::NotCoprime { a, n, factor }) => {
            let (p, q) = (factor.min(n / factor), factor.max(n / factor));
            Ok(Plan::Classical { a, p, q })
        }
        Err(e) => Err(e),
    }
}

/// `.qudot` source for period finding on `inst`, sampling `ensemble` times at the end.
pub fn generate_program(inst: &ShorInstance, ensemble: u64) -> String {
    let (k, l) = (inst.upper, inst.lower);
    let total = k + l;
    format!(
        "\
// Period finding for {n} with witness {a}: {k} control qubits, {l} work qubits.
.qudot qubits={total}, ensemble={ensemble}

.gate main: args=0, regs=9, qubit_regs=7
// control register bounds
iload r1, 1
iload r2, {k}
// work register bounds
iload r3, {k1}
iload r4, {total}

qload_seq q0, 1, {k}
qloadr q1, r3
qloadr q2, r4

// uniform control register, work register holds 1
hon q0
xon q2

// modulus
iload r5, {n}
// witness
iload r6, {a}

// r7 walks the control qubits from k down to 1, r9 counts squarings
move r7, r2
iload r9, 0
ModExp:
printr r7
brlez r7, doneModExp
modpow r8, r6, r9, r5
qloadr q3, r7
ciqumul_mod r8, r5, q1, q2, q3
decr r7
incr r9
br ModExp

doneModExp:
// measure the work register
qload_seq q4, {k1}, {total}
mon q4

printr r7
qloadr q5, r1
qloadr q6, r2
qft_inv q5, q6

printr r7
halt
",
        n = inst.n,
        a = inst.a,
        k1 = k + 1,
    )
}
