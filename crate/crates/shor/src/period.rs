//! Turning a measured control-register value into a period and factors.

use std::fmt;
use std::str::FromStr;

use crate::arith::{gcd, pow_mod};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PeriodPolicy {
    #[default]
    /// Denominator of the closest fraction to `m / 2^k` with denominator at
    /// most `N`, used as the period without checking it.
    BestApproximation,
    /// Smallest convergent denominator `d` within `2^-(k/2 + 1)` of `m / 2^k`
    /// for which some multiple `d t` (`t <= max_multiple`) satisfies `a^(d t) = 1 mod N`.
    OrderChecked { max_multiple: u64 },
}

impl PeriodPolicy {
    pub fn order_checked() -> Self {
        PeriodPolicy::OrderChecked { max_multiple: 6 }
    }
}

impl fmt::Display for PeriodPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeriodPolicy::BestApproximation => f.write_str("best-approx"),
            PeriodPolicy::OrderChecked { max_multiple } => write!(f, "order-checked:{max_multiple}"),
        }
    }
}

impl FromStr for PeriodPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "best-approx" => Ok(PeriodPolicy::BestApproximation),
            None if s == "order-checked" => Ok(PeriodPolicy::order_checked()),
            Some(("order-checked", t)) => t
                .parse()
                .map(|max_multiple| PeriodPolicy::OrderChecked { max_multiple })
                .map_err(|_| format!("bad multiple bound `{t}`")),
            _ => Err(format!("unknown period policy `{s}` (best-approx, order-checked[:T])")),
        }
    }
}

/// Convergents `(p, q)` of `num / den`, in order of increasing denominator.
pub fn convergents(num: u64, den: u64) -> Vec<(u64, u64)> {
    let (mut n, mut d) = (num as u128, den as u128);
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    let mut out = Vec::new();
    while d != 0 {
        let a = n / d;
        (p0, q0, p1, q1) = (p1, q1, a * p1 + p0, a * q1 + q0);
        out.push((p1 as u64, q1 as u64));
        (n, d) = (d, n - a * d);
    }
    out
}

/// `|p/q - m/den|` compared as the integer `|p den - m q|` over `q den`.
fn distance(p: u64, q: u64, m: u64, den: u64) -> (u128, u128) {
    let diff = (p as i128 * den as i128 - m as i128 * q as i128).unsigned_abs();
    (diff, q as u128 * den as u128)
}

/// Closest fraction to `num / den` with denominator at most `max_den`.
pub fn best_approximation(num: u64, den: u64, max_den: u64) -> (u64, u64) {
    let g = gcd(num, den).max(1);
    let (num, den) = (num / g, den / g);
    if den <= max_den {
        return (num, den);
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    let (mut n, mut d) = (num as u128, den as u128);
    loop {
        let a = n / d;
        let q2 = q0 + a * q1;
        if q2 > max_den as u128 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p0 + a * p1, q2);
        (n, d) = (d, n - a * d);
    }
    let t = (max_den as u128 - q0) / q1;
    let semi = ((p0 + t * p1) as u64, (q0 + t * q1) as u64);
    let conv = (p1 as u64, q1 as u64);
    let (dc, sc) = distance(conv.0, conv.1, num, den);
    let (ds, ss) = distance(semi.0, semi.1, num, den);
    // dc/sc <= ds/ss
    if dc * ss <= ds * sc {
        conv
    } else {
        semi
    }
}

/// Candidate period for control-register reading `m` on `k` qubits.
pub fn recover_period(m: u64, k: usize, n: u64, a: u64, policy: PeriodPolicy) -> Option<u64> {
    if m == 0 {
        return None;
    }
    let den = 1u64 << k;
    match policy {
        PeriodPolicy::BestApproximation => Some(best_approximation(m, den, n).1),
        PeriodPolicy::OrderChecked { max_multiple } => {
            let tol = 2f64.powf(-(k as f64 / 2.0 + 1.0));
            convergents(m, den)
                .into_iter()
                .take_while(|&(_, q)| q <= n)
                .filter(|&(p, q)| {
                    let (diff, scale) = distance(p, q, m, den);
                    diff as f64 / scale as f64 <= tol
                })
                .find_map(|(_, q)| (1..=max_multiple).map(|t| q * t).find(|&r| pow_mod(a, r, n) == 1))
        }
    }
}

/// Factors from an even period: `gcd(a^(r/2) +- 1, N)` when nontrivial, as `(p, q)` with `p <= q`.
pub fn factors_from_period(r: u64, a: u64, n: u64) -> Option<(u64, u64)> {
    if r == 0 || r % 2 == 1 {
        return None;
    }
    let y = pow_mod(a, r / 2, n);
    [gcd((y + n - 1) % n, n), gcd((y + 1) % n, n)]
        .into_iter()
        .find(|&g| g > 1 && g < n)
        .map(|g| (g.min(n / g), g.max(n / g)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergents_of_three_quarters() {
        assert_eq!(convergents(192, 256), vec![(0, 1), (1, 1), (3, 4)]);
    }

    #[test]
    fn order_checked_examples() {
        let p = PeriodPolicy::order_checked();
        assert_eq!(recover_period(64, 8, 15, 7, p), Some(4));
        assert_eq!(recover_period(192, 8, 15, 7, p), Some(4));
        assert_eq!(recover_period(0, 8, 15, 7, p), None);
        assert_eq!(recover_period(128, 8, 15, 7, p), Some(4));
    }

    #[test]
    fn best_approximation_matches_reference_values() {
        // closest fractions with bounded denominator, checked by hand
        assert_eq!(best_approximation(3, 10, 3), (1, 3));
        assert_eq!(best_approximation(314159, 100000, 100), (311, 99));
        assert_eq!(best_approximation(1, 4, 10), (1, 4));
        assert_eq!(best_approximation(819, 8192, 77), (1, 10));
        assert_eq!(recover_period(128, 8, 15, 7, PeriodPolicy::BestApproximation), Some(2));
    }

    #[test]
    fn factors() {
        assert_eq!(factors_from_period(10, 69, 77), Some((7, 11)));
        assert_eq!(factors_from_period(4, 7, 15), Some((3, 5)));
        assert_eq!(factors_from_period(3, 7, 15), None);
        // 73^14 = -1 mod 145
        assert_eq!(factors_from_period(28, 73, 145), None);
    }

    #[test]
    fn policy_text() {
        assert_eq!("order-checked:4".parse::<PeriodPolicy>(), Ok(PeriodPolicy::OrderChecked { max_multiple: 4 }));
        assert_eq!(PeriodPolicy::default().to_string().parse::<PeriodPolicy>(), Ok(PeriodPolicy::BestApproximation));
    }
}
