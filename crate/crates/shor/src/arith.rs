//! Integer helpers for the classical side.

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Integer `k`-th root, rounded down.
fn iroot(n: u64, k: u32) -> u64 {
    let mut r = (n as f64).powf(1.0 / k as f64).round() as u64;
    while r > 0 && r.checked_pow(k).is_none_or(|v| v > n) {
        r -= 1;
    }
    while (r + 1).checked_pow(k).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// `Some((p, e))` when `n = p^e` for a prime `p` and `e >= 2`.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    (2..64).rev().find_map(|e| {
        let r = iroot(n, e);
        (r >= 2 && r.pow(e) == n && is_prime(r)).then_some((r, e))
    })
}

/// Multiplicative order of `a` mod `n` by direct iteration; `None` if `gcd(a, n) != 1`.
pub fn multiplicative_order(a: u64, n: u64) -> Option<u64> {
    if n < 2 || gcd(a, n) != 1 {
        return None;
    }
    let a = a % n;
    let (mut x, mut r) = (a, 1);
    while x != 1 {
        x = mul_mod(x, a, n);
        r += 1;
    }
    Some(r)
}

/// Bits needed to hold `0..n`, i.e. `ceil(log2 n)`.
pub fn bits_for(n: u64) -> usize {
    (64 - (n - 1).leading_zeros()) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_and_powers() {
        let brute = |n: u64| n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
        for n in 0..5000 {
            assert_eq!(is_prime(n), brute(n), "{n}");
        }
        assert!(is_prime(18_446_744_073_709_551_557));
        assert_eq!(prime_power(125), Some((5, 3)));
        assert_eq!(prime_power(49), Some((7, 2)));
        assert_eq!(prime_power(77), None);
        assert_eq!(prime_power(36), None);
    }

    #[test]
    fn orders() {
        assert_eq!(multiplicative_order(69, 77), Some(10));
        assert_eq!(multiplicative_order(73, 145), Some(28));
        assert_eq!(multiplicative_order(7, 15), Some(4));
        assert_eq!(multiplicative_order(5, 15), None);
        assert_eq!(pow_mod(73, 14, 145), 144);
    }

    #[test]
    fn bit_widths() {
        assert_eq!(bits_for(77), 7);
        assert_eq!(bits_for(15), 4);
        assert_eq!(bits_for(16), 4);
        assert_eq!(bits_for(17), 5);
        assert_eq!(bits_for(10057), 14);
    }
}
