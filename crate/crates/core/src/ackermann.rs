//! Ackermann function and its inverse.
//!
//! `A(1, j) = 2^j`, `A(i, 1) = A(i-1, 2)`, `A(i, j) = A(i-1, A(i, j-1))`, and
//! `α(m, n) = min{ i ≥ 1 : A(i, ⌊m/n⌋ + 1) > log2 n }`.
//!
//! Values are capped: every `log2 n` for a 64-bit `n` is below 64, so anything
//! at or above [`CAP`] is as good as infinite. Capping is exact below the cap
//! because `A` is increasing and `A(i, j) > j`.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Saturation point of the memoized table.
pub const CAP: u64 = 1 << 16;

/// Memoized, capped Ackermann table.
#[derive(Debug, Default, Clone)]
pub struct AckermannOracle {
    memo: HashMap<(u32, u64), u64>,
}

impl AckermannOracle {
    pub fn new() -> Self {
        Self::default()
    }

    /// `min(A(i, j), CAP)` for `i, j ≥ 1`.
    pub fn value(&mut self, i: u32, j: u64) -> u64 {
        assert!(i >= 1 && j >= 1, "Ackermann arguments start at 1");
        if j >= CAP {
            return CAP;
        }
        if let Some(&v) = self.memo.get(&(i, j)) {
            return v;
        }
        let v = if i == 1 {
            if j >= 16 {
                CAP
            } else {
                1u64 << j
            }
        } else if j == 1 {
            self.value(i - 1, 2)
        } else {
            let inner = self.value(i, j - 1);
            if inner >= CAP {
                CAP
            } else {
                self.value(i - 1, inner)
            }
        };
        self.memo.insert((i, j), v);
        v
    }

    pub fn alpha(&mut self, m: u64, n: u64) -> Result<u32> {
        if n == 0 || m < n {
            return Err(Error::InvalidArgs(format!(
                "alpha needs m >= n >= 1, got m = {m}, n = {n}"
            )));
        }
        let j = m / n + 1;
        let log_n = (n as f64).log2();
        let mut i = 1;
        loop {
            if self.value(i, j) as f64 > log_n {
                return Ok(i);
            }
            i += 1;
        }
    }
}

/// `α(m, n)`; see [`AckermannOracle::alpha`].
pub fn alpha(m: u64, n: u64) -> Result<u32> {
    AckermannOracle::new().alpha(m, n)
}

/// `α(max{a, b}, min{a, b})`, the form used by the link-find bounds.
pub fn alpha_sym(a: u64, b: u64) -> u32 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    alpha(hi.max(1), lo.max(1)).expect("max >= min >= 1")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal recursive definition, no memo and no cap. Only feasible for
    /// tiny arguments.
    fn ackermann_direct(i: u32, j: u64) -> u128 {
        if i == 1 {
            1u128 << j
        } else if j == 1 {
            ackermann_direct(i - 1, 2)
        } else {
            let inner = ackermann_direct(i, j - 1);
            ackermann_direct(i - 1, inner as u64)
        }
    }

    #[test]
    fn table_matches_direct_recursion() {
        let mut o = AckermannOracle::new();
        for j in 1..=10 {
            assert_eq!(o.value(1, j) as u128, ackermann_direct(1, j));
        }
        // A(2, j) = 2^2^...: A(2,1)=4, A(2,2)=16, A(2,3)=65536 (capped)
        assert_eq!(ackermann_direct(2, 1), 4);
        assert_eq!(ackermann_direct(2, 2), 16);
        assert_eq!(o.value(2, 1), 4);
        assert_eq!(o.value(2, 2), 16);
        assert_eq!(o.value(2, 3), CAP);
        assert_eq!(o.value(3, 1), 16);
        assert_eq!(o.value(3, 2), CAP);
    }

    #[test]
    fn alpha_one_one() {
        // floor(1/1)+1 = 2, A(1,2) = 4 > log2(1) = 0
        assert_eq!(alpha(1, 1).unwrap(), 1);
    }

    #[test]
    fn alpha_rejects_m_below_n() {
        assert!(matches!(alpha(3, 4), Err(Error::InvalidArgs(_))));
        assert!(alpha(0, 0).is_err());
    }

    #[test]
    fn alpha_n_n_is_at_most_four() {
        // A(4, 2) is astronomically larger than 64, and A(3, 2) already is.
        let mut o = AckermannOracle::new();
        assert!(o.value(4, 2) > 64);
        for shift in 0..64 {
            let n = 1u64 << shift;
            assert!(o.alpha(n, n).unwrap() <= 4);
        }
        assert!(o.alpha(u64::MAX, u64::MAX).unwrap() <= 4);
        // threshold crossings of this variant
        assert_eq!(o.alpha(1 << 15, 1 << 15).unwrap(), 2);
        assert_eq!(o.alpha(1 << 16, 1 << 16).unwrap(), 3);
        assert_eq!(o.alpha(15, 15).unwrap(), 1);
        assert_eq!(o.alpha(16, 16).unwrap(), 2);
    }

    #[test]
    fn alpha_non_increasing_in_m() {
        let mut o = AckermannOracle::new();
        for n in [1u64, 2, 7, 100, 1 << 20, 1 << 40] {
            let mut prev = u32::MAX;
            for k in 0..40u64 {
                let m = n.saturating_mul(1 + k * k);
                let a = o.alpha(m, n).unwrap();
                assert!(a <= prev);
                prev = a;
            }
        }
    }
}
