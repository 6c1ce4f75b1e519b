//! Bit-reversal update schedule for the dynamic instance.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Reverse the low `bits` bits of `i`.
pub fn bit_reversal(i: u64, bits: u32) -> Result<u64> {
    if bits > 63 || i >= (1u64 << bits) {
        return Err(Error::OutOfRange {
            value: i,
            limit: 1u64.checked_shl(bits).unwrap_or(u64::MAX),
        });
    }
    if bits == 0 {
        return Ok(0);
    }
    Ok(i.reverse_bits() >> (64 - bits))
}

/// Column positions `σ(i) + 1` updated at steps `0..steps`; `steps` must be a
/// power of two.
pub fn schedule(steps: u64) -> Result<Vec<u64>> {
    if steps == 0 || !steps.is_power_of_two() {
        return Err(Error::InvalidParams(format!(
            "steps {steps} is not a power of two"
        )));
    }
    let bits = steps.trailing_zeros();
    (0..steps)
        .map(|i| bit_reversal(i, bits).map(|s| s + 1))
        .collect()
}

/// Whether `ja` and `jb` interleave: disjoint, exactly one element of `ja`
/// strictly between each pair of consecutive elements of `jb`, at most one
/// below `min jb`, none above `max jb`.
pub fn interleave_check(ja: &BTreeSet<u64>, jb: &BTreeSet<u64>) -> bool {
    if !ja.is_disjoint(jb) || jb.is_empty() {
        return jb.is_empty() && ja.len() <= 1;
    }
    let b: Vec<u64> = jb.iter().copied().collect();
    if ja.range(b[b.len() - 1]..).next().is_some() {
        return false;
    }
    if ja.range(..b[0]).count() > 1 {
        return false;
    }
    b.windows(2).all(|w| ja.range(w[0] + 1..w[1]).count() == 1)
}
