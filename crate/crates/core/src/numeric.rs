//! Logarithmic helpers shared by the schedules, budgets and load profiles.
//!
//! All logarithms are base 2. The clamps keep every term defined and at
//! least 1 for small arguments.

use crate::error::{Error, Result};

/// Weight of a node id: `log2(v + 1)`.
pub fn lambda_weight(v: u64) -> Result<f64> {
    if v == 0 {
        return Err(Error::ZeroId);
    }
    Ok(weight(v))
}

#[inline]
pub(crate) fn weight(v: u64) -> f64 {
    ((v as f64) + 1.0).log2()
}

/// `log2(max(k, 2))`.
#[inline]
pub fn safe_log(k: u64) -> f64 {
    (k.max(2) as f64).log2()
}

/// `log2(log2(x + 4))`, the time-offset term of the transmission schedule.
#[inline]
pub fn safe_loglog(x: u64) -> f64 {
    ((x as f64) + 4.0).log2().log2()
}

/// `log2(log2(max(k, 4)))`, the size term of the delay budgets.
#[inline]
pub fn loglog_size(k: u64) -> f64 {
    (k.max(4) as f64).log2().log2()
}

/// Phase length `2^ceil(1 + log2 log2 log2 j)`, with `z(j) = 2` for `j <= 4`.
///
/// Computed exactly: `ceil(log2 log2 log2 j) = m` iff `j <= 2^(2^(2^m))`.
pub fn z_phase(j: u64) -> u64 {
    match j {
        0..=4 => 2,
        5..=16 => 4,
        17..=65_536 => 8,
        // every u64 is below 2^256
        _ => 16,
    }
}

/// Exact `floor(log2(prod (v + 1)))` over the given ids, i.e. the floor of
/// the summed weights. Returns 0 for an empty set.
pub fn weight_floor<I: IntoIterator<Item = u64>>(ids: I) -> u64 {
    let mut product = WeightProduct::default();
    for v in ids {
        product.push(v);
    }
    product.floor()
}

/// Running product of `v + 1`, used to track `floor(sum of weights)` exactly
/// as nodes are added.
#[derive(Clone, Debug)]
pub(crate) struct WeightProduct(num_bigint::BigUint);

impl Default for WeightProduct {
    fn default() -> Self {
        Self(num_bigint::BigUint::from(1u32))
    }
}

impl WeightProduct {
    pub fn push(&mut self, v: u64) {
        self.0 *= num_bigint::BigUint::from(v) + 1u32;
    }

    pub fn floor(&self) -> u64 {
        self.0.bits() - 1
    }
}

/// The `r` of an instance: `max(1, floor(sum of weights))`.
pub fn instance_r<I: IntoIterator<Item = u64>>(ids: I) -> u64 {
    weight_floor(ids).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights() {
        assert_eq!(lambda_weight(1).unwrap(), 1.0);
        assert_eq!(lambda_weight(3).unwrap(), 2.0);
        assert_eq!(lambda_weight(1023).unwrap(), 10.0);
        assert!(matches!(lambda_weight(0), Err(Error::ZeroId)));
    }

    #[test]
    fn weight_is_increasing_and_approaches_log() {
        let mut prev = 0.0;
        for v in 1..5000u64 {
            let w = weight(v);
            assert!(w > prev);
            prev = w;
        }
        let v = 1u64 << 40;
        assert!(weight(v) - (v as f64).log2() < 1e-9);
    }

    #[test]
    fn safe_logs() {
        assert_eq!(safe_loglog(0), 1.0);
        assert_eq!(safe_loglog(12), 2.0);
        assert_eq!(safe_log(1), 1.0);
        assert_eq!(safe_log(16), 4.0);
        assert_eq!(loglog_size(1), 1.0);
        assert_eq!(loglog_size(16), 2.0);
    }

    fn z_by_floats(j: u64) -> u64 {
        let t = (j as f64).log2().log2().log2();
        1u64 << (1.0 + t).ceil() as u32
    }

    #[test]
    fn z_examples() {
        assert_eq!(z_phase(4), 2);
        assert_eq!(z_phase(16), 4);
        assert_eq!(z_phase(65_536), 8);
        assert_eq!(z_phase(65_537), 16);
    }

    #[test]
    fn z_matches_float_formula_away_from_boundaries() {
        for j in (5..200_000u64).chain([1 << 20, 1 << 40, u64::MAX]) {
            assert_eq!(z_phase(j), z_by_floats(j), "j = {j}");
        }
    }

    #[test]
    fn exact_floor_of_weights() {
        assert_eq!(weight_floor([1]), 1);
        assert_eq!(weight_floor([3, 7]), 5);
        assert_eq!(weight_floor([2]), 1);
        assert_eq!(weight_floor([1, 2]), 2);
        assert_eq!(weight_floor(std::iter::empty()), 0);
        assert_eq!(instance_r([1]), 1);
        // 1023 * 1 ids of weight 10 each: exactly 10 * 1023
        assert_eq!(weight_floor(std::iter::repeat_n(1023, 1023)), 10 * 1023);
    }
}
