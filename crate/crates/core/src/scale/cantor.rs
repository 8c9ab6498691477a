//! The standard Cantor function and its finite-depth approximations.
//!
//! Ternary digits are extracted exactly: every finite `f64` in `[0, 1]` is a dyadic
//! rational, so it is rescaled to an integer numerator over `2^125` and the digits are
//! produced by integer multiplication. No rounding enters until a digit would lie below
//! `2^-125`, far past any usable depth.

/// Largest depth accepted by [`cantor_function`].
pub const MAX_CANTOR_DEPTH: u32 = 64;

const FRAC_BITS: u32 = 125;
const FRAC_MASK: u128 = (1u128 << FRAC_BITS) - 1;

/// Exact numerator `N` with `x = N / 2^125` (truncated below `2^-125`), for `x` in `[0, 1)`.
fn dyadic_numerator(x: f64) -> u128 {
    debug_assert!((0.0..1.0).contains(&x));
    if x == 0.0 {
        return 0;
    }
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    // x = mant * 2^(exp)
    let (mant, exp) = if raw_exp == 0 {
        (frac as u128, -1074)
    } else {
        ((frac | (1u64 << 52)) as u128, raw_exp - 1075)
    };
    let shift = exp + FRAC_BITS as i32;
    if shift >= 0 {
        mant << shift
    } else if shift > -128 {
        mant >> (-shift)
    } else {
        0
    }
}

/// Depth-truncated Cantor function `c_n(x)`.
///
/// Reads the first `depth` ternary digits of `x`. If a digit 1 appears at position `k`
/// the exact plateau value is returned; otherwise the binary value of the halved digits
/// is returned, which is the left end of the depth-`n` value range. Hence `c_n` is a
/// right-continuous step function, exact on every plateau of generation `≤ depth`.
///
/// Out-of-range arguments are clamped: `c(x) = 0` for `x < 0`, `c(x) = 1` for `x ≥ 1`.
/// `depth` is capped at [`MAX_CANTOR_DEPTH`].
pub fn cantor_function(x: f64, depth: u32) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let depth = depth.clamp(1, MAX_CANTOR_DEPTH);
    let mut num = dyadic_numerator(x);
    let mut value = 0.0;
    let mut weight = 0.5;
    for _ in 0..depth {
        num *= 3;
        let digit = (num >> FRAC_BITS) as u8;
        num &= FRAC_MASK;
        match digit {
            0 => {}
            1 => return value + weight,
            _ => value += weight,
        }
        weight *= 0.5;
    }
    value
}

/// Left limit `c_n(x-)` of the truncated Cantor function.
///
/// Differs from [`cantor_function`] only at jump points; the only jump point that is
/// representable as an `f64` inside `(0, 1]` is `x = 1`.
pub(crate) fn cantor_left_limit(x: f64, depth: u32) -> f64 {
    if x >= 1.0 {
        if x == 1.0 {
            1.0 - 0.5f64.powi(depth.clamp(1, MAX_CANTOR_DEPTH) as i32)
        } else {
            1.0
        }
    } else {
        cantor_function(x, depth)
    }
}

/// Left endpoints of the `2^n` surviving triadic intervals of generation `n`, in order.
pub(crate) fn surviving_left_endpoints(depth: u32) -> Vec<f64> {
    let count = 1usize << depth;
    let powers: Vec<f64> = (1..=depth).map(|k| 3f64.powi(-(k as i32))).collect();
    (0..count)
        .map(|j| {
            (0..depth as usize)
                .filter(|&k| (j >> (depth as usize - 1 - k)) & 1 == 1)
                .map(|k| 2.0 * powers[k])
                .sum()
        })
        .collect()
}
