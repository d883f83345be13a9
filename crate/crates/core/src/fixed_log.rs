//! Certified fixed-point natural logarithms of big integers.
//!
//! `ln_interval(x, w)` returns integers `(lo, hi)` with
//! `lo <= ln(x) * 2^w <= hi`. The computation uses only integer arithmetic:
//! `x = 2^k * m` with `m` in `[1, 2)`, `ln x = k ln 2 + 2 atanh(z)` where
//! `z = (x - 2^k) / (x + 2^k) < 1/3`, and `ln 2 = 2 atanh(1/3)`. Every series
//! term is truncated downward and the accumulated truncation plus the series
//! tail is added back to form the upper end.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

/// Floor-truncated partial sum of `atanh(num/den) * 2^prec` and a bound on the
/// amount it falls short of the true value. Requires `num/den <= 1/3`.
fn atanh_fixed(num: &BigUint, den: &BigUint, prec: u64) -> (BigUint, BigUint) {
    if num.is_zero() {
        return (BigUint::zero(), BigUint::zero());
    }
    let num2 = num * num;
    let den2 = den * den;
    let mut pw = (num << prec) / den;
    let mut sum = BigUint::zero();
    let mut n: u64 = 0;
    while !pw.is_zero() {
        sum += &pw / BigUint::from(2 * n + 1);
        n += 1;
        pw = pw * &num2 / &den2;
    }
    // term i is short by at most (i + 1) / (2i + 1) + 1 <= 2 units; the
    // neglected tail is at most 9/8 * (n + 1) units.
    let err = BigUint::from(2 * n + 2 * (n + 1) + 2);
    (sum, err)
}

fn ceil_log2(x: u64) -> u64 {
    64 - x.saturating_sub(1).leading_zeros() as u64
}

/// Certified enclosure of `ln(x) * 2^w` for `x >= 1`.
pub(crate) fn ln_interval(x: &BigUint, w: u64) -> (BigInt, BigInt) {
    assert!(!x.is_zero(), "logarithm of zero");
    if x.is_one() {
        return (BigInt::zero(), BigInt::zero());
    }
    let k = x.bits() - 1;
    // series length is about prec / 3; leave room for (terms)^2 and the k multiplier
    let guard = 2 * ceil_log2(w + 64) + ceil_log2(k + 2) + 16;
    let prec = w + guard;

    let (l2, l2_err) = atanh_fixed(&BigUint::one(), &BigUint::from(3u32), prec);
    let pow2k = BigUint::one() << k;
    let (at, at_err) = atanh_fixed(&(x - &pow2k), &(x + &pow2k), prec);

    let kk = BigUint::from(k);
    let lo = (&kk * &l2 + &at) << 1u32;
    let hi = (&kk * (&l2 + &l2_err) + &at + &at_err) << 1u32;

    let lo = BigInt::from(lo >> guard);
    let mask = (BigUint::one() << guard) - 1u32;
    let round_up = !(&hi & &mask).is_zero();
    let mut hi = hi >> guard;
    if round_up {
        hi += 1u32;
    }
    (lo, BigInt::from(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::ToBigInt;

    // 60 decimals, independently tabulated
    const LN2: &str = "0.693147180559945309417232121458176568075500134360255254120680";
    const LN3: &str = "1.098612288668109691395245236922525704647490557822749451734694";
    const LN10: &str = "2.302585092994045684017991454684364207601101488628772976033328";

    fn encloses(x: u64, digits: &str, w: u64) -> bool {
        let (lo, hi) = ln_interval(&BigUint::from(x), w);
        let clean: String = digits.chars().filter(|c| *c != '.').collect();
        let d: BigInt = clean.parse().unwrap();
        let frac_digits = digits.split('.').nth(1).unwrap().len() as u32;
        let scale = BigInt::from(10u32).pow(frac_digits);
        let two_w = BigInt::one() << w;
        // lo / 2^w <= d / 10^f + 10^-f   and   hi / 2^w >= d / 10^f
        &lo * &scale <= (&d + 1) * &two_w && &hi * &scale >= &d * &two_w
    }

    #[test]
    fn encloses_tabulated_constants() {
        for w in [16, 64, 128, 180] {
            assert!(encloses(2, LN2, w), "ln 2 at w = {w}");
            assert!(encloses(3, LN3, w), "ln 3 at w = {w}");
            assert!(encloses(10, LN10, w), "ln 10 at w = {w}");
        }
    }

    #[test]
    fn interval_is_tight() {
        for x in [2u64, 3, 5, 7, 8, 1000, u64::MAX] {
            let (lo, hi) = ln_interval(&BigUint::from(x), 200);
            assert!(lo <= hi);
            assert!(&hi - &lo < 64.to_bigint().unwrap(), "x = {x}");
        }
    }

    #[test]
    fn agrees_with_f64() {
        for x in [2u64, 3, 17, 1 << 40, 123_456_789] {
            let (lo, hi) = ln_interval(&BigUint::from(x), 60);
            let scale = (1u64 << 60) as f64;
            let lo = lo.to_string().parse::<f64>().unwrap() / scale;
            let hi = hi.to_string().parse::<f64>().unwrap() / scale;
            let f = (x as f64).ln();
            assert!(lo <= f * (1.0 + 1e-15) && f <= hi * (1.0 + 1e-15), "x = {x}");
        }
    }

    #[test]
    fn one_is_exact_zero() {
        let (lo, hi) = ln_interval(&BigUint::one(), 100);
        assert!(lo.is_zero() && hi.is_zero());
    }
}
