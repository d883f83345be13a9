//! Exact comparison of products of integer powers.
//!
//! A [`PowerProduct`] is a formal product `c_1^e_1 * ... * c_n^e_n` with
//! integer bases `c_i > 1` and signed arbitrary-precision exponents. Nothing is
//! expanded unless a comparison cannot be settled otherwise. Comparing against
//! one goes through four tiers:
//!
//! 1. the bases are refined into a pairwise co-prime basis, so the product is
//!    exactly one iff every exponent vanishes;
//! 2. a double-precision estimate of `sum e_i ln c_i` with a generous error
//!    margin;
//! 3. full expansion when both sides are small;
//! 4. certified fixed-point logarithms at doubling precision, and, as a last
//!    resort, full expansion subject to the bit cap.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fixed_log::ln_interval;

/// Below this many bits a straddling prescreen is settled by plain expansion.
const EXACT_CHEAP_BITS: f64 = 65_536.0;
/// Highest working precision for the certified-logarithm tier.
const LOG_MAX_BITS: u64 = 1 << 17;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PowerProduct {
    // sorted by base, bases > 1, exponents non-zero, bases distinct
    factors: Vec<(BigUint, BigInt)>,
}

impl PowerProduct {
    pub fn one() -> Self {
        PowerProduct::default()
    }

    pub fn power(base: impl Into<BigUint>, exp: impl Into<BigInt>) -> Self {
        Self::from_factors(vec![(base.into(), exp.into())])
    }

    pub fn integer(n: impl Into<BigUint>) -> Self {
        Self::power(n, 1)
    }

    /// `num / den`; both must be non-zero.
    pub fn ratio(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Self {
        Self::from_factors(vec![(num.into(), BigInt::one()), (den.into(), -BigInt::one())])
    }

    /// A positive rational.
    pub fn from_rational(r: &BigRational) -> Self {
        assert!(r.is_positive(), "power products are positive");
        Self::ratio(
            r.numer().magnitude().clone(),
            r.denom().magnitude().clone(),
        )
    }

    pub fn from_factors(raw: Vec<(BigUint, BigInt)>) -> Self {
        let mut factors: Vec<(BigUint, BigInt)> = Vec::with_capacity(raw.len());
        for (base, exp) in raw {
            assert!(!base.is_zero(), "zero base in power product");
            if base.is_one() || exp.is_zero() {
                continue;
            }
            factors.push((base, exp));
        }
        factors.sort_by(|x, y| x.0.cmp(&y.0));
        let mut merged: Vec<(BigUint, BigInt)> = Vec::with_capacity(factors.len());
        for (base, exp) in factors {
            match merged.last_mut() {
                Some((b, e)) if *b == base => *e += exp,
                _ => merged.push((base, exp)),
            }
        }
        merged.retain(|(_, e)| !e.is_zero());
        PowerProduct { factors: merged }
    }

    pub fn factors(&self) -> &[(BigUint, BigInt)] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn mul(&self, other: &PowerProduct) -> PowerProduct {
        let mut raw = self.factors.clone();
        raw.extend(other.factors.iter().cloned());
        Self::from_factors(raw)
    }

    pub fn recip(&self) -> PowerProduct {
        PowerProduct {
            factors: self.factors.iter().map(|(b, e)| (b.clone(), -e)).collect(),
        }
    }

    pub fn div(&self, other: &PowerProduct) -> PowerProduct {
        self.mul(&other.recip())
    }

    pub fn pow(&self, k: &BigInt) -> PowerProduct {
        if k.is_zero() {
            return PowerProduct::one();
        }
        PowerProduct {
            factors: self.factors.iter().map(|(b, e)| (b.clone(), e * k)).collect(),
        }
    }

    /// Exact three-way comparison of the two values.
    pub fn compare(&self, other: &PowerProduct, bit_cap: u64) -> Result<Ordering> {
        self.div(other).cmp_one(bit_cap)
    }

    /// Exact comparison of the value against one.
    pub fn cmp_one(&self, bit_cap: u64) -> Result<Ordering> {
        let basis = coprime_basis(&self.factors);
        if basis.is_empty() {
            return Ok(Ordering::Equal);
        }
        if let Some(ord) = float_prescreen(&basis) {
            return Ok(ord);
        }
        let bits = expanded_bits(&basis);
        if bits <= EXACT_CHEAP_BITS {
            return exact_sign(&basis, bit_cap);
        }
        let max_exp_bits = basis.iter().map(|(_, e)| e.bits()).max().unwrap_or(0);
        let mut w = 96 + max_exp_bits;
        while w <= LOG_MAX_BITS.min(bit_cap) {
            if let Some(ord) = certified_log_sign(&basis, w) {
                return Ok(ord);
            }
            w *= 2;
        }
        exact_sign(&basis, bit_cap)
    }

    /// Numerator and denominator as full integers, subject to the bit cap.
    pub fn expand(&self, bit_cap: u64) -> Result<(BigUint, BigUint)> {
        let mut num = BigUint::one();
        let mut den = BigUint::one();
        for (base, exp) in &self.factors {
            let p = checked_pow(base, &exp.abs(), bit_cap)?;
            if exp.is_positive() {
                num *= p;
            } else {
                den *= p;
            }
            check_bits(num.bits().max(den.bits()), bit_cap)?;
        }
        Ok((num, den))
    }

    pub fn to_rational(&self, bit_cap: u64) -> Result<BigRational> {
        let (n, d) = self.expand(bit_cap)?;
        Ok(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// Natural logarithm to about double precision, free of cancellation.
    pub fn ln_approx(&self) -> f64 {
        if self.factors.is_empty() {
            return 0.0;
        }
        let mut sum = 0.0f64;
        let mut mag = 0.0f64;
        let mut finite = true;
        for (base, exp) in &self.factors {
            match exp.to_f64() {
                Some(e) if e.is_finite() => {
                    let t = e * ln_f64(base);
                    sum += t;
                    mag += t.abs();
                }
                _ => finite = false,
            }
        }
        if finite && sum.abs() > mag * 1e-6 {
            return sum;
        }
        let max_exp_bits = self.factors.iter().map(|(_, e)| e.bits()).max().unwrap_or(0);
        let w = 128 + 2 * max_exp_bits;
        let (lo, _) = log_bounds(&self.factors, w);
        fixed_to_f64(&lo, w)
    }

    /// Rough size of the fully expanded numerator or denominator, in bits.
    pub fn expanded_bits(&self) -> f64 {
        expanded_bits(&self.factors)
    }
}

impl fmt::Display for PowerProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = |pos: bool| -> Vec<String> {
            self.factors
                .iter()
                .filter(|(_, e)| e.is_positive() == pos)
                .map(|(b, e)| {
                    let e = e.abs();
                    if e.is_one() {
                        b.to_string()
                    } else {
                        format!("{b}^{e}")
                    }
                })
                .collect()
        };
        let num = part(true);
        let den = part(false);
        let num = if num.is_empty() { "1".to_string() } else { num.join("*") };
        if den.is_empty() {
            write!(f, "{num}")
        } else {
            write!(f, "{num}/{}", den.join("*"))
        }
    }
}

/// Rewrites the factors over a pairwise co-prime set of bases.
fn coprime_basis(factors: &[(BigUint, BigInt)]) -> Vec<(BigUint, BigInt)> {
    let mut work: Vec<(BigUint, BigInt)> = factors.to_vec();
    'outer: loop {
        for i in 0..work.len() {
            for j in (i + 1)..work.len() {
                let g = work[i].0.gcd(&work[j].0);
                if !g.is_one() {
                    let (bi, ei) = work[i].clone();
                    let (bj, ej) = work[j].clone();
                    work[i] = (bi / &g, ei.clone());
                    work[j] = (bj / &g, ej.clone());
                    work.push((g, ei + ej));
                    work = PowerProduct::from_factors(work).factors;
                    continue 'outer;
                }
            }
        }
        return work;
    }
}

pub(crate) fn ln_f64(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        (x.to_u64().unwrap() as f64).ln()
    } else {
        let shift = bits - 64;
        let top = (x >> shift).to_u64().unwrap();
        (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
    }
}

fn float_prescreen(factors: &[(BigUint, BigInt)]) -> Option<Ordering> {
    let mut sum = 0.0f64;
    let mut mag = 0.0f64;
    for (base, exp) in factors {
        let e = exp.to_f64()?;
        if !e.is_finite() {
            return None;
        }
        let t = e * ln_f64(base);
        sum += t;
        mag += t.abs();
    }
    // rounding error of the sum is a few units of 2^-52 relative to `mag`
    let margin = mag * 2f64.powi(-40) + 2f64.powi(-60);
    if sum > margin {
        Some(Ordering::Greater)
    } else if sum < -margin {
        Some(Ordering::Less)
    } else {
        None
    }
}

fn expanded_bits(factors: &[(BigUint, BigInt)]) -> f64 {
    let mut pos = 0.0;
    let mut neg = 0.0;
    for (base, exp) in factors {
        let e = exp.to_f64().unwrap_or(f64::INFINITY).abs();
        let b = e * ln_f64(base) / std::f64::consts::LN_2 + 1.0;
        if exp.is_positive() {
            pos += b;
        } else {
            neg += b;
        }
    }
    f64::max(pos, neg)
}

fn check_bits(bits: u64, cap: u64) -> Result<()> {
    if bits > cap {
        Err(Error::ResourceLimit { bits, cap })
    } else {
        Ok(())
    }
}

/// `base^exp` by repeated squaring, refusing results larger than `cap` bits.
pub(crate) fn checked_pow(base: &BigUint, exp: &BigInt, cap: u64) -> Result<BigUint> {
    debug_assert!(!exp.is_negative());
    let estimate = exp.to_f64().unwrap_or(f64::INFINITY) * ln_f64(base) / std::f64::consts::LN_2;
    if !estimate.is_finite() || estimate > cap as f64 {
        let bits = if estimate.is_finite() { estimate as u64 } else { u64::MAX };
        return Err(Error::ResourceLimit { bits, cap });
    }
    let e = exp.to_u32().ok_or(Error::ResourceLimit {
        bits: estimate as u64,
        cap,
    })?;
    Ok(base.pow(e))
}

fn exact_sign(factors: &[(BigUint, BigInt)], cap: u64) -> Result<Ordering> {
    let (num, den) = PowerProduct {
        factors: factors.to_vec(),
    }
    .expand(cap)?;
    Ok(num.cmp(&den))
}

/// Enclosure of `sum e_i ln c_i` scaled by `2^w`.
fn log_bounds(factors: &[(BigUint, BigInt)], w: u64) -> (BigInt, BigInt) {
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    for (base, exp) in factors {
        let (l, h) = ln_interval(base, w);
        if exp.sign() == Sign::Minus {
            lo += exp * &h;
            hi += exp * &l;
        } else {
            lo += exp * &l;
            hi += exp * &h;
        }
    }
    (lo, hi)
}

fn certified_log_sign(factors: &[(BigUint, BigInt)], w: u64) -> Option<Ordering> {
    let (lo, hi) = log_bounds(factors, w);
    if lo.is_positive() {
        Some(Ordering::Greater)
    } else if hi.is_negative() {
        Some(Ordering::Less)
    } else {
        None
    }
}

fn fixed_to_f64(x: &BigInt, w: u64) -> f64 {
    let bits = x.bits();
    let shift = bits.saturating_sub(60);
    let top = (x >> shift).to_f64().unwrap_or(0.0);
    top * 2f64.powf(shift as f64 - w as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAP: u64 = 1 << 26;

    fn pp(f: &[(u64, i64)]) -> PowerProduct {
        PowerProduct::from_factors(
            f.iter()
                .map(|&(b, e)| (BigUint::from(b), BigInt::from(e)))
                .collect(),
        )
    }

    #[test]
    fn normalizes_factors() {
        let x = pp(&[(3, 2), (2, 1), (3, -2), (1, 7), (5, 0)]);
        assert_eq!(x, pp(&[(2, 1)]));
        assert!(pp(&[(7, 3), (7, -3)]).is_one());
    }

    #[test]
    fn small_comparisons() {
        // 32/27 < 36/27
        let x = pp(&[(2, 5), (3, -3)]);
        let y = pp(&[(2, 2), (3, -1)]);
        assert_eq!(x.compare(&y, CAP).unwrap(), Ordering::Less);
        assert_eq!(y.compare(&x, CAP).unwrap(), Ordering::Greater);
        assert_eq!(x.compare(&x, CAP).unwrap(), Ordering::Equal);
    }

    #[test]
    fn equality_across_non_coprime_bases() {
        // 4^3 * 6^2 = 2^8 * 3^2 and 12 * 2^2 = 48 = 16 * 3
        assert_eq!(pp(&[(4, 3), (6, 2), (2, -8), (3, -2)]).cmp_one(CAP).unwrap(), Ordering::Equal);
        assert_eq!(pp(&[(12, 1), (2, 2), (16, -1), (3, -1)]).cmp_one(CAP).unwrap(), Ordering::Equal);
        assert_eq!(pp(&[(10, 5), (4, -1), (25, -2)]).cmp_one(CAP).unwrap(), Ordering::Greater);
    }

    #[test]
    fn coprime_basis_is_pairwise_coprime() {
        let b = coprime_basis(&pp(&[(12, 1), (18, 2), (8, -1), (35, 1), (10, 1)]).factors);
        for i in 0..b.len() {
            for j in (i + 1)..b.len() {
                assert!(b[i].0.gcd(&b[j].0).is_one());
            }
        }
    }

    #[test]
    fn huge_exponents_resolve_without_expansion() {
        // 2^16785921 / 3^10590737: a convergent of log2(3), ln of the value is
        // about -5.23e-8 (tabulated with 100-digit arithmetic)
        let q: BigInt = "16785921".parse().unwrap();
        let p: BigInt = "10590737".parse().unwrap();
        let x = PowerProduct::from_factors(vec![(2u32.into(), q), (3u32.into(), -p)]);
        let tiny_cap = 1024;
        assert_eq!(x.cmp_one(tiny_cap).unwrap(), Ordering::Less);

        let big_q: BigInt = "50000000000000000000000000000".parse().unwrap();
        let big = PowerProduct::from_factors(vec![(2u32.into(), big_q.clone()), (3u32.into(), -(&big_q))]);
        assert_eq!(big.cmp_one(tiny_cap).unwrap(), Ordering::Less);
    }

    #[test]
    fn certified_tier_agrees_with_expansion() {
        // 2^24727 / 3^15601 is about 1.0004; both tiers must agree
        let x = pp(&[(2, 24727), (3, -15601)]);
        let exact = exact_sign(&x.factors, CAP).unwrap();
        assert_eq!(exact, Ordering::Greater);
        assert_eq!(certified_log_sign(&x.factors, 128), Some(exact));
        let y = pp(&[(2, 24726), (3, -15601)]);
        assert_eq!(certified_log_sign(&y.factors, 128), Some(exact_sign(&y.factors, CAP).unwrap()));
    }

    #[test]
    fn expansion_respects_cap() {
        let x = pp(&[(3, 100_000)]);
        assert!(matches!(x.expand(1000), Err(Error::ResourceLimit { cap: 1000, .. })));
        assert!(x.expand(CAP).is_ok());
    }

    #[test]
    fn display_formats() {
        assert_eq!(pp(&[(2, 12), (3, -7)]).to_string(), "2^12/3^7");
        assert_eq!(pp(&[(3, 1), (2, -1)]).to_string(), "3/2");
        assert_eq!(PowerProduct::one().to_string(), "1");
    }

    #[test]
    fn ln_approx_handles_cancellation() {
        let x = pp(&[(2, 24727), (3, -15601)]);
        let exact = 24727.0 * 2f64.ln() - 15601.0 * 3f64.ln();
        assert!((x.ln_approx() - exact).abs() < 1e-9);
        let q: BigInt = "16785921".parse().unwrap();
        let p: BigInt = "10590737".parse().unwrap();
        let y = PowerProduct::from_factors(vec![(2u32.into(), q), (3u32.into(), -p)]);
        assert!((y.ln_approx() + 5.23005199909253e-8).abs() < 1e-18);
    }
}
