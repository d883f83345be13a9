//! Certified decimal rendering.
//!
//! A quantity is enclosed in an interval of dyadic numbers computed at a
//! working precision of `w` bits (every rounding directed outward). Its
//! endpoints are rounded to the requested number of significant digits; if
//! both endpoints give the same string every point between them does too, and
//! that string is returned. Otherwise the precision doubles. Once the
//! precision would exceed the size of the expanded integers the quantity is
//! evaluated exactly instead.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::element::{BigRatio, Element};
use crate::error::{Error, Result};
use crate::power::{ln_f64, PowerProduct};

/// Working precision beyond which the renderer gives up.
const MAX_WORKING_BITS: u64 = 1 << 24;

/// Something the renderer can enclose: a positive power product, or the
/// difference of two.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Quantity {
    Product(PowerProduct),
    Diff(PowerProduct, PowerProduct),
}

impl From<PowerProduct> for Quantity {
    fn from(p: PowerProduct) -> Self {
        Quantity::Product(p)
    }
}

impl From<&Element> for Quantity {
    fn from(e: &Element) -> Self {
        Quantity::Product(e.value())
    }
}

impl From<&BigRatio> for Quantity {
    fn from(r: &BigRatio) -> Self {
        Quantity::Product(r.value())
    }
}

impl Quantity {
    pub fn diff(x: PowerProduct, y: PowerProduct) -> Self {
        Quantity::Diff(x, y)
    }

    fn parts(&self) -> Vec<&PowerProduct> {
        match self {
            Quantity::Product(p) => vec![p],
            Quantity::Diff(x, y) => vec![x, y],
        }
    }

    fn exact(&self, cap: u64) -> Result<BigRational> {
        match self {
            Quantity::Product(p) => p.to_rational(cap),
            Quantity::Diff(x, y) => Ok(x.to_rational(cap)? - y.to_rational(cap)?),
        }
    }

    fn enclose(&self, w: u64, cap: u64) -> Result<(BigRational, BigRational)> {
        match self {
            Quantity::Product(p) => {
                let (lo, hi) = enclose_product(p, w);
                Ok((lo.to_rational(cap)?, hi.to_rational(cap)?))
            }
            Quantity::Diff(x, y) => {
                let (xl, xh) = enclose_product(x, w);
                let (yl, yh) = enclose_product(y, w);
                Ok((
                    xl.to_rational(cap)? - yh.to_rational(cap)?,
                    xh.to_rational(cap)? - yl.to_rational(cap)?,
                ))
            }
        }
    }
}

/// Renders `q` with `digits` significant digits, every one of them certified.
pub fn render(q: &Quantity, digits: u32, bit_cap: u64) -> Result<String> {
    render_from(q, digits, bit_cap, None)
}

/// As [`render`], starting the escalation at `start_bits` of working
/// precision. The result does not depend on the starting point.
pub fn render_from(q: &Quantity, digits: u32, bit_cap: u64, start_bits: Option<u64>) -> Result<String> {
    if digits == 0 {
        return Err(Error::OutOfRange("at least one significant digit is required".into()));
    }
    let parts = q.parts();
    let exact_bits = parts.iter().map(|p| p.expanded_bits()).fold(0.0, f64::max);
    let exp_bits = parts
        .iter()
        .flat_map(|p| p.factors().iter().map(|(_, e)| e.bits()))
        .max()
        .unwrap_or(0);
    let mut w = start_bits.unwrap_or(4 * digits as u64 + 64 + 2 * exp_bits).max(8);
    let mut tried_exact = false;
    loop {
        if w > bit_cap {
            return Err(Error::ResourceLimit { bits: w, cap: bit_cap });
        }
        if !tried_exact && w as f64 >= exact_bits + 64.0 {
            tried_exact = true;
            match q.exact(bit_cap) {
                Ok(r) => return Ok(decide(&r, &r, digits).expect("a point always rounds")),
                Err(Error::ResourceLimit { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let (lo, hi) = q.enclose(w, bit_cap)?;
        if let Some(s) = decide(&lo, &hi, digits) {
            return Ok(s);
        }
        if w >= MAX_WORKING_BITS {
            return Err(Error::ResourceLimit { bits: w, cap: bit_cap });
        }
        w *= 2;
    }
}

/// Smallest decimal with `digits` significant digits that is at least `q`,
/// for a non-negative `q`. Unlike [`render`] the last digit need not be
/// exact, only an upper bound.
pub fn render_upper(q: &Quantity, digits: u32, bit_cap: u64) -> Result<String> {
    if digits == 0 {
        return Err(Error::OutOfRange("at least one significant digit is required".into()));
    }
    let w = 4 * digits as u64 + 64;
    let (lo, hi) = match q.exact(bit_cap.min(1 << 16)) {
        Ok(r) => (r.clone(), r),
        Err(Error::ResourceLimit { .. }) => q.enclose(w, bit_cap)?,
        Err(e) => return Err(e),
    };
    if lo.is_negative() {
        return Err(Error::OutOfRange("upper bound rendering needs a non-negative value".into()));
    }
    if hi.is_zero() {
        return Ok("0".into());
    }
    let (r, e) = ceil_sig(&hi, digits);
    Ok(format_sig(false, &r, e, digits))
}

#[derive(Clone, Debug)]
struct Dyadic {
    m: BigUint,
    e: BigInt,
}

impl Dyadic {
    fn one() -> Self {
        Dyadic {
            m: BigUint::one(),
            e: BigInt::zero(),
        }
    }

    fn round(m: BigUint, e: BigInt, w: u64, up: bool) -> Self {
        let bits = m.bits();
        if bits <= w {
            return Dyadic { m, e };
        }
        let s = bits - w;
        let mut t = &m >> s;
        if up && !(m & ((BigUint::one() << s) - 1u32)).is_zero() {
            t += 1u32;
        }
        Dyadic { m: t, e: e + s }
    }

    fn mul(&self, o: &Dyadic, w: u64, up: bool) -> Self {
        Dyadic::round(&self.m * &o.m, &self.e + &o.e, w, up)
    }

    fn pow(&self, n: &BigUint, w: u64, up: bool) -> Self {
        let mut acc = Dyadic::one();
        for i in (0..n.bits()).rev() {
            acc = acc.mul(&acc, w, up);
            if n.bit(i) {
                acc = acc.mul(self, w, up);
            }
        }
        acc
    }

    fn div(&self, o: &Dyadic, w: u64, up: bool) -> Self {
        let s = (w + o.m.bits() + 2).saturating_sub(self.m.bits());
        let (mut q, r) = (&self.m << s).div_rem(&o.m);
        if up && !r.is_zero() {
            q += 1u32;
        }
        Dyadic::round(q, &self.e - &o.e - BigInt::from(s), w, up)
    }

    fn to_rational(&self, cap: u64) -> Result<BigRational> {
        let mag = &self.e + BigInt::from(self.m.bits());
        let e = self
            .e
            .to_i64()
            .filter(|_| mag.magnitude().to_u64().is_some_and(|m| m <= cap))
            .ok_or(Error::ResourceLimit {
                bits: mag.magnitude().to_u64().unwrap_or(u64::MAX),
                cap,
            })?;
        let m = BigInt::from(self.m.clone());
        Ok(if e >= 0 {
            BigRational::from_integer(m << e as u64)
        } else {
            BigRational::new(m, BigInt::one() << e.unsigned_abs())
        })
    }
}

fn enclose_product(p: &PowerProduct, w: u64) -> (Dyadic, Dyadic) {
    let (mut nl, mut nh, mut dl, mut dh) = (Dyadic::one(), Dyadic::one(), Dyadic::one(), Dyadic::one());
    for (base, exp) in p.factors() {
        let bl = Dyadic::round(base.clone(), BigInt::zero(), w, false);
        let bh = Dyadic::round(base.clone(), BigInt::zero(), w, true);
        let n = exp.magnitude();
        let pl = bl.pow(n, w, false);
        let ph = bh.pow(n, w, true);
        if exp.is_positive() {
            nl = nl.mul(&pl, w, false);
            nh = nh.mul(&ph, w, true);
        } else {
            dl = dl.mul(&pl, w, false);
            dh = dh.mul(&ph, w, true);
        }
    }
    (nl.div(&dh, w, false), nh.div(&dl, w, true))
}

fn pow10(k: i64) -> BigRational {
    let t = BigInt::from(10u32).pow(k.unsigned_abs() as u32);
    if k >= 0 {
        BigRational::from_integer(t)
    } else {
        BigRational::new(BigInt::one(), t)
    }
}

/// Rounds `x > 0` half away from zero to `n` significant digits; returns the
/// digit integer and the decimal exponent of the leading digit.
fn round_sig(x: &BigRational, n: u32) -> (BigUint, i64) {
    let est = (ln_f64(x.numer().magnitude()) - ln_f64(x.denom().magnitude())) / std::f64::consts::LN_10;
    let mut e = est.floor() as i64;
    while &pow10(e) > x {
        e -= 1;
    }
    while &pow10(e + 1) <= x {
        e += 1;
    }
    let scaled = x * pow10(n as i64 - 1 - e);
    let two = BigInt::from(2u32);
    let r = (&two * scaled.numer() + scaled.denom()).div_floor(&(&two * scaled.denom()));
    let mut r = r.to_biguint().expect("positive");
    let top = BigUint::from(10u32).pow(n);
    if r == top {
        r = BigUint::from(10u32).pow(n - 1);
        e += 1;
    }
    (r, e)
}

/// As [`round_sig`] but rounding up.
fn ceil_sig(x: &BigRational, n: u32) -> (BigUint, i64) {
    let (_, mut e) = round_sig(x, n);
    while &pow10(e) > x {
        e -= 1;
    }
    let scaled = x * pow10(n as i64 - 1 - e);
    let mut r = scaled.ceil().to_integer().to_biguint().expect("positive");
    if r == BigUint::from(10u32).pow(n) {
        r = BigUint::from(10u32).pow(n - 1);
        e += 1;
    }
    (r, e)
}

fn format_sig(neg: bool, r: &BigUint, e: i64, n: u32) -> String {
    let s = r.to_string();
    debug_assert_eq!(s.len(), n as usize);
    let sign = if neg { "-" } else { "" };
    let body = if (-6..n as i64).contains(&e) {
        if e >= 0 {
            let (int, frac) = s.split_at(e as usize + 1);
            if frac.is_empty() {
                int.to_string()
            } else {
                format!("{int}.{frac}")
            }
        } else {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), s)
        }
    } else {
        let (head, tail) = s.split_at(1);
        if tail.is_empty() {
            format!("{head}e{e}")
        } else {
            format!("{head}.{tail}e{e}")
        }
    };
    format!("{sign}{body}")
}

fn decide(lo: &BigRational, hi: &BigRational, n: u32) -> Option<String> {
    if lo.is_zero() && hi.is_zero() {
        return Some("0".into());
    }
    if lo.is_positive() {
        let a = round_sig(lo, n);
        (a == round_sig(hi, n)).then(|| format_sig(false, &a.0, a.1, n))
    } else if hi.is_negative() {
        let a = round_sig(&-hi, n);
        (a == round_sig(&-lo, n)).then(|| format_sig(true, &a.0, a.1, n))
    } else {
        None
    }
}
