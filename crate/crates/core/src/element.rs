//! Members of the set `F(a, b) = { a^(p + d(p)) / b^p }` and the monoid law on it.
//!
//! An [`Element`] stores only the exponent pair `(p, d)`; the value
//! `a^(p+d) / b^p` is expanded only inside comparisons that need it.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};
use crate::fixed_log::ln_interval;
use crate::params::Params;
use crate::power::PowerProduct;

/// Whether a product of two elements stays below `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductClass {
    BelowA,
    AtLeastA,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Element {
    params: Params,
    p: BigUint,
    d: BigUint,
}

/// `a^x / b^y` as a power product.
pub(crate) fn ab_power(params: &Params, x: BigInt, y: BigInt) -> PowerProduct {
    PowerProduct::from_factors(vec![
        (BigUint::from(params.a()), x),
        (BigUint::from(params.b()), -y),
    ])
}

fn cmp_ab(params: &Params, x: BigInt, y: BigInt) -> Result<Ordering> {
    ab_power(params, x, y).cmp_one(params.bit_cap())
}

/// Lower estimate of `ceil(p ln b / ln a)`, refined exactly by the caller.
fn estimate_q(params: &Params, p: &BigUint) -> BigUint {
    if let Some(pf) = p.to_u64().filter(|&v| v < 1 << 50) {
        let r = (params.b() as f64).ln() / (params.a() as f64).ln();
        return BigUint::from((pf as f64 * r).ceil().max(0.0) as u64);
    }
    let w = p.bits() + 64;
    let (_, la_hi) = ln_interval(&BigUint::from(params.a()), w);
    let (lb_lo, _) = ln_interval(&BigUint::from(params.b()), w);
    let est = BigInt::from(p.clone()) * lb_lo / la_hi;
    est.to_biguint().unwrap_or_default()
}

impl Params {
    /// The offset `d(p)`: the unique `d >= 0` with `a^(p+d-1) < b^p <= a^(p+d)`.
    pub fn offset(&self, p: &BigUint) -> Result<BigUint> {
        if p.is_zero() {
            return Ok(BigUint::zero());
        }
        let pi = BigInt::from(p.clone());
        let mut q = estimate_q(self, p).max(p.clone());
        // smallest q with a^q >= b^p
        while cmp_ab(self, BigInt::from(q.clone()), pi.clone())? == Ordering::Less {
            q += 1u32;
        }
        while q > *p && cmp_ab(self, BigInt::from(q.clone()) - 1, pi.clone())? != Ordering::Less {
            q -= 1u32;
        }
        Ok(q - p)
    }

    /// The element with denominator exponent `p`.
    pub fn phi(&self, p: impl Into<BigUint>) -> Result<Element> {
        let p = p.into();
        let d = self.offset(&p)?;
        Ok(Element {
            params: *self,
            p,
            d,
        })
    }

    /// The identity element `1`.
    pub fn one(&self) -> Element {
        Element {
            params: *self,
            p: BigUint::zero(),
            d: BigUint::zero(),
        }
    }

    /// Signed extension: `z >= 0` gives `phi(z)`, `z < 0` gives `1 / phi(-z)`.
    pub fn phi_signed(&self, z: impl Into<BigInt>) -> Result<SignedElement> {
        let z = z.into();
        let d = self.offset(z.magnitude())?;
        Ok(SignedElement {
            params: *self,
            z,
            d,
        })
    }
}

impl Element {
    /// Rebuilds an element from stored exponents, checking that `d = d(p)`.
    pub fn from_parts(params: Params, p: BigUint, d: BigUint) -> Result<Element> {
        let expected = params.offset(&p)?;
        if expected != d {
            return Err(Error::InvalidElement { p, d });
        }
        Ok(Element { params, p, d })
    }

    pub(crate) fn from_parts_unchecked(params: Params, p: BigUint, d: BigUint) -> Element {
        Element { params, p, d }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn d(&self) -> &BigUint {
        &self.d
    }

    /// Numerator exponent `p + d`.
    pub fn q(&self) -> BigUint {
        &self.p + &self.d
    }

    pub fn is_one(&self) -> bool {
        self.p.is_zero()
    }

    pub fn value(&self) -> PowerProduct {
        ab_power(
            &self.params,
            BigInt::from(self.q()),
            BigInt::from(self.p.clone()),
        )
    }

    /// Exact order of the two values.
    pub fn compare(&self, other: &Element) -> Result<Ordering> {
        self.params.ensure_same(&other.params)?;
        if self.p == other.p {
            return Ok(Ordering::Equal);
        }
        let x = BigInt::from(self.q()) - BigInt::from(other.q());
        let y = BigInt::from(self.p.clone()) - BigInt::from(other.p.clone());
        cmp_ab(&self.params, x, y)
    }

    /// Decides `value(self) * value(other) < a` exactly.
    pub fn product_class(&self, other: &Element) -> Result<ProductClass> {
        self.params.ensure_same(&other.params)?;
        let x = BigInt::from(self.q()) + BigInt::from(other.q()) - 1;
        let y = BigInt::from(&self.p + &other.p);
        Ok(match cmp_ab(&self.params, x, y)? {
            Ordering::Less => ProductClass::BelowA,
            _ => ProductClass::AtLeastA,
        })
    }

    /// The monoid law: the plain product, divided by `a` when it reaches `a`.
    pub fn star(&self, other: &Element) -> Result<Element> {
        let class = self.product_class(other)?;
        let p = &self.p + &other.p;
        let mut d = &self.d + &other.d;
        if class == ProductClass::AtLeastA {
            d -= 1u32;
        }
        Ok(Element {
            params: self.params,
            p,
            d,
        })
    }

    /// Certified decimal rendering with `digits` significant digits.
    pub fn approx(&self, digits: u32) -> Result<String> {
        decimal::render(&self.value().into(), digits, self.params.bit_cap())
    }

    /// The value written as `a^q/b^p`.
    pub fn fraction(&self) -> String {
        if self.p.is_zero() {
            return "1".into();
        }
        let pow = |base: u64, e: &BigUint| {
            if e.is_one() {
                base.to_string()
            } else {
                format!("{base}^{e}")
            }
        };
        format!(
            "{}/{}",
            pow(self.params.a(), &self.q()),
            pow(self.params.b(), &self.p)
        )
    }

    pub fn repr(&self) -> ElementRepr {
        ElementRepr {
            p: self.p.clone(),
            d: self.d.clone(),
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fraction())
    }
}

/// Serialized form of an element: `{"p": int, "d": int}`. The parameters
/// travel separately.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementRepr {
    #[serde(with = "crate::bigser")]
    pub p: BigUint,
    #[serde(with = "crate::bigser")]
    pub d: BigUint,
}

impl ElementRepr {
    pub fn into_element(self, params: Params) -> Result<Element> {
        Element::from_parts(params, self.p, self.d)
    }
}

/// An element of the group extension indexed by the integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedElement {
    params: Params,
    z: BigInt,
    // d(|z|)
    d: BigUint,
}

impl SignedElement {
    pub fn z(&self) -> &BigInt {
        &self.z
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn value(&self) -> PowerProduct {
        let p = BigInt::from(self.z.magnitude().clone());
        let q = &p + BigInt::from(self.d.clone());
        let v = ab_power(&self.params, q, p);
        if self.z < BigInt::zero() {
            v.recip()
        } else {
            v
        }
    }

    /// Group law, computed on values: multiply, then rescale by a power of `a`
    /// into `[1, a)` for a non-negative index or `(1/a, 1]` for a negative one.
    pub fn star(&self, other: &SignedElement) -> Result<SignedElement> {
        self.params.ensure_same(&other.params)?;
        let params = self.params;
        let cap = params.bit_cap();
        let a = BigUint::from(params.a());
        let b = BigUint::from(params.b());
        let product = self.value().mul(&other.value());
        let exp_of = |pp: &PowerProduct, base: &BigUint| {
            pp.factors()
                .iter()
                .find(|(c, _)| c == base)
                .map(|(_, e)| e.clone())
                .unwrap_or_default()
        };
        let z = -exp_of(&product, &b);
        let lower = if z >= BigInt::zero() {
            PowerProduct::one()
        } else {
            PowerProduct::power(a.clone(), -1)
        };
        let upper = PowerProduct::power(a.clone(), if z >= BigInt::zero() { 1 } else { 0 });
        let nonneg = z >= BigInt::zero();
        let mut k = BigInt::zero();
        loop {
            let scaled = product.mul(&PowerProduct::power(a.clone(), k.clone()));
            let lo = scaled.compare(&lower, cap)?;
            let hi = scaled.compare(&upper, cap)?;
            let below = if nonneg { lo == Ordering::Less } else { lo != Ordering::Greater };
            let above = if nonneg { hi != Ordering::Less } else { hi == Ordering::Greater };
            if below {
                k += 1;
            } else if above {
                k -= 1;
            } else {
                let q = exp_of(&scaled, &a);
                let d = if nonneg { q - &z } else { -q + &z };
                let d = d.to_biguint().ok_or_else(|| {
                    Error::InvalidSequence("negative offset in group product".into())
                })?;
                return Ok(SignedElement { params, z, d });
            }
        }
    }

    /// The non-negative part as an ordinary element, if `z >= 0`.
    pub fn to_element(&self) -> Option<Element> {
        self.z.to_biguint().map(|p| Element {
            params: self.params,
            p,
            d: self.d.clone(),
        })
    }

    pub fn approx(&self, digits: u32) -> Result<String> {
        decimal::render(&self.value().into(), digits, self.params.bit_cap())
    }
}

/// `num_base^num_exp / den_base^den_exp`, unconstrained by membership.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BigRatio {
    pub num_base: u64,
    pub num_exp: BigUint,
    pub den_base: u64,
    pub den_exp: BigUint,
}

impl BigRatio {
    pub fn new(num_base: u64, num_exp: impl Into<BigUint>, den_base: u64, den_exp: impl Into<BigUint>) -> Self {
        assert!(num_base >= 1 && den_base >= 1, "bases must be positive");
        BigRatio {
            num_base,
            num_exp: num_exp.into(),
            den_base,
            den_exp: den_exp.into(),
        }
    }

    pub fn value(&self) -> PowerProduct {
        PowerProduct::from_factors(vec![
            (BigUint::from(self.num_base), BigInt::from(self.num_exp.clone())),
            (BigUint::from(self.den_base), -BigInt::from(self.den_exp.clone())),
        ])
    }

    pub fn approx(&self, digits: u32, bit_cap: u64) -> Result<String> {
        decimal::render(&self.value().into(), digits, bit_cap)
    }
}

impl fmt::Display for BigRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = |b: u64, e: &BigUint| {
            if e.is_one() {
                b.to_string()
            } else {
                format!("{b}^{e}")
            }
        };
        write!(
            f,
            "{}/{}",
            part(self.num_base, &self.num_exp),
            part(self.den_base, &self.den_exp)
        )
    }
}

impl FromStr for BigRatio {
    type Err = Error;

    /// Parses `B^E/C^F`, where either exponent may be omitted (`3/2`, `7^4/64`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::ParseRational {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let (n, d) = s.trim().split_once('/').unwrap_or((s.trim(), "1"));
        let side = |t: &str| -> Result<(u64, BigUint)> {
            let (b, e) = t.trim().split_once('^').unwrap_or((t.trim(), "1"));
            let b: u64 = b.trim().parse().map_err(|_| bad("base is not an integer"))?;
            let e: BigUint = e.trim().parse().map_err(|_| bad("exponent is not an integer"))?;
            if b == 0 {
                return Err(bad("zero base"));
            }
            Ok((b, e))
        };
        let (nb, ne) = side(n)?;
        let (db, de) = side(d)?;
        Ok(BigRatio::new(nb, ne, db, de))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p23() -> Params {
        Params::new(2, 3).unwrap()
    }

    fn u(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn offsets_from_record_table() {
        let p = p23();
        assert_eq!(p.offset(&u(1)).unwrap(), u(1));
        assert_eq!(p.offset(&u(0)).unwrap(), u(0));
        assert_eq!(p.offset(&u(17)).unwrap(), u(10));
        assert_eq!(p.offset(&u(31867)).unwrap(), u(18642));
        assert_eq!(p.offset(&u(7)).unwrap(), u(5));
        let p78 = Params::new(7, 8).unwrap();
        assert_eq!(p78.offset(&u(1)).unwrap(), u(1));
    }

    #[test]
    fn phi_values() {
        let p = p23();
        let e = p.phi(1u32).unwrap();
        assert_eq!((e.p(), e.d()), (&u(1), &u(1)));
        assert_eq!(e.fraction(), "2^2/3");
        assert!(p.phi(0u32).unwrap().is_one());
        assert_eq!(p.phi(7u32).unwrap().fraction(), "2^12/3^7");
        assert_eq!(Params::new(7, 8).unwrap().phi(1u32).unwrap().fraction(), "7^2/8");
    }

    #[test]
    fn compare_by_cross_multiplication() {
        let p = p23();
        let e1 = p.phi(1u32).unwrap();
        let e2 = p.phi(2u32).unwrap();
        let e3 = p.phi(3u32).unwrap();
        assert_eq!(e1.compare(&e1).unwrap(), Ordering::Equal);
        // 32/27 < 36/27
        assert_eq!(e3.compare(&e1).unwrap(), Ordering::Less);
        // 16 * 3 > 4 * 9
        assert_eq!(e2.compare(&e1).unwrap(), Ordering::Greater);
    }

    #[test]
    fn mismatched_params_rejected() {
        let x = p23().phi(1u32).unwrap();
        let y = Params::new(2, 5).unwrap().phi(1u32).unwrap();
        assert!(matches!(x.compare(&y), Err(Error::ParamsMismatch { .. })));
        assert!(matches!(x.star(&y), Err(Error::ParamsMismatch { .. })));
        assert!(matches!(x.product_class(&y), Err(Error::ParamsMismatch { .. })));
    }

    #[test]
    fn product_classes() {
        let p = p23();
        let two = p.phi(2u32).unwrap();
        let five = p.phi(5u32).unwrap();
        let twelve = p.phi(12u32).unwrap();
        assert_eq!(two.product_class(&five).unwrap(), ProductClass::BelowA);
        assert_eq!(twelve.product_class(&five).unwrap(), ProductClass::AtLeastA);
        assert_eq!(p.one().product_class(&p.one()).unwrap(), ProductClass::BelowA);
    }

    #[test]
    fn star_examples() {
        let p = p23();
        let one = p.phi(1u32).unwrap();
        assert_eq!(one.star(&one).unwrap(), p.phi(2u32).unwrap());
        let s = p.phi(12u32).unwrap().star(&p.phi(5u32).unwrap()).unwrap();
        assert_eq!(s, p.phi(17u32).unwrap());
        assert_eq!(s.fraction(), "2^27/3^17");
        let e = p.phi(9u32).unwrap();
        assert_eq!(e.star(&p.one()).unwrap(), e);
    }

    #[test]
    fn from_parts_validates() {
        let p = p23();
        assert!(Element::from_parts(p, u(7), u(5)).is_ok());
        assert!(matches!(
            Element::from_parts(p, u(7), u(4)),
            Err(Error::InvalidElement { .. })
        ));
    }

    #[test]
    fn signed_examples() {
        let p = p23();
        let cap = p.bit_cap();
        let pos = p.phi_signed(1).unwrap();
        assert_eq!(pos.value().compare(&PowerProduct::ratio(4u32, 3u32), cap).unwrap(), Ordering::Equal);
        let neg = p.phi_signed(-1).unwrap();
        assert_eq!(neg.value().compare(&PowerProduct::ratio(3u32, 4u32), cap).unwrap(), Ordering::Equal);
        assert!(p.phi_signed(0).unwrap().value().is_one());
        let id = pos.star(&neg).unwrap();
        assert_eq!(id.z(), &BigInt::zero());
        assert!(id.value().is_one());
    }

    #[test]
    fn signed_star_matches_index_sum() {
        let p = Params::new(3, 5).unwrap();
        for z1 in -12i64..=12 {
            for z2 in -12i64..=12 {
                let s = p.phi_signed(z1).unwrap().star(&p.phi_signed(z2).unwrap()).unwrap();
                assert_eq!(s, p.phi_signed(z1 + z2).unwrap(), "z1 = {z1}, z2 = {z2}");
            }
        }
    }

    #[test]
    fn ratio_parsing() {
        let r: BigRatio = "2^28/3^17".parse().unwrap();
        assert_eq!(r, BigRatio::new(2, 28u32, 3, 17u32));
        assert_eq!("3/2".parse::<BigRatio>().unwrap(), BigRatio::new(3, 1u32, 2, 1u32));
        assert_eq!("7^4".parse::<BigRatio>().unwrap(), BigRatio::new(7, 4u32, 1, 1u32));
        assert!("x/2".parse::<BigRatio>().is_err());
        assert_eq!(r.to_string(), "2^28/3^17");
    }

    #[test]
    fn huge_offset_is_exact() {
        // 10590737 is a convergent denominator of log2(3); 2^16785921 / 3^10590737 < 1
        // so d must be 16785922 - 10590737
        let p = p23();
        let d = p.offset(&u(10590737)).unwrap();
        assert_eq!(d, u(16785922 - 10590737));
    }
}
