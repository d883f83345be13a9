//! Minimum and maximum record holders, found two ways.
//!
//! [`scan_records`] walks `p = 1, 2, ...` and keeps the running extrema.
//! [`generate_pairs`] runs the pair recursion `(u, v) -> (u, u*v)` when
//! `u v < a` and `(u*v, v)` otherwise, starting from `(phi(1), phi(1))`; its
//! `u` terms are the minimum records and its `v` terms the maximum ones.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::decimal::{self, Quantity};
use crate::element::{Element, ElementRepr, ProductClass};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::power::PowerProduct;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Min,
    Max,
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordKind::Min => "min",
            RecordKind::Max => "max",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecordEntry {
    pub kind: RecordKind,
    #[serde(with = "crate::bigser")]
    pub p: BigUint,
    #[serde(with = "crate::bigser")]
    pub d: BigUint,
    #[serde(with = "crate::bigser")]
    pub delta_p: BigUint,
    #[serde(with = "crate::bigser")]
    pub delta_d: BigUint,
}

impl RecordEntry {
    pub fn element(&self, params: Params) -> Element {
        Element::from_parts_unchecked(params, self.p.clone(), self.d.clone())
    }
}

/// A record entry with its value rendered, as written to CSV and JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecordRow {
    pub kind: RecordKind,
    #[serde(with = "crate::bigser")]
    pub p: BigUint,
    #[serde(with = "crate::bigser")]
    pub d: BigUint,
    #[serde(with = "crate::bigser")]
    pub delta_p: BigUint,
    #[serde(with = "crate::bigser")]
    pub delta_d: BigUint,
    pub value_approx: String,
}

pub fn record_rows(params: Params, entries: &[RecordEntry], digits: u32) -> Result<Vec<RecordRow>> {
    entries
        .iter()
        .map(|e| {
            Ok(RecordRow {
                kind: e.kind,
                p: e.p.clone(),
                d: e.d.clone(),
                delta_p: e.delta_p.clone(),
                delta_d: e.delta_d.clone(),
                value_approx: e.element(params).approx(digits)?,
            })
        })
        .collect()
}

/// Turns per-kind chains of elements into entries, interleaved by `p` with
/// `min` first on ties.
fn entries_from_chains(mins: &[Element], maxs: &[Element]) -> Vec<RecordEntry> {
    let mut out = Vec::with_capacity(mins.len() + maxs.len());
    for (kind, chain) in [(RecordKind::Min, mins), (RecordKind::Max, maxs)] {
        let mut prev: Option<&Element> = None;
        for e in chain {
            let (delta_p, delta_d) = match prev {
                None => (BigUint::one(), BigUint::one()),
                Some(pr) => (e.p() - pr.p(), e.d() - pr.d()),
            };
            out.push(RecordEntry {
                kind,
                p: e.p().clone(),
                d: e.d().clone(),
                delta_p,
                delta_d,
            });
            prev = Some(e);
        }
    }
    out.sort_by(|x, y| x.p.cmp(&y.p).then(x.kind.cmp(&y.kind)));
    out
}

/// Brute-force scan of `phi(1..=max_p)`.
pub fn scan_records(params: Params, max_p: u64) -> Result<Vec<RecordEntry>> {
    if max_p == 0 {
        return Err(Error::OutOfRange("max_p must be at least 1".into()));
    }
    let (mins, maxs) = chunk_chains(params, 1, max_p)?;
    Ok(entries_from_chains(&mins, &maxs))
}

/// Prefix-minimum and prefix-maximum chains of `phi(lo..=hi)`.
fn chunk_chains(params: Params, lo: u64, hi: u64) -> Result<(Vec<Element>, Vec<Element>)> {
    let first = params.phi(lo)?;
    let mut mins = vec![first.clone()];
    let mut maxs = vec![first];
    for p in lo + 1..=hi {
        let e = params.phi(p)?;
        if e.compare(mins.last().unwrap())? == Ordering::Less {
            mins.push(e);
        } else if e.compare(maxs.last().unwrap())? == Ordering::Greater {
            maxs.push(e);
        }
    }
    Ok((mins, maxs))
}

/// [`scan_records`] split over `threads` workers. The output is identical.
pub fn scan_records_parallel(params: Params, max_p: u64, threads: usize) -> Result<Vec<RecordEntry>> {
    if max_p == 0 {
        return Err(Error::OutOfRange("max_p must be at least 1".into()));
    }
    let threads = threads.max(1) as u64;
    if threads == 1 {
        return scan_records(params, max_p);
    }
    let size = max_p.div_ceil(threads);
    let bounds: Vec<(u64, u64)> = (0..threads)
        .map(|i| (1 + i * size, ((i + 1) * size).min(max_p)))
        .filter(|(lo, hi)| lo <= hi)
        .collect();
    let chunks: Vec<Result<(Vec<Element>, Vec<Element>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = bounds
            .iter()
            .map(|&(lo, hi)| s.spawn(move || chunk_chains(params, lo, hi)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
    });
    let mut mins: Vec<Element> = Vec::new();
    let mut maxs: Vec<Element> = Vec::new();
    for chunk in chunks {
        let (cmin, cmax) = chunk?;
        for e in cmin {
            match mins.last() {
                Some(m) if e.compare(m)? != Ordering::Less => {}
                _ => mins.push(e),
            }
        }
        for e in cmax {
            match maxs.last() {
                Some(m) if e.compare(m)? != Ordering::Greater => {}
                _ => maxs.push(e),
            }
        }
    }
    Ok(entries_from_chains(&mins, &maxs))
}

/// One term `s_i = (u_i, v_i)` of the pair sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairState {
    pub index: u64,
    pub u: Element,
    pub v: Element,
}

impl PairState {
    pub fn initial(params: Params) -> Result<PairState> {
        let one = params.phi(1u32)?;
        Ok(PairState {
            index: 0,
            u: one.clone(),
            v: one,
        })
    }

    pub fn params(&self) -> Params {
        *self.u.params()
    }

    /// The `p` of the element the next step will create.
    pub fn next_p(&self) -> BigUint {
        self.u.p() + self.v.p()
    }
}

pub fn next_pair(state: &PairState) -> Result<PairState> {
    let w = state.u.star(&state.v)?;
    let below = state.u.product_class(&state.v)? == ProductClass::BelowA;
    let (u, v) = if below {
        (state.u.clone(), w)
    } else {
        (w, state.v.clone())
    };
    Ok(PairState {
        index: state.index + 1,
        u,
        v,
    })
}

/// The infinite pair sequence from `s_0`.
pub struct PairSequence {
    next: Option<Result<PairState>>,
}

impl PairSequence {
    pub fn new(params: Params) -> Self {
        PairSequence {
            next: Some(PairState::initial(params)),
        }
    }
}

impl Iterator for PairSequence {
    type Item = Result<PairState>;

    fn next(&mut self) -> Option<Self::Item> {
        let cur = self.next.take()?;
        if let Ok(s) = &cur {
            self.next = Some(next_pair(s));
        }
        Some(cur)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StopCriterion {
    /// Stop after this many steps past `s_0`.
    MaxSteps(u64),
    /// Stop once `max(u.p, v.p) >= P`.
    MinPReached(BigUint),
    /// Stop once `u - 1 < eps` and `a - v < eps`.
    GapBelow(BigRational),
}

fn gap_reached(state: &PairState, eps: &BigRational) -> Result<bool> {
    let params = state.params();
    let cap = params.bit_cap();
    let low = PowerProduct::from_rational(&(BigRational::one() + eps));
    if state.u.value().compare(&low, cap)? != Ordering::Less {
        return Ok(false);
    }
    let high = BigRational::from_integer(params.a().into()) - eps;
    if high <= BigRational::zero() {
        return Ok(true);
    }
    Ok(state.v.value().compare(&PowerProduct::from_rational(&high), cap)? == Ordering::Greater)
}

/// The prefix of the pair sequence up to and including the first state that
/// meets `stop`.
pub fn generate_pairs(params: Params, stop: &StopCriterion) -> Result<Vec<PairState>> {
    if let StopCriterion::GapBelow(eps) = stop {
        if *eps <= BigRational::zero() {
            return Err(Error::OutOfRange("gap threshold must be positive".into()));
        }
    }
    let mut out = Vec::new();
    for state in PairSequence::new(params) {
        let state = state?;
        let done = match stop {
            StopCriterion::MaxSteps(n) => state.index >= *n,
            StopCriterion::MinPReached(p) => state.u.p().max(state.v.p()) >= p,
            StopCriterion::GapBelow(eps) => gap_reached(&state, eps)?,
        };
        out.push(state);
        if done {
            return Ok(out);
        }
    }
    unreachable!("the pair sequence is infinite")
}

/// Every state whose elements have `p <= max_p`, which is enough to contain
/// all records up to `max_p`.
pub fn pairs_up_to(params: Params, max_p: &BigUint) -> Result<Vec<PairState>> {
    let mut out = Vec::new();
    for state in PairSequence::new(params) {
        let state = state?;
        let more = state.next_p() <= *max_p;
        out.push(state);
        if !more {
            break;
        }
    }
    Ok(out)
}

/// Reads the record holders off a prefix of the pair sequence.
pub fn records_from_pairs(pairs: &[PairState]) -> Vec<RecordEntry> {
    let mut mins: Vec<Element> = Vec::new();
    let mut maxs: Vec<Element> = Vec::new();
    for s in pairs {
        if mins.last() != Some(&s.u) {
            mins.push(s.u.clone());
        }
        if maxs.last() != Some(&s.v) {
            maxs.push(s.v.clone());
        }
    }
    entries_from_chains(&mins, &maxs)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub matched: bool,
    /// First position where the two lists differ: `(scan, sequence)`.
    pub first_divergence: Option<(Option<RecordEntry>, Option<RecordEntry>)>,
    pub scan_rows: usize,
    pub sequence_rows: usize,
}

/// Compares the scan with the sequence-derived records up to `max_p`.
pub fn equivalence_check(params: Params, max_p: u64) -> Result<EquivalenceReport> {
    let scan = scan_records(params, max_p)?;
    let seq = sequence_records(params, max_p)?;
    Ok(compare_record_lists(&scan, &seq))
}

/// Records from the pair sequence, restricted to `p <= max_p`.
pub fn sequence_records(params: Params, max_p: u64) -> Result<Vec<RecordEntry>> {
    let bound = BigUint::from(max_p);
    let pairs = pairs_up_to(params, &bound)?;
    Ok(records_from_pairs(&pairs).into_iter().filter(|e| e.p <= bound).collect())
}

pub fn compare_record_lists(scan: &[RecordEntry], seq: &[RecordEntry]) -> EquivalenceReport {
    let n = scan.len().max(seq.len());
    let first_divergence = (0..n)
        .find(|&i| scan.get(i) != seq.get(i))
        .map(|i| (scan.get(i).cloned(), seq.get(i).cloned()));
    EquivalenceReport {
        matched: first_divergence.is_none(),
        first_divergence,
        scan_rows: scan.len(),
        sequence_rows: seq.len(),
    }
}

/// Serialized form of a pair-sequence prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDocument {
    pub a: u64,
    pub b: u64,
    pub pairs: Vec<PairRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub index: u64,
    pub u: ElementRepr,
    pub v: ElementRepr,
}

impl PairDocument {
    pub fn from_pairs(params: Params, pairs: &[PairState]) -> Self {
        PairDocument {
            a: params.a(),
            b: params.b(),
            pairs: pairs
                .iter()
                .map(|s| PairRecord {
                    index: s.index,
                    u: s.u.repr(),
                    v: s.v.repr(),
                })
                .collect(),
        }
    }

    /// Rebuilds the states, checking that they are a prefix of the pair
    /// sequence for these parameters.
    pub fn into_pairs(self, bit_cap: u64) -> Result<(Params, Vec<PairState>)> {
        let params = Params::new(self.a, self.b)?.with_bit_cap(bit_cap);
        let mut out: Vec<PairState> = Vec::with_capacity(self.pairs.len());
        for rec in self.pairs {
            let expected = match out.last() {
                None => PairState::initial(params)?,
                Some(prev) => next_pair(prev)?,
            };
            let u = Element::from_parts_unchecked(params, rec.u.p, rec.u.d);
            let v = Element::from_parts_unchecked(params, rec.v.p, rec.v.d);
            if rec.index != expected.index || u != expected.u || v != expected.v {
                return Err(Error::InvalidSequence(format!(
                    "state {} does not follow from its predecessor",
                    rec.index
                )));
            }
            out.push(expected);
        }
        Ok((params, out))
    }
}

/// `value(u) - 1` and `a - value(v)` as certified decimals.
pub fn gaps(state: &PairState, digits: u32) -> Result<(String, String)> {
    let params = state.params();
    let cap = params.bit_cap();
    let u_gap = decimal::render(&Quantity::diff(state.u.value(), PowerProduct::one()), digits, cap)?;
    let v_gap = decimal::render(
        &Quantity::diff(PowerProduct::integer(params.a()), state.v.value()),
        digits,
        cap,
    )?;
    Ok((u_gap, v_gap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p23() -> Params {
        Params::new(2, 3).unwrap()
    }

    fn ps(entries: &[RecordEntry], kind: RecordKind) -> Vec<u64> {
        entries
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.p.to_string().parse().unwrap())
            .collect()
    }

    #[test]
    fn scan_small_prefixes() {
        let r = scan_records(p23(), 6).unwrap();
        assert_eq!(ps(&r, RecordKind::Min), [1, 3, 5]);
        assert_eq!(ps(&r, RecordKind::Max), [1, 2]);
        let r = scan_records(p23(), 1).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].kind, RecordKind::Min);
        assert_eq!(r[1].kind, RecordKind::Max);
        assert!(scan_records(p23(), 0).is_err());
    }

    #[test]
    fn first_pair_steps() {
        let s0 = PairState::initial(p23()).unwrap();
        let s1 = next_pair(&s0).unwrap();
        assert_eq!((s1.u.fraction(), s1.v.fraction()), ("2^2/3".into(), "2^4/3^2".into()));
        let s2 = next_pair(&s1).unwrap();
        assert_eq!(s2.u.fraction(), "2^5/3^3");
        let s3 = next_pair(&s2).unwrap();
        let s4 = next_pair(&s3).unwrap();
        assert_eq!((s4.u.fraction(), s4.v.fraction()), ("2^8/3^5".into(), "2^12/3^7".into()));
    }

    #[test]
    fn seven_eight_starts_on_u() {
        let pairs = generate_pairs(Params::new(7, 8).unwrap(), &StopCriterion::MaxSteps(1)).unwrap();
        assert_eq!(pairs[1].u.fraction(), "7^3/8^2");
        assert_eq!(pairs[1].v.fraction(), "7^2/8");
    }

    #[test]
    fn zero_steps_is_base_case() {
        let pairs = generate_pairs(p23(), &StopCriterion::MaxSteps(0)).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].u, pairs[0].v);
    }

    #[test]
    fn records_from_first_pairs() {
        let pairs = generate_pairs(p23(), &StopCriterion::MaxSteps(4)).unwrap();
        let r = records_from_pairs(&pairs);
        assert_eq!(ps(&r, RecordKind::Min), [1, 3, 5]);
        assert_eq!(ps(&r, RecordKind::Max), [1, 2, 7]);
        let r = records_from_pairs(&pairs[..1]);
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn index_42_reaches_16266() {
        let pairs = generate_pairs(p23(), &StopCriterion::MaxSteps(42)).unwrap();
        let r = records_from_pairs(&pairs);
        assert!(r
            .iter()
            .any(|e| e.kind == RecordKind::Max && e.p == 16266u32.into() && e.d == 9516u32.into()));
    }

    #[test]
    fn deep_max_record() {
        let pairs = generate_pairs(p23(), &StopCriterion::MinPReached(31867u32.into())).unwrap();
        let last = pairs.last().unwrap();
        assert_eq!(last.v.p(), &BigUint::from(31867u32));
        assert_eq!(last.v.d(), &BigUint::from(18642u32));
    }

    #[test]
    fn gap_criterion_is_exact() {
        let eps = BigRational::new(1.into(), 10.into());
        let pairs = generate_pairs(p23(), &StopCriterion::GapBelow(eps.clone())).unwrap();
        let last = pairs.last().unwrap();
        assert!(gap_reached(last, &eps).unwrap());
        assert!(pairs[..pairs.len() - 1].iter().all(|s| !gap_reached(s, &eps).unwrap()));
    }

    #[test]
    fn parallel_scan_matches() {
        for (a, b) in [(2, 3), (7, 8)] {
            let params = Params::new(a, b).unwrap();
            let seq = scan_records(params, 3000).unwrap();
            for t in [2, 3, 7] {
                assert_eq!(scan_records_parallel(params, 3000, t).unwrap(), seq);
            }
        }
    }

    #[test]
    fn equivalence_small() {
        assert!(equivalence_check(p23(), 1).unwrap().matched);
        assert!(equivalence_check(p23(), 2000).unwrap().matched);
    }

    #[test]
    fn document_round_trip_and_tamper() {
        let params = p23();
        let pairs = generate_pairs(params, &StopCriterion::MaxSteps(20)).unwrap();
        let doc = PairDocument::from_pairs(params, &pairs);
        let (_, back) = doc.clone().into_pairs(params.bit_cap()).unwrap();
        assert_eq!(back, pairs);
        let mut bad = doc;
        bad.pairs.swap(3, 4);
        assert!(matches!(bad.into_pairs(params.bit_cap()), Err(Error::InvalidSequence(_))));
    }
}
