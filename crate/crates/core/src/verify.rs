//! Self-checks run by `ladder verify`.
//!
//! Each suite returns a list of named checks with a pass flag and a short
//! detail line. The parameter pairs used throughout are [`TEST_PARAMS`].

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::density::{approximate, approximate_positive, Target};
use crate::element::{Element, ProductClass};
use crate::error::Result;
use crate::params::Params;
use crate::phases::{
    extract_sequences, interleaving_failure, lambda_closed_form, monotonicity_failure, segment_phases,
    tv_increase_failure, verify_recursive_form,
};
use crate::power::PowerProduct;
use crate::records::{
    compare_record_lists, generate_pairs, scan_records, sequence_records, RecordEntry, RecordKind, StopCriterion,
};

pub const TEST_PARAMS: [(u64, u64); 5] = [(2, 3), (3, 5), (5, 7), (7, 8), (2, 5)];

/// Record holders of `(2, 3)` with `p <= 32768`, one per line as
/// `kind,p,d,delta_p,delta_d`.
pub const TABLE1_CSV: &str = include_str!("../data/table1.csv");

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Table1,
    Monoid,
    Phases,
    Density,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Table1, Suite::Monoid, Suite::Phases, Suite::Density];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Table1 => "table1",
            Suite::Monoid => "monoid",
            Suite::Phases => "phases",
            Suite::Density => "density",
        }
    }

    pub fn run(self, bit_cap: u64) -> Result<SuiteReport> {
        let checks = match self {
            Suite::Table1 => table1_suite(bit_cap)?,
            Suite::Monoid => monoid_suite(bit_cap)?,
            Suite::Phases => phases_suite(bit_cap)?,
            Suite::Density => density_suite(bit_cap)?,
        };
        Ok(SuiteReport {
            suite: self.name().into(),
            checks,
        })
    }
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Parses [`TABLE1_CSV`].
pub fn table1_golden() -> Vec<RecordEntry> {
    TABLE1_CSV
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let n = |i: usize| f[i].parse::<BigUint>().expect("golden table is well formed");
            RecordEntry {
                kind: if f[0] == "min" { RecordKind::Min } else { RecordKind::Max },
                p: n(1),
                d: n(2),
                delta_p: n(3),
                delta_d: n(4),
            }
        })
        .collect()
}

fn describe(r: &crate::records::EquivalenceReport) -> String {
    match &r.first_divergence {
        None => format!("{} rows", r.scan_rows),
        Some((x, y)) => format!("first difference: {x:?} vs {y:?}"),
    }
}

fn table1_suite(bit_cap: u64) -> Result<Vec<Check>> {
    let params = Params::new(2, 3)?.with_bit_cap(bit_cap);
    let golden = table1_golden();
    let scan = scan_records(params, 32768)?;
    let seq = sequence_records(params, 32768)?;
    let vs_scan = compare_record_lists(&golden, &scan);
    let vs_seq = compare_record_lists(&golden, &seq);
    let both = compare_record_lists(&scan, &seq);
    Ok(vec![
        check("scan reproduces the record table", vs_scan.matched, describe(&vs_scan)),
        check("sequence reproduces the record table", vs_seq.matched, describe(&vs_seq)),
        check("scan and sequence agree", both.matched, describe(&both)),
    ])
}

/// `d(p)` for `p = 0..=n` by keeping `A = a^q >= B = b^p` with integer
/// multiplications only.
pub fn incremental_offsets(params: Params, n: u64) -> Vec<u64> {
    let (a, b) = (BigUint::from(params.a()), BigUint::from(params.b()));
    let (mut big_a, mut big_b) = (BigUint::one(), BigUint::one());
    let mut q = 0u64;
    let mut out = Vec::with_capacity(n as usize + 1);
    for p in 0..=n {
        if p > 0 {
            big_b *= &b;
        }
        while big_a < big_b {
            big_a *= &a;
            q += 1;
        }
        out.push(q - p);
    }
    out
}

fn monoid_suite(bit_cap: u64) -> Result<Vec<Check>> {
    const N: u64 = 2000;
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for (a, b) in TEST_PARAMS {
        let params = Params::new(a, b)?.with_bit_cap(bit_cap);
        let tag = format!("({a},{b})");
        let elems: Vec<Element> = (0..=N).map(|p| params.phi(p)).collect::<Result<_>>()?;

        let oracle = incremental_offsets(params, N);
        let bad = elems.iter().zip(&oracle).position(|(e, &d)| *e.d() != BigUint::from(d));
        checks.push(check(
            format!("{tag} offsets match integer scan"),
            bad.is_none(),
            format!("p <= {N}, first mismatch {bad:?}"),
        ));

        let a_pp = PowerProduct::integer(a);
        let mut range_ok = true;
        for e in &elems {
            let v = e.value();
            let lo = v.cmp_one(bit_cap)?;
            let in_range = v.compare(&a_pp, bit_cap)? == Ordering::Less
                && (lo == Ordering::Greater || (lo == Ordering::Equal && e.p().is_zero()));
            range_ok &= in_range;
        }
        checks.push(check(
            format!("{tag} values in [1, a), 1 only at p = 0"),
            range_ok,
            format!("p <= {N}"),
        ));

        let mut sorted = elems.clone();
        sorted.sort_by(|x, y| x.compare(y).expect("same parameters"));
        let distinct = sorted.windows(2).all(|w| w[0].compare(&w[1]).ok() == Some(Ordering::Less));
        checks.push(check(format!("{tag} values pairwise distinct"), distinct, format!("p <= {N}")));

        let mut add_ok = true;
        let mut assoc_ok = true;
        for _ in 0..500 {
            let (p1, p2, p3) = (rng.gen_range(0..=N / 2), rng.gen_range(0..=N / 2), rng.gen_range(0..=N / 3));
            let (x, y, z) = (&elems[p1 as usize], &elems[p2 as usize], &elems[p3 as usize]);
            let sum = &elems[(p1 + p2) as usize];
            let defect = BigInt::from(sum.d().clone()) - BigInt::from(x.d().clone()) - BigInt::from(y.d().clone());
            let wraps = x.product_class(y)? == ProductClass::AtLeastA;
            add_ok &= (defect == BigInt::zero() && !wraps) || (defect == -BigInt::one() && wraps);
            let xy = x.star(y)?;
            add_ok &= xy == *sum;
            assoc_ok &= xy.star(z)? == x.star(&y.star(z)?)? && y.star(x)? == xy;
            assoc_ok &= x.star(&params.one())? == *x;
        }
        checks.push(check(
            format!("{tag} offset defect is 0 or -1, -1 exactly when the product wraps"),
            add_ok,
            "500 random pairs",
        ));
        checks.push(check(format!("{tag} product law is associative and commutative"), assoc_ok, "500 random triples"));

        let mut inv_ok = true;
        for z in -1000i64..=1000 {
            let x = params.phi_signed(z)?;
            let y = params.phi_signed(-z)?;
            let prod = x.star(&y)?;
            inv_ok &= prod.z().is_zero() && prod.value().is_one();
        }
        checks.push(check(format!("{tag} signed inverses"), inv_ok, "|z| <= 1000"));
    }
    Ok(checks)
}

fn phases_suite(bit_cap: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (a, b) in TEST_PARAMS {
        let params = Params::new(a, b)?.with_bit_cap(bit_cap);
        let tag = format!("({a},{b})");
        let pairs = generate_pairs(params, &StopCriterion::MaxSteps(1000))?;
        let mono = monotonicity_failure(&pairs)?;
        checks.push(check(
            format!("{tag} u falls, v rises, one per step"),
            mono.is_none(),
            format!("1000 steps, first failure {mono:?}"),
        ));

        let phases = segment_phases(&pairs)?;
        let mut lam_ok = phases.len() >= 25;
        for ph in phases.iter().take(25) {
            let h = &pairs[ph.head as usize];
            lam_ok &= lambda_closed_form(&h.u, &h.v, ph.modifies)? == ph.lambda;
        }
        checks.push(check(
            format!("{tag} phase lengths from the head values"),
            lam_ok,
            format!("{} complete phases, first 25 checked", phases.len()),
        ));

        let seqs = extract_sequences(&pairs)?;
        let rec = verify_recursive_form(&seqs)?;
        checks.push(check(
            format!("{tag} tail sequences follow both recursions"),
            rec.matched(),
            format!("{} transitions, mismatch {:?}/{:?}", rec.checked, rec.uv_mismatch, rec.uw_mismatch),
        ));
        let inter = interleaving_failure(&seqs)?;
        let inc = tv_increase_failure(&seqs)?;
        checks.push(check(
            format!("{tag} tail sequences interleave"),
            inter.is_none() && inc.is_none(),
            format!("{} terms, first failure {inter:?}", seqs.tu.len()),
        ));
    }
    let params = Params::new(2, 3)?.with_bit_cap(bit_cap);
    let pairs = generate_pairs(params, &StopCriterion::MaxSteps(30))?;
    let lams: Vec<u64> = segment_phases(&pairs)?.iter().map(|p| p.lambda).take(7).collect();
    checks.push(check(
        "(2,3) first phase lengths",
        lams == [1, 2, 2, 3, 1, 5, 2],
        format!("{lams:?}"),
    ));
    Ok(checks)
}

fn density_suite(bit_cap: u64) -> Result<Vec<Check>> {
    let params = Params::new(2, 3)?.with_bit_cap(bit_cap);
    let tol = BigRational::new(1.into(), 1_000_000.into());
    let t = Target::ratio(3, 2)?;
    let tr = approximate(params, &t, &tol, 200)?;
    let tp = PowerProduct::from_rational(t.value());
    let mut below = true;
    for s in &tr.sigma {
        below &= s.value().compare(&tp, bit_cap)? == Ordering::Less;
    }
    let increasing = tr.sigma.windows(2).all(|w| w[0].compare(&w[1]).ok() == Some(Ordering::Less));
    let mut checks = vec![check(
        "3/2 to 1e-6",
        tr.converged && below && increasing,
        format!("{} steps, gap <= {}", tr.sigma.len() - 1, tr.final_gap_bound),
    )];

    let r = approximate_positive(params, &Target::ratio(10, 1)?, &tol, 200)?;
    let ok = r.k == 3 && r.scaled == Target::ratio(5, 4)? && r.trace.as_ref().is_some_and(|t| t.converged);
    checks.push(check("10 in the coset 2^3 F", ok, format!("k = {}", r.k)));

    let near = Target::ratio(10001, 10000)?;
    let tr = approximate(params, &near, &BigRational::new(1.into(), 100.into()), 200)?;
    checks.push(check(
        "10001/10000 to 1e-2",
        tr.converged,
        format!("sigma_0 at chain index {}", tr.u_indices[0]),
    ));
    Ok(checks)
}
