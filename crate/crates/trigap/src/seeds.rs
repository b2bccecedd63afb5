//! Repetends of `1/3^i` (seeds), the normalized values
//! `p_i = 2^{ceil(i*log2 3) - 1}/3^i`, prefix testing for odd integers,
//! and the two level-table upper bounds on the minimal seed index.

use crate::collatz::{OddInt, YElement};
use crate::exact::Pow3Cache;
use crate::three_distance::LevelTable;
use crate::{Error, Result};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt;

/// Repetend of the binary expansion of `1/3^i`; its length equals the
/// multiplicative order of 2 modulo `3^i`, which is `2*3^{i-1}`.
#[derive(Clone, PartialEq, Eq)]
pub struct Seed {
    pub order: u32,
    digits: Vec<u8>,
}

impl Seed {
    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn len(&self) -> u64 {
        self.digits.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Seed of order `i >= 1` by exact long division of 1 by `3^i` in base 2,
/// stopping when the remainder cycle closes.
pub fn seed(i: u32) -> Seed {
    assert!(i >= 1, "seed order must be positive");
    let den = BigUint::from(3u8).pow(i);
    let mut digits = Vec::new();
    let mut rem = BigUint::one();
    loop {
        rem <<= 1u32;
        if rem >= den {
            rem -= &den;
            digits.push(1u8);
        } else {
            digits.push(0u8);
        }
        if rem.is_one() {
            break;
        }
    }
    let expect = BigUint::from(3u8).pow(i - 1) * 2u8;
    debug_assert_eq!(BigUint::from(digits.len()), expect);
    Seed { order: i, digits }
}

/// `p_i = 2^{ceil(i*log2 3) - 1}/3^i`, the value of `1/3^i` with its
/// leading zero bits removed; lies in `[1/2, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PElement {
    pub index: u64,
    pub value: BigRational,
}

pub fn p_element(i: u64) -> PElement {
    let mut pow3 = Pow3Cache::new();
    p_element_cached(i, &mut pow3)
}

fn p_element_cached(i: u64, pow3: &mut Pow3Cache) -> PElement {
    if i == 0 {
        return PElement {
            index: 0,
            value: BigRational::new(BigInt::one(), BigInt::from(2)),
        };
    }
    // ceil(i*log2 3) = floor(i*log2 3) + 1 for i >= 1
    let e = pow3.floor_log2_pow3(i); // ceil - 1
    let den = BigInt::from(pow3.get(i).clone());
    PElement {
        index: i,
        value: BigRational::new(BigInt::one() << e, den),
    }
}

/// The elements of `P_k` in strictly increasing order, with the sentinel 1
/// appended. Exact rational sort.
pub fn p_sorted(k: u64) -> Vec<PElement> {
    assert!(k >= 1, "k must be positive");
    let mut pow3 = Pow3Cache::new();
    // exponents: p_i = 2^{e_i}/3^i; compare p_a < p_b as
    // 3^b << e_a < 3^a << e_b
    let exps: Vec<u64> = (0..k).map(|i| p_exponent(i, &mut pow3)).collect();
    let mut idx: Vec<u64> = (0..k).collect();
    idx.sort_by(|&a, &b| {
        let lhs = pow3.get(b).clone() << exps[a as usize];
        let rhs = pow3.get(a).clone() << exps[b as usize];
        lhs.cmp(&rhs)
    });
    let mut out: Vec<PElement> = idx
        .into_iter()
        .map(|i| p_element_cached(i, &mut pow3))
        .collect();
    out.push(PElement {
        index: k,
        value: BigRational::one(),
    });
    out
}

/// Exponent `e_i` with `p_i = 2^{e_i}/3^i`; `e_0 = -1` is folded into the
/// pair `(e + 1, value/2)` convention: returns `e_i + 1` scaled so that
/// `p_i = 2^{e'_i}/(2*3^i)`.
fn p_exponent(i: u64, pow3: &mut Pow3Cache) -> u64 {
    if i == 0 {
        0 // p_0 = 2^0 / 2
    } else {
        pow3.floor_log2_pow3(i) + 1 // p_i = 2^{floor+1} / (2*3^i)
    }
}

/// True iff the binary representation of `x` is the first `n` bits of the
/// expansion of `p_i`, tested by the integer-floor formulation
/// `floor(2^{ceil(i log2 3) - 1 + n}/3^i) = x`, i.e.
/// `x*3^i <= 2^e < (x+1)*3^i`.
pub fn is_prefix(x: &OddInt, i: u64) -> bool {
    let mut pow3 = Pow3Cache::new();
    is_prefix_cached(x, i, &mut pow3)
}

fn is_prefix_cached(x: &OddInt, i: u64, pow3: &mut Pow3Cache) -> bool {
    let n = x.bits();
    let e = if i == 0 {
        n - 1
    } else {
        pow3.floor_log2_pow3(i) + n
    };
    let p3 = pow3.get(i);
    let lhs = x.value() * p3;
    let two_e = BigUint::one() << e;
    lhs <= two_e && two_e < lhs + p3
}

/// Result of the minimal-seed-index search.
#[derive(Clone, Debug)]
pub struct MinSeedIndex {
    pub i_min: u64,
    /// Up to three further matching indices, witnesses of the infinite
    /// family.
    pub witnesses: Vec<u64>,
    /// The scan bound that guaranteed existence (Lemma-4-style bound).
    pub bound: u64,
}

/// Smallest `i >= 0` with `is_prefix(x, i)`; existence below the Lemma-4
/// bound is guaranteed, so exceeding it is a hard error (regression
/// signal).
pub fn min_seed_index(x: &OddInt, table: &mut LevelTable) -> Result<MinSeedIndex> {
    let n = x.bits();
    let bound = seed_index_bound_lemma4(n, table)?;
    let mut pow3 = Pow3Cache::new();
    let mut i_min = None;
    for i in 0..bound {
        if is_prefix_cached(x, i, &mut pow3) {
            i_min = Some(i);
            break;
        }
    }
    let i_min = i_min.ok_or_else(|| Error::SeedBoundExceeded {
        x: x.to_string(),
        bound,
    })?;
    let mut witnesses = Vec::new();
    let cap = bound.saturating_mul(4);
    let mut i = i_min + 1;
    while witnesses.len() < 3 && i < cap {
        if is_prefix_cached(x, i, &mut pow3) {
            witnesses.push(i);
        }
        i += 1;
    }
    Ok(MinSeedIndex {
        i_min,
        witnesses,
        bound,
    })
}

/// Smallest `i < bound` with `is_prefix(x, i)`, or `None`. Sweep kernel:
/// takes a precomputed bound so callers can share an immutable level table
/// across threads.
pub fn min_seed_index_bounded(x: &OddInt, bound: u64) -> Option<u64> {
    let mut pow3 = Pow3Cache::new();
    (0..bound).find(|&i| is_prefix_cached(x, i, &mut pow3))
}

/// Smallest `i` with `p_i <= y < p_i + epsilon`. The lower test is the
/// exact integer form of `frac(i*log2 3) >= -log2 y`, namely
/// `2^{n + floor(i*log2 3)} <= x*3^i`; the upper side is an exact rational
/// comparison.
pub fn density_search(y: &YElement, epsilon: &BigRational) -> Result<(u64, PElement)> {
    assert!(epsilon > &BigRational::zero(), "epsilon must be positive");
    let x = y.dyadic().numer();
    let n = y.dyadic().exp();
    let y_val = y.dyadic().value();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if y_val < &half + epsilon {
        return Ok((0, p_element(0)));
    }
    // safety cap: existence is guaranteed once 2/k_h < log2(1+eps), and
    // log2(1+eps) > eps/2 for eps <= 1, so k_h >= 4/eps suffices
    let cap_f = (BigRational::from(BigInt::from(4)) / epsilon).ceil();
    let cap = cap_f.to_integer().to_u64().unwrap_or(u64::MAX);
    let mut table = LevelTable::new()?;
    while table.last().k < cap {
        table.extend_to_h(table.last().h + 1)?;
    }
    let bound = table.last().next_k();
    let mut pow3 = Pow3Cache::new();
    for i in 1..bound {
        let e = pow3.floor_log2_pow3(i) + n;
        let p3 = pow3.get(i);
        let lower_ok = (BigUint::one() << e) <= x.clone() * p3;
        if !lower_ok {
            continue;
        }
        let p = p_element_cached(i, &mut pow3);
        if y_val < &p.value + epsilon {
            debug_assert!(p.value <= y_val);
            return Ok((i, p));
        }
    }
    Err(Error::SeedBoundExceeded {
        x: x.to_string(),
        bound,
    })
}

/// Bound from the `1/k_h < dmax < 2/k_h` lemma: the smallest table value
/// `k_h` with `2/k_h <= 2^{-n-1}`, i.e. `k_h >= 2^{n+2}`.
pub fn seed_index_bound_lemma4(n: u64, table: &mut LevelTable) -> Result<u64> {
    let target = 2u64
        .checked_pow(u32::try_from(n + 2).map_err(|_| Error::OutOfRange {
            what: "bit length",
            value: n.to_string(),
        })?)
        .ok_or(Error::OutOfRange {
            what: "bit length",
            value: n.to_string(),
        })?;
    while table.last().k < target {
        let h = table.last().h;
        table.extend_to_h(h + 1)?;
    }
    Ok(table
        .records()
        .iter()
        .map(|r| r.k)
        .find(|&k| k >= target)
        .expect("table extended past target"))
}

/// Bound from the `k*dmax(k) < (q+5+5/q)/2` lemma: the smallest `k` with
/// `k_h <= k < k_{h+1}` and `(q_h + 5 + 5/q_h)/(2k) <= 2^{-n-1}`, i.e.
/// `k >= 2^n*(q^2 + 5q + 5)/q`.
pub fn seed_index_bound_lemma7(n: u64, table: &mut LevelTable) -> Result<u64> {
    let mut h = 0u32;
    loop {
        table.extend_to_h(h)?;
        let lev = table.get(h).expect("just extended").clone();
        let q = BigUint::from(lev.q);
        let num = (BigUint::one() << n) * (&q * &q + 5u32 * &q + 5u32);
        // k_cand = ceil(num / q)
        let k_cand = ((num + &q - 1u32) / &q).to_u64().ok_or(Error::OutOfRange {
            what: "bit length",
            value: n.to_string(),
        })?;
        let k = k_cand.max(lev.k);
        if k < lev.next_k() {
            return Ok(k);
        }
        h += 1;
    }
}

/// Theorem-level cross-check: for `i = min_seed_index(x)`, the binary
/// representation of `x` sits as a prefix of `seed(i)` repeated with its
/// leading zeros removed. Returns `(i, offset)`; the offset into the
/// zero-stripped stream is always 0 when the check passes.
pub fn power_prefix_witness(x: &OddInt, table: &mut LevelTable) -> Result<(u64, u64)> {
    let found = min_seed_index(x, table)?;
    let i = found.i_min;
    let n = x.bits();
    let xbits: Vec<u8> = (0..n).rev().map(|b| u8::from(x.value().bit(b))).collect();
    if i == 0 {
        // p_0 = 1/2: stripped stream is "1000…"; only x = 1 matches
        let stream: Vec<u8> = std::iter::once(1u8)
            .chain(std::iter::repeat(0u8))
            .take(n as usize)
            .collect();
        if xbits == stream {
            return Ok((0, 0));
        }
        return Err(Error::SeedBoundExceeded {
            x: x.to_string(),
            bound: found.bound,
        });
    }
    let s = seed(u32::try_from(i).map_err(|_| Error::OutOfRange {
        what: "seed order",
        value: i.to_string(),
    })?);
    let period = s.len();
    // strip ceil(i*log2 3) - 1 leading zeros from seed^inf
    let strip = crate::exact::floor_log2_pow3(i) % period;
    let ok = (0..n).all(|b| {
        let pos = ((strip + b) % period) as usize;
        s.digits()[pos] == xbits[b as usize]
    });
    if ok {
        Ok((i, 0))
    } else {
        Err(Error::SeedBoundExceeded {
            x: x.to_string(),
            bound: found.bound,
        })
    }
}

/// First `count` binary digits of `p_i` after the point, by long division.
/// Test oracle for the integer-floor prefix formula.
pub fn p_element_digits(i: u64, count: u64) -> Vec<u8> {
    let p = p_element(i);
    let mut num = p.value.numer().to_biguint().expect("p > 0");
    let den = p.value.denom().to_biguint().expect("p > 0");
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        num <<= 1u32;
        if num >= den {
            num -= &den;
            out.push(1u8);
        } else {
            out.push(0u8);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn odd(x: u64) -> OddInt {
        OddInt::from_u64(x).unwrap()
    }

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn seed_examples() {
        assert_eq!(seed(1).to_string(), "01");
        assert_eq!(seed(2).to_string(), "000111");
        assert_eq!(seed(3).len(), 18);
    }

    #[test]
    fn seed_length_is_multiplicative_order() {
        for i in 1..=8u32 {
            let s = seed(i);
            let expect = 2 * 3u64.pow(i - 1);
            assert_eq!(s.len(), expect);
            // independent oracle: multiplicative order of 2 mod 3^i
            let m = BigUint::from(3u8).pow(i);
            let two = BigUint::from(2u8);
            assert!(two.modpow(&BigUint::from(expect), &m).is_one());
            for p in [2u64, 3] {
                if expect % p == 0 {
                    assert!(!two.modpow(&BigUint::from(expect / p), &m).is_one());
                }
            }
        }
    }

    #[test]
    fn seed_digits_equal_repetend_integer() {
        // repetend of 1/d with period L is (2^L - 1)/d written in L bits
        for i in 1..=7u32 {
            let s = seed(i);
            let d = BigUint::from(3u8).pow(i);
            let val = ((BigUint::one() << s.len()) - BigUint::one()) / &d;
            let bits: Vec<u8> = (0..s.len())
                .rev()
                .map(|b| u8::from(val.bit(b)))
                .collect();
            assert_eq!(s.digits(), &bits[..], "i = {i}");
        }
    }

    #[test]
    fn p_element_examples() {
        assert_eq!(p_element(0).value, rat(1, 2));
        assert_eq!(p_element(1).value, rat(2, 3));
        assert_eq!(p_element(2).value, rat(8, 9));
    }

    #[test]
    fn p_elements_leave_y() {
        // for i >= 1 the denominator keeps a factor of 3: infinite
        // periodic expansion, so p is not in Y
        for i in 1..=50u64 {
            let p = p_element(i);
            assert!((p.value.denom() % BigInt::from(3)).is_zero(), "i = {i}");
            assert!(p.value >= rat(1, 2) && p.value < rat(1, 1));
        }
    }

    #[test]
    fn p_sorted_examples() {
        let ps = p_sorted(1);
        let vals: Vec<BigRational> = ps.iter().map(|p| p.value.clone()).collect();
        assert_eq!(vals, vec![rat(1, 2), rat(1, 1)]);

        let ps = p_sorted(3);
        let vals: Vec<BigRational> = ps.iter().map(|p| p.value.clone()).collect();
        assert_eq!(vals, vec![rat(1, 2), rat(2, 3), rat(8, 9), rat(1, 1)]);

        let ps = p_sorted(4);
        let vals: Vec<BigRational> = ps.iter().map(|p| p.value.clone()).collect();
        assert_eq!(
            vals,
            vec![rat(1, 2), rat(16, 27), rat(2, 3), rat(8, 9), rat(1, 1)]
        );
    }

    #[test]
    fn p_sorted_strictly_increasing() {
        let ps = p_sorted(80);
        for w in ps.windows(2) {
            assert!(w[0].value < w[1].value);
        }
    }

    #[test]
    fn is_prefix_examples() {
        assert!(is_prefix(&odd(1), 0));
        assert!(is_prefix(&odd(5), 1));
        assert!(!is_prefix(&odd(7), 1));
        assert!(is_prefix(&odd(7), 2));
    }

    #[test]
    fn is_prefix_matches_digit_oracle() {
        for x in (1u64..200).step_by(2) {
            let xi = odd(x);
            let n = xi.bits();
            let xbits: Vec<u8> = (0..n).rev().map(|b| u8::from(xi.value().bit(b))).collect();
            for i in 0..40u64 {
                let by_digits = p_element_digits(i, n) == xbits;
                assert_eq!(is_prefix(&xi, i), by_digits, "x = {x}, i = {i}");
            }
        }
    }

    #[test]
    fn min_seed_examples() {
        let mut table = LevelTable::new().unwrap();
        assert_eq!(min_seed_index(&odd(1), &mut table).unwrap().i_min, 0);
        assert_eq!(min_seed_index(&odd(5), &mut table).unwrap().i_min, 1);
        assert_eq!(min_seed_index(&odd(3), &mut table).unwrap().i_min, 2);
    }

    #[test]
    fn min_seed_witnesses_match() {
        let mut table = LevelTable::new().unwrap();
        let found = min_seed_index(&odd(11), &mut table).unwrap();
        assert!(is_prefix(&odd(11), found.i_min));
        for &w in &found.witnesses {
            assert!(w > found.i_min);
            assert!(is_prefix(&odd(11), w));
        }
    }

    #[test]
    fn density_examples() {
        let y_half = YElement::from_numer(BigUint::from(1u8)).unwrap();
        let (i, p) = density_search(&y_half, &rat(1, 100)).unwrap();
        assert_eq!(i, 0);
        assert_eq!(p.value, rat(1, 2));

        let y = YElement::from_numer(BigUint::from(5u8)).unwrap();
        let (i, p) = density_search(&y, &rat(1, 16)).unwrap();
        assert_eq!(i, 3);
        assert_eq!(p.value, rat(16, 27));

        let y = YElement::from_numer(BigUint::from(7u8)).unwrap();
        let eps = rat(1, 64);
        let (_, p) = density_search(&y, &eps).unwrap();
        let yv = y.dyadic().value();
        assert!(p.value <= yv && yv < &p.value + &eps);
    }

    #[test]
    fn bound_examples() {
        let mut table = LevelTable::new().unwrap();
        // n = 3: k_h >= 32, first such k_h is 53
        assert_eq!(seed_index_bound_lemma4(3, &mut table).unwrap(), 53);
        // n = 1: k_h >= 8, first such k_h is 17
        assert_eq!(seed_index_bound_lemma4(1, &mut table).unwrap(), 17);
        // n = 1 refined bound: first level fitting k >= 2*(q^2+5q+5)/q is
        // h = 3 (q = 3): k = ceil(2*29/3) = 20
        assert_eq!(seed_index_bound_lemma7(1, &mut table).unwrap(), 20);
        // n = 3: levels up to q=3 give ceil(8*29/3) = 78 inside [53, 94)
        let b7 = seed_index_bound_lemma7(3, &mut table).unwrap();
        assert!(b7 >= 53 && b7 < 94);
    }

    #[test]
    fn power_prefix_witness_examples() {
        let mut table = LevelTable::new().unwrap();
        assert_eq!(power_prefix_witness(&odd(7), &mut table).unwrap(), (2, 0));
        assert_eq!(power_prefix_witness(&odd(5), &mut table).unwrap(), (1, 0));
        assert_eq!(power_prefix_witness(&odd(1), &mut table).unwrap(), (0, 0));
    }
}
