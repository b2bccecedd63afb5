//! Exact-comparison calculus for reals of the form `a*log2(3) + b`.
//!
//! Every ordering decision reduces to integer arithmetic: either a direct
//! comparison of `3^a` against a power of two, or a certified dyadic
//! enclosure of `log2(3)` whose endpoints are produced by integer
//! shift-and-square with directed rounding. Floating point never decides
//! anything; it only appears in display output.

use crate::{Error, Result};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::{Arc, Mutex};

/// Dyadic enclosure of log2(3): numerators `lo`, `hi` at scale `2^bits`,
/// with `lo/2^bits <= log2(3) <= hi/2^bits`.
#[derive(Clone)]
struct ZEnclosure {
    bits: u32,
    lo: BigInt,
    hi: BigInt,
}

static Z_CACHE: Mutex<Option<Arc<ZEnclosure>>> = Mutex::new(None);

/// Certified enclosure of log2(3) = 1 + log2(3/2) by interval
/// shift-and-square on the fractional part. All rounding is directed
/// outward, so the returned bounds are rigorous.
fn compute_z(frac_bits: u32) -> ZEnclosure {
    let steps = frac_bits + 2;
    let mut guard: u32 = 64;
    'retry: loop {
        let g = steps + guard;
        let scale = BigUint::one() << g;
        let two_scale = &scale << 1u32;
        let four_scale = &scale << 2u32;
        // r = 3/2 exactly, in [1, 2)
        let mut lo = BigUint::from(3u8) << (g - 1);
        let mut hi = lo.clone();
        let mut digits = BigUint::zero();
        for _ in 0..steps {
            lo = (&lo * &lo) >> g;
            hi = ((&hi * &hi) + (&scale - BigUint::one())) >> g;
            digits <<= 1u32;
            if lo >= two_scale {
                // bit 1: halve, rounding outward
                lo >>= 1u32;
                hi = (hi + BigUint::one()) >> 1u32;
                digits |= BigUint::one();
            } else if hi < two_scale {
                // bit 0
            } else {
                guard *= 2;
                continue 'retry;
            }
            if lo < scale || hi >= four_scale {
                // interval left [1, 4); widen the guard and retry
                guard *= 2;
                continue 'retry;
            }
        }
        // log2(3/2) in [digits/2^steps, (digits + 2)/2^steps] because
        // log2(lo/2^g) in [0, 1) and log2(hi/2^g) in [0, 2).
        let lo_num = BigInt::from(digits.clone()) + (BigInt::one() << steps);
        let hi_num = BigInt::from(digits) + 2 + (BigInt::one() << steps);
        return ZEnclosure {
            bits: steps,
            lo: lo_num,
            hi: hi_num,
        };
    }
}

fn z_enclosure(min_frac_bits: u32) -> Arc<ZEnclosure> {
    let mut cache = Z_CACHE.lock().unwrap();
    if let Some(z) = cache.as_ref() {
        if z.bits >= min_frac_bits {
            return Arc::clone(z);
        }
    }
    let bits = min_frac_bits.max(cache.as_ref().map_or(128, |z| z.bits * 2));
    let z = Arc::new(compute_z(bits));
    *cache = Some(Arc::clone(&z));
    Arc::clone(cache.as_ref().unwrap())
}

/// Dyadic endpoints `(lo_num, hi_num, scale_bits)` with
/// `lo/2^scale <= log2(3) <= hi/2^scale` and `hi - lo <= 2`.
pub fn log2_3_dyadic(frac_bits: u32) -> (BigInt, BigInt, u32) {
    let z = z_enclosure(frac_bits);
    (z.lo.clone(), z.hi.clone(), z.bits)
}

/// Rational enclosure of log2(3) with width at most `2^-frac_bits`.
pub fn log2_3_interval(frac_bits: u32) -> (BigRational, BigRational) {
    let (lo, hi, bits) = log2_3_dyadic(frac_bits);
    let den = BigInt::one() << bits;
    (
        BigRational::new(lo, den.clone()),
        BigRational::new(hi, den),
    )
}

/// Exact real `a*log2(3) + b` with integer coefficients.
///
/// The value is irrational unless `a = 0`, so the sign of a nonzero form is
/// always decidable.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LinearForm {
    a: BigInt,
    b: BigInt,
}

impl LinearForm {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>) -> Self {
        LinearForm {
            a: a.into(),
            b: b.into(),
        }
    }

    pub fn zero() -> Self {
        LinearForm::new(0, 0)
    }

    pub fn one() -> Self {
        LinearForm::new(0, 1)
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Sign of the value, in {-1, 0, +1}.
    ///
    /// Decided by a certified integer enclosure of log2(3), escalating the
    /// precision until the enclosure separates the form from zero. This
    /// terminates for every input because the value is irrational whenever
    /// `a != 0`. `sign_by_power` is the direct power-comparison route kept
    /// as an independent oracle.
    pub fn sign(&self) -> i32 {
        if self.a.is_zero() {
            return sign_i32(&self.b);
        }
        let mut bits: u32 = 128;
        loop {
            let z = z_enclosure(bits);
            // f*2^scale is enclosed by [a*lo + b*2^scale, a*hi + b*2^scale]
            // (endpoints swapped when a < 0)
            let shift_b = &self.b << z.bits;
            let (mut lo, mut hi) = (&self.a * &z.lo + &shift_b, &self.a * &z.hi + &shift_b);
            if self.a.is_negative() {
                std::mem::swap(&mut lo, &mut hi);
            }
            if lo.is_positive() {
                return 1;
            }
            if hi.is_negative() {
                return -1;
            }
            bits = bits.saturating_mul(2);
        }
    }

    pub fn is_positive_value(&self) -> bool {
        self.sign() > 0
    }

    /// Ordering of the value against the rational `r`.
    pub fn cmp_rational(&self, r: &BigRational) -> Ordering {
        let q = r.denom();
        let f = LinearForm::new(&self.a * q, &self.b * q - r.numer());
        match f.sign() {
            s if s > 0 => Ordering::Greater,
            0 => Ordering::Equal,
            _ => Ordering::Less,
        }
    }

    /// `floor(a*log2(3) + b)`, never an integer-boundary question when
    /// `a != 0` (irrationality), so enclosure escalation terminates.
    pub fn floor(&self) -> BigInt {
        if self.a.is_zero() {
            return self.b.clone();
        }
        let mut bits: u32 = 128;
        loop {
            let z = z_enclosure(bits);
            let shift_b = &self.b << z.bits;
            let (mut lo, mut hi) = (&self.a * &z.lo + &shift_b, &self.a * &z.hi + &shift_b);
            if self.a.is_negative() {
                std::mem::swap(&mut lo, &mut hi);
            }
            let scale = BigInt::one() << z.bits;
            let fl = lo.div_floor(&scale);
            let fh = hi.div_floor(&scale);
            if fl == fh {
                return fl;
            }
            bits = bits.saturating_mul(2);
        }
    }

    /// Interval of width at most `tolerance` containing the value.
    /// Display plumbing only; decisions go through `sign`.
    pub fn enclose(&self, tolerance: &BigRational) -> RationalInterval {
        assert!(tolerance.is_positive(), "tolerance must be positive");
        let b_rat = BigRational::from(self.b.clone());
        if self.a.is_zero() {
            return RationalInterval::new(b_rat.clone(), b_rat);
        }
        // need z-width <= tolerance / |a|
        let need = (BigRational::from(self.a.abs()) / tolerance)
            .ceil()
            .to_integer();
        let bits = need.bits() as u32 + 1;
        let (zl, zh) = log2_3_interval(bits);
        let a_rat = BigRational::from(self.a.clone());
        let (mut lo, mut hi) = (&a_rat * zl + &b_rat, a_rat * zh + b_rat);
        if self.a.is_negative() {
            std::mem::swap(&mut lo, &mut hi);
        }
        RationalInterval::new(lo, hi)
    }

    pub fn scale(&self, c: impl Into<BigInt>) -> LinearForm {
        let c = c.into();
        LinearForm::new(&self.a * &c, &self.b * &c)
    }
}

fn sign_i32(x: &BigInt) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

impl fmt::Debug for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*log2(3) + {}", self.a, self.b)
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

impl Add for &LinearForm {
    type Output = LinearForm;
    fn add(self, rhs: &LinearForm) -> LinearForm {
        LinearForm::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl Sub for &LinearForm {
    type Output = LinearForm;
    fn sub(self, rhs: &LinearForm) -> LinearForm {
        LinearForm::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl Neg for &LinearForm {
    type Output = LinearForm;
    fn neg(self) -> LinearForm {
        LinearForm::new(-&self.a, -&self.b)
    }
}

impl PartialOrd for LinearForm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LinearForm {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self - other).sign() {
            s if s > 0 => Ordering::Greater,
            0 => Ordering::Equal,
            _ => Ordering::Less,
        }
    }
}

/// Sign decided purely by comparing `3^|a|` against a power of two.
/// Exponentially expensive in `|a|`; used for small coefficients and as the
/// independent oracle for `LinearForm::sign`.
pub fn sign_by_power(f: &LinearForm) -> i32 {
    if f.a.is_zero() {
        return sign_i32(&f.b);
    }
    if f.a.is_negative() {
        return -sign_by_power(&-f);
    }
    // a >= 1: a*z + b > 0 iff 3^a > 2^{-b}
    if !f.b.is_negative() {
        return 1;
    }
    let a = f.a.to_u32().expect("sign_by_power coefficient too large");
    let c = (-&f.b).to_u64().expect("exponent too large") as usize;
    let p3 = BigUint::from(3u8).pow(a);
    let p2 = BigUint::one() << c;
    match p3.cmp(&p2) {
        Ordering::Greater => 1,
        Ordering::Less => -1,
        Ordering::Equal => 0, // unreachable for a >= 1
    }
}

/// The unique `t >= 0` with `t*g <= f < (t+1)*g`, for positive forms.
pub fn floor_ratio(f: &LinearForm, g: &LinearForm) -> Result<BigUint> {
    Ok(floor_ratio_rem(f, g)?.0)
}

/// `floor_ratio` together with the remainder `f - t*g`.
pub fn floor_ratio_rem(f: &LinearForm, g: &LinearForm) -> Result<(BigUint, LinearForm)> {
    if f.sign() <= 0 || g.sign() <= 0 {
        return Err(Error::NonPositiveForm);
    }
    // doubling search for an upper bound, then bisection
    let mut hi = BigUint::one();
    while (f - &g.scale(BigInt::from(hi.clone()))).sign() >= 0 {
        hi <<= 1u32;
    }
    let mut lo = BigUint::zero(); // invariant: lo*g <= f < hi*g
    while &lo + 1u32 < hi {
        let mid = (&lo + &hi) >> 1u32;
        if (f - &g.scale(BigInt::from(mid.clone()))).sign() >= 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rem = f - &g.scale(BigInt::from(lo.clone()));
    Ok((lo, rem))
}

/// `floor(i*log2(3))`, i.e. bit length of `3^i` minus one.
pub fn floor_log2_pow3(i: u64) -> u64 {
    if i == 0 {
        return 0;
    }
    let p3 = BigUint::from(3u8).pow(u32::try_from(i).expect("exponent too large"));
    p3.bits() - 1
}

/// Incrementally extended cache of powers of three.
pub struct Pow3Cache {
    powers: Vec<BigUint>,
}

impl Pow3Cache {
    pub fn new() -> Self {
        Pow3Cache {
            powers: vec![BigUint::one()],
        }
    }

    pub fn get(&mut self, i: u64) -> &BigUint {
        let i = i as usize;
        while self.powers.len() <= i {
            let next = self.powers.last().unwrap() * 3u8;
            self.powers.push(next);
        }
        &self.powers[i]
    }

    /// `floor(i*log2(3))` via the cached power's bit length.
    pub fn floor_log2_pow3(&mut self, i: u64) -> u64 {
        if i == 0 {
            return 0;
        }
        self.get(i).bits() - 1
    }
}

impl Default for Pow3Cache {
    fn default() -> Self {
        Self::new()
    }
}

/// Closed rational interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RationalInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        RationalInterval { lo, hi }
    }

    pub fn point(v: BigRational) -> Self {
        RationalInterval {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from(BigInt::from(2))
    }

    pub fn contains(&self, v: &BigRational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn intersects(&self, other: &RationalInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn midpoint_f64(&self) -> f64 {
        self.midpoint().to_f64().unwrap_or(f64::NAN)
    }

    /// Endpoint numerators at scale `2^s_bits`, rounded outward, so the
    /// scaled interval still contains the original one.
    pub fn to_scaled(&self, s_bits: u32) -> (BigInt, BigInt) {
        let lo = (self.lo.numer() << s_bits).div_floor(self.lo.denom());
        let hi = (self.hi.numer() << s_bits).div_ceil(self.hi.denom());
        (lo, hi)
    }

    pub fn width_f64(&self) -> f64 {
        self.width().to_f64().unwrap_or(f64::NAN)
    }
}

/// Dyadic fraction `x/2^n` in `[1/2, 1)` with odd numerator `x` and
/// `n = bit length of x`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicFraction {
    numer: BigUint,
    exp: u64,
}

impl DyadicFraction {
    /// Canonical construction from the odd numerator alone.
    pub fn from_odd(numer: BigUint) -> Result<Self> {
        if numer.is_zero() || !numer.bit(0) {
            return Err(Error::NotOdd(numer.to_string()));
        }
        let exp = numer.bits();
        Ok(DyadicFraction { numer, exp })
    }

    /// Validating construction: `exp` must equal the bit length of `numer`.
    pub fn try_new(numer: BigUint, exp: u64) -> Result<Self> {
        let d = Self::from_odd(numer)?;
        if d.exp != exp {
            return Err(Error::OutOfRange {
                what: "dyadic exponent",
                value: format!("{} (bit length is {})", exp, d.exp),
            });
        }
        Ok(d)
    }

    pub fn numer(&self) -> &BigUint {
        &self.numer
    }

    pub fn exp(&self) -> u64 {
        self.exp
    }

    pub fn value(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.numer.clone()),
            BigInt::one() << self.exp,
        )
    }

    pub fn is_half(&self) -> bool {
        self.numer == BigUint::one()
    }
}

impl fmt::Debug for DyadicFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numer, self.exp)
    }
}

impl fmt::Display for DyadicFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer, BigUint::one() << self.exp)
    }
}

impl PartialOrd for DyadicFraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicFraction {
    fn cmp(&self, other: &Self) -> Ordering {
        // x/2^n vs y/2^m: compare x*2^m vs y*2^n
        let lhs = &self.numer << other.exp;
        let rhs = &other.numer << self.exp;
        lhs.cmp(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn sign_examples() {
        assert_eq!(LinearForm::new(0, 0).sign(), 0);
        assert_eq!(LinearForm::new(1, -1).sign(), 1);
        // 3^12 = 531441 > 2^19 = 524288, so -12z + 19 < 0
        assert_eq!(LinearForm::new(-12, 19).sign(), -1);
    }

    #[test]
    fn sign_by_power_examples() {
        assert_eq!(sign_by_power(&LinearForm::new(0, 0)), 0);
        assert_eq!(sign_by_power(&LinearForm::new(1, -1)), 1);
        assert_eq!(sign_by_power(&LinearForm::new(-12, 19)), -1);
    }

    #[test]
    fn compare_form_rational_examples() {
        assert_eq!(
            LinearForm::new(1, -1).cmp_rational(&rat(1, 2)),
            Ordering::Greater
        );
        assert_eq!(LinearForm::new(0, 1).cmp_rational(&rat(1, 1)), Ordering::Equal);
        assert_eq!(LinearForm::new(1, -2).cmp_rational(&rat(0, 1)), Ordering::Less);
    }

    #[test]
    fn floor_ratio_examples() {
        let dmax2 = LinearForm::new(1, -1);
        let dmin2 = LinearForm::new(-1, 2);
        assert_eq!(floor_ratio(&dmax2, &dmin2).unwrap(), BigUint::from(1u8));
        assert_eq!(floor_ratio(&dmax2, &dmax2).unwrap(), BigUint::from(1u8));
        let dmax3 = LinearForm::new(-1, 2);
        let dmin3 = LinearForm::new(2, -3);
        assert_eq!(floor_ratio(&dmax3, &dmin3).unwrap(), BigUint::from(2u8));
    }

    #[test]
    fn floor_ratio_rejects_nonpositive() {
        let pos = LinearForm::new(1, -1);
        let neg = LinearForm::new(-1, 1);
        assert!(floor_ratio(&pos, &neg).is_err());
        assert!(floor_ratio(&neg, &pos).is_err());
    }

    #[test]
    fn floor_ratio_postcondition() {
        let f = LinearForm::new(-1, 2);
        let g = LinearForm::new(2, -3);
        let (t, rem) = floor_ratio_rem(&f, &g).unwrap();
        let tg = g.scale(BigInt::from(t.clone()));
        assert!((&f - &tg).sign() >= 0);
        assert!((&f - &g.scale(BigInt::from(t + 1u32))).sign() < 0);
        assert_eq!(rem, &f - &tg);
    }

    #[test]
    fn floor_log2_pow3_examples() {
        assert_eq!(floor_log2_pow3(0), 0);
        assert_eq!(floor_log2_pow3(2), 3);
        assert_eq!(floor_log2_pow3(4), 6);
    }

    #[test]
    fn floor_log2_pow3_matches_enclosure_floor() {
        // independent route: floor via the z-enclosure
        for i in (1..10_000u64).step_by(97) {
            let via_form = LinearForm::new(i, 0).floor();
            assert_eq!(BigInt::from(floor_log2_pow3(i)), via_form, "i = {i}");
        }
    }

    #[test]
    fn enclosure_brackets_known_convergents() {
        // 3^q vs 2^p decides p/q vs log2(3) exactly; the enclosure must agree.
        let (lo, hi) = log2_3_interval(128);
        for (p, q) in [(1054i64, 665i64), (485, 306), (24727, 15601)] {
            let r = rat(p, q);
            let exact = sign_by_power(&LinearForm::new(q, -p));
            if exact > 0 {
                assert!(r < hi, "convergent {p}/{q} below");
            } else {
                assert!(r > lo, "convergent {p}/{q} above");
            }
        }
        assert!((&hi - &lo) <= rat(1, 1) / BigRational::from(BigInt::one() << 128));
        // sanity: 1.584962500721156 is inside
        assert!(lo < rat(1584962500721157, 1000000000000000));
        assert!(hi > rat(1584962500721156, 1000000000000000));
    }

    #[test]
    fn enclose_examples() {
        let five = LinearForm::new(0, 5);
        let iv = five.enclose(&rat(1, 1000));
        assert_eq!(iv.lo, rat(5, 1));
        assert_eq!(iv.hi, rat(5, 1));

        let z = LinearForm::new(1, 0);
        let iv = z.enclose(&rat(1, 1024));
        assert!(iv.width() <= rat(1, 1024));
        assert!(iv.contains(&rat(158496, 100000)) || iv.lo > rat(158496, 100000));
        assert!(iv.lo < rat(15850, 10000) && iv.hi > rat(15849, 10000));

        let f = LinearForm::new(1, -1);
        let iv = f.enclose(&rat(1, 16));
        assert!(iv.lo > rat(52, 100) && iv.hi < rat(65, 100));
    }

    #[test]
    fn dyadic_fraction_basics() {
        let d = DyadicFraction::from_odd(BigUint::from(11u8)).unwrap();
        assert_eq!(d.exp(), 4);
        assert_eq!(d.value(), rat(11, 16));
        assert!(DyadicFraction::from_odd(BigUint::from(4u8)).is_err());
        assert!(DyadicFraction::try_new(BigUint::from(11u8), 5).is_err());
    }

    proptest! {
        #[test]
        fn sign_agrees_with_power_oracle(a in -2000i64..2000, b in -4000i64..4000) {
            let f = LinearForm::new(a, b);
            prop_assert_eq!(f.sign(), sign_by_power(&f));
        }

        #[test]
        fn enclose_consistent_with_cmp_rational(a in -500i64..500, b in -900i64..900,
                                                p in -2000i64..2000, q in 1i64..500) {
            let f = LinearForm::new(a, b);
            let r = rat(p, q);
            let iv = f.enclose(&rat(1, 1 << 20));
            if !iv.contains(&r) {
                let by_interval = if r < iv.lo { Ordering::Greater } else { Ordering::Less };
                prop_assert_eq!(f.cmp_rational(&r), by_interval);
            }
        }
    }
}
