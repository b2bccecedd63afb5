//! The reduced Collatz map `R(x) = (3x+1)/2^m`, the conjugacy
//! `psi(x) = x/2^n`, and the dyadic map `rho` acting on `[1/2, 1)`.

use crate::exact::DyadicFraction;
use crate::{Error, Result};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::fmt;

/// Odd positive integer, subject of the reduced map.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OddInt(BigUint);

impl OddInt {
    pub fn new(value: BigUint) -> Result<Self> {
        if value.is_zero() || !value.bit(0) {
            return Err(Error::NotOdd(value.to_string()));
        }
        Ok(OddInt(value))
    }

    pub fn from_u64(value: u64) -> Result<Self> {
        Self::new(BigUint::from(value))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn bits(&self) -> u64 {
        self.0.bits()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// Membership in X: odd and not a multiple of 3.
    pub fn in_x(&self) -> bool {
        (&self.0 % 3u8) != BigUint::zero()
    }
}

impl fmt::Display for OddInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for OddInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One application of the reduced map: `2^m * output = 3*input + 1`.
#[derive(Clone, Debug)]
pub struct CollatzStep {
    pub input: OddInt,
    pub output: OddInt,
    pub m: u64,
}

/// `R(x) = (3x+1)/2^m` with `2^m` the full power of two dividing `3x+1`.
pub fn reduced_collatz(x: &OddInt) -> CollatzStep {
    let t = x.value() * 3u8 + 1u8;
    let m = t.trailing_zeros().expect("3x+1 > 0");
    let output = OddInt(&t >> m);
    CollatzStep {
        input: x.clone(),
        output,
        m,
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<CollatzStep>,
    pub converged: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Iterate `R` until reaching 1 or `cap` steps. `x = 1` converges in 0
/// steps. Cap exhaustion is reported, not an error.
pub fn trajectory(x: &OddInt, cap: u64) -> Trajectory {
    let mut steps = Vec::new();
    let mut cur = x.clone();
    while !cur.is_one() && (steps.len() as u64) < cap {
        let step = reduced_collatz(&cur);
        cur = step.output.clone();
        steps.push(step);
    }
    Trajectory {
        converged: cur.is_one(),
        steps,
    }
}

/// `psi(x) = x/2^n` with `n` the bit length of `x`; lands in `[1/2, 1)`.
pub fn psi(x: &OddInt) -> DyadicFraction {
    DyadicFraction::from_odd(x.value().clone()).expect("OddInt numerator is odd")
}

/// Inverse of `psi`: the numerator.
pub fn psi_inv(y: &DyadicFraction) -> OddInt {
    OddInt(y.numer().clone())
}

/// Element of Y: dyadic fraction in `[1/2, 1)` with odd numerator not
/// divisible by 3.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YElement(DyadicFraction);

impl YElement {
    pub fn new(value: DyadicFraction) -> Result<Self> {
        if (value.numer() % 3u8).is_zero() {
            return Err(Error::NotInY(format!("{value}")));
        }
        Ok(YElement(value))
    }

    pub fn from_numer(numer: BigUint) -> Result<Self> {
        Self::new(DyadicFraction::from_odd(numer)?)
    }

    pub fn dyadic(&self) -> &DyadicFraction {
        &self.0
    }

    pub fn is_half(&self) -> bool {
        self.0.is_half()
    }
}

impl fmt::Display for YElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for YElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `rho(y) = (3y + 2^-n)/2^h`, `h = 2` when `3y + 2^-n >= 2` and `h = 1`
/// otherwise. Equals `psi(R(psi_inv(y)))`.
pub fn rho(y: &YElement) -> (YElement, u8) {
    let x = y.dyadic().numer();
    let n = y.dyadic().exp();
    let t = x * 3u8 + 1u8; // (3y + 2^-n) * 2^n
    let h: u8 = if t >= (BigUint::one() << (n + 1)) { 2 } else { 1 };
    let m = t.trailing_zeros().expect("3x+1 > 0");
    let numer = &t >> m;
    let exp = n + u64::from(h) - m;
    let d = DyadicFraction::try_new(numer, exp).expect("rho image stays in [1/2, 1)");
    let out = YElement::new(d).expect("3 never divides R(x)");
    (out, h)
}

/// Iterate `rho` until `1/2` or `cap` steps; `y = 1/2` converges in 0 steps.
pub fn rho_trajectory(y: &YElement, cap: u64) -> (Vec<YElement>, bool) {
    let mut out = Vec::new();
    let mut cur = y.clone();
    while !cur.is_half() && (out.len() as u64) < cap {
        cur = rho(&cur).0;
        out.push(cur.clone());
    }
    let converged = cur.is_half();
    (out, converged)
}

/// True iff `rho(y) = 1/2`, i.e. `3x + 1 = 2^{n+1}`.
pub fn is_fixed_half_preimage(y: &YElement) -> bool {
    let x = y.dyadic().numer();
    let n = y.dyadic().exp();
    x * 3u8 + 1u8 == (BigUint::one() << (n + 1))
}

/// Fast `R` step on machine words; `None` on overflow.
pub fn reduced_step_u64(x: u64) -> Option<(u64, u32)> {
    let t = x.checked_mul(3)?.checked_add(1)?;
    let m = t.trailing_zeros();
    Some((t >> m, m))
}

/// Conjugacy check `psi(R(x)) == rho(psi(x))` in pure machine-word
/// arithmetic; `x` odd, not a multiple of 3.
pub fn conjugacy_holds_u64(x: u64) -> bool {
    let Some((r, _)) = reduced_step_u64(x) else {
        return false;
    };
    // left side: psi(R(x)) = r / 2^bits(r)
    let left_num = r;
    let left_exp = 64 - r.leading_zeros() as u64;
    // right side: rho(x/2^n) with n = bits(x)
    let n = 64 - x.leading_zeros() as u64;
    let t = 3 * x + 1;
    let h: u64 = if t >= (1u64 << (n + 1)) { 2 } else { 1 };
    let m = t.trailing_zeros() as u64;
    let right_num = t >> m;
    let right_exp = n + h - m;
    left_num == right_num && left_exp == right_exp
}
