//! Circle-gap structure of the points `frac(i*z)` for `z = log2(3)`:
//! the level recurrence `(k_h, q_h, l_h, s_h)`, exact gap multisets, the
//! continued fraction of `z`, and a numeric verification oracle.

use crate::exact::{floor_ratio_rem, log2_3_dyadic, LinearForm, RationalInterval};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

/// `x_i = frac(i*z)` as the exact form `i*z - floor(i*z)`.
#[derive(Clone, Debug)]
pub struct CirclePoint {
    pub index: u64,
    pub form: LinearForm,
}

impl CirclePoint {
    pub fn new(index: u64) -> Self {
        let f = LinearForm::new(index, 0);
        let fl = f.floor();
        CirclePoint {
            index,
            form: LinearForm::new(index, -fl),
        }
    }
}

/// Per-level tuple of the recurrence: at `k = k_h` the circle is split into
/// `l` arcs of length `dmax` and `s` arcs of length `dmin`, with
/// `q = floor(dmax/dmin)` and `r = dmax mod dmin`.
#[derive(Clone, Debug)]
pub struct LevelRecord {
    pub h: u32,
    pub k: u64,
    pub q: u64,
    pub ell: u64,
    pub s: u64,
    pub dmin: LinearForm,
    pub dmax: LinearForm,
    pub r: LinearForm,
}

impl LevelRecord {
    /// First k of the next level, `k + q*l`.
    pub fn next_k(&self) -> u64 {
        self.k + self.q * self.ell
    }
}

/// Sequentially built table of levels. Construction is inherently
/// sequential in `h`; queries on a built table are read-only.
pub struct LevelTable {
    levels: Vec<LevelRecord>,
}

impl LevelTable {
    pub fn new() -> Result<Self> {
        // k = 2: arcs of length d = z - 1 and 1 - d = 2 - z, with
        // dmax = z - 1 (since 2z - 3 > 0), one arc each.
        let d = LinearForm::new(1, -1);
        let one_minus_d = LinearForm::new(-1, 2);
        let (dmin, dmax) = if (&d - &one_minus_d).sign() > 0 {
            (one_minus_d, d)
        } else {
            (d, one_minus_d)
        };
        let rec = Self::make_record(0, 2, 1, 1, dmin, dmax)?;
        Ok(LevelTable { levels: vec![rec] })
    }

    fn make_record(
        h: u32,
        k: u64,
        ell: u64,
        s: u64,
        dmin: LinearForm,
        dmax: LinearForm,
    ) -> Result<LevelRecord> {
        let (q, r) = floor_ratio_rem(&dmax, &dmin)?;
        debug_assert!(r.sign() > 0, "r = 0 contradicts z irrational");
        let q = q.to_u64().ok_or(Error::LevelOverflow(h))?;
        Ok(LevelRecord {
            h,
            k,
            q,
            ell,
            s,
            dmin,
            dmax,
            r,
        })
    }

    /// Extend until level `h_max` exists.
    pub fn extend_to_h(&mut self, h_max: u32) -> Result<()> {
        while (self.levels.len() as u32) <= h_max {
            self.push_level()?;
        }
        Ok(())
    }

    /// Extend until some level covers `k`, i.e. `k < next_k()` of the last
    /// level.
    pub fn extend_to_k(&mut self, k: u64) -> Result<()> {
        while self.last().next_k() <= k {
            self.push_level()?;
        }
        Ok(())
    }

    fn push_level(&mut self) -> Result<()> {
        let prev = self.last().clone();
        let h = prev.h + 1;
        let k = prev
            .k
            .checked_add(
                prev.q
                    .checked_mul(prev.ell)
                    .ok_or(Error::LevelOverflow(h))?,
            )
            .ok_or(Error::LevelOverflow(h))?;
        let ell = prev
            .ell
            .checked_mul(prev.q)
            .and_then(|v| v.checked_add(prev.s))
            .ok_or(Error::LevelOverflow(h))?;
        let s = prev.ell;
        // dmax(k') = dmin(k), dmin(k') = r
        let rec = Self::make_record(h, k, ell, s, prev.r, prev.dmin)?;
        self.levels.push(rec);
        Ok(())
    }

    pub fn last(&self) -> &LevelRecord {
        self.levels.last().expect("table never empty")
    }

    pub fn get(&self, h: u32) -> Option<&LevelRecord> {
        self.levels.get(h as usize)
    }

    pub fn records(&self) -> &[LevelRecord] {
        &self.levels
    }

    /// The level with `k_h <= k < k_{h+1}`. The table must already cover
    /// `k` (see `extend_to_k`).
    pub fn level_for_k(&self, k: u64) -> Result<&LevelRecord> {
        if k < 2 || self.last().next_k() <= k {
            return Err(Error::OutOfRange {
                what: "k",
                value: format!("{k} (table covers [2, {}))", self.last().next_k()),
            });
        }
        let idx = self
            .levels
            .partition_point(|rec| rec.k <= k)
            .checked_sub(1)
            .expect("k >= 2 is covered by level 0");
        Ok(&self.levels[idx])
    }

    /// Exact gap multiset of `X_k`, built from the splitting recurrence.
    pub fn gap_structure(&self, k: u64) -> Result<GapStructure> {
        let lev = self.level_for_k(k)?;
        let off = k - lev.k;
        let t = off / lev.ell;
        let j = off % lev.ell;
        let dmin = lev.dmin.clone();
        let mid = &lev.dmax - &lev.dmin.scale(BigInt::from(t));
        let mut gaps: Vec<(LinearForm, u64)> = Vec::new();
        let adjacency;
        if j == 0 {
            // two lengths: dmin(k_h) and dmax(k_h) - t*dmin(k_h)
            gaps.push((dmin.clone(), lev.s + t * lev.ell));
            gaps.push((mid.clone(), lev.ell));
            adjacency = [dmin, mid];
        } else {
            let small = &mid - &lev.dmin;
            gaps.push((dmin.clone(), lev.s + t * lev.ell + j));
            gaps.push((mid.clone(), lev.ell - j));
            gaps.push((small.clone(), j));
            adjacency = [dmin, small];
        }
        gaps.sort_by(|x, y| x.0.cmp(&y.0));
        Ok(GapStructure { k, gaps, adjacency })
    }
}

/// Convenience: the level records for `h = 0..=h_max`.
pub fn levels(h_max: u32) -> Result<Vec<LevelRecord>> {
    let mut table = LevelTable::new()?;
    table.extend_to_h(h_max)?;
    Ok(table.records()[..=h_max as usize].to_vec())
}

/// Arc-length multiset of `X_k`, sorted ascending, plus the two arc lengths
/// adjacent to `x_0`.
#[derive(Clone, Debug)]
pub struct GapStructure {
    pub k: u64,
    pub gaps: Vec<(LinearForm, u64)>,
    pub adjacency: [LinearForm; 2],
}

impl GapStructure {
    pub fn distinct_lengths(&self) -> usize {
        self.gaps.len()
    }

    /// Sum of length times multiplicity; must equal the form `(0, 1)`.
    pub fn total_length(&self) -> LinearForm {
        let mut acc = LinearForm::zero();
        for (len, mult) in &self.gaps {
            acc = &acc + &len.scale(BigInt::from(*mult));
        }
        acc
    }

    pub fn multiplicity_total(&self) -> u64 {
        self.gaps.iter().map(|(_, m)| m).sum()
    }

    pub fn dmin(&self) -> &LinearForm {
        &self.gaps.first().expect("nonempty").0
    }

    pub fn dmax(&self) -> &LinearForm {
        &self.gaps.last().expect("nonempty").0
    }
}

/// Exact partial quotients of `log2(3) = [q0; q1, q2, ...]`.
///
/// Gauss-map steps on Moebius states `(f, g)` with value `f/g`; each floor
/// is decided by exact `LinearForm` comparisons.
pub fn continued_fraction_log2_3(count: usize) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(count);
    let mut f = LinearForm::new(1, 0);
    let mut g = LinearForm::new(0, 1);
    while out.len() < count {
        let (q, rem) = floor_ratio_rem(&f, &g)?;
        out.push(q.to_u64().ok_or(Error::OutOfRange {
            what: "partial quotient",
            value: q.to_string(),
        })?);
        f = g;
        g = rem;
    }
    Ok(out)
}

/// Numeric gap multiset of `X_k`: sorts certified dyadic enclosures of
/// `frac(i*z)` and returns the `k` gap intervals in circle order.
/// Escalates precision until every comparison is decided. Test oracle
/// only; decisions in the library never go through it.
pub fn oracle_gap_structure(k: u64, precision_bits: u32) -> Result<Vec<RationalInterval>> {
    if k < 2 {
        return Err(Error::OutOfRange {
            what: "k",
            value: k.to_string(),
        });
    }
    let mut bits = precision_bits.max(64);
    'retry: loop {
        let (zl, zh, scale) = log2_3_dyadic(bits);
        let one = BigInt::one() << scale;
        // numerators of the enclosure of frac(i*z) at scale 2^scale
        let mut pts: Vec<(BigInt, BigInt)> = Vec::with_capacity(k as usize);
        for i in 0..k {
            let lo = &zl * i;
            let hi = &zh * i;
            let fl: BigInt = &lo >> scale; // floor; operands nonnegative
            if fl != (&hi >> scale) {
                bits = bits.saturating_mul(2);
                continue 'retry;
            }
            let base = fl << scale;
            pts.push((lo - &base, hi - base));
        }
        pts.sort_by(|a, b| a.0.cmp(&b.0));
        // enclosures must be pairwise disjoint for the order to be certain
        for w in pts.windows(2) {
            if w[0].1 >= w[1].0 {
                bits = bits.saturating_mul(2);
                continue 'retry;
            }
        }
        let mut gaps = Vec::with_capacity(k as usize);
        for w in pts.windows(2) {
            gaps.push(interval_from_scaled(&w[0], &w[1], scale));
        }
        // wrap-around arc back to x_0 = 0
        let last = pts.last().unwrap();
        gaps.push(interval_from_scaled(last, &(one.clone(), one), scale));
        return Ok(gaps);
    }
}

fn interval_from_scaled(a: &(BigInt, BigInt), b: &(BigInt, BigInt), scale: u32) -> RationalInterval {
    // a.0 <= a.1 and b.0 <= b.1, so the endpoints come out ordered;
    // new_raw skips the (pure power of two) gcd reduction
    let den = BigInt::one() << scale;
    RationalInterval {
        lo: BigRational::new_raw(&b.0 - &a.1, den.clone()),
        hi: BigRational::new_raw(&b.1 - &a.0, den),
    }
}

/// Fact: translating both indices by `t` preserves the arc length.
/// Checked as exact coefficientwise equality after mod-1 normalization.
pub fn translation_check(k: u64, i: u64, j: u64, t: i64) -> Result<bool> {
    let max = i.max(j) as i64;
    let min = i.min(j) as i64;
    if i >= k || j >= k || t < -min || t >= k as i64 - max {
        return Err(Error::OutOfRange {
            what: "translation",
            value: format!("k={k}, i={i}, j={j}, t={t}"),
        });
    }
    let d1 = arc_length(i, j);
    let d2 = arc_length((i as i64 + t) as u64, (j as i64 + t) as u64);
    Ok(d1 == d2)
}

/// Counterclockwise arc length `d(x_i, x_j) = frac(frac(j*z) - frac(i*z))`.
fn arc_length(i: u64, j: u64) -> LinearForm {
    let pi = CirclePoint::new(i);
    let pj = CirclePoint::new(j);
    let diff = &pj.form - &pi.form; // in (-1, 1)
    if diff.sign() < 0 {
        &diff + &LinearForm::one()
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::log2_3_interval;
    use num_traits::Zero;

    #[test]
    fn level_records_match_desk_table() {
        let recs = levels(2).unwrap();
        let expect = [(0u32, 2u64, 1u64, 1u64, 1u64), (1, 3, 2, 2, 1), (2, 7, 2, 5, 2)];
        for (rec, (h, k, q, ell, s)) in recs.iter().zip(expect) {
            assert_eq!(rec.h, h);
            assert_eq!(rec.k, k);
            assert_eq!(rec.q, q);
            assert_eq!(rec.ell, ell);
            assert_eq!(rec.s, s);
        }
        assert_eq!(recs[0].dmax, LinearForm::new(1, -1));
        assert_eq!(recs[0].dmin, LinearForm::new(-1, 2));
        assert_eq!(recs[1].dmax, LinearForm::new(-1, 2));
        assert_eq!(recs[1].dmin, LinearForm::new(2, -3));
        assert_eq!(recs[2].dmax, LinearForm::new(2, -3));
        assert_eq!(recs[2].dmin, LinearForm::new(-5, 8));
    }

    #[test]
    fn level_recurrence_invariants() {
        let recs = levels(12).unwrap();
        for w in recs.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert_eq!(b.k, a.k + a.q * a.ell);
            assert_eq!(b.ell, a.ell * a.q + a.s);
            assert_eq!(b.s, a.ell);
            assert_eq!(b.dmax, a.dmin);
            assert_eq!(b.dmin, a.r);
            assert!(a.r.sign() > 0);
        }
        for rec in &recs {
            assert_eq!(rec.k, rec.ell + rec.s);
            // l*dmax + s*dmin = 1 exactly
            let total = &rec.dmax.scale(BigInt::from(rec.ell))
                + &rec.dmin.scale(BigInt::from(rec.s));
            assert_eq!(total, LinearForm::one());
        }
    }

    #[test]
    fn gap_structure_examples() {
        let mut table = LevelTable::new().unwrap();
        table.extend_to_k(7).unwrap();

        let g2 = table.gap_structure(2).unwrap();
        assert_eq!(g2.gaps.len(), 2);
        assert_eq!(g2.gaps[0], (LinearForm::new(-1, 2), 1));
        assert_eq!(g2.gaps[1], (LinearForm::new(1, -1), 1));

        let g3 = table.gap_structure(3).unwrap();
        assert_eq!(g3.gaps[0], (LinearForm::new(2, -3), 1));
        assert_eq!(g3.gaps[1], (LinearForm::new(-1, 2), 2));

        let g7 = table.gap_structure(7).unwrap();
        assert_eq!(g7.gaps[0], (LinearForm::new(-5, 8), 2));
        assert_eq!(g7.gaps[1], (LinearForm::new(2, -3), 5));
    }

    #[test]
    fn gap_structure_rejects_small_k() {
        let table = LevelTable::new().unwrap();
        assert!(table.gap_structure(1).is_err());
    }

    #[test]
    fn gap_invariants_small_sweep() {
        let mut table = LevelTable::new().unwrap();
        table.extend_to_k(400).unwrap();
        for k in 2..=400u64 {
            let g = table.gap_structure(k).unwrap();
            assert!(g.distinct_lengths() <= 3, "k = {k}");
            assert_eq!(g.multiplicity_total(), k);
            assert_eq!(g.total_length(), LinearForm::one(), "k = {k}");
            // distinct lengths really are distinct
            for w in g.gaps.windows(2) {
                assert!(w[0].0 < w[1].0, "k = {k}");
            }
            let lev = table.level_for_k(k).unwrap();
            let two = (k - lev.k) % lev.ell == 0;
            assert_eq!(g.distinct_lengths() == 2, two, "k = {k}");
        }
    }

    #[test]
    fn oracle_matches_gap_structure_small() {
        let mut table = LevelTable::new().unwrap();
        table.extend_to_k(200).unwrap();
        for k in 2..=200u64 {
            let g = table.gap_structure(k).unwrap();
            let oracle = oracle_gap_structure(k, 64).unwrap();
            assert!(crate::bounds::oracle_multiset_matches(&g, &oracle), "k = {k}");
        }
    }

    #[test]
    fn continued_fraction_first_terms() {
        let cf = continued_fraction_log2_3(10).unwrap();
        assert_eq!(cf, vec![1, 1, 1, 2, 2, 3, 1, 5, 2, 23]);
    }

    #[test]
    fn continued_fraction_matches_enclosure_oracle() {
        // independent route: common CF prefix of the two rational endpoints
        // of a certified enclosure is a certified CF prefix of z
        let (lo, hi) = log2_3_interval(512);
        let cf_lo = rational_cf(&lo, 20);
        let cf_hi = rational_cf(&hi, 20);
        let common: Vec<u64> = cf_lo
            .iter()
            .zip(&cf_hi)
            .take_while(|(a, b)| a == b)
            .map(|(a, _)| *a)
            .collect();
        assert!(common.len() >= 14);
        let cf = continued_fraction_log2_3(common.len()).unwrap();
        assert_eq!(cf, common);
    }

    fn rational_cf(r: &BigRational, count: usize) -> Vec<u64> {
        let mut out = Vec::new();
        let mut num = r.numer().clone();
        let mut den = r.denom().clone();
        while out.len() < count && !den.is_zero() {
            let q = &num / &den;
            let rem = &num - &q * &den;
            out.push(q.to_u64().unwrap());
            num = den;
            den = rem;
        }
        out
    }

    #[test]
    fn translation_check_examples() {
        assert!(translation_check(5, 0, 1, 2).unwrap());
        assert!(translation_check(7, 1, 3, -1).unwrap());
        assert!(translation_check(7, 0, 2, 4).unwrap());
        assert!(translation_check(7, 0, 2, 5).is_err());
    }

    #[test]
    fn circle_points_in_unit_interval() {
        for i in 0..50 {
            let p = CirclePoint::new(i);
            assert!(p.form.sign() >= 0);
            assert!((&p.form - &LinearForm::one()).sign() < 0);
        }
    }
}
