//! Certified verification of the four per-level bounds on `dmax(k)` and
//! `k*dmax(k)`, plus emission of the figure data behind them.
//!
//! Every verdict is an exact comparison; the rational intervals carried in
//! the reports exist only for display.

use crate::exact::{LinearForm, RationalInterval};
use crate::three_distance::{GapStructure, LevelRecord, LevelTable};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use std::cmp::Ordering;
use std::io::Write;

fn rat(p: impl Into<BigInt>, q: impl Into<BigInt>) -> BigRational {
    BigRational::new(p.into(), q.into())
}

/// Position of `k` inside its level: `k = k_h + t*l_h + j` with
/// `0 <= t < q_h` and `0 <= j < l_h`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub k: u64,
    pub h: u32,
    pub t: u64,
    pub j: u64,
}

impl LevelTable {
    pub fn decompose(&self, k: u64) -> Result<Decomposition> {
        let lev = self.level_for_k(k)?;
        let off = k - lev.k;
        Ok(Decomposition {
            k,
            h: lev.h,
            t: off / lev.ell,
            j: off % lev.ell,
        })
    }

    /// `dmax(k) = dmax(k_h) - t*dmin(k_h)` for `k` inside level `h`.
    pub fn dmax_at(&self, k: u64) -> Result<LinearForm> {
        let lev = self.level_for_k(k)?;
        let t = (k - lev.k) / lev.ell;
        Ok(&lev.dmax - &lev.dmin.scale(BigInt::from(t)))
    }
}

/// Outcome of one exact bound check. `value` is a display enclosure of the
/// checked quantity; the verdict never depends on it.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub lemma: &'static str,
    pub h: u32,
    pub k: u64,
    pub holds: bool,
    pub value: RationalInterval,
    pub lower: Option<BigRational>,
    pub upper: BigRational,
}

fn display_tolerance() -> BigRational {
    rat(1, BigInt::one() << 80)
}

/// `1/k_h < dmax(k_h) < 2/k_h`.
pub fn verify_lemma4(table: &LevelTable, h: u32) -> Result<BoundReport> {
    let lev = table.get(h).ok_or(Error::OutOfRange {
        what: "level",
        value: h.to_string(),
    })?;
    let lower = rat(1, lev.k);
    let upper = rat(2, lev.k);
    let holds = lev.dmax.cmp_rational(&lower) == Ordering::Greater
        && lev.dmax.cmp_rational(&upper) == Ordering::Less;
    Ok(BoundReport {
        lemma: "lemma4",
        h,
        k: lev.k,
        holds,
        value: lev.dmax.enclose(&display_tolerance()),
        lower: Some(lower),
        upper,
    })
}

/// `(1/k_h)*(q-t)/q < dmax(k) < (2/k_h)*(q+1-t)/(q+1)`.
pub fn verify_lemma5(table: &LevelTable, k: u64) -> Result<BoundReport> {
    let d = table.decompose(k)?;
    let lev = table.get(d.h).expect("decompose implies level exists");
    let dmax = table.dmax_at(k)?;
    let lower = rat(lev.q - d.t, lev.k) / rat(lev.q, 1);
    let upper = rat(2 * (lev.q + 1 - d.t), lev.k) / rat(lev.q + 1, 1);
    let holds = dmax.cmp_rational(&lower) == Ordering::Greater
        && dmax.cmp_rational(&upper) == Ordering::Less;
    Ok(BoundReport {
        lemma: "lemma5",
        h: d.h,
        k,
        holds,
        value: dmax.enclose(&display_tolerance()),
        lower: Some(lower),
        upper,
    })
}

/// Upper bound of Lemma 6: `2*((q-t)/q)*(1 + t + j/k_h)`.
pub fn lemma6_bound(lev: &LevelRecord, t: u64, j: u64) -> BigRational {
    rat(2 * (lev.q - t), 1) * rat(lev.k * (1 + t) + j, lev.q * lev.k)
}

/// `k*dmax(k) < 2*((q-t)/q)*(1 + t + j/k_h)`.
pub fn verify_lemma6(table: &LevelTable, k: u64) -> Result<BoundReport> {
    let d = table.decompose(k)?;
    let lev = table.get(d.h).expect("decompose implies level exists");
    let dmax = table.dmax_at(k)?;
    let bound = lemma6_bound(lev, d.t, d.j);
    // k*dmax(k) < bound  <=>  dmax(k) < bound/k
    let holds = dmax.cmp_rational(&(bound.clone() / rat(k, 1))) == Ordering::Less;
    Ok(BoundReport {
        lemma: "lemma6",
        h: d.h,
        k,
        holds,
        value: dmax.scale(BigInt::from(k)).enclose(&display_tolerance()),
        lower: None,
        upper: bound,
    })
}

/// Level-wide upper bound of Lemma 7: `(q + 5 + 5/q)/2`.
pub fn lemma7_bound(lev: &LevelRecord) -> BigRational {
    rat(lev.q * lev.q + 5 * lev.q + 5, 2 * lev.q)
}

/// Sweep strategy for the per-level check of Lemma 7.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    /// Every `k` in the level.
    Exhaustive,
    /// Segment endpoints plus the analytic interior maximum candidate and
    /// stride samples. Within a `t`-segment `dmax` is constant, so the
    /// segment maximum of `k*dmax(k)` sits at the last `k`.
    EndpointPeak,
}

/// Auto selection: exhaustive up to 10^6 checks per level.
pub fn sweep_mode_for(lev: &LevelRecord, exhaustive_flag: bool) -> SweepMode {
    if exhaustive_flag || lev.q.saturating_mul(lev.ell) <= 1_000_000 {
        SweepMode::Exhaustive
    } else {
        SweepMode::EndpointPeak
    }
}

#[derive(Clone, Debug)]
pub struct Lemma7Report {
    pub h: u32,
    pub holds: bool,
    pub bound: BigRational,
    pub checked: u64,
    pub mode: SweepMode,
    pub max_kdmax: RationalInterval,
    pub argmax_k: u64,
}

/// `k*dmax(k) < (q + 5 + 5/q)/2` for every `k_h <= k < k_{h+1}`.
pub fn verify_lemma7(table: &LevelTable, h: u32, mode: SweepMode) -> Result<Lemma7Report> {
    let lev = table.get(h).ok_or(Error::OutOfRange {
        what: "level",
        value: h.to_string(),
    })?;
    let bound = lemma7_bound(lev);
    let mut holds = true;
    let mut checked = 0u64;
    let mut max_form: Option<(LinearForm, u64)> = None;
    let mut check_k = |k: u64, table: &LevelTable| -> Result<()> {
        let dmax = table.dmax_at(k)?;
        let kdmax = dmax.scale(BigInt::from(k));
        if kdmax.cmp_rational(&bound) != Ordering::Less {
            holds = false;
        }
        checked += 1;
        match &max_form {
            Some((cur, _)) if kdmax <= *cur => {}
            _ => max_form = Some((kdmax, k)),
        }
        Ok(())
    };
    match mode {
        SweepMode::Exhaustive => {
            for k in lev.k..lev.next_k() {
                check_k(k, table)?;
            }
        }
        SweepMode::EndpointPeak => {
            // per segment the maximum of k*dmax(k) is at j = l-1; check
            // both ends of every segment, plus coarse interior samples
            for t in 0..lev.q {
                let start = lev.k + t * lev.ell;
                check_k(start, table)?;
                check_k(start + lev.ell - 1, table)?;
                let stride = (lev.ell / 16).max(1);
                let mut k = start + stride;
                while k < start + lev.ell - 1 {
                    check_k(k, table)?;
                    k += stride;
                }
            }
        }
    }
    let (max_form, argmax_k) = max_form.expect("level is nonempty");
    Ok(Lemma7Report {
        h,
        holds,
        bound,
        checked,
        mode,
        max_kdmax: max_form.enclose(&display_tolerance()),
        argmax_k,
    })
}

/// Which quantity a figure CSV tabulates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureKind {
    Dmax,
    KDmax,
}

/// One CSV row per `k` in `[k_h, k_{h+1})`.
///
/// `dmax` schema: `k,value,lower,upper,enclosure_width` with the Lemma 5
/// bounds. `kdmax` schema adds a `bound_lemma7` column; there `lower` is
/// `k` times the Lemma 5 lower bound and `upper` is the Lemma 6 bound.
/// Returns the row count.
pub fn emit_figure_data(
    table: &LevelTable,
    h: u32,
    which: FigureKind,
    sink: &mut dyn Write,
    precision_bits: u32,
) -> Result<u64> {
    let lev = table.get(h).ok_or(Error::OutOfRange {
        what: "level",
        value: h.to_string(),
    })?;
    let tol = rat(1, BigInt::one() << precision_bits.max(16));
    let mut rows = 0u64;
    match which {
        FigureKind::Dmax => {
            writeln!(sink, "k,value,lower,upper,enclosure_width")?;
            for k in lev.k..lev.next_k() {
                let rep = verify_lemma5(table, k)?;
                let iv = table.dmax_at(k)?.enclose(&tol);
                writeln!(
                    sink,
                    "{},{:.17e},{:.17e},{:.17e},{:.3e}",
                    k,
                    iv.midpoint_f64(),
                    rat_f64(rep.lower.as_ref().unwrap()),
                    rat_f64(&rep.upper),
                    iv.width_f64(),
                )?;
                rows += 1;
            }
        }
        FigureKind::KDmax => {
            writeln!(sink, "k,value,lower,upper,enclosure_width,bound_lemma7")?;
            let l7 = lemma7_bound(lev);
            for k in lev.k..lev.next_k() {
                let d = table.decompose(k)?;
                let iv = table.dmax_at(k)?.scale(BigInt::from(k)).enclose(&tol);
                let lower = rat(k * (lev.q - d.t), lev.k) / rat(lev.q, 1);
                let upper = lemma6_bound(lev, d.t, d.j);
                writeln!(
                    sink,
                    "{},{:.17e},{:.17e},{:.17e},{:.3e},{:.17e}",
                    k,
                    iv.midpoint_f64(),
                    rat_f64(&lower),
                    rat_f64(&upper),
                    iv.width_f64(),
                    rat_f64(&l7),
                )?;
                rows += 1;
            }
        }
    }
    Ok(rows)
}

fn rat_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// True iff the numeric oracle's gap intervals pair off exactly with the
/// exact gap multiset: each oracle interval brackets exactly one of the
/// exact lengths and the tallies equal the multiplicities.
pub fn oracle_multiset_matches(exact: &GapStructure, oracle: &[RationalInterval]) -> bool {
    if oracle.len() as u64 != exact.multiplicity_total() {
        return false;
    }
    // everything is compared as integer numerators at one common scale;
    // outward rounding keeps the containment tests sound
    let s: u32 = 192;
    let scaled: Vec<(BigInt, BigInt)> = oracle.iter().map(|iv| iv.to_scaled(s)).collect();
    let max_width = scaled
        .iter()
        .map(|(lo, hi)| hi - lo)
        .max()
        .expect("oracle nonempty");
    let tol = rat(max_width + 2, BigInt::one() << s).max(rat(1, BigInt::one() << 96));
    let enclosures: Vec<(BigInt, BigInt)> = exact
        .gaps
        .iter()
        .map(|(f, _)| f.enclose(&tol).to_scaled(s))
        .collect();
    let mut tallies = vec![0u64; enclosures.len()];
    for iv in &scaled {
        let mut hit = None;
        for (idx, enc) in enclosures.iter().enumerate() {
            if iv.0 <= enc.1 && enc.0 <= iv.1 {
                if hit.is_some() {
                    return false; // ambiguous: oracle too coarse
                }
                hit = Some(idx);
            }
        }
        match hit {
            Some(idx) => tallies[idx] += 1,
            None => return false,
        }
    }
    tallies
        .iter()
        .zip(&exact.gaps)
        .all(|(tally, (_, mult))| tally == mult)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::three_distance::LevelTable;

    fn table_to_k(k: u64) -> LevelTable {
        let mut t = LevelTable::new().unwrap();
        t.extend_to_k(k).unwrap();
        t
    }

    #[test]
    fn decompose_examples() {
        let table = table_to_k(20);
        assert_eq!(
            table.decompose(3).unwrap(),
            Decomposition { k: 3, h: 1, t: 0, j: 0 }
        );
        assert_eq!(
            table.decompose(4).unwrap(),
            Decomposition { k: 4, h: 1, t: 0, j: 1 }
        );
        assert_eq!(
            table.decompose(5).unwrap(),
            Decomposition { k: 5, h: 1, t: 1, j: 0 }
        );
        assert_eq!(
            table.decompose(7).unwrap(),
            Decomposition { k: 7, h: 2, t: 0, j: 0 }
        );
    }

    #[test]
    fn decompose_roundtrip() {
        let table = table_to_k(2000);
        for k in 2..=2000u64 {
            let d = table.decompose(k).unwrap();
            let lev = table.get(d.h).unwrap();
            assert_eq!(lev.k + d.t * lev.ell + d.j, k);
            assert!(d.t < lev.q);
            assert!(d.j < lev.ell);
        }
    }

    #[test]
    fn lemma4_examples() {
        let mut table = LevelTable::new().unwrap();
        table.extend_to_h(2).unwrap();
        for h in 0..=2 {
            let rep = verify_lemma4(&table, h).unwrap();
            assert!(rep.holds, "h = {h}");
        }
    }

    #[test]
    fn lemma5_examples() {
        let table = table_to_k(20);
        for k in [3u64, 5, 9] {
            let rep = verify_lemma5(&table, k).unwrap();
            assert!(rep.holds, "k = {k}");
        }
    }

    #[test]
    fn lemma6_examples() {
        let table = table_to_k(20);
        for k in [3u64, 5, 8] {
            let rep = verify_lemma6(&table, k).unwrap();
            assert!(rep.holds, "k = {k}");
        }
        // k = 5: bound is 2*(1/2)*2 = 2
        let rep = verify_lemma6(&table, 5).unwrap();
        assert_eq!(rep.upper, rat(2, 1));
    }

    #[test]
    fn lemma6_at_level_base_consistent_with_lemma4() {
        // at t = j = 0 the Lemma 6 bound reduces to 2, which k_h*dmax < 2
        // (Lemma 4 upper bound) implies
        let mut table = LevelTable::new().unwrap();
        table.extend_to_h(8).unwrap();
        for h in 0..=8u32 {
            let lev = table.get(h).unwrap();
            assert_eq!(lemma6_bound(lev, 0, 0), rat(2, 1));
            let l4_upper_scaled = rat(2, 1); // k_h * (2/k_h)
            assert!(lemma6_bound(lev, 0, 0) >= l4_upper_scaled);
        }
    }

    #[test]
    fn lemma7_examples() {
        let mut table = LevelTable::new().unwrap();
        table.extend_to_h(3).unwrap();
        let rep = verify_lemma7(&table, 2, SweepMode::Exhaustive).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.bound, rat(19, 4)); // (2+5+5/2)/2 = 4.75
        assert_eq!(rep.checked, 10); // k in [7, 17)
        let rep = verify_lemma7(&table, 0, SweepMode::Exhaustive).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.bound, rat(11, 2));
    }

    #[test]
    fn lemma7_endpoint_peak_agrees_with_exhaustive() {
        let mut table = LevelTable::new().unwrap();
        table.extend_to_h(8).unwrap();
        for h in 3..=7u32 {
            let a = verify_lemma7(&table, h, SweepMode::Exhaustive).unwrap();
            let b = verify_lemma7(&table, h, SweepMode::EndpointPeak).unwrap();
            assert_eq!(a.holds, b.holds);
            // the endpoint sweep must find the same maximum: it sits at a
            // segment end
            assert_eq!(a.argmax_k, b.argmax_k, "h = {h}");
        }
    }

    #[test]
    fn kdmax_monotone_within_segment() {
        let table = table_to_k(100);
        for k in 7..99u64 {
            let a = table.decompose(k).unwrap();
            let b = table.decompose(k + 1).unwrap();
            if a.h == b.h && a.t == b.t {
                let ka = table.dmax_at(k).unwrap().scale(BigInt::from(k));
                let kb = table.dmax_at(k + 1).unwrap().scale(BigInt::from(k + 1));
                assert!(ka < kb, "k = {k}");
            }
        }
    }

    #[test]
    fn figure_row_counts() {
        let mut table = LevelTable::new().unwrap();
        table.extend_to_h(3).unwrap();
        let mut buf = Vec::new();
        let rows = emit_figure_data(&table, 2, FigureKind::Dmax, &mut buf, 64).unwrap();
        assert_eq!(rows, 10);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,value,lower,upper,enclosure_width\n"));
        assert_eq!(text.lines().count(), 11);

        let mut buf = Vec::new();
        let rows = emit_figure_data(&table, 0, FigureKind::Dmax, &mut buf, 64).unwrap();
        assert_eq!(rows, 1);
    }
}
