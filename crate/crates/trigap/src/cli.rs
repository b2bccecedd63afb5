//! Command-line surface: trajectories, gap structures, level tables,
//! continued fractions, verification sweeps, figure data, and the seed
//! machinery. CSV for tabular output, JSON for sweep summaries.
//!
//! Exit codes: 0 success/verified, 1 usage error, 2 cap/bound exhaustion,
//! 3 invariant violation.

use crate::bounds::{
    emit_figure_data, sweep_mode_for, verify_lemma4, verify_lemma5, verify_lemma6, verify_lemma7,
    FigureKind,
};
use crate::collatz::{
    conjugacy_holds_u64, rho, rho_trajectory, trajectory, OddInt, YElement,
};
use crate::exact::DyadicFraction;
use crate::seeds::{
    density_search, is_prefix, min_seed_index, min_seed_index_bounded, p_element_digits, seed,
    seed_index_bound_lemma4, seed_index_bound_lemma7,
};
use crate::three_distance::{continued_fraction_log2_3, oracle_gap_structure, LevelTable};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_EXHAUSTED: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "trigap", version, about = "Reduced Collatz map, three-distance gap structure of multiples of log2(3), and binary repetends of 1/3^i, all in exact arithmetic")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Iteration cap for trajectory commands
    #[arg(long, global = true, default_value_t = 10_000, env = "TRIGAP_CAP")]
    pub cap: u64,

    /// Fractional bits for display enclosures (>= 16)
    #[arg(long, global = true, default_value_t = 64, env = "TRIGAP_PRECISION_BITS")]
    pub precision_bits: u32,

    /// Write output here instead of stdout
    #[arg(long, global = true, env = "TRIGAP_OUT")]
    pub out: Option<PathBuf>,

    /// Output format where both apply
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv, env = "TRIGAP_FORMAT")]
    pub format: Format,

    /// Worker threads for sweep commands (default: all cores)
    #[arg(long, global = true, env = "TRIGAP_JOBS")]
    pub jobs: Option<usize>,

    /// Force exhaustive bound sweeps regardless of level size
    #[arg(long, global = true, default_value_t = false, env = "TRIGAP_EXHAUSTIVE")]
    pub exhaustive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reduced Collatz trajectory of an odd x
    Traj { x: String },
    /// Trajectory of rho from y in Y (e.g. 7/8)
    RhoTraj { y: String },
    /// Exact gap structure of the first k multiples of log2(3)
    Gaps { k: u64 },
    /// Level table rows for h = 0..=h_max
    Levels { h_max: u32 },
    /// First n partial quotients of log2(3)
    Cf { n: usize },
    /// Run a verification sweep
    Verify(VerifyArgs),
    /// Emit figure data as CSV
    Figure(FigureArgs),
    /// Minimal seed index of x, or a sweep over bit lengths
    MinSeed(MinSeedArgs),
    /// Smallest i with p_i <= y < p_i + eps (y in Y, eps rational)
    Density { y: String, eps: String },
    /// Binary repetend of 1/3^i
    Seed { i: u32 },
    /// Is the binary form of x a prefix of p_i?
    Prefix { x: String, i: u64 },
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,

    /// Largest x for conjugacy / trajectory-style sweeps
    #[arg(long, default_value_t = 65_536)]
    pub max: u64,

    /// Largest k for the three-gap sweep
    #[arg(long, default_value_t = 5_000)]
    pub max_k: u64,

    /// Largest level for the lemma sweep
    #[arg(long, default_value_t = 10)]
    pub h_max: u32,

    /// Bit-length ceiling for the seeds sweep
    #[arg(long, default_value_t = 11)]
    pub sweep_bits: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Conjugacy,
    ThreeGap,
    Lemmas,
    Seeds,
}

#[derive(Args, Debug)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub name: FigureName,

    /// Denominator exponent for `figure rho`
    #[arg(long)]
    pub n: Option<u64>,

    /// Level index for dmax/kdmax figures
    #[arg(long)]
    pub level: Option<u32>,

    /// Select the level whose q equals this value
    #[arg(long)]
    pub level_with_q: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    Rho,
    Dmax,
    Kdmax,
}

#[derive(Args, Debug)]
pub struct MinSeedArgs {
    /// Single odd x to resolve
    pub x: Option<String>,

    /// Sweep all odd x with bit length up to this many bits
    #[arg(long)]
    pub sweep_bits: Option<u64>,
}

/// Parse argv and run; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if cli.config.precision_bits < 16 {
        eprintln!("error: --precision-bits must be at least 16");
        return EXIT_USAGE;
    }
    if let Some(jobs) = cli.config.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::NotOdd(_) | Error::NotInY(_) | Error::OutOfRange { .. } | Error::Parse { .. } => {
            EXIT_USAGE
        }
        Error::SeedBoundExceeded { .. } | Error::LevelOverflow(_) => EXIT_EXHAUSTED,
        Error::NonPositiveForm | Error::Io(_) | Error::Json(_) => EXIT_VIOLATION,
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let cfg = &cli.config;
    let mut sink = open_sink(cfg)?;
    match &cli.command {
        Command::Traj { x } => cmd_traj(x, cfg, &mut sink),
        Command::RhoTraj { y } => cmd_rho_traj(y, cfg, &mut sink),
        Command::Gaps { k } => cmd_gaps(*k, cfg, &mut sink),
        Command::Levels { h_max } => cmd_levels(*h_max, &mut sink),
        Command::Cf { n } => cmd_cf(*n, &mut sink),
        Command::Verify(args) => cmd_verify(args, cfg, &mut sink),
        Command::Figure(args) => cmd_figure(args, cfg, &mut sink),
        Command::MinSeed(args) => cmd_min_seed(args, cfg, &mut sink),
        Command::Density { y, eps } => cmd_density(y, eps, &mut sink),
        Command::Seed { i } => {
            writeln!(sink, "{}", seed(*i))?;
            Ok(EXIT_OK)
        }
        Command::Prefix { x, i } => cmd_prefix(x, *i, &mut sink),
    }
}

fn open_sink(cfg: &RunConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn parse_odd(s: &str) -> Result<OddInt> {
    let v = BigUint::from_str(s).map_err(|_| Error::Parse {
        what: "odd integer",
        value: s.to_string(),
    })?;
    OddInt::new(v)
}

/// `p/q` with q a power of two matching the canonical exponent, or a bare
/// odd numerator.
fn parse_y(s: &str) -> Result<YElement> {
    let parse_err = || Error::Parse {
        what: "element of Y",
        value: s.to_string(),
    };
    match s.split_once('/') {
        None => YElement::from_numer(BigUint::from_str(s).map_err(|_| parse_err())?),
        Some((p, q)) => {
            let p = BigUint::from_str(p.trim()).map_err(|_| parse_err())?;
            let q = BigUint::from_str(q.trim()).map_err(|_| parse_err())?;
            if q.count_ones() != 1 {
                return Err(parse_err());
            }
            let d = DyadicFraction::try_new(p, q.bits() - 1)?;
            YElement::new(d)
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let parse_err = || Error::Parse {
        what: "rational",
        value: s.to_string(),
    };
    let r = match s.split_once('/') {
        None => BigRational::from(BigInt::from_str(s).map_err(|_| parse_err())?),
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| parse_err())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| parse_err())?;
            if q.is_zero() {
                return Err(parse_err());
            }
            BigRational::new(p, q)
        }
    };
    Ok(r)
}

fn cmd_traj(x: &str, cfg: &RunConfig, sink: &mut dyn Write) -> Result<i32> {
    let x = parse_odd(x)?;
    let t = trajectory(&x, cfg.cap);
    writeln!(sink, "step,x,m")?;
    writeln!(sink, "0,{x},")?;
    for (idx, s) in t.steps.iter().enumerate() {
        writeln!(sink, "{},{},{}", idx + 1, s.output, s.m)?;
    }
    if t.converged {
        writeln!(sink, "# converged in {} steps", t.len())?;
        Ok(EXIT_OK)
    } else {
        writeln!(sink, "# cap {} exhausted", cfg.cap)?;
        Ok(EXIT_EXHAUSTED)
    }
}

fn cmd_rho_traj(y: &str, cfg: &RunConfig, sink: &mut dyn Write) -> Result<i32> {
    let y = parse_y(y)?;
    let (steps, converged) = rho_trajectory(&y, cfg.cap);
    writeln!(sink, "step,y")?;
    writeln!(sink, "0,{y}")?;
    for (idx, e) in steps.iter().enumerate() {
        writeln!(sink, "{},{}", idx + 1, e)?;
    }
    if converged {
        writeln!(sink, "# converged in {} steps", steps.len())?;
        Ok(EXIT_OK)
    } else {
        writeln!(sink, "# cap {} exhausted", cfg.cap)?;
        Ok(EXIT_EXHAUSTED)
    }
}

fn cmd_gaps(k: u64, cfg: &RunConfig, sink: &mut dyn Write) -> Result<i32> {
    let mut table = LevelTable::new()?;
    table.extend_to_k(k)?;
    let g = table.gap_structure(k)?;
    let tol = BigRational::new(BigInt::one(), BigInt::one() << cfg.precision_bits);
    writeln!(sink, "length_a,length_b,value,multiplicity")?;
    for (form, mult) in &g.gaps {
        let iv = form.enclose(&tol);
        writeln!(
            sink,
            "{},{},{:.17e},{}",
            form.a(),
            form.b(),
            iv.midpoint_f64(),
            mult
        )?;
    }
    writeln!(
        sink,
        "# adjacency at x_0: {} and {}",
        g.adjacency[0], g.adjacency[1]
    )?;
    Ok(EXIT_OK)
}

fn cmd_levels(h_max: u32, sink: &mut dyn Write) -> Result<i32> {
    let recs = crate::three_distance::levels(h_max)?;
    writeln!(sink, "h,k,q,ell,s")?;
    for r in &recs {
        writeln!(sink, "{},{},{},{},{}", r.h, r.k, r.q, r.ell, r.s)?;
    }
    Ok(EXIT_OK)
}

fn cmd_cf(n: usize, sink: &mut dyn Write) -> Result<i32> {
    let cf = continued_fraction_log2_3(n)?;
    writeln!(sink, "i,q")?;
    for (i, q) in cf.iter().enumerate() {
        writeln!(sink, "{i},{q}")?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifySummary {
    suite: &'static str,
    checked: u64,
    violations: u64,
    worst: Vec<String>,
}

impl VerifySummary {
    fn emit(&self, sink: &mut dyn Write) -> Result<i32> {
        writeln!(sink, "{}", serde_json::to_string_pretty(self)?)?;
        Ok(if self.violations == 0 {
            EXIT_OK
        } else {
            EXIT_VIOLATION
        })
    }
}

fn cmd_verify(args: &VerifyArgs, cfg: &RunConfig, sink: &mut dyn Write) -> Result<i32> {
    match args.suite {
        Suite::Conjugacy => verify_conjugacy(args.max, sink),
        Suite::ThreeGap => verify_three_gap(args.max_k, cfg.precision_bits, sink),
        Suite::Lemmas => verify_lemmas(args.h_max, cfg.exhaustive, sink),
        Suite::Seeds => verify_seeds(args.sweep_bits, sink),
    }
}

fn verify_conjugacy(max: u64, sink: &mut dyn Write) -> Result<i32> {
    let bad: Vec<u64> = (1..=max)
        .into_par_iter()
        .filter(|x| x % 2 == 1 && x % 3 != 0)
        .filter(|&x| !conjugacy_holds_u64(x))
        .collect();
    let checked = (1..=max).filter(|x| x % 2 == 1 && x % 3 != 0).count() as u64;
    VerifySummary {
        suite: "conjugacy",
        checked,
        violations: bad.len() as u64,
        worst: bad.iter().take(10).map(|x| x.to_string()).collect(),
    }
    .emit(sink)
}

fn verify_three_gap(max_k: u64, precision_bits: u32, sink: &mut dyn Write) -> Result<i32> {
    let mut table = LevelTable::new()?;
    table.extend_to_k(max_k)?;
    let bad: Vec<u64> = (2..=max_k)
        .into_par_iter()
        .filter(|&k| {
            let Ok(g) = table.gap_structure(k) else {
                return true;
            };
            if g.distinct_lengths() > 3 || g.multiplicity_total() != k {
                return true;
            }
            let Ok(oracle) = oracle_gap_structure(k, precision_bits) else {
                return true;
            };
            !crate::bounds::oracle_multiset_matches(&g, &oracle)
        })
        .collect();
    VerifySummary {
        suite: "three-gap",
        checked: max_k - 1,
        violations: bad.len() as u64,
        worst: bad.iter().take(10).map(|k| format!("k={k}")).collect(),
    }
    .emit(sink)
}

fn verify_lemmas(h_max: u32, exhaustive: bool, sink: &mut dyn Write) -> Result<i32> {
    let mut table = LevelTable::new()?;
    table.extend_to_h(h_max + 1)?;
    let mut checked = 0u64;
    let mut worst = Vec::new();

    for h in 0..=h_max {
        let rep = verify_lemma4(&table, h)?;
        checked += 1;
        if !rep.holds {
            worst.push(format!("lemma4 h={h}"));
        }
    }

    let k56_max = table
        .get(h_max.min(8) + 1)
        .map(|lev| lev.k)
        .unwrap_or_else(|| table.last().next_k());
    let bad56: Vec<String> = (2..k56_max)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut local = Vec::new();
            match verify_lemma5(&table, k) {
                Ok(rep) if rep.holds => {}
                _ => local.push(format!("lemma5 k={k}")),
            }
            match verify_lemma6(&table, k) {
                Ok(rep) if rep.holds => {}
                _ => local.push(format!("lemma6 k={k}")),
            }
            local
        })
        .collect();
    checked += 2 * (k56_max - 2);
    worst.extend(bad56);

    for h in 0..=h_max {
        let lev = table.get(h).expect("extended");
        let mode = sweep_mode_for(lev, exhaustive);
        let rep = verify_lemma7(&table, h, mode)?;
        checked += rep.checked;
        if !rep.holds {
            worst.push(format!("lemma7 h={h}"));
        }
    }

    let violations = worst.len() as u64;
    worst.truncate(10);
    VerifySummary {
        suite: "lemmas",
        checked,
        violations,
        worst,
    }
    .emit(sink)
}

fn verify_seeds(sweep_bits: u64, sink: &mut dyn Write) -> Result<i32> {
    let mut table = LevelTable::new()?;
    // one bound per bit length, precomputed so the sweep shares the table
    let mut bound4 = vec![0u64; sweep_bits as usize + 1];
    let mut bound7 = vec![0u64; sweep_bits as usize + 1];
    for n in 1..=sweep_bits {
        bound4[n as usize] = seed_index_bound_lemma4(n, &mut table)?;
        bound7[n as usize] = seed_index_bound_lemma7(n, &mut table)?;
    }
    let max_x = 1u64 << sweep_bits;
    let bad: Vec<String> = (1..max_x)
        .into_par_iter()
        .filter(|x| x % 2 == 1)
        .filter_map(|x| {
            let xi = OddInt::from_u64(x).expect("odd by construction");
            let n = xi.bits() as usize;
            let bound = bound4[n].min(bound7[n]);
            match min_seed_index_bounded(&xi, bound) {
                Some(i) => {
                    let xbits: Vec<u8> = (0..xi.bits())
                        .rev()
                        .map(|b| u8::from(xi.value().bit(b)))
                        .collect();
                    if p_element_digits(i, xi.bits()) != xbits {
                        return Some(format!("digit oracle disagrees at x={x}, i={i}"));
                    }
                    None
                }
                None => Some(format!("no seed index below {bound} for x={x}")),
            }
        })
        .collect();
    VerifySummary {
        suite: "seeds",
        checked: max_x / 2,
        violations: bad.len() as u64,
        worst: bad.into_iter().take(10).collect(),
    }
    .emit(sink)
}

fn cmd_figure(args: &FigureArgs, cfg: &RunConfig, sink: &mut dyn Write) -> Result<i32> {
    match args.name {
        FigureName::Rho => {
            let n = args.n.ok_or(Error::Parse {
                what: "figure rho",
                value: "--n is required".to_string(),
            })?;
            figure_rho(n, sink)
        }
        FigureName::Dmax | FigureName::Kdmax => {
            let mut table = LevelTable::new()?;
            let h = match (args.level, args.level_with_q) {
                (Some(h), None) => {
                    table.extend_to_h(h)?;
                    h
                }
                (None, Some(q)) => {
                    let mut h = 0;
                    loop {
                        table.extend_to_h(h)?;
                        if table.get(h).expect("extended").q == q {
                            break h;
                        }
                        h += 1;
                        if h > 64 {
                            return Err(Error::OutOfRange {
                                what: "level q",
                                value: q.to_string(),
                            });
                        }
                    }
                }
                _ => {
                    return Err(Error::Parse {
                        what: "figure level",
                        value: "exactly one of --level / --level-with-q".to_string(),
                    })
                }
            };
            table.extend_to_h(h + 1)?;
            let kind = if args.name == FigureName::Dmax {
                FigureKind::Dmax
            } else {
                FigureKind::KDmax
            };
            emit_figure_data(&table, h, kind, sink, cfg.precision_bits)?;
            Ok(EXIT_OK)
        }
    }
}

/// One row per y in Y with denominator 2^n: odd numerators in
/// [2^{n-1}, 2^n) that are not multiples of 3.
fn figure_rho(n: u64, sink: &mut dyn Write) -> Result<i32> {
    if n < 1 || n > 52 {
        return Err(Error::OutOfRange {
            what: "denominator exponent",
            value: n.to_string(),
        });
    }
    writeln!(sink, "y,rho,h")?;
    let lo = 1u64 << (n - 1);
    let hi = 1u64 << n;
    for x in ((lo + 1)..hi).step_by(2) {
        if x % 3 == 0 {
            continue;
        }
        let y = YElement::from_numer(BigUint::from(x))?;
        let (img, h) = rho(&y);
        let yv = x as f64 / hi as f64;
        let iv = img.dyadic().value();
        let rv = iv.numer().to_f64().unwrap() / iv.denom().to_f64().unwrap();
        writeln!(sink, "{yv:.17e},{rv:.17e},{h}")?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct MinSeedRow {
    x: String,
    i_min: u64,
    bound4: u64,
    bound7: u64,
    witnesses: Vec<u64>,
}

fn cmd_min_seed(args: &MinSeedArgs, cfg: &RunConfig, sink: &mut dyn Write) -> Result<i32> {
    let mut table = LevelTable::new()?;
    match (&args.x, args.sweep_bits) {
        (Some(x), None) => {
            let x = parse_odd(x)?;
            let found = min_seed_index(&x, &mut table)?;
            let b4 = seed_index_bound_lemma4(x.bits(), &mut table)?;
            let b7 = seed_index_bound_lemma7(x.bits(), &mut table)?;
            let row = MinSeedRow {
                x: x.to_string(),
                i_min: found.i_min,
                bound4: b4,
                bound7: b7,
                witnesses: found.witnesses,
            };
            match cfg.format {
                Format::Json => writeln!(sink, "{}", serde_json::to_string_pretty(&row)?)?,
                Format::Csv => {
                    writeln!(sink, "x,i_min,bound4,bound7")?;
                    writeln!(sink, "{},{},{},{}", row.x, row.i_min, row.bound4, row.bound7)?;
                }
            }
            Ok(EXIT_OK)
        }
        (None, Some(bits)) => {
            let mut bound4 = vec![0u64; bits as usize + 1];
            let mut bound7 = vec![0u64; bits as usize + 1];
            for n in 1..=bits {
                bound4[n as usize] = seed_index_bound_lemma4(n, &mut table)?;
                bound7[n as usize] = seed_index_bound_lemma7(n, &mut table)?;
            }
            let rows: Vec<std::result::Result<(u64, u64), u64>> = (1..(1u64 << bits))
                .into_par_iter()
                .filter(|x| x % 2 == 1)
                .map(|x| {
                    let xi = OddInt::from_u64(x).expect("odd");
                    let n = xi.bits() as usize;
                    match min_seed_index_bounded(&xi, bound4[n].min(bound7[n])) {
                        Some(i) => Ok((x, i)),
                        None => Err(x),
                    }
                })
                .collect();
            writeln!(sink, "x,i_min,bound4,bound7")?;
            let mut failed = false;
            for row in rows {
                match row {
                    Ok((x, i)) => {
                        let n = (64 - x.leading_zeros()) as usize;
                        writeln!(sink, "{x},{i},{},{}", bound4[n], bound7[n])?;
                    }
                    Err(x) => {
                        writeln!(sink, "{x},,,")?;
                        failed = true;
                    }
                }
            }
            Ok(if failed { EXIT_EXHAUSTED } else { EXIT_OK })
        }
        _ => Err(Error::Parse {
            what: "min-seed",
            value: "exactly one of X / --sweep-bits".to_string(),
        }),
    }
}

fn cmd_density(y: &str, eps: &str, sink: &mut dyn Write) -> Result<i32> {
    let y = parse_y(y)?;
    let eps = parse_rational(eps)?;
    if eps <= BigRational::zero() {
        return Err(Error::Parse {
            what: "epsilon",
            value: eps.to_string(),
        });
    }
    let (i, p) = density_search(&y, &eps)?;
    writeln!(sink, "i,p")?;
    writeln!(sink, "{i},{}", p.value)?;
    Ok(EXIT_OK)
}

fn cmd_prefix(x: &str, i: u64, sink: &mut dyn Write) -> Result<i32> {
    let x = parse_odd(x)?;
    let yes = is_prefix(&x, i);
    writeln!(sink, "{yes}")?;
    Ok(EXIT_OK)
}
