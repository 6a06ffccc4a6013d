// SPDX-License-Identifier: Apache-2.0
//! Squarefree sieving, the progression error Delta, smoothness predicates and
//! Dickman's function.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modarith::{euler_phi, factorize, gcd, is_prime};

pub const SIEVE_LIMIT: u64 = 1_000_000_000;
pub const DENSITY_LIMIT: u64 = 100_000_000;
const BLOCK: u64 = 1 << 20;

fn small_primes(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    let mut comp = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !comp[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                comp[j] = true;
                j += i;
            }
        }
    }
    out
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Squarefree flags for n in [lo, hi), lo >= 1.
fn segment(lo: u64, hi: u64, primes: &[u64]) -> Vec<bool> {
    let mut sf = vec![true; (hi - lo) as usize];
    for &p in primes {
        let s = p * p;
        if s >= hi {
            break;
        }
        let mut m = lo.div_ceil(s) * s;
        while m < hi {
            sf[(m - lo) as usize] = false;
            m += s;
        }
    }
    sf
}

fn check_limit(x: u64, limit: u64) -> Result<()> {
    if x > limit {
        return Err(Error::BudgetExceeded(format!("{x} exceeds limit {limit}")));
    }
    Ok(())
}

/// Runs `f(lo, flags)` on every block of [1, X] in parallel and reduces.
fn fold_blocks<A, F, R>(x: u64, f: F, identity: impl Fn() -> A + Sync + Send, reduce: R) -> A
where
    A: Send,
    F: Fn(A, u64, &[bool]) -> A + Sync + Send,
    R: Fn(A, A) -> A + Sync + Send,
{
    let primes = small_primes(isqrt(x));
    let nblocks = x.div_ceil(BLOCK);
    (0..nblocks)
        .into_par_iter()
        .fold(&identity, |acc, i| {
            let lo = 1 + i * BLOCK;
            let hi = (lo + BLOCK).min(x + 1);
            let flags = segment(lo, hi, &primes);
            f(acc, lo, &flags)
        })
        .reduce(&identity, reduce)
}

/// Bitmap of mu^2(n) for 1 <= n <= X.
#[derive(Debug, Clone)]
pub struct SieveTable {
    limit: u64,
    words: Vec<u64>,
}

impl SieveTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn is_squarefree(&self, n: u64) -> bool {
        assert!(n >= 1 && n <= self.limit, "{n} outside [1, {}]", self.limit);
        let i = n - 1;
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Squarefree n <= X with n = a mod q.
    pub fn count_class(&self, q: u64, a: u64) -> u64 {
        let a = a % q;
        let start = if a == 0 { q } else { a };
        (start..=self.limit).step_by(q as usize).filter(|&n| self.is_squarefree(n)).count() as u64
    }
}

/// Segmented sieve for mu^2 on [1, X].
pub fn squarefree_sieve(x: u64) -> Result<SieveTable> {
    check_limit(x, SIEVE_LIMIT)?;
    let primes = small_primes(isqrt(x));
    let nblocks = x.div_ceil(BLOCK);
    let chunks: Vec<Vec<u64>> = (0..nblocks)
        .into_par_iter()
        .map(|i| {
            let lo = 1 + i * BLOCK;
            let hi = (lo + BLOCK).min(x + 1);
            let flags = segment(lo, hi, &primes);
            let mut words = vec![0u64; flags.len().div_ceil(64)];
            for (j, &f) in flags.iter().enumerate() {
                if f {
                    words[j / 64] |= 1 << (j % 64);
                }
            }
            words
        })
        .collect();
    Ok(SieveTable { limit: x, words: chunks.concat() })
}

/// Counts of squarefree n <= X in each residue class mod q.
pub fn class_counts(x: u64, q: u64) -> Result<Vec<u64>> {
    check_limit(x, SIEVE_LIMIT)?;
    if q == 0 || q > 10_000_000 {
        return Err(Error::BudgetExceeded(format!("modulus {q} outside [1, 10^7]")));
    }
    Ok(fold_blocks(
        x,
        |mut acc: Vec<u64>, lo, flags| {
            let mut r = lo % q;
            for &f in flags {
                if f {
                    acc[r as usize] += 1;
                }
                r += 1;
                if r == q {
                    r = 0;
                }
            }
            acc
        },
        || vec![0u64; q as usize],
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    ))
}

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, Serialize)]
pub struct DeltaValue {
    pub a: u64,
    /// Exact value as "numerator/denominator".
    pub exact: String,
    pub value: f64,
}

impl DeltaValue {
    fn new(a: u64, r: Rational) -> DeltaValue {
        DeltaValue { a, exact: r.to_string(), value: *r.numer() as f64 / *r.denom() as f64 }
    }
}

/// Delta from precomputed class counts: count(a) - (1/phi(q/g)) * #{n : (n,q) = g}, g = (a,q).
fn delta_from_counts(counts: &[u64], q: u64, a: u64) -> Rational {
    let a = a % q;
    let g = gcd(a, q);
    let same: u64 = (0..q).filter(|&r| gcd(r, q) == g).map(|r| counts[r as usize]).sum();
    Rational::from_integer(counts[a as usize] as i128) - Rational::new(same as i128, euler_phi(q / g) as i128)
}

/// Delta(X; q, a) for mu^2, exact.
pub fn delta(x: u64, q: u64, a: i64) -> Result<DeltaValue> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    let counts = class_counts(x, q)?;
    let ar = crate::modarith::reduce(a, q);
    Ok(DeltaValue::new(ar, delta_from_counts(&counts, q, ar)))
}

/// Delta for every coprime class, ascending in a.
pub fn delta_all_coprime(x: u64, q: u64) -> Result<Vec<DeltaValue>> {
    let counts = class_counts(x, q)?;
    let main = Rational::new(
        (0..q).filter(|&r| gcd(r, q) == 1).map(|r| counts[r as usize]).sum::<u64>() as i128,
        euler_phi(q) as i128,
    );
    Ok((0..q)
        .filter(|&a| gcd(a, q) == 1)
        .map(|a| DeltaValue::new(a, Rational::from_integer(counts[a as usize] as i128) - main))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxDelta {
    pub x: u64,
    pub q: u64,
    pub a: u64,
    pub exact: String,
    pub value: f64,
}

/// Coprime class maximizing |Delta(X; q, a)| (smallest such a).
pub fn max_delta(x: u64, q: u64) -> Result<MaxDelta> {
    let all = delta_all_coprime(x, q)?;
    let best = all
        .iter()
        .fold(None::<&DeltaValue>, |b, d| match b {
            Some(b) if b.value.abs() >= d.value.abs() => Some(b),
            _ => Some(d),
        })
        .expect("at least one coprime class");
    Ok(MaxDelta { x, q, a: best.a, exact: best.exact.clone(), value: best.value.abs() })
}

pub fn is_smooth(q: u64, y: u64) -> bool {
    q >= 1 && (q == 1 || factorize(q).largest_prime() <= y)
}

pub fn is_ultrasmooth(q: u64, y: u64) -> bool {
    q >= 1 && factorize(q).prime_powers().iter().all(|&pe| pe <= y)
}

// ---------------------------------------------------------------------------
// Dickman's function

pub const RHO_MAX_U: f64 = 20.0;
const RHO_BITS: u64 = 256;
const RHO_TERMS: usize = 180;

/// Taylor coefficients of rho about k + 1/2 for k = 1..19, so that
/// rho(k + 1/2 + x) = sum a_i x^i on |x| <= 1/2.
///
/// Forward integration of the delay equation in f64 leaves an absolute error
/// near 1e-16 that decays only polynomially, which swamps rho past u = 12. The
/// coefficients are therefore built in fixed point with 256 fractional bits and
/// rounded to f64 only at the end.
fn rho_series() -> &'static Vec<Vec<f64>> {
    static SERIES: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    SERIES.get_or_init(|| {
        let one = BigInt::one() << RHO_BITS;
        // piece 0: rho = 1 on [0, 1]
        let mut prev: Vec<BigInt> = vec![BigInt::zero(); RHO_TERMS];
        prev[0] = one.clone();
        let mut out = vec![vec![1.0]];
        for k in 1..RHO_MAX_U as usize {
            let two_c = BigInt::from(2 * k + 1);
            // (c + x) sum (i+1) a_{i+1} x^i = -sum b_i x^i, with b the previous piece
            let mut a = vec![BigInt::zero(); RHO_TERMS];
            for i in 0..RHO_TERMS - 1 {
                let num = -(&prev[i] + &a[i] * i) * 2;
                a[i + 1] = num / (&two_c * (i + 1));
            }
            // continuity at u = k: previous piece at x = 1/2 equals this one at x = -1/2
            a[0] = horner_half(&prev, false) - horner_half(&a, true);
            out.push(a.iter().map(fixed_to_f64).collect());
            prev = a;
        }
        out
    })
}

/// sum c_i (+-1/2)^i in fixed point.
fn horner_half(c: &[BigInt], negative: bool) -> BigInt {
    c.iter().rev().fold(BigInt::zero(), |acc, x| {
        let h = acc >> 1u32;
        if negative {
            x - h
        } else {
            x + h
        }
    })
}

fn fixed_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(0.0) * (-(RHO_BITS as f64)).exp2()
}

/// Dickman's rho for 0 <= u <= 20: rho = 1 on [0,1] and u rho'(u) = -rho(u-1).
pub fn dickman_rho(u: f64) -> Result<f64> {
    if !(0.0..=RHO_MAX_U).contains(&u) {
        return Err(Error::OutOfRange(format!("rho({u}) outside [0, {RHO_MAX_U}]")));
    }
    if u <= 1.0 {
        return Ok(1.0);
    }
    let series = rho_series();
    let k = (u.floor() as usize).min(series.len() - 1);
    let x = u - k as f64 - 0.5;
    Ok(series[k].iter().rev().fold(0.0, |acc, &c| acc * x + c))
}

// ---------------------------------------------------------------------------
// Experiments

#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub y_max: u64,
    pub smooth_bound: u64,
    pub count: u64,
    pub u: f64,
    pub rho: f64,
    pub prediction: f64,
    pub relative_deviation: f64,
}

/// Number of squarefree y-smooth q <= Y.
pub fn squarefree_smooth_count(ymax: u64, y: u64) -> Result<u64> {
    check_limit(ymax, DENSITY_LIMIT)?;
    if ymax == 0 {
        return Ok(0);
    }
    if y >= ymax {
        return Ok(class_counts(ymax, 1)?[0]);
    }
    let primes: Vec<u64> = (2..=y).filter(|&p| is_prime(p)).collect();
    // Count products of distinct primes (taken in increasing order) up to Y.
    fn dfs(primes: &[u64], from: usize, prod: u64, limit: u64) -> u64 {
        let mut c = 1;
        for i in from..primes.len() {
            let p = primes[i];
            if prod.saturating_mul(p) > limit {
                break;
            }
            c += dfs(primes, i + 1, prod * p, limit);
        }
        c
    }
    Ok(dfs(&primes, 0, 1, ymax))
}

/// Exact count of squarefree y-smooth q <= Y against (6/pi^2) rho(u) Y.
pub fn density_experiment(ymax: u64, y: u64) -> Result<DensityReport> {
    if ymax < 1 || y < 2 {
        return Err(Error::InvalidArgument("need Y >= 1 and y >= 2".into()));
    }
    let count = squarefree_smooth_count(ymax, y)?;
    let u = if ymax == 1 { 0.0 } else { (ymax as f64).ln() / (y as f64).ln() };
    let rho = dickman_rho(u)?;
    let prediction = 6.0 / (std::f64::consts::PI * std::f64::consts::PI) * rho * ymax as f64;
    Ok(DensityReport {
        y_max: ymax,
        smooth_bound: y,
        count,
        u,
        rho,
        prediction,
        relative_deviation: (count as f64 - prediction) / prediction,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremRow {
    pub q: u64,
    pub x: u64,
    pub squarefree: bool,
    pub largest_prime: u64,
    pub a: u64,
    pub max_delta: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremFit {
    pub q: u64,
    /// Least-squares slope of log max|Delta| against log X.
    pub exponent: f64,
    /// Whether the normalized statistic decreases strictly along the ladder.
    pub decreasing: bool,
    /// Whether the trend is asserted for this q (squarefree, q <= X throughout).
    pub asserted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremExperiment {
    pub rows: Vec<TheoremRow>,
    pub fits: Vec<TheoremFit>,
}

impl TheoremExperiment {
    pub fn all_pass(&self) -> bool {
        self.fits.iter().all(|f| !f.asserted || f.decreasing)
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

/// max|Delta| over coprime classes along a ladder of X for each q.
pub fn main_theorem_experiment(ladder: &[u64], qs: &[u64]) -> Result<TheoremExperiment> {
    if ladder.is_empty() || qs.is_empty() {
        return Err(Error::InvalidArgument("empty ladder or modulus list".into()));
    }
    let mut ladder = ladder.to_vec();
    ladder.sort_unstable();
    ladder.dedup();
    let mut qs = qs.to_vec();
    qs.sort_unstable();
    qs.dedup();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &q in &qs {
        let fq = factorize(q);
        let mut norm = Vec::new();
        let mut lx = Vec::new();
        let mut ly = Vec::new();
        for &x in &ladder {
            let m = max_delta(x, q)?;
            let normalized = m.value * q as f64 / x as f64;
            norm.push(normalized);
            lx.push((x as f64).ln());
            ly.push(m.value.max(f64::MIN_POSITIVE).ln());
            rows.push(TheoremRow {
                q,
                x,
                squarefree: fq.is_squarefree(),
                largest_prime: if q == 1 { 1 } else { fq.largest_prime() },
                a: m.a,
                max_delta: m.value,
                normalized,
            });
        }
        let decreasing = norm.windows(2).all(|w| w[1] < w[0]);
        let asserted = fq.is_squarefree() && q <= ladder[0] && q > 1;
        fits.push(TheoremFit { q, exponent: slope(&lx, &ly), decreasing, asserted });
    }
    Ok(TheoremExperiment { rows, fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_examples() {
        assert_eq!(squarefree_sieve(10).unwrap().count(), 7);
        assert_eq!(squarefree_sieve(1).unwrap().count(), 1);
        assert!(matches!(squarefree_sieve(SIEVE_LIMIT + 1), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(20, 3, 1).unwrap().value, 0.0);
        assert_eq!(delta(1000, 1, 0).unwrap().value, 0.0);
        let m = max_delta(20, 3).unwrap();
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn smooth_predicates() {
        assert!(is_smooth(30030, 13));
        assert!(!is_ultrasmooth(8, 5));
        assert!(is_ultrasmooth(12, 5));
    }

    #[test]
    fn rho_values() {
        assert_eq!(dickman_rho(0.5).unwrap(), 1.0);
        assert!((dickman_rho(2.0).unwrap() - (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!((dickman_rho(3.0).unwrap() - 0.0486083882911316).abs() < 1e-10);
        assert!(dickman_rho(20.5).is_err());
    }

    #[test]
    fn density_trivial() {
        assert_eq!(density_experiment(1000, 2).unwrap().count, 2);
        let r = density_experiment(1000, 1000).unwrap();
        assert_eq!(r.count, squarefree_sieve(1000).unwrap().count());
        assert_eq!(r.rho, 1.0);
    }
}
