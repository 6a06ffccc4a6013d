// SPDX-License-Identifier: Apache-2.0
//! q-van der Corput side: smooth factorizations, complete and incomplete
//! correlation sums, bound budgets and bad h-tuple counting.

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::cyclo::{root_exact_angle, Cyclo, EXACT_CAP};
use crate::error::{Error, Result};
use crate::expsum::{k2_direct_group_ring, k2_row, unit_inverse_squares, Engine, SumValue};
use crate::modarith::{factorize, gcd, is_prime, mod_inv, mul_mod, reduce, valuation, FactoredModulus};
use crate::numeric::{ComplexSum, Sum};

/// Hard cap on exhaustive h-tuple sweeps.
pub const H_TUPLE_BUDGET: u64 = 1_000_000;

/// Cap on the number of enumerated variable tuples in the exact complete sum.
pub const ORTHOGONALITY_BUDGET: u64 = 40_000_000;

const LOG_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Smooth factorizations

/// A positive integer given by its factorization, possibly beyond u64.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmoothInt {
    factors: Vec<(u64, u32)>,
}

impl SmoothInt {
    pub fn from_factors(mut factors: Vec<(u64, u32)>) -> Result<SmoothInt> {
        factors.retain(|&(_, e)| e > 0);
        factors.sort_unstable();
        for w in factors.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidArgument(format!("repeated prime {}", w[0].0)));
            }
        }
        for &(p, _) in &factors {
            if !is_prime(p) {
                return Err(Error::InvalidArgument(format!("{p} is not prime")));
            }
        }
        let s = SmoothInt { factors };
        if s.value().is_none() {
            return Err(Error::OutOfRange("integer exceeds u128".into()));
        }
        Ok(s)
    }

    pub fn from_u64(n: u64) -> SmoothInt {
        SmoothInt { factors: factorize(n).factors().to_vec() }
    }

    /// Product of all primes <= n.
    pub fn primorial(n: u64) -> Result<SmoothInt> {
        SmoothInt::from_factors((2..=n).filter(|&p| is_prime(p)).map(|p| (p, 1)).collect())
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn value(&self) -> Option<u128> {
        self.factors
            .iter()
            .try_fold(1u128, |acc, &(p, e)| (p as u128).checked_pow(e).and_then(|pe| acc.checked_mul(pe)))
    }

    pub fn ln(&self) -> f64 {
        self.factors.iter().map(|&(p, e)| e as f64 * (p as f64).ln()).sum()
    }

    pub fn is_smooth(&self, y: u64) -> bool {
        self.factors.iter().all(|&(p, _)| p <= y)
    }

    pub fn is_ultrasmooth(&self, y: u64) -> bool {
        self.factors
            .iter()
            .all(|&(p, e)| p.checked_pow(e).map_or(false, |pe| pe <= y))
    }

    fn p_part(&self, p: u64) -> u32 {
        self.factors.iter().find(|f| f.0 == p).map_or(0, |f| f.1)
    }
}

/// Divisor q' of q with q^v < q' <= y q^v, by the ascending-prefix greedy over
/// the prime factors counted with multiplicity.
pub fn smooth_divisor(q: &FactoredModulus, v: f64, y: u64) -> Result<u64> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidArgument(format!("v = {v} not in (0,1)")));
    }
    if q.value() < 2 {
        return Err(Error::InvalidArgument("q must be at least 2".into()));
    }
    if q.largest_prime() > y {
        return Err(Error::NotSmooth { q: q.value(), y });
    }
    let target = v * (q.value() as f64).ln();
    let mut primes = Vec::new();
    for &(p, e) in q.factors() {
        primes.extend(std::iter::repeat(p).take(e as usize));
    }
    let mut prefix = 1u64;
    for &p in &primes {
        let next = prefix * p;
        if (next as f64).ln() > target + LOG_TOL {
            return Ok(next);
        }
        prefix = next;
    }
    unreachable!("q itself exceeds q^v for v < 1")
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothPart {
    pub factors: Vec<(u64, u32)>,
    pub value: u128,
    pub ln_value: f64,
    /// Natural-log window (lower exclusive, upper inclusive).
    pub ln_window: (f64, f64),
}

fn prime_power_ln(p: u64, e: u32) -> f64 {
    e as f64 * (p as f64).ln()
}

/// Factorization q = q_1 ... q_k into pairwise coprime parts with prescribed
/// sizes X^{u_j}, the 2- and 3-parts folded into q_1.
pub fn smooth_factorization(q: &SmoothInt, u: &[f64], x: f64, y: u64) -> Result<Vec<SmoothPart>> {
    let k = u.len();
    if k < 4 {
        return Err(Error::InvalidArgument(format!("need k >= 4 parts, got {k}")));
    }
    if (u.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("exponents must sum to 1".into()));
    }
    if !(x > 1.0 && y >= 2) {
        return Err(Error::InvalidArgument("need X > 1 and y >= 2".into()));
    }
    if !q.is_ultrasmooth(y) {
        return Err(Error::NotUltrasmooth { q: format!("{:?}", q.value()), y });
    }
    let lx = x.ln();
    let eta = (y as f64).ln() / lx;
    let (small, mut pps): (Vec<(u64, u32)>, Vec<(u64, u32)>) = q.factors().iter().partition(|f| f.0 <= 3);
    pps.sort_by_key(|&(p, e)| p.pow(e));

    let mut groups: Vec<Vec<(u64, u32)>> = Vec::with_capacity(k);
    let mut idx = 0;
    for (j, &uj) in u.iter().enumerate().take(k - 1) {
        let mut acc = 0.0;
        let mut g = Vec::new();
        while acc <= uj * lx + LOG_TOL {
            let Some(&(p, e)) = pps.get(idx) else {
                return Err(Error::WindowInfeasible(format!(
                    "prime powers exhausted while filling part {}",
                    j + 1
                )));
            };
            acc += prime_power_ln(p, e);
            g.push((p, e));
            idx += 1;
        }
        groups.push(g);
    }
    let rest: Vec<(u64, u32)> = pps[idx..].to_vec();
    groups[0].extend(small);
    if rest.is_empty() {
        return Err(Error::WindowInfeasible(format!("part {k} is empty")));
    }
    groups.push(rest);

    let fold = prime_power_ln(2, q.p_part(2)) + prime_power_ln(3, q.p_part(3));
    let mut out = Vec::with_capacity(k);
    for (j, mut g) in groups.into_iter().enumerate() {
        g.sort_unstable();
        let ln_value: f64 = g.iter().map(|&(p, e)| prime_power_ln(p, e)).sum();
        let window = if j == 0 {
            (u[0] * lx, (u[0] + eta) * lx + fold)
        } else if j + 1 < k {
            (u[j] * lx, (u[j] + eta) * lx)
        } else {
            ((u[j] - (k as f64 - 1.0) * eta) * lx - fold, 2f64.ln() + u[j] * lx)
        };
        if !(ln_value > window.0 - LOG_TOL && ln_value <= window.1 + LOG_TOL) {
            return Err(Error::WindowInfeasible(format!(
                "part {} has log-size {ln_value:.6} outside ({:.6}, {:.6}]",
                j + 1,
                window.0,
                window.1
            )));
        }
        let value = SmoothInt { factors: g.clone() }.value().expect("divides q");
        out.push(SmoothPart { factors: g, value, ln_value, ln_window: window });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Complete correlation sums T(A,B,C,h,h';Q)

#[derive(Debug, Clone)]
pub struct TFactor {
    pub modulus: u64,
    pub a: u64,
    pub b: u64,
    pub value: SumValue,
}

#[derive(Debug, Clone)]
pub struct CompleteT {
    pub full: SumValue,
    pub factors: Vec<TFactor>,
}

impl CompleteT {
    /// Product of the prime-power factors, in the full modulus for exact values.
    pub fn product(&self) -> SumValue {
        let q = self.full.order().unwrap_or(1).max(1);
        let mut acc = match self.full.exact {
            Some(_) => SumValue::from_exact(Cyclo::from_int(q, 1)),
            None => SumValue::real(1.0),
        };
        for f in &self.factors {
            acc = acc.mul(&f.value);
        }
        acc
    }

    /// Exact equality of the full sum with the product, None for float values.
    pub fn factorization_holds(&self) -> Option<bool> {
        self.full.exact_eq(&self.product())
    }
}

/// sum_b e_Q(C B b) prod_i K2(A, b+h_i; Q) prod_j conj K2(A, b+h'_j; Q).
pub fn t_sum(a: i64, b: i64, c: i64, h: &[i64], hp: &[i64], q: u64, engine: Engine) -> Result<SumValue> {
    if q == 0 {
        return Err(Error::InvalidArgument("modulus 0".into()));
    }
    let ar = reduce(a, q);
    if gcd(ar, q) != 1 {
        return Err(Error::NotAUnit { x: a, modulus: q });
    }
    if h.len() + hp.len() == 0 {
        return Err(Error::EmptyCorrelation);
    }
    let cb = mul_mod(reduce(c, q), reduce(b, q), q);
    match engine {
        Engine::Float => {
            let row = k2_row(ar as i64, q)?;
            let hr: Vec<u64> = h.iter().map(|&x| reduce(x, q)).collect();
            let hpr: Vec<u64> = hp.iter().map(|&x| reduce(x, q)).collect();
            let mut acc = ComplexSum::default();
            for x in 0..q {
                let mut z = root_exact_angle(mul_mod(cb, x, q), q);
                for &s in &hr {
                    z *= row[((x + s) % q) as usize];
                }
                for &s in &hpr {
                    z *= row[((x + s) % q) as usize].conj();
                }
                acc.add(z);
            }
            Ok(SumValue::float(acc.value()))
        }
        Engine::Exact => t_sum_exact(ar, cb, h, hp, q).map(SumValue::from_exact),
    }
}

/// Exact T via orthogonality of the b-sum: Q times the sum over unit tuples
/// with sum(x) - sum(y) = -CB of the combined phase.
fn t_sum_exact(a: u64, cb: u64, h: &[i64], hp: &[i64], q: u64) -> Result<Cyclo> {
    if q > EXACT_CAP {
        return Err(Error::ExactEngineOverflow { order: q, cap: EXACT_CAP });
    }
    let units = unit_inverse_squares(q);
    let vars = h.len() + hp.len();
    let cost = (units.len() as u64).saturating_pow(vars as u32 - 1);
    if cost > ORTHOGONALITY_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "{cost} unit tuples for the exact sum modulo {q}"
        )));
    }
    let mut inv_sq = vec![u64::MAX; q as usize];
    for &(x, xi2) in &units {
        inv_sq[x as usize] = xi2;
    }
    // Each variable: (shift, sign). Phase sign*(A x^{-2} + shift x), sum constraint sign*x.
    let mut vs: Vec<(u64, bool)> = h.iter().map(|&s| (reduce(s, q), true)).collect();
    vs.extend(hp.iter().map(|&s| (reduce(s, q), false)));
    let phase = |x: u64, (s, plus): (u64, bool)| -> u64 {
        let e = (mul_mod(a, inv_sq[x as usize], q) + mul_mod(s, x, q)) % q;
        if plus {
            e
        } else {
            (q - e) % q
        }
    };
    let mut gr = vec![0i64; q as usize];
    let target = (q - cb % q) % q;
    let last = *vs.last().unwrap();
    let head = &vs[..vs.len() - 1];
    let mut stack: Vec<usize> = vec![0; head.len()];
    loop {
        let mut sum = 0u64;
        let mut ph = 0u64;
        for (i, &ui) in stack.iter().enumerate() {
            let x = units[ui].0;
            let v = head[i];
            sum = if v.1 { (sum + x) % q } else { (sum + q - x) % q };
            ph = (ph + phase(x, v)) % q;
        }
        // sign * x_last = target - sum
        let rem = (target + q - sum) % q;
        let xl = if last.1 { rem } else { (q - rem) % q };
        if inv_sq[xl as usize] != u64::MAX {
            gr[((ph + phase(xl, last)) % q) as usize] += 1;
        }
        // Odometer.
        let mut i = 0;
        loop {
            if i == stack.len() {
                return Ok(Cyclo::from_group_ring(q, &gr).scale(q as i64));
            }
            stack[i] += 1;
            if stack[i] < units.len() {
                break;
            }
            stack[i] = 0;
            i += 1;
        }
    }
}

/// Full sum T(A,B,C,h,h';Q) together with its prime-power factors
/// T(A_j, B_j, C, h, h'; q_j), A_j = A (Q/q_j)^{-3}, B_j = B (Q/q_j)^{-1}.
pub fn complete_t(
    a: i64,
    b: i64,
    c: i64,
    h: &[i64],
    hp: &[i64],
    q: &FactoredModulus,
    engine: Engine,
) -> Result<CompleteT> {
    let qv = q.value();
    for x in [a, b] {
        if gcd(reduce(x, qv), qv) != 1 {
            return Err(Error::NotAUnit { x, modulus: qv });
        }
    }
    let full = t_sum(a, b, c, h, hp, qv, engine)?;
    let mut factors = Vec::with_capacity(q.factors().len());
    for qi in q.prime_powers() {
        let r = mod_inv((qv / qi) as i64, qi)?;
        let r3 = mul_mod(mul_mod(r, r, qi), r, qi);
        let ai = mul_mod(reduce(a, qi), r3, qi);
        let bi = mul_mod(reduce(b, qi), r, qi);
        let value = t_sum(ai as i64, bi as i64, c, h, hp, qi, engine)?;
        factors.push(TFactor { modulus: qi, a: ai, b: bi, value });
    }
    Ok(CompleteT { full, factors })
}

// ---------------------------------------------------------------------------
// Incomplete sums

/// Integer interval [start, start + len).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub start: i64,
    pub len: u64,
}

impl Interval {
    pub fn new(start: i64, len: u64) -> Interval {
        Interval { start, len }
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        let s = self.start;
        (0..self.len as i64).map(move |i| s + i)
    }
}

/// T(b,M) = sum_{k in J} e_Q(-M k) K2(b,k;Q).
pub fn incomplete_t(b: i64, m: i64, j: Interval, q: u64, engine: Engine) -> Result<SumValue> {
    if q == 0 {
        return Err(Error::InvalidArgument("modulus 0".into()));
    }
    let br = reduce(b, q);
    if gcd(br, q) != 1 {
        return Err(Error::NotAUnit { x: b, modulus: q });
    }
    match engine {
        Engine::Exact => {
            if q > EXACT_CAP {
                return Err(Error::ExactEngineOverflow { order: q, cap: EXACT_CAP });
            }
            let mut gr = vec![0i64; q as usize];
            for k in j.iter() {
                let row = k2_direct_group_ring(br as i64, k, q)?;
                let shift = reduce(-(reduce(m, q) as i128 * reduce(k, q) as i128 % q as i128) as i64, q);
                for (e, &c) in row.iter().enumerate() {
                    if c != 0 {
                        gr[((e as u64 + shift) % q) as usize] += c;
                    }
                }
            }
            Ok(SumValue::from_exact(Cyclo::from_group_ring(q, &gr)))
        }
        Engine::Float => {
            let row = k2_row(br as i64, q)?;
            let mr = reduce(m, q);
            let z = crate::numeric::sum_complex(j.iter().map(|k| {
                let kr = reduce(k, q);
                root_exact_angle((q - mul_mod(mr, kr, q)) % q, q) * row[kr as usize]
            }));
            Ok(SumValue::float(z))
        }
    }
}

/// Integers d in (V1, V1 + floor(V1/V0)] coprime to q.
pub fn quadratic_interval(q: u64, v1: u64, v0: f64) -> Result<Vec<u64>> {
    if q == 0 || !(v0 > 0.0) {
        return Err(Error::InvalidArgument("need q >= 1 and V0 > 0".into()));
    }
    let len = (v1 as f64 / v0).floor() as u64;
    Ok((v1 + 1..=v1 + len).filter(|&d| gcd(d % q, q) == 1).collect())
}

/// S(k; V1) = sum over d in I(V1) coprime to q of e_q(k a d^{-2}).
pub fn incomplete_quadratic_sum(k: i64, a: i64, q: u64, v1: u64, v0: f64, engine: Engine) -> Result<SumValue> {
    if q == 0 {
        return Err(Error::InvalidArgument("modulus 0".into()));
    }
    let ar = reduce(a, q);
    if gcd(ar, q) != 1 {
        return Err(Error::NotAUnit { x: a, modulus: q });
    }
    let ka = mul_mod(reduce(k, q), ar, q);
    let mut gr = vec![0i64; q as usize];
    for d in quadratic_interval(q, v1, v0)? {
        let di = mod_inv((d % q) as i64, q)?;
        gr[mul_mod(ka, mul_mod(di, di, q), q) as usize] += 1;
    }
    group_ring_sum(q, &gr, engine)
}

/// q S(k; V1) rebuilt by completion: sum_r K2(k a, r; q) g(r) with
/// g(r) = sum_{d in (V1, V1 + V1/V0]} e_q(-r d).
pub fn completed_quadratic_sum(k: i64, a: i64, q: u64, v1: u64, v0: f64, engine: Engine) -> Result<SumValue> {
    if q == 0 {
        return Err(Error::InvalidArgument("modulus 0".into()));
    }
    let ar = reduce(a, q);
    if gcd(ar, q) != 1 {
        return Err(Error::NotAUnit { x: a, modulus: q });
    }
    let ka = mul_mod(reduce(k, q), ar, q);
    let len = (v1 as f64 / v0).floor() as u64;
    let ds: Vec<u64> = (v1 + 1..=v1 + len).map(|d| d % q).collect();
    let units = unit_inverse_squares(q);
    let mut gr = vec![0i64; q as usize];
    for r in 0..q {
        // K2(ka, r; q) as a group-ring vector, then convolved with g(r).
        let mut row = vec![0i64; q as usize];
        for &(x, xi2) in &units {
            let e = if q == 1 { 0 } else { (mul_mod(ka, xi2, q) + mul_mod(r, x, q)) % q };
            row[e as usize] += 1;
        }
        for &d in &ds {
            let s = (q - mul_mod(r, d, q)) % q;
            for (e, &c) in row.iter().enumerate() {
                if c != 0 {
                    gr[((e as u64 + s) % q) as usize] += c;
                }
            }
        }
    }
    group_ring_sum(q, &gr, engine)
}

fn group_ring_sum(q: u64, gr: &[i64], engine: Engine) -> Result<SumValue> {
    match engine {
        Engine::Exact => {
            if q > EXACT_CAP {
                return Err(Error::ExactEngineOverflow { order: q, cap: EXACT_CAP });
            }
            Ok(SumValue::from_exact(Cyclo::from_group_ring(q, gr)))
        }
        Engine::Float => Ok(SumValue::float(crate::numeric::sum_complex(
            gr.iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(e, &c)| root_exact_angle(e as u64, q) * c as f64),
        ))),
    }
}

/// kappa(m; ka, q') = max_{1 <= R <= K} |sum_{r=K(m-1)+1}^{K(m-1)+R} e_{q'}(-r V1) K2(ka, r; q')|.
pub fn kappa(m: u64, ka: i64, q: u64, k: u64, v1: i64) -> Result<f64> {
    if k == 0 || m == 0 || m.saturating_mul(k) > q {
        return Err(Error::InvalidArgument(format!("need 1 <= m <= q'/K, got m = {m}, K = {k}, q' = {q}")));
    }
    let row = k2_row(ka, q)?;
    let v = reduce(v1, q);
    let mut acc = ComplexSum::default();
    let mut best = 0.0f64;
    for r in k * (m - 1) + 1..=k * m {
        let rr = r % q;
        acc.add(root_exact_angle((q - mul_mod(rr, v, q)) % q, q) * row[rr as usize]);
        best = best.max(acc.value().norm());
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Factorization plans and the van der Corput decomposition

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationPlan {
    pub q: u64,
    pub parts: Vec<u64>,
    pub windows: Vec<(f64, f64)>,
    pub k: u64,
    pub l: usize,
}

impl FactorizationPlan {
    /// Plan with parts (Q_0, ..., Q_L); each window defaults to (Q_j - 1, Q_j].
    pub fn new(parts: &[u64], k: u64) -> Result<FactorizationPlan> {
        let windows = parts.iter().map(|&p| (p as f64 - 1.0, p as f64)).collect();
        FactorizationPlan::with_windows(parts, k, windows)
    }

    pub fn with_windows(parts: &[u64], k: u64, windows: Vec<(f64, f64)>) -> Result<FactorizationPlan> {
        if parts.len() < 2 {
            return Err(Error::PlanInvalid("need Q_0 and at least one further part".into()));
        }
        if windows.len() != parts.len() {
            return Err(Error::PlanInvalid("one window per part".into()));
        }
        let mut q = 1u64;
        for (i, &p) in parts.iter().enumerate() {
            if p < 2 {
                return Err(Error::PlanInvalid(format!("part Q_{i} = {p} < 2")));
            }
            q = q
                .checked_mul(p)
                .filter(|&x| x < (1 << 62))
                .ok_or_else(|| Error::PlanInvalid("product overflows".into()))?;
            for &r in &parts[..i] {
                if gcd(p, r) != 1 {
                    return Err(Error::PlanInvalid(format!("parts {r} and {p} share a factor")));
                }
            }
            let (lo, hi) = windows[i];
            if !((p as f64) > lo && (p as f64) <= hi) {
                return Err(Error::PlanInvalid(format!("part Q_{i} = {p} outside ({lo}, {hi}]")));
            }
        }
        if q < 4 {
            return Err(Error::PlanInvalid("Q must be at least 4".into()));
        }
        if k == 0 {
            return Err(Error::PlanInvalid("K must be positive".into()));
        }
        Ok(FactorizationPlan { q, parts: parts.to_vec(), windows, k, l: parts.len() - 1 })
    }

    pub fn q0(&self) -> u64 {
        self.parts[0]
    }

    /// H_j = floor(K / Q_j), j = 1..L.
    pub fn h_bounds(&self) -> Vec<u64> {
        self.parts[1..].iter().map(|&p| self.k / p).collect()
    }

    fn check_for_vdc(&self) -> Result<()> {
        let mx = *self.parts[1..].iter().max().unwrap();
        if self.k < mx {
            return Err(Error::PlanInvalid(format!("K = {} < max Q_j = {mx}", self.k)));
        }
        Ok(())
    }
}

/// Number of h-tuples with 1 <= |h_j| <= H_j.
pub fn h_tuple_count(bounds: &[u64]) -> u64 {
    bounds.iter().fold(1u64, |acc, &b| acc.saturating_mul(2 * b))
}

/// The i-th tuple (ascending lexicographic order, first coordinate slowest).
pub fn h_tuple(bounds: &[u64], mut i: u64) -> Vec<i64> {
    let mut h = vec![0i64; bounds.len()];
    for j in (0..bounds.len()).rev() {
        let r = 2 * bounds[j];
        let d = (i % r) as i64;
        i /= r;
        let hb = bounds[j] as i64;
        h[j] = if d < hb { d - hb } else { d - hb + 1 };
    }
    h
}

/// H_I = sum_{i in I} Q_i h_i for every subset I of {1..L}, indexed by bitmask.
pub fn subset_sums(h: &[i64], qparts: &[u64]) -> Vec<i128> {
    let l = h.len();
    (0..1usize << l)
        .map(|mask| (0..l).filter(|i| mask >> i & 1 == 1).map(|i| qparts[i] as i128 * h[i] as i128).sum())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct HTerm {
    pub h: Vec<i64>,
    pub interval: Interval,
    pub b_prime: u64,
    pub abs_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VdcDecomposition {
    pub h_bounds: Vec<u64>,
    pub terms: Vec<HTerm>,
    pub lhs: f64,
    pub h_sum: f64,
    pub rhs: f64,
    /// lhs / rhs: the smallest constant making the inequality hold here.
    pub fitted_constant: f64,
}

/// Both sides of the van der Corput inequality for T(b,M) over J. The T(h)
/// use b' = b (Q/Q_0)^{-3} mod Q_0 and J(h) = {k : k + H_I in J for all I}.
pub fn vdc_decompose(plan: &FactorizationPlan, b: i64, m: i64, j: Interval) -> Result<VdcDecomposition> {
    plan.check_for_vdc()?;
    if j.len > plan.k {
        return Err(Error::PlanInvalid(format!("|J| = {} exceeds K = {}", j.len, plan.k)));
    }
    let q = plan.q;
    let q0 = plan.q0();
    let br = reduce(b, q);
    if gcd(br, q) != 1 {
        return Err(Error::NotAUnit { x: b, modulus: q });
    }
    let bounds = plan.h_bounds();
    let total = h_tuple_count(&bounds);
    if total > H_TUPLE_BUDGET {
        return Err(Error::BudgetExceeded(format!("{total} h-tuples")));
    }
    let r = mod_inv((q / q0) as i64, q0)?;
    let bp = mul_mod(br % q0, mul_mod(mul_mod(r, r, q0), r, q0), q0);
    let row = k2_row(bp as i64, q0)?;
    let lhs = incomplete_t(b, m, j, q, Engine::Float)?.approx.norm();
    let qparts = &plan.parts[1..];
    let l = plan.l;

    let terms: Vec<HTerm> = (0..total)
        .into_par_iter()
        .map(|i| {
            let h = h_tuple(&bounds, i);
            let hs = subset_sums(&h, qparts);
            let lo = hs.iter().copied().min().unwrap() as i64;
            let hi = hs.iter().copied().max().unwrap() as i64;
            let start = j.start - lo;
            let end = j.start + j.len as i64 - hi;
            let interval = Interval::new(start, (end - start).max(0) as u64);
            let mut acc = ComplexSum::default();
            for kk in interval.iter() {
                let mut z = Complex64::new(1.0, 0.0);
                for (mask, &hv) in hs.iter().enumerate() {
                    let w = row[reduce_i128(kk as i128 + hv, q0) as usize];
                    z *= if (mask as u32).count_ones() % 2 == 1 { w.conj() } else { w };
                }
                acc.add(z);
            }
            HTerm { h, interval, b_prime: bp, abs_value: acc.value().norm() }
        })
        .collect();

    let mut hsum = Sum::default();
    for t in &terms {
        hsum.add(t.abs_value);
    }
    let h_sum = hsum.value();
    let kf = plan.k as f64;
    let qf = q as f64;
    let q0f = q0 as f64;
    let mut inner = Sum::default();
    for jj in 1..=l {
        let part = plan.parts[l - jj + 1] as f64;
        inner.add((part / kf).powi(1 << (l - jj)));
    }
    inner.add(qf / (kf.powi(l as i32 + 1) * q0f.powf(2f64.powi(l as i32 - 1) + 1.0)) * h_sum);
    let rhs = qf.sqrt() * kf * inner.value().powf(2f64.powi(-(l as i32)));
    Ok(VdcDecomposition { h_bounds: bounds, terms, lhs, h_sum, rhs, fitted_constant: lhs / rhs })
}

fn reduce_i128(x: i128, m: u64) -> u64 {
    x.rem_euclid(m as i128) as u64
}

// ---------------------------------------------------------------------------
// Budgets for the h-sum

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetVariant {
    Squarefree,
    General,
}

impl std::str::FromStr for BudgetVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squarefree" | "i" => Ok(BudgetVariant::Squarefree),
            "general" | "ii" => Ok(BudgetVariant::General),
            _ => Err(Error::InvalidArgument(format!("unknown budget variant '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Budget {
    pub variant: BudgetVariant,
    pub value: f64,
    /// Exponent of Q_0 in the bound.
    pub q0_exponent: f64,
    pub delta_prime: f64,
    pub hypotheses: Vec<Hypothesis>,
}

/// Right side of the h-sum bound with epsilon = 0, without enforcing hypotheses.
pub fn evaluate_budget(parts: &[u64], k: f64, variant: BudgetVariant, delta_prime: Option<f64>) -> Result<Budget> {
    if parts.len() < 2 {
        return Err(Error::InvalidArgument("need Q_0 and at least one further part".into()));
    }
    let l = parts.len() - 1;
    let dp = delta_prime.unwrap_or(2f64.powf(-(2f64.powi(l as i32))));
    let q0 = parts[0];
    let q: f64 = parts.iter().map(|&p| p as f64).product();
    let q0f = q0 as f64;
    let half = 2f64.powi(l as i32 - 1);
    let coprime = (0..parts.len()).all(|i| (0..i).all(|j| gcd(parts[i], parts[j]) == 1));
    let mut hypotheses = vec![Hypothesis { name: "parts pairwise coprime".into(), holds: coprime }];
    let (value, e) = match variant {
        BudgetVariant::Squarefree => {
            let sqf = parts.iter().all(|&p| factorize(p).is_squarefree());
            hypotheses.push(Hypothesis { name: "Q squarefree".into(), holds: sqf });
            let e = half + 1.5;
            (k.powi(l as i32) / q * q0f.powf(e) * (k / q0f + 1.0), e)
        }
        BudgetVariant::General => {
            hypotheses.push(Hypothesis { name: "(Q_0, 6) = 1".into(), holds: gcd(q0, 6) == 1 });
            hypotheses.push(Hypothesis {
                name: "delta' in (0, 2^(-2^L)]".into(),
                holds: dp > 0.0 && dp <= 2f64.powf(-(2f64.powi(l as i32))),
            });
            let lower = q0f.powf(2.0 * dp);
            hypotheses.push(Hypothesis {
                name: "K/Q_j > Q_0^(2 delta')".into(),
                holds: parts[1..].iter().all(|&p| k / p as f64 > lower),
            });
            let e = half + 2.0 - dp;
            (k.powi(l as i32) / q * q0f.powf(e), e)
        }
    };
    Ok(Budget { variant, value, q0_exponent: e, delta_prime: dp, hypotheses })
}

/// As `evaluate_budget`, failing with HypothesisViolated when any hypothesis fails.
pub fn correlation_budget(parts: &[u64], k: f64, variant: BudgetVariant, delta_prime: Option<f64>) -> Result<Budget> {
    let b = evaluate_budget(parts, k, variant, delta_prime)?;
    let failed: Vec<&str> = b.hypotheses.iter().filter(|h| !h.holds).map(|h| h.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(Error::HypothesisViolated(failed.join("; ")));
    }
    Ok(b)
}

// ---------------------------------------------------------------------------
// Bad h-tuples and the mod-3 balance condition

#[derive(Debug, Clone, Serialize)]
pub struct BadCount {
    pub d: u64,
    pub c: f64,
    pub count: u64,
    pub total: u64,
    pub bound: f64,
    pub hypotheses: Vec<Hypothesis>,
}

/// Tuples 1 <= |h_j| <= K/Q_j such that for every p^nu || d some pair of
/// distinct subset sums H_I != H_J has nu_p(H_I - H_J) > c nu.
pub fn h_tuple_bad_count(d: u64, q0: u64, qparts: &[u64], k: u64, c: f64) -> Result<BadCount> {
    if qparts.is_empty() {
        return Err(Error::InvalidArgument("need at least one part Q_j".into()));
    }
    if d == 0 || q0 % d != 0 {
        return Err(Error::InvalidArgument(format!("{d} does not divide Q_0 = {q0}")));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidArgument(format!("c = {c} outside (0, 1]")));
    }
    let l = qparts.len();
    let bounds: Vec<u64> = qparts.iter().map(|&p| k / p).collect();
    let total = h_tuple_count(&bounds);
    if total > H_TUPLE_BUDGET {
        return Err(Error::BudgetExceeded(format!("{total} h-tuples")));
    }
    let df = factorize(d);
    let pf: Vec<(u64, u32)> = df.factors().to_vec();
    let count = if d == 1 {
        0
    } else {
        (0..total)
            .into_par_iter()
            .filter(|&i| {
                let h = h_tuple(&bounds, i);
                let hs = subset_sums(&h, qparts);
                pf.iter().all(|&(p, nu)| {
                    let thr = c * nu as f64;
                    hs.iter().enumerate().any(|(a, &x)| {
                        hs[a + 1..].iter().any(|&y| {
                            x != y && (valuation((x - y).unsigned_abs(), p) as f64) > thr
                        })
                    })
                })
            })
            .count() as u64
    };
    let tau = df.num_divisors() as f64;
    let prod: f64 = qparts.iter().map(|&p| p as f64).product();
    let bound = 2f64.powi(l as i32) * tau.powi(2 * l as i32 - 1) * (d as f64).powf(-c) * (k as f64).powi(l as i32) / prod;
    let cmax = 2f64.powf(-(2f64.powi(l as i32)));
    let lower = (q0 as f64).powf(2.0 * c);
    let hypotheses = vec![
        Hypothesis { name: "c <= 2^(-2^L)".into(), holds: c <= cmax },
        Hypothesis {
            name: "K/Q_j >= Q_0^(2c)".into(),
            holds: qparts.iter().all(|&p| k as f64 / p as f64 >= lower),
        },
    ];
    Ok(BadCount { d, c, count, total, bound, hypotheses })
}

/// mu(tau) = #{even |I| : H_I = tau}, nu(tau) = #{odd |I|}, residues mod `modulus`;
/// true when 3 | mu(tau) - nu(tau) for every tau.
pub fn subset_balance_mod3(h: &[i64], qparts: &[u64], modulus: u64) -> bool {
    let hs = subset_sums(h, qparts);
    let mut diff: std::collections::BTreeMap<u64, i64> = std::collections::BTreeMap::new();
    for (mask, &x) in hs.iter().enumerate() {
        let sign = if (mask as u32).count_ones() % 2 == 0 { 1 } else { -1 };
        *diff.entry(reduce_i128(x, modulus)).or_default() += sign;
    }
    diff.values().all(|&v| v % 3 == 0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComboReport {
    pub p: u64,
    pub qparts: Vec<u64>,
    pub checked: u64,
    pub balanced: u64,
    pub counterexamples: Vec<Vec<i64>>,
}

/// All h in [1,p]^L: whenever the subset sums are balanced mod 3, p divides some h_i.
pub fn combo_check(p: u64, qparts: &[u64]) -> Result<ComboReport> {
    if p <= 3 || !is_prime(p) {
        return Err(Error::SmallPrime(p));
    }
    if let Some(&qj) = qparts.iter().find(|&&qj| qj % p == 0) {
        return Err(Error::NotCoprime(qj, p));
    }
    let l = qparts.len() as u32;
    let total = p.pow(l);
    let mut checked = 0;
    let mut balanced = 0;
    let mut counterexamples = Vec::new();
    for i in 0..total {
        let mut x = i;
        let h: Vec<i64> = (0..l)
            .map(|_| {
                let d = x % p;
                x /= p;
                d as i64 + 1
            })
            .rev()
            .collect();
        checked += 1;
        if subset_balance_mod3(&h, qparts, p) {
            balanced += 1;
            if h.iter().all(|&v| v % p as i64 != 0) {
                counterexamples.push(h);
            }
        }
    }
    Ok(ComboReport { p, qparts: qparts.to_vec(), checked, balanced, counterexamples })
}

// ---------------------------------------------------------------------------
// Exponent arithmetic for the parameter plan

pub type Q128 = Ratio<i128>;

#[derive(Debug, Clone, Serialize)]
pub struct ExponentWindow {
    pub part: String,
    pub lower: String,
    pub upper: String,
    pub lower_f64: f64,
    pub upper_f64: f64,
}

#[derive(Debug, Clone)]
pub struct ExponentPlan {
    pub l: u32,
    pub gamma: Q128,
    pub sigma: Q128,
    pub windows: Vec<(String, Q128, Q128)>,
    /// Upper exponent of q_0 plus the lower exponents of q_1..q_L.
    pub window_sum: Q128,
    pub gamma_max: Q128,
    pub feasible: bool,
}

impl ExponentPlan {
    pub fn identity_holds(&self) -> bool {
        self.window_sum == Q128::new(1, 2) + self.sigma
    }

    pub fn windows_f64(&self) -> Vec<ExponentWindow> {
        self.windows
            .iter()
            .map(|(n, lo, hi)| ExponentWindow {
                part: n.clone(),
                lower: lo.to_string(),
                upper: hi.to_string(),
                lower_f64: ratio_f64(lo),
                upper_f64: ratio_f64(hi),
            })
            .collect()
    }
}

pub fn ratio_f64(r: &Q128) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Parses "a/b", an integer, or a finite decimal as an exact rational.
pub fn parse_ratio(s: &str) -> Result<Q128> {
    let bad = || Error::InvalidArgument(format!("cannot parse '{s}' as a rational"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: i128 = a.trim().parse().map_err(|_| bad())?;
        let b: i128 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(Q128::new(a, b));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.len() > 18 || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ipv: i128 = if ip.is_empty() || ip == "-" { 0 } else { ip.parse().map_err(|_| bad())? };
        let den = 10i128.pow(fp.len() as u32);
        let fpv: i128 = if fp.is_empty() { 0 } else { fp.parse().map_err(|_| bad())? };
        let num = ipv.abs() * den + fpv;
        return Ok(Q128::new(if neg { -num } else { num }, den));
    }
    s.parse::<i128>().map(Q128::from_integer).map_err(|_| bad())
}

/// gamma_max(L) = (L/4 - 1) / (2^{L+3} + L).
pub fn gamma_max(l: u32) -> Q128 {
    (Q128::new(l as i128, 4) - 1) / Q128::from_integer((1i128 << (l + 3)) + l as i128)
}

/// gamma = 2 delta + lambda, sigma = 1/L + 2 (2^{L+2} + L) gamma / L and the
/// window exponents for q_0, ..., q_L.
pub fn exponent_budget(l: u32, delta: Q128, lambda: Q128, eta: Q128) -> Result<ExponentPlan> {
    if !(2..=40).contains(&l) {
        return Err(Error::InvalidArgument(format!("L = {l} outside [2, 40]")));
    }
    let li = l as i128;
    let gamma = delta * 2 + lambda;
    let sigma = Q128::new(1, li) + gamma * (2 * ((1i128 << (l + 2)) + li)) / li;
    let half_sigma = sigma / 2;
    let mut windows = Vec::with_capacity(l as usize + 1);
    let q0_lo = sigma - gamma * ((1i128 << (l + 1)) + 2);
    let q0_hi = q0_lo + eta * li;
    windows.push(("q0".to_string(), q0_lo, q0_hi));
    let mut window_sum = q0_hi;
    // q_{L-j+1} for j = L down to 1, so parts appear as q1, ..., qL.
    for j in (1..=l).rev() {
        let hi = half_sigma - gamma * ((1i128 << j) + 1);
        let lo = hi - eta;
        window_sum += lo;
        windows.push((format!("q{}", l - j + 1), lo, hi));
    }
    let gmax = gamma_max(l);
    let feasible = gmax > Q128::from_integer(0) && gamma <= gmax;
    Ok(ExponentPlan { l, gamma, sigma, windows, window_sum, gamma_max: gmax, feasible })
}
