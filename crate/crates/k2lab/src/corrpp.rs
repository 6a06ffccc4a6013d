// SPDX-License-Identifier: Apache-2.0
//! Correlations of K2 modulo p^n and their stationary-phase decomposition.
//!
//! Critical points of K2(a, beta; p^n) are y = s(beta/(2a)) u0^k, k = 0,1,2, so
//! phases carry u0^{2k}. Since k -> 2k mod 3 permutes {0,1,2}, the epsilon
//! vectors here are indexed directly by the squared powers u0^k.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::Serialize;

use crate::corrprime::{correlation_sum, ExactTable, ShiftMultiset};
use crate::cyclo::{Cyclo, EXACT_CAP};
use crate::error::{Error, Result};
use crate::expsum::{gauss_quadratic, k2_row_exact, Engine, SumValue};
use crate::modarith::{gcd, is_prime, is_unit_cube_mod_p, jacobi, mod_inv, mul_mod, reduce, valuation, BranchTable};
use crate::numeric::ComplexSum;

/// Largest p^n for exact stationary-phase enumeration.
pub const DECOMPOSITION_BUDGET: u64 = 50_000;

fn check_pp(p: u64, n: u32) -> Result<u64> {
    if p <= 3 || !is_prime(p) {
        return Err(Error::SmallPrime(p));
    }
    if n < 2 {
        return Err(Error::BadExponent(n));
    }
    p.checked_pow(n)
        .filter(|&q| q < (1 << 40))
        .ok_or_else(|| Error::OutOfRange(format!("{p}^{n} too large")))
}

/// S_{p^n}(h, h'; c, a) by direct double summation.
pub fn corr_sum_pp(a: i64, c: i64, shifts: &[i64], shifts_conj: &[i64], p: u64, n: u32, engine: Engine) -> Result<SumValue> {
    let q = check_pp(p, n)?;
    if shifts.len() + shifts_conj.len() == 0 {
        return Err(Error::EmptyCorrelation);
    }
    correlation_sum(a, c, &ShiftMultiset::new(shifts, shifts_conj, q), engine)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PpClass {
    CaseI,
    CaseII,
    CaseIII {
        bound_exponent: f64,
    },
    Nondegenerate {
        bound_exponent: f64,
        /// Whether the p-adic separation hypothesis of the large-n regime holds;
        /// None in the small-n regime where it is not needed.
        separation: Option<bool>,
    },
}

/// Case analysis of the prime-power correlation bound.
pub fn classify_pp(p: u64, n: u32, c: i64, shifts: &ShiftMultiset) -> Result<PpClass> {
    let q = check_pp(p, n)?;
    let s = shifts.with_modulus(q);
    let k = s.total() as f64;
    let nf = n as f64;
    let cr = reduce(c, q);
    let pn1 = q / p;
    if p % 3 == 2 && cr == 0 && s.balanced() {
        return Ok(PpClass::CaseI);
    }
    if p % 3 == 1 && cr == 0 && s.balanced_mod3() {
        return Ok(PpClass::CaseII);
    }
    if p % 3 == 1 && cr != 0 && cr % pn1 == 0 && s.balanced_mod3() {
        return Ok(PpClass::CaseIII { bound_exponent: (k + 2.0) * nf / 2.0 - 0.5 });
    }
    let kk = s.total() as u32;
    let threshold = (kk as u64).pow(3).saturating_mul(1u64 << kk.min(62));
    if (n as u64) <= threshold {
        let e = (k + 2.0) * nf / 2.0 - 1.0 / (nf * nf * (nf - 1.0) * (nf - 1.0));
        return Ok(PpClass::Nondegenerate { bound_exponent: e, separation: None });
    }
    let t = s.support().len() as f64;
    let rho = (if (p as f64) <= 3.0 * t / 2.0 - 1.0 { 1.0 } else { 0.0 })
        + ((20.0 * k.powi(3)).ln() / (p as f64).ln()).ceil();
    let floor_part = (nf / 2f64.powf(t)).floor();
    let allowed = 2.0 / (t * t) * (floor_part - rho);
    let supp = s.support();
    let mut ok = true;
    for i in 0..supp.len() {
        for j in i + 1..supp.len() {
            let v = valuation((supp[j] - supp[i]) as u128, p) as f64;
            if v > allowed {
                ok = false;
            }
        }
    }
    let e = (k + 2.0) * nf / 2.0 - nf * 2f64.powf(-k) + 1.0;
    Ok(PpClass::Nondegenerate { bound_exponent: e, separation: Some(ok) })
}

/// 4 a^2 (d + tau) is a unit cube mod p for every tau.
pub fn diamond_test(d: i64, a: i64, support: &[u64], p: u64) -> bool {
    let a2 = mul_mod(reduce(a, p), reduce(a, p), p);
    support
        .iter()
        .all(|&t| is_unit_cube_mod_p(mul_mod(4 * a2 % p, (reduce(d, p) + t) % p, p), p))
}

/// Context for one prime power: shifts mod p^n and the cube-root branch.
#[derive(Debug, Clone)]
pub struct PpContext {
    p: u64,
    n: u32,
    q: u64,
    shifts: ShiftMultiset,
    branch: BranchTable,
}

/// epsilon_tau for each tau in the context support (same order).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EpsVector {
    pub values: Vec<u64>,
}

impl EpsVector {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }
}

impl PpContext {
    pub fn new(p: u64, n: u32, shifts: &ShiftMultiset) -> Result<PpContext> {
        let q = check_pp(p, n)?;
        if q > DECOMPOSITION_BUDGET * 1000 {
            return Err(Error::BudgetExceeded(format!("p^n = {q}")));
        }
        let branch = BranchTable::new(p, (n / 2).max(1), n)?;
        Ok(PpContext { p, n, q, shifts: shifts.with_modulus(q), branch })
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn modulus(&self) -> u64 {
        self.q
    }
    pub fn shifts(&self) -> &ShiftMultiset {
        &self.shifts
    }
    pub fn branch(&self) -> &BranchTable {
        &self.branch
    }

    /// Support reduced mod p (deduplicated).
    pub fn support_mod_p(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.shifts.support().iter().map(|t| t % self.p).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn eps(&self, values: Vec<i64>) -> EpsVector {
        assert_eq!(values.len(), self.shifts.support().len());
        EpsVector { values: values.into_iter().map(|v| reduce(v, self.q)).collect() }
    }

    pub fn zero_eps(&self) -> EpsVector {
        EpsVector { values: vec![0; self.shifts.support().len()] }
    }

    /// Residues d mod p satisfying the diamond condition.
    pub fn diamond_classes(&self, a: i64) -> Vec<u64> {
        let t = self.support_mod_p();
        (0..self.p).filter(|&d| diamond_test(d as i64, a, &t, self.p)).collect()
    }

    fn powers_of_u0(&self) -> Vec<u64> {
        match self.branch.u0() {
            Some(u) => vec![1, u, mul_mod(u, u, self.q)],
            None => vec![1],
        }
    }

    /// Value -> multiplicity for sum of mu copies of +u0^k minus nu copies of u0^k'.
    fn local_distribution(&self, mu: u32, nu: u32) -> Result<HashMap<u64, u64>> {
        let pw = self.powers_of_u0();
        let count = (pw.len() as u64).checked_pow(mu + nu).filter(|&c| c <= 1 << 22);
        if count.is_none() {
            return Err(Error::BudgetExceeded(format!("{} index tuples", pw.len())));
        }
        let q = self.q;
        let mut dist: HashMap<u64, u64> = HashMap::from([(0, 1)]);
        for i in 0..mu + nu {
            let mut next = HashMap::new();
            for (&v, &c) in &dist {
                for &w in &pw {
                    let nv = if i < mu { (v + w) % q } else { (v + q - w) % q };
                    *next.entry(nv).or_insert(0) += c;
                }
            }
            dist = next;
        }
        Ok(dist)
    }

    /// Number of index tuples (j, j') realizing eps.
    pub fn phi_eps(&self, eps: &EpsVector) -> Result<u64> {
        let mut total = 1u64;
        for (i, &e) in eps.values.iter().enumerate() {
            let d = self.local_distribution(self.shifts.mu()[i], self.shifts.nu()[i])?;
            total *= d.get(&e).copied().unwrap_or(0);
            if total == 0 {
                break;
            }
        }
        Ok(total)
    }

    /// Every eps with phi(eps) > 0, ascending, with its phi.
    pub fn eps_distribution(&self) -> Result<Vec<(EpsVector, u64)>> {
        let locals: Vec<BTreeMap<u64, u64>> = (0..self.shifts.support().len())
            .map(|i| {
                self.local_distribution(self.shifts.mu()[i], self.shifts.nu()[i])
                    .map(|d| d.into_iter().collect())
            })
            .collect::<Result<_>>()?;
        let mut out = vec![(Vec::new(), 1u64)];
        for local in &locals {
            let mut next = Vec::with_capacity(out.len() * local.len());
            for (prefix, c) in &out {
                for (&v, &m) in local {
                    let mut pv = prefix.clone();
                    pv.push(v);
                    next.push((pv, c * m));
                }
            }
            out = next;
        }
        Ok(out.into_iter().map(|(v, c)| (EpsVector { values: v }, c)).collect())
    }

    /// f_{T,eps}(b) = b c + 3a sum_tau eps_tau s((2a)^{-1}(b+tau))^2 mod p^n.
    pub fn f_t_eps(&self, b: i64, eps: &EpsVector, a: i64, c: i64) -> Result<u64> {
        let q = self.q;
        let ar = reduce(a, q);
        let br = reduce(b, q);
        let inv2a = mod_inv((2 * ar) as i64 % q as i64, q).map_err(|_| Error::NotAUnit { x: a, modulus: q })?;
        let mut acc = mul_mod(br, reduce(c, q), q);
        for (i, &t) in self.shifts.support().iter().enumerate() {
            let r = mul_mod(inv2a, (br + t) % q, q);
            let s = self.branch.s(r).ok_or(Error::OutsideDiamond(br))?;
            let term = mul_mod(mul_mod(3 * ar % q, eps.values[i], q), mul_mod(s, s, q), q);
            acc = (acc + term) % q;
        }
        Ok(acc)
    }

    fn value_from_group_ring(&self, gr: &[i64], engine: Engine) -> Result<SumValue> {
        match engine {
            Engine::Exact => {
                if self.q > EXACT_CAP * 5 {
                    return Err(Error::ExactEngineOverflow { order: self.q, cap: EXACT_CAP * 5 });
                }
                Ok(SumValue::from_exact(Cyclo::from_group_ring(self.q, gr)))
            }
            Engine::Float => {
                let mut acc = ComplexSum::default();
                for (k, &c) in gr.iter().enumerate() {
                    if c != 0 {
                        acc.add(crate::cyclo::root_exact_angle(k as u64, self.q) * c as f64);
                    }
                }
                Ok(SumValue::float(acc.value()))
            }
        }
    }

    /// W(eps) = sum over diamond d of sum_{b = d mod p} e_{p^n}(f_{T,eps}(b)).
    fn diamond_phase_sum(&self, eps: &EpsVector, a: i64, c: i64, engine: Engine) -> Result<SumValue> {
        let mut gr = vec![0i64; self.q as usize];
        for d in self.diamond_classes(a) {
            let mut b = d;
            while b < self.q {
                gr[self.f_t_eps(b as i64, eps, a, c)? as usize] += 1;
                b += self.p;
            }
        }
        self.value_from_group_ring(&gr, engine)
    }

    /// Contribution of eps = 0: phi(0) p^{(N+M)n/2} W(0).
    /// Exact only when (N+M) n is even.
    pub fn eps_zero_term(&self, a: i64, c: i64, engine: Engine) -> Result<SumValue> {
        let zero = self.zero_eps();
        let phi0 = self.phi_eps(&zero)?;
        let w = self.diamond_phase_sum(&zero, a, c, engine)?;
        let e = self.shifts.total() as u32 * self.n;
        if phi0 == 0 {
            return Ok(match engine {
                Engine::Exact => SumValue::from_exact(Cyclo::zero(self.q)),
                Engine::Float => SumValue::real(0.0),
            });
        }
        if e % 2 == 0 {
            let scale = (phi0 as i64)
                .checked_mul((self.p as i64).checked_pow(e / 2).ok_or_else(|| Error::OutOfRange("power".into()))?)
                .ok_or_else(|| Error::OutOfRange("power".into()))?;
            Ok(w.scale(scale))
        } else {
            Ok(SumValue::float(w.approx * phi0 as f64 * (self.p as f64).powf(e as f64 / 2.0)))
        }
    }

    /// W(eps) for eps != 0.
    pub fn stationary_sum_diamond(&self, eps: &EpsVector, a: i64, c: i64, engine: Engine) -> Result<SumValue> {
        if eps.is_zero() {
            return Err(Error::ZeroEps);
        }
        self.diamond_phase_sum(eps, a, c, engine)
    }

    /// p^{n/2} eps_{p,n} as an exact element: p^{n/2} or p^{(n-1)/2} G_p.
    pub fn gauss_factor(&self) -> Cyclo {
        let half = self.p.pow(self.n / 2) as i64;
        if self.n % 2 == 0 {
            Cyclo::from_int(self.q, half)
        } else {
            gauss_quadratic(self.p, Engine::Exact).unwrap().exact.unwrap().lift(self.q).scale(half)
        }
    }

    /// (3a/p^n)^{N+M} eps_{p,n}^N conj(eps_{p,n})^M.
    pub fn unimodular_prefactor(&self, a: i64) -> Complex64 {
        let j = jacobi(reduce(3 * a, self.q) as i64, self.q).unwrap() as f64;
        let (nn, mm) = (self.shifts.n() as i32, self.shifts.m() as i32);
        let eps = if self.n % 2 == 0 || self.p % 4 == 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        eps.powi(nn) * eps.conj().powi(mm) * j.powi(nn + mm)
    }

    /// Both sides of the decomposition of the correlation sum.
    pub fn decomposition(&self, a: i64, c: i64, engine: Engine) -> Result<Decomposition> {
        if self.q > DECOMPOSITION_BUDGET {
            return Err(Error::BudgetExceeded(format!("p^n = {} above decomposition budget", self.q)));
        }
        let direct = correlation_sum(a, c, &self.shifts, engine)?;
        let dist = self.eps_distribution()?;
        let k = self.shifts.total() as i32;
        let scale = (self.p as f64).powf(k as f64 * self.n as f64 / 2.0);
        let zero_term = self.eps_zero_term(a, c, Engine::Float)?;
        let mut float_sum = zero_term.approx;
        let mut exact_inner = match engine {
            Engine::Exact => Some(Cyclo::zero(self.q)),
            Engine::Float => None,
        };
        let mut terms = Vec::new();
        for (eps, phi) in dist {
            let w = self.diamond_phase_sum(&eps, a, c, engine)?;
            if let Some(acc) = exact_inner.as_mut() {
                *acc = acc.add(&w.exact.clone().unwrap().scale(phi as i64));
            }
            if !eps.is_zero() {
                float_sum += w.approx * phi as f64 * scale;
            }
            terms.push(EpsTerm { eps, phi, value: w.approx });
        }
        let float_value = float_sum * self.unimodular_prefactor(a);
        let reconstructed = match exact_inner {
            Some(inner) => {
                let j = jacobi(reduce(3 * a, self.q) as i64, self.q).unwrap() as i64;
                let g = self.gauss_factor();
                let mut v = inner.scale(j.pow(k as u32));
                for _ in 0..self.shifts.n() {
                    v = v.mul(&g);
                }
                let gc = g.conj();
                for _ in 0..self.shifts.m() {
                    v = v.mul(&gc);
                }
                SumValue::from_exact(v)
            }
            None => SumValue::float(float_value),
        };
        Ok(Decomposition { direct, reconstructed, float_reconstruction: float_value, eps_zero: zero_term, terms })
    }

    /// Partial correlation over the class b = d mod p, exact.
    pub fn class_partial_sum(&self, a: i64, c: i64, d: u64) -> Result<Cyclo> {
        if self.q > EXACT_CAP * 5 {
            return Err(Error::ExactEngineOverflow { order: self.q, cap: EXACT_CAP * 5 });
        }
        let table = ExactTable::new(k2_row_exact(a, self.q)?);
        let h: Vec<u64> = self.shifts.h().iter().map(|&x| reduce(x, self.q)).collect();
        let hp: Vec<u64> = self.shifts.hprime().iter().map(|&x| reduce(x, self.q)).collect();
        let bs = (0..self.q / self.p).map(move |t| d % self.p + t * self.p);
        Ok(table.correlation_over(reduce(c, self.q), &h, &hp, bs))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsTerm {
    pub eps: EpsVector,
    pub phi: u64,
    #[serde(skip)]
    pub value: Complex64,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub direct: SumValue,
    /// Exact reconstruction (exact engine) or the floating one.
    pub reconstructed: SumValue,
    /// Prefactor times (eps_zero_term + sum phi p^{(N+M)n/2} W(eps)), floating.
    pub float_reconstruction: Complex64,
    pub eps_zero: SumValue,
    pub terms: Vec<EpsTerm>,
}

/// sum over d mod p with the diamond condition of e_p(d C).
pub fn diamond_exp_sum(cc: i64, a: i64, support_mod_p: &[u64], p: u64, engine: Engine) -> Result<SumValue> {
    if p <= 3 || !is_prime(p) {
        return Err(Error::SmallPrime(p));
    }
    let mut gr = vec![0i64; p as usize];
    let cr = reduce(cc, p);
    for d in 0..p {
        if diamond_test(d as i64, a, support_mod_p, p) {
            gr[mul_mod(d, cr, p) as usize] += 1;
        }
    }
    match engine {
        Engine::Exact => Ok(SumValue::from_exact(Cyclo::from_group_ring(p, &gr))),
        Engine::Float => {
            let mut acc = ComplexSum::default();
            for (k, &c) in gr.iter().enumerate() {
                acc.add(crate::cyclo::root_exact_angle(k as u64, p) * c as f64);
            }
            Ok(SumValue::float(acc.value()))
        }
    }
}

/// Number of diamond d mod p with sum_tau eps_tau s((2a)^{-1}(d+tau))^{2-3j} = w mod p.
pub fn ricroy_count(w: i64, j: u32, epsred: &[i64], support_mod_p: &[u64], a: i64, p: u64) -> Result<u64> {
    if p <= 3 || !is_prime(p) {
        return Err(Error::SmallPrime(p));
    }
    if !(1..=2).contains(&j) {
        return Err(Error::InvalidArgument(format!("j must be 1 or 2, got {j}")));
    }
    assert_eq!(epsred.len(), support_mod_p.len());
    if epsred.iter().all(|&e| reduce(e, p) == 0) {
        return Err(Error::ZeroEps);
    }
    let ar = reduce(a, p);
    if gcd(ar, p) != 1 {
        return Err(Error::NotAUnit { x: a, modulus: p });
    }
    let branch = BranchTable::new(p, 1, 1)?;
    let inv2a = mod_inv((2 * ar) as i64, p).unwrap();
    let wr = reduce(w, p);
    let mut count = 0;
    for d in 0..p {
        if !diamond_test(d as i64, a, support_mod_p, p) {
            continue;
        }
        let mut acc = 0u64;
        for (&t, &e) in support_mod_p.iter().zip(epsred) {
            let s = branch.s_mod_p(mul_mod(inv2a, (d + t) % p, p)).unwrap();
            let sinv = mod_inv(s as i64, p).unwrap();
            // s^{2-3j}: j = 1 gives s^{-1}, j = 2 gives s^{-4}.
            let pw = if j == 1 { sinv } else { crate::modarith::pow_mod(sinv, 4, p) };
            acc = (acc + mul_mod(reduce(e, p), pw, p)) % p;
        }
        if acc == wr {
            count += 1;
        }
    }
    Ok(count)
}

/// Number of solutions of sum x_i^j = sum y_i^j (1 <= j <= k), variables in [1, P].
pub fn vinogradov_j(s: u32, k: u32, pp: u64) -> Result<u64> {
    if s == 0 || k == 0 || pp == 0 {
        return Err(Error::InvalidArgument("s, k, P must be positive".into()));
    }
    if (2 * s) as f64 * (pp as f64).log2() > 40.0 {
        return Err(Error::BudgetExceeded(format!("2s log2 P > 40 for s={s}, P={pp}")));
    }
    let mut counts: HashMap<Vec<u128>, u64> = HashMap::new();
    let mut x = vec![1u64; s as usize];
    loop {
        let key: Vec<u128> = (1..=k)
            .map(|j| x.iter().map(|&v| (v as u128).pow(j)).sum())
            .collect();
        *counts.entry(key).or_insert(0) += 1;
        let mut i = 0;
        loop {
            if i == x.len() {
                return Ok(counts.values().map(|&c| c * c).sum());
            }
            if x[i] < pp {
                x[i] += 1;
                break;
            }
            x[i] = 1;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corr_sum_pp_examples() {
        let v = corr_sum_pp(1, 0, &[0], &[0], 5, 2, Engine::Exact).unwrap();
        assert_eq!(v.exact.unwrap().as_integer(), Some(500));
        let v = corr_sum_pp(1, 0, &[0], &[], 5, 2, Engine::Exact).unwrap();
        assert!(v.exact.unwrap().is_zero());
        let v = corr_sum_pp(1, 1, &[0], &[], 7, 2, Engine::Exact).unwrap();
        assert_eq!(v.exact.unwrap(), Cyclo::root(49, 1).scale(49));
        assert_eq!(corr_sum_pp(1, 0, &[0], &[], 3, 2, Engine::Float).unwrap_err(), Error::SmallPrime(3));
        assert_eq!(corr_sum_pp(1, 0, &[0], &[], 5, 1, Engine::Float).unwrap_err(), Error::BadExponent(1));
    }

    #[test]
    fn classify_pp_examples() {
        let s = ShiftMultiset::new(&[0], &[0], 25);
        assert_eq!(classify_pp(5, 2, 0, &s), Ok(PpClass::CaseI));
        let s3 = ShiftMultiset::new(&[0, 0, 0], &[], 49);
        match classify_pp(7, 2, 7, &s3).unwrap() {
            PpClass::CaseIII { bound_exponent } => assert!((bound_exponent - (5.0 * 2.0 / 2.0 - 0.5)).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(matches!(classify_pp(7, 2, 3, &s3).unwrap(), PpClass::Nondegenerate { separation: None, .. }));
        assert_eq!(classify_pp(7, 2, 0, &s3), Ok(PpClass::CaseII));
    }

    #[test]
    fn diamond_examples() {
        for d in 1..5 {
            assert!(diamond_test(d, 1, &[0], 5));
        }
        assert!(!diamond_test(0, 1, &[0], 5));
        assert!(diamond_test(2, 1, &[0], 7));
        assert!(!diamond_test(1, 1, &[0], 7));
    }

    #[test]
    fn phi_examples() {
        let ctx = PpContext::new(5, 2, &ShiftMultiset::new(&[0], &[0], 25)).unwrap();
        assert_eq!(ctx.phi_eps(&ctx.zero_eps()), Ok(1));
        let ctx = PpContext::new(7, 2, &ShiftMultiset::new(&[0], &[], 49)).unwrap();
        assert_eq!(ctx.phi_eps(&ctx.eps(vec![1])), Ok(1));
        let ctx = PpContext::new(7, 2, &ShiftMultiset::new(&[0, 1], &[2], 49)).unwrap();
        let total: u64 = ctx.eps_distribution().unwrap().iter().map(|(_, c)| c).sum();
        assert_eq!(total, 27);
    }

    #[test]
    fn f_t_eps_examples() {
        let ctx = PpContext::new(5, 2, &ShiftMultiset::new(&[0], &[], 25)).unwrap();
        assert_eq!(ctx.f_t_eps(7, &ctx.zero_eps(), 1, 3), Ok(21));
        assert_eq!(ctx.f_t_eps(2, &ctx.eps(vec![1]), 1, 0), Ok(3));
        assert_eq!(ctx.f_t_eps(5, &ctx.eps(vec![1]), 1, 0), Err(Error::OutsideDiamond(5)));
    }

    #[test]
    fn eps_zero_examples() {
        let ctx = PpContext::new(5, 2, &ShiftMultiset::new(&[0], &[0], 25)).unwrap();
        assert!(ctx.eps_zero_term(1, 1, Engine::Exact).unwrap().exact.unwrap().is_zero());
        assert_eq!(ctx.eps_zero_term(1, 0, Engine::Exact).unwrap().exact.unwrap().as_integer(), Some(500));
        let ctx = PpContext::new(7, 2, &ShiftMultiset::new(&[0], &[0], 49)).unwrap();
        assert_eq!(ctx.eps_zero_term(1, 0, Engine::Exact).unwrap().exact.unwrap().as_integer(), Some(2058));
    }

    #[test]
    fn diamond_exp_sum_examples() {
        let v = diamond_exp_sum(0, 1, &[0], 5, Engine::Exact).unwrap();
        assert_eq!(v.exact.unwrap().as_integer(), Some(4));
        let v = diamond_exp_sum(1, 1, &[0], 5, Engine::Exact).unwrap();
        assert_eq!(v.exact.unwrap().as_integer(), Some(-1));
        let v = diamond_exp_sum(0, 1, &[0], 7, Engine::Exact).unwrap();
        assert_eq!(v.exact.unwrap().as_integer(), Some(2));
    }

    #[test]
    fn stationary_examples() {
        let ctx = PpContext::new(5, 2, &ShiftMultiset::new(&[0], &[], 25)).unwrap();
        assert_eq!(ctx.stationary_sum_diamond(&ctx.zero_eps(), 1, 0, Engine::Exact).unwrap_err(), Error::ZeroEps);
        let v = ctx.stationary_sum_diamond(&ctx.eps(vec![1]), 1, 0, Engine::Exact).unwrap();
        // Oracle: 20 terms b with 5 not dividing b, phase 3 s(b/2)^2.
        let mut gr = vec![0i64; 25];
        for b in 1..25u64 {
            if b % 5 == 0 {
                continue;
            }
            let r = b * 13 % 25;
            let s = (1..25u64).find(|y| y * y * y % 25 == r && y % 5 == (1..5).find(|z| z * z * z % 5 == r % 5).unwrap()).unwrap();
            gr[(3 * s * s % 25) as usize] += 1;
        }
        assert_eq!(v.exact.unwrap(), Cyclo::from_group_ring(25, &gr));
        assert!(v.approx.norm() <= 5.0 * 4.0 + 1e-9);
    }

    #[test]
    fn ricroy_examples() {
        assert_eq!(ricroy_count(1, 1, &[1], &[0], 1, 7), Ok(1));
        assert_eq!(ricroy_count(0, 1, &[1], &[0], 1, 7), Ok(0));
        assert_eq!(ricroy_count(1, 1, &[0], &[0], 1, 7), Err(Error::ZeroEps));
    }

    #[test]
    fn vinogradov_examples() {
        assert_eq!(vinogradov_j(1, 1, 3), Ok(3));
        assert_eq!(vinogradov_j(2, 2, 2), Ok(6));
        assert_eq!(vinogradov_j(2, 2, 3), Ok(15));
        assert!(matches!(vinogradov_j(6, 2, 32), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn decomposition_small_cases() {
        for (p, n, h, hp, a, c) in [
            (5u64, 2u32, vec![0i64], vec![0i64], 1i64, 0i64),
            (7, 2, vec![0, 3], vec![], 2, 5),
            (7, 3, vec![1], vec![4], 3, 7),
            (5, 3, vec![0], vec![2], 1, 10),
            (13, 2, vec![0], vec![1], 5, 0),
            (11, 3, vec![2], vec![], 1, 1),
        ] {
            let q = p.pow(n);
            let ctx = PpContext::new(p, n, &ShiftMultiset::new(&h, &hp, q)).unwrap();
            let d = ctx.decomposition(a, c, Engine::Exact).unwrap();
            assert_eq!(d.direct.exact_eq(&d.reconstructed), Some(true), "p={p} n={n} h={h:?} hp={hp:?}");
            assert!((d.direct.approx - d.float_reconstruction).norm() < 1e-6 * (1.0 + d.direct.approx.norm()));
        }
    }
}
