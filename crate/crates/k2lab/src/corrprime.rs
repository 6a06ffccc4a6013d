// SPDX-License-Identifier: Apache-2.0
//! Shifted correlations of K2 modulo a prime and their degeneracy classifier.

use num_complex::Complex64;
use serde::Serialize;

use crate::cyclo::{basis, Cyclo, EXACT_CAP};
use crate::error::{Error, Result};
use crate::expsum::{k2_row, k2_row_exact, Engine, SumValue};
use crate::modarith::{gcd, is_prime, reduce};
use crate::numeric::ComplexSum;

/// Shifts h (plain factors) and h' (conjugated factors) reduced mod a context modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftMultiset {
    h: Vec<i64>,
    hprime: Vec<i64>,
    modulus: u64,
    support: Vec<u64>,
    mu: Vec<u32>,
    nu: Vec<u32>,
}

impl ShiftMultiset {
    pub fn new(h: &[i64], hprime: &[i64], modulus: u64) -> ShiftMultiset {
        assert!(modulus >= 1);
        let mut support: Vec<u64> = h.iter().chain(hprime).map(|&x| reduce(x, modulus)).collect();
        support.sort_unstable();
        support.dedup();
        let count = |xs: &[i64], t: u64| xs.iter().filter(|&&x| reduce(x, modulus) == t).count() as u32;
        let mu = support.iter().map(|&t| count(h, t)).collect();
        let nu = support.iter().map(|&t| count(hprime, t)).collect();
        ShiftMultiset { h: h.to_vec(), hprime: hprime.to_vec(), modulus, support, mu, nu }
    }

    /// Same raw shifts in a different modulus context.
    pub fn with_modulus(&self, modulus: u64) -> ShiftMultiset {
        ShiftMultiset::new(&self.h, &self.hprime, modulus)
    }

    pub fn h(&self) -> &[i64] {
        &self.h
    }
    pub fn hprime(&self) -> &[i64] {
        &self.hprime
    }
    pub fn n(&self) -> usize {
        self.h.len()
    }
    pub fn m(&self) -> usize {
        self.hprime.len()
    }
    pub fn total(&self) -> usize {
        self.h.len() + self.hprime.len()
    }
    pub fn modulus(&self) -> u64 {
        self.modulus
    }
    /// Distinct residues tau, ascending.
    pub fn support(&self) -> &[u64] {
        &self.support
    }
    pub fn mu(&self) -> &[u32] {
        &self.mu
    }
    pub fn nu(&self) -> &[u32] {
        &self.nu
    }

    /// 3 | mu(tau) - nu(tau) for every tau.
    pub fn balanced_mod3(&self) -> bool {
        self.mu.iter().zip(&self.nu).all(|(&a, &b)| (a as i64 - b as i64) % 3 == 0)
    }

    /// mu(tau) = nu(tau) for every tau.
    pub fn balanced(&self) -> bool {
        self.mu == self.nu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PrimeClass {
    Degenerate,
    Nondegenerate,
}

fn check_prime(p: u64) -> Result<()> {
    if p <= 3 || !is_prime(p) {
        return Err(Error::SmallPrime(p));
    }
    Ok(())
}

/// Degenerate iff t = 0 and 3 | mu(tau) - nu(tau) for all tau.
pub fn classify_prime(t: i64, shifts: &ShiftMultiset) -> Result<PrimeClass> {
    check_prime(shifts.modulus())?;
    if shifts.total() == 0 {
        return Err(Error::EmptyCorrelation);
    }
    if reduce(t, shifts.modulus()) == 0 && shifts.balanced_mod3() {
        Ok(PrimeClass::Degenerate)
    } else {
        Ok(PrimeClass::Nondegenerate)
    }
}

/// sum_b e_q(c b) prod K2(a, b+h_i; q) prod conj K2(a, b+h'_j; q), by direct
/// summation over b with a cached row of K2(a, . ; q).
pub fn correlation_sum(a: i64, c: i64, shifts: &ShiftMultiset, engine: Engine) -> Result<SumValue> {
    let q = shifts.modulus();
    if gcd(reduce(a, q), q) != 1 {
        return Err(Error::NotAUnit { x: a, modulus: q });
    }
    let cr = reduce(c, q);
    let h: Vec<u64> = shifts.h().iter().map(|&x| reduce(x, q)).collect();
    let hp: Vec<u64> = shifts.hprime().iter().map(|&x| reduce(x, q)).collect();
    match engine {
        Engine::Float => {
            let row = k2_row(a, q)?;
            let mut acc = ComplexSum::default();
            for b in 0..q {
                let mut z = crate::cyclo::root_exact_angle(crate::modarith::mul_mod(cr, b, q), q);
                for &s in &h {
                    z *= row[((b + s) % q) as usize];
                }
                for &s in &hp {
                    z *= row[((b + s) % q) as usize].conj();
                }
                acc.add(z);
            }
            Ok(SumValue::float(acc.value()))
        }
        Engine::Exact => {
            if q > EXACT_CAP {
                return Err(Error::ExactEngineOverflow { order: q, cap: EXACT_CAP });
            }
            let row = k2_row_exact(a, q)?;
            let table = ExactTable::new(row);
            Ok(SumValue::from_exact(table.correlation(cr, &h, &hp)))
        }
    }
}

/// K2 row as sparse canonical terms, plain and conjugated.
pub(crate) struct ExactTable {
    q: u64,
    plain: Vec<Vec<(u64, i64)>>,
    conj: Vec<Vec<(u64, i64)>>,
}

impl ExactTable {
    pub(crate) fn new(row: Vec<Cyclo>) -> ExactTable {
        let q = row.len() as u64;
        let plain: Vec<Vec<(u64, i64)>> = row.iter().map(|c| c.terms()).collect();
        let conj = row.iter().map(|c| c.conj().terms()).collect();
        ExactTable { q, plain, conj }
    }

    /// Sparse terms of factor list `fs` (row index, conjugated?) multiplied out.
    fn product_terms(&self, fs: &[(u64, bool)]) -> Option<Vec<(u64, i64)>> {
        let q = self.q;
        let get = |&(i, cj): &(u64, bool)| if cj { &self.conj[i as usize] } else { &self.plain[i as usize] };
        let mut acc: Vec<(u64, i64)> = get(&fs[0]).clone();
        if acc.is_empty() {
            return None;
        }
        let b = basis(q);
        for f in &fs[1..] {
            let other = get(f);
            if other.is_empty() {
                return None;
            }
            let mut gr = vec![0i64; q as usize];
            for &(k1, c1) in &acc {
                for &(k2, c2) in other {
                    gr[((k1 + k2) % q) as usize] += c1 * c2;
                }
            }
            acc = Cyclo::from_group_ring_with(b.clone(), &gr).terms();
            if acc.is_empty() {
                return None;
            }
        }
        Some(acc)
    }

    /// sum over b restricted to `bs` of e_q(c b) times the product, exact.
    pub(crate) fn correlation_over(&self, c: u64, h: &[u64], hp: &[u64], bs: impl Iterator<Item = u64>) -> Cyclo {
        let q = self.q;
        let mut gr = vec![0i64; q as usize];
        let mut fs: Vec<(u64, bool)> = Vec::with_capacity(h.len() + hp.len());
        for b in bs {
            fs.clear();
            fs.extend(h.iter().map(|&s| ((b + s) % q, false)));
            fs.extend(hp.iter().map(|&s| ((b + s) % q, true)));
            let shift = crate::modarith::mul_mod(c, b, q);
            if fs.is_empty() {
                gr[shift as usize] += 1;
                continue;
            }
            let last = fs.pop().unwrap();
            let head = if fs.is_empty() {
                Some(vec![(0u64, 1i64)])
            } else {
                self.product_terms(&fs)
            };
            let Some(head) = head else { continue };
            let tail = if last.1 { &self.conj[last.0 as usize] } else { &self.plain[last.0 as usize] };
            for &(k1, c1) in &head {
                let base = (k1 + shift) % q;
                for &(k2, c2) in tail {
                    gr[((base + k2) % q) as usize] += c1 * c2;
                }
            }
        }
        Cyclo::from_group_ring(q, &gr)
    }

    pub(crate) fn correlation(&self, c: u64, h: &[u64], hp: &[u64]) -> Cyclo {
        self.correlation_over(c, h, hp, 0..self.q)
    }
}

/// Correlation sum modulo the prime p = shifts.modulus() with character e_p(t B).
pub fn corr_sum_prime(a: i64, t: i64, shifts: &ShiftMultiset, engine: Engine) -> Result<SumValue> {
    check_prime(shifts.modulus())?;
    correlation_sum(a, t, shifts, engine)
}

/// |S| / p^{(N+M+1)/2} (nondegenerate) or |S| / p^{(N+M)/2+1} (degenerate).
pub fn corr_ratio_prime(a: i64, t: i64, shifts: &ShiftMultiset) -> Result<f64> {
    let class = classify_prime(t, shifts)?;
    let s = corr_sum_prime(a, t, shifts, Engine::Float)?;
    Ok(normalized_ratio(s.approx, class, shifts.modulus(), shifts.total()))
}

pub fn normalized_ratio(s: Complex64, class: PrimeClass, p: u64, k: usize) -> f64 {
    let p = p as f64;
    let k = k as f64;
    match class {
        PrimeClass::Nondegenerate => s.norm() / p.powf((k + 1.0) / 2.0),
        PrimeClass::Degenerate => s.norm() / p.powf(k / 2.0 + 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_multiset_counts() {
        let s = ShiftMultiset::new(&[0, 5, 7], &[2, -5], 5);
        assert_eq!(s.support(), &[0, 2]);
        assert_eq!(s.mu(), &[2, 1]);
        assert_eq!(s.nu(), &[1, 1]);
        assert_eq!(s.n(), 3);
        assert_eq!(s.m(), 2);
    }

    #[test]
    fn classify_examples() {
        let any = ShiftMultiset::new(&[0, 1], &[3], 11);
        assert_eq!(classify_prime(1, &any), Ok(PrimeClass::Nondegenerate));
        let three = ShiftMultiset::new(&[0, 0, 0], &[], 11);
        assert_eq!(classify_prime(0, &three), Ok(PrimeClass::Degenerate));
        let two_one = ShiftMultiset::new(&[0, 0], &[0], 11);
        assert_eq!(classify_prime(0, &two_one), Ok(PrimeClass::Nondegenerate));
        let empty = ShiftMultiset::new(&[], &[], 11);
        assert_eq!(classify_prime(0, &empty), Err(Error::EmptyCorrelation));
    }

    #[test]
    fn corr_sum_examples() {
        let s = ShiftMultiset::new(&[0], &[0], 5);
        let v = corr_sum_prime(1, 0, &s, Engine::Exact).unwrap();
        assert_eq!(v.exact.unwrap().as_integer(), Some(20));

        let s1 = ShiftMultiset::new(&[0], &[], 5);
        let v = corr_sum_prime(1, 0, &s1, Engine::Exact).unwrap();
        assert!(v.exact.unwrap().is_zero());

        let v = corr_sum_prime(1, 1, &s1, Engine::Exact).unwrap();
        assert_eq!(v.exact.unwrap(), Cyclo::root(5, 1).scale(5));
    }

    #[test]
    fn ratio_examples() {
        for p in [5u64, 7, 11, 13] {
            let deg = ShiftMultiset::new(&[0], &[0], p);
            let r = corr_ratio_prime(1, 0, &deg).unwrap();
            assert!((r - (p - 1) as f64 / p as f64).abs() < 1e-12);
        }
        let s1 = ShiftMultiset::new(&[0], &[], 5);
        assert!(corr_ratio_prime(1, 0, &s1).unwrap().abs() < 1e-12);
        assert!((corr_ratio_prime(1, 1, &s1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn float_and_exact_agree() {
        let s = ShiftMultiset::new(&[0, 3], &[1], 13);
        let e = corr_sum_prime(2, 4, &s, Engine::Exact).unwrap();
        let f = corr_sum_prime(2, 4, &s, Engine::Float).unwrap();
        assert!(e.abs_diff(&f) < 1e-8);
    }
}
