// SPDX-License-Identifier: Apache-2.0
//! Exact arithmetic in Z[zeta_Q].
//!
//! Elements are stored in the tensor basis coming from Q = q_1 ... q_r
//! (prime powers): zeta_Q^k = prod_i zeta_{q_i}^{e_i} with
//! e_i = k * (Q/q_i)^{-1} mod q_i and zeta_{q_i} = zeta_Q^{Q/q_i}.
//! A vector is canonical when every e_i < phi(q_i); the products of those
//! powers form a Z-basis, so canonical vectors compare by equality.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::modarith::{factorize, mod_inv};

/// Largest order the exact engine accepts.
pub const EXACT_CAP: u64 = 10_000;

#[derive(Debug)]
struct Axis {
    p: usize,
    q: usize,
    phi: usize,
    stride: usize,
}

/// Index tables for one order Q.
#[derive(Debug)]
pub struct Basis {
    order: usize,
    axes: Vec<Axis>,
    to_tensor: Vec<u32>,
    from_tensor: Vec<u32>,
    roots: Vec<Complex64>,
}

impl Basis {
    fn build(order: u64) -> Basis {
        let q = order as usize;
        let fm = factorize(order);
        let pps: Vec<(usize, usize)> = fm
            .factors()
            .iter()
            .map(|&(p, e)| (p as usize, p.pow(e) as usize))
            .collect();
        let mut axes = Vec::with_capacity(pps.len());
        let mut stride = q;
        for &(p, qi) in &pps {
            stride /= qi;
            axes.push(Axis { p, q: qi, phi: qi - qi / p, stride });
        }
        let cs: Vec<usize> = pps
            .iter()
            .map(|&(_, qi)| mod_inv((q / qi) as i64, qi as u64).unwrap() as usize)
            .collect();
        let mut to_tensor = vec![0u32; q];
        let mut from_tensor = vec![0u32; q];
        for k in 0..q {
            let mut t = 0;
            for (ax, &c) in axes.iter().zip(&cs) {
                t += (k * c % ax.q) * ax.stride;
            }
            to_tensor[k] = t as u32;
            from_tensor[t] = k as u32;
        }
        let roots = (0..q).map(|k| root_exact_angle(k as u64, order)).collect();
        Basis { order: q, axes, to_tensor, from_tensor, roots }
    }

    pub fn order(&self) -> u64 {
        self.order as u64
    }

    /// Floating value of zeta_Q^k.
    pub fn root(&self, k: usize) -> Complex64 {
        self.roots[k % self.order]
    }

    /// Reduce a tensor-layout vector to canonical form in place.
    fn reduce(&self, v: &mut [i64]) {
        for ax in &self.axes {
            if ax.phi == ax.q {
                continue;
            }
            let step = ax.q / ax.p;
            let block = ax.q * ax.stride;
            for hi in (0..self.order).step_by(block) {
                for e in ax.phi..ax.q {
                    for lo in 0..ax.stride {
                        let t = hi + e * ax.stride + lo;
                        let c = v[t];
                        if c == 0 {
                            continue;
                        }
                        v[t] = 0;
                        let base = hi + (e - ax.phi) * ax.stride + lo;
                        for j in 0..ax.p - 1 {
                            v[base + j * step * ax.stride] -= c;
                        }
                    }
                }
            }
        }
    }
}

/// cos/sin of 2 pi k / q with the angle reduced to the first octant for accuracy.
pub fn root_exact_angle(k: u64, q: u64) -> Complex64 {
    let k = k % q;
    // Use the symmetry k -> q - k to keep angles below pi.
    let (kk, neg) = if 2 * k > q { (q - k, true) } else { (k, false) };
    let theta = std::f64::consts::TAU * (kk as f64) / (q as f64);
    let z = Complex64::new(theta.cos(), theta.sin());
    if neg {
        z.conj()
    } else {
        z
    }
}

fn basis_cache() -> &'static Mutex<HashMap<u64, Arc<Basis>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Basis>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared basis tables for the given order.
pub fn basis(order: u64) -> Arc<Basis> {
    assert!(order >= 1);
    let mut cache = basis_cache().lock().unwrap();
    cache
        .entry(order)
        .or_insert_with(|| Arc::new(Basis::build(order)))
        .clone()
}

/// A canonical element of Z[zeta_Q].
#[derive(Clone)]
pub struct Cyclo {
    basis: Arc<Basis>,
    coeffs: Vec<i64>,
}

impl std::fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Cyclo(order={}, terms={:?})", self.order(), self.terms())
    }
}

impl PartialEq for Cyclo {
    fn eq(&self, other: &Self) -> bool {
        if self.order() == other.order() {
            return self.coeffs == other.coeffs;
        }
        let l = lcm(self.order(), other.order());
        self.lift(l).coeffs == other.lift(l).coeffs
    }
}

impl Eq for Cyclo {}

fn lcm(a: u64, b: u64) -> u64 {
    a / crate::modarith::gcd(a, b) * b
}

impl Cyclo {
    pub fn zero(order: u64) -> Cyclo {
        Cyclo { basis: basis(order), coeffs: vec![0; order as usize] }
    }

    pub fn from_int(order: u64, c: i64) -> Cyclo {
        let mut gr = vec![0i64; order as usize];
        gr[0] = c;
        Cyclo::from_group_ring(order, &gr)
    }

    /// zeta_Q^k.
    pub fn root(order: u64, k: i64) -> Cyclo {
        let mut gr = vec![0i64; order as usize];
        gr[crate::modarith::reduce(k, order) as usize] = 1;
        Cyclo::from_group_ring(order, &gr)
    }

    /// Image of sum_k gr[k] zeta_Q^k.
    pub fn from_group_ring(order: u64, gr: &[i64]) -> Cyclo {
        let b = basis(order);
        Cyclo::from_group_ring_with(b, gr)
    }

    pub fn from_group_ring_with(basis: Arc<Basis>, gr: &[i64]) -> Cyclo {
        assert_eq!(gr.len(), basis.order);
        let mut coeffs = vec![0i64; basis.order];
        for (k, &c) in gr.iter().enumerate() {
            if c != 0 {
                coeffs[basis.to_tensor[k] as usize] += c;
            }
        }
        basis.reduce(&mut coeffs);
        Cyclo { basis, coeffs }
    }

    pub fn order(&self) -> u64 {
        self.basis.order as u64
    }

    /// Nonzero (exponent k, coefficient) pairs of the canonical form.
    pub fn terms(&self) -> Vec<(u64, i64)> {
        let mut out: Vec<(u64, i64)> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(t, &c)| (self.basis.from_tensor[t] as u64, c))
            .collect();
        out.sort_unstable();
        out
    }

    /// Canonical coefficients in tensor layout.
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Complex embedding via zeta_Q = exp(2 pi i / Q), compensated summation.
    pub fn to_complex(&self) -> Complex64 {
        let mut acc = crate::numeric::ComplexSum::default();
        for (t, &c) in self.coeffs.iter().enumerate() {
            if c != 0 {
                acc.add(self.basis.roots[self.basis.from_tensor[t] as usize] * c as f64);
            }
        }
        acc.value()
    }

    /// Same element viewed in Z[zeta_L] for a multiple L of the order.
    pub fn lift(&self, big: u64) -> Cyclo {
        let q = self.order();
        assert!(big % q == 0, "lift target {big} not a multiple of {q}");
        if big == q {
            return self.clone();
        }
        let f = big / q;
        let mut gr = vec![0i64; big as usize];
        for (k, c) in self.terms() {
            gr[(k * f) as usize] += c;
        }
        Cyclo::from_group_ring(big, &gr)
    }

    fn align(&self, other: &Cyclo) -> (Cyclo, Cyclo) {
        if self.order() == other.order() {
            (self.clone(), other.clone())
        } else {
            let l = lcm(self.order(), other.order());
            (self.lift(l), other.lift(l))
        }
    }

    pub fn add(&self, other: &Cyclo) -> Cyclo {
        let (mut a, b) = self.align(other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x += *y;
        }
        a
    }

    pub fn sub(&self, other: &Cyclo) -> Cyclo {
        let (mut a, b) = self.align(other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x -= *y;
        }
        a
    }

    pub fn scale(&self, c: i64) -> Cyclo {
        Cyclo {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn neg(&self) -> Cyclo {
        self.scale(-1)
    }

    /// Multiply by zeta_Q^k.
    pub fn shift(&self, k: i64) -> Cyclo {
        let q = self.order();
        let k = crate::modarith::reduce(k, q);
        let mut gr = vec![0i64; q as usize];
        for (e, c) in self.terms() {
            gr[((e + k) % q) as usize] += c;
        }
        Cyclo::from_group_ring_with(self.basis.clone(), &gr)
    }

    pub fn mul(&self, other: &Cyclo) -> Cyclo {
        let (a, b) = self.align(other);
        let q = a.order();
        let mut gr = vec![0i64; q as usize];
        a.mul_into_group_ring(&b, 1, 0, &mut gr);
        Cyclo::from_group_ring_with(a.basis.clone(), &gr)
    }

    /// Adds `scale * zeta^shift * self * other` to an unreduced group-ring buffer.
    /// Both factors must share this order.
    pub fn mul_into_group_ring(&self, other: &Cyclo, scale: i64, shift: u64, gr: &mut [i64]) {
        let q = self.order();
        assert_eq!(q, other.order());
        let ta = self.terms();
        let tb = other.terms();
        for &(ka, ca) in &ta {
            let base = (ka + shift) % q;
            for &(kb, cb) in &tb {
                let mut k = base + kb;
                if k >= q {
                    k -= q;
                }
                gr[k as usize] += scale * ca * cb;
            }
        }
    }

    /// Adds `scale * zeta^shift * self` to an unreduced group-ring buffer.
    pub fn add_into_group_ring(&self, scale: i64, shift: u64, gr: &mut [i64]) {
        let q = self.order();
        for (k, c) in self.terms() {
            gr[((k + shift) % q) as usize] += scale * c;
        }
    }

    /// Complex conjugate (zeta -> zeta^{-1}).
    pub fn conj(&self) -> Cyclo {
        let q = self.order();
        let mut gr = vec![0i64; q as usize];
        for (k, c) in self.terms() {
            gr[((q - k) % q) as usize] += c;
        }
        Cyclo::from_group_ring_with(self.basis.clone(), &gr)
    }

    pub fn pow(&self, e: u32) -> Cyclo {
        let mut r = Cyclo::from_int(self.order(), 1);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// The rational integer this element equals, if it is one.
    pub fn as_integer(&self) -> Option<i64> {
        let t = self.terms();
        match t.as_slice() {
            [] => Some(0),
            [(0, c)] => Some(*c),
            _ => None,
        }
    }
}

/// Zero test for a group-ring vector of prime-power order p^n without reduction:
/// the kernel of Z[x]/(x^Q - 1) -> Z[zeta_Q] is spanned by the coset sums
/// x^r (1 + x^{p^{n-1}} + ... ), so an element vanishes iff it is constant on
/// every coset r + p^{n-1} Z.
pub fn prime_power_group_ring_is_zero(gr: &[i64], p: u64) -> bool {
    let q = gr.len();
    let step = q / p as usize;
    for r in 0..step {
        let c = gr[r];
        let mut k = r + step;
        while k < q {
            if gr[k] != c {
                return false;
            }
            k += step;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_roots_is_zero() {
        for q in [2u64, 3, 4, 5, 6, 9, 12, 25, 30, 45, 49] {
            let gr = vec![1i64; q as usize];
            assert!(Cyclo::from_group_ring(q, &gr).is_zero() == (q > 1), "q={q}");
        }
    }

    #[test]
    fn embedding_matches_roots() {
        for q in [7u64, 12, 25, 60, 105] {
            for k in 0..q {
                let z = Cyclo::root(q, k as i64).to_complex();
                let w = root_exact_angle(k, q);
                assert!((z - w).norm() < 1e-12, "q={q} k={k}");
            }
        }
    }

    #[test]
    fn multiplication_adds_exponents() {
        for q in [15u64, 36, 49] {
            for a in 0..q as i64 {
                let x = Cyclo::root(q, a).mul(&Cyclo::root(q, 2 * a + 1));
                assert_eq!(x, Cyclo::root(q, 3 * a + 1));
            }
        }
    }

    #[test]
    fn lift_and_equality_across_orders() {
        // zeta_5 = zeta_15^3.
        assert_eq!(Cyclo::root(5, 1), Cyclo::root(15, 3));
        assert_eq!(Cyclo::root(5, 1).lift(15), Cyclo::root(15, 3));
        assert_ne!(Cyclo::root(5, 1), Cyclo::root(15, 1));
    }

    #[test]
    fn conj_is_inverse_root() {
        let q = 21;
        let z = Cyclo::root(q, 4);
        assert_eq!(z.mul(&z.conj()), Cyclo::from_int(q, 1));
    }

    #[test]
    fn coset_zero_test_agrees_with_reduction() {
        let q = 25usize;
        let mut gr = vec![0i64; q];
        for r in 0..5 {
            gr[3 + 5 * r] = 2;
        }
        assert!(prime_power_group_ring_is_zero(&gr, 5));
        assert!(Cyclo::from_group_ring(25, &gr).is_zero());
        gr[3] = 1;
        assert!(!prime_power_group_ring_is_zero(&gr, 5));
        assert!(!Cyclo::from_group_ring(25, &gr).is_zero());
    }
}
