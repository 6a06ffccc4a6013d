// SPDX-License-Identifier: Apache-2.0
//! Modular and p-adic arithmetic on moduli below 2^63.

use crate::error::{Error, Result};

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    if (a | b) >> 32 == 0 {
        return (a * b) % m;
    }
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Division-free reduction of 32-bit values by a fixed 32-bit modulus.
#[derive(Debug, Clone, Copy)]
pub struct FastMod {
    d: u64,
    m: u64,
}

impl FastMod {
    pub fn new(d: u64) -> FastMod {
        assert!(d >= 1 && d < (1 << 32));
        FastMod { d, m: (u64::MAX / d).wrapping_add(1) }
    }

    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        debug_assert!(a < (1 << 32));
        if self.d == 1 {
            return 0;
        }
        let low = self.m.wrapping_mul(a);
        ((low as u128 * self.d as u128) >> 64) as u64
    }

    /// a b mod d for a, b < d < 2^16.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a * b)
    }
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Reduce a signed integer into `[0, m)`.
#[inline]
pub fn reduce(x: i64, m: u64) -> u64 {
    if m <= i64::MAX as u64 {
        return x.rem_euclid(m as i64) as u64;
    }
    (x as i128).rem_euclid(m as i128) as u64
}

#[inline]
pub fn reduce_i128(x: i128, m: u64) -> u64 {
    x.rem_euclid(m as i128) as u64
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Returns `(g, x, y)` with `a*x + b*y = g`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

pub fn mod_inv(x: i64, q: u64) -> Result<u64> {
    if q == 1 {
        return Ok(0);
    }
    let xr = reduce(x, q);
    let (g, s, _) = ext_gcd(xr as i128, q as i128);
    if g != 1 {
        return Err(Error::NotAUnit { x, modulus: q });
    }
    Ok(reduce_i128(s, q))
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    // This witness set is deterministic for all n < 3.3e24.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_brent(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g, mut q) = (2u64, 2u64, 1u64, 1u64);
        let mut r = 1u64;
        let mut ys = 2u64;
        let m = 128u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += m;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

fn collect_primes(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    collect_primes(d, out);
    collect_primes(n / d, out);
}

/// A positive integer together with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactoredModulus {
    value: u64,
    factors: Vec<(u64, u32)>,
}

impl FactoredModulus {
    pub fn value(&self) -> u64 {
        self.value
    }

    /// Prime-exponent pairs, primes ascending.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Builds from a factor list after checking primality and ordering.
    pub fn from_factors(factors: Vec<(u64, u32)>) -> Result<Self> {
        let mut value: u64 = 1;
        let mut last = 0;
        for &(p, e) in &factors {
            if p <= last || !is_prime(p) || e == 0 {
                return Err(Error::InvalidArgument(format!("bad factor {p}^{e}")));
            }
            last = p;
            for _ in 0..e {
                value = value
                    .checked_mul(p)
                    .filter(|v| *v < (1u64 << 63))
                    .ok_or_else(|| Error::OutOfRange("modulus exceeds 2^63-1".into()))?;
            }
        }
        Ok(FactoredModulus { value, factors })
    }

    /// The prime powers p^e exactly dividing the value.
    pub fn prime_powers(&self) -> Vec<u64> {
        self.factors.iter().map(|&(p, e)| p.pow(e)).collect()
    }

    pub fn phi(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| (p - 1) * p.pow(e - 1))
            .product()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn prime_power(&self) -> Option<(u64, u32)> {
        if self.factors.len() == 1 {
            Some(self.factors[0])
        } else {
            None
        }
    }

    pub fn num_divisors(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| e as u64 + 1).product()
    }

    pub fn largest_prime(&self) -> u64 {
        self.factors.last().map(|f| f.0).unwrap_or(1)
    }
}

/// Factor `n`. Panics on `n == 0` or `n >= 2^63`.
pub fn factorize(n: u64) -> FactoredModulus {
    assert!(n >= 1 && n < (1u64 << 63), "factorize: n out of range");
    let mut primes = Vec::new();
    let mut m = n;
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        while m % p == 0 {
            primes.push(p);
            m /= p;
        }
    }
    collect_primes(m, &mut primes);
    primes.sort_unstable();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match factors.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => factors.push((p, 1)),
        }
    }
    FactoredModulus { value: n, factors }
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n).phi()
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(mut x: u128, p: u64) -> u32 {
    assert!(x != 0);
    let p = p as u128;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Jacobi symbol (a/n) for odd n.
pub fn jacobi(a: i64, n: u64) -> Result<i8> {
    if n % 2 == 0 {
        return Err(Error::EvenModulus(n));
    }
    let mut a = reduce(a, n);
    let mut n = n;
    let mut t = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    Ok(if n == 1 { t } else { 0 })
}

/// Discrete log of `w` to base `g` in a cyclic group of order 3^s (Pohlig-Hellman).
fn dlog_3group(w: u64, g: u64, s: u32, p: u64) -> Option<u64> {
    let order = 3u64.pow(s);
    let gamma = pow_mod(g, order / 3, p);
    let ginv = pow_mod(g, order - 1, p);
    let mut e = 0u64;
    let mut pw = 1u64;
    for i in 0..s {
        let h = pow_mod(mul_mod(w, pow_mod(ginv, e, p), p), order / (pw * 3), p);
        let d = if h == 1 {
            0
        } else if h == gamma {
            1
        } else if h == mul_mod(gamma, gamma, p) {
            2
        } else {
            return None;
        };
        e += d * pw;
        if i + 1 < s {
            pw *= 3;
        }
    }
    Some(e)
}

/// All cube roots of a unit r modulo the prime p (p > 3), ascending.
fn cube_roots_mod_p(r: u64, p: u64) -> Vec<u64> {
    let r = r % p;
    if p % 3 == 2 {
        return vec![pow_mod(r, (2 * p - 1) / 3, p)];
    }
    if pow_mod(r, (p - 1) / 3, p) != 1 {
        return vec![];
    }
    let mut t = p - 1;
    let mut s = 0;
    while t % 3 == 0 {
        t /= 3;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 3, p) == 1 {
        z += 1;
    }
    let g = pow_mod(z, t, p);
    // 3u = 1 mod t, so x0^3 = r * (r^t)^k with r^t in the 3-Sylow subgroup.
    let u = mod_inv(3, t).unwrap_or(0);
    let x0 = pow_mod(r, u, p);
    let w = mul_mod(mul_mod(x0, mul_mod(x0, x0, p), p), mod_inv(r as i64, p).unwrap(), p);
    let e = dlog_3group(w, g, s, p).expect("cube class has a Sylow logarithm");
    let v = pow_mod(g, e / 3, p);
    let x = mul_mod(x0, mod_inv(v as i64, p).unwrap(), p);
    let omega = pow_mod(g, 3u64.pow(s - 1), p);
    let mut roots = vec![x, mul_mod(x, omega, p), mul_mod(x, mul_mod(omega, omega, p), p)];
    roots.sort_unstable();
    roots
}

/// Newton-lift a unit cube root `y` of `r` mod p to a root mod `q` = p^m.
pub fn hensel_lift_cube(y: u64, r: u64, q: u64) -> u64 {
    let mut y = y % q;
    let r = r % q;
    loop {
        let y3 = mul_mod(mul_mod(y, y, q), y, q);
        if y3 == r {
            return y;
        }
        let f = (y3 + q - r) % q;
        let d = mul_mod(3, mul_mod(y, y, q), q);
        let dinv = mod_inv(d as i64, q).expect("derivative is a unit for p > 3");
        y = (y + q - mul_mod(f, dinv, q)) % q;
    }
}

/// Solutions of y^3 = r mod p^m, ascending.
pub fn cube_roots(r: i64, p: u64, m: u32) -> Result<Vec<u64>> {
    if p <= 3 {
        return Err(Error::SmallPrime(p));
    }
    let rp = reduce(r, p);
    if rp == 0 {
        return Err(Error::NonUnitTarget { r, p });
    }
    let q = p.pow(m);
    let rq = reduce(r, q);
    let mut out: Vec<u64> = cube_roots_mod_p(rp, p)
        .into_iter()
        .map(|y| hensel_lift_cube(y, rq, q))
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Smallest primitive cube root of unity mod p^m.
pub fn primitive_cube_root(p: u64, m: u32) -> Option<u64> {
    if p % 3 != 1 {
        return None;
    }
    let q = p.pow(m);
    cube_roots_mod_p(1, p)
        .into_iter()
        .filter(|&y| y != 1)
        .map(|y| hensel_lift_cube(y, 1, q))
        .min()
}

fn legendre_factorial_valuation(j: u64, p: u64) -> u64 {
    let mut v = 0;
    let mut pk = p;
    while pk <= j {
        v += j / pk;
        pk = match pk.checked_mul(p) {
            Some(x) => x,
            None => break,
        };
    }
    v
}

/// p-adic valuation of the binomial coefficient binom(2/3, j).
pub fn binom23_valuation(j: u64, p: u64) -> Result<u64> {
    if p <= 3 {
        return Err(Error::SmallPrime(p));
    }
    if j == 0 {
        return Ok(0);
    }
    let num: u64 = (1..j).map(|l| valuation((3 * l - 2) as u128, p) as u64).sum();
    Ok(num - legendre_factorial_valuation(j, p))
}

/// Valuation of the numerator product alone, used as an upper bound.
pub fn binom23_numerator_valuation(j: u64, p: u64) -> u64 {
    (1..j.max(1)).map(|l| valuation((3 * l - 2) as u128, p) as u64).sum()
}

/// min(m, nu_p(a1 + a2 u0 + a3 u0^2)) with u0 the canonical primitive cube root mod p^m.
pub fn u0_comb_valuation(a1: i64, a2: i64, a3: i64, p: u64, m: u32) -> Result<u32> {
    let u0 = primitive_cube_root(p, m).ok_or(Error::NoPrimitiveRoot(p))?;
    let q = p.pow(m);
    let v = (reduce(a1, q) + mul_mod(reduce(a2, q), u0, q) + mul_mod(reduce(a3, q), mul_mod(u0, u0, q), q)) % q;
    if v == 0 {
        Ok(m)
    } else {
        Ok(valuation(v as u128, p).min(m))
    }
}

/// Is the residue a cube of a unit mod the prime p?
pub fn is_unit_cube_mod_p(r: u64, p: u64) -> bool {
    let r = r % p;
    if r == 0 {
        return false;
    }
    p % 3 != 1 || pow_mod(r, (p - 1) / 3, p) == 1
}

/// Largest residue table the branch table will allocate.
pub const BRANCH_TABLE_CAP: u64 = 1 << 26;

/// Fixed cube-root branch and primitive cube root for one prime power.
///
/// `s(r)` is the root whose reduction mod p is the smallest root of r mod p,
/// lifted to precision p^n. `u0` is the smallest primitive cube root mod p^m,
/// lifted to p^n.
#[derive(Debug, Clone)]
pub struct BranchTable {
    p: u64,
    m: u32,
    n: u32,
    pn: u64,
    u0: Option<u64>,
    root_mod_p: Vec<u32>,
    lifted: Vec<u32>,
}

impl BranchTable {
    pub fn new(p: u64, m: u32, n: u32) -> Result<Self> {
        if p <= 3 || !is_prime(p) {
            return Err(Error::SmallPrime(p));
        }
        if m == 0 || n < m {
            return Err(Error::InvalidArgument(format!("need 1 <= m <= n, got m={m}, n={n}")));
        }
        let pn = p
            .checked_pow(n)
            .filter(|&q| q <= BRANCH_TABLE_CAP)
            .ok_or_else(|| Error::BudgetExceeded(format!("branch table {p}^{n}")))?;
        let mut root_mod_p = vec![0u32; p as usize];
        for y in (1..p).rev() {
            root_mod_p[mul_mod(mul_mod(y, y, p), y, p) as usize] = y as u32;
        }
        let mut lifted = vec![0u32; pn as usize];
        for y in 1..pn {
            if y % p == 0 {
                continue;
            }
            let r = mul_mod(mul_mod(y, y, pn), y, pn);
            if root_mod_p[(r % p) as usize] as u64 == y % p {
                lifted[r as usize] = y as u32;
            }
        }
        Ok(BranchTable {
            p,
            m,
            n,
            pn,
            u0: primitive_cube_root(p, m).map(|u| hensel_lift_cube(u, 1, pn)),
            root_mod_p,
            lifted,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn precision(&self) -> u32 {
        self.m
    }
    pub fn lift_precision(&self) -> u32 {
        self.n
    }
    pub fn modulus(&self) -> u64 {
        self.pn
    }

    /// u0 lifted to p^n.
    pub fn u0(&self) -> Option<u64> {
        self.u0
    }

    pub fn u0_mod_m(&self) -> Option<u64> {
        self.u0.map(|u| u % self.p.pow(self.m))
    }

    /// Branch root of r at full precision, or None if r is not a unit cube.
    pub fn s(&self, r: u64) -> Option<u64> {
        let v = self.lifted[(r % self.pn) as usize];
        (v != 0).then_some(v as u64)
    }

    /// Branch root reduced to precision p^m.
    pub fn s_mod_m(&self, r: u64) -> Option<u64> {
        self.s(r).map(|y| y % self.p.pow(self.m))
    }

    /// Branch root mod p, i.e. the smallest cube root of r mod p.
    pub fn s_mod_p(&self, r: u64) -> Option<u64> {
        let v = self.root_mod_p[(r % self.p) as usize];
        (v != 0).then_some(v as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fastmod_matches_division() {
        for d in [1u64, 2, 3, 7, 25, 2401, 14641, 65521, 1 << 31, (1 << 32) - 1] {
            let f = FastMod::new(d);
            for a in [0u64, 1, 2, d - 1, d, d + 1, 12345, 1 << 20, (1 << 32) - 1].into_iter().filter(|&a| a < 1 << 32) {
                assert_eq!(f.reduce(a), a % d, "{a} mod {d}");
            }
        }
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(25).factors(), &[(5, 2)]);
        assert_eq!(
            factorize(30030).factors(),
            &[(2, 1), (3, 1), (5, 1), (7, 1), (11, 1), (13, 1)]
        );
        assert!(factorize(1).factors().is_empty());
    }

    #[test]
    fn factorize_large_semiprime() {
        let n = 1_000_000_007u64 * 998_244_353;
        assert_eq!(factorize(n).factors(), &[(998_244_353, 1), (1_000_000_007, 1)]);
        let m = (1u64 << 61) - 1;
        assert_eq!(factorize(m).factors(), &[(m, 1)]);
    }

    #[test]
    fn mod_inv_examples() {
        assert_eq!(mod_inv(3, 5), Ok(2));
        assert_eq!(mod_inv(2, 25), Ok(13));
        assert!(matches!(mod_inv(5, 25), Err(Error::NotAUnit { .. })));
        assert_eq!(mod_inv(-1, 7), Ok(6));
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi(3, 25), Ok(1));
        assert_eq!(jacobi(2, 5), Ok(-1));
        assert_eq!(jacobi(3, 343), Ok(-1));
        assert_eq!(jacobi(5, 25), Ok(0));
        assert_eq!(jacobi(1, 4), Err(Error::EvenModulus(4)));
    }

    #[test]
    fn jacobi_matches_euler_for_primes() {
        for p in [5u64, 7, 11, 13, 101] {
            for a in 1..p {
                let e = pow_mod(a, (p - 1) / 2, p);
                let want = if e == 1 { 1 } else { -1 };
                assert_eq!(jacobi(a as i64, p).unwrap(), want);
            }
        }
    }

    #[test]
    fn cube_root_examples() {
        assert_eq!(cube_roots(1, 7, 1).unwrap(), vec![1, 2, 4]);
        assert_eq!(cube_roots(13, 5, 2).unwrap(), vec![17]);
        assert!(cube_roots(2, 7, 1).unwrap().is_empty());
        assert!(matches!(cube_roots(14, 7, 1), Err(Error::NonUnitTarget { .. })));
    }

    #[test]
    fn cube_roots_agree_with_brute_force() {
        for (p, m) in [(7u64, 1u32), (7, 2), (13, 2), (5, 3), (19, 1), (31, 2)] {
            let q = p.pow(m);
            for r in 1..q {
                if r % p == 0 {
                    continue;
                }
                let brute: Vec<u64> = (1..q).filter(|&y| mul_mod(mul_mod(y, y, q), y, q) == r).collect();
                assert_eq!(cube_roots(r as i64, p, m).unwrap(), brute, "p={p} m={m} r={r}");
            }
        }
    }

    #[test]
    fn cube_roots_large_sylow() {
        // p - 1 = 2 * 3^4 * ... exercises the discrete log path.
        let p = 163u64;
        for r in 1..p {
            let brute: Vec<u64> = (1..p).filter(|&y| mul_mod(mul_mod(y, y, p), y, p) == r).collect();
            assert_eq!(cube_roots(r as i64, p, 1).unwrap(), brute);
        }
    }

    #[test]
    fn primitive_cube_root_examples() {
        assert_eq!(primitive_cube_root(7, 1), Some(2));
        assert_eq!(primitive_cube_root(5, 3), None);
        assert_eq!(primitive_cube_root(7, 2), Some(18));
    }

    #[test]
    fn binom_examples() {
        assert_eq!(binom23_valuation(1, 5), Ok(0));
        assert_eq!(binom23_valuation(4, 7), Ok(1));
        assert_eq!(binom23_valuation(2, 7), Ok(0));
        assert_eq!(binom23_valuation(0, 7), Ok(0));
    }

    #[test]
    fn u0_comb_examples() {
        assert_eq!(u0_comb_valuation(1, 1, 1, 7, 2), Ok(2));
        assert_eq!(u0_comb_valuation(1, 0, 0, 7, 2), Ok(0));
        assert_eq!(u0_comb_valuation(2, 1, 0, 7, 1), Ok(0));
        assert_eq!(u0_comb_valuation(1, 0, 0, 5, 2), Err(Error::NoPrimitiveRoot(5)));
    }

    #[test]
    fn branch_table_basics() {
        let t = BranchTable::new(7, 1, 3).unwrap();
        assert_eq!(t.s(1), Some(1));
        assert_eq!(t.u0_mod_m(), Some(2));
        assert_eq!(t.u0().map(|u| u % 7), Some(2));
        let t2 = BranchTable::new(7, 2, 4).unwrap();
        assert_eq!(t2.u0_mod_m(), Some(18));
        assert_eq!(t.s(3), None);
        let t5 = BranchTable::new(5, 1, 2).unwrap();
        assert_eq!(t5.u0(), None);
        assert_eq!(t5.s(13), Some(17));
        assert!(BranchTable::new(3, 1, 2).is_err());
    }
}
