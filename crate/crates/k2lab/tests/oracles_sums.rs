// SPDX-License-Identifier: Apache-2.0
//! Examples and invariants for modular arithmetic, complete sums and their
//! correlations, each checked against a brute-force oracle written here.

use num_complex::Complex64;

use k2lab::corrpp::{diamond_exp_sum, diamond_test, vinogradov_j, PpContext};
use k2lab::corrprime::{correlation_sum, ShiftMultiset};
use k2lab::expsum::{bezout, k2, k2_crt_split, k2_direct, k2_explicit, Engine};
use k2lab::modarith::{binom23_valuation, is_prime, u0_comb_valuation, BranchTable};

fn e(x: i64, q: u64) -> Complex64 {
    let t = std::f64::consts::TAU * (x.rem_euclid(q as i64) as f64) / q as f64;
    Complex64::new(t.cos(), t.sin())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Inverse by search, independent of the library.
fn inv(x: u64, q: u64) -> u64 {
    (1..q).find(|y| x * y % q == 1).unwrap_or(0)
}

/// K2(a,b;q) by summation with a searched inverse.
fn k2_naive(a: i64, b: i64, q: u64) -> Complex64 {
    if q == 1 {
        return Complex64::new(1.0, 0.0);
    }
    let mut s = Complex64::new(0.0, 0.0);
    for x in (1..q).filter(|&x| gcd(x, q) == 1) {
        let xi = inv(x, q);
        let phase = a as i128 * (xi * xi % q) as i128 + b as i128 * x as i128;
        s += e((phase.rem_euclid(q as i128)) as i64, q);
    }
    s
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

#[test]
fn k2_examples_against_naive_sum() {
    assert!(close(k2(1, 0, 2, Engine::Exact).unwrap().approx, Complex64::new(-1.0, 0.0), 1e-12));
    let v = k2(1, 0, 5, Engine::Float).unwrap().approx;
    assert!(close(v, Complex64::new(5f64.sqrt() - 1.0, 0.0), 1e-12));
    let v = k2(1, 1, 25, Engine::Exact).unwrap();
    assert!(close(v.approx, e(17, 25) * 5.0, 1e-12));
    assert!(close(v.approx, k2_naive(1, 1, 25), 1e-9));
    let z = k2_explicit(1, 1, 7, 2, Engine::Exact).unwrap();
    assert!(z.exact.unwrap().is_zero());
    assert!(k2_naive(1, 1, 49).norm() < 1e-9);
    for (a, b, q) in [(1, 1, 15), (1, 0, 50), (3, 7, 98), (2, 5, 121)] {
        let v = k2(a, b, q, Engine::Exact).unwrap();
        assert!(close(v.approx, k2_naive(a, b, q), 1e-9), "K2({a},{b};{q})");
    }
}

#[test]
fn crt_examples() {
    let (f1, f2, full) = k2_crt_split(1, 1, 3, 5, Engine::Float).unwrap();
    assert!(close(f1.approx, k2_naive(-1, -1, 3), 1e-12));
    assert!(close(f2.approx, k2_naive(2, 2, 5), 1e-12));
    assert!(close(full.approx, f1.approx * f2.approx, 1e-9));
    assert_eq!(bezout(4, 9).unwrap(), (7, -3));
    let (f1, f2, full) = k2_crt_split(1, 1, 4, 9, Engine::Exact).unwrap();
    let prod = f1.exact.unwrap().lift(36).mul(&f2.exact.unwrap().lift(36));
    assert_eq!(full.exact.unwrap(), prod);
    let (f1, _, full) = k2_crt_split(1, 0, 1, 7, Engine::Float).unwrap();
    assert!(close(f1.approx, Complex64::new(1.0, 0.0), 1e-12));
    assert!(close(full.approx, k2_naive(1, 0, 7), 1e-12));
}

#[test]
fn fourier_inversion_vanishes_for_nonunit_frequency() {
    // sum_b e_q(c b) K2(a,b;q) = q * #{x unit : x = -c} e_q(a x^-2): zero when (c,q) > 1.
    for q in [12u64, 25, 45] {
        for c in (1..q).filter(|&c| gcd(c, q) > 1) {
            let s: Complex64 = (0..q as i64).map(|b| e(c as i64 * b, q) * k2_naive(1, b, q)).sum();
            assert!(s.norm() < 1e-8, "q={q} c={c}");
        }
    }
}

#[test]
fn correlation_examples() {
    let s = ShiftMultiset::new(&[0], &[0], 5);
    assert_eq!(correlation_sum(1, 0, &s, Engine::Exact).unwrap().exact.unwrap().as_integer(), Some(20));
    let s = ShiftMultiset::new(&[0], &[], 5);
    assert!(correlation_sum(1, 0, &s, Engine::Exact).unwrap().exact.unwrap().is_zero());
    let v = correlation_sum(1, 1, &s, Engine::Float).unwrap().approx;
    assert!(close(v, e(1, 5) * 5.0, 1e-9));
    // prime power: 25 phi(25) and 49 e_49(1)
    let s = ShiftMultiset::new(&[0], &[0], 25);
    assert_eq!(correlation_sum(1, 0, &s, Engine::Exact).unwrap().exact.unwrap().as_integer(), Some(500));
    let s = ShiftMultiset::new(&[0], &[], 49);
    assert!(close(correlation_sum(1, 1, &s, Engine::Float).unwrap().approx, e(1, 49) * 49.0, 1e-9));
}

#[test]
fn correlation_against_naive_double_sum() {
    for (p, a, t, h, hp) in [(11u64, 2i64, 3i64, vec![0i64, 4], vec![7i64]), (13, 5, 0, vec![1], vec![2, 9])] {
        let row: Vec<Complex64> = (0..p as i64).map(|b| k2_naive(a, b, p)).collect();
        let mut expect = Complex64::new(0.0, 0.0);
        for b in 0..p as i64 {
            let mut term = e(t * b, p);
            for &x in &h {
                term *= row[(b + x).rem_euclid(p as i64) as usize];
            }
            for &x in &hp {
                term *= row[(b + x).rem_euclid(p as i64) as usize].conj();
            }
            expect += term;
        }
        let got = correlation_sum(a, t, &ShiftMultiset::new(&h, &hp, p), Engine::Float).unwrap().approx;
        assert!(close(got, expect, 1e-8), "p={p}");
    }
}

#[test]
fn vanishing_off_diamond_classes() {
    for (p, n, h, hp) in [(7u64, 2u32, vec![0i64], vec![3i64]), (13, 2, vec![1, 5], vec![]), (7, 3, vec![2], vec![2])] {
        let q = p.pow(n);
        let s = ShiftMultiset::new(&h, &hp, q);
        let ctx = PpContext::new(p, n, &s).unwrap();
        let t = ctx.support_mod_p();
        for a in [1i64, 3] {
            for c in [0i64, 1, p as i64] {
                for d in 0..p {
                    if !diamond_test(d as i64, a, &t, p) {
                        assert!(ctx.class_partial_sum(a, c, d).unwrap().is_zero(), "p={p} n={n} d={d}");
                    }
                }
            }
        }
    }
}

#[test]
fn zero_eps_weight_forces_balance() {
    // phi(0) > 0 implies mu = nu (p = 2 mod 3) or mu = nu mod 3 (p = 1 mod 3, p^n > 20 (N+M)^3).
    let pool = [0i64, 1, 2];
    let mut configs = Vec::new();
    for k in 1..=3usize {
        for code in 0..(2 * pool.len()).pow(k as u32) {
            let mut c = code;
            let (mut h, mut hp) = (Vec::new(), Vec::new());
            for _ in 0..k {
                let x = c % (2 * pool.len());
                c /= 2 * pool.len();
                if x < pool.len() {
                    h.push(pool[x]);
                } else {
                    hp.push(pool[x - pool.len()]);
                }
            }
            configs.push((h, hp));
        }
    }
    for (p, n) in [(5u64, 2u32), (11, 2), (7, 2), (7, 3), (13, 2)] {
        let q = p.pow(n);
        for (h, hp) in &configs {
            let s = ShiftMultiset::new(h, hp, q);
            let k = (h.len() + hp.len()) as u64;
            let ctx = PpContext::new(p, n, &s).unwrap();
            let phi0 = ctx.phi_eps(&ctx.zero_eps()).unwrap();
            if phi0 == 0 {
                continue;
            }
            if p % 3 == 2 {
                assert!(s.balanced(), "p={p} h={h:?} h'={hp:?}");
            } else if q > 20 * k.pow(3) {
                assert!(s.balanced_mod3(), "p={p} n={n} h={h:?} h'={hp:?}");
            }
        }
    }
}

#[test]
fn diamond_sum_error_term_fit() {
    // |sum - 3^{-|T|} p 1_{C=0}| <= C |T|^2 sqrt(p); report the fitted C.
    let mut worst: f64 = 0.0;
    for p in (7..=500u64).filter(|&p| is_prime(p) && p % 3 == 1) {
        for t in [vec![0u64], vec![0, 1], vec![0, 3]] {
            for cc in [0i64, 1, 2] {
                let v = diamond_exp_sum(cc, 1, &t, p, Engine::Float).unwrap().approx;
                let main = if cc == 0 { p as f64 / 3f64.powi(t.len() as i32) } else { 0.0 };
                let c = (v - main).norm() / ((t.len() * t.len()) as f64 * (p as f64).sqrt());
                worst = worst.max(c);
            }
        }
    }
    println!("fitted diamond error constant: {worst}");
    assert!(worst.is_finite() && worst < 10.0);
}

#[test]
fn vinogradov_bounds_and_monotonicity() {
    for (s, k) in [(1u32, 1u32), (2, 2), (2, 1), (3, 2)] {
        let mut prev = 0;
        for pp in 1..=4u64 {
            let j = vinogradov_j(s, k, pp).unwrap();
            assert!(j >= prev);
            assert!(j >= pp.pow(s) && j <= pp.pow(2 * s));
            prev = j;
        }
    }
    assert_eq!(vinogradov_j(2, 2, 3).unwrap(), 15);
}

/// nu_p of the rational C(2/3, j), computed with exact integers.
fn binom23_nu(j: u64, p: u64) -> i64 {
    // C(2/3, j) = prod_{l=0}^{j-1} (2 - 3l) / (3^j j!)
    let nu = |mut x: i64| {
        let mut v = 0;
        x = x.abs();
        while x % p as i64 == 0 {
            x /= p as i64;
            v += 1;
        }
        v
    };
    let num: i64 = (0..j as i64).map(|l| nu(2 - 3 * l)).sum();
    let den: i64 = (1..=j as i64).map(nu).sum::<i64>() + if p == 3 { j as i64 } else { 0 };
    num - den
}

#[test]
fn binomial_valuation_against_exact_rationals() {
    for p in [5u64, 7, 11, 13] {
        for j in 1..=40u64 {
            let oracle = binom23_nu(j, p);
            let got = binom23_valuation(j, p).unwrap() as i64;
            assert!(oracle >= 0);
            assert_eq!(got, oracle, "j={j} p={p}");
            // the subtracted term is nonnegative
            let prod: i64 = (1..j as i64).map(|l| {
                let mut x = 3 * l - 2;
                let mut v = 0;
                while x % p as i64 == 0 {
                    x /= p as i64;
                    v += 1;
                }
                v
            }).sum();
            assert!(got <= prod, "j={j} p={p}");
        }
    }
}

#[test]
fn cube_root_combination_valuation_bound() {
    // p^{m/2} > 20 D^3, |alpha_i| <= D, alphas not all equal => valuation <= ceil(log(20 D^3)/log p).
    let mut checked = 0;
    for p in [7u64, 13] {
        for m in 1..=6u32 {
            for d in 1..=3i64 {
                if (p as f64).powf(m as f64 / 2.0) <= 20.0 * (d * d * d) as f64 {
                    continue;
                }
                let cap = ((20.0 * (d * d * d) as f64).ln() / (p as f64).ln()).ceil() as u32;
                let u0 = BranchTable::new(p, m, m).unwrap().u0().unwrap();
                for a1 in -d..=d {
                    for a2 in -d..=d {
                        for a3 in -d..=d {
                            if a1 == a2 && a2 == a3 {
                                continue;
                            }
                            let v = u0_comb_valuation(a1, a2, a3, p, m).unwrap();
                            assert!(v <= cap, "p={p} m={m} {a1},{a2},{a3}: {v} > {cap}");
                            // independent valuation of a1 + a2 u0 + a3 u0^2 mod p^m
                            let q = p.pow(m) as i128;
                            let u = u0 as i128;
                            let mut x = (a1 as i128 + a2 as i128 * u + a3 as i128 * (u * u % q)).rem_euclid(q);
                            let mut nu = 0;
                            while x != 0 && x % p as i128 == 0 && nu < m {
                                x /= p as i128;
                                nu += 1;
                            }
                            if x == 0 {
                                nu = m;
                            }
                            assert_eq!(v, nu);
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn direct_sum_matches_naive_for_composites() {
    for q in [6u64, 20, 36, 63, 100] {
        for a in (1..q).filter(|&a| gcd(a, q) == 1).take(3) {
            for b in [0i64, 1, 5] {
                let v = k2_direct(a as i64, b, q, Engine::Exact).unwrap();
                assert!(close(v.approx, k2_naive(a as i64, b, q), 1e-9));
            }
        }
    }
}
