// SPDX-License-Identifier: Apache-2.0
//! Property tests over small random inputs.

use num_complex::Complex64;
use proptest::prelude::*;
use serde_json::json;

use k2lab::corrprime::{correlation_sum, ShiftMultiset};
use k2lab::cyclo::Cyclo;
use k2lab::expsum::{k2, k2_crt_split, k2_direct, k2_row, Engine};
use k2lab::modarith::{cube_roots, euler_phi, gcd, is_prime, jacobi, mod_inv, pow_mod, reduce};
use k2lab::report::ExperimentReport;
use k2lab::sqfree::{delta_all_coprime, dickman_rho, squarefree_sieve};
use k2lab::vdc::{exponent_budget, h_tuple, h_tuple_count, Q128};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn odd_prime() -> impl Strategy<Value = u64> {
    (5u64..200).prop_filter("prime", |&p| is_prime(p))
}

proptest! {
    #![proptest_config(cfg(256))]

    #[test]
    fn mod_inv_inverts_units(x in -10_000i64..10_000, q in 1u64..5000) {
        match mod_inv(x, q) {
            Ok(y) => {
                prop_assert!(y < q);
                prop_assert_eq!((reduce(x, q) as u128 * y as u128 % q as u128) as u64, 1 % q);
            }
            Err(_) => prop_assert_ne!(gcd(reduce(x, q), q), 1),
        }
    }

    #[test]
    fn jacobi_is_multiplicative(a in -500i64..500, b in -500i64..500, k in 0u64..1000) {
        let n = 2 * k + 1;
        let ja = jacobi(a, n).unwrap();
        let jb = jacobi(b, n).unwrap();
        prop_assert_eq!(jacobi(a * b, n).unwrap(), ja * jb);
        if gcd(reduce(a, n), n) == 1 {
            prop_assert_eq!(jacobi(a * a, n).unwrap(), 1);
        }
    }

    #[test]
    fn cube_roots_are_roots_and_complete(p in odd_prime(), m in 1u32..4, r in 1i64..100_000) {
        let q = p.pow(m);
        prop_assume!(r as u64 % p != 0 && q <= 100_000);
        let roots = cube_roots(r, p, m).unwrap();
        let rq = reduce(r, q);
        for &y in &roots {
            prop_assert_eq!(pow_mod(y, 3, q), rq);
        }
        let brute = (0..q).filter(|&y| pow_mod(y, 3, q) == rq).count();
        prop_assert_eq!(roots.len(), brute);
        // roots mod p^m reduce to roots mod p
        for &y in &roots {
            prop_assert_eq!(pow_mod(y % p, 3, p), reduce(r, p));
        }
    }

    #[test]
    fn sieve_counts_match_delta_sum(x in 1u64..20_000, q in 1u64..60) {
        let d = delta_all_coprime(x, q).unwrap();
        let s: f64 = d.iter().map(|v| v.value).sum();
        prop_assert!(s.abs() < 1e-9 * x as f64 + 1e-9);
    }

    #[test]
    fn dickman_is_monotone(u in 0.0f64..19.0, du in 0.001f64..1.0) {
        let a = dickman_rho(u).unwrap();
        let b = dickman_rho(u + du).unwrap();
        prop_assert!(b <= a && b > 0.0);
    }

    #[test]
    fn h_tuples_enumerate_box(bounds in prop::collection::vec(1u64..5, 1..4)) {
        let n = h_tuple_count(&bounds);
        let all: Vec<Vec<i64>> = (0..n).map(|i| h_tuple(&bounds, i)).collect();
        for h in &all {
            for (x, &b) in h.iter().zip(&bounds) {
                prop_assert!(*x != 0 && x.unsigned_abs() <= b);
            }
        }
        prop_assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn exponent_identity(l in 2u32..20, dn in 0i128..50, ln in 0i128..50, en in 0i128..50) {
        let plan = exponent_budget(l, Q128::new(dn, 10_000), Q128::new(ln, 10_000), Q128::new(en, 1000)).unwrap();
        prop_assert!(plan.identity_holds());
    }
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn cyclo_ring_laws_and_embedding(
        q in 2u64..40,
        x in prop::collection::vec((0i64..40, -3i64..4), 1..5),
        y in prop::collection::vec((0i64..40, -3i64..4), 1..5),
        z in prop::collection::vec((0i64..40, -3i64..4), 1..5),
    ) {
        let build = |v: &[(i64, i64)]| v.iter().fold(Cyclo::zero(q), |acc, &(k, c)| acc.add(&Cyclo::root(q, k).scale(c)));
        let (a, b, c) = (build(&x), build(&y), build(&z));
        prop_assert_eq!(a.add(&b).mul(&c), a.mul(&c).add(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert!(a.sub(&a).is_zero());
        let emb = (a.mul(&b).to_complex() - a.to_complex() * b.to_complex()).norm();
        prop_assert!(emb < 1e-9);
        prop_assert!((a.conj().to_complex() - a.to_complex().conj()).norm() < 1e-9);
        prop_assert_eq!(a.lift(2 * q).to_complex().re.round(), a.to_complex().re.round());
    }

    #[test]
    fn k2_conjugation_and_dilation(q in 2u64..300, a in -300i64..300, b in -300i64..300, t in 1i64..300) {
        prop_assume!(gcd(reduce(a, q), q) == 1 && gcd(reduce(t, q), q) == 1);
        let s = k2(a, b, q, Engine::Float).unwrap().approx;
        let c = k2(-a, -b, q, Engine::Float).unwrap().approx;
        prop_assert!((s.conj() - c).norm() < 1e-8);
        let ti = mod_inv(t, q).unwrap() as i64;
        let d = k2(a * ti % q as i64 * ti % q as i64, b * t % q as i64, q, Engine::Float).unwrap().approx;
        prop_assert!((s - d).norm() < 1e-8);
        let direct = k2_direct(a, b, q, Engine::Float).unwrap().approx;
        prop_assert!((s - direct).norm() < 1e-8);
    }

    #[test]
    fn crt_split_is_exact(m1 in 2u64..40, m2 in 2u64..40, a in 1i64..2000, b in -2000i64..2000) {
        prop_assume!(gcd(m1, m2) == 1);
        let q = m1 * m2;
        prop_assume!(gcd(reduce(a, q), q) == 1);
        let (f1, f2, full) = k2_crt_split(a, b, m1, m2, Engine::Exact).unwrap();
        let prod = f1.exact.unwrap().lift(q).mul(&f2.exact.unwrap().lift(q));
        prop_assert_eq!(full.exact.unwrap(), prod);
    }

    #[test]
    fn parseval_row(q in 2u64..800, a in 1i64..800) {
        prop_assume!(gcd(reduce(a, q), q) == 1);
        let row = k2_row(a, q).unwrap();
        let energy: f64 = row.iter().map(|z| z.norm_sqr()).sum();
        let expect = (q * euler_phi(q)) as f64;
        prop_assert!((energy - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn shift_multiset_counts(
        q in 2u64..50,
        h in prop::collection::vec(-100i64..100, 0..4),
        hp in prop::collection::vec(-100i64..100, 0..4),
    ) {
        let s = ShiftMultiset::new(&h, &hp, q);
        prop_assert_eq!(s.mu().iter().sum::<u32>() as usize, h.len());
        prop_assert_eq!(s.nu().iter().sum::<u32>() as usize, hp.len());
        prop_assert_eq!(s.total(), h.len() + hp.len());
        prop_assert!(s.support().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.support().iter().all(|&t| t < q));
    }

    #[test]
    fn correlation_symmetries(
        q in 3u64..120,
        a in 1i64..120,
        c in -120i64..120,
        sh in -120i64..120,
        h in prop::collection::vec(-50i64..50, 1..3),
        hp in prop::collection::vec(-50i64..50, 0..3),
    ) {
        prop_assume!(gcd(reduce(a, q), q) == 1);
        let s = correlation_sum(a, c, &ShiftMultiset::new(&h, &hp, q), Engine::Float).unwrap().approx;
        let swapped = correlation_sum(a, -c, &ShiftMultiset::new(&hp, &h, q), Engine::Float).unwrap().approx;
        prop_assert!((s.conj() - swapped).norm() < 1e-7 * (1.0 + s.norm()));
        let hs: Vec<i64> = h.iter().map(|x| x + sh).collect();
        let hps: Vec<i64> = hp.iter().map(|x| x + sh).collect();
        let moved = correlation_sum(a, c, &ShiftMultiset::new(&hs, &hps, q), Engine::Float).unwrap().approx;
        let phase = {
            let t = std::f64::consts::TAU * reduce(-c * sh, q) as f64 / q as f64;
            Complex64::new(t.cos(), t.sin())
        };
        prop_assert!((moved - phase * s).norm() < 1e-7 * (1.0 + s.norm()));
    }

    #[test]
    fn sieve_matches_square_divisors(x in 1u64..3000) {
        let t = squarefree_sieve(x).unwrap();
        for n in 1..=x {
            let sq = (2..).take_while(|d| d * d <= n).any(|d| n % (d * d) == 0);
            prop_assert_eq!(t.is_squarefree(n), !sq);
        }
    }

    #[test]
    fn report_sort_is_order_independent(keys in prop::collection::vec((0i64..5, -3i64..3), 1..20), seed in any::<u64>()) {
        let mut r1 = ExperimentReport::new("t");
        r1.key(&["a", "b"]);
        let mut r2 = ExperimentReport::new("t");
        r2.key(&["a", "b"]);
        for (i, &(a, b)) in keys.iter().enumerate() {
            r1.row(json!({"a": a, "b": b, "i": i}));
        }
        let mut idx: Vec<usize> = (0..keys.len()).collect();
        idx.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
        for &i in &idx {
            let (a, b) = keys[i];
            r2.row(json!({"a": a, "b": b, "i": i}));
        }
        r1.sort_rows();
        r2.sort_rows();
        let ka: Vec<_> = r1.rows.iter().map(|r| (r["a"].clone(), r["b"].clone())).collect();
        let kb: Vec<_> = r2.rows.iter().map(|r| (r["a"].clone(), r["b"].clone())).collect();
        prop_assert_eq!(ka, kb);
        let mut r3 = r2.clone();
        r3.sort_rows();
        prop_assert_eq!(r3.to_json(), r2.to_json());
    }
}

#[test]
fn prime_modulus_check() {
    assert!(is_prime(97) && !is_prime(91));
}
