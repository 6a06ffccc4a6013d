// SPDX-License-Identifier: Apache-2.0
//! Named verification suites. Each returns a report whose checks carry both
//! compared values; random sampling is driven by a fixed seed.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::corrpp::PpContext;
use crate::corrprime::{classify_prime, correlation_sum, normalized_ratio, PrimeClass, ShiftMultiset};
use crate::cyclo::root_exact_angle;
use crate::error::{Error, Result};
use crate::expsum::{explicit_sweep, k2_crt_split, k2_max_abs, k2_row, Engine};
use crate::modarith::{euler_phi, factorize, gcd, is_prime, mod_inv, mul_mod, reduce};
use crate::numeric::ComplexSum;
use crate::report::ExperimentReport;
use crate::sqfree::{density_experiment, dickman_rho, max_delta};
use crate::vdc::{combo_check, complete_t, exponent_budget, gamma_max, ratio_f64, t_sum, Q128};

pub const SUITES: [&str; 10] =
    ["explicit", "crt", "weil", "parseval", "corr-prime", "corr-pp", "combo", "vdc", "sqfree", "density"];

#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Smaller grids and sample counts, for smoke runs.
    pub quick: bool,
}

fn rng(cfg: &SuiteConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_unit(r: &mut ChaCha8Rng, q: u64) -> i64 {
    loop {
        let x = r.gen_range(1..q.max(2));
        if gcd(x, q) == 1 {
            return x as i64;
        }
    }
}

/// Runs the suite with the given name.
pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let t0 = Instant::now();
    let mut rep = match name {
        "explicit" => explicit_formula(cfg)?,
        "crt" => crt_multiplicativity(cfg)?,
        "weil" => pointwise_bounds(cfg)?,
        "parseval" => parseval_inversion(cfg)?,
        "corr-prime" => prime_dichotomy(cfg)?,
        "corr-pp" => {
            let mut r = ExperimentReport::new("suite corr-pp");
            r.absorb("vanishing", eps_zero_vanishing(cfg)?);
            r.absorb("decomposition", decomposition_identity(cfg)?);
            r
        }
        "combo" => combo_exhaustive(cfg)?,
        "vdc" => {
            let mut r = ExperimentReport::new("suite vdc");
            r.absorb("factorization", complete_t_factorization(cfg)?);
            r.absorb("exponents", exponent_plan(cfg)?);
            r
        }
        "sqfree" => equidistribution_trend(cfg)?,
        "density" => dickman_density(cfg)?,
        _ => return Err(Error::UnknownSuite(name.to_string())),
    };
    rep.command = format!("suite {name}");
    rep.param("seed", cfg.seed).param("quick", cfg.quick);
    rep.sort_rows();
    rep.runtime_ms = t0.elapsed().as_millis() as u64;
    Ok(rep)
}

/// (p, n) with p in {5,7,11,13}, n in {2,3,4}, p^n <= 2 10^4.
pub fn explicit_grid(quick: bool) -> Vec<(u64, u32)> {
    let cap = if quick { 400 } else { 20_000 };
    let mut g = Vec::new();
    for p in [5u64, 7, 11, 13] {
        for n in 2..=4u32 {
            if p.pow(n) <= cap {
                g.push((p, n));
            }
        }
    }
    g
}

pub fn explicit_formula(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite explicit");
    rep.key(&["p", "n"]);
    for (p, n) in explicit_grid(cfg.quick) {
        let q = p.pow(n);
        let engine = if q <= crate::cyclo::EXACT_CAP { Engine::Exact } else { Engine::Float };
        let s = explicit_sweep(p, n, engine)?;
        let name = format!("closed form = direct mod {p}^{n}");
        match engine {
            Engine::Exact => rep.check(name, s.mismatches == 0, s.mismatches, 0, "exact"),
            Engine::Float => rep.check(
                name,
                s.mismatches == 0 && s.max_abs_error <= 1e-6,
                s.max_abs_error,
                0.0,
                1e-6,
            ),
        };
        rep.row(&s);
    }
    Ok(rep)
}

fn random_composite(r: &mut ChaCha8Rng, max: u64) -> u64 {
    loop {
        let q = r.gen_range(6..=max);
        if factorize(q).factors().len() >= 2 {
            return q;
        }
    }
}

pub fn crt_multiplicativity(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite crt");
    rep.key(&["sample"]);
    let mut r = rng(cfg, 2);
    let (samples, max) = if cfg.quick { (20, 2000) } else { (100, 10_000) };
    let mut failures = 0u64;
    for i in 0..samples {
        let q = random_composite(&mut r, max);
        let f = factorize(q);
        let (p0, e0) = f.factors()[0];
        let m1 = p0.pow(e0);
        let m2 = q / m1;
        let a = random_unit(&mut r, q);
        let b = r.gen_range(0..q) as i64;
        let (f1, f2, full) = k2_crt_split(a, b, m1, m2, Engine::Exact)?;
        let prod = f1.exact.as_ref().unwrap().lift(q).mul(&f2.exact.as_ref().unwrap().lift(q));
        let ok = full.exact.as_ref() == Some(&prod);
        if !ok {
            failures += 1;
        }
        rep.row(json!({"sample": i, "q": q, "m1": m1, "m2": m2, "a": a, "b": b, "equal": ok,
            "re": full.approx.re, "im": full.approx.im}));
    }
    rep.check("exact product equality", failures == 0, failures, 0, "exact");
    Ok(rep)
}

pub fn pointwise_bounds(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite weil");
    rep.key(&["modulus"]);
    let pmax = if cfg.quick { 50 } else { 200 };
    let mut moduli: Vec<(u64, u32)> = (5..=pmax).filter(|&p| is_prime(p)).map(|p| (p, 1)).collect();
    moduli.extend(explicit_grid(cfg.quick));
    let mut violations = 0u64;
    let mut worst = 0.0f64;
    for (p, n) in moduli {
        let q = p.pow(n);
        let bound = 3.0 * (q as f64).sqrt();
        let mx = k2_max_abs(q)?;
        // Rounding slack only; a genuine violation is far larger.
        let bad = mx > bound * (1.0 + 1e-12);
        violations += bad as u64;
        worst = worst.max(mx / bound);
        rep.row(json!({"modulus": q, "p": p, "n": n, "max_abs": mx, "bound": bound, "ratio": mx / bound}));
    }
    rep.check("violations of 3 q^(1/2)", violations == 0, violations, 0, "exact count");
    rep.fit("max |K2| / (3 q^(1/2))", worst);
    Ok(rep)
}

pub fn parseval_inversion(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite parseval");
    rep.key(&["sample"]);
    let mut r = rng(cfg, 4);
    let (samples, max) = if cfg.quick { (20, 1000) } else { (100, 5000) };
    let (mut worst_p, mut worst_i) = (0.0f64, 0.0f64);
    for i in 0..samples {
        let q = r.gen_range(2..=max);
        let a = random_unit(&mut r, q);
        let c = random_unit(&mut r, q);
        let row = k2_row(a, q)?;
        let norm2: f64 = {
            let mut s = crate::numeric::Sum::default();
            row.iter().for_each(|z| s.add(z.norm_sqr()));
            s.value()
        };
        let expect = q as f64 * euler_phi(q) as f64;
        let rel_p = (norm2 - expect).abs() / expect;
        let mut acc = ComplexSum::default();
        for (b, z) in row.iter().enumerate() {
            acc.add(root_exact_angle(mul_mod(reduce(c, q), b as u64, q), q) * z);
        }
        let ci = mod_inv(c, q)?;
        let target: Complex64 = root_exact_angle(mul_mod(reduce(a, q), mul_mod(ci, ci, q), q), q) * q as f64;
        let rel_i = (acc.value() - target).norm() / q as f64;
        worst_p = worst_p.max(rel_p);
        worst_i = worst_i.max(rel_i);
        rep.row(json!({"sample": i, "q": q, "a": a, "c": c, "parseval_rel": rel_p, "inversion_rel": rel_i}));
    }
    rep.check("parseval relative error", worst_p <= 1e-9, worst_p, 0.0, 1e-9);
    rep.check("inversion relative error", worst_i <= 1e-9, worst_i, 0.0, 1e-9);
    Ok(rep)
}

/// Degeneracy by direct counting: t = 0 and 3 | #h-copies - #h'-copies per residue.
fn degenerate_by_count(t: i64, h: &[i64], hp: &[i64], p: u64) -> bool {
    let mut m: BTreeMap<u64, i64> = BTreeMap::new();
    h.iter().for_each(|&x| *m.entry(reduce(x, p)).or_insert(0) += 1);
    hp.iter().for_each(|&x| *m.entry(reduce(x, p)).or_insert(0) -= 1);
    reduce(t, p) == 0 && m.values().all(|v| v % 3 == 0)
}

fn random_shifts(r: &mut ChaCha8Rng, k: usize, q: u64) -> Vec<i64> {
    (0..k).map(|_| r.gen_range(0..q) as i64).collect()
}

/// A configuration that is degenerate by construction.
fn degenerate_config(r: &mut ChaCha8Rng, p: u64) -> (Vec<i64>, Vec<i64>) {
    match r.gen_range(0..3) {
        0 => {
            let x = r.gen_range(0..p) as i64;
            (vec![x; 3], vec![])
        }
        1 => {
            let x = r.gen_range(0..p) as i64;
            (vec![], vec![x; 3])
        }
        _ => {
            // h' = h shifted by p: the same residue
            let x = r.gen_range(0..p) as i64;
            (vec![x], vec![x + p as i64])
        }
    }
}

pub fn prime_dichotomy(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite corr-prime");
    rep.key(&["p"]);
    let (pmax, per_p) = if cfg.quick { (50, 20) } else { (300, 200) };
    let mut r = rng(cfg, 5);
    let mut flag_mismatch = 0u64;
    let mut witness_fail = 0u64;
    let mut worst_witness = 0.0f64;
    let mut c_emp = 0.0f64;
    let mut c_emp_at = json!(null);
    for p in (11..=pmax).filter(|&p| is_prime(p)) {
        let (mut degenerate, mut nondegenerate, mut max_deg, mut max_nd) = (0u64, 0u64, 0.0f64, 0.0f64);
        for _ in 0..per_p {
            let a = random_unit(&mut r, p);
            let (t, h, hp) = if r.gen_bool(0.25) {
                let (h, hp) = degenerate_config(&mut r, p);
                (0i64, h, hp)
            } else {
                let k = r.gen_range(1..=3usize);
                let nn = r.gen_range(0..=k);
                let t = if r.gen_bool(0.5) { 0 } else { r.gen_range(0..p) as i64 };
                (t, random_shifts(&mut r, nn, p), random_shifts(&mut r, k - nn, p))
            };
            let s = ShiftMultiset::new(&h, &hp, p);
            let class = classify_prime(t, &s)?;
            let oracle = degenerate_by_count(t, &h, &hp, p);
            if oracle != (class == PrimeClass::Degenerate) {
                flag_mismatch += 1;
            }
            let v = correlation_sum(a, t, &s, Engine::Float)?;
            let k = s.total();
            let ratio = normalized_ratio(v.approx, class, p, k);
            match class {
                PrimeClass::Degenerate => {
                    degenerate += 1;
                    max_deg = max_deg.max(ratio);
                }
                PrimeClass::Nondegenerate => {
                    nondegenerate += 1;
                    max_nd = max_nd.max(ratio);
                    let c = ratio / (k as f64 * 3f64.powi(k as i32));
                    if c > c_emp {
                        c_emp = c;
                        c_emp_at = json!({"p": p, "a": a, "t": t, "h": h, "hp": hp});
                    }
                }
            }
        }
        // Exact witness: N = M = 1, h = h'.
        let a = random_unit(&mut r, p);
        let x = r.gen_range(0..p) as i64;
        let s = ShiftMultiset::new(&[x], &[x], p);
        let w = correlation_sum(a, 0, &s, Engine::Exact)?;
        let exact_int = w.exact.as_ref().and_then(|c| c.as_integer());
        let ratio = normalized_ratio(w.approx, PrimeClass::Degenerate, p, 2);
        let target = (p - 1) as f64 / p as f64;
        let err = (ratio - target).abs();
        worst_witness = worst_witness.max(err);
        if err > 1e-9 || exact_int != Some((p * (p - 1)) as i64) {
            witness_fail += 1;
        }
        rep.row(json!({"p": p, "degenerate": degenerate, "nondegenerate": nondegenerate,
            "max_ratio_degenerate": max_deg, "max_ratio_nondegenerate": max_nd,
            "witness_value": exact_int, "witness_ratio": ratio}));
    }
    rep.check("classification matches direct count", flag_mismatch == 0, flag_mismatch, 0, "exact count");
    rep.check("degenerate witnesses ratio (p-1)/p", witness_fail == 0, worst_witness, 0.0, 1e-9);
    rep.check_le("fitted C_emp", c_emp, 5.0);
    rep.fit("C_emp", c_emp);
    rep.param("c_emp_config", c_emp_at);
    Ok(rep)
}

/// Multisets (h, h') with N + M <= 3 drawn from the pool {0..p-1, p, p+1}.
fn shift_configs(p: u64) -> Vec<(Vec<i64>, Vec<i64>)> {
    let pool: Vec<i64> = (0..p as i64 + 2).collect();
    fn multisets(pool: &[i64], k: usize, from: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in from..pool.len() {
            cur.push(pool[i]);
            multisets(pool, k, i, cur, out);
            cur.pop();
        }
    }
    let ms = |k: usize| {
        let mut out = Vec::new();
        multisets(&pool, k, 0, &mut Vec::new(), &mut out);
        out
    };
    let mut configs = Vec::new();
    for total in 1..=3usize {
        for nn in 0..=total {
            for h in ms(nn) {
                for hp in ms(total - nn) {
                    configs.push((h.clone(), hp));
                }
            }
        }
    }
    configs
}

pub fn eps_zero_vanishing(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite corr-pp vanishing");
    rep.key(&["p", "n"]);
    let grid: &[(u64, u32)] = if cfg.quick { &[(5, 2), (7, 2)] } else { &[(5, 2), (5, 3), (7, 2), (7, 3)] };
    let mut total_violations = 0u64;
    let mut worst = 0.0f64;
    for &(p, n) in grid {
        let q = p.pow(n);
        let pn1 = q / p;
        let (mut cases, mut open, mut nonzero, mut violations) = (0u64, 0u64, 0u64, 0u64);
        let mut max_off = 0.0f64;
        for (h, hp) in shift_configs(p) {
            let s = ShiftMultiset::new(&h, &hp, q);
            let ctx = PpContext::new(p, n, &s)?;
            let balanced = s.balanced_mod3();
            for c in 0..q {
                let v = ctx.eps_zero_term(1, c as i64, Engine::Exact)?;
                let is_zero = match &v.exact {
                    Some(x) => x.is_zero(),
                    None => v.approx.norm() <= 1e-8,
                };
                cases += 1;
                if balanced && c % pn1 == 0 {
                    open += 1;
                    nonzero += !is_zero as u64;
                } else {
                    max_off = max_off.max(v.approx.norm());
                    violations += !is_zero as u64;
                }
            }
        }
        total_violations += violations;
        worst = worst.max(max_off);
        rep.row(json!({"p": p, "n": n, "cases": cases, "conditions_hold": open,
            "nonzero_when_conditions_hold": nonzero, "violations": violations, "max_abs_off_conditions": max_off}));
    }
    rep.check("zero whenever conditions fail", total_violations == 0, total_violations, 0, "exact (1e-8 floating)");
    for (p, expect) in [(5u64, 500i64), (7, 2058)] {
        let s = ShiftMultiset::new(&[0], &[0], p * p);
        let v = PpContext::new(p, 2, &s)?.eps_zero_term(1, 0, Engine::Exact)?;
        let got = v.exact.as_ref().and_then(|x| x.as_integer());
        rep.check(format!("witness p = {p}"), got == Some(expect), got, expect, "exact");
    }
    Ok(rep)
}

/// Prime powers p^n <= max with p > 3, n >= 2.
fn prime_powers(max: u64) -> Vec<(u64, u32)> {
    let mut v = Vec::new();
    for p in (5..).take_while(|p| p * p <= max).filter(|&p| is_prime(p)) {
        let mut n = 2;
        while p.pow(n) <= max {
            v.push((p, n));
            n += 1;
        }
    }
    v
}

pub fn decomposition_identity(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite corr-pp decomposition");
    rep.key(&["sample"]);
    let mut r = rng(cfg, 7);
    let (samples, max) = if cfg.quick { (10, 1000) } else { (50, 5000) };
    let pps = prime_powers(max);
    let mut failures = 0u64;
    let mut worst_float = 0.0f64;
    for i in 0..samples {
        let (p, n) = *pps.choose(&mut r).unwrap();
        let q = p.pow(n);
        let k = r.gen_range(1..=2usize);
        let nn = r.gen_range(0..=k);
        let h = random_shifts(&mut r, nn, q);
        let hp = random_shifts(&mut r, k - nn, q);
        let a = random_unit(&mut r, q);
        let c = if r.gen_bool(0.3) { 0 } else { r.gen_range(0..q) as i64 };
        let ctx = PpContext::new(p, n, &ShiftMultiset::new(&h, &hp, q))?;
        let d = ctx.decomposition(a, c, Engine::Exact)?;
        let ok = d.direct.exact_eq(&d.reconstructed) == Some(true);
        failures += !ok as u64;
        let fe = (d.direct.approx - d.float_reconstruction).norm();
        worst_float = worst_float.max(fe);
        rep.row(json!({"sample": i, "p": p, "n": n, "a": a, "c": c, "h": h, "hp": hp, "equal": ok,
            "direct_re": d.direct.approx.re, "direct_im": d.direct.approx.im, "float_error": fe}));
    }
    rep.check("direct = reconstruction", failures == 0, failures, 0, "exact");
    rep.fit("max float reconstruction error", worst_float);
    Ok(rep)
}

pub fn combo_exhaustive(_cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite combo");
    rep.key(&["p", "qparts"]);
    let pairs: [(u64, [[u64; 2]; 4]); 2] =
        [(5, [[2, 3], [3, 4], [2, 9], [7, 8]]), (7, [[2, 3], [3, 4], [4, 5], [5, 9]])];
    let mut bad = 0usize;
    for (p, list) in pairs {
        for qp in list {
            let c = combo_check(p, &qp)?;
            bad += c.counterexamples.len();
            rep.row(&c);
        }
    }
    rep.check("counterexamples", bad == 0, bad, 0, "exact count");
    Ok(rep)
}

/// Factors of T with the transport exponents swapped; used as a negative control.
fn swapped_product(a: i64, b: i64, c: i64, h: &[i64], hp: &[i64], q: u64) -> Result<crate::cyclo::Cyclo> {
    let f = factorize(q);
    let mut acc = crate::cyclo::Cyclo::from_int(q, 1);
    for qj in f.prime_powers() {
        let r = mod_inv(((q / qj) % qj) as i64, qj)?;
        let r3 = mul_mod(mul_mod(r, r, qj), r, qj);
        let aj = mul_mod(reduce(a, qj), r, qj) as i64;
        let bj = mul_mod(reduce(b, qj), r3, qj) as i64;
        let v = t_sum(aj, bj, c, h, hp, qj, Engine::Exact)?;
        acc = acc.mul(&v.exact.unwrap().lift(q));
    }
    Ok(acc)
}

pub fn complete_t_factorization(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite vdc factorization");
    rep.key(&["sample"]);
    let mut r = rng(cfg, 9);
    let (samples, max) = if cfg.quick { (10, 2000) } else { (50, 10_000) };
    let (mut failures, mut swapped_differs, mut swapped_tested) = (0u64, 0u64, 0u64);
    for i in 0..samples {
        let q = random_composite(&mut r, max);
        let f = factorize(q);
        let phi = f.phi();
        let kmax = if phi * phi <= 4_000_000 { 3 } else { 2 };
        let k = r.gen_range(1..=kmax);
        let nn = r.gen_range(0..=k);
        let h = random_shifts(&mut r, nn, q);
        let hp = random_shifts(&mut r, k - nn, q);
        let a = random_unit(&mut r, q);
        let b = random_unit(&mut r, q);
        let c = r.gen_range(0..q) as i64;
        let t = complete_t(a, b, c, &h, &hp, &f, Engine::Exact)?;
        let ok = t.factorization_holds() == Some(true);
        failures += !ok as u64;
        let mut swapped_equal = json!(null);
        if t.full.exact.as_ref().is_some_and(|x| !x.is_zero()) {
            let s = swapped_product(a, b, c, &h, &hp, q)?;
            let eq = t.full.exact.as_ref() == Some(&s);
            swapped_tested += 1;
            swapped_differs += !eq as u64;
            swapped_equal = json!(eq);
        }
        rep.row(json!({"sample": i, "q": q, "a": a, "b": b, "c": c, "h": h, "hp": hp, "equal": ok,
            "re": t.full.approx.re, "im": t.full.approx.im, "swapped_equal": swapped_equal}));
    }
    rep.check("full sum = product of factors", failures == 0, failures, 0, "exact");
    rep.check(
        "swapped transport detected",
        swapped_tested == 0 || swapped_differs > 0,
        swapped_differs,
        swapped_tested,
        "at least one difference",
    );
    Ok(rep)
}

pub fn exponent_plan(_cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite vdc exponents");
    rep.key(&["l"]);
    let delta = Q128::new(1, 100_000);
    let lambda = Q128::new(1, 100_000);
    let eta = Q128::new(1, 1000);
    let (mut exact_fail, mut worst) = (0u64, 0.0f64);
    for l in 2..=10u32 {
        let plan = exponent_budget(l, delta, lambda, eta)?;
        let fsum: f64 = {
            let w = plan.windows_f64();
            w[0].upper_f64 + w[1..].iter().map(|x| x.lower_f64).sum::<f64>()
        };
        let target = 0.5 + ratio_f64(&plan.sigma);
        let err = (fsum - target).abs();
        worst = worst.max(err);
        exact_fail += !plan.identity_holds() as u64;
        rep.row(json!({"l": l, "gamma": plan.gamma.to_string(), "sigma": plan.sigma.to_string(),
            "window_sum": plan.window_sum.to_string(), "gamma_max": plan.gamma_max.to_string(),
            "feasible": plan.feasible, "float_error": err}));
    }
    rep.check("window sum = 1/2 + sigma (exact)", exact_fail == 0, exact_fail, 0, "exact");
    rep.check_le("window sum = 1/2 + sigma (floating)", worst, 1e-12);
    let g5 = gamma_max(5);
    rep.check("gamma_max(5)", g5 == Q128::new(1, 1044), g5.to_string(), "1/1044", "exact rational");
    Ok(rep)
}

pub fn equidistribution_trend(_cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite sqfree");
    rep.key(&["x"]);
    let q = 2310u64;
    let mut norm = Vec::new();
    let mut at_million = None;
    for x in [100_000u64, 1_000_000, 10_000_000] {
        let m = max_delta(x, q)?;
        let nv = m.value * q as f64 / x as f64;
        if x == 1_000_000 {
            at_million = Some(m.value);
        }
        norm.push(nv);
        rep.row(json!({"x": x, "q": q, "a": m.a, "max_delta": m.value, "exact": m.exact, "normalized": nv}));
    }
    let decreasing = norm.windows(2).all(|w| w[1] < w[0]);
    rep.check("normalized max delta strictly decreasing", decreasing, &norm, "strictly decreasing", "strict");
    let half = 0.5 * 1e6 / q as f64;
    let v = at_million.unwrap();
    rep.check("max delta at 10^6 below X/(2q)", v < half, v, half, "strict");
    Ok(rep)
}

pub fn dickman_density(_cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("suite density");
    rep.key(&["y_max", "smooth_bound"]);
    let d = density_experiment(1_000_000, 50)?;
    let dev = d.relative_deviation;
    rep.check("relative deviation", dev.abs() <= 0.1, dev, 0.0, 0.1);
    rep.row(&d);
    let r2 = dickman_rho(2.0)?;
    rep.check_close("rho(2) = 1 - ln 2", r2, 1.0 - std::f64::consts::LN_2, 1e-8);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope", &SuiteConfig::default()), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn shift_config_count() {
        // pool of 7: multisets of size 1, 2, 3 split into (h, h')
        let c = shift_configs(5);
        let m = |k: u64| (1..=k).fold(1u64, |acc, i| acc * (7 + i - 1) / i);
        let expect: u64 = (1..=3).map(|t| (0..=t).map(|nn| m(nn) * m(t - nn)).sum::<u64>()).sum();
        assert_eq!(c.len() as u64, expect);
    }

    #[test]
    fn degeneracy_count_oracle() {
        assert!(degenerate_by_count(0, &[1, 1, 1], &[], 11));
        assert!(degenerate_by_count(0, &[2], &[13], 11));
        assert!(!degenerate_by_count(1, &[2], &[2], 11));
        assert!(!degenerate_by_count(0, &[2], &[3], 11));
    }
}
