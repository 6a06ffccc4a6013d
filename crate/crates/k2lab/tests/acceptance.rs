// SPDX-License-Identifier: Apache-2.0
//! Acceptance criteria 1-12 at full size. Each test prints one PASS/FAIL line
//! with its runtime next to the expected budget, then asserts.

use std::time::Instant;

use k2lab::report::ExperimentReport;
use k2lab::suites::{self, SuiteConfig};

fn run(id: u32, title: &str, budget_s: f64, f: fn(&SuiteConfig) -> k2lab::error::Result<ExperimentReport>) {
    let cfg = SuiteConfig { seed: 0, quick: false };
    let t0 = Instant::now();
    let rep = f(&cfg).unwrap_or_else(|e| panic!("criterion {id} errored: {e}"));
    let secs = t0.elapsed().as_secs_f64();
    let verdict = if rep.all_pass() { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {title}: {verdict} ({secs:.1} s, expected < {budget_s} s)");
    for c in &rep.checks {
        println!(
            "    {} {}: lhs={} rhs={} tol={}",
            if c.pass { "ok  " } else { "FAIL" },
            c.name,
            c.lhs,
            c.rhs,
            c.tolerance
        );
    }
    for (k, v) in &rep.fitted_constants {
        println!("    fitted {k} = {v}");
    }
    assert!(rep.all_pass(), "criterion {id} failed: {:?}", rep.failed());
}

#[test]
fn criterion_01_explicit_formula() {
    run(1, "explicit formula equals direct sum", 60.0, suites::explicit_formula);
}

#[test]
fn criterion_02_crt_multiplicativity() {
    run(2, "CRT multiplicativity", 10.0, suites::crt_multiplicativity);
}

#[test]
fn criterion_03_pointwise_bounds() {
    run(3, "pointwise bounds", 60.0, suites::pointwise_bounds);
}

#[test]
fn criterion_04_parseval_inversion() {
    run(4, "Parseval and inversion", 30.0, suites::parseval_inversion);
}

#[test]
fn criterion_05_prime_dichotomy() {
    run(5, "prime correlation dichotomy", 300.0, suites::prime_dichotomy);
}

#[test]
fn criterion_06_eps_zero_vanishing() {
    run(6, "eps = 0 term vanishing", 120.0, suites::eps_zero_vanishing);
}

#[test]
fn criterion_07_decomposition_identity() {
    run(7, "stationary-phase decomposition", 120.0, suites::decomposition_identity);
}

#[test]
fn criterion_08_combo_exhaustive() {
    run(8, "mod-3 balance forces p | h", 10.0, suites::combo_exhaustive);
}

#[test]
fn criterion_09_complete_t_factorization() {
    run(9, "complete T factorization", 30.0, suites::complete_t_factorization);
}

#[test]
fn criterion_10_exponent_plan() {
    run(10, "exponent plan", 1.0, suites::exponent_plan);
}

#[test]
fn criterion_11_equidistribution_trend() {
    run(11, "squarefree equidistribution trend", 120.0, suites::equidistribution_trend);
}

#[test]
fn criterion_12_dickman_density() {
    run(12, "squarefree smooth density", 30.0, suites::dickman_density);
}
