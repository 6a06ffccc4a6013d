// SPDX-License-Identifier: Apache-2.0
//! `k2lab`: runs experiments and emits JSON or CSV reports.
//!
//! Exit codes: 0 all checks pass, 1 some check fails, 2 usage or input error,
//! 3 budget exceeded.

use std::collections::BTreeSet;
use std::io::Write;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use k2lab::corrpp::{classify_pp, corr_sum_pp, PpContext, DECOMPOSITION_BUDGET};
use k2lab::corrprime::{classify_prime, correlation_sum, normalized_ratio, ShiftMultiset};
use k2lab::error::Error;
use k2lab::expsum::{explicit_sweep, k2, k2_direct, Engine, SumValue};
use k2lab::report::{flatten_row, ExperimentReport};
use k2lab::sqfree::{delta, delta_all_coprime, density_experiment, main_theorem_experiment, max_delta, Rational};
use k2lab::suites::{run_suite, SuiteConfig};
use k2lab::vdc::{
    evaluate_budget, exponent_budget, h_tuple_bad_count, incomplete_t, parse_ratio, vdc_decompose, BudgetVariant,
    FactorizationPlan, Interval,
};

#[derive(Parser, Debug)]
#[command(name = "k2lab", version, about = "Quadratic Kloosterman sum experiments", args_override_self = true)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for random sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON file with default values for flags; explicit flags win.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Record wall-clock runtime in the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EngineArg {
    Exact,
    Float,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Engine {
        match e {
            EngineArg::Exact => Engine::Exact,
            EngineArg::Float => Engine::Float,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Complete sums K2(A,B;Q).
    #[command(subcommand)]
    K2(K2Cmd),
    /// Correlations of K2.
    #[command(subcommand)]
    Corr(CorrCmd),
    /// Shifting along a factorization of the modulus.
    #[command(subcommand)]
    Vdc(VdcCmd),
    /// Parameter plans.
    #[command(subcommand)]
    Plan(PlanCmd),
    /// Squarefree integers in progressions.
    #[command(subcommand)]
    Sqfree(SqfreeCmd),
    /// Run a named verification suite.
    Suite(SuiteArgs),
}

#[derive(Subcommand, Debug)]
enum K2Cmd {
    /// Evaluate K2(A,B;Q) and compare with direct summation.
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, allow_hyphen_values = true)]
        b: i64,
        #[arg(long)]
        q: u64,
        #[arg(long, value_enum, default_value_t = EngineArg::Exact)]
        engine: EngineArg,
    },
    /// Closed form against direct summation for all (a,b) modulo p^n.
    Verify {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value_t = EngineArg::Exact)]
        engine: EngineArg,
    },
}

#[derive(Subcommand, Debug)]
enum CorrCmd {
    /// Correlation modulo a prime.
    Prime {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        /// Shifts h (comma separated).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        h: Vec<i64>,
        /// Conjugated shifts h'.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        hc: Vec<i64>,
        /// Additive character index t.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        psi: i64,
        #[arg(long, value_enum, default_value_t = EngineArg::Exact)]
        engine: EngineArg,
    },
    /// Correlation modulo p^n with its stationary-phase decomposition.
    Pp {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        c: i64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        h: Vec<i64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        hc: Vec<i64>,
        #[arg(long, value_enum, default_value_t = EngineArg::Exact)]
        engine: EngineArg,
    },
}

#[derive(Subcommand, Debug)]
enum VdcCmd {
    /// Both sides of the shifting inequality for T(b,M) over an interval.
    Run {
        /// Parts Q_0,Q_1,...,Q_L.
        #[arg(long, value_delimiter = ',')]
        parts: Vec<u64>,
        #[arg(long)]
        k: u64,
        #[arg(long, allow_hyphen_values = true)]
        b: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        j_start: i64,
        /// Interval length (default K).
        #[arg(long)]
        j_len: Option<u64>,
    },
    /// Correlation budget for a factorization, with its hypotheses.
    Budget {
        #[arg(long, value_delimiter = ',')]
        parts: Vec<u64>,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value = "squarefree")]
        variant: String,
        #[arg(long)]
        delta_prime: Option<f64>,
        /// Also count bad h-tuples for this divisor d of Q_0.
        #[arg(long)]
        bad_d: Option<u64>,
        #[arg(long, default_value_t = 0.5)]
        bad_c: f64,
    },
    /// Exponent windows (same as `plan exponents`).
    Plan(PlanArgs),
}

#[derive(Subcommand, Debug)]
enum PlanCmd {
    /// Exponent windows and the largest admissible gamma.
    Exponents(PlanArgs),
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[arg(long = "L", alias = "l")]
    l: u32,
    /// delta as a rational ("1/1000", "0.001").
    #[arg(long, default_value = "0")]
    delta: String,
    #[arg(long, default_value = "0")]
    lambda: String,
    #[arg(long, default_value = "0")]
    eta: String,
}

#[derive(Subcommand, Debug)]
enum SqfreeCmd {
    /// Delta(X; q, a), exact.
    Delta {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
    },
    /// Largest |Delta| over coprime classes.
    Max {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        q: u64,
    },
    /// Squarefree smooth count against the Dickman prediction.
    Density {
        #[arg(long)]
        ymax: u64,
        #[arg(long)]
        y: u64,
        #[arg(long, default_value_t = 0.1)]
        tolerance: f64,
    },
    /// max|Delta| along a ladder of X for several q.
    Theorem {
        #[arg(long, value_delimiter = ',')]
        ladder: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        q: Vec<u64>,
    },
}

#[derive(Args, Debug)]
struct SuiteArgs {
    name: String,
    /// Reduced grids and sample counts.
    #[arg(long)]
    quick: bool,
}

fn value_json(v: &SumValue) -> Value {
    let exact = v.exact.as_ref().map(|c| {
        let t: Vec<Value> = c.terms().into_iter().map(|(k, m)| json!([k, m])).collect();
        json!({"order": c.order(), "terms": t, "integer": c.as_integer()})
    });
    json!({"re": v.approx.re, "im": v.approx.im, "abs": v.approx.norm(), "exact": exact})
}

/// Exact equality when both are exact, else closeness.
fn compare(rep: &mut ExperimentReport, name: &str, x: &SumValue, y: &SumValue, tol: f64) {
    match x.exact_eq(y) {
        Some(eq) => rep.check(name, eq, value_json(x), value_json(y), "exact"),
        None => {
            let d = x.abs_diff(y);
            rep.check(name, d <= tol, value_json(x), value_json(y), tol)
        }
    };
}

fn k2_cmd(c: K2Cmd) -> Result<ExperimentReport, Error> {
    match c {
        K2Cmd::Eval { a, b, q, engine } => {
            let mut rep = ExperimentReport::new("k2 eval");
            rep.param("a", a).param("b", b).param("q", q).param("engine", format!("{engine:?}").to_lowercase());
            let e: Engine = engine.into();
            let v = k2(a, b, q, e)?;
            let d = k2_direct(a, b, q, e)?;
            rep.row(json!({"a": a, "b": b, "q": q, "value": value_json(&v)}));
            compare(&mut rep, "closed form vs direct", &v, &d, 1e-9 * (q as f64).sqrt().max(1.0));
            Ok(rep)
        }
        K2Cmd::Verify { p, n, engine } => {
            let mut rep = ExperimentReport::new("k2 verify");
            rep.param("p", p).param("n", n);
            let s = explicit_sweep(p, n, engine.into())?;
            rep.check("mismatches", s.mismatches == 0, s.mismatches, 0, if s.engine == Engine::Exact { json!("exact") } else { json!(1e-6) });
            rep.row(&s);
            Ok(rep)
        }
    }
}

fn corr_cmd(c: CorrCmd) -> Result<ExperimentReport, Error> {
    match c {
        CorrCmd::Prime { p, a, h, hc, psi, engine } => {
            let mut rep = ExperimentReport::new("corr prime");
            rep.param("p", p).param("a", a).param("h", &h).param("hc", &hc).param("psi", psi);
            let s = ShiftMultiset::new(&h, &hc, p);
            let class = classify_prime(psi, &s)?;
            let v = correlation_sum(a, psi, &s, engine.into())?;
            let ratio = normalized_ratio(v.approx, class, p, s.total());
            rep.row(json!({"p": p, "value": value_json(&v), "class": class, "ratio": ratio}));
            if v.is_exact() {
                let f = correlation_sum(a, psi, &s, Engine::Float)?;
                let tol = 1e-9 * (p as f64).powf(s.total() as f64 / 2.0 + 1.0);
                rep.check_close("exact vs floating", v.approx.norm(), f.approx.norm(), tol);
            }
            Ok(rep)
        }
        CorrCmd::Pp { p, n, a, c, h, hc, engine } => {
            let mut rep = ExperimentReport::new("corr pp");
            rep.param("p", p).param("n", n).param("a", a).param("c", c).param("h", &h).param("hc", &hc);
            let e: Engine = engine.into();
            let v = corr_sum_pp(a, c, &h, &hc, p, n, e)?;
            let q = p.pow(n);
            let s = ShiftMultiset::new(&h, &hc, q);
            let class = classify_pp(p, n, c, &s)?;
            let ctx = PpContext::new(p, n, &s)?;
            let zero = ctx.eps_zero_term(a, c, e)?;
            rep.row(json!({"p": p, "n": n, "value": value_json(&v), "class": class, "eps_zero_term": value_json(&zero)}));
            if q <= DECOMPOSITION_BUDGET {
                let d = ctx.decomposition(a, c, e)?;
                compare(&mut rep, "direct vs decomposition", &d.direct, &d.reconstructed, 1e-6 * (q as f64).powf(s.total() as f64 / 2.0 + 1.0));
            }
            Ok(rep)
        }
    }
}

fn plan_cmd(a: PlanArgs) -> Result<ExperimentReport, Error> {
    let mut rep = ExperimentReport::new("plan exponents");
    rep.param("L", a.l).param("delta", &a.delta).param("lambda", &a.lambda).param("eta", &a.eta);
    rep.key(&["index"]);
    let plan = exponent_budget(a.l, parse_ratio(&a.delta)?, parse_ratio(&a.lambda)?, parse_ratio(&a.eta)?)?;
    for (i, w) in plan.windows_f64().into_iter().enumerate() {
        rep.row(json!({"index": i, "window": w}));
    }
    rep.param("gamma", plan.gamma.to_string()).param("sigma", plan.sigma.to_string());
    rep.param("gamma_max", plan.gamma_max.to_string()).param("window_sum", plan.window_sum.to_string());
    rep.check(
        "window sum = 1/2 + sigma",
        plan.identity_holds(),
        plan.window_sum.to_string(),
        (plan.sigma + k2lab::vdc::Q128::new(1, 2)).to_string(),
        "exact rational",
    );
    rep.check("gamma admissible", plan.feasible, plan.gamma.to_string(), plan.gamma_max.to_string(), "0 < gamma_max, gamma <= gamma_max");
    Ok(rep)
}

fn vdc_cmd(c: VdcCmd) -> Result<ExperimentReport, Error> {
    match c {
        VdcCmd::Run { parts, k, b, m, j_start, j_len } => {
            let mut rep = ExperimentReport::new("vdc run");
            let len = j_len.unwrap_or(k);
            rep.param("parts", &parts).param("k", k).param("b", b).param("m", m).param("j_start", j_start).param("j_len", len);
            rep.key(&["h"]);
            let plan = FactorizationPlan::new(&parts, k)?;
            let j = Interval::new(j_start, len);
            let d = vdc_decompose(&plan, b, m, j)?;
            for t in &d.terms {
                rep.row(t);
            }
            let direct = incomplete_t(b, m, j, plan.q, Engine::Float)?.approx.norm();
            rep.check_close("lhs = |T(b,M)| recomputed", d.lhs, direct, 1e-9 * (len as f64).max(1.0));
            rep.param("lhs", d.lhs).param("rhs", d.rhs).param("h_sum", d.h_sum);
            rep.fit("vdc_constant", d.fitted_constant);
            Ok(rep)
        }
        VdcCmd::Budget { parts, k, variant, delta_prime, bad_d, bad_c } => {
            let mut rep = ExperimentReport::new("vdc budget");
            rep.param("parts", &parts).param("k", k).param("variant", &variant);
            let v = BudgetVariant::from_str(&variant)?;
            let b = evaluate_budget(&parts, k, v, delta_prime)?;
            for h in &b.hypotheses {
                rep.check(format!("hypothesis: {}", h.name), h.holds, h.holds, true, "holds");
            }
            rep.row(json!({"kind": "budget", "budget": b}));
            if let Some(d) = bad_d {
                let bc = h_tuple_bad_count(d, parts[0], &parts[1..], k as u64, bad_c)?;
                rep.check_le("bad h-tuples within bound", bc.count as f64, bc.bound);
                rep.row(json!({"kind": "bad_count", "bad_count": bc}));
            }
            Ok(rep)
        }
        VdcCmd::Plan(a) => plan_cmd(a),
    }
}

fn sqfree_cmd(c: SqfreeCmd) -> Result<ExperimentReport, Error> {
    match c {
        SqfreeCmd::Delta { x, q, a } => {
            let mut rep = ExperimentReport::new("sqfree delta");
            rep.param("x", x).param("q", q).param("a", a);
            let d = delta(x, q, a)?;
            rep.row(&d);
            let all = delta_all_coprime(x, q)?;
            let mut sum = Rational::from_integer(0);
            for v in &all {
                sum += Rational::from_str(&v.exact).map_err(|_| Error::InvalidArgument(v.exact.clone()))?;
            }
            rep.check("coprime deltas sum to zero", sum == Rational::from_integer(0), sum.to_string(), "0", "exact");
            Ok(rep)
        }
        SqfreeCmd::Max { x, q } => {
            let mut rep = ExperimentReport::new("sqfree max");
            rep.param("x", x).param("q", q);
            let m = max_delta(x, q)?;
            let trivial = x as f64 / q as f64 + 1.0;
            rep.check_le("max |Delta| <= X/q + 1", m.value, trivial);
            rep.row(&m);
            Ok(rep)
        }
        SqfreeCmd::Density { ymax, y, tolerance } => {
            let mut rep = ExperimentReport::new("sqfree density");
            rep.param("ymax", ymax).param("y", y).param("tolerance", tolerance);
            let d = density_experiment(ymax, y)?;
            rep.check("relative deviation", d.relative_deviation.abs() <= tolerance, d.relative_deviation, 0.0, tolerance);
            rep.row(&d);
            Ok(rep)
        }
        SqfreeCmd::Theorem { ladder, q } => {
            let mut rep = ExperimentReport::new("sqfree theorem");
            rep.param("ladder", &ladder).param("q", &q);
            rep.key(&["q", "x"]);
            let t = main_theorem_experiment(&ladder, &q)?;
            for r in &t.rows {
                rep.row(r);
            }
            for f in &t.fits {
                if f.asserted {
                    rep.check(format!("decreasing for q = {}", f.q), f.decreasing, f.decreasing, true, "strict");
                }
                rep.fit(&format!("exponent q={}", f.q), f.exponent);
            }
            Ok(rep)
        }
    }
}

fn dispatch(cmd: Cmd, seed: u64) -> Result<ExperimentReport, Error> {
    match cmd {
        Cmd::K2(c) => k2_cmd(c),
        Cmd::Corr(c) => corr_cmd(c),
        Cmd::Vdc(c) => vdc_cmd(c),
        Cmd::Plan(PlanCmd::Exponents(a)) => plan_cmd(a),
        Cmd::Sqfree(c) => sqfree_cmd(c),
        Cmd::Suite(s) => run_suite(&s.name, &SuiteConfig { seed, quick: s.quick }),
    }
}

fn render(rep: &ExperimentReport, format: Format) -> Result<String, String> {
    match format {
        Format::Json => Ok(rep.to_json() + "\n"),
        Format::Csv => {
            let flat: Vec<_> = rep.rows.iter().map(flatten_row).collect();
            let cols: BTreeSet<String> = flat.iter().flat_map(|r| r.keys().cloned()).collect();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&cols).map_err(|e| e.to_string())?;
            for r in &flat {
                w.write_record(cols.iter().map(|c| r.get(c).map(String::as_str).unwrap_or("")))
                    .map_err(|e| e.to_string())?;
            }
            String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
        }
    }
}

/// Flag tokens from a JSON config object: {"seed": 3, "quick": true} -> --seed 3 --quick.
fn config_tokens(path: &str) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("invalid config {path}: {e}"))?;
    let obj = v.as_object().ok_or_else(|| format!("config {path} is not a JSON object"))?;
    let mut out = Vec::new();
    for (k, v) in obj {
        if k == "config" {
            continue;
        }
        let flag = format!("--{}", k.replace('_', "-"));
        match v {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| x.as_str().map(str::to_string).unwrap_or_else(|| x.to_string())).collect();
                out.push(format!("{flag}={}", parts.join(",")));
            }
            Value::String(s) => out.push(format!("{flag}={s}")),
            other => out.push(format!("{flag}={other}")),
        }
    }
    Ok(out)
}

/// Places config-derived flags right after the subcommand path so that
/// explicit flags, which come later, take precedence.
fn merge_config(argv: Vec<String>, first: &Cli) -> Result<Vec<String>, String> {
    let Some(path) = &first.global.config else { return Ok(argv) };
    let path_names: Vec<&str> = match &first.cmd {
        Cmd::K2(K2Cmd::Eval { .. }) => vec!["k2", "eval"],
        Cmd::K2(K2Cmd::Verify { .. }) => vec!["k2", "verify"],
        Cmd::Corr(CorrCmd::Prime { .. }) => vec!["corr", "prime"],
        Cmd::Corr(CorrCmd::Pp { .. }) => vec!["corr", "pp"],
        Cmd::Vdc(VdcCmd::Run { .. }) => vec!["vdc", "run"],
        Cmd::Vdc(VdcCmd::Budget { .. }) => vec!["vdc", "budget"],
        Cmd::Vdc(VdcCmd::Plan(_)) => vec!["vdc", "plan"],
        Cmd::Plan(_) => vec!["plan", "exponents"],
        Cmd::Sqfree(SqfreeCmd::Delta { .. }) => vec!["sqfree", "delta"],
        Cmd::Sqfree(SqfreeCmd::Max { .. }) => vec!["sqfree", "max"],
        Cmd::Sqfree(SqfreeCmd::Density { .. }) => vec!["sqfree", "density"],
        Cmd::Sqfree(SqfreeCmd::Theorem { .. }) => vec!["sqfree", "theorem"],
        Cmd::Suite(_) => vec!["suite"],
    };
    let mut rest = argv[1..].to_vec();
    let mut pos = 0;
    for name in &path_names {
        let i = rest[pos..].iter().position(|t| t == name).ok_or("subcommand not found")? + pos;
        rest.remove(i);
        pos = i;
    }
    let mut out = vec![argv[0].clone()];
    out.extend(path_names.iter().map(|s| s.to_string()));
    out.extend(config_tokens(path)?);
    out.extend(rest);
    Ok(out)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let first = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cli = match merge_config(argv, &first).map(Cli::try_parse_from) {
        Ok(Ok(c)) => c,
        Ok(Err(e)) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let t0 = Instant::now();
    let mut rep = match dispatch(cli.cmd, cli.global.seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_budget() { 3 } else { 2 });
        }
    };
    rep.sort_rows();
    rep.runtime_ms = if cli.global.timing { t0.elapsed().as_millis() as u64 } else { 0 };
    let text = match render(&rep, cli.global.format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(path) = &cli.global.out {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("error: cannot write {path}: {e}");
            return ExitCode::from(2);
        }
    }
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes());
    ExitCode::from(if rep.all_pass() { 0 } else { 1 })
}
