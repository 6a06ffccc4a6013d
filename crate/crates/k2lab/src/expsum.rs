// SPDX-License-Identifier: Apache-2.0
//! Evaluation of K2(A,B;Q) = sum over units x mod Q of e_Q(A x^{-2} + B x).

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::cyclo::{root_exact_angle, Cyclo, EXACT_CAP};
use crate::error::{Error, Result};
use crate::modarith::{
    cube_roots, ext_gcd, factorize, gcd, hensel_lift_cube, is_prime, jacobi, mod_inv, mul_mod, reduce,
    FactoredModulus, FastMod,
};
use crate::numeric::{sum_complex, ComplexSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Float,
    Exact,
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" => Ok(Engine::Float),
            "exact" => Ok(Engine::Exact),
            _ => Err(Error::InvalidArgument(format!("unknown engine '{s}'"))),
        }
    }
}

/// Value of an exponential sum: a complex approximation and, from the
/// exact engine, the element of Z[zeta_Q] it came from.
#[derive(Debug, Clone)]
pub struct SumValue {
    pub approx: Complex64,
    pub exact: Option<Cyclo>,
}

impl SumValue {
    pub fn float(z: Complex64) -> SumValue {
        SumValue { approx: z, exact: None }
    }

    pub fn from_exact(c: Cyclo) -> SumValue {
        SumValue { approx: c.to_complex(), exact: Some(c) }
    }

    pub fn real(x: f64) -> SumValue {
        SumValue::float(Complex64::new(x, 0.0))
    }

    pub fn order(&self) -> Option<u64> {
        self.exact.as_ref().map(|c| c.order())
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn add(&self, o: &SumValue) -> SumValue {
        match (&self.exact, &o.exact) {
            (Some(a), Some(b)) => SumValue::from_exact(a.add(b)),
            _ => SumValue::float(self.approx + o.approx),
        }
    }

    pub fn mul(&self, o: &SumValue) -> SumValue {
        match (&self.exact, &o.exact) {
            (Some(a), Some(b)) => SumValue::from_exact(a.mul(b)),
            _ => SumValue::float(self.approx * o.approx),
        }
    }

    pub fn scale(&self, c: i64) -> SumValue {
        match &self.exact {
            Some(a) => SumValue::from_exact(a.scale(c)),
            None => SumValue::float(self.approx * c as f64),
        }
    }

    pub fn conj(&self) -> SumValue {
        match &self.exact {
            Some(a) => SumValue::from_exact(a.conj()),
            None => SumValue::float(self.approx.conj()),
        }
    }

    /// Exact equality when both sides are exact, otherwise None.
    pub fn exact_eq(&self, o: &SumValue) -> Option<bool> {
        match (&self.exact, &o.exact) {
            (Some(a), Some(b)) => Some(a == b),
            _ => None,
        }
    }

    pub fn abs_diff(&self, o: &SumValue) -> f64 {
        (self.approx - o.approx).norm()
    }
}

fn check_exact_order(q: u64) -> Result<()> {
    if q > EXACT_CAP {
        Err(Error::ExactEngineOverflow { order: q, cap: EXACT_CAP })
    } else {
        Ok(())
    }
}

/// e_Q(x).
pub fn root_of_unity(x: i64, q: u64, engine: Engine) -> Result<SumValue> {
    if q == 0 {
        return Err(Error::InvalidArgument("modulus 0".into()));
    }
    match engine {
        Engine::Exact => {
            check_exact_order(q)?;
            Ok(SumValue::from_exact(Cyclo::root(q, x)))
        }
        Engine::Float => Ok(SumValue::float(root_exact_angle(reduce(x, q), q))),
    }
}

/// sum over x mod p of e_p(x^2).
pub fn gauss_quadratic(p: u64, engine: Engine) -> Result<SumValue> {
    if p % 2 == 0 || !is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not an odd prime")));
    }
    let mut gr = vec![0i64; p as usize];
    for x in 0..p {
        gr[mul_mod(x, x, p) as usize] += 1;
    }
    group_ring_value(p, &gr, engine)
}

fn group_ring_value(q: u64, gr: &[i64], engine: Engine) -> Result<SumValue> {
    match engine {
        Engine::Exact => {
            check_exact_order(q)?;
            Ok(SumValue::from_exact(Cyclo::from_group_ring(q, gr)))
        }
        Engine::Float => {
            let z = sum_complex(
                gr.iter()
                    .enumerate()
                    .filter(|(_, &c)| c != 0)
                    .map(|(k, &c)| root_exact_angle(k as u64, q) * c as f64),
            );
            Ok(SumValue::float(z))
        }
    }
}

/// Units of Z/QZ with the phase index of x^{-2}.
pub(crate) fn unit_inverse_squares(q: u64) -> Vec<(u64, u64)> {
    if q == 1 {
        return vec![(0, 0)];
    }
    (1..q)
        .filter(|&x| gcd(x, q) == 1)
        .map(|x| {
            let xi = mod_inv(x as i64, q).unwrap();
            (x, mul_mod(xi, xi, q))
        })
        .collect()
}

fn require_unit(a: i64, q: u64) -> Result<u64> {
    let ar = reduce(a, q);
    if gcd(ar, q) != 1 {
        return Err(Error::NotAUnit { x: a, modulus: q });
    }
    Ok(ar)
}

/// Group-ring vector of the direct sum: gr[k] = #{x unit : A x^{-2} + B x = k}.
pub fn k2_direct_group_ring(a: i64, b: i64, q: u64) -> Result<Vec<i64>> {
    let ar = require_unit(a, q)?;
    let br = reduce(b, q);
    let mut gr = vec![0i64; q as usize];
    for (x, xi2) in unit_inverse_squares(q) {
        let k = (mul_mod(ar, xi2, q) + mul_mod(br, x, q)) % q;
        gr[k as usize] += 1;
    }
    Ok(gr)
}

/// K2(A,B;Q) by direct summation over units.
pub fn k2_direct(a: i64, b: i64, q: u64, engine: Engine) -> Result<SumValue> {
    if q == 0 {
        return Err(Error::InvalidArgument("modulus 0".into()));
    }
    let gr = k2_direct_group_ring(a, b, q)?;
    group_ring_value(q, &gr, engine)
}

/// The full row b -> K2(A,b;Q), b = 0..Q-1, via one inverse FFT.
pub fn k2_row(a: i64, q: u64) -> Result<Vec<Complex64>> {
    let ar = require_unit(a, q)?;
    let n = q as usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (x, xi2) in unit_inverse_squares(q) {
        buf[x as usize] += root_exact_angle(mul_mod(ar, xi2, q), q);
    }
    if n > 1 {
        let mut planner = FftPlanner::new();
        planner.plan_fft_inverse(n).process(&mut buf);
    }
    Ok(buf)
}

/// The row b -> K2(A,b;Q) as exact values, each by direct summation.
pub fn k2_row_exact(a: i64, q: u64) -> Result<Vec<Cyclo>> {
    check_exact_order(q)?;
    let ar = require_unit(a, q)?;
    let units = unit_inverse_squares(q);
    let basis = crate::cyclo::basis(q);
    let mut gr = vec![0i64; q as usize];
    let mut out = Vec::with_capacity(q as usize);
    for b in 0..q {
        gr.iter_mut().for_each(|c| *c = 0);
        for &(x, xi2) in &units {
            gr[((mul_mod(ar, xi2, q) + mul_mod(b, x, q)) % q) as usize] += 1;
        }
        out.push(Cyclo::from_group_ring_with(basis.clone(), &gr));
    }
    Ok(out)
}

/// Lifted critical points y mod p^n with y^3 = (2a)^{-1} b.
pub fn critical_points(a: u64, b: u64, p: u64, n: u32) -> Vec<u64> {
    let q = p.pow(n);
    if b % p == 0 {
        return vec![];
    }
    let target = mul_mod(mod_inv((2 * a) as i64, q).unwrap(), b % q, q);
    let half = (n / 2).max(1);
    let mut ys: Vec<u64> = cube_roots(target as i64, p, half)
        .unwrap()
        .into_iter()
        .map(|y| hensel_lift_cube(y, target, q))
        .collect();
    ys.sort_unstable();
    ys
}

fn explicit_checks(a: i64, p: u64, n: u32) -> Result<(u64, u64)> {
    if p <= 3 || !is_prime(p) {
        return Err(Error::SmallPrime(p));
    }
    if n < 2 {
        return Err(Error::BadExponent(n));
    }
    let q = p
        .checked_pow(n)
        .filter(|&q| q < (1 << 40))
        .ok_or_else(|| Error::OutOfRange(format!("{p}^{n} too large")))?;
    let ar = require_unit(a, q)?;
    Ok((q, ar))
}

/// Group-ring terms (index, coefficient) of the explicit formula.
/// For odd n the factor sqrt(p) eps_{p,n} is the quadratic Gauss sum mod p.
pub fn k2_explicit_group_ring(a: i64, b: i64, p: u64, n: u32) -> Result<Vec<(u64, i64)>> {
    let (q, ar) = explicit_checks(a, p, n)?;
    let br = reduce(b, q);
    let ys = critical_points(ar, br, p, n);
    let sign = jacobi((3 * ar) as i64 % q as i64, q).unwrap() as i64;
    let coef = sign * p.pow(n / 2) as i64;
    let mut out = Vec::new();
    let step = q / p;
    for y in ys {
        let k = mul_mod(3 * ar % q, mul_mod(y, y, q), q);
        if n % 2 == 0 {
            out.push((k, coef));
        } else {
            for z in 0..p {
                out.push(((k + step * (z * z % p)) % q, coef));
            }
        }
    }
    Ok(out)
}

/// K2(a,b;p^n) by the stationary-phase closed form.
pub fn k2_explicit(a: i64, b: i64, p: u64, n: u32, engine: Engine) -> Result<SumValue> {
    let (q, ar) = explicit_checks(a, p, n)?;
    match engine {
        Engine::Exact => {
            check_exact_order(q)?;
            let mut gr = vec![0i64; q as usize];
            for (k, c) in k2_explicit_group_ring(a, b, p, n)? {
                gr[k as usize] += c;
            }
            Ok(SumValue::from_exact(Cyclo::from_group_ring(q, &gr)))
        }
        Engine::Float => Ok(SumValue::float(k2_explicit_float(ar, reduce(b, q), p, n))),
    }
}

/// Floating explicit value; `a` must be a unit and `b` reduced.
pub fn k2_explicit_float(a: u64, b: u64, p: u64, n: u32) -> Complex64 {
    let q = p.pow(n);
    let ys = critical_points(a, b, p, n);
    if ys.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let sign = jacobi((3 * a % q) as i64, q).unwrap() as f64;
    let eps = if n % 2 == 0 || p % 4 == 1 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 1.0)
    };
    let s = sum_complex(ys.iter().map(|&y| root_exact_angle(mul_mod(3 * a % q, mul_mod(y, y, q), q), q)));
    s * eps * sign * (q as f64).sqrt()
}

/// Bezout pair (r1, r2) with m1 r1 + m2 r2 = 1 and 0 <= r1 < m2.
pub fn bezout(m1: u64, m2: u64) -> Result<(i64, i64)> {
    let (g, x, _) = ext_gcd(m1 as i128, m2 as i128);
    if g != 1 {
        return Err(Error::NotCoprime(m1, m2));
    }
    let r1 = x.rem_euclid(m2 as i128);
    let r2 = (1 - m1 as i128 * r1) / m2 as i128;
    Ok((r1 as i64, r2 as i64))
}

/// Factor pair (mod m1, mod m2) and the full sum mod m1 m2.
pub fn k2_crt_split(a: i64, b: i64, m1: u64, m2: u64, engine: Engine) -> Result<(SumValue, SumValue, SumValue)> {
    let (r1, r2) = bezout(m1, m2)?;
    let q = m1 * m2;
    require_unit(a, q)?;
    let f1 = k2_direct(
        (r2 as i128 * a as i128).rem_euclid(m1 as i128) as i64,
        (r2 as i128 * b as i128).rem_euclid(m1 as i128) as i64,
        m1,
        engine,
    )?;
    let f2 = k2_direct(
        (r1 as i128 * a as i128).rem_euclid(m2 as i128) as i64,
        (r1 as i128 * b as i128).rem_euclid(m2 as i128) as i64,
        m2,
        engine,
    )?;
    let full = k2_direct(a, b, q, engine)?;
    Ok((f1, f2, full))
}

/// K2 via the prime-power factorization of Q, using the closed form where it applies.
pub fn k2_eval(a: i64, b: i64, q: &FactoredModulus, engine: Engine) -> Result<SumValue> {
    let qv = q.value();
    require_unit(a, qv)?;
    if engine == Engine::Exact {
        check_exact_order(qv)?;
    }
    let mut acc = match engine {
        Engine::Exact => SumValue::from_exact(Cyclo::from_int(qv.max(1), 1)),
        Engine::Float => SumValue::real(1.0),
    };
    for &(p, e) in q.factors() {
        let qi = p.pow(e);
        let r = mod_inv((qv / qi) as i64, qi).unwrap() as i128;
        let ai = (r * a as i128).rem_euclid(qi as i128) as i64;
        let bi = (r * b as i128).rem_euclid(qi as i128) as i64;
        let f = if p > 3 && e >= 2 {
            k2_explicit(ai, bi, p, e, engine)?
        } else {
            k2_direct(ai, bi, qi, engine)?
        };
        acc = acc.mul(&f);
    }
    if let Some(c) = &acc.exact {
        if c.order() != qv.max(1) {
            acc = SumValue::from_exact(c.lift(qv));
        }
    }
    Ok(acc)
}

/// Convenience: factor and evaluate.
pub fn k2(a: i64, b: i64, q: u64, engine: Engine) -> Result<SumValue> {
    k2_eval(a, b, &factorize(q), engine)
}

/// Outcome of comparing the closed form against direct summation over all (a,b).
#[derive(Debug, Clone, Serialize)]
pub struct ExplicitSweep {
    pub p: u64,
    pub n: u32,
    pub modulus: u64,
    pub engine: Engine,
    pub pairs: u64,
    pub mismatches: u64,
    pub max_abs_error: f64,
    pub max_abs_value: f64,
}

/// Critical points for every target t, bucketed by y^3 mod p^n. Lifted cube
/// roots mod p^{floor(n/2)} are exactly the cube roots mod p^n, so
/// `roots(t)` equals `critical_points` for any (a,b) with (2a)^{-1} b = t.
struct CubeTable {
    start: Vec<u32>,
    ys: Vec<u32>,
}

impl CubeTable {
    fn new(q: u64, p: u64) -> CubeTable {
        let mut count = vec![0u32; q as usize + 1];
        let cube = |y: u64| mul_mod(mul_mod(y, y, q), y, q);
        for y in (1..q).filter(|y| y % p != 0) {
            count[cube(y) as usize + 1] += 1;
        }
        for i in 1..count.len() {
            count[i] += count[i - 1];
        }
        let mut fill = count.clone();
        let mut ys = vec![0u32; count[q as usize] as usize];
        for y in (1..q).filter(|y| y % p != 0) {
            let c = cube(y) as usize;
            ys[fill[c] as usize] = y as u32;
            fill[c] += 1;
        }
        CubeTable { start: count, ys }
    }

    fn roots(&self, t: u64) -> &[u32] {
        &self.ys[self.start[t as usize] as usize..self.start[t as usize + 1] as usize]
    }
}

/// Exhaustive closed-form vs direct check modulo p^n.
///
/// Exact: for each pair the direct group-ring vector minus the closed form is
/// tested for membership in the kernel to Z[zeta_{p^n}].
/// Float: rows of direct values come from one FFT per a.
/// Critical points come from a cube table, itself checked against
/// `critical_points` for every target.
pub fn explicit_sweep(p: u64, n: u32, engine: Engine) -> Result<ExplicitSweep> {
    let (q, _) = explicit_checks(1, p, n)?;
    if engine == Engine::Exact {
        check_exact_order(q)?;
    }
    use rayon::prelude::*;
    let table = CubeTable::new(q, p);
    let units: Vec<u64> = (1..q).filter(|x| x % p != 0).collect();
    let table_mismatch = units
        .par_iter()
        .filter(|&&t| {
            // (2a)^{-1} b = t for a = 2^{-1}, b = t.
            let a = mod_inv(2, q).unwrap();
            let cp = critical_points(a, t, p, n);
            let mut tb: Vec<u64> = table.roots(t).iter().map(|&y| y as u64).collect();
            tb.sort_unstable();
            cp != tb
        })
        .count() as u64;
    let inv2 = unit_inverse_squares(q);
    let step = (q / p) as usize;
    let qu = q as usize;
    let gauss_terms: Vec<u64> = (0..p).map(|z| (q / p) * (z * z % p)).collect();
    let roots: Vec<Complex64> = if engine == Engine::Float {
        (0..q).map(|k| root_exact_angle(k, q)).collect()
    } else {
        Vec::new()
    };
    let fft = FftPlanner::new().plan_fft_inverse(qu);
    let fm = FastMod::new(q);
    let fm_p = FastMod::new(p);
    let sq: Vec<u32> = (0..q).map(|y| (y * y % q) as u32).collect();
    let per_a: Vec<(u64, u64, f64, f64)> = units
        .par_iter()
        .map(|&a| {
            let a3 = 3 * a % q;
            let inv2a = mod_inv((2 * a % q) as i64, q).unwrap();
            let sign = jacobi(a3 as i64, q).unwrap() as i64;
            let phase = |y: u32| fm.mul(a3, sq[y as usize] as u64);
            match engine {
                Engine::Exact => {
                    let coef = (sign * p.pow(n / 2) as i64) as i16;
                    let mut gr = vec![0i16; qu];
                    let xs: Vec<u32> = inv2.iter().map(|&(x, _)| x as u32).collect();
                    let mut ts: Vec<u32> = inv2.iter().map(|&(_, xi2)| mul_mod(a, xi2, q) as u32).collect();
                    let qq = q as u32;
                    let mut bad = 0u64;
                    for b in 0..q {
                        // Direct terms a x^{-2} + b x, advancing each index to b + 1.
                        for (t, &x) in ts.iter_mut().zip(&xs) {
                            gr[*t as usize] += 1;
                            let v = *t + x;
                            *t = if v >= qq { v - qq } else { v };
                        }
                        if b % p != 0 {
                            for &y in table.roots(fm.mul(inv2a, b)) {
                                let k = phase(y);
                                if n % 2 == 0 {
                                    gr[k as usize] -= coef;
                                } else {
                                    for &g in &gauss_terms {
                                        gr[((k + g) % q) as usize] -= coef;
                                    }
                                }
                            }
                        }
                        // Constant on cosets r + p^{n-1} Z.
                        if gr[..qu - step] != gr[step..] {
                            bad += 1;
                        }
                        gr.iter_mut().for_each(|c| *c = 0);
                    }
                    (q, bad, 0.0, 0.0)
                }
                Engine::Float => {
                    let mut row = vec![Complex64::new(0.0, 0.0); qu];
                    for &(x, xi2) in &inv2 {
                        row[x as usize] += roots[mul_mod(a, xi2, q) as usize];
                    }
                    fft.process(&mut row);
                    let eps = if n % 2 == 0 || p % 4 == 1 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 1.0)
                    };
                    let scale = eps * sign as f64 * (q as f64).sqrt();
                    let mut max_err: f64 = 0.0;
                    let mut max_val: f64 = 0.0;
                    let mut bad = 0;
                    for (b, d) in row.iter().enumerate() {
                        let b = b as u64;
                        let e = if fm_p.reduce(b) == 0 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            let mut s = Complex64::new(0.0, 0.0);
                            for &y in table.roots(fm.mul(inv2a, b)) {
                                s += roots[phase(y) as usize];
                            }
                            s * scale
                        };
                        let err = (e - d).norm_sqr().sqrt();
                        if err > 1e-6 {
                            bad += 1;
                        }
                        max_err = max_err.max(err);
                        max_val = max_val.max(d.norm_sqr());
                    }
                    (q, bad, max_err, max_val.sqrt())
                }
            }
        })
        .collect();
    let mut out = ExplicitSweep {
        p,
        n,
        modulus: q,
        engine,
        pairs: 0,
        mismatches: table_mismatch,
        max_abs_error: 0.0,
        max_abs_value: 0.0,
    };
    for (pairs, bad, err, val) in per_a {
        out.pairs += pairs;
        out.mismatches += bad;
        out.max_abs_error = out.max_abs_error.max(err);
        out.max_abs_value = out.max_abs_value.max(val);
    }
    Ok(out)
}

/// max |K2(a,b;Q)| over units a and all b, one FFT row per a.
pub fn k2_max_abs(q: u64) -> Result<f64> {
    use rayon::prelude::*;
    if q < 2 {
        return Err(Error::InvalidArgument("modulus must be at least 2".into()));
    }
    if q > 1 << 16 {
        return Err(Error::BudgetExceeded(format!("row sweep modulo {q}")));
    }
    let units = unit_inverse_squares(q);
    let roots: Vec<Complex64> = (0..q).map(|k| root_exact_angle(k, q)).collect();
    let fft = FftPlanner::new().plan_fft_inverse(q as usize);
    let fm = FastMod::new(q);
    let best = units
        .par_iter()
        .map_init(
            || vec![Complex64::new(0.0, 0.0); q as usize],
            |buf, &(a, _)| {
                buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                for &(x, xi2) in &units {
                    buf[x as usize] += roots[fm.mul(a, xi2) as usize];
                }
                fft.process(buf);
                buf.iter().map(|z| z.norm_sqr()).fold(0.0f64, f64::max)
            },
        )
        .reduce(|| 0.0, f64::max);
    Ok(best.sqrt())
}

/// Direct float K2 with compensated summation, no group-ring buffer.
pub fn k2_direct_float(a: i64, b: i64, q: u64) -> Result<Complex64> {
    let ar = require_unit(a, q)?;
    let br = reduce(b, q);
    let mut acc = ComplexSum::default();
    for (x, xi2) in unit_inverse_squares(q) {
        acc.add(root_exact_angle((mul_mod(ar, xi2, q) + mul_mod(br, x, q)) % q, q));
    }
    Ok(acc.value())
}
