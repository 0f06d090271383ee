//! Seifert loop surgery data, the constants attached to it, and the function `F_N`.

use std::fmt;
use std::str::FromStr;

use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::hp::{pi, HPComplex};
use crate::numerics::laurent::TaylorSeries;

/// Surgery data `(p_j, q_j)` of a Seifert loop whose ambient manifold is an
/// integral homology sphere.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SeifertLoop {
    pairs: Vec<(i64, i64)>,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl SeifertLoop {
    pub fn new(pairs: &[(i64, i64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidLoop("at least one singular fiber is required".into()));
        }
        for &(p, _) in pairs {
            if p < 2 {
                return Err(Error::InvalidLoop(format!("p = {p} must be at least 2")));
            }
        }
        for (i, &(a, _)) in pairs.iter().enumerate() {
            for &(b, _) in &pairs[i + 1..] {
                if gcd(a, b) != 1 {
                    return Err(Error::NotCoprime(a, b));
                }
            }
        }
        let product: Integer = pairs.iter().map(|&(p, _)| Integer::from(p)).product();
        if product > i64::MAX / 64 {
            return Err(Error::InvalidLoop("product of the p_j is too large".into()));
        }
        let mut total = Rational::new();
        for &(p, q) in pairs {
            total += Rational::from((q, p));
        }
        let check = Rational::from(&product) * total;
        if check != 1 {
            return Err(Error::InvalidLoop(format!("P·Σ q_j/p_j = {check}, expected 1")));
        }
        Ok(SeifertLoop { pairs: pairs.to_vec() })
    }

    pub fn pairs(&self) -> &[(i64, i64)] {
        &self.pairs
    }

    /// Number of singular fibers.
    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn orders(&self) -> Vec<i64> {
        self.pairs.iter().map(|&(p, _)| p).collect()
    }

    /// `P = p_1⋯p_n`.
    pub fn product(&self) -> i64 {
        self.pairs.iter().map(|&(p, _)| p).product()
    }

    /// Number of `p_j` dividing `m`.
    pub fn divisor_count(&self, m: i64) -> usize {
        self.pairs.iter().filter(|&&(p, _)| m % p == 0).count()
    }
}

impl FromStr for SeifertLoop {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            let (p, q) = part
                .split_once('/')
                .ok_or_else(|| Error::MalformedLoop(format!("expected p/q, got {part:?}")))?;
            let p: i64 = p.trim().parse().map_err(|_| Error::MalformedLoop(format!("bad integer {p:?}")))?;
            let q: i64 = q.trim().parse().map_err(|_| Error::MalformedLoop(format!("bad integer {q:?}")))?;
            pairs.push((p, q));
        }
        SeifertLoop::new(&pairs)
    }
}

impl fmt::Display for SeifertLoop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pairs.iter().map(|(p, q)| format!("{p}/{q}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// A half-integer stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HalfInt(i64);

impl HalfInt {
    pub fn from_twice(twice: i64) -> Self {
        HalfInt(twice)
    }

    pub fn from_int(k: i64) -> Self {
        HalfInt(2 * k)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn to_rational(self) -> Rational {
        Rational::from((self.0, 2))
    }

    pub fn neg(self) -> Self {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// All sign vectors in `{±1}^n`, in a fixed order starting from all plus.
pub fn sign_vectors(n: usize) -> Vec<Vec<i8>> {
    (0..1u64 << n)
        .map(|mask| (0..n).map(|j| if mask >> j & 1 == 1 { -1 } else { 1 }).collect())
        .collect()
}

pub fn sign_product(eps: &[i8]) -> i64 {
    eps.iter().map(|&e| e as i64).product()
}

/// Dedekind sum `s(q, p)`, from the cotangent sum snapped onto `(1/6p)ℤ`.
pub fn dedekind_sum(q: i64, p: i64, prec: u32) -> Result<Rational> {
    if p < 1 {
        return Err(Error::Precondition(format!("p = {p} must be positive")));
    }
    if gcd(q, p) != 1 {
        return Err(Error::NotCoprime(q, p));
    }
    let work = prec + 32;
    let pi = pi(work);
    let mut sum = Float::new(work);
    for l in 1..p {
        // cot(π/2) = 0
        if 2 * l == p || 2 * (l * q).rem_euclid(p) == p {
            continue;
        }
        let a = Float::with_val(work, &pi * l) / p;
        let b = Float::with_val(work, &pi * (l * q).rem_euclid(p)) / p;
        sum += a.cot() * b.cot();
    }
    let scaled = sum * 6u32 * p / (4 * p);
    let nearest = scaled.clone().round();
    let distance = Float::with_val(work, &scaled - &nearest).abs().to_f64();
    if distance >= 2f64.powi(-(prec as i32) / 2) {
        return Err(Error::DedekindSnap { q, p, distance });
    }
    let k = nearest.to_integer().ok_or_else(|| Error::Internal("non-finite Dedekind sum".into()))?;
    Ok(Rational::from((k, Integer::from(6 * p))))
}

#[derive(Clone, Debug)]
pub struct DerivedConstants {
    pub product: i64,
    pub theta0: Rational,
    pub color: i64,
    /// `c(N) = Θ₀ + (N² − 1)P`.
    pub framing: Rational,
    /// `B = −e^{3πi/4}/(4√P)`.
    pub b: HPComplex,
}

pub fn derived_constants(lp: &SeifertLoop, n_color: i64, prec: u32) -> Result<DerivedConstants> {
    if n_color < 1 {
        return Err(Error::ColorTooSmall);
    }
    let product = lp.product();
    let mut theta0 = Rational::from(3) - Rational::from((1, product));
    for &(p, q) in lp.pairs() {
        theta0 += dedekind_sum(q, p, prec)? * 12u32;
    }
    if (Integer::from(product) % theta0.denom()) != 0 {
        return Err(Error::FramingLattice(theta0.to_string(), product));
    }
    let framing = Rational::from(&theta0) + Rational::from((n_color * n_color - 1) * product);
    let sqrt_p = Float::with_val(prec, product).sqrt();
    let b = -HPComplex::cis_pi(&Rational::from((3, 4)), prec).scale(&(sqrt_p * 4u32).recip());
    Ok(DerivedConstants { product, theta0, color: n_color, framing, b })
}

/// `G₀(κ) = √(κ/2)/sin(π/κ)`.
pub fn g0(kappa: &HPComplex) -> Result<HPComplex> {
    let prec = kappa.prec();
    if kappa.is_zero() {
        return Err(Error::Pole("κ = 0".into()));
    }
    let s = (&HPComplex::from_real(pi(prec)) / kappa).sin();
    if s.abs_f64() < 2f64.powi(-(prec as i32) / 2) {
        return Err(Error::Pole(format!("sin(π/κ) = 0 at κ = {kappa:.10}")));
    }
    let half = HPComplex::from_f64(0.5, 0.0, prec);
    Ok(&(kappa * &half).sqrt() / &s)
}

/// `P(2ℓ + n − 2 + Σ ε_j/p_j)`.
pub fn a_coeff(lp: &SeifertLoop, ell: HalfInt, eps: &[i8]) -> i64 {
    let product = lp.product();
    let n = lp.n() as i64;
    let mut a = product * (ell.twice() + n - 2);
    for (&(p, _), &e) in lp.pairs().iter().zip(eps) {
        a += e as i64 * (product / p);
    }
    a
}

/// Pole order of `F_N` at `y = 2πim`, `m ≠ 0`; non-positive values mean regular.
pub fn pole_order(lp: &SeifertLoop, m: i64) -> i64 {
    lp.n() as i64 - 2 - lp.divisor_count(m) as i64
}

fn two_sinh(z: &HPComplex) -> HPComplex {
    let e = z.exp();
    &e - &e.recip()
}

/// `F_N(y)`.
pub fn f_eval(lp: &SeifertLoop, n_color: i64, y: &HPComplex) -> Result<HPComplex> {
    let prec = y.prec();
    if y.is_zero() {
        return Ok(HPComplex::zero(prec));
    }
    let two_pi = pi(prec + 16) * 2u32;
    let m_float = Float::with_val(prec + 16, y.im() / &two_pi).round();
    let m = m_float.to_f64() as i64;
    if m != 0 {
        let center = HPComplex::new(Float::new(prec), Float::with_val(prec, &two_pi * m));
        if (y - &center).abs_f64() < 2f64.powi(-(prec as i32) / 2) * (1.0 + m.unsigned_abs() as f64) {
            if pole_order(lp, m) > 0 {
                return Err(Error::Pole(format!("y = 2πi·{m}")));
            }
            let local = f_local(lp, n_color, m, 1, prec)?;
            return Ok(local.coeff(0));
        }
    }
    let mag = y.abs_f64();
    let lost = if mag < 1.0 { (-mag.log2()).ceil() as u32 } else { 0 };
    let work = prec + 32 + (lp.n() as u32 + 1) * lost;
    let yw = y.with_prec(work);
    let mut num = two_sinh(&yw.scale_rational(&Rational::from((n_color, 2))));
    for &(p, _) in lp.pairs() {
        num = &num * &two_sinh(&yw.scale_rational(&Rational::from((1, 2 * p))));
    }
    let den = two_sinh(&yw.scale_rational(&Rational::from((1, 2)))).powi(lp.n() as i64 - 1);
    Ok((&num / &den).with_prec(prec))
}

/// `exp(κ·iy²/(8πP))·F_N(y)`.
pub fn integrand(lp: &SeifertLoop, n_color: i64, kappa: &HPComplex, y: &HPComplex) -> Result<HPComplex> {
    let f = f_eval(lp, n_color, y)?;
    Ok(&gaussian_factor(lp.product(), kappa, y) * &f)
}

/// `exp(κ·iy²/(8πP))`.
pub fn gaussian_factor(product: i64, kappa: &HPComplex, y: &HPComplex) -> HPComplex {
    let prec = kappa.prec().max(y.prec());
    let scale = (pi(prec) * 8u32 * product).recip();
    (&(kappa * &(y * y)).mul_i()).scale(&scale).exp()
}

fn rational_series_mul(a: &[Rational], b: &[Rational], len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::new(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += Rational::from(x * y);
        }
    }
    out
}

fn rational_series_recip(a: &[Rational], len: usize) -> Vec<Rational> {
    let inv0 = Rational::from(a[0].recip_ref());
    let mut out = vec![inv0.clone()];
    for k in 1..len {
        let mut acc = Rational::new();
        for j in 1..=k.min(a.len() - 1) {
            acc += Rational::from(&a[j] * &out[k - j]);
        }
        out.push(-acc * &inv0);
    }
    out
}

/// Coefficients of `2sinh(a·y)/y` in powers of `y`.
fn sinh_over_y(a: &Rational, len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::new(); len];
    let mut pow = Rational::from(a * Rational::from(2));
    let mut fact = Integer::from(1);
    for k in 0..len {
        // index k holds the y^k coefficient of 2sinh(ay)/y, i.e. the y^{k+1} coefficient of 2sinh(ay)
        if k % 2 == 0 {
            out[k] = Rational::from(&pow / &fact);
        }
        pow *= a;
        fact *= (k + 2) as u32;
    }
    out
}

/// Exact Taylor coefficients of `F_N` at `y = 0` through `y^order`.
pub fn f_taylor(lp: &SeifertLoop, n_color: i64, order: usize) -> Result<Vec<Rational>> {
    if order < 2 {
        return Err(Error::Precondition("order must be at least 2".into()));
    }
    let len = order - 1;
    let mut num = sinh_over_y(&Rational::from((n_color, 2)), len);
    for &(p, _) in lp.pairs() {
        num = rational_series_mul(&num, &sinh_over_y(&Rational::from((1, 2 * p)), len), len);
    }
    let base = sinh_over_y(&Rational::from((1, 2)), len);
    let mut den = vec![Rational::from(1)];
    den.resize(len, Rational::new());
    for _ in 0..lp.n() - 1 {
        den = rational_series_mul(&den, &base, len);
    }
    let ratio = rational_series_mul(&num, &rational_series_recip(&den, len), len);
    let mut out = vec![Rational::new(), Rational::new()];
    out.extend(ratio);
    Ok(out)
}

/// Taylor series in `h` of `2sinh(a·(2πim + h))` with exact valuation.
pub fn sinh_local(a: &Rational, m: i64, len: usize, prec: u32) -> TaylorSeries {
    let work = prec + 16;
    let phase = Rational::from(a * Rational::from(2 * m));
    let vanishes = phase.denom() == &1;
    let a_f = Float::with_val(work, a);
    let (sin_c, cos_c) = if vanishes {
        let sign = if phase.numer().is_odd() { -1 } else { 1 };
        (Float::new(work), Float::with_val(work, sign))
    } else {
        let z = HPComplex::cis_pi(&phase, work);
        (Float::with_val(work, z.im()), Float::with_val(work, z.re()))
    };
    // 2[i·sin(2πam)·cosh(ah) + cos(2πam)·sinh(ah)]
    let mut coeffs = Vec::with_capacity(len + 1);
    let mut pow = Float::with_val(work, 2);
    let mut fact = Float::with_val(work, 1);
    for k in 0..=len {
        let t = Float::with_val(work, &pow / &fact);
        let c = if k % 2 == 0 {
            HPComplex::new(Float::new(work), Float::with_val(work, &t * &sin_c))
        } else {
            HPComplex::new(Float::with_val(work, &t * &cos_c), Float::new(work))
        };
        coeffs.push(c.with_prec(prec));
        pow *= &a_f;
        fact *= (k + 1) as u32;
    }
    if vanishes {
        coeffs.remove(0);
        TaylorSeries::new(1, coeffs[..len].to_vec(), prec)
    } else {
        coeffs.truncate(len);
        TaylorSeries::new(0, coeffs, prec)
    }
}

/// Laurent expansion of `F_N` at `y = 2πim` with `len` known terms.
pub fn f_local(lp: &SeifertLoop, n_color: i64, m: i64, len: usize, prec: u32) -> Result<TaylorSeries> {
    let mut num = sinh_local(&Rational::from((n_color, 2)), m, len, prec);
    for &(p, _) in lp.pairs() {
        num = num.mul(&sinh_local(&Rational::from((1, 2 * p)), m, len, prec));
    }
    let base = sinh_local(&Rational::from((1, 2)), m, len, prec);
    let mut den = TaylorSeries::constant(HPComplex::one(prec), len);
    for _ in 0..lp.n() - 1 {
        den = den.mul(&base);
    }
    num.div(&den)
}

/// `(ln C, γ)` with `|F_N(y)| ≤ exp(ln C + γ·|Re y|)` whenever `|Re y| ≥ 1`.
pub fn f_growth_bound(lp: &SeifertLoop, n_color: i64) -> (f64, f64) {
    let n = lp.n() as f64;
    let inv_sum: f64 = lp.orders().iter().map(|&p| 1.0 / p as f64).sum();
    let gamma = (n_color as f64 + inv_sum - (n - 1.0)) / 2.0;
    let ln_c = (n + 1.0) * 2f64.ln() - (n - 1.0) * (1.0 - (-1f64).exp()).ln();
    (ln_c, gamma)
}
