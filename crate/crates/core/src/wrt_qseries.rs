//! The colored WRT function Φ(q; N) as a q-series, its evaluation inside the
//! unit disk, the φ-sums of the radial-limit argument, and the radial limit.

use rayon::prelude::*;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::exact_sums::{gauss_g, tau, tau_bare_sum};
use crate::numerics::hp::{pi, HPComplex};
use crate::numerics::{extrapolate, qs_eval, QSeries, TailCertificate, TailStream};
use crate::report::{ReportRow, VerificationReport};
use crate::seifert_core::{a_coeff, derived_constants, sign_product, sign_vectors, HalfInt, SeifertLoop};

/// Precision for the exact constants (the Dedekind sums snap to rationals).
const CONST_PREC: u32 = 128;

#[derive(Clone, Debug)]
pub struct PhiSeries {
    pub lp: SeifertLoop,
    pub color: i64,
    /// Φ on the lattice `(1/4P)ℤ`, all terms up to `cutoff`.
    pub series: QSeries,
    pub cutoff: i64,
}

/// One `(ℓ, ε)` block: sign `∏ε` and offset `a_{ℓ,ε}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThetaBlock {
    pub sign: i64,
    pub offset: i64,
}

pub fn theta_blocks(lp: &SeifertLoop, n_color: i64) -> Vec<ThetaBlock> {
    let mut out = Vec::new();
    for twice in (-(n_color - 1)..=n_color - 1).step_by(2) {
        let ell = HalfInt::from_twice(twice);
        for eps in sign_vectors(lp.n()) {
            out.push(ThetaBlock { sign: sign_product(&eps), offset: a_coeff(lp, ell, &eps) });
        }
    }
    out
}

/// `binom(m + n − 3, n − 3)`, which for `n ≤ 2` is 1 at `m = 0` and 0 otherwise.
pub fn theta_weight(n: usize, m: u64) -> Integer {
    if n <= 2 {
        return Integer::from(u32::from(m == 0));
    }
    let d = (n - 3) as u32;
    Integer::from(m + d as u64).binomial(d)
}

fn theta_certificate(lp: &SeifertLoop, blocks: &[ThetaBlock]) -> TailCertificate {
    let n = lp.n();
    let step = 2 * lp.product();
    let binomial = if n >= 3 { Some((n - 3) as u32) } else { None };
    TailCertificate {
        streams: blocks
            .iter()
            .map(|b| TailStream::Quadratic { weight: 1.0, binomial, step, offset: b.offset, shift: 0 })
            .collect(),
    }
}

/// `Σ ∏ε Σ_m binom·q^{(2Pm + a)²/4P}` over the given blocks, up to lattice index `cutoff`.
pub fn blocks_series(lp: &SeifertLoop, blocks: &[ThetaBlock], cutoff: i64) -> QSeries {
    let n = lp.n();
    let step = 2 * lp.product();
    let per_block: Vec<Vec<(i64, Rational)>> = blocks
        .par_iter()
        .map(|b| {
            let mut terms = Vec::new();
            for m in 0u64.. {
                let x = step as i128 * m as i128 + b.offset as i128;
                let e = x * x;
                if e > cutoff as i128 {
                    if x >= 0 {
                        break;
                    }
                } else {
                    let w = theta_weight(n, m);
                    if w == 0 {
                        break;
                    }
                    terms.push((e as i64, Rational::from(w * b.sign)));
                }
                if n <= 2 {
                    break;
                }
            }
            terms
        })
        .collect();
    let mut s = QSeries::truncated_zero(4 * lp.product(), cutoff);
    for (e, c) in per_block.into_iter().flatten() {
        s.add_term(e, c);
    }
    s.with_tail(theta_certificate(lp, blocks))
}

/// `Σ_ℓ Σ_ε ∏ε Σ_m binom·q^{(2Pm + a)²/4P}` up to lattice index `cutoff`.
pub fn theta_series(lp: &SeifertLoop, n_color: i64, cutoff: i64) -> Result<QSeries> {
    if n_color < 1 {
        return Err(Error::ColorTooSmall);
    }
    Ok(blocks_series(lp, &theta_blocks(lp, n_color), cutoff))
}

/// The single-`ℓ` part `R(ℓ)` of the theta sum.
pub fn r_series(lp: &SeifertLoop, ell: HalfInt, cutoff: i64) -> QSeries {
    let blocks: Vec<ThetaBlock> = sign_vectors(lp.n())
        .into_iter()
        .map(|eps| ThetaBlock { sign: sign_product(&eps), offset: a_coeff(lp, ell, &eps) })
        .collect();
    blocks_series(lp, &blocks, cutoff)
}

/// Smallest lattice index among the given blocks.
pub fn blocks_min_index(lp: &SeifertLoop, blocks: &[ThetaBlock]) -> i64 {
    let step = 2 * lp.product();
    blocks
        .iter()
        .map(|b| {
            if lp.n() <= 2 || b.offset >= 0 {
                return b.offset * b.offset;
            }
            let m = (-b.offset).div_euclid(step);
            let lo = step * m + b.offset;
            (lo * lo).min((lo + step) * (lo + step))
        })
        .min()
        .unwrap()
}

/// Smallest lattice index occurring in the theta part.
pub fn theta_min_index(lp: &SeifertLoop, n_color: i64) -> i64 {
    blocks_min_index(lp, &theta_blocks(lp, n_color))
}

/// Lattice index of the prefactor `q^{1/2 − c(N)/4}`, namely `P(2 − c(N))`.
pub fn phi_shift(lp: &SeifertLoop, n_color: i64) -> Result<i64> {
    let consts = derived_constants(lp, n_color, CONST_PREC)?;
    let p = consts.product;
    let s = Rational::from(2 * p) - consts.framing * Rational::from(p);
    if *s.denom() != 1 {
        return Err(Error::OffLattice(s.to_string(), 4 * p));
    }
    let (num, _) = s.into_numer_denom();
    num.to_i64().ok_or_else(|| Error::Internal("prefactor shift overflows".into()))
}

fn head_mass(s: &QSeries) -> f64 {
    let total = s.terms().fold(0.0, |acc, (_, c)| acc + c.to_f64().abs());
    total * (1.0 + 1e-12)
}

/// `D(N)·S` with `D(N) = (−1)^n q^{−c(N)/4}/(2(q^{1/2} − q^{−1/2}))` expanded as a
/// power series; `inner` must be known up to `cutoff − P(2 − c(N))`.
pub fn apply_prefactor(lp: &SeifertLoop, n_color: i64, inner: &QSeries, cutoff: i64) -> Result<QSeries> {
    let shift = phi_shift(lp, n_color)?;
    let d = 4 * lp.product();
    if inner.denom() != d {
        return Err(Error::LatticeMismatch(inner.denom(), d));
    }
    if inner.cutoff().is_some_and(|x| x < cutoff - shift) {
        return Err(Error::CutoffUnderflow { needed: cutoff - shift, supplied: inner.cutoff().unwrap() });
    }
    let sign = if lp.n() % 2 == 0 { -1 } else { 1 };
    Ok(inner
        .mul_geometric(d, cutoff - shift)
        .shift(shift)
        .scale(&Rational::from((sign, 2)))
        .with_tail(TailCertificate {
            streams: vec![TailStream::Convolved {
                weight: 0.5,
                shift,
                step: d,
                head_mass: head_mass(inner),
                inner: Box::new(inner.tail().cloned().unwrap_or_default()),
            }],
        }))
}

/// Φ(q; N) with the prefactor expanded as `−(1/2)q^{1/2}Σ_k q^k`, all terms up to lattice index `cutoff`.
pub fn phi_series(lp: &SeifertLoop, n_color: i64, cutoff: i64) -> Result<PhiSeries> {
    if cutoff < 0 {
        return Err(Error::Precondition("cutoff must be non-negative".into()));
    }
    Ok(PhiSeries { lp: lp.clone(), color: n_color, series: phi_series_raw(lp, n_color, cutoff)?, cutoff })
}

/// As [`phi_series`] but for any (possibly negative) lattice cutoff.
pub fn phi_series_raw(lp: &SeifertLoop, n_color: i64, cutoff: i64) -> Result<QSeries> {
    let shift = phi_shift(lp, n_color)?;
    let theta = theta_series(lp, n_color, cutoff - shift)?;
    apply_prefactor(lp, n_color, &theta, cutoff)
}

/// `(−1)^n q^{−c(N)/4}/(2(q^{1/2} − q^{−1/2}))`.
fn phi_prefactor(lp: &SeifertLoop, n_color: i64, log_q: &HPComplex) -> Result<HPComplex> {
    let prec = log_q.prec();
    let consts = derived_constants(lp, n_color, CONST_PREC)?;
    let half = log_q.scale_rational(&Rational::from((1, 2))).exp();
    let denom = (&half - &half.recip()).scale_i64(2);
    let power = log_q.scale_rational(&(-consts.framing / Rational::from(4))).exp();
    let v = &power / &denom;
    Ok(if lp.n() % 2 == 1 { -v } else { v }.with_prec(prec))
}

/// Φ at `q = exp(log_q)`, using all theta terms with lattice index up to
/// `cutoff − P(2 − c(N))`, together with a bound on the omitted tail.
pub fn phi_eval(lp: &SeifertLoop, n_color: i64, log_q: &HPComplex, cutoff: i64) -> Result<(HPComplex, Float)> {
    if !log_q.re().is_sign_negative() || log_q.re().is_zero() {
        return Err(Error::OutsideDisk);
    }
    let shift = phi_shift(lp, n_color)?;
    let theta = theta_series(lp, n_color, cutoff - shift)?;
    let pref = phi_prefactor(lp, n_color, log_q)?;
    let (v, tail) = qs_eval(&theta, log_q)?;
    let scale = pref.abs();
    Ok((&pref * &v, tail * scale))
}

/// Smallest theta cutoff (a doubling search) whose certified tail, scaled by
/// the prefactor, falls below `tol`.
pub fn phi_eval_auto(lp: &SeifertLoop, n_color: i64, log_q: &HPComplex, tol: f64) -> Result<(HPComplex, Float)> {
    if !log_q.re().is_sign_negative() || log_q.re().is_zero() {
        return Err(Error::OutsideDisk);
    }
    let shift = phi_shift(lp, n_color)?;
    let pref = phi_prefactor(lp, n_color, log_q)?.abs_f64();
    let cert = theta_certificate(lp, &theta_blocks(lp, n_color));
    let rho = log_q.re().to_f64() / (4 * lp.product()) as f64;
    let mut x = (4 * lp.product()).max(theta_min_index(lp, n_color));
    while pref * cert.bound(x, rho) >= tol {
        x = x.checked_mul(2).ok_or_else(|| Error::Internal("theta cutoff overflows".into()))?;
    }
    phi_eval(lp, n_color, log_q, x + shift)
}

fn check_positive(t: &HPComplex) -> Result<()> {
    if !t.re().is_sign_positive() || t.re().is_zero() {
        return Err(Error::Precondition("Re t must be positive".into()));
    }
    Ok(())
}

fn ln_binom(m: u64, d: u32) -> f64 {
    (1..=d as u64).map(|j| ((m + j) as f64 / j as f64).ln()).sum()
}

/// `φ⁽ᵏ⁾(t)` for `k ∈ {1, 2}`, summed until the certified remainder is below
/// `tol`; returns the value and the bound on what was left out.
pub fn phi_k(lp: &SeifertLoop, n_color: i64, level: i64, t: &HPComplex, k: u32, tol: f64) -> Result<(HPComplex, f64)> {
    if level < 2 {
        return Err(Error::LevelTooSmall);
    }
    if !(k == 1 || k == 2) {
        return Err(Error::Precondition("k must be 1 or 2".into()));
    }
    check_positive(t)?;
    let prec = t.prec();
    let work = prec + 32;
    let t = t.with_prec(work);
    let re_t = t.re().to_f64();
    let n = lp.n();
    let d = n.saturating_sub(3) as u32;
    let product = lp.product();
    let step = 2 * product;
    let modulus = 4 * level * product;
    let blocks = theta_blocks(lp, n_color);
    let block_tol = tol / blocks.len() as f64;
    let power = |x: i64| -> f64 { (x as f64).powi(k as i32) };
    let parts: Vec<(HPComplex, f64)> = blocks
        .par_iter()
        .map(|b| {
            let mut acc = HPComplex::zero(work);
            let mut tail = 0.0;
            for m in 0u64.. {
                let x = step * m as i64 + b.offset;
                let w = theta_weight(n, m);
                if w == 0 {
                    break;
                }
                let x2 = (x as i128 * x as i128).rem_euclid(modulus as i128) as i64;
                let phase = HPComplex::cis_pi(&Rational::from((x2, 2 * level * product)), work);
                let xk = if k == 1 { Integer::from(x) } else { Integer::from(x) * x };
                let decay = t.scale(&Float::with_val(work, -xk)).exp();
                acc += &(&phase * &decay).scale_rational(&Rational::from(w * b.sign));
                if n <= 2 {
                    break;
                }
                // remaining terms m' > m, once past the vertex and decreasing
                let next = x + step;
                if next > 0 {
                    let mp = m + 1;
                    let ln_t = if n >= 3 { ln_binom(mp, d) } else { 0.0 } - power(next) * re_t;
                    let ratio = ((mp + 1 + d as u64) as f64 / (mp + 1) as f64)
                        * (-(power(next + step) - power(next)) * re_t).exp();
                    if ratio < 1.0 {
                        let bound = ln_t.exp() / (1.0 - ratio);
                        if bound < block_tol {
                            tail = bound;
                            break;
                        }
                    }
                }
            }
            (acc, tail)
        })
        .collect();
    let mut acc = HPComplex::zero(work);
    let mut tail = 0.0;
    for (v, e) in &parts {
        acc += v;
        tail += e;
    }
    if n % 2 == 1 {
        acc = -acc;
    }
    Ok((acc.with_prec(prec), tail * (1.0 + 1e-9)))
}

/// `(1 − x)^{−(n−2)}` for `n ≥ 3`, and 1 for `n ≤ 2` where the binomial sum is the single `m = 0` term.
fn generating_factor(n: usize, x: &HPComplex) -> Result<HPComplex> {
    let prec = x.prec();
    if n <= 2 {
        return Ok(HPComplex::one(prec));
    }
    let base = &HPComplex::one(prec) - x;
    if base.abs_f64() < 2f64.powi(-(prec as i32) / 2) {
        return Err(Error::Pole("1 − e^{2πik/K}e^{−2Pt} vanishes".into()));
    }
    Ok(base.powi(-(n as i64 - 2)))
}

/// The split `φ⁽¹⁾ = φ_A + φ_B` by whether `K ∤ k` or `K | k` in the residue
/// class sum; real `t > 0` only.
pub fn phi_ab(lp: &SeifertLoop, n_color: i64, level: i64, t: &HPComplex) -> Result<(HPComplex, HPComplex)> {
    if level < 2 {
        return Err(Error::LevelTooSmall);
    }
    check_positive(t)?;
    if !t.im().is_zero() {
        return Err(Error::Precondition("t must be real".into()));
    }
    let prec = t.prec();
    let work = prec + 32;
    let t = t.with_prec(work);
    let n = lp.n();
    let product = lp.product();
    let blocks = theta_blocks(lp, n_color);
    let (_, g) = gauss_g(level, product, work);
    let norm = if n % 2 == 1 { -g.recip() } else { g.recip() };
    let decay: Vec<HPComplex> = blocks.iter().map(|b| t.scale_i64(-b.offset).exp()).collect();
    let e2pt = t.scale_i64(-2 * product).exp();

    let two_kp = 2 * level * product;
    let a_terms: Vec<Result<HPComplex>> = (0..two_kp)
        .into_par_iter()
        .filter(|k| k % level != 0)
        .map(|k| {
            let quad = HPComplex::cis_pi(&Rational::from((-(k * k) % (2 * two_kp), two_kp)), work);
            let x = &HPComplex::cis_pi(&Rational::from((2 * k % (2 * level), level)), work) * &e2pt;
            let gen = generating_factor(n, &x)?;
            let mut inner = HPComplex::zero(work);
            for (b, dec) in blocks.iter().zip(&decay) {
                let ph = HPComplex::cis_pi(&Rational::from(((k * b.offset).rem_euclid(2 * level * product), level * product)), work);
                inner += &(&ph * dec).scale_i64(b.sign);
            }
            Ok(&(&quad * &inner) * &gen)
        })
        .collect();
    let mut phi_a = HPComplex::zero(work);
    for term in a_terms {
        phi_a += &term?;
    }

    let gen_b = generating_factor(n, &e2pt)?;
    let mut phi_b = HPComplex::zero(work);
    for m in 0..2 * product {
        let quad = HPComplex::cis_pi(&Rational::from((-(level * m * m).rem_euclid(4 * product), 2 * product)), work);
        let mut inner = HPComplex::zero(work);
        for (b, dec) in blocks.iter().zip(&decay) {
            let ph = HPComplex::cis_pi(&Rational::from(((m * b.offset).rem_euclid(2 * product), product)), work);
            inner += &(&ph * dec).scale_i64(b.sign);
        }
        phi_b += &(&quad * &inner);
    }
    phi_b = &phi_b * &gen_b;
    Ok(((&phi_a * &norm).with_prec(prec), (&phi_b * &norm).with_prec(prec)))
}

/// `(e^{πi/4}/√(2KP))·Σ_{K∤k} e^{−πik²/(2KP)}·(sinh ratio)`, the `t → 0` value of `φ_A`.
pub fn b0(lp: &SeifertLoop, n_color: i64, level: i64, prec: u32) -> Result<HPComplex> {
    let work = prec + 32;
    let bare = tau_bare_sum(lp, level, n_color, work)?;
    let (_, g) = gauss_g(level, lp.product(), work);
    Ok((&bare / &g).with_prec(prec))
}

/// `[N]_q · J_{T(p₁,p₂)}(q; N)` expanded on the lattice `(1/4p₁p₂)ℤ` up to `cutoff`.
pub fn torus_jones_series(p1: i64, p2: i64, n_color: i64, cutoff: i64) -> QSeries {
    let p = p1 * p2;
    let mut sum = QSeries::zero(4 * p);
    for t in (-(n_color - 1)..=n_color - 1).step_by(2) {
        sum.add_term(p * p * t * t - 2 * p * (p1 + p2) * t + 2 * p, Rational::from(1));
        sum.add_term(p * p * t * t - 2 * p * (p1 - p2) * t - 2 * p, Rational::from(-1));
    }
    // q^{P(1−N²)/4}·(−q^{1/2})·Σ_k q^k
    let shift = p * p * (1 - n_color * n_color) + 2 * p;
    sum.mul_geometric(4 * p, cutoff - shift).shift(shift).scale(&Rational::from(-1))
}

#[derive(Clone, Debug)]
pub struct RadialSample {
    pub t: Rational,
    pub value: HPComplex,
    pub tail: f64,
}

#[derive(Clone, Debug)]
pub struct RadialLimit {
    pub tau: HPComplex,
    pub limit: HPComplex,
    pub spread: f64,
    pub residual: f64,
    pub samples: Vec<RadialSample>,
}

/// Samples Φ at `q = e^{2πi/K}e^{−t_j}`, `t_j = t0·2^{−j}`, and extrapolates to `t = 0`.
pub fn radial_limit_values(
    lp: &SeifertLoop,
    n_color: i64,
    level: i64,
    t0: &Rational,
    levels: usize,
    degree: usize,
    prec: u32,
) -> Result<RadialLimit> {
    if level < 2 {
        return Err(Error::LevelTooSmall);
    }
    if *t0 <= 0 {
        return Err(Error::Precondition("t0 must be positive".into()));
    }
    let work = prec + 32;
    let tail_tol = 2f64.powi(-(prec as i32) * 3 / 4);
    let two_pi_over_k = pi(work) * 2u32 / Float::with_val(work, level);
    let samples = (0..levels)
        .map(|j| {
            let t = Rational::from(t0.clone() >> j as u32);
            let log_q = HPComplex::new(-Float::with_val(work, &t), two_pi_over_k.clone());
            let (value, tail) = phi_eval_auto(lp, n_color, &log_q, tail_tol)?;
            Ok(RadialSample { t, value, tail: tail.to_f64() })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(Rational, HPComplex)> = samples.iter().map(|s| (s.t.clone(), s.value.clone())).collect();
    let ex = extrapolate(&pairs, degree)?;
    let tau = tau(lp, level, n_color, work)?;
    let residual = (&ex.value - &tau).abs_f64();
    Ok(RadialLimit {
        tau: tau.with_prec(prec),
        limit: ex.value.with_prec(prec),
        spread: ex.spread,
        residual,
        samples,
    })
}

/// Compares the extrapolated radial limit of Φ with τ(K; N).
#[allow(clippy::too_many_arguments)]
pub fn radial_limit(
    lp: &SeifertLoop,
    n_color: i64,
    level: i64,
    t0: &Rational,
    levels: usize,
    degree: usize,
    tol: f64,
    prec: u32,
) -> Result<VerificationReport> {
    let r = radial_limit_values(lp, n_color, level, t0, levels, degree, prec)?;
    let mut report = VerificationReport::new("radial limit of Φ equals τ(K; N)");
    report.push(
        ReportRow::new("limit vs tau")
            .param("loop", lp)
            .param("N", n_color)
            .param("K", level)
            .param("t0", t0)
            .param("levels", levels)
            .param("degree", degree)
            .compare(&r.limit, &r.tau, tol)
            .note(format!("extrapolation spread {:.3e}", r.spread)),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hp::DEFAULT_PRECISION;
    use proptest::prelude::*;

    const PREC: u32 = DEFAULT_PRECISION;

    fn lp(s: &str) -> SeifertLoop {
        s.parse().unwrap()
    }

    fn log_q_at(level: i64, t: f64) -> HPComplex {
        let two_pi = pi(PREC) * 2u32 / Float::with_val(PREC, level);
        HPComplex::new(Float::with_val(PREC, -t), two_pi)
    }

    #[test]
    fn trefoil_is_one() {
        let s = phi_series(&lp("2/1,3/-1"), 1, 500).unwrap();
        let terms: Vec<_> = s.series.terms().map(|(e, c)| (e, c.clone())).collect();
        assert_eq!(terms, vec![(0, Rational::from(1))]);
        let (v, tail) = phi_eval(&lp("2/1,3/-1"), 1, &log_q_at(7, 0.3), 100).unwrap();
        assert!((&v - &HPComplex::one(PREC)).abs_f64() < 1e-70);
        assert!(tail.to_f64() == 0.0);
    }

    #[test]
    fn lattice_is_one_over_4p() {
        let s = phi_series(&lp("2/1,3/1,5/-4"), 1, 2000).unwrap();
        assert_eq!(s.series.denom(), 120);
        assert!(s.series.len() > 5);
    }

    #[test]
    fn matches_torus_knot_jones() {
        let loop_ = lp("2/1,3/-1");
        for n in 1..=5 {
            let cutoff = 30 * 24;
            let phi = phi_series(&loop_, n, cutoff).unwrap().series;
            let jones = torus_jones_series(2, 3, n, cutoff);
            let diff = phi.sub(&jones).unwrap();
            assert!(diff.is_empty(), "N = {n}: {:?}", diff.terms().take(3).collect::<Vec<_>>());
        }
    }

    #[test]
    fn cutoffs_agree_within_tail() {
        let loop_ = lp("2/1,3/1,5/-4");
        let log_q = log_q_at(5, 0.1);
        let (a, ta) = phi_eval(&loop_, 1, &log_q, 200).unwrap();
        let (b, tb) = phi_eval(&loop_, 1, &log_q, 400).unwrap();
        assert!((&a - &b).abs_f64() <= ta.to_f64());
        assert!(tb <= ta);
    }

    #[test]
    fn expanded_series_agrees_with_closed_prefactor() {
        let loop_ = lp("2/1,3/1,5/-4");
        let log_q = HPComplex::from_f64(-0.7, 0.4, PREC);
        let s = phi_series(&loop_, 2, 40_000).unwrap();
        let (a, ta) = qs_eval(&s.series, &log_q).unwrap();
        let (b, tb) = phi_eval_auto(&loop_, 2, &log_q, 1e-60).unwrap();
        assert!((&a - &b).abs_f64() <= ta.to_f64() + tb.to_f64() + 1e-60 * a.abs_f64());
        assert!(ta.to_f64() < 1e-10);
    }

    #[test]
    fn unit_circle_rejected() {
        let log_q = HPComplex::from_f64(0.0, 1.0, PREC);
        assert_eq!(phi_eval(&lp("2/1,3/-1"), 1, &log_q, 10).unwrap_err(), Error::OutsideDisk);
    }

    #[test]
    fn bridging_identity() {
        let loop_ = lp("2/1,3/1,5/-4");
        let (level, t) = (5, 0.05);
        let log_q = log_q_at(level, t);
        let (phi, _) = phi_eval_auto(&loop_, 1, &log_q, 1e-70).unwrap();
        let c = derived_constants(&loop_, 1, CONST_PREC).unwrap().framing;
        let half = log_q.scale_rational(&Rational::from((1, 2))).exp();
        let lhs = &(&(&half - &half.recip()).scale_i64(2) * &log_q.scale_rational(&(c / 4u32)).exp()) * &phi;
        let tt = HPComplex::from_real(Float::with_val(PREC, t) / 120u32);
        let (rhs, _) = phi_k(&loop_, 1, level, &tt, 2, 1e-70).unwrap();
        assert!((&lhs - &rhs).abs_f64() < 1e-60);
    }

    #[test]
    fn phi_ab_partitions_phi1() {
        for (s, n, level) in [("2/1,3/1,5/-4", 1, 5), ("2/1,3/1,5/-4", 2, 3), ("2/1,3/-1", 2, 4), ("2/1,3/1,5/-2,7/-3", 1, 3)] {
            let loop_ = lp(s);
            let t = HPComplex::from_f64(0.01, 0.0, PREC);
            let (a, b) = phi_ab(&loop_, n, level, &t).unwrap();
            let (one, tail) = phi_k(&loop_, n, level, &t, 1, 1e-70).unwrap();
            assert!((&(&a + &b) - &one).abs_f64() < 1e-60 + tail, "{s}");
        }
    }

    #[test]
    fn phi_a_tends_to_b0() {
        let loop_ = lp("2/1,3/1,5/-4");
        let target = b0(&loop_, 1, 5, PREC).unwrap();
        let mut prev = f64::INFINITY;
        for j in 10..14 {
            let t = HPComplex::from_f64(2f64.powi(-j), 0.0, PREC);
            let (a, _) = phi_ab(&loop_, 1, 5, &t).unwrap();
            let d = (&a - &target).abs_f64();
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn phi_ab_rejects_complex_t() {
        let t = HPComplex::from_f64(0.1, 0.1, PREC);
        assert!(phi_ab(&lp("2/1,3/-1"), 1, 3, &t).is_err());
    }

    #[test]
    fn phi_k_rejects_nonpositive_t() {
        let t = HPComplex::from_f64(0.0, 1.0, PREC);
        assert!(phi_k(&lp("2/1,3/-1"), 1, 3, &t, 1, 1e-10).is_err());
    }

    #[test]
    fn phi_k_tail_is_honest() {
        let loop_ = lp("2/1,3/1,5/-4");
        let t = HPComplex::from_f64(0.002, 0.001, PREC);
        let (coarse, tail) = phi_k(&loop_, 2, 3, &t, 1, 1e-8).unwrap();
        let (fine, _) = phi_k(&loop_, 2, 3, &t, 1, 1e-40).unwrap();
        assert!((&coarse - &fine).abs_f64() <= tail);
    }

    #[test]
    fn trefoil_radial_limit() {
        let r = radial_limit_values(&lp("2/1,3/-1"), 1, 5, &Rational::from((1, 8)), 8, 6, PREC).unwrap();
        assert!(r.residual < 1e-20);
    }

    #[test]
    fn level_below_two_rejected() {
        let e = radial_limit(&lp("2/1,3/-1"), 1, 1, &Rational::from((1, 8)), 8, 6, 1e-6, PREC).unwrap_err();
        assert_eq!(e.to_string(), "K must be ≥ 2");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn lattice_closure(idx in 0usize..4, n in 1i64..4) {
            let s = ["2/1,3/1,5/-4", "2/1,3/-1,7/-1", "3/-1,4/-1,5/3", "2/1,5/-2"][idx];
            let loop_ = lp(s);
            let d = 4 * loop_.product();
            let phi = phi_series(&loop_, n, 3 * d).unwrap();
            prop_assert_eq!(phi.series.denom(), d);
            let shift = phi_shift(&loop_, n).unwrap();
            let min = phi.series.min_index().unwrap();
            prop_assert!(min >= shift + theta_min_index(&loop_, n));
        }

        #[test]
        fn bridging_identity_random(level in 2i64..12, t in 0.02f64..2.0, n in 1i64..3) {
            let loop_ = lp("2/1,3/-1,7/-1");
            let log_q = log_q_at(level, t);
            let (phi, _) = phi_eval_auto(&loop_, n, &log_q, 1e-72).unwrap();
            let c = derived_constants(&loop_, n, CONST_PREC).unwrap().framing;
            let half = log_q.scale_rational(&Rational::from((1, 2))).exp();
            let lhs = &(&(&half - &half.recip()).scale_i64(2) * &log_q.scale_rational(&(c / 4u32)).exp()) * &phi;
            let tt = HPComplex::from_real(Float::with_val(PREC, t) / 168u32);
            let (rhs, _) = phi_k(&loop_, n, level, &tt, 2, 1e-72).unwrap();
            let scale = rhs.abs_f64().max(1.0);
            prop_assert!((&lhs - &rhs).abs_f64() < 1e-60 * scale);
        }
    }
}
