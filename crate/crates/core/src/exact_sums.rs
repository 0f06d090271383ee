//! Finite root-of-unity sums: the WRT invariant, Gauss sums, quadratic
//! reciprocity, and the vanishing sums behind the radial limit.

use rayon::prelude::*;
use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::hp::HPComplex;
use crate::report::{ReportRow, VerificationReport};
use crate::seifert_core::{a_coeff, derived_constants, g0, sign_product, sign_vectors, HalfInt, SeifertLoop};

/// `weight · ζ^{numerator_exponent}` with `ζ = e^{πi/(2KP)}`.
#[derive(Clone, Debug, Serialize)]
pub struct RootOfUnityTerm {
    pub k: i64,
    pub numerator_exponent: i64,
    #[serde(skip)]
    pub weight: HPComplex,
}

/// Powers of `ζ = e^{πi/(2KP)}`, indexed by exponent mod `4KP`.
struct ZetaTable {
    modulus: i64,
    powers: Vec<HPComplex>,
}

impl ZetaTable {
    fn new(level: i64, product: i64, prec: u32) -> Self {
        let modulus = 4 * level * product;
        let powers = (0..modulus)
            .into_par_iter()
            .map(|j| HPComplex::cis_pi(&Rational::from((j, 2 * level * product)), prec))
            .collect();
        ZetaTable { modulus, powers }
    }

    fn pow(&self, e: i64) -> &HPComplex {
        &self.powers[e.rem_euclid(self.modulus) as usize]
    }

    /// `ζ^e − ζ^{−e}`.
    fn diff(&self, e: i64) -> HPComplex {
        self.pow(e) - self.pow(-e)
    }
}

fn check_level(level: i64) -> Result<()> {
    if level < 2 {
        Err(Error::LevelTooSmall)
    } else {
        Ok(())
    }
}

fn tau_terms_with(lp: &SeifertLoop, level: i64, n_color: i64, table: &ZetaTable, prec: u32) -> Vec<RootOfUnityTerm> {
    let product = lp.product();
    let n = lp.n() as i64;
    let ks: Vec<i64> = (0..2 * product * level).filter(|k| k % level != 0).collect();
    ks.par_iter()
        .map(|&k| {
            let base = table.diff(2 * product * k);
            let mut w = &table.diff(2 * product * n_color * k) / &base;
            for p in lp.orders() {
                w = &w * &table.diff(2 * product * k / p);
            }
            w = &w * &base.powi(2 - n);
            RootOfUnityTerm { k, numerator_exponent: (-k * k).rem_euclid(table.modulus), weight: w.with_prec(prec) }
        })
        .collect()
}

/// The summands of the WRT invariant, `ζ^{−k²}` times the sinh-ratio weight, for `K ∤ k`.
pub fn tau_terms(lp: &SeifertLoop, level: i64, n_color: i64, prec: u32) -> Result<Vec<RootOfUnityTerm>> {
    check_level(level)?;
    if n_color < 1 {
        return Err(Error::ColorTooSmall);
    }
    let table = ZetaTable::new(level, lp.product(), prec + 32);
    Ok(tau_terms_with(lp, level, n_color, &table, prec + 32))
}

/// `Σ_{K∤k} e^{−πik²/(2KP)}·(sinh ratio)`, the bare sum in the WRT invariant.
pub fn tau_bare_sum(lp: &SeifertLoop, level: i64, n_color: i64, prec: u32) -> Result<HPComplex> {
    check_level(level)?;
    let work = prec + 32;
    let table = ZetaTable::new(level, lp.product(), work);
    let terms = tau_terms_with(lp, level, n_color, &table, work);
    let mut acc = HPComplex::zero(work);
    for t in &terms {
        acc += &(table.pow(t.numerator_exponent) * &t.weight);
    }
    Ok(acc)
}

/// The WRT invariant `τ(K; N)`.
pub fn tau(lp: &SeifertLoop, level: i64, n_color: i64, prec: u32) -> Result<HPComplex> {
    check_level(level)?;
    let work = prec + 32;
    let consts = derived_constants(lp, n_color, work)?;
    let sum = tau_bare_sum(lp, level, n_color, prec)?;
    let k = HPComplex::from_int(level, work);
    let phase = HPComplex::cis_pi(&(-consts.framing / Rational::from(2 * level)), work);
    let pref = &(&consts.b * &g0(&k)?) / &k;
    Ok((&(&pref * &phase) * &sum).with_prec(prec))
}

/// `Z(K; N) = τ(K; N)/G₀(K)`.
pub fn z_norm(lp: &SeifertLoop, level: i64, n_color: i64, prec: u32) -> Result<HPComplex> {
    let t = tau(lp, level, n_color, prec + 16)?;
    Ok((&t / &g0(&HPComplex::from_int(level, prec + 16))?).with_prec(prec))
}

/// `(Σ_{k mod 2KP} e^{−πik²/(2KP)}, √(2KP)·e^{−πi/4})`.
pub fn gauss_g(level: i64, product: i64, prec: u32) -> (HPComplex, HPComplex) {
    gauss_g_shifted(level, product, 0, prec)
}

/// `e^{−πiL²/(2KP)}·Σ_{k mod 2KP} e^{−πik²/(2KP) + πiLk/(KP)}` together with the closed form.
pub fn gauss_g_shifted(level: i64, product: i64, shift: i64, prec: u32) -> (HPComplex, HPComplex) {
    let modulus = 2 * level * product;
    let work = prec + 16;
    let parts: Vec<HPComplex> = (0..modulus)
        .into_par_iter()
        .map(|k| {
            let e = (-(k * k) + 2 * shift * k).rem_euclid(2 * modulus);
            HPComplex::cis_pi(&Rational::from((e, modulus)), work)
        })
        .collect();
    let mut sum = HPComplex::zero(work);
    for p in &parts {
        sum += p;
    }
    let e0 = (-(shift * shift)).rem_euclid(2 * modulus);
    let sum = &sum * &HPComplex::cis_pi(&Rational::from((e0, modulus)), work);
    let closed = HPComplex::cis_pi(&Rational::from((-1, 4)), work).scale(&Float::with_val(work, modulus).sqrt());
    (sum.with_prec(prec), closed.with_prec(prec))
}

/// Both sides of the quadratic reciprocity formula
/// `Σ_{k mod M1} e^{πi(M2/M1)k² + 2πiLk} = √|M1/M2|·e^{(πi/4)sign(M1M2)}·Σ_{k mod M2} e^{−πi(M1/M2)(k+L)²}`.
pub fn reciprocity(m1: i64, m2: i64, shift: &Rational, prec: u32) -> Result<(HPComplex, HPComplex)> {
    if m1 == 0 || m2 == 0 {
        return Err(Error::Precondition("M1 and M2 must be nonzero".into()));
    }
    if (m1 * m2) % 2 != 0 {
        return Err(Error::Precondition(format!("M1·M2 = {} is odd", m1 * m2)));
    }
    if Rational::from(shift * m1).denom() != &1 {
        return Err(Error::Precondition(format!("M1·L = {m1}·{shift} is not an integer")));
    }
    let work = prec + 16;
    let mut lhs = HPComplex::zero(work);
    for k in 0..m1.abs() {
        let r = Rational::from((m2 * k * k, m1)) + Rational::from(shift * (2 * k));
        lhs += &HPComplex::cis_pi(&r, work);
    }
    let mut inner = HPComplex::zero(work);
    for k in 0..m2.abs() {
        let kl = Rational::from(shift + k);
        let r = -(Rational::from(kl.square_ref()) * Rational::from((m1, m2)));
        inner += &HPComplex::cis_pi(&r, work);
    }
    let sign = if m1 * m2 > 0 { 1 } else { -1 };
    let scale = Float::with_val(work, Rational::from((m1.abs(), m2.abs()))).sqrt();
    let rhs = (&HPComplex::cis_pi(&Rational::from((sign, 4)), work) * &inner).scale(&scale);
    Ok((lhs.with_prec(prec), rhs.with_prec(prec)))
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(m))
}

/// Removes from `k` every prime factor it shares with `d`, by iterated gcds.
fn strip_common(k: i64, d: i64) -> i64 {
    let mut rest = k;
    loop {
        let g = gcd(d, rest);
        if g == 1 {
            return rest;
        }
        rest /= g;
    }
}

/// Splits `K = K1·K2` with `gcd(p_j, K1) = 1`, `gcd(P/p_j, K2) = 1`, `gcd(K1, K2) = 1`,
/// using `p_j` in the distinguished role.
pub fn factor_k_at(level: i64, lp: &SeifertLoop, j: usize) -> (i64, i64) {
    let pj = lp.orders()[j];
    let rest = lp.product() / pj;
    let k1 = strip_common(level, pj);
    let k2_full = strip_common(level, rest);
    let f = gcd(k1, k2_full);
    (k1, k2_full / f)
}

/// [`factor_k_at`] with the first fiber distinguished.
pub fn factor_k(level: i64, lp: &SeifertLoop) -> (i64, i64) {
    factor_k_at(level, lp, 0)
}

/// How a single sign flip is matched up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FlipBranch {
    /// `gcd(p_j, K) = 1`: solve the first linear congruence modulo `K`.
    FirstCoprime,
    /// `gcd(P/p_j, K) = 1`: solve the second linear congruence modulo `K`.
    RestCoprime,
    /// Both gcds exceed one: combine the two congruences by CRT.
    Crt,
}

fn crt_flip(lp: &SeifertLoop, level: i64, ell: HalfInt, eps: &[i8], j: usize, m: i64) -> Result<(i64, FlipBranch)> {
    let pj = lp.orders()[j];
    let rest = lp.product() / pj;
    let n = lp.n() as i64;
    // S = (P/p_j)·Σ_{i≠j} ε_i/p_i
    let mut s = 0i64;
    for (i, &(p, _)) in lp.pairs().iter().enumerate() {
        if i != j {
            s += eps[i] as i64 * (rest / p);
        }
    }
    let first = |modulus: i64| -> Result<i64> {
        let inv = mod_inverse(pj, modulus).ok_or_else(|| Error::Internal("p_j not invertible".into()))?;
        Ok((m + eps[j] as i64 * inv).rem_euclid(modulus))
    };
    let second = |modulus: i64| -> Result<i64> {
        let inv = mod_inverse(rest, modulus).ok_or_else(|| Error::Internal("P/p_j not invertible".into()))?;
        Ok((-(m + ell.twice() + n - 2) - inv * s).rem_euclid(modulus))
    };
    if gcd(pj, level) == 1 {
        return Ok((first(level)?, FlipBranch::FirstCoprime));
    }
    if gcd(rest, level) == 1 {
        return Ok((second(level)?, FlipBranch::RestCoprime));
    }
    let (k1, k2) = factor_k_at(level, lp, j);
    let r1 = first(k1)?;
    let r2 = second(k2)?;
    // m̃ = r1 + k1·t with r1 + k1·t ≡ r2 mod k2
    let inv = mod_inverse(k1, k2).ok_or_else(|| Error::Internal("K1 and K2 not coprime".into()))?;
    let t = ((r2 - r1).rem_euclid(k2) * inv).rem_euclid(k2);
    Ok(((r1 + k1 * t).rem_euclid(level), FlipBranch::Crt))
}

/// The index `m̃` with `(2Pm + a_{ℓ,ε})² ≡ (2Pm̃ + a_{ℓ,ε̃})² mod 4KP`, built as a
/// chain of single sign flips.
pub fn crt_pair(lp: &SeifertLoop, level: i64, ell: HalfInt, eps: &[i8], eps_target: &[i8], m: i64) -> Result<i64> {
    Ok(crt_pair_traced(lp, level, ell, eps, eps_target, m)?.0)
}

/// [`crt_pair`] together with the branch used for each flip.
pub fn crt_pair_traced(
    lp: &SeifertLoop,
    level: i64,
    ell: HalfInt,
    eps: &[i8],
    eps_target: &[i8],
    m: i64,
) -> Result<(i64, Vec<FlipBranch>)> {
    check_level(level)?;
    let mut current = eps.to_vec();
    let mut idx = m.rem_euclid(level);
    let mut branches = Vec::new();
    for j in 0..lp.n() {
        if current[j] != eps_target[j] {
            let (next, branch) = crt_flip(lp, level, ell, &current, j, idx)?;
            current[j] = -current[j];
            idx = next;
            branches.push(branch);
        }
    }
    Ok((idx, branches))
}

/// `(2Pm + a_{ℓ,ε})² mod 4KP`.
pub fn gauss_exponent(lp: &SeifertLoop, level: i64, ell: HalfInt, eps: &[i8], m: i64) -> i64 {
    let p = lp.product() as i128;
    let modulus = 4 * level as i128 * p;
    let v = 2 * p * m as i128 + a_coeff(lp, ell, eps) as i128;
    ((v * v).rem_euclid(modulus)) as i64
}

/// `Σ_ε ε₁⋯ε_n·(Σ_j ε_j/p_j)^s`, by brute force over all sign vectors.
pub fn eps_power_sum(lp: &SeifertLoop, s: u32) -> Rational {
    let mut total = Rational::new();
    for eps in sign_vectors(lp.n()) {
        let mut inner = Rational::new();
        for (&(p, _), &e) in lp.pairs().iter().zip(&eps) {
            inner += Rational::from((e as i64, p));
        }
        let mut term = Rational::from(1);
        for _ in 0..s {
            term *= &inner;
        }
        total += term * sign_product(&eps);
    }
    total
}

/// Checks `Σ_ε ε₁⋯ε_n (Σ ε_j/p_j)^s Σ_{m mod K} e^{(πi/2PK)(2Pm + a_{ℓ,ε})²} = 0`
/// once exactly (matching exponents via [`crt_pair`] and an exact sign sum)
/// and once by direct summation.
pub fn vanishing_check(lp: &SeifertLoop, level: i64, ell: HalfInt, s: u32, prec: u32) -> Result<VerificationReport> {
    check_level(level)?;
    if s as usize >= lp.n() {
        return Err(Error::Precondition(format!("s = {s} must be at most n − 1 = {}", lp.n() - 1)));
    }
    let signs = sign_vectors(lp.n());
    let reference = &signs[0];
    let mut report = VerificationReport::new("vanishing sums");
    let base = |row: ReportRow| row.param("loop", lp).param("K", level).param("ell", ell).param("s", s);

    let mut matched = true;
    let mut detail = String::new();
    let ref_exps: Vec<i64> = (0..level).map(|m| gauss_exponent(lp, level, ell, reference, m)).collect();
    for eps in &signs[1..] {
        let mut image = vec![false; level as usize];
        for m in 0..level {
            let mt = crt_pair(lp, level, ell, reference, eps, m)?;
            if image[mt as usize] || gauss_exponent(lp, level, ell, eps, mt) != ref_exps[m as usize] {
                matched = false;
                detail = format!("mismatch at ε = {eps:?}, m = {m}");
            }
            image[mt as usize] = true;
        }
        let mut a = ref_exps.clone();
        let mut b: Vec<i64> = (0..level).map(|m| gauss_exponent(lp, level, ell, eps, m)).collect();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            matched = false;
            detail = format!("exponent multisets differ at ε = {eps:?}");
        }
    }
    let sign_sum = eps_power_sum(lp, s);
    let exact_ok = matched && sign_sum == 0;
    let mut row = base(ReportRow::new("exact")).exact(format!("sign sum {sign_sum}"), "0", exact_ok);
    if !detail.is_empty() {
        row = row.note(detail);
    }
    report.push(row);

    let work = prec + 16;
    let mut total = HPComplex::zero(work);
    let mut max_term = 0f64;
    let mut count = 0usize;
    for eps in &signs {
        let mut inner = Rational::new();
        for (&(p, _), &e) in lp.pairs().iter().zip(eps) {
            inner += Rational::from((e as i64, p));
        }
        let mut weight = Rational::from(sign_product(eps));
        for _ in 0..s {
            weight *= &inner;
        }
        for m in 0..level {
            let e = gauss_exponent(lp, level, ell, eps, m);
            let term = HPComplex::cis_pi(&Rational::from((e, 2 * level * lp.product())), work).scale_rational(&weight);
            max_term = max_term.max(term.abs_f64());
            count += 1;
            total += &term;
        }
    }
    let threshold = 2f64.powi(-(prec as i32) / 2) * count as f64 * max_term.max(f64::MIN_POSITIVE);
    report.push(base(ReportRow::new("numeric")).compare(&total, &HPComplex::zero(work), threshold));
    Ok(report)
}
