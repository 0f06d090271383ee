//! The operators m̂, l̂ acting on families of q-series indexed by color, the
//! structure series behind the q-difference equations for Φ, exact checks of
//! those equations, and their classical limit.

use std::collections::BTreeMap;
use std::fmt;

use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::hp::HPComplex;
use crate::numerics::{qs_eval, QSeries};
use crate::report::{ReportRow, VerificationReport};
use crate::seifert_core::{a_coeff, sign_product, sign_vectors, HalfInt, SeifertLoop};
use crate::wrt_qseries::{
    apply_prefactor, blocks_min_index, blocks_series, phi_eval_auto, phi_series_raw, phi_shift, r_series, theta_min_index,
    theta_weight, ThetaBlock,
};

/// `coeff · q^{q_exp} · m̂^{m_exp} · ρ(m̂)^{ratio} · l̂^{l_pow}`, where `ρ` is an
/// opaque coefficient function of `m̂` (the C-ratio of the ratio form).
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub q_exp: Rational,
    pub m_exp: Rational,
    pub l_pow: u32,
    pub ratio: u32,
    pub coeff: Rational,
}

#[derive(Serialize)]
struct MonomialJson {
    q_exp: String,
    m_exp: String,
    l_pow: u32,
    #[serde(skip_serializing_if = "is_zero")]
    ratio: u32,
    coeff: String,
}

fn is_zero(x: &u32) -> bool {
    *x == 0
}

type Key = (Rational, Rational, u32, u32);

/// A normal-ordered q-difference operator: all `m̂` powers to the left of all `l̂` powers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QDiffOperator {
    terms: BTreeMap<Key, Rational>,
}

/// Letters of an operator word.
#[derive(Clone, Debug, PartialEq)]
pub enum Letter {
    Q(Rational),
    M(Rational),
    L,
}

impl QDiffOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(coeff: Rational, q_exp: Rational, m_exp: Rational, l_pow: u32) -> Self {
        let mut op = Self::zero();
        op.add_term((q_exp, m_exp, l_pow, 0), coeff);
        op
    }

    pub fn monomial_with_ratio(coeff: Rational, q_exp: Rational, m_exp: Rational, ratio: u32, l_pow: u32) -> Self {
        let mut op = Self::zero();
        op.add_term((q_exp, m_exp, l_pow, ratio), coeff);
        op
    }

    pub fn letter(l: &Letter) -> Self {
        let one = Rational::from(1);
        match l {
            Letter::Q(a) => Self::monomial(one, a.clone(), Rational::new(), 0),
            Letter::M(b) => Self::monomial(one, Rational::new(), b.clone(), 0),
            Letter::L => Self::monomial(one, Rational::new(), Rational::new(), 1),
        }
    }

    /// Normal form of a product of letters, multiplied left to right.
    pub fn from_word(word: &[Letter]) -> Result<Self> {
        let mut acc = Self::monomial(Rational::from(1), Rational::new(), Rational::new(), 0);
        for l in word {
            acc = acc.mul(&Self::letter(l))?;
        }
        Ok(acc)
    }

    fn add_term(&mut self, key: Key, coeff: Rational) {
        if coeff == 0 {
            return;
        }
        let e = self.terms.entry(key.clone()).or_default();
        *e += coeff;
        if *e == 0 {
            self.terms.remove(&key);
        }
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms
            .iter()
            .map(|((q, m, l, r), c)| Monomial { q_exp: q.clone(), m_exp: m.clone(), l_pow: *l, ratio: *r, coeff: c.clone() })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &Rational) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            out.add_term(k.clone(), Rational::from(c * s));
        }
        out
    }

    /// Product in normal order, using `l̂^c m̂^e = q^{ce/2} m̂^e l̂^c`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zero();
        for ((qa, ma, la, ra), ca) in &self.terms {
            for ((qb, mb, lb, rb), cb) in &other.terms {
                if *la > 0 && *rb > 0 {
                    return Err(Error::Precondition("cannot move l̂ past a C-ratio coefficient".into()));
                }
                let q = Rational::from(qa + qb) + Rational::from(mb * *la) / 2u32;
                out.add_term((q, Rational::from(ma + mb), la + lb, ra + rb), Rational::from(ca * cb));
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let list: Vec<MonomialJson> = self
            .monomials()
            .into_iter()
            .map(|m| MonomialJson {
                q_exp: m.q_exp.to_string(),
                m_exp: m.m_exp.to_string(),
                l_pow: m.l_pow,
                ratio: m.ratio,
                coeff: m.coeff.to_string(),
            })
            .collect();
        serde_json::to_value(list).expect("monomials serialize")
    }

    /// `q → 1`, `ρ → 1`: the polynomial in `(𝔪, 𝔩)`.
    pub fn classical_limit(&self) -> Result<LaurentPoly2> {
        let mut out = LaurentPoly2::default();
        for m in self.monomials() {
            if *m.m_exp.denom() != 1 {
                return Err(Error::Precondition(format!("non-integral m̂ exponent {}", m.m_exp)));
            }
            let e = m.m_exp.numer().to_i64().ok_or_else(|| Error::Internal("m̂ exponent overflows".into()))?;
            out.add_term(e, m.l_pow as i64, m.coeff);
        }
        Ok(out)
    }
}

impl fmt::Display for QDiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .monomials()
            .iter()
            .map(|m| {
                let mut s = format!("({})", m.coeff);
                if m.q_exp != 0 {
                    s += &format!("·q^({})", m.q_exp);
                }
                if m.m_exp != 0 {
                    s += &format!("·m^({})", m.m_exp);
                }
                if m.ratio > 0 {
                    s += &format!("·ρ^{}", m.ratio);
                }
                if m.l_pow > 0 {
                    s += &format!("·l^{}", m.l_pow);
                }
                s
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// A family `N ↦ F(q; N)` that can produce each member up to a requested lattice cutoff.
pub type Family<'a> = dyn Fn(i64, i64) -> Result<QSeries> + 'a;

fn lattice_index(x: &Rational, denom: i64) -> Result<i64> {
    let v = Rational::from(x * denom);
    if *v.denom() != 1 {
        return Err(Error::OffLattice(x.to_string(), denom));
    }
    v.numer().to_i64().ok_or_else(|| Error::Internal("lattice index overflows".into()))
}

/// `(op F)(N)` up to lattice index `cutoff`, exactly.
pub fn apply_operator(op: &QDiffOperator, family: &Family<'_>, denom: i64, n_color: i64, cutoff: i64) -> Result<QSeries> {
    let mut out = QSeries::truncated_zero(denom, cutoff);
    for m in op.monomials() {
        if m.ratio > 0 {
            return Err(Error::Precondition("C-ratio coefficients can only be applied numerically".into()));
        }
        let exponent = m.q_exp.clone() + Rational::from(&m.m_exp * n_color) / 2u32;
        let shift = lattice_index(&exponent, denom)?;
        let member = family(n_color + m.l_pow as i64, cutoff - shift)?;
        if member.denom() != denom {
            return Err(Error::LatticeMismatch(member.denom(), denom));
        }
        let shifted = member.shift(shift).scale(&m.coeff);
        if let Some(c) = shifted.cutoff() {
            if c < cutoff {
                return Err(Error::CutoffUnderflow { needed: cutoff, supplied: c });
            }
        }
        out = out.add(&shifted)?;
    }
    Ok(out.truncate(cutoff))
}

/// `Σ coeff·q^{q_exp + m_exp·N/2}·ρ(N)^{ratio}·F(N + l_pow)` at `q = exp(log_q)`.
pub fn apply_numeric(
    op: &QDiffOperator,
    log_q: &HPComplex,
    n_color: i64,
    family: &dyn Fn(i64) -> Result<HPComplex>,
    ratio: &dyn Fn(i64) -> Result<HPComplex>,
) -> Result<HPComplex> {
    let prec = log_q.prec();
    let mut acc = HPComplex::zero(prec);
    for m in op.monomials() {
        let e = m.q_exp.clone() + Rational::from(&m.m_exp * n_color) / 2u32;
        let mut term = log_q.scale_rational(&e).exp().scale_rational(&m.coeff);
        if m.ratio > 0 {
            term = &term * &ratio(n_color)?.powi(m.ratio as i64);
        }
        acc += &(&term * &family(n_color + m.l_pow as i64)?);
    }
    Ok(acc)
}

fn r(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

/// The ratio-form operator annihilating Φ, with `ρ = C(q m̂)/C(q^{1/2} m̂)`.
pub fn theorem_operator(product: i64) -> QDiffOperator {
    let p = product;
    let one = Rational::from(1);
    [
        QDiffOperator::monomial(one.clone(), Rational::new(), Rational::new(), 3),
        QDiffOperator::monomial_with_ratio(-one.clone(), r(-p, 2), Rational::new(), 1, 2),
        QDiffOperator::monomial(-one.clone(), Rational::from(-2 * p), Rational::from(-2 * p), 1),
        QDiffOperator::monomial_with_ratio(one, r(-3 * p, 2), Rational::from(-2 * p), 1, 0),
    ]
    .iter()
    .fold(QDiffOperator::zero(), |acc, m| acc.add(m))
}

/// Which second-order operator to use in the `(2, 2k+1)` case.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegenerateForm {
    /// `ρ = C'(q^{3/2} m̂)/C'(q^{1/2} m̂)` and last coefficient `−m̂^{−2(2k+1)}ρ`, as usually written.
    Displayed,
    /// Eliminating the source term from the first-order relation: `ρ = C'(q^{3/2} m̂²)/C'(q^{1/2} m̂²)`
    /// and last coefficient `−q^{−(2k+1)} m̂^{−2(2k+1)}ρ`.
    Derived,
}

/// The second-order operator for the `(2, 2k+1)` case, with `C'(𝔪) = 𝔪 − 𝔪^{−1}`.
pub fn degenerate_operator(k: i64, form: DegenerateForm) -> QDiffOperator {
    let one = Rational::from(1);
    let h = 2 * k + 1;
    let last_q = match form {
        DegenerateForm::Displayed => Rational::new(),
        DegenerateForm::Derived => Rational::from(-h),
    };
    [
        QDiffOperator::monomial(one.clone(), Rational::new(), Rational::new(), 2),
        QDiffOperator::monomial(one.clone(), r(-3 * h, 2), Rational::from(-2 * h), 1),
        QDiffOperator::monomial_with_ratio(-one.clone(), r(-h, 2), Rational::new(), 1, 1),
        QDiffOperator::monomial_with_ratio(-one, last_q, Rational::from(-2 * h), 1, 0),
    ]
    .iter()
    .fold(QDiffOperator::zero(), |acc, m| acc.add(m))
}

/// The theta-like series `C(𝔪)` in two variables, kept to `m ≤ m_max`.
#[derive(Clone, Debug)]
pub struct CSeries {
    /// `(coeff, q lattice index a²/(4P)·4P = a², 𝔪-exponent a)`; each pair `𝔪^{±a}` is stored once per sign.
    pub terms: Vec<(Integer, i64, i64)>,
    pub m_max: u64,
    pub denom: i64,
}

pub fn c_series(lp: &SeifertLoop, m_max: u64) -> CSeries {
    let step = 2 * lp.product();
    let n = lp.n();
    let mut terms = Vec::new();
    for eps in sign_vectors(n) {
        let sign = sign_product(&eps);
        let a0 = a_coeff(lp, HalfInt::from_int(0), &eps);
        for m in 0..=m_max {
            let w = theta_weight(n, m);
            if w == 0 {
                break;
            }
            let a = step * m as i64 + a0;
            let c = Integer::from(&w * sign);
            terms.push((c.clone(), a * a, a));
            terms.push((c, a * a, -a));
        }
    }
    CSeries { terms, m_max, denom: 4 * lp.product() }
}

impl CSeries {
    /// `C(𝔪)` at `q = exp(log_q)`, `𝔪 = exp(log_m)`, truncated at `m_max`.
    pub fn eval(&self, log_q: &HPComplex, log_m: &HPComplex) -> HPComplex {
        let prec = log_q.prec();
        let step = log_q.scale_rational(&Rational::from((1, self.denom)));
        let mut acc = HPComplex::zero(prec);
        for (c, qi, me) in &self.terms {
            let e = &step.scale_i64(*qi) + &log_m.scale_i64(*me);
            acc += &e.exp().scale_rational(&Rational::from(c));
        }
        acc
    }

    /// `C(q^s)` for rational `s`, summed as `q^{−Ps²}·Σ c·q^{(a + 2Ps)²/4P}` with equal
    /// exponents combined exactly first, so that cancelling terms never meet in floating point.
    pub fn eval_q_power(&self, log_q: &HPComplex, s: &Rational) -> HPComplex {
        let prec = log_q.prec();
        let p = self.denom / 4;
        let shift = Rational::from(s * (2 * p));
        let mut grouped: BTreeMap<Rational, Integer> = BTreeMap::new();
        for (c, _, me) in &self.terms {
            let x = Rational::from(&shift + *me);
            *grouped.entry(Rational::from(&x * &x) / self.denom).or_default() += c;
        }
        let lq = log_q.with_prec(prec + 32);
        let mut acc = HPComplex::zero(prec + 32);
        for (e, c) in grouped.iter().filter(|(_, c)| **c != 0) {
            acc += &lq.scale_rational(e).exp().scale_rational(&Rational::from(c));
        }
        let outer = lq.scale_rational(&(-Rational::from(s * s) * p)).exp();
        (&acc * &outer).with_prec(prec)
    }
}

/// `q^{P(N+1)²/4}·C(q^{(N+1)/2})` on the lattice `(1/4P)ℤ`, all terms up to `cutoff`.
pub fn c_specialized(lp: &SeifertLoop, n_color: i64, cutoff: i64) -> QSeries {
    let p = lp.product();
    let step = 2 * p;
    let n = lp.n();
    let s = p * (n_color + 1);
    let mut out = QSeries::truncated_zero(4 * p, cutoff);
    for eps in sign_vectors(n) {
        let sign = sign_product(&eps);
        let a0 = a_coeff(lp, HalfInt::from_int(0), &eps);
        for m in 0u64.. {
            let w = theta_weight(n, m);
            if w == 0 {
                break;
            }
            let a = step as i128 * m as i128 + a0 as i128;
            // a² + 2Pa(N+1) + P²(N+1)² = (a + s)², and likewise with −a
            let plus = (a + s as i128) * (a + s as i128);
            let minus = (a - s as i128) * (a - s as i128);
            let c = Rational::from(&w * sign);
            if plus <= cutoff as i128 {
                out.add_term(plus as i64, c.clone());
            }
            if minus <= cutoff as i128 {
                out.add_term(minus as i64, c);
            }
            if plus > cutoff as i128 && minus > cutoff as i128 && a >= s as i128 {
                break;
            }
        }
    }
    out
}

fn half_int_blocks(lp: &SeifertLoop, ell: HalfInt) -> Vec<ThetaBlock> {
    sign_vectors(lp.n())
        .into_iter()
        .map(|eps| ThetaBlock { sign: sign_product(&eps), offset: a_coeff(lp, ell, &eps) })
        .collect()
}

/// The series entering the q-difference relations at color `N`.
#[derive(Clone, Debug)]
pub struct StructureSeries {
    /// Lattice index of the leading monomial of `D(N)`.
    pub d_shift: i64,
    /// Lattice index of the monomial `D(N+2)/D(N)`.
    pub d_ratio: i64,
    pub r_plus: QSeries,
    pub r_minus: QSeries,
    /// `C̃(N) = D(N+2)(R((N+1)/2) + R(−(N+1)/2))`.
    pub c_tilde: QSeries,
    pub c: CSeries,
}

/// Lowest possible lattice index of `Φ(N)`.
pub fn phi_low(lp: &SeifertLoop, n_color: i64) -> Result<i64> {
    Ok(phi_shift(lp, n_color)? + theta_min_index(lp, n_color))
}

/// Lowest possible lattice index of `C̃(N)`.
pub fn c_tilde_low(lp: &SeifertLoop, n_color: i64) -> Result<i64> {
    let ell = HalfInt::from_twice(n_color + 1);
    let lo = blocks_min_index(lp, &half_int_blocks(lp, ell)).min(blocks_min_index(lp, &half_int_blocks(lp, ell.neg())));
    Ok(phi_shift(lp, n_color + 2)? + lo)
}

/// `C̃(N)` up to lattice index `cutoff`.
pub fn c_tilde(lp: &SeifertLoop, n_color: i64, cutoff: i64) -> Result<QSeries> {
    let inner_cut = cutoff - phi_shift(lp, n_color + 2)?;
    let ell = HalfInt::from_twice(n_color + 1);
    let mut blocks = half_int_blocks(lp, ell);
    blocks.extend(half_int_blocks(lp, ell.neg()));
    apply_prefactor(lp, n_color + 2, &blocks_series(lp, &blocks, inner_cut), cutoff)
}

pub fn structure_series(lp: &SeifertLoop, n_color: i64, cutoff: i64) -> Result<StructureSeries> {
    if n_color < 1 {
        return Err(Error::ColorTooSmall);
    }
    let d_shift = phi_shift(lp, n_color)?;
    let d_ratio = phi_shift(lp, n_color + 2)? - d_shift;
    let inner_cut = cutoff - phi_shift(lp, n_color + 2)?;
    let ell = HalfInt::from_twice(n_color + 1);
    let c_tilde = c_tilde(lp, n_color, cutoff)?;
    let m_max = ((cutoff.max(0) as f64).sqrt() / (2 * lp.product()) as f64).ceil() as u64 + 2;
    Ok(StructureSeries {
        d_shift,
        d_ratio,
        r_plus: r_series(lp, ell, inner_cut),
        r_minus: r_series(lp, ell.neg(), inner_cut),
        c_tilde,
        c: c_series(lp, m_max),
    })
}

fn first_residual(s: &QSeries) -> String {
    match s.terms().next() {
        None => "0".into(),
        Some((e, c)) => format!("{c}·q^({})", Rational::from((e, s.denom()))),
    }
}

fn exact_row(claim: &str, diff: &QSeries, lo: i64, hi: i64) -> ReportRow {
    let ok = diff.is_empty();
    let mut row = ReportRow::new(claim)
        .param("window_lo", lo)
        .param("window_hi", hi)
        .param("lattice", diff.denom())
        .exact(first_residual(diff), "0", ok);
    if !ok {
        row = row.note(format!("{} nonzero residual terms", diff.len()));
    }
    row
}

/// `A·B` known up to lattice index `x`, given lower bounds on the indices of `A` and `B`.
fn product_to(
    a: &dyn Fn(i64) -> Result<QSeries>,
    low_a: i64,
    b: &dyn Fn(i64) -> Result<QSeries>,
    low_b: i64,
    x: i64,
    denom: i64,
) -> Result<QSeries> {
    if x < low_a + low_b {
        return Ok(QSeries::truncated_zero(denom, x));
    }
    let sa = a(x - low_b)?;
    let sb = b(x - low_a)?;
    Ok(sa.mul(&sb)?.truncate(x))
}

fn phi_family(lp: &SeifertLoop) -> impl Fn(i64, i64) -> Result<QSeries> + '_ {
    move |n, cut| phi_series_raw(lp, n, cut)
}

/// Exact check of `Φ(N+2) = q^{−P(N+1)}Φ(N) + C̃(N)` for every term with lattice index up to `cutoff`.
pub fn verify_inhomogeneous(lp: &SeifertLoop, n_color: i64, cutoff: i64) -> Result<VerificationReport> {
    check_inhomogeneous(lp, n_color, cutoff, &phi_family(lp))
}

/// As [`verify_inhomogeneous`] with a caller-supplied family in place of Φ.
pub fn check_inhomogeneous(lp: &SeifertLoop, n_color: i64, cutoff: i64, phi: &Family<'_>) -> Result<VerificationReport> {
    if n_color < 1 {
        return Err(Error::ColorTooSmall);
    }
    let p = lp.product();
    let mono = -4 * p * p * (n_color + 1);
    let lo = phi_low(lp, n_color + 2)?.min(phi_low(lp, n_color)? + mono).min(c_tilde_low(lp, n_color)?);
    let x = cutoff;
    let lhs = phi(n_color + 2, x)?.truncate(x);
    let rhs = phi(n_color, x - mono)?.shift(mono).add(&c_tilde(lp, n_color, x)?)?.truncate(x);
    let diff = lhs.sub(&rhs)?;
    let mut report = VerificationReport::new("Φ(N+2) = q^{−P(N+1)}Φ(N) + C̃(N)");
    report.push(
        exact_row("inhomogeneous relation", &diff, lo, x)
            .param("loop", lp)
            .param("N", n_color)
            .param("terms_compared", lhs.len() + rhs.len()),
    );
    Ok(report)
}

/// Exact check of `C̃(N+1)Φ(N+2) − C̃(N)Φ(N+3) = q^{−P(N+1)}C̃(N+1)Φ(N) − q^{−P(N+2)}C̃(N)Φ(N+1)`.
pub fn verify_third_order(lp: &SeifertLoop, n_color: i64, cutoff: i64) -> Result<VerificationReport> {
    if n_color < 1 {
        return Err(Error::ColorTooSmall);
    }
    let p = lp.product();
    let d = 4 * p;
    let n = n_color;
    let m1 = -4 * p * p * (n + 1);
    let m2 = -4 * p * p * (n + 2);
    let ct = |k: i64| move |cut: i64| c_tilde(lp, k, cut);
    let ph = |k: i64| move |cut: i64| phi_series_raw(lp, k, cut);
    let (c0, c1) = (c_tilde_low(lp, n)?, c_tilde_low(lp, n + 1)?);
    let (f0, f1, f2, f3) = (phi_low(lp, n)?, phi_low(lp, n + 1)?, phi_low(lp, n + 2)?, phi_low(lp, n + 3)?);
    let lo = (c1 + f2).min(c0 + f3).min(m1 + c1 + f0).min(m2 + c0 + f1);
    let x = cutoff;
    let t1 = product_to(&ct(n + 1), c1, &ph(n + 2), f2, x, d)?;
    let t2 = product_to(&ct(n), c0, &ph(n + 3), f3, x, d)?;
    let t3 = product_to(&ct(n + 1), c1, &ph(n), f0, x - m1, d)?.shift(m1);
    let t4 = product_to(&ct(n), c0, &ph(n + 1), f1, x - m2, d)?.shift(m2);
    let diff = t1.sub(&t2)?.sub(&t3)?.add(&t4)?.truncate(x);
    let mut report = VerificationReport::new("third-order q-difference equation (product form)");
    report.push(
        exact_row("third-order relation", &diff, lo, x)
            .param("loop", lp)
            .param("N", n_color)
            .param("terms_compared", t1.len() + t2.len() + t3.len() + t4.len()),
    );
    Ok(report)
}

/// `k` with orders `{2, 2k+1}` for the two-fibre loops where the first-order relation applies.
pub fn degenerate_k(lp: &SeifertLoop) -> Option<i64> {
    let o = lp.orders();
    if o.len() != 2 || !o.contains(&2) {
        return None;
    }
    let other = if o[0] == 2 { o[1] } else { o[0] };
    Some((other - 1) / 2)
}

/// `q^{(k+1/2)(1−N)}·[2N−1]_q` on the lattice `(1/4P)ℤ`, exact.
fn degenerate_source(p: i64, n_color: i64) -> QSeries {
    let d = 4 * p;
    let mut s = QSeries::zero(d);
    for j in -(n_color - 1)..=(n_color - 1) {
        s.add_term(p * p * (1 - n_color) + d * j, Rational::from(1));
    }
    s
}

/// Exact check of `Φ(N) = −q^{(k+1/2)(1−2N)}Φ(N−1) + q^{(k+1/2)(1−N)}[2N−1]_q` for `N ≥ 2`.
pub fn verify_degenerate_first_order(lp: &SeifertLoop, n_color: i64, cutoff: i64) -> Result<VerificationReport> {
    let Some(_) = degenerate_k(lp) else {
        return Err(Error::Precondition("first-order relation needs orders {2, 2k+1}".into()));
    };
    if n_color < 2 {
        return Err(Error::Precondition("first-order relation needs N ≥ 2".into()));
    }
    let p = lp.product();
    let mono = p * p * (1 - 2 * n_color);
    let source = degenerate_source(p, n_color);
    let lo = phi_low(lp, n_color)?.min(phi_low(lp, n_color - 1)? + mono).min(source.min_index().unwrap());
    let x = cutoff;
    let lhs = phi_series_raw(lp, n_color, x)?;
    let rhs = phi_series_raw(lp, n_color - 1, x - mono)?
        .shift(mono)
        .scale(&Rational::from(-1))
        .add(&source)?
        .truncate(x);
    let diff = lhs.sub(&rhs)?.truncate(x);
    let mut report = VerificationReport::new("first-order relation for the (2, 2k+1) case");
    report.push(
        exact_row("first-order relation", &diff, lo, x)
            .param("loop", lp)
            .param("N", n_color)
            .param("terms_compared", lhs.len() + rhs.len()),
    );
    Ok(report)
}

fn phi_numeric<'a>(lp: &'a SeifertLoop, log_q: &'a HPComplex, tol: f64) -> impl Fn(i64) -> Result<HPComplex> + 'a {
    move |n| Ok(phi_eval_auto(lp, n, log_q, tol)?.0)
}

/// Relative residual `|op Φ(N)| / max_j |term_j|` of a ratio-form operator at real `0 < q < 1`.
fn ratio_form_residual(
    op: &QDiffOperator,
    lp: &SeifertLoop,
    n_color: i64,
    log_q: &HPComplex,
    ratio: &dyn Fn(i64) -> Result<HPComplex>,
) -> Result<(f64, f64)> {
    let tol = 2f64.powi(-(log_q.prec() as i32) * 3 / 4);
    let phi = phi_numeric(lp, log_q, tol);
    let total = apply_numeric(op, log_q, n_color, &phi, ratio)?;
    let mut scale: f64 = 0.0;
    for m in op.monomials() {
        let single = QDiffOperator::monomial_with_ratio(m.coeff, m.q_exp, m.m_exp, m.ratio, m.l_pow);
        scale = scale.max(apply_numeric(&single, log_q, n_color, &phi, ratio)?.abs_f64());
    }
    Ok((total.abs_f64(), scale))
}

/// Numeric check of the ratio form at `q = exp(log_q)` (real, inside the disk).
pub fn verify_ratio_form_numeric(lp: &SeifertLoop, n_color: i64, log_q: &HPComplex) -> Result<VerificationReport> {
    let p = lp.product();
    let tol = 2f64.powi(-(log_q.prec() as i32) * 3 / 4);
    let c = c_series_for(lp, log_q, n_color + 3, tol);
    let ratio = |n: i64| -> Result<HPComplex> {
        let num = c.eval_q_power(log_q, &Rational::from((n + 2, 2)));
        let den = c.eval_q_power(log_q, &Rational::from((n + 1, 2)));
        Ok(&num / &den)
    };
    let (res, scale) = ratio_form_residual(&theorem_operator(p), lp, n_color, log_q, &ratio)?;
    let mut report = VerificationReport::new("ratio-form q-difference operator annihilates Φ");
    report.push(relative_row("ratio form", res, scale, log_q.prec()).param("loop", lp).param("N", n_color));
    Ok(report)
}

/// Numeric check of a second-order operator for the `(2, 2k+1)` case.
pub fn verify_degenerate_second_order(
    lp: &SeifertLoop,
    n_color: i64,
    log_q: &HPComplex,
    form: DegenerateForm,
) -> Result<VerificationReport> {
    let Some(k) = degenerate_k(lp) else {
        return Err(Error::Precondition("second-order relation needs orders {2, 2k+1}".into()));
    };
    let c_prime = |e: Rational| -> HPComplex {
        let x = log_q.scale_rational(&e).exp();
        &x - &x.recip()
    };
    // argument exponents of C' at m̂ = q^{N/2}
    let (num, den) = match form {
        DegenerateForm::Displayed => ((3, 1), (1, 1)),
        DegenerateForm::Derived => ((3, 2), (1, 2)),
    };
    let ratio = |n: i64| -> Result<HPComplex> {
        Ok(&c_prime(Rational::from((num.0 + num.1 * n, 2))) / &c_prime(Rational::from((den.0 + den.1 * n, 2))))
    };
    let (res, scale) = ratio_form_residual(&degenerate_operator(k, form), lp, n_color, log_q, &ratio)?;
    let mut report = VerificationReport::new("second-order operator for the (2, 2k+1) case annihilates Φ");
    report.push(
        relative_row("second-order relation", res, scale, log_q.prec())
            .param("loop", lp)
            .param("N", n_color)
            .param("form", format!("{form:?}")),
    );
    Ok(report)
}

fn relative_row(claim: &str, residual: f64, scale: f64, prec: u32) -> ReportRow {
    let rel = if scale > 0.0 { residual / scale } else { residual };
    let tol = 2f64.powi(-(prec as i32) / 2);
    let mut row = ReportRow::new(claim);
    row.lhs = format!("{residual:.6e}");
    row.rhs = "0".into();
    row.residual = rel;
    row.tolerance = tol;
    row.pass = rel < tol;
    row.note(format!("largest single term {scale:.6e}"))
}

/// A C-series long enough that omitted terms at `𝔪 = q^{s}`, `s ≤ s_max/2`, are below `tol`.
fn c_series_for(lp: &SeifertLoop, log_q: &HPComplex, s_max: i64, tol: f64) -> CSeries {
    let p = lp.product();
    let rq = -log_q.re().to_f64();
    let mut m_max = 1u64;
    loop {
        let a = (2 * p * m_max as i64) as f64 - (p * lp.n() as i64) as f64;
        let ln_term = -rq * (a * a / (4 * p) as f64 - a * s_max as f64 / 2.0)
            + (lp.n() as f64) * ((m_max + lp.n() as u64) as f64).ln();
        if a > 0.0 && ln_term < tol.ln() - 700.0 && a * a / (4 * p) as f64 > a * s_max as f64 {
            break;
        }
        m_max += 1;
    }
    c_series(lp, m_max)
}

/// Numeric check that `C̃(N+1)/C̃(N) = q^{−P/2}·C(q𝔪)/C(q^{1/2}𝔪)` at `𝔪 = q^{N/2}`.
pub fn verify_c_ratio(lp: &SeifertLoop, n_color: i64, log_q: &HPComplex) -> Result<VerificationReport> {
    let p = lp.product();
    let prec = log_q.prec();
    let tol = 2f64.powi(-(prec as i32) * 3 / 4);
    let mut cut = 64 * p;
    let eval_ct = |k: i64, cut: i64| -> Result<(HPComplex, f64)> {
        let s = c_tilde(lp, k, cut + phi_shift(lp, k + 2)?)?;
        let (v, t) = qs_eval(&s, log_q)?;
        Ok((v, t.to_f64()))
    };
    let (a, b) = loop {
        let (a, ta) = eval_ct(n_color + 1, cut)?;
        let (b, tb) = eval_ct(n_color, cut)?;
        if (ta < tol * a.abs_f64() && tb < tol * b.abs_f64()) || cut > (1 << 40) {
            break (a, b);
        }
        cut *= 2;
    };
    let lhs = &a / &b;
    let c = c_series_for(lp, log_q, n_color + 2, tol);
    let num = c.eval_q_power(log_q, &Rational::from((n_color + 2, 2)));
    let den = c.eval_q_power(log_q, &Rational::from((n_color + 1, 2)));
    let rhs = &log_q.scale_rational(&Rational::from((-p, 2))).exp() * &(&num / &den);
    let scale = rhs.abs_f64().max(1e-300);
    let mut report = VerificationReport::new("C̃(N+1)/C̃(N) equals the C-ratio");
    report.push(
        ReportRow::new("C-ratio")
            .param("loop", lp)
            .param("N", n_color)
            .compare(&lhs, &rhs, 2f64.powi(-(prec as i32) / 2) * scale),
    );
    Ok(report)
}

/// Finitely supported polynomial in `𝔪^{±1}` and `𝔩`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LaurentPoly2 {
    terms: BTreeMap<(i64, i64), Rational>,
}

#[derive(Serialize)]
struct Poly2Json {
    m_exp: i64,
    l_exp: i64,
    coeff: String,
}

impl LaurentPoly2 {
    pub fn monomial(m_exp: i64, l_exp: i64, coeff: Rational) -> Self {
        let mut p = Self::default();
        p.add_term(m_exp, l_exp, coeff);
        p
    }

    pub fn add_term(&mut self, m_exp: i64, l_exp: i64, coeff: Rational) {
        if coeff == 0 {
            return;
        }
        let e = self.terms.entry((m_exp, l_exp)).or_default();
        *e += coeff;
        if *e == 0 {
            self.terms.remove(&(m_exp, l_exp));
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((m, l), c) in &other.terms {
            out.add_term(*m, *l, c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for ((ma, la), ca) in &self.terms {
            for ((mb, lb), cb) in &other.terms {
                out.add_term(ma + mb, la + lb, Rational::from(ca * cb));
            }
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, i64, &Rational)> + '_ {
        self.terms.iter().map(|((m, l), c)| (*m, *l, c))
    }

    pub fn eval(&self, m: &Rational, l: &Rational) -> Rational {
        let pow = |x: &Rational, e: i64| -> Rational {
            let mut acc = Rational::from(1);
            for _ in 0..e.unsigned_abs() {
                acc *= x;
            }
            if e < 0 {
                acc.recip()
            } else {
                acc
            }
        };
        self.terms.iter().map(|((me, le), c)| Rational::from(c * pow(m, *me)) * pow(l, *le)).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let list: Vec<Poly2Json> =
            self.terms().map(|(m, l, c)| Poly2Json { m_exp: m, l_exp: l, coeff: c.to_string() }).collect();
        serde_json::to_value(list).expect("polynomial serializes")
    }
}

impl fmt::Display for LaurentPoly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by(|a, b| (b.0 .1, b.0 .0).cmp(&(a.0 .1, a.0 .0)));
        for ((m, l), c) in ordered {
            let neg = *c < 0;
            let mag = Rational::from(c.abs_ref());
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let mut parts = Vec::new();
            if mag != 1 || (*m == 0 && *l == 0) {
                parts.push(mag.to_string());
            }
            if *m != 0 {
                parts.push(format!("m^{m}"));
            }
            if *l == 1 {
                parts.push("l".into());
            } else if *l != 0 {
                parts.push(format!("l^{l}"));
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// Which classical limit to produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicalCase {
    General { product: i64 },
    Degenerate { k: i64 },
}

impl ClassicalCase {
    pub fn for_loop(lp: &SeifertLoop) -> Self {
        match degenerate_k(lp) {
            Some(k) => ClassicalCase::Degenerate { k },
            None => ClassicalCase::General { product: lp.product() },
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClassicalLimit {
    pub polynomial: LaurentPoly2,
    pub factors: Vec<LaurentPoly2>,
    pub factored: String,
    pub report: VerificationReport,
}

fn lin(l_coeff: i64, m_exp: i64, c: i64) -> LaurentPoly2 {
    let mut p = LaurentPoly2::monomial(0, 1, Rational::from(l_coeff));
    p.add_term(m_exp, 0, Rational::from(c));
    p
}

pub fn classical_limit(case: ClassicalCase) -> Result<ClassicalLimit> {
    let (op, polynomial, factors, factored, roots) = match case {
        ClassicalCase::General { product: p } => {
            let mut poly = LaurentPoly2::monomial(0, 3, Rational::from(1));
            poly.add_term(0, 2, Rational::from(-1));
            poly.add_term(-2 * p, 1, Rational::from(-1));
            poly.add_term(-2 * p, 0, Rational::from(1));
            let factors = vec![lin(1, 0, -1), lin(1, -p, -1), lin(1, -p, 1)];
            let two_p = Rational::from(Integer::from(1) << p as u32).recip();
            let roots = vec![
                (Rational::from(2), two_p.clone()),
                (Rational::from(2), -two_p),
                (Rational::from((3, 7)), Rational::from(1)),
            ];
            (theorem_operator(p), poly, factors, format!("(l - 1)(l - m^-{p})(l + m^-{p})"), roots)
        }
        ClassicalCase::Degenerate { k } => {
            let h = 2 * (2 * k + 1);
            let mut poly = LaurentPoly2::monomial(0, 2, Rational::from(1));
            poly.add_term(-h, 1, Rational::from(1));
            poly.add_term(0, 1, Rational::from(-1));
            poly.add_term(-h, 0, Rational::from(-1));
            let factors = vec![lin(1, 0, -1), lin(1, -h, 1)];
            let roots = vec![
                (Rational::from(2), -Rational::from(Integer::from(1) << h as u32).recip()),
                (Rational::from((3, 7)), Rational::from(1)),
            ];
            (degenerate_operator(k, DegenerateForm::Displayed), poly, factors, format!("(l - 1)(l + m^-{h})"), roots)
        }
    };
    let mut report = VerificationReport::new("classical limit of the q-difference operator");
    let from_op = op.classical_limit()?;
    report.push(ReportRow::new("operator at q = 1, C-ratio = 1").exact(&from_op, &polynomial, from_op == polynomial));
    let expanded = factors.iter().fold(LaurentPoly2::monomial(0, 0, Rational::from(1)), |acc, f| acc.mul(f));
    report.push(ReportRow::new("factored form expands").exact(&expanded, &polynomial, expanded == polynomial));
    for (m, l) in roots {
        let v = polynomial.eval(&m, &l);
        report.push(ReportRow::new("root").param("m", &m).param("l", &l).exact(&v, 0, v == 0));
    }
    Ok(ClassicalLimit { polynomial, factors, factored, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hp::DEFAULT_PRECISION;
    use proptest::prelude::*;

    fn lp(s: &str) -> SeifertLoop {
        s.parse().unwrap()
    }

    fn ln_q(q: f64) -> HPComplex {
        HPComplex::from_real(rug::Float::with_val(DEFAULT_PRECISION, q).ln())
    }

    /// A family with unrelated members, on the lattice `(1/4)ℤ`.
    fn toy_family(n: i64, cut: i64) -> Result<QSeries> {
        let terms = (0..=cut.max(0)).map(|e| (e, Rational::from((e * e + n, n + 3))));
        Ok(QSeries::from_terms(4, terms, Some(cut)).truncate(cut))
    }

    #[test]
    fn q_commutation_on_a_family() {
        let lm = QDiffOperator::from_word(&[Letter::L, Letter::M(Rational::from(1))]).unwrap();
        let ml = QDiffOperator::from_word(&[Letter::Q(r(1, 2)), Letter::M(Rational::from(1)), Letter::L]).unwrap();
        assert_eq!(lm, ml);
        // l̂m̂ directly: (l̂(m̂F))(N) = q^{(N+1)/2}F(N+1)
        for n in 1..4 {
            let direct = toy_family(n + 1, 40 - 2 * (n + 1)).unwrap().shift(2 * (n + 1)).truncate(30);
            let via = apply_operator(&lm, &toy_family, 4, n, 30).unwrap();
            assert_eq!(direct, via.truncate(30));
        }
    }

    #[test]
    fn m_acts_by_color_power() {
        let m = QDiffOperator::letter(&Letter::M(Rational::from(1)));
        let out = apply_operator(&m, &toy_family, 4, 3, 25).unwrap();
        let expect = toy_family(3, 19).unwrap().shift(6);
        assert_eq!(out, expect.truncate(25));
    }

    #[test]
    fn apply_is_linear() {
        let a = QDiffOperator::from_word(&[Letter::L, Letter::L]).unwrap();
        let b = QDiffOperator::from_word(&[Letter::M(Rational::from(-2)), Letter::L]).unwrap();
        let s = r(3, 5);
        let combo = a.add(&b.scale(&s));
        let lhs = apply_operator(&combo, &toy_family, 4, 2, 20).unwrap();
        let rhs = apply_operator(&a, &toy_family, 4, 2, 20)
            .unwrap()
            .add(&apply_operator(&b, &toy_family, 4, 2, 20).unwrap().scale(&s))
            .unwrap();
        assert_eq!(lhs.sub(&rhs).unwrap().len(), 0);
    }

    #[test]
    fn off_lattice_shift_rejected() {
        let m = QDiffOperator::letter(&Letter::M(r(1, 3)));
        assert!(matches!(apply_operator(&m, &toy_family, 4, 1, 10), Err(Error::OffLattice(..))));
    }

    #[test]
    fn cutoff_underflow_reported() {
        let short = |n: i64, _cut: i64| toy_family(n, 5);
        let l = QDiffOperator::letter(&Letter::L);
        assert!(matches!(apply_operator(&l, &short, 4, 1, 10), Err(Error::CutoffUnderflow { .. })));
    }

    #[test]
    fn operator_json_shape() {
        let v = theorem_operator(30).to_json();
        let list = v.as_array().unwrap();
        assert_eq!(list.len(), 4);
        assert!(list.iter().all(|m| m.get("q_exp").is_some() && m.get("l_pow").is_some() && m.get("coeff").is_some()));
    }

    #[test]
    fn d_ratio_is_monomial() {
        for (s, n) in [("2/1,3/1,5/-4", 1), ("2/1,3/-1,7/-1", 2), ("3/-1,4/-1,5/3", 3)] {
            let loop_ = lp(s);
            let st = structure_series(&loop_, n, 0).unwrap();
            let p = loop_.product();
            assert_eq!(st.d_ratio, -4 * p * p * (n + 1));
        }
    }

    #[test]
    fn r_pair_equals_specialized_c() {
        for (s, n) in [("2/1,3/1,5/-4", 1), ("2/1,3/-1,7/-1", 2), ("2/1,3/1,5/-2,7/-3", 1)] {
            let loop_ = lp(s);
            let cut = 200_000;
            let sum = r_series(&loop_, HalfInt::from_twice(n + 1), cut)
                .add(&r_series(&loop_, HalfInt::from_twice(-(n + 1)), cut))
                .unwrap();
            let spec = c_specialized(&loop_, n, cut);
            assert!(sum.sub(&spec).unwrap().is_empty(), "{s}");
            assert!(sum.len() > 4);
        }
    }

    #[test]
    fn c_ratio_at_point_three() {
        for (s, n) in [("2/1,3/1,5/-4", 1), ("2/1,3/-1,7/-1", 2)] {
            let rep = verify_c_ratio(&lp(s), n, &ln_q(0.3)).unwrap();
            assert!(rep.pass, "{s}: {:?}", rep.rows);
        }
    }

    #[test]
    fn inhomogeneous_235() {
        let rep = verify_inhomogeneous(&lp("2/1,3/1,5/-4"), 1, 120).unwrap();
        assert!(rep.pass, "{:?}", rep.rows);
        let compared: usize = rep.rows[0].params["terms_compared"].parse().unwrap();
        assert!(compared > 50);
    }

    #[test]
    fn perturbed_family_fails() {
        let loop_ = lp("2/1,3/1,5/-4");
        let bad = |n: i64, cut: i64| -> Result<QSeries> {
            let s = phi_series_raw(&loop_, n, cut)?;
            if n != 1 {
                return Ok(s);
            }
            let (e, _) = s.terms().next().unwrap();
            let mut t = s.clone();
            t.add_term(e, Rational::from(1));
            Ok(t)
        };
        let rep = check_inhomogeneous(&loop_, 1, 480, &bad).unwrap();
        assert!(!rep.pass);
        assert_ne!(rep.rows[0].lhs, "0");
    }

    #[test]
    fn third_order_examples() {
        for (s, n) in [("2/1,3/1,5/-4", 1), ("2/1,3/-1,7/-1", 2)] {
            let loop_ = lp(s);
            let rep = verify_third_order(&loop_, n, 4 * loop_.product()).unwrap();
            assert!(rep.pass, "{s}: {:?}", rep.rows);
            let compared: usize = rep.rows[0].params["terms_compared"].parse().unwrap();
            assert!(compared > 100);
        }
    }

    #[test]
    fn trefoil_first_order() {
        for n in 2..6 {
            let rep = verify_degenerate_first_order(&lp("2/1,3/-1"), n, 200).unwrap();
            assert!(rep.pass, "N = {n}: {:?}", rep.rows);
        }
    }

    #[test]
    fn degenerate_second_order_numeric() {
        for s in ["2/1,3/-1", "2/1,5/-2"] {
            for n in 1..4 {
                let rep = verify_degenerate_second_order(&lp(s), n, &ln_q(0.2), DegenerateForm::Derived).unwrap();
                assert!(rep.pass, "N = {n}: {:?}", rep.rows);
                let shown = verify_degenerate_second_order(&lp(s), n, &ln_q(0.2), DegenerateForm::Displayed).unwrap();
                assert!(!shown.pass);
                assert!(shown.rows[0].residual > 1e-20, "{s} N = {n}");
            }
        }
    }

    #[test]
    fn degenerate_forms_share_classical_limit() {
        let a = degenerate_operator(2, DegenerateForm::Displayed).classical_limit().unwrap();
        let b = degenerate_operator(2, DegenerateForm::Derived).classical_limit().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ratio_form_numeric() {
        let rep = verify_ratio_form_numeric(&lp("2/1,3/1,5/-4"), 1, &ln_q(0.3)).unwrap();
        assert!(rep.pass, "{:?}", rep.rows);
    }

    #[test]
    fn a_polynomial_general() {
        let cl = classical_limit(ClassicalCase::General { product: 30 }).unwrap();
        assert!(cl.report.pass, "{:?}", cl.report.rows);
        assert_eq!(cl.polynomial.to_string(), "l^3 - l^2 - m^-60*l + m^-60");
    }

    #[test]
    fn a_polynomial_degenerate() {
        let cl = classical_limit(ClassicalCase::for_loop(&lp("2/1,3/-1"))).unwrap();
        assert!(cl.report.pass, "{:?}", cl.report.rows);
        assert_eq!(cl.polynomial.to_string(), "l^2 - l + m^-6*l - m^-6");
    }

    fn letter() -> impl Strategy<Value = Letter> {
        prop_oneof![
            (-3i64..4, 1i64..3).prop_map(|(a, b)| Letter::Q(r(a, b))),
            (-3i64..4, 1i64..3).prop_map(|(a, b)| Letter::M(r(a, b))),
            Just(Letter::L),
        ]
    }

    proptest! {
        #[test]
        fn normal_form_is_associative(word in proptest::collection::vec(letter(), 0..10), split in 0usize..10) {
            let split = split.min(word.len());
            let whole = QDiffOperator::from_word(&word).unwrap();
            let left = QDiffOperator::from_word(&word[..split]).unwrap();
            let right = QDiffOperator::from_word(&word[split..]).unwrap();
            prop_assert_eq!(whole, left.mul(&right).unwrap());
        }

        #[test]
        fn factored_general_expands(p in 1i64..400) {
            let cl = classical_limit(ClassicalCase::General { product: p }).unwrap();
            prop_assert!(cl.report.pass);
        }
    }
}
