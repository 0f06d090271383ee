//! Truncated q-series on a rational exponent lattice with exact coefficients.
//!
//! A series stores terms `c_e q^{e/D}` for integer lattice indices `e` and a
//! fixed lattice denominator `D`. A truncated series knows every term with
//! `e <= cutoff`; an exact series (no cutoff) is a finite Laurent polynomial.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::numerics::hp::HPComplex;

/// One family of terms whose omitted tail can be bounded structurally.
#[derive(Clone, Debug, PartialEq)]
pub enum TailStream {
    /// Terms at lattice index `(step*m + offset)^2 + shift`, `m >= 0`, with
    /// `|coeff| <= weight * binom(m + d, d)` for `binomial = Some(d)`; with
    /// `binomial = None` only `m = 0` occurs.
    Quadratic { weight: f64, binomial: Option<u32>, step: i64, offset: i64, shift: i64 },
    /// Terms at lattice index `start + step*k`, `k >= 0`, with `|coeff| <= weight`.
    Linear { weight: f64, start: i64, step: i64 },
    /// `weight · q^{shift/D} · S(q) · Σ_{k≥0} q^{k·step/D}`, where `S` is described by
    /// `inner` and the absolute coefficients of `S` up to its own cutoff sum to at most `head_mass`.
    Convolved { weight: f64, shift: i64, step: i64, head_mass: f64, inner: Box<TailCertificate> },
}

/// Structural description of all terms of a series, truncated or not.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TailCertificate {
    pub streams: Vec<TailStream>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineMode {
    Add,
    Mul,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QSeries {
    denom: i64,
    terms: BTreeMap<i64, Rational>,
    cutoff: Option<i64>,
    tail: Option<TailCertificate>,
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl QSeries {
    /// The exact zero series.
    pub fn zero(denom: i64) -> Self {
        assert!(denom > 0, "lattice denominator must be positive");
        QSeries { denom, terms: BTreeMap::new(), cutoff: None, tail: None }
    }

    /// Zero with everything above `cutoff` unknown.
    pub fn truncated_zero(denom: i64, cutoff: i64) -> Self {
        let mut s = Self::zero(denom);
        s.cutoff = Some(cutoff);
        s
    }

    pub fn monomial(denom: i64, index: i64, coeff: Rational) -> Self {
        let mut s = Self::zero(denom);
        s.add_term(index, coeff);
        s
    }

    pub fn from_terms<I>(denom: i64, terms: I, cutoff: Option<i64>) -> Self
    where
        I: IntoIterator<Item = (i64, Rational)>,
    {
        let mut s = Self::zero(denom);
        s.cutoff = cutoff;
        for (e, c) in terms {
            s.add_term(e, c);
        }
        s
    }

    /// Adds `c q^{e/D}`; terms above the cutoff are dropped.
    pub fn add_term(&mut self, index: i64, coeff: Rational) {
        if coeff == 0 || self.cutoff.is_some_and(|x| index > x) {
            return;
        }
        match self.terms.entry(index) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if *o.get() == 0 {
                    o.remove();
                }
            }
        }
    }

    pub fn with_tail(mut self, tail: TailCertificate) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn tail(&self) -> Option<&TailCertificate> {
        self.tail.as_ref()
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    /// Lattice cutoff; `None` for an exact (complete) series.
    pub fn cutoff(&self) -> Option<i64> {
        self.cutoff
    }

    pub fn cutoff_exponent(&self) -> Option<Rational> {
        self.cutoff.map(|c| Rational::from((c, self.denom)))
    }

    pub fn is_exact(&self) -> bool {
        self.cutoff.is_none()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &Rational)> + '_ {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn coeff(&self, index: i64) -> Rational {
        self.terms.get(&index).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_index(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_index(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    /// Lowers the cutoff (never raises it).
    pub fn truncate(&self, cutoff: i64) -> Self {
        let cut = min_opt(self.cutoff, Some(cutoff)).unwrap();
        QSeries {
            denom: self.denom,
            terms: self.terms.range(..=cut).map(|(e, c)| (*e, c.clone())).collect(),
            cutoff: Some(cut),
            tail: self.tail.clone(),
        }
    }

    /// Multiplies by `q^{k/D}`.
    pub fn shift(&self, k: i64) -> Self {
        QSeries {
            denom: self.denom,
            terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect(),
            cutoff: self.cutoff.map(|x| x + k),
            tail: None,
        }
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if *s == 0 {
            return QSeries { denom: self.denom, terms: BTreeMap::new(), cutoff: self.cutoff, tail: None };
        }
        QSeries {
            denom: self.denom,
            terms: self.terms.iter().map(|(e, c)| (*e, Rational::from(c * s))).collect(),
            cutoff: self.cutoff,
            tail: None,
        }
    }

    /// Re-expresses the series on the finer lattice `(1/new_denom)Z`.
    pub fn rescale(&self, new_denom: i64) -> Result<Self> {
        if new_denom % self.denom != 0 {
            return Err(Error::LatticeMismatch(self.denom, new_denom));
        }
        let f = new_denom / self.denom;
        Ok(QSeries {
            denom: new_denom,
            terms: self.terms.iter().map(|(e, c)| (e * f, c.clone())).collect(),
            cutoff: self.cutoff.map(|x| x * f),
            tail: None,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_lattice(other)?;
        let cutoff = min_opt(self.cutoff, other.cutoff);
        let mut out = QSeries { denom: self.denom, terms: BTreeMap::new(), cutoff, tail: None };
        for (e, c) in self.terms.iter().chain(other.terms.iter()) {
            out.add_term(*e, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&Rational::from(-1)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_lattice(other)?;
        let cutoff = self.mul_cutoff(other);
        if self.is_empty() || other.is_empty() {
            return Ok(QSeries { denom: self.denom, terms: BTreeMap::new(), cutoff, tail: None });
        }
        let terms = match fast_product(self, other, cutoff) {
            Some(t) => t,
            None => slow_product(self, other, cutoff),
        };
        Ok(QSeries { denom: self.denom, terms, cutoff, tail: None })
    }

    /// Multiplies by `Σ_{k≥0} q^{k·step/D}` (that is, by `1/(1 − q^{step/D})`).
    ///
    /// The geometric factor is infinite, so the result is always truncated:
    /// at the own cutoff, or at `cutoff` for an exact input.
    pub fn mul_geometric(&self, step: i64, cutoff: i64) -> Self {
        assert!(step > 0);
        let cut = min_opt(self.cutoff, Some(cutoff)).unwrap();
        let mut by_class: BTreeMap<i64, Vec<(i64, &Rational)>> = BTreeMap::new();
        for (e, c) in self.terms.range(..=cut) {
            by_class.entry(e.rem_euclid(step)).or_default().push((*e, c));
        }
        let mut terms = BTreeMap::new();
        for (_, list) in by_class {
            let mut acc = Rational::new();
            let mut idx = 0;
            let mut e = list[0].0;
            while e <= cut {
                while idx < list.len() && list[idx].0 == e {
                    acc += list[idx].1;
                    idx += 1;
                }
                if acc != 0 {
                    terms.insert(e, acc.clone());
                }
                e += step;
            }
        }
        QSeries { denom: self.denom, terms, cutoff: Some(cut), tail: None }
    }

    /// CSV rows `exponent_numerator,exponent_denominator,coeff_numerator,coeff_denominator`.
    pub fn csv_rows(&self) -> Vec<[String; 4]> {
        self.terms
            .iter()
            .map(|(e, c)| {
                let x = Rational::from((*e, self.denom));
                [x.numer().to_string(), x.denom().to_string(), c.numer().to_string(), c.denom().to_string()]
            })
            .collect()
    }

    fn check_lattice(&self, other: &Self) -> Result<()> {
        if self.denom != other.denom {
            return Err(Error::LatticeMismatch(self.denom, other.denom));
        }
        Ok(())
    }

    fn mul_cutoff(&self, other: &Self) -> Option<i64> {
        let mut c = None;
        if let (Some(cb), Some(am)) = (other.cutoff, self.min_index()) {
            c = min_opt(c, Some(am + cb));
        }
        if let (Some(ca), Some(bm)) = (self.cutoff, other.min_index()) {
            c = min_opt(c, Some(ca + bm));
        }
        if let (Some(ca), Some(cb)) = (self.cutoff, other.cutoff) {
            c = min_opt(c, Some(ca + cb));
        }
        c
    }
}

/// Numerators over a common denominator, if everything fits in i64.
fn integer_form(s: &QSeries) -> Option<(Integer, Vec<(i64, i64)>)> {
    let mut l = Integer::from(1);
    for c in s.terms.values() {
        l.lcm_mut(c.denom());
        if l.significant_bits() > 62 {
            return None;
        }
    }
    let mut out = Vec::with_capacity(s.terms.len());
    for (e, c) in &s.terms {
        let n = Integer::from(c.numer() * Integer::from(&l / c.denom()));
        out.push((*e, n.to_i64()?));
    }
    Some((l, out))
}

fn fast_product(a: &QSeries, b: &QSeries, cutoff: Option<i64>) -> Option<BTreeMap<i64, Rational>> {
    let (la, ta) = integer_form(a)?;
    let (lb, tb) = integer_form(b)?;
    let ma = ta.iter().map(|x| x.1.unsigned_abs() as f64).fold(0.0, f64::max);
    let mb = tb.iter().map(|x| x.1.unsigned_abs() as f64).fold(0.0, f64::max);
    if (ma * mb * ta.len().min(tb.len()) as f64).log2() > 120.0 {
        return None;
    }
    let base = ta[0].0 + tb[0].0;
    let top = cutoff.unwrap_or(ta.last().unwrap().0 + tb.last().unwrap().0);
    if top < base {
        return Some(BTreeMap::new());
    }
    let span = (top - base + 1) as u64;
    let scale = Rational::from((Integer::from(1), Integer::from(&la * &lb)));
    let finish = |e: i64, v: i128| (e, Rational::from(Integer::from(v)) * &scale);
    if span <= 8_000_000 {
        let mut acc = vec![0i128; span as usize];
        for &(ea, ca) in &ta {
            for &(eb, cb) in &tb {
                let e = ea + eb;
                if e > top {
                    break;
                }
                acc[(e - base) as usize] += ca as i128 * cb as i128;
            }
        }
        Some(
            acc.into_iter()
                .enumerate()
                .filter(|(_, v)| *v != 0)
                .map(|(i, v)| finish(base + i as i64, v))
                .collect(),
        )
    } else {
        let mut acc: HashMap<i64, i128> = HashMap::new();
        for &(ea, ca) in &ta {
            for &(eb, cb) in &tb {
                let e = ea + eb;
                if e > top {
                    break;
                }
                *acc.entry(e).or_insert(0) += ca as i128 * cb as i128;
            }
        }
        Some(acc.into_iter().filter(|(_, v)| *v != 0).map(|(e, v)| finish(e, v)).collect())
    }
}

fn slow_product(a: &QSeries, b: &QSeries, cutoff: Option<i64>) -> BTreeMap<i64, Rational> {
    let mut acc: BTreeMap<i64, Rational> = BTreeMap::new();
    for (ea, ca) in &a.terms {
        for (eb, cb) in &b.terms {
            let e = ea + eb;
            if cutoff.is_some_and(|x| e > x) {
                break;
            }
            *acc.entry(e).or_default() += Rational::from(ca * cb);
        }
    }
    acc.retain(|_, c| *c != 0);
    acc
}

/// Adds or multiplies two series on the same lattice.
pub fn qs_combine(a: &QSeries, b: &QSeries, mode: CombineMode) -> Result<QSeries> {
    match mode {
        CombineMode::Add => a.add(b),
        CombineMode::Mul => a.mul(b),
    }
}

fn ln_binom(m: u64, d: u32) -> f64 {
    (1..=d as u64).map(|i| ((m + i) as f64 / i as f64).ln()).sum()
}

fn isqrt_floor(x: i64) -> i64 {
    if x <= 0 {
        return 0;
    }
    let mut r = (x as f64).sqrt() as i64;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

impl TailStream {
    /// Upper bound on `Σ |c| |q|^{e/D}` over the stream's terms with `e > cutoff`,
    /// where `rho` is `Re(log q)/D` per lattice unit (negative).
    fn tail(&self, cutoff: i64, rho: f64) -> f64 {
        match *self {
            TailStream::Convolved { weight, shift, step, head_mass, ref inner } => {
                let geometric = 1.0 / (1.0 - (rho * step as f64).exp());
                let head = head_mass * (rho * (cutoff + 1) as f64).exp();
                let rest = inner.bound(cutoff - shift, rho) * (rho * shift as f64).exp();
                weight * geometric * (head + rest)
            }
            TailStream::Linear { weight, start, step } => {
                let k1 = if start > cutoff { 0 } else { (cutoff - start) / step + 1 };
                let first = (start + step * k1) as f64;
                weight * (rho * first).exp() / (1.0 - (rho * step as f64).exp())
            }
            TailStream::Quadratic { weight, binomial, step, offset, shift } => {
                let index = |m: i64| -> f64 {
                    let v = (step * m + offset) as f64;
                    v * v + shift as f64
                };
                let term = |m: i64| -> f64 {
                    let lb = binomial.map_or(0.0, |d| ln_binom(m as u64, d));
                    (weight.ln() + lb + rho * index(m)).exp()
                };
                let Some(d) = binomial else {
                    return if index(0) > cutoff as f64 { term(0) } else { 0.0 };
                };
                let vertex = if offset >= 0 { 0 } else { (-offset + step - 1) / step };
                let mut total = 0.0;
                for m in 0..vertex {
                    if index(m) > cutoff as f64 {
                        total += term(m);
                    }
                }
                // first m >= vertex with (step*m + offset)^2 + shift > cutoff
                let r = isqrt_floor(cutoff - shift);
                let mut m1 = if cutoff - shift < 0 { vertex } else { ((r + 1 - offset) + step - 1).div_euclid(step) };
                m1 = m1.max(vertex);
                while m1 > vertex && index(m1 - 1) > cutoff as f64 {
                    m1 -= 1;
                }
                while index(m1) <= cutoff as f64 {
                    m1 += 1;
                }
                let mut m = m1;
                for _ in 0..1_000_000 {
                    let t = term(m);
                    let ratio = ((m + 1 + d as i64) as f64 / (m + 1) as f64)
                        * (rho * (index(m + 1) - index(m))).exp();
                    if ratio < 1.0 {
                        return total + t / (1.0 - ratio);
                    }
                    total += t;
                    m += 1;
                }
                f64::INFINITY
            }
        }
    }
}

impl TailCertificate {
    pub fn bound(&self, cutoff: i64, rho: f64) -> f64 {
        let raw: f64 = self.streams.iter().map(|s| s.tail(cutoff, rho)).sum();
        raw * (1.0 + 1e-9)
    }
}

/// Evaluates `Σ c_e exp((e/D)·log_q)` and bounds the omitted tail.
///
/// Exact series have tail 0; truncated series need a tail certificate.
pub fn qs_eval(s: &QSeries, log_q: &HPComplex) -> Result<(HPComplex, Float)> {
    if !log_q.re().is_sign_negative() || log_q.re().is_zero() {
        return Err(Error::OutsideDisk);
    }
    let prec = log_q.prec();
    let tail = match (s.cutoff, &s.tail) {
        (None, _) => 0.0,
        (Some(x), Some(cert)) => cert.bound(x, log_q.re().to_f64() / s.denom as f64),
        (Some(_), None) => return Err(Error::MissingTailCertificate),
    };
    let value = qs_eval_value(s, log_q);
    Ok((value.with_prec(prec), Float::with_val(prec, tail)))
}

/// The finite sum alone, without any tail accounting.
pub fn qs_eval_value(s: &QSeries, log_q: &HPComplex) -> HPComplex {
    let prec = log_q.prec();
    let span = s.terms.keys().map(|e| e.unsigned_abs()).max().unwrap_or(1) / s.denom as u64 + 1;
    let work = prec + 64 - span.leading_zeros() + 8;
    let step = log_q.with_prec(work).scale(&Float::with_val(work, Rational::from((1, s.denom))));
    let parts: Vec<HPComplex> = s
        .terms
        .par_iter()
        .map(|(e, c)| step.scale_i64(*e).exp().scale_rational(c))
        .collect();
    let mut acc = HPComplex::zero(work);
    for p in &parts {
        acc += p;
    }
    acc.with_prec(prec)
}
