//! Truncated Laurent series in a local variable `h` and principal parts of quotients.

use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::hp::HPComplex;

/// `Σ_k coeffs[k]·h^(valuation + k)`, known exactly for powers below `valuation + coeffs.len()`.
#[derive(Clone, Debug)]
pub struct TaylorSeries {
    valuation: i64,
    coeffs: Vec<HPComplex>,
    prec: u32,
}

impl TaylorSeries {
    pub fn new(valuation: i64, coeffs: Vec<HPComplex>, prec: u32) -> Self {
        TaylorSeries { valuation, coeffs, prec }
    }

    pub fn constant(c: HPComplex, len: usize) -> Self {
        let prec = c.prec();
        let mut coeffs = vec![HPComplex::zero(prec); len.max(1)];
        coeffs[0] = c;
        TaylorSeries { valuation: 0, coeffs, prec }
    }

    /// `a + b·h`.
    pub fn linear(a: HPComplex, b: HPComplex, len: usize) -> Self {
        let prec = a.prec().max(b.prec());
        let mut coeffs = vec![HPComplex::zero(prec); len.max(2)];
        coeffs[0] = a;
        coeffs[1] = b;
        coeffs.truncate(len.max(1));
        TaylorSeries { valuation: 0, coeffs, prec }
    }

    pub fn valuation(&self) -> i64 {
        self.valuation
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// First power that is not known.
    pub fn end(&self) -> i64 {
        self.valuation + self.coeffs.len() as i64
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn coeffs(&self) -> &[HPComplex] {
        &self.coeffs
    }

    pub fn coeff(&self, power: i64) -> HPComplex {
        let k = power - self.valuation;
        if k < 0 || k >= self.coeffs.len() as i64 {
            HPComplex::zero(self.prec)
        } else {
            self.coeffs[k as usize].clone()
        }
    }

    /// Keeps powers below `end`.
    pub fn truncate_to(&self, end: i64) -> Self {
        let keep = (end - self.valuation).clamp(0, self.coeffs.len() as i64) as usize;
        TaylorSeries { valuation: self.valuation, coeffs: self.coeffs[..keep].to_vec(), prec: self.prec }
    }

    /// Multiplies by `h^k`.
    pub fn shift(&self, k: i64) -> Self {
        TaylorSeries { valuation: self.valuation + k, coeffs: self.coeffs.clone(), prec: self.prec }
    }

    pub fn scale(&self, s: &HPComplex) -> Self {
        TaylorSeries {
            valuation: self.valuation,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            prec: self.prec,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        let lo = self.valuation.min(other.valuation);
        let end = self.end().min(other.end());
        let coeffs = (lo..end.max(lo)).map(|p| &self.coeff(p) + &other.coeff(p)).collect();
        TaylorSeries { valuation: lo, coeffs, prec }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&HPComplex::from_int(-1, other.prec)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        let len = self.len().min(other.len());
        let mut coeffs = vec![HPComplex::zero(prec); len];
        for (i, a) in self.coeffs.iter().take(len).enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().take(len - i).enumerate() {
                coeffs[i + j] += &(a * b);
            }
        }
        TaylorSeries { valuation: self.valuation + other.valuation, coeffs, prec }
    }

    /// Drops leading coefficients of modulus at most `tol`.
    pub fn normalize(&self, tol: f64) -> Self {
        let skip = self.coeffs.iter().take_while(|c| c.abs_f64() <= tol).count();
        TaylorSeries {
            valuation: self.valuation + skip as i64,
            coeffs: self.coeffs[skip..].to_vec(),
            prec: self.prec,
        }
    }

    /// Reciprocal; the leading coefficient must be nonzero.
    pub fn recip(&self) -> Result<Self> {
        let len = self.len();
        if len == 0 || self.coeffs[0].is_zero() {
            return Err(Error::DenominatorVanishes(len));
        }
        let inv0 = self.coeffs[0].recip();
        let mut out: Vec<HPComplex> = Vec::with_capacity(len);
        out.push(inv0.clone());
        for k in 1..len {
            let mut acc = HPComplex::zero(self.prec);
            for j in 1..=k {
                acc += &(&self.coeffs[j] * &out[k - j]);
            }
            out.push(-(&acc * &inv0));
        }
        Ok(TaylorSeries { valuation: -self.valuation, coeffs: out, prec: self.prec })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    /// `exp` of a series with non-negative valuation.
    pub fn exp(&self) -> Result<Self> {
        if self.valuation < 0 {
            return Err(Error::Precondition("exp of a series with a pole".into()));
        }
        let len = self.end() as usize;
        let f: Vec<HPComplex> = (0..len as i64).map(|p| self.coeff(p)).collect();
        if len == 0 {
            return Ok(self.clone());
        }
        let mut g = Vec::with_capacity(len);
        g.push(f[0].exp());
        for n in 1..len {
            let mut acc = HPComplex::zero(self.prec);
            for k in 1..=n {
                if !f[k].is_zero() {
                    acc += &(&f[k] * &g[n - k]).scale_i64(k as i64);
                }
            }
            g.push(acc.scale(&(Float::with_val(self.prec, 1) / n as u32)));
        }
        Ok(TaylorSeries { valuation: 0, coeffs: g, prec: self.prec })
    }

    /// Evaluates the truncated series at `h`.
    pub fn eval(&self, h: &HPComplex) -> HPComplex {
        let mut acc = HPComplex::zero(self.prec);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * h) + c;
        }
        &acc * &h.powi(self.valuation)
    }
}

/// Location of an expansion point.
#[derive(Clone, Debug, Serialize)]
pub enum Center {
    Point { re: f64, im: f64 },
    /// The exact point `2πi·m`.
    TwoPiIM(i64),
}

/// Principal part `Σ_{j=1}^{order} c_{−j}·(z − center)^{−j}`.
#[derive(Clone, Debug)]
pub struct LaurentPart {
    pub center: Center,
    /// `coeffs[j − 1] = c_{−j}`.
    pub coeffs: Vec<HPComplex>,
    pub order: usize,
}

impl LaurentPart {
    pub fn regular(center: Center) -> Self {
        LaurentPart { center, coeffs: Vec::new(), order: 0 }
    }

    pub fn residue(&self, prec: u32) -> HPComplex {
        self.coeffs.first().cloned().unwrap_or_else(|| HPComplex::zero(prec))
    }

    pub fn from_series(center: Center, s: &TaylorSeries) -> Self {
        let order = (-s.valuation()).max(0) as usize;
        let coeffs = (1..=order as i64).map(|j| s.coeff(-j)).collect();
        LaurentPart { center, coeffs, order }
    }
}

/// Principal part of `num/den`, where `num(len)` and `den(len)` return the local
/// Taylor expansions (in the displacement from the center) to `len` terms.
pub fn laurent_principal<N, D>(num: N, den: D, center: Center, max_order: usize, prec: u32) -> Result<LaurentPart>
where
    N: Fn(usize) -> Result<TaylorSeries>,
    D: Fn(usize) -> Result<TaylorSeries>,
{
    let len = 2 * max_order + 4;
    let tol = 2f64.powi(-(prec as i32) / 2);
    let d = den(len)?;
    let scale = d.coeffs().iter().map(|c| c.abs_f64()).fold(1.0f64, f64::max);
    let d = d.normalize(tol * scale);
    if d.is_empty() {
        return Err(Error::DenominatorVanishes(len));
    }
    let n = num(len)?;
    let nscale = n.coeffs().iter().map(|c| c.abs_f64()).fold(1.0f64, f64::max);
    let n = n.normalize(tol * nscale);
    if n.is_empty() {
        return Ok(LaurentPart::regular(center));
    }
    let order = (d.valuation() - n.valuation()).max(0) as usize;
    if order > max_order {
        return Err(Error::PoleOrderTooLarge { order, max: max_order });
    }
    if order == 0 {
        return Ok(LaurentPart::regular(center));
    }
    let q = n.div(&d)?;
    Ok(LaurentPart::from_series(center, &q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hp::pi;

    const P: u32 = 256;

    fn exp_of_linear(a: HPComplex, b: HPComplex, len: usize) -> TaylorSeries {
        TaylorSeries::linear(a, b, len).exp().unwrap()
    }

    #[test]
    fn reciprocal_of_exp_minus_one_at_zero() {
        let part = laurent_principal(
            |len| Ok(TaylorSeries::constant(HPComplex::one(P), len)),
            |len| {
                let e = exp_of_linear(HPComplex::zero(P), HPComplex::one(P), len);
                Ok(e.sub(&TaylorSeries::constant(HPComplex::one(P), len)))
            },
            Center::Point { re: 0.0, im: 0.0 },
            4,
            P,
        )
        .unwrap();
        assert_eq!(part.order, 1);
        assert!((&part.residue(P) - &HPComplex::one(P)).abs_f64() < 1e-60);
    }

    #[test]
    fn sinh_denominator_at_two_pi_i() {
        let y0 = HPComplex::new(Float::new(P), pi(P) * 2u32);
        let half = Float::with_val(P, 0.5);
        let part = laurent_principal(
            |len| Ok(TaylorSeries::constant(HPComplex::one(P), len)),
            |len| {
                let plus = exp_of_linear(y0.scale(&half), HPComplex::from_real(half.clone()), len);
                let minus = exp_of_linear(-y0.scale(&half), HPComplex::from_real(-half.clone()), len);
                Ok(plus.sub(&minus))
            },
            Center::TwoPiIM(1),
            4,
            P,
        )
        .unwrap();
        assert_eq!(part.order, 1);
        // 1 / (d/dy 2 sinh(y/2)) = 1 / cosh(πi) = −1
        assert!((&part.residue(P) + &HPComplex::one(P)).abs_f64() < 1e-60);
    }

    #[test]
    fn regular_point_has_order_zero() {
        let part = laurent_principal(
            |len| Ok(exp_of_linear(HPComplex::zero(P), HPComplex::one(P), len)),
            |len| Ok(TaylorSeries::linear(HPComplex::from_int(3, P), HPComplex::one(P), len)),
            Center::Point { re: 0.0, im: 0.0 },
            4,
            P,
        )
        .unwrap();
        assert_eq!(part.order, 0);
    }

    #[test]
    fn vanishing_denominator_is_an_error() {
        let r = laurent_principal(
            |len| Ok(TaylorSeries::constant(HPComplex::one(P), len)),
            |len| Ok(TaylorSeries::constant(HPComplex::zero(P), len)),
            Center::Point { re: 0.0, im: 0.0 },
            3,
            P,
        );
        assert!(matches!(r, Err(Error::DenominatorVanishes(_))));
    }

    #[test]
    fn double_pole_coefficients() {
        // 1/(e^y − 1)^2 = y^{-2} − y^{-1} + 5/12 − ...
        let part = laurent_principal(
            |len| Ok(TaylorSeries::constant(HPComplex::one(P), len)),
            |len| {
                let e = exp_of_linear(HPComplex::zero(P), HPComplex::one(P), len)
                    .sub(&TaylorSeries::constant(HPComplex::one(P), len));
                Ok(e.mul(&e))
            },
            Center::Point { re: 0.0, im: 0.0 },
            4,
            P,
        )
        .unwrap();
        assert_eq!(part.order, 2);
        assert!((&part.coeffs[0] + &HPComplex::one(P)).abs_f64() < 1e-60);
        assert!((&part.coeffs[1] - &HPComplex::one(P)).abs_f64() < 1e-60);
    }

    #[test]
    fn exp_series_matches_evaluation() {
        let a = HPComplex::from_f64(0.3, -0.2, P);
        let b = HPComplex::from_f64(1.5, 0.5, P);
        let s = exp_of_linear(a.clone(), b.clone(), 60);
        let h = HPComplex::from_f64(0.01, 0.02, P);
        let direct = (&a + &(&b * &h)).exp();
        assert!((&s.eval(&h) - &direct).abs_f64() < 1e-70);
    }
}
