//! Complex numbers over MPFR floats.
//!
//! Binary operations run at the larger of the two operand precisions.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Constant;
use rug::ops::RemRounding;
use rug::{Float, Integer, Rational};

/// Default working precision in bits.
pub const DEFAULT_PRECISION: u32 = 256;

/// π at `prec` bits.
pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// Default pass/fail tolerance for a working precision: 2^(-prec/4).
pub fn default_tolerance(prec: u32) -> f64 {
    2f64.powi(-(prec as i32) / 4)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HPComplex {
    re: Float,
    im: Float,
}

impl HPComplex {
    pub fn new(re: Float, im: Float) -> Self {
        let prec = re.prec().max(im.prec());
        let mut re = re;
        let mut im = im;
        if re.prec() < prec {
            re.set_prec(prec);
        }
        if im.prec() < prec {
            im.set_prec(prec);
        }
        HPComplex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        HPComplex { re: Float::new(prec), im: Float::new(prec) }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_f64(1.0, 0.0, prec)
    }

    pub fn i(prec: u32) -> Self {
        Self::from_f64(0.0, 1.0, prec)
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        HPComplex { re: Float::with_val(prec, re), im: Float::with_val(prec, im) }
    }

    pub fn from_real(re: Float) -> Self {
        let prec = re.prec();
        HPComplex { re, im: Float::new(prec) }
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        HPComplex { re: Float::with_val(prec, q), im: Float::new(prec) }
    }

    pub fn from_int(k: i64, prec: u32) -> Self {
        HPComplex { re: Float::with_val(prec, k), im: Float::new(prec) }
    }

    /// e^{iθ}.
    pub fn cis(theta: &Float) -> Self {
        let prec = theta.prec();
        let (s, c) = theta.clone().sin_cos(Float::new(prec));
        HPComplex { re: c, im: s }
    }

    /// e^{iπr} with r reduced exactly modulo 2 before any rounding.
    pub fn cis_pi(r: &Rational, prec: u32) -> Self {
        let two = Integer::from(2);
        let num = r.numer().clone();
        let den = r.denom().clone();
        let modulus = Integer::from(&two * &den);
        let reduced = num.rem_euc(&modulus);
        if reduced == 0 {
            return Self::one(prec);
        }
        let work = prec + 16;
        let angle = Float::with_val(work, Rational::from((reduced, den))) * pi(work);
        let (s, c) = angle.sin_cos(Float::new(work));
        HPComplex { re: Float::with_val(prec, c), im: Float::with_val(prec, s) }
    }

    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        HPComplex { re: Float::with_val(prec, &self.re), im: Float::with_val(prec, &self.im) }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn conj(&self) -> Self {
        HPComplex { re: self.re.clone(), im: Float::with_val(self.im.prec(), -&self.im) }
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref())
    }

    pub fn abs(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.hypot_ref(&self.im))
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    /// Principal argument in (−π, π].
    pub fn arg(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.im.atan2_ref(&self.re))
    }

    pub fn scale(&self, s: &Float) -> Self {
        let p = self.prec().max(s.prec());
        HPComplex { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn scale_rational(&self, s: &Rational) -> Self {
        let p = self.prec();
        HPComplex { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn scale_i64(&self, s: i64) -> Self {
        let p = self.prec();
        HPComplex { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    /// Multiplication by i.
    pub fn mul_i(&self) -> Self {
        HPComplex { re: Float::with_val(self.im.prec(), -&self.im), im: self.re.clone() }
    }

    pub fn recip(&self) -> Self {
        let n = self.norm_sqr();
        let p = self.prec();
        HPComplex {
            re: Float::with_val(p, &self.re / &n),
            im: Float::with_val(p, -Float::with_val(p, &self.im / &n)),
        }
    }

    pub fn exp(&self) -> Self {
        let p = self.prec();
        let r = Float::with_val(p, self.re.exp_ref());
        let (s, c) = self.im.clone().sin_cos(Float::new(p));
        HPComplex { re: Float::with_val(p, &r * &c), im: Float::with_val(p, &r * &s) }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        let p = self.prec();
        HPComplex { re: Float::with_val(p, self.abs().ln_ref()), im: self.arg() }
    }

    /// Principal square root (branch cut along the negative real axis).
    pub fn sqrt(&self) -> Self {
        let p = self.prec();
        if self.is_zero() {
            return Self::zero(p);
        }
        let r = self.abs();
        if !self.re.is_sign_negative() {
            let s = Float::with_val(p, Float::with_val(p, &r + &self.re) / 2u32).sqrt();
            let t = Float::with_val(p, &self.im / Float::with_val(p, &s * 2u32));
            HPComplex { re: s, im: t }
        } else {
            let mut t = Float::with_val(p, Float::with_val(p, &r - &self.re) / 2u32).sqrt();
            if self.im.is_sign_negative() && !self.im.is_zero() {
                t = -t;
            }
            let s = Float::with_val(p, &self.im / Float::with_val(p, &t * 2u32));
            HPComplex { re: s, im: t }
        }
    }

    pub fn sin(&self) -> Self {
        let p = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(p));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(p));
        HPComplex { re: Float::with_val(p, &s * &ch), im: Float::with_val(p, &c * &sh) }
    }

    pub fn cos(&self) -> Self {
        let p = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(p));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(p));
        HPComplex { re: Float::with_val(p, &c * &ch), im: -Float::with_val(p, &s * &sh) }
    }

    pub fn sinh(&self) -> Self {
        let p = self.prec();
        let (sh, ch) = self.re.clone().sinh_cosh(Float::new(p));
        let (s, c) = self.im.clone().sin_cos(Float::new(p));
        HPComplex { re: Float::with_val(p, &sh * &c), im: Float::with_val(p, &ch * &s) }
    }

    /// Integer power by repeated squaring; negative exponents invert first.
    pub fn powi(&self, k: i64) -> Self {
        let p = self.prec();
        let mut base = if k < 0 { self.recip() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one(p);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Largest of |re|, |im| as f64; a cheap magnitude proxy for tolerances.
    pub fn max_abs_f64(&self) -> f64 {
        self.re.to_f64().abs().max(self.im.to_f64().abs())
    }
}

impl fmt::Display for HPComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        let re = self.re.to_string_radix(10, Some(digits));
        let im = self.im.to_string_radix(10, Some(digits));
        if im.starts_with('-') {
            write!(f, "{}{}i", re, im)
        } else {
            write!(f, "{}+{}i", re, im)
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a> $tr<&'a HPComplex> for &'a HPComplex {
            type Output = HPComplex;
            fn $m(self, rhs: &'a HPComplex) -> HPComplex {
                let f: fn(&HPComplex, &HPComplex) -> HPComplex = $body;
                f(self, rhs)
            }
        }
        impl $tr<HPComplex> for HPComplex {
            type Output = HPComplex;
            fn $m(self, rhs: HPComplex) -> HPComplex {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a HPComplex> for HPComplex {
            type Output = HPComplex;
            fn $m(self, rhs: &'a HPComplex) -> HPComplex {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<HPComplex> for &'a HPComplex {
            type Output = HPComplex;
            fn $m(self, rhs: HPComplex) -> HPComplex {
                self.$m(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| {
    let p = a.prec().max(b.prec());
    HPComplex { re: Float::with_val(p, &a.re + &b.re), im: Float::with_val(p, &a.im + &b.im) }
});

binop!(Sub, sub, |a, b| {
    let p = a.prec().max(b.prec());
    HPComplex { re: Float::with_val(p, &a.re - &b.re), im: Float::with_val(p, &a.im - &b.im) }
});

binop!(Mul, mul, |a, b| {
    let p = a.prec().max(b.prec());
    let ac = Float::with_val(p, &a.re * &b.re);
    let bd = Float::with_val(p, &a.im * &b.im);
    let ad = Float::with_val(p, &a.re * &b.im);
    let bc = Float::with_val(p, &a.im * &b.re);
    HPComplex { re: ac - bd, im: ad + bc }
});

binop!(Div, div, |a, b| {
    let p = a.prec().max(b.prec());
    let n = b.norm_sqr();
    let ac = Float::with_val(p, &a.re * &b.re);
    let bd = Float::with_val(p, &a.im * &b.im);
    let bc = Float::with_val(p, &a.im * &b.re);
    let ad = Float::with_val(p, &a.re * &b.im);
    HPComplex { re: Float::with_val(p, (ac + bd) / &n), im: Float::with_val(p, (bc - ad) / &n) }
});

impl Neg for HPComplex {
    type Output = HPComplex;
    fn neg(self) -> HPComplex {
        HPComplex { re: -self.re, im: -self.im }
    }
}

impl Neg for &HPComplex {
    type Output = HPComplex;
    fn neg(self) -> HPComplex {
        -(self.clone())
    }
}

impl AddAssign<&HPComplex> for HPComplex {
    fn add_assign(&mut self, rhs: &HPComplex) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&HPComplex> for HPComplex {
    fn sub_assign(&mut self, rhs: &HPComplex) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&HPComplex> for HPComplex {
    fn mul_assign(&mut self, rhs: &HPComplex) {
        *self = &*self * rhs;
    }
}
