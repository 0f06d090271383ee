//! Polynomial extrapolation to `t = 0` by Neville's scheme.

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::numerics::hp::HPComplex;

#[derive(Clone, Debug)]
pub struct Extrapolation {
    pub value: HPComplex,
    /// Distance between the degree-`d` and degree-`d − 1` extrapolants.
    pub spread: f64,
}

/// Value at `t = 0` of the polynomial through `points`.
fn neville_at_zero(points: &[(Float, HPComplex)]) -> HPComplex {
    let mut p: Vec<HPComplex> = points.iter().map(|(_, v)| v.clone()).collect();
    let n = points.len();
    for level in 1..n {
        for i in 0..n - level {
            let ti = &points[i].0;
            let tj = &points[i + level].0;
            let denom = Float::with_val(ti.prec(), ti - tj);
            // P = (t_i·P_{i+1} − t_j·P_i)/(t_i − t_j) at t = 0
            let num = &p[i + 1].scale(ti) - &p[i].scale(tj);
            p[i] = num.scale(&denom.recip());
        }
    }
    p.swap_remove(0)
}

/// Extrapolates the samples `(t, v)` to `t = 0` with a polynomial of `degree`,
/// using the `degree + 1` samples with the smallest `t`.
pub fn extrapolate(samples: &[(Rational, HPComplex)], degree: usize) -> Result<Extrapolation> {
    if samples.len() < degree + 1 {
        return Err(Error::InsufficientSamples { needed: degree + 1, got: samples.len() });
    }
    for w in samples.windows(2) {
        if w[1].0 >= w[0].0 {
            return Err(Error::Precondition("sample t values must be strictly decreasing".into()));
        }
    }
    if samples.iter().any(|(t, _)| *t <= 0) {
        return Err(Error::Precondition("sample t values must be positive".into()));
    }
    let prec = samples.iter().map(|(_, v)| v.prec()).max().unwrap_or(64);
    let pts: Vec<(Float, HPComplex)> = samples[samples.len() - degree - 1..]
        .iter()
        .map(|(t, v)| (Float::with_val(prec, t), v.clone()))
        .collect();
    let value = neville_at_zero(&pts);
    let spread = if degree == 0 {
        0.0
    } else {
        let lower = neville_at_zero(&pts[1..]);
        (&value - &lower).abs_f64()
    };
    Ok(Extrapolation { value, spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: u32 = 256;

    fn grid(n: usize) -> Vec<Rational> {
        (0..n).map(|j| Rational::from((1, 8u64 << j))).collect()
    }

    #[test]
    fn constant_samples() {
        let c = HPComplex::from_f64(1.25, -3.0, P);
        let s: Vec<_> = grid(8).into_iter().map(|t| (t, c.clone())).collect();
        let e = extrapolate(&s, 6).unwrap();
        assert!((&e.value - &c).abs_f64() < 1e-70);
        assert!(e.spread < 1e-70);
    }

    #[test]
    fn too_few_samples() {
        let s: Vec<_> = grid(3).into_iter().map(|t| (t, HPComplex::one(P))).collect();
        assert!(matches!(extrapolate(&s, 6), Err(Error::InsufficientSamples { needed: 7, got: 3 })));
    }

    #[test]
    fn increasing_grid_rejected() {
        let mut s: Vec<_> = grid(4).into_iter().map(|t| (t, HPComplex::one(P))).collect();
        s.reverse();
        assert!(extrapolate(&s, 2).is_err());
    }

    proptest! {
        #[test]
        fn reproduces_polynomial_constant_term(coeffs in proptest::collection::vec(-100i64..100, 1..7)) {
            let degree = 6;
            let samples: Vec<_> = grid(8)
                .into_iter()
                .map(|t| {
                    let mut v = Rational::new();
                    let mut pow = Rational::from(1);
                    for c in &coeffs {
                        v += Rational::from(*c) * &pow;
                        pow *= &t;
                    }
                    (t, HPComplex::from_rational(&v, P))
                })
                .collect();
            let e = extrapolate(&samples, degree).unwrap();
            let exact = HPComplex::from_int(coeffs[0], P);
            prop_assert!((&e.value - &exact).abs_f64() < 1e-50);
        }
    }
}
