//! Perturbative expansion of the trivial-connection integral, its Borel transform,
//! lateral and median Borel sums, the Stokes jump, and the integral-plus-residues
//! decomposition of the normalized WRT invariant.
//!
//! Throughout, `g(y) = iy²/(8πP)` and the Borel plane variable is `ξ = y²/(8πiP)`,
//! so that `e^{−κξ} = e^{κg(y)}`.

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::exact_sums::z_norm;
use crate::numerics::hp::{pi, HPComplex};
use crate::numerics::laurent::{laurent_principal, Center, LaurentPart, TaylorSeries};
use crate::numerics::quadrature::{contour_integrate, Contour, GaussianDecay, QuadratureOptions, Segment};
use crate::report::{fmt_complex, ReportRow, VerificationReport};
use crate::seifert_core::{
    derived_constants, f_growth_bound, f_local, f_taylor, g0, integrand, pole_order, sinh_local,
    SeifertLoop,
};
use crate::wrt_qseries::phi_eval_auto;

#[derive(Clone, Debug)]
pub struct ResurgenceOptions {
    pub prec: u32,
    /// Absolute accuracy of every contour integral (after the analytic prefactor).
    pub tol: f64,
    /// Tilt of the lateral sums away from the Stokes ray.
    pub delta: f64,
    /// Real part of the vertical median contour.
    pub epsilon: f64,
}

impl ResurgenceOptions {
    pub fn new(prec: u32) -> Self {
        ResurgenceOptions { prec, tol: 1e-30, delta: 0.2, epsilon: 1.0 }
    }
}

pub fn format_kappa(kappa: &HPComplex) -> String {
    let (re, im) = kappa.to_f64();
    if im == 0.0 {
        format!("{re}")
    } else if im < 0.0 {
        format!("{re}-{}i", -im)
    } else {
        format!("{re}+{im}i")
    }
}

/// `Γ(m + 1/2)`.
fn gamma_half(m: usize, prec: u32) -> Float {
    Float::with_val(prec, m as f64 + 0.5).gamma()
}

/// `x^{m+1/2}`.
fn half_power(x: &Float, m: usize) -> Float {
    let mut out = Float::with_val(x.prec(), x.sqrt_ref());
    for _ in 0..m {
        out *= x;
    }
    out
}

/// `E(κ) = (B/2πi)·e^{−πic(N)/(2κ)}`.
pub fn e_factor(lp: &SeifertLoop, n_color: i64, kappa: &HPComplex) -> Result<HPComplex> {
    let prec = kappa.prec();
    let dc = derived_constants(lp, n_color, prec)?;
    let c = Float::with_val(prec, &dc.framing);
    let expo = (&HPComplex::from_real(-(pi(prec) * c) / 2u32).mul_i() / kappa).exp();
    Ok(&b_over_two_pi_i(&dc.b) * &expo)
}

fn b_over_two_pi_i(b: &HPComplex) -> HPComplex {
    let prec = b.prec();
    b.scale(&(pi(prec) * 2u32).recip()).mul_i().scale_i64(-1)
}

/// Coefficients of `E(κ)` in powers of `1/κ`.
pub fn e_coeffs(lp: &SeifertLoop, n_color: i64, m_max: usize, prec: u32) -> Result<Vec<HPComplex>> {
    let dc = derived_constants(lp, n_color, prec)?;
    let lead = b_over_two_pi_i(&dc.b);
    // −πic/2
    let x = HPComplex::from_real(-(pi(prec) * Float::with_val(prec, &dc.framing)) / 2u32).mul_i();
    let mut out = Vec::with_capacity(m_max + 1);
    let mut term = lead;
    for j in 0..=m_max {
        if j > 0 {
            term = (&term * &x).scale(&Float::with_val(prec, j).recip());
        }
        out.push(term.clone());
    }
    Ok(out)
}

/// Coefficients of `κ^{−m−1/2}` in the asymptotic expansion of
/// `∫_{ℝe^{iπ/4}} e^{κg(y)} F_N(y) dy`, for `m = 0..=m_max`.
pub fn i_pert(lp: &SeifertLoop, n_color: i64, m_max: usize, prec: u32) -> Result<Vec<HPComplex>> {
    let taylor = f_taylor(lp, n_color, 2 * m_max + 2)?;
    let scale = Float::with_val(prec, pi(prec) * 8u32 * lp.product());
    let eighth = HPComplex::cis_pi(&Rational::from((1, 4)), prec);
    let mut out = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let moment = half_power(&scale, m) * gamma_half(m, prec);
        let phase = &eighth * &HPComplex::cis_pi(&Rational::from((m as i64, 2)), prec);
        let f = Float::with_val(prec, &taylor[2 * m]);
        out.push(phase.scale(&(moment * f)));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct PerturbativeSeries {
    /// `a[m]` multiplies `κ^{−m−1/2}`.
    pub a: Vec<HPComplex>,
    /// `e[j]` multiplies `κ^{−j}`.
    pub e: Vec<HPComplex>,
    /// `i[m]` multiplies `κ^{−m−1/2}`.
    pub i: Vec<HPComplex>,
}

impl PerturbativeSeries {
    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    /// `a_m/Γ(m+1/2)`, the coefficients of `ξ^{m−1/2}` in the Borel transform.
    pub fn borel_coeffs(&self) -> Vec<HPComplex> {
        borel_of(&self.a)
    }

    /// `a_m κ^{−m−1/2}` with the principal square root.
    pub fn term(&self, m: usize, kappa: &HPComplex) -> HPComplex {
        let root = kappa.sqrt().recip();
        &(&self.a[m] * &kappa.powi(-(m as i64))) * &root
    }

    pub fn partial_sum(&self, kappa: &HPComplex, upto: usize) -> HPComplex {
        let mut acc = HPComplex::zero(kappa.prec());
        for m in 0..=upto.min(self.order()) {
            acc += &self.term(m, kappa);
        }
        acc
    }
}

fn borel_of(coeffs: &[HPComplex]) -> Vec<HPComplex> {
    coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| c.scale(&gamma_half(m, c.prec()).recip()))
        .collect()
}

fn cauchy(e: &[HPComplex], i: &[HPComplex], m: usize) -> HPComplex {
    let mut acc = HPComplex::zero(e[0].prec());
    for j in 0..=m {
        acc += &(&e[j] * &i[m - j]);
    }
    acc
}

pub fn z_pert(lp: &SeifertLoop, n_color: i64, m_max: usize, prec: u32) -> Result<PerturbativeSeries> {
    let e = e_coeffs(lp, n_color, m_max, prec)?;
    let i = i_pert(lp, n_color, m_max, prec)?;
    let a = (0..=m_max).map(|m| cauchy(&e, &i, m)).collect();
    Ok(PerturbativeSeries { a, e, i })
}

fn borel_point(lp: &SeifertLoop, xi: &HPComplex) -> HPComplex {
    let prec = xi.prec();
    let s = HPComplex::from_real(pi(prec) * 8u32 * lp.product()).mul_i();
    (&s * xi).sqrt()
}

/// Borel transform of the perturbative integral,
/// `[4πiP·F_N(y)/y](y) − [4πiP·F_N(y)/y](−y)` at `y = √(8πiPξ)` (principal root).
pub fn borel_i_closed(lp: &SeifertLoop, n_color: i64, xi: &HPComplex) -> Result<HPComplex> {
    let prec = xi.prec();
    if xi.is_zero() {
        return Err(Error::Precondition("ξ = 0 is a branch point".into()));
    }
    let y = borel_point(lp, xi);
    let k = HPComplex::from_real(pi(prec) * 4u32 * lp.product()).mul_i();
    let plus = &(&k * &f_eval_checked(lp, n_color, &y)?) / &y;
    let ny = -&y;
    let minus = &(&k * &f_eval_checked(lp, n_color, &ny)?) / &ny;
    Ok(&plus - &minus)
}

fn f_eval_checked(lp: &SeifertLoop, n_color: i64, y: &HPComplex) -> Result<HPComplex> {
    crate::seifert_core::f_eval(lp, n_color, y).map_err(|e| match e {
        Error::Pole(at) => Error::Pole(format!("ξ ∈ Ω (y = {at})")),
        other => other,
    })
}

/// `Σ b_m ξ^{m−1/2}` with `ξ^{−1/2} = e^{iπ/4}/√(iξ)`, the branch used by [`borel_i_closed`].
pub fn borel_series_eval(borel: &[HPComplex], xi: &HPComplex) -> HPComplex {
    let prec = xi.prec();
    let inv_root = &HPComplex::cis_pi(&Rational::from((1, 4)), prec) / &xi.mul_i().sqrt();
    let mut acc = HPComplex::zero(prec);
    for c in borel.iter().rev() {
        acc = &(&acc * xi) + c;
    }
    &acc * &inv_root
}

#[derive(Clone, Debug)]
pub struct SingularityDatum {
    pub m: i64,
    /// `πim²/(2P)`.
    pub omega: HPComplex,
    /// Principal part of the Borel transform at `omega`, approached with `Re ξ > 0`.
    pub principal: LaurentPart,
    /// Pole order of `F_N(y)/y` at `y = 2πim`.
    pub y_order: i64,
}

impl SingularityDatum {
    /// `Res_{ξ=ω} e^{−κξ}·(principal part)`, i.e. `e^{−κω}Σ_j c_{−j}(−κ)^{j−1}/(j−1)!`.
    pub fn laplace_residue(&self, kappa: &HPComplex) -> HPComplex {
        let prec = kappa.prec();
        let mut acc = HPComplex::zero(prec);
        let mut pow = HPComplex::one(prec);
        let neg = -kappa;
        for (j, c) in self.principal.coeffs.iter().enumerate() {
            if j > 0 {
                pow = (&pow * &neg).scale(&Float::with_val(prec, j).recip());
            }
            acc += &(c * &pow);
        }
        &acc * &(-(kappa * &self.omega)).exp()
    }
}

pub fn omega(lp: &SeifertLoop, m: i64, prec: u32) -> HPComplex {
    let v = pi(prec) * Float::with_val(prec, m * m) / Float::with_val(prec, 2 * lp.product());
    HPComplex::new(Float::new(prec), v)
}

/// Principal part of the Borel transform at `ω_m`, transported from the Laurent
/// expansion of `8πiP·F_N(y)/y` at `y₀ = 2πim` through `ξ − ω = (2y₀h + h²)/(8πiP)`.
fn borel_principal(lp: &SeifertLoop, n_color: i64, m: i64, order: usize, prec: u32) -> Result<LaurentPart> {
    let work = prec + 32;
    let len = order + 4;
    let y0 = HPComplex::new(Float::new(work), pi(work) * 2u32 * m);
    let f = f_local(lp, n_color, m, len + order, work)?;
    // 1/y = 1/(y₀ + h)
    let inv_y = TaylorSeries::linear(y0.clone(), HPComplex::one(work), len + order).recip()?;
    let k = HPComplex::from_real(pi(work) * 8u32 * lp.product()).mul_i();
    let g = f.mul(&inv_y).scale(&k);
    // h(u) = y₀ Σ_{k≥1} binom(1/2, k)(c·u)^k with c = 8πiP/y₀², written as u·s(u).
    let c = &k / &(&y0 * &y0);
    let mut s_coeffs = Vec::with_capacity(len);
    let mut binom = Float::with_val(work, 0.5);
    let mut cpow = c.clone();
    for kk in 1..=len {
        if kk > 1 {
            binom *= Float::with_val(work, 1.5 - kk as f64) / Float::with_val(work, kk as f64);
            cpow = &cpow * &c;
        }
        s_coeffs.push((&y0 * &cpow).scale(&binom));
    }
    let s = TaylorSeries::new(0, s_coeffs, work);
    let s_inv = s.recip()?;
    let mut out = TaylorSeries::new(-(order as i64), vec![HPComplex::zero(work); order], work);
    let mut s_pow = TaylorSeries::constant(HPComplex::one(work), len);
    for j in 1..=order as i64 {
        s_pow = s_pow.mul(&s_inv);
        let gj = g.coeff(-j);
        if gj.is_zero() {
            continue;
        }
        let term = s_pow.scale(&gj).shift(-j).truncate_to(0);
        out = out.add(&term.add(&TaylorSeries::new(-(order as i64), vec![HPComplex::zero(work); order], work)));
    }
    let coeffs: Vec<HPComplex> = (1..=order as i64).map(|j| out.coeff(-j).with_prec(prec)).collect();
    Ok(LaurentPart { center: Center::Point { re: 0.0, im: omega(lp, m, 64).im().to_f64() }, coeffs, order })
}

/// Singular points `ω_m`, `1 ≤ m ≤ m_max`, where `F_N(y)/y` has a pole at `2πim`.
pub fn singularities(lp: &SeifertLoop, n_color: i64, m_max: i64, prec: u32) -> Result<Vec<SingularityDatum>> {
    if m_max < 1 {
        return Err(Error::Precondition("m_max must be at least 1".into()));
    }
    let mut out = Vec::new();
    for m in 1..=m_max {
        let y_order = pole_order(lp, m);
        if y_order < 1 {
            continue;
        }
        let principal = borel_principal(lp, n_color, m, y_order as usize, prec)?;
        out.push(SingularityDatum { m, omega: omega(lp, m, prec), principal, y_order });
    }
    Ok(out)
}

/// `|F_N| ≤ exp(ln C)` on the vertical line `Re y = ε`.
fn vertical_f_bound(lp: &SeifertLoop, n_color: i64, eps: f64) -> f64 {
    let mut ln = (2.0 * (n_color as f64 * eps / 2.0).cosh()).ln();
    for p in lp.orders() {
        ln += (2.0 * (eps / (2 * p) as f64).cosh()).ln();
    }
    ln - (lp.n() as f64 - 1.0) * (2.0 * (eps / 2.0).sinh()).ln()
}

fn check_sector(kappa: &HPComplex, theta: f64) -> Result<f64> {
    let arg = kappa.arg().to_f64();
    let mut t = arg + theta;
    while t > std::f64::consts::PI {
        t -= 2.0 * std::f64::consts::PI;
    }
    while t <= -std::f64::consts::PI {
        t += 2.0 * std::f64::consts::PI;
    }
    if t.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::Precondition(format!(
            "κ = {} is outside the convergence sector of direction θ = {theta}",
            format_kappa(kappa)
        )));
    }
    Ok(t)
}

/// `∫_{ℝe^{iφ}} e^{κg(y)}F_N(y)dy` with `φ = π/4 + θ/2`.
fn ray_integral(lp: &SeifertLoop, n_color: i64, kappa: &HPComplex, theta: f64, tol: f64, prec: u32) -> Result<HPComplex> {
    let t = check_sector(kappa, theta)?;
    let phi = std::f64::consts::FRAC_PI_4 + theta / 2.0;
    let product = lp.product();
    let alpha = kappa.abs_f64() * t.cos() / (8.0 * std::f64::consts::PI * product as f64);
    let (ln_c, gamma) = f_growth_bound(lp, n_color);
    let cos_phi = phi.cos().abs();
    let valid_from = if cos_phi > 1e-300 { 1.0 / cos_phi } else { f64::INFINITY };
    if !valid_from.is_finite() {
        return Err(Error::InvalidContour("ray runs along the imaginary axis".into()));
    }
    let decay = GaussianDecay { ln_amplitude: ln_c, linear: gamma * cos_phi, quadratic: alpha, valid_from };
    let dir = HPComplex::cis(&Float::with_val(prec, phi));
    let contour = Contour::new(vec![Segment::RayOut { anchor: HPComplex::zero(prec), direction: dir, decay }])?;
    let f = |y: &HPComplex| integrand(lp, n_color, kappa, y).unwrap_or_else(|_| HPComplex::from_f64(f64::NAN, f64::NAN, prec));
    // the integrand is even in y
    let half = contour_integrate(&f, &contour, &QuadratureOptions::new(tol / 2.0, prec))?;
    Ok(half.scale_i64(2))
}

/// Distance from the line `ℝe^{iφ}` to the nearest pole `2πim` of `F_N`.
fn pole_distance(lp: &SeifertLoop, theta: f64) -> f64 {
    if lp.n() <= 2 {
        return f64::INFINITY;
    }
    let phi = std::f64::consts::FRAC_PI_4 + theta / 2.0;
    2.0 * std::f64::consts::PI * phi.cos().abs()
}

fn pole_guard(delta: f64) -> f64 {
    2.0 * std::f64::consts::PI * (delta / 2.0).sin() / 2.0
}

/// Borel sum of the perturbative series in the direction `θ`, computed as the
/// `y`-plane integral along `ℝe^{i(π/4+θ/2)}`.
pub fn directional_sum(
    lp: &SeifertLoop,
    n_color: i64,
    kappa: &HPComplex,
    theta: f64,
    opts: &ResurgenceOptions,
) -> Result<HPComplex> {
    directional_sum_guarded(lp, n_color, kappa, theta, opts.delta, opts)
}

fn directional_sum_guarded(
    lp: &SeifertLoop,
    n_color: i64,
    kappa: &HPComplex,
    theta: f64,
    delta: f64,
    opts: &ResurgenceOptions,
) -> Result<HPComplex> {
    let prec = opts.prec;
    let kappa = kappa.with_prec(prec);
    let dist = pole_distance(lp, theta);
    let guard = pole_guard(delta);
    if dist < guard {
        return Err(Error::InvalidContour(format!(
            "contour passes within {dist:.3e} of a pole (guard {guard:.3e})"
        )));
    }
    let pref = e_factor(lp, n_color, &kappa)?;
    let integral = ray_integral(lp, n_color, &kappa, theta, opts.tol / pref.abs_f64().max(1e-300), prec)?;
    Ok(&pref * &integral)
}

/// `min(δ, ½·min(−arg κ, π + arg κ))`: the largest tilt keeping both lateral sums convergent.
pub fn effective_delta(kappa: &HPComplex, delta: f64) -> f64 {
    let arg = kappa.arg().to_f64();
    delta.min(0.5 * (-arg).min(std::f64::consts::PI + arg))
}

fn require_lower(kappa: &HPComplex) -> Result<()> {
    if !kappa.im().is_sign_negative() || kappa.im().is_zero() {
        return Err(Error::Precondition(format!("Im κ must be negative, got κ = {}", format_kappa(kappa))));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct MedianSum {
    pub via_average: HPComplex,
    pub via_vertical: HPComplex,
    pub s_plus: HPComplex,
    pub s_minus: HPComplex,
    pub delta: f64,
    pub epsilon: f64,
}

/// Lateral sums `S^± = S^{π/2±δ}` with the effective tilt.
fn lateral_sums(
    lp: &SeifertLoop,
    n_color: i64,
    kappa: &HPComplex,
    opts: &ResurgenceOptions,
) -> Result<(HPComplex, HPComplex, f64)> {
    require_lower(kappa)?;
    let delta = effective_delta(kappa, opts.delta);
    let up = std::f64::consts::FRAC_PI_2 + delta;
    let down = std::f64::consts::FRAC_PI_2 - delta;
    let (plus, minus) = rayon::join(
        || directional_sum_guarded(lp, n_color, kappa, up, delta, opts),
        || directional_sum_guarded(lp, n_color, kappa, down, delta, opts),
    );
    Ok((plus?, minus?, delta))
}

/// `E(κ)·∫_{ε+iℝ} e^{κg(y)}F_N(y)dy`, oriented upward.
pub fn vertical_sum(lp: &SeifertLoop, n_color: i64, kappa: &HPComplex, eps: f64, opts: &ResurgenceOptions) -> Result<HPComplex> {
    require_lower(kappa)?;
    if !(eps > 0.0 && eps < 2.0 * std::f64::consts::PI) {
        return Err(Error::Precondition(format!("ε must lie in (0, 2π), got {eps}")));
    }
    let prec = opts.prec;
    let kappa = kappa.with_prec(prec);
    let pref = e_factor(lp, n_color, &kappa)?;
    let scale = 8.0 * std::f64::consts::PI * lp.product() as f64;
    let (kr, ki) = kappa.to_f64();
    let ln_amp = vertical_f_bound(lp, n_color, eps) - ki * eps * eps / scale;
    let quadratic = -ki / scale;
    let lin = 2.0 * eps * kr / scale;
    let up = GaussianDecay { ln_amplitude: ln_amp, linear: -lin, quadratic, valid_from: 0.0 };
    let down = GaussianDecay { ln_amplitude: ln_amp, linear: lin, quadratic, valid_from: 0.0 };
    let anchor = HPComplex::from_f64(eps, 0.0, prec);
    let contour = Contour::line(anchor, HPComplex::i(prec), down, up)?;
    let f = |y: &HPComplex| integrand(lp, n_color, &kappa, y).unwrap_or_else(|_| HPComplex::from_f64(f64::NAN, f64::NAN, prec));
    let tol = opts.tol / pref.abs_f64().max(1e-300);
    let v = contour_integrate(&f, &contour, &QuadratureOptions::new(tol, prec))?;
    Ok(&pref * &v)
}

pub fn median_sum(lp: &SeifertLoop, n_color: i64, kappa: &HPComplex, opts: &ResurgenceOptions) -> Result<MedianSum> {
    let (lat, vert) = rayon::join(
        || lateral_sums(lp, n_color, kappa, opts),
        || vertical_sum(lp, n_color, kappa, opts.epsilon, opts),
    );
    let (s_plus, s_minus, delta) = lat?;
    let half = Float::with_val(opts.prec, 0.5);
    Ok(MedianSum {
        via_average: (&s_plus + &s_minus).scale(&half),
        via_vertical: vert?,
        s_plus,
        s_minus,
        delta,
        epsilon: opts.epsilon,
    })
}

#[derive(Clone, Debug)]
pub struct StokesJump {
    /// `S⁻ − S⁺`.
    pub lhs: HPComplex,
    /// Residue prediction from the singularities `ω_m`, `m ≤ m_max`.
    pub rhs: HPComplex,
    /// Total size of the contributions from `m > m_max`.
    pub truncation: f64,
    pub s_plus: HPComplex,
    pub s_minus: HPComplex,
    pub delta: f64,
    /// Largest pole order among the contributing singularities.
    pub max_order: usize,
    /// Contributions `E(κ)·2πi·Res` per singularity, `m ≤ m_max`.
    pub contributions: Vec<(i64, HPComplex)>,
}

/// Smallest `m` beyond which `|e^{−κω_m}|` is below `2^{−prec}`.
fn m_stop(lp: &SeifertLoop, kappa: &HPComplex, prec: u32) -> i64 {
    let decay = -kappa.im().to_f64() * std::f64::consts::PI / (2.0 * lp.product() as f64);
    let target = prec as f64 * std::f64::consts::LN_2 + 20.0;
    ((target / decay).sqrt().ceil() as i64).max(1)
}

pub fn stokes_jump(
    lp: &SeifertLoop,
    n_color: i64,
    kappa: &HPComplex,
    m_max: i64,
    opts: &ResurgenceOptions,
) -> Result<StokesJump> {
    require_lower(kappa)?;
    let prec = opts.prec;
    let kappa = kappa.with_prec(prec);
    let (s_plus, s_minus, delta) = lateral_sums(lp, n_color, &kappa, opts)?;
    let lhs = &s_minus - &s_plus;
    let pref = &e_factor(lp, n_color, &kappa)? * &HPComplex::from_real(pi(prec) * 2u32).mul_i();
    let upper = m_stop(lp, &kappa, prec).max(m_max);
    let data = singularities(lp, n_color, upper, prec)?;
    let mut rhs = HPComplex::zero(prec);
    let mut truncation = 0.0;
    let mut max_order = 0;
    let mut contributions = Vec::new();
    for d in &data {
        let term = &pref * &d.laplace_residue(&kappa);
        if d.m <= m_max {
            rhs += &term;
            max_order = max_order.max(d.principal.order);
            contributions.push((d.m, term));
        } else {
            truncation += term.abs_f64();
        }
    }
    truncation += 2f64.powi(-(prec as i32));
    Ok(StokesJump { lhs, rhs, truncation, s_plus, s_minus, delta, max_order, contributions })
}

#[derive(Clone, Debug)]
pub struct BlrDecomposition {
    pub z_triv: HPComplex,
    pub residue_sum: HPComplex,
    pub total: HPComplex,
    /// Principal parts of `e^{Kg}F_N/(1 − e^{−Ky})` at `2πim`, `1 ≤ m ≤ 2P − 1`.
    pub residues: Vec<(i64, LaurentPart)>,
}

/// Principal part of `e^{Kg(y)}F_N(y)/(1 − e^{−Ky})` at `y = 2πim`.
pub fn blr_principal(lp: &SeifertLoop, n_color: i64, level: i64, m: i64, prec: u32) -> Result<LaurentPart> {
    let work = prec + 32;
    let max_order = (pole_order(lp, m).max(0) + 1) as usize;
    let product = lp.product();
    let y0 = HPComplex::new(Float::new(work), pi(work) * 2u32 * m);
    let s = (pi(work) * 8u32 * product).recip();
    let num = |len: usize| -> Result<TaylorSeries> {
        // K·g(y₀ + h) = iK(y₀² + 2y₀h + h²)/(8πP)
        let k = HPComplex::from_int(level, work).mul_i().scale(&s);
        let mut coeffs = vec![&k * &(&y0 * &y0), (&k * &y0).scale_i64(2), k.clone()];
        coeffs.resize(len.max(3), HPComplex::zero(work));
        coeffs.truncate(len.max(1));
        let gauss = TaylorSeries::new(0, coeffs, work).exp()?;
        let mut top = sinh_local(&Rational::from((n_color, 2)), m, len, work);
        for &(p, _) in lp.pairs() {
            top = top.mul(&sinh_local(&Rational::from((1, 2 * p)), m, len, work));
        }
        Ok(gauss.mul(&top))
    };
    let den = |len: usize| -> Result<TaylorSeries> {
        let base = sinh_local(&Rational::from((1, 2)), m, len, work);
        let mut bottom = TaylorSeries::constant(HPComplex::one(work), len);
        for _ in 0..lp.n() - 1 {
            bottom = bottom.mul(&base);
        }
        // 1 − e^{−K(y₀+h)} = 1 − e^{−Kh} since e^{−Ky₀} = 1
        let mut c = Vec::with_capacity(len);
        let mut t = HPComplex::one(work);
        for j in 1..=len {
            t = t.scale_i64(-level).scale(&Float::with_val(work, j).recip());
            c.push(-&t);
        }
        Ok(bottom.mul(&TaylorSeries::new(1, c, work)))
    };
    let part = laurent_principal(num, den, Center::TwoPiIM(m), max_order, work)?;
    Ok(LaurentPart {
        center: part.center,
        coeffs: part.coeffs.iter().map(|c| c.with_prec(prec)).collect(),
        order: part.order,
    })
}

/// `Z(K;N)` as the trivial-connection integral plus residues at `2πim`, `1 ≤ m ≤ 2P − 1`.
pub fn blr_decompose(lp: &SeifertLoop, n_color: i64, level: i64, opts: &ResurgenceOptions) -> Result<BlrDecomposition> {
    if level < 2 {
        return Err(Error::LevelTooSmall);
    }
    let prec = opts.prec;
    let kappa = HPComplex::from_int(level, prec);
    let z_triv = directional_sum(lp, n_color, &kappa, 0.0, opts)?;
    let product = lp.product();
    let residues: Vec<(i64, LaurentPart)> = (1..2 * product)
        .map(|m| blr_principal(lp, n_color, level, m, prec).map(|p| (m, p)))
        .collect::<Result<_>>()?;
    let mut sum = HPComplex::zero(prec);
    for (_, part) in &residues {
        sum += &part.residue(prec);
    }
    let factor = &e_factor(lp, n_color, &kappa)? * &HPComplex::from_real(pi(prec) * 2u32).mul_i();
    let residue_sum = -(&factor * &sum);
    let total = &z_triv + &residue_sum;
    Ok(BlrDecomposition { z_triv, residue_sum, total, residues })
}

/// `Φ(e^{2πi/κ}; N)/G₀(κ)`.
pub fn phi_over_g0(lp: &SeifertLoop, n_color: i64, kappa: &HPComplex, tol: f64) -> Result<HPComplex> {
    require_lower(kappa)?;
    let prec = kappa.prec();
    let log_q = &HPComplex::from_real(pi(prec) * 2u32).mul_i() / kappa;
    let g = g0(kappa)?;
    let (phi, _) = phi_eval_auto(lp, n_color, &log_q, tol * g.abs_f64())?;
    Ok(&phi / &g)
}

fn kappa_row(claim: &str, kappa: &HPComplex, lp: &SeifertLoop, n_color: i64) -> ReportRow {
    ReportRow::new(claim).param("kappa", format_kappa(kappa)).param("loop", lp).param("N", n_color)
}

/// Median sum against the WRT q-series and the two median constructions against each other.
pub fn verify_median(
    lp: &SeifertLoop,
    n_color: i64,
    kappa: &HPComplex,
    tol_phi: f64,
    tol_vertical: f64,
    opts: &ResurgenceOptions,
) -> Result<VerificationReport> {
    let kappa = kappa.with_prec(opts.prec);
    let (med, target) = rayon::join(
        || median_sum(lp, n_color, &kappa, opts),
        || phi_over_g0(lp, n_color, &kappa, opts.tol),
    );
    let (med, target) = (med?, target?);
    let mut report = VerificationReport::new("median Borel sum reproduces the WRT q-series");
    report.push(
        kappa_row("via_average = Phi(e^{2 pi i/kappa})/G0(kappa)", &kappa, lp, n_color)
            .param("delta", med.delta)
            .compare(&med.via_average, &target, tol_phi),
    );
    report.push(
        kappa_row("via_average = via_vertical", &kappa, lp, n_color)
            .param("delta", med.delta)
            .param("epsilon", med.epsilon)
            .compare(&med.via_average, &med.via_vertical, tol_vertical),
    );
    Ok(report)
}

pub fn verify_stokes(
    lp: &SeifertLoop,
    n_color: i64,
    kappa: &HPComplex,
    m_max: i64,
    tol: f64,
    opts: &ResurgenceOptions,
) -> Result<VerificationReport> {
    let kappa = kappa.with_prec(opts.prec);
    let jump = stokes_jump(lp, n_color, &kappa, m_max, opts)?;
    let mut report = VerificationReport::new("Stokes jump equals the residue prediction");
    let mut row = kappa_row("S^- - S^+ = residue sum", &kappa, lp, n_color)
        .param("m_max", m_max)
        .param("delta", jump.delta)
        .param("truncation", format!("{:.3e}", jump.truncation))
        .compare(&jump.lhs, &jump.rhs, tol + jump.truncation);
    if jump.max_order > 1 {
        row = row.note(format!("singularities of order up to {}", jump.max_order));
    }
    for (m, c) in &jump.contributions {
        row = row.note(format!("m = {m}: {}", fmt_complex(c)));
    }
    report.push(row);
    Ok(report)
}

pub fn verify_blr(lp: &SeifertLoop, n_color: i64, level: i64, tol: f64, opts: &ResurgenceOptions) -> Result<VerificationReport> {
    let d = blr_decompose(lp, n_color, level, opts)?;
    let target = z_norm(lp, level, n_color, opts.prec)?;
    let mut report = VerificationReport::new("trivial integral plus residues equals the normalized invariant");
    report.push(
        ReportRow::new("z_triv + residue_sum = z_norm")
            .param("K", level)
            .param("loop", lp)
            .param("N", n_color)
            .param("z_triv", fmt_complex(&d.z_triv))
            .param("residue_sum", fmt_complex(&d.residue_sum))
            .compare(&d.total, &target, tol),
    );
    Ok(report)
}

/// Directional sum at `θ = 0` against the partial sum through `κ^{−order−1/2}`,
/// with tolerance twice the first omitted term.
pub fn verify_watson(
    lp: &SeifertLoop,
    n_color: i64,
    kappa: &HPComplex,
    order: usize,
    opts: &ResurgenceOptions,
) -> Result<VerificationReport> {
    let kappa = kappa.with_prec(opts.prec);
    let series = z_pert(lp, n_color, order + 1, opts.prec)?;
    let sum = directional_sum(lp, n_color, &kappa, 0.0, opts)?;
    let partial = series.partial_sum(&kappa, order);
    let omitted = series.term(order + 1, &kappa).abs_f64();
    let mut report = VerificationReport::new("Borel sum matches the truncated perturbative series");
    report.push(
        kappa_row("directional_sum(theta=0) = partial sum", &kappa, lp, n_color)
            .param("order", order)
            .param("first_omitted", format!("{omitted:.3e}"))
            .compare(&sum, &partial, 2.0 * omitted),
    );
    Ok(report)
}
