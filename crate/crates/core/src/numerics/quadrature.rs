//! Contour integration with tanh-sinh panels and Gaussian-truncated rays.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::hp::{pi, HPComplex};

/// `|f(anchor + r·direction)| <= exp(ln_amplitude + linear·r − quadratic·r²)`
/// for all `r >= valid_from`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianDecay {
    pub ln_amplitude: f64,
    pub linear: f64,
    pub quadratic: f64,
    pub valid_from: f64,
}

impl GaussianDecay {
    fn tail(&self, r: f64) -> f64 {
        let slope = 2.0 * self.quadratic * r - self.linear;
        if slope <= 0.0 {
            return f64::INFINITY;
        }
        (self.ln_amplitude + self.linear * r - self.quadratic * r * r).exp() / slope
    }

    /// Smallest convenient radius beyond which the certified tail is below `tol`.
    pub fn truncation(&self, tol: f64) -> Result<f64> {
        if !(self.quadratic > 0.0) {
            return Err(Error::InvalidContour("ray certificate is not Gaussian".into()));
        }
        let mut lo = self.valid_from.max(0.0);
        if self.tail(lo) <= tol {
            return Ok(lo);
        }
        let mut hi = lo.max(1.0);
        while self.tail(hi) > tol {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::InvalidContour("ray truncation radius diverges".into()));
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.tail(mid) > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

#[derive(Clone, Debug)]
pub enum Segment {
    Line { from: HPComplex, to: HPComplex },
    /// The ray `anchor + r·direction`, traversed from `r = ∞` down to `r = 0`.
    RayIn { anchor: HPComplex, direction: HPComplex, decay: GaussianDecay },
    /// The ray `anchor + r·direction`, traversed from `r = 0` to `r = ∞`.
    RayOut { anchor: HPComplex, direction: HPComplex, decay: GaussianDecay },
}

impl Segment {
    fn start(&self) -> Option<&HPComplex> {
        match self {
            Segment::Line { from, .. } => Some(from),
            Segment::RayIn { .. } => None,
            Segment::RayOut { anchor, .. } => Some(anchor),
        }
    }

    fn end(&self) -> Option<&HPComplex> {
        match self {
            Segment::Line { to, .. } => Some(to),
            Segment::RayIn { anchor, .. } => Some(anchor),
            Segment::RayOut { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Contour {
    segments: Vec<Segment>,
}

impl Contour {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidContour("no segments".into()));
        }
        let last = segments.len() - 1;
        for (i, s) in segments.iter().enumerate() {
            match s {
                Segment::RayIn { direction, .. } | Segment::RayOut { direction, .. } => {
                    if (direction.abs_f64() - 1.0).abs() > 1e-12 {
                        return Err(Error::InvalidContour("ray direction is not a unit vector".into()));
                    }
                }
                Segment::Line { .. } => {}
            }
            if matches!(s, Segment::RayIn { .. }) && i != 0 {
                return Err(Error::InvalidContour("incoming ray must come first".into()));
            }
            if matches!(s, Segment::RayOut { .. }) && i != last {
                return Err(Error::InvalidContour("outgoing ray must come last".into()));
            }
        }
        for w in segments.windows(2) {
            let (a, b) = (w[0].end(), w[1].start());
            match (a, b) {
                (Some(a), Some(b)) => {
                    let scale = 1.0 + a.abs_f64();
                    if (a - b).abs_f64() > scale * 2f64.powi(-(a.prec().min(b.prec()) as i32) / 2) {
                        return Err(Error::InvalidContour("segments do not share endpoints".into()));
                    }
                }
                _ => return Err(Error::InvalidContour("rays only at the two ends".into())),
            }
        }
        Ok(Contour { segments })
    }

    /// The full line `anchor + ℝ·direction`, oriented along `direction`.
    pub fn line(anchor: HPComplex, direction: HPComplex, back: GaussianDecay, forward: GaussianDecay) -> Result<Self> {
        Self::new(vec![
            Segment::RayIn { anchor: anchor.clone(), direction: -&direction, decay: back },
            Segment::RayOut { anchor, direction, decay: forward },
        ])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }
}

#[derive(Clone, Debug)]
pub struct QuadratureOptions {
    /// Absolute error target for the whole contour.
    pub tol: f64,
    pub prec: u32,
    /// Maximum number of integrand evaluations.
    pub max_nodes: usize,
    /// Initial panel length on rays.
    pub panel_length: f64,
    pub max_level: u32,
}

impl QuadratureOptions {
    pub fn new(tol: f64, prec: u32) -> Self {
        QuadratureOptions { tol, prec, max_nodes: 4_000_000, panel_length: 2.0, max_level: 7 }
    }
}

/// Per-level nodes `(1 − tanh u, weight)` with `u = (π/2)sinh t`, for `t > 0`.
struct TanhSinhTable {
    levels: Vec<Vec<(Float, Float)>>,
    center_weight: Float,
}

fn table(prec: u32, max_level: u32) -> Arc<TanhSinhTable> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), Arc<TanhSinhTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (prec, max_level);
    if let Some(t) = cache.lock().unwrap().get(&key) {
        return t.clone();
    }
    let built = Arc::new(build_table(prec, max_level));
    cache.lock().unwrap().insert(key, built.clone());
    built
}

fn build_table(prec: u32, max_level: u32) -> TanhSinhTable {
    let work = prec + 32;
    let half_pi = pi(work) / 2u32;
    let cutoff = Float::with_val(work, Float::i_exp(1, -(prec as i32) - 40));
    let node = |t: &Float| -> (Float, Float) {
        let (sh, ch) = t.clone().sinh_cosh(Float::new(work));
        let u = Float::with_val(work, &half_pi * &sh);
        let e = Float::with_val(work, -Float::with_val(work, &u * 2u32)).exp();
        let one_plus = Float::with_val(work, 1u32 + &e);
        let s = Float::with_val(work, Float::with_val(work, &e * 2u32) / &one_plus);
        let w = Float::with_val(work, &half_pi * &ch) * Float::with_val(work, &e * 4u32)
            / Float::with_val(work, one_plus.square_ref());
        (Float::with_val(prec, s), Float::with_val(prec, w))
    };
    let mut levels = Vec::new();
    for level in 0..=max_level {
        let h = Float::with_val(work, Float::i_exp(1, -(level as i32)));
        let mut nodes = Vec::new();
        let mut k: u64 = 1;
        loop {
            if level > 0 && k % 2 == 0 {
                k += 1;
                continue;
            }
            let t = Float::with_val(work, &h * k);
            let (s, w) = node(&t);
            if w < cutoff || s.is_zero() {
                break;
            }
            nodes.push((s, w));
            k += 1;
        }
        levels.push(nodes);
    }
    TanhSinhTable { levels, center_weight: Float::with_val(prec, &half_pi) }
}

struct Integrator<'a, F> {
    f: &'a F,
    prec: u32,
    max_level: u32,
    table: Arc<TanhSinhTable>,
    nodes_used: usize,
    max_nodes: usize,
}

impl<'a, F> Integrator<'a, F>
where
    F: Fn(&HPComplex) -> HPComplex + Sync,
{
    fn eval_all(&mut self, points: Vec<(HPComplex, Float)>) -> Result<HPComplex> {
        self.nodes_used += points.len();
        if self.nodes_used > self.max_nodes {
            return Err(Error::QuadratureBudget { tol: 0.0, budget: self.max_nodes });
        }
        let f = self.f;
        let values: Vec<HPComplex> = points.par_iter().map(|(z, w)| f(z).scale(w)).collect();
        let mut acc = HPComplex::zero(self.prec);
        for v in &values {
            acc += v;
        }
        Ok(acc)
    }

    /// Tanh-sinh on the straight panel [a, b]; bisects when a panel does not settle.
    fn panel(&mut self, a: &HPComplex, b: &HPComplex, tol: f64, depth: u32) -> Result<HPComplex> {
        let two = Float::with_val(self.prec, 2);
        let half = (b - a).scale(&Float::with_val(self.prec, 0.5));
        let mid = (a + b).scale(&Float::with_val(self.prec, 0.5));
        let hl = half.abs_f64();
        let table = self.table.clone();
        let pairs = |lvl: usize| -> Vec<(HPComplex, Float)> {
            let mut pts = Vec::with_capacity(2 * table.levels[lvl].len() + 1);
            for (s, w) in &table.levels[lvl] {
                let d = half.scale(s);
                pts.push((b - &d, w.clone()));
                pts.push((a + &d, w.clone()));
            }
            pts
        };
        let mut level0 = pairs(0);
        level0.push((mid.clone(), table.center_weight.clone()));
        let mut sum = self.eval_all(level0)?;
        let mut estimate = sum.clone();
        let mut h = Float::with_val(self.prec, 1);
        for level in 1..=self.max_level as usize {
            h /= &two;
            let fresh = self.eval_all(pairs(level))?;
            sum += &fresh;
            let next = sum.scale(&h);
            let diff = (&next - &estimate).abs_f64() * hl;
            estimate = next;
            if level >= 3 && diff <= tol {
                return Ok(&estimate * &half);
            }
        }
        if depth >= 24 {
            return Err(Error::QuadratureBudget { tol, budget: self.max_nodes });
        }
        let left = self.panel(a, &mid, tol / 2.0, depth + 1)?;
        let right = self.panel(&mid, b, tol / 2.0, depth + 1)?;
        Ok(&left + &right)
    }

    fn line(&mut self, a: &HPComplex, b: &HPComplex, tol: f64, panel_length: f64) -> Result<HPComplex> {
        let len = (b - a).abs_f64();
        let pieces = ((len / panel_length).ceil() as usize).max(1);
        let step = (b - a).scale(&Float::with_val(self.prec, 1.0 / pieces as f64));
        let mut acc = HPComplex::zero(self.prec);
        let mut left = a.clone();
        for i in 0..pieces {
            let right = if i + 1 == pieces { b.clone() } else { &left + &step };
            acc += &self.panel(&left, &right, tol / pieces as f64, 0)?;
            left = right;
        }
        Ok(acc)
    }
}

/// Integrates `f` along the contour to absolute accuracy `opts.tol`.
pub fn contour_integrate<F>(f: &F, contour: &Contour, opts: &QuadratureOptions) -> Result<HPComplex>
where
    F: Fn(&HPComplex) -> HPComplex + Sync,
{
    let mut it = Integrator {
        f,
        prec: opts.prec,
        max_level: opts.max_level,
        table: table(opts.prec, opts.max_level),
        nodes_used: 0,
        max_nodes: opts.max_nodes,
    };
    let per = opts.tol / contour.segments.len() as f64;
    let mut total = HPComplex::zero(opts.prec);
    for seg in &contour.segments {
        let part = match seg {
            Segment::Line { from, to } => it.line(from, to, per, opts.panel_length),
            Segment::RayIn { anchor, direction, decay } | Segment::RayOut { anchor, direction, decay } => {
                let r = decay.truncation(per / 4.0)?;
                let far = anchor + &direction.scale(&Float::with_val(opts.prec, r));
                let v = it.line(anchor, &far, per * 0.75, opts.panel_length)?;
                if matches!(seg, Segment::RayIn { .. }) {
                    Ok(-v)
                } else {
                    Ok(v)
                }
            }
        };
        let part = part.map_err(|e| match e {
            Error::QuadratureBudget { budget, .. } => Error::QuadratureBudget { tol: opts.tol, budget },
            other => other,
        })?;
        total += &part;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 256;

    fn c(re: f64, im: f64) -> HPComplex {
        HPComplex::from_f64(re, im, P)
    }

    fn gaussian_decay() -> GaussianDecay {
        GaussianDecay { ln_amplitude: 0.0, linear: 0.0, quadratic: 1.0, valid_from: 0.0 }
    }

    #[test]
    fn gaussian_over_real_line() {
        let contour = Contour::line(c(0.0, 0.0), c(1.0, 0.0), gaussian_decay(), gaussian_decay()).unwrap();
        let f = |z: &HPComplex| (-(z * z)).exp();
        let opts = QuadratureOptions::new(1e-40, P);
        let v = contour_integrate(&f, &contour, &opts).unwrap();
        let sqrt_pi = HPComplex::from_real(pi(P).sqrt());
        assert!((&v - &sqrt_pi).abs_f64() < 1e-40);
    }

    #[test]
    fn finite_segment_polynomial() {
        let contour = Contour::new(vec![Segment::Line { from: c(0.0, 0.0), to: c(1.0, 1.0) }]).unwrap();
        let f = |z: &HPComplex| z * z;
        let v = contour_integrate(&f, &contour, &QuadratureOptions::new(1e-50, P)).unwrap();
        // (1+i)^3 / 3
        let third = Float::with_val(P, 2) / 3u32;
        let expected = HPComplex::new(-third.clone(), third);
        assert!((&v - &expected).abs_f64() < 1e-50);
    }

    #[test]
    fn additivity_over_split_contours() {
        let f = |z: &HPComplex| (z * &c(0.0, 3.0)).exp();
        let opts = QuadratureOptions::new(1e-45, P);
        let whole = Contour::new(vec![Segment::Line { from: c(-1.0, 0.0), to: c(2.0, 0.5) }]).unwrap();
        let split = Contour::new(vec![
            Segment::Line { from: c(-1.0, 0.0), to: c(0.5, 0.25) },
            Segment::Line { from: c(0.5, 0.25), to: c(2.0, 0.5) },
        ])
        .unwrap();
        let a = contour_integrate(&f, &whole, &opts).unwrap();
        let b = contour_integrate(&f, &split, &opts).unwrap();
        assert!((&a - &b).abs_f64() < 2e-45);
    }

    #[test]
    fn malformed_contours_are_rejected() {
        let gap = Contour::new(vec![
            Segment::Line { from: c(0.0, 0.0), to: c(1.0, 0.0) },
            Segment::Line { from: c(2.0, 0.0), to: c(3.0, 0.0) },
        ]);
        assert!(gap.is_err());
        let inner_ray = Contour::new(vec![
            Segment::Line { from: c(0.0, 0.0), to: c(1.0, 0.0) },
            Segment::RayOut { anchor: c(1.0, 0.0), direction: c(1.0, 0.0), decay: gaussian_decay() },
            Segment::Line { from: c(1.0, 0.0), to: c(3.0, 0.0) },
        ]);
        assert!(inner_ray.is_err());
    }

    #[test]
    fn node_budget_is_enforced() {
        let contour = Contour::new(vec![Segment::Line { from: c(0.0, 0.0), to: c(1.0, 0.0) }]).unwrap();
        let f = |z: &HPComplex| (z.scale_i64(400)).mul_i().exp();
        let mut opts = QuadratureOptions::new(1e-60, P);
        opts.max_nodes = 50;
        assert!(matches!(contour_integrate(&f, &contour, &opts), Err(Error::QuadratureBudget { .. })));
    }

    #[test]
    fn truncation_radius_respects_tail() {
        let d = GaussianDecay { ln_amplitude: 2.0, linear: 1.5, quadratic: 0.01, valid_from: 3.0 };
        let r = d.truncation(1e-30).unwrap();
        assert!(d.tail(r) <= 1e-30);
        assert!(d.tail(r * 0.9) > 1e-30);
    }
}
