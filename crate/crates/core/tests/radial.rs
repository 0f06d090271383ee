use rayon::prelude::*;
use rug::Rational;

use seifert_wrt::numerics::hp::HPComplex;
use seifert_wrt::wrt_qseries::radial_limit_values;
use seifert_wrt::SeifertLoop;

#[test]
fn residual_shrinks_as_levels_grow() {
    let mut cases = Vec::new();
    for l in ["2/1,3/1,5/-4", "2/1,3/-1,7/-1"] {
        for k in [3, 5, 7] {
            for n in [1, 2] {
                cases.push((l, k, n));
            }
        }
    }
    let t0 = Rational::from((1, 1024));
    cases.par_iter().for_each(|&(l, k, n)| {
        let lp: SeifertLoop = l.parse().unwrap();
        let residuals: Vec<f64> = [7, 8, 10]
            .iter()
            .map(|&levels| radial_limit_values(&lp, n, k, &t0, levels, 6, 256).unwrap().residual)
            .collect();
        assert!(residuals.windows(2).all(|w| w[1] < w[0]), "{l} K={k} N={n}: {residuals:?}");
        assert!(residuals[2] < 1e-12, "{l} K={k} N={n}: {residuals:?}");
    });
}

#[test]
fn limit_is_tau_for_torus_knots() {
    let tre: SeifertLoop = "2/1,3/-1".parse().unwrap();
    for k in [2, 3, 4, 6] {
        let r = radial_limit_values(&tre, 1, k, &Rational::from((1, 1024)), 8, 6, 256).unwrap();
        assert!((&r.limit - &HPComplex::one(256)).abs_f64() < 1e-20, "K={k}");
        assert!(r.residual < 1e-20);
    }
}
