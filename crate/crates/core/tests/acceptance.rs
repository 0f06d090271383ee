//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any gating line fails.

use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rayon::prelude::*;
use rug::Rational;

use seifert_wrt::exact_sums::{eps_power_sum, factor_k, gauss_g, reciprocity, vanishing_check};
use seifert_wrt::numerics::extrapolate;
use seifert_wrt::numerics::hp::HPComplex;
use seifert_wrt::qdifference::{
    classical_limit, verify_degenerate_first_order, verify_inhomogeneous, verify_third_order, ClassicalCase,
    LaurentPoly2,
};
use seifert_wrt::resurgence::{verify_blr, verify_median, verify_stokes, verify_watson, ResurgenceOptions};
use seifert_wrt::seifert_core::{dedekind_sum, derived_constants, sign_product, sign_vectors};
use seifert_wrt::wrt_qseries::{phi_ab, phi_series, radial_limit_values, torus_jones_series};
use seifert_wrt::{HalfInt, SeifertLoop};

const PREC: u32 = 256;

fn lp(s: &str) -> SeifertLoop {
    s.parse().unwrap()
}

struct Outcome {
    label: String,
    pass: bool,
    gating: bool,
    detail: String,
}

struct Run {
    outcomes: Vec<Outcome>,
}

impl Run {
    fn record(&mut self, label: &str, gating: bool, pass: bool, detail: String, started: Instant) {
        let tag = match (pass, gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (not gating)",
        };
        println!("{tag:<18} {label}: {detail} [{:.1}s]", started.elapsed().as_secs_f64());
        self.outcomes.push(Outcome { label: label.into(), pass, gating, detail });
    }
}

fn constants(run: &mut Run) {
    let t = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    let dc = derived_constants(&lp("2/1,3/1,5/-4"), 1, PREC).unwrap();
    ok &= dc.theta0 == Rational::from((181, 30));
    notes.push(format!("theta0 = {}", dc.theta0));
    for (q, p, expected) in [(1, 2, Rational::new()), (1, 3, Rational::from((1, 18))), (-4, 5, Rational::from((1, 5)))] {
        ok &= dedekind_sum(q, p, PREC).unwrap() == expected;
    }
    for p in 2..=40i64 {
        ok &= dedekind_sum(1, p, PREC).unwrap() == Rational::from(((p - 1) * (p - 2), 12 * p));
    }
    notes.push("s(1,2), s(1,3), s(-4,5) and s(1,p), p <= 40, exact".into());
    run.record("1 constants", true, ok, notes.join("; "), t);
}

fn gauss(run: &mut Run) {
    let t = Instant::now();
    let tol = 2f64.powi(-200);
    let pairs: Vec<(i64, i64)> = (1..=300).flat_map(|k| (1..=300 / k).map(move |p| (k, p))).collect();
    let worst_g = pairs
        .par_iter()
        .map(|&(k, p)| {
            let (s, c) = gauss_g(k, p, PREC);
            (&s - &c).abs_f64()
        })
        .reduce(|| 0.0, f64::max);

    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let strategy = (-40i64..=40, -40i64..=40, -200i64..=200);
    let mut triples = Vec::new();
    while triples.len() < 100 {
        let (m1, m2, j) = strategy.new_tree(&mut runner).unwrap().current();
        if m1 == 0 || m2 == 0 || (m1 * m2) % 2 != 0 {
            continue;
        }
        triples.push((m1, m2, Rational::from((j, m1))));
    }
    let worst_r = triples
        .par_iter()
        .map(|(m1, m2, shift)| {
            let (l, r) = reciprocity(*m1, *m2, shift, PREC).unwrap();
            (&l - &r).abs_f64()
        })
        .reduce(|| 0.0, f64::max);
    let pass = worst_g < tol && worst_r < tol;
    run.record(
        "2 Gauss sums and reciprocity",
        true,
        pass,
        format!("{} (K,P) pairs worst {worst_g:.2e}; 100 triples worst {worst_r:.2e}; tol 2^-200", pairs.len()),
        t,
    );
}

fn eps_sum_oracle(orders: &[i64], s: u32) -> Rational {
    let mut total = Rational::new();
    for mask in 0..(1u32 << orders.len()) {
        let mut sign = 1i64;
        let mut inner = Rational::new();
        for (j, &p) in orders.iter().enumerate() {
            let e = if mask >> j & 1 == 1 { -1 } else { 1 };
            sign *= e;
            inner += Rational::from((e, p));
        }
        let mut term = Rational::from(sign);
        for _ in 0..s {
            term *= &inner;
        }
        total += term;
    }
    total
}

fn appendix(run: &mut Run) {
    let t = Instant::now();
    let ells = [0, 1, -1, 2, -2].map(HalfInt::from_twice);
    let mut cases = Vec::new();
    for l in ["2/1,3/1,5/-4", "2/1,3/-1,7/-1"] {
        for k in 2..=10 {
            for ell in ells {
                for s in 0..3u32 {
                    cases.push((l, k, ell, s));
                }
            }
        }
    }
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|&(l, k, ell, s)| {
            let r = vanishing_check(&lp(l), k, ell, s, PREC).unwrap();
            (!r.pass).then(|| format!("{l} K={k} l={ell} s={s}"))
        })
        .collect();
    let loop235 = lp("2/1,3/1,5/-4");
    let eps3 = eps_power_sum(&loop235, 3);
    let eps_ok = eps3 == Rational::from((8, 5)) && eps3 == eps_sum_oracle(&[2, 3, 5], 3);
    let sign_ok = sign_vectors(3).iter().map(|e| sign_product(e)).sum::<i64>() == 0;
    let mut factor_ok = true;
    for level in 2..=60 {
        let (k1, k2) = factor_k(level, &loop235);
        factor_ok &= k1 * k2 == level
            && rug::Integer::from(k1).gcd(&rug::Integer::from(2)) == 1
            && rug::Integer::from(k2).gcd(&rug::Integer::from(15)) == 1
            && rug::Integer::from(k1).gcd(&rug::Integer::from(k2)) == 1;
    }
    let pass = failures.is_empty() && eps_ok && sign_ok && factor_ok;
    run.record(
        "3 vanishing sums",
        true,
        pass,
        format!(
            "{} exact checks, {} failed; eps sum s=3 = {eps3}; factor_k K<=60 {}",
            cases.len(),
            failures.len(),
            if factor_ok { "ok" } else { "broken" }
        ),
        t,
    );
}

fn radial(run: &mut Run) {
    let loop235 = lp("2/1,3/1,5/-4");
    let cases: Vec<(i64, i64)> = [3, 5, 7].iter().flat_map(|&k| [1, 2].map(move |n| (k, n))).collect();
    let measure = |t0: Rational| -> Vec<(i64, i64, f64)> {
        cases
            .par_iter()
            .map(|&(k, n)| {
                let r = radial_limit_values(&loop235, n, k, &t0, 8, 6, PREC).unwrap();
                (k, n, r.residual)
            })
            .collect()
    };
    let fmt = |v: &[(i64, i64, f64)]| v.iter().map(|(k, n, r)| format!("K{k}N{n} {r:.1e}")).collect::<Vec<_>>().join(", ");

    let t = Instant::now();
    let coarse = measure(Rational::from((1, 8)));
    let coarse_ok = coarse.iter().all(|c| c.2 < 1e-6);
    run.record("4 radial limit, t0 = 1/8", false, coarse_ok, fmt(&coarse), t);

    let t = Instant::now();
    let fine = measure(Rational::from((1, 1024)));
    let fine_ok = fine.iter().all(|c| c.2 < 1e-6);
    let tre = radial_limit_values(&lp("2/1,3/-1"), 1, 5, &Rational::from((1, 1024)), 8, 6, PREC).unwrap();
    let tre_ok = (&tre.limit - &HPComplex::one(PREC)).abs_f64() < 1e-20;
    let phi_b: Vec<(i64, f64)> = [3, 5, 7]
        .par_iter()
        .map(|&k| {
            let samples: Vec<(Rational, HPComplex)> = (0..8u32)
                .map(|j| {
                    let tj = Rational::from((1, 1024)) >> j;
                    let tv = HPComplex::from_rational(&tj, PREC);
                    (tj, phi_ab(&loop235, 1, k, &tv).unwrap().1)
                })
                .collect();
            (k, extrapolate(&samples, 6).unwrap().value.abs_f64())
        })
        .collect();
    let phi_b_ok = phi_b.iter().all(|(_, v)| *v < 1e-6);
    run.record(
        "4 radial limit, t0 = 1/1024",
        true,
        fine_ok && tre_ok && phi_b_ok,
        format!(
            "{}; trefoil |limit-1| {:.1e}; phi_B limits {}",
            fmt(&fine),
            (&tre.limit - &HPComplex::one(PREC)).abs_f64(),
            phi_b.iter().map(|(k, v)| format!("K{k} {v:.1e}")).collect::<Vec<_>>().join(", ")
        ),
        t,
    );
}

fn qdiff(run: &mut Run) {
    let t = Instant::now();
    let mut cases = Vec::new();
    for l in ["2/1,3/1,5/-4", "2/1,3/-1,7/-1", "2/-1,3/1,11/2", "3/-1,4/-1,5/3"] {
        for n in 1..=3 {
            cases.push((l, n));
        }
    }
    let results: Vec<(bool, usize)> = cases
        .par_iter()
        .map(|&(l, n)| {
            let lp = lp(l);
            let cutoff = 4 * lp.product();
            let a = verify_inhomogeneous(&lp, n, cutoff).unwrap();
            let b = verify_third_order(&lp, n, cutoff).unwrap();
            let terms: usize = a
                .rows
                .iter()
                .chain(&b.rows)
                .filter_map(|r| r.params.get("terms_compared").and_then(|v| v.parse::<usize>().ok()))
                .sum();
            (a.pass && b.pass, terms)
        })
        .collect();
    let tre = lp("2/1,3/-1");
    let degenerate_ok = (2..=4).all(|n| verify_degenerate_first_order(&tre, n, 4 * 6 * 10).unwrap().pass);
    let passed = results.iter().filter(|r| r.0).count();
    let terms: usize = results.iter().map(|r| r.1).sum();
    run.record(
        "5 q-difference relations",
        true,
        passed == results.len() && degenerate_ok,
        format!("{passed}/{} loop/N cases exact ({terms} terms compared); trefoil first-order exact: {degenerate_ok}", results.len()),
        t,
    );
}

fn linear(m_exp: i64, c: i64) -> LaurentPoly2 {
    let mut p = LaurentPoly2::monomial(0, 1, Rational::from(1));
    p.add_term(m_exp, 0, Rational::from(c));
    p
}

fn classical(run: &mut Run) {
    let t = Instant::now();
    let general = classical_limit(ClassicalCase::General { product: 30 }).unwrap();
    let cubic = linear(0, -1).mul(&linear(-30, -1)).mul(&linear(-30, 1));
    let degenerate = classical_limit(ClassicalCase::for_loop(&lp("2/1,3/-1"))).unwrap();
    let quadratic = linear(0, -1).mul(&linear(-6, 1));
    let pass = general.polynomial == cubic && general.report.pass && degenerate.polynomial == quadratic && degenerate.report.pass;
    run.record(
        "6 classical limit",
        true,
        pass,
        format!("{} ; {}", general.polynomial, degenerate.polynomial),
        t,
    );
}

fn torus(run: &mut Run) {
    let t = Instant::now();
    let tre = lp("2/1,3/-1");
    let cutoff = 30 * 24;
    let mut ok = true;
    for n in 1..=5 {
        let phi = phi_series(&tre, n, cutoff).unwrap().series;
        let jones = torus_jones_series(2, 3, n, cutoff);
        ok &= phi.sub(&jones).unwrap().is_empty();
    }
    run.record("7 torus knot colored Jones", true, ok, "N = 1..5 term-exact to q^30".into(), t);
}

fn blr(run: &mut Run) {
    let t = Instant::now();
    let opts = ResurgenceOptions::new(PREC);
    let loop235 = lp("2/1,3/1,5/-4");
    let cases: Vec<(i64, i64)> = [2, 3, 5, 7].iter().flat_map(|&k| [1, 2].map(move |n| (k, n))).collect();
    let res: Vec<(bool, f64)> = cases
        .par_iter()
        .map(|&(k, n)| {
            let r = verify_blr(&loop235, n, k, 1e-20, &opts).unwrap();
            (r.pass, r.worst_residual())
        })
        .collect();
    let tre = lp("2/1,3/-1");
    let tre_rep = verify_blr(&tre, 1, 5, 1e-20, &opts).unwrap();
    let worst = res.iter().map(|r| r.1).fold(0.0, f64::max);
    let pass = res.iter().all(|r| r.0) && tre_rep.pass;
    run.record(
        "8 BLR decomposition",
        true,
        pass,
        format!("worst |total - z_norm| {worst:.1e} (tol 1e-20); trefoil {:.1e}", tre_rep.worst_residual()),
        t,
    );
}

fn median(run: &mut Run) {
    let t = Instant::now();
    let opts = ResurgenceOptions::new(PREC);
    let loop235 = lp("2/1,3/1,5/-4");
    let mut cases = Vec::new();
    for (re, im) in [(6.0, -2.0), (4.0, -3.0), (10.0, -1.0)] {
        for n in [1, 2] {
            cases.push((re, im, n));
        }
    }
    let res: Vec<(bool, f64, f64)> = cases
        .par_iter()
        .map(|&(re, im, n)| {
            let kappa = HPComplex::from_f64(re, im, PREC);
            let r = verify_median(&loop235, n, &kappa, 1e-6, 1e-8, &opts).unwrap();
            (r.pass, r.rows[0].residual, r.rows[1].residual)
        })
        .collect();
    let w_phi = res.iter().map(|r| r.1).fold(0.0, f64::max);
    let w_vert = res.iter().map(|r| r.2).fold(0.0, f64::max);
    run.record(
        "9 median sum",
        true,
        res.iter().all(|r| r.0),
        format!("worst vs Phi/G0 {w_phi:.1e} (tol 1e-6); worst average vs vertical {w_vert:.1e} (tol 1e-8)"),
        t,
    );
}

fn stokes(run: &mut Run) {
    let t = Instant::now();
    let opts = ResurgenceOptions::new(PREC);
    let kappa = HPComplex::from_f64(6.0, -2.0, PREC);
    let a = verify_stokes(&lp("2/1,3/1,5/-4"), 1, &kappa, 7, 1e-6, &opts).unwrap();
    let b = verify_stokes(&lp("2/1,3/-1"), 1, &kappa, 7, 1e-10, &opts).unwrap();
    let ra = &a.rows[0];
    let rb = &b.rows[0];
    run.record(
        "10 Stokes jump",
        true,
        a.pass && b.pass,
        format!(
            "(2,3,5): |lhs - rhs| {:.2e} vs tol {:.2e} (1e-6 + truncation {}); trefoil |S^- - S^+| {:.1e} (tol 1e-10)",
            ra.residual, ra.tolerance, ra.params["truncation"], rb.residual
        ),
        t,
    );
}

fn watson(run: &mut Run) {
    let t = Instant::now();
    let mut opts = ResurgenceOptions::new(PREC);
    opts.tol = 1e-45;
    let mut cases = Vec::new();
    for l in ["2/1,3/1,5/-4", "2/1,3/-1"] {
        for n in [1, 2] {
            for k in [50.0, 100.0, 200.0] {
                cases.push((l, n, k));
            }
        }
    }
    let res: Vec<(bool, f64)> = cases
        .par_iter()
        .map(|&(l, n, k)| {
            let kappa = HPComplex::from_f64(k, 0.0, PREC);
            let r = verify_watson(&lp(l), n, &kappa, 6, &opts).unwrap();
            (r.pass, r.rows[0].residual / r.rows[0].tolerance)
        })
        .collect();
    let worst = res.iter().map(|r| r.1).fold(0.0, f64::max);
    run.record(
        "11 Watson consistency",
        true,
        res.iter().all(|r| r.0),
        format!("{} cases, order 6; worst residual / (2 x first omitted term) = {worst:.2}", res.len()),
        t,
    );
}

fn main() {
    let mut run = Run { outcomes: Vec::new() };
    constants(&mut run);
    gauss(&mut run);
    appendix(&mut run);
    radial(&mut run);
    qdiff(&mut run);
    classical(&mut run);
    torus(&mut run);
    blr(&mut run);
    median(&mut run);
    stokes(&mut run);
    watson(&mut run);
    let failed: Vec<&Outcome> = run.outcomes.iter().filter(|o| o.gating && !o.pass).collect();
    println!(
        "acceptance: {} gating lines passed, {} failed",
        run.outcomes.iter().filter(|o| o.gating && o.pass).count(),
        failed.len()
    );
    if !failed.is_empty() {
        for o in failed {
            eprintln!("failed: {} ({})", o.label, o.detail);
        }
        std::process::exit(1);
    }
}
