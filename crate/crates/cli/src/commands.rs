use clap::Subcommand;
use rug::Rational;
use serde_json::{json, Value};

use seifert_wrt::exact_sums::{eps_power_sum, factor_k, tau, vanishing_check, z_norm};
use seifert_wrt::numerics::hp::default_tolerance;
use seifert_wrt::qdifference::{
    classical_limit, degenerate_k, theorem_operator, verify_degenerate_first_order, verify_inhomogeneous,
    verify_third_order, ClassicalCase,
};
use seifert_wrt::report::fmt_complex;
use seifert_wrt::resurgence::{singularities, verify_blr, verify_median, verify_stokes, verify_watson, z_pert, ResurgenceOptions};
use seifert_wrt::seifert_core::{dedekind_sum, derived_constants};
use seifert_wrt::wrt_qseries::{phi_series, radial_limit_values};
use seifert_wrt::{HalfInt, ReportRow, VerificationReport};

use crate::config::{Flags, RunConfig, DEFAULT_KAPPA, DEFAULT_LOOP};
use crate::output::Table;
use crate::Failure;

const CHECK_COLUMNS: &str = "CSV columns: report,claim,params,lhs,rhs,residual,tolerance,pass (params as key=value;...)";

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Framing constant, Dedekind sums and the prefactor B
    #[command(after_help = "CSV columns: name,value")]
    Constants,
    /// WRT invariant tau(K; N) and Z = tau/G0(K)
    #[command(after_help = "CSV columns: K,N,tau,z_norm")]
    Tau,
    /// Exact q-series of the WRT function up to --cutoff (default 40P)
    #[command(after_help = "CSV columns: exponent_num,exponent_den,coeff_num,coeff_den")]
    Phi,
    /// Radial limit of the WRT function at e^{2 pi i/K} against tau(K; N)
    #[command(after_help = "CSV columns: t,re,im,tail (one row per sample)")]
    Radial,
    /// Exact q-difference relations up to --cutoff (default 4P)
    #[command(after_help = CHECK_COLUMNS)]
    Qdiff,
    /// Classical limit of the q-difference operator, factored
    #[command(after_help = CHECK_COLUMNS)]
    Apoly,
    /// Perturbative coefficients up to --m-max; with --kappa also the Borel sum against the partial sum
    #[command(after_help = "CSV columns: m,a,e,i,borel")]
    Pert,
    /// Borel-plane singularities for m <= --m-max with principal parts
    #[command(after_help = "CSV columns: m,omega,order,residue,principal (principal as c_{-1};c_{-2};...)")]
    Borel,
    /// Median Borel sum against the WRT q-series (--tol) and the vertical contour (--tol/100)
    #[command(after_help = CHECK_COLUMNS)]
    Median,
    /// Stokes jump across the positive imaginary axis against the residue sum
    #[command(after_help = CHECK_COLUMNS)]
    Stokes,
    /// Trivial-connection integral plus residues against the normalized invariant
    #[command(after_help = CHECK_COLUMNS)]
    Blr,
    /// Exact vanishing of the Gauss-sum combinations at level K
    #[command(after_help = CHECK_COLUMNS)]
    Appendix,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Tau => "tau",
            Command::Phi => "phi",
            Command::Radial => "radial",
            Command::Qdiff => "qdiff",
            Command::Apoly => "apoly",
            Command::Pert => "pert",
            Command::Borel => "borel",
            Command::Median => "median",
            Command::Stokes => "stokes",
            Command::Blr => "blr",
            Command::Appendix => "appendix",
        }
    }
}

pub struct Outcome {
    pub result: Value,
    pub checks: Vec<VerificationReport>,
    /// Command-specific CSV table; verification commands use the check rows instead.
    pub table: Option<Table>,
}

pub fn resolve(command: Command, flags: &Flags) -> Result<RunConfig, Failure> {
    use Command::*;
    let seifert_loop = flags.seifert_loop.clone().unwrap_or_else(|| DEFAULT_LOOP.into());
    let product = seifert_loop.parse::<seifert_wrt::SeifertLoop>().map_err(Failure::from)?.product();
    let color = flags.color.unwrap_or(1);
    if color < 1 {
        return Err(Failure::Usage("N must be ≥ 1".into()));
    }
    if flags.precision_bits < 64 {
        return Err(Failure::Usage("precision must be at least 64 bits".into()));
    }
    let uses = |cmds: &[Command]| cmds.contains(&command);
    let kappa = match command {
        Median | Stokes => Some(flags.kappa.clone().unwrap_or_else(|| DEFAULT_KAPPA.into())),
        Pert => flags.kappa.clone(),
        _ => None,
    };
    let cutoff = match command {
        Phi => Some(flags.cutoff.unwrap_or(40 * product)),
        Qdiff => Some(flags.cutoff.unwrap_or(4 * product)),
        _ => None,
    };
    let m_max = match command {
        Stokes => Some(flags.m_max.unwrap_or(7)),
        Borel => Some(flags.m_max.unwrap_or(12)),
        Pert => Some(flags.m_max.unwrap_or(10)),
        _ => None,
    };
    if m_max.is_some_and(|m| m < 0) {
        return Err(Failure::Usage("m_max must be ≥ 0".into()));
    }
    let tol = match command {
        Radial | Median | Stokes => Some(flags.tol.unwrap_or(1e-6)),
        Blr => Some(flags.tol.unwrap_or(default_tolerance(flags.precision_bits))),
        _ => None,
    };
    let radial = command == Radial;
    let cfg = RunConfig {
        seifert_loop,
        color,
        level: uses(&[Tau, Radial, Blr, Appendix]).then(|| flags.level.unwrap_or(5)),
        kappa: kappa.clone(),
        precision_bits: flags.precision_bits,
        cutoff,
        t0: radial.then(|| flags.t0.clone().unwrap_or_else(|| "1/1024".into())),
        levels: radial.then(|| flags.levels.unwrap_or(8)),
        degree: radial.then(|| flags.degree.unwrap_or(6)),
        delta: kappa.is_some().then(|| flags.delta.unwrap_or(0.2)),
        m_max,
        tol,
        format: flags.format,
        out: flags.out.clone(),
    };
    if cfg.level.is_some() {
        cfg.level()?;
    }
    if cfg.kappa.is_some() {
        cfg.kappa()?;
    }
    if radial {
        cfg.t0()?;
        if cfg.levels.unwrap() <= cfg.degree.unwrap() {
            return Err(Failure::Usage("levels must exceed degree".into()));
        }
    }
    Ok(cfg)
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome, Failure> {
    match command {
        Command::Constants => constants(cfg),
        Command::Tau => tau_cmd(cfg),
        Command::Phi => phi(cfg),
        Command::Radial => radial(cfg),
        Command::Qdiff => qdiff(cfg),
        Command::Apoly => apoly(cfg),
        Command::Pert => pert(cfg),
        Command::Borel => borel(cfg),
        Command::Median => median(cfg),
        Command::Stokes => stokes(cfg),
        Command::Blr => blr(cfg),
        Command::Appendix => appendix(cfg),
    }
}

fn checks_only(result: Value, checks: Vec<VerificationReport>) -> Outcome {
    Outcome { result, checks, table: None }
}

fn options(cfg: &RunConfig) -> ResurgenceOptions {
    let mut opts = ResurgenceOptions::new(cfg.precision_bits);
    if let Some(d) = cfg.delta {
        opts.delta = d;
    }
    opts
}

fn constants(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let prec = cfg.precision_bits;
    let dc = derived_constants(&lp, cfg.color, prec)?;
    let mut dedekind = Vec::new();
    let mut table = Table::new(&["name", "value"]);
    for &(p, q) in lp.pairs() {
        let s = dedekind_sum(q, p, prec)?;
        table.push(vec![format!("s({q},{p})"), s.to_string()]);
        dedekind.push(json!({ "p": p, "q": q, "s": s.to_string() }));
    }
    table.push(vec!["P".into(), dc.product.to_string()]);
    table.push(vec!["theta0".into(), dc.theta0.to_string()]);
    table.push(vec!["c(N)".into(), dc.framing.to_string()]);
    table.push(vec!["B".into(), fmt_complex(&dc.b)]);
    let result = json!({
        "P": dc.product,
        "theta0": dc.theta0.to_string(),
        "framing": dc.framing.to_string(),
        "B": fmt_complex(&dc.b),
        "dedekind": dedekind,
    });
    Ok(Outcome { result, checks: Vec::new(), table: Some(table) })
}

fn tau_cmd(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let k = cfg.level()?;
    let t = tau(&lp, k, cfg.color, cfg.precision_bits)?;
    let z = z_norm(&lp, k, cfg.color, cfg.precision_bits)?;
    let mut table = Table::new(&["K", "N", "tau", "z_norm"]);
    table.push(vec![k.to_string(), cfg.color.to_string(), fmt_complex(&t), fmt_complex(&z)]);
    let result = json!({ "tau": fmt_complex(&t), "z_norm": fmt_complex(&z) });
    Ok(Outcome { result, checks: Vec::new(), table: Some(table) })
}

fn phi(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let s = phi_series(&lp, cfg.color, cfg.cutoff())?.series;
    let mut table = Table::new(&["exponent_num", "exponent_den", "coeff_num", "coeff_den"]);
    let mut terms = Vec::new();
    for (index, coeff) in s.terms() {
        terms.push(json!({ "exponent": Rational::from((index, s.denom())).to_string(), "coeff": coeff.to_string() }));
    }
    for row in s.csv_rows() {
        table.push(row.to_vec());
    }
    let result = json!({
        "lattice_denominator": s.denom(),
        "cutoff_exponent": Rational::from((cfg.cutoff(), s.denom())).to_string(),
        "terms": terms,
    });
    Ok(Outcome { result, checks: Vec::new(), table: Some(table) })
}

fn radial(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let k = cfg.level()?;
    let t0 = cfg.t0()?;
    let (levels, degree) = (cfg.levels.unwrap(), cfg.degree.unwrap());
    let r = radial_limit_values(&lp, cfg.color, k, &t0, levels, degree, cfg.precision_bits)?;
    let mut report = VerificationReport::new("radial limit of the WRT function equals tau(K; N)");
    report.push(
        ReportRow::new("extrapolated limit = tau")
            .param("loop", &lp)
            .param("N", cfg.color)
            .param("K", k)
            .compare(&r.limit, &r.tau, cfg.tol())
            .note(format!("extrapolation spread {:.3e}", r.spread)),
    );
    let mut table = Table::new(&["t", "re", "im", "tail"]);
    let mut samples = Vec::new();
    for s in &r.samples {
        let (re, im) = (s.value.re().to_string_radix(10, Some(30)), s.value.im().to_string_radix(10, Some(30)));
        table.push(vec![s.t.to_string(), re, im, format!("{:.3e}", s.tail)]);
        samples.push(json!({ "t": s.t.to_string(), "value": fmt_complex(&s.value), "tail": s.tail }));
    }
    let result = json!({
        "tau": fmt_complex(&r.tau),
        "limit": fmt_complex(&r.limit),
        "residual": r.residual,
        "spread": r.spread,
        "samples": samples,
    });
    Ok(Outcome { result, checks: vec![report], table: Some(table) })
}

fn qdiff(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let cutoff = cfg.cutoff();
    let mut checks = Vec::new();
    let result = match degenerate_k(&lp) {
        Some(k) => {
            let n = cfg.color.max(2);
            checks.push(verify_degenerate_first_order(&lp, n, cutoff)?);
            json!({ "case": "degenerate", "k": k, "first_order_N": n })
        }
        None => {
            checks.push(verify_inhomogeneous(&lp, cfg.color, cutoff)?);
            checks.push(verify_third_order(&lp, cfg.color, cutoff)?);
            let op = theorem_operator(lp.product());
            json!({ "case": "general", "operator": op.to_string() })
        }
    };
    Ok(checks_only(result, checks))
}

fn apoly(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let cl = classical_limit(ClassicalCase::for_loop(&lp))?;
    let result = json!({
        "polynomial": cl.polynomial.to_string(),
        "factored": cl.factored,
        "factors": cl.factors.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
    });
    Ok(checks_only(result, vec![cl.report]))
}

fn pert(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let order = cfg.m_max() as usize;
    let s = z_pert(&lp, cfg.color, order, cfg.precision_bits)?;
    let borel = s.borel_coeffs();
    let mut table = Table::new(&["m", "a", "e", "i", "borel"]);
    let mut coeffs = Vec::new();
    for m in 0..=order {
        let row = [fmt_complex(&s.a[m]), fmt_complex(&s.e[m]), fmt_complex(&s.i[m]), fmt_complex(&borel[m])];
        coeffs.push(json!({ "m": m, "a": row[0], "e": row[1], "i": row[2], "borel": row[3] }));
        let mut line = vec![m.to_string()];
        line.extend(row);
        table.push(line);
    }
    let mut checks = Vec::new();
    if cfg.kappa.is_some() {
        checks.push(verify_watson(&lp, cfg.color, &cfg.kappa()?, order, &options(cfg))?);
    }
    Ok(Outcome { result: json!({ "coefficients": coeffs }), checks, table: Some(table) })
}

fn borel(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let prec = cfg.precision_bits;
    let sing = singularities(&lp, cfg.color, cfg.m_max(), prec)?;
    let mut table = Table::new(&["m", "omega", "order", "residue", "principal"]);
    let mut list = Vec::new();
    for d in &sing {
        let principal: Vec<String> = d.principal.coeffs.iter().map(fmt_complex).collect();
        let residue = fmt_complex(&d.principal.residue(prec));
        table.push(vec![
            d.m.to_string(),
            fmt_complex(&d.omega),
            d.principal.order.to_string(),
            residue.clone(),
            principal.join(";"),
        ]);
        list.push(json!({
            "m": d.m,
            "omega": fmt_complex(&d.omega),
            "order": d.principal.order,
            "residue": residue,
            "principal": principal,
        }));
    }
    let max_order = sing.iter().map(|d| d.principal.order).max().unwrap_or(0);
    Ok(Outcome { result: json!({ "singularities": list, "max_order": max_order }), checks: Vec::new(), table: Some(table) })
}

fn median(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let tol = cfg.tol();
    let r = verify_median(&lp, cfg.color, &cfg.kappa()?, tol, tol / 100.0, &options(cfg))?;
    Ok(checks_only(json!({}), vec![r]))
}

fn stokes(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let r = verify_stokes(&lp, cfg.color, &cfg.kappa()?, cfg.m_max(), cfg.tol(), &options(cfg))?;
    Ok(checks_only(json!({}), vec![r]))
}

fn blr(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let r = verify_blr(&lp, cfg.color, cfg.level()?, cfg.tol(), &options(cfg))?;
    Ok(checks_only(json!({}), vec![r]))
}

fn appendix(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lp = cfg.parse_loop()?;
    let k = cfg.level()?;
    let mut report = VerificationReport::new("vanishing Gauss-sum combinations");
    for twice in [0, 1, -1, 2, -2] {
        for s in 0..lp.n() as u32 {
            report.extend(vanishing_check(&lp, k, HalfInt::from_twice(twice), s, cfg.precision_bits)?);
        }
    }
    let (k1, k2) = factor_k(k, &lp);
    let eps = eps_power_sum(&lp, lp.n() as u32);
    let result = json!({ "factor_k": [k1, k2], "eps_sum_s_equals_n": eps.to_string() });
    Ok(checks_only(result, vec![report]))
}
