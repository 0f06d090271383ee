use clap::{Args, ValueEnum};
use rug::{Float, Rational};
use serde::Serialize;

use seifert_wrt::numerics::hp::HPComplex;
use seifert_wrt::SeifertLoop;

use crate::Failure;

pub const DEFAULT_LOOP: &str = "2/1,3/1,5/-4";
pub const DEFAULT_KAPPA: &str = "6-2i";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand. Absent values are filled per command.
#[derive(Args, Debug, Clone)]
pub struct Flags {
    /// Seifert loop as p1/q1,p2/q2,...
    #[arg(long = "loop", global = true, allow_hyphen_values = true)]
    pub seifert_loop: Option<String>,
    /// Color (dimension of the representation on the knot)
    #[arg(long = "N", global = true)]
    pub color: Option<i64>,
    /// Level
    #[arg(long = "K", global = true, allow_hyphen_values = true)]
    pub level: Option<i64>,
    /// Complex parameter "a+bi" or "a-bi"
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long, global = true, default_value_t = 256)]
    pub precision_bits: u32,
    /// Lattice index cutoff for q-series
    #[arg(long, global = true)]
    pub cutoff: Option<i64>,
    /// Largest sample t for the radial limit, as a rational such as 1/1024
    #[arg(long, global = true)]
    pub t0: Option<String>,
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Extrapolation degree
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    /// Tilt of the lateral Borel sums
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Largest singularity or coefficient index
    #[arg(long, global = true)]
    pub m_max: Option<i64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<String>,
}

/// The fully resolved configuration embedded in every report.
/// Fields a command does not use stay `null`.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    #[serde(rename = "loop")]
    pub seifert_loop: String,
    #[serde(rename = "N")]
    pub color: i64,
    #[serde(rename = "K")]
    pub level: Option<i64>,
    pub kappa: Option<String>,
    pub precision_bits: u32,
    pub cutoff: Option<i64>,
    pub t0: Option<String>,
    pub levels: Option<usize>,
    pub degree: Option<usize>,
    pub delta: Option<f64>,
    pub m_max: Option<i64>,
    pub tol: Option<f64>,
    pub format: Format,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn parse_loop(&self) -> Result<SeifertLoop, Failure> {
        self.seifert_loop.parse().map_err(Failure::from)
    }

    pub fn level(&self) -> Result<i64, Failure> {
        let k = self.level.ok_or_else(|| Failure::Usage("--K is required".into()))?;
        if k < 2 {
            return Err(Failure::Usage("K must be ≥ 2".into()));
        }
        Ok(k)
    }

    pub fn kappa(&self) -> Result<HPComplex, Failure> {
        let text = self.kappa.as_deref().ok_or_else(|| Failure::Usage("--kappa is required".into()))?;
        parse_complex(text, self.precision_bits)
    }

    pub fn t0(&self) -> Result<Rational, Failure> {
        let text = self.t0.as_deref().unwrap_or("1/1024");
        let t: Rational = text.parse().map_err(|_| Failure::Usage(format!("bad rational t0 {text:?}")))?;
        if t <= 0 {
            return Err(Failure::Usage("t0 must be positive".into()));
        }
        Ok(t)
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff.unwrap_or(0)
    }

    pub fn m_max(&self) -> i64 {
        self.m_max.unwrap_or(0)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(0.0)
    }
}

/// Parses "a", "bi", "a+bi" or "a-bi" with decimal parts, exactly rounded to `prec` bits.
pub fn parse_complex(text: &str, prec: u32) -> Result<HPComplex, Failure> {
    let bad = || Failure::Usage(format!("bad complex literal {text:?} (expected a+bi or a-bi)"));
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let real = |part: &str| -> Result<Float, Failure> {
        let part = part.strip_prefix('+').unwrap_or(part);
        let parsed = Float::parse(part).map_err(|_| bad())?;
        Ok(Float::with_val(prec, parsed))
    };
    let Some(body) = s.strip_suffix('i') else {
        return Ok(HPComplex::new(real(&s)?, Float::new(prec)));
    };
    // split before the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&j| (bytes[j] == b'+' || bytes[j] == b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(j) => (real(&body[..j])?, &body[j..]),
        None => (Float::new(prec), body),
    };
    let im = match im {
        "" | "+" => Float::with_val(prec, 1),
        "-" => Float::with_val(prec, -1),
        other => real(other)?,
    };
    Ok(HPComplex::new(re, im))
}
