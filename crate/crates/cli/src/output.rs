use serde::Serialize;
use serde_json::Value;

use seifert_wrt::VerificationReport;

use crate::config::{Format, RunConfig};

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn from_checks(checks: &[VerificationReport]) -> Self {
        let mut t = Table::new(&["report", "claim", "params", "lhs", "rhs", "residual", "tolerance", "pass"]);
        for report in checks {
            for row in &report.rows {
                let params: Vec<String> = row.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                t.push(vec![
                    report.claim.clone(),
                    row.claim.clone(),
                    params.join(";"),
                    row.lhs.clone(),
                    row.rhs.clone(),
                    format!("{:e}", row.residual),
                    format!("{:e}", row.tolerance),
                    row.pass.to_string(),
                ]);
            }
        }
        t
    }

    fn to_csv(&self) -> Result<Vec<u8>, String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| e.to_string())?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| e.to_string())?;
        }
        w.into_inner().map_err(|e| e.to_string())
    }
}

#[derive(Serialize)]
struct Document<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    pass: bool,
    result: &'a Value,
    checks: &'a [VerificationReport],
}

/// Renders a finished run. CSV output carries the resolved config and version as
/// leading `#` comment lines.
pub fn render(
    command: &str,
    cfg: &RunConfig,
    pass: bool,
    result: &Value,
    checks: &[VerificationReport],
    table: Option<Table>,
) -> Result<Vec<u8>, String> {
    match cfg.format {
        Format::Json => {
            let doc = Document { tool: "seifert-wrt", version: seifert_wrt::VERSION, command, config: cfg, pass, result, checks };
            let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| e.to_string())?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv => {
            let table = table.unwrap_or_else(|| Table::from_checks(checks));
            let config = serde_json::to_string(cfg).map_err(|e| e.to_string())?;
            let mut bytes = format!(
                "# seifert-wrt {} {command}\n# config {config}\n# pass {pass}\n",
                seifert_wrt::VERSION
            )
            .into_bytes();
            bytes.extend(table.to_csv()?);
            Ok(bytes)
        }
    }
}
