//! Tables of flow moments against their bounds.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::MomentRow;

/// Standard errors allowed above a bound before a row is flagged.
pub const SE_TOLERANCE: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub level: u32,
    pub alpha: f64,
    pub mc_moment: f64,
    pub mc_se: f64,
    pub bound_phase1: Option<f64>,
    pub bound_combined: Option<f64>,
    pub bound_log: Option<f64>,
    pub m0: Option<u32>,
    pub m1: Option<u32>,
    #[serde(default)]
    pub mc_log: Option<f64>,
    #[serde(default)]
    pub mc_log_se: Option<f64>,
}

impl From<&MomentRow> for ReportRow {
    fn from(r: &MomentRow) -> Self {
        ReportRow {
            level: r.level,
            alpha: r.alpha,
            mc_moment: r.mc_moment,
            mc_se: r.mc_se,
            bound_phase1: r.bound_phase1,
            bound_combined: r.bound_combined,
            bound_log: r.bound_log,
            m0: r.m0,
            m1: r.m1,
            mc_log: Some(r.mc_log),
            mc_log_se: Some(r.mc_log_se),
        }
    }
}

impl ReportRow {
    /// Names of the bounds this row exceeds by more than [`SE_TOLERANCE`] SEs.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let lim = self.mc_moment - SE_TOLERANCE * self.mc_se;
        if self.bound_phase1.is_some_and(|b| lim > b) {
            v.push("phase1");
        }
        if self.bound_combined.is_some_and(|b| lim > b) {
            v.push("combined");
        }
        if let (Some(b), Some(m), Some(se)) = (self.bound_log, self.mc_log, self.mc_log_se) {
            if m - SE_TOLERANCE * se > b {
                v.push("log");
            }
        }
        v
    }
}

/// Parses a moments CSV. An empty input yields no rows.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    if rdr.headers()?.is_empty() {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        let row: ReportRow = rec?;
        if !(row.mc_moment.is_finite() && row.mc_se >= 0.0) {
            return Err(Error::Parse(format!("bad moment row at level {}", row.level)));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.6e}"))
}

fn cell_u(x: Option<u32>) -> String {
    x.map_or_else(|| "-".into(), |v| v.to_string())
}

/// Markdown table; returns the table and the number of flagged rows.
pub fn markdown(rows: &[ReportRow]) -> (String, usize) {
    let mut s = String::from(
        "| level | alpha | mc_moment | mc_se | bound_phase1 | bound_combined | mc_log | bound_log | m0 | m1 | status |\n\
         |---|---|---|---|---|---|---|---|---|---|---|\n",
    );
    let mut flagged = 0;
    for r in rows {
        let v = r.violations();
        let status = if v.is_empty() {
            "ok".to_string()
        } else {
            flagged += 1;
            format!("VIOLATION ({})", v.join(", "))
        };
        s.push_str(&format!(
            "| {} | {} | {:.6e} | {:.2e} | {} | {} | {} | {} | {} | {} | {} |\n",
            r.level,
            r.alpha,
            r.mc_moment,
            r.mc_se,
            cell(r.bound_phase1),
            cell(r.bound_combined),
            cell(r.mc_log),
            cell(r.bound_log),
            cell_u(r.m0),
            cell_u(r.m1),
            status
        ));
    }
    (s, flagged)
}

/// Whitespace-separated columns for plotting; missing values as `NaN`.
pub fn plot_columns(rows: &[ReportRow]) -> String {
    let f = |x: Option<f64>| x.map_or_else(|| "NaN".into(), |v| format!("{v:.9e}"));
    let mut s = String::from("# level alpha mc_moment mc_se bound_phase1 bound_combined mc_log bound_log flagged\n");
    for r in rows {
        s.push_str(&format!(
            "{} {} {:.9e} {:.9e} {} {} {} {} {}\n",
            r.level,
            r.alpha,
            r.mc_moment,
            r.mc_se,
            f(r.bound_phase1),
            f(r.bound_combined),
            f(r.mc_log),
            f(r.bound_log),
            u8::from(!r.violations().is_empty())
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "level,alpha,mc_moment,mc_se,bound_phase1,bound_combined,bound_log,m0,m1\n";

    #[test]
    fn empty_input_gives_empty_table() {
        let rows = read_rows("".as_bytes()).unwrap();
        assert!(rows.is_empty());
        let rows = read_rows(HEADER.as_bytes()).unwrap();
        let (table, flagged) = markdown(&rows);
        assert_eq!(flagged, 0);
        assert_eq!(table.lines().count(), 2);
    }

    #[test]
    fn violation_is_flagged() {
        let csv = format!("{HEADER}2,0.25,0.9,0.01,0.8,,,,\n1,0.25,0.5,0.01,0.8,0.9,,1,\n");
        let rows = read_rows(csv.as_bytes()).unwrap();
        assert_eq!(rows[0].violations(), vec!["phase1"]);
        assert!(rows[1].violations().is_empty());
        let (table, flagged) = markdown(&rows);
        assert_eq!(flagged, 1);
        assert!(table.contains("VIOLATION (phase1)"));
        assert!(plot_columns(&rows).lines().nth(1).unwrap().ends_with(" 1"));
    }

    #[test]
    fn malformed_input_errors() {
        assert!(read_rows("level,alpha\nx,y\n".as_bytes()).is_err());
        assert!(read_rows(format!("{HEADER}1,0.25,abc,0.1,,,,,\n").as_bytes()).is_err());
    }
}
