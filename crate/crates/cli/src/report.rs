//! CSV rows and the machine-readable failure report.

use std::io::Write;

use serde::Serialize;

/// One verified quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub command: &'static str,
    pub check: String,
    /// `key=value` pairs separated by `;`.
    pub inputs: String,
    pub estimate: f64,
    /// Standard error for Monte Carlo estimates, empty for deterministic ones.
    pub error_bar: Option<f64>,
    /// The estimate is a deterministic computation.
    pub exact: bool,
    pub oracle: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Row {
    pub fn exact(
        command: &'static str,
        check: &str,
        inputs: String,
        estimate: f64,
        oracle: f64,
        tolerance: f64,
        pass: bool,
    ) -> Self {
        Self {
            command,
            check: check.to_string(),
            inputs,
            estimate,
            error_bar: None,
            exact: true,
            oracle,
            tolerance,
            pass,
        }
    }

    pub fn monte_carlo(
        command: &'static str,
        check: &str,
        inputs: String,
        estimate: f64,
        se: f64,
        oracle: f64,
        tolerance: f64,
        pass: bool,
    ) -> Self {
        Self {
            command,
            check: check.to_string(),
            inputs,
            estimate,
            error_bar: Some(se),
            exact: false,
            oracle,
            tolerance,
            pass,
        }
    }

    /// Relative agreement `|estimate - oracle| ≤ tol·|oracle|`.
    pub fn relative(
        command: &'static str,
        check: &str,
        inputs: String,
        estimate: f64,
        oracle: f64,
        tol: f64,
    ) -> Self {
        let pass = (estimate - oracle).abs() <= tol * oracle.abs();
        Self::exact(command, check, inputs, estimate, oracle, tol, pass)
    }

    /// Count of violations; passes only at zero.
    pub fn count(command: &'static str, check: &str, inputs: String, failures: usize) -> Self {
        Self::exact(
            command,
            check,
            inputs,
            failures as f64,
            0.0,
            0.0,
            failures == 0,
        )
    }
}

/// `inputs` column from `(key, value)` pairs.
pub fn inputs<V: std::fmt::Display>(pairs: &[(&str, V)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "command",
            "check",
            "inputs",
            "estimate",
            "error_bar",
            "exact",
            "oracle",
            "tolerance",
            "pass",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct FailureReport<'a> {
    pub status: &'static str,
    pub command: &'a str,
    pub failures: Vec<&'a Row>,
}
