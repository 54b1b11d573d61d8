//! Result rows, their CSV form and the JSON summary.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;
use stablekern::RateFit;

/// Threshold a metric is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Check {
    AtMost(f64),
    AtLeast(f64),
    Within { target: f64, tol: f64 },
    /// Passes when the value is finite.
    Finite,
}

impl Check {
    pub fn passes(&self, v: f64) -> bool {
        match *self {
            Check::AtMost(t) => v <= t,
            Check::AtLeast(t) => v >= t,
            Check::Within { target, tol } => (v - target).abs() <= tol,
            Check::Finite => v.is_finite(),
        }
    }

    fn describe(&self) -> String {
        match *self {
            Check::AtMost(t) => format!("<= {t:e}"),
            Check::AtLeast(t) => format!(">= {t}"),
            Check::Within { target, tol } => format!("{target} +- {tol}"),
            Check::Finite => "finite".into(),
        }
    }
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    /// `key=value` pairs joined by `;`.
    pub params: String,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub threshold: Option<String>,
    pub pass: Option<bool>,
}

/// Everything a command produced.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub experiment: String,
    pub rows: Vec<ResultRow>,
    pub fits: BTreeMap<String, RateFit>,
}

impl Report {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            ..Default::default()
        }
    }

    pub fn info(&mut self, params: impl Into<String>, metric: &str, value: f64) {
        self.push(params.into(), metric, value, None, None);
    }

    pub fn info_err(&mut self, params: impl Into<String>, metric: &str, value: f64, stderr: f64) {
        self.push(params.into(), metric, value, Some(stderr), None);
    }

    /// Records a checked metric and returns whether it passed.
    pub fn check(&mut self, params: impl Into<String>, metric: &str, value: f64, check: Check) -> bool {
        self.push(params.into(), metric, value, None, Some(check))
    }

    pub fn check_err(&mut self, params: impl Into<String>, metric: &str, value: f64, stderr: f64, check: Check) -> bool {
        self.push(params.into(), metric, value, Some(stderr), Some(check))
    }

    fn push(&mut self, params: String, metric: &str, value: f64, stderr: Option<f64>, check: Option<Check>) -> bool {
        let pass = check.map(|c| c.passes(value));
        self.rows.push(ResultRow {
            experiment: self.experiment.clone(),
            params,
            metric: metric.to_string(),
            value,
            stderr,
            threshold: check.map(|c| c.describe()),
            pass,
        });
        pass.unwrap_or(true)
    }

    pub fn fit(&mut self, name: &str, fit: RateFit) {
        self.fits.insert(name.to_string(), fit);
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn failures(&self) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.pass == Some(false)).collect()
    }

    /// Value of the first row with this metric name.
    pub fn value(&self, metric: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.metric == metric).map(|r| r.value)
    }

    /// Rows with this metric name.
    pub fn rows_named<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "experiment,params,metric,value,stderr,threshold,pass")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{:e},{},{},{}",
                r.experiment,
                r.params,
                r.metric,
                r.value,
                r.stderr.map(|s| format!("{s:e}")).unwrap_or_default(),
                r.threshold.as_deref().unwrap_or(""),
                r.pass.map(|p| p.to_string()).unwrap_or_default(),
            )?;
        }
        Ok(())
    }
}

/// `alpha=1.9;t=1` style parameter strings.
pub fn params(pairs: &[(&str, f64)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_and_csv() {
        let mut r = Report::new("demo");
        assert!(r.check(params(&[("alpha", 1.5)]), "err", 1e-9, Check::AtMost(1e-8)));
        assert!(!r.check("", "slope", 0.7, Check::Within { target: 1.0, tol: 0.05 }));
        r.info("", "note", 3.0);
        assert!(!r.passed());
        assert_eq!(r.failures().len(), 1);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "experiment,params,metric,value,stderr,threshold,pass");
        assert_eq!(lines[1], "demo,alpha=1.5,err,1e-9,,<= 1e-8,true");
        assert_eq!(lines[3], "demo,,note,3e0,,,");
    }
}
