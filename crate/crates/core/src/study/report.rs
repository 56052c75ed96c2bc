//! CSV and JSON renderings of study results.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{Method, TrialResult};

pub const CSV_HEADER: &str = "method,spec_id,rep,amari,amari_x100,elapsed_ms,converged";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fixed9(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.9}")
    } else {
        "NaN".to_string()
    }
}

/// One row per trial. With `timing == false` the `elapsed_ms` column is `0`
/// so that identical seeds give byte-identical files.
pub fn trials_csv(results: &[TrialResult], timing: bool) -> String {
    let mut out = String::with_capacity(64 * (results.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in results {
        let elapsed = if timing {
            format!("{:.3}", r.elapsed.as_secs_f64() * 1e3)
        } else {
            "0".to_string()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method,
            csv_field(&r.spec_id),
            r.rep,
            fixed9(r.amari),
            fixed9(r.amari_x100()),
            elapsed,
            r.converged
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub spec_id: String,
    pub trials: usize,
    pub failed: usize,
    pub converged: usize,
    pub amari_mean: f64,
    pub amari_sd: f64,
    pub amari_x100_mean: f64,
    pub amari_x100_sd: f64,
    pub elapsed_ms_mean: f64,
    pub elapsed_ms_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub groups: Vec<MethodSummary>,
}

impl StudySummary {
    pub fn get(&self, method: Method, spec_id: &str) -> Option<&MethodSummary> {
        self.groups.iter().find(|g| g.method == method && g.spec_id == spec_id)
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean and sample standard deviation per `(method, spec)`, in first-seen order.
/// Failed trials are counted but excluded from the statistics.
pub fn summarize(results: &[TrialResult]) -> StudySummary {
    let mut keys: Vec<(String, Method)> = Vec::new();
    for r in results {
        if !keys.iter().any(|(s, m)| s == &r.spec_id && *m == r.method) {
            keys.push((r.spec_id.clone(), r.method));
        }
    }
    let groups = keys
        .into_iter()
        .map(|(spec_id, method)| {
            let rows: Vec<&TrialResult> = results
                .iter()
                .filter(|r| r.spec_id == spec_id && r.method == method)
                .collect();
            let ok: Vec<&&TrialResult> = rows.iter().filter(|r| !r.failed()).collect();
            let amari: Vec<f64> = ok.iter().map(|r| r.amari).collect();
            let elapsed: Vec<f64> = ok.iter().map(|r| r.elapsed.as_secs_f64() * 1e3).collect();
            let (amari_mean, amari_sd) = mean_sd(&amari);
            let (elapsed_ms_mean, elapsed_ms_sd) = mean_sd(&elapsed);
            MethodSummary {
                method,
                spec_id,
                trials: rows.len(),
                failed: rows.len() - ok.len(),
                converged: ok.iter().filter(|r| r.converged).count(),
                amari_mean,
                amari_sd,
                amari_x100_mean: 100.0 * amari_mean,
                amari_x100_sd: 100.0 * amari_sd,
                elapsed_ms_mean,
                elapsed_ms_sd,
            }
        })
        .collect();
    StudySummary { groups }
}

/// Plain-text table of mean Amari × 100 (rows: distributions, columns: methods).
pub fn summary_table(summary: &StudySummary) -> String {
    let mut specs: Vec<&str> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for g in &summary.groups {
        if !specs.contains(&g.spec_id.as_str()) {
            specs.push(&g.spec_id);
        }
        if !methods.contains(&g.method) {
            methods.push(g.method);
        }
    }
    let width = specs.iter().map(|s| s.len()).max().unwrap_or(0).max(12);
    let mut out = String::new();
    write!(out, "{:<width$}", "amari x100").unwrap();
    for m in &methods {
        write!(out, " {:>12}", m.name()).unwrap();
    }
    out.push('\n');
    for s in &specs {
        write!(out, "{s:<width$}").unwrap();
        for m in &methods {
            match summary.get(*m, s) {
                Some(g) => write!(out, " {:>12.2}", g.amari_x100_mean).unwrap(),
                None => write!(out, " {:>12}", "-").unwrap(),
            }
        }
        out.push('\n');
    }
    out
}
