use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nearhom_core::averaging::ConvergenceTrace;
use nearhom_core::testkit::OrderFit;
use serde::Serialize;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct OutDir {
    root: PathBuf,
    pub timings: bool,
}

impl OutDir {
    pub fn create(root: &Path, timings: bool) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            timings,
        })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn wall_ms(&self, ms: f64) -> f64 {
        if self.timings {
            ms
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRowOut {
    pub iter: usize,
    pub defect_sup: f64,
    pub defect_p95: f64,
    pub step_norm: Option<f64>,
    pub wall_ms: f64,
}

pub fn trace_rows(trace: &ConvergenceTrace, out: &OutDir) -> Vec<TraceRowOut> {
    trace
        .rows
        .iter()
        .map(|r| TraceRowOut {
            iter: r.iter,
            defect_sup: r.defect.sup,
            defect_p95: r.defect.p95,
            step_norm: r.step_norm,
            wall_ms: out.wall_ms(r.wall_ms),
        })
        .collect()
}

pub fn trace_csv(rows: &[TraceRowOut]) -> String {
    let mut s = String::from("iter,defect_sup,defect_p95,step_norm,wall_ms\n");
    for r in rows {
        let step = r.step_norm.map(num).unwrap_or_default();
        writeln!(s, "{},{},{},{},{}", r.iter, num(r.defect_sup), num(r.defect_p95), step, num(r.wall_ms)).unwrap();
    }
    s
}

pub fn defect_dat(rows: &[TraceRowOut]) -> String {
    let mut s = String::from("# iter defect_sup\n");
    for r in rows {
        writeln!(s, "{} {}", r.iter, num(r.defect_sup)).unwrap();
    }
    s
}

/// `log Δₙ`, `log Δₙ₊₁` and the fitted line over the fit range.
pub fn order_dat(defects: &[f64], fit: &OrderFit) -> String {
    let (a, b) = fit.range;
    let logs: Vec<f64> = defects[a..=b].iter().map(|d| d.ln()).collect();
    let xs = &logs[..logs.len() - 1];
    let ys = &logs[1..];
    let m = xs.len() as f64;
    let intercept = (ys.iter().sum::<f64>() - fit.order * xs.iter().sum::<f64>()) / m;
    let mut s = String::from("# log_defect_n log_defect_next fitted_next\n");
    for (x, y) in xs.iter().zip(ys) {
        writeln!(s, "{} {} {}", num(*x), num(*y), num(intercept + fit.order * x)).unwrap();
    }
    s
}
