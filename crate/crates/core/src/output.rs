//! Curve CSVs, metrics JSON and the manifest that ties them together.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading a
//! file back gives the in-memory values bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticReport, MobilityMetrics};
use crate::error::{Error, Result};
use crate::model::{CurveKind, DistributionCurve, Provenance};
use crate::scenario::Scenario;
use crate::sim::{Estimate, SimSummary};

pub fn curve_csv(curve: &DistributionCurve) -> String {
    let mut out = String::new();
    match &curve.stderr {
        Some(se) => {
            out.push_str("T,value,stderr\n");
            for ((t, v), s) in curve.abscissae.iter().zip(&curve.values).zip(se) {
                let _ = writeln!(out, "{t},{v},{s}");
            }
        }
        None => {
            out.push_str("T,value\n");
            for (t, v) in curve.abscissae.iter().zip(&curve.values) {
                let _ = writeln!(out, "{t},{v}");
            }
        }
    }
    out
}

pub fn parse_curve_csv(text: &str, kind: CurveKind, provenance: Provenance) -> Result<DistributionCurve> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Scenario("empty curve file".into()))?;
    let columns = match header {
        "T,value" => 2,
        "T,value,stderr" => 3,
        other => return Err(Error::Scenario(format!("unexpected curve header {other:?}"))),
    };
    let (mut t, mut v, mut s) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(Error::Scenario(format!("row {} has {} fields", i + 1, fields.len())));
        }
        let num = |f: &str| {
            f.parse::<f64>()
                .map_err(|_| Error::Scenario(format!("row {}: bad number {f:?}", i + 1)))
        };
        t.push(num(fields[0])?);
        v.push(num(fields[1])?);
        if columns == 3 {
            s.push(num(fields[2])?);
        }
    }
    let curve = DistributionCurve::new(t, v, kind, provenance)?;
    if columns == 3 {
        curve.with_stderr(s)
    } else {
        Ok(curve)
    }
}

pub fn read_curve_csv(path: &Path, kind: CurveKind, provenance: Provenance) -> Result<DistributionCurve> {
    parse_curve_csv(&fs::read_to_string(path)?, kind, provenance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub intensity: String,
    pub distance: String,
    pub time: String,
    pub velocity: String,
    pub rate: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            intensity: "1/m^2".into(),
            distance: "m".into(),
            time: "s".into(),
            velocity: "m/s".into(),
            rate: "1/s".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub file: String,
    /// `initial_sojourn_ccdf`, `sojourn_ccdf`, `stay_probability` or `metrics`.
    pub quantity: String,
    /// 1-based tier; absent for curves over all tiers and for metrics.
    pub tier: Option<usize>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub units: Units,
    pub scenario: Scenario,
    pub seed: Option<u64>,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMetricsFile {
    pub metrics: MobilityMetrics,
    pub numeric_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetricsFile {
    pub seed: u64,
    pub replications: usize,
    pub horizon: f64,
    pub handoff_rate: Vec<Estimate>,
    pub pair_rate: Vec<Vec<Estimate>>,
    pub total_handoff_rate: Estimate,
    pub time_fraction: Vec<Estimate>,
    pub mean_sojourn: Vec<Estimate>,
    pub mean_sojourn_unconditional: Estimate,
    pub initial_counts: Vec<usize>,
    pub sojourn_counts: Vec<usize>,
    pub refinements: u64,
    pub warnings: Vec<String>,
}

impl From<&SimSummary> for SimMetricsFile {
    fn from(s: &SimSummary) -> Self {
        Self {
            seed: s.seed,
            replications: s.replications,
            horizon: s.horizon,
            handoff_rate: s.handoff_rate.clone(),
            pair_rate: s.pair_rate.clone(),
            total_handoff_rate: s.total_handoff_rate,
            time_fraction: s.time_fraction.clone(),
            mean_sojourn: s.mean_sojourn.clone(),
            mean_sojourn_unconditional: s.mean_sojourn_unconditional,
            initial_counts: s.initial_counts.clone(),
            sojourn_counts: s.sojourn_counts.clone(),
            refinements: s.refinements,
            warnings: s.warnings.clone(),
        }
    }
}

fn put_curve(
    dir: &Path,
    files: &mut Vec<FileEntry>,
    name: String,
    quantity: &str,
    tier: Option<usize>,
    curve: &DistributionCurve,
) -> Result<()> {
    fs::write(dir.join(&name), curve_csv(curve))?;
    files.push(FileEntry {
        file: name,
        quantity: quantity.into(),
        tier,
        provenance: curve.provenance,
    });
    Ok(())
}

fn put_json<T: Serialize>(dir: &Path, files: &mut Vec<FileEntry>, name: &str, provenance: Provenance, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    files.push(FileEntry {
        file: name.into(),
        quantity: "metrics".into(),
        tier: None,
        provenance,
    });
    Ok(())
}

pub fn write_analytic(dir: &Path, report: &AnalyticReport) -> Result<Vec<FileEntry>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (k, c) in report.initial.iter().enumerate() {
        put_curve(dir, &mut files, format!("analytic_initial_tier{}.csv", k + 1), "initial_sojourn_ccdf", Some(k + 1), c)?;
    }
    for (k, c) in report.sojourn.iter().enumerate() {
        put_curve(dir, &mut files, format!("analytic_sojourn_tier{}.csv", k + 1), "sojourn_ccdf", Some(k + 1), c)?;
    }
    put_curve(dir, &mut files, "analytic_sojourn_all.csv".into(), "sojourn_ccdf", None, &report.unconditional)?;
    let metrics = AnalyticMetricsFile {
        metrics: report.metrics.clone(),
        numeric_fallbacks: report.numeric_fallbacks,
    };
    put_json(dir, &mut files, "analytic_metrics.json", Provenance::Analytic, &metrics)?;
    Ok(files)
}

/// Tiers without enough samples for a curve get no curve file.
pub fn write_simulation(dir: &Path, summary: &SimSummary) -> Result<Vec<FileEntry>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let groups = [
        ("initial", "initial_sojourn_ccdf", &summary.initial),
        ("sojourn", "sojourn_ccdf", &summary.sojourn),
        ("stay", "stay_probability", &summary.stay),
    ];
    for (stem, quantity, curves) in groups {
        for (k, c) in curves.iter().enumerate() {
            if let Some(c) = c {
                put_curve(dir, &mut files, format!("sim_{stem}_tier{}.csv", k + 1), quantity, Some(k + 1), c)?;
            }
        }
    }
    if let Some(c) = &summary.pooled {
        put_curve(dir, &mut files, "sim_sojourn_all.csv".into(), "sojourn_ccdf", None, c)?;
    }
    put_json(dir, &mut files, "sim_metrics.json", Provenance::Empirical, &SimMetricsFile::from(summary))?;
    Ok(files)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    write_json(&dir.join("manifest.json"), manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let t = vec![0.0, 7.25e-5, 0.1, 1.0 / 3.0, 123.456789012345];
        let v = vec![1.0, 0.9999999999999999, 0.3, 1e-17, 0.0];
        let s = vec![0.0, 1e-3, 2.0f64.sqrt() / 100.0, 5e-9, 0.0];
        let c = DistributionCurve::new(t, v, CurveKind::Ccdf, Provenance::Empirical)
            .unwrap()
            .with_stderr(s)
            .unwrap();
        let text = curve_csv(&c);
        assert!(text.starts_with("T,value,stderr\n"));
        assert!(!text.contains('\r'));
        let back = parse_curve_csv(&text, CurveKind::Ccdf, Provenance::Empirical).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn header_without_stderr() {
        let c = DistributionCurve::new(vec![1.0, 2.0], vec![0.5, 0.25], CurveKind::Ccdf, Provenance::Analytic).unwrap();
        let text = curve_csv(&c);
        assert_eq!(text, "T,value\n1,0.5\n2,0.25\n");
        assert_eq!(parse_curve_csv(&text, CurveKind::Ccdf, Provenance::Analytic).unwrap(), c);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_curve_csv("t,v\n", CurveKind::Ccdf, Provenance::Analytic).is_err());
        assert!(parse_curve_csv("T,value\n1,2,3\n", CurveKind::Ccdf, Provenance::Analytic).is_err());
        assert!(parse_curve_csv("T,value\n1,x\n", CurveKind::Ccdf, Provenance::Analytic).is_err());
    }
}
