use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EvalError, EvalReport, SweepAxis};
use crate::threshold::ThresholdScheme;

/// One row per (route, axis value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub axis: SweepAxis,
    pub length_min: f64,
    pub n_instances: usize,
    pub alpha: f64,
    pub scheme: ThresholdScheme,
    pub route: usize,
    pub far: f64,
    pub frr: f64,
    pub false_accepts: usize,
    pub impostor_trials: usize,
    pub false_rejects: usize,
    pub genuine_trials: usize,
}

/// One row per axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub axis: SweepAxis,
    pub length_min: f64,
    pub n_instances: usize,
    pub alpha: f64,
    pub scheme: ThresholdScheme,
    pub mean_far: f64,
    pub std_far: f64,
    pub mean_frr: f64,
    pub std_frr: f64,
    pub median_far: f64,
    pub median_frr: f64,
    pub pooled_far: f64,
    pub pooled_frr: f64,
    pub eer: f64,
}

const ROW_HEADER: [&str; 12] = [
    "axis",
    "length_min",
    "n_instances",
    "alpha",
    "scheme",
    "route",
    "far",
    "frr",
    "false_accepts",
    "impostor_trials",
    "false_rejects",
    "genuine_trials",
];

const SUMMARY_HEADER: [&str; 14] = [
    "axis",
    "length_min",
    "n_instances",
    "alpha",
    "scheme",
    "mean_far",
    "std_far",
    "mean_frr",
    "std_frr",
    "median_far",
    "median_frr",
    "pooled_far",
    "pooled_frr",
    "eer",
];

/// `report.csv` -> `report_summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}_summary.{ext}"))
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<std::fs::File>, EvalError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

/// Write per-route rows to `path` and the per-value summary next to it.
/// Returns the summary path.
pub fn emit_report(reports: &[EvalReport], path: &Path) -> Result<PathBuf, EvalError> {
    let mut rows = writer(path, &ROW_HEADER)?;
    let spath = summary_path(path);
    let mut summary = writer(&spath, &SUMMARY_HEADER)?;
    for r in reports {
        for rr in &r.routes {
            rows.serialize(ReportRow {
                axis: r.axis,
                length_min: r.length_min,
                n_instances: r.n_instances,
                alpha: r.alpha,
                scheme: r.scheme,
                route: rr.route,
                far: rr.far(),
                frr: rr.frr(),
                false_accepts: rr.false_accepts,
                impostor_trials: rr.impostor_trials,
                false_rejects: rr.false_rejects,
                genuine_trials: rr.genuine_trials,
            })?;
        }
        let s = &r.summary;
        summary.serialize(SummaryRow {
            axis: r.axis,
            length_min: r.length_min,
            n_instances: r.n_instances,
            alpha: r.alpha,
            scheme: r.scheme,
            mean_far: s.mean_far,
            std_far: s.std_far,
            mean_frr: s.mean_frr,
            std_frr: s.std_frr,
            median_far: s.median_far,
            median_frr: s.median_frr,
            pooled_far: r.pooled_far,
            pooled_frr: r.pooled_frr,
            eer: r.eer,
        })?;
    }
    rows.flush()?;
    summary.flush()?;
    Ok(spath)
}

pub fn read_rows(path: &Path) -> Result<Vec<ReportRow>, EvalError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, EvalError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{RouteRates, Summary};

    fn report() -> EvalReport {
        let routes = vec![
            RouteRates { route: 0, false_accepts: 1, impostor_trials: 10, false_rejects: 0, genuine_trials: 4 },
            RouteRates { route: 1, false_accepts: 0, impostor_trials: 10, false_rejects: 1, genuine_trials: 4 },
        ];
        EvalReport::new(SweepAxis::Length, 2.0, 1, 0.5, ThresholdScheme::Initial, routes, 0.1)
    }

    #[test]
    fn empty_report_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let s = emit_report(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), ROW_HEADER.join(",") + "\n");
        assert_eq!(std::fs::read_to_string(&s).unwrap(), SUMMARY_HEADER.join(",") + "\n");
        assert!(read_rows(&p).unwrap().is_empty());
    }

    #[test]
    fn rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let r = report();
        let s = emit_report(&[r.clone()], &p).unwrap();
        assert_eq!(s, dir.path().join("r_summary.csv"));
        let rows = read_rows(&p).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].far, 0.1);
        assert_eq!(rows[1].frr, 0.25);
        assert_eq!(rows[1].scheme, ThresholdScheme::Initial);
        let sum = read_summary(&s).unwrap();
        assert_eq!(sum.len(), 1);
        assert_eq!(sum[0].mean_far, r.summary.mean_far);
        assert_eq!(sum[0].pooled_far, 0.05);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.lines().all(|l| l.split(',').count() == ROW_HEADER.len()));
        let Summary { median_frr, .. } = r.summary;
        assert_eq!(median_frr, 0.125);
    }
}
