//! Per-epoch metrics as CSV and JSON.

use g2l_core::trainer::{EpochMetrics, MetricsReport};
use serde::Serialize;

use crate::error::Result;

pub const METRICS_HEADER: [&str; 10] = [
    "epoch",
    "l_total",
    "l_vg",
    "l_cl",
    "l_ssi",
    "alignment",
    "uniformity",
    "r1",
    "r5",
    "seconds",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_total: f64,
    pub l_vg: f64,
    pub l_cl: f64,
    pub l_ssi: f64,
    pub alignment: f64,
    pub uniformity: f64,
    pub r1: f64,
    pub r5: f64,
    pub seconds: f64,
}

impl From<&EpochMetrics> for EpochRecord {
    fn from(m: &EpochMetrics) -> Self {
        EpochRecord {
            epoch: m.epoch,
            l_total: m.l_total,
            l_vg: m.l_vg,
            l_cl: m.l_cl,
            l_ssi: m.l_ssi,
            alignment: m.alignment,
            uniformity: m.uniformity,
            r1: m.r1,
            r5: m.r5,
            seconds: m.seconds,
        }
    }
}

pub fn metrics_csv(report: &MetricsReport) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(METRICS_HEADER)?;
    for m in &report.epochs {
        w.serialize(EpochRecord::from(m))?;
    }
    w.into_inner().map_err(|e| crate::Error::Data(e.to_string()))
}

pub fn metrics_json(report: &MetricsReport) -> Result<Vec<u8>> {
    let records: Vec<EpochRecord> = report.epochs.iter().map(EpochRecord::from).collect();
    let mut out = serde_json::to_vec_pretty(&serde_json::json!({ "epochs": records }))?;
    out.push(b'\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_header_and_one_row_per_epoch() {
        let m = EpochMetrics {
            epoch: 1,
            l_total: 1.5,
            l_vg: 0.5,
            l_cl: 1.0,
            l_ssi: 0.0,
            alignment: 0.25,
            uniformity: -2.0,
            r1: 0.5,
            r5: 1.0,
            seconds: 0.0,
        };
        let report = MetricsReport { epochs: vec![m, m] };
        let text = String::from_utf8(metrics_csv(&report).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], METRICS_HEADER.join(","));
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "1,1.5,0.5,1.0,0.0,0.25,-2.0,0.5,1.0,0.0");
        let json: serde_json::Value = serde_json::from_slice(&metrics_json(&report).unwrap()).unwrap();
        assert_eq!(json["epochs"].as_array().unwrap().len(), 2);
    }
}
