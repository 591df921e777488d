//! CSV and JSON emission of experiment reports.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "sweep_param",
    "sweep_value",
    "kind",
    "value",
    "ci_lo",
    "ci_hi",
    "trials",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    AnalyticCdf,
    AsymptoticCdf,
    EmpiricalCdf,
    AvgSe,
    AvgSeMc,
    EffectiveSe,
    EffectiveSeNoLris,
    MinSnr,
    JensenBound,
}

impl RowKind {
    pub fn name(self) -> &'static str {
        match self {
            RowKind::AnalyticCdf => "analytic_cdf",
            RowKind::AsymptoticCdf => "asymptotic_cdf",
            RowKind::EmpiricalCdf => "empirical_cdf",
            RowKind::AvgSe => "avg_se",
            RowKind::AvgSeMc => "avg_se_mc",
            RowKind::EffectiveSe => "effective_se",
            RowKind::EffectiveSeNoLris => "effective_se_no_lris",
            RowKind::MinSnr => "min_snr",
            RowKind::JensenBound => "jensen_bound",
        }
    }
}

/// One emitted number. CDF rows carry their SNR threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub kind: RowKind,
    pub threshold: Option<f64>,
    pub value: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    /// 0 for analytic values.
    pub trials: usize,
    pub seed: u64,
}

impl Row {
    pub fn analytic(kind: RowKind, threshold: Option<f64>, value: f64, seed: u64) -> Row {
        Row { kind, threshold, value, ci_lo: None, ci_hi: None, trials: 0, seed }
    }

    pub fn empirical(
        kind: RowKind,
        threshold: Option<f64>,
        value: f64,
        ci: (f64, f64),
        trials: usize,
        seed: u64,
    ) -> Row {
        Row {
            kind,
            threshold,
            value,
            ci_lo: Some(ci.0),
            ci_hi: Some(ci.1),
            trials,
            seed,
        }
    }

    /// `kind`, or `kind@threshold` for CDF rows.
    pub fn label(&self) -> String {
        match self.threshold {
            Some(x) => format!("{}@{x}", self.kind.name()),
            None => self.kind.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub sweep_value: f64,
    pub rows: Vec<Row>,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes `sweep_param`-labelled rows as CSV with LF line endings.
pub fn write_rows_csv<W: Write>(sweep_param: &str, records: &[PointRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for rec in records {
        for row in &rec.rows {
            w.write_record([
                sweep_param.to_string(),
                rec.sweep_value.to_string(),
                row.label(),
                row.value.to_string(),
                opt(row.ci_lo),
                opt(row.ci_hi),
                row.trials.to_string(),
                row.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_report<W: Write>(report: &ExperimentReport, format: Format, mut out: W) -> Result<()> {
    match format {
        Format::Csv => write_rows_csv(report.spec.sweep.param.name(), &report.records, out),
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &ExperimentReport, format: Format, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)
                .map_err(|e| Error::from(e).context(format!("creating {}", p.display())))?;
            let mut buf = std::io::BufWriter::new(file);
            write_report(report, format, &mut buf)?;
            buf.flush()?;
            Ok(())
        }
        None => write_report(report, format, std::io::stdout().lock()),
    }
}

pub fn report_from_json(text: &str) -> Result<ExperimentReport> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_experiment, ExperimentSpec, OutputKind};
    use crate::SystemConfig;

    fn small_report() -> ExperimentReport {
        let mut spec = ExperimentSpec::builtin("fig2").unwrap();
        spec.sweep.values = vec![16.0, 32.0];
        spec.trials = 200;
        spec.grid = vec![0.5, 1.0];
        run_experiment(&spec, 1).unwrap()
    }

    #[test]
    fn one_point_sweep_gives_one_row_per_output() {
        let cfg = SystemConfig::default();
        let mut spec = ExperimentSpec::single("one", &cfg, vec![OutputKind::AvgSe, OutputKind::AnalyticCdf]);
        spec.grid = vec![1.0];
        let report = run_experiment(&spec, 1).unwrap();
        let mut buf = Vec::new();
        write_report(&report, Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2, "{text}");
        assert!(text.starts_with("sweep_param,sweep_value,kind,value,ci_lo,ci_hi,trials,seed\n"));
    }

    #[test]
    fn json_round_trips() {
        let report = small_report();
        let mut buf = Vec::new();
        write_report(&report, Format::Json, &mut buf).unwrap();
        let back = report_from_json(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn csv_parses_strictly() {
        let report = small_report();
        let mut buf = Vec::new();
        write_report(&report, Format::Csv, &mut buf).unwrap();
        assert!(!buf.contains(&b'\r'));
        let mut rdr = csv::ReaderBuilder::new()
            .flexible(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_reader(buf.as_slice());
        assert_eq!(rdr.headers().unwrap(), CSV_HEADER.as_slice());
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 2 * 2 * 2);
        for r in &rows {
            let value: f64 = r[3].parse().unwrap();
            assert!((0.0..=1.0).contains(&value));
            assert_eq!(&r[7], "1");
            if r[2].starts_with("empirical_cdf") {
                assert_eq!(&r[6], "200");
                let lo: f64 = r[4].parse().unwrap();
                assert!(lo <= value);
            } else {
                assert_eq!(&r[6], "0");
                assert!(r[4].is_empty());
            }
        }
    }
}
