//! One-off phase designs with their objective traces.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::report::{write_rows_csv, Format, PointRecord, Row, RowKind};
use super::TOOL_VERSION;
use crate::channel::draw_channels;
use crate::config::SystemConfig;
use crate::error::Result;
use crate::montecarlo::CsiMode;
use crate::phasedesign::{algorithm1, algorithm2, PhaseDesignResult, DEFAULT_EPS, DEFAULT_MAX_SWEEPS};
use crate::rng::stream_rng;
use crate::stats::EquivalentStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignAlgorithm {
    /// Instantaneous CSI, on one channel draw from the seed.
    Instantaneous,
    /// Statistical CSI.
    Statistical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDesignReport {
    pub tool_version: String,
    pub seed: u64,
    pub algorithm: DesignAlgorithm,
    pub csi_mode: CsiMode,
    pub config: SystemConfig,
    pub result: PhaseDesignResult,
}

/// Runs one design. The statistical design under perfect CSI uses the
/// scatter variance in place of the estimate-error-adjusted one.
pub fn design_phases(cfg: &SystemConfig, algorithm: DesignAlgorithm, csi: CsiMode) -> Result<PhaseDesignReport> {
    cfg.validate()?;
    let result = match algorithm {
        DesignAlgorithm::Instantaneous => {
            let real = draw_channels(cfg, &mut stream_rng(cfg.seed, 0));
            algorithm1(&real, cfg, DEFAULT_EPS, DEFAULT_MAX_SWEEPS)?
        }
        DesignAlgorithm::Statistical => {
            let mut stats = EquivalentStats::at_zero_phases(cfg)?;
            if csi == CsiMode::Perfect {
                stats.delta = stats.rho;
                stats.v_noise = 1.0;
            }
            algorithm2(cfg, &stats, DEFAULT_EPS, DEFAULT_MAX_SWEEPS)?
        }
    };
    Ok(PhaseDesignReport {
        tool_version: TOOL_VERSION.to_string(),
        seed: cfg.seed,
        algorithm,
        csi_mode: csi,
        config: cfg.clone(),
        result,
    })
}

/// CSV rows are the objective trace, one per sweep.
pub fn write_design<W: Write>(report: &PhaseDesignReport, format: Format, mut out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let kind = match report.algorithm {
                DesignAlgorithm::Instantaneous => RowKind::MinSnr,
                DesignAlgorithm::Statistical => RowKind::JensenBound,
            };
            let records: Vec<PointRecord> = report
                .result
                .min_snr_trace
                .iter()
                .enumerate()
                .map(|(k, &v)| PointRecord {
                    sweep_value: k as f64,
                    rows: vec![Row::analytic(kind, None, v, report.seed)],
                    runtime_s: 0.0,
                })
                .collect();
            write_rows_csv("sweep", &records, out)
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}
