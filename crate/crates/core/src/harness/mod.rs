//! Experiments, reports and self-checks.
//!
//! An experiment is a base configuration swept along one parameter, with a
//! list of requested outputs evaluated at every sweep point. The built-in
//! experiments live as TOML files under `specs/`.

pub mod cfgfile;
pub mod design;
pub mod report;
pub mod validate;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{db_to_linear, SteeringAngles, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::{delta, sigma_hat_inv_diag, v_noise};
use crate::montecarlo::{simulate, CsiMode, PhaseMode};
use crate::stats::{
    average_se, effective_se, outage_cdf, outage_cdf_asymptotic, sigma_inv_diag, AsymptoticRegime,
    EquivalentStats,
};

pub use cfgfile::{angles_from_seed, resolve_config, ConfigOverrides};
pub use design::{design_phases, write_design, DesignAlgorithm, PhaseDesignReport};
pub use report::{emit_report, Format, PointRecord, Row, RowKind};

pub const TOOL_VERSION: &str = concat!("riszf ", env!("CARGO_PKG_VERSION"));

/// Default trial counts for empirical outage curves and SE averages.
pub const DEFAULT_OUTAGE_TRIALS: usize = 20_000;
pub const DEFAULT_SE_TRIALS: usize = 10_000;

const BUILTIN: &[(&str, &str)] = &[
    ("fig2", include_str!("../../specs/fig2.toml")),
    ("fig3", include_str!("../../specs/fig3.toml")),
    ("fig4", include_str!("../../specs/fig4.toml")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "p_dB")]
    PDb,
    L,
    #[serde(rename = "q")]
    Q,
    #[serde(rename = "kappa_dB")]
    KappaDb,
    #[serde(rename = "CT")]
    Ct,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PDb => "p_dB",
            SweepParam::L => "L",
            SweepParam::Q => "q",
            SweepParam::KappaDb => "kappa_dB",
            SweepParam::Ct => "CT",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepParam::L | SweepParam::Q | SweepParam::Ct)
    }

    pub fn apply(self, cfg: &mut SystemConfig, value: f64) {
        match self {
            SweepParam::PDb => cfg.p = db_to_linear(value),
            SweepParam::L => cfg.set_l(value as usize),
            SweepParam::Q => cfg.q = value as u32,
            SweepParam::KappaDb => *cfg = cfg.clone().with_kappa(db_to_linear(value)),
            SweepParam::Ct => cfg.coherence_time = value as u64,
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<SweepParam> {
        match s {
            "p_dB" => Ok(SweepParam::PDb),
            "L" => Ok(SweepParam::L),
            "q" => Ok(SweepParam::Q),
            "kappa_dB" => Ok(SweepParam::KappaDb),
            "CT" => Ok(SweepParam::Ct),
            other => Err(Error::Parse(format!(
                "unknown sweep parameter '{other}' (expected p_dB, L, q, kappa_dB or CT)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    AnalyticCdf,
    AsymptoticCdf,
    EmpiricalCdf,
    AvgSe,
    EffectiveSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub base: SystemConfig,
    /// Draw the steering angles from the seed instead of using `base.angles`.
    pub random_angles: bool,
    pub sweep: Sweep,
    pub phase_mode: PhaseMode,
    pub csi_mode: CsiMode,
    pub outputs: Vec<OutputKind>,
    /// Monte Carlo trials per sweep point; 0 means analytic outputs only.
    pub trials: usize,
    /// Linear SNR thresholds for the CDF outputs.
    pub grid: Vec<f64>,
    pub regime: AsymptoticRegime,
}

/// On-disk form of an experiment: unit-suffixed base keys.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    name: String,
    phase_mode: PhaseMode,
    csi_mode: CsiMode,
    outputs: Vec<OutputKind>,
    trials: usize,
    #[serde(default)]
    grid: Vec<f64>,
    #[serde(default = "default_regime")]
    regime: AsymptoticRegime,
    sweep: Sweep,
    #[serde(default)]
    base: ConfigOverrides,
}

fn default_regime() -> AsymptoticRegime {
    AsymptoticRegime::General
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<ExperimentSpec> {
        let file: SpecFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let (base, random_angles) = file.base.apply(&SystemConfig::default())?;
        Ok(ExperimentSpec {
            name: file.name,
            base,
            random_angles,
            sweep: file.sweep,
            phase_mode: file.phase_mode,
            csi_mode: file.csi_mode,
            outputs: file.outputs,
            trials: file.trials,
            grid: file.grid,
            regime: file.regime,
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<ExperimentSpec> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| e.context(format!("parsing {}", path.display())))
    }

    pub fn builtin(name: &str) -> Result<ExperimentSpec> {
        let (_, text) = BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Parse(format!("no built-in experiment '{name}' (have {})", builtin_names().join(", "))))?;
        Self::from_toml_str(text).map_err(|e| e.context(format!("built-in experiment '{name}'")))
    }

    /// A one-point experiment on a fully resolved configuration.
    pub fn single(name: &str, cfg: &SystemConfig, outputs: Vec<OutputKind>) -> ExperimentSpec {
        ExperimentSpec {
            name: name.to_string(),
            base: cfg.clone(),
            random_angles: false,
            sweep: Sweep { param: SweepParam::PDb, values: vec![cfg.p_db()] },
            phase_mode: PhaseMode::Random,
            csi_mode: CsiMode::Perfect,
            outputs,
            trials: 0,
            grid: vec![],
            regime: AsymptoticRegime::General,
        }
    }

    pub fn seed(&self) -> u64 {
        self.base.seed
    }

    /// Base configuration with the angles resolved.
    pub fn resolved_base(&self) -> SystemConfig {
        let mut cfg = self.base.clone();
        if self.random_angles {
            cfg.angles = angles_from_seed(cfg.seed);
        }
        cfg
    }

    pub fn point_config(&self, value: f64) -> SystemConfig {
        let mut cfg = self.resolved_base();
        self.sweep.param.apply(&mut cfg, value);
        cfg
    }

    fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.name.trim().is_empty() {
            errs.push("experiment name is empty".to_string());
        }
        let vals = &self.sweep.values;
        if vals.is_empty() {
            errs.push("sweep value list is empty".to_string());
        }
        if vals.windows(2).any(|w| !(w[1] > w[0])) {
            errs.push("sweep values must be strictly increasing".to_string());
        }
        if vals.iter().any(|v| !v.is_finite()) {
            errs.push("sweep values must be finite".to_string());
        }
        if self.sweep.param.is_integer() && vals.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
            errs.push(format!("{} takes nonnegative integer values", self.sweep.param.name()));
        }
        if self.outputs.is_empty() {
            errs.push("no outputs requested".to_string());
        }
        let wants_cdf = [OutputKind::AnalyticCdf, OutputKind::AsymptoticCdf, OutputKind::EmpiricalCdf]
            .iter()
            .any(|k| self.wants(*k));
        if wants_cdf && self.grid.is_empty() {
            errs.push("CDF outputs need a nonempty threshold grid".to_string());
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) || self.grid.iter().any(|x| !(*x >= 0.0)) {
            errs.push("grid must be nonnegative and strictly increasing".to_string());
        }
        if self.wants(OutputKind::EmpiricalCdf) && self.trials < 100 {
            errs.push(format!("empirical_cdf needs at least 100 trials, got {}", self.trials));
        }
        if self.trials > 0 && self.trials < 100 {
            errs.push(format!("trials must be 0 or at least 100, got {}", self.trials));
        }
        if errs.is_empty() {
            for &v in vals {
                if let Err(Error::InvalidConfig(list)) = self.point_config(v).validate() {
                    errs.extend(list.into_iter().map(|e| format!("{}={v}: {e}", self.sweep.param.name())));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(errs))
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex(&Sha256::digest(&bytes))
    }
}

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub spec_hash: String,
    pub seed: u64,
    pub angles: SteeringAngles,
    pub spec: ExperimentSpec,
    pub records: Vec<PointRecord>,
}

/// `([Sigma^-1]_ii, noise scale)` of the surface-assisted link.
fn link_statistics(cfg: &SystemConfig, csi: CsiMode) -> Result<(f64, f64)> {
    let stats = EquivalentStats::at_zero_phases(cfg)?;
    Ok(match csi {
        CsiMode::Perfect => (sigma_inv_diag(cfg, &stats), 1.0),
        CsiMode::Imperfect => (sigma_hat_inv_diag(cfg, &stats), stats.v_noise),
    })
}

/// Same for the direct link alone, i.i.d. Rayleigh with variance `beta_UB`.
fn direct_link_statistics(cfg: &SystemConfig, csi: CsiMode) -> (f64, f64) {
    match csi {
        CsiMode::Perfect => (1.0 / cfg.beta_ub, 1.0),
        CsiMode::Imperfect => (1.0 / delta(cfg, cfg.beta_ub), v_noise(cfg.beta_ub)),
    }
}

fn run_point(spec: &ExperimentSpec, value: f64, workers: usize) -> Result<PointRecord> {
    let start = Instant::now();
    let cfg = spec.point_config(value);
    let seed = cfg.seed;
    let mut rows = Vec::new();
    let analytic = |kind| Row::analytic(kind, None, 0.0, seed);

    let needs_link = spec.outputs.iter().any(|k| {
        matches!(k, OutputKind::AnalyticCdf | OutputKind::AvgSe | OutputKind::EffectiveSe)
    });
    let link = if needs_link { Some(link_statistics(&cfg, spec.csi_mode)?) } else { None };
    let samples = if spec.trials > 0 {
        Some(simulate(&cfg, spec.phase_mode, spec.csi_mode, spec.trials, workers)?)
    } else {
        None
    };

    for &kind in &spec.outputs {
        match kind {
            OutputKind::AnalyticCdf => {
                let (sid, ns) = link.expect("link statistics computed");
                for &x in &spec.grid {
                    let v = outage_cdf(x, &cfg, sid, cfg.n, cfg.m, ns)?;
                    rows.push(Row::analytic(RowKind::AnalyticCdf, Some(x), v, seed));
                }
            }
            OutputKind::AsymptoticCdf => {
                for &x in &spec.grid {
                    let v = outage_cdf_asymptotic(x, &cfg, spec.regime)?;
                    rows.push(Row::analytic(RowKind::AsymptoticCdf, Some(x), v, seed));
                }
            }
            OutputKind::EmpiricalCdf => {
                let curve = samples.as_ref().expect("trials validated").outage_curve(&spec.grid);
                for (k, &x) in curve.grid.iter().enumerate() {
                    let (v, hw) = (curve.values[k], curve.ci_half_width[k]);
                    rows.push(Row::empirical(
                        RowKind::EmpiricalCdf,
                        Some(x),
                        v,
                        ((v - hw).max(0.0), (v + hw).min(1.0)),
                        curve.trials,
                        seed,
                    ));
                }
            }
            OutputKind::AvgSe => {
                let (sid, ns) = link.expect("link statistics computed");
                let se = average_se(&cfg, sid, ns)?;
                rows.push(Row { value: se, ..analytic(RowKind::AvgSe) });
                if let Some(s) = &samples {
                    let est = s.average_se();
                    rows.push(Row::empirical(
                        RowKind::AvgSeMc,
                        None,
                        est.mean,
                        (est.mean - est.ci_half_width, est.mean + est.ci_half_width),
                        est.trials,
                        seed,
                    ));
                }
            }
            OutputKind::EffectiveSe => {
                let (sid, ns) = link.expect("link statistics computed");
                let se = average_se(&cfg, sid, ns)?;
                let eff = effective_se(se, &cfg, true)?;
                rows.push(Row { value: eff, ..analytic(RowKind::EffectiveSe) });
                let (sid0, ns0) = direct_link_statistics(&cfg, spec.csi_mode);
                let eff0 = effective_se(average_se(&cfg, sid0, ns0)?, &cfg, false)?;
                rows.push(Row { value: eff0, ..analytic(RowKind::EffectiveSeNoLris) });
            }
        }
    }
    Ok(PointRecord {
        sweep_value: value,
        rows,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Evaluates every requested output at every sweep point.
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentReport> {
    spec.validate()?;
    let records = spec
        .sweep
        .values
        .iter()
        .map(|&v| {
            run_point(spec, v, workers)
                .map_err(|e| e.context(format!("{} at {}={v}", spec.name, spec.sweep.param.name())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        tool_version: TOOL_VERSION.to_string(),
        spec_hash: spec.hash(),
        seed: spec.seed(),
        angles: spec.resolved_base().angles,
        spec: spec.clone(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_validate() {
        for name in builtin_names() {
            let spec = ExperimentSpec::builtin(name).unwrap();
            assert_eq!(spec.name, name);
            spec.validate().unwrap();
        }
        assert!(ExperimentSpec::builtin("fig9").is_err());
    }

    #[test]
    fn fig2_base_matches_its_parameter_set() {
        let spec = ExperimentSpec::builtin("fig2").unwrap();
        let cfg = spec.point_config(64.0);
        assert_eq!((cfg.m, cfg.n, cfg.l, cfg.q), (4, 8, 64, 2));
        assert!((cfg.p - 1.0).abs() < 1e-12);
        assert!((cfg.kappa_h - 10.0).abs() < 1e-12 && (cfg.kappa_g - 10.0).abs() < 1e-12);
        assert_eq!((cfg.beta_ub, cfg.beta_lb, cfg.beta_ul), (0.1, 0.1, 0.1));
        assert!(spec.random_angles);
    }

    #[test]
    fn invalid_spec_lists_every_violation() {
        let mut spec = ExperimentSpec::builtin("fig2").unwrap();
        spec.sweep.values = vec![64.0, 32.0];
        spec.trials = 10;
        spec.grid.clear();
        match spec.validate() {
            Err(Error::InvalidConfig(list)) => assert!(list.len() >= 3, "{list:?}"),
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn pilot_overflow_propagates() {
        let mut spec = ExperimentSpec::builtin("fig4").unwrap();
        spec.sweep = Sweep { param: SweepParam::Ct, values: vec![600.0] };
        let err = run_experiment(&spec, 1).unwrap_err();
        assert!(err.to_string().contains("CT=600"), "{err}");
    }

    #[test]
    fn hash_tracks_spec_content() {
        let a = ExperimentSpec::builtin("fig3").unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.base.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn fig3_ratio_approaches_one() {
        let report = run_experiment(&ExperimentSpec::builtin("fig3").unwrap(), 1).unwrap();
        let ratios: Vec<f64> = report
            .records
            .iter()
            .map(|r| r.rows[1].value / r.rows[0].value)
            .collect();
        let last = *ratios.last().unwrap();
        assert!((0.8..=1.25).contains(&last), "{ratios:?}");
    }

    #[test]
    fn surface_beats_direct_link_at_high_snr() {
        let report = run_experiment(&ExperimentSpec::builtin("fig4").unwrap(), 1).unwrap();
        let last = report.records.last().unwrap();
        let with = last.rows.iter().find(|r| r.kind == RowKind::EffectiveSe).unwrap().value;
        let without = last.rows.iter().find(|r| r.kind == RowKind::EffectiveSeNoLris).unwrap().value;
        assert!(with > without, "{with} vs {without}");
    }
}
