//! Key-value configuration files with unit-suffixed keys.
//!
//! ```toml
//! M = 4
//! N = 8
//! L = 256
//! q = 2
//! p_dB = 10
//! beta_UB_linear = 1e-4
//! kappa_dB = 3
//! upa_lris = "16x16"
//! ```
//!
//! Every key is optional; unknown keys are rejected. Angles are either all
//! given (radians) or drawn from the seed.

use serde::{Deserialize, Serialize};

use crate::config::{db_to_linear, Angles, SteeringAngles, SystemConfig, Upa};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// RNG stream reserved for drawing experiment angles.
pub const ANGLE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(rename = "p_dB", skip_serializing_if = "Option::is_none")]
    pub p_db: Option<f64>,
    #[serde(rename = "beta_UB_linear", skip_serializing_if = "Option::is_none")]
    pub beta_ub: Option<f64>,
    #[serde(rename = "beta_LB_linear", skip_serializing_if = "Option::is_none")]
    pub beta_lb: Option<f64>,
    #[serde(rename = "beta_UL_linear", skip_serializing_if = "Option::is_none")]
    pub beta_ul: Option<f64>,
    /// Sets both Rician factors.
    #[serde(rename = "kappa_dB", skip_serializing_if = "Option::is_none")]
    pub kappa_db: Option<f64>,
    /// Sets both Rician factors on a linear scale (0 for Rayleigh).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_linear: Option<f64>,
    #[serde(rename = "kappa_H_dB", skip_serializing_if = "Option::is_none")]
    pub kappa_h_db: Option<f64>,
    #[serde(rename = "kappa_G_dB", skip_serializing_if = "Option::is_none")]
    pub kappa_g_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upa_tx: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upa_rx: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upa_lris: Option<String>,
    #[serde(rename = "CT_samples", skip_serializing_if = "Option::is_none")]
    pub coherence_time: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles_rad: Option<AngleTable>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleTable {
    pub theta_rx: f64,
    pub psi_rx: f64,
    pub theta_lris_rx: f64,
    pub psi_lris_rx: f64,
    pub theta_lris_tx: f64,
    pub psi_lris_tx: f64,
    pub theta_tx: f64,
    pub psi_tx: f64,
}

impl From<AngleTable> for SteeringAngles {
    fn from(t: AngleTable) -> SteeringAngles {
        SteeringAngles {
            rx: Angles { theta: t.theta_rx, psi: t.psi_rx },
            lris_rx: Angles { theta: t.theta_lris_rx, psi: t.psi_lris_rx },
            lris_tx: Angles { theta: t.theta_lris_tx, psi: t.psi_lris_tx },
            tx: Angles { theta: t.theta_tx, psi: t.psi_tx },
        }
    }
}

pub fn parse_upa(s: &str) -> Result<Upa> {
    let (v, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::Parse(format!("UPA '{s}' is not of the form VxH")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("UPA '{s}' has a non-integer side")))
    };
    Ok(Upa::new(parse(v)?, parse(h)?))
}

impl ConfigOverrides {
    pub fn from_toml_str(text: &str) -> Result<ConfigOverrides> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<ConfigOverrides> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| e.context(format!("parsing {}", path.display())))
    }

    /// `other` wins wherever it sets a key.
    pub fn merged_with(&self, other: &ConfigOverrides) -> ConfigOverrides {
        macro_rules! pick {
            ($($f:ident),*) => {
                ConfigOverrides { $($f: other.$f.clone().or_else(|| self.$f.clone()),)* }
            };
        }
        pick!(
            m, n, l, q, p_db, beta_ub, beta_lb, beta_ul, kappa_db, kappa_linear, kappa_h_db,
            kappa_g_db, upa_tx, upa_rx, upa_lris, coherence_time, seed, angles_rad
        )
    }

    /// Applies the overrides on top of `base`. Array shapes follow the
    /// antenna counts unless given explicitly. Returns whether the angles
    /// still need to be drawn from the seed.
    pub fn apply(&self, base: &SystemConfig) -> Result<(SystemConfig, bool)> {
        let mut cfg = base.clone();
        if self.m.is_some() || self.n.is_some() || self.l.is_some() {
            cfg = cfg.with_dims(
                self.m.unwrap_or(base.m),
                self.n.unwrap_or(base.n),
                self.l.unwrap_or(base.l),
            );
        }
        if let Some(q) = self.q {
            cfg.q = q;
        }
        if let Some(p) = self.p_db {
            cfg.p = db_to_linear(p);
        }
        if let Some(b) = self.beta_ub {
            cfg.beta_ub = b;
        }
        if let Some(b) = self.beta_lb {
            cfg.beta_lb = b;
        }
        if let Some(b) = self.beta_ul {
            cfg.beta_ul = b;
        }
        if self.kappa_db.is_some() && self.kappa_linear.is_some() {
            return Err(Error::Parse("give kappa_dB or kappa_linear, not both".into()));
        }
        if let Some(k) = self.kappa_db {
            cfg = cfg.with_kappa(db_to_linear(k));
        }
        if let Some(k) = self.kappa_linear {
            cfg = cfg.with_kappa(k);
        }
        if let Some(k) = self.kappa_h_db {
            cfg.kappa_h = db_to_linear(k);
        }
        if let Some(k) = self.kappa_g_db {
            cfg.kappa_g = db_to_linear(k);
        }
        if let Some(s) = &self.upa_tx {
            cfg.upa_tx = parse_upa(s)?;
        }
        if let Some(s) = &self.upa_rx {
            cfg.upa_rx = parse_upa(s)?;
        }
        if let Some(s) = &self.upa_lris {
            cfg.upa_lris = parse_upa(s)?;
        }
        if let Some(ct) = self.coherence_time {
            cfg.coherence_time = ct;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let random_angles = match self.angles_rad {
            Some(t) => {
                cfg.angles = t.into();
                false
            }
            None => true,
        };
        Ok((cfg, random_angles))
    }
}

/// The eight angles drawn uniformly on `[0, 2pi)` from the master seed.
pub fn angles_from_seed(seed: u64) -> SteeringAngles {
    SteeringAngles::random(&mut stream_rng(seed, ANGLE_STREAM))
}

/// Defaults, then a config file, then explicit overrides; angles drawn from
/// the final seed unless given.
pub fn resolve_config(file: Option<&ConfigOverrides>, flags: &ConfigOverrides) -> Result<SystemConfig> {
    let merged = match file {
        Some(f) => f.merged_with(flags),
        None => flags.clone(),
    };
    let (mut cfg, random_angles) = merged.apply(&SystemConfig::default())?;
    if random_angles {
        cfg.angles = angles_from_seed(cfg.seed);
    }
    cfg.validate()?;
    Ok(cfg)
}
