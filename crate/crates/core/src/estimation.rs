//! Imperfect CSI: pilot-based estimate, conditional-mean channel and the
//! resulting error statistics.
//!
//! The composite channel is modelled as `H_tot = X_s + scatter` with
//! per-entry scatter variance `rho`; a least-squares estimate over `M`
//! training slots adds white error of variance `1/(M p)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::config::SystemConfig;
use crate::matkernel::CMatrix;
use crate::rng::complex_normal_matrix;
use crate::stats::{loaded_gram, rank_one_coef, sm_inv_diag, EquivalentStats};

/// Per-entry LS estimation error variance `1 / (M p)`.
pub fn ls_error_variance(cfg: &SystemConfig) -> f64 {
    1.0 / (cfg.m as f64 * cfg.p)
}

/// Weight of the observation in the conditional mean, `rho / (rho + 1/(M p))`.
pub fn shrink(cfg: &SystemConfig, rho: f64) -> f64 {
    rho / (rho + ls_error_variance(cfg))
}

/// `delta = rho^2 / (rho + 1/(M p))`.
pub fn delta(cfg: &SystemConfig, rho: f64) -> f64 {
    rho * shrink(cfg, rho)
}

/// Residual error variance per entry, `rho / (M p rho + 1)`.
pub fn r_e_scale(cfg: &SystemConfig, rho: f64) -> f64 {
    rho / (cfg.m as f64 * cfg.p * rho + 1.0)
}

/// Effective noise inflation `rho / (rho + 1) + 1`.
pub fn v_noise(rho: f64) -> f64 {
    rho / (rho + 1.0) + 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationModel {
    pub h_hat: CMatrix,
    pub h_bar: CMatrix,
    pub r_e_scale: f64,
    pub v_noise: f64,
    pub delta: f64,
    pub shrink: f64,
}

impl EstimationModel {
    /// Simulates the estimate of `real.h_tot` and forms the conditional mean
    /// around the scaled mean channel of `stats`.
    pub fn estimate<R: Rng + ?Sized>(
        real: &ChannelRealization,
        cfg: &SystemConfig,
        stats: &EquivalentStats,
        rng: &mut R,
    ) -> EstimationModel {
        let h_hat = simulate_ls_estimate(real, cfg, rng);
        Self::from_estimate(h_hat, cfg, stats)
    }

    pub fn from_estimate(h_hat: CMatrix, cfg: &SystemConfig, stats: &EquivalentStats) -> EstimationModel {
        let h_bar = conditional_mean(&h_hat, &stats.x_scaled(cfg), cfg, stats);
        let (r_e_scale, v_noise) = error_stats(cfg, stats);
        EstimationModel {
            h_hat,
            h_bar,
            r_e_scale,
            v_noise,
            delta: delta(cfg, stats.rho),
            shrink: shrink(cfg, stats.rho),
        }
    }
}

/// `H_hat = H_tot + N_err`, `N_err` white with variance `1/(M p)`.
pub fn simulate_ls_estimate<R: Rng + ?Sized>(
    real: &ChannelRealization,
    cfg: &SystemConfig,
    rng: &mut R,
) -> CMatrix {
    let (n, m) = real.h_tot.shape();
    &real.h_tot + &complex_normal_matrix(rng, n, m, ls_error_variance(cfg))
}

/// `H_bar = X + shrink (H_hat - X)`.
pub fn conditional_mean(
    h_hat: &CMatrix,
    x_scaled: &CMatrix,
    cfg: &SystemConfig,
    stats: &EquivalentStats,
) -> CMatrix {
    let s = shrink(cfg, stats.rho);
    x_scaled + &(h_hat - x_scaled).scale_real(s)
}

/// `(R_e scale, V)`.
pub fn error_stats(cfg: &SystemConfig, stats: &EquivalentStats) -> (f64, f64) {
    (r_e_scale(cfg, stats.rho), v_noise(stats.rho))
}

/// `Sigma_hat = delta I + (K bb / (N (K+1))) X^H X`, returned with `delta`.
pub fn sigma_hat(cfg: &SystemConfig, x: &CMatrix, stats: &EquivalentStats) -> (CMatrix, f64) {
    let d = delta(cfg, stats.rho);
    (loaded_gram(d, rank_one_coef(cfg, stats.k_eq), x), d)
}

/// Closed-form `[Sigma_hat^-1]_{ii}`.
pub fn sigma_hat_inv_diag(cfg: &SystemConfig, stats: &EquivalentStats) -> f64 {
    sm_inv_diag(
        delta(cfg, stats.rho),
        rank_one_coef(cfg, stats.k_eq),
        (cfg.n * cfg.m) as f64,
        cfg.m,
    )
}
