//! Equivalent-channel statistics, outage CDF and average spectral efficiency.
//!
//! Each entry of the cascaded channel `H Phi G` is approximated by a
//! Nakagami-m envelope with spread `gamma_bar`, which in turn is matched to a
//! Rician variable with factor `K`. The composite channel Gram matrix is then
//! treated as central Wishart with covariance `Sigma`, so every stream SNR is
//! Gamma(N-M+1) distributed.

use serde::{Deserialize, Serialize};

use crate::channel::los_unit_matrices;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimation;
use crate::matkernel::{matmul, CMatrix, C64};
use crate::special::{
    avg_fading_gain, gamma_p_int, ln_factorial, ln_gamma_p_int, scaled_upper_gamma_negint_terms,
    sinc,
};

/// `(xi1, xi2) = (sinc(2^-q pi), sinc(2^{1-q} pi))`.
pub fn quantization_factors(q: u32) -> (f64, f64) {
    let base = std::f64::consts::PI * 2f64.powi(-(q as i32));
    (sinc(base), sinc(2.0 * base))
}

/// `alpha = sqrt(a_H a_G)`.
pub fn alpha(cfg: &SystemConfig) -> f64 {
    (avg_fading_gain(cfg.kappa_h) * avg_fading_gain(cfg.kappa_g)).sqrt()
}

/// Nakagami shape and spread `(m, gamma_bar)` of one cascaded entry.
pub fn nakagami_params(l: usize, xi1: f64, xi2: f64, alpha: f64) -> (f64, f64) {
    let lf = l as f64;
    let c = xi1 * xi1 * alpha.powi(4);
    let denom = 2.0 * (1.0 + xi2 - 2.0 * c);
    let m = if denom <= 0.0 { f64::INFINITY } else { lf * c / denom };
    (m, c * lf * lf)
}

/// Rician factor matched to a Nakagami shape: `sqrt(m^2 - m) + m - 1`.
pub fn rician_k_from_m(m: f64) -> f64 {
    if m.is_infinite() {
        return f64::INFINITY;
    }
    (m * m - m).max(0.0).sqrt() + m - 1.0
}

/// `K / (K + 1)`, exact in the `K = inf` limit.
pub fn los_fraction(k: f64) -> f64 {
    if k.is_infinite() {
        1.0
    } else {
        k / (k + 1.0)
    }
}

/// `1 / (K + 1)`.
pub fn scatter_fraction(k: f64) -> f64 {
    if k.is_infinite() {
        0.0
    } else {
        1.0 / (k + 1.0)
    }
}

/// `(m, gamma_bar, K)` for the configuration.
pub fn equivalent_params(cfg: &SystemConfig) -> Result<(f64, f64, f64)> {
    let (xi1, xi2) = quantization_factors(cfg.q);
    let (m, gamma_bar) = nakagami_params(cfg.l, xi1, xi2, alpha(cfg));
    if !(m >= 1.0) {
        return Err(Error::ApproximationRegime { m });
    }
    Ok((m, gamma_bar, rician_k_from_m(m)))
}

/// Scatter variance of the composite channel,
/// `rho = beta_UB + gamma_bar beta_LB beta_UL / (K + 1)`.
pub fn rho(cfg: &SystemConfig, gamma_bar: f64, k: f64) -> f64 {
    let scatter = if gamma_bar.is_infinite() { 0.0 } else { gamma_bar * scatter_fraction(k) };
    cfg.beta_ub + scatter * cfg.beta_cascade()
}

/// Mean-matrix direction `M_LB Phi M_UL` rescaled so `||X||_F^2 = N M`.
///
/// When the phases cancel the cascade exactly the direction is taken from
/// the zero-phase product.
pub fn normalized_mean_matrix(cfg: &SystemConfig, phases: &[f64]) -> CMatrix {
    let (lb, ul) = los_unit_matrices(cfg);
    let lb_phi = CMatrix::from_fn(lb.rows(), lb.cols(), |i, l| {
        lb[(i, l)] * C64::from_polar(1.0, phases[l])
    });
    let x = matmul(&lb_phi, &ul).expect("LoS dimensions agree");
    let target = ((cfg.n * cfg.m) as f64).sqrt();
    let norm = x.frobenius_norm();
    if norm > 1e-9 * (cfg.l as f64) * target {
        x.scale_real(target / norm)
    } else {
        normalized_mean_matrix(cfg, &vec![0.0; cfg.l])
    }
}

/// Coefficient of `X^H X` in both covariance matrices, `K bb / (N (K+1))`.
pub fn rank_one_coef(cfg: &SystemConfig, k: f64) -> f64 {
    los_fraction(k) * cfg.beta_cascade() / cfg.n as f64
}

/// `load I + coef X^H X`.
pub fn loaded_gram(load: f64, coef: f64, x: &CMatrix) -> CMatrix {
    let mut s = x.gram().scale_real(coef);
    for i in 0..s.rows() {
        s[(i, i)] += C64::new(load, 0.0);
    }
    s.hermitian_part()
}

/// Diagonal of `(d I + coef b b^H)^{-1}` when `b` has `M` constant-modulus
/// entries with `||b||^2 = b_norm_sq` (Sherman-Morrison).
pub fn sm_inv_diag(d: f64, coef: f64, b_norm_sq: f64, m: usize) -> f64 {
    let entry = b_norm_sq / m as f64;
    1.0 / d - (coef * entry / (d * d)) / (1.0 + coef * b_norm_sq / d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalentStats {
    pub xi1: f64,
    pub xi2: f64,
    pub alpha: f64,
    pub m: f64,
    pub gamma_bar: f64,
    pub k_eq: f64,
    pub rho: f64,
    /// Normalized mean matrix (N x M), `||X||_F^2 = N M`.
    pub x: CMatrix,
    pub sigma: CMatrix,
    pub delta: f64,
    pub v_noise: f64,
    pub sigma_hat: CMatrix,
}

impl EquivalentStats {
    /// Statistics with the mean direction taken at the given phases.
    pub fn new(cfg: &SystemConfig, phases: &[f64]) -> Result<EquivalentStats> {
        let x = normalized_mean_matrix(cfg, phases);
        Self::with_mean(cfg, x)
    }

    /// Statistics with all phases at zero.
    pub fn at_zero_phases(cfg: &SystemConfig) -> Result<EquivalentStats> {
        Self::new(cfg, &vec![0.0; cfg.l])
    }

    pub fn with_mean(cfg: &SystemConfig, x: CMatrix) -> Result<EquivalentStats> {
        let (xi1, xi2) = quantization_factors(cfg.q);
        let alpha = alpha(cfg);
        let (m, gamma_bar, k_eq) = equivalent_params(cfg)?;
        let rho = rho(cfg, gamma_bar, k_eq);
        let coef = rank_one_coef(cfg, k_eq);
        let sigma = loaded_gram(rho, coef, &x);
        let delta = estimation::delta(cfg, rho);
        let sigma_hat = loaded_gram(delta, coef, &x);
        Ok(EquivalentStats {
            xi1,
            xi2,
            alpha,
            m,
            gamma_bar,
            k_eq,
            rho,
            x,
            sigma,
            delta,
            v_noise: estimation::v_noise(rho),
            sigma_hat,
        })
    }

    /// Replaces the mean direction after a phase change.
    pub fn rebase(&self, cfg: &SystemConfig, phases: &[f64]) -> EquivalentStats {
        let x = normalized_mean_matrix(cfg, phases);
        let coef = rank_one_coef(cfg, self.k_eq);
        EquivalentStats {
            sigma: loaded_gram(self.rho, coef, &x),
            sigma_hat: loaded_gram(self.delta, coef, &x),
            x,
            ..self.clone()
        }
    }

    /// Mean channel in absolute units, `sqrt(bb K/(K+1)) X`.
    pub fn x_scaled(&self, cfg: &SystemConfig) -> CMatrix {
        self.x
            .scale_real((cfg.beta_cascade() * los_fraction(self.k_eq)).sqrt())
    }
}

/// `Sigma = rho I + (K bb / (N (K+1))) X^H X`.
pub fn covariance_sigma(cfg: &SystemConfig, x: &CMatrix, stats: &EquivalentStats) -> CMatrix {
    loaded_gram(stats.rho, rank_one_coef(cfg, stats.k_eq), x)
}

/// Closed-form `[Sigma^-1]_{ii}` (identical for every stream).
pub fn sigma_inv_diag(cfg: &SystemConfig, stats: &EquivalentStats) -> f64 {
    sm_inv_diag(
        stats.rho,
        rank_one_coef(cfg, stats.k_eq),
        (cfg.n * cfg.m) as f64,
        cfg.m,
    )
}

/// Gamma-law scale `c = [Sigma^-1]_ii noise_scale / p`.
pub fn cdf_scale(cfg: &SystemConfig, sigma_inv_diag: f64, noise_scale: f64) -> f64 {
    sigma_inv_diag * noise_scale / cfg.p
}

/// Outage probability `P(gamma_i <= x)`: regularised lower incomplete gamma
/// of order `N - M + 1` at `c x`.
pub fn outage_cdf(
    x: f64,
    cfg: &SystemConfig,
    sigma_inv_diag: f64,
    dof_n: usize,
    dof_m: usize,
    noise_scale: f64,
) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("outage threshold must be >= 0, got {x}")));
    }
    if dof_n < dof_m {
        return Err(Error::Domain(format!("N ({dof_n}) < M ({dof_m})")));
    }
    let c = cdf_scale(cfg, sigma_inv_diag, noise_scale);
    Ok(gamma_p_int((dof_n - dof_m + 1) as u32, c * x))
}

/// Natural log of [`outage_cdf`], usable deep in the tail.
pub fn ln_outage_cdf(
    x: f64,
    cfg: &SystemConfig,
    sigma_inv_diag: f64,
    noise_scale: f64,
) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("outage threshold must be >= 0, got {x}")));
    }
    let c = cdf_scale(cfg, sigma_inv_diag, noise_scale);
    Ok(ln_gamma_p_int((cfg.n - cfg.m + 1) as u32, c * x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticRegime {
    General,
    Q1,
    Qinf,
    RandomPhase,
}

/// Effective large-L SNR denominator `D` of the asymptotic outage law.
pub fn asymptotic_denominator(cfg: &SystemConfig, regime: AsymptoticRegime) -> f64 {
    let bb = cfg.beta_cascade();
    let lf = cfg.l as f64;
    let a4 = alpha(cfg).powi(4);
    match regime {
        AsymptoticRegime::General => {
            let (xi1, xi2) = quantization_factors(cfg.q);
            cfg.beta_ub + bb * lf * (1.0 - 2.0 * xi1 * xi1 * a4 + xi2)
        }
        AsymptoticRegime::Q1 => {
            let pi2 = std::f64::consts::PI.powi(2);
            cfg.beta_ub + bb * lf * (1.0 - 8.0 * a4 / pi2)
        }
        AsymptoticRegime::Qinf => cfg.beta_ub + 2.0 * bb * lf * (1.0 - a4),
        AsymptoticRegime::RandomPhase => cfg.beta_ub + bb / lf,
    }
}

/// `ln[(x / (p D))^n / n!]` with `n = N - M + 1`.
pub fn ln_outage_cdf_asymptotic(x: f64, cfg: &SystemConfig, regime: AsymptoticRegime) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("outage threshold must be >= 0, got {x}")));
    }
    let n = (cfg.n - cfg.m + 1) as u64;
    let d = asymptotic_denominator(cfg, regime);
    Ok(n as f64 * (x / (cfg.p * d)).ln() - ln_factorial(n))
}

/// High-SNR / large-L outage approximation `(x / (p D))^n / n!`.
pub fn outage_cdf_asymptotic(x: f64, cfg: &SystemConfig, regime: AsymptoticRegime) -> Result<f64> {
    Ok(ln_outage_cdf_asymptotic(x, cfg, regime)?.exp())
}

/// Average SE per stream in bit/s/Hz,
/// `(1/ln 2) sum_{k=0}^{N-M} c^k e^c Gamma(-k, c)`.
pub fn average_se(cfg: &SystemConfig, sigma_inv_diag: f64, noise_scale: f64) -> Result<f64> {
    let c = cdf_scale(cfg, sigma_inv_diag, noise_scale);
    if !(c > 0.0) {
        return Err(Error::Domain(format!("SE needs a positive Gamma scale, got {c}")));
    }
    let terms = scaled_upper_gamma_negint_terms((cfg.n - cfg.m) as u32, c)?;
    Ok(terms.iter().sum::<f64>() / std::f64::consts::LN_2)
}

/// Pilot length: one slot per transmit antenna, times `L + 1` with the surface.
pub fn pilot_length(cfg: &SystemConfig, with_lris: bool) -> u64 {
    let m = cfg.m as u64;
    if with_lris {
        m * (cfg.l as u64 + 1)
    } else {
        m
    }
}

/// Fraction of the coherence block spent on pilots.
pub fn pilot_fraction(cfg: &SystemConfig, with_lris: bool) -> Result<f64> {
    let pilot = pilot_length(cfg, with_lris);
    if cfg.coherence_time <= pilot {
        return Err(Error::PilotOverhead {
            pilot,
            coherence: cfg.coherence_time,
        });
    }
    Ok(pilot as f64 / cfg.coherence_time as f64)
}

/// SE discounted by the pilot overhead, `(CT - T_pilot) / CT * se`.
pub fn effective_se(se: f64, cfg: &SystemConfig, with_lris: bool) -> Result<f64> {
    Ok((1.0 - pilot_fraction(cfg, with_lris)?) * se)
}
