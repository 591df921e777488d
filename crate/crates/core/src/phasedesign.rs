//! Discrete phase design by cyclic coordinate ascent.
//!
//! Changing one element `i` perturbs the composite channel by a rank-one
//! term, `H = H_{-i} + e^{j phi_i} h_i g_i^H`, so by the matrix determinant
//! lemma `det(H^H H)` depends on `phi_i` only through
//! `Re{e^{j phi_i} w_i}` with `w_i = g_i^H A_i^{-1} H_{-i}^H h_i` and
//! `A_i = H_{-i}^H H_{-i} + ||h_i||^2 g_i g_i^H`. The maximiser is
//! `phi_i = -arg(w_i)`, and since the objective is a cosine in `phi_i` the
//! nearest grid point is also the best grid point.
//!
//! [`algorithm1`] applies this with instantaneous CSI and tracks the minimum
//! stream SNR. [`algorithm2`] applies the same update to the statistical
//! covariance `Sigma_hat` and tracks the Jensen lower bound on the average
//! SNR.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{los_unit_matrices, wrap_phase, ChannelRealization};
use crate::config::SystemConfig;
use crate::detection::zf_snrs;
use crate::error::{Error, Result};
use crate::matkernel::{hermitian, inverse, matmul, CMatrix, Cholesky, C64};
use crate::stats::{rank_one_coef, EquivalentStats};

pub const DEFAULT_EPS: f64 = 1e-4;
pub const DEFAULT_MAX_SWEEPS: usize = 20;

/// Uniform phase grid `-pi + 2 pi k / 2^q`, `k = 0..2^q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSet {
    pub q: u32,
}

impl PhaseSet {
    pub fn new(q: u32) -> PhaseSet {
        assert!(q >= 1, "phase resolution needs at least one bit");
        PhaseSet { q }
    }

    pub fn step(&self) -> f64 {
        2.0 * PI * 2f64.powi(-(self.q as i32))
    }

    /// Grid values in increasing order. Only sensible for modest `q`.
    pub fn values(&self) -> Vec<f64> {
        assert!(self.q <= 24, "refusing to materialise a 2^{} grid", self.q);
        let n = 1usize << self.q;
        (0..n).map(|k| -PI + self.step() * k as f64).collect()
    }

    /// Nearest grid value under circular distance; ties go to the lower index.
    pub fn quantize(&self, phi: f64) -> f64 {
        let step = self.step();
        let t = (wrap_phase(phi) + PI) / step;
        let mut k = t.floor();
        if t - k > 0.5 {
            k += 1.0;
        }
        let n = 2f64.powi(self.q as i32);
        if k >= n {
            k -= n;
        }
        wrap_phase(-PI + step * k)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = 2f64.powi(self.q as i32);
        let k = (rng.random::<f64>() * n).floor().min(n - 1.0);
        -PI + self.step() * k
    }
}

pub fn quantize_phase(phi: f64, set: PhaseSet) -> f64 {
    set.quantize(phi)
}

/// Independent uniform draws from the phase grid.
pub fn random_phases<R: Rng + ?Sized>(l: usize, q: u32, rng: &mut R) -> Vec<f64> {
    let set = PhaseSet::new(q);
    (0..l).map(|_| set.random(rng)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDesignResult {
    pub phases: Vec<f64>,
    /// Objective before the first sweep, then after each accepted sweep.
    pub min_snr_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// `-arg(w)`, or `None` when `w` vanishes and the phase is arbitrary.
fn phase_of(w: C64) -> Option<f64> {
    if w.norm() < 1e-300 || !w.is_finite() {
        None
    } else {
        Some(wrap_phase(-w.arg()))
    }
}

fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Continuous maximiser of `det(H_tot^H H_tot)` over element `i`.
///
/// With `cascaded_only` the update is computed from the cascade product
/// `C = h_i g_i^H` alone as `-arg Tr[H_{-i}^H C A_i^{-1}]`; otherwise from
/// the factored vectors. The two agree exactly.
pub fn optimal_phase_instant(i: usize, real: &ChannelRealization, cascaded_only: bool) -> Result<f64> {
    let t = C64::from_polar(1.0, real.phases[i]);
    let c = real.cascade_term(i);
    let h_minus = &real.h_tot - &c.scale(t);
    let a = &h_minus.gram() + &c.gram();
    let w = if cascaded_only {
        let a_inv = inverse(&a)?;
        matmul(&matmul(&hermitian(&h_minus), &c)?, &a_inv)?.trace()
    } else {
        let h = real.h_col(i);
        let g: Vec<C64> = real.g_row(i).iter().map(|z| z.conj()).collect();
        let q = h_minus.hermitian_mul_vec(&h);
        let z = Cholesky::new(&a)?.solve_vec(&q);
        dot_conj(&g, &z)
    };
    Ok(phase_of(w).unwrap_or(real.phases[i]))
}

/// One pass of quantised per-element updates over all elements, using
/// incremental Gram-matrix updates (`O(NM + M^3)` per element).
pub fn instant_sweep(real: &mut ChannelRealization, set: PhaseSet) -> Result<usize> {
    let mut gram = real.h_tot.gram();
    let mut changed = 0;
    for i in 0..real.l() {
        let t = C64::from_polar(1.0, real.phases[i]);
        let h = real.h_col(i);
        let g: Vec<C64> = real.g_row(i).iter().map(|z| z.conj()).collect();
        let hh: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let u = real.h_tot.hermitian_mul_vec(&h);
        // H_{-i}^H h
        let q: Vec<C64> = u.iter().zip(&g).map(|(ui, gi)| ui - t.conj() * hh * gi).collect();
        // A = Gram - t u g^H - t* g u^H + 2 ||h||^2 g g^H
        let mut a = gram.clone();
        a.add_outer_scaled(-t, &u, &g);
        a.add_outer_scaled(-t.conj(), &g, &u);
        a.add_outer_scaled(C64::new(2.0 * hh, 0.0), &g, &g);
        let a = a.hermitian_part();
        let z = Cholesky::new(&a)?.solve_vec(&q);
        let w = dot_conj(&g, &z);
        let Some(phi) = phase_of(w).map(|p| set.quantize(p)) else {
            continue;
        };
        if phi == real.phases[i] {
            continue;
        }
        let t_new = C64::from_polar(1.0, phi);
        // new Gram = A + t_new q g^H + t_new* g q^H
        let mut next = a;
        next.add_outer_scaled(t_new, &q, &g);
        next.add_outer_scaled(t_new.conj(), &g, &q);
        gram = next;
        real.set_phase(i, phi);
        changed += 1;
    }
    Ok(changed)
}

/// Cyclic coordinate ascent with instantaneous CSI.
///
/// Each sweep updates every element once; the sweep is kept when the
/// minimum stream SNR does not drop, and the search stops once the relative
/// improvement falls below `eps`. A sweep that lowers the minimum SNR is
/// rolled back and ends the search.
pub fn algorithm1(
    real: &ChannelRealization,
    cfg: &SystemConfig,
    eps: f64,
    max_sweeps: usize,
) -> Result<PhaseDesignResult> {
    algorithm1_scaled(real, cfg.q, cfg.p, eps, max_sweeps)
}

/// [`algorithm1`] with an explicit SNR scale for the tracked objective.
pub fn algorithm1_scaled(
    real: &ChannelRealization,
    q: u32,
    snr_scale: f64,
    eps: f64,
    max_sweeps: usize,
) -> Result<PhaseDesignResult> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let set = PhaseSet::new(q);
    let mut work = real.clone();
    let mut best = work.phases.clone();
    let mut prev = zf_snrs(&work.h_tot, snr_scale, 1.0)?.min_value;
    let mut trace = vec![prev];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let changed = instant_sweep(&mut work, set)?;
        // resynchronise the cached composite channel once per sweep
        work.set_phases(&work.phases.clone());
        let cur = zf_snrs(&work.h_tot, snr_scale, 1.0)?.min_value;
        if cur < prev {
            converged = true;
            break;
        }
        best.clone_from(&work.phases);
        trace.push(cur);
        if changed == 0 || cur - prev < eps * prev {
            converged = true;
            break;
        }
        prev = cur;
    }
    Ok(PhaseDesignResult {
        phases: best,
        min_snr_trace: trace,
        sweeps,
        converged,
    })
}

/// Per-element LoS directions scaled so that perfect co-phasing of all `L`
/// elements gives `||X||_F^2 = N M`: column `l` of `M_LB / sqrt(L)` and
/// the conjugate of row `l` of `M_UL / sqrt(L)`.
#[derive(Debug, Clone)]
pub struct LosElements {
    pub mu_lb: Vec<Vec<C64>>,
    pub mu_ul: Vec<Vec<C64>>,
}

impl LosElements {
    pub fn new(cfg: &SystemConfig) -> LosElements {
        let (lb, ul) = los_unit_matrices(cfg);
        let s = 1.0 / (cfg.l as f64).sqrt();
        LosElements {
            mu_lb: (0..cfg.l)
                .map(|l| lb.column(l).into_iter().map(|z| z * s).collect())
                .collect(),
            mu_ul: (0..cfg.l)
                .map(|l| ul.row(l).iter().map(|z| z.conj() * s).collect())
                .collect(),
        }
    }

    /// `X_phi = sum_l e^{j phi_l} mu_LB,l mu_UL,l^H`.
    pub fn mean_matrix(&self, phases: &[f64]) -> CMatrix {
        let n = self.mu_lb[0].len();
        let m = self.mu_ul[0].len();
        let mut x = CMatrix::zeros(n, m);
        for (l, &phi) in phases.iter().enumerate() {
            x.add_outer_scaled(C64::from_polar(1.0, phi), &self.mu_lb[l], &self.mu_ul[l]);
        }
        x
    }
}

/// `delta I + coef X^H X`: the statistical-CSI covariance as a function of
/// the phases.
pub fn sigma_hat_of_phases(cfg: &SystemConfig, stats: &EquivalentStats, los: &LosElements, phases: &[f64]) -> CMatrix {
    crate::stats::loaded_gram(stats.delta, rank_one_coef(cfg, stats.k_eq), &los.mean_matrix(phases))
}

/// Continuous maximiser of `det Sigma_hat` over element `i`; keeps the
/// current phase when the other elements contribute nothing.
pub fn optimal_phase_statistical(
    i: usize,
    cfg: &SystemConfig,
    stats: &EquivalentStats,
    current_phases: &[f64],
) -> Result<f64> {
    let los = LosElements::new(cfg);
    let x = los.mean_matrix(current_phases);
    statistical_update(i, cfg, stats, &los, &x, current_phases[i])
}

fn statistical_update(
    i: usize,
    cfg: &SystemConfig,
    stats: &EquivalentStats,
    los: &LosElements,
    x: &CMatrix,
    current: f64,
) -> Result<f64> {
    let coef = rank_one_coef(cfg, stats.k_eq);
    let c = CMatrix::outer(&los.mu_lb[i], &los.mu_ul[i]);
    let mut m_minus = x.clone();
    m_minus.add_outer_scaled(-C64::from_polar(1.0, current), &los.mu_lb[i], &los.mu_ul[i]);
    let mut a = &m_minus.gram().scale_real(coef) + &c.gram();
    for d in 0..a.rows() {
        a[(d, d)] += C64::new(stats.delta, 0.0);
    }
    let a_inv = inverse(&a)?;
    let w = matmul(&matmul(&hermitian(&m_minus), &c)?, &a_inv)?.trace();
    Ok(phase_of(w).unwrap_or(current))
}

/// Jensen lower bound on each stream's average SNR,
/// `((N - M) p / V) / [Sigma_hat^-1]_ii`.
pub fn jensen_bound(cfg: &SystemConfig, sigma_hat: &CMatrix, v_noise: f64) -> Result<Vec<f64>> {
    if cfg.n == cfg.m {
        return Err(Error::JensenUndefined(cfg.n));
    }
    let scale = (cfg.n - cfg.m) as f64 * cfg.p / v_noise;
    let diag = Cholesky::new(sigma_hat)?.inverse_diagonal();
    Ok(diag.into_iter().map(|d| scale / d).collect())
}

/// Same bound through the determinant ratio `det Sigma_hat / det Sigma_hat_{-i,-i}`.
pub fn jensen_bound_det_form(cfg: &SystemConfig, sigma_hat: &CMatrix, v_noise: f64) -> Result<Vec<f64>> {
    if cfg.n == cfg.m {
        return Err(Error::JensenUndefined(cfg.n));
    }
    let scale = (cfg.n - cfg.m) as f64 * cfg.p / v_noise;
    let full = crate::matkernel::det(sigma_hat)?.re;
    (0..sigma_hat.rows())
        .map(|i| {
            let minor = if sigma_hat.rows() == 1 {
                1.0
            } else {
                crate::matkernel::det(&sigma_hat.without_row_col(i))?.re
            };
            Ok(scale * full / minor)
        })
        .collect()
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Cyclic coordinate ascent on the statistical covariance, tracking the
/// smallest per-stream Jensen bound. Stops like [`algorithm1`].
pub fn algorithm2(
    cfg: &SystemConfig,
    stats: &EquivalentStats,
    eps: f64,
    max_sweeps: usize,
) -> Result<PhaseDesignResult> {
    algorithm2_from(cfg, stats, &vec![0.0; cfg.l], eps, max_sweeps)
}

pub fn algorithm2_from(
    cfg: &SystemConfig,
    stats: &EquivalentStats,
    initial: &[f64],
    eps: f64,
    max_sweeps: usize,
) -> Result<PhaseDesignResult> {
    if cfg.n == cfg.m {
        return Err(Error::JensenUndefined(cfg.n));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let set = PhaseSet::new(cfg.q);
    let los = LosElements::new(cfg);
    let bound = |phases: &[f64]| -> Result<f64> {
        let s = sigma_hat_of_phases(cfg, stats, &los, phases);
        Ok(min_of(&jensen_bound(cfg, &s, stats.v_noise)?))
    };
    let mut phases: Vec<f64> = initial.iter().map(|&p| set.quantize(p)).collect();
    let mut best = phases.clone();
    let mut prev = bound(&phases)?;
    let mut trace = vec![prev];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut x = los.mean_matrix(&phases);
        let mut changed = 0;
        for i in 0..cfg.l {
            let phi = set.quantize(statistical_update(i, cfg, stats, &los, &x, phases[i])?);
            if phi != phases[i] {
                let dt = C64::from_polar(1.0, phi) - C64::from_polar(1.0, phases[i]);
                x.add_outer_scaled(dt, &los.mu_lb[i], &los.mu_ul[i]);
                phases[i] = phi;
                changed += 1;
            }
        }
        let cur = bound(&phases)?;
        if cur < prev {
            converged = true;
            break;
        }
        best.clone_from(&phases);
        trace.push(cur);
        if changed == 0 || cur - prev < eps * prev {
            converged = true;
            break;
        }
        prev = cur;
    }
    Ok(PhaseDesignResult {
        phases: best,
        min_snr_trace: trace,
        sweeps,
        converged,
    })
}
