//! Deterministic parallel Monte Carlo over channel draws.
//!
//! Trial `t` always consumes RNG stream `t` of the master seed and results
//! are reduced in trial order, so output is bit-identical for any worker
//! count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, ChannelSampler};
use crate::config::SystemConfig;
use crate::detection::zf_snrs;
use crate::error::{Error, Result};
use crate::estimation::{conditional_mean, ls_error_variance, shrink};
use crate::matkernel::CMatrix;
use crate::phasedesign::{algorithm1_scaled, algorithm2, random_phases, DEFAULT_EPS, DEFAULT_MAX_SWEEPS};
use crate::rng::{complex_normal, complex_normal_matrix, stream_rng, StreamRng};
use crate::stats::{los_fraction, scatter_fraction, EquivalentStats};

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    /// Instantaneous-CSI coordinate ascent per trial.
    Algorithm1,
    /// Statistical-CSI design, computed once per configuration.
    Algorithm2,
    /// Independent uniform grid phases per trial.
    Random,
    /// All phases at zero.
    Fixed,
    /// Composite channel drawn from the equivalent Rician model
    /// `H_D + sqrt(bb) (sqrt(K/(K+1)) X + sqrt(gamma_bar/(K+1)) Y)`.
    Mismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    Perfect,
    Imperfect,
}

impl std::str::FromStr for PhaseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<PhaseMode> {
        match s {
            "algorithm1" => Ok(PhaseMode::Algorithm1),
            "algorithm2" => Ok(PhaseMode::Algorithm2),
            "random" => Ok(PhaseMode::Random),
            "fixed" => Ok(PhaseMode::Fixed),
            "mismatch" => Ok(PhaseMode::Mismatch),
            other => Err(Error::Parse(format!("unknown phase mode '{other}'"))),
        }
    }
}

impl std::str::FromStr for CsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<CsiMode> {
        match s {
            "perfect" => Ok(CsiMode::Perfect),
            "imperfect" => Ok(CsiMode::Imperfect),
            other => Err(Error::Parse(format!("unknown CSI mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCurve {
    pub grid: Vec<f64>,
    /// Outage of the first stream at each grid point.
    pub values: Vec<f64>,
    pub ci_half_width: Vec<f64>,
    /// Outage of the weakest stream.
    pub min_stream_values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub ci_half_width: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Per-trial, per-stream SNRs of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrSamples {
    pub snrs: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SnrSamples {
    pub fn trials(&self) -> usize {
        self.snrs.len()
    }

    pub fn stream(&self, i: usize) -> Vec<f64> {
        self.snrs.iter().map(|s| s[i]).collect()
    }

    pub fn min_stream(&self) -> Vec<f64> {
        self.snrs
            .iter()
            .map(|s| s.iter().copied().fold(f64::INFINITY, f64::min))
            .collect()
    }

    pub fn outage_curve(&self, grid: &[f64]) -> EmpiricalCurve {
        let first = self.stream(0);
        let weakest = self.min_stream();
        let n = self.trials() as f64;
        let frac = |xs: &[f64], x: f64| xs.iter().filter(|&&v| v <= x).count() as f64 / n;
        let values: Vec<f64> = grid.iter().map(|&x| frac(&first, x)).collect();
        EmpiricalCurve {
            grid: grid.to_vec(),
            ci_half_width: values.iter().map(|&f| Z95 * (f * (1.0 - f) / n).sqrt()).collect(),
            values,
            min_stream_values: grid.iter().map(|&x| frac(&weakest, x)).collect(),
            trials: self.trials(),
            seed: self.seed,
        }
    }

    /// Mean of `log2(1 + gamma_i)` over trials and streams.
    pub fn average_se(&self) -> MeanEstimate {
        let per_trial: Vec<f64> = self
            .snrs
            .iter()
            .map(|s| s.iter().map(|g| (1.0 + g).log2()).sum::<f64>() / s.len() as f64)
            .collect();
        let (mean, half) = mean_ci(&per_trial);
        MeanEstimate {
            mean,
            ci_half_width: half,
            trials: self.trials(),
            seed: self.seed,
        }
    }

    /// Mean SNR of stream `i`.
    pub fn mean_snr(&self, i: usize) -> MeanEstimate {
        let (mean, half) = mean_ci(&self.stream(i));
        MeanEstimate {
            mean,
            ci_half_width: half,
            trials: self.trials(),
            seed: self.seed,
        }
    }
}

/// Sample mean with a normal-approximation 95% half width.
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// Everything a trial needs that does not change between trials.
struct Context {
    cfg: SystemConfig,
    phase_mode: PhaseMode,
    csi: CsiMode,
    sampler: ChannelSampler,
    stats: Option<EquivalentStats>,
    fixed_phases: Option<Vec<f64>>,
    eps: f64,
    max_sweeps: usize,
}

impl Context {
    fn new(cfg: &SystemConfig, phase_mode: PhaseMode, csi: CsiMode) -> Result<Context> {
        Self::with_stats(cfg, phase_mode, csi, None)
    }

    fn with_stats(
        cfg: &SystemConfig,
        phase_mode: PhaseMode,
        csi: CsiMode,
        given: Option<EquivalentStats>,
    ) -> Result<Context> {
        cfg.validate()?;
        let needs_stats = csi == CsiMode::Imperfect
            || matches!(phase_mode, PhaseMode::Algorithm2 | PhaseMode::Mismatch);
        let mut stats = match given {
            Some(s) => Some(s),
            None if needs_stats => {
                Some(EquivalentStats::at_zero_phases(cfg).map_err(|e| e.context("equivalent statistics"))?)
            }
            None => None,
        };
        let fixed_phases = match phase_mode {
            PhaseMode::Algorithm2 => {
                let base = stats.as_ref().expect("statistics computed above");
                let mut design = base.clone();
                if csi == CsiMode::Perfect {
                    design.delta = design.rho;
                }
                let res = algorithm2(cfg, &design, DEFAULT_EPS, DEFAULT_MAX_SWEEPS)
                    .map_err(|e| e.context("statistical phase design"))?;
                stats = Some(base.rebase(cfg, &res.phases));
                Some(res.phases)
            }
            PhaseMode::Fixed => Some(vec![0.0; cfg.l]),
            _ => None,
        };
        Ok(Context {
            cfg: cfg.clone(),
            phase_mode,
            csi,
            sampler: ChannelSampler::new(cfg),
            stats,
            fixed_phases,
            eps: DEFAULT_EPS,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        })
    }

    fn stats(&self) -> &EquivalentStats {
        self.stats.as_ref().expect("statistics required by this mode")
    }

    fn trial(&self, seed: u64, t: u64) -> Result<Vec<f64>> {
        let mut rng = stream_rng(seed, t);
        let cfg = &self.cfg;
        if self.phase_mode == PhaseMode::Mismatch {
            let h_tot = draw_equivalent_total(cfg, self.stats(), &mut rng);
            return self.detect(&h_tot, &self.stats().x_scaled(cfg), &mut rng);
        }
        let mut real = self.sampler.draw(&mut rng);
        match self.phase_mode {
            PhaseMode::Random => real.set_phases(&random_phases(cfg.l, cfg.q, &mut rng)),
            PhaseMode::Fixed | PhaseMode::Algorithm2 => {
                real.set_phases(self.fixed_phases.as_ref().expect("precomputed phases"))
            }
            PhaseMode::Algorithm1 => {
                if self.csi == CsiMode::Imperfect {
                    return self.imperfect_algorithm1(real, &mut rng);
                }
                let res = algorithm1_scaled(&real, cfg.q, cfg.p, self.eps, self.max_sweeps)?;
                real.set_phases(&res.phases);
            }
            PhaseMode::Mismatch => unreachable!(),
        }
        let x_s = match self.csi {
            CsiMode::Perfect => None,
            CsiMode::Imperfect => Some(self.stats().rebase(cfg, &real.phases).x_scaled(cfg)),
        };
        match x_s {
            None => Ok(zf_snrs(&real.h_tot, cfg.p, 1.0)?.values),
            Some(x_s) => self.detect(&real.h_tot, &x_s, &mut rng),
        }
    }

    /// Detection SNRs of `h_tot`, through the estimate when CSI is imperfect.
    fn detect(&self, h_tot: &CMatrix, x_s: &CMatrix, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let cfg = &self.cfg;
        match self.csi {
            CsiMode::Perfect => Ok(zf_snrs(h_tot, cfg.p, 1.0)?.values),
            CsiMode::Imperfect => {
                let stats = self.stats();
                let noise = complex_normal_matrix(rng, cfg.n, cfg.m, ls_error_variance(cfg));
                let h_hat = h_tot + &noise;
                let h_bar = conditional_mean(&h_hat, x_s, cfg, stats);
                Ok(zf_snrs(&h_bar, cfg.p, stats.v_noise)?.values)
            }
        }
    }

    /// Phase design on the conditional-mean channel. Its per-element terms
    /// are the true cascade terms scaled by the shrink factor; the rest
    /// (direct link, estimation noise, prior mean) is held at the
    /// pre-design phases.
    fn imperfect_algorithm1(&self, real: ChannelRealization, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let cfg = &self.cfg;
        let stats = self.stats();
        let s = shrink(cfg, stats.rho);
        let noise = complex_normal_matrix(rng, cfg.n, cfg.m, ls_error_variance(cfg));
        let x0 = stats.rebase(cfg, &real.phases).x_scaled(cfg);
        let direct = &(&real.h_d + &noise).scale_real(s) + &x0.scale_real(1.0 - s);
        let design = ChannelRealization::new(direct, real.h.scale_real(s), real.g.clone(), real.phases.clone());
        let res = algorithm1_scaled(&design, cfg.q, cfg.p / stats.v_noise, self.eps, self.max_sweeps)?;
        let mut real = real;
        real.set_phases(&res.phases);
        let x_s = stats.rebase(cfg, &real.phases).x_scaled(cfg);
        let h_hat = &real.h_tot + &noise;
        let h_bar = conditional_mean(&h_hat, &x_s, cfg, stats);
        Ok(zf_snrs(&h_bar, cfg.p, stats.v_noise)?.values)
    }
}

/// Composite channel from the equivalent model: direct link plus a Rician
/// cascade with factor `K`, mean direction `X` and spread `gamma_bar`.
pub fn draw_equivalent_total(cfg: &SystemConfig, stats: &EquivalentStats, rng: &mut StreamRng) -> CMatrix {
    let bb = cfg.beta_cascade().sqrt();
    let w_los = los_fraction(stats.k_eq).sqrt();
    let w_scat = (stats.gamma_bar * scatter_fraction(stats.k_eq)).sqrt();
    CMatrix::from_fn(cfg.n, cfg.m, |i, j| {
        let direct = complex_normal(rng, cfg.beta_ub);
        let y = complex_normal(rng, 1.0);
        direct + (stats.x[(i, j)] * w_los + y * w_scat) * bb
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))
}

/// Runs `trials` independent trials and returns every stream SNR.
pub fn simulate(
    cfg: &SystemConfig,
    phase_mode: PhaseMode,
    csi: CsiMode,
    trials: usize,
    workers: usize,
) -> Result<SnrSamples> {
    let snrs = simulate_map(cfg, phase_mode, csi, trials, workers, |s| s)?;
    Ok(SnrSamples { snrs, seed: cfg.seed })
}

/// Like [`simulate`], but keeps only `f` of each trial's stream SNRs.
pub fn simulate_map<T: Send>(
    cfg: &SystemConfig,
    phase_mode: PhaseMode,
    csi: CsiMode,
    trials: usize,
    workers: usize,
    f: impl Fn(Vec<f64>) -> T + Sync,
) -> Result<Vec<T>> {
    run_trials(&Context::new(cfg, phase_mode, csi)?, trials, workers, f)
}

/// Samples the equivalent model with the mean direction and covariances of
/// `stats`, e.g. statistics rebased to designed phases.
pub fn simulate_equivalent(
    cfg: &SystemConfig,
    stats: &EquivalentStats,
    csi: CsiMode,
    trials: usize,
    workers: usize,
) -> Result<SnrSamples> {
    let ctx = Context::with_stats(cfg, PhaseMode::Mismatch, csi, Some(stats.clone()))?;
    let snrs = run_trials(&ctx, trials, workers, |s| s)?;
    Ok(SnrSamples { snrs, seed: cfg.seed })
}

fn run_trials<T: Send>(
    ctx: &Context,
    trials: usize,
    workers: usize,
    f: impl Fn(Vec<f64>) -> T + Sync,
) -> Result<Vec<T>> {
    let seed = ctx.cfg.seed;
    pool(workers)?.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| ctx.trial(seed, t).map(&f))
            .collect::<Result<Vec<_>>>()
    })
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < 100 {
        return Err(Error::Domain(format!("need at least 100 trials, got {trials}")));
    }
    Ok(())
}

pub fn empirical_outage(
    cfg: &SystemConfig,
    phase_mode: PhaseMode,
    csi: CsiMode,
    grid: &[f64],
    trials: usize,
    workers: usize,
) -> Result<EmpiricalCurve> {
    check_trials(trials)?;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("outage grid must be strictly increasing".into()));
    }
    Ok(simulate(cfg, phase_mode, csi, trials, workers)?.outage_curve(grid))
}

pub fn empirical_avg_se(
    cfg: &SystemConfig,
    phase_mode: PhaseMode,
    csi: CsiMode,
    trials: usize,
    workers: usize,
) -> Result<MeanEstimate> {
    check_trials(trials)?;
    Ok(simulate(cfg, phase_mode, csi, trials, workers)?.average_se())
}

/// Kolmogorov-Smirnov distance between samples and a reference CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Minimum outage events per grid point for the Monte Carlo slope fit.
pub const MIN_SLOPE_EVENTS: usize = 20;

/// Largest outage probability counted as the high-SNR region in the
/// Monte Carlo slope fit.
pub const MAX_SLOPE_OUTAGE: f64 = 1e-3;

/// Slope of `log10(outage)` against `log10(p)` of the closed-form CDF at
/// threshold `threshold`.
pub fn diversity_slope_analytic(cfg: &SystemConfig, p_grid_db: &[f64], threshold: f64) -> Result<f64> {
    let mut pts = Vec::new();
    for &pdb in p_grid_db {
        let mut c = cfg.clone();
        c.p = crate::config::db_to_linear(pdb);
        let stats = EquivalentStats::at_zero_phases(&c)?;
        let s = crate::stats::sigma_inv_diag(&c, &stats);
        let ln_f = crate::stats::ln_outage_cdf(threshold, &c, s, 1.0)?;
        pts.push((pdb / 10.0, ln_f / std::f64::consts::LN_10));
    }
    Ok(ls_slope(&pts))
}

/// Monte Carlo diversity slope at outage threshold `threshold` with perfect
/// CSI. The SNR of every phase mode is proportional to `p` here, so one set
/// of trials at unit power serves every grid point.
///
/// Only grid points in the high-SNR region (outage at most
/// [`MAX_SLOPE_OUTAGE`]) with at least [`MIN_SLOPE_EVENTS`] outage events
/// enter the fit; fewer than two usable points is a starved estimate.
pub fn diversity_slope(
    cfg: &SystemConfig,
    phase_mode: PhaseMode,
    p_grid_db: &[f64],
    threshold: f64,
    trials: usize,
    workers: usize,
) -> Result<f64> {
    check_trials(trials)?;
    let mut unit = cfg.clone();
    unit.p = 1.0;
    let gains = simulate_map(&unit, phase_mode, CsiMode::Perfect, trials, workers, |s| s[0])?;
    diversity_slope_from_gains(&gains, p_grid_db, threshold)
}

pub fn diversity_slope_from_gains(gains: &[f64], p_grid_db: &[f64], threshold: f64) -> Result<f64> {
    let n = gains.len() as f64;
    let mut pts = Vec::new();
    let mut starved = Vec::new();
    for &pdb in p_grid_db {
        let p = crate::config::db_to_linear(pdb);
        let events = gains.iter().filter(|&&g| g * p <= threshold).count();
        let outage = events as f64 / n;
        if outage > MAX_SLOPE_OUTAGE {
            continue;
        }
        if events >= MIN_SLOPE_EVENTS {
            pts.push((pdb / 10.0, outage.log10()));
        } else {
            starved.push(format!("{pdb} dB: {events} events"));
        }
    }
    if pts.len() < 2 {
        return Err(Error::StarvedEstimate(format!(
            "only {} grid point(s) reached {MIN_SLOPE_EVENTS} outage events below outage {MAX_SLOPE_OUTAGE} ({}); \
             increase trials or refine the grid",
            pts.len(),
            starved.join(", ")
        )));
    }
    Ok(ls_slope(&pts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{db_to_linear, SteeringAngles};
    use crate::stats::{outage_cdf, sigma_inv_diag};

    fn cfg(l: usize) -> SystemConfig {
        let mut c = SystemConfig::default().with_dims(2, 4, l);
        c.angles = SteeringAngles::random(&mut stream_rng(9, 9));
        c.p = db_to_linear(5.0);
        c
    }

    #[test]
    fn determinism_across_workers() {
        let c = cfg(16);
        let a = simulate(&c, PhaseMode::Random, CsiMode::Perfect, 200, 1).unwrap();
        let b = simulate(&c, PhaseMode::Random, CsiMode::Perfect, 200, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn outage_vanishes_at_huge_p() {
        let mut c = cfg(16);
        c.p = 1e12;
        let curve = empirical_outage(&c, PhaseMode::Fixed, CsiMode::Perfect, &[0.1, 1.0, 10.0], 500, 1).unwrap();
        assert!(curve.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn curves_are_monotone_and_bounded() {
        let c = cfg(16);
        let grid: Vec<f64> = (1..40).map(|k| k as f64 * 0.05).collect();
        let curve = empirical_outage(&c, PhaseMode::Random, CsiMode::Perfect, &grid, 500, 1).unwrap();
        for w in curve.values.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(curve.values.iter().all(|v| (0.0..=1.0).contains(v)));
        for (a, b) in curve.values.iter().zip(&curve.min_stream_values) {
            assert!(b >= a);
        }
    }

    #[test]
    fn ci_shrinks_with_trials() {
        let c = cfg(16);
        let s = simulate(&c, PhaseMode::Mismatch, CsiMode::Perfect, 8000, 1).unwrap();
        let median = {
            let mut g = s.stream(0);
            g.sort_by(f64::total_cmp);
            g[g.len() / 2]
        };
        let half = SnrSamples { snrs: s.snrs[..4000].to_vec(), seed: s.seed }.outage_curve(&[median]);
        let full = s.outage_curve(&[median]);
        let ratio = full.ci_half_width[0] / half.ci_half_width[0];
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.15 * std::f64::consts::FRAC_1_SQRT_2);
    }

    #[test]
    fn equivalent_sampler_mean_exceeds_jensen_bound() {
        let c = cfg(32);
        let stats = EquivalentStats::at_zero_phases(&c).unwrap();
        let designed = stats.rebase(&c, &vec![0.4; c.l]);
        let bound = crate::phasedesign::jensen_bound(&c, &designed.sigma_hat, designed.v_noise).unwrap();
        let s = simulate_equivalent(&c, &designed, CsiMode::Imperfect, 4000, 2).unwrap();
        for (i, b) in bound.iter().enumerate() {
            let mean = s.mean_snr(i).mean;
            // a complex Wishart inverse inflates the mean by (N-M+1)/(N-M)
            let expected = b * (c.n - c.m + 1) as f64 / (c.n - c.m) as f64;
            assert!(mean > *b, "stream {i}: {mean} vs {b}");
            assert!(((mean - expected) / expected).abs() < 0.1, "stream {i}: {mean} vs {expected}");
        }
    }

    #[test]
    fn equivalent_model_matches_closed_form_cdf() {
        let c = cfg(64);
        let stats = EquivalentStats::at_zero_phases(&c).unwrap();
        let sid = sigma_inv_diag(&c, &stats);
        let s = simulate(&c, PhaseMode::Mismatch, CsiMode::Perfect, 5000, 1).unwrap();
        let ks = ks_distance(&s.stream(0), |x| outage_cdf(x, &c, sid, c.n, c.m, 1.0).unwrap());
        assert!(ks < 0.03, "{ks}");
    }

    #[test]
    fn se_closed_form_vs_equivalent_model() {
        let c = cfg(256);
        let stats = EquivalentStats::at_zero_phases(&c).unwrap();
        let se = crate::stats::average_se(&c, sigma_inv_diag(&c, &stats), 1.0).unwrap();
        let mc = empirical_avg_se(&c, PhaseMode::Mismatch, CsiMode::Perfect, 100_000, 1).unwrap();
        assert!(((mc.mean - se) / se).abs() < 0.02, "{} vs {se}", mc.mean);
    }

    #[test]
    fn rician_factor_hurts_se() {
        let base = cfg(64);
        let rayleigh = base.clone().with_kappa(0.0);
        let los = base.with_kappa(db_to_linear(10.0));
        let a = empirical_avg_se(&rayleigh, PhaseMode::Mismatch, CsiMode::Perfect, 20_000, 1).unwrap();
        let b = empirical_avg_se(&los, PhaseMode::Mismatch, CsiMode::Perfect, 20_000, 1).unwrap();
        assert!(a.mean > b.mean, "{} vs {}", a.mean, b.mean);
    }

    #[test]
    fn imperfect_csi_gap_closes_with_power() {
        let mut gaps = Vec::new();
        for pdb in [0.0, 30.0] {
            let mut c = cfg(64);
            c.p = db_to_linear(pdb);
            let perfect = empirical_avg_se(&c, PhaseMode::Mismatch, CsiMode::Perfect, 20_000, 1).unwrap();
            let imperfect = empirical_avg_se(&c, PhaseMode::Mismatch, CsiMode::Imperfect, 20_000, 1).unwrap();
            assert!(perfect.mean >= imperfect.mean);
            gaps.push(perfect.mean - imperfect.mean);
        }
        assert!(gaps[1] < gaps[0], "{gaps:?}");
    }

    #[test]
    fn starved_slope_is_reported() {
        let gains = vec![1.0; 1000];
        match diversity_slope_from_gains(&gains, &[0.0, 10.0], 0.5) {
            Err(Error::StarvedEstimate(msg)) => assert!(msg.contains("increase trials")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn analytic_slopes() {
        let c = SystemConfig::default();
        let s = diversity_slope_analytic(&c, &[60.0, 65.0, 70.0], 1.0).unwrap();
        assert!((s + 5.0).abs() < 1e-3, "{s}");
        let c = SystemConfig::default().with_dims(4, 4, 256);
        let s = diversity_slope_analytic(&c, &[60.0, 65.0, 70.0], 1.0).unwrap();
        assert!((s + 1.0).abs() < 1e-3, "{s}");
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("mismatch".parse::<PhaseMode>().unwrap(), PhaseMode::Mismatch);
        assert_eq!("imperfect".parse::<CsiMode>().unwrap(), CsiMode::Imperfect);
        assert!("nope".parse::<PhaseMode>().is_err());
    }
}
