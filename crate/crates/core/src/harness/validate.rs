//! Fast self-check suite: closed forms against independent evaluations.

use std::f64::consts::PI;

use crate::config::{SystemConfig, Q_INFINITE};
use crate::estimation::sigma_hat_inv_diag;
use crate::matkernel::inverse;
use crate::quad::integrate_to_infinity;
use crate::rng::stream_rng;
use crate::special::avg_fading_gain;
use crate::stats::{
    average_se, outage_cdf, pilot_fraction, pilot_length, quantization_factors, sigma_inv_diag,
    EquivalentStats,
};

/// Fault injection for exercising the failure path.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ValidateOptions {
    /// Added to every computed `xi_1` before it is checked.
    pub xi1_perturbation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, worst: f64, tol: f64, what: &str) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= tol,
        detail: format!("max {what} {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn quantization(opts: &ValidateOptions) -> CheckResult {
    let (a1, b1) = quantization_factors(1);
    let (ai, bi) = quantization_factors(Q_INFINITE);
    let worst = [
        (a1 + opts.xi1_perturbation - 2.0 / PI).abs(),
        b1.abs(),
        (ai + opts.xi1_perturbation - 1.0).abs(),
        (bi - 1.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    check("quantization factors", worst, 1e-12, "abs error")
}

fn fading_gain() -> CheckResult {
    let worst = (avg_fading_gain(0.0) - PI.sqrt() / 2.0).abs();
    check("Rayleigh mean envelope", worst, 1e-12, "abs error")
}

fn random_configs(seed: u64, count: u64) -> impl Iterator<Item = SystemConfig> {
    (0..count).map(move |t| SystemConfig::random(&mut stream_rng(seed, t)))
}

fn sherman_morrison(opts: &ValidateOptions) -> CheckResult {
    let mut worst: f64 = 0.0;
    for cfg in random_configs(opts.seed, 100) {
        let stats = match EquivalentStats::at_zero_phases(&cfg) {
            Ok(s) => s,
            Err(e) => {
                return CheckResult {
                    name: "Sherman-Morrison diagonal",
                    passed: false,
                    detail: e.to_string(),
                }
            }
        };
        let pairs = [
            (sigma_inv_diag(&cfg, &stats), &stats.sigma),
            (sigma_hat_inv_diag(&cfg, &stats), &stats.sigma_hat),
        ];
        for (closed, mat) in pairs {
            match inverse(mat) {
                Ok(inv) => {
                    for d in inv.real_diagonal() {
                        worst = worst.max(rel(closed, d));
                    }
                }
                Err(_) => worst = f64::INFINITY,
            }
        }
    }
    check("Sherman-Morrison diagonal", worst, 1e-10, "relative error")
}

fn se_quadrature(opts: &ValidateOptions) -> CheckResult {
    let mut worst: f64 = 0.0;
    for cfg in random_configs(opts.seed.wrapping_add(1), 20) {
        let Ok(stats) = EquivalentStats::at_zero_phases(&cfg) else {
            worst = f64::INFINITY;
            continue;
        };
        let sid = sigma_inv_diag(&cfg, &stats);
        let closed = average_se(&cfg, sid, 1.0).unwrap_or(f64::NAN);
        let integral = integrate_to_infinity(
            |x| {
                let f = outage_cdf(x, &cfg, sid, cfg.n, cfg.m, 1.0).unwrap_or(f64::NAN);
                (1.0 - f) / ((1.0 + x) * std::f64::consts::LN_2)
            },
            0.0,
            1e-11,
        )
        .unwrap_or(f64::NAN);
        let e = rel(closed, integral);
        worst = worst.max(if e.is_nan() { f64::INFINITY } else { e });
    }
    check("SE closed form vs quadrature", worst, 1e-6, "relative error")
}

fn overhead() -> CheckResult {
    let mut worst: f64 = 0.0;
    for (m, pilot) in [(4usize, 1028u64), (2, 514)] {
        let mut cfg = SystemConfig::default().with_dims(m, 8, 256);
        cfg.coherence_time = 1200;
        worst = worst.max((pilot_length(&cfg, true) as f64 - pilot as f64).abs());
        worst = worst.max((pilot_fraction(&cfg, true).unwrap_or(f64::NAN) - pilot as f64 / 1200.0).abs());
        worst = worst.max((pilot_length(&cfg, false) as f64 - m as f64).abs());
    }
    if worst.is_nan() {
        worst = f64::INFINITY;
    }
    check("pilot overhead", worst, 0.0, "abs error")
}

pub fn run_checks(opts: &ValidateOptions) -> Vec<CheckResult> {
    vec![
        quantization(opts),
        fading_gain(),
        sherman_morrison(opts),
        se_quadrature(opts),
        overhead(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_run_passes() {
        let results = run_checks(&ValidateOptions::default());
        for r in &results {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn perturbed_xi1_fails() {
        let opts = ValidateOptions { xi1_perturbation: 1e-9, ..Default::default() };
        let results = run_checks(&opts);
        assert!(!results[0].passed);
        assert!(results[1..].iter().all(|r| r.passed));
    }
}
