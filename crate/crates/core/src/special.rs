//! Special functions behind the closed-form statistics.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `sin(x) / x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Large-argument expansion of `e^{-x} I_nu(x)`, truncated at the smallest
/// term. Accurate to roughly `e^{-2x}` relative.
fn bessel_ie_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut acc = CompensatedSum::default();
    acc.add(term);
    for k in 1..200 {
        let kf = k as f64;
        let next = -term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        acc.add(term);
        if term.abs() < 1e-17 * acc.value().abs() {
            break;
        }
    }
    acc.value() / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Ascending series `sum (x/2)^{2k+nu} / (k! (k+nu)!)` scaled by `e^{-x}`.
fn bessel_ie_series(nu: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(nu as i32) / (1..=nu).map(f64::from).product::<f64>();
    let mut acc = term;
    for k in 1..500 {
        let kf = k as f64;
        term *= half * half / (kf * (kf + nu as f64));
        acc += term;
        if term < 1e-17 * acc {
            break;
        }
    }
    acc * (-x).exp()
}

/// Exponentially scaled modified Bessel function `e^{-x} I_0(x)`, `x >= 0`.
pub fn bessel_i0e(x: f64) -> f64 {
    if x <= 15.0 {
        bessel_ie_series(0, x)
    } else {
        bessel_ie_asymptotic(0.0, x)
    }
}

/// Exponentially scaled modified Bessel function `e^{-x} I_1(x)`, `x >= 0`.
pub fn bessel_i1e(x: f64) -> f64 {
    if x <= 15.0 {
        bessel_ie_series(1, x)
    } else {
        bessel_ie_asymptotic(1.0, x)
    }
}

/// Kummer's function `1F1(-1/2, 1; -kappa)`.
///
/// Up to `kappa = 30` an ascending series is summed with compensation, after
/// Kummer's transformation `1F1(-1/2, 1; -k) = e^{-k} 1F1(3/2, 1; k)` so that
/// every term is positive (the direct series alternates and cancels about
/// `e^k` worth of digits). Above that the Bessel form
/// `e^{-k/2} [(1+k) I_0(k/2) + k I_1(k/2)]` with large-argument expansions.
pub fn kummer_1f1_half(kappa: f64) -> f64 {
    assert!(kappa >= 0.0, "kummer_1f1_half needs kappa >= 0");
    if kappa <= 30.0 {
        let mut term = 1.0;
        let mut acc = CompensatedSum::default();
        acc.add(term);
        for k in 0..1000 {
            let kf = k as f64;
            term *= (kf + 1.5) * kappa / ((kf + 1.0) * (kf + 1.0));
            acc.add(term);
            if term < 1e-18 * acc.value() && kf > kappa {
                break;
            }
        }
        (-kappa).exp() * acc.value()
    } else {
        let x = 0.5 * kappa;
        (1.0 + kappa) * bessel_ie_asymptotic(0.0, x) + kappa * bessel_ie_asymptotic(1.0, x)
    }
}

/// Mean envelope of a unit-power Rician variable,
/// `sqrt(pi / (4 (k+1))) 1F1(-1/2, 1; -k)`; tends to 1 as `k -> inf`.
pub fn avg_fading_gain(kappa: f64) -> f64 {
    if kappa.is_infinite() {
        return 1.0;
    }
    (std::f64::consts::PI / (4.0 * (kappa + 1.0))).sqrt() * kummer_1f1_half(kappa)
}

/// Exponential integral `E_1(x)`, `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("E1 needs x > 0, got {x}")));
    }
    if x < 1.0 {
        let mut term = 1.0;
        let mut acc = CompensatedSum::default();
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            acc.add(-term / kf);
            if term.abs() < 1e-18 {
                break;
            }
        }
        Ok(-EULER_GAMMA - x.ln() + acc.value())
    } else {
        Ok(scaled_upper_gamma_cf(0, x) * (-x).exp())
    }
}

/// `x^k e^x Gamma(-k, x)` from the Legendre continued fraction (modified
/// Lentz). Converges quickly for `x >= 1` and never forms `e^{-x}`.
fn scaled_upper_gamma_cf(k: u32, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let a = -(k as f64);
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let fi = i as f64;
        let an = -fi * (fi - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `T_j = x^j e^x Gamma(-j, x)` for `j = 0..=k`.
///
/// Below `x = 1` the downward recurrence `T_j = (1 - x T_{j-1}) / j`
/// started from `e^x E_1(x)` is stable; above it each term comes from the
/// continued fraction.
pub fn scaled_upper_gamma_negint_terms(k: u32, x: f64) -> Result<Vec<f64>> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "incomplete gamma needs x > 0, got {x}"
        )));
    }
    if x < 1.0 {
        let mut out = Vec::with_capacity(k as usize + 1);
        out.push(x.exp() * exp_integral_e1(x)?);
        for j in 1..=k {
            let prev = out[j as usize - 1];
            out.push((1.0 - x * prev) / j as f64);
        }
        Ok(out)
    } else {
        Ok((0..=k).map(|j| scaled_upper_gamma_cf(j, x)).collect())
    }
}

/// Upper incomplete gamma at a non-positive integer order, `Gamma(-k, x)`.
pub fn upper_incomplete_gamma_negint(k: u32, x: f64) -> Result<f64> {
    let t = scaled_upper_gamma_negint_terms(k, x)?;
    Ok(t[k as usize] * (-x - k as f64 * x.ln()).exp())
}

/// Regularised lower incomplete gamma `P(n, y)` for integer `n >= 1`:
/// the CDF of a Gamma(n, 1) variable.
pub fn gamma_p_int(n: u32, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    // log of y^n e^{-y} / n!
    let log_lead = nf * y.ln() - y - ln_factorial(n as u64);
    if y < nf + 1.0 {
        // tail series e^{-y} sum_{k >= n} y^k / k!
        let mut term = 1.0;
        let mut acc = 1.0;
        for j in 1..10_000 {
            term *= y / (nf + j as f64);
            acc += term;
            if term < 1e-17 * acc {
                break;
            }
        }
        (log_lead + acc.ln()).exp().min(1.0)
    } else {
        // 1 - e^{-y} sum_{k < n} y^k / k!, summed from the largest term down
        let mut q = 0.0;
        let mut term = (log_lead - y.ln() + nf.ln()).exp();
        for k in (0..n).rev() {
            q += term;
            term *= k as f64 / y;
        }
        (1.0 - q).max(0.0)
    }
}

/// `log P(n, y)` for small `y`, where `P` underflows: log-space tail series.
pub fn ln_gamma_p_int(n: u32, y: f64) -> f64 {
    if y <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    if y < nf + 1.0 {
        let log_lead = nf * y.ln() - y - ln_factorial(n as u64);
        let mut term = 1.0;
        let mut acc = 1.0;
        for j in 1..10_000 {
            term *= y / (nf + j as f64);
            acc += term;
            if term < 1e-17 * acc {
                break;
            }
        }
        log_lead + acc.ln()
    } else {
        gamma_p_int(n, y).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_to_infinity};
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Mean of a unit-power Rician envelope by direct quadrature of its pdf.
    fn rician_mean_quadrature(kappa: f64) -> f64 {
        let s2 = 1.0 / (2.0 * (1.0 + kappa)); // per-dimension variance
        let nu = (kappa / (1.0 + kappa)).sqrt();
        let pdf = |r: f64| {
            let z = r * nu / s2;
            r / s2 * (-(r - nu).powi(2) / (2.0 * s2)).exp() * bessel_i0e(z)
        };
        integrate(|r| r * pdf(r), 0.0, nu + 40.0 * s2.sqrt(), 1e-13).unwrap()
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(PI / 2.0) - 2.0 / PI).abs() < 1e-15);
        assert!(sinc(PI).abs() < 1e-15);
    }

    #[test]
    fn bessel_against_quadrature() {
        for &x in &[0.1, 1.0, 5.0, 14.9, 15.1, 40.0, 300.0] {
            let i0 = integrate(|t| (x * (t.cos() - 1.0)).exp(), 0.0, PI, 1e-14).unwrap() / PI;
            let i1 = integrate(|t| (x * (t.cos() - 1.0)).exp() * t.cos(), 0.0, PI, 1e-14).unwrap() / PI;
            assert!(rel(bessel_i0e(x), i0) < 1e-12, "I0e({x})");
            assert!(rel(bessel_i1e(x), i1) < 1e-11, "I1e({x})");
        }
    }

    #[test]
    fn kummer_at_zero_is_one() {
        assert_eq!(kummer_1f1_half(0.0), 1.0);
        assert!((avg_fading_gain(0.0) - PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn kummer_matches_rician_mean() {
        for &k in &[0.5, 1.0, 2.0, 10.0, 29.0, 31.0, 100.0] {
            let q = rician_mean_quadrature(k);
            let a = avg_fading_gain(k);
            assert!(rel(a, q) < 1e-8, "kappa={k}: {a} vs {q}");
        }
    }

    #[test]
    fn kummer_series_meets_bessel_form_at_switch() {
        for &k in &[5.0, 20.0, 30.0] {
            let x = 0.5 * k;
            let bessel = (1.0 + k) * bessel_i0e(x) + k * bessel_i1e(x);
            assert!(rel(kummer_1f1_half(k), bessel) < 1e-11, "kappa={k}");
        }
    }

    #[test]
    fn fading_gain_pure_los_limit() {
        let a = avg_fading_gain(1e9);
        assert!((a - 1.0).abs() < 1e-6);
        assert_eq!(avg_fading_gain(f64::INFINITY), 1.0);
    }

    #[test]
    fn e1_reference_values() {
        assert!(rel(exp_integral_e1(1.0).unwrap(), 0.219_383_934_395_520_3) < 1e-13);
        assert!(rel(exp_integral_e1(0.1).unwrap(), 1.822_923_958_419_390_7) < 1e-13);
        assert!(rel(exp_integral_e1(5.0).unwrap(), 1.148_295_591_275_325_7e-3) < 1e-13);
        assert!(exp_integral_e1(0.0).is_err());
    }

    #[test]
    fn incomplete_gamma_against_quadrature() {
        for &x in &[0.05, 0.5, 1.0, 3.0, 12.0] {
            for k in 0..6u32 {
                let q = integrate_to_infinity(|t| t.powi(-(k as i32) - 1) * (-t).exp(), x, 1e-13)
                    .unwrap();
                let v = upper_incomplete_gamma_negint(k, x).unwrap();
                assert!(rel(v, q) < 1e-8, "k={k} x={x}: {v} vs {q}");
            }
        }
    }

    #[test]
    fn incomplete_gamma_recurrence_consistent() {
        for &x in &[0.3, 2.0, 9.0] {
            for k in 1..8u32 {
                let gk = upper_incomplete_gamma_negint(k, x).unwrap();
                let gk1 = upper_incomplete_gamma_negint(k - 1, x).unwrap();
                // Gamma(a+1, x) = a Gamma(a, x) + x^a e^{-x} with a = -k
                let rebuilt = -(k as f64) * gk + x.powi(-(k as i32)) * (-x).exp();
                assert!(rel(rebuilt, gk1) < 1e-10, "k={k} x={x}");
            }
        }
        assert!(upper_incomplete_gamma_negint(2, 0.0).is_err());
        assert!(upper_incomplete_gamma_negint(2, -1.0).is_err());
    }

    #[test]
    fn gamma_p_against_statrs() {
        for n in 1..10u32 {
            for &y in &[1e-3, 0.1, 1.0, 4.0, 9.5, 10.5, 30.0, 200.0] {
                let v = gamma_p_int(n, y);
                let o = statrs::function::gamma::gamma_lr(n as f64, y);
                assert!((v - o).abs() < 1e-13 + 1e-12 * o, "n={n} y={y}: {v} vs {o}");
            }
        }
        assert_eq!(gamma_p_int(3, 0.0), 0.0);
        assert!((ln_gamma_p_int(5, 1e-6) - (5.0 * 1e-6f64.ln() - ln_factorial(5))).abs() < 1e-5);
    }
}
