//! Steering vectors, line-of-sight matrices and random channel draws.
//!
//! Notation: `H_D` (N x M) is the direct link, `H` (N x L) the
//! surface-to-receiver link and `G` (L x M) the transmitter-to-surface link.
//! The composite channel is `H_tot = H_D + H diag(e^{j phi}) G`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Angles, SystemConfig};
use crate::matkernel::{kron, matmul, CMatrix, C64};
use crate::rng::{complex_normal, uniform};

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

/// Unit-norm UPA response: vertical phase ramp `pi sin(theta)` Kronecker
/// horizontal ramp `pi sin(psi) cos(theta)`.
pub fn steering_vector(fv: usize, fh: usize, theta: f64, psi: f64) -> Vec<C64> {
    let ramp = |n: usize, step: f64| -> Vec<C64> {
        (0..n)
            .map(|k| C64::from_polar(1.0, PI * k as f64 * step))
            .collect()
    };
    let vert = ramp(fv, theta.sin());
    let horiz = ramp(fh, psi.sin() * theta.cos());
    let scale = 1.0 / ((fv * fh) as f64).sqrt();
    kron(&vert, &horiz).into_iter().map(|z| z * scale).collect()
}

fn steering(upa: crate::config::Upa, a: Angles) -> Vec<C64> {
    steering_vector(upa.v, upa.h, a.theta, a.psi)
}

/// Rank-one line-of-sight matrix `rx tx^H`.
pub fn los_matrix(rx_steer: &[C64], tx_steer: &[C64]) -> CMatrix {
    CMatrix::outer(rx_steer, tx_steer)
}

/// Unit-norm surface-to-receiver LoS matrix (N x L).
pub fn los_lb(cfg: &SystemConfig) -> CMatrix {
    los_matrix(
        &steering(cfg.upa_rx, cfg.angles.rx),
        &steering(cfg.upa_lris, cfg.angles.lris_rx),
    )
}

/// Unit-norm transmitter-to-surface LoS matrix (L x M).
pub fn los_ul(cfg: &SystemConfig) -> CMatrix {
    los_matrix(
        &steering(cfg.upa_lris, cfg.angles.lris_tx),
        &steering(cfg.upa_tx, cfg.angles.tx),
    )
}

/// LoS matrices rescaled to unit-modulus entries.
pub fn los_unit_matrices(cfg: &SystemConfig) -> (CMatrix, CMatrix) {
    let lb = los_lb(cfg).scale_real(((cfg.n * cfg.l) as f64).sqrt());
    let ul = los_ul(cfg).scale_real(((cfg.l * cfg.m) as f64).sqrt());
    (lb, ul)
}

/// `(sqrt(k/(1+k)), sqrt(1/(1+k)))`, with the pure-LoS limit for `k = inf`.
pub fn rician_weights(kappa: f64) -> (f64, f64) {
    if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (1.0 + kappa)).sqrt(), (1.0 / (1.0 + kappa)).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub h_d: CMatrix,
    pub h: CMatrix,
    pub g: CMatrix,
    pub phases: Vec<f64>,
    pub h_tot: CMatrix,
}

impl ChannelRealization {
    pub fn new(h_d: CMatrix, h: CMatrix, g: CMatrix, phases: Vec<f64>) -> ChannelRealization {
        assert_eq!(h.cols(), phases.len());
        assert_eq!(g.rows(), phases.len());
        let phases: Vec<f64> = phases.into_iter().map(wrap_phase).collect();
        let h_tot = assemble(&h_d, &h, &g, &phases);
        ChannelRealization {
            h_d,
            h,
            g,
            phases,
            h_tot,
        }
    }

    pub fn l(&self) -> usize {
        self.phases.len()
    }

    /// Column `l` of `H`.
    pub fn h_col(&self, l: usize) -> Vec<C64> {
        self.h.column(l)
    }

    /// Row `l` of `G` (the vector `g_l^H`).
    pub fn g_row(&self, l: usize) -> &[C64] {
        self.g.row(l)
    }

    /// Rank-one cascade term of element `l` without its phase: `h_l g_l^H`.
    pub fn cascade_term(&self, l: usize) -> CMatrix {
        let h = self.h_col(l);
        let g = self.g_row(l);
        CMatrix::from_fn(h.len(), g.len(), |i, j| h[i] * g[j])
    }

    /// Changes one phase and updates `H_tot` by a rank-one correction.
    pub fn set_phase(&mut self, l: usize, phi: f64) {
        let phi = wrap_phase(phi);
        let delta = C64::from_polar(1.0, phi) - C64::from_polar(1.0, self.phases[l]);
        self.phases[l] = phi;
        if delta == C64::new(0.0, 0.0) {
            return;
        }
        let (n, m) = self.h_tot.shape();
        for i in 0..n {
            let hi = delta * self.h[(i, l)];
            for j in 0..m {
                self.h_tot[(i, j)] += hi * self.g[(l, j)];
            }
        }
    }

    /// Replaces the whole phase vector and reassembles `H_tot`.
    pub fn set_phases(&mut self, phases: &[f64]) {
        assert_eq!(phases.len(), self.l());
        self.phases = phases.iter().map(|&p| wrap_phase(p)).collect();
        self.h_tot = assemble(&self.h_d, &self.h, &self.g, &self.phases);
    }
}

fn assemble(h_d: &CMatrix, h: &CMatrix, g: &CMatrix, phases: &[f64]) -> CMatrix {
    if phases.is_empty() {
        return h_d.clone();
    }
    let h_phi = CMatrix::from_fn(h.rows(), h.cols(), |i, l| {
        h[(i, l)] * C64::from_polar(1.0, phases[l])
    });
    &matmul(&h_phi, g).expect("H and G inner dimensions agree") + h_d
}

/// `H_D + H diag(e^{j phi}) G`.
pub fn assemble_total(real: &ChannelRealization) -> CMatrix {
    assemble(&real.h_d, &real.h, &real.g, &real.phases)
}

/// Same composite channel written as `H_D + sum_l e^{j phi_l} h_l g_l^H`.
pub fn assemble_rank_one_sum(real: &ChannelRealization) -> CMatrix {
    let mut out = real.h_d.clone();
    for l in 0..real.l() {
        let t = C64::from_polar(1.0, real.phases[l]);
        let g: Vec<C64> = real.g_row(l).iter().map(|z| z.conj()).collect();
        out.add_outer_scaled(t, &real.h_col(l), &g);
    }
    out
}

/// Draws channels for a fixed configuration, reusing the LoS matrices.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    cfg: SystemConfig,
    los_lb_unit: CMatrix,
    los_ul_unit: CMatrix,
}

impl ChannelSampler {
    pub fn new(cfg: &SystemConfig) -> ChannelSampler {
        let (los_lb_unit, los_ul_unit) = los_unit_matrices(cfg);
        ChannelSampler {
            cfg: cfg.clone(),
            los_lb_unit,
            los_ul_unit,
        }
    }

    pub fn los_lb_unit(&self) -> &CMatrix {
        &self.los_lb_unit
    }

    pub fn los_ul_unit(&self) -> &CMatrix {
        &self.los_ul_unit
    }

    /// Draws `(H_D, H, G)` with all phases at zero.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let c = &self.cfg;
        let h_d = CMatrix::from_fn(c.n, c.m, |_, _| complex_normal(rng, c.beta_ub));
        let h = rician(&self.los_lb_unit, c.kappa_h, c.beta_lb, rng);
        let g = rician(&self.los_ul_unit, c.kappa_g, c.beta_ul, rng);
        ChannelRealization::new(h_d, h, g, vec![0.0; c.l])
    }
}

fn rician<R: Rng + ?Sized>(los_unit: &CMatrix, kappa: f64, beta: f64, rng: &mut R) -> CMatrix {
    let (w_los, w_scat) = rician_weights(kappa);
    let sb = beta.sqrt();
    CMatrix::from_fn(los_unit.rows(), los_unit.cols(), |i, j| {
        let scatter = complex_normal(rng, 1.0);
        (los_unit[(i, j)] * w_los + scatter * w_scat) * sb
    })
}

pub fn draw_channels<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelRealization {
    ChannelSampler::new(cfg).draw(rng)
}

/// Magnitude of a unit-power Rician variable with factor `kappa`.
pub fn rician_magnitude<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    let (w_los, w_scat) = rician_weights(kappa);
    (complex_normal(rng, 1.0) * w_scat + w_los).norm()
}

/// Samples of the cascaded envelope `|sum_l |h_l| |g_l| e^{j w_l}|` with
/// unit-power Rician magnitudes and quantisation mismatch `w_l` uniform on
/// `[-2^-q pi, 2^-q pi]`.
pub fn cascade_entry_magnitude_samples<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    rng: &mut R,
    count: usize,
) -> Vec<f64> {
    let half_width = PI * 2f64.powi(-(cfg.q as i32));
    (0..count)
        .map(|_| {
            let mut acc = C64::new(0.0, 0.0);
            for _ in 0..cfg.l {
                let a = rician_magnitude(cfg.kappa_h, rng) * rician_magnitude(cfg.kappa_g, rng);
                let w = uniform(rng, -half_width, half_width);
                acc += C64::from_polar(a, w);
            }
            acc.norm()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{SteeringAngles, Upa};
    use crate::matkernel::det;
    use crate::rng::stream_rng;

    fn small_cfg() -> SystemConfig {
        let mut cfg = SystemConfig::default().with_dims(2, 3, 4);
        cfg.angles = SteeringAngles::random(&mut stream_rng(11, 0));
        cfg
    }

    #[test]
    fn steering_examples() {
        let v = steering_vector(2, 1, 0.0, 0.0);
        let s = 1.0 / 2f64.sqrt();
        assert!((v[0] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((v[1] - C64::new(s, 0.0)).norm() < 1e-15);
        assert_eq!(steering_vector(1, 1, 1.3, -0.4), vec![C64::new(1.0, 0.0)]);
        let v = steering_vector(2, 2, PI / 6.0, 0.0);
        let expect = [0.0, 0.0, PI / 2.0, PI / 2.0];
        for (z, e) in v.iter().zip(expect) {
            assert!((z.norm() - 0.5).abs() < 1e-15);
            assert!((z.arg() - e).abs() < 1e-12, "{z}");
        }
    }

    #[test]
    fn steering_unit_norm() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..50 {
            let fv = rng.random_range(1..9);
            let fh = rng.random_range(1..9);
            let v = steering_vector(fv, fh, uniform(&mut rng, 0.0, 7.0), uniform(&mut rng, 0.0, 7.0));
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn los_examples() {
        let a = steering_vector(2, 1, 0.0, 0.0);
        let m = los_matrix(&a, &a);
        for z in m.as_slice() {
            assert!((z - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
        assert!((m.frobenius_norm() - 1.0).abs() < 1e-12);
        let cfg = small_cfg();
        for m in [los_lb(&cfg), los_ul(&cfg)] {
            assert!((m.frobenius_norm() - 1.0).abs() < 1e-12);
            // rank one: every 2x2 minor of the Gram matrix vanishes
            let g = m.gram();
            let minor = CMatrix::from_fn(2, 2, |i, j| g[(i, j)]);
            assert!(det(&minor).unwrap().norm() < 1e-12);
        }
        let (lb, ul) = los_unit_matrices(&cfg);
        for z in lb.as_slice().iter().chain(ul.as_slice()) {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rayleigh_power_matches_beta() {
        let cfg = SystemConfig {
            beta_lb: 0.3,
            ..SystemConfig::default().with_dims(1, 1, 1)
        }
        .with_kappa(0.0);
        let mut rng = stream_rng(5, 0);
        let sampler = ChannelSampler::new(&cfg);
        let n = 100_000;
        let s: f64 = (0..n).map(|_| sampler.draw(&mut rng).h[(0, 0)].norm_sqr()).sum();
        assert!((s / n as f64 / 0.3 - 1.0).abs() < 0.02);
    }

    #[test]
    fn per_link_variance_z_test() {
        let cfg = SystemConfig {
            beta_ub: 0.2,
            beta_lb: 0.5,
            beta_ul: 2.0,
            ..SystemConfig::default().with_dims(1, 1, 1)
        }
        .with_kappa(4.0);
        let mut rng = stream_rng(6, 0);
        let sampler = ChannelSampler::new(&cfg);
        let n = 100_000;
        let (mut d, mut h, mut g) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n {
            let r = sampler.draw(&mut rng);
            d.push(r.h_d[(0, 0)].norm_sqr());
            h.push(r.h[(0, 0)].norm_sqr());
            g.push(r.g[(0, 0)].norm_sqr());
        }
        for (xs, beta) in [(d, 0.2), (h, 0.5), (g, 2.0)] {
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let z = (mean - beta) / (var / n as f64).sqrt();
            assert!(z.abs() < 4.0, "z = {z}");
        }
    }

    #[test]
    fn huge_kappa_approaches_los() {
        let cfg = small_cfg().with_kappa(1e9);
        let sampler = ChannelSampler::new(&cfg);
        let r = sampler.draw(&mut stream_rng(2, 0));
        let scaled = r.h.scale_real(1.0 / cfg.beta_lb.sqrt());
        assert!(scaled.max_abs_diff(sampler.los_lb_unit()) < 1e-3);
    }

    #[test]
    fn draws_are_deterministic() {
        let cfg = small_cfg();
        let a = draw_channels(&cfg, &mut stream_rng(9, 1));
        let b = draw_channels(&cfg, &mut stream_rng(9, 1));
        assert_eq!(a, b);
    }

    #[test]
    fn assembly_paths_agree() {
        let cfg = small_cfg();
        let mut r = draw_channels(&cfg, &mut stream_rng(4, 0));
        r.set_phases(&[0.3, -1.2, 2.9, -3.0]);
        let diff = assemble_total(&r).max_abs_diff(&assemble_rank_one_sum(&r));
        assert!(diff < 1e-12);
        assert!(r.h_tot.max_abs_diff(&assemble_total(&r)) < 1e-12);
    }

    #[test]
    fn single_element_and_empty_sum() {
        let cfg = SystemConfig::default().with_dims(1, 2, 1);
        let r = draw_channels(&cfg, &mut stream_rng(1, 0));
        let expect = &r.h_d + &matmul(&r.h, &r.g).unwrap();
        assert!(r.h_tot.max_abs_diff(&expect) < 1e-15);
        let empty = ChannelRealization::new(
            r.h_d.clone(),
            CMatrix::zeros(2, 0),
            CMatrix::zeros(0, 1),
            vec![],
        );
        assert_eq!(assemble_total(&empty), r.h_d);
    }

    #[test]
    fn incremental_phase_update_matches_reassembly() {
        let cfg = small_cfg();
        let mut r = draw_channels(&cfg, &mut stream_rng(8, 0));
        r.set_phase(2, 1.7);
        r.set_phase(0, -0.4);
        assert!(r.h_tot.max_abs_diff(&assemble_total(&r)) < 1e-12);
    }

    #[test]
    fn global_phase_rotates_only_cascade() {
        let cfg = small_cfg();
        let mut r = draw_channels(&cfg, &mut stream_rng(10, 0));
        let phases = vec![0.1, 0.7, -2.0, 1.1];
        r.set_phases(&phases);
        let cascade = &r.h_tot - &r.h_d;
        let shifted: Vec<f64> = phases.iter().map(|p| p + 0.9).collect();
        r.set_phases(&shifted);
        let rotated = cascade.scale(C64::from_polar(1.0, 0.9));
        assert!((&r.h_tot - &r.h_d).max_abs_diff(&rotated) < 1e-12);
    }

    #[test]
    fn phases_wrap_into_range() {
        for phi in [-10.0, -PI, 0.0, PI, 3.0 * PI, 1e3] {
            let w = wrap_phase(phi);
            assert!((-PI..PI).contains(&w), "{phi} -> {w}");
            assert!(((phi - w) / (2.0 * PI)).fract().abs() < 1e-9 || ((phi - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn coherent_cascade_envelope() {
        let cfg = SystemConfig {
            q: crate::config::Q_INFINITE,
            upa_lris: Upa::new(16, 1),
            l: 16,
            ..SystemConfig::default()
        }
        .with_kappa(f64::INFINITY);
        let s = cascade_entry_magnitude_samples(&cfg, &mut stream_rng(1, 0), 10);
        for x in s {
            assert!((x - 16.0).abs() < 1e-12);
        }
    }
}
