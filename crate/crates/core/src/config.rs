//! System parameters shared by every module.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resolution used to stand in for an unquantized surface (`q -> inf`).
pub const Q_INFINITE: u32 = 60;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Uniform planar array dimensions (vertical x horizontal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Upa {
    pub v: usize,
    pub h: usize,
}

impl Upa {
    pub fn new(v: usize, h: usize) -> Upa {
        Upa { v, h }
    }

    pub fn count(&self) -> usize {
        self.v * self.h
    }

    /// Picks the most square factorisation `v x h` of `n` with `v >= h`.
    pub fn squarest(n: usize) -> Upa {
        let mut h = (n as f64).sqrt().floor() as usize;
        while h > 1 && !n.is_multiple_of(h) {
            h -= 1;
        }
        let h = h.max(1);
        Upa { v: n / h, h }
    }
}

/// Elevation `theta` and azimuth `psi` of one array, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub theta: f64,
    pub psi: f64,
}

impl Angles {
    pub const ZERO: Angles = Angles { theta: 0.0, psi: 0.0 };
}

/// The four steering contexts: receiver and surface sides of the
/// surface-to-receiver link, surface and transmitter sides of the
/// transmitter-to-surface link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngles {
    pub rx: Angles,
    pub lris_rx: Angles,
    pub lris_tx: Angles,
    pub tx: Angles,
}

impl SteeringAngles {
    pub const ZERO: SteeringAngles = SteeringAngles {
        rx: Angles::ZERO,
        lris_rx: Angles::ZERO,
        lris_tx: Angles::ZERO,
        tx: Angles::ZERO,
    };

    /// All eight angles uniform on `[0, 2pi)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> SteeringAngles {
        let mut draw = || Angles {
            theta: rng.random::<f64>() * 2.0 * PI,
            psi: rng.random::<f64>() * 2.0 * PI,
        };
        SteeringAngles {
            rx: draw(),
            lris_rx: draw(),
            lris_tx: draw(),
            tx: draw(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Transmit antennas.
    pub m: usize,
    /// Receive antennas.
    pub n: usize,
    /// Surface elements.
    pub l: usize,
    /// Phase resolution in bits.
    pub q: u32,
    /// Transmit SNR, linear.
    pub p: f64,
    pub beta_ub: f64,
    pub beta_lb: f64,
    pub beta_ul: f64,
    pub kappa_h: f64,
    pub kappa_g: f64,
    pub upa_tx: Upa,
    pub upa_rx: Upa,
    pub upa_lris: Upa,
    pub angles: SteeringAngles,
    /// Coherence time in samples.
    pub coherence_time: u64,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            m: 4,
            n: 8,
            l: 256,
            q: 2,
            p: db_to_linear(10.0),
            beta_ub: 1e-4,
            beta_lb: 1e-2,
            beta_ul: 1e-1,
            kappa_h: db_to_linear(3.0),
            kappa_g: db_to_linear(3.0),
            upa_tx: Upa::new(2, 2),
            upa_rx: Upa::new(4, 2),
            upa_lris: Upa::new(16, 16),
            angles: SteeringAngles::ZERO,
            coherence_time: 1200,
            seed: 1,
        }
    }
}

impl SystemConfig {
    /// Sets the antenna counts and picks matching array shapes.
    pub fn with_dims(mut self, m: usize, n: usize, l: usize) -> Self {
        self.m = m;
        self.n = n;
        self.l = l;
        self.upa_tx = Upa::squarest(m);
        self.upa_rx = Upa::squarest(n);
        self.upa_lris = Upa::squarest(l);
        self
    }

    pub fn set_l(&mut self, l: usize) {
        self.l = l;
        self.upa_lris = Upa::squarest(l);
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa_h = kappa;
        self.kappa_g = kappa;
        self
    }

    /// A random valid configuration (`N >= M`, `L` in 16..300, finite
    /// Rician factors, random angles) for property checks.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> SystemConfig {
        let m = rng.random_range(1..5);
        let n = m + rng.random_range(0..5);
        let l = rng.random_range(16..300);
        let mut cfg = SystemConfig::default().with_dims(m, n, l);
        cfg.q = rng.random_range(1..5);
        cfg.p = 10f64.powf(rng.random_range(-1.0..3.0));
        cfg.beta_ub = 10f64.powf(rng.random_range(-5.0..-1.0));
        cfg.beta_lb = 10f64.powf(rng.random_range(-3.0..0.0));
        cfg.beta_ul = 10f64.powf(rng.random_range(-3.0..0.0));
        cfg.kappa_h = rng.random_range(0.0..20.0);
        cfg.kappa_g = rng.random_range(0.0..20.0);
        cfg.angles = SteeringAngles::random(rng);
        cfg
    }

    pub fn p_db(&self) -> f64 {
        linear_to_db(self.p)
    }

    pub fn beta_cascade(&self) -> f64 {
        self.beta_lb * self.beta_ul
    }

    /// Returns every violated invariant at once.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.m < 1 {
            v.push("M must be >= 1".to_string());
        }
        if self.n < self.m {
            v.push(format!("N ({}) must be >= M ({})", self.n, self.m));
        }
        if self.l < 1 {
            v.push("L must be >= 1".to_string());
        }
        if self.q < 1 || self.q > Q_INFINITE {
            v.push(format!("q must lie in 1..={Q_INFINITE}, got {}", self.q));
        }
        if !(self.p > 0.0) || !self.p.is_finite() {
            v.push(format!("p must be positive and finite, got {}", self.p));
        }
        for (name, b) in [
            ("beta_UB", self.beta_ub),
            ("beta_LB", self.beta_lb),
            ("beta_UL", self.beta_ul),
        ] {
            if !(b > 0.0) || !b.is_finite() {
                v.push(format!("{name} must be positive and finite, got {b}"));
            }
        }
        for (name, k) in [("kappa_H", self.kappa_h), ("kappa_G", self.kappa_g)] {
            if !(k >= 0.0) {
                v.push(format!("{name} must be >= 0, got {k}"));
            }
        }
        for (name, upa, count) in [
            ("tx", self.upa_tx, self.m),
            ("rx", self.upa_rx, self.n),
            ("lris", self.upa_lris, self.l),
        ] {
            if upa.count() != count {
                v.push(format!(
                    "{name} UPA {}x{} does not multiply to {count}",
                    upa.v, upa.h
                ));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}
