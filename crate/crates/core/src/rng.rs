//! Counter-based random streams and complex Gaussian sampling.
//!
//! A run is keyed by one master seed; each Monte Carlo trial gets its own
//! ChaCha stream (the trial index), so results never depend on how trials
//! are spread over worker threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matkernel::{CMatrix, C64};

pub type StreamRng = ChaCha8Rng;

/// Generator for stream `stream` under master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform on `(0, 1]`, safe to take a logarithm of.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// One circularly-symmetric complex Gaussian sample with `E|z|^2 = var`
/// (Box-Muller on the generator's uniforms).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let r = (-var * open_unit(rng).ln()).sqrt();
    let t = 2.0 * PI * rng.random::<f64>();
    C64::new(r * t.cos(), r * t.sin())
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    var: f64,
) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng, var))
}

/// Uniform on `[lo, hi)`.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(7, 3).random()).collect();
        let mut r1 = stream_rng(7, 3);
        let mut r2 = stream_rng(7, 4);
        let x: u64 = r1.random();
        let y: u64 = r2.random();
        assert_eq!(a[0], x);
        assert_ne!(x, y);
    }

    #[test]
    fn complex_normal_moments() {
        let mut rng = stream_rng(1, 0);
        let n = 200_000;
        let var = 2.5;
        let (mut s, mut s2, mut re2) = (C64::new(0.0, 0.0), 0.0, 0.0);
        for _ in 0..n {
            let z = complex_normal(&mut rng, var);
            s += z;
            s2 += z.norm_sqr();
            re2 += z.re * z.re;
        }
        let nf = n as f64;
        assert!((s / nf).norm() < 0.02);
        assert!((s2 / nf / var - 1.0).abs() < 0.02);
        assert!((re2 / nf / (var / 2.0) - 1.0).abs() < 0.02);
    }
}
