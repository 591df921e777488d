//! Per-sweep cost of the instantaneous-CSI design grows linearly in `L`.

use std::time::Instant;

use riszf_core::channel::draw_channels;
use riszf_core::phasedesign::instant_sweep;
use riszf_core::rng::stream_rng;
use riszf_core::{PhaseSet, SystemConfig};

fn sweep_seconds(l: usize) -> impl FnMut() -> f64 {
    let cfg = SystemConfig::default().with_dims(2, 4, l);
    let set = PhaseSet::new(cfg.q);
    let base = draw_channels(&cfg, &mut stream_rng(3, 0));
    move || {
        let mut real = base.clone();
        let start = Instant::now();
        for _ in 0..10 {
            instant_sweep(&mut real, set).unwrap();
        }
        start.elapsed().as_secs_f64()
    }
}

#[test]
fn sweep_cost_is_linear_in_elements() {
    // interleaved runs and minimum times keep background load out of the ratio
    let (mut small, mut large) = (sweep_seconds(64), sweep_seconds(128));
    let (mut t64, mut t128) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..300 {
        t64 = t64.min(small());
        t128 = t128.min(large());
    }
    let ratio = t128 / t64;
    println!("time(L=128) / time(L=64) = {ratio:.3}");
    assert!((1.6..=2.6).contains(&ratio), "ratio {ratio}");
}
