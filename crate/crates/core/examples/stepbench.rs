//! Micro-benchmark for the sampling hot loop components.
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::time::Instant;

fn main() {
    let entry = kramers_core::potential::catalog_entry("double_well").unwrap();
    let field = kramers_core::PotentialField::new(
        entry.spec_with(&[("s".to_string(), 0.05)].into()).unwrap(),
    );
    let n = 20_000_000usize;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = Instant::now();
    let mut acc = 0.0_f64;
    for _ in 0..n {
        let xi: f64 = rng.sample(StandardNormal);
        acc += xi;
    }
    println!(
        "rng only: {:.1} ns/draw (acc {acc:.3})",
        t.elapsed().as_nanos() as f64 / n as f64
    );

    let t = Instant::now();
    let mut x = [0.5_f64];
    let mut acc2 = 0.0;
    for i in 0..n {
        let (_, g) = field.value_grad(&x).unwrap();
        acc2 += g[0];
        x[0] = -1.0 + ((i % 1000) as f64) * 0.002;
    }
    println!(
        "grad only: {:.1} ns/eval (acc {acc2:.3})",
        t.elapsed().as_nanos() as f64 / n as f64
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = Instant::now();
    let mut pos = -1.0_f64;
    for _ in 0..n {
        let (_, g) = field.value_grad(&[pos]).unwrap();
        let xi: f64 = rng.sample(StandardNormal);
        pos = pos - g[0] * 0.003 + 0.03 * xi;
        if !(-2.0..2.0).contains(&pos) {
            pos = -1.0;
        }
    }
    println!(
        "full step: {:.1} ns/step (pos {pos:.3})",
        t.elapsed().as_nanos() as f64 / n as f64
    );
}
