//! KS distance between local random circuits and Haar as the circuit grows.
//!
//! `cargo run --release --example ks_convergence -- <trials>`

use qjl::concentration::ks_two_sample;
use qjl::experiments::{circuit_projection_samples, haar_projection_samples};

fn stats(xs: &[f64]) -> (f64, f64) {
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let n = sq.len() as f64;
    let m = sq.iter().sum::<f64>() / n;
    let v = sq.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn main() {
    let trials: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let sizes = [25usize, 50, 100, 250, 1000, 4000];
    for seed in [1u64, 2, 3] {
        let haar = haar_projection_samples(1024, 64, 1, trials, seed * 100).unwrap();
        let (hm, hs) = stats(&haar);
        println!("seed {seed} haar mean {hm:.5} sd {hs:.5}");
        let rows = circuit_projection_samples(10, 64, &sizes, trials, seed * 100 + 1).unwrap();
        for (k, s) in sizes.iter().enumerate() {
            let xs: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let ks = ks_two_sample(&xs, &haar).unwrap();
            let (m, sd) = stats(&xs);
            println!("  s={s:5} KS {:.4} p {:.3} mean {m:.5} sd {sd:.5}", ks.statistic, ks.p_value);
        }
    }
}
