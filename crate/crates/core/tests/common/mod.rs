#![allow(dead_code)]

use rand::Rng;
use resetclock::{DeltaDistribution, JumpDistribution, StochasticClock};

/// Expected absorption times on `lower + 1 ..= upper - 1` by dense Gaussian
/// elimination with partial pivoting. `law` lists `(k, P(Δ = k))`.
#[allow(clippy::needless_range_loop)]
pub fn dense_absorption(law: &[(i64, f64)], lower: i64, upper: i64) -> Vec<f64> {
    let n = (upper - lower - 1) as usize;
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 1.0;
        row[n] = 1.0;
        let z = lower + 1 + i as i64;
        for &(k, p) in law {
            let t = z + k;
            if t > lower && t < upper {
                row[(t - lower - 1) as usize] -= p;
            }
        }
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    x
}

pub fn law_of(delta: &DeltaDistribution) -> Vec<(i64, f64)> {
    let m = delta.max_offset() as i64;
    (-m..=m).map(|k| (k, delta.prob(k))).collect()
}

/// Symmetric increment law with support up to `m`; every `P(Δ = ±k)` is positive.
pub fn random_symmetric<R: Rng>(rng: &mut R, m: usize) -> DeltaDistribution {
    let raw: Vec<f64> = (0..=m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total = raw[0] + 2.0 * raw[1..].iter().sum::<f64>();
    let tail: Vec<f64> = raw[1..].iter().map(|w| w / total).collect();
    let stay = 1.0 - 2.0 * tail.iter().sum::<f64>();
    DeltaDistribution::symmetric(stay, &tail).unwrap()
}

/// Offset law on `0..=m` with `P(0) = 1 - epsilon` and positive mass on `m`.
pub fn random_clock<R: Rng>(rng: &mut R, d: usize, m: usize, epsilon: f64) -> StochasticClock {
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut probs = vec![1.0 - epsilon];
    probs.extend(raw.iter().map(|w| epsilon * w / total));
    StochasticClock::new(JumpDistribution::new(d, probs).unwrap(), 0).unwrap()
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
