//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use dspinn::optimize::LbfgsConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SPD matrix `Qᵀ diag(λ) Q` with eigenvalues spread over `[1, cond]`.
pub fn spd(n: usize, cond: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // random orthogonal matrix by Gram-Schmidt
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for u in &q {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-3 {
            q.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    let lambda: Vec<f64> = (0..n)
        .map(|i| cond.powf(i as f64 / (n - 1) as f64))
        .collect();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = (0..n).map(|k| q[k][i] * lambda[k] * q[k][j]).sum();
        }
    }
    a
}

/// Gaussian elimination with partial pivoting.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut r = r.clone();
            r.push(*bi);
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..=n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

/// `½(θ-θ*)ᵀA(θ-θ*)` with `b = Aθ*`; the minimum value is exactly zero.
pub fn quadratic(
    a: Vec<Vec<f64>>,
    star: Vec<f64>,
) -> impl FnMut(&[f64]) -> dspinn::Result<(f64, Vec<f64>)> {
    move |x: &[f64]| {
        let e: Vec<f64> = x.iter().zip(&star).map(|(p, q)| p - q).collect();
        let g: Vec<f64> = a
            .iter()
            .map(|r| r.iter().zip(&e).map(|(p, q)| p * q).sum())
            .collect();
        let f = 0.5 * g.iter().zip(&e).map(|(p, q)| p * q).sum::<f64>();
        Ok((f, g))
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn exact_line_search_cfg() -> LbfgsConfig {
    LbfgsConfig {
        grad_tol: 1e-12,
        rel_reduction_tol: 0.0,
        wolfe_c2: 1e-3,
        ..Default::default()
    }
}
