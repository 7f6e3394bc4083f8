#![allow(dead_code)]

use std::path::PathBuf;

/// Determinant by cofactor expansion along the first row.
pub fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[0][j] * det(&minor(m, 0, j))
        })
        .sum()
}

fn minor(m: &[Vec<f64>], row: usize, col: usize) -> Vec<Vec<f64>> {
    m.iter()
        .enumerate()
        .filter(|&(i, _)| i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|&(j, _)| j != col)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

/// Explicit inverse via the adjugate: inv[i][j] = (-1)^(i+j) det(minor(j, i)) / det.
pub fn adjugate_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let d = det(m);
    if n == 1 {
        return vec![vec![1.0 / d]];
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * det(&minor(m, j, i)) / d
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Noise-free SE-kernel posterior computed with the explicit inverse.
pub fn oracle_posterior(
    times: &[f64],
    loads: &[f64],
    query: f64,
    lengthscale: f64,
    jitter: f64,
) -> (f64, f64) {
    let k = |a: f64, b: f64| (-(a - b) * (a - b) / (2.0 * lengthscale * lengthscale)).exp();
    let gram: Vec<Vec<f64>> = times
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            times
                .iter()
                .enumerate()
                .map(|(j, &b)| k(a, b) + if i == j { jitter } else { 0.0 })
                .collect()
        })
        .collect();
    let inv = adjugate_inverse(&gram);
    let cross: Vec<f64> = times.iter().map(|&t| k(t, query)).collect();
    let w = mat_vec(&inv, &cross);
    let mean = w.iter().zip(loads).map(|(a, b)| a * b).sum();
    let var = 1.0 - w.iter().zip(&cross).map(|(a, b)| a * b).sum::<f64>();
    (mean, var)
}

pub fn repo_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}
