//! Fixed-kernel Gaussian-process regression over short per-channel histories.
//!
//! Everything here is a pure function of its inputs. Histories hold at most a
//! handful of points, so the Gram matrix is factored directly with a dense
//! Cholesky decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measurement-round index. One unit is one measurement round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Round(pub u64);

impl Round {
    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl std::fmt::Display for Round {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

pub const DEFAULT_LENGTHSCALE: f64 = 1.0;
pub const DEFAULT_JITTER: f64 = 1e-8;

/// Negative variances smaller than this in magnitude are treated as round-off.
const VARIANCE_ROUNDOFF: f64 = 1e-9;

/// Squared-exponential kernel settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    lengthscale: f64,
    jitter: f64,
}

impl KernelParams {
    pub fn new(lengthscale: f64, jitter: f64) -> Result<Self> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::Config(format!(
                "lengthscale must be positive and finite, got {lengthscale}"
            )));
        }
        if !(jitter > 0.0 && jitter < 1e-3) {
            return Err(Error::Config(format!(
                "jitter must lie in (0, 1e-3), got {jitter}"
            )));
        }
        Ok(Self {
            lengthscale,
            jitter,
        })
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            lengthscale: DEFAULT_LENGTHSCALE,
            jitter: DEFAULT_JITTER,
        }
    }
}

/// `exp(-(a - b)^2 / (2 l^2))`.
pub fn kernel(a: Round, b: Round, params: &KernelParams) -> f64 {
    let d = a.as_f64() - b.as_f64();
    (-(d * d) / (2.0 * params.lengthscale * params.lengthscale)).exp()
}

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    /// Builds a matrix from row-major entries. Symmetry is checked, definiteness is not.
    pub fn from_rows(size: usize, entries: Vec<f64>) -> Result<Self> {
        if size == 0 || entries.len() != size * size {
            return Err(Error::Precondition(format!(
                "expected {size}x{size} entries, got {}",
                entries.len()
            )));
        }
        for i in 0..size {
            for j in 0..i {
                if entries[i * size + j] != entries[j * size + i] {
                    return Err(Error::Precondition(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }
}

fn check_increasing(times: &[Round]) -> Result<()> {
    if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(format!(
            "timestamps must be strictly increasing, found {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Kernel matrix over `times`, with `jitter` added to the diagonal.
pub fn gram(times: &[Round], params: &KernelParams) -> Result<GramMatrix> {
    if times.is_empty() {
        return Err(Error::Precondition(
            "gram matrix needs at least one timestamp".into(),
        ));
    }
    check_increasing(times)?;
    let n = times.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut k = kernel(times[i], times[j], params);
            if i == j {
                k += params.jitter;
            }
            entries[i * n + j] = k;
            entries[j * n + i] = k;
        }
    }
    Ok(GramMatrix { size: n, entries })
}

/// Lower-triangular Cholesky factor, row-major.
struct Cholesky {
    size: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    fn factor(m: &GramMatrix) -> Result<Self> {
        let n = m.size;
        let mut lower = vec![0.0; n * n];
        for j in 0..n {
            let mut pivot = m.get(j, j);
            for k in 0..j {
                pivot -= lower[j * n + k] * lower[j * n + k];
            }
            if pivot.is_nan() || pivot <= 0.0 {
                return Err(Error::NonPositivePivot {
                    pivot: j,
                    value: pivot,
                });
            }
            let diag = pivot.sqrt();
            lower[j * n + j] = diag;
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= lower[i * n + k] * lower[j * n + k];
                }
                lower[i * n + j] = s / diag;
            }
        }
        Ok(Self { size: n, lower })
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.size;
        // L y = b
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
        // L^T x = y
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
        x
    }
}

/// Solves `m x = rhs` for a symmetric positive definite `m` via Cholesky.
pub fn solve_spd(m: &GramMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.size {
        return Err(Error::Precondition(format!(
            "rhs has length {}, matrix is {}x{}",
            rhs.len(),
            m.size,
            m.size
        )));
    }
    Ok(Cholesky::factor(m)?.solve(rhs))
}

/// Gaussian posterior for one channel's load at a query round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    /// Unclamped posterior mean.
    pub mean: f64,
    pub variance: f64,
}

impl Posterior {
    /// Zero-mean, unit-variance prior.
    pub const PRIOR: Posterior = Posterior {
        mean: 0.0,
        variance: 1.0,
    };

    /// Mean clamped to the valid load range `[0, 1]`.
    pub fn clamped_mean(&self) -> f64 {
        self.mean.clamp(0.0, 1.0)
    }
}

/// Noise-free GP posterior at `query` given `(round, load)` samples.
///
/// Samples must be strictly increasing in round and no later than `query`.
/// An empty history yields [`Posterior::PRIOR`].
pub fn posterior(
    history: &[(Round, f64)],
    query: Round,
    params: &KernelParams,
) -> Result<Posterior> {
    if history.is_empty() {
        return Ok(Posterior::PRIOR);
    }
    let times: Vec<Round> = history.iter().map(|&(t, _)| t).collect();
    if let Some(&last) = times.last() {
        if query < last {
            return Err(Error::Precondition(format!(
                "query round {query} precedes history round {last}"
            )));
        }
    }
    let k = gram(&times, params)?;
    let chol = Cholesky::factor(&k)?;
    let cross: Vec<f64> = times.iter().map(|&t| kernel(t, query, params)).collect();
    let loads: Vec<f64> = history.iter().map(|&(_, l)| l).collect();

    let alpha = chol.solve(&loads);
    let mean = dot(&cross, &alpha);

    let beta = chol.solve(&cross);
    let mut variance = 1.0 - dot(&cross, &beta);
    if variance < 0.0 {
        if variance < -VARIANCE_ROUNDOFF {
            return Err(Error::NegativeVariance(variance));
        }
        variance = 0.0;
    }
    Ok(Posterior { mean, variance })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_HALF: f64 = 0.606_530_659_712_633_4; // exp(-0.5)

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn kernel_values() {
        let p = KernelParams::default();
        assert_eq!(kernel(Round(5), Round(5), &p), 1.0);
        close(kernel(Round(0), Round(1), &p), E_HALF, 1e-15);
        let p2 = KernelParams::new(2.0, 1e-8).unwrap();
        close(
            kernel(Round(0), Round(2), &p2),
            kernel(Round(0), Round(1), &p),
            1e-15,
        );
    }

    #[test]
    fn params_validation() {
        assert!(KernelParams::new(0.0, 1e-8).is_err());
        assert!(KernelParams::new(-1.0, 1e-8).is_err());
        assert!(KernelParams::new(1.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, 1e-3).is_err());
        assert!(KernelParams::new(1.0, 1e-4).is_ok());
    }

    #[test]
    fn gram_entries() {
        let p = KernelParams::default();
        let g = gram(&[Round(0)], &p).unwrap();
        assert_eq!(g.get(0, 0), 1.0 + 1e-8);

        let g = gram(&[Round(0), Round(1)], &p).unwrap();
        assert_eq!(g.get(0, 0), 1.0 + 1e-8);
        assert_eq!(g.get(1, 1), 1.0 + 1e-8);
        close(g.get(0, 1), E_HALF, 1e-15);
        assert_eq!(g.get(0, 1), g.get(1, 0));

        let g = gram(&[Round(0), Round(10)], &p).unwrap();
        close(g.get(0, 1), (-50.0f64).exp(), 1e-35);
        close(g.get(0, 1), 1.928_749_847_963_918e-22, 1e-34);
    }

    #[test]
    fn gram_rejects_bad_times() {
        let p = KernelParams::default();
        assert!(matches!(gram(&[], &p), Err(Error::Precondition(_))));
        assert!(matches!(
            gram(&[Round(2), Round(2)], &p),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            gram(&[Round(3), Round(1)], &p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn solve_identity_and_two_by_two() {
        let id = GramMatrix::from_rows(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(solve_spd(&id, &[0.3, 0.7]).unwrap(), vec![0.3, 0.7]);

        let m = GramMatrix::from_rows(2, vec![1.0, 0.5, 0.5, 1.0]).unwrap();
        let x = solve_spd(&m, &[1.0, 0.0]).unwrap();
        close(x[0], 4.0 / 3.0, 1e-14);
        close(x[1], -2.0 / 3.0, 1e-14);
    }

    #[test]
    fn solve_reports_pivot() {
        let m = GramMatrix::from_rows(2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        match solve_spd(&m, &[1.0, 1.0]) {
            Err(Error::NonPositivePivot { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("unexpected {other:?}"),
        }
        let m = GramMatrix::from_rows(1, vec![-1.0]).unwrap();
        assert!(matches!(
            solve_spd(&m, &[1.0]),
            Err(Error::NonPositivePivot { pivot: 0, .. })
        ));
        let id = GramMatrix::from_rows(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            solve_spd(&id, &[1.0]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn posterior_examples() {
        let p = KernelParams::default();
        let post = posterior(&[(Round(5), 0.3)], Round(5), &p).unwrap();
        close(post.mean, 0.3, 1e-6);
        assert!(post.variance <= 1e-6);

        let tiny = KernelParams::new(1.0, 1e-12).unwrap();
        let post = posterior(&[(Round(0), 0.4)], Round(1), &tiny).unwrap();
        close(post.mean, 0.4 * E_HALF, 1e-9);
        close(post.variance, 1.0 - (-1.0f64).exp(), 1e-9);

        let post = posterior(&[(Round(0), 0.4)], Round(100), &p).unwrap();
        assert!(post.mean <= 1e-12);
        assert!(post.variance >= 1.0 - 1e-12);
    }

    #[test]
    fn posterior_empty_and_ordering() {
        let p = KernelParams::default();
        assert_eq!(posterior(&[], Round(3), &p).unwrap(), Posterior::PRIOR);
        assert!(matches!(
            posterior(&[(Round(4), 0.1)], Round(3), &p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn clamped_mean() {
        let p = Posterior {
            mean: -0.02,
            variance: 0.3,
        };
        assert_eq!(p.clamped_mean(), 0.0);
        let p = Posterior {
            mean: 1.3,
            variance: 0.3,
        };
        assert_eq!(p.clamped_mean(), 1.0);
    }
}
