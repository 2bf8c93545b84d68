//! Small statistical helpers: moments, quantiles, and batch-means Monte
//! Carlo error estimates for autocorrelated chains.

use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub fn mean<T: Scalar>(xs: &[T]) -> T {
    assert!(!xs.is_empty());
    xs.iter().copied().sum::<T>() / T::from_f(xs.len() as f64)
}

/// Unbiased sample variance (divisor `n - 1`); zero for a single point.
pub fn variance<T: Scalar>(xs: &[T]) -> T {
    let n = xs.len();
    if n < 2 {
        return T::zero();
    }
    let m = mean(xs);
    xs.iter()
        .map(|&x| (x - m) * (x - m))
        .sum::<T>()
        / T::from_f((n - 1) as f64)
}

pub fn sd<T: Scalar>(xs: &[T]) -> T {
    variance(xs).sqrt()
}

/// Median of a sample (average of the two middle order statistics for even
/// lengths).
pub fn median<T: Scalar>(xs: &[T]) -> T {
    assert!(!xs.is_empty());
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in median input"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::from_f(2.0)
    }
}

/// Linear-interpolation empirical quantile (the common "type 7" definition:
/// `h = (n-1) q`, interpolate between the bracketing order statistics).
pub fn quantile<T: Scalar>(xs: &[T], q: f64) -> T {
    assert!(!xs.is_empty());
    assert!((0.0..=1.0).contains(&q), "quantile level outside [0, 1]");
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let w = T::from_f(h - lo as f64);
    v[lo] + w * (v[hi] - v[lo])
}

/// `ln Σ exp(x_i)` computed with a max shift.
pub fn log_sum_exp<T: Scalar>(xs: &[T]) -> T {
    assert!(!xs.is_empty());
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        // All -inf (or a stray +inf/NaN): the shift is meaningless.
        return m;
    }
    let s = xs.iter().map(|&x| (x - m).exp()).sum::<T>();
    m + s.ln()
}

/// Batch-means standard error of the mean of a (possibly autocorrelated)
/// series. Falls back to zero for series shorter than four points.
pub fn batch_means_se<T: Scalar>(xs: &[T]) -> T {
    let n = xs.len();
    if n < 4 {
        return T::zero();
    }
    let n_batches = (n as f64).sqrt().floor() as usize;
    let batch = n / n_batches;
    let means: Vec<T> = (0..n_batches)
        .map(|b| mean(&xs[b * batch..(b + 1) * batch]))
        .collect();
    // Var(x̄) ≈ Var(batch mean) / B.
    (variance(&means) / T::from_f(n_batches as f64)).sqrt()
}

/// Effective sample size from the batch-means variance ratio,
/// `ESS = var(x) / var(x̄)`, clamped to `[1, n]`. Returns `n` for series
/// with (numerically) zero variance.
pub fn ess<T: Scalar>(xs: &[T]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return n as f64;
    }
    let var = variance(xs).to_f();
    let se = batch_means_se(xs).to_f();
    if var <= 0.0 || se <= 0.0 {
        return n as f64;
    }
    (var / (se * se)).clamp(1.0, n as f64)
}

/// Sample covariance matrix (divisor `n - 1`) of row-vectors.
pub fn sample_covariance<T: Scalar>(states: &[Vec<T>]) -> Matrix<T> {
    assert!(states.len() >= 2, "need at least two states");
    let d = states[0].len();
    let n = T::from_f(states.len() as f64);
    let mut mu = vec![T::zero(); d];
    for s in states {
        for (m, &x) in mu.iter_mut().zip(s) {
            *m += x;
        }
    }
    for m in &mut mu {
        *m = *m / n;
    }
    let mut cov = Matrix::zeros(d, d);
    for s in states {
        for i in 0..d {
            let di = s[i] - mu[i];
            for j in 0..=i {
                let dj = s[j] - mu[j];
                cov[(i, j)] = cov[(i, j)] + di * dj;
            }
        }
    }
    let denom = T::from_f((states.len() - 1) as f64);
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}
