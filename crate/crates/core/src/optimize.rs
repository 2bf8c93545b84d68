//! Quasi-Newton minimization with finite-difference gradients.
//!
//! BFGS with an Armijo backtracking line search, sized for the emulator's
//! marginal-likelihood surface (a handful of dimensions, smooth away from
//! degenerate ranges). Non-finite objective values are treated as rejected
//! points rather than errors, so the caller can leave hard constraints to
//! the objective itself.

use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct BfgsOptions {
    pub max_iters: usize,
    /// Stop when the gradient's max-norm falls below this.
    pub grad_tol: f64,
    /// Relative central-difference step.
    pub fd_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iters: 120,
            grad_tol: 1e-5,
            fd_step: 1e-5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsResult<T> {
    pub x: Vec<T>,
    pub value: T,
    pub converged: bool,
    pub iterations: usize,
}

fn gradient<T: Scalar, F: Fn(&[T]) -> T>(f: &F, x: &[T], rel_step: f64) -> Vec<T> {
    let mut g = vec![T::zero(); x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = T::from_f(rel_step) * (T::one() + x[i].abs());
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        g[i] = (fp - fm) / (T::from_f(2.0) * h);
    }
    g
}

/// Minimize `f` from `x0`. The result carries the best point seen even when
/// the iteration budget runs out before the gradient tolerance is met.
pub fn minimize_bfgs<T: Scalar, F: Fn(&[T]) -> T>(
    f: F,
    x0: &[T],
    opts: &BfgsOptions,
) -> BfgsResult<T> {
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return BfgsResult {
            x,
            value: fx,
            converged: false,
            iterations: 0,
        };
    }
    let mut g = gradient(&f, &x, opts.fd_step);
    // Inverse Hessian approximation, row-major d×d.
    let mut h: Vec<T> = identity(d);
    let c1 = T::from_f(1e-4);

    for iter in 0..opts.max_iters {
        let gmax = g.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
        if gmax.to_f() < opts.grad_tol {
            return BfgsResult {
                x,
                value: fx,
                converged: true,
                iterations: iter,
            };
        }

        // Direction −H g, reset to steepest descent when it fails to descend.
        let mut dir: Vec<T> = (0..d)
            .map(|i| -(0..d).map(|j| h[i * d + j] * g[j]).sum::<T>())
            .collect();
        let mut slope: T = dir.iter().zip(&g).map(|(&a, &b)| a * b).sum();
        if !(slope < T::zero()) || dir.iter().any(|v| !v.is_finite()) {
            h = identity(d);
            dir = g.iter().map(|&v| -v).collect();
            slope = -g.iter().map(|&v| v * v).sum::<T>();
        }

        // Backtracking Armijo line search.
        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let candidate: Vec<T> = x
                .iter()
                .zip(&dir)
                .map(|(&xi, &di)| xi + step * di)
                .collect();
            let fc = f(&candidate);
            if fc.is_finite() && fc <= fx + c1 * step * slope {
                accepted = Some((candidate, fc));
                break;
            }
            step = step / T::from_f(2.0);
        }
        let Some((x_new, f_new)) = accepted else {
            // No acceptable step along this direction; treat as converged
            // to the working precision of the finite-difference gradient.
            return BfgsResult {
                x,
                value: fx,
                converged: gmax.to_f() < opts.grad_tol * 100.0,
                iterations: iter,
            };
        };

        let g_new = gradient(&f, &x_new, opts.fd_step);
        let s: Vec<T> = x_new.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let yv: Vec<T> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy: T = s.iter().zip(&yv).map(|(&a, &b)| a * b).sum();
        if sy > T::from_f(1e-12) {
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let rho = T::one() / sy;
            let mut hy = vec![T::zero(); d];
            for i in 0..d {
                hy[i] = (0..d).map(|j| h[i * d + j] * yv[j]).sum();
            }
            let yhy: T = yv.iter().zip(&hy).map(|(&a, &b)| a * b).sum();
            for i in 0..d {
                for j in 0..d {
                    let term = rho * rho * yhy * s[i] * s[j] + rho * s[i] * s[j]
                        - rho * (s[i] * hy[j] + hy[i] * s[j]);
                    h[i * d + j] = h[i * d + j] + term;
                }
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }

    BfgsResult {
        x,
        value: fx,
        converged: false,
        iterations: opts.max_iters,
    }
}

fn identity<T: Scalar>(d: usize) -> Vec<T> {
    let mut h = vec![T::zero(); d * d];
    for i in 0..d {
        h[i * d + i] = T::one();
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 4.0 * (x[1] + 2.0).powi(2);
        let r = minimize_bfgs(f, &[5.0, 5.0], &BfgsOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4);
        assert!((r.x[1] + 2.0).abs() < 1e-4);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = BfgsOptions {
            max_iters: 500,
            ..BfgsOptions::default()
        };
        let r = minimize_bfgs(f, &[-1.2, 1.0], &opts);
        assert!((r.x[0] - 1.0).abs() < 1e-3, "x = {:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn non_finite_start_is_reported() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { x[0] };
        let r = minimize_bfgs(f, &[-1.0], &BfgsOptions::default());
        assert!(!r.converged);
    }

    #[test]
    fn objective_with_forbidden_region() {
        // NaN outside x > 0; the line search must stay inside.
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                f64::NAN
            } else {
                (x[0].ln()).powi(2)
            }
        };
        let r = minimize_bfgs(f, &[5.0], &BfgsOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-3);
    }
}
