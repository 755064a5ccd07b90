//! Ordinary least squares with intercept.
//!
//! Features are standardized before solving the normal equations, which
//! carry a tiny ridge term. Constant columns (such as always-virtual
//! vehicle slots) get a zero coefficient.

use serde::{Deserialize, Serialize};

use crate::real::Real;

pub const RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LinearModel<T> {
    pub intercept: T,
    pub coefficients: Vec<T>,
}

impl<T: Real> LinearModel<T> {
    pub fn predict(&self, x: &[T]) -> T {
        self.intercept + x.iter().zip(&self.coefficients).map(|(a, b)| *a * *b).sum::<T>()
    }
}

/// Solves `a z = b` for symmetric positive definite `a` (row-major, k x k).
fn cholesky_solve<T: Real>(mut a: Vec<T>, mut b: Vec<T>) -> Option<Vec<T>> {
    let k = b.len();
    for j in 0..k {
        let mut d = a[j * k + j];
        for p in 0..j {
            d = d - a[j * k + p] * a[j * k + p];
        }
        if !(d > T::zero()) {
            return None;
        }
        let d = d.sqrt();
        a[j * k + j] = d;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s = s - a[i * k + p] * a[j * k + p];
            }
            a[i * k + j] = s / d;
        }
    }
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s = s - a[i * k + p] * b[p];
        }
        b[i] = s / a[i * k + i];
    }
    for i in (0..k).rev() {
        let mut s = b[i];
        for p in i + 1..k {
            s = s - a[p * k + i] * b[p];
        }
        b[i] = s / a[i * k + i];
    }
    Some(b)
}

/// Solves the damped system, then refines against the undamped one so the
/// damping only stabilizes and does not bias well-posed fits.
fn solve_refined<T: Real>(gram: &[T], rhs: &[T], k: usize) -> Vec<T> {
    let mut damped = gram.to_vec();
    for a in 0..k {
        damped[a * k + a] = damped[a * k + a] + T::lit(RIDGE);
    }
    let Some(mut beta) = cholesky_solve(damped.clone(), rhs.to_vec()) else {
        return vec![T::zero(); k];
    };
    for _ in 0..REFINE_STEPS {
        let resid: Vec<T> = (0..k)
            .map(|a| rhs[a] - (0..k).map(|b| gram[a * k + b] * beta[b]).sum::<T>())
            .collect();
        let Some(step) = cholesky_solve(damped.clone(), resid) else { break };
        for (b, d) in beta.iter_mut().zip(step) {
            *b = *b + d;
        }
    }
    beta
}

const REFINE_STEPS: usize = 3;

pub fn fit_ols<T: Real>(x: &[Vec<T>], y: &[T]) -> LinearModel<T> {
    let n = x.len();
    let d = x.first().map_or(0, Vec::len);
    let nf = T::from_count(n);
    let y_mean = y.iter().copied().sum::<T>() / nf;

    let means: Vec<T> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<T>() / nf).collect();
    let scales: Vec<T> = (0..d)
        .map(|j| {
            let var = x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<T>() / nf;
            var.sqrt()
        })
        .collect();
    // columns with no spread relative to their magnitude carry no information
    let active: Vec<usize> = (0..d)
        .filter(|&j| scales[j] > T::epsilon() * T::lit(1e3) * means[j].abs().max(T::one()))
        .collect();
    let k = active.len();
    let z = |r: &[T], a: usize| (r[active[a]] - means[active[a]]) / scales[active[a]];

    let mut gram = vec![T::zero(); k * k];
    let mut rhs = vec![T::zero(); k];
    for (row, &yi) in x.iter().zip(y) {
        let zr: Vec<T> = (0..k).map(|a| z(row, a)).collect();
        let yc = yi - y_mean;
        for a in 0..k {
            rhs[a] = rhs[a] + zr[a] * yc;
            for b in 0..=a {
                gram[a * k + b] = gram[a * k + b] + zr[a] * zr[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[b * k + a] = gram[a * k + b];
        }
    }
    let beta_z = solve_refined(&gram, &rhs, k);

    let mut coefficients = vec![T::zero(); d];
    let mut intercept = y_mean;
    for (a, &j) in active.iter().enumerate() {
        coefficients[j] = beta_z[a] / scales[j];
        intercept = intercept - coefficients[j] * means[j];
    }
    LinearModel { intercept, coefficients }
}
