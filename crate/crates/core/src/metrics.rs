//! Regression and beam-selection metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Index of the largest element, lowest index on ties. `None` for empty input.
/// NaN entries are never selected unless every entry is NaN.
pub fn argmax<T: PartialOrd + Copy>(v: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, x) in v.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) if *x > v[b] || (unordered(&v[b]) && !unordered(x)) => best = Some(i),
            _ => {}
        }
    }
    best
}

/// True for values not comparable to themselves (NaN).
fn unordered<T: PartialOrd>(x: &T) -> bool {
    x.partial_cmp(x).is_none()
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension { expected: a, got: b });
    }
    Ok(())
}

/// Root mean squared error, both inputs in dB.
pub fn rmse<T: Real>(y_true: &[T], y_pred: &[T]) -> Result<T> {
    check_lengths(y_true.len(), y_pred.len())?;
    if y_true.is_empty() {
        return Err(Error::Empty("rmse"));
    }
    let sse: T = y_true.iter().zip(y_pred).map(|(t, p)| (*p - *t) * (*p - *t)).sum();
    Ok((sse / T::from_count(y_true.len())).sqrt())
}

fn check_rows<T>(y_true: &[Vec<T>], y_pred: &[Vec<T>]) -> Result<()> {
    check_lengths(y_true.len(), y_pred.len())?;
    if y_true.is_empty() {
        return Err(Error::Empty("beam power rows"));
    }
    for (t, p) in y_true.iter().zip(y_pred) {
        check_lengths(t.len(), p.len())?;
        if t.is_empty() {
            return Err(Error::Empty("beam power row"));
        }
    }
    Ok(())
}

/// Fraction of samples whose predicted best beam equals the true best beam.
pub fn alignment_probability<T: Real>(y_true: &[Vec<T>], y_pred: &[Vec<T>]) -> Result<T> {
    check_rows(y_true, y_pred)?;
    let hits = y_true
        .iter()
        .zip(y_pred)
        .filter(|(t, p)| argmax(t) == argmax(p))
        .count();
    Ok(T::from_count(hits) / T::from_count(y_true.len()))
}

/// `sum log2(1 + y[argmax pred]) / sum log2(1 + max y)` with `y_true_snr` in
/// linear SNR units.
pub fn throughput_ratio<T: Real>(y_true_snr: &[Vec<T>], y_pred: &[Vec<T>]) -> Result<T> {
    check_rows(y_true_snr, y_pred)?;
    let mut achieved = T::zero();
    let mut best = T::zero();
    for (t, p) in y_true_snr.iter().zip(y_pred) {
        let chosen = argmax(p).expect("non-empty row");
        let top = argmax(t).expect("non-empty row");
        achieved = achieved + t[chosen].ln_1p();
        best = best + t[top].ln_1p();
    }
    if best <= T::zero() {
        return Err(Error::Empty("throughput ratio needs positive best-beam SNR"));
    }
    // the log base cancels in the ratio
    Ok(achieved / best)
}

/// Sorted absolute errors.
pub fn error_cdf<T: Real>(y_true: &[T], y_pred: &[T]) -> Result<Vec<T>> {
    check_lengths(y_true.len(), y_pred.len())?;
    let mut errs: Vec<T> = y_true.iter().zip(y_pred).map(|(t, p)| (*p - *t).abs()).collect();
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(errs)
}

/// Fraction of a sorted error list strictly below `threshold`.
pub fn fraction_below<T: Real>(sorted_errors: &[T], threshold: T) -> T {
    if sorted_errors.is_empty() {
        return T::zero();
    }
    let n = sorted_errors.partition_point(|e| *e < threshold);
    T::from_count(n) / T::from_count(sorted_errors.len())
}

/// `10^(dB / 10)`.
pub fn db_to_linear<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MetricsReport<T> {
    pub rmse_db: T,
    pub p_align: Option<T>,
    pub r_throughput: Option<T>,
    pub error_cdf: Vec<T>,
    pub m: usize,
    /// Noise floor used to turn received power into SNR for `r_throughput`.
    pub noise_floor_dbm: T,
}

impl<T: Real> MetricsReport<T> {
    /// Two-column CSV `abs_error_db,cdf`.
    pub fn cdf_csv(&self) -> String {
        let n = self.error_cdf.len();
        let mut out = String::from("abs_error_db,cdf\n");
        for (i, e) in self.error_cdf.iter().enumerate() {
            out.push_str(&format!("{e},{}\n", T::from_count(i + 1) / T::from_count(n)));
        }
        out
    }
}
