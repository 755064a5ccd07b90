//! Uniform CQI quantization of received power and its reconstruction.

use serde::{Deserialize, Serialize};

use crate::real::Real;

/// Bounds and step of the uniform CQI quantizer, all in dB(m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CqiParams<T> {
    pub p_upper: T,
    pub p_lower: T,
    pub granularity: T,
}

impl<T: Real> CqiParams<T> {
    pub fn new(p_upper: T, p_lower: T, granularity: T) -> crate::Result<Self> {
        if !(p_upper > p_lower) || !(granularity > T::zero()) || !granularity.is_finite() {
            return Err(crate::Error::Config(format!(
                "CQI needs P_u > P_l and r_CQI > 0 (got P_u={p_upper}, P_l={p_lower}, r={granularity})"
            )));
        }
        Ok(Self { p_upper, p_lower, granularity })
    }

    /// Largest index the quantizer emits.
    pub fn max_index(&self) -> u32 {
        ceil_snapped((self.p_upper - self.p_lower) / self.granularity)
    }

    pub fn quantize(&self, p: T) -> u32 {
        quantize(p, self)
    }

    pub fn dequantize(&self, q: u32) -> T {
        dequantize(q, self)
    }
}

/// Ceiling that treats values within a few ulps of an integer as that
/// integer, so grid points like `0.3 / 0.1` land on their own index.
fn ceil_snapped<T: Real>(x: T) -> u32 {
    let nearest = x.round();
    let tol = T::epsilon() * T::lit(64.0) * x.abs().max(T::one());
    let q = if (x - nearest).abs() <= tol { nearest } else { x.ceil() };
    q.to_u32().unwrap_or(0)
}

/// CQI index `ceil(min(max((p - P_l) / r, 0), (P_u - P_l) / r))`.
pub fn quantize<T: Real>(p: T, params: &CqiParams<T>) -> u32 {
    let r = params.granularity;
    let scaled = ((p - params.p_lower) / r).max(T::zero());
    ceil_snapped(scaled.min((params.p_upper - params.p_lower) / r))
}

/// Reconstructed power `r * q + P_l`.
pub fn dequantize<T: Real>(q: u32, params: &CqiParams<T>) -> T {
    params.granularity * T::lit(q as f64) + params.p_lower
}

/// Label post-processing: either pass-through or quantize-then-reconstruct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(bound = "T: Real", tag = "mode", rename_all = "lowercase")]
pub enum Quantization<T> {
    #[default]
    Off,
    Cqi(CqiParams<T>),
}

impl<T: Real> Quantization<T> {
    pub fn reconstruct(&self, p: T) -> T {
        match self {
            Quantization::Off => p,
            Quantization::Cqi(c) => c.dequantize(c.quantize(p)),
        }
    }

    pub fn granularity(&self) -> Option<T> {
        match self {
            Quantization::Off => None,
            Quantization::Cqi(c) => Some(c.granularity),
        }
    }
}
