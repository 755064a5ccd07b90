//! Wideband geometric channel, DFT codebook and beam sweep.
//!
//! Array elements are indexed `(p, q)` with `p` along z (rows) and `q` along
//! y (columns); vectors are flattened with `p` fastest, i.e. element index
//! `q * rows + p`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::metrics::argmax;
use crate::raytracer::PathRecord;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub nt_rows: usize,
    pub nt_cols: usize,
    pub nr_rows: usize,
    pub nr_cols: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            nt_rows: 4,
            nt_cols: 2,
            nr_rows: 4,
            nr_cols: 2,
            spacing: 0.5,
        }
    }
}

impl ArrayConfig {
    pub fn n_tx(&self) -> usize {
        self.nt_rows * self.nt_cols
    }

    pub fn n_rx(&self) -> usize {
        self.nr_rows * self.nr_cols
    }

    /// Number of beam pairs.
    pub fn n_beams(&self) -> usize {
        self.n_tx() * self.n_rx()
    }

    pub fn validate(&self) -> crate::Result<()> {
        let dims = [self.nt_rows, self.nt_cols, self.nr_rows, self.nr_cols];
        if dims.contains(&0) || !(self.spacing > 0.0) {
            return Err(crate::Error::Config("array dimensions and spacing must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pulse {
    RaisedCosine { rolloff: f64 },
}

impl Pulse {
    /// Pulse value at `t`, with `t` in units of the symbol period.
    pub fn eval<T: Real>(&self, t: T) -> T {
        match *self {
            Pulse::RaisedCosine { rolloff } => raised_cosine(t, T::lit(rolloff)),
        }
    }
}

fn sinc<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        let px = T::PI() * x;
        px.sin() / px
    }
}

fn raised_cosine<T: Real>(t: T, beta: T) -> T {
    let two_bt = T::lit(2.0) * beta * t;
    let denom = T::one() - two_bt * two_bt;
    if denom.abs() < T::lit(1e-9) {
        // limit at |t| = 1 / (2 beta)
        return T::FRAC_PI_4() * sinc(T::one() / (T::lit(2.0) * beta));
    }
    sinc(t) * (T::PI() * beta * t).cos() / denom
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Symbol period T, seconds.
    pub symbol_period: f64,
    pub num_taps: usize,
    pub pulse: Pulse,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            symbol_period: 10e-9,
            num_taps: 16,
            pulse: Pulse::RaisedCosine { rolloff: 1.0 },
        }
    }
}

impl ChannelConfig {
    /// Tap index the earliest path is aligned to.
    pub fn delay_origin_tap(&self) -> usize {
        self.num_taps / 4
    }

    pub fn validate(&self) -> crate::Result<()> {
        let Pulse::RaisedCosine { rolloff } = self.pulse;
        if self.num_taps == 0 || !(self.symbol_period > 0.0) || !(0.0..=1.0).contains(&rolloff) {
            return Err(crate::Error::Config(
                "num_taps >= 1, symbol_period > 0 and rolloff in [0, 1] required".into(),
            ));
        }
        Ok(())
    }
}

/// UPA steering vector with unit norm.
pub fn steering_vector<T: Real>(az: T, el: T, rows: usize, cols: usize, spacing: T) -> Vec<Complex<T>> {
    let two_pi_d = T::TAU() * spacing;
    let u_row = el.sin();
    let u_col = el.cos() * az.sin();
    let norm = T::from_count(rows * cols).sqrt().recip();
    let mut out = Vec::with_capacity(rows * cols);
    for q in 0..cols {
        for p in 0..rows {
            let phase = two_pi_d * (T::from_count(p) * u_row + T::from_count(q) * u_col);
            out.push(Complex::from_polar(norm, phase));
        }
    }
    out
}

/// Direction cosine of DFT bin `k` of an `n`-element axis, wrapped into
/// `[-1/(2d), 1/(2d))`.
pub fn dft_grid_cosine<T: Real>(k: usize, n: usize, spacing: T) -> T {
    let period = spacing.recip();
    let mut u = T::from_count(k) / (T::from_count(n) * spacing);
    if u >= period / T::lit(2.0) {
        u = u - period;
    }
    u
}

fn dft_beam<T: Real>(k_row: usize, k_col: usize, rows: usize, cols: usize) -> Vec<Complex<T>> {
    let norm = T::from_count(rows * cols).sqrt().recip();
    let mut out = Vec::with_capacity(rows * cols);
    for q in 0..cols {
        for p in 0..rows {
            // reduce the integer phase first to keep the argument small
            let row_turns = T::from_count((p * k_row) % rows) / T::from_count(rows);
            let col_turns = T::from_count((q * k_col) % cols) / T::from_count(cols);
            out.push(Complex::from_polar(norm, T::TAU() * (row_turns + col_turns)));
        }
    }
    out
}

fn dft_side<T: Real>(rows: usize, cols: usize) -> Vec<Vec<Complex<T>>> {
    (0..cols)
        .flat_map(|kc| (0..rows).map(move |kr| (kr, kc)))
        .map(|(kr, kc)| dft_beam(kr, kc, rows, cols))
        .collect()
}

/// 2-D DFT codebook for both link ends. Beam pair `i` (0-based) uses
/// receive beam `i / n_tx` and transmit beam `i % n_tx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T> {
    pub tx_beams: Vec<Vec<Complex<T>>>,
    pub rx_beams: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Codebook<T> {
    pub fn dft(arr: &ArrayConfig) -> Self {
        Self {
            tx_beams: dft_side(arr.nt_rows, arr.nt_cols),
            rx_beams: dft_side(arr.nr_rows, arr.nr_cols),
        }
    }

    pub fn n_tx(&self) -> usize {
        self.tx_beams.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx_beams.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.n_tx() * self.n_rx()
    }

    /// `(rx_idx, tx_idx)` of 0-based pair index `i`.
    pub fn pair(&self, i: usize) -> (usize, usize) {
        (i / self.n_tx(), i % self.n_tx())
    }

    pub fn pair_index(&self, rx_idx: usize, tx_idx: usize) -> usize {
        rx_idx * self.n_tx() + tx_idx
    }

    /// Largest entrywise deviation of either side's Gram matrix from identity.
    pub fn gram_error(&self) -> T {
        gram_error(&self.tx_beams).max(gram_error(&self.rx_beams))
    }
}

fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).fold(Complex::new(T::zero(), T::zero()), |s, v| s + v)
}

fn gram_error<T: Real>(beams: &[Vec<Complex<T>>]) -> T {
    let mut worst = T::zero();
    for (i, a) in beams.iter().enumerate() {
        for (j, b) in beams.iter().enumerate() {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((inner(a, b) - Complex::new(target, T::zero())).norm());
        }
    }
    worst
}

/// `L_c` complex `n_rx x n_tx` matrices, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTaps<T> {
    pub n_rx: usize,
    pub n_tx: usize,
    pub taps: Vec<Vec<Complex<T>>>,
}

impl<T: Real> ChannelTaps<T> {
    pub fn zeros(n_rx: usize, n_tx: usize, num_taps: usize) -> Self {
        Self {
            n_rx,
            n_tx,
            taps: vec![vec![Complex::new(T::zero(), T::zero()); n_rx * n_tx]; num_taps],
        }
    }

    /// `sum_n ||H[n]||_F^2`.
    pub fn energy(&self) -> T {
        self.taps.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self {
            taps: self.taps.iter().map(|t| t.iter().map(|v| v * c).collect()).collect(),
            ..self.clone()
        }
    }
}

/// Builds `H[n] = sqrt(Nt Nr) sum_l g(nT - tau_l) a_r a_t^H a_l`, with delays
/// shifted so the earliest path lands on `ChannelConfig::delay_origin_tap`.
pub fn build_channel<T: Real>(paths: &[PathRecord], arr: &ArrayConfig, ch: &ChannelConfig) -> ChannelTaps<T> {
    let (n_rx, n_tx) = (arr.n_rx(), arr.n_tx());
    let mut h = ChannelTaps::zeros(n_rx, n_tx, ch.num_taps);
    let Some(tau_min) = paths.iter().map(|p| p.delay).reduce(f64::min) else {
        return h;
    };
    let scale = T::from_count(n_rx * n_tx).sqrt();
    let spacing = T::lit(arr.spacing);
    let origin = ch.delay_origin_tap() as f64;
    for path in paths {
        let a_r = steering_vector(T::lit(path.aoa_az), T::lit(path.aoa_el), arr.nr_rows, arr.nr_cols, spacing);
        let a_t = steering_vector(T::lit(path.aod_az), T::lit(path.aod_el), arr.nt_rows, arr.nt_cols, spacing);
        let gain = Complex::new(T::lit(path.gain.re), T::lit(path.gain.im)) * scale;
        // delay measured in symbol periods relative to the tap grid
        let shifted = (path.delay - tau_min) / ch.symbol_period + origin;
        for (n, tap) in h.taps.iter_mut().enumerate() {
            let g = ch.pulse.eval(T::lit(n as f64 - shifted));
            if g == T::zero() {
                continue;
            }
            let coeff = gain * g;
            for (r, ar) in a_r.iter().enumerate() {
                let row = *ar * coeff;
                for (t, at) in a_t.iter().enumerate() {
                    tap[r * n_tx + t] = tap[r * n_tx + t] + row * at.conj();
                }
            }
        }
    }
    h
}

/// Received power per beam pair and the best pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BeamPowerLabel<T> {
    /// Linear power per beam pair, indexed as in [`Codebook::pair`].
    pub y: Vec<T>,
    /// 1-based index of the strongest pair (lowest index on ties).
    pub s: usize,
}

/// `y_i = sum_n |w_i^H H[n] f_i|^2` over all pairs of the codebook.
pub fn beam_sweep<T: Real>(h: &ChannelTaps<T>, cb: &Codebook<T>) -> crate::Result<BeamPowerLabel<T>> {
    let dim_err = |expected, got| crate::Error::Dimension { expected, got };
    if cb.n_tx() != h.n_tx || cb.tx_beams.iter().any(|b| b.len() != h.n_tx) {
        return Err(dim_err(h.n_tx, cb.tx_beams.first().map_or(0, Vec::len)));
    }
    if cb.n_rx() != h.n_rx || cb.rx_beams.iter().any(|b| b.len() != h.n_rx) {
        return Err(dim_err(h.n_rx, cb.rx_beams.first().map_or(0, Vec::len)));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut y = vec![T::zero(); cb.n_pairs()];
    let mut hf = vec![zero; h.n_rx * cb.n_tx()];
    for tap in &h.taps {
        // hf[r, j] = (H f_j)[r]
        for (j, f) in cb.tx_beams.iter().enumerate() {
            for r in 0..h.n_rx {
                let row = &tap[r * h.n_tx..(r + 1) * h.n_tx];
                hf[r * cb.n_tx() + j] = row.iter().zip(f).fold(zero, |s, (a, b)| s + a * b);
            }
        }
        for (i, w) in cb.rx_beams.iter().enumerate() {
            for j in 0..cb.n_tx() {
                let v = w
                    .iter()
                    .enumerate()
                    .fold(zero, |s, (r, wr)| s + wr.conj() * hf[r * cb.n_tx() + j]);
                let idx = cb.pair_index(i, j);
                y[idx] = y[idx] + v.norm_sqr();
            }
        }
    }
    let s = argmax(&y).map_or(1, |i| i + 1);
    Ok(BeamPowerLabel { y, s })
}
