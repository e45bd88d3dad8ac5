use num_complex::Complex64;

use crate::optics::hg_amplitudes;
use crate::scene::IntensityGrid;
use crate::{Error, Result};

/// Complex object-plane field sampled at pixel centres, each sample acting as
/// a point amplitude (the coherent analogue of [`IntensityGrid`]).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    width: usize,
    height: usize,
    pitch: f64,
    values: Vec<Complex64>,
}

impl FieldGrid {
    pub fn new(width: usize, height: usize, pitch: f64, values: Vec<Complex64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::domain("grid dimensions do not match the value count"));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::domain("pixel pitch must be positive"));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::domain("field samples must be finite"));
        }
        Ok(Self { width, height, pitch, values })
    }

    /// Evaluates `f(x, y)` at pixel centres (same layout as [`IntensityGrid::from_fn`]).
    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(width: usize, height: usize, pitch: f64, f: F) -> Result<Self> {
        let mut v = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                let (x, y) = centre(width, height, pitch, i, j);
                v.push(f(x, y));
            }
        }
        Self::new(width, height, pitch, v)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        centre(self.width, self.height, self.pitch, i, j)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[j * self.width + i]
    }
}

fn centre(w: usize, h: usize, pitch: f64, i: usize, j: usize) -> (f64, f64) {
    ((i as f64 - 0.5 * (w as f64 - 1.0)) * pitch, (j as f64 - 0.5 * (h as f64 - 1.0)) * pitch)
}

/// `a_k(u) = e^{−u²/2}·u^k/√k!` for `k = 0..=k_max`.
pub(crate) fn mode_weights(k_max: usize, u: f64) -> Vec<f64> {
    hg_amplitudes(k_max, u)
}

/// Amplitude of HG mode `(m, n)` carried by a coherent object:
/// `J_mn = Σ E(x,y)·a_m(xΔk)·a_n(yΔk)`.
pub fn coherent_moment(field: &FieldGrid, m: usize, n: usize, delta_k: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..field.height {
        for i in 0..field.width {
            let e = field.get(i, j);
            if e == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (x, y) = field.coords(i, j);
            acc += e * mode_weights(m, x * delta_k)[m] * mode_weights(n, y * delta_k)[n];
        }
    }
    acc
}

/// Photon fraction of an incoherent object in HG mode `(m, n)`:
/// `P_mn = Σ I(x,y)·e^{−Δk²(x²+y²)}(xΔk)^{2m}(yΔk)^{2n}/(m!n!)`.
pub fn incoherent_moment(grid: &IntensityGrid, m: usize, n: usize, delta_k: f64) -> f64 {
    weighted_sum(grid, |x, y| {
        let (a, b) = (mode_weights(m, x * delta_k)[m], mode_weights(n, y * delta_k)[n]);
        (a * b).powi(2)
    })
}

/// Odd cross-moment `O_mn = Σ I·a_m(xΔk)·a_{m+1}(xΔk)·a_n(yΔk)²`, the half
/// difference between the `(ψ_m + ψ_{m+1})/√2` and `(ψ_m − ψ_{m+1})/√2`
/// photon fractions; proportional to the `(2m+1, 2n)` moment.
pub fn odd_moment(grid: &IntensityGrid, m: usize, n: usize, delta_k: f64) -> f64 {
    weighted_sum(grid, |x, y| {
        let a = mode_weights(m + 1, x * delta_k);
        let b = mode_weights(n, y * delta_k)[n];
        a[m] * a[m + 1] * b * b
    })
}

fn weighted_sum<F: Fn(f64, f64) -> f64>(grid: &IntensityGrid, w: F) -> f64 {
    let mut acc = 0.0;
    for j in 0..grid.height() {
        for i in 0..grid.width() {
            let v = grid.get(i, j);
            if v > 0.0 {
                let (x, y) = grid.coords(i, j);
                acc += v * w(x, y);
            }
        }
    }
    acc
}
