//! Tabulated PSFs on a uniform grid with natural cubic-spline interpolation.

use std::path::Path;

use crate::quadrature::{integrate_with_breaks, uniform_breaks, QuadOptions};
use crate::{Error, Result};

/// A real amplitude PSF sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct SampledPsf {
    x0: f64,
    dx: f64,
    y: Vec<f64>,
    m: Vec<f64>,
    cdf: Vec<f64>,
}

impl SampledPsf {
    /// Builds the spline and rescales the amplitudes to unit L² norm.
    pub fn new(positions: &[f64], amplitudes: &[f64]) -> Result<Self> {
        let n = positions.len();
        if n < 8 || amplitudes.len() != n {
            return Err(Error::domain("sampled PSF needs at least 8 (position, amplitude) pairs"));
        }
        if positions.iter().chain(amplitudes).any(|v| !v.is_finite()) {
            return Err(Error::domain("sampled PSF contains non-finite values"));
        }
        let x0 = positions[0];
        let dx = (positions[n - 1] - x0) / (n - 1) as f64;
        if dx <= 0.0 {
            return Err(Error::domain("sampled PSF positions must increase"));
        }
        for (i, x) in positions.iter().enumerate() {
            if (x - (x0 + i as f64 * dx)).abs() > 1e-6 * dx {
                return Err(Error::domain("sampled PSF grid must be uniform"));
            }
        }
        let mut psf = Self { x0, dx, y: amplitudes.to_vec(), m: Vec::new(), cdf: Vec::new() };
        psf.m = spline_second_derivatives(&psf.y, dx);
        let norm = psf.integrate(|x| psf.value(x).powi(2))?;
        if norm <= 0.0 {
            return Err(Error::domain("sampled PSF has zero norm"));
        }
        let scale = norm.sqrt().recip();
        psf.y.iter_mut().for_each(|v| *v *= scale);
        psf.m.iter_mut().for_each(|v| *v *= scale);
        psf.cdf = psf.build_cdf();
        Ok(psf)
    }

    /// Parses the `# psf v1` two-column text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().map(str::trim).unwrap_or("");
        if header != "# psf v1" {
            return Err(Error::parse(format!("expected header '# psf v1', found '{header}'")));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::parse(format!("line {}: expected two columns", lineno + 2)));
            };
            let x: f64 = a.parse().map_err(|_| Error::parse(format!("line {}: bad position '{a}'", lineno + 2)))?;
            let y: f64 = b.parse().map_err(|_| Error::parse(format!("line {}: bad amplitude '{b}'", lineno + 2)))?;
            xs.push(x);
            ys.push(y);
        }
        Self::new(&xs, &ys)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn spacing(&self) -> f64 {
        self.dx
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x0, self.x0 + (self.y.len() - 1) as f64 * self.dx)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.y.iter().enumerate().map(|(i, y)| (self.x0 + i as f64 * self.dx, *y))
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let (a, b) = self.range();
        if !(a..=b).contains(&x) {
            return None;
        }
        let t = (x - self.x0) / self.dx;
        let i = (t.floor() as usize).min(self.y.len() - 2);
        Some((i, t - i as f64))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        let Some((i, t)) = self.locate(x) else { return (0.0, 0.0) };
        let h = self.dx;
        let (a, b) = (1.0 - t, t);
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        (v, d)
    }

    /// Integral of `f` over the grid range, split into short pieces.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let (a, b) = self.range();
        let pts = uniform_breaks(a, b, 8.0 * self.dx);
        Ok(integrate_with_breaks(f, &pts, QuadOptions::default().with_abs_tol(1e-13))?.value)
    }

    fn build_cdf(&self) -> Vec<f64> {
        // Simpson's rule on each cell for |ψ|².
        let mut cdf = Vec::with_capacity(self.y.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..self.y.len() - 1 {
            let a = self.x0 + i as f64 * self.dx;
            let sub = 8;
            let h = self.dx / sub as f64;
            let mut s = 0.0;
            for k in 0..=sub {
                let w = if k == 0 || k == sub { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * self.value(a + k as f64 * h).powi(2);
            }
            acc += s * h / 3.0;
            cdf.push(acc);
        }
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        cdf
    }

    /// Inverse-CDF draw from `|ψ|²` given a uniform variate `u ∈ [0,1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|c| *c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.x0 + (i as f64 - 1.0 + t) * self.dx
    }
}

fn spline_second_derivatives(y: &[f64], h: f64) -> Vec<f64> {
    // Natural spline: tridiagonal system (h/6, 2h/3, h/6) m = Δ²y / h.
    let n = y.len();
    let mut m = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let rhs = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / h;
        let diag = 2.0 * h / 3.0 - h / 6.0 * c[i - 1];
        c[i] = (h / 6.0) / diag;
        d[i] = (rhs - h / 6.0 * d[i - 1]) / diag;
    }
    for i in (1..n - 1).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_samples(sigma: f64, dx: f64) -> (Vec<f64>, Vec<f64>) {
        let n = (24.0 * sigma / dx) as usize + 1;
        let xs: Vec<f64> = (0..n).map(|i| -12.0 * sigma + i as f64 * dx).collect();
        let ys = xs.iter().map(|x| (-x * x / (4.0 * sigma * sigma)).exp()).collect();
        (xs, ys)
    }

    #[test]
    fn spline_reproduces_gaussian() {
        let (xs, ys) = gaussian_samples(0.5, 0.005);
        let p = SampledPsf::new(&xs, &ys).unwrap();
        let exact = |x: f64| (2.0 * std::f64::consts::PI * 0.25).powf(-0.25) * (-x * x).exp();
        for &x in &[0.0, 0.123, -0.77, 1.5] {
            assert!((p.value(x) - exact(x)).abs() < 1e-7, "x={x}");
            assert!((p.derivative(x) + 2.0 * x * exact(x)).abs() < 1e-5, "x={x}");
        }
    }

    #[test]
    fn parse_round_trip() {
        let (xs, ys) = gaussian_samples(1.0, 0.01);
        let mut text = String::from("# psf v1\n");
        for (x, y) in xs.iter().zip(&ys) {
            text.push_str(&format!("{x} {y}\n"));
        }
        let p = SampledPsf::parse(&text).unwrap();
        assert_eq!(p.nodes().count(), xs.len());
        assert!(SampledPsf::parse("# psf v2\n0 1\n").is_err());
        assert!(SampledPsf::parse("# psf v1\n0 1 2\n").is_err());
    }

    #[test]
    fn rejects_nonuniform_grid() {
        let xs: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        let ys = vec![1.0; 20];
        assert!(SampledPsf::new(&xs, &ys).is_err());
    }

    #[test]
    fn quantile_is_monotone() {
        let (xs, ys) = gaussian_samples(0.5, 0.005);
        let p = SampledPsf::new(&xs, &ys).unwrap();
        assert!(p.quantile(0.2) < p.quantile(0.5) && p.quantile(0.5) < p.quantile(0.8));
        assert!(p.quantile(0.5).abs() < 1e-3);
    }
}
