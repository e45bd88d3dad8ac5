//! Parametric source models: point pairs, coherent pairs, constellations and
//! pixelated intensity objects.
//!
//! Object and image coordinates coincide (unit magnification). Grid pixels
//! are centred on the optical axis: pixel `(i, j)` sits at
//! `x = (i − (W−1)/2)·pitch`, `y = (j − (H−1)/2)·pitch`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A weighted point emitter in the object plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Emitter {
    pub weight: f64,
    pub x: f64,
    pub y: f64,
}

impl Emitter {
    pub fn new(weight: f64, x: f64) -> Self {
        Self { weight, x, y: 0.0 }
    }

    pub fn at(weight: f64, x: f64, y: f64) -> Self {
        Self { weight, x, y }
    }
}

/// Two mutually incoherent point sources at `centroid ∓ θ/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointScene {
    pub centroid: f64,
    pub separation: f64,
    /// Fraction of photons from the source at `centroid + θ/2`.
    pub brightness: f64,
}

impl TwoPointScene {
    pub fn new(centroid: f64, separation: f64, brightness: f64) -> Result<Self> {
        if !(separation >= 0.0 && separation.is_finite()) {
            return Err(Error::domain(format!("separation must be non-negative, got {separation}")));
        }
        if !(0.0..=1.0).contains(&brightness) {
            return Err(Error::domain(format!("brightness split must lie in [0,1], got {brightness}")));
        }
        if !centroid.is_finite() {
            return Err(Error::domain("centroid must be finite"));
        }
        Ok(Self { centroid, separation, brightness })
    }

    /// Equal-brightness pair centred at the origin.
    pub fn equal(separation: f64) -> Result<Self> {
        Self::new(0.0, separation, 0.5)
    }
}

/// Two mutually coherent point sources with complex degree of coherence γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentPairScene {
    pub centroid: f64,
    pub separation: f64,
    /// Mean photon number summed over both sources (before interference).
    pub photons: f64,
    pub gamma: Complex64,
}

impl CoherentPairScene {
    pub fn new(separation: f64, photons: f64, gamma: Complex64) -> Result<Self> {
        if !(separation >= 0.0 && separation.is_finite()) {
            return Err(Error::domain("separation must be non-negative"));
        }
        if !(photons > 0.0 && photons.is_finite()) {
            return Err(Error::domain("photon number must be positive"));
        }
        if gamma.norm() > 1.0 + 1e-12 {
            return Err(Error::domain(format!("|gamma| must not exceed 1, got {}", gamma.norm())));
        }
        Ok(Self { centroid: 0.0, separation, photons, gamma })
    }
}

/// A finite set of incoherent emitters with brightnesses summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    emitters: Vec<Emitter>,
}

impl Constellation {
    pub fn new(emitters: Vec<Emitter>) -> Result<Self> {
        if emitters.is_empty() {
            return Err(Error::domain("constellation needs at least one emitter"));
        }
        if emitters.iter().any(|e| !(e.weight > 0.0) || !e.x.is_finite() || !e.y.is_finite()) {
            return Err(Error::domain("emitter brightness must be positive and positions finite"));
        }
        let total: f64 = emitters.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("brightnesses must sum to 1, got {total}")));
        }
        Ok(Self { emitters })
    }

    /// `m` equally bright emitters spread evenly over `[-len/2, len/2]`.
    pub fn line(m: usize, len: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("line needs at least one emitter"));
        }
        let w = 1.0 / m as f64;
        let em = (0..m)
            .map(|i| {
                let x = if m == 1 { 0.0 } else { -0.5 * len + len * i as f64 / (m - 1) as f64 };
                Emitter::new(w, x)
            })
            .collect();
        Self::new(em)
    }

    pub fn emitters(&self) -> &[Emitter] {
        &self.emitters
    }
}

/// Incoherent scenes that decompose into weighted point emitters.
pub trait Incoherent {
    fn mixture_components(&self) -> Vec<Emitter>;
}

impl Incoherent for TwoPointScene {
    fn mixture_components(&self) -> Vec<Emitter> {
        let h = 0.5 * self.separation;
        vec![
            Emitter::new(1.0 - self.brightness, self.centroid - h),
            Emitter::new(self.brightness, self.centroid + h),
        ]
    }
}

impl Incoherent for Constellation {
    fn mixture_components(&self) -> Vec<Emitter> {
        self.emitters.clone()
    }
}

impl Incoherent for IntensityGrid {
    fn mixture_components(&self) -> Vec<Emitter> {
        let mut out = Vec::new();
        for j in 0..self.height {
            for i in 0..self.width {
                let v = self.values[j * self.width + i];
                if v > 0.0 {
                    let (x, y) = self.coords(i, j);
                    out.push(Emitter::at(v, x, y));
                }
            }
        }
        out
    }
}

/// Weighted point components of an incoherent scene.
pub fn mixture_components<S: Incoherent + ?Sized>(scene: &S) -> Vec<Emitter> {
    scene.mixture_components()
}

/// Non-negative pixel intensities summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityGrid {
    width: usize,
    height: usize,
    pitch: f64,
    values: Vec<f64>,
}

impl IntensityGrid {
    /// Row-major values (`height` rows of `width`), rescaled to unit sum.
    pub fn new(width: usize, height: usize, pitch: f64, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::domain("grid dimensions do not match the value count"));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::domain("pixel pitch must be positive"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("grid intensities must be finite and non-negative"));
        }
        let total: f64 = values.iter().sum();
        if !(total > 0.0) {
            return Err(Error::domain("grid has zero total intensity"));
        }
        let values = values.into_iter().map(|v| v / total).collect();
        Ok(Self { width, height, pitch, values })
    }

    /// Builds a grid by evaluating `f(x, y)` at pixel centres.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(width: usize, height: usize, pitch: f64, f: F) -> Result<Self> {
        let mut v = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                let x = (i as f64 - 0.5 * (width as f64 - 1.0)) * pitch;
                let y = (j as f64 - 0.5 * (height as f64 - 1.0)) * pitch;
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

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    /// Object-plane coordinates of pixel `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (
            (i as f64 - 0.5 * (self.width as f64 - 1.0)) * self.pitch,
            (j as f64 - 0.5 * (self.height as f64 - 1.0)) * self.pitch,
        )
    }

    /// Intensity-weighted mean position.
    pub fn centroid(&self) -> (f64, f64) {
        let mut cx = 0.0;
        let mut cy = 0.0;
        for j in 0..self.height {
            for i in 0..self.width {
                let v = self.get(i, j);
                let (x, y) = self.coords(i, j);
                cx += v * x;
                cy += v * y;
            }
        }
        (cx, cy)
    }

    /// Mirror image `I(−x, y)`.
    pub fn mirrored_x(&self) -> Self {
        let mut v = vec![0.0; self.values.len()];
        for j in 0..self.height {
            for i in 0..self.width {
                v[j * self.width + (self.width - 1 - i)] = self.get(i, j);
            }
        }
        Self { values: v, ..self.clone() }
    }

    /// `[I(x,y) + I(−x,−y)]/2`.
    pub fn symmetrized(&self) -> Self {
        let n = self.values.len();
        let v = (0..n).map(|k| 0.5 * (self.values[k] + self.values[n - 1 - k])).collect();
        Self { values: v, ..self.clone() }
    }

    /// Parses an 8-bit binary (`P5`) or ASCII (`P2`) graymap.
    pub fn from_pgm(bytes: &[u8], pitch: f64) -> Result<Self> {
        let mut pos = 0usize;
        let token = |pos: &mut usize| -> Result<String> {
            loop {
                while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                    *pos += 1;
                }
                if *pos < bytes.len() && bytes[*pos] == b'#' {
                    while *pos < bytes.len() && bytes[*pos] != b'\n' {
                        *pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = *pos;
            while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if start == *pos {
                return Err(Error::parse("unexpected end of graymap header"));
            }
            Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
        };
        let magic = token(&mut pos)?;
        let num = |s: String| s.parse::<usize>().map_err(|_| Error::parse(format!("bad graymap header field '{s}'")));
        let width = num(token(&mut pos)?)?;
        let height = num(token(&mut pos)?)?;
        let maxval = num(token(&mut pos)?)?;
        if maxval == 0 || maxval > 255 {
            return Err(Error::parse("only 8-bit graymaps are supported"));
        }
        let n = width * height;
        let values: Vec<f64> = match magic.as_str() {
            "P5" => {
                pos += 1;
                if bytes.len() < pos + n {
                    return Err(Error::parse("graymap pixel data truncated"));
                }
                bytes[pos..pos + n].iter().map(|b| *b as f64).collect()
            }
            "P2" => {
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    v.push(num(token(&mut pos)?)? as f64);
                }
                v
            }
            other => return Err(Error::parse(format!("unsupported graymap magic '{other}'"))),
        };
        Self::new(width, height, pitch, values)
    }

    pub fn load_pgm(path: impl AsRef<Path>, pitch: f64) -> Result<Self> {
        Self::from_pgm(&std::fs::read(path)?, pitch)
    }

    /// Binary 8-bit graymap scaled so the brightest pixel is 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let max = self.values.iter().cloned().fold(0.0, f64::max);
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.values.iter().map(|v| if max > 0.0 { (v / max * 255.0).round() as u8 } else { 0 }));
        out
    }
}

/// Second moments `(m_{x²}, m_{y²})` about the intensity centroid.
pub fn second_moments(grid: &IntensityGrid) -> (f64, f64) {
    let (cx, cy) = grid.centroid();
    let mut mx = 0.0;
    let mut my = 0.0;
    for j in 0..grid.height() {
        for i in 0..grid.width() {
            let v = grid.get(i, j);
            let (x, y) = grid.coords(i, j);
            mx += v * (x - cx).powi(2);
            my += v * (y - cy).powi(2);
        }
    }
    (mx, my)
}

/// Any scene understood by the scene file format.
#[derive(Debug, Clone)]
pub enum Scene {
    TwoPoint(TwoPointScene),
    CoherentPair(CoherentPairScene),
    Constellation(Constellation),
    Grid(IntensityGrid),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    schema: String,
    kind: String,
    centroid: Option<f64>,
    separation: Option<f64>,
    brightness: Option<f64>,
    photons: Option<f64>,
    gamma_re: Option<f64>,
    gamma_im: Option<f64>,
    /// `[x, y, weight]` triples.
    emitters: Option<Vec<[f64; 3]>>,
    pgm: Option<String>,
    pitch: Option<f64>,
}

impl Scene {
    /// Parses a TOML scene description tagged `schema = "scene v1"`.
    /// Relative graymap paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let f: SceneFile = toml::from_str(text).map_err(|e| Error::parse(e.to_string()))?;
        if f.schema != "scene v1" {
            return Err(Error::parse(format!("unsupported scene schema '{}'", f.schema)));
        }
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::parse(format!("scene kind '{}' needs '{name}'", f.kind)));
        match f.kind.as_str() {
            "two-point" => {
                let mut s = TwoPointScene::new(f.centroid.unwrap_or(0.0), need(f.separation, "separation")?, f.brightness.unwrap_or(0.5))?;
                s.centroid = f.centroid.unwrap_or(0.0);
                Ok(Scene::TwoPoint(s))
            }
            "coherent-pair" => {
                let gamma = Complex64::new(f.gamma_re.unwrap_or(0.0), f.gamma_im.unwrap_or(0.0));
                let mut s = CoherentPairScene::new(need(f.separation, "separation")?, f.photons.unwrap_or(1.0), gamma)?;
                s.centroid = f.centroid.unwrap_or(0.0);
                Ok(Scene::CoherentPair(s))
            }
            "constellation" => {
                let em = f.emitters.ok_or_else(|| Error::parse("constellation needs 'emitters'"))?;
                Ok(Scene::Constellation(Constellation::new(em.iter().map(|e| Emitter::at(e[2], e[0], e[1])).collect())?))
            }
            "grid" => {
                let path = f.pgm.ok_or_else(|| Error::parse("grid scene needs 'pgm'"))?;
                let pitch = need(f.pitch, "pitch")?;
                let p = match base_dir {
                    Some(d) => d.join(&path),
                    None => path.into(),
                };
                Ok(Scene::Grid(IntensityGrid::load_pgm(p, pitch)?))
            }
            other => Err(Error::parse(format!("unknown scene kind '{other}'"))),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path)?, path.parent())
    }
}
