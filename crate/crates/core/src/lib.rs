//! Information limits and simulated receivers for sub-diffraction imaging.
//!
//! The crate models photon-counting measurements of closely spaced optical
//! point sources and extended objects. It covers point-spread functions and
//! transverse mode bases ([`optics`]), parametric scenes ([`scene`]),
//! receiver outcome laws and photon sampling ([`measure`]), classical and
//! quantum Fisher information ([`information`]), Chernoff exponents and
//! discrimination experiments ([`hypothesis`]), estimators and Monte Carlo
//! error studies ([`estimate`]), and Hermite-Gaussian moment estimation with
//! finite-support reconstruction ([`moments`]).
//!
//! Lengths are in arbitrary but consistent units; `delta_k` (the RMS
//! spatial bandwidth of the PSF) is in inverse length units. All stochastic
//! routines take an explicit `u64` seed and are bit-reproducible.

#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod fit;
pub mod hypothesis;
pub mod information;
pub mod measure;
pub mod moments;
pub mod optics;
pub mod quadrature;
pub mod rng;
pub mod scene;
pub mod special;

pub use error::{Error, Result};
