//! Texture segmentation built on empirical curvelet features.
//!
//! The pipeline runs in the order the modules are listed: pseudo-polar
//! spectra and scale-space boundary detection ([`spectral`]), merging of
//! per-texture boundary sets ([`boundaries`]), construction of the tight
//! curvelet frame ([`bank`]), the Fourier-domain transform ([`transform`]),
//! local-energy features with ZCA whitening ([`features`]), a shallow pixel
//! classifier with post-hoc region refinement ([`classify`]), synthetic
//! dataset generation ([`datagen`]) and partition metrics ([`metrics`]).
//!
//! Everything here is a pure function of its inputs. File formats and the
//! command line live in the `ewtseg` crate.

pub mod bank;
pub mod boundaries;
pub mod classify;
pub mod components;
pub mod datagen;
mod error;
pub mod features;
mod fft;
mod grid;
pub mod metrics;
mod smooth;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};
pub use grid::{Grid, Plane, RgbImage, SegmentationMap};
