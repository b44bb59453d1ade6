//! Multi-exposure image fusion and high dynamic range imaging primitives.
//!
//! The crate covers the full pipeline from a bracketed exposure stack to a
//! displayable image: pixel containers and the PPM / RGBE byte codecs
//! ([`image`], [`ppm`], [`rgbe`]), an orthonormal 2-D DCT in full-frame and
//! block form ([`transform`]), transform-domain and pyramidal exposure fusion
//! ([`fusion`]), camera response recovery and radiance map assembly ([`crf`]),
//! a global photographic tone mapping operator ([`tonemap`]), full-reference
//! quality metrics ([`metrics`]) and distribution fits over block DCT
//! coefficients ([`coeff_stats`]).
//!
//! Everything here is `no_std` (with `alloc`); file handling and the command
//! line front end live in the companion `hdrfuse` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod coeff_stats;
pub mod crf;
pub mod fusion;
pub mod image;
pub mod metrics;
pub mod ppm;
pub mod rgbe;
pub mod tonemap;
pub mod transform;

pub use image::{ExposureStack, ImagePlane, ImageRGB, RadianceMap, ValueRange};
