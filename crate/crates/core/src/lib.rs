//! Micro-motion SAR processing: synthetic SLC scene generation, Doppler
//! sub-aperture decomposition, sub-pixel offset tracking, and sonic depth
//! tomography, with topographic and vibration-stream validation tools.

mod fft;

pub mod io;

pub mod geometry;
pub mod image;
pub mod oscillator;
pub mod slc;
pub mod spectral;
pub mod tomography;
pub mod tracking;
pub mod validation;

pub use geometry::{RadarGeometry, TargetState};
pub use image::ComplexImage;
pub use oscillator::{SpringParams, Trajectory};
pub use slc::{CanvasSpec, ScattererSpec};
