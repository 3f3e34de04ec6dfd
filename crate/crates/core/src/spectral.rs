//! 2-D spectral engine and Doppler sub-aperture extraction.
//!
//! The occupied Doppler band of an SLC is split into equal-width slots. A
//! plan's N_D master windows tile the processed (non-guard) part of the band
//! from its low edge; the slave windows are the same set rigidly shifted up
//! by one slot, so pair i differs from its master only by Doppler center.
//! Extraction zeroes every azimuth-frequency column outside the requested
//! window and transforms back, keeping the full grid so pixel coordinates
//! survive for tracking.

use num_complex::Complex64;
use rustfft::FftDirection;
use thiserror::Error;

use crate::fft::{fft2_in_place, signed_bin};
use crate::image::ComplexImage;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("sub-aperture count must be at least 2, got {0}")]
    TooFewSubApertures(usize),
    #[error("guard fraction must lie in (0, 1), got {0}")]
    BadGuardFraction(f64),
    #[error("total band {band} Hz exceeds the sampling rate {rate} Hz")]
    BandExceedsRate { band: f64, rate: f64 },
    #[error("sub-aperture index {index} out of range for {n_sub} windows")]
    IndexOutOfRange { index: usize, n_sub: usize },
    #[error("slave windows end at {top} Hz, beyond the band edge {edge} Hz; increase guard or n_sub")]
    SlaveBandExceeded { top: f64, edge: f64 },
    #[error("stacks disagree: {0}")]
    StackMismatch(&'static str),
}

/// Spectral window applied at sub-band edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandWindow {
    #[default]
    Rect,
    Hann,
}

impl BandWindow {
    pub fn name(&self) -> &'static str {
        match self {
            BandWindow::Rect => "rect",
            BandWindow::Hann => "hann",
        }
    }
}

/// Doppler band allocation: N_D equal master windows over the processed
/// band, slaves one slot higher. Frequencies are Hz on the azimuth axis,
/// columns are mapped through `sample_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubAperturePlan {
    n_sub: usize,
    guard_fraction: f64,
    sub_band_width: f64,
    sub_band_centers: Vec<f64>,
    window: BandWindow,
    total_band: f64,
    sample_rate: f64,
}

impl SubAperturePlan {
    /// Build a plan over `total_band` Hz of occupied Doppler spectrum
    /// sampled at `sample_rate` Hz. `guard_fraction` of the band is left
    /// unprocessed (the default mirrors the half-band allocation).
    pub fn new(
        total_band: f64,
        sample_rate: f64,
        n_sub: usize,
        guard_fraction: f64,
        window: BandWindow,
    ) -> Result<Self, SpectralError> {
        if n_sub < 2 {
            return Err(SpectralError::TooFewSubApertures(n_sub));
        }
        if !(guard_fraction > 0.0 && guard_fraction < 1.0) {
            return Err(SpectralError::BadGuardFraction(guard_fraction));
        }
        if !(total_band > 0.0) || total_band > sample_rate {
            return Err(SpectralError::BandExceedsRate {
                band: total_band,
                rate: sample_rate,
            });
        }
        Ok(Self::build(total_band, sample_rate, n_sub, guard_fraction, window))
    }

    /// Single full-band window covering the whole sampled spectrum;
    /// extraction with it is the identity. Used by the full-resolution path.
    pub fn full_band(sample_rate: f64) -> Self {
        Self::build(sample_rate, sample_rate, 1, 0.0, BandWindow::Rect)
    }

    fn build(
        total_band: f64,
        sample_rate: f64,
        n_sub: usize,
        guard_fraction: f64,
        window: BandWindow,
    ) -> Self {
        let processed = total_band * (1.0 - guard_fraction);
        let width = processed / n_sub as f64;
        let lo = -total_band / 2.0;
        let centers = (0..n_sub)
            .map(|i| lo + (i as f64 + 0.5) * width)
            .collect();
        Self {
            n_sub,
            guard_fraction,
            sub_band_width: width,
            sub_band_centers: centers,
            window,
            total_band,
            sample_rate,
        }
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    pub fn guard_fraction(&self) -> f64 {
        self.guard_fraction
    }

    pub fn sub_band_width(&self) -> f64 {
        self.sub_band_width
    }

    pub fn sub_band_centers(&self) -> &[f64] {
        &self.sub_band_centers
    }

    pub fn window(&self) -> BandWindow {
        self.window
    }

    pub fn total_band(&self) -> f64 {
        self.total_band
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Low edge of the allocated band.
    pub fn band_lo(&self) -> f64 {
        -self.total_band / 2.0
    }

    /// Number of slot positions the full band holds (master windows use
    /// slots `0..n_sub`, slaves `1..=n_sub`).
    pub fn slot_count(&self) -> usize {
        (self.total_band / self.sub_band_width).floor() as usize
    }

    /// Verify the shifted slave set stays inside the allocated band.
    pub fn check_slave_fit(&self) -> Result<(), SpectralError> {
        let top = self.band_lo() + (self.n_sub as f64 + 1.0) * self.sub_band_width;
        let edge = self.band_lo() + self.total_band;
        if top > edge * (1.0 + 1e-12) + 1e-12 {
            return Err(SpectralError::SlaveBandExceeded { top, edge });
        }
        Ok(())
    }

    /// Slot index of an azimuth frequency, or None outside the band.
    fn slot_of(&self, f: f64) -> Option<i64> {
        let rel = (f - self.band_lo()) / self.sub_band_width;
        if f < self.band_lo() || rel < 0.0 {
            return None;
        }
        Some(rel.floor() as i64)
    }

    /// Column indices of `image` falling into `slot`, with the in-slot
    /// position (0..1) used by edge windows.
    fn slot_columns(&self, cols: usize, slot: usize) -> Vec<(usize, f64)> {
        (0..cols)
            .filter_map(|q| {
                let f = self.sample_rate * signed_bin(q, cols) as f64 / cols as f64;
                match self.slot_of(f) {
                    Some(s) if s == slot as i64 => {
                        let u = (f - self.band_lo()) / self.sub_band_width - slot as f64;
                        Some((q, u))
                    }
                    _ => None,
                }
            })
            .collect()
    }
}

/// Role of a stack in the master/slave pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackRole {
    Master,
    Slave,
}

impl StackRole {
    pub fn name(&self) -> &'static str {
        match self {
            StackRole::Master => "master",
            StackRole::Slave => "slave",
        }
    }
}

/// N_D band-limited full-grid images sharing one plan.
#[derive(Debug, Clone)]
pub struct SubApertureStack {
    pub plan: SubAperturePlan,
    pub images: Vec<ComplexImage>,
    pub role: StackRole,
}

impl SubApertureStack {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Unitary 2-D DFT (1/sqrt(N M) each way).
pub fn dft2(img: &ComplexImage) -> ComplexImage {
    unitary(img, FftDirection::Forward)
}

/// Unitary inverse 2-D DFT; `idft2(dft2(x)) = x`.
pub fn idft2(img: &ComplexImage) -> ComplexImage {
    unitary(img, FftDirection::Inverse)
}

fn unitary(img: &ComplexImage, direction: FftDirection) -> ComplexImage {
    let mut data = img.pixels().to_vec();
    fft2_in_place(&mut data, img.rows(), img.cols(), direction);
    let scale = 1.0 / ((img.rows() * img.cols()) as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
    ComplexImage::from_pixels(
        img.rows(),
        img.cols(),
        data,
        img.range_spacing(),
        img.azimuth_spacing(),
    )
    .expect("shape preserved")
}

fn extract_slot(slc: &ComplexImage, plan: &SubAperturePlan, slot: usize) -> ComplexImage {
    let rows = slc.rows();
    let cols = slc.cols();
    let mut spectrum = slc.pixels().to_vec();
    fft2_in_place(&mut spectrum, rows, cols, FftDirection::Forward);

    let keep = plan.slot_columns(cols, slot);
    let mut masked = vec![Complex64::default(); rows * cols];
    for (q, u) in keep {
        let w = match plan.window {
            BandWindow::Rect => 1.0,
            BandWindow::Hann => 0.5 * (1.0 - (2.0 * std::f64::consts::PI * u).cos()),
        };
        for k in 0..rows {
            masked[k * cols + q] = spectrum[k * cols + q] * w;
        }
    }

    fft2_in_place(&mut masked, rows, cols, FftDirection::Inverse);
    let norm = 1.0 / (rows * cols) as f64;
    for v in masked.iter_mut() {
        *v *= norm;
    }
    ComplexImage::from_pixels(rows, cols, masked, slc.range_spacing(), slc.azimuth_spacing())
        .expect("shape preserved")
}

/// Band-limit `slc` to master window `index` of the plan. Output keeps the
/// full grid; azimuth resolution degrades by the band ratio.
pub fn extract_subaperture(
    slc: &ComplexImage,
    plan: &SubAperturePlan,
    index: usize,
) -> Result<ComplexImage, SpectralError> {
    if index >= plan.n_sub {
        return Err(SpectralError::IndexOutOfRange {
            index,
            n_sub: plan.n_sub,
        });
    }
    Ok(extract_slot(slc, plan, index))
}

/// Band-limit `slc` to the union of all master windows (the processed band).
pub fn extract_processed_band(slc: &ComplexImage, plan: &SubAperturePlan) -> ComplexImage {
    let rows = slc.rows();
    let cols = slc.cols();
    let mut spectrum = slc.pixels().to_vec();
    fft2_in_place(&mut spectrum, rows, cols, FftDirection::Forward);
    let mut masked = vec![Complex64::default(); rows * cols];
    for slot in 0..plan.n_sub {
        for (q, _) in plan.slot_columns(cols, slot) {
            for k in 0..rows {
                masked[k * cols + q] = spectrum[k * cols + q];
            }
        }
    }
    fft2_in_place(&mut masked, rows, cols, FftDirection::Inverse);
    let norm = 1.0 / (rows * cols) as f64;
    for v in masked.iter_mut() {
        *v *= norm;
    }
    ComplexImage::from_pixels(rows, cols, masked, slc.range_spacing(), slc.azimuth_spacing())
        .expect("shape preserved")
}

/// Build the master stack (windows i = 0..N_D over the low band positions)
/// and the slave stack (the same windows shifted up one slot).
pub fn build_stacks(
    slc: &ComplexImage,
    plan: &SubAperturePlan,
) -> Result<(SubApertureStack, SubApertureStack), SpectralError> {
    if plan.n_sub < 2 {
        return Err(SpectralError::TooFewSubApertures(plan.n_sub));
    }
    plan.check_slave_fit()?;
    let master_images: Vec<ComplexImage> = (0..plan.n_sub)
        .map(|i| extract_slot(slc, plan, i))
        .collect();
    let slave_images: Vec<ComplexImage> = (0..plan.n_sub)
        .map(|i| extract_slot(slc, plan, i + 1))
        .collect();
    Ok((
        SubApertureStack {
            plan: plan.clone(),
            images: master_images,
            role: StackRole::Master,
        },
        SubApertureStack {
            plan: plan.clone(),
            images: slave_images,
            role: StackRole::Slave,
        },
    ))
}
