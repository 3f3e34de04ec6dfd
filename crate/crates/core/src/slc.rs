//! Synthetic focused SLC scenes of point scatterers.
//!
//! A stationary point target renders as
//! `amplitude * exp(-j 4 pi r / lambda) * sinc(pi b_r (k - L_cg)) * sinc(pi b_a (x - L_Dh))`
//! with `sinc(u) = sin(u)/u`, where `(L_cg, L_Dh)` are the beam-center
//! coordinates in bins and `(b_r, b_a)` the chirp/Doppler bandwidths
//! normalized to the grid sampling rates (cycles per bin). A target moving
//! at constant range velocity picks up the azimuth beam-center displacement
//! `-eps_r1 * R0` of the second-order range model.
//!
//! Vibrating scatterers use quasi-static segment synthesis: the acquisition
//! time is split into equal slow-time segments, each mapped to one slice of
//! the occupied Doppler band, and the scatterer is rendered frozen at its
//! mid-segment displacement inside that slice. A Doppler sub-aperture
//! aligned with a slice therefore sees the scatterer at that instant. This
//! is the simulator's coupling model; the apparent displacement per meter of
//! ground motion is the configurable `shift_gain`.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftDirection;
use thiserror::Error;

use crate::fft::{fft2_in_place, signed_bin};
use crate::geometry::{motion_epsilons, RadarGeometry, TargetState};
use crate::image::{ComplexImage, ImageError};
use crate::oscillator::Trajectory;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene must contain at least one scatterer")]
    EmptyScene,
    #[error("scatterer amplitude must be strictly positive, got {0}")]
    BadAmplitude(f64),
    #[error("target beam center ({range_bin:.2}, {azimuth_bin:.2}) falls outside the {rows} x {cols} canvas")]
    TargetOutsideCanvas {
        range_bin: f64,
        azimuth_bin: f64,
        rows: usize,
        cols: usize,
    },
    #[error("normalized {axis} bandwidth {value:.3} must lie in (0, 1]; adjust spacing or bandwidth")]
    BandwidthOutOfRange { axis: &'static str, value: f64 },
    #[error("scatterer has no trajectory but a vibrating render was requested")]
    MissingTrajectory,
    #[error("trajectory spans [{start}, {end}] s but the acquisition lasts {duration} s")]
    TrajectoryTooShort { start: f64, end: f64, duration: f64 },
    #[error("vibrating scenes need at least 2 segments, got {0}")]
    TooFewSegments(usize),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// Canvas dimensions and bin spacings for a rendered scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanvasSpec {
    pub rows: usize,
    pub cols: usize,
    /// Meters of slant range per row.
    pub range_spacing: f64,
    /// Meters of azimuth per column.
    pub azimuth_spacing: f64,
}

impl CanvasSpec {
    pub fn empty_image(&self) -> Result<ComplexImage, ImageError> {
        ComplexImage::zeros(self.rows, self.cols, self.range_spacing, self.azimuth_spacing)
    }
}

/// One point scatterer: kinematic state, aggregate amplitude, optional
/// micro-motion trajectory and its ground-to-image coupling gain.
#[derive(Debug, Clone)]
pub struct ScattererSpec {
    pub target: TargetState,
    pub amplitude: f64,
    pub trajectory: Option<Trajectory>,
    pub shift_gain: f64,
}

impl ScattererSpec {
    pub fn stationary(range_m: f64, azimuth_m: f64, amplitude: f64) -> Self {
        Self {
            target: TargetState::stationary(range_m, azimuth_m),
            amplitude,
            trajectory: None,
            shift_gain: 1.0,
        }
    }

    fn validate(&self, geom: &RadarGeometry) -> Result<(), SceneError> {
        if !(self.amplitude > 0.0) {
            return Err(SceneError::BadAmplitude(self.amplitude));
        }
        if let Some(t) = &self.trajectory {
            let tol = 1e-9 * geom.acquisition_duration;
            if t.start_time() > tol || t.end_time() < geom.acquisition_duration - tol {
                return Err(SceneError::TrajectoryTooShort {
                    start: t.start_time(),
                    end: t.end_time(),
                    duration: geom.acquisition_duration,
                });
            }
        }
        Ok(())
    }
}

/// Chirp and Doppler bandwidths in cycles per bin for the given canvas:
/// `b_r = 2 B_cr dr / c`, `b_a = B_cD / prf`.
pub fn normalized_bandwidths(
    geom: &RadarGeometry,
    canvas: &CanvasSpec,
) -> Result<(f64, f64), SceneError> {
    let b_r = 2.0 * geom.chirp_bandwidth * canvas.range_spacing / SPEED_OF_LIGHT;
    let b_a = geom.doppler_bandwidth / geom.prf;
    for (axis, value) in [("range", b_r), ("azimuth", b_a)] {
        if !(value > 0.0 && value <= 1.0) {
            return Err(SceneError::BandwidthOutOfRange { axis, value });
        }
    }
    Ok((b_r, b_a))
}

/// Beam-center coordinates of a target in bins. Constant range velocity
/// displaces the azimuth beam center by `-eps_r1 * R0`.
pub fn beam_center(
    target: &TargetState,
    geom: &RadarGeometry,
    canvas: &CanvasSpec,
) -> Result<(f64, f64), SceneError> {
    let eps = motion_epsilons(target, geom)?;
    let azimuth_m = target.azimuth_position - eps.eps_r1 * geom.reference_range;
    let l_cg = target.range_position / canvas.range_spacing;
    let l_dh = azimuth_m / canvas.azimuth_spacing;
    let inside = l_cg >= 0.0
        && l_cg <= (canvas.rows - 1) as f64
        && l_dh >= 0.0
        && l_dh <= (canvas.cols - 1) as f64;
    if !inside {
        return Err(SceneError::TargetOutsideCanvas {
            range_bin: l_cg,
            azimuth_bin: l_dh,
            rows: canvas.rows,
            cols: canvas.cols,
        });
    }
    Ok((l_cg, l_dh))
}

#[inline]
fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-6 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

fn canvas_of(image: &ComplexImage) -> CanvasSpec {
    CanvasSpec {
        rows: image.rows(),
        cols: image.cols(),
        range_spacing: image.range_spacing(),
        azimuth_spacing: image.azimuth_spacing(),
    }
}

fn add_sinc_target(
    canvas: &mut ComplexImage,
    amp_phase: Complex64,
    l_cg: f64,
    l_dh: f64,
    b_r: f64,
    b_a: f64,
) {
    let cols = canvas.cols();
    let rows = canvas.rows();
    let pi = std::f64::consts::PI;
    // Azimuth profile is shared by every row.
    let az: Vec<f64> = (0..cols)
        .map(|m| sinc(pi * b_a * (m as f64 - l_dh)))
        .collect();
    let pixels = canvas.pixels_mut();
    pixels
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(k, row)| {
            if k >= rows {
                return;
            }
            let rg = sinc(pi * b_r * (k as f64 - l_cg));
            let row_amp = amp_phase * rg;
            for (m, px) in row.iter_mut().enumerate() {
                *px += row_amp * az[m];
            }
        });
}

/// Add one point target to `canvas` following the sinc model. The absolute
/// zero-Doppler range entering the peak phase is
/// `zero_doppler_range + range_position`.
pub fn render_point_target(
    spec: &ScattererSpec,
    geom: &RadarGeometry,
    canvas: &mut ComplexImage,
) -> Result<(), SceneError> {
    spec.validate(geom)?;
    let cs = canvas_of(canvas);
    let (b_r, b_a) = normalized_bandwidths(geom, &cs)?;
    let (l_cg, l_dh) = beam_center(&spec.target, geom, &cs)?;
    let r_abs = geom.zero_doppler_range + spec.target.range_position;
    let phase = -4.0 * std::f64::consts::PI * r_abs / geom.wavelength_em;
    let amp_phase = Complex64::from_polar(spec.amplitude, phase);
    add_sinc_target(canvas, amp_phase, l_cg, l_dh, b_r, b_a);
    Ok(())
}

/// Quasi-static positions of a vibrating scatterer: the acquisition time is
/// split into `n_segments` equal slices and the trajectory is sampled at
/// each midpoint. Returned positions are scene meters
/// `(range, azimuth) = static + shift_gain * (r_x, r_y)`.
pub fn vibrating_target_positions(
    spec: &ScattererSpec,
    geom: &RadarGeometry,
    n_segments: usize,
) -> Result<Vec<(f64, f64)>, SceneError> {
    let traj = spec.trajectory.as_ref().ok_or(SceneError::MissingTrajectory)?;
    if n_segments < 2 {
        return Err(SceneError::TooFewSegments(n_segments));
    }
    spec.validate(geom)?;
    let seg = geom.acquisition_duration / n_segments as f64;
    Ok((0..n_segments)
        .map(|i| {
            let midpoint = (i as f64 + 0.5) * seg;
            let d = traj.sample(midpoint);
            (
                spec.target.range_position + spec.shift_gain * d[0],
                spec.target.azimuth_position + spec.shift_gain * d[1],
            )
        })
        .collect())
}

/// Columns of the canvas whose azimuth frequency falls into slice `slot` of
/// the occupied band split into `n_segments` equal slices. The column grid
/// is sampled at `prf`, the occupied band is `[-B_cD/2, +B_cD/2]`.
fn segment_columns(
    geom: &RadarGeometry,
    cols: usize,
    n_segments: usize,
    slot: usize,
) -> Vec<usize> {
    let band = geom.doppler_bandwidth;
    let width = band / n_segments as f64;
    let lo = -band / 2.0;
    (0..cols)
        .filter(|&q| {
            let f = geom.prf * signed_bin(q, cols) as f64 / cols as f64;
            let idx = ((f - lo) / width).floor();
            idx >= 0.0 && (idx as usize) == slot && f < lo + band
        })
        .collect()
}

/// Render a full scene: the sum of all point targets, quasi-static band
/// synthesis for vibrating scatterers, and optional circular complex white
/// noise at `noise_snr_db` relative to the mean scatterer peak power.
/// Identical inputs and seed produce a bit-identical image.
pub fn render_scene(
    specs: &[ScattererSpec],
    geom: &RadarGeometry,
    canvas: &CanvasSpec,
    noise_snr_db: Option<f64>,
    seed: u64,
    vibration_segments: usize,
) -> Result<ComplexImage, SceneError> {
    if specs.is_empty() {
        return Err(SceneError::EmptyScene);
    }
    let mut image = canvas.empty_image()?;

    let mut vibrating: Vec<&ScattererSpec> = Vec::new();
    for spec in specs {
        if spec.trajectory.is_some() {
            spec.validate(geom)?;
            vibrating.push(spec);
        } else {
            render_point_target(spec, geom, &mut image)?;
        }
    }

    if !vibrating.is_empty() {
        if vibration_segments < 2 {
            return Err(SceneError::TooFewSegments(vibration_segments));
        }
        let (b_r, b_a) = normalized_bandwidths(geom, canvas)?;
        let rows = canvas.rows;
        let cols = canvas.cols;
        let mut spectrum = vec![Complex64::default(); rows * cols];
        let mut scratch = canvas.empty_image()?;
        for spec in vibrating {
            let positions = vibrating_target_positions(spec, geom, vibration_segments)?;
            let r_abs = geom.zero_doppler_range + spec.target.range_position;
            let phase = -4.0 * std::f64::consts::PI * r_abs / geom.wavelength_em;
            let amp_phase = Complex64::from_polar(spec.amplitude, phase);
            for (slot, (range_m, azimuth_m)) in positions.iter().enumerate() {
                let moved = TargetState {
                    range_position: *range_m,
                    azimuth_position: *azimuth_m,
                    ..spec.target
                };
                let (l_cg, l_dh) = beam_center(&moved, geom, canvas)?;
                scratch.pixels_mut().fill(Complex64::default());
                add_sinc_target(&mut scratch, amp_phase, l_cg, l_dh, b_r, b_a);
                fft2_in_place(scratch.pixels_mut(), rows, cols, FftDirection::Forward);
                for q in segment_columns(geom, cols, vibration_segments, slot) {
                    for k in 0..rows {
                        spectrum[k * cols + q] += scratch.pixels()[k * cols + q];
                    }
                }
            }
        }
        fft2_in_place(&mut spectrum, rows, cols, FftDirection::Inverse);
        let norm = 1.0 / (rows * cols) as f64;
        for (dst, src) in image.pixels_mut().iter_mut().zip(spectrum.iter()) {
            *dst += src * norm;
        }
    }

    if let Some(snr_db) = noise_snr_db {
        if snr_db.is_finite() {
            let mean_peak_power =
                specs.iter().map(|s| s.amplitude * s.amplitude).sum::<f64>() / specs.len() as f64;
            let sigma = (mean_peak_power * 10f64.powf(-snr_db / 10.0)).sqrt();
            add_circular_noise(&mut image, sigma, seed);
        }
    }

    Ok(image)
}

/// Circular complex white noise of per-pixel power sigma^2, Box-Muller over
/// a ChaCha8 stream so runs are reproducible across platforms.
fn add_circular_noise(image: &mut ComplexImage, sigma: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = sigma / 2f64.sqrt();
    for px in image.pixels_mut().iter_mut() {
        let (n1, n2) = gaussian_pair(&mut rng);
        *px += Complex64::new(scale * n1, scale * n2);
    }
}

/// Two independent standard normal draws via Box-Muller. The uniform
/// mapping ((u >> 11) + 0.5) * 2^-53 stays strictly inside (0, 1).
pub(crate) fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0);
    let u2 = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0);
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * std::f64::consts::PI * u2;
    (radius * angle.cos(), radius * angle.sin())
}
