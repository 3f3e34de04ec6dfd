//! Sub-pixel coregistration of master/slave sub-aperture pairs.
//!
//! Offsets come from the normalized cross-correlation peak: a coarse
//! full-tile correlation via FFT locates the integer lag inside the search
//! radius, a zero-padded-equivalent local DFT oversamples the correlation
//! surface around it by `oversample_factor`, and an optional parabolic fit
//! refines the vertex. Range shift rides in the real part of a shift sample,
//! azimuth in the imaginary part.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use thiserror::Error;

use crate::fft::{fft2_in_place, signed_bin};
use crate::image::{ComplexImage, ImageError};
use crate::spectral::SubApertureStack;

#[derive(Debug, Error, PartialEq)]
pub enum TrackError {
    #[error("track config field `{0}` violates its bound")]
    BadConfig(&'static str),
    #[error("tiles must share dimensions, got {0}x{1} vs {2}x{3}")]
    TileMismatch(usize, usize, usize, usize),
    #[error("tile of {rows}x{cols} is smaller than the {window} px window")]
    TileTooSmall {
        rows: usize,
        cols: usize,
        window: usize,
    },
    #[error("no texture: tile is constant, correlation peak is undefined")]
    NoTexture,
    #[error("stacks disagree in {0}")]
    StackMismatch(&'static str),
    #[error("pixel ({0}, {1}) is too close to the border for the tracking window")]
    PixelNearBorder(usize, usize),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Peak interpolation after oversampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakFit {
    #[default]
    Parabolic,
    None,
}

/// Correlator settings. Defaults: 33 px window, 32x oversampling, 4 px
/// search radius, parabolic vertex fit, 0.3 quality floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackConfig {
    pub window_size: usize,
    pub oversample_factor: usize,
    pub search_radius: usize,
    pub peak_fit: PeakFit,
    pub correlation_floor: f64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            window_size: 33,
            oversample_factor: 32,
            search_radius: 4,
            peak_fit: PeakFit::Parabolic,
            correlation_floor: 0.3,
        }
    }
}

impl TrackConfig {
    pub fn validate(&self) -> Result<(), TrackError> {
        if self.window_size < 9 || self.window_size % 2 == 0 {
            return Err(TrackError::BadConfig("window_size"));
        }
        if self.oversample_factor < 2 {
            return Err(TrackError::BadConfig("oversample_factor"));
        }
        if self.search_radius == 0 {
            return Err(TrackError::BadConfig("search_radius"));
        }
        if !(self.correlation_floor >= 0.0 && self.correlation_floor < 1.0) {
            return Err(TrackError::BadConfig("correlation_floor"));
        }
        Ok(())
    }
}

/// One tile registration result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileShift {
    /// Range (row) shift in pixels.
    pub dr: f64,
    /// Azimuth (column) shift in pixels.
    pub da: f64,
    /// Normalized correlation peak in [0, 1].
    pub peak: f64,
    /// Peak fell below the configured correlation floor.
    pub low_quality: bool,
}

/// Per-pixel complex shift vector across the sub-aperture pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSeries {
    pub pixel: (usize, usize),
    /// `dr + j da` per sub-aperture pair, pixels.
    pub shifts: Vec<Complex64>,
    /// Correlation peaks aligned with `shifts`.
    pub quality: Vec<f64>,
}

impl ShiftSeries {
    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }
}

/// Sub-pixel offset between two equally sized tiles: the location of the
/// normalized cross-correlation maximum, so that the slave equals the master
/// displaced by the returned `(dr, da)`.
pub fn coregister_tile(
    master: &ComplexImage,
    slave: &ComplexImage,
    cfg: &TrackConfig,
) -> Result<TileShift, TrackError> {
    cfg.validate()?;
    let (rows, cols) = (master.rows(), master.cols());
    if rows != slave.rows() || cols != slave.cols() {
        return Err(TrackError::TileMismatch(
            rows,
            cols,
            slave.rows(),
            slave.cols(),
        ));
    }
    if rows < cfg.window_size || cols < cfg.window_size {
        return Err(TrackError::TileTooSmall {
            rows,
            cols,
            window: cfg.window_size,
        });
    }
    check_texture(master)?;
    check_texture(slave)?;

    let energy_m = master.energy();
    let energy_s = slave.energy();
    let norm = (energy_m * energy_s).sqrt();

    // Cross spectrum conj(F(master)) .* F(slave): its inverse transform
    // peaks at the master-to-slave displacement.
    let mut fm = master.pixels().to_vec();
    let mut fs = slave.pixels().to_vec();
    fft2_in_place(&mut fm, rows, cols, FftDirection::Forward);
    fft2_in_place(&mut fs, rows, cols, FftDirection::Forward);
    let cross: Vec<Complex64> = fm
        .iter()
        .zip(fs.iter())
        .map(|(m, s)| m.conj() * s)
        .collect();

    let mut corr = cross.clone();
    fft2_in_place(&mut corr, rows, cols, FftDirection::Inverse);
    let scale = 1.0 / (rows * cols) as f64;

    // Coarse integer lag restricted to the search radius.
    let rad_r = cfg.search_radius.min(rows / 2 - 1).max(1) as i64;
    let rad_c = cfg.search_radius.min(cols / 2 - 1).max(1) as i64;
    let mut best = (0i64, 0i64, f64::NEG_INFINITY);
    for lr in -rad_r..=rad_r {
        let r = lr.rem_euclid(rows as i64) as usize;
        for lc in -rad_c..=rad_c {
            let c = lc.rem_euclid(cols as i64) as usize;
            let v = corr[r * cols + c].norm();
            if v > best.2 {
                best = (lr, lc, v);
            }
        }
    }

    // Oversampled correlation on a +/-1.5 px grid around the coarse lag.
    let os = cfg.oversample_factor;
    let span = (3 * os / 2) as i64;
    let step = 1.0 / os as f64;
    let centers_r: Vec<f64> = (-span..=span)
        .map(|i| best.0 as f64 + i as f64 * step)
        .collect();
    let centers_c: Vec<f64> = (-span..=span)
        .map(|i| best.1 as f64 + i as f64 * step)
        .collect();
    let local = local_correlation(&cross, rows, cols, &centers_r, &centers_c);

    let (mut ur, mut uc, mut peak_mag) = (0usize, 0usize, f64::NEG_INFINITY);
    for (i, row) in local.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let m = v.norm();
            if m > peak_mag {
                (ur, uc, peak_mag) = (i, j, m);
            }
        }
    }

    let mut dr = centers_r[ur];
    let mut da = centers_c[uc];
    if cfg.peak_fit == PeakFit::Parabolic {
        if ur > 0 && ur + 1 < local.len() {
            dr += step
                * parabolic_offset(
                    local[ur - 1][uc].norm(),
                    local[ur][uc].norm(),
                    local[ur + 1][uc].norm(),
                );
        }
        if uc > 0 && uc + 1 < local[0].len() {
            da += step
                * parabolic_offset(
                    local[ur][uc - 1].norm(),
                    local[ur][uc].norm(),
                    local[ur][uc + 1].norm(),
                );
        }
    }

    let peak = if norm > 0.0 {
        (peak_mag * scale / norm).min(1.0)
    } else {
        0.0
    };
    Ok(TileShift {
        dr,
        da,
        peak,
        low_quality: peak < cfg.correlation_floor,
    })
}

fn check_texture(tile: &ComplexImage) -> Result<(), TrackError> {
    let n = tile.pixels().len() as f64;
    let mean = tile.pixels().iter().sum::<Complex64>() / n;
    let energy = tile.energy();
    let demeaned: f64 = tile
        .pixels()
        .iter()
        .map(|v| (v - mean).norm_sqr())
        .sum();
    if energy == 0.0 || demeaned <= 1e-20 * energy {
        return Err(TrackError::NoTexture);
    }
    Ok(())
}

/// Evaluate the inverse transform of the cross spectrum at arbitrary lags
/// via two small matrix products (equivalent to zero-padded oversampling,
/// restricted to the requested neighborhood).
fn local_correlation(
    cross: &[Complex64],
    rows: usize,
    cols: usize,
    lags_r: &[f64],
    lags_c: &[f64],
) -> Vec<Vec<Complex64>> {
    let two_pi = 2.0 * std::f64::consts::PI;
    // T[n][v] = sum_q cross[n][q] * exp(+j 2 pi q_signed lag_c / cols)
    let mut t = vec![vec![Complex64::default(); lags_c.len()]; rows];
    for n in 0..rows {
        for q in 0..cols {
            let s = cross[n * cols + q];
            if s == Complex64::default() {
                continue;
            }
            let qf = signed_bin(q, cols) as f64 / cols as f64;
            for (v, lag) in lags_c.iter().enumerate() {
                let w = Complex64::from_polar(1.0, two_pi * qf * lag);
                t[n][v] += s * w;
            }
        }
    }
    let mut out = vec![vec![Complex64::default(); lags_c.len()]; lags_r.len()];
    for (u, lag_r) in lags_r.iter().enumerate() {
        for n in 0..rows {
            let nf = signed_bin(n, rows) as f64 / rows as f64;
            let w = Complex64::from_polar(1.0, two_pi * nf * lag_r);
            for v in 0..lags_c.len() {
                out[u][v] += t[n][v] * w;
            }
        }
    }
    out
}

fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom.abs() < 1e-300 {
        return 0.0;
    }
    let off = 0.5 * (left - right) / denom;
    off.clamp(-0.5, 0.5)
}

/// Track a set of pixels across every master/slave pair of two conformal
/// stacks. Pixels whose window leaves the image yield an error entry while
/// the rest proceed.
pub fn track_pixels(
    master: &SubApertureStack,
    slave: &SubApertureStack,
    pixels: &[(usize, usize)],
    cfg: &TrackConfig,
) -> Result<Vec<Result<ShiftSeries, TrackError>>, TrackError> {
    cfg.validate()?;
    if master.len() != slave.len() {
        return Err(TrackError::StackMismatch("sub-aperture count"));
    }
    if master.is_empty() {
        return Err(TrackError::StackMismatch("empty stacks"));
    }
    let rows = master.images[0].rows();
    let cols = master.images[0].cols();
    if slave.images[0].rows() != rows || slave.images[0].cols() != cols {
        return Err(TrackError::StackMismatch("image dimensions"));
    }

    let results: Vec<Result<ShiftSeries, TrackError>> = pixels
        .par_iter()
        .map(|&(r, c)| track_one(master, slave, r, c, cfg))
        .collect();
    Ok(results)
}

fn track_one(
    master: &SubApertureStack,
    slave: &SubApertureStack,
    r: usize,
    c: usize,
    cfg: &TrackConfig,
) -> Result<ShiftSeries, TrackError> {
    let k = master.len();
    let mut shifts = Vec::with_capacity(k);
    let mut quality = Vec::with_capacity(k);
    for i in 0..k {
        let mt = master.images[i]
            .window(r, c, cfg.window_size)
            .map_err(|_| TrackError::PixelNearBorder(r, c))?;
        let st = slave.images[i]
            .window(r, c, cfg.window_size)
            .map_err(|_| TrackError::PixelNearBorder(r, c))?;
        let shift = coregister_tile(&mt, &st, cfg)?;
        shifts.push(Complex64::new(shift.dr, shift.da));
        quality.push(shift.peak);
    }
    Ok(ShiftSeries {
        pixel: (r, c),
        shifts,
        quality,
    })
}

/// Circularly displace an image by a possibly fractional `(dr, da)` through
/// a spectral phase ramp: the output equals the input evaluated at
/// `(r - dr, c - da)` under band-limited interpolation.
pub fn fourier_shift(img: &ComplexImage, dr: f64, da: f64) -> ComplexImage {
    let rows = img.rows();
    let cols = img.cols();
    let mut spec = img.pixels().to_vec();
    fft2_in_place(&mut spec, rows, cols, FftDirection::Forward);
    let two_pi = 2.0 * std::f64::consts::PI;
    for n in 0..rows {
        let fr = signed_bin(n, rows) as f64 / rows as f64;
        let row_ramp = Complex64::from_polar(1.0, -two_pi * fr * dr);
        for q in 0..cols {
            let fc = signed_bin(q, cols) as f64 / cols as f64;
            let ramp = row_ramp * Complex64::from_polar(1.0, -two_pi * fc * da);
            spec[n * cols + q] *= ramp;
        }
    }
    fft2_in_place(&mut spec, rows, cols, FftDirection::Inverse);
    let norm = 1.0 / (rows * cols) as f64;
    for v in spec.iter_mut() {
        *v *= norm;
    }
    ComplexImage::from_pixels(rows, cols, spec, img.range_spacing(), img.azimuth_spacing())
        .expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::slc::gaussian_pair;

    /// Band-limited random tile: white complex noise confined to half the
    /// spectral band on each axis, so fractional Fourier shifts are exact.
    fn textured_tile(n: usize, seed: u64) -> ComplexImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut spec = vec![Complex64::default(); n * n];
        for r in 0..n {
            let fr = signed_bin(r, n).abs() as f64 / n as f64;
            for c in 0..n {
                let fc = signed_bin(c, n).abs() as f64 / n as f64;
                let (a, b) = gaussian_pair(&mut rng);
                if fr <= 0.25 && fc <= 0.25 {
                    spec[r * n + c] = Complex64::new(a, b);
                }
            }
        }
        fft2_in_place(&mut spec, n, n, FftDirection::Inverse);
        let norm = 1.0 / (n * n) as f64;
        for v in spec.iter_mut() {
            *v *= norm;
        }
        ComplexImage::from_pixels(n, n, spec, 1.0, 1.0).unwrap()
    }

    fn add_noise(img: &mut ComplexImage, snr_db: f64, seed: u64) {
        let sigma =
            (img.energy() / img.pixels().len() as f64 * 10f64.powf(-snr_db / 10.0)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sigma / 2f64.sqrt();
        for px in img.pixels_mut() {
            let (a, b) = gaussian_pair(&mut rng);
            *px += Complex64::new(s * a, s * b);
        }
    }

    #[test]
    fn identical_tiles_register_at_zero() {
        let tile = textured_tile(33, 1);
        let cfg = TrackConfig::default();
        let shift = coregister_tile(&tile, &tile, &cfg).unwrap();
        assert!(shift.dr.abs() < 1e-9, "dr {}", shift.dr);
        assert!(shift.da.abs() < 1e-9, "da {}", shift.da);
        assert!((shift.peak - 1.0).abs() < 1e-9);
        assert!(!shift.low_quality);
    }

    #[test]
    fn fourier_shift_is_recovered() {
        let tile = textured_tile(33, 2);
        let moved = fourier_shift(&tile, 0.25, -0.40);
        let cfg = TrackConfig::default();
        let shift = coregister_tile(&tile, &moved, &cfg).unwrap();
        assert!((shift.dr - 0.25).abs() < 0.05, "dr {}", shift.dr);
        assert!((shift.da + 0.40).abs() < 0.05, "da {}", shift.da);
    }

    #[test]
    fn shift_recovery_under_20db_noise() {
        let cfg = TrackConfig::default();
        let mut worst: f64 = 0.0;
        for seed in 0..10 {
            let tile = textured_tile(33, 100 + seed);
            let mut moved = fourier_shift(&tile, 0.25, -0.40);
            add_noise(&mut moved, 20.0, 200 + seed);
            let shift = coregister_tile(&tile, &moved, &cfg).unwrap();
            worst = worst.max((shift.dr - 0.25).abs()).max((shift.da + 0.40).abs());
        }
        assert!(worst < 0.05, "worst axis error {worst}");
    }

    #[test]
    fn integer_roll_adds_to_estimate() {
        let tile = textured_tile(41, 3);
        let cfg = TrackConfig::default();
        // roll by (2, -3): slave(r, c) = master(r - 2, c + 3)
        let n = tile.rows();
        let mut rolled = ComplexImage::zeros(n, n, 1.0, 1.0).unwrap();
        for r in 0..n {
            for c in 0..n {
                let src_r = (r as i64 - 2).rem_euclid(n as i64) as usize;
                let src_c = (c as i64 + 3).rem_euclid(n as i64) as usize;
                rolled.set(r, c, tile.at(src_r, src_c));
            }
        }
        let base = coregister_tile(&tile, &tile, &cfg).unwrap();
        let shift = coregister_tile(&tile, &rolled, &cfg).unwrap();
        assert!((shift.dr - (base.dr + 2.0)).abs() < 0.01);
        assert!((shift.da - (base.da - 3.0)).abs() < 0.01);
        assert!((shift.peak - base.peak).abs() < 1e-6);
    }

    #[test]
    fn coregistration_is_antisymmetric() {
        let tile = textured_tile(33, 4);
        let moved = fourier_shift(&tile, -0.31, 0.18);
        let cfg = TrackConfig::default();
        let fwd = coregister_tile(&tile, &moved, &cfg).unwrap();
        let bwd = coregister_tile(&moved, &tile, &cfg).unwrap();
        assert!((fwd.dr + bwd.dr).abs() < 0.01);
        assert!((fwd.da + bwd.da).abs() < 0.01);
    }

    #[test]
    fn constant_tile_has_no_texture() {
        let mut tile = ComplexImage::zeros(33, 33, 1.0, 1.0).unwrap();
        for px in tile.pixels_mut() {
            *px = Complex64::new(0.7, -0.1);
        }
        let cfg = TrackConfig::default();
        assert!(matches!(
            coregister_tile(&tile, &tile, &cfg),
            Err(TrackError::NoTexture)
        ));
    }

    #[test]
    fn heavy_noise_flags_low_quality() {
        let cfg = TrackConfig {
            correlation_floor: 0.85,
            ..TrackConfig::default()
        };
        let mut flagged = 0;
        let trials = 100;
        for seed in 0..trials {
            let tile = textured_tile(33, 300 + seed);
            let mut noisy = tile.clone();
            add_noise(&mut noisy, 0.0, 400 + seed);
            let shift = coregister_tile(&tile, &noisy, &cfg).unwrap();
            if shift.low_quality {
                flagged += 1;
            }
        }
        assert!(flagged > 90, "only {flagged}/{trials} flagged");
    }

    #[test]
    fn quality_declines_with_noise() {
        let cfg = TrackConfig::default();
        let mut medians = Vec::new();
        for snr in [40.0, 20.0, 10.0, 0.0] {
            let mut peaks = Vec::new();
            for seed in 0..15 {
                let tile = textured_tile(33, 500 + seed);
                let mut noisy = tile.clone();
                add_noise(&mut noisy, snr, 600 + seed);
                peaks.push(coregister_tile(&tile, &noisy, &cfg).unwrap().peak);
            }
            peaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push(peaks[peaks.len() / 2]);
        }
        for w in medians.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "medians not monotone: {medians:?}");
        }
    }

    #[test]
    fn mismatched_tiles_are_rejected() {
        let a = textured_tile(33, 7);
        let b = textured_tile(35, 7);
        assert!(matches!(
            coregister_tile(&a, &b, &TrackConfig::default()),
            Err(TrackError::TileMismatch(..))
        ));
        let small = textured_tile(15, 7);
        assert!(matches!(
            coregister_tile(&small, &small, &TrackConfig::default()),
            Err(TrackError::TileTooSmall { .. })
        ));
    }

    #[test]
    fn config_bounds_are_enforced() {
        let mut cfg = TrackConfig::default();
        cfg.window_size = 8;
        assert!(cfg.validate().is_err());
        cfg = TrackConfig::default();
        cfg.oversample_factor = 1;
        assert!(cfg.validate().is_err());
        cfg = TrackConfig::default();
        cfg.correlation_floor = 1.0;
        assert!(cfg.validate().is_err());
    }
}
