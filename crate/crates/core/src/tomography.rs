//! Depth focusing of per-pixel shift phasor vectors.
//!
//! Each tracked pixel contributes a length-k complex vector Y. The steering
//! matrix `A[i][f] = exp(j 2 pi K_z[i] t z_f)` links depth bins to phasor
//! signatures through the vertical wavenumbers
//! `K_z[i] = 4 pi B_perp[i] / (lambda_s r_i sin theta)`. Focusing is either
//! the matched filter `h = A^H y / k` (pulse compression) or the regularized
//! pseudo-inverse `h = (A^H A + tik tr(A^H A)/F I)^{-1} A^H y`.
//!
//! A single SLC has no physical orbital baselines; the synthetic set
//! `B_perp[i] = i A / (k - 1)` spreads the configured orbital aperture
//! uniformly over the sub-apertures, which is the central modeling
//! assumption of the chain.

use num_complex::Complex64;
use thiserror::Error;

use crate::tracking::ShiftSeries;

/// 3 dB full width of the k-point Dirichlet mainlobe in units of the
/// inverse spanned bandwidth (2x/pi with sin(x)/x = 1/sqrt(2)).
const DIRICHLET_3DB: f64 = 0.885_892_941;

#[derive(Debug, Error, PartialEq)]
pub enum TomoError {
    #[error("sonic parameter `{0}` violates its bound")]
    BadParam(&'static str),
    #[error("baselines ({baselines}) and slant ranges ({ranges}) must share length")]
    LengthMismatch { baselines: usize, ranges: usize },
    #[error("depth grid needs z_min < z_max and at least 2 bins")]
    BadGrid,
    #[error("steering needs at least 2 sub-apertures, got {0}")]
    TooFewApertures(usize),
    #[error("data vector length {got} does not match the {expect} steering rows")]
    DataLengthMismatch { got: usize, expect: usize },
    #[error("normal matrix is numerically singular (condition estimate {condition:.3e}); use tikhonov > 0")]
    SingularNormalMatrix { condition: f64 },
    #[error("no shift series to focus")]
    EmptySeries,
    #[error("shift series at pixel ({0}, {1}) has length {2}, expected {3}")]
    SeriesLengthMismatch(usize, usize, usize, usize),
}

/// Depth axis: F bins spanning [z_min, z_max] inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub n_bins: usize,
}

impl DepthGrid {
    pub fn new(z_min: f64, z_max: f64, n_bins: usize) -> Result<Self, TomoError> {
        if !(z_min < z_max) || n_bins < 2 || !z_min.is_finite() || !z_max.is_finite() {
            return Err(TomoError::BadGrid);
        }
        Ok(Self {
            z_min,
            z_max,
            n_bins,
        })
    }

    /// Grid spanning exactly one unambiguous period of a uniform-step
    /// wavenumber set: with `z_f = f / (k kz_step t)` the steering columns
    /// are orthogonal and focusing reduces to a DFT.
    pub fn full_period(kz_step: f64, time_scale: f64, k: usize) -> Result<Self, TomoError> {
        if !(kz_step > 0.0) || !(time_scale > 0.0) || k < 2 {
            return Err(TomoError::BadGrid);
        }
        let period = 1.0 / (kz_step * time_scale);
        Ok(Self {
            z_min: 0.0,
            z_max: period * (k - 1) as f64 / k as f64,
            n_bins: k,
        })
    }

    pub fn spacing(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_bins - 1) as f64
    }

    pub fn depths(&self) -> Vec<f64> {
        let step = self.spacing();
        (0..self.n_bins).map(|f| self.z_min + f as f64 * step).collect()
    }

    pub fn nearest_bin(&self, z: f64) -> usize {
        let idx = ((z - self.z_min) / self.spacing()).round();
        (idx.max(0.0) as usize).min(self.n_bins - 1)
    }
}

/// Sonic propagation and synthetic-aperture constants for one tomogram.
#[derive(Debug, Clone, PartialEq)]
pub struct SonicParams {
    /// Seismic wave speed (m/s).
    pub wave_speed: f64,
    /// Investigation frequency (Hz).
    pub probe_frequency: f64,
    /// Per-sub-aperture slant ranges r_i (m).
    pub slant_ranges: Vec<f64>,
    /// Per-sub-aperture orthogonal baselines B_perp_i (m).
    pub baselines: Vec<f64>,
    /// Incidence angle (rad).
    pub incidence_angle: f64,
    /// Time scale t in the steering phase exp(j 2 pi K_z t z) (s).
    pub time_scale: f64,
}

impl SonicParams {
    /// Uniform geometry: k sub-apertures at one slant range, baselines
    /// spreading [0, aperture] evenly.
    pub fn uniform(
        wave_speed: f64,
        probe_frequency: f64,
        slant_range: f64,
        aperture: f64,
        incidence_angle: f64,
        time_scale: f64,
        k: usize,
    ) -> Result<Self, TomoError> {
        let p = Self {
            wave_speed,
            probe_frequency,
            slant_ranges: vec![slant_range; k],
            baselines: synthetic_baselines(k, aperture),
            incidence_angle,
            time_scale,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TomoError> {
        if !(self.wave_speed > 0.0) {
            return Err(TomoError::BadParam("wave_speed"));
        }
        if !(self.probe_frequency > 0.0) {
            return Err(TomoError::BadParam("probe_frequency"));
        }
        if !(self.time_scale > 0.0) {
            return Err(TomoError::BadParam("time_scale"));
        }
        if self.baselines.len() != self.slant_ranges.len() {
            return Err(TomoError::LengthMismatch {
                baselines: self.baselines.len(),
                ranges: self.slant_ranges.len(),
            });
        }
        if self.slant_ranges.iter().any(|r| !(*r > 0.0)) {
            return Err(TomoError::BadParam("slant_ranges"));
        }
        if self.baselines.iter().any(|b| !(*b >= 0.0)) {
            return Err(TomoError::BadParam("baselines"));
        }
        let s = self.incidence_angle.sin();
        if !(s > 0.0) {
            return Err(TomoError::BadParam("incidence_angle"));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.baselines.len()
    }

    /// Sound wavelength lambda_s = v / f, recomputed so it can never drift
    /// from the stored speed and frequency.
    pub fn wavelength_sound(&self) -> f64 {
        self.wave_speed / self.probe_frequency
    }

    /// Largest configured baseline, the synthetic orbital aperture.
    pub fn aperture(&self) -> f64 {
        self.baselines.iter().cloned().fold(0.0, f64::max)
    }

    /// Time scale making the matched-filter depth mainlobe width equal the
    /// nominal resolution `lambda_s R / (2 A)`. Assumes uniform baselines
    /// and equal slant ranges; with those, the Dirichlet 3 dB width over the
    /// spanned wavenumbers matches the nominal figure when
    /// `t = 0.8859 (k - 1) sin(theta) / (2 pi k)`.
    pub fn time_scale_for_nominal_resolution(&self) -> f64 {
        let k = self.k() as f64;
        DIRICHLET_3DB * (k - 1.0) * self.incidence_angle.sin() / (2.0 * std::f64::consts::PI * k)
    }
}

/// Evenly spread baselines `B_perp[i] = i A / (k - 1)`.
pub fn synthetic_baselines(k: usize, aperture: f64) -> Vec<f64> {
    if k <= 1 {
        return vec![0.0; k];
    }
    (0..k)
        .map(|i| aperture * i as f64 / (k - 1) as f64)
        .collect()
}

/// Vertical wavenumbers `K_z[i] = 4 pi B_perp[i] / (lambda_s r_i sin theta)`.
pub fn vertical_wavenumbers(p: &SonicParams) -> Result<Vec<f64>, TomoError> {
    p.validate()?;
    let lambda = p.wavelength_sound();
    let sin_theta = p.incidence_angle.sin();
    Ok(p
        .baselines
        .iter()
        .zip(p.slant_ranges.iter())
        .map(|(b, r)| 4.0 * std::f64::consts::PI * b / (lambda * r * sin_theta))
        .collect())
}

/// k x F matrix of unit phasors mapping depth bins to signatures.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMatrix {
    entries: Vec<Complex64>,
    k: usize,
    n_depths: usize,
    kz: Vec<f64>,
    depths: Vec<f64>,
}

impl SteeringMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_depths(&self) -> usize {
        self.n_depths
    }

    pub fn kz(&self) -> &[f64] {
        &self.kz
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    #[inline]
    pub fn at(&self, i: usize, f: usize) -> Complex64 {
        self.entries[i * self.n_depths + f]
    }

    /// Column f as a signature vector.
    pub fn column(&self, f: usize) -> Vec<Complex64> {
        (0..self.k).map(|i| self.at(i, f)).collect()
    }
}

/// Build the steering matrix `A[i][f] = exp(j 2 pi kz[i] t z_f)`. The row of
/// any zero wavenumber (the reference sub-aperture) is all ones.
pub fn build_steering(
    kz: &[f64],
    grid: &DepthGrid,
    time_scale: f64,
) -> Result<SteeringMatrix, TomoError> {
    if kz.len() < 2 {
        return Err(TomoError::TooFewApertures(kz.len()));
    }
    if !(time_scale > 0.0) {
        return Err(TomoError::BadParam("time_scale"));
    }
    DepthGrid::new(grid.z_min, grid.z_max, grid.n_bins)?;
    let depths = grid.depths();
    let mut entries = Vec::with_capacity(kz.len() * depths.len());
    for &kzi in kz {
        for &z in &depths {
            let phase = 2.0 * std::f64::consts::PI * kzi * time_scale * z;
            entries.push(Complex64::from_polar(1.0, phase));
        }
    }
    Ok(SteeringMatrix {
        entries,
        k: kz.len(),
        n_depths: depths.len(),
        kz: kz.to_vec(),
        depths,
    })
}

/// Inversion route for [`focus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FocusMode {
    /// Matched filter `h = A^H y / k` (pulse compression).
    #[default]
    Matched,
    /// Regularized pseudo-inverse `h = (A^H A + tik tr/F I)^{-1} A^H y`.
    Pinv,
}

impl FocusMode {
    pub fn name(&self) -> &'static str {
        match self {
            FocusMode::Matched => "matched",
            FocusMode::Pinv => "pinv",
        }
    }
}

/// Focus one phasor vector into a depth profile.
pub fn focus(
    y: &[Complex64],
    a: &SteeringMatrix,
    mode: FocusMode,
    tikhonov: f64,
) -> Result<Vec<Complex64>, TomoError> {
    if y.len() != a.k() {
        return Err(TomoError::DataLengthMismatch {
            got: y.len(),
            expect: a.k(),
        });
    }
    match mode {
        FocusMode::Matched => Ok(matched_profile(y, a)),
        FocusMode::Pinv => {
            let lu = factor_normal(a, tikhonov)?;
            let mut rhs = adjoint_apply(y, a);
            lu.solve(&mut rhs);
            Ok(rhs)
        }
    }
}

fn matched_profile(y: &[Complex64], a: &SteeringMatrix) -> Vec<Complex64> {
    let k_inv = 1.0 / a.k() as f64;
    adjoint_apply(y, a)
        .into_iter()
        .map(|v| v * k_inv)
        .collect()
}

fn adjoint_apply(y: &[Complex64], a: &SteeringMatrix) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); a.n_depths()];
    for i in 0..a.k() {
        let yi = y[i];
        for (f, acc) in out.iter_mut().enumerate() {
            *acc += a.at(i, f).conj() * yi;
        }
    }
    out
}

/// LU factorization of the regularized normal matrix A^H A + reg I.
struct NormalLu {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
}

fn factor_normal(a: &SteeringMatrix, tikhonov: f64) -> Result<NormalLu, TomoError> {
    let n = a.n_depths();
    let k = a.k();
    let mut normal = vec![Complex64::default(); n * n];
    for f in 0..n {
        for g in f..n {
            let mut acc = Complex64::default();
            for i in 0..k {
                acc += a.at(i, f).conj() * a.at(i, g);
            }
            normal[f * n + g] = acc;
            normal[g * n + f] = acc.conj();
        }
    }
    // trace(A^H A) = sum |a|^2 = k * F for unit phasors
    let trace: f64 = (0..n).map(|f| normal[f * n + f].re).sum();
    let reg = tikhonov * trace / n as f64;
    for f in 0..n {
        normal[f * n + f] += Complex64::new(reg, 0.0);
    }
    lu_factor(normal, n)
}

fn lu_factor(mut m: Vec<Complex64>, n: usize) -> Result<NormalLu, TomoError> {
    let mut piv = vec![0usize; n];
    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let mut best = col;
        let mut best_mag = m[col * n + col].norm();
        for row in col + 1..n {
            let mag = m[row * n + col].norm();
            if mag > best_mag {
                best = row;
                best_mag = mag;
            }
        }
        piv[col] = best;
        if best != col {
            for j in 0..n {
                m.swap(col * n + j, best * n + j);
            }
        }
        max_pivot = max_pivot.max(best_mag);
        min_pivot = min_pivot.min(best_mag);
        if best_mag == 0.0 || best_mag < 1e-14 * max_pivot {
            let condition = if best_mag > 0.0 {
                max_pivot / best_mag
            } else {
                f64::INFINITY
            };
            return Err(TomoError::SingularNormalMatrix { condition });
        }
        let inv = Complex64::new(1.0, 0.0) / m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] * inv;
            m[row * n + col] = factor;
            for j in col + 1..n {
                let sub = factor * m[col * n + j];
                m[row * n + j] -= sub;
            }
        }
    }
    let _ = min_pivot;
    Ok(NormalLu { n, lu: m, piv })
}

impl NormalLu {
    fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for col in 0..n {
            b.swap(col, self.piv[col]);
            let x = b[col];
            for row in col + 1..n {
                let sub = self.lu[row * n + col] * x;
                b[row] -= sub;
            }
        }
        for col in (0..n).rev() {
            b[col] /= self.lu[col * n + col];
            let x = b[col];
            for row in 0..col {
                let sub = self.lu[row * n + col] * x;
                b[row] -= sub;
            }
        }
    }
}

/// Nominal tomographic resolution `delta_T = lambda_s R / (2 A)`.
pub fn tomographic_resolution(wavelength_sound: f64, slant_range: f64, aperture: f64) -> f64 {
    wavelength_sound * slant_range / (2.0 * aperture)
}

/// Normalization applied to an assembled tomogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalize {
    /// Raw magnitudes, for quantitative tests.
    #[default]
    Off,
    /// Peak of the whole image scaled to 1.
    Image,
    /// Each track column scaled to its own peak.
    Column,
}

/// Tomogram assembly settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssembleConfig {
    /// Samples with quality below this are zero-weighted.
    pub quality_floor: f64,
    pub normalize: Normalize,
    /// Tikhonov weight for pinv mode.
    pub tikhonov: f64,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        Self {
            quality_floor: 0.0,
            normalize: Normalize::Off,
            tikhonov: 1e-6,
        }
    }
}

/// Depth x along-track magnitude raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Tomogram {
    /// Row-major F x P magnitudes (depth bins x line pixels).
    pub magnitudes: Vec<f64>,
    pub depth_axis: Vec<f64>,
    /// Position of each focused pixel along the tracked line.
    pub track_axis: Vec<f64>,
    pub mode: FocusMode,
}

impl Tomogram {
    pub fn n_depths(&self) -> usize {
        self.depth_axis.len()
    }

    pub fn n_pixels(&self) -> usize {
        self.track_axis.len()
    }

    #[inline]
    pub fn at(&self, depth_bin: usize, pixel: usize) -> f64 {
        self.magnitudes[depth_bin * self.n_pixels() + pixel]
    }

    pub fn column(&self, pixel: usize) -> Vec<f64> {
        (0..self.n_depths()).map(|f| self.at(f, pixel)).collect()
    }

    pub fn global_peak(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for f in 0..self.n_depths() {
            for p in 0..self.n_pixels() {
                let v = self.at(f, p);
                if v > best.2 {
                    best = (f, p, v);
                }
            }
        }
        best
    }
}

/// Focus every shift series through the steering matrix; column p of the
/// tomogram is `|focus(Y_p)|` with low-quality samples zero-weighted.
pub fn assemble_tomogram(
    series: &[ShiftSeries],
    a: &SteeringMatrix,
    mode: FocusMode,
    cfg: &AssembleConfig,
) -> Result<Tomogram, TomoError> {
    if series.is_empty() {
        return Err(TomoError::EmptySeries);
    }
    let k = a.k();
    for s in series {
        if s.len() != k {
            return Err(TomoError::SeriesLengthMismatch(
                s.pixel.0,
                s.pixel.1,
                s.len(),
                k,
            ));
        }
    }
    let n_depths = a.n_depths();
    let n_pixels = series.len();
    let lu = match mode {
        FocusMode::Pinv => Some(factor_normal(a, cfg.tikhonov)?),
        FocusMode::Matched => None,
    };

    let mut magnitudes = vec![0.0f64; n_depths * n_pixels];
    for (p, s) in series.iter().enumerate() {
        let y: Vec<Complex64> = s
            .shifts
            .iter()
            .zip(s.quality.iter())
            .map(|(v, q)| {
                if *q < cfg.quality_floor {
                    Complex64::default()
                } else {
                    *v
                }
            })
            .collect();
        let profile = match &lu {
            Some(lu) => {
                let mut rhs = adjoint_apply(&y, a);
                lu.solve(&mut rhs);
                rhs
            }
            None => matched_profile(&y, a),
        };
        for (f, v) in profile.iter().enumerate() {
            magnitudes[f * n_pixels + p] = v.norm();
        }
    }

    match cfg.normalize {
        Normalize::Off => {}
        Normalize::Image => {
            let peak = magnitudes.iter().cloned().fold(0.0, f64::max);
            if peak > 0.0 {
                for v in magnitudes.iter_mut() {
                    *v /= peak;
                }
            }
        }
        Normalize::Column => {
            for p in 0..n_pixels {
                let peak = (0..n_depths)
                    .map(|f| magnitudes[f * n_pixels + p])
                    .fold(0.0, f64::max);
                if peak > 0.0 {
                    for f in 0..n_depths {
                        magnitudes[f * n_pixels + p] /= peak;
                    }
                }
            }
        }
    }

    Ok(Tomogram {
        magnitudes,
        depth_axis: a.depths().to_vec(),
        track_axis: (0..n_pixels).map(|p| p as f64).collect(),
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_params(k: usize) -> SonicParams {
        SonicParams::uniform(
            972.0,
            200.0,
            650_000.0,
            42_000.0,
            35f64.to_radians(),
            1.0,
            k,
        )
        .unwrap()
    }

    #[test]
    fn wavenumber_hand_value() {
        let p = SonicParams {
            wave_speed: 972.0,
            probe_frequency: 200.0,
            slant_ranges: vec![650_000.0; 2],
            baselines: vec![0.0, 21_000.0],
            incidence_angle: 35f64.to_radians(),
            time_scale: 1.0,
        };
        let kz = vertical_wavenumbers(&p).unwrap();
        assert_eq!(kz[0], 0.0);
        assert!((kz[1] - 0.1456).abs() < 2e-4, "kz {}", kz[1]);
    }

    #[test]
    fn wavenumbers_scale_linearly_with_baseline() {
        let mut p = uniform_params(8);
        let kz1 = vertical_wavenumbers(&p).unwrap();
        for b in p.baselines.iter_mut() {
            *b *= 2.0;
        }
        let kz2 = vertical_wavenumbers(&p).unwrap();
        for (a, b) in kz1.iter().zip(kz2.iter()) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_slant_range_is_rejected() {
        let mut p = uniform_params(4);
        p.slant_ranges[2] = 0.0;
        assert_eq!(
            vertical_wavenumbers(&p),
            Err(TomoError::BadParam("slant_ranges"))
        );
    }

    #[test]
    fn sound_wavelength_is_exact() {
        let p = uniform_params(4);
        assert_eq!(p.wavelength_sound(), 972.0 / 200.0);
        assert_eq!(p.wavelength_sound(), 4.86);
    }

    #[test]
    fn steering_entries_are_unit_phasors_and_reference_row_is_ones() {
        let p = uniform_params(6);
        let kz = vertical_wavenumbers(&p).unwrap();
        let grid = DepthGrid::new(-900.0, 0.0, 31).unwrap();
        let a = build_steering(&kz, &grid, p.time_scale).unwrap();
        for i in 0..a.k() {
            for f in 0..a.n_depths() {
                assert!((a.at(i, f).norm() - 1.0).abs() < 1e-12);
            }
        }
        for f in 0..a.n_depths() {
            assert!((a.at(0, f) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        // zero-depth column is all ones as well
        let zero_col = a.depths().iter().position(|z| *z == 0.0).unwrap();
        for i in 0..a.k() {
            assert!((a.at(i, zero_col) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_is_conjugate_symmetric_in_depth() {
        let p = uniform_params(5);
        let kz = vertical_wavenumbers(&p).unwrap();
        let grid = DepthGrid::new(-100.0, 100.0, 21).unwrap();
        let a = build_steering(&kz, &grid, p.time_scale).unwrap();
        let n = a.n_depths();
        for i in 0..a.k() {
            for f in 0..n {
                let mirrored = a.at(i, n - 1 - f);
                assert!((a.at(i, f) - mirrored.conj()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn full_period_grid_gives_orthogonal_columns() {
        let k = 8;
        let kz_step = 0.01;
        let t = 1.0;
        let kz: Vec<f64> = (0..k).map(|i| i as f64 * kz_step).collect();
        let grid = DepthGrid::full_period(kz_step, t, k).unwrap();
        let a = build_steering(&kz, &grid, t).unwrap();
        for f in 0..k {
            for g in 0..k {
                let mut acc = Complex64::default();
                for i in 0..k {
                    acc += a.at(i, f).conj() * a.at(i, g);
                }
                let expect = if f == g { k as f64 } else { 0.0 };
                assert!(
                    (acc - Complex64::new(expect, 0.0)).norm() < 1e-9,
                    "gram[{f}][{g}] = {acc}"
                );
            }
        }
    }

    #[test]
    fn matched_focus_peaks_at_source_depth() {
        // kz step 0.001 keeps the ambiguity period (1 km) beyond the grid
        // span so the mainlobe is the only Dirichlet peak inside it.
        let k = 12;
        let kz: Vec<f64> = (0..k).map(|i| i as f64 * 0.001).collect();
        let grid = DepthGrid::new(-800.0, 0.0, 161).unwrap();
        let a = build_steering(&kz, &grid, 1.0).unwrap();
        let f0 = grid.nearest_bin(-500.0);
        let y = a.column(f0);
        let h = focus(&y, &a, FocusMode::Matched, 0.0).unwrap();
        let peak = h
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, f0);
        assert!((h[f0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_data_focuses_to_zero() {
        let kz = vec![0.0, 0.01, 0.02, 0.03];
        let grid = DepthGrid::new(0.0, 100.0, 11).unwrap();
        let a = build_steering(&kz, &grid, 1.0).unwrap();
        let y = vec![Complex64::default(); 4];
        for mode in [FocusMode::Matched, FocusMode::Pinv] {
            let h = focus(&y, &a, mode, 1e-6).unwrap();
            assert!(h.iter().all(|v| v.norm() == 0.0));
        }
    }

    #[test]
    fn matched_pinv_and_dft_coincide_on_full_period_grid() {
        let k = 8;
        let kz_step = 0.02;
        let kz: Vec<f64> = (0..k).map(|i| i as f64 * kz_step).collect();
        let grid = DepthGrid::full_period(kz_step, 1.0, k).unwrap();
        let a = build_steering(&kz, &grid, 1.0).unwrap();
        // arbitrary data vector
        let y: Vec<Complex64> = (0..k)
            .map(|i| Complex64::new(0.3 + i as f64 * 0.1, (i as f64 * 0.7).sin()))
            .collect();
        let matched = focus(&y, &a, FocusMode::Matched, 0.0).unwrap();
        let pinv = focus(&y, &a, FocusMode::Pinv, 1e-12).unwrap();
        // direct inverse DFT of y
        let dft: Vec<Complex64> = (0..k)
            .map(|f| {
                let mut acc = Complex64::default();
                for (i, yi) in y.iter().enumerate() {
                    let phase =
                        -2.0 * std::f64::consts::PI * (i as f64) * (f as f64) / k as f64;
                    acc += yi * Complex64::from_polar(1.0, phase);
                }
                acc / k as f64
            })
            .collect();
        let scale = dft.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for f in 0..k {
            assert!((matched[f] - dft[f]).norm() < 1e-8 * scale);
            assert!((pinv[f] - dft[f]).norm() < 1e-8 * scale);
        }
    }

    #[test]
    fn singular_normal_matrix_is_reported() {
        // F > k without regularization: rank-deficient normal matrix.
        let kz = vec![0.0, 0.01];
        let grid = DepthGrid::new(0.0, 50.0, 6).unwrap();
        let a = build_steering(&kz, &grid, 1.0).unwrap();
        let y = vec![Complex64::new(1.0, 0.0); 2];
        match focus(&y, &a, FocusMode::Pinv, 0.0) {
            Err(TomoError::SingularNormalMatrix { condition }) => {
                assert!(condition > 1e10);
            }
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn focus_rejects_wrong_length() {
        let kz = vec![0.0, 0.01, 0.02];
        let grid = DepthGrid::new(0.0, 10.0, 4).unwrap();
        let a = build_steering(&kz, &grid, 1.0).unwrap();
        let y = vec![Complex64::default(); 2];
        assert!(matches!(
            focus(&y, &a, FocusMode::Matched, 0.0),
            Err(TomoError::DataLengthMismatch { got: 2, expect: 3 })
        ));
    }

    #[test]
    fn global_phase_leaves_magnitude_unchanged() {
        let kz = vec![0.0, 0.013, 0.026, 0.039, 0.052];
        let grid = DepthGrid::new(-200.0, 0.0, 41).unwrap();
        let a = build_steering(&kz, &grid, 1.0).unwrap();
        let y = a.column(17);
        let rot = Complex64::from_polar(1.0, 1.1);
        let y_rot: Vec<Complex64> = y.iter().map(|v| v * rot).collect();
        for mode in [FocusMode::Matched, FocusMode::Pinv] {
            let h = focus(&y, &a, mode, 1e-6).unwrap();
            let h_rot = focus(&y_rot, &a, mode, 1e-6).unwrap();
            let scale = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (u, v) in h.iter().zip(h_rot.iter()) {
                assert!((u.norm() - v.norm()).abs() < 1e-10 * scale);
                assert!((u * rot - v).norm() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn resolution_arithmetic() {
        let delta = tomographic_resolution(4.86, 650_000.0, 42_000.0);
        assert!((delta - 37.607).abs() < 1e-2);
        // the rounded published figure is ~36 m; stay within 5%
        assert!((delta - 36.0).abs() / 36.0 < 0.05);
        assert!(
            (tomographic_resolution(4.86, 650_000.0, 84_000.0) - delta / 2.0).abs() < 1e-12
        );
    }

    #[test]
    fn matched_psf_width_tracks_nominal_resolution() {
        let k = 16;
        let mut p = uniform_params(k);
        p.time_scale = p.time_scale_for_nominal_resolution();
        let kz = vertical_wavenumbers(&p).unwrap();
        let delta = tomographic_resolution(p.wavelength_sound(), p.slant_ranges[0], p.aperture());
        let grid = DepthGrid::new(-500.0 - 8.0 * delta, -500.0 + 8.0 * delta, 1601).unwrap();
        let a = build_steering(&kz, &grid, p.time_scale).unwrap();
        let f0 = grid.nearest_bin(-500.0);
        let y = a.column(f0);
        let h = focus(&y, &a, FocusMode::Matched, 0.0).unwrap();
        let mags: Vec<f64> = h.iter().map(|v| v.norm()).collect();
        let width = width_3db(&mags, f0) * grid.spacing();
        assert!(
            (width - delta).abs() / delta < 0.2,
            "width {width} vs nominal {delta}"
        );
    }

    fn width_3db(mags: &[f64], peak: usize) -> f64 {
        let half = mags[peak] / 2f64.sqrt();
        let mut left = peak;
        while left > 0 && mags[left] > half {
            left -= 1;
        }
        let mut right = peak;
        while right + 1 < mags.len() && mags[right] > half {
            right += 1;
        }
        (right - left) as f64
    }

    #[test]
    fn assemble_places_peak_and_handles_zero() {
        let k = 10;
        let mut p = uniform_params(k);
        p.time_scale = p.time_scale_for_nominal_resolution();
        let kz = vertical_wavenumbers(&p).unwrap();
        let grid = DepthGrid::new(-1000.0, 0.0, 201).unwrap();
        let a = build_steering(&kz, &grid, p.time_scale).unwrap();
        let f0 = grid.nearest_bin(-500.0);
        let y = a.column(f0);
        let series = vec![
            ShiftSeries {
                pixel: (5, 5),
                shifts: vec![Complex64::default(); k],
                quality: vec![1.0; k],
            },
            ShiftSeries {
                pixel: (5, 6),
                shifts: y,
                quality: vec![1.0; k],
            },
        ];
        let tomo =
            assemble_tomogram(&series, &a, FocusMode::Matched, &AssembleConfig::default())
                .unwrap();
        let (fpk, ppk, _) = tomo.global_peak();
        assert_eq!(ppk, 1);
        assert_eq!(fpk, f0);
        assert!(tomo.column(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_sources_three_resolutions_apart_are_resolved() {
        let k = 16;
        let mut p = uniform_params(k);
        p.time_scale = p.time_scale_for_nominal_resolution();
        let kz = vertical_wavenumbers(&p).unwrap();
        let delta = tomographic_resolution(p.wavelength_sound(), p.slant_ranges[0], p.aperture());
        let grid = DepthGrid::new(-1200.0, 0.0, 1201).unwrap();
        let a = build_steering(&kz, &grid, p.time_scale).unwrap();
        let z1 = -700.0;
        let z2 = z1 + 3.0 * delta;
        let f1 = grid.nearest_bin(z1);
        let f2 = grid.nearest_bin(z2);
        let y: Vec<Complex64> = a
            .column(f1)
            .iter()
            .zip(a.column(f2).iter())
            .map(|(u, v)| u + v)
            .collect();
        let h = focus(&y, &a, FocusMode::Matched, 0.0).unwrap();
        let mags: Vec<f64> = h.iter().map(|v| v.norm()).collect();
        // local peaks near both injected bins
        let peak_near = |f: usize| {
            let lo = f.saturating_sub(10);
            let hi = (f + 10).min(mags.len() - 1);
            (lo..=hi).map(|i| mags[i]).fold(0.0, f64::max)
        };
        let p1 = peak_near(f1);
        let p2 = peak_near(f2);
        let valley = (f1.min(f2)..=f1.max(f2))
            .map(|i| mags[i])
            .fold(f64::INFINITY, f64::min);
        let lower = p1.min(p2);
        assert!(
            valley <= lower / 2f64.sqrt(),
            "valley {valley} vs lower peak {lower}"
        );
    }

    #[test]
    fn quality_floor_zero_weights_samples() {
        let k = 6;
        let kz: Vec<f64> = (0..k).map(|i| i as f64 * 0.01).collect();
        let grid = DepthGrid::new(0.0, 100.0, 21).unwrap();
        let a = build_steering(&kz, &grid, 1.0).unwrap();
        let y = a.column(7);
        let mut quality = vec![1.0; k];
        quality[3] = 0.1;
        let series = vec![ShiftSeries {
            pixel: (0, 0),
            shifts: y.clone(),
            quality,
        }];
        let cfg = AssembleConfig {
            quality_floor: 0.5,
            ..AssembleConfig::default()
        };
        let tomo = assemble_tomogram(&series, &a, FocusMode::Matched, &cfg).unwrap();
        // equivalent to focusing y with sample 3 zeroed
        let mut y_masked = y;
        y_masked[3] = Complex64::default();
        let h = focus(&y_masked, &a, FocusMode::Matched, 0.0).unwrap();
        for f in 0..grid.n_bins {
            assert!((tomo.at(f, 0) - h[f].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn series_length_mismatch_is_reported() {
        let kz = vec![0.0, 0.01, 0.02];
        let grid = DepthGrid::new(0.0, 10.0, 5).unwrap();
        let a = build_steering(&kz, &grid, 1.0).unwrap();
        let series = vec![ShiftSeries {
            pixel: (1, 2),
            shifts: vec![Complex64::default(); 2],
            quality: vec![1.0; 2],
        }];
        assert!(matches!(
            assemble_tomogram(&series, &a, FocusMode::Matched, &AssembleConfig::default()),
            Err(TomoError::SeriesLengthMismatch(1, 2, 2, 3))
        ));
        let empty: Vec<ShiftSeries> = vec![];
        assert!(matches!(
            assemble_tomogram(&empty, &a, FocusMode::Matched, &AssembleConfig::default()),
            Err(TomoError::EmptySeries)
        ));
    }

    #[test]
    fn normalization_modes() {
        let kz = vec![0.0, 0.01, 0.02, 0.03];
        let grid = DepthGrid::new(0.0, 300.0, 31).unwrap();
        let a = build_steering(&kz, &grid, 1.0).unwrap();
        let series = vec![
            ShiftSeries {
                pixel: (0, 0),
                shifts: a.column(5).iter().map(|v| v * 2.0).collect(),
                quality: vec![1.0; 4],
            },
            ShiftSeries {
                pixel: (0, 1),
                shifts: a.column(20),
                quality: vec![1.0; 4],
            },
        ];
        let image = assemble_tomogram(
            &series,
            &a,
            FocusMode::Matched,
            &AssembleConfig {
                normalize: Normalize::Image,
                ..AssembleConfig::default()
            },
        )
        .unwrap();
        let peak = image.magnitudes.iter().cloned().fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-12);
        let column = assemble_tomogram(
            &series,
            &a,
            FocusMode::Matched,
            &AssembleConfig {
                normalize: Normalize::Column,
                ..AssembleConfig::default()
            },
        )
        .unwrap();
        for p in 0..2 {
            let cmax = column.column(p).into_iter().fold(0.0, f64::max);
            assert!((cmax - 1.0).abs() < 1e-12);
        }
    }
}
