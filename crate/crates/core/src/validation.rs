//! Desk-reproducible validation: topographic-profile overlay scoring and
//! vibration-stream comparison (time domain, spectra, coherence).

use num_complex::Complex64;
use thiserror::Error;

use crate::fft::{fft, ifft};
use crate::tomography::Tomogram;

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("profile positions must be strictly increasing and finite")]
    BadProfile,
    #[error("vibration stream needs a positive sample rate and at least 2 samples")]
    BadStream,
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    RateMismatch(f64, f64),
    #[error("stream lengths differ after alignment: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("ridge and profile extents do not overlap")]
    DisjointExtents,
    #[error("band edges must satisfy 0 < lo < hi < nyquist, got ({0}, {1})")]
    BadBand(f64, f64),
    #[error("tomogram is empty")]
    EmptyTomogram,
}

/// Topographic height line along the track.
#[derive(Debug, Clone, PartialEq)]
pub struct TopoProfile {
    positions: Vec<f64>,
    heights: Vec<f64>,
}

impl TopoProfile {
    pub fn new(positions: Vec<f64>, heights: Vec<f64>) -> Result<Self, ValidationError> {
        if positions.len() != heights.len() || positions.is_empty() {
            return Err(ValidationError::BadProfile);
        }
        if positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ValidationError::BadProfile);
        }
        if positions.iter().chain(heights.iter()).any(|v| !v.is_finite()) {
            return Err(ValidationError::BadProfile);
        }
        Ok(Self { positions, heights })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Linear interpolation; None outside the profile extent.
    pub fn interpolate(&self, pos: f64) -> Option<f64> {
        if pos < self.positions[0] || pos > *self.positions.last().unwrap() {
            return None;
        }
        let idx = match self
            .positions
            .binary_search_by(|p| p.partial_cmp(&pos).unwrap())
        {
            Ok(i) => return Some(self.heights[i]),
            Err(i) => i,
        };
        let (p0, p1) = (self.positions[idx - 1], self.positions[idx]);
        let (h0, h1) = (self.heights[idx - 1], self.heights[idx]);
        Some(h0 + (h1 - h0) * (pos - p0) / (p1 - p0))
    }
}

/// Real-valued vibration record at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct VibrationStream {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
    pub label: String,
}

impl VibrationStream {
    pub fn new(
        sample_rate: f64,
        samples: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self, ValidationError> {
        if !(sample_rate > 0.0) || samples.len() < 2 {
            return Err(ValidationError::BadStream);
        }
        Ok(Self {
            sample_rate,
            samples,
            label: label.into(),
        })
    }
}

/// Per-column surface pick: the shallowest depth bin reaching
/// `threshold * column max`, scanning from the grid end nearest z = 0.
/// All-zero columns yield a gap (None).
pub fn surface_ridge(tomo: &Tomogram, threshold: f64) -> Result<Vec<Option<f64>>, ValidationError> {
    if tomo.n_depths() == 0 || tomo.n_pixels() == 0 {
        return Err(ValidationError::EmptyTomogram);
    }
    let depths = &tomo.depth_axis;
    let surface_first = depths.first().unwrap().abs() <= depths.last().unwrap().abs();
    let order: Vec<usize> = if surface_first {
        (0..tomo.n_depths()).collect()
    } else {
        (0..tomo.n_depths()).rev().collect()
    };
    let mut ridge = Vec::with_capacity(tomo.n_pixels());
    for p in 0..tomo.n_pixels() {
        let col_max = (0..tomo.n_depths())
            .map(|f| tomo.at(f, p))
            .fold(0.0, f64::max);
        if col_max <= 0.0 || !col_max.is_finite() {
            ridge.push(None);
            continue;
        }
        let cut = threshold * col_max;
        ridge.push(
            order
                .iter()
                .find(|&&f| tomo.at(f, p) >= cut)
                .map(|&f| depths[f]),
        );
    }
    Ok(ridge)
}

/// Overlay fit of a ridge against a reference profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlayScore {
    pub rmse: f64,
    pub bias: f64,
    /// Ridge points that fell inside the profile extent.
    pub n_used: usize,
}

/// Interpolate the profile to the ridge positions and score the residuals.
/// Ridge points outside the profile extent are skipped; fully disjoint
/// extents are an error.
pub fn topo_overlay_score(
    ridge: &[(f64, f64)],
    topo: &TopoProfile,
) -> Result<OverlayScore, ValidationError> {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut n = 0usize;
    for (pos, depth) in ridge {
        if let Some(h) = topo.interpolate(*pos) {
            let e = depth - h;
            sum += e;
            sum_sq += e * e;
            n += 1;
        }
    }
    if n == 0 {
        return Err(ValidationError::DisjointExtents);
    }
    Ok(OverlayScore {
        rmse: (sum_sq / n as f64).sqrt(),
        bias: sum / n as f64,
        n_used: n,
    })
}

/// Stream comparison products.
#[derive(Debug, Clone)]
pub struct StreamComparison {
    /// Pointwise a - b after optional band-pass.
    pub time_error: Vec<f64>,
    /// Magnitude spectrum of a (bins 0..n/2).
    pub spectrum_a: Vec<f64>,
    /// Magnitude spectrum of b.
    pub spectrum_b: Vec<f64>,
    /// Frequency of each spectral bin (Hz).
    pub freq_axis: Vec<f64>,
    /// Welch magnitude coherence per bin of `coherence_freqs`.
    pub coherence: Vec<f64>,
    pub coherence_freqs: Vec<f64>,
    /// Cross-correlation lag of b relative to a, samples (positive = b lags).
    pub lag: i64,
    pub mean_error: f64,
}

/// Compare two synchronized streams: optional 4th-order zero-phase
/// band-pass on both, pointwise error, magnitude spectra, Welch coherence
/// and an integer lag estimate.
pub fn compare_streams(
    a: &VibrationStream,
    b: &VibrationStream,
    band: Option<(f64, f64)>,
) -> Result<StreamComparison, ValidationError> {
    if a.sample_rate != b.sample_rate {
        return Err(ValidationError::RateMismatch(a.sample_rate, b.sample_rate));
    }
    if a.samples.len() != b.samples.len() {
        return Err(ValidationError::LengthMismatch(
            a.samples.len(),
            b.samples.len(),
        ));
    }
    let fs = a.sample_rate;
    let (sa, sb) = match band {
        Some((lo, hi)) => {
            let filt = Butterworth4::band_pass(lo, hi, fs)?;
            (filt.filtfilt(&a.samples), filt.filtfilt(&b.samples))
        }
        None => (a.samples.clone(), b.samples.clone()),
    };

    let n = sa.len();
    let time_error: Vec<f64> = sa.iter().zip(sb.iter()).map(|(x, y)| x - y).collect();
    let mean_error = time_error.iter().sum::<f64>() / n as f64;

    let spec = |s: &[f64]| -> Vec<f64> {
        let buf: Vec<Complex64> = s.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft(&buf)[..n / 2 + 1].iter().map(|v| v.norm()).collect()
    };
    let spectrum_a = spec(&sa);
    let spectrum_b = spec(&sb);
    let freq_axis: Vec<f64> = (0..n / 2 + 1).map(|i| i as f64 * fs / n as f64).collect();

    let (coherence, coherence_freqs) = welch_coherence(&sa, &sb, fs, 8);
    let lag = correlation_lag(&sa, &sb);

    Ok(StreamComparison {
        time_error,
        spectrum_a,
        spectrum_b,
        freq_axis,
        coherence,
        coherence_freqs,
        lag,
        mean_error,
    })
}

/// Welch magnitude coherence with Hann windows and 50% overlap.
fn welch_coherence(a: &[f64], b: &[f64], fs: f64, segments: usize) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let seg_len = (2 * n / (segments + 1)).max(8).min(n);
    let hop = seg_len / 2;
    let nbins = seg_len / 2 + 1;
    let window: Vec<f64> = (0..seg_len)
        .map(|i| {
            0.5 * (1.0
                - (2.0 * std::f64::consts::PI * i as f64 / (seg_len - 1) as f64).cos())
        })
        .collect();

    let mut saa = vec![0.0f64; nbins];
    let mut sbb = vec![0.0f64; nbins];
    let mut sab = vec![Complex64::default(); nbins];
    let mut start = 0;
    while start + seg_len <= n {
        let fa = fft(&a[start..start + seg_len]
            .iter()
            .zip(window.iter())
            .map(|(v, w)| Complex64::new(v * w, 0.0))
            .collect::<Vec<_>>());
        let fb = fft(&b[start..start + seg_len]
            .iter()
            .zip(window.iter())
            .map(|(v, w)| Complex64::new(v * w, 0.0))
            .collect::<Vec<_>>());
        for i in 0..nbins {
            saa[i] += fa[i].norm_sqr();
            sbb[i] += fb[i].norm_sqr();
            sab[i] += fa[i].conj() * fb[i];
        }
        start += hop;
    }
    let coherence: Vec<f64> = (0..nbins)
        .map(|i| {
            let denom = (saa[i] * sbb[i]).sqrt();
            if denom > 0.0 {
                (sab[i].norm() / denom).min(1.0)
            } else {
                0.0
            }
        })
        .collect();
    let freqs: Vec<f64> = (0..nbins).map(|i| i as f64 * fs / seg_len as f64).collect();
    (coherence, freqs)
}

/// Lag maximizing sum a[t] b[t + lag] over |lag| <= n/2, via FFT.
fn correlation_lag(a: &[f64], b: &[f64]) -> i64 {
    let n = a.len();
    let pad = (2 * n).next_power_of_two();
    let mut fa = vec![Complex64::default(); pad];
    let mut fb = vec![Complex64::default(); pad];
    for i in 0..n {
        fa[i] = Complex64::new(a[i], 0.0);
        fb[i] = Complex64::new(b[i], 0.0);
    }
    let fa = fft(&fa);
    let fb = fft(&fb);
    let cross: Vec<Complex64> = fa.iter().zip(fb.iter()).map(|(x, y)| x.conj() * y).collect();
    let corr = ifft(&cross);
    let half = (n / 2) as i64;
    let mut best = (0i64, f64::NEG_INFINITY);
    for lag in -half..=half {
        let idx = lag.rem_euclid(pad as i64) as usize;
        let v = corr[idx].re;
        if v > best.1 {
            best = (lag, v);
        }
    }
    best.0
}

/// 4th-order Butterworth band-pass (2nd-order low-pass prototype through
/// the band-pass transform and bilinear mapping, realized as two biquads),
/// applied forward-backward for zero phase.
#[derive(Debug, Clone)]
pub struct Butterworth4 {
    sections: [Biquad; 2],
    /// Digital frequency (Hz) of the prewarped geometric band center where
    /// the cascade gain is normalized to one.
    pub center_frequency: f64,
    fs: f64,
}

impl Butterworth4 {
    pub fn band_pass(lo: f64, hi: f64, fs: f64) -> Result<Self, ValidationError> {
        let nyquist = fs / 2.0;
        if !(lo > 0.0 && lo < hi && hi < nyquist) {
            return Err(ValidationError::BadBand(lo, hi));
        }
        // Prewarped analog edges and band constants.
        let w_lo = (std::f64::consts::PI * lo / fs).tan();
        let w_hi = (std::f64::consts::PI * hi / fs).tan();
        let bw = w_hi - w_lo;
        let w0_sq = w_lo * w_hi;

        // Butterworth-2 prototype pole (upper half plane); its conjugate and
        // the transformed pair cover the full 4th-order set.
        let proto = Complex64::new(-1.0, 1.0) / 2f64.sqrt();
        // Band-pass transform: s^2 - p B s + w0^2 = 0.
        let pb = proto * bw;
        let disc = (pb * pb - Complex64::new(4.0 * w0_sq, 0.0)).sqrt();
        let s1 = (pb + disc) / 2.0;
        let s2 = (pb - disc) / 2.0;

        let theta0 = 2.0 * w0_sq.sqrt().atan();
        let center_frequency = theta0 * fs / (2.0 * std::f64::consts::PI);
        let sections = [
            Biquad::from_analog_pole(s1, theta0),
            Biquad::from_analog_pole(s2, theta0),
        ];
        Ok(Self {
            sections,
            center_frequency,
            fs,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.fs
    }

    fn run(&self, x: &[f64]) -> Vec<f64> {
        self.sections[1].run(&self.sections[0].run(x))
    }

    /// Forward-backward filtering with odd reflection padding, so the
    /// output carries no filter delay.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let pad = (3 * 20).min(x.len().saturating_sub(1));
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        for i in (1..=pad).rev() {
            ext.push(2.0 * x[0] - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
        }
        let mut y = self.run(&ext);
        y.reverse();
        let mut y = self.run(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}

/// Direct-form II transposed biquad.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    /// Digital band-pass section from one analog pole pair (pole and its
    /// conjugate) with zeros at z = +1 and z = -1, gain one at `theta0`.
    fn from_analog_pole(s: Complex64, theta0: f64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zp = (one + s) / (one - s);
        let a1 = -2.0 * zp.re;
        let a2 = zp.norm_sqr();
        let mut bq = Self {
            b0: 1.0,
            b1: 0.0,
            b2: -1.0,
            a1,
            a2,
        };
        let g = bq.gain_at(theta0);
        bq.b0 /= g;
        bq.b2 /= g;
        bq
    }

    fn gain_at(&self, theta: f64) -> f64 {
        let z = Complex64::from_polar(1.0, -theta);
        let num = Complex64::new(self.b0, 0.0) + z * self.b1 + z * z * self.b2;
        let den = Complex64::new(1.0, 0.0) + z * self.a1 + z * z * self.a2;
        (num / den).norm()
    }

    fn run(&self, x: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(x.len());
        let (mut s1, mut s2) = (0.0, 0.0);
        for &xi in x {
            let yi = self.b0 * xi + s1;
            s1 = self.b1 * xi - self.a1 * yi + s2;
            s2 = self.b2 * xi - self.a2 * yi;
            y.push(yi);
        }
        y
    }
}
