//! Complex-valued raster type shared by the simulator, the spectral engine
//! and the tracker.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ImageError {
    #[error("pixel count {got} does not match {rows} x {cols}")]
    ShapeMismatch { rows: usize, cols: usize, got: usize },
    #[error("grid spacings must be strictly positive (got {range} x {azimuth})")]
    BadSpacing { range: f64, azimuth: f64 },
    #[error("image contains a non-finite sample at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("window of size {size} centered at ({row}, {col}) exceeds a {rows} x {cols} image")]
    WindowOutOfBounds {
        row: usize,
        col: usize,
        size: usize,
        rows: usize,
        cols: usize,
    },
}

/// 2-D complex raster: rows index slant range, columns index azimuth.
/// Row-major storage, grid spacings in meters per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    rows: usize,
    cols: usize,
    pixels: Vec<Complex64>,
    range_spacing: f64,
    azimuth_spacing: f64,
}

impl ComplexImage {
    pub fn zeros(
        rows: usize,
        cols: usize,
        range_spacing: f64,
        azimuth_spacing: f64,
    ) -> Result<Self, ImageError> {
        if !(range_spacing > 0.0) || !(azimuth_spacing > 0.0) {
            return Err(ImageError::BadSpacing {
                range: range_spacing,
                azimuth: azimuth_spacing,
            });
        }
        Ok(Self {
            rows,
            cols,
            pixels: vec![Complex64::default(); rows * cols],
            range_spacing,
            azimuth_spacing,
        })
    }

    pub fn from_pixels(
        rows: usize,
        cols: usize,
        pixels: Vec<Complex64>,
        range_spacing: f64,
        azimuth_spacing: f64,
    ) -> Result<Self, ImageError> {
        if pixels.len() != rows * cols {
            return Err(ImageError::ShapeMismatch {
                rows,
                cols,
                got: pixels.len(),
            });
        }
        let mut img = Self::zeros(rows, cols, range_spacing, azimuth_spacing)?;
        img.pixels = pixels;
        img.check_finite()?;
        Ok(img)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn range_spacing(&self) -> f64 {
        self.range_spacing
    }

    pub fn azimuth_spacing(&self) -> f64 {
        self.azimuth_spacing
    }

    pub fn pixels(&self) -> &[Complex64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Complex64] {
        &mut self.pixels
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.pixels[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.pixels[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.pixels[row * self.cols..(row + 1) * self.cols]
    }

    /// Sum of |pixel|^2.
    pub fn energy(&self) -> f64 {
        self.pixels.iter().map(|p| p.norm_sqr()).sum()
    }

    /// Location and magnitude of the strongest pixel.
    pub fn peak(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let m = self.at(r, c).norm();
                if m > best.2 {
                    best = (r, c, m);
                }
            }
        }
        best
    }

    /// Square window of odd side `size` centered at (`row`, `col`).
    pub fn window(&self, row: usize, col: usize, size: usize) -> Result<Self, ImageError> {
        let half = size / 2;
        let fits = row >= half
            && col >= half
            && row + half < self.rows
            && col + half < self.cols
            && size >= 1;
        if !fits {
            return Err(ImageError::WindowOutOfBounds {
                row,
                col,
                size,
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut out = Self::zeros(size, size, self.range_spacing, self.azimuth_spacing)?;
        for r in 0..size {
            for c in 0..size {
                let v = self.at(row - half + r, col - half + c);
                out.set(r, c, v);
            }
        }
        Ok(out)
    }

    pub fn check_finite(&self) -> Result<(), ImageError> {
        for (i, p) in self.pixels.iter().enumerate() {
            if !p.re.is_finite() || !p.im.is_finite() {
                return Err(ImageError::NonFinite {
                    row: i / self.cols,
                    col: i % self.cols,
                });
            }
        }
        Ok(())
    }

    /// Maximum |difference| against another image of identical shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.pixels
            .iter()
            .zip(other.pixels.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
