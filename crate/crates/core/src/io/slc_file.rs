//! SLC1 binary raster: header plus row-major complex64 payload, all
//! little-endian.
//!
//! Layout: magic "SLC1", version u16, rows u32, cols u32, range_spacing
//! f64, azimuth_spacing f64, eleven geometry scalars f64 (wavelength,
//! platform velocity, reference range, antenna length, sample spacing,
//! pulse count, incidence angle in radians, chirp bandwidth, Doppler
//! bandwidth, prf, duration), then rows*cols (f32 re, f32 im) pairs. The
//! zero-Doppler range is reconstructed as the reference range on read.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::IoError;
use crate::geometry::RadarGeometry;
use crate::image::ComplexImage;

pub const SLC_MAGIC: [u8; 4] = *b"SLC1";
pub const SLC_VERSION: u16 = 1;

pub fn write_slc(path: &Path, image: &ComplexImage, geom: &RadarGeometry) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&SLC_MAGIC)?;
    w.write_all(&SLC_VERSION.to_le_bytes())?;
    w.write_all(&(image.rows() as u32).to_le_bytes())?;
    w.write_all(&(image.cols() as u32).to_le_bytes())?;
    w.write_all(&image.range_spacing().to_le_bytes())?;
    w.write_all(&image.azimuth_spacing().to_le_bytes())?;
    for v in geometry_scalars(geom) {
        w.write_all(&v.to_le_bytes())?;
    }
    for px in image.pixels() {
        w.write_all(&(px.re as f32).to_le_bytes())?;
        w.write_all(&(px.im as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_slc(path: &Path) -> Result<(ComplexImage, RadarGeometry), IoError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != SLC_MAGIC {
        return Err(IoError::BadMagic);
    }
    let version = read_u16(&mut r)?;
    if version != SLC_VERSION {
        return Err(IoError::BadVersion(version));
    }
    let rows = read_u32(&mut r)? as usize;
    let cols = read_u32(&mut r)? as usize;
    let range_spacing = read_f64(&mut r)?;
    let azimuth_spacing = read_f64(&mut r)?;
    let mut scalars = [0f64; 11];
    for v in scalars.iter_mut() {
        *v = read_f64(&mut r)?;
    }
    let geom = geometry_from_scalars(&scalars);
    geom.validate()
        .map_err(|e| IoError::invalid(path, e.to_string()))?;

    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| IoError::invalid(path, "dimension overflow"))?;
    let mut payload = Vec::with_capacity(expected);
    r.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(IoError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    let mut pixels = Vec::with_capacity(rows * cols);
    for chunk in payload.chunks_exact(8) {
        let re = f32::from_le_bytes(chunk[0..4].try_into().unwrap());
        let im = f32::from_le_bytes(chunk[4..8].try_into().unwrap());
        pixels.push(Complex64::new(re as f64, im as f64));
    }
    let image = ComplexImage::from_pixels(rows, cols, pixels, range_spacing, azimuth_spacing)
        .map_err(|e| IoError::invalid(path, e.to_string()))?;
    Ok((image, geom))
}

fn geometry_scalars(geom: &RadarGeometry) -> [f64; 11] {
    [
        geom.wavelength_em,
        geom.platform_velocity,
        geom.reference_range,
        geom.antenna_length,
        geom.sample_spacing,
        geom.pulse_count as f64,
        geom.incidence_angle,
        geom.chirp_bandwidth,
        geom.doppler_bandwidth,
        geom.prf,
        geom.acquisition_duration,
    ]
}

fn geometry_from_scalars(s: &[f64; 11]) -> RadarGeometry {
    RadarGeometry {
        wavelength_em: s[0],
        platform_velocity: s[1],
        reference_range: s[2],
        zero_doppler_range: s[2],
        antenna_length: s[3],
        sample_spacing: s[4],
        pulse_count: s[5] as u64,
        incidence_angle: s[6],
        chirp_bandwidth: s[7],
        doppler_bandwidth: s[8],
        prf: s[9],
        acquisition_duration: s[10],
    }
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16, IoError> {
    let mut buf = [0u8; 2];
    r.read_exact(&mut buf)?;
    Ok(u16::from_le_bytes(buf))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, IoError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, IoError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_image() -> ComplexImage {
        let mut img = ComplexImage::zeros(3, 4, 0.25, 0.159).unwrap();
        for (i, px) in img.pixels_mut().iter_mut().enumerate() {
            *px = Complex64::new(i as f64 * 0.5, -(i as f64));
        }
        img
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.slc");
        let geom = RadarGeometry::default();
        let img = sample_image();
        write_slc(&path, &img, &geom).unwrap();
        let bytes1 = std::fs::read(&path).unwrap();
        let (back, geom2) = read_slc(&path).unwrap();
        assert_eq!(back.rows(), 3);
        assert_eq!(back.cols(), 4);
        assert_eq!(geom2, geom);
        // payload is f32: precision-limited but write(read(x)) is stable
        write_slc(&path, &back, &geom2).unwrap();
        let bytes2 = std::fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn bad_magic_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.slc");
        std::fs::write(&path, b"NOPExxxxxxxxxxxxxxxx").unwrap();
        assert!(matches!(read_slc(&path), Err(IoError::BadMagic)));
    }

    #[test]
    fn truncated_payload_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.slc");
        write_slc(&path, &sample_image(), &RadarGeometry::default()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(read_slc(&path), Err(IoError::Truncated { .. })));
    }
}
