//! CSV and PGM exports shared by the CLI stages.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::IoError;
use crate::oscillator::Trajectory;
use crate::tomography::Tomogram;
use crate::tracking::ShiftSeries;
use crate::validation::{TopoProfile, VibrationStream};

/// Trajectory CSV `t,x,y`, 17 significant digits.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), IoError> {
    let mut out = String::from("t,x,y\n");
    for (t, d) in traj.times().iter().zip(traj.displacements()) {
        writeln!(out, "{t:.16e},{:.16e},{:.16e}", d[0], d[1]).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut times = Vec::new();
    let mut disp = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            expect_header(path, line, "t,x,y")?;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols = split_n::<3>(path, lineno, line)?;
        times.push(parse_f64(path, lineno, cols[0])?);
        disp.push([
            parse_f64(path, lineno, cols[1])?,
            parse_f64(path, lineno, cols[2])?,
        ]);
    }
    Trajectory::new(times, disp).map_err(|e| IoError::invalid(path, e.to_string()))
}

/// Shift series CSV `row,col,sub_index,dr_px,da_px,quality`.
pub fn write_shift_series(path: &Path, series: &[ShiftSeries]) -> Result<(), IoError> {
    let mut out = String::from("row,col,sub_index,dr_px,da_px,quality\n");
    for s in series {
        for (i, (shift, q)) in s.shifts.iter().zip(s.quality.iter()).enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.pixel.0, s.pixel.1, i, shift.re, shift.im, q
            )
            .unwrap();
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_shift_series(path: &Path) -> Result<Vec<ShiftSeries>, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut series: Vec<ShiftSeries> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            expect_header(path, line, "row,col,sub_index,dr_px,da_px,quality")?;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols = split_n::<6>(path, lineno, line)?;
        let pixel = (
            parse_usize(path, lineno, cols[0])?,
            parse_usize(path, lineno, cols[1])?,
        );
        let sub_index = parse_usize(path, lineno, cols[2])?;
        let shift = Complex64::new(
            parse_f64(path, lineno, cols[3])?,
            parse_f64(path, lineno, cols[4])?,
        );
        let quality = parse_f64(path, lineno, cols[5])?;
        let current_matches = series.last().map(|s| s.pixel == pixel).unwrap_or(false);
        if !current_matches {
            series.push(ShiftSeries {
                pixel,
                shifts: Vec::new(),
                quality: Vec::new(),
            });
        }
        let s = series.last_mut().unwrap();
        if s.shifts.len() != sub_index {
            return Err(IoError::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!(
                    "sub_index {sub_index} out of order for pixel ({}, {})",
                    pixel.0, pixel.1
                ),
            });
        }
        s.shifts.push(shift);
        s.quality.push(quality);
    }
    Ok(series)
}

/// Vibration stream CSV `t_s,value`; the sample rate comes from the time
/// column, which must be uniform.
pub fn write_stream(path: &Path, stream: &VibrationStream) -> Result<(), IoError> {
    let mut out = String::from("t_s,value\n");
    for (i, v) in stream.samples.iter().enumerate() {
        writeln!(out, "{},{}", i as f64 / stream.sample_rate, v).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_stream(path: &Path, label: &str) -> Result<VibrationStream, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            expect_header(path, line, "t_s,value")?;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols = split_n::<2>(path, lineno, line)?;
        times.push(parse_f64(path, lineno, cols[0])?);
        values.push(parse_f64(path, lineno, cols[1])?);
    }
    if times.len() < 2 {
        return Err(IoError::invalid(path, "stream needs at least 2 samples"));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(IoError::invalid(path, "time column must increase"));
    }
    for w in times.windows(2) {
        let step = w[1] - w[0];
        if ((step - dt) / dt).abs() > 1e-6 {
            return Err(IoError::invalid(
                path,
                format!("non-uniform sampling: {step} vs {dt}"),
            ));
        }
    }
    VibrationStream::new(1.0 / dt, values, label)
        .map_err(|e| IoError::invalid(path, e.to_string()))
}

/// Topographic profile CSV `pos_m,height_m`.
pub fn read_topo(path: &Path) -> Result<TopoProfile, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut positions = Vec::new();
    let mut heights = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            expect_header(path, line, "pos_m,height_m")?;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols = split_n::<2>(path, lineno, line)?;
        positions.push(parse_f64(path, lineno, cols[0])?);
        heights.push(parse_f64(path, lineno, cols[1])?);
    }
    TopoProfile::new(positions, heights).map_err(|e| IoError::invalid(path, e.to_string()))
}

/// Tomogram CSV `depth_m,pixel,magnitude`, depth-major.
pub fn write_tomogram_csv(path: &Path, tomo: &Tomogram) -> Result<(), IoError> {
    let mut out = String::from("depth_m,pixel,magnitude\n");
    for (f, depth) in tomo.depth_axis.iter().enumerate() {
        for (p, track) in tomo.track_axis.iter().enumerate() {
            writeln!(out, "{depth},{track},{}", tomo.at(f, p)).unwrap();
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_tomogram(path: &Path) -> Result<Tomogram, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut depths: Vec<f64> = Vec::new();
    let mut tracks: Vec<f64> = Vec::new();
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            expect_header(path, line, "depth_m,pixel,magnitude")?;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols = split_n::<3>(path, lineno, line)?;
        let depth = parse_f64(path, lineno, cols[0])?;
        let track = parse_f64(path, lineno, cols[1])?;
        let mag = parse_f64(path, lineno, cols[2])?;
        let f = position_of(&mut depths, depth);
        let p = position_of(&mut tracks, track);
        rows.push((f, p, mag));
    }
    if depths.is_empty() || tracks.is_empty() {
        return Err(IoError::invalid(path, "tomogram CSV carries no samples"));
    }
    let mut magnitudes = vec![0.0; depths.len() * tracks.len()];
    for (f, p, mag) in rows {
        magnitudes[f * tracks.len() + p] = mag;
    }
    Ok(Tomogram {
        magnitudes,
        depth_axis: depths,
        track_axis: tracks,
        mode: crate::tomography::FocusMode::Matched,
    })
}

fn position_of(axis: &mut Vec<f64>, value: f64) -> usize {
    match axis.iter().position(|v| *v == value) {
        Some(i) => i,
        None => {
            axis.push(value);
            axis.len() - 1
        }
    }
}

/// Georeferenced tomogram CSV `lat,lon,depth_m,magnitude`.
pub fn write_geo_csv(
    path: &Path,
    tomo: &Tomogram,
    affine: &super::Affine,
) -> Result<(), IoError> {
    let mut out = String::from("lat,lon,depth_m,magnitude\n");
    for (f, depth) in tomo.depth_axis.iter().enumerate() {
        for (p, track) in tomo.track_axis.iter().enumerate() {
            let (lat, lon) = affine.apply(*track, *depth);
            writeln!(out, "{lat},{lon},{depth},{}", tomo.at(f, p)).unwrap();
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// 16-bit binary PGM of the tomogram (depth rows, track columns) plus a
/// sidecar text file recording the linear scaling.
pub fn write_pgm16(path: &Path, sidecar: &Path, tomo: &Tomogram) -> Result<(), IoError> {
    let rows = tomo.n_depths();
    let cols = tomo.n_pixels();
    let max = tomo.magnitudes.iter().cloned().fold(0.0f64, f64::max);
    let scale = if max > 0.0 { 65535.0 / max } else { 0.0 };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(file, "P5\n{cols} {rows}\n65535\n")?;
    for f in 0..rows {
        for p in 0..cols {
            let v = (tomo.at(f, p) * scale).round().clamp(0.0, 65535.0) as u16;
            file.write_all(&v.to_be_bytes())?;
        }
    }
    file.flush()?;
    let side = format!(
        "# linear scaling of {}\nrows = {rows}\ncols = {cols}\nmagnitude_max = {max}\n\
         counts_per_unit = {scale}\ndepth_min = {}\ndepth_max = {}\nmode = {}\n",
        path.display(),
        tomo.depth_axis.first().unwrap_or(&0.0),
        tomo.depth_axis.last().unwrap_or(&0.0),
        tomo.mode.name(),
    );
    std::fs::write(sidecar, side)?;
    Ok(())
}

fn expect_header(path: &Path, line: &str, expected: &str) -> Result<(), IoError> {
    if line.trim() != expected {
        return Err(IoError::Parse {
            path: path.display().to_string(),
            line: 1,
            msg: format!("expected header `{expected}`, got `{line}`"),
        });
    }
    Ok(())
}

fn split_n<'a, const N: usize>(
    path: &Path,
    lineno: usize,
    line: &'a str,
) -> Result<[&'a str; N], IoError> {
    let mut parts = line.split(',');
    let mut out = [""; N];
    for slot in out.iter_mut() {
        *slot = parts.next().ok_or_else(|| IoError::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: format!("expected {N} comma-separated fields"),
        })?;
    }
    if parts.next().is_some() {
        return Err(IoError::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: format!("expected exactly {N} fields"),
        });
    }
    Ok(out)
}

fn parse_f64(path: &Path, lineno: usize, raw: &str) -> Result<f64, IoError> {
    raw.trim().parse().map_err(|_| IoError::Parse {
        path: path.display().to_string(),
        line: lineno + 1,
        msg: format!("expected a number, got `{raw}`"),
    })
}

fn parse_usize(path: &Path, lineno: usize, raw: &str) -> Result<usize, IoError> {
    raw.trim().parse().map_err(|_| IoError::Parse {
        path: path.display().to_string(),
        line: lineno + 1,
        msg: format!("expected an index, got `{raw}`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::FocusMode;

    #[test]
    fn trajectory_roundtrip_preserves_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let traj = Trajectory::new(
            vec![0.0, 0.1, 0.2],
            vec![
                [1.0 / 3.0, -2.0 / 7.0],
                [0.123456789012345, 1e-17],
                [3.0, 4.0],
            ],
        )
        .unwrap();
        write_trajectory(&path, &traj).unwrap();
        let back = read_trajectory(&path).unwrap();
        for (a, b) in traj.displacements().iter().zip(back.displacements()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn shift_series_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("shifts.csv");
        let series = vec![
            ShiftSeries {
                pixel: (3, 4),
                shifts: vec![Complex64::new(0.1, -0.2), Complex64::new(0.3, 0.4)],
                quality: vec![0.9, 0.8],
            },
            ShiftSeries {
                pixel: (3, 5),
                shifts: vec![Complex64::new(-0.5, 0.0), Complex64::new(0.0, 0.25)],
                quality: vec![1.0, 0.7],
            },
        ];
        write_shift_series(&path, &series).unwrap();
        let back = read_shift_series(&path).unwrap();
        assert_eq!(back, series);
    }

    #[test]
    fn stream_roundtrip_and_uniformity_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = VibrationStream::new(50.0, vec![0.0, 1.0, -1.0, 0.5], "x").unwrap();
        write_stream(&path, &s).unwrap();
        let back = read_stream(&path, "x").unwrap();
        assert!((back.sample_rate - 50.0).abs() < 1e-9);
        assert_eq!(back.samples, s.samples);

        std::fs::write(&path, "t_s,value\n0,1\n0.1,2\n0.35,3\n").unwrap();
        assert!(read_stream(&path, "x").is_err());
    }

    #[test]
    fn tomogram_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tomo.csv");
        let tomo = Tomogram {
            magnitudes: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            depth_axis: vec![-100.0, -50.0],
            track_axis: vec![0.0, 1.0, 2.0],
            mode: FocusMode::Matched,
        };
        write_tomogram_csv(&path, &tomo).unwrap();
        let back = read_tomogram(&path).unwrap();
        assert_eq!(back.magnitudes, tomo.magnitudes);
        assert_eq!(back.depth_axis, tomo.depth_axis);
    }

    #[test]
    fn pgm_has_correct_header_and_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let sidecar = dir.path().join("t.pgm.txt");
        let tomo = Tomogram {
            magnitudes: vec![0.0, 0.5, 1.0, 0.25, 0.75, 0.1],
            depth_axis: vec![-100.0, -50.0],
            track_axis: vec![0.0, 1.0, 2.0],
            mode: FocusMode::Matched,
        };
        write_pgm16(&path, &sidecar, &tomo).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 2 * 6);
        // peak maps to 65535
        let payload = &bytes[header.len()..];
        let v = u16::from_be_bytes([payload[4], payload[5]]);
        assert_eq!(v, 65535);
        assert!(std::fs::read_to_string(&sidecar)
            .unwrap()
            .contains("counts_per_unit"));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time,x,y\n0,0,0\n").unwrap();
        assert!(read_trajectory(&path).is_err());
    }
}
