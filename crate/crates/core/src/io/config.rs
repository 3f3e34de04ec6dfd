//! Flat `key = value` configuration files with `#` comments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::IoError;
use crate::geometry::RadarGeometry;
use crate::tracking::{PeakFit, TrackConfig};

/// Parsed key=value file preserving source line numbers.
#[derive(Debug, Clone)]
pub struct KvFile {
    pub path: PathBuf,
    entries: BTreeMap<String, (String, usize)>,
}

impl KvFile {
    pub fn parse(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(path, &text)
    }

    pub fn parse_str(path: &Path, text: &str) -> Result<Self, IoError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| IoError::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            entries.insert(
                key.trim().to_string(),
                (value.trim().to_string(), lineno + 1),
            );
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, IoError> {
        self.get(key).ok_or_else(|| IoError::MissingKey {
            path: self.path.display().to_string(),
            key: key.to_string(),
        })
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, IoError> {
        let (raw, line) = self.entries.get(key).ok_or_else(|| IoError::MissingKey {
            path: self.path.display().to_string(),
            key: key.to_string(),
        })?;
        raw.parse::<f64>().map_err(|_| IoError::Parse {
            path: self.path.display().to_string(),
            line: *line,
            msg: format!("`{key}` must be a number, got `{raw}`"),
        })
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, IoError> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(_) => self.require_f64(key),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, IoError> {
        match self.entries.get(key) {
            None => Ok(default),
            Some((raw, line)) => raw.parse::<usize>().map_err(|_| IoError::Parse {
                path: self.path.display().to_string(),
                line: *line,
                msg: format!("`{key}` must be a non-negative integer, got `{raw}`"),
            }),
        }
    }

    pub fn require_usize(&self, key: &str) -> Result<usize, IoError> {
        let (raw, line) = self.entries.get(key).ok_or_else(|| IoError::MissingKey {
            path: self.path.display().to_string(),
            key: key.to_string(),
        })?;
        raw.parse::<usize>().map_err(|_| IoError::Parse {
            path: self.path.display().to_string(),
            line: *line,
            msg: format!("`{key}` must be a non-negative integer, got `{raw}`"),
        })
    }

    pub fn error_at(&self, key: &str, msg: impl Into<String>) -> IoError {
        let line = self.entries.get(key).map(|(_, l)| *l).unwrap_or(0);
        IoError::Parse {
            path: self.path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Load acquisition geometry. Angles arrive in degrees and leave in
/// radians; the zero-Doppler range is taken equal to the reference range.
pub fn load_geometry(path: &Path) -> Result<RadarGeometry, IoError> {
    let kv = KvFile::parse(path)?;
    let geom = RadarGeometry {
        wavelength_em: kv.require_f64("wavelength_em")?,
        platform_velocity: kv.require_f64("platform_velocity")?,
        reference_range: kv.require_f64("reference_range")?,
        zero_doppler_range: kv.require_f64("reference_range")?,
        antenna_length: kv.require_f64("antenna_length")?,
        sample_spacing: kv.require_f64("sample_spacing")?,
        pulse_count: kv.require_usize("pulse_count")? as u64,
        incidence_angle: kv.require_f64("incidence_angle_deg")?.to_radians(),
        chirp_bandwidth: kv.require_f64("chirp_bandwidth")?,
        doppler_bandwidth: kv.require_f64("doppler_bandwidth")?,
        prf: kv.require_f64("prf")?,
        acquisition_duration: kv.require_f64("duration")?,
    };
    geom.validate()
        .map_err(|e| IoError::invalid(path, e.to_string()))?;
    Ok(geom)
}

pub fn save_geometry(path: &Path, geom: &RadarGeometry) -> Result<(), IoError> {
    let text = format!(
        "# radar acquisition geometry\n\
         wavelength_em = {}\n\
         platform_velocity = {}\n\
         reference_range = {}\n\
         antenna_length = {}\n\
         sample_spacing = {}\n\
         pulse_count = {}\n\
         incidence_angle_deg = {}\n\
         chirp_bandwidth = {}\n\
         doppler_bandwidth = {}\n\
         prf = {}\n\
         duration = {}\n",
        geom.wavelength_em,
        geom.platform_velocity,
        geom.reference_range,
        geom.antenna_length,
        geom.sample_spacing,
        geom.pulse_count,
        geom.incidence_angle.to_degrees(),
        geom.chirp_bandwidth,
        geom.doppler_bandwidth,
        geom.prf,
        geom.acquisition_duration,
    );
    std::fs::write(path, text)?;
    Ok(())
}

/// Tracking settings file; every key optional with correlator defaults.
pub fn load_track_config(path: &Path) -> Result<TrackConfig, IoError> {
    let kv = KvFile::parse(path)?;
    let default = TrackConfig::default();
    let peak_fit = match kv.get("peak_fit").unwrap_or("parabolic") {
        "parabolic" => PeakFit::Parabolic,
        "none" => PeakFit::None,
        other => {
            return Err(kv.error_at(
                "peak_fit",
                format!("`peak_fit` must be parabolic or none, got `{other}`"),
            ))
        }
    };
    let cfg = TrackConfig {
        window_size: kv.usize_or("window_size", default.window_size)?,
        oversample_factor: kv.usize_or("oversample", default.oversample_factor)?,
        search_radius: kv.usize_or("search_radius", default.search_radius)?,
        peak_fit,
        correlation_floor: kv.f64_or("correlation_floor", default.correlation_floor)?,
    };
    cfg.validate()
        .map_err(|e| IoError::invalid(path, e.to_string()))?;
    Ok(cfg)
}

/// Steering time scale: explicit seconds or derived from the sub-aperture
/// count so the matched mainlobe width matches the nominal resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeScale {
    Auto,
    Fixed(f64),
}

/// Sonic propagation config for the focusing stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SonicConfig {
    pub wave_speed: f64,
    pub probe_frequency: f64,
    pub slant_range: f64,
    pub orbit_aperture: f64,
    pub incidence_angle: f64,
    pub time_scale: TimeScale,
}

pub fn load_sonic(path: &Path) -> Result<SonicConfig, IoError> {
    let kv = KvFile::parse(path)?;
    let time_scale = match kv.get("time_scale") {
        None | Some("auto") => TimeScale::Auto,
        Some(_) => TimeScale::Fixed(kv.require_f64("time_scale")?),
    };
    Ok(SonicConfig {
        wave_speed: kv.require_f64("wave_speed")?,
        probe_frequency: kv.require_f64("probe_frequency")?,
        slant_range: kv.require_f64("slant_range")?,
        orbit_aperture: kv.require_f64("orbit_aperture")?,
        incidence_angle: kv.require_f64("incidence_angle_deg")?.to_radians(),
        time_scale,
    })
}

/// Depth grid config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub z_min: f64,
    pub z_max: f64,
    pub n_bins: usize,
}

pub fn load_grid(path: &Path) -> Result<GridConfig, IoError> {
    let kv = KvFile::parse(path)?;
    Ok(GridConfig {
        z_min: kv.require_f64("z_min")?,
        z_max: kv.require_f64("z_max")?,
        n_bins: kv.require_usize("n_bins")?,
    })
}

/// Six-parameter affine georeference
/// `(lat, lon) = (a0 + a1 px + a2 z, b0 + b1 px + b2 z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl Affine {
    pub fn identity() -> Self {
        Self {
            a: [0.0, 1.0, 0.0],
            b: [0.0, 0.0, 1.0],
        }
    }

    pub fn apply(&self, pixel: f64, depth: f64) -> (f64, f64) {
        (
            self.a[0] + self.a[1] * pixel + self.a[2] * depth,
            self.b[0] + self.b[1] * pixel + self.b[2] * depth,
        )
    }
}

/// Affine file: six whitespace-separated numbers a0 a1 a2 b0 b1 b2.
pub fn load_affine(path: &Path) -> Result<Affine, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        for token in strip_comment(raw).split_whitespace() {
            let v: f64 = token.parse().map_err(|_| IoError::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("expected a number, got `{token}`"),
            })?;
            values.push(v);
        }
    }
    if values.len() != 6 {
        return Err(IoError::invalid(
            path,
            format!("affine file needs exactly 6 numbers, found {}", values.len()),
        ));
    }
    Ok(Affine {
        a: [values[0], values[1], values[2]],
        b: [values[3], values[4], values[5]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> KvFile {
        KvFile::parse_str(Path::new("test.cfg"), text).unwrap()
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let kv = parse("# header\n\n a = 1 # trailing\nb=2\n");
        assert_eq!(kv.get("a"), Some("1"));
        assert_eq!(kv.get("b"), Some("2"));
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = KvFile::parse_str(Path::new("x.cfg"), "a = 1\nbogus line\n").unwrap_err();
        match err {
            IoError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_key_names_the_key() {
        let kv = parse("a = 1");
        let err = kv.require_f64("prf").unwrap_err();
        assert!(err.to_string().contains("prf"));
    }

    #[test]
    fn geometry_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("geom.cfg");
        let geom = RadarGeometry::default();
        save_geometry(&path, &geom).unwrap();
        let loaded = load_geometry(&path).unwrap();
        assert_eq!(loaded, geom);
    }

    #[test]
    fn affine_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("affine.txt");
        std::fs::write(&path, "0 1 0\n0 0 1 # identity\n").unwrap();
        let a = load_affine(&path).unwrap();
        assert_eq!(a, Affine::identity());
        assert_eq!(a.apply(3.0, -7.0), (3.0, -7.0));

        std::fs::write(&path, "0 1\n").unwrap();
        assert!(load_affine(&path).is_err());
        std::fs::write(&path, "0 1 x 0 0 1\n").unwrap();
        assert!(load_affine(&path).is_err());
    }

    #[test]
    fn sonic_time_scale_modes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sonic.cfg");
        std::fs::write(
            &path,
            "wave_speed = 972\nprobe_frequency = 200\nslant_range = 650000\n\
             orbit_aperture = 42000\nincidence_angle_deg = 35\ntime_scale = auto\n",
        )
        .unwrap();
        let cfg = load_sonic(&path).unwrap();
        assert_eq!(cfg.time_scale, TimeScale::Auto);
        std::fs::write(
            &path,
            "wave_speed = 972\nprobe_frequency = 200\nslant_range = 650000\n\
             orbit_aperture = 42000\nincidence_angle_deg = 35\ntime_scale = 0.08\n",
        )
        .unwrap();
        let cfg = load_sonic(&path).unwrap();
        assert_eq!(cfg.time_scale, TimeScale::Fixed(0.08));
    }
}
