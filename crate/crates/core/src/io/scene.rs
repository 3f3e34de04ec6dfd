//! Scene description files: global canvas/noise keys followed by one
//! `[scatterer]` section per target.
//!
//! ```text
//! rows = 512
//! cols = 512
//! range_spacing = 0.25
//! azimuth_spacing = 0.159
//! noise_snr_db = 60        # omit for noise-free
//! seed = 7
//! vibration_segments = 16
//!
//! [scatterer]
//! range_m = 64.0
//! azimuth_m = 40.7
//! amplitude = 1.0
//! v_r = 0.0                # optional kinematics
//! trajectory = motion.csv  # optional micro-motion, path relative to scene
//! shift_gain = 1.0
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::config::strip_comment;
use super::{csvio, resolve_relative, IoError};
use crate::geometry::TargetState;
use crate::slc::{CanvasSpec, ScattererSpec};

#[derive(Debug, Clone)]
pub struct SceneFile {
    pub canvas: CanvasSpec,
    pub noise_snr_db: Option<f64>,
    pub seed: u64,
    pub vibration_segments: usize,
    pub scatterers: Vec<ScattererSpec>,
}

struct Section {
    start_line: usize,
    entries: BTreeMap<String, (String, usize)>,
}

impl Section {
    fn new(start_line: usize) -> Self {
        Self {
            start_line,
            entries: BTreeMap::new(),
        }
    }

    fn get(&self, key: &str) -> Option<&(String, usize)> {
        self.entries.get(key)
    }

    fn f64_or(&self, path: &Path, key: &str, default: f64) -> Result<f64, IoError> {
        match self.get(key) {
            None => Ok(default),
            Some((raw, line)) => raw.parse().map_err(|_| IoError::Parse {
                path: path.display().to_string(),
                line: *line,
                msg: format!("`{key}` must be a number, got `{raw}`"),
            }),
        }
    }

    fn require_f64(&self, path: &Path, key: &str) -> Result<f64, IoError> {
        match self.get(key) {
            None => Err(IoError::Parse {
                path: path.display().to_string(),
                line: self.start_line,
                msg: format!("scatterer section is missing `{key}`"),
            }),
            Some(_) => self.f64_or(path, key, 0.0),
        }
    }
}

pub fn load_scene(path: &Path) -> Result<SceneFile, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut global = Section::new(0);
    let mut sections: Vec<Section> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if line == "[scatterer]" {
            sections.push(Section::new(lineno + 1));
            continue;
        }
        if line.starts_with('[') {
            return Err(IoError::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("unknown section `{line}`"),
            });
        }
        let (key, value) = line.split_once('=').ok_or_else(|| IoError::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let target = sections.last_mut().unwrap_or(&mut global);
        target.entries.insert(
            key.trim().to_string(),
            (value.trim().to_string(), lineno + 1),
        );
    }

    let require_global = |key: &str| -> Result<f64, IoError> {
        match global.get(key) {
            None => Err(IoError::MissingKey {
                path: path.display().to_string(),
                key: key.to_string(),
            }),
            Some(_) => global.f64_or(path, key, 0.0),
        }
    };

    let canvas = CanvasSpec {
        rows: require_global("rows")? as usize,
        cols: require_global("cols")? as usize,
        range_spacing: require_global("range_spacing")?,
        azimuth_spacing: require_global("azimuth_spacing")?,
    };
    let noise_snr_db = match global.get("noise_snr_db") {
        None => None,
        Some(_) => Some(global.f64_or(path, "noise_snr_db", 0.0)?),
    };
    let seed = global.f64_or(path, "seed", 0.0)? as u64;
    let vibration_segments = global.f64_or(path, "vibration_segments", 16.0)? as usize;

    if sections.is_empty() {
        return Err(IoError::invalid(path, "scene has no [scatterer] sections"));
    }
    let mut scatterers = Vec::with_capacity(sections.len());
    for s in &sections {
        let target = TargetState {
            range_position: s.require_f64(path, "range_m")?,
            azimuth_position: s.require_f64(path, "azimuth_m")?,
            v_r: s.f64_or(path, "v_r", 0.0)?,
            v_a: s.f64_or(path, "v_a", 0.0)?,
            a_r: s.f64_or(path, "a_r", 0.0)?,
            a_a: s.f64_or(path, "a_a", 0.0)?,
        };
        let trajectory = match s.get("trajectory") {
            None => None,
            Some((rel, line)) => {
                let traj_path = resolve_relative(path, rel);
                let traj = csvio::read_trajectory(&traj_path).map_err(|e| IoError::Parse {
                    path: path.display().to_string(),
                    line: *line,
                    msg: format!("trajectory `{rel}`: {e}"),
                })?;
                Some(traj)
            }
        };
        scatterers.push(ScattererSpec {
            target,
            amplitude: s.require_f64(path, "amplitude")?,
            trajectory,
            shift_gain: s.f64_or(path, "shift_gain", 1.0)?,
        });
    }

    Ok(SceneFile {
        canvas,
        noise_snr_db,
        seed,
        vibration_segments,
        scatterers,
    })
}

/// Write a scene file (used by the test and golden tooling).
pub fn write_scene_text(
    canvas: &CanvasSpec,
    noise_snr_db: Option<f64>,
    seed: u64,
    vibration_segments: usize,
    scatterers: &[(TargetState, f64, Option<PathBuf>, f64)],
) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "rows = {}\ncols = {}\nrange_spacing = {}\nazimuth_spacing = {}\n",
        canvas.rows, canvas.cols, canvas.range_spacing, canvas.azimuth_spacing
    ));
    if let Some(snr) = noise_snr_db {
        out.push_str(&format!("noise_snr_db = {snr}\n"));
    }
    out.push_str(&format!("seed = {seed}\n"));
    out.push_str(&format!("vibration_segments = {vibration_segments}\n"));
    for (t, amplitude, traj, gain) in scatterers {
        out.push_str("\n[scatterer]\n");
        out.push_str(&format!(
            "range_m = {}\nazimuth_m = {}\namplitude = {amplitude}\n",
            t.range_position, t.azimuth_position
        ));
        for (key, v) in [("v_r", t.v_r), ("v_a", t.v_a), ("a_r", t.a_r), ("a_a", t.a_a)] {
            if v != 0.0 {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        if let Some(p) = traj {
            out.push_str(&format!("trajectory = {}\n", p.display()));
        }
        if *gain != 1.0 {
            out.push_str(&format!("shift_gain = {gain}\n"));
        }
    }
    out
}
