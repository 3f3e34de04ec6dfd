//! Stack and pipeline run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::KvFile;
use super::IoError;
use crate::spectral::{BandWindow, SubAperturePlan};

/// Where a sub-aperture stack lives on disk: plan parameters plus one SLC
/// file per window, band centers in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct StackManifest {
    pub plan: SubAperturePlan,
    pub master_files: Vec<PathBuf>,
    pub slave_files: Vec<PathBuf>,
}

pub fn write_stack_manifest(path: &Path, manifest: &StackManifest) -> Result<(), IoError> {
    let plan = &manifest.plan;
    let mut out = String::from("# sub-aperture stack manifest\n");
    writeln!(out, "n_sub = {}", plan.n_sub()).unwrap();
    writeln!(out, "guard_fraction = {}", plan.guard_fraction()).unwrap();
    writeln!(out, "window = {}", plan.window().name()).unwrap();
    writeln!(out, "total_band = {}", plan.total_band()).unwrap();
    writeln!(out, "sample_rate = {}", plan.sample_rate()).unwrap();
    writeln!(out, "sub_band_width = {}", plan.sub_band_width()).unwrap();
    for (i, c) in plan.sub_band_centers().iter().enumerate() {
        writeln!(out, "center_hz_{i} = {c}").unwrap();
    }
    for (i, f) in manifest.master_files.iter().enumerate() {
        writeln!(out, "master_{i} = {}", f.file_name().unwrap().to_string_lossy()).unwrap();
    }
    for (i, f) in manifest.slave_files.iter().enumerate() {
        writeln!(out, "slave_{i} = {}", f.file_name().unwrap().to_string_lossy()).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_stack_manifest(path: &Path) -> Result<StackManifest, IoError> {
    let kv = KvFile::parse(path)?;
    let n_sub = kv.require_usize("n_sub")?;
    let guard = kv.require_f64("guard_fraction")?;
    let total_band = kv.require_f64("total_band")?;
    let sample_rate = kv.require_f64("sample_rate")?;
    let window = match kv.require("window")? {
        "rect" => BandWindow::Rect,
        "hann" => BandWindow::Hann,
        other => {
            return Err(kv.error_at("window", format!("unknown window `{other}`")));
        }
    };
    let plan = if n_sub == 1 {
        SubAperturePlan::full_band(sample_rate)
    } else {
        SubAperturePlan::new(total_band, sample_rate, n_sub, guard, window)
            .map_err(|e| IoError::invalid(path, e.to_string()))?
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut master_files = Vec::with_capacity(n_sub);
    let mut slave_files = Vec::with_capacity(n_sub);
    for i in 0..n_sub {
        master_files.push(dir.join(kv.require(&format!("master_{i}"))?));
        slave_files.push(dir.join(kv.require(&format!("slave_{i}"))?));
    }
    Ok(StackManifest {
        plan,
        master_files,
        slave_files,
    })
}

/// SHA-256 of a file, hex-encoded.
pub fn sha256_file(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        write!(hex, "{b:02x}").unwrap();
    }
    Ok(hex)
}

/// End-to-end run record: inputs and outputs with hashes, tool version,
/// stage timings. Output hashes are the determinism contract; timings are
/// informational.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub version: String,
    pub config: String,
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<(String, String)>,
    pub timings_ms: Vec<(String, u128)>,
}

pub fn write_run_manifest(path: &Path, manifest: &RunManifest) -> Result<(), IoError> {
    let mut out = String::from("# pipeline run manifest\n[run]\n");
    writeln!(out, "version = {}", manifest.version).unwrap();
    writeln!(out, "config = {}", manifest.config).unwrap();
    out.push_str("[inputs]\n");
    for (name, hash) in &manifest.inputs {
        writeln!(out, "{name} = {hash}").unwrap();
    }
    out.push_str("[outputs]\n");
    for (name, hash) in &manifest.outputs {
        writeln!(out, "{name} = {hash}").unwrap();
    }
    out.push_str("[timings]\n");
    for (name, ms) in &manifest.timings_ms {
        writeln!(out, "{name}_ms = {ms}").unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Extract the `[outputs]` section of a run manifest (name, hash) pairs.
pub fn read_manifest_outputs(path: &Path) -> Result<Vec<(String, String)>, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut in_outputs = false;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line == "[outputs]" {
            in_outputs = true;
            continue;
        }
        if line.starts_with('[') {
            in_outputs = false;
            continue;
        }
        if in_outputs {
            if let Some((k, v)) = line.split_once('=') {
                out.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stack_manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stack.manifest");
        let plan = SubAperturePlan::new(22e3, 44e3, 4, 0.5, BandWindow::Rect).unwrap();
        let manifest = StackManifest {
            plan: plan.clone(),
            master_files: (0..4).map(|i| dir.path().join(format!("master_{i}.slc"))).collect(),
            slave_files: (0..4).map(|i| dir.path().join(format!("slave_{i}.slc"))).collect(),
        };
        write_stack_manifest(&path, &manifest).unwrap();
        let back = read_stack_manifest(&path).unwrap();
        assert_eq!(back.plan, plan);
        assert_eq!(back.master_files, manifest.master_files);
    }

    #[test]
    fn sha256_matches_known_vector() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        std::fs::write(&path, b"abc").unwrap();
        assert_eq!(
            sha256_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn run_manifest_outputs_are_recoverable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.manifest");
        let manifest = RunManifest {
            version: "0.1.0".into(),
            config: "golden.cfg".into(),
            inputs: vec![("scene".into(), "aa".into())],
            outputs: vec![("tomo.csv".into(), "bb".into()), ("geo.csv".into(), "cc".into())],
            timings_ms: vec![("simulate".into(), 12)],
        };
        write_run_manifest(&path, &manifest).unwrap();
        let outputs = read_manifest_outputs(&path).unwrap();
        assert_eq!(outputs, manifest.outputs);
    }
}
