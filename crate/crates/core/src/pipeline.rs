//! Stage runners behind the CLI: simulate, mca, track, focus, georef,
//! validate, and the end-to-end pipeline with its run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::io::{
    self, load_affine, load_geometry, load_grid, load_scene, load_sonic, load_track_config,
    read_shift_series, read_slc, read_stack_manifest, read_stream, read_tomogram, read_topo,
    sha256_file, write_pgm16, write_run_manifest, write_shift_series, write_slc,
    write_stack_manifest, write_tomogram_csv, IoError, RunManifest, StackManifest, TimeScale,
};
use crate::slc::{render_scene, SceneError};
use crate::spectral::{build_stacks, BandWindow, SpectralError, StackRole, SubAperturePlan,
    SubApertureStack, extract_subaperture};
use crate::tomography::{
    assemble_tomogram, build_steering, tomographic_resolution, vertical_wavenumbers,
    AssembleConfig, DepthGrid, FocusMode, SonicParams, TomoError,
};
use crate::tracking::{track_pixels, TrackConfig, TrackError};
use crate::validation::{compare_streams, surface_ridge, topo_overlay_score, ValidationError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Tomo(#[from] TomoError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("{0}")]
    BadArg(String),
    #[error("stage `{stage}` is missing its input: {path}")]
    MissingStageInput { stage: &'static str, path: String },
}

fn bad_arg(msg: impl Into<String>) -> PipelineError {
    PipelineError::BadArg(msg.into())
}

/// Render a scene file into an SLC product.
pub fn run_simulate(
    scene_path: &Path,
    geom_path: &Path,
    out_path: &Path,
    snr_override: Option<f64>,
    seed_override: Option<u64>,
) -> Result<(), PipelineError> {
    let scene = load_scene(scene_path)?;
    let geom = load_geometry(geom_path)?;
    let snr = snr_override.or(scene.noise_snr_db);
    let seed = seed_override.unwrap_or(scene.seed);
    let image = render_scene(
        &scene.scatterers,
        &geom,
        &scene.canvas,
        snr,
        seed,
        scene.vibration_segments,
    )?;
    write_slc(out_path, &image, &geom)?;
    Ok(())
}

/// Plan settings for the mca stage; band and rate default to the SLC's own
/// Doppler bandwidth and prf.
#[derive(Debug, Clone, Copy)]
pub struct PlanSettings {
    pub n_sub: usize,
    pub guard_fraction: f64,
    pub window: BandWindow,
    pub total_band: Option<f64>,
    pub sample_rate: Option<f64>,
}

impl Default for PlanSettings {
    fn default() -> Self {
        Self {
            n_sub: 8,
            guard_fraction: 0.5,
            window: BandWindow::Rect,
            total_band: None,
            sample_rate: None,
        }
    }
}

pub fn load_plan_settings(path: &Path) -> Result<PlanSettings, PipelineError> {
    let kv = io::KvFile::parse(path)?;
    let default = PlanSettings::default();
    let window = match kv.get("window").unwrap_or("rect") {
        "rect" => BandWindow::Rect,
        "hann" => BandWindow::Hann,
        other => return Err(bad_arg(format!("unknown window `{other}`"))),
    };
    Ok(PlanSettings {
        n_sub: kv.usize_or("n_sub", default.n_sub)?,
        guard_fraction: kv.f64_or("guard_fraction", default.guard_fraction)?,
        window,
        total_band: kv.get("total_band").map(|_| kv.require_f64("total_band")).transpose()?,
        sample_rate: kv
            .get("sample_rate")
            .map(|_| kv.require_f64("sample_rate"))
            .transpose()?,
    })
}

/// Decompose an SLC into master/slave sub-aperture stacks on disk.
pub fn run_mca(
    in_slc: &Path,
    settings: &PlanSettings,
    outdir: &Path,
) -> Result<StackManifest, PipelineError> {
    let (image, geom) = read_slc(in_slc)?;
    let sample_rate = settings.sample_rate.unwrap_or(geom.prf);
    let total_band = settings.total_band.unwrap_or(geom.doppler_bandwidth);
    std::fs::create_dir_all(outdir).map_err(IoError::from)?;

    let (plan, masters, slaves) = if settings.n_sub == 1 {
        let plan = SubAperturePlan::full_band(sample_rate);
        let img = extract_subaperture(&image, &plan, 0)?;
        (plan, vec![img], Vec::new())
    } else {
        let plan = SubAperturePlan::new(
            total_band,
            sample_rate,
            settings.n_sub,
            settings.guard_fraction,
            settings.window,
        )?;
        let (master, slave) = build_stacks(&image, &plan)?;
        (plan, master.images, slave.images)
    };

    let mut master_files = Vec::new();
    let mut slave_files = Vec::new();
    for (i, img) in masters.iter().enumerate() {
        let path = outdir.join(format!("master_{i:03}.slc"));
        write_slc(&path, img, &geom)?;
        master_files.push(path);
    }
    if slaves.is_empty() {
        // full-band identity: the single image serves both roles
        slave_files = master_files.clone();
    } else {
        for (i, img) in slaves.iter().enumerate() {
            let path = outdir.join(format!("slave_{i:03}.slc"));
            write_slc(&path, img, &geom)?;
            slave_files.push(path);
        }
    }
    let manifest = StackManifest {
        plan,
        master_files,
        slave_files,
    };
    write_stack_manifest(&outdir.join("stack.manifest"), &manifest)?;
    Ok(manifest)
}

/// Parse "r0,c0:r1,c1" into inclusive endpoints.
pub fn parse_line_spec(spec: &str) -> Result<((usize, usize), (usize, usize)), PipelineError> {
    let (a, b) = spec
        .split_once(':')
        .ok_or_else(|| bad_arg(format!("line must be `r0,c0:r1,c1`, got `{spec}`")))?;
    let parse_pair = |s: &str| -> Result<(usize, usize), PipelineError> {
        let (r, c) = s
            .split_once(',')
            .ok_or_else(|| bad_arg(format!("expected `row,col`, got `{s}`")))?;
        Ok((
            r.trim()
                .parse()
                .map_err(|_| bad_arg(format!("bad row `{r}`")))?,
            c.trim()
                .parse()
                .map_err(|_| bad_arg(format!("bad col `{c}`")))?,
        ))
    };
    Ok((parse_pair(a)?, parse_pair(b)?))
}

/// Bresenham discretization of the pixel line, endpoints inclusive.
pub fn bresenham_line(from: (usize, usize), to: (usize, usize)) -> Vec<(usize, usize)> {
    let (mut r0, mut c0) = (from.0 as i64, from.1 as i64);
    let (r1, c1) = (to.0 as i64, to.1 as i64);
    let dr = (r1 - r0).abs();
    let dc = (c1 - c0).abs();
    let sr = if r0 < r1 { 1 } else { -1 };
    let sc = if c0 < c1 { 1 } else { -1 };
    let mut err = dr - dc;
    let mut pixels = Vec::new();
    loop {
        pixels.push((r0 as usize, c0 as usize));
        if r0 == r1 && c0 == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 > -dc {
            err -= dc;
            r0 += sr;
        }
        if e2 < dr {
            err += dr;
            c0 += sc;
        }
    }
    pixels
}

pub struct TrackOutcome {
    pub tracked: usize,
    pub skipped: usize,
}

/// Track a pixel line across the stacks of `stacks_dir` and write the shift
/// series CSV.
pub fn run_track(
    stacks_dir: &Path,
    line_spec: &str,
    cfg_path: Option<&Path>,
    out_csv: &Path,
) -> Result<TrackOutcome, PipelineError> {
    let manifest_path = stacks_dir.join("stack.manifest");
    if !manifest_path.exists() {
        return Err(PipelineError::MissingStageInput {
            stage: "track",
            path: manifest_path.display().to_string(),
        });
    }
    let manifest = read_stack_manifest(&manifest_path)?;
    let cfg = match cfg_path {
        Some(p) => load_track_config(p)?,
        None => TrackConfig::default(),
    };

    let mut master_images = Vec::new();
    for p in &manifest.master_files {
        master_images.push(read_slc(p)?.0);
    }
    let mut slave_images = Vec::new();
    for p in &manifest.slave_files {
        slave_images.push(read_slc(p)?.0);
    }
    let rows = master_images[0].rows();
    let cols = master_images[0].cols();

    let (from, to) = parse_line_spec(line_spec)?;
    for (r, c) in [from, to] {
        if r >= rows || c >= cols {
            return Err(bad_arg(format!(
                "line endpoint ({r}, {c}) outside the {rows} x {cols} image"
            )));
        }
    }
    let pixels = bresenham_line(from, to);

    let master = SubApertureStack {
        plan: manifest.plan.clone(),
        images: master_images,
        role: StackRole::Master,
    };
    let slave = SubApertureStack {
        plan: manifest.plan,
        images: slave_images,
        role: StackRole::Slave,
    };
    let results = track_pixels(&master, &slave, &pixels, &cfg)?;
    let mut series = Vec::new();
    let mut skipped = 0usize;
    for r in results {
        match r {
            Ok(s) => series.push(s),
            Err(e) => {
                skipped += 1;
                eprintln!("warning: {e}");
            }
        }
    }
    if series.is_empty() {
        return Err(bad_arg("no pixel produced a usable shift series"));
    }
    write_shift_series(out_csv, &series)?;
    Ok(TrackOutcome {
        tracked: series.len(),
        skipped,
    })
}

pub struct FocusSettings {
    pub mode: FocusMode,
    pub tikhonov: f64,
    pub quality_floor: f64,
}

impl Default for FocusSettings {
    fn default() -> Self {
        Self {
            mode: FocusMode::Matched,
            tikhonov: 1e-6,
            quality_floor: 0.0,
        }
    }
}

pub struct FocusOutcome {
    pub k: usize,
    pub time_scale: f64,
    pub resolution: f64,
}

/// Focus a shift-series CSV into tomogram products (`<base>.csv`,
/// `<base>.pgm`, `<base>.pgm.txt`).
pub fn run_focus(
    shifts_csv: &Path,
    sonic_path: &Path,
    grid_path: &Path,
    settings: &FocusSettings,
    out_base: &Path,
) -> Result<FocusOutcome, PipelineError> {
    if !shifts_csv.exists() {
        return Err(PipelineError::MissingStageInput {
            stage: "focus",
            path: shifts_csv.display().to_string(),
        });
    }
    let series = read_shift_series(shifts_csv)?;
    if series.is_empty() {
        return Err(bad_arg("shift CSV holds no series"));
    }
    let k = series[0].len();
    let sonic_cfg = load_sonic(sonic_path)?;
    let grid_cfg = load_grid(grid_path)?;

    let mut params = SonicParams::uniform(
        sonic_cfg.wave_speed,
        sonic_cfg.probe_frequency,
        sonic_cfg.slant_range,
        sonic_cfg.orbit_aperture,
        sonic_cfg.incidence_angle,
        1.0,
        k,
    )?;
    params.time_scale = match sonic_cfg.time_scale {
        TimeScale::Fixed(t) => t,
        TimeScale::Auto => params.time_scale_for_nominal_resolution(),
    };

    let grid = DepthGrid::new(grid_cfg.z_min, grid_cfg.z_max, grid_cfg.n_bins)?;
    let kz = vertical_wavenumbers(&params)?;
    let steering = build_steering(&kz, &grid, params.time_scale)?;
    let cfg = AssembleConfig {
        quality_floor: settings.quality_floor,
        normalize: crate::tomography::Normalize::Off,
        tikhonov: settings.tikhonov,
    };
    let tomo = assemble_tomogram(&series, &steering, settings.mode, &cfg)?;

    let csv = out_base.with_extension("csv");
    let pgm = out_base.with_extension("pgm");
    let sidecar = out_base.with_extension("pgm.txt");
    write_tomogram_csv(&csv, &tomo)?;
    write_pgm16(&pgm, &sidecar, &tomo)?;
    Ok(FocusOutcome {
        k,
        time_scale: params.time_scale,
        resolution: tomographic_resolution(
            params.wavelength_sound(),
            sonic_cfg.slant_range,
            sonic_cfg.orbit_aperture,
        ),
    })
}

/// Apply the affine georeference to a tomogram CSV.
pub fn run_georef(tomo_csv: &Path, affine_path: &Path, out_csv: &Path) -> Result<(), PipelineError> {
    if !tomo_csv.exists() {
        return Err(PipelineError::MissingStageInput {
            stage: "georef",
            path: tomo_csv.display().to_string(),
        });
    }
    let tomo = read_tomogram(tomo_csv)?;
    let affine = load_affine(affine_path)?;
    io::write_geo_csv(out_csv, &tomo, &affine)?;
    Ok(())
}

/// Topographic overlay validation: ridge from the tomogram CSV scored
/// against a profile CSV; writes a short report.
pub fn run_validate_topo(
    tomo_csv: &Path,
    topo_csv: &Path,
    threshold: f64,
    out_report: &Path,
) -> Result<(f64, f64), PipelineError> {
    let tomo = read_tomogram(tomo_csv)?;
    let topo = read_topo(topo_csv)?;
    let ridge = surface_ridge(&tomo, threshold)?;
    let points: Vec<(f64, f64)> = tomo
        .track_axis
        .iter()
        .zip(ridge.iter())
        .filter_map(|(p, d)| d.map(|depth| (*p, depth)))
        .collect();
    let gaps = ridge.iter().filter(|d| d.is_none()).count();
    let score = topo_overlay_score(&points, &topo)?;
    let report = format!(
        "# topographic overlay score\nrmse_m = {}\nbias_m = {}\npoints_used = {}\ngaps = {gaps}\nthreshold = {threshold}\n",
        score.rmse, score.bias, score.n_used
    );
    std::fs::write(out_report, report).map_err(IoError::from)?;
    Ok((score.rmse, score.bias))
}

/// Stream comparison validation; writes a report plus error/spectra/
/// coherence CSVs into `outdir`.
pub fn run_validate_stream(
    a_csv: &Path,
    b_csv: &Path,
    band: Option<(f64, f64)>,
    outdir: &Path,
) -> Result<(), PipelineError> {
    let a = read_stream(a_csv, "a")?;
    let b = read_stream(b_csv, "b")?;
    let cmp = compare_streams(&a, &b, band)?;
    std::fs::create_dir_all(outdir).map_err(IoError::from)?;

    let mut err_csv = String::from("t_s,error\n");
    for (i, e) in cmp.time_error.iter().enumerate() {
        err_csv.push_str(&format!("{},{e}\n", i as f64 / a.sample_rate));
    }
    std::fs::write(outdir.join("error.csv"), err_csv).map_err(IoError::from)?;

    let mut spec_csv = String::from("freq_hz,magnitude_a,magnitude_b\n");
    for ((f, sa), sb) in cmp
        .freq_axis
        .iter()
        .zip(cmp.spectrum_a.iter())
        .zip(cmp.spectrum_b.iter())
    {
        spec_csv.push_str(&format!("{f},{sa},{sb}\n"));
    }
    std::fs::write(outdir.join("spectra.csv"), spec_csv).map_err(IoError::from)?;

    let mut coh_csv = String::from("freq_hz,coherence\n");
    for (f, c) in cmp.coherence_freqs.iter().zip(cmp.coherence.iter()) {
        coh_csv.push_str(&format!("{f},{c}\n"));
    }
    std::fs::write(outdir.join("coherence.csv"), coh_csv).map_err(IoError::from)?;

    let in_band: Vec<f64> = match band {
        Some((lo, hi)) => cmp
            .coherence_freqs
            .iter()
            .zip(cmp.coherence.iter())
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, c)| *c)
            .collect(),
        None => cmp.coherence.clone(),
    };
    let min_coh = in_band.iter().cloned().fold(f64::INFINITY, f64::min);
    let report = format!(
        "# stream comparison\nsamples = {}\nlag_samples = {}\nmean_error = {}\nmin_in_band_coherence = {}\n",
        cmp.time_error.len(),
        cmp.lag,
        cmp.mean_error,
        min_coh
    );
    std::fs::write(outdir.join("report.txt"), report).map_err(IoError::from)?;
    Ok(())
}

/// Full pipeline configuration: stage settings plus references to the other
/// config files, all relative to the config's directory.
pub struct PipelineConfig {
    pub geometry: PathBuf,
    pub scene: PathBuf,
    pub sonic: PathBuf,
    pub grid: PathBuf,
    pub track: Option<PathBuf>,
    pub affine: Option<PathBuf>,
    pub plan: PlanSettings,
    pub line: String,
    pub mode: FocusMode,
    pub tikhonov: f64,
    pub quality_floor: f64,
    pub seed: Option<u64>,
    pub snr_db: Option<f64>,
    pub outdir: PathBuf,
}

pub fn load_pipeline_config(path: &Path) -> Result<PipelineConfig, PipelineError> {
    let kv = io::KvFile::parse(path)?;
    let resolve = |key: &str| -> Result<PathBuf, PipelineError> {
        Ok(io::resolve_relative(path, kv.require(key)?))
    };
    let optional = |key: &str| -> Option<PathBuf> {
        kv.get(key).map(|rel| io::resolve_relative(path, rel))
    };
    let mode = match kv.get("mode").unwrap_or("matched") {
        "matched" => FocusMode::Matched,
        "pinv" => FocusMode::Pinv,
        other => return Err(bad_arg(format!("mode must be matched or pinv, got `{other}`"))),
    };
    let window = match kv.get("window").unwrap_or("rect") {
        "rect" => BandWindow::Rect,
        "hann" => BandWindow::Hann,
        other => return Err(bad_arg(format!("unknown window `{other}`"))),
    };
    let defaults = PlanSettings::default();
    Ok(PipelineConfig {
        geometry: resolve("geometry")?,
        scene: resolve("scene")?,
        sonic: resolve("sonic")?,
        grid: resolve("grid")?,
        track: optional("track"),
        affine: optional("affine"),
        plan: PlanSettings {
            n_sub: kv.usize_or("n_sub", defaults.n_sub)?,
            guard_fraction: kv.f64_or("guard_fraction", defaults.guard_fraction)?,
            window,
            total_band: kv.get("total_band").map(|_| kv.require_f64("total_band")).transpose()?,
            sample_rate: kv
                .get("sample_rate")
                .map(|_| kv.require_f64("sample_rate"))
                .transpose()?,
        },
        line: kv.require("line")?.to_string(),
        mode,
        tikhonov: kv.f64_or("tikhonov", 1e-6)?,
        quality_floor: kv.f64_or("quality_floor", 0.0)?,
        seed: kv.get("seed").map(|_| kv.require_usize("seed")).transpose()?.map(|v| v as u64),
        snr_db: kv.get("snr_db").map(|_| kv.require_f64("snr_db")).transpose()?,
        outdir: io::resolve_relative(path, kv.require("outdir")?),
    })
}

/// Execute simulate -> mca -> track -> focus -> georef -> report in one
/// deterministic pass, recording a run manifest.
pub fn run_pipeline(
    config_path: &Path,
    outdir_override: Option<&Path>,
    dry_run: bool,
) -> Result<PathBuf, PipelineError> {
    let cfg = load_pipeline_config(config_path)?;
    let outdir = outdir_override.map(Path::to_path_buf).unwrap_or(cfg.outdir.clone());

    if dry_run {
        println!("pipeline plan (dry run):");
        println!("  1. simulate  scene={} geom={}", cfg.scene.display(), cfg.geometry.display());
        println!(
            "  2. mca       n_sub={} guard={} window={}",
            cfg.plan.n_sub,
            cfg.plan.guard_fraction,
            cfg.plan.window.name()
        );
        println!("  3. track     line={}", cfg.line);
        println!(
            "  4. focus     sonic={} grid={} mode={}",
            cfg.sonic.display(),
            cfg.grid.display(),
            cfg.mode.name()
        );
        match &cfg.affine {
            Some(a) => println!("  5. georef    affine={}", a.display()),
            None => println!("  5. georef    (skipped: no affine)"),
        }
        println!("  6. report    outdir={}", outdir.display());
        return Ok(outdir);
    }

    std::fs::create_dir_all(&outdir).map_err(IoError::from)?;
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config_path.display().to_string(),
        ..RunManifest::default()
    };
    for (name, path) in [
        ("config", config_path),
        ("geometry", cfg.geometry.as_path()),
        ("scene", cfg.scene.as_path()),
        ("sonic", cfg.sonic.as_path()),
        ("grid", cfg.grid.as_path()),
    ] {
        manifest.inputs.push((name.into(), sha256_file(path)?));
    }

    let slc_path = outdir.join("scene.slc");
    let t0 = Instant::now();
    run_simulate(&cfg.scene, &cfg.geometry, &slc_path, cfg.snr_db, cfg.seed)?;
    manifest.timings_ms.push(("simulate".into(), t0.elapsed().as_millis()));

    let stacks_dir = outdir.join("stacks");
    let t1 = Instant::now();
    run_mca(&slc_path, &cfg.plan, &stacks_dir)?;
    manifest.timings_ms.push(("mca".into(), t1.elapsed().as_millis()));

    let shifts_csv = outdir.join("shifts.csv");
    let t2 = Instant::now();
    let tracked = run_track(
        &stacks_dir,
        &cfg.line,
        cfg.track.as_deref(),
        &shifts_csv,
    )?;
    manifest.timings_ms.push(("track".into(), t2.elapsed().as_millis()));

    let tomo_base = outdir.join("tomo");
    let t3 = Instant::now();
    let focus_out = run_focus(
        &shifts_csv,
        &cfg.sonic,
        &cfg.grid,
        &FocusSettings {
            mode: cfg.mode,
            tikhonov: cfg.tikhonov,
            quality_floor: cfg.quality_floor,
        },
        &tomo_base,
    )?;
    manifest.timings_ms.push(("focus".into(), t3.elapsed().as_millis()));

    let tomo_csv = outdir.join("tomo.csv");
    let geo_csv = outdir.join("geo.csv");
    if let Some(affine) = &cfg.affine {
        let t4 = Instant::now();
        run_georef(&tomo_csv, affine, &geo_csv)?;
        manifest.timings_ms.push(("georef".into(), t4.elapsed().as_millis()));
    }

    // deterministic run report with the resolution arithmetic
    let sonic_cfg = load_sonic(&cfg.sonic)?;
    let lambda_s = sonic_cfg.wave_speed / sonic_cfg.probe_frequency;
    let report = format!(
        "# pipeline report\n\
         stages = simulate, mca, track, focus{}\n\
         pixels_tracked = {}\n\
         pixels_skipped = {}\n\
         sub_apertures_k = {}\n\
         wave_speed_m_s = {}\n\
         probe_frequency_hz = {}\n\
         sound_wavelength_m = {lambda_s}\n\
         # unit note: the wave speed must be in m/s before dividing by the\n\
         # frequency. A speed quoted as 3500 km/h is 972 m/s, so the\n\
         # wavelength at 200 Hz is 972/200 = 4.86 m (dividing the km/h\n\
         # figure directly would wrongly give 17.5 m).\n\
         orbit_aperture_m = {}\n\
         slant_range_m = {}\n\
         tomographic_resolution_m = {}\n\
         steering_time_scale_s = {}\n\
         focus_mode = {}\n",
        if cfg.affine.is_some() { ", georef" } else { "" },
        tracked.tracked,
        tracked.skipped,
        focus_out.k,
        sonic_cfg.wave_speed,
        sonic_cfg.probe_frequency,
        sonic_cfg.orbit_aperture,
        sonic_cfg.slant_range,
        focus_out.resolution,
        focus_out.time_scale,
        cfg.mode.name(),
    );
    std::fs::write(outdir.join("report.txt"), report).map_err(IoError::from)?;

    let mut outputs: Vec<PathBuf> = vec![
        slc_path,
        shifts_csv,
        tomo_csv,
        outdir.join("tomo.pgm"),
        outdir.join("tomo.pgm.txt"),
        outdir.join("report.txt"),
    ];
    if cfg.affine.is_some() {
        outputs.push(geo_csv);
    }
    let mut stack_files: Vec<PathBuf> = std::fs::read_dir(&stacks_dir)
        .map_err(IoError::from)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    stack_files.sort();
    outputs.extend(stack_files);
    for out in &outputs {
        let name = out
            .strip_prefix(&outdir)
            .unwrap_or(out)
            .display()
            .to_string();
        manifest.outputs.push((name, sha256_file(out)?));
    }
    let manifest_path = outdir.join("run.manifest");
    write_run_manifest(&manifest_path, &manifest)?;
    Ok(outdir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_spec_parsing() {
        assert_eq!(
            parse_line_spec("3,4:7,8").unwrap(),
            ((3, 4), (7, 8))
        );
        assert!(parse_line_spec("3,4").is_err());
        assert!(parse_line_spec("a,4:7,8").is_err());
    }

    #[test]
    fn bresenham_covers_endpoints_and_is_contiguous() {
        let line = bresenham_line((2, 3), (7, 11));
        assert_eq!(*line.first().unwrap(), (2, 3));
        assert_eq!(*line.last().unwrap(), (7, 11));
        for w in line.windows(2) {
            let dr = (w[1].0 as i64 - w[0].0 as i64).abs();
            let dc = (w[1].1 as i64 - w[0].1 as i64).abs();
            assert!(dr <= 1 && dc <= 1 && dr + dc >= 1);
        }
        // single-pixel line
        assert_eq!(bresenham_line((5, 5), (5, 5)), vec![(5, 5)]);
        // pure range line
        let vertical = bresenham_line((1, 4), (6, 4));
        assert_eq!(vertical.len(), 6);
        assert!(vertical.iter().all(|p| p.1 == 4));
    }
}
