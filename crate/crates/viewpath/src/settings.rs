//! Layered run configuration: defaults, then a preset, then the config file,
//! then command-line flags (environment variables count as flags).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use viewpath_core::camera::CameraModel;
use viewpath_core::config::PlannerConfig;

use crate::error::{read_file, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Experimental parameter table: v_base 0.35, T_step 1, v_eef 0.65, N 25.
    #[default]
    Table,
    /// Simulated surveys: v_base 0.5, T_step 2, v_eef 0.4, N from the path.
    Simulation,
}

impl Preset {
    pub fn config(self) -> PlannerConfig {
        match self {
            Preset::Table => PlannerConfig::default(),
            Preset::Simulation => PlannerConfig::simulation(),
        }
    }
}

/// Planner overrides. `n = 0` derives the sample count from the path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct PlannerSettings {
    /// Base speed, m/s
    #[arg(long, env = "VIEWPATH_V_BASE")]
    pub v_base: Option<f64>,
    /// Average end-effector speed, m/s (sampling radius = v_eef * t_step)
    #[arg(long, env = "VIEWPATH_V_EEF")]
    pub v_eef: Option<f64>,
    /// Time between base samples, s
    #[arg(long, env = "VIEWPATH_T_STEP")]
    pub t_step: Option<f64>,
    /// Candidates sampled per base sample
    #[arg(long, env = "VIEWPATH_M")]
    pub m: Option<usize>,
    /// Base samples; 0 derives the count from the path length
    #[arg(long, env = "VIEWPATH_N")]
    pub n: Option<usize>,
    /// Voxel edge length, m
    #[arg(long, env = "VIEWPATH_VOXEL_SIZE")]
    pub voxel_size: Option<f64>,
    /// Capture distance of the coverage metric, m
    #[arg(long, env = "VIEWPATH_REGISTRATION_DISTANCE")]
    pub registration_distance: Option<f64>,
    /// Seed for sampling and tie-breaking
    #[arg(long, env = "VIEWPATH_SEED")]
    pub seed: Option<u64>,
    /// Share of candidates aimed at objects of interest
    #[arg(long, env = "VIEWPATH_LOOK_AT_FRACTION")]
    pub look_at_fraction: Option<f64>,
    /// Free radius required around a camera position, m
    #[arg(long, env = "VIEWPATH_COLLISION_RADIUS")]
    pub collision_radius: Option<f64>,
    /// Ground-truth points per square metre
    #[arg(long, env = "VIEWPATH_GROUND_TRUTH_DENSITY")]
    pub ground_truth_density: Option<f64>,
    /// Frame interval of the camera stream in all-images mode, s
    #[arg(long, env = "VIEWPATH_FRAME_INTERVAL")]
    pub frame_interval: Option<f64>,
}

impl PlannerSettings {
    pub fn apply(&self, c: &mut PlannerConfig) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { c.$f = v; })*};
        }
        set!(v_base, v_eef, t_step, m, voxel_size, registration_distance, seed, look_at_fraction, collision_radius, frame_interval);
        if let Some(n) = self.n {
            c.n = (n > 0).then_some(n);
        }
        if let Some(d) = self.ground_truth_density {
            c.ground_truth_density = Some(d);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSettings {
    pub h_fov_deg: Option<f64>,
    pub v_fov_deg: Option<f64>,
    pub cols: Option<usize>,
    pub rows: Option<usize>,
    pub min_range: Option<f64>,
    pub max_range: Option<f64>,
}

impl CameraSettings {
    pub fn apply(&self, c: &mut CameraModel) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { c.$f = v; })*};
        }
        set!(h_fov_deg, v_fov_deg, cols, rows, min_range, max_range);
    }
}

/// Contents of a `--config` file. Relative paths resolve against the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<Preset>,
    pub scene: Option<PathBuf>,
    pub layout: Option<String>,
    pub path: Option<String>,
    pub waypoints: Option<PathBuf>,
    pub arm: Option<PathBuf>,
    #[serde(default)]
    pub planner: PlannerSettings,
    #[serde(default)]
    pub camera: CameraSettings,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = Self::parse(&read_file(path)?).map_err(|e| Error::parse(format!("{}: {}", path.display(), e.message)))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        for p in [&mut f.scene, &mut f.waypoints, &mut f.arm].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(f)
    }
}

/// Resolves the planner configuration: defaults < preset < file < flags.
pub fn resolve(preset: Option<Preset>, file: &ConfigFile, flags: &PlannerSettings) -> Result<PlannerConfig> {
    let mut c = preset.or(file.preset).unwrap_or_default().config();
    file.planner.apply(&mut c);
    flags.apply(&mut c);
    c.validate().map_err(|e| Error::validation(format!("config: {e}")))?;
    Ok(c)
}

pub fn resolve_camera(file: &ConfigFile) -> Result<CameraModel> {
    let mut cam = CameraModel::default();
    file.camera.apply(&mut cam);
    cam.validate().map_err(|e| Error::validation(format!("camera: {e}")))?;
    Ok(cam)
}
