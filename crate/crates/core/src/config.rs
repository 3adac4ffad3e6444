//! Planner hyperparameters.

use crate::arm::IkOptions;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("`{0}` must be positive and finite")]
    NotPositive(&'static str),
    #[error("`{0}` must lie in [0, 1]")]
    NotFraction(&'static str),
    #[error("base path needs at least 2 samples")]
    TooFewSamples,
    #[error("candidate count must be at least 1")]
    NoCandidates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Base speed along the path, m/s.
    pub v_base: f64,
    /// Average end-effector speed, m/s; sets the sampling radius.
    pub v_eef: f64,
    /// Time between base samples, s.
    pub t_step: f64,
    /// Candidates sampled per base pose.
    pub m: usize,
    /// Number of base samples; `None` derives it from the path length.
    pub n: Option<usize>,
    pub voxel_size: f64,
    /// Capture distance for the coverage metric, m.
    pub registration_distance: f64,
    pub seed: u64,
    /// Share of candidates aimed at targets; the rest get uniform orientations.
    pub look_at_fraction: f64,
    /// Free-space radius required around a candidate camera position, m.
    pub collision_radius: f64,
    /// Sample positions on the sphere only instead of the full ball.
    pub surface_only: bool,
    /// Apply the joint-distance filter. Disabling it is the ablation.
    pub joint_filter: bool,
    pub ik: IkOptions,
    /// Ground-truth points per square metre; `None` means 4 per voxel face.
    pub ground_truth_density: Option<f64>,
    /// Frame interval of the continuous camera stream, s.
    pub frame_interval: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            v_base: 0.35,
            v_eef: 0.65,
            t_step: 1.0,
            m: 980,
            n: Some(25),
            voxel_size: 0.05,
            registration_distance: 0.05,
            seed: 0,
            look_at_fraction: 0.7,
            collision_radius: 0.12,
            surface_only: false,
            joint_filter: true,
            ik: IkOptions::default(),
            ground_truth_density: None,
            frame_interval: 0.2,
        }
    }
}

impl PlannerConfig {
    /// Settings of the simulated surveys: faster base, longer steps, slower
    /// arm, and a base path sampled over its whole length.
    pub fn simulation() -> Self {
        PlannerConfig {
            v_base: 0.5,
            t_step: 2.0,
            v_eef: 0.4,
            n: None,
            ..PlannerConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |v: f64, name| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::NotPositive(name))
            }
        };
        pos(self.v_base, "v_base")?;
        pos(self.v_eef, "v_eef")?;
        pos(self.t_step, "t_step")?;
        pos(self.voxel_size, "voxel_size")?;
        pos(self.registration_distance, "registration_distance")?;
        pos(self.frame_interval, "frame_interval")?;
        if !(self.collision_radius >= 0.0) {
            return Err(ConfigError::NotPositive("collision_radius"));
        }
        if !(0.0..=1.0).contains(&self.look_at_fraction) {
            return Err(ConfigError::NotFraction("look_at_fraction"));
        }
        if let Some(d) = self.ground_truth_density {
            pos(d, "ground_truth_density")?;
        }
        if matches!(self.n, Some(k) if k < 2) {
            return Err(ConfigError::TooFewSamples);
        }
        if self.m == 0 {
            return Err(ConfigError::NoCandidates);
        }
        Ok(())
    }

    /// Distance between consecutive base samples.
    pub fn spacing(&self) -> f64 {
        self.v_base * self.t_step
    }

    /// Radius of the candidate sampling ball.
    pub fn sampling_radius(&self) -> f64 {
        self.v_eef * self.t_step
    }

    pub fn density(&self) -> f64 {
        self.ground_truth_density
            .unwrap_or(4.0 / (self.voxel_size * self.voxel_size))
    }
}
