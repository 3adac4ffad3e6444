//! Candidate view generation around the current camera pose and the
//! collision / IK / joint-distance filter chain.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Point3, Quaternion, Translation3, UnitQuaternion, Vector3};
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arm::{tvp_bound, ArmModel, IkOptions, JointConfig};
use crate::grid::VoxelGrid;
use crate::math::{look_along, Aabb, BasePose, Pose6};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingParams {
    /// Ball radius, normally `v_eef * t_step`.
    pub radius: f64,
    pub count: usize,
    pub look_at_fraction: f64,
    pub surface_only: bool,
}

/// Uniformly distributed rotation (Shoemake's method).
pub fn random_rotation(rng: &mut impl Rng) -> UnitQuaternion<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let (t2, t3) = (2.0 * PI * u2, 2.0 * PI * u3);
    UnitQuaternion::from_quaternion(Quaternion::new(b * t3.cos(), a * t2.sin(), a * t2.cos(), b * t3.sin()))
}

fn random_direction(rng: &mut impl Rng) -> Vector3<f64> {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(s * phi.cos(), s * phi.sin(), z)
}

/// `count` poses with positions in the closed ball of `radius` about
/// `center` (radii stratified by enclosed volume) and orientations split
/// between look-ats toward points in the `targets` boxes and uniform random
/// rotations. Deterministic in `seed`.
pub fn sample_candidates(center: &Pose6, targets: &[Aabb], params: &SamplingParams, seed: u64) -> Vec<Pose6> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.count;
    let mut radii: Vec<f64> = (0..n)
        .map(|k| {
            if params.surface_only {
                params.radius
            } else {
                let u = (k as f64 + rng.random::<f64>()) / n as f64;
                params.radius * u.cbrt()
            }
        })
        .collect();
    radii.shuffle(&mut rng);
    let aimed = if targets.is_empty() {
        0
    } else {
        (params.look_at_fraction * n as f64).round() as usize
    };
    let c = center.translation.vector;
    radii
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            let p = c + random_direction(&mut rng) * r;
            let rot = if k < aimed {
                let b = &targets[k % targets.len()];
                let e = b.extents();
                let t = b.min.coords
                    + Vector3::new(
                        e.x * rng.random::<f64>(),
                        e.y * rng.random::<f64>(),
                        e.z * rng.random::<f64>(),
                    );
                look_along(&(t - p)).unwrap_or_else(|| random_rotation(&mut rng))
            } else {
                random_rotation(&mut rng)
            };
            Pose6::from_parts(Translation3::from(p), rot)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectStage {
    Collision,
    Ik,
    JointDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FilterStats {
    pub generated: usize,
    pub collision: usize,
    pub ik: usize,
    pub joint_distance: usize,
    pub survived: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub pose: Pose6,
    pub ik: JointConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub base_index: usize,
    pub candidates: Vec<Candidate>,
    pub stats: FilterStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterParams {
    /// Time available to move between the two configurations.
    pub dt: f64,
    pub collision_radius: f64,
    pub joint_filter: bool,
    pub ik: IkOptions,
}

/// Camera position clear of obstacles by `radius` and inside the grid.
pub fn collision_free(grid: &VoxelGrid, p: &Point3<f64>, radius: f64) -> bool {
    grid.sphere_is_free(p, radius)
}

/// Precomputed per-step quantities shared by every candidate of a layer.
pub struct Filter<'a> {
    grid: &'a VoxelGrid,
    arm: &'a ArmModel,
    base: BasePose,
    q_curr: &'a JointConfig,
    params: &'a FilterParams,
    shoulder: Point3<f64>,
    reach: f64,
    held: Point3<f64>,
    /// Largest camera displacement any joint move within the bounds can cause.
    max_shift: f64,
}

impl<'a> Filter<'a> {
    pub fn new(grid: &'a VoxelGrid, arm: &'a ArmModel, base: BasePose, q_curr: &'a JointConfig, params: &'a FilterParams) -> Self {
        let bounds = arm.tvp_bounds(params.dt);
        let max_shift = bounds.iter().zip(arm.lever_arms()).map(|(b, l)| b * l).sum();
        Filter {
            grid,
            arm,
            base,
            q_curr,
            params,
            shoulder: arm.shoulder(&base),
            reach: arm.reach(),
            held: arm.fk_unchecked(&q_curr.q, &base).translation.vector.into(),
            max_shift,
        }
    }

    /// Runs the filter chain on one pose. Two cheap necessary conditions run
    /// first (shoulder reach for IK, displacement bound for the joint
    /// distance); neither changes the outcome, only the stage it is
    /// attributed to.
    pub fn check(&self, pose: &Pose6) -> Result<JointConfig, RejectStage> {
        let p: Point3<f64> = pose.translation.vector.into();
        if (p - self.shoulder).norm() > self.reach + 1e-9 {
            return Err(RejectStage::Ik);
        }
        if self.params.joint_filter && (p - self.held).norm() > self.max_shift + 1e-9 {
            return Err(RejectStage::JointDistance);
        }
        if !collision_free(self.grid, &p, self.params.collision_radius) {
            return Err(RejectStage::Collision);
        }
        let sol = self
            .arm
            .inverse_kinematics(pose, &self.base, self.q_curr, &self.params.ik)
            .ok_or(RejectStage::Ik)?;
        if self.params.joint_filter && !self.arm.reachable_within_step(self.q_curr, &sol.config, self.params.dt) {
            return Err(RejectStage::JointDistance);
        }
        Ok(sol.config)
    }
}

/// Keeps the poses that are collision free, have an IK solution seeded at
/// `q_curr`, and (unless disabled) lie within the per-joint TVP bound of
/// `q_curr`. Survivors keep their input order.
pub fn filter_candidates(
    poses: &[Pose6],
    q_curr: &JointConfig,
    grid: &VoxelGrid,
    arm: &ArmModel,
    base_next: &BasePose,
    params: &FilterParams,
    base_index: usize,
) -> CandidateSet {
    let filter = Filter::new(grid, arm, *base_next, q_curr, params);
    let outcomes = crate::par::map(poses, |p| filter.check(p));
    let mut stats = FilterStats {
        generated: poses.len(),
        ..FilterStats::default()
    };
    let mut candidates = Vec::new();
    for (pose, out) in poses.iter().zip(outcomes) {
        match out {
            Ok(ik) => candidates.push(Candidate { pose: *pose, ik }),
            Err(RejectStage::Collision) => stats.collision += 1,
            Err(RejectStage::Ik) => stats.ik += 1,
            Err(RejectStage::JointDistance) => stats.joint_distance += 1,
        }
    }
    stats.survived = candidates.len();
    CandidateSet {
        base_index,
        candidates,
        stats,
    }
}

/// Per-joint TVP displacement check evaluated directly; kept separate from
/// [`ArmModel::reachable_within_step`] for cross-checking.
pub fn within_tvp(arm: &ArmModel, a: &JointConfig, b: &JointConfig, dt: f64) -> bool {
    arm.joints
        .iter()
        .enumerate()
        .all(|(i, j)| (a.q[i] - b.q[i]).abs() <= tvp_bound(j.omega_max, j.alpha_max, dt))
}
