//! Serial revolute arm: forward and inverse kinematics and the
//! trapezoidal-velocity reachability bound.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Isometry3, Matrix6, Translation3, Unit, UnitQuaternion, Vector3, Vector6};
#[allow(unused_imports)]
use num_traits::Float;

use crate::math::{BasePose, Pose6};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArmError {
    #[error("arm needs at least one joint")]
    NoJoints,
    #[error("expected {expected} joint values, got {got}")]
    DofMismatch { expected: usize, got: usize },
    #[error("joint {joint} limits must satisfy min < max")]
    InvalidLimits { joint: usize },
    #[error("joint {joint} velocity and acceleration limits must be positive")]
    InvalidRates { joint: usize },
    #[error("joint {joint} value {value} outside [{min}, {max}]")]
    LimitViolation { joint: usize, value: f64, min: f64, max: f64 },
}

/// Revolute joint: the parent-to-joint transform applied before rotating
/// about `axis` (expressed in the joint frame).
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: alloc::string::String,
    pub origin: Isometry3<f64>,
    pub axis: Unit<Vector3<f64>>,
    pub min: f64,
    pub max: f64,
    /// Maximum joint speed, rad/s.
    pub omega_max: f64,
    /// Maximum joint acceleration, rad/s^2.
    pub alpha_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel {
    pub joints: Vec<Joint>,
    /// Base frame to arm root.
    pub mount: Isometry3<f64>,
    /// Last joint frame to camera optical frame.
    pub eef_to_camera: Isometry3<f64>,
    /// Configuration the arm starts a survey in.
    pub ready: JointConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig {
    pub q: Vec<f64>,
}

impl JointConfig {
    pub fn new(q: Vec<f64>) -> Self {
        JointConfig { q }
    }

    pub fn zeros(n: usize) -> Self {
        JointConfig { q: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Componentwise linear interpolation.
    pub fn lerp(&self, other: &JointConfig, s: f64) -> JointConfig {
        JointConfig {
            q: self.q.iter().zip(&other.q).map(|(a, b)| a + (b - a) * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &JointConfig) -> f64 {
        self.q.iter().zip(&other.q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Maximum displacement reachable in time `t` from rest under a trapezoidal
/// velocity profile with speed limit `omega_max` and acceleration limit
/// `alpha_max`.
pub fn tvp_bound(omega_max: f64, alpha_max: f64, t: f64) -> f64 {
    let tq = omega_max / alpha_max;
    if t > tq {
        0.5 * alpha_max * tq * tq + omega_max * (t - tq)
    } else {
        0.5 * alpha_max * t * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    pub max_iterations: usize,
    pub position_tolerance: f64,
    pub angle_tolerance: f64,
    pub damping: f64,
    /// Largest per-joint change in one iteration, rad.
    pub max_step: f64,
    /// Extra deterministic start configurations tried after the seed fails.
    pub restarts: usize,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            max_iterations: 200,
            position_tolerance: 1e-3,
            angle_tolerance: 0.5f64.to_radians(),
            damping: 0.05,
            max_step: 0.35,
            restarts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkSolution {
    pub config: JointConfig,
    pub iterations: usize,
    pub position_error: f64,
    pub angle_error: f64,
}

/// Orientation rows of the task error are scaled by this length so that a
/// radian weighs like this many metres.
const ANGLE_WEIGHT: f64 = 0.3;

/// Position and orientation residual between two poses.
pub fn pose_error(a: &Pose6, b: &Pose6) -> (f64, f64) {
    let dp = (a.translation.vector - b.translation.vector).norm();
    let da = a.rotation.angle_to(&b.rotation);
    (dp, da)
}

impl ArmModel {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn validate(&self) -> Result<(), ArmError> {
        if self.joints.is_empty() {
            return Err(ArmError::NoJoints);
        }
        for (i, j) in self.joints.iter().enumerate() {
            if !(j.min < j.max) {
                return Err(ArmError::InvalidLimits { joint: i });
            }
            if !(j.omega_max > 0.0 && j.alpha_max > 0.0) {
                return Err(ArmError::InvalidRates { joint: i });
            }
        }
        self.check_limits(&self.ready)
    }

    pub fn check_limits(&self, q: &JointConfig) -> Result<(), ArmError> {
        if q.len() != self.dof() {
            return Err(ArmError::DofMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        for (i, (j, &v)) in self.joints.iter().zip(&q.q).enumerate() {
            if !(v >= j.min && v <= j.max) {
                return Err(ArmError::LimitViolation {
                    joint: i,
                    value: v,
                    min: j.min,
                    max: j.max,
                });
            }
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        self.check_limits(q).is_ok()
    }

    /// Arm root to camera for a configuration. No limit check.
    pub fn chain(&self, q: &[f64]) -> Isometry3<f64> {
        let mut t = Isometry3::identity();
        for (j, &a) in self.joints.iter().zip(q) {
            t = t * j.origin * UnitQuaternion::from_axis_angle(&j.axis, a);
        }
        t * self.eef_to_camera
    }

    /// World camera pose for `q` with the base at `base`.
    pub fn forward_kinematics(&self, q: &JointConfig, base: &BasePose) -> Result<Pose6, ArmError> {
        self.check_limits(q)?;
        Ok(self.fk_unchecked(&q.q, base))
    }

    pub fn fk_unchecked(&self, q: &[f64], base: &BasePose) -> Pose6 {
        self.root(base) * self.chain(q)
    }

    /// World pose of the arm root.
    pub fn root(&self, base: &BasePose) -> Isometry3<f64> {
        base.lift() * self.mount
    }

    /// Upper bound on the distance from the first joint's origin to the
    /// camera over all configurations.
    pub fn reach(&self) -> f64 {
        let links: f64 = self.joints.iter().skip(1).map(|j| j.origin.translation.vector.norm()).sum();
        links + self.eef_to_camera.translation.vector.norm()
    }

    /// World position of the first joint's origin (the shoulder).
    pub fn shoulder(&self, base: &BasePose) -> nalgebra::Point3<f64> {
        let o = self.root(base) * self.joints[0].origin;
        o.translation.vector.into()
    }

    /// Per joint, an upper bound on the distance from that joint's axis
    /// origin to the camera.
    pub fn lever_arms(&self) -> Vec<f64> {
        let n = self.dof();
        let cam = self.eef_to_camera.translation.vector.norm();
        (0..n)
            .map(|i| {
                self.joints.iter().skip(i + 1).map(|j| j.origin.translation.vector.norm()).sum::<f64>() + cam
            })
            .collect()
    }

    /// Per-joint displacement bound for one step of length `t`.
    pub fn tvp_bounds(&self, t: f64) -> Vec<f64> {
        self.joints.iter().map(|j| tvp_bound(j.omega_max, j.alpha_max, t)).collect()
    }

    /// Every joint moves by at most its own bound within `t_step`.
    pub fn reachable_within_step(&self, from: &JointConfig, to: &JointConfig, t_step: f64) -> bool {
        from.len() == self.dof()
            && to.len() == self.dof()
            && self
                .joints
                .iter()
                .zip(from.q.iter().zip(&to.q))
                .all(|(j, (a, b))| (b - a).abs() <= tvp_bound(j.omega_max, j.alpha_max, t_step))
    }

    /// Geometric Jacobian columns at `q` in the root frame (linear; angular),
    /// together with the root-frame camera pose.
    fn jacobian(&self, q: &[f64]) -> (Vec<Vector6<f64>>, Isometry3<f64>) {
        let mut t = Isometry3::identity();
        let mut axes = Vec::with_capacity(q.len());
        for (j, &a) in self.joints.iter().zip(q) {
            t *= j.origin;
            axes.push((t.translation.vector, t.rotation * j.axis.into_inner()));
            t *= UnitQuaternion::from_axis_angle(&j.axis, a);
        }
        let cam = t * self.eef_to_camera;
        let p = cam.translation.vector;
        let cols = axes
            .into_iter()
            .map(|(o, z)| {
                let v = z.cross(&(p - o));
                Vector6::new(v.x, v.y, v.z, z.x * ANGLE_WEIGHT, z.y * ANGLE_WEIGHT, z.z * ANGLE_WEIGHT)
            })
            .collect();
        (cols, cam)
    }

    /// Damped least-squares IK for a world target with the base at `base`,
    /// starting from `seed` and then from `opts.restarts` fixed
    /// low-discrepancy configurations. Joint values are clamped to the limits
    /// after every step. `None` when the tolerance is not met.
    pub fn inverse_kinematics(
        &self,
        target: &Pose6,
        base: &BasePose,
        seed: &JointConfig,
        opts: &IkOptions,
    ) -> Option<IkSolution> {
        if seed.len() != self.dof() {
            return None;
        }
        let goal = self.root(base).inverse() * target;
        if let Some(s) = self.solve_from(&goal, &seed.q, opts) {
            return Some(s);
        }
        (1..=opts.restarts).find_map(|k| self.solve_from(&goal, &self.restart_config(k), opts))
    }

    /// k-th point of a Halton sequence mapped into the joint box.
    fn restart_config(&self, k: usize) -> Vec<f64> {
        const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
        self.joints
            .iter()
            .enumerate()
            .map(|(i, j)| {
                let base = PRIMES[i % PRIMES.len()];
                let (mut f, mut r, mut n) = (1.0, 0.0, k);
                while n > 0 {
                    f /= base as f64;
                    r += f * (n % base) as f64;
                    n /= base;
                }
                j.min + r * (j.max - j.min)
            })
            .collect()
    }

    fn solve_from(&self, goal: &Isometry3<f64>, seed: &[f64], opts: &IkOptions) -> Option<IkSolution> {
        let mut q: Vec<f64> = seed
            .iter()
            .zip(&self.joints)
            .map(|(&v, j)| v.clamp(j.min, j.max))
            .collect();
        let mut best_err = f64::INFINITY;
        let mut since_best = 0usize;
        for it in 0..=opts.max_iterations {
            let (cols, cam) = self.jacobian(&q);
            let (dp, da) = pose_error(&cam, goal);
            if dp <= opts.position_tolerance && da <= opts.angle_tolerance {
                return Some(IkSolution {
                    config: JointConfig { q },
                    iterations: it,
                    position_error: dp,
                    angle_error: da,
                });
            }
            if it == opts.max_iterations {
                break;
            }
            let err = dp + da * ANGLE_WEIGHT;
            if err < best_err * (1.0 - 1e-4) {
                best_err = err;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > 25 {
                    break;
                }
            }
            let ep = goal.translation.vector - cam.translation.vector;
            let eo = (goal.rotation * cam.rotation.inverse()).scaled_axis() * ANGLE_WEIGHT;
            let e = Vector6::new(ep.x, ep.y, ep.z, eo.x, eo.y, eo.z);
            let mut a = Matrix6::identity() * (opts.damping * opts.damping);
            for c in &cols {
                a += c * c.transpose();
            }
            let y = match a.cholesky() {
                Some(ch) => ch.solve(&e),
                None => break,
            };
            let mut dq: Vec<f64> = cols.iter().map(|c| c.dot(&y)).collect();
            let biggest = dq.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            if biggest > opts.max_step {
                let s = opts.max_step / biggest;
                dq.iter_mut().for_each(|d| *d *= s);
            }
            for ((v, d), j) in q.iter_mut().zip(dq).zip(&self.joints) {
                *v = (*v + d).clamp(j.min, j.max);
            }
        }
        None
    }

    /// Six-joint arm with the proportions of a legged robot's manipulator:
    /// yaw and pitch at the shoulder, elbow pitch, then roll-pitch-roll at the
    /// wrist, about 0.98 m from shoulder to camera.
    #[allow(clippy::approx_constant)]
    pub fn default_arm() -> ArmModel {
        let j = |name: &str, origin: [f64; 3], axis: Vector3<f64>, min: f64, max: f64| Joint {
            name: name.into(),
            origin: Isometry3::from_parts(Translation3::new(origin[0], origin[1], origin[2]), UnitQuaternion::identity()),
            axis: Unit::new_normalize(axis),
            min,
            max,
            omega_max: 1.5,
            alpha_max: 4.0,
        };
        ArmModel {
            joints: vec![
                j("sh0", [0.0, 0.0, 0.0], Vector3::z(), -2.62, 3.14),
                j("sh1", [0.0, 0.0, 0.0], Vector3::y(), -3.14, 0.52),
                j("el0", [0.3385, 0.0, 0.0], Vector3::y(), 0.0, 3.14),
                j("el1", [0.0, 0.0, 0.0], Vector3::x(), -2.79, 2.79),
                j("wr0", [0.40, 0.0, 0.0], Vector3::y(), -1.83, 1.83),
                j("wr1", [0.0, 0.0, 0.0], Vector3::x(), -2.87, 2.87),
            ],
            mount: Isometry3::translation(0.29, 0.0, 0.70),
            eef_to_camera: Isometry3::translation(0.24, 0.0, 0.0),
            ready: JointConfig::new(vec![0.0, -0.6, 1.2, 0.0, -0.6, 0.0]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Matrix4};
    use rand::{Rng, SeedableRng};

    fn random_q(arm: &ArmModel, rng: &mut impl Rng) -> JointConfig {
        JointConfig::new(arm.joints.iter().map(|j| rng.random_range(j.min..=j.max)).collect())
    }

    /// Homogeneous-matrix product with Rodrigues rotations.
    fn fk_matrix(arm: &ArmModel, q: &[f64], base: &BasePose) -> Matrix4<f64> {
        let hom = |r: Matrix3<f64>, t: Vector3<f64>| {
            let mut m = Matrix4::identity();
            m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
            m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
            m
        };
        let rodrigues = |k: Vector3<f64>, a: f64| {
            let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
            Matrix3::identity() + kx * a.sin() + kx * kx * (1.0 - a.cos())
        };
        let iso = |i: &Isometry3<f64>| hom(i.rotation.to_rotation_matrix().into_inner(), i.translation.vector);
        let mut m = hom(rodrigues(Vector3::z(), base.yaw), Vector3::new(base.x, base.y, 0.0)) * iso(&arm.mount);
        for (j, &a) in arm.joints.iter().zip(q) {
            m = m * iso(&j.origin) * hom(rodrigues(j.axis.into_inner(), a), Vector3::zeros());
        }
        m * iso(&arm.eef_to_camera)
    }

    #[test]
    fn tvp_values() {
        assert_eq!(tvp_bound(1.0, 2.0, 0.0), 0.0);
        assert!((tvp_bound(1.0, 2.0, 1.0) - 0.75).abs() < 1e-15);
        let tq = 0.5;
        assert!((tvp_bound(1.0, 2.0, tq) - 0.25).abs() < 1e-15);
        assert!((tvp_bound(1.0, 2.0, tq + 1e-9) - 0.25).abs() < 1e-8);
        let mut prev = 0.0;
        for i in 0..1000 {
            let v = tvp_bound(1.5, 4.0, i as f64 * 0.005);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn home_pose() {
        let arm = ArmModel::default_arm();
        let p = arm.forward_kinematics(&JointConfig::zeros(6), &BasePose::new(0.0, 0.0, 0.0)).unwrap();
        assert!((p.translation.vector - Vector3::new(0.29 + 0.9785, 0.0, 0.70)).norm() < 1e-12);
        assert!(p.rotation.angle() < 1e-12);
        assert!((arm.reach() - 0.9785).abs() < 1e-12);
    }

    #[test]
    fn base_yaw_rotates_camera() {
        let arm = ArmModel::default_arm();
        let q = arm.ready.clone();
        let a = arm.forward_kinematics(&q, &BasePose::new(0.0, 0.0, 0.0)).unwrap();
        let b = arm
            .forward_kinematics(&q, &BasePose::new(0.0, 0.0, core::f64::consts::FRAC_PI_2))
            .unwrap();
        let pa = a.translation.vector;
        let pb = b.translation.vector;
        assert!((pb - Vector3::new(-pa.y, pa.x, pa.z)).norm() < 1e-12);
    }

    #[test]
    fn fk_matches_matrix_product() {
        let arm = ArmModel::default_arm();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let q = random_q(&arm, &mut rng);
            let base = BasePose::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-3.0..3.0));
            let a = arm.forward_kinematics(&q, &base).unwrap().to_homogeneous();
            let b = fk_matrix(&arm, &q.q, &base);
            assert!((a - b).abs().max() < 1e-12);
        }
    }

    #[test]
    fn limits_are_enforced() {
        let arm = ArmModel::default_arm();
        let mut q = arm.ready.clone();
        q.q[2] = -0.1;
        assert!(matches!(
            arm.forward_kinematics(&q, &BasePose::new(0.0, 0.0, 0.0)),
            Err(ArmError::LimitViolation { joint: 2, .. })
        ));
        assert!(arm.validate().is_ok());
    }

    #[test]
    fn ik_fixed_point_and_unreachable() {
        let arm = ArmModel::default_arm();
        let base = BasePose::new(1.0, 2.0, 0.3);
        let t = arm.forward_kinematics(&arm.ready, &base).unwrap();
        let s = arm.inverse_kinematics(&t, &base, &arm.ready, &IkOptions::default()).unwrap();
        assert!(s.iterations <= 2);
        let far = Isometry3::translation(11.0, 2.0, 0.5);
        assert!(arm.inverse_kinematics(&far, &base, &arm.ready, &IkOptions::default()).is_none());
    }

    #[test]
    fn ik_random_targets() {
        let arm = ArmModel::default_arm();
        let base = BasePose::new(0.0, 0.0, 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let opts = IkOptions::default();
        let mut ok = 0;
        for _ in 0..1000 {
            let q = random_q(&arm, &mut rng);
            let target = arm.forward_kinematics(&q, &base).unwrap();
            if let Some(s) = arm.inverse_kinematics(&target, &base, &arm.ready, &opts) {
                let got = arm.forward_kinematics(&s.config, &base).unwrap();
                let (dp, da) = pose_error(&got, &target);
                assert!(dp <= opts.position_tolerance && da <= opts.angle_tolerance);
                ok += 1;
            }
        }
        assert!(ok >= 950, "success {ok}/1000");
    }

    #[test]
    fn reachability_predicate() {
        let arm = ArmModel::default_arm();
        let b = tvp_bound(1.5, 4.0, 1.0);
        let q = arm.ready.clone();
        assert!(arm.reachable_within_step(&q, &q, 1.0));
        let mut r = q.clone();
        r.q[3] += b;
        assert!(arm.reachable_within_step(&q, &r, 1.0));
        r.q[3] += 1e-6;
        assert!(!arm.reachable_within_step(&q, &r, 1.0));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let a = random_q(&arm, &mut rng);
            let c = random_q(&arm, &mut rng);
            let t = rng.random_range(0.0..3.0);
            let expect = (0..6).all(|i| {
                let (w, al) = (arm.joints[i].omega_max, arm.joints[i].alpha_max);
                let tq = w / al;
                let lim = if t <= tq { al * t * t / 2.0 } else { al * tq * tq / 2.0 + w * (t - tq) };
                (a.q[i] - c.q[i]).abs() <= lim
            });
            assert_eq!(arm.reachable_within_step(&a, &c, t), expect);
        }
    }
}
