//! Small geometric vocabulary shared by every module.

use core::f64::consts::PI;

use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

/// Camera pose in the world frame. The optical axis is the local +x axis,
/// local +z is "up" in the image.
pub type Pose6 = Isometry3<f64>;

/// Planar pose of the mobile base (SE(2)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasePose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl BasePose {
    pub const fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    /// Lifts the planar pose onto the ground plane (z = 0).
    pub fn lift(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(self.x, self.y, 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), self.yaw),
        )
    }

    pub fn distance_to(&self, other: &BasePose) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    /// Linear interpolation of position and shortest-arc interpolation of heading.
    pub fn interpolate(&self, other: &BasePose, s: f64) -> BasePose {
        let dyaw = wrap_angle(other.yaw - self.yaw);
        BasePose {
            x: self.x + (other.x - self.x) * s,
            y: self.y + (other.y - self.y) * s,
            yaw: wrap_angle(self.yaw + dyaw * s),
        }
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn new(min: Point3<f64>, max: Point3<f64>) -> Self {
        Self { min, max }
    }

    pub fn empty() -> Self {
        Self {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.include(p);
        }
        b
    }

    pub fn include(&mut self, p: &Point3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    pub fn extents(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// True if `other` lies inside `self` up to `tol` on every side.
    pub fn contains_box(&self, other: &Aabb, tol: f64) -> bool {
        (0..3).all(|i| other.min[i] >= self.min[i] - tol && other.max[i] <= self.max[i] + tol)
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        let m = Vector3::repeat(margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }

    /// Euclidean distance from a point to the box (zero inside).
    pub fn distance_to(&self, p: &Point3<f64>) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let v = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            d2 += v * v;
        }
        d2.sqrt()
    }

    /// Planar (x, y) distance from a point to the box footprint.
    pub fn footprint_distance(&self, x: f64, y: f64) -> f64 {
        let dx = (self.min.x - x).max(x - self.max.x).max(0.0);
        let dy = (self.min.y - y).max(y - self.max.y).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }

    /// Corner `i` in 0..8, bit k selecting min/max along axis k.
    pub fn corner(&self, i: usize) -> Point3<f64> {
        Point3::new(
            if i & 1 == 0 { self.min.x } else { self.max.x },
            if i & 2 == 0 { self.min.y } else { self.max.y },
            if i & 4 == 0 { self.min.z } else { self.max.z },
        )
    }

    /// Bounds of this box after a rigid transform.
    pub fn transformed(&self, iso: &Isometry3<f64>) -> Aabb {
        let mut out = Aabb::empty();
        for i in 0..8 {
            out.include(&(iso * self.corner(i)));
        }
        out
    }
}

/// Rotation from yaw-pitch-roll in degrees, applied as Rz(yaw) Ry(pitch) Rx(roll).
pub fn rotation_from_ypr_deg(yaw: f64, pitch: f64, roll: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_euler_angles(roll.to_radians(), pitch.to_radians(), yaw.to_radians())
}

/// Inverse of [`rotation_from_ypr_deg`].
pub fn ypr_deg(rot: &UnitQuaternion<f64>) -> [f64; 3] {
    let (roll, pitch, yaw) = rot.euler_angles();
    [yaw.to_degrees(), pitch.to_degrees(), roll.to_degrees()]
}

/// World direction of the optical axis.
pub fn optical_axis(pose: &Pose6) -> Vector3<f64> {
    pose.rotation * Vector3::x()
}

/// Orientation whose +x axis points along `dir` with the image kept level
/// (local +z in the vertical plane through `dir`). Returns `None` for a
/// zero direction.
pub fn look_along(dir: &Vector3<f64>) -> Option<UnitQuaternion<f64>> {
    let x = dir.try_normalize(1e-12)?;
    let up = Vector3::z();
    let y = match up.cross(&x).try_normalize(1e-9) {
        Some(y) => y,
        // Straight up or down: any horizontal y works.
        None => Vector3::y(),
    };
    let z = x.cross(&y);
    let m = nalgebra::Matrix3::from_columns(&[x, y, z]);
    Some(UnitQuaternion::from_rotation_matrix(
        &nalgebra::Rotation3::from_matrix_unchecked(m),
    ))
}

/// Pose at `from` looking at `target`.
pub fn look_at(from: &Point3<f64>, target: &Point3<f64>) -> Option<Pose6> {
    let q = look_along(&(target - from))?;
    Some(Isometry3::from_parts(Translation3::from(from.coords), q))
}

/// Angle in radians between two non-zero vectors.
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

pub fn unit_axis(v: Vector3<f64>) -> Unit<Vector3<f64>> {
    Unit::new_normalize(v)
}

/// SplitMix64 finalizer, used to derive independent seeds for sub-streams.
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
