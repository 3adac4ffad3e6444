//! Ground-truth surface point sets sampled on the analytic object surfaces.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Isometry3, Point3, Vector3};
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::mix_seed;
use crate::scene::{pipe_offsets, SceneDescription, Shape};

/// Golden-ratio conjugate, the generator of the rank-1 lattice below.
const PHI_INV: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub object: usize,
    pub position: Point3<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruthSurface {
    pub points: Vec<LabeledPoint>,
}

impl GroundTruthSurface {
    pub fn for_object(&self, object: usize) -> impl Iterator<Item = &LabeledPoint> {
        self.points.iter().filter(move |p| p.object == object)
    }

    pub fn count(&self, object: usize) -> usize {
        self.for_object(object).count()
    }
}

/// A parametrised surface patch; `eval` maps the unit square onto it with
/// uniform area density.
#[derive(Debug, Clone, Copy)]
enum Patch {
    Rect {
        corner: Point3<f64>,
        u: Vector3<f64>,
        v: Vector3<f64>,
    },
    Disk {
        center: Point3<f64>,
        radius: f64,
        normal_up: bool,
    },
    Lateral {
        center: Point3<f64>,
        radius: f64,
        height: f64,
    },
    Triangle([Point3<f64>; 3]),
}

impl Patch {
    fn area(&self) -> f64 {
        match *self {
            Patch::Rect { u, v, .. } => u.cross(&v).norm(),
            Patch::Disk { radius, .. } => PI * radius * radius,
            Patch::Lateral { radius, height, .. } => 2.0 * PI * radius * height,
            Patch::Triangle([a, b, c]) => 0.5 * (b - a).cross(&(c - a)).norm(),
        }
    }

    fn eval(&self, s: f64, t: f64) -> Point3<f64> {
        match *self {
            Patch::Rect { corner, u, v } => corner + u * s + v * t,
            Patch::Disk {
                center,
                radius,
                normal_up,
            } => {
                let r = radius * s.sqrt();
                let a = 2.0 * PI * t * if normal_up { 1.0 } else { -1.0 };
                center + Vector3::new(r * a.cos(), r * a.sin(), 0.0)
            }
            Patch::Lateral {
                center,
                radius,
                height,
            } => {
                let a = 2.0 * PI * s;
                center + Vector3::new(radius * a.cos(), radius * a.sin(), (t - 0.5) * height)
            }
            Patch::Triangle([a, b, c]) => Point3::from(barycentric(a, b, c, s.sqrt(), t)),
        }
    }
}

/// Uniform point in a triangle from (sqrt(s), t): (1-r) a + r(1-t) b + r t c.
fn barycentric(a: Point3<f64>, b: Point3<f64>, c: Point3<f64>, r: f64, t: f64) -> Vector3<f64> {
    a.coords * (1.0 - r) + b.coords * (r * (1.0 - t)) + c.coords * (r * t)
}

fn box_patches(size: &Vector3<f64>, pose: &Isometry3<f64>, out: &mut Vec<Patch>) {
    let h = size * 0.5;
    let mut push = |corner: Vector3<f64>, u: Vector3<f64>, v: Vector3<f64>| {
        let c = pose * Point3::from(corner);
        out.push(Patch::Rect {
            corner: c,
            u: pose.rotation * u,
            v: pose.rotation * v,
        });
    };
    let (ex, ey, ez) = (Vector3::x() * size.x, Vector3::y() * size.y, Vector3::z() * size.z);
    push(Vector3::new(-h.x, -h.y, -h.z), ey, ez);
    push(Vector3::new(h.x, -h.y, -h.z), ey, ez);
    push(Vector3::new(-h.x, -h.y, -h.z), ex, ez);
    push(Vector3::new(-h.x, h.y, -h.z), ex, ez);
    push(Vector3::new(-h.x, -h.y, -h.z), ex, ey);
    push(Vector3::new(-h.x, -h.y, h.z), ex, ey);
}

/// Cylinder patches in the cylinder's local frame.
fn cylinder_patches(radius: f64, height: f64) -> [Patch; 3] {
    [
        Patch::Lateral {
            center: Point3::origin(),
            radius,
            height,
        },
        Patch::Disk {
            center: Point3::new(0.0, 0.0, height * 0.5),
            radius,
            normal_up: true,
        },
        Patch::Disk {
            center: Point3::new(0.0, 0.0, -height * 0.5),
            radius,
            normal_up: false,
        },
    ]
}

/// Splits `total` into integer counts proportional to `weights`
/// (largest-remainder rounding, ties to the lower index).
fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 || total == 0 {
        return alloc::vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Samples `round(area * density)` points per object of interest, apportioned
/// across the object's surface patches and laid out on a randomly shifted
/// rank-1 lattice within each patch. Deterministic in `seed`.
pub fn sample_ground_truth(scene: &SceneDescription, density: f64, seed: u64) -> GroundTruthSurface {
    let mut points = Vec::new();
    if !(density > 0.0) {
        return GroundTruthSurface { points };
    }
    for (k, object) in scene.targets() {
        // (patch, placement applied at evaluation time)
        let mut patches: Vec<(Patch, Isometry3<f64>)> = Vec::new();
        match &object.shape {
            Shape::Box { size } => {
                let mut ps = Vec::new();
                box_patches(size, &object.pose, &mut ps);
                patches.extend(ps.into_iter().map(|p| (p, Isometry3::identity())));
            }
            Shape::Cylinder { radius, height } => {
                patches.extend(cylinder_patches(*radius, *height).map(|p| (p, object.pose)));
            }
            Shape::PipeAssembly {
                count,
                radius,
                height,
                pitch,
            } => {
                for x in pipe_offsets(*count, *pitch) {
                    let place = object.pose * nalgebra::Translation3::new(x, 0.0, 0.0);
                    patches.extend(cylinder_patches(*radius, *height).map(|p| (p, place)));
                }
            }
            Shape::Mesh(_) => {
                patches.extend(
                    object
                        .world_triangles()
                        .into_iter()
                        .map(|t| (Patch::Triangle(t), Isometry3::identity())),
                );
            }
        }
        let areas: Vec<f64> = patches.iter().map(|(p, _)| p.area()).collect();
        let total_area: f64 = areas.iter().sum();
        let total = (total_area * density).round() as usize;
        let counts = apportion(&areas, total);
        for (pi, ((patch, place), n)) in patches.iter().zip(counts).enumerate() {
            if n == 0 {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, k as u64, pi as u64));
            let shift_s: f64 = rng.random();
            let shift_t: f64 = rng.random();
            for i in 0..n {
                let s = ((i as f64 + shift_s) / n as f64).fract();
                let t = (i as f64 * PHI_INV + shift_t).fract();
                points.push(LabeledPoint {
                    object: k,
                    position: place * patch.eval(s, t),
                });
            }
        }
    }
    GroundTruthSurface { points }
}
