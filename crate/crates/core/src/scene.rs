//! Declarative scene: primitive shapes and triangle meshes placed in a bounded world.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Isometry3, Point3, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

use crate::math::Aabb;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("duplicate object id `{0}`")]
    DuplicateId(String),
    #[error("object `{0}` does not fit inside world_bounds")]
    OutOfBounds(String),
    #[error("scene has no object of interest")]
    NoTargets,
    #[error("object `{id}`: {reason}")]
    InvalidShape { id: String, reason: &'static str },
    #[error("world_bounds must have positive extent on every axis")]
    DegenerateBounds,
    #[error("objects `{0}` and `{1}` occupy the same voxel")]
    Overlap(String, String),
}

/// Closed triangle mesh in the object's local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn triangle(&self, i: usize) -> [Point3<f64>; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Box centred on the object origin.
    Box { size: Vector3<f64> },
    /// Cylinder centred on the object origin with its axis along local z.
    Cylinder { radius: f64, height: f64 },
    /// Row of identical vertical pipes spaced along local x, centred on the origin.
    PipeAssembly {
        count: u32,
        radius: f64,
        height: f64,
        pitch: f64,
    },
    Mesh(TriangleMesh),
}

/// Convex primitive in world coordinates, used by the voxelizer.
#[derive(Debug, Clone, Copy)]
pub enum Convex {
    Box { half: Vector3<f64> },
    Cylinder { radius: f64, half_height: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct ConvexPiece {
    pub shape: Convex,
    pub pose: Isometry3<f64>,
}

impl ConvexPiece {
    /// Farthest point of the piece along world direction `dir`.
    pub fn support(&self, dir: &Vector3<f64>) -> Point3<f64> {
        let d = self.pose.rotation.inverse() * dir;
        let local = match self.shape {
            Convex::Box { half } => Point3::new(
                half.x.copysign(d.x),
                half.y.copysign(d.y),
                half.z.copysign(d.z),
            ),
            Convex::Cylinder {
                radius,
                half_height,
            } => {
                let r = (d.x * d.x + d.y * d.y).sqrt();
                let (x, y) = if r > 1e-15 {
                    (radius * d.x / r, radius * d.y / r)
                } else {
                    (0.0, 0.0)
                };
                Point3::new(x, y, half_height.copysign(d.z))
            }
        };
        self.pose * local
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        let l = self.pose.inverse_transform_point(p);
        match self.shape {
            Convex::Box { half } => (0..3).all(|i| l[i].abs() <= half[i]),
            Convex::Cylinder {
                radius,
                half_height,
            } => l.z.abs() <= half_height && l.x * l.x + l.y * l.y <= radius * radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: String,
    pub shape: Shape,
    pub pose: Isometry3<f64>,
    pub of_interest: bool,
}

impl SceneObject {
    pub fn new(id: impl Into<String>, shape: Shape, pose: Isometry3<f64>, of_interest: bool) -> Self {
        Self {
            id: id.into(),
            shape,
            pose,
            of_interest,
        }
    }

    fn validate_shape(&self) -> Result<(), SceneError> {
        let bad = |reason| {
            Err(SceneError::InvalidShape {
                id: self.id.clone(),
                reason,
            })
        };
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        match &self.shape {
            Shape::Box { size } => {
                if !size.iter().all(|&s| finite_pos(s)) {
                    return bad("box size must be positive");
                }
            }
            Shape::Cylinder { radius, height } => {
                if !finite_pos(*radius) || !finite_pos(*height) {
                    return bad("cylinder radius and height must be positive");
                }
            }
            Shape::PipeAssembly {
                count,
                radius,
                height,
                pitch,
            } => {
                if *count == 0 || !finite_pos(*radius) || !finite_pos(*height) {
                    return bad("pipe assembly needs count >= 1 and positive radius/height");
                }
                if *count > 1 && !(*pitch > 2.0 * radius) {
                    return bad("pipe pitch must exceed the pipe diameter");
                }
            }
            Shape::Mesh(mesh) => {
                if mesh.triangles.is_empty() {
                    return bad("mesh has no triangles");
                }
                let n = mesh.vertices.len() as u32;
                if mesh.triangles.iter().flatten().any(|&i| i >= n) {
                    return bad("mesh triangle references a missing vertex");
                }
                if !(mesh.area() > 0.0) {
                    return bad("mesh has zero surface area");
                }
            }
        }
        Ok(())
    }

    /// Convex decomposition of analytic shapes; empty for meshes.
    pub fn convex_pieces(&self) -> Vec<ConvexPiece> {
        match &self.shape {
            Shape::Box { size } => alloc::vec![ConvexPiece {
                shape: Convex::Box { half: size * 0.5 },
                pose: self.pose,
            }],
            Shape::Cylinder { radius, height } => alloc::vec![ConvexPiece {
                shape: Convex::Cylinder {
                    radius: *radius,
                    half_height: height * 0.5,
                },
                pose: self.pose,
            }],
            Shape::PipeAssembly {
                count,
                radius,
                height,
                pitch,
            } => pipe_offsets(*count, *pitch)
                .map(|x| ConvexPiece {
                    shape: Convex::Cylinder {
                        radius: *radius,
                        half_height: height * 0.5,
                    },
                    pose: self.pose * nalgebra::Translation3::new(x, 0.0, 0.0),
                })
                .collect(),
            Shape::Mesh(_) => Vec::new(),
        }
    }

    /// Mesh triangles in world coordinates (empty for analytic shapes).
    pub fn world_triangles(&self) -> Vec<[Point3<f64>; 3]> {
        match &self.shape {
            Shape::Mesh(mesh) => (0..mesh.triangles.len())
                .map(|i| mesh.triangle(i).map(|p| self.pose * p))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn local_aabb(&self) -> Aabb {
        match &self.shape {
            Shape::Box { size } => Aabb::new(Point3::from(-size * 0.5), Point3::from(size * 0.5)),
            Shape::Cylinder { radius, height } => {
                let h = Vector3::new(*radius, *radius, height * 0.5);
                Aabb::new(Point3::from(-h), Point3::from(h))
            }
            Shape::PipeAssembly {
                count,
                radius,
                height,
                pitch,
            } => {
                let span = (*count as f64 - 1.0) * pitch * 0.5;
                let h = Vector3::new(span + radius, *radius, height * 0.5);
                Aabb::new(Point3::from(-h), Point3::from(h))
            }
            Shape::Mesh(mesh) => Aabb::from_points(mesh.vertices.iter()),
        }
    }

    pub fn world_aabb(&self) -> Aabb {
        match &self.shape {
            Shape::Mesh(mesh) => Aabb::from_points(mesh.vertices.iter().map(|p| self.pose * p).collect::<Vec<_>>().iter()),
            Shape::Cylinder { .. } | Shape::PipeAssembly { .. } => {
                // Tight bounds per cylinder: the rim circle's extent along each world axis.
                let mut b = Aabb::empty();
                for piece in self.convex_pieces() {
                    for axis in 0..3 {
                        let mut d = Vector3::zeros();
                        d[axis] = 1.0;
                        b.include(&piece.support(&d));
                        b.include(&piece.support(&-d));
                    }
                }
                b
            }
            Shape::Box { .. } => self.local_aabb().transformed(&self.pose),
        }
    }

    /// World-frame centre used for aiming (centre of the world bounds).
    pub fn center(&self) -> Point3<f64> {
        self.world_aabb().center()
    }

    pub fn surface_area(&self) -> f64 {
        match &self.shape {
            Shape::Box { size } => 2.0 * (size.x * size.y + size.y * size.z + size.x * size.z),
            Shape::Cylinder { radius, height } => cylinder_area(*radius, *height),
            Shape::PipeAssembly {
                count,
                radius,
                height,
                ..
            } => *count as f64 * cylinder_area(*radius, *height),
            Shape::Mesh(mesh) => mesh.area(),
        }
    }
}

fn cylinder_area(r: f64, h: f64) -> f64 {
    2.0 * PI * r * h + 2.0 * PI * r * r
}

pub(crate) fn pipe_offsets(count: u32, pitch: f64) -> impl Iterator<Item = f64> {
    let mid = (count as f64 - 1.0) * 0.5;
    (0..count).map(move |k| (k as f64 - mid) * pitch)
}

/// Validated set of objects inside a bounded world.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDescription {
    pub world_bounds: Aabb,
    pub objects: Vec<SceneObject>,
}

impl SceneDescription {
    /// Checks shapes, id uniqueness and containment. Scenes without objects of
    /// interest are accepted here; see [`SceneDescription::require_targets`].
    pub fn new(world_bounds: Aabb, objects: Vec<SceneObject>) -> Result<Self, SceneError> {
        if !(0..3).all(|i| world_bounds.max[i] - world_bounds.min[i] > 0.0) {
            return Err(SceneError::DegenerateBounds);
        }
        for (i, o) in objects.iter().enumerate() {
            if objects[..i].iter().any(|p| p.id == o.id) {
                return Err(SceneError::DuplicateId(o.id.clone()));
            }
            o.validate_shape()?;
            if !world_bounds.contains_box(&o.world_aabb(), 1e-9) {
                return Err(SceneError::OutOfBounds(o.id.clone()));
            }
        }
        Ok(Self {
            world_bounds,
            objects,
        })
    }

    pub fn require_targets(&self) -> Result<(), SceneError> {
        if self.objects.iter().any(|o| o.of_interest) {
            Ok(())
        } else {
            Err(SceneError::NoTargets)
        }
    }

    pub fn targets(&self) -> impl Iterator<Item = (usize, &SceneObject)> {
        self.objects.iter().enumerate().filter(|(_, o)| o.of_interest)
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }
}
