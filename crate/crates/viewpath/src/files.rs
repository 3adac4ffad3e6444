//! TOML scene and arm descriptions.

use std::path::{Path, PathBuf};

use nalgebra::{Isometry3, Point3, Translation3, Vector3};
use serde::{Deserialize, Serialize};
use viewpath_core::arm::{ArmModel, Joint, JointConfig};
use viewpath_core::math::{rotation_from_ypr_deg, unit_axis, ypr_deg, Aabb};
use viewpath_core::scene::{SceneDescription, SceneObject, Shape, TriangleMesh};

use crate::error::{read_file, Error, Result};

/// Position plus yaw-pitch-roll in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub ypr_deg: [f64; 3],
}

impl PoseSpec {
    pub fn to_isometry(&self) -> Isometry3<f64> {
        let [x, y, z] = self.xyz;
        let [yaw, pitch, roll] = self.ypr_deg;
        Isometry3::from_parts(Translation3::new(x, y, z), rotation_from_ypr_deg(yaw, pitch, roll))
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let t = iso.translation.vector;
        PoseSpec {
            xyz: [t.x, t.y, t.z],
            // Adding zero turns -0.0 into 0.0 for tidier files.
            ypr_deg: ypr_deg(&iso.rotation).map(|a| a + 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Box {
        size: [f64; 3],
    },
    Cylinder {
        radius: f64,
        height: f64,
    },
    Pipes {
        count: u32,
        radius: f64,
        height: f64,
        pitch: f64,
    },
    /// Wavefront OBJ file, relative to the scene file.
    Mesh {
        path: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: String,
    pub shape: ShapeSpec,
    #[serde(default)]
    pub pose: PoseSpec,
    #[serde(default = "yes")]
    pub of_interest: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub voxel_size: f64,
    pub world_bounds: BoundsSpec,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(format!("scene: {e}")))
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = read_file(path)?;
        let file = Self::parse(&text).map_err(|e| Error::parse(format!("{}: {}", path.display(), e.message)))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((file, dir))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene files serialize")
    }

    /// Builds the validated scene; mesh paths resolve against `dir`.
    pub fn to_scene(&self, dir: &Path) -> Result<SceneDescription> {
        if !(self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return Err(Error::validation("scene: voxel_size must be positive"));
        }
        let objects = self
            .objects
            .iter()
            .map(|o| {
                let shape = match &o.shape {
                    ShapeSpec::Box { size } => Shape::Box {
                        size: Vector3::from(*size),
                    },
                    ShapeSpec::Cylinder { radius, height } => Shape::Cylinder {
                        radius: *radius,
                        height: *height,
                    },
                    ShapeSpec::Pipes {
                        count,
                        radius,
                        height,
                        pitch,
                    } => Shape::PipeAssembly {
                        count: *count,
                        radius: *radius,
                        height: *height,
                        pitch: *pitch,
                    },
                    ShapeSpec::Mesh { path } => Shape::Mesh(load_obj(&dir.join(path))?),
                };
                Ok(SceneObject::new(o.id.clone(), shape, o.pose.to_isometry(), o.of_interest))
            })
            .collect::<Result<Vec<_>>>()?;
        let b = Aabb::new(Point3::from(self.world_bounds.min), Point3::from(self.world_bounds.max));
        SceneDescription::new(b, objects).map_err(|e| Error::validation(format!("scene: {e}")))
    }

    /// Scene file for a scene of primitive shapes.
    pub fn from_scene(scene: &SceneDescription, voxel_size: f64) -> Result<Self> {
        let objects = scene
            .objects
            .iter()
            .map(|o| {
                let shape = match &o.shape {
                    Shape::Box { size } => ShapeSpec::Box { size: [size.x, size.y, size.z] },
                    Shape::Cylinder { radius, height } => ShapeSpec::Cylinder {
                        radius: *radius,
                        height: *height,
                    },
                    Shape::PipeAssembly {
                        count,
                        radius,
                        height,
                        pitch,
                    } => ShapeSpec::Pipes {
                        count: *count,
                        radius: *radius,
                        height: *height,
                        pitch: *pitch,
                    },
                    Shape::Mesh(_) => return Err(Error::validation(format!("object `{}`: meshes cannot be written inline", o.id))),
                };
                Ok(ObjectSpec {
                    id: o.id.clone(),
                    shape,
                    pose: PoseSpec::from_isometry(&o.pose),
                    of_interest: o.of_interest,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let b = &scene.world_bounds;
        Ok(SceneFile {
            voxel_size,
            world_bounds: BoundsSpec {
                min: [b.min.x, b.min.y, b.min.z],
                max: [b.max.x, b.max.y, b.max.z],
            },
            objects,
        })
    }
}

pub fn load_obj(path: &Path) -> Result<TriangleMesh> {
    let opts = tobj::LoadOptions {
        triangulate: true,
        single_index: true,
        ..Default::default()
    };
    let (models, _) = tobj::load_obj(path, &opts).map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for m in models {
        let base = vertices.len() as u32;
        vertices.extend(
            m.mesh
                .positions
                .chunks_exact(3)
                .map(|p| Point3::new(p[0] as f64, p[1] as f64, p[2] as f64)),
        );
        triangles.extend(
            m.mesh
                .indices
                .chunks_exact(3)
                .map(|t| [base + t[0], base + t[1], base + t[2]]),
        );
    }
    if triangles.is_empty() {
        return Err(Error::parse(format!("{}: no triangles", path.display())));
    }
    Ok(TriangleMesh { vertices, triangles })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub name: String,
    #[serde(default)]
    pub origin: PoseSpec,
    pub axis: [f64; 3],
    pub min: f64,
    pub max: f64,
    pub omega_max: f64,
    pub alpha_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmFile {
    /// Robot base frame to arm root.
    pub mount: PoseSpec,
    /// Last joint frame to camera optical frame (optical axis along +x).
    pub eef_to_camera: PoseSpec,
    /// Joint angles at the start of a survey, rad.
    pub ready: Vec<f64>,
    pub joints: Vec<JointSpec>,
}

impl ArmFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(format!("arm: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?).map_err(|e| Error::parse(format!("{}: {}", path.display(), e.message)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("arm files serialize")
    }

    pub fn to_arm(&self) -> Result<ArmModel> {
        let mut joints = Vec::with_capacity(self.joints.len());
        for j in &self.joints {
            let axis = Vector3::from(j.axis);
            if !(axis.norm() > 1e-9) {
                return Err(Error::validation(format!("arm: joint `{}` has a zero axis", j.name)));
            }
            joints.push(Joint {
                name: j.name.clone(),
                origin: j.origin.to_isometry(),
                axis: unit_axis(axis),
                min: j.min,
                max: j.max,
                omega_max: j.omega_max,
                alpha_max: j.alpha_max,
            });
        }
        let arm = ArmModel {
            joints,
            mount: self.mount.to_isometry(),
            eef_to_camera: self.eef_to_camera.to_isometry(),
            ready: JointConfig::new(self.ready.clone()),
        };
        arm.validate().map_err(|e| Error::validation(format!("arm: {e}")))?;
        Ok(arm)
    }

    pub fn from_arm(arm: &ArmModel) -> Self {
        ArmFile {
            mount: PoseSpec::from_isometry(&arm.mount),
            eef_to_camera: PoseSpec::from_isometry(&arm.eef_to_camera),
            ready: arm.ready.q.clone(),
            joints: arm
                .joints
                .iter()
                .map(|j| JointSpec {
                    name: j.name.clone(),
                    origin: PoseSpec::from_isometry(&j.origin),
                    axis: [j.axis.x, j.axis.y, j.axis.z],
                    min: j.min,
                    max: j.max,
                    omega_max: j.omega_max,
                    alpha_max: j.alpha_max,
                })
                .collect(),
        }
    }
}
