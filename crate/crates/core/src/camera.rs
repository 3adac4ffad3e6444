//! Pinhole camera visibility and the observation bookkeeping behind the
//! information-gain utility.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::VoxelGrid;
use crate::math::Pose6;
use crate::raycast::cast_ray;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CameraError {
    #[error("field of view must lie in (0, 180) degrees")]
    FieldOfView,
    #[error("ray grid needs at least 2x2 rays")]
    RayGrid,
    #[error("range must satisfy 0 <= min_range < max_range")]
    Range,
}

/// Pinhole camera reduced to a grid of cast rays.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub h_fov_deg: f64,
    pub v_fov_deg: f64,
    pub cols: usize,
    pub rows: usize,
    pub min_range: f64,
    pub max_range: f64,
}

impl Default for CameraModel {
    /// 640x480 image downsampled by 10.
    fn default() -> Self {
        CameraModel {
            h_fov_deg: 70.0,
            v_fov_deg: 55.0,
            cols: 64,
            rows: 48,
            min_range: 0.1,
            max_range: 5.0,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), CameraError> {
        let fov_ok = |f: f64| f > 0.0 && f < 180.0;
        if !fov_ok(self.h_fov_deg) || !fov_ok(self.v_fov_deg) {
            return Err(CameraError::FieldOfView);
        }
        if self.cols < 2 || self.rows < 2 {
            return Err(CameraError::RayGrid);
        }
        if !(self.min_range >= 0.0 && self.min_range < self.max_range) {
            return Err(CameraError::Range);
        }
        Ok(())
    }

    /// Unit ray directions in the camera frame, one per pixel centre, row-major
    /// from the top-left pixel.
    pub fn local_rays(&self) -> Vec<Vector3<f64>> {
        let th = (self.h_fov_deg.to_radians() * 0.5).tan();
        let tv = (self.v_fov_deg.to_radians() * 0.5).tan();
        let mut out = Vec::with_capacity(self.cols * self.rows);
        for j in 0..self.rows {
            let v = tv * (1.0 - 2.0 * (j as f64 + 0.5) / self.rows as f64);
            for i in 0..self.cols {
                let u = th * (1.0 - 2.0 * (i as f64 + 0.5) / self.cols as f64);
                out.push(Vector3::new(1.0, u, v).normalize());
            }
        }
        out
    }

    /// True if the world point lies inside the viewing pyramid and range.
    pub fn in_frustum(&self, pose: &Pose6, p: &nalgebra::Point3<f64>) -> bool {
        let l = pose.inverse_transform_point(p);
        if l.x <= 0.0 {
            return false;
        }
        let d = l.coords.norm();
        let th = (self.h_fov_deg.to_radians() * 0.5).tan();
        let tv = (self.v_fov_deg.to_radians() * 0.5).tan();
        l.y.abs() <= th * l.x && l.z.abs() <= tv * l.x && d >= self.min_range && d <= self.max_range
    }
}

/// Surface voxels seen from one pose, as sorted global surface ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VisibleSet {
    pub sids: Vec<u32>,
    /// The pose lay outside the grid; nothing was cast.
    pub out_of_bounds: bool,
}

impl VisibleSet {
    pub fn len(&self) -> usize {
        self.sids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sids.is_empty()
    }
}

/// Of-interest surface voxels whose first ray hit lies within range.
pub fn visible_surface_voxels(grid: &VoxelGrid, pose: &Pose6, cam: &CameraModel) -> VisibleSet {
    visible_with_rays(grid, pose, cam, &cam.local_rays())
}

/// As [`visible_surface_voxels`] with precomputed [`CameraModel::local_rays`].
pub fn visible_with_rays(grid: &VoxelGrid, pose: &Pose6, cam: &CameraModel, rays: &[Vector3<f64>]) -> VisibleSet {
    let origin = pose.translation.vector.into();
    if !grid.bounds().contains(&origin) {
        return VisibleSet {
            sids: Vec::new(),
            out_of_bounds: true,
        };
    }
    let objects = grid.objects();
    let mut sids = Vec::new();
    for r in rays {
        let dir = pose.rotation * r;
        let Some(hit) = cast_ray(grid, &origin, &dir, cam.max_range) else {
            continue;
        };
        if hit.distance < cam.min_range || !objects[hit.object].of_interest {
            continue;
        }
        if let Some(sid) = grid.surface_id(hit.object, hit.cell) {
            sids.push(sid);
        }
    }
    sids.sort_unstable();
    sids.dedup();
    VisibleSet {
        sids,
        out_of_bounds: false,
    }
}

/// Accumulated observations: a bit per global surface id plus the view that
/// first observed each voxel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedSet {
    bits: Vec<u64>,
    len: usize,
    /// (surface id, view index) in insertion order.
    order: Vec<(u32, u32)>,
}

impl ObservedSet {
    pub fn new(surface_count: usize) -> Self {
        ObservedSet {
            bits: vec![0; surface_count.div_ceil(64)],
            len: surface_count,
            order: Vec::new(),
        }
    }

    pub fn for_grid(grid: &VoxelGrid) -> Self {
        Self::new(grid.surface_count())
    }

    #[inline]
    pub fn contains(&self, sid: u32) -> bool {
        let s = sid as usize;
        s < self.len && self.bits[s / 64] >> (s % 64) & 1 == 1
    }

    /// Number of observed voxels.
    pub fn count(&self) -> usize {
        self.order.len()
    }

    pub fn capacity(&self) -> usize {
        self.len
    }

    /// Marks the voxels of `vis`; returns how many were new.
    pub fn insert(&mut self, vis: &VisibleSet, view: u32) -> usize {
        let before = self.order.len();
        for &sid in &vis.sids {
            let s = sid as usize;
            debug_assert!(s < self.len);
            let mask = 1u64 << (s % 64);
            if self.bits[s / 64] & mask == 0 {
                self.bits[s / 64] |= mask;
                self.order.push((sid, view));
            }
        }
        self.order.len() - before
    }

    pub fn first_view(&self, sid: u32) -> Option<u32> {
        self.order.iter().find(|&&(s, _)| s == sid).map(|&(_, v)| v)
    }

    pub fn provenance(&self) -> &[(u32, u32)] {
        &self.order
    }

    /// Observed ids in ascending order.
    pub fn ids(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.order.iter().map(|&(s, _)| s).collect();
        v.sort_unstable();
        v
    }

    /// Observed voxels of one object.
    pub fn count_in(&self, grid: &VoxelGrid, object: usize) -> usize {
        grid.surface_range(object).filter(|&s| self.contains(s)).count()
    }

    pub fn is_subset_of(&self, other: &ObservedSet) -> bool {
        self.order.iter().all(|&(s, _)| other.contains(s))
    }
}

/// Number of voxels in `vis` not yet in `observed`.
pub fn marginal_gain(vis: &VisibleSet, observed: &ObservedSet) -> usize {
    vis.sids.iter().filter(|&&s| !observed.contains(s)).count()
}

/// Marginal information gain of viewing from `pose` given `observed`.
pub fn marginal_ig(pose: &Pose6, observed: &ObservedSet, grid: &VoxelGrid, cam: &CameraModel) -> usize {
    marginal_gain(&visible_surface_voxels(grid, pose, cam), observed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{voxelize, ObjectInfo};
    use crate::math::{look_at, Aabb};
    use crate::scene::{SceneDescription, SceneObject, Shape};
    use alloc::string::ToString;
    use nalgebra::{Isometry3, Point3};
    use rand::{Rng, SeedableRng};

    /// Brute force: for every ray, slab-test every occupied voxel and keep the
    /// nearest; no traversal involved.
    fn oracle(grid: &VoxelGrid, pose: &Pose6, cam: &CameraModel) -> Vec<u32> {
        let o: Point3<f64> = pose.translation.vector.into();
        let occupied: Vec<usize> = (0..grid.len()).filter(|&c| !grid.is_free(c)).collect();
        let mut out = Vec::new();
        for r in cam.local_rays() {
            let d = pose.rotation * r;
            let mut best: Option<(f64, usize)> = None;
            for &c in &occupied {
                let b = grid.voxel_box(grid.coords(c));
                let (mut t0, mut t1) = (0.0f64, cam.max_range);
                for i in 0..3 {
                    if d[i] == 0.0 {
                        if o[i] < b.min[i] || o[i] > b.max[i] {
                            t0 = f64::INFINITY;
                        }
                        continue;
                    }
                    let (mut p, mut q) = ((b.min[i] - o[i]) / d[i], (b.max[i] - o[i]) / d[i]);
                    if p > q {
                        core::mem::swap(&mut p, &mut q);
                    }
                    t0 = t0.max(p);
                    t1 = t1.min(q);
                }
                if t0 <= t1 && best.is_none_or(|(bt, _)| t0 < bt) {
                    best = Some((t0, c));
                }
            }
            if let Some((t, c)) = best {
                let obj = grid.object_at(c).unwrap();
                if t >= cam.min_range && grid.objects()[obj].of_interest {
                    if let Some(s) = grid.surface_id(obj, c) {
                        out.push(s);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn wall_scene() -> VoxelGrid {
        // 1 x 1 m wall, 0.2 m thick, front face at x = 1
        let wall = SceneObject::new(
            "wall",
            Shape::Box {
                size: Vector3::new(0.2, 1.0, 1.0),
            },
            Isometry3::translation(1.1, 0.0, 0.0),
            true,
        );
        let scene = SceneDescription::new(
            Aabb::new(Point3::new(-0.5, -1.0, -1.0), Point3::new(1.5, 1.0, 1.0)),
            vec![wall],
        )
        .unwrap();
        voxelize(&scene, 0.05).unwrap()
    }

    #[test]
    fn wall_face_fully_visible() {
        let grid = wall_scene();
        let cam = CameraModel {
            h_fov_deg: 60.0,
            v_fov_deg: 60.0,
            cols: 160,
            rows: 160,
            min_range: 0.1,
            max_range: 5.0,
        };
        let pose = Isometry3::identity();
        let vis = visible_surface_voxels(&grid, &pose, &cam);
        // front face: x index of the layer at x in [1.0, 1.05]
        let front: Vec<u32> = grid
            .surface_set(0)
            .iter()
            .filter(|&&c| (grid.voxel_center(grid.coords(c as usize)).x - 1.025).abs() < 1e-9)
            .map(|&c| grid.surface_id(0, c as usize).unwrap())
            .collect();
        assert_eq!(front.len(), 400);
        assert_eq!(vis.sids, front);
        let coarse = CameraModel { cols: 40, rows: 40, ..cam };
        assert_eq!(visible_surface_voxels(&grid, &pose, &coarse).sids, oracle(&grid, &pose, &coarse));
    }

    #[test]
    fn facing_away_and_range_cutoff() {
        let grid = wall_scene();
        let cam = CameraModel::default();
        let away = Isometry3::rotation(Vector3::new(0.0, 0.0, core::f64::consts::PI));
        assert!(visible_surface_voxels(&grid, &away, &cam).is_empty());
        let short = CameraModel {
            min_range: 0.0,
            max_range: 0.01,
            ..cam.clone()
        };
        assert!(visible_surface_voxels(&grid, &Isometry3::identity(), &short).is_empty());
        let outside = Isometry3::translation(10.0, 0.0, 0.0);
        assert!(visible_surface_voxels(&grid, &outside, &cam).out_of_bounds);
    }

    #[test]
    fn matches_brute_force_on_random_grids() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let cam = CameraModel {
            cols: 12,
            rows: 9,
            max_range: 2.0,
            ..CameraModel::default()
        };
        for _ in 0..10 {
            let n = 16;
            let cells: Vec<u16> = (0..n * n * n)
                .map(|_| match rng.random_range(0..100) {
                    0..3 => 1,
                    3..5 => 2,
                    _ => 0,
                })
                .collect();
            let info = |k: usize, interest: bool| ObjectInfo {
                id: k.to_string(),
                of_interest: interest,
                aabb: Aabb::empty(),
                center: Point3::origin(),
            };
            let grid = VoxelGrid::from_labels(Point3::origin(), 0.05, [n, n, n], cells, vec![info(0, true), info(1, false)]).unwrap();
            for _ in 0..5 {
                let from = Point3::new(rng.random_range(0.1..0.7), rng.random_range(0.1..0.7), rng.random_range(0.1..0.7));
                let to = Point3::new(rng.random_range(0.0..0.8), rng.random_range(0.0..0.8), rng.random_range(0.0..0.8));
                let Some(pose) = look_at(&from, &to) else { continue };
                assert_eq!(visible_surface_voxels(&grid, &pose, &cam).sids, oracle(&grid, &pose, &cam));
            }
        }
    }

    #[test]
    fn observed_set_bookkeeping() {
        let mut obs = ObservedSet::new(130);
        let a = VisibleSet {
            sids: vec![1, 5, 64, 129],
            out_of_bounds: false,
        };
        let b = VisibleSet {
            sids: vec![5, 6],
            out_of_bounds: false,
        };
        assert_eq!(marginal_gain(&a, &obs), 4);
        assert_eq!(obs.insert(&a, 0), 4);
        assert_eq!(marginal_gain(&a, &obs), 0);
        assert_eq!(marginal_gain(&b, &obs), 1);
        assert_eq!(obs.insert(&b, 1), 1);
        assert_eq!(obs.count(), 5);
        assert_eq!(obs.first_view(5), Some(0));
        assert_eq!(obs.first_view(6), Some(1));
        assert_eq!(obs.ids(), vec![1, 5, 6, 64, 129]);
    }
}
