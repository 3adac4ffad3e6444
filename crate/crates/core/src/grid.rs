//! Dense labelled occupancy grid built from a [`SceneDescription`].

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Point3, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{convex_intersects_box, triangle_intersects_box};
use crate::math::Aabb;
use crate::scene::{SceneDescription, Shape};

/// Default upper bound on the number of cells a grid may allocate.
pub const DEFAULT_CELL_BUDGET: u64 = 1_000_000_000;

/// Voxel boxes are shrunk by this fraction of the voxel size before the
/// analytic overlap test, so faces lying exactly on voxel boundaries do not
/// claim the neighbouring layer.
const SHRINK: f64 = 1e-6;

const FREE: u16 = 0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("voxel size must be positive and finite")]
    InvalidVoxelSize,
    #[error("grid needs {cells} cells, budget is {budget}")]
    CapacityExceeded { cells: u64, budget: u64 },
    #[error("objects `{0}` and `{1}` occupy the same voxel")]
    Overlap(String, String),
    #[error("too many objects for the cell label type")]
    TooManyObjects,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Free,
    Occupied { object: usize, of_interest: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInfo {
    pub id: String,
    pub of_interest: bool,
    pub aabb: Aabb,
    pub center: Point3<f64>,
}

pub type VoxelIndex = [usize; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    origin: Point3<f64>,
    voxel_size: f64,
    dims: [usize; 3],
    cells: Vec<u16>,
    objects: Vec<ObjectInfo>,
    /// Per object, sorted linear indices of its surface voxels.
    surface: Vec<Vec<u32>>,
    /// Global surface id of each object's first surface voxel.
    surface_offset: Vec<u32>,
}

impl VoxelGrid {
    pub fn origin(&self) -> Point3<f64> {
        self.origin
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        let ext = Vector3::new(self.dims[0] as f64, self.dims[1] as f64, self.dims[2] as f64) * self.voxel_size;
        Aabb::new(self.origin, self.origin + ext)
    }

    pub fn objects(&self) -> &[ObjectInfo] {
        &self.objects
    }

    pub fn targets(&self) -> impl Iterator<Item = (usize, &ObjectInfo)> {
        self.objects.iter().enumerate().filter(|(_, o)| o.of_interest)
    }

    #[inline]
    pub fn linear(&self, v: VoxelIndex) -> usize {
        (v[2] * self.dims[1] + v[1]) * self.dims[0] + v[0]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> VoxelIndex {
        let x = idx % self.dims[0];
        let r = idx / self.dims[0];
        [x, r % self.dims[1], r / self.dims[1]]
    }

    pub fn in_grid(&self, v: [i64; 3]) -> bool {
        (0..3).all(|i| v[i] >= 0 && (v[i] as usize) < self.dims[i])
    }

    /// Voxel containing `p` (half-open cells), `None` outside the grid.
    pub fn voxel_of(&self, p: &Point3<f64>) -> Option<VoxelIndex> {
        let mut out = [0usize; 3];
        for i in 0..3 {
            let f = ((p[i] - self.origin[i]) / self.voxel_size).floor();
            if !(f >= 0.0) || f >= self.dims[i] as f64 {
                return None;
            }
            out[i] = f as usize;
        }
        Some(out)
    }

    pub fn voxel_box(&self, v: VoxelIndex) -> Aabb {
        let lo = self.origin
            + Vector3::new(v[0] as f64, v[1] as f64, v[2] as f64) * self.voxel_size;
        Aabb::new(lo, lo + Vector3::repeat(self.voxel_size))
    }

    pub fn voxel_center(&self, v: VoxelIndex) -> Point3<f64> {
        self.origin
            + Vector3::new(v[0] as f64 + 0.5, v[1] as f64 + 0.5, v[2] as f64 + 0.5) * self.voxel_size
    }

    #[inline]
    pub fn label(&self, idx: usize) -> u16 {
        self.cells[idx]
    }

    #[inline]
    pub fn is_free(&self, idx: usize) -> bool {
        self.cells[idx] == FREE
    }

    pub fn state(&self, idx: usize) -> CellState {
        match self.cells[idx] {
            FREE => CellState::Free,
            l => {
                let object = l as usize - 1;
                CellState::Occupied {
                    object,
                    of_interest: self.objects[object].of_interest,
                }
            }
        }
    }

    /// Object occupying a voxel, if any.
    #[inline]
    pub fn object_at(&self, idx: usize) -> Option<usize> {
        match self.cells[idx] {
            FREE => None,
            l => Some(l as usize - 1),
        }
    }

    pub fn surface_set(&self, object: usize) -> &[u32] {
        &self.surface[object]
    }

    /// Total number of surface voxels over all objects; global surface ids are `0..surface_count()`.
    pub fn surface_count(&self) -> usize {
        self.surface.iter().map(Vec::len).sum()
    }

    pub fn surface_range(&self, object: usize) -> core::ops::Range<u32> {
        let start = self.surface_offset[object];
        start..start + self.surface[object].len() as u32
    }

    /// Global surface id of a voxel belonging to `object`.
    #[inline]
    pub fn surface_id(&self, object: usize, cell: usize) -> Option<u32> {
        self.surface[object]
            .binary_search(&(cell as u32))
            .ok()
            .map(|k| self.surface_offset[object] + k as u32)
    }

    /// Inverse of [`VoxelGrid::surface_id`]: (object, linear cell index).
    pub fn surface_cell(&self, sid: u32) -> (usize, usize) {
        let object = match self.surface_offset.binary_search(&sid) {
            Ok(mut k) => {
                // skip objects with empty surface sets sharing the offset
                while self.surface[k].is_empty() {
                    k += 1;
                }
                k
            }
            Err(k) => k - 1,
        };
        let local = (sid - self.surface_offset[object]) as usize;
        (object, self.surface[object][local] as usize)
    }

    /// True if every voxel touched by the sphere is inside the grid and free.
    pub fn sphere_is_free(&self, center: &Point3<f64>, radius: f64) -> bool {
        let bounds = self.bounds();
        if !bounds.contains_box(&Aabb::new(*center, *center).expanded(radius), 0.0) {
            return false;
        }
        let Some(_) = self.voxel_of(center) else {
            return false;
        };
        let lo = self.clamped_index(&(center - Vector3::repeat(radius)));
        let hi = self.clamped_index(&(center + Vector3::repeat(radius)));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let v = [x, y, z];
                    let idx = self.linear(v);
                    if !self.is_free(idx) && self.voxel_box(v).distance_to(center) <= radius {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// True if the vertical column of the disc (x, y, radius) is free from the
    /// floor up to `height` and lies inside the grid footprint.
    pub fn disc_is_free(&self, x: f64, y: f64, radius: f64, height: f64) -> bool {
        let b = self.bounds();
        if x - radius < b.min.x || x + radius > b.max.x || y - radius < b.min.y || y + radius > b.max.y {
            return false;
        }
        let lo = self.clamped_index(&Point3::new(x - radius, y - radius, b.min.z));
        let hi = self.clamped_index(&Point3::new(x + radius, y + radius, b.min.z + height));
        for z in lo[2]..=hi[2] {
            for yy in lo[1]..=hi[1] {
                for xx in lo[0]..=hi[0] {
                    let v = [xx, yy, z];
                    let idx = self.linear(v);
                    if !self.is_free(idx) && self.voxel_box(v).footprint_distance(x, y) <= radius {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn clamped_index(&self, p: &Point3<f64>) -> VoxelIndex {
        let mut out = [0usize; 3];
        for i in 0..3 {
            let f = ((p[i] - self.origin[i]) / self.voxel_size).floor();
            out[i] = f.clamp(0.0, (self.dims[i] - 1) as f64) as usize;
        }
        out
    }

    /// Voxels whose closed box contains `p` (up to 8 on shared corners).
    pub fn containing_voxels(&self, p: &Point3<f64>, tol: f64) -> Vec<VoxelIndex> {
        let mut ranges = [[0i64; 2]; 3];
        for i in 0..3 {
            let s = (p[i] - self.origin[i]) / self.voxel_size;
            let t = tol / self.voxel_size;
            ranges[i] = [(s - t).floor() as i64, (s + t).floor() as i64];
        }
        let mut out = Vec::new();
        for z in ranges[2][0]..=ranges[2][1] {
            for y in ranges[1][0]..=ranges[1][1] {
                for x in ranges[0][0]..=ranges[0][1] {
                    if self.in_grid([x, y, z]) {
                        out.push([x as usize, y as usize, z as usize]);
                    }
                }
            }
        }
        out
    }

    /// Builds a grid from raw labels (0 = free, k + 1 = `objects[k]`).
    pub fn from_labels(
        origin: Point3<f64>,
        voxel_size: f64,
        dims: [usize; 3],
        cells: Vec<u16>,
        objects: Vec<ObjectInfo>,
    ) -> Result<Self, GridError> {
        if !(voxel_size.is_finite() && voxel_size > 0.0) {
            return Err(GridError::InvalidVoxelSize);
        }
        let total = dims.iter().map(|&d| d as u64).product::<u64>();
        if total != cells.len() as u64 || total > u32::MAX as u64 {
            return Err(GridError::CapacityExceeded {
                cells: total,
                budget: cells.len() as u64,
            });
        }
        if cells.iter().any(|&l| l as usize > objects.len()) {
            return Err(GridError::TooManyObjects);
        }
        let mut grid = VoxelGrid {
            origin,
            voxel_size,
            dims,
            cells,
            objects,
            surface: Vec::new(),
            surface_offset: Vec::new(),
        };
        grid.compute_surfaces();
        Ok(grid)
    }

    fn compute_surfaces(&mut self) {
        let mut surface: Vec<Vec<u32>> = vec![Vec::new(); self.objects.len()];
        for idx in 0..self.cells.len() {
            let l = self.cells[idx];
            if l != FREE && self.neighbor_free(self.coords(idx)) {
                surface[l as usize - 1].push(idx as u32);
            }
        }
        let mut offset = Vec::with_capacity(surface.len());
        let mut acc = 0u32;
        for s in &surface {
            offset.push(acc);
            acc += s.len() as u32;
        }
        self.surface = surface;
        self.surface_offset = offset;
    }

    fn neighbor_free(&self, v: VoxelIndex) -> bool {
        for axis in 0..3 {
            for delta in [-1i64, 1] {
                let mut n = [v[0] as i64, v[1] as i64, v[2] as i64];
                n[axis] += delta;
                if !self.in_grid(n) {
                    return true;
                }
                if self.is_free(self.linear([n[0] as usize, n[1] as usize, n[2] as usize])) {
                    return true;
                }
            }
        }
        false
    }

    /// Voxel-index range (inclusive) covering a world box, clamped to the grid.
    fn index_range(&self, b: &Aabb) -> Option<[[usize; 2]; 3]> {
        let mut r = [[0usize; 2]; 3];
        for i in 0..3 {
            let lo = ((b.min[i] - self.origin[i]) / self.voxel_size).floor() as i64 - 1;
            let hi = ((b.max[i] - self.origin[i]) / self.voxel_size).floor() as i64 + 1;
            let lo = lo.max(0);
            let hi = hi.min(self.dims[i] as i64 - 1);
            if lo > hi {
                return None;
            }
            r[i] = [lo as usize, hi as usize];
        }
        Some(r)
    }
}

/// Voxelizes with the default cell budget.
pub fn voxelize(scene: &SceneDescription, voxel_size: f64) -> Result<VoxelGrid, GridError> {
    voxelize_with_budget(scene, voxel_size, DEFAULT_CELL_BUDGET)
}

/// Marks every voxel whose interior overlaps an object, then extracts the
/// surface set of each object (occupied voxels with a free face neighbour;
/// cells beyond the grid count as free).
pub fn voxelize_with_budget(
    scene: &SceneDescription,
    voxel_size: f64,
    cell_budget: u64,
) -> Result<VoxelGrid, GridError> {
    if !(voxel_size.is_finite() && voxel_size > 0.0) {
        return Err(GridError::InvalidVoxelSize);
    }
    if scene.objects.len() >= u16::MAX as usize {
        return Err(GridError::TooManyObjects);
    }
    let ext = scene.world_bounds.extents();
    let mut dims = [0usize; 3];
    let mut total: u64 = 1;
    for i in 0..3 {
        let n = (ext[i] / voxel_size - 1e-9).ceil().max(1.0);
        if n > u32::MAX as f64 {
            return Err(GridError::CapacityExceeded {
                cells: u64::MAX,
                budget: cell_budget,
            });
        }
        dims[i] = n as usize;
        total = total.saturating_mul(dims[i] as u64);
    }
    if total > cell_budget || total > u32::MAX as u64 {
        return Err(GridError::CapacityExceeded {
            cells: total,
            budget: cell_budget.min(u32::MAX as u64),
        });
    }

    let objects: Vec<ObjectInfo> = scene
        .objects
        .iter()
        .map(|o| {
            let aabb = o.world_aabb();
            ObjectInfo {
                id: o.id.clone(),
                of_interest: o.of_interest,
                aabb,
                center: aabb.center(),
            }
        })
        .collect();

    let mut grid = VoxelGrid {
        origin: scene.world_bounds.min,
        voxel_size,
        dims,
        cells: vec![FREE; total as usize],
        objects,
        surface: Vec::new(),
        surface_offset: Vec::new(),
    };

    let shrink = SHRINK * voxel_size;
    for (k, object) in scene.objects.iter().enumerate() {
        let mut occupied: Vec<usize> = Vec::new();
        match &object.shape {
            Shape::Mesh(_) => mesh_cells(&grid, &object.world_triangles(), &mut occupied),
            _ => {
                for piece in object.convex_pieces() {
                    let mut pb = Aabb::empty();
                    for axis in 0..3 {
                        let mut d = Vector3::zeros();
                        d[axis] = 1.0;
                        pb.include(&piece.support(&d));
                        pb.include(&piece.support(&-d));
                    }
                    let Some(r) = grid.index_range(&pb) else { continue };
                    for z in r[2][0]..=r[2][1] {
                        for y in r[1][0]..=r[1][1] {
                            for x in r[0][0]..=r[0][1] {
                                let v = [x, y, z];
                                let b = grid.voxel_box(v).expanded(-shrink);
                                if !intersects_aabb(&pb, &b) {
                                    continue;
                                }
                                if convex_intersects_box(&piece, &b) {
                                    occupied.push(grid.linear(v));
                                }
                            }
                        }
                    }
                }
            }
        }
        let label = (k + 1) as u16;
        for idx in occupied {
            match grid.cells[idx] {
                FREE => grid.cells[idx] = label,
                l if l == label => {}
                l => {
                    let other = &scene.objects[l as usize - 1];
                    if other.of_interest || object.of_interest {
                        return Err(GridError::Overlap(other.id.clone(), object.id.clone()));
                    }
                }
            }
        }
    }

    grid.compute_surfaces();
    Ok(grid)
}

fn intersects_aabb(a: &Aabb, b: &Aabb) -> bool {
    (0..3).all(|i| a.min[i] <= b.max[i] && b.min[i] <= a.max[i])
}

/// Conservative shell rasterization plus interior fill by flood-filling the
/// exterior of the mesh's bounding region.
fn mesh_cells(grid: &VoxelGrid, tris: &[[Point3<f64>; 3]], out: &mut Vec<usize>) {
    let Some(bounds) = tris.iter().flatten().fold(None::<Aabb>, |acc, p| {
        let mut b = acc.unwrap_or_else(Aabb::empty);
        b.include(p);
        Some(b)
    }) else {
        return;
    };
    let Some(r) = grid.index_range(&bounds) else { return };
    let size = [r[0][1] - r[0][0] + 1, r[1][1] - r[1][0] + 1, r[2][1] - r[2][0] + 1];
    let local = |v: VoxelIndex| ((v[2] - r[2][0]) * size[1] + (v[1] - r[1][0])) * size[0] + (v[0] - r[0][0]);
    const UNKNOWN: u8 = 0;
    const SHELL: u8 = 1;
    const OUTSIDE: u8 = 2;
    let mut mark = vec![UNKNOWN; size[0] * size[1] * size[2]];

    for tri in tris {
        let tb = Aabb::from_points(tri.iter());
        let Some(tr) = grid.index_range(&tb) else { continue };
        for z in tr[2][0]..=tr[2][1] {
            for y in tr[1][0]..=tr[1][1] {
                for x in tr[0][0]..=tr[0][1] {
                    let v = [x, y, z];
                    if triangle_intersects_box(tri, &grid.voxel_box(v)) {
                        mark[local(v)] = SHELL;
                    }
                }
            }
        }
    }

    let mut queue = VecDeque::new();
    for z in r[2][0]..=r[2][1] {
        for y in r[1][0]..=r[1][1] {
            for x in r[0][0]..=r[0][1] {
                let border = x == r[0][0] || x == r[0][1] || y == r[1][0] || y == r[1][1] || z == r[2][0] || z == r[2][1];
                let v = [x, y, z];
                if border && mark[local(v)] == UNKNOWN {
                    mark[local(v)] = OUTSIDE;
                    queue.push_back(v);
                }
            }
        }
    }
    while let Some(v) = queue.pop_front() {
        for axis in 0..3 {
            for delta in [-1i64, 1] {
                let n = v[axis] as i64 + delta;
                if n < r[axis][0] as i64 || n > r[axis][1] as i64 {
                    continue;
                }
                let mut w = v;
                w[axis] = n as usize;
                let li = local(w);
                if mark[li] == UNKNOWN {
                    mark[li] = OUTSIDE;
                    queue.push_back(w);
                }
            }
        }
    }
    for z in r[2][0]..=r[2][1] {
        for y in r[1][0]..=r[1][1] {
            for x in r[0][0]..=r[0][1] {
                let v = [x, y, z];
                if mark[local(v)] != OUTSIDE {
                    out.push(grid.linear(v));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{SceneObject, TriangleMesh};
    use nalgebra::Isometry3;

    fn world(half: f64) -> Aabb {
        Aabb::new(Point3::new(-half, -half, -half), Point3::new(half, half, half))
    }

    fn cube_scene(size: f64) -> SceneDescription {
        SceneDescription::new(
            world(5.0),
            vec![SceneObject::new(
                "cube",
                Shape::Box {
                    size: Vector3::repeat(size),
                },
                Isometry3::identity(),
                true,
            )],
        )
        .unwrap()
    }

    /// Boundary voxels of an n^3 solid block, counted by brute force.
    fn block_boundary(n: usize) -> usize {
        let mut count = 0;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let edge = |c: usize| c == 0 || c == n - 1;
                    if edge(x) || edge(y) || edge(z) {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn unit_cube_surface_count() {
        assert_eq!(block_boundary(20), 2168);
        let grid = voxelize(&cube_scene(1.0), 0.05).unwrap();
        assert_eq!(grid.dims(), [200, 200, 200]);
        let occupied = (0..grid.len()).filter(|&i| !grid.is_free(i)).count();
        assert_eq!(occupied, 8000);
        assert_eq!(grid.surface_set(0).len(), 2168);
        assert_eq!(grid.surface_count(), 2168);
    }

    #[test]
    fn empty_scene_is_all_free() {
        let s = SceneDescription::new(world(1.0), Vec::new()).unwrap();
        let grid = voxelize(&s, 0.1).unwrap();
        assert_eq!(grid.dims(), [20, 20, 20]);
        assert!((0..grid.len()).all(|i| grid.is_free(i)));
        assert_eq!(grid.surface_count(), 0);
    }

    #[test]
    fn capacity_budget_enforced() {
        let err = voxelize_with_budget(&cube_scene(1.0), 0.05, 1000).unwrap_err();
        assert!(matches!(err, GridError::CapacityExceeded { cells: 8_000_000, .. }));
        assert_eq!(voxelize(&cube_scene(1.0), 0.0).unwrap_err(), GridError::InvalidVoxelSize);
    }

    #[test]
    fn overlapping_targets_rejected() {
        let o = |id: &str, x: f64| {
            SceneObject::new(id, Shape::Box { size: Vector3::repeat(1.0) }, Isometry3::translation(x, 0.0, 0.0), true)
        };
        let s = SceneDescription::new(world(5.0), vec![o("a", 0.0), o("b", 0.98)]).unwrap();
        assert!(matches!(voxelize(&s, 0.05), Err(GridError::Overlap(..))));
        // Touching faces on a voxel boundary do not overlap.
        let s = SceneDescription::new(world(5.0), vec![o("a", 0.0), o("b", 1.0)]).unwrap();
        assert!(voxelize(&s, 0.05).is_ok());
    }

    #[test]
    fn surface_ids_round_trip() {
        let grid = voxelize(&cube_scene(0.5), 0.1).unwrap();
        for sid in 0..grid.surface_count() as u32 {
            let (obj, cell) = grid.surface_cell(sid);
            assert_eq!(grid.surface_id(obj, cell), Some(sid));
        }
    }

    #[test]
    fn mesh_cube_matches_box() {
        let v = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
        let vertices = vec![
            v(-0.5, -0.5, -0.5), v(0.5, -0.5, -0.5), v(0.5, 0.5, -0.5), v(-0.5, 0.5, -0.5),
            v(-0.5, -0.5, 0.5), v(0.5, -0.5, 0.5), v(0.5, 0.5, 0.5), v(-0.5, 0.5, 0.5),
        ];
        let triangles = vec![
            [0, 2, 1], [0, 3, 2], [4, 5, 6], [4, 6, 7], [0, 1, 5], [0, 5, 4],
            [1, 2, 6], [1, 6, 5], [2, 3, 7], [2, 7, 6], [3, 0, 4], [3, 4, 7],
        ];
        let s = SceneDescription::new(
            world(2.0),
            vec![SceneObject::new(
                "m",
                Shape::Mesh(TriangleMesh { vertices, triangles }),
                Isometry3::translation(0.02, 0.03, 0.01),
                true,
            )],
        )
        .unwrap();
        let grid = voxelize(&s, 0.1).unwrap();
        // Offset cube spans 11 voxels per axis when rasterized conservatively.
        let occupied = (0..grid.len()).filter(|&i| !grid.is_free(i)).count();
        assert_eq!(occupied, 11 * 11 * 11);
        assert_eq!(grid.surface_set(0).len(), 11 * 11 * 11 - 9 * 9 * 9);
    }

    #[test]
    fn sphere_and_disc_checks() {
        let grid = voxelize(&cube_scene(1.0), 0.05).unwrap();
        assert!(!grid.sphere_is_free(&Point3::new(0.0, 0.0, 0.0), 0.1));
        assert!(!grid.sphere_is_free(&Point3::new(0.6, 0.0, 0.0), 0.12));
        assert!(grid.sphere_is_free(&Point3::new(0.65, 0.0, 0.0), 0.12));
        assert!(!grid.sphere_is_free(&Point3::new(4.95, 0.0, 0.0), 0.12));
        assert!(grid.disc_is_free(1.0, 0.0, 0.3, 10.0));
        assert!(!grid.disc_is_free(0.7, 0.0, 0.3, 10.0));
    }
}
