//! Exact voxel traversal (Amanatides & Woo) over a [`VoxelGrid`].

use nalgebra::{Point3, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{VoxelGrid, VoxelIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub cell: usize,
    pub voxel: VoxelIndex,
    pub object: usize,
    /// Distance along the ray at which the voxel is entered.
    pub distance: f64,
}

/// Entry and exit parameters of a ray against the grid bounds.
fn clip_to_grid(grid: &VoxelGrid, o: &Point3<f64>, d: &Vector3<f64>) -> Option<(f64, f64)> {
    let b = grid.bounds();
    let mut t0: f64 = 0.0;
    let mut t1 = f64::INFINITY;
    for i in 0..3 {
        if d[i] == 0.0 {
            if o[i] < b.min[i] || o[i] > b.max[i] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[i];
        let (mut a, mut c) = ((b.min[i] - o[i]) * inv, (b.max[i] - o[i]) * inv);
        if a > c {
            core::mem::swap(&mut a, &mut c);
        }
        t0 = t0.max(a);
        t1 = t1.min(c);
    }
    (t0 <= t1).then_some((t0, t1))
}

/// First occupied voxel along `origin + t * direction`, `t` in `[0, max_range]`.
///
/// A ray starting inside an occupied voxel reports that voxel at distance 0.
/// Origins outside the grid are clipped to the grid bounds first.
pub fn cast_ray(grid: &VoxelGrid, origin: &Point3<f64>, direction: &Vector3<f64>, max_range: f64) -> Option<RayHit> {
    let (t_enter, _) = clip_to_grid(grid, origin, direction)?;
    if t_enter > max_range {
        return None;
    }
    let dims = grid.dims();
    let vs = grid.voxel_size();
    let go = grid.origin();
    let p = origin + direction * t_enter;

    let mut v = [0i64; 3];
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut inv = [0.0f64; 3];
    for i in 0..3 {
        let f = ((p[i] - go[i]) / vs).floor() as i64;
        v[i] = f.clamp(0, dims[i] as i64 - 1);
        if direction[i] > 0.0 {
            step[i] = 1;
            inv[i] = 1.0 / direction[i];
            t_max[i] = (go[i] + (v[i] + 1) as f64 * vs - origin[i]) * inv[i];
        } else if direction[i] < 0.0 {
            step[i] = -1;
            inv[i] = 1.0 / direction[i];
            t_max[i] = (go[i] + v[i] as f64 * vs - origin[i]) * inv[i];
        }
    }

    let mut t = t_enter;
    loop {
        let vox = [v[0] as usize, v[1] as usize, v[2] as usize];
        let cell = grid.linear(vox);
        if let Some(object) = grid.object_at(cell) {
            return Some(RayHit {
                cell,
                voxel: vox,
                object,
                distance: t,
            });
        }
        let axis = if t_max[0] <= t_max[1] {
            if t_max[0] <= t_max[2] { 0 } else { 2 }
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        t = t_max[axis];
        if t > max_range || !t.is_finite() {
            return None;
        }
        v[axis] += step[axis];
        if v[axis] < 0 || v[axis] >= dims[axis] as i64 {
            return None;
        }
        let boundary = if step[axis] > 0 { v[axis] + 1 } else { v[axis] };
        t_max[axis] = (go[axis] + boundary as f64 * vs - origin[axis]) * inv[axis];
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ObjectInfo;
    use crate::math::Aabb;
    use alloc::string::ToString;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};

    fn info(n: usize) -> Vec<ObjectInfo> {
        (0..n)
            .map(|k| ObjectInfo {
                id: k.to_string(),
                of_interest: true,
                aabb: Aabb::empty(),
                center: Point3::origin(),
            })
            .collect()
    }

    /// 60 voxels of 0.05 m along x, centred on the origin in y and z.
    fn line_grid(occupied: &[(usize, u16)]) -> VoxelGrid {
        let dims = [60, 3, 3];
        let mut cells = vec![0u16; 60 * 9];
        for &(x, l) in occupied {
            cells[4 * 60 + x] = l;
        }
        VoxelGrid::from_labels(Point3::new(-0.975, -0.075, -0.075), 0.05, dims, cells, info(2)).unwrap()
    }

    #[test]
    fn axis_aligned_hit() {
        // voxel 39 spans [0.975, 1.025] and is centred at x = 1
        let g = line_grid(&[(39, 1)]);
        let hit = cast_ray(&g, &Point3::origin(), &Vector3::x(), 5.0).unwrap();
        assert_eq!(hit.voxel, [39, 1, 1]);
        assert!((g.voxel_center(hit.voxel).x - 1.0).abs() < 1e-12);
        assert!((hit.distance - 0.975).abs() < 1e-12);
    }

    #[test]
    fn occluder_reported_first() {
        let g = line_grid(&[(39, 1), (29, 2)]);
        let hit = cast_ray(&g, &Point3::origin(), &Vector3::x(), 5.0).unwrap();
        assert_eq!(hit.voxel[0], 29);
        assert_eq!(hit.object, 1);
    }

    #[test]
    fn range_cutoff_and_start_inside() {
        let g = line_grid(&[(39, 1)]);
        assert!(cast_ray(&g, &Point3::origin(), &Vector3::x(), 0.5).is_none());
        assert!(cast_ray(&g, &Point3::origin(), &-Vector3::x(), 5.0).is_none());
        let inside = cast_ray(&g, &Point3::new(1.0, 0.0, 0.0), &Vector3::x(), 5.0).unwrap();
        assert_eq!(inside.distance, 0.0);
        assert_eq!(inside.voxel[0], 39);
    }

    #[test]
    fn agrees_with_marching_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let n = 20;
            let cells: Vec<u16> = (0..n * n * n).map(|_| if rng.random::<f64>() < 0.02 { 1 } else { 0 }).collect();
            let g = VoxelGrid::from_labels(Point3::new(0.0, 0.0, 0.0), 0.05, [n, n, n], cells, info(1)).unwrap();
            for _ in 0..20 {
                let o = Point3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                let d = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize();
                let fast = cast_ray(&g, &o, &d, 2.0).map(|h| h.cell);
                let slow = oracle::march(&g, &o, &d, 2.0).map(|(c, _)| c);
                assert_eq!(fast, slow);
            }
        }
    }
}
