//! Overlap predicates used by voxelization: GJK for convex pieces against
//! axis-aligned boxes and a separating-axis triangle/box test for meshes.

use nalgebra::{Point3, Vector3};

use crate::math::Aabb;
use crate::scene::ConvexPiece;

const MAX_GJK_ITERATIONS: usize = 64;

fn same_direction(a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
    a.dot(b) > 0.0
}

fn box_support(b: &Aabb, d: &Vector3<f64>) -> Point3<f64> {
    Point3::new(
        if d.x >= 0.0 { b.max.x } else { b.min.x },
        if d.y >= 0.0 { b.max.y } else { b.min.y },
        if d.z >= 0.0 { b.max.z } else { b.min.z },
    )
}

/// Simplex with the newest vertex at index 0.
struct Simplex {
    pts: [Vector3<f64>; 4],
    len: usize,
}

impl Simplex {
    fn push_front(&mut self, p: Vector3<f64>) {
        for i in (1..4).rev() {
            self.pts[i] = self.pts[i - 1];
        }
        self.pts[0] = p;
        self.len = (self.len + 1).min(4);
    }

    fn set(&mut self, pts: &[Vector3<f64>]) {
        self.pts[..pts.len()].copy_from_slice(pts);
        self.len = pts.len();
    }
}

fn line(s: &mut Simplex, dir: &mut Vector3<f64>) -> bool {
    let (a, b) = (s.pts[0], s.pts[1]);
    let ab = b - a;
    let ao = -a;
    if same_direction(&ab, &ao) {
        *dir = ab.cross(&ao).cross(&ab);
    } else {
        s.set(&[a]);
        *dir = ao;
    }
    false
}

fn triangle(s: &mut Simplex, dir: &mut Vector3<f64>) -> bool {
    let (a, b, c) = (s.pts[0], s.pts[1], s.pts[2]);
    let ab = b - a;
    let ac = c - a;
    let ao = -a;
    let abc = ab.cross(&ac);
    if same_direction(&abc.cross(&ac), &ao) {
        if same_direction(&ac, &ao) {
            s.set(&[a, c]);
            *dir = ac.cross(&ao).cross(&ac);
            false
        } else {
            s.set(&[a, b]);
            line(s, dir)
        }
    } else if same_direction(&ab.cross(&abc), &ao) {
        s.set(&[a, b]);
        line(s, dir)
    } else if same_direction(&abc, &ao) {
        *dir = abc;
        false
    } else {
        s.set(&[a, c, b]);
        *dir = -abc;
        false
    }
}

fn tetrahedron(s: &mut Simplex, dir: &mut Vector3<f64>) -> bool {
    let (a, b, c, d) = (s.pts[0], s.pts[1], s.pts[2], s.pts[3]);
    let ab = b - a;
    let ac = c - a;
    let ad = d - a;
    let ao = -a;
    let abc = ab.cross(&ac);
    let acd = ac.cross(&ad);
    let adb = ad.cross(&ab);
    if same_direction(&abc, &ao) {
        s.set(&[a, b, c]);
        return triangle(s, dir);
    }
    if same_direction(&acd, &ao) {
        s.set(&[a, c, d]);
        return triangle(s, dir);
    }
    if same_direction(&adb, &ao) {
        s.set(&[a, d, b]);
        return triangle(s, dir);
    }
    true
}

/// Closed-set intersection test between a convex piece and a box. Touching
/// counts as intersecting; non-converging cases resolve to `true`.
pub fn convex_intersects_box(piece: &ConvexPiece, b: &Aabb) -> bool {
    let support = |d: &Vector3<f64>| piece.support(d).coords - box_support(b, &-d).coords;
    let mut dir = piece.pose.translation.vector - b.center().coords;
    if dir.norm_squared() < 1e-24 {
        return true;
    }
    let mut s = Simplex {
        pts: [Vector3::zeros(); 4],
        len: 0,
    };
    s.push_front(support(&dir));
    dir = -s.pts[0];
    for _ in 0..MAX_GJK_ITERATIONS {
        if dir.norm_squared() < 1e-30 {
            return true;
        }
        let a = support(&dir);
        if a.dot(&dir) < 0.0 {
            return false;
        }
        s.push_front(a);
        let done = match s.len {
            2 => line(&mut s, &mut dir),
            3 => triangle(&mut s, &mut dir),
            _ => tetrahedron(&mut s, &mut dir),
        };
        if done {
            return true;
        }
    }
    true
}

/// Closed triangle/box overlap by the separating axis theorem.
pub fn triangle_intersects_box(tri: &[Point3<f64>; 3], b: &Aabb) -> bool {
    let c = b.center();
    let h = b.extents() * 0.5;
    let v = [tri[0] - c, tri[1] - c, tri[2] - c];
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];

    let separated = |axis: Vector3<f64>| -> bool {
        if axis.norm_squared() < 1e-24 {
            return false;
        }
        let p = [axis.dot(&v[0]), axis.dot(&v[1]), axis.dot(&v[2])];
        let r = h.x * axis.x.abs() + h.y * axis.y.abs() + h.z * axis.z.abs();
        let lo = p[0].min(p[1]).min(p[2]);
        let hi = p[0].max(p[1]).max(p[2]);
        lo > r || hi < -r
    };

    for i in 0..3 {
        let mut unit = Vector3::zeros();
        unit[i] = 1.0;
        for edge in &e {
            if separated(unit.cross(edge)) {
                return false;
            }
        }
        if separated(unit) {
            return false;
        }
    }
    !separated(e[0].cross(&e[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Convex;
    use nalgebra::{Isometry3, Vector3};

    fn unit_box(at: [f64; 3]) -> Aabb {
        Aabb::new(Point3::from(at), Point3::new(at[0] + 1.0, at[1] + 1.0, at[2] + 1.0))
    }

    #[test]
    fn gjk_box_cases() {
        let piece = ConvexPiece {
            shape: Convex::Box {
                half: Vector3::new(0.5, 0.5, 0.5),
            },
            pose: Isometry3::identity(),
        };
        assert!(convex_intersects_box(&piece, &unit_box([0.0, 0.0, 0.0])));
        assert!(convex_intersects_box(&piece, &unit_box([-0.2, -0.9, 0.3])));
        assert!(!convex_intersects_box(&piece, &unit_box([0.5 + 1e-7, 0.0, 0.0])));
        assert!(!convex_intersects_box(&piece, &unit_box([2.0, 2.0, 2.0])));
        // rotated 45 degrees about z: reaches x = 0.707
        let rot = ConvexPiece {
            pose: Isometry3::rotation(Vector3::new(0.0, 0.0, core::f64::consts::FRAC_PI_4)),
            ..piece
        };
        assert!(convex_intersects_box(&rot, &unit_box([0.65, -0.5, -0.5])));
        assert!(!convex_intersects_box(&rot, &unit_box([0.72, -0.5, -0.5])));
    }

    #[test]
    fn gjk_cylinder_cases() {
        let cyl = ConvexPiece {
            shape: Convex::Cylinder {
                radius: 1.0,
                half_height: 1.0,
            },
            pose: Isometry3::identity(),
        };
        // box near the diagonal: corner at (0.75,0.75) is outside the circle (r=1.06)
        let b = Aabb::new(Point3::new(0.75, 0.75, 0.0), Point3::new(1.5, 1.5, 0.5));
        assert!(!convex_intersects_box(&cyl, &b));
        let b = Aabb::new(Point3::new(0.65, 0.65, 0.0), Point3::new(1.5, 1.5, 0.5));
        assert!(convex_intersects_box(&cyl, &b));
        // above the cap
        let b = Aabb::new(Point3::new(-0.1, -0.1, 1.01), Point3::new(0.1, 0.1, 1.2));
        assert!(!convex_intersects_box(&cyl, &b));
    }

    #[test]
    fn gjk_agrees_with_point_sampling() {
        // Dense interior sampling can only prove intersection; when it does GJK must agree.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let piece = ConvexPiece {
                shape: Convex::Cylinder {
                    radius: rng.random_range(0.2..0.8),
                    half_height: rng.random_range(0.2..0.8),
                },
                pose: Isometry3::new(
                    Vector3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), 0.0),
                    Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.3),
                ),
            };
            let lo = Point3::new(rng.random_range(-1.0..0.8), rng.random_range(-1.0..0.8), rng.random_range(-1.0..0.8));
            let b = Aabb::new(lo, lo + Vector3::repeat(0.2));
            let mut hit = false;
            for i in 0..6 {
                for j in 0..6 {
                    for k in 0..6 {
                        let p = lo + Vector3::new(i as f64, j as f64, k as f64) * 0.04;
                        hit |= piece.contains(&p);
                    }
                }
            }
            if hit {
                assert!(convex_intersects_box(&piece, &b));
            }
        }
    }

    #[test]
    fn triangle_box() {
        let b = unit_box([0.0, 0.0, 0.0]);
        let t = [Point3::new(-1.0, 0.5, 0.5), Point3::new(2.0, 0.5, 0.5), Point3::new(0.5, 3.0, 0.5)];
        assert!(triangle_intersects_box(&t, &b));
        let t = [Point3::new(2.0, 2.0, 2.0), Point3::new(3.0, 2.0, 2.0), Point3::new(2.0, 3.0, 2.0)];
        assert!(!triangle_intersects_box(&t, &b));
        // diagonal triangle cutting past a corner without touching
        let t = [Point3::new(1.6, 0.0, 0.0), Point3::new(0.0, 1.6, 0.0), Point3::new(0.0, 0.0, 1.6)];
        assert!(triangle_intersects_box(&t, &b));
        let t = [Point3::new(3.1, 0.0, 0.0), Point3::new(0.0, 3.1, 0.0), Point3::new(0.0, 0.0, 3.1)];
        assert!(!triangle_intersects_box(&t, &b));
    }
}
