//! Reference layouts and base paths.
//!
//! The assets are stand-ins with stated dimensions: a cabinet (box
//! 1.0 x 0.6 x 1.6 m), a tank (cylinder r 0.5 m, h 1.6 m) and a pipe rack
//! (three pipes r 0.1 m, h 1.5 m, 0.35 m apart). Objects stand on the floor.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{Isometry3, Point3, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

use crate::math::{Aabb, BasePose};
use crate::planner::{BasePath, PlanError};
use crate::scene::{SceneDescription, SceneError, SceneObject, Shape};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("asset list is empty")]
    NoAssets,
    #[error("layout parameter `{0}` out of range")]
    Parameter(&'static str),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Path(#[from] PlanError),
    #[error("segment {segment} from ({x0:.3}, {y0:.3}) to ({x1:.3}, {y1:.3}) passes within {clearance} m of `{object}`")]
    Clearance {
        segment: usize,
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        object: String,
        clearance: f64,
    },
    #[error("path is {length:.3} m long, {needed:.3} m needed for the requested samples")]
    PathTooShort { length: f64, needed: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asset {
    Cabinet,
    Tank,
    Pipes,
    Cube { size: f64 },
}

impl Asset {
    pub const STANDARD: [Asset; 3] = [Asset::Cabinet, Asset::Tank, Asset::Pipes];

    pub fn shape(&self) -> Shape {
        match *self {
            Asset::Cabinet => Shape::Box {
                size: Vector3::new(1.0, 0.6, 1.6),
            },
            Asset::Tank => Shape::Cylinder {
                radius: 0.5,
                height: 1.6,
            },
            Asset::Pipes => Shape::PipeAssembly {
                count: 3,
                radius: 0.1,
                height: 1.5,
                pitch: 0.35,
            },
            Asset::Cube { size } => Shape::Box {
                size: Vector3::repeat(size),
            },
        }
    }

    pub fn height(&self) -> f64 {
        match *self {
            Asset::Cabinet | Asset::Tank => 1.6,
            Asset::Pipes => 1.5,
            Asset::Cube { size } => size,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Asset::Cabinet => "cabinet",
            Asset::Tank => "tank",
            Asset::Pipes => "pipes",
            Asset::Cube { .. } => "cube",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayoutKind {
    /// Three objects on the corners of an equilateral triangle.
    Triangle { side: f64 },
    /// Objects in a row along x.
    Linear { count: usize, pitch: f64 },
}

impl LayoutKind {
    pub fn triangle() -> Self {
        LayoutKind::Triangle { side: 4.0 }
    }

    pub fn linear() -> Self {
        LayoutKind::Linear { count: 3, pitch: 3.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayoutKind::Triangle { .. } => "triangle",
            LayoutKind::Linear { .. } => "linear",
        }
    }

    /// Object centres in the floor plane.
    pub fn sites(&self) -> Vec<(f64, f64)> {
        match *self {
            LayoutKind::Triangle { side } => alloc::vec![(0.0, 0.0), (side, 0.0), (side / 2.0, side * 3f64.sqrt() / 2.0)],
            LayoutKind::Linear { count, pitch } => (0..count).map(|k| (k as f64 * pitch, 0.0)).collect(),
        }
    }
}

/// Free margin around the objects in the floor plane, m.
pub const WORLD_MARGIN: f64 = 3.5;
/// Height of the world box, m.
pub const WORLD_HEIGHT: f64 = 3.0;

/// Places the assets (cycled) on the layout sites, all as objects of
/// interest. The world box extends [`WORLD_MARGIN`] beyond the objects and
/// is snapped outward to multiples of `snap`.
pub fn generate_layout(kind: LayoutKind, assets: &[Asset], snap: f64) -> Result<SceneDescription, ScenarioError> {
    if assets.is_empty() {
        return Err(ScenarioError::NoAssets);
    }
    match kind {
        LayoutKind::Triangle { side } if !(side > 0.0) => return Err(ScenarioError::Parameter("side")),
        LayoutKind::Linear { count: 0, .. } => return Err(ScenarioError::Parameter("count")),
        LayoutKind::Linear { pitch, .. } if !(pitch > 0.0) => return Err(ScenarioError::Parameter("pitch")),
        _ => {}
    }
    let objects: Vec<SceneObject> = kind
        .sites()
        .into_iter()
        .enumerate()
        .map(|(k, (x, y))| {
            let a = assets[k % assets.len()];
            SceneObject::new(
                format!("{}{}", a.name(), k),
                a.shape(),
                Isometry3::translation(x, y, a.height() / 2.0),
                true,
            )
        })
        .collect();
    let mut b = Aabb::empty();
    for o in &objects {
        b = b.union(&o.world_aabb());
    }
    let snap = if snap > 0.0 { snap } else { 1.0 };
    let down = |v: f64| (v / snap).floor() * snap;
    let up = |v: f64| (v / snap).ceil() * snap;
    let bounds = Aabb::new(
        Point3::new(down(b.min.x - WORLD_MARGIN), down(b.min.y - WORLD_MARGIN), 0.0),
        Point3::new(up(b.max.x + WORLD_MARGIN), up(b.max.y + WORLD_MARGIN), up(WORLD_HEIGHT.max(b.max.z + 1.0))),
    );
    Ok(SceneDescription::new(bounds, objects)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Straight,
    Loop,
    Zigzag,
}

impl PathKind {
    pub const ALL: [PathKind; 3] = [PathKind::Zigzag, PathKind::Straight, PathKind::Loop];

    pub fn name(&self) -> &'static str {
        match self {
            PathKind::Straight => "straight",
            PathKind::Loop => "loop",
            PathKind::Zigzag => "zigzag",
        }
    }

    /// Path length used by the reference experiments, m: 42 s, 18 s and
    /// 48 s surveys at 2 s and 1 m per step.
    pub fn reference_length(&self) -> f64 {
        match self {
            PathKind::Straight => 8.0,
            PathKind::Loop => 23.0,
            PathKind::Zigzag => 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    /// Distance kept between the path and the objects' bounding box, m.
    pub standoff: f64,
    /// Minimum free radius around every point of the path, m.
    pub clearance: f64,
    /// Paths longer than this are cut (a straight path is re-centred).
    pub max_length: Option<f64>,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams {
            standoff: 1.75,
            clearance: 0.3,
            max_length: None,
        }
    }
}

impl PathParams {
    /// Defaults with the length capped at the reference length of `kind`.
    pub fn reference(kind: PathKind) -> Self {
        PathParams {
            max_length: Some(kind.reference_length()),
            ..PathParams::default()
        }
    }
}

/// Objects with centres closer than this in y share a row.
const ROW_TOLERANCE: f64 = 1.0;

fn footprint(scene: &SceneDescription) -> Aabb {
    scene.targets().fold(Aabb::empty(), |b, (_, o)| b.union(&o.world_aabb()))
}

/// Waypoints of the path shape before resampling; the flag marks a closed
/// circuit.
pub fn waypoints(kind: PathKind, scene: &SceneDescription, params: &PathParams) -> (Vec<(f64, f64)>, bool) {
    let b = footprint(scene);
    let a = params.standoff;
    match kind {
        PathKind::Straight => (alloc::vec![(b.min.x - a, b.min.y - a), (b.max.x + a, b.min.y - a)], false),
        PathKind::Loop => (
            alloc::vec![
                (b.min.x - a, b.min.y - a),
                (b.max.x + a, b.min.y - a),
                (b.max.x + a, b.max.y + a),
                (b.min.x - a, b.max.y + a),
            ],
            true,
        ),
        PathKind::Zigzag => (zigzag(scene, &b, a), false),
    }
}

/// Rows of objects (by centre y), each with its bounding box.
fn rows(scene: &SceneDescription) -> Vec<Aabb> {
    let mut items: Vec<(f64, Aabb)> = scene.targets().map(|(_, o)| (o.center().y, o.world_aabb())).collect();
    items.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut out: Vec<(f64, Aabb)> = Vec::new();
    for (y, bx) in items {
        match out.last_mut() {
            Some((y0, acc)) if y - *y0 < ROW_TOLERANCE => *acc = acc.union(&bx),
            _ => out.push((y, bx)),
        }
    }
    out.into_iter().map(|(_, b)| b).collect()
}

/// A single row is woven: the path passes the objects on alternating sides
/// and crosses the row in every gap. Several rows are swept by lanes below,
/// between and above them, alternating direction.
fn zigzag(scene: &SceneDescription, b: &Aabb, a: f64) -> Vec<(f64, f64)> {
    let rs = rows(scene);
    if rs.len() <= 1 {
        let mut xs: Vec<(f64, f64, f64)> = scene
            .targets()
            .map(|(_, o)| {
                let w = o.world_aabb();
                (o.center().x, w.min.y, w.max.y)
            })
            .collect();
        xs.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut pts = Vec::new();
        let first = xs[0].0;
        let last = xs[xs.len() - 1].0;
        let lead = if xs.len() > 1 { (xs[1].0 - first) / 2.0 } else { a };
        pts.push((first - lead, b.min.y - a));
        for (k, &(x, lo, hi)) in xs.iter().enumerate() {
            let y = if k % 2 == 0 { lo - a } else { hi + a };
            pts.push((x, y));
        }
        let y_end = pts[pts.len() - 1].1;
        pts.push((last + lead, y_end));
        pts
    } else {
        let mut lanes = Vec::with_capacity(rs.len() + 1);
        lanes.push(rs[0].min.y - a);
        for w in rs.windows(2) {
            lanes.push((w[0].max.y + w[1].min.y) / 2.0);
        }
        lanes.push(rs[rs.len() - 1].max.y + a);
        let (x0, x1) = (b.min.x - a, b.max.x + a);
        let mut pts = Vec::new();
        for (k, &y) in lanes.iter().enumerate() {
            if k % 2 == 0 {
                pts.push((x0, y));
                pts.push((x1, y));
            } else {
                pts.push((x1, y));
                pts.push((x0, y));
            }
        }
        pts
    }
}

fn segment_distance_to_box(p: (f64, f64), q: (f64, f64), b: &Aabb) -> f64 {
    let len = ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt();
    let n = (len / 0.005).ceil().max(1.0) as usize;
    (0..=n)
        .map(|k| {
            let s = k as f64 / n as f64;
            b.footprint_distance(p.0 + (q.0 - p.0) * s, p.1 + (q.1 - p.1) * s)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Every segment keeps `clearance` from every object's footprint and the
/// world boundary.
pub fn check_clearance(pts: &[(f64, f64)], closed: bool, scene: &SceneDescription, clearance: f64) -> Result<(), ScenarioError> {
    let n = pts.len();
    let segs = if closed { n } else { n - 1 };
    let wb = &scene.world_bounds;
    for s in 0..segs {
        let (p, q) = (pts[s], pts[(s + 1) % n]);
        let err = |object: String| ScenarioError::Clearance {
            segment: s,
            x0: p.0,
            y0: p.1,
            x1: q.0,
            y1: q.1,
            object,
            clearance,
        };
        for o in &scene.objects {
            if segment_distance_to_box(p, q, &o.world_aabb()) < clearance {
                return Err(err(o.id.clone()));
            }
        }
        for &(x, y) in &[p, q] {
            if x - clearance < wb.min.x || x + clearance > wb.max.x || y - clearance < wb.min.y || y + clearance > wb.max.y {
                return Err(err(String::from("world boundary")));
            }
        }
    }
    Ok(())
}

/// Point and heading at arc length `s` along the polyline.
fn point_at(pts: &[(f64, f64)], closed: bool, s: f64) -> BasePose {
    let n = pts.len();
    let segs = if closed { n } else { n - 1 };
    let mut rem = s;
    for k in 0..segs {
        let (p, q) = (pts[k], pts[(k + 1) % n]);
        let len = ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt();
        let yaw = (q.1 - p.1).atan2(q.0 - p.0);
        if rem <= len + 1e-12 || k == segs - 1 {
            let t = if len > 0.0 { (rem / len).min(1.0) } else { 0.0 };
            return BasePose::new(p.0 + (q.0 - p.0) * t, p.1 + (q.1 - p.1) * t, yaw);
        }
        rem -= len;
    }
    BasePose::new(pts[0].0, pts[0].1, 0.0)
}

fn polyline_length(pts: &[(f64, f64)], closed: bool) -> f64 {
    let n = pts.len();
    let segs = if closed { n } else { n - 1 };
    (0..segs)
        .map(|k| {
            let (p, q) = (pts[k], pts[(k + 1) % n]);
            ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt()
        })
        .sum()
}

/// Samples the path shape every `v_base * t_step` metres.
///
/// Without `n` the whole shape is sampled (a loop stops within one spacing of
/// its start). With `n`, a straight path is re-centred to length
/// `(n - 1) * spacing`, a loop wraps around as often as needed, and a
/// zig-zag is truncated (too short is an error). Without `n`, a
/// `max_length` shorter than the shape cuts it to that length.
pub fn generate_base_path(
    kind: PathKind,
    scene: &SceneDescription,
    v_base: f64,
    t_step: f64,
    n: Option<usize>,
    params: &PathParams,
) -> Result<BasePath, ScenarioError> {
    let (pts, closed) = path_waypoints(kind, scene, v_base * t_step, n, params)?;
    sample_polyline(&pts, closed, v_base, t_step, n, params.max_length)
}

/// The polyline [`generate_base_path`] samples: the shape's waypoints with a
/// straight path re-centred to its sampled length, clearance checked.
pub fn path_waypoints(
    kind: PathKind,
    scene: &SceneDescription,
    spacing: f64,
    n: Option<usize>,
    params: &PathParams,
) -> Result<(Vec<(f64, f64)>, bool), ScenarioError> {
    if !(spacing > 0.0) {
        return Err(ScenarioError::Parameter("v_base * t_step"));
    }
    if matches!(n, Some(k) if k < 2) {
        return Err(PlanError::PathTooShort.into());
    }
    let (mut pts, closed) = waypoints(kind, scene, params);
    let full = polyline_length(&pts, closed);
    let straight_len = match (n, params.max_length) {
        (Some(k), _) => Some((k - 1) as f64 * spacing),
        (None, Some(m)) if m < full => Some(m),
        _ => None,
    };
    if let (PathKind::Straight, Some(len)) = (kind, straight_len) {
        let cx = (pts[0].0 + pts[1].0) / 2.0;
        pts = alloc::vec![(cx - len / 2.0, pts[0].1), (cx + len / 2.0, pts[1].1)];
    }
    check_clearance(&pts, closed, scene, params.clearance)?;
    Ok((pts, closed))
}

/// Samples a polyline at `v_base * t_step` spacing. `n` and `max_length`
/// behave as in [`generate_base_path`]; clearance is not checked.
pub fn sample_polyline(
    pts: &[(f64, f64)],
    closed: bool,
    v_base: f64,
    t_step: f64,
    n: Option<usize>,
    max_length: Option<f64>,
) -> Result<BasePath, ScenarioError> {
    if !(v_base > 0.0 && t_step > 0.0) {
        return Err(ScenarioError::Parameter("v_base * t_step"));
    }
    if pts.len() < 2 {
        return Err(PlanError::PathTooShort.into());
    }
    let spacing = v_base * t_step;
    let mut length = polyline_length(pts, closed);
    // A cut loop no longer wraps around.
    let mut wraps = closed;
    if let (None, Some(m)) = (n, max_length) {
        if m < length - 1e-9 {
            wraps = false;
            length = m;
        }
    }
    let count = match n {
        Some(k) => {
            let needed = (k - 1) as f64 * spacing;
            if !wraps && needed > length + 1e-9 {
                return Err(ScenarioError::PathTooShort { length, needed });
            }
            k
        }
        None if wraps => ((length / spacing) - 1e-9).floor() as usize + 1,
        None => (length / spacing + 1e-9).floor() as usize + 1,
    };
    let poses = (0..count)
        .map(|i| {
            let s = i as f64 * spacing;
            let s = if wraps { s % length } else { s };
            point_at(pts, closed, s)
        })
        .collect();
    Ok(BasePath::new(poses, v_base, t_step)?)
}
