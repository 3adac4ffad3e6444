//! Surface coverage of a reconstruction, survey simulation and report
//! aggregation.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::Point3;
#[allow(unused_imports)]
use num_traits::Float;

use crate::arm::ArmModel;
use crate::camera::{visible_with_rays, CameraModel, ObservedSet};
use crate::grid::VoxelGrid;
use crate::planner::ViewPath;
use crate::surface::{GroundTruthSurface, LabeledPoint};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("registration distance must be positive")]
    RegistrationDistance,
    #[error("object {0} has no ground-truth points")]
    EmptyGroundTruth(usize),
    #[error("view path is not executable: transition into step {step} exceeds the joint bound")]
    Inexecutable { step: usize },
}

/// Points bucketed into cubic cells of the registration distance, so a
/// neighbour query only visits the 27 surrounding cells.
struct CellIndex<'a> {
    cell: f64,
    keys: Vec<([i64; 3], u32)>,
    points: &'a [LabeledPoint],
}

impl<'a> CellIndex<'a> {
    fn new(points: &'a [LabeledPoint], cell: f64) -> Self {
        let mut keys: Vec<([i64; 3], u32)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (Self::key(&p.position, cell), i as u32))
            .collect();
        keys.sort_unstable();
        CellIndex { cell, keys, points }
    }

    fn key(p: &Point3<f64>, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    /// True if a point of `object` lies within `r` (<= cell) of `p`.
    fn any_within(&self, p: &Point3<f64>, object: usize, r: f64) -> bool {
        let k = Self::key(p, self.cell);
        let r2 = r * r;
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let kk = [k[0] + dx, k[1] + dy, k[2] + dz];
                    let start = self.keys.partition_point(|e| e.0 < kk);
                    for e in self.keys[start..].iter().take_while(|e| e.0 == kk) {
                        let q = &self.points[e.1 as usize];
                        if q.object == object && (q.position - p).norm_squared() <= r2 {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

/// Per object, `Some(flags)` marking which ground-truth points have an
/// observed point of the same object within `registration`.
pub fn captured_flags(
    observed: &[LabeledPoint],
    truth: &GroundTruthSurface,
    registration: f64,
) -> Result<Vec<bool>, EvalError> {
    if !(registration > 0.0 && registration.is_finite()) {
        return Err(EvalError::RegistrationDistance);
    }
    let index = CellIndex::new(observed, registration);
    Ok(truth
        .points
        .iter()
        .map(|p| index.any_within(&p.position, p.object, registration))
        .collect())
}

/// Fraction of each object's ground-truth points captured by the observed
/// points (entries for objects `0..objects`).
pub fn coverage(
    observed: &[LabeledPoint],
    truth: &GroundTruthSurface,
    registration: f64,
    objects: usize,
) -> Result<Vec<Result<f64, EvalError>>, EvalError> {
    let flags = captured_flags(observed, truth, registration)?;
    let mut hit = alloc::vec![0usize; objects];
    let mut total = alloc::vec![0usize; objects];
    for (p, f) in truth.points.iter().zip(flags) {
        if p.object < objects {
            total[p.object] += 1;
            hit[p.object] += f as usize;
        }
    }
    Ok((0..objects)
        .map(|k| {
            if total[k] == 0 {
                Err(EvalError::EmptyGroundTruth(k))
            } else {
                Ok(hit[k] as f64 / total[k] as f64)
            }
        })
        .collect())
}

/// Centres of the observed surface voxels, labelled by object.
pub fn observed_points(grid: &VoxelGrid, observed: &ObservedSet) -> Vec<LabeledPoint> {
    observed
        .ids()
        .into_iter()
        .map(|sid| {
            let (object, cell) = grid.surface_cell(sid);
            LabeledPoint {
                object,
                position: grid.voxel_center(grid.coords(cell)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurveyMode {
    /// Only the committed views.
    Viewpoints,
    /// The committed views plus the frames captured while the arm moves.
    AllImages,
}

impl SurveyMode {
    pub fn name(&self) -> &'static str {
        match self {
            SurveyMode::Viewpoints => "viewpoint-only",
            SurveyMode::AllImages => "all-images",
        }
    }
}

/// Number of intermediate frames for a transition lasting `dt`.
pub fn intermediate_frames(dt: f64, frame_interval: f64) -> usize {
    if dt <= 0.0 {
        0
    } else {
        (dt / frame_interval - 1e-9).ceil() as usize
    }
}

/// Replays a path and collects what the camera sees. In all-images mode each
/// transition adds `ceil(dt / frame_interval)` frames (or `frames_override`)
/// at evenly spaced joint-space interpolants with the base interpolated
/// alongside.
pub fn simulate_survey(
    path: &ViewPath,
    arm: &ArmModel,
    grid: &VoxelGrid,
    cam: &CameraModel,
    mode: SurveyMode,
    frame_interval: f64,
    frames_override: Option<usize>,
) -> Result<(ObservedSet, Vec<LabeledPoint>), EvalError> {
    if let Some(&step) = path.violations(arm).first() {
        return Err(EvalError::Inexecutable { step });
    }
    let rays = cam.local_rays();
    let mut obs = ObservedSet::for_grid(grid);
    for (k, s) in path.steps.iter().enumerate() {
        if mode == SurveyMode::AllImages && k > 0 {
            let prev = &path.steps[k - 1];
            let frames = frames_override.unwrap_or_else(|| intermediate_frames(s.time - prev.time, frame_interval));
            for f in 1..=frames {
                let t = f as f64 / (frames + 1) as f64;
                let q = prev.joints.lerp(&s.joints, t);
                let base = prev.base.interpolate(&s.base, t);
                let pose = arm.fk_unchecked(&q.q, &base);
                obs.insert(&visible_with_rays(grid, &pose, cam, &rays), k as u32);
            }
        }
        obs.insert(&visible_with_rays(grid, &s.pose, cam, &rays), k as u32);
    }
    let pts = observed_points(grid, &obs);
    Ok((obs, pts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// (object id, coverage fraction) for every object of interest.
    pub per_object: Vec<(String, f64)>,
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub survey_time: f64,
    /// Mean coverage in percent per second of survey.
    pub coverage_rate: f64,
    pub mode: SurveyMode,
    /// Transitions (by destination step) exceeding the joint bound.
    pub violations: Vec<usize>,
}

impl CoverageReport {
    pub fn executable(&self) -> bool {
        self.violations.is_empty()
    }

    /// Aggregates per-object fractions. Objects without ground truth are
    /// skipped.
    pub fn from_fractions(
        grid: &VoxelGrid,
        fractions: &[Result<f64, EvalError>],
        survey_time: f64,
        mode: SurveyMode,
        violations: Vec<usize>,
    ) -> Self {
        let per_object: Vec<(String, f64)> = grid
            .targets()
            .filter_map(|(k, o)| fractions.get(k).and_then(|f| f.as_ref().ok()).map(|&f| (o.id.clone(), f)))
            .collect();
        let n = per_object.len();
        let (mean, max, min) = if n == 0 {
            (0.0, 0.0, 0.0)
        } else {
            let sum: f64 = per_object.iter().map(|x| x.1).sum();
            let max = per_object.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
            let min = per_object.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            (sum / n as f64, max, min)
        };
        CoverageReport {
            per_object,
            mean,
            max,
            min,
            survey_time,
            coverage_rate: if survey_time > 0.0 { 100.0 * mean / survey_time } else { 0.0 },
            mode,
            violations,
        }
    }
}

/// Coverage of the points observed along an executable path.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_path(
    path: &ViewPath,
    arm: &ArmModel,
    grid: &VoxelGrid,
    cam: &CameraModel,
    truth: &GroundTruthSurface,
    registration: f64,
    mode: SurveyMode,
    frame_interval: f64,
    survey_time: f64,
) -> Result<CoverageReport, EvalError> {
    let (_, pts) = simulate_survey(path, arm, grid, cam, mode, frame_interval, None)?;
    let fr = coverage(&pts, truth, registration, grid.objects().len())?;
    Ok(CoverageReport::from_fractions(grid, &fr, survey_time, mode, Vec::new()))
}
