//! Scenarios, planner runs and the experiment drivers behind `plan`,
//! `compare` and `sweep`.

use rayon::prelude::*;
use viewpath_core::arm::ArmModel;
use viewpath_core::camera::{CameraModel, ObservedSet};
use viewpath_core::config::PlannerConfig;
use viewpath_core::evaluation::{coverage, simulate_survey, CoverageReport, SurveyMode};
use viewpath_core::grid::{voxelize, VoxelGrid};
use viewpath_core::planner::{clamp_execute, plan_greedy, plan_see_nearest, plan_with_stops, BasePath, PlanContext, PlanOutcome, ViewPath};
use viewpath_core::scenario::{generate_base_path, generate_layout, sample_polyline, Asset, LayoutKind, PathKind, PathParams};
use viewpath_core::scene::SceneDescription;
use viewpath_core::surface::{sample_ground_truth, GroundTruthSurface, LabeledPoint};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PathSource {
    /// A generated shape; `max_length` caps it (see [`PathParams`]).
    Shape { kind: PathKind, max_length: Option<f64> },
    Polyline { name: String, pts: Vec<(f64, f64)>, closed: bool },
}

impl PathSource {
    pub fn reference(kind: PathKind) -> Self {
        PathSource::Shape {
            kind,
            max_length: Some(kind.reference_length()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            PathSource::Shape { kind, .. } => kind.name(),
            PathSource::Polyline { name, .. } => name,
        }
    }

    pub fn sample(&self, scene: &SceneDescription, cfg: &PlannerConfig) -> Result<BasePath> {
        match self {
            PathSource::Shape { kind, max_length } => {
                let params = PathParams {
                    max_length: *max_length,
                    ..PathParams::default()
                };
                generate_base_path(*kind, scene, cfg.v_base, cfg.t_step, cfg.n, &params)
            }
            PathSource::Polyline { pts, closed, .. } => sample_polyline(pts, *closed, cfg.v_base, cfg.t_step, cfg.n, None),
        }
        .map_err(Error::validation)
    }
}

/// A voxelized scene with its ground truth and a sampled base path.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub layout: String,
    pub source: PathSource,
    pub scene: SceneDescription,
    pub grid: VoxelGrid,
    pub truth: GroundTruthSurface,
    pub path: BasePath,
}

impl Scenario {
    pub fn new(layout: impl Into<String>, scene: SceneDescription, source: PathSource, cfg: &PlannerConfig) -> Result<Self> {
        scene.require_targets().map_err(Error::validation)?;
        let grid = voxelize(&scene, cfg.voxel_size).map_err(Error::validation)?;
        let truth = sample_ground_truth(&scene, cfg.density(), cfg.seed);
        let path = source.sample(&scene, cfg)?;
        Ok(Scenario {
            layout: layout.into(),
            source,
            scene,
            grid,
            truth,
            path,
        })
    }

    /// Standard assets on a generated layout with a reference-length path.
    pub fn reference(layout: LayoutKind, kind: PathKind, cfg: &PlannerConfig) -> Result<Self> {
        let scene = generate_layout(layout, &Asset::STANDARD, cfg.voxel_size).map_err(Error::validation)?;
        Self::new(layout.name(), scene, PathSource::reference(kind), cfg)
    }

    pub fn name(&self) -> String {
        format!("{}/{}", self.layout, self.source.name())
    }

    /// The same scenario with the base path resampled for `cfg`.
    pub fn resampled(&self, cfg: &PlannerConfig) -> Result<Self> {
        Ok(Scenario {
            path: self.source.sample(&self.scene, cfg)?,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Greedy,
    SeeNearest,
    /// Greedy without the joint-distance filter, executed with holds in
    /// place of infeasible transitions.
    Unfiltered,
    /// Greedy with the base stopping for `dwell` seconds at every sample.
    Stops(f64),
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Greedy => "greedy",
            Variant::SeeNearest => "see-nearest",
            Variant::Unfiltered => "greedy-unfiltered",
            Variant::Stops(_) => "greedy-stops",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Run {
    pub variant: Variant,
    pub outcome: PlanOutcome,
    /// The path the arm executes.
    pub executed: ViewPath,
    /// Infeasible transitions of the planned path.
    pub violations: Vec<usize>,
    pub survey_time: f64,
}

pub fn plan(sc: &Scenario, arm: &ArmModel, cam: &CameraModel, cfg: &PlannerConfig, variant: Variant) -> Result<Run> {
    let unfiltered;
    let cfg = if variant == Variant::Unfiltered {
        unfiltered = PlannerConfig {
            joint_filter: false,
            ..cfg.clone()
        };
        &unfiltered
    } else {
        cfg
    };
    let ctx = PlanContext::new(&sc.grid, arm, cam, cfg);
    let outcome = match variant {
        Variant::Greedy | Variant::Unfiltered => plan_greedy(&ctx, &sc.path),
        Variant::SeeNearest => plan_see_nearest(&ctx, &sc.path),
        Variant::Stops(dwell) => plan_with_stops(&ctx, &sc.path, dwell),
    }
    .map_err(Error::planning)?;
    let violations = outcome.path.violations(arm);
    let executed = if violations.is_empty() {
        outcome.path.clone()
    } else {
        clamp_execute(&outcome.path, arm, &sc.grid, cam).0
    };
    let dwell = match variant {
        Variant::Stops(d) => d,
        _ => 0.0,
    };
    Ok(Run {
        variant,
        survey_time: sc.path.survey_time(dwell),
        outcome,
        executed,
        violations,
    })
}

/// Survey result of a run: the report plus the observed voxels and points.
#[derive(Debug, Clone)]
pub struct Survey {
    pub report: CoverageReport,
    pub observed: ObservedSet,
    pub points: Vec<LabeledPoint>,
}

pub fn survey(sc: &Scenario, run: &Run, arm: &ArmModel, cam: &CameraModel, cfg: &PlannerConfig, mode: SurveyMode) -> Result<Survey> {
    let (observed, points) = simulate_survey(&run.executed, arm, &sc.grid, cam, mode, cfg.frame_interval, None).map_err(Error::planning)?;
    let fractions = coverage(&points, &sc.truth, cfg.registration_distance, sc.grid.objects().len()).map_err(Error::validation)?;
    let report = CoverageReport::from_fractions(&sc.grid, &fractions, run.survey_time, mode, run.violations.clone());
    Ok(Survey { report, observed, points })
}

fn cover(sc: &Scenario, arm: &ArmModel, cam: &CameraModel, cfg: &PlannerConfig, v: Variant, mode: SurveyMode) -> Result<(Run, CoverageReport)> {
    let run = plan(sc, arm, cam, cfg, v)?;
    let report = survey(sc, &run, arm, cam, cfg, mode)?.report;
    Ok((run, report))
}

/// Which tables `compare` produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tables {
    /// Greedy against the see-nearest baseline.
    pub planners: bool,
    /// Joint-distance filter ablation.
    pub filter: bool,
    /// Stop-and-look against continuous motion.
    pub stops: bool,
    /// All camera frames against viewpoints only.
    pub stream: bool,
}

impl Tables {
    pub const ALL: Tables = Tables {
        planners: true,
        filter: true,
        stops: true,
        stream: true,
    };
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub layouts: Vec<LayoutKind>,
    pub paths: Vec<PathKind>,
    pub tables: Tables,
    pub dwell: f64,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub layout: String,
    pub path: String,
    pub n: usize,
    pub greedy: CoverageReport,
    pub nearest: Option<CoverageReport>,
    /// Clamped execution of the unfiltered plan; its `violations` are those
    /// of the plan.
    pub unfiltered: Option<CoverageReport>,
    pub stops: Option<CoverageReport>,
    pub all_images: Option<CoverageReport>,
    /// (variant, emitted path executable) for every planned path.
    pub audit: Vec<(&'static str, bool)>,
    /// Every planned path, in the order of `audit`.
    pub planned: Vec<(&'static str, ViewPath)>,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub layout: String,
    pub path: String,
    pub result: std::result::Result<CellResult, String>,
}

fn compare_cell(layout: LayoutKind, kind: PathKind, opts: &CompareOptions, arm: &ArmModel, cam: &CameraModel, cfg: &PlannerConfig) -> Result<CellResult> {
    let sc = Scenario::reference(layout, kind, cfg)?;
    let t = opts.tables;
    let (g, greedy) = cover(&sc, arm, cam, cfg, Variant::Greedy, SurveyMode::Viewpoints)?;
    let mut audit = vec![("greedy", g.violations.is_empty())];
    let mut planned = vec![("greedy", g.outcome.path.clone())];
    let nearest = if t.planners {
        let (r, rep) = cover(&sc, arm, cam, cfg, Variant::SeeNearest, SurveyMode::Viewpoints)?;
        audit.push(("see-nearest", r.violations.is_empty()));
        planned.push(("see-nearest", r.outcome.path));
        Some(rep)
    } else {
        None
    };
    let unfiltered = if t.filter {
        let (r, rep) = cover(&sc, arm, cam, cfg, Variant::Unfiltered, SurveyMode::Viewpoints)?;
        audit.push(("greedy-unfiltered", r.violations.is_empty()));
        planned.push(("greedy-unfiltered", r.outcome.path));
        Some(rep)
    } else {
        None
    };
    let stops = if t.stops {
        let (r, rep) = cover(&sc, arm, cam, cfg, Variant::Stops(opts.dwell), SurveyMode::Viewpoints)?;
        audit.push(("greedy-stops", r.violations.is_empty()));
        planned.push(("greedy-stops", r.outcome.path));
        Some(rep)
    } else {
        None
    };
    let all_images = if t.stream {
        Some(survey(&sc, &g, arm, cam, cfg, SurveyMode::AllImages)?.report)
    } else {
        None
    };
    Ok(CellResult {
        layout: layout.name().into(),
        path: kind.name().into(),
        n: sc.path.len(),
        greedy,
        nearest,
        unfiltered,
        stops,
        all_images,
        audit,
        planned,
    })
}

/// Runs the scenario matrix. Cells run in parallel; a failing cell is
/// recorded and the rest continue.
pub fn compare(opts: &CompareOptions, arm: &ArmModel, cam: &CameraModel, cfg: &PlannerConfig) -> Vec<Cell> {
    let cells: Vec<(LayoutKind, PathKind)> = opts
        .layouts
        .iter()
        .flat_map(|&l| opts.paths.iter().map(move |&p| (l, p)))
        .collect();
    cells
        .par_iter()
        .map(|&(l, p)| Cell {
            layout: l.name().into(),
            path: p.name().into(),
            result: compare_cell(l, p, opts, arm, cam, cfg).map_err(|e| e.to_string()),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    VBase,
    VEef,
    TStep,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::VBase => "v_base",
            SweepParam::VEef => "v_eef",
            SweepParam::TStep => "t_step",
        }
    }

    pub fn apply(&self, cfg: &PlannerConfig, value: f64) -> PlannerConfig {
        let mut c = cfg.clone();
        match self {
            SweepParam::VBase => c.v_base = value,
            SweepParam::VEef => c.v_eef = value,
            SweepParam::TStep => c.t_step = value,
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    pub report: CoverageReport,
    pub all_images: Option<CoverageReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub result: std::result::Result<SweepPoint, String>,
}

/// One greedy run per value with the path resampled each time.
pub fn sweep(sc: &Scenario, param: SweepParam, values: &[f64], all_images: bool, arm: &ArmModel, cam: &CameraModel, cfg: &PlannerConfig) -> Vec<SweepRow> {
    values
        .par_iter()
        .map(|&value| {
            let c = param.apply(cfg, value);
            let point = (|| {
                c.validate().map_err(Error::validation)?;
                let s = sc.resampled(&c)?;
                let run = plan(&s, arm, cam, &c, Variant::Greedy)?;
                let report = survey(&s, &run, arm, cam, &c, SurveyMode::Viewpoints)?.report;
                let all = if all_images {
                    Some(survey(&s, &run, arm, cam, &c, SurveyMode::AllImages)?.report)
                } else {
                    None
                };
                Ok::<_, Error>(SweepPoint {
                    n: s.path.len(),
                    report,
                    all_images: all,
                })
            })();
            SweepRow {
                value,
                result: point.map_err(|e| e.to_string()),
            }
        })
        .collect()
}

/// Runs `f` on a pool of `jobs` threads (all cores when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::usage("--jobs must be at least 1"));
        }
        b = b.num_threads(j);
    }
    let pool = b.build().map_err(|e| Error::usage(e.to_string()))?;
    Ok(pool.install(f))
}
