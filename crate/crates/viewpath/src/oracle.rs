//! Small seeded instances on which the greedy walk is compared with the
//! exhaustive optimum.

use nalgebra::{Isometry3, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use viewpath_core::arm::ArmModel;
use viewpath_core::camera::CameraModel;
use viewpath_core::config::PlannerConfig;
use viewpath_core::graph::{brute_force_optimal, graph_from_scene, greedy_on_graph, Connectivity, ViewGraph};
use viewpath_core::grid::voxelize;
use viewpath_core::math::{mix_seed, Aabb, BasePose};
use viewpath_core::planner::{BasePath, PlanContext};
use viewpath_core::scene::{SceneDescription, SceneObject, Shape};

use crate::error::{Error, Result};
use crate::report::aligned;

/// Greedy share of the optimum guaranteed under a cardinality constraint.
pub const GREEDY_FLOOR: f64 = 1.0 - 1.0 / std::f64::consts::E;

pub const MAX_PER_LAYER: usize = 4;

pub struct Instance {
    pub scene: SceneDescription,
    pub path: BasePath,
    pub config: PlannerConfig,
}

/// One to three boxes or cylinders beside a straight base path of three to
/// five samples.
pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(1..=3);
    let mut objects: Vec<SceneObject> = Vec::new();
    while objects.len() < count {
        let s = rng.random_range(0.4..0.9);
        let h = rng.random_range(0.5..1.6);
        let shape = if rng.random_bool(0.5) {
            Shape::Box {
                size: Vector3::new(s, rng.random_range(0.4..0.9), h),
            }
        } else {
            Shape::Cylinder { radius: s / 2.0, height: h }
        };
        let pose = Isometry3::new(
            Vector3::new(rng.random_range(1.5..5.0), rng.random_range(2.2..4.5), h / 2.0),
            Vector3::z() * rng.random_range(-1.5..1.5),
        );
        let o = SceneObject::new(format!("obj{}", objects.len()), shape, pose, true);
        let b = o.world_aabb().expanded(0.3);
        if objects.iter().all(|p| {
            let q = p.world_aabb();
            (0..2).any(|i| b.max[i] < q.min[i] || q.max[i] < b.min[i])
        }) {
            objects.push(o);
        }
    }
    let scene = SceneDescription::new(Aabb::new(Point3::new(0.0, 0.0, 0.0), Point3::new(6.0, 6.0, 2.5)), objects).expect("instance scene is valid");
    let config = PlannerConfig {
        v_base: 0.5,
        t_step: 1.0,
        v_eef: 0.4,
        m: 120,
        n: None,
        voxel_size: 0.1,
        seed: mix_seed(seed, 1, 0),
        ..PlannerConfig::default()
    };
    let n = rng.random_range(3..=5);
    let x0 = rng.random_range(0.8..1.5);
    let spacing = config.v_base * config.t_step;
    let poses = (0..n)
        .map(|i| BasePose {
            x: x0 + i as f64 * spacing,
            y: 0.8,
            yaw: 0.0,
        })
        .collect();
    let path = BasePath::new(poses, config.v_base, config.t_step).expect("instance path is valid");
    Instance { scene, path, config }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub seed: u64,
    pub layers: usize,
    pub nodes: usize,
    /// (greedy, optimal) with edges from the joint bound.
    pub constrained: (usize, usize),
    /// (greedy, optimal) with every layer fully connected.
    pub full: (usize, usize),
}

pub fn ratio(greedy: usize, optimal: usize) -> f64 {
    if optimal == 0 {
        1.0
    } else {
        greedy as f64 / optimal as f64
    }
}

impl OracleRow {
    pub fn dominance_holds(&self) -> bool {
        self.constrained.1 >= self.constrained.0 && self.full.1 >= self.full.0
    }

    pub fn constrained_ratio(&self) -> f64 {
        ratio(self.constrained.0, self.constrained.1)
    }

    pub fn full_ratio(&self) -> f64 {
        ratio(self.full.0, self.full.1)
    }
}

pub fn check_instance(seed: u64, arm: &ArmModel, cam: &CameraModel, budget: u64) -> Result<OracleRow> {
    let inst = instance(seed);
    let grid = voxelize(&inst.scene, inst.config.voxel_size).map_err(Error::validation)?;
    let ctx = PlanContext::new(&grid, arm, cam, &inst.config);
    let g = graph_from_scene(&ctx, &inst.path, MAX_PER_LAYER, Connectivity::Tvp).map_err(Error::planning)?;
    let full = ViewGraph::fully_connected(g.layers.clone()).map_err(Error::planning)?;
    let tie = inst.config.seed;
    let run = |g: &ViewGraph| -> Result<(usize, usize)> {
        let greedy = greedy_on_graph(g, tie);
        let best = brute_force_optimal(g, budget).map_err(|e| Error::oracle(e.to_string()))?;
        Ok((greedy.total, best.total))
    };
    Ok(OracleRow {
        seed,
        layers: g.depth(),
        nodes: g.layers.iter().map(|l| l.len()).sum(),
        constrained: run(&g)?,
        full: run(&full)?,
    })
}

pub fn check(count: usize, seed: u64, arm: &ArmModel, cam: &CameraModel, budget: u64) -> Result<Vec<OracleRow>> {
    (0..count as u64)
        .into_par_iter()
        .map(|k| check_instance(mix_seed(seed, k, 7), arm, cam, budget))
        .collect()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSummary {
    pub instances: usize,
    pub dominance_failures: usize,
    pub floor_failures: usize,
    pub min_full_ratio: f64,
    pub median_constrained_ratio: f64,
    pub min_constrained_ratio: f64,
}

pub fn summarize(rows: &[OracleRow]) -> OracleSummary {
    let full: Vec<f64> = rows.iter().map(|r| r.full_ratio()).collect();
    let con: Vec<f64> = rows.iter().map(|r| r.constrained_ratio()).collect();
    OracleSummary {
        instances: rows.len(),
        dominance_failures: rows.iter().filter(|r| !r.dominance_holds()).count(),
        floor_failures: full.iter().filter(|&&r| r < GREEDY_FLOOR - 1e-9).count(),
        min_full_ratio: full.iter().copied().fold(f64::INFINITY, f64::min),
        median_constrained_ratio: median(con.clone()),
        min_constrained_ratio: con.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

pub fn rows_text(rows: &[OracleRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.seed.to_string(),
                r.layers.to_string(),
                r.nodes.to_string(),
                format!("{}/{}", r.constrained.0, r.constrained.1),
                format!("{:.3}", r.constrained_ratio()),
                format!("{}/{}", r.full.0, r.full.1),
                format!("{:.3}", r.full_ratio()),
            ]
        })
        .collect();
    let header = ["seed", "layers", "nodes", "greedy/opt", "ratio", "greedy/opt full", "ratio full"].map(String::from);
    aligned(&header, &body)
}
