//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use viewpath_core::arm::ArmModel;
use viewpath_core::config::PlannerConfig;
use viewpath_core::evaluation::SurveyMode;
use viewpath_core::graph::DEFAULT_BUDGET;
use viewpath_core::math::mix_seed;
use viewpath_core::planner::{layers, PlanContext};
use viewpath_core::sampling::{sample_candidates, Filter, FilterParams, SamplingParams};
use viewpath_core::scenario::{generate_layout, path_waypoints, Asset, LayoutKind, PathKind, PathParams};

use crate::error::{read_file, write_file, Error, Result};
use crate::experiment::{self, CompareOptions, PathSource, Scenario, SweepParam, Tables, Variant};
use crate::files::{ArmFile, SceneFile};
use crate::settings::{resolve, resolve_camera, ConfigFile, PlannerSettings, Preset};
use crate::{export, oracle, report, text};

const AFTER_HELP: &str = "\
Configuration precedence: command-line flag > environment variable > config
file > preset > built-in default. Every flag with a value can also be set
through the environment variable shown in its help (prefix VIEWPATH_).

Exit codes:
  0  success
  2  usage error (bad flags or arguments)
  3  parse error in an input file
  4  validation error (inconsistent scene, arm, path or parameters)
  5  planning failure
  6  I/O failure
  7  oracle check failed

Errors are printed to stderr as `error[<category>]: <message>`.";

#[derive(Debug, Parser)]
#[command(
    name = "viewpath",
    version,
    about = "Long-horizon camera view path planning for a mobile manipulator on a fixed base path",
    after_help = AFTER_HELP
)]
pub struct Cli {
    /// Worker threads for candidate filtering and scenario cells (default: all cores)
    #[arg(long, global = true, env = "VIEWPATH_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan one view path and write the path, report and point cloud
    Plan(PlanArgs),
    /// Plan once per parameter value and tabulate coverage
    Sweep(SweepArgs),
    /// Run the planners and ablations over the layout x path matrix
    Compare(CompareArgs),
    /// Write a generated scene, its path waypoints, the sampled base path and the arm
    GenScenario(GenArgs),
    /// Compare greedy walks with exhaustive optima on small seeded instances
    OracleCheck(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    /// Three objects on an equilateral triangle with 4 m sides
    Triangle,
    /// Three objects in a row, 3 m apart
    Linear,
}

impl LayoutArg {
    pub fn kind(self) -> LayoutKind {
        match self {
            LayoutArg::Triangle => LayoutKind::triangle(),
            LayoutArg::Linear => LayoutKind::linear(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    Zigzag,
    Straight,
    Loop,
}

impl PathArg {
    pub fn kind(self) -> PathKind {
        match self {
            PathArg::Zigzag => PathKind::Zigzag,
            PathArg::Straight => PathKind::Straight,
            PathArg::Loop => PathKind::Loop,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file (preset, scene, layout, path, waypoints, arm, [planner], [camera])
    #[arg(long, env = "VIEWPATH_CONFIG")]
    pub config: Option<PathBuf>,
    /// Parameter preset applied before the config file and flags
    #[arg(long, value_enum, env = "VIEWPATH_PRESET")]
    pub preset: Option<Preset>,
    /// Arm description file (default: built-in six-joint arm)
    #[arg(long, env = "VIEWPATH_ARM")]
    pub arm: Option<PathBuf>,
    #[command(flatten)]
    pub planner: PlannerSettings,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scene file; replaces the generated layout
    #[arg(long, env = "VIEWPATH_SCENE", conflicts_with = "layout")]
    pub scene: Option<PathBuf>,
    /// Generated layout [default: triangle]
    #[arg(long, value_enum, env = "VIEWPATH_LAYOUT")]
    pub layout: Option<LayoutArg>,
    /// Generated base path shape [default: zigzag]
    #[arg(long, value_enum, env = "VIEWPATH_PATH")]
    pub path: Option<PathArg>,
    /// Waypoint file; replaces the generated path shape
    #[arg(long, env = "VIEWPATH_WAYPOINTS", conflicts_with = "path")]
    pub waypoints: Option<PathBuf>,
    /// Length cap for a generated path, m; 0 keeps the whole shape [default: reference length of the shape]
    #[arg(long, env = "VIEWPATH_PATH_LENGTH")]
    pub path_length: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlannerArg {
    Greedy,
    SeeNearest,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Planner
    #[arg(long, value_enum, default_value = "greedy")]
    pub planner: PlannerArg,
    /// Disable the joint-distance filter; infeasible transitions are reported and executed as holds
    #[arg(long)]
    pub no_joint_filter: bool,
    /// Stop the base for this many seconds at every sample
    #[arg(long, value_name = "DWELL")]
    pub stops: Option<f64>,
    /// Evaluate with every camera frame instead of the viewpoints only
    #[arg(long)]
    pub all_images: bool,
    /// Also write every candidate with the filter stage that rejected it
    #[arg(long)]
    pub dump_candidates: bool,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Parameter to vary
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Values, comma separated (at least two)
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub values: Vec<f64>,
    /// Add an all-images coverage column
    #[arg(long)]
    pub all_images: bool,
    /// CSV output file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableArg {
    /// Greedy against see-nearest
    Planners,
    /// Joint-distance filter ablation
    Filter,
    /// Stopping against continuous motion
    Stops,
    /// All camera frames against viewpoints only
    Stream,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Layouts, comma separated
    #[arg(long, value_enum, value_delimiter = ',', default_value = "triangle,linear")]
    pub layouts: Vec<LayoutArg>,
    /// Path shapes, comma separated
    #[arg(long, value_enum, value_delimiter = ',', default_value = "zigzag,straight,loop")]
    pub paths: Vec<PathArg>,
    /// Tables to produce, comma separated
    #[arg(long, value_enum, value_delimiter = ',', default_value = "planners,filter,stops,stream")]
    pub tables: Vec<TableArg>,
    /// Stop duration for the stopping table, s
    #[arg(long, default_value_t = 0.5)]
    pub dwell: f64,
    /// Output directory for compare.txt and compare.csv
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Layout
    #[arg(long, value_enum, default_value = "triangle")]
    pub layout: LayoutArg,
    /// Base path shape
    #[arg(long, value_enum, default_value = "zigzag")]
    pub path: PathArg,
    /// Length cap, m; 0 keeps the whole shape [default: reference length of the shape]
    #[arg(long)]
    pub path_length: Option<f64>,
    /// Output directory
    #[arg(long, default_value = "scenario")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Arm description file (default: built-in six-joint arm)
    #[arg(long, env = "VIEWPATH_ARM")]
    pub arm: Option<PathBuf>,
    /// Number of instances
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    /// Seed of the instance family
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Refuse instances with more candidate paths than this
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Print one line per instance
    #[arg(long)]
    pub verbose: bool,
}

/// Parses `args` and runs the command. Help and version requests print and
/// succeed; other parse failures are usage errors.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                print!("{e}");
                return Ok(());
            }
            return Err(Error::usage(e.render().to_string().trim_start_matches("error: ").trim_end().to_string()));
        }
    };
    let jobs = cli.jobs;
    experiment::with_jobs(jobs, move || match cli.command {
        Command::Plan(a) => cmd_plan(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::GenScenario(a) => cmd_gen(&a),
        Command::OracleCheck(a) => cmd_oracle(&a),
    })?
}

struct Setup {
    cfg: PlannerConfig,
    file: ConfigFile,
    arm: ArmModel,
}

fn load_arm(path: Option<&Path>) -> Result<ArmModel> {
    match path {
        Some(p) => ArmFile::load(p)?.to_arm(),
        None => Ok(ArmModel::default_arm()),
    }
}

fn setup(common: &CommonArgs) -> Result<Setup> {
    let file = match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let cfg = resolve(common.preset, &file, &common.planner)?;
    let arm = load_arm(common.arm.as_deref().or(file.arm.as_deref()))?;
    Ok(Setup { cfg, file, arm })
}

fn enum_value<T: ValueEnum>(what: &str, s: &str) -> Result<T> {
    T::from_str(s, true).map_err(|_| Error::validation(format!("config: unknown {what} `{s}`")))
}

fn scenario(s: &mut Setup, a: &ScenarioArgs, common: &CommonArgs) -> Result<Scenario> {
    let scene_path = a.scene.clone().or_else(|| if a.layout.is_some() { None } else { s.file.scene.clone() });
    let (layout_name, scene) = match scene_path {
        Some(p) => {
            let (sf, dir) = SceneFile::load(&p)?;
            if common.planner.voxel_size.is_none() && s.file.planner.voxel_size.is_none() {
                s.cfg.voxel_size = sf.voxel_size;
            }
            let name = p.file_stem().map_or("scene".into(), |n| n.to_string_lossy().into_owned());
            (name, sf.to_scene(&dir)?)
        }
        None => {
            let layout = match (a.layout, &s.file.layout) {
                (Some(l), _) => l,
                (None, Some(l)) => enum_value::<LayoutArg>("layout", l)?,
                (None, None) => LayoutArg::Triangle,
            };
            let k = layout.kind();
            (k.name().to_string(), generate_layout(k, &Asset::STANDARD, s.cfg.voxel_size).map_err(Error::validation)?)
        }
    };
    let waypoints = a.waypoints.clone().or_else(|| if a.path.is_some() { None } else { s.file.waypoints.clone() });
    let source = match waypoints {
        Some(p) => {
            let (pts, closed) = text::read_waypoints(&read_file(&p)?)?;
            let name = p.file_stem().map_or("waypoints".into(), |n| n.to_string_lossy().into_owned());
            PathSource::Polyline { name, pts, closed }
        }
        None => {
            let kind = match (a.path, &s.file.path) {
                (Some(k), _) => k,
                (None, Some(k)) => enum_value::<PathArg>("path", k)?,
                (None, None) => PathArg::Zigzag,
            }
            .kind();
            PathSource::Shape {
                kind,
                max_length: cap(kind, a.path_length),
            }
        }
    };
    Scenario::new(layout_name, scene, source, &s.cfg)
}

fn cap(kind: PathKind, path_length: Option<f64>) -> Option<f64> {
    match path_length {
        Some(l) if l <= 0.0 => None,
        Some(l) => Some(l),
        None => Some(kind.reference_length()),
    }
}

fn cmd_plan(a: &PlanArgs) -> Result<()> {
    let mut s = setup(&a.common)?;
    let cam = resolve_camera(&s.file)?;
    let mut cfg_sc = scenario(&mut s, &a.scenario, &a.common)?;
    let cfg = s.cfg.clone();
    if let Some(d) = a.stops {
        if !(d > 0.0) {
            return Err(Error::validation("--stops must be positive"));
        }
    }
    let variant = match (a.planner, a.no_joint_filter, a.stops) {
        (PlannerArg::SeeNearest, false, None) => Variant::SeeNearest,
        (PlannerArg::Greedy, false, None) => Variant::Greedy,
        (PlannerArg::Greedy, true, None) => Variant::Unfiltered,
        (PlannerArg::Greedy, false, Some(d)) => Variant::Stops(d),
        _ => return Err(Error::usage("--planner see-nearest, --no-joint-filter and --stops cannot be combined")),
    };
    let run = experiment::plan(&cfg_sc, &s.arm, &cam, &cfg, variant)?;
    let mode = if a.all_images { SurveyMode::AllImages } else { SurveyMode::Viewpoints };
    let sv = experiment::survey(&cfg_sc, &run, &s.arm, &cam, &cfg, mode)?;
    let out = &a.out;
    write_file(&out.join("viewpath.txt"), text::write_view_path(&run.outcome.path))?;
    if !run.violations.is_empty() {
        write_file(&out.join("viewpath_executed.txt"), text::write_view_path(&run.executed))?;
    }
    write_file(&out.join("base_path.txt"), text::write_base_path(&cfg_sc.path))?;
    write_file(&out.join("report.csv"), export::report_csv(&sv.report)?)?;
    write_file(&out.join("observed.ply"), export::ply(&sv.points))?;
    write_file(&out.join("visibility.csv"), export::visibility_csv(&cfg_sc.grid, &sv.observed)?)?;
    if a.dump_candidates {
        write_file(&out.join("candidates.csv"), candidate_dump(&mut cfg_sc, &s.arm, &cam, &cfg, &run)?)?;
    }
    println!(
        "{} {} N={} total_ig={} held={}",
        cfg_sc.name(),
        variant.name(),
        cfg_sc.path.len(),
        run.outcome.path.total_ig,
        run.outcome.path.held_count()
    );
    print!("{}", report::report_text(&sv.report));
    Ok(())
}

/// Regenerates each layer's candidates from the configuration the planned
/// path held before that layer.
fn candidate_dump(sc: &mut Scenario, arm: &ArmModel, cam: &viewpath_core::camera::CameraModel, cfg: &PlannerConfig, run: &experiment::Run) -> Result<String> {
    let dwell = match run.variant {
        Variant::Stops(d) => d,
        _ => 0.0,
    };
    let ls = layers(&sc.path, dwell);
    let ctx = PlanContext::new(&sc.grid, arm, cam, cfg);
    let boxes: Vec<_> = sc.grid.targets().map(|(_, o)| o.aabb).collect();
    let joint_filter = run.variant != Variant::Unfiltered;
    let mut out = String::new();
    for (k, layer) in ls.iter().enumerate().skip(1) {
        let q = &run.outcome.path.steps[k - 1].joints;
        let center = arm.fk_unchecked(&q.q, &layer.base);
        let sp = SamplingParams {
            radius: cfg.v_eef * layer.dt,
            count: cfg.m,
            look_at_fraction: cfg.look_at_fraction,
            surface_only: cfg.surface_only,
        };
        // Same stream as the planner: it is keyed by the layer.
        let poses = sample_candidates(&center, &boxes, &sp, mix_seed(cfg.seed, ((layer.base_index as u64) << 16) | layer.repeat as u64, 0));
        let fp = FilterParams {
            dt: layer.dt,
            collision_radius: cfg.collision_radius,
            joint_filter,
            ik: cfg.ik,
        };
        let filter = Filter::new(ctx.grid, arm, layer.base, q, &fp);
        let csv = export::candidates_csv(k, &poses, &filter)?;
        if k == 1 {
            out.push_str(&csv);
        } else {
            out.push_str(csv.split_once('\n').map_or("", |x| x.1));
        }
    }
    Ok(out)
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    if a.values.len() < 2 {
        return Err(Error::usage("--values needs at least two values"));
    }
    let mut s = setup(&a.common)?;
    let cam = resolve_camera(&s.file)?;
    let sc = scenario(&mut s, &a.scenario, &a.common)?;
    let rows = experiment::sweep(&sc, a.param, &a.values, a.all_images, &s.arm, &cam, &s.cfg);
    let csv = report::sweep_csv(a.param, &rows)?;
    match &a.out {
        Some(p) => write_file(p, &csv)?,
        None => print!("{csv}"),
    }
    for r in &rows {
        if let Err(e) = &r.result {
            eprintln!("{} = {}: {e}", a.param.name(), r.value);
        }
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    if !(a.dwell > 0.0) {
        return Err(Error::validation("--dwell must be positive"));
    }
    let s = setup(&a.common)?;
    let cam = resolve_camera(&s.file)?;
    let opts = CompareOptions {
        layouts: a.layouts.iter().map(|l| l.kind()).collect(),
        paths: a.paths.iter().map(|p| p.kind()).collect(),
        tables: Tables {
            planners: a.tables.contains(&TableArg::Planners),
            filter: a.tables.contains(&TableArg::Filter),
            stops: a.tables.contains(&TableArg::Stops),
            stream: a.tables.contains(&TableArg::Stream),
        },
        dwell: a.dwell,
    };
    let cells = experiment::compare(&opts, &s.arm, &cam, &s.cfg);
    let txt = report::compare_text(&cells);
    write_file(&a.out.join("compare.txt"), &txt)?;
    write_file(&a.out.join("compare.csv"), report::compare_csv(&cells)?)?;
    print!("{txt}");
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let s = setup(&a.common)?;
    let layout = a.layout.kind();
    let kind = a.path.kind();
    let scene = generate_layout(layout, &Asset::STANDARD, s.cfg.voxel_size).map_err(Error::validation)?;
    let params = PathParams {
        max_length: cap(kind, a.path_length),
        ..PathParams::default()
    };
    let (pts, closed) = path_waypoints(kind, &scene, s.cfg.spacing(), s.cfg.n, &params).map_err(Error::validation)?;
    let sc = Scenario::new(layout.name(), scene.clone(), PathSource::Shape { kind, max_length: params.max_length }, &s.cfg)?;
    write_file(&a.out.join("scene.toml"), SceneFile::from_scene(&scene, s.cfg.voxel_size)?.to_toml())?;
    write_file(&a.out.join("waypoints.txt"), text::write_waypoints(&pts, closed))?;
    write_file(&a.out.join("base_path.txt"), text::write_base_path(&sc.path))?;
    write_file(&a.out.join("arm.toml"), ArmFile::from_arm(&s.arm).to_toml())?;
    println!(
        "{}: {} objects, {} waypoints, {} base samples, {:.2} m",
        sc.name(),
        scene.objects.len(),
        pts.len(),
        sc.path.len(),
        sc.path.length()
    );
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Result<()> {
    let arm = load_arm(a.arm.as_deref())?;
    let cam = viewpath_core::camera::CameraModel::default();
    let rows = oracle::check(a.instances, a.seed, &arm, &cam, a.budget)?;
    if a.verbose {
        print!("{}", oracle::rows_text(&rows));
    }
    let s = oracle::summarize(&rows);
    println!("instances: {}", s.instances);
    println!("optimum >= greedy: {} failures", s.dominance_failures);
    println!(
        "fully connected: min greedy/optimum {:.4}, {} below {:.4}",
        s.min_full_ratio,
        s.floor_failures,
        oracle::GREEDY_FLOOR
    );
    println!(
        "joint-bound edges: median greedy/optimum {:.4}, min {:.4}",
        s.median_constrained_ratio, s.min_constrained_ratio
    );
    if s.dominance_failures > 0 || s.floor_failures > 0 {
        return Err(Error::oracle(format!(
            "{} dominance failures, {} instances below the floor",
            s.dominance_failures, s.floor_failures
        )));
    }
    Ok(())
}
