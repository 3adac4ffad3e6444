//! CSV dumps and ASCII PLY point clouds.

use std::fmt::Write as _;

use viewpath_core::camera::ObservedSet;
use viewpath_core::evaluation::CoverageReport;
use viewpath_core::grid::VoxelGrid;
use viewpath_core::math::{ypr_deg, Pose6};
use viewpath_core::sampling::{Filter, RejectStage};
use viewpath_core::surface::LabeledPoint;

use crate::error::{Error, Result};

pub(crate) fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::new(crate::error::Category::Io, e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::new(crate::error::Category::Io, e.to_string())
}

pub fn report_csv(report: &CoverageReport) -> Result<String> {
    let mut rows: Vec<Vec<String>> = report
        .per_object
        .iter()
        .map(|(id, c)| vec![id.clone(), format!("{:.4}", c * 100.0)])
        .collect();
    rows.push(vec!["mean".into(), format!("{:.4}", report.mean * 100.0)]);
    rows.push(vec!["max".into(), format!("{:.4}", report.max * 100.0)]);
    rows.push(vec!["min".into(), format!("{:.4}", report.min * 100.0)]);
    rows.push(vec!["survey_time_s".into(), format!("{}", report.survey_time)]);
    rows.push(vec!["coverage_rate_pct_per_s".into(), format!("{:.4}", report.coverage_rate)]);
    rows.push(vec!["mode".into(), report.mode.name().into()]);
    rows.push(vec!["executable".into(), report.executable().to_string()]);
    rows.push(vec![
        "violating_steps".into(),
        report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
    ]);
    csv_string(&["object", "coverage_pct"], rows)
}

/// ASCII PLY with an object label per vertex.
pub fn ply(points: &[LabeledPoint]) -> String {
    let mut out = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nproperty int object\nend_header\n",
        points.len()
    );
    for p in points {
        let _ = writeln!(out, "{} {} {} {}", p.position.x, p.position.y, p.position.z, p.object);
    }
    out
}

/// Observed surface voxels with the view that first saw them.
pub fn visibility_csv(grid: &VoxelGrid, observed: &ObservedSet) -> Result<String> {
    let rows = observed.provenance().iter().map(|&(sid, view)| {
        let (object, cell) = grid.surface_cell(sid);
        let [i, j, k] = grid.coords(cell);
        vec![
            i.to_string(),
            j.to_string(),
            k.to_string(),
            grid.objects()[object].id.clone(),
            view.to_string(),
        ]
    });
    csv_string(&["i", "j", "k", "object_id", "first_view"], rows)
}

/// Candidate poses of one layer with the stage that rejected them.
pub fn candidates_csv(layer: usize, poses: &[Pose6], filter: &Filter) -> Result<String> {
    let rows = poses.iter().map(|p| {
        let t = p.translation.vector;
        let [yaw, pitch, roll] = ypr_deg(&p.rotation);
        let stage = match filter.check(p) {
            Ok(_) => "survived",
            Err(RejectStage::Collision) => "collision",
            Err(RejectStage::Ik) => "ik",
            Err(RejectStage::JointDistance) => "joint_distance",
        };
        vec![
            layer.to_string(),
            t.x.to_string(),
            t.y.to_string(),
            t.z.to_string(),
            yaw.to_string(),
            pitch.to_string(),
            roll.to_string(),
            stage.into(),
        ]
    });
    csv_string(&["layer", "x", "y", "z", "yaw_deg", "pitch_deg", "roll_deg", "stage"], rows)
}
