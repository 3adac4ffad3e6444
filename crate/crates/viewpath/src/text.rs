//! Line-oriented text formats: view paths, sampled base paths and waypoint
//! polylines. `#` starts a comment line; fields are whitespace separated.
//! Floats are written in shortest round-trip form.

use std::fmt::Write as _;

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion};
use viewpath_core::arm::JointConfig;
use viewpath_core::math::BasePose;
use viewpath_core::planner::{BasePath, ViewPath, ViewStep};

use crate::error::{Error, Result};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split_whitespace().collect()))
}

fn num<T: std::str::FromStr>(what: &str, line: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(format!("{what} line {line}: `{s}` is not a number")))
}

pub fn write_view_path(path: &ViewPath) -> String {
    let dof = path.steps.first().map_or(0, |s| s.joints.len());
    let mut out = String::from("# base_index t x y z qw qx qy qz");
    for k in 0..dof {
        let _ = write!(out, " q{k}");
    }
    out.push_str(" marginal_ig held\n");
    for s in &path.steps {
        let t = s.pose.translation.vector;
        let q = s.pose.rotation.quaternion();
        let _ = write!(out, "{} {} {} {} {} {} {} {} {}", s.base_index, s.time, t.x, t.y, t.z, q.w, q.i, q.j, q.k);
        for a in &s.joints.q {
            let _ = write!(out, " {a}");
        }
        let _ = writeln!(out, " {} {}", s.marginal_ig, s.held as u8);
    }
    out
}

/// Parses a view path; base poses come from `base` by index.
pub fn read_view_path(text: &str, base: &BasePath) -> Result<ViewPath> {
    let mut steps = Vec::new();
    let mut dof = None;
    for (line, f) in data_lines(text) {
        if f.len() < 11 {
            return Err(Error::parse(format!("view path line {line}: expected at least 11 fields")));
        }
        let n = f.len() - 11;
        if *dof.get_or_insert(n) != n {
            return Err(Error::parse(format!("view path line {line}: joint count changed")));
        }
        let base_index: usize = num("view path", line, f[0])?;
        let b = *base
            .poses
            .get(base_index)
            .ok_or_else(|| Error::validation(format!("view path line {line}: base index {base_index} outside the base path")))?;
        let v: Vec<f64> = f[1..9].iter().map(|s| num("view path", line, s)).collect::<Result<_>>()?;
        let joints: Vec<f64> = f[9..9 + n].iter().map(|s| num("view path", line, s)).collect::<Result<_>>()?;
        let held = match f[10 + n] {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(format!("view path line {line}: held flag `{other}`"))),
        };
        let rot = UnitQuaternion::from_quaternion(Quaternion::new(v[4], v[5], v[6], v[7]));
        steps.push(ViewStep {
            base_index,
            time: v[0],
            base: b,
            pose: Isometry3::from_parts(Translation3::new(v[1], v[2], v[3]), rot),
            joints: JointConfig::new(joints),
            marginal_ig: num("view path", line, f[9 + n])?,
            held,
        });
    }
    let total_ig = steps.iter().map(|s| s.marginal_ig).sum();
    Ok(ViewPath { steps, total_ig })
}

pub fn write_base_path(path: &BasePath) -> String {
    let mut out = format!("# t x y yaw\nv_base {}\nt_step {}\n", path.v_base, path.t_step);
    for (i, p) in path.poses.iter().enumerate() {
        let _ = writeln!(out, "{} {} {} {}", path.time(i), p.x, p.y, p.yaw);
    }
    out
}

pub fn read_base_path(text: &str) -> Result<BasePath> {
    let (mut v_base, mut t_step) = (None, None);
    let mut poses = Vec::new();
    for (line, f) in data_lines(text) {
        match f.as_slice() {
            ["v_base", v] => v_base = Some(num::<f64>("base path", line, v)?),
            ["t_step", v] => t_step = Some(num::<f64>("base path", line, v)?),
            [_, x, y, yaw] => poses.push(BasePose {
                x: num("base path", line, x)?,
                y: num("base path", line, y)?,
                yaw: num("base path", line, yaw)?,
            }),
            _ => return Err(Error::parse(format!("base path line {line}: expected `t x y yaw`"))),
        }
    }
    let v = v_base.ok_or_else(|| Error::parse("base path: missing v_base"))?;
    let t = t_step.ok_or_else(|| Error::parse("base path: missing t_step"))?;
    BasePath::new(poses, v, t).map_err(|e| Error::validation(format!("base path: {e}")))
}

/// Polyline vertices `x y`; a line `closed` marks a circuit.
pub fn write_waypoints(pts: &[(f64, f64)], closed: bool) -> String {
    let mut out = String::from("# x y\n");
    if closed {
        out.push_str("closed\n");
    }
    for (x, y) in pts {
        let _ = writeln!(out, "{x} {y}");
    }
    out
}

pub fn read_waypoints(text: &str) -> Result<(Vec<(f64, f64)>, bool)> {
    let mut closed = false;
    let mut pts = Vec::new();
    for (line, f) in data_lines(text) {
        match f.as_slice() {
            ["closed"] => closed = true,
            [x, y] => pts.push((num("waypoints", line, x)?, num("waypoints", line, y)?)),
            _ => return Err(Error::parse(format!("waypoints line {line}: expected `x y`"))),
        }
    }
    if pts.len() < 2 {
        return Err(Error::validation("waypoints: need at least 2 vertices"));
    }
    Ok((pts, closed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waypoint_errors_name_the_line() {
        let e = read_waypoints("# x y\n0 0\n1 nope\n").unwrap_err();
        assert_eq!(e.category, crate::error::Category::Parse);
        assert!(e.message.contains("line 3"), "{}", e.message);
        assert!(read_waypoints("0 0\n").is_err());
    }

    #[test]
    fn base_path_needs_header() {
        assert!(read_base_path("0 0 0 0\n2 1 0 0\n").is_err());
        let p = read_base_path("v_base 0.5\nt_step 2\n0 0 0 0\n2 1 0 0\n").unwrap();
        assert_eq!(p.len(), 2);
    }
}
