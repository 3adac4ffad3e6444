//! Long-horizon view path planning for an arm-mounted camera on a mobile
//! base that follows a fixed path.
#![no_std]
// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod arm;
pub mod camera;
pub mod config;
pub mod evaluation;
pub mod geometry;
pub mod graph;
pub mod grid;
pub mod math;
mod par;
pub mod planner;
pub mod raycast;
pub mod sampling;
pub mod scenario;
pub mod scene;
pub mod surface;
