//! Planar ground-vehicle velocity from a downward-facing event camera.
//!
//! Events are binned into fixed-time histograms ([`events`]), turned into
//! dense optical flow ([`flow`]), registered as a 2D rigid motion with a
//! RANSAC guard ([`rigid`]), converted to metric velocity and moved to the
//! rear axle ([`vehicle`]). [`synth`] simulates an event camera over a
//! textured plane for end-to-end checks.
//!
//! [`pipeline`] wires the stages together with per-stage timing,
//! [`config`] reads run files, [`scenarios`] holds the built-in recordings,
//! and [`eval`] / [`plot`] score and draw estimates against ground truth.

pub mod camera;
pub mod events;
pub mod flow;
pub mod rigid;
pub mod vehicle;
pub mod synth;
pub mod pipeline;
pub mod config;
pub mod scenarios;
pub mod eval;
pub mod plot;
