//! Random Waypoint mobility.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{is_multiple, FarmScenario};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::par::Exec;
use crate::scenario::GroundNode;
use crate::seed::{child_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityBounds {
    pub v_min: f64,
    pub v_max: f64,
    pub pause_min: f64,
    pub pause_max: f64,
    /// Heading interval in degrees. Accepted for compatibility with
    /// direction-based parameter sets; Random Waypoint does not use it.
    pub direction_interval_deg: Option<[f64; 2]>,
}

impl Default for MobilityBounds {
    fn default() -> Self {
        Self {
            v_min: 1.0,
            v_max: 3.0,
            pause_min: 0.0,
            pause_max: 1.0,
            direction_interval_deg: None,
        }
    }
}

impl MobilityBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_min > 0.0 && self.v_min <= self.v_max && self.v_max.is_finite()) {
            return Err(Error::validation("mobility.v_min", "need 0 < v_min <= v_max"));
        }
        if !(self.pause_min >= 0.0 && self.pause_min <= self.pause_max && self.pause_max.is_finite()) {
            return Err(Error::validation(
                "mobility.pause_min",
                "need 0 <= pause_min <= pause_max",
            ));
        }
        Ok(())
    }

    pub fn draw_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        uniform(rng, self.v_min, self.v_max)
    }

    pub fn draw_pause<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        uniform(rng, self.pause_min, self.pause_max)
    }
}

pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

pub(crate) fn uniform_point<R: Rng + ?Sized>(rng: &mut R, side_m: f64) -> Point2 {
    Point2::new(uniform(rng, 0.0, side_m), uniform(rng, 0.0, side_m))
}

/// Advances one node by `dt_s`.
///
/// A pausing node only burns pause time. A moving node walks toward its
/// waypoint; if the waypoint is within `speed * dt` it lands exactly on it,
/// then draws a pause before heading to a fresh waypoint at a fresh speed.
pub fn step_node<R: Rng + ?Sized>(
    node: &GroundNode,
    dt_s: f64,
    farm: &FarmScenario,
    bounds: &MobilityBounds,
    rng: &mut R,
) -> GroundNode {
    let mut next = node.clone();
    if next.pause_remaining_s > 0.0 {
        next.pause_remaining_s = (next.pause_remaining_s - dt_s).max(0.0);
        return next;
    }
    let reach = next.speed_mps * dt_s;
    let remaining = next.position.distance(&next.waypoint);
    if remaining <= reach {
        next.position = next.waypoint;
        next.pause_remaining_s = bounds.draw_pause(rng);
        next.waypoint = uniform_point(rng, farm.side_m);
        next.speed_mps = bounds.draw_speed(rng);
    } else {
        let f = reach / remaining;
        next.position = Point2::new(
            next.position.x + (next.waypoint.x - next.position.x) * f,
            next.position.y + (next.waypoint.y - next.position.y) * f,
        );
    }
    next
}

/// Advances every node by `duration_s` in steps of `dt_s`. Each node draws
/// from its own stream keyed by `(stream_seed, node id)`, so the result does
/// not depend on node order.
pub fn advance_all(
    nodes: &[GroundNode],
    duration_s: f64,
    dt_s: f64,
    farm: &FarmScenario,
    bounds: &MobilityBounds,
    stream_seed: u64,
    exec: Exec,
) -> Result<Vec<GroundNode>> {
    if !(dt_s > 0.0) || duration_s < 0.0 {
        return Err(Error::Argument(format!("bad step {dt_s} s / duration {duration_s} s")));
    }
    if !is_multiple(duration_s, dt_s) {
        return Err(Error::Argument(format!(
            "duration {duration_s} s is not a multiple of dt {dt_s} s"
        )));
    }
    let steps = (duration_s / dt_s).round() as usize;
    Ok(exec.map(nodes, |node| {
        let mut rng = child_rng(stream_seed, Stream::Mobility, node.id);
        let mut n = node.clone();
        for _ in 0..steps {
            n = step_node(&n, dt_s, farm, bounds, &mut rng);
        }
        n
    }))
}
