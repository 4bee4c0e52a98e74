//! The three attention layer functions: lanes, ego path, and objects.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::grid::{GridSpec, LayerGrid};
use crate::geometry::{Point2, Rotation};
use crate::world::{EgoState, LaneId, MapModel};

pub const DEFAULT_HORIZON_S: f64 = 3.0;
pub const DEFAULT_YAW_RATE_SIGMA: f64 = 10.0 * core::f64::consts::PI / 180.0;
pub const DEFAULT_YAW_SAMPLES: usize = 21;
pub const DEFAULT_INTEGRATION_STEP_S: f64 = 0.1;
pub const DEFAULT_OBJECT_RANGE_M: f64 = 15.0;
/// Successor hops followed from the own lane.
pub const DEFAULT_LANE_DEPTH: usize = 10;
/// Below this yaw rate the straight-line limit of the turn model is used.
pub const STRAIGHT_LINE_YAW_RATE: f64 = 1e-4;

/// Marks every cell a polyline passes through, sampled at a quarter cell.
fn trace_polyline(layer: &mut LayerGrid, line: &[Point2]) {
    let step = layer.spec().resolution() * 0.25;
    for w in line.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = libm::ceil(a.distance(b) / step).max(1.0) as usize;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            layer.mark_world(a + (b - a) * t);
        }
    }
}

/// Lane relevance: the own lane with its successors up to `depth`, and/or
/// every other lane reaching into the grid. Both parts merge into one 0/1 layer.
pub fn layer_lane(
    map: &MapModel,
    ego: &EgoState,
    include_own: bool,
    include_other: bool,
    spec: GridSpec,
    depth: usize,
) -> LayerGrid {
    let mut layer = LayerGrid::zeros(spec, ego.position);
    if !include_own && !include_other {
        return layer;
    }
    let own: BTreeSet<LaneId> = match map.own_lane_at(ego) {
        Some(lane) => map
            .lane_successors_transitive(&lane.id, depth)
            .into_iter()
            .map(|l| l.id.clone())
            .collect(),
        None => BTreeSet::new(),
    };
    if include_own {
        for id in &own {
            if let Some(lane) = map.lane(id) {
                trace_polyline(&mut layer, &lane.centerline);
            }
        }
    }
    if include_other {
        for lane in map.lanes_within_radius(ego.position, spec.corner_radius()) {
            if !own.contains(&lane.id) {
                trace_polyline(&mut layer, &lane.centerline);
            }
        }
    }
    layer
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoPathParams {
    pub horizon_s: f64,
    pub yaw_rate_sigma: f64,
    pub yaw_samples: usize,
    pub step_s: f64,
}

impl Default for EgoPathParams {
    fn default() -> Self {
        Self {
            horizon_s: DEFAULT_HORIZON_S,
            yaw_rate_sigma: DEFAULT_YAW_RATE_SIGMA,
            yaw_samples: DEFAULT_YAW_SAMPLES,
            step_s: DEFAULT_INTEGRATION_STEP_S,
        }
    }
}

/// Constant turn rate and velocity position at time `t`, in the ego frame
/// (x forward, y left).
pub fn ctrv_offset(speed: f64, yaw_rate: f64, t: f64) -> Point2 {
    if yaw_rate.abs() < STRAIGHT_LINE_YAW_RATE {
        Point2::new(speed * t, 0.0)
    } else {
        let r = speed / yaw_rate;
        Point2::new(
            r * libm::sin(yaw_rate * t),
            r * (1.0 - libm::cos(yaw_rate * t)),
        )
    }
}

/// Yaw rates sampled uniformly over `[yaw_rate - sigma, yaw_rate + sigma]`,
/// symmetric about the center sample.
pub fn yaw_rate_samples(yaw_rate: f64, sigma: f64, samples: usize) -> Vec<f64> {
    if samples <= 1 || sigma == 0.0 {
        return alloc::vec![yaw_rate];
    }
    let mid = (samples - 1) as f64 / 2.0;
    (0..samples)
        .map(|k| yaw_rate + sigma * ((k as f64 - mid) / mid))
        .collect()
}

/// Ego path relevance: a fan of turn-rate hypotheses integrated over the horizon.
pub fn layer_ego_path(ego: &EgoState, spec: GridSpec, params: &EgoPathParams) -> LayerGrid {
    let mut layer = LayerGrid::zeros(spec, ego.position);
    let rot = Rotation::new(ego.heading);
    let steps = libm::round(params.horizon_s / params.step_s).max(0.0) as usize;
    // keep consecutive samples at most half a cell apart
    let sub = libm::ceil(ego.speed * params.step_s / (spec.resolution() * 0.5)).max(1.0) as usize;
    let dt = params.step_s / sub as f64;
    for omega in yaw_rate_samples(ego.yaw_rate, params.yaw_rate_sigma, params.yaw_samples) {
        for k in 0..=(steps * sub) {
            let t = k as f64 * dt;
            layer.mark_offset(rot.apply(ctrv_offset(ego.speed, omega, t)));
        }
    }
    layer
}

/// Object relevance: the cell of every detection within `range_m` (closed) of the ego.
pub fn layer_object(
    detections: &[Point2],
    ego_position: Point2,
    spec: GridSpec,
    range_m: f64,
) -> LayerGrid {
    let mut layer = LayerGrid::zeros(spec, ego_position);
    for d in detections {
        if d.distance(ego_position) <= range_m {
            layer.mark_world(*d);
        }
    }
    layer
}
