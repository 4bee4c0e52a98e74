//! Multi-layer attention map (MLAM): per-layer grids, dilation, summation,
//! relevance thresholding, and the polar requirement view used for configuration.

pub mod grid;
pub mod layers;
pub mod polar;

use alloc::vec::Vec;

pub use grid::{combine, dilate, AttentionGrid, Cell, GridError, GridSpec, LayerGrid};
pub use layers::{layer_ego_path, layer_lane, layer_object, EgoPathParams};
pub use polar::{to_polar, PolarRequirementMap, SEGMENTS};

use crate::geometry::Point2;
use crate::situation::LayerActivation;
use crate::world::{EgoState, MapModel};

pub const DEFAULT_DILATION_KERNEL: usize = 5;
pub const DEFAULT_THETA_REL: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionParams {
    pub grid: GridSpec,
    pub dilation_kernel: usize,
    pub theta_rel: f64,
    pub ego_path: EgoPathParams,
    pub object_range_m: f64,
    pub lane_depth: usize,
}

impl Default for AttentionParams {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            dilation_kernel: DEFAULT_DILATION_KERNEL,
            theta_rel: DEFAULT_THETA_REL,
            ego_path: EgoPathParams::default(),
            object_range_m: layers::DEFAULT_OBJECT_RANGE_M,
            lane_depth: layers::DEFAULT_LANE_DEPTH,
        }
    }
}

/// Builds the active layers, dilates each one, and sums them.
pub fn build_mlam(
    map: &MapModel,
    ego: &EgoState,
    activation: LayerActivation,
    object_detections: &[Point2],
    params: &AttentionParams,
) -> Result<AttentionGrid, GridError> {
    let mut active: Vec<LayerGrid> = Vec::new();
    if activation.lane_own || activation.lane_other {
        active.push(layer_lane(
            map,
            ego,
            activation.lane_own,
            activation.lane_other,
            params.grid,
            params.lane_depth,
        ));
    }
    if activation.ego_path {
        active.push(layer_ego_path(ego, params.grid, &params.ego_path));
    }
    if activation.object {
        active.push(layer_object(
            object_detections,
            ego.position,
            params.grid,
            params.object_range_m,
        ));
    }
    let dilated = active
        .iter()
        .map(|l| dilate(l, params.dilation_kernel))
        .collect::<Result<Vec<_>, _>>()?;
    combine(params.grid, ego.position, &dilated, params.theta_rel)
}
