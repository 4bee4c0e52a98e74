//! Polar projection of the attention map into one-degree segments.

use super::grid::AttentionGrid;
use crate::geometry::degrees_0_360;

pub const SEGMENTS: usize = 360;

/// Per-segment requirement: highest required performance and furthest relevant range.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarRequirementMap {
    p_req: [f64; SEGMENTS],
    d_req: [f64; SEGMENTS],
}

impl Default for PolarRequirementMap {
    fn default() -> Self {
        Self::empty()
    }
}

impl PolarRequirementMap {
    pub fn empty() -> Self {
        Self {
            p_req: [0.0; SEGMENTS],
            d_req: [0.0; SEGMENTS],
        }
    }

    /// Same requirement in every segment.
    pub fn uniform(p_req: f64, d_req: f64) -> Self {
        let mut m = Self::empty();
        for s in 0..SEGMENTS {
            m.set(s, p_req, d_req);
        }
        m
    }

    /// Sets one segment; a zero performance requirement forces a zero range.
    pub fn set(&mut self, segment: usize, p_req: f64, d_req: f64) {
        self.p_req[segment] = p_req.max(0.0);
        self.d_req[segment] = if p_req > 0.0 { d_req.max(0.0) } else { 0.0 };
    }

    pub fn p_req(&self, segment: usize) -> f64 {
        self.p_req[segment]
    }

    pub fn d_req(&self, segment: usize) -> f64 {
        self.d_req[segment]
    }

    pub fn is_empty(&self) -> bool {
        self.p_req.iter().all(|p| *p <= 0.0)
    }

    pub fn max_p_req(&self) -> f64 {
        self.p_req.iter().copied().fold(0.0, f64::max)
    }

    /// Segments carrying a requirement.
    pub fn active_segments(&self) -> impl Iterator<Item = usize> + '_ {
        (0..SEGMENTS).filter(|s| self.p_req[*s] > 0.0)
    }
}

/// Segment `k` covers bearings `[k, k+1)` degrees; the ego's own cell maps to segment 0.
pub fn segment_of(dx: f64, dy: f64) -> usize {
    if dx == 0.0 && dy == 0.0 {
        return 0;
    }
    let deg = degrees_0_360(libm::atan2(dy, dx));
    (libm::floor(deg) as usize).min(SEGMENTS - 1)
}

/// Projects relevant cells into segments, keeping the max value and the max
/// center distance per segment.
pub fn to_polar(grid: &AttentionGrid) -> PolarRequirementMap {
    let spec = grid.spec();
    let mut out = PolarRequirementMap::empty();
    for cell in grid.relevant_cells() {
        let value = grid.get(cell);
        let off = spec.center_offset(cell);
        let seg = segment_of(off.x, off.y);
        let dist = off.norm();
        out.p_req[seg] = out.p_req[seg].max(value);
        out.d_req[seg] = out.d_req[seg].max(dist);
    }
    out
}
