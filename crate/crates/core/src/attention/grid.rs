//! Ego-centered Cartesian relevance grids.
//!
//! Cell `(col, row)` has its center at `origin + ((col - half) * res, (row - half) * res)`
//! where `half = size / 2`; `row` grows towards world +y. The grid is
//! axis-aligned with the world, not with the ego heading.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::Point2;

pub const DEFAULT_GRID_SIZE: usize = 151;
pub const DEFAULT_RESOLUTION_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid size must be odd and positive, got {0}")]
    EvenSize(usize),
    #[error("grid resolution must be positive and finite, got {0}")]
    BadResolution(f64),
    #[error("layers do not share one grid frame")]
    SpecMismatch,
    #[error("dilation kernel must be odd and >= 1, got {0}")]
    BadKernel(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    size: usize,
    resolution: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            size: DEFAULT_GRID_SIZE,
            resolution: DEFAULT_RESOLUTION_M,
        }
    }
}

impl GridSpec {
    pub fn new(size: usize, resolution: f64) -> Result<Self, GridError> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(GridError::EvenSize(size));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(GridError::BadResolution(resolution));
        }
        Ok(Self { size, resolution })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn half(&self) -> usize {
        self.size / 2
    }

    pub fn cell_count(&self) -> usize {
        self.size * self.size
    }

    /// Distance from the center to a grid corner, meters.
    pub fn corner_radius(&self) -> f64 {
        (self.half() as f64 + 0.5) * self.resolution * core::f64::consts::SQRT_2
    }

    /// Cell holding an ego-relative offset; the nearest cell center wins and
    /// exact half-way points round away from the ego.
    pub fn cell_of_offset(&self, offset: Point2) -> Option<Cell> {
        let half = self.half() as f64;
        let c = libm::round(offset.x / self.resolution) + half;
        let r = libm::round(offset.y / self.resolution) + half;
        let max = self.size as f64;
        if c >= 0.0 && c < max && r >= 0.0 && r < max {
            Some(Cell {
                col: c as usize,
                row: r as usize,
            })
        } else {
            None
        }
    }

    /// Ego-relative offset of a cell center.
    pub fn center_offset(&self, cell: Cell) -> Point2 {
        let half = self.half() as isize;
        Point2::new(
            (cell.col as isize - half) as f64 * self.resolution,
            (cell.row as isize - half) as f64 * self.resolution,
        )
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.size + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell {
            col: index % self.size,
            row: index / self.size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

/// A single attention layer; each produced cell holds 0 or 1 before combination.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrid {
    spec: GridSpec,
    origin: Point2,
    values: Vec<f64>,
}

impl LayerGrid {
    pub fn zeros(spec: GridSpec, origin: Point2) -> Self {
        Self {
            spec,
            origin,
            values: vec![0.0; spec.cell_count()],
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.values[self.spec.index(cell)]
    }

    pub fn set(&mut self, cell: Cell, value: f64) {
        let i = self.spec.index(cell);
        self.values[i] = value;
    }

    /// Sets the cell containing world point `p` to 1; points off the grid are ignored.
    pub fn mark_world(&mut self, p: Point2) -> bool {
        self.mark_offset(p - self.origin)
    }

    pub fn mark_offset(&mut self, offset: Point2) -> bool {
        match self.spec.cell_of_offset(offset) {
            Some(cell) => {
                self.set(cell, 1.0);
                true
            }
            None => false,
        }
    }

    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    /// Cell-wise maximum, used to merge projections carrying the same relevance.
    pub fn max_merge(&mut self, other: &LayerGrid) -> Result<(), GridError> {
        if self.spec != other.spec || self.origin != other.origin {
            return Err(GridError::SpecMismatch);
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = a.max(*b);
        }
        Ok(())
    }
}

/// Square max-dilation; border cells use the truncated neighbourhood.
pub fn dilate(layer: &LayerGrid, kernel: usize) -> Result<LayerGrid, GridError> {
    if kernel == 0 || kernel.is_multiple_of(2) {
        return Err(GridError::BadKernel(kernel));
    }
    let reach = kernel / 2;
    if reach == 0 {
        return Ok(layer.clone());
    }
    let n = layer.spec.size;
    let src = &layer.values;
    if src.iter().all(|v| *v >= 0.0) {
        // sparse layers: paint each nonzero cell's box
        let mut out = vec![0.0f64; src.len()];
        for (i, &v) in src.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let (row, col) = (i / n, i % n);
            for r in row.saturating_sub(reach)..=(row + reach).min(n - 1) {
                for x in &mut out[r * n + col.saturating_sub(reach)..=r * n + (col + reach).min(n - 1)] {
                    if v > *x {
                        *x = v;
                    }
                }
            }
        }
        return Ok(LayerGrid {
            spec: layer.spec,
            origin: layer.origin,
            values: out,
        });
    }
    // separable: rows, then columns
    let mut tmp = vec![0.0; src.len()];
    for row in 0..n {
        for col in 0..n {
            let lo = col.saturating_sub(reach);
            let hi = (col + reach).min(n - 1);
            let mut m = f64::NEG_INFINITY;
            for c in lo..=hi {
                m = m.max(src[row * n + c]);
            }
            tmp[row * n + col] = m;
        }
    }
    let mut out = vec![0.0; src.len()];
    for row in 0..n {
        let lo = row.saturating_sub(reach);
        let hi = (row + reach).min(n - 1);
        for col in 0..n {
            let mut m = f64::NEG_INFINITY;
            for r in lo..=hi {
                m = m.max(tmp[r * n + col]);
            }
            out[row * n + col] = m;
        }
    }
    Ok(LayerGrid {
        spec: layer.spec,
        origin: layer.origin,
        values: out,
    })
}

/// The multi-layer attention map: per-cell performance requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGrid {
    spec: GridSpec,
    origin: Point2,
    values: Vec<f64>,
    theta_rel: f64,
}

impl AttentionGrid {
    pub fn zeros(spec: GridSpec, origin: Point2, theta_rel: f64) -> Self {
        Self {
            spec,
            origin,
            values: vec![0.0; spec.cell_count()],
            theta_rel,
        }
    }

    /// Every cell at requirement `value`; the naive baseline's "everything relevant" map.
    pub fn filled(spec: GridSpec, origin: Point2, value: f64) -> Self {
        Self {
            spec,
            origin,
            values: vec![value; spec.cell_count()],
            theta_rel: 0.0,
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn theta_rel(&self) -> f64 {
        self.theta_rel
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.values[self.spec.index(cell)]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Requirement at a world point; 0 off the grid.
    pub fn requirement_at(&self, p: Point2) -> f64 {
        self.spec
            .cell_of_offset(p - self.origin)
            .map_or(0.0, |c| self.get(c))
    }

    /// Binary data gate: true iff the point's cell is relevant.
    pub fn is_relevant_at(&self, p: Point2) -> bool {
        self.requirement_at(p) > self.theta_rel
    }

    /// Cells with value strictly above `theta_rel`, in index order.
    pub fn relevant_cells(&self) -> Vec<Cell> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > self.theta_rel)
            .map(|(i, _)| self.spec.cell_at(i))
            .collect()
    }
}

/// Cell-wise sum of layers. An empty slice yields the zero grid for `spec`/`origin`.
pub fn combine(
    spec: GridSpec,
    origin: Point2,
    layers: &[LayerGrid],
    theta_rel: f64,
) -> Result<AttentionGrid, GridError> {
    let mut out = AttentionGrid::zeros(spec, origin, theta_rel);
    for layer in layers {
        if layer.spec != spec || layer.origin != origin {
            return Err(GridError::SpecMismatch);
        }
        for (acc, v) in out.values.iter_mut().zip(&layer.values) {
            *acc += *v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> GridSpec {
        GridSpec::new(n, 1.0).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert_eq!(GridSpec::new(150, 1.0), Err(GridError::EvenSize(150)));
        assert_eq!(GridSpec::new(151, 0.0), Err(GridError::BadResolution(0.0)));
        let s = GridSpec::default();
        assert_eq!((s.size(), s.resolution()), (151, 1.0));
    }

    #[test]
    fn cell_mapping_rounds_to_nearest_center() {
        let s = spec(11);
        assert_eq!(s.cell_of_offset(Point2::new(0.0, 0.0)), Some(Cell { col: 5, row: 5 }));
        assert_eq!(s.cell_of_offset(Point2::new(0.49, -0.49)), Some(Cell { col: 5, row: 5 }));
        assert_eq!(s.cell_of_offset(Point2::new(0.5, -0.5)), Some(Cell { col: 6, row: 4 }));
        assert_eq!(s.cell_of_offset(Point2::new(5.49, 0.0)), Some(Cell { col: 10, row: 5 }));
        assert_eq!(s.cell_of_offset(Point2::new(5.5, 0.0)), None);
        assert_eq!(s.center_offset(Cell { col: 10, row: 0 }), Point2::new(5.0, -5.0));
    }

    #[test]
    fn dilation_of_center_and_corner() {
        let s = spec(11);
        let mut l = LayerGrid::zeros(s, Point2::default());
        l.set(Cell { col: 5, row: 5 }, 1.0);
        assert_eq!(dilate(&l, 5).unwrap().count_nonzero(), 25);
        assert_eq!(dilate(&l, 1).unwrap(), l);
        let mut corner = LayerGrid::zeros(s, Point2::default());
        corner.set(Cell { col: 0, row: 10 }, 1.0);
        assert_eq!(dilate(&corner, 5).unwrap().count_nonzero(), 9);
        assert_eq!(dilate(&l, 4), Err(GridError::BadKernel(4)));
    }

    #[test]
    fn combine_sums_and_checks_frames() {
        let s = spec(5);
        let o = Point2::default();
        let c = Cell { col: 2, row: 2 };
        let mut a = LayerGrid::zeros(s, o);
        a.set(c, 1.0);
        let g = combine(s, o, &[a.clone(), a.clone(), a.clone()], 0.0).unwrap();
        assert_eq!(g.get(c), 3.0);
        assert_eq!(combine(s, o, &[], 0.0).unwrap().max_value(), 0.0);
        let moved = LayerGrid::zeros(s, Point2::new(1.0, 0.0));
        assert_eq!(combine(s, o, &[a, moved], 0.0), Err(GridError::SpecMismatch));
    }

    #[test]
    fn relevance_is_strict() {
        let s = spec(3);
        let o = Point2::default();
        let mut a = LayerGrid::zeros(s, o);
        a.set(Cell { col: 0, row: 0 }, 1.0);
        a.set(Cell { col: 2, row: 2 }, 1.0);
        let mut b = LayerGrid::zeros(s, o);
        b.set(Cell { col: 2, row: 2 }, 1.0);
        assert!(combine(s, o, &[], 0.0).unwrap().relevant_cells().is_empty());
        let g = combine(s, o, &[a.clone()], 0.0).unwrap();
        assert_eq!(g.relevant_cells().len(), 2);
        let g = combine(s, o, &[a, b], 1.0).unwrap();
        assert_eq!(g.relevant_cells(), [Cell { col: 2, row: 2 }]);
    }
}
