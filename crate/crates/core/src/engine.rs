//! Nested-pixel averaging inside each allocated big pixel.
//!
//! A big pixel allocated to interval `k` is cut into `s_k x s_k` blocks
//! anchored at its own lower-left cell. Each block that holds observed cells
//! becomes one nested pixel whose prediction and uncertainty are the plain
//! means over those cells. Missing and zero-with-certainty cells are never
//! touched.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::grid::{CellState, LatticeSpec, PredictionGrid};
use crate::ladder::{BigPixelPartition, SizeLadder};
use crate::quantile::AllocationMap;

/// Output cell of a pixelated grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisplayCell {
    /// An observed cell showing the mean prediction of its nested pixel.
    Pixel {
        value: f64,
        size_class: usize,
        pixel_id: u64,
    },
    Missing,
    CertainZero,
}

impl DisplayCell {
    fn bit_eq(&self, other: &DisplayCell) -> bool {
        match (self, other) {
            (
                DisplayCell::Pixel {
                    value: a,
                    size_class: ka,
                    pixel_id: ia,
                },
                DisplayCell::Pixel {
                    value: b,
                    size_class: kb,
                    pixel_id: ib,
                },
            ) => a.to_bits() == b.to_bits() && ka == kb && ia == ib,
            (DisplayCell::Missing, DisplayCell::Missing) => true,
            (DisplayCell::CertainZero, DisplayCell::CertainZero) => true,
            _ => false,
        }
    }
}

/// A block of cells averaged into one displayed value.
///
/// `id` is the row-major index of the block's lower-left (anchor) cell, which
/// identifies the (big pixel, block) pair uniquely and stably.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedPixel {
    pub id: u64,
    pub big_index: usize,
    pub size_class: usize,
    pub cols: Range<usize>,
    pub rows: Range<usize>,
    pub prediction_mean: f64,
    pub uncertainty_mean: f64,
    pub included_count: usize,
}

impl NestedPixel {
    fn bit_eq(&self, other: &NestedPixel) -> bool {
        self.id == other.id
            && self.big_index == other.big_index
            && self.size_class == other.size_class
            && self.cols == other.cols
            && self.rows == other.rows
            && self.prediction_mean.to_bits() == other.prediction_mean.to_bits()
            && self.uncertainty_mean.to_bits() == other.uncertainty_mean.to_bits()
            && self.included_count == other.included_count
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PixelatedGrid {
    pub spec: LatticeSpec,
    pub sizes: Vec<u64>,
    pub cells: Vec<DisplayCell>,
    /// Nested pixels sorted by id.
    pub pixels: Vec<NestedPixel>,
}

impl PixelatedGrid {
    pub fn pixel(&self, id: u64) -> Option<&NestedPixel> {
        self.pixels
            .binary_search_by_key(&id, |p| p.id)
            .ok()
            .map(|i| &self.pixels[i])
    }

    pub fn cell(&self, i: usize, j: usize) -> DisplayCell {
        self.cells[self.spec.index(i, j)]
    }

    /// Range of displayed values over observed cells, if any.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        self.pixels.iter().fold(None, |acc, p| {
            let v = p.prediction_mean;
            Some(match acc {
                None => (v, v),
                Some((lo, hi)) => (f64::min(lo, v), f64::max(hi, v)),
            })
        })
    }

    /// Bitwise equality of every cell and nested pixel.
    pub fn bit_eq(&self, other: &PixelatedGrid) -> bool {
        self.spec == other.spec
            && self.sizes == other.sizes
            && self.cells.len() == other.cells.len()
            && self.pixels.len() == other.pixels.len()
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| a.bit_eq(b))
            && self
                .pixels
                .iter()
                .zip(&other.pixels)
                .all(|(a, b)| a.bit_eq(b))
    }
}

fn check_inputs(
    grid: &PredictionGrid,
    partition: &BigPixelPartition,
    alloc: &AllocationMap,
    ladder: &SizeLadder,
) -> Result<()> {
    let spec = grid.spec();
    let fail = |msg: String| Err(Error::InconsistentInputs(msg));
    if partition.n_x != spec.n_x || partition.n_y != spec.n_y {
        return fail(format!(
            "partition covers {}x{} cells, grid is {}x{}",
            partition.n_x, partition.n_y, spec.n_x, spec.n_y
        ));
    }
    if partition.big_side as u64 != ladder.top() || partition.num_sizes != ladder.num_sizes() {
        return fail("partition was not built from this ladder".into());
    }
    if alloc.num_sizes != ladder.num_sizes() || alloc.intervals.len() != partition.pixels.len() {
        return fail("allocation does not match the partition".into());
    }
    for (index, (big, interval)) in partition.pixels.iter().zip(&alloc.intervals).enumerate() {
        match interval {
            Some(k) if (1..=ladder.num_sizes()).contains(k) && big.included_count > 0 => {}
            None if big.included_count == 0 => {}
            _ => {
                return fail(format!(
                    "big pixel {index} has interval {interval:?} with {} observed cells",
                    big.included_count
                ))
            }
        }
    }
    Ok(())
}

/// Pixelates `grid` according to the allocation.
pub fn pixelate(
    grid: &PredictionGrid,
    partition: &BigPixelPartition,
    alloc: &AllocationMap,
    ladder: &SizeLadder,
) -> Result<PixelatedGrid> {
    check_inputs(grid, partition, alloc, ladder)?;
    let spec = *grid.spec();
    let source = grid.cells();
    let mut cells: Vec<DisplayCell> = source
        .iter()
        .map(|c| match c {
            CellState::Missing => DisplayCell::Missing,
            CellState::CertainZero => DisplayCell::CertainZero,
            // overwritten below: every observed cell lies in an allocated big pixel
            CellState::Observed { .. } => DisplayCell::Missing,
        })
        .collect();
    let mut pixels = Vec::new();

    for (big_index, (big, interval)) in partition.pixels.iter().zip(&alloc.intervals).enumerate() {
        let Some(k) = *interval else { continue };
        let side = ladder.side(k) as usize;
        for y0 in big.rows.clone().step_by(side) {
            let rows = y0..(y0 + side).min(big.rows.end);
            for x0 in big.cols.clone().step_by(side) {
                let cols = x0..(x0 + side).min(big.cols.end);
                let mut count = 0usize;
                let mut sum_v = 0.0f64;
                let mut sum_u = 0.0f64;
                for j in rows.clone() {
                    let row = spec.index(0, j);
                    for cell in &source[row + cols.start..row + cols.end] {
                        if let CellState::Observed { value, uncertainty } = *cell {
                            count += 1;
                            sum_v += value;
                            sum_u += uncertainty;
                        }
                    }
                }
                if count == 0 {
                    continue;
                }
                let id = spec.index(x0, y0) as u64;
                let mean = sum_v / count as f64;
                for j in rows.clone() {
                    let row = spec.index(0, j);
                    for i in cols.clone() {
                        if source[row + i].is_observed() {
                            cells[row + i] = DisplayCell::Pixel {
                                value: mean,
                                size_class: k,
                                pixel_id: id,
                            };
                        }
                    }
                }
                pixels.push(NestedPixel {
                    id,
                    big_index,
                    size_class: k,
                    cols,
                    rows: rows.clone(),
                    prediction_mean: mean,
                    uncertainty_mean: sum_u / count as f64,
                    included_count: count,
                });
            }
        }
    }
    pixels.sort_by_key(|p| p.id);
    Ok(PixelatedGrid {
        spec,
        sizes: ladder.sizes().to_vec(),
        cells,
        pixels,
    })
}

/// Reference implementation of [`pixelate`]: every observed cell independently
/// recomputes its big pixel and block, then re-averages that block from scratch.
/// Quadratic in block size and intentionally unoptimised.
pub fn pixelate_naive(
    grid: &PredictionGrid,
    partition: &BigPixelPartition,
    alloc: &AllocationMap,
    ladder: &SizeLadder,
) -> Result<PixelatedGrid> {
    check_inputs(grid, partition, alloc, ladder)?;
    let spec = *grid.spec();
    let big_side = ladder.top() as usize;
    let n_big_x = spec.n_x.div_ceil(big_side);
    let mut cells = Vec::with_capacity(spec.len());
    let mut pixels: BTreeMap<u64, NestedPixel> = BTreeMap::new();

    for j in 0..spec.n_y {
        for i in 0..spec.n_x {
            let display = match grid.cell(i, j) {
                CellState::Missing => DisplayCell::Missing,
                CellState::CertainZero => DisplayCell::CertainZero,
                CellState::Observed { .. } => {
                    let (bx, by) = (i / big_side, j / big_side);
                    let big_index = by * n_big_x + bx;
                    let k = alloc.intervals[big_index].ok_or_else(|| {
                        Error::InconsistentInputs(format!("cell ({i}, {j}) is unallocated"))
                    })?;
                    let side = ladder.side(k) as usize;
                    let (big_x0, big_y0) = (bx * big_side, by * big_side);
                    let big_x1 = (big_x0 + big_side).min(spec.n_x);
                    let big_y1 = (big_y0 + big_side).min(spec.n_y);
                    let x0 = big_x0 + (i - big_x0) / side * side;
                    let y0 = big_y0 + (j - big_y0) / side * side;
                    let x1 = (x0 + side).min(big_x1);
                    let y1 = (y0 + side).min(big_y1);

                    let mut count = 0usize;
                    let mut sum_v = 0.0;
                    let mut sum_u = 0.0;
                    for jj in y0..y1 {
                        for ii in x0..x1 {
                            if let CellState::Observed { value, uncertainty } = grid.cell(ii, jj) {
                                count += 1;
                                sum_v += value;
                                sum_u += uncertainty;
                            }
                        }
                    }
                    let id = (y0 * spec.n_x + x0) as u64;
                    let mean = sum_v / count as f64;
                    pixels.entry(id).or_insert_with(|| NestedPixel {
                        id,
                        big_index,
                        size_class: k,
                        cols: x0..x1,
                        rows: y0..y1,
                        prediction_mean: mean,
                        uncertainty_mean: sum_u / count as f64,
                        included_count: count,
                    });
                    DisplayCell::Pixel {
                        value: mean,
                        size_class: k,
                        pixel_id: id,
                    }
                }
            };
            cells.push(display);
        }
    }
    Ok(PixelatedGrid {
        spec,
        sizes: ladder.sizes().to_vec(),
        cells,
        pixels: pixels.into_values().collect(),
    })
}

/// One row of the pixel-dimension summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub size_class: usize,
    pub side_cells: u64,
    /// Pixel width in projection units.
    pub side_x: f64,
    /// Pixel height in projection units.
    pub side_y: f64,
    pub cells_per_pixel: u64,
    pub big_pixel_count: usize,
    pub nested_pixel_count: usize,
    /// Exclusive lower bound on average uncertainty (`-inf` for the first class).
    pub u_lower: f64,
    /// Inclusive upper bound on average uncertainty (`+inf` for the last class).
    pub u_upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn allocated_big_pixels(&self) -> usize {
        self.rows.iter().map(|r| r.big_pixel_count).sum()
    }
}

/// Tabulates how each pixel size maps to an interval of average uncertainty.
///
/// When no big pixel was allocated and `K > 1`, the inner bounds are NaN.
pub fn summarize(
    pixelated: &PixelatedGrid,
    alloc: &AllocationMap,
    ladder: &SizeLadder,
    spec: &LatticeSpec,
) -> SummaryTable {
    let counts = alloc.counts();
    let mut nested = vec![0usize; ladder.num_sizes()];
    for p in &pixelated.pixels {
        nested[p.size_class - 1] += 1;
    }
    let bound = |k: usize| -> f64 {
        if k == 0 {
            f64::NEG_INFINITY
        } else if k == ladder.num_sizes() {
            f64::INFINITY
        } else {
            alloc.boundaries.get(k - 1).copied().unwrap_or(f64::NAN)
        }
    };
    let rows = (1..=ladder.num_sizes())
        .map(|k| {
            let side = ladder.side(k);
            SummaryRow {
                size_class: k,
                side_cells: side,
                side_x: side as f64 * spec.cell_w,
                side_y: side as f64 * spec.cell_h,
                cells_per_pixel: side * side,
                big_pixel_count: counts[k - 1],
                nested_pixel_count: nested[k - 1],
                u_lower: bound(k - 1),
                u_upper: bound(k),
            }
        })
        .collect();
    SummaryTable { rows }
}
