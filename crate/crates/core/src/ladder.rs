//! Pixel-size ladders and the tiling of a lattice into large initial pixels.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellState, LatticeSpec, PredictionGrid};

/// Largest permitted pixel side, in cells.
pub const MAX_SIDE: u64 = 1 << 31;

/// How successive pixel sides grow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// `s[k+1] = s[k] * (1 + c)`
    Imult,
    /// `s[k+1] = s[k] * (1 + c)^k`
    Iexpn,
}

impl fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleMode::Imult => "imult",
            ScaleMode::Iexpn => "iexpn",
        })
    }
}

impl FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imult" => Ok(ScaleMode::Imult),
            "iexpn" => Ok(ScaleMode::Iexpn),
            other => Err(Error::InvalidParameter(format!(
                "unknown scale mode {other:?}; expected imult or iexpn"
            ))),
        }
    }
}

/// Ordered pixel sides `1 = s_1 < ... < s_K`, each dividing the next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeLadder {
    mode: ScaleMode,
    factor: u64,
    sizes: Vec<u64>,
}

impl SizeLadder {
    pub fn mode(&self) -> ScaleMode {
        self.mode
    }

    pub fn factor(&self) -> u64 {
        self.factor
    }

    pub fn num_sizes(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    /// Side of size class `k` (1-based).
    pub fn side(&self, k: usize) -> u64 {
        self.sizes[k - 1]
    }

    /// Side of the large initial pixels.
    pub fn top(&self) -> u64 {
        *self.sizes.last().expect("ladder is never empty")
    }
}

pub fn build_ladder(num_sizes: usize, mode: ScaleMode, factor: u64) -> Result<SizeLadder> {
    if num_sizes == 0 {
        return Err(Error::InvalidParameter(
            "num_sizes must be at least 1".into(),
        ));
    }
    if factor == 0 {
        return Err(Error::InvalidParameter("factor must be at least 1".into()));
    }
    let overflow = || Error::LadderOverflow {
        num_sizes,
        factor,
        limit: MAX_SIDE,
    };
    let base = factor.checked_add(1).ok_or_else(overflow)?;
    let mut sizes = Vec::with_capacity(num_sizes);
    let mut side = 1u64;
    sizes.push(side);
    for k in 1..num_sizes {
        let step = match mode {
            ScaleMode::Imult => base,
            ScaleMode::Iexpn => base.checked_pow(k as u32).ok_or_else(overflow)?,
        };
        side = side.checked_mul(step).ok_or_else(overflow)?;
        if side > MAX_SIDE {
            return Err(overflow());
        }
        sizes.push(side);
    }
    Ok(SizeLadder {
        mode,
        factor,
        sizes,
    })
}

/// One large initial pixel: a half-open block of cells with its uncertainty statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BigPixel {
    pub ix: usize,
    pub iy: usize,
    pub cols: Range<usize>,
    pub rows: Range<usize>,
    /// Number of observed cells in the block.
    pub included_count: usize,
    /// Mean uncertainty of the observed cells, absent when there are none.
    pub avg_uncertainty: Option<f64>,
}

impl BigPixel {
    pub fn cell_count(&self) -> usize {
        self.cols.len() * self.rows.len()
    }
}

/// Tiling of the lattice into `n_big_x * n_big_y` big pixels, stored row-major from the lower-left.
#[derive(Debug, Clone, PartialEq)]
pub struct BigPixelPartition {
    pub n_x: usize,
    pub n_y: usize,
    pub n_big_x: usize,
    pub n_big_y: usize,
    pub big_side: usize,
    pub num_sizes: usize,
    pub pixels: Vec<BigPixel>,
}

impl BigPixelPartition {
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n_big_x + ix
    }

    /// Average uncertainties of the big pixels that contain observed cells, in storage order.
    pub fn included_uncertainties(&self) -> Vec<f64> {
        self.pixels
            .iter()
            .filter_map(|p| p.avg_uncertainty)
            .collect()
    }

    fn matches(&self, spec: &LatticeSpec) -> bool {
        self.n_x == spec.n_x && self.n_y == spec.n_y
    }
}

/// Largest `K` whose ladder top does not exceed `side_limit`.
fn largest_feasible_num_sizes(mode: ScaleMode, factor: u64, side_limit: usize) -> usize {
    if side_limit == 0 {
        return 0;
    }
    let mut k = 1;
    while let Ok(ladder) = build_ladder(k + 1, mode, factor) {
        if ladder.top() > side_limit as u64 {
            break;
        }
        k += 1;
    }
    k
}

/// Tiles the lattice into big pixels of side `s_K` anchored at cell `(0, 0)`.
///
/// The number of big pixels per axis, `ceil(n / s_K)`, must reach the lower
/// bound `min_big`. Edge big pixels are clipped to the grid.
pub fn partition_grid(
    spec: &LatticeSpec,
    ladder: &SizeLadder,
    min_big: (usize, usize),
) -> Result<BigPixelPartition> {
    let (min_x, min_y) = min_big;
    if min_x == 0 || min_y == 0 {
        return Err(Error::InvalidParameter(
            "lower bound on big pixels must be at least 1 per axis".into(),
        ));
    }
    let big_side = ladder.top();
    let side = usize::try_from(big_side).unwrap_or(usize::MAX);
    let n_big_x = spec.n_x.div_ceil(side);
    let n_big_y = spec.n_y.div_ceil(side);
    if n_big_x < min_x || n_big_y < min_y {
        let feasible_side = (spec.n_x / min_x).min(spec.n_y / min_y);
        return Err(Error::GridTooSmall {
            n_x: spec.n_x,
            n_y: spec.n_y,
            big_side,
            n_big_x,
            n_big_y,
            min_x,
            min_y,
            feasible_side,
            feasible_num_sizes: largest_feasible_num_sizes(
                ladder.mode(),
                ladder.factor(),
                feasible_side,
            ),
        });
    }

    let mut pixels = Vec::with_capacity(n_big_x * n_big_y);
    for iy in 0..n_big_y {
        let rows = iy * side..((iy + 1) * side).min(spec.n_y);
        for ix in 0..n_big_x {
            let cols = ix * side..((ix + 1) * side).min(spec.n_x);
            pixels.push(BigPixel {
                ix,
                iy,
                cols,
                rows: rows.clone(),
                included_count: 0,
                avg_uncertainty: None,
            });
        }
    }
    Ok(BigPixelPartition {
        n_x: spec.n_x,
        n_y: spec.n_y,
        n_big_x,
        n_big_y,
        big_side: side,
        num_sizes: ladder.num_sizes(),
        pixels,
    })
}

/// Fills in per-big-pixel observed counts and mean uncertainties.
///
/// Missing and zero-with-certainty cells do not contribute.
pub fn big_pixel_stats(
    grid: &PredictionGrid,
    partition: &BigPixelPartition,
) -> Result<BigPixelPartition> {
    if !partition.matches(grid.spec()) {
        return Err(Error::InconsistentInputs(format!(
            "partition covers {}x{} cells but the grid is {}x{}",
            partition.n_x,
            partition.n_y,
            grid.spec().n_x,
            grid.spec().n_y
        )));
    }
    let spec = grid.spec();
    let cells = grid.cells();
    let mut out = partition.clone();
    for pixel in &mut out.pixels {
        let mut count = 0usize;
        let mut sum = 0.0f64;
        for j in pixel.rows.clone() {
            let row = spec.index(0, j);
            for cell in &cells[row + pixel.cols.start..row + pixel.cols.end] {
                if let CellState::Observed { uncertainty, .. } = *cell {
                    count += 1;
                    sum += uncertainty;
                }
            }
        }
        pixel.included_count = count;
        pixel.avg_uncertainty = (count > 0).then(|| sum / count as f64);
    }
    Ok(out)
}
