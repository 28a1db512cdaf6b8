use crate::engine::{pixelate, summarize, PixelatedGrid, SummaryTable};
use crate::error::Result;
use crate::grid::PredictionGrid;
use crate::ladder::{
    big_pixel_stats, build_ladder, partition_grid, BigPixelPartition, ScaleMode, SizeLadder,
};
use crate::quantile::{allocate, AllocationMap, DEGENERATE_WARNING};

/// Parameters that fully determine a pixelation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelationParams {
    pub num_sizes: usize,
    pub scale: ScaleMode,
    pub factor: u64,
    /// Lower bound on the number of big pixels along x and y.
    pub min_big: (usize, usize),
}

impl Default for PixelationParams {
    /// Six sizes growing by doubling, at least 12 big pixels per axis.
    fn default() -> Self {
        PixelationParams {
            num_sizes: 6,
            scale: ScaleMode::Imult,
            factor: 1,
            min_big: (12, 12),
        }
    }
}

/// Everything produced by one end-to-end run.
#[derive(Debug, Clone)]
pub struct Pixelation {
    pub ladder: SizeLadder,
    pub partition: BigPixelPartition,
    pub alloc: AllocationMap,
    pub pixelated: PixelatedGrid,
    pub summary: SummaryTable,
    pub warnings: Vec<String>,
}

/// Ladder, partition, statistics, allocation, pixelation and summary in one call.
pub fn run(grid: &PredictionGrid, params: &PixelationParams) -> Result<Pixelation> {
    let (ladder, partition, alloc) = allocate_grid(grid, params)?;
    let pixelated = pixelate(grid, &partition, &alloc, &ladder)?;
    let summary = summarize(&pixelated, &alloc, &ladder, grid.spec());
    let mut warnings = Vec::new();
    if alloc.degenerate {
        warnings.push(DEGENERATE_WARNING.to_string());
    }
    Ok(Pixelation {
        ladder,
        partition,
        alloc,
        pixelated,
        summary,
        warnings,
    })
}

/// The steps of [`run`] up to and including quantile allocation.
pub fn allocate_grid(
    grid: &PredictionGrid,
    params: &PixelationParams,
) -> Result<(SizeLadder, BigPixelPartition, AllocationMap)> {
    let ladder = build_ladder(params.num_sizes, params.scale, params.factor)?;
    let geometry = partition_grid(grid.spec(), &ladder, params.min_big)?;
    let partition = big_pixel_stats(grid, &geometry)?;
    let alloc = allocate(&partition)?;
    Ok((ladder, partition, alloc))
}
