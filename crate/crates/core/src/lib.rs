//! Adaptive pixelation of gridded predictions by their uncertainty.
//!
//! Predictions are tiled into large initial pixels; each large pixel's mean
//! uncertainty is ranked against the empirical quantiles of all large pixels,
//! and the quantile interval picks how coarsely the predictions inside it are
//! averaged. Certain regions stay at full resolution, uncertain regions are
//! shown as big flat blocks.
//!
//! ```
//! use pixelate::{pipeline, synth};
//!
//! let grid = synth::bundled_dataset("demo_small").unwrap();
//! let params = pipeline::PixelationParams { min_big: (2, 2), ..Default::default() };
//! let result = pipeline::run(&grid, &params).unwrap();
//! assert_eq!(result.ladder.sizes(), &[1, 2, 4, 8, 16, 32]);
//! assert_eq!(result.summary.rows.len(), 6);
//! ```

pub mod cli;
pub mod engine;
pub mod error;
pub mod grid;
pub mod io;
pub mod ladder;
pub mod manifest;
pub mod pipeline;
pub mod quantile;
pub mod render;
pub mod synth;

pub use engine::{
    pixelate, pixelate_naive, summarize, DisplayCell, NestedPixel, PixelatedGrid, SummaryRow,
    SummaryTable,
};
pub use error::{Error, Result};
pub use grid::{
    build_grid, classify_cell, derive_uncertainty, CellState, LatticeSpec, PredictionGrid, Record,
};
pub use ladder::{
    big_pixel_stats, build_ladder, partition_grid, BigPixel, BigPixelPartition, ScaleMode,
    SizeLadder,
};
pub use pipeline::{Pixelation, PixelationParams};
pub use quantile::{allocate, allocate_intervals, empirical_quantiles, AllocationMap};
