//! PNG and SVG rendering of pixelated maps and allocation maps.
//!
//! Every cell is painted one flat colour; row `n_y - 1` is drawn at the top.
//! PNGs are 8-bit RGB with fixed encoder settings and no ancillary chunks, so
//! identical inputs give identical bytes.

use std::fmt::Write as _;

use crate::engine::{DisplayCell, PixelatedGrid};
use crate::error::{Error, Result};
use crate::ladder::BigPixelPartition;
use crate::quantile::AllocationMap;

pub type Rgb = [u8; 3];

/// Cream to dark red.
pub const DEFAULT_PALETTE: [Rgb; 5] = [
    [255, 247, 236],
    [253, 212, 158],
    [252, 141, 89],
    [215, 48, 31],
    [127, 0, 0],
];
pub const DEFAULT_MISSING: Rgb = [49, 130, 189];
pub const DEFAULT_ZERO: Rgb = [255, 255, 255];

/// Height in image pixels of the legend strip.
pub const LEGEND_HEIGHT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub px_per_cell: usize,
    pub palette: Vec<Rgb>,
    pub missing_color: Rgb,
    pub zero_color: Rgb,
    pub value_range: Option<(f64, f64)>,
    pub legend: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            px_per_cell: 1,
            palette: DEFAULT_PALETTE.to_vec(),
            missing_color: DEFAULT_MISSING,
            zero_color: DEFAULT_ZERO,
            value_range: None,
            legend: false,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.px_per_cell == 0 {
            return Err(Error::InvalidParameter(
                "px_per_cell must be at least 1".into(),
            ));
        }
        if self.palette.len() < 2 {
            return Err(Error::InvalidParameter(
                "palette needs at least two stops".into(),
            ));
        }
        if self.palette.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(
                "adjacent palette stops must differ".into(),
            ));
        }
        if let Some((lo, hi)) = self.value_range {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParameter(format!(
                    "bad value range ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    /// Colour at position `t` in `[0, 1]` along the palette, interpolated linearly between stops.
    pub fn palette_color(&self, t: f64) -> Rgb {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        let n = self.palette.len();
        let seg = t * (n - 1) as f64;
        let idx = (seg.floor() as usize).min(n - 2);
        let f = seg - idx as f64;
        let (a, b) = (self.palette[idx], self.palette[idx + 1]);
        std::array::from_fn(|c| {
            (f64::from(a[c]) + f * (f64::from(b[c]) - f64::from(a[c]))).round() as u8
        })
    }
}

/// Palette position of `value` on the range `[lo, hi]`, clamped to `[0, 1]`.
pub fn palette_position(value: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((value - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Row-major RGB raster, top row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    fn filled(width: usize, height: usize, color: Rgb) -> Self {
        RgbImage {
            width,
            height,
            data: color.repeat(width * height),
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        let o = 3 * (y * self.width + x);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    fn fill_rect(&mut self, x0: usize, y0: usize, w: usize, h: usize, color: Rgb) {
        for y in y0..y0 + h {
            let row = 3 * (y * self.width);
            for px in self.data[row + 3 * x0..row + 3 * (x0 + w)].chunks_exact_mut(3) {
                px.copy_from_slice(&color);
            }
        }
    }

    pub fn distinct_colors(&self) -> usize {
        let mut colors: Vec<Rgb> = self
            .data
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        colors.sort_unstable();
        colors.dedup();
        colors.len()
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut bytes = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut bytes, self.width as u32, self.height as u32);
            encoder.set_color(png::ColorType::Rgb);
            encoder.set_depth(png::BitDepth::Eight);
            encoder.set_compression(png::Compression::Balanced);
            encoder.set_filter(png::Filter::Sub);
            let mut writer = encoder
                .write_header()
                .map_err(|e| Error::Encode(e.to_string()))?;
            writer
                .write_image_data(&self.data)
                .map_err(|e| Error::Encode(e.to_string()))?;
            writer.finish().map_err(|e| Error::Encode(e.to_string()))?;
        }
        Ok(bytes)
    }
}

/// A raster plus any warnings raised while colouring it.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub image: RgbImage,
    pub warnings: Vec<String>,
}

struct Colorizer {
    lo: f64,
    hi: f64,
    degenerate: bool,
}

impl Colorizer {
    fn new(pixelated: &PixelatedGrid, config: &RenderConfig) -> (Self, Vec<String>) {
        let (lo, hi) = config
            .value_range
            .or_else(|| pixelated.value_range())
            .unwrap_or((0.0, 1.0));
        let mut warnings = Vec::new();
        let degenerate = hi <= lo && !pixelated.pixels.is_empty();
        if degenerate {
            warnings.push(format!(
                "display values span a degenerate range [{lo}, {hi}]; observed cells use the lowest palette stop"
            ));
        }
        (Colorizer { lo, hi, degenerate }, warnings)
    }

    fn color(&self, cell: &DisplayCell, config: &RenderConfig) -> Rgb {
        match *cell {
            DisplayCell::Pixel { value, .. } => {
                let t = if self.degenerate {
                    0.0
                } else {
                    palette_position(value, self.lo, self.hi)
                };
                config.palette_color(t)
            }
            DisplayCell::Missing => config.missing_color,
            DisplayCell::CertainZero => config.zero_color,
        }
    }
}

fn paint_cells(
    n_x: usize,
    n_y: usize,
    ppc: usize,
    legend_rows: usize,
    color_of: impl Fn(usize, usize) -> Rgb,
) -> RgbImage {
    let mut image = RgbImage::filled(n_x * ppc, n_y * ppc + legend_rows, [255, 255, 255]);
    for j in 0..n_y {
        let top = (n_y - 1 - j) * ppc;
        for i in 0..n_x {
            image.fill_rect(i * ppc, top, ppc, ppc, color_of(i, j));
        }
    }
    image
}

/// Rasterises the pixelated map, with a continuous palette legend when enabled.
pub fn map_image(pixelated: &PixelatedGrid, config: &RenderConfig) -> Result<Rendered> {
    config.validate()?;
    let spec = &pixelated.spec;
    let (colorizer, warnings) = Colorizer::new(pixelated, config);
    let legend_rows = if config.legend { LEGEND_HEIGHT } else { 0 };
    let ppc = config.px_per_cell;
    let mut image = paint_cells(spec.n_x, spec.n_y, ppc, legend_rows, |i, j| {
        colorizer.color(&pixelated.cell(i, j), config)
    });
    if config.legend {
        let width = image.width;
        for x in 0..width {
            let t = if width > 1 {
                x as f64 / (width - 1) as f64
            } else {
                0.0
            };
            image.fill_rect(x, spec.n_y * ppc, 1, LEGEND_HEIGHT, config.palette_color(t));
        }
    }
    Ok(Rendered { image, warnings })
}

/// PNG bytes of the pixelated map.
pub fn render_map(pixelated: &PixelatedGrid, config: &RenderConfig) -> Result<Vec<u8>> {
    let rendered = map_image(pixelated, config)?;
    for w in &rendered.warnings {
        log::warn!("{w}");
    }
    rendered.image.encode_png()
}

/// Colour of quantile interval `k` out of `num_sizes`; the last interval is darkest.
pub fn interval_color(k: usize, num_sizes: usize, config: &RenderConfig) -> Rgb {
    let t = if num_sizes <= 1 {
        1.0
    } else {
        (k - 1) as f64 / (num_sizes - 1) as f64
    };
    config.palette_color(t)
}

/// Rasterises the quantile-interval allocation, one flat colour per big pixel.
pub fn allocation_image(
    partition: &BigPixelPartition,
    alloc: &AllocationMap,
    config: &RenderConfig,
) -> Result<RgbImage> {
    config.validate()?;
    if alloc.intervals.len() != partition.pixels.len() {
        return Err(Error::InconsistentInputs(
            "allocation does not match the partition".into(),
        ));
    }
    let side = partition.big_side;
    let legend_rows = if config.legend { LEGEND_HEIGHT } else { 0 };
    let ppc = config.px_per_cell;
    let mut image = paint_cells(
        partition.n_x,
        partition.n_y,
        ppc,
        legend_rows,
        |i, j| match alloc.intervals[partition.index(i / side, j / side)] {
            Some(k) => interval_color(k, alloc.num_sizes, config),
            None => config.missing_color,
        },
    );
    if config.legend {
        let width = image.width;
        let k_total = alloc.num_sizes;
        for x in 0..width {
            let k = (x * k_total / width.max(1)).min(k_total - 1) + 1;
            image.fill_rect(
                x,
                partition.n_y * ppc,
                1,
                LEGEND_HEIGHT,
                interval_color(k, k_total, config),
            );
        }
    }
    Ok(image)
}

pub fn render_allocation(
    partition: &BigPixelPartition,
    alloc: &AllocationMap,
    config: &RenderConfig,
) -> Result<Vec<u8>> {
    allocation_image(partition, alloc, config)?.encode_png()
}

fn hex(c: Rgb) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// SVG 1.1 document with one rectangle per nested pixel followed by one per
/// missing or zero-with-certainty cell.
pub fn render_svg(pixelated: &PixelatedGrid, config: &RenderConfig) -> Result<String> {
    config.validate()?;
    let spec = &pixelated.spec;
    let ppc = config.px_per_cell;
    let (colorizer, warnings) = Colorizer::new(pixelated, config);
    for w in &warnings {
        log::warn!("{w}");
    }
    let (width, height) = (spec.n_x * ppc, spec.n_y * ppc);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" shape-rendering="crispEdges">"#
    );
    let mut rect = |x0: usize, y1: usize, w: usize, h: usize, color: Rgb| {
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            x0 * ppc,
            (spec.n_y - y1) * ppc,
            w * ppc,
            h * ppc,
            hex(color)
        );
    };
    for p in &pixelated.pixels {
        let cell = DisplayCell::Pixel {
            value: p.prediction_mean,
            size_class: p.size_class,
            pixel_id: p.id,
        };
        rect(
            p.cols.start,
            p.rows.end,
            p.cols.len(),
            p.rows.len(),
            colorizer.color(&cell, config),
        );
    }
    for (index, cell) in pixelated.cells.iter().enumerate() {
        if matches!(cell, DisplayCell::Pixel { .. }) {
            continue;
        }
        let (i, j) = spec.coords(index);
        rect(i, j + 1, 1, 1, colorizer.color(cell, config));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LatticeSpec;

    #[test]
    fn palette_endpoints_and_midpoints() {
        let config = RenderConfig::default();
        assert_eq!(config.palette_color(0.0), DEFAULT_PALETTE[0]);
        assert_eq!(config.palette_color(1.0), DEFAULT_PALETTE[4]);
        assert_eq!(config.palette_color(0.5), DEFAULT_PALETTE[2]);
        assert_eq!(config.palette_color(-3.0), DEFAULT_PALETTE[0]);
        assert_eq!(config.palette_color(7.0), DEFAULT_PALETTE[4]);
        assert_eq!(palette_position(5.0, 0.0, 10.0), 0.5);
        assert_eq!(palette_position(15.0, 0.0, 10.0), 1.0);
    }

    #[test]
    fn config_validation() {
        let mut config = RenderConfig {
            px_per_cell: 0,
            ..Default::default()
        };
        assert!(config.validate().is_err());
        config.px_per_cell = 1;
        config.palette = vec![[0, 0, 0]];
        assert!(config.validate().is_err());
        config.palette = vec![[0, 0, 0], [0, 0, 0]];
        assert!(config.validate().is_err());
    }

    #[test]
    fn passthrough_cells() {
        let grid = PixelatedGrid {
            spec: LatticeSpec::unit(2, 1).unwrap(),
            sizes: vec![1],
            cells: vec![DisplayCell::Missing, DisplayCell::CertainZero],
            pixels: vec![],
        };
        let config = RenderConfig {
            px_per_cell: 3,
            ..Default::default()
        };
        let img = map_image(&grid, &config).unwrap().image;
        assert_eq!((img.width, img.height), (6, 3));
        for y in 0..3 {
            for x in 0..3 {
                assert_eq!(img.pixel(x, y), DEFAULT_MISSING);
                assert_eq!(img.pixel(x + 3, y), DEFAULT_ZERO);
            }
        }
    }
}
