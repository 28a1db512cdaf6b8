//! Text formats: CSV and ESRI ASCII-grid input, pixelated CSV and summary output.
//!
//! Numbers are written in the shortest form that parses back to the same
//! `f64`; magnitudes outside `[1e-5, 1e16)` use exponent notation. Rows are
//! emitted in row-major order from the lower-left cell, so identical inputs
//! always produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use crate::engine::{DisplayCell, PixelatedGrid, SummaryTable};
use crate::error::{Error, Result};
use crate::grid::{
    build_grid, classify_cell, derive_uncertainty, CellState, LatticeSpec, PredictionGrid, Record,
};

/// Column layout of an input CSV, detected from its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvMode {
    /// `x,y,z,u`: uncertainty given directly.
    Uncertainty,
    /// `x,y,z,z_lo,z_hi`: uncertainty is the interval width `z_hi - z_lo`.
    Interval,
}

impl CsvMode {
    pub fn describe(&self) -> &'static str {
        match self {
            CsvMode::Uncertainty => "u",
            CsvMode::Interval => "z_hi-z_lo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryFormat {
    Csv,
    Markdown,
}

pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if v == 0.0 || (1e-5..1e16).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_optional(field: &str, line: usize, column: &str) -> Result<Option<f64>> {
    let field = field.trim();
    if field.is_empty() || field == "NA" {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| Error::ParseError {
            line,
            message: format!("column {column}: cannot parse {field:?}: {e}"),
        })
}

/// Parses CSV text in either schema and builds the grid.
pub fn parse_csv<R: Read>(reader: R, zero_tol: f64) -> Result<(PredictionGrid, CsvMode)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::ParseError {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    let column = |name: &str| names.iter().position(|n| *n == name);
    let (mode, cols) = match names.len() {
        4 => match (column("x"), column("y"), column("z"), column("u")) {
            (Some(x), Some(y), Some(z), Some(u)) => (CsvMode::Uncertainty, vec![x, y, z, u]),
            _ => return Err(Error::SchemaError(names.join(","))),
        },
        5 => match (
            column("x"),
            column("y"),
            column("z"),
            column("z_lo"),
            column("z_hi"),
        ) {
            (Some(x), Some(y), Some(z), Some(lo), Some(hi)) => {
                (CsvMode::Interval, vec![x, y, z, lo, hi])
            }
            _ => return Err(Error::SchemaError(names.join(","))),
        },
        _ => return Err(Error::SchemaError(names.join(","))),
    };

    let mut records = Vec::new();
    let mut lines = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::ParseError {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let get = |slot: usize, name: &str| parse_optional(&row[cols[slot]], line, name);
        let at_line = |source: Error| Error::AtLine {
            line,
            source: Box::new(source),
        };
        let (Some(x), Some(y)) = (get(0, "x")?, get(1, "y")?) else {
            return Err(Error::ParseError {
                line,
                message: "coordinates must be present".into(),
            });
        };
        let value = get(2, "z")?;
        let uncertainty = match mode {
            CsvMode::Uncertainty => get(3, "u")?,
            CsvMode::Interval => match (get(3, "z_lo")?, get(4, "z_hi")?) {
                (Some(lo), Some(hi)) => Some(derive_uncertainty(lo, hi).map_err(at_line)?),
                _ => None,
            },
        };
        records.push(Record::new(x, y, value, uncertainty));
        lines.push(line);
    }
    let grid = build_grid(&records, zero_tol).map_err(|e| {
        let record = match &e {
            Error::IrregularLattice { record, .. }
            | Error::DuplicateCoordinate { record, .. }
            | Error::NegativeUncertainty { record, .. }
            | Error::NonFiniteValue { record, .. } => Some(*record),
            _ => None,
        };
        match record {
            Some(r) => Error::AtLine {
                line: lines[r],
                source: Box::new(e),
            },
            None => e,
        }
    })?;
    Ok((grid, mode))
}

/// Reads a prediction CSV, detecting the schema from the header.
pub fn read_csv(path: impl AsRef<Path>, zero_tol: f64) -> Result<PredictionGrid> {
    read_csv_with_mode(path, zero_tol).map(|(grid, _)| grid)
}

pub fn read_csv_with_mode(
    path: impl AsRef<Path>,
    zero_tol: f64,
) -> Result<(PredictionGrid, CsvMode)> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(std::io::BufReader::new(file), zero_tol)
}

/// Header and values of one ESRI ASCII grid, values in file order (top row first).
#[derive(Debug, Clone, PartialEq)]
pub struct AsciiGrid {
    pub ncols: usize,
    pub nrows: usize,
    pub xll: f64,
    pub yll: f64,
    /// Whether `xll`/`yll` name the lower-left cell centre rather than its corner.
    pub center: bool,
    pub cellsize: f64,
    pub nodata: Option<f64>,
    pub values: Vec<f64>,
}

impl AsciiGrid {
    /// Centre of the lower-left cell.
    pub fn origin(&self) -> (f64, f64) {
        if self.center {
            (self.xll, self.yll)
        } else {
            (
                self.xll + self.cellsize / 2.0,
                self.yll + self.cellsize / 2.0,
            )
        }
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        self.nodata == Some(v)
    }

    fn same_geometry(&self, other: &AsciiGrid) -> std::result::Result<(), String> {
        if (self.ncols, self.nrows) != (other.ncols, other.nrows) {
            return Err(format!(
                "{}x{} vs {}x{} cells",
                self.ncols, self.nrows, other.ncols, other.nrows
            ));
        }
        if self.origin() != other.origin() || self.cellsize != other.cellsize {
            return Err(format!(
                "origin {:?} cellsize {} vs origin {:?} cellsize {}",
                self.origin(),
                self.cellsize,
                other.origin(),
                other.cellsize
            ));
        }
        Ok(())
    }
}

pub fn parse_ascii_grid(text: &str) -> Result<AsciiGrid> {
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut center = None;
    let mut cellsize = None;
    let mut nodata = None;
    let mut values = Vec::new();

    let parse_err = |line: usize, message: String| Error::ParseError { line, message };
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut tokens = raw.split_whitespace().peekable();
        let Some(&first) = tokens.peek() else {
            continue;
        };
        if values.is_empty() && first.parse::<f64>().is_err() {
            let key = first.to_ascii_lowercase();
            tokens.next();
            let value = tokens
                .next()
                .ok_or_else(|| parse_err(line, format!("header {first} has no value")))?;
            let number = |v: &str| {
                v.parse::<f64>()
                    .map_err(|e| parse_err(line, format!("header {first}: {e}")))
            };
            let count = |v: &str| {
                v.parse::<usize>()
                    .map_err(|e| parse_err(line, format!("header {first}: {e}")))
            };
            match key.as_str() {
                "ncols" => ncols = Some(count(value)?),
                "nrows" => nrows = Some(count(value)?),
                "xllcorner" | "xllcenter" => {
                    xll = Some(number(value)?);
                    center = Some(key == "xllcenter");
                }
                "yllcorner" | "yllcenter" => yll = Some(number(value)?),
                "cellsize" => cellsize = Some(number(value)?),
                "nodata_value" => nodata = Some(number(value)?),
                _ => return Err(parse_err(line, format!("unknown header key {first}"))),
            }
            continue;
        }
        for token in tokens {
            let v = token
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("cannot parse {token:?}: {e}")))?;
            values.push(v);
        }
    }
    let missing = |key: &str| parse_err(0, format!("missing header {key}"));
    let grid = AsciiGrid {
        ncols: ncols.ok_or_else(|| missing("ncols"))?,
        nrows: nrows.ok_or_else(|| missing("nrows"))?,
        xll: xll.ok_or_else(|| missing("xllcorner"))?,
        yll: yll.ok_or_else(|| missing("yllcorner"))?,
        center: center.unwrap_or(false),
        cellsize: cellsize.ok_or_else(|| missing("cellsize"))?,
        nodata,
        values,
    };
    if grid.values.len() != grid.ncols * grid.nrows {
        return Err(parse_err(
            0,
            format!(
                "expected {} values for {} rows of {} columns, found {}",
                grid.ncols * grid.nrows,
                grid.nrows,
                grid.ncols,
                grid.values.len()
            ),
        ));
    }
    Ok(grid)
}

pub fn read_ascii_grid(path: impl AsRef<Path>) -> Result<AsciiGrid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(&text)
}

/// Combines a prediction layer and an uncertainty layer with identical headers.
/// NODATA in either layer makes the cell missing.
pub fn grid_from_ascii_pair(z: &AsciiGrid, u: &AsciiGrid, zero_tol: f64) -> Result<PredictionGrid> {
    z.same_geometry(u).map_err(Error::HeaderMismatch)?;
    let (ox, oy) = z.origin();
    let spec = LatticeSpec::new(ox, oy, z.cellsize, z.cellsize, z.ncols, z.nrows)?;
    let mut cells = vec![CellState::Missing; spec.len()];
    for r in 0..z.nrows {
        let j = z.nrows - 1 - r;
        for i in 0..z.ncols {
            let (zv, uv) = (z.values[r * z.ncols + i], u.values[r * z.ncols + i]);
            if z.is_nodata(zv) || u.is_nodata(uv) || zv.is_nan() || uv.is_nan() {
                continue;
            }
            let index = spec.index(i, j);
            if uv < 0.0 {
                return Err(Error::NegativeUncertainty {
                    record: index,
                    uncertainty: uv,
                });
            }
            cells[index] = classify_cell(zv, uv, zero_tol);
        }
    }
    PredictionGrid::new(spec, cells)
}

pub fn read_ascii_grid_pair(
    z_path: impl AsRef<Path>,
    u_path: impl AsRef<Path>,
    zero_tol: f64,
) -> Result<PredictionGrid> {
    let z = read_ascii_grid(z_path)?;
    let u = read_ascii_grid(u_path)?;
    grid_from_ascii_pair(&z, &u, zero_tol)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Mode-A CSV (`x,y,z,u`) of a prediction grid. Missing cells have empty fields,
/// zero-with-certainty cells are written as `0,0`.
pub fn grid_csv_string(grid: &PredictionGrid) -> String {
    let mut out = String::from("x,y,z,u\n");
    for r in grid.to_records() {
        let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_number(r.x),
            format_number(r.y),
            opt(r.value),
            opt(r.uncertainty)
        );
    }
    out
}

pub fn write_grid_csv(grid: &PredictionGrid, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &grid_csv_string(grid))
}

pub const PIXELATED_HEADER: &str = "x,y,state,z_display,size_class,pixel_id,pixel_u_mean";

pub fn pixelated_csv_string(pixelated: &PixelatedGrid) -> String {
    let spec = &pixelated.spec;
    let mut out = String::with_capacity(64 * spec.len());
    out.push_str(PIXELATED_HEADER);
    out.push('\n');
    for (index, cell) in pixelated.cells.iter().enumerate() {
        let (i, j) = spec.coords(index);
        let (x, y) = spec.cell_center(i, j);
        let (x, y) = (format_number(x), format_number(y));
        let _ = match *cell {
            DisplayCell::Pixel {
                value,
                size_class,
                pixel_id,
            } => {
                let u_mean = pixelated
                    .pixel(pixel_id)
                    .map_or(f64::NAN, |p| p.uncertainty_mean);
                writeln!(
                    out,
                    "{x},{y},obs,{},{size_class},{pixel_id},{}",
                    format_number(value),
                    format_number(u_mean)
                )
            }
            DisplayCell::Missing => writeln!(out, "{x},{y},missing,,,,"),
            DisplayCell::CertainZero => writeln!(out, "{x},{y},zero,0,,,"),
        };
    }
    out
}

pub fn write_pixelated_csv(pixelated: &PixelatedGrid, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &pixelated_csv_string(pixelated))
}

pub fn summary_string(table: &SummaryTable, format: SummaryFormat) -> String {
    let mut out = String::new();
    match format {
        SummaryFormat::Csv => {
            out.push_str(
                "size_class,side_cells,side_x,side_y,cells_per_pixel,big_pixels,nested_pixels,u_lower,u_upper\n",
            );
            for r in &table.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.size_class,
                    r.side_cells,
                    format_number(r.side_x),
                    format_number(r.side_y),
                    r.cells_per_pixel,
                    r.big_pixel_count,
                    r.nested_pixel_count,
                    format_number(r.u_lower),
                    format_number(r.u_upper)
                );
            }
        }
        SummaryFormat::Markdown => {
            out.push_str("| size class | side (cells) | side (units) | cells per pixel | big pixels | nested pixels | average uncertainty |\n");
            out.push_str("|---:|---:|---:|---:|---:|---:|:---|\n");
            for r in &table.rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} x {} | {} | {} | {} | ({}, {}] |",
                    r.size_class,
                    r.side_cells,
                    format_number(r.side_x),
                    format_number(r.side_y),
                    r.cells_per_pixel,
                    r.big_pixel_count,
                    r.nested_pixel_count,
                    format_number(r.u_lower),
                    format_number(r.u_upper)
                );
            }
        }
    }
    out
}

pub fn write_summary(
    table: &SummaryTable,
    path: impl AsRef<Path>,
    format: SummaryFormat,
) -> Result<()> {
    write_text(path.as_ref(), &summary_string(table, format))
}
