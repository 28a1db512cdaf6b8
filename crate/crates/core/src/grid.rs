//! Lattice data model: regular prediction grids whose cells are observed,
//! missing, or zero with certainty.
//!
//! Cells are stored row-major with `(0, 0)` at the lower-left corner, so the
//! cell at column `i`, row `j` lives at index `j * n_x + i`.

use crate::error::{Error, Result};

/// Relative tolerance used when snapping record coordinates onto the lattice.
pub const ALIGN_TOL: f64 = 1e-6;

/// Upper bound on the number of cells a grid built from records may have.
pub const MAX_CELLS: usize = 1 << 28;

/// Geometry of a regular lattice, addressed by cell centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    /// Map x coordinate of the centre of the lower-left cell.
    pub origin_x: f64,
    /// Map y coordinate of the centre of the lower-left cell.
    pub origin_y: f64,
    pub cell_w: f64,
    pub cell_h: f64,
    pub n_x: usize,
    pub n_y: usize,
}

impl LatticeSpec {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        cell_w: f64,
        cell_h: f64,
        n_x: usize,
        n_y: usize,
    ) -> Result<Self> {
        if !(cell_w > 0.0 && cell_w.is_finite() && cell_h > 0.0 && cell_h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cell spacing must be positive and finite, got {cell_w} x {cell_h}"
            )));
        }
        if n_x == 0 || n_y == 0 {
            return Err(Error::InvalidParameter(format!(
                "lattice dimensions must be positive, got {n_x} x {n_y}"
            )));
        }
        if !(origin_x.is_finite() && origin_y.is_finite()) {
            return Err(Error::InvalidParameter(
                "lattice origin must be finite".into(),
            ));
        }
        Ok(LatticeSpec {
            origin_x,
            origin_y,
            cell_w,
            cell_h,
            n_x,
            n_y,
        })
    }

    /// A unit lattice anchored at the origin.
    pub fn unit(n_x: usize, n_y: usize) -> Result<Self> {
        Self::new(0.0, 0.0, 1.0, 1.0, n_x, n_y)
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_x + i
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.n_x, index / self.n_x)
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin_x + i as f64 * self.cell_w,
            self.origin_y + j as f64 * self.cell_h,
        )
    }
}

/// State of one lattice cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellState {
    Observed { value: f64, uncertainty: f64 },
    Missing,
    CertainZero,
}

impl CellState {
    pub fn is_observed(&self) -> bool {
        matches!(self, CellState::Observed { .. })
    }

    /// Bitwise equality, distinguishing `0.0` from `-0.0`.
    pub fn bit_eq(&self, other: &CellState) -> bool {
        match (self, other) {
            (
                CellState::Observed {
                    value: a,
                    uncertainty: ua,
                },
                CellState::Observed {
                    value: b,
                    uncertainty: ub,
                },
            ) => a.to_bits() == b.to_bits() && ua.to_bits() == ub.to_bits(),
            (CellState::Missing, CellState::Missing) => true,
            (CellState::CertainZero, CellState::CertainZero) => true,
            _ => false,
        }
    }
}

/// Classifies a finite prediction and its non-negative uncertainty.
///
/// A cell is zero with certainty only when both its value and its uncertainty
/// are within `zero_tol` of zero.
pub fn classify_cell(value: f64, uncertainty: f64, zero_tol: f64) -> CellState {
    if value.abs() <= zero_tol && uncertainty <= zero_tol {
        CellState::CertainZero
    } else {
        CellState::Observed { value, uncertainty }
    }
}

/// Uncertainty as the width of a credible interval.
pub fn derive_uncertainty(lo: f64, hi: f64) -> Result<f64> {
    if lo > hi {
        return Err(Error::InvertedInterval { lo, hi });
    }
    Ok(hi - lo)
}

/// One input row: a cell-centre coordinate with optional prediction and uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub x: f64,
    pub y: f64,
    pub value: Option<f64>,
    pub uncertainty: Option<f64>,
}

impl Record {
    pub fn new(x: f64, y: f64, value: Option<f64>, uncertainty: Option<f64>) -> Self {
        Record {
            x,
            y,
            value,
            uncertainty,
        }
    }

    pub fn observed(x: f64, y: f64, value: f64, uncertainty: f64) -> Self {
        Self::new(x, y, Some(value), Some(uncertainty))
    }
}

/// A regular lattice of classified cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGrid {
    spec: LatticeSpec,
    cells: Vec<CellState>,
}

impl PredictionGrid {
    pub fn new(spec: LatticeSpec, cells: Vec<CellState>) -> Result<Self> {
        if cells.len() != spec.len() {
            return Err(Error::InconsistentInputs(format!(
                "{} cells supplied for a {}x{} lattice",
                cells.len(),
                spec.n_x,
                spec.n_y
            )));
        }
        for (record, cell) in cells.iter().enumerate() {
            if let CellState::Observed { value, uncertainty } = *cell {
                if !value.is_finite() {
                    return Err(Error::NonFiniteValue {
                        record,
                        field: "value",
                    });
                }
                if !uncertainty.is_finite() {
                    return Err(Error::NonFiniteValue {
                        record,
                        field: "uncertainty",
                    });
                }
                if uncertainty < 0.0 {
                    return Err(Error::NegativeUncertainty {
                        record,
                        uncertainty,
                    });
                }
            }
        }
        Ok(PredictionGrid { spec, cells })
    }

    /// Builds a grid from two dense row-major layers. A NaN in either layer marks the cell missing.
    pub fn from_layers(
        spec: LatticeSpec,
        values: &[f64],
        uncertainties: &[f64],
        zero_tol: f64,
    ) -> Result<Self> {
        if values.len() != spec.len() || uncertainties.len() != spec.len() {
            return Err(Error::InconsistentInputs(format!(
                "layer lengths {} and {} do not match a {}x{} lattice",
                values.len(),
                uncertainties.len(),
                spec.n_x,
                spec.n_y
            )));
        }
        let cells = values
            .iter()
            .zip(uncertainties)
            .map(|(&v, &u)| {
                if v.is_nan() || u.is_nan() {
                    CellState::Missing
                } else {
                    classify_cell(v, u, zero_tol)
                }
            })
            .collect();
        Self::new(spec, cells)
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn cell(&self, i: usize, j: usize) -> CellState {
        self.cells[self.spec.index(i, j)]
    }

    pub fn count_observed(&self) -> usize {
        self.cells.iter().filter(|c| c.is_observed()).count()
    }

    /// Counts of (observed, missing, certain-zero) cells.
    pub fn state_counts(&self) -> (usize, usize, usize) {
        self.cells.iter().fold((0, 0, 0), |(o, m, z), c| match c {
            CellState::Observed { .. } => (o + 1, m, z),
            CellState::Missing => (o, m + 1, z),
            CellState::CertainZero => (o, m, z + 1),
        })
    }

    /// Exports one record per cell in row-major order. Zero-with-certainty cells are
    /// written as `(0, 0)`, missing cells with both fields absent.
    pub fn to_records(&self) -> Vec<Record> {
        self.cells
            .iter()
            .enumerate()
            .map(|(index, cell)| {
                let (i, j) = self.spec.coords(index);
                let (x, y) = self.spec.cell_center(i, j);
                match *cell {
                    CellState::Observed { value, uncertainty } => {
                        Record::observed(x, y, value, uncertainty)
                    }
                    CellState::Missing => Record::new(x, y, None, None),
                    CellState::CertainZero => Record::observed(x, y, 0.0, 0.0),
                }
            })
            .collect()
    }

    pub fn bit_eq(&self, other: &PredictionGrid) -> bool {
        self.spec == other.spec
            && self.cells.len() == other.cells.len()
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| a.bit_eq(b))
    }
}

struct Axis {
    origin: f64,
    spacing: f64,
    count: usize,
}

impl Axis {
    fn infer(coords: impl Iterator<Item = f64>) -> Axis {
        let mut distinct: Vec<f64> = coords.collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let origin = distinct[0];
        if distinct.len() == 1 {
            return Axis {
                origin,
                spacing: 1.0,
                count: 1,
            };
        }
        let gap = distinct
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let span = distinct[distinct.len() - 1] - origin;
        let steps = (span / gap).round();
        if !steps.is_finite() || steps >= MAX_CELLS as f64 {
            // A vanishing gap only arises from coordinates that are not on a lattice.
            return Axis {
                origin,
                spacing: gap,
                count: usize::MAX,
            };
        }
        Axis {
            origin,
            spacing: span / steps,
            count: steps as usize + 1,
        }
    }

    fn snap(&self, c: f64) -> Option<usize> {
        let k = ((c - self.origin) / self.spacing).round();
        if k < 0.0 || k >= self.count as f64 {
            return None;
        }
        let snapped = self.origin + k * self.spacing;
        ((c - snapped).abs() <= ALIGN_TOL * self.spacing).then_some(k as usize)
    }
}

/// Validates raw records into a regular grid.
///
/// Cell spacing per axis is inferred from the smallest positive gap between
/// distinct coordinates; an axis with a single distinct coordinate gets unit
/// spacing. Lattice positions without a record, and records lacking a value or
/// uncertainty, become [`CellState::Missing`].
pub fn build_grid(records: &[Record], zero_tol: f64) -> Result<PredictionGrid> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(zero_tol >= 0.0 && zero_tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "zero tolerance must be finite and non-negative, got {zero_tol}"
        )));
    }
    for (record, r) in records.iter().enumerate() {
        if !r.x.is_finite() {
            return Err(Error::NonFiniteValue { record, field: "x" });
        }
        if !r.y.is_finite() {
            return Err(Error::NonFiniteValue { record, field: "y" });
        }
        if r.value.is_some_and(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                record,
                field: "value",
            });
        }
        if let Some(u) = r.uncertainty {
            if !u.is_finite() {
                return Err(Error::NonFiniteValue {
                    record,
                    field: "uncertainty",
                });
            }
            if u < 0.0 {
                return Err(Error::NegativeUncertainty {
                    record,
                    uncertainty: u,
                });
            }
        }
    }

    let ax = Axis::infer(records.iter().map(|r| r.x));
    let ay = Axis::infer(records.iter().map(|r| r.y));

    let mut placed = Vec::with_capacity(records.len());
    for (record, r) in records.iter().enumerate() {
        match (ax.snap(r.x), ay.snap(r.y)) {
            (Some(i), Some(j)) => placed.push((i, j)),
            _ => {
                return Err(Error::IrregularLattice {
                    record,
                    x: r.x,
                    y: r.y,
                })
            }
        }
    }
    if ax.count.saturating_mul(ay.count) > MAX_CELLS {
        return Err(Error::InvalidParameter(format!(
            "lattice of {} x {} cells exceeds the {MAX_CELLS}-cell limit",
            ax.count, ay.count
        )));
    }

    let spec = LatticeSpec::new(
        ax.origin, ay.origin, ax.spacing, ay.spacing, ax.count, ay.count,
    )?;
    let mut cells = vec![CellState::Missing; spec.len()];
    let mut owner: Vec<Option<usize>> = vec![None; spec.len()];
    for (record, (r, &(i, j))) in records.iter().zip(&placed).enumerate() {
        let index = spec.index(i, j);
        if let Some(first) = owner[index] {
            return Err(Error::DuplicateCoordinate {
                record,
                first,
                i,
                j,
            });
        }
        owner[index] = Some(record);
        if let (Some(value), Some(uncertainty)) = (r.value, r.uncertainty) {
            cells[index] = classify_cell(value, uncertainty, zero_tol);
        }
    }
    PredictionGrid::new(spec, cells)
}
