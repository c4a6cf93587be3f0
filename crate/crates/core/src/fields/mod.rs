//! Domain geometry, the cell-centred grid, field expressions and the boundary
//! partition.

pub mod boundary;
pub mod expr;
pub mod grid;
pub mod presets;

use thiserror::Error;

pub use boundary::{BoundaryForcing, BoundaryPartition, BoundaryTag, PartitionError, Segment};
pub use expr::{EvalContext, EvalError, Expr, FieldExpr, ParseError, Var};
pub use grid::{Face, FaceKind, Grid, GridError, Side};
pub use presets::Preset;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("evaluating `{expr}` at cell {cell}: {source}")]
    Cell {
        expr: String,
        cell: usize,
        #[source]
        source: EvalError,
    },
    #[error("evaluating `{expr}` at face {face}: {source}")]
    Face {
        expr: String,
        face: usize,
        #[source]
        source: EvalError,
    },
    #[error("porosity must lie in (0,1) but is {value} at cell {cell}")]
    Porosity { cell: usize, value: f64 },
}

/// Cell values of `expr` at time `t`.
pub fn materialize(expr: &FieldExpr, grid: &Grid, t: f64) -> Result<Vec<f64>, FieldError> {
    (0..grid.cell_count())
        .map(|c| {
            let [x, y] = grid.cell_center(c);
            expr.eval(&EvalContext::new(x, y, t, grid.lx, grid.ly))
                .map_err(|source| FieldError::Cell { expr: expr.source().to_string(), cell: c, source })
        })
        .collect()
}

/// Face-centre values of `expr` at time `t`, for all faces.
pub fn materialize_faces(expr: &FieldExpr, grid: &Grid, t: f64) -> Result<Vec<f64>, FieldError> {
    grid.faces()
        .iter()
        .enumerate()
        .map(|(f, face)| {
            let [x, y] = face.center;
            expr.eval(&EvalContext::new(x, y, t, grid.lx, grid.ly))
                .map_err(|source| FieldError::Face { expr: expr.source().to_string(), face: f, source })
        })
        .collect()
}

/// The rectangle `[0,lx]×[0,ly]`, its scaled porosity φ̃ and boundary partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PorousDomain {
    pub lx: f64,
    pub ly: f64,
    pub porosity_tilde: FieldExpr,
    pub partition: BoundaryPartition,
}

impl PorousDomain {
    /// Cell values of φ = c̄·φ̃, after checking 0 < φ̃ < 1.
    pub fn phi_cells(&self, grid: &Grid, cbar: f64) -> Result<Vec<f64>, FieldError> {
        let raw = materialize(&self.porosity_tilde, grid, 0.0)?;
        raw.into_iter()
            .enumerate()
            .map(|(cell, value)| {
                if value > 0.0 && value < 1.0 {
                    Ok(cbar * value)
                } else {
                    Err(FieldError::Porosity { cell, value })
                }
            })
            .collect()
    }

    /// φ = c̄·φ̃ at an arbitrary point.
    pub fn phi_at(&self, x: [f64; 2], cbar: f64) -> Result<f64, EvalError> {
        let v = self.porosity_tilde.eval(&EvalContext::new(x[0], x[1], 0.0, self.lx, self.ly))?;
        Ok(cbar * v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn materializes_cell_centres() {
        let g = Grid::new(1.0, 1.0, 2, 2).unwrap();
        let vals = materialize(&FieldExpr::parse("x").unwrap(), &g, 0.0).unwrap();
        assert_eq!(vals, vec![0.25, 0.75, 0.25, 0.75]);
        let ones = materialize(&FieldExpr::parse("1 + 0*x").unwrap(), &g, 3.0).unwrap();
        assert!(ones.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn reports_failing_cell() {
        let g = Grid::new(1.0, 1.0, 2, 2).unwrap();
        let err = materialize(&FieldExpr::parse("log(x - 0.5)").unwrap(), &g, 0.0).unwrap_err();
        assert!(matches!(err, FieldError::Cell { cell: 0, .. }));
    }

    #[test]
    fn porosity_range_is_checked() {
        let g = Grid::new(1.0, 1.0, 2, 2).unwrap();
        let mut d = PorousDomain {
            lx: 1.0,
            ly: 1.0,
            porosity_tilde: FieldExpr::parse("0.5").unwrap(),
            partition: BoundaryPartition::uniform(BoundaryTag::Gamma1, 1.0, 1.0),
        };
        assert_eq!(d.phi_cells(&g, 2.0).unwrap(), vec![1.0; 4]);
        d.porosity_tilde = FieldExpr::parse("x + 0.5").unwrap();
        assert!(matches!(d.phi_cells(&g, 1.0), Err(FieldError::Porosity { cell: 1, .. })));
    }
}
