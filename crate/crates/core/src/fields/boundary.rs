//! Partition of the boundary into the mass-flux part Γ₁ and the
//! volumetric-flux part Γ₂, and the boundary forcing ψ₁, ψ₂.

use thiserror::Error;

use super::expr::{EvalContext, EvalError, FieldExpr};
use super::grid::{FaceKind, Grid, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    /// Mass flux prescribed (ψ₁ active).
    Gamma1,
    /// Volumetric flux prescribed (ψ₂ active).
    Gamma2,
}

/// A piece of one side, parametrised by arclength along the side measured
/// from the corner with the smaller coordinate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub side: Side,
    pub from: f64,
    pub to: f64,
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("segment on {side:?} has an empty or reversed range [{from}, {to}]")]
    EmptySegment { side: Side, from: f64, to: f64 },
    #[error("side {side:?} is not tiled: gap or overlap at {at}")]
    NotTiled { side: Side, at: f64 },
    #[error("face centre at {at} on {side:?} lies on a segment junction")]
    FaceOnJunction { side: Side, at: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPartition {
    segments: Vec<Segment>,
}

const TILE_TOL: f64 = 1e-12;

impl BoundaryPartition {
    /// Validates that the segments tile each side of `[0,lx]×[0,ly]` exactly.
    pub fn new(segments: Vec<Segment>, lx: f64, ly: f64) -> Result<Self, PartitionError> {
        for s in &segments {
            if !(s.to > s.from) {
                return Err(PartitionError::EmptySegment { side: s.side, from: s.from, to: s.to });
            }
        }
        for side in Side::ALL {
            let len = side_length(side, lx, ly);
            let mut on_side: Vec<&Segment> = segments.iter().filter(|s| s.side == side).collect();
            on_side.sort_by(|a, b| a.from.total_cmp(&b.from));
            let mut cursor = 0.0;
            for s in on_side {
                if (s.from - cursor).abs() > TILE_TOL * len.max(1.0) {
                    return Err(PartitionError::NotTiled { side, at: cursor });
                }
                cursor = s.to;
            }
            if (cursor - len).abs() > TILE_TOL * len.max(1.0) {
                return Err(PartitionError::NotTiled { side, at: cursor });
            }
        }
        Ok(BoundaryPartition { segments })
    }

    /// The whole boundary carries one tag.
    pub fn uniform(tag: BoundaryTag, lx: f64, ly: f64) -> Self {
        let segments = Side::ALL
            .iter()
            .map(|&side| Segment { side, from: 0.0, to: side_length(side, lx, ly), tag })
            .collect();
        BoundaryPartition { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Tag of a boundary point given by its side and arclength coordinate.
    /// Segment end points (junctions and corners) have no tag.
    pub fn tag_at(&self, side: Side, along: f64) -> Result<BoundaryTag, PartitionError> {
        self.segments
            .iter()
            .find(|s| s.side == side && along > s.from + TILE_TOL && along < s.to - TILE_TOL)
            .map(|s| s.tag)
            .ok_or(PartitionError::FaceOnJunction { side, at: along })
    }

    /// Tag of every boundary face of `grid`, aligned with `grid.boundary_faces()`.
    pub fn tag_faces(&self, grid: &Grid) -> Result<Vec<BoundaryTag>, PartitionError> {
        grid.boundary_faces()
            .iter()
            .map(|&f| {
                let face = grid.face(f);
                let FaceKind::Boundary { side, .. } = face.kind else {
                    unreachable!("boundary list holds boundary faces only")
                };
                self.tag_at(side, along_side(side, face.center))
            })
            .collect()
    }
}

fn side_length(side: Side, lx: f64, ly: f64) -> f64 {
    match side {
        Side::Left | Side::Right => ly,
        Side::Bottom | Side::Top => lx,
    }
}

fn along_side(side: Side, p: [f64; 2]) -> f64 {
    match side {
        Side::Left | Side::Right => p[1],
        Side::Bottom | Side::Top => p[0],
    }
}

/// Boundary data ψ₁ (mass flux) and ψ₂ (volumetric coefficient).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryForcing {
    pub psi1: FieldExpr,
    pub psi2: FieldExpr,
}

impl BoundaryForcing {
    pub fn zero() -> Self {
        BoundaryForcing { psi1: FieldExpr::constant(0.0), psi2: FieldExpr::constant(0.0) }
    }

    /// `(ψ₁, ψ₂)` at a boundary point with the given tag; the inactive one is
    /// zero-extended.
    pub fn eval(&self, tag: BoundaryTag, ctx: &EvalContext) -> Result<(f64, f64), EvalError> {
        Ok(match tag {
            BoundaryTag::Gamma1 => (self.psi1.eval(ctx)?, 0.0),
            BoundaryTag::Gamma2 => (0.0, self.psi2.eval(ctx)?),
        })
    }

    /// True when neither ψ₁ nor ψ₂ depends on time.
    pub fn is_steady(&self) -> bool {
        use super::expr::Var;
        !self.psi1.depends_on(Var::T) && !self.psi2.depends_on(Var::T)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split_left(lx: f64, ly: f64) -> Vec<Segment> {
        let mut segs: Vec<Segment> = BoundaryPartition::uniform(BoundaryTag::Gamma2, lx, ly)
            .segments()
            .iter()
            .copied()
            .filter(|s| s.side != Side::Left)
            .collect();
        segs.push(Segment { side: Side::Left, from: 0.0, to: 0.5 * ly, tag: BoundaryTag::Gamma1 });
        segs.push(Segment { side: Side::Left, from: 0.5 * ly, to: ly, tag: BoundaryTag::Gamma2 });
        segs
    }

    #[test]
    fn detects_gaps_and_overlaps() {
        let mut segs = split_left(1.0, 1.0);
        segs.pop();
        assert!(matches!(
            BoundaryPartition::new(segs, 1.0, 1.0),
            Err(PartitionError::NotTiled { side: Side::Left, .. })
        ));
        let mut segs = split_left(1.0, 1.0);
        segs[4].to = 0.6;
        assert!(BoundaryPartition::new(segs, 1.0, 1.0).is_err());
        assert!(BoundaryPartition::new(split_left(1.0, 1.0), 1.0, 1.0).is_ok());
    }

    #[test]
    fn every_face_tagged_once_and_toggling_conserves_count() {
        let g = Grid::new(1.0, 1.0, 8, 8).unwrap();
        let p = BoundaryPartition::new(split_left(1.0, 1.0), 1.0, 1.0).unwrap();
        let tags = p.tag_faces(&g).unwrap();
        assert_eq!(tags.len(), 32);
        let g1 = tags.iter().filter(|t| **t == BoundaryTag::Gamma1).count();
        assert_eq!(g1, 4);

        let mut toggled = split_left(1.0, 1.0);
        toggled[3].tag = BoundaryTag::Gamma2;
        let t2 = BoundaryPartition::new(toggled, 1.0, 1.0).unwrap().tag_faces(&g).unwrap();
        assert_eq!(t2.len(), tags.len());
        assert_eq!(t2.iter().filter(|t| **t == BoundaryTag::Gamma1).count(), 0);
    }

    #[test]
    fn junction_on_face_centre_is_rejected() {
        // With 3 cells along the left side, y = 0.5 is a face centre.
        let g = Grid::new(1.0, 1.0, 3, 3).unwrap();
        let p = BoundaryPartition::new(split_left(1.0, 1.0), 1.0, 1.0).unwrap();
        assert!(matches!(p.tag_faces(&g), Err(PartitionError::FaceOnJunction { .. })));
    }

    #[test]
    fn forcing_is_zero_extended() {
        let f = BoundaryForcing {
            psi1: FieldExpr::parse("1 + x").unwrap(),
            psi2: FieldExpr::parse("2").unwrap(),
        };
        let c = EvalContext::unit(0.5, 0.0, 0.0);
        assert_eq!(f.eval(BoundaryTag::Gamma1, &c).unwrap(), (1.5, 0.0));
        assert_eq!(f.eval(BoundaryTag::Gamma2, &c).unwrap(), (0.0, 2.0));
    }
}
