//! Uniform cell-centred grid on `[0,lx]×[0,ly]`.
//!
//! Cells are numbered row-major (`c = j*nx + i`). Faces are numbered with all
//! vertical faces first (`j*(nx+1) + i`, normal along x) followed by the
//! horizontal faces (`nv + j*nx + i`, normal along y). Interior normals point
//! from the `lo` cell to the `hi` cell; boundary normals point outward.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("domain extent must be positive, got {lx} x {ly}")]
    Extent { lx: f64, ly: f64 },
    #[error("grid needs at least 2 cells per direction, got {nx} x {ny}")]
    TooCoarse { nx: usize, ny: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceKind {
    Interior { lo: usize, hi: usize },
    Boundary { cell: usize, side: Side },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub center: [f64; 2],
    /// Unit normal; `lo -> hi` for interior faces, outward on the boundary.
    pub normal: [f64; 2],
    pub length: f64,
    /// 0 for faces normal to x, 1 for faces normal to y.
    pub axis: usize,
    pub kind: FaceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    faces: Vec<Face>,
    /// Per cell: face indices ordered left, right, bottom, top.
    cell_faces: Vec<[usize; 4]>,
    boundary: Vec<usize>,
}

impl Grid {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self, GridError> {
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(GridError::Extent { lx, ly });
        }
        if nx < 2 || ny < 2 {
            return Err(GridError::TooCoarse { nx, ny });
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        let nv = (nx + 1) * ny;
        let mut faces = Vec::with_capacity(nv + nx * (ny + 1));
        let mut boundary = Vec::new();
        for j in 0..ny {
            for i in 0..=nx {
                let center = [i as f64 * hx, (j as f64 + 0.5) * hy];
                let (kind, normal) = if i == 0 {
                    (FaceKind::Boundary { cell: j * nx, side: Side::Left }, [-1.0, 0.0])
                } else if i == nx {
                    (
                        FaceKind::Boundary { cell: j * nx + nx - 1, side: Side::Right },
                        [1.0, 0.0],
                    )
                } else {
                    (
                        FaceKind::Interior { lo: j * nx + i - 1, hi: j * nx + i },
                        [1.0, 0.0],
                    )
                };
                if matches!(kind, FaceKind::Boundary { .. }) {
                    boundary.push(faces.len());
                }
                faces.push(Face { center, normal, length: hy, axis: 0, kind });
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                let center = [(i as f64 + 0.5) * hx, j as f64 * hy];
                let (kind, normal) = if j == 0 {
                    (FaceKind::Boundary { cell: i, side: Side::Bottom }, [0.0, -1.0])
                } else if j == ny {
                    (
                        FaceKind::Boundary { cell: (ny - 1) * nx + i, side: Side::Top },
                        [0.0, 1.0],
                    )
                } else {
                    (
                        FaceKind::Interior { lo: (j - 1) * nx + i, hi: j * nx + i },
                        [0.0, 1.0],
                    )
                };
                if matches!(kind, FaceKind::Boundary { .. }) {
                    boundary.push(faces.len());
                }
                faces.push(Face { center, normal, length: hx, axis: 1, kind });
            }
        }
        let cell_faces = (0..nx * ny)
            .map(|c| {
                let (i, j) = (c % nx, c / nx);
                let left = j * (nx + 1) + i;
                let bottom = nv + j * nx + i;
                [left, left + 1, bottom, bottom + nx]
            })
            .collect();
        Ok(Grid { lx, ly, nx, ny, hx, hy, faces, cell_faces, boundary })
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    pub fn cell_center(&self, c: usize) -> [f64; 2] {
        let (i, j) = self.cell_ij(c);
        [(i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy]
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    /// Face indices of cell `c` ordered left, right, bottom, top.
    pub fn cell_faces(&self, c: usize) -> [usize; 4] {
        self.cell_faces[c]
    }

    pub fn boundary_faces(&self) -> &[usize] {
        &self.boundary
    }

    /// Spacing normal to faces of the given axis.
    pub fn spacing(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.hx
        } else {
            self.hy
        }
    }

    pub fn total_area(&self) -> f64 {
        self.cell_area() * self.cell_count() as f64
    }

    /// Largest distance from the origin to a point of the closed rectangle.
    pub fn max_radius(&self) -> f64 {
        self.lx.hypot(self.ly)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_two_by_two() {
        let g = Grid::new(1.0, 1.0, 2, 2).unwrap();
        assert_eq!(g.cell_count(), 4);
        assert_eq!(g.cell_area(), 0.25);
        assert_eq!(g.boundary_faces().len(), 8);
        for &f in g.boundary_faces() {
            assert_eq!(g.face(f).length, 0.5);
        }
        assert_eq!(g.faces().len(), 12);
    }

    #[test]
    fn rectangular_spacing() {
        let g = Grid::new(2.0, 1.0, 4, 2).unwrap();
        assert_eq!((g.hx, g.hy), (0.5, 0.5));
    }

    #[test]
    fn rejects_degenerate_input() {
        assert_eq!(Grid::new(1.0, 1.0, 1, 4), Err(GridError::TooCoarse { nx: 1, ny: 4 }));
        assert!(matches!(Grid::new(0.0, 1.0, 4, 4), Err(GridError::Extent { .. })));
    }

    #[test]
    fn geometry_tiles_the_rectangle() {
        let g = Grid::new(1.5, 0.7, 7, 5).unwrap();
        let area: f64 = (0..g.cell_count()).map(|_| g.cell_area()).sum();
        assert!((area - 1.5 * 0.7).abs() < 1e-14);
        let perimeter: f64 = g.boundary_faces().iter().map(|&f| g.face(f).length).sum();
        assert!((perimeter - 2.0 * (1.5 + 0.7)).abs() < 1e-14);
        // Each cell sees each of its faces exactly once, with consistent orientation.
        for c in 0..g.cell_count() {
            let [l, r, b, t] = g.cell_faces(c);
            let mut sign_sum = [0.0f64; 2];
            for (f, outward) in [(l, -1.0), (r, 1.0), (b, -1.0), (t, 1.0)] {
                let face = g.face(f);
                let s = match face.kind {
                    FaceKind::Interior { lo, hi } => {
                        assert!(lo == c || hi == c);
                        if lo == c {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    FaceKind::Boundary { cell, .. } => {
                        assert_eq!(cell, c);
                        1.0
                    }
                };
                assert_eq!(s * face.normal[face.axis], outward);
                sign_sum[face.axis] += s * face.normal[face.axis] * face.length;
            }
            assert_eq!(sign_sum, [0.0, 0.0]);
        }
    }
}
