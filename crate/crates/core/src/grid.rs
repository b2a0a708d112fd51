//! Uniform grids in the canonical coordinate `q`.

use crate::error::{Error, Result};
use crate::transform::TransformMap;

/// Node placement relative to the walls at `lo` and `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridKind {
    /// Interior nodes `lo + (i+1) h`; the walls are Dirichlet nodes.
    #[default]
    Vertex,
    /// Cell centres `lo + (i+1/2) h`, half a spacing away from the walls.
    CellCentered,
}

/// Interior nodes of a uniform grid on `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QGrid {
    lo: f64,
    hi: f64,
    n: usize,
    kind: GridKind,
}

impl QGrid {
    /// Creates a grid with at least `n` interior nodes.
    ///
    /// The count is rounded up so that a coarser grid with a whole-number
    /// spacing ratio is a subset of the nodes: odd counts for vertex grids
    /// (ratio 2), multiples of three for cell-centred grids (ratio 3).
    pub fn new(lo: f64, hi: f64, n: usize, kind: GridKind) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::Config(format!(
                "grid interval ({lo}, {hi}) must be finite and non-empty"
            )));
        }
        let n = n.max(3);
        let n = match kind {
            GridKind::Vertex => n | 1,
            GridKind::CellCentered => n.div_ceil(3) * 3,
        };
        Ok(QGrid { lo, hi, n, kind })
    }

    pub fn vertex(lo: f64, hi: f64, n: usize) -> Result<Self> {
        QGrid::new(lo, hi, n, GridKind::Vertex)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn h(&self) -> f64 {
        match self.kind {
            GridKind::Vertex => (self.hi - self.lo) / (self.n + 1) as f64,
            GridKind::CellCentered => (self.hi - self.lo) / self.n as f64,
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        let h = self.h();
        match self.kind {
            GridKind::Vertex => self.lo + (i + 1) as f64 * h,
            GridKind::CellCentered => self.lo + (i as f64 + 0.5) * h,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Spacing ratio of the nested coarse grid.
    pub fn coarse_ratio(&self) -> usize {
        match self.kind {
            GridKind::Vertex => 2,
            GridKind::CellCentered => 3,
        }
    }

    /// Indices of the nodes that form the nested coarse grid.
    pub fn coarse_indices(&self) -> Vec<usize> {
        match self.kind {
            GridKind::Vertex => (1..self.n).step_by(2).collect(),
            GridKind::CellCentered => (1..self.n).step_by(3).collect(),
        }
    }

    pub fn coarse(&self) -> QGrid {
        let n = match self.kind {
            GridKind::Vertex => (self.n - 1) / 2,
            GridKind::CellCentered => self.n / 3,
        };
        QGrid { n, ..*self }
    }

    /// Grid with half the spacing.
    pub fn refined(&self) -> QGrid {
        let n = match self.kind {
            GridKind::Vertex => 2 * self.n + 1,
            GridKind::CellCentered => 2 * self.n,
        };
        QGrid { n, ..*self }
    }

    /// Nodes with the two walls prepended and appended.
    pub fn nodes_with_walls(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n + 2);
        out.push(self.lo);
        out.extend(self.nodes());
        out.push(self.hi);
        out
    }
}

/// A q-grid together with the physical positions of its nodes.
#[derive(Debug, Clone)]
pub struct MappedGrid {
    pub grid: QGrid,
    pub q: Vec<f64>,
    pub x: Vec<f64>,
}

impl MappedGrid {
    pub fn new(grid: QGrid, map: &TransformMap) -> Result<Self> {
        let q = grid.nodes();
        let x = q
            .iter()
            .map(|&qi| map.invert(qi))
            .collect::<Result<Vec<_>>>()?;
        Ok(MappedGrid { grid, q, x })
    }

    /// Grid whose nodes are their own positions (`x = q`).
    pub fn identity(grid: QGrid) -> Self {
        let q = grid.nodes();
        MappedGrid {
            grid,
            x: q.clone(),
            q,
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}
