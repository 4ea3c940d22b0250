//! Uniform cell grid over the atoms of a trap field.

use crate::geometry::{AxisBox, Point};

/// Upper bound on the number of cells; the cell side grows beyond the trap
/// radius when a large box would otherwise exceed it.
const MAX_CELLS: usize = 1 << 22;

/// Immutable bucket grid with CSR storage: `atoms[start[c]..start[c + 1]]`
/// are the atoms whose cell index is `c`.
#[derive(Clone, Debug)]
pub struct CellIndex {
    origin: Vec<f64>,
    cell: f64,
    shape: Vec<usize>,
    start: Vec<u32>,
    atoms: Vec<Point>,
}

impl CellIndex {
    /// Builds the grid over `bounds` with cell side at least `min_cell`.
    pub fn build(bounds: &AxisBox, min_cell: f64, atoms: &[Point]) -> Self {
        let dim = bounds.dim();
        let mut cell = min_cell;
        let mut shape;
        loop {
            shape = (0..dim)
                .map(|k| ((bounds.extent(k) / cell).ceil() as usize).max(1))
                .collect::<Vec<_>>();
            if shape.iter().product::<usize>() <= MAX_CELLS {
                break;
            }
            cell *= 1.5;
        }
        let n_cells: usize = shape.iter().product();
        let mut idx = CellIndex {
            origin: bounds.lo.clone(),
            cell,
            shape,
            start: vec![0; n_cells + 1],
            atoms: Vec::with_capacity(atoms.len()),
        };
        let keys: Vec<usize> = atoms.iter().map(|a| idx.linear(&idx.cell_of(a))).collect();
        for &k in &keys {
            idx.start[k + 1] += 1;
        }
        for c in 0..n_cells {
            idx.start[c + 1] += idx.start[c];
        }
        let mut fill = idx.start.clone();
        let mut sorted = vec![Point::origin(dim); atoms.len()];
        for (a, &k) in atoms.iter().zip(&keys) {
            sorted[fill[k] as usize] = *a;
            fill[k] += 1;
        }
        idx.atoms = sorted;
        idx
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn cell_of(&self, x: &[f64]) -> Vec<isize> {
        x.iter()
            .zip(&self.origin)
            .zip(&self.shape)
            .map(|((v, o), &n)| (((v - o) / self.cell).floor() as isize).clamp(0, n as isize - 1))
            .collect()
    }

    fn linear(&self, c: &[isize]) -> usize {
        let mut k = 0usize;
        for (axis, &ci) in c.iter().enumerate().rev() {
            k = k * self.shape[axis] + ci as usize;
        }
        k
    }

    fn bucket(&self, c: &[isize]) -> &[Point] {
        let k = self.linear(c);
        &self.atoms[self.start[k] as usize..self.start[k + 1] as usize]
    }

    /// Visits every in-grid cell whose Chebyshev distance from `center` is
    /// exactly `ring`.
    fn for_each_in_ring(&self, center: &[isize], ring: isize, mut f: impl FnMut(&[isize])) {
        let dim = center.len();
        let lo: Vec<isize> = center.iter().map(|c| (c - ring).max(0)).collect();
        let hi: Vec<isize> = center
            .iter()
            .zip(&self.shape)
            .map(|(c, &n)| (c + ring).min(n as isize - 1))
            .collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return;
        }
        let mut cur = lo.clone();
        loop {
            let on_ring = cur
                .iter()
                .zip(center)
                .any(|(c, m)| (c - m).abs() == ring);
            if on_ring || ring == 0 {
                f(&cur);
            }
            // odometer
            let mut axis = 0;
            loop {
                if axis == dim {
                    return;
                }
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = lo[axis];
                axis += 1;
            }
        }
    }

    /// True when some atom lies within the closed ball `B(x, radius)`,
    /// `radius <= cell_size`.
    pub fn any_within(&self, x: &Point, radius: f64) -> bool {
        debug_assert!(radius <= self.cell);
        let r2 = radius * radius;
        let center = self.cell_of(x);
        let mut hit = false;
        for ring in 0..=1 {
            self.for_each_in_ring(&center, ring, |c| {
                if !hit {
                    hit = self.bucket(c).iter().any(|a| a.dist_sq(x) <= r2);
                }
            });
            if hit {
                return true;
            }
        }
        false
    }

    /// Distance from `x` to the nearest atom, `None` when there are no atoms.
    pub fn nearest_distance(&self, x: &Point) -> Option<f64> {
        if self.atoms.is_empty() {
            return None;
        }
        let center = self.cell_of(x);
        let max_ring = *self.shape.iter().max().unwrap() as isize;
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            self.for_each_in_ring(&center, ring, |c| {
                for a in self.bucket(c) {
                    best = best.min(a.dist_sq(x));
                }
            });
            // Cells beyond this ring are at least `ring * cell` away.
            let reach = ring as f64 * self.cell;
            if best.is_finite() && best <= reach * reach {
                break;
            }
        }
        Some(best.sqrt())
    }
}
