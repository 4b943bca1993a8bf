//! Grid realization of sublevel sets: cells, adjacency, and union-find
//! component queries at arbitrary levels.

use crate::error::TopologyError;
use crate::landscape::LandscapeAtlas;
use crate::potential::{DomainGeometry, PotentialField};

/// One cell of the filtration grid.
#[derive(Debug, Clone)]
pub struct Cell {
    pub center: [f64; 2],
    pub value: f64,
    pub boundary_adjacent: bool,
    /// lattice coordinates
    pub ij: (i32, i32),
}

/// Cell decomposition of the domain with per-cell potential values.
#[derive(Debug, Clone)]
pub struct GridFiltration {
    pub dim: usize,
    pub resolution: usize,
    pub cells: Vec<Cell>,
    /// lattice -> cell index (dense over the bounding box)
    occupancy: Vec<Option<u32>>,
    origin: [f64; 2],
    spacing: [f64; 2],
    /// cell indices sorted ascending by (value, index)
    pub sorted: Vec<usize>,
    /// distinct cell values ascending
    pub sorted_values: Vec<f64>,
    /// largest |value difference| between any adjacent pair
    pub max_adjacent_gap: f64,
}

impl GridFiltration {
    /// Build a filtration with `resolution` cells per axis. Deterministic.
    pub fn build(
        field: &PotentialField,
        geom: &DomainGeometry,
        resolution: usize,
    ) -> Result<Self, TopologyError> {
        match geom.dim() {
            1 => assert!(resolution >= 64, "1D resolution must be at least 64"),
            _ => assert!(
                resolution >= 128,
                "2D resolution must be at least 128 per axis"
            ),
        }
        let dim = geom.dim();
        let (origin, spacing, nx, ny) = match geom {
            DomainGeometry::Interval { a, b } => {
                let d = (b - a) / resolution as f64;
                ([*a, 0.0], [d, 1.0], resolution, 1)
            }
            DomainGeometry::Ball { center, radius } => {
                let d = 2.0 * radius / resolution as f64;
                (
                    [center[0] - radius, center[1] - radius],
                    [d, d],
                    resolution,
                    resolution,
                )
            }
        };
        let mut occupancy: Vec<Option<u32>> = vec![None; nx * ny];
        let mut cells = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let center = [
                    origin[0] + (i as f64 + 0.5) * spacing[0],
                    origin[1] + (j as f64 + 0.5) * spacing[1],
                ];
                let inside = match geom {
                    DomainGeometry::Interval { .. } => true,
                    DomainGeometry::Ball { .. } => geom.contains(&center),
                };
                if inside {
                    let value = field
                        .value(&center[..dim])
                        .map_err(crate::error::LandscapeError::Eval)?;
                    occupancy[j * nx + i] = Some(cells.len() as u32);
                    cells.push(Cell {
                        center,
                        value,
                        boundary_adjacent: false,
                        ij: (i as i32, j as i32),
                    });
                }
            }
        }
        let mut grid = GridFiltration {
            dim,
            resolution,
            cells,
            occupancy,
            origin,
            spacing,
            sorted: Vec::new(),
            sorted_values: Vec::new(),
            max_adjacent_gap: 0.0,
        };
        // boundary adjacency: a lattice neighbor slot is missing or outside
        let n = grid.cells.len();
        for idx in 0..n {
            let (i, j) = grid.cells[idx].ij;
            let mut adjacent = false;
            let neighbor_slots: &[(i32, i32)] = if dim == 1 {
                &[(i - 1, j), (i + 1, j)]
            } else {
                &[(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
            };
            for &(ni, nj) in neighbor_slots {
                if grid.cell_at(ni, nj).is_none() {
                    adjacent = true;
                }
            }
            grid.cells[idx].boundary_adjacent = adjacent;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            grid.cells[a]
                .value
                .partial_cmp(&grid.cells[b].value)
                .unwrap()
                .then(a.cmp(&b))
        });
        grid.sorted = order;
        let mut values: Vec<f64> = grid.cells.iter().map(|c| c.value).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        grid.sorted_values = values;
        let mut gap: f64 = 0.0;
        for idx in 0..n {
            for nb in grid.neighbors(idx) {
                gap = gap.max((grid.cells[idx].value - grid.cells[nb].value).abs());
            }
        }
        grid.max_adjacent_gap = gap;
        Ok(grid)
    }

    fn cell_at(&self, i: i32, j: i32) -> Option<usize> {
        let (nx, ny) = match self.dim {
            1 => (self.resolution as i32, 1),
            _ => (self.resolution as i32, self.resolution as i32),
        };
        if i < 0 || j < 0 || i >= nx || j >= ny {
            return None;
        }
        self.occupancy[(j * nx + i) as usize].map(|v| v as usize)
    }

    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        let (i, j) = self.cells[idx].ij;
        let slots: &[(i32, i32)] = if self.dim == 1 {
            &[(i - 1, j), (i + 1, j)]
        } else {
            &[(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
        };
        slots
            .iter()
            .filter_map(|&(a, b)| self.cell_at(a, b))
            .collect()
    }

    /// Cell containing a point (clamped to the lattice).
    pub fn cell_of(&self, p: &[f64]) -> Option<usize> {
        let i = ((p[0] - self.origin[0]) / self.spacing[0]).floor() as i32;
        let j = if self.dim == 1 {
            0
        } else {
            ((p[1] - self.origin[1]) / self.spacing[1]).floor() as i32
        };
        let max = self.resolution as i32 - 1;
        self.cell_at(i.clamp(0, max), j.clamp(0, max))
    }

    /// Length of one cell diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        if self.dim == 1 {
            self.spacing[0]
        } else {
            (self.spacing[0] * self.spacing[0] + self.spacing[1] * self.spacing[1]).sqrt()
        }
    }

    /// Largest value gap between `cell` and its neighbors.
    pub fn local_gap(&self, cell: usize) -> f64 {
        let v = self.cells[cell].value;
        self.neighbors(cell)
            .into_iter()
            .map(|n| (self.cells[n].value - v).abs())
            .fold(0.0, f64::max)
    }

    /// Two critical points of the atlas may not share a cell.
    pub fn validate_against(&self, atlas: &LandscapeAtlas) -> Result<(), TopologyError> {
        let pts: Vec<[f64; 2]> = atlas
            .interior_criticals
            .iter()
            .map(|c| c.location)
            .collect();
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for (k, p) in pts.iter().enumerate() {
            if let Some(cell) = self.cell_of(&p[..self.dim]) {
                if let Some((_, prev)) = seen.iter().find(|(c, _)| *c == cell) {
                    return Err(TopologyError::ResolutionTooCoarse {
                        a: pts[*prev],
                        b: *p,
                    });
                }
                seen.push((cell, k));
            }
        }
        Ok(())
    }

    /// Union-find labeling of {value < level}; cells within `margin` of the
    /// level are excluded as well (margin guards against cells that sit
    /// numerically on a critical level).
    pub fn components_below(&self, level: f64, margin: f64) -> Labeling {
        let n = self.cells.len();
        let mut uf = UnionFind::new(n);
        let mut included = vec![false; n];
        for &idx in &self.sorted {
            if self.cells[idx].value >= level - margin {
                break;
            }
            included[idx] = true;
            for nb in self.neighbors(idx) {
                if included[nb] {
                    uf.union(idx, nb);
                }
            }
        }
        Labeling { uf, included }
    }

    /// Exit height of the cell: the smallest cell value v such that the
    /// component of `cell` within {value <= v} contains a boundary-adjacent
    /// cell, together with the component of `cell` strictly below that value.
    pub fn exit_level(&self, cell: usize) -> (f64, Vec<usize>) {
        let vals = &self.sorted_values;
        let reaches = |v: f64| -> bool {
            // inclusive level: value <= v  <=>  value < next representable step
            let lab = self.components_below(v + f64::EPSILON * (1.0 + v.abs()), 0.0);
            self.cells
                .iter()
                .enumerate()
                .any(|(i, c)| c.boundary_adjacent && lab.joined(cell, i))
        };
        let mut lo =
            match vals.binary_search_by(|v| v.partial_cmp(&self.cells[cell].value).unwrap()) {
                Ok(i) => i,
                Err(i) => i,
            };
        let mut hi = vals.len() - 1;
        debug_assert!(reaches(vals[hi]));
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if reaches(vals[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let level = vals[lo];
        let lab = self.components_below(level, 0.0);
        let comp = lab.component_of(cell);
        (level, comp)
    }
}

/// A fixed component labeling at one level.
pub struct Labeling {
    uf: UnionFind,
    pub included: Vec<bool>,
}

impl Labeling {
    /// Both cells included and in the same component.
    pub fn joined(&self, a: usize, b: usize) -> bool {
        self.included[a] && self.included[b] && self.uf.find(a) == self.uf.find(b)
    }

    pub fn contains(&self, a: usize) -> bool {
        self.included[a]
    }

    pub fn root(&self, a: usize) -> Option<usize> {
        self.included[a].then(|| self.uf.find(a))
    }

    pub fn component_of(&self, a: usize) -> Vec<usize> {
        if !self.included[a] {
            return Vec::new();
        }
        let ra = self.uf.find(a);
        (0..self.included.len())
            .filter(|&i| self.included[i] && self.uf.find(i) == ra)
            .collect()
    }
}

/// Union-find with path halving; `find` takes &self via interior indices
/// being recomputed (no mutation needed for correctness, only speed).
#[derive(Debug, Clone)]
struct UnionFind {
    parent: std::cell::RefCell<Vec<u32>>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: std::cell::RefCell::new((0..n as u32).collect()),
            rank: vec![0; n],
        }
    }

    fn find(&self, x: usize) -> usize {
        let mut p = self.parent.borrow_mut();
        let mut root = x as u32;
        while p[root as usize] != root {
            root = p[root as usize];
        }
        let mut cur = x as u32;
        while p[cur as usize] != root {
            let next = p[cur as usize];
            p[cur as usize] = root;
            cur = next;
        }
        root as usize
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (hi, lo) = if self.rank[ra] >= self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent.borrow_mut()[lo] = hi as u32;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{catalog_entry, parse_potential, PotentialField};
    use std::collections::BTreeMap;

    fn double_well() -> (PotentialField, DomainGeometry) {
        let f = PotentialField::new(parse_potential("(x^2-1)^2", &BTreeMap::new()).unwrap());
        (f, DomainGeometry::interval(-2.0, 2.0))
    }

    #[test]
    fn interval_grid_shape() {
        let (f, g) = double_well();
        let grid = GridFiltration::build(&f, &g, 256).unwrap();
        assert_eq!(grid.cells.len(), 256);
        assert!(grid.cells[0].boundary_adjacent);
        assert!(grid.cells[255].boundary_adjacent);
        assert!(!grid.cells[128].boundary_adjacent);
        assert_eq!(grid.neighbors(0), vec![1]);
        assert_eq!(grid.neighbors(10).len(), 2);
    }

    #[test]
    fn ball_grid_only_inside() {
        let e = catalog_entry("two_well_2d").unwrap();
        let f = PotentialField::new(e.spec());
        let grid = GridFiltration::build(&f, &e.domain, 128).unwrap();
        for c in &grid.cells {
            assert!(e.domain.contains(&c.center));
        }
        // roughly pi/4 of the bounding box
        let frac = grid.cells.len() as f64 / (128.0 * 128.0);
        assert!((frac - std::f64::consts::FRAC_PI_4).abs() < 0.02);
    }

    #[test]
    fn exit_level_matches_boundary_value() {
        let (f, g) = double_well();
        let grid = GridFiltration::build(&f, &g, 512).unwrap();
        let minus_one = grid.cell_of(&[-1.0]).unwrap();
        let (level, comp) = grid.exit_level(minus_one);
        // barrier is the boundary value 9, reached at the outermost cells
        assert!((level - 9.0).abs() < 0.15, "level {level}");
        // the strict component below the gate contains both wells
        let plus_one = grid.cell_of(&[1.0]).unwrap();
        assert!(comp.contains(&plus_one));
    }

    #[test]
    fn components_split_below_interior_saddle() {
        let (f, g) = double_well();
        let grid = GridFiltration::build(&f, &g, 512).unwrap();
        let a = grid.cell_of(&[-1.0]).unwrap();
        let b = grid.cell_of(&[1.0]).unwrap();
        let below = grid.components_below(0.999, 0.0);
        assert!(!below.joined(a, b));
        let above = grid.components_below(1.01, 0.0);
        assert!(above.joined(a, b));
    }

    #[test]
    fn coarse_grid_detects_shared_cell() {
        // two minima 1e-4 apart (both inside one 0.0625-wide cell at 64
        // cells on (-2,2)) must be rejected
        let params: BTreeMap<String, f64> =
            [("s".to_string(), 1e12), ("ee".to_string(), 2.5e-9)].into();
        let f = PotentialField::new(parse_potential("s*((x-0.01)^2-ee)^2", &params).unwrap());
        let g = DomainGeometry::interval(-2.0, 2.0);
        let atlas = crate::landscape::build_atlas(&f, &g, 64, 64).unwrap();
        assert_eq!(
            atlas.minima_indices().len(),
            2,
            "finder resolves the close pair"
        );
        let grid = GridFiltration::build(&f, &g, 64).unwrap();
        assert!(matches!(
            grid.validate_against(&atlas),
            Err(TopologyError::ResolutionTooCoarse { .. })
        ));
    }
}
