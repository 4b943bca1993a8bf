//! Separating saddles, exit heights, the recursive well labeling, and the
//! assumption report.
//!
//! Saddle values and minimum values come from the exact critical points of
//! the landscape atlas; the grid only answers connectivity questions.

use serde::Serialize;

use crate::error::TopologyError;
use crate::landscape::LandscapeAtlas;

use super::grid::GridFiltration;

/// Reference to a generalized saddle: index into the atlas's interior
/// critical list or its boundary saddle list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "lowercase")]
pub enum SaddleRef {
    Interior(usize),
    Boundary(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SaddleKind {
    Interior,
    Boundary,
}

/// A generalized saddle whose removal disconnects sublevel sets.
#[derive(Debug, Clone, Serialize)]
pub struct SeparatingSaddle {
    pub saddle: SaddleRef,
    pub kind: SaddleKind,
    pub value: f64,
    pub location: [f64; 2],
    /// Representative cells of the two sublevel components the descent
    /// branches fall into (interior kind only).
    pub merged_component_ids: Option<(usize, usize)>,
    /// Descended branch cells (interior kind).
    #[serde(skip)]
    pub branch_cells: Option<(usize, usize)>,
    /// Descended inward cell (boundary kind).
    #[serde(skip)]
    pub inward_cell: Option<usize>,
}

/// A connected component of a sublevel set, used as the value of the well map.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentInfo {
    pub id: usize,
    /// Level of the sublevel set (exact gate value).
    pub level: f64,
    #[serde(skip)]
    pub cells: Vec<usize>,
    pub touches_boundary: bool,
    /// Atlas indices of interior minima inside the component.
    pub contained_minima: Vec<usize>,
    /// Atlas index of the labeled representative minimum.
    pub representative: usize,
}

/// Labeling entry for one local minimum.
#[derive(Debug, Clone, Serialize)]
pub struct JMapEntry {
    /// Atlas index of the minimum x_{k,l}.
    pub minimum: usize,
    /// Recursion level k (1 = boundary-level wells).
    pub level: usize,
    /// Index l within the level (1-based, deterministic order).
    pub index_in_level: usize,
    /// Indices into `JMap::saddles` of the gate set j(x).
    pub gate: Vec<usize>,
    /// Common value f(j(x)).
    pub gate_value: f64,
    /// Depth f(j(x)) - f(x).
    pub depth: f64,
    /// The well j~(x).
    pub component: ComponentInfo,
}

/// The two labeling maps plus the saddle list they reference.
#[derive(Debug, Clone, Serialize)]
pub struct JMap {
    pub entries: Vec<JMapEntry>,
    pub saddles: Vec<SeparatingSaddle>,
    pub first_level_count: usize,
}

impl JMap {
    pub fn first_level(&self) -> impl Iterator<Item = &JMapEntry> {
        self.entries.iter().filter(|e| e.level == 1)
    }

    pub fn entry_for_minimum(&self, atlas_min: usize) -> Option<&JMapEntry> {
        self.entries.iter().find(|e| e.minimum == atlas_min)
    }

    /// Gate saddles of an entry as refs.
    pub fn gate_refs(&self, entry: &JMapEntry) -> Vec<SaddleRef> {
        entry.gate.iter().map(|&i| self.saddles[i].saddle).collect()
    }

    /// Boundary-saddle atlas indices in the gate of an entry.
    pub fn gate_boundary_contacts(&self, entry: &JMapEntry) -> Vec<usize> {
        entry
            .gate
            .iter()
            .filter_map(|&i| match self.saddles[i].saddle {
                SaddleRef::Boundary(b) => Some(b),
                SaddleRef::Interior(_) => None,
            })
            .collect()
    }

    /// Interior-critical atlas indices in the gate of an entry.
    pub fn gate_interior_saddles(&self, entry: &JMapEntry) -> Vec<usize> {
        entry
            .gate
            .iter()
            .filter_map(|&i| match self.saddles[i].saddle {
                SaddleRef::Interior(c) => Some(c),
                SaddleRef::Boundary(_) => None,
            })
            .collect()
    }
}

/// Exit height of an interior local minimum (atlas index into
/// `interior_criticals`): the grid-bracketed barrier level, plus the cells of
/// the well C(x) strictly below it.
pub fn exit_height(
    grid: &GridFiltration,
    atlas: &LandscapeAtlas,
    min_index: usize,
) -> Result<(f64, Vec<usize>), TopologyError> {
    let c = &atlas.interior_criticals[min_index];
    assert_eq!(c.index, 0, "exit_height takes a local minimum");
    let cell = grid
        .cell_of(&c.location[..grid.dim])
        .expect("minimum lies inside the grid");
    Ok(grid.exit_level(cell))
}

/// Greedy monotone descent on the cell graph.
fn descend(grid: &GridFiltration, start: usize) -> usize {
    let mut cur = start;
    loop {
        let v = grid.cells[cur].value;
        let mut best = cur;
        let mut best_v = v;
        for nb in grid.neighbors(cur) {
            if grid.cells[nb].value < best_v {
                best = nb;
                best_v = grid.cells[nb].value;
            }
        }
        if best == cur {
            return cur;
        }
        cur = best;
    }
}

/// Find a step size for which the seed lies inside the domain (its cell
/// exists) and strictly below the saddle value; halve on failure.
fn seeded_cell(
    grid: &GridFiltration,
    from: [f64; 2],
    dir: [f64; 2],
    level: f64,
) -> Result<usize, TopologyError> {
    let mut step = grid.cell_diagonal();
    for _ in 0..8 {
        let p = [from[0] + step * dir[0], from[1] + step * dir[1]];
        if let Some(cell) = grid.cell_of(&p[..grid.dim]) {
            if grid.cells[cell].value < level {
                return Ok(descend(grid, cell));
            }
        }
        step *= 0.5;
    }
    Err(TopologyError::AmbiguousBranch {
        seed: [
            from[0] + grid.cell_diagonal() * dir[0],
            from[1] + grid.cell_diagonal() * dir[1],
        ],
    })
}

/// Per-minimum grid data shared by saddle detection and the labeling.
struct WellPrepass {
    /// atlas indices of interior minima
    minima: Vec<usize>,
    /// their grid cells
    cells: Vec<usize>,
    /// groups of positions into `minima` forming first-level wells,
    /// with the well's grid level
    groups: Vec<(Vec<usize>, f64)>,
}

fn prepass(grid: &GridFiltration, atlas: &LandscapeAtlas) -> Result<WellPrepass, TopologyError> {
    let minima = atlas.minima_indices();
    let mut cells = Vec::with_capacity(minima.len());
    let mut levels = Vec::with_capacity(minima.len());
    for &m in &minima {
        let cell = grid
            .cell_of(&atlas.interior_criticals[m].location[..grid.dim])
            .expect("minimum inside grid");
        let (level, _) = grid.exit_level(cell);
        cells.push(cell);
        levels.push(level);
    }
    let _ = &levels;
    // Group minima into first-level wells: same component strictly below the
    // smaller of the two levels.
    let mut groups: Vec<(Vec<usize>, f64)> = Vec::new();
    for i in 0..minima.len() {
        let mut placed = false;
        for (members, lvl) in groups.iter_mut() {
            let j = members[0];
            let level = levels[i].min(*lvl);
            let lab = grid.components_below(level, 0.0);
            if lab.joined(cells[i], cells[j]) {
                members.push(i);
                placed = true;
                break;
            }
        }
        if !placed {
            groups.push((vec![i], levels[i]));
        }
    }
    Ok(WellPrepass {
        minima,
        cells,
        groups,
    })
}

/// Tolerance for matching an exact saddle value against a grid-bracketed
/// level. The grid level is measured at whichever cell bottlenecks the
/// minimax path, so the uncertainty is bounded by the largest adjacent value
/// gap anywhere on the grid.
fn match_tol(grid: &GridFiltration, scale: f64) -> f64 {
    2.0 * grid.max_adjacent_gap + 1e-9 * (1.0 + scale.abs())
}

/// Comparator for the argmin tie-break: values compared with a relative
/// tolerance (converged minima of equal analytic value carry fp noise),
/// then lexicographic coordinates.
fn cmp_minima(atlas: &LandscapeAtlas, a: usize, b: usize) -> std::cmp::Ordering {
    let ca = &atlas.interior_criticals[a];
    let cb = &atlas.interior_criticals[b];
    let tol = 1e-9 * (1.0 + ca.value.abs().max(cb.value.abs()));
    if (ca.value - cb.value).abs() > tol {
        return ca.value.partial_cmp(&cb.value).unwrap();
    }
    (ca.location[0], ca.location[1])
        .partial_cmp(&(cb.location[0], cb.location[1]))
        .unwrap()
}

/// Detect all separating saddles (interior index-1 criticals whose descent
/// branches fall in distinct sublevel components, and boundary saddles lying
/// on the boundary of a first-level well).
pub fn detect_separating_saddles(
    grid: &GridFiltration,
    atlas: &LandscapeAtlas,
) -> Result<Vec<SeparatingSaddle>, TopologyError> {
    let pre = prepass(grid, atlas)?;
    let mut out = Vec::new();

    for (ci, c) in atlas.interior_criticals.iter().enumerate() {
        if c.index != 1 {
            continue;
        }
        let dir = c
            .neg_direction
            .expect("index-1 critical has a negative direction");
        let z_cell = grid
            .cell_of(&c.location[..grid.dim])
            .expect("interior critical inside grid");
        let bp = seeded_cell(grid, c.location, dir, c.value)?;
        let bm = seeded_cell(grid, c.location, [-dir[0], -dir[1]], c.value)?;
        // Membership: the saddle must lie on the closure of a first-level
        // well (its value at most the well level, branch connected to it).
        let tol = match_tol(grid, c.value);
        let mut member = false;
        for (members, lvl) in &pre.groups {
            if c.value <= lvl + tol {
                let lab = grid.components_below(*lvl, 0.0);
                let rep_cell = pre.cells[members[0]];
                if lab.joined(bp, rep_cell) || lab.joined(bm, rep_cell) {
                    member = true;
                    break;
                }
            }
        }
        if !member {
            continue;
        }
        let margin = 2.0 * grid.local_gap(z_cell);
        let lab = grid.components_below(c.value, margin);
        if !lab.contains(bp) || !lab.contains(bm) {
            return Err(TopologyError::AmbiguousBranch { seed: c.location });
        }
        if !lab.joined(bp, bm) {
            out.push(SeparatingSaddle {
                saddle: SaddleRef::Interior(ci),
                kind: SaddleKind::Interior,
                value: c.value,
                location: c.location,
                merged_component_ids: Some((lab.root(bp).unwrap(), lab.root(bm).unwrap())),
                branch_cells: Some((bp, bm)),
                inward_cell: None,
            });
        }
    }

    for (bi, b) in atlas.boundary_saddles.iter().enumerate() {
        // Inward descent seed: -outward normal direction.
        let geom_normal = inward_direction(grid, b.location);
        let r = seeded_cell(grid, b.location, geom_normal, f64::INFINITY)?;
        let r = descend(grid, r);
        let tol = match_tol(grid, b.value);
        let mut on_first_level = false;
        for (members, lvl) in &pre.groups {
            if (b.value - lvl).abs() <= tol {
                let lab = grid.components_below(*lvl, 0.0);
                if lab.joined(r, pre.cells[members[0]]) {
                    on_first_level = true;
                    break;
                }
            }
        }
        if on_first_level {
            out.push(SeparatingSaddle {
                saddle: SaddleRef::Boundary(bi),
                kind: SaddleKind::Boundary,
                value: b.value,
                location: b.location,
                merged_component_ids: None,
                branch_cells: None,
                inward_cell: Some(r),
            });
        }
    }
    Ok(out)
}

/// Unit direction from a boundary point toward the domain interior,
/// approximated through the nearest cell center.
fn inward_direction(grid: &GridFiltration, z: [f64; 2]) -> [f64; 2] {
    if grid.dim == 1 {
        // left endpoint points right, right endpoint points left
        let first = grid.cells.first().unwrap().center[0];
        let last = grid.cells.last().unwrap().center[0];
        if (z[0] - first).abs() < (z[0] - last).abs() {
            [1.0, 0.0]
        } else {
            [-1.0, 0.0]
        }
    } else {
        // toward the grid centroid (ball center)
        let mut cx = 0.0;
        let mut cy = 0.0;
        let n = grid.cells.len() as f64;
        for c in &grid.cells {
            cx += c.center[0];
            cy += c.center[1];
        }
        let d = [cx / n - z[0], cy / n - z[1]];
        let norm = (d[0] * d[0] + d[1] * d[1]).sqrt();
        [d[0] / norm, d[1] / norm]
    }
}

/// Build the labeling maps by the level-set recursion: boundary-level wells
/// first, then repeatedly split below the highest remaining separating
/// saddle value and label each newly isolated component's minimum.
pub fn construct_jmaps(
    grid: &GridFiltration,
    atlas: &LandscapeAtlas,
    saddles: &[SeparatingSaddle],
) -> Result<JMap, TopologyError> {
    let pre = prepass(grid, atlas)?;
    let mut entries: Vec<JMapEntry> = Vec::new();
    let mut labeled: Vec<usize> = Vec::new(); // positions into pre.minima
    let mut next_component_id = 0;
    let best_of = |members: &[usize]| -> usize {
        *members
            .iter()
            .min_by(|&&a, &&b| cmp_minima(atlas, pre.minima[a], pre.minima[b]))
            .unwrap()
    };

    // ---- first level ----
    // deterministic order: by (value, coords) of the representative
    let mut group_order: Vec<usize> = (0..pre.groups.len()).collect();
    group_order.sort_by(|&a, &b| {
        cmp_minima(
            atlas,
            pre.minima[best_of(&pre.groups[a].0)],
            pre.minima[best_of(&pre.groups[b].0)],
        )
    });

    for (ell, &gidx) in group_order.iter().enumerate() {
        let (members, lvl) = &pre.groups[gidx];
        // representative: argmin by (value, lexicographic coordinates)
        let rep_pos = best_of(members);
        let rep_min = pre.minima[rep_pos];
        let rep_cell = pre.cells[rep_pos];
        let lab = grid.components_below(*lvl, 0.0);

        // gate: separating saddles attached to this component at its level
        let mut candidates: Vec<(usize, f64)> = Vec::new();
        for (si, s) in saddles.iter().enumerate() {
            if (s.value - lvl).abs() > match_tol(grid, s.value) {
                continue;
            }
            let attached = match (s.kind, s.branch_cells, s.inward_cell) {
                (SaddleKind::Interior, Some((bp, bm)), _) => {
                    lab.joined(bp, rep_cell) || lab.joined(bm, rep_cell)
                }
                (SaddleKind::Boundary, _, Some(r)) => lab.joined(r, rep_cell),
                _ => false,
            };
            if attached {
                candidates.push((si, s.value));
            }
        }
        if candidates.is_empty() {
            return Err(TopologyError::MissingGate { minimum: rep_min });
        }
        // the true gate value: the candidate bucket closest to the grid level
        let scale = 1.0 + lvl.abs();
        let gate_value = candidates
            .iter()
            .map(|&(_, v)| v)
            .min_by(|a, b| ((a - lvl).abs()).partial_cmp(&((b - lvl).abs())).unwrap())
            .unwrap();
        let gate: Vec<usize> = candidates
            .iter()
            .filter(|&&(_, v)| (v - gate_value).abs() <= 1e-9 * scale)
            .map(|&(si, _)| si)
            .collect();

        let cells = lab.component_of(rep_cell);
        let touches = cells.iter().any(|&c| grid.cells[c].boundary_adjacent);
        let contained: Vec<usize> = members.iter().map(|&i| pre.minima[i]).collect();
        let rep_value = atlas.interior_criticals[rep_min].value;
        entries.push(JMapEntry {
            minimum: rep_min,
            level: 1,
            index_in_level: ell + 1,
            gate,
            gate_value,
            depth: gate_value - rep_value,
            component: ComponentInfo {
                id: next_component_id,
                level: gate_value,
                cells,
                touches_boundary: touches,
                contained_minima: contained,
                representative: rep_min,
            },
        });
        next_component_id += 1;
        labeled.push(rep_pos);
    }

    // ---- recursion over interior separating saddle values ----
    let first_level_count = entries.len();
    let mut remaining: Vec<usize> = (0..pre.minima.len())
        .filter(|p| !labeled.contains(p))
        .collect();

    // interior separating saddles strictly inside some first-level well
    let mut inside: Vec<(usize, f64)> = Vec::new();
    for (si, s) in saddles.iter().enumerate() {
        if s.kind != SaddleKind::Interior {
            continue;
        }
        let s_cell = grid.cell_of(&s.location[..grid.dim]).unwrap();
        for (members, lvl) in &pre.groups {
            if s.value < *lvl {
                let lab = grid.components_below(*lvl, 0.0);
                if lab.contains(s_cell) && lab.joined(s_cell, pre.cells[members[0]]) {
                    inside.push((si, s.value));
                    break;
                }
            }
        }
    }
    // distinct values descending, bucketed at 1e-9 relative
    inside.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut buckets: Vec<(f64, Vec<usize>)> = Vec::new();
    for (si, v) in inside {
        match buckets.last_mut() {
            Some((bv, list)) if (*bv - v).abs() <= 1e-9 * (1.0 + bv.abs()) => list.push(si),
            _ => buckets.push((v, vec![si])),
        }
    }

    let mut level_k = 2;
    for (sigma, bucket) in buckets {
        if remaining.is_empty() {
            break;
        }
        let margin = bucket
            .iter()
            .map(|&si| {
                let cell = grid.cell_of(&saddles[si].location[..grid.dim]).unwrap();
                2.0 * grid.local_gap(cell)
            })
            .fold(0.0, f64::max);
        let lab = grid.components_below(sigma, margin);
        let labeled_roots: Vec<usize> = labeled
            .iter()
            .filter_map(|&p| lab.root(pre.cells[p]))
            .collect();

        // group remaining minima by component root
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for &p in &remaining {
            if let Some(r) = lab.root(pre.cells[p]) {
                match groups.iter_mut().find(|(root, _)| *root == r) {
                    Some((_, list)) => list.push(p),
                    None => groups.push((r, vec![p])),
                }
            }
        }
        // deterministic order by representative key
        groups.sort_by(|a, b| {
            cmp_minima(atlas, pre.minima[best_of(&a.1)], pre.minima[best_of(&b.1)])
        });

        let mut ell = 0;
        let mut newly_labeled: Vec<usize> = Vec::new();
        for (root, group) in groups {
            if labeled_roots.contains(&root) {
                continue; // component still holds an already-labeled minimum
            }
            let rep_pos = best_of(&group);
            let rep_min = pre.minima[rep_pos];
            let rep_cell = pre.cells[rep_pos];
            let gate: Vec<usize> = bucket
                .iter()
                .copied()
                .filter(|&si| {
                    let (bp, bm) = saddles[si].branch_cells.unwrap();
                    lab.joined(bp, rep_cell) || lab.joined(bm, rep_cell)
                })
                .collect();
            if gate.is_empty() {
                return Err(TopologyError::MissingGate { minimum: rep_min });
            }
            let cells = lab.component_of(rep_cell);
            let touches = cells.iter().any(|&c| grid.cells[c].boundary_adjacent);
            let contained: Vec<usize> = group.iter().map(|&p| pre.minima[p]).collect();
            let rep_value = atlas.interior_criticals[rep_min].value;
            ell += 1;
            entries.push(JMapEntry {
                minimum: rep_min,
                level: level_k,
                index_in_level: ell,
                gate,
                gate_value: sigma,
                depth: sigma - rep_value,
                component: ComponentInfo {
                    id: next_component_id,
                    level: sigma,
                    cells,
                    touches_boundary: touches,
                    contained_minima: contained,
                    representative: rep_min,
                },
            });
            next_component_id += 1;
            newly_labeled.push(rep_pos);
        }
        if ell > 0 {
            level_k += 1;
        }
        labeled.extend_from_slice(&newly_labeled);
        remaining.retain(|p| !newly_labeled.contains(p));
    }

    if !remaining.is_empty() {
        return Err(TopologyError::UnlabeledMinimum {
            count: remaining.len(),
        });
    }

    // Strict separation: every non-first-level depth must lie below every
    // first-level depth.
    let min_first_depth = entries[..first_level_count]
        .iter()
        .map(|e| e.depth)
        .fold(f64::INFINITY, f64::min);
    debug_assert!(
        entries[first_level_count..]
            .iter()
            .all(|e| e.depth < min_first_depth),
        "strict separation of depths violated"
    );

    Ok(JMap {
        entries,
        saddles: saddles.to_vec(),
        first_level_count,
    })
}

/// Verdict for one assumption with its witnesses.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub holds: bool,
    /// Human-readable witnesses (locations/values relevant to the verdict).
    pub witnesses: Vec<String>,
}

/// Per-contact serialized info.
#[derive(Debug, Clone, Serialize)]
pub struct ContactInfo {
    pub location: [f64; 2],
    pub value: f64,
    pub normal_derivative: f64,
    pub boundary_coordinate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CmaxInfo {
    /// Index into `JMap::entries`.
    pub entry: usize,
    pub depth: f64,
    pub minimum_location: [f64; 2],
    pub minimum_value: f64,
    /// Global minima of f inside the maximal well.
    pub argmin: Vec<[f64; 2]>,
}

/// Verdicts and witnesses for the landscape assumptions, plus the data the
/// prediction layer needs.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub a0: crate::landscape::A0Report,
    pub a1: Verdict,
    /// Depth lead of the maximal well over the runner-up.
    pub a1_margin: f64,
    pub a2: Verdict,
    pub a3: Verdict,
    pub a4: Verdict,
    pub cmax: Option<CmaxInfo>,
    pub boundary_contacts: Vec<ContactInfo>,
    pub boundary_min_value: f64,
    /// min over the maximal well's closure equals min over the whole domain
    pub min_cmax_equals_global_min: bool,
    /// The maximal well's boundary meets no other first-level well boundary.
    pub cmax_boundary_disjoint: bool,
    pub first_level_depths: Vec<f64>,
    pub grid_value_tolerance: f64,
}

/// Evaluate the assumptions from a completed labeling.
pub fn check_assumptions(
    grid: &GridFiltration,
    atlas: &LandscapeAtlas,
    jmap: &JMap,
) -> AssumptionReport {
    let first: Vec<&JMapEntry> = jmap.first_level().collect();
    let depths: Vec<f64> = first.iter().map(|e| e.depth).collect();

    // A1: unique maximizer of depth with a margin above grid noise.
    let mut order: Vec<usize> = (0..first.len()).collect();
    order.sort_by(|&a, &b| depths[b].partial_cmp(&depths[a]).unwrap());
    let tol = grid.max_adjacent_gap;
    let (a1_holds, margin) = if first.len() == 1 {
        (true, f64::INFINITY)
    } else {
        let m = depths[order[0]] - depths[order[1]];
        (m > tol, m)
    };
    let a1_witnesses: Vec<String> = if a1_holds {
        vec![format!(
            "max depth {:.6} at minimum {:?}",
            depths[order[0]], atlas.interior_criticals[first[order[0]].minimum].location
        )]
    } else {
        order
            .iter()
            .take(2)
            .map(|&i| {
                format!(
                    "depth {:.6} at minimum {:?}",
                    depths[i], atlas.interior_criticals[first[i].minimum].location
                )
            })
            .collect()
    };

    // The top entry is used as C_max whenever A1 holds.
    let top = first[order[0]];
    let top_entry_index = jmap
        .entries
        .iter()
        .position(|e| std::ptr::eq(e, top))
        .unwrap();

    let contacts_idx = jmap.gate_boundary_contacts(top);
    let contacts: Vec<ContactInfo> = contacts_idx
        .iter()
        .map(|&b| {
            let s = &atlas.boundary_saddles[b];
            ContactInfo {
                location: s.location,
                value: s.value,
                normal_derivative: s.normal_derivative,
                boundary_coordinate: s.boundary_coordinate,
            }
        })
        .collect();

    // A2: the maximal well's boundary meets the domain boundary.
    let a2_holds = !contacts.is_empty();
    let a2_witnesses = if a2_holds {
        contacts
            .iter()
            .map(|c| format!("contact at {:?}", c.location))
            .collect()
    } else {
        vec!["no boundary contact on the maximal well".into()]
    };

    // A3: all contacts at the boundary minimum value.
    let vtol = 1e-9 * (1.0 + atlas.boundary_min_value.abs());
    let offending: Vec<&ContactInfo> = contacts
        .iter()
        .filter(|c| (c.value - atlas.boundary_min_value).abs() > vtol)
        .collect();
    let a3_holds = offending.is_empty();
    let a3_witnesses = if a3_holds {
        vec![format!(
            "all contacts at boundary minimum {:.6}",
            atlas.boundary_min_value
        )]
    } else {
        offending
            .iter()
            .map(|c| {
                format!(
                    "contact at {:?} has value {:.6} above boundary minimum {:.6}",
                    c.location, c.value, atlas.boundary_min_value
                )
            })
            .collect()
    };

    // A4: the gate of the maximal well contains no interior separating saddle.
    let interior_gate = jmap.gate_interior_saddles(top);
    let a4_holds = interior_gate.is_empty();
    let a4_witnesses = if a4_holds {
        vec!["gate lies entirely on the domain boundary".into()]
    } else {
        interior_gate
            .iter()
            .map(|&c| {
                format!(
                    "interior separating saddle at {:?} on the maximal well boundary",
                    atlas.interior_criticals[c].location
                )
            })
            .collect()
    };

    // argmin of f over the maximal well
    let top_min_value = atlas.interior_criticals[top.minimum].value;
    let scale = 1.0 + top_min_value.abs();
    let argmin: Vec<[f64; 2]> = top
        .component
        .contained_minima
        .iter()
        .map(|&m| &atlas.interior_criticals[m])
        .filter(|c| (c.value - top_min_value).abs() <= 1e-9 * scale)
        .map(|c| c.location)
        .collect();

    let global_min = atlas
        .minima()
        .map(|(_, c)| c.value)
        .fold(f64::INFINITY, f64::min);
    let min_cmax_equals_global_min = (top_min_value - global_min).abs() <= 1e-9 * scale;

    // Does the maximal well's boundary meet another first-level well's
    // boundary? Exactly when an interior separating saddle at the top gate
    // value has one branch in the maximal well and the other in a different
    // first-level well.
    let mut disjoint = true;
    {
        let sigma1 = top.gate_value;
        let lab = grid.components_below(sigma1, 0.0);
        let top_cell = grid
            .cell_of(&atlas.interior_criticals[top.minimum].location[..grid.dim])
            .unwrap();
        for s in &jmap.saddles {
            if s.kind != SaddleKind::Interior {
                continue;
            }
            if (s.value - sigma1).abs() > match_tol(grid, s.value) {
                continue;
            }
            let (bp, bm) = s.branch_cells.unwrap();
            let touches_top = lab.joined(bp, top_cell) || lab.joined(bm, top_cell);
            if !touches_top {
                continue;
            }
            for e in jmap.first_level() {
                if std::ptr::eq(e, top) {
                    continue;
                }
                let other_cell = grid
                    .cell_of(&atlas.interior_criticals[e.minimum].location[..grid.dim])
                    .unwrap();
                if lab.joined(bp, other_cell) || lab.joined(bm, other_cell) {
                    disjoint = false;
                }
            }
        }
    }

    AssumptionReport {
        a0: atlas.a0_report.clone(),
        a1: Verdict {
            holds: a1_holds,
            witnesses: a1_witnesses,
        },
        a1_margin: margin,
        a2: Verdict {
            holds: a2_holds,
            witnesses: a2_witnesses,
        },
        a3: Verdict {
            holds: a3_holds,
            witnesses: a3_witnesses,
        },
        a4: Verdict {
            holds: a4_holds,
            witnesses: a4_witnesses,
        },
        cmax: a1_holds.then(|| CmaxInfo {
            entry: top_entry_index,
            depth: top.depth,
            minimum_location: atlas.interior_criticals[top.minimum].location,
            minimum_value: top_min_value,
            argmin,
        }),
        boundary_contacts: contacts,
        boundary_min_value: atlas.boundary_min_value,
        min_cmax_equals_global_min,
        cmax_boundary_disjoint: disjoint,
        first_level_depths: depths,
        grid_value_tolerance: tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::build_atlas;
    use crate::potential::{catalog_entry, PotentialField};

    pub(crate) fn analyze(
        name: &str,
        res: usize,
    ) -> (GridFiltration, LandscapeAtlas, JMap, AssumptionReport) {
        let e = catalog_entry(name).unwrap();
        let field = PotentialField::new(e.spec());
        let seeds = if e.domain.dim() == 1 { 64 } else { 32 };
        let atlas = build_atlas(&field, &e.domain, seeds, 512).unwrap();
        let grid = GridFiltration::build(&field, &e.domain, res).unwrap();
        grid.validate_against(&atlas).unwrap();
        let saddles = detect_separating_saddles(&grid, &atlas).unwrap();
        let jmap = construct_jmaps(&grid, &atlas, &saddles).unwrap();
        let report = check_assumptions(&grid, &atlas, &jmap);
        (grid, atlas, jmap, report)
    }

    #[test]
    fn double_well_structure() {
        let (_, atlas, jmap, report) = analyze("double_well", 512);
        assert_eq!(jmap.first_level_count, 1);
        assert_eq!(jmap.entries.len(), 2);
        let first = &jmap.entries[0];
        // tie-break picks the leftmost of the two equal minima
        assert!((atlas.interior_criticals[first.minimum].location[0] + 1.0).abs() < 1e-6);
        assert_eq!(jmap.gate_boundary_contacts(first).len(), 2);
        assert!((first.gate_value - 9.0).abs() < 1e-9);
        assert!((first.depth - 9.0).abs() < 1e-9);
        let second = &jmap.entries[1];
        assert_eq!(second.level, 2);
        let gates = jmap.gate_interior_saddles(second);
        assert_eq!(gates.len(), 1);
        assert!(atlas.interior_criticals[gates[0]].location[0].abs() < 1e-6);
        assert!((second.depth - 1.0).abs() < 1e-9);
        assert!(report.a1.holds && report.a2.holds && report.a3.holds && report.a4.holds);
        assert!(report.min_cmax_equals_global_min);
    }

    #[test]
    fn double_well_separating_saddles() {
        let (grid, atlas, _, _) = analyze("double_well", 512);
        let saddles = detect_separating_saddles(&grid, &atlas).unwrap();
        // the interior saddle at 0 separates, both endpoints lie on the well
        let interior: Vec<_> = saddles
            .iter()
            .filter(|s| s.kind == SaddleKind::Interior)
            .collect();
        let boundary: Vec<_> = saddles
            .iter()
            .filter(|s| s.kind == SaddleKind::Boundary)
            .collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(boundary.len(), 2);
        assert!(interior[0].merged_component_ids.is_some());
    }

    #[test]
    fn triple_well_gate_structure() {
        let (_, atlas, jmap, report) = analyze("triple_well", 512);
        assert_eq!(jmap.first_level_count, 1);
        assert_eq!(jmap.entries.len(), 3);
        let e1 = &jmap.entries[0];
        // deepest minimum is the right well (global)
        assert!(atlas.interior_criticals[e1.minimum].location[0] > 1.0);
        assert_eq!(jmap.gate_boundary_contacts(e1).len(), 2);
        assert!(jmap.gate_interior_saddles(e1).is_empty());
        // second level: the left well over the higher interior saddle
        let e2 = &jmap.entries[1];
        assert_eq!(e2.level, 2);
        assert!(atlas.interior_criticals[e2.minimum].location[0] < -1.0);
        let g2 = jmap.gate_interior_saddles(e2);
        assert_eq!(g2.len(), 1);
        assert!(atlas.interior_criticals[g2[0]].location[0] < 0.0);
        // third level: the middle well over the lower interior saddle
        let e3 = &jmap.entries[2];
        assert_eq!(e3.level, 3);
        assert!(atlas.interior_criticals[e3.minimum].location[0].abs() < 0.2);
        let g3 = jmap.gate_interior_saddles(e3);
        assert_eq!(g3.len(), 1);
        assert!(atlas.interior_criticals[g3[0]].location[0] > 0.0);
        // strict separation
        assert!(e2.depth < e1.depth && e3.depth < e1.depth);
        assert!(report.a1.holds && report.a2.holds && report.a3.holds && report.a4.holds);
    }

    #[test]
    fn hip1_a1_fails_with_two_witnesses() {
        let (_, _, jmap, report) = analyze("hip1", 512);
        assert_eq!(jmap.first_level_count, 2);
        assert!(!report.a1.holds);
        assert_eq!(report.a1.witnesses.len(), 2);
        assert!(report.a1_margin.abs() < report.grid_value_tolerance);
        assert!(report.cmax.is_none());
    }

    #[test]
    fn hip2_a2_fails() {
        let (_, atlas, jmap, report) = analyze("hip2", 512);
        assert!(report.a1.holds);
        assert!(!report.a2.holds, "maximal well must be interior");
        assert!(report.boundary_contacts.is_empty());
        // the shallow well's gate is the left endpoint
        let shallow = jmap
            .entries
            .iter()
            .find(|e| {
                e.level == 1
                    && !std::ptr::eq(*e, &jmap.entries[report.cmax.as_ref().unwrap().entry])
            })
            .unwrap();
        let contacts = jmap.gate_boundary_contacts(shallow);
        assert_eq!(contacts.len(), 1);
        assert_eq!(
            atlas.boundary_saddles[contacts[0]].boundary_coordinate,
            -1.0
        );
    }

    #[test]
    fn hip3_a3_fails() {
        let (_, _, _, report) = analyze("hip3", 512);
        assert!(report.a1.holds && report.a2.holds);
        assert!(!report.a3.holds);
        // witness: the contact value exceeds the boundary minimum
        assert!(!report.a3.witnesses.is_empty());
        assert_eq!(report.boundary_contacts.len(), 1);
        assert_eq!(report.boundary_contacts[0].boundary_coordinate, -1.0);
    }

    #[test]
    fn hip4_a4_fails_via_interior_gate_saddle() {
        let (_, _, _, report) = analyze("hip4", 512);
        assert!(report.a1.holds && report.a2.holds && report.a3.holds);
        assert!(!report.a4.holds);
        assert_eq!(report.a4.witnesses.len(), 1);
        // the maximal well touches only the right endpoint
        assert_eq!(report.boundary_contacts.len(), 1);
        assert_eq!(report.boundary_contacts[0].boundary_coordinate, 1.0);
        // and shares its boundary with the other well through the saddle
        assert!(!report.cmax_boundary_disjoint);
    }

    #[test]
    fn twin_floor_tie_break_and_depth_multiset() {
        let (_, atlas, jmap, _) = analyze("twin_floor", 512);
        assert_eq!(jmap.first_level_count, 1);
        let first = &jmap.entries[0];
        // two exactly equal minima; lexicographic tie-break picks x = -1
        assert!((atlas.interior_criticals[first.minimum].location[0] + 1.0).abs() < 1e-6);
        assert_eq!(first.component.contained_minima.len(), 2);
        let mut depths: Vec<f64> = jmap.entries.iter().map(|e| e.depth).collect();
        depths.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // depth multiset is labeling-independent: f(-1.8) - 0 and saddle - 0
        assert!((depths[0] - 3.6628480000000003).abs() < 1e-9);
        assert!((depths[1] - 1.0027988103316318).abs() < 1e-6);
    }

    #[test]
    fn ring_2d_separating_vs_not() {
        let e = catalog_entry("ring_2d").unwrap();
        let field = PotentialField::new(e.spec());
        let atlas = build_atlas(&field, &e.domain, 32, 512).unwrap();
        let grid = GridFiltration::build(&field, &e.domain, 160).unwrap();
        let saddles = detect_separating_saddles(&grid, &atlas).unwrap();
        // interior index-1 criticals: the two ring passes
        let passes: Vec<&crate::landscape::CriticalPoint> = atlas
            .interior_criticals
            .iter()
            .filter(|c| c.index == 1)
            .collect();
        assert_eq!(passes.len(), 2);
        let low = passes.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
        // only the lower pass separates; the higher branches reconnect
        // through it (flood-fill oracle at each saddle level agrees)
        let interior: Vec<&SeparatingSaddle> = saddles
            .iter()
            .filter(|s| s.kind == SaddleKind::Interior)
            .collect();
        assert_eq!(interior.len(), 1);
        assert!((interior[0].value - low).abs() < 1e-9);

        // flood-fill oracle: component count of {f < f(z) - eps} touching the
        // two branch seeds
        for c in &passes {
            let dir = c.neg_direction.unwrap();
            let step = grid.cell_diagonal();
            let sp = [c.location[0] + step * dir[0], c.location[1] + step * dir[1]];
            let sm = [c.location[0] - step * dir[0], c.location[1] - step * dir[1]];
            let (cp, cm) = (grid.cell_of(&sp).unwrap(), grid.cell_of(&sm).unwrap());
            let lab = grid.components_below(
                c.value,
                2.0 * grid.local_gap(grid.cell_of(&c.location).unwrap()),
            );
            let separated = !lab.joined(descend_pub(&grid, cp), descend_pub(&grid, cm));
            assert_eq!(
                separated,
                (c.value - low).abs() < 1e-9,
                "separating status mismatch at {:?}",
                c.location
            );
        }
        let jmap = construct_jmaps(&grid, &atlas, &saddles).unwrap();
        assert_eq!(jmap.first_level_count, 1);
        assert_eq!(jmap.entries.len(), 2);
        let report = check_assumptions(&grid, &atlas, &jmap);
        assert!(report.a1.holds);
        assert_eq!(report.boundary_contacts.len(), 2);
    }

    pub(crate) fn descend_pub(grid: &GridFiltration, c: usize) -> usize {
        super::descend(grid, c)
    }

    /// Dijkstra minimax-path oracle on the cell graph: the smallest over
    /// paths from `start` to any boundary-adjacent cell of the maximum cell
    /// value along the path.
    pub(crate) fn minimax_to_boundary(grid: &GridFiltration, start: usize) -> f64 {
        let n = grid.cells.len();
        let mut best = vec![f64::INFINITY; n];
        let mut visited = vec![false; n];
        best[start] = grid.cells[start].value;
        loop {
            let mut u = usize::MAX;
            let mut uv = f64::INFINITY;
            for i in 0..n {
                if !visited[i] && best[i] < uv {
                    u = i;
                    uv = best[i];
                }
            }
            if u == usize::MAX {
                return f64::INFINITY;
            }
            if grid.cells[u].boundary_adjacent {
                return best[u];
            }
            visited[u] = true;
            for nb in grid.neighbors(u) {
                let cand = best[u].max(grid.cells[nb].value);
                if cand < best[nb] {
                    best[nb] = cand;
                }
            }
        }
    }

    #[test]
    fn exit_height_matches_minimax_oracle() {
        for name in ["double_well", "hip2", "hip3", "triple_well", "twin_floor"] {
            let (grid, atlas, _, _) = analyze(name, 256);
            for m in atlas.minima_indices() {
                let (level, _) = exit_height(&grid, &atlas, m).unwrap();
                let cell = grid
                    .cell_of(&atlas.interior_criticals[m].location[..grid.dim])
                    .unwrap();
                let oracle = minimax_to_boundary(&grid, cell);
                assert!(
                    (level - oracle).abs() <= grid.max_adjacent_gap,
                    "{name}: exit height {level} vs minimax {oracle}"
                );
            }
        }
    }

    #[test]
    fn well_components_are_disjoint_open_and_gated() {
        // pr.p1 grid analogue: first-level wells pairwise disjoint, strictly
        // inside, each with a nonempty gate.
        for name in ["double_well", "hip2", "hip3", "hip4", "triple_well", "hip1"] {
            let (grid, _, jmap, _) = analyze(name, 256);
            let first: Vec<&JMapEntry> = jmap.first_level().collect();
            for (i, a) in first.iter().enumerate() {
                assert!(!a.gate.is_empty(), "{name}: well {i} has an empty gate");
                for b in first.iter().skip(i + 1) {
                    assert!(
                        a.component
                            .cells
                            .iter()
                            .all(|c| !b.component.cells.contains(c)),
                        "{name}: first-level wells overlap"
                    );
                }
            }
            // strictly inside: no well cell value reaches the gate level
            for e in &first {
                for &c in &e.component.cells {
                    assert!(grid.cells[c].value < e.gate_value + grid.max_adjacent_gap);
                }
            }
        }
    }

    #[test]
    fn component_interior_saddle_iff_multiple_minima() {
        // pr.p2 grid analogue, on every labeled component.
        for name in ["double_well", "triple_well", "hip4", "twin_floor"] {
            let (grid, atlas, jmap, _) = analyze(name, 256);
            for e in &jmap.entries {
                let has_multiple = e.component.contained_minima.len() >= 2;
                // does the component interior contain a separating saddle?
                let has_ssp = jmap.saddles.iter().any(|s| {
                    s.kind == SaddleKind::Interior
                        && s.value < e.gate_value - 1e-12
                        && grid
                            .cell_of(&s.location[..grid.dim])
                            .map(|c| e.component.cells.contains(&c))
                            .unwrap_or(false)
                });
                assert_eq!(
                    has_ssp, has_multiple,
                    "{name}: component of {:?} violates the saddle/minima equivalence",
                    atlas.interior_criticals[e.minimum].location
                );
            }
        }
    }

    #[test]
    fn sublevel_component_lies_in_its_own_basin() {
        // a well strictly inside the domain is contained in its own basin
        // of attraction: the gradient flow from any of its cells converges
        // to a minimum of the same well without leaving the domain
        let e = catalog_entry("hip2").unwrap();
        let field = PotentialField::new(e.spec());
        let (grid, atlas, jmap, report) = {
            let atlas = build_atlas(&field, &e.domain, 64, 512).unwrap();
            let grid = GridFiltration::build(&field, &e.domain, 256).unwrap();
            let saddles = detect_separating_saddles(&grid, &atlas).unwrap();
            let jmap = construct_jmaps(&grid, &atlas, &saddles).unwrap();
            let report = check_assumptions(&grid, &atlas, &jmap);
            (grid, atlas, jmap, report)
        };
        let cmax = report.cmax.as_ref().unwrap();
        let entry = &jmap.entries[cmax.entry];
        let minima: Vec<[f64; 2]> = entry
            .component
            .contained_minima
            .iter()
            .map(|&m| atlas.interior_criticals[m].location)
            .collect();
        let target = |p: &[f64]| minima.iter().any(|m| (m[0] - p[0]).abs() < 1e-4);
        for (k, &cell) in entry.component.cells.iter().enumerate() {
            if k % 17 != 0 {
                continue; // sample the component
            }
            let x = grid.cells[cell].center;
            let inside =
                crate::landscape::in_attraction_basin(&field, &e.domain, &x[..1], &target, 1e5)
                    .unwrap();
            assert!(inside, "cell at {x:?} escaped its own well under the flow");
        }
    }

    #[test]
    fn grid_doubling_preserves_verdicts_and_depths() {
        for name in ["double_well", "hip1", "hip2", "hip3", "hip4", "triple_well"] {
            let (grid_a, _, jmap_a, ra) = analyze(name, 256);
            let (_, _, jmap_b, rb) = analyze(name, 512);
            assert_eq!(
                ra.a1.holds, rb.a1.holds,
                "{name}: A1 changed with resolution"
            );
            assert_eq!(ra.a2.holds, rb.a2.holds, "{name}: A2 changed");
            assert_eq!(ra.a3.holds, rb.a3.holds, "{name}: A3 changed");
            assert_eq!(ra.a4.holds, rb.a4.holds, "{name}: A4 changed");
            let mut da: Vec<f64> = jmap_a.entries.iter().map(|e| e.depth).collect();
            let mut db: Vec<f64> = jmap_b.entries.iter().map(|e| e.depth).collect();
            da.sort_by(|a, b| a.partial_cmp(b).unwrap());
            db.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(da.len(), db.len());
            for (x, y) in da.iter().zip(&db) {
                assert!(
                    (x - y).abs() <= grid_a.max_adjacent_gap,
                    "{name}: depth moved more than the coarse value gap"
                );
            }
        }
    }
}
