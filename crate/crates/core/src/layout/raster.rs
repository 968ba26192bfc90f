//! Semantic + height raster ingestion: connected components are traced to
//! polygons with marching squares and simplified.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::layout::{AssetCategory, AssetId, Footprint, GeoLayout, LatLon, LayoutElement};
use crate::math::polygon::{douglas_peucker_ring, ensure_ccw, signed_area};
use crate::math::{Rect, Vec2};
use crate::num::{cast, Real};

/// 2.5D layout given as a class-id grid plus a height grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterLayout<S> {
    pub semantic: Grid<u8>,
    pub height: Grid<S>,
    pub cell_size_m: S,
}

impl<S: Real> RasterLayout<S> {
    pub fn new(semantic: Grid<u8>, height: Grid<S>, cell_size_m: S) -> Result<Self> {
        if semantic.width() != height.width() || semantic.height() != height.height() {
            return Err(Error::Shape(format!(
                "semantic grid {}x{} vs height grid {}x{}",
                semantic.width(),
                semantic.height(),
                height.width(),
                height.height()
            )));
        }
        Ok(Self { semantic, height, cell_size_m })
    }
}

/// Trace every mapped class into polygonal layout elements. Class ids
/// mapped to `None` are ignored.
pub fn parse_raster_layout<S: Real>(
    raster: &RasterLayout<S>,
    class_map: &BTreeMap<u8, Option<AssetCategory>>,
) -> Result<GeoLayout<S>> {
    if raster.semantic.width() != raster.height.width()
        || raster.semantic.height() != raster.height.height()
    {
        return Err(Error::Shape("semantic and height grid dimensions differ".into()));
    }
    let mut warnings = Vec::new();
    let mut elements: Vec<LayoutElement<S>> = Vec::new();

    let present: std::collections::BTreeSet<u8> =
        raster.semantic.data().iter().copied().collect();
    for class_id in &present {
        if !class_map.contains_key(class_id) && *class_id != 0 {
            warnings.push(format!("class id {class_id} not in class map, ignored"));
        }
    }

    for (&class_id, mapped) in class_map {
        let Some(category) = mapped else { continue };
        let components = connected_components(&raster.semantic, class_id);
        for (k, cells) in components.iter().enumerate() {
            let ring = trace_component(&raster.semantic, cells);
            let cell: S = cast(raster.cell_size_m.to_f64().unwrap());
            let mut points: Vec<Vec2<S>> = ring
                .iter()
                .map(|&(x2, y2)| {
                    // trace coordinates are doubled cell-center units
                    Vec2::new(
                        cast::<S>(x2 as f64 / 2.0) * cell,
                        cast::<S>(y2 as f64 / 2.0) * cell,
                    )
                })
                .collect();
            points = douglas_peucker_ring(&points, cell * cast(0.5));
            if points.len() < 3 || signed_area(&points).abs() == S::zero() {
                warnings.push(format!(
                    "class {class_id} component {k}: degenerate contour, skipped"
                ));
                continue;
            }
            ensure_ccw(&mut points);
            let mut height_sum = S::zero();
            for &(x, y) in cells {
                height_sum += *raster.height.get(x, y);
            }
            let height_m = height_sum / cast(cells.len() as f64);
            elements.push(LayoutElement {
                id: AssetId::new(format!("raster/{}/{k}", category.label())),
                category: *category,
                footprint: Footprint::Polygon(points),
                height_m: if *category == AssetCategory::Buildings { height_m } else { S::zero() },
                width_m: S::zero(),
                tags: BTreeMap::new(),
                holes: Vec::new(),
            });
        }
    }

    let bounds = Rect::from_points(elements.iter().flat_map(|e| e.footprint.points()))
        .unwrap_or(Rect::new(Vec2::zero(), Vec2::zero()));
    Ok(GeoLayout {
        origin: LatLon { lat: S::zero(), lon: S::zero() },
        elements,
        bounds,
        warnings,
    })
}

/// 4-connected components of one class id, cells in scan order.
pub fn connected_components(semantic: &Grid<u8>, class_id: u8) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (semantic.width(), semantic.height());
    let mut seen = vec![false; w * h];
    let mut components = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if seen[y * w + x] || *semantic.get(x, y) != class_id {
                continue;
            }
            let mut cells = Vec::new();
            let mut stack = vec![(x, y)];
            seen[y * w + x] = true;
            while let Some((cx, cy)) = stack.pop() {
                cells.push((cx, cy));
                for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if !seen[ny * w + nx] && *semantic.get(nx, ny) == class_id {
                        seen[ny * w + nx] = true;
                        stack.push((nx, ny));
                    }
                }
            }
            cells.sort_unstable();
            components.push(cells);
        }
    }
    components
}

/// Marching-squares outer contour of one component. Returned vertex
/// coordinates are in doubled cell-center units: cell (x, y) has center
/// (2x+1, 2y+1); edge midpoints land on even/odd lattice points.
fn trace_component(semantic: &Grid<u8>, cells: &[(usize, usize)]) -> Vec<(i64, i64)> {
    use std::collections::HashMap;

    let inside: std::collections::HashSet<(usize, usize)> = cells.iter().copied().collect();
    let (min_x, max_x) = cells.iter().fold((usize::MAX, 0), |a, c| (a.0.min(c.0), a.1.max(c.0)));
    let (min_y, max_y) = cells.iter().fold((usize::MAX, 0), |a, c| (a.0.min(c.1), a.1.max(c.1)));
    let _ = semantic;

    // Sample lattice padded by one cell so every loop closes.
    let is_in = |sx: i64, sy: i64| -> bool {
        sx >= 0 && sy >= 0 && inside.contains(&(sx as usize, sy as usize))
    };

    // Segments between edge midpoints, keyed in doubled coordinates.
    let mut segments: Vec<((i64, i64), (i64, i64))> = Vec::new();
    for sy in (min_y as i64 - 1)..=(max_y as i64) {
        for sx in (min_x as i64 - 1)..=(max_x as i64) {
            let tl = is_in(sx, sy) as u8;
            let tr = is_in(sx + 1, sy) as u8;
            let br = is_in(sx + 1, sy + 1) as u8;
            let bl = is_in(sx, sy + 1) as u8;
            let case = tl | tr << 1 | br << 2 | bl << 3;
            // midpoints in doubled cell-center coords
            let cx = 2 * sx + 1; // center of TL cell
            let cy = 2 * sy + 1;
            let top = (cx + 1, cy);
            let right = (cx + 2, cy + 1);
            let bottom = (cx + 1, cy + 2);
            let left = (cx, cy + 1);
            let segs: &[((i64, i64), (i64, i64))] = match case {
                1 => &[(top, left)],
                2 => &[(top, right)],
                3 => &[(left, right)],
                4 => &[(right, bottom)],
                5 => &[(top, left), (right, bottom)],
                6 => &[(top, bottom)],
                7 => &[(left, bottom)],
                8 => &[(bottom, left)],
                9 => &[(top, bottom)],
                10 => &[(top, right), (bottom, left)],
                11 => &[(right, bottom)],
                12 => &[(left, right)],
                13 => &[(top, right)],
                14 => &[(top, left)],
                _ => &[],
            };
            segments.extend_from_slice(segs);
        }
    }

    // Chain segments into loops by endpoint identity; keep the loop with the
    // largest absolute area (the outer ring; inner loops are holes).
    let mut adjacency: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(i);
        adjacency.entry(*b).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut best_loop: Vec<(i64, i64)> = Vec::new();
    let mut best_area = -1.0f64;
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        let mut ring = vec![segments[start].0, segments[start].1];
        used[start] = true;
        loop {
            let cur = *ring.last().unwrap();
            if cur == ring[0] {
                ring.pop();
                break;
            }
            let Some(next) = adjacency
                .get(&cur)
                .and_then(|ids| ids.iter().find(|&&i| !used[i]).copied())
            else {
                break;
            };
            used[next] = true;
            let (a, b) = segments[next];
            ring.push(if a == cur { b } else { a });
        }
        if ring.len() >= 3 {
            let pts: Vec<Vec2<f64>> =
                ring.iter().map(|&(x, y)| Vec2::new(x as f64, y as f64)).collect();
            let area = signed_area(&pts).abs();
            if area > best_area {
                best_area = area;
                best_loop = ring;
            }
        }
    }
    best_loop
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::polygon::point_in_polygon;

    fn map_building() -> BTreeMap<u8, Option<AssetCategory>> {
        let mut m = BTreeMap::new();
        m.insert(1u8, Some(AssetCategory::Buildings));
        m
    }

    fn raster_with_block(
        w: usize,
        h: usize,
        block: &[(usize, usize)],
        height: f64,
    ) -> RasterLayout<f64> {
        let mut sem = Grid::new(w, h, 0u8);
        let mut hgt = Grid::new(w, h, 0.0f64);
        for &(x, y) in block {
            sem.set(x, y, 1);
            hgt.set(x, y, height);
        }
        RasterLayout::new(sem, hgt, 1.0).unwrap()
    }

    fn square_block(x0: usize, y0: usize, side: usize) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                v.push((x, y));
            }
        }
        v
    }

    /// oracle: rasterize the recovered polygon back onto the grid and
    /// compare cell sets.
    fn iou(ring: &[Vec2<f64>], cells: &[(usize, usize)], w: usize, h: usize) -> f64 {
        let truth: std::collections::BTreeSet<(usize, usize)> = cells.iter().copied().collect();
        let mut hit = std::collections::BTreeSet::new();
        for y in 0..h {
            for x in 0..w {
                let center = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
                if point_in_polygon(center, ring) {
                    hit.insert((x, y));
                }
            }
        }
        let inter = truth.intersection(&hit).count() as f64;
        let uni = truth.union(&hit).count() as f64;
        inter / uni
    }

    #[test]
    fn square_block_recovers_polygon_and_height() {
        let block = square_block(5, 5, 6);
        let raster = raster_with_block(16, 16, &block, 12.0);
        let layout = parse_raster_layout(&raster, &map_building()).unwrap();
        assert_eq!(layout.elements.len(), 1);
        let e = &layout.elements[0];
        assert_eq!(e.category, AssetCategory::Buildings);
        assert!((e.height_m - 12.0).abs() < 1e-9);
        let Footprint::Polygon(ring) = &e.footprint else { panic!("expected polygon") };
        let score = iou(ring, &block, 16, 16);
        assert!(score >= 0.9, "IoU = {score}");
    }

    #[test]
    fn all_zero_grid_has_no_elements() {
        let raster = raster_with_block(8, 8, &[], 0.0);
        let layout = parse_raster_layout(&raster, &map_building()).unwrap();
        assert!(layout.elements.is_empty());
    }

    #[test]
    fn diagonal_blocks_are_two_elements() {
        let mut block = square_block(1, 1, 3);
        block.extend(square_block(5, 5, 3));
        let raster = raster_with_block(10, 10, &block, 6.0);
        let layout = parse_raster_layout(&raster, &map_building()).unwrap();
        assert_eq!(layout.elements.len(), 2);

        // oracle: independent union-find component count
        let mut parent: Vec<usize> = (0..block.len()).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            if p[i] != i {
                let r = find(p, p[i]);
                p[i] = r;
            }
            p[i]
        }
        for i in 0..block.len() {
            for j in 0..block.len() {
                let (a, b) = (block[i], block[j]);
                let touching = (a.0 == b.0 && a.1.abs_diff(b.1) == 1)
                    || (a.1 == b.1 && a.0.abs_diff(b.0) == 1);
                if touching {
                    let (ra, rb) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ra] = rb;
                }
            }
        }
        let roots: std::collections::BTreeSet<usize> =
            (0..block.len()).map(|i| find(&mut parent, i)).collect();
        assert_eq!(roots.len(), 2);
    }

    #[test]
    fn l_shape_recovery_meets_iou() {
        let mut block = square_block(2, 2, 8);
        block.retain(|&(x, y)| !(x >= 6 && y >= 6)); // carve the L
        let raster = raster_with_block(16, 16, &block, 4.0);
        let layout = parse_raster_layout(&raster, &map_building()).unwrap();
        assert_eq!(layout.elements.len(), 1);
        let Footprint::Polygon(ring) = &layout.elements[0].footprint else { panic!() };
        assert!(iou(ring, &block, 16, 16) >= 0.9);
    }

    #[test]
    fn mismatched_grids_are_a_shape_error() {
        let sem = Grid::new(4, 4, 0u8);
        let hgt = Grid::new(4, 5, 0.0f64);
        assert!(matches!(RasterLayout::new(sem, hgt, 1.0), Err(Error::Shape(_))));
    }

    #[test]
    fn cell_size_scales_coordinates() {
        let block = square_block(1, 1, 4);
        let mut raster = raster_with_block(8, 8, &block, 3.0);
        raster.cell_size_m = 2.5;
        let layout = parse_raster_layout(&raster, &map_building()).unwrap();
        let Footprint::Polygon(ring) = &layout.elements[0].footprint else { panic!() };
        let r = Rect::from_points(ring.iter()).unwrap();
        // block spans cells [1,5) => world roughly [2.5, 12.5] with half-cell chamfer
        assert!(r.width() > 2.5 * 3.0 && r.width() < 2.5 * 5.0);
    }
}
