//! Meshing of layout elements into per-asset triangle meshes and scene-plan
//! assembly with recorded asset centers.

pub mod extrude;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::layout::{AssetCategory, AssetId, Footprint, GeoLayout};
use crate::math::{Aabb3, Rect, Vec2, Vec3};
use crate::num::{cast, Real};

pub use extrude::{build_area, build_road, extrude_building};

/// Z offsets that keep flat assets from z-fighting the ground plane.
pub const ROAD_Z_M: f64 = 0.05;
pub const VEGETATION_Z_M: f64 = 0.03;
pub const VEGETATION_RIM_M: f64 = 0.3;
pub const WATER_Z_M: f64 = 0.02;

/// Margin the ground plane extends beyond the layout bounds.
const GROUND_PAD_M: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetMesh<S> {
    pub id: AssetId,
    pub category: AssetCategory,
    /// Asset-local coordinates; bounding-box center sits at the origin
    /// once the mesh is part of a [`ScenePlan`].
    pub vertices: Vec<Vec3<S>>,
    pub faces: Vec<[u32; 3]>,
    pub face_normals: Vec<Vec3<S>>,
    /// Translation removed when the mesh was recentered.
    pub center_world: Vec3<S>,
}

impl<S: Real> AssetMesh<S> {
    pub fn new(
        id: AssetId,
        category: AssetCategory,
        vertices: Vec<Vec3<S>>,
        faces: Vec<[u32; 3]>,
    ) -> Self {
        let face_normals = compute_face_normals(&vertices, &faces);
        Self { id, category, vertices, faces, face_normals, center_world: Vec3::zero() }
    }

    pub fn bbox(&self) -> Option<Aabb3<S>> {
        Aabb3::from_points(self.vertices.iter())
    }

    /// Translate so the bounding-box center sits at the origin, accumulating
    /// the removed translation into `center_world`.
    pub fn recenter(&mut self) {
        let Some(bbox) = self.bbox() else { return };
        let c = bbox.center();
        for v in &mut self.vertices {
            *v -= c;
        }
        self.center_world += c;
    }

    pub fn bounding_radius(&self) -> S {
        self.vertices
            .iter()
            .map(|v| v.length())
            .fold(S::zero(), |a, b| a.max(b))
    }

    pub fn face_vertices(&self, face: usize) -> [Vec3<S>; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn face_area(&self, face: usize) -> S {
        let [a, b, c] = self.face_vertices(face);
        (b - a).cross(c - a).length() * cast(0.5)
    }

    pub fn surface_area(&self) -> S {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

pub fn compute_face_normals<S: Real>(
    vertices: &[Vec3<S>],
    faces: &[[u32; 3]],
) -> Vec<Vec3<S>> {
    faces
        .iter()
        .map(|&[a, b, c]| {
            let (a, b, c) =
                (vertices[a as usize], vertices[b as usize], vertices[c as usize]);
            (b - a).cross(c - a).normalized()
        })
        .collect()
}

/// Per-element meshing failure collected during assembly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyFailure {
    pub id: AssetId,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenePlan<S> {
    pub assets: Vec<AssetMesh<S>>,
    pub ground: AssetMesh<S>,
    pub layout_bounds: Rect<S>,
    pub failures: Vec<AssemblyFailure>,
}

impl<S: Real> ScenePlan<S> {
    /// Assets plus the ground plane, the full renderable set.
    pub fn all_meshes(&self) -> impl Iterator<Item = &AssetMesh<S>> {
        self.assets.iter().chain(std::iter::once(&self.ground))
    }

    pub fn mesh(&self, id: &AssetId) -> Option<&AssetMesh<S>> {
        self.all_meshes().find(|m| &m.id == id)
    }
}

/// Mesh a single element according to its category and footprint kind.
pub fn mesh_element<S: Real>(
    element: &crate::layout::LayoutElement<S>,
) -> Result<AssetMesh<S>> {
    match (element.category, &element.footprint) {
        (AssetCategory::Buildings, _) => extrude_building(element),
        (AssetCategory::RoadsPaths, Footprint::Polyline(_)) => build_road(element),
        _ => build_area(element),
    }
}

/// Mesh every element, recenter each mesh about its bounding-box center and
/// add a ground plane spanning the layout bounds. Per-element failures are
/// collected rather than aborting the scene.
pub fn assemble_scene_plan<S: Real>(layout: &GeoLayout<S>) -> ScenePlan<S> {
    let mut assets = Vec::new();
    let mut failures = Vec::new();
    for element in &layout.elements {
        match mesh_element(element) {
            Ok(mut mesh) => {
                mesh.recenter();
                assets.push(mesh);
            }
            Err(e) => failures.push(AssemblyFailure {
                id: element.id.clone(),
                reason: e.to_string(),
            }),
        }
    }

    let bounds = effective_bounds(layout);
    let pad: S = cast(GROUND_PAD_M);
    let min = Vec2::new(bounds.min.x - pad, bounds.min.y - pad);
    let max = Vec2::new(bounds.max.x + pad, bounds.max.y + pad);
    let vertices = vec![
        Vec3::new(min.x, min.y, S::zero()),
        Vec3::new(max.x, min.y, S::zero()),
        Vec3::new(max.x, max.y, S::zero()),
        Vec3::new(min.x, max.y, S::zero()),
    ];
    let faces = vec![[0, 1, 2], [0, 2, 3]];
    let mut ground =
        AssetMesh::new(AssetId::new("ground"), AssetCategory::Ground, vertices, faces);
    ground.recenter();

    ScenePlan { assets, ground, layout_bounds: bounds, failures }
}

fn effective_bounds<S: Real>(layout: &GeoLayout<S>) -> Rect<S> {
    let b = layout.bounds;
    if b.width() > S::zero() && b.height() > S::zero() {
        b
    } else {
        let five: S = cast(5.0);
        Rect::new(Vec2::new(-five, -five), Vec2::new(five, five))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{GeoLayout, LatLon, LayoutElement};
    use std::collections::BTreeMap;

    fn building(id: &str, ring: Vec<Vec2<f64>>, height: f64) -> LayoutElement<f64> {
        LayoutElement {
            id: AssetId::new(id),
            category: AssetCategory::Buildings,
            footprint: Footprint::Polygon(ring),
            height_m: height,
            width_m: 0.0,
            tags: BTreeMap::new(),
            holes: Vec::new(),
        }
    }

    fn road(id: &str, pts: Vec<Vec2<f64>>, width: f64) -> LayoutElement<f64> {
        LayoutElement {
            id: AssetId::new(id),
            category: AssetCategory::RoadsPaths,
            footprint: Footprint::Polyline(pts),
            height_m: 0.0,
            width_m: width,
            tags: BTreeMap::new(),
            holes: Vec::new(),
        }
    }

    fn unit_square_at(cx: f64, cy: f64) -> Vec<Vec2<f64>> {
        vec![
            Vec2::new(cx - 0.5, cy - 0.5),
            Vec2::new(cx + 0.5, cy - 0.5),
            Vec2::new(cx + 0.5, cy + 0.5),
            Vec2::new(cx - 0.5, cy + 0.5),
        ]
    }

    fn layout_of(elements: Vec<LayoutElement<f64>>) -> GeoLayout<f64> {
        let bounds =
            Rect::from_points(elements.iter().flat_map(|e| e.footprint.points()))
                .unwrap_or(Rect::new(Vec2::zero(), Vec2::zero()));
        GeoLayout {
            origin: LatLon { lat: 0.0, lon: 0.0 },
            elements,
            bounds,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn two_buildings_and_a_road_make_three_assets_plus_ground() {
        let layout = layout_of(vec![
            building("b1", unit_square_at(0.0, 0.0), 10.0),
            building("b2", unit_square_at(5.0, 0.0), 6.0),
            road("r1", vec![Vec2::new(-3.0, 3.0), Vec2::new(8.0, 3.0)], 6.0),
        ]);
        let plan = assemble_scene_plan(&layout);
        assert_eq!(plan.assets.len(), 3);
        assert_eq!(plan.ground.id, AssetId::new("ground"));
        assert!(plan.failures.is_empty());
    }

    #[test]
    fn center_world_is_footprint_center_at_half_height() {
        let layout = layout_of(vec![building("b", unit_square_at(10.0, 5.0), 8.0)]);
        let plan = assemble_scene_plan(&layout);
        let c = plan.assets[0].center_world;
        assert!((c.x - 10.0).abs() < 1e-12);
        assert!((c.y - 5.0).abs() < 1e-12);
        assert!((c.z - 4.0).abs() < 1e-12);
        // asset-local bbox center back at origin
        let bbox = plan.assets[0].bbox().unwrap();
        assert!(bbox.center().length() < 1e-12);
    }

    #[test]
    fn empty_layout_yields_only_ground() {
        let plan = assemble_scene_plan(&layout_of(vec![]));
        assert!(plan.assets.is_empty());
        assert!(!plan.ground.is_empty());
    }

    #[test]
    fn failures_are_collected_not_fatal() {
        let degenerate = building("bad", vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)], 5.0);
        let ok = building("good", unit_square_at(3.0, 3.0), 5.0);
        let plan = assemble_scene_plan(&layout_of(vec![degenerate, ok]));
        assert_eq!(plan.assets.len(), 1);
        assert_eq!(plan.failures.len(), 1);
        assert_eq!(plan.failures[0].id, AssetId::new("bad"));
    }

    #[test]
    fn remeshing_is_deterministic() {
        let layout = layout_of(vec![
            building("b1", unit_square_at(0.0, 0.0), 10.0),
            road("r1", vec![Vec2::new(-3.0, 3.0), Vec2::new(8.0, 3.0)], 6.0),
        ]);
        assert_eq!(assemble_scene_plan(&layout), assemble_scene_plan(&layout));
    }

    #[test]
    fn translation_moves_center_world_and_keeps_local_mesh_bit_identical() {
        // dyadic-lattice coordinates keep the float arithmetic exact
        let base = unit_square_at(3.25, -1.5);
        let (dx, dy) = (128.0, 64.25);
        let shifted: Vec<Vec2<f64>> =
            base.iter().map(|p| Vec2::new(p.x + dx, p.y + dy)).collect();
        let a = assemble_scene_plan(&layout_of(vec![building("b", base, 7.0)]));
        let b = assemble_scene_plan(&layout_of(vec![building("b", shifted, 7.0)]));
        let (ma, mb) = (&a.assets[0], &b.assets[0]);
        assert_eq!(ma.vertices, mb.vertices);
        assert_eq!(ma.faces, mb.faces);
        assert_eq!(mb.center_world.x - ma.center_world.x, dx);
        assert_eq!(mb.center_world.y - ma.center_world.y, dy);
        assert_eq!(mb.center_world.z, ma.center_world.z);
    }
}
