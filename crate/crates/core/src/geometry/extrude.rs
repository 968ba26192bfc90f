//! Prism extrusion for buildings, ribbon meshing for roads and flat/rimmed
//! meshes for water and vegetation.

use crate::error::{Error, Result};
use crate::geometry::{
    AssetMesh, ROAD_Z_M, VEGETATION_RIM_M, VEGETATION_Z_M, WATER_Z_M,
};
use crate::layout::{AssetCategory, Footprint, LayoutElement};
use crate::math::polygon::{dedup_ring, is_simple, triangulate_ear_clip};
use crate::math::{Vec2, Vec3};
use crate::num::{cast, Real};

/// Miter joins are clamped at this multiple of the ribbon half-width.
const MITER_LIMIT: f64 = 4.0;

fn validated_ring<S: Real>(element: &LayoutElement<S>) -> Result<Vec<Vec2<S>>> {
    let ring = dedup_ring(element.footprint.points(), S::zero());
    if ring.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "{}: polygon has fewer than 3 distinct vertices",
            element.id
        )));
    }
    if !is_simple(&ring) {
        return Err(Error::DegenerateGeometry(format!(
            "{}: polygon is self-intersecting",
            element.id
        )));
    }
    Ok(ring)
}

/// Walls plus an ear-clipped roof cap; the floor is omitted. Expects a
/// simple CCW footprint and positive height.
pub fn extrude_building<S: Real>(element: &LayoutElement<S>) -> Result<AssetMesh<S>> {
    if element.height_m <= S::zero() {
        return Err(Error::DegenerateGeometry(format!(
            "{}: building height must be positive",
            element.id
        )));
    }
    let ring = validated_ring(element)?;
    let mesh = prism(&ring, S::zero(), element.height_m)?;
    Ok(AssetMesh::new(element.id.clone(), element.category, mesh.0, mesh.1))
}

/// Side walls from `z0` to `z1` plus a roof cap at `z1`.
fn prism<S: Real>(ring: &[Vec2<S>], z0: S, z1: S) -> Result<(Vec<Vec3<S>>, Vec<[u32; 3]>)> {
    let n = ring.len() as u32;
    let mut vertices = Vec::with_capacity(2 * n as usize);
    vertices.extend(ring.iter().map(|p| p.extend(z0)));
    vertices.extend(ring.iter().map(|p| p.extend(z1)));
    let mut faces = Vec::with_capacity(3 * n as usize);
    for i in 0..n {
        let j = (i + 1) % n;
        // CCW footprint makes these outward-facing
        faces.push([i, j, n + j]);
        faces.push([i, n + j, n + i]);
    }
    for tri in triangulate_ear_clip(ring)? {
        faces.push([n + tri[0], n + tri[1], n + tri[2]]);
    }
    Ok((vertices, faces))
}

/// Ribbon mesh along the polyline at the road z offset, miter joins clamped
/// at 4x the half-width.
pub fn build_road<S: Real>(element: &LayoutElement<S>) -> Result<AssetMesh<S>> {
    let Footprint::Polyline(raw) = &element.footprint else {
        return Err(Error::DegenerateGeometry(format!(
            "{}: road footprint must be a polyline",
            element.id
        )));
    };
    let mut path: Vec<Vec2<S>> = Vec::with_capacity(raw.len());
    for &p in raw {
        if path.last() != Some(&p) {
            path.push(p);
        }
    }
    if path.len() < 2 {
        return Err(Error::DegenerateGeometry(format!(
            "{}: road polyline has no extent",
            element.id
        )));
    }
    if element.width_m <= S::zero() {
        return Err(Error::DegenerateGeometry(format!(
            "{}: road width must be positive",
            element.id
        )));
    }

    let hw = element.width_m * cast(0.5);
    let z: S = cast(ROAD_Z_M);
    let n = path.len();
    let mut vertices: Vec<Vec3<S>> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let offset = if i == 0 {
            (path[1] - path[0]).normalized().perp() * hw
        } else if i == n - 1 {
            (path[n - 1] - path[n - 2]).normalized().perp() * hw
        } else {
            let n1 = (path[i] - path[i - 1]).normalized().perp();
            let n2 = (path[i + 1] - path[i]).normalized().perp();
            let sum = n1 + n2;
            if sum.length() < cast(1e-9) {
                n1 * hw // u-turn: fall back to the incoming normal
            } else {
                let m = sum.normalized();
                let miter = (hw / m.dot(n1)).min(hw * cast(MITER_LIMIT));
                m * miter
            }
        };
        vertices.push((path[i] + offset).extend(z)); // left
        vertices.push((path[i] - offset).extend(z)); // right
    }
    let mut faces = Vec::with_capacity(2 * (n - 1));
    for i in 0..(n - 1) as u32 {
        let (l0, r0, l1, r1) = (2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3);
        faces.push([r0, r1, l1]);
        faces.push([r0, l1, l0]);
    }
    Ok(AssetMesh::new(element.id.clone(), element.category, vertices, faces))
}

/// Flat ear-clipped mesh for water (and raster-traced roads); vegetation
/// gets a low extruded rim so patches read as raised cover.
pub fn build_area<S: Real>(element: &LayoutElement<S>) -> Result<AssetMesh<S>> {
    let ring = validated_ring(element)?;
    let (vertices, faces) = match element.category {
        AssetCategory::ForestVegetation => {
            let z0: S = cast(VEGETATION_Z_M);
            prism(&ring, z0, z0 + cast(VEGETATION_RIM_M))?
        }
        _ => {
            let z: S = match element.category {
                AssetCategory::Water => cast(WATER_Z_M),
                AssetCategory::RoadsPaths => cast(ROAD_Z_M),
                _ => S::zero(),
            };
            let vertices: Vec<Vec3<S>> = ring.iter().map(|p| p.extend(z)).collect();
            let faces = triangulate_ear_clip(&ring)?;
            (vertices, faces)
        }
    };
    Ok(AssetMesh::new(element.id.clone(), element.category, vertices, faces))
}
