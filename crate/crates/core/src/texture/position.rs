//! UV position maps: each atlas-valid texel carries its asset-local surface
//! position, normalized so the mesh bounding box spans the unit cube.

use crate::geometry::AssetMesh;
use crate::grid::Grid;
use crate::num::Real;
use crate::render::uv::{AtlasRaster, UVAtlas};
use crate::texture::UVPositionMap;

/// Sample the mesh surface at every atlas-valid texel. Invalid texels are
/// zeroed with `valid = false`; axes with zero bounding-box extent map to 0.
pub fn build_position_map<S: Real>(
    mesh: &AssetMesh<S>,
    atlas: &UVAtlas<S>,
    width: usize,
    height: usize,
) -> UVPositionMap<S> {
    let raster = AtlasRaster::build(atlas, width, height);
    let mut positions = Grid::new(width, height, [S::zero(); 3]);
    let mut valid = Grid::new(width, height, false);
    let Some(bbox) = mesh.bbox() else {
        return UVPositionMap { positions, valid };
    };
    let extent = bbox.extents();
    let norm = |v: S, min: S, ext: S| if ext > S::zero() { (v - min) / ext } else { S::zero() };
    for ty in 0..height {
        for tx in 0..width {
            if let Some(p) = raster.surface_point(mesh, tx, ty) {
                positions.set(
                    tx,
                    ty,
                    [
                        norm(p.x, bbox.min.x, extent.x),
                        norm(p.y, bbox.min.y, extent.y),
                        norm(p.z, bbox.min.z, extent.z),
                    ],
                );
                valid.set(tx, ty, true);
            }
        }
    }
    UVPositionMap { positions, valid }
}
