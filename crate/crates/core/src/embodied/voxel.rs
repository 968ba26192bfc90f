//! Voxel occupancy from scene triangles via triangle/box separating-axis
//! tests.

use serde::{Deserialize, Serialize};

use crate::assembly::SceneManifest;
use crate::geometry::AssetMesh;
use crate::math::{Aabb3, Vec3};
use crate::num::{cast, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid<S> {
    pub origin: Vec3<S>,
    pub resolution: S,
    pub dims: (usize, usize, usize),
    pub occupied: Vec<bool>,
}

impl<S: Real> OccupancyGrid<S> {
    pub fn new(origin: Vec3<S>, resolution: S, dims: (usize, usize, usize)) -> Self {
        Self { origin, resolution, dims, occupied: vec![false; dims.0 * dims.1 * dims.2] }
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.dims.1 + iy) * self.dims.0 + ix
    }

    pub fn voxel_center(&self, ix: usize, iy: usize, iz: usize) -> Vec3<S> {
        let half: S = cast(0.5);
        self.origin
            + Vec3::new(
                (cast::<S>(ix as f64) + half) * self.resolution,
                (cast::<S>(iy as f64) + half) * self.resolution,
                (cast::<S>(iz as f64) + half) * self.resolution,
            )
    }

    /// Voxel containing a world point, if inside the grid.
    pub fn voxel_of(&self, p: Vec3<S>) -> Option<(usize, usize, usize)> {
        let rel = (p - self.origin) / self.resolution;
        let (x, y, z) = (
            rel.x.to_f64().unwrap().floor(),
            rel.y.to_f64().unwrap().floor(),
            rel.z.to_f64().unwrap().floor(),
        );
        if x < 0.0 || y < 0.0 || z < 0.0 {
            return None;
        }
        let (ix, iy, iz) = (x as usize, y as usize, z as usize);
        if ix >= self.dims.0 || iy >= self.dims.1 || iz >= self.dims.2 {
            return None;
        }
        Some((ix, iy, iz))
    }

    /// Points outside the grid count as free; inside, the voxel decides.
    pub fn is_free(&self, p: Vec3<S>) -> bool {
        match self.voxel_of(p) {
            Some((ix, iy, iz)) => !self.occupied[self.index(ix, iy, iz)],
            None => true,
        }
    }

    pub fn world_min(&self) -> Vec3<S> {
        self.origin
    }

    pub fn world_max(&self) -> Vec3<S> {
        self.origin
            + Vec3::new(
                cast::<S>(self.dims.0 as f64) * self.resolution,
                cast::<S>(self.dims.1 as f64) * self.resolution,
                cast::<S>(self.dims.2 as f64) * self.resolution,
            )
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }
}

/// Voxelize world-placed meshes: a voxel is occupied iff any triangle
/// intersects its axis-aligned box. The grid pads the bounds by one voxel.
pub fn voxelize_meshes<S: Real>(
    meshes: &[(&AssetMesh<S>, Vec3<S>)],
    bounds: &Aabb3<S>,
    resolution: S,
) -> OccupancyGrid<S> {
    assert!(resolution > S::zero(), "resolution must be positive");
    let origin = bounds.min - Vec3::splat(resolution);
    let extent = bounds.max - bounds.min + Vec3::splat(resolution + resolution);
    let dim = |e: S| ((e / resolution).to_f64().unwrap().ceil() as usize).max(1);
    let dims = (dim(extent.x), dim(extent.y), dim(extent.z));
    let mut grid = OccupancyGrid::new(origin, resolution, dims);

    let half = resolution * cast(0.5);
    for (mesh, translation) in meshes {
        for face in 0..mesh.faces.len() {
            let tri = mesh.face_vertices(face).map(|v| v + *translation);
            let t_min = tri[0].min_by_component(tri[1]).min_by_component(tri[2]);
            let t_max = tri[0].max_by_component(tri[1]).max_by_component(tri[2]);
            // one extra voxel each side so boundary-aligned triangles reach
            // the voxels they merely touch; the SAT test filters the rest
            let lo = ((t_min - origin) / resolution).to_floor_expanded(dims);
            let hi = ((t_max - origin) / resolution).to_ceil_expanded(dims);
            for iz in lo.2..hi.2 {
                for iy in lo.1..hi.1 {
                    for ix in lo.0..hi.0 {
                        let idx = grid.index(ix, iy, iz);
                        if grid.occupied[idx] {
                            continue;
                        }
                        let center = grid.voxel_center(ix, iy, iz);
                        if tri_box_overlap(center, half, &tri) {
                            grid.occupied[idx] = true;
                        }
                    }
                }
            }
        }
    }
    grid
}

/// Voxelize the assembled scene (all assets plus ground).
pub fn voxelize<S: Real>(manifest: &SceneManifest<S>, resolution: S) -> OccupancyGrid<S> {
    let meshes: Vec<(&AssetMesh<S>, Vec3<S>)> =
        manifest.plan.all_meshes().map(|m| (m, m.center_world)).collect();
    voxelize_meshes(&meshes, &manifest.bounds, resolution)
}

trait VoxelRange {
    fn to_floor_expanded(self, dims: (usize, usize, usize)) -> (usize, usize, usize);
    fn to_ceil_expanded(self, dims: (usize, usize, usize)) -> (usize, usize, usize);
}

impl<S: Real> VoxelRange for Vec3<S> {
    fn to_floor_expanded(self, dims: (usize, usize, usize)) -> (usize, usize, usize) {
        let f = |v: S, d: usize| {
            ((v.to_f64().unwrap().floor() - 1.0).max(0.0) as usize).min(d.saturating_sub(1))
        };
        (f(self.x, dims.0), f(self.y, dims.1), f(self.z, dims.2))
    }

    fn to_ceil_expanded(self, dims: (usize, usize, usize)) -> (usize, usize, usize) {
        let f = |v: S, d: usize| ((v.to_f64().unwrap().floor() + 2.0).max(1.0) as usize).min(d);
        (f(self.x, dims.0), f(self.y, dims.1), f(self.z, dims.2))
    }
}

/// Akenine-Moller triangle/AABB separating-axis test. Touching counts as
/// intersecting.
pub fn tri_box_overlap<S: Real>(center: Vec3<S>, half: S, tri: &[Vec3<S>; 3]) -> bool {
    let v0 = tri[0] - center;
    let v1 = tri[1] - center;
    let v2 = tri[2] - center;

    // box axes: triangle AABB vs box
    for axis in 0..3 {
        let (a, b, c) = match axis {
            0 => (v0.x, v1.x, v2.x),
            1 => (v0.y, v1.y, v2.y),
            _ => (v0.z, v1.z, v2.z),
        };
        if a.min(b).min(c) > half || a.max(b).max(c) < -half {
            return false;
        }
    }

    let e0 = v1 - v0;
    let e1 = v2 - v1;
    let e2 = v0 - v2;

    // 9 cross-product axes
    let axes = [
        Vec3::new(S::zero(), -e0.z, e0.y),
        Vec3::new(S::zero(), -e1.z, e1.y),
        Vec3::new(S::zero(), -e2.z, e2.y),
        Vec3::new(e0.z, S::zero(), -e0.x),
        Vec3::new(e1.z, S::zero(), -e1.x),
        Vec3::new(e2.z, S::zero(), -e2.x),
        Vec3::new(-e0.y, e0.x, S::zero()),
        Vec3::new(-e1.y, e1.x, S::zero()),
        Vec3::new(-e2.y, e2.x, S::zero()),
    ];
    for axis in axes {
        let p0 = v0.dot(axis);
        let p1 = v1.dot(axis);
        let p2 = v2.dot(axis);
        let r = half * (axis.x.abs() + axis.y.abs() + axis.z.abs());
        if p0.min(p1).min(p2) > r || p0.max(p1).max(p2) < -r {
            return false;
        }
    }

    // triangle plane vs box
    let normal = e0.cross(e1);
    let d = normal.dot(v0);
    let r = half * (normal.x.abs() + normal.y.abs() + normal.z.abs());
    d.abs() <= r
}
