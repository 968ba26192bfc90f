//! Pinhole cameras, per-asset camera rigs and the shared projection math
//! used by both rasterization and back-projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AssetMesh;
use crate::math::{Vec2, Vec3};
use crate::num::{cast, Real};

pub const RIG_ELEVATION_DEG: f64 = 30.0;
pub const RIG_DISTANCE_FACTOR: f64 = 2.2;
pub const RIG_FOV_Y_DEG: f64 = 50.0;
pub const RIG_FRAME_PX: u32 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraView<S> {
    pub eye: Vec3<S>,
    pub target: Vec3<S>,
    pub up: Vec3<S>,
    pub fov_y_deg: S,
    pub near: S,
    pub far: S,
    pub width: u32,
    pub height: u32,
}

/// Orbit rig: `n_views` cameras at evenly spaced azimuths, 30 degree
/// elevation, 2.2x bounding-sphere distance, aimed at the asset origin.
pub fn make_camera_rig<S: Real>(mesh: &AssetMesh<S>, n_views: usize) -> Result<Vec<CameraView<S>>> {
    if mesh.is_empty() {
        return Err(Error::DegenerateGeometry(format!("{}: empty mesh has no rig", mesh.id)));
    }
    assert!(n_views >= 1, "n_views must be >= 1");
    let radius = mesh.bounding_radius().max(cast(1e-6));
    let distance = radius * cast(RIG_DISTANCE_FACTOR);
    let elevation: S = cast(RIG_ELEVATION_DEG.to_radians());
    let mut views = Vec::with_capacity(n_views);
    for k in 0..n_views {
        let azimuth: S = cast(2.0 * std::f64::consts::PI * k as f64 / n_views as f64);
        let dir = Vec3::new(
            elevation.cos() * azimuth.cos(),
            elevation.cos() * azimuth.sin(),
            elevation.sin(),
        );
        views.push(CameraView {
            eye: dir * distance,
            target: Vec3::zero(),
            up: Vec3::new(S::zero(), S::zero(), S::one()),
            fov_y_deg: cast(RIG_FOV_Y_DEG),
            near: distance * cast(0.1),
            far: distance * cast(3.0),
            width: RIG_FRAME_PX,
            height: RIG_FRAME_PX,
        });
    }
    Ok(views)
}

/// Precomputed camera basis + screen mapping. Depth is the distance along
/// the camera forward axis.
#[derive(Clone, Copy, Debug)]
pub struct Projector<S> {
    pub eye: Vec3<S>,
    pub forward: Vec3<S>,
    pub right: Vec3<S>,
    pub up: Vec3<S>,
    pub half_w: S,
    pub half_h: S,
    pub near: S,
    pub far: S,
    pub width: u32,
    pub height: u32,
}

impl<S: Real> Projector<S> {
    pub fn new(view: &CameraView<S>) -> Self {
        let forward = (view.target - view.eye).normalized();
        let right = forward.cross(view.up).normalized();
        let up = right.cross(forward);
        let half_h = (view.fov_y_deg * cast(std::f64::consts::PI / 360.0)).tan();
        let aspect: S = cast(view.width as f64 / view.height as f64);
        Self {
            eye: view.eye,
            forward,
            right,
            up,
            half_w: half_h * aspect,
            half_h,
            near: view.near,
            far: view.far,
            width: view.width,
            height: view.height,
        }
    }

    /// World point to view space `(x_right, y_up, depth_forward)`.
    pub fn world_to_view(&self, p: Vec3<S>) -> Vec3<S> {
        let d = p - self.eye;
        Vec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }

    /// View-space point to continuous pixel coordinates (origin top-left).
    pub fn view_to_screen(&self, v: Vec3<S>) -> Vec2<S> {
        let half: S = cast(0.5);
        let ndc_x = v.x / (v.z * self.half_w);
        let ndc_y = v.y / (v.z * self.half_h);
        Vec2::new(
            (ndc_x + S::one()) * half * cast(self.width as f64),
            (S::one() - ndc_y) * half * cast(self.height as f64),
        )
    }

    /// Project a world point; `None` when it lies at or behind the camera
    /// plane. Returns `(pixel, depth)`.
    pub fn project(&self, p: Vec3<S>) -> Option<(Vec2<S>, S)> {
        let v = self.world_to_view(p);
        if v.z <= S::zero() {
            return None;
        }
        Some((self.view_to_screen(v), v.z))
    }

    /// Unit-length world ray through a continuous pixel coordinate.
    pub fn pixel_ray(&self, px: S, py: S) -> Vec3<S> {
        let half: S = cast(0.5);
        let ndc_x = px / cast::<S>(self.width as f64) / half - S::one();
        let ndc_y = S::one() - py / cast::<S>(self.height as f64) / half;
        (self.forward + self.right * (ndc_x * self.half_w) + self.up * (ndc_y * self.half_h))
            .normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AssetMesh;
    use crate::layout::{AssetCategory, AssetId};

    fn octahedron(radius: f64) -> AssetMesh<f64> {
        let vertices = vec![
            Vec3::new(radius, 0.0, 0.0),
            Vec3::new(-radius, 0.0, 0.0),
            Vec3::new(0.0, radius, 0.0),
            Vec3::new(0.0, -radius, 0.0),
            Vec3::new(0.0, 0.0, radius),
            Vec3::new(0.0, 0.0, -radius),
        ];
        let faces = vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ];
        AssetMesh::new(AssetId::new("oct"), AssetCategory::Buildings, vertices, faces)
    }

    #[test]
    fn four_view_rig_spaces_azimuths_by_90_degrees() {
        let rig = make_camera_rig(&octahedron(1.0), 4).unwrap();
        assert_eq!(rig.len(), 4);
        for (k, v) in rig.iter().enumerate() {
            let az = v.eye.y.atan2(v.eye.x).to_degrees().rem_euclid(360.0);
            let expected = 90.0 * k as f64;
            assert!((az - expected).abs() < 1e-9, "view {k}: azimuth {az}");
        }
    }

    #[test]
    fn single_view_rig_sits_at_azimuth_zero() {
        let rig = make_camera_rig(&octahedron(2.0), 1).unwrap();
        assert_eq!(rig.len(), 1);
        assert!(rig[0].eye.y.abs() < 1e-12);
        assert!(rig[0].eye.x > 0.0);
    }

    #[test]
    fn unit_sphere_mesh_gives_distance_2_2() {
        let rig = make_camera_rig(&octahedron(1.0), 4).unwrap();
        for v in &rig {
            assert!((v.eye.length() - 2.2).abs() < 1e-6);
        }
    }

    #[test]
    fn rig_depends_only_on_bounding_sphere_and_view_count() {
        let a = make_camera_rig(&octahedron(3.0), 4).unwrap();
        // different topology, same bounding radius
        let mut other = octahedron(3.0);
        other.vertices.push(Vec3::new(0.5, 0.5, 0.5));
        other.faces.push([0, 2, 6]);
        other.face_normals =
            crate::geometry::compute_face_normals(&other.vertices, &other.faces);
        let b = make_camera_rig(&other, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_mesh_has_no_rig() {
        let empty = AssetMesh::<f64>::new(
            AssetId::new("x"),
            AssetCategory::Buildings,
            vec![],
            vec![],
        );
        assert!(make_camera_rig(&empty, 4).is_err());
    }

    #[test]
    fn project_and_ray_are_inverse() {
        let view = CameraView {
            eye: Vec3::new(3.0f64, -2.0, 5.0),
            target: Vec3::new(0.0, 0.0, 0.0),
            up: Vec3::new(0.0, 0.0, 1.0),
            fov_y_deg: 50.0,
            near: 0.1,
            far: 100.0,
            width: 640,
            height: 480,
        };
        let proj = Projector::new(&view);
        let p = Vec3::new(0.4, 0.2, -0.3);
        let (px, depth) = proj.project(p).unwrap();
        let ray = proj.pixel_ray(px.x, px.y);
        // walk the ray to the same forward depth; should hit p
        let t = depth / ray.dot(proj.forward);
        let q = proj.eye + ray * t;
        assert!(q.distance(p) < 1e-9);
    }
}
