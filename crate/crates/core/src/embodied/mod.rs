//! Agent-facing interaction with the assembled scene: multimodal
//! observations, voxel occupancy, RRT navigation and trajectory recording.

pub mod rrt;
pub mod voxel;

use serde::{Deserialize, Serialize};

use crate::assembly::SceneManifest;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::num::{cast, Real};
use crate::render::camera::CameraView;
use crate::render::raster::{render_scene, FrameBuffer, SceneItem, Shading};

pub use rrt::{plan_rrt, segment_free, NavPlan, RrtParams};
pub use voxel::{voxelize, voxelize_meshes, OccupancyGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentPose<S> {
    pub position: Vec3<S>,
    pub yaw_deg: S,
    pub pitch_deg: S,
}

impl<S: Real> AgentPose<S> {
    pub fn new(position: Vec3<S>, yaw_deg: S, pitch_deg: S) -> Self {
        let cap: S = cast(89.0);
        Self { position, yaw_deg, pitch_deg: pitch_deg.max(-cap).min(cap) }
    }

    pub fn forward(&self) -> Vec3<S> {
        let yaw = self.yaw_deg * cast(std::f64::consts::PI / 180.0);
        let pitch = self.pitch_deg * cast(std::f64::consts::PI / 180.0);
        Vec3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics<S> {
    pub width: u32,
    pub height: u32,
    pub fov_y_deg: S,
    pub near: S,
    pub far: S,
}

impl<S: Real> Default for CameraIntrinsics<S> {
    fn default() -> Self {
        Self { width: 512, height: 512, fov_y_deg: cast(70.0), near: cast(0.1), far: cast(500.0) }
    }
}

/// One multimodal observation: RGB, view-space depth and semantic ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation<S> {
    pub pose: AgentPose<S>,
    pub frame: FrameBuffer<S>,
}

impl<S: Real> Observation<S> {
    /// Most frequent non-background semantic id, if any.
    pub fn modal_semantic(&self) -> Option<u8> {
        let mut counts = [0usize; 255];
        for &s in &self.frame.semantic {
            if s != crate::render::raster::BACKGROUND_SEMANTIC {
                counts[s as usize] += 1;
            }
        }
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .max_by_key(|(_, &c)| c)
            .map(|(i, _)| i as u8)
    }
}

/// Render the assembled scene (every asset at its world transform, textures
/// applied) from an arbitrary agent pose.
pub fn observe<S: Real>(
    manifest: &SceneManifest<S>,
    pose: &AgentPose<S>,
    intrinsics: &CameraIntrinsics<S>,
) -> Observation<S> {
    let view = CameraView {
        eye: pose.position,
        target: pose.position + pose.forward(),
        up: Vec3::new(S::zero(), S::zero(), S::one()),
        fov_y_deg: intrinsics.fov_y_deg,
        near: intrinsics.near,
        far: intrinsics.far,
        width: intrinsics.width,
        height: intrinsics.height,
    };
    let items: Vec<SceneItem<'_, S>> = manifest
        .plan
        .all_meshes()
        .map(|mesh| {
            let textured = &manifest.textured[&mesh.id];
            SceneItem {
                mesh,
                translation: mesh.center_world,
                shading: Shading::Texture {
                    atlas: &textured.atlas,
                    image: &textured.texture.rgb,
                },
            }
        })
        .collect();
    Observation { pose: *pose, frame: render_scene(&items, &view) }
}

/// Walk the plan at `stride_m` spacing (endpoints always included), yaw
/// facing the direction of travel, and observe at every pose.
pub fn record_trajectory<S: Real>(
    manifest: &SceneManifest<S>,
    plan: &NavPlan<S>,
    stride_m: S,
    intrinsics: &CameraIntrinsics<S>,
) -> Result<Vec<Observation<S>>> {
    let poses = trajectory_poses(plan, stride_m)?;
    Ok(poses.iter().map(|p| observe(manifest, p, intrinsics)).collect())
}

/// Poses along the waypoint polyline at stride spacing.
pub fn trajectory_poses<S: Real>(plan: &NavPlan<S>, stride_m: S) -> Result<Vec<AgentPose<S>>> {
    if !plan.found || plan.waypoints.is_empty() {
        return Err(Error::InvalidPlan);
    }
    if stride_m <= S::zero() {
        return Err(Error::Shape("stride must be positive".into()));
    }
    let total = plan.length();
    let mut stations: Vec<S> = Vec::new();
    let mut s = S::zero();
    while s < total {
        stations.push(s);
        s += stride_m;
    }
    stations.push(total);
    if stations.len() == 1 {
        stations.push(total); // degenerate zero-length path: duplicate pose
    }

    let deg: S = cast(180.0 / std::f64::consts::PI);
    let mut poses = Vec::with_capacity(stations.len());
    for &station in &stations {
        let (position, direction) = point_along(&plan.waypoints, station);
        let yaw = direction.y.atan2(direction.x) * deg;
        poses.push(AgentPose::new(position, yaw, S::zero()));
    }
    Ok(poses)
}

fn point_along<S: Real>(waypoints: &[Vec3<S>], station: S) -> (Vec3<S>, Vec3<S>) {
    let mut remaining = station;
    for w in waypoints.windows(2) {
        let seg = w[1] - w[0];
        let len = seg.length();
        if remaining <= len || len == S::zero() {
            let dir = if len > S::zero() { seg / len } else { Vec3::new(S::one(), S::zero(), S::zero()) };
            return (w[0] + dir * remaining.min(len), dir);
        }
        remaining -= len;
    }
    let last = *waypoints.last().unwrap();
    let dir = if waypoints.len() >= 2 {
        let seg = last - waypoints[waypoints.len() - 2];
        let len = seg.length();
        if len > S::zero() { seg / len } else { Vec3::new(S::one(), S::zero(), S::zero()) }
    } else {
        Vec3::new(S::one(), S::zero(), S::zero())
    };
    (last, dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_plan(len: f64) -> NavPlan<f64> {
        NavPlan {
            waypoints: vec![Vec3::new(0.0, 0.0, 1.0), Vec3::new(len, 0.0, 1.0)],
            found: true,
            iterations_used: 1,
            rng_seed: 0,
        }
    }

    #[test]
    fn ten_meter_path_at_two_meter_stride_has_six_poses() {
        let poses = trajectory_poses(&straight_plan(10.0), 2.0).unwrap();
        assert_eq!(poses.len(), 6);
        assert_eq!(poses[0].position, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(poses[5].position, Vec3::new(10.0, 0.0, 1.0));
    }

    #[test]
    fn stride_longer_than_path_keeps_endpoints() {
        let poses = trajectory_poses(&straight_plan(3.0), 10.0).unwrap();
        assert_eq!(poses.len(), 2);
        assert_eq!(poses[1].position, Vec3::new(3.0, 0.0, 1.0));
    }

    #[test]
    fn yaw_faces_the_travel_direction() {
        let plan = NavPlan::<f64> {
            waypoints: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(4.0, 0.0, 0.0),
                Vec3::new(4.0, 4.0, 0.0),
            ],
            found: true,
            iterations_used: 1,
            rng_seed: 0,
        };
        let poses = trajectory_poses(&plan, 2.0).unwrap();
        assert!((poses[0].yaw_deg - 0.0).abs() < 1e-9);
        let last = poses.last().unwrap();
        assert!((last.yaw_deg - 90.0).abs() < 1e-9);
    }

    #[test]
    fn not_found_plan_is_invalid() {
        let mut plan = straight_plan(5.0);
        plan.found = false;
        assert!(matches!(trajectory_poses(&plan, 1.0), Err(Error::InvalidPlan)));
    }

    #[test]
    fn pitch_clamps_to_89_degrees() {
        let p = AgentPose::new(Vec3::<f64>::zero(), 0.0, 120.0);
        assert_eq!(p.pitch_deg, 89.0);
    }
}
