//! Software rendering: cameras, rasterization targets and UV unwrap.

pub mod camera;
pub mod raster;
pub mod uv;

pub use camera::{make_camera_rig, CameraView, Projector};
pub use raster::{
    category_color, normalize_depth, rasterize, render_scene, DepthImage, FrameBuffer,
    SceneItem, Shading, BACKGROUND_SEMANTIC, NO_FACE,
};
pub use uv::{unwrap_uv, AtlasRaster, Island, UVAtlas};
