//! Batch pipeline turning open urban layout data (OSM XML or semantic +
//! height rasters) and text/image prompts into textured, exportable,
//! agent-navigable 3D scenes.
//!
//! The crate is generic over the scalar type via [`num::Real`]; the aliases
//! below fix `f64` for pipeline use.

pub mod assembly;
pub mod config;
pub mod design;
pub mod embodied;
pub mod error;
pub mod gateway;
pub mod geometry;
pub mod grid;
pub mod imageio;
pub mod layout;
pub mod math;
pub mod metrics;
pub mod num;
pub mod pipeline;
pub mod render;
pub mod texture;
pub mod texturing;

pub use error::{Error, Result};

/// Scalar type used by the shipped pipeline.
pub type Scalar = f64;

pub type Vec2 = math::Vec2<Scalar>;
pub type Vec3 = math::Vec3<Scalar>;
pub type Rect = math::Rect<Scalar>;
pub type Aabb3 = math::Aabb3<Scalar>;
pub type GeoLayout = layout::GeoLayout<Scalar>;
pub type LayoutElement = layout::LayoutElement<Scalar>;
pub type RasterLayout = layout::RasterLayout<Scalar>;
pub type AssetMesh = geometry::AssetMesh<Scalar>;
pub type ScenePlan = geometry::ScenePlan<Scalar>;
pub type CameraView = render::CameraView<Scalar>;
pub type FrameBuffer = render::FrameBuffer<Scalar>;
pub type DepthImage = render::DepthImage<Scalar>;
pub type UVAtlas = render::UVAtlas<Scalar>;
pub type UVTexture = texture::UVTexture;
pub type ViewMask = texture::ViewMask<Scalar>;
pub type UVPositionMap = texture::UVPositionMap<Scalar>;
