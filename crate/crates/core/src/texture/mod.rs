//! Multi-view texture projection: back-projection of view images into UV
//! space, mask-weighted merging, UV position maps and geometric inpainting.

pub mod backproject;
pub mod inpaint;
pub mod merge;
pub mod position;

use image::RgbImage;

use crate::grid::Grid;
use crate::num::Real;

pub use backproject::backproject;
pub use inpaint::inpaint_uv;
pub use merge::{merge_views, partition_masks};
pub use position::build_position_map;

/// Occlusion tolerance relative to the view far plane.
pub const OCCLUSION_EPS_REL: f64 = 1e-3;
/// Minimum cosine between surface normal and the towards-eye direction.
pub const FACING_MIN_COS: f64 = 0.2;
/// Neighbors used by the geometric inpaint fill.
pub const INPAINT_K: usize = 4;

/// UV-space texture with per-texel coverage.
#[derive(Clone, Debug, PartialEq)]
pub struct UVTexture {
    pub rgb: RgbImage,
    pub coverage: Grid<bool>,
}

impl UVTexture {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            rgb: RgbImage::new(width, height),
            coverage: Grid::new(width as usize, height as usize, false),
        }
    }

    pub fn width(&self) -> u32 {
        self.rgb.width()
    }

    pub fn height(&self) -> u32 {
        self.rgb.height()
    }

    pub fn covered_count(&self) -> usize {
        self.coverage.data().iter().filter(|&&c| c).count()
    }

    /// Covered fraction relative to a texel budget (usually the atlas-valid
    /// count).
    pub fn coverage_fraction(&self, total: usize) -> f64 {
        if total == 0 {
            0.0
        } else {
            self.covered_count() as f64 / total as f64
        }
    }
}

/// Per-view UV mask with the view-alignment weight of each covered texel.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewMask<S> {
    pub mask: Grid<bool>,
    pub quality: Grid<S>,
}

impl<S: Real> ViewMask<S> {
    pub fn new(width: usize, height: usize) -> Self {
        Self { mask: Grid::new(width, height, false), quality: Grid::new(width, height, S::zero()) }
    }
}

/// Texel-to-3D-position image: asset-local surface positions normalized so
/// the mesh bounding box spans [0,1]^3.
#[derive(Clone, Debug, PartialEq)]
pub struct UVPositionMap<S> {
    pub positions: Grid<[S; 3]>,
    pub valid: Grid<bool>,
}

impl<S: Real> UVPositionMap<S> {
    pub fn valid_count(&self) -> usize {
        self.valid.data().iter().filter(|&&v| v).count()
    }
}
