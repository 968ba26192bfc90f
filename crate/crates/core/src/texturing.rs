//! Per-asset texture stage: camera rig, depth conditioning, view generation,
//! patch cropping, back-projection, merge, position map, inpaint, enhance.

use image::RgbImage;

use crate::error::{Error, Result};
use crate::gateway::{
    crop_patches, generate_views, inpaint_remote, GenerationRequest, GeneratorEndpoint,
    GeneratorMode,
};
use crate::geometry::AssetMesh;
use crate::num::Real;
use crate::render::camera::make_camera_rig;
use crate::render::raster::{normalize_depth, rasterize, DepthImage, FrameBuffer, Shading};
use crate::render::uv::{unwrap_uv, AtlasRaster, UVAtlas};
use crate::texture::{backproject, build_position_map, merge_views, UVPositionMap, UVTexture};

/// Atlas overflow retries double the resolution this many times before
/// giving up.
const MAX_ATLAS_DOUBLINGS: u32 = 3;

#[derive(Clone, Debug)]
pub struct TextureStageConfig {
    pub n_views: usize,
    pub steps: u32,
    pub atlas_resolution: u32,
    pub generator: GeneratorEndpoint,
    pub inpainter: GeneratorEndpoint,
    pub upscaler: GeneratorEndpoint,
    pub reference_image: Option<RgbImage>,
    /// In strict mode a failing remote generator aborts instead of falling
    /// back to the procedural texture.
    pub strict_endpoints: bool,
}

impl Default for TextureStageConfig {
    fn default() -> Self {
        Self {
            n_views: 4,
            steps: crate::gateway::DEFAULT_STEPS,
            atlas_resolution: 1024,
            generator: GeneratorEndpoint::default(),
            inpainter: GeneratorEndpoint::default(),
            upscaler: GeneratorEndpoint::default(),
            reference_image: None,
            strict_endpoints: false,
        }
    }
}

/// A finished per-asset texture with the atlas it indexes.
#[derive(Clone, Debug, PartialEq)]
pub struct TexturedAsset<S> {
    pub texture: UVTexture,
    pub atlas: UVAtlas<S>,
    pub position_map: UVPositionMap<S>,
    /// Texel budget of the atlas at the texture's resolution.
    pub valid_texels: usize,
    pub prompt: String,
    pub seed: u64,
}

impl<S: Real> TexturedAsset<S> {
    pub fn coverage_fraction(&self) -> f64 {
        self.texture.coverage_fraction(self.valid_texels)
    }
}

/// Unwrap with the caller-retries-at-2x contract on atlas overflow.
pub fn unwrap_with_retry<S: Real>(mesh: &AssetMesh<S>, base: u32) -> Result<UVAtlas<S>> {
    let mut resolution = base;
    for _ in 0..=MAX_ATLAS_DOUBLINGS {
        match unwrap_uv(mesh, resolution) {
            Err(Error::AtlasOverflow { .. }) => {
                log::warn!("{}: atlas overflow at {resolution}, retrying at 2x", mesh.id);
                resolution *= 2;
            }
            other => return other,
        }
    }
    Err(Error::AtlasOverflow { width: resolution, height: resolution })
}

/// Run the full texture pipeline for one asset.
pub fn texture_asset<S: Real>(
    mesh: &AssetMesh<S>,
    prompt: &str,
    seed: u64,
    cfg: &TextureStageConfig,
) -> Result<TexturedAsset<S>> {
    let views = make_camera_rig(mesh, cfg.n_views)?;
    let depth_frames: Vec<FrameBuffer<S>> =
        views.iter().map(|v| rasterize(mesh, v, Shading::CategoryColor)).collect();
    let depths: Vec<DepthImage<S>> = depth_frames.iter().map(normalize_depth).collect();

    let mut request = GenerationRequest::new(prompt, mesh.category, &depths, seed)?;
    request.steps = cfg.steps;
    request.reference = cfg.reference_image.clone();

    let response = match generate_views(&request, &cfg.generator) {
        Ok(r) => r,
        Err(e @ Error::GeneratorUnavailable(_)) | Err(e @ Error::MalformedResponse(_)) => {
            if cfg.strict_endpoints || matches!(cfg.generator.mode, GeneratorMode::Procedural) {
                return Err(e);
            }
            log::warn!("{}: generator failed ({e}); procedural fallback", mesh.id);
            generate_views(&request, &GeneratorEndpoint::default())?
        }
        Err(e) => return Err(e),
    };
    let patches = crop_patches(&response.image, cfg.n_views)?;

    let atlas = unwrap_with_retry(mesh, cfg.atlas_resolution)?;
    let mut textures = Vec::with_capacity(cfg.n_views);
    let mut masks = Vec::with_capacity(cfg.n_views);
    for ((view, patch), depth_ref) in views.iter().zip(&patches).zip(&depth_frames) {
        let (tex, mask) = backproject(view, patch, mesh, &atlas, depth_ref)?;
        textures.push(tex);
        masks.push(mask);
    }
    let merged = merge_views(&textures, &masks)?;

    let position_map =
        build_position_map(mesh, &atlas, atlas.width as usize, atlas.height as usize);
    let inpainted = inpaint_remote(&merged, &position_map, prompt, &cfg.inpainter)?;
    let enhanced = crate::gateway::enhance_texture(&inpainted, &cfg.upscaler)?;

    let valid_texels = if enhanced.width() == atlas.width && enhanced.height() == atlas.height {
        AtlasRaster::build(&atlas, atlas.width as usize, atlas.height as usize).valid_count()
    } else {
        // upscaled: the valid set scales with the texture
        enhanced.covered_count()
    };

    Ok(TexturedAsset {
        texture: enhanced,
        atlas,
        position_map,
        valid_texels,
        prompt: prompt.to_string(),
        seed,
    })
}
