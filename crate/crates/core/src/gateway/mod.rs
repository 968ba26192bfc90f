//! Uniform gateway to texture generation, external UV inpainting and tile
//! upscaling, with a deterministic procedural fallback. Wire formats are
//! documented in `docs/protocol.md`.

pub mod procedural;
pub mod remote;

use image::{GrayImage, RgbImage};
use serde_json::json;

use crate::error::{Error, Result};
use crate::imageio;
use crate::layout::AssetCategory;
use crate::num::Real;
use crate::render::raster::DepthImage;
use crate::texture::{inpaint_uv, UVPositionMap, UVTexture};

pub use remote::JsonClient;

/// Diffusion inference steps when the request does not say otherwise.
pub const DEFAULT_STEPS: u32 = 30;
/// Remote inpaint responses must preserve covered texels within this mean
/// absolute error (byte units) or the local fill is used instead.
pub const INPAINT_PRESERVE_MAE: f64 = 8.0;

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub category: AssetCategory,
    pub reference: Option<RgbImage>,
    /// Row-major tiling of per-view normalized depth maps.
    pub depth_grid: GrayImage,
    /// (columns, rows) of the tiling.
    pub tiles: (u32, u32),
    pub tile_size: u32,
    /// Stands in for the diffusion latent; forwarded to remote servers.
    pub seed: u64,
    pub steps: u32,
}

impl GenerationRequest {
    /// Tile the per-view depth images into one conditioning grid. Views are
    /// laid out row-major in rig order; unused tiles stay at background
    /// depth 1.
    pub fn new<S: Real>(
        prompt: impl Into<String>,
        category: AssetCategory,
        depths: &[DepthImage<S>],
        seed: u64,
    ) -> Result<Self> {
        let prompt = prompt.into();
        if depths.is_empty() {
            return Err(Error::EmptyInput("generation request needs at least one view"));
        }
        let tile_w = depths[0].values.width();
        let tile_h = depths[0].values.height();
        if tile_w != tile_h {
            return Err(Error::Shape("depth tiles must be square".into()));
        }
        let (cols, rows) = grid_dims(depths.len());
        let mut grid =
            GrayImage::from_pixel((cols * tile_w) as u32, (rows * tile_h) as u32, image::Luma([255]));
        for (k, d) in depths.iter().enumerate() {
            if d.values.width() != tile_w || d.values.height() != tile_h {
                return Err(Error::Shape("depth tiles differ in size".into()));
            }
            let (cx, cy) = ((k % cols) * tile_w, (k / cols) * tile_h);
            let tile = d.to_gray_image();
            for (x, y, px) in tile.enumerate_pixels() {
                grid.put_pixel(cx as u32 + x, cy as u32 + y, *px);
            }
        }
        Ok(Self {
            prompt,
            category,
            reference: None,
            depth_grid: grid,
            tiles: (cols as u32, rows as u32),
            tile_size: tile_w as u32,
            seed,
            steps: DEFAULT_STEPS,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.prompt.is_empty() && self.reference.is_none() {
            return Err(Error::EmptyInput("generation needs a prompt or a reference image"));
        }
        if self.steps == 0 {
            return Err(Error::Shape("steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Row-major tiling dimensions for `n` views: near-square, e.g. 4 -> 2x2.
pub fn grid_dims(n: usize) -> (usize, usize) {
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    (cols, rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationResponse {
    pub image: RgbImage,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum GeneratorMode {
    #[default]
    Procedural,
    Remote {
        url: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorEndpoint {
    pub mode: GeneratorMode,
    pub timeout_s: u64,
    pub retries: u32,
    pub max_inflight: usize,
}

impl Default for GeneratorEndpoint {
    fn default() -> Self {
        Self { mode: GeneratorMode::Procedural, timeout_s: 60, retries: 2, max_inflight: 2 }
    }
}

impl GeneratorEndpoint {
    pub fn remote(url: impl Into<String>) -> Self {
        Self { mode: GeneratorMode::Remote { url: url.into() }, ..Self::default() }
    }

    fn client(&self) -> JsonClient {
        JsonClient::new(self.timeout_s, self.retries, self.max_inflight)
    }
}

/// Generate the multi-view appearance image for one asset: remote depth-
/// conditioned generation, or the deterministic procedural texture.
pub fn generate_views(
    req: &GenerationRequest,
    ep: &GeneratorEndpoint,
) -> Result<GenerationResponse> {
    req.validate()?;
    match &ep.mode {
        GeneratorMode::Procedural => Ok(GenerationResponse { image: procedural::generate(req) }),
        GeneratorMode::Remote { url } => {
            let mut body = json!({
                "prompt": req.prompt,
                "seed": req.seed,
                "steps": req.steps,
                "depth_png": imageio::b64_encode(&imageio::png_bytes_gray(&req.depth_grid)?),
                "tiles": format!("{}x{}", req.tiles.0, req.tiles.1),
                "tile_size": req.tile_size,
            });
            if let Some(reference) = &req.reference {
                body["reference_png"] =
                    json!(imageio::b64_encode(&imageio::png_bytes_rgb(reference)?));
            }
            let resp = ep
                .client()
                .post_json(url, &body)
                .map_err(Error::GeneratorUnavailable)?;
            let image_b64 =
                remote::json_str(&resp, "image_png").map_err(Error::MalformedResponse)?;
            let image = imageio::decode_rgb(&imageio::b64_decode(image_b64)?)?;
            let want = (req.tiles.0 * req.tile_size, req.tiles.1 * req.tile_size);
            if (image.width(), image.height()) != want {
                return Err(Error::MalformedResponse(format!(
                    "expected {}x{} image, got {}x{}",
                    want.0,
                    want.1,
                    image.width(),
                    image.height()
                )));
            }
            Ok(GenerationResponse { image })
        }
    }
}

/// Split the generated grid back into per-view patches in rig order.
pub fn crop_patches(image: &RgbImage, n: usize) -> Result<Vec<RgbImage>> {
    if n == 0 {
        return Err(Error::EmptyInput("crop_patches needs n >= 1"));
    }
    let (cols, rows) = grid_dims(n);
    if image.width() % cols as u32 != 0
        || image.height() % rows as u32 != 0
        || image.width() / cols as u32 != image.height() / rows as u32
    {
        return Err(Error::Shape(format!(
            "{}x{} image does not tile {cols}x{rows} into square views",
            image.width(),
            image.height()
        )));
    }
    let (tw, th) = (image.width() / cols as u32, image.height() / rows as u32);
    let mut patches = Vec::with_capacity(n);
    for k in 0..n {
        let (cx, cy) = ((k % cols) as u32 * tw, (k / cols) as u32 * th);
        let mut patch = RgbImage::new(tw, th);
        for y in 0..th {
            for x in 0..tw {
                patch.put_pixel(x, y, *image.get_pixel(cx + x, cy + y));
            }
        }
        patches.push(patch);
    }
    Ok(patches)
}

/// Inverse of [`crop_patches`]: assemble per-view patches into a grid.
pub fn tile_patches(patches: &[RgbImage]) -> Result<RgbImage> {
    if patches.is_empty() {
        return Err(Error::EmptyInput("tile_patches needs at least one patch"));
    }
    let (tw, th) = (patches[0].width(), patches[0].height());
    let (cols, rows) = grid_dims(patches.len());
    let mut grid = RgbImage::new(cols as u32 * tw, rows as u32 * th);
    for (k, p) in patches.iter().enumerate() {
        if p.width() != tw || p.height() != th {
            return Err(Error::Shape("patches differ in size".into()));
        }
        let (cx, cy) = ((k % cols) as u32 * tw, (k / cols) as u32 * th);
        for y in 0..th {
            for x in 0..tw {
                grid.put_pixel(cx + x, cy + y, *p.get_pixel(x, y));
            }
        }
    }
    Ok(grid)
}

/// Position-guided UV inpainting through the external service, guarded by a
/// covered-texel preservation check; any failure falls back to the local
/// geometric fill.
pub fn inpaint_remote<S: Real>(
    tex: &UVTexture,
    pos: &UVPositionMap<S>,
    prompt: &str,
    ep: &GeneratorEndpoint,
) -> Result<UVTexture> {
    let GeneratorMode::Remote { url } = &ep.mode else {
        return inpaint_uv(tex, pos);
    };
    let body = json!({
        "prompt": prompt,
        "texture_png": imageio::b64_encode(&imageio::png_bytes_rgb(&tex.rgb)?),
        "coverage_pgm": imageio::b64_encode(&imageio::pgm_bytes_mask(&tex.coverage)?),
        "position_png16": imageio::b64_encode(&imageio::png_bytes_position(pos)?),
    });
    let remote_tex = match ep.client().post_json(url, &body) {
        Ok(resp) => match remote::json_str(&resp, "texture_png")
            .map_err(Error::MalformedResponse)
            .and_then(|b64| imageio::decode_rgb(&imageio::b64_decode(b64)?))
        {
            Ok(img) => Some(img),
            Err(e) => {
                log::warn!("inpaint response unusable ({e}); using local fill");
                None
            }
        },
        Err(e) => {
            log::warn!("inpaint endpoint unavailable ({e}); using local fill");
            None
        }
    };
    let Some(img) = remote_tex else {
        return inpaint_uv(tex, pos);
    };
    if (img.width(), img.height()) != (tex.width(), tex.height())
        || !preserves_covered(tex, &img)
    {
        log::warn!("inpaint response repainted covered texels; using local fill");
        return inpaint_uv(tex, pos);
    }
    Ok(UVTexture { rgb: img, coverage: pos.valid.clone() })
}

fn preserves_covered(tex: &UVTexture, candidate: &RgbImage) -> bool {
    let mut err = 0.0f64;
    let mut n = 0usize;
    for (x, y, covered) in tex.coverage.iter_cells() {
        if !covered {
            continue;
        }
        let a = tex.rgb.get_pixel(x as u32, y as u32).0;
        let b = candidate.get_pixel(x as u32, y as u32).0;
        for c in 0..3 {
            err += (a[c] as f64 - b[c] as f64).abs();
            n += 1;
        }
    }
    n == 0 || err / n as f64 <= INPAINT_PRESERVE_MAE
}

/// Tile-upscaler hook. Without an endpoint this is the identity; a remote
/// 2x upscale carries the coverage mask along by nearest neighbor.
pub fn enhance_texture(tex: &UVTexture, ep: &GeneratorEndpoint) -> Result<UVTexture> {
    let GeneratorMode::Remote { url } = &ep.mode else {
        return Ok(tex.clone());
    };
    let body = json!({
        "texture_png": imageio::b64_encode(&imageio::png_bytes_rgb(&tex.rgb)?),
        "scale": 2,
    });
    let img = match ep.client().post_json(url, &body) {
        Ok(resp) => match remote::json_str(&resp, "image_png")
            .map_err(Error::MalformedResponse)
            .and_then(|b64| imageio::decode_rgb(&imageio::b64_decode(b64)?))
        {
            Ok(img) => img,
            Err(e) => {
                log::warn!("upscale response unusable ({e}); keeping original texture");
                return Ok(tex.clone());
            }
        },
        Err(e) => {
            log::warn!("upscale endpoint unavailable ({e}); keeping original texture");
            return Ok(tex.clone());
        }
    };
    if (img.width(), img.height()) != (tex.width() * 2, tex.height() * 2) {
        log::warn!("upscale response has wrong dimensions; keeping original texture");
        return Ok(tex.clone());
    }
    let mut coverage =
        crate::grid::Grid::new(img.width() as usize, img.height() as usize, false);
    for (x, y, &covered) in tex.coverage.iter_cells() {
        if covered {
            for dy in 0..2 {
                for dx in 0..2 {
                    coverage.set(x * 2 + dx, y * 2 + dy, true);
                }
            }
        }
    }
    Ok(UVTexture { rgb: img, coverage })
}
