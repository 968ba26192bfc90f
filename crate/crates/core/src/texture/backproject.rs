//! Inverse rendering: pull view-image colors back onto atlas texels that are
//! visible, unoccluded and adequately facing the camera.

use image::RgbImage;

use crate::error::{Error, Result};
use crate::geometry::AssetMesh;
use crate::num::{cast, Real};
use crate::render::camera::{CameraView, Projector};
use crate::render::raster::FrameBuffer;
use crate::render::uv::{AtlasRaster, UVAtlas};
use crate::texture::{UVTexture, ViewMask, FACING_MIN_COS, OCCLUSION_EPS_REL};

/// Back-project one view image into UV space. A texel is accepted when its
/// surface point projects inside the frame, matches the reference depth
/// within `1e-3 * far` (occlusion test) and faces the camera with cosine at
/// least 0.2; accepted texels sample the patch bilinearly and carry that
/// cosine as quality.
pub fn backproject<S: Real>(
    view: &CameraView<S>,
    patch: &RgbImage,
    mesh: &AssetMesh<S>,
    atlas: &UVAtlas<S>,
    depth_ref: &FrameBuffer<S>,
) -> Result<(UVTexture, ViewMask<S>)> {
    if patch.width() != view.width || patch.height() != view.height {
        return Err(Error::Shape(format!(
            "patch {}x{} vs view {}x{}",
            patch.width(),
            patch.height(),
            view.width,
            view.height
        )));
    }
    if depth_ref.width != view.width || depth_ref.height != view.height {
        return Err(Error::Shape(format!(
            "depth reference {}x{} vs view {}x{}",
            depth_ref.width,
            depth_ref.height,
            view.width,
            view.height
        )));
    }

    let (w, h) = (atlas.width as usize, atlas.height as usize);
    let raster = AtlasRaster::build(atlas, w, h);
    let projector = Projector::new(view);
    let eps = projector.far * cast(OCCLUSION_EPS_REL);
    let min_cos: S = cast(FACING_MIN_COS);

    let mut tex = UVTexture::new(atlas.width, atlas.height);
    let mut vm = ViewMask::new(w, h);

    for ty in 0..h {
        for tx in 0..w {
            let face = *raster.face.get(tx, ty);
            if face == crate::render::raster::NO_FACE {
                continue;
            }
            let Some(p) = raster.surface_point(mesh, tx, ty) else { continue };
            let Some((pix, depth)) = projector.project(p) else { continue };
            let (px, py) = (pix.x.to_f64().unwrap(), pix.y.to_f64().unwrap());
            if px < 0.0 || py < 0.0 || px >= view.width as f64 || py >= view.height as f64 {
                continue;
            }
            let ref_depth = depth_ref.depth[depth_ref.idx(px as u32, py as u32)];
            if !ref_depth.is_finite() || (depth - ref_depth).abs() > eps {
                continue;
            }
            let towards_eye = (projector.eye - p).normalized();
            let cos = mesh.face_normals[face as usize].dot(towards_eye);
            if cos < min_cos {
                continue;
            }
            let color = sample_bilinear(patch, px, py);
            tex.rgb.put_pixel(tx as u32, ty as u32, image::Rgb(color));
            tex.coverage.set(tx, ty, true);
            vm.mask.set(tx, ty, true);
            vm.quality.set(tx, ty, cos);
        }
    }
    Ok((tex, vm))
}

/// Bilinear sample at continuous pixel coordinates (pixel centers at +0.5).
pub fn sample_bilinear(image: &RgbImage, x: f64, y: f64) -> [u8; 3] {
    let (w, h) = (image.width() as i64, image.height() as i64);
    let fx = x - 0.5;
    let fy = y - 0.5;
    let x0 = fx.floor() as i64;
    let y0 = fy.floor() as i64;
    let tx = fx - x0 as f64;
    let ty = fy - y0 as f64;
    let clamp = |v: i64, hi: i64| v.clamp(0, hi - 1) as u32;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let p00 = image.get_pixel(clamp(x0, w), clamp(y0, h)).0[c] as f64;
        let p10 = image.get_pixel(clamp(x0 + 1, w), clamp(y0, h)).0[c] as f64;
        let p01 = image.get_pixel(clamp(x0, w), clamp(y0 + 1, h)).0[c] as f64;
        let p11 = image.get_pixel(clamp(x0 + 1, w), clamp(y0 + 1, h)).0[c] as f64;
        let v = p00 * (1.0 - tx) * (1.0 - ty)
            + p10 * tx * (1.0 - ty)
            + p01 * (1.0 - tx) * ty
            + p11 * tx * ty;
        out[c] = v.round().clamp(0.0, 255.0) as u8;
    }
    out
}
