//! PNG/PGM encoding helpers and base64 wrappers for the wire formats.

use base64::Engine;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{GrayImage, ImageEncoder, RgbImage};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::num::Real;
use crate::texture::UVPositionMap;

pub fn png_bytes_rgb(image: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out).write_image(
        image.as_raw(),
        image.width(),
        image.height(),
        image::ExtendedColorType::Rgb8,
    )?;
    Ok(out)
}

pub fn png_bytes_gray(image: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out).write_image(
        image.as_raw(),
        image.width(),
        image.height(),
        image::ExtendedColorType::L8,
    )?;
    Ok(out)
}

/// 16-bit-per-channel PNG of a position map; channels quantize [0,1].
pub fn png_bytes_position<S: Real>(map: &UVPositionMap<S>) -> Result<Vec<u8>> {
    let (w, h) = (map.positions.width() as u32, map.positions.height() as u32);
    let mut img: image::ImageBuffer<image::Rgb<u16>, Vec<u16>> = image::ImageBuffer::new(w, h);
    for (x, y, p) in map.positions.iter_cells() {
        let q = |v: S| -> u16 {
            (v.to_f64().unwrap().clamp(0.0, 1.0) * 65535.0).round() as u16
        };
        img.put_pixel(x as u32, y as u32, image::Rgb([q(p[0]), q(p[1]), q(p[2])]));
    }
    let mut out = Vec::new();
    let raw: Vec<u8> = img.as_raw().iter().flat_map(|v| v.to_be_bytes()).collect();
    image::codecs::png::PngEncoder::new(&mut out).write_image(
        &raw,
        w,
        h,
        image::ExtendedColorType::Rgb16,
    )?;
    Ok(out)
}

/// Raw (binary) PGM of a boolean mask: 255 set, 0 clear.
pub fn pgm_bytes_mask(mask: &Grid<bool>) -> Result<Vec<u8>> {
    let data: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            &data,
            mask.width() as u32,
            mask.height() as u32,
            image::ExtendedColorType::L8,
        )?;
    Ok(out)
}

pub fn decode_rgb(bytes: &[u8]) -> Result<RgbImage> {
    Ok(image::load_from_memory(bytes)?.to_rgb8())
}

pub fn decode_gray(bytes: &[u8]) -> Result<GrayImage> {
    Ok(image::load_from_memory(bytes)?.to_luma8())
}

pub fn b64_encode(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub fn b64_decode(text: &str) -> Result<Vec<u8>> {
    base64::engine::general_purpose::STANDARD
        .decode(text.trim())
        .map_err(|e| Error::MalformedResponse(format!("bad base64 payload: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb_png_round_trip() {
        let mut img = RgbImage::new(5, 3);
        img.put_pixel(2, 1, image::Rgb([9, 8, 7]));
        let bytes = png_bytes_rgb(&img).unwrap();
        assert_eq!(decode_rgb(&bytes).unwrap(), img);
    }

    #[test]
    fn pgm_mask_encodes_binary_graymap() {
        let mut mask = Grid::new(3, 2, false);
        mask.set(1, 0, true);
        let bytes = pgm_bytes_mask(&mask).unwrap();
        assert!(bytes.starts_with(b"P5"));
        let back = decode_gray(&bytes).unwrap();
        assert_eq!(back.get_pixel(1, 0).0[0], 255);
        assert_eq!(back.get_pixel(0, 0).0[0], 0);
    }

    #[test]
    fn base64_round_trip() {
        let data = vec![0u8, 1, 2, 250, 255];
        assert_eq!(b64_decode(&b64_encode(&data)).unwrap(), data);
    }
}
