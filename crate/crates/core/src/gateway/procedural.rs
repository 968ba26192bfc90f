//! Deterministic fallback texture generator: category palette keyed by
//! prompt hash, seeded value noise, luminance modulated by the depth grid.

use image::RgbImage;

use crate::gateway::GenerationRequest;
use crate::layout::AssetCategory;

/// FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn mix(seed: u64, x: i64, y: i64) -> u64 {
    let mut h = seed ^ (x as u64).wrapping_mul(0x9e3779b97f4a7c15);
    h ^= (y as u64).wrapping_mul(0xbf58476d1ce4e5b9);
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58476d1ce4e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d049bb133111eb);
    h ^ (h >> 31)
}

fn lattice(seed: u64, x: i64, y: i64) -> f64 {
    (mix(seed, x, y) >> 11) as f64 / (1u64 << 53) as f64
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Smoothed lattice noise in [0,1).
fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor() as i64, y.floor() as i64);
    let (tx, ty) = (smoothstep(x - x0 as f64), smoothstep(y - y0 as f64));
    let v00 = lattice(seed, x0, y0);
    let v10 = lattice(seed, x0 + 1, y0);
    let v01 = lattice(seed, x0, y0 + 1);
    let v11 = lattice(seed, x0 + 1, y0 + 1);
    let a = v00 + (v10 - v00) * tx;
    let b = v01 + (v11 - v01) * tx;
    a + (b - a) * ty
}

fn fbm(seed: u64, x: f64, y: f64) -> f64 {
    let mut amp = 0.5;
    let mut freq = 1.0;
    let mut sum = 0.0;
    let mut norm = 0.0;
    for octave in 0..3u64 {
        sum += amp * value_noise(seed.wrapping_add(octave), x * freq, y * freq);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    sum / norm
}

/// Base palettes, componentwise <= 180 so the depth brightening never
/// clips a channel (clipping would shift hue).
fn palette(category: AssetCategory) -> &'static [[u8; 3]] {
    match category {
        AssetCategory::Buildings => &[
            [168, 120, 96],  // brick
            [172, 160, 140], // sandstone
            [140, 140, 144], // concrete
            [110, 118, 130], // slate
            [150, 128, 104], // render
        ],
        AssetCategory::RoadsPaths => &[[84, 84, 88], [100, 96, 90], [70, 70, 74]],
        AssetCategory::ForestVegetation => &[[70, 120, 58], [88, 132, 70], [56, 104, 60]],
        AssetCategory::Water => &[[56, 96, 150], [70, 110, 160], [48, 88, 132]],
        AssetCategory::Ground => &[[140, 128, 110], [128, 120, 104], [150, 140, 118]],
    }
}

/// Pure function of (prompt, seed, depth grid, category).
pub fn generate(req: &GenerationRequest) -> RgbImage {
    let (w, h) = (req.depth_grid.width(), req.depth_grid.height());
    let colors = palette(req.category);
    let prompt_hash = fnv1a64(req.prompt.as_bytes());
    let base = colors[(prompt_hash % colors.len() as u64) as usize];
    let noise_seed = req.seed ^ prompt_hash;
    let scale = 24.0 / req.tile_size.max(1) as f64; // a few noise periods per tile

    let mut out = RgbImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let n = fbm(noise_seed, x as f64 * scale * 8.0, y as f64 * scale * 8.0);
            let depth = req.depth_grid.get_pixel(x, y).0[0] as f64 / 255.0;
            let tone = (0.75 + 0.25 * n) * (1.28 - 0.45 * depth);
            let px = [
                (base[0] as f64 * tone).round() as u8,
                (base[1] as f64 * tone).round() as u8,
                (base[2] as f64 * tone).round() as u8,
            ];
            out.put_pixel(x, y, image::Rgb(px));
        }
    }
    out
}
