//! Merge per-view UV textures through disjoint masks: each multiply-covered
//! texel goes to the view of maximal quality, then the textures are summed
//! under the partitioned masks.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::num::Real;
use crate::texture::{UVTexture, ViewMask};

/// Reduce overlapping view masks to a disjoint partition: every covered
/// texel is assigned to the view of maximal quality, ties to the lowest
/// view index. The union of the partition equals the union of the inputs.
pub fn partition_masks<S: Real>(masks: &[ViewMask<S>]) -> Vec<Grid<bool>> {
    if masks.is_empty() {
        return Vec::new();
    }
    let (w, h) = (masks[0].mask.width(), masks[0].mask.height());
    let mut partition: Vec<Grid<bool>> = masks.iter().map(|_| Grid::new(w, h, false)).collect();
    for ty in 0..h {
        for tx in 0..w {
            let mut winner: Option<(usize, S)> = None;
            for (k, vm) in masks.iter().enumerate() {
                if !*vm.mask.get(tx, ty) {
                    continue;
                }
                let q = *vm.quality.get(tx, ty);
                if winner.is_none_or(|(_, best)| q > best) {
                    winner = Some((k, q));
                }
            }
            if let Some((k, _)) = winner {
                partition[k].set(tx, ty, true);
            }
        }
    }
    partition
}

/// Masked sum of the per-view textures over the disjoint partition; output
/// coverage is the union of the input masks.
pub fn merge_views<S: Real>(
    textures: &[UVTexture],
    masks: &[ViewMask<S>],
) -> Result<UVTexture> {
    if textures.is_empty() || masks.is_empty() {
        return Err(Error::EmptyInput("merge_views needs at least one view"));
    }
    if textures.len() != masks.len() {
        return Err(Error::Shape(format!(
            "{} textures vs {} masks",
            textures.len(),
            masks.len()
        )));
    }
    let (w, h) = (textures[0].width(), textures[0].height());
    for (t, m) in textures.iter().zip(masks) {
        if t.width() != w
            || t.height() != h
            || m.mask.width() != w as usize
            || m.mask.height() != h as usize
        {
            return Err(Error::Shape("merge inputs differ in dimensions".into()));
        }
    }

    let partition = partition_masks(masks);
    let mut acc: Vec<[u16; 3]> = vec![[0; 3]; (w * h) as usize];
    let mut out = UVTexture::new(w, h);
    for (k, tex) in textures.iter().enumerate() {
        for ty in 0..h as usize {
            for tx in 0..w as usize {
                if *partition[k].get(tx, ty) {
                    let c = tex.rgb.get_pixel(tx as u32, ty as u32).0;
                    let a = &mut acc[ty * w as usize + tx];
                    for i in 0..3 {
                        a[i] += c[i] as u16; // disjoint masks: one term per texel
                    }
                }
            }
        }
    }
    for ty in 0..h as usize {
        for tx in 0..w as usize {
            let a = acc[ty * w as usize + tx];
            out.rgb.put_pixel(tx as u32, ty as u32, image::Rgb([a[0] as u8, a[1] as u8, a[2] as u8]));
            let covered = masks.iter().any(|m| *m.mask.get(tx, ty));
            out.coverage.set(tx, ty, covered);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(w: u32, h: u32, texels: &[(usize, usize, [u8; 3], f64)]) -> (UVTexture, ViewMask<f64>) {
        let mut t = UVTexture::new(w, h);
        let mut m = ViewMask::new(w as usize, h as usize);
        for &(x, y, c, q) in texels {
            t.rgb.put_pixel(x as u32, y as u32, image::Rgb(c));
            t.coverage.set(x, y, true);
            m.mask.set(x, y, true);
            m.quality.set(x, y, q);
        }
        (t, m)
    }

    #[test]
    fn single_view_merge_is_identity() {
        let (t, m) = view(4, 4, &[(0, 0, [10, 20, 30], 0.9), (2, 3, [5, 6, 7], 0.4)]);
        let merged = merge_views(&[t.clone()], &[m]).unwrap();
        assert_eq!(merged, t);
    }

    #[test]
    fn disjoint_masks_union_colors() {
        let (t1, m1) = view(4, 1, &[(0, 0, [255, 0, 0], 0.8)]);
        let (t2, m2) = view(4, 1, &[(2, 0, [0, 255, 0], 0.7)]);
        let merged = merge_views(&[t1, t2], &[m1, m2]).unwrap();
        assert_eq!(merged.rgb.get_pixel(0, 0).0, [255, 0, 0]);
        assert_eq!(merged.rgb.get_pixel(2, 0).0, [0, 255, 0]);
        assert!(*merged.coverage.get(0, 0) && *merged.coverage.get(2, 0));
        assert!(!*merged.coverage.get(1, 0));
    }

    #[test]
    fn overlap_goes_to_the_higher_quality_view() {
        let (t1, m1) = view(2, 1, &[(0, 0, [100, 0, 0], 0.4)]);
        let (t2, m2) = view(2, 1, &[(0, 0, [0, 100, 0], 0.9)]);
        let merged = merge_views(&[t1, t2], &[m1, m2]).unwrap();
        assert_eq!(merged.rgb.get_pixel(0, 0).0, [0, 100, 0]);
    }

    #[test]
    fn quality_ties_pick_the_lowest_view_index() {
        let (t1, m1) = view(2, 1, &[(0, 0, [1, 1, 1], 0.5)]);
        let (t2, m2) = view(2, 1, &[(0, 0, [9, 9, 9], 0.5)]);
        let merged = merge_views(&[t1, t2], &[m1, m2]).unwrap();
        assert_eq!(merged.rgb.get_pixel(0, 0).0, [1, 1, 1]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            merge_views::<f64>(&[], &[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn argmax_brute_force_oracle_agrees() {
        // randomized-ish grid built deterministically
        let (w, h) = (16u32, 16u32);
        let mut texels1 = Vec::new();
        let mut texels2 = Vec::new();
        let mut texels3 = Vec::new();
        for y in 0..h as usize {
            for x in 0..w as usize {
                let s = (x * 31 + y * 17) % 7;
                if s % 2 == 0 {
                    texels1.push((x, y, [50, 0, 0], (s as f64) / 7.0));
                }
                if s % 3 == 0 {
                    texels2.push((x, y, [0, 60, 0], ((s * 2) % 7) as f64 / 7.0));
                }
                if s % 5 == 0 {
                    texels3.push((x, y, [0, 0, 70], ((s * 3) % 7) as f64 / 7.0));
                }
            }
        }
        let (t1, m1) = view(w, h, &texels1);
        let (t2, m2) = view(w, h, &texels2);
        let (t3, m3) = view(w, h, &texels3);
        let texs = [t1, t2, t3];
        let masks = [m1, m2, m3];
        let merged = merge_views(&texs, &masks).unwrap();

        // oracle: per-texel brute-force argmax picker
        for y in 0..h as usize {
            for x in 0..w as usize {
                let mut best: Option<(usize, f64)> = None;
                for k in 0..3 {
                    if *masks[k].mask.get(x, y) {
                        let q = *masks[k].quality.get(x, y);
                        if best.map_or(true, |(_, bq)| q > bq) {
                            best = Some((k, q));
                        }
                    }
                }
                match best {
                    Some((k, _)) => {
                        assert_eq!(
                            merged.rgb.get_pixel(x as u32, y as u32).0,
                            texs[k].rgb.get_pixel(x as u32, y as u32).0
                        );
                        assert!(*merged.coverage.get(x, y));
                    }
                    None => assert!(!*merged.coverage.get(x, y)),
                }
            }
        }
    }

    #[test]
    fn partition_is_disjoint_and_covers_the_union() {
        let (_, m1) = view(8, 8, &[(0, 0, [0; 3], 0.3), (1, 1, [0; 3], 0.9), (2, 2, [0; 3], 0.5)]);
        let (_, m2) = view(8, 8, &[(1, 1, [0; 3], 0.4), (3, 3, [0; 3], 0.2), (2, 2, [0; 3], 0.5)]);
        let masks = [m1, m2];
        let parts = partition_masks(&masks);
        let mut assigned = 0usize;
        let mut union = 0usize;
        for y in 0..8 {
            for x in 0..8 {
                let n: usize = parts.iter().map(|p| *p.get(x, y) as usize).sum();
                assert!(n <= 1, "texel ({x},{y}) assigned {n} times");
                assigned += n;
                if masks.iter().any(|m| *m.mask.get(x, y)) {
                    union += 1;
                }
            }
        }
        assert_eq!(assigned, union);
    }
}
