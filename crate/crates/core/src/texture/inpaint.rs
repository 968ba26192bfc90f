//! Geometric UV inpainting: uncovered texels take the inverse-distance
//! weighted average of their K nearest covered texels in 3D position space.

use crate::error::{Error, Result};
use crate::num::Real;
use crate::texture::{UVPositionMap, UVTexture, INPAINT_K};

/// Fill every valid-but-uncovered texel from its K=4 nearest covered texels
/// (exact nearest neighbors, inverse-square-distance weights). Covered
/// texels pass through unchanged; output coverage equals `pos.valid`.
pub fn inpaint_uv<S: Real>(tex: &UVTexture, pos: &UVPositionMap<S>) -> Result<UVTexture> {
    let (w, h) = (tex.width() as usize, tex.height() as usize);
    if pos.valid.width() != w || pos.valid.height() != h {
        return Err(Error::Shape(format!(
            "texture {w}x{h} vs position map {}x{}",
            pos.valid.width(),
            pos.valid.height()
        )));
    }
    debug_assert!(
        tex.coverage
            .data()
            .iter()
            .zip(pos.valid.data())
            .all(|(&covered, &valid)| !covered || valid),
        "coverage must be a subset of the valid set"
    );

    let mut sources: Vec<(usize, [f64; 3])> = Vec::new();
    for i in 0..w * h {
        if tex.coverage.data()[i] {
            let p = pos.positions.data()[i];
            sources.push((i, [
                p[0].to_f64().unwrap(),
                p[1].to_f64().unwrap(),
                p[2].to_f64().unwrap(),
            ]));
        }
    }
    if sources.is_empty() {
        return Err(Error::NoSourceTexels);
    }

    let mut out = tex.clone();
    out.coverage = pos.valid.clone();

    let grid = SourceGrid::build(&sources);
    let mut neighbors = Vec::with_capacity(64);
    for i in 0..w * h {
        if tex.coverage.data()[i] || !pos.valid.data()[i] {
            continue;
        }
        let p = pos.positions.data()[i];
        let q = [
            p[0].to_f64().unwrap(),
            p[1].to_f64().unwrap(),
            p[2].to_f64().unwrap(),
        ];
        grid.k_nearest(&sources, q, INPAINT_K, &mut neighbors);
        let color = blend(&sources, tex, w, &neighbors);
        out.rgb.put_pixel((i % w) as u32, (i / w) as u32, image::Rgb(color));
    }
    Ok(out)
}

fn blend(
    sources: &[(usize, [f64; 3])],
    tex: &UVTexture,
    width: usize,
    neighbors: &[(f64, usize)],
) -> [u8; 3] {
    let texel_color = |src: usize| -> [u8; 3] {
        let idx = sources[src].0;
        tex.rgb.get_pixel((idx % width) as u32, (idx / width) as u32).0
    };
    // a coincident source wins outright
    if let Some(&(d2, src)) = neighbors.first() {
        if d2 < 1e-24 {
            return texel_color(src);
        }
    }
    let mut wsum = 0.0;
    let mut acc = [0.0f64; 3];
    for &(d2, src) in neighbors {
        let w = 1.0 / d2;
        let c = texel_color(src);
        for k in 0..3 {
            acc[k] += w * c[k] as f64;
        }
        wsum += w;
    }
    let mut out = [0u8; 3];
    for k in 0..3 {
        out[k] = (acc[k] / wsum).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Uniform hash grid over the unit cube for exact K-nearest-neighbor
/// queries via expanding Chebyshev shells.
struct SourceGrid {
    cells: Vec<Vec<u32>>,
    n: usize, // cells per axis
}

impl SourceGrid {
    fn build(sources: &[(usize, [f64; 3])]) -> Self {
        let n = ((sources.len() as f64 / 2.0).cbrt().ceil() as usize).clamp(1, 64);
        let mut cells = vec![Vec::new(); n * n * n];
        for (s, (_, p)) in sources.iter().enumerate() {
            cells[Self::cell_index(n, *p)].push(s as u32);
        }
        Self { cells, n }
    }

    fn axis_cell(n: usize, v: f64) -> usize {
        ((v * n as f64) as isize).clamp(0, n as isize - 1) as usize
    }

    fn cell_index(n: usize, p: [f64; 3]) -> usize {
        let (cx, cy, cz) =
            (Self::axis_cell(n, p[0]), Self::axis_cell(n, p[1]), Self::axis_cell(n, p[2]));
        (cz * n + cy) * n + cx
    }

    /// Exact K nearest sources to `q`, sorted by (distance, source index).
    fn k_nearest(
        &self,
        sources: &[(usize, [f64; 3])],
        q: [f64; 3],
        k: usize,
        out: &mut Vec<(f64, usize)>,
    ) {
        out.clear();
        let n = self.n;
        let cell_size = 1.0 / n as f64;
        let (qx, qy, qz) =
            (Self::axis_cell(n, q[0]), Self::axis_cell(n, q[1]), Self::axis_cell(n, q[2]));
        let dist2 = |p: [f64; 3]| -> f64 {
            let dx = p[0] - q[0];
            let dy = p[1] - q[1];
            let dz = p[2] - q[2];
            dx * dx + dy * dy + dz * dz
        };
        for radius in 0..=n {
            let x0 = qx.saturating_sub(radius);
            let x1 = (qx + radius).min(n - 1);
            let y0 = qy.saturating_sub(radius);
            let y1 = (qy + radius).min(n - 1);
            let z0 = qz.saturating_sub(radius);
            let z1 = (qz + radius).min(n - 1);
            for cz in z0..=z1 {
                for cy in y0..=y1 {
                    for cx in x0..=x1 {
                        // only the new shell
                        let on_shell = cx.abs_diff(qx) == radius
                            || cy.abs_diff(qy) == radius
                            || cz.abs_diff(qz) == radius;
                        if !on_shell {
                            continue;
                        }
                        for &s in &self.cells[(cz * n + cy) * n + cx] {
                            out.push((dist2(sources[s as usize].1), s as usize));
                        }
                    }
                }
            }
            if out.len() >= k {
                out.sort_by(|a, b| {
                    a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
                });
                // points beyond this shell sit at least radius*cell_size away
                let safe = (radius as f64 * cell_size).powi(2);
                if out[k - 1].0 <= safe {
                    break;
                }
            }
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        out.truncate(k);
    }
}
