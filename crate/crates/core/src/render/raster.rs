//! Software pinhole rasterizer: perspective projection, z-buffer with a
//! deterministic top-left fill rule, RGB/depth/semantic/face-id targets.

use image::{GrayImage, RgbImage};

use crate::geometry::AssetMesh;
use crate::grid::Grid;
use crate::layout::AssetCategory;
use crate::math::{Vec2, Vec3};
use crate::num::{cast, Real};
use crate::render::camera::{CameraView, Projector};
use crate::render::uv::UVAtlas;

pub const BACKGROUND_SEMANTIC: u8 = 255;
pub const NO_FACE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameBuffer<S> {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<[u8; 3]>,
    /// View-space distance along the camera forward axis; +inf background.
    pub depth: Vec<S>,
    pub semantic: Vec<u8>,
    pub face_id: Vec<u32>,
}

impl<S: Real> FrameBuffer<S> {
    pub fn new(width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        Self {
            width,
            height,
            rgb: vec![[0, 0, 0]; n],
            depth: vec![S::infinity(); n],
            semantic: vec![BACKGROUND_SEMANTIC; n],
            face_id: vec![NO_FACE; n],
        }
    }

    #[inline]
    pub fn idx(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn rgb_image(&self) -> RgbImage {
        let mut img = RgbImage::new(self.width, self.height);
        for (i, px) in self.rgb.iter().enumerate() {
            img.put_pixel(i as u32 % self.width, i as u32 / self.width, image::Rgb(*px));
        }
        img
    }

    pub fn semantic_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width, self.height, self.semantic.clone()).unwrap()
    }

    /// Fraction of texels with finite depth.
    pub fn foreground_fraction(&self) -> f64 {
        let fg = self.depth.iter().filter(|d| d.is_finite()).count();
        fg as f64 / self.depth.len().max(1) as f64
    }

    pub fn depth_grid(&self) -> Grid<S> {
        Grid::from_vec(self.width as usize, self.height as usize, self.depth.clone())
    }
}

/// Normalized depth for generator conditioning: foreground min-max mapped to
/// [0,1], background fixed at 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage<S> {
    pub values: Grid<S>,
    pub near_used: S,
    pub far_used: S,
}

impl<S: Real> DepthImage<S> {
    pub fn to_gray_image(&self) -> GrayImage {
        let (w, h) = (self.values.width() as u32, self.values.height() as u32);
        let mut img = GrayImage::new(w, h);
        for (x, y, v) in self.values.iter_cells() {
            let byte = (v.to_f64().unwrap().clamp(0.0, 1.0) * 255.0).round() as u8;
            img.put_pixel(x as u32, y as u32, image::Luma([byte]));
        }
        img
    }
}

/// Per-frame min-max normalization over finite texels; a constant-depth
/// foreground maps to 0 and pure background frames are all 1.
pub fn normalize_depth<S: Real>(fb: &FrameBuffer<S>) -> DepthImage<S> {
    let mut min = S::infinity();
    let mut max = S::neg_infinity();
    for &d in &fb.depth {
        if d.is_finite() {
            min = min.min(d);
            max = max.max(d);
        }
    }
    let (w, h) = (fb.width as usize, fb.height as usize);
    if !min.is_finite() {
        return DepthImage {
            values: Grid::new(w, h, S::one()),
            near_used: S::zero(),
            far_used: S::zero(),
        };
    }
    let range = max - min;
    let values = Grid::from_vec(
        w,
        h,
        fb.depth
            .iter()
            .map(|&d| {
                if !d.is_finite() {
                    S::one()
                } else if range > S::zero() {
                    ((d - min) / range).max(S::zero()).min(S::one())
                } else {
                    S::zero()
                }
            })
            .collect(),
    );
    DepthImage { values, near_used: min, far_used: max }
}

/// Flat-color palette used for semantic snapshots and untextured renders.
pub fn category_color(category: AssetCategory) -> [u8; 3] {
    match category {
        AssetCategory::Buildings => [176, 166, 152],
        AssetCategory::RoadsPaths => [90, 90, 94],
        AssetCategory::ForestVegetation => [88, 140, 72],
        AssetCategory::Water => [70, 112, 165],
        AssetCategory::Ground => [150, 138, 120],
    }
}

#[derive(Clone, Copy)]
pub enum Shading<'a, S> {
    /// Single albedo for the whole mesh.
    Flat([u8; 3]),
    /// The mesh category's palette color.
    CategoryColor,
    /// Nearest-texel albedo lookup through the mesh's UV atlas.
    Texture { atlas: &'a UVAtlas<S>, image: &'a RgbImage },
}

pub struct SceneItem<'a, S> {
    pub mesh: &'a AssetMesh<S>,
    pub translation: Vec3<S>,
    pub shading: Shading<'a, S>,
}

/// Rasterize one asset-local mesh. Depth ties resolve to the lower face
/// index; back-face culling is off.
pub fn rasterize<S: Real>(
    mesh: &AssetMesh<S>,
    view: &CameraView<S>,
    shading: Shading<'_, S>,
) -> FrameBuffer<S> {
    let mut fb = FrameBuffer::new(view.width, view.height);
    let projector = Projector::new(view);
    draw_mesh(&mut fb, &projector, mesh, Vec3::zero(), shading, 0);
    fb
}

/// Rasterize several world-placed meshes into one frame buffer.
pub fn render_scene<S: Real>(items: &[SceneItem<'_, S>], view: &CameraView<S>) -> FrameBuffer<S> {
    let mut fb = FrameBuffer::new(view.width, view.height);
    let projector = Projector::new(view);
    let mut face_base = 0u32;
    for item in items {
        draw_mesh(&mut fb, &projector, item.mesh, item.translation, item.shading, face_base);
        face_base += item.mesh.faces.len() as u32;
    }
    fb
}

#[derive(Clone, Copy)]
struct ClipVertex<S> {
    view: Vec3<S>,
    uv: Vec2<S>,
}

fn draw_mesh<S: Real>(
    fb: &mut FrameBuffer<S>,
    projector: &Projector<S>,
    mesh: &AssetMesh<S>,
    translation: Vec3<S>,
    shading: Shading<'_, S>,
    face_base: u32,
) {
    let semantic = mesh.category.semantic_id();
    for (f, face) in mesh.faces.iter().enumerate() {
        let uvs = match shading {
            Shading::Texture { atlas, .. } => atlas.face_uvs[f],
            _ => [Vec2::zero(); 3],
        };
        let verts = [0, 1, 2].map(|k| ClipVertex {
            view: projector.world_to_view(mesh.vertices[face[k] as usize] + translation),
            uv: uvs[k],
        });
        let clipped = clip_near(&verts, projector.near);
        if clipped.len() < 3 {
            continue;
        }
        for i in 1..clipped.len() - 1 {
            fill_triangle(
                fb,
                projector,
                [clipped[0], clipped[i], clipped[i + 1]],
                shading,
                semantic,
                face_base + f as u32,
            );
        }
    }
}

/// Sutherland-Hodgman clip of a view-space triangle against the near plane.
fn clip_near<S: Real>(verts: &[ClipVertex<S>; 3], near: S) -> Vec<ClipVertex<S>> {
    let mut out: Vec<ClipVertex<S>> = Vec::with_capacity(4);
    for i in 0..3 {
        let a = verts[i];
        let b = verts[(i + 1) % 3];
        let a_in = a.view.z >= near;
        let b_in = b.view.z >= near;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (near - a.view.z) / (b.view.z - a.view.z);
            out.push(ClipVertex {
                view: a.view + (b.view - a.view) * t,
                uv: a.uv + (b.uv - a.uv) * t,
            });
        }
    }
    out
}

/// Signed edge function evaluated with a canonical operand order, so the two
/// triangles sharing an edge see exactly opposite values at every pixel
/// (bit-exact, which is what makes shared edges watertight).
#[inline]
fn edge_canonical<S: Real>(a: Vec2<S>, b: Vec2<S>, p: Vec2<S>) -> S {
    let swap = match a.x.partial_cmp(&b.x) {
        Some(std::cmp::Ordering::Less) => false,
        Some(std::cmp::Ordering::Greater) => true,
        _ => a.y > b.y,
    };
    if swap {
        -((a - b).cross(p - b))
    } else {
        (b - a).cross(p - a)
    }
}

/// Tie rule for pixels exactly on an edge; satisfies `rule(d) != rule(-d)`.
#[inline]
fn top_left_rule<S: Real>(d: Vec2<S>) -> bool {
    d.y > S::zero() || (d.y == S::zero() && d.x < S::zero())
}

fn fill_triangle<S: Real>(
    fb: &mut FrameBuffer<S>,
    projector: &Projector<S>,
    tri: [ClipVertex<S>; 3],
    shading: Shading<'_, S>,
    semantic: u8,
    face_id: u32,
) {
    let screen = tri.map(|v| projector.view_to_screen(v.view));
    let depths = tri.map(|v| v.view.z);

    let area2 = (screen[1] - screen[0]).cross(screen[2] - screen[0]);
    if area2 == S::zero() {
        return;
    }
    let flip = area2 < S::zero();

    let min_x = screen.iter().map(|p| p.x).fold(S::infinity(), S::min);
    let max_x = screen.iter().map(|p| p.x).fold(S::neg_infinity(), S::max);
    let min_y = screen.iter().map(|p| p.y).fold(S::infinity(), S::min);
    let max_y = screen.iter().map(|p| p.y).fold(S::neg_infinity(), S::max);
    let x0 = min_x.to_f64().unwrap().floor().max(0.0) as u32;
    let y0 = min_y.to_f64().unwrap().floor().max(0.0) as u32;
    let x1 = (max_x.to_f64().unwrap().ceil() as i64).min(fb.width as i64 - 1);
    let y1 = (max_y.to_f64().unwrap().ceil() as i64).min(fb.height as i64 - 1);
    if x1 < x0 as i64 || y1 < y0 as i64 {
        return;
    }

    let inv_depth = depths.map(|d| S::one() / d);
    let half: S = cast(0.5);
    for py in y0..=y1 as u32 {
        for px in x0..=x1 as u32 {
            let p = Vec2::new(cast::<S>(px as f64) + half, cast::<S>(py as f64) + half);
            let mut w = [
                edge_canonical(screen[1], screen[2], p),
                edge_canonical(screen[2], screen[0], p),
                edge_canonical(screen[0], screen[1], p),
            ];
            if flip {
                for wi in &mut w {
                    *wi = -*wi;
                }
            }
            let mut inside = true;
            for (k, &wi) in w.iter().enumerate() {
                if wi > S::zero() {
                    continue;
                }
                if wi < S::zero() {
                    inside = false;
                    break;
                }
                let (ea, eb) = match k {
                    0 => (screen[1], screen[2]),
                    1 => (screen[2], screen[0]),
                    _ => (screen[0], screen[1]),
                };
                let d = if flip { ea - eb } else { eb - ea };
                if !top_left_rule(d) {
                    inside = false;
                    break;
                }
            }
            if !inside {
                continue;
            }
            let wsum = w[0] + w[1] + w[2];
            if wsum == S::zero() {
                continue;
            }
            let lambda = [w[0] / wsum, w[1] / wsum, w[2] / wsum];
            let inv_d =
                lambda[0] * inv_depth[0] + lambda[1] * inv_depth[1] + lambda[2] * inv_depth[2];
            if inv_d <= S::zero() {
                continue;
            }
            let depth = S::one() / inv_d;
            let idx = fb.idx(px, py);
            if depth < fb.depth[idx] {
                fb.depth[idx] = depth;
                fb.semantic[idx] = semantic;
                fb.face_id[idx] = face_id;
                fb.rgb[idx] = match shading {
                    Shading::Flat(c) => c,
                    Shading::CategoryColor => category_color(match semantic {
                        0 => AssetCategory::Buildings,
                        1 => AssetCategory::RoadsPaths,
                        2 => AssetCategory::ForestVegetation,
                        3 => AssetCategory::Water,
                        _ => AssetCategory::Ground,
                    }),
                    Shading::Texture { atlas: _, image } => {
                        let u = (lambda[0] * tri[0].uv.x * inv_depth[0]
                            + lambda[1] * tri[1].uv.x * inv_depth[1]
                            + lambda[2] * tri[2].uv.x * inv_depth[2])
                            * depth;
                        let v = (lambda[0] * tri[0].uv.y * inv_depth[0]
                            + lambda[1] * tri[1].uv.y * inv_depth[1]
                            + lambda[2] * tri[2].uv.y * inv_depth[2])
                            * depth;
                        sample_nearest(image, u, v)
                    }
                };
            }
        }
    }
}

fn sample_nearest<S: Real>(image: &RgbImage, u: S, v: S) -> [u8; 3] {
    let (w, h) = (image.width() as i64, image.height() as i64);
    let tx = (u.to_f64().unwrap() * w as f64).floor() as i64;
    let ty = (v.to_f64().unwrap() * h as f64).floor() as i64;
    let tx = tx.clamp(0, w - 1) as u32;
    let ty = ty.clamp(0, h - 1) as u32;
    image.get_pixel(tx, ty).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AssetMesh;
    use crate::layout::{AssetCategory, AssetId};

    fn camera(eye: Vec3<f64>, size: u32) -> CameraView<f64> {
        CameraView {
            eye,
            target: Vec3::zero(),
            up: Vec3::new(0.0, 1.0, 0.0),
            fov_y_deg: 50.0,
            near: 0.1,
            far: 100.0,
            width: size,
            height: size,
        }
    }

    fn unit_cube() -> AssetMesh<f64> {
        let h = 0.5;
        let vertices = vec![
            Vec3::new(-h, -h, -h),
            Vec3::new(h, -h, -h),
            Vec3::new(h, h, -h),
            Vec3::new(-h, h, -h),
            Vec3::new(-h, -h, h),
            Vec3::new(h, -h, h),
            Vec3::new(h, h, h),
            Vec3::new(-h, h, h),
        ];
        let faces = vec![
            [0, 2, 1],
            [0, 3, 2], // -z
            [4, 5, 6],
            [4, 6, 7], // +z
            [0, 1, 5],
            [0, 5, 4], // -y
            [2, 3, 7],
            [2, 7, 6], // +y
            [0, 4, 7],
            [0, 7, 3], // -x
            [1, 2, 6],
            [1, 6, 5], // +x
        ];
        AssetMesh::new(AssetId::new("cube"), AssetCategory::Buildings, vertices, faces)
    }

    #[test]
    fn cube_center_pixel_depth_is_four_and_a_half() {
        let mesh = unit_cube();
        let view = camera(Vec3::new(0.0, 0.0, 5.0), 128);
        let fb = rasterize(&mesh, &view, Shading::CategoryColor);
        let idx = fb.idx(64, 64);
        assert!((fb.depth[idx] - 4.5).abs() < 1e-3, "depth = {}", fb.depth[idx]);
        assert_eq!(fb.semantic[idx], AssetCategory::Buildings.semantic_id());
        assert_ne!(fb.face_id[idx], NO_FACE);
    }

    #[test]
    fn empty_mesh_renders_background_only() {
        let empty = AssetMesh::<f64>::new(
            AssetId::new("x"),
            AssetCategory::Water,
            vec![],
            vec![],
        );
        let fb = rasterize(&empty, &camera(Vec3::new(0.0, 0.0, 3.0), 32), Shading::CategoryColor);
        assert!(fb.depth.iter().all(|d| d.is_infinite()));
        assert!(fb.semantic.iter().all(|&s| s == BACKGROUND_SEMANTIC));
        assert!(fb.face_id.iter().all(|&f| f == NO_FACE));
    }

    #[test]
    fn nearer_coplanar_quad_wins_the_z_test() {
        // two parallel quads facing +z; the nearer one is red
        let quad = |z: f64, base: u32| -> (Vec<Vec3<f64>>, Vec<[u32; 3]>) {
            (
                vec![
                    Vec3::new(-1.0, -1.0, z),
                    Vec3::new(1.0, -1.0, z),
                    Vec3::new(1.0, 1.0, z),
                    Vec3::new(-1.0, 1.0, z),
                ],
                vec![[base, base + 1, base + 2], [base, base + 2, base + 3]],
            )
        };
        let (mut verts, mut faces) = quad(0.5, 0);
        let (v2, f2) = quad(-0.5, 4);
        verts.extend(v2);
        faces.extend(f2);
        let far_mesh = AssetMesh::new(
            AssetId::new("far"),
            AssetCategory::Buildings,
            verts[4..].to_vec(),
            vec![[0, 1, 2], [0, 2, 3]],
        );
        let near_mesh = AssetMesh::new(
            AssetId::new("near"),
            AssetCategory::Buildings,
            verts[..4].to_vec(),
            vec![[0, 1, 2], [0, 2, 3]],
        );
        let view = camera(Vec3::new(0.0, 0.0, 5.0), 64);
        let fb = render_scene(
            &[
                SceneItem {
                    mesh: &far_mesh,
                    translation: Vec3::zero(),
                    shading: Shading::Flat([0, 0, 255]),
                },
                SceneItem {
                    mesh: &near_mesh,
                    translation: Vec3::zero(),
                    shading: Shading::Flat([255, 0, 0]),
                },
            ],
            &view,
        );
        let idx = fb.idx(32, 32);
        assert_eq!(fb.rgb[idx], [255, 0, 0]);
        assert_eq!(fb.face_id[idx], 2); // first face of the near mesh
    }

    #[test]
    fn depth_ties_resolve_to_lower_face_index() {
        // identical coplanar triangles; the first one drawn must keep the pixel
        let verts = vec![
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let mesh = AssetMesh::new(
            AssetId::new("dup"),
            AssetCategory::Water,
            verts,
            vec![[0, 1, 2], [0, 1, 2]],
        );
        let fb = rasterize(&mesh, &camera(Vec3::new(0.0, 0.0, 4.0), 64), Shading::CategoryColor);
        for &f in fb.face_id.iter().filter(|&&f| f != NO_FACE) {
            assert_eq!(f, 0);
        }
    }

    #[test]
    fn normalize_depth_two_values() {
        let mut fb = FrameBuffer::<f64>::new(2, 1);
        fb.depth[0] = 2.0;
        fb.depth[1] = 4.0;
        let d = normalize_depth(&fb);
        assert_eq!(*d.values.get(0, 0), 0.0);
        assert_eq!(*d.values.get(1, 0), 1.0);
        assert_eq!(d.near_used, 2.0);
        assert_eq!(d.far_used, 4.0);
    }

    #[test]
    fn normalize_depth_constant_foreground_maps_to_zero() {
        let mut fb = FrameBuffer::<f64>::new(2, 1);
        fb.depth[0] = 3.0;
        let d = normalize_depth(&fb);
        assert_eq!(*d.values.get(0, 0), 0.0);
        assert_eq!(*d.values.get(1, 0), 1.0); // background stays 1
    }

    #[test]
    fn normalize_depth_all_background() {
        let fb = FrameBuffer::<f64>::new(3, 3);
        let d = normalize_depth(&fb);
        assert!(d.values.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn semantic_face_and_depth_sentinels_are_consistent() {
        let mesh = unit_cube();
        let fb = rasterize(&mesh, &camera(Vec3::new(0.0, 0.0, 4.0), 96), Shading::CategoryColor);
        for i in 0..fb.depth.len() {
            let fg = fb.depth[i].is_finite();
            assert_eq!(fg, fb.face_id[i] != NO_FACE);
            assert_eq!(fg, fb.semantic[i] != BACKGROUND_SEMANTIC);
        }
        assert!(fb.foreground_fraction() > 0.05);
    }
}
