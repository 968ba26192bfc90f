//! OBJ/MTL/PNG export with bit-stable formatting, plus the machine-readable
//! scene manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::SceneManifest;
use crate::error::{Error, Result};
use crate::geometry::AssetMesh;
use crate::layout::AssetId;
use crate::num::Real;
use crate::render::uv::UVAtlas;

#[derive(Clone, Debug, PartialEq)]
pub struct ExportBundle {
    pub root: PathBuf,
    /// Relative paths of every written file; the manifest references only
    /// these.
    pub files: Vec<String>,
    pub manifest_file: String,
}

impl ExportBundle {
    pub fn absolute_files(&self) -> impl Iterator<Item = PathBuf> + '_ {
        self.files.iter().map(|f| self.root.join(f))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestDoc {
    pub version: u32,
    pub refine_round: u32,
    pub scene_obj: String,
    pub scene_mtl: String,
    pub assets: Vec<ManifestAsset>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestAsset {
    pub id: String,
    pub category: String,
    pub obj: String,
    pub mtl: String,
    pub texture: String,
    pub prompt: String,
    pub seed: u64,
    pub center: [f64; 3],
}

fn file_stem(id: &AssetId) -> String {
    id.as_str()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn fmt_v<S: Real>(v: S) -> String {
    format!("{:.6}", v.to_f64().unwrap())
}

/// OBJ text for one asset in the world frame (translation baked in).
/// Texture coordinates are written with the conventional bottom-left
/// origin, so `vt` v components are flipped.
fn obj_text<S: Real>(
    mesh: &AssetMesh<S>,
    atlas: &UVAtlas<S>,
    mtl_file: &str,
    material: &str,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mtllib {mtl_file}");
    let _ = writeln!(out, "o {}", file_stem(&mesh.id));
    for v in &mesh.vertices {
        let w = *v + mesh.center_world;
        let _ = writeln!(out, "v {} {} {}", fmt_v(w.x), fmt_v(w.y), fmt_v(w.z));
    }
    for uvs in &atlas.face_uvs {
        for uv in uvs {
            let _ = writeln!(out, "vt {} {}", fmt_v(uv.x), fmt_v(S::one() - uv.y));
        }
    }
    let _ = writeln!(out, "usemtl {material}");
    for (f, face) in mesh.faces.iter().enumerate() {
        let vt0 = 3 * f + 1;
        let _ = writeln!(
            out,
            "f {}/{} {}/{} {}/{}",
            face[0] + 1,
            vt0,
            face[1] + 1,
            vt0 + 1,
            face[2] + 1,
            vt0 + 2
        );
    }
    out
}

fn mtl_text(material: &str, texture_file: &str) -> String {
    format!(
        "newmtl {material}\nKa 1.000000 1.000000 1.000000\nKd 1.000000 1.000000 1.000000\n\
         illum 1\nmap_Kd {texture_file}\n"
    )
}

/// Write one OBJ+MTL+PNG triple per asset, a merged scene OBJ and the
/// manifest document. Writing twice produces byte-identical files.
pub fn export_scene<S: Real>(
    manifest: &SceneManifest<S>,
    out_dir: &Path,
) -> Result<ExportBundle> {
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut assets_doc = Vec::new();

    let mut scene_obj = String::from("mtllib scene.mtl\n");
    let mut scene_mtl = String::new();
    let mut v_offset = 1usize;
    let mut vt_offset = 1usize;

    for (id, textured) in &manifest.textured {
        let mesh = manifest
            .plan
            .mesh(id)
            .ok_or_else(|| Error::IncompleteScene(vec![id.to_string()]))?;
        let stem = file_stem(id);
        let obj_file = format!("{stem}.obj");
        let mtl_file = format!("{stem}.mtl");
        let tex_file = format!("{stem}.png");

        fs::write(
            out_dir.join(&obj_file),
            obj_text(mesh, &textured.atlas, &mtl_file, &stem),
        )?;
        fs::write(out_dir.join(&mtl_file), mtl_text(&stem, &tex_file))?;
        textured
            .texture
            .rgb
            .save_with_format(out_dir.join(&tex_file), image::ImageFormat::Png)?;

        // merged scene: same geometry with shared index space
        let _ = writeln!(scene_obj, "o {stem}");
        for v in &mesh.vertices {
            let w = *v + mesh.center_world;
            let _ = writeln!(scene_obj, "v {} {} {}", fmt_v(w.x), fmt_v(w.y), fmt_v(w.z));
        }
        for uvs in &textured.atlas.face_uvs {
            for uv in uvs {
                let _ = writeln!(scene_obj, "vt {} {}", fmt_v(uv.x), fmt_v(S::one() - uv.y));
            }
        }
        let _ = writeln!(scene_obj, "usemtl {stem}");
        for (f, face) in mesh.faces.iter().enumerate() {
            let vt0 = vt_offset + 3 * f;
            let _ = writeln!(
                scene_obj,
                "f {}/{} {}/{} {}/{}",
                v_offset + face[0] as usize,
                vt0,
                v_offset + face[1] as usize,
                vt0 + 1,
                v_offset + face[2] as usize,
                vt0 + 2
            );
        }
        v_offset += mesh.vertices.len();
        vt_offset += 3 * mesh.faces.len();
        scene_mtl.push_str(&mtl_text(&stem, &tex_file));

        assets_doc.push(ManifestAsset {
            id: id.to_string(),
            category: mesh.category.label().to_string(),
            obj: obj_file.clone(),
            mtl: mtl_file.clone(),
            texture: tex_file.clone(),
            prompt: textured.prompt.clone(),
            seed: textured.seed,
            center: [
                mesh.center_world.x.to_f64().unwrap(),
                mesh.center_world.y.to_f64().unwrap(),
                mesh.center_world.z.to_f64().unwrap(),
            ],
        });
        files.push(obj_file);
        files.push(mtl_file);
        files.push(tex_file);
    }

    fs::write(out_dir.join("scene.obj"), &scene_obj)?;
    fs::write(out_dir.join("scene.mtl"), &scene_mtl)?;
    files.push("scene.obj".into());
    files.push("scene.mtl".into());

    let doc = ManifestDoc {
        version: 1,
        refine_round: manifest.refine_round,
        scene_obj: "scene.obj".into(),
        scene_mtl: "scene.mtl".into(),
        assets: assets_doc,
    };
    let manifest_file = "manifest.toml".to_string();
    let toml_text = toml::to_string_pretty(&doc)
        .map_err(|e| Error::Config { key: "manifest".into(), reason: e.to_string() })?;
    fs::write(out_dir.join(&manifest_file), toml_text)?;
    files.push(manifest_file.clone());

    Ok(ExportBundle { root: out_dir.to_path_buf(), files, manifest_file })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_stems_are_filesystem_safe() {
        assert_eq!(file_stem(&AssetId::new("way/123")), "way_123");
        assert_eq!(file_stem(&AssetId::new("raster/water/0")), "raster_water_0");
        assert_eq!(file_stem(&AssetId::new("ground")), "ground");
    }

    #[test]
    fn float_formatting_is_six_decimals() {
        assert_eq!(fmt_v(1.0f64), "1.000000");
        assert_eq!(fmt_v(-0.125f64), "-0.125000");
        assert_eq!(fmt_v(10.123456789f64), "10.123457");
    }
}
