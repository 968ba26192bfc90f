//! Scene reassembly at recorded world centers, export and the critique-
//! driven refinement loop.

pub mod export;

use std::collections::BTreeMap;

use crate::design::{critique_scene, AssetSnapshot, DesignBrief, DesignerConfig, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{AssetMesh, ScenePlan};
use crate::layout::AssetId;
use crate::math::{Aabb3, Vec3};
use crate::num::{cast, Real};
use crate::render::camera::{make_camera_rig, CameraView};
use crate::render::raster::{rasterize, Shading};
use crate::texturing::{texture_asset, TextureStageConfig, TexturedAsset};

pub use export::{export_scene, ExportBundle};

/// Assembled scene: the plan, one textured atlas per asset (ground
/// included) and per-asset generation provenance. Transforms are pure
/// translations by each mesh's recorded `center_world`.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneManifest<S> {
    pub plan: ScenePlan<S>,
    pub textured: BTreeMap<AssetId, TexturedAsset<S>>,
    pub bounds: Aabb3<S>,
    pub refine_round: u32,
}

impl<S: Real> SceneManifest<S> {
    pub fn translation(&self, id: &AssetId) -> Option<Vec3<S>> {
        self.plan.mesh(id).map(|m| m.center_world)
    }
}

/// Pair every plan asset with its texture and compute the scene bounds from
/// the translated meshes. Missing textures abort with the offending ids.
pub fn reassemble<S: Real>(
    plan: &ScenePlan<S>,
    textured: BTreeMap<AssetId, TexturedAsset<S>>,
) -> Result<SceneManifest<S>> {
    let missing: Vec<String> = plan
        .all_meshes()
        .filter(|m| !textured.contains_key(&m.id))
        .map(|m| m.id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteScene(missing));
    }
    let mut bounds: Option<Aabb3<S>> = None;
    for mesh in plan.all_meshes() {
        if let Some(b) = mesh.bbox() {
            let world = b.translated(mesh.center_world);
            bounds = Some(bounds.map_or(world, |acc| acc.union(&world)));
        }
    }
    Ok(SceneManifest {
        plan: plan.clone(),
        textured,
        bounds: bounds.unwrap_or_default(),
        refine_round: 0,
    })
}

/// Elevated three-quarter camera over the whole scene.
pub fn overview_camera<S: Real>(bounds: &Aabb3<S>, size: u32) -> CameraView<S> {
    let center = bounds.center();
    let radius = (bounds.extents().length() * cast(0.5)).max(cast(1.0));
    let distance = radius * cast(2.2);
    let elevation: S = cast(45.0f64.to_radians());
    let azimuth: S = cast(45.0f64.to_radians());
    let eye = center
        + Vec3::new(
            elevation.cos() * azimuth.cos(),
            elevation.cos() * azimuth.sin(),
            elevation.sin(),
        ) * distance;
    CameraView {
        eye,
        target: center,
        up: Vec3::new(S::zero(), S::zero(), S::one()),
        fov_y_deg: cast(50.0),
        near: distance * cast(0.01),
        far: distance * cast(4.0),
        width: size,
        height: size,
    }
}

/// Snapshot one asset from the first rig view with its texture applied.
pub fn asset_snapshot<S: Real>(
    mesh: &AssetMesh<S>,
    textured: &TexturedAsset<S>,
) -> Result<AssetSnapshot> {
    let views = make_camera_rig(mesh, 1)?;
    let fb = rasterize(
        mesh,
        &views[0],
        Shading::Texture { atlas: &textured.atlas, image: &textured.texture.rgb },
    );
    Ok(AssetSnapshot {
        id: mesh.id.clone(),
        image: fb.rgb_image(),
        coverage: textured.coverage_fraction(),
    })
}

#[derive(Clone, Debug)]
pub struct RefineConfig {
    pub max_iters: u32,
    pub critic: DesignerConfig,
    pub texture: TextureStageConfig,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { max_iters: 1, critic: DesignerConfig::default(), texture: TextureStageConfig::default() }
    }
}

/// Critique-and-refine: per round, snapshot every asset, ask the critic,
/// re-texture exactly the flagged assets under their refined prompts with
/// seed = old seed + round. Per-asset failures keep the previous texture.
pub fn refine_loop<S: Real>(
    mut manifest: SceneManifest<S>,
    brief: &DesignBrief,
    cfg: &RefineConfig,
) -> Result<SceneManifest<S>> {
    for round in 1..=cfg.max_iters {
        let mut snapshots = Vec::new();
        for mesh in manifest.plan.all_meshes() {
            let textured = &manifest.textured[&mesh.id];
            snapshots.push(asset_snapshot(mesh, textured)?);
        }
        let report = critique_scene(&snapshots, brief, &cfg.critic)?;
        manifest.refine_round = round;
        if report.all_accepted() {
            break;
        }
        for (id, verdict) in &report.verdicts {
            let Verdict::Refine { new_prompt } = verdict else { continue };
            let Some(mesh) = manifest.plan.mesh(id) else { continue };
            let old_seed = manifest.textured[id].seed;
            let new_seed = old_seed + round as u64;
            match texture_asset(mesh, new_prompt, new_seed, &cfg.texture) {
                Ok(t) => {
                    manifest.textured.insert(id.clone(), t);
                }
                Err(e) => {
                    log::warn!("{id}: refinement failed ({e}); keeping previous texture");
                }
            }
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::assemble_scene_plan;
    use crate::layout::{AssetCategory, Footprint, GeoLayout, LatLon, LayoutElement};
    use crate::math::{Rect, Vec2};

    fn small_plan() -> ScenePlan<f64> {
        let square = |cx: f64, cy: f64| {
            vec![
                Vec2::new(cx - 2.0, cy - 2.0),
                Vec2::new(cx + 2.0, cy - 2.0),
                Vec2::new(cx + 2.0, cy + 2.0),
                Vec2::new(cx - 2.0, cy + 2.0),
            ]
        };
        let elements = vec![
            LayoutElement {
                id: AssetId::new("way/1"),
                category: AssetCategory::Buildings,
                footprint: Footprint::Polygon(square(10.0, 5.0)),
                height_m: 12.0,
                width_m: 0.0,
                tags: BTreeMap::new(),
                holes: Vec::new(),
            },
            LayoutElement {
                id: AssetId::new("way/2"),
                category: AssetCategory::Water,
                footprint: Footprint::Polygon(square(-8.0, -3.0)),
                height_m: 0.0,
                width_m: 0.0,
                tags: BTreeMap::new(),
                holes: Vec::new(),
            },
        ];
        let bounds =
            Rect::from_points(elements.iter().flat_map(|e| e.footprint.points())).unwrap();
        assemble_scene_plan(&GeoLayout {
            origin: LatLon { lat: 0.0, lon: 0.0 },
            elements,
            bounds,
            warnings: Vec::new(),
        })
    }

    fn textured_for(plan: &ScenePlan<f64>) -> BTreeMap<AssetId, TexturedAsset<f64>> {
        let cfg = TextureStageConfig { atlas_resolution: 64, ..Default::default() };
        plan.all_meshes()
            .map(|m| {
                let t = texture_asset(m, &format!("test {}", m.id), 7, &cfg).unwrap();
                (m.id.clone(), t)
            })
            .collect()
    }

    #[test]
    fn reassemble_uses_center_world_as_translation() {
        let plan = small_plan();
        let manifest = reassemble(&plan, textured_for(&plan)).unwrap();
        let t = manifest.translation(&AssetId::new("way/1")).unwrap();
        assert!((t.x - 10.0).abs() < 1e-9);
        assert!((t.y - 5.0).abs() < 1e-9);
        assert!((t.z - 6.0).abs() < 1e-9);
    }

    #[test]
    fn scene_bounds_are_the_union_of_translated_boxes() {
        let plan = small_plan();
        let manifest = reassemble(&plan, textured_for(&plan)).unwrap();
        // ground pads the layout bounds by 5 m
        assert!(manifest.bounds.min.x <= -15.0 + 1e-9);
        assert!(manifest.bounds.max.x >= 17.0 - 1e-9);
        assert!((manifest.bounds.max.z - 12.0).abs() < 1e-9);
    }

    #[test]
    fn missing_texture_is_an_incomplete_scene() {
        let plan = small_plan();
        let mut textured = textured_for(&plan);
        textured.remove(&AssetId::new("way/2"));
        let err = reassemble(&plan, textured).unwrap_err();
        let Error::IncompleteScene(ids) = err else { panic!("wrong error") };
        assert_eq!(ids, vec!["way/2".to_string()]);
    }

    #[test]
    fn refine_zero_iterations_returns_manifest_unchanged() {
        let plan = small_plan();
        let manifest = reassemble(&plan, textured_for(&plan)).unwrap();
        let brief = crate::design::design_scene(
            &crate::design::ScenePrompt::text("t"),
            &plan,
            &DesignerConfig::default(),
        )
        .unwrap();
        let cfg = RefineConfig { max_iters: 0, ..Default::default() };
        let out = refine_loop(manifest.clone(), &brief, &cfg).unwrap();
        assert_eq!(out, manifest);
    }

    #[test]
    fn refine_touches_exactly_the_flagged_asset() {
        let plan = small_plan();
        let mut manifest = reassemble(&plan, textured_for(&plan)).unwrap();
        let brief = crate::design::design_scene(
            &crate::design::ScenePrompt::text("t"),
            &plan,
            &DesignerConfig::default(),
        )
        .unwrap();
        // force the mock critic to flag way/1 by clearing half its coverage
        let flagged = AssetId::new("way/1");
        {
            let t = manifest.textured.get_mut(&flagged).unwrap();
            let total = t.texture.coverage.len();
            for i in 0..total / 2 {
                t.texture.coverage.data_mut()[i] = false;
            }
        }
        let before: BTreeMap<AssetId, TexturedAsset<f64>> = manifest.textured.clone();
        let cfg = RefineConfig {
            max_iters: 1,
            texture: TextureStageConfig { atlas_resolution: 64, ..Default::default() },
            ..Default::default()
        };
        let out = refine_loop(manifest, &brief, &cfg).unwrap();
        assert_eq!(out.refine_round, 1);
        for (id, textured) in &out.textured {
            if *id == flagged {
                assert_ne!(textured.texture, before[id].texture);
                assert_eq!(textured.seed, before[id].seed + 1);
                assert!(textured.prompt.ends_with(crate::design::REFINE_SUFFIX));
            } else {
                assert_eq!(textured, &before[id], "{id} must be untouched");
            }
        }
    }

    #[test]
    fn refine_stops_after_first_clean_round() {
        let plan = small_plan();
        let manifest = reassemble(&plan, textured_for(&plan)).unwrap();
        let brief = crate::design::design_scene(
            &crate::design::ScenePrompt::text("t"),
            &plan,
            &DesignerConfig::default(),
        )
        .unwrap();
        let cfg = RefineConfig { max_iters: 3, ..Default::default() };
        let out = refine_loop(manifest, &brief, &cfg).unwrap();
        assert_eq!(out.refine_round, 1);
    }
}
