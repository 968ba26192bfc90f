//! Stage orchestration over on-disk artifacts: ingest, design, texture,
//! assemble (with refinement), navigate and evaluate. Every stage consumes
//! and produces files; re-running with unchanged inputs is a no-op keyed by
//! content hash.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembly::{
    export_scene, overview_camera, refine_loop, reassemble, ExportBundle, RefineConfig,
    SceneManifest,
};
use crate::config::{InputSource, RunConfig};
use crate::design::{design_scene, DesignBrief, DesignerConfig, ScenePrompt};
use crate::embodied::{
    plan_rrt, record_trajectory, trajectory_poses, voxelize, CameraIntrinsics, NavPlan,
    OccupancyGrid, RrtParams,
};
use crate::error::{Error, Result};
use crate::gateway::procedural::fnv1a64;
use crate::gateway::{GeneratorEndpoint, GeneratorMode};
use crate::geometry::assemble_scene_plan;
use crate::grid::Grid;
use crate::imageio;
use crate::layout::AssetId;
use crate::metrics::{
    depth_error, fid, homogeneity_of_features, kid, preference_score, FeatureExtractor,
    FeatureVector, Hist32, MetricReport,
};
use crate::num::cast;
use crate::render::camera::{CameraView, RIG_ELEVATION_DEG};
use crate::render::raster::{normalize_depth, render_scene, SceneItem, Shading};
use crate::texture::{build_position_map, UVTexture};
use crate::texturing::{texture_asset, TextureStageConfig, TexturedAsset};
use crate::{GeoLayout, Scalar, ScenePlan, Vec3};

/// Timed stage log accumulated into `<out_dir>/run.log`.
pub struct RunLog {
    lines: Vec<String>,
    path: PathBuf,
}

impl RunLog {
    pub fn new(cfg: &RunConfig) -> Self {
        let origin = if cfg.seed_generated { "generated" } else { "from-config" };
        Self {
            lines: vec![format!("seed={} ({origin})", cfg.seed)],
            path: cfg.out_dir.join("run.log"),
        }
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let result = f();
        let ms = t0.elapsed().as_millis();
        match &result {
            Ok(_) => self.lines.push(format!("stage={name} ms={ms} ok")),
            Err(e) => self.lines.push(format!("stage={name} ms={ms} error={e}")),
        }
        result
    }

    pub fn finish(&mut self, status: &str) {
        self.lines.push(format!("status={status}"));
        if let Some(parent) = self.path.parent() {
            let _ = std::fs::create_dir_all(parent);
        }
        let _ = std::fs::write(&self.path, self.lines.join("\n") + "\n");
    }
}

fn sha_hex(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_le_bytes());
        hasher.update(p);
    }
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Skip `produce` when the stage hash matches and all artifacts exist.
fn cached_stage(
    out_dir: &Path,
    name: &str,
    input_hash: &str,
    artifacts: &[PathBuf],
    produce: impl FnOnce() -> Result<()>,
) -> Result<bool> {
    let hash_dir = out_dir.join(".hashes");
    let hash_file = hash_dir.join(format!("{name}.hash"));
    let fresh = std::fs::read_to_string(&hash_file)
        .map(|h| h.trim() == input_hash)
        .unwrap_or(false);
    if fresh && artifacts.iter().all(|a| a.exists()) {
        log::info!("stage {name}: inputs unchanged, reusing artifacts");
        return Ok(true);
    }
    // stale marker first, so an interrupted stage is never trusted
    let _ = std::fs::remove_file(&hash_file);
    produce()?;
    std::fs::create_dir_all(&hash_dir)?;
    std::fs::write(&hash_file, input_hash)?;
    Ok(false)
}

fn designer_config(cfg: &RunConfig) -> DesignerConfig {
    DesignerConfig {
        endpoint: cfg.designer.clone(),
        mock: cfg.designer.is_none(),
        timeout_s: cfg.endpoint_timeout_s,
        retries: cfg.endpoint_retries,
        ..DesignerConfig::default()
    }
}

fn endpoint(cfg: &RunConfig, url: &Option<String>) -> GeneratorEndpoint {
    match url {
        Some(u) => GeneratorEndpoint {
            mode: GeneratorMode::Remote { url: u.clone() },
            timeout_s: cfg.endpoint_timeout_s,
            retries: cfg.endpoint_retries,
            max_inflight: 2,
        },
        None => GeneratorEndpoint::default(),
    }
}

fn texture_stage_config(cfg: &RunConfig) -> Result<TextureStageConfig> {
    let reference_image = match &cfg.reference_image {
        Some(path) => Some(imageio::decode_rgb(&std::fs::read(path)?)?),
        None => None,
    };
    Ok(TextureStageConfig {
        n_views: cfg.n_views,
        steps: cfg.steps,
        atlas_resolution: cfg.atlas_resolution,
        generator: endpoint(cfg, &cfg.generator),
        inpainter: endpoint(cfg, &cfg.inpainter),
        upscaler: endpoint(cfg, &cfg.upscaler),
        reference_image,
        strict_endpoints: cfg.strict_endpoints,
    })
}

fn input_digest(cfg: &RunConfig) -> Result<String> {
    match &cfg.input {
        InputSource::Osm(path) => Ok(sha_hex(&[b"osm", &std::fs::read(path)?])),
        InputSource::Raster { semantic, height, cell_size_m, height_scale, class_map } => {
            Ok(sha_hex(&[
                b"raster",
                &std::fs::read(semantic)?,
                &std::fs::read(height)?,
                cell_size_m.to_le_bytes().as_slice(),
                height_scale.to_le_bytes().as_slice(),
                format!("{class_map:?}").as_bytes(),
            ]))
        }
    }
}

fn parse_layout(cfg: &RunConfig) -> Result<GeoLayout> {
    match &cfg.input {
        InputSource::Osm(path) => crate::layout::parse_osm(&std::fs::read(path)?),
        InputSource::Raster { semantic, height, cell_size_m, height_scale, class_map } => {
            let sem_img = imageio::decode_gray(&std::fs::read(semantic)?)?;
            let hgt_img = imageio::decode_gray(&std::fs::read(height)?)?;
            let (w, h) = (sem_img.width() as usize, sem_img.height() as usize);
            let semantic_grid = Grid::from_vec(w, h, sem_img.into_raw());
            let (hw, hh) = (hgt_img.width() as usize, hgt_img.height() as usize);
            let height_grid = Grid::from_vec(hw, hh, hgt_img.into_raw())
                .map(|&b| b as Scalar * height_scale);
            let raster =
                crate::layout::RasterLayout::new(semantic_grid, height_grid, *cell_size_m)?;
            crate::layout::parse_raster_layout(&raster, class_map)
        }
    }
}

/// Ingest stage: parse the layout source into `layout.json`.
pub fn run_ingest(cfg: &RunConfig) -> Result<GeoLayout> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let layout_file = cfg.out_dir.join("layout.json");
    let hash = input_digest(cfg)?;
    cached_stage(&cfg.out_dir, "ingest", &hash, &[layout_file.clone()], || {
        let layout = parse_layout(cfg)?;
        for w in &layout.warnings {
            log::warn!("ingest: {w}");
        }
        std::fs::write(&layout_file, serde_json::to_vec_pretty(&layout)?)?;
        Ok(())
    })?;
    Ok(serde_json::from_slice(&std::fs::read(&layout_file)?)?)
}

/// Design stage: per-asset descriptions into `brief.json`.
pub fn run_design(cfg: &RunConfig) -> Result<(GeoLayout, ScenePlan, DesignBrief)> {
    let layout = run_ingest(cfg)?;
    let plan = assemble_scene_plan(&layout);
    for failure in &plan.failures {
        log::warn!("meshing {}: {}", failure.id, failure.reason);
    }
    let brief_file = cfg.out_dir.join("brief.json");
    let hash = sha_hex(&[
        std::fs::read(cfg.out_dir.join("layout.json"))?.as_slice(),
        cfg.instruction.as_bytes(),
        format!("{:?}", cfg.designer).as_bytes(),
    ]);
    cached_stage(&cfg.out_dir, "design", &hash, &[brief_file.clone()], || {
        let prompt = ScenePrompt {
            instruction: cfg.instruction.clone(),
            reference_image: match &cfg.reference_image {
                Some(p) => Some(imageio::decode_rgb(&std::fs::read(p)?)?),
                None => None,
            },
        };
        let brief = design_scene(&prompt, &plan, &designer_config(cfg))?;
        std::fs::write(&brief_file, serde_json::to_vec_pretty(&brief)?)?;
        Ok(())
    })?;
    let brief: DesignBrief = serde_json::from_slice(&std::fs::read(&brief_file)?)?;
    Ok((layout, plan, brief))
}

#[derive(Serialize, Deserialize)]
struct TextureIndexEntry {
    id: String,
    stem: String,
    prompt: String,
    seed: u64,
    valid_texels: usize,
    atlas: String,
    texture: String,
    coverage: String,
}

// masked to 63 bits so recorded seeds stay representable in TOML integers
fn asset_seed(base: u64, id: &AssetId) -> u64 {
    (base ^ fnv1a64(id.as_str().as_bytes())) & (i64::MAX as u64)
}

fn texture_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.join("textures")
}

/// Texture stage: runs the full per-asset texture pipeline (parallel across
/// assets, deterministic output) and persists texture/atlas/coverage files.
pub fn run_texture(
    cfg: &RunConfig,
) -> Result<(ScenePlan, DesignBrief, BTreeMap<AssetId, TexturedAsset<Scalar>>)> {
    let (_, plan, brief) = run_design(cfg)?;
    let dir = texture_dir(cfg);
    let index_file = dir.join("index.json");
    let hash = sha_hex(&[
        std::fs::read(cfg.out_dir.join("layout.json"))?.as_slice(),
        std::fs::read(cfg.out_dir.join("brief.json"))?.as_slice(),
        &cfg.seed.to_le_bytes(),
        &(cfg.n_views as u64).to_le_bytes(),
        &cfg.steps.to_le_bytes(),
        &cfg.atlas_resolution.to_le_bytes(),
        format!("{:?}{:?}{:?}{}", cfg.generator, cfg.inpainter, cfg.upscaler, cfg.strict_endpoints)
            .as_bytes(),
    ]);
    cached_stage(&cfg.out_dir, "texture", &hash, &[index_file.clone()], || {
        std::fs::create_dir_all(&dir)?;
        let stage_cfg = texture_stage_config(cfg)?;
        let meshes: Vec<&crate::AssetMesh> = plan.all_meshes().collect();
        let run = || -> Vec<Result<TexturedAsset<Scalar>>> {
            meshes
                .par_iter()
                .map(|mesh| {
                    let prompt = brief
                        .entries
                        .get(&mesh.id)
                        .cloned()
                        .unwrap_or_else(|| cfg.instruction.clone());
                    texture_asset(mesh, &prompt, asset_seed(cfg.seed, &mesh.id), &stage_cfg)
                })
                .collect()
        };
        let results = if cfg.workers > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| Error::config("workers", e.to_string()))?
                .install(run)
        } else {
            run()
        };

        let mut index = Vec::new();
        for (mesh, result) in meshes.iter().zip(results) {
            let textured = result?;
            let stem = file_stem(&mesh.id);
            let tex_file = format!("{stem}.png");
            let cov_file = format!("{stem}.coverage.pgm");
            let atlas_file = format!("{stem}.atlas.json");
            textured.texture.rgb.save_with_format(dir.join(&tex_file), image::ImageFormat::Png)?;
            std::fs::write(
                dir.join(&cov_file),
                imageio::pgm_bytes_mask(&textured.texture.coverage)?,
            )?;
            std::fs::write(dir.join(&atlas_file), serde_json::to_vec(&textured.atlas)?)?;
            index.push(TextureIndexEntry {
                id: mesh.id.to_string(),
                stem,
                prompt: textured.prompt.clone(),
                seed: textured.seed,
                valid_texels: textured.valid_texels,
                atlas: atlas_file,
                texture: tex_file,
                coverage: cov_file,
            });
        }
        std::fs::write(&index_file, serde_json::to_vec_pretty(&index)?)?;
        Ok(())
    })?;

    // reload from disk so later stages see exactly the persisted artifacts
    let index: Vec<TextureIndexEntry> = serde_json::from_slice(&std::fs::read(&index_file)?)?;
    let mut textured = BTreeMap::new();
    for entry in index {
        let id = AssetId::new(entry.id.clone());
        let mesh = plan
            .mesh(&id)
            .ok_or_else(|| Error::IncompleteScene(vec![entry.id.clone()]))?;
        let rgb = imageio::decode_rgb(&std::fs::read(dir.join(&entry.texture))?)?;
        let cov_img = imageio::decode_gray(&std::fs::read(dir.join(&entry.coverage))?)?;
        let coverage = Grid::from_vec(
            cov_img.width() as usize,
            cov_img.height() as usize,
            cov_img.pixels().map(|p| p.0[0] > 127).collect(),
        );
        let atlas: crate::UVAtlas =
            serde_json::from_slice(&std::fs::read(dir.join(&entry.atlas))?)?;
        let position_map =
            build_position_map(mesh, &atlas, atlas.width as usize, atlas.height as usize);
        textured.insert(
            id,
            TexturedAsset {
                texture: UVTexture { rgb, coverage },
                atlas,
                position_map,
                valid_texels: entry.valid_texels,
                prompt: entry.prompt,
                seed: entry.seed,
            },
        );
    }
    Ok((plan, brief, textured))
}

fn file_stem(id: &AssetId) -> String {
    id.as_str()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Assemble stage: reassemble at world centers, run the refinement loop and
/// export OBJ/MTL/PNG plus the manifest.
pub fn run_assemble(cfg: &RunConfig) -> Result<(SceneManifest<Scalar>, ExportBundle)> {
    let (plan, brief, textured) = run_texture(cfg)?;
    let manifest = reassemble(&plan, textured)?;
    let refine_cfg = RefineConfig {
        max_iters: cfg.max_refine_iters,
        critic: designer_config(cfg),
        texture: texture_stage_config(cfg)?,
    };
    let manifest = refine_loop(manifest, &brief, &refine_cfg)?;
    let export_dir = cfg.out_dir.join("export");
    let bundle = export_scene(&manifest, &export_dir)?;
    // refinement snapshot context for the records
    let overview = overview_camera(&manifest.bounds, 512);
    let fb = scene_frame(&manifest, &overview);
    fb.rgb_image()
        .save_with_format(cfg.out_dir.join("overview.png"), image::ImageFormat::Png)?;
    Ok((manifest, bundle))
}

fn scene_frame(
    manifest: &SceneManifest<Scalar>,
    view: &CameraView<Scalar>,
) -> crate::FrameBuffer {
    let items: Vec<SceneItem<'_, Scalar>> = manifest
        .plan
        .all_meshes()
        .map(|mesh| {
            let t = &manifest.textured[&mesh.id];
            SceneItem {
                mesh,
                translation: mesh.center_world,
                shading: Shading::Texture { atlas: &t.atlas, image: &t.texture.rgb },
            }
        })
        .collect();
    render_scene(&items, view)
}

/// Full pipeline: ingest, design, texture, assemble/refine, export — with a
/// per-stage timing log at `<out_dir>/run.log`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<ExportBundle> {
    let mut log = RunLog::new(cfg);
    let result = (|| -> Result<ExportBundle> {
        log.stage("ingest", || run_ingest(cfg))?;
        log.stage("design", || run_design(cfg).map(|_| ()))?;
        log.stage("texture", || run_texture(cfg).map(|_| ()))?;
        let (_, bundle) = log.stage("assemble", || run_assemble(cfg))?;
        Ok(bundle)
    })();
    match &result {
        Ok(_) => log.finish("ok"),
        Err(e) => log.finish(&format!("error: {e}")),
    }
    result
}

#[derive(Serialize, Deserialize)]
pub struct PoseRecord {
    pub position: [f64; 3],
    pub yaw_deg: f64,
    pub pitch_deg: f64,
}

#[derive(Serialize, Deserialize)]
pub struct NavSummary {
    pub found: bool,
    pub iterations_used: usize,
    pub waypoints: Vec<[f64; 3]>,
    pub observations: usize,
    pub files: Vec<String>,
}

/// Navigate stage: voxelize the assembled scene, plan with RRT and record
/// the observation trajectory as numbered PNG triples plus a poses file.
pub fn run_navigate(
    cfg: &RunConfig,
    start: Vec3,
    goal: Vec3,
    resolution: Scalar,
    stride_m: Scalar,
) -> Result<NavSummary> {
    let (manifest, _) = run_assemble(cfg)?;
    let grid = voxelize(&manifest, resolution);
    let params = RrtParams { seed: cfg.seed, ..RrtParams::for_grid(&grid, cfg.seed) };
    let plan = plan_rrt(&grid, start, goal, &params)?;

    let nav_dir = cfg.out_dir.join("nav");
    std::fs::create_dir_all(&nav_dir)?;
    let intrinsics = CameraIntrinsics::default();
    let observations = record_trajectory(&manifest, &plan, stride_m, &intrinsics)?;
    let mut files = Vec::new();
    for (i, obs) in observations.iter().enumerate() {
        let rgb = format!("{i:03}_rgb.png");
        let depth = format!("{i:03}_depth.png");
        let semantic = format!("{i:03}_semantic.png");
        obs.frame.rgb_image().save_with_format(nav_dir.join(&rgb), image::ImageFormat::Png)?;
        normalize_depth(&obs.frame)
            .to_gray_image()
            .save_with_format(nav_dir.join(&depth), image::ImageFormat::Png)?;
        obs.frame
            .semantic_image()
            .save_with_format(nav_dir.join(&semantic), image::ImageFormat::Png)?;
        files.extend([rgb, depth, semantic]);
    }
    let poses: Vec<PoseRecord> = trajectory_poses(&plan, stride_m)?
        .iter()
        .map(|p| PoseRecord {
            position: [p.position.x, p.position.y, p.position.z],
            yaw_deg: p.yaw_deg,
            pitch_deg: p.pitch_deg,
        })
        .collect();
    std::fs::write(nav_dir.join("poses.json"), serde_json::to_vec_pretty(&poses)?)?;
    files.push("poses.json".into());

    let summary = NavSummary {
        found: plan.found,
        iterations_used: plan.iterations_used,
        waypoints: plan.waypoints.iter().map(|w| [w.x, w.y, w.z]).collect(),
        observations: observations.len(),
        files,
    };
    std::fs::write(nav_dir.join("plan.json"), serde_json::to_vec_pretty(&summary)?)?;
    Ok(summary)
}

/// Voxel grid used by the navigation acceptance checks.
pub fn scene_occupancy(cfg: &RunConfig, resolution: Scalar) -> Result<OccupancyGrid<Scalar>> {
    let (manifest, _) = run_assemble(cfg)?;
    Ok(voxelize(&manifest, resolution))
}

/// Plan-only navigation (no rendering); used by tests and the CLI dry run.
pub fn plan_only(
    cfg: &RunConfig,
    start: Vec3,
    goal: Vec3,
    resolution: Scalar,
) -> Result<NavPlan<Scalar>> {
    let (manifest, _) = run_assemble(cfg)?;
    let grid = voxelize(&manifest, resolution);
    let params = RrtParams { seed: cfg.seed, ..RrtParams::for_grid(&grid, cfg.seed) };
    plan_rrt(&grid, start, goal, &params)
}

#[derive(Clone, Debug, Default)]
pub struct EvaluateArgs {
    /// Feature file (one vector per line) of the real reference set.
    pub reference_features: Option<PathBuf>,
    /// Directory of reference images to extract features from instead.
    pub reference_images: Option<PathBuf>,
    /// Directory of externally predicted depth maps (8-bit PNG, 255 =
    /// background) matched by sorted order against the rendered frames.
    pub predicted_depth: Option<PathBuf>,
    pub frames: Option<usize>,
}

/// Evaluate stage: render an orbit of frames over the assembled scene and
/// compute the metric suite; unavailable inputs skip their metric rather
/// than faking a value.
pub fn run_evaluate(cfg: &RunConfig, args: &EvaluateArgs) -> Result<Vec<MetricReport>> {
    let (manifest, _) = run_assemble(cfg)?;
    let n_frames = args.frames.unwrap_or(cfg.eval_frames).max(2);
    let mut rgb_frames: Vec<RgbImage> = Vec::with_capacity(n_frames);
    let mut depth_frames: Vec<Grid<Scalar>> = Vec::with_capacity(n_frames);
    let center = manifest.bounds.center();
    let radius = (manifest.bounds.extents().length() * 0.5).max(1.0);
    for i in 0..n_frames {
        let azimuth = 2.0 * std::f64::consts::PI * i as f64 / n_frames as f64;
        let elevation = RIG_ELEVATION_DEG.to_radians();
        let eye = center
            + Vec3::new(
                elevation.cos() * azimuth.cos(),
                elevation.cos() * azimuth.sin(),
                elevation.sin(),
            ) * (radius * 2.2);
        let view = CameraView {
            eye,
            target: center,
            up: Vec3::new(0.0, 0.0, 1.0),
            fov_y_deg: 50.0,
            near: cast::<Scalar>(0.05) * radius,
            far: cast::<Scalar>(8.0) * radius,
            width: 256,
            height: 256,
        };
        let fb = scene_frame(&manifest, &view);
        rgb_frames.push(fb.rgb_image());
        depth_frames.push(fb.depth_grid());
    }

    let extractor = Hist32;
    let features: Vec<FeatureVector<Scalar>> =
        rgb_frames.iter().map(|f| FeatureExtractor::<Scalar>::extract(&extractor, f)).collect();
    let mut reports = Vec::new();

    let hi = homogeneity_of_features(&features)?;
    reports.push(MetricReport::new("hi", hi, &[features.len()], crate::metrics::HIST32_ID));

    let reference = load_reference_features(args)?;
    if let Some(reference) = reference {
        if reference[0].extractor_id == features[0].extractor_id {
            let fid_v = fid(&features, &reference)?;
            reports.push(MetricReport::new(
                "fid",
                fid_v,
                &[features.len(), reference.len()],
                &reference[0].extractor_id,
            ));
            let kid_v = kid(&features, &reference)?;
            reports.push(MetricReport::new(
                "kid",
                kid_v,
                &[features.len(), reference.len()],
                &reference[0].extractor_id,
            ));
        } else {
            return Err(Error::ExtractorMismatch(format!(
                "reference features use `{}`",
                reference[0].extractor_id
            )));
        }
    } else {
        log::warn!("no reference set supplied; FID/KID skipped");
    }

    if let Some(dir) = &args.predicted_depth {
        let predicted = load_depth_dir(dir, depth_frames.len())?;
        let de = depth_error(&predicted, &depth_frames[..predicted.len()])?;
        reports.push(MetricReport::new(
            "de",
            de,
            &[predicted.len()],
            "depth-png",
        ));
    } else {
        log::warn!("no predicted depth directory supplied; DE skipped");
    }

    match preference_score(&rgb_frames, &designer_config(cfg)) {
        Ok(ps) => reports.push(MetricReport::new("ps", ps, &[rgb_frames.len()], "critic")),
        Err(Error::CriticUnavailable(msg)) => {
            log::warn!("critic unavailable ({msg}); PS skipped");
        }
        Err(e) => return Err(e),
    }

    #[derive(Serialize)]
    struct MetricsDoc<'a> {
        reports: &'a [MetricReport],
    }
    let toml_text = toml::to_string_pretty(&MetricsDoc { reports: &reports })
        .map_err(|e| Error::config("metrics", e.to_string()))?;
    std::fs::write(cfg.out_dir.join("metrics.toml"), toml_text)?;
    Ok(reports)
}

fn load_reference_features(args: &EvaluateArgs) -> Result<Option<Vec<FeatureVector<Scalar>>>> {
    if let Some(file) = &args.reference_features {
        return Ok(Some(crate::metrics::load_features(file)?));
    }
    if let Some(dir) = &args.reference_images {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "png"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::EmptyInput("reference image directory has no PNG files"));
        }
        let extractor = Hist32;
        let features = paths
            .iter()
            .map(|p| {
                Ok(FeatureExtractor::<Scalar>::extract(
                    &extractor,
                    &imageio::decode_rgb(&std::fs::read(p)?)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(Some(features));
    }
    Ok(None)
}

fn load_depth_dir(dir: &Path, limit: usize) -> Result<Vec<Grid<Scalar>>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "png" || e == "pgm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyInput("predicted depth directory has no images"));
    }
    paths.truncate(limit);
    paths
        .iter()
        .map(|p| {
            let img = imageio::decode_gray(&std::fs::read(p)?)?;
            let (w, h) = (img.width() as usize, img.height() as usize);
            Ok(Grid::from_vec(
                w,
                h,
                img.pixels()
                    .map(|px| {
                        if px.0[0] == 255 {
                            Scalar::INFINITY
                        } else {
                            px.0[0] as Scalar / 255.0
                        }
                    })
                    .collect(),
            ))
        })
        .collect()
}
