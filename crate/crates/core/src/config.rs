//! Run configuration: TOML file with strict key checking, defaults from the
//! rendering protocol, environment overrides for endpoint addresses.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::AssetCategory;

pub const DEFAULT_N_VIEWS: usize = 4;
pub const DEFAULT_ATLAS_RESOLUTION: u32 = 1024;
pub const DEFAULT_MAX_REFINE_ITERS: u32 = 1;

/// Environment variables overriding the endpoint addresses.
pub const ENV_GENERATOR: &str = "URBANFORGE_GENERATOR";
pub const ENV_DESIGNER: &str = "URBANFORGE_DESIGNER";
pub const ENV_INPAINTER: &str = "URBANFORGE_INPAINTER";
pub const ENV_UPSCALER: &str = "URBANFORGE_UPSCALER";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub instruction: String,
    pub out_dir: PathBuf,
    pub input: InputSection,
    #[serde(default)]
    pub endpoints: EndpointSection,
    pub seed: Option<u64>,
    pub n_views: Option<usize>,
    pub steps: Option<u32>,
    pub atlas_resolution: Option<u32>,
    pub max_refine_iters: Option<u32>,
    pub workers: Option<usize>,
    pub strict_endpoints: Option<bool>,
    pub reference_image: Option<PathBuf>,
    pub eval_frames: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub osm: Option<PathBuf>,
    pub semantic: Option<PathBuf>,
    pub height: Option<PathBuf>,
    pub cell_size_m: Option<f64>,
    pub height_scale: Option<f64>,
    #[serde(default)]
    pub class_map: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointSection {
    pub generator: Option<String>,
    pub designer: Option<String>,
    pub inpainter: Option<String>,
    pub upscaler: Option<String>,
    pub timeout_s: Option<u64>,
    pub retries: Option<u32>,
}

/// Exactly one of the two supported layout sources.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSource {
    Osm(PathBuf),
    Raster {
        semantic: PathBuf,
        height: PathBuf,
        cell_size_m: f64,
        height_scale: f64,
        class_map: BTreeMap<u8, Option<AssetCategory>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub instruction: String,
    pub out_dir: PathBuf,
    pub input: InputSource,
    pub generator: Option<String>,
    pub designer: Option<String>,
    pub inpainter: Option<String>,
    pub upscaler: Option<String>,
    pub endpoint_timeout_s: u64,
    pub endpoint_retries: u32,
    pub seed: u64,
    /// True when no seed was supplied and one was generated (and recorded).
    pub seed_generated: bool,
    pub n_views: usize,
    pub steps: u32,
    pub atlas_resolution: u32,
    pub max_refine_iters: u32,
    pub workers: usize,
    pub strict_endpoints: bool,
    pub reference_image: Option<PathBuf>,
    pub eval_frames: usize,
}

fn parse_category(label: &str) -> Result<Option<AssetCategory>> {
    match label {
        "buildings" => Ok(Some(AssetCategory::Buildings)),
        "roads_paths" => Ok(Some(AssetCategory::RoadsPaths)),
        "forest_vegetation" => Ok(Some(AssetCategory::ForestVegetation)),
        "water" => Ok(Some(AssetCategory::Water)),
        "ground" => Ok(Some(AssetCategory::Ground)),
        "ignore" => Ok(None),
        other => Err(Error::config(
            "input.class_map",
            format!("unknown category `{other}`"),
        )),
    }
}

/// Validate and default a parsed raw config into a runnable one.
pub fn resolve_config(raw: RawConfig, base_dir: &Path) -> Result<RunConfig> {
    if raw.instruction.trim().is_empty() {
        return Err(Error::config("instruction", "must be non-empty"));
    }
    let n_views = raw.n_views.unwrap_or(DEFAULT_N_VIEWS);
    if n_views < 1 {
        return Err(Error::config("n_views", "must be >= 1"));
    }
    let steps = raw.steps.unwrap_or(crate::gateway::DEFAULT_STEPS);
    if steps < 1 {
        return Err(Error::config("steps", "must be >= 1"));
    }
    let atlas_resolution = raw.atlas_resolution.unwrap_or(DEFAULT_ATLAS_RESOLUTION);
    if atlas_resolution < 16 {
        return Err(Error::config("atlas_resolution", "must be >= 16"));
    }

    let rebase = |p: &PathBuf| -> PathBuf {
        if p.is_absolute() {
            p.clone()
        } else {
            base_dir.join(p)
        }
    };

    let input = &raw.input;
    let has_raster = input.semantic.is_some() || input.height.is_some();
    let source = match (&input.osm, has_raster) {
        (Some(_), true) => {
            return Err(Error::config("input", "set either `osm` or the raster pair, not both"));
        }
        (None, false) => {
            return Err(Error::config("input", "set `osm` or the raster pair"));
        }
        (Some(osm), false) => InputSource::Osm(rebase(osm)),
        (None, true) => {
            let semantic = input
                .semantic
                .as_ref()
                .ok_or_else(|| Error::config("input.semantic", "missing raster class file"))?;
            let height = input
                .height
                .as_ref()
                .ok_or_else(|| Error::config("input.height", "missing raster height file"))?;
            let mut class_map = BTreeMap::new();
            for (key, label) in &input.class_map {
                let id: u8 = key.parse().map_err(|_| {
                    Error::config("input.class_map", format!("class id `{key}` is not a byte"))
                })?;
                class_map.insert(id, parse_category(label)?);
            }
            if class_map.is_empty() {
                return Err(Error::config("input.class_map", "raster input needs a class map"));
            }
            InputSource::Raster {
                semantic: rebase(semantic),
                height: rebase(height),
                cell_size_m: input.cell_size_m.unwrap_or(1.0),
                height_scale: input.height_scale.unwrap_or(1.0),
                class_map,
            }
        }
    };
    if let InputSource::Raster { cell_size_m, .. } = &source {
        if *cell_size_m <= 0.0 {
            return Err(Error::config("input.cell_size_m", "must be positive"));
        }
    }

    let env_or = |var: &str, fallback: &Option<String>| -> Option<String> {
        std::env::var(var).ok().filter(|v| !v.is_empty()).or_else(|| fallback.clone())
    };
    let (seed, seed_generated) = match raw.seed {
        Some(s) => (s, false),
        None => (rand::rng().random::<u64>(), true),
    };

    Ok(RunConfig {
        instruction: raw.instruction,
        out_dir: rebase(&raw.out_dir),
        input: source,
        generator: env_or(ENV_GENERATOR, &raw.endpoints.generator),
        designer: env_or(ENV_DESIGNER, &raw.endpoints.designer),
        inpainter: env_or(ENV_INPAINTER, &raw.endpoints.inpainter),
        upscaler: env_or(ENV_UPSCALER, &raw.endpoints.upscaler),
        endpoint_timeout_s: raw.endpoints.timeout_s.unwrap_or(60),
        endpoint_retries: raw.endpoints.retries.unwrap_or(2),
        seed,
        seed_generated,
        n_views,
        steps,
        atlas_resolution,
        max_refine_iters: raw.max_refine_iters.unwrap_or(DEFAULT_MAX_REFINE_ITERS),
        workers: raw.workers.unwrap_or(0),
        strict_endpoints: raw.strict_endpoints.unwrap_or(false),
        reference_image: raw.reference_image.as_ref().map(&rebase),
        eval_frames: raw.eval_frames.unwrap_or(crate::metrics::DEFAULT_DEPTH_FRAMES),
    })
}

/// Load, parse, default and validate a config file. Unknown keys are
/// rejected, relative paths resolve against the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| Error::config("config", e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve_config(raw, base)
}
