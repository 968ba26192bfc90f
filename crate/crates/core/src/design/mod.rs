//! Scene design: per-asset textual descriptions from a chat-completion
//! designer endpoint (with a deterministic mock), and critique reports
//! driving the refinement loop.

pub mod remote;

use std::collections::BTreeMap;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ScenePlan;
use crate::layout::{AssetCategory, AssetId};
use crate::num::Real;

/// Mock critic flags any asset whose snapshot coverage sits below this.
pub const MOCK_CRITIC_COVERAGE_MIN: f64 = 0.95;
/// Suffix the mock critic appends when asking for a refined texture.
pub const REFINE_SUFFIX: &str = " highly detailed facade";

#[derive(Clone, Debug, PartialEq)]
pub struct ScenePrompt {
    pub instruction: String,
    pub reference_image: Option<RgbImage>,
}

impl ScenePrompt {
    pub fn text(instruction: impl Into<String>) -> Self {
        Self { instruction: instruction.into(), reference_image: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignBrief {
    /// Asset id -> appearance/material description controlling generation.
    pub entries: BTreeMap<AssetId, String>,
    pub palette_notes: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Refine { new_prompt: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CritiqueReport {
    pub verdicts: BTreeMap<AssetId, Verdict>,
    pub summary: String,
}

impl CritiqueReport {
    pub fn all_accepted(&self) -> bool {
        self.verdicts.values().all(|v| matches!(v, Verdict::Accept))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignerConfig {
    pub endpoint: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub timeout_s: u64,
    pub retries: u32,
    /// Deterministic canned designer/critic instead of the remote service.
    pub mock: bool,
    pub max_inflight: usize,
}

impl Default for DesignerConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            model: "urban-designer".into(),
            temperature: 0.7,
            timeout_s: 60,
            retries: 2,
            mock: true,
            max_inflight: 2,
        }
    }
}

impl DesignerConfig {
    pub fn remote(endpoint: impl Into<String>) -> Self {
        Self { endpoint: Some(endpoint.into()), mock: false, ..Self::default() }
    }

    fn use_mock(&self) -> bool {
        self.mock || self.endpoint.is_none()
    }
}

/// Per-asset snapshot handed to the critic, with the texel-coverage
/// statistic the mock critic thresholds on.
#[derive(Clone, Debug)]
pub struct AssetSnapshot {
    pub id: AssetId,
    pub image: RgbImage,
    pub coverage: f64,
}

const CATEGORY_ORDER: [AssetCategory; 5] = [
    AssetCategory::Buildings,
    AssetCategory::RoadsPaths,
    AssetCategory::ForestVegetation,
    AssetCategory::Water,
    AssetCategory::Ground,
];

fn category_heading(category: AssetCategory) -> &'static str {
    match category {
        AssetCategory::Buildings => "Buildings",
        AssetCategory::RoadsPaths => "Roads and paths",
        AssetCategory::ForestVegetation => "Forest and vegetation",
        AssetCategory::Water => "Water",
        AssetCategory::Ground => "Ground",
    }
}

/// Fill the designer prompt template: role preamble, the verbatim user
/// instruction, the asset inventory grouped by category, and the strict
/// response-format stanza.
pub fn render_design_prompt(
    instruction: &str,
    assets: &[(AssetId, AssetCategory)],
) -> Result<String> {
    if assets.is_empty() {
        return Err(Error::EmptyScene);
    }
    let mut prompt = String::new();
    prompt.push_str(
        "You are an expert urban scene designer. Plan the visual appearance and \
         materials of every asset in a 3D urban scene so each texture can be \
         generated independently, keeping the scene coherent.\n\n",
    );
    prompt.push_str(&format!("User instruction: {instruction}\n\nScene inventory:\n"));
    for category in CATEGORY_ORDER {
        let members: Vec<&AssetId> =
            assets.iter().filter(|(_, c)| *c == category).map(|(id, _)| id).collect();
        if members.is_empty() {
            continue;
        }
        prompt.push_str(&format!("{}:\n", category_heading(category)));
        for id in members {
            prompt.push_str(&format!("  - {id}\n"));
        }
    }
    prompt.push_str(
        "\nRespond with a line containing only DESIGNS: followed by one line per \
         asset, formatted exactly as\n<asset-id>: <description of appearance and materials>\n\
         Every asset id listed above must appear exactly once.\n",
    );
    Ok(prompt)
}

/// Draft one description per scene asset (ground included). Remote mode
/// calls the chat endpoint and parses the line protocol; mock mode emits
/// deterministic category-keyed descriptions carrying the instruction.
pub fn design_scene<S: Real>(
    prompt: &ScenePrompt,
    plan: &ScenePlan<S>,
    cfg: &DesignerConfig,
) -> Result<DesignBrief> {
    let assets: Vec<(AssetId, AssetCategory)> =
        plan.all_meshes().map(|m| (m.id.clone(), m.category)).collect();
    if assets.is_empty() {
        return Err(Error::EmptyScene);
    }
    if cfg.use_mock() {
        return Ok(mock_design(&prompt.instruction, &assets));
    }
    let rendered = render_design_prompt(&prompt.instruction, &assets)?;
    let content = remote::chat(cfg, &rendered, prompt.reference_image.as_ref())?;
    let entries = remote::parse_design_response(&content, &assets)?;
    Ok(DesignBrief { entries, palette_notes: prompt.instruction.clone() })
}

fn mock_design(instruction: &str, assets: &[(AssetId, AssetCategory)]) -> DesignBrief {
    let entries = assets
        .iter()
        .map(|(id, category)| {
            let text = match category {
                AssetCategory::Buildings => format!(
                    "A building facade for {instruction}: weathered brick walls, large \
                     glass windows and a concrete trim in a muted palette."
                ),
                AssetCategory::RoadsPaths => format!(
                    "A road surface for {instruction}: worn asphalt with faded lane \
                     markings and stone curbs."
                ),
                AssetCategory::ForestVegetation => format!(
                    "Vegetation cover for {instruction}: dense foliage, mixed grass \
                     and low shrubs."
                ),
                AssetCategory::Water => format!(
                    "A water surface for {instruction}: calm reflective water with \
                     subtle ripples."
                ),
                AssetCategory::Ground => format!(
                    "Ground cover for {instruction}: packed earth and worn paving \
                     between the assets."
                ),
            };
            (id.clone(), text)
        })
        .collect();
    DesignBrief {
        entries,
        palette_notes: format!("Overall palette keyed to: {instruction}"),
    }
}

/// Ask the critic which assets mismatch their descriptions. Mock mode flags
/// any snapshot with coverage below 0.95 and appends the refine suffix to
/// the original description.
pub fn critique_scene(
    snapshots: &[AssetSnapshot],
    brief: &DesignBrief,
    cfg: &DesignerConfig,
) -> Result<CritiqueReport> {
    if snapshots.is_empty() {
        return Err(Error::EmptyScene);
    }
    if cfg.use_mock() {
        let mut verdicts = BTreeMap::new();
        for snap in snapshots {
            let verdict = if snap.coverage < MOCK_CRITIC_COVERAGE_MIN {
                let base = brief
                    .entries
                    .get(&snap.id)
                    .ok_or_else(|| Error::MalformedDesign(format!(
                        "no design entry for {}",
                        snap.id
                    )))?;
                Verdict::Refine { new_prompt: format!("{base}{REFINE_SUFFIX}") }
            } else {
                Verdict::Accept
            };
            verdicts.insert(snap.id.clone(), verdict);
        }
        let flagged = verdicts.values().filter(|v| matches!(v, Verdict::Refine { .. })).count();
        return Ok(CritiqueReport {
            verdicts,
            summary: format!("mock critic: {flagged} of {} assets flagged", snapshots.len()),
        });
    }
    remote::critique(snapshots, brief, cfg)
}
