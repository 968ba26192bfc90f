//! Chat-completion transport for the designer/critic roles and the strict
//! line protocol their responses must follow.

use std::collections::BTreeMap;

use image::RgbImage;
use serde_json::json;

use crate::design::{AssetSnapshot, CritiqueReport, DesignBrief, DesignerConfig, Verdict};
use crate::error::{Error, Result};
use crate::gateway::remote::JsonClient;
use crate::imageio;
use crate::layout::{AssetCategory, AssetId};

/// One chat-completion round trip; returns the assistant message content.
pub fn chat(cfg: &DesignerConfig, prompt: &str, image: Option<&RgbImage>) -> Result<String> {
    let endpoint = cfg
        .endpoint
        .as_deref()
        .ok_or_else(|| Error::DesignerUnavailable("no designer endpoint configured".into()))?;
    let mut content = vec![json!({"type": "text", "text": prompt})];
    if let Some(img) = image {
        let b64 = imageio::b64_encode(&imageio::png_bytes_rgb(img)?);
        content.push(json!({
            "type": "image_url",
            "image_url": {"url": format!("data:image/png;base64,{b64}")}
        }));
    }
    let body = json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": [{"role": "user", "content": content}],
    });
    let client = JsonClient::new(cfg.timeout_s, cfg.retries, cfg.max_inflight);
    let resp = client.post_json(endpoint, &body).map_err(Error::DesignerUnavailable)?;
    let message = resp
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .ok_or_else(|| {
            Error::MalformedDesign("response has no choices[0].message.content".into())
        })?;
    Ok(message.to_string())
}

/// Parse the `DESIGNS:` line protocol; every listed asset id must appear.
pub fn parse_design_response(
    content: &str,
    assets: &[(AssetId, AssetCategory)],
) -> Result<BTreeMap<AssetId, String>> {
    let mut entries = BTreeMap::new();
    let mut in_block = false;
    for line in content.lines() {
        let line = line.trim();
        if line == "DESIGNS:" {
            in_block = true;
            continue;
        }
        if !in_block || line.is_empty() {
            continue;
        }
        if let Some((id, text)) = line.split_once(':') {
            let (id, text) = (id.trim(), text.trim());
            if !text.is_empty() {
                entries.insert(AssetId::new(id), text.to_string());
            }
        }
    }
    for (id, _) in assets {
        if !entries.contains_key(id) {
            return Err(Error::MalformedDesign(format!("response missing asset {id}")));
        }
    }
    entries.retain(|id, _| assets.iter().any(|(a, _)| a == id));
    Ok(entries)
}

/// Remote critique round trip: ships the per-asset snapshots and designs,
/// expects a `VERDICTS:` block of `<id>: OK` / `<id>: REFINE <prompt>`.
pub fn critique(
    snapshots: &[AssetSnapshot],
    brief: &DesignBrief,
    cfg: &DesignerConfig,
) -> Result<CritiqueReport> {
    let endpoint = cfg
        .endpoint
        .as_deref()
        .ok_or_else(|| Error::DesignerUnavailable("no critic endpoint configured".into()))?;
    let mut prompt = String::from(
        "You are reviewing rendered urban assets against their intended designs. \
         For each asset decide whether the texture matches the design; answer with \
         a line containing only VERDICTS: followed by one line per asset, either\n\
         <asset-id>: OK\nor\n<asset-id>: REFINE <improved generation prompt>\n\nAssets:\n",
    );
    let mut content = Vec::new();
    for snap in snapshots {
        let design = brief.entries.get(&snap.id).map(String::as_str).unwrap_or("");
        prompt.push_str(&format!("- {} (intended: {design})\n", snap.id));
    }
    content.push(json!({"type": "text", "text": prompt}));
    for snap in snapshots {
        let b64 = imageio::b64_encode(&imageio::png_bytes_rgb(&snap.image)?);
        content.push(json!({
            "type": "image_url",
            "image_url": {"url": format!("data:image/png;base64,{b64}")}
        }));
    }
    let body = json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": [{"role": "user", "content": content}],
    });
    let client = JsonClient::new(cfg.timeout_s, cfg.retries, cfg.max_inflight);
    let resp = client.post_json(endpoint, &body).map_err(Error::DesignerUnavailable)?;
    let message = resp
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .ok_or_else(|| {
            Error::MalformedDesign("response has no choices[0].message.content".into())
        })?;
    parse_critique_response(message, snapshots)
}

pub fn parse_critique_response(
    content: &str,
    snapshots: &[AssetSnapshot],
) -> Result<CritiqueReport> {
    let mut verdicts = BTreeMap::new();
    let mut in_block = false;
    for line in content.lines() {
        let line = line.trim();
        if line == "VERDICTS:" {
            in_block = true;
            continue;
        }
        if !in_block || line.is_empty() {
            continue;
        }
        let Some((id, rest)) = line.split_once(':') else { continue };
        let (id, rest) = (AssetId::new(id.trim()), rest.trim());
        if rest == "OK" {
            verdicts.insert(id, Verdict::Accept);
        } else if let Some(new_prompt) = rest.strip_prefix("REFINE") {
            let new_prompt = new_prompt.trim();
            if new_prompt.is_empty() {
                return Err(Error::MalformedDesign(format!(
                    "refine verdict for {id} carries no prompt"
                )));
            }
            verdicts.insert(id, Verdict::Refine { new_prompt: new_prompt.to_string() });
        } else {
            return Err(Error::MalformedDesign(format!(
                "unrecognized verdict token for {id}: `{rest}`"
            )));
        }
    }
    for snap in snapshots {
        if !verdicts.contains_key(&snap.id) {
            return Err(Error::MalformedDesign(format!("no verdict for {}", snap.id)));
        }
    }
    Ok(CritiqueReport { verdicts, summary: "remote critique".into() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assets() -> Vec<(AssetId, AssetCategory)> {
        vec![
            (AssetId::new("way/1"), AssetCategory::Buildings),
            (AssetId::new("way/2"), AssetCategory::Water),
        ]
    }

    #[test]
    fn design_response_parses_the_line_protocol() {
        let content = "some preamble\nDESIGNS:\nway/1: red brick tower\nway/2: still pond\n";
        let entries = parse_design_response(content, &assets()).unwrap();
        assert_eq!(entries[&AssetId::new("way/1")], "red brick tower");
        assert_eq!(entries.len(), 2);
    }

    #[test]
    fn design_response_missing_an_asset_is_malformed() {
        let content = "DESIGNS:\nway/1: something\n";
        let err = parse_design_response(content, &assets()).unwrap_err();
        assert!(matches!(err, Error::MalformedDesign(m) if m.contains("way/2")));
    }

    #[test]
    fn critique_response_parses_ok_and_refine() {
        let snaps = vec![
            AssetSnapshot { id: AssetId::new("way/1"), image: RgbImage::new(1, 1), coverage: 1.0 },
            AssetSnapshot { id: AssetId::new("way/2"), image: RgbImage::new(1, 1), coverage: 1.0 },
        ];
        let content = "VERDICTS:\nway/1: OK\nway/2: REFINE darker water with reflections\n";
        let report = parse_critique_response(content, &snaps).unwrap();
        assert_eq!(report.verdicts[&AssetId::new("way/1")], Verdict::Accept);
        assert!(matches!(
            &report.verdicts[&AssetId::new("way/2")],
            Verdict::Refine { new_prompt } if new_prompt.contains("darker water")
        ));
    }

    #[test]
    fn malformed_verdict_token_errors() {
        let snaps = vec![AssetSnapshot {
            id: AssetId::new("way/1"),
            image: RgbImage::new(1, 1),
            coverage: 1.0,
        }];
        let err = parse_critique_response("VERDICTS:\nway/1: MAYBE\n", &snaps).unwrap_err();
        assert!(matches!(err, Error::MalformedDesign(_)));
    }
}
