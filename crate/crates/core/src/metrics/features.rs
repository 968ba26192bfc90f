//! Feature extraction behind a pluggable interface: the built-in 32-dim
//! histogram descriptor and a file-based loader for externally computed
//! vectors.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use image::RgbImage;

use crate::error::{Error, Result};
use crate::num::{cast, Real};

pub const HIST32_ID: &str = "hist32-v1";

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector<S> {
    pub values: Vec<S>,
    pub extractor_id: String,
}

impl<S: Real> FeatureVector<S> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> S {
        self.values.iter().map(|&v| v * v).sum::<S>().sqrt()
    }
}

pub trait FeatureExtractor<S> {
    fn extract(&self, image: &RgbImage) -> FeatureVector<S>;
    fn id(&self) -> &str;
}

/// 24 color-histogram dims (8 bins per RGB channel) plus an 8-bin
/// gradient-orientation histogram of luminance, L2-normalized.
pub struct Hist32;

impl<S: Real> FeatureExtractor<S> for Hist32 {
    fn extract(&self, image: &RgbImage) -> FeatureVector<S> {
        default_descriptor(image)
    }

    fn id(&self) -> &str {
        HIST32_ID
    }
}

pub fn default_descriptor<S: Real>(image: &RgbImage) -> FeatureVector<S> {
    let mut hist = [0.0f64; 32];
    for p in image.pixels() {
        for c in 0..3 {
            hist[c * 8 + (p.0[c] >> 5) as usize] += 1.0;
        }
    }
    let (w, h) = (image.width() as i64, image.height() as i64);
    let lum = |x: i64, y: i64| -> f64 {
        let p = image.get_pixel(x as u32, y as u32).0;
        0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
    };
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = lum(x + 1, y) - lum(x - 1, y);
            let gy = lum(x, y + 1) - lum(x, y - 1);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag < 1e-12 {
                continue;
            }
            let angle = gy.atan2(gx); // (-pi, pi]
            let bin = (((angle + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * 8.0)
                .floor() as usize)
                .min(7);
            hist[24 + bin] += mag;
        }
    }
    let norm: f64 = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    let values = hist
        .iter()
        .map(|&v| cast::<S>(if norm > 0.0 { v / norm } else { 0.0 }))
        .collect();
    FeatureVector { values, extractor_id: HIST32_ID.to_string() }
}

/// One vector per line, space-separated decimals, header line with the
/// extractor id and dimension.
pub fn save_features<S: Real>(path: &Path, features: &[FeatureVector<S>]) -> Result<()> {
    let Some(first) = features.first() else {
        return Err(Error::EmptyInput("no feature vectors to save"));
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{} {}", first.extractor_id, first.dim())?;
    for f in features {
        let line: Vec<String> =
            f.values.iter().map(|v| format!("{}", v.to_f64().unwrap())).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn load_features<S: Real>(path: &Path) -> Result<Vec<FeatureVector<S>>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("feature file is empty".into()))??;
    let mut parts = header.split_whitespace();
    let extractor_id = parts
        .next()
        .ok_or_else(|| Error::Parse("feature header missing extractor id".into()))?
        .to_string();
    let dim: usize = parts
        .next()
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::Parse("feature header missing dimension".into()))?;
    let mut features = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<S> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map(cast::<S>)
                    .map_err(|_| Error::Parse(format!("bad number on line {}", i + 2)))
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::Parse(format!(
                "line {} has {} values, header says {dim}",
                i + 2,
                values.len()
            )));
        }
        features.push(FeatureVector { values, extractor_id: extractor_id.clone() });
    }
    Ok(features)
}
