//! Evaluation metrics: depth error, homogeneity index, FID, KID over
//! pluggable feature extractors, and the critic-scored preference protocol.

pub mod features;

use std::collections::BTreeMap;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::design::DesignerConfig;
use crate::error::{Error, Result};
use crate::gateway::remote::JsonClient;
use crate::grid::Grid;
use crate::math::linalg::{symmetric_eigenvalues, Mat};
use crate::num::{cast, Real};

pub use features::{
    default_descriptor, load_features, save_features, FeatureExtractor, FeatureVector, Hist32,
    HIST32_ID,
};

/// Depth error averages over this many captured frames in pipeline runs.
pub const DEFAULT_DEPTH_FRAMES: usize = 100;
/// FID/KID reference sets default to this many real images.
pub const DEFAULT_REFERENCE_SAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub value: f64,
    pub sample_counts: Vec<usize>,
    pub extractor_id: String,
    pub parameters: BTreeMap<String, String>,
}

impl MetricReport {
    pub fn new(metric: &str, value: f64, counts: &[usize], extractor_id: &str) -> Self {
        Self {
            metric: metric.into(),
            value,
            sample_counts: counts.to_vec(),
            extractor_id: extractor_id.into(),
            parameters: BTreeMap::new(),
        }
    }
}

/// Mean per-frame RMSE between min-max normalized depth frames, taken over
/// the intersection of foregrounds. Background texels are non-finite.
pub fn depth_error<S: Real>(pred: &[Grid<S>], truth: &[Grid<S>]) -> Result<S> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::Shape(format!(
            "{} predicted frames vs {} reference frames",
            pred.len(),
            truth.len()
        )));
    }
    let mut total = S::zero();
    for (p, t) in pred.iter().zip(truth) {
        if p.width() != t.width() || p.height() != t.height() {
            return Err(Error::Shape("depth frame dimensions differ".into()));
        }
        let np = normalize_frame(p)?;
        let nt = normalize_frame(t)?;
        let mut sum = S::zero();
        let mut count = 0usize;
        for i in 0..np.len() {
            let (a, b) = (np.data()[i], nt.data()[i]);
            if a.is_finite() && b.is_finite() {
                sum += (a - b) * (a - b);
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::DegenerateFrame);
        }
        total += (sum / cast(count as f64)).sqrt();
    }
    Ok(total / cast(pred.len() as f64))
}

fn normalize_frame<S: Real>(frame: &Grid<S>) -> Result<Grid<S>> {
    let mut min = S::infinity();
    let mut max = S::neg_infinity();
    for &v in frame.data() {
        if v.is_finite() {
            min = min.min(v);
            max = max.max(v);
        }
    }
    if !min.is_finite() {
        return Err(Error::DegenerateFrame);
    }
    let range = max - min;
    Ok(frame.map(|&v| {
        if !v.is_finite() {
            S::infinity()
        } else if range > S::zero() {
            (v - min) / range
        } else {
            S::zero()
        }
    }))
}

fn cosine<S: Real>(a: &FeatureVector<S>, b: &FeatureVector<S>) -> S {
    let dot: S = a.values.iter().zip(&b.values).map(|(&x, &y)| x * y).sum();
    let na = a.norm();
    let nb = b.norm();
    if na > S::zero() && nb > S::zero() {
        dot / (na * nb)
    } else {
        S::zero()
    }
}

/// Mean pairwise cosine similarity of extracted features; lower means more
/// diverse scenes.
pub fn homogeneity_index<S: Real>(
    images: &[RgbImage],
    extractor: &dyn FeatureExtractor<S>,
) -> Result<S> {
    let features: Vec<FeatureVector<S>> =
        images.iter().map(|img| extractor.extract(img)).collect();
    homogeneity_of_features(&features)
}

pub fn homogeneity_of_features<S: Real>(features: &[FeatureVector<S>]) -> Result<S> {
    if features.len() < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: features.len() });
    }
    check_consistent(features)?;
    let mut sum = S::zero();
    let mut pairs = 0usize;
    for i in 0..features.len() {
        for j in (i + 1)..features.len() {
            sum += cosine(&features[i], &features[j]);
            pairs += 1;
        }
    }
    Ok(sum / cast(pairs as f64))
}

fn check_consistent<S: Real>(features: &[FeatureVector<S>]) -> Result<()> {
    let first = &features[0];
    for f in features {
        if f.extractor_id != first.extractor_id {
            return Err(Error::ExtractorMismatch(format!(
                "{} vs {}",
                f.extractor_id, first.extractor_id
            )));
        }
        if f.dim() != first.dim() {
            return Err(Error::ExtractorMismatch(format!(
                "dimension {} vs {}",
                f.dim(),
                first.dim()
            )));
        }
    }
    Ok(())
}

fn check_two_sets<S: Real>(a: &[FeatureVector<S>], b: &[FeatureVector<S>]) -> Result<()> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: a.len().min(b.len()) });
    }
    check_consistent(a)?;
    check_consistent(b)?;
    if a[0].extractor_id != b[0].extractor_id || a[0].dim() != b[0].dim() {
        return Err(Error::ExtractorMismatch(format!(
            "{}({}) vs {}({})",
            a[0].extractor_id,
            a[0].dim(),
            b[0].extractor_id,
            b[0].dim()
        )));
    }
    Ok(())
}

fn mean_and_cov<S: Real>(set: &[FeatureVector<S>]) -> (Vec<S>, Mat<S>) {
    let d = set[0].dim();
    let n = set.len();
    let inv_n: S = S::one() / cast(n as f64);
    let mut mean = vec![S::zero(); d];
    for f in set {
        for (m, &v) in mean.iter_mut().zip(&f.values) {
            *m += v * inv_n;
        }
    }
    let mut cov = Mat::zeros(d);
    let denom: S = cast((n - 1) as f64);
    for f in set {
        for i in 0..d {
            let di = f.values[i] - mean[i];
            for j in 0..d {
                let dj = f.values[j] - mean[j];
                *cov.at_mut(i, j) += di * dj / denom;
            }
        }
    }
    (mean, cov)
}

/// Frechet distance between Gaussian fits of the two feature sets. The
/// matrix square root comes from the symmetric eigendecomposition of the
/// symmetrized product, negative eigenvalues clamped at zero.
pub fn fid<S: Real>(a: &[FeatureVector<S>], b: &[FeatureVector<S>]) -> Result<S> {
    check_two_sets(a, b)?;
    let (mu_a, cov_a) = mean_and_cov(a);
    let (mu_b, cov_b) = mean_and_cov(b);
    let mean_term: S = mu_a
        .iter()
        .zip(&mu_b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    let product = cov_a.mul(&cov_b).symmetrized();
    let sqrt_trace: S = symmetric_eigenvalues(&product)
        .into_iter()
        .map(|l| l.max(S::zero()).sqrt())
        .sum();
    Ok(mean_term + cov_a.trace() + cov_b.trace() - cast::<S>(2.0) * sqrt_trace)
}

fn poly_kernel<S: Real>(x: &[S], y: &[S], d: S) -> S {
    let dot: S = x.iter().zip(y).map(|(&a, &b)| a * b).sum();
    let v = dot / d + S::one();
    v * v * v
}

/// Unbiased MMD^2 with the cubic polynomial kernel, single full-batch
/// estimate. With equally sized sets the paired-sample U-statistic is used,
/// which is exactly zero on identical sets.
pub fn kid_unbiased<S: Real>(a: &[FeatureVector<S>], b: &[FeatureVector<S>]) -> Result<S> {
    check_two_sets(a, b)?;
    let d: S = cast(a[0].dim() as f64);
    let (m, n) = (a.len(), b.len());
    let mut sum_aa = S::zero();
    for i in 0..m {
        for j in 0..m {
            if i != j {
                sum_aa += poly_kernel(&a[i].values, &a[j].values, d);
            }
        }
    }
    let mut sum_bb = S::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum_bb += poly_kernel(&b[i].values, &b[j].values, d);
            }
        }
    }
    let mm: S = cast((m * (m - 1)) as f64);
    let nn: S = cast((n * (n - 1)) as f64);
    if m == n {
        let mut sum_ab = S::zero();
        for i in 0..m {
            for j in 0..n {
                if i != j {
                    sum_ab += poly_kernel(&a[i].values, &b[j].values, d);
                }
            }
        }
        Ok(sum_aa / mm + sum_bb / nn - cast::<S>(2.0) * sum_ab / mm)
    } else {
        let mut sum_ab = S::zero();
        for fa in a {
            for fb in b {
                sum_ab += poly_kernel(&fa.values, &fb.values, d);
            }
        }
        Ok(sum_aa / mm + sum_bb / nn - cast::<S>(2.0) * sum_ab / cast((m * n) as f64))
    }
}

/// Reported KID: the unbiased estimate clamped at zero.
pub fn kid<S: Real>(a: &[FeatureVector<S>], b: &[FeatureVector<S>]) -> Result<S> {
    Ok(kid_unbiased(a, b)?.max(S::zero()))
}

/// Critic-assigned 1-10 rating of scene snapshots, averaged. The mock
/// critic scores a constant 7.
pub fn preference_score(snapshots: &[RgbImage], cfg: &DesignerConfig) -> Result<f64> {
    if snapshots.is_empty() {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    if cfg.mock || cfg.endpoint.is_none() {
        return Ok(7.0);
    }
    let endpoint = cfg.endpoint.as_deref().unwrap();
    let mut content = vec![serde_json::json!({
        "type": "text",
        "text": format!(
            "Score each of the {} snapshots of a generated 3D urban scene from 1 to 10, \
             considering texture sophistication and geometric completeness. Respond with a \
             line containing only SCORES: followed by one line per snapshot, formatted as\n\
             <index>: <score>\nIndices start at 0.",
            snapshots.len()
        ),
    })];
    for snap in snapshots {
        let b64 = crate::imageio::b64_encode(&crate::imageio::png_bytes_rgb(snap)?);
        content.push(serde_json::json!({
            "type": "image_url",
            "image_url": {"url": format!("data:image/png;base64,{b64}")}
        }));
    }
    let body = serde_json::json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": [{"role": "user", "content": content}],
    });
    let client = JsonClient::new(cfg.timeout_s, cfg.retries, cfg.max_inflight);
    let resp = client.post_json(endpoint, &body).map_err(Error::CriticUnavailable)?;
    let message = resp
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::MalformedDesign("critic response has no content".into()))?;
    parse_scores(message, snapshots.len())
}

/// Parse the `SCORES:` block, clamping each value into [1, 10].
pub fn parse_scores(content: &str, expected: usize) -> Result<f64> {
    let mut scores = Vec::new();
    let mut in_block = false;
    for line in content.lines() {
        let line = line.trim();
        if line == "SCORES:" {
            in_block = true;
            continue;
        }
        if !in_block || line.is_empty() {
            continue;
        }
        if let Some((_, value)) = line.split_once(':') {
            let v: f64 = value.trim().parse().map_err(|_| {
                Error::MalformedDesign(format!("bad score value `{}`", value.trim()))
            })?;
            scores.push(v.clamp(1.0, 10.0));
        }
    }
    if scores.len() != expected {
        return Err(Error::MalformedDesign(format!(
            "expected {expected} scores, got {}",
            scores.len()
        )));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vector(values: Vec<f64>) -> FeatureVector<f64> {
        FeatureVector { values, extractor_id: "test".into() }
    }

    fn frame(values: &[f64]) -> Grid<f64> {
        Grid::from_vec(values.len(), 1, values.to_vec())
    }

    /// Box-Muller standard normals, deterministic per seed.
    fn gaussians(seed: u64, n: usize, dim: usize, mean: &[f64]) -> Vec<FeatureVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let values = (0..dim)
                    .map(|k| {
                        let u1: f64 = rng.random::<f64>().max(1e-12);
                        let u2: f64 = rng.random();
                        let z =
                            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                        z + mean[k]
                    })
                    .collect();
                vector(values)
            })
            .collect()
    }

    #[test]
    fn depth_error_identity_is_zero() {
        let frames = vec![frame(&[0.5, 1.0, 2.0]), frame(&[3.0, 4.0, 5.0])];
        assert_eq!(depth_error(&frames, &frames).unwrap(), 0.0);
    }

    #[test]
    fn depth_error_of_swapped_extremes_is_one() {
        let truth = vec![frame(&[0.0, 1.0])];
        let pred = vec![frame(&[1.0, 0.0])];
        assert!((depth_error(&pred, &truth).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depth_error_is_affine_invariant() {
        let truth = vec![frame(&[1.0, 3.0, 7.0, 2.0]), frame(&[0.5, 0.9, 0.1, 0.4])];
        let pred = vec![frame(&[2.0, 2.5, 6.5, 3.0]), frame(&[0.6, 1.0, 0.2, 0.3])];
        let base = depth_error(&pred, &truth).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = 0.1 + 10.0 * rng.random::<f64>();
            let b = -50.0 + 100.0 * rng.random::<f64>();
            let map = |fs: &[Grid<f64>]| -> Vec<Grid<f64>> {
                fs.iter().map(|f| f.map(|&v| a * v + b)).collect()
            };
            let scaled = depth_error(&map(&pred), &map(&truth)).unwrap();
            assert!((scaled - base).abs() < 1e-9, "{scaled} vs {base}");
        }
    }

    #[test]
    fn depth_error_rejects_mismatched_shapes_and_empty_frames() {
        let a = vec![frame(&[1.0, 2.0])];
        let b = vec![frame(&[1.0, 2.0, 3.0])];
        assert!(matches!(depth_error(&a, &b), Err(Error::Shape(_))));
        let empty = vec![frame(&[f64::INFINITY, f64::INFINITY])];
        assert!(matches!(depth_error(&empty, &empty), Err(Error::DegenerateFrame)));
    }

    #[test]
    fn pipeline_constants_match_the_protocol() {
        assert_eq!(DEFAULT_DEPTH_FRAMES, 100);
        assert_eq!(DEFAULT_REFERENCE_SAMPLES, 1000);
    }

    #[test]
    fn homogeneity_of_identical_images_is_one() {
        let img = {
            let mut i = RgbImage::new(8, 8);
            for y in 0..8 {
                for x in 0..8 {
                    i.put_pixel(x, y, image::Rgb([(x * 30) as u8, (y * 30) as u8, 9]));
                }
            }
            i
        };
        let images = vec![img.clone(), img.clone(), img];
        let hi: f64 = homogeneity_index(&images, &Hist32).unwrap();
        assert!((hi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn homogeneity_of_orthogonal_features_is_zero() {
        let a = vector(vec![1.0, 0.0, 0.0]);
        let b = vector(vec![0.0, 1.0, 0.0]);
        assert_eq!(homogeneity_of_features(&[a, b]).unwrap(), 0.0);
    }

    #[test]
    fn homogeneity_means_over_pairs() {
        let a = vector(vec![1.0, 0.0]);
        let b = vector(vec![1.0, 0.0]);
        let c = vector(vec![0.0, 1.0]);
        // pairwise cosines: (a,b)=1, (a,c)=0, (b,c)=0
        let hi = homogeneity_of_features(&[a, b, c]).unwrap();
        assert!((hi - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneity_needs_two_samples() {
        let a = vector(vec![1.0]);
        assert!(matches!(
            homogeneity_of_features(&[a]),
            Err(Error::InsufficientSamples { need: 2, got: 1 })
        ));
    }

    #[test]
    fn fid_of_a_set_with_itself_is_zero() {
        let set = gaussians(1, 64, 4, &[0.0; 4]);
        let v = fid(&set, &set).unwrap();
        assert!(v.abs() <= 1e-6, "fid(A,A) = {v}");
    }

    #[test]
    fn fid_matches_closed_form_for_shifted_gaussians() {
        // oracle: Frechet distance between N(0,I) and N(mu,I) is |mu|^2
        let mu = [0.8, -0.5, 0.3, 1.1];
        let a = gaussians(2, 10_000, 4, &[0.0; 4]);
        let b = gaussians(3, 10_000, 4, &mu);
        let expected: f64 = mu.iter().map(|m| m * m).sum();
        let v = fid(&a, &b).unwrap();
        assert!(
            (v - expected).abs() / expected < 0.05,
            "fid = {v}, closed form = {expected}"
        );
    }

    #[test]
    fn fid_is_symmetric_and_rejects_mismatches() {
        let a = gaussians(4, 128, 3, &[0.0; 3]);
        let b = gaussians(5, 128, 3, &[1.0, 0.0, -1.0]);
        let ab = fid(&a, &b).unwrap();
        let ba = fid(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-9);
        assert!(ab >= -1e-9);

        let mut odd = gaussians(6, 8, 2, &[0.0; 2]);
        odd[0].extractor_id = "other".into();
        assert!(matches!(fid(&odd, &odd), Err(Error::ExtractorMismatch(_))));
    }

    #[test]
    fn kid_raw_is_zero_on_identical_sets() {
        let set = gaussians(7, 100, 4, &[0.2; 4]);
        let raw = kid_unbiased(&set, &set).unwrap();
        assert!(raw.abs() <= 1e-6, "raw kid(A,A) = {raw}");
        assert_eq!(kid(&set, &set).unwrap().max(0.0), kid(&set, &set).unwrap());
    }

    #[test]
    fn kid_is_symmetric() {
        let a = gaussians(8, 80, 4, &[0.0; 4]);
        let b = gaussians(9, 80, 4, &[1.0; 4]);
        let ab = kid_unbiased(&a, &b).unwrap();
        let ba = kid_unbiased(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-9);
    }

    #[test]
    fn kid_separates_shifted_gaussians() {
        let a = gaussians(10, 10_000, 4, &[0.0; 4]);
        let b = gaussians(11, 10_000, 4, &[3.0; 4]);
        let v = kid(&a, &b).unwrap();
        assert!(v > 0.0);

        // oracle: direct MMD computation, means of the three kernel blocks
        // accumulated independently in f64
        let d = 4.0;
        let kernel = |x: &[f64], y: &[f64]| {
            let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            (dot / d + 1.0).powi(3)
        };
        let block = |s: &[FeatureVector<f64>], t: &[FeatureVector<f64>], skip_diag: bool| {
            let mut sum = 0.0;
            let mut cnt = 0usize;
            for (i, x) in s.iter().enumerate() {
                for (j, y) in t.iter().enumerate() {
                    if skip_diag && i == j {
                        continue;
                    }
                    sum += kernel(&x.values, &y.values);
                    cnt += 1;
                }
            }
            sum / cnt as f64
        };
        let oracle = block(&a, &a, true) + block(&b, &b, true) - 2.0 * block(&a, &b, true);
        assert!((v - oracle).abs() < 1e-9 * oracle.abs().max(1.0), "{v} vs oracle {oracle}");
        assert!(oracle > 0.0);
    }

    #[test]
    fn kid_needs_two_samples_per_set() {
        let a = gaussians(12, 1, 2, &[0.0; 2]);
        let b = gaussians(13, 5, 2, &[0.0; 2]);
        assert!(matches!(kid(&a, &b), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn mock_preference_score_is_constant_seven() {
        let snaps = vec![RgbImage::new(4, 4), RgbImage::new(4, 4)];
        let score = preference_score(&snaps, &DesignerConfig::default()).unwrap();
        assert_eq!(score, 7.0);
    }

    #[test]
    fn scores_average_and_clamp() {
        assert_eq!(parse_scores("SCORES:\n0: 10\n1: 4\n", 2).unwrap(), 7.0);
        assert_eq!(parse_scores("SCORES:\n0: 12\n", 1).unwrap(), 10.0);
        assert_eq!(parse_scores("SCORES:\n0: -3\n", 1).unwrap(), 1.0);
        assert!(matches!(
            parse_scores("SCORES:\n0: high\n", 1),
            Err(Error::MalformedDesign(_))
        ));
    }
}
