//! Localization accuracy: fixed pose-error thresholds, per-image
//! uncertainty thresholds, and the maximum reprojection difference.
//!
//! Every comparison is strict: an error equal to its threshold does not count.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;


use crate::error::{Error, Result};
use crate::geometry::{project, Camera, Pose, PoseError, Vec3};
use crate::uncertainty::UncertaintyEstimate;

pub use crate::uncertainty::SAMPLING_RATIOS;

pub const REPROJECTION_THRESHOLDS_PX: [f64; 4] = [10.0, 20.0, 50.0, 100.0];

/// Pose thresholds as (position m, rotation deg), non-decreasing in both.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ThresholdSet(Vec<(f64, f64)>);

impl ThresholdSet {
    pub fn new(thresholds: Vec<(f64, f64)>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::EmptyInput);
        }
        if thresholds.iter().any(|&(c, r)| !(c >= 0.0 && r >= 0.0)) {
            return Err(Error::InvalidConfig("thresholds must be non-negative"));
        }
        if thresholds.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1) {
            return Err(Error::InvalidConfig("thresholds must be non-decreasing"));
        }
        Ok(Self(thresholds))
    }

    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for ThresholdSet {
    /// (0.25 m, 2°), (0.5 m, 5°), (5 m, 10°).
    fn default() -> Self {
        Self(alloc::vec![(0.25, 2.0), (0.5, 5.0), (5.0, 10.0)])
    }
}

fn percent(count: usize, total: usize) -> f64 {
    100.0 * count as f64 / total as f64
}

/// Percentage of images with `position_err < c_j` and `rotation_err < r_j`,
/// for each threshold `j`.
pub fn fixed_threshold_accuracy(errors: &[PoseError], thresholds: &ThresholdSet) -> Result<Vec<f64>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(thresholds
        .as_slice()
        .iter()
        .map(|&(c, r)| {
            let n = errors.iter().filter(|e| e.position_err < c && e.rotation_err < r).count();
            percent(n, errors.len())
        })
        .collect())
}

/// Percentage of images whose error is below that image's own uncertainty.
pub fn per_image_threshold_accuracy(
    errors: &[PoseError],
    thresholds: &[UncertaintyEstimate],
) -> Result<f64> {
    if errors.len() != thresholds.len() {
        return Err(Error::LengthMismatch { expected: errors.len(), got: thresholds.len() });
    }
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = errors
        .iter()
        .zip(thresholds)
        .filter(|(e, t)| e.position_err < t.position_unc && e.rotation_err < t.rotation_unc)
        .count();
    Ok(percent(n, errors.len()))
}

/// Largest pixel distance between the projections of `points` under the two
/// poses. `+∞` when any point is behind either camera.
pub fn max_reprojection_diff(
    reference: &Pose,
    estimate: &Pose,
    points: &[Vec3],
    camera: &Camera,
) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut worst = 0.0f64;
    for p in points {
        match (project(p, reference, camera), project(p, estimate, camera)) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).norm()),
            _ => return Ok(f64::INFINITY),
        }
    }
    Ok(worst)
}

/// Percentage of `r_values` strictly below each threshold.
pub fn reprojection_accuracy(r_values: &[f64], thresholds_px: &[f64]) -> Result<Vec<f64>> {
    if r_values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(thresholds_px
        .iter()
        .map(|&t| percent(r_values.iter().filter(|&&r| r < t).count(), r_values.len()))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ImageEval {
    pub name: String,
    pub position_err: f64,
    pub rotation_err: f64,
    /// Serialized as `null` when infinite.
    pub max_reprojection_px: f64,
}

/// Accuracy against one family of per-image thresholds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SourceAccuracy {
    /// `sampling-0.5`, `first-order`, ...
    pub source: String,
    pub percentage: f64,
    /// First-order and Monte Carlo thresholds under-estimate the true error
    /// and are kept out of the headline table.
    pub underestimates_accuracy: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EvalReport {
    pub reference_source: String,
    pub comparison: String,
    pub pose_thresholds: ThresholdSet,
    pub reprojection_thresholds_px: Vec<f64>,
    pub pose_accuracy: Vec<f64>,
    pub per_image_accuracy: Vec<SourceAccuracy>,
    pub reprojection_accuracy: Vec<f64>,
    pub images: Vec<ImageEval>,
}

impl EvalReport {
    /// Builds the report from per-image results. `per_image` holds one
    /// threshold list per uncertainty source, each aligned with `images`.
    pub fn build(
        reference_source: impl Into<String>,
        images: Vec<ImageEval>,
        pose_thresholds: ThresholdSet,
        reprojection_thresholds_px: Vec<f64>,
        per_image: &[(String, Vec<UncertaintyEstimate>)],
    ) -> Result<Self> {
        let errors: Vec<PoseError> = images
            .iter()
            .map(|i| PoseError { position_err: i.position_err, rotation_err: i.rotation_err })
            .collect();
        let r: Vec<f64> = images.iter().map(|i| i.max_reprojection_px).collect();
        let pose_accuracy = fixed_threshold_accuracy(&errors, &pose_thresholds)?;
        let reproj = reprojection_accuracy(&r, &reprojection_thresholds_px)?;
        let per_image_accuracy = per_image
            .iter()
            .map(|(source, t)| {
                Ok(SourceAccuracy {
                    source: source.clone(),
                    percentage: per_image_threshold_accuracy(&errors, t)?,
                    underestimates_accuracy: !source.starts_with("sampling"),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            reference_source: reference_source.into(),
            comparison: String::from("strict <"),
            pose_thresholds,
            reprojection_thresholds_px,
            pose_accuracy,
            per_image_accuracy,
            reprojection_accuracy: reproj,
            images,
        })
    }

    /// Fixed-width summary: pose error, sampling thresholds and reprojection
    /// difference columns, one row for `method`.
    pub fn table(&self, method: &str) -> String {
        let join = |v: &[String]| v.join(" / ");
        let pose_head: Vec<String> = self
            .pose_thresholds
            .as_slice()
            .iter()
            .map(|(c, r)| alloc::format!("{c}m,{r}deg"))
            .collect();
        let sampling: Vec<&SourceAccuracy> =
            self.per_image_accuracy.iter().filter(|s| !s.underestimates_accuracy).collect();
        let samp_head: Vec<String> = sampling
            .iter()
            .map(|s| s.source.trim_start_matches("sampling-").into())
            .collect();
        let reproj_head: Vec<String> =
            self.reprojection_thresholds_px.iter().map(|t| alloc::format!("{t}")).collect();

        let pct = |v: &mut dyn Iterator<Item = f64>| -> Vec<String> {
            v.map(|p| alloc::format!("{p:.1}")).collect()
        };
        let cols = [
            (alloc::format!("Pose Error ({})", join(&pose_head)), join(&pct(&mut self.pose_accuracy.iter().copied()))),
            (
                alloc::format!("Sampling ({})", join(&samp_head)),
                join(&pct(&mut sampling.iter().map(|s| s.percentage))),
            ),
            (
                alloc::format!("Reprojection Diff. ({} px)", join(&reproj_head)),
                join(&pct(&mut self.reprojection_accuracy.iter().copied())),
            ),
        ];
        let name_w = method.len().max(6);
        let mut out = String::new();
        let _ = write!(out, "{:<name_w$}", "Method");
        for (head, body) in &cols {
            let w = head.chars().count().max(body.len());
            let _ = write!(out, " | {head:<w$}");
        }
        out.push('\n');
        let _ = write!(out, "{method:<name_w$}");
        for (head, body) in &cols {
            let w = head.chars().count().max(body.len());
            let _ = write!(out, " | {body:<w$}");
        }
        out.push('\n');
        out
    }
}
