//! Per-image uncertainty of refined poses.

use std::collections::BTreeMap;

use rayon::prelude::*;
use refpose_core::uncertainty::{first_order, monte_carlo, sampling_uncertainty};
use refpose_core::{seed, NoiseModel, Pose, RansacConfig, RefineConfig};

use crate::error::{Error, Result};
use crate::format::camera::CameraTable;
use crate::format::corr::CorrTable;
use crate::format::uncertainty::UncertaintyTable;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateConfig {
    pub first_order: Option<usize>,
    pub monte_carlo: Option<usize>,
    /// `(ratio, samples)` pairs.
    pub sampling: Vec<(f64, usize)>,
    pub noise: NoiseModel,
    pub refine: RefineConfig,
    pub ransac: RansacConfig,
    pub seed: u64,
}

/// Estimates every requested uncertainty for every image in `poses`.
/// Image `name` derives its seeds from `derive(seed, hash_name(name))`.
pub fn estimate_all(
    poses: &BTreeMap<String, Pose>,
    inliers: &CorrTable,
    cameras: &CameraTable,
    cfg: &EstimateConfig,
) -> Result<UncertaintyTable> {
    let rows: Vec<Result<(String, Vec<_>)>> = poses
        .par_iter()
        .map(|(name, pose)| {
            let corrs = inliers
                .get(name)
                .ok_or_else(|| Error::Invalid(format!("no inliers for image {name:?}")))?;
            let cam = cameras.for_image(name)?;
            let base = seed::derive(cfg.seed, seed::hash_name(name));
            let ctx = |e: refpose_core::Error| Error::Invalid(format!("{name}: {e}"));
            let mut out = Vec::new();
            for (i, &(ratio, n)) in cfg.sampling.iter().enumerate() {
                let s = seed::derive(base, 2 + i as u64);
                out.push(
                    sampling_uncertainty(corrs, pose, cam, ratio, n, s, &cfg.ransac, &cfg.refine)
                        .map_err(ctx)?,
                );
            }
            if let Some(n) = cfg.first_order {
                out.push(first_order(corrs, pose, cam, &cfg.noise, n, seed::derive(base, 0)).map_err(ctx)?);
            }
            if let Some(n) = cfg.monte_carlo {
                let s = seed::derive(base, 1);
                out.push(monte_carlo(corrs, pose, cam, &cfg.noise, n, s, &cfg.refine).map_err(ctx)?);
            }
            Ok((name.clone(), out))
        })
        .collect();
    rows.into_iter().collect()
}
