//! File-based stand-in for an external matcher: answers every pending
//! refinement checkpoint with simulated matches against known true poses.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use refpose_core::geometry::Vec3;
use refpose_core::synth::{simulate_matches, SimMatcherSpec};
use refpose_core::{seed, Pose};

use crate::error::{Error, Result};
use crate::format;
use crate::refine_batch::{checkpoint_path, match_files};

/// For each image and each checkpoint pose `iter<k>.pose` without match
/// files, writes `<match_dir>/<image>/iter<k>.txt`. Round `k` of image `name`
/// uses the seed `derive(derive(spec.rng_seed, hash_name(name)), k)`.
/// Returns the number of files written.
pub fn answer_checkpoints(
    points: &[Vec3],
    truth: &BTreeMap<String, Pose>,
    cameras: &format::camera::CameraTable,
    checkpoint_dir: &Path,
    match_dir: &Path,
    spec: &SimMatcherSpec,
) -> Result<usize> {
    let written: Vec<Result<usize>> = truth
        .par_iter()
        .map(|(name, true_pose)| {
            let camera = cameras.for_image(name)?;
            let image_seed = seed::derive(spec.rng_seed, seed::hash_name(name));
            let mut count = 0;
            for k in 0.. {
                let ckpt = checkpoint_path(checkpoint_dir, name, k, "pose");
                if !ckpt.exists() {
                    break;
                }
                let dir = match_dir.join(name);
                if !match_files(&dir, k)?.is_empty() {
                    continue;
                }
                let table = format::poses::read(&ckpt)?;
                let render_pose = table
                    .get(name)
                    .ok_or_else(|| Error::Invalid(format!("{}: no pose for {name}", ckpt.display())))?
                    .to_pose();
                let spec = SimMatcherSpec { rng_seed: seed::derive(image_seed, k as u64), ..*spec };
                let m = simulate_matches(points, &render_pose, true_pose, camera, &spec)?;
                let m = refpose_core::MatchSet::new(name.as_str(), format!("render_iter{k}"), m.pairs().to_vec())?;
                format::matches::write(&dir.join(format!("iter{k}.txt")), &m)?;
                count += 1;
            }
            Ok(count)
        })
        .collect();
    written.into_iter().sum()
}
