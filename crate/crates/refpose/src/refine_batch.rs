//! Batch refinement driven by match files on disk.
//!
//! Matching happens outside this program, one iteration at a time. Every run
//! replays an image's refinement from its initial pose: round `k` renders at
//! the current estimate, writes the checkpoint
//! `<checkpoints>/<image>/iter<k>.{pose,pfm,ppm}`, and reads the matches
//! `<match_dir>/<image>/iter<k>*.txt`. When those files do not exist yet the
//! image is reported as pending on round `k`; the external matcher can then
//! use the checkpoint and the next run continues. Replays are deterministic,
//! so no other state is kept.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use refpose_core::refine::{IterationTrace, RefineResult};
use refpose_core::{
    refine, seed, Camera, Correspondence, MatchProvider, MatchSet, Pose, RansacConfig,
    RefineConfig, RenderView, TriMesh,
};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{self, poses::PoseRecord};

/// Match files of round `iteration`, sorted by name. `iter1.txt` and
/// `iter1_b.txt` belong to round 1, `iter10.txt` does not.
pub fn match_files(dir: &Path, iteration: usize) -> Result<Vec<PathBuf>> {
    let prefix = format!("iter{iteration}");
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(vec![]),
        Err(e) => return Err(Error::io(dir, e)),
    };
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(rest) = name.strip_prefix(&prefix) else { continue };
        if rest.ends_with(".txt") && !rest.starts_with(|c: char| c.is_ascii_digit()) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn checkpoint_path(dir: &Path, image: &str, iteration: usize, ext: &str) -> PathBuf {
    dir.join(image).join(format!("iter{iteration}.{ext}"))
}

struct FileMatcher<'a> {
    image: &'a str,
    match_dir: PathBuf,
    checkpoints: Option<&'a Path>,
    /// Error that must abort the whole run (parse or I/O failure).
    fatal: Option<Error>,
}

impl FileMatcher<'_> {
    fn checkpoint(&self, view: &RenderView<'_>) -> Result<()> {
        let Some(dir) = self.checkpoints else { return Ok(()) };
        let k = view.iteration;
        let mut table = format::poses::PoseTable::new();
        table.insert(self.image.to_string(), PoseRecord::from_pose(view.pose));
        format::poses::write(&checkpoint_path(dir, self.image, k, "pose"), &table)?;
        format::pfm::write(&checkpoint_path(dir, self.image, k, "pfm"), &view.rendering.depth)?;
        format::ppm::write(
            &checkpoint_path(dir, self.image, k, "ppm"),
            &view.rendering.color_image(view.mesh),
        )
    }

    fn load(&self, iteration: usize) -> Result<Vec<MatchSet>> {
        match_files(&self.match_dir, iteration)?.iter().map(|p| format::matches::read(p)).collect()
    }
}

impl MatchProvider for FileMatcher<'_> {
    fn matches(&mut self, view: &RenderView<'_>) -> refpose_core::Result<Vec<MatchSet>> {
        let k = view.iteration;
        let loaded = self.checkpoint(view).and_then(|_| self.load(k));
        match loaded {
            Ok(sets) if sets.is_empty() => Err(refpose_core::Error::MatchesUnavailable {
                iteration: k,
                reason: format!("no match file for iteration {k}"),
            }),
            Ok(sets) => Ok(sets),
            Err(e) => {
                let reason = e.to_string();
                self.fatal = Some(e);
                Err(refpose_core::Error::MatchesUnavailable { iteration: k, reason })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// All rounds ran.
    Complete,
    /// Waiting for the match files of `next_iteration`.
    Pending,
    /// A round failed; the pose of the last completed round is kept.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// World-to-camera quaternion `(w, x, y, z)` and translation.
    pub q: [f64; 4],
    pub t: [f64; 3],
    pub num_matches: usize,
    pub num_lifted: usize,
    pub inlier_count: usize,
    pub effective_inlier_count: usize,
    pub mean_reprojection_px: f64,
    pub max_reprojection_px: f64,
}

impl From<&IterationTrace> for TraceEntry {
    fn from(t: &IterationTrace) -> Self {
        let r = PoseRecord::from_pose(&t.pose);
        Self {
            iteration: t.iteration,
            q: r.q,
            t: r.t,
            num_matches: t.num_matches,
            num_lifted: t.num_lifted,
            inlier_count: t.inlier_count,
            effective_inlier_count: t.effective_inlier_count,
            mean_reprojection_px: t.mean_reprojection_px,
            max_reprojection_px: t.max_reprojection_px,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageReport {
    pub image: String,
    pub accepted: bool,
    pub status: Status,
    pub completed_iterations: usize,
    pub next_iteration: Option<usize>,
    pub reason: Option<String>,
    pub ransac_seed: u64,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineReport {
    pub seed: u64,
    pub iterations: usize,
    pub min_effective_inliers: usize,
    pub inlier_threshold_px: f64,
    pub cell_px: f64,
    pub images: Vec<ImageReport>,
}

pub struct BatchInputs<'a> {
    pub mesh: &'a TriMesh,
    pub cameras: &'a format::camera::CameraTable,
    pub initial: &'a BTreeMap<String, Pose>,
    pub match_dir: &'a Path,
    pub checkpoint_dir: Option<&'a Path>,
}

pub struct ImageOutcome {
    pub report: ImageReport,
    pub result: RefineResult,
}

pub struct BatchOutput {
    pub report: RefineReport,
    pub poses: BTreeMap<String, Pose>,
    pub inliers: BTreeMap<String, Vec<Correspondence>>,
}

/// Refines a single image; `Err` only for failures that abort the run.
pub fn refine_image(
    image: &str,
    initial: &Pose,
    camera: &Camera,
    inputs: &BatchInputs<'_>,
    cfg: &RefineConfig,
    ransac: &RansacConfig,
) -> Result<ImageOutcome> {
    let mut matcher = FileMatcher {
        image,
        match_dir: inputs.match_dir.join(image),
        checkpoints: inputs.checkpoint_dir,
        fatal: None,
    };
    let result = refine(initial, inputs.mesh, camera, &mut matcher, cfg, ransac);
    if let Some(e) = matcher.fatal {
        return Err(e);
    }
    let completed = result.trace.len();
    let (status, next, reason) = match &result.stopped_by {
        None => (Status::Complete, None, None),
        Some(refpose_core::Error::MatchesUnavailable { iteration, reason }) if *iteration > 0 => {
            (Status::Pending, Some(*iteration), Some(reason.clone()))
        }
        Some(e) => (Status::Failed, None, Some(e.to_string())),
    };
    let report = ImageReport {
        image: image.to_string(),
        accepted: result.accepted,
        status,
        completed_iterations: completed,
        next_iteration: next,
        reason,
        ransac_seed: ransac.rng_seed,
        trace: result.trace.iter().map(TraceEntry::from).collect(),
    };
    Ok(ImageOutcome { report, result })
}

/// Refines every image with an initial pose, in parallel. Image `name` uses
/// the RANSAC seed `derive(seed, hash_name(name))`, so results do not
/// depend on scheduling.
pub fn run(
    inputs: &BatchInputs<'_>,
    cfg: &RefineConfig,
    ransac: &RansacConfig,
    seed_base: u64,
) -> Result<BatchOutput> {
    let names: Vec<&String> = inputs.initial.keys().collect();
    let outcomes: Vec<Result<ImageOutcome>> = names
        .par_iter()
        .map(|name| {
            let camera = inputs.cameras.for_image(name)?;
            let ransac = RansacConfig { rng_seed: seed::derive(seed_base, seed::hash_name(name)), ..*ransac };
            let out = refine_image(name, &inputs.initial[*name], camera, inputs, cfg, &ransac)?;
            log::info!(
                "{name}: {:?} after {} rounds, accepted={}",
                out.report.status,
                out.report.completed_iterations,
                out.report.accepted
            );
            Ok(out)
        })
        .collect();

    let mut images = Vec::new();
    let mut poses = BTreeMap::new();
    let mut inliers = BTreeMap::new();
    for (name, outcome) in names.into_iter().zip(outcomes) {
        let o = outcome?;
        poses.insert(name.clone(), o.result.pose);
        if !o.result.inliers.is_empty() {
            inliers.insert(name.clone(), o.result.inliers);
        }
        images.push(o.report);
    }
    let report = RefineReport {
        seed: seed_base,
        iterations: cfg.iterations,
        min_effective_inliers: cfg.min_effective_inliers,
        inlier_threshold_px: ransac.inlier_threshold_px,
        cell_px: ransac.cell_px,
        images,
    };
    Ok(BatchOutput { report, poses, inliers })
}

/// Writes `poses_refined.txt`, `refine_report.json` and `inliers.txt`.
pub fn write_outputs(out_dir: &Path, output: &BatchOutput) -> Result<()> {
    format::poses::write_poses(&out_dir.join("poses_refined.txt"), &output.poses)?;
    format::corr::write(&out_dir.join("inliers.txt"), &output.inliers)?;
    let json = serde_json::to_string_pretty(&output.report).expect("report serializes");
    format::write_atomic(&out_dir.join("refine_report.json"), (json + "\n").as_bytes())
}
