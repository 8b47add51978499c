//! Writing a synthetic scene as a ready-to-run refinement input set.

use std::collections::BTreeMap;
use std::path::Path;

use refpose_core::synth::{perturb_randomly, Scene};
use refpose_core::{seed, Camera, Pose};

use crate::error::Result;
use crate::format::{self, camera::CameraTable};

pub fn view_name(i: usize) -> String {
    format!("view{i:03}")
}

/// Perturbs every view by exactly `rot_deg` and `trans_m` along random
/// directions; view `i` draws from `derived_rng(seed, i)`.
pub fn perturbed(views: &[Pose], rot_deg: f64, trans_m: f64, seed_base: u64) -> Vec<Pose> {
    views
        .iter()
        .enumerate()
        .map(|(i, v)| perturb_randomly(v, rot_deg, trans_m, &mut seed::derived_rng(seed_base, i as u64)))
        .collect()
}

/// Writes `scene.ply`, `points.txt`, `cameras.txt`, `poses_true.txt` and
/// `poses_init.txt` into `out`.
pub fn write_scene(
    out: &Path,
    scene: &Scene,
    camera: &Camera,
    views: &[Pose],
    initial: &[Pose],
) -> Result<()> {
    format::ply::write(&out.join("scene.ply"), &scene.mesh)?;
    format::points::write(&out.join("points.txt"), &scene.points)?;
    let cams = CameraTable(BTreeMap::from([("default".to_string(), *camera)]));
    format::camera::write(&out.join("cameras.txt"), &cams)?;
    let named = |poses: &[Pose]| -> BTreeMap<String, Pose> {
        poses.iter().enumerate().map(|(i, p)| (view_name(i), *p)).collect()
    };
    format::poses::write_poses(&out.join("poses_true.txt"), &named(views))?;
    format::poses::write_poses(&out.join("poses_init.txt"), &named(initial))
}
