//! LO-RANSAC over 2D-3D correspondences with a P3P minimal solver, and the
//! grid-deduplicated "effective inlier" count.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::correspondence::Correspondence;
use crate::error::{Error, Result};
use crate::geometry::{Camera, Pose, Vec2};
use crate::p3p::p3p;
use crate::refine::{optimize_pose_report, LmConfig};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    /// A correspondence is an inlier when its reprojection error is strictly
    /// below this (pixels).
    pub inlier_threshold_px: f64,
    pub max_iterations: usize,
    pub confidence: f64,
    /// Maximum refit rounds of each local optimization.
    pub lo_refit_rounds: usize,
    pub rng_seed: u64,
    /// Side of the square cells used to count effective inliers (pixels).
    pub cell_px: f64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            inlier_threshold_px: 4.0,
            max_iterations: 10_000,
            confidence: 0.9999,
            lo_refit_rounds: 10,
            rng_seed: 0,
            cell_px: 50.0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inlier_threshold_px > 0.0) {
            return Err(Error::InvalidConfig("inlier threshold must be positive"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidConfig("confidence must lie in (0, 1)"));
        }
        if !(self.cell_px > 0.0) {
            return Err(Error::InvalidConfig("cell size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub pose: Pose,
    /// Inlier flags in the caller's correspondence order.
    pub inlier_mask: Vec<bool>,
    pub inlier_count: usize,
    pub effective_inlier_count: usize,
    pub iterations: usize,
}

/// Number of distinct `cell_px × cell_px` cells holding at least one pixel.
/// Pixels outside the image are ignored.
pub fn effective_inliers(pixels: &[Vec2], width: u32, height: u32, cell_px: f64) -> usize {
    if !(cell_px > 0.0) {
        return 0;
    }
    let cols = (width as f64 / cell_px).ceil() as i64;
    let rows = (height as f64 / cell_px).ceil() as i64;
    let mut cells = BTreeSet::new();
    for u in pixels {
        if !(u.x >= -0.5 && u.y >= -0.5 && u.x < width as f64 - 0.5 && u.y < height as f64 - 0.5) {
            continue;
        }
        let cx = ((u.x / cell_px).floor() as i64).clamp(0, cols - 1);
        let cy = ((u.y / cell_px).floor() as i64).clamp(0, rows - 1);
        cells.insert((cx, cy));
    }
    cells.len()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Support {
    count: usize,
    /// Truncated squared error, breaks ties between equal counts.
    score: f64,
}

impl Support {
    fn better_than(&self, other: &Support) -> bool {
        match self.count.cmp(&other.count) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.score < other.score,
        }
    }
}

struct Scorer<'a> {
    corrs: &'a [Correspondence],
    camera: &'a Camera,
    threshold: f64,
}

impl Scorer<'_> {
    fn is_inlier(&self, c: &Correspondence, pose: &Pose) -> Option<f64> {
        let u = self.camera.project_camera_point(&pose.to_camera(&c.point)).ok()?;
        let e = (u - c.pixel).norm();
        (e < self.threshold).then_some(e)
    }

    fn support(&self, pose: &Pose) -> Support {
        let t2 = self.threshold * self.threshold;
        let mut s = Support { count: 0, score: 0.0 };
        for c in self.corrs {
            match self.is_inlier(c, pose) {
                Some(e) => {
                    s.count += 1;
                    s.score += e * e;
                }
                None => s.score += t2,
            }
        }
        s
    }

    fn inliers(&self, pose: &Pose) -> Vec<Correspondence> {
        self.corrs.iter().filter(|c| self.is_inlier(c, pose).is_some()).copied().collect()
    }
}

fn required_iterations(inlier_ratio: f64, confidence: f64, cap: usize) -> usize {
    let w3 = inlier_ratio.powi(3);
    if w3 >= 1.0 - 1e-12 {
        return 1;
    }
    if w3 <= 0.0 {
        return cap;
    }
    let n = (1.0 - confidence).ln() / (1.0 - w3).ln();
    if n.is_finite() && n < cap as f64 {
        (n.ceil() as usize).max(1)
    } else {
        cap
    }
}

fn canonical_order(corrs: &[Correspondence]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..corrs.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&corrs[a], &corrs[b]);
        ca.pixel
            .x
            .total_cmp(&cb.pixel.x)
            .then(ca.pixel.y.total_cmp(&cb.pixel.y))
            .then(ca.point.x.total_cmp(&cb.point.x))
            .then(ca.point.y.total_cmp(&cb.point.y))
            .then(ca.point.z.total_cmp(&cb.point.z))
    });
    order
}

/// Robust pose from 2D-3D correspondences.
///
/// Samples are drawn over the correspondences sorted by pixel, so the
/// returned pose does not depend on input order. Each new best hypothesis is
/// refit on its inliers with Levenberg-Marquardt until its support stops
/// improving or `lo_refit_rounds` is reached.
pub fn lo_ransac(
    corrs: &[Correspondence],
    camera: &Camera,
    cfg: &RansacConfig,
) -> Result<RansacResult> {
    cfg.validate()?;
    let n = corrs.len();
    if n < 3 {
        return Err(Error::TooFewCorrespondences { needed: 3, got: n });
    }
    let order = canonical_order(corrs);
    let sorted: Vec<Correspondence> = order.iter().map(|&i| corrs[i]).collect();
    let scorer = Scorer { corrs: &sorted, camera, threshold: cfg.inlier_threshold_px };
    let lm = LmConfig::default();

    let mut rng = seed::rng(cfg.rng_seed);
    let mut best: Option<(Pose, Support)> = None;
    let mut needed = cfg.max_iterations;
    let mut iterations = 0;
    while iterations < needed {
        iterations += 1;
        let idx = rand::seq::index::sample(&mut rng, n, 3);
        let sample = [sorted[idx.index(0)], sorted[idx.index(1)], sorted[idx.index(2)]];
        let Ok(models) = p3p(&sample, camera) else { continue };
        for model in models {
            let support = scorer.support(&model);
            if best.as_ref().is_some_and(|(_, b)| !support.better_than(b)) {
                continue;
            }
            let (pose, support) = local_optimization(&scorer, model, support, cfg, &lm);
            needed = required_iterations(
                support.count as f64 / n as f64,
                cfg.confidence,
                cfg.max_iterations,
            );
            best = Some((pose, support));
        }
    }

    let Some((pose, support)) = best else {
        return Err(Error::NoModelFound);
    };
    if support.count < 3 {
        return Err(Error::NoModelFound);
    }
    let mut inlier_mask = vec![false; n];
    let mut pixels = Vec::with_capacity(support.count);
    for (k, &orig) in order.iter().enumerate() {
        if scorer.is_inlier(&sorted[k], &pose).is_some() {
            inlier_mask[orig] = true;
            pixels.push(sorted[k].pixel);
        }
    }
    Ok(RansacResult {
        pose,
        inlier_count: pixels.len(),
        effective_inlier_count: effective_inliers(
            &pixels,
            camera.width(),
            camera.height(),
            cfg.cell_px,
        ),
        inlier_mask,
        iterations,
    })
}

fn local_optimization(
    scorer: &Scorer<'_>,
    mut pose: Pose,
    mut support: Support,
    cfg: &RansacConfig,
    lm: &LmConfig,
) -> (Pose, Support) {
    for _ in 0..cfg.lo_refit_rounds {
        let inliers = scorer.inliers(&pose);
        let Ok(report) = optimize_pose_report(&inliers, &pose, scorer.camera, lm) else {
            break;
        };
        let refit = scorer.support(&report.pose);
        if !refit.better_than(&support) {
            break;
        }
        pose = report.pose;
        support = refit;
    }
    (pose, support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pose_error, project, Vec3};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn camera() -> Camera {
        Camera::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    fn scene(
        truth: &Pose,
        n: usize,
        outlier_ratio: f64,
        sigma: f64,
        rng: &mut seed::Rng,
    ) -> Vec<Correspondence> {
        let cam = camera();
        let noise = Normal::new(0.0, sigma.max(1e-300)).unwrap();
        let mut out = Vec::new();
        while out.len() < n {
            let pc = Vec3::new(
                rng.random_range(-4.0..4.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(3.0..20.0),
            );
            let point = truth.to_model(&pc);
            let u = project(&point, truth, &cam).unwrap();
            if !cam.contains(&u) {
                continue;
            }
            let pixel = if (out.len() as f64) < outlier_ratio * n as f64 {
                Vec2::new(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0))
            } else if sigma > 0.0 {
                u + Vec2::new(noise.sample(rng), noise.sample(rng))
            } else {
                u
            };
            out.push(Correspondence { pixel, point });
        }
        out
    }

    fn truth() -> Pose {
        Pose::from_axis_angle(Vec3::new(0.2, -0.3, 0.1), Vec3::new(2.0, -1.0, 0.5))
    }

    #[test]
    fn outlier_free_case_recovers_everything() {
        let corrs = scene(&truth(), 100, 0.0, 0.0, &mut seed::rng(1));
        let r = lo_ransac(&corrs, &camera(), &RansacConfig::default()).unwrap();
        assert_eq!(r.inlier_count, 100);
        let e = pose_error(&truth(), &r.pose);
        assert!(e.position_err < 1e-6 && e.rotation_err < 1e-6, "{e:?}");
    }

    #[test]
    fn too_few_correspondences() {
        let corrs = scene(&truth(), 2, 0.0, 0.0, &mut seed::rng(1));
        assert_eq!(
            lo_ransac(&corrs, &camera(), &RansacConfig::default()),
            Err(Error::TooFewCorrespondences { needed: 3, got: 2 })
        );
    }

    #[test]
    fn inliers_satisfy_threshold_and_counts_are_ordered() {
        let corrs = scene(&truth(), 120, 0.3, 1.0, &mut seed::rng(4));
        let cfg = RansacConfig { rng_seed: 9, ..Default::default() };
        let r = lo_ransac(&corrs, &camera(), &cfg).unwrap();
        for (c, &m) in corrs.iter().zip(&r.inlier_mask) {
            if m {
                let u = project(&c.point, &r.pose, &camera()).unwrap();
                assert!((u - c.pixel).norm() < cfg.inlier_threshold_px);
            }
        }
        assert_eq!(r.inlier_mask.iter().filter(|&&m| m).count(), r.inlier_count);
        assert!(r.effective_inlier_count <= r.inlier_count);
        assert!(r.effective_inlier_count <= 13 * 10);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let corrs = scene(&truth(), 80, 0.3, 1.0, &mut seed::rng(21));
        let cfg = RansacConfig { rng_seed: 5, ..Default::default() };
        let a = lo_ransac(&corrs, &camera(), &cfg).unwrap();
        let b = lo_ransac(&corrs, &camera(), &cfg).unwrap();
        assert_eq!(a, b);

        let mut shuffled: Vec<(usize, Correspondence)> = corrs.iter().copied().enumerate().collect();
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut seed::rng(77));
        let perm: Vec<Correspondence> = shuffled.iter().map(|(_, c)| *c).collect();
        let c = lo_ransac(&perm, &camera(), &cfg).unwrap();
        assert_eq!(a.pose, c.pose);
        for (k, (orig, _)) in shuffled.iter().enumerate() {
            assert_eq!(c.inlier_mask[k], a.inlier_mask[*orig]);
        }
    }

    #[test]
    fn effective_inlier_examples() {
        let one_cell: Vec<Vec2> =
            (0..5).map(|k| Vec2::new(60.0 + 7.0 * k as f64, 55.0 + 5.0 * k as f64)).collect();
        assert_eq!(effective_inliers(&one_cell, 640, 480, 50.0), 1);
        let three = [Vec2::new(10.0, 10.0), Vec2::new(110.0, 10.0), Vec2::new(10.0, 110.0)];
        assert_eq!(effective_inliers(&three, 640, 480, 50.0), 3);
        assert_eq!(effective_inliers(&[], 640, 480, 50.0), 0);
    }

    #[test]
    fn iteration_bound() {
        assert_eq!(required_iterations(1.0, 0.9999, 10_000), 1);
        assert_eq!(required_iterations(0.0, 0.9999, 10_000), 10_000);
        // ln(1e-4) / ln(1 - 0.7³) = 21.93
        assert_eq!(required_iterations(0.7, 0.9999, 10_000), 22);
    }
}
