//! Pose refinement: Levenberg-Marquardt over 2D-3D inliers, and the
//! render → match → lift → LO-RANSAC → optimize loop around it.
//!
//! Pose updates are right-multiplicative, `T ← T ∘ (Exp(φ), ρ)`, with the
//! 6-vector step ordered `(ρ, φ)`: translation first, both in the camera frame.

use alloc::vec::Vec;

use nalgebra::{Matrix2x6, Matrix3, Matrix6, Vector6};

use crate::correspondence::{lift_all, Correspondence, MatchSet};
use crate::error::{Error, Result};
use crate::geometry::{pose_error, Camera, Pose, Vec2};
use crate::ransac::{effective_inliers, lo_ransac, RansacConfig};
use crate::render::{render, Rendering, TriMesh};

/// Damping is raised by this factor after a rejected step.
const LAMBDA_UP: f64 = 10.0;
/// ...and scaled by this factor after an accepted one.
const LAMBDA_DOWN: f64 = 0.3;
const LAMBDA_MAX: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_steps: usize,
    pub tol_grad: f64,
    pub tol_step: f64,
    pub lambda_init: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { max_steps: 100, tol_grad: 1e-10, tol_step: 1e-12, lambda_init: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    /// Render-match-estimate rounds.
    pub iterations: usize,
    /// A refinement is accepted when the effective inlier count is strictly
    /// greater than this.
    pub min_effective_inliers: usize,
    pub lm_max_steps: usize,
    pub lm_tol_grad: f64,
    pub lm_tol_step: f64,
    pub lm_lambda_init: f64,
    /// Stop early once the center moves less than this (meters) in a round.
    /// Disabled when `None`.
    pub early_exit_step: Option<f64>,
}

impl Default for RefineConfig {
    fn default() -> Self {
        let lm = LmConfig::default();
        Self {
            iterations: 5,
            min_effective_inliers: 10,
            lm_max_steps: lm.max_steps,
            lm_tol_grad: lm.tol_grad,
            lm_tol_step: lm.tol_step,
            lm_lambda_init: lm.lambda_init,
            early_exit_step: None,
        }
    }
}

impl RefineConfig {
    pub fn lm(&self) -> LmConfig {
        LmConfig {
            max_steps: self.lm_max_steps,
            tol_grad: self.lm_tol_grad,
            tol_step: self.lm_tol_step,
            lambda_init: self.lm_lambda_init,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1"));
        }
        if !(self.lm_lambda_init > 0.0) {
            return Err(Error::InvalidConfig("initial damping must be positive"));
        }
        Ok(())
    }
}

/// Reprojection residual `π(p, T) - u` and its Jacobian with respect to the
/// `(ρ, φ)` pose perturbation.
pub fn residual_and_jacobian(
    corr: &Correspondence,
    pose: &Pose,
    camera: &Camera,
) -> Result<(Vec2, Matrix2x6<f64>)> {
    let p_c = pose.to_camera(&corr.point);
    let (u, dpix) = camera.project_with_jacobian(&p_c)?;
    // d p_c / d ρ = -I,  d p_c / d φ = [p_c]×
    let skew = Matrix3::new(0.0, -p_c.z, p_c.y, p_c.z, 0.0, -p_c.x, -p_c.y, p_c.x, 0.0);
    let mut j = Matrix2x6::zeros();
    j.fixed_view_mut::<2, 3>(0, 0).copy_from(&(-dpix));
    j.fixed_view_mut::<2, 3>(0, 3).copy_from(&(dpix * skew));
    Ok((u - corr.pixel, j))
}

/// Sum of squared reprojection errors; `None` if a point is behind the camera.
pub fn total_cost(corrs: &[Correspondence], pose: &Pose, camera: &Camera) -> Option<f64> {
    let mut cost = 0.0;
    for c in corrs {
        let u = camera.project_camera_point(&pose.to_camera(&c.point)).ok()?;
        cost += (u - c.pixel).norm_squared();
    }
    Some(cost)
}

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    StepSize,
    MaxSteps,
    /// Damping exceeded its ceiling without finding a cheaper pose.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub pose: Pose,
    pub initial_cost: f64,
    pub final_cost: f64,
    /// Cost after every accepted step, in order.
    pub accepted_costs: Vec<f64>,
    pub steps: usize,
    pub termination: Termination,
}

/// Local minimizer of the summed squared reprojection error, starting from
/// `initial`.
pub fn optimize_pose(
    inliers: &[Correspondence],
    initial: &Pose,
    camera: &Camera,
    cfg: &RefineConfig,
) -> Result<Pose> {
    optimize_pose_report(inliers, initial, camera, &cfg.lm()).map(|r| r.pose)
}

pub fn optimize_pose_report(
    inliers: &[Correspondence],
    initial: &Pose,
    camera: &Camera,
    cfg: &LmConfig,
) -> Result<LmReport> {
    if inliers.len() < 3 {
        return Err(Error::TooFewCorrespondences { needed: 3, got: inliers.len() });
    }
    // points behind the start pose do not take part
    let active: Vec<Correspondence> = inliers
        .iter()
        .filter(|c| camera.project_camera_point(&initial.to_camera(&c.point)).is_ok())
        .copied()
        .collect();
    if active.len() < 3 {
        return Err(Error::DivergedBehindCamera);
    }

    let mut pose = *initial;
    let mut cost = total_cost(&active, &pose, camera).ok_or(Error::DivergedBehindCamera)?;
    let initial_cost = cost;
    let mut lambda = cfg.lambda_init;
    let mut accepted_costs = Vec::new();
    let mut steps = 0;
    let mut termination = Termination::MaxSteps;

    'outer: while steps < cfg.max_steps {
        let mut h = Matrix6::zeros();
        let mut g = Vector6::zeros();
        for c in &active {
            let (r, j) = residual_and_jacobian(c, &pose, camera)?;
            h += j.transpose() * j;
            g += j.transpose() * r;
        }
        if g.amax() <= cfg.tol_grad {
            termination = Termination::Gradient;
            break;
        }
        let diag_floor = 1e-12 * h.diagonal().amax().max(1e-300);
        loop {
            steps += 1;
            let mut a = h;
            for k in 0..6 {
                a[(k, k)] += lambda * h[(k, k)].max(diag_floor);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-g)),
                None => {
                    lambda *= LAMBDA_UP;
                    if lambda > LAMBDA_MAX {
                        termination = Termination::Stalled;
                        break 'outer;
                    }
                    continue;
                }
            };
            if step.norm() <= cfg.tol_step * (1.0 + pose.center().norm()) {
                termination = Termination::StepSize;
                break 'outer;
            }
            let candidate = pose.retract(&step);
            match total_cost(&active, &candidate, camera) {
                Some(c) if c < cost => {
                    pose = candidate;
                    cost = c;
                    accepted_costs.push(c);
                    lambda = (lambda * LAMBDA_DOWN).max(1e-15);
                    break;
                }
                _ => {
                    lambda *= LAMBDA_UP;
                    if lambda > LAMBDA_MAX {
                        termination = Termination::Stalled;
                        break 'outer;
                    }
                }
            }
            if steps >= cfg.max_steps {
                break 'outer;
            }
        }
    }

    Ok(LmReport { pose, initial_cost, final_cost: cost, accepted_costs, steps, termination })
}

/// What a match provider gets to see for one round.
pub struct RenderView<'a> {
    /// Zero-based refinement round.
    pub iteration: usize,
    pub pose: &'a Pose,
    pub camera: &'a Camera,
    pub mesh: &'a TriMesh,
    pub rendering: &'a Rendering,
}

/// Source of real-vs-rendered matches for each refinement round.
pub trait MatchProvider {
    fn matches(&mut self, view: &RenderView<'_>) -> Result<Vec<MatchSet>>;
}

impl<F> MatchProvider for F
where
    F: FnMut(&RenderView<'_>) -> Result<Vec<MatchSet>>,
{
    fn matches(&mut self, view: &RenderView<'_>) -> Result<Vec<MatchSet>> {
        self(view)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Pose estimated in this round.
    pub pose: Pose,
    pub num_matches: usize,
    pub num_lifted: usize,
    pub inlier_count: usize,
    pub effective_inlier_count: usize,
    pub mean_reprojection_px: f64,
    pub max_reprojection_px: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineResult {
    pub pose: Pose,
    pub accepted: bool,
    pub trace: Vec<IterationTrace>,
    /// Inliers of the last completed round, lifted at its rendering pose.
    pub inliers: Vec<Correspondence>,
    /// Failure that ended the loop before all rounds ran.
    pub stopped_by: Option<Error>,
}

impl RefineResult {
    /// Pose after round `k` (zero-based), or the last one reached.
    pub fn pose_after(&self, k: usize) -> Option<&Pose> {
        self.trace.get(k).or(self.trace.last()).map(|t| &t.pose)
    }
}

/// Iterative render-and-match refinement of `initial`.
///
/// Lower-layer failures end the loop and are recorded in
/// [`RefineResult::stopped_by`]; the last good pose is kept. Acceptance is
/// decided by the last completed round's effective inlier count.
pub fn refine(
    initial: &Pose,
    mesh: &TriMesh,
    camera: &Camera,
    matcher: &mut dyn MatchProvider,
    cfg: &RefineConfig,
    ransac: &RansacConfig,
) -> RefineResult {
    let mut result = RefineResult {
        pose: *initial,
        accepted: false,
        trace: Vec::new(),
        inliers: Vec::new(),
        stopped_by: None,
    };
    if let Err(e) = cfg.validate().and_then(|_| ransac.validate()) {
        result.stopped_by = Some(e);
        return result;
    }
    for iteration in 0..cfg.iterations {
        match refine_round(iteration, &result.pose, mesh, camera, matcher, cfg, ransac) {
            Ok((trace, inliers)) => {
                let moved = pose_error(&result.pose, &trace.pose).position_err;
                result.pose = trace.pose;
                result.accepted = trace.effective_inlier_count > cfg.min_effective_inliers;
                result.inliers = inliers;
                result.trace.push(trace);
                if cfg.early_exit_step.is_some_and(|tol| moved < tol) {
                    break;
                }
            }
            Err(e) => {
                result.stopped_by = Some(e);
                break;
            }
        }
    }
    result
}

fn refine_round(
    iteration: usize,
    pose: &Pose,
    mesh: &TriMesh,
    camera: &Camera,
    matcher: &mut dyn MatchProvider,
    cfg: &RefineConfig,
    ransac: &RansacConfig,
) -> Result<(IterationTrace, Vec<Correspondence>)> {
    let rendering = render(mesh, pose, camera);
    let view = RenderView { iteration, pose, camera, mesh, rendering: &rendering };
    let sets = matcher.matches(&view)?;
    let num_matches = sets.iter().map(MatchSet::len).sum();
    let lifted = lift_all(&sets, &rendering.depth, pose, camera);
    let corrs = lifted.correspondences;

    let round_cfg = RansacConfig {
        rng_seed: crate::seed::derive(ransac.rng_seed, iteration as u64),
        ..*ransac
    };
    let found = lo_ransac(&corrs, camera, &round_cfg)?;
    let inliers: Vec<Correspondence> = corrs
        .iter()
        .zip(&found.inlier_mask)
        .filter_map(|(c, &keep)| keep.then_some(*c))
        .collect();
    let refined = optimize_pose(&inliers, &found.pose, camera, cfg)?;

    let mut sum = 0.0;
    let mut max = 0.0f64;
    for c in &inliers {
        let e = camera
            .project_camera_point(&refined.to_camera(&c.point))
            .map(|u| (u - c.pixel).norm())
            .unwrap_or(f64::INFINITY);
        sum += e;
        max = max.max(e);
    }
    let pixels: Vec<Vec2> = inliers.iter().map(|c| c.pixel).collect();
    let trace = IterationTrace {
        iteration,
        pose: refined,
        num_matches,
        num_lifted: corrs.len(),
        inlier_count: inliers.len(),
        effective_inlier_count: effective_inliers(
            &pixels,
            camera.width(),
            camera.height(),
            ransac.cell_px,
        ),
        mean_reprojection_px: sum / inliers.len() as f64,
        max_reprojection_px: max,
    };
    Ok((trace, inliers))
}
