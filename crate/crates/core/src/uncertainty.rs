//! Pose uncertainty of a refined pose, three ways: first-order covariance
//! propagation, Monte Carlo re-estimation, and inlier-subset sampling.
//!
//! Every estimator reports the median position difference (meters) and the
//! median rotation difference (degrees) over its samples. Rotation
//! perturbations live in the axis-angle tangent space at the refined pose.

use alloc::vec::Vec;

use nalgebra::{Matrix6, Vector6};
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::correspondence::Correspondence;
use crate::error::{Error, Result};
use crate::geometry::{pose_error, project, Camera, Pose, PoseError};
use crate::ransac::{lo_ransac, RansacConfig};
use crate::refine::{optimize_pose, residual_and_jacobian, RefineConfig};
use crate::seed;

pub const FIRST_ORDER_SAMPLES: usize = 1000;
pub const MONTE_CARLO_SAMPLES: usize = 200;
pub const SUBSET_SAMPLES: usize = 50;
/// Sampling ratios used as per-image thresholds.
pub const SAMPLING_RATIOS: [f64; 3] = [0.5, 0.3, 0.1];

/// Re-estimation based estimators give up when more than this fraction of
/// their samples fail.
const MAX_FAILURE_FRACTION: f64 = 0.1;

/// Isotropic pixel noise, `Σ_u = σ² I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma_px: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { sigma_px: 1.0 }
    }
}

impl NoiseModel {
    pub fn new(sigma_px: f64) -> Result<Self> {
        if !(sigma_px > 0.0 && sigma_px.is_finite()) {
            return Err(Error::InvalidConfig("pixel sigma must be positive"));
        }
        Ok(Self { sigma_px })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum UncertaintyMethod {
    FirstOrder,
    MonteCarlo,
    Sampling { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UncertaintyEstimate {
    pub position_unc: f64,
    pub rotation_unc: f64,
    pub method: UncertaintyMethod,
    pub num_samples: usize,
}

/// Median with the midpoint convention for even counts. `None` when empty.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

fn summarize(errors: &[PoseError], method: UncertaintyMethod) -> Result<UncertaintyEstimate> {
    let mut pos: Vec<f64> = errors.iter().map(|e| e.position_err).collect();
    let mut rot: Vec<f64> = errors.iter().map(|e| e.rotation_err).collect();
    Ok(UncertaintyEstimate {
        position_unc: median(&mut pos).ok_or(Error::EmptyInput)?,
        rotation_unc: median(&mut rot).ok_or(Error::EmptyInput)?,
        method,
        num_samples: errors.len(),
    })
}

/// `Σ_l J_lᵀ Σ_u⁻¹ J_l` at `pose`, in `(ρ, φ)` coordinates.
pub fn information_matrix(
    inliers: &[Correspondence],
    pose: &Pose,
    camera: &Camera,
    noise: &NoiseModel,
) -> Result<Matrix6<f64>> {
    let mut h = Matrix6::zeros();
    for c in inliers {
        let (_, j) = residual_and_jacobian(c, pose, camera)?;
        h += j.transpose() * j;
    }
    Ok(h / (noise.sigma_px * noise.sigma_px))
}

/// First-order pose covariance. Fails with `SingularInformation` when the
/// information matrix has rank < 6 (relative eigenvalue floor 1e-10).
pub fn covariance(
    inliers: &[Correspondence],
    pose: &Pose,
    camera: &Camera,
    noise: &NoiseModel,
) -> Result<Matrix6<f64>> {
    let h = information_matrix(inliers, pose, camera, noise)?;
    let eig = h.symmetric_eigenvalues();
    let max = eig.amax();
    if !(max > 0.0) || eig.min() <= 1e-10 * max {
        return Err(Error::SingularInformation);
    }
    h.try_inverse().ok_or(Error::SingularInformation)
}

/// Draws tangent perturbations from `N(0, Σ)` and reports the medians of
/// their translation and rotation norms.
pub fn first_order(
    inliers: &[Correspondence],
    pose: &Pose,
    camera: &Camera,
    noise: &NoiseModel,
    num_samples: usize,
    seed: u64,
) -> Result<UncertaintyEstimate> {
    if num_samples == 0 {
        return Err(Error::EmptyInput);
    }
    let sigma = covariance(inliers, pose, camera, noise)?;
    let sym = (sigma + sigma.transpose()) * 0.5;
    let l = sym.cholesky().ok_or(Error::SingularInformation)?.l();
    let mut rng = seed::rng(seed);
    let errors: Vec<PoseError> = (0..num_samples)
        .map(|_| {
            let z = Vector6::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let xi = l * z;
            PoseError {
                position_err: xi.fixed_rows::<3>(0).norm(),
                rotation_err: xi.fixed_rows::<3>(3).norm().to_degrees(),
            }
        })
        .collect();
    summarize(&errors, UncertaintyMethod::FirstOrder)
}

/// Re-solves the pose from noise-free reprojections plus simulated pixel
/// noise, `num_samples` times, starting at `pose` each time.
pub fn monte_carlo(
    inliers: &[Correspondence],
    pose: &Pose,
    camera: &Camera,
    noise: &NoiseModel,
    num_samples: usize,
    seed: u64,
    refine: &RefineConfig,
) -> Result<UncertaintyEstimate> {
    if num_samples == 0 {
        return Err(Error::EmptyInput);
    }
    if inliers.len() < 3 {
        return Err(Error::TooFewCorrespondences { needed: 3, got: inliers.len() });
    }
    let ideal: Vec<Correspondence> = inliers
        .iter()
        .map(|c| Ok(Correspondence { pixel: project(&c.point, pose, camera)?, point: c.point }))
        .collect::<Result<_>>()?;
    let normal = Normal::new(0.0, noise.sigma_px).map_err(|_| Error::InvalidConfig("pixel sigma"))?;

    let mut errors = Vec::with_capacity(num_samples);
    let mut last_error = None;
    for s in 0..num_samples {
        let mut rng = seed::derived_rng(seed, s as u64);
        let noisy: Vec<Correspondence> = ideal
            .iter()
            .map(|c| {
                let mut c = *c;
                c.pixel.x += normal.sample(&mut rng);
                c.pixel.y += normal.sample(&mut rng);
                c
            })
            .collect();
        match optimize_pose(&noisy, pose, camera, refine) {
            Ok(p) => errors.push(pose_error(pose, &p)),
            Err(e) => last_error = Some(e),
        }
    }
    check_failures(num_samples, errors.len(), last_error)?;
    summarize(&errors, UncertaintyMethod::MonteCarlo)
}

/// Number of correspondences drawn for sampling ratio `ratio`.
pub fn subset_size(total: usize, ratio: f64) -> usize {
    // tolerate representation error such as 0.3 * 100 = 30.000000000000004
    (ratio * total as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Repeatedly draws `⌈ratio · N⌉` of the inliers, runs LO-RANSAC and the
/// least-squares refit on the subset, and reports the median difference
/// of the resulting poses from `pose`.
#[allow(clippy::too_many_arguments)]
pub fn sampling_uncertainty(
    inliers: &[Correspondence],
    pose: &Pose,
    camera: &Camera,
    ratio: f64,
    num_samples: usize,
    seed: u64,
    ransac: &RansacConfig,
    refine: &RefineConfig,
) -> Result<UncertaintyEstimate> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidConfig("sampling ratio must lie in (0, 1]"));
    }
    if num_samples == 0 {
        return Err(Error::EmptyInput);
    }
    let size = subset_size(inliers.len(), ratio);
    if size < 3 {
        return Err(Error::SubsetTooSmall { size });
    }
    let mut errors = Vec::with_capacity(num_samples);
    let mut last_error = None;
    for s in 0..num_samples {
        let mut rng = seed::derived_rng(seed, s as u64);
        let subset: Vec<Correspondence> = rand::seq::index::sample(&mut rng, inliers.len(), size)
            .into_iter()
            .map(|i| inliers[i])
            .collect();
        let cfg = RansacConfig { rng_seed: seed::derive(seed ^ 0x5a5a_5a5a, s as u64), ..*ransac };
        let estimate = lo_ransac(&subset, camera, &cfg).and_then(|r| {
            let kept: Vec<Correspondence> = subset
                .iter()
                .zip(&r.inlier_mask)
                .filter_map(|(c, &m)| m.then_some(*c))
                .collect();
            optimize_pose(&kept, &r.pose, camera, refine)
        });
        match estimate {
            Ok(p) => errors.push(pose_error(pose, &p)),
            Err(e) => last_error = Some(e),
        }
    }
    check_failures(num_samples, errors.len(), last_error)?;
    summarize(&errors, UncertaintyMethod::Sampling { ratio })
}

fn check_failures(total: usize, ok: usize, last_error: Option<Error>) -> Result<()> {
    let failed = total - ok;
    if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(match last_error {
            Some(e) if ok == 0 => e,
            _ => Error::TooManyFailures { failed, total },
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use rand::Rng;

    fn camera() -> Camera {
        Camera::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    fn exact(truth: &Pose, n: usize, seed_: u64) -> Vec<Correspondence> {
        let mut rng = seed::rng(seed_);
        (0..n)
            .map(|_| {
                let pc = Vec3::new(
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(4.0..20.0),
                );
                let point = truth.to_model(&pc);
                Correspondence { pixel: project(&point, truth, &camera()).unwrap(), point }
            })
            .collect()
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn doubling_sigma_doubles_first_order() {
        let truth = Pose::identity();
        let c = exact(&truth, 100, 1);
        let a = first_order(&c, &truth, &camera(), &NoiseModel::new(1.0).unwrap(), 1000, 3).unwrap();
        let b = first_order(&c, &truth, &camera(), &NoiseModel::new(2.0).unwrap(), 1000, 3).unwrap();
        assert!((b.position_unc / a.position_unc - 2.0).abs() < 0.1);
        assert!((b.rotation_unc / a.rotation_unc - 2.0).abs() < 0.1);
    }

    #[test]
    fn collinear_points_are_singular() {
        let pose = Pose::identity();
        let c: Vec<Correspondence> = (0..3)
            .map(|k| {
                let point = Vec3::new(k as f64, 0.5 * k as f64, 5.0 + k as f64);
                Correspondence { pixel: project(&point, &pose, &camera()).unwrap(), point }
            })
            .collect();
        assert_eq!(
            first_order(&c, &pose, &camera(), &NoiseModel::default(), 100, 0),
            Err(Error::SingularInformation)
        );
    }

    #[test]
    fn vanishing_noise_gives_vanishing_monte_carlo_spread() {
        let truth = Pose::from_axis_angle(Vec3::new(0.1, 0.0, 0.2), Vec3::new(1.0, 2.0, 3.0));
        let c = exact(&truth, 60, 2);
        let nm = NoiseModel::new(1e-9).unwrap();
        let u = monte_carlo(&c, &truth, &camera(), &nm, 20, 1, &RefineConfig::default()).unwrap();
        assert!(u.position_unc < 1e-6 && u.rotation_unc < 1e-6, "{u:?}");
    }

    #[test]
    fn full_ratio_on_exact_data_is_a_fixed_point() {
        let truth = Pose::from_axis_angle(Vec3::new(-0.1, 0.3, 0.0), Vec3::new(0.0, -1.0, 2.0));
        let c = exact(&truth, 50, 4);
        let u = sampling_uncertainty(
            &c,
            &truth,
            &camera(),
            1.0,
            5,
            7,
            &RansacConfig::default(),
            &RefineConfig::default(),
        )
        .unwrap();
        assert!(u.position_unc < 1e-9 && u.rotation_unc < 1e-9, "{u:?}");
    }

    #[test]
    fn tiny_subset_is_rejected() {
        let truth = Pose::identity();
        let c = exact(&truth, 100, 4);
        let r = sampling_uncertainty(
            &c,
            &truth,
            &camera(),
            0.01,
            5,
            7,
            &RansacConfig::default(),
            &RefineConfig::default(),
        );
        assert_eq!(r, Err(Error::SubsetTooSmall { size: 1 }));
    }

    #[test]
    fn subset_sizes() {
        assert_eq!(subset_size(100, 0.3), 30);
        assert_eq!(subset_size(100, 0.5), 50);
        assert_eq!(subset_size(7, 0.5), 4);
        assert_eq!(subset_size(100, 0.01), 1);
    }
}
