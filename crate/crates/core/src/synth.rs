//! Synthetic ground truth: scenes with known feature points, a simulated
//! matcher, and the experiment drivers built on them (initialization
//! sensitivity grid, uncertainty cross-checks).
//!
//! Everything is deterministic per seed. Per-trial and per-round seeds are
//! derived by counter, so results do not depend on evaluation order.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

use crate::correspondence::{MatchPair, MatchSet};
use crate::error::{Error, Result};
use crate::geometry::{pose_error, project, Camera, Distortion, Pose, Vec2, Vec3};
use crate::ransac::RansacConfig;
use crate::refine::{refine, MatchProvider, RefineConfig, RefineResult, RenderView};
use crate::render::TriMesh;
use crate::seed;
use crate::uncertainty::{
    first_order, monte_carlo, sampling_uncertainty, NoiseModel, UncertaintyEstimate,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Square plane `z = 0` of side `extent`, centered at the origin.
    PlaneGrid,
    /// Floor and four inward-facing walls of an open box of side `extent`
    /// and height `0.6 · extent`. Seen from inside, nothing occludes.
    BoxCourtyard,
    /// Vertical facade in the plane `y = 0` with random relief toward `+y`,
    /// `extent` wide and `extent / 2` tall.
    RandomFacade,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub layout: Layout,
    /// Meters.
    pub extent: f64,
    pub triangle_target: usize,
    /// Feature points per square meter of surface.
    pub density: f64,
    pub rng_seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(Error::InvalidConfig("scene extent must be positive"));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::InvalidConfig("feature density must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub mesh: TriMesh,
    /// Feature points, each lying on a mesh face.
    pub points: Vec<Vec3>,
}

/// Planar patch `origin + s·u + t·v`, `s, t ∈ [0, 1]`.
struct Patch {
    origin: Vec3,
    u: Vec3,
    v: Vec3,
}

impl Patch {
    fn area(&self) -> f64 {
        self.u.cross(&self.v).norm()
    }

    fn at(&self, s: f64, t: f64) -> Vec3 {
        self.origin + self.u * s + self.v * t
    }
}

struct MeshBuilder {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    colors: Vec<[u8; 3]>,
}

impl MeshBuilder {
    /// Grid of `n × m` cells; `lift(i, j)` is added to vertex `(i, j)`.
    fn grid(
        &mut self,
        patch: &Patch,
        n: usize,
        m: usize,
        lift: impl Fn(usize, usize) -> Vec3,
        rng: &mut seed::Rng,
    ) {
        let base = self.vertices.len() as u32;
        for j in 0..=m {
            for i in 0..=n {
                self.vertices.push(patch.at(i as f64 / n as f64, j as f64 / m as f64) + lift(i, j));
                let g = rng.random_range(40..=215u8);
                self.colors.push([g, g, g]);
            }
        }
        let idx = |i: usize, j: usize| base + (j * (n + 1) + i) as u32;
        for j in 0..m {
            for i in 0..n {
                self.faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                self.faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    }
}

fn cells_for(triangles: usize, patches: usize) -> usize {
    let per_patch = triangles.max(2 * patches) / (2 * patches);
    (per_patch as f64).sqrt().round().max(1.0) as usize
}

fn sample_count(area: f64, density: f64) -> usize {
    (area * density).round() as usize
}

/// Builds the scene mesh and its feature points.
pub fn make_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = seed::rng(spec.rng_seed);
    let mut b = MeshBuilder { vertices: vec![], faces: vec![], colors: vec![] };
    let mut points = Vec::new();
    let e = spec.extent;
    let h = 0.5 * e;

    match spec.layout {
        Layout::PlaneGrid => {
            let patch = Patch {
                origin: Vec3::new(-h, -h, 0.0),
                u: Vec3::new(e, 0.0, 0.0),
                v: Vec3::new(0.0, e, 0.0),
            };
            let n = cells_for(spec.triangle_target, 1);
            b.grid(&patch, n, n, |_, _| Vec3::zeros(), &mut rng);
            for _ in 0..sample_count(patch.area(), spec.density) {
                points.push(patch.at(rng.random(), rng.random()));
            }
        }
        Layout::BoxCourtyard => {
            let height = 0.6 * e;
            let up = Vec3::new(0.0, 0.0, height);
            let patches = [
                Patch {
                    origin: Vec3::new(-h, -h, 0.0),
                    u: Vec3::new(e, 0.0, 0.0),
                    v: Vec3::new(0.0, e, 0.0),
                },
                Patch { origin: Vec3::new(-h, -h, 0.0), u: Vec3::new(e, 0.0, 0.0), v: up },
                Patch { origin: Vec3::new(h, -h, 0.0), u: Vec3::new(0.0, e, 0.0), v: up },
                Patch { origin: Vec3::new(h, h, 0.0), u: Vec3::new(-e, 0.0, 0.0), v: up },
                Patch { origin: Vec3::new(-h, h, 0.0), u: Vec3::new(0.0, -e, 0.0), v: up },
            ];
            let n = cells_for(spec.triangle_target, patches.len());
            for p in &patches {
                b.grid(p, n, n, |_, _| Vec3::zeros(), &mut rng);
            }
            for p in &patches {
                for _ in 0..sample_count(p.area(), spec.density) {
                    points.push(p.at(rng.random(), rng.random()));
                }
            }
        }
        Layout::RandomFacade => {
            let patch = Patch {
                origin: Vec3::new(-h, 0.0, 0.0),
                u: Vec3::new(e, 0.0, 0.0),
                v: Vec3::new(0.0, 0.0, h),
            };
            let n = cells_for(spec.triangle_target, 1).max(2);
            let m = (n / 2).max(1);
            let relief: Vec<f64> =
                (0..(n + 1) * (m + 1)).map(|_| rng.random_range(0.0..0.05 * e)).collect();
            let depth = |i: usize, j: usize| relief[j * (n + 1) + i];
            b.grid(&patch, n, m, |i, j| Vec3::new(0.0, depth(i, j), 0.0), &mut rng);
            for _ in 0..sample_count(patch.area(), spec.density) {
                let (s, t): (f64, f64) = (rng.random(), rng.random());
                let (fi, fj) = (s * n as f64, t * m as f64);
                let (i, j) = ((fi as usize).min(n - 1), (fj as usize).min(m - 1));
                let (a, c) = (fi - i as f64, fj - j as f64);
                let (y00, y10, y11, y01) =
                    (depth(i, j), depth(i + 1, j), depth(i + 1, j + 1), depth(i, j + 1));
                // same split as the grid faces: (00, 10, 11) and (00, 11, 01)
                let y = if a >= c {
                    y00 + a * (y10 - y00) + c * (y11 - y10)
                } else {
                    y00 + c * (y01 - y00) + a * (y11 - y01)
                };
                points.push(patch.at(s, t) + Vec3::new(0.0, y, 0.0));
            }
        }
    }
    let mesh = TriMesh::new(b.vertices, b.faces, Some(b.colors))?;
    Ok(Scene { mesh, points })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimMatcherSpec {
    pub sigma_px: f64,
    /// Probability that a match's real-image pixel is replaced by a uniform
    /// random pixel.
    pub outlier_ratio: f64,
    /// Probability that a visible point yields a match at all.
    pub detection_rate: f64,
    pub rng_seed: u64,
}

impl Default for SimMatcherSpec {
    fn default() -> Self {
        Self { sigma_px: 1.0, outlier_ratio: 0.2, detection_rate: 1.0, rng_seed: 0 }
    }
}

impl SimMatcherSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_px >= 0.0 && self.sigma_px.is_finite()) {
            return Err(Error::InvalidConfig("matcher sigma must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.outlier_ratio) {
            return Err(Error::InvalidConfig("outlier ratio must lie in [0, 1]"));
        }
        if !(self.detection_rate > 0.0 && self.detection_rate <= 1.0) {
            return Err(Error::InvalidConfig("detection rate must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Matches between the true view and a rendering at `render_pose`.
///
/// Points behind or outside either view are skipped. Survivors are kept with
/// probability `detection_rate`; their real-image pixel is `π(p, T_true)`
/// plus Gaussian noise, or a uniform random pixel with probability
/// `outlier_ratio`. Fails with `EmptyMatches` when nothing survives.
pub fn simulate_matches(
    points: &[Vec3],
    render_pose: &Pose,
    true_pose: &Pose,
    camera: &Camera,
    spec: &SimMatcherSpec,
) -> Result<MatchSet> {
    spec.validate()?;
    let mut rng = seed::rng(spec.rng_seed);
    let noise = Normal::new(0.0, spec.sigma_px).map_err(|_| Error::InvalidConfig("sigma"))?;
    let (w, h) = (camera.width() as f64, camera.height() as f64);
    let mut pairs = Vec::new();
    for p in points {
        // fixed draw count per point keeps streams aligned across specs
        let keep: f64 = rng.random();
        let outlier: f64 = rng.random();
        let uniform = Vec2::new(rng.random_range(-0.5..w - 0.5), rng.random_range(-0.5..h - 0.5));
        let n = Vec2::new(noise.sample(&mut rng), noise.sample(&mut rng));

        let (Ok(u_true), Ok(u_r)) = (project(p, true_pose, camera), project(p, render_pose, camera))
        else {
            continue;
        };
        if !camera.contains(&u_true) || !camera.contains(&u_r) || keep >= spec.detection_rate {
            continue;
        }
        let u = if outlier < spec.outlier_ratio { uniform } else { u_true + n };
        pairs.push(MatchPair { u, u_r });
    }
    MatchSet::new("sim", "render", pairs)
}

/// Match provider backed by [`simulate_matches`]; round `k` uses the seed
/// `derive(spec.rng_seed, k)`.
pub struct SimMatcher<'a> {
    pub points: &'a [Vec3],
    pub truth: Pose,
    pub spec: SimMatcherSpec,
}

impl MatchProvider for SimMatcher<'_> {
    fn matches(&mut self, view: &RenderView<'_>) -> Result<Vec<MatchSet>> {
        let spec = SimMatcherSpec {
            rng_seed: seed::derive(self.spec.rng_seed, view.iteration as u64),
            ..self.spec
        };
        Ok(vec![simulate_matches(self.points, view.pose, &self.truth, view.camera, &spec)?])
    }
}

/// 640 × 480, f = 500 px, principal point at the image center.
pub fn benchmark_camera(distorted: bool) -> Camera {
    let d = if distorted { Distortion::new(-0.05, 0.01, 0.001, -0.0005) } else { Distortion::default() };
    Camera::with_distortion(500.0, 500.0, 320.0, 240.0, d, 640, 480).expect("valid intrinsics")
}

/// Reference scene for the experiments: a courtyard 24 m across with
/// 14.4 m walls.
pub fn benchmark_scene_spec(rng_seed: u64) -> SceneSpec {
    SceneSpec {
        layout: Layout::BoxCourtyard,
        extent: 24.0,
        triangle_target: 2000,
        density: 0.3,
        rng_seed,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub scene: Scene,
    pub camera: Camera,
    /// Ground-truth views.
    pub views: Vec<Pose>,
}

/// Eight views on a 4 m ring at mid-wall height, each looking down across
/// the courtyard, so perturbations up to 5 m keep the camera inside.
pub fn benchmark_views(extent: f64) -> Vec<Pose> {
    default_views(Layout::BoxCourtyard, extent)
}

/// Eight ground-truth views that see a good part of a scene of this layout
/// and extent.
pub fn default_views(layout: Layout, extent: f64) -> Vec<Pose> {
    let down = Vec3::new(0.0, 0.0, -1.0);
    (0..8)
        .map(|i| {
            let a = core::f64::consts::FRAC_PI_4 * i as f64;
            let (eye, target, down) = match layout {
                Layout::BoxCourtyard => {
                    let s = extent / 24.0;
                    let b = a + 0.3;
                    (
                        Vec3::new(4.0 * s * a.cos(), 4.0 * s * a.sin(), 7.0 * s),
                        Vec3::new(-9.0 * s * b.cos(), -9.0 * s * b.sin(), 0.0),
                        down,
                    )
                }
                Layout::PlaneGrid => (
                    Vec3::new(0.15 * extent * a.cos(), 0.15 * extent * a.sin(), 0.6 * extent),
                    Vec3::new(-0.05 * extent * a.cos(), -0.05 * extent * a.sin(), 0.0),
                    Vec3::new(-a.sin(), a.cos(), 0.0),
                ),
                Layout::RandomFacade => {
                    let x = 0.3 * extent * (i as f64 / 7.0 - 0.5);
                    (
                        Vec3::new(x, -0.6 * extent, 0.25 * extent),
                        Vec3::new(0.5 * x, 0.0, 0.2 * extent),
                        down,
                    )
                }
            };
            Pose::look_at(eye, target, down).expect("non-degenerate view")
        })
        .collect()
}

pub fn benchmark(rng_seed: u64, distorted: bool) -> Result<Benchmark> {
    let spec = benchmark_scene_spec(rng_seed);
    Ok(Benchmark {
        scene: make_scene(&spec)?,
        camera: benchmark_camera(distorted),
        views: benchmark_views(spec.extent),
    })
}

/// Success rule of the sensitivity experiment: strictly within 0.25 m and 1°.
pub const SUCCESS_POSITION_M: f64 = 0.25;
pub const SUCCESS_ROTATION_DEG: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityConfig {
    pub rot_levels_deg: Vec<f64>,
    pub trans_levels_m: Vec<f64>,
    pub trials: usize,
    pub matcher: SimMatcherSpec,
    pub refine: RefineConfig,
    pub ransac: RansacConfig,
    pub rng_seed: u64,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            rot_levels_deg: vec![0.0, 2.5, 5.0, 7.5, 10.0],
            trans_levels_m: vec![0.0, 1.25, 2.5, 3.75, 5.0],
            trials: 50,
            matcher: SimMatcherSpec::default(),
            refine: RefineConfig::default(),
            ransac: RansacConfig::default(),
            rng_seed: 0,
        }
    }
}

impl SensitivityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rot_levels_deg.is_empty() || self.trans_levels_m.is_empty() {
            return Err(Error::EmptyInput);
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("at least one trial per cell"));
        }
        self.matcher.validate()?;
        self.refine.validate()?;
        self.ransac.validate()
    }

    /// Seed of trial `trial` in cell `(r, t)`.
    pub fn trial_seed(&self, r: usize, t: usize, trial: usize) -> u64 {
        let cell = (r * self.trans_levels_m.len() + t) as u64;
        seed::derive(seed::derive(self.rng_seed, cell), trial as u64)
    }
}

/// Success after the first and after the last refinement round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOutcome {
    pub first: bool,
    pub last: bool,
}

fn succeeded(truth: &Pose, estimate: Option<&Pose>) -> bool {
    estimate.is_some_and(|p| {
        let e = pose_error(truth, p);
        e.position_err < SUCCESS_POSITION_M && e.rotation_err < SUCCESS_ROTATION_DEG
    })
}

/// Rotates by exactly `rot_deg` about a uniformly random axis and moves
/// the center by exactly `trans_m` along a uniformly random direction.
pub fn perturb_randomly(pose: &Pose, rot_deg: f64, trans_m: f64, rng: &mut seed::Rng) -> Pose {
    let axis = Vec3::from(UnitSphere.sample(rng));
    let dir = Vec3::from(UnitSphere.sample(rng));
    pose.perturb(&(axis * rot_deg.to_radians()), &(dir * trans_m))
}

/// Perturbs a ground-truth view by exactly `rot_deg` and `trans_m` along
/// uniformly random directions, then refines it against simulated matches.
pub fn sensitivity_trial(
    bench: &Benchmark,
    rot_deg: f64,
    trans_m: f64,
    trial_seed: u64,
    cfg: &SensitivityConfig,
) -> (TrialOutcome, RefineResult) {
    let mut rng = seed::rng(trial_seed);
    let truth = bench.views[rng.random_range(0..bench.views.len())];
    let start = perturb_randomly(&truth, rot_deg, trans_m, &mut rng);

    let mut matcher = SimMatcher {
        points: &bench.scene.points,
        truth,
        spec: SimMatcherSpec { rng_seed: rng.random(), ..cfg.matcher },
    };
    let ransac = RansacConfig { rng_seed: rng.random(), ..cfg.ransac };
    let result = refine(&start, &bench.scene.mesh, &bench.camera, &mut matcher, &cfg.refine, &ransac);
    let outcome = TrialOutcome {
        first: succeeded(&truth, result.trace.first().map(|t| &t.pose)),
        last: succeeded(&truth, result.trace.last().map(|t| &t.pose)),
    };
    (outcome, result)
}

/// Success rates indexed `[rotation level][translation level]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityGrid {
    pub rot_levels_deg: Vec<f64>,
    pub trans_levels_m: Vec<f64>,
    pub trials: usize,
    /// After the first refinement round.
    pub first: Vec<Vec<f64>>,
    /// After the last round.
    pub last: Vec<Vec<f64>>,
}

impl SensitivityGrid {
    /// Assembles rates from per-trial outcomes ordered by (rot, trans, trial).
    pub fn from_outcomes(cfg: &SensitivityConfig, outcomes: &[TrialOutcome]) -> Result<Self> {
        let (nr, nt, k) = (cfg.rot_levels_deg.len(), cfg.trans_levels_m.len(), cfg.trials);
        if outcomes.len() != nr * nt * k {
            return Err(Error::LengthMismatch { expected: nr * nt * k, got: outcomes.len() });
        }
        let rate = |r: usize, t: usize, pick: fn(&TrialOutcome) -> bool| {
            let cell = &outcomes[(r * nt + t) * k..(r * nt + t + 1) * k];
            cell.iter().filter(|o| pick(o)).count() as f64 / k as f64
        };
        let table = |pick: fn(&TrialOutcome) -> bool| -> Vec<Vec<f64>> {
            (0..nr).map(|r| (0..nt).map(|t| rate(r, t, pick)).collect()).collect()
        };
        Ok(Self {
            rot_levels_deg: cfg.rot_levels_deg.clone(),
            trans_levels_m: cfg.trans_levels_m.clone(),
            trials: k,
            first: table(|o| o.first),
            last: table(|o| o.last),
        })
    }
}

/// Runs every trial of the grid serially.
pub fn sensitivity_grid(bench: &Benchmark, cfg: &SensitivityConfig) -> Result<SensitivityGrid> {
    cfg.validate()?;
    let mut outcomes = Vec::new();
    for (r, &rot) in cfg.rot_levels_deg.iter().enumerate() {
        for (t, &trans) in cfg.trans_levels_m.iter().enumerate() {
            for k in 0..cfg.trials {
                outcomes.push(sensitivity_trial(bench, rot, trans, cfg.trial_seed(r, t, k), cfg).0);
            }
        }
    }
    SensitivityGrid::from_outcomes(cfg, &outcomes)
}

/// The three uncertainty estimates of one refined view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewUncertainty {
    pub first_order: UncertaintyEstimate,
    pub monte_carlo: UncertaintyEstimate,
    /// One estimate per requested ratio, in order.
    pub sampling: Vec<UncertaintyEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyStudy {
    pub matcher: SimMatcherSpec,
    pub refine: RefineConfig,
    pub ransac: RansacConfig,
    pub noise: NoiseModel,
    pub ratios: Vec<f64>,
    pub first_order_samples: usize,
    pub monte_carlo_samples: usize,
    pub sampling_samples: usize,
    pub rng_seed: u64,
}

impl Default for UncertaintyStudy {
    fn default() -> Self {
        Self {
            matcher: SimMatcherSpec::default(),
            refine: RefineConfig::default(),
            ransac: RansacConfig::default(),
            noise: NoiseModel::default(),
            ratios: vec![0.5],
            first_order_samples: crate::uncertainty::FIRST_ORDER_SAMPLES,
            monte_carlo_samples: crate::uncertainty::MONTE_CARLO_SAMPLES,
            sampling_samples: crate::uncertainty::SUBSET_SAMPLES,
            rng_seed: 0,
        }
    }
}

/// Refines every benchmark view from its ground truth against simulated
/// matches and estimates the uncertainty of the result three ways.
pub fn uncertainty_study(bench: &Benchmark, study: &UncertaintyStudy) -> Result<Vec<ViewUncertainty>> {
    bench
        .views
        .iter()
        .enumerate()
        .map(|(i, truth)| {
            let base = seed::derive(study.rng_seed, i as u64);
            let mut matcher = SimMatcher {
                points: &bench.scene.points,
                truth: *truth,
                spec: SimMatcherSpec { rng_seed: seed::derive(base, 0), ..study.matcher },
            };
            let ransac = RansacConfig { rng_seed: seed::derive(base, 1), ..study.ransac };
            let r = refine(truth, &bench.scene.mesh, &bench.camera, &mut matcher, &study.refine, &ransac);
            if let Some(e) = r.stopped_by {
                return Err(e);
            }
            let cam = &bench.camera;
            Ok(ViewUncertainty {
                first_order: first_order(
                    &r.inliers,
                    &r.pose,
                    cam,
                    &study.noise,
                    study.first_order_samples,
                    seed::derive(base, 2),
                )?,
                monte_carlo: monte_carlo(
                    &r.inliers,
                    &r.pose,
                    cam,
                    &study.noise,
                    study.monte_carlo_samples,
                    seed::derive(base, 3),
                    &study.refine,
                )?,
                sampling: study
                    .ratios
                    .iter()
                    .map(|&k| {
                        sampling_uncertainty(
                            &r.inliers,
                            &r.pose,
                            cam,
                            k,
                            study.sampling_samples,
                            seed::derive(base, 4),
                            &study.ransac,
                            &study.refine,
                        )
                    })
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pose_error;
    use crate::render::render_depth;

    fn plane(seed_: u64) -> SceneSpec {
        SceneSpec {
            layout: Layout::PlaneGrid,
            extent: 10.0,
            triangle_target: 200,
            density: 1.0,
            rng_seed: seed_,
        }
    }

    #[test]
    fn plane_grid_density_and_support() {
        let s = make_scene(&plane(1)).unwrap();
        assert!((90..=110).contains(&s.points.len()));
        assert!(s.points.iter().all(|p| p.z == 0.0 && p.x.abs() <= 5.0 && p.y.abs() <= 5.0));
    }

    #[test]
    fn scenes_are_deterministic() {
        for layout in [Layout::PlaneGrid, Layout::BoxCourtyard, Layout::RandomFacade] {
            let spec = SceneSpec { layout, ..plane(9) };
            assert_eq!(make_scene(&spec).unwrap(), make_scene(&spec).unwrap());
        }
        assert_ne!(make_scene(&plane(1)).unwrap(), make_scene(&plane(2)).unwrap());
    }

    #[test]
    fn rendered_depth_matches_feature_depth() {
        // fronto-parallel view of the whole plane from 9 m
        let s = make_scene(&plane(3)).unwrap();
        let cam = benchmark_camera(false);
        let pose = Pose::look_at(Vec3::new(0.0, 0.0, 9.0), Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let depth = render_depth(&s.mesh, &pose, &cam);
        let mut checked = 0;
        for p in &s.points {
            let u = project(p, &pose, &cam).unwrap();
            if let Some(z) = depth.depth_at(&u) {
                assert!((z - pose.to_camera(p).z).abs() < 1e-3);
                checked += 1;
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn facade_points_lie_on_the_mesh() {
        let spec = SceneSpec { layout: Layout::RandomFacade, density: 2.0, ..plane(5) };
        let s = make_scene(&spec).unwrap();
        let cam = benchmark_camera(false);
        let pose =
            Pose::look_at(Vec3::new(0.0, -12.0, 2.5), Vec3::new(0.0, 0.0, 2.5), Vec3::new(0.0, 0.0, -1.0))
                .unwrap();
        let depth = render_depth(&s.mesh, &pose, &cam);
        let mut checked = 0;
        for p in &s.points {
            let u = project(p, &pose, &cam).unwrap();
            // compare away from pixel rounding: exact on the rendered ray
            if let Some(z) = depth.depth_at(&u) {
                let rel = (z - pose.to_camera(p).z).abs() / z;
                assert!(rel < 0.02, "{rel}");
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn default_views_see_their_scene() {
        let cam = benchmark_camera(false);
        for layout in [Layout::PlaneGrid, Layout::BoxCourtyard, Layout::RandomFacade] {
            let spec = SceneSpec { layout, density: 2.0, ..plane(4) };
            let s = make_scene(&spec).unwrap();
            for v in default_views(layout, spec.extent) {
                let seen = s
                    .points
                    .iter()
                    .filter(|p| project(p, &v, &cam).is_ok_and(|u| cam.contains(&u)))
                    .count();
                assert!(seen >= 40, "{layout:?} {seen}");
            }
        }
    }

    #[test]
    fn identical_poses_and_no_noise_give_identical_pixels() {
        let b = benchmark(0, false).unwrap();
        let spec = SimMatcherSpec { sigma_px: 0.0, outlier_ratio: 0.0, ..Default::default() };
        let m = simulate_matches(&b.scene.points, &b.views[0], &b.views[0], &b.camera, &spec).unwrap();
        assert!(m.len() > 50);
        assert!(m.pairs().iter().all(|p| p.u == p.u_r));
    }

    #[test]
    fn pixel_noise_has_requested_sigma() {
        let b = benchmark(0, false).unwrap();
        let truth = b.views[2];
        let spec0 = SimMatcherSpec { sigma_px: 1.0, outlier_ratio: 0.0, ..Default::default() };
        let (mut sum, mut sum2, mut n) = (0.0, 0.0, 0usize);
        let mut k = 0;
        while n < 10_000 {
            let spec = SimMatcherSpec { rng_seed: k, ..spec0 };
            k += 1;
            for p in simulate_matches(&b.scene.points, &truth, &truth, &b.camera, &spec).unwrap().pairs() {
                for d in [p.u.x - p.u_r.x, p.u.y - p.u_r.y] {
                    sum += d;
                    sum2 += d * d;
                }
                n += 1;
            }
        }
        let m = 2.0 * n as f64;
        let std = (sum2 / m - (sum / m).powi(2)).sqrt();
        assert!((std - 1.0).abs() < 0.05, "{std}");
    }

    #[test]
    fn all_outliers_are_not_accepted() {
        let b = benchmark(0, false).unwrap();
        let truth = b.views[1];
        let mut matcher = SimMatcher {
            points: &b.scene.points,
            truth,
            spec: SimMatcherSpec { outlier_ratio: 1.0, ..Default::default() },
        };
        let start = truth.perturb(&Vec3::new(0.0, 0.05, 0.0), &Vec3::new(0.5, 0.0, 0.0));
        let r = refine(&start, &b.scene.mesh, &b.camera, &mut matcher, &RefineConfig::default(), &RansacConfig::default());
        assert!(!r.accepted);
    }

    #[test]
    fn noiseless_refinement_recovers_truth_from_far_off() {
        let b = benchmark(0, false).unwrap();
        let truth = b.views[3];
        let mut matcher = SimMatcher {
            points: &b.scene.points,
            truth,
            spec: SimMatcherSpec { sigma_px: 0.0, outlier_ratio: 0.0, ..Default::default() },
        };
        let axis = Vec3::new(1.0, -2.0, 0.5).normalize();
        let dir = Vec3::new(-0.3, 1.0, 0.7).normalize();
        let start = truth.perturb(&(axis * 10f64.to_radians()), &(dir * 2.0));
        let r = refine(&start, &b.scene.mesh, &b.camera, &mut matcher, &RefineConfig::default(), &RansacConfig::default());
        let e = pose_error(&truth, &r.pose);
        assert!(r.accepted);
        assert!(e.position_err < 1e-4 && e.rotation_err < 1e-3, "{e:?}");
    }

    #[test]
    fn unperturbed_cell_always_succeeds() {
        let b = benchmark(0, false).unwrap();
        let cfg = SensitivityConfig { rot_levels_deg: vec![0.0], trans_levels_m: vec![0.0], trials: 4, ..Default::default() };
        let g = sensitivity_grid(&b, &cfg).unwrap();
        assert_eq!(g.first, vec![vec![1.0]]);
        assert_eq!(g.last, vec![vec![1.0]]);
    }
}
