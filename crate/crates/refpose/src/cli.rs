//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use refpose_core::metrics::{ThresholdSet, REPROJECTION_THRESHOLDS_PX};
use refpose_core::synth::{
    default_views, make_scene, SceneSpec, SensitivityConfig, SimMatcherSpec,
};
use refpose_core::uncertainty::{
    FIRST_ORDER_SAMPLES, MONTE_CARLO_SAMPLES, SAMPLING_RATIOS, SUBSET_SAMPLES,
};
use refpose_core::{synth, NoiseModel, RansacConfig, RefineConfig};

use crate::error::{Error, Result};
use crate::format;

#[derive(Debug, Parser)]
#[command(name = "refpose", version, about = "Render-and-match camera pose refinement and evaluation")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "REFPOSE_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Refine initial poses from per-iteration match files (resumable).
    Refine(RefineArgs),
    /// Answer pending refinement checkpoints with simulated matches.
    SimulateMatches(SimulateArgs),
    /// Score estimated poses against reference poses.
    Eval(EvalArgs),
    /// Estimate the uncertainty of refined poses.
    Uncertainty(UncertaintyArgs),
    /// Generate a synthetic scene with ground-truth and perturbed poses.
    Synth(SynthArgs),
    /// Success rate of refinement over a grid of initial perturbations.
    Sensitivity(SensitivityArgs),
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Base seed of every random choice.
    #[arg(long, env = "REFPOSE_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Render-match-estimate rounds.
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    /// Accept a refinement when its effective inlier count exceeds this.
    #[arg(long, default_value_t = 10)]
    pub min_effective_inliers: usize,
    /// Side of the cells counting effective inliers (pixels).
    #[arg(long, default_value_t = 50.0)]
    pub cell_px: f64,
    /// RANSAC inlier threshold (pixels).
    #[arg(long, default_value_t = 4.0)]
    pub inlier_threshold: f64,
    #[arg(long, default_value_t = 10_000)]
    pub ransac_max_iterations: usize,
    #[arg(long, default_value_t = 0.9999)]
    pub ransac_confidence: f64,
    /// Stop once a round moves the center by less than this (meters).
    #[arg(long)]
    pub early_exit: Option<f64>,
}

impl SolverArgs {
    pub fn refine(&self) -> RefineConfig {
        RefineConfig {
            iterations: self.iterations,
            min_effective_inliers: self.min_effective_inliers,
            early_exit_step: self.early_exit,
            ..RefineConfig::default()
        }
    }

    pub fn ransac(&self) -> RansacConfig {
        RansacConfig {
            inlier_threshold_px: self.inlier_threshold,
            max_iterations: self.ransac_max_iterations,
            confidence: self.ransac_confidence,
            cell_px: self.cell_px,
            ..RansacConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Scene mesh (ASCII PLY).
    #[arg(long)]
    pub mesh: PathBuf,
    /// Camera file (camera-v1).
    #[arg(long)]
    pub cameras: PathBuf,
    /// Initial poses (poses-v1).
    #[arg(long)]
    pub poses: PathBuf,
    /// Directory holding `<image>/iter<k>*.txt` match files.
    #[arg(long)]
    pub matches: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Skip writing per-round pose, depth and color checkpoints.
    #[arg(long)]
    pub no_checkpoints: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct MatcherArgs {
    /// Pixel noise of correct matches.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Fraction of matches replaced by random pixels.
    #[arg(long, default_value_t = 0.2)]
    pub outlier_ratio: f64,
    /// Fraction of visible points that produce a match.
    #[arg(long, default_value_t = 1.0)]
    pub detection_rate: f64,
}

impl MatcherArgs {
    fn spec(&self, rng_seed: u64) -> SimMatcherSpec {
        SimMatcherSpec {
            sigma_px: self.sigma,
            outlier_ratio: self.outlier_ratio,
            detection_rate: self.detection_rate,
            rng_seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene feature points (points-v1).
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub cameras: PathBuf,
    /// True poses (poses-v1).
    #[arg(long)]
    pub truth: PathBuf,
    /// Checkpoint directory written by `refine`.
    #[arg(long)]
    pub checkpoints: PathBuf,
    /// Match directory read by `refine`.
    #[arg(long)]
    pub matches: PathBuf,
    #[command(flatten)]
    pub matcher: MatcherArgs,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Reference poses (poses-v1).
    #[arg(long)]
    pub reference: PathBuf,
    /// Estimated poses (poses-v1).
    #[arg(long)]
    pub estimates: PathBuf,
    #[arg(long)]
    pub cameras: PathBuf,
    /// Final inliers of the reference poses (corr-v1).
    #[arg(long)]
    pub inliers: PathBuf,
    /// Per-image uncertainties of the reference poses (uncertainty-v1).
    #[arg(long)]
    pub uncertainty: Option<PathBuf>,
    /// Output directory for `eval_report.json` and `eval_table.txt`.
    #[arg(long)]
    pub out: PathBuf,
    /// Row label of the text table.
    #[arg(long, default_value = "estimate")]
    pub method_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    FirstOrder,
    MonteCarlo,
    Sampling,
    All,
}

#[derive(Debug, Args)]
pub struct UncertaintyArgs {
    /// Refined poses (poses-v1).
    #[arg(long)]
    pub poses: PathBuf,
    /// Final inliers of the refined poses (corr-v1).
    #[arg(long)]
    pub inliers: PathBuf,
    #[arg(long)]
    pub cameras: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::All)]
    pub method: Method,
    /// Sampling ratios; repeat or separate with commas.
    #[arg(long = "ratio", value_delimiter = ',', default_values_t = SAMPLING_RATIOS.to_vec())]
    pub ratios: Vec<f64>,
    /// Samples per estimate. Defaults: first-order 1000, Monte Carlo 200,
    /// sampling 50.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Pixel noise assumed by first-order and Monte Carlo.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Output file (uncertainty-v1).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    PlaneGrid,
    BoxCourtyard,
    RandomFacade,
}

impl From<LayoutArg> for synth::Layout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::PlaneGrid => synth::Layout::PlaneGrid,
            LayoutArg::BoxCourtyard => synth::Layout::BoxCourtyard,
            LayoutArg::RandomFacade => synth::Layout::RandomFacade,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = LayoutArg::BoxCourtyard)]
    pub layout: LayoutArg,
    /// Scene size (meters).
    #[arg(long, default_value_t = 24.0)]
    pub extent: f64,
    /// Feature points per square meter.
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    #[arg(long, default_value_t = 2000)]
    pub triangles: usize,
    /// Use a camera with mild radial-tangential distortion.
    #[arg(long)]
    pub distorted: bool,
    /// Rotation of the initial poses away from the truth (degrees).
    #[arg(long, default_value_t = 5.0)]
    pub init_rot_deg: f64,
    /// Translation of the initial poses away from the truth (meters).
    #[arg(long, default_value_t = 2.0)]
    pub init_trans_m: f64,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Rotation levels (degrees).
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 2.5, 5.0, 7.5, 10.0])]
    pub rot_levels: Vec<f64>,
    /// Translation levels (meters).
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.25, 2.5, 3.75, 5.0])]
    pub trans_levels: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Seed of the reference scene.
    #[arg(long, default_value_t = 0)]
    pub scene_seed: u64,
    #[arg(long)]
    pub distorted: bool,
    #[command(flatten)]
    pub matcher: MatcherArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub seed: SeedArg,
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{}: no such file or directory", path.display())))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Refine(a) => refine(a),
        Command::SimulateMatches(a) => simulate(a),
        Command::Eval(a) => eval(a),
        Command::Uncertainty(a) => uncertainty(a),
        Command::Synth(a) => synth_cmd(a),
        Command::Sensitivity(a) => sensitivity(a),
    }
}

fn refine(a: RefineArgs) -> Result<()> {
    for p in [&a.mesh, &a.cameras, &a.poses] {
        require(p)?;
    }
    let mesh = format::ply::read(&a.mesh)?;
    let cameras = format::camera::read(&a.cameras)?;
    let initial = format::poses::read_poses(&a.poses)?;
    let ckpt = a.out.join("checkpoints");
    let inputs = crate::refine_batch::BatchInputs {
        mesh: &mesh,
        cameras: &cameras,
        initial: &initial,
        match_dir: &a.matches,
        checkpoint_dir: (!a.no_checkpoints).then_some(ckpt.as_path()),
    };
    let cfg = a.solver.refine();
    let ransac = a.solver.ransac();
    cfg.validate()?;
    ransac.validate()?;
    let out = crate::refine_batch::run(&inputs, &cfg, &ransac, a.seed.seed)?;
    crate::refine_batch::write_outputs(&a.out, &out)?;
    for img in &out.report.images {
        emit(&format!(
            "{} {} accepted={} rounds={}{}\n",
            img.image,
            serde_json::to_value(img.status).expect("status").as_str().unwrap_or_default(),
            img.accepted,
            img.completed_iterations,
            img.reason.as_ref().map(|r| format!(" ({r})")).unwrap_or_default()
        ));
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    for p in [&a.points, &a.cameras, &a.truth] {
        require(p)?;
    }
    let points = format::points::read(&a.points)?;
    let cameras = format::camera::read(&a.cameras)?;
    let truth = format::poses::read_poses(&a.truth)?;
    let n = crate::simulate::answer_checkpoints(
        &points,
        &truth,
        &cameras,
        &a.checkpoints,
        &a.matches,
        &a.matcher.spec(a.seed.seed),
    )?;
    emit(&format!("wrote {n} match files\n"));
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    for p in [&a.reference, &a.estimates, &a.cameras, &a.inliers] {
        require(p)?;
    }
    let reference = format::poses::read_poses(&a.reference)?;
    let estimates = format::poses::read_poses(&a.estimates)?;
    let cameras = format::camera::read(&a.cameras)?;
    let inliers = format::corr::read(&a.inliers)?;
    let uncertainty = a.uncertainty.as_deref().map(format::uncertainty::read).transpose()?;
    let report = crate::evaluate::evaluate(&crate::evaluate::EvalInputs {
        reference: &reference,
        estimates: &estimates,
        cameras: &cameras,
        inliers: &inliers,
        uncertainty: uncertainty.as_ref(),
        reference_source: a.reference.display().to_string(),
        pose_thresholds: ThresholdSet::default(),
        reprojection_thresholds_px: REPROJECTION_THRESHOLDS_PX.to_vec(),
    })?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    format::write_atomic(&a.out.join("eval_report.json"), json.as_bytes())?;
    let table = report.table(&a.method_name);
    format::write_atomic(&a.out.join("eval_table.txt"), table.as_bytes())?;
    emit(&table);
    Ok(())
}

fn uncertainty(a: UncertaintyArgs) -> Result<()> {
    for p in [&a.poses, &a.inliers, &a.cameras] {
        require(p)?;
    }
    let poses = format::poses::read_poses(&a.poses)?;
    let inliers = format::corr::read(&a.inliers)?;
    let cameras = format::camera::read(&a.cameras)?;
    let want = |m: Method| a.method == m || a.method == Method::All;
    let cfg = crate::estimate::EstimateConfig {
        first_order: want(Method::FirstOrder).then(|| a.samples.unwrap_or(FIRST_ORDER_SAMPLES)),
        monte_carlo: want(Method::MonteCarlo).then(|| a.samples.unwrap_or(MONTE_CARLO_SAMPLES)),
        sampling: if want(Method::Sampling) {
            a.ratios.iter().map(|&k| (k, a.samples.unwrap_or(SUBSET_SAMPLES))).collect()
        } else {
            vec![]
        },
        noise: NoiseModel::new(a.sigma)?,
        refine: a.solver.refine(),
        ransac: a.solver.ransac(),
        seed: a.seed.seed,
    };
    let table = crate::estimate::estimate_all(&poses, &inliers, &cameras, &cfg)?;
    format::uncertainty::write(&a.out, &table)
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let spec = SceneSpec {
        layout: a.layout.into(),
        extent: a.extent,
        triangle_target: a.triangles,
        density: a.density,
        rng_seed: a.seed.seed,
    };
    let scene = make_scene(&spec)?;
    let views = default_views(spec.layout, spec.extent);
    let initial = crate::scene::perturbed(&views, a.init_rot_deg, a.init_trans_m, a.seed.seed);
    let camera = synth::benchmark_camera(a.distorted);
    crate::scene::write_scene(&a.out, &scene, &camera, &views, &initial)?;
    emit(&format!(
        "{} triangles, {} feature points, {} views\n",
        scene.mesh.faces().len(),
        scene.points.len(),
        views.len()
    ));
    Ok(())
}

fn sensitivity(a: SensitivityArgs) -> Result<()> {
    let bench = synth::benchmark(a.scene_seed, a.distorted)?;
    let cfg = SensitivityConfig {
        rot_levels_deg: a.rot_levels,
        trans_levels_m: a.trans_levels,
        trials: a.trials,
        matcher: a.matcher.spec(0),
        refine: a.solver.refine(),
        ransac: a.solver.ransac(),
        rng_seed: a.seed.seed,
    };
    let grid = crate::sensitivity::run(&bench, &cfg)?;
    crate::sensitivity::write(&a.out, &grid, cfg.refine.iterations)?;
    emit(&format::grid::csv(&grid.rot_levels_deg, &grid.trans_levels_m, &grid.last));
    Ok(())
}
