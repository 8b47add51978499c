//! Scoring estimated poses against reference poses.

use std::collections::{BTreeMap, BTreeSet};

use refpose_core::metrics::{max_reprojection_diff, EvalReport, ImageEval, ThresholdSet};
use refpose_core::{pose_error, Pose, UncertaintyEstimate, UncertaintyMethod};

use crate::error::{Error, Result};
use crate::format::camera::CameraTable;
use crate::format::corr::CorrTable;
use crate::format::uncertainty::{source_name, UncertaintyTable};

pub struct EvalInputs<'a> {
    pub reference: &'a BTreeMap<String, Pose>,
    pub estimates: &'a BTreeMap<String, Pose>,
    pub cameras: &'a CameraTable,
    /// Final inliers of the reference refinement; their 3D points feed the
    /// reprojection difference.
    pub inliers: &'a CorrTable,
    pub uncertainty: Option<&'a UncertaintyTable>,
    pub reference_source: String,
    pub pose_thresholds: ThresholdSet,
    pub reprojection_thresholds_px: Vec<f64>,
}

fn source_rank(m: &UncertaintyMethod) -> (u8, i64) {
    match m {
        // larger ratios first
        UncertaintyMethod::Sampling { ratio } => (0, -(ratio * 1e9) as i64),
        UncertaintyMethod::FirstOrder => (1, 0),
        UncertaintyMethod::MonteCarlo => (2, 0),
    }
}

pub fn evaluate(inputs: &EvalInputs<'_>) -> Result<EvalReport> {
    let refs: BTreeSet<&String> = inputs.reference.keys().collect();
    let ests: BTreeSet<&String> = inputs.estimates.keys().collect();
    if refs != ests {
        return Err(Error::NameMismatch {
            only_reference: refs.difference(&ests).map(|s| s.to_string()).collect(),
            only_estimate: ests.difference(&refs).map(|s| s.to_string()).collect(),
        });
    }

    let mut images = Vec::with_capacity(refs.len());
    for name in &refs {
        let (r, e) = (&inputs.reference[*name], &inputs.estimates[*name]);
        let err = pose_error(r, e);
        let points: Vec<_> = inputs.inliers.get(*name).into_iter().flatten().map(|c| c.point).collect();
        if points.is_empty() {
            return Err(Error::Invalid(format!("no reference inliers for image {name:?}")));
        }
        let camera = inputs.cameras.for_image(name)?;
        images.push(ImageEval {
            name: name.to_string(),
            position_err: err.position_err,
            rotation_err: err.rotation_err,
            max_reprojection_px: max_reprojection_diff(r, e, &points, camera)?,
        });
    }

    let mut sources: Vec<(String, Vec<UncertaintyEstimate>)> = Vec::new();
    if let Some(table) = inputs.uncertainty {
        let mut methods: Vec<UncertaintyMethod> = Vec::new();
        for list in table.values() {
            for u in list {
                if !methods.contains(&u.method) {
                    methods.push(u.method);
                }
            }
        }
        methods.sort_by_key(source_rank);
        for m in methods {
            let per_image = refs
                .iter()
                .map(|name| {
                    table
                        .get(*name)
                        .and_then(|l| l.iter().find(|u| u.method == m))
                        .copied()
                        .ok_or_else(|| {
                            Error::Invalid(format!("no {} uncertainty for image {name:?}", source_name(&m)))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            sources.push((source_name(&m), per_image));
        }
    }

    Ok(EvalReport::build(
        inputs.reference_source.clone(),
        images,
        inputs.pose_thresholds.clone(),
        inputs.reprojection_thresholds_px.clone(),
        &sources,
    )?)
}
