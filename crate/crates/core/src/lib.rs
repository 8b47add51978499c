//! Camera pose refinement by iterative render-and-match.
//!
//! A coarse pose is refined by rendering the scene mesh at the current
//! estimate, lifting 2D-2D matches (real image vs. rendering) to 2D-3D
//! correspondences through the rendered depth, and re-estimating the pose
//! with P3P + LO-RANSAC followed by Levenberg-Marquardt over the inliers.
//! The crate also carries the three pose-uncertainty estimators and the
//! localization-accuracy metrics built on top of refined poses.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel drivers live in the `refpose` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod correspondence;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod p3p;
pub mod ransac;
pub mod refine;
pub mod render;
pub mod seed;
pub mod synth;
pub mod uncertainty;

pub use correspondence::{lift, lift_all, Correspondence, Lifted, MatchPair, MatchSet};
pub use error::{Error, Result};
pub use geometry::{pose_error, Camera, Distortion, Pose, PoseError};
pub use ransac::{effective_inliers, lo_ransac, RansacConfig, RansacResult};
pub use refine::{optimize_pose, refine, MatchProvider, RefineConfig, RefineResult, RenderView};
pub use render::{render_depth, DepthMap, TriMesh};
pub use uncertainty::{NoiseModel, UncertaintyEstimate, UncertaintyMethod};
