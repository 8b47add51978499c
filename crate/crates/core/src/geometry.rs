//! Rigid poses, the pinhole + radial-tangential camera, and pose differences.
//!
//! A [`Pose`] maps camera-frame points into the model frame:
//! `p = R * p_c + c`, with `c` the camera center. Angles are radians
//! internally; [`PoseError`] reports degrees.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Rotation3, Vector2, Vector3};
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Points at or below this camera-frame depth (meters) do not project.
pub const MIN_DEPTH: f64 = 1e-6;

const UNDISTORT_MAX_ITERATIONS: usize = 20;
const UNDISTORT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Rotation3<f64>,
    center: Vec3,
}

impl Pose {
    pub fn new(rotation: Rotation3<f64>, center: Vec3) -> Self {
        Self { rotation, center }
    }

    pub fn identity() -> Self {
        Self::new(Rotation3::identity(), Vec3::zeros())
    }

    /// Builds a pose from an axis-angle rotation (radians) and a center.
    pub fn from_axis_angle(axis_angle: Vec3, center: Vec3) -> Self {
        Self::new(Rotation3::new(axis_angle), center)
    }

    /// Camera looking from `eye` towards `target`, image `y` pointing as close
    /// to `down` as possible. Returns `None` when the view direction is
    /// parallel to `down` or `eye == target`.
    pub fn look_at(eye: Vec3, target: Vec3, down: Vec3) -> Option<Self> {
        let z = (target - eye).try_normalize(1e-12)?;
        let x = down.cross(&z).try_normalize(1e-12)?;
        let y = z.cross(&x);
        let m = Matrix3::from_columns(&[x, y, z]);
        Some(Self::new(Rotation3::from_matrix_unchecked(m), eye))
    }

    pub fn rotation(&self) -> &Rotation3<f64> {
        &self.rotation
    }

    pub fn center(&self) -> &Vec3 {
        &self.center
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.center + self.center,
        )
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.inverse();
        Pose::new(rt, -(rt * self.center))
    }

    /// Model-frame point to camera frame.
    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation.inverse_transform_vector(&(p - self.center))
    }

    /// Camera-frame point to model frame.
    pub fn to_model(&self, p_c: &Vec3) -> Vec3 {
        self.rotation * p_c + self.center
    }

    /// Right-multiplicative perturbation `self ∘ (Exp(rot), trans)`.
    ///
    /// `trans` is expressed in the camera frame, so the center moves by
    /// exactly `|trans|` and the orientation by exactly `|rot|`.
    pub fn perturb(&self, rot_axis_angle: &Vec3, trans: &Vec3) -> Pose {
        self.compose(&Pose::new(Rotation3::new(*rot_axis_angle), *trans))
    }

    /// Applies a 6-vector tangent step `(translation, rotation)`.
    pub fn retract(&self, step: &nalgebra::Vector6<f64>) -> Pose {
        let t = step.fixed_rows::<3>(0).into_owned();
        let w = step.fixed_rows::<3>(3).into_owned();
        let mut out = self.perturb(&w, &t);
        out.rotation.renormalize();
        out
    }

    /// Applies a rigid transform of the model frame: `g ∘ self`.
    pub fn transformed_by(&self, g: &Pose) -> Pose {
        g.compose(self)
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

/// Position (meters) and rotation (degrees) difference between two poses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoseError {
    pub position_err: f64,
    pub rotation_err: f64,
}

/// Position error `|c - ĉ|` and rotation error
/// `arccos((trace(R⁻¹ R̂) - 1) / 2)` in degrees.
///
/// The angle is evaluated as `atan2(sin, cos)` of the relative rotation,
/// which equals the clamped arccos but keeps full precision near 0° and 180°.
pub fn pose_error(reference: &Pose, estimate: &Pose) -> PoseError {
    let rel = reference.rotation.inverse() * estimate.rotation;
    let m = rel.matrix();
    let cos = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let axis = Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    let sin = (axis.norm() * 0.5).min(1.0);
    let angle = sin.atan2(cos);
    PoseError {
        position_err: (reference.center - estimate.center).norm(),
        rotation_err: angle.to_degrees(),
    }
}

/// Radial-tangential (k1, k2, p1, p2) lens distortion on normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Distortion {
    pub k1: f64,
    pub k2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl Distortion {
    pub fn new(k1: f64, k2: f64, p1: f64, p2: f64) -> Self {
        Self { k1, k2, p1, p2 }
    }

    pub fn is_zero(&self) -> bool {
        self.k1 == 0.0 && self.k2 == 0.0 && self.p1 == 0.0 && self.p2 == 0.0
    }

    pub fn distort(&self, x: &Vec2) -> Vec2 {
        self.distort_with_jacobian(x).0
    }

    pub fn distort_with_jacobian(&self, x: &Vec2) -> (Vec2, Matrix2<f64>) {
        let Distortion { k1, k2, p1, p2 } = *self;
        let (u, v) = (x.x, x.y);
        let r2 = u * u + v * v;
        let radial = 1.0 + k1 * r2 + k2 * r2 * r2;
        let dradial = k1 + 2.0 * k2 * r2; // d radial / d r2
        let xd = u * radial + 2.0 * p1 * u * v + p2 * (r2 + 2.0 * u * u);
        let yd = v * radial + p1 * (r2 + 2.0 * v * v) + 2.0 * p2 * u * v;
        let j = Matrix2::new(
            radial + 2.0 * u * u * dradial + 2.0 * p1 * v + 6.0 * p2 * u,
            2.0 * u * v * dradial + 2.0 * p1 * u + 2.0 * p2 * v,
            2.0 * u * v * dradial + 2.0 * p1 * u + 2.0 * p2 * v,
            radial + 2.0 * v * v * dradial + 6.0 * p1 * v + 2.0 * p2 * u,
        );
        (Vec2::new(xd, yd), j)
    }

    /// Inverts [`Distortion::distort`] with Newton iterations.
    pub fn undistort(&self, xd: &Vec2) -> Vec2 {
        if self.is_zero() {
            return *xd;
        }
        let mut x = *xd;
        for _ in 0..UNDISTORT_MAX_ITERATIONS {
            let (f, j) = self.distort_with_jacobian(&x);
            let Some(step) = j.try_inverse().map(|ji| ji * (f - xd)) else {
                break;
            };
            x -= step;
            if step.norm() < UNDISTORT_TOLERANCE {
                break;
            }
        }
        x
    }
}

/// Pinhole camera with radial-tangential distortion.
///
/// Pixel centers sit at integer coordinates; `(cx, cy)` is the principal point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    distortion: Distortion,
    width: u32,
    height: u32,
}

impl Camera {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        Self::with_distortion(fx, fy, cx, cy, Distortion::default(), width, height)
    }

    pub fn with_distortion(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        distortion: Distortion,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::InvalidCamera("focal lengths must be positive"));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::InvalidCamera("principal point must be finite"));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidCamera("image dimensions must be positive"));
        }
        let d = distortion;
        if ![d.k1, d.k2, d.p1, d.p2].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidCamera("distortion coefficients must be finite"));
        }
        Ok(Self { fx, fy, cx, cy, distortion, width, height })
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }
    pub fn fy(&self) -> f64 {
        self.fy
    }
    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }
    pub fn distortion(&self) -> &Distortion {
        &self.distortion
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn contains(&self, u: &Vec2) -> bool {
        u.x >= -0.5
            && u.y >= -0.5
            && u.x < self.width as f64 - 0.5
            && u.y < self.height as f64 - 0.5
    }

    pub fn normalized_to_pixel(&self, x: &Vec2) -> Vec2 {
        let d = self.distortion.distort(x);
        Vec2::new(self.fx * d.x + self.cx, self.fy * d.y + self.cy)
    }

    pub fn pixel_to_normalized(&self, u: &Vec2) -> Vec2 {
        let xd = Vec2::new((u.x - self.cx) / self.fx, (u.y - self.cy) / self.fy);
        self.distortion.undistort(&xd)
    }

    /// Unit viewing ray through pixel `u`, camera frame.
    pub fn bearing(&self, u: &Vec2) -> Vec3 {
        let x = self.pixel_to_normalized(u);
        Vec3::new(x.x, x.y, 1.0).normalize()
    }

    /// Camera-frame point at z-depth `depth` seen at pixel `u`.
    pub fn unproject(&self, u: &Vec2, depth: f64) -> Vec3 {
        let x = self.pixel_to_normalized(u);
        Vec3::new(x.x * depth, x.y * depth, depth)
    }

    pub fn project_camera_point(&self, p_c: &Vec3) -> Result<Vec2> {
        if p_c.z <= MIN_DEPTH {
            return Err(Error::BehindCamera { z: p_c.z });
        }
        Ok(self.normalized_to_pixel(&Vec2::new(p_c.x / p_c.z, p_c.y / p_c.z)))
    }

    /// Pixel and its 2x3 Jacobian with respect to the camera-frame point.
    pub fn project_with_jacobian(&self, p_c: &Vec3) -> Result<(Vec2, Matrix2x3<f64>)> {
        if p_c.z <= MIN_DEPTH {
            return Err(Error::BehindCamera { z: p_c.z });
        }
        let iz = 1.0 / p_c.z;
        let x = Vec2::new(p_c.x * iz, p_c.y * iz);
        let dx_dp = Matrix2x3::new(iz, 0.0, -x.x * iz, 0.0, iz, -x.y * iz);
        let (d, dd_dx) = self.distortion.distort_with_jacobian(&x);
        let k = Matrix2::new(self.fx, 0.0, 0.0, self.fy);
        let pixel = Vec2::new(self.fx * d.x + self.cx, self.fy * d.y + self.cy);
        Ok((pixel, k * dd_dx * dx_dp))
    }
}

/// Projects a model-frame point through `pose` into `camera` pixels.
///
/// The result may fall outside the image; callers filter with
/// [`Camera::contains`] where needed.
pub fn project(p: &Vec3, pose: &Pose, camera: &Camera) -> Result<Vec2> {
    camera.project_camera_point(&pose.to_camera(p))
}

/// Rotation matrix about the z axis, used by tests and scene builders.
pub fn rot_z(angle: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), angle)
}
