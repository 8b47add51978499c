//! Minimal three-point absolute pose (Kneip, Scaramuzza and Siegwart's
//! direct parameterization): the camera center and orientation are obtained
//! in closed form from the roots of one quartic.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Matrix6, Rotation3, Vector6};
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::correspondence::Correspondence;
use crate::error::{Error, Result};
use crate::geometry::{Camera, Pose, Vec3};
use crate::refine::residual_and_jacobian;

/// Solutions whose reprojection error exceeds this (pixels) are discarded.
pub const MAX_SOLUTION_REPROJECTION_PX: f64 = 1e-6;
const POLISH_STEPS: usize = 4;

/// Up to four poses consistent with three 2D-3D correspondences.
pub fn p3p(corrs: &[Correspondence], camera: &Camera) -> Result<Vec<Pose>> {
    if corrs.len() != 3 {
        return Err(Error::TooFewCorrespondences { needed: 3, got: corrs.len() });
    }
    let points = [corrs[0].point, corrs[1].point, corrs[2].point];
    let bearings = [
        camera.bearing(&corrs[0].pixel),
        camera.bearing(&corrs[1].pixel),
        camera.bearing(&corrs[2].pixel),
    ];
    let mut out = Vec::with_capacity(4);
    for pose in solve_bearings(&points, &bearings)? {
        if let Some(p) = polish(pose, corrs, camera) {
            out.push(p);
        }
    }
    Ok(out)
}

fn is_degenerate(points: &[Vec3; 3], bearings: &[Vec3; 3]) -> bool {
    let a = points[1] - points[0];
    let b = points[2] - points[0];
    let c = points[2] - points[1];
    let scale = a.norm().max(b.norm()).max(c.norm());
    if !(scale > 0.0) || a.norm() <= 1e-12 * scale || b.norm() <= 1e-12 * scale || c.norm() <= 1e-12 * scale {
        return true;
    }
    if a.cross(&b).norm() <= 1e-10 * a.norm() * b.norm() {
        return true;
    }
    (0..3).any(|i| bearings[i].cross(&bearings[(i + 1) % 3]).norm() <= 1e-10)
}

/// Camera poses (camera-to-model) from three model points and the unit
/// bearing vectors observing them.
pub fn solve_bearings(points: &[Vec3; 3], bearings: &[Vec3; 3]) -> Result<Vec<Pose>> {
    if is_degenerate(points, bearings) {
        return Err(Error::DegenerateConfiguration);
    }

    let frame = |f1: &Vec3, f2: &Vec3| -> Option<Matrix3<f64>> {
        let e1 = *f1;
        let e3 = f1.cross(f2).try_normalize(1e-15)?;
        let e2 = e3.cross(&e1);
        Some(Matrix3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()]))
    };

    let (mut f1, mut f2) = (bearings[0], bearings[1]);
    let (mut p1, mut p2) = (points[0], points[1]);
    let p3 = points[2];
    let mut t = frame(&f1, &f2).ok_or(Error::DegenerateConfiguration)?;
    let mut f3 = t * bearings[2];
    // keep theta in [0, pi]
    if f3.z > 0.0 {
        core::mem::swap(&mut f1, &mut f2);
        core::mem::swap(&mut p1, &mut p2);
        t = frame(&f1, &f2).ok_or(Error::DegenerateConfiguration)?;
        f3 = t * bearings[2];
    }
    if f3.z == 0.0 {
        return Err(Error::DegenerateConfiguration);
    }

    let n1 = (p2 - p1).normalize();
    let n3 = n1.cross(&(p3 - p1)).normalize();
    let n2 = n3.cross(&n1);
    let n = Matrix3::from_rows(&[n1.transpose(), n2.transpose(), n3.transpose()]);
    let p3n = n * (p3 - p1);

    let d12 = (p2 - p1).norm();
    let f_1 = f3.x / f3.z;
    let f_2 = f3.y / f3.z;
    let p_1 = p3n.x;
    let p_2 = p3n.y;
    if f_2 == 0.0 {
        return Err(Error::DegenerateConfiguration);
    }

    let cos_beta = f1.dot(&f2);
    let mut b = 1.0 / (1.0 - cos_beta * cos_beta) - 1.0;
    b = if cos_beta < 0.0 { -b.sqrt() } else { b.sqrt() };

    let f_1_2 = f_1 * f_1;
    let f_2_2 = f_2 * f_2;
    let p_1_2 = p_1 * p_1;
    let p_1_3 = p_1_2 * p_1;
    let p_1_4 = p_1_3 * p_1;
    let p_2_2 = p_2 * p_2;
    let p_2_3 = p_2_2 * p_2;
    let p_2_4 = p_2_3 * p_2;
    let d12_2 = d12 * d12;
    let b_2 = b * b;

    let a4 = -f_2_2 * p_2_4 - p_2_4 * f_1_2 - p_2_4;
    let a3 = 2.0 * p_2_3 * d12 * b + 2.0 * f_2_2 * p_2_3 * d12 * b - 2.0 * f_2 * p_2_3 * f_1 * d12;
    let a2 = -f_2_2 * p_2_2 * p_1_2 - f_2_2 * p_2_2 * d12_2 * b_2 - f_2_2 * p_2_2 * d12_2
        + f_2_2 * p_2_4
        + p_2_4 * f_1_2
        + 2.0 * p_1 * p_2_2 * d12
        + 2.0 * f_1 * f_2 * p_1 * p_2_2 * d12 * b
        - p_2_2 * p_1_2 * f_1_2
        + 2.0 * p_1 * p_2_2 * f_2_2 * d12
        - p_2_2 * d12_2 * b_2
        - 2.0 * p_1_2 * p_2_2;
    let a1 = 2.0 * p_1_2 * p_2 * d12 * b + 2.0 * f_2 * p_2_3 * f_1 * d12
        - 2.0 * f_2_2 * p_2_3 * d12 * b
        - 2.0 * p_1 * p_2 * d12_2 * b;
    let a0 = -2.0 * f_2 * p_2_2 * f_1 * p_1 * d12 * b + f_2_2 * p_2_2 * d12_2 + 2.0 * p_1_3 * d12
        - p_1_2 * d12_2
        + f_2_2 * p_2_2 * p_1_2
        - p_1_4
        - 2.0 * f_2_2 * p_2_2 * p_1 * d12
        + p_2_2 * f_1_2 * p_1_2
        + f_2_2 * p_2_2 * d12_2 * b_2;

    let mut poses = Vec::with_capacity(4);
    for cos_theta in poly::real_quartic_roots([a4, a3, a2, a1, a0]) {
        if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&cos_theta) {
            continue;
        }
        let cos_theta = cos_theta.clamp(-1.0, 1.0);
        let cot_alpha = (-f_1 * p_1 / f_2 - cos_theta * p_2 + d12 * b)
            / (-f_1 * cos_theta * p_2 / f_2 + p_1 - d12);
        let sin_theta = (1.0 - cos_theta * cos_theta).sqrt();
        let sin_alpha = (1.0 / (cot_alpha * cot_alpha + 1.0)).sqrt();
        let mut cos_alpha = (1.0 - sin_alpha * sin_alpha).sqrt();
        if cot_alpha < 0.0 {
            cos_alpha = -cos_alpha;
        }
        let k = d12 * sin_alpha * (sin_alpha * b + cos_alpha);
        let c_local = Vec3::new(
            d12 * cos_alpha * (sin_alpha * b + cos_alpha),
            cos_theta * k,
            sin_theta * k,
        );
        let center = p1 + n.transpose() * c_local;
        let r_local = Matrix3::new(
            -cos_alpha,
            -sin_alpha * cos_theta,
            -sin_alpha * sin_theta,
            sin_alpha,
            -cos_alpha * cos_theta,
            -cos_alpha * sin_theta,
            0.0,
            -sin_theta,
            cos_theta,
        );
        let r = n.transpose() * r_local.transpose() * t;
        if !(center.iter().all(|v| v.is_finite()) && r.iter().all(|v| v.is_finite())) {
            continue;
        }
        // orthonormal by construction; only rounding is removed here
        let mut rotation = Rotation3::from_matrix_unchecked(r);
        rotation.renormalize();
        poses.push(Pose::new(rotation, center));
    }
    Ok(poses)
}

/// Gauss-Newton on the six reprojection residuals; keeps the pose only if
/// all three points end up in front of the camera and within tolerance.
fn polish(mut pose: Pose, corrs: &[Correspondence], camera: &Camera) -> Option<Pose> {
    let error = |pose: &Pose| -> Option<f64> {
        let mut worst = 0.0f64;
        for c in corrs {
            let (r, _) = residual_and_jacobian(c, pose, camera).ok()?;
            worst = worst.max(r.norm());
        }
        Some(worst)
    };
    let mut err = error(&pose)?;
    for _ in 0..POLISH_STEPS {
        if err <= 1e-9 {
            break;
        }
        let mut j = Matrix6::zeros();
        let mut r = Vector6::zeros();
        for (i, c) in corrs.iter().enumerate() {
            let (ri, ji) = residual_and_jacobian(c, &pose, camera).ok()?;
            j.fixed_view_mut::<2, 6>(2 * i, 0).copy_from(&ji);
            r.fixed_rows_mut::<2>(2 * i).copy_from(&ri);
        }
        let Some(step) = j.lu().solve(&(-r)) else { break };
        let candidate = pose.retract(&step);
        match error(&candidate) {
            Some(e) if e < err => {
                pose = candidate;
                err = e;
            }
            _ => break,
        }
    }
    (err <= MAX_SOLUTION_REPROJECTION_PX).then_some(pose)
}

pub(crate) mod poly {
    use alloc::vec::Vec;
    #[allow(unused_imports)]
    use num_traits::Float;

    /// Largest real root of the monic cubic `x³ + a x² + b x + c`.
    pub fn largest_cubic_root(a: f64, b: f64, c: f64) -> f64 {
        let p = b - a * a / 3.0;
        let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
        let disc = q * q / 4.0 + p * p * p / 27.0;
        let t = if disc > 0.0 {
            let s = disc.sqrt();
            (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()
        } else if p == 0.0 {
            (-q).cbrt()
        } else {
            let r = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
            r * (arg.acos() / 3.0).cos()
        };
        let mut x = t - a / 3.0;
        for _ in 0..3 {
            let f = ((x + a) * x + b) * x + c;
            let df = (3.0 * x + 2.0 * a) * x + b;
            if df == 0.0 {
                break;
            }
            let nx = x - f / df;
            if !nx.is_finite() {
                break;
            }
            x = nx;
        }
        x
    }

    fn eval(c: &[f64; 5], x: f64) -> (f64, f64) {
        let f = (((c[0] * x + c[1]) * x + c[2]) * x + c[3]) * x + c[4];
        let df = ((4.0 * c[0] * x + 3.0 * c[1]) * x + 2.0 * c[2]) * x + c[3];
        (f, df)
    }

    fn quadratic(b: f64, c: f64, tol: f64, out: &mut Vec<f64>) {
        let disc = b * b - 4.0 * c;
        if disc >= 0.0 {
            let s = disc.sqrt();
            // avoid cancellation
            let q = -0.5 * (b + if b >= 0.0 { s } else { -s });
            if q != 0.0 {
                out.push(q);
                out.push(c / q);
            } else {
                out.push(0.0);
                out.push(0.0);
            }
        } else if disc > -tol {
            out.push(-b / 2.0);
        }
    }

    /// Real roots of `c0 x⁴ + c1 x³ + c2 x² + c3 x + c4` (Ferrari), each
    /// polished with a few Newton steps.
    pub fn real_quartic_roots(c: [f64; 5]) -> Vec<f64> {
        let mut roots = Vec::with_capacity(4);
        if c[0] == 0.0 || !c.iter().all(|v| v.is_finite()) {
            return roots;
        }
        let (b, cc, d, e) = (c[1] / c[0], c[2] / c[0], c[3] / c[0], c[4] / c[0]);
        let p = cc - 3.0 * b * b / 8.0;
        let q = d - b * cc / 2.0 + b * b * b / 8.0;
        let r = e - b * d / 4.0 + b * b * cc / 16.0 - 3.0 * b * b * b * b / 256.0;
        let scale = 1.0 + p.abs() + q.abs().sqrt() + r.abs().sqrt();
        let tol = 1e-10 * scale * scale;

        let mut ys = Vec::with_capacity(4);
        if q.abs() <= 1e-14 * scale * scale * scale {
            let mut zs = Vec::with_capacity(2);
            quadratic(p, r, tol, &mut zs);
            for z in zs {
                if z >= 0.0 {
                    ys.push(z.sqrt());
                    ys.push(-z.sqrt());
                } else if z > -tol {
                    ys.push(0.0);
                }
            }
        } else {
            let m = largest_cubic_root(p, p * p / 4.0 - r, -q * q / 8.0);
            if m > 0.0 {
                let s = (2.0 * m).sqrt();
                quadratic(-s, p / 2.0 + m + q / (2.0 * s), tol, &mut ys);
                quadratic(s, p / 2.0 + m - q / (2.0 * s), tol, &mut ys);
            }
        }
        for y in ys {
            let mut x = y - b / 4.0;
            for _ in 0..4 {
                let (f, df) = eval(&c, x);
                if df == 0.0 || f == 0.0 {
                    break;
                }
                let nx = x - f / df;
                if !nx.is_finite() {
                    break;
                }
                x = nx;
            }
            roots.push(x);
        }
        roots
    }

}
