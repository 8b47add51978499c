use core::f64::consts::PI;

use proptest::prelude::*;
use refpose_core::geometry::{project, Vec2, Vec3};
use refpose_core::metrics::{
    fixed_threshold_accuracy, max_reprojection_diff, reprojection_accuracy, ThresholdSet,
};
use refpose_core::p3p::p3p;
use refpose_core::{
    effective_inliers, lift, lo_ransac, pose_error, render_depth, Camera, Correspondence, Distortion,
    MatchPair, MatchSet, Pose, PoseError, RansacConfig, TriMesh,
};

fn camera() -> Camera {
    Camera::with_distortion(500.0, 510.0, 320.0, 240.0, Distortion::new(-0.05, 0.01, 0.001, -0.0005), 640, 480)
        .unwrap()
}

fn unit() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 1e-2)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
}

fn pose() -> impl Strategy<Value = Pose> {
    (unit(), 0.0..PI, -20.0..20.0f64, -20.0..20.0f64, -20.0..20.0f64)
        .prop_map(|(a, t, x, y, z)| Pose::from_axis_angle(a * t, Vec3::new(x, y, z)))
}

/// A point seen at normalized image coordinates (x, y) and depth z.
fn point_in_view(pose: &Pose, x: f64, y: f64, z: f64) -> Vec3 {
    pose.to_model(&Vec3::new(x * z, y * z, z))
}

fn view_points(n: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-0.5..0.5f64, -0.4..0.4f64, 2.0..20.0f64), n)
}

fn ground_plane() -> TriMesh {
    let s = 200.0;
    let v = vec![Vec3::new(-s, -s, 0.0), Vec3::new(s, -s, 0.0), Vec3::new(s, s, 0.0), Vec3::new(-s, s, 0.0)];
    TriMesh::new(v, vec![[0, 1, 2], [0, 2, 3]], None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pose_error_is_symmetric_and_zero_on_self(a in pose(), b in pose()) {
        let (ab, ba) = (pose_error(&a, &b), pose_error(&b, &a));
        prop_assert!((ab.position_err - ba.position_err).abs() < 1e-12);
        prop_assert!((ab.rotation_err - ba.rotation_err).abs() < 1e-9);
        prop_assert!((0.0..=180.0).contains(&ab.rotation_err));
        let zero = pose_error(&a, &a);
        prop_assert!(zero.position_err == 0.0 && zero.rotation_err < 1e-6);
    }

    #[test]
    fn fixed_threshold_accuracy_grows_with_thresholds(
        errs in prop::collection::vec((0.0..10.0f64, 0.0..20.0f64), 1..40),
        steps in prop::collection::vec((0.0..2.0f64, 0.0..4.0f64), 1..6),
    ) {
        let errors: Vec<PoseError> =
            errs.iter().map(|&(p, r)| PoseError { position_err: p, rotation_err: r }).collect();
        let mut acc = (0.01, 0.01);
        let thresholds: Vec<(f64, f64)> = steps
            .iter()
            .map(|&(dc, dr)| {
                acc = (acc.0 + dc, acc.1 + dr);
                acc
            })
            .collect();
        let out = fixed_threshold_accuracy(&errors, &ThresholdSet::new(thresholds).unwrap()).unwrap();
        prop_assert!(out.windows(2).all(|w| w[0] <= w[1]), "{out:?}");
        prop_assert!(out.iter().all(|v| (0.0..=100.0).contains(v)));
    }

    #[test]
    fn reprojection_accuracy_grows_with_thresholds(
        r in prop::collection::vec(prop_oneof![0.0..200.0f64, Just(f64::INFINITY)], 1..40),
        mut t in prop::collection::vec(0.0..300.0f64, 1..6),
    ) {
        t.sort_by(f64::total_cmp);
        let out = reprojection_accuracy(&r, &t).unwrap();
        prop_assert!(out.windows(2).all(|w| w[0] <= w[1]), "{out:?}");
    }

    #[test]
    fn reprojection_difference_is_symmetric(a in pose(), pts in view_points(12), d in unit(), shift in 0.0..2.0f64) {
        let cam = camera();
        let points: Vec<Vec3> = pts.iter().map(|&(x, y, z)| point_in_view(&a, x, y, z)).collect();
        let b = Pose::new(*a.rotation(), a.center() + d * shift);
        let ab = max_reprojection_diff(&a, &b, &points, &cam).unwrap();
        let ba = max_reprojection_diff(&b, &a, &points, &cam).unwrap();
        prop_assert_eq!(ab.to_bits(), ba.to_bits());
        prop_assert_eq!(max_reprojection_diff(&a, &a, &points, &cam).unwrap(), 0.0);
    }

    #[test]
    fn distortion_inverts_inside_the_image(x in -0.6..0.6f64, y in -0.45..0.45f64) {
        let d = camera().distortion().to_owned();
        let p = Vec2::new(x, y);
        let back = d.undistort(&d.distort(&p));
        prop_assert!((back - p).norm() < 1e-12, "{p} -> {back}");
    }

    #[test]
    fn effective_inliers_are_bounded(
        px in prop::collection::vec((-50.0..700.0f64, -50.0..550.0f64), 0..100),
        cell in 1.0..200.0f64,
    ) {
        let pixels: Vec<Vec2> = px.iter().map(|&(u, v)| Vec2::new(u, v)).collect();
        let n = effective_inliers(&pixels, 640, 480, cell);
        let cells = ((640.0 / cell).ceil() * (480.0 / cell).ceil()) as usize;
        prop_assert!(n <= pixels.len() && n <= cells);
        let mut doubled = pixels.clone();
        doubled.extend_from_slice(&pixels);
        prop_assert_eq!(effective_inliers(&doubled, 640, 480, cell), n);
    }

    #[test]
    fn lifting_rendered_pixels_lands_on_the_surface(
        eye in (-20.0..20.0f64, -20.0..20.0f64, 5.0..30.0f64),
        target in (-5.0..5.0f64, -5.0..5.0f64),
        pixels in prop::collection::vec((0u32..640, 0u32..480), 1..30),
    ) {
        let cam = camera();
        let eye = Vec3::new(eye.0, eye.1, eye.2);
        let pose = Pose::look_at(eye, Vec3::new(target.0, target.1, 0.0), Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let depth = render_depth(&ground_plane(), &pose, &cam);
        let pairs: Vec<MatchPair> = pixels
            .iter()
            .map(|&(x, y)| {
                let u = Vec2::new(x as f64, y as f64);
                MatchPair { u, u_r: u }
            })
            .collect();
        let set = MatchSet::new("real", "render", pairs).unwrap();
        let lifted = lift(&set, &depth, &pose, &cam);
        prop_assert_eq!(lifted.correspondences.len() + lifted.dropped, set.pairs().len());
        for c in &lifted.correspondences {
            prop_assert!(c.point.z.abs() < 1e-6, "{}", c.point);
            let u = project(&c.point, &pose, &cam).unwrap();
            prop_assert!((u - c.pixel).norm() < 1e-6, "{u} vs {}", c.pixel);
        }
    }

    /// Rotations close to a half turn are where orthonormalizing the P3P
    /// rotation by iteration from the identity used to break down.
    #[test]
    fn p3p_recovers_near_half_turns(a in unit(), t in (PI - 0.2)..PI, c in (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64), pts in view_points(3)) {
        let cam = camera();
        let truth = Pose::from_axis_angle(a * t, Vec3::new(c.0, c.1, c.2));
        let corrs: Vec<Correspondence> = pts
            .iter()
            .map(|&(x, y, z)| {
                let point = point_in_view(&truth, x, y, z);
                Correspondence { pixel: project(&point, &truth, &cam).unwrap(), point }
            })
            .collect();
        // nearly collinear triples are ill-posed for any solver
        let (p0, p1, p2) = (corrs[0].point, corrs[1].point, corrs[2].point);
        let area = (p1 - p0).cross(&(p2 - p0)).norm();
        prop_assume!(area > 0.5);
        let best = p3p(&corrs, &cam)
            .unwrap()
            .iter()
            .map(|p| pose_error(&truth, p))
            .min_by(|x, y| x.position_err.total_cmp(&y.position_err))
            .expect("at least one solution");
        prop_assert!(best.position_err < 1e-6 && best.rotation_err < 1e-5, "{best:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lo_ransac_ignores_input_order(
        truth in pose(),
        pts in view_points(40),
        outliers in prop::collection::vec((0.0..640.0f64, 0.0..480.0f64), 8),
        order in Just((0..48).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let cam = camera();
        let mut corrs: Vec<Correspondence> = pts
            .iter()
            .map(|&(x, y, z)| {
                let point = point_in_view(&truth, x, y, z);
                Correspondence { pixel: project(&point, &truth, &cam).unwrap(), point }
            })
            .collect();
        for (k, &(u, v)) in outliers.iter().enumerate() {
            let point = corrs[k].point;
            corrs.push(Correspondence { pixel: Vec2::new(u, v), point });
        }
        let shuffled: Vec<Correspondence> = order.iter().map(|&i| corrs[i]).collect();
        let cfg = RansacConfig { rng_seed: 5, ..RansacConfig::default() };
        let a = lo_ransac(&corrs, &cam, &cfg).unwrap();
        let b = lo_ransac(&shuffled, &cam, &cfg).unwrap();
        prop_assert_eq!(&a.pose, &b.pose);
        prop_assert_eq!(a.inlier_count, b.inlier_count);
        for (j, &i) in order.iter().enumerate() {
            prop_assert_eq!(a.inlier_mask[i], b.inlier_mask[j]);
        }
        let e = pose_error(&truth, &a.pose);
        prop_assert!(e.position_err < 1e-6 && e.rotation_err < 1e-6, "{e:?}");
    }
}
