//! 2D-2D matches between a real image and a rendering, and their lifting to
//! 2D-3D correspondences through the rendered depth.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Camera, Pose, Vec2, Vec3};
use crate::render::DepthMap;

/// A pixel in the real image and its match in the rendered image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub u: Vec2,
    pub u_r: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchSet {
    image_id: String,
    render_id: String,
    pairs: Vec<MatchPair>,
}

impl MatchSet {
    pub fn new(
        image_id: impl Into<String>,
        render_id: impl Into<String>,
        pairs: Vec<MatchPair>,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyMatches);
        }
        if let Some(i) = pairs.iter().position(|p| {
            !(p.u.iter().all(|v| v.is_finite()) && p.u_r.iter().all(|v| v.is_finite()))
        }) {
            return Err(Error::NonFiniteMatch(i));
        }
        Ok(Self { image_id: image_id.into(), render_id: render_id.into(), pairs })
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn render_id(&self) -> &str {
        &self.render_id
    }

    pub fn pairs(&self) -> &[MatchPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Real-image pixel and the model-frame point it observes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub pixel: Vec2,
    pub point: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lifted {
    pub correspondences: Vec<Correspondence>,
    /// Pairs whose rendered pixel had no valid depth.
    pub dropped: usize,
}

/// Back-projects every rendered pixel through `depth` (rendered at exactly
/// `pose` and `camera`) into the model frame. Pairs without valid depth are
/// dropped; order is preserved otherwise.
pub fn lift(matches: &MatchSet, depth: &DepthMap, pose: &Pose, camera: &Camera) -> Lifted {
    let mut out = Lifted::default();
    for pair in &matches.pairs {
        match depth.depth_at(&pair.u_r) {
            Some(z) => out.correspondences.push(Correspondence {
                pixel: pair.u,
                point: pose.to_model(&camera.unproject(&pair.u_r, z)),
            }),
            None => out.dropped += 1,
        }
    }
    out
}

/// Lifts several match sets for the same image and rendering pose and
/// concatenates the results.
pub fn lift_all(sets: &[MatchSet], depth: &DepthMap, pose: &Pose, camera: &Camera) -> Lifted {
    let mut out = Lifted::default();
    for set in sets {
        let l = lift(set, depth, pose, camera);
        out.correspondences.extend(l.correspondences);
        out.dropped += l.dropped;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::project;
    use crate::render::{render_depth, TriMesh};
    use alloc::vec;

    fn cam() -> Camera {
        Camera::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    fn plane_z2() -> TriMesh {
        TriMesh::new(
            vec![
                Vec3::new(-10.0, -10.0, 2.0),
                Vec3::new(10.0, -10.0, 2.0),
                Vec3::new(10.0, 10.0, 2.0),
                Vec3::new(-10.0, 10.0, 2.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn principal_point_lifts_onto_the_plane() {
        let dm = render_depth(&plane_z2(), &Pose::identity(), &cam());
        let c = Vec2::new(320.0, 240.0);
        let m = MatchSet::new("img", "r", vec![MatchPair { u: c, u_r: c }]).unwrap();
        let l = lift(&m, &dm, &Pose::identity(), &cam());
        assert_eq!(l.correspondences[0].point, Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(l.dropped, 0);
    }

    #[test]
    fn uncovered_pixels_are_dropped() {
        // plane only covers part of the view
        let mesh = TriMesh::new(
            vec![
                Vec3::new(-0.5, -0.5, 2.0),
                Vec3::new(0.5, -0.5, 2.0),
                Vec3::new(0.5, 0.5, 2.0),
            ],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        let dm = render_depth(&mesh, &Pose::identity(), &cam());
        let pairs = vec![
            MatchPair { u: Vec2::new(400.0, 200.0), u_r: Vec2::new(400.0, 200.0) },
            MatchPair { u: Vec2::new(5.0, 5.0), u_r: Vec2::new(5.0, 5.0) },
            MatchPair { u: Vec2::new(420.0, 230.0), u_r: Vec2::new(420.0, 230.0) },
        ];
        let m = MatchSet::new("img", "r", pairs).unwrap();
        let l = lift(&m, &dm, &Pose::identity(), &cam());
        assert_eq!(l.correspondences.len(), 2);
        assert_eq!(l.dropped, 1);
    }

    #[test]
    fn lifted_points_reproject_within_half_pixel() {
        let pose = Pose::from_axis_angle(Vec3::new(0.05, -0.1, 0.02), Vec3::new(0.3, -0.2, 0.1));
        let mesh = TriMesh::new(
            vec![
                Vec3::new(-10.0, -10.0, 2.0),
                Vec3::new(10.0, -10.0, 8.0),
                Vec3::new(10.0, 10.0, 8.0),
                Vec3::new(-10.0, 10.0, 2.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            None,
        )
        .unwrap();
        let camera = cam();
        let dm = render_depth(&mesh, &pose, &camera);
        let mut pairs = vec![];
        for i in 0..20 {
            for j in 0..15 {
                let u = Vec2::new(13.7 + 31.1 * i as f64, 9.3 + 31.7 * j as f64);
                pairs.push(MatchPair { u, u_r: u });
            }
        }
        let m = MatchSet::new("img", "r", pairs.clone()).unwrap();
        let l = lift(&m, &dm, &pose, &camera);
        assert_eq!(l.correspondences.len(), pairs.len());
        for (c, p) in l.correspondences.iter().zip(&pairs) {
            let back = project(&c.point, &pose, &camera).unwrap();
            assert!((back - p.u_r).norm() < 0.5);
        }
    }

    #[test]
    fn match_set_validation() {
        assert_eq!(MatchSet::new("a", "b", vec![]), Err(Error::EmptyMatches));
        let bad = MatchPair { u: Vec2::new(f64::NAN, 0.0), u_r: Vec2::zeros() };
        assert_eq!(MatchSet::new("a", "b", vec![bad]), Err(Error::NonFiniteMatch(0)));
    }
}
