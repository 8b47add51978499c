//! Z-buffer rasterization of triangle meshes into camera-frame depth maps.
//!
//! Triangles are rasterized in undistorted pixel space. Each covered sample
//! stores the nearest face; depth is then evaluated exactly as the
//! intersection of the pixel ray with that face's plane. With lens
//! distortion the output grid is sampled at distorted pixel centers by
//! looking up the undistorted raster (nearest virtual pixel).

use alloc::vec;
use alloc::vec::Vec;

use alloc::format;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{Camera, Pose, Vec2, Vec3};

/// Geometry closer than this (meters, camera z) is clipped away.
const CLIP_NEAR: f64 = 1e-4;
const NO_FACE: u32 = u32::MAX;
/// Depth value marking pixels not covered by any triangle.
pub const INVALID_DEPTH: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    colors: Option<Vec<[u8; 3]>>,
}

impl TriMesh {
    pub fn new(
        vertices: Vec<Vec3>,
        faces: Vec<[u32; 3]>,
        colors: Option<Vec<[u8; 3]>>,
    ) -> Result<Self> {
        let n = vertices.len();
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&k| k as usize >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {i} references a vertex outside 0..{n}"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {i} repeats a vertex index")));
            }
        }
        if let Some(c) = &colors {
            if c.len() != n {
                return Err(Error::InvalidMesh(format!(
                    "{} colors for {n} vertices",
                    c.len()
                )));
            }
        }
        Ok(Self { vertices, faces, colors })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Appends `other`, re-indexing its faces. Colors survive only when both
    /// meshes carry them (or `self` is empty).
    pub fn append(&mut self, other: &TriMesh) {
        let offset = self.vertices.len() as u32;
        self.colors = match (self.colors.take(), other.colors.as_ref()) {
            (Some(mut a), Some(b)) => {
                a.extend_from_slice(b);
                Some(a)
            }
            (None, Some(b)) if self.vertices.is_empty() => Some(b.clone()),
            _ => None,
        };
        self.vertices.extend_from_slice(&other.vertices);
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]));
    }

    fn face_color(&self, face: usize) -> [u8; 3] {
        match &self.colors {
            Some(c) => {
                let f = self.faces[face];
                let mut acc = [0u32; 3];
                for &k in &f {
                    for ch in 0..3 {
                        acc[ch] += c[k as usize][ch] as u32;
                    }
                }
                [(acc[0] / 3) as u8, (acc[1] / 3) as u8, (acc[2] / 3) as u8]
            }
            None => [200, 200, 200],
        }
    }
}

/// Row-major camera-frame z-depth per pixel; uncovered pixels are invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    depth: Vec<f64>,
}

impl DepthMap {
    pub fn invalid(width: u32, height: u32) -> Self {
        Self { width, height, depth: vec![INVALID_DEPTH; width as usize * height as usize] }
    }

    /// Wraps raw values; non-finite or non-positive entries become invalid.
    pub fn from_raw(width: u32, height: u32, mut depth: Vec<f64>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if depth.len() != expected {
            return Err(Error::LengthMismatch { expected, got: depth.len() });
        }
        for d in &mut depth {
            if !(d.is_finite() && *d > 0.0) {
                *d = INVALID_DEPTH;
            }
        }
        Ok(Self { width, height, depth })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Raw row-major values with [`INVALID_DEPTH`] for uncovered pixels.
    pub fn as_slice(&self) -> &[f64] {
        &self.depth
    }

    pub fn get(&self, x: u32, y: u32) -> Option<f64> {
        if x >= self.width || y >= self.height {
            return None;
        }
        let d = self.depth[y as usize * self.width as usize + x as usize];
        (d > 0.0).then_some(d)
    }

    /// Nearest-pixel lookup; `None` when out of bounds or uncovered.
    pub fn depth_at(&self, u: &Vec2) -> Option<f64> {
        let (x, y) = (u.x.round(), u.y.round());
        if !(x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64) {
            return None;
        }
        self.get(x as u32, y as u32)
    }

    pub fn valid_count(&self) -> usize {
        self.depth.iter().filter(|&&d| d > 0.0).count()
    }
}

/// Flat-shaded RGB rendering, for overlays and external matchers.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<[u8; 3]>,
}

/// Depth plus the index of the visible face per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendering {
    pub depth: DepthMap,
    face_ids: Vec<u32>,
}

impl Rendering {
    pub fn face_at(&self, x: u32, y: u32) -> Option<usize> {
        if x >= self.depth.width || y >= self.depth.height {
            return None;
        }
        let f = self.face_ids[y as usize * self.depth.width as usize + x as usize];
        (f != NO_FACE).then_some(f as usize)
    }

    pub fn color_image(&self, mesh: &TriMesh) -> ColorImage {
        let rgb = self
            .face_ids
            .iter()
            .map(|&f| if f == NO_FACE { [0, 0, 0] } else { mesh.face_color(f as usize) })
            .collect();
        ColorImage { width: self.depth.width, height: self.depth.height, rgb }
    }
}

pub fn render_depth(mesh: &TriMesh, pose: &Pose, camera: &Camera) -> DepthMap {
    render(mesh, pose, camera).depth
}

pub fn render_color(mesh: &TriMesh, pose: &Pose, camera: &Camera) -> ColorImage {
    render(mesh, pose, camera).color_image(mesh)
}

/// Supporting plane `n · X = d` of a face in camera coordinates.
#[derive(Clone, Copy)]
struct Plane {
    n: Vec3,
    d: f64,
}

impl Plane {
    /// Camera z-depth where the ray through normalized `(x, y)` hits the plane.
    fn depth_along(&self, x: f64, y: f64) -> Option<f64> {
        let denom = self.n.x * x + self.n.y * y + self.n.z;
        if denom == 0.0 {
            return None;
        }
        let z = self.d / denom;
        (z > CLIP_NEAR && z.is_finite()).then_some(z)
    }
}

/// Undistorted raster covering every output pixel's ray.
struct VirtualGrid {
    origin_x: i64,
    origin_y: i64,
    width: usize,
    height: usize,
}

impl VirtualGrid {
    fn for_camera(camera: &Camera) -> Self {
        let (w, h) = (camera.width() as i64, camera.height() as i64);
        if camera.distortion().is_zero() {
            return Self { origin_x: 0, origin_y: 0, width: w as usize, height: h as usize };
        }
        let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (0.0f64, 0.0f64, (w - 1) as f64, (h - 1) as f64);
        let mut visit = |px: i64, py: i64| {
            let x = camera.pixel_to_normalized(&Vec2::new(px as f64, py as f64));
            let vx = camera.fx() * x.x + camera.cx();
            let vy = camera.fy() * x.y + camera.cy();
            if vx.is_finite() && vy.is_finite() {
                lo_x = lo_x.min(vx);
                hi_x = hi_x.max(vx);
                lo_y = lo_y.min(vy);
                hi_y = hi_y.max(vy);
            }
        };
        for px in 0..w {
            visit(px, 0);
            visit(px, h - 1);
        }
        for py in 0..h {
            visit(0, py);
            visit(w - 1, py);
        }
        let lo_x = (lo_x.floor() as i64 - 1).max(-w);
        let lo_y = (lo_y.floor() as i64 - 1).max(-h);
        let hi_x = (hi_x.ceil() as i64 + 1).min(2 * w);
        let hi_y = (hi_y.ceil() as i64 + 1).min(2 * h);
        Self {
            origin_x: lo_x,
            origin_y: lo_y,
            width: (hi_x - lo_x + 1) as usize,
            height: (hi_y - lo_y + 1) as usize,
        }
    }
}

/// Clips a polygon against `z >= CLIP_NEAR` (Sutherland-Hodgman, one plane).
fn clip_near(poly: &[Vec3; 3]) -> ([Vec3; 4], usize) {
    let mut out = [Vec3::zeros(); 4];
    let mut n = 0;
    for i in 0..3 {
        let a = poly[i];
        let b = poly[(i + 1) % 3];
        let a_in = a.z >= CLIP_NEAR;
        let b_in = b.z >= CLIP_NEAR;
        if a_in {
            out[n] = a;
            n += 1;
        }
        if a_in != b_in {
            let t = (CLIP_NEAR - a.z) / (b.z - a.z);
            out[n] = a + (b - a) * t;
            n += 1;
        }
    }
    (out, n)
}

/// Rasterizes `mesh` at `pose`. Nearest surface wins; ties keep the lower
/// face index. No back-face culling.
pub fn render(mesh: &TriMesh, pose: &Pose, camera: &Camera) -> Rendering {
    let (w, h) = (camera.width() as usize, camera.height() as usize);
    let grid = VirtualGrid::for_camera(camera);
    let (fx, fy, cx, cy) = (camera.fx(), camera.fy(), camera.cx(), camera.cy());

    let cam_vertices: Vec<Vec3> = mesh.vertices.iter().map(|v| pose.to_camera(v)).collect();
    let mut planes = Vec::with_capacity(mesh.faces.len());
    let mut zbuf = vec![f64::INFINITY; grid.width * grid.height];
    let mut fbuf = vec![NO_FACE; grid.width * grid.height];

    for (face_index, face) in mesh.faces.iter().enumerate() {
        let tri = [
            cam_vertices[face[0] as usize],
            cam_vertices[face[1] as usize],
            cam_vertices[face[2] as usize],
        ];
        let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
        let plane = Plane { n, d: n.dot(&tri[0]) };
        planes.push(plane);
        let scale = n.norm();
        if scale == 0.0 || plane.d.abs() <= 1e-12 * scale {
            // degenerate or seen exactly edge-on
            continue;
        }
        let (clipped, count) = clip_near(&tri);
        if count < 3 {
            continue;
        }
        let mut screen = [Vec2::zeros(); 4];
        for k in 0..count {
            let p = clipped[k];
            screen[k] = Vec2::new(
                fx * p.x / p.z + cx - grid.origin_x as f64,
                fy * p.y / p.z + cy - grid.origin_y as f64,
            );
        }
        for k in 1..count - 1 {
            raster_triangle(
                [screen[0], screen[k], screen[k + 1]],
                &grid,
                |gx, gy| {
                    let px = (gx as i64 + grid.origin_x) as f64;
                    let py = (gy as i64 + grid.origin_y) as f64;
                    plane.depth_along((px - cx) / fx, (py - cy) / fy)
                },
                |idx, z| {
                    if z < zbuf[idx] {
                        zbuf[idx] = z;
                        fbuf[idx] = face_index as u32;
                    }
                },
            );
        }
    }

    if camera.distortion().is_zero() {
        let depth = zbuf
            .into_iter()
            .map(|z| if z.is_finite() { z } else { INVALID_DEPTH })
            .collect();
        return Rendering {
            depth: DepthMap { width: w as u32, height: h as u32, depth },
            face_ids: fbuf,
        };
    }

    let mut depth = vec![INVALID_DEPTH; w * h];
    let mut face_ids = vec![NO_FACE; w * h];
    for y in 0..h {
        for x in 0..w {
            let xn = camera.pixel_to_normalized(&Vec2::new(x as f64, y as f64));
            let gx = (fx * xn.x + cx - grid.origin_x as f64).round();
            let gy = (fy * xn.y + cy - grid.origin_y as f64).round();
            if !(gx >= 0.0 && gy >= 0.0 && gx < grid.width as f64 && gy < grid.height as f64) {
                continue;
            }
            let f = fbuf[gy as usize * grid.width + gx as usize];
            if f == NO_FACE {
                continue;
            }
            if let Some(z) = planes[f as usize].depth_along(xn.x, xn.y) {
                depth[y * w + x] = z;
                face_ids[y * w + x] = f;
            }
        }
    }
    Rendering { depth: DepthMap { width: w as u32, height: h as u32, depth }, face_ids }
}

/// Visits grid samples inside a screen-space triangle (edges inclusive).
fn raster_triangle(
    v: [Vec2; 3],
    grid: &VirtualGrid,
    depth: impl Fn(usize, usize) -> Option<f64>,
    mut write: impl FnMut(usize, f64),
) {
    let area = (v[1] - v[0]).perp(&(v[2] - v[0]));
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let sign = area.signum();
    let min_x = v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min).ceil().max(0.0);
    let max_x = v
        .iter()
        .map(|p| p.x)
        .fold(f64::NEG_INFINITY, f64::max)
        .floor()
        .min(grid.width as f64 - 1.0);
    let min_y = v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min).ceil().max(0.0);
    let max_y = v
        .iter()
        .map(|p| p.y)
        .fold(f64::NEG_INFINITY, f64::max)
        .floor()
        .min(grid.height as f64 - 1.0);
    if min_x > max_x || min_y > max_y {
        return;
    }
    let edge = |a: Vec2, b: Vec2, p: Vec2| sign * (b - a).perp(&(p - a));
    for gy in min_y as usize..=max_y as usize {
        for gx in min_x as usize..=max_x as usize {
            let p = Vec2::new(gx as f64, gy as f64);
            if edge(v[0], v[1], p) >= 0.0 && edge(v[1], v[2], p) >= 0.0 && edge(v[2], v[0], p) >= 0.0
            {
                if let Some(z) = depth(gx, gy) {
                    write(gy * grid.width + gx, z);
                }
            }
        }
    }
}
