//! ASCII PLY meshes.
//!
//! The reader takes `x y z` vertex properties (plus optional `red green blue`)
//! in any order, skips unknown properties and elements, and fan-triangulates
//! polygons. Binary PLY is rejected.

use std::fmt::Write;
use std::path::Path;

use refpose_core::geometry::Vec3;
use refpose_core::TriMesh;

use super::{read_text, write_atomic};
use crate::error::{Error, Result};

struct Element {
    name: String,
    count: usize,
    /// Scalar property names; list properties are recorded as `None`.
    props: Vec<Option<String>>,
}

pub fn parse(text: &str, path: &Path) -> Result<TriMesh> {
    let err = |line: usize, m: &str| Error::parse(path, line, m);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(err(1, "missing `ply` magic")),
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut saw_format = false;
    loop {
        let (n, line) = lines.next().ok_or_else(|| err(0, "header ends without `end_header`"))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => saw_format = true,
            ["format", other, ..] => return Err(err(n, &format!("unsupported PLY format {other:?}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| err(n, "bad element count"))?,
                props: vec![],
            }),
            ["property", "list", _, _, _] => {
                elements.last_mut().ok_or_else(|| err(n, "property before element"))?.props.push(None)
            }
            ["property", _, name] => elements
                .last_mut()
                .ok_or_else(|| err(n, "property before element"))?
                .props
                .push(Some(name.to_string())),
            _ => return Err(err(n, &format!("unrecognized header line {line:?}"))),
        }
    }
    if !saw_format {
        return Err(err(1, "missing `format` line"));
    }

    let mut vertices = Vec::new();
    let mut colors: Option<Vec<[u8; 3]>> = None;
    let mut faces = Vec::new();
    let mut body = lines.filter(|(_, l)| !l.is_empty());
    for el in &elements {
        let find = |name: &str| el.props.iter().position(|p| p.as_deref() == Some(name));
        for _ in 0..el.count {
            let (n, line) = body.next().ok_or_else(|| err(0, &format!("missing {} data", el.name)))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<f64> {
                f.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(n, &format!("bad value in field {}", i + 1)))
            };
            match el.name.as_str() {
                "vertex" => {
                    let (Some(x), Some(y), Some(z)) = (find("x"), find("y"), find("z")) else {
                        return Err(err(n, "vertex element lacks x/y/z"));
                    };
                    if el.props.iter().any(Option::is_none) {
                        return Err(err(n, "list properties on vertices are not supported"));
                    }
                    if f.len() != el.props.len() {
                        return Err(err(n, &format!("expected {} values", el.props.len())));
                    }
                    vertices.push(Vec3::new(num(x)?, num(y)?, num(z)?));
                    if let (Some(r), Some(g), Some(b)) = (find("red"), find("green"), find("blue")) {
                        let c = |i| num(i).map(|v| v.clamp(0.0, 255.0) as u8);
                        colors.get_or_insert_with(Vec::new).push([c(r)?, c(g)?, c(b)?]);
                    }
                }
                "face" => {
                    let k = num(0)? as usize;
                    if k < 3 || f.len() < k + 1 {
                        return Err(err(n, "face needs at least 3 indices"));
                    }
                    let idx = (1..=k)
                        .map(|i| f[i].parse::<u32>().map_err(|_| err(n, "bad vertex index")))
                        .collect::<Result<Vec<u32>>>()?;
                    for i in 1..k - 1 {
                        faces.push([idx[0], idx[i], idx[i + 1]]);
                    }
                }
                _ => {}
            }
        }
    }
    TriMesh::new(vertices, faces, colors).map_err(|e| err(0, &e.to_string()))
}

pub fn format(mesh: &TriMesh) -> String {
    let colors = mesh.colors();
    let mut s = String::from("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", mesh.vertices().len());
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    if colors.is_some() {
        s.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    let _ = writeln!(s, "element face {}", mesh.faces().len());
    s.push_str("property list uchar int vertex_indices\nend_header\n");
    for (i, v) in mesh.vertices().iter().enumerate() {
        let _ = write!(s, "{} {} {}", v.x, v.y, v.z);
        if let Some(c) = colors {
            let _ = write!(s, " {} {} {}", c[i][0], c[i][1], c[i][2]);
        }
        s.push('\n');
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn read(path: &Path) -> Result<TriMesh> {
    parse(&read_text(path)?, path)
}

pub fn write(path: &Path, mesh: &TriMesh) -> Result<()> {
    write_atomic(path, format(mesh).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> TriMesh {
        TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 1.0),
                Vec3::new(1.0, 0.0, 1.0),
                Vec3::new(1.0, 1.0, 1.0000000000000002),
                Vec3::new(0.0, 1.0, 1.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            Some(vec![[1, 2, 3], [4, 5, 6], [7, 8, 9], [10, 11, 255]]),
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let m = quad();
        assert_eq!(parse(&format(&m), Path::new("m.ply")).unwrap(), m);
    }

    #[test]
    fn foreign_layout_with_polygon() {
        let text = "ply\nformat ascii 1.0\ncomment made elsewhere\nelement vertex 4\n\
                    property float z\nproperty float nx\nproperty float x\nproperty float y\n\
                    element face 1\nproperty list uchar uint vertex_index\nend_header\n\
                    1 0 0 0\n1 0 1 0\n1 0 1 1\n1 0 0 1\n4 0 1 2 3\n";
        let m = parse(text, Path::new("m.ply")).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        assert_eq!(m.vertices()[1], Vec3::new(1.0, 0.0, 1.0));
        assert!(m.colors().is_none());
    }

    #[test]
    fn binary_and_bad_indices_are_rejected() {
        let bin = "ply\nformat binary_little_endian 1.0\nend_header\n";
        assert!(parse(bin, Path::new("m")).unwrap_err().to_string().contains("m:2:"));
        let bad = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n\
                   property float z\nelement face 1\nproperty list uchar int vertex_indices\n\
                   end_header\n0 0 0\n3 0 1 2\n";
        assert!(parse(bad, Path::new("m")).is_err());
    }
}
