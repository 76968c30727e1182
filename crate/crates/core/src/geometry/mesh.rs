//! ASCII OFF triangle meshes: parsing, topological validation and a
//! subdivided icosahedron for tests.

use crate::{Error, Result, Vec3};
use std::collections::HashMap;
use std::path::Path;

#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn face_normal_area(&self, f: usize) -> (Vec3, f64) {
        let [a, b, c] = self.faces[f];
        let cr = (self.vertices[b] - self.vertices[a]).cross(&(self.vertices[c] - self.vertices[a]));
        let n = cr.norm();
        (cr / n, 0.5 * n)
    }

    pub fn centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f];
        (self.vertices[a] + self.vertices[b] + self.vertices[c]) / 3.0
    }

    /// Volume enclosed, positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                self.vertices[a].dot(&self.vertices[b].cross(&self.vertices[c])) / 6.0
            })
            .sum()
    }

    /// Every edge shared by exactly two faces traversing it in opposite
    /// directions.
    pub fn validate(&self) -> Result<()> {
        let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for &[a, b, c] in &self.faces {
            for (p, q) in [(a, b), (b, c), (c, a)] {
                if p == q {
                    return Err(Error::Geometry(format!("degenerate face with repeated vertex {p}")));
                }
                let key = (p.min(q), p.max(q));
                let e = edges.entry(key).or_insert((0, 0));
                if p < q {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        for k in &keys {
            let (f, b) = edges[k];
            if f + b != 2 {
                return Err(Error::OpenSurface(k.0, k.1, f + b));
            }
        }
        for k in &keys {
            let (f, b) = edges[k];
            if f != 1 || b != 1 {
                return Err(Error::InconsistentWinding(k.0, k.1));
            }
        }
        Ok(())
    }

    /// Reverse all faces when the winding points inward.
    pub fn orient_outward(&mut self) {
        if self.signed_volume() < 0.0 {
            for f in self.faces.iter_mut() {
                f.swap(1, 2);
            }
        }
    }

    pub fn to_off(&self) -> String {
        let mut s = format!("OFF\n{} {} 0\n", self.vertices.len(), self.faces.len());
        for v in &self.vertices {
            s.push_str(&format!("{:.17e} {:.17e} {:.17e}\n", v.x, v.y, v.z));
        }
        for f in &self.faces {
            s.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
        }
        s
    }
}

/// Parse OFF text; comments start with '#'.
pub fn parse_off(text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, msg: &str| Error::MeshParse {
        line,
        msg: msg.to_string(),
    };
    let (ln, header) = lines.next().ok_or_else(|| err(0, "empty file"))?;
    let rest_of_header = match header.strip_prefix("OFF") {
        Some(r) => r.trim(),
        None => return Err(err(ln, "missing OFF header")),
    };
    let (ln, counts) = if rest_of_header.is_empty() {
        lines.next().ok_or_else(|| err(ln, "missing counts line"))?
    } else {
        (ln, rest_of_header)
    };
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(ln, "counts line must hold integers"))?;
    if nums.len() < 2 {
        return Err(err(ln, "counts line needs vertex and face counts"));
    }
    let (nv, nf) = (nums[0], nums[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| err(ln, "unexpected end of file in vertex list"))?;
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln, "vertex coordinates must be numbers"))?;
        if v.len() != 3 {
            return Err(err(ln, "vertex line must have 3 coordinates"));
        }
        vertices.push(Vec3::new(v[0], v[1], v[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| err(ln, "unexpected end of file in face list"))?;
        let f: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln, "face indices must be non-negative integers"))?;
        if f.len() != 4 || f[0] != 3 {
            return Err(err(ln, "only triangular faces \"3 i j k\" are supported"));
        }
        if f[1..].iter().any(|&i| i >= nv) {
            return Err(err(ln, "face references a missing vertex"));
        }
        faces.push([f[1], f[2], f[3]]);
    }
    Ok(TriMesh { vertices, faces })
}

/// Read, validate and orient an OFF mesh.
pub fn load_off(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path)?;
    let mut m = parse_off(&text)?;
    m.validate()?;
    m.orient_outward();
    Ok(m)
}

/// Icosahedron subdivided `level` times and projected to the sphere.
pub fn icosphere(level: usize, center: Vec3, radius: f64) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut nf = Vec::with_capacity(f.len() * 4);
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a] + v[b]) / 2.0).normalize());
                v.len() - 1
            })
        };
        for &[a, b, c] in &f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            nf.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = nf;
    }
    let vertices = v.iter().map(|p| center + p * radius).collect();
    let mut m = TriMesh { vertices, faces: f };
    m.orient_outward();
    m
}
