//! Structured simplicial meshes of boxes with a Dirichlet/traction split of
//! the boundary.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates padded to three entries; only the first `dim` are meaningful.
pub type Point = [f64; 3];

/// One of the `2·dim` faces of the box `Π [0, L_i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoxFace {
    pub axis: usize,
    pub upper: bool,
}

impl BoxFace {
    pub const fn new(axis: usize, upper: bool) -> Self {
        Self { axis, upper }
    }

    pub fn outward_normal(&self) -> Point {
        let mut n = [0.0; 3];
        n[self.axis] = if self.upper { 1.0 } else { -1.0 };
        n
    }

    /// Face whose outward normal is `n`, if `n` is axis-aligned.
    pub fn from_normal(n: &Point) -> Option<Self> {
        (0..3).find_map(|axis| {
            if n[axis] == 1.0 {
                Some(Self::new(axis, true))
            } else if n[axis] == -1.0 {
                Some(Self::new(axis, false))
            } else {
                None
            }
        })
    }

    pub fn all(dim: usize) -> impl Iterator<Item = BoxFace> {
        (0..dim).flat_map(|a| [BoxFace::new(a, false), BoxFace::new(a, true)])
    }
}

impl fmt::Display for BoxFace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axis = ['x', 'y', 'z'][self.axis];
        write!(f, "{axis}{}", if self.upper { '+' } else { '-' })
    }
}

impl FromStr for BoxFace {
    type Err = Error;

    /// Accepts `x-`, `x+`, `y-`, `y+`, `z-`, `z+` and the 2D aliases
    /// `left`, `right`, `bottom`, `top`.
    fn from_str(s: &str) -> Result<Self> {
        let face = match s.trim() {
            "x-" | "left" => BoxFace::new(0, false),
            "x+" | "right" => BoxFace::new(0, true),
            "y-" | "bottom" => BoxFace::new(1, false),
            "y+" | "top" => BoxFace::new(1, true),
            "z-" => BoxFace::new(2, false),
            "z+" => BoxFace::new(2, true),
            other => return Err(Error::Mesh(format!("unknown box face {other:?}"))),
        };
        Ok(face)
    }
}

impl Serialize for BoxFace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BoxFace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FacetTag {
    Dirichlet,
    Traction,
}

/// Selects the Dirichlet part of the boundary as a union of box faces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggingRule {
    pub dirichlet: Vec<BoxFace>,
}

impl TaggingRule {
    pub fn new(dirichlet: impl IntoIterator<Item = BoxFace>) -> Self {
        Self {
            dirichlet: dirichlet.into_iter().collect(),
        }
    }

    fn tag(&self, face: BoxFace) -> FacetTag {
        if self.dirichlet.contains(&face) {
            FacetTag::Dirichlet
        } else {
            FacetTag::Traction
        }
    }
}

/// A triangulated box together with its boundary partition.
///
/// Vertices carry P1 unknowns, simplices carry P0 quantities. Each boundary
/// facet lies on exactly one box face and carries exactly one tag.
#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    extents: Vec<f64>,
    resolution: Vec<usize>,
    vertices: Vec<Point>,
    simplices: Vec<usize>,
    volumes: Vec<f64>,
    grads: Vec<Point>,
    facets: Vec<usize>,
    facet_face: Vec<BoxFace>,
    facet_tag: Vec<FacetTag>,
    facet_element: Vec<usize>,
    facet_measure: Vec<f64>,
    dirichlet_vertex: Vec<bool>,
}

impl Mesh {
    /// Triangulates `Π [0, L_i]` with `n_i` cells per axis. Squares are split
    /// into two right triangles, cubes into six Kuhn tetrahedra.
    pub fn build(extents: &[f64], resolution: &[usize], rule: &TaggingRule) -> Result<Self> {
        let dim = extents.len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::Mesh(format!("dimension must be 2 or 3, got {dim}")));
        }
        if resolution.len() != dim {
            return Err(Error::Mesh(format!(
                "{} extents but {} resolution entries",
                dim,
                resolution.len()
            )));
        }
        if let Some(l) = extents.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::Mesh(format!("degenerate extent {l}")));
        }
        if resolution.contains(&0) {
            return Err(Error::Mesh("resolution must be at least 1 per axis".into()));
        }
        if let Some(f) = rule.dirichlet.iter().find(|f| f.axis >= dim) {
            return Err(Error::Mesh(format!("face {f} does not exist in {dim}D")));
        }

        let (vertices, simplices) = if dim == 2 {
            grid_2d(extents, resolution)
        } else {
            grid_3d(extents, resolution)
        };

        let mut mesh = Mesh {
            dim,
            extents: extents.to_vec(),
            resolution: resolution.to_vec(),
            vertices,
            simplices,
            volumes: Vec::new(),
            grads: Vec::new(),
            facets: Vec::new(),
            facet_face: Vec::new(),
            facet_tag: Vec::new(),
            facet_element: Vec::new(),
            facet_measure: Vec::new(),
            dirichlet_vertex: Vec::new(),
        };
        mesh.compute_geometry()?;
        mesh.find_boundary(rule)?;

        if !mesh.facet_tag.contains(&FacetTag::Dirichlet) {
            return Err(Error::Mesh(
                "Dirichlet boundary is empty; at least one facet must be clamped".into(),
            ));
        }
        Ok(mesh)
    }

    fn compute_geometry(&mut self) -> Result<()> {
        let d = self.dim;
        let ne = self.num_elements();
        self.volumes = Vec::with_capacity(ne);
        self.grads = Vec::with_capacity(ne * (d + 1));
        for e in 0..ne {
            let vs = self.simplex(e);
            let x0 = self.vertices[vs[0]];
            let (det, inv_rows) = if d == 2 {
                let j = Matrix2::from_fn(|r, c| self.vertices[vs[c + 1]][r] - x0[r]);
                let det = j.determinant();
                let inv = j
                    .try_inverse()
                    .ok_or_else(|| Error::Mesh(format!("degenerate element {e}")))?;
                let rows: Vec<Point> = (0..2).map(|k| [inv[(k, 0)], inv[(k, 1)], 0.0]).collect();
                (det, rows)
            } else {
                let j = Matrix3::from_fn(|r, c| self.vertices[vs[c + 1]][r] - x0[r]);
                let det = j.determinant();
                let inv = j
                    .try_inverse()
                    .ok_or_else(|| Error::Mesh(format!("degenerate element {e}")))?;
                let rows: Vec<Point> = (0..3)
                    .map(|k| [inv[(k, 0)], inv[(k, 1)], inv[(k, 2)]])
                    .collect();
                (det, rows)
            };
            if det <= 0.0 {
                return Err(Error::Mesh(format!("element {e} is not positively oriented")));
            }
            let fact = if d == 2 { 2.0 } else { 6.0 };
            self.volumes.push(det / fact);
            let mut g0 = [0.0; 3];
            for row in &inv_rows {
                for k in 0..3 {
                    g0[k] -= row[k];
                }
            }
            self.grads.push(g0);
            self.grads.extend(inv_rows);
        }
        Ok(())
    }

    fn find_boundary(&mut self, rule: &TaggingRule) -> Result<()> {
        let d = self.dim;
        let mut seen: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        for e in 0..self.num_elements() {
            let vs = self.simplex(e);
            for skip in 0..=d {
                let mut key: Vec<usize> = (0..=d).filter(|&k| k != skip).map(|k| vs[k]).collect();
                key.sort_unstable();
                seen.entry(key).or_insert((0, e)).0 += 1;
            }
        }
        let mut boundary: Vec<(Vec<usize>, usize)> = seen
            .into_iter()
            .filter(|(_, (count, _))| *count == 1)
            .map(|(k, (_, e))| (k, e))
            .collect();
        boundary.sort();

        self.dirichlet_vertex = vec![false; self.num_vertices()];
        for (verts, elem) in boundary {
            let face = self.face_of(&verts).ok_or_else(|| {
                Error::Mesh(format!("boundary facet {verts:?} does not lie on a box face"))
            })?;
            let tag = rule.tag(face);
            if tag == FacetTag::Dirichlet {
                for &v in &verts {
                    self.dirichlet_vertex[v] = true;
                }
            }
            self.facet_measure.push(self.simplex_measure(&verts));
            self.facets.extend_from_slice(&verts);
            self.facet_face.push(face);
            self.facet_tag.push(tag);
            self.facet_element.push(elem);
        }
        Ok(())
    }

    fn face_of(&self, verts: &[usize]) -> Option<BoxFace> {
        let tol = 1e-12;
        for axis in 0..self.dim {
            let l = self.extents[axis];
            if verts.iter().all(|&v| self.vertices[v][axis].abs() <= tol * l) {
                return Some(BoxFace::new(axis, false));
            }
            if verts
                .iter()
                .all(|&v| (self.vertices[v][axis] - l).abs() <= tol * l)
            {
                return Some(BoxFace::new(axis, true));
            }
        }
        None
    }

    fn simplex_measure(&self, verts: &[usize]) -> f64 {
        let p = |k: usize| self.vertices[verts[k]];
        let sub = |a: Point, b: Point| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        if verts.len() == 2 {
            let v = sub(p(1), p(0));
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
        } else {
            let a = sub(p(1), p(0));
            let b = sub(p(2), p(0));
            let c = [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ];
            0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    /// Largest cell edge along any axis.
    pub fn cell_size(&self) -> f64 {
        self.extents
            .iter()
            .zip(&self.resolution)
            .map(|(l, n)| l / *n as f64)
            .fold(0.0, f64::max)
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn num_elements(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    #[inline]
    pub fn num_facets(&self) -> usize {
        self.facet_face.len()
    }

    #[inline]
    pub fn vertex(&self, v: usize) -> &Point {
        &self.vertices[v]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    #[inline]
    pub fn simplex(&self, e: usize) -> &[usize] {
        let n = self.dim + 1;
        &self.simplices[e * n..(e + 1) * n]
    }

    #[inline]
    pub fn volume(&self, e: usize) -> f64 {
        self.volumes[e]
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Gradients of the barycentric coordinates of element `e`, one per
    /// local vertex.
    #[inline]
    pub fn grads(&self, e: usize) -> &[Point] {
        let n = self.dim + 1;
        &self.grads[e * n..(e + 1) * n]
    }

    pub fn centroid(&self, e: usize) -> Point {
        let vs = self.simplex(e);
        let mut c = [0.0; 3];
        for &v in vs {
            for k in 0..3 {
                c[k] += self.vertices[v][k];
            }
        }
        c.map(|x| x / vs.len() as f64)
    }

    #[inline]
    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    pub fn facet_face(&self, f: usize) -> BoxFace {
        self.facet_face[f]
    }

    pub fn facet_tag(&self, f: usize) -> FacetTag {
        self.facet_tag[f]
    }

    /// The element owning boundary facet `f`.
    pub fn facet_element(&self, f: usize) -> usize {
        self.facet_element[f]
    }

    pub fn facet_measure(&self, f: usize) -> f64 {
        self.facet_measure[f]
    }

    pub fn facet_centroid(&self, f: usize) -> Point {
        let vs = self.facet(f);
        let mut c = [0.0; 3];
        for &v in vs {
            for k in 0..3 {
                c[k] += self.vertices[v][k];
            }
        }
        c.map(|x| x / vs.len() as f64)
    }

    pub fn count_tagged(&self, tag: FacetTag) -> usize {
        self.facet_tag.iter().filter(|t| **t == tag).count()
    }

    /// Total measure of facets carrying `tag`.
    pub fn tagged_measure(&self, tag: FacetTag) -> f64 {
        (0..self.num_facets())
            .filter(|&f| self.facet_tag[f] == tag)
            .map(|f| self.facet_measure[f])
            .sum()
    }

    #[inline]
    pub fn is_dirichlet_vertex(&self, v: usize) -> bool {
        self.dirichlet_vertex[v]
    }

    /// Averages a vertex field over each element (its value at the centroid).
    pub fn element_means(&self, values: &[f64]) -> Vec<f64> {
        (0..self.num_elements())
            .map(|e| {
                let vs = self.simplex(e);
                vs.iter().map(|&v| values[v]).sum::<f64>() / vs.len() as f64
            })
            .collect()
    }

    /// Writes `vertices.csv`, `simplices.csv` and `facets.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let axes = &["x", "y", "z"][..self.dim];

        let mut s = String::from("vertex");
        for a in axes {
            s.push_str(&format!(",{a} [length]"));
        }
        s.push_str(",dirichlet\n");
        for (v, p) in self.vertices.iter().enumerate() {
            s.push_str(&v.to_string());
            for x in &p[..self.dim] {
                s.push_str(&format!(",{x}"));
            }
            s.push_str(&format!(",{}\n", self.dirichlet_vertex[v] as u8));
        }
        write_file(&dir.join("vertices.csv"), &s)?;

        let mut s = String::from("simplex");
        for k in 0..=self.dim {
            s.push_str(&format!(",v{k}"));
        }
        s.push_str(",volume [length^d]\n");
        for e in 0..self.num_elements() {
            s.push_str(&e.to_string());
            for v in self.simplex(e) {
                s.push_str(&format!(",{v}"));
            }
            s.push_str(&format!(",{}\n", self.volumes[e]));
        }
        write_file(&dir.join("simplices.csv"), &s)?;

        let mut s = String::from("facet");
        for k in 0..self.dim {
            s.push_str(&format!(",v{k}"));
        }
        s.push_str(",face,tag,element,measure [length^(d-1)]\n");
        for f in 0..self.num_facets() {
            s.push_str(&f.to_string());
            for v in self.facet(f) {
                s.push_str(&format!(",{v}"));
            }
            let tag = match self.facet_tag[f] {
                FacetTag::Dirichlet => "dirichlet",
                FacetTag::Traction => "traction",
            };
            s.push_str(&format!(
                ",{},{tag},{},{}\n",
                self.facet_face[f], self.facet_element[f], self.facet_measure[f]
            ));
        }
        write_file(&dir.join("facets.csv"), &s)
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn coord(l: f64, i: usize, n: usize) -> f64 {
    l * (i as f64 / n as f64)
}

fn grid_2d(ext: &[f64], res: &[usize]) -> (Vec<Point>, Vec<usize>) {
    let (nx, ny) = (res[0], res[1]);
    let id = |i: usize, j: usize| i + j * (nx + 1);
    let mut verts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            verts.push([coord(ext[0], i, nx), coord(ext[1], j, ny), 0.0]);
        }
    }
    let mut simp = Vec::with_capacity(6 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            simp.extend_from_slice(&[a, b, d]);
            simp.extend_from_slice(&[a, d, c]);
        }
    }
    (verts, simp)
}

fn grid_3d(ext: &[f64], res: &[usize]) -> (Vec<Point>, Vec<usize>) {
    let (nx, ny, nz) = (res[0], res[1], res[2]);
    let id = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut verts = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                verts.push([
                    coord(ext[0], i, nx),
                    coord(ext[1], j, ny),
                    coord(ext[2], k, nz),
                ]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut simp = Vec::with_capacity(24 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for (p, perm) in PERMS.iter().enumerate() {
                    let mut pos = [i, j, k];
                    let mut tet = [id(i, j, k), 0, 0, 0];
                    for (step, &axis) in perm.iter().enumerate() {
                        pos[axis] += 1;
                        tet[step + 1] = id(pos[0], pos[1], pos[2]);
                    }
                    // odd permutations produce negatively oriented paths
                    if matches!(p, 1 | 2 | 5) {
                        tet.swap(2, 3);
                    }
                    simp.extend_from_slice(&tet);
                }
            }
        }
    }
    (verts, simp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn left() -> TaggingRule {
        TaggingRule::new(["left".parse().unwrap()])
    }

    #[test]
    fn single_cell_square() {
        let m = Mesh::build(&[1.0, 1.0], &[1, 1], &left()).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.num_facets(), 4);
        assert_eq!(m.count_tagged(FacetTag::Dirichlet), 1);
        assert_eq!(m.count_tagged(FacetTag::Traction), 3);
        assert!(m.is_dirichlet_vertex(0) && m.is_dirichlet_vertex(2));
        assert!(!m.is_dirichlet_vertex(1) && !m.is_dirichlet_vertex(3));
    }

    #[test]
    fn all_faces_dirichlet_leaves_traction_empty() {
        let rule = TaggingRule::new(BoxFace::all(2));
        let m = Mesh::build(&[1.0, 1.0], &[1, 1], &rule).unwrap();
        assert_eq!(m.count_tagged(FacetTag::Traction), 0);
        assert_eq!(m.count_tagged(FacetTag::Dirichlet), 4);
    }

    #[test]
    fn rejects_empty_dirichlet_and_bad_input() {
        let none = TaggingRule::new([]);
        assert!(matches!(
            Mesh::build(&[1.0, 1.0], &[1, 1], &none),
            Err(Error::Mesh(_))
        ));
        assert!(Mesh::build(&[0.0, 1.0], &[1, 1], &left()).is_err());
        assert!(Mesh::build(&[1.0, f64::NAN], &[1, 1], &left()).is_err());
        assert!(Mesh::build(&[1.0, 1.0], &[0, 1], &left()).is_err());
        assert!(Mesh::build(&[1.0], &[1], &left()).is_err());
        let z = TaggingRule::new(["z-".parse().unwrap()]);
        assert!(Mesh::build(&[1.0, 1.0], &[2, 2], &z).is_err());
    }

    #[test]
    fn volumes_and_boundary_measure() {
        let m = Mesh::build(&[2.0, 0.5], &[5, 3], &left()).unwrap();
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
        assert!(m.volumes().iter().all(|v| *v > 0.0));
        let perim: f64 = (0..m.num_facets()).map(|f| m.facet_measure(f)).sum();
        assert!((perim - 5.0).abs() < 1e-13);
        assert!((m.tagged_measure(FacetTag::Dirichlet) - 0.5).abs() < 1e-14);

        let m3 = Mesh::build(&[1.0, 2.0, 3.0], &[2, 3, 2], &TaggingRule::new(["z-".parse().unwrap()]))
            .unwrap();
        assert_eq!(m3.num_elements(), 6 * 12);
        assert!((m3.total_volume() - 6.0).abs() < 1e-12);
        let area: f64 = (0..m3.num_facets()).map(|f| m3.facet_measure(f)).sum();
        assert!((area - 22.0).abs() < 1e-12);
        assert!((m3.tagged_measure(FacetTag::Dirichlet) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn barycentric_gradients_reproduce_linear_functions() {
        let m = Mesh::build(&[1.0, 1.0, 1.0], &[2, 2, 2], &left()).unwrap();
        for e in 0..m.num_elements() {
            let g = m.grads(e);
            let vs = m.simplex(e);
            for k in 0..3 {
                let mut s = [0.0; 3];
                for (a, &v) in vs.iter().enumerate() {
                    for c in 0..3 {
                        s[c] += m.vertex(v)[k] * g[a][c];
                    }
                }
                for c in 0..3 {
                    let want = if c == k { 1.0 } else { 0.0 };
                    assert!((s[c] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn face_names_round_trip() {
        for f in BoxFace::all(3) {
            assert_eq!(f.to_string().parse::<BoxFace>().unwrap(), f);
            assert_eq!(BoxFace::from_normal(&f.outward_normal()), Some(f));
        }
        assert!("w+".parse::<BoxFace>().is_err());
    }

    #[test]
    fn csv_dump_has_headers() {
        let dir = tempfile::tempdir().unwrap();
        let m = Mesh::build(&[1.0, 1.0], &[2, 1], &left()).unwrap();
        m.write_csv(dir.path()).unwrap();
        let v = std::fs::read_to_string(dir.path().join("vertices.csv")).unwrap();
        assert!(v.starts_with("vertex,x [length],y [length],dirichlet"));
        assert_eq!(v.lines().count(), 1 + 6);
        let f = std::fs::read_to_string(dir.path().join("facets.csv")).unwrap();
        assert_eq!(f.lines().count(), 1 + 6);
        assert!(f.contains("x-,dirichlet"));
    }
}
