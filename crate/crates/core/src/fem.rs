//! P1/P0 finite-element operators on a [`Mesh`].
//!
//! Displacements are vertex vectors laid out as `u[v * dim + c]`. Strains,
//! stresses and plastic strains are element-constant. All quadrature is exact
//! for the integrands that appear with P0 data (one point per element) and
//! uses the vertex rule wherever a P1 function multiplies given data.

use nalgebra_sparse::CscMatrix;

use crate::linalg::Triplets;
use crate::mesh::{FacetTag, Mesh, Point};
use crate::tensor::{IsotropicRank4, SymTensor};

/// Numbering of the free (non-Dirichlet) displacement components.
#[derive(Clone, Debug)]
pub struct DofMap {
    dim: usize,
    free: Vec<Option<usize>>,
    n_free: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let dim = mesh.dim();
        let mut free = Vec::with_capacity(mesh.num_vertices() * dim);
        let mut n_free = 0;
        for v in 0..mesh.num_vertices() {
            for _ in 0..dim {
                if mesh.is_dirichlet_vertex(v) {
                    free.push(None);
                } else {
                    free.push(Some(n_free));
                    n_free += 1;
                }
            }
        }
        Self { dim, free, n_free }
    }

    pub fn num_free(&self) -> usize {
        self.n_free
    }

    pub fn num_total(&self) -> usize {
        self.free.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free[dof]
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free];
        for (dof, slot) in self.free.iter().enumerate() {
            if let Some(k) = slot {
                out[*k] = full[dof];
            }
        }
        out
    }

    /// Scatters free values into a full vector; constrained entries are zero.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .map(|slot| slot.map_or(0.0, |k| reduced[k]))
            .collect()
    }
}

/// Strain of the basis field `e_comp φ_a`, i.e. `sym(e_comp ⊗ ∇φ_a)`.
#[inline]
pub fn basis_strain(dim: usize, grad: &Point, comp: usize) -> SymTensor {
    let mut m = [[0.0; 3]; 3];
    m[comp][..dim].copy_from_slice(&grad[..dim]);
    SymTensor::sym_part(dim, &m)
}

/// Element-constant strain of a P1 displacement field.
pub fn sym_grad(mesh: &Mesh, u: &[f64]) -> Vec<SymTensor> {
    (0..mesh.num_elements())
        .map(|e| element_strain(mesh, e, u))
        .collect()
}

#[inline]
pub fn element_strain(mesh: &Mesh, e: usize, u: &[f64]) -> SymTensor {
    let d = mesh.dim();
    let mut g = [[0.0; 3]; 3];
    for (a, &v) in mesh.simplex(e).iter().enumerate() {
        let ga = &mesh.grads(e)[a];
        for i in 0..d {
            let ui = u[v * d + i];
            for j in 0..d {
                g[i][j] += ui * ga[j];
            }
        }
    }
    SymTensor::sym_part(d, &g)
}

/// Element-constant divergence of a P1 displacement field.
pub fn divergence(mesh: &Mesh, u: &[f64]) -> Vec<f64> {
    sym_grad(mesh, u).iter().map(SymTensor::trace).collect()
}

fn stiffness_into(mesh: &Mesh, op: &IsotropicRank4, map: impl Fn(usize) -> Option<usize>, t: &mut Triplets) {
    let d = mesh.dim();
    let mut strains = Vec::with_capacity(12);
    let mut stresses = Vec::with_capacity(12);
    for e in 0..mesh.num_elements() {
        let vs = mesh.simplex(e);
        let vol = mesh.volume(e);
        strains.clear();
        stresses.clear();
        for (a, _) in vs.iter().enumerate() {
            for i in 0..d {
                let s = basis_strain(d, &mesh.grads(e)[a], i);
                stresses.push(op.apply(&s));
                strains.push(s);
            }
        }
        for (a, &va) in vs.iter().enumerate() {
            for i in 0..d {
                let Some(r) = map(va * d + i) else { continue };
                let sig = &stresses[a * d + i];
                for (b, &vb) in vs.iter().enumerate() {
                    for j in 0..d {
                        let Some(c) = map(vb * d + j) else { continue };
                        t.push(r, c, vol * sig.dot(&strains[b * d + j]));
                    }
                }
            }
        }
    }
}

/// `[K]_{(a,i),(b,j)} = ∫ Op(ε(e_i φ_a)) · ε(e_j φ_b)` over all components.
pub fn assemble_stiffness(mesh: &Mesh, op: &IsotropicRank4) -> CscMatrix<f64> {
    let n = mesh.num_vertices() * mesh.dim();
    let mut t = Triplets::new(n);
    stiffness_into(mesh, op, Some, &mut t);
    t.to_csc()
}

/// Stiffness restricted to the free components (Dirichlet rows and columns
/// eliminated; the prescribed values are zero).
pub fn assemble_stiffness_reduced(mesh: &Mesh, op: &IsotropicRank4, dofs: &DofMap) -> CscMatrix<f64> {
    let mut t = Triplets::new(dofs.num_free());
    stiffness_into(mesh, op, |k| dofs.free_index(k), &mut t);
    t.to_csc()
}

/// Vertex-rule (lumped) mass matrix diagonal.
pub fn lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.num_vertices()];
    let share = 1.0 / (mesh.dim() + 1) as f64;
    for e in 0..mesh.num_elements() {
        let w = mesh.volume(e) * share;
        for &v in mesh.simplex(e) {
            m[v] += w;
        }
    }
    m
}

/// Scalar P1 Laplacian `∫ ∇φ_a · ∇φ_b`.
pub fn assemble_laplacian(mesh: &Mesh) -> CscMatrix<f64> {
    let d = mesh.dim();
    let mut t = Triplets::new(mesh.num_vertices());
    for e in 0..mesh.num_elements() {
        let vs = mesh.simplex(e);
        let g = mesh.grads(e);
        let vol = mesh.volume(e);
        for (a, &va) in vs.iter().enumerate() {
            for (b, &vb) in vs.iter().enumerate() {
                let s: f64 = (0..d).map(|k| g[a][k] * g[b][k]).sum();
                t.push(va, vb, vol * s);
            }
        }
    }
    t.to_csc()
}

/// Heat operators: lumped mass diagonal and the (unscaled) Laplacian.
pub fn assemble_heat_matrices(mesh: &Mesh) -> (Vec<f64>, CscMatrix<f64>) {
    (lumped_mass(mesh), assemble_laplacian(mesh))
}

/// `F_(a,i) = ∫ Op(E) · ε(e_i φ_a)` for element-constant `E`.
pub fn assemble_tensor_load(mesh: &Mesh, op: &IsotropicRank4, field: &[SymTensor]) -> Vec<f64> {
    let stress: Vec<SymTensor> = field.iter().map(|e| op.apply(e)).collect();
    assemble_stress_divergence(mesh, &stress)
}

/// `F_(a,i) = ∫ S · ε(e_i φ_a)` for element-constant `S`.
pub fn assemble_stress_divergence(mesh: &Mesh, stress: &[SymTensor]) -> Vec<f64> {
    let d = mesh.dim();
    let mut f = vec![0.0; mesh.num_vertices() * d];
    for (e, s) in stress.iter().enumerate() {
        let vol = mesh.volume(e);
        for (a, &v) in mesh.simplex(e).iter().enumerate() {
            let sg = s.apply_to(&mesh.grads(e)[a]);
            for i in 0..d {
                f[v * d + i] += vol * sg[i];
            }
        }
    }
    f
}

/// `F_(a,i) = ∫ p div(e_i φ_a)` for element-constant `p`.
pub fn assemble_pressure_load(mesh: &Mesh, p: &[f64]) -> Vec<f64> {
    let d = mesh.dim();
    let mut f = vec![0.0; mesh.num_vertices() * d];
    for (e, &pe) in p.iter().enumerate() {
        if pe == 0.0 {
            continue;
        }
        let vol = mesh.volume(e);
        for (a, &v) in mesh.simplex(e).iter().enumerate() {
            for i in 0..d {
                f[v * d + i] += vol * pe * mesh.grads(e)[a][i];
            }
        }
    }
    f
}

/// Vertex-rule body load `∫ b · v`.
pub fn assemble_body_load(mesh: &Mesh, mass: &[f64], b: impl Fn(&Point) -> Point) -> Vec<f64> {
    let d = mesh.dim();
    let mut f = vec![0.0; mesh.num_vertices() * d];
    for v in 0..mesh.num_vertices() {
        let bv = b(mesh.vertex(v));
        for i in 0..d {
            f[v * d + i] = mass[v] * bv[i];
        }
    }
    f
}

/// Vertex-rule traction load `∫_{Γ1} g · v`. The data receive the facet's
/// outward normal so that values at edges and corners stay face-specific.
pub fn assemble_traction(mesh: &Mesh, g: impl Fn(&Point, &Point) -> Point) -> Vec<f64> {
    let d = mesh.dim();
    let mut f = vec![0.0; mesh.num_vertices() * d];
    for k in 0..mesh.num_facets() {
        if mesh.facet_tag(k) != FacetTag::Traction {
            continue;
        }
        let n = mesh.facet_face(k).outward_normal();
        let w = mesh.facet_measure(k) / d as f64;
        for &v in mesh.facet(k) {
            let gv = g(mesh.vertex(v), &n);
            for i in 0..d {
                f[v * d + i] += w * gv[i];
            }
        }
    }
    f
}

/// Vertex-rule boundary flux load `κ ∫_{∂Ω} h v`.
pub fn assemble_flux(mesh: &Mesh, kappa: f64, h: impl Fn(&Point, &Point) -> f64) -> Vec<f64> {
    let d = mesh.dim();
    let mut f = vec![0.0; mesh.num_vertices()];
    for k in 0..mesh.num_facets() {
        let n = mesh.facet_face(k).outward_normal();
        let w = kappa * mesh.facet_measure(k) / d as f64;
        for &v in mesh.facet(k) {
            f[v] += w * h(mesh.vertex(v), &n);
        }
    }
    f
}

/// Scatters an element-constant source to vertices with volume weights;
/// the total `Σ_e w_e |e|` is preserved exactly.
pub fn scatter_element_source(mesh: &Mesh, w: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0; mesh.num_vertices()];
    let share = 1.0 / (mesh.dim() + 1) as f64;
    for (e, &we) in w.iter().enumerate() {
        let c = we * mesh.volume(e) * share;
        for &v in mesh.simplex(e) {
            f[v] += c;
        }
    }
    f
}

/// Interpolates `f` at the vertices of each element and returns the
/// element-constant values at the centroids.
pub fn centroid_values(mesh: &Mesh, f: impl Fn(&Point) -> f64) -> Vec<f64> {
    (0..mesh.num_elements()).map(|e| f(&mesh.centroid(e))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{asymmetry, matvec, to_dense};
    use crate::mesh::{BoxFace, TaggingRule};

    fn square(n: usize) -> Mesh {
        Mesh::build(&[1.0, 1.0], &[n, n], &TaggingRule::new([BoxFace::new(0, false)])).unwrap()
    }

    fn interpolate(mesh: &Mesh, f: impl Fn(&Point) -> Point) -> Vec<f64> {
        let d = mesh.dim();
        let mut u = vec![0.0; mesh.num_vertices() * d];
        for v in 0..mesh.num_vertices() {
            let val = f(mesh.vertex(v));
            u[v * d..v * d + d].copy_from_slice(&val[..d]);
        }
        u
    }

    #[test]
    fn sym_grad_of_affine_fields() {
        let m = square(3);
        let swap = interpolate(&m, |x| [x[1], x[0], 0.0]);
        let mut off = SymTensor::zero(2);
        off.set(0, 1, 1.0);
        for e in sym_grad(&m, &swap) {
            assert!((e - off).norm() < 1e-13);
        }
        let c = interpolate(&m, |_| [2.0, -1.0, 0.0]);
        assert!(sym_grad(&m, &c).iter().all(|e| e.norm() < 1e-13));
        let stretch = interpolate(&m, |x| [x[0], 0.0, 0.0]);
        for e in sym_grad(&m, &stretch) {
            assert!((e - SymTensor::diag(&[1.0, 0.0])).norm() < 1e-13);
        }
    }

    #[test]
    fn stiffness_annihilates_rigid_modes() {
        let op = IsotropicRank4::new(1.3, 0.7);
        for m in [square(1), square(4)] {
            let k = assemble_stiffness(&m, &op);
            assert!(asymmetry(&k) < 1e-13);
            for mode in [
                interpolate(&m, |_| [1.0, 0.0, 0.0]),
                interpolate(&m, |_| [0.0, 1.0, 0.0]),
                interpolate(&m, |x| [x[1], -x[0], 0.0]),
            ] {
                let r = matvec(&k, &mode);
                assert!(r.iter().all(|x| x.abs() < 1e-13), "{r:?}");
            }
        }
    }

    #[test]
    fn heat_matrices_basic_properties() {
        let m = Mesh::build(&[2.0, 1.5], &[3, 4], &TaggingRule::new([BoxFace::new(1, true)])).unwrap();
        let (mass, lap) = assemble_heat_matrices(&m);
        assert!((mass.iter().sum::<f64>() - 3.0).abs() < 1e-13);
        assert!(mass.iter().all(|x| *x > 0.0));
        assert!(asymmetry(&lap) < 1e-14);
        let r = matvec(&lap, &vec![3.7; m.num_vertices()]);
        assert!(r.iter().all(|x| x.abs() < 1e-13));
        // non-obtuse mesh: off-diagonal entries are non-positive
        let d = to_dense(&lap);
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                if i != j {
                    assert!(d[(i, j)] <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn zero_and_constant_loads() {
        let m = square(2);
        let op = IsotropicRank4::new(1.0, 1.0);
        let zero = vec![SymTensor::zero(2); m.num_elements()];
        assert!(assemble_tensor_load(&m, &op, &zero).iter().all(|x| *x == 0.0));

        // constant pressure integrates against a translation to zero
        let f = assemble_pressure_load(&m, &vec![2.5; m.num_elements()]);
        for c in 0..2 {
            let t = interpolate(&m, |_| {
                let mut p = [0.0; 3];
                p[c] = 1.0;
                p
            });
            let s: f64 = f.iter().zip(&t).map(|(a, b)| a * b).sum();
            assert!(s.abs() < 1e-13);
        }
    }

    #[test]
    fn constant_traction_on_one_edge() {
        let rule = TaggingRule::new([BoxFace::new(0, false), BoxFace::new(1, false), BoxFace::new(1, true)]);
        let m = Mesh::build(&[1.0, 2.0], &[3, 4], &rule).unwrap();
        let f = assemble_traction(&m, |_, n| [0.7 * n[0], 0.0, 0.0]);
        let total_x: f64 = f.iter().step_by(2).sum();
        let total_y: f64 = f.iter().skip(1).step_by(2).sum();
        assert!((total_x - 2.0 * 0.7).abs() < 1e-13);
        assert_eq!(total_y, 0.0);
        // only vertices on x = 1 receive load
        for v in 0..m.num_vertices() {
            if m.vertex(v)[0] < 1.0 {
                assert_eq!(f[2 * v], 0.0);
            }
        }
    }

    #[test]
    fn flux_and_scatter_preserve_totals() {
        let m = square(3);
        let f = assemble_flux(&m, 2.0, |_, _| 1.5);
        assert!((f.iter().sum::<f64>() - 2.0 * 1.5 * 4.0).abs() < 1e-13);
        let w: Vec<f64> = (0..m.num_elements()).map(|e| e as f64).collect();
        let s = scatter_element_source(&m, &w);
        let want: f64 = w.iter().enumerate().map(|(e, we)| we * m.volume(e)).sum();
        assert!((s.iter().sum::<f64>() - want).abs() < 1e-12);
    }

    #[test]
    fn dof_map_restrict_expand() {
        let m = square(2);
        let dofs = DofMap::new(&m);
        assert_eq!(dofs.num_total(), 18);
        assert_eq!(dofs.num_free(), 12);
        let full: Vec<f64> = (0..18).map(|k| k as f64).collect();
        let back = dofs.expand(&dofs.restrict(&full));
        for v in 0..m.num_vertices() {
            for c in 0..2 {
                let want = if m.is_dirichlet_vertex(v) { 0.0 } else { full[2 * v + c] };
                assert_eq!(back[2 * v + c], want);
            }
        }
    }

    fn sorted_eigenvalues(a: &CscMatrix<f64>) -> Vec<f64> {
        let mut ev: Vec<f64> = to_dense(a).symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }

    #[test]
    fn stiffness_spectrum_has_exactly_the_rigid_modes() {
        // 2D: two translations and one rotation
        let k = assemble_stiffness(&square(1), &IsotropicRank4::new(1.0, 0.5));
        let ev = sorted_eigenvalues(&k);
        let scale = ev.last().unwrap().abs();
        assert!(ev[..3].iter().all(|l| l.abs() < 1e-12 * scale), "{ev:?}");
        assert!(ev[3] > 1e-6 * scale, "{ev:?}");

        // 3D: three translations and three rotations
        let cube = Mesh::build(&[1.0; 3], &[1; 3], &TaggingRule::new([BoxFace::new(0, false)])).unwrap();
        let ev = sorted_eigenvalues(&assemble_stiffness(&cube, &IsotropicRank4::new(1.0, 0.5)));
        let scale = ev.last().unwrap().abs();
        assert!(ev[..6].iter().all(|l| l.abs() < 1e-12 * scale), "{ev:?}");
        assert!(ev[6] > 1e-6 * scale, "{ev:?}");
    }

    #[test]
    fn laplacian_spectrum_has_only_the_constant_mode() {
        let ev = sorted_eigenvalues(&assemble_laplacian(&square(2)));
        let scale = ev.last().unwrap().abs();
        assert!(ev[0].abs() < 1e-12 * scale, "{ev:?}");
        assert!(ev[1] > 1e-6 * scale, "{ev:?}");
    }
}
