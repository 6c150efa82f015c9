//! Manufactured solutions: source terms that force prescribed exact fields,
//! and L² errors of discrete fields against them.
//!
//! Only the thermally decoupled material (no thermal stress, no plastic
//! flow) is supported, so the exact stress is
//! `σ = D(ε(u)) + C(ε(∂t u))` and the heat source reduces to viscous heating.

use std::sync::Arc;

use crate::data::{ProblemData, SourceMode};
use crate::error::{Error, Result};
use crate::expr::{Expr, Jet, VectorExpr};
use crate::materials::MaterialModel;
use crate::mesh::{FacetTag, Mesh, Point};
use crate::tensor::{IsotropicRank4, SymTensor};

#[derive(Clone, Debug, PartialEq)]
pub struct Manufactured {
    pub u: VectorExpr,
    pub theta: Expr,
}

fn jets(u: &VectorExpr, dim: usize, t: f64, x: &Point, rate: bool) -> Vec<Jet> {
    (0..dim).map(|i| u.0[i].jet(t, x, rate)).collect()
}

fn strain(dim: usize, j: &[Jet]) -> SymTensor {
    let mut g = [[0.0; 3]; 3];
    for i in 0..dim {
        g[i] = j[i].grad;
    }
    SymTensor::sym_part(dim, &g)
}

/// `div Op(ε(v))` for an isotropic operator: `μ Δv + (μ + λ) ∇ div v`.
fn div_op(op: &IsotropicRank4, dim: usize, j: &[Jet]) -> Point {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate().take(dim) {
        let lap = j[i].laplacian(dim);
        let grad_div: f64 = (0..dim).map(|k| j[k].hess[i][k]).sum();
        *o = op.mu * lap + (op.mu + op.lambda) * grad_div;
    }
    out
}

impl Manufactured {
    pub fn new(u: VectorExpr, theta: Expr) -> Self {
        Self { u, theta }
    }

    pub fn exact_u(&self, t: f64, x: &Point) -> Point {
        self.u.value(t, x)
    }

    pub fn exact_theta(&self, t: f64, x: &Point) -> f64 {
        self.theta.value(t, x)
    }

    pub fn exact_stress(&self, material: &MaterialModel, dim: usize, t: f64, x: &Point) -> SymTensor {
        let e = strain(dim, &jets(&self.u, dim, t, x, false));
        let r = strain(dim, &jets(&self.u, dim, t, x, true));
        material.elastic.apply(&e) + material.viscous.apply(&r)
    }

    /// Problem data with boundary data and volume sources computed from the
    /// exact fields. Fails unless the material is decoupled and the exact
    /// displacement vanishes on the Dirichlet part at a few sample times.
    pub fn problem_data(&self, mesh: &Mesh, material: &MaterialModel, t_final: f64) -> Result<ProblemData> {
        let dim = mesh.dim();
        if self.u.len() != dim {
            return Err(Error::Manufactured(format!(
                "exact displacement has {} components in {dim}D",
                self.u.len()
            )));
        }
        if !material.is_decoupled() {
            return Err(Error::Manufactured(
                "manufactured solutions need c = 0 and an inactive flow rule (k0 = inf)".into(),
            ));
        }
        let mut points: Vec<Point> = Vec::new();
        for v in 0..mesh.num_vertices() {
            if mesh.is_dirichlet_vertex(v) {
                points.push(*mesh.vertex(v));
            }
        }
        for f in 0..mesh.num_facets() {
            if mesh.facet_tag(f) == FacetTag::Dirichlet {
                points.push(mesh.facet_centroid(f));
            }
        }
        for t in [0.0, 0.37 * t_final, t_final] {
            for x in &points {
                let u = self.u.value(t, x);
                if u.iter().any(|c| c.abs() > 1e-12) {
                    return Err(Error::Manufactured(format!(
                        "exact displacement is {u:?} at Dirichlet point {x:?}, t = {t}"
                    )));
                }
            }
        }

        let m = *material;
        let u = self.u.clone();
        let th = self.theta.clone();
        let stress = {
            let u = u.clone();
            move |t: f64, x: &Point| {
                let e = strain(dim, &jets(&u, dim, t, x, false));
                let r = strain(dim, &jets(&u, dim, t, x, true));
                m.elastic.apply(&e) + m.viscous.apply(&r)
            }
        };
        let f_u = {
            let u = u.clone();
            move |t: f64, x: &Point| {
                let a = div_op(&m.elastic, dim, &jets(&u, dim, t, x, false));
                let b = div_op(&m.viscous, dim, &jets(&u, dim, t, x, true));
                let mut f = [0.0; 3];
                for i in 0..dim {
                    f[i] = -(a[i] + b[i]);
                }
                f
            }
        };
        let f_theta = {
            let u = u.clone();
            let th = th.clone();
            move |t: f64, x: &Point| {
                let r = strain(dim, &jets(&u, dim, t, x, true));
                let lap = th.jet(t, x, false).laplacian(dim);
                th.time_derivative(t, x) - m.kappa * lap - m.viscous.apply(&r).dot(&r)
            }
        };
        let th_flux = th.clone();
        let th0 = th.clone();
        let u0 = u.clone();
        Ok(ProblemData {
            body: Arc::new(|_, _| [0.0; 3]),
            traction: Arc::new(move |t, x, n| stress(t, x).apply_to(n)),
            flux: Arc::new(move |t, x, n| {
                let g = th_flux.grad(t, x);
                g[0] * n[0] + g[1] * n[1] + g[2] * n[2]
            }),
            u0: Arc::new(move |_, x| u0.value(0.0, x)),
            eps_p0: Arc::new(move |_| SymTensor::zero(dim)),
            theta0: Arc::new(move |_, x| th0.value(0.0, x)),
            sources: SourceMode::Manufactured {
                f_u: Arc::new(f_u),
                f_theta: Arc::new(f_theta),
            },
        })
    }
}

/// Barycentric points and weights of a degree-2 exact simplex rule.
fn quadrature(dim: usize) -> Vec<([f64; 4], f64)> {
    if dim == 2 {
        vec![
            ([0.5, 0.5, 0.0, 0.0], 1.0 / 3.0),
            ([0.5, 0.0, 0.5, 0.0], 1.0 / 3.0),
            ([0.0, 0.5, 0.5, 0.0], 1.0 / 3.0),
        ]
    } else {
        let a = 0.585_410_196_624_968_5;
        let b = 0.138_196_601_125_010_5;
        (0..4)
            .map(|k| {
                let mut l = [b; 4];
                l[k] = a;
                (l, 0.25)
            })
            .collect()
    }
}

/// `(∫ Σ_c |f_h,c − f_c|²)^{1/2}` for a P1 field with `ncomp` components.
fn l2_error(mesh: &Mesh, ncomp: usize, values: &[f64], exact: impl Fn(&Point) -> [f64; 3]) -> f64 {
    let rule = quadrature(mesh.dim());
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let vs = mesh.simplex(e);
        for (lam, w) in &rule {
            let mut x = [0.0; 3];
            let mut fh = [0.0; 3];
            for (a, &v) in vs.iter().enumerate() {
                for k in 0..3 {
                    x[k] += lam[a] * mesh.vertex(v)[k];
                }
                for c in 0..ncomp {
                    fh[c] += lam[a] * values[v * ncomp + c];
                }
            }
            let fe = exact(&x);
            let err: f64 = (0..ncomp).map(|c| (fh[c] - fe[c]).powi(2)).sum();
            total += w * mesh.volume(e) * err;
        }
    }
    total.sqrt()
}

pub fn l2_error_vector(mesh: &Mesh, u: &[f64], exact: impl Fn(&Point) -> Point) -> f64 {
    l2_error(mesh, mesh.dim(), u, exact)
}

pub fn l2_error_scalar(mesh: &Mesh, theta: &[f64], exact: impl Fn(&Point) -> f64) -> f64 {
    l2_error(mesh, 1, theta, |x| [exact(x), 0.0, 0.0])
}

/// Observed orders `log2(e_k / e_{k+1})` between consecutive levels.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
