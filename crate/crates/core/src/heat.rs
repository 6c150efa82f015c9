//! Heat equation with dissipative heating and a pure Neumann boundary.

use std::sync::{Arc, Mutex};

use nalgebra_sparse::CscMatrix;
use rayon::prelude::*;

use crate::error::Result;
use crate::fem;
use crate::linalg::{add_scaled, Triplets, SpdSolver};
use crate::materials::{ExponentSet, MaterialModel};
use crate::mesh::{Mesh, Point};
use crate::tensor::SymTensor;

/// Elementwise heat source and its three contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatSource {
    pub values: Vec<f64>,
    /// `−φ(θ) div u̇`
    pub thermal: Vec<f64>,
    /// `ε̇p · σ`
    pub plastic: Vec<f64>,
    /// `C(ε(u̇)) · ε(u̇)`
    pub viscous: Vec<f64>,
}

impl HeatSource {
    pub fn zero(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            thermal: vec![0.0; n],
            plastic: vec![0.0; n],
            viscous: vec![0.0; n],
        }
    }

    /// Spatial `L^r` norms of the three contributions.
    pub fn term_norms(&self, mesh: &Mesh, r: f64) -> [f64; 3] {
        let norm = |f: &[f64]| -> f64 {
            f.iter()
                .zip(mesh.volumes())
                .map(|(x, v)| v * x.abs().powf(r))
                .sum::<f64>()
                .powf(1.0 / r)
        };
        [norm(&self.thermal), norm(&self.plastic), norm(&self.viscous)]
    }
}

/// Evaluates `w = −φ(θ) div u̇ + ε̇p·σ + C(ε(u̇))·ε(u̇)` per element, with `θ`
/// given at element centroids.
pub fn assemble_source(
    mesh: &Mesh,
    material: &MaterialModel,
    theta: &[f64],
    u_dot: &[f64],
    eps_p_rate: &[SymTensor],
    sigma: &[SymTensor],
) -> HeatSource {
    let parts: Vec<(f64, f64, f64)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let rate = fem::element_strain(mesh, e, u_dot);
            let ph = material.phi(theta[e]);
            let thermal = if ph == 0.0 { 0.0 } else { -ph * rate.trace() };
            let plastic = eps_p_rate[e].dot(&sigma[e]);
            let viscous = material.viscous.apply(&rate).dot(&rate);
            (thermal, plastic, viscous)
        })
        .collect();
    let mut src = HeatSource::zero(parts.len());
    for (e, (a, b, c)) in parts.into_iter().enumerate() {
        src.thermal[e] = a;
        src.plastic[e] = b;
        src.viscous[e] = c;
        src.values[e] = a + b + c;
    }
    src
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Compatibility {
    Ok,
    /// The discrete normal derivative disagrees with the flux, but the
    /// analytic data are consistent (only reported at the configuration level).
    Warning { max_deviation: f64 },
    Violation { max_deviation: f64, facet: usize },
}

impl Compatibility {
    pub fn is_violation(&self) -> bool {
        matches!(self, Compatibility::Violation { .. })
    }
}

/// Compares `∂θ0/∂n` with `h(0, ·)` on every boundary facet. Only enforced
/// for `r > 3`; smaller `r` always passes.
pub fn check_compatibility(
    mesh: &Mesh,
    theta0: &[f64],
    h0: impl Fn(&Point, &Point) -> f64,
    exponents: &ExponentSet,
) -> Compatibility {
    if exponents.r <= 3.0 {
        return Compatibility::Ok;
    }
    let d = mesh.dim();
    let mut values = Vec::with_capacity(mesh.num_facets());
    let mut h_max: f64 = 0.0;
    for f in 0..mesh.num_facets() {
        let n = mesh.facet_face(f).outward_normal();
        let h = h0(&mesh.facet_centroid(f), &n);
        h_max = h_max.max(h.abs());
        let e = mesh.facet_element(f);
        let mut dn = 0.0;
        for (a, &v) in mesh.simplex(e).iter().enumerate() {
            let g = &mesh.grads(e)[a];
            dn += theta0[v] * (0..d).map(|k| g[k] * n[k]).sum::<f64>();
        }
        values.push((dn - h).abs());
    }
    let tol = 1e-8 * (1.0 + h_max);
    let (facet, max_deviation) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (f, v)| if v > acc.1 { (f, v) } else { acc });
    if max_deviation > tol {
        Compatibility::Violation { max_deviation, facet }
    } else {
        Compatibility::Ok
    }
}

pub struct HeatSolver<'a> {
    mesh: &'a Mesh,
    kappa: f64,
    mass: Vec<f64>,
    laplacian: CscMatrix<f64>,
    rtol: f64,
    factors: Mutex<Vec<(f64, Arc<SpdSolver>)>>,
}

impl<'a> HeatSolver<'a> {
    pub fn new(mesh: &'a Mesh, kappa: f64, linear_rtol: f64) -> Self {
        let (mass, laplacian) = fem::assemble_heat_matrices(mesh);
        Self {
            mesh,
            kappa,
            mass,
            laplacian,
            rtol: linear_rtol,
            factors: Mutex::new(Vec::new()),
        }
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn laplacian(&self) -> &CscMatrix<f64> {
        &self.laplacian
    }

    fn system(&self, dt: f64) -> Result<Arc<SpdSolver>> {
        let mut cache = self.factors.lock().expect("factor cache poisoned");
        if let Some((_, s)) = cache.iter().find(|(d, _)| *d == dt) {
            return Ok(Arc::clone(s));
        }
        let mut m = Triplets::new(self.mass.len());
        for (i, v) in self.mass.iter().enumerate() {
            m.push(i, i, v / dt);
        }
        let a = add_scaled(&m.to_csc(), self.kappa, &self.laplacian);
        let s = Arc::new(SpdSolver::new(a, self.rtol)?);
        cache.push((dt, Arc::clone(&s)));
        Ok(s)
    }

    /// Flux load `κ ∫ h v` at time `t`.
    pub fn flux_load(&self, h: impl Fn(&Point, &Point) -> f64) -> Vec<f64> {
        fem::assemble_flux(self.mesh, self.kappa, h)
    }

    /// Lumped load of a vertex-sampled source.
    pub fn vertex_source(&self, f: impl Fn(&Point) -> f64) -> Vec<f64> {
        self.mesh
            .vertices()
            .iter()
            .zip(&self.mass)
            .map(|(x, m)| m * f(x))
            .collect()
    }

    /// One backward-Euler step
    /// `(M/dt + κK) θ = M/dt θ_prev + S(w) + flux (+ extra)`.
    pub fn heat_step(
        &self,
        theta_prev: &[f64],
        w: &[f64],
        flux: &[f64],
        extra: Option<&[f64]>,
        dt: f64,
    ) -> Result<Vec<f64>> {
        let mut rhs = fem::scatter_element_source(self.mesh, w);
        for (i, r) in rhs.iter_mut().enumerate() {
            *r += self.mass[i] * theta_prev[i] / dt + flux[i];
            if let Some(x) = extra {
                *r += x[i];
            }
        }
        self.system(dt)?.solve(&rhs)
    }

    /// Mass-weighted mean `Σ M_ii θ_i / |Ω|`.
    pub fn mean(&self, theta: &[f64]) -> f64 {
        let total: f64 = self.mass.iter().sum();
        self.mass.iter().zip(theta).map(|(m, t)| m * t).sum::<f64>() / total
    }

    /// Heat content `Σ M_ii θ_i`.
    pub fn content(&self, theta: &[f64]) -> f64 {
        self.mass.iter().zip(theta).map(|(m, t)| m * t).sum()
    }
}
