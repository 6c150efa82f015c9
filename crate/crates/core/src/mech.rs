//! Mechanical subproblem with a frozen temperature history.
//!
//! Each time step solves the backward-Euler Kelvin–Voigt system for the
//! displacement given a trial plastic strain, recovers the stress, and
//! updates the plastic strain through the flow rule. The map from trial to
//! updated plastic strain is iterated to its fixed point.

use std::sync::{Arc, Mutex};

use nalgebra_sparse::CscMatrix;
use rayon::prelude::*;

use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::fem::{self, DofMap};
use crate::linalg::{add_scaled, matvec, norm2, SpdSolver};
use crate::materials::MaterialModel;
use crate::mesh::Mesh;
use crate::tensor::SymTensor;

#[derive(Clone, Debug, PartialEq)]
pub struct MechState {
    pub u: Vec<f64>,
    pub u_dot: Vec<f64>,
    pub eps_p: Vec<SymTensor>,
    pub sigma: Vec<SymTensor>,
}

impl MechState {
    pub fn zero(mesh: &Mesh) -> Self {
        let n = mesh.num_vertices() * mesh.dim();
        let z = SymTensor::zero(mesh.dim());
        Self {
            u: vec![0.0; n],
            u_dot: vec![0.0; n],
            eps_p: vec![z; mesh.num_elements()],
            sigma: vec![z; mesh.num_elements()],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for InnerSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            max_halvings: 5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InnerIterReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
}

impl InnerIterReport {
    /// Geometric mean of the contraction ratios over iterates whose
    /// residual is still well above round-off.
    pub fn mean_ratio(&self, floor: f64) -> Option<f64> {
        let logs: Vec<f64> = self
            .residuals
            .windows(2)
            .filter(|w| w[0] > floor && w[1] > floor)
            .map(|w| (w[1] / w[0]).ln())
            .collect();
        if logs.is_empty() {
            None
        } else {
            Some((logs.iter().sum::<f64>() / logs.len() as f64).exp())
        }
    }
}

/// Inner reports of one time step; more than one when the step was split.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub substeps: Vec<InnerIterReport>,
    pub halvings: usize,
}

impl StepReport {
    pub fn iterations(&self) -> usize {
        self.substeps.iter().map(|r| r.iterations).sum()
    }
}

/// Inputs of a single backward-Euler step ending at time `t`.
pub struct StepInput<'s> {
    pub t: f64,
    pub dt: f64,
    pub u_prev: &'s [f64],
    pub eps_p_prev: &'s [SymTensor],
    /// Frozen temperature at element centroids at time `t`.
    pub theta: &'s [f64],
    /// External load vector (body force and traction) at time `t`.
    pub external: &'s [f64],
}

pub struct MechSolver<'a> {
    mesh: &'a Mesh,
    material: &'a MaterialModel,
    dofs: DofMap,
    k_d: CscMatrix<f64>,
    k_c: CscMatrix<f64>,
    mass: Vec<f64>,
    rtol: f64,
    factors: Mutex<Vec<(f64, Arc<SpdSolver>)>>,
}

impl<'a> MechSolver<'a> {
    pub fn new(mesh: &'a Mesh, material: &'a MaterialModel, linear_rtol: f64) -> Self {
        let dofs = DofMap::new(mesh);
        Self {
            k_d: fem::assemble_stiffness_reduced(mesh, &material.elastic, &dofs),
            k_c: fem::assemble_stiffness_reduced(mesh, &material.viscous, &dofs),
            mass: fem::lumped_mass(mesh),
            dofs,
            mesh,
            material,
            rtol: linear_rtol,
            factors: Mutex::new(Vec::new()),
        }
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn material(&self) -> &MaterialModel {
        self.material
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    fn system(&self, dt: f64) -> Result<Arc<SpdSolver>> {
        let mut cache = self.factors.lock().expect("factor cache poisoned");
        if let Some((_, s)) = cache.iter().find(|(d, _)| *d == dt) {
            return Ok(Arc::clone(s));
        }
        let a = add_scaled(&self.k_d, 1.0 / dt, &self.k_c);
        let s = Arc::new(SpdSolver::new(a, self.rtol)?);
        cache.push((dt, Arc::clone(&s)));
        Ok(s)
    }

    /// Body force and traction at time `t` as a full load vector.
    pub fn external_load(&self, data: &ProblemData, t: f64) -> Vec<f64> {
        let mut f = fem::assemble_body_load(self.mesh, &self.mass, |x| data.total_body(t, x));
        let g = fem::assemble_traction(self.mesh, |x, n| (data.traction)(t, x, n));
        for (a, b) in f.iter_mut().zip(g) {
            *a += b;
        }
        f
    }

    pub fn phi_values(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().map(|&s| self.material.phi(s)).collect()
    }

    /// Displacement for a trial plastic strain.
    pub fn viscoelastic_step(&self, input: &StepInput<'_>, eps_p_star: &[SymTensor]) -> Result<Vec<f64>> {
        let mut rhs = fem::assemble_tensor_load(self.mesh, &self.material.elastic, eps_p_star);
        let p = fem::assemble_pressure_load(self.mesh, &self.phi_values(input.theta));
        for ((r, a), b) in rhs.iter_mut().zip(p).zip(input.external) {
            *r += a + b;
        }
        let mut rhs = self.dofs.restrict(&rhs);
        let kc_u = matvec(&self.k_c, &self.dofs.restrict(input.u_prev));
        for (r, k) in rhs.iter_mut().zip(kc_u) {
            *r += k / input.dt;
        }
        let x = self.system(input.dt)?.solve(&rhs)?;
        Ok(self.dofs.expand(&x))
    }

    /// `σ = D(ε(u) − εp) + C(ε(u − u_prev)/dt) − φ(θ) I` elementwise.
    pub fn recover_stress(
        &self,
        u: &[f64],
        u_prev: &[f64],
        eps_p: &[SymTensor],
        theta: &[f64],
        dt: f64,
    ) -> Vec<SymTensor> {
        let mesh = self.mesh;
        let m = self.material;
        let u_dot: Vec<f64> = u.iter().zip(u_prev).map(|(a, b)| (a - b) / dt).collect();
        (0..mesh.num_elements())
            .into_par_iter()
            .map(|e| {
                let eps = fem::element_strain(mesh, e, u);
                let rate = fem::element_strain(mesh, e, &u_dot);
                let mut s = m.elastic.apply(&(eps - eps_p[e])) + m.viscous.apply(&rate);
                let ph = m.phi(theta[e]);
                if ph != 0.0 {
                    s = s - ph * SymTensor::identity(mesh.dim());
                }
                s
            })
            .collect()
    }

    /// `εp_prev + dt Λ(σ, θ)` elementwise.
    pub fn plastic_increment(
        &self,
        eps_p_prev: &[SymTensor],
        sigma: &[SymTensor],
        theta: &[f64],
        dt: f64,
    ) -> Vec<SymTensor> {
        if self.material.flow.is_inactive() {
            return eps_p_prev.to_vec();
        }
        eps_p_prev
            .par_iter()
            .zip(sigma.par_iter())
            .zip(theta.par_iter())
            .map(|((ep, s), th)| *ep + dt * self.material.flow_rate(s, *th))
            .collect()
    }

    /// Discrete `L^q` norm of an element tensor field.
    pub fn q_norm(&self, field: &[SymTensor]) -> f64 {
        let q = self.material.exponents.q;
        let s: f64 = field
            .iter()
            .zip(self.mesh.volumes())
            .map(|(e, v)| v * e.norm().powf(q))
            .sum();
        s.powf(1.0 / q)
    }

    /// Iterates the plastic-strain map of one step to its fixed point.
    pub fn inner_fixed_point(
        &self,
        input: &StepInput<'_>,
        guess: &[SymTensor],
        settings: &InnerSettings,
    ) -> Result<(MechState, InnerIterReport)> {
        let mut report = InnerIterReport::default();
        let mut star = guess.to_vec();
        for k in 0..settings.max_iter {
            let u = self.viscoelastic_step(input, &star)?;
            let sigma = self.recover_stress(&u, input.u_prev, &star, input.theta, input.dt);
            let next = self.plastic_increment(input.eps_p_prev, &sigma, input.theta, input.dt);
            let diff: Vec<SymTensor> = next.iter().zip(&star).map(|(a, b)| *a - *b).collect();
            let res = self.q_norm(&diff);
            if k > 0 {
                let prev = report.residuals[k - 1];
                report.contraction_ratios.push(if prev > 0.0 { res / prev } else { 0.0 });
            }
            report.residuals.push(res);
            report.iterations = k + 1;
            if !res.is_finite() {
                break;
            }
            if res <= settings.tol {
                report.converged = true;
                let u_dot = u.iter().zip(input.u_prev).map(|(a, b)| (a - b) / input.dt).collect();
                return Ok((
                    MechState {
                        u,
                        u_dot,
                        eps_p: next,
                        sigma,
                    },
                    report,
                ));
            }
            star = next;
        }
        Err(Error::InnerNotConverged {
            time: input.t,
            iterations: report.iterations,
            residual: report.residuals.last().copied().unwrap_or(f64::NAN),
        })
    }

    /// Advances from `t0` to `t0 + dt`. On inner failure the step is split in
    /// halves (at most `max_halvings` levels deep) with the temperature
    /// interpolated linearly between the end points.
    pub fn advance(
        &self,
        data: &ProblemData,
        t0: f64,
        dt: f64,
        prev: &MechState,
        theta0: &[f64],
        theta1: &[f64],
        settings: &InnerSettings,
    ) -> Result<(MechState, StepReport)> {
        let mut report = StepReport::default();
        let state = self.advance_rec(data, t0, dt, (t0, dt), prev, theta0, theta1, settings, 0, &mut report)?;
        let u_dot = state.u.iter().zip(&prev.u).map(|(a, b)| (a - b) / dt).collect();
        Ok((MechState { u_dot, ..state }, report))
    }

    #[allow(clippy::too_many_arguments)]
    fn advance_rec(
        &self,
        data: &ProblemData,
        t0: f64,
        dt: f64,
        whole: (f64, f64),
        prev: &MechState,
        theta0: &[f64],
        theta1: &[f64],
        settings: &InnerSettings,
        depth: usize,
        report: &mut StepReport,
    ) -> Result<MechState> {
        let t = t0 + dt;
        let w = ((t - whole.0) / whole.1).clamp(0.0, 1.0);
        let theta_v: Vec<f64> = if w == 1.0 {
            theta1.to_vec()
        } else {
            theta0.iter().zip(theta1).map(|(a, b)| (1.0 - w) * a + w * b).collect()
        };
        let theta = self.mesh.element_means(&theta_v);
        let external = self.external_load(data, t);
        let input = StepInput {
            t,
            dt,
            u_prev: &prev.u,
            eps_p_prev: &prev.eps_p,
            theta: &theta,
            external: &external,
        };
        match self.inner_fixed_point(&input, &prev.eps_p, settings) {
            Ok((state, r)) => {
                report.substeps.push(r);
                Ok(state)
            }
            Err(Error::InnerNotConverged { .. }) if depth < settings.max_halvings => {
                report.halvings = report.halvings.max(depth + 1);
                log::debug!("inner iteration stalled at t = {t}; halving dt = {dt}");
                let h = 0.5 * dt;
                let mid = self.advance_rec(data, t0, h, whole, prev, theta0, theta1, settings, depth + 1, report)?;
                self.advance_rec(data, t0 + h, h, whole, &mid, theta0, theta1, settings, depth + 1, report)
            }
            Err(e) => Err(e),
        }
    }

    /// Euclidean norm of the weak momentum residual `∫σ:ε(v) − F(v)` over
    /// test functions vanishing on the Dirichlet part.
    pub fn momentum_residual(&self, sigma: &[SymTensor], external: &[f64]) -> f64 {
        let f = fem::assemble_stress_divergence(self.mesh, sigma);
        let r: Vec<f64> = f.iter().zip(external).map(|(a, b)| a - b).collect();
        norm2(&self.dofs.restrict(&r))
    }
}
