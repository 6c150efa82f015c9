//! Brute-force monolithic reference for tiny problems.
//!
//! Per time step, displacements (free components), element plastic strains
//! and vertex temperatures form one unknown vector. The fully implicit
//! residual is assembled from the stress directly (no stiffness matrices)
//! and driven to zero by damped Newton with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::coupler::{Solution, TimeGrid};
use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::fem::{self, DofMap};
use crate::materials::MaterialModel;
use crate::mech::MechState;
use crate::mesh::{Mesh, Point};
use crate::tensor::{sym_len, SymTensor};

pub const MAX_UNKNOWNS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSettings {
    pub tol: f64,
    pub max_newton: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_newton: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub u: Vec<Vec<f64>>,
    pub eps_p: Vec<Vec<SymTensor>>,
    pub sigma: Vec<Vec<SymTensor>>,
    pub theta: Vec<Vec<f64>>,
    pub newton_iterations: Vec<usize>,
    pub final_residuals: Vec<f64>,
}

/// Largest pointwise differences over all time nodes after the initial one.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldDiffs {
    pub u: f64,
    pub eps_p: f64,
    pub sigma: f64,
    pub theta: f64,
}

impl FieldDiffs {
    pub fn max(&self) -> f64 {
        self.u.max(self.eps_p).max(self.sigma).max(self.theta)
    }
}

pub struct Oracle<'a> {
    mesh: &'a Mesh,
    material: &'a MaterialModel,
    data: &'a ProblemData,
    grid: TimeGrid,
    dofs: DofMap,
    mass: Vec<f64>,
    settings: OracleSettings,
}

struct Unpacked {
    u: Vec<f64>,
    eps_p: Vec<SymTensor>,
    theta: Vec<f64>,
}

impl<'a> Oracle<'a> {
    pub fn new(
        mesh: &'a Mesh,
        material: &'a MaterialModel,
        data: &'a ProblemData,
        grid: TimeGrid,
        settings: OracleSettings,
    ) -> Result<Self> {
        let dofs = DofMap::new(mesh);
        let unknowns = dofs.num_free() + mesh.num_elements() * sym_len(mesh.dim()) + mesh.num_vertices();
        if unknowns > MAX_UNKNOWNS {
            return Err(Error::OracleTooLarge {
                unknowns,
                limit: MAX_UNKNOWNS,
            });
        }
        Ok(Self {
            mass: fem::lumped_mass(mesh),
            mesh,
            material,
            data,
            grid,
            dofs,
            settings,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.dofs.num_free() + self.mesh.num_elements() * sym_len(self.mesh.dim()) + self.mesh.num_vertices()
    }

    fn pack(&self, u: &[f64], eps_p: &[SymTensor], theta: &[f64]) -> Vec<f64> {
        let mut x = self.dofs.restrict(u);
        for e in eps_p {
            x.extend_from_slice(e.components());
        }
        x.extend_from_slice(theta);
        x
    }

    fn unpack(&self, x: &[f64]) -> Unpacked {
        let d = self.mesh.dim();
        let nf = self.dofs.num_free();
        let m = sym_len(d);
        let ne = self.mesh.num_elements();
        let u = self.dofs.expand(&x[..nf]);
        let eps_p = (0..ne)
            .map(|e| SymTensor::from_components(d, &x[nf + e * m..nf + (e + 1) * m]).expect("length matches"))
            .collect();
        Unpacked {
            u,
            eps_p,
            theta: x[nf + ne * m..].to_vec(),
        }
    }

    fn stress(&self, u: &[f64], u_prev: &[f64], eps_p: &[SymTensor], theta_c: &[f64], dt: f64) -> Vec<SymTensor> {
        let d = self.mesh.dim();
        let mat = self.material;
        (0..self.mesh.num_elements())
            .map(|e| {
                let eps = fem::element_strain(self.mesh, e, u);
                let eps0 = fem::element_strain(self.mesh, e, u_prev);
                let rate = (1.0 / dt) * (eps - eps0);
                mat.elastic.apply(&(eps - eps_p[e])) + mat.viscous.apply(&rate)
                    - mat.phi(theta_c[e]) * SymTensor::identity(d)
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn residual(
        &self,
        x: &[f64],
        prev: &Unpacked,
        dt: f64,
        external: &[f64],
        frozen: Option<&[f64]>,
        flux: &[f64],
        extra: &[f64],
    ) -> Vec<f64> {
        let mesh = self.mesh;
        let d = mesh.dim();
        let z = self.unpack(x);
        let theta_c = mesh.element_means(frozen.unwrap_or(&z.theta));
        let sigma = self.stress(&z.u, &prev.u, &z.eps_p, &theta_c, dt);

        // momentum: Σ_e |e| σ_e ε(N_a e_i) − F
        let mut ru = vec![0.0; z.u.len()];
        for e in 0..mesh.num_elements() {
            let vol = mesh.volume(e);
            for (a, &v) in mesh.simplex(e).iter().enumerate() {
                for i in 0..d {
                    let basis = fem::basis_strain(d, &mesh.grads(e)[a], i);
                    ru[v * d + i] += vol * sigma[e].dot(&basis);
                }
            }
        }
        for (r, f) in ru.iter_mut().zip(external) {
            *r -= f;
        }
        let mut out = self.dofs.restrict(&ru);

        // flow rule
        for e in 0..mesh.num_elements() {
            let r = z.eps_p[e] - prev.eps_p[e] - dt * self.material.flow_rate(&sigma[e], theta_c[e]);
            out.extend_from_slice(r.components());
        }

        // heat
        let u_dot: Vec<f64> = z.u.iter().zip(&prev.u).map(|(a, b)| (a - b) / dt).collect();
        let mut rt: Vec<f64> = (0..mesh.num_vertices())
            .map(|v| self.mass[v] * (z.theta[v] - prev.theta[v]) / dt - flux[v] - extra[v])
            .collect();
        let share = 1.0 / (d + 1) as f64;
        for e in 0..mesh.num_elements() {
            let vol = mesh.volume(e);
            let vs = mesh.simplex(e);
            let g = mesh.grads(e);
            let mut grad_t = [0.0; 3];
            for (a, &v) in vs.iter().enumerate() {
                for k in 0..d {
                    grad_t[k] += z.theta[v] * g[a][k];
                }
            }
            let rate = fem::element_strain(mesh, e, &u_dot);
            let ep_rate = (1.0 / dt) * (z.eps_p[e] - prev.eps_p[e]);
            let w = -self.material.phi(theta_c[e]) * rate.trace()
                + ep_rate.dot(&sigma[e])
                + self.material.viscous.apply(&rate).dot(&rate);
            for (a, &v) in vs.iter().enumerate() {
                let diff: f64 = (0..d).map(|k| grad_t[k] * g[a][k]).sum();
                rt[v] += vol * (self.material.kappa * diff - share * w);
            }
        }
        out.extend(rt);
        out
    }

    fn newton(&self, step: usize, x0: Vec<f64>, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<(Vec<f64>, usize, f64)> {
        let inf = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l2 = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = x0;
        let mut r = f(&x);
        let n = x.len();
        for it in 0..self.settings.max_newton {
            if !r.iter().all(|v| v.is_finite()) {
                return Err(Error::Oracle {
                    step,
                    reason: "non-finite residual".into(),
                });
            }
            if inf(&r) <= self.settings.tol {
                return Ok((x, it, inf(&r)));
            }
            let mut jac = DMatrix::zeros(n, n);
            for j in 0..n {
                let h = 1e-7 * x[j].abs().max(1.0);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let (rp, rm) = (f(&xp), f(&xm));
                for i in 0..n {
                    jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            let rhs = -DVector::from_column_slice(&r);
            let dx = jac.lu().solve(&rhs).ok_or_else(|| Error::Oracle {
                step,
                reason: "singular Jacobian".into(),
            })?;
            let r0 = l2(&r);
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha >= 1.0 / 1024.0 {
                let xt: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, b)| a + alpha * b).collect();
                let rt = f(&xt);
                if l2(&rt) < (1.0 - 1e-4 * alpha) * r0 {
                    x = xt;
                    r = rt;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // round-off floor: accept if already close to the target
                let res = inf(&r);
                if res <= 1e3 * self.settings.tol {
                    return Ok((x, it, res));
                }
                return Err(Error::Oracle {
                    step,
                    reason: format!("line search stalled at residual {res:.3e}"),
                });
            }
        }
        let res = inf(&r);
        if res <= 1e3 * self.settings.tol {
            return Ok((x, self.settings.max_newton, res));
        }
        Err(Error::Oracle {
            step,
            reason: format!("no convergence after {} iterations (residual {res:.3e})", self.settings.max_newton),
        })
    }

    /// Solves the fully implicit coupled system step by step. With `frozen`
    /// the temperature entering the stress and flow rule is taken from that
    /// history instead of the unknown, which reproduces one outer sweep.
    pub fn solve(&self, start: &MechState, theta0: &[f64], frozen: Option<&[Vec<f64>]>) -> Result<OracleSolution> {
        let dt = self.grid.dt();
        let mut sol = OracleSolution {
            u: vec![start.u.clone()],
            eps_p: vec![start.eps_p.clone()],
            sigma: vec![start.sigma.clone()],
            theta: vec![theta0.to_vec()],
            newton_iterations: Vec::new(),
            final_residuals: Vec::new(),
        };
        let mass = &self.mass;
        for n in 0..self.grid.n_steps {
            let t1 = self.grid.time(n + 1);
            let prev = Unpacked {
                u: sol.u[n].clone(),
                eps_p: sol.eps_p[n].clone(),
                theta: sol.theta[n].clone(),
            };
            let external = self.external_load(t1);
            let flux = fem::assemble_flux(self.mesh, self.material.kappa, |x, nrm| (self.data.flux)(t1, x, nrm));
            let extra: Vec<f64> = self
                .mesh
                .vertices()
                .iter()
                .zip(mass)
                .map(|(x, m)| m * self.data.heat_source(t1, x).unwrap_or(0.0))
                .collect();
            let fz = frozen.map(|h| h[n + 1].as_slice());
            let x0 = self.pack(&prev.u, &prev.eps_p, &prev.theta);
            let (x, iters, res) = self.newton(n + 1, x0, |x| {
                self.residual(x, &prev, dt, &external, fz, &flux, &extra)
            })?;
            let z = self.unpack(&x);
            let theta_c = self.mesh.element_means(fz.unwrap_or(&z.theta));
            let sigma = self.stress(&z.u, &prev.u, &z.eps_p, &theta_c, dt);
            sol.u.push(z.u);
            sol.eps_p.push(z.eps_p);
            sol.sigma.push(sigma);
            sol.theta.push(z.theta);
            sol.newton_iterations.push(iters);
            sol.final_residuals.push(res);
        }
        Ok(sol)
    }

    fn external_load(&self, t: f64) -> Vec<f64> {
        let mut f = fem::assemble_body_load(self.mesh, &self.mass, |x: &Point| self.data.total_body(t, x));
        let g = fem::assemble_traction(self.mesh, |x, n| (self.data.traction)(t, x, n));
        for (a, b) in f.iter_mut().zip(g) {
            *a += b;
        }
        f
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn max_tensor_diff(a: &[SymTensor], b: &[SymTensor]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((*x - *y).norm()))
}

/// Field differences between a staggered solution and the oracle.
pub fn compare(sol: &Solution, oracle: &OracleSolution) -> FieldDiffs {
    let mut d = FieldDiffs::default();
    for n in 1..sol.mech.len().min(oracle.u.len()) {
        d.u = d.u.max(max_diff(&sol.mech[n].u, &oracle.u[n]));
        d.eps_p = d.eps_p.max(max_tensor_diff(&sol.mech[n].eps_p, &oracle.eps_p[n]));
        d.sigma = d.sigma.max(max_tensor_diff(&sol.mech[n].sigma, &oracle.sigma[n]));
        d.theta = d.theta.max(max_diff(&sol.theta[n], &oracle.theta[n]));
    }
    d
}

/// Same comparison for a single outer sweep.
pub fn compare_sweep(mech: &[MechState], theta: &[Vec<f64>], oracle: &OracleSolution) -> FieldDiffs {
    let mut d = FieldDiffs::default();
    for n in 1..mech.len().min(oracle.u.len()) {
        d.u = d.u.max(max_diff(&mech[n].u, &oracle.u[n]));
        d.eps_p = d.eps_p.max(max_tensor_diff(&mech[n].eps_p, &oracle.eps_p[n]));
        d.sigma = d.sigma.max(max_tensor_diff(&mech[n].sigma, &oracle.sigma[n]));
        d.theta = d.theta.max(max_diff(&theta[n], &oracle.theta[n]));
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupler::{Coupled, SolverSettings};
    use crate::materials::{ExponentSet, FlowRule, ThermalStressLaw};
    use crate::mesh::{BoxFace, TaggingRule};
    use crate::tensor::IsotropicRank4;

    fn material(c: f64, flow: FlowRule) -> MaterialModel {
        MaterialModel {
            elastic: IsotropicRank4::new(1.0, 0.5),
            viscous: IsotropicRank4::new(0.5, 0.2),
            kappa: 1.0,
            phi: ThermalStressLaw { c, alpha: 0.25 },
            flow,
            exponents: ExponentSet::default(),
        }
    }

    #[test]
    fn size_limit_is_enforced() {
        let mesh = Mesh::build(&[1.0, 1.0], &[8, 8], &TaggingRule::new([BoxFace::new(0, false)])).unwrap();
        let mat = material(0.0, FlowRule::Linear { eta: 1.0 });
        let data = ProblemData::zero(2);
        let grid = TimeGrid::new(1.0, 1).unwrap();
        assert!(matches!(
            Oracle::new(&mesh, &mat, &data, grid, OracleSettings::default()),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn matches_staggered_solution_with_linear_flow() {
        let mesh = Mesh::build(&[1.0, 1.0], &[1, 1], &TaggingRule::new([BoxFace::new(0, false)])).unwrap();
        let mat = material(0.1, FlowRule::Linear { eta: 2.0 });
        let data = ProblemData::zero(2)
            .with_traction(|t, _, n| [0.4 * t * n[0], 0.2 * t, 0.0])
            .with_flux(|_, _, n| 0.1 * n[1])
            .with_theta0(|_| 1.0);
        let grid = TimeGrid::new(0.2, 2).unwrap();
        let settings = SolverSettings {
            outer_tol: 1e-13,
            inner: crate::mech::InnerSettings { tol: 1e-14, ..Default::default() },
            ..Default::default()
        };
        let c = crate::coupler::Coupled::new(&mesh, &mat, &data, grid, settings).unwrap();
        let sol = c.picard_solve().unwrap();
        assert!(sol.report.converged());
        let o = Oracle::new(&mesh, &mat, &data, grid, OracleSettings::default()).unwrap();
        let os = o.solve(&c.initial_mech(), &c.initial_theta(), None).unwrap();
        let d = compare(&sol, &os);
        assert!(d.max() < 1e-9, "{d:?}");

        // one sweep with frozen temperature
        let star = vec![c.initial_theta(); 3];
        let sweep = c.apply_t(&star).unwrap();
        let os = o.solve(&c.initial_mech(), &c.initial_theta(), Some(&star)).unwrap();
        let d = compare_sweep(&sweep.mech, &sweep.theta, &os);
        assert!(d.max() < 1e-10, "{d:?}");
    }
}
