//! Outer coupling: the temperature-to-temperature map over a time window,
//! its damped Picard iteration, and the global energy balance check.

use log::{debug, info, warn};

use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::fem;
use crate::heat::{self, HeatSolver};
use crate::materials::MaterialModel;
use crate::mech::{InnerSettings, MechSolver, MechState, StepReport};
use crate::mesh::Mesh;
use crate::tensor::SymTensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) || n_steps == 0 {
            return Err(Error::Config(vec![format!(
                "time grid needs T > 0 and n_steps ≥ 1, got T = {t_final}, n_steps = {n_steps}"
            )]));
        }
        Ok(Self { t_final, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.n_steps {
            self.t_final
        } else {
            n as f64 * self.dt()
        }
    }
}

/// `(Σ_n dt (Σ_e |e| |θ̄_e|^r)^{p/r})^{1/p}` over nodes `1..` of `history`,
/// with `θ̄_e` the element mean of the vertex values.
pub fn norm_lp_lr(mesh: &Mesh, history: &[Vec<f64>], p: f64, r: f64, dt: f64) -> f64 {
    let mut total = 0.0;
    for theta in history.iter().skip(1) {
        let space: f64 = mesh
            .element_means(theta)
            .iter()
            .zip(mesh.volumes())
            .map(|(t, v)| v * t.abs().powf(r))
            .sum();
        total += dt * space.powf(p / r);
    }
    total.powf(1.0 / p)
}

fn difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub inner: InnerSettings,
    pub outer_tol: f64,
    pub omega: f64,
    pub max_outer: usize,
    pub max_window_splits: usize,
    pub linear_rtol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            inner: InnerSettings::default(),
            outer_tol: 1e-8,
            omega: 1.0,
            max_outer: 50,
            max_window_splits: 3,
            linear_rtol: 1e-12,
        }
    }
}

/// Result of one application of the outer map on a window.
#[derive(Clone, Debug)]
pub struct Sweep {
    /// Temperature at every node of the window, the start node included.
    pub theta: Vec<Vec<f64>>,
    pub mech: Vec<MechState>,
    pub steps: Vec<StepReport>,
    /// Spatial `L^r` norms of the three heat-source contributions per step.
    pub sources: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowReport {
    pub first_step: usize,
    pub n_steps: usize,
    pub outer_iterations: usize,
    /// `‖𝓣(θ*_k) − θ*_k‖` per outer iteration.
    pub deltas: Vec<f64>,
    /// `‖θ*_k‖` per outer iteration.
    pub norms: Vec<f64>,
    pub converged: bool,
}

impl WindowReport {
    /// Iterate norms stay below twice the largest of the first three.
    pub fn ball_bounded(&self) -> bool {
        let head = self.norms.iter().take(3).fold(0.0f64, |m, x| m.max(*x));
        self.norms.iter().all(|n| *n <= 2.0 * head)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PicardStatus {
    Converged,
    NotConverged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardReport {
    pub windows: Vec<WindowReport>,
    pub status: PicardStatus,
}

impl PicardReport {
    pub fn converged(&self) -> bool {
        self.status == PicardStatus::Converged
    }

    pub fn outer_iterations(&self) -> usize {
        self.windows.iter().map(|w| w.outer_iterations).sum()
    }

    pub fn ball_bounded(&self) -> bool {
        self.windows.iter().all(WindowReport::ball_bounded)
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.windows.iter().flat_map(|w| w.deltas.iter().copied()).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.windows.iter().flat_map(|w| w.norms.iter().copied()).collect()
    }
}

/// Coupled solution on the full time grid. Index 0 holds the initial data.
#[derive(Clone, Debug)]
pub struct Solution {
    pub times: Vec<f64>,
    pub mech: Vec<MechState>,
    pub theta: Vec<Vec<f64>>,
    /// The frozen temperature the mechanical fields were computed with.
    pub theta_star: Vec<Vec<f64>>,
    pub steps: Vec<StepReport>,
    pub sources: Vec<[f64; 3]>,
    pub report: PicardReport,
}

/// The coupled problem on a fixed mesh, material, data set and time grid.
pub struct Coupled<'a> {
    mesh: &'a Mesh,
    material: &'a MaterialModel,
    data: &'a ProblemData,
    grid: TimeGrid,
    settings: SolverSettings,
    mech: MechSolver<'a>,
    heat: HeatSolver<'a>,
}

impl<'a> Coupled<'a> {
    /// Refuses materials that fail validation, including the exponent
    /// constraints.
    pub fn new(
        mesh: &'a Mesh,
        material: &'a MaterialModel,
        data: &'a ProblemData,
        grid: TimeGrid,
        settings: SolverSettings,
    ) -> Result<Self> {
        material.validate(mesh.dim())?;
        let mut errs = Vec::new();
        if !(settings.omega > 0.0 && settings.omega <= 1.0) {
            errs.push(format!("damping ω must lie in (0, 1], got {}", settings.omega));
        }
        if !(settings.outer_tol > 0.0) || !(settings.inner.tol > 0.0) {
            errs.push("tolerances must be positive".into());
        }
        if settings.max_outer == 0 || settings.inner.max_iter == 0 {
            errs.push("iteration limits must be at least 1".into());
        }
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        Ok(Self {
            mech: MechSolver::new(mesh, material, settings.linear_rtol),
            heat: HeatSolver::new(mesh, material.kappa, settings.linear_rtol),
            mesh,
            material,
            data,
            grid,
            settings,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn material(&self) -> &MaterialModel {
        self.material
    }

    pub fn data(&self) -> &ProblemData {
        self.data
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn mech_solver(&self) -> &MechSolver<'a> {
        &self.mech
    }

    pub fn heat_solver(&self) -> &HeatSolver<'a> {
        &self.heat
    }

    pub fn norm(&self, history: &[Vec<f64>]) -> f64 {
        let e = &self.material.exponents;
        norm_lp_lr(self.mesh, history, e.p, e.r, self.grid.dt())
    }

    pub fn initial_theta(&self) -> Vec<f64> {
        self.mesh.vertices().iter().map(|x| (self.data.theta0)(0.0, x)).collect()
    }

    /// Initial mechanical state; the displacement is zeroed on the
    /// Dirichlet part and the stress carries no viscous contribution.
    pub fn initial_mech(&self) -> MechState {
        let mesh = self.mesh;
        let d = mesh.dim();
        let mut u = vec![0.0; mesh.num_vertices() * d];
        for v in 0..mesh.num_vertices() {
            if mesh.is_dirichlet_vertex(v) {
                continue;
            }
            let val = (self.data.u0)(0.0, mesh.vertex(v));
            u[v * d..v * d + d].copy_from_slice(&val[..d]);
        }
        let eps_p: Vec<SymTensor> = (0..mesh.num_elements())
            .map(|e| (self.data.eps_p0)(&mesh.centroid(e)))
            .collect();
        let theta = mesh.element_means(&self.initial_theta());
        let sigma = self.mech.recover_stress(&u, &u, &eps_p, &theta, 1.0);
        MechState {
            u_dot: vec![0.0; u.len()],
            u,
            eps_p,
            sigma,
        }
    }

    /// Applies the outer map on the whole grid from the initial data.
    pub fn apply_t(&self, theta_star: &[Vec<f64>]) -> Result<Sweep> {
        self.apply_t_window(&self.initial_mech(), &self.initial_theta(), 0, theta_star)
    }

    /// Runs the mechanical problem with frozen `theta_star` (one vertex
    /// field per node of the window, start node included), then the heat
    /// problem driven by the resulting dissipation.
    pub fn apply_t_window(
        &self,
        start_mech: &MechState,
        start_theta: &[f64],
        first_step: usize,
        theta_star: &[Vec<f64>],
    ) -> Result<Sweep> {
        let n = theta_star.len() - 1;
        let dt = self.grid.dt();
        let mut sweep = Sweep {
            theta: Vec::with_capacity(n + 1),
            mech: Vec::with_capacity(n + 1),
            steps: Vec::with_capacity(n),
            sources: Vec::with_capacity(n),
        };
        sweep.theta.push(start_theta.to_vec());
        sweep.mech.push(start_mech.clone());
        for k in 0..n {
            let t0 = self.grid.time(first_step + k);
            let t1 = self.grid.time(first_step + k + 1);
            let (state, rep) = self.mech.advance(
                self.data,
                t0,
                dt,
                &sweep.mech[k],
                &theta_star[k],
                &theta_star[k + 1],
                &self.settings.inner,
            )?;
            let theta_el = self.mesh.element_means(&theta_star[k + 1]);
            let rate: Vec<SymTensor> = state
                .eps_p
                .iter()
                .zip(&sweep.mech[k].eps_p)
                .map(|(a, b)| (1.0 / dt) * (*a - *b))
                .collect();
            let src = heat::assemble_source(self.mesh, self.material, &theta_el, &state.u_dot, &rate, &state.sigma);
            let flux = self.heat.flux_load(|x, nrm| (self.data.flux)(t1, x, nrm));
            let extra = self
                .data
                .heat_source(t1, &[0.0; 3])
                .map(|_| self.heat.vertex_source(|x| self.data.heat_source(t1, x).unwrap_or(0.0)));
            let theta = self.heat.heat_step(&sweep.theta[k], &src.values, &flux, extra.as_deref(), dt)?;
            sweep.sources.push(src.term_norms(self.mesh, self.material.exponents.r));
            sweep.theta.push(theta);
            sweep.mech.push(state);
            sweep.steps.push(rep);
        }
        Ok(sweep)
    }

    fn window_norm(&self, h: &[Vec<f64>]) -> f64 {
        self.norm(h)
    }

    /// Damped Picard iteration on one window.
    fn picard_window(
        &self,
        start_mech: &MechState,
        start_theta: &[f64],
        first_step: usize,
        n: usize,
    ) -> Result<(Sweep, Vec<Vec<f64>>, WindowReport)> {
        let omega = self.settings.omega;
        let mut star = vec![start_theta.to_vec(); n + 1];
        let mut report = WindowReport {
            first_step,
            n_steps: n,
            outer_iterations: 0,
            deltas: Vec::new(),
            norms: Vec::new(),
            converged: false,
        };
        let mut last: Option<(Sweep, Vec<Vec<f64>>)> = None;
        for k in 0..self.settings.max_outer {
            let sweep = match self.apply_t_window(start_mech, start_theta, first_step, &star) {
                Ok(s) => s,
                Err(e) if k > 0 && e.is_solver_failure() => {
                    warn!("outer iterate {k} broke a sub-solver ({e}); treating the window as stalled");
                    report.deltas.push(f64::INFINITY);
                    break;
                }
                Err(e) => return Err(e),
            };
            report.outer_iterations = k + 1;
            report.norms.push(self.window_norm(&star));
            let delta = self.window_norm(&difference(&sweep.theta, &star));
            report.deltas.push(delta);
            debug!("window at step {first_step}: outer {k}, δ = {delta:.3e}");
            if delta <= self.settings.outer_tol {
                report.converged = true;
                return Ok((sweep, star, report));
            }
            if !delta.is_finite() {
                last = Some((sweep, star.clone()));
                break;
            }
            let next: Vec<Vec<f64>> = star
                .iter()
                .zip(&sweep.theta)
                .map(|(s, t)| s.iter().zip(t).map(|(a, b)| (1.0 - omega) * a + omega * b).collect())
                .collect();
            last = Some((sweep, std::mem::replace(&mut star, next)));
        }
        match last {
            Some((sweep, used)) => Ok((sweep, used, report)),
            None => {
                // the only sweep that ran failed after the first iterate
                let sweep = self.apply_t_window(start_mech, start_theta, first_step, &star)?;
                Ok((sweep, star, report))
            }
        }
    }

    fn solve_window(
        &self,
        start_mech: &MechState,
        start_theta: &[f64],
        first_step: usize,
        n: usize,
        depth: usize,
        out: &mut Vec<(Sweep, Vec<Vec<f64>>, WindowReport)>,
    ) -> Result<()> {
        let (sweep, star, rep) = self.picard_window(start_mech, start_theta, first_step, n)?;
        if rep.converged || depth >= self.settings.max_window_splits || n < 2 {
            if !rep.converged {
                warn!(
                    "outer iteration did not converge on steps {}..{} (last δ = {:.3e})",
                    first_step,
                    first_step + n,
                    rep.deltas.last().copied().unwrap_or(f64::NAN)
                );
            }
            out.push((sweep, star, rep));
            return Ok(());
        }
        info!("outer iteration stalled on steps {}..{}; splitting the window", first_step, first_step + n);
        let n1 = n / 2;
        let before = out.len();
        self.solve_window(start_mech, start_theta, first_step, n1, depth + 1, out)?;
        let (mid_mech, mid_theta) = {
            let last = &out.last().expect("first half pushed a window").0;
            (last.mech.last().unwrap().clone(), last.theta.last().unwrap().clone())
        };
        debug_assert!(out.len() > before);
        self.solve_window(&mid_mech, &mid_theta, first_step + n1, n - n1, depth + 1, out)
    }

    /// Runs the damped Picard iteration over the whole grid, splitting the
    /// window when the iteration stalls. Non-convergence is reported in the
    /// status, not as an error.
    pub fn picard_solve(&self) -> Result<Solution> {
        let mut windows = Vec::new();
        self.solve_window(&self.initial_mech(), &self.initial_theta(), 0, self.grid.n_steps, 0, &mut windows)?;
        let mut sol = Solution {
            times: (0..=self.grid.n_steps).map(|n| self.grid.time(n)).collect(),
            mech: Vec::new(),
            theta: Vec::new(),
            theta_star: Vec::new(),
            steps: Vec::new(),
            sources: Vec::new(),
            report: PicardReport {
                windows: Vec::new(),
                status: PicardStatus::Converged,
            },
        };
        for (i, (sweep, star, rep)) in windows.into_iter().enumerate() {
            let skip = usize::from(i > 0);
            sol.mech.extend(sweep.mech.into_iter().skip(skip));
            sol.theta.extend(sweep.theta.into_iter().skip(skip));
            sol.theta_star.extend(star.into_iter().skip(skip));
            sol.steps.extend(sweep.steps);
            sol.sources.extend(sweep.sources);
            if !rep.converged {
                sol.report.status = PicardStatus::NotConverged;
            }
            sol.report.windows.push(rep);
        }
        Ok(sol)
    }

    /// `‖𝓣(θ) − θ‖` for the returned temperature of a solution.
    pub fn self_consistency(&self, sol: &Solution) -> Result<f64> {
        let again = self.apply_t(&sol.theta)?;
        Ok(self.norm(&difference(&again.theta, &sol.theta)))
    }

    /// Elastic energy `½ Σ |e| D(ε(u) − εp)·(ε(u) − εp)`.
    pub fn elastic_energy(&self, state: &MechState) -> f64 {
        let strain = fem::sym_grad(self.mesh, &state.u);
        strain
            .iter()
            .zip(&state.eps_p)
            .zip(self.mesh.volumes())
            .map(|((e, p), v)| {
                let el = *e - *p;
                0.5 * v * self.material.elastic.apply(&el).dot(&el)
            })
            .sum()
    }

    /// Per-step residual of the discrete energy balance
    /// `d/dt(elastic energy + heat content) = power of loads + boundary heat
    /// + εp rate against (viscous stress − thermal pressure)`.
    pub fn energy_audit(&self, sol: &Solution) -> Vec<f64> {
        let dt = self.grid.dt();
        let mut out = Vec::with_capacity(sol.steps.len());
        let mut e_prev = self.elastic_energy(&sol.mech[0]);
        for n in 0..sol.steps.len() {
            let t1 = sol.times[n + 1];
            let (a, b) = (&sol.mech[n], &sol.mech[n + 1]);
            let e_next = self.elastic_energy(b);
            let dtheta = (self.heat.content(&sol.theta[n + 1]) - self.heat.content(&sol.theta[n])) / dt;
            let u_dot: Vec<f64> = b.u.iter().zip(&a.u).map(|(x, y)| (x - y) / dt).collect();
            let ext = self.mech.external_load(self.data, t1);
            let power: f64 = ext.iter().zip(&u_dot).map(|(f, v)| f * v).sum();
            let flux: f64 = self.heat.flux_load(|x, nrm| (self.data.flux)(t1, x, nrm)).iter().sum();
            let extra: f64 = match self.data.heat_source(t1, &[0.0; 3]) {
                Some(_) => self.heat.vertex_source(|x| self.data.heat_source(t1, x).unwrap_or(0.0)).iter().sum(),
                None => 0.0,
            };
            let theta_el = self.mesh.element_means(&sol.theta_star[n + 1]);
            let rate = fem::sym_grad(self.mesh, &u_dot);
            let mut plastic = 0.0;
            for e in 0..self.mesh.num_elements() {
                let ep = (1.0 / dt) * (b.eps_p[e] - a.eps_p[e]);
                let tr = self.material.viscous.apply(&rate[e]).dot(&ep) - self.material.phi(theta_el[e]) * ep.trace();
                plastic += self.mesh.volume(e) * tr;
            }
            out.push((e_next - e_prev) / dt + dtheta - (power + flux + extra + plastic));
            e_prev = e_next;
        }
        out
    }
}
