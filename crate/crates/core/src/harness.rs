//! Scenario orchestration: simulate, manufactured-solution studies and the
//! oracle comparison, plus their file output.

use std::fmt::Write as _;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::coupler::{Coupled, PicardStatus, Solution, TimeGrid};
use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::heat::{self, Compatibility};
use crate::materials::MaterialModel;
use crate::mesh::{write_file, Mesh};
use crate::mms::{self, Manufactured};
use crate::oracle::{self, FieldDiffs, Oracle, OracleSettings};
use crate::tensor::{sym_len, SymTensor};

/// How a failed run maps to a process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    ConfigInvalid,
    SolverFailure,
    NotConverged,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::ConfigInvalid => 2,
            FailureKind::SolverFailure => 3,
            FailureKind::NotConverged => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::ConfigInvalid => "config-invalid",
            FailureKind::SolverFailure => "solver-failure",
            FailureKind::NotConverged => "not-converged",
        }
    }
}

pub fn classify(err: &Error) -> FailureKind {
    // output write failures count as run failures
    if err.is_solver_failure() || matches!(err, Error::Io { .. }) {
        FailureKind::SolverFailure
    } else {
        FailureKind::ConfigInvalid
    }
}

/// Compatibility of the initial temperature with the initial flux, as seen
/// from the configuration. A discrete mismatch whose analytic data agree is
/// only a warning: P1 normal derivatives are exact only for affine fields.
pub fn check_config_compatibility(cfg: &RunConfig, mesh: &Mesh, material: &MaterialModel) -> Compatibility {
    let data = cfg.problem_data();
    let theta0: Vec<f64> = mesh.vertices().iter().map(|x| (data.theta0)(0.0, x)).collect();
    let discrete = heat::check_compatibility(mesh, &theta0, |x, n| (data.flux)(0.0, x, n), &material.exponents);
    let Compatibility::Violation { max_deviation, .. } = discrete else {
        return discrete;
    };
    let mut h_max: f64 = 0.0;
    let mut worst: (usize, f64) = (0, 0.0);
    for f in 0..mesh.num_facets() {
        let x = mesh.facet_centroid(f);
        let n = mesh.facet_face(f).outward_normal();
        let h = (data.flux)(0.0, &x, &n);
        let g = cfg.data.theta0.grad(0.0, &x);
        let dev = (g[0] * n[0] + g[1] * n[1] + g[2] * n[2] - h).abs();
        h_max = h_max.max(h.abs());
        if dev > worst.1 {
            worst = (f, dev);
        }
    }
    if worst.1 <= 1e-8 * (1.0 + h_max) {
        Compatibility::Warning { max_deviation }
    } else {
        Compatibility::Violation {
            max_deviation: worst.1,
            facet: worst.0,
        }
    }
}

/// Everything a run needs, built from a validated configuration.
pub struct Prepared {
    pub mesh: Mesh,
    pub material: MaterialModel,
    pub data: ProblemData,
    pub grid: TimeGrid,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let mesh = cfg.build_mesh()?;
    let material = cfg.material_model();
    match check_config_compatibility(cfg, &mesh, &material) {
        Compatibility::Ok => {}
        Compatibility::Warning { max_deviation } => warn!(
            "initial temperature and flux agree analytically; discrete normal derivative deviates by {max_deviation:.3e}"
        ),
        Compatibility::Violation { max_deviation, facet } => {
            return Err(Error::Config(vec![format!(
                "compatibility: ∂θ0/∂n differs from h(0, ·) by {max_deviation:.3e} on boundary facet {facet} (required for r > 3)"
            )]))
        }
    }
    Ok(Prepared {
        data: cfg.problem_data(),
        grid: cfg.time_grid()?,
        mesh,
        material,
    })
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn tensor_q_norm(mesh: &Mesh, f: &[SymTensor], q: f64) -> f64 {
    f.iter()
        .zip(mesh.volumes())
        .map(|(t, v)| v * t.norm().powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Contraction ratio per step (geometric mean over its inner iterates).
pub fn step_ratios(sol: &Solution, floor: f64) -> Vec<Option<f64>> {
    sol.steps
        .iter()
        .map(|s| {
            let r: Vec<f64> = s.substeps.iter().filter_map(|r| r.mean_ratio(floor)).collect();
            if r.is_empty() {
                None
            } else {
                Some((r.iter().map(|x| x.ln()).sum::<f64>() / r.len() as f64).exp())
            }
        })
        .collect()
}

/// Median over steps of the per-step inner contraction ratio.
pub fn median_contraction_ratio(sol: &Solution, floor: f64) -> Option<f64> {
    median(step_ratios(sol, floor).into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: String,
    pub converged: bool,
    pub dim: usize,
    pub vertices: usize,
    pub elements: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub outer_iterations: usize,
    pub windows: usize,
    pub outer_deltas: Vec<f64>,
    pub iterate_norms: Vec<f64>,
    pub ball_bounded: bool,
    pub inner_iterations_total: usize,
    pub inner_iterations_max: usize,
    pub step_halvings: usize,
    pub median_contraction_ratio: Option<f64>,
    pub theta_norm_lp_lr: f64,
    pub final_mean_theta: f64,
    pub final_max_abs_u: f64,
    pub final_eps_p_norm: f64,
    pub final_sigma_norm: f64,
    pub max_energy_residual: f64,
    pub self_consistency: Option<f64>,
}

/// A finished simulation with its derived diagnostics.
pub struct SimRun {
    pub mesh: Mesh,
    pub material: MaterialModel,
    pub solution: Solution,
    pub energy: Vec<f64>,
    pub summary: RunSummary,
    pub ratios: Vec<Option<f64>>,
}

/// Runs the coupled problem without manufactured sources.
pub fn simulate(cfg: &RunConfig) -> Result<SimRun> {
    let p = prepare(cfg)?;
    let settings = cfg.solver_settings();
    let coupled = Coupled::new(&p.mesh, &p.material, &p.data, p.grid, settings)?;
    info!(
        "simulating {} elements, {} steps of dt = {}",
        p.mesh.num_elements(),
        p.grid.n_steps,
        p.grid.dt()
    );
    let solution = coupled.picard_solve()?;
    let energy = coupled.energy_audit(&solution);
    let self_consistency = if solution.report.converged() {
        Some(coupled.self_consistency(&solution)?)
    } else {
        None
    };
    let ratios = step_ratios(&solution, settings.inner.tol);
    let q = p.material.exponents.q;
    let last = solution.mech.last().expect("at least the initial state");
    let theta_last = solution.theta.last().expect("at least the initial state");
    let summary = RunSummary {
        status: match solution.report.status {
            PicardStatus::Converged => "converged",
            PicardStatus::NotConverged => "not-converged",
        }
        .into(),
        converged: solution.report.converged(),
        dim: p.mesh.dim(),
        vertices: p.mesh.num_vertices(),
        elements: p.mesh.num_elements(),
        n_steps: p.grid.n_steps,
        dt: p.grid.dt(),
        outer_iterations: solution.report.outer_iterations(),
        windows: solution.report.windows.len(),
        outer_deltas: solution.report.deltas(),
        iterate_norms: solution.report.norms(),
        ball_bounded: solution.report.ball_bounded(),
        inner_iterations_total: solution.steps.iter().map(|s| s.iterations()).sum(),
        inner_iterations_max: solution.steps.iter().map(|s| s.iterations()).max().unwrap_or(0),
        step_halvings: solution.steps.iter().map(|s| s.halvings).sum(),
        median_contraction_ratio: median(ratios.iter().flatten().copied().collect()),
        theta_norm_lp_lr: coupled.norm(&solution.theta),
        final_mean_theta: coupled.heat_solver().mean(theta_last),
        final_max_abs_u: max_abs(&last.u),
        final_eps_p_norm: tensor_q_norm(&p.mesh, &last.eps_p, q),
        final_sigma_norm: tensor_q_norm(&p.mesh, &last.sigma, q),
        max_energy_residual: max_abs(&energy),
        self_consistency,
    };
    drop(coupled);
    Ok(SimRun {
        mesh: p.mesh,
        material: p.material,
        solution,
        energy,
        summary,
        ratios,
    })
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn tensor_labels(dim: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(sym_len(dim));
    for i in 0..dim {
        for j in i..dim {
            out.push(format!("{}{}", AXES[i], AXES[j]));
        }
    }
    out
}

fn write_snapshot(dir: &Path, mesh: &Mesh, sol: &Solution, n: usize) -> Result<()> {
    let d = mesh.dim();
    let st = &sol.mech[n];
    let mut s = String::from("vertex");
    for a in &AXES[..d] {
        write!(s, ",{a} [length]").unwrap();
    }
    for a in &AXES[..d] {
        write!(s, ",u_{a} [length]").unwrap();
    }
    s.push_str(",theta [temperature]\n");
    for v in 0..mesh.num_vertices() {
        write!(s, "{v}").unwrap();
        for k in 0..d {
            write!(s, ",{:.17e}", mesh.vertex(v)[k]).unwrap();
        }
        for k in 0..d {
            write!(s, ",{:.17e}", st.u[v * d + k]).unwrap();
        }
        writeln!(s, ",{:.17e}", sol.theta[n][v]).unwrap();
    }
    write_file(&dir.join(format!("snapshot_{n:05}_vertices.csv")), &s)?;

    let labels = tensor_labels(d);
    let mut s = String::from("element");
    for l in &labels {
        write!(s, ",eps_p_{l} [1]").unwrap();
    }
    for l in &labels {
        write!(s, ",sigma_{l} [stress]").unwrap();
    }
    s.push('\n');
    for e in 0..mesh.num_elements() {
        write!(s, "{e}").unwrap();
        for c in st.eps_p[e].components() {
            write!(s, ",{c:.17e}").unwrap();
        }
        for c in st.sigma[e].components() {
            write!(s, ",{c:.17e}").unwrap();
        }
        s.push('\n');
    }
    write_file(&dir.join(format!("snapshot_{n:05}_elements.csv")), &s)
}

fn write_vtk(dir: &Path, mesh: &Mesh, sol: &Solution, n: usize) -> Result<()> {
    let d = mesh.dim();
    let st = &sol.mech[n];
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0\nsnapshot at t = {}\nASCII\nDATASET UNSTRUCTURED_GRID", sol.times[n]).unwrap();
    writeln!(s, "POINTS {} double", mesh.num_vertices()).unwrap();
    for x in mesh.vertices() {
        writeln!(s, "{} {} {}", x[0], x[1], x[2]).unwrap();
    }
    let k = d + 1;
    writeln!(s, "CELLS {} {}", mesh.num_elements(), mesh.num_elements() * (k + 1)).unwrap();
    for e in 0..mesh.num_elements() {
        let ids: Vec<String> = mesh.simplex(e).iter().map(|v| v.to_string()).collect();
        writeln!(s, "{k} {}", ids.join(" ")).unwrap();
    }
    writeln!(s, "CELL_TYPES {}", mesh.num_elements()).unwrap();
    let ty = if d == 2 { 5 } else { 10 };
    for _ in 0..mesh.num_elements() {
        writeln!(s, "{ty}").unwrap();
    }
    writeln!(s, "POINT_DATA {}", mesh.num_vertices()).unwrap();
    writeln!(s, "VECTORS u double").unwrap();
    for v in 0..mesh.num_vertices() {
        let mut u = [0.0; 3];
        u[..d].copy_from_slice(&st.u[v * d..v * d + d]);
        writeln!(s, "{} {} {}", u[0], u[1], u[2]).unwrap();
    }
    writeln!(s, "SCALARS theta double 1\nLOOKUP_TABLE default").unwrap();
    for t in &sol.theta[n] {
        writeln!(s, "{t}").unwrap();
    }
    writeln!(s, "CELL_DATA {}", mesh.num_elements()).unwrap();
    for (name, field) in [("eps_p", &st.eps_p), ("sigma", &st.sigma)] {
        writeln!(s, "TENSORS {name} double").unwrap();
        for t in field.iter() {
            for i in 0..3 {
                let row: Vec<String> = (0..3)
                    .map(|j| if i < d && j < d { t.get(i, j).to_string() } else { "0".into() })
                    .collect();
                writeln!(s, "{}", row.join(" ")).unwrap();
            }
        }
    }
    write_file(&dir.join(format!("snapshot_{n:05}.vtk")), &s)
}

fn write_diagnostics(dir: &Path, run: &SimRun) -> Result<()> {
    let sol = &run.solution;
    let mesh = &run.mesh;
    let e = &run.material.exponents;
    let mut s = String::from(
        "step,time [time],theta_mean [temperature],theta_lr_norm [temperature],max_abs_u [length],\
eps_p_lq_norm [1],sigma_lq_norm [stress],energy_residual [energy/time],inner_iterations,step_halvings,\
contraction_ratio [1],outer_iterations,source_thermal_lr [energy/(volume*time)],\
source_plastic_lr [energy/(volume*time)],source_viscous_lr [energy/(volume*time)]\n",
    );
    let mass = crate::fem::lumped_mass(mesh);
    let total: f64 = mass.iter().sum();
    for n in 1..sol.times.len() {
        let th = &sol.theta[n];
        let mean = mass.iter().zip(th).map(|(m, t)| m * t).sum::<f64>() / total;
        let lr = mesh
            .element_means(th)
            .iter()
            .zip(mesh.volumes())
            .map(|(t, v)| v * t.abs().powf(e.r))
            .sum::<f64>()
            .powf(1.0 / e.r);
        let window = sol
            .report
            .windows
            .iter()
            .find(|w| n > w.first_step && n <= w.first_step + w.n_steps)
            .map_or(0, |w| w.outer_iterations);
        let st = &sol.mech[n];
        let step = &sol.steps[n - 1];
        let src = sol.sources[n - 1];
        writeln!(
            s,
            "{n},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{},{},{:.17e},{:.17e},{:.17e}",
            sol.times[n],
            mean,
            lr,
            max_abs(&st.u),
            tensor_q_norm(mesh, &st.eps_p, e.q),
            tensor_q_norm(mesh, &st.sigma, e.q),
            run.energy[n - 1],
            step.iterations(),
            step.halvings,
            run.ratios[n - 1].map_or(String::new(), |r| format!("{r:.17e}")),
            window,
            src[0],
            src[1],
            src[2],
        )
        .unwrap();
    }
    write_file(&dir.join("diagnostics.csv"), &s)
}

/// Writes the mesh, snapshots, diagnostics and summary of a run into `dir`.
pub fn write_outputs(run: &SimRun, dir: &Path, stride: usize, vtk: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    run.mesh.write_csv(&dir.join("mesh"))?;
    let last = run.solution.times.len() - 1;
    for n in 0..=last {
        if n % stride.max(1) == 0 || n == last {
            write_snapshot(dir, &run.mesh, &run.solution, n)?;
            if vtk {
                write_vtk(dir, &run.mesh, &run.solution, n)?;
            }
        }
    }
    write_diagnostics(dir, run)?;
    let json = serde_json::to_string_pretty(&run.summary).expect("summary serializes");
    write_file(&dir.join("summary.json"), &json)
}

/// `simulate` followed by `write_outputs` into the configured directory.
pub fn run_simulate(cfg: &RunConfig) -> Result<SimRun> {
    let run = simulate(cfg)?;
    write_outputs(&run, &cfg.output.directory, cfg.output.snapshot_stride, cfg.output.vtk)?;
    Ok(run)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmsRow {
    pub cells: usize,
    pub h: f64,
    pub n_steps: usize,
    pub dt: f64,
    pub error_u: f64,
    pub error_theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmsTable {
    pub rows: Vec<MmsRow>,
    pub orders_u: Vec<f64>,
    pub orders_theta: Vec<f64>,
}

impl MmsTable {
    fn from_rows(rows: Vec<MmsRow>) -> Self {
        let eu: Vec<f64> = rows.iter().map(|r| r.error_u).collect();
        let et: Vec<f64> = rows.iter().map(|r| r.error_theta).collect();
        Self {
            orders_u: mms::observed_orders(&eu),
            orders_theta: mms::observed_orders(&et),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "cells,h [length],n_steps,dt [time],error_u [length^(1+d/2)],error_theta [temperature*length^(d/2)],order_u,order_theta\n",
        );
        for (k, r) in self.rows.iter().enumerate() {
            let ou = if k > 0 { format!("{:.6}", self.orders_u[k - 1]) } else { String::new() };
            let ot = if k > 0 { format!("{:.6}", self.orders_theta[k - 1]) } else { String::new() };
            writeln!(
                s,
                "{},{:.17e},{},{:.17e},{:.17e},{:.17e},{ou},{ot}",
                r.cells, r.h, r.n_steps, r.dt, r.error_u, r.error_theta
            )
            .unwrap();
        }
        s
    }
}

fn manufactured(cfg: &RunConfig) -> Result<Manufactured> {
    let m = cfg
        .mms
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["an [mms] section is required for manufactured-solution runs".into()]))?;
    Ok(Manufactured::new(crate::expr::VectorExpr(m.u.clone()), m.theta.clone()))
}

fn mms_level(cfg: &RunConfig, resolution: &[usize], n_steps: usize) -> Result<MmsRow> {
    let man = manufactured(cfg)?;
    let material = cfg.material_model();
    let mut mcfg = cfg.mesh.clone();
    mcfg.resolution = resolution.to_vec();
    let mesh = Mesh::build(
        &mcfg.extents,
        &mcfg.resolution,
        &crate::mesh::TaggingRule::new(mcfg.dirichlet.iter().copied()),
    )?;
    let grid = TimeGrid::new(cfg.time.t_final, n_steps)?;
    let data = man.problem_data(&mesh, &material, grid.t_final)?;
    let coupled = Coupled::new(&mesh, &material, &data, grid, cfg.solver_settings())?;
    let sol = coupled.picard_solve()?;
    if !sol.report.converged() {
        return Err(Error::InnerNotConverged {
            time: grid.t_final,
            iterations: sol.report.outer_iterations(),
            residual: sol.report.deltas().last().copied().unwrap_or(f64::NAN),
        });
    }
    let t = grid.t_final;
    let last = sol.mech.last().unwrap();
    Ok(MmsRow {
        cells: resolution[0],
        h: mesh.cell_size(),
        n_steps,
        dt: grid.dt(),
        error_u: mms::l2_error_vector(&mesh, &last.u, |x| man.exact_u(t, x)),
        error_theta: mms::l2_error_scalar(&mesh, sol.theta.last().unwrap(), |x| man.exact_theta(t, x)),
    })
}

/// Spatial refinement study: the configured resolution doubled `levels - 1`
/// times at the configured time step.
pub fn run_mms(cfg: &RunConfig, levels: usize) -> Result<MmsTable> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(levels);
    for k in 0..levels {
        let res: Vec<usize> = cfg.mesh.resolution.iter().map(|n| n << k).collect();
        info!("manufactured solution, level {k}: {res:?}");
        rows.push(mms_level(cfg, &res, cfg.time.n_steps)?);
    }
    Ok(MmsTable::from_rows(rows))
}

/// Temporal refinement study on the configured mesh.
pub fn run_time_study(cfg: &RunConfig, step_counts: &[usize]) -> Result<MmsTable> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(step_counts.len());
    for &n in step_counts {
        info!("manufactured solution, {n} steps");
        rows.push(mms_level(cfg, &cfg.mesh.resolution, n)?);
    }
    Ok(MmsTable::from_rows(rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleStatus {
    Agree,
    Disagree,
    PicardDiverged,
    OracleFailed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub u: f64,
    pub eps_p: f64,
    pub sigma: f64,
    pub theta: f64,
}

impl From<FieldDiffs> for DiffReport {
    fn from(d: FieldDiffs) -> Self {
        Self {
            u: d.u,
            eps_p: d.eps_p,
            sigma: d.sigma,
            theta: d.theta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub status: OracleStatus,
    pub tolerance: f64,
    pub unknowns: usize,
    pub picard_converged: bool,
    pub picard_outer_iterations: usize,
    /// Nonzero means the staggered run refined some steps, so it no longer
    /// shares the oracle's time grid.
    pub picard_step_halvings: usize,
    pub picard_error: Option<String>,
    pub oracle_newton_iterations: Vec<usize>,
    pub oracle_error: Option<String>,
    pub differences: Option<DiffReport>,
}

/// Agreement threshold between the staggered and the monolithic solution.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// Solves the configured problem both ways and compares every field.
pub fn run_oracle(cfg: &RunConfig) -> Result<OracleReport> {
    let p = prepare(cfg)?;
    let settings = cfg.solver_settings();
    let coupled = Coupled::new(&p.mesh, &p.material, &p.data, p.grid, settings)?;
    let oracle = Oracle::new(&p.mesh, &p.material, &p.data, p.grid, OracleSettings::default())?;
    let mut report = OracleReport {
        status: OracleStatus::Agree,
        tolerance: ORACLE_TOLERANCE,
        unknowns: oracle.unknowns(),
        picard_converged: false,
        picard_outer_iterations: 0,
        picard_step_halvings: 0,
        picard_error: None,
        oracle_newton_iterations: Vec::new(),
        oracle_error: None,
        differences: None,
    };
    let picard = match coupled.picard_solve() {
        Ok(sol) => {
            report.picard_converged = sol.report.converged();
            report.picard_outer_iterations = sol.report.outer_iterations();
            report.picard_step_halvings = sol.steps.iter().map(|s| s.halvings).sum();
            Some(sol)
        }
        Err(e) if e.is_solver_failure() => {
            report.picard_error = Some(e.to_string());
            None
        }
        Err(e) => return Err(e),
    };
    match oracle.solve(&coupled.initial_mech(), &coupled.initial_theta(), None) {
        Ok(os) => {
            report.oracle_newton_iterations = os.newton_iterations.clone();
            if let Some(sol) = &picard {
                report.differences = Some(oracle::compare(sol, &os).into());
            }
        }
        Err(e) => report.oracle_error = Some(e.to_string()),
    }
    report.status = if report.oracle_error.is_some() {
        OracleStatus::OracleFailed
    } else if !report.picard_converged {
        OracleStatus::PicardDiverged
    } else {
        let d = report.differences.expect("both solutions exist");
        if [d.u, d.eps_p, d.sigma, d.theta].iter().all(|x| *x <= ORACLE_TOLERANCE) {
            OracleStatus::Agree
        } else {
            OracleStatus::Disagree
        }
    };
    Ok(report)
}
