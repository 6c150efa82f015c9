//! Run configuration in TOML.
//!
//! ```toml
//! [mesh]
//! extents = [1.0, 1.0]
//! resolution = [4, 4]
//! dirichlet = ["x-"]
//!
//! [material]
//! mu_d = 1.0
//! lambda_d = 0.5
//! mu_c = 0.5
//! lambda_c = 0.2
//! kappa = 1.0
//! c = 0.1
//! alpha = 0.25
//! flow = { kind = "reg_von_mises", eta = 1.0, k0 = 0.05, k1 = 0.02 }
//! exponents = { p = 2.0, q = 3.0, r = 2.0, s = 4.0, beta = 0.25 }
//!
//! [data]
//! theta0 = "1"
//! [data.traction]
//! "x+" = ["const(0.2) @ lin(0, 1)", "0"]
//!
//! [time]
//! t_final = 1.0
//! n_steps = 10
//! ```
//!
//! Omitted loads are zero. Traction and flux are given per box face; faces
//! not listed carry zero data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coupler::{SolverSettings, TimeGrid};
use crate::data::{ProblemData, SourceMode};
use crate::error::{Error, Result};
use crate::expr::{Expr, VectorExpr};
use crate::materials::{ExponentSet, FlowRule, MaterialModel, ThermalStressLaw};
use crate::mech::InnerSettings;
use crate::mesh::{BoxFace, Mesh, Point, TaggingRule};
use crate::tensor::{sym_len, IsotropicRank4, SymTensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub material: MaterialConfig,
    #[serde(default)]
    pub data: DataConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mms: Option<MmsConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub extents: Vec<f64>,
    pub resolution: Vec<usize>,
    pub dirichlet: Vec<BoxFace>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowConfig {
    Linear { eta: f64 },
    RegVonMises { eta: f64, k0: f64, k1: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsConfig {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub beta: f64,
}

impl Default for ExponentsConfig {
    fn default() -> Self {
        let e = ExponentSet::default();
        Self {
            p: e.p,
            q: e.q,
            r: e.r,
            s: e.s,
            beta: e.beta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub mu_d: f64,
    pub lambda_d: f64,
    pub mu_c: f64,
    pub lambda_c: f64,
    pub kappa: f64,
    pub c: f64,
    pub alpha: f64,
    pub flow: FlowConfig,
    #[serde(default)]
    pub exponents: ExponentsConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Empty means zero.
    #[serde(default)]
    pub body: Vec<Expr>,
    #[serde(default)]
    pub traction: BTreeMap<BoxFace, Vec<Expr>>,
    #[serde(default)]
    pub flux: BTreeMap<BoxFace, Expr>,
    #[serde(default)]
    pub u0: Vec<Expr>,
    /// Upper-triangle components, row-major; empty means zero.
    #[serde(default)]
    pub eps_p0: Vec<Expr>,
    #[serde(default = "Expr::zero")]
    pub theta0: Expr,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            body: Vec::new(),
            traction: BTreeMap::new(),
            flux: BTreeMap::new(),
            u0: Vec::new(),
            eps_p0: Vec::new(),
            theta0: Expr::zero(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub n_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub inner_tol: f64,
    pub max_inner: usize,
    pub max_halvings: usize,
    pub outer_tol: f64,
    pub omega: f64,
    pub max_outer: usize,
    pub max_window_splits: usize,
    pub linear_rtol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            inner_tol: s.inner.tol,
            max_inner: s.inner.max_iter,
            max_halvings: s.inner.max_halvings,
            outer_tol: s.outer_tol,
            omega: s.omega,
            max_outer: s.max_outer,
            max_window_splits: s.max_window_splits,
            linear_rtol: s.linear_rtol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub snapshot_stride: usize,
    pub vtk: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("output"),
            snapshot_stride: 1,
            vtk: false,
        }
    }
}

/// Exact fields for a manufactured-solution study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmsConfig {
    pub u: Vec<Expr>,
    pub theta: Expr,
}

fn check_positive(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{name} must be finite and > 0, got {v}"));
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn dim(&self) -> usize {
        self.mesh.extents.len()
    }

    /// Reports every problem found, not just the first one.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let dim = self.dim();
        match self.build_mesh() {
            Ok(_) => {}
            Err(Error::Mesh(m)) => errs.push(format!("mesh: {m}")),
            Err(e) => errs.push(e.to_string()),
        }
        if dim == 2 || dim == 3 {
            if let Err(Error::Material(v)) = self.material_model().validate(dim) {
                errs.extend(v);
            }
            let d = &self.data;
            for (name, v, want) in [
                ("data.body", &d.body, dim),
                ("data.u0", &d.u0, dim),
                ("data.eps_p0", &d.eps_p0, sym_len(dim)),
            ] {
                if !v.is_empty() && v.len() != want {
                    errs.push(format!("{name} needs {want} components, got {}", v.len()));
                }
            }
            for (face, v) in &d.traction {
                if face.axis >= dim {
                    errs.push(format!("data.traction: face {face} does not exist in {dim}D"));
                }
                if v.len() != dim {
                    errs.push(format!("data.traction.{face} needs {dim} components, got {}", v.len()));
                }
                if self.mesh.dirichlet.contains(face) && !v.iter().all(Expr::is_trivially_zero) {
                    log::warn!("traction on Dirichlet face {face} is ignored");
                }
            }
            for face in d.flux.keys() {
                if face.axis >= dim {
                    errs.push(format!("data.flux: face {face} does not exist in {dim}D"));
                }
            }
            if let Some(m) = &self.mms {
                if m.u.len() != dim {
                    errs.push(format!("mms.u needs {dim} components, got {}", m.u.len()));
                }
            }
        }
        check_positive(&mut errs, "time.t_final", self.time.t_final);
        if self.time.n_steps == 0 {
            errs.push("time.n_steps must be ≥ 1".into());
        }
        let s = &self.solver;
        for (name, v) in [
            ("solver.inner_tol", s.inner_tol),
            ("solver.outer_tol", s.outer_tol),
            ("solver.linear_rtol", s.linear_rtol),
        ] {
            check_positive(&mut errs, name, v);
        }
        if !(s.omega > 0.0 && s.omega <= 1.0) {
            errs.push(format!("solver.omega must lie in (0, 1], got {}", s.omega));
        }
        if s.max_inner == 0 || s.max_outer == 0 {
            errs.push("solver iteration limits must be ≥ 1".into());
        }
        if self.output.snapshot_stride == 0 {
            errs.push("output.snapshot_stride must be ≥ 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        Mesh::build(
            &self.mesh.extents,
            &self.mesh.resolution,
            &TaggingRule::new(self.mesh.dirichlet.iter().copied()),
        )
    }

    pub fn material_model(&self) -> MaterialModel {
        let m = &self.material;
        let e = &m.exponents;
        let flow = match m.flow {
            FlowConfig::Linear { eta } => FlowRule::Linear { eta },
            FlowConfig::RegVonMises { eta, k0, k1 } => FlowRule::RegVonMises { eta, k0, k1, beta: e.beta },
        };
        MaterialModel {
            elastic: IsotropicRank4::new(m.mu_d, m.lambda_d),
            viscous: IsotropicRank4::new(m.mu_c, m.lambda_c),
            kappa: m.kappa,
            phi: ThermalStressLaw { c: m.c, alpha: m.alpha },
            flow,
            exponents: ExponentSet {
                p: e.p,
                q: e.q,
                r: e.r,
                s: e.s,
                alpha: m.alpha,
                beta: e.beta,
            },
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.time.t_final, self.time.n_steps)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        let s = &self.solver;
        SolverSettings {
            inner: InnerSettings {
                tol: s.inner_tol,
                max_iter: s.max_inner,
                max_halvings: s.max_halvings,
            },
            outer_tol: s.outer_tol,
            omega: s.omega,
            max_outer: s.max_outer,
            max_window_splits: s.max_window_splits,
            linear_rtol: s.linear_rtol,
        }
    }

    /// Loads and initial data without any manufactured sources.
    pub fn problem_data(&self) -> ProblemData {
        let dim = self.dim();
        let d = &self.data;
        let body = VectorExpr(d.body.clone());
        let u0 = VectorExpr(d.u0.clone());
        let eps_p0 = d.eps_p0.clone();
        let theta0 = d.theta0.clone();
        let traction: BTreeMap<BoxFace, VectorExpr> = d
            .traction
            .iter()
            .map(|(f, v)| (*f, VectorExpr(v.clone())))
            .collect();
        let flux = d.flux.clone();
        ProblemData {
            body: Arc::new(move |t, x| body.value(t, x)),
            traction: Arc::new(move |t, x, n| face_lookup(&traction, n).map_or([0.0; 3], |v| v.value(t, x))),
            flux: Arc::new(move |t, x, n| face_lookup(&flux, n).map_or(0.0, |e| e.value(t, x))),
            u0: Arc::new(move |t, x| u0.value(t, x)),
            eps_p0: Arc::new(move |x: &Point| {
                if eps_p0.is_empty() {
                    return SymTensor::zero(dim);
                }
                let c: Vec<f64> = eps_p0.iter().map(|e| e.value(0.0, x)).collect();
                SymTensor::from_components(dim, &c).expect("validated length")
            }),
            theta0: Arc::new(move |t, x| theta0.value(t, x)),
            sources: SourceMode::Physical,
        }
    }
}

fn face_lookup<'m, V>(map: &'m BTreeMap<BoxFace, V>, n: &Point) -> Option<&'m V> {
    BoxFace::from_normal(n).and_then(|f| map.get(&f))
}

/// Reads and fully validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_toml_str(&text)
}

pub fn write_config(cfg: &RunConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, cfg.to_toml_string()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"
[mesh]
extents = [1.0, 1.0]
resolution = [2, 2]
dirichlet = ["x-"]

[material]
mu_d = 1.0
lambda_d = 0.5
mu_c = 0.5
lambda_c = 0.2
kappa = 1.0
c = 0.1
alpha = 0.25
flow = { kind = "linear", eta = 1.0 }

[time]
t_final = 1.0
n_steps = 4
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.output, OutputConfig::default());
        assert_eq!(cfg.material.exponents, ExponentsConfig::default());
        assert!(cfg.data.body.is_empty());
        assert!(cfg.mms.is_none());
    }

    #[test]
    fn alpha_violation_is_named() {
        let text = MINIMAL.replace("alpha = 0.25", "alpha = 0.6");
        match RunConfig::from_toml_str(&text) {
            Err(Error::Config(v)) => assert!(v.iter().any(|m| m.contains("α < 1/2")), "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lists_all_violations() {
        let text = MINIMAL
            .replace("alpha = 0.25", "alpha = 0.6")
            .replace("kappa = 1.0", "kappa = -1.0")
            .replace("n_steps = 4", "n_steps = 0")
            .replace("dirichlet = [\"x-\"]", "dirichlet = []");
        match RunConfig::from_toml_str(&text) {
            Err(Error::Config(v)) => assert!(v.len() >= 4, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_expressions_and_faces() {
        let text = format!("{MINIMAL}\n[data]\ntheta0 = \"bogus(1)\"\n");
        assert!(RunConfig::from_toml_str(&text).is_err());
        let text = format!("{MINIMAL}\n[data.traction]\n\"z+\" = [\"0\", \"0\"]\n");
        assert!(matches!(RunConfig::from_toml_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn face_data_reaches_the_closures() {
        let text = format!(
            "{MINIMAL}\n[data.traction]\n\"x+\" = [\"2\", \"const(1) @ lin(0, 1)\"]\n[data.flux]\n\"y-\" = \"3\"\n"
        );
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        let data = cfg.problem_data();
        let x = [1.0, 0.5, 0.0];
        assert_eq!((data.traction)(2.0, &x, &[1.0, 0.0, 0.0]), [2.0, 2.0, 0.0]);
        assert_eq!((data.traction)(2.0, &x, &[0.0, 1.0, 0.0]), [0.0; 3]);
        assert_eq!((data.flux)(0.0, &x, &[0.0, -1.0, 0.0]), 3.0);
        assert_eq!((data.flux)(0.0, &x, &[1.0, 0.0, 0.0]), 0.0);
    }

    fn finite(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
        lo..hi
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            (finite(0.5, 3.0), finite(0.5, 3.0), 1usize..6, 1usize..6),
            (finite(0.1, 5.0), finite(0.0, 5.0), finite(0.1, 5.0), finite(0.0, 5.0), finite(0.1, 3.0)),
            (finite(0.0, 1.0), finite(0.05, 0.2), prop::bool::ANY, finite(0.1, 4.0), finite(0.0, 2.0)),
            (finite(0.1, 10.0), 1usize..50, finite(1e-12, 1e-6), finite(0.1, 1.0)),
            (finite(-2.0, 2.0), finite(-2.0, 2.0)),
        )
            .prop_map(|(m, mat, fl, tm, dat)| {
                let flow = if fl.2 {
                    FlowConfig::Linear { eta: fl.3 }
                } else {
                    FlowConfig::RegVonMises { eta: fl.3, k0: fl.4, k1: 0.5 * fl.4 }
                };
                let mut traction = BTreeMap::new();
                traction.insert(
                    BoxFace::new(0, true),
                    vec![Expr::constant(dat.0), Expr::parse(&format!("affine({}, 1, 0, 0) @ lin(0, 1)", dat.1)).unwrap()],
                );
                let mut flux = BTreeMap::new();
                flux.insert(BoxFace::new(1, false), Expr::constant(dat.1));
                RunConfig {
                    mesh: MeshConfig {
                        extents: vec![m.0, m.1],
                        resolution: vec![m.2, m.3],
                        dirichlet: vec![BoxFace::new(0, false)],
                    },
                    material: MaterialConfig {
                        mu_d: mat.0,
                        lambda_d: mat.1,
                        mu_c: mat.2,
                        lambda_c: mat.3,
                        kappa: mat.4,
                        c: fl.0,
                        alpha: fl.1,
                        flow,
                        exponents: ExponentsConfig { beta: fl.1, ..Default::default() },
                    },
                    data: DataConfig {
                        traction,
                        flux,
                        theta0: Expr::constant(dat.0),
                        ..Default::default()
                    },
                    time: TimeConfig { t_final: tm.0, n_steps: tm.1 },
                    solver: SolverConfig { outer_tol: tm.2, omega: tm.3, ..Default::default() },
                    output: OutputConfig::default(),
                    mms: None,
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip(cfg in arb_config()) {
            prop_assert!(cfg.validate().is_ok());
            let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
