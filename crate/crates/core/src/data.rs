//! Loads and initial data as functions of time and position.

use std::sync::Arc;

use crate::mesh::Point;
use crate::tensor::SymTensor;

pub type VectorFn = Arc<dyn Fn(f64, &Point) -> Point + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64, &Point) -> f64 + Send + Sync>;
/// Boundary data receive the outward normal of the facet they are
/// evaluated on.
pub type BoundaryVectorFn = Arc<dyn Fn(f64, &Point, &Point) -> Point + Send + Sync>;
pub type BoundaryScalarFn = Arc<dyn Fn(f64, &Point, &Point) -> f64 + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(&Point) -> SymTensor + Send + Sync>;

/// Extra volumetric sources used only to force manufactured solutions.
#[derive(Clone)]
pub enum SourceMode {
    Physical,
    Manufactured { f_u: VectorFn, f_theta: ScalarFn },
}

#[derive(Clone)]
pub struct ProblemData {
    pub body: VectorFn,
    pub traction: BoundaryVectorFn,
    pub flux: BoundaryScalarFn,
    pub u0: VectorFn,
    pub eps_p0: TensorFn,
    pub theta0: ScalarFn,
    pub sources: SourceMode,
}

impl ProblemData {
    /// All loads and initial data zero.
    pub fn zero(dim: usize) -> Self {
        Self {
            body: Arc::new(|_, _| [0.0; 3]),
            traction: Arc::new(|_, _, _| [0.0; 3]),
            flux: Arc::new(|_, _, _| 0.0),
            u0: Arc::new(|_, _| [0.0; 3]),
            eps_p0: Arc::new(move |_| SymTensor::zero(dim)),
            theta0: Arc::new(|_, _| 0.0),
            sources: SourceMode::Physical,
        }
    }

    pub fn with_body(mut self, f: impl Fn(f64, &Point) -> Point + Send + Sync + 'static) -> Self {
        self.body = Arc::new(f);
        self
    }

    pub fn with_traction(mut self, f: impl Fn(f64, &Point, &Point) -> Point + Send + Sync + 'static) -> Self {
        self.traction = Arc::new(f);
        self
    }

    pub fn with_flux(mut self, f: impl Fn(f64, &Point, &Point) -> f64 + Send + Sync + 'static) -> Self {
        self.flux = Arc::new(f);
        self
    }

    pub fn with_u0(mut self, f: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Self {
        self.u0 = Arc::new(move |_, x| f(x));
        self
    }

    pub fn with_eps_p0(mut self, f: impl Fn(&Point) -> SymTensor + Send + Sync + 'static) -> Self {
        self.eps_p0 = Arc::new(f);
        self
    }

    pub fn with_theta0(mut self, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.theta0 = Arc::new(move |_, x| f(x));
        self
    }

    pub fn with_sources(mut self, sources: SourceMode) -> Self {
        self.sources = sources;
        self
    }

    /// Body force plus the manufactured momentum source when active.
    pub fn total_body(&self, t: f64, x: &Point) -> Point {
        let mut b = (self.body)(t, x);
        if let SourceMode::Manufactured { f_u, .. } = &self.sources {
            let f = f_u(t, x);
            for i in 0..3 {
                b[i] += f[i];
            }
        }
        b
    }

    pub fn heat_source(&self, t: f64, x: &Point) -> Option<f64> {
        match &self.sources {
            SourceMode::Physical => None,
            SourceMode::Manufactured { f_theta, .. } => Some(f_theta(t, x)),
        }
    }
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mode = match self.sources {
            SourceMode::Physical => "physical",
            SourceMode::Manufactured { .. } => "manufactured",
        };
        f.debug_struct("ProblemData").field("sources", &mode).finish_non_exhaustive()
    }
}
