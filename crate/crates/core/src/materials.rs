//! Constitutive laws: thermal stress `φ`, flow rule `Λ`, and the exponent
//! constraints relating the integrability and growth exponents.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{IsotropicRank4, SymTensor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ExponentSet {
    fn default() -> Self {
        Self {
            p: 2.0,
            q: 3.0,
            r: 2.0,
            s: 4.0,
            alpha: 0.25,
            beta: 0.25,
        }
    }
}

/// One inequality of the exponent constraint set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExponentConstraint {
    PFinite,
    PGreaterOne,
    RFinite,
    RGreaterOne,
    AlphaPositive,
    AlphaBelowHalf,
    BetaPositive,
    BetaBelowHalf,
    RDominatesQ,
    PDominatesS,
    QGreaterTwo,
}

impl ExponentConstraint {
    pub const ALL: [ExponentConstraint; 11] = [
        Self::PFinite,
        Self::PGreaterOne,
        Self::RFinite,
        Self::RGreaterOne,
        Self::AlphaPositive,
        Self::AlphaBelowHalf,
        Self::BetaPositive,
        Self::BetaBelowHalf,
        Self::RDominatesQ,
        Self::PDominatesS,
        Self::QGreaterTwo,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::PFinite => "p < ∞",
            Self::PGreaterOne => "p > 1",
            Self::RFinite => "r < ∞",
            Self::RGreaterOne => "r > 1",
            Self::AlphaPositive => "α > 0",
            Self::AlphaBelowHalf => "α < 1/2",
            Self::BetaPositive => "β > 0",
            Self::BetaBelowHalf => "β < 1/2",
            Self::RDominatesQ => "r ≥ max(α,β)q",
            Self::PDominatesS => "p ≥ max(α,β)s",
            Self::QGreaterTwo => "q > 2",
        }
    }

    /// Written so that NaN inputs fail every check they touch.
    pub fn holds(self, e: &ExponentSet) -> bool {
        let m = e.alpha.max(e.beta);
        match self {
            Self::PFinite => e.p < f64::INFINITY,
            Self::PGreaterOne => e.p > 1.0,
            Self::RFinite => e.r < f64::INFINITY,
            Self::RGreaterOne => e.r > 1.0,
            Self::AlphaPositive => e.alpha > 0.0,
            Self::AlphaBelowHalf => e.alpha < 0.5,
            Self::BetaPositive => e.beta > 0.0,
            Self::BetaBelowHalf => e.beta < 0.5,
            Self::RDominatesQ => e.r >= m * e.q,
            Self::PDominatesS => e.p >= m * e.s,
            Self::QGreaterTwo => e.q > 2.0,
        }
    }
}

impl fmt::Display for ExponentConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exponents: {}", self.label())
    }
}

/// Every violated constraint, in a fixed order. Empty means valid.
pub fn validate(e: &ExponentSet) -> Vec<ExponentConstraint> {
    ExponentConstraint::ALL
        .into_iter()
        .filter(|c| !c.holds(e))
        .collect()
}

/// `φ(s) = c·sign(s)·|s|^α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalStressLaw {
    pub c: f64,
    pub alpha: f64,
}

impl ThermalStressLaw {
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        if self.c == 0.0 || s == 0.0 {
            return 0.0;
        }
        self.c * s.signum() * s.abs().powf(self.alpha)
    }

    pub fn is_off(&self) -> bool {
        self.c == 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowRule {
    /// `Λ = dev(σ)/η`.
    Linear { eta: f64 },
    /// `Λ = (1/η)·max(|dev σ| − k(θ), 0)·dev σ/|dev σ|`, `k(θ) = k0 + k1|θ|^β`.
    /// An infinite `k0` switches plastic flow off entirely.
    RegVonMises { eta: f64, k0: f64, k1: f64, beta: f64 },
}

impl FlowRule {
    pub fn eta(&self) -> f64 {
        match *self {
            FlowRule::Linear { eta } | FlowRule::RegVonMises { eta, .. } => eta,
        }
    }

    /// Lipschitz constant in the stress argument.
    pub fn l1(&self) -> f64 {
        1.0 / self.eta()
    }

    /// Hölder constant in the temperature argument.
    pub fn l2(&self) -> f64 {
        match *self {
            FlowRule::Linear { .. } => 0.0,
            FlowRule::RegVonMises { eta, k1, .. } => k1 / eta,
        }
    }

    pub fn yield_radius(&self, theta: f64) -> f64 {
        match *self {
            FlowRule::Linear { .. } => 0.0,
            FlowRule::RegVonMises { k0, k1, beta, .. } => {
                if k1 == 0.0 {
                    k0
                } else {
                    k0 + k1 * theta.abs().powf(beta)
                }
            }
        }
    }

    /// True when `Λ ≡ 0` identically.
    pub fn is_inactive(&self) -> bool {
        matches!(*self, FlowRule::RegVonMises { k0, .. } if k0 == f64::INFINITY)
    }

    pub fn eval(&self, sigma: &SymTensor, theta: f64) -> SymTensor {
        let dim = sigma.dim();
        match *self {
            FlowRule::Linear { eta } => (1.0 / eta) * sigma.dev(),
            FlowRule::RegVonMises { eta, .. } => {
                if self.is_inactive() {
                    return SymTensor::zero(dim);
                }
                let d = sigma.dev();
                let n = d.norm();
                let over = n - self.yield_radius(theta);
                if over <= 0.0 || n == 0.0 {
                    return SymTensor::zero(dim);
                }
                (over / (eta * n)) * d
            }
        }
    }

    fn validate_into(&self, out: &mut Vec<String>) {
        let eta = self.eta();
        if !(eta > 0.0 && eta.is_finite()) {
            out.push(format!("flow: η must be finite and > 0, got {eta}"));
        }
        if let FlowRule::RegVonMises { k0, k1, beta, .. } = *self {
            if !(k0 >= 0.0) {
                out.push(format!("flow: k0 must be ≥ 0, got {k0}"));
            }
            if !(k1 >= 0.0 && k1.is_finite()) {
                out.push(format!("flow: k1 must be finite and ≥ 0, got {k1}"));
            }
            if !(beta > 0.0 && beta < 0.5) {
                out.push(format!("flow: β must lie in (0, 1/2), got {beta}"));
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub elastic: IsotropicRank4,
    pub viscous: IsotropicRank4,
    pub kappa: f64,
    pub phi: ThermalStressLaw,
    pub flow: FlowRule,
    pub exponents: ExponentSet,
}

impl MaterialModel {
    /// Checks every parameter jointly and reports all problems at once.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let mut errs: Vec<String> = validate(&self.exponents)
            .into_iter()
            .map(|c| c.to_string())
            .collect();
        for (name, op) in [("elastic", &self.elastic), ("viscous", &self.viscous)] {
            if !op.is_positive_definite(dim) {
                errs.push(format!(
                    "{name}: operator not positive definite (μ = {}, λ = {})",
                    op.mu, op.lambda
                ));
            }
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            errs.push(format!("kappa must be finite and > 0, got {}", self.kappa));
        }
        if !(0.0..=1.0).contains(&self.phi.c) {
            errs.push(format!("thermal stress scale c must lie in [0, 1], got {}", self.phi.c));
        }
        if self.phi.alpha != self.exponents.alpha {
            errs.push("thermal stress exponent differs from exponents.alpha".into());
        }
        self.flow.validate_into(&mut errs);
        if let FlowRule::RegVonMises { beta, .. } = self.flow {
            if beta != self.exponents.beta {
                errs.push("flow rule exponent differs from exponents.beta".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Material(errs))
        }
    }

    #[inline]
    pub fn phi(&self, s: f64) -> f64 {
        self.phi.eval(s)
    }

    #[inline]
    pub fn flow_rate(&self, sigma: &SymTensor, theta: f64) -> SymTensor {
        self.flow.eval(sigma, theta)
    }

    /// No coupling between temperature and mechanics in either direction
    /// other than viscous heating.
    pub fn is_decoupled(&self) -> bool {
        self.phi.is_off() && self.flow.is_inactive()
    }
}
