//! Economies with one aggregate production cone, hypothesis validation, the
//! approximate equilibrium solver and an independent certificate checker.

mod check;
mod solve;
mod validate;

pub use check::{check_equilibrium, CheckReport, Clause};
pub use solve::{
    refine_sequence, solve, solve_with, ApproximateEquilibrium, Metrics, RefineSequence,
    SolveOptions, MAX_SEQUENCE_LENGTH, VERIFY_TOL,
};
pub use validate::{
    interior_point, pointedness, validate_economy, InteriorWitness, NonsatiationSamples,
    Pointedness, ValidationReport,
};

use thiserror::Error;

use crate::fixed_point::FixedPointError;
use crate::geometry::{check_dim, FiniteCone, GeometryError, Vector};
use crate::preferences::{Preference, PreferenceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("invalid economy: {0}")]
    InvalidEconomy(String),
    #[error("economy failed validation: {0}")]
    ValidationFailed(String),
    #[error("no interior point found in X ∩ Y (best depth {best_depth:.3e})")]
    NoInteriorPoint { best_depth: f64 },
    #[error(
        "no fixed point at resolution after {refinements} refinements (best p·ζ {best_score:.6e})"
    )]
    NoFixedPoint { refinements: usize, best_score: f64 },
    #[error("certificate failed: {0}")]
    CertificateFailed(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Demand(#[from] PreferenceError),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Consumers with their preferences, and the aggregate production cone `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Economy {
    consumers: Vec<Preference>,
    production: FiniteCone,
    interior_points: Option<Vec<Vector>>,
}

impl Economy {
    /// `interior_points`, when given, holds one point of `(X_i ∩ Y)°` per
    /// consumer; otherwise they are searched for.
    pub fn new(
        consumers: Vec<Preference>,
        production: FiniteCone,
        interior_points: Option<Vec<Vector>>,
    ) -> Result<Self, EquilibriumError> {
        if consumers.is_empty() {
            return Err(EquilibriumError::InvalidEconomy(
                "at least one consumer is required".into(),
            ));
        }
        let n = production.dim();
        for c in &consumers {
            check_dim(n, c.bliss_point())?;
        }
        if let Some(points) = &interior_points {
            if points.len() != consumers.len() {
                return Err(EquilibriumError::InvalidEconomy(format!(
                    "{} interior points for {} consumers",
                    points.len(),
                    consumers.len()
                )));
            }
            for p in points {
                check_dim(n, p)?;
            }
        }
        Ok(Self {
            consumers,
            production,
            interior_points,
        })
    }

    pub fn dim(&self) -> usize {
        self.production.dim()
    }

    pub fn consumers(&self) -> &[Preference] {
        &self.consumers
    }

    pub fn production(&self) -> &FiniteCone {
        &self.production
    }

    pub fn interior_points(&self) -> Option<&[Vector]> {
        self.interior_points.as_deref()
    }

    /// `Σ R_i + ‖ξ̄‖`: bounds `‖ξ̄ − η‖` for every aggregate bundle `η`.
    pub fn working_radius(&self, xi_bar: &Vector) -> f64 {
        self.consumers
            .iter()
            .map(|c| c.consumption_set().outer_radius())
            .sum::<f64>()
            + xi_bar.norm()
    }
}
