//! Uniformly rotund preferences given by strongly concave quadratic utilities,
//! and the demand function they induce.

mod demand;

pub use demand::{
    aggregate_demand, demand, demand_grid_oracle, demand_with, verify_demand, BudgetContext,
    Demand, DemandCheck, DemandOptions, MAX_STAGES, SATIATION_MARGIN,
};

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::geometry::{check_dim, ConvexBody, ConvexRegion, GeometryError, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreferenceError {
    #[error("point outside consumption set (depth {depth:.3e})")]
    OutsideConsumptionSet { depth: f64 },
    #[error("budget empty: no bundle with p·x <= 0 that has room inside the consumption set")]
    BudgetEmpty,
    #[error("satiated: the best bundle leaves budget slack {slack:.3e}")]
    Satiated { slack: f64 },
    #[error("price vector is zero")]
    ZeroPrice,
    #[error("demand refinement did not settle within {0} stages")]
    NotConverged(usize),
    #[error("invalid utility matrix: {0}")]
    InvalidMatrix(String),
    #[error("consumer {index}: {source}")]
    Consumer {
        index: usize,
        source: Box<PreferenceError>,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `x ≻ x′` iff `u(x) > u(x′)` for `u(x) = −(x − b)ᵀQ(x − b)` on a convex body.
#[derive(Debug, Clone, PartialEq)]
pub struct Preference {
    consumption_set: ConvexBody,
    bliss_point: Vector,
    q: DMatrix<f64>,
    strong_concavity: f64,
    lambda_max: f64,
}

impl Preference {
    /// `q` defaults to the identity. It must be symmetric positive definite.
    pub fn new(
        consumption_set: ConvexBody,
        bliss_point: Vector,
        q: Option<DMatrix<f64>>,
    ) -> Result<Self, PreferenceError> {
        let n = consumption_set.dim();
        check_dim(n, &bliss_point)?;
        let q = q.unwrap_or_else(|| DMatrix::identity(n, n));
        if q.nrows() != n || q.ncols() != n {
            return Err(PreferenceError::InvalidMatrix(format!(
                "expected {n}x{n}, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if q.iter().any(|c| !c.is_finite()) {
            return Err(PreferenceError::InvalidMatrix("non-finite entry".into()));
        }
        let scale = q.amax().max(1e-300);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(PreferenceError::InvalidMatrix("not symmetric".into()));
        }
        let eig = SymmetricEigen::new(q.clone());
        let mu = eig.eigenvalues.min();
        let lambda_max = eig.eigenvalues.max();
        if !(mu > 1e-12 * scale) {
            return Err(PreferenceError::InvalidMatrix(format!(
                "not positive definite (smallest eigenvalue {mu:e})"
            )));
        }
        Ok(Self {
            consumption_set,
            bliss_point,
            q,
            strong_concavity: mu,
            lambda_max,
        })
    }

    pub fn consumption_set(&self) -> &ConvexBody {
        &self.consumption_set
    }

    pub fn bliss_point(&self) -> &Vector {
        &self.bliss_point
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.bliss_point.len()
    }

    /// Smallest eigenvalue of `Q`.
    pub fn strong_concavity(&self) -> f64 {
        self.strong_concavity
    }

    /// Largest over smallest eigenvalue of `Q`.
    pub fn condition_number(&self) -> f64 {
        self.lambda_max / self.strong_concavity
    }

    pub fn utility(&self, x: &Vector) -> f64 {
        let d = x - &self.bliss_point;
        -d.dot(&(&self.q * &d))
    }

    /// A Lipschitz constant of `u` on the consumption set: `2λ_max(R + ‖b‖)`.
    pub fn lipschitz(&self) -> f64 {
        2.0 * self.lambda_max * (self.consumption_set.outer_radius() + self.bliss_point.norm())
    }

    pub fn rotundity(&self) -> RotundityModulus {
        RotundityModulus {
            mu: self.strong_concavity,
            lipschitz: self.lipschitz(),
        }
    }
}

/// Outcome of a three-way comparison with a slack band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preferred {
    First,
    Second,
    WithinTol,
}

/// Compares two bundles of the consumption set with slack `tol`.
pub fn prefers(
    pref: &Preference,
    x: &Vector,
    x2: &Vector,
    tol: f64,
) -> Result<Preferred, PreferenceError> {
    for z in [x, x2] {
        check_dim(pref.dim(), z)?;
        if !pref.consumption_set.contains(z) {
            return Err(PreferenceError::OutsideConsumptionSet {
                depth: pref.consumption_set.depth(z),
            });
        }
    }
    let (u1, u2) = (pref.utility(x), pref.utility(x2));
    Ok(if u1 > u2 + tol {
        Preferred::First
    } else if u2 > u1 + tol {
        Preferred::Second
    } else {
        Preferred::WithinTol
    })
}

/// `ε ↦ δ(ε) = μ·ε²/(8(L + 1))`.
///
/// If `‖x − x′‖ >= ε` then `u((x + x′)/2) >= min(u(x), u(x′)) + με²/4`, and a
/// perturbation `z` with `‖z‖ < δ` costs less than `Lδ < με²/8` of that margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotundityModulus {
    pub mu: f64,
    pub lipschitz: f64,
}

impl RotundityModulus {
    pub fn delta(&self, eps: f64) -> f64 {
        rotundity_delta_from(self.mu, self.lipschitz, eps)
    }
}

/// The certified rotundity δ for `pref` at `eps > 0`.
pub fn rotundity_delta(pref: &Preference, eps: f64) -> f64 {
    pref.rotundity().delta(eps)
}

/// `μ·ε²/(8(L + 1))`. Panics unless `eps > 0`.
pub fn rotundity_delta_from(mu: f64, lipschitz: f64, eps: f64) -> f64 {
    assert!(eps > 0.0, "rotundity modulus needs eps > 0");
    mu * eps * eps / (8.0 * (lipschitz + 1.0))
}
