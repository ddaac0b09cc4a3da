//! Scenario files: JSON, schema version 1.

use std::path::Path;

use equinox_core::equilibrium::{Economy, SolveOptions, VERIFY_TOL};
use equinox_core::geometry::{ConvexBody, FiniteCone};
use equinox_core::preferences::Preference;
use equinox_core::serde_vec::matrix::from_rows;
use equinox_core::Vector;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub dimension: usize,
    pub consumers: Vec<ConsumerSpec>,
    pub production_generators: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsumerSpec {
    pub set: SetSpec,
    pub bliss_point: Vec<f64>,
    /// Row-major; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SetSpec {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Vpolytope { vertices: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_refine")]
    pub max_refine: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_verify")]
    pub verify: f64,
    /// `min(1e-6, ε/100)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<f64>,
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_max_refine() -> usize {
    12
}

fn default_verify() -> f64 {
    VERIFY_TOL
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            seed: 0,
            max_refine: default_max_refine(),
            tolerances: Tolerances::default(),
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            verify: default_verify(),
            demand: None,
        }
    }
}

fn vector(data: &[f64], n: usize, what: &str) -> Result<Vector, CliError> {
    if data.len() != n {
        return Err(CliError::Schema(format!(
            "{what} has {} entries, expected {n}",
            data.len()
        )));
    }
    Ok(Vector::from_column_slice(data))
}

fn invalid(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Schema(format!("{what}: {e}"))
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.into(), e))?;
        let s: Scenario = serde_json::from_str(&text)
            .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        if s.schema != SCHEMA_VERSION {
            return Err(CliError::Schema(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                s.schema
            )));
        }
        Ok(s)
    }

    pub fn economy(&self) -> Result<Economy, CliError> {
        let n = self.dimension;
        if n == 0 {
            return Err(CliError::Schema("dimension must be positive".into()));
        }
        let mut prefs = Vec::with_capacity(self.consumers.len());
        for (i, c) in self.consumers.iter().enumerate() {
            let what = format!("consumers[{i}]");
            let set = match &c.set {
                SetSpec::Box { lo, hi } => ConvexBody::new_box(
                    vector(lo, n, &format!("{what}.set.box.lo"))?,
                    vector(hi, n, &format!("{what}.set.box.hi"))?,
                ),
                SetSpec::Ball { center, radius } => ConvexBody::new_ball(
                    vector(center, n, &format!("{what}.set.ball.center"))?,
                    *radius,
                ),
                SetSpec::Vpolytope { vertices } => ConvexBody::new_vpolytope(
                    vertices
                        .iter()
                        .map(|v| vector(v, n, &format!("{what}.set.vpolytope.vertices")))
                        .collect::<Result<_, _>>()?,
                ),
            }
            .map_err(|e| invalid(&what, e))?;
            let q = match &c.q {
                Some(rows) => {
                    let m = from_rows(rows).map_err(|e| invalid(&format!("{what}.q"), e))?;
                    if m.nrows() != n || m.ncols() != n {
                        return Err(CliError::Schema(format!("{what}.q must be {n}×{n}")));
                    }
                    Some(m)
                }
                None => None,
            };
            let bliss = vector(&c.bliss_point, n, &format!("{what}.bliss_point"))?;
            prefs.push(Preference::new(set, bliss, q).map_err(|e| invalid(&what, e))?);
        }
        let gens = self
            .production_generators
            .iter()
            .map(|g| vector(g, n, "production_generators"))
            .collect::<Result<Vec<_>, _>>()?;
        let cone = FiniteCone::new(gens).map_err(|e| invalid("production_generators", e))?;
        let interior = match &self.interior_points {
            Some(points) => Some(
                points
                    .iter()
                    .map(|p| vector(p, n, "interior_points"))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        Economy::new(prefs, cone, interior).map_err(|e| invalid("economy", e))
    }

    pub fn solve_options(&self) -> SolveOptions {
        let mut opts = SolveOptions::new(self.solver.epsilon);
        opts.seed = self.solver.seed;
        opts.max_refine = self.solver.max_refine;
        opts.verify_tol = self.solver.tolerances.verify;
        opts.demand_tol = self.solver.tolerances.demand;
        opts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const E1: &str = r#"{
        "schema": 1,
        "dimension": 2,
        "consumers": [{"set": {"box": {"lo": [-1, -1], "hi": [1, 1]}}, "bliss_point": [-0.2, 1.5]}],
        "production_generators": [[-1, 1], [0, -1], [-1, 0]],
        "interior_points": [[-0.5, 0.3]]
    }"#;

    #[test]
    fn parses_with_defaults() {
        let s: Scenario = serde_json::from_str(E1).unwrap();
        assert_eq!(s.solver, SolverSpec::default());
        let econ = s.economy().unwrap();
        assert_eq!(econ.dim(), 2);
        assert_eq!(econ.consumers().len(), 1);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = E1.replacen("\"schema\": 1,", "\"schema\": 1, \"colour\": 3,", 1);
        let err = serde_json::from_str::<Scenario>(&text)
            .unwrap_err()
            .to_string();
        assert!(err.contains("colour"), "{err}");
        let text = E1.replace("\"bliss_point\"", "\"q_matrix\": [], \"bliss_point\"");
        assert!(serde_json::from_str::<Scenario>(&text).is_err());
    }

    #[test]
    fn dimension_mismatch_is_a_schema_error() {
        let mut s: Scenario = serde_json::from_str(E1).unwrap();
        s.consumers[0].bliss_point.push(0.0);
        assert!(matches!(s.economy(), Err(CliError::Schema(_))));
    }

    #[test]
    fn round_trips() {
        let s: Scenario = serde_json::from_str(E1).unwrap();
        let back: Scenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
