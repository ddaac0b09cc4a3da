use std::fmt;

use serde::{Deserialize, Serialize};

use super::solve::{setup, sum, ApproximateEquilibrium, Setup, SolveOptions, VERIFY_TOL};
use super::validate::prerequisites;
use super::Economy;
use crate::geometry::boundary_crossing;
use crate::preferences::{demand_grid_oracle, verify_demand};

/// Grid intervals across the widest side of a consumption set for the oracle.
const ORACLE_INTERVALS: f64 = 1000.0;
/// Crossings are deterministic; recomputed ones must agree to this.
const ZETA_TOL: f64 = 1e-8;

/// One verified condition: `value` compared against `bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

impl Clause {
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= bound,
            value,
            bound,
        }
    }

    fn failed(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: false,
            value: f64::NAN,
            bound: f64::NAN,
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: value {:.6e}, bound {:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.bound
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub clauses: Vec<Clause>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| !c.passed)
    }
}

/// Re-derives `ξ̄`, `δ` and `m` from the economy and the candidate's `ε`, then
/// checks every clause of the certificate. Demands are recomputed at a tenth
/// of the solver's tolerance, and in two dimensions also compared with a
/// brute-force grid argmax.
pub fn check_equilibrium(econ: &Economy, cand: &ApproximateEquilibrium) -> CheckReport {
    let n = econ.dim();
    let shape_ok = cand.price.len() == n
        && cand.eta.len() == n
        && cand.zeta.len() == n
        && cand.allocations.len() == econ.consumers().len()
        && cand.allocations.iter().all(|x| x.len() == n);
    if !shape_ok {
        return CheckReport {
            clauses: vec![Clause::failed("shape")],
        };
    }
    if !(cand.epsilon > 0.0) {
        return CheckReport {
            clauses: vec![Clause::failed("epsilon")],
        };
    }
    let pre = match prerequisites(econ) {
        Ok(pre) => pre,
        Err(_) => {
            return CheckReport {
                clauses: vec![Clause::failed("interior")],
            }
        }
    };
    let setup = match setup(econ, pre.xi_bar, cand.epsilon) {
        Ok(s) => s,
        Err(_) => {
            return CheckReport {
                clauses: vec![Clause::failed("polytope")],
            }
        }
    };
    let demand_tol = SolveOptions::new(cand.epsilon).demand_tol();
    let mut clauses = vec![Clause::at_most(
        "xi_bar",
        (&cand.xi_bar - &setup.xi_bar).amax(),
        VERIFY_TOL,
    )];
    clauses.extend(certificate_clauses(
        econ, cand, &setup, VERIFY_TOL, demand_tol,
    ));
    if n == 2 {
        for (i, (pref, x)) in econ.consumers().iter().zip(&cand.allocations).enumerate() {
            let (lo, hi) = pref.consumption_set().bounding_box();
            let pitch = (&hi - &lo).amax() / ORACLE_INTERVALS;
            let name = format!("oracle[{i}]");
            clauses.push(match demand_grid_oracle(pref, &cand.price, pitch) {
                Ok(g) => Clause::at_most(name, (&g - x).norm(), 2.0 * pitch),
                Err(_) => Clause::failed(name),
            });
        }
    }
    CheckReport { clauses }
}

/// The certificate clauses, against constants already derived from the economy.
pub(crate) fn certificate_clauses(
    econ: &Economy,
    cand: &ApproximateEquilibrium,
    setup: &Setup,
    tol: f64,
    demand_tol: f64,
) -> Vec<Clause> {
    let p = &cand.price;
    let mut out = Vec::new();
    out.push(Clause::at_most(
        "normalization",
        (p.dot(&setup.xi_bar) + 1.0).abs(),
        tol,
    ));
    out.push(Clause::at_most(
        "polar",
        econ.production().polar().max_violation(p),
        tol,
    ));
    let total = sum(&cand.allocations, p.len());
    let gap = (&total - &cand.eta).amax();
    out.push(Clause {
        name: "aggregation".into(),
        passed: total == cand.eta,
        value: gap,
        bound: 0.0,
    });
    for (i, (pref, x)) in econ.consumers().iter().zip(&cand.allocations).enumerate() {
        let name = format!("demand[{i}]");
        out.push(match verify_demand(pref, p, x, demand_tol) {
            Ok(c) => Clause {
                name,
                passed: c.passed(),
                value: c.recompute_distance,
                bound: 10.0 * demand_tol * pref.condition_number().sqrt().max(1.0),
            },
            Err(_) => Clause::failed(name),
        });
    }
    let profit = p.dot(&cand.eta);
    out.push(Clause {
        name: "profit".into(),
        passed: profit > -cand.epsilon,
        value: profit,
        bound: -cand.epsilon,
    });
    match boundary_crossing(&setup.region, &setup.xi_bar, &cand.eta) {
        Ok(c) => {
            out.push(Clause {
                name: "crossing".into(),
                passed: c.t < setup.m,
                value: c.t,
                bound: setup.m,
            });
            out.push(Clause::at_most(
                "zeta",
                (&c.point - &cand.zeta).norm(),
                ZETA_TOL,
            ));
        }
        Err(_) => out.push(Clause::failed("crossing")),
    }
    out.push(match econ.production().distance(&cand.eta) {
        Ok(d) => Clause::at_most("market", d, setup.delta + tol),
        Err(_) => Clause::failed("market"),
    });
    out
}
