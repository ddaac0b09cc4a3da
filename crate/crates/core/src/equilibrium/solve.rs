use serde::{Deserialize, Serialize};

use super::check::certificate_clauses;
use super::validate::{pointedness, prerequisites};
use super::{Economy, EquilibriumError};
use crate::fixed_point::{
    g_r_select, kakutani_fixed_point, FixedPointError, GrMap, Label, SearchError, SearchOptions,
    SelectionProblem,
};
use crate::geometry::{
    boundary_crossing, price_polytope, ClippedCone, GeometryError, PricePolytope, Vector,
};
use crate::preferences::{aggregate_demand, demand, PreferenceError};
use crate::serde_vec;

/// Absolute tolerance of every certificate clause.
pub const VERIFY_TOL: f64 = 1e-7;
/// Longest `k` accepted by [`refine_sequence`].
pub const MAX_SEQUENCE_LENGTH: usize = 12;
/// Largest price net carried by the `g_r` selection.
const PRICE_NET_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub epsilon: f64,
    pub seed: u64,
    pub max_refine: usize,
    pub verify_tol: f64,
    /// Defaults to `min(1e-6, ε/100)`.
    pub demand_tol: Option<f64>,
}

impl SolveOptions {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            seed: 0,
            max_refine: SearchOptions::default().max_refine,
            verify_tol: VERIFY_TOL,
            demand_tol: None,
        }
    }

    pub fn demand_tol(&self) -> f64 {
        self.demand_tol
            .unwrap_or_else(|| (self.epsilon / 100.0).min(1e-6))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub p_dot_eta: f64,
    pub dist_eta_to_y: f64,
    /// `p·ξ_i` per consumer.
    pub budget_residuals: Vec<f64>,
}

/// A price with allocations satisfying consumer optimality, market
/// aggregation and the profit-loss bound, plus the constants that certify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximateEquilibrium {
    #[serde(with = "serde_vec::vector")]
    pub price: Vector,
    /// `ξ_i = F_i(p)`.
    #[serde(with = "serde_vec::vectors")]
    pub allocations: Vec<Vector>,
    /// `η = Σ ξ_i`.
    #[serde(with = "serde_vec::vector")]
    pub eta: Vector,
    /// Where the segment from `ξ̄` to `η` leaves `Y`: `ζ = tξ̄ + (1 − t)η`.
    #[serde(with = "serde_vec::vector")]
    pub zeta: Vector,
    #[serde(with = "serde_vec::vector")]
    pub xi_bar: Vector,
    pub t: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub m_const: f64,
    pub metrics: Metrics,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub refinements: usize,
    #[serde(default)]
    pub evaluations: usize,
}

/// Constants of the construction for one `ε`.
#[derive(Debug, Clone)]
pub(crate) struct Setup {
    pub xi_bar: Vector,
    pub polytope: PricePolytope,
    pub region: ClippedCone,
    pub delta: f64,
    pub m: f64,
}

/// `δ = (ε/2)/max‖v‖` over vertices of `P`, so `|p·x − p·x′| < ε/2` on `P`
/// when `‖x − x′‖ < δ`; `m = min(ε/2, δ/B)` with `B` bounding `‖ξ̄ − η‖`.
pub(crate) fn setup(
    econ: &Economy,
    xi_bar: Vector,
    epsilon: f64,
) -> Result<Setup, EquilibriumError> {
    let polytope = price_polytope(econ.production(), &xi_bar)?;
    let delta = (epsilon / 2.0) / polytope.max_vertex_norm();
    let bound = econ.working_radius(&xi_bar);
    let m = (epsilon / 2.0).min(delta / bound);
    let region = ClippedCone::new(econ.production().clone(), bound)?;
    Ok(Setup {
        xi_bar,
        polytope,
        region,
        delta,
        m,
    })
}

struct PriceProblem<'a> {
    econ: &'a Economy,
    setup: &'a Setup,
    map: GrMap,
    demand_tol: f64,
}

impl SelectionProblem for PriceProblem<'_> {
    type Error = EquilibriumError;

    /// Selection `p ↦ argmax_{q ∈ net} q·ζ(p)`, accepted when `p·ζ(p) > −m` and `t < m`.
    fn evaluate(&self, p: &Vector) -> Result<Label, EquilibriumError> {
        let eta = aggregate_demand(self.econ.consumers(), p, self.demand_tol)?;
        let c = boundary_crossing(&self.setup.region, &self.setup.xi_bar, &eta)?;
        let score = p.dot(&c.point);
        let selection = g_r_select(&self.map, &c.point)?;
        Ok(Label {
            selection,
            score,
            accepted: score > -self.setup.m && c.t < self.setup.m,
        })
    }

    fn is_recoverable(&self, e: &EquilibriumError) -> bool {
        matches!(
            e,
            EquilibriumError::Demand(PreferenceError::Consumer { source, .. })
                if matches!(**source, PreferenceError::Satiated { .. })
        )
    }
}

/// The `g_{m/2}` map over a net of `P`. The theoretical pitch `m/(4B)` is
/// coarsened until the net fits under a cap; vertices are always in the net,
/// so the maximum of every linear function over the net is still exact.
fn selection_map(setup: &Setup, bound: f64) -> Result<GrMap, EquilibriumError> {
    let mut eps = setup.m / (4.0 * bound);
    loop {
        match GrMap::new(setup.polytope.clone(), eps, setup.m / 2.0, PRICE_NET_CAP) {
            Err(FixedPointError::Geometry(GeometryError::ResolutionCapExceeded { .. })) => {
                eps *= 2.0;
            }
            other => {
                log::debug!("price net pitch {eps:.3e}");
                return Ok(other?);
            }
        }
    }
}

pub fn solve(
    econ: &Economy,
    epsilon: f64,
    seed: u64,
    max_refine: usize,
) -> Result<ApproximateEquilibrium, EquilibriumError> {
    let mut opts = SolveOptions::new(epsilon);
    opts.seed = seed;
    opts.max_refine = max_refine;
    solve_with(econ, &opts)
}

/// Finds `p ∈ P` with `p·ζ(p) > −m`, assembles the allocations at `p` and
/// re-verifies every certificate clause before returning.
///
/// `seed` drives the rotated directions of the local pattern search; equal
/// seeds give identical certificates.
pub fn solve_with(
    econ: &Economy,
    opts: &SolveOptions,
) -> Result<ApproximateEquilibrium, EquilibriumError> {
    if !(opts.epsilon > 0.0) || !opts.epsilon.is_finite() {
        return Err(EquilibriumError::InvalidArgument(
            "epsilon must be positive".into(),
        ));
    }
    let pt = pointedness(econ.production())?;
    if !pt.pointed {
        return Err(EquilibriumError::ValidationFailed(
            "production cone meets the nonnegative orthant outside the origin".into(),
        ));
    }
    let pre = prerequisites(econ)?;
    let setup = setup(econ, pre.xi_bar, opts.epsilon)?;
    let bound = econ.working_radius(&setup.xi_bar);
    log::info!(
        "P has {} vertices; δ = {:.3e}, m = {:.3e}",
        setup.polytope.vertices().len(),
        setup.delta,
        setup.m
    );
    let demand_tol = opts.demand_tol();
    let problem = PriceProblem {
        econ,
        setup: &setup,
        map: selection_map(&setup, bound)?,
        demand_tol,
    };
    let search = SearchOptions {
        max_refine: opts.max_refine,
        seed: opts.seed,
        ..SearchOptions::default()
    };
    let fp = kakutani_fixed_point(&problem, &setup.polytope, search).map_err(|e| match e {
        SearchError::Evaluation(e) => e,
        SearchError::NoFixedPoint {
            refinements,
            best_score,
        } => EquilibriumError::NoFixedPoint {
            refinements,
            best_score,
        },
    })?;
    log::info!(
        "fixed point after {} refinements and {} evaluations",
        fp.refinements,
        fp.evaluations
    );

    let p = fp.price;
    let allocations = econ
        .consumers()
        .iter()
        .enumerate()
        .map(|(index, c)| {
            demand(c, &p, demand_tol).map_err(|e| PreferenceError::Consumer {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let eta = sum(&allocations, p.len());
    let crossing = boundary_crossing(&setup.region, &setup.xi_bar, &eta)?;
    let cert = ApproximateEquilibrium {
        metrics: Metrics {
            p_dot_eta: p.dot(&eta),
            dist_eta_to_y: econ.production().distance(&eta)?,
            budget_residuals: allocations.iter().map(|x| p.dot(x)).collect(),
        },
        price: p,
        allocations,
        eta,
        zeta: crossing.point,
        xi_bar: setup.xi_bar.clone(),
        t: crossing.t,
        epsilon: opts.epsilon,
        delta: setup.delta,
        m_const: setup.m,
        seed: opts.seed,
        refinements: fp.refinements,
        evaluations: fp.evaluations,
    };
    let clauses = certificate_clauses(econ, &cert, &setup, opts.verify_tol, demand_tol);
    if let Some(bad) = clauses.iter().find(|c| !c.passed) {
        return Err(EquilibriumError::CertificateFailed(bad.to_string()));
    }
    Ok(cert)
}

/// `Σ x_i`, summed left to right.
pub(crate) fn sum(xs: &[Vector], n: usize) -> Vector {
    xs.iter().fold(Vector::zeros(n), |acc, x| acc + x)
}

/// Solves at `ε_n = eps0·2^{−n}` for `n = 0..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineSequence {
    pub epsilons: Vec<f64>,
    pub certificates: Vec<ApproximateEquilibrium>,
    /// `‖p_n − p_{n−1}‖` for `n >= 1`.
    pub price_steps: Vec<f64>,
    /// The stage that failed and why; later stages were not attempted.
    pub failure: Option<(usize, EquilibriumError)>,
}

pub fn refine_sequence(
    econ: &Economy,
    eps0: f64,
    k: usize,
    seed: u64,
) -> Result<RefineSequence, EquilibriumError> {
    if k > MAX_SEQUENCE_LENGTH {
        return Err(EquilibriumError::InvalidArgument(format!(
            "k = {k} exceeds {MAX_SEQUENCE_LENGTH}"
        )));
    }
    if !(eps0 > 0.0) {
        return Err(EquilibriumError::InvalidArgument(
            "eps0 must be positive".into(),
        ));
    }
    let mut out = RefineSequence {
        epsilons: Vec::new(),
        certificates: Vec::new(),
        price_steps: Vec::new(),
        failure: None,
    };
    for n in 0..=k {
        let eps = eps0 * 0.5f64.powi(n as i32);
        let mut opts = SolveOptions::new(eps);
        opts.seed = seed;
        match solve_with(econ, &opts) {
            Ok(cert) => {
                if let Some(prev) = out.certificates.last() {
                    out.price_steps.push((&cert.price - &prev.price).norm());
                }
                out.epsilons.push(eps);
                out.certificates.push(cert);
            }
            Err(e) => {
                log::warn!("refine_sequence stage {n} failed: {e}");
                out.failure = Some((n, e));
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{e1, e1_cone, v};
    use super::*;
    use crate::geometry::ConvexBody;
    use crate::preferences::Preference;

    #[test]
    fn e1_solves_to_the_analytic_equilibrium() {
        let cert = solve(&e1(), 0.01, 0, 12).unwrap();
        assert!(
            (&cert.price - v(&[5.0, 5.0])).norm() <= 1e-2,
            "{}",
            cert.price
        );
        assert!(
            (&cert.eta - v(&[-0.85, 0.85])).norm() <= 1e-2,
            "{}",
            cert.eta
        );
        assert!(cert.metrics.p_dot_eta > -0.01);
        assert!(cert.metrics.dist_eta_to_y <= cert.delta);
        assert!(cert.t < cert.m_const);
        assert_eq!(cert.eta, cert.allocations[0]);
    }

    #[test]
    fn scaled_generators_give_the_same_price() {
        let base = solve(&e1(), 0.01, 0, 12).unwrap();
        let e = e1();
        let scaled = Economy::new(
            e.consumers().to_vec(),
            e1_cone().scaled(3.7).unwrap(),
            e.interior_points().map(|p| p.to_vec()),
        )
        .unwrap();
        let other = solve(&scaled, 0.01, 0, 12).unwrap();
        assert!((&base.price - &other.price).norm() < 1e-9);
    }

    #[test]
    fn satiated_everywhere_is_reported() {
        // bliss deep inside X ∩ {p·x < 0} for every p ∈ P
        let x = ConvexBody::new_box(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
        let pref = Preference::new(x, v(&[-0.5, -0.5]), None).unwrap();
        let econ = Economy::new(vec![pref], e1_cone(), Some(vec![v(&[-0.5, 0.3])])).unwrap();
        let err = solve(&econ, 0.01, 0, 2).unwrap_err();
        assert!(
            matches!(&err, EquilibriumError::Demand(PreferenceError::Consumer { source, .. })
                if matches!(**source, PreferenceError::Satiated { .. })),
            "{err}"
        );
    }

    #[test]
    fn unpointed_cone_is_refused() {
        let x = ConvexBody::new_box(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
        let pref = Preference::new(x, v(&[0.0, 0.0]), None).unwrap();
        let y = crate::geometry::FiniteCone::new(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let econ = Economy::new(vec![pref], y, None).unwrap();
        assert!(matches!(
            solve(&econ, 0.01, 0, 2),
            Err(EquilibriumError::ValidationFailed(_))
        ));
    }

    #[test]
    fn sequence_limits() {
        assert!(refine_sequence(&e1(), 0.1, 13, 0).is_err());
        let one = refine_sequence(&e1(), 0.1, 0, 0).unwrap();
        assert_eq!(one.certificates.len(), 1);
        assert!(one.price_steps.is_empty());
    }

    #[test]
    fn certificate_round_trips_through_json() {
        let cert = solve(&e1(), 0.01, 3, 12).unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        let back: ApproximateEquilibrium = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cert);
    }
}
