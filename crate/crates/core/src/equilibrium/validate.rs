use serde::{Deserialize, Serialize};

use super::{Economy, EquilibriumError};
use crate::geometry::{
    check_dim, dedup_points, nnls, price_polytope, ConvexBody, ConvexRegion, FiniteCone, Vector,
};
use crate::par;
use crate::preferences::{demand_with, DemandOptions, PreferenceError};
use crate::serde_vec;

/// Coordinates of the aggregate interior point closer than this to zero are perturbed.
const NONZERO_BAND: f64 = 1e-9;
const INTERIOR_GRID_CAP: usize = 20_000;
const NONSATIATION_NET_CAP: usize = 2_000;
const NONSATIATION_TOL: f64 = 1e-5;

/// Whether `Y ∩ R^N_+ = {0}`, with a certificate either way.
///
/// A strictly positive price in the polar of `Y` proves pointedness; a
/// nonzero nonnegative point of `Y` disproves it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pointedness {
    pub pointed: bool,
    /// Unit price with `p·g <= 0` on every generator and every `p_j > 0`.
    #[serde(with = "serde_vec::opt_vector")]
    pub price: Option<Vector>,
    /// A point of `Y ∩ R^N_+` with coordinates summing to one.
    #[serde(with = "serde_vec::opt_vector")]
    pub witness: Option<Vector>,
}

/// `ball(point, radius) ⊆ X_i ∩ Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorWitness {
    #[serde(with = "serde_vec::vector")]
    pub point: Vector,
    pub radius: f64,
    /// Taken from the economy rather than searched for.
    pub supplied: bool,
}

/// Demand evaluated over a net of the price polytope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonsatiationSamples {
    /// Number of (price, consumer) evaluations.
    pub samples: usize,
    pub passed: usize,
    /// Evaluations where the best affordable bundle leaves budget slack.
    pub satiated: usize,
    /// Evaluations that failed for another reason.
    pub errors: usize,
    #[serde(with = "serde_vec::vectors")]
    pub satiated_prices: Vec<Vector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pointedness: Pointedness,
    pub interior_witnesses: Vec<InteriorWitness>,
    /// Why no witness could be produced, when one is missing.
    pub interior_error: Option<String>,
    /// The aggregate interior point `ξ̄ = Σ ξ̄_i`.
    #[serde(with = "serde_vec::opt_vector")]
    pub xi_bar: Option<Vector>,
    /// Absent when no price polytope could be built.
    pub nonsatiation: Option<NonsatiationSamples>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    /// Pointedness and interior witnesses; the solver refuses to run without both.
    /// Nonsatiation is sampled on a net only and is reported, not enforced.
    pub fn passed(&self) -> bool {
        self.pointedness.pointed && self.xi_bar.is_some()
    }
}

pub(crate) struct Prerequisites {
    pub xi_bar: Vector,
    pub witnesses: Vec<InteriorWitness>,
    pub notes: Vec<String>,
}

/// Deepest point of `X ∩ Y` found by a grid scan followed by compass search.
///
/// The radius is the depth at that point: `X` and `Y` both report exact
/// distances to their boundaries from inside, so the ball is certified.
pub fn interior_point(x: &ConvexBody, y: &FiniteCone) -> Result<(Vector, f64), EquilibriumError> {
    let n = y.dim();
    check_dim(n, x.interior_point())?;
    let depth = |z: &Vector| x.depth(z).min(y.depth(z));
    let (lo, hi) = x.bounding_box();
    let per_axis = ((INTERIOR_GRID_CAP as f64).powf(1.0 / n as f64).floor() as usize).max(2);
    let total = per_axis.pow(n as u32);
    let mut starts = par::map_range(total, |mut k| {
        Vector::from_fn(n, |i, _| {
            let j = k % per_axis;
            k /= per_axis;
            lo[i] + (hi[i] - lo[i]) * (j as f64 + 0.5) / per_axis as f64
        })
    });
    starts.push(x.interior_point().clone());
    let depths = par::map(&starts, depth);
    let (mut best, mut best_depth) = starts.into_iter().zip(depths).fold(
        (Vector::zeros(n), f64::NEG_INFINITY),
        |acc, (p, d)| {
            if d > acc.1 {
                (p, d)
            } else {
                acc
            }
        },
    );

    let mut step = (&hi - &lo).amax() / (2.0 * per_axis as f64);
    while step > 1e-9 {
        let mut moved = false;
        for i in 0..n {
            for s in [step, -step] {
                let mut z = best.clone();
                z[i] += s;
                let d = depth(&z);
                if d > best_depth {
                    best = z;
                    best_depth = d;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    if best_depth > NONZERO_BAND {
        Ok((best, best_depth))
    } else {
        Err(EquilibriumError::NoInteriorPoint { best_depth })
    }
}

/// Pointedness via nonnegative least squares.
///
/// Minimises `‖Σ λ_k g_k − s‖² + (Σ s_j − 1)²` over `λ, s >= 0`. A zero
/// residual exhibits `s ∈ Y ∩ R^N_+` on the unit simplex. Otherwise the
/// optimality conditions make the residual's first `N` entries a price in the
/// polar of `Y` whose coordinates are all at least the (positive) last entry.
pub fn pointedness(y: &FiniteCone) -> Result<Pointedness, EquilibriumError> {
    let n = y.dim();
    let mut columns: Vec<Vector> = y
        .generators()
        .iter()
        .map(|g| {
            let mut c = Vector::zeros(n + 1);
            c.rows_mut(0, n).copy_from(&(g / g.norm()));
            c
        })
        .collect();
    for j in 0..n {
        let mut c = Vector::zeros(n + 1);
        c[j] = -1.0;
        c[n] = 1.0;
        columns.push(c);
    }
    let mut target = Vector::zeros(n + 1);
    target[n] = 1.0;
    let w = nnls(&columns, &target)?;
    let fit = columns
        .iter()
        .zip(w.iter())
        .fold(Vector::zeros(n + 1), |acc, (c, wk)| acc + c * *wk);
    let residual = &target - &fit;
    let price = residual.rows(0, n).into_owned();
    let pnorm = price.norm();
    if pnorm > 1e-9 {
        let unit = price / pnorm;
        if unit.min() > 0.0 && y.polar().contains(&unit, 1e-9) {
            return Ok(Pointedness {
                pointed: true,
                price: Some(unit),
                witness: None,
            });
        }
    }
    let s = Vector::from_fn(n, |j, _| w[y.generators().len() + j]);
    let total = s.sum();
    Ok(Pointedness {
        pointed: false,
        price: None,
        witness: (total > 0.0).then(|| s / total),
    })
}

/// Interior witnesses for every consumer and their sum `ξ̄`, with every
/// coordinate of `ξ̄` moved away from zero inside the first witness's ball.
pub(crate) fn prerequisites(econ: &Economy) -> Result<Prerequisites, EquilibriumError> {
    let y = econ.production();
    let mut notes = Vec::new();
    let mut witnesses = Vec::with_capacity(econ.consumers().len());
    for (i, c) in econ.consumers().iter().enumerate() {
        let x = c.consumption_set();
        let w = match econ.interior_points() {
            Some(points) => {
                let p = &points[i];
                let radius = x.depth(p).min(y.depth(p));
                if !(radius > NONZERO_BAND) {
                    return Err(EquilibriumError::ValidationFailed(format!(
                        "supplied interior point of consumer {i} is not inside X ∩ Y (depth {radius:.3e})"
                    )));
                }
                InteriorWitness {
                    point: p.clone(),
                    radius,
                    supplied: true,
                }
            }
            None => {
                let (point, radius) = interior_point(x, y)?;
                InteriorWitness {
                    point,
                    radius,
                    supplied: false,
                }
            }
        };
        witnesses.push(w);
    }
    let mut xi_bar = witnesses
        .iter()
        .fold(Vector::zeros(econ.dim()), |acc, w| acc + &w.point);
    let small: Vec<usize> = (0..xi_bar.len())
        .filter(|&j| xi_bar[j].abs() < NONZERO_BAND)
        .collect();
    if !small.is_empty() {
        let first = &mut witnesses[0];
        let shift = first.radius / (2.0 * (small.len() as f64).sqrt());
        for &j in &small {
            first.point[j] += shift;
            xi_bar[j] += shift;
        }
        first.radius *= 0.5;
        notes.push(format!(
            "moved consumer 0's interior point by {shift:.3e} in coordinates {small:?} to keep ξ̄ off the coordinate hyperplanes"
        ));
    }
    Ok(Prerequisites {
        xi_bar,
        witnesses,
        notes,
    })
}

/// Checks pointedness of `Y`, finds interior witnesses, and samples
/// nonsatiation over a net of the price polytope. Never fails; problems are
/// recorded in the report.
pub fn validate_economy(econ: &Economy) -> ValidationReport {
    let mut notes = Vec::new();
    let pointed = pointedness(econ.production()).unwrap_or_else(|e| {
        notes.push(format!("pointedness check failed: {e}"));
        Pointedness {
            pointed: false,
            price: None,
            witness: None,
        }
    });
    if let Some(w) = &pointed.witness {
        notes.push(format!(
            "Y meets the nonnegative orthant at {:?}",
            w.as_slice()
        ));
    }
    let (witnesses, xi_bar, interior_error) = match prerequisites(econ) {
        Ok(pre) => {
            notes.extend(pre.notes);
            (pre.witnesses, Some(pre.xi_bar), None)
        }
        Err(e) => (Vec::new(), None, Some(e.to_string())),
    };
    let nonsatiation = xi_bar
        .as_ref()
        .and_then(|xi| match sample_nonsatiation(econ, xi) {
            Ok(s) => Some(s),
            Err(e) => {
                notes.push(format!("nonsatiation not sampled: {e}"));
                None
            }
        });
    if let Some(s) = &nonsatiation {
        if s.satiated > 0 {
            notes.push(format!(
                "demand is satiated at {} of {} sampled (price, consumer) pairs; nonsatiation holds only in part of P",
                s.satiated, s.samples
            ));
        }
    }
    ValidationReport {
        pointedness: pointed,
        interior_witnesses: witnesses,
        interior_error,
        xi_bar,
        nonsatiation,
        notes,
    }
}

fn sample_nonsatiation(
    econ: &Economy,
    xi_bar: &Vector,
) -> Result<NonsatiationSamples, EquilibriumError> {
    let polytope = price_polytope(econ.production(), xi_bar)?;
    let eps = polytope.max_vertex_norm() / 8.0;
    let mut prices = polytope.epsilon_net(eps, NONSATIATION_NET_CAP)?;
    prices.push(polytope.centroid());
    let prices = dedup_points(prices, 1e-12);
    let pairs: Vec<(usize, usize)> = (0..prices.len())
        .flat_map(|i| (0..econ.consumers().len()).map(move |c| (i, c)))
        .collect();
    let outcomes = par::map(&pairs, |&(i, c)| {
        demand_with(
            &econ.consumers()[c],
            &prices[i],
            DemandOptions::new(NONSATIATION_TOL),
        )
        .map(|_| ())
    });
    let mut report = NonsatiationSamples {
        samples: pairs.len(),
        passed: 0,
        satiated: 0,
        errors: 0,
        satiated_prices: Vec::new(),
    };
    for (&(i, _), outcome) in pairs.iter().zip(outcomes) {
        match outcome {
            Ok(()) => report.passed += 1,
            Err(PreferenceError::Satiated { .. }) => {
                report.satiated += 1;
                if report.satiated_prices.last() != Some(&prices[i]) {
                    report.satiated_prices.push(prices[i].clone());
                }
            }
            Err(_) => report.errors += 1,
        }
    }
    Ok(report)
}
