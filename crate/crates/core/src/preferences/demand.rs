use std::cmp::Ordering;

use super::{Preference, PreferenceError};
use crate::geometry::{
    boundary_crossing, check_dim, lex_cmp, ConvexBody, ConvexRegion, Halfspace, Intersection,
    Vector, BOUNDARY_BAND,
};
use crate::par;

/// Refinement stages before giving up.
pub const MAX_STAGES: usize = 40;

/// Budget slack (relative to `max(1, ‖p‖)`) above which the consumer counts as satiated.
pub const SATIATION_MARGIN: f64 = 1e-6;

/// Knobs of the net refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandOptions {
    /// Stop once both the net pitch and the winner's last move are below this.
    pub tol: f64,
    /// Shift of every net, as a fraction of its pitch in `[0, 1)`.
    pub offset: f64,
}

impl DemandOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, offset: 0.0 }
    }
}

/// The budget set `{x ∈ X : p·x <= 0}` at one price, with its witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetContext {
    pub price: Vector,
    /// Candidates of the last refinement stage, all inside the budget set.
    pub budget_net: Vec<Vector>,
    /// Minimiser of `p·x` over `X`; shows the budget set is inhabited.
    pub inhabited_witness: Vector,
    /// A point of the budget set's interior, the centre of the crossing map.
    pub budget_interior: Vector,
    pub budget_radius: f64,
    /// A bundle of `X` strictly preferred to everything affordable, when one exists.
    pub satiation_witness: Option<Vector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub point: Vector,
    pub stages: usize,
    pub context: BudgetContext,
}

type Budget<'a> = Intersection<&'a ConvexBody, Halfspace>;

fn budget_region<'a>(x: &'a ConvexBody, p: &Vector) -> Result<Budget<'a>, PreferenceError> {
    if p.norm() == 0.0 {
        return Err(PreferenceError::ZeroPrice);
    }
    Ok(Intersection(x, Halfspace::new(p.clone(), 0.0)?))
}

/// Deepest point of the budget set on the segment from the cheapest bundle
/// to the body's centre. The depth is concave along the segment, so a
/// ternary search finds it.
fn budget_interior(x: &ConvexBody, budget: &Budget<'_>, cheapest: &Vector) -> (Vector, f64) {
    let centre = x.interior_point();
    let at = |s: f64| cheapest + (centre - cheapest) * s;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if budget.depth(&at(m1)) < budget.depth(&at(m2)) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let best = at(0.5 * (a + b));
    let r = budget.depth(&best);
    (best, r)
}

// u(y) − u(c) written so that the cancellation happens in y − c
fn gain(pref: &Preference, c: &Vector, y: &Vector) -> f64 {
    let d = y - c;
    let s = y + c - pref.bliss_point() * 2.0;
    -d.dot(&(pref.q() * s))
}

fn better(a: &(Vector, f64), b: &(Vector, f64)) -> bool {
    match a.1.total_cmp(&b.1) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => lex_cmp(&a.0, &b.0) == Ordering::Less,
    }
}

fn argmax(cands: &[(Vector, f64)]) -> (Vector, f64) {
    let mut best = &cands[0];
    for c in &cands[1..] {
        if better(c, best) {
            best = c;
        }
    }
    best.clone()
}

/// Farthest point of `X` on the segment from `from` (in `X`) toward `to`.
fn farthest_toward(x: &ConvexBody, from: &Vector, to: &Vector) -> Vector {
    if x.contains(to) {
        return to.clone();
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if x.contains(&(from + (to - from) * mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    from + (to - from) * lo
}

/// `F(p)` with default options.
pub fn demand(pref: &Preference, p: &Vector, tol: f64) -> Result<Vector, PreferenceError> {
    Ok(demand_with(pref, p, DemandOptions::new(tol))?.point)
}

/// The utility maximiser over the budget set, by successive net refinement.
///
/// Stage 0 scans a grid of pitch `R/4` over the bounding box of `X`. Stage `k`
/// halves the pitch and scans a window around the previous winner. Every grid
/// point is projected onto `X` and, if unaffordable, pulled onto the budget
/// hyperplane along the segment toward an interior budget point. Strong
/// concavity makes the winners converge to the unique maximiser.
pub fn demand_with(
    pref: &Preference,
    p: &Vector,
    opts: DemandOptions,
) -> Result<Demand, PreferenceError> {
    let x = pref.consumption_set();
    let n = pref.dim();
    check_dim(n, p)?;
    if !(opts.tol > 0.0) {
        return Err(crate::geometry::GeometryError::InvalidArgument(
            "demand tolerance must be positive".into(),
        )
        .into());
    }
    let budget = budget_region(x, p)?;
    let pn = p.norm();
    let cheapest = x.argmin_linear(p);
    if p.dot(&cheapest) / pn > opts.tol {
        return Err(PreferenceError::BudgetEmpty);
    }
    let (xi, radius) = budget_interior(x, &budget, &cheapest);
    if !(radius > BOUNDARY_BAND) {
        return Err(PreferenceError::BudgetEmpty);
    }
    let margin = SATIATION_MARGIN * pn.max(1.0);
    let b = pref.bliss_point();
    if x.contains(b) && p.dot(b) < -margin {
        return Err(PreferenceError::Satiated { slack: p.dot(b) });
    }

    // y and xi are both in X, so the segment only leaves the budget through p·x = 0
    let pxi = p.dot(&xi);
    let into_budget = |g: &Vector| -> Result<Vector, PreferenceError> {
        let y = x.project(g);
        if budget.contains(&y) {
            return Ok(y);
        }
        let s = pxi / (pxi - p.dot(&y));
        let z = &xi + (&y - &xi) * (s * (1.0 - 4.0 * f64::EPSILON));
        if budget.contains(&z) {
            Ok(z)
        } else {
            Ok(boundary_crossing(&budget, &xi, &y)?.point)
        }
    };
    let score = |pts: &[Vector], centre: &Vector| -> Result<Vec<(Vector, f64)>, PreferenceError> {
        par::map(pts, |g| {
            let y = into_budget(g)?;
            let s = gain(pref, centre, &y);
            Ok((y, s))
        })
        .into_iter()
        .collect()
    };

    let (lo, hi) = x.bounding_box();
    let eps0 = (x.outer_radius() / 4.0).max(1e-12);
    let offset = opts.offset.rem_euclid(1.0);
    let counts: Vec<usize> = (0..n)
        .map(|i| ((hi[i] - lo[i]) / eps0).ceil() as usize + 1)
        .collect();
    let mut grid = vec![xi.clone(), cheapest.clone()];
    grid.extend(lattice(&counts, |i, k| {
        (lo[i] + eps0 * (k as f64 + offset)).min(hi[i])
    }));
    let mut cands = score(&grid, &xi)?;
    let (mut winner, _) = argmax(&cands);

    let kappa = pref.condition_number();
    let w = ((kappa * n as f64).sqrt() / 2.0).ceil() as usize + 2;
    let side = 4 * w + 1;
    let mut pitch = eps0;
    for stage in 1..=MAX_STAGES {
        pitch *= 0.5;
        let centre = winner.clone();
        let pts = lattice(&vec![side; n], |i, k| {
            centre[i] + pitch * (k as f64 - (2 * w) as f64 + offset)
        });
        let mut next = score(&pts, &centre)?;
        next.push((centre.clone(), 0.0));
        let (best, _) = argmax(&next);
        let step = (&best - &winner).norm();
        winner = best;
        cands = next;
        if step <= opts.tol && pitch <= opts.tol {
            let slack = p.dot(&winner);
            if slack < -margin {
                return Err(PreferenceError::Satiated { slack });
            }
            let witness = farthest_toward(x, &winner, b);
            let satiation_witness = (pref.utility(&witness)
                > pref.utility(&winner) + SATIATION_MARGIN)
                .then_some(witness);
            log::trace!("demand settled after {stage} stages at pitch {pitch:e}");
            return Ok(Demand {
                point: winner,
                stages: stage,
                context: BudgetContext {
                    price: p.clone(),
                    budget_net: cands.into_iter().map(|c| c.0).collect(),
                    inhabited_witness: cheapest,
                    budget_interior: xi,
                    budget_radius: radius,
                    satiation_witness,
                },
            });
        }
    }
    Err(PreferenceError::NotConverged(MAX_STAGES))
}

/// All points of a rectangular lattice with `counts[i]` nodes on axis `i`,
/// coordinate `coord(i, k)` for node `k`.
fn lattice(counts: &[usize], coord: impl Fn(usize, usize) -> f64) -> Vec<Vector> {
    let total: usize = counts.iter().product();
    let n = counts.len();
    (0..total)
        .map(|mut idx| {
            Vector::from_fn(n, |i, _| {
                let k = idx % counts[i];
                idx /= counts[i];
                coord(i, k)
            })
        })
        .collect()
}

/// Sum of the consumers' demands.
pub fn aggregate_demand(
    prefs: &[Preference],
    p: &Vector,
    tol: f64,
) -> Result<Vector, PreferenceError> {
    let mut total = Vector::zeros(p.len());
    for (index, pref) in prefs.iter().enumerate() {
        let f = demand(pref, p, tol).map_err(|e| PreferenceError::Consumer {
            index,
            source: Box::new(e),
        })?;
        total += f;
    }
    Ok(total)
}

/// Brute-force argmax of utility over a grid of pitch `pitch` on the budget set.
///
/// In two dimensions the budget line `p·x = 0` is also sampled at a quarter of
/// the pitch, including the ends of its chord through `X`.
pub fn demand_grid_oracle(
    pref: &Preference,
    p: &Vector,
    pitch: f64,
) -> Result<Vector, PreferenceError> {
    let x = pref.consumption_set();
    let n = pref.dim();
    check_dim(n, p)?;
    let budget = budget_region(x, p)?;
    let (lo, hi) = x.bounding_box();
    let counts: Vec<usize> = (0..n)
        .map(|i| ((hi[i] - lo[i]) / pitch).ceil() as usize + 1)
        .collect();
    let mut pts: Vec<Vector> = lattice(&counts, |i, k| (lo[i] + pitch * k as f64).min(hi[i]))
        .into_iter()
        .filter(|g| budget.contains(g))
        .collect();
    if n == 2 {
        let dir = Vector::from_vec(vec![-p[1], p[0]]) / p.norm();
        let reach = x.outer_radius();
        let steps = (2.0 * reach / (pitch / 4.0)).ceil() as usize;
        let line: Vec<(f64, bool)> = (0..=steps)
            .map(|k| {
                let s = -reach + 2.0 * reach * k as f64 / steps as f64;
                (s, x.contains(&(&dir * s)))
            })
            .collect();
        for w in line.windows(2) {
            if w[0].1 != w[1].1 {
                // chord end between two samples
                let (mut a, mut b) = if w[0].1 {
                    (w[0].0, w[1].0)
                } else {
                    (w[1].0, w[0].0)
                };
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if x.contains(&(&dir * m)) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                pts.push(&dir * a);
            }
        }
        pts.extend(
            line.iter()
                .filter(|(_, inside)| *inside)
                .map(|(s, _)| &dir * *s),
        );
    }
    if pts.is_empty() {
        return Err(PreferenceError::BudgetEmpty);
    }
    let scored: Vec<(Vector, f64)> = par::map(&pts, |y| (y.clone(), pref.utility(y)));
    Ok(argmax(&scored).0)
}

/// Result of [`verify_demand`].
#[derive(Debug, Clone, PartialEq)]
pub struct DemandCheck {
    pub depth: f64,
    pub budget_residual: f64,
    pub recompute_distance: f64,
    pub in_set: bool,
    pub budget_ok: bool,
    pub optimal: bool,
}

impl DemandCheck {
    pub fn passed(&self) -> bool {
        self.in_set && self.budget_ok && self.optimal
    }
}

/// Checks that `x` is the demand at `p`: it lies in `X`, exhausts the budget
/// and matches an independent recomputation at a tenth of the tolerance.
pub fn verify_demand(
    pref: &Preference,
    p: &Vector,
    x: &Vector,
    tol: f64,
) -> Result<DemandCheck, PreferenceError> {
    check_dim(pref.dim(), x)?;
    let body = pref.consumption_set();
    let depth = body.depth(x);
    let residual = p.dot(x);
    let fine = demand(pref, p, tol / 10.0)?;
    let dist = (&fine - x).norm();
    let bound = 10.0 * tol * pref.condition_number().sqrt().max(1.0);
    Ok(DemandCheck {
        depth,
        budget_residual: residual,
        recompute_distance: dist,
        in_set: depth >= -tol,
        budget_ok: residual >= -tol * p.norm().max(1.0) && residual <= tol * p.norm().max(1.0),
        optimal: dist <= bound,
    })
}
