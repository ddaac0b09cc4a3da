use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use super::triangulate::{barycentric_subdivision, triangulate, Simplex};
use crate::geometry::{min_norm_point, PricePolytope, Vector};
use crate::par;

/// What the search learns at one price.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    /// A point of the selection's image, inside `P`.
    pub selection: Vector,
    /// Larger is closer to acceptance; the fallback ranks prices by it.
    pub score: f64,
    /// Whether the price passes the membership test `p ∈ Φ(p)`.
    pub accepted: bool,
}

/// A single-valued selection on `P` together with the membership test it is checked against.
pub trait SelectionProblem: Sync {
    type Error: Clone + Send;

    fn evaluate(&self, p: &Vector) -> Result<Label, Self::Error>;

    /// Errors for which the price is merely unusable; the search routes
    /// around such prices instead of aborting.
    fn is_recoverable(&self, _error: &Self::Error) -> bool {
        false
    }
}

/// Adapts a closure to [`SelectionProblem`]; every error is fatal.
pub struct FnProblem<F>(pub F);

impl<F, E> SelectionProblem for FnProblem<F>
where
    F: Fn(&Vector) -> Result<Label, E> + Sync,
    E: Clone + Send,
{
    type Error = E;

    fn evaluate(&self, p: &Vector) -> Result<Label, E> {
        (self.0)(p)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError<E> {
    #[error("selection failed: {0}")]
    Evaluation(E),
    #[error("no fixed point at resolution after {refinements} refinements (best score {best_score:.6e})")]
    NoFixedPoint { refinements: usize, best_score: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub max_refine: usize,
    /// Bound on the number of live simplices per refinement round.
    pub max_simplices: usize,
    /// Seeds the rotated directions of the local pattern search.
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            max_refine: 12,
            max_simplices: 4096,
            seed: 0,
        }
    }
}

/// A verified point: its label is accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub price: Vector,
    pub label: Label,
    pub refinements: usize,
    pub evaluations: usize,
}

type Slot<E> = Result<Label, E>;

struct Cache<'a, S: SelectionProblem> {
    problem: &'a S,
    labels: Mutex<HashMap<Vec<i64>, (Vector, Slot<S::Error>)>>,
    order: Mutex<Vec<Vec<i64>>>,
}

const KEY_SCALE: f64 = 1e10;
/// Polishing stops once the step falls below this, relative to the size of `P`.
const MIN_STEP: f64 = 1e-12;
/// Compass iterations per refinement round.
const POLISH_ITERATIONS: usize = 24;

fn key(p: &Vector) -> Vec<i64> {
    p.iter().map(|c| (c * KEY_SCALE).round() as i64).collect()
}

impl<'a, S: SelectionProblem> Cache<'a, S> {
    fn new(problem: &'a S) -> Self {
        Self {
            problem,
            labels: Mutex::new(HashMap::new()),
            order: Mutex::new(Vec::new()),
        }
    }

    fn get(&self, p: &Vector) -> Option<Slot<S::Error>> {
        self.labels
            .lock()
            .unwrap()
            .get(&key(p))
            .map(|e| e.1.clone())
    }

    /// Labels every new point, in parallel. Fatal errors abort.
    fn fill(&self, points: &[Vector]) -> Result<(), SearchError<S::Error>> {
        let mut fresh: Vec<Vector> = Vec::new();
        {
            let known = self.labels.lock().unwrap();
            let mut seen = std::collections::HashSet::new();
            for p in points {
                let k = key(p);
                if !known.contains_key(&k) && seen.insert(k) {
                    fresh.push(p.clone());
                }
            }
        }
        let results = par::map(&fresh, |p| self.problem.evaluate(p));
        let mut labels = self.labels.lock().unwrap();
        let mut order = self.order.lock().unwrap();
        for (p, r) in fresh.iter().zip(results) {
            if let Err(e) = &r {
                if !self.problem.is_recoverable(e) {
                    return Err(SearchError::Evaluation(e.clone()));
                }
            }
            let k = key(p);
            order.push(k.clone());
            labels.insert(k, (p.clone(), r));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        self.order.lock().unwrap().len()
    }
}

/// Best accepted point among `points`: highest score, earliest on ties.
fn best_accepted<S: SelectionProblem>(
    cache: &Cache<'_, S>,
    points: &[Vector],
) -> Option<(Vector, Label)> {
    let mut best: Option<(Vector, Label)> = None;
    for p in points {
        if let Some(Ok(l)) = cache.get(p) {
            if l.accepted && best.as_ref().is_none_or(|b| l.score > b.1.score) {
                best = Some((p.clone(), l));
            }
        }
    }
    best
}

/// Searches `P` for a price whose label is accepted.
///
/// The barycentre of `P` is tried first, then the vertices of a fan
/// triangulation. In every simplex the displacements `selection(v) − v` at the
/// vertices are combined into their minimum-norm convex combination; when that
/// is within the simplex diameter of zero, the same weights applied to the
/// vertices give a candidate fixed point, which is labelled and checked.
/// Candidate simplices are then refined by barycentric subdivision. When no
/// simplex qualifies, the simplices around the best-scoring vertex are refined
/// instead.
///
/// Only a point whose own label is accepted is ever returned.
pub fn kakutani_fixed_point<S: SelectionProblem>(
    problem: &S,
    polytope: &PricePolytope,
    options: SearchOptions,
) -> Result<FixedPoint, SearchError<S::Error>> {
    let cache = Cache::new(problem);
    let done = |p: Vector, label: Label, refinements: usize| {
        Ok(FixedPoint {
            price: p,
            label,
            refinements,
            evaluations: cache.len(),
        })
    };

    let centre = polytope.centroid();
    cache.fill(std::slice::from_ref(&centre))?;
    if let Some((p, l)) = best_accepted(&cache, std::slice::from_ref(&centre)) {
        return done(p, l, 0);
    }

    let mut simplices = triangulate(polytope);
    let step = simplices.iter().map(Simplex::diameter).fold(0.0, f64::max) / 4.0;
    let mut polisher = Polisher::new(polytope, step, options.seed);
    for round in 0..=options.max_refine {
        let points: Vec<Vector> = simplices
            .iter()
            .flat_map(|s| s.vertices.iter().cloned())
            .collect();
        cache.fill(&points)?;
        if let Some((p, l)) = best_accepted(&cache, &points) {
            return done(p, l, round);
        }

        // minimum-norm displacement per simplex; simplices with a blocked vertex are skipped
        let mut candidates: Vec<(f64, usize, Vector)> = Vec::new();
        for (i, s) in simplices.iter().enumerate() {
            let labels: Option<Vec<Label>> = s
                .vertices
                .iter()
                .map(|v| cache.get(v).and_then(|r| r.ok()))
                .collect();
            let Some(labels) = labels else { continue };
            let disp: Vec<Vector> = labels
                .iter()
                .zip(&s.vertices)
                .map(|(l, v)| &l.selection - v)
                .collect();
            let mn = min_norm_point(&disp);
            let gap = mn.point.norm();
            if gap <= s.diameter() {
                candidates.push((gap, i, s.point(&mn.weights)));
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let probes: Vec<Vector> = candidates.iter().map(|c| c.2.clone()).collect();
        cache.fill(&probes)?;
        if let Some((p, l)) = best_accepted(&cache, &probes) {
            return done(p, l, round);
        }
        if let Some((p, l)) = polisher.run(&cache, polytope)? {
            return done(p, l, round);
        }
        if round == options.max_refine {
            break;
        }

        let mut chosen: Vec<usize> = candidates.iter().map(|c| c.1).collect();
        if chosen.is_empty() {
            chosen = around_best_vertex(&cache, &simplices);
        }
        let per = simplices
            .first()
            .map(|s| factorial(s.vertices.len()))
            .unwrap_or(1);
        chosen.truncate((options.max_simplices / per).max(1));
        log::debug!(
            "kakutani round {round}: refining {} of {} simplices",
            chosen.len(),
            simplices.len()
        );
        simplices = chosen
            .iter()
            .flat_map(|&i| barycentric_subdivision(&simplices[i]))
            .collect();
    }

    let labels = cache.labels.lock().unwrap();
    let order = cache.order.lock().unwrap();
    let usable: Vec<&Label> = order
        .iter()
        .filter_map(|k| labels.get(k).and_then(|r| r.1.as_ref().ok()))
        .collect();
    if usable.is_empty() {
        if let Some((_, Err(e))) = order.first().and_then(|k| labels.get(k)) {
            return Err(SearchError::Evaluation(e.clone()));
        }
    }
    let best_score = usable
        .iter()
        .map(|l| l.score)
        .fold(f64::NEG_INFINITY, f64::max);
    Err(SearchError::NoFixedPoint {
        refinements: options.max_refine,
        best_score,
    })
}

/// Highest-scoring usable label so far; the earliest on ties.
fn best_usable<S: SelectionProblem>(cache: &Cache<'_, S>) -> Option<(Vector, Label)> {
    let labels = cache.labels.lock().unwrap();
    let order = cache.order.lock().unwrap();
    let mut best: Option<(&Vector, &Label)> = None;
    for k in order.iter() {
        if let Some((p, Ok(l))) = labels.get(k) {
            if best.is_none_or(|b| l.score > b.1.score) {
                best = Some((p, l));
            }
        }
    }
    best.map(|(p, l)| (p.clone(), l.clone()))
}

/// Pattern search on the score from the best point seen so far.
///
/// Each batch tries `±step` along an orthonormal basis of the affine hull of
/// `P`, along a randomly rotated copy of it, and along the last successful
/// move. Trial points are projected back onto `P` and labelled in parallel.
/// The step halves after a batch without improvement and persists across rounds.
struct Polisher {
    basis: Vec<Vector>,
    step: f64,
    floor: f64,
    rng: ChaCha8Rng,
    last_move: Option<Vector>,
}

impl Polisher {
    fn new(polytope: &PricePolytope, step: f64, seed: u64) -> Self {
        Self {
            basis: affine_basis(polytope.vertices()),
            step,
            floor: MIN_STEP * (1.0 + polytope.max_vertex_norm()),
            rng: ChaCha8Rng::seed_from_u64(seed),
            last_move: None,
        }
    }

    fn rotated_basis(&mut self) -> Vec<Vector> {
        let d = self.basis.len();
        let g = DMatrix::from_fn(d, d, |_, _| self.rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        (0..d)
            .map(|j| {
                self.basis
                    .iter()
                    .enumerate()
                    .fold(Vector::zeros(self.basis[0].len()), |acc, (i, b)| {
                        acc + b * q[(i, j)]
                    })
            })
            .collect()
    }

    fn run<S: SelectionProblem>(
        &mut self,
        cache: &Cache<'_, S>,
        polytope: &PricePolytope,
    ) -> Result<Option<(Vector, Label)>, SearchError<S::Error>> {
        let Some((mut x, mut lx)) = best_usable(cache) else {
            return Ok(None);
        };
        for _ in 0..POLISH_ITERATIONS {
            if self.step < self.floor || self.basis.is_empty() {
                break;
            }
            let mut dirs = self.basis.clone();
            dirs.extend(self.rotated_basis());
            let mut trials: Vec<Vector> = dirs
                .iter()
                .flat_map(|b| [1.0, -1.0].map(|s| polytope.project(&(&x + b * (s * self.step)))))
                .collect();
            if let Some(m) = &self.last_move {
                trials.push(polytope.project(&(&x + m)));
            }
            cache.fill(&trials)?;
            if let Some(hit) = best_accepted(cache, &trials) {
                return Ok(Some(hit));
            }
            let start = x.clone();
            for t in &trials {
                if let Some(Ok(l)) = cache.get(t) {
                    if l.score > lx.score {
                        x = t.clone();
                        lx = l;
                    }
                }
            }
            if x == start {
                self.step *= 0.5;
                self.last_move = None;
            } else {
                self.last_move = Some(&x - &start);
            }
        }
        Ok(None)
    }
}

/// Orthonormal basis of the directions spanned by `points`.
fn affine_basis(points: &[Vector]) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    let Some(base) = points.first() else {
        return basis;
    };
    let scale = points.iter().map(|p| (p - base).norm()).fold(0.0, f64::max);
    for p in &points[1..] {
        let mut d = p - base;
        for _ in 0..2 {
            for b in &basis {
                d -= b * b.dot(&d);
            }
        }
        if d.norm() > 1e-9 * scale {
            basis.push(d.normalize());
        }
    }
    basis
}

/// Simplices touching the best-scoring usable vertex.
fn around_best_vertex<S: SelectionProblem>(
    cache: &Cache<'_, S>,
    simplices: &[Simplex],
) -> Vec<usize> {
    let mut best: Option<(f64, Vector)> = None;
    for s in simplices {
        for v in &s.vertices {
            if let Some(Ok(l)) = cache.get(v) {
                if best.as_ref().is_none_or(|b| l.score > b.0) {
                    best = Some((l.score, v.clone()));
                }
            }
        }
    }
    let Some((_, target)) = best else {
        return (0..simplices.len()).collect();
    };
    let k = key(&target);
    (0..simplices.len())
        .filter(|&i| simplices[i].vertices.iter().any(|v| key(v) == k))
        .collect()
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}
