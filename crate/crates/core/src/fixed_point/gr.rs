use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FixedPointError;
use crate::geometry::{check_dim, lex_cmp, PricePolytope, Vector};

/// Tolerance for membership of net points and prices in `P`.
const PRICE_TOL: f64 = 1e-7;

/// `g_r(z) = {p ∈ P : p·z > −r}`, evaluated over a finite net of `P`.
#[derive(Debug, Clone)]
pub struct GrMap {
    polytope: PricePolytope,
    net: Vec<Vector>,
    r: f64,
}

impl GrMap {
    /// Uses an `net_eps`-net of `P`, which always includes the vertices.
    pub fn new(
        polytope: PricePolytope,
        net_eps: f64,
        r: f64,
        cap: usize,
    ) -> Result<Self, FixedPointError> {
        let net = polytope.epsilon_net(net_eps, cap)?;
        Self::with_net(polytope, net, r)
    }

    pub fn with_net(
        polytope: PricePolytope,
        net: Vec<Vector>,
        r: f64,
    ) -> Result<Self, FixedPointError> {
        if !(r > 0.0) {
            return Err(FixedPointError::InvalidArgument(
                "r must be positive".into(),
            ));
        }
        if net.is_empty() {
            return Err(FixedPointError::InvalidArgument("empty price net".into()));
        }
        for p in &net {
            check_dim(polytope.dim(), p)?;
            if !polytope.contains(p, PRICE_TOL) {
                return Err(FixedPointError::NotAPrice {
                    violation: violation(&polytope, p),
                });
            }
        }
        Ok(Self { polytope, net, r })
    }

    /// Same net at a different level.
    pub fn with_r(&self, r: f64) -> Result<Self, FixedPointError> {
        Self::with_net(self.polytope.clone(), self.net.clone(), r)
    }

    pub fn polytope(&self) -> &PricePolytope {
        &self.polytope
    }

    pub fn net(&self) -> &[Vector] {
        &self.net
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

fn violation(polytope: &PricePolytope, p: &Vector) -> f64 {
    let polar = polytope.cone().polar().max_violation(p).max(0.0);
    polar.max((p.dot(polytope.normalizer()) + 1.0).abs())
}

/// The net price maximising `p·z`; among values within `1e-12` of the best,
/// the lexicographically smallest.
pub fn g_r_select(map: &GrMap, z: &Vector) -> Result<Vector, FixedPointError> {
    check_dim(map.polytope.dim(), z)?;
    let values: Vec<f64> = map.net.iter().map(|p| p.dot(z)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(best > -map.r) {
        return Err(FixedPointError::GrEmpty {
            best,
            neg_r: -map.r,
        });
    }
    let pick = map
        .net
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v >= best - 1e-12)
        .map(|(p, _)| p)
        .min_by(|a, b| lex_cmp(a, b))
        .expect("the maximiser passes its own filter");
    Ok(pick.clone())
}

/// Whether `p·z > −r`, for `p` in `P`.
pub fn g_r_membership(map: &GrMap, z: &Vector, p: &Vector) -> Result<bool, FixedPointError> {
    check_dim(map.polytope.dim(), z)?;
    check_dim(map.polytope.dim(), p)?;
    if !map.polytope.contains(p, PRICE_TOL) {
        return Err(FixedPointError::NotAPrice {
            violation: violation(&map.polytope, p),
        });
    }
    Ok(p.dot(z) > -map.r)
}

/// Summary of [`weak_approximability_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeakApproxReport {
    pub samples: usize,
    pub counterexamples: usize,
    /// Pairs skipped because `g_{r/2}(z′)` had no net point.
    pub skipped: usize,
    /// `δ = (r/2)/max‖p‖`, under which `|p·z − p·z′| < r/2` on `P`.
    pub delta: f64,
    /// Multiple of `δ` used for `‖z − z′‖`; 1 for the certified regime.
    pub delta_scale: f64,
    /// Smallest `min_t p_t·z_t + r` seen.
    pub worst_margin: f64,
}

/// Samples the convex-combination inequality `p_t·z_t > −r` for `z` on the
/// boundary of the production cone, `‖z − z′‖ < δ`, `p ∈ g_{r/2}(z)` and
/// `p′ ∈ g_{r/2}(z′)`.
pub fn weak_approximability_check(map: &GrMap, samples: usize, seed: u64) -> WeakApproxReport {
    weak_approximability_check_scaled(map, samples, seed, 1.0)
}

/// [`weak_approximability_check`] with `‖z − z′‖` drawn below `delta_scale·δ`.
/// Scales above 1 leave the certified regime and may produce counterexamples.
pub fn weak_approximability_check_scaled(
    map: &GrMap,
    samples: usize,
    seed: u64,
    delta_scale: f64,
) -> WeakApproxReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = map.polytope.dim();
    let r = map.r;
    let delta = (r / 2.0) / map.polytope.max_vertex_norm();
    let cone = map.polytope.cone();
    let radius = 2.0 * map.polytope.normalizer().norm().max(1.0);
    let half =
        |z: &Vector| -> Vec<&Vector> { map.net.iter().filter(|p| p.dot(z) > -r / 2.0).collect() };

    let mut report = WeakApproxReport {
        samples: 0,
        counterexamples: 0,
        skipped: 0,
        delta,
        delta_scale,
        worst_margin: f64::INFINITY,
    };
    while report.samples < samples {
        let w = random_direction(&mut rng, n);
        let Ok(y) = cone.project(&w) else { continue };
        // w inside the cone, or projected onto the apex: no boundary direction
        if (&y - &w).norm() < 1e-9 || y.norm() < 1e-12 {
            continue;
        }
        let z = &y / y.norm() * rng.random_range(0.0..radius);
        let z2 =
            &z + random_direction(&mut rng, n) * (delta_scale * delta * rng.random_range(0.0..1.0));
        let (a, b) = (half(&z), half(&z2));
        if a.is_empty() || b.is_empty() {
            report.skipped += 1;
            if report.skipped > 100 * samples.max(1) {
                break;
            }
            continue;
        }
        let p = a[rng.random_range(0..a.len())];
        let p2 = b[rng.random_range(0..b.len())];
        let m = min_bilinear(p, p2, &z, &z2);
        report.samples += 1;
        report.worst_margin = report.worst_margin.min(m + r);
        if m < -r - 1e-9 {
            report.counterexamples += 1;
        }
    }
    report
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let v = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 1e-3 && norm <= 1.0 {
            return v / norm;
        }
    }
}

/// `min over t ∈ [0, 1]` of `(tp + (1−t)p′)·(tz + (1−t)z′)`, a quadratic in `t`.
fn min_bilinear(p: &Vector, p2: &Vector, z: &Vector, z2: &Vector) -> f64 {
    let dp = p - p2;
    let dz = z - z2;
    let a = dp.dot(&dz);
    let b = dp.dot(z2) + p2.dot(&dz);
    let c = p2.dot(z2);
    let q = |t: f64| a * t * t + b * t + c;
    let mut m = q(0.0).min(q(1.0));
    if a > 0.0 {
        let t = -b / (2.0 * a);
        if (0.0..=1.0).contains(&t) {
            m = m.min(q(t));
        }
    }
    m
}
