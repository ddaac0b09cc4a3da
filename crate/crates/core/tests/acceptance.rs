//! Acceptance run: one line per criterion, nonzero exit if any is red.
//!
//! `cargo test -p equinox-core --test acceptance`

use std::process::ExitCode;
use std::time::{Duration, Instant};

use equinox_core::equilibrium::{refine_sequence, solve, Economy};
use equinox_core::fixed_point::{approximate_zero, weak_approximability_check, GrMap};
use equinox_core::geometry::{
    boundary_crossing, crossing_modulus, price_polytope, ConvexBody, FiniteCone,
};
use equinox_core::preferences::{demand, demand_grid_oracle, Preference};
use equinox_core::Vector;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

fn e1() -> Economy {
    let x = ConvexBody::new_box(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
    let pref = Preference::new(x, v(&[-0.2, 1.5]), None).unwrap();
    Economy::new(vec![pref], e1_cone(), Some(vec![v(&[-0.5, 0.3])])).unwrap()
}

fn e1_cone() -> FiniteCone {
    FiniteCone::new(vec![v(&[-1.0, 1.0]), v(&[0.0, -1.0]), v(&[-1.0, 0.0])]).unwrap()
}

fn unit(rng: &mut impl Rng, n: usize) -> Vector {
    loop {
        let w = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let norm = w.norm();
        if norm > 1e-3 && norm <= 1.0 {
            return w / norm;
        }
    }
}

/// Pointed, full-dimensional cone: every generator makes an obtuse angle with `d`.
fn random_cone(rng: &mut impl Rng, n: usize) -> FiniteCone {
    let d = unit(rng, n);
    let count = n + rng.random_range(0..4);
    loop {
        let gens: Vec<Vector> = (0..count)
            .map(|_| {
                let u = unit(rng, n);
                let tangent = &u - &d * d.dot(&u);
                -&d + tangent * rng.random_range(0.1..1.5)
            })
            .collect();
        let m = DMatrix::from_columns(&gens);
        if m.rank(1e-6) == n {
            return FiniteCone::new(gens).unwrap();
        }
    }
}

fn interior_of(cone: &FiniteCone) -> Vector {
    let gens = cone.generators();
    gens.iter()
        .fold(Vector::zeros(cone.dim()), |acc, g| acc + g)
        / gens.len() as f64
}

fn unit_polar_rays(cone: &FiniteCone) -> Vec<Vector> {
    cone.polar()
        .extreme_rays()
        .rays
        .into_iter()
        .map(|r| {
            let n = r.norm();
            r / n
        })
        .collect()
}

fn e1_end_to_end() -> Outcome {
    let econ = e1();
    let cert = solve(&econ, 0.01, 0, 12).map_err(|e| e.to_string())?;
    let p_err = (&cert.price - v(&[5.0, 5.0])).norm();
    let eta_err = (&cert.eta - v(&[-0.85, 0.85])).norm();
    let pe = cert.price.dot(&cert.eta);
    let dist = e1_cone().distance(&cert.eta).map_err(|e| e.to_string())?;
    // grid oracle at the analytic price, pitch 2/1000 over X = [-1, 1]^2
    let pitch = 2.0 / 1000.0;
    let oracle = demand_grid_oracle(&econ.consumers()[0], &v(&[5.0, 5.0]), pitch)
        .map_err(|e| e.to_string())?;
    let oracle_err = (&oracle - v(&[-0.85, 0.85])).norm();
    let detail = format!(
        "|p-(5,5)| = {p_err:.2e}, |eta-(-0.85,0.85)| = {eta_err:.2e}, p.eta = {pe:.2e}, \
         dist = {dist:.2e} <= delta = {:.2e}, oracle gap {oracle_err:.2e}",
        cert.delta
    );
    let ok = p_err <= 1e-2
        && eta_err <= 1e-2
        && pe > -0.01
        && dist <= cert.delta
        && oracle_err <= 2.0 * pitch;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

fn demand_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_budget, mut worst_oracle) = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for case in 0..100 {
        let n = if case % 2 == 0 { 2 } else { 3 };
        let set = if rng.random_bool(0.5) {
            let lo = Vector::from_fn(n, |_, _| rng.random_range(-2.0..-0.5));
            let hi = Vector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
            ConvexBody::new_box(lo, hi).unwrap()
        } else {
            let c = Vector::from_fn(n, |_, _| rng.random_range(-0.3..0.3));
            ConvexBody::new_ball(c, rng.random_range(0.8..1.5)).unwrap()
        };
        let p = unit(&mut rng, n) * rng.random_range(0.5..10.0);
        // nonsatiated: bliss inside X but strictly unaffordable
        let bliss = loop {
            let (lo, hi) = set.bounding_box();
            let b = Vector::from_fn(n, |i, _| rng.random_range(lo[i]..hi[i]));
            if set.distance(&b) == 0.0 && p.dot(&b) > 0.05 * p.norm() {
                break b;
            }
        };
        let pref = Preference::new(set, bliss, Some(random_spd(&mut rng, n))).unwrap();
        let f = match demand(&pref, &p, 1e-7) {
            Ok(f) => f,
            Err(e) => {
                failures.push(format!("case {case}: {e}"));
                continue;
            }
        };
        let budget = p.dot(&f).abs() / (1.0 + p.norm());
        worst_budget = worst_budget.max(budget);
        if budget > 1e-6 {
            failures.push(format!("case {case}: |p.F| = {budget:.2e}"));
        }
        if n == 2 {
            let (lo, hi) = pref.consumption_set().bounding_box();
            let pitch = (&hi - &lo).max() / 1000.0;
            let oracle = demand_grid_oracle(&pref, &p, pitch).map_err(|e| e.to_string())?;
            let gap = (&oracle - &f).norm() / pitch;
            worst_oracle = worst_oracle.max(gap);
            if gap > 2.0 {
                failures.push(format!("case {case}: oracle gap {gap:.2} pitches"));
            }
        }
    }
    let detail = format!(
        "worst |p.F|/(1+|p|) = {worst_budget:.2e}, worst oracle gap = {worst_oracle:.2} pitches"
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn crossing_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let phi = crossing_modulus(2.0, 1.0, 0.1).map_err(|e| e.to_string())?;
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for &(big_r, r) in &[(2.0, 1.0), (3.0, 0.5)] {
        let centre = v(&[0.0, 0.0]);
        // regions squeezed between ball(0, r) and ball(0, R)
        let regions = [
            ConvexBody::new_ball(centre.clone(), r).unwrap(),
            ConvexBody::new_box(v(&[-r, -r]), v(&[r, r])).unwrap(),
            ConvexBody::new_vpolytope(
                (0..5)
                    .map(|k| {
                        let a = 2.0 * std::f64::consts::PI * k as f64 / 5.0 + 0.3;
                        v(&[a.cos(), a.sin()]) * (r / (std::f64::consts::PI / 5.0).cos())
                    })
                    .collect(),
            )
            .unwrap(),
        ];
        for &delta in &[0.05, 0.1, 0.2] {
            let bound = crossing_modulus(big_r, r, delta).map_err(|e| e.to_string())?;
            for k in 0..1000 {
                let region = &regions[k % regions.len()];
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let a = v(&[angle.cos(), angle.sin()]) * big_r;
                // chord below delta on the outer sphere
                let max_turn = 2.0 * (delta / (2.0 * big_r)).asin();
                let turn = rng.random_range(-1.0..1.0) * max_turn * 0.999_999;
                let b = v(&[(angle + turn).cos(), (angle + turn).sin()]) * big_r;
                if (&a - &b).norm() >= delta {
                    continue;
                }
                let ha = boundary_crossing(region, &centre, &a).map_err(|e| e.to_string())?;
                let hb = boundary_crossing(region, &centre, &b).map_err(|e| e.to_string())?;
                let gap = (&ha.point - &hb.point).norm() - bound;
                worst = worst.max(gap);
                if gap > 1e-9 {
                    violations += 1;
                }
            }
        }
    }
    let detail = format!(
        "phi(2,1,0.1) = {phi:.4}, worst |h(a)-h(b)| - phi = {worst:.2e}, {violations} violations"
    );
    if violations == 0 && (phi - 0.184).abs() <= 1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn polar_polar_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut disagreements = 0;
    let mut checked = 0;
    for case in 0..50 {
        let n = 2 + case % 3;
        let cone = random_cone(&mut rng, n);
        let rays = cone.polar().extreme_rays();
        let mut gens = rays.rays.clone();
        for l in &rays.lineality {
            gens.push(l.clone());
            gens.push(-l);
        }
        let double = FiniteCone::new(gens).map_err(|e| e.to_string())?.polar();
        for k in 0..200 {
            let x = if k % 2 == 0 {
                Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0))
            } else {
                // near the cone: nonnegative combination plus a small kick
                let c = cone.generators().iter().fold(Vector::zeros(n), |acc, g| {
                    acc + g * rng.random_range(0.0..1.0)
                });
                c + unit(&mut rng, n) * rng.random_range(0.0..0.3)
            };
            let in_cone = cone.distance(&x).map_err(|e| e.to_string())? <= 1e-7;
            let in_double = double.contains(&x, 1e-7);
            checked += 1;
            if in_cone != in_double {
                // within rounding of the boundary both answers are defensible
                let margin = cone
                    .distance(&x)
                    .unwrap()
                    .max(double.max_violation(&x).abs());
                if margin > 1e-6 {
                    disagreements += 1;
                }
            }
        }
    }
    let detail = format!("{checked} points on 50 cones, {disagreements} disagreements");
    if disagreements == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn interior_bound_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::NEG_INFINITY;
    for case in 0..20 {
        let n = 2 + case % 3;
        let cone = random_cone(&mut rng, n);
        let y = interior_of(&cone);
        // certify ball(y, rho/sqrt(N)) inside Y: the cross-polytope
        // y ± rho e_i contains it, and its vertices are checked for membership
        let inside = |rho: f64| {
            (0..n).all(|i| {
                [-1.0, 1.0].iter().all(|s| {
                    let mut x = y.clone();
                    x[i] += s * rho;
                    cone.distance(&x).unwrap() <= 1e-12
                })
            })
        };
        let (mut lo, mut hi) = (0.0, y.norm());
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = lo / (n as f64).sqrt();
        let sup = unit_polar_rays(&cone)
            .iter()
            .map(|d| d.dot(&y))
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(sup + r / (2.0 * (n as f64).sqrt()));
    }
    let detail = format!("worst sup p.y + r/(2 sqrt N) = {worst:.3e}");
    if worst <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn vertex_norm_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cases: Vec<(FiniteCone, Vector)> = vec![(e1_cone(), v(&[-0.5, 0.3]))];
    for k in 0..20 {
        let cone = random_cone(&mut rng, 2 + k % 4);
        let xi = interior_of(&cone);
        cases.push((cone, xi));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut vertices = 0;
    for (cone, xi) in &cases {
        let polytope = price_polytope(cone, xi).map_err(|e| e.to_string())?;
        let m = unit_polar_rays(cone)
            .iter()
            .map(|d| d.dot(xi))
            .fold(f64::NEG_INFINITY, f64::max);
        for vert in polytope.vertices() {
            vertices += 1;
            worst = worst.max(vert.norm() + 1.0 / m);
        }
    }
    let detail = format!(
        "{vertices} vertices on {} polytopes, worst |v| + 1/M = {worst:.3e}",
        cases.len()
    );
    if worst <= 1e-7 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn weak_approximability() -> Outcome {
    let polytope = price_polytope(&e1_cone(), &v(&[-0.5, 0.3])).map_err(|e| e.to_string())?;
    let map = GrMap::new(polytope, 0.01, 0.1, 200_000).map_err(|e| e.to_string())?;
    let report = weak_approximability_check(&map, 1000, 7);
    let detail = format!(
        "{} samples, {} counterexamples, worst margin {:.3e}",
        report.samples, report.counterexamples, report.worst_margin
    );
    if report.samples == 1000 && report.counterexamples == 0 && report.worst_margin > -1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ivt_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let eps = 1e-4;
    let mut worst_value = 0.0f64;
    let mut worst_spacing = 0.0f64;
    for case in 0..20 {
        // increasing on [0, 1] with f(0) < 0 < f(1)
        let degree = rng.random_range(1..=5);
        let mut c: Vec<f64> = (0..=degree).map(|_| rng.random_range(0.0..2.0)).collect();
        c[1] += 0.5;
        let top: f64 = c[1..].iter().sum();
        c[0] = -top * rng.random_range(0.05..0.95);
        let f = |x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
        let report = approximate_zero(f, eps, None).map_err(|e| format!("case {case}: {e}"))?;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        worst_value = worst_value.max(f(report.x).abs());
        let spacing = (report.x - root).abs() * report.modulus as f64;
        worst_spacing = worst_spacing.max(spacing);
        if f(report.x).abs() > eps || spacing > 1.0 {
            return Err(format!(
                "case {case}: x = {}, root = {root}, |f(x)| = {:.2e}, grid {}",
                report.x,
                f(report.x).abs(),
                report.modulus
            ));
        }
    }
    Ok(format!(
        "worst |f(x)| = {worst_value:.2e} <= 1e-4, worst |x - root| = {worst_spacing:.2} grid steps"
    ))
}

fn sweep_stability() -> Outcome {
    let seq = refine_sequence(&e1(), 0.1, 4, 0).map_err(|e| e.to_string())?;
    if let Some((n, e)) = seq.failure {
        return Err(format!("stage {n} failed: {e}"));
    }
    let steps = &seq.price_steps;
    let shown: Vec<String> = steps.iter().map(|s| format!("{s:.2e}")).collect();
    let monotone = steps.windows(2).all(|w| w[1] <= w[0] + 1e-3);
    let dist = |k: usize| seq.certificates[k].metrics.dist_eta_to_y;
    let last = seq.certificates.len() - 1;
    let steps_text = shown.join(", ");
    let detail = format!(
        "steps [{steps_text}], dist(eta, Y) {:.2e} at n = 0, {:.2e} at n = {last}",
        dist(0),
        dist(last)
    );
    if seq.certificates.len() == 5 && monotone && dist(last) <= dist(0) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("1 E1 end-to-end", e1_end_to_end, Duration::from_secs(10)),
        (
            "2 demand budget and oracle",
            demand_suite,
            Duration::from_secs(60),
        ),
        (
            "3 crossing modulus",
            crossing_suite,
            Duration::from_secs(30),
        ),
        ("4 polar of polar", polar_polar_suite, Duration::MAX),
        ("5 interior ball bound", interior_bound_suite, Duration::MAX),
        ("6 vertex norm bound", vertex_norm_suite, Duration::MAX),
        (
            "7 weak approximability",
            weak_approximability,
            Duration::MAX,
        ),
        ("8 approximate zeros", ivt_suite, Duration::MAX),
        ("9 sweep stability", sweep_stability, Duration::MAX),
    ];
    let mut red = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {budget:?} budget")),
            Err(d) => (false, d),
        };
        if !ok {
            red += 1;
        }
        println!(
            "{} criterion {name} ({:.2}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of 9 criteria pass", 9 - red);
    if red == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
