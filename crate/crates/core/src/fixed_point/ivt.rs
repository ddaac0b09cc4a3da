use super::FixedPointError;
use crate::par;

/// Largest grid size the scan will use.
pub const MAX_MODULUS: usize = 1 << 24;

const SAMPLE_PITCH: f64 = 1e-5;

/// Result of [`approximate_zero`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroReport {
    pub x: f64,
    pub value: f64,
    /// Grid size `n`: `|s − t| <= 1/n` should imply `|f(s) − f(t)| < eps/2`.
    pub modulus: usize,
    /// Whether `modulus` came from sampling rather than the caller.
    pub modulus_estimated: bool,
}

/// Grid size `n` for [`approximate_zero`] from a sampled Lipschitz estimate.
///
/// Heuristic: the slope is measured at pitch `1e-5` only, so a function that
/// varies faster between samples is underestimated.
pub fn estimate_modulus<F: Fn(f64) -> f64 + Sync>(f: &F, eps: f64) -> usize {
    let steps = (1.0 / SAMPLE_PITCH).round() as usize;
    let values = par::map_range(steps + 1, |k| f(k as f64 / steps as f64));
    let lip = values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
        / SAMPLE_PITCH;
    let target = (4.0 * lip / eps).ceil().max(2.0);
    if target >= MAX_MODULUS as f64 {
        MAX_MODULUS
    } else {
        (target as usize).next_power_of_two()
    }
}

/// Finds `x ∈ [0, 1]` with `|f(x)| <= eps` for `f(0) < 0 < f(1)`.
///
/// The endpoint signs are decided with band `eps/2`. Given a grid size `n`
/// over which `f` moves less than `eps/2`, the first grid point where `f`
/// stops being below `−eps` is already within `eps` of zero; the scan
/// returns the grid point of least `|f|`, the smallest on ties. If the
/// modulus was too coarse the bracketed sign change is bisected instead.
pub fn approximate_zero<F: Fn(f64) -> f64 + Sync>(
    f: F,
    eps: f64,
    modulus: Option<usize>,
) -> Result<ZeroReport, FixedPointError> {
    if !(eps > 0.0) {
        return Err(FixedPointError::InvalidArgument(
            "eps must be positive".into(),
        ));
    }
    let (f0, f1) = (f(0.0), f(1.0));
    if !(f0 < eps / 2.0 && f1 > -eps / 2.0) {
        return Err(FixedPointError::BracketInvalid {
            f0,
            f1,
            band: eps / 2.0,
        });
    }
    let (n, estimated) = match modulus {
        Some(n) if n > 0 => (n.min(MAX_MODULUS), false),
        _ => (estimate_modulus(&f, eps), true),
    };
    let values = par::map_range(n + 1, |m| f(m as f64 / n as f64));
    let (best_m, best_v) = values
        .iter()
        .enumerate()
        .fold((0usize, values[0]), |acc, (m, &v)| {
            if v.abs() < acc.1.abs() {
                (m, v)
            } else {
                acc
            }
        });
    if best_v.abs() <= eps {
        return Ok(ZeroReport {
            x: best_m as f64 / n as f64,
            value: best_v,
            modulus: n,
            modulus_estimated: estimated,
        });
    }

    log::debug!("approximate_zero: grid of {n} missed, bisecting");
    let Some(m) = values.windows(2).position(|w| w[0] < 0.0 && w[1] > 0.0) else {
        return Err(FixedPointError::ZeroNotFound { best: best_v.abs() });
    };
    let (mut a, mut b) = (m as f64 / n as f64, (m + 1) as f64 / n as f64);
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        let v = f(c);
        if v.abs() <= eps {
            return Ok(ZeroReport {
                x: c,
                value: v,
                modulus: n,
                modulus_estimated: estimated,
            });
        }
        if v < 0.0 {
            a = c;
        } else {
            b = c;
        }
    }
    Err(FixedPointError::ZeroNotFound {
        best: f(0.5 * (a + b)).abs(),
    })
}
