use nalgebra::{DMatrix, DVector};

use super::{GeometryError, Vector};

/// Residual tolerance of the active-set iteration.
pub const NNLS_TOLERANCE: f64 = 1e-10;

/// Nonnegative least squares: minimise `‖Σ λ_j c_j − target‖` over `λ >= 0`.
///
/// Lawson–Hanson active set. The iteration cap is `100·k` for `k` columns;
/// running into it means the columns are numerically degenerate.
pub fn nnls(columns: &[Vector], target: &Vector) -> Result<Vector, GeometryError> {
    let k = columns.len();
    let n = target.len();
    if k == 0 {
        return Ok(DVector::zeros(0));
    }
    let a = DMatrix::from_fn(n, k, |i, j| columns[j][i]);
    let scale = columns.iter().map(|c| c.norm()).fold(0.0, f64::max) * (1.0 + target.norm());
    let tol = NNLS_TOLERANCE * scale.max(1e-300);
    let max_iter = 100 * k;

    let mut lambda = DVector::<f64>::zeros(k);
    let mut passive = vec![false; k];
    let mut iterations = 0usize;

    loop {
        let residual = target - &a * &lambda;
        let w = a.transpose() * &residual;
        let candidate = (0..k)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(GeometryError::ProjectionFailed(max_iter));
            }
            let idx: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
            let s = solve_passive(&a, target, &idx);
            let mut full = DVector::<f64>::zeros(k);
            for (pos, &i) in idx.iter().enumerate() {
                full[i] = s[pos];
            }
            if idx.iter().all(|&i| full[i] > 0.0) {
                lambda = full;
                break;
            }
            // step toward the unconstrained solution until a coefficient hits zero
            let mut alpha = 1.0f64;
            for &i in &idx {
                if full[i] <= 0.0 {
                    let denom = lambda[i] - full[i];
                    if denom > 0.0 {
                        alpha = alpha.min(lambda[i] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            lambda += (full - &lambda) * alpha;
            let mut dropped = false;
            for &i in &idx {
                if lambda[i] <= tol.min(1e-14) {
                    lambda[i] = 0.0;
                    passive[i] = false;
                    dropped = true;
                }
            }
            if !dropped {
                // alpha landed strictly inside; drop the smallest to make progress
                if let Some(&i) = idx
                    .iter()
                    .min_by(|&&x, &&y| lambda[x].total_cmp(&lambda[y]))
                {
                    lambda[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    Ok(lambda)
}

fn solve_passive(a: &DMatrix<f64>, target: &Vector, idx: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(idx);
    let svd = sub.svd(true, true);
    svd.solve(target, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(idx.len()))
}
