//! Lawson–Hanson active-set nonnegative least squares.

use nalgebra::{DMatrix, DVector};

const MAX_OUTER_FACTOR: usize = 5;

/// Minimizes `‖R c − x‖` over `c ≥ 0`; returns `c`.
pub(crate) fn nnls(r: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let k = r.ncols();
    let mut c = DVector::zeros(k);
    if k == 0 {
        return c;
    }
    let scale = r.norm() * x.norm();
    if scale == 0.0 {
        return c;
    }
    let tol = 1e-13 * scale;
    let mut passive = vec![false; k];

    for _ in 0..MAX_OUTER_FACTOR * k + 10 {
        let w = r.tr_mul(&(x - r * &c));
        let mut best = None;
        let mut best_w = tol;
        for j in 0..k {
            if !passive[j] && w[j] > best_w {
                best_w = w[j];
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        passive[j] = true;

        for _ in 0..=k {
            let idx: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
            let z_p = least_squares(r, &idx, x);
            let mut z = DVector::zeros(k);
            for (p, &i) in idx.iter().enumerate() {
                z[i] = z_p[p];
            }
            if idx.iter().all(|&i| z[i] > 0.0) {
                c = z;
                break;
            }
            let mut step = 1.0f64;
            for &i in &idx {
                if z[i] <= 0.0 {
                    let denom = c[i] - z[i];
                    if denom > 0.0 {
                        step = step.min(c[i] / denom);
                    } else {
                        step = 0.0;
                    }
                }
            }
            c += (z - &c) * step;
            for &i in &idx {
                if c[i] <= 1e-15 * (1.0 + c.amax()) {
                    c[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    c
}

fn least_squares(r: &DMatrix<f64>, idx: &[usize], x: &DVector<f64>) -> DVector<f64> {
    let sub = DMatrix::from_fn(r.nrows(), idx.len(), |a, b| r[(a, idx[b])]);
    let svd = sub.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    svd.solve(x, eps).unwrap_or_else(|_| DVector::zeros(idx.len()))
}
