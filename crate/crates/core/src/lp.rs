//! Small linear programs on top of `minilp`.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use nalgebra::{DMatrix, DVector};

use crate::numkernel::LinearMap;
use crate::{Error, Result};

pub(crate) enum LpOutcome<T> {
    Infeasible,
    Optimal(T),
}

fn solve(p: &Problem) -> Result<Option<minilp::Solution>> {
    match p.solve() {
        Ok(sol) => Ok(Some(sol)),
        Err(minilp::Error::Infeasible) => Ok(None),
        Err(e) => Err(Error::Solver(format!("linear program: {e}"))),
    }
}

fn free_vars(p: &mut Problem, n: usize) -> Vec<Variable> {
    (0..n)
        .map(|_| p.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect()
}

/// `min t` subject to `A_Sᵀy = s` and `|A_{S^c}ᵀy| ≤ t`.
///
/// Returns `(t, y)` with `y` refined so the equalities hold to machine
/// precision and `t` recomputed from the refined `y`.
pub(crate) fn sup_norm_dual(
    a: &DMatrix<f64>,
    support: &[usize],
    signs: &[f64],
) -> Result<LpOutcome<(f64, DVector<f64>)>> {
    let (m, d) = a.shape();
    let mut on = vec![false; d];
    for &i in support {
        on[i] = true;
    }
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let y = free_vars(&mut p, m);
    let t = p.add_var(1.0, (0.0, f64::INFINITY));
    let col = |i: usize| -> Vec<(Variable, f64)> { (0..m).map(|j| (y[j], a[(j, i)])).collect() };
    for (&i, &s) in support.iter().zip(signs) {
        p.add_constraint(col(i).as_slice(), ComparisonOp::Eq, s);
    }
    for i in (0..d).filter(|&i| !on[i]) {
        let mut plus = col(i);
        plus.push((t, -1.0));
        p.add_constraint(plus.as_slice(), ComparisonOp::Le, 0.0);
        let mut minus: Vec<(Variable, f64)> = col(i).into_iter().map(|(v, c)| (v, -c)).collect();
        minus.push((t, -1.0));
        p.add_constraint(minus.as_slice(), ComparisonOp::Le, 0.0);
    }
    let Some(sol) = solve(&p)? else {
        return Ok(LpOutcome::Infeasible);
    };
    let mut yv = DVector::from_fn(m, |j, _| sol[y[j]]);

    let a_s = DMatrix::from_fn(m, support.len(), |r, c| a[(r, support[c])]);
    let s = DVector::from_column_slice(signs);
    let map = LinearMap::new(a_s.transpose())?;
    let defect = &s - a_s.tr_mul(&yv);
    yv += map.pinv_apply(&defect)?;

    let aty = a.tr_mul(&yv);
    let t_val = (0..d).filter(|&i| !on[i]).map(|i| aty[i].abs()).fold(0.0, f64::max);
    Ok(LpOutcome::Optimal((t_val, yv)))
}

/// `min ‖η_{S^c}‖₁` over kernel vectors `η = K c` with `⟨σ, η_S⟩ = 1`.
pub(crate) fn nsp_pattern_min(kernel: &DMatrix<f64>, support: &[usize], sigma: &[f64]) -> Result<LpOutcome<f64>> {
    let (d, k) = kernel.shape();
    let mut on = vec![false; d];
    for &i in support {
        on[i] = true;
    }
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let c = free_vars(&mut p, k);
    let row = |i: usize| -> Vec<(Variable, f64)> { (0..k).map(|j| (c[j], kernel[(i, j)])).collect() };

    let norm: Vec<(Variable, f64)> = (0..k)
        .map(|j| {
            let coef: f64 = support.iter().zip(sigma).map(|(&i, s)| s * kernel[(i, j)]).sum();
            (c[j], coef)
        })
        .collect();
    p.add_constraint(norm.as_slice(), ComparisonOp::Eq, 1.0);
    for i in (0..d).filter(|&i| !on[i]) {
        let q = p.add_var(1.0, (0.0, f64::INFINITY));
        let mut plus = row(i);
        plus.push((q, -1.0));
        p.add_constraint(plus.as_slice(), ComparisonOp::Le, 0.0);
        let mut minus: Vec<(Variable, f64)> = row(i).into_iter().map(|(v, x)| (v, -x)).collect();
        minus.push((q, -1.0));
        p.add_constraint(minus.as_slice(), ComparisonOp::Le, 0.0);
    }
    Ok(match solve(&p)? {
        None => LpOutcome::Infeasible,
        Some(sol) => LpOutcome::Optimal(sol.objective()),
    })
}

/// Whether `cone(rays) ∩ U ≠ {0}` for the subspace `U` with orthonormal
/// basis `u_basis` and complement basis `u_perp`.
///
/// A nonzero `u ∈ U` has some basis coordinate `⟨b_j, u⟩ = ±1` after
/// scaling, so one feasibility LP per basis vector and sign decides it.
pub(crate) fn cone_meets_subspace(
    rays: &[DVector<f64>],
    u_basis: &DMatrix<f64>,
    u_perp: &DMatrix<f64>,
) -> Result<bool> {
    for j in 0..u_basis.ncols() {
        for sign in [1.0, -1.0] {
            let mut p = Problem::new(OptimizationDirection::Minimize);
            let lam: Vec<Variable> = rays.iter().map(|_| p.add_var(0.0, (0.0, f64::INFINITY))).collect();
            for k in 0..u_perp.ncols() {
                let w = u_perp.column(k);
                let row: Vec<(Variable, f64)> = rays.iter().zip(&lam).map(|(r, &l)| (l, w.dot(r))).collect();
                p.add_constraint(row.as_slice(), ComparisonOp::Eq, 0.0);
            }
            let b = u_basis.column(j);
            let row: Vec<(Variable, f64)> = rays.iter().zip(&lam).map(|(r, &l)| (l, b.dot(r))).collect();
            p.add_constraint(row.as_slice(), ComparisonOp::Eq, sign);
            if solve(&p)?.is_some() {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_dual_is_tight() {
        let a = DMatrix::identity(3, 3);
        let LpOutcome::Optimal((t, y)) = sup_norm_dual(&a, &[0], &[1.0]).unwrap() else {
            panic!("infeasible")
        };
        assert!(t.abs() < 1e-12);
        assert!((y[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_dual_is_infeasible() {
        // two identical columns with opposite signs cannot both be matched
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert!(matches!(
            sup_norm_dual(&a, &[0, 1], &[1.0, -1.0]).unwrap(),
            LpOutcome::Infeasible
        ));
    }

    #[test]
    fn nsp_pattern_on_a_line() {
        // kernel spanned by (1, 2): ‖η_{S^c}‖₁ = 2 when η_S = 1
        let k = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]) / 5f64.sqrt();
        let LpOutcome::Optimal(v) = nsp_pattern_min(&k, &[0], &[1.0]).unwrap() else {
            panic!("infeasible")
        };
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cone_subspace_intersection() {
        let rays = vec![DVector::from_vec(vec![1.0, 1.0]), DVector::from_vec(vec![1.0, -1.0])];
        let e1 = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let e2 = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        // the x-axis runs through the cone; the y-axis misses it
        assert!(cone_meets_subspace(&rays, &e1, &e2).unwrap());
        let neg = vec![DVector::from_vec(vec![1.0, 2.0]), DVector::from_vec(vec![1.0, 3.0])];
        assert!(!cone_meets_subspace(&neg, &e1, &e2).unwrap());
    }
}
