use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::binomial;

use crate::numkernel::{LinearMap, RngStream};
use crate::report::ExperimentReport;
use crate::{record, Error, Result};

/// Largest `C(d, K)` enumerated by [`rip_constants`].
pub const RIP_BUDGET: f64 = 1e6;

/// Restricted isometry constants `δ_k` for `k = 1..=K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipTable {
    pub delta: BTreeMap<usize, f64>,
}

impl RipTable {
    pub fn get(&self, k: usize) -> Option<f64> {
        self.delta.get(&k).copied()
    }

    pub fn max_k(&self) -> usize {
        self.delta.keys().next_back().copied().unwrap_or(0)
    }
}

/// Brute-force `δ_k = max_{|S|=k} max(λ_max(A_SᵀA_S) − 1, 1 − λ_min(A_SᵀA_S))`.
pub fn rip_constants(a: &LinearMap, k_max: usize) -> Result<RipTable> {
    let d = a.cols();
    if k_max == 0 || k_max > d {
        return Err(Error::invalid(format!("K must lie in 1..={d}")));
    }
    let count = binomial(d as u64, k_max as u64);
    if count > RIP_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "C({d}, {k_max}) = {count:.0} supports exceed {RIP_BUDGET:.0}; subsample columns or lower K"
        )));
    }
    let gram = a.matrix().tr_mul(a.matrix());
    let mut delta = BTreeMap::new();
    for k in 1..=k_max {
        let supports = supports_of_size(d, k);
        let dk = supports
            .par_iter()
            .map(|s| support_delta(&gram, s))
            .reduce(|| 0.0, f64::max);
        delta.insert(k, dk);
    }
    Ok(RipTable { delta })
}

/// `max(λ_max − 1, 1 − λ_min)` of the Gram block on `s`.
pub(crate) fn support_delta(gram: &DMatrix<f64>, s: &[usize]) -> f64 {
    let g = DMatrix::from_fn(s.len(), s.len(), |i, j| gram[(s[i], s[j])]);
    let eig = SymmetricEigen::new(g).eigenvalues;
    let hi = eig.max();
    let lo = eig.min();
    (hi - 1.0).max(1.0 - lo).max(0.0)
}

/// All `k`-subsets of `0..d` in lexicographic order.
pub(crate) fn supports_of_size(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > d {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < d - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Checks `|⟨Au, Av⟩| ≤ δ_2s‖u‖‖v‖` on random unit `s`-sparse pairs with
/// disjoint supports.
pub fn check_rip_cross(a: &LinearMap, s: usize, trials: usize, rng: &mut RngStream) -> Result<ExperimentReport> {
    let d = a.cols();
    if s == 0 || 2 * s > d {
        return Err(Error::invalid(format!("need 1 <= s and 2s <= {d}")));
    }
    let table = rip_constants(a, 2 * s)?;
    let delta_2s = table.get(2 * s).unwrap_or(f64::NAN);
    let mut report = ExperimentReport::new(
        "rip_cross",
        Some(rng.seed()),
        serde_json::json!({ "m": a.rows(), "d": d, "s": s, "trials": trials }),
    );
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let mut r = rng.substream(t as u64);
        let both = r.subset(d, 2 * s);
        let pick = r.subset(2 * s, s);
        let mut in_u = vec![false; 2 * s];
        for &p in &pick {
            in_u[p] = true;
        }
        let mut u = DVector::zeros(d);
        let mut v = DVector::zeros(d);
        for (j, &i) in both.iter().enumerate() {
            if in_u[j] {
                u[i] = r.normal();
            } else {
                v[i] = r.normal();
            }
        }
        let (un, vn) = (u.norm(), v.norm());
        if un == 0.0 || vn == 0.0 {
            continue;
        }
        u /= un;
        v /= vn;
        let ratio = a.apply(&u)?.dot(&a.apply(&v)?).abs();
        worst = worst.max(ratio);
    }
    report.aggregate("delta_2s", delta_2s);
    report.aggregate("max_ratio", worst);
    report.record(record! { "delta_2s" => delta_2s, "max_ratio" => worst });
    report.check("max |<Au,Av>| <= delta_2s", worst, delta_2s, 1e-10);
    Ok(report)
}
