//! Classical recovery criteria (RIP, NSP, RNSP) and their translations into
//! angular separation.

mod mu;
mod nsp;
mod rip;
mod translate;

pub use mu::{polytope_mu, MuEstimate, MuOptions};
pub use nsp::{nsp_check, nsp_margin, rnsp_check, RnspResult, RNSP_TOL};
pub use rip::{check_rip_cross, rip_constants, RipTable, RIP_BUDGET};
pub use translate::{
    asc_to_rnsp, block_partition, check_sqrt5_bound, rip_to_asc_angle, rip_to_asc_cos, rnsp_to_rsv_bound, RnspParams,
};

/// Largest number of sign patterns enumerated by NSP/RNSP checks.
pub const PATTERN_BUDGET: usize = 1 << 16;

/// Validates an index set against `d`: in range, no repeats. Returns it sorted.
pub(crate) fn index_set(d: usize, idx: &[usize]) -> crate::Result<Vec<usize>> {
    let mut s = idx.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() != idx.len() {
        return Err(crate::Error::invalid("index set has repeated entries"));
    }
    if s.last().is_some_and(|&i| i >= d) {
        return Err(crate::Error::invalid(format!("index out of range for dimension {d}")));
    }
    Ok(s)
}

/// Sign patterns on `k` coordinates with the first sign fixed to `+1`.
pub(crate) fn half_patterns(k: usize) -> crate::Result<Vec<Vec<f64>>> {
    if k >= 17 || (1usize << k) > PATTERN_BUDGET {
        return Err(crate::Error::BudgetExceeded(format!(
            "2^{k} sign patterns exceed the budget of {PATTERN_BUDGET}"
        )));
    }
    if k == 0 {
        return Ok(vec![Vec::new()]);
    }
    Ok((0..1usize << (k - 1))
        .map(|bits| {
            (0..k)
                .map(|j| if j > 0 && bits >> (j - 1) & 1 == 1 { -1.0 } else { 1.0 })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests;
