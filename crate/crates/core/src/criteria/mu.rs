use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::{Cone, Polytope};
use crate::error::check_dim;
use crate::lp::cone_meets_subspace;
use crate::numkernel::{LinearMap, RngStream};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuOptions {
    /// Random convex combinations of vertices.
    pub samples: usize,
    /// Local ascent runs started from the best candidates.
    pub refinements: usize,
    pub ascent_iter: usize,
    pub seed: u64,
}

impl Default for MuOptions {
    fn default() -> Self {
        MuOptions {
            samples: 100_000,
            refinements: 50,
            ascent_iter: 500,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MuEstimate {
    pub mu: f64,
    /// Unit chord direction attaining `mu`.
    #[serde(with = "crate::numkernel::serde_vec")]
    pub witness: DVector<f64>,
    pub vertex_mu: f64,
    pub sampled_mu: f64,
}

/// Face constant `μ(x0) = sup_{x∈P∖{x0}} ‖Π_U(x − x0)‖/‖x − x0‖`.
///
/// Requires `(x0 + U) ∩ P = {x0}`, checked exactly as "the cone generated
/// by `P − x0` meets `U` only at 0" with linear programs. The supremum is
/// estimated from all vertices, random convex combinations, and projected
/// gradient ascent on the chord cone; the result is a lower estimate.
pub fn polytope_mu(p: &Polytope, x0: &DVector<f64>, u: &[DVector<f64>], opts: &MuOptions) -> Result<MuEstimate> {
    let d = p.dim();
    check_dim(d, x0.len())?;
    let Cone::Subspace { basis } = Cone::subspace(d, u)? else {
        unreachable!("Cone::subspace returns a subspace");
    };
    if basis.ncols() == 0 {
        return Err(Error::invalid("U must be a nonzero subspace"));
    }
    let perp = LinearMap::new(basis.transpose())?.kernel_basis().clone();
    let cone = Cone::polytope_descent(p.clone(), x0.clone())?;
    let Cone::PolytopeDescent { rays, .. } = &cone else {
        unreachable!("polytope_descent returns a polytope descent cone");
    };
    let ray_list: Vec<DVector<f64>> = rays.column_iter().map(|c| c.into_owned()).collect();
    if ray_list.is_empty() {
        return Err(Error::invalid("polytope is the single point x0"));
    }
    if cone_meets_subspace(&ray_list, &basis, &perp)? {
        return Err(Error::Infeasible("x0 + U meets the polytope outside x0".into()));
    }

    let score = |r: &DVector<f64>| -> f64 {
        let n = r.norm();
        if n <= 1e-12 {
            f64::NEG_INFINITY
        } else {
            basis.tr_mul(r).norm() / n
        }
    };

    let mut cands: Vec<(f64, DVector<f64>)> = ray_list.iter().map(|r| (score(r), r.clone())).collect();
    let vertex_mu = cands.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);

    let verts = p.vertices();
    let mut rng = RngStream::new(opts.seed, 0);
    let kmax = verts.len().min(d + 1);
    let mut sampled_mu = f64::NEG_INFINITY;
    for _ in 0..opts.samples {
        let k = 1 + rng.index(kmax);
        let pick = rng.subset(verts.len(), k);
        let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.uniform()).ln()).collect();
        let total: f64 = w.iter().sum();
        let mut x = DVector::zeros(d);
        for (&i, wi) in pick.iter().zip(&w) {
            x += &verts[i] * (wi / total);
        }
        let r = x - x0;
        let v = score(&r);
        if v.is_finite() {
            sampled_mu = sampled_mu.max(v);
            cands.push((v, r));
        }
    }

    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    cands.truncate(opts.refinements.max(1));
    let mut best = cands[0].clone();
    for (_, r0) in cands.iter().take(opts.refinements) {
        let (v, r) = ascend(&cone, &basis, r0, opts.ascent_iter)?;
        if v > best.0 {
            best = (v, r);
        }
    }
    let n = best.1.norm();
    Ok(MuEstimate {
        mu: best.0,
        witness: best.1 / n,
        vertex_mu,
        sampled_mu,
    })
}

/// Projected gradient ascent of `‖Π_U r‖²` over unit vectors of the cone.
fn ascend(cone: &Cone, basis: &DMatrix<f64>, r0: &DVector<f64>, iters: usize) -> Result<(f64, DVector<f64>)> {
    let val = |r: &DVector<f64>| basis.tr_mul(r).norm();
    let mut r = r0 / r0.norm();
    let mut v = val(&r);
    let mut step = 0.5;
    for _ in 0..iters {
        let pu = basis * basis.tr_mul(&r);
        let grad = &pu - &r * (v * v);
        let trial = cone.project(&(&r + grad * step))?;
        let tn = trial.norm();
        if tn <= 1e-12 {
            step *= 0.5;
            continue;
        }
        let trial = trial / tn;
        let tv = val(&trial);
        if tv > v {
            let gain = tv - v;
            r = trial;
            v = tv;
            if gain <= 1e-15 {
                break;
            }
        } else {
            step *= 0.5;
            if step < 1e-10 {
                break;
            }
        }
    }
    Ok((v, r))
}
