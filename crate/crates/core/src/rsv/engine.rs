//! Minimization of `‖M x‖` over the unit vectors of a cone.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{Method, RsvOptions};
use crate::cones::Cone;
use crate::numkernel::{LinearMap, RngStream};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct MinGain {
    pub value: f64,
    pub witness: DVector<f64>,
    pub method: Method,
    pub starts: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Certified `[lower, upper]` for the exact and grid paths.
    pub bracket: Option<(f64, f64)>,
}

pub(crate) fn min_gain(m: &DMatrix<f64>, lip: f64, cone: &Cone, opts: &RsvOptions) -> Result<MinGain> {
    if m.ncols() != cone.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.ncols(),
            got: cone.dim(),
        });
    }
    if cone.is_zero() {
        return Err(Error::invalid("cone has no unit vectors"));
    }
    if let Cone::Subspace { basis } = cone {
        return subspace_min(m, basis);
    }
    match opts.method {
        Method::Grid => grid_min(m, lip, cone, opts),
        Method::Descent | Method::Exact => descent_min(m, lip, cone, opts),
    }
}

/// Smallest singular value of `M B` for an orthonormal basis `B`.
fn subspace_min(m: &DMatrix<f64>, basis: &DMatrix<f64>) -> Result<MinGain> {
    let mb = m * basis;
    let (value, z) = if mb.nrows() == 0 || mb.iter().all(|&v| v == 0.0) {
        let mut z = DVector::zeros(basis.ncols());
        z[0] = 1.0;
        (0.0, z)
    } else {
        let map = LinearMap::new(mb.clone())?;
        if map.kernel_dim() > 0 {
            (0.0, map.kernel_basis().column(0).into_owned())
        } else {
            let r = map.row_space_basis();
            let z = r.column(r.ncols() - 1).into_owned();
            ((&mb * &z).norm(), z)
        }
    };
    let witness = basis * z;
    Ok(MinGain {
        value,
        witness,
        method: Method::Exact,
        starts: 0,
        converged: true,
        iterations: 0,
        bracket: Some((value, value)),
    })
}

struct Run {
    value: f64,
    x: DVector<f64>,
    converged: bool,
    iterations: usize,
}

fn descent_min(m: &DMatrix<f64>, lip: f64, cone: &Cone, opts: &RsvOptions) -> Result<MinGain> {
    if opts.starts == 0 {
        return Err(Error::invalid("descent needs at least one start"));
    }
    let run = |s: usize| -> Option<Run> {
        let mut rng = RngStream::new(opts.seed, s as u64);
        let x = cone.sample_member(&mut rng)?;
        Some(descend(m, lip, cone, x, opts))
    };
    let runs: Vec<Option<Run>> = if opts.parallel {
        (0..opts.starts).into_par_iter().map(run).collect()
    } else {
        (0..opts.starts).map(run).collect()
    };
    let mut best: Option<Run> = None;
    let mut all_converged = true;
    let mut iterations = 0;
    for r in runs.into_iter().flatten() {
        all_converged &= r.converged;
        iterations += r.iterations;
        if best.as_ref().is_none_or(|b| r.value < b.value) {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| Error::invalid("could not sample a cone member"))?;
    Ok(MinGain {
        value: best.value,
        witness: best.x,
        method: Method::Descent,
        starts: opts.starts,
        converged: all_converged,
        iterations,
        bracket: None,
    })
}

/// Projected gradient on `½‖Mx‖²` with renormalization onto the sphere.
fn descend(m: &DMatrix<f64>, lip: f64, cone: &Cone, mut x: DVector<f64>, opts: &RsvOptions) -> Run {
    let step = if lip > 0.0 { 1.0 / (lip * lip) } else { 1.0 };
    let floor = 1e-15 * lip.max(1e-300);
    let mut f = (m * &x).norm();
    for it in 0..opts.max_iter {
        if f <= floor {
            return Run {
                value: f,
                x,
                converged: true,
                iterations: it,
            };
        }
        let grad = m.tr_mul(&(m * &x));
        let y = &x - grad * step;
        let p = match cone.project(&y) {
            Ok(p) => p,
            Err(_) => break,
        };
        let n = p.norm();
        if n <= 1e-300 {
            return Run {
                value: f,
                x,
                converged: true,
                iterations: it,
            };
        }
        let x_new = p / n;
        let f_new = (m * &x_new).norm();
        let change = (f - f_new).abs();
        x = x_new;
        f = f_new;
        if change <= opts.rel_tol * f.max(floor) {
            return Run {
                value: f,
                x,
                converged: true,
                iterations: it + 1,
            };
        }
    }
    Run {
        value: f,
        x,
        converged: false,
        iterations: opts.max_iter,
    }
}

struct Cell {
    axis: usize,
    sign: f64,
    center: Vec<f64>,
    half: f64,
    lower: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    // BinaryHeap is a max-heap; invert so the smallest lower bound pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.lower.total_cmp(&self.lower)
    }
}

/// Branch and bound over the faces of the cube `[−1, 1]^d`, projected to the
/// sphere.
///
/// A face cell with half-width `h` maps into the sphere cap of radius
/// `ρ = h√(d−1)` around its normalized center, because normalization is
/// 1-Lipschitz outside the unit ball. Cells whose center is farther than `ρ`
/// from the cone are discarded; the rest get the lower bound
/// `‖M s‖ − lip·ρ`. Upper bounds come from normalized projections of cell
/// centers onto the cone. The search stops once the bracket is narrower than
/// `lip·res`.
fn grid_min(m: &DMatrix<f64>, lip: f64, cone: &Cone, opts: &RsvOptions) -> Result<MinGain> {
    let d = cone.dim();
    if d > 4 {
        return Err(Error::Unsupported("grid oracle needs d <= 4".into()));
    }
    if !(opts.res > 0.0) {
        return Err(Error::invalid("grid resolution must be positive"));
    }
    let target = lip * opts.res;
    let radius_factor = ((d - 1) as f64).sqrt();
    let mut best_value = f64::INFINITY;
    let mut best_x: Option<DVector<f64>> = None;
    let mut heap = BinaryHeap::new();
    let mut evaluated = 0usize;

    let eval = |axis: usize,
                sign: f64,
                center: Vec<f64>,
                half: f64,
                best_value: &mut f64,
                best_x: &mut Option<DVector<f64>>|
     -> Result<Option<Cell>> {
        let mut p = DVector::zeros(d);
        let mut k = 0;
        for i in 0..d {
            if i == axis {
                p[i] = sign;
            } else {
                p[i] = center[k];
                k += 1;
            }
        }
        let s = &p / p.norm();
        let rho = half * radius_factor;
        let q = cone.project(&s)?;
        if (&s - &q).norm() > rho {
            return Ok(None);
        }
        let qn = q.norm();
        if qn > 0.0 {
            let u = q / qn;
            let fu = (m * &u).norm();
            if fu < *best_value {
                *best_value = fu;
                *best_x = Some(u);
            }
        }
        let lower = ((m * &s).norm() - lip * rho).max(0.0);
        Ok(Some(Cell {
            axis,
            sign,
            center,
            half,
            lower,
        }))
    };

    for axis in 0..d {
        for sign in [1.0, -1.0] {
            if let Some(c) = eval(axis, sign, vec![0.0; d - 1], 1.0, &mut best_value, &mut best_x)? {
                heap.push(c);
            }
            evaluated += 1;
        }
    }

    let mut converged = false;
    let mut lower_bound = 0.0;
    while let Some(cell) = heap.pop() {
        lower_bound = cell.lower;
        if best_value - cell.lower <= target || cell.half == 0.0 {
            converged = true;
            break;
        }
        if evaluated >= opts.max_cells {
            heap.push(cell);
            break;
        }
        let h = cell.half / 2.0;
        for mask in 0..(1usize << (d - 1)) {
            let center: Vec<f64> = (0..d - 1)
                .map(|j| cell.center[j] + if mask >> j & 1 == 1 { h } else { -h })
                .collect();
            evaluated += 1;
            if let Some(c) = eval(cell.axis, cell.sign, center, h, &mut best_value, &mut best_x)? {
                heap.push(c);
            }
        }
    }
    if heap.is_empty() && !converged {
        // every cell pruned: the bracket is closed by the incumbent
        converged = best_x.is_some();
        lower_bound = best_value;
    } else if !converged {
        lower_bound = heap.peek().map_or(best_value, |c| c.lower);
    }
    let witness = best_x.ok_or_else(|| Error::invalid("cone has no unit vectors"))?;
    Ok(MinGain {
        value: best_value,
        witness,
        method: Method::Grid,
        starts: 0,
        converged,
        iterations: evaluated,
        bracket: Some((lower_bound.min(best_value), best_value)),
    })
}
