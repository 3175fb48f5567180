//! Cones with membership, Euclidean projection, sphere support, θ-expansion
//! and polars.
//!
//! Every variant is a closed convex cone. Projection is exact for
//! [`Cone::Subspace`], [`Cone::L1Descent`] and [`Cone::Circular`]; finitely
//! generated cones go through nonnegative least squares, and
//! [`Cone::Halfspaces`] through the Moreau decomposition with its polar.

mod nnls;
mod polytope;
mod spec;

use nalgebra::{DMatrix, DVector};

use crate::error::check_dim;
use crate::numkernel::{gaussian_vector, LinearMap, RngStream};
use crate::{Error, Result};

pub use polytope::{FaceSplit, Halfspace, Polytope};
pub use spec::ConeSpec;

/// Default absolute slack on defining inequalities.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Slack used by [`Cone::theta_expansion_member`].
pub const EXPANSION_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum Cone {
    /// Linear span of orthonormal columns; zero columns is the cone `{0}`.
    Subspace { basis: DMatrix<f64> },
    /// Descent cone of ‖·‖₁ at a point with the given support and signs.
    L1Descent {
        d: usize,
        support: Vec<usize>,
        signs: Vec<f64>,
    },
    /// `{x : ⟨axis, x⟩ ≥ cos(alpha)·‖x‖}` with a unit axis.
    Circular { d: usize, alpha: f64, axis: DVector<f64> },
    /// Conic hull of unit rays (columns).
    Generated { rays: DMatrix<f64> },
    /// `{x : ⟨n, x⟩ ≤ 0}` for every unit normal column `n`.
    Halfspaces { normals: DMatrix<f64> },
    /// Cone generated by `P − x0` for a polytope `P` containing `x0`.
    PolytopeDescent {
        polytope: Polytope,
        x0: DVector<f64>,
        rays: DMatrix<f64>,
    },
}

/// Descent cone of the ℓ1 norm at `x0`.
pub fn l1_descent_cone(x0: &DVector<f64>) -> Result<Cone> {
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite point"));
    }
    let support: Vec<usize> = (0..x0.len()).filter(|&i| x0[i] != 0.0).collect();
    if support.is_empty() {
        return Err(Error::invalid("descent cone of the l1 norm needs x0 != 0"));
    }
    let signs = support.iter().map(|&i| x0[i].signum()).collect();
    Ok(Cone::L1Descent {
        d: x0.len(),
        support,
        signs,
    })
}

/// Geodesic distance on the unit sphere.
pub fn angle_metric(x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    if (x.norm() - 1.0).abs() > 1e-10 || (y.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("angle_metric needs unit vectors"));
    }
    Ok(x.dot(y).clamp(-1.0, 1.0).acos())
}

fn unit_columns(vectors: &[DVector<f64>], d: usize, what: &str) -> Result<DMatrix<f64>> {
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        check_dim(d, v.len())?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite {what}")));
        }
        let n = v.norm();
        if n <= 1e-300 {
            return Err(Error::invalid(format!("zero {what}")));
        }
        let u = v / n;
        if !cols.iter().any(|c| (c - &u).norm() <= 1e-12) {
            cols.push(u);
        }
    }
    Ok(DMatrix::from_fn(d, cols.len(), |r, c| cols[c][r]))
}

impl Cone {
    /// Span of the given vectors; the basis is orthonormalized.
    pub fn subspace(d: usize, vectors: &[DVector<f64>]) -> Result<Cone> {
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if vectors.is_empty() {
            return Ok(Cone::zero(d));
        }
        for v in vectors {
            check_dim(d, v.len())?;
        }
        let m = DMatrix::from_fn(vectors.len(), d, |r, c| vectors[r][c]);
        let map = LinearMap::new(m)?;
        Ok(Cone::Subspace {
            basis: map.row_space_basis().clone(),
        })
    }

    pub fn full_space(d: usize) -> Cone {
        Cone::Subspace {
            basis: DMatrix::identity(d, d),
        }
    }

    pub fn zero(d: usize) -> Cone {
        Cone::Subspace {
            basis: DMatrix::zeros(d, 0),
        }
    }

    pub fn kernel_of(a: &LinearMap) -> Cone {
        Cone::Subspace {
            basis: a.kernel_basis().clone(),
        }
    }

    pub fn circular(d: usize, alpha: f64) -> Result<Cone> {
        let mut axis = DVector::zeros(d.max(1));
        axis[0] = 1.0;
        Cone::circular_with_axis(d, alpha, axis)
    }

    pub fn circular_with_axis(d: usize, alpha: f64, axis: DVector<f64>) -> Result<Cone> {
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        check_dim(d, axis.len())?;
        if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("circular cone needs alpha in (0, pi/2)"));
        }
        let n = axis.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid("circular cone axis must be nonzero"));
        }
        Ok(Cone::Circular {
            d,
            alpha,
            axis: axis / n,
        })
    }

    /// Rays are normalized and deduplicated.
    pub fn generated(d: usize, rays: &[DVector<f64>]) -> Result<Cone> {
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(Cone::Generated {
            rays: unit_columns(rays, d, "ray")?,
        })
    }

    pub fn halfspaces(d: usize, normals: &[DVector<f64>]) -> Result<Cone> {
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(Cone::Halfspaces {
            normals: unit_columns(normals, d, "normal")?,
        })
    }

    pub fn polytope_descent(polytope: Polytope, x0: DVector<f64>) -> Result<Cone> {
        let d = polytope.dim();
        check_dim(d, x0.len())?;
        if !polytope.contains(&x0, 1e-10)? {
            return Err(Error::invalid("base point lies outside the polytope"));
        }
        let diffs: Vec<DVector<f64>> = polytope
            .vertices()
            .iter()
            .map(|v| v - &x0)
            .filter(|v| v.norm() > 1e-12)
            .collect();
        let rays = unit_columns(&diffs, d, "ray")?;
        Ok(Cone::PolytopeDescent { polytope, x0, rays })
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            Cone::Subspace { basis } => basis.nrows(),
            Cone::L1Descent { d, .. } | Cone::Circular { d, .. } => *d,
            Cone::Generated { rays } | Cone::PolytopeDescent { rays, .. } => rays.nrows(),
            Cone::Halfspaces { normals } => normals.nrows(),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Cone::Subspace { .. } => "subspace",
            Cone::L1Descent { .. } => "l1_descent",
            Cone::Circular { .. } => "circular",
            Cone::Generated { .. } => "generated",
            Cone::Halfspaces { .. } => "halfspaces",
            Cone::PolytopeDescent { .. } => "polytope_descent",
        }
    }

    /// True for `{0}`.
    pub fn is_zero(&self) -> bool {
        match self {
            Cone::Subspace { basis } => basis.ncols() == 0,
            Cone::Generated { rays } | Cone::PolytopeDescent { rays, .. } => rays.ncols() == 0,
            _ => false,
        }
    }

    /// Membership up to additive slack `tol` on the defining inequality.
    /// Subspace and generated variants compare the distance to the cone
    /// against `tol·max(1, ‖x‖)`.
    pub fn membership(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        let scale = x.norm().max(1.0);
        Ok(match self {
            Cone::Subspace { basis } => (x - basis * basis.tr_mul(x)).norm() <= tol * scale,
            Cone::L1Descent { support, signs, .. } => l1_constraint(x, support, signs) <= tol,
            Cone::Circular { alpha, axis, .. } => axis.dot(x) >= alpha.cos() * x.norm() - tol,
            Cone::Halfspaces { normals } => normals.tr_mul(x).iter().all(|&v| v <= tol),
            Cone::Generated { rays } | Cone::PolytopeDescent { rays, .. } => {
                (x - generated_projection(rays, x)).norm() <= tol * scale
            }
        })
    }

    /// Euclidean projection onto the cone.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            Cone::Subspace { basis } => basis * basis.tr_mul(x),
            Cone::L1Descent { support, signs, .. } => l1_projection(x, support, signs),
            Cone::Circular { alpha, axis, .. } => circular_projection(x, *alpha, axis),
            Cone::Generated { rays } | Cone::PolytopeDescent { rays, .. } => generated_projection(rays, x),
            Cone::Halfspaces { normals } => x - generated_projection(normals, x),
        })
    }

    /// `sup_{y ∈ C, ‖y‖ = 1} ⟨g/‖g‖, y⟩`.
    ///
    /// Exact for subspaces and circular cones. Other variants return
    /// `‖Π_C g‖/‖g‖`, which equals the supremum whenever the supremum is
    /// nonnegative and is 0 otherwise. The cone `{0}` gives −∞.
    pub fn support_sphere(&self, g: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), g.len())?;
        let n = g.norm();
        if !(n > 0.0) {
            return Err(Error::invalid("support_sphere needs a nonzero direction"));
        }
        if self.is_zero() {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(match self {
            Cone::Circular { alpha, axis, .. } => {
                let beta = (axis.dot(g) / n).clamp(-1.0, 1.0).acos();
                (beta - alpha).max(0.0).cos()
            }
            _ => (self.project(g)?.norm() / n).min(1.0),
        })
    }

    /// Membership in the θ-expansion `{x : support_sphere(C, x) ≥ cos θ}`.
    pub fn theta_expansion_member(&self, x: &DVector<f64>, theta: f64) -> Result<bool> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::invalid("theta must lie in [0, pi]"));
        }
        Ok(self.support_sphere(x)? >= theta.cos() - EXPANSION_TOL)
    }

    /// Closed-form θ-expansion of a circular cone: `Circ(α + θ)`.
    pub fn circ_expansion(&self, theta: f64) -> Result<Cone> {
        let Cone::Circular { d, alpha, axis } = self else {
            return Err(Error::Unsupported("circ_expansion needs a circular cone".into()));
        };
        if theta < 0.0 {
            return Err(Error::invalid("theta must be nonnegative"));
        }
        if alpha + theta >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::Unsupported(
                "expansion angle reaches pi/2; no longer a circular cone".into(),
            ));
        }
        Ok(Cone::Circular {
            d: *d,
            alpha: alpha + theta,
            axis: axis.clone(),
        })
    }

    /// Polar cone `{x : ⟨x, y⟩ ≤ 0 for all y ∈ C}`.
    pub fn polar(&self) -> Result<Cone> {
        match self {
            Cone::Subspace { basis } => {
                let d = basis.nrows();
                if basis.ncols() == 0 {
                    return Ok(Cone::full_space(d));
                }
                let map = LinearMap::new(basis.transpose())?;
                Ok(Cone::Subspace {
                    basis: map.kernel_basis().clone(),
                })
            }
            Cone::Circular { d, alpha, axis } => Ok(Cone::Circular {
                d: *d,
                alpha: std::f64::consts::FRAC_PI_2 - alpha,
                axis: -axis,
            }),
            Cone::Generated { rays } => Ok(Cone::Halfspaces { normals: rays.clone() }),
            Cone::Halfspaces { normals } => Ok(Cone::Generated { rays: normals.clone() }),
            _ => Err(Error::Unsupported(format!("polar of a {} cone", self.variant_name()))),
        }
    }

    /// Random unit member, or `None` for `{0}`.
    ///
    /// Gaussian points are projected onto the cone; circular cones are
    /// sampled by angle so narrow cones in high dimension stay cheap.
    pub fn sample_member(&self, rng: &mut RngStream) -> Option<DVector<f64>> {
        if self.is_zero() {
            return None;
        }
        let d = self.dim();
        if let Cone::Circular { alpha, axis, .. } = self {
            let phi = alpha * rng.uniform();
            let g = gaussian_vector(rng, d);
            let perp = &g - axis * axis.dot(&g);
            let pn = perp.norm();
            if pn <= 1e-12 {
                return Some(axis.clone());
            }
            return Some(axis * phi.cos() + perp * (phi.sin() / pn));
        }
        for _ in 0..1000 {
            let g = gaussian_vector(rng, d);
            let p = self.project(&g).ok()?;
            let n = p.norm();
            if n > 1e-8 * g.norm() {
                return Some(p / n);
            }
        }
        None
    }
}

fn l1_constraint(x: &DVector<f64>, support: &[usize], signs: &[f64]) -> f64 {
    let on: f64 = support.iter().zip(signs).map(|(&i, s)| s * x[i]).sum();
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    let on_abs: f64 = support.iter().map(|&i| x[i].abs()).sum();
    (total - on_abs) + on
}

/// Minimizer of `‖z − x‖²` subject to the ℓ1 descent constraint at multiplier λ.
fn l1_candidate(x: &DVector<f64>, support: &[usize], signs: &[f64], lambda: f64) -> DVector<f64> {
    let mut z = x.map(|v| v.signum() * (v.abs() - lambda).max(0.0));
    for (&i, s) in support.iter().zip(signs) {
        z[i] = x[i] - lambda * s;
    }
    z
}

fn l1_projection(x: &DVector<f64>, support: &[usize], signs: &[f64]) -> DVector<f64> {
    let g0 = l1_constraint(x, support, signs);
    if g0 <= 0.0 {
        return x.clone();
    }
    // The constraint value along the multiplier path is piecewise linear and
    // strictly decreasing with slope at most −|S|.
    let g = |l: f64| l1_constraint(&l1_candidate(x, support, signs, l), support, signs);
    let (mut lo, mut hi) = (0.0, g0 / support.len() as f64);
    let (mut g_lo, mut g_hi) = (g0, g(hi));
    for _ in 0..200 {
        if g_hi.abs() <= 1e-14 * (1.0 + x.amax()) || hi - lo <= 1e-16 * hi.max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm > 0.0 {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }
    // Final linear interpolation inside the bracket, exact on a linear piece.
    let lambda = if g_lo > g_hi {
        (lo + g_lo * (hi - lo) / (g_lo - g_hi)).clamp(lo, hi)
    } else {
        hi
    };
    let z = l1_candidate(x, support, signs, lambda);
    if l1_constraint(&z, support, signs) <= 0.0 {
        z
    } else {
        l1_candidate(x, support, signs, hi)
    }
}

fn circular_projection(x: &DVector<f64>, alpha: f64, axis: &DVector<f64>) -> DVector<f64> {
    let t = axis.dot(x);
    let y = x - axis * t;
    let r = y.norm();
    let (s, c) = alpha.sin_cos();
    if t >= 0.0 && r * c <= t * s {
        return x.clone();
    }
    let reach = t * c + r * s;
    if reach <= 0.0 {
        return DVector::zeros(x.len());
    }
    if r == 0.0 {
        return x.clone();
    }
    (axis * c + y * (s / r)) * reach
}

fn generated_projection(rays: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    if rays.ncols() == 0 {
        return DVector::zeros(x.len());
    }
    rays * nnls::nnls(rays, x)
}
