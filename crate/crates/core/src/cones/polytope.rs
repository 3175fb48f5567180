use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::check_dim;
use crate::{Error, Result};

/// Halfspace `{x : ⟨normal, x⟩ ≤ offset}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Bounded polytope in both vertex and halfspace form.
#[derive(Clone, Debug)]
pub struct Polytope {
    d: usize,
    vertices: Vec<DVector<f64>>,
    halfspaces: Vec<(DVector<f64>, f64)>,
}

/// Split of the halfspaces at a point into active (equality) and slack ones.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceSplit {
    pub active: Vec<usize>,
    pub slack: Vec<usize>,
}

impl Polytope {
    /// Every vertex must satisfy every halfspace within 1e-10.
    pub fn new(vertices: Vec<DVector<f64>>, halfspaces: Vec<(DVector<f64>, f64)>) -> Result<Self> {
        let d = vertices
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::invalid("polytope needs at least one vertex"))?;
        if d == 0 {
            return Err(Error::invalid("polytope dimension must be positive"));
        }
        for v in &vertices {
            check_dim(d, v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("non-finite vertex"));
            }
        }
        for (a, b) in &halfspaces {
            check_dim(d, a.len())?;
            if !b.is_finite() || a.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("non-finite halfspace"));
            }
            for v in &vertices {
                if a.dot(v) > b + 1e-10 {
                    return Err(Error::invalid("vertex violates a halfspace"));
                }
            }
        }
        Ok(Polytope {
            d,
            vertices,
            halfspaces,
        })
    }

    /// ℓ1 unit ball: vertices ±e_i, halfspaces ⟨σ, x⟩ ≤ 1 for all sign vectors σ.
    pub fn cross_polytope(d: usize) -> Result<Self> {
        if d == 0 || d > 20 {
            return Err(Error::invalid("cross polytope dimension must be in 1..=20"));
        }
        let mut vertices = Vec::with_capacity(2 * d);
        for i in 0..d {
            for s in [1.0, -1.0] {
                let mut v = DVector::zeros(d);
                v[i] = s;
                vertices.push(v);
            }
        }
        let halfspaces = (0..1usize << d)
            .map(|mask| {
                let a = DVector::from_fn(d, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 });
                (a, 1.0)
            })
            .collect();
        Polytope::new(vertices, halfspaces)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> &[(DVector<f64>, f64)] {
        &self.halfspaces
    }

    /// Membership via the halfspace form.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.d, x.len())?;
        Ok(self.halfspaces.iter().all(|(a, b)| a.dot(x) <= b + tol))
    }

    pub fn face_split(&self, x: &DVector<f64>, tol: f64) -> Result<FaceSplit> {
        check_dim(self.d, x.len())?;
        let (mut active, mut slack) = (Vec::new(), Vec::new());
        for (j, (a, b)) in self.halfspaces.iter().enumerate() {
            if (a.dot(x) - b).abs() <= tol {
                active.push(j);
            } else {
                slack.push(j);
            }
        }
        Ok(FaceSplit { active, slack })
    }
}
