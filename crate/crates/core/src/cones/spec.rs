use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{Cone, Halfspace, Polytope};
use crate::{Error, Result};

/// JSON description of a cone, tagged by `"variant"`.
///
/// ```json
/// {"variant": "circular", "d": 3, "alpha": 0.3927}
/// {"variant": "l1_descent", "x0": [1.0, 0.0, -2.0]}
/// {"variant": "generated", "rays": [[1, 0, 1], [1, 0, -1]]}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConeSpec {
    Subspace {
        d: usize,
        /// Spanning vectors; orthonormalized on build.
        vectors: Vec<Vec<f64>>,
    },
    FullSpace {
        d: usize,
    },
    L1Descent {
        x0: Vec<f64>,
    },
    Circular {
        d: usize,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axis: Option<Vec<f64>>,
    },
    Generated {
        d: usize,
        rays: Vec<Vec<f64>>,
    },
    Halfspaces {
        d: usize,
        normals: Vec<Vec<f64>>,
    },
    PolytopeDescent {
        vertices: Vec<Vec<f64>>,
        #[serde(default)]
        halfspaces: Vec<Halfspace>,
        x0: Vec<f64>,
    },
    /// Descent cone of the ℓ1 ball in ℝ^d at `x0`.
    CrossPolytopeDescent {
        d: usize,
        x0: Vec<f64>,
    },
}

fn vecs(v: &[Vec<f64>]) -> Vec<DVector<f64>> {
    v.iter().map(|r| DVector::from_column_slice(r)).collect()
}

impl ConeSpec {
    pub fn build(&self) -> Result<Cone> {
        match self {
            ConeSpec::Subspace { d, vectors } => Cone::subspace(*d, &vecs(vectors)),
            ConeSpec::FullSpace { d } => {
                if *d == 0 {
                    return Err(Error::invalid("dimension must be positive"));
                }
                Ok(Cone::full_space(*d))
            }
            ConeSpec::L1Descent { x0 } => super::l1_descent_cone(&DVector::from_column_slice(x0)),
            ConeSpec::Circular { d, alpha, axis } => match axis {
                Some(a) => Cone::circular_with_axis(*d, *alpha, DVector::from_column_slice(a)),
                None => Cone::circular(*d, *alpha),
            },
            ConeSpec::Generated { d, rays } => Cone::generated(*d, &vecs(rays)),
            ConeSpec::Halfspaces { d, normals } => Cone::halfspaces(*d, &vecs(normals)),
            ConeSpec::PolytopeDescent {
                vertices,
                halfspaces,
                x0,
            } => {
                let hs = halfspaces
                    .iter()
                    .map(|h| (DVector::from_column_slice(&h.normal), h.offset))
                    .collect();
                let p = Polytope::new(vecs(vertices), hs)?;
                Cone::polytope_descent(p, DVector::from_column_slice(x0))
            }
            ConeSpec::CrossPolytopeDescent { d, x0 } => {
                Cone::polytope_descent(Polytope::cross_polytope(*d)?, DVector::from_column_slice(x0))
            }
        }
    }
}
