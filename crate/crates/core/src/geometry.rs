//! Closed convex feasible sets with exact Euclidean projections.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShbError};
use crate::linalg;
use crate::Scalar;

/// A closed convex set supporting exact orthogonal projection.
///
/// Only sets with a closed-form projection are offered; this is all the
/// constrained experiments need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexFeasibleSet<F: Scalar> {
    /// All of R^n; projection is the identity.
    WholeSpace { dim: usize },
    /// Euclidean ball { x : ||x - center|| <= radius }.
    Ball { center: Vec<F>, radius: F },
    /// Axis-aligned box { x : lower <= x <= upper } componentwise.
    Box { lower: Vec<F>, upper: Vec<F> },
}

impl<F: Scalar> ConvexFeasibleSet<F> {
    pub fn whole_space(dim: usize) -> Self {
        ConvexFeasibleSet::WholeSpace { dim }
    }

    pub fn ball(center: Vec<F>, radius: F) -> Result<Self> {
        if !(radius > F::zero()) {
            return Err(ShbError::invalid("radius", format!("must be > 0, got {radius}")));
        }
        Ok(ConvexFeasibleSet::Ball { center, radius })
    }

    /// Ball centered at the origin.
    pub fn origin_ball(dim: usize, radius: F) -> Result<Self> {
        Self::ball(vec![F::zero(); dim], radius)
    }

    pub fn boxed(lower: Vec<F>, upper: Vec<F>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(ShbError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(ShbError::invalid("bounds", "lower must be <= upper componentwise"));
        }
        Ok(ConvexFeasibleSet::Box { lower, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFeasibleSet::WholeSpace { dim } => *dim,
            ConvexFeasibleSet::Ball { center, .. } => center.len(),
            ConvexFeasibleSet::Box { lower, .. } => lower.len(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConvexFeasibleSet::WholeSpace { .. } => false,
            ConvexFeasibleSet::Ball { .. } => true,
            ConvexFeasibleSet::Box { lower, upper } => {
                lower.iter().all(|l| l.is_finite()) && upper.iter().all(|u| u.is_finite())
            }
        }
    }

    fn check_dim(&self, y: &[F]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(ShbError::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(())
    }

    /// Exact Euclidean projection onto the set.
    ///
    /// For a ball, `y == center` projects to the center itself.
    pub fn project(&self, y: &[F]) -> Result<Vec<F>> {
        self.check_dim(y)?;
        Ok(match self {
            ConvexFeasibleSet::WholeSpace { .. } => y.to_vec(),
            ConvexFeasibleSet::Ball { center, radius } => {
                let d = linalg::dist(y, center);
                if d <= *radius {
                    y.to_vec()
                } else {
                    let s = *radius / d;
                    center
                        .iter()
                        .zip(y)
                        .map(|(&c, &yi)| c + s * (yi - c))
                        .collect()
                }
            }
            ConvexFeasibleSet::Box { lower, upper } => y
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&yi, (&l, &u))| yi.max(l).min(u))
                .collect(),
        })
    }

    /// True iff `x` lies within `tol` of the set (Euclidean for the ball,
    /// componentwise for the box).
    pub fn membership(&self, x: &[F], tol: F) -> Result<bool> {
        self.check_dim(x)?;
        Ok(match self {
            ConvexFeasibleSet::WholeSpace { .. } => true,
            ConvexFeasibleSet::Ball { center, radius } => {
                linalg::dist(x, center) <= *radius + tol
            }
            ConvexFeasibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&xi, (&l, &u))| xi >= l - tol && xi <= u + tol),
        })
    }

    /// The indicator function: 0 on the set, +inf otherwise.
    ///
    /// Membership is decided with a fixed tolerance of 1e-12 so diagnostics
    /// are reproducible.
    pub fn indicator_value(&self, x: &[F]) -> Result<F> {
        let tol = F::from_f64_lossy(1e-12);
        Ok(if self.membership(x, tol)? {
            F::zero()
        } else {
            F::infinity()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type Set = ConvexFeasibleSet<f64>;

    #[test]
    fn whole_space_projection_is_identity() {
        let s = Set::whole_space(2);
        assert_eq!(s.project(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(s.indicator_value(&[7.0, -1.0]).unwrap(), 0.0);
        assert!(s.membership(&[1e9, -1e9], 0.0).unwrap());
    }

    #[test]
    fn ball_projection_radial_scaling() {
        let s = Set::origin_ball(2, 1.0).unwrap();
        let p = s.project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15);
        assert!((p[1] - 0.8).abs() < 1e-15);
        // tie at the center
        let c = s.project(&[0.0, 0.0]).unwrap();
        assert_eq!(c, vec![0.0, 0.0]);
    }

    #[test]
    fn box_projection_clamps() {
        let s = Set::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(s.project(&[-1.0, 0.5]).unwrap(), vec![0.0, 0.5]);
    }

    #[test]
    fn ball_membership_boundary() {
        let s = Set::origin_ball(2, 1.0).unwrap();
        assert!(s.membership(&[1.0, 0.0], 0.0).unwrap());
        assert!(!s.membership(&[1.1, 0.0], 0.05).unwrap());
    }

    #[test]
    fn box_indicator() {
        let s = Set::boxed(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(s.indicator_value(&[0.5]).unwrap(), 0.0);
        assert!(s.indicator_value(&[2.0]).unwrap().is_infinite());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let s = Set::origin_ball(3, 1.0).unwrap();
        assert!(matches!(
            s.project(&[1.0, 2.0]),
            Err(ShbError::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(s.membership(&[1.0], 0.0).is_err());
    }

    #[test]
    fn invalid_constructions_rejected() {
        assert!(Set::origin_ball(2, 0.0).is_err());
        assert!(Set::boxed(vec![1.0], vec![0.0]).is_err());
    }

    fn arb_set() -> impl Strategy<Value = Set> {
        let dim = 3usize;
        let coord = -5.0f64..5.0;
        prop_oneof![
            Just(Set::whole_space(dim)),
            (proptest::collection::vec(coord.clone(), dim), 0.1f64..4.0)
                .prop_map(|(c, r)| Set::ball(c, r).unwrap()),
            (
                proptest::collection::vec(coord.clone(), dim),
                proptest::collection::vec(0.01f64..4.0, dim)
            )
                .prop_map(|(l, w)| {
                    let u: Vec<f64> = l.iter().zip(&w).map(|(a, b)| a + b).collect();
                    Set::boxed(l, u).unwrap()
                }),
        ]
    }

    proptest! {
        #[test]
        fn projection_idempotent(set in arb_set(), y in proptest::collection::vec(-10.0f64..10.0, 3)) {
            let p = set.project(&y).unwrap();
            let pp = set.project(&p).unwrap();
            prop_assert!(crate::linalg::dist(&p, &pp) <= 1e-12);
            prop_assert!(set.membership(&p, 1e-10).unwrap());
        }

        #[test]
        fn projection_nonexpansive(
            set in arb_set(),
            y1 in proptest::collection::vec(-10.0f64..10.0, 3),
            y2 in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            let p1 = set.project(&y1).unwrap();
            let p2 = set.project(&y2).unwrap();
            prop_assert!(crate::linalg::dist(&p1, &p2) <= crate::linalg::dist(&y1, &y2) + 1e-10);
        }

        #[test]
        fn projection_firmly_nonexpansive(
            set in arb_set(),
            y1 in proptest::collection::vec(-10.0f64..10.0, 3),
            y2 in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            let p1 = set.project(&y1).unwrap();
            let p2 = set.project(&y2).unwrap();
            let dp = crate::linalg::sub(&p1, &p2);
            let dy = crate::linalg::sub(&y1, &y2);
            prop_assert!(crate::linalg::norm_sq(&dp) <= crate::linalg::dot(&dp, &dy) + 1e-10);
        }

        #[test]
        fn projection_optimality_condition(
            set in arb_set(),
            y in proptest::collection::vec(-10.0f64..10.0, 3),
            z0 in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            // z is an arbitrary feasible point
            let z = set.project(&z0).unwrap();
            let p = set.project(&y).unwrap();
            let lhs = crate::linalg::dot(
                &crate::linalg::sub(&p, &y),
                &crate::linalg::sub(&z, &p),
            );
            prop_assert!(lhs >= -1e-10);
        }
    }
}
