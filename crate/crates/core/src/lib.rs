//! Stochastic heavy-ball (SHB) subgradient method for weakly convex,
//! constrained stochastic optimization.
//!
//! The crate is organized around six pieces:
//!
//! * [`geometry`] — closed convex feasible sets with exact Euclidean projections;
//! * [`oracle`] — stochastic first-order oracles (robust phase retrieval and a
//!   smooth constrained quadratic family) plus constant estimation;
//! * [`optimizer`] — the projected SHB iteration, its SGD specialization, and
//!   the heavy-ball reparameterization;
//! * [`stationarity`] — Moreau-envelope gradient estimation via an inner
//!   projected subgradient solver with an optimality certificate;
//! * [`diagnostics`] — Lyapunov functions, theorem right-hand sides, and
//!   descent monitors;
//! * [`harness`] — multi-seed experiment orchestration, aggregation, and
//!   CSV/TSV emission.
//!
//! All numeric code is generic over the scalar type through [`Scalar`];
//! concrete aliases for `f64` are exported at the crate root.

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod optimizer;
pub mod oracle;
pub mod scalar;
pub mod stationarity;

pub use error::ShbError;
pub use scalar::Scalar;

/// Default precision used by the harness and the CLI.
pub type Real = f64;

pub type ConvexFeasibleSet64 = geometry::ConvexFeasibleSet<f64>;
pub type PhaseRetrievalInstance64 = oracle::PhaseRetrievalInstance<f64>;
pub type SmoothConstrainedInstance64 = oracle::SmoothConstrainedInstance<f64>;
pub type ProblemConstants64 = oracle::ProblemConstants<f64>;
pub type ParamSchedule64 = optimizer::ParamSchedule<f64>;
pub type ShbState64 = optimizer::ShbState<f64>;
pub type Trajectory64 = optimizer::Trajectory<f64>;
pub type MoreauConfig64 = stationarity::MoreauConfig<f64>;
pub type MoreauEstimate64 = stationarity::MoreauEstimate<f64>;
