//! Domain types for online convex optimization instances: decision vectors,
//! feasible sets with projections, loss and constraint oracles, and the
//! boundedness constants the learners' schedules are built from.

mod instance;
mod oracle;
mod set;
mod vector;

pub use instance::{check_assumption_bounds, AssumptionConstants, BoundsReport, ProblemInstance, Round};
pub use oracle::{
    AffineConstraints, ConstraintOracle, FnConstraints, FnLoss, LeastSquaresLoss, LinearLoss, LossOracle,
    NoConstraints, NormConstraint, OracleDescription, SeparableQuadraticLoss, SharedConstraints, SharedLoss,
    TrackingLoss, ZeroLoss,
};
pub use set::FeasibleSet;
pub use vector::DecisionVector;
