//! Critical and noncritical multipliers for variational systems
//! `Ψ(x,v) = 0, v ∈ ∂θ(Φ(x))` with convex piecewise-linear `θ`.

pub mod convergence;
pub mod cpwl;
pub mod criticality;
pub mod exact;
pub mod instances;
pub mod smooth;
pub mod stability;
pub mod varsys;
