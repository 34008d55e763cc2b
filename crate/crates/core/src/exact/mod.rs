//! Exact rational linear algebra and polyhedral computation.

pub mod dd;
pub mod distance;
pub mod faces;
pub mod linalg;
pub mod lp;
pub mod poly;
pub mod project;
pub mod rational;

pub use dd::{
    cone_generators, cone_subset_of_union, convert_rep, convert_rep_v, dual_cone, dual_cone_h, hpoly_equal,
    hpoly_subset, vpoly_contains, vpoly_in_hpoly,
};
pub use distance::{distance_point_polyhedron, PolyhedronProjector};
pub use faces::enumerate_faces;
pub use linalg::{linear_kernel, Matrix};
pub use lp::{is_feasible, lp_feasible, lp_maximize, lp_minimize, Feasibility, LpResult};
pub use poly::{Constraint, ExactError, Face, HPoly, VPoly};
pub use project::project_out;
pub use rational::{fmt_rational, parse_rational, rat, ratio, rvec, Rational};
