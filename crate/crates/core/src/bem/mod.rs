//! Exterior Helmholtz scattering off rigid convex objects by the boundary
//! element method, plus the analytic rigid-cylinder series used to validate it.

mod cylinder;
mod kernel;
mod mesh;
mod solve;

pub use cylinder::analytic_cylinder;
pub use kernel::{incident_normal_derivative, incident_pressure};
pub use mesh::{build_mesh, BoundaryMesh, Segment};
pub use solve::{assemble, exterior_pressure, solve_surface, total_pressure, SurfaceSolution, MAX_CONDITION};
