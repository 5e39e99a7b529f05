//! Hyperbolic structures with geodesic boundary on partially truncated
//! triangulations.
//!
//! A triangulation is a finite set of tetrahedra with all faces glued in
//! pairs by odd permutations. Each tetrahedron carries at most one ideal
//! vertex; non-ideal vertices are truncated, and the truncation triangles
//! assemble into the geodesic boundary while ideal vertices assemble into
//! toric cusps. A point of the moduli domain assigns a dihedral angle to
//! every tetrahedron edge; the solver finds angle assignments for which the
//! glued hyperbolic tetrahedra match up into a smooth (possibly deformed)
//! structure on the manifold.
//!
//! Module map:
//! - [`triangulation`]: file parsing, gluing combinatorics, edge classes,
//!   cusp links, peripheral curves, census-lite enumeration.
//! - [`geometry`]: per-tetrahedron trigonometry (edge lengths, horoball
//!   offsets, cusp triangle moduli).
//! - [`equations`]: the reduced consistency system F (length and offset
//!   matching) and A (angle sums), with its finite-difference Jacobian.
//! - [`holonomy`]: similarity holonomy of peripheral curves and the
//!   completeness parameters u, v.
//! - [`solver`]: damped Newton solves for complete, deformed and cone
//!   structures; tangent bases of the solution set.
//! - [`analysis`]: Dehn filling coefficients, cusp shape estimates,
//!   filling search, second-order flatness checks.

pub mod analysis;
pub mod equations;
pub mod geometry;
pub mod holonomy;
pub mod solver;

pub mod triangulation;

mod error;
pub use error::Error;

pub use nalgebra;
pub use num_complex;

/// Centralized numerical tolerances. Each constant states the contract it
/// serves; changing one is an interface change, not a tuning knob.
pub mod tol {
    /// Half-width of the interval below 1 in which an acosh argument is
    /// treated as exactly 1 (edge length 0). Arguments below `1 - ACOSH_CLAMP`
    /// are hard domain errors.
    pub const ACOSH_CLAMP: f64 = 1e-12;

    /// Default residual infinity-norm at which Newton declares convergence.
    pub const RESIDUAL: f64 = 1e-11;

    /// Base relative step for central finite differences.
    pub const FD_STEP: f64 = 1e-6;

    /// Times a finite-difference step may be halved when a trial point
    /// leaves the moduli domain before giving up.
    pub const FD_MAX_HALVINGS: usize = 8;

    /// Relative singular-value threshold below which a direction counts as
    /// null when computing ranks and tangent spaces.
    pub const RANK_TOL: f64 = 1e-8;

    /// Singular-value gap ratio under which a rank decision is flagged as
    /// ambiguous in reports.
    pub const RANK_GAP_WARN: f64 = 10.0;

    /// Default Newton iteration cap.
    pub const MAX_ITER: usize = 100;

    /// Step halvings allowed in the Newton line search.
    pub const LINE_SEARCH_MAX_HALVINGS: usize = 30;

    /// Random restarts attempted after a failed Newton solve.
    pub const MAX_RETRIES: usize = 5;

    /// Largest continuation step (in target space) for deformation and
    /// filling paths.
    pub const CONTINUATION_MAX_STEP: f64 = 0.1;

    /// Residual for the slice solves behind the rigidity probes. The
    /// compact geometry responds at fourth order, near 1e-12 for the
    /// probe step, so those solves must land well below that.
    pub const RIGIDITY_SOLVE: f64 = 1e-14;
}
