//! Policy optimization for optimal and robust control with convex lifting.
//!
//! The crate evaluates the classical nonconvex control costs (LQR, state- and
//! output-feedback H-infinity, LQG, QI-distributed) directly in policy space,
//! and pairs each of them with its lifted convex reformulation: lifted sets of
//! (policy, level, Lyapunov certificate) tuples, the change-of-variables
//! diffeomorphisms onto LMI-described convex sets, and semidefinite programs
//! whose optima equal the policy-space optima. Analytic gradients and Clarke
//! subdifferentials allow stationarity checks, and non-degenerate stationary
//! points can be certified globally optimal by comparing against the SDP value.
//!
//! Modules:
//! - [`linalg`]: dense kernels (eigenvalues, Lyapunov, Riccati, definiteness).
//! - [`plant`]: problem data and closed-loop assembly.
//! - [`norms`]: H2 and H-infinity norms with LMI certificates.
//! - [`conic`]: block-LMI modeling and a primal-dual interior-point solver.
//! - [`state_feedback`]: LQR and state-feedback H-infinity liftings.
//! - [`output_feedback`]: LQG and output-feedback H-infinity liftings.
//! - [`distributed`]: finite-horizon distributed control under quadratic
//!   invariance.

pub mod conic;
pub mod distributed;
pub mod linalg;
pub mod norms;
pub mod output_feedback;
pub mod plant;
pub mod sampling;
pub mod state_feedback;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
