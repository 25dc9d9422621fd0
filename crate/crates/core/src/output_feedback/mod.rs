//! Dynamic output-feedback policy optimization: LQG and H-infinity.
//!
//! Both problems share the same lifting machinery: a policy `K` is lifted
//! together with a Lyapunov certificate `P ∈ S²ⁿ₊₊` whose off-diagonal block
//! `P₁₂` is invertible, and the classical output-feedback change of variables
//! maps the lifted set diffeomorphically onto an LMI-described convex set
//! times `GL_n` (the group of similarity transformations). LQG additionally
//! carries a trace certificate `Γ`.

mod hinf;
mod lqg;
mod scherer;

pub use hinf::*;
pub use lqg::*;
pub use scherer::*;

use crate::linalg::{Mat, SymMat};
use crate::plant::DynamicPolicy;

/// Default relative margin on `σ_min(P₁₂)` below which a certificate is not
/// accepted as a lifted-set member (invertibility is an open condition and
/// cannot be certified at exactly zero).
pub const P12_MARGIN: f64 = 1e-6;

/// Member of the LQG lifted set: strictly proper policy, level, Lyapunov
/// certificate with invertible off-diagonal block, and trace certificate.
#[derive(Debug, Clone)]
pub struct LqgLiftedPoint {
    pub policy: DynamicPolicy,
    pub gamma: f64,
    pub p: SymMat,
    pub trace_cert: SymMat,
}

/// Member of the LQG convex image set.
#[derive(Debug, Clone)]
pub struct LqgConvexPoint {
    pub gamma: f64,
    /// Blocks of `Λ = [[0, F], [H, M]]`.
    pub f: Mat,
    pub h: Mat,
    pub m: Mat,
    pub x: SymMat,
    pub y: SymMat,
    pub trace_cert: SymMat,
}

/// Member of the output-feedback H-infinity lifted set.
#[derive(Debug, Clone)]
pub struct HinfOfLiftedPoint {
    pub policy: DynamicPolicy,
    pub gamma: f64,
    pub p: SymMat,
}

/// Member of the output-feedback H-infinity convex image set.
#[derive(Debug, Clone)]
pub struct HinfOfConvexPoint {
    pub gamma: f64,
    /// Blocks of `Λ = [[G, F], [H, M]]`.
    pub g: Mat,
    pub f: Mat,
    pub h: Mat,
    pub m: Mat,
    pub x: SymMat,
    pub y: SymMat,
}

/// The auxiliary `GL_n` coordinate (realized as `P₁₂`).
#[derive(Debug, Clone)]
pub struct AuxGl {
    pub xi: Mat,
}

impl AuxGl {
    /// Smallest singular value, the reported invertibility margin.
    pub fn sigma_min(&self) -> f64 {
        let svd = self.xi.clone().svd(false, false);
        svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}
