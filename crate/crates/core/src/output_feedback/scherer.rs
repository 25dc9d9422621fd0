//! The output-feedback change of variables and its inverse.
//!
//! Forward direction (policy plus certificate to convex coordinates):
//!
//! ```text
//! Φ_M(K, P) = P₁₂B_K C₂(P⁻¹)₁₁ + P₁₁B₂C_K(P⁻¹)₂₁
//!             + P₁₂A_K(P⁻¹)₂₁ + P₁₁(A + B₂D_K C₂)(P⁻¹)₁₁
//! Φ_Λ(K, P) = [D_K,                    D_K C₂(P⁻¹)₁₁ + C_K(P⁻¹)₂₁;
//!              P₁₁B₂D_K + P₁₂B_K,      Φ_M(K, P)]
//! ```
//!
//! with convex coordinates `X = (P⁻¹)₁₁`, `Y = P₁₁` and auxiliary `Ξ = P₁₂`.
//! Inverse direction:
//!
//! ```text
//! Ψ_K(Λ, X, Y, Ξ) = [I, 0; YB₂, Ξ]⁻¹ (Λ - [0, 0; 0, YAX])
//!                   [I, C₂X; 0, -Ξ⁻¹(Y - X⁻¹)X]⁻¹
//! Ψ_P(X, Y, Ξ)    = [Y, Ξ; Ξᵀ, Ξᵀ(Y - X⁻¹)⁻¹Ξ]
//! ```

use crate::linalg::{Mat, SymMat};
use crate::plant::{DynamicPolicy, OutputPlant};
use crate::{Error, Result};

/// The blocks of `P` and `P⁻¹` used throughout the maps.
#[derive(Debug, Clone)]
pub struct PBlocks {
    pub p11: Mat,
    pub p12: Mat,
    pub pinv11: Mat,
    pub pinv21: Mat,
}

/// Splits a positive definite `P ∈ S²ⁿ` into the blocks of `P` and `P⁻¹`.
pub fn p_blocks(p: &SymMat) -> Result<PBlocks> {
    let dim = p.dim();
    if dim % 2 != 0 {
        return Err(Error::Dimension("P must have even dimension 2n".into()));
    }
    let n = dim / 2;
    let chol = p
        .mat()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("P is not positive definite".into()))?;
    let p_inv = chol.inverse();
    Ok(PBlocks {
        p11: p.mat().view((0, 0), (n, n)).into_owned(),
        p12: p.mat().view((0, n), (n, n)).into_owned(),
        pinv11: p_inv.view((0, 0), (n, n)).into_owned(),
        pinv21: p_inv.view((n, 0), (n, n)).into_owned(),
    })
}

/// Smallest singular value of `P₁₂` relative to `‖P‖₂` (invertibility margin).
pub fn p12_relative_margin(p: &SymMat) -> Result<f64> {
    let blocks = p_blocks(p)?;
    let svd = blocks.p12.svd(false, false);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = p.max_eig().abs().max(1e-300);
    Ok(smin / scale)
}

/// `Φ_M(K, P)`.
pub fn phi_m(plant: &OutputPlant, k: &DynamicPolicy, pb: &PBlocks) -> Mat {
    &pb.p12 * &k.bk * &plant.c2 * &pb.pinv11
        + &pb.p11 * &plant.b2 * &k.ck * &pb.pinv21
        + &pb.p12 * &k.ak * &pb.pinv21
        + &pb.p11 * (&plant.a + &plant.b2 * &k.dk * &plant.c2) * &pb.pinv11
}

/// `Φ_Λ(K, P)` in packed form, together with `(X, Y, Ξ)`.
pub fn phi_lambda(
    plant: &OutputPlant,
    k: &DynamicPolicy,
    p: &SymMat,
) -> Result<(Mat, SymMat, SymMat, Mat)> {
    let pb = p_blocks(p)?;
    let m = plant.input_dim();
    let pdim = plant.output_dim();
    let n = plant.state_dim();
    let f = &k.dk * &plant.c2 * &pb.pinv11 + &k.ck * &pb.pinv21;
    let h = &pb.p11 * &plant.b2 * &k.dk + &pb.p12 * &k.bk;
    let mm = phi_m(plant, k, &pb);
    let mut lambda = Mat::zeros(m + n, pdim + n);
    lambda.view_mut((0, 0), (m, pdim)).copy_from(&k.dk);
    lambda.view_mut((0, pdim), (m, n)).copy_from(&f);
    lambda.view_mut((m, 0), (n, pdim)).copy_from(&h);
    lambda.view_mut((m, pdim), (n, n)).copy_from(&mm);
    Ok((
        lambda,
        SymMat::symmetrize(&pb.pinv11),
        SymMat::symmetrize(&pb.p11),
        pb.p12,
    ))
}

fn schur_gap(x: &SymMat, y: &SymMat) -> Result<Mat> {
    let x_chol = x
        .mat()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("X is not positive definite".into()))?;
    let gap = y.mat() - x_chol.inverse();
    let gap_s = SymMat::symmetrize(&gap);
    if gap_s.min_eig() <= 0.0 {
        return Err(Error::Degenerate(
            "[X, I; I, Y] is not positive definite (Y - X^{-1} not PD)".into(),
        ));
    }
    Ok(gap_s.into_mat())
}

/// `Ψ_P(X, Y, Ξ) = [Y, Ξ; Ξᵀ, Ξᵀ(Y - X⁻¹)⁻¹Ξ]`.
pub fn psi_p(x: &SymMat, y: &SymMat, xi: &Mat) -> Result<SymMat> {
    let n = x.dim();
    if y.dim() != n || xi.nrows() != n || xi.ncols() != n {
        return Err(Error::Dimension("psi_p operands must all be n x n".into()));
    }
    let gap = schur_gap(x, y)?;
    let gap_chol = SymMat::symmetrize(&gap)
        .into_mat()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("Y - X^{-1} is not positive definite".into()))?;
    let p22 = xi.transpose() * gap_chol.solve(xi);
    let mut p = Mat::zeros(2 * n, 2 * n);
    p.view_mut((0, 0), (n, n)).copy_from(y.mat());
    p.view_mut((0, n), (n, n)).copy_from(xi);
    p.view_mut((n, 0), (n, n)).copy_from(&xi.transpose());
    p.view_mut((n, n), (n, n)).copy_from(&p22);
    Ok(SymMat::symmetrize(&p))
}

/// `Ψ_K(Λ, X, Y, Ξ)` as a dynamic policy. `lambda` is packed
/// `[[G, F], [H, M]]` with `G` of shape `m x p`.
pub fn psi_k(
    plant: &OutputPlant,
    lambda: &Mat,
    x: &SymMat,
    y: &SymMat,
    xi: &Mat,
) -> Result<DynamicPolicy> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    let pdim = plant.output_dim();
    if lambda.nrows() != m + n || lambda.ncols() != pdim + n {
        return Err(Error::Dimension("lambda must be (m+n) x (p+n)".into()));
    }
    let gap = schur_gap(x, y)?;
    let xi_lu = xi.clone().lu();
    if xi_lu.determinant().abs() == 0.0 {
        return Err(Error::Singular("Ξ is singular".into()));
    }

    // mid = Λ - [0, 0; 0, Y A X]
    let mut mid = lambda.clone();
    {
        let yax = y.mat() * &plant.a * x.mat();
        let mut view = mid.view_mut((m, pdim), (n, n));
        view -= &yax;
    }

    // left = [I, 0; Y B₂, Ξ]; right = [I, C₂X; 0, -Ξ⁻¹(Y - X⁻¹)X].
    let mut left = Mat::zeros(m + n, m + n);
    left.view_mut((0, 0), (m, m)).copy_from(&Mat::identity(m, m));
    left.view_mut((m, 0), (n, m))
        .copy_from(&(y.mat() * &plant.b2));
    left.view_mut((m, m), (n, n)).copy_from(xi);

    let pi = -xi_lu
        .solve(&(&gap * x.mat()))
        .ok_or_else(|| Error::Singular("Ξ is singular".into()))?;
    let mut right = Mat::zeros(pdim + n, pdim + n);
    right
        .view_mut((0, 0), (pdim, pdim))
        .copy_from(&Mat::identity(pdim, pdim));
    right
        .view_mut((0, pdim), (pdim, n))
        .copy_from(&(&plant.c2 * x.mat()));
    right.view_mut((pdim, pdim), (n, n)).copy_from(&pi);

    // K = left⁻¹ mid right⁻¹ via two solves.
    let left_lu = left.lu();
    let tmp = left_lu
        .solve(&mid)
        .ok_or_else(|| Error::Singular("left factor singular".into()))?;
    let right_t_lu = right.transpose().lu();
    let packed = right_t_lu
        .solve(&tmp.transpose())
        .ok_or_else(|| Error::Singular("right factor singular".into()))?
        .transpose();
    DynamicPolicy::from_packed(&packed, m, pdim)
}

/// The congruence matrix `T = [(P⁻¹)₁₁, I; (P⁻¹)₂₁, 0]`, which satisfies
/// `PT = [I, P₁₁; 0, P₁₂ᵀ]` and is invertible whenever `P₁₂` is.
pub fn congruence_t(p: &SymMat) -> Result<Mat> {
    let pb = p_blocks(p)?;
    let n = pb.p11.nrows();
    let mut t = Mat::zeros(2 * n, 2 * n);
    t.view_mut((0, 0), (n, n)).copy_from(&pb.pinv11);
    t.view_mut((0, n), (n, n)).copy_from(&Mat::identity(n, n));
    t.view_mut((n, 0), (n, n)).copy_from(&pb.pinv21);
    Ok(t)
}

/// `diag(T, I_k)ᵀ M diag(T, I_k)` for congruence checks.
pub fn congruence_apply(t: &Mat, extra: usize, m: &Mat) -> Mat {
    let dim = t.nrows() + extra;
    let mut big = Mat::identity(dim, dim);
    big.view_mut((0, 0), (t.nrows(), t.ncols())).copy_from(t);
    big.transpose() * m * big
}
