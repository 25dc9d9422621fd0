//! Dense real matrix kernels sized for desk-scale control problems
//! (state dimension up to a few tens).
//!
//! Everything here is deterministic for fixed inputs: no randomized pivoting,
//! no threading.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Dense real matrix, row-major semantics at the API boundary.
pub type Mat = DMatrix<f64>;

/// Default eigenvalue tolerance used by stability tests.
pub const EIG_TOL: f64 = 1e-10;

/// Symmetric matrix: stored dense, symmetrized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat(Mat);

impl SymMat {
    /// Builds a symmetric matrix from `m`, mirroring the two halves.
    ///
    /// Returns an error if `m` is not square or not symmetric up to a modest
    /// relative tolerance; tiny asymmetry from arithmetic noise is folded in
    /// by averaging.
    pub fn new(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.amax().max(1.0);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-7 * scale {
            return Err(Error::Dimension(format!(
                "matrix is not symmetric (max asymmetry {asym:.3e})"
            )));
        }
        Ok(Self::symmetrize(&m))
    }

    /// Averages `m` with its transpose. Use when the input is symmetric by
    /// construction and only floating-point noise must be removed.
    pub fn symmetrize(m: &Mat) -> Self {
        SymMat((m + m.transpose()) * 0.5)
    }

    /// Identity of dimension `n`.
    pub fn identity(n: usize) -> Self {
        SymMat(Mat::identity(n, n))
    }

    /// Zero matrix of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        SymMat(Mat::zeros(n, n))
    }

    /// Scalar as a 1x1 symmetric matrix.
    pub fn scalar(v: f64) -> Self {
        SymMat(Mat::from_element(1, 1, v))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn min_eig(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.eigenvalues()[0]
    }

    pub fn max_eig(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        *self.eigenvalues().last().unwrap()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Symmetric PSD square root, clipping eigenvalues below `CLIP` to zero.
    ///
    /// Numerical noise must not break assembly of weight matrices, so small
    /// negative eigenvalues are treated as zero rather than rejected.
    pub fn sqrt_psd(&self) -> Result<Mat> {
        const CLIP: f64 = 1e-12;
        let n = self.dim();
        let se = self.0.clone().symmetric_eigen();
        let scale = self.0.amax().max(1.0);
        let mut d = DVector::zeros(n);
        for i in 0..n {
            let ev = se.eigenvalues[i];
            if ev < -1e-8 * scale {
                return Err(Error::Precondition(format!(
                    "matrix is not positive semidefinite (eigenvalue {ev:.3e})"
                )));
            }
            d[i] = if ev <= CLIP { 0.0 } else { ev.sqrt() };
        }
        Ok(&se.eigenvectors * Mat::from_diagonal(&d) * se.eigenvectors.transpose())
    }
}

impl From<SymMat> for Mat {
    fn from(s: SymMat) -> Mat {
        s.0
    }
}

/// Definiteness classification against a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
}

/// Classifies a symmetric matrix by its minimum eigenvalue against `tol`.
pub fn schur_psd_check(m: &SymMat, tol: f64) -> Definiteness {
    let min = m.min_eig();
    if min > tol {
        Definiteness::PositiveDefinite
    } else if min >= -tol {
        Definiteness::PositiveSemidefinite
    } else {
        Definiteness::Indefinite
    }
}

fn require_square(a: &Mat, what: &str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Real parts of all eigenvalues of a square matrix, in no particular order
/// (deterministic for a fixed input).
pub fn eig_real_parts(a: &Mat) -> Result<Vec<f64>> {
    require_square(a, "eigenvalue input")?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("matrix has non-finite entries".into()));
    }
    Ok(a.complex_eigenvalues().iter().map(|c| c.re).collect())
}

/// True iff every eigenvalue of `a` has real part strictly below
/// `-margin - EIG_TOL * scale`.
pub fn is_hurwitz(a: &Mat, margin: f64) -> Result<bool> {
    is_hurwitz_with(a, margin, EIG_TOL)
}

/// [`is_hurwitz`] with an explicit eigenvalue tolerance.
pub fn is_hurwitz_with(a: &Mat, margin: f64, tol: f64) -> Result<bool> {
    let re = eig_real_parts(a)?;
    let scale = a.amax().max(1.0);
    Ok(re.iter().all(|&r| r < -margin - tol * scale))
}

/// Column-major vectorization.
fn vec_of(m: &Mat) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Solves the continuous-time Lyapunov equation `A X + X Aᵀ + Q = 0`.
///
/// Requires `A` Hurwitz (margin 0), which guarantees a unique solution. Uses
/// Kronecker vectorization, `O(n^6)`, acceptable at desk scale. The output is
/// symmetrized.
pub fn solve_lyapunov_ct(a: &Mat, q: &SymMat) -> Result<SymMat> {
    require_square(a, "Lyapunov A")?;
    let n = a.nrows();
    if q.dim() != n {
        return Err(Error::Dimension(format!(
            "Lyapunov Q must be {n}x{n}, got {}x{}",
            q.dim(),
            q.dim()
        )));
    }
    if !is_hurwitz(a, 0.0)? {
        return Err(Error::LyapunovSingular(
            "A is not Hurwitz; the Lyapunov equation has no unique stable solution".into(),
        ));
    }
    if n == 0 {
        return Ok(SymMat::zeros(0));
    }
    // (I (x) A + A (x) I) vec(X) = -vec(Q)
    let eye = Mat::identity(n, n);
    let op = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -vec_of(q.mat());
    let lu = op.lu();
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::LyapunovSingular("Kronecker system is singular".into()))?;
    let mut xm = Mat::from_column_slice(n, n, x.as_slice());
    // One pass of iterative refinement against the residual.
    let resid = a * &xm + &xm * a.transpose() + q.mat();
    if let Some(corr) = lu.solve(&(-vec_of(&resid))) {
        xm += Mat::from_column_slice(n, n, corr.as_slice());
    }
    Ok(SymMat::symmetrize(&xm))
}

/// Newton polish for the Riccati solution: one Kleinman step.
fn riccati_newton_step(a: &Mat, b: &Mat, q: &SymMat, r_inv_bt: &Mat, p: &SymMat) -> Result<SymMat> {
    let k = r_inv_bt * p.mat(); // R^{-1} Bᵀ P
    let acl = a - b * &k;
    // (A-BK)ᵀ P+ + P+ (A-BK) + Q + Kᵀ R K = 0; note Kᵀ R K = Kᵀ (Bᵀ P)ᵀ ... use R K = Bᵀ P form:
    // Kᵀ R K = P B R^{-1} Bᵀ P.
    let qhat = SymMat::symmetrize(&(q.mat() + p.mat() * b * r_inv_bt * p.mat()));
    solve_lyapunov_ct(&acl.transpose(), &qhat)
}

/// Solves the continuous-time algebraic Riccati equation
/// `Aᵀ P + P A + Q - P B R⁻¹ Bᵀ P = 0` for the unique stabilizing `P ⪰ 0`.
///
/// Requires `(A, B)` stabilizable and `(Q^{1/2}, A)` detectable. The stable
/// invariant subspace of the `2n x 2n` Hamiltonian is extracted with a scaled
/// matrix sign iteration, then the solution is polished with Newton (Kleinman)
/// steps until the relative residual is at machine level.
pub fn solve_riccati_ct(a: &Mat, b: &Mat, q: &SymMat, r: &SymMat) -> Result<SymMat> {
    require_square(a, "Riccati A")?;
    let n = a.nrows();
    let m = b.ncols();
    if b.nrows() != n || q.dim() != n || r.dim() != m {
        return Err(Error::Dimension(
            "Riccati data has inconsistent dimensions".into(),
        ));
    }
    let r_chol = r
        .mat()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Precondition("Riccati R must be positive definite".into()))?;
    let r_inv_bt = r_chol.solve(&b.transpose());
    let g = b * &r_inv_bt; // B R^{-1} Bᵀ

    // Hamiltonian [[A, -G], [-Q, -Aᵀ]].
    let mut h = Mat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q.mat()));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    // Matrix sign iteration with determinant scaling.
    let mut s = h.clone();
    let mut converged = false;
    for _ in 0..100 {
        let lu = s.clone().lu();
        let det = lu.determinant();
        if !det.is_finite() || det == 0.0 {
            return Err(Error::RiccatiFailure(
                "Hamiltonian sign iteration hit a singular iterate (eigenvalues on the imaginary axis?)".into(),
            ));
        }
        let s_inv = lu
            .try_inverse()
            .ok_or_else(|| Error::RiccatiFailure("sign iteration: inversion failed".into()))?;
        let c = det.abs().powf(-1.0 / (2.0 * n as f64));
        let s_next = (&s * c + s_inv / c) * 0.5;
        let diff = (&s_next - &s).amax();
        let scale = s.amax().max(1.0);
        s = s_next;
        if diff <= 1e-13 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::RiccatiFailure(
            "Hamiltonian sign iteration did not converge".into(),
        ));
    }

    // Stable invariant subspace = range of (I - sign(H)) / 2.
    let proj = (Mat::identity(2 * n, 2 * n) - &s) * 0.5;
    let qr = proj.col_piv_qr();
    let qmat = qr.q();
    let z = qmat.columns(0, n).into_owned();
    let z1 = z.rows(0, n).into_owned();
    let z2 = z.rows(n, n).into_owned();
    let z1_lu = z1.transpose().lu();
    let p0t = z1_lu.solve(&z2.transpose()).ok_or_else(|| {
        Error::RiccatiFailure("stable subspace basis is not graph-form (Z1 singular)".into())
    })?;
    let mut p = SymMat::symmetrize(&p0t.transpose());

    // Newton polish; keep the best iterate seen.
    let rel_res = |p: &SymMat| {
        riccati_residual(a, &g, q, p) / (1.0 + q.mat().amax() + p.mat().amax())
    };
    let mut best = p.clone();
    let mut best_rel = rel_res(&p);
    for _ in 0..30 {
        if best_rel <= 1e-14 {
            break;
        }
        let k = &r_inv_bt * p.mat();
        let acl = a - b * &k;
        if !is_hurwitz(&acl, 0.0)? {
            return Err(Error::RiccatiFailure(
                "sign-function solution is not stabilizing".into(),
            ));
        }
        p = riccati_newton_step(a, b, q, &r_inv_bt, &p)?;
        let rel = rel_res(&p);
        if rel < best_rel {
            best_rel = rel;
            best = p.clone();
        } else {
            break;
        }
    }
    let p = best;

    let k = &r_inv_bt * p.mat();
    let acl = a - b * &k;
    if !is_hurwitz(&acl, 0.0)? {
        return Err(Error::RiccatiFailure(
            "computed Riccati solution is not stabilizing".into(),
        ));
    }
    if best_rel > 1e-9 {
        return Err(Error::RiccatiFailure(format!(
            "Riccati residual too large: {best_rel:.3e} relative"
        )));
    }
    Ok(p)
}

fn riccati_residual(a: &Mat, g: &Mat, q: &SymMat, p: &SymMat) -> f64 {
    (a.transpose() * p.mat() + p.mat() * a + q.mat() - p.mat() * g * p.mat()).amax()
}

/// Rank of the controllability matrix `[B, AB, ..., A^{n-1}B]`.
pub fn controllability_rank(a: &Mat, b: &Mat) -> Result<usize> {
    require_square(a, "controllability A")?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::Dimension("B row count must match A".into()));
    }
    let m = b.ncols();
    let mut ctrb = Mat::zeros(n, n * m);
    let mut blk = b.clone();
    for i in 0..n {
        ctrb.view_mut((0, i * m), (n, m)).copy_from(&blk);
        blk = a * &blk;
    }
    let svd = ctrb.svd(false, false);
    let smax = svd.singular_values.max();
    let tol = smax * (n.max(m) as f64) * f64::EPSILON;
    Ok(svd.singular_values.iter().filter(|&&sv| sv > tol).count())
}

/// True iff `(A, B)` is controllable.
pub fn is_controllable(a: &Mat, b: &Mat) -> Result<bool> {
    Ok(controllability_rank(a, b)? == a.nrows())
}

/// True iff `(C, A)` is observable.
pub fn is_observable(a: &Mat, c: &Mat) -> Result<bool> {
    is_controllable(&a.transpose(), &c.transpose())
}
