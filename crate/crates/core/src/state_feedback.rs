//! Static state-feedback policy optimization: LQR and H-infinity.
//!
//! For each cost this module provides the policy-space evaluation (cost and
//! gradient or Clarke subdifferential), the lifted set of
//! (gain, level, Lyapunov certificate) tuples, the change-of-variables maps
//! between the lifted set and its convex image, and the SDP whose optimal
//! value equals the policy-space optimum.
//!
//! LQR lifting: `(K, γ, X)` with `(A+BK)X + X(A+BK)ᵀ + W = 0` and
//! `γ ≥ tr((Q + KᵀRK)X)`, mapped by `(K, γ, X) ↦ (γ, KX, X)`.
//!
//! H-infinity lifting: `(K, γ, P)` with the 4-block bounded-real LMI `⪯ 0`,
//! mapped by `(K, γ, P) ↦ (γ, KP⁻¹, P⁻¹)`.

use nalgebra::Complex;

use crate::conic::{MatExpr, SdpProblem, SdpSolution, SolverOptions, Status};
use crate::linalg::{self, Mat, SymMat};
use crate::norms::{self, Peak};
use crate::plant::{resolvent_product, CMat, Plant, StaticGain};
use crate::{Error, Result};

/// Membership tolerance for lifted-set invariants.
pub const LIFT_TOL: f64 = 1e-8;

/// Member of the LQR lifted set.
#[derive(Debug, Clone)]
pub struct LqrLiftedPoint {
    pub gain: StaticGain,
    pub gamma: f64,
    pub x: SymMat,
}

/// Member of the LQR convex image set.
#[derive(Debug, Clone)]
pub struct LqrConvexPoint {
    pub gamma: f64,
    pub y: Mat,
    pub x: SymMat,
}

/// Member of the state-feedback H-infinity lifted set.
#[derive(Debug, Clone)]
pub struct HinfSfLiftedPoint {
    pub gain: StaticGain,
    pub gamma: f64,
    pub p: SymMat,
}

/// Member of the state-feedback H-infinity convex image set.
#[derive(Debug, Clone)]
pub struct HinfSfConvexPoint {
    pub gamma: f64,
    pub y: Mat,
    pub x: SymMat,
}

fn require_stabilizing(plant: &Plant, k: &StaticGain) -> Result<Mat> {
    let acl = plant.closed_a(k);
    if !linalg::is_hurwitz(&acl, 0.0)? {
        return Err(Error::InfiniteCost("gain does not stabilize the plant".into()));
    }
    Ok(acl)
}

/// Closed-loop Gramian `X_K`: `(A+BK)X + X(A+BK)ᵀ + W = 0`.
pub fn lqr_gramian(plant: &Plant, k: &StaticGain) -> Result<SymMat> {
    let acl = require_stabilizing(plant, k)?;
    linalg::solve_lyapunov_ct(&acl, &plant.w())
}

/// Cost-to-go certificate `P_K`: `(A+BK)ᵀP + P(A+BK) + Q + KᵀRK = 0`.
pub fn lqr_value_matrix(plant: &Plant, k: &StaticGain) -> Result<SymMat> {
    let acl = require_stabilizing(plant, k)?;
    let qk = SymMat::symmetrize(&(plant.q.mat() + k.k.transpose() * plant.r.mat() * &k.k));
    linalg::solve_lyapunov_ct(&acl.transpose(), &qk)
}

/// LQR cost `tr((Q + KᵀRK) X_K)`, cross-checked against `tr(P_K W)`.
pub fn lqr_cost(plant: &Plant, k: &StaticGain) -> Result<f64> {
    let x = lqr_gramian(plant, k)?;
    let qk = plant.q.mat() + k.k.transpose() * plant.r.mat() * &k.k;
    let via_x = (qk * x.mat()).trace();
    let p = lqr_value_matrix(plant, k)?;
    let via_p = (p.mat() * plant.w().mat()).trace();
    if (via_x - via_p).abs() > 1e-9 * (1.0 + via_x.abs()) {
        return Err(Error::Solver(format!(
            "trace formulas disagree: {via_x} vs {via_p}"
        )));
    }
    Ok(via_x)
}

/// Analytic LQR gradient `2(RK + BᵀP_K) X_K`.
pub fn lqr_gradient(plant: &Plant, k: &StaticGain) -> Result<Mat> {
    let x = lqr_gramian(plant, k)?;
    let p = lqr_value_matrix(plant, k)?;
    Ok(2.0 * (plant.r.mat() * &k.k + plant.b.transpose() * p.mat()) * x.mat())
}

/// Lifts a stabilizing gain to the LQR lifted set at level `gamma`.
pub fn lqr_lift(plant: &Plant, k: &StaticGain, gamma: f64) -> Result<LqrLiftedPoint> {
    let cost = lqr_cost(plant, k)?;
    if gamma < cost - LIFT_TOL * (1.0 + cost.abs()) {
        return Err(Error::NotInEpigraph(format!(
            "level {gamma} below the cost {cost}"
        )));
    }
    let x = lqr_gramian(plant, k)?;
    Ok(LqrLiftedPoint {
        gain: k.clone(),
        gamma,
        x,
    })
}

/// Forward map `(K, γ, X) ↦ (γ, KX, X)`.
pub fn lqr_phi(pt: &LqrLiftedPoint) -> LqrConvexPoint {
    LqrConvexPoint {
        gamma: pt.gamma,
        y: &pt.gain.k * pt.x.mat(),
        x: pt.x.clone(),
    }
}

/// Inverse map `(γ, Y, X) ↦ (YX⁻¹, γ, X)`.
pub fn lqr_psi(cp: &LqrConvexPoint) -> Result<LqrLiftedPoint> {
    let x_chol = cp.x.mat().clone().cholesky().ok_or_else(|| {
        Error::Degenerate("X is not positive definite in the convex point".into())
    })?;
    let k = x_chol.solve(&cp.y.transpose()).transpose();
    Ok(LqrLiftedPoint {
        gain: StaticGain::new(k),
        gamma: cp.gamma,
        x: cp.x.clone(),
    })
}

/// Residuals of the LQR lifted-set membership conditions:
/// `(‖(A+BK)X + X(A+BK)ᵀ + W‖, tr((Q+KᵀRK)X) - γ)`.
pub fn lqr_lift_residuals(plant: &Plant, pt: &LqrLiftedPoint) -> (f64, f64) {
    let acl = plant.closed_a(&pt.gain);
    let lyap = (&acl * pt.x.mat() + pt.x.mat() * acl.transpose() + plant.w().mat()).amax();
    let qk = plant.q.mat() + pt.gain.k.transpose() * plant.r.mat() * &pt.gain.k;
    let slack = (qk * pt.x.mat()).trace() - pt.gamma;
    (lyap, slack)
}

/// Builds the LQR SDP over `(γ, Y, X, T)`:
///
/// ```text
///   min γ  s.t.  AX + BY + XAᵀ + YᵀBᵀ + W = 0,   X ≻ 0,
///                [X, YᵀR^{1/2}; R^{1/2}Y, T] ⪰ 0,
///                γ - tr(QX) - tr(T) ≥ 0.
/// ```
pub fn lqr_sdp(plant: &Plant) -> Result<SdpProblem> {
    if !plant.noise_full_rank() {
        return Err(Error::Precondition("LQR SDP requires W ≻ 0".into()));
    }
    let n = plant.state_dim();
    let m = plant.input_dim();
    let rs = plant.r.sqrt_psd()?;

    let mut prob = SdpProblem::new();
    let gv = prob.scalar("gamma");
    let yv = prob.rect("Y", m, n);
    let xv = prob.sym("X", n);
    let tv = prob.sym("T", m);
    prob.minimize(prob.lin(gv));

    let x = prob.expr(xv);
    let y = prob.expr(yv);
    let t = prob.expr(tv);

    // Lyapunov equality AX + BY + (AX + BY)ᵀ + W = 0.
    let lyap = x.lmul(&plant.a) + y.lmul(&plant.b);
    prob.eq_zero_sym(&(lyap.sym() + MatExpr::constant(plant.w().into_mat())));

    prob.psd_strict_hint(x.clone(), "X > 0");

    // Schur block for tr(X⁻¹ Yᵀ R Y) ≤ tr(T).
    let m_blk = y.lmul(&rs);
    prob.psd(
        MatExpr::block(&[&[&x, &m_blk.transpose()], &[&m_blk, &t]]),
        "matrix fractional epigraph",
    );

    prob.nonneg(
        prob.lin(gv) - x.rmul(plant.q.mat()).trace() - t.trace(),
        "level budget",
    );
    Ok(prob)
}

/// Outcome of an SDP-backed policy synthesis.
#[derive(Debug, Clone)]
pub struct SfSynthesis {
    pub status: Status,
    pub gamma: f64,
    pub gain: StaticGain,
    pub y: Mat,
    pub x: SymMat,
    pub solution: SdpSolution,
}

fn recover_gain(sol: &SdpSolution) -> Result<(f64, Mat, SymMat, StaticGain)> {
    let gamma = sol.extract_scalar("gamma")?;
    let y = sol.extract_mat("Y")?;
    let x = sol.extract_sym("X")?;
    let chol = x
        .mat()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("recovered X is not positive definite".into()))?;
    let k = chol.solve(&y.transpose()).transpose();
    Ok((gamma, y, x, StaticGain::new(k)))
}

/// Solves the LQR SDP and recovers `K = YX⁻¹`.
pub fn lqr_solve(plant: &Plant, opts: &SolverOptions) -> Result<SfSynthesis> {
    let prob = lqr_sdp(plant)?;
    let sol = prob.solve(opts)?;
    if !sol.is_usable() {
        return Err(Error::Solver(format!("LQR SDP ended with {:?}", sol.status)));
    }
    let (gamma, y, x, gain) = recover_gain(&sol)?;
    Ok(SfSynthesis {
        status: sol.status,
        gamma,
        gain,
        y,
        x,
        solution: sol,
    })
}

/// Riccati route to the LQR optimum: `K* = -R⁻¹BᵀP*`, `J* = tr(P* W)`.
pub fn lqr_riccati_optimum(plant: &Plant) -> Result<(StaticGain, f64)> {
    let p = linalg::solve_riccati_ct(&plant.a, &plant.b, &plant.q, &plant.r)?;
    let r_chol = plant
        .r
        .mat()
        .clone()
        .cholesky()
        .expect("R positive definite");
    let k = -r_chol.solve(&(plant.b.transpose() * p.mat()));
    let cost = (p.mat() * plant.w().mat()).trace();
    Ok((StaticGain::new(k), cost))
}

/// H-infinity cost `‖T_zw(K, ·)‖` of a stabilizing gain.
pub fn hinf_sf_cost(plant: &Plant, k: &StaticGain) -> Result<f64> {
    hinf_sf_cost_with(plant, k, norms::DEFAULT_REL_TOL)
}

pub fn hinf_sf_cost_with(plant: &Plant, k: &StaticGain, rel_tol: f64) -> Result<f64> {
    let acl = require_stabilizing(plant, k)?;
    let c = plant.performance_output(k)?;
    let d = Mat::zeros(c.nrows(), plant.bw.ncols());
    norms::hinf_norm_fast(&acl, &plant.bw, &c, &d, rel_tol)
}

/// Refined peak list of the closed-loop response.
pub fn hinf_sf_peaks(plant: &Plant, k: &StaticGain, rel_tol: f64) -> Result<(f64, Vec<Peak>)> {
    let acl = require_stabilizing(plant, k)?;
    let c = plant.performance_output(k)?;
    let d = Mat::zeros(c.nrows(), plant.bw.ncols());
    norms::hinf_peaks(&acl, &plant.bw, &c, &d, rel_tol)
}

/// One peak contribution to a subgradient: frequency plus a Hermitian PSD
/// weight on the maximal singular subspace at that frequency.
#[derive(Debug, Clone)]
pub struct SubgradientTerm {
    pub omega: f64,
    pub weight: CMat,
}

/// Orthonormal basis of the maximal singular subspace of `T_zw(K, jω)`
/// (columns of the left singular vectors attaining the peak value).
pub fn hinf_sf_peak_basis(plant: &Plant, k: &StaticGain, omega: f64) -> Result<CMat> {
    let acl = plant.closed_a(k);
    let c = plant.performance_output(k)?;
    let t = resolvent_product(&acl, &plant.bw, &c, None, Complex::new(0.0, omega))?;
    max_singular_subspace(&t)
}

/// Columns spanning the top eigenspace of `T Tᴴ` (relative tolerance 1e-6).
pub fn max_singular_subspace(t: &CMat) -> Result<CMat> {
    let gram = t * t.adjoint();
    let se = gram.clone().symmetric_eigen();
    let max = se.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::Degenerate("response vanishes at the peak".into()));
    }
    let keep: Vec<usize> = (0..se.eigenvalues.len())
        .filter(|&i| se.eigenvalues[i] >= max * (1.0 - 1e-6))
        .collect();
    let mut q = CMat::zeros(t.nrows(), keep.len());
    for (col, &i) in keep.iter().enumerate() {
        q.column_mut(col).copy_from(&se.eigenvectors.column(i));
    }
    Ok(q)
}

/// Evaluates the Clarke subdifferential member determined by peak weights:
///
/// ```text
/// Φ = (1/J) Σ_κ Re{ (s_κI - A_cl)⁻¹B_w · T(s_κ)ᴴ Q_κ Y_κ Q_κᴴ ·
///                   (C_z (s_κI - A_cl)⁻¹ B + [0; R^{1/2}]) }ᵀ
/// ```
///
/// with `Σ tr(Y_κ) = 1`, `Y_κ ⪰ 0` Hermitian.
pub fn hinf_sf_subgradient(
    plant: &Plant,
    k: &StaticGain,
    terms: &[SubgradientTerm],
) -> Result<Mat> {
    let acl = require_stabilizing(plant, k)?;
    let cz = plant.performance_output(k)?;
    let j = hinf_sf_cost(plant, k)?;
    let n = plant.state_dim();
    let m = plant.input_dim();
    let rs = plant.r.sqrt_psd()?;
    let to_c = |mm: &Mat| mm.map(|v| Complex::new(v, 0.0));

    let mut tr_sum = 0.0;
    let mut phi = Mat::zeros(n, m);
    for term in terms {
        let s = Complex::new(0.0, term.omega);
        let t = resolvent_product(&acl, &plant.bw, &cz, None, s)?;
        let q = max_singular_subspace(&t)?;
        if q.ncols() != term.weight.nrows() || !term.weight.is_square() {
            return Err(Error::Dimension(format!(
                "peak weight must be {0}x{0} at omega {1}",
                q.ncols(),
                term.omega
            )));
        }
        tr_sum += term.weight.trace().re;

        // (sI - A_cl)^{-1} B_w and (sI - A_cl)^{-1} B.
        let res_bw = resolvent_product(&acl, &plant.bw, &Mat::identity(n, n), None, s)?;
        let res_b = resolvent_product(&acl, &plant.b, &Mat::identity(n, n), None, s)?;
        let right = to_c(&cz) * res_b + {
            let mut pad = Mat::zeros(n + m, m);
            pad.view_mut((n, 0), (m, m)).copy_from(&rs);
            to_c(&pad)
        };
        let full = res_bw * t.adjoint() * &q * &term.weight * q.adjoint() * right;
        phi += full.map(|v| v.re).transpose();
    }
    if (tr_sum - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "peak weights must have unit trace sum, got {tr_sum}"
        )));
    }
    Ok(phi / j)
}

/// Default subgradient: equal scalar weight on every refined peak subspace.
pub fn hinf_sf_subgradient_default(plant: &Plant, k: &StaticGain) -> Result<Mat> {
    let (_, peaks) = hinf_sf_peaks(plant, k, norms::DEFAULT_REL_TOL)?;
    let mut terms = Vec::new();
    let mut total = 0usize;
    let mut bases = Vec::new();
    for p in &peaks {
        if let Some(w) = p.omega {
            let q = hinf_sf_peak_basis(plant, k, w)?;
            total += q.ncols();
            bases.push((w, q.ncols()));
        }
    }
    if total == 0 {
        return Err(Error::Degenerate("no finite peaks found".into()));
    }
    for (w, r) in bases {
        let weight = CMat::identity(r, r) * Complex::new(1.0 / total as f64, 0.0);
        terms.push(SubgradientTerm { omega: w, weight });
    }
    hinf_sf_subgradient(plant, k, &terms)
}

/// Extreme generators of the subdifferential model: one rank-one weight per
/// basis direction of each peak subspace.
pub fn hinf_sf_extreme_subgradients(plant: &Plant, k: &StaticGain) -> Result<Vec<Mat>> {
    let (_, peaks) = hinf_sf_peaks(plant, k, norms::DEFAULT_REL_TOL)?;
    let mut out = Vec::new();
    for p in &peaks {
        if let Some(w) = p.omega {
            let q = hinf_sf_peak_basis(plant, k, w)?;
            for j in 0..q.ncols() {
                let mut weight = CMat::zeros(q.ncols(), q.ncols());
                weight[(j, j)] = Complex::new(1.0, 0.0);
                out.push(hinf_sf_subgradient(
                    plant,
                    k,
                    &[SubgradientTerm { omega: w, weight }],
                )?);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Degenerate("no finite peaks found".into()));
    }
    Ok(out)
}

/// Distance from zero to the convex hull of the generators, in Frobenius norm:
/// `min_{λ ∈ simplex} ‖Σ λ_i G_i‖_F`.
///
/// Solved exactly by support enumeration for small generator counts, with an
/// accelerated projected-gradient fallback.
pub fn clarke_stationarity_measure(generators: &[Mat]) -> f64 {
    assert!(!generators.is_empty(), "need at least one generator");
    let q = generators.len();
    let mut gram = Mat::zeros(q, q);
    for i in 0..q {
        for j in 0..q {
            gram[(i, j)] = generators[i].dot(&generators[j]);
        }
    }
    let quad = |lam: &[f64]| -> f64 {
        let mut v = 0.0;
        for i in 0..q {
            for j in 0..q {
                v += lam[i] * gram[(i, j)] * lam[j];
            }
        }
        v
    };

    let mut best = f64::INFINITY;
    if q <= 12 {
        // Exact: for every support, solve the equality-constrained QP and
        // keep feasible stationary points.
        for mask in 1u32..(1 << q) {
            let support: Vec<usize> = (0..q).filter(|i| mask & (1 << i) != 0).collect();
            let sdim = support.len();
            let mut kkt = Mat::zeros(sdim + 1, sdim + 1);
            for (ai, &i) in support.iter().enumerate() {
                for (bi, &j) in support.iter().enumerate() {
                    kkt[(ai, bi)] = 2.0 * gram[(i, j)];
                }
                kkt[(ai, sdim)] = 1.0;
                kkt[(sdim, ai)] = 1.0;
            }
            let mut rhs = nalgebra::DVector::zeros(sdim + 1);
            rhs[sdim] = 1.0;
            let svd = kkt.svd(true, true);
            let sol = match svd.solve(&rhs, 1e-12) {
                Ok(s) => s,
                Err(_) => continue,
            };
            if (0..sdim).any(|i| sol[i] < -1e-12) {
                continue;
            }
            let mut lam = vec![0.0; q];
            for (ai, &i) in support.iter().enumerate() {
                lam[i] = sol[ai].max(0.0);
            }
            let total: f64 = lam.iter().sum();
            if total <= 0.0 {
                continue;
            }
            for l in lam.iter_mut() {
                *l /= total;
            }
            best = best.min(quad(&lam));
        }
    } else {
        // Accelerated projected gradient on the simplex.
        let mut lam = vec![1.0 / q as f64; q];
        let mut prev = lam.clone();
        let lip = gram.amax() * 2.0 * q as f64 + 1e-12;
        for iter in 0..20_000 {
            let t = iter as f64;
            let beta = t / (t + 3.0);
            let mut z: Vec<f64> = (0..q)
                .map(|i| lam[i] + beta * (lam[i] - prev[i]))
                .collect();
            let mut grad = vec![0.0; q];
            for i in 0..q {
                for j in 0..q {
                    grad[i] += 2.0 * gram[(i, j)] * z[j];
                }
            }
            for i in 0..q {
                z[i] -= grad[i] / lip;
            }
            prev = lam;
            lam = project_simplex(&z);
        }
        best = quad(&lam);
    }
    best.max(0.0).sqrt()
}

fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            rho = i;
            theta = t;
        }
    }
    let _ = rho;
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Builds the 4-block bounded-real LMI of the lifted set at `(K, γ)` as a
/// function of `P` (an expression helper shared by lift and membership).
fn hinf_sf_lift_lmi(plant: &Plant, k: &StaticGain, gamma: f64, p: &MatExpr) -> Result<MatExpr> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    let nw = plant.bw.ncols();
    let acl = plant.closed_a(k);
    let qs = plant.q.sqrt_psd()?;
    let rs = plant.r.sqrt_psd()?;
    let zero = |r, c| MatExpr::zeros(r, c);

    let pa = p.lmul(&acl.transpose()).sym();
    let pbw = p.rmul(&plant.bw);
    let krt = (&k.k.transpose() * &rs).clone();
    Ok(MatExpr::block(&[
        &[
            &pa,
            &pbw,
            &MatExpr::constant(qs.transpose()),
            &MatExpr::constant(krt.clone()),
        ],
        &[
            &pbw.transpose(),
            &MatExpr::constant(-gamma * Mat::identity(nw, nw)),
            &zero(nw, n),
            &zero(nw, m),
        ],
        &[
            &MatExpr::constant(qs.clone()),
            &zero(n, nw),
            &MatExpr::constant(-gamma * Mat::identity(n, n)),
            &zero(n, m),
        ],
        &[
            &MatExpr::constant(krt.transpose()),
            &zero(m, nw),
            &zero(m, n),
            &MatExpr::constant(-gamma * Mat::identity(m, m)),
        ],
    ]))
}

/// Lifts a stabilizing gain into the H-infinity lifted set at level `gamma`
/// by solving the feasibility SDP with objective `min tr(P)` (a canonical
/// certificate; the feasible `P` is in general not unique).
pub fn hinf_sf_lift(plant: &Plant, k: &StaticGain, gamma: f64) -> Result<HinfSfLiftedPoint> {
    require_stabilizing(plant, k)?;
    let n = plant.state_dim();
    let mut prob = SdpProblem::new();
    let pv = prob.sym("P", n);
    let p = prob.expr(pv);
    prob.minimize(p.trace());
    let lmi = hinf_sf_lift_lmi(plant, k, gamma, &p)?;
    prob.nsd(lmi, "lifted bounded real");
    prob.psd(p.clone(), "P psd");

    let sol = prob.solve(&SolverOptions::with_tols(1e-9, 1e-9, 200))?;
    if sol.status == Status::Infeasible {
        return Err(Error::NotInEpigraph(format!(
            "no Lyapunov certificate at level {gamma}"
        )));
    }
    if !sol.has_values() || sol.max_violation > 1e-7 {
        return Err(Error::Solver(format!(
            "lift feasibility ended with {:?} (violation {:.3e})",
            sol.status, sol.max_violation
        )));
    }
    let p = sol.extract_sym("P")?;
    if p.min_eig() <= 0.0 {
        return Err(Error::Degenerate(
            "lift certificate is not positive definite".into(),
        ));
    }
    Ok(HinfSfLiftedPoint {
        gain: k.clone(),
        gamma,
        p,
    })
}

/// Forward map `(K, γ, P) ↦ (γ, KP⁻¹, P⁻¹)`.
pub fn hinf_sf_phi(pt: &HinfSfLiftedPoint) -> Result<HinfSfConvexPoint> {
    let chol = pt
        .p
        .mat()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("P is not positive definite".into()))?;
    let p_inv = chol.inverse();
    Ok(HinfSfConvexPoint {
        gamma: pt.gamma,
        y: &pt.gain.k * &p_inv,
        x: SymMat::symmetrize(&p_inv),
    })
}

/// Inverse map `(γ, Y, X) ↦ (YX⁻¹, γ, X⁻¹)`.
pub fn hinf_sf_psi(cp: &HinfSfConvexPoint) -> Result<HinfSfLiftedPoint> {
    let chol = cp
        .x
        .mat()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("X is not positive definite".into()))?;
    let k = chol.solve(&cp.y.transpose()).transpose();
    let x_inv = chol.inverse();
    Ok(HinfSfLiftedPoint {
        gain: StaticGain::new(k),
        gamma: cp.gamma,
        p: SymMat::symmetrize(&x_inv),
    })
}

/// Largest eigenvalue of the lifted bounded-real LMI at the point (membership
/// requires it to be ≤ `LIFT_TOL`).
pub fn hinf_sf_lift_residual(plant: &Plant, pt: &HinfSfLiftedPoint) -> Result<f64> {
    let mut prob = SdpProblem::new();
    let pv = prob.sym("Pfixed", pt.p.dim());
    let expr = prob.expr(pv);
    let lmi = hinf_sf_lift_lmi(plant, &pt.gain, pt.gamma, &expr)?;
    // Evaluate the affine map at the fixed P by substituting components.
    let dim = pt.p.dim();
    let mut comps = Vec::new();
    for j in 0..dim {
        for i in j..dim {
            comps.push(pt.p.mat()[(i, j)]);
        }
    }
    let val = lmi.eval(&comps);
    Ok(SymMat::symmetrize(&val).max_eig())
}

/// Builds the state-feedback H-infinity SDP over `(γ, Y, X)`:
///
/// ```text
/// min γ  s.t.  [AX+BY+(AX+BY)ᵀ, B_w, XQ^{1/2}, YᵀR^{1/2};
///               B_wᵀ, -γI, 0, 0;
///               Q^{1/2}X, 0, -γI, 0;
///               R^{1/2}Y, 0, 0, -γI] ⪯ 0,   X ≻ 0.
/// ```
pub fn hinf_sf_sdp(plant: &Plant) -> Result<SdpProblem> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    let nw = plant.bw.ncols();
    let qs = plant.q.sqrt_psd()?;
    let rs = plant.r.sqrt_psd()?;

    let mut prob = SdpProblem::new();
    let gv = prob.scalar("gamma");
    let yv = prob.rect("Y", m, n);
    let xv = prob.sym("X", n);
    prob.minimize(prob.lin(gv));
    let x = prob.expr(xv);
    let y = prob.expr(yv);
    let g = prob.lin(gv);
    let zero = |r, c| MatExpr::zeros(r, c);

    let head = x.lmul(&plant.a) + y.lmul(&plant.b);
    let xq = x.rmul(&qs);
    let yr = y.transpose().rmul(&rs);
    let blk = MatExpr::block(&[
        &[&head.sym(), &MatExpr::constant(plant.bw.clone()), &xq, &yr],
        &[
            &MatExpr::constant(plant.bw.transpose()),
            &g.clone().scale(-1.0).times_identity(nw),
            &zero(nw, n),
            &zero(nw, m),
        ],
        &[
            &xq.transpose(),
            &zero(n, nw),
            &g.clone().scale(-1.0).times_identity(n),
            &zero(n, m),
        ],
        &[
            &yr.transpose(),
            &zero(m, nw),
            &zero(m, n),
            &g.clone().scale(-1.0).times_identity(m),
        ],
    ]);
    prob.nsd(blk, "bounded real image");
    prob.psd_strict_hint(x.clone(), "X > 0");
    Ok(prob)
}

/// Solves the H-infinity SDP and recovers `K = YX⁻¹`.
///
/// A `NearBoundary` status is propagated: it signals an infimum approached
/// only as the recovered gain diverges (the `X ≻ 0` condition going active).
pub fn hinf_sf_solve(plant: &Plant, opts: &SolverOptions) -> Result<SfSynthesis> {
    let prob = hinf_sf_sdp(plant)?;
    let sol = prob.solve(opts)?;
    if !sol.is_usable() {
        return Err(Error::Solver(format!(
            "H-infinity SDP ended with {:?}",
            sol.status
        )));
    }
    let gamma = sol.extract_scalar("gamma")?;
    let y = sol.extract_mat("Y")?;
    let x = sol.extract_sym("X")?;
    let gain = match x.mat().clone().cholesky() {
        Some(chol) => StaticGain::new(chol.solve(&y.transpose()).transpose()),
        None => {
            // X on the boundary: report the diverging-gain outcome with the
            // pseudo-inverse direction.
            let xi = x.mat().clone().pseudo_inverse(1e-12).map_err(|e| {
                Error::Degenerate(format!("X is singular and has no pseudo-inverse: {e}"))
            })?;
            StaticGain::new(&y * xi)
        }
    };
    Ok(SfSynthesis {
        status: sol.status,
        gamma,
        gain,
        y,
        x,
        solution: sol,
    })
}
