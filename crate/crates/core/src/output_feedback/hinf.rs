//! Output-feedback H-infinity policy optimization over proper full-order
//! policies (`D_K` free).
//!
//! Mirrors the LQG lifting with the bounded-real LMI: the lifted set pairs a
//! policy with `P ∈ S²ⁿ₊₊`, `P₁₂ ∈ GL_n`; the convex image is described by a
//! single affine operator on `(γ, Λ, X, Y)` with `Λ = [[G, F], [H, M]]`.

use nalgebra::Complex;

use crate::conic::{LinExpr, MatExpr, SdpProblem, SdpSolution, SolverOptions, Status};
use crate::linalg::{Mat, SymMat};
use crate::norms::{self, Peak};
use crate::plant::{resolvent_product, CMat, DynamicPolicy, OutputPlant};
use crate::state_feedback::max_singular_subspace;
use crate::{Error, Result};

use super::scherer::{p12_relative_margin, phi_lambda, psi_k, psi_p};
use super::{AuxGl, HinfOfConvexPoint, HinfOfLiftedPoint, P12_MARGIN};

fn require_stabilizing(plant: &OutputPlant, k: &DynamicPolicy) -> Result<crate::plant::ClosedLoop> {
    let cl = plant.assemble_closed_loop(k)?;
    if !cl.is_stable()? {
        return Err(Error::InfiniteCost(
            "policy does not internally stabilize the plant".into(),
        ));
    }
    Ok(cl)
}

/// H-infinity cost `‖T_zd(K, ·)‖` of an internally stabilizing policy.
pub fn hinf_of_cost(plant: &OutputPlant, k: &DynamicPolicy) -> Result<f64> {
    hinf_of_cost_with(plant, k, norms::DEFAULT_REL_TOL)
}

pub fn hinf_of_cost_with(plant: &OutputPlant, k: &DynamicPolicy, rel_tol: f64) -> Result<f64> {
    let cl = require_stabilizing(plant, k)?;
    norms::hinf_norm_fast(&cl.acl, &cl.bcl, &cl.ccl, &cl.dcl, rel_tol)
}

/// Refined peak list of the closed-loop response.
pub fn hinf_of_peaks(
    plant: &OutputPlant,
    k: &DynamicPolicy,
    rel_tol: f64,
) -> Result<(f64, Vec<Peak>)> {
    let cl = require_stabilizing(plant, k)?;
    norms::hinf_peaks(&cl.acl, &cl.bcl, &cl.ccl, &cl.dcl, rel_tol)
}

/// One peak contribution to a subgradient (frequency plus Hermitian weight).
#[derive(Debug, Clone)]
pub struct OfSubgradientTerm {
    pub omega: f64,
    pub weight: CMat,
}

/// Orthonormal basis of the maximal singular subspace of `T_zd(K, jω)`.
pub fn hinf_of_peak_basis(plant: &OutputPlant, k: &DynamicPolicy, omega: f64) -> Result<CMat> {
    let t = plant.tzd_at(k, Complex::new(0.0, omega))?;
    max_singular_subspace(&t)
}

/// Evaluates the Clarke subdifferential member determined by peak weights:
///
/// ```text
/// Φ = (1/J) Σ_κ Re{ ([0, V^{1/2}; 0, 0] + [C₂, 0; 0, I](s_κI - A_cl)⁻¹B_cl)
///                   · T(s_κ)ᴴ Q_κ Y_κ Q_κᴴ ·
///                   ([0, 0; R^{1/2}, 0] + C_cl(s_κI - A_cl)⁻¹[B₂, 0; 0, I]) }ᵀ
/// ```
///
/// returning an `(m+n) x (p+n)` matrix in the packed policy layout.
pub fn hinf_of_subgradient(
    plant: &OutputPlant,
    k: &DynamicPolicy,
    terms: &[OfSubgradientTerm],
) -> Result<Mat> {
    let cl = require_stabilizing(plant, k)?;
    let j = hinf_of_cost(plant, k)?;
    let n = plant.state_dim();
    let m = plant.input_dim();
    let pdim = plant.output_dim();
    let vs = plant.v.sqrt_psd()?;
    let rs = plant.r.sqrt_psd()?;
    let to_c = |mm: &Mat| mm.map(|v| Complex::new(v, 0.0));

    // Constant padding blocks.
    let mut left_pad = Mat::zeros(pdim + n, n + pdim);
    left_pad.view_mut((0, n), (pdim, pdim)).copy_from(&vs);
    let mut left_sel = Mat::zeros(pdim + n, 2 * n);
    left_sel.view_mut((0, 0), (pdim, n)).copy_from(&plant.c2);
    left_sel
        .view_mut((pdim, n), (n, n))
        .copy_from(&Mat::identity(n, n));
    let mut right_pad = Mat::zeros(n + m, m + n);
    right_pad.view_mut((n, 0), (m, m)).copy_from(&rs);
    let mut right_sel = Mat::zeros(2 * n, m + n);
    right_sel.view_mut((0, 0), (n, m)).copy_from(&plant.b2);
    right_sel
        .view_mut((n, m), (n, n))
        .copy_from(&Mat::identity(n, n));

    let mut tr_sum = 0.0;
    let mut phi = Mat::zeros(pdim + n, m + n);
    for term in terms {
        let s = Complex::new(0.0, term.omega);
        let t = plant.tzd_at(k, s)?;
        let q = max_singular_subspace(&t)?;
        if q.ncols() != term.weight.nrows() || !term.weight.is_square() {
            return Err(Error::Dimension(format!(
                "peak weight must be {0}x{0} at omega {1}",
                q.ncols(),
                term.omega
            )));
        }
        tr_sum += term.weight.trace().re;

        let res = resolvent_product(&cl.acl, &Mat::identity(2 * n, 2 * n), &Mat::identity(2 * n, 2 * n), None, s)?;
        let left = to_c(&left_pad) + to_c(&left_sel) * &res * to_c(&cl.bcl);
        let right = to_c(&right_pad) + to_c(&cl.ccl) * &res * to_c(&right_sel);
        let full = left * t.adjoint() * &q * &term.weight * q.adjoint() * right;
        phi += full.map(|v| v.re);
    }
    if (tr_sum - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "peak weights must have unit trace sum, got {tr_sum}"
        )));
    }
    Ok(phi.transpose() / j)
}

/// Default subgradient: equal scalar weight on every refined peak subspace.
pub fn hinf_of_subgradient_default(plant: &OutputPlant, k: &DynamicPolicy) -> Result<Mat> {
    let (_, peaks) = hinf_of_peaks(plant, k, norms::DEFAULT_REL_TOL)?;
    let mut bases = Vec::new();
    let mut total = 0usize;
    for p in &peaks {
        if let Some(w) = p.omega {
            let q = hinf_of_peak_basis(plant, k, w)?;
            total += q.ncols();
            bases.push((w, q.ncols()));
        }
    }
    if total == 0 {
        return Err(Error::Degenerate("no finite peaks found".into()));
    }
    let terms: Vec<OfSubgradientTerm> = bases
        .into_iter()
        .map(|(w, r)| OfSubgradientTerm {
            omega: w,
            weight: CMat::identity(r, r) * Complex::new(1.0 / total as f64, 0.0),
        })
        .collect();
    hinf_of_subgradient(plant, k, &terms)
}

/// Extreme generators: one rank-one weight per basis direction of each peak.
pub fn hinf_of_extreme_subgradients(plant: &OutputPlant, k: &DynamicPolicy) -> Result<Vec<Mat>> {
    let (_, peaks) = hinf_of_peaks(plant, k, norms::DEFAULT_REL_TOL)?;
    let mut out = Vec::new();
    for p in &peaks {
        if let Some(w) = p.omega {
            let q = hinf_of_peak_basis(plant, k, w)?;
            for jcol in 0..q.ncols() {
                let mut weight = CMat::zeros(q.ncols(), q.ncols());
                weight[(jcol, jcol)] = Complex::new(1.0, 0.0);
                out.push(hinf_of_subgradient(
                    plant,
                    k,
                    &[OfSubgradientTerm { omega: w, weight }],
                )?);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Degenerate("no finite peaks found".into()));
    }
    Ok(out)
}

/// The bounded-real lifted LMI at fixed `(K, γ)` as an affine expression in
/// `P`.
fn lifted_lmi_expr(
    plant: &OutputPlant,
    k: &DynamicPolicy,
    gamma: f64,
    p: &MatExpr,
) -> Result<MatExpr> {
    let cl = plant.assemble_closed_loop(k)?;
    let nd = cl.bcl.ncols();
    let nz = cl.ccl.nrows();
    let pa = p.lmul(&cl.acl.transpose()).sym();
    let pb = p.rmul(&cl.bcl);
    Ok(MatExpr::block(&[
        &[&pa, &pb, &MatExpr::constant(cl.ccl.transpose())],
        &[
            &pb.transpose(),
            &MatExpr::constant(-gamma * Mat::identity(nd, nd)),
            &MatExpr::constant(cl.dcl.transpose()),
        ],
        &[
            &MatExpr::constant(cl.ccl.clone()),
            &MatExpr::constant(cl.dcl.clone()),
            &MatExpr::constant(-gamma * Mat::identity(nz, nz)),
        ],
    ]))
}

/// Largest eigenvalue of the lifted LMI at a point (membership requires
/// it to be ≤ tolerance).
pub fn hinf_of_lift_residual(plant: &OutputPlant, pt: &HinfOfLiftedPoint) -> Result<f64> {
    let expr = lifted_lmi_expr(plant, &pt.policy, pt.gamma, &MatExpr::constant(pt.p.mat().clone()))?;
    Ok(SymMat::symmetrize(&expr.eval(&[])).max_eig())
}

/// Searches for a lifted-set certificate at level `gamma` (non-strict
/// bounded-real LMI, objective maximizing the smallest eigenvalue of `P`).
/// `None` flags the policy possibly degenerate at this level.
pub fn hinf_of_lift_feasibility(
    plant: &OutputPlant,
    k: &DynamicPolicy,
    gamma: f64,
    p12_margin: f64,
) -> Result<Option<SymMat>> {
    require_stabilizing(plant, k)?;
    let n = plant.state_dim();
    let mut prob = SdpProblem::new();
    let pv = prob.sym("P", 2 * n);
    let tv = prob.scalar("t");
    prob.maximize(prob.lin(tv));
    let p = prob.expr(pv);
    let lmi = lifted_lmi_expr(plant, k, gamma, &p)?;
    prob.nsd(lmi, "lifted bounded real");
    prob.psd(p.clone() - prob.lin(tv).times_identity(2 * n), "P margin");
    prob.nonneg(
        LinExpr::constant(1.0 + gamma.abs()) - prob.lin(tv),
        "margin cap",
    );

    let sol = prob.solve(&SolverOptions::with_tols(1e-9, 1e-9, 200))?;
    if sol.status == Status::Infeasible {
        return Ok(None);
    }
    if !sol.has_values() {
        return Err(Error::Solver(format!(
            "lift feasibility ended with {:?}",
            sol.status
        )));
    }
    let t_star = sol.extract_scalar("t")?;
    if sol.max_violation > 1e-7 || t_star <= 0.0 {
        return Ok(None);
    }
    let p = sol.extract_sym("P")?;
    if p12_relative_margin(&p)? < p12_margin {
        return Ok(None);
    }
    Ok(Some(p))
}

/// Lifts a policy at level `gamma`, or reports it possibly degenerate.
pub fn hinf_of_lift(
    plant: &OutputPlant,
    k: &DynamicPolicy,
    gamma: f64,
) -> Result<Option<HinfOfLiftedPoint>> {
    Ok(
        hinf_of_lift_feasibility(plant, k, gamma, P12_MARGIN)?.map(|p| HinfOfLiftedPoint {
            policy: k.clone(),
            gamma,
            p,
        }),
    )
}

/// Forward map: `(K, γ, P) ↦ ((γ, Λ, X, Y), Ξ)`.
pub fn phi_hinf_of(
    plant: &OutputPlant,
    pt: &HinfOfLiftedPoint,
) -> Result<(HinfOfConvexPoint, AuxGl)> {
    if p12_relative_margin(&pt.p)? < P12_MARGIN {
        return Err(Error::Degenerate(
            "P₁₂ is below the invertibility margin".into(),
        ));
    }
    let (lambda, x, y, xi) = phi_lambda(plant, &pt.policy, &pt.p)?;
    let m = plant.input_dim();
    let pdim = plant.output_dim();
    let n = plant.state_dim();
    Ok((
        HinfOfConvexPoint {
            gamma: pt.gamma,
            g: lambda.view((0, 0), (m, pdim)).into_owned(),
            f: lambda.view((0, pdim), (m, n)).into_owned(),
            h: lambda.view((m, 0), (n, pdim)).into_owned(),
            m: lambda.view((m, pdim), (n, n)).into_owned(),
            x,
            y,
        },
        AuxGl { xi },
    ))
}

/// Inverse map: `((γ, Λ, X, Y), Ξ) ↦ (K, γ, P)`.
pub fn psi_hinf_of(
    plant: &OutputPlant,
    cp: &HinfOfConvexPoint,
    aux: &AuxGl,
) -> Result<HinfOfLiftedPoint> {
    let m = plant.input_dim();
    let pdim = plant.output_dim();
    let n = plant.state_dim();
    let mut lambda = Mat::zeros(m + n, pdim + n);
    lambda.view_mut((0, 0), (m, pdim)).copy_from(&cp.g);
    lambda.view_mut((0, pdim), (m, n)).copy_from(&cp.f);
    lambda.view_mut((m, 0), (n, pdim)).copy_from(&cp.h);
    lambda.view_mut((m, pdim), (n, n)).copy_from(&cp.m);
    let policy = psi_k(plant, &lambda, &cp.x, &cp.y, &aux.xi)?;
    let p = psi_p(&cp.x, &cp.y, &aux.xi)?;
    Ok(HinfOfLiftedPoint {
        policy,
        gamma: cp.gamma,
        p,
    })
}

/// Builds `ℳ(γ, [G, F; H, M], X, Y)` from expression arguments.
pub fn hinf_of_m_operator(
    plant: &OutputPlant,
    gamma: &LinExpr,
    g: &MatExpr,
    f: &MatExpr,
    h: &MatExpr,
    m_blk: &MatExpr,
    x: &MatExpr,
    y: &MatExpr,
) -> Result<MatExpr> {
    let n = plant.state_dim();
    let mdim = plant.input_dim();
    let pdim = plant.output_dim();
    let b1 = plant.b1()?;
    let c1 = plant.c1()?;
    let d12 = plant.d12()?;
    let d21 = plant.d21()?;
    let nd = n + pdim;
    let nz = n + mdim;

    let head11 = (x.lmul(&plant.a) + f.lmul(&plant.b2)).sym();
    // Mᵀ + A + B₂GC₂
    let head12 = m_blk.transpose()
        + MatExpr::constant(plant.a.clone())
        + g.lmul(&plant.b2).rmul(&plant.c2);
    let head13 = MatExpr::constant(b1.clone()) + g.lmul(&plant.b2).rmul(&d21);
    let head14 = (x.lmul(&c1) + f.lmul(&d12)).transpose();
    let head22 = (y.rmul(&plant.a) + h.rmul(&plant.c2)).sym();
    let head23 = y.rmul(&b1) + h.rmul(&d21);
    let head24 = (MatExpr::constant(c1.clone()) + g.lmul(&d12).rmul(&plant.c2)).transpose();
    let head34 = g.lmul(&d12).rmul(&d21).transpose();

    Ok(MatExpr::block(&[
        &[&head11, &head12, &head13, &head14],
        &[&head12.transpose(), &head22, &head23, &head24],
        &[
            &head13.transpose(),
            &head23.transpose(),
            &gamma.clone().scale(-1.0).times_identity(nd),
            &head34,
        ],
        &[
            &head14.transpose(),
            &head24.transpose(),
            &head34.transpose(),
            &gamma.clone().scale(-1.0).times_identity(nz),
        ],
    ]))
}

/// Numeric evaluation of `ℳ` at a convex point.
pub fn hinf_of_m_operator_at(plant: &OutputPlant, cp: &HinfOfConvexPoint) -> Result<Mat> {
    let expr = hinf_of_m_operator(
        plant,
        &LinExpr::constant(cp.gamma),
        &MatExpr::constant(cp.g.clone()),
        &MatExpr::constant(cp.f.clone()),
        &MatExpr::constant(cp.h.clone()),
        &MatExpr::constant(cp.m.clone()),
        &MatExpr::constant(cp.x.mat().clone()),
        &MatExpr::constant(cp.y.mat().clone()),
    )?;
    Ok(expr.eval(&[]))
}

/// Builds the output-feedback H-infinity synthesis SDP over
/// `(γ, G, F, H, M, X, Y)`:
///
/// ```text
/// min γ  s.t.  ℳ(γ, Λ, X, Y) ⪯ 0,  [X, I; I, Y] ≻ 0.
/// ```
pub fn hinf_of_sdp(plant: &OutputPlant) -> Result<SdpProblem> {
    if !plant.standard_assumptions_hold()? {
        return Err(Error::Precondition(
            "plant violates the standard controllability/observability flags".into(),
        ));
    }
    let n = plant.state_dim();
    let m = plant.input_dim();
    let pdim = plant.output_dim();

    let mut prob = SdpProblem::new();
    let gv = prob.scalar("gamma");
    let gb = prob.rect("G", m, pdim);
    let fv = prob.rect("F", m, n);
    let hv = prob.rect("H", n, pdim);
    let mv = prob.rect("M", n, n);
    let xv = prob.sym("X", n);
    let yv = prob.sym("Y", n);
    prob.minimize(prob.lin(gv));

    let m_op = hinf_of_m_operator(
        plant,
        &prob.lin(gv),
        &prob.expr(gb),
        &prob.expr(fv),
        &prob.expr(hv),
        &prob.expr(mv),
        &prob.expr(xv),
        &prob.expr(yv),
    )?;
    prob.nsd(m_op, "bounded real image");
    let eye = MatExpr::identity(n);
    prob.psd_strict_hint(
        MatExpr::block(&[&[&prob.expr(xv), &eye], &[&eye, &prob.expr(yv)]]),
        "[X, I; I, Y] > 0",
    );
    Ok(prob)
}

/// Outcome of the SDP-backed H-infinity synthesis.
#[derive(Debug, Clone)]
pub struct HinfOfSynthesis {
    pub status: Status,
    pub gamma: f64,
    pub policy: DynamicPolicy,
    pub convex_point: HinfOfConvexPoint,
    pub lyapunov: SymMat,
    pub solution: SdpSolution,
}

/// Solves the H-infinity SDP and recovers the policy with `Ξ = I`.
pub fn hinf_of_solve(plant: &OutputPlant, opts: &SolverOptions) -> Result<HinfOfSynthesis> {
    let prob = hinf_of_sdp(plant)?;
    let sol = prob.solve(opts)?;
    if !sol.is_usable() {
        return Err(Error::Solver(format!(
            "H-infinity SDP ended with {:?}",
            sol.status
        )));
    }
    let cp = HinfOfConvexPoint {
        gamma: sol.extract_scalar("gamma")?,
        g: sol.extract_mat("G")?,
        f: sol.extract_mat("F")?,
        h: sol.extract_mat("H")?,
        m: sol.extract_mat("M")?,
        x: sol.extract_sym("X")?,
        y: sol.extract_sym("Y")?,
    };
    let n = plant.state_dim();
    let aux = AuxGl {
        xi: Mat::identity(n, n),
    };
    let (policy, p, status) = match psi_hinf_of(plant, &cp, &aux) {
        Ok(lifted) => (lifted.policy, lifted.p, sol.status),
        Err(_) => {
            let (policy, p) = super::lqg::recover_regularized(
                plant,
                &cp.f,
                &cp.h,
                &cp.m,
                Some(&cp.g),
                &cp.x,
                &cp.y,
            )?;
            (policy, p, Status::NearBoundary)
        }
    };
    Ok(HinfOfSynthesis {
        status,
        gamma: cp.gamma,
        policy,
        convex_point: cp,
        lyapunov: p,
        solution: sol,
    })
}
