//! LQG policy optimization over strictly proper full-order policies.
//!
//! The cost is the (unsquared) H2 norm of the closed loop. The lifted set
//! pairs a policy with a Lyapunov certificate `P` (with `P₁₂` invertible) and
//! a trace certificate `Γ` through the γ-homogeneous H2 LMIs; the convex
//! image is described by two affine operators acting on the transformed
//! coordinates `(γ, Λ, X, Y, Γ)`.

use crate::conic::{LinExpr, MatExpr, SdpProblem, SdpSolution, SolverOptions, Status};
use crate::linalg::{Mat, SymMat};
use crate::norms;
use crate::plant::{DynamicPolicy, OutputPlant};
use crate::{Error, Result};

use super::scherer::{p12_relative_margin, phi_lambda, psi_k, psi_p};
use super::{AuxGl, LqgConvexPoint, LqgLiftedPoint, P12_MARGIN};

fn require_strictly_proper(k: &DynamicPolicy) -> Result<()> {
    if !k.is_strictly_proper() {
        return Err(Error::Precondition(
            "LQG policies must be strictly proper (D_K = 0)".into(),
        ));
    }
    Ok(())
}

fn require_stabilizing(plant: &OutputPlant, k: &DynamicPolicy) -> Result<crate::plant::ClosedLoop> {
    let cl = plant.assemble_closed_loop(k)?;
    if !cl.is_stable()? {
        return Err(Error::InfiniteCost(
            "policy does not internally stabilize the plant".into(),
        ));
    }
    Ok(cl)
}

/// LQG cost `‖T_zd(K, ·)‖_{H2}` of an internally stabilizing strictly proper
/// policy, cross-checked between the two Gramian formulations.
pub fn lqg_cost(plant: &OutputPlant, k: &DynamicPolicy) -> Result<f64> {
    require_strictly_proper(k)?;
    let cl = require_stabilizing(plant, k)?;
    let via_x = norms::h2_norm_sq(&cl.acl, &cl.bcl, &cl.ccl)?;
    let via_y = norms::h2_norm_sq_dual(&cl.acl, &cl.bcl, &cl.ccl)?;
    if (via_x - via_y).abs() > 1e-8 * (1.0 + via_x.abs()) {
        return Err(Error::Solver(format!(
            "Gramian formulations disagree: {via_x} vs {via_y}"
        )));
    }
    Ok(via_x.sqrt())
}

/// Gradient of the LQG cost with respect to `(A_K, B_K, C_K)`:
///
/// ```text
/// ∂J/∂A_K = (Y₁₂ᵀX₁₂ + Y₂₂X₂₂) / J
/// ∂J/∂B_K = (Y₂₂B_K V + Y₂₂X₁₂ᵀC₂ᵀ + Y₁₂ᵀX₁₁C₂ᵀ) / J
/// ∂J/∂C_K = (R C_K X₂₂ + B₂ᵀY₁₁X₁₂ + B₂ᵀY₁₂X₂₂) / J
/// ```
///
/// with `X`, `Y` the controllability/observability Gramians of the closed
/// loop, partitioned into n x n blocks.
pub fn lqg_gradient(plant: &OutputPlant, k: &DynamicPolicy) -> Result<(Mat, Mat, Mat)> {
    require_strictly_proper(k)?;
    let cl = require_stabilizing(plant, k)?;
    let n = plant.state_dim();
    let j = lqg_cost(plant, k)?;

    let bbt = SymMat::symmetrize(&(&cl.bcl * cl.bcl.transpose()));
    let x = crate::linalg::solve_lyapunov_ct(&cl.acl, &bbt)?;
    let ctc = SymMat::symmetrize(&(cl.ccl.transpose() * &cl.ccl));
    let y = crate::linalg::solve_lyapunov_ct(&cl.acl.transpose(), &ctc)?;

    let x11 = x.mat().view((0, 0), (n, n)).into_owned();
    let x12 = x.mat().view((0, n), (n, n)).into_owned();
    let x22 = x.mat().view((n, n), (n, n)).into_owned();
    let y11 = y.mat().view((0, 0), (n, n)).into_owned();
    let y12 = y.mat().view((0, n), (n, n)).into_owned();
    let y22 = y.mat().view((n, n), (n, n)).into_owned();

    let d_ak = (y12.transpose() * &x12 + &y22 * &x22) / j;
    let d_bk = (&y22 * &k.bk * plant.v.mat()
        + &y22 * x12.transpose() * plant.c2.transpose()
        + y12.transpose() * &x11 * plant.c2.transpose())
        / j;
    let d_ck = (plant.r.mat() * &k.ck * &x22
        + plant.b2.transpose() * &y11 * &x12
        + plant.b2.transpose() * &y12 * &x22)
        / j;
    Ok((d_ak, d_bk, d_ck))
}

/// The two γ-homogeneous H2 LMI blocks of the lifted set at fixed `(K, γ)`,
/// as affine expressions in `(P, Γ)` (used for lift feasibility), evaluated
/// with the closed-loop matrices of `K`.
fn lifted_lmi_exprs(
    plant: &OutputPlant,
    k: &DynamicPolicy,
    gamma_expr: &LinExpr,
    p: &MatExpr,
    trace_cert: &MatExpr,
) -> Result<(MatExpr, MatExpr)> {
    let cl = plant.assemble_closed_loop(k)?;
    let nd = cl.bcl.ncols();
    let pa = p.lmul(&cl.acl.transpose()).sym();
    let pb = p.rmul(&cl.bcl);
    let dissipation = MatExpr::block(&[
        &[&pa, &pb],
        &[
            &pb.transpose(),
            &gamma_expr.clone().scale(-1.0).times_identity(nd),
        ],
    ]);
    let gramian = MatExpr::block(&[
        &[p, &MatExpr::constant(cl.ccl.transpose())],
        &[&MatExpr::constant(cl.ccl.clone()), trace_cert],
    ]);
    Ok((dissipation, gramian))
}

/// Residual check of lifted-set membership: returns
/// `(max-eig of the dissipation LMI, -min-eig of the Gramian LMI,
///   tr(Γ) - γ, σ_min(P₁₂)/‖P‖)`.
pub fn lqg_lift_residuals(
    plant: &OutputPlant,
    pt: &LqgLiftedPoint,
) -> Result<(f64, f64, f64, f64)> {
    let cl = plant.assemble_closed_loop(&pt.policy)?;
    let nd = cl.bcl.ncols();
    let n2 = cl.acl.nrows();
    let mut diss = Mat::zeros(n2 + nd, n2 + nd);
    let pa = cl.acl.transpose() * pt.p.mat() + pt.p.mat() * &cl.acl;
    diss.view_mut((0, 0), (n2, n2)).copy_from(&pa);
    let pb = pt.p.mat() * &cl.bcl;
    diss.view_mut((0, n2), (n2, nd)).copy_from(&pb);
    diss.view_mut((n2, 0), (nd, n2)).copy_from(&pb.transpose());
    diss.view_mut((n2, n2), (nd, nd))
        .copy_from(&(-pt.gamma * Mat::identity(nd, nd)));

    let nz = cl.ccl.nrows();
    let mut gram = Mat::zeros(n2 + nz, n2 + nz);
    gram.view_mut((0, 0), (n2, n2)).copy_from(pt.p.mat());
    gram.view_mut((0, n2), (n2, nz)).copy_from(&cl.ccl.transpose());
    gram.view_mut((n2, 0), (nz, n2)).copy_from(&cl.ccl);
    gram.view_mut((n2, n2), (nz, nz)).copy_from(pt.trace_cert.mat());

    Ok((
        SymMat::symmetrize(&diss).max_eig(),
        -SymMat::symmetrize(&gram).min_eig(),
        pt.trace_cert.trace() - pt.gamma,
        p12_relative_margin(&pt.p)?,
    ))
}

/// Searches for a lifted-set certificate at level `gamma`: solves the
/// non-strict LMI feasibility problem with objective maximizing the smallest
/// eigenvalue of `P` (scaled), then accepts only if `σ_min(P₁₂)` clears the
/// invertibility margin. `None` means "no certificate found": the policy is
/// flagged possibly degenerate, never certified degenerate.
pub fn lqg_lift_feasibility(
    plant: &OutputPlant,
    k: &DynamicPolicy,
    gamma: f64,
    p12_margin: f64,
) -> Result<Option<(SymMat, SymMat)>> {
    require_strictly_proper(k)?;
    require_stabilizing(plant, k)?;
    let n = plant.state_dim();
    let m = plant.input_dim();

    let mut prob = SdpProblem::new();
    let pv = prob.sym("P", 2 * n);
    let gv = prob.sym("Gamma", n + m);
    let tv = prob.scalar("t");
    prob.maximize(prob.lin(tv));
    let p = prob.expr(pv);
    let tc = prob.expr(gv);
    let gamma_expr = LinExpr::constant(gamma);
    let (diss, gram) = lifted_lmi_exprs(plant, k, &gamma_expr, &p, &tc)?;
    prob.nsd(diss, "lifted dissipation");
    prob.psd(gram, "lifted gramian");
    prob.nonneg(
        LinExpr::constant(gamma) - tc.trace(),
        "trace budget",
    );
    prob.psd(tc.clone(), "Gamma psd");
    prob.psd(
        p.clone() - prob.lin(tv).times_identity(2 * n),
        "P margin",
    );
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
    let tc = sol.extract_sym("Gamma")?;
    if p12_relative_margin(&p)? < p12_margin {
        return Ok(None);
    }
    Ok(Some((p, tc)))
}

/// Lifts a policy at level `gamma`, or reports it possibly degenerate.
pub fn lqg_lift(
    plant: &OutputPlant,
    k: &DynamicPolicy,
    gamma: f64,
) -> Result<Option<LqgLiftedPoint>> {
    Ok(
        lqg_lift_feasibility(plant, k, gamma, P12_MARGIN)?.map(|(p, tc)| LqgLiftedPoint {
            policy: k.clone(),
            gamma,
            p,
            trace_cert: tc,
        }),
    )
}

/// Forward map: `(K, γ, P, Γ) ↦ ((γ, Λ, X, Y, Γ), Ξ)`.
pub fn phi_lqg(plant: &OutputPlant, pt: &LqgLiftedPoint) -> Result<(LqgConvexPoint, AuxGl)> {
    require_strictly_proper(&pt.policy)?;
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
        LqgConvexPoint {
            gamma: pt.gamma,
            f: lambda.view((0, pdim), (m, n)).into_owned(),
            h: lambda.view((m, 0), (n, pdim)).into_owned(),
            m: lambda.view((m, pdim), (n, n)).into_owned(),
            x,
            y,
            trace_cert: pt.trace_cert.clone(),
        },
        AuxGl { xi },
    ))
}

/// Inverse map: `((γ, Λ, X, Y, Γ), Ξ) ↦ (K, γ, P, Γ)`.
pub fn psi_lqg(
    plant: &OutputPlant,
    cp: &LqgConvexPoint,
    aux: &AuxGl,
) -> Result<LqgLiftedPoint> {
    let m = plant.input_dim();
    let pdim = plant.output_dim();
    let n = plant.state_dim();
    let mut lambda = Mat::zeros(m + n, pdim + n);
    lambda.view_mut((0, pdim), (m, n)).copy_from(&cp.f);
    lambda.view_mut((m, 0), (n, pdim)).copy_from(&cp.h);
    lambda.view_mut((m, pdim), (n, n)).copy_from(&cp.m);
    let policy = psi_k(plant, &lambda, &cp.x, &cp.y, &aux.xi)?;
    // The D_K block is identically zero for a zero G block; clear rounding.
    let policy = DynamicPolicy::strictly_proper(policy.ck, policy.bk, policy.ak)?;
    let p = psi_p(&cp.x, &cp.y, &aux.xi)?;
    Ok(LqgLiftedPoint {
        policy,
        gamma: cp.gamma,
        p,
        trace_cert: cp.trace_cert.clone(),
    })
}

/// Affine operator images of the convex set membership conditions, built over
/// expression arguments so both the SDP and numeric checks share one
/// definition.
pub struct LqgOperators {
    pub a_op: MatExpr,
    pub b_op: MatExpr,
}

/// Builds `𝒜(γ, Λ, X, Y, Γ)` and `ℬ(γ, Λ, X, Y, Γ)` from expressions.
pub fn lqg_operators(
    plant: &OutputPlant,
    gamma: &LinExpr,
    f: &MatExpr,
    h: &MatExpr,
    m_blk: &MatExpr,
    x: &MatExpr,
    y: &MatExpr,
    trace_cert: &MatExpr,
) -> Result<LqgOperators> {
    let n = plant.state_dim();
    let mdim = plant.input_dim();
    let pdim = plant.output_dim();
    let b1 = plant.b1()?;
    let c1 = plant.c1()?;
    let d12 = plant.d12()?;
    let d21 = plant.d21()?;
    let nd = n + pdim;
    let nz = n + mdim;

    // head11 = AX + B₂F + (AX + B₂F)ᵀ
    let head11 = (x.lmul(&plant.a) + f.lmul(&plant.b2)).sym();
    // head12 = Mᵀ + A
    let head12 = m_blk.transpose() + MatExpr::constant(plant.a.clone());
    // head22 = YA + HC₂ + (YA + HC₂)ᵀ
    let head22 = (y.rmul(&plant.a) + h.rmul(&plant.c2)).sym();
    // col3 = [B₁; YB₁ + HD₂₁]
    let b1_e = MatExpr::constant(b1.clone());
    let yb1_hd21 = y.rmul(&b1) + h.rmul(&d21);

    let a_op = MatExpr::block(&[
        &[&head11, &head12, &b1_e],
        &[&head12.transpose(), &head22, &yb1_hd21],
        &[
            &b1_e.transpose(),
            &yb1_hd21.transpose(),
            &gamma.clone().scale(-1.0).times_identity(nd),
        ],
    ]);

    // ℬ = [X, I, (C₁X + D₁₂F)ᵀ; I, Y, C₁ᵀ; C₁X + D₁₂F, C₁, Γ]
    let c1x_d12f = x.lmul(&c1) + f.lmul(&d12);
    let eye = MatExpr::identity(n);
    let b_op = MatExpr::block(&[
        &[x, &eye, &c1x_d12f.transpose()],
        &[&eye, y, &MatExpr::constant(c1.transpose())],
        &[&c1x_d12f, &MatExpr::constant(c1), trace_cert],
    ]);
    let _ = nz;
    Ok(LqgOperators { a_op, b_op })
}

/// Numeric evaluation of the operators at a convex point.
pub fn lqg_operators_at(plant: &OutputPlant, cp: &LqgConvexPoint) -> Result<(Mat, Mat)> {
    let ops = lqg_operators(
        plant,
        &LinExpr::constant(cp.gamma),
        &MatExpr::constant(cp.f.clone()),
        &MatExpr::constant(cp.h.clone()),
        &MatExpr::constant(cp.m.clone()),
        &MatExpr::constant(cp.x.mat().clone()),
        &MatExpr::constant(cp.y.mat().clone()),
        &MatExpr::constant(cp.trace_cert.mat().clone()),
    )?;
    Ok((ops.a_op.eval(&[]), ops.b_op.eval(&[])))
}

/// Builds the LQG synthesis SDP over `(γ, F, H, M, X, Y, Γ)`:
///
/// ```text
/// min γ  s.t.  𝒜(γ, Λ, X, Y, Γ) ⪯ 0,  ℬ(γ, Λ, X, Y, Γ) ⪰ 0,
///              tr(Γ) ≤ γ,  [X, I; I, Y] ≻ 0.
/// ```
pub fn lqg_sdp(plant: &OutputPlant) -> Result<SdpProblem> {
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
    let fv = prob.rect("F", m, n);
    let hv = prob.rect("H", n, pdim);
    let mv = prob.rect("M", n, n);
    let xv = prob.sym("X", n);
    let yv = prob.sym("Y", n);
    let tcv = prob.sym("Gamma", n + m);
    prob.minimize(prob.lin(gv));

    let ops = lqg_operators(
        plant,
        &prob.lin(gv),
        &prob.expr(fv),
        &prob.expr(hv),
        &prob.expr(mv),
        &prob.expr(xv),
        &prob.expr(yv),
        &prob.expr(tcv),
    )?;
    prob.nsd(ops.a_op, "dissipation image");
    prob.psd(ops.b_op, "gramian image");
    prob.nonneg(prob.lin(gv) - prob.expr(tcv).trace(), "trace budget");
    prob.psd(prob.expr(tcv), "Gamma psd");
    let eye = MatExpr::identity(n);
    prob.psd_strict_hint(
        MatExpr::block(&[&[&prob.expr(xv), &eye], &[&eye, &prob.expr(yv)]]),
        "[X, I; I, Y] > 0",
    );
    Ok(prob)
}

/// Outcome of the SDP-backed LQG synthesis.
#[derive(Debug, Clone)]
pub struct LqgSynthesis {
    pub status: Status,
    pub gamma: f64,
    pub policy: DynamicPolicy,
    pub convex_point: LqgConvexPoint,
    pub lyapunov: SymMat,
    pub solution: SdpSolution,
}

/// Solves the LQG SDP and recovers the policy through the inverse map with
/// the canonical auxiliary coordinate `Ξ = I` (any invertible choice yields a
/// similarity-equivalent policy).
pub fn lqg_solve(plant: &OutputPlant, opts: &SolverOptions) -> Result<LqgSynthesis> {
    let prob = lqg_sdp(plant)?;
    let sol = prob.solve(opts)?;
    if !sol.is_usable() {
        return Err(Error::Solver(format!("LQG SDP ended with {:?}", sol.status)));
    }
    let cp = LqgConvexPoint {
        gamma: sol.extract_scalar("gamma")?,
        f: sol.extract_mat("F")?,
        h: sol.extract_mat("H")?,
        m: sol.extract_mat("M")?,
        x: sol.extract_sym("X")?,
        y: sol.extract_sym("Y")?,
        trace_cert: sol.extract_sym("Gamma")?,
    };
    let n = plant.state_dim();
    let aux = AuxGl {
        xi: Mat::identity(n, n),
    };
    let (policy, p, status) = match psi_lqg(plant, &cp, &aux) {
        Ok(lifted) => (lifted.policy, lifted.p, sol.status),
        Err(_) => {
            // Optimal face on the boundary of [X, I; I, Y] ≻ 0: recover a
            // near-optimal representative from a slightly interior point.
            let (policy, p) = recover_regularized(plant, &cp.f, &cp.h, &cp.m, None, &cp.x, &cp.y)?;
            (policy, p, Status::NearBoundary)
        }
    };
    Ok(LqgSynthesis {
        status,
        gamma: cp.gamma,
        policy,
        convex_point: cp,
        lyapunov: p,
        solution: sol,
    })
}

/// Policy recovery from a convex point whose coupling block is (numerically)
/// singular: inflate `Y` just enough to restore the Schur gap, then map back.
/// The result is a stabilizing near-optimal representative.
pub(super) fn recover_regularized(
    plant: &OutputPlant,
    f: &Mat,
    h: &Mat,
    m_blk: &Mat,
    g: Option<&Mat>,
    x: &SymMat,
    y: &SymMat,
) -> Result<(DynamicPolicy, SymMat)> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    let pdim = plant.output_dim();
    let x_chol = x
        .mat()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("X is not positive definite".into()))?;
    let gap = SymMat::symmetrize(&(y.mat() - x_chol.inverse()));
    let scale = 1.0 + y.mat().amax();
    let mut delta = (-gap.min_eig()).max(0.0) + 1e-6 * scale;
    let mut lambda = Mat::zeros(m + n, pdim + n);
    if let Some(g) = g {
        lambda.view_mut((0, 0), (m, pdim)).copy_from(g);
    }
    lambda.view_mut((0, pdim), (m, n)).copy_from(f);
    lambda.view_mut((m, 0), (n, pdim)).copy_from(h);
    lambda.view_mut((m, pdim), (n, n)).copy_from(m_blk);
    let xi = Mat::identity(n, n);
    for _ in 0..8 {
        let y_reg = SymMat::symmetrize(&(y.mat() + Mat::identity(n, n) * delta));
        if let (Ok(policy), Ok(p)) = (
            super::scherer::psi_k(plant, &lambda, x, &y_reg, &xi),
            super::scherer::psi_p(x, &y_reg, &xi),
        ) {
            let policy = if g.is_none() {
                DynamicPolicy::strictly_proper(policy.ck, policy.bk, policy.ak)?
            } else {
                policy
            };
            if plant.assemble_closed_loop(&policy)?.is_stable()? {
                return Ok((policy, p));
            }
        }
        delta *= 10.0;
    }
    Err(Error::Degenerate(
        "no stabilizing representative recovered near the boundary".into(),
    ))
}

/// Riccati-separation route to the LQG optimum: the certainty-equivalence
/// policy and its cost, computed independently of the SDP path.
pub fn lqg_riccati_optimum(plant: &OutputPlant) -> Result<(DynamicPolicy, f64)> {
    let policy = crate::sampling::observer_policy(plant)?;
    let cost = lqg_cost(plant, &policy)?;
    Ok((policy, cost))
}
