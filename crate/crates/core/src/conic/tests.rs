use super::*;
use crate::linalg::Mat;
use approx::assert_relative_eq;

fn default_opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn min_gamma_two_by_two_psd() {
    // min γ s.t. [[γ, 1], [1, γ]] ⪰ 0  →  γ* = 1.
    let mut p = SdpProblem::new();
    let g = p.scalar("gamma");
    p.minimize(p.lin(g));
    let expr = p.lin(g).times_identity(2)
        + MatExpr::constant(Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    p.psd(expr, "offdiag");
    let sol = p.solve(&default_opts()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert_relative_eq!(sol.objective, 1.0, epsilon = 1e-6);
    assert_relative_eq!(sol.extract_scalar("gamma").unwrap(), 1.0, epsilon = 1e-6);
}

#[test]
fn extract_matches_objective() {
    let mut p = SdpProblem::new();
    let g = p.scalar("gamma");
    p.minimize(p.lin(g));
    let expr = p.lin(g).times_identity(2)
        + MatExpr::constant(Mat::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));
    p.psd(expr, "offdiag");
    let sol = p.solve(&default_opts()).unwrap();
    assert_relative_eq!(
        sol.extract_scalar("gamma").unwrap(),
        sol.objective,
        epsilon = 1e-9
    );
}

#[test]
fn infeasible_pair_detected() {
    // γ >= 0 and -γ - 1 >= 0 cannot both hold.
    let mut p = SdpProblem::new();
    let g = p.scalar("gamma");
    p.minimize(p.lin(g));
    p.nonneg(p.lin(g), "gamma nonneg");
    p.nonneg(p.lin(g).scale(-1.0) + LinExpr::constant(-1.0), "gamma <= -1");
    let sol = p.solve(&default_opts()).unwrap();
    assert_eq!(sol.status, Status::Infeasible);
}

#[test]
fn unbounded_detected() {
    // min -γ s.t. γ >= 0.
    let mut p = SdpProblem::new();
    let g = p.scalar("gamma");
    p.minimize(p.lin(g).scale(-1.0));
    p.nonneg(p.lin(g), "gamma nonneg");
    let sol = p.solve(&default_opts()).unwrap();
    assert_eq!(sol.status, Status::Unbounded);
}

#[test]
fn equality_constraints_hold() {
    // min x + y s.t. x + 2y = 3, x >= 0, y >= 0; optimum at (0, 1.5) wait:
    // objective x + y with x = 3 - 2y: 3 - y, minimized by largest y, y = 1.5
    // at x = 0, value 1.5.
    let mut p = SdpProblem::new();
    let x = p.scalar("x");
    let y = p.scalar("y");
    p.minimize(p.lin(x) + p.lin(y));
    p.eq_zero(p.lin(x) + p.lin(y).scale(2.0) + LinExpr::constant(-3.0));
    p.nonneg(p.lin(x), "x >= 0");
    p.nonneg(p.lin(y), "y >= 0");
    let sol = p.solve(&default_opts()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert_relative_eq!(sol.objective, 1.5, epsilon = 1e-6);
    assert!(sol.max_violation <= 1e-8);
    let xv = sol.extract_scalar("x").unwrap();
    let yv = sol.extract_scalar("y").unwrap();
    assert_relative_eq!(xv + 2.0 * yv, 3.0, epsilon = 1e-7);
}

#[test]
fn sym_variable_trace_heel() {
    // min tr(X) s.t. X ⪰ [[1, 0.3], [0.3, 2]]: optimum X equals the bound.
    let mut p = SdpProblem::new();
    let x = p.sym("X", 2);
    let bound = Mat::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
    p.minimize(p.expr(x).trace());
    p.psd(p.expr(x) - MatExpr::constant(bound.clone()), "X above bound");
    let sol = p.solve(&default_opts()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    let xv = sol.extract_sym("X").unwrap();
    assert!((xv.mat() - &bound).amax() < 1e-6);
}

#[test]
fn weak_duality_reported_gap() {
    let mut p = SdpProblem::new();
    let g = p.scalar("gamma");
    p.minimize(p.lin(g));
    let expr = p.lin(g).times_identity(3)
        + MatExpr::constant(Mat::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 0.5, 1.0, 0.0, -0.25, 0.5, -0.25, 0.0],
        ));
    p.psd(expr, "block");
    let sol = p.solve(&default_opts()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!(sol.duality_gap.abs() <= 1e-6 * (1.0 + sol.objective.abs()));
    assert!(sol.max_violation <= 1e-7);
}

#[test]
fn determinism_identical_iterates() {
    let build = || {
        let mut p = SdpProblem::new();
        let g = p.scalar("gamma");
        let y = p.rect("Y", 1, 2);
        p.minimize(p.lin(g));
        let e = p.lin(g).times_identity(3)
            + MatExpr::block(&[
                &[
                    &MatExpr::zeros(1, 1),
                    &p.expr(y),
                ],
                &[
                    &p.expr(y).transpose(),
                    &MatExpr::constant(Mat::from_row_slice(2, 2, &[0.0, 0.7, 0.7, 0.0])),
                ],
            ]);
        p.psd(e, "blk");
        p.nonneg(p.expr(y).entry(0, 0) + LinExpr::constant(1.0), "y0 >= -1");
        p
    };
    let s1 = build().solve(&default_opts()).unwrap();
    let s2 = build().solve(&default_opts()).unwrap();
    assert_eq!(s1.iterations, s2.iterations);
    assert_eq!(s1.objective.to_bits(), s2.objective.to_bits());
}

#[test]
fn equality_via_paired_psd_blocks() {
    // The same equality modeled as M ⪰ 0 and -M ⪰ 0 is satisfied to the
    // requested feasibility tolerance.
    let mut p = SdpProblem::new();
    let x = p.scalar("x");
    let y = p.scalar("y");
    p.minimize(p.lin(x));
    let m = p.lin(x) + p.lin(y).scale(-1.0) + LinExpr::constant(-1.0); // x - y - 1 == 0
    p.psd(m.clone().times_identity(1), "eq+");
    p.psd(m.scale(-1.0).times_identity(1), "eq-");
    p.nonneg(p.lin(y), "y >= 0");
    p.nonneg(p.lin(x).scale(-1.0) + LinExpr::constant(5.0), "x <= 5");
    let opts = SolverOptions::with_tols(1e-6, 1e-6, 200);
    let sol = p.solve(&opts).unwrap();
    assert!(sol.is_usable());
    let xv = sol.extract_scalar("x").unwrap();
    let yv = sol.extract_scalar("y").unwrap();
    assert!((xv - yv - 1.0).abs() <= 1e-6);
    assert_relative_eq!(sol.objective, 1.0, epsilon = 1e-5);
}

#[test]
fn strict_hint_flags_boundary_optimum() {
    // min x s.t. x >= 0 (strict-hinted "x > 0"): optimum sits on the hinted
    // boundary and must be flagged.
    let mut p = SdpProblem::new();
    let x = p.scalar("x");
    p.minimize(p.lin(x));
    p.psd_strict_hint(p.lin(x).times_identity(1), "x > 0");
    p.nonneg(p.lin(x).scale(-1.0) + LinExpr::constant(1.0), "x <= 1");
    let sol = p.solve(&default_opts()).unwrap();
    assert_eq!(sol.status, Status::NearBoundary);
    assert!(sol.objective.abs() < 1e-6);
}

#[test]
fn sdpa_export_is_stable() {
    let mut p = SdpProblem::new();
    let g = p.scalar("gamma");
    p.minimize(p.lin(g));
    let expr = p.lin(g).times_identity(2)
        + MatExpr::constant(Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    p.psd(expr, "offdiag");
    p.eq_zero(p.lin(g).scale(0.0) + LinExpr::constant(0.0));
    let a = p.to_sdpa_sparse();
    let b = p.to_sdpa_sparse();
    assert_eq!(a, b);
    assert!(a.starts_with('"'));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[1], "1");
    assert_eq!(lines[2], "2");
    assert_eq!(lines[3], "2 -2");
}
