//! Oracle-backed verification of the output-feedback liftings.
//!
//! Oracles: the certainty-equivalence (two-Riccati) design for LQG optima,
//! central finite differences for gradients, dense grid sweeps for the
//! nonsmooth cost, and hand-computed scalar-block identities for the maps.

use approx::assert_relative_eq;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use ecl_control::conic::{SolverOptions, Status};

fn synth_opts() -> SolverOptions {
    SolverOptions::with_tols(1e-6, 1e-6, 200)
}
use ecl_control::linalg::{Mat, SymMat};
use ecl_control::output_feedback::*;
use ecl_control::plant::{DynamicPolicy, OutputPlant};
use ecl_control::sampling;
use ecl_control::state_feedback::clarke_stationarity_measure;

fn scalar_plant() -> OutputPlant {
    OutputPlant::new(
        Mat::from_element(1, 1, 1.0),
        Mat::from_element(1, 1, 1.0),
        Mat::from_element(1, 1, 1.0),
        SymMat::scalar(1.0),
        SymMat::scalar(1.0),
        SymMat::scalar(1.0),
        SymMat::scalar(1.0),
    )
    .unwrap()
}

fn scalar_policy(dk: f64, ck: f64, bk: f64, ak: f64) -> DynamicPolicy {
    DynamicPolicy::new(
        Mat::from_element(1, 1, dk),
        Mat::from_element(1, 1, ck),
        Mat::from_element(1, 1, bk),
        Mat::from_element(1, 1, ak),
    )
    .unwrap()
}

/// Valid lifted points for the map tests: random certificate data on the
/// extended domain (P ≻ 0 with invertible P₁₂).
fn random_p_with_invertible_p12(rng: &mut ChaCha8Rng, n: usize) -> SymMat {
    loop {
        let p = sampling::random_spd(rng, 2 * n, 0.3);
        if p12_relative_margin(&p).unwrap() > 1e-3 {
            return p;
        }
    }
}

#[test]
fn lqg_cost_matches_two_riccati_optimum_scalar() {
    // All-ones scalar plant: both Riccati equations give 1 + sqrt(2); the
    // optimal squared cost works out to 8 + 6 sqrt(2) by the standard
    // separation identities.
    let plant = scalar_plant();
    let (policy, cost) = lqg_riccati_optimum(&plant).unwrap();
    assert!(plant
        .assemble_closed_loop(&policy)
        .unwrap()
        .is_stable()
        .unwrap());
    assert_relative_eq!(cost * cost, 8.0 + 6.0 * 2.0_f64.sqrt(), epsilon = 1e-9);
}

#[test]
fn lqg_cost_decoupled_equals_open_loop() {
    // Stable plant, zero-coupling policy: the cost is the open-loop H2 value.
    let plant = OutputPlant::new(
        Mat::from_element(1, 1, -1.0),
        Mat::from_element(1, 1, 1.0),
        Mat::from_element(1, 1, 1.0),
        SymMat::scalar(2.0),
        SymMat::scalar(1.0),
        SymMat::scalar(3.0),
        SymMat::scalar(1.0),
    )
    .unwrap();
    let k = scalar_policy(0.0, 0.0, 0.0, -1.0);
    let j = lqg_cost(&plant, &k).unwrap();
    // X solves -2X + W = 0, so X = 1; J^2 = Q X = 3.
    assert_relative_eq!(j, 3.0_f64.sqrt(), epsilon = 1e-10);
}

#[test]
fn lqg_cost_requires_stability_and_strict_properness() {
    let plant = scalar_plant();
    assert!(lqg_cost(&plant, &scalar_policy(0.0, 0.0, 0.0, -1.0)).is_err()); // unstable loop
    let g = 1.0 + 2.0_f64.sqrt();
    assert!(lqg_cost(&plant, &scalar_policy(0.5, -g, g, 1.0 - 2.0 * g)).is_err()); // D_K != 0
}

#[test]
fn lqg_cost_matches_random_cross_module() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let plant = sampling::random_output_plant(&mut rng, 2, 1, 1).unwrap();
        let k = sampling::random_stabilizing_policy(&mut rng, &plant).unwrap();
        let j = lqg_cost(&plant, &k).unwrap();
        let cl = plant.assemble_closed_loop(&k).unwrap();
        let h2 = ecl_control::norms::h2_norm_sq(&cl.acl, &cl.bcl, &cl.ccl).unwrap();
        assert_relative_eq!(j, h2.sqrt(), epsilon = 1e-10 * (1.0 + j));
    }
}

#[test]
fn lqg_gradient_vanishes_at_riccati_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [1, 2] {
        let plant = sampling::random_output_plant(&mut rng, n, 1, 1).unwrap();
        let (policy, _) = lqg_riccati_optimum(&plant).unwrap();
        let (da, db, dc) = lqg_gradient(&plant, &policy).unwrap();
        let g = da.amax().max(db.amax()).max(dc.amax());
        assert!(g <= 1e-7, "gradient at the optimum: {g}");
    }
}

#[test]
fn lqg_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-5;
    for _ in 0..20 {
        let n = rng.gen_range(1..3usize);
        let plant = sampling::random_output_plant(&mut rng, n, 1, 1).unwrap();
        let k = sampling::random_stabilizing_policy(&mut rng, &plant).unwrap();
        let (da, db, dc) = lqg_gradient(&plant, &k).unwrap();
        let cost = |kk: &DynamicPolicy| lqg_cost(&plant, kk).unwrap();
        let scale = da.amax().max(db.amax()).max(dc.amax()).max(1.0);

        for i in 0..n {
            for j in 0..n {
                let mut kp = k.clone();
                kp.ak[(i, j)] += h;
                let mut km = k.clone();
                km.ak[(i, j)] -= h;
                let fd = (cost(&kp) - cost(&km)) / (2.0 * h);
                assert!((fd - da[(i, j)]).abs() / scale < 1e-5);
            }
            let mut kp = k.clone();
            kp.bk[(i, 0)] += h;
            let mut km = k.clone();
            km.bk[(i, 0)] -= h;
            let fd = (cost(&kp) - cost(&km)) / (2.0 * h);
            assert!((fd - db[(i, 0)]).abs() / scale < 1e-5);

            let mut kp = k.clone();
            kp.ck[(0, i)] += h;
            let mut km = k.clone();
            km.ck[(0, i)] -= h;
            let fd = (cost(&kp) - cost(&km)) / (2.0 * h);
            assert!((fd - dc[(0, i)]).abs() / scale < 1e-5);
        }
    }
}

#[test]
fn lqg_gradient_chain_rule_squared_cost() {
    // The gradient of J^2 is 2J times the gradient of J.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let plant = sampling::random_output_plant(&mut rng, 2, 1, 1).unwrap();
    let k = sampling::random_stabilizing_policy(&mut rng, &plant).unwrap();
    let j = lqg_cost(&plant, &k).unwrap();
    let (da, _, _) = lqg_gradient(&plant, &k).unwrap();
    let h = 1e-6;
    let mut kp = k.clone();
    kp.ak[(0, 0)] += h;
    let mut km = k.clone();
    km.ak[(0, 0)] -= h;
    let jp = lqg_cost(&plant, &kp).unwrap();
    let jm = lqg_cost(&plant, &km).unwrap();
    let fd_sq = (jp * jp - jm * jm) / (2.0 * h);
    assert_relative_eq!(fd_sq, 2.0 * j * da[(0, 0)], epsilon = 1e-4 * (1.0 + fd_sq.abs()));
}

#[test]
fn psi_p_scalar_hand_value() {
    // X = Y = 2, Ξ = 1: Y - X⁻¹ = 3/2, so P = [2, 1; 1, 2/3].
    let p = psi_p(&SymMat::scalar(2.0), &SymMat::scalar(2.0), &Mat::from_element(1, 1, 1.0))
        .unwrap();
    let expect = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0 / 3.0]);
    assert!((p.mat() - expect).amax() < 1e-12);
    assert!(p.min_eig() > 0.0);
}

#[test]
fn phi_lambda_zero_policy_keeps_only_the_a_term() {
    let plant = scalar_plant();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = random_p_with_invertible_p12(&mut rng, 1);
    let k0 = scalar_policy(0.0, 0.0, 0.0, 0.0);
    let (lambda, x, y, _) = phi_lambda(&plant, &k0, &p).unwrap();
    // Only P₁₁ A (P⁻¹)₁₁ survives in the M block.
    assert_eq!(lambda[(0, 0)], 0.0);
    assert_eq!(lambda[(0, 1)], 0.0);
    assert_eq!(lambda[(1, 0)], 0.0);
    assert_relative_eq!(
        lambda[(1, 1)],
        y.mat()[(0, 0)] * plant.a[(0, 0)] * x.mat()[(0, 0)],
        epsilon = 1e-12
    );
}

#[test]
fn phi_lambda_hand_value_scalar_blocks() {
    // P = [2, 1; 1, 2]: P⁻¹ = (1/3)[2, -1; -1, 2]. For a generic scalar
    // policy each block follows by direct substitution.
    let plant = scalar_plant();
    let p = SymMat::new(Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
    let k = scalar_policy(0.7, -0.3, 0.4, -1.2);
    let (lambda, x, y, xi) = phi_lambda(&plant, &k, &p).unwrap();
    let pinv11: f64 = 2.0 / 3.0;
    let pinv21: f64 = -1.0 / 3.0;
    assert_relative_eq!(x.mat()[(0, 0)], pinv11, epsilon = 1e-12);
    assert_relative_eq!(y.mat()[(0, 0)], 2.0, epsilon = 1e-12);
    assert_relative_eq!(xi[(0, 0)], 1.0, epsilon = 1e-12);
    assert_relative_eq!(lambda[(0, 0)], 0.7, epsilon = 1e-12);
    // F = D_K C₂ (P⁻¹)₁₁ + C_K (P⁻¹)₂₁
    assert_relative_eq!(
        lambda[(0, 1)],
        0.7 * pinv11 + (-0.3) * pinv21,
        epsilon = 1e-12
    );
    // H = P₁₁ B₂ D_K + P₁₂ B_K
    assert_relative_eq!(lambda[(1, 0)], 2.0 * 0.7 + 1.0 * 0.4, epsilon = 1e-12);
    // M = P₁₂B_K C₂(P⁻¹)₁₁ + P₁₁B₂C_K(P⁻¹)₂₁ + P₁₂A_K(P⁻¹)₂₁
    //     + P₁₁(A + B₂D_K C₂)(P⁻¹)₁₁
    let m = 1.0 * 0.4 * pinv11
        + 2.0 * (-0.3) * pinv21
        + 1.0 * (-1.2) * pinv21
        + 2.0 * (1.0 + 0.7) * pinv11;
    assert_relative_eq!(lambda[(1, 1)], m, epsilon = 1e-12);
}

#[test]
fn psi_p_positive_definite_and_inverse_block_property() {
    // 500 samples of each side of the block identities:
    // Ψ_P(X, Y, Ξ) ≻ 0 whenever [X, I; I, Y] ≻ 0, and
    // [(P⁻¹)₁₁, I; I, P₁₁] ≻ 0 whenever P ≻ 0 with invertible P₁₂.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..500 {
        let n = rng.gen_range(1..4usize);
        let x = sampling::random_spd(&mut rng, n, 0.4);
        let gap = sampling::random_spd(&mut rng, n, 0.2);
        let x_inv = x.mat().clone().cholesky().unwrap().inverse();
        let y = SymMat::symmetrize(&(x_inv + gap.mat()));
        let xi = sampling::random_invertible(&mut rng, n);
        let p = psi_p(&x, &y, &xi).unwrap();
        assert!(p.min_eig() > 0.0, "psi_p output must be PD");
        // (Ψ_P⁻¹)₁₁ = X
        let p_inv = p.mat().clone().cholesky().unwrap().inverse();
        let p_inv11 = p_inv.view((0, 0), (n, n)).into_owned();
        assert!((&p_inv11 - x.mat()).amax() < 1e-8 * (1.0 + x.mat().amax()));
    }
    for _ in 0..500 {
        let n = rng.gen_range(1..4usize);
        let p = random_p_with_invertible_p12(&mut rng, n);
        let blocks = p_blocks(&p).unwrap();
        let mut test = Mat::zeros(2 * n, 2 * n);
        test.view_mut((0, 0), (n, n)).copy_from(&blocks.pinv11);
        test.view_mut((0, n), (n, n)).copy_from(&Mat::identity(n, n));
        test.view_mut((n, 0), (n, n)).copy_from(&Mat::identity(n, n));
        test.view_mut((n, n), (n, n)).copy_from(&blocks.p11);
        assert!(SymMat::symmetrize(&test).min_eig() > 0.0);
    }
}

#[test]
fn scherer_round_trip_identities() {
    // Lemma-level identities on the extended domains, 500 samples:
    // Ψ_P((P⁻¹)₁₁, P₁₁, P₁₂) = P and Ψ_K(Φ_Λ(K, P), ...) = K, plus
    // Φ_Λ(Ψ_K(Λ, ...), Ψ_P(...)) = Λ.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..500 {
        let n = rng.gen_range(1..4usize);
        let m = rng.gen_range(1..3usize);
        let pdim = rng.gen_range(1..3usize);
        let plant = sampling::random_output_plant(&mut rng, n, m, pdim).unwrap();

        // Lifted -> convex -> lifted.
        let p = random_p_with_invertible_p12(&mut rng, n);
        let k = DynamicPolicy::new(
            sampling::random_mat(&mut rng, m, pdim, 1.0),
            sampling::random_mat(&mut rng, m, n, 1.0),
            sampling::random_mat(&mut rng, n, pdim, 1.0),
            sampling::random_mat(&mut rng, n, n, 1.0),
        )
        .unwrap();
        let (lambda, x, y, xi) = phi_lambda(&plant, &k, &p).unwrap();
        let p_back = psi_p(&x, &y, &xi).unwrap();
        let scale_p = 1.0 + p.mat().amax();
        assert!(
            (p_back.mat() - p.mat()).amax() / scale_p < 1e-8,
            "psi_p(phi blocks) must reproduce P (trial {trial})"
        );
        let k_back = psi_k(&plant, &lambda, &x, &y, &xi).unwrap();
        let scale_k = 1.0 + k.packed().amax();
        assert!(
            (k_back.packed() - k.packed()).amax() / scale_k < 1e-8,
            "psi_k(phi_lambda) must reproduce K (trial {trial})"
        );

        // Convex -> lifted -> convex.
        let x2 = sampling::random_spd(&mut rng, n, 0.4);
        let gap = sampling::random_spd(&mut rng, n, 0.2);
        let y2 = SymMat::symmetrize(&(x2.mat().clone().cholesky().unwrap().inverse() + gap.mat()));
        let xi2 = sampling::random_invertible(&mut rng, n);
        let lambda2 = sampling::random_mat(&mut rng, m + n, pdim + n, 1.0);
        let k2 = psi_k(&plant, &lambda2, &x2, &y2, &xi2).unwrap();
        let p2 = psi_p(&x2, &y2, &xi2).unwrap();
        let (lambda_back, x_back, y_back, xi_back) = phi_lambda(&plant, &k2, &p2).unwrap();
        let scale_l = 1.0 + lambda2.amax();
        assert!((&lambda_back - &lambda2).amax() / scale_l < 1e-7, "trial {trial}");
        assert!((x_back.mat() - x2.mat()).amax() < 1e-8 * (1.0 + x2.mat().amax()));
        assert!((y_back.mat() - y2.mat()).amax() < 1e-8 * (1.0 + y2.mat().amax()));
        assert!((&xi_back - &xi2).amax() < 1e-8 * (1.0 + xi2.amax()));
    }
}

#[test]
fn congruence_matrix_identity() {
    // PT = [I, P₁₁; 0, P₁₂ᵀ] and T is invertible whenever P₁₂ is.
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..100 {
        let n = rng.gen_range(1..4usize);
        let p = random_p_with_invertible_p12(&mut rng, n);
        let t = congruence_t(&p).unwrap();
        let pt = p.mat() * &t;
        let blocks = p_blocks(&p).unwrap();
        let mut expect = Mat::zeros(2 * n, 2 * n);
        expect.view_mut((0, 0), (n, n)).copy_from(&Mat::identity(n, n));
        expect.view_mut((0, n), (n, n)).copy_from(&blocks.p11);
        expect.view_mut((n, n), (n, n)).copy_from(&blocks.p12.transpose());
        assert!((&pt - &expect).amax() < 1e-9 * (1.0 + p.mat().amax()));
        assert!(t.lu().determinant().abs() > 0.0);
    }
}

#[test]
fn lqg_congruence_identity() {
    // 𝒜 and ℬ at the mapped point equal the diag(T, I)-congruences of the
    // lifted LMI blocks, for arbitrary (K, γ, P, Γ) in the extended domain.
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let n = rng.gen_range(1..3usize);
        let m = rng.gen_range(1..3usize);
        let pdim = rng.gen_range(1..3usize);
        let plant = sampling::random_output_plant(&mut rng, n, m, pdim).unwrap();
        let k = DynamicPolicy::strictly_proper(
            sampling::random_mat(&mut rng, m, n, 1.0),
            sampling::random_mat(&mut rng, n, pdim, 1.0),
            sampling::random_mat(&mut rng, n, n, 1.0),
        )
        .unwrap();
        let p = random_p_with_invertible_p12(&mut rng, n);
        let gamma = rng.gen_range(0.5..5.0);
        let trace_cert = sampling::random_spd(&mut rng, n + m, 0.2);

        let pt = LqgLiftedPoint {
            policy: k.clone(),
            gamma,
            p: p.clone(),
            trace_cert: trace_cert.clone(),
        };
        let (cp, _aux) = phi_lqg(&plant, &pt).unwrap();
        let (a_img, b_img) = lqg_operators_at(&plant, &cp).unwrap();

        let cl = plant.assemble_closed_loop(&k).unwrap();
        let nd = cl.bcl.ncols();
        let nz = cl.ccl.nrows();
        let mut l1 = Mat::zeros(2 * n + nd, 2 * n + nd);
        let pa = cl.acl.transpose() * p.mat() + p.mat() * &cl.acl;
        l1.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&pa);
        let pb = p.mat() * &cl.bcl;
        l1.view_mut((0, 2 * n), (2 * n, nd)).copy_from(&pb);
        l1.view_mut((2 * n, 0), (nd, 2 * n)).copy_from(&pb.transpose());
        l1.view_mut((2 * n, 2 * n), (nd, nd))
            .copy_from(&(-gamma * Mat::identity(nd, nd)));
        let mut l2 = Mat::zeros(2 * n + nz, 2 * n + nz);
        l2.view_mut((0, 0), (2 * n, 2 * n)).copy_from(p.mat());
        l2.view_mut((0, 2 * n), (2 * n, nz)).copy_from(&cl.ccl.transpose());
        l2.view_mut((2 * n, 0), (nz, 2 * n)).copy_from(&cl.ccl);
        l2.view_mut((2 * n, 2 * n), (nz, nz)).copy_from(trace_cert.mat());

        let t = congruence_t(&p).unwrap();
        let a_cong = congruence_apply(&t, nd, &l1);
        let b_cong = congruence_apply(&t, nz, &l2);
        let scale = 1.0 + a_img.amax() + b_img.amax();
        assert!((&a_img - &a_cong).amax() / scale < 1e-10);
        assert!((&b_img - &b_cong).amax() / scale < 1e-10);
    }
}

#[test]
fn hinf_congruence_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..100 {
        let n = rng.gen_range(1..3usize);
        let m = rng.gen_range(1..3usize);
        let pdim = rng.gen_range(1..3usize);
        let plant = sampling::random_output_plant(&mut rng, n, m, pdim).unwrap();
        let k = DynamicPolicy::new(
            sampling::random_mat(&mut rng, m, pdim, 1.0),
            sampling::random_mat(&mut rng, m, n, 1.0),
            sampling::random_mat(&mut rng, n, pdim, 1.0),
            sampling::random_mat(&mut rng, n, n, 1.0),
        )
        .unwrap();
        let p = random_p_with_invertible_p12(&mut rng, n);
        let gamma = rng.gen_range(0.5..5.0);
        let pt = HinfOfLiftedPoint {
            policy: k.clone(),
            gamma,
            p: p.clone(),
        };
        let (cp, _aux) = phi_hinf_of(&plant, &pt).unwrap();
        let m_img = hinf_of_m_operator_at(&plant, &cp).unwrap();

        let cl = plant.assemble_closed_loop(&k).unwrap();
        let nd = cl.bcl.ncols();
        let nz = cl.ccl.nrows();
        let dim = 2 * n + nd + nz;
        let mut lmi = Mat::zeros(dim, dim);
        let pa = cl.acl.transpose() * p.mat() + p.mat() * &cl.acl;
        lmi.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&pa);
        let pb = p.mat() * &cl.bcl;
        lmi.view_mut((0, 2 * n), (2 * n, nd)).copy_from(&pb);
        lmi.view_mut((2 * n, 0), (nd, 2 * n)).copy_from(&pb.transpose());
        lmi.view_mut((2 * n, 2 * n), (nd, nd))
            .copy_from(&(-gamma * Mat::identity(nd, nd)));
        lmi.view_mut((0, 2 * n + nd), (2 * n, nz))
            .copy_from(&cl.ccl.transpose());
        lmi.view_mut((2 * n + nd, 0), (nz, 2 * n)).copy_from(&cl.ccl);
        lmi.view_mut((2 * n, 2 * n + nd), (nd, nz))
            .copy_from(&cl.dcl.transpose());
        lmi.view_mut((2 * n + nd, 2 * n), (nz, nd)).copy_from(&cl.dcl);
        lmi.view_mut((2 * n + nd, 2 * n + nd), (nz, nz))
            .copy_from(&(-gamma * Mat::identity(nz, nz)));

        let t = congruence_t(&p).unwrap();
        let m_cong = congruence_apply(&t, nd + nz, &lmi);
        let scale = 1.0 + m_img.amax();
        assert!((&m_img - &m_cong).amax() / scale < 1e-10);
    }
}

#[test]
fn lqg_lift_feasibility_cases() {
    let plant = scalar_plant();
    let (policy, cost) = lqg_riccati_optimum(&plant).unwrap();

    // Slack level: certificate exists.
    let lifted = lqg_lift(&plant, &policy, cost + 0.1).unwrap();
    assert!(lifted.is_some());
    let pt = lifted.unwrap();
    let (diss, gram, trace_slack, margin) = lqg_lift_residuals(&plant, &pt).unwrap();
    assert!(diss <= 1e-7);
    assert!(gram <= 1e-7);
    assert!(trace_slack <= 1e-7);
    assert!(margin >= 1e-6);

    // Below the cost: no certificate.
    assert!(lqg_lift(&plant, &policy, cost * 0.98).unwrap().is_none());

    // At the cost exactly: the optimal policy is non-degenerate.
    let at_cost = lqg_lift(&plant, &policy, cost).unwrap();
    assert!(at_cost.is_some());
}

#[test]
fn lqg_round_trips_through_lift() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut done = 0;
    while done < 30 {
        let n = rng.gen_range(1..4usize);
        let plant = sampling::random_output_plant(&mut rng, n, 1, 1).unwrap();
        let k = sampling::random_stabilizing_policy(&mut rng, &plant).unwrap();
        let cost = lqg_cost(&plant, &k).unwrap();
        let Some(pt) = lqg_lift(&plant, &k, cost + 0.1).unwrap() else {
            continue;
        };
        let (cp, aux) = phi_lqg(&plant, &pt).unwrap();
        assert_eq!(cp.gamma, pt.gamma);
        assert!((cp.trace_cert.mat() - pt.trace_cert.mat()).amax() == 0.0);
        assert!(cp.trace_cert.trace() <= cp.gamma + 1e-7);
        let back = psi_lqg(&plant, &cp, &aux).unwrap();
        let scale = 1.0 + pt.policy.packed().amax() + pt.p.mat().amax();
        assert!((back.policy.packed() - pt.policy.packed()).amax() / scale < 1e-9);
        assert!((back.p.mat() - pt.p.mat()).amax() / scale < 1e-9);
        done += 1;
    }
}

#[test]
fn lqg_sdp_scalar_plant_matches_oracle() {
    let plant = scalar_plant();
    let (_, oracle) = lqg_riccati_optimum(&plant).unwrap();
    let out = lqg_solve(&plant, &synth_opts()).unwrap();
    assert_relative_eq!(out.gamma, oracle, epsilon = 1e-5 * oracle);
    // Recovered policy is stabilizing with cost within tolerance of γ*.
    let cost = lqg_cost(&plant, &out.policy).unwrap();
    assert!(cost <= out.gamma * (1.0 + 1e-5));
}

#[test]
fn lqg_sdp_random_plants_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for seed in 0..10 {
        let n = 2;
        let plant = sampling::random_output_plant(&mut rng, n, 1, 1).unwrap();
        let (_, oracle) = lqg_riccati_optimum(&plant).unwrap();
        let out = lqg_solve(&plant, &synth_opts()).unwrap();
        assert_relative_eq!(
            out.gamma,
            oracle,
            epsilon = 1e-5 * oracle.max(1.0)
        );
        let cost = lqg_cost(&plant, &out.policy).unwrap();
        assert!(
            cost <= out.gamma * (1.0 + 1e-5),
            "recovered policy cost {cost} vs gamma {} (seed {seed})",
            out.gamma
        );
    }
}

#[test]
fn lqg_sdp_rejects_missing_assumptions() {
    // W = 0 violates (A, W^{1/2}) controllability.
    let plant = OutputPlant::new(
        Mat::from_element(1, 1, 1.0),
        Mat::from_element(1, 1, 1.0),
        Mat::from_element(1, 1, 1.0),
        SymMat::scalar(0.0),
        SymMat::scalar(1.0),
        SymMat::scalar(1.0),
        SymMat::scalar(1.0),
    )
    .unwrap();
    assert!(lqg_sdp(&plant).is_err());
}

#[test]
fn lqg_similarity_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..10 {
        let n = rng.gen_range(1..4usize);
        let plant = sampling::random_output_plant(&mut rng, n, 1, 1).unwrap();
        let k = sampling::random_stabilizing_policy(&mut rng, &plant).unwrap();
        let s = sampling::random_well_conditioned(&mut rng, n);
        let kt = k.similarity(&s).unwrap();
        let j1 = lqg_cost(&plant, &k).unwrap();
        let j2 = lqg_cost(&plant, &kt).unwrap();
        assert_relative_eq!(j1, j2, epsilon = 1e-7 * (1.0 + j1));
    }
}

#[test]
fn lqg_nondegenerate_stationary_policy_is_globally_optimal() {
    // Whenever the lift succeeds at the cost level and the gradient vanishes,
    // the cost matches the SDP optimum.
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..5 {
        let plant = sampling::random_output_plant(&mut rng, 2, 1, 1).unwrap();
        let (policy, cost) = lqg_riccati_optimum(&plant).unwrap();
        let (da, db, dc) = lqg_gradient(&plant, &policy).unwrap();
        assert!(da.amax().max(db.amax()).max(dc.amax()) <= 1e-7);
        assert!(lqg_lift(&plant, &policy, cost).unwrap().is_some());
        let out = lqg_solve(&plant, &synth_opts()).unwrap();
        assert_relative_eq!(out.gamma, cost, epsilon = 1e-5 * cost.max(1.0));
    }
}

#[test]
fn hinf_of_round_trips_through_lift() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let mut done = 0;
    while done < 30 {
        let n = rng.gen_range(1..3usize);
        let plant = sampling::random_output_plant(&mut rng, n, 1, 1).unwrap();
        let k = sampling::random_stabilizing_policy(&mut rng, &plant).unwrap();
        let cost = hinf_of_cost(&plant, &k).unwrap();
        let Some(pt) = hinf_of_lift(&plant, &k, cost * 1.05).unwrap() else {
            continue;
        };
        assert!(hinf_of_lift_residual(&plant, &pt).unwrap() <= 1e-7 * (1.0 + cost));
        let (cp, aux) = phi_hinf_of(&plant, &pt).unwrap();
        assert_eq!(cp.gamma, pt.gamma);
        let back = psi_hinf_of(&plant, &cp, &aux).unwrap();
        let scale = 1.0 + pt.policy.packed().amax() + pt.p.mat().amax();
        assert!((back.policy.packed() - pt.policy.packed()).amax() / scale < 1e-9);
        assert!((back.p.mat() - pt.p.mat()).amax() / scale < 1e-9);
        done += 1;
    }
}

#[test]
fn hinf_of_grid_oracle_all_ones_slice() {
    // All-ones scalar plant on the slice A_K = -1, D_K = -1 - sqrt(3):
    // stability region is B_K C_K < sqrt(3). The SDP value lower-bounds every
    // grid cost and is approached at the best grid point.
    let plant = scalar_plant();
    let dk = -1.0 - 3.0_f64.sqrt();
    let out = hinf_of_solve(&plant, &synth_opts()).unwrap();
    let mut best = f64::INFINITY;
    for i in 0..21 {
        for j in 0..21 {
            let bk = -1.5 + 0.15 * i as f64;
            let ck = -1.5 + 0.15 * j as f64;
            let k = scalar_policy(dk, ck, bk, -1.0);
            if plant
                .assemble_closed_loop(&k)
                .unwrap()
                .is_stable()
                .unwrap()
            {
                let j_cost = hinf_of_cost(&plant, &k).unwrap();
                assert!(out.gamma <= j_cost + 1e-6 * (1.0 + j_cost));
                best = best.min(j_cost);
            }
        }
    }
    assert!(best < f64::INFINITY);
    // The slice contains near-optimal policies; the SDP value must not be
    // far below the best grid value (grid oracle sanity).
    assert!(out.gamma >= 0.2 * best);
}

#[test]
fn hinf_of_subgradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut done = 0;
    while done < 5 {
        let n = rng.gen_range(1..3usize);
        let plant = sampling::random_output_plant(&mut rng, n, 1, 1).unwrap();
        let mut k = sampling::random_stabilizing_policy(&mut rng, &plant).unwrap();
        k.dk = sampling::random_mat(&mut rng, 1, 1, 0.2);
        if !plant
            .assemble_closed_loop(&k)
            .unwrap()
            .is_stable()
            .unwrap()
        {
            continue;
        }
        // Only test smooth points: a single peak with multiplicity one.
        let q0 = {
            let (_, peaks) = hinf_of_peaks(&plant, &k, 1e-8).unwrap();
            let finite: Vec<f64> = peaks.iter().filter_map(|p| p.omega).collect();
            if finite.len() != 1 {
                continue;
            }
            hinf_of_peak_basis(&plant, &k, finite[0]).unwrap()
        };
        if q0.ncols() != 1 {
            continue;
        }
        let g = hinf_of_subgradient_default(&plant, &k).unwrap();
        let h = 1e-5;
        let m = plant.input_dim();
        let pdim = plant.output_dim();
        let packed = k.packed();
        let mut fd = Mat::zeros(m + n, pdim + n);
        let mut ok = true;
        for i in 0..m + n {
            for j in 0..pdim + n {
                let mut up = packed.clone();
                up[(i, j)] += h;
                let mut dn = packed.clone();
                dn[(i, j)] -= h;
                let kp = DynamicPolicy::from_packed(&up, m, pdim).unwrap();
                let km = DynamicPolicy::from_packed(&dn, m, pdim).unwrap();
                match (hinf_of_cost_with(&plant, &kp, 1e-10), hinf_of_cost_with(&plant, &km, 1e-10)) {
                    (Ok(a), Ok(b)) => fd[(i, j)] = (a - b) / (2.0 * h),
                    _ => {
                        ok = false;
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        let scale = g.amax().max(1.0);
        assert!(
            (&g - &fd).amax() / scale < 1e-4,
            "subgradient vs finite differences: {:.3e}",
            (&g - &fd).amax() / scale
        );
        done += 1;
    }
}

#[test]
fn hinf_of_sdp_certifies_stationary_optimum() {
    // On plants where the optimum is attained in the interior (clean Optimal
    // status), the recovered policy is non-degenerate (lift succeeds at the
    // cost level) and Clarke-stationary within tolerance.
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut clean = 0;
    for _ in 0..10 {
        let n = 1 + (clean % 2);
        let plant = sampling::random_output_plant(&mut rng, n, 1, 1).unwrap();
        let Ok(out) = hinf_of_solve(&plant, &synth_opts()) else {
            continue;
        };
        if out.status != Status::Optimal {
            continue;
        }
        let cost = hinf_of_cost(&plant, &out.policy).unwrap();
        assert!(cost <= out.gamma * (1.0 + 1e-5));
        let lift = hinf_of_lift(&plant, &out.policy, cost * (1.0 + 1e-7)).unwrap();
        assert!(lift.is_some(), "optimal policy must be liftable at its cost");
        let gens = hinf_of_extreme_subgradients(&plant, &out.policy).unwrap();
        let measure = clarke_stationarity_measure(&gens);
        assert!(measure <= 1e-5 * (1.0 + cost), "measure {measure}");
        clean += 1;
        if clean >= 3 {
            break;
        }
    }
    assert!(clean >= 3, "expected at least 3 interior optima, got {clean}");
}

#[test]
fn hinf_of_boundary_optimum_recovery() {
    // The all-ones plant drives the coupling block to the boundary: the
    // solver must flag it and still recover a stabilizing near-optimal
    // representative.
    let plant = scalar_plant();
    let out = hinf_of_solve(&plant, &synth_opts()).unwrap();
    assert_eq!(out.status, Status::NearBoundary);
    let cost = hinf_of_cost(&plant, &out.policy).unwrap();
    assert!(cost <= out.gamma * (1.0 + 1e-2));
    assert!(cost >= out.gamma * (1.0 - 1e-6));
}

#[test]
fn hinf_of_similarity_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    for _ in 0..10 {
        let n = rng.gen_range(1..4usize);
        let plant = sampling::random_output_plant(&mut rng, n, 1, 1).unwrap();
        let k = sampling::random_stabilizing_policy(&mut rng, &plant).unwrap();
        let s = sampling::random_well_conditioned(&mut rng, n);
        let kt = k.similarity(&s).unwrap();
        let j1 = hinf_of_cost(&plant, &k).unwrap();
        let j2 = hinf_of_cost(&plant, &kt).unwrap();
        assert_relative_eq!(j1, j2, epsilon = 1e-6 * (1.0 + j1));
    }
}

#[test]
fn hinf_of_lift_below_cost_is_rejected() {
    let plant = scalar_plant();
    let (policy, _) = lqg_riccati_optimum(&plant).unwrap();
    let cost = hinf_of_cost(&plant, &policy).unwrap();
    assert!(hinf_of_lift(&plant, &policy, cost * 0.9).unwrap().is_none());
}
