//! Random problem and policy generators used by verification suites.
//!
//! Policies are drawn through Riccati designs with randomized weights, which
//! guarantees stabilizing samples without rejection storms; plants are
//! resampled until the standard controllability/observability flags hold.

use rand::Rng;

use crate::linalg::{self, Mat, SymMat};
use crate::plant::{DynamicPolicy, OutputPlant, Plant, StaticGain};
use crate::Result;

/// Random matrix with entries uniform in `[-scale, scale]`.
pub fn random_mat<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

/// Random symmetric positive definite matrix `G Gᵀ + eps I`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, eps: f64) -> SymMat {
    let g = random_mat(rng, n, n, 1.0);
    SymMat::symmetrize(&(&g * g.transpose() + Mat::identity(n, n) * eps))
}

/// Random Hurwitz matrix: a random matrix shifted left past its spectral
/// abscissa by `margin`.
pub fn random_stable_matrix<R: Rng>(rng: &mut R, n: usize, margin: f64) -> Mat {
    let g = random_mat(rng, n, n, 1.0);
    let alpha = linalg::eig_real_parts(&g)
        .expect("square by construction")
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    g - Mat::identity(n, n) * (alpha + margin)
}

/// Random state-feedback plant with `W ≻ 0`, `Q ≻ 0`, `R ≻ 0` and `(A, B)`
/// controllable.
pub fn random_plant<R: Rng>(rng: &mut R, n: usize, m: usize) -> Result<Plant> {
    loop {
        let a = random_mat(rng, n, n, 1.0);
        let b = random_mat(rng, n, m, 1.0);
        let w = random_spd(rng, n, 0.5);
        let q = random_spd(rng, n, 0.3);
        let r = random_spd(rng, m, 0.5);
        let plant = Plant::from_weights(a, b, &w, q, r)?;
        if !plant.is_controllable()? {
            continue;
        }
        // Reject nearly uncontrollable draws: the nominal Riccati design must
        // succeed with a desk-scale solution.
        match linalg::solve_riccati_ct(&plant.a, &plant.b, &plant.q, &plant.r) {
            Ok(p) if p.mat().amax() < 1e6 => return Ok(plant),
            _ => continue,
        }
    }
}

/// Stabilizing gain from a Riccati design with randomized weights.
pub fn random_stabilizing_gain<R: Rng>(rng: &mut R, plant: &Plant) -> Result<StaticGain> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    let mut last_err = None;
    for _ in 0..50 {
        let q = SymMat::symmetrize(&(plant.q.mat() + random_spd(rng, n, 0.2).mat()));
        let r = SymMat::symmetrize(&(plant.r.mat() + random_spd(rng, m, 0.2).mat()));
        let p = match linalg::solve_riccati_ct(&plant.a, &plant.b, &q, &r) {
            Ok(p) => p,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let r_chol = r.mat().clone().cholesky().expect("R positive definite");
        let k0 = -r_chol.solve(&(plant.b.transpose() * p.mat()));
        // Perturb while keeping stability, so samples are not all Riccati-exact.
        let delta = random_mat(rng, m, n, 0.1);
        let k_try = &k0 + &delta;
        if linalg::is_hurwitz(&(&plant.a + &plant.b * &k_try), 0.0)? {
            return Ok(StaticGain::new(k_try));
        }
        return Ok(StaticGain::new(k0));
    }
    Err(last_err.expect("retry budget exhausted only after failures"))
}

/// Random output-feedback plant satisfying the standard assumption flags.
pub fn random_output_plant<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    p: usize,
) -> Result<OutputPlant> {
    loop {
        let a = random_mat(rng, n, n, 1.0);
        let b2 = random_mat(rng, n, m, 1.0);
        let c2 = random_mat(rng, p, n, 1.0);
        let w = random_spd(rng, n, 0.5);
        let v = random_spd(rng, p, 0.5);
        let q = random_spd(rng, n, 0.3);
        let r = random_spd(rng, m, 0.5);
        let plant = OutputPlant::new(a, b2, c2, w, v, q, r)?;
        if !plant.standard_assumptions_hold()? {
            continue;
        }
        // Reject draws whose nominal observer design is out of desk scale.
        match observer_policy(&plant) {
            Ok(policy) => {
                let cl = plant.assemble_closed_loop(&policy)?;
                let bbt = SymMat::symmetrize(&(&cl.bcl * cl.bcl.transpose()));
                match linalg::solve_lyapunov_ct(&cl.acl, &bbt) {
                    Ok(x) if x.mat().amax() < 1e3 => return Ok(plant),
                    _ => continue,
                }
            }
            Err(_) => continue,
        }
    }
}

/// Certainty-equivalence controller from the two Riccati designs:
/// `A_K = A - B₂K_g - LC₂`, `B_K = L`, `C_K = -K_g`, `D_K = 0`.
pub fn observer_policy(plant: &OutputPlant) -> Result<DynamicPolicy> {
    observer_policy_weighted(plant, &plant.q, &plant.r, &plant.w, &plant.v)
}

/// Certainty-equivalence controller with explicit design weights.
pub fn observer_policy_weighted(
    plant: &OutputPlant,
    q: &SymMat,
    r: &SymMat,
    w: &SymMat,
    v: &SymMat,
) -> Result<DynamicPolicy> {
    let p = linalg::solve_riccati_ct(&plant.a, &plant.b2, q, r)?;
    let r_chol = r.mat().clone().cholesky().expect("R positive definite");
    let kg = r_chol.solve(&(plant.b2.transpose() * p.mat()));
    let s = linalg::solve_riccati_ct(&plant.a.transpose(), &plant.c2.transpose(), w, v)?;
    let v_chol = v.mat().clone().cholesky().expect("V positive definite");
    let l = v_chol.solve(&(&plant.c2 * s.mat())).transpose();
    let ak = &plant.a - &plant.b2 * &kg - &l * &plant.c2;
    DynamicPolicy::strictly_proper(-kg, l, ak)
}

/// Random internally stabilizing strictly proper policy: an observer design
/// with randomized weights, a random similarity transform, and a small
/// stability-preserving perturbation.
pub fn random_stabilizing_policy<R: Rng>(
    rng: &mut R,
    plant: &OutputPlant,
) -> Result<DynamicPolicy> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    let p = plant.output_dim();
    loop {
        let q = SymMat::symmetrize(&(plant.q.mat() + random_spd(rng, n, 0.2).mat()));
        let r = SymMat::symmetrize(&(plant.r.mat() + random_spd(rng, m, 0.2).mat()));
        let w = SymMat::symmetrize(&(plant.w.mat() + random_spd(rng, n, 0.2).mat()));
        let v = SymMat::symmetrize(&(plant.v.mat() + random_spd(rng, p, 0.2).mat()));
        let base = match observer_policy_weighted(plant, &q, &r, &w, &v) {
            Ok(b) => b,
            Err(_) => continue,
        };
        let s = random_invertible(rng, n);
        let transformed = base.similarity(&s)?;
        let perturbed = DynamicPolicy::strictly_proper(
            &transformed.ck + random_mat(rng, m, n, 0.05),
            &transformed.bk + random_mat(rng, n, p, 0.05),
            &transformed.ak + random_mat(rng, n, n, 0.05),
        )?;
        for cand in [perturbed, transformed] {
            let cl = plant.assemble_closed_loop(&cand)?;
            // Keep samples comfortably inside the stabilizing set: a clear
            // stability margin and a desk-scale closed-loop Gramian.
            if !linalg::is_hurwitz(&cl.acl, 0.05)? {
                continue;
            }
            let bbt = SymMat::symmetrize(&(&cl.bcl * cl.bcl.transpose()));
            if let Ok(x) = linalg::solve_lyapunov_ct(&cl.acl, &bbt) {
                if x.mat().amax() < 1e3 {
                    return Ok(cand);
                }
            }
        }
    }
}

/// Random invertible matrix with a determinant bounded away from zero.
pub fn random_invertible<R: Rng>(rng: &mut R, n: usize) -> Mat {
    loop {
        let s = random_mat(rng, n, n, 1.0);
        if s.clone().lu().determinant().abs() > 1e-2 {
            return s;
        }
    }
}

/// Random invertible matrix close to the identity (modest condition number).
pub fn random_well_conditioned<R: Rng>(rng: &mut R, n: usize) -> Mat {
    Mat::identity(n, n) + random_mat(rng, n, n, 0.3)
}
