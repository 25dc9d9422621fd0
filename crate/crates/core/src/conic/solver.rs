//! Homogeneous self-dual interior-point method with Nesterov-Todd scaling.
//!
//! The modeled problem is brought to the conic form
//!
//! ```text
//!   minimize    cᵀx
//!   subject to  G x + s = h,   s in a product of PSD cones,
//!               A x = b,
//! ```
//!
//! where each PSD block is handled in scaled-vector (svec) coordinates. The
//! self-dual embedding tracks (x, y, z, s, τ, κ); τ > 0 at convergence yields
//! an optimum, κ > 0 yields an infeasibility or unboundedness certificate.
//! Iterations are Mehrotra predictor-corrector steps. The Newton systems are
//! reduced in NT-scaled coordinates (Gram form GᵀW⁻¹W⁻ᵀG), which keeps the
//! slack-equation residual consistent as the barrier parameter shrinks. All
//! linear algebra is dense and deterministic.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{Mat, SymMat};
use crate::{Error, Result};

use super::{SdpProblem, SdpSolution, Status, VarKind, VarValue};

/// Solver options; defaults follow the artifact-wide tolerances.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Fraction of the step to the cone boundary taken each iteration.
    pub step_frac: f64,
    /// Relative activity threshold for strict-hinted blocks.
    pub strict_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 200,
            step_frac: 0.99,
            strict_tol: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn with_tols(feas_tol: f64, gap_tol: f64, max_iter: usize) -> Self {
        SolverOptions {
            feas_tol,
            gap_tol,
            max_iter,
            ..Default::default()
        }
    }
}

/// svec length for a d x d symmetric block.
fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Symmetric matrix -> scaled vector, lower triangle column-major,
/// off-diagonals multiplied by sqrt(2) so that svec(A)ᵀ svec(B) = tr(AB).
fn svec(m: &Mat) -> DVector<f64> {
    let d = m.nrows();
    let mut v = DVector::zeros(svec_len(d));
    let mut k = 0;
    for j in 0..d {
        for i in j..d {
            v[k] = if i == j { m[(i, j)] } else { SQRT2 * m[(i, j)] };
            k += 1;
        }
    }
    v
}

/// Inverse of [`svec`].
fn smat(v: &DVector<f64>, d: usize) -> Mat {
    let mut m = Mat::zeros(d, d);
    let mut k = 0;
    for j in 0..d {
        for i in j..d {
            if i == j {
                m[(i, j)] = v[k];
            } else {
                let val = v[k] / SQRT2;
                m[(i, j)] = val;
                m[(j, i)] = val;
            }
            k += 1;
        }
    }
    m
}

/// Assembled cone data for the solver.
struct ConeData {
    q: usize,
    c: DVector<f64>,
    blocks: Vec<BlockData>,
    a_eq: DMatrix<f64>,
    b_eq: DVector<f64>,
    data_scale: f64,
}

struct BlockData {
    dim: usize,
    g: DMatrix<f64>,
    h: DVector<f64>,
    strict_hint: bool,
    label: String,
}

fn assemble(p: &SdpProblem) -> Result<ConeData> {
    if p.psd.is_empty() {
        return Err(Error::Model("problem has no PSD constraints".into()));
    }
    let q = p.num_components;
    if q == 0 {
        return Err(Error::Model("problem has no variables".into()));
    }
    let mut c = DVector::zeros(q);
    for (&i, &v) in &p.objective.coeffs {
        if i >= q {
            return Err(Error::Model("objective references unknown component".into()));
        }
        c[i] = v;
    }

    let mut blocks = Vec::with_capacity(p.psd.len());
    for cons in &p.psd {
        let d = cons.expr.rows();
        let nu = svec_len(d);
        let mut g = DMatrix::zeros(nu, q);
        // Constraint is F0 + sum x_j F_j ⪰ 0, i.e. s = h - Gx with
        // h = svec(F0), G columns = -svec(F_j).
        for (&j, coeff) in &cons.expr.terms {
            let col = svec(&((coeff + coeff.transpose()) * 0.5));
            g.column_mut(j).copy_from(&(-col));
        }
        let h = svec(&((&cons.expr.k0 + cons.expr.k0.transpose()) * 0.5));
        blocks.push(BlockData {
            dim: d,
            g,
            h,
            strict_hint: cons.strict_hint,
            label: cons.label.clone(),
        });
    }

    let e = p.equalities.len();
    let mut a_eq = DMatrix::zeros(e, q);
    let mut b_eq = DVector::zeros(e);
    for (r, lin) in p.equalities.iter().enumerate() {
        for (&i, &v) in &lin.coeffs {
            a_eq[(r, i)] = v;
        }
        b_eq[r] = -lin.k0;
    }

    let mut data_scale: f64 = 1.0;
    data_scale = data_scale.max(c.amax());
    for b in &blocks {
        data_scale = data_scale.max(b.g.amax()).max(b.h.amax());
    }
    if e > 0 {
        data_scale = data_scale.max(a_eq.amax()).max(b_eq.amax());
    }

    Ok(ConeData {
        q,
        c,
        blocks,
        a_eq,
        b_eq,
        data_scale,
    })
}

/// Per-block Nesterov-Todd scaling: R with S = R Σ Rᵀ and Z = R⁻ᵀ Σ R⁻¹.
struct NtScaling {
    r: Mat,
    r_inv: Mat,
    /// Scaled-point eigenvalues (diagonal of Σ).
    sigma: DVector<f64>,
}

impl NtScaling {
    fn compute(s: &Mat, z: &Mat) -> Option<NtScaling> {
        let ls = s.clone().cholesky()?.l();
        let lz = z.clone().cholesky()?.l();
        let prod = lz.transpose() * &ls;
        let svd = prod.svd(true, true);
        let u = svd.u.as_ref()?;
        let vt = svd.v_t.as_ref()?;
        let sigma = svd.singular_values.clone();
        let d = s.nrows();
        if sigma.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return None;
        }
        let mut sig_isqrt = Mat::zeros(d, d);
        for i in 0..d {
            sig_isqrt[(i, i)] = 1.0 / sigma[i].sqrt();
        }
        let r = &ls * vt.transpose() * &sig_isqrt;
        let r_inv = &sig_isqrt * u.transpose() * lz.transpose();
        Some(NtScaling { r, r_inv, sigma })
    }

    /// W⁻¹ u = svec(R⁻ᵀ U R⁻¹).
    fn w_inv(&self, u: &DVector<f64>, d: usize) -> DVector<f64> {
        svec(&(self.r_inv.transpose() * smat(u, d) * &self.r_inv))
    }

    /// Wᵀ u = svec(R U Rᵀ).
    fn wt(&self, u: &DVector<f64>, d: usize) -> DVector<f64> {
        svec(&(&self.r * smat(u, d) * self.r.transpose()))
    }

    /// W⁻ᵀ s = svec(R⁻¹ S R⁻ᵀ); maps s to the scaled point (λ at the iterate).
    fn w_inv_t(&self, s: &DVector<f64>, d: usize) -> DVector<f64> {
        svec(&(&self.r_inv * smat(s, d) * self.r_inv.transpose()))
    }
}

/// Symmetrized product in svec coordinates: (U V + V U) / 2.
fn jordan(u: &DVector<f64>, v: &DVector<f64>, d: usize) -> DVector<f64> {
    let um = smat(u, d);
    let vm = smat(v, d);
    let p = &um * &vm;
    svec(&((&p + p.transpose()) * 0.5))
}

/// Applies L(λ)⁻¹ entrywise in matrix form: out_ij = 2 u_ij / (σ_i + σ_j).
fn lambda_inv_apply(sigma: &DVector<f64>, u: &DVector<f64>, d: usize) -> DVector<f64> {
    let um = smat(u, d);
    let mut out = Mat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = 2.0 * um[(i, j)] / (sigma[i] + sigma[j]);
        }
    }
    svec(&out)
}

/// Maximum step to the PSD boundary for Σ + α D ⪰ 0 with Σ = diag(sigma).
fn max_step(sigma: &DVector<f64>, dir: &DVector<f64>, d: usize) -> f64 {
    let dm = smat(dir, d);
    let mut t = Mat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            t[(i, j)] = dm[(i, j)] / (sigma[i].sqrt() * sigma[j].sqrt());
        }
    }
    let min_eig = SymMat::symmetrize(&t).min_eig();
    if min_eig >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min_eig
    }
}

#[derive(Clone)]
struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: Vec<DVector<f64>>,
    s: Vec<DVector<f64>>,
    tau: f64,
    kappa: f64,
}

/// Direction in both plain and NT-scaled coordinates.
struct Direction {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dz: Vec<DVector<f64>>,
    ds: Vec<DVector<f64>>,
    /// W dz per block.
    dz_scaled: Vec<DVector<f64>>,
    /// W⁻ᵀ ds per block.
    ds_scaled: Vec<DVector<f64>>,
    dtau: f64,
    dkappa: f64,
}

pub(super) fn solve(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    let data = assemble(p)?;
    let nblk = data.blocks.len();
    let q = data.q;
    let e = data.a_eq.nrows();
    let rho: usize = data.blocks.iter().map(|b| b.dim).sum();

    let mut it = Iterate {
        x: DVector::zeros(q),
        y: DVector::zeros(e),
        z: data
            .blocks
            .iter()
            .map(|b| svec(&Mat::identity(b.dim, b.dim)))
            .collect(),
        s: data
            .blocks
            .iter()
            .map(|b| svec(&Mat::identity(b.dim, b.dim)))
            .collect(),
        tau: 1.0,
        kappa: 1.0,
    };

    let norm_h: f64 = data
        .blocks
        .iter()
        .map(|b| b.h.amax())
        .fold(0.0, f64::max)
        .max(if e > 0 { data.b_eq.amax() } else { 0.0 })
        .max(1.0);
    let norm_c = data.c.amax().max(1.0);

    // History for the unattained-infimum heuristic.
    let mut history: Vec<(f64, f64)> = Vec::new();

    // Best (most converged) iterate seen, by normalized merit; near a
    // degenerate optimal face the residuals eventually deteriorate as the
    // barrier parameter is pushed below the attainable accuracy.
    let mut best: Option<(f64, Iterate)> = None;

    let mut stop: Option<Status> = None;
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        iterations = iter;

        // Residuals.
        let gtz_aty: DVector<f64> = {
            let mut acc = DVector::zeros(q);
            for (k, b) in data.blocks.iter().enumerate() {
                acc += b.g.transpose() * &it.z[k];
            }
            if e > 0 {
                acc += data.a_eq.transpose() * &it.y;
            }
            acc
        };
        let rx = &gtz_aty + &data.c * it.tau;
        let ry = if e > 0 {
            &data.a_eq * &it.x - &data.b_eq * it.tau
        } else {
            DVector::zeros(0)
        };
        let rz: Vec<DVector<f64>> = data
            .blocks
            .iter()
            .enumerate()
            .map(|(k, b)| &b.g * &it.x + &it.s[k] - &b.h * it.tau)
            .collect();
        let sz: f64 = (0..nblk).map(|k| it.s[k].dot(&it.z[k])).sum();
        let hz_by = data
            .blocks
            .iter()
            .enumerate()
            .map(|(k, b)| b.h.dot(&it.z[k]))
            .sum::<f64>()
            + if e > 0 { data.b_eq.dot(&it.y) } else { 0.0 };
        let cx = data.c.dot(&it.x);
        let rt = cx + hz_by + it.kappa;
        let mu = (sz + it.tau * it.kappa) / (rho as f64 + 1.0);

        // Convergence metrics in de-homogenized coordinates.
        let pobj = cx / it.tau;
        let dobj = -hz_by / it.tau;
        let pres = {
            let mut m = if e > 0 { ry.amax() } else { 0.0 };
            for r in &rz {
                m = m.max(r.amax());
            }
            m / it.tau / norm_h
        };
        let dres = rx.amax() / it.tau / norm_c;
        let gap_rel = sz / (it.tau * it.tau) / (1.0_f64).max(pobj.abs().min(dobj.abs()));

        if std::env::var("ECL_SDP_DEBUG").is_ok() {
            eprintln!(
                "iter {iter}: pres {pres:.3e} dres {dres:.3e} gap {gap_rel:.3e} pobj {pobj:.9e} tau {:.3e} kappa {:.3e} mu {mu:.3e}",
                it.tau, it.kappa
            );
        }

        if pres <= opts.feas_tol && dres <= opts.feas_tol && gap_rel <= opts.gap_tol {
            return finish(p, &data, &it, Status::Optimal, iter, opts);
        }

        let merit = (pres / opts.feas_tol)
            .max(dres / opts.feas_tol)
            .max(gap_rel / opts.gap_tol);
        match &best {
            Some((m, _)) if *m <= merit => {
                if merit > 50.0 * m && *m < 1e4 {
                    stop = Some(Status::NumericalLimit);
                    break;
                }
            }
            _ => best = Some((merit, it.clone())),
        }

        // Infeasibility / unboundedness certificates (raw coordinates).
        if hz_by < 0.0 {
            let res = gtz_aty.amax();
            if res <= opts.feas_tol * data.data_scale * (-hz_by) {
                return finish(p, &data, &it, Status::Infeasible, iter, opts);
            }
        }
        if cx < 0.0 {
            let mut res: f64 = if e > 0 { (&data.a_eq * &it.x).amax() } else { 0.0 };
            for (k, b) in data.blocks.iter().enumerate() {
                res = res.max((&b.g * &it.x + &it.s[k]).amax());
            }
            if res <= opts.feas_tol * data.data_scale * (-cx) {
                return finish(p, &data, &it, Status::Unbounded, iter, opts);
            }
        }

        // Unattained-infimum heuristic: objective stalls while the primal
        // variables blow up.
        let xnorm = it.x.amax() / it.tau;
        history.push((pobj, xnorm));
        if history.len() > 20 {
            let (pobj_then, xnorm_then) = history[history.len() - 21];
            let progress = (pobj - pobj_then).abs();
            if progress < opts.gap_tol.max(1e-12) * (1.0 + pobj.abs())
                && xnorm > 10.0 * xnorm_then.max(1e-8)
                && pres <= 1e-4
            {
                stop = Some(Status::NearBoundary);
                break;
            }
        }

        // NT scalings.
        let mut scalings: Vec<NtScaling> = Vec::with_capacity(nblk);
        let mut scaling_failed = false;
        for (k, b) in data.blocks.iter().enumerate() {
            match NtScaling::compute(&smat(&it.s[k], b.dim), &smat(&it.z[k], b.dim)) {
                Some(nt) => scalings.push(nt),
                None => {
                    scaling_failed = true;
                    break;
                }
            }
        }
        if scaling_failed {
            stop = Some(Status::NumericalLimit);
            break;
        }

        // Scaled constraint matrices G̃_k = W⁻ᵀ G_k and the Gram matrix
        // M = Σ G̃ᵀG̃, assembled once per iteration.
        let mut g_tilde: Vec<DMatrix<f64>> = Vec::with_capacity(nblk);
        let mut m = DMatrix::zeros(q, q);
        for (k, b) in data.blocks.iter().enumerate() {
            let nu = svec_len(b.dim);
            let mut gt = DMatrix::zeros(nu, q);
            for j in 0..q {
                let col = b.g.column(j).into_owned();
                if col.amax() == 0.0 {
                    continue;
                }
                gt.column_mut(j)
                    .copy_from(&scalings[k].w_inv_t(&col, b.dim));
            }
            m += gt.transpose() * &gt;
            g_tilde.push(gt);
        }
        // Static regularization on the data scale only; the Gram matrix norm
        // grows as the barrier parameter shrinks and must not inflate it.
        let reg = 1e-13 * (1.0 + data.data_scale);
        let dim_kkt = q + e;
        let mut kkt = DMatrix::zeros(dim_kkt, dim_kkt);
        kkt.view_mut((0, 0), (q, q)).copy_from(&m);
        for i in 0..q {
            kkt[(i, i)] += reg;
        }
        if e > 0 {
            kkt.view_mut((0, q), (q, e))
                .copy_from(&data.a_eq.transpose());
            kkt.view_mut((q, 0), (e, q)).copy_from(&data.a_eq);
            for i in 0..e {
                kkt[(q + i, q + i)] = -reg;
            }
        }
        let kkt_lu = kkt.clone().lu();

        // Solves
        //   Gᵀ dz + Aᵀ dy = f1,  A dx = f2,  G dx - WᵀW dz = f3
        // in scaled coordinates, returning (dx, dy, dz, W dz).
        let kkt_solve = |f1: &DVector<f64>,
                         f2: &DVector<f64>,
                         f3: &[DVector<f64>]|
         -> Option<(DVector<f64>, DVector<f64>, Vec<DVector<f64>>, Vec<DVector<f64>>)> {
            let mut rhs1 = f1.clone();
            let f3_scaled: Vec<DVector<f64>> = data
                .blocks
                .iter()
                .enumerate()
                .map(|(k, b)| scalings[k].w_inv_t(&f3[k], b.dim))
                .collect();
            for (k, _) in data.blocks.iter().enumerate() {
                rhs1 += g_tilde[k].transpose() * &f3_scaled[k];
            }
            let mut rhs = DVector::zeros(dim_kkt);
            rhs.rows_mut(0, q).copy_from(&rhs1);
            if e > 0 {
                rhs.rows_mut(q, e).copy_from(f2);
            }
            let mut sol = kkt_lu.solve(&rhs)?;
            // One pass of iterative refinement on the saddle system.
            let resid = &rhs - &kkt * &sol;
            if let Some(corr) = kkt_lu.solve(&resid) {
                sol += corr;
            }
            let dx = sol.rows(0, q).into_owned();
            let dy = if e > 0 {
                sol.rows(q, e).into_owned()
            } else {
                DVector::zeros(0)
            };
            let mut dz_scaled = Vec::with_capacity(nblk);
            let mut dz = Vec::with_capacity(nblk);
            for (k, b) in data.blocks.iter().enumerate() {
                let zs = &g_tilde[k] * &dx - &f3_scaled[k];
                dz.push(scalings[k].w_inv(&zs, b.dim));
                dz_scaled.push(zs);
            }
            Some((dx, dy, dz, dz_scaled))
        };

        // Solve 1: the tau column.
        let f3_1: Vec<DVector<f64>> = data.blocks.iter().map(|b| b.h.clone()).collect();
        let neg_c = -&data.c;
        let (x1, y1, z1, z1_scaled) = match kkt_solve(&neg_c, &data.b_eq, &f3_1) {
            Some(s) => s,
            None => {
                stop = Some(Status::NumericalLimit);
                break;
            }
        };
        let denom = data.c.dot(&x1)
            + (if e > 0 { data.b_eq.dot(&y1) } else { 0.0 })
            + data
                .blocks
                .iter()
                .enumerate()
                .map(|(k, b)| b.h.dot(&z1[k]))
                .sum::<f64>()
            - it.kappa / it.tau;

        let compute_dir = |rhs_s: &[DVector<f64>], rhs_tk: f64| -> Option<Direction> {
            // v_s = L(λ)⁻¹ rhs_s per block (scaled space); bz = -rz - Wᵀ v_s.
            let mut vs = Vec::with_capacity(nblk);
            let mut bz = Vec::with_capacity(nblk);
            for (k, b) in data.blocks.iter().enumerate() {
                let v = lambda_inv_apply(&scalings[k].sigma, &rhs_s[k], b.dim);
                bz.push(-&rz[k] - scalings[k].wt(&v, b.dim));
                vs.push(v);
            }
            let neg_rx = -&rx;
            let neg_ry = -&ry;
            let (x2, y2, z2, z2_scaled) = kkt_solve(&neg_rx, &neg_ry, &bz)?;
            let num = -rt - rhs_tk / it.tau
                - (data.c.dot(&x2)
                    + (if e > 0 { data.b_eq.dot(&y2) } else { 0.0 })
                    + data
                        .blocks
                        .iter()
                        .enumerate()
                        .map(|(k, b)| b.h.dot(&z2[k]))
                        .sum::<f64>());
            let dtau = num / denom;
            let dx = &x2 + &x1 * dtau;
            let dy = &y2 + &y1 * dtau;
            let dz: Vec<DVector<f64>> = (0..nblk).map(|k| &z2[k] + &z1[k] * dtau).collect();
            let dz_scaled: Vec<DVector<f64>> = (0..nblk)
                .map(|k| &z2_scaled[k] + &z1_scaled[k] * dtau)
                .collect();
            let ds_scaled: Vec<DVector<f64>> =
                (0..nblk).map(|k| &vs[k] - &dz_scaled[k]).collect();
            let ds: Vec<DVector<f64>> = data
                .blocks
                .iter()
                .enumerate()
                .map(|(k, b)| scalings[k].wt(&ds_scaled[k], b.dim))
                .collect();
            let dkappa = (rhs_tk - it.kappa * dtau) / it.tau;
            Some(Direction {
                dx,
                dy,
                dz,
                ds,
                dz_scaled,
                ds_scaled,
                dtau,
                dkappa,
            })
        };

        let boundary_step = |dir: &Direction| -> f64 {
            let mut a: f64 = f64::INFINITY;
            for (k, b) in data.blocks.iter().enumerate() {
                a = a
                    .min(max_step(&scalings[k].sigma, &dir.ds_scaled[k], b.dim))
                    .min(max_step(&scalings[k].sigma, &dir.dz_scaled[k], b.dim));
            }
            if dir.dtau < 0.0 {
                a = a.min(-it.tau / dir.dtau);
            }
            if dir.dkappa < 0.0 {
                a = a.min(-it.kappa / dir.dkappa);
            }
            a
        };

        // Predictor (affine) pass: rhs_s = -λ∘λ, rhs_tk = -τκ.
        let rhs_s_aff: Vec<DVector<f64>> = scalings
            .iter()
            .zip(data.blocks.iter())
            .map(|(nt, b)| {
                let mut lam2 = Mat::zeros(b.dim, b.dim);
                for i in 0..b.dim {
                    lam2[(i, i)] = -nt.sigma[i] * nt.sigma[i];
                }
                svec(&lam2)
            })
            .collect();
        let aff = match compute_dir(&rhs_s_aff, -it.tau * it.kappa) {
            Some(d) => d,
            None => {
                stop = Some(Status::NumericalLimit);
                break;
            }
        };
        let alpha_aff = boundary_step(&aff).min(1.0);

        // Centering parameter.
        let mut sz_aff = 0.0;
        for k in 0..nblk {
            let s_new = &it.s[k] + &aff.ds[k] * alpha_aff;
            let z_new = &it.z[k] + &aff.dz[k] * alpha_aff;
            sz_aff += s_new.dot(&z_new);
        }
        let mu_aff = (sz_aff
            + (it.tau + alpha_aff * aff.dtau) * (it.kappa + alpha_aff * aff.dkappa))
            / (rho as f64 + 1.0);
        let sigma_c = ((mu_aff / mu).max(0.0)).powi(3).min(1.0);

        // Corrector pass: rhs_s = -λ∘λ - (W⁻ᵀds_aff)∘(Wdz_aff) + σμe.
        let rhs_s_cor: Vec<DVector<f64>> = (0..nblk)
            .map(|k| {
                let b = &data.blocks[k];
                let cross = jordan(&aff.ds_scaled[k], &aff.dz_scaled[k], b.dim);
                let mut r = rhs_s_aff[k].clone();
                r -= cross;
                r += svec(&(Mat::identity(b.dim, b.dim) * (sigma_c * mu)));
                r
            })
            .collect();
        let rhs_tk_cor = -it.tau * it.kappa - aff.dtau * aff.dkappa + sigma_c * mu;
        let dir = match compute_dir(&rhs_s_cor, rhs_tk_cor) {
            Some(d) => d,
            None => {
                stop = Some(Status::NumericalLimit);
                break;
            }
        };

        let alpha = (opts.step_frac * boundary_step(&dir)).min(1.0);
        if !alpha.is_finite() || alpha <= 1e-14 {
            stop = Some(Status::NumericalLimit);
            break;
        }

        it.x += &dir.dx * alpha;
        if e > 0 {
            it.y += &dir.dy * alpha;
        }
        for k in 0..nblk {
            it.s[k] += &dir.ds[k] * alpha;
            it.z[k] += &dir.dz[k] * alpha;
        }
        it.tau += alpha * dir.dtau;
        it.kappa += alpha * dir.dkappa;

        if it.tau < 1e-12 && it.kappa < 1e-12 {
            stop = Some(Status::NumericalLimit);
            break;
        }
    }

    // Iteration cap or early stop: report the best iterate seen with the
    // recorded classification.
    let status = stop.unwrap_or(Status::NumericalLimit);
    let final_it = match (&best, status) {
        (Some((_, b)), Status::NumericalLimit) => b,
        _ => &it,
    };
    finish(p, &data, final_it, status, iterations, opts)
}

/// Builds the solution record, de-homogenizing and applying the strict-hint
/// boundary check.
fn finish(
    p: &SdpProblem,
    data: &ConeData,
    it: &Iterate,
    mut status: Status,
    iterations: usize,
    opts: &SolverOptions,
) -> Result<SdpSolution> {
    let usable = matches!(
        status,
        Status::Optimal | Status::NearBoundary | Status::NumericalLimit
    ) && it.tau > 1e-12;

    let mut values = HashMap::new();
    let mut max_violation = f64::NAN;
    let mut duality_gap = f64::NAN;
    let mut objective = f64::NAN;
    let mut active = Vec::new();

    if usable {
        let x: Vec<f64> = it.x.iter().map(|v| v / it.tau).collect();
        objective = data.c.iter().zip(&x).map(|(c, v)| c * v).sum();

        let xv = DVector::from_vec(x.clone());
        let mut viol: f64 = 0.0;
        for b in &data.blocks {
            let slack = &b.h - &b.g * &xv;
            let sm = SymMat::symmetrize(&smat(&slack, b.dim));
            viol = viol.max((-sm.min_eig()).max(0.0));
            let scale = sm.mat().amax().max(1.0);
            if b.strict_hint && sm.min_eig() <= opts.strict_tol * scale {
                active.push(b.label.clone());
            }
        }
        if data.a_eq.nrows() > 0 {
            viol = viol.max((&data.a_eq * &xv - &data.b_eq).amax());
        }
        max_violation = viol;
        let sz: f64 = it.s.iter().zip(&it.z).map(|(s, z)| s.dot(z)).sum();
        duality_gap = sz / (it.tau * it.tau);

        if status == Status::Optimal && !active.is_empty() {
            status = Status::NearBoundary;
        }

        for info in &p.vars {
            let val = match info.kind {
                VarKind::Scalar => VarValue::Scalar(x[info.offset]),
                VarKind::Rect { rows, cols } => {
                    let mut m = Mat::zeros(rows, cols);
                    let mut idx = info.offset;
                    for j in 0..cols {
                        for i in 0..rows {
                            m[(i, j)] = x[idx];
                            idx += 1;
                        }
                    }
                    VarValue::Rect(m)
                }
                VarKind::Sym { dim } => {
                    let mut m = Mat::zeros(dim, dim);
                    let mut idx = info.offset;
                    for j in 0..dim {
                        for i in j..dim {
                            m[(i, j)] = x[idx];
                            m[(j, i)] = x[idx];
                            idx += 1;
                        }
                    }
                    VarValue::Sym(SymMat::symmetrize(&m))
                }
            };
            values.insert(info.name.clone(), val);
        }
    }

    Ok(SdpSolution::new(
        status,
        objective,
        max_violation,
        duality_gap,
        iterations,
        values,
        active,
    ))
}
