//! Problem-data containers and closed-loop assembly.
//!
//! Two plant forms are supported: state feedback (static gains `u = Kx`) and
//! output feedback (full-order dynamic policies). Closed-loop matrices follow
//! the standard generalized-plant convention with
//! `B1 = [W^{1/2} 0]`, `C1 = [Q^{1/2}; 0]`, `D12 = [0; R^{1/2}]`,
//! `D21 = [0 V^{1/2}]`.

use nalgebra::{Complex, DMatrix};

use crate::linalg::{self, Mat, SymMat};
use crate::{Error, Result};

pub type CMat = DMatrix<Complex<f64>>;

/// State-feedback problem data: dynamics `ẋ = Ax + Bu + B_w w` with
/// performance weights `Q ⪰ 0`, `R ≻ 0` and noise shape `W = B_w B_wᵀ`.
#[derive(Debug, Clone)]
pub struct Plant {
    pub a: Mat,
    pub b: Mat,
    /// Noise input matrix `B_w` (square, `W = B_w B_wᵀ`).
    pub bw: Mat,
    pub q: SymMat,
    pub r: SymMat,
}

impl Plant {
    pub fn new(a: Mat, b: Mat, bw: Mat, q: SymMat, r: SymMat) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::Dimension("A must be square".into()));
        }
        if b.nrows() != n || bw.nrows() != n {
            return Err(Error::Dimension("B and Bw must have n rows".into()));
        }
        if q.dim() != n {
            return Err(Error::Dimension("Q must be n x n".into()));
        }
        if r.dim() != b.ncols() {
            return Err(Error::Dimension("R must be m x m".into()));
        }
        if r.min_eig() <= 0.0 {
            return Err(Error::Precondition("R must be positive definite".into()));
        }
        if q.min_eig() < -1e-10 * q.mat().amax().max(1.0) {
            return Err(Error::Precondition("Q must be positive semidefinite".into()));
        }
        Ok(Plant { a, b, bw, q, r })
    }

    /// Builds a plant from the noise weight `W ⪰ 0`, taking `B_w = W^{1/2}`.
    pub fn from_weights(a: Mat, b: Mat, w: &SymMat, q: SymMat, r: SymMat) -> Result<Self> {
        let bw = w.sqrt_psd()?;
        Plant::new(a, b, bw, q, r)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// `W = B_w B_wᵀ`.
    pub fn w(&self) -> SymMat {
        SymMat::symmetrize(&(&self.bw * self.bw.transpose()))
    }

    /// True iff `(A, B)` is controllable.
    pub fn is_controllable(&self) -> Result<bool> {
        linalg::is_controllable(&self.a, &self.b)
    }

    /// True iff `B_w` has full row rank (equivalently `W ≻ 0`).
    pub fn noise_full_rank(&self) -> bool {
        self.w().min_eig() > 1e-12 * self.w().mat().amax().max(1.0)
    }

    /// Closed-loop matrix `A + BK`.
    pub fn closed_a(&self, k: &StaticGain) -> Mat {
        &self.a + &self.b * &k.k
    }

    /// `C_z = [Q^{1/2}; R^{1/2} K]`, the performance output under gain `K`.
    pub fn performance_output(&self, k: &StaticGain) -> Result<Mat> {
        let qs = self.q.sqrt_psd()?;
        let rs = self.r.sqrt_psd()?;
        let n = self.state_dim();
        let m = self.input_dim();
        let mut c = Mat::zeros(n + m, n);
        c.view_mut((0, 0), (n, n)).copy_from(&qs);
        c.view_mut((n, 0), (m, n)).copy_from(&(&rs * &k.k));
        Ok(c)
    }

    /// Frequency response of the closed loop `T(s) = C_z (sI - A - BK)^{-1} B_w`.
    pub fn tzw_at(&self, k: &StaticGain, s: Complex<f64>) -> Result<CMat> {
        let acl = self.closed_a(k);
        let c = self.performance_output(k)?;
        resolvent_product(&acl, &self.bw, &c, None, s)
    }
}

/// Output-feedback problem data: dynamics `ẋ = Ax + B₂u + W^{1/2}w`,
/// `y = C₂x + V^{1/2}v`, weights `Q ⪰ 0`, `R ≻ 0`, `W ⪰ 0`, `V ≻ 0`.
#[derive(Debug, Clone)]
pub struct OutputPlant {
    pub a: Mat,
    pub b2: Mat,
    pub c2: Mat,
    pub w: SymMat,
    pub v: SymMat,
    pub q: SymMat,
    pub r: SymMat,
}

impl OutputPlant {
    pub fn new(
        a: Mat,
        b2: Mat,
        c2: Mat,
        w: SymMat,
        v: SymMat,
        q: SymMat,
        r: SymMat,
    ) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::Dimension("A must be square".into()));
        }
        if b2.nrows() != n || c2.ncols() != n {
            return Err(Error::Dimension("B2/C2 dimensions must match A".into()));
        }
        if w.dim() != n || q.dim() != n {
            return Err(Error::Dimension("W and Q must be n x n".into()));
        }
        if v.dim() != c2.nrows() {
            return Err(Error::Dimension("V must be p x p".into()));
        }
        if r.dim() != b2.ncols() {
            return Err(Error::Dimension("R must be m x m".into()));
        }
        if r.min_eig() <= 0.0 || v.min_eig() <= 0.0 {
            return Err(Error::Precondition(
                "R and V must be positive definite".into(),
            ));
        }
        Ok(OutputPlant {
            a,
            b2,
            c2,
            w,
            v,
            q,
            r,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b2.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c2.nrows()
    }

    /// `B1 = [W^{1/2} 0_{n x p}]`.
    pub fn b1(&self) -> Result<Mat> {
        let n = self.state_dim();
        let p = self.output_dim();
        let ws = self.w.sqrt_psd()?;
        let mut b1 = Mat::zeros(n, n + p);
        b1.view_mut((0, 0), (n, n)).copy_from(&ws);
        Ok(b1)
    }

    /// `C1 = [Q^{1/2}; 0_{m x n}]`.
    pub fn c1(&self) -> Result<Mat> {
        let n = self.state_dim();
        let m = self.input_dim();
        let qs = self.q.sqrt_psd()?;
        let mut c1 = Mat::zeros(n + m, n);
        c1.view_mut((0, 0), (n, n)).copy_from(&qs);
        Ok(c1)
    }

    /// `D12 = [0_{n x m}; R^{1/2}]`.
    pub fn d12(&self) -> Result<Mat> {
        let n = self.state_dim();
        let m = self.input_dim();
        let rs = self.r.sqrt_psd()?;
        let mut d = Mat::zeros(n + m, m);
        d.view_mut((n, 0), (m, m)).copy_from(&rs);
        Ok(d)
    }

    /// `D21 = [0_{p x n} V^{1/2}]`.
    pub fn d21(&self) -> Result<Mat> {
        let n = self.state_dim();
        let p = self.output_dim();
        let vs = self.v.sqrt_psd()?;
        let mut d = Mat::zeros(p, n + p);
        d.view_mut((0, n), (p, p)).copy_from(&vs);
        Ok(d)
    }

    /// Standard-assumption flags: `(A, W^{1/2})` controllable, `(Q^{1/2}, A)`
    /// observable, `(A, B₂)` controllable, `(C₂, A)` observable.
    pub fn standard_assumptions_hold(&self) -> Result<bool> {
        let ws = self.w.sqrt_psd()?;
        let qs = self.q.sqrt_psd()?;
        Ok(linalg::is_controllable(&self.a, &ws)?
            && linalg::is_observable(&self.a, &qs)?
            && linalg::is_controllable(&self.a, &self.b2)?
            && linalg::is_observable(&self.a, &self.c2)?)
    }

    pub fn assemble_closed_loop(&self, k: &DynamicPolicy) -> Result<ClosedLoop> {
        assemble_closed_loop(self, k)
    }

    /// Frequency response `T_zd(K, s) = C_cl (sI - A_cl)^{-1} B_cl + D_cl`.
    pub fn tzd_at(&self, k: &DynamicPolicy, s: Complex<f64>) -> Result<CMat> {
        let cl = self.assemble_closed_loop(k)?;
        resolvent_product(&cl.acl, &cl.bcl, &cl.ccl, Some(&cl.dcl), s)
    }
}

/// Static state-feedback gain `u = Kx`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticGain {
    pub k: Mat,
}

impl StaticGain {
    pub fn new(k: Mat) -> Self {
        StaticGain { k }
    }
}

/// Full-order dynamic output-feedback policy
/// `ξ̇ = A_K ξ + B_K y`, `u = C_K ξ + D_K y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicPolicy {
    pub dk: Mat,
    pub ck: Mat,
    pub bk: Mat,
    pub ak: Mat,
}

impl DynamicPolicy {
    pub fn new(dk: Mat, ck: Mat, bk: Mat, ak: Mat) -> Result<Self> {
        let nk = ak.nrows();
        if !ak.is_square() {
            return Err(Error::Dimension("A_K must be square".into()));
        }
        if bk.nrows() != nk || ck.ncols() != nk {
            return Err(Error::Dimension("B_K/C_K must match A_K".into()));
        }
        if dk.nrows() != ck.nrows() || dk.ncols() != bk.ncols() {
            return Err(Error::Dimension("D_K must be m x p".into()));
        }
        Ok(DynamicPolicy { dk, ck, bk, ak })
    }

    /// Strictly proper policy (`D_K = 0`).
    pub fn strictly_proper(ck: Mat, bk: Mat, ak: Mat) -> Result<Self> {
        let dk = Mat::zeros(ck.nrows(), bk.ncols());
        DynamicPolicy::new(dk, ck, bk, ak)
    }

    pub fn order(&self) -> usize {
        self.ak.nrows()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.dk.amax() == 0.0
    }

    /// Packed parameter matrix `[[D_K, C_K], [B_K, A_K]]`.
    pub fn packed(&self) -> Mat {
        let m = self.dk.nrows();
        let p = self.dk.ncols();
        let nk = self.order();
        let mut out = Mat::zeros(m + nk, p + nk);
        out.view_mut((0, 0), (m, p)).copy_from(&self.dk);
        out.view_mut((0, p), (m, nk)).copy_from(&self.ck);
        out.view_mut((m, 0), (nk, p)).copy_from(&self.bk);
        out.view_mut((m, p), (nk, nk)).copy_from(&self.ak);
        out
    }

    /// Inverse of [`DynamicPolicy::packed`].
    pub fn from_packed(packed: &Mat, m: usize, p: usize) -> Result<Self> {
        let nk_r = packed.nrows().checked_sub(m);
        let nk_c = packed.ncols().checked_sub(p);
        match (nk_r, nk_c) {
            (Some(nk), Some(nk2)) if nk == nk2 => DynamicPolicy::new(
                packed.view((0, 0), (m, p)).into_owned(),
                packed.view((0, p), (m, nk)).into_owned(),
                packed.view((m, 0), (nk, p)).into_owned(),
                packed.view((m, p), (nk, nk)).into_owned(),
            ),
            _ => Err(Error::Dimension(
                "packed policy has inconsistent shape".into(),
            )),
        }
    }

    /// Similarity transform: `(S A_K S⁻¹, S B_K, C_K S⁻¹, D_K)`.
    pub fn similarity(&self, s: &Mat) -> Result<Self> {
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("similarity transform".into()))?;
        DynamicPolicy::new(
            self.dk.clone(),
            &self.ck * &s_inv,
            s * &self.bk,
            s * &self.ak * &s_inv,
        )
    }
}

/// Assembled closed-loop realization of `T_zd`.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub acl: Mat,
    pub bcl: Mat,
    pub ccl: Mat,
    pub dcl: Mat,
}

impl ClosedLoop {
    pub fn is_stable(&self) -> Result<bool> {
        linalg::is_hurwitz(&self.acl, 0.0)
    }
}

/// Builds the closed loop of an output plant with a full-order policy:
///
/// ```text
/// A_cl = [A + B₂D_K C₂, B₂C_K; B_K C₂, A_K]
/// B_cl = [W^{1/2}, B₂D_K V^{1/2}; 0, B_K V^{1/2}]
/// C_cl = [Q^{1/2}, 0; R^{1/2}D_K C₂, R^{1/2}C_K]
/// D_cl = [0, 0; 0, R^{1/2}D_K V^{1/2}]
/// ```
pub fn assemble_closed_loop(plant: &OutputPlant, k: &DynamicPolicy) -> Result<ClosedLoop> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    let p = plant.output_dim();
    let nk = k.order();
    if nk != n {
        return Err(Error::Dimension(format!(
            "full-order policy required: plant n = {n}, policy order = {nk}"
        )));
    }
    if k.dk.nrows() != m || k.dk.ncols() != p {
        return Err(Error::Dimension("policy D_K must be m x p".into()));
    }

    let ws = plant.w.sqrt_psd()?;
    let vs = plant.v.sqrt_psd()?;
    let qs = plant.q.sqrt_psd()?;
    let rs = plant.r.sqrt_psd()?;

    let mut acl = Mat::zeros(2 * n, 2 * n);
    acl.view_mut((0, 0), (n, n))
        .copy_from(&(&plant.a + &plant.b2 * &k.dk * &plant.c2));
    acl.view_mut((0, n), (n, n)).copy_from(&(&plant.b2 * &k.ck));
    acl.view_mut((n, 0), (n, n)).copy_from(&(&k.bk * &plant.c2));
    acl.view_mut((n, n), (n, n)).copy_from(&k.ak);

    let mut bcl = Mat::zeros(2 * n, n + p);
    bcl.view_mut((0, 0), (n, n)).copy_from(&ws);
    bcl.view_mut((0, n), (n, p))
        .copy_from(&(&plant.b2 * &k.dk * &vs));
    bcl.view_mut((n, n), (n, p)).copy_from(&(&k.bk * &vs));

    let mut ccl = Mat::zeros(n + m, 2 * n);
    ccl.view_mut((0, 0), (n, n)).copy_from(&qs);
    ccl.view_mut((n, 0), (m, n))
        .copy_from(&(&rs * &k.dk * &plant.c2));
    ccl.view_mut((n, n), (m, n)).copy_from(&(&rs * &k.ck));

    let mut dcl = Mat::zeros(n + m, n + p);
    dcl.view_mut((n, n), (m, p)).copy_from(&(&rs * &k.dk * &vs));

    Ok(ClosedLoop { acl, bcl, ccl, dcl })
}

/// Complex frequency response `C (sI - A)^{-1} B + D`.
pub fn resolvent_product(
    a: &Mat,
    b: &Mat,
    c: &Mat,
    d: Option<&Mat>,
    s: Complex<f64>,
) -> Result<CMat> {
    let n = a.nrows();
    let to_c = |m: &Mat| m.map(|v| Complex::new(v, 0.0));
    let mut si_a = CMat::zeros(n, n);
    for i in 0..n {
        si_a[(i, i)] = s;
    }
    si_a -= to_c(a);
    let lu = si_a.lu();
    let xb = lu
        .solve(&to_c(b))
        .ok_or_else(|| Error::Singular(format!("resolvent is singular at s = {s}")))?;
    let mut out = to_c(c) * xb;
    if let Some(d) = d {
        out += to_c(d);
    }
    Ok(out)
}

/// Largest singular value of a complex matrix via the Hermitian Gram matrix.
pub fn sigma_max(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = m * m.adjoint();
    let ev = gram.symmetric_eigenvalues();
    ev.iter().map(|v| v.max(0.0)).fold(0.0, f64::max).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_output_plant() -> OutputPlant {
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

    #[test]
    fn zero_policy_closed_loop() {
        let plant = scalar_output_plant();
        let k = DynamicPolicy::new(
            Mat::zeros(1, 1),
            Mat::zeros(1, 1),
            Mat::zeros(1, 1),
            Mat::zeros(1, 1),
        )
        .unwrap();
        let cl = plant.assemble_closed_loop(&k).unwrap();
        assert_eq!(cl.acl, Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn decoupled_policy_closed_loop() {
        let plant = scalar_output_plant();
        let k = DynamicPolicy::new(
            Mat::zeros(1, 1),
            Mat::zeros(1, 1),
            Mat::zeros(1, 1),
            Mat::from_element(1, 1, -1.0),
        )
        .unwrap();
        let cl = plant.assemble_closed_loop(&k).unwrap();
        assert_eq!(cl.acl, Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
    }

    #[test]
    fn observer_policy_stabilizes() {
        // Certainty-equivalence controller from the two Riccati solutions of
        // the all-ones scalar plant: both equations give 1 + sqrt(2).
        let plant = scalar_output_plant();
        let g = 1.0 + 2.0_f64.sqrt();
        let k = DynamicPolicy::strictly_proper(
            Mat::from_element(1, 1, -g),
            Mat::from_element(1, 1, g),
            Mat::from_element(1, 1, 1.0 - 2.0 * g),
        )
        .unwrap();
        let cl = plant.assemble_closed_loop(&k).unwrap();
        assert!(cl.is_stable().unwrap());
    }

    #[test]
    fn strictly_proper_policy_kills_feedthrough() {
        let plant = scalar_output_plant();
        let k = DynamicPolicy::strictly_proper(
            Mat::from_element(1, 1, 0.3),
            Mat::from_element(1, 1, -0.4),
            Mat::from_element(1, 1, -2.0),
        )
        .unwrap();
        let cl = plant.assemble_closed_loop(&k).unwrap();
        assert_eq!(cl.dcl.amax(), 0.0);
    }

    #[test]
    fn closed_loop_linear_in_strictly_proper_policy() {
        // Superposition of the policy-dependent parts for D_K = 0.
        let plant = scalar_output_plant();
        let mk = |c: f64, b: f64, a: f64| {
            DynamicPolicy::strictly_proper(
                Mat::from_element(1, 1, c),
                Mat::from_element(1, 1, b),
                Mat::from_element(1, 1, a),
            )
            .unwrap()
        };
        let k1 = mk(0.3, -0.7, -1.5);
        let k2 = mk(-0.2, 0.4, 0.8);
        let ksum = mk(0.1, -0.3, -0.7);
        let c1 = plant.assemble_closed_loop(&k1).unwrap();
        let c2 = plant.assemble_closed_loop(&k2).unwrap();
        let cs = plant.assemble_closed_loop(&ksum).unwrap();
        let zero = plant.assemble_closed_loop(&mk(0.0, 0.0, 0.0)).unwrap();
        let lhs = &cs.acl - &zero.acl;
        let rhs = (&c1.acl - &zero.acl) + (&c2.acl - &zero.acl);
        assert!((lhs - rhs).amax() < 1e-14);
    }

    #[test]
    fn packed_round_trip() {
        let k = DynamicPolicy::new(
            Mat::from_row_slice(1, 1, &[0.5]),
            Mat::from_row_slice(1, 2, &[1.0, 2.0]),
            Mat::from_row_slice(2, 1, &[3.0, 4.0]),
            Mat::from_row_slice(2, 2, &[5.0, 6.0, 7.0, 8.0]),
        )
        .unwrap();
        let packed = k.packed();
        let back = DynamicPolicy::from_packed(&packed, 1, 1).unwrap();
        assert_eq!(k, back);
    }

    #[test]
    fn frequency_response_scalar() {
        // A=-1, B=C=1 at s=j: 1/(1+j), modulus 1/sqrt(2).
        let t = resolvent_product(
            &Mat::from_element(1, 1, -1.0),
            &Mat::from_element(1, 1, 1.0),
            &Mat::from_element(1, 1, 1.0),
            None,
            Complex::new(0.0, 1.0),
        )
        .unwrap();
        assert_relative_eq!(t[(0, 0)].norm(), 1.0 / 2.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn tzw_dc_gain_fixture() {
        // A=-1, B=Bw=1, Q=0.1, R=1, K=-0.1: at s=0 the response is
        // [sqrt(0.1); -0.1] / 1.1 with largest singular value ~ 0.301511.
        let plant = Plant::new(
            Mat::from_element(1, 1, -1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            SymMat::scalar(0.1),
            SymMat::scalar(1.0),
        )
        .unwrap();
        let k = StaticGain::new(Mat::from_element(1, 1, -0.1));
        let t = plant.tzw_at(&k, Complex::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(t[(0, 0)].re, 0.1_f64.sqrt() / 1.1, epsilon = 1e-12);
        assert_relative_eq!(t[(1, 0)].re, -0.1 / 1.1, epsilon = 1e-12);
        assert_relative_eq!(sigma_max(&t), (0.1 + 0.01f64).sqrt() / 1.1, epsilon = 1e-9);
    }

    #[test]
    fn feedthrough_at_high_frequency() {
        let plant = scalar_output_plant();
        let k = DynamicPolicy::new(
            Mat::from_element(1, 1, 0.7),
            Mat::from_element(1, 1, 0.1),
            Mat::from_element(1, 1, 0.2),
            Mat::from_element(1, 1, -3.0),
        )
        .unwrap();
        let cl = plant.assemble_closed_loop(&k).unwrap();
        let t = plant.tzd_at(&k, Complex::new(0.0, 1e9)).unwrap();
        for i in 0..t.nrows() {
            for j in 0..t.ncols() {
                assert_relative_eq!(t[(i, j)].re, cl.dcl[(i, j)], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn pole_is_an_error() {
        let plant = scalar_output_plant();
        let k = DynamicPolicy::strictly_proper(
            Mat::zeros(1, 1),
            Mat::zeros(1, 1),
            Mat::from_element(1, 1, -1.0),
        )
        .unwrap();
        // Closed loop has an eigenvalue at +1 (open-loop unstable, decoupled).
        assert!(plant.tzd_at(&k, Complex::new(1.0, 0.0)).is_err());
    }
}
