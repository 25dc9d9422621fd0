//! Small-scale semidefinite programming.
//!
//! Models block-LMI problems over free scalar, rectangular and symmetric
//! matrix variables: a linear objective, affine matrix-valued maps required
//! positive (or negative) semidefinite, and affine equality constraints.
//! Problems are solved with a homogeneous self-dual primal-dual interior-point
//! method with Nesterov-Todd scaling (dense block kernels), which gives robust
//! status classification, including detection of infima that are approached
//! only as the policy-side variables hit the boundary of an open condition.

mod expr;
mod sdpa;
mod solver;

pub use expr::{LinExpr, MatExpr};
pub use solver::SolverOptions;

use std::collections::HashMap;

use crate::linalg::{Mat, SymMat};
use crate::{Error, Result};

/// Handle to a registered variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Scalar,
    /// Rectangular `rows x cols`, components stored column-major.
    Rect { rows: usize, cols: usize },
    /// Symmetric `dim x dim`, components are the lower triangle column-major.
    Sym { dim: usize },
}

impl VarKind {
    pub fn num_components(&self) -> usize {
        match *self {
            VarKind::Scalar => 1,
            VarKind::Rect { rows, cols } => rows * cols,
            VarKind::Sym { dim } => dim * (dim + 1) / 2,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct VarInfo {
    pub name: String,
    pub kind: VarKind,
    pub offset: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct PsdConstraint {
    pub expr: MatExpr,
    /// Marks blocks that realize an open condition (`≻ 0`); activity at the
    /// optimum signals an infimum on the boundary of the modeled set.
    pub strict_hint: bool,
    pub label: String,
}

/// Block-LMI conic program description.
#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    pub(crate) vars: Vec<VarInfo>,
    by_name: HashMap<String, VarId>,
    pub(crate) num_components: usize,
    pub(crate) objective: LinExpr,
    pub(crate) psd: Vec<PsdConstraint>,
    pub(crate) equalities: Vec<LinExpr>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    fn add_var(&mut self, name: &str, kind: VarKind) -> VarId {
        assert!(
            !self.by_name.contains_key(name),
            "duplicate variable name {name}"
        );
        let id = VarId(self.vars.len());
        self.vars.push(VarInfo {
            name: name.to_string(),
            kind,
            offset: self.num_components,
        });
        self.num_components += kind.num_components();
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn scalar(&mut self, name: &str) -> VarId {
        self.add_var(name, VarKind::Scalar)
    }

    pub fn rect(&mut self, name: &str, rows: usize, cols: usize) -> VarId {
        self.add_var(name, VarKind::Rect { rows, cols })
    }

    pub fn sym(&mut self, name: &str, dim: usize) -> VarId {
        self.add_var(name, VarKind::Sym { dim })
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    /// The variable as an affine matrix expression (1x1 for scalars).
    pub fn expr(&self, v: VarId) -> MatExpr {
        let info = &self.vars[v.0];
        match info.kind {
            VarKind::Scalar => {
                let mut e = MatExpr::zeros(1, 1);
                e.insert_term(info.offset, Mat::from_element(1, 1, 1.0));
                e
            }
            VarKind::Rect { rows, cols } => {
                let mut e = MatExpr::zeros(rows, cols);
                let mut idx = info.offset;
                for j in 0..cols {
                    for i in 0..rows {
                        let mut c = Mat::zeros(rows, cols);
                        c[(i, j)] = 1.0;
                        e.insert_term(idx, c);
                        idx += 1;
                    }
                }
                e
            }
            VarKind::Sym { dim } => {
                let mut e = MatExpr::zeros(dim, dim);
                let mut idx = info.offset;
                for j in 0..dim {
                    for i in j..dim {
                        let mut c = Mat::zeros(dim, dim);
                        c[(i, j)] = 1.0;
                        c[(j, i)] = 1.0;
                        if i == j {
                            c[(i, j)] = 1.0;
                        }
                        e.insert_term(idx, c);
                        idx += 1;
                    }
                }
                e
            }
        }
    }

    /// The variable as a scalar expression; panics unless `v` is scalar.
    pub fn lin(&self, v: VarId) -> LinExpr {
        let info = &self.vars[v.0];
        assert!(matches!(info.kind, VarKind::Scalar));
        LinExpr::component(info.offset, 1.0)
    }

    pub fn minimize(&mut self, obj: LinExpr) {
        self.objective = obj;
    }

    pub fn maximize(&mut self, obj: LinExpr) {
        self.objective = obj.neg_expr();
    }

    /// Requires `expr ⪰ 0`.
    pub fn psd(&mut self, expr: MatExpr, label: &str) {
        self.psd_with(expr, label, false)
    }

    /// Requires `expr ⪰ 0` and records that the modeled condition is `≻ 0`.
    pub fn psd_strict_hint(&mut self, expr: MatExpr, label: &str) {
        self.psd_with(expr, label, true)
    }

    /// Requires `expr ⪯ 0`.
    pub fn nsd(&mut self, expr: MatExpr, label: &str) {
        self.psd(expr.scale(-1.0), label)
    }

    fn psd_with(&mut self, expr: MatExpr, label: &str, strict_hint: bool) {
        assert_eq!(expr.rows(), expr.cols(), "PSD block must be square");
        self.psd.push(PsdConstraint {
            expr,
            strict_hint,
            label: label.to_string(),
        });
    }

    /// Requires `lin == 0`.
    pub fn eq_zero(&mut self, lin: LinExpr) {
        self.equalities.push(lin);
    }

    /// Requires every entry of a symmetric-valued affine map to vanish
    /// (only the lower triangle is added).
    pub fn eq_zero_sym(&mut self, expr: &MatExpr) {
        assert_eq!(expr.rows(), expr.cols());
        for j in 0..expr.cols() {
            for i in j..expr.rows() {
                self.equalities.push(expr.entry(i, j));
            }
        }
    }

    /// Requires `lin >= 0` via a 1x1 PSD block.
    pub fn nonneg(&mut self, lin: LinExpr, label: &str) {
        self.psd(lin.times_identity(1), label);
    }

    /// Solves the problem with the given tolerances.
    pub fn solve(&self, opts: &SolverOptions) -> Result<SdpSolution> {
        solver::solve(self, opts)
    }

    /// SDPA sparse-format export for cross-checking against external solvers.
    pub fn to_sdpa_sparse(&self) -> String {
        sdpa::to_sdpa_sparse(self)
    }
}

impl LinExpr {
    fn neg_expr(self) -> LinExpr {
        self.scale(-1.0)
    }
}

/// Solver exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Converged to an optimum satisfying all tolerances.
    Optimal,
    /// The constraint system admits a primal infeasibility certificate.
    Infeasible,
    /// The objective is unbounded below over the feasible set.
    Unbounded,
    /// The infimum is approached on (or beyond) the boundary of an open
    /// condition: iterates diverge or a strict-hinted block goes active.
    NearBoundary,
    /// Iteration or numerical limits were reached without classification.
    NumericalLimit,
}

/// Value of one variable in a solution.
#[derive(Debug, Clone)]
pub enum VarValue {
    Scalar(f64),
    Rect(Mat),
    Sym(SymMat),
}

/// Certified solution of an [`SdpProblem`].
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: Status,
    pub objective: f64,
    pub max_violation: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    values: HashMap<String, VarValue>,
    /// Labels of strict-hinted blocks that were active at the solution.
    pub active_strict_blocks: Vec<String>,
}

impl SdpSolution {
    pub(crate) fn new(
        status: Status,
        objective: f64,
        max_violation: f64,
        duality_gap: f64,
        iterations: usize,
        values: HashMap<String, VarValue>,
        active_strict_blocks: Vec<String>,
    ) -> Self {
        SdpSolution {
            status,
            objective,
            max_violation,
            duality_gap,
            iterations,
            values,
            active_strict_blocks,
        }
    }

    pub fn is_usable(&self) -> bool {
        matches!(self.status, Status::Optimal | Status::NearBoundary)
    }

    /// True when primal values were recovered (also for best-effort exits).
    pub fn has_values(&self) -> bool {
        !self.values.is_empty()
    }

    fn get(&self, name: &str) -> Result<&VarValue> {
        if !self.has_values() {
            return Err(Error::Solver(format!(
                "no primal values available in status {:?}",
                self.status
            )));
        }
        self.values
            .get(name)
            .ok_or_else(|| Error::Model(format!("unknown variable '{name}'")))
    }

    pub fn extract_scalar(&self, name: &str) -> Result<f64> {
        match self.get(name)? {
            VarValue::Scalar(v) => Ok(*v),
            _ => Err(Error::Model(format!("variable '{name}' is not a scalar"))),
        }
    }

    pub fn extract_mat(&self, name: &str) -> Result<Mat> {
        match self.get(name)? {
            VarValue::Rect(m) => Ok(m.clone()),
            VarValue::Sym(s) => Ok(s.mat().clone()),
            VarValue::Scalar(v) => Ok(Mat::from_element(1, 1, *v)),
        }
    }

    pub fn extract_sym(&self, name: &str) -> Result<SymMat> {
        match self.get(name)? {
            VarValue::Sym(s) => Ok(s.clone()),
            _ => Err(Error::Model(format!("variable '{name}' is not symmetric"))),
        }
    }
}

#[cfg(test)]
mod tests;
