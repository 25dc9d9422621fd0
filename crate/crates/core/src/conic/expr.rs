//! Affine scalar- and matrix-valued expressions over registered variables.
//!
//! Expressions store a constant part plus one dense coefficient per scalar
//! variable component they touch. At desk scale this is cheap and keeps the
//! block-LMI assembly code close to the formulas it implements.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::linalg::Mat;

/// Affine scalar expression `k0 + sum coeff_j * x_j` over global components.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub(crate) k0: f64,
    pub(crate) coeffs: BTreeMap<usize, f64>,
}

impl LinExpr {
    pub fn constant(v: f64) -> Self {
        LinExpr {
            k0: v,
            coeffs: BTreeMap::new(),
        }
    }

    pub(crate) fn component(idx: usize, w: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(idx, w);
        LinExpr { k0: 0.0, coeffs }
    }

    pub fn scale(&self, f: f64) -> Self {
        LinExpr {
            k0: self.k0 * f,
            coeffs: self.coeffs.iter().map(|(&i, &v)| (i, v * f)).collect(),
        }
    }

    /// `self * I_d` as a matrix expression.
    pub fn times_identity(&self, d: usize) -> MatExpr {
        let mut e = MatExpr::constant(Mat::identity(d, d) * self.k0);
        for (&idx, &w) in &self.coeffs {
            e.terms.insert(idx, Mat::identity(d, d) * w);
        }
        e
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.k0 + self.coeffs.iter().map(|(&i, &v)| v * x[i]).sum::<f64>()
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: LinExpr) -> LinExpr {
        let mut out = self;
        out.k0 += rhs.k0;
        for (i, v) in rhs.coeffs {
            *out.coeffs.entry(i).or_insert(0.0) += v;
        }
        out
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + rhs.neg()
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scale(-1.0)
    }
}

/// Affine matrix expression `K0 + sum x_j * C_j` with dense coefficients.
#[derive(Debug, Clone)]
pub struct MatExpr {
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) k0: Mat,
    pub(crate) terms: BTreeMap<usize, Mat>,
}

impl MatExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatExpr {
            rows,
            cols,
            k0: Mat::zeros(rows, cols),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(m: Mat) -> Self {
        MatExpr {
            rows: m.nrows(),
            cols: m.ncols(),
            k0: m,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::constant(Mat::identity(d, d))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub(crate) fn insert_term(&mut self, idx: usize, coeff: Mat) {
        debug_assert_eq!(coeff.nrows(), self.rows);
        debug_assert_eq!(coeff.ncols(), self.cols);
        match self.terms.get_mut(&idx) {
            Some(c) => *c += coeff,
            None => {
                self.terms.insert(idx, coeff);
            }
        }
    }

    pub fn transpose(&self) -> Self {
        MatExpr {
            rows: self.cols,
            cols: self.rows,
            k0: self.k0.transpose(),
            terms: self
                .terms
                .iter()
                .map(|(&i, c)| (i, c.transpose()))
                .collect(),
        }
    }

    pub fn scale(&self, f: f64) -> Self {
        MatExpr {
            rows: self.rows,
            cols: self.cols,
            k0: &self.k0 * f,
            terms: self.terms.iter().map(|(&i, c)| (i, c * f)).collect(),
        }
    }

    /// Left-multiplies by a constant matrix: `l * self`.
    pub fn lmul(&self, l: &Mat) -> Self {
        assert_eq!(l.ncols(), self.rows, "lmul shape mismatch");
        MatExpr {
            rows: l.nrows(),
            cols: self.cols,
            k0: l * &self.k0,
            terms: self.terms.iter().map(|(&i, c)| (i, l * c)).collect(),
        }
    }

    /// Right-multiplies by a constant matrix: `self * r`.
    pub fn rmul(&self, r: &Mat) -> Self {
        assert_eq!(self.cols, r.nrows(), "rmul shape mismatch");
        MatExpr {
            rows: self.rows,
            cols: r.ncols(),
            k0: &self.k0 * r,
            terms: self.terms.iter().map(|(&i, c)| (i, c * r)).collect(),
        }
    }

    /// `self + selfᵀ`; requires a square expression.
    pub fn sym(&self) -> Self {
        assert_eq!(self.rows, self.cols, "sym() needs a square expression");
        self.clone() + self.transpose()
    }

    pub fn trace(&self) -> LinExpr {
        assert_eq!(self.rows, self.cols, "trace needs a square expression");
        let mut lin = LinExpr::constant(self.k0.trace());
        for (&i, c) in &self.terms {
            let t = c.trace();
            if t != 0.0 {
                *lin.coeffs.entry(i).or_insert(0.0) += t;
            }
        }
        lin
    }

    pub fn entry(&self, i: usize, j: usize) -> LinExpr {
        let mut lin = LinExpr::constant(self.k0[(i, j)]);
        for (&idx, c) in &self.terms {
            let v = c[(i, j)];
            if v != 0.0 {
                *lin.coeffs.entry(idx).or_insert(0.0) += v;
            }
        }
        lin
    }

    /// Assembles a block matrix expression from a grid of blocks.
    pub fn block(grid: &[&[&MatExpr]]) -> Self {
        assert!(!grid.is_empty());
        let row_heights: Vec<usize> = grid.iter().map(|r| r[0].rows).collect();
        let col_widths: Vec<usize> = grid[0].iter().map(|e| e.cols).collect();
        for r in grid {
            assert_eq!(r.len(), col_widths.len(), "ragged block grid");
        }
        let rows: usize = row_heights.iter().sum();
        let cols: usize = col_widths.iter().sum();
        let mut out = MatExpr::zeros(rows, cols);
        let mut roff = 0;
        for (bi, blocks) in grid.iter().enumerate() {
            let mut coff = 0;
            for (bj, e) in blocks.iter().enumerate() {
                assert_eq!(e.rows, row_heights[bi], "block height mismatch");
                assert_eq!(e.cols, col_widths[bj], "block width mismatch");
                out.k0
                    .view_mut((roff, coff), (e.rows, e.cols))
                    .copy_from(&e.k0);
                for (&idx, c) in &e.terms {
                    let full = out.terms.entry(idx).or_insert_with(|| Mat::zeros(rows, cols));
                    let mut view = full.view_mut((roff, coff), (e.rows, e.cols));
                    view += c;
                }
                coff += col_widths[bj];
            }
            roff += row_heights[bi];
        }
        out
    }

    /// Evaluates the expression at a component vector.
    pub fn eval(&self, x: &[f64]) -> Mat {
        let mut m = self.k0.clone();
        for (&i, c) in &self.terms {
            m += c * x[i];
        }
        m
    }
}

impl Add for MatExpr {
    type Output = MatExpr;
    fn add(self, rhs: MatExpr) -> MatExpr {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self;
        out.k0 += rhs.k0;
        for (i, c) in rhs.terms {
            out.insert_term(i, c);
        }
        out
    }
}

impl Sub for MatExpr {
    type Output = MatExpr;
    fn sub(self, rhs: MatExpr) -> MatExpr {
        self + rhs.neg()
    }
}

impl Neg for MatExpr {
    type Output = MatExpr;
    fn neg(self) -> MatExpr {
        self.scale(-1.0)
    }
}

impl Mul<f64> for MatExpr {
    type Output = MatExpr;
    fn mul(self, f: f64) -> MatExpr {
        self.scale(f)
    }
}
