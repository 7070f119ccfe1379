//! Matrix container, the penalized objective and its gradients, and the
//! quality metrics (RSE and infeasibility) shared by every solver.
//!
//! The objective is
//!
//! ```text
//! F(G, H) = ½‖R − GH‖²_F + (α/4)‖HHᵀ − I‖²_F + (β/4)‖GᵀG − I‖²_F
//! ```
//!
//! with `α` forced to zero when only the columns of `G` are constrained. The
//! penalty weights are the ones for which [`grad_g`] and [`grad_h`] are the
//! exact partial derivatives.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Dense row-major matrix whose entries are all `≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonNegMatrix(Array2<f64>);

impl NonNegMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::Shape { rows, cols });
        }
        for ((row, col), &value) in data.indexed_iter() {
            // NaN fails this test too.
            if value.is_nan() || value < 0.0 {
                return Err(Error::Negative { row, col, value });
            }
        }
        Ok(Self(data.as_standard_layout().into_owned()))
    }

    pub fn from_shape_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let arr = Array2::from_shape_vec((rows, cols), data).map_err(|e| {
            Error::Dimension(format!("{rows}x{cols} from buffer: {e}"))
        })?;
        Self::new(arr)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Which factors carry an orthogonality constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orthogonality {
    /// `GᵀG = I` only.
    Uni,
    /// `GᵀG = I` and `HHᵀ = I`.
    Bi,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    r: NonNegMatrix,
    p: usize,
    mode: Orthogonality,
    alpha: f64,
    beta: f64,
}

impl ProblemSpec {
    pub fn new(r: NonNegMatrix, p: usize, mode: Orthogonality, alpha: f64, beta: f64) -> Result<Self> {
        let limit = r.rows().min(r.cols());
        if p == 0 || p > limit {
            return Err(Error::Parameter(format!(
                "inner dimension p = {p} must lie in 1..={limit}"
            )));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha = {alpha} must be finite and >= 0")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Parameter(format!("beta = {beta} must be finite and >= 0")));
        }
        Ok(Self {
            r,
            p,
            mode,
            alpha,
            beta,
        })
    }

    pub fn r(&self) -> &Array2<f64> {
        self.r.as_array()
    }

    pub fn rows(&self) -> usize {
        self.r.rows()
    }

    pub fn cols(&self) -> usize {
        self.r.cols()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn mode(&self) -> Orthogonality {
        self.mode
    }

    /// Effective α: zero in uni-orthogonal mode regardless of what was passed.
    pub fn alpha(&self) -> f64 {
        match self.mode {
            Orthogonality::Uni => 0.0,
            Orthogonality::Bi => self.alpha,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Errors unless `fp` has shapes `m×p` and `p×n`.
    pub fn check(&self, fp: &FactorPair) -> Result<()> {
        let (m, n, p) = (self.rows(), self.cols(), self.p);
        if fp.g.dim() != (m, p) || fp.h.dim() != (p, n) {
            return Err(Error::Dimension(format!(
                "factors {:?} and {:?} do not conform with R {m}x{n}, p = {p}",
                fp.g.dim(),
                fp.h.dim()
            )));
        }
        Ok(())
    }

    pub fn objective(&self, fp: &FactorPair) -> Result<f64> {
        self.check(fp)?;
        Ok(objective_unchecked(self, &fp.g, &fp.h))
    }

    /// RSE, plus the infeasibility measure matching the constraint mode.
    pub fn metrics(&self, g: &Array2<f64>, h: &Array2<f64>) -> (f64, f64) {
        let rse = residual_norm(self.r(), g, h) / (1.0 + frobenius_norm(self.r()));
        let infeas = match self.mode {
            Orthogonality::Uni => infeas_uni(g),
            Orthogonality::Bi => infeas_bi_unchecked(g, h),
        };
        (rse, infeas)
    }
}

/// Basis factor `G` (m×p) and coefficient factor `H` (p×n).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub g: Array2<f64>,
    pub h: Array2<f64>,
}

impl FactorPair {
    pub fn new(g: NonNegMatrix, h: NonNegMatrix) -> Result<Self> {
        if g.cols() != h.rows() {
            return Err(Error::Dimension(format!(
                "G is {}x{} but H is {}x{}",
                g.rows(),
                g.cols(),
                h.rows(),
                h.cols()
            )));
        }
        Ok(Self {
            g: g.into_inner(),
            h: h.into_inner(),
        })
    }

    pub fn inner_dim(&self) -> usize {
        self.g.ncols()
    }
}

pub fn frobenius_norm(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn frobenius_sq(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// Frobenius inner product `Σ a_ij b_ij`.
pub fn inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn residual_norm(r: &Array2<f64>, g: &Array2<f64>, h: &Array2<f64>) -> f64 {
    frobenius_norm(&(r - &g.dot(h)))
}

/// `‖R − GH‖_F / (1 + ‖R‖_F)`.
pub fn rse(r: &Array2<f64>, g: &Array2<f64>, h: &Array2<f64>) -> Result<f64> {
    check_product(r, g, h)?;
    Ok(residual_norm(r, g, h) / (1.0 + frobenius_norm(r)))
}

/// `‖GᵀG − I‖_F / (1 + √p)` for `G` with `p` columns.
pub fn infeas_uni(g: &Array2<f64>) -> f64 {
    let p = g.ncols();
    gram_deviation(&g.t().dot(g)) / (1.0 + (p as f64).sqrt())
}

/// `(‖GᵀG − I‖_F + ‖HHᵀ − I‖_F) / (1 + √p)`.
pub fn infeas_bi(g: &Array2<f64>, h: &Array2<f64>) -> Result<f64> {
    if g.ncols() != h.nrows() {
        return Err(Error::Dimension(format!(
            "G has {} columns but H has {} rows",
            g.ncols(),
            h.nrows()
        )));
    }
    Ok(infeas_bi_unchecked(g, h))
}

fn infeas_bi_unchecked(g: &Array2<f64>, h: &Array2<f64>) -> f64 {
    let p = g.ncols();
    (gram_deviation(&g.t().dot(g)) + gram_deviation(&h.dot(&h.t()))) / (1.0 + (p as f64).sqrt())
}

/// `‖A − I‖_F` for a square Gram matrix `A`.
fn gram_deviation(gram: &Array2<f64>) -> f64 {
    gram_deviation_sq(gram).sqrt()
}

fn gram_deviation_sq(gram: &Array2<f64>) -> f64 {
    gram.indexed_iter()
        .map(|((i, j), &v)| {
            let d = if i == j { v - 1.0 } else { v };
            d * d
        })
        .sum()
}

fn check_product(r: &Array2<f64>, g: &Array2<f64>, h: &Array2<f64>) -> Result<()> {
    let (m, n) = r.dim();
    if g.nrows() != m || h.ncols() != n || g.ncols() != h.nrows() {
        return Err(Error::Dimension(format!(
            "R {:?}, G {:?}, H {:?}",
            r.dim(),
            g.dim(),
            h.dim()
        )));
    }
    Ok(())
}

pub fn penalized_objective(spec: &ProblemSpec, fp: &FactorPair) -> Result<f64> {
    spec.objective(fp)
}

pub fn grad_g(spec: &ProblemSpec, fp: &FactorPair) -> Result<Array2<f64>> {
    spec.check(fp)?;
    Ok(grad_g_unchecked(spec.r(), &fp.g, &fp.h, spec.beta()))
}

pub fn grad_h(spec: &ProblemSpec, fp: &FactorPair) -> Result<Array2<f64>> {
    spec.check(fp)?;
    Ok(grad_h_unchecked(spec.r(), &fp.g, &fp.h, spec.alpha()))
}

pub(crate) fn objective_unchecked(spec: &ProblemSpec, g: &Array2<f64>, h: &Array2<f64>) -> f64 {
    0.5 * frobenius_sq(&(spec.r() - &g.dot(h)))
        + g_penalty(g, spec.beta())
        + h_penalty(h, spec.alpha())
}

/// `(β/4)‖GᵀG − I‖²_F`
pub(crate) fn g_penalty(g: &Array2<f64>, beta: f64) -> f64 {
    if beta == 0.0 {
        0.0
    } else {
        0.25 * beta * gram_deviation_sq(&g.t().dot(g))
    }
}

/// `(α/4)‖HHᵀ − I‖²_F`
pub(crate) fn h_penalty(h: &Array2<f64>, alpha: f64) -> f64 {
    if alpha == 0.0 {
        0.0
    } else {
        0.25 * alpha * gram_deviation_sq(&h.dot(&h.t()))
    }
}

/// `GHHᵀ − RHᵀ + βGGᵀG − βG`
pub(crate) fn grad_g_unchecked(r: &Array2<f64>, g: &Array2<f64>, h: &Array2<f64>, beta: f64) -> Array2<f64> {
    let mut grad = g.dot(&h.dot(&h.t())) - r.dot(&h.t());
    if beta != 0.0 {
        let ggg = g.dot(&g.t().dot(g));
        grad.zip_mut_with(&(ggg - g), |a, &b| *a += beta * b);
    }
    grad
}

/// `GᵀGH − GᵀR + αHHᵀH − αH`
pub(crate) fn grad_h_unchecked(r: &Array2<f64>, g: &Array2<f64>, h: &Array2<f64>, alpha: f64) -> Array2<f64> {
    let gt = g.t();
    let mut grad = gt.dot(g).dot(h) - gt.dot(r);
    if alpha != 0.0 {
        let hhh = h.dot(&h.t()).dot(h);
        grad.zip_mut_with(&(hhh - h), |a, &b| *a += alpha * b);
    }
    grad
}
