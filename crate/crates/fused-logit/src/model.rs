//! Joint model for t ordered binary classification tasks sharing one design
//! matrix: per-task logistic losses, per-task elastic net penalties, and an
//! L1 fusion penalty tying neighboring tasks' coefficients together.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerically stable logistic function, safe for |m| well past 700.
pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(-m)) without overflow for large |m|.
pub(crate) fn log1p_exp_neg(m: f64) -> f64 {
    (-m).max(0.0) + (-m.abs()).exp().ln_1p()
}

/// Design matrix with a leading intercept column plus one ±1 label column
/// per task. All tasks observe the same feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    x: Array2<f64>,
    y: Array2<f64>,
}

impl TaskDataset {
    /// Builds a dataset from a design matrix whose first column is the
    /// intercept (all ones) and a ±1 label matrix.
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::InvalidData("dataset has no rows".into()));
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidData("design matrix has no columns".into()));
        }
        if y.nrows() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if y.ncols() == 0 {
            return Err(Error::InvalidData("label matrix has no tasks".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("design matrix has non-finite entries".into()));
        }
        if x.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::InvalidData(
                "first column of the design matrix must be the all-ones intercept".into(),
            ));
        }
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidData("labels must be +1 or -1".into()));
        }
        Ok(TaskDataset { x, y })
    }

    /// Builds a dataset from raw features (no intercept column) by
    /// prepending the all-ones column.
    pub fn from_features(features: ArrayView2<f64>, y: Array2<f64>) -> Result<Self> {
        let n = features.nrows();
        let mut x = Array2::<f64>::ones((n, features.ncols() + 1));
        x.slice_mut(ndarray::s![.., 1..]).assign(&features);
        TaskDataset::new(x, y)
    }

    /// Design matrix, n × (1+d), first column all ones.
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    /// Label matrix, n × t, entries ±1.
    pub fn y(&self) -> &Array2<f64> {
        &self.y
    }

    /// Feature part of the design matrix (intercept column dropped).
    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.x.slice(ndarray::s![.., 1..])
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of features, excluding the intercept.
    pub fn d(&self) -> usize {
        self.x.ncols() - 1
    }

    /// Number of coefficients per task, intercept included.
    pub fn n_params(&self) -> usize {
        self.x.ncols()
    }

    pub fn t(&self) -> usize {
        self.y.ncols()
    }

    /// Dataset restricted to the first `n` rows.
    pub fn head(&self, n: usize) -> Result<TaskDataset> {
        if n == 0 || n > self.n() {
            return Err(Error::InvalidData(format!(
                "cannot take {} of {} rows",
                n,
                self.n()
            )));
        }
        TaskDataset::new(
            self.x.slice(ndarray::s![..n, ..]).to_owned(),
            self.y.slice(ndarray::s![..n, ..]).to_owned(),
        )
    }
}

/// Coefficients for all tasks: (1+d) × t, row 0 holds the intercepts.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    b: Array2<f64>,
}

impl CoefficientMatrix {
    pub fn new(b: Array2<f64>) -> Result<Self> {
        if b.nrows() == 0 || b.ncols() == 0 {
            return Err(Error::InvalidData("coefficient matrix is empty".into()));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(
                "coefficient matrix has non-finite entries".into(),
            ));
        }
        Ok(CoefficientMatrix { b })
    }

    pub fn zeros(n_params: usize, t: usize) -> Self {
        CoefficientMatrix {
            b: Array2::zeros((n_params, t)),
        }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.b
    }

    pub fn n_params(&self) -> usize {
        self.b.nrows()
    }

    pub fn t(&self) -> usize {
        self.b.ncols()
    }
}

/// Pairwise column-difference structure: which neighboring task pairs are
/// fused. Pairs run (j, j+1) for j < t-1, plus (t-1, 0) when `circ`.
/// A single task has nothing to fuse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceOperator {
    pub t: usize,
    pub circ: bool,
}

impl DifferenceOperator {
    pub fn new(t: usize, circ: bool) -> Self {
        DifferenceOperator { t, circ }
    }

    /// Ordered fused pairs (j, successor of j).
    pub fn fused_pairs(&self) -> Vec<(usize, usize)> {
        if self.t < 2 {
            return Vec::new();
        }
        let mut pairs: Vec<(usize, usize)> = (0..self.t - 1).map(|j| (j, j + 1)).collect();
        if self.circ {
            pairs.push((self.t - 1, 0));
        }
        pairs
    }

    /// Successor task of column j under the fusion ordering, if fused.
    pub fn successor(&self, j: usize) -> Option<usize> {
        if self.t < 2 {
            return None;
        }
        if j + 1 < self.t {
            Some(j + 1)
        } else if self.circ {
            Some(0)
        } else {
            None
        }
    }

    /// Predecessor task whose fused difference involves column j, if any.
    pub fn predecessor(&self, j: usize) -> Option<usize> {
        if self.t < 2 {
            return None;
        }
        if j > 0 {
            Some(j - 1)
        } else if self.circ {
            Some(self.t - 1)
        } else {
            None
        }
    }
}

/// Stacks the fused column differences of `b`: one output column per fused
/// pair, in `fused_pairs` order.
pub fn difference_apply(b: &Array2<f64>, op: &DifferenceOperator) -> Array2<f64> {
    let pairs = op.fused_pairs();
    let mut out = Array2::<f64>::zeros((b.nrows(), pairs.len()));
    for (col, &(j, k)) in pairs.iter().enumerate() {
        let diff = &b.column(j) - &b.column(k);
        out.column_mut(col).assign(&diff);
    }
    out
}

/// Penalty weights and every solver knob. Intercepts are never penalized by
/// the elastic net terms; fusion of the intercept row is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyConfig {
    /// L1 weight on non-intercept coefficients.
    pub lambda1: f64,
    /// Squared-L2 weight on non-intercept coefficients.
    pub lambda2: f64,
    /// L1 weight on fused column differences.
    pub nu: f64,
    /// Fuse the last task back onto the first.
    pub circ: bool,
    /// Apply the fusion penalty to the intercept row too.
    pub penalize_intercept_fusion: bool,
    /// Outer ADMM penalty parameter (kept fixed).
    pub rho: f64,
    /// Inner ADMM penalty parameter.
    pub rho_tilde: f64,
    /// Outer stopping tolerances.
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_outer: usize,
    /// Inner ADMM stopping tolerances.
    pub inner_eps_abs: f64,
    pub inner_eps_rel: f64,
    pub max_inner: usize,
    /// Newton stopping: gradient norm at most newton_tol * (1 + ||chi||).
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Coordinate descent sweep stopping inside the inner ADMM.
    pub cd_tol: f64,
    pub max_cd_cycles: usize,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            nu: 0.0,
            circ: false,
            penalize_intercept_fusion: true,
            rho: 1.0,
            rho_tilde: 1.0,
            eps_abs: 1e-4,
            eps_rel: 1e-3,
            max_outer: 500,
            inner_eps_abs: 1e-5,
            inner_eps_rel: 1e-4,
            max_inner: 300,
            newton_tol: 1e-8,
            max_newton: 50,
            cd_tol: 1e-8,
            max_cd_cycles: 200,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0) || !(self.lambda2 >= 0.0) || !(self.nu >= 0.0) {
            return Err(Error::InvalidConfig(
                "penalty weights must be nonnegative and finite".into(),
            ));
        }
        if !(self.rho > 0.0) || !(self.rho_tilde > 0.0) {
            return Err(Error::InvalidConfig("rho and rho_tilde must be positive".into()));
        }
        for (name, v) in [
            ("eps_abs", self.eps_abs),
            ("eps_rel", self.eps_rel),
            ("inner_eps_abs", self.inner_eps_abs),
            ("inner_eps_rel", self.inner_eps_rel),
            ("newton_tol", self.newton_tol),
            ("cd_tol", self.cd_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.max_outer == 0 || self.max_inner == 0 || self.max_newton == 0 || self.max_cd_cycles == 0
        {
            return Err(Error::InvalidConfig("iteration limits must be at least 1".into()));
        }
        Ok(())
    }

    /// Per-row L1 weights: 0 for the intercept, lambda1 elsewhere.
    pub fn lambda1_vec(&self, n_params: usize) -> Array1<f64> {
        let mut v = Array1::from_elem(n_params, self.lambda1);
        v[0] = 0.0;
        v
    }

    /// Per-row squared-L2 weights: 0 for the intercept, lambda2 elsewhere.
    pub fn lambda2_vec(&self, n_params: usize) -> Array1<f64> {
        let mut v = Array1::from_elem(n_params, self.lambda2);
        v[0] = 0.0;
        v
    }

    /// Per-row fusion weights; the intercept row drops out unless
    /// `penalize_intercept_fusion` is set.
    pub fn nu_vec(&self, n_params: usize) -> Array1<f64> {
        let mut v = Array1::from_elem(n_params, self.nu);
        if !self.penalize_intercept_fusion {
            v[0] = 0.0;
        }
        v
    }

    pub fn difference_operator(&self, t: usize) -> DifferenceOperator {
        DifferenceOperator::new(t, self.circ)
    }
}

/// Negative log-likelihood of one task: sum of log(1 + exp(-y_i x_iᵀβ)).
pub fn task_nll(beta: ArrayView1<f64>, x: &Array2<f64>, y: ArrayView1<f64>) -> f64 {
    assert_eq!(beta.len(), x.ncols(), "beta length must match design columns");
    assert_eq!(y.len(), x.nrows(), "label length must match design rows");
    let margins = x.dot(&beta);
    margins
        .iter()
        .zip(y.iter())
        .map(|(&m, &yi)| log1p_exp_neg(yi * m))
        .sum()
}

/// Full joint objective: task losses, elastic net terms, and the fusion
/// penalty over fused column differences.
pub fn mt_objective(b: &Array2<f64>, data: &TaskDataset, cfg: &PenaltyConfig) -> Result<f64> {
    cfg.validate()?;
    if b.nrows() != data.n_params() || b.ncols() != data.t() {
        return Err(Error::DimensionMismatch(format!(
            "coefficients are {}x{} but data needs {}x{}",
            b.nrows(),
            b.ncols(),
            data.n_params(),
            data.t()
        )));
    }
    let p = data.n_params();
    let lambda1 = cfg.lambda1_vec(p);
    let lambda2 = cfg.lambda2_vec(p);
    let nu = cfg.nu_vec(p);
    let op = cfg.difference_operator(data.t());

    let mut value = 0.0;
    for j in 0..data.t() {
        value += task_nll(b.column(j), data.x(), data.y().column(j));
    }
    for l in 0..p {
        let mut abs_sum = 0.0;
        let mut sq_sum = 0.0;
        for j in 0..data.t() {
            abs_sum += b[[l, j]].abs();
            sq_sum += b[[l, j]] * b[[l, j]];
        }
        value += lambda1[l] * abs_sum + 0.5 * lambda2[l] * sq_sum;
    }
    for &(j, k) in op.fused_pairs().iter() {
        for l in 0..p {
            value += nu[l] * (b[[l, j]] - b[[l, k]]).abs();
        }
    }
    if !value.is_finite() {
        return Err(Error::NonFinite("objective evaluated to a non-finite value".into()));
    }
    Ok(value)
}

/// Per-task probabilities P(y = +1 | x) for one design row (intercept entry
/// included).
pub fn predict_proba(b: &Array2<f64>, x_row: ArrayView1<f64>) -> Array1<f64> {
    assert_eq!(x_row.len(), b.nrows(), "row length must match coefficient rows");
    let margins = b.t().dot(&x_row);
    margins.mapv(sigmoid)
}

/// Hard ±1 labels for every row and task; a margin of exactly zero counts
/// as +1.
pub fn classify(b: &Array2<f64>, x: &Array2<f64>) -> Array2<f64> {
    assert_eq!(x.ncols(), b.nrows(), "design columns must match coefficient rows");
    let margins = x.dot(b);
    margins.mapv(|m| if m >= 0.0 { 1.0 } else { -1.0 })
}
