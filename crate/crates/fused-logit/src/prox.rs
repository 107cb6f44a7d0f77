//! The nonsmooth block of the outer ADMM: for a fixed anchor Ω = χ + ξ,
//! minimize over ζ
//!
//!   ‖[λ₁]⊙ζ‖₁ + ‖[ν]⊙(fused column differences of ζ)‖₁ + ½ρ‖ζ − Ω‖²,
//!
//! by a nested ADMM in transposed coordinates. With χ̃ := ζᵀ and
//! ζ̃ := (fused row differences of χ̃), the χ̃-block is separable per
//! column and is minimized by cyclic coordinate descent whose single-entry
//! step is an exact soft threshold; the ζ̃-block is an entrywise soft
//! threshold of the shifted differences.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::DifferenceOperator;

/// S_κ(a): shrink `a` toward zero by κ, exactly zero inside [-κ, κ].
pub fn soft_threshold(a: f64, kappa: f64) -> f64 {
    debug_assert!(kappa >= 0.0);
    if a > kappa {
        a - kappa
    } else if a < -kappa {
        a + kappa
    } else {
        0.0
    }
}

/// One ζ-update instance. `omega` is (1+d) × t, `lambda1` and `nu` are
/// per-row weight vectors (intercept entries zero unless configured
/// otherwise for fusion).
#[derive(Debug, Clone)]
pub struct ZetaSubproblem<'a> {
    pub omega: &'a Array2<f64>,
    pub lambda1: &'a Array1<f64>,
    pub nu: &'a Array1<f64>,
    pub rho: f64,
    pub rho_tilde: f64,
    pub op: DifferenceOperator,
}

impl<'a> ZetaSubproblem<'a> {
    pub fn n_params(&self) -> usize {
        self.omega.nrows()
    }

    pub fn t(&self) -> usize {
        self.omega.ncols()
    }

    fn check(&self) -> Result<()> {
        if self.lambda1.len() != self.n_params() || self.nu.len() != self.n_params() {
            return Err(Error::DimensionMismatch(
                "penalty vectors must have one entry per coefficient row".into(),
            ));
        }
        if self.op.t != self.t() {
            return Err(Error::DimensionMismatch(
                "difference operator task count must match omega columns".into(),
            ));
        }
        if !(self.rho > 0.0) || !(self.rho_tilde > 0.0) {
            return Err(Error::InvalidConfig("rho and rho_tilde must be positive".into()));
        }
        Ok(())
    }
}

/// Value of the ζ-update objective at a candidate ζ (original, untransposed
/// coordinates). Used by invariants and test oracles.
pub fn zeta_objective(zeta: &Array2<f64>, sub: &ZetaSubproblem) -> f64 {
    let p = sub.n_params();
    let t = sub.t();
    let mut value = 0.0;
    for l in 0..p {
        for j in 0..t {
            value += sub.lambda1[l] * zeta[[l, j]].abs();
            let dev = zeta[[l, j]] - sub.omega[[l, j]];
            value += 0.5 * sub.rho * dev * dev;
        }
    }
    for &(j, k) in sub.op.fused_pairs().iter() {
        for l in 0..p {
            value += sub.nu[l] * (zeta[[l, j]] - zeta[[l, k]]).abs();
        }
    }
    value
}

/// Inner-ADMM state in transposed coordinates; all three blocks are t × (1+d).
/// Rows of `zeta_t` and `xi_t` that are not fused stay identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerState {
    pub chi_t: Array2<f64>,
    pub zeta_t: Array2<f64>,
    pub xi_t: Array2<f64>,
}

impl InnerState {
    pub fn cold(t: usize, n_params: usize) -> Self {
        InnerState {
            chi_t: Array2::zeros((t, n_params)),
            zeta_t: Array2::zeros((t, n_params)),
            xi_t: Array2::zeros((t, n_params)),
        }
    }
}

/// Stopping controls for the nested ADMM, usually from `PenaltyConfig`.
#[derive(Debug, Clone, Copy)]
pub struct InnerSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_inner: usize,
    pub cd_tol: f64,
    pub max_cd_cycles: usize,
}

impl Default for InnerSettings {
    fn default() -> Self {
        InnerSettings {
            eps_abs: 1e-5,
            eps_rel: 1e-4,
            max_inner: 300,
            cd_tol: 1e-8,
            max_cd_cycles: 200,
        }
    }
}

/// Convergence report of one ζ-update.
#[derive(Debug, Clone, Copy)]
pub struct InnerDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Exact single-coordinate minimizer for entry (j, l) of χ̃ with every
/// other entry fixed: a soft threshold whose target averages the anchor
/// Ωᵀ with the fused-neighbor pull terms. Boundary rows of a chain keep
/// only the neighbor terms that exist.
pub fn cd_step(
    j: usize,
    l: usize,
    chi_t: &Array2<f64>,
    zeta_t: &Array2<f64>,
    xi_t: &Array2<f64>,
    sub: &ZetaSubproblem,
) -> f64 {
    let mut den = sub.rho;
    let mut num = sub.rho * sub.omega[[l, j]];
    if let Some(succ) = sub.op.successor(j) {
        // Row j's own fused difference (χ̃_j − χ̃_succ) − ζ̃_j + ξ̃_j.
        let target = chi_t[[succ, l]] + zeta_t[[j, l]] - xi_t[[j, l]];
        den += sub.rho_tilde;
        num += sub.rho_tilde * target;
    }
    if let Some(q) = sub.op.predecessor(j) {
        // Row q's difference (χ̃_q − χ̃_j) − ζ̃_q + ξ̃_q pulls entry (j, l).
        let target = chi_t[[q, l]] - zeta_t[[q, l]] + xi_t[[q, l]];
        den += sub.rho_tilde;
        num += sub.rho_tilde * target;
    }
    soft_threshold(num / den, sub.lambda1[l] / den)
}

/// Augmented objective minimized by the χ̃-block for fixed ζ̃, ξ̃:
/// lasso + anchor terms plus the ρ̃ coupling over fused rows.
pub fn chi_tilde_objective(
    chi_t: &Array2<f64>,
    zeta_t: &Array2<f64>,
    xi_t: &Array2<f64>,
    sub: &ZetaSubproblem,
) -> f64 {
    let p = sub.n_params();
    let t = sub.t();
    let mut value = 0.0;
    for j in 0..t {
        for l in 0..p {
            value += sub.lambda1[l] * chi_t[[j, l]].abs();
            let dev = chi_t[[j, l]] - sub.omega[[l, j]];
            value += 0.5 * sub.rho * dev * dev;
        }
    }
    for j in 0..t {
        if let Some(succ) = sub.op.successor(j) {
            for l in 0..p {
                let c = (chi_t[[j, l]] - chi_t[[succ, l]]) - zeta_t[[j, l]] + xi_t[[j, l]];
                value += 0.5 * sub.rho_tilde * c * c;
            }
        }
    }
    value
}

/// Cyclic coordinate descent over χ̃ until no entry moves more than
/// `cd_tol` in a full sweep (or the cycle cap). Returns cycles used.
pub fn chi_tilde_update(
    chi_t: &mut Array2<f64>,
    zeta_t: &Array2<f64>,
    xi_t: &Array2<f64>,
    sub: &ZetaSubproblem,
    cd_tol: f64,
    max_cd_cycles: usize,
) -> usize {
    let p = sub.n_params();
    let t = sub.t();
    for cycle in 1..=max_cd_cycles {
        let mut max_change = 0.0f64;
        for l in 0..p {
            for j in 0..t {
                let new = cd_step(j, l, chi_t, zeta_t, xi_t, sub);
                max_change = max_change.max((new - chi_t[[j, l]]).abs());
                chi_t[[j, l]] = new;
            }
        }
        if max_change <= cd_tol {
            return cycle;
        }
    }
    max_cd_cycles
}

/// Fused row differences of χ̃ (zero rows where nothing is fused).
fn row_differences(chi_t: &Array2<f64>, op: &DifferenceOperator) -> Array2<f64> {
    let mut out = Array2::zeros(chi_t.raw_dim());
    for j in 0..op.t {
        if let Some(succ) = op.successor(j) {
            let diff = &chi_t.row(j) - &chi_t.row(succ);
            out.row_mut(j).assign(&diff);
        }
    }
    out
}

/// ζ̃-block update: entrywise soft threshold of the shifted differences,
/// row j threshold ν_l / ρ̃. Non-fused rows are zero.
pub fn zeta_tilde_update(
    chi_t: &Array2<f64>,
    xi_t: &Array2<f64>,
    sub: &ZetaSubproblem,
) -> Array2<f64> {
    let p = sub.n_params();
    let mut out = Array2::zeros(chi_t.raw_dim());
    for j in 0..sub.t() {
        if let Some(succ) = sub.op.successor(j) {
            for l in 0..p {
                let a = chi_t[[j, l]] - chi_t[[succ, l]] + xi_t[[j, l]];
                out[[j, l]] = soft_threshold(a, sub.nu[l] / sub.rho_tilde);
            }
        }
    }
    out
}

fn frob(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Applies (I − R) on the left of a t × p matrix: row j minus its
/// predecessor row under the fusion ordering.
fn apply_difference_transpose(m: &Array2<f64>, op: &DifferenceOperator) -> Array2<f64> {
    let mut out = m.clone();
    for j in 0..op.t {
        if let Some(q) = op.predecessor(j) {
            let sub_row = m.row(q).to_owned();
            let mut row = out.row_mut(j);
            row -= &sub_row;
        }
    }
    out
}

/// Runs the nested ADMM for one ζ-update, warm-starting from (and updating)
/// `state`. Returns the converged χ̃ transposed back to (1+d) × t; its
/// entries carry the exact zeros of the coordinate-descent soft threshold.
///
/// A fully unpenalized block (λ₁ = 0 and ν = 0) short-circuits to ζ = Ω,
/// the exact minimizer of the remaining quadratic.
pub fn solve_zeta_update(
    sub: &ZetaSubproblem,
    state: &mut InnerState,
    settings: InnerSettings,
) -> Result<(Array2<f64>, InnerDiagnostics)> {
    sub.check()?;
    let p = sub.n_params();
    let t = sub.t();
    if state.chi_t.nrows() != t || state.chi_t.ncols() != p {
        return Err(Error::DimensionMismatch(
            "inner warm state does not match the subproblem shape".into(),
        ));
    }

    if sub.lambda1.iter().all(|&v| v == 0.0) && sub.nu.iter().all(|&v| v == 0.0) {
        state.chi_t = sub.omega.t().to_owned();
        state.zeta_t = row_differences(&state.chi_t, &sub.op);
        state.xi_t.fill(0.0);
        return Ok((
            sub.omega.clone(),
            InnerDiagnostics {
                iterations: 0,
                converged: true,
                primal_residual: 0.0,
                dual_residual: 0.0,
            },
        ));
    }

    let dim_sqrt = ((t * p) as f64).sqrt();
    let mut iterations = 0;
    let mut converged = false;
    let mut primal_residual = f64::INFINITY;
    let mut dual_residual = f64::INFINITY;
    for _ in 0..settings.max_inner {
        chi_tilde_update(
            &mut state.chi_t,
            &state.zeta_t,
            &state.xi_t,
            sub,
            settings.cd_tol,
            settings.max_cd_cycles,
        );
        let diffs = row_differences(&state.chi_t, &sub.op);
        let zeta_prev = std::mem::replace(
            &mut state.zeta_t,
            zeta_tilde_update(&state.chi_t, &state.xi_t, sub),
        );
        let residual_mat = &diffs - &state.zeta_t;
        state.xi_t += &residual_mat;
        iterations += 1;

        primal_residual = frob(&residual_mat);
        let dz = &state.zeta_t - &zeta_prev;
        dual_residual = sub.rho_tilde * frob(&apply_difference_transpose(&dz, &sub.op));
        let eps_pri = dim_sqrt * settings.eps_abs
            + settings.eps_rel * frob(&diffs).max(frob(&state.zeta_t));
        let scaled_xi = state.xi_t.mapv(|v| sub.rho_tilde * v);
        let eps_dual = dim_sqrt * settings.eps_abs
            + settings.eps_rel * frob(&apply_difference_transpose(&scaled_xi, &sub.op));
        if primal_residual <= eps_pri && dual_residual <= eps_dual {
            converged = true;
            break;
        }
    }

    Ok((
        state.chi_t.t().to_owned(),
        InnerDiagnostics {
            iterations,
            converged,
            primal_residual,
            dual_residual,
        },
    ))
}
