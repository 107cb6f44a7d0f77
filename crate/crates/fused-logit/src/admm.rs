//! Outer ADMM driver. The multi-task objective is split into a smooth
//! block (per-task penalized logistic losses, one Newton solve per task
//! column) and a nonsmooth block (lasso plus fusion, one nested-ADMM
//! solve), tied together by the consensus constraint χ = ζ with scaled
//! dual ξ. The reported coefficients are ζ, which carries the exact
//! zeros produced by the soft-threshold steps.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{mt_objective, CoefficientMatrix, PenaltyConfig, TaskDataset};
use crate::newton::{ChiSolver, ChiSubproblem, NewtonRoute, NewtonSettings};
use crate::prox::{solve_zeta_update, InnerSettings, InnerState, ZetaSubproblem};

/// Full solver state, reusable across fits of the same shape to warm-start
/// regularization-path chains.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub chi: Array2<f64>,
    pub zeta: Array2<f64>,
    pub xi: Array2<f64>,
    pub inner: InnerState,
}

impl AdmmState {
    pub fn cold(n_params: usize, t: usize) -> Self {
        AdmmState {
            chi: Array2::zeros((n_params, t)),
            zeta: Array2::zeros((n_params, t)),
            xi: Array2::zeros((n_params, t)),
            inner: InnerState::cold(t, n_params),
        }
    }

    fn check_shape(&self, n_params: usize, t: usize) -> Result<()> {
        let ok = self.chi.dim() == (n_params, t)
            && self.zeta.dim() == (n_params, t)
            && self.xi.dim() == (n_params, t)
            && self.inner.chi_t.dim() == (t, n_params);
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "solver state does not match a {} x {} problem",
                n_params, t
            )))
        }
    }
}

/// Where the time went and whether the subproblem solvers held up.
#[derive(Debug, Clone, Copy)]
pub struct FitDiagnostics {
    pub route: NewtonRoute,
    /// XXᵀ needed diagonal jitter to factorize (dual route only).
    pub jittered: bool,
    /// Newton column solves that hit their iteration cap.
    pub newton_nonconverged: usize,
    /// Nested-ADMM solves that hit their iteration cap.
    pub inner_nonconverged: usize,
}

/// One fitted model plus its convergence record.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub b: CoefficientMatrix,
    /// Multi-task objective at the reported coefficients.
    pub objective: f64,
    /// Objective at ζ after each outer iteration.
    pub objective_trace: Vec<f64>,
    /// ‖χ − ζ‖F after each outer iteration.
    pub primal_residuals: Vec<f64>,
    /// ρ‖ζ − ζ_prev‖F after each outer iteration.
    pub dual_residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: FitDiagnostics,
}

/// Copy of all three ADMM blocks at one point in time.
#[derive(Debug, Clone)]
pub struct AdmmSnapshot {
    pub chi: Array2<f64>,
    pub zeta: Array2<f64>,
    pub xi: Array2<f64>,
}

/// Fits the fused elastic net logistic model from a cold start.
pub fn fit(data: &TaskDataset, cfg: &PenaltyConfig) -> Result<FitResult> {
    let mut state = AdmmState::cold(data.n_params(), data.t());
    run(data, cfg, &mut state, None)
}

/// Continues from (and updates) an existing state. Warm-starting along a
/// regularization path keeps χ, ζ, ξ, and the nested-ADMM blocks.
pub fn fit_continue(
    data: &TaskDataset,
    cfg: &PenaltyConfig,
    state: &mut AdmmState,
) -> Result<FitResult> {
    run(data, cfg, state, None)
}

/// Cold-start fit that also records a snapshot of (χ, ζ, ξ) before the
/// first iteration and after every outer iteration.
pub fn fit_with_trace(
    data: &TaskDataset,
    cfg: &PenaltyConfig,
) -> Result<(FitResult, Vec<AdmmSnapshot>)> {
    let mut state = AdmmState::cold(data.n_params(), data.t());
    let mut snapshots = Vec::new();
    let result = run(data, cfg, &mut state, Some(&mut snapshots))?;
    Ok((result, snapshots))
}

fn frob(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn snapshot(state: &AdmmState) -> AdmmSnapshot {
    AdmmSnapshot {
        chi: state.chi.clone(),
        zeta: state.zeta.clone(),
        xi: state.xi.clone(),
    }
}

fn run(
    data: &TaskDataset,
    cfg: &PenaltyConfig,
    state: &mut AdmmState,
    mut trace: Option<&mut Vec<AdmmSnapshot>>,
) -> Result<FitResult> {
    cfg.validate()?;
    let p = data.n_params();
    let t = data.t();
    state.check_shape(p, t)?;

    let lambda1 = cfg.lambda1_vec(p);
    let lambda2 = cfg.lambda2_vec(p);
    let nu = cfg.nu_vec(p);
    let op = cfg.difference_operator(t);
    let solver = ChiSolver::new(data.x(), &lambda2, cfg.rho);
    let newton = NewtonSettings {
        tol: cfg.newton_tol,
        max_iter: cfg.max_newton,
    };
    let inner = InnerSettings {
        eps_abs: cfg.inner_eps_abs,
        eps_rel: cfg.inner_eps_rel,
        max_inner: cfg.max_inner,
        cd_tol: cfg.cd_tol,
        max_cd_cycles: cfg.max_cd_cycles,
    };
    let dim_sqrt = ((p * t) as f64).sqrt();

    if let Some(snaps) = trace.as_deref_mut() {
        snaps.push(snapshot(state));
    }

    let mut objective_trace = Vec::new();
    let mut primal_residuals = Vec::new();
    let mut dual_residuals = Vec::new();
    let mut newton_nonconverged = 0;
    let mut inner_nonconverged = 0;
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..cfg.max_outer {
        // χ-update: independent Newton solve per task column, anchored at
        // Ω = ζ - ξ and warm-started from the previous χ.
        let omega = &state.zeta - &state.xi;
        let solves: Vec<_> = (0..t)
            .into_par_iter()
            .map(|j| {
                let sub = ChiSubproblem {
                    x: data.x(),
                    y: data.y().column(j).to_owned(),
                    omega: omega.column(j).to_owned(),
                    lambda2: &lambda2,
                    rho: cfg.rho,
                };
                solver.solve(&sub, Some(state.chi.column(j)), newton)
            })
            .collect();
        for (j, solve) in solves.into_iter().enumerate() {
            let solve = solve?;
            if !solve.converged {
                newton_nonconverged += 1;
            }
            state.chi.column_mut(j).assign(&solve.chi);
        }

        // ζ-update: nested ADMM on the nonsmooth block, anchored at χ + ξ.
        let anchor = &state.chi + &state.xi;
        let sub = ZetaSubproblem {
            omega: &anchor,
            lambda1: &lambda1,
            nu: &nu,
            rho: cfg.rho,
            rho_tilde: cfg.rho_tilde,
            op,
        };
        let zeta_prev = std::mem::replace(&mut state.zeta, Array2::zeros((0, 0)));
        let (zeta_new, inner_diag) = solve_zeta_update(&sub, &mut state.inner, inner)?;
        if !inner_diag.converged {
            inner_nonconverged += 1;
        }
        state.zeta = zeta_new;

        let residual = &state.chi - &state.zeta;
        state.xi += &residual;
        iterations += 1;
        if let Some(snaps) = trace.as_deref_mut() {
            snaps.push(snapshot(state));
        }

        let r = frob(&residual);
        let s = cfg.rho * frob(&(&state.zeta - &zeta_prev));
        primal_residuals.push(r);
        dual_residuals.push(s);
        objective_trace.push(mt_objective(&state.zeta, data, cfg)?);

        let eps_pri =
            dim_sqrt * cfg.eps_abs + cfg.eps_rel * frob(&state.chi).max(frob(&state.zeta));
        let eps_dual = dim_sqrt * cfg.eps_abs + cfg.eps_rel * cfg.rho * frob(&state.xi);
        if r <= eps_pri && s <= eps_dual {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!(
            "outer ADMM hit the iteration cap {} (lambda1={} lambda2={} nu={})",
            cfg.max_outer,
            cfg.lambda1,
            cfg.lambda2,
            cfg.nu
        );
    }

    let b = CoefficientMatrix::new(state.zeta.clone())?;
    let objective = mt_objective(b.matrix(), data, cfg)?;
    Ok(FitResult {
        b,
        objective,
        objective_trace,
        primal_residuals,
        dual_residuals,
        iterations,
        converged,
        diagnostics: FitDiagnostics {
            route: solver.route(),
            jittered: solver.jittered,
            newton_nonconverged,
            inner_nonconverged,
        },
    })
}
