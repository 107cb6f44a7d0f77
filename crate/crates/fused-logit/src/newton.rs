//! Newton solver for the smooth per-task subproblem of the outer ADMM:
//! ridge-regularized logistic loss plus the proximal anchor term
//!
//!   f̃(χ) = Σ_i log(1 + exp(-y_i x_iᵀχ)) + ½‖λ₂⊙χ‖² + ½ρ‖χ − Ω‖².
//!
//! When there are fewer samples than features the minimization runs in the
//! n-dimensional dual space instead: through the affine map
//! h(γ) = (Xᵀγ + ρΩ) ⊘ (λ₂ + ρ), the composed objective φ(γ) = f̃(h(γ))
//! has the same minimum, and h carries the dual minimizer back to χ.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;
use crate::model::{log1p_exp_neg, sigmoid};

/// One per-task smooth subproblem. `omega` is the anchor ζ·j − ξ·j of the
/// proximal term, `lambda2` the per-row ridge weights (zero intercept).
#[derive(Debug, Clone)]
pub struct ChiSubproblem<'a> {
    pub x: &'a Array2<f64>,
    pub y: Array1<f64>,
    pub omega: Array1<f64>,
    pub lambda2: &'a Array1<f64>,
    pub rho: f64,
}

impl<'a> ChiSubproblem<'a> {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols()
    }
}

/// Subproblem objective value at `chi`.
pub fn chi_objective(chi: ArrayView1<f64>, sub: &ChiSubproblem) -> f64 {
    debug_assert_eq!(chi.len(), sub.n_params());
    let margins = sub.x.dot(&chi);
    let mut value = 0.0;
    for (i, &m) in margins.iter().enumerate() {
        value += log1p_exp_neg(sub.y[i] * m);
    }
    for l in 0..chi.len() {
        let dev = chi[l] - sub.omega[l];
        value += 0.5 * sub.lambda2[l] * chi[l] * chi[l] + 0.5 * sub.rho * dev * dev;
    }
    value
}

/// Logistic residual vector δ: entry i is -y_i σ(-y_i x_iᵀχ), strictly
/// inside (-1, 0) for y_i = +1 and (0, 1) for y_i = -1.
pub fn logistic_residuals(chi: ArrayView1<f64>, sub: &ChiSubproblem) -> Array1<f64> {
    let margins = sub.x.dot(&chi);
    let mut delta = Array1::zeros(sub.n());
    for i in 0..sub.n() {
        delta[i] = -sub.y[i] * sigmoid(-sub.y[i] * margins[i]);
    }
    delta
}

/// Gradient Xᵀδ + (λ₂ + ρ)⊙χ − ρΩ.
pub fn chi_gradient(chi: ArrayView1<f64>, sub: &ChiSubproblem) -> Array1<f64> {
    let delta = logistic_residuals(chi, sub);
    let mut grad = sub.x.t().dot(&delta);
    for l in 0..chi.len() {
        grad[l] += (sub.lambda2[l] + sub.rho) * chi[l] - sub.rho * sub.omega[l];
    }
    grad
}

/// Squared logistic weights w² = p(1-p) per row, written with the sigmoid
/// to stay finite under saturated margins.
fn logistic_weights_sq(chi: ArrayView1<f64>, sub: &ChiSubproblem) -> Array1<f64> {
    let margins = sub.x.dot(&chi);
    margins.mapv(|m| sigmoid(m) * sigmoid(-m))
}

/// Hessian XᵀW²X + diag(λ₂ + ρ).
pub fn chi_hessian(chi: ArrayView1<f64>, sub: &ChiSubproblem) -> Array2<f64> {
    let w2 = logistic_weights_sq(chi, sub);
    let p = sub.n_params();
    let mut weighted = sub.x.clone();
    for (i, mut row) in weighted.rows_mut().into_iter().enumerate() {
        row *= w2[i];
    }
    let mut h = sub.x.t().dot(&weighted);
    for l in 0..p {
        h[[l, l]] += sub.lambda2[l] + sub.rho;
    }
    h
}

/// Quantities of the dual reparametrization that do not depend on the
/// anchor Ω: the Gram matrix K = X̃X̃ᵀ of the column-scaled design
/// X̃ = X ⊘ √(λ₂+ρ)ᵀ, and a factorization of XXᵀ for the inverse map.
/// These are shared by every task column and every outer iteration of a fit.
#[derive(Debug, Clone)]
pub struct DualContext {
    k: Array2<f64>,
    xxt_factor: CholeskyFactor,
    scale: Array1<f64>,
    /// XXᵀ only factorized after diagonal jitter; the solve is usable but
    /// ill-conditioned, typically from duplicated sample rows.
    pub jittered: bool,
}

impl DualContext {
    pub fn new(x: &Array2<f64>, lambda2: &Array1<f64>, rho: f64) -> Result<Self> {
        if lambda2.len() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "lambda2 has {} entries for {} design columns",
                lambda2.len(),
                x.ncols()
            )));
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidConfig("dual transform needs rho > 0".into()));
        }
        let scale = lambda2.mapv(|v| (v + rho).sqrt());
        let mut x_tilde = x.clone();
        for (l, mut col) in x_tilde.columns_mut().into_iter().enumerate() {
            col /= scale[l];
        }
        let k = x_tilde.dot(&x_tilde.t());
        let xxt = x.dot(&x.t());
        let xxt_factor = CholeskyFactor::decompose_with_jitter(&xxt, 2).map_err(|_| {
            Error::SingularMatrix(
                "XXᵀ is not positive definite even after jitter; use the primal path".into(),
            )
        })?;
        let jittered = xxt_factor.jittered;
        Ok(DualContext {
            k,
            xxt_factor,
            scale,
            jittered,
        })
    }

    /// Gram matrix K = X̃X̃ᵀ.
    pub fn gram(&self) -> &Array2<f64> {
        &self.k
    }
}

/// The pair of maps h / h⁻¹ bound to one subproblem: shares the cached
/// context and carries the scaled anchor Ω̃ = Ω ⊘ √(λ₂+ρ).
pub struct DualTransform<'a> {
    pub ctx: &'a DualContext,
    pub sub: &'a ChiSubproblem<'a>,
    pub omega_tilde: Array1<f64>,
}

impl<'a> DualTransform<'a> {
    pub fn new(ctx: &'a DualContext, sub: &'a ChiSubproblem<'a>) -> Self {
        let omega_tilde = &sub.omega / &ctx.scale;
        DualTransform {
            ctx,
            sub,
            omega_tilde,
        }
    }
}

/// h(γ) = (Xᵀγ + ρΩ) ⊘ (λ₂ + ρ).
pub fn h_map(gamma: ArrayView1<f64>, tr: &DualTransform) -> Array1<f64> {
    let mut chi = tr.sub.x.t().dot(&gamma);
    for l in 0..chi.len() {
        chi[l] = (chi[l] + tr.sub.rho * tr.sub.omega[l]) / (tr.ctx.scale[l] * tr.ctx.scale[l]);
    }
    chi
}

/// h⁻¹(χ) = (XXᵀ)⁻¹ X ((λ₂+ρ)⊙χ − ρΩ); a left inverse of h whenever XXᵀ
/// is invertible.
pub fn h_inverse(chi: ArrayView1<f64>, tr: &DualTransform) -> Array1<f64> {
    let mut scaled = Array1::zeros(chi.len());
    for l in 0..chi.len() {
        scaled[l] =
            (tr.ctx.scale[l] * tr.ctx.scale[l]) * chi[l] - tr.sub.rho * tr.sub.omega[l];
    }
    let rhs = tr.sub.x.dot(&scaled);
    tr.ctx.xxt_factor.solve(&rhs)
}

/// φ(γ) = f̃(h(γ)).
pub fn phi_objective(gamma: ArrayView1<f64>, tr: &DualTransform) -> f64 {
    let chi = h_map(gamma, tr);
    chi_objective(chi.view(), tr.sub)
}

/// ∇φ(γ) = K (δ(h(γ)) + γ) with K = X̃X̃ᵀ.
pub fn phi_gradient(gamma: ArrayView1<f64>, tr: &DualTransform) -> Array1<f64> {
    let chi = h_map(gamma, tr);
    let delta = logistic_residuals(chi.view(), tr.sub);
    let inner = &delta + &gamma;
    tr.ctx.k.dot(&inner)
}

/// ∇²φ(γ) = K W² K + K, the chain rule applied to f̃ ∘ h. (The curvature
/// of the quadratic part of f̃ collapses to the constant K because h's
/// Jacobian is D⁻¹Xᵀ with D = diag(λ₂+ρ).)
pub fn phi_hessian(gamma: ArrayView1<f64>, tr: &DualTransform) -> Array2<f64> {
    let chi = h_map(gamma, tr);
    let w2 = logistic_weights_sq(chi.view(), tr.sub);
    let mut scaled = tr.ctx.k.clone();
    for (i, mut row) in scaled.rows_mut().into_iter().enumerate() {
        row *= w2[i];
    }
    let mut h = tr.ctx.k.dot(&scaled);
    h += &tr.ctx.k;
    h
}

/// Which space the Newton iteration runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonRoute {
    Primal,
    Dual,
}

/// Newton loop controls, usually sourced from `PenaltyConfig`.
#[derive(Debug, Clone, Copy)]
pub struct NewtonSettings {
    /// Stop when ‖∇f̃(χ)‖ ≤ tol · (1 + ‖χ‖).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            tol: 1e-8,
            max_iter: 50,
        }
    }
}

const LINE_SEARCH_DECREASE: f64 = 1e-4;
const LINE_SEARCH_SHRINK: f64 = 0.5;
const LINE_SEARCH_MAX_BACKTRACKS: usize = 50;

/// Result of one subproblem solve. `objective_trace` holds f̃ at the start
/// of each Newton iteration plus the final value; it is non-increasing by
/// the line-search contract.
#[derive(Debug, Clone)]
pub struct ChiSolve {
    pub chi: Array1<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub route: NewtonRoute,
}

/// Reusable per-fit solver: fixes the route once (dual iff n < d and XXᵀ
/// factorizes) and keeps the dual context alive across columns and outer
/// iterations.
pub struct ChiSolver {
    route: NewtonRoute,
    dual_ctx: Option<DualContext>,
    pub jittered: bool,
}

impl ChiSolver {
    pub fn new(x: &Array2<f64>, lambda2: &Array1<f64>, rho: f64) -> Self {
        let n = x.nrows();
        let d = x.ncols().saturating_sub(1);
        if n < d {
            match DualContext::new(x, lambda2, rho) {
                Ok(ctx) => {
                    let jittered = ctx.jittered;
                    return ChiSolver {
                        route: NewtonRoute::Dual,
                        dual_ctx: Some(ctx),
                        jittered,
                    };
                }
                Err(_) => {}
            }
        }
        ChiSolver {
            route: NewtonRoute::Primal,
            dual_ctx: None,
            jittered: false,
        }
    }

    pub fn route(&self) -> NewtonRoute {
        self.route
    }

    pub fn solve(
        &self,
        sub: &ChiSubproblem,
        warm: Option<ArrayView1<f64>>,
        settings: NewtonSettings,
    ) -> Result<ChiSolve> {
        match self.route {
            NewtonRoute::Primal => solve_primal(sub, warm, settings),
            NewtonRoute::Dual => solve_dual(sub, self.dual_ctx.as_ref().unwrap(), warm, settings),
        }
    }
}

/// One-off solve with automatic route selection.
pub fn solve_chi_column(
    sub: &ChiSubproblem,
    warm: Option<ArrayView1<f64>>,
    settings: NewtonSettings,
) -> Result<ChiSolve> {
    let solver = ChiSolver::new(sub.x, sub.lambda2, sub.rho);
    solver.solve(sub, warm, settings)
}

/// Solve with a forced route; the dual route builds its context on the fly.
pub fn solve_chi_with_route(
    sub: &ChiSubproblem,
    warm: Option<ArrayView1<f64>>,
    settings: NewtonSettings,
    route: NewtonRoute,
) -> Result<ChiSolve> {
    match route {
        NewtonRoute::Primal => solve_primal(sub, warm, settings),
        NewtonRoute::Dual => {
            let ctx = DualContext::new(sub.x, sub.lambda2, sub.rho)?;
            solve_dual(sub, &ctx, warm, settings)
        }
    }
}

fn solve_primal(
    sub: &ChiSubproblem,
    warm: Option<ArrayView1<f64>>,
    settings: NewtonSettings,
) -> Result<ChiSolve> {
    let p = sub.n_params();
    let mut chi = match warm {
        Some(w) => {
            debug_assert_eq!(w.len(), p);
            w.to_owned()
        }
        None => Array1::zeros(p),
    };
    let mut trace = Vec::with_capacity(settings.max_iter + 1);
    let mut converged = false;
    let mut iterations = 0;
    let mut f = chi_objective(chi.view(), sub);
    trace.push(f);
    for _ in 0..settings.max_iter {
        let grad = chi_gradient(chi.view(), sub);
        let gnorm = norm2(grad.view());
        if gnorm <= settings.tol * (1.0 + norm2(chi.view())) {
            converged = true;
            break;
        }
        let hess = chi_hessian(chi.view(), sub);
        let factor = CholeskyFactor::decompose_with_jitter(&hess, 2)?;
        let step = factor.solve(&grad);
        let slope: f64 = -grad.dot(&step);
        let (next, f_next, ok) = backtrack(|c| chi_objective(c, sub), &chi, &step, f, slope);
        iterations += 1;
        if !ok {
            break;
        }
        chi = next;
        f = f_next;
        trace.push(f);
        if !f.is_finite() {
            return Err(Error::NonFinite("Newton objective became non-finite".into()));
        }
    }
    if !converged {
        let grad = chi_gradient(chi.view(), sub);
        converged = norm2(grad.view()) <= settings.tol * (1.0 + norm2(chi.view()));
    }
    Ok(ChiSolve {
        chi,
        converged,
        iterations,
        objective_trace: trace,
        route: NewtonRoute::Primal,
    })
}

fn solve_dual(
    sub: &ChiSubproblem,
    ctx: &DualContext,
    warm: Option<ArrayView1<f64>>,
    settings: NewtonSettings,
) -> Result<ChiSolve> {
    let tr = DualTransform::new(ctx, sub);
    let mut gamma = match warm {
        Some(w) => {
            debug_assert_eq!(w.len(), sub.n_params());
            h_inverse(w, &tr)
        }
        None => Array1::zeros(sub.n()),
    };
    let mut trace = Vec::with_capacity(settings.max_iter + 1);
    let mut converged = false;
    let mut iterations = 0;
    let mut f = phi_objective(gamma.view(), &tr);
    trace.push(f);
    for _ in 0..settings.max_iter {
        // The stopping test runs on the primal gradient at h(γ) so both
        // routes honor the same contract.
        let chi = h_map(gamma.view(), &tr);
        let pgrad = chi_gradient(chi.view(), sub);
        if norm2(pgrad.view()) <= settings.tol * (1.0 + norm2(chi.view())) {
            converged = true;
            break;
        }
        let grad = phi_gradient(gamma.view(), &tr);
        let hess = phi_hessian(gamma.view(), &tr);
        let factor = CholeskyFactor::decompose_with_jitter(&hess, 2)?;
        let step = factor.solve(&grad);
        let slope: f64 = -grad.dot(&step);
        let (next, f_next, ok) = backtrack(|g| phi_objective(g, &tr), &gamma, &step, f, slope);
        iterations += 1;
        if !ok {
            break;
        }
        gamma = next;
        f = f_next;
        trace.push(f);
        if !f.is_finite() {
            return Err(Error::NonFinite("Newton objective became non-finite".into()));
        }
    }
    let chi = h_map(gamma.view(), &tr);
    if !converged {
        let pgrad = chi_gradient(chi.view(), sub);
        converged = norm2(pgrad.view()) <= settings.tol * (1.0 + norm2(chi.view()));
    }
    Ok(ChiSolve {
        chi,
        converged,
        iterations,
        objective_trace: trace,
        route: NewtonRoute::Dual,
    })
}

/// Armijo backtracking along the Newton direction -step. Returns the new
/// point, its objective, and whether sufficient decrease was achieved.
fn backtrack<F: Fn(ArrayView1<f64>) -> f64>(
    f: F,
    x: &Array1<f64>,
    step: &Array1<f64>,
    fx: f64,
    slope: f64,
) -> (Array1<f64>, f64, bool) {
    let mut t = 1.0;
    for _ in 0..=LINE_SEARCH_MAX_BACKTRACKS {
        let candidate = x - &(step * t);
        let fc = f(candidate.view());
        if fc <= fx + LINE_SEARCH_DECREASE * t * slope {
            return (candidate, fc, true);
        }
        t *= LINE_SEARCH_SHRINK;
    }
    (x.clone(), fx, false)
}

fn norm2(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}
