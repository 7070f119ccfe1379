//! Block coordinate descent on the penalized objective. Each block
//! (`G` with `H` fixed, then `H` with the new `G` fixed) is improved by
//! projected gradient steps whose length is chosen by an Armijo search.
//!
//! Block objectives:
//!
//! ```text
//! F_H(G) = ½‖R − GH‖²_F + (β/4)‖GᵀG − I‖²_F
//! F_G(H) = ½‖R − GH‖²_F + (α/4)‖HHᵀ − I‖²_F
//! ```
//!
//! A trial point `X_λ = P[X − λ∇F(X)]` is accepted when
//! `F(X_λ) − F(X) ≤ σ⟨∇F(X), X_λ − X⟩`. The search starts at `λ = 1`; if that
//! passes, `λ` is divided by `γ` while the test keeps passing and the trial
//! point keeps changing, otherwise `λ` is multiplied by `γ` until it passes.
//!
//! The outer loop stops once `‖∇ᴾF(G, H)‖_F ≤ ε‖∇F(G⁰, H⁰)‖_F`. Block
//! tolerances start at `max(1e-7, ε)‖∇F(G⁰, H⁰)‖_F` and shrink by `τ`
//! whenever a block solve finds its start point already within tolerance.

use ndarray::{Array2, Zip};

use super::{check_positive, check_unit_open, Budget, SolveReport, Termination, TracePoint};
use crate::error::{Error, Result};
use crate::model::{
    frobenius_norm, frobenius_sq, g_penalty, grad_g_unchecked, grad_h_unchecked, h_penalty, FactorPair, ProblemSpec,
};

/// Smallest and largest step lengths tried.
pub const LAMBDA_MIN: f64 = 1e-20;
pub const LAMBDA_MAX: f64 = 1e20;

#[derive(Debug, Clone, PartialEq)]
pub struct PgConfig {
    /// Armijo sufficient-decrease parameter.
    pub sigma: f64,
    /// Step-length update factor.
    pub gamma: f64,
    /// Shrink factor for block tolerances.
    pub tau: f64,
    /// Global relative tolerance.
    pub epsilon: f64,
    pub max_outer_iters: usize,
    /// Projected gradient steps per block solve.
    pub max_inner_iters: usize,
    /// Step-length trials per projected gradient step.
    pub max_step_trials: usize,
    pub time_limit: f64,
}

impl PgConfig {
    /// Settings used on uni-orthogonal data.
    pub fn union() -> Self {
        Self {
            sigma: 0.001,
            gamma: 0.1,
            tau: 0.1,
            epsilon: 1e-10,
            max_outer_iters: 1000,
            max_inner_iters: 20,
            max_step_trials: 50,
            time_limit: 60.0,
        }
    }

    /// Settings used on bi-orthogonal data.
    pub fn bion() -> Self {
        Self {
            gamma: 0.75,
            tau: 0.5,
            ..Self::union()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_open("sigma", self.sigma)?;
        check_unit_open("gamma", self.gamma)?;
        check_unit_open("tau", self.tau)?;
        check_positive("epsilon", self.epsilon)?;
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 || self.max_step_trials == 0 {
            return Err(Error::Parameter("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

impl Default for PgConfig {
    fn default() -> Self {
        Self::union()
    }
}

/// `∇ᴾf(x)_i = ∇f(x)_i` if `x_i > 0`, `min(0, ∇f(x)_i)` if `x_i = 0`.
pub fn projected_gradient(x: &Array2<f64>, grad: &Array2<f64>) -> Array2<f64> {
    let mut out = grad.clone();
    Zip::from(&mut out).and(x).for_each(|d, &v| {
        if v <= 0.0 {
            *d = d.min(0.0);
        }
    });
    out
}

fn projected_gradient_sq(x: &Array2<f64>, grad: &Array2<f64>) -> f64 {
    let mut acc = 0.0;
    Zip::from(x).and(grad).for_each(|&v, &d| {
        let p = if v > 0.0 { d } else { d.min(0.0) };
        acc += p * p;
    });
    acc
}

/// Entrywise `max(x, 0)`.
pub fn project_nonneg(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| if v > 0.0 { v } else { 0.0 })
}

/// A smooth function of one non-negative matrix block.
pub trait BlockObjective {
    fn value(&self, x: &Array2<f64>) -> f64;
    fn gradient(&self, x: &Array2<f64>) -> Array2<f64>;
}

/// `F_H(G)`: the `G` block with `H` held fixed.
pub struct GBlock<'a> {
    pub r: &'a Array2<f64>,
    pub h: &'a Array2<f64>,
    pub beta: f64,
}

impl BlockObjective for GBlock<'_> {
    fn value(&self, g: &Array2<f64>) -> f64 {
        0.5 * frobenius_sq(&(self.r - &g.dot(self.h))) + g_penalty(g, self.beta)
    }

    fn gradient(&self, g: &Array2<f64>) -> Array2<f64> {
        grad_g_unchecked(self.r, g, self.h, self.beta)
    }
}

/// `F_G(H)`: the `H` block with `G` held fixed.
pub struct HBlock<'a> {
    pub r: &'a Array2<f64>,
    pub g: &'a Array2<f64>,
    pub alpha: f64,
}

impl BlockObjective for HBlock<'_> {
    fn value(&self, h: &Array2<f64>) -> f64 {
        0.5 * frobenius_sq(&(self.r - &self.g.dot(h))) + h_penalty(h, self.alpha)
    }

    fn gradient(&self, h: &Array2<f64>) -> Array2<f64> {
        grad_h_unchecked(self.r, self.g, h, self.alpha)
    }
}

/// One accepted projected gradient step, for auditing the sufficient-decrease test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoStep {
    pub lambda: f64,
    pub f_before: f64,
    pub f_after: f64,
    /// `⟨∇F(X), X_λ − X⟩`
    pub directional: f64,
    pub sigma: f64,
}

impl ArmijoStep {
    /// `F(X_λ) − F(X) − σ⟨∇F(X), X_λ − X⟩`; non-positive for a valid step.
    pub fn armijo_gap(&self) -> f64 {
        (self.f_after - self.f_before) - self.sigma * self.directional
    }
}

#[derive(Debug, Clone)]
pub struct Subsolve {
    pub x: Array2<f64>,
    /// Accepted projected gradient steps.
    pub iters: usize,
    pub last_lambda: f64,
    /// True when the step search ran out of trials or left `[LAMBDA_MIN, LAMBDA_MAX]`
    /// without satisfying the Armijo test; `x` is then the last accepted iterate.
    pub stalled: bool,
}

pub fn armijo_pg_subsolve(obj: &impl BlockObjective, x0: Array2<f64>, cfg: &PgConfig, eps_sub: f64) -> Subsolve {
    armijo_pg_subsolve_observed(obj, x0, cfg, eps_sub, &mut |_| {})
}

/// Same as [`armijo_pg_subsolve`], reporting every accepted step to `observe`.
pub fn armijo_pg_subsolve_observed(
    obj: &impl BlockObjective,
    x0: Array2<f64>,
    cfg: &PgConfig,
    eps_sub: f64,
    observe: &mut dyn FnMut(&ArmijoStep),
) -> Subsolve {
    let mut x = x0;
    let mut iters = 0;
    let mut last_lambda = 1.0;
    let eps_sq = eps_sub * eps_sub;
    loop {
        let grad = obj.gradient(&x);
        if projected_gradient_sq(&x, &grad) <= eps_sq || iters >= cfg.max_inner_iters {
            break;
        }
        let fx = obj.value(&x);
        let Some((next, step)) = step_search(obj, &x, &grad, fx, cfg) else {
            return Subsolve {
                x,
                iters,
                last_lambda,
                stalled: true,
            };
        };
        observe(&step);
        last_lambda = step.lambda;
        x = next;
        iters += 1;
    }
    Subsolve {
        x,
        iters,
        last_lambda,
        stalled: false,
    }
}

struct Trial {
    x: Array2<f64>,
    f: f64,
    directional: f64,
}

fn trial(obj: &impl BlockObjective, x: &Array2<f64>, grad: &Array2<f64>, lambda: f64) -> Trial {
    let mut xl = x.clone();
    Zip::from(&mut xl).and(grad).for_each(|v, &d| {
        let next = *v - lambda * d;
        *v = if next > 0.0 { next } else { 0.0 };
    });
    let mut directional = 0.0;
    Zip::from(&xl).and(x).and(grad).for_each(|&a, &b, &d| directional += d * (a - b));
    Trial {
        f: obj.value(&xl),
        x: xl,
        directional,
    }
}

fn step_search(
    obj: &impl BlockObjective,
    x: &Array2<f64>,
    grad: &Array2<f64>,
    fx: f64,
    cfg: &PgConfig,
) -> Option<(Array2<f64>, ArmijoStep)> {
    let armijo = |t: &Trial| t.f - fx <= cfg.sigma * t.directional;
    let accept = |t: Trial, lambda: f64| {
        let step = ArmijoStep {
            lambda,
            f_before: fx,
            f_after: t.f,
            directional: t.directional,
            sigma: cfg.sigma,
        };
        Some((t.x, step))
    };

    let mut lambda = 1.0;
    let mut current = trial(obj, x, grad, lambda);
    let mut trials = 1;
    if armijo(&current) {
        loop {
            let bigger = lambda / cfg.gamma;
            if trials >= cfg.max_step_trials || bigger > LAMBDA_MAX {
                break;
            }
            let t = trial(obj, x, grad, bigger);
            trials += 1;
            if t.x == current.x || !armijo(&t) {
                break;
            }
            current = t;
            lambda = bigger;
        }
        accept(current, lambda)
    } else {
        loop {
            lambda *= cfg.gamma;
            if trials >= cfg.max_step_trials || lambda < LAMBDA_MIN {
                return None;
            }
            current = trial(obj, x, grad, lambda);
            trials += 1;
            if armijo(&current) {
                return accept(current, lambda);
            }
        }
    }
}

/// Concatenated gradient norms `(‖∇F‖_F, ‖∇ᴾF‖_F)` over both blocks.
fn gradient_norms(spec: &ProblemSpec, g: &Array2<f64>, h: &Array2<f64>) -> (f64, f64) {
    let gg = grad_g_unchecked(spec.r(), g, h, spec.beta());
    let gh = grad_h_unchecked(spec.r(), g, h, spec.alpha());
    let full = (frobenius_sq(&gg) + frobenius_sq(&gh)).sqrt();
    let projected = (projected_gradient_sq(g, &gg) + projected_gradient_sq(h, &gh)).sqrt();
    (full, projected)
}

/// Per-run event stream, for tests and diagnostics.
pub trait PgObserver {
    fn armijo_step(&mut self, _step: &ArmijoStep) {}
    fn outer_iteration(&mut self, _k: usize, _g: &Array2<f64>, _h: &Array2<f64>) {}
}

impl PgObserver for () {}

pub fn solve_pg(spec: &ProblemSpec, cfg: &PgConfig, init: FactorPair) -> Result<SolveReport> {
    solve_pg_observed(spec, cfg, init, &mut ())
}

pub fn solve_pg_observed(
    spec: &ProblemSpec,
    cfg: &PgConfig,
    init: FactorPair,
    observer: &mut dyn PgObserver,
) -> Result<SolveReport> {
    cfg.validate()?;
    spec.check(&init)?;
    let budget = Budget::start(cfg.time_limit);
    let FactorPair { mut g, mut h } = init;
    let (init_norm, _) = gradient_norms(spec, &g, &h);
    let mut eps_g = cfg.epsilon.max(1e-7) * init_norm;
    let mut eps_h = eps_g;
    // Rounding noise of the gradient; a start already at this level cannot
    // shrink it by a further factor of ε.
    let noise_floor = 64.0 * f64::EPSILON * (1.0 + frobenius_norm(spec.r()));
    let stop_at = (cfg.epsilon * init_norm).max(noise_floor);
    let mut trace = vec![TracePoint::measure(spec, &g, &h)];
    let mut inner_limit_hits = 0;
    let mut iters = 0;
    let termination = loop {
        let (_, pg_norm) = gradient_norms(spec, &g, &h);
        if pg_norm <= stop_at {
            break Termination::Tolerance;
        }
        if iters >= cfg.max_outer_iters {
            break Termination::MaxIters;
        }
        if budget.expired() {
            break Termination::TimeLimit;
        }

        let block = GBlock {
            r: spec.r(),
            h: &h,
            beta: spec.beta(),
        };
        let sg = armijo_pg_subsolve_observed(&block, g, cfg, eps_g, &mut |s| observer.armijo_step(s));
        g = sg.x;
        if sg.iters == 0 && !sg.stalled {
            eps_g *= cfg.tau;
        }

        let block = HBlock {
            r: spec.r(),
            g: &g,
            alpha: spec.alpha(),
        };
        let sh = armijo_pg_subsolve_observed(&block, h, cfg, eps_h, &mut |s| observer.armijo_step(s));
        h = sh.x;
        if sh.iters == 0 && !sh.stalled {
            eps_h *= cfg.tau;
        }

        inner_limit_hits += usize::from(sg.stalled) + usize::from(sh.stalled);
        iters += 1;
        observer.outer_iteration(iters, &g, &h);
        trace.push(TracePoint::measure(spec, &g, &h));
        // Neither block can find a decreasing step, or both are idle with
        // tolerances already at the global target.
        let idle = sg.iters == 0 && sh.iters == 0;
        if idle && ((sg.stalled && sh.stalled) || (eps_g <= stop_at && eps_h <= stop_at)) {
            break Termination::Stall;
        }
    };
    Ok(SolveReport {
        factors: FactorPair { g, h },
        trace,
        iters,
        wall_seconds: budget.elapsed_seconds(),
        termination,
        inner_limit_hits,
    })
}

/// `‖∇ᴾF(G, H)‖_F` of the penalized objective.
pub fn projected_gradient_norm(spec: &ProblemSpec, fp: &FactorPair) -> Result<f64> {
    spec.check(fp)?;
    Ok(gradient_norms(spec, &fp.g, &fp.h).1)
}
