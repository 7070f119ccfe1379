//! Modified additive updates with zero-locking guards.
//!
//! Each block update is
//!
//! ```text
//! g'_ij = g_ij − ḡ_ij ∇_G F_ij / ((ḠHHᵀ + βḠḠᵀḠ)_ij + δ_G)
//! h'_st = h_st − h̄_st ∇_H F_st / ((GᵀGH̄ + αH̄H̄ᵀH̄)_st + δ_H)
//! ```
//!
//! where the barred factor lifts entries with a negative gradient to at least
//! `ν`. If the objective went up, `δ` is multiplied by `step` and the update
//! is recomputed from the same point.

use ndarray::{Array2, Zip};

use super::{check_positive, stalled, Budget, SolveReport, Termination, TracePoint};
use crate::error::{Error, Result};
use crate::model::{
    frobenius_sq, g_penalty, grad_g_unchecked, grad_h_unchecked, h_penalty, FactorPair, ProblemSpec,
};

#[derive(Debug, Clone, PartialEq)]
pub struct MirzalConfig {
    pub delta0: f64,
    /// Growth factor for δ when an update is rejected.
    pub step: f64,
    /// Zero-locking floor.
    pub nu: f64,
    pub max_outer_iters: usize,
    pub time_limit: f64,
    pub max_inner_tries: usize,
    /// Relative objective change treated as convergence.
    pub stall_tol: f64,
}

impl Default for MirzalConfig {
    fn default() -> Self {
        Self {
            delta0: 1e-9,
            step: 10.0,
            nu: 1e-8,
            max_outer_iters: 5000,
            time_limit: 60.0,
            max_inner_tries: 64,
            stall_tol: 1e-8,
        }
    }
}

impl MirzalConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("delta0", self.delta0)?;
        check_positive("nu", self.nu)?;
        if !(self.step > 1.0 && self.step.is_finite()) {
            return Err(Error::Parameter(format!("step = {} must be > 1", self.step)));
        }
        if self.max_outer_iters == 0 || self.max_inner_tries == 0 {
            return Err(Error::Parameter("iteration caps must be positive".into()));
        }
        if self.stall_tol.is_nan() || self.stall_tol < 0.0 {
            return Err(Error::Parameter("stall_tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// `m̄_ij = m_ij` where the gradient is `≥ 0`, else `max(m_ij, ν)`.
pub fn guard_factor(m: &Array2<f64>, grad: &Array2<f64>, nu: f64) -> Array2<f64> {
    let mut out = m.clone();
    Zip::from(&mut out).and(grad).for_each(|v, &d| {
        if d < 0.0 {
            *v = v.max(nu);
        }
    });
    out
}

/// Result of one guarded block update.
#[derive(Debug, Clone)]
pub struct MauUpdate {
    pub factor: Array2<f64>,
    /// The δ used by the returned candidate.
    pub delta_used: f64,
    pub tries: usize,
    /// False when `max_tries` ran out before the objective stopped increasing;
    /// the last candidate is returned regardless.
    pub accepted: bool,
}

/// `x − x̄ ∘ grad ⊘ (den + δ)`, clamped at zero.
fn mau_candidate(x: &Array2<f64>, guarded: &Array2<f64>, grad: &Array2<f64>, den: &Array2<f64>, delta: f64) -> Array2<f64> {
    let mut out = x.clone();
    Zip::from(&mut out)
        .and(guarded)
        .and(grad)
        .and(den)
        .for_each(|v, &b, &d, &q| {
            let next = *v - b * d / (q + delta);
            *v = if next > 0.0 { next } else { 0.0 };
        });
    out
}

#[allow(clippy::too_many_arguments)]
fn grow_until_decrease(
    x: &Array2<f64>,
    guarded: &Array2<f64>,
    grad: &Array2<f64>,
    den: &Array2<f64>,
    delta0: f64,
    step: f64,
    max_tries: usize,
    objective: impl Fn(&Array2<f64>) -> f64,
) -> MauUpdate {
    let before = objective(x);
    let mut delta = delta0;
    let mut tries = 0;
    loop {
        let candidate = mau_candidate(x, guarded, grad, den, delta);
        tries += 1;
        let accepted = objective(&candidate) <= before;
        if accepted || tries >= max_tries {
            return MauUpdate {
                factor: candidate,
                delta_used: delta,
                tries,
                accepted,
            };
        }
        delta *= step;
    }
}

fn residual_sq(r: &Array2<f64>, g: &Array2<f64>, h: &Array2<f64>) -> f64 {
    frobenius_sq(&(r - &g.dot(h)))
}

/// Guarded update of `G` with `H` fixed.
#[allow(clippy::too_many_arguments)]
pub fn mirzal_update_g(
    r: &Array2<f64>,
    g: &Array2<f64>,
    h: &Array2<f64>,
    beta: f64,
    nu: f64,
    delta0: f64,
    step: f64,
    max_tries: usize,
) -> MauUpdate {
    let grad = grad_g_unchecked(r, g, h, beta);
    let gb = guard_factor(g, &grad, nu);
    let mut den = gb.dot(&h.dot(&h.t()));
    if beta != 0.0 {
        den.scaled_add(beta, &gb.dot(&gb.t().dot(&gb)));
    }
    // Terms of F that do not involve G cancel in the comparison.
    grow_until_decrease(g, &gb, &grad, &den, delta0, step, max_tries, |x| {
        0.5 * residual_sq(r, x, h) + g_penalty(x, beta)
    })
}

/// Guarded update of `H` with `G` fixed.
#[allow(clippy::too_many_arguments)]
pub fn mirzal_update_h(
    r: &Array2<f64>,
    g: &Array2<f64>,
    h: &Array2<f64>,
    alpha: f64,
    nu: f64,
    delta0: f64,
    step: f64,
    max_tries: usize,
) -> MauUpdate {
    let grad = grad_h_unchecked(r, g, h, alpha);
    let hb = guard_factor(h, &grad, nu);
    let mut den = g.t().dot(g).dot(&hb);
    if alpha != 0.0 {
        den.scaled_add(alpha, &hb.dot(&hb.t()).dot(&hb));
    }
    grow_until_decrease(h, &hb, &grad, &den, delta0, step, max_tries, |x| {
        0.5 * residual_sq(r, g, x) + h_penalty(x, alpha)
    })
}

pub fn solve_mirzal(spec: &ProblemSpec, cfg: &MirzalConfig, init: FactorPair) -> Result<SolveReport> {
    cfg.validate()?;
    spec.check(&init)?;
    let budget = Budget::start(cfg.time_limit);
    let FactorPair { mut g, mut h } = init;
    let mut trace = vec![TracePoint::measure(spec, &g, &h)];
    let mut inner_limit_hits = 0;
    let mut iters = 0;
    let termination = loop {
        if iters >= cfg.max_outer_iters {
            break Termination::MaxIters;
        }
        if budget.expired() {
            break Termination::TimeLimit;
        }
        let gu = mirzal_update_g(
            spec.r(),
            &g,
            &h,
            spec.beta(),
            cfg.nu,
            cfg.delta0,
            cfg.step,
            cfg.max_inner_tries,
        );
        g = gu.factor;
        let hu = mirzal_update_h(
            spec.r(),
            &g,
            &h,
            spec.alpha(),
            cfg.nu,
            cfg.delta0,
            cfg.step,
            cfg.max_inner_tries,
        );
        h = hu.factor;
        inner_limit_hits += usize::from(!gu.accepted) + usize::from(!hu.accepted);
        iters += 1;
        let point = TracePoint::measure(spec, &g, &h);
        let prev = trace.last().expect("non-empty").objective;
        trace.push(point);
        if stalled(prev, point.objective, cfg.stall_tol) {
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
