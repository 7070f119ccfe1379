//! Multiplicative updates for orthogonal NMF.
//!
//! `G ← G ∘ sqrt(RHᵀ ⊘ (GGᵀRHᵀ + δ))`, then with the new `G` either
//! `H ← H ∘ sqrt(GᵀR ⊘ (GᵀRHᵀH + δ))` (both factors orthogonal) or
//! `H ← H ∘ sqrt(GᵀR ⊘ (GᵀGH + δ))` (only `G` orthogonal).

use ndarray::{Array2, Zip};

use super::{check_positive, stalled, Budget, SolveReport, Termination, TracePoint};
use crate::error::{Error, Result};
use crate::model::{FactorPair, Orthogonality, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct DingConfig {
    /// Added to every denominator.
    pub delta: f64,
    pub max_iters: usize,
    pub time_limit: f64,
    /// Relative RSE change at or below which the run counts as converged.
    pub rse_stall_tol: f64,
}

impl Default for DingConfig {
    fn default() -> Self {
        Self {
            delta: 1e-9,
            max_iters: 5000,
            time_limit: 60.0,
            rse_stall_tol: 1e-8,
        }
    }
}

impl DingConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("delta", self.delta)?;
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be positive".into()));
        }
        if self.rse_stall_tol.is_nan() || self.rse_stall_tol < 0.0 {
            return Err(Error::Parameter("rse_stall_tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// `x ∘ sqrt(num ⊘ (den + δ))`, in place.
fn sqrt_ratio_update(x: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>, delta: f64) -> Result<()> {
    let mut bad = None;
    Zip::indexed(x).and(num).and(den).for_each(|(i, j), x, &a, &b| {
        let ratio = a / (b + delta);
        if ratio < 0.0 {
            bad.get_or_insert((i, j));
        } else {
            *x *= ratio.sqrt();
        }
    });
    match bad {
        Some((row, col)) => Err(Error::NegativeRadicand { row, col }),
        None => Ok(()),
    }
}

fn update_g(r: &Array2<f64>, g: &Array2<f64>, h: &Array2<f64>, delta: f64) -> Result<Array2<f64>> {
    let rht = r.dot(&h.t());
    let den = g.dot(&g.t().dot(&rht));
    let mut out = g.clone();
    sqrt_ratio_update(&mut out, &rht, &den, delta)?;
    Ok(out)
}

fn check_shapes(r: &Array2<f64>, g: &Array2<f64>, h: &Array2<f64>) -> Result<()> {
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

/// One sweep for the bi-orthogonal problem: `G` first, then `H` using the new `G`.
pub fn ding_step_bi(
    r: &Array2<f64>,
    g: &Array2<f64>,
    h: &Array2<f64>,
    delta: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_shapes(r, g, h)?;
    let g_new = update_g(r, g, h, delta)?;
    let gtr = g_new.t().dot(r);
    let den = gtr.dot(&h.t()).dot(h);
    let mut h_new = h.clone();
    sqrt_ratio_update(&mut h_new, &gtr, &den, delta)?;
    Ok((g_new, h_new))
}

/// One sweep for the uni-orthogonal problem; the `G` rule is unchanged.
pub fn ding_step_uni(
    r: &Array2<f64>,
    g: &Array2<f64>,
    h: &Array2<f64>,
    delta: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_shapes(r, g, h)?;
    let g_new = update_g(r, g, h, delta)?;
    let gtr = g_new.t().dot(r);
    let den = g_new.t().dot(&g_new).dot(h);
    let mut h_new = h.clone();
    sqrt_ratio_update(&mut h_new, &gtr, &den, delta)?;
    Ok((g_new, h_new))
}

pub fn solve_ding(spec: &ProblemSpec, cfg: &DingConfig, init: FactorPair) -> Result<SolveReport> {
    cfg.validate()?;
    spec.check(&init)?;
    let budget = Budget::start(cfg.time_limit);
    let step = match spec.mode() {
        Orthogonality::Uni => ding_step_uni,
        Orthogonality::Bi => ding_step_bi,
    };
    let FactorPair { mut g, mut h } = init;
    let mut trace = vec![TracePoint::measure(spec, &g, &h)];
    let mut iters = 0;
    let termination = loop {
        if iters >= cfg.max_iters {
            break Termination::MaxIters;
        }
        if budget.expired() {
            break Termination::TimeLimit;
        }
        (g, h) = step(spec.r(), &g, &h, cfg.delta)?;
        iters += 1;
        let point = TracePoint::measure(spec, &g, &h);
        let prev = trace.last().expect("non-empty").rse;
        trace.push(point);
        if stalled(prev, point.rse, cfg.rse_stall_tol) {
            break Termination::Stall;
        }
    };
    Ok(SolveReport {
        factors: FactorPair { g, h },
        trace,
        iters,
        wall_seconds: budget.elapsed_seconds(),
        termination,
        inner_limit_hits: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_instance, InstanceKind};
    use crate::model::NonNegMatrix;
    use crate::rng::random_init;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    const DELTA: f64 = 1e-9;

    #[test]
    fn identity_is_near_fixed_point() {
        let i = Array2::<f64>::eye(2);
        let (g, h) = ding_step_bi(&i, &i, &i, DELTA).unwrap();
        let d = (1.0 / (1.0 + DELTA)).sqrt();
        assert_abs_diff_eq!(g, &i * d, epsilon = 1e-15);
        assert_eq!(g[[0, 1]], 0.0);
        assert_abs_diff_eq!(h, i.clone(), epsilon = 1e-8);

        let (g, h) = ding_step_uni(&i, &i, &i, DELTA).unwrap();
        assert_abs_diff_eq!(g, i.clone(), epsilon = 1e-8);
        assert_abs_diff_eq!(h, i, epsilon = 1e-8);
    }

    #[test]
    fn zeros_stay_zero() {
        let r = array![[1.0, 0.5, 0.2], [0.3, 0.9, 0.4], [0.6, 0.1, 0.8]];
        let g = array![[0.0, 0.0], [0.5, 0.2], [0.3, 0.7]];
        let h = array![[0.4, 0.0, 0.6], [0.2, 0.9, 0.3]];
        for step in [ding_step_bi, ding_step_uni] {
            let (g2, h2) = step(&r, &g, &h, DELTA).unwrap();
            assert_eq!(g2.row(0).to_vec(), vec![0.0, 0.0]);
            assert_eq!(h2[[0, 1]], 0.0);
            assert!(g2.iter().chain(h2.iter()).all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn negative_input_is_rejected() {
        // Numerator negative, denominator lifted above zero by δ.
        let r = array![[-1e-12]];
        let one = array![[1.0]];
        assert!(matches!(
            ding_step_bi(&r, &one, &one, DELTA),
            Err(Error::NegativeRadicand { .. })
        ));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let r = Array2::<f64>::eye(3);
        assert!(ding_step_uni(&r, &Array2::eye(2), &Array2::eye(2), DELTA).is_err());
    }

    #[test]
    fn residual_monotone_on_small_bion() {
        let t = generate_instance(6, 3, InstanceKind::Bion, 1, 8).unwrap();
        let r = t.r.as_array();
        let FactorPair { mut g, mut h } = random_init(6, 2, 6, 3);
        let mut prev = f64::INFINITY;
        for _ in 0..50 {
            (g, h) = ding_step_bi(r, &g, &h, DELTA).unwrap();
            let f = 0.5 * (r - &g.dot(&h)).mapv(|v| v * v).sum();
            assert!(f <= prev + 1e-12, "{f} > {prev}");
            prev = f;
        }
    }

    #[test]
    fn exact_start_stops_immediately() {
        let t = generate_instance(20, 4, InstanceKind::Bion, 1, 2).unwrap();
        let spec = ProblemSpec::new(t.r.clone(), 4, Orthogonality::Bi, 0.0, 0.0).unwrap();
        let init = FactorPair::new(t.g_true.clone(), t.h_true.clone()).unwrap();
        let report = solve_ding(&spec, &DingConfig::default(), init).unwrap();
        assert_eq!(report.termination, Termination::Stall);
        assert!(report.iters <= 2);
        assert!(report.final_rse() < 1e-8);
        assert_eq!(report.trace.len(), report.iters + 1);
    }

    #[test]
    fn report_respects_iteration_cap() {
        let r = NonNegMatrix::new(array![[1.0, 0.2], [0.3, 0.8]]).unwrap();
        let spec = ProblemSpec::new(r, 1, Orthogonality::Uni, 0.0, 0.0).unwrap();
        let cfg = DingConfig {
            max_iters: 3,
            rse_stall_tol: 0.0,
            ..DingConfig::default()
        };
        let report = solve_ding(&spec, &cfg, random_init(2, 1, 2, 0)).unwrap();
        assert_eq!(report.iters, 3);
        assert_eq!(report.trace.len(), 4);
        assert_eq!(report.termination, Termination::MaxIters);
    }
}
