//! The three solver families and what they share: run reports, termination
//! reasons and the cooperative wall-clock budget.

pub mod ding;
pub mod mirzal;
pub mod pg;

use std::fmt;
use std::time::Duration;

#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;
#[cfg(target_arch = "wasm32")]
use web_time::Instant;

use ndarray::Array2;

use crate::error::Error;
use crate::model::{objective_unchecked, FactorPair, ProblemSpec};

pub use ding::{solve_ding, DingConfig};
pub use mirzal::{solve_mirzal, MirzalConfig};
pub use pg::{solve_pg, PgConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    /// Stationarity test met (projected-gradient methods).
    Tolerance,
    /// Relative change of the monitored quantity fell below the stall tolerance.
    Stall,
    MaxIters,
    TimeLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Tolerance => "tolerance",
            Termination::Stall => "stall",
            Termination::MaxIters => "max_iters",
            Termination::TimeLimit => "time_limit",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "tolerance" => Ok(Termination::Tolerance),
            "stall" => Ok(Termination::Stall),
            "max_iters" => Ok(Termination::MaxIters),
            "time_limit" => Ok(Termination::TimeLimit),
            other => Err(Error::Parameter(format!("unknown termination {other:?}"))),
        }
    }
}

/// Metrics of one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub rse: f64,
    pub infeas: f64,
    /// Penalized objective under the run's α and β.
    pub objective: f64,
}

impl TracePoint {
    pub(crate) fn measure(spec: &ProblemSpec, g: &Array2<f64>, h: &Array2<f64>) -> Self {
        let (rse, infeas) = spec.metrics(g, h);
        Self {
            rse,
            infeas,
            objective: objective_unchecked(spec, g, h),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub factors: FactorPair,
    /// One point per iterate, the initial one included.
    pub trace: Vec<TracePoint>,
    pub iters: usize,
    pub wall_seconds: f64,
    pub termination: Termination,
    /// Inner loops that hit their cap without meeting their acceptance test
    /// (δ-growth tries for the MAU rules, step-size trials for PG).
    pub inner_limit_hits: usize,
}

impl SolveReport {
    pub fn final_point(&self) -> TracePoint {
        *self.trace.last().expect("trace holds the initial point")
    }

    pub fn final_rse(&self) -> f64 {
        self.final_point().rse
    }

    pub fn final_infeas(&self) -> f64 {
        self.final_point().infeas
    }
}

/// Cooperative wall-clock limit, checked between iterations.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Budget {
    start: Instant,
    limit: Option<Duration>,
}

impl Budget {
    pub(crate) fn start(limit_seconds: f64) -> Self {
        let limit = (limit_seconds.is_finite() && limit_seconds >= 0.0)
            .then(|| Duration::from_secs_f64(limit_seconds));
        Self {
            start: Instant::now(),
            limit,
        }
    }

    pub(crate) fn expired(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }

    pub(crate) fn elapsed_seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// `|now − prev| ≤ tol · max(1, |prev|)`
pub(crate) fn stalled(prev: f64, now: f64, tol: f64) -> bool {
    (now - prev).abs() <= tol * prev.abs().max(1.0)
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<(), Error> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {v} must be finite and > 0")))
    }
}

pub(crate) fn check_unit_open(name: &str, v: f64) -> Result<(), Error> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {v} must lie in (0, 1)")))
    }
}
