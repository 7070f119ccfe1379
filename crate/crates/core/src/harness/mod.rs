//! Experiment driver: algorithm dispatch, solver settings with config-file
//! overrides, grid sweeps and CSV / plot-data output.

mod grid;
mod records;
mod report;
mod settings;

use std::fmt;

pub use grid::{generate_dataset, run_benchmark, Cell, ExperimentGrid, InstanceSource};
pub use records::{
    aggregate, read_raw_csv, write_aggregate_csv, write_raw_csv, write_wide_tables, Aggregate, RawRow,
    CSV_VERSION_LINE,
};
pub use report::write_plot_data;
pub use settings::{ConfigOverrides, SolverSettings};

use crate::datagen::InstanceKind;
use crate::error::{Error, Result};
use crate::model::{FactorPair, Orthogonality, ProblemSpec};
use crate::solver::{solve_ding, solve_mirzal, solve_pg, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Ding,
    Mirzal,
    Pg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ding, Algorithm::Mirzal, Algorithm::Pg];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ding => "ding",
            Algorithm::Mirzal => "mirzal",
            Algorithm::Pg => "pg",
        }
    }

    /// Whether the method has penalty parameters to sweep.
    pub fn is_penalized(self) -> bool {
        !matches!(self, Algorithm::Ding)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ding" => Ok(Algorithm::Ding),
            "mirzal" => Ok(Algorithm::Mirzal),
            "pg" => Ok(Algorithm::Pg),
            other => Err(Error::Parameter(format!(
                "unknown algorithm {other:?} (expected ding, mirzal or pg)"
            ))),
        }
    }
}

pub fn orthogonality_for(kind: InstanceKind) -> Orthogonality {
    match kind {
        InstanceKind::Union => Orthogonality::Uni,
        InstanceKind::Bion => Orthogonality::Bi,
    }
}

/// Runs `alg` on `spec` from `init` with the kind-specific settings.
pub fn run_solve(
    alg: Algorithm,
    spec: &ProblemSpec,
    kind: InstanceKind,
    settings: &SolverSettings,
    init: FactorPair,
) -> Result<SolveReport> {
    match alg {
        Algorithm::Ding => solve_ding(spec, &settings.ding, init),
        Algorithm::Mirzal => solve_mirzal(spec, &settings.mirzal, init),
        Algorithm::Pg => solve_pg(spec, settings.pg(kind), init),
    }
}
